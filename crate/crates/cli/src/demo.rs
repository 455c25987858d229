use oframe_core::frames::{build_oframe, shrinking_profile, telescope, ProfileOptions};
use oframe_core::{BoundCheck, Functional, MatOperator, OFrame, SpaceSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use crate::args::{Demo, RunConfig};
use crate::commands::{build_options, gaussian, haar_constants};
use crate::report::{Output, Row};
use crate::CliError;

pub fn run(which: &Demo, cfg: &RunConfig) -> Result<Output, CliError> {
    match which {
        Demo::HaarGrowth { levels } => haar_growth(*levels, cfg),
        Demo::Shrinking { max_size } => shrinking(*max_size, cfg),
        Demo::Stress { count } => stress(*count, cfg),
    }
}

fn haar_growth(levels: u32, cfg: &RunConfig) -> Result<Output, CliError> {
    if levels == 0 {
        return Err(CliError::Input("--levels must be at least 1".into()));
    }
    let l1 = haar_constants(levels, 1.0, cfg)?;
    let l2 = haar_constants(levels, 2.0, cfg)?;
    let mut checks = Vec::new();
    for w in l1.windows(2) {
        checks.push(BoundCheck::at_least(format!("L1 constant at level {} >= level {}", w[1].0, w[0].0), w[1].1, w[0].1));
    }
    for (l, v, _) in &l2 {
        checks.push(BoundCheck::at_most(format!("L2 constant at level {l} <= 1"), *v, 1.0 + cfg.tol));
    }
    let rows = l1.iter().map(|(l, v, c)| Row::value(*l as usize, *v, *c)).collect();
    Ok(Output {
        outputs: json!({
            "l1": l1.iter().map(|(l, v, c)| json!({ "level": l, "value": v, "certified": c })).collect::<Vec<_>>(),
            "l2": l2.iter().map(|(l, v, c)| json!({ "level": l, "value": v, "certified": c })).collect::<Vec<_>>(),
            "growth": l1.last().unwrap().1 / l1[0].1,
        }),
        checks,
        rows,
    })
}

/// `ℓ1` basis tails stay at one, `ℓ2` tails against a fixed functional vanish
/// past its support.
fn shrinking(max_size: usize, cfg: &RunConfig) -> Result<Output, CliError> {
    if max_size < 4 {
        return Err(CliError::Input("--max-size must be at least 4".into()));
    }
    let opts = ProfileOptions { samples: cfg.samples, seed: cfg.seed, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for n in 4..=max_size {
        let p1 = shrinking_profile(&OFrame::basis(SpaceSpec::lp(1.0, n)?), None, &opts)?;
        let l1_min = p1.values[..n].iter().copied().fold(f64::INFINITY, f64::min);
        let s2 = SpaceSpec::lp(2.0, n)?;
        let mut c = w.clone();
        c.resize(n, 0.0);
        let phi = Functional::from_slice(s2, &c)?;
        let p2 = shrinking_profile(&OFrame::basis(s2), Some(&[phi]), &opts)?;
        let l2_tail = p2.values[4..].iter().copied().fold(0.0, f64::max);
        checks.push(BoundCheck::at_least(format!("l1 basis of size {n}: tails stay at 1"), l1_min, 1.0 - cfg.tol));
        checks.push(BoundCheck::at_most(format!("l2 basis of size {n}: tail past the support vanishes"), l2_tail, cfg.tol));
        rows.push(Row::value(n, l1_min, p1.exhaustive));
        table.push(json!({ "size": n, "l1_min_tail": l1_min, "l1_exhaustive": p1.exhaustive, "l2_tail_past_support": l2_tail, "l2_profile": p2.values }));
    }
    Ok(Output { outputs: json!({ "sizes": table }), checks, rows })
}

fn random_space(rng: &mut ChaCha8Rng, i: usize) -> Result<(SpaceSpec, SpaceSpec), CliError> {
    let mut d = || rng.random_range(2..=8usize);
    let (n, m) = (d(), d());
    let inf = f64::INFINITY;
    let (p, q) = [(1.0, 1.0), (1.0, 2.0), (2.0, inf), (inf, inf), (2.0, 2.0), (3.0, inf)][i % 6];
    Ok((SpaceSpec::lp(p, n)?, SpaceSpec::lp(q, m)?))
}

/// Random chains `S_N = T P_{d_N} + noise_N` ending at `T`.
fn stress(count: usize, cfg: &RunConfig) -> Result<Output, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..count {
        let (x, w) = random_space(&mut rng, i)?;
        let (n, m) = (x.dim(), w.dim());
        let t = MatOperator::new(x, w, gaussian(&mut rng, m, n))?;
        let len = rng.random_range(2..=5usize);
        let mut chain = Vec::with_capacity(len);
        for step in 1..len {
            let d = (step * n).div_ceil(len);
            let mut s = t.matrix.clone();
            for j in d..n {
                s.column_mut(j).fill(0.0);
            }
            s += gaussian(&mut rng, m, n) * (0.5 / step as f64);
            chain.push(MatOperator::new(x, w, s)?);
        }
        chain.push(t.clone());
        let tel = telescope(&chain, &t, cfg.allow_estimates)?;
        let r = build_oframe(&tel.blocks, &t, &build_options(cfg))?;
        let scale = r.k_input * (1.0 + r.gap);
        let ratio = if scale > 0.0 { r.frame_constant / scale } else { 0.0 };
        worst = worst.max(ratio);
        rows.push(Row { index: i, value: ratio, certified: Some(r.certified), bound: Some(5.0), pass: Some(ratio <= 5.0 + 1e-6) });
        checks.extend(r.checks.into_iter().map(|mut c| {
            c.name = format!("chain {i}: {}", c.name);
            c
        }));
    }
    Ok(Output { outputs: json!({ "chains": count, "max_constant_over_K": worst }), checks, rows })
}
