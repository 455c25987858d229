use nalgebra::DMatrix;
use oframe_core::frames::{
    bap_certificate, bc_profile, build_oframe, dual_frame, frame_constant, shrinking_profile, split_rank_one, telescope,
    BuildOptions, ProfileOptions, SplitOptions,
};
use oframe_core::operators::op_norm_checked;
use oframe_core::seqspace::{factorize, unconditional_constant, FactorizeOptions};
use oframe_core::spaces::haar_system;
use oframe_core::{
    auerbach_basis_with, AuerbachOptions, BoundCheck, Error, Functional, MatOperator, Mode, SeqNorm, SpaceSpec, Vector,
};
use serde_json::{json, Value};

use crate::args::{Command, ModeArg, ProfileKind, RunConfig, SeqArgs};
use crate::demo;
use crate::input::Inputs;
use crate::report::{Output, Row};
use crate::CliError;

pub fn auerbach_options(cfg: &RunConfig) -> AuerbachOptions {
    AuerbachOptions { sweeps: cfg.auerbach_budget, seed: cfg.seed, ..Default::default() }
}

pub fn split_options(cfg: &RunConfig) -> SplitOptions {
    SplitOptions { rank_tol: cfg.rank_tol, auerbach: auerbach_options(cfg), ..Default::default() }
}

pub fn build_options(cfg: &RunConfig) -> BuildOptions {
    BuildOptions { split: split_options(cfg), sum_tol: cfg.tol, allow_estimates: cfg.allow_estimates }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable output")
}

fn vectors(space: SpaceSpec, rows: &[Vec<f64>], role: &str) -> Result<Vec<Vector>, CliError> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| Vector::from_slice(space, r).map_err(|e| CliError::Input(format!("{role}[{i}]: {e}"))))
        .collect()
}

pub fn run(cmd: &Command, cfg: &RunConfig, inputs: &mut Inputs) -> Result<Output, CliError> {
    match cmd {
        Command::Norm { vector, dual } => {
            let value = if *dual {
                inputs.parse::<Functional>("functional", vector)?.dual_norm()
            } else {
                inputs.parse::<Vector>("vector", vector)?.norm()
            };
            Ok(Output {
                outputs: json!({ "value": value, "certified": true }),
                checks: Vec::new(),
                rows: vec![Row::value(0, value, true)],
            })
        }
        Command::Opnorm { operator } => {
            let op: MatOperator = inputs.parse("operator", operator)?;
            let r = op_norm_checked(&op, cfg.allow_estimates)?;
            Ok(Output { rows: vec![Row::value(0, r.value, r.certified)], outputs: to_value(&r), checks: Vec::new() })
        }
        Command::Auerbach { space, subspace } => {
            let space = inputs.space(space)?;
            let b = inputs.matrix("subspace", subspace)?;
            let r = auerbach_basis_with(&b, &space, &auerbach_options(cfg))?;
            let checks = vec![
                BoundCheck::at_most("max dual norm of the functionals - 1", r.gap, SplitOptions::default().gap_ceiling),
                BoundCheck::at_most("biorthogonality residual", r.biorthogonality_residual(), 1e-8),
            ];
            let rows = r.dual_norms.iter().enumerate().map(|(j, d)| Row::value(j, *d, r.certified)).collect();
            Ok(Output { outputs: to_value(&r), checks, rows })
        }
        Command::Split { operator } => {
            let op: MatOperator = inputs.parse("operator", operator)?;
            let s = split_rank_one(&op, &split_options(cfg))?;
            let bound = s.bound + cfg.tol;
            let rows = s
                .partial_norms
                .iter()
                .enumerate()
                .map(|(q, v)| Row { index: q + 1, value: *v, certified: Some(s.certified), bound: Some(bound), pass: Some(*v <= bound) })
                .collect();
            let max_partial = s.partial_norms.iter().copied().fold(0.0, f64::max);
            let checks = vec![
                BoundCheck::at_most("split partial sums <= 2(1+gap)", max_partial, bound),
                BoundCheck::at_most("pieces sum to the operator (max entry)", s.residual, cfg.tol * (1.0 + op.max_abs())),
            ];
            Ok(Output { outputs: to_value(&s), checks, rows })
        }
        Command::BuildFrame { operator, chain, blocks } => {
            let t: MatOperator = inputs.parse("operator", operator)?;
            let mut extra = json!({});
            let blocks: Vec<MatOperator> = match (chain, blocks) {
                (Some(c), _) => {
                    let chain: Vec<MatOperator> = inputs.parse("chain", c)?;
                    let tel = telescope(&chain, &t, cfg.allow_estimates)?;
                    extra = json!({ "chain_norms": tel.partial_norms, "sup_chain_norm": tel.sup_norm, "ratio": tel.ratio });
                    tel.blocks
                }
                (None, Some(b)) => inputs.parse("blocks", b)?,
                (None, None) => vec![t.clone()],
            };
            let r = build_oframe(&blocks, &t, &build_options(cfg))?;
            let mut outputs = to_value(&r);
            outputs["telescope"] = extra;
            let rows = r
                .splits
                .iter()
                .map(|s| Row {
                    index: s.block,
                    value: s.max_partial_norm,
                    certified: Some(r.certified),
                    bound: Some(2.0 * (1.0 + s.gap) + 1e-9),
                    pass: Some(s.max_partial_norm <= 2.0 * (1.0 + s.gap) + 1e-9),
                })
                .collect();
            Ok(Output { outputs, checks: r.checks, rows })
        }
        Command::FrameCheck { frame } => {
            let f = inputs.frame(frame)?;
            let fc = frame_constant(&f, cfg.allow_estimates)?;
            let t_norm = op_norm_checked(&f.operator, cfg.allow_estimates)?.value;
            let residual = f.full_residual();
            let mut checks = vec![BoundCheck::at_most("full sum reproduces T (max entry)", residual, cfg.tol * (1.0 + t_norm))];
            if let Some(k) = f.constant {
                checks.push(BoundCheck::at_most("frame constant agrees with the recorded K", (fc.value - k).abs(), cfg.tol * (1.0 + k)));
            }
            Ok(Output {
                outputs: json!({
                    "K": fc.value,
                    "certified": fc.certified,
                    "attained_at": fc.index,
                    "recorded_K": f.constant,
                    "gap": f.gap,
                    "residual": residual,
                    "length": f.len(),
                }),
                checks,
                rows: vec![Row::value(0, fc.value, fc.certified)],
            })
        }
        Command::Dual { frame } => {
            let f = inputs.frame(frame)?;
            let d = dual_frame(&f);
            let residual = d.full_residual();
            let checks = vec![BoundCheck::at_most(
                "dual full sum reproduces the adjoint (max entry)",
                residual,
                cfg.tol * (1.0 + d.operator.max_abs()),
            )];
            Ok(Output { outputs: json!({ "frame": d, "residual": residual }), checks, rows: Vec::new() })
        }
        Command::Profile { frame, kind } => {
            let f = inputs.frame(frame)?;
            let opts = ProfileOptions { samples: cfg.samples, seed: cfg.seed, ..Default::default() };
            let p = match kind {
                ProfileKind::Shrinking => shrinking_profile(&f, None, &opts)?,
                ProfileKind::Bc => bc_profile(&f, None, None, &opts)?,
            };
            let rows = p.values.iter().enumerate().map(|(i, v)| Row::value(i, *v, p.exhaustive)).collect();
            Ok(Output { outputs: to_value(&p), checks: Vec::new(), rows })
        }
        Command::Tnorm(a) => seq_norm(a, Mode::T, cfg, inputs),
        Command::Unorm(a) => seq_norm(a, Mode::U, cfg, inputs),
        Command::Factorize { frame, mode } => {
            let f = inputs.frame(frame)?;
            let mode = match mode {
                ModeArg::T => Mode::T,
                ModeArg::U => Mode::U,
            };
            let opts = FactorizeOptions {
                samples: cfg.samples.max(1),
                seed: cfg.seed,
                max_exact: cfg.pattern_exact(),
                allow_estimates: cfg.allow_estimates,
            };
            let fac = factorize(&f, mode, &opts)?;
            let mut checks = vec![
                BoundCheck::at_most("jA reproduces T (max entry)", fac.residual, cfg.tol * (1.0 + f.operator.max_abs())),
                BoundCheck::at_most("norm of j <= 1", fac.norm_j, fac.norm_j_bound * (1.0 + cfg.tol)),
            ];
            if mode == Mode::T {
                let k = frame_constant(&f, cfg.allow_estimates)?.value;
                checks.push(BoundCheck::at_most("norm of A <= K", fac.norm_a, k * (1.0 + cfg.tol)));
            }
            Ok(Output {
                rows: vec![Row::value(0, fac.norm_a, fac.norm_a_certified), Row::value(1, fac.norm_j, false)],
                outputs: to_value(&fac),
                checks,
            })
        }
        Command::Bap { operator, family, eps, c, rank } => {
            let t: MatOperator = inputs.parse("operator", operator)?;
            let fam = match family {
                Some(f) => {
                    let rows: Vec<Vec<f64>> = inputs.parse("family", f)?;
                    vectors(t.source, &rows, "family")?
                }
                None => (0..t.source.dim()).map(|k| Vector::basis(t.source, k)).collect(),
            };
            match bap_certificate(&t, &fam, *eps, *c, *rank, cfg.allow_estimates) {
                Ok(cert) => {
                    let checks = vec![
                        BoundCheck::at_most("deviation on the family <= eps", cert.errors[0], *eps),
                        BoundCheck::at_most("norm of R <= C norm of T", cert.witness_norms[0], c * cert.operator_norm * (1.0 + cfg.tol)),
                    ];
                    Ok(Output {
                        rows: vec![Row { index: cert.rank, value: cert.errors[0], certified: Some(cert.certified), bound: Some(*eps), pass: Some(true) }],
                        outputs: to_value(&cert),
                        checks,
                    })
                }
                Err(Error::Infeasible { rank, deviation, eps }) => Ok(Output {
                    outputs: json!({ "feasible": false, "rank": rank, "deviation": deviation, "eps": eps }),
                    checks: vec![BoundCheck::at_most("deviation on the family <= eps", deviation, eps)],
                    rows: vec![Row { index: rank, value: deviation, certified: Some(true), bound: Some(eps), pass: Some(false) }],
                }),
                Err(e) => Err(e.into()),
            }
        }
        Command::Uncond { system, levels, p, space } => {
            if system == "haar" {
                let p = parse_exponent(p)?;
                let values = haar_constants(*levels, p, cfg)?;
                let rows = values.iter().map(|(l, v, c)| Row::value(*l as usize, *v, *c)).collect();
                let list: Vec<Value> = values.iter().map(|(l, v, c)| json!({ "level": l, "value": v, "certified": c })).collect();
                return Ok(Output { outputs: json!({ "system": "haar", "p": p, "levels": list }), checks: Vec::new(), rows });
            }
            let space = inputs.space(space.as_deref().ok_or_else(|| CliError::Input("uncond: --space is required for an explicit system".into()))?)?;
            let rows: Vec<Vec<f64>> = inputs.parse("system", system)?;
            let sys = vectors(space, &rows, "system")?;
            let r = unconditional_constant(&sys, &space, cfg.pattern_exact(), cfg.samples, cfg.seed)?;
            Ok(Output { rows: vec![Row::value(sys.len(), r.value, r.certified)], outputs: to_value(&r), checks: Vec::new() })
        }
        Command::Demo { which } => demo::run(which, cfg),
    }
}

pub fn parse_exponent(p: &str) -> Result<f64, CliError> {
    match p {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => p.parse().map_err(|_| CliError::Input(format!("invalid exponent {p:?}"))),
    }
}

/// `(level, constant, certified)` for levels `1..=levels`.
pub fn haar_constants(levels: u32, p: f64, cfg: &RunConfig) -> Result<Vec<(u32, f64, bool)>, CliError> {
    (1..=levels)
        .map(|level| {
            let space = SpaceSpec::grid(p, level)?;
            let sys: Vec<Vector> = haar_system(level)?.into_iter().map(|v| Vector { space, coords: v.coords }).collect();
            let r = unconditional_constant(&sys, &space, cfg.pattern_exact(), cfg.samples, cfg.seed)?;
            Ok((level, r.value, r.certified))
        })
        .collect()
}

fn seq_norm(a: &SeqArgs, mode: Mode, cfg: &RunConfig, inputs: &mut Inputs) -> Result<Output, CliError> {
    let space = inputs.space(&a.space)?;
    let rows: Vec<Vec<f64>> = inputs.parse("generators", &a.generators)?;
    let gens = vectors(space, &rows, "generators")?;
    let coeffs: Vec<f64> = inputs.parse("coeffs", &a.coeffs)?;
    let norm = SeqNorm::new(space, &gens, mode)?;
    if coeffs.len() != norm.len() {
        return Err(CliError::Input(format!("coeffs: {} entries for {} generators", coeffs.len(), norm.len())));
    }
    let prefix = |n: usize| -> Vec<f64> { coeffs.iter().enumerate().map(|(k, c)| if k < n { *c } else { 0.0 }).collect() };
    let mut out_rows = Vec::with_capacity(coeffs.len());
    for n in 1..=coeffs.len() {
        let row = match mode {
            Mode::T => Row::value(n, norm.synthesis_norm(&prefix(n))?, true),
            Mode::U => {
                let v = norm.u_norm(&prefix(n), cfg.u_norm_exact(), cfg.seed)?;
                Row::value(n, v.value, v.certified)
            }
        };
        out_rows.push(row);
    }
    let outputs = match mode {
        Mode::T => json!({ "value": norm.t_norm(&coeffs)?, "certified": true }),
        Mode::U => to_value(&norm.u_norm(&coeffs, cfg.u_norm_exact(), cfg.seed)?),
    };
    Ok(Output { outputs, checks: Vec::new(), rows: out_rows })
}

/// Random matrix helper shared with the demos.
pub fn gaussian(rng: &mut rand_chacha::ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    use rand_distr::{Distribution, StandardNormal};
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}
