//! Coefficient-space norms `t` and `u`, the factorization `T = j ∘ A`, and
//! unconditional constants.
//!
//! `|||a|||_t = max_N ‖Σ_{k≤N} a_k w_k‖` and
//! `|||a|||_u = sup_{|b_k|≤1} ‖Σ b_k a_k w_k‖`. The second supremum is taken
//! over sign vectors, which suffices because the expression is convex in `b`.
//! Sign patterns are enumerated modulo the global flip.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::OFrame;
use crate::operators::{is_certified_pair, op_norm_checked, rows, MatOperator};
use crate::spaces::{ensure_same, SpaceSpec, Vector};
use crate::subspace::{numerical_rank, SubspaceBall};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    T,
    U,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" => Ok(Mode::T),
            "u" => Ok(Mode::U),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}, expected t or u"))),
        }
    }
}

/// Nonzero generators `w_k` of a space `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqNorm {
    pub space: SpaceSpec,
    /// Column `k` is `w_k`.
    pub generators: DMatrix<f64>,
    pub mode: Mode,
}

/// A norm value with the sign pattern attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedValue {
    pub value: f64,
    pub certified: bool,
    pub signs: Vec<i8>,
}

impl SeqNorm {
    pub fn new(space: SpaceSpec, generators: &[Vector], mode: Mode) -> Result<Self> {
        for (k, w) in generators.iter().enumerate() {
            ensure_same(&w.space, &space)?;
            if w.coords.iter().all(|x| *x == 0.0) {
                return Err(Error::InvalidArgument(format!("generator {k} is zero")));
            }
        }
        let generators = DMatrix::from_fn(space.dim(), generators.len(), |i, k| generators[k].coords[i]);
        Ok(SeqNorm { space, generators, mode })
    }

    pub fn len(&self) -> usize {
        self.generators.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, a: &[f64]) -> Result<()> {
        if a.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: a.len() });
        }
        Ok(())
    }

    /// `‖Σ_k a_k w_k‖`.
    pub fn synthesis_norm(&self, a: &[f64]) -> Result<f64> {
        self.check(a)?;
        Ok(self.space.norm_of((&self.generators * DVector::from_column_slice(a)).as_slice()))
    }

    pub fn t_norm(&self, a: &[f64]) -> Result<f64> {
        self.check(a)?;
        let mut y = DVector::zeros(self.space.dim());
        let mut best = 0.0f64;
        for (k, ak) in a.iter().enumerate() {
            y.axpy(*ak, &self.generators.column(k), 1.0);
            best = best.max(self.space.norm_of(y.as_slice()));
        }
        Ok(best)
    }

    /// Exact over all sign patterns when `len ≤ max_exact`, otherwise a
    /// lower bound from prefix patterns, seeded random patterns and greedy
    /// single flips.
    pub fn u_norm(&self, a: &[f64], max_exact: usize, seed: u64) -> Result<SignedValue> {
        self.check(a)?;
        let n = a.len();
        if n == 0 {
            return Ok(SignedValue { value: 0.0, certified: true, signs: Vec::new() });
        }
        let scaled = DMatrix::from_fn(self.space.dim(), n, |i, k| self.generators[(i, k)] * a[k]);
        if n <= max_exact {
            let (value, signs) = max_over_signs(&scaled, &self.space);
            return Ok(SignedValue { value, certified: true, signs });
        }
        let (value, signs) = local_search(&scaled, &self.space, seed);
        Ok(SignedValue { value, certified: false, signs })
    }

    pub fn norm(&self, a: &[f64], max_exact: usize, seed: u64) -> Result<f64> {
        match self.mode {
            Mode::T => self.t_norm(a),
            Mode::U => Ok(self.u_norm(a, max_exact, seed)?.value),
        }
    }
}

fn eval(cols: &DMatrix<f64>, space: &SpaceSpec, signs: &[i8]) -> f64 {
    let mut y = DVector::zeros(cols.nrows());
    for (k, s) in signs.iter().enumerate() {
        y.axpy(f64::from(*s), &cols.column(k), 1.0);
    }
    space.norm_of(y.as_slice())
}

/// Sign vector of pattern `idx`: `b_0 = +1`, `b_k = −1` iff bit `k−1` is set.
fn signs_of(idx: u64, n: usize) -> Vec<i8> {
    (0..n).map(|k| if k > 0 && idx >> (k - 1) & 1 == 1 { -1 } else { 1 }).collect()
}

const BLOCK_BITS: usize = 10;

/// Exhaustive maximum of `‖Σ b_k c_k‖` over `b ∈ {±1}^n / ±`. Each block of
/// patterns is walked in Gray-code order from a freshly summed start; the
/// winning pattern is re-evaluated from scratch.
fn max_over_signs(cols: &DMatrix<f64>, space: &SpaceSpec) -> (f64, Vec<i8>) {
    let n = cols.ncols();
    let free = n - 1;
    let low = free.min(BLOCK_BITS);
    let blocks = 1u64 << (free - low);
    let best = (0..blocks)
        .into_par_iter()
        .map(|hi| {
            let base = hi << low;
            let mut signs = signs_of(base, n);
            let mut y = DVector::zeros(cols.nrows());
            for (k, s) in signs.iter().enumerate() {
                y.axpy(f64::from(*s), &cols.column(k), 1.0);
            }
            let mut best = (space.norm_of(y.as_slice()), base);
            let mut gray = 0u64;
            for step in 1..(1u64 << low) {
                let bit = step.trailing_zeros() as usize;
                gray ^= 1 << bit;
                let k = bit + 1;
                let s = -signs[k];
                signs[k] = s;
                y.axpy(2.0 * f64::from(s), &cols.column(k), 1.0);
                let v = space.norm_of(y.as_slice());
                if v > best.0 {
                    best = (v, base | gray);
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), |a, b| pick(a, b));
    let signs = signs_of(best.1, n);
    let exact = eval(cols, space, &signs);
    (exact.max(best.0), signs)
}

/// Larger value wins; ties go to the smaller pattern index.
fn pick(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// All `2^{n−1}` patterns with `b_0 = +1`, or the all-ones pattern followed by
/// `samples − 1` seeded random ones.
fn sign_patterns(n: usize, exhaustive: bool, samples: usize, seed: u64) -> Vec<Vec<i8>> {
    if exhaustive {
        return (0..1u64 << (n - 1)).map(|idx| signs_of(idx, n)).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vec![1i8; n]];
    for _ in 1..samples.max(1) {
        out.push((0..n).map(|k| if k == 0 || rng.random::<bool>() { 1 } else { -1 }).collect());
    }
    out
}

const RANDOM_STARTS: usize = 64;

fn local_search(cols: &DMatrix<f64>, space: &SpaceSpec, seed: u64) -> (f64, Vec<i8>) {
    let n = cols.ncols();
    let mut starts: Vec<Vec<i8>> = (0..=n).map(|m| (0..n).map(|k| if k < m { 1 } else { -1 }).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_STARTS {
        starts.push((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect());
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for mut s in starts {
        let mut v = eval(cols, space, &s);
        loop {
            let mut improved = false;
            for k in 0..n {
                s[k] = -s[k];
                let w = eval(cols, space, &s);
                if w > v {
                    v = w;
                    improved = true;
                } else {
                    s[k] = -s[k];
                }
            }
            if !improved {
                break;
            }
        }
        if v > best.0 {
            best = (v, s);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizeOptions {
    /// Coefficient vectors sampled for `‖j‖`.
    pub samples: usize,
    pub seed: u64,
    /// Largest length for exhaustive sign enumeration.
    pub max_exact: usize,
    pub allow_estimates: bool,
}

impl Default for FactorizeOptions {
    fn default() -> Self {
        FactorizeOptions { samples: 1000, seed: 0xF8A3E, max_exact: 16, allow_estimates: false }
    }
}

/// `T = j ∘ A` through the coefficient space normed by `|||·|||_mode`.
#[derive(Debug, Clone, Serialize)]
pub struct Factorization {
    pub mode: Mode,
    pub source: SpaceSpec,
    pub target: SpaceSpec,
    /// Rows `⟨x'_k, ·⟩`.
    #[serde(with = "rows")]
    pub analysis: DMatrix<f64>,
    /// Columns `w_k`.
    #[serde(with = "rows")]
    pub synthesis: DMatrix<f64>,
    /// Frame indices dropped because `w_k = 0`.
    pub dropped: Vec<usize>,
    pub norm_a: f64,
    pub norm_a_certified: bool,
    /// Largest sampled ratio `‖j a‖ / |||a|||`.
    pub norm_j: f64,
    /// `1`: the full prefix (or the all-ones sign pattern) dominates `‖j a‖`.
    pub norm_j_bound: f64,
    /// Largest entry of `j A − T`.
    pub residual: f64,
}

impl Factorization {
    pub fn composition(&self) -> DMatrix<f64> {
        &self.synthesis * &self.analysis
    }
}

pub fn factorize(frame: &OFrame, mode: Mode, opts: &FactorizeOptions) -> Result<Factorization> {
    let x = *frame.source();
    let w = *frame.target();
    let (kept, dropped): (Vec<usize>, Vec<usize>) =
        (0..frame.len()).partition(|&k| frame.pairs[k].vector.iter().any(|v| *v != 0.0));
    let n = kept.len();
    let analysis = DMatrix::from_fn(n, x.dim(), |r, c| frame.pairs[kept[r]].functional[c] * x.weight());
    let synthesis = DMatrix::from_fn(w.dim(), n, |r, c| frame.pairs[kept[c]].vector[r]);
    let residual = (&synthesis * &analysis - &frame.operator.matrix).amax();

    let pieces: Vec<MatOperator> = (0..n)
        .map(|k| MatOperator {
            source: x,
            target: w,
            matrix: synthesis.column(k) * analysis.row(k),
        })
        .collect();
    let (norm_a, norm_a_certified) = match mode {
        Mode::T => {
            let mut acc = MatOperator::zero(x, w);
            let mut best = 0.0f64;
            let mut cert = true;
            for p in &pieces {
                acc = acc.add(p)?;
                let r = op_norm_checked(&acc, opts.allow_estimates)?;
                cert &= r.certified;
                best = best.max(r.value);
            }
            (best, cert)
        }
        Mode::U => signed_sum_norm(&pieces, x, w, opts)?,
    };

    let norm = SeqNorm { space: w, generators: synthesis.clone(), mode };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut norm_j = 0.0f64;
    if n > 0 {
        for _ in 0..opts.samples {
            let a: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let top = norm.synthesis_norm(&a)?;
            let bottom = norm.norm(&a, opts.max_exact, opts.seed)?;
            if bottom > 0.0 {
                norm_j = norm_j.max(top / bottom);
            }
        }
    }
    Ok(Factorization {
        mode,
        source: x,
        target: w,
        analysis,
        synthesis,
        dropped,
        norm_a,
        norm_a_certified,
        norm_j,
        norm_j_bound: 1.0,
        residual,
    })
}

/// `max_b ‖Σ b_k x'_k ⊗ w_k‖` over sign patterns.
fn signed_sum_norm(pieces: &[MatOperator], x: SpaceSpec, w: SpaceSpec, opts: &FactorizeOptions) -> Result<(f64, bool)> {
    let n = pieces.len();
    if n == 0 {
        return Ok((0.0, true));
    }
    if !opts.allow_estimates && !is_certified_pair(&x, &w) {
        return Err(Error::EstimateOnly { source_space: x.to_string(), target_space: w.to_string() });
    }
    let exact = n <= opts.max_exact;
    let patterns = sign_patterns(n, exact, opts.samples, opts.seed);
    let results: Vec<(f64, bool)> = patterns
        .par_iter()
        .map(|signs| {
            let mut m = DMatrix::zeros(w.dim(), x.dim());
            for (p, s) in pieces.iter().zip(signs) {
                m += &p.matrix * f64::from(*s);
            }
            let r = op_norm_checked(&MatOperator { source: x, target: w, matrix: m }, true).expect("shapes agree");
            (r.value, r.certified)
        })
        .collect();
    let value = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let certified = exact && results.iter().all(|r| r.1);
    Ok((value, certified))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnconditionalConstant {
    pub value: f64,
    pub certified: bool,
    pub signs: Vec<i8>,
    pub patterns: u64,
}

/// `max_ε ‖M_ε‖` where `M_ε(Σ a_k v_k) = Σ ε_k a_k v_k` on the span of the
/// system, exhaustive for `len ≤ max_exact` and over `samples` seeded random
/// patterns beyond.
pub fn unconditional_constant(
    system: &[Vector],
    space: &SpaceSpec,
    max_exact: usize,
    samples: usize,
    seed: u64,
) -> Result<UnconditionalConstant> {
    for v in system {
        ensure_same(&v.space, space)?;
    }
    let m = system.len();
    if m == 0 {
        return Err(Error::Empty("system"));
    }
    let basis = DMatrix::from_fn(space.dim(), m, |i, k| system[k].coords[i]);
    let rank = numerical_rank(&basis, 1e-10);
    if rank < m {
        return Err(Error::RankDeficient { rank, expected: m });
    }
    let eval: Box<dyn Fn(&[i8]) -> (f64, bool) + Sync> = if m == space.dim() && is_certified_pair(space, space) {
        let inv = basis.clone().try_inverse().ok_or(Error::RankDeficient { rank: m - 1, expected: m })?;
        let space = *space;
        Box::new(move |signs: &[i8]| {
            let d = DMatrix::from_diagonal(&DVector::from_iterator(m, signs.iter().map(|s| f64::from(*s))));
            let op = MatOperator { source: space, target: space, matrix: &basis * d * &inv };
            let r = op_norm_checked(&op, false).expect("certified pair");
            (r.value, r.certified)
        })
    } else {
        let ball = SubspaceBall::new(space, &basis)?;
        Box::new(move |signs: &[i8]| {
            let d = DMatrix::from_diagonal(&DVector::from_iterator(m, signs.iter().map(|s| f64::from(*s))));
            ball.op_norm(&d)
        })
    };
    let exact = m <= max_exact;
    let patterns = sign_patterns(m, exact, samples, seed);
    let results: Vec<(f64, bool)> = patterns.par_iter().map(|signs| eval(signs)).collect();
    let mut best = (f64::NEG_INFINITY, u64::MAX);
    let mut certified = exact;
    for (i, (v, c)) in results.iter().enumerate() {
        certified &= *c;
        best = pick(best, (*v, i as u64));
    }
    Ok(UnconditionalConstant {
        value: best.0,
        certified,
        signs: patterns[best.1 as usize].clone(),
        patterns: patterns.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::haar_system;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn lp(p: f64, n: usize) -> SpaceSpec {
        SpaceSpec::lp(p, n).unwrap()
    }

    fn unit_vectors(s: SpaceSpec) -> Vec<Vector> {
        (0..s.dim()).map(|i| Vector::basis(s, i)).collect()
    }

    #[test]
    fn t_norm_examples() {
        let s = lp(1.0, 3);
        let n = SeqNorm::new(s, &unit_vectors(s), Mode::T).unwrap();
        assert_eq!(n.t_norm(&[1.0, -1.0, 1.0]).unwrap(), 3.0);
        assert_eq!(n.t_norm(&[0.0; 3]).unwrap(), 0.0);
        assert!(n.t_norm(&[1.0]).is_err());

        let s = lp(2.0, 1);
        let g: Vec<Vector> = (1..=3).map(|k| Vector::from_slice(s, &[(-1f64).powi(k)]).unwrap()).collect();
        let n = SeqNorm::new(s, &g, Mode::T).unwrap();
        assert_eq!(n.t_norm(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn u_norm_examples() {
        let s = lp(2.0, 1);
        let g = vec![Vector::from_slice(s, &[1.0]).unwrap(); 3];
        let n = SeqNorm::new(s, &g, Mode::U).unwrap();
        let u = n.u_norm(&[1.0, -1.0, 1.0], 20, 0).unwrap();
        assert_eq!((u.value, u.certified), (3.0, true));
        assert_eq!(u.signs, vec![1, -1, 1]);
        assert_eq!(n.u_norm(&[0.0; 3], 20, 0).unwrap().value, 0.0);

        let s = lp(1.0, 4);
        let g: Vec<Vector> = (0..4).map(|i| Vector::basis(s, i)).collect();
        let n = SeqNorm::new(s, &g, Mode::U).unwrap();
        let a = [0.5, -2.0, 1.0, 0.25];
        assert_eq!(n.u_norm(&a, 20, 0).unwrap().value, 3.75);
        assert_eq!(n.t_norm(&a).unwrap(), 3.75);
    }

    #[test]
    fn zero_generators_are_rejected() {
        let s = lp(1.0, 2);
        assert!(SeqNorm::new(s, &[Vector::zeros(s)], Mode::T).is_err());
    }

    #[test]
    fn gray_walk_matches_direct_enumeration() {
        // 14 terms spans several blocks of the parallel walk
        let s = lp(2.0, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g: Vec<Vector> = (0..14)
            .map(|_| Vector::from_slice(s, &(0..3).map(|_| StandardNormal.sample(&mut rng)).collect::<Vec<f64>>()).unwrap())
            .collect();
        let n = SeqNorm::new(s, &g, Mode::U).unwrap();
        let a: Vec<f64> = (0..14).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        let u = n.u_norm(&a, 20, 0).unwrap();
        let cols = DMatrix::from_fn(3, 14, |i, k| n.generators[(i, k)] * a[k]);
        let direct = (0..1u64 << 13).map(|idx| eval(&cols, &s, &signs_of(idx, 14))).fold(0.0, f64::max);
        assert_abs_diff_eq!(u.value, direct, epsilon = 1e-12);
        assert_abs_diff_eq!(eval(&cols, &s, &u.signs), u.value, epsilon = 1e-12);
        let heuristic = n.u_norm(&a, 4, 0).unwrap();
        assert!(!heuristic.certified);
        assert!(heuristic.value <= u.value + 1e-12);
        assert!(heuristic.value >= n.t_norm(&a).unwrap() - 1e-12);
    }

    #[test]
    fn factorization_of_basis_frames() {
        let s = lp(2.0, 2);
        let f = OFrame::basis(s);
        let fac = factorize(&f, Mode::T, &FactorizeOptions::default()).unwrap();
        assert_eq!(fac.analysis, DMatrix::identity(2, 2));
        assert_eq!(fac.synthesis, DMatrix::identity(2, 2));
        assert_eq!(fac.residual, 0.0);

        let s = lp(1.0, 2);
        let f = OFrame::diagonal(s, &[1.0, 0.5]);
        for mode in [Mode::T, Mode::U] {
            let fac = factorize(&f, mode, &FactorizeOptions::default()).unwrap();
            assert!(fac.norm_a <= 1.0 + 1e-12);
            assert!(fac.norm_j <= 1.0 + 1e-12);
            assert!(fac.norm_a_certified);
        }
    }

    #[test]
    fn zero_vectors_are_dropped() {
        let s = lp(1.0, 3);
        let f = OFrame::diagonal(s, &[1.0, 0.0, 2.0]);
        let fac = factorize(&f, Mode::U, &FactorizeOptions::default()).unwrap();
        assert_eq!(fac.dropped, vec![1]);
        assert_eq!(fac.analysis.nrows(), 2);
        assert_eq!(fac.residual, 0.0);
    }

    #[test]
    fn simple_unconditional_constants() {
        let s = lp(1.0, 4);
        assert_eq!(unconditional_constant(&unit_vectors(s), &s, 16, 0, 0).unwrap().value, 1.0);
        let s = lp(2.0, 2);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let onb = vec![Vector::from_slice(s, &[r, r]).unwrap(), Vector::from_slice(s, &[r, -r]).unwrap()];
        assert_abs_diff_eq!(unconditional_constant(&onb, &s, 16, 0, 0).unwrap().value, 1.0, epsilon = 1e-12);
        let dep = vec![Vector::from_slice(s, &[1.0, 1.0]).unwrap(), Vector::from_slice(s, &[2.0, 2.0]).unwrap()];
        assert!(matches!(unconditional_constant(&dep, &s, 16, 0, 0), Err(Error::RankDeficient { .. })));
    }

    /// Values of the exhaustive column-sum oracle (`max_ε ‖V diag(ε) V⁻¹‖_1`)
    /// for the Haar system at levels 0 through 4.
    const HAAR_L1: [f64; 5] = [1.0, 1.0, 2.0, 2.5, 3.25];

    #[test]
    fn haar_constants_in_l1_grid() {
        for (levels, want) in HAAR_L1.iter().enumerate() {
            let h = haar_system(levels as u32).unwrap();
            let r = unconditional_constant(&h, &h[0].space, 16, 0, 0).unwrap();
            assert!(r.certified);
            assert_eq!(r.value, *want, "level {levels}");
        }
    }

    #[test]
    fn haar_pins_agree_with_vertex_enumeration() {
        // independent path: exact operator norms of diag(ε) on the polytope
        // ball of the span, over every sign pattern
        for (levels, want) in HAAR_L1.iter().enumerate().take(4) {
            let h = haar_system(levels as u32).unwrap();
            let s = h[0].space;
            let m = h.len();
            let b = DMatrix::from_fn(s.dim(), m, |i, k| h[k].coords[i]);
            let ball = SubspaceBall::new(&s, &b).unwrap();
            let mut best = 0.0f64;
            for idx in 0..1u64 << (m - 1) {
                let d = DMatrix::from_diagonal(&DVector::from_iterator(m, signs_of(idx, m).iter().map(|s| f64::from(*s))));
                best = best.max(ball.op_norm(&d).0);
            }
            assert_abs_diff_eq!(best, *want, epsilon = 1e-12);
        }
    }

    #[test]
    fn haar_constants_in_l2_grid() {
        for levels in 0..4u32 {
            let s = SpaceSpec::grid(2.0, levels).unwrap();
            let h: Vec<Vector> =
                haar_system(levels).unwrap().into_iter().map(|v| Vector { space: s, coords: v.coords }).collect();
            let r = unconditional_constant(&h, &s, 16, 0, 0).unwrap();
            assert!(r.value <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn subspace_systems_use_the_ball() {
        // two unit vectors of ℓ∞^3 spanning a plane: sign flips are isometric
        let s = lp(f64::INFINITY, 3);
        let sys = vec![Vector::from_slice(s, &[1.0, 0.0, 1.0]).unwrap(), Vector::from_slice(s, &[0.0, 1.0, 0.0]).unwrap()];
        let r = unconditional_constant(&sys, &s, 16, 0, 0).unwrap();
        assert_eq!((r.value, r.certified), (1.0, true));
    }

    fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-3.0f64..3.0, n)
    }

    fn gens() -> impl Strategy<Value = (f64, Vec<Vec<f64>>)> {
        (prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY), Just(3.0)], proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 3), 6))
    }

    fn seq(p: f64, g: &[Vec<f64>], mode: Mode) -> Option<SeqNorm> {
        let s = lp(p, 3);
        let v: Vec<Vector> = g.iter().map(|c| Vector::from_slice(s, c).unwrap()).collect();
        SeqNorm::new(s, &v, mode).ok()
    }

    proptest! {
        #[test]
        fn norm_axioms((p, g) in gens(), a in coeffs(6), b in coeffs(6), c in -4.0f64..4.0) {
            let Some(n) = seq(p, &g, Mode::U) else { return Ok(()) };
            let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let ca: Vec<f64> = a.iter().map(|x| c * x).collect();
            for f in [
                |n: &SeqNorm, a: &[f64]| n.t_norm(a).unwrap(),
                |n: &SeqNorm, a: &[f64]| n.u_norm(a, 20, 0).unwrap().value,
            ] {
                let (na, nb) = (f(&n, &a), f(&n, &b));
                prop_assert!(f(&n, &ab) <= na + nb + 1e-9);
                prop_assert!((f(&n, &ca) - c.abs() * na).abs() <= 1e-9 * (1.0 + na));
            }
        }

        #[test]
        fn domination_chain((p, g) in gens(), a in coeffs(6)) {
            let Some(n) = seq(p, &g, Mode::U) else { return Ok(()) };
            let u = n.u_norm(&a, 20, 0).unwrap().value;
            let t = n.t_norm(&a).unwrap();
            let s = n.synthesis_norm(&a).unwrap();
            prop_assert!(u >= t * (1.0 - 1e-12));
            prop_assert!(t >= s);
            for k in 0..6 {
                let mut e = vec![0.0; 6];
                e[k] = 1.0;
                let wk = n.space.norm_of(n.generators.column(k).into_owned().as_slice());
                prop_assert_eq!(n.t_norm(&e).unwrap(), wk);
                prop_assert_eq!(n.u_norm(&e, 20, 0).unwrap().value, wk);
            }
            // t is a monotone basis: truncations never exceed the full vector
            for m in 0..6 {
                let mut pre = a.clone();
                pre[m..].iter_mut().for_each(|x| *x = 0.0);
                prop_assert!(n.t_norm(&pre).unwrap() <= t);
            }
        }

        #[test]
        fn zero_padding_is_neutral((p, g) in gens(), a in coeffs(5)) {
            let Some(n) = seq(p, &g, Mode::U) else { return Ok(()) };
            let short = SeqNorm { generators: n.generators.columns(0, 5).into_owned(), ..n.clone() };
            let mut padded = a.clone();
            padded.push(0.0);
            prop_assert_eq!(short.t_norm(&a).unwrap(), n.t_norm(&padded).unwrap());
            let (x, y) = (short.u_norm(&a, 20, 0).unwrap().value, n.u_norm(&padded, 20, 0).unwrap().value);
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x));
        }

        #[test]
        fn unconditional_constant_invariances(vals in proptest::collection::vec(-2.0f64..2.0, 16), perm_seed in 0u64..1000, scale in 0.1f64..10.0, p in prop_oneof![Just(1.0), Just(f64::INFINITY)]) {
            let s = lp(p, 4);
            let sys: Vec<Vector> = (0..4).map(|k| Vector::from_slice(s, &vals[4 * k..4 * k + 4]).unwrap()).collect();
            let Ok(base) = unconditional_constant(&sys, &s, 16, 0, 0) else { return Ok(()) };
            prop_assume!(crate::linalg::singular_values(&DMatrix::from_fn(4, 4, |i, k| vals[4 * k + i]))[3] > 1e-3);
            let mut order: Vec<usize> = (0..4).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
            for i in (1..4).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            let permuted: Vec<Vector> = order.iter().map(|&k| sys[k].clone()).collect();
            let scaled: Vec<Vector> = sys.iter().map(|v| Vector { space: s, coords: &v.coords * scale }).collect();
            let a = unconditional_constant(&permuted, &s, 16, 0, 0).unwrap().value;
            let b = unconditional_constant(&scaled, &s, 16, 0, 0).unwrap().value;
            prop_assert!((a - base.value).abs() <= 1e-9 * base.value);
            prop_assert!((b - base.value).abs() <= 1e-9 * base.value);
        }
    }
}
