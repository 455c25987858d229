//! Dense operators between space models.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spaces::{ensure_same, Functional, SpaceSpec, Vector};

/// Row-major `[[..], ..]` (de)serialization for `DMatrix<f64>`.
pub mod rows {
    use nalgebra::DMatrix;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, String> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
            return Err(format!("ragged matrix: row {bad} has {} entries, expected {ncols}", rows[bad].len()));
        }
        Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(to_rows(m))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(de::Error::custom)
    }
}

/// A dense matrix acting from `source` to `target` (rows = target dimension).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOperator", into = "RawOperator")]
pub struct MatOperator {
    pub source: SpaceSpec,
    pub target: SpaceSpec,
    pub matrix: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawOperator {
    source: SpaceSpec,
    target: SpaceSpec,
    #[serde(with = "rows")]
    matrix: DMatrix<f64>,
}

impl TryFrom<RawOperator> for MatOperator {
    type Error = Error;
    fn try_from(raw: RawOperator) -> Result<Self> {
        MatOperator::new(raw.source, raw.target, raw.matrix)
    }
}

impl From<MatOperator> for RawOperator {
    fn from(m: MatOperator) -> Self {
        RawOperator { source: m.source, target: m.target, matrix: m.matrix }
    }
}

impl MatOperator {
    pub fn new(source: SpaceSpec, target: SpaceSpec, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != target.dim() {
            return Err(Error::DimensionMismatch { expected: target.dim(), found: matrix.nrows() });
        }
        if matrix.ncols() != source.dim() {
            return Err(Error::DimensionMismatch { expected: source.dim(), found: matrix.ncols() });
        }
        Ok(MatOperator { source, target, matrix })
    }

    pub fn from_rows(source: SpaceSpec, target: SpaceSpec, rows_: &[Vec<f64>]) -> Result<Self> {
        let m = rows::from_rows(rows_).map_err(Error::InvalidArgument)?;
        Self::new(source, target, m)
    }

    pub fn identity(space: SpaceSpec) -> Self {
        let n = space.dim();
        MatOperator { source: space, target: space, matrix: DMatrix::identity(n, n) }
    }

    pub fn zero(source: SpaceSpec, target: SpaceSpec) -> Self {
        MatOperator { source, target, matrix: DMatrix::zeros(target.dim(), source.dim()) }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        ensure_same(&self.source, &x.space)?;
        Ok(Vector { space: self.target, coords: &self.matrix * &x.coords })
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &MatOperator) -> Result<MatOperator> {
        ensure_same(&inner.target, &self.source)?;
        Ok(MatOperator {
            source: inner.source,
            target: self.target,
            matrix: &self.matrix * &inner.matrix,
        })
    }

    pub fn scale(&self, c: f64) -> MatOperator {
        MatOperator { source: self.source, target: self.target, matrix: &self.matrix * c }
    }

    pub fn sub(&self, other: &MatOperator) -> Result<MatOperator> {
        self.same_shape(other)?;
        Ok(MatOperator { source: self.source, target: self.target, matrix: &self.matrix - &other.matrix })
    }

    pub fn add(&self, other: &MatOperator) -> Result<MatOperator> {
        self.same_shape(other)?;
        Ok(MatOperator { source: self.source, target: self.target, matrix: &self.matrix + &other.matrix })
    }

    pub(crate) fn same_shape(&self, other: &MatOperator) -> Result<()> {
        ensure_same(&self.source, &other.source)?;
        ensure_same(&self.target, &other.target)
    }

    /// The adjoint `target* -> source*` with respect to the weighted pairings.
    pub fn adjoint(&self) -> MatOperator {
        let ratio = self.target.weight() / self.source.weight();
        MatOperator {
            source: self.target.dual(),
            target: self.source.dual(),
            matrix: self.matrix.transpose() * ratio,
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.matrix.amax()
    }
}

pub fn apply(m: &MatOperator, x: &Vector) -> Result<Vector> {
    m.apply(x)
}

pub fn compose(a: &MatOperator, b: &MatOperator) -> Result<MatOperator> {
    a.compose(b)
}

pub fn sum(ops: &[MatOperator]) -> Result<MatOperator> {
    let first = ops.first().ok_or(Error::Empty("operator list"))?;
    ops[1..].iter().try_fold(first.clone(), |acc, op| acc.add(op))
}

/// `x ↦ ⟨functional, x⟩ · vector`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneOperator {
    pub functional: Functional,
    pub vector: Vector,
}

impl RankOneOperator {
    pub fn new(functional: Functional, vector: Vector) -> Self {
        RankOneOperator { functional, vector }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        let c = self.functional.apply(x)?;
        Ok(Vector { space: self.vector.space, coords: &self.vector.coords * c })
    }

    pub fn as_matrix(&self) -> MatOperator {
        let w = self.functional.space.weight();
        MatOperator {
            source: self.functional.space,
            target: self.vector.space,
            matrix: (&self.vector.coords * self.functional.coords.transpose()) * w,
        }
    }

    /// `‖f‖_* · ‖v‖`, the exact norm of a rank-one operator.
    pub fn norm(&self) -> f64 {
        self.functional.dual_norm() * self.vector.norm()
    }
}

pub fn as_matrix(r: &RankOneOperator) -> MatOperator {
    r.as_matrix()
}

/// An operator norm together with a unit vector attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    /// `true` when computed by an exact formula, `false` for lower-bound
    /// estimates.
    pub certified: bool,
    pub witness: Vector,
}

/// Settings of the projected-ascent estimator used when no closed form exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { restarts: 32, iterations: 200, seed: 0xF8A3E }
    }
}

/// Whether `source -> target` norms have a closed form.
pub fn is_certified_pair(source: &SpaceSpec, target: &SpaceSpec) -> bool {
    source.is_l1_type() || target.is_linf_type() || (source.is_l2_type() && target.is_l2_type())
}

pub fn op_norm(m: &MatOperator) -> Result<NormResult> {
    op_norm_with(m, &EstimatorConfig::default())
}

/// `op_norm` that refuses estimate-only configurations unless allowed.
pub fn op_norm_checked(m: &MatOperator, allow_estimates: bool) -> Result<NormResult> {
    if !allow_estimates && !is_certified_pair(&m.source, &m.target) {
        return Err(Error::EstimateOnly {
            source_space: m.source.to_string(),
            target_space: m.target.to_string(),
        });
    }
    op_norm(m)
}

/// Operator norm, exact when the space pair admits a closed formula and a
/// seeded lower bound otherwise.
pub fn op_norm_with(m: &MatOperator, cfg: &EstimatorConfig) -> Result<NormResult> {
    m.source.check_len(m.matrix.ncols())?;
    m.target.check_len(m.matrix.nrows())?;
    let (src, tgt) = (&m.source, &m.target);
    if src.is_l1_type() {
        // extreme points of the source ball are the scaled unit vectors
        let unit = 1.0 / src.weight();
        let mut best = (0, f64::NEG_INFINITY);
        for (j, col) in m.matrix.column_iter().enumerate() {
            let v = tgt.norm_of(col.as_slice()) * unit;
            if v > best.1 {
                best = (j, v);
            }
        }
        let mut w = DVector::zeros(src.dim());
        w[best.0] = unit;
        return Ok(NormResult { value: best.1, certified: true, witness: Vector { space: *src, coords: w } });
    }
    if tgt.is_linf_type() {
        let inv_w = 1.0 / src.weight();
        let mut best = (0, f64::NEG_INFINITY);
        for (i, row) in m.matrix.row_iter().enumerate() {
            let f: Vec<f64> = row.iter().map(|x| x * inv_w).collect();
            let v = src.dual_norm_of(&f);
            if v > best.1 {
                best = (i, v);
            }
        }
        let f: Vec<f64> = m.matrix.row(best.0).iter().map(|x| x * inv_w).collect();
        let w = DVector::from_vec(src.norming_vector(&f));
        return Ok(NormResult { value: best.1, certified: true, witness: Vector { space: *src, coords: w } });
    }
    if src.is_l2_type() && tgt.is_l2_type() {
        let scale = (tgt.weight() / src.weight()).sqrt();
        let (sigma, v) = top_singular(&m.matrix);
        let nv = src.norm_of(v.as_slice());
        let w = if nv > 0.0 { v / nv } else { unit_first(src) };
        return Ok(NormResult { value: sigma * scale, certified: true, witness: Vector { space: *src, coords: w } });
    }
    Ok(estimate_norm(m, cfg))
}

fn unit_first(space: &SpaceSpec) -> DVector<f64> {
    let mut w = DVector::zeros(space.dim());
    w[0] = 1.0;
    let n = space.norm_of(w.as_slice());
    w / n
}

/// Largest singular value and a corresponding right singular vector.
pub(crate) fn top_singular(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0.0, DVector::zeros(m.ncols()));
    }
    let svd = linalg::svd(m);
    (svd.s[0], svd.v.column(0).into_owned())
}

/// Normalized-subgradient power iteration from seeded random starts. Each
/// restart draws from its own stream, so more restarts never lower the result.
fn estimate_norm(m: &MatOperator, cfg: &EstimatorConfig) -> NormResult {
    let src = m.source;
    let tgt = m.target;
    let ratio = tgt.weight() / src.weight();
    let mt = m.matrix.transpose();
    let mut best_val = f64::NEG_INFINITY;
    let mut best_x = unit_first(&src);
    for r in 0..cfg.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r as u64));
        let raw: DVector<f64> = DVector::from_fn(src.dim(), |_, _| StandardNormal.sample(&mut rng));
        let nr = src.norm_of(raw.as_slice());
        let mut x = if nr > 0.0 { raw / nr } else { unit_first(&src) };
        let mut val = tgt.norm_of((&m.matrix * &x).as_slice());
        for _ in 0..cfg.iterations {
            let y = &m.matrix * &x;
            if y.iter().all(|v| *v == 0.0) {
                break;
            }
            let g = DVector::from_vec(tgt.norming_functional(y.as_slice()));
            let z = (&mt * g) * ratio;
            let xn = DVector::from_vec(src.norming_vector(z.as_slice()));
            let vn = tgt.norm_of((&m.matrix * &xn).as_slice());
            if vn <= val * (1.0 + 1e-15) {
                break;
            }
            x = xn;
            val = vn;
        }
        if val > best_val {
            best_val = val;
            best_x = x;
        }
    }
    NormResult { value: best_val, certified: false, witness: Vector { space: src, coords: best_x } }
}

/// Orthonormal (Euclidean) basis of the image of an operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBasis {
    /// `target.dim() × rank`, orthonormal columns.
    pub basis: DMatrix<f64>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

/// Image basis from the SVD; the numerical rank counts singular values above
/// `tol · σ_max`.
pub fn image_basis(m: &MatOperator, tol: f64) -> Result<ImageBasis> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("rank tolerance must be positive, got {tol}")));
    }
    let n = m.matrix.nrows();
    if m.matrix.ncols() == 0 {
        return Ok(ImageBasis { basis: DMatrix::zeros(n, 0), rank: 0, singular_values: Vec::new() });
    }
    let svd = linalg::svd(&m.matrix);
    let sv = svd.s;
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(ImageBasis { basis: DMatrix::zeros(n, 0), rank: 0, singular_values: sv });
    }
    let rank = sv.iter().filter(|s| **s > tol * smax).count();
    let basis = svd.u.columns(0, rank).into_owned();
    Ok(ImageBasis { basis, rank, singular_values: sv })
}
