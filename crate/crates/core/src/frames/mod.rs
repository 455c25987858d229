//! Operator frames: finite expansions `T x = Σ_k ⟨x'_k, x⟩ w_k`.

mod bap;
mod profile;
mod split;

pub use bap::{bap_certificate, certify_net, net_bound, net_radius, BapCertificate, NetCertificate};
pub use profile::{bc_profile, shrinking_profile, ProfileOptions, TailKind, TailProfile};
pub use split::{
    build_oframe, split_rank_one, telescope, BlockSplit, BuildOptions, BuildReport, RankOneSplit, SplitOptions,
    Telescope,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{op_norm_checked, MatOperator, RankOneOperator};
use crate::spaces::{ensure_same, Functional, SpaceSpec, Vector};

/// `(x'_k, w_k)`: pairing coefficients of a functional on the source and a
/// vector of the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePair {
    #[serde(with = "coords")]
    pub functional: DVector<f64>,
    #[serde(with = "coords")]
    pub vector: DVector<f64>,
}

mod coords {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

/// An O-frame for `operator`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFrame", into = "RawFrame")]
pub struct OFrame {
    pub operator: MatOperator,
    pub pairs: Vec<FramePair>,
    /// Frame constant, when computed.
    pub constant: Option<f64>,
    /// Auerbach gap of the splitting that produced the frame, if any.
    pub gap: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawFrame {
    source: SpaceSpec,
    target: SpaceSpec,
    operator: MatOperator,
    pairs: Vec<FramePair>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
}

impl TryFrom<RawFrame> for OFrame {
    type Error = Error;
    fn try_from(raw: RawFrame) -> Result<Self> {
        ensure_same(&raw.source, &raw.operator.source)?;
        ensure_same(&raw.target, &raw.operator.target)?;
        let mut f = OFrame::new(raw.operator, raw.pairs)?;
        f.constant = raw.constant;
        f.gap = raw.gap;
        Ok(f)
    }
}

impl From<OFrame> for RawFrame {
    fn from(f: OFrame) -> Self {
        RawFrame {
            source: f.operator.source,
            target: f.operator.target,
            operator: f.operator,
            pairs: f.pairs,
            constant: f.constant,
            gap: f.gap,
        }
    }
}

impl OFrame {
    /// Checks pair dimensions; the full-sum identity is not enforced here, see
    /// [`OFrame::full_residual`].
    pub fn new(operator: MatOperator, pairs: Vec<FramePair>) -> Result<Self> {
        for p in &pairs {
            operator.source.check_len(p.functional.len())?;
            operator.target.check_len(p.vector.len())?;
        }
        Ok(OFrame { operator, pairs, constant: None, gap: None })
    }

    pub fn from_rank_one(operator: MatOperator, pieces: &[RankOneOperator]) -> Result<Self> {
        let mut pairs = Vec::with_capacity(pieces.len());
        for r in pieces {
            ensure_same(&r.functional.space, &operator.source)?;
            ensure_same(&r.vector.space, &operator.target)?;
            pairs.push(FramePair { functional: r.functional.coords.clone(), vector: r.vector.coords.clone() });
        }
        OFrame::new(operator, pairs)
    }

    /// Coordinate functionals and unit vectors of `space`, representing the identity.
    pub fn basis(space: SpaceSpec) -> Self {
        Self::diagonal(space, &vec![1.0; space.dim()])
    }

    /// `x ↦ Σ_k d_k x_k e_k`.
    pub fn diagonal(space: SpaceSpec, d: &[f64]) -> Self {
        let n = space.dim();
        let inv_w = 1.0 / space.weight();
        let pairs = (0..n)
            .map(|k| {
                let mut f = DVector::zeros(n);
                f[k] = inv_w;
                let mut v = DVector::zeros(n);
                v[k] = d.get(k).copied().unwrap_or(0.0);
                FramePair { functional: f, vector: v }
            })
            .collect();
        let op = MatOperator {
            source: space,
            target: space,
            matrix: DMatrix::from_diagonal(&DVector::from_fn(n, |k, _| d.get(k).copied().unwrap_or(0.0))),
        };
        OFrame { operator: op, pairs, constant: None, gap: None }
    }

    /// Summing basis `s_k = 1_{[1..k]}` of `ℓ_∞^n` with functionals
    /// `e*_k − e*_{k+1}`, representing the identity.
    pub fn summing_basis(n: usize) -> Result<Self> {
        let space = SpaceSpec::lp(f64::INFINITY, n)?;
        let pairs = (0..n)
            .map(|k| {
                let mut f = DVector::zeros(n);
                f[k] = 1.0;
                if k + 1 < n {
                    f[k + 1] = -1.0;
                }
                FramePair { functional: f, vector: DVector::from_fn(n, |i, _| if i <= k { 1.0 } else { 0.0 }) }
            })
            .collect();
        Ok(OFrame { operator: MatOperator::identity(space), pairs, constant: None, gap: None })
    }

    pub fn source(&self) -> &SpaceSpec {
        &self.operator.source
    }

    pub fn target(&self) -> &SpaceSpec {
        &self.operator.target
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn functional(&self, k: usize) -> Functional {
        Functional { space: *self.source(), coords: self.pairs[k].functional.clone() }
    }

    pub fn vector(&self, k: usize) -> Vector {
        Vector { space: *self.target(), coords: self.pairs[k].vector.clone() }
    }

    /// Matrix of `Σ_{k≤n} x'_k ⊗ w_k`.
    pub fn partial_operator(&self, n: usize) -> Result<MatOperator> {
        self.check_index(n)?;
        let mut m = DMatrix::zeros(self.target().dim(), self.source().dim());
        for p in &self.pairs[..n] {
            m.ger(self.source().weight(), &p.vector, &p.functional, 1.0);
        }
        Ok(MatOperator { source: *self.source(), target: *self.target(), matrix: m })
    }

    /// Matrices of all partial sums `n = 1..=len`, built incrementally.
    pub fn partial_operators(&self) -> Vec<MatOperator> {
        let w = self.source().weight();
        let mut m = DMatrix::zeros(self.target().dim(), self.source().dim());
        self.pairs
            .iter()
            .map(|p| {
                m.ger(w, &p.vector, &p.functional, 1.0);
                MatOperator { source: *self.source(), target: *self.target(), matrix: m.clone() }
            })
            .collect()
    }

    /// Largest entry of `Σ_k x'_k ⊗ w_k − T`.
    pub fn full_residual(&self) -> f64 {
        let full = self.partial_operator(self.len()).expect("full length is valid");
        (full.matrix - &self.operator.matrix).amax()
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n > self.len() {
            return Err(Error::InvalidArgument(format!("partial sum index {n} exceeds frame length {}", self.len())));
        }
        Ok(())
    }
}

/// `Σ_{k≤n} ⟨x'_k, x⟩ w_k`.
pub fn frame_partial_sum(frame: &OFrame, x: &Vector, n: usize) -> Result<Vector> {
    ensure_same(frame.source(), &x.space)?;
    frame.check_index(n)?;
    let mut y = DVector::zeros(frame.target().dim());
    for p in &frame.pairs[..n] {
        let c = frame.source().pair(p.functional.as_slice(), x.coords.as_slice());
        y.axpy(c, &p.vector, 1.0);
    }
    Ok(Vector { space: *frame.target(), coords: y })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConstant {
    pub value: f64,
    pub certified: bool,
    /// Length of the partial sum attaining the value (0 for an empty frame).
    pub index: usize,
}

/// `max_N ‖Σ_{k≤N} x'_k ⊗ w_k‖`.
pub fn frame_constant(frame: &OFrame, allow_estimates: bool) -> Result<FrameConstant> {
    let mut best = FrameConstant { value: 0.0, certified: true, index: 0 };
    for (i, s) in frame.partial_operators().iter().enumerate() {
        let r = op_norm_checked(s, allow_estimates)?;
        best.certified &= r.certified;
        if r.value > best.value {
            best.value = r.value;
            best.index = i + 1;
        }
    }
    Ok(best)
}

/// Frame `(B* x'_k, A w_k)` for `A ∘ T ∘ B`.
pub fn compose_frame(a: &MatOperator, frame: &OFrame, b: &MatOperator) -> Result<OFrame> {
    ensure_same(&b.target, frame.source())?;
    ensure_same(&a.source, frame.target())?;
    let operator = a.compose(&frame.operator)?.compose(b)?;
    let b_star = b.adjoint().matrix;
    let pairs = frame
        .pairs
        .iter()
        .map(|p| FramePair { functional: &b_star * &p.functional, vector: &a.matrix * &p.vector })
        .collect();
    Ok(OFrame { operator, pairs, constant: None, gap: frame.gap })
}

/// Frame `(w_k, x'_k)` for `T* : W* → X*`. Partial sums are the adjoints of the
/// original ones, so the frame constant carries over.
pub fn dual_frame(frame: &OFrame) -> OFrame {
    let pairs = frame
        .pairs
        .iter()
        .map(|p| FramePair { functional: p.vector.clone(), vector: p.functional.clone() })
        .collect();
    OFrame { operator: frame.operator.adjoint(), pairs, constant: frame.constant, gap: frame.gap }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::op_norm;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn lp(p: f64, n: usize) -> SpaceSpec {
        SpaceSpec::lp(p, n).unwrap()
    }

    fn v(space: SpaceSpec, c: &[f64]) -> Vector {
        Vector::from_slice(space, c).unwrap()
    }

    #[test]
    fn partial_sums_of_basis_frame() {
        let s = lp(2.0, 2);
        let f = OFrame::basis(s);
        let x = v(s, &[3.0, 4.0]);
        assert_eq!(frame_partial_sum(&f, &x, 2).unwrap().coords.as_slice(), &[3.0, 4.0]);
        assert_eq!(frame_partial_sum(&f, &x, 1).unwrap().coords.as_slice(), &[3.0, 0.0]);
        assert_eq!(frame_partial_sum(&f, &x, 0).unwrap().coords.as_slice(), &[0.0, 0.0]);
        assert!(frame_partial_sum(&f, &x, 3).is_err());
        assert!(frame_partial_sum(&f, &v(lp(1.0, 2), &[1.0, 1.0]), 1).is_err());
    }

    #[test]
    fn diagonal_frame() {
        let s = lp(1.0, 2);
        let f = OFrame::diagonal(s, &[1.0, 0.5]);
        let y = frame_partial_sum(&f, &v(s, &[1.0, 1.0]), 2).unwrap();
        assert_eq!(y.coords.as_slice(), &[1.0, 0.5]);
        assert_eq!(f.full_residual(), 0.0);
    }

    #[test]
    fn grid_basis_frame_reconstructs() {
        let s = SpaceSpec::l1_grid(3).unwrap();
        let f = OFrame::basis(s);
        assert!(f.full_residual() <= 1e-15);
        let c = frame_constant(&f, false).unwrap();
        assert_abs_diff_eq!(c.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn frame_constants() {
        let f = OFrame::basis(lp(2.0, 2));
        let c = frame_constant(&f, false).unwrap();
        assert_eq!((c.value, c.certified), (1.0, true));

        // zero operator on ℓ1^1 expanded as e'_1 ⊗ 1 + e'_1 ⊗ (−1)
        let s = lp(1.0, 1);
        let pairs = vec![
            FramePair { functional: DVector::from_vec(vec![1.0]), vector: DVector::from_vec(vec![1.0]) },
            FramePair { functional: DVector::from_vec(vec![1.0]), vector: DVector::from_vec(vec![-1.0]) },
        ];
        let f = OFrame::new(MatOperator::zero(s, s), pairs).unwrap();
        assert_eq!(f.full_residual(), 0.0);
        let c = frame_constant(&f, false).unwrap();
        assert_eq!((c.value, c.index), (1.0, 1));
    }

    #[test]
    fn estimate_only_frames_need_the_flag() {
        let f = OFrame::basis(lp(3.0, 2));
        assert!(matches!(frame_constant(&f, false), Err(Error::EstimateOnly { .. })));
        let c = frame_constant(&f, true).unwrap();
        assert!(!c.certified);
    }

    #[test]
    fn composition_examples() {
        let s = lp(2.0, 2);
        let f = OFrame::basis(s);
        let id = MatOperator::identity(s);
        assert_eq!(compose_frame(&id, &f, &id).unwrap().pairs, f.pairs);
        let a = MatOperator::new(s, s, DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0]))).unwrap();
        let g = compose_frame(&a, &f, &id).unwrap();
        assert_eq!(g.operator.matrix, a.matrix);
        assert_eq!(g.full_residual(), 0.0);
    }

    #[test]
    fn dual_examples() {
        let s = lp(2.0, 2);
        let f = OFrame::basis(s);
        let d = dual_frame(&f);
        assert_eq!(d.pairs, f.pairs);
        assert_eq!(d.operator, f.operator);

        let s = lp(1.0, 2);
        let f = OFrame::diagonal(s, &[1.0, 0.5]);
        let d = dual_frame(&f);
        assert_eq!(*d.source(), lp(f64::INFINITY, 2));
        assert_eq!(d.operator.matrix, f.operator.matrix.transpose());
        assert_eq!(d.full_residual(), 0.0);
    }

    #[test]
    fn summing_basis_represents_identity() {
        for n in 1..8 {
            let f = OFrame::summing_basis(n).unwrap();
            assert_eq!(f.full_residual(), 0.0);
            // ‖S_N x‖ = max_{i≤N} |x_i − x_{N+1}| ≤ 2‖x‖
            assert!(frame_constant(&f, false).unwrap().value <= 2.0);
        }
    }

    #[test]
    fn json_shape_and_round_trip() {
        let mut f = OFrame::diagonal(lp(1.0, 2), &[1.0, 0.5]);
        f.constant = Some(1.0);
        f.gap = Some(0.0);
        let j = serde_json::to_value(&f).unwrap();
        for key in ["source", "target", "operator", "pairs", "K", "gap"] {
            assert!(j.get(key).is_some(), "missing {key}");
        }
        assert_eq!(j["pairs"][1]["vector"], serde_json::json!([0.0, 0.5]));
        let back: OFrame = serde_json::from_value(j).unwrap();
        assert_eq!(back, f);

        let mut bad = serde_json::to_value(&f).unwrap();
        bad["source"] = serde_json::to_value(lp(2.0, 2)).unwrap();
        assert!(serde_json::from_value::<OFrame>(bad).is_err());
    }

    fn mat(r: usize, c: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-2.0f64..2.0, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
    }

    proptest! {
        #[test]
        fn composition_matches_matrix_product(a in mat(3, 3), b in mat(3, 3), z in proptest::collection::vec(-3.0f64..3.0, 3)) {
            let (x, w) = (lp(1.0, 3), lp(f64::INFINITY, 3));
            let f = OFrame::diagonal(x, &[1.0, -0.5, 2.0]);
            let a = MatOperator::new(x, w, a).unwrap();
            let b = MatOperator::new(x, x, b).unwrap();
            let g = compose_frame(&a, &f, &b).unwrap();
            let z = v(x, &z);
            let lhs = frame_partial_sum(&g, &z, g.len()).unwrap();
            let rhs = a.apply(&f.operator.apply(&b.apply(&z).unwrap()).unwrap()).unwrap();
            prop_assert!((lhs.coords - rhs.coords).amax() <= 1e-9);
        }

        #[test]
        fn dual_of_dual_is_original(m in mat(3, 2), levels in 1u32..3) {
            let x = SpaceSpec::grid(1.0, levels).unwrap();
            let w = lp(f64::INFINITY, 3);
            let n = x.dim();
            let t = MatOperator::new(x, w, DMatrix::from_fn(3, n, |i, j| m[(i, j % 2)] * (j as f64 + 1.0))).unwrap();
            // frame through the coordinate expansion of the source
            let pairs = (0..n).map(|k| {
                let mut f = DVector::zeros(n);
                f[k] = 1.0 / x.weight();
                FramePair { functional: f, vector: t.matrix.column(k).into_owned() }
            }).collect();
            let f = OFrame::new(t, pairs).unwrap();
            prop_assert!(f.full_residual() <= 1e-12);
            let d = dual_frame(&f);
            prop_assert!(d.full_residual() <= 1e-12);
            let dd = dual_frame(&d);
            prop_assert!((dd.operator.matrix.clone() - &f.operator.matrix).amax() <= 1e-12);
            prop_assert!(dd.full_residual() <= 1e-12);
            // adjoint partial sums have the same norms
            let a = frame_constant(&f, false).unwrap().value;
            let b = frame_constant(&d, false).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
            prop_assert!(op_norm(&d.operator).unwrap().certified);
        }
    }
}
