//! Finite-rank approximation certificates.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{op_norm_checked, MatOperator};
use crate::spaces::{ensure_same, Vector};

/// A finite-rank `R` with `‖R‖ ≤ C‖T‖` approximating `T` on a finite family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BapCertificate {
    #[serde(rename = "C")]
    pub c: f64,
    pub eps: f64,
    pub rank: usize,
    pub operator_norm: f64,
    pub witnesses: Vec<MatOperator>,
    pub witness_norms: Vec<f64>,
    /// `sup_k ‖R x_k − T x_k‖` per witness.
    pub errors: Vec<f64>,
    pub certified: bool,
}

/// Truncated-SVD approximant of rank `rank` (or `T` itself when `rank` is
/// `None` or not below the numerical rank), scaled down if needed so that
/// `‖R‖ ≤ C‖T‖`. Fails when the deviation on `family` exceeds `eps`.
pub fn bap_certificate(
    t: &MatOperator,
    family: &[Vector],
    eps: f64,
    c: f64,
    rank: Option<usize>,
    allow_estimates: bool,
) -> Result<BapCertificate> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if !(c >= 1.0) {
        return Err(Error::InvalidArgument(format!("C must be at least 1, got {c}")));
    }
    for x in family {
        ensure_same(&x.space, &t.source)?;
    }
    let tn = op_norm_checked(t, allow_estimates)?;
    let svd = linalg::svd(&t.matrix);
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let full_rank = svd.s.iter().filter(|s| **s > 1e-12 * smax).count();
    let r = rank.map_or(full_rank, |r| r.min(full_rank));
    let mut matrix = if r == full_rank {
        t.matrix.clone()
    } else {
        let mut m = DMatrix::zeros(t.matrix.nrows(), t.matrix.ncols());
        for i in 0..r {
            m.ger(svd.s[i], &svd.u.column(i), &svd.v.column(i), 1.0);
        }
        m
    };
    let mut rn = op_norm_checked(&MatOperator { source: t.source, target: t.target, matrix: matrix.clone() }, allow_estimates)?;
    let cap = c * tn.value;
    let mut norm = rn.value;
    if norm > cap && norm > 0.0 {
        matrix *= cap / norm;
        rn = op_norm_checked(&MatOperator { source: t.source, target: t.target, matrix: matrix.clone() }, allow_estimates)?;
        norm = rn.value;
    }
    let witness = MatOperator { source: t.source, target: t.target, matrix };
    let deviation = max_deviation(&witness, t, family);
    if !(deviation <= eps) {
        return Err(Error::Infeasible { rank: r, deviation, eps });
    }
    Ok(BapCertificate {
        c,
        eps,
        rank: r,
        operator_norm: tn.value,
        witnesses: vec![witness],
        witness_norms: vec![norm],
        errors: vec![deviation],
        certified: tn.certified && rn.certified,
    })
}

fn max_deviation(r: &MatOperator, t: &MatOperator, family: &[Vector]) -> f64 {
    let d = &r.matrix - &t.matrix;
    family
        .iter()
        .map(|x| t.target.norm_of((&d * &x.coords).as_slice()))
        .fold(0.0, f64::max)
}

/// `ε₀ = ε / (2 + C)`.
pub fn net_radius(eps: f64, c: f64) -> f64 {
    eps / (2.0 + c)
}

/// `‖T‖ε₀ + sup_net ‖R x_k − T x_k‖ + ‖R‖ε₀`, the deviation bound on every
/// point within `ε₀` of the net.
pub fn net_bound(t_norm: f64, r_norm: f64, net_deviation: f64, eps0: f64) -> f64 {
    t_norm * eps0 + net_deviation + r_norm * eps0
}

/// Transfer of a net deviation to a compact set covered by the net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetCertificate {
    pub eps: f64,
    pub eps0: f64,
    #[serde(rename = "C")]
    pub c: f64,
    /// `(2 + C)·ε₀ = ε` up to rounding.
    pub radius_identity: bool,
    pub t_norm: f64,
    pub r_norm: f64,
    pub net_deviation: f64,
    /// Largest distance from a point to the net.
    pub covering_radius: f64,
    pub bound: f64,
    /// Largest deviation over the covered points.
    pub max_deviation: f64,
    /// Points obey `bound`, and `bound ≤ ε` whenever `‖T‖ ≤ 1`, `‖R‖ ≤ C`,
    /// and the net deviation is at most `ε₀`.
    pub pass: bool,
    pub within_eps: bool,
}

/// Checks that `net` is an `ε₀`-net of `points` and that the deviation of `r`
/// from `t` on the points stays below the net bound.
pub fn certify_net(
    t: &MatOperator,
    r: &MatOperator,
    net: &[Vector],
    points: &[Vector],
    eps: f64,
    c: f64,
    allow_estimates: bool,
) -> Result<NetCertificate> {
    r.same_shape(t)?;
    if net.is_empty() {
        return Err(Error::Empty("net"));
    }
    for x in net.iter().chain(points) {
        ensure_same(&x.space, &t.source)?;
    }
    let eps0 = net_radius(eps, c);
    let src = t.source;
    let covering_radius = points
        .iter()
        .map(|p| {
            net.iter()
                .map(|q| src.norm_of((&p.coords - &q.coords).as_slice()))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    if covering_radius > eps0 * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "net does not cover the points: covering radius {covering_radius:e} exceeds {eps0:e}"
        )));
    }
    let tn = op_norm_checked(t, allow_estimates)?.value;
    let rn = op_norm_checked(r, allow_estimates)?.value;
    let net_deviation = max_deviation(r, t, net);
    let bound = net_bound(tn, rn, net_deviation, eps0);
    let max_dev = max_deviation(r, t, points);
    let slack = 1e-12 * (1.0 + bound);
    let hypotheses = tn <= 1.0 + 1e-12 && rn <= c * (1.0 + 1e-12) && net_deviation <= eps0 * (1.0 + 1e-12);
    Ok(NetCertificate {
        eps,
        eps0,
        c,
        radius_identity: ((2.0 + c) * eps0 - eps).abs() <= 4.0 * f64::EPSILON * eps,
        t_norm: tn,
        r_norm: rn,
        net_deviation,
        covering_radius,
        bound,
        max_deviation: max_dev,
        pass: max_dev <= bound + slack,
        within_eps: !hypotheses || bound <= eps * (1.0 + 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SpaceSpec;
    use nalgebra::DVector;

    fn diag3() -> MatOperator {
        let s = SpaceSpec::lp(2.0, 3).unwrap();
        MatOperator::new(s, s, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.1, 0.01]))).unwrap()
    }

    fn basis(t: &MatOperator) -> Vec<Vector> {
        (0..3).map(|i| Vector::basis(t.source, i)).collect()
    }

    #[test]
    fn unrestricted_rank_reproduces_t() {
        let t = diag3();
        let c = bap_certificate(&t, &basis(&t), 1e-9, 1.0, None, false).unwrap();
        assert_eq!(c.errors, vec![0.0]);
        assert_eq!(c.witnesses[0], t);
        assert_eq!(c.rank, 3);
    }

    #[test]
    fn truncated_svd_feasibility() {
        let t = diag3();
        let fam = basis(&t);
        let c = bap_certificate(&t, &fam, 0.2, 1.0, Some(1), false).unwrap();
        assert_eq!(c.rank, 1);
        assert!((c.errors[0] - 0.1).abs() < 1e-15);
        assert!(c.witness_norms[0] <= c.c * c.operator_norm + 1e-9);
        let e = bap_certificate(&t, &fam, 0.05, 1.0, Some(1), false).unwrap_err();
        assert!(matches!(e, Error::Infeasible { rank: 1, .. }));
        assert!(bap_certificate(&t, &fam, 0.05, 1.0, Some(2), false).is_ok());
    }

    #[test]
    fn invalid_parameters() {
        let t = diag3();
        assert!(bap_certificate(&t, &[], 0.0, 1.0, None, false).is_err());
        assert!(bap_certificate(&t, &[], 1.0, 0.5, None, false).is_err());
    }

    #[test]
    fn net_arithmetic() {
        assert_eq!(net_radius(1.0, 2.0), 0.25);
        // ε₀ + ε₀ + Cε₀ with ‖T‖ = 1, ‖R‖ = C = 2 and net deviation ε₀
        assert_eq!(net_bound(1.0, 2.0, 0.25, 0.25), 1.0);
    }

    #[test]
    fn net_certificate_on_a_segment() {
        let s = SpaceSpec::lp(1.0, 2).unwrap();
        let t = MatOperator::identity(s);
        let r = MatOperator::new(s, s, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.8]))).unwrap();
        let net: Vec<Vector> = (0..=4).map(|i| Vector::from_slice(s, &[0.0, i as f64 * 0.25]).unwrap()).collect();
        let pts: Vec<Vector> = (0..=40).map(|i| Vector::from_slice(s, &[0.0, i as f64 * 0.025]).unwrap()).collect();
        let cert = certify_net(&t, &r, &net, &pts, 1.0, 2.0, false).unwrap();
        assert!(cert.radius_identity && cert.pass && cert.within_eps);
        assert!(cert.max_deviation <= 1.0);
        let sparse = &net[..2];
        assert!(certify_net(&t, &r, sparse, &pts, 1.0, 2.0, false).is_err());
    }
}
