//! Unit balls of subspaces `E = span(B) ⊂ W`, described in the coordinates
//! `u ↦ B u`.
//!
//! For `ℓ_1`/`ℓ_∞`-type norms the ball is a polytope and its vertices are
//! enumerated, which makes linear maximization and operator norms over `E`
//! exact. For `ℓ_2`-type norms the ball is an ellipsoid handled in closed form.
//! Other exponents fall back to iterative estimates.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spaces::SpaceSpec;

/// Cap on enumerated vertex candidates.
pub const MAX_VERTEX_CANDIDATES: u128 = 4_000_000;

const FEASIBILITY_SLACK: f64 = 1e-10;

#[derive(Debug, Clone)]
enum Geometry {
    /// One representative of every `±` vertex pair, each of norm one.
    Polytope(Vec<DVector<f64>>),
    /// Upper Cholesky factor `R` of the weighted Gram matrix `w BᵀB = RᵀR`.
    Ellipsoid(DMatrix<f64>),
    Smooth,
}

/// The unit ball `{u : ‖B u‖_W ≤ 1}`.
#[derive(Debug, Clone)]
pub struct SubspaceBall {
    space: SpaceSpec,
    basis: DMatrix<f64>,
    geometry: Geometry,
}

/// Result of maximizing a linear form over the ball.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMax {
    pub value: f64,
    pub argmax: DVector<f64>,
    pub exact: bool,
}

impl SubspaceBall {
    pub fn new(space: &SpaceSpec, basis: &DMatrix<f64>) -> Result<Self> {
        space.check_len(basis.nrows())?;
        let m = basis.ncols();
        if m == 0 {
            return Err(Error::Empty("subspace basis"));
        }
        let rank = numerical_rank(basis, 1e-10);
        if rank < m {
            return Err(Error::RankDeficient { rank, expected: m });
        }
        let geometry = if space.is_l1_type() {
            Geometry::Polytope(l1_vertices(space, basis)?)
        } else if space.is_linf_type() {
            Geometry::Polytope(linf_vertices(basis)?)
        } else if space.is_l2_type() {
            let gram = basis.transpose() * basis * space.weight();
            let chol = gram.cholesky().ok_or(Error::RankDeficient { rank: 0, expected: m })?;
            Geometry::Ellipsoid(chol.l().transpose())
        } else {
            Geometry::Smooth
        };
        Ok(SubspaceBall { space: *space, basis: basis.clone(), geometry })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Whether maximizations over this ball are exact.
    pub fn is_exact(&self) -> bool {
        !matches!(self.geometry, Geometry::Smooth)
    }

    /// Vertex representatives (one per `±` pair) for polyhedral balls.
    pub fn vertices(&self) -> Option<&[DVector<f64>]> {
        match &self.geometry {
            Geometry::Polytope(v) => Some(v),
            _ => None,
        }
    }

    /// `‖B u‖_W`.
    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.space.norm_of((&self.basis * u).as_slice())
    }

    /// `sup{ φ·u : ‖B u‖ ≤ 1 }` with a maximizer. Ties among vertices go to
    /// the first in enumeration order.
    pub fn maximize(&self, phi: &DVector<f64>) -> LinearMax {
        match &self.geometry {
            Geometry::Polytope(vertices) => {
                let mut best = (0usize, f64::NEG_INFINITY, 1.0);
                for (i, v) in vertices.iter().enumerate() {
                    let d = phi.dot(v);
                    if d.abs() > best.1 {
                        best = (i, d.abs(), if d < 0.0 { -1.0 } else { 1.0 });
                    }
                }
                LinearMax { value: best.1, argmax: &vertices[best.0] * best.2, exact: true }
            }
            Geometry::Ellipsoid(r) => {
                // u = R⁻¹ y with |y|_2 ≤ 1, φ·u = (R⁻ᵀ φ)·y
                let z = r.transpose().solve_lower_triangular(phi).expect("nonsingular factor");
                let value = z.norm();
                let argmax = if value > 0.0 {
                    r.solve_upper_triangular(&(&z / value)).expect("nonsingular factor")
                } else {
                    self.first_unit()
                };
                LinearMax { value, argmax, exact: true }
            }
            Geometry::Smooth => self.maximize_smooth(phi),
        }
    }

    /// Dual norm on `E` of the functional with coefficients `phi` in the
    /// subspace coordinates.
    pub fn dual_norm(&self, phi: &DVector<f64>) -> f64 {
        self.maximize(phi).value
    }

    /// `sup{ ‖B P u‖ : ‖B u‖ ≤ 1 }` for a coordinate operator `P` on `E`, and
    /// whether the value is exact.
    pub fn op_norm(&self, p: &DMatrix<f64>) -> (f64, bool) {
        match &self.geometry {
            Geometry::Polytope(vertices) => {
                // a convex function attains its max over a polytope at a vertex
                let bp = &self.basis * p;
                let v = vertices
                    .iter()
                    .map(|u| self.space.norm_of((&bp * u).as_slice()))
                    .fold(0.0f64, f64::max);
                (v, true)
            }
            Geometry::Ellipsoid(r) => {
                let rinv = r.clone().try_inverse().expect("nonsingular factor");
                let conj = r * p * rinv;
                (linalg::singular_values(&conj)[0], true)
            }
            Geometry::Smooth => (self.op_norm_estimate(p), false),
        }
    }

    fn first_unit(&self) -> DVector<f64> {
        let mut u = DVector::zeros(self.dim());
        u[0] = 1.0;
        let n = self.norm(&u);
        u / n
    }

    /// Minimizes `‖B u‖_p` on the hyperplane `φ·u = 1` by damped Newton.
    fn maximize_smooth(&self, phi: &DVector<f64>) -> LinearMax {
        let m = self.dim();
        let pn = phi.norm();
        if pn == 0.0 {
            return LinearMax { value: 0.0, argmax: self.first_unit(), exact: false };
        }
        let p = self.space.exponent().value();
        let w = self.space.weight();
        let u0 = phi / (pn * pn);
        // orthonormal complement of φ
        let qr = DMatrix::from_fn(m, m, |i, j| if j == 0 { phi[i] } else if i + 1 == j { 1.0 } else { 0.0 }).qr();
        let q = qr.q();
        let null = q.columns(1, m - 1).into_owned();
        let bnull = &self.basis * &null;
        let objective = |y: &DVector<f64>| -> f64 {
            let r = &self.basis * (&u0 + &null * y);
            w * r.iter().map(|x| x.abs().powf(p)).sum::<f64>()
        };
        let mut y = DVector::zeros(m - 1);
        let mut f = objective(&y);
        for _ in 0..100 {
            if m == 1 {
                break;
            }
            let r = &self.basis * (&u0 + &null * &y);
            let grad_r = r.map(|x| w * p * x.abs().powf(p - 1.0) * x.signum());
            let hess_r = r.map(|x| w * p * (p - 1.0) * x.abs().max(1e-12).powf(p - 2.0));
            let g = bnull.transpose() * &grad_r;
            if g.norm() <= 1e-14 * (1.0 + f) {
                break;
            }
            let mut h = bnull.transpose() * DMatrix::from_diagonal(&hess_r) * &bnull;
            for i in 0..m - 1 {
                h[(i, i)] += 1e-14 * (1.0 + h[(i, i)]);
            }
            let step = h.cholesky().map(|c| c.solve(&g)).unwrap_or_else(|| g.clone());
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand = &y - &step * t;
                let fc = objective(&cand);
                if fc < f {
                    y = cand;
                    f = fc;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let u = &u0 + &null * &y;
        let nu = self.norm(&u);
        LinearMax { value: 1.0 / nu, argmax: u / nu, exact: false }
    }

    fn op_norm_estimate(&self, p: &DMatrix<f64>) -> f64 {
        let m = self.dim();
        let bp = &self.basis * p;
        let w = self.space.weight();
        let mut best = 0.0f64;
        for r in 0..8u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(0xF8A3E ^ r);
            let raw = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
            let mut u: DVector<f64> = &raw / self.norm(&raw);
            let mut val = self.space.norm_of((&bp * &u).as_slice());
            for _ in 0..100 {
                let y = &bp * &u;
                let g = DVector::from_vec(self.space.norming_functional(y.as_slice()));
                let phi = bp.transpose() * g * w;
                let next = self.maximize_smooth(&phi).argmax;
                let nv = self.space.norm_of((&bp * &next).as_slice());
                if nv <= val * (1.0 + 1e-14) {
                    break;
                }
                u = next;
                val = nv;
            }
            best = best.max(val);
        }
        best
    }
}

pub(crate) fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let sv = linalg::singular_values(m);
    let smax = sv[0];
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * smax).count()
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i + 1) as u128)
}

/// Lexicographic `k`-subsets of `0..n`.
pub(crate) fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // rightmost position that can still advance
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn canonical_sign(mut u: DVector<f64>) -> DVector<f64> {
    if let Some(first) = u.iter().find(|x| x.abs() > 1e-14) {
        if *first < 0.0 {
            u.neg_mut();
        }
    }
    u
}

/// Vertices of `{u : ‖Bu‖_1 ≤ 1}`: directions where `Bu` vanishes on `m−1`
/// independent rows.
fn l1_vertices(space: &SpaceSpec, basis: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let (n, m) = basis.shape();
    let count = binomial(n, m - 1);
    if count > MAX_VERTEX_CANDIDATES {
        return Err(Error::TooLarge { count, limit: MAX_VERTEX_CANDIDATES });
    }
    let scale = basis.amax();
    let mut out = Vec::new();
    if m == 1 {
        let u = DVector::from_element(1, 1.0);
        let nu = space.norm_of((basis * &u).as_slice());
        out.push(u / nu);
        return Ok(out);
    }
    for_each_subset(n, m - 1, |rows| {
        let sub = DMatrix::from_fn(m - 1, m, |i, j| basis[(rows[i], j)]);
        if let Some(u) = null_direction(&sub, scale) {
            let nu = space.norm_of((basis * &u).as_slice());
            if nu > 0.0 {
                out.push(canonical_sign(u / nu));
            }
        }
    });
    dedup(&mut out);
    Ok(out)
}

/// Unit null vector of a `(m−1) × m` matrix of full row rank, via signed
/// maximal minors.
fn null_direction(sub: &DMatrix<f64>, scale: f64) -> Option<DVector<f64>> {
    let m = sub.ncols();
    let mut u = DVector::zeros(m);
    for k in 0..m {
        let minor = sub.clone().remove_column(k);
        let d = if minor.nrows() == 0 { 1.0 } else { minor.determinant() };
        u[k] = if k % 2 == 0 { d } else { -d };
    }
    let nu = u.norm();
    if nu <= 1e-10 * scale.max(1e-300).powi((m - 1) as i32) {
        return None;
    }
    Some(u / nu)
}

/// Vertices of `{u : ‖Bu‖_∞ ≤ 1}`: solutions of `B_S u = s` for `m`
/// independent rows `S` and signs `s` (first sign fixed to `+`).
fn linf_vertices(basis: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let (n, m) = basis.shape();
    let count = binomial(n, m).saturating_mul(1u128 << (m - 1).min(100));
    if count > MAX_VERTEX_CANDIDATES {
        return Err(Error::TooLarge { count, limit: MAX_VERTEX_CANDIDATES });
    }
    let scale = basis.amax();
    let mut out = Vec::new();
    for_each_subset(n, m, |rows| {
        let sub = DMatrix::from_fn(m, m, |i, j| basis[(rows[i], j)]);
        let lu = sub.lu();
        if lu.determinant().abs() <= 1e-10 * scale.powi(m as i32) {
            return;
        }
        for mask in 0..(1u64 << (m - 1)) {
            let s = DVector::from_fn(m, |i, _| if i > 0 && (mask >> (i - 1)) & 1 == 1 { -1.0 } else { 1.0 });
            let Some(u) = lu.solve(&s) else { continue };
            let bu = basis * &u;
            if bu.amax() <= 1.0 + FEASIBILITY_SLACK {
                out.push(canonical_sign(u));
            }
        }
    });
    dedup(&mut out);
    Ok(out)
}

fn dedup(v: &mut Vec<DVector<f64>>) {
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(v.len());
    for u in v.drain(..) {
        let scale = 1.0 + u.amax();
        if !kept.iter().any(|k| (k - &u).amax() <= 1e-12 * scale) {
            kept.push(u);
        }
    }
    *v = kept;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lp(p: f64, n: usize) -> SpaceSpec {
        SpaceSpec::lp(p, n).unwrap()
    }

    #[test]
    fn subsets_are_lexicographic() {
        let mut all = Vec::new();
        for_each_subset(4, 2, |s| all.push(s.to_vec()));
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut count = 0;
        for_each_subset(5, 0, |_| count += 1);
        assert_eq!(count, 1);
        let mut count = 0;
        for_each_subset(5, 5, |_| count += 1);
        assert_eq!(count, 1);
        assert_eq!(binomial(12, 5), 792);
    }

    #[test]
    fn full_space_vertices() {
        let id = DMatrix::identity(3, 3);
        let ball = SubspaceBall::new(&lp(1.0, 3), &id).unwrap();
        assert_eq!(ball.vertices().unwrap().len(), 3);
        let ball = SubspaceBall::new(&lp(f64::INFINITY, 3), &id).unwrap();
        assert_eq!(ball.vertices().unwrap().len(), 4);
    }

    #[test]
    fn dual_norms_on_full_space_match_closed_forms() {
        let phi = DVector::from_vec(vec![1.0, -3.0, 2.0]);
        let id = DMatrix::identity(3, 3);
        for p in [1.0, 2.0, f64::INFINITY, 3.0] {
            let s = lp(p, 3);
            let ball = SubspaceBall::new(&s, &id).unwrap();
            let r = ball.maximize(&phi);
            assert_abs_diff_eq!(r.value, s.dual_norm_of(phi.as_slice()), epsilon = 1e-8);
            assert_abs_diff_eq!(ball.norm(&r.argmax), 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(phi.dot(&r.argmax), r.value, epsilon = 1e-9);
        }
    }

    #[test]
    fn diagonal_line_in_linf() {
        // E = span{(1,1,0)} in l_inf^3: unit vector (1,1,0), φ = 2 -> 2
        let b = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]);
        let ball = SubspaceBall::new(&lp(f64::INFINITY, 3), &b).unwrap();
        let r = ball.maximize(&DVector::from_element(1, 2.0));
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn op_norm_of_identity_is_one() {
        let b = DMatrix::from_row_slice(4, 2, &[1.0, 0.5, -0.3, 1.0, 2.0, 0.1, 0.0, 1.0]);
        for p in [1.0, 2.0, f64::INFINITY] {
            let ball = SubspaceBall::new(&lp(p, 4), &b).unwrap();
            let (v, exact) = ball.op_norm(&DMatrix::identity(2, 2));
            assert!(exact);
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn rank_deficient_basis_is_rejected() {
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(matches!(SubspaceBall::new(&lp(1.0, 3), &b), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn polytope_max_matches_dense_sampling() {
        // brute force: sample many directions, normalize, take the max
        let b = DMatrix::from_row_slice(4, 2, &[1.0, 0.2, -0.7, 1.0, 0.4, 0.4, 1.5, -0.3]);
        let phi = DVector::from_vec(vec![0.7, -1.3]);
        for p in [1.0, f64::INFINITY] {
            let s = lp(p, 4);
            let ball = SubspaceBall::new(&s, &b).unwrap();
            let exact = ball.dual_norm(&phi);
            let mut best = 0.0f64;
            for k in 0..200_000 {
                let t = std::f64::consts::PI * k as f64 / 200_000.0;
                let u = DVector::from_vec(vec![t.cos(), t.sin()]);
                best = best.max(phi.dot(&u).abs() / ball.norm(&u));
            }
            assert!(best <= exact + 1e-12);
            assert!(best >= exact * (1.0 - 1e-4));
        }
    }
}
