//! Auerbach bases by cyclic determinant ascent.
//!
//! Each step replaces one basis vector by the unit vector of the subspace
//! maximizing `|det|` with the others held fixed. The determinant is linear in
//! the replaced column, so the step is a linear maximization over the unit ball
//! of the subspace, which `SubspaceBall` solves exactly for polyhedral and
//! Euclidean norms. At a coordinate-wise maximum every biorthogonal functional
//! has dual norm one; the reported `gap` measures how far from that the result
//! is, computed by direct dual-norm evaluation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::rows;
use crate::spaces::{SpaceSpec, Vector};
use crate::subspace::{binomial, for_each_subset, SubspaceBall};

/// Relative improvement below which a replacement is not taken.
const IMPROVEMENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuerbachOptions {
    /// Maximum number of full sweeps per start.
    pub sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
    /// For polyhedral balls with at most this many `m`-tuples of vertices,
    /// the best tuple is found by enumeration and used as an extra start.
    pub max_tuples: u128,
}

impl Default for AuerbachOptions {
    fn default() -> Self {
        AuerbachOptions { sweeps: 200, restarts: 4, seed: 0xF8A3E, max_tuples: 200_000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuerbachBasis {
    pub space: SpaceSpec,
    /// The input basis `B` of the subspace (`n × m`).
    #[serde(with = "rows")]
    pub subspace: DMatrix<f64>,
    /// Column `j` holds the coordinates of `e_j` in `B`.
    #[serde(with = "rows")]
    pub coords: DMatrix<f64>,
    pub vectors: Vec<Vector>,
    /// Row `j` holds `f_j` as coefficients on `B`-coordinates, i.e. the rows
    /// of `coords⁻¹`.
    #[serde(with = "rows")]
    pub functionals: DMatrix<f64>,
    /// `|det coords|`.
    pub det: f64,
    /// `max_j ‖f_j‖_{E*} − 1`, clamped at zero.
    pub gap: f64,
    /// Dual norms of `f_j` on the subspace.
    pub dual_norms: Vec<f64>,
    /// Whether `gap` comes from exact dual norms.
    pub certified: bool,
    /// `false` when the sweep budget ran out before the ascent stabilized.
    pub converged: bool,
    /// `det` is the largest volume spanned by `m` points of the unit ball,
    /// established by vertex enumeration.
    pub volume_maximal: bool,
    pub sweeps: usize,
    /// `|det|` after each sweep of the winning start.
    pub trace: Vec<f64>,
}

impl AuerbachBasis {
    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    /// `max |f_i(e_j) − δ_ij|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let m = self.dim();
        (&self.functionals * &self.coords - DMatrix::identity(m, m)).amax()
    }

    /// `Σ_j f_j(u) e_j` in `B`-coordinates.
    pub fn reconstruct(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.coords * (&self.functionals * u)
    }
}

pub fn auerbach_basis(subspace: &DMatrix<f64>, space: &SpaceSpec, budget: usize) -> Result<AuerbachBasis> {
    let opts = AuerbachOptions { sweeps: budget, ..Default::default() };
    auerbach_basis_with(subspace, space, &opts)
}

pub fn auerbach_basis_with(
    subspace: &DMatrix<f64>,
    space: &SpaceSpec,
    opts: &AuerbachOptions,
) -> Result<AuerbachBasis> {
    let ball = SubspaceBall::new(space, subspace)?;
    auerbach_in_ball(&ball, opts)
}

/// Runs the ascent on a prepared ball.
pub fn auerbach_in_ball(ball: &SubspaceBall, opts: &AuerbachOptions) -> Result<AuerbachBasis> {
    let m = ball.dim();
    let mut best: Option<Ascent> = None;
    for r in 0..opts.restarts.max(1) {
        let start = if r == 0 {
            normalized_identity(ball)
        } else {
            random_start(ball, opts.seed.wrapping_add(r as u64))?
        };
        let run = ascend(ball, start, opts.sweeps);
        if best.as_ref().is_none_or(|b| run.det > b.det) {
            best = Some(run);
        }
    }
    let mut volume_maximal = false;
    if let Some(start) = best_vertex_tuple(ball, opts.max_tuples) {
        let run = ascend(ball, start, opts.sweeps);
        volume_maximal = true;
        if best.as_ref().is_none_or(|b| run.det > b.det) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one start");
    let functionals = run
        .coords
        .clone()
        .try_inverse()
        .ok_or(Error::RankDeficient { rank: m.saturating_sub(1), expected: m })?;
    let dual_norms: Vec<f64> = (0..m)
        .map(|j| ball.dual_norm(&functionals.row(j).transpose()))
        .collect();
    let gap = (dual_norms.iter().copied().fold(f64::NEG_INFINITY, f64::max) - 1.0).max(0.0);
    let vectors = (0..m)
        .map(|j| Vector { space: *ball.space(), coords: ball.basis() * run.coords.column(j) })
        .collect();
    Ok(AuerbachBasis {
        space: *ball.space(),
        subspace: ball.basis().clone(),
        coords: run.coords,
        vectors,
        functionals,
        det: run.det,
        gap,
        dual_norms,
        certified: ball.is_exact(),
        converged: run.converged,
        volume_maximal,
        sweeps: run.sweeps,
        trace: run.trace,
    })
}

struct Ascent {
    coords: DMatrix<f64>,
    det: f64,
    converged: bool,
    sweeps: usize,
    trace: Vec<f64>,
}

fn ascend(ball: &SubspaceBall, mut coords: DMatrix<f64>, sweeps: usize) -> Ascent {
    let m = coords.ncols();
    let mut det = coords.determinant().abs();
    let mut trace = vec![det];
    let mut converged = false;
    let mut used = 0;
    for _ in 0..sweeps {
        used += 1;
        let mut improved = false;
        for j in 0..m {
            let lu = coords.clone().lu();
            let d = lu.determinant();
            let Some(inv) = lu.try_inverse() else { break };
            // det(coords with column j replaced by u) = cofactor · u
            let cofactor: DVector<f64> = inv.row(j).transpose() * d;
            let step = ball.maximize(&cofactor);
            if step.value > det * (1.0 + IMPROVEMENT) {
                coords.set_column(j, &step.argmax);
                det = coords.determinant().abs();
                improved = true;
            }
        }
        trace.push(det);
        if !improved {
            converged = true;
            break;
        }
    }
    Ascent { coords, det, converged, sweeps: used, trace }
}

/// The `m` vertices of a polyhedral ball spanning the largest `|det|`. As
/// `|det|` is convex in each column, this is the maximum over the whole ball.
fn best_vertex_tuple(ball: &SubspaceBall, max_tuples: u128) -> Option<DMatrix<f64>> {
    let vertices = ball.vertices()?;
    let m = ball.dim();
    if binomial(vertices.len(), m) > max_tuples {
        return None;
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut c = DMatrix::zeros(m, m);
    for_each_subset(vertices.len(), m, |idx| {
        for (j, &i) in idx.iter().enumerate() {
            c.set_column(j, &vertices[i]);
        }
        let d = c.determinant().abs();
        if best.as_ref().is_none_or(|b| d > b.0) {
            best = Some((d, idx.to_vec()));
        }
    });
    let (d, idx) = best?;
    (d > 0.0).then(|| DMatrix::from_fn(m, m, |i, j| vertices[idx[j]][i]))
}

fn normalized_identity(ball: &SubspaceBall) -> DMatrix<f64> {
    let m = ball.dim();
    let mut c = DMatrix::identity(m, m);
    for j in 0..m {
        let n = ball.norm(&c.column(j).into_owned());
        c.column_mut(j).unscale_mut(n);
    }
    c
}

fn random_start(ball: &SubspaceBall, seed: u64) -> Result<DMatrix<f64>> {
    let m = ball.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..16 {
        let mut c = DMatrix::from_fn(m, m, |_, _| StandardNormal.sample(&mut rng));
        for j in 0..m {
            let n = ball.norm(&c.column(j).into_owned());
            c.column_mut(j).unscale_mut(n);
        }
        if c.determinant().abs() > 1e-8 {
            return Ok(c);
        }
    }
    Ok(normalized_identity(ball))
}
