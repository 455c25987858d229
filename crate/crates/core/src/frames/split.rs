//! Telescoping and the rank-one splitting of finite-rank blocks.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{frame_constant, FramePair, OFrame};
use crate::auerbach::{auerbach_in_ball, AuerbachOptions};
use crate::checks::BoundCheck;
use crate::error::{Error, Result};
use crate::operators::{image_basis, op_norm_checked, rows, MatOperator, RankOneOperator};
use crate::spaces::{Functional, Vector};
use crate::subspace::SubspaceBall;

/// Differences `Q_1 = S_1`, `Q_l = S_l − S_{l−1}` of an approximating chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telescope {
    pub blocks: Vec<MatOperator>,
    /// `‖S_N‖` for `N = 1..=len`.
    pub partial_norms: Vec<f64>,
    pub sup_norm: f64,
    pub target_norm: f64,
    /// `sup_N ‖S_N‖ / ‖T‖` (0 when `T = 0`).
    pub ratio: f64,
    pub certified: bool,
}

pub fn telescope(chain: &[MatOperator], t: &MatOperator, allow_estimates: bool) -> Result<Telescope> {
    if chain.is_empty() {
        return Err(Error::Empty("operator chain"));
    }
    for s in chain {
        s.same_shape(t)?;
    }
    let mut blocks = Vec::with_capacity(chain.len());
    blocks.push(chain[0].clone());
    for w in chain.windows(2) {
        blocks.push(w[1].sub(&w[0])?);
    }
    let mut certified = true;
    let mut partial_norms = Vec::with_capacity(chain.len());
    for s in chain {
        let r = op_norm_checked(s, allow_estimates)?;
        certified &= r.certified;
        partial_norms.push(r.value);
    }
    let tn = op_norm_checked(t, allow_estimates)?;
    certified &= tn.certified;
    let sup_norm = partial_norms.iter().copied().fold(0.0, f64::max);
    let ratio = if tn.value > 0.0 { sup_norm / tn.value } else { 0.0 };
    Ok(Telescope { blocks, partial_norms, sup_norm, target_norm: tn.value, ratio, certified })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitOptions {
    /// Relative singular-value cutoff for the image rank.
    pub rank_tol: f64,
    pub auerbach: AuerbachOptions,
    /// Gap above which the split is flagged.
    pub gap_ceiling: f64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions { rank_tol: 1e-10, auerbach: AuerbachOptions::default(), gap_ceiling: 1e-6 }
    }
}

/// The `m²` rank-one pieces of a rank-`m` block.
#[derive(Debug, Clone, Serialize)]
pub struct RankOneSplit {
    pub pieces: Vec<RankOneOperator>,
    pub rank: usize,
    /// Orthonormal basis of the block's image.
    #[serde(with = "rows")]
    pub image: DMatrix<f64>,
    pub gap: f64,
    /// `‖Σ_{i≤q} C_i‖` on the image, in the target norm, for `q = 1..=m²`.
    pub partial_norms: Vec<f64>,
    pub certified: bool,
    /// `2(1+gap)`.
    pub bound: f64,
    pub gap_warning: bool,
    /// Largest entry of `Σ pieces − A`.
    pub residual: f64,
}

/// Splits `a` into pieces `x ↦ (1/m) f_j(A x) e_j`, piece `i = r·m + j` for
/// `r, j < m`, where `(e_j, f_j)` is an Auerbach basis of the image.
pub fn split_rank_one(a: &MatOperator, opts: &SplitOptions) -> Result<RankOneSplit> {
    let img = image_basis(a, opts.rank_tol)?;
    if img.rank == 0 {
        return Err(Error::ZeroBlock);
    }
    let m = img.rank;
    let u = img.basis;
    let ball = SubspaceBall::new(&a.target, &u)?;
    let aub = auerbach_in_ball(&ball, &opts.auerbach)?;
    let mf = m as f64;
    // row j: f_j ∘ A as pairing coefficients on the source
    let analysis = &aub.functionals * u.transpose() * &a.matrix / (mf * a.source.weight());
    let vectors = &u * &aub.coords;
    let mut pieces = Vec::with_capacity(m * m);
    for _r in 0..m {
        for j in 0..m {
            pieces.push(RankOneOperator {
                functional: Functional { space: a.source, coords: analysis.row(j).transpose() },
                vector: Vector { space: a.target, coords: vectors.column(j).into_owned() },
            });
        }
    }
    let mut p = DMatrix::zeros(m, m);
    let mut partial_norms = Vec::with_capacity(m * m);
    let mut certified = ball.is_exact();
    for i in 0..m * m {
        let j = i % m;
        p.ger(1.0 / mf, &aub.coords.column(j), &aub.functionals.row(j).transpose(), 1.0);
        let (v, exact) = ball.op_norm(&p);
        certified &= exact;
        partial_norms.push(v);
    }
    let mut total = DMatrix::zeros(a.matrix.nrows(), a.matrix.ncols());
    for piece in &pieces {
        total += piece.as_matrix().matrix;
    }
    let residual = (total - &a.matrix).amax();
    Ok(RankOneSplit {
        pieces,
        rank: m,
        image: u,
        gap: aub.gap,
        partial_norms,
        certified: certified && aub.certified,
        bound: 2.0 * (1.0 + aub.gap),
        gap_warning: aub.gap > opts.gap_ceiling,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub split: SplitOptions,
    /// Relative tolerance on `Σ A_p = T`.
    pub sum_tol: f64,
    pub allow_estimates: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { split: SplitOptions::default(), sum_tol: 1e-9, allow_estimates: false }
    }
}

/// Summary of one block's split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSplit {
    pub block: usize,
    pub rank: usize,
    pub gap: f64,
    pub max_partial_norm: f64,
    pub block_norm: f64,
    pub gap_warning: bool,
    /// Position of the block's first piece in the frame.
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildReport {
    pub frame: OFrame,
    /// `max_N ‖Σ_{p≤N} A_p‖`.
    pub k_input: f64,
    pub frame_constant: f64,
    pub gap: f64,
    pub certified: bool,
    pub splits: Vec<BlockSplit>,
    pub skipped_blocks: Vec<usize>,
    pub block_residual: f64,
    pub checks: Vec<BoundCheck>,
}

/// Concatenates the rank-one splits of `blocks` into a frame for `t` and
/// checks the splitting bounds.
pub fn build_oframe(blocks: &[MatOperator], t: &MatOperator, opts: &BuildOptions) -> Result<BuildReport> {
    for b in blocks {
        b.same_shape(t)?;
    }
    let mut running = MatOperator::zero(t.source, t.target);
    let mut k_input = 0.0f64;
    let mut certified = true;
    let mut block_norms = Vec::with_capacity(blocks.len());
    for b in blocks {
        running = running.add(b)?;
        let r = op_norm_checked(&running, opts.allow_estimates)?;
        certified &= r.certified;
        k_input = k_input.max(r.value);
        let n = op_norm_checked(b, opts.allow_estimates)?;
        certified &= n.certified;
        block_norms.push(n.value);
    }
    let block_residual = (&running.matrix - &t.matrix).amax();
    let tolerance = opts.sum_tol * (1.0 + t.matrix.amax());
    if !(block_residual <= tolerance) {
        return Err(Error::BlockResidual { residual: block_residual, tolerance });
    }

    let mut pairs = Vec::new();
    let mut splits = Vec::new();
    let mut skipped = Vec::new();
    let mut gap = 0.0f64;
    let mut checks = Vec::new();
    for (p, b) in blocks.iter().enumerate() {
        let split = match split_rank_one(b, &opts.split) {
            Ok(s) => s,
            Err(Error::ZeroBlock) => {
                skipped.push(p);
                continue;
            }
            Err(e) => return Err(e),
        };
        certified &= split.certified;
        gap = gap.max(split.gap);
        let max_partial = split.partial_norms.iter().copied().fold(0.0, f64::max);
        checks.push(BoundCheck::at_most(
            format!("block {p}: split partial sums <= 2(1+gap)"),
            max_partial,
            split.bound + 1e-9,
        ));
        splits.push(BlockSplit {
            block: p,
            rank: split.rank,
            gap: split.gap,
            max_partial_norm: max_partial,
            block_norm: block_norms[p],
            gap_warning: split.gap_warning,
            offset: pairs.len(),
        });
        pairs.extend(
            split
                .pieces
                .into_iter()
                .map(|r| FramePair { functional: r.functional.coords, vector: r.vector.coords }),
        );
    }
    for (p, n) in block_norms.iter().enumerate() {
        checks.push(BoundCheck::at_most(format!("block {p}: norm <= 2K"), *n, 2.0 * k_input + 1e-9));
    }

    let mut frame = OFrame::new(t.clone(), pairs)?;
    let fc = frame_constant(&frame, opts.allow_estimates)?;
    certified &= fc.certified;
    frame.constant = Some(fc.value);
    frame.gap = Some(gap);
    checks.push(BoundCheck::at_most(
        "frame constant <= 5K(1+gap)",
        fc.value,
        5.0 * k_input * (1.0 + gap) + 1e-6,
    ));
    let t_norm = op_norm_checked(t, opts.allow_estimates)?.value;
    checks.push(BoundCheck::at_most(
        "full sum reproduces T (max entry)",
        frame.full_residual(),
        1e-9 * (1.0 + t_norm),
    ));
    Ok(BuildReport {
        frame,
        k_input,
        frame_constant: fc.value,
        gap,
        certified,
        splits,
        skipped_blocks: skipped,
        block_residual,
        checks,
    })
}
