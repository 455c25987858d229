//! Seeded inputs shared by the benchmarks.

use nalgebra::DMatrix;
use oframe_core::{MatOperator, SpaceSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(seed: u64, r: usize, c: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng))
}

pub fn operator(seed: u64, source: SpaceSpec, target: SpaceSpec) -> MatOperator {
    MatOperator::new(source, target, gaussian(seed, target.dim(), source.dim())).expect("dimensions match")
}

/// `[S_1, …, S_len]` with `S_N` keeping the first `⌈N n / len⌉` columns of `T`.
pub fn truncation_chain(t: &MatOperator, len: usize) -> Vec<MatOperator> {
    let n = t.source.dim();
    (1..=len)
        .map(|step| {
            let d = (step * n).div_ceil(len);
            let mut m = t.matrix.clone();
            for j in d..n {
                m.column_mut(j).fill(0.0);
            }
            MatOperator { source: t.source, target: t.target, matrix: m }
        })
        .collect()
}
