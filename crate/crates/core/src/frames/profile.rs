//! Tail diagnostics over nested truncations.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::OFrame;
use crate::error::{Error, Result};
use crate::spaces::{ensure_same, Functional, SpaceSpec, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    Shrinking,
    BoundedlyComplete,
}

/// Values of `sup_s ‖Σ_{n<k≤m} c_k(s) z_k‖` over windows `(n, m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailProfile {
    pub kind: TailKind,
    pub windows: Vec<(usize, usize)>,
    pub values: Vec<f64>,
    /// `per_sample[s][i]` is the value of sample `s` on window `i`.
    pub per_sample: Vec<Vec<f64>>,
    /// Per sample `max_N ‖Σ_{k≤N} c_k w_k‖`; empty for shrinking profiles.
    pub partial_sum_sup: Vec<f64>,
    /// Samples are the full extreme-point set of the relevant unit ball, so
    /// `values` are exact suprema.
    pub exhaustive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    pub samples: usize,
    pub seed: u64,
    /// Largest dimension for extreme-point enumeration of a polyhedral ball.
    pub exhaustive_max_dim: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { samples: 100, seed: 0xF8A3E, exhaustive_max_dim: 12 }
    }
}

/// `τ_n = sup_{‖w'‖=1} ‖Σ_{k>n} ⟨w', w_k⟩ x'_k‖_{X*}` for `n = 0..=len`.
///
/// Without explicit samples the extreme points of the `W*` ball are used when
/// it is a polytope of dimension at most `exhaustive_max_dim`; the tail norm is
/// convex in `w'`, so this gives the exact supremum. Otherwise seeded random
/// unit functionals are used.
pub fn shrinking_profile(frame: &OFrame, samples: Option<&[Functional]>, opts: &ProfileOptions) -> Result<TailProfile> {
    let w = *frame.target();
    let (samples, exhaustive) = match samples {
        Some(s) => {
            for f in s {
                ensure_same(&f.space, &w)?;
            }
            (normalize(s.iter().map(|f| f.coords.clone()), |c| w.dual_norm_of(c)), false)
        }
        None => default_functionals(&w, opts),
    };
    let len = frame.len();
    let x = *frame.source();
    let windows: Vec<(usize, usize)> = (0..=len).map(|n| (n, len)).collect();
    let per_sample: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|phi| {
            let mut tail = DVector::zeros(x.dim());
            let mut out = vec![0.0; len + 1];
            for k in (0..len).rev() {
                let c = w.pair(phi.as_slice(), frame.pairs[k].vector.as_slice());
                tail.axpy(c, &frame.pairs[k].functional, 1.0);
                out[k] = x.dual_norm_of(tail.as_slice());
            }
            out
        })
        .collect();
    Ok(TailProfile {
        kind: TailKind::Shrinking,
        values: column_max(&per_sample, windows.len()),
        windows,
        per_sample,
        partial_sum_sup: Vec::new(),
        exhaustive,
    })
}

/// Cauchy moduli `sup_s ‖Σ_{n<k≤m} ⟨x''_s, x'_k⟩ w_k‖` with bidual samples
/// identified with vectors of `X`. Default windows are `(k−1, k)`.
pub fn bc_profile(
    frame: &OFrame,
    samples: Option<&[Vector]>,
    windows: Option<&[(usize, usize)]>,
    opts: &ProfileOptions,
) -> Result<TailProfile> {
    let x = *frame.source();
    let w = *frame.target();
    let len = frame.len();
    let windows: Vec<(usize, usize)> = match windows {
        Some(ws) => ws.to_vec(),
        None => (1..=len).map(|k| (k - 1, k)).collect(),
    };
    if let Some(&(n, m)) = windows.iter().find(|(n, m)| n >= m || *m > len) {
        return Err(Error::InvalidArgument(format!("window ({n}, {m}) must satisfy n < m ≤ {len}")));
    }
    let samples: Vec<DVector<f64>> = match samples {
        Some(s) => {
            for v in s {
                ensure_same(&v.space, &x)?;
            }
            normalize(s.iter().map(|v| v.coords.clone()), |c| x.norm_of(c))
        }
        None => random_unit(&x, opts.samples, opts.seed, |c| x.norm_of(c)),
    };
    let rows: Vec<(Vec<f64>, f64)> = samples
        .par_iter()
        .map(|xs| {
            let coef: Vec<f64> = frame
                .pairs
                .iter()
                .map(|p| x.pair(p.functional.as_slice(), xs.as_slice()))
                .collect();
            let vals = windows
                .iter()
                .map(|&(n, m)| {
                    let mut y = DVector::zeros(w.dim());
                    for k in n..m {
                        y.axpy(coef[k], &frame.pairs[k].vector, 1.0);
                    }
                    w.norm_of(y.as_slice())
                })
                .collect();
            let mut y = DVector::zeros(w.dim());
            let mut sup = 0.0f64;
            for (k, p) in frame.pairs.iter().enumerate() {
                y.axpy(coef[k], &p.vector, 1.0);
                sup = sup.max(w.norm_of(y.as_slice()));
            }
            (vals, sup)
        })
        .collect();
    let (per_sample, partial_sum_sup): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(TailProfile {
        kind: TailKind::BoundedlyComplete,
        values: column_max(&per_sample, windows.len()),
        windows,
        per_sample,
        partial_sum_sup,
        exhaustive: false,
    })
}

fn column_max(rows: &[Vec<f64>], n: usize) -> Vec<f64> {
    (0..n).map(|i| rows.iter().map(|r| r[i]).fold(0.0, f64::max)).collect()
}

fn normalize(it: impl Iterator<Item = DVector<f64>>, norm: impl Fn(&[f64]) -> f64) -> Vec<DVector<f64>> {
    it.filter_map(|c| {
        let n = norm(c.as_slice());
        (n > 0.0).then(|| c / n)
    })
    .collect()
}

fn random_unit(space: &SpaceSpec, count: usize, seed: u64, norm: impl Fn(&[f64]) -> f64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<DVector<f64>> = (0..count)
        .map(|_| DVector::from_fn(space.dim(), |_, _| StandardNormal.sample(&mut rng)))
        .collect();
    normalize(raw.into_iter(), norm)
}

/// Extreme points of the dual ball modulo sign, or random unit functionals
/// together with the coordinate functionals.
fn default_functionals(w: &SpaceSpec, opts: &ProfileOptions) -> (Vec<DVector<f64>>, bool) {
    let d = w.dim();
    let dual_norm = |c: &[f64]| w.dual_norm_of(c);
    if d <= opts.exhaustive_max_dim && w.is_l1_type() {
        let pts = (0..1usize << (d - 1)).map(|mask| {
            DVector::from_fn(d, |i, _| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 })
        });
        return (normalize(pts, dual_norm), true);
    }
    if d <= opts.exhaustive_max_dim && w.is_linf_type() {
        let pts = (0..d).map(|i| DVector::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 }));
        return (normalize(pts, dual_norm), true);
    }
    let basis = (0..d).map(|i| DVector::from_fn(d, |j, _| if i == j { 1.0 } else { 0.0 }));
    let mut out = normalize(basis, dual_norm);
    out.extend(random_unit(w, opts.samples, opts.seed, dual_norm));
    (out, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::OFrame;

    fn lp(p: f64, n: usize) -> SpaceSpec {
        SpaceSpec::lp(p, n).unwrap()
    }

    #[test]
    fn basis_frame_tail() {
        let s = lp(2.0, 2);
        let f = OFrame::basis(s);
        let e2 = Functional::basis(s, 1);
        let p = shrinking_profile(&f, Some(&[e2]), &ProfileOptions::default()).unwrap();
        assert_eq!(p.values, vec![1.0, 1.0, 0.0]);
        assert_eq!(p.windows, vec![(0, 2), (1, 2), (2, 2)]);
        let p = shrinking_profile(&f, None, &ProfileOptions::default()).unwrap();
        assert!(!p.exhaustive);
        assert!(p.values[1] >= 1.0 - 1e-12);
        assert_eq!(p.values[2], 0.0);
    }

    #[test]
    fn l1_basis_is_not_shrinking() {
        for n in 1..=8 {
            let f = OFrame::basis(lp(1.0, n));
            let p = shrinking_profile(&f, None, &ProfileOptions::default()).unwrap();
            assert!(p.exhaustive);
            assert_eq!(p.per_sample.len(), 1 << (n - 1));
            assert_eq!(*p.values.last().unwrap(), 0.0);
            for t in &p.values[..n] {
                assert!(*t >= 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn linf_target_uses_coordinate_extreme_points() {
        let f = OFrame::basis(lp(f64::INFINITY, 4));
        let p = shrinking_profile(&f, None, &ProfileOptions::default()).unwrap();
        assert!(p.exhaustive);
        assert_eq!(p.per_sample.len(), 4);
        // tails of the ℓ∞ basis against e'_i vanish past i
        assert_eq!(p.per_sample[1], vec![1.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn bc_window_of_basis_frame() {
        for n in 1..6 {
            let s = lp(2.0, n);
            let f = OFrame::basis(s);
            let en = Vector::basis(s, n - 1);
            let p = bc_profile(&f, Some(&[en]), None, &ProfileOptions::default()).unwrap();
            assert_eq!(*p.values.last().unwrap(), 1.0);
            assert_eq!(p.partial_sum_sup, vec![1.0]);
        }
    }

    #[test]
    fn zero_vectors_give_zero_moduli() {
        let s = lp(1.0, 3);
        let f = OFrame::diagonal(s, &[0.0, 0.0, 0.0]);
        let p = bc_profile(&f, None, Some(&[(0, 3), (1, 2)]), &ProfileOptions::default()).unwrap();
        assert!(p.values.iter().all(|v| *v == 0.0));
        assert!(p.partial_sum_sup.iter().all(|v| *v == 0.0));
        assert_eq!(p.per_sample.len(), 100);
    }

    #[test]
    fn bad_windows_are_rejected() {
        let f = OFrame::basis(lp(1.0, 3));
        let o = ProfileOptions::default();
        assert!(bc_profile(&f, None, Some(&[(2, 2)]), &o).is_err());
        assert!(bc_profile(&f, None, Some(&[(0, 4)]), &o).is_err());
    }

    #[test]
    fn summing_basis_windows_stay_large() {
        for n in 4..=12 {
            let f = OFrame::summing_basis(n).unwrap();
            let alt = Vector::from_slice(*f.source(), &(0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect::<Vec<_>>()).unwrap();
            let p = bc_profile(&f, Some(&[alt]), None, &ProfileOptions::default()).unwrap();
            assert!(p.values.iter().all(|v| *v >= 1.0 - 1e-9));
            assert!(p.partial_sum_sup[0] <= 2.0);
        }
    }
}
