//! Finite-dimensional Banach-space models.
//!
//! Two families are modelled: `ℓ_p^n` and step functions on a dyadic grid of
//! `[0, 1]` with `2^levels` cells. Grid spaces carry the uniform cell weight
//! `2^-levels` in both the norm and the dual pairing, so `L_1` on the grid is
//! the discrete integral of `|v|` and its dual is the sup-norm on coordinates.

use std::fmt;

use nalgebra::DVector;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest grid depth accepted; `2^24` cells is already far beyond desk scale.
pub const MAX_GRID_LEVELS: u32 = 24;

/// A norm exponent `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INF: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidSpace(format!("exponent must be >= 1 or inf, got {p}")));
        }
        Ok(Exponent(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_one(self) -> bool {
        self.0 == 1.0
    }

    pub fn is_two(self) -> bool {
        self.0 == 2.0
    }

    pub fn is_inf(self) -> bool {
        self.0.is_infinite()
    }

    /// The conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> Exponent {
        if self.is_one() {
            Exponent::INF
        } else if self.is_inf() {
            Exponent::ONE
        } else {
            Exponent(self.0 / (self.0 - 1.0))
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_inf() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(p) => p,
            Raw::Str(s) if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") => {
                f64::INFINITY
            }
            Raw::Str(s) => s
                .parse::<f64>()
                .map_err(|_| de::Error::custom(format!("invalid exponent {s:?}")))?,
        };
        Exponent::new(p).map_err(de::Error::custom)
    }
}

/// A finite-dimensional space model fixing the norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceSpec {
    /// `ℓ_p^dim`.
    Lp { p: Exponent, dim: usize },
    /// `L_p` step functions on `2^levels` dyadic cells with the discrete
    /// integral `2^-levels Σ |v_i|^p`.
    Grid { p: Exponent, levels: u32 },
}

impl SpaceSpec {
    pub fn lp(p: f64, dim: usize) -> Result<Self> {
        let space = SpaceSpec::Lp { p: Exponent::new(p)?, dim };
        space.validate()?;
        Ok(space)
    }

    pub fn l1_grid(levels: u32) -> Result<Self> {
        Self::grid(1.0, levels)
    }

    pub fn grid(p: f64, levels: u32) -> Result<Self> {
        let space = SpaceSpec::Grid { p: Exponent::new(p)?, levels };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SpaceSpec::Lp { dim, .. } if dim == 0 => {
                Err(Error::InvalidSpace("dimension must be positive".into()))
            }
            SpaceSpec::Grid { levels, .. } if levels > MAX_GRID_LEVELS => Err(Error::InvalidSpace(
                format!("grid levels {levels} exceed {MAX_GRID_LEVELS}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            SpaceSpec::Lp { dim, .. } => dim,
            SpaceSpec::Grid { levels, .. } => 1usize << levels,
        }
    }

    pub fn exponent(&self) -> Exponent {
        match *self {
            SpaceSpec::Lp { p, .. } | SpaceSpec::Grid { p, .. } => p,
        }
    }

    /// Cell weight entering both the norm and the dual pairing.
    pub fn weight(&self) -> f64 {
        match *self {
            SpaceSpec::Lp { .. } => 1.0,
            SpaceSpec::Grid { levels, .. } => (-(levels as f64)).exp2(),
        }
    }

    /// The exact dual model: same weight, conjugate exponent.
    pub fn dual(&self) -> SpaceSpec {
        match *self {
            SpaceSpec::Lp { p, dim } => SpaceSpec::Lp { p: p.conjugate(), dim },
            SpaceSpec::Grid { p, levels } => SpaceSpec::Grid { p: p.conjugate(), levels },
        }
    }

    pub fn is_l1_type(&self) -> bool {
        self.exponent().is_one()
    }

    pub fn is_linf_type(&self) -> bool {
        self.exponent().is_inf()
    }

    pub fn is_l2_type(&self) -> bool {
        self.exponent().is_two()
    }

    /// Norm of a raw coordinate slice (length is not checked).
    pub fn norm_of(&self, coords: &[f64]) -> f64 {
        weighted_p_norm(coords, self.exponent(), self.weight())
    }

    /// Dual norm of raw pairing coefficients.
    pub fn dual_norm_of(&self, coords: &[f64]) -> f64 {
        weighted_p_norm(coords, self.exponent().conjugate(), self.weight())
    }

    /// `⟨f, x⟩ = weight · Σ f_i x_i`.
    pub fn pair(&self, f: &[f64], x: &[f64]) -> f64 {
        self.weight() * f.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    /// A unit vector `x` with `⟨f, x⟩ = ‖f‖_*`.
    pub fn norming_vector(&self, f: &[f64]) -> Vec<f64> {
        norming_point(f, self.exponent(), self.weight())
    }

    /// A functional `g` of dual norm one with `⟨g, v⟩ = ‖v‖`.
    pub fn norming_functional(&self, v: &[f64]) -> Vec<f64> {
        norming_point(v, self.exponent().conjugate(), self.weight())
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: len });
        }
        Ok(())
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SpaceSpec::Lp { p, dim } => write!(f, "l{p}^{dim}"),
            SpaceSpec::Grid { p, levels } => write!(f, "L{p}grid({levels})"),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawSpace {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels: Option<u32>,
}

impl Serialize for SpaceSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = match *self {
            SpaceSpec::Lp { p, dim } => RawSpace {
                kind: "lp".into(),
                p: Some(p),
                dim: Some(dim),
                levels: None,
            },
            SpaceSpec::Grid { p, levels } if p.is_one() => RawSpace {
                kind: "l1grid".into(),
                p: None,
                dim: None,
                levels: Some(levels),
            },
            SpaceSpec::Grid { p, levels } if p.is_inf() => RawSpace {
                kind: "linfgrid".into(),
                p: None,
                dim: None,
                levels: Some(levels),
            },
            SpaceSpec::Grid { p, levels } => RawSpace {
                kind: "grid".into(),
                p: Some(p),
                dim: None,
                levels: Some(levels),
            },
        };
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpaceSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpace::deserialize(d)?;
        let missing = |field: &str| de::Error::custom(format!("space kind {:?} needs {field:?}", raw.kind));
        let space = match raw.kind.as_str() {
            "lp" => SpaceSpec::Lp {
                p: raw.p.ok_or_else(|| missing("p"))?,
                dim: raw.dim.ok_or_else(|| missing("dim"))?,
            },
            "l1grid" => SpaceSpec::Grid {
                p: Exponent::ONE,
                levels: raw.levels.ok_or_else(|| missing("levels"))?,
            },
            "linfgrid" => SpaceSpec::Grid {
                p: Exponent::INF,
                levels: raw.levels.ok_or_else(|| missing("levels"))?,
            },
            "grid" => SpaceSpec::Grid {
                p: raw.p.ok_or_else(|| missing("p"))?,
                levels: raw.levels.ok_or_else(|| missing("levels"))?,
            },
            other => return Err(de::Error::custom(format!("unknown space kind {other:?}"))),
        };
        space.validate().map_err(de::Error::custom)?;
        Ok(space)
    }
}

/// A vector of a space model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawElement", into = "RawElement")]
pub struct Vector {
    pub space: SpaceSpec,
    pub coords: DVector<f64>,
}

/// A continuous linear functional on `space` (its predual), stored as raw
/// pairing coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawElement", into = "RawElement")]
pub struct Functional {
    pub space: SpaceSpec,
    pub coords: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawElement {
    space: SpaceSpec,
    coords: Vec<f64>,
}

macro_rules! element_impls {
    ($ty:ident) => {
        impl $ty {
            pub fn new(space: SpaceSpec, coords: DVector<f64>) -> Result<Self> {
                space.check_len(coords.len())?;
                Ok($ty { space, coords })
            }

            pub fn from_slice(space: SpaceSpec, coords: &[f64]) -> Result<Self> {
                Self::new(space, DVector::from_column_slice(coords))
            }

            pub fn zeros(space: SpaceSpec) -> Self {
                $ty { space, coords: DVector::zeros(space.dim()) }
            }

            /// The `i`-th coordinate unit element.
            pub fn basis(space: SpaceSpec, i: usize) -> Self {
                let mut coords = DVector::zeros(space.dim());
                coords[i] = 1.0;
                $ty { space, coords }
            }

            pub fn dim(&self) -> usize {
                self.coords.len()
            }
        }

        impl TryFrom<RawElement> for $ty {
            type Error = Error;
            fn try_from(raw: RawElement) -> Result<Self> {
                $ty::new(raw.space, DVector::from_vec(raw.coords))
            }
        }

        impl From<$ty> for RawElement {
            fn from(v: $ty) -> Self {
                RawElement { space: v.space, coords: v.coords.iter().copied().collect() }
            }
        }
    };
}

element_impls!(Vector);
element_impls!(Functional);

impl Vector {
    pub fn norm(&self) -> f64 {
        self.space.norm_of(self.coords.as_slice())
    }
}

impl Functional {
    pub fn dual_norm(&self) -> f64 {
        self.space.dual_norm_of(self.coords.as_slice())
    }

    pub fn apply(&self, x: &Vector) -> Result<f64> {
        pairing(self, x)
    }
}

fn same_space(a: &SpaceSpec, b: &SpaceSpec) -> Result<()> {
    if a != b {
        return Err(Error::SpaceMismatch(format!("{a} vs {b}")));
    }
    Ok(())
}

pub(crate) fn ensure_same(a: &SpaceSpec, b: &SpaceSpec) -> Result<()> {
    same_space(a, b)
}

/// Norm of `v` in `space`.
pub fn norm(space: &SpaceSpec, v: &Vector) -> Result<f64> {
    space.check_len(v.dim())?;
    same_space(space, &v.space)?;
    Ok(v.norm())
}

/// Dual norm `sup{⟨f, x⟩ : ‖x‖ ≤ 1}` of a functional on `space`.
pub fn dual_norm(space: &SpaceSpec, f: &Functional) -> Result<f64> {
    space.check_len(f.dim())?;
    same_space(space, &f.space)?;
    Ok(f.dual_norm())
}

pub fn pairing(f: &Functional, x: &Vector) -> Result<f64> {
    same_space(&f.space, &x.space)?;
    Ok(f.space.pair(f.coords.as_slice(), x.coords.as_slice()))
}

/// The `2^levels` sup-normalized Haar functions on the dyadic grid, constant
/// function first, then level by level from left to right.
pub fn haar_system(levels: u32) -> Result<Vec<Vector>> {
    let space = SpaceSpec::l1_grid(levels)?;
    let n = space.dim();
    let mut out = Vec::with_capacity(n);
    out.push(Vector { space, coords: DVector::from_element(n, 1.0) });
    for level in 0..levels {
        let len = n >> level;
        for k in 0..(1usize << level) {
            let start = k * len;
            let mut coords = DVector::zeros(n);
            for i in 0..len {
                coords[start + i] = if i < len / 2 { 1.0 } else { -1.0 };
            }
            out.push(Vector { space, coords });
        }
    }
    Ok(out)
}

fn weighted_p_norm(v: &[f64], p: Exponent, weight: f64) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    if p.is_inf() {
        return scale;
    }
    if p.is_one() {
        return weight * v.iter().map(|x| x.abs()).sum::<f64>();
    }
    let p = p.value();
    let s: f64 = v.iter().map(|x| (x.abs() / scale).powf(p)).sum();
    scale * (weight * s).powf(1.0 / p)
}

/// Unit vector of the `(p, weight)` space on which `f` (paired with the same
/// weight) attains its dual norm.
fn norming_point(f: &[f64], p: Exponent, weight: f64) -> Vec<f64> {
    let n = f.len();
    let q = p.conjugate();
    let fnorm = weighted_p_norm(f, q, weight);
    if fnorm == 0.0 {
        let mut x = vec![0.0; n];
        if n > 0 {
            x[0] = 1.0;
            let s = weighted_p_norm(&x, p, weight);
            x[0] /= s;
        }
        return x;
    }
    let sign = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
    if p.is_one() {
        // all mass on the first coordinate of maximal modulus
        let mut best = 0;
        for (i, v) in f.iter().enumerate() {
            if v.abs() > f[best].abs() {
                best = i;
            }
        }
        let mut x = vec![0.0; n];
        x[best] = sign(f[best]) / weight;
        x
    } else if p.is_inf() {
        f.iter().map(|&v| sign(v)).collect()
    } else {
        let qv = q.value();
        f.iter()
            .map(|&v| sign(v) * (v.abs() / fnorm).powf(qv - 1.0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(space: SpaceSpec, c: &[f64]) -> Vector {
        Vector::from_slice(space, c).unwrap()
    }

    #[test]
    fn norm_examples() {
        let l2 = SpaceSpec::lp(2.0, 2).unwrap();
        assert_eq!(norm(&l2, &v(l2, &[3.0, 4.0])).unwrap(), 5.0);
        let linf = SpaceSpec::lp(f64::INFINITY, 3).unwrap();
        assert_eq!(norm(&linf, &v(linf, &[1.0, -2.0, 1.0])).unwrap(), 2.0);
        let grid = SpaceSpec::l1_grid(2).unwrap();
        assert_eq!(norm(&grid, &v(grid, &[1.0; 4])).unwrap(), 1.0);
    }

    #[test]
    fn dual_norm_examples() {
        let l1 = SpaceSpec::lp(1.0, 2).unwrap();
        let f = Functional::from_slice(l1, &[1.0, -3.0]).unwrap();
        assert_eq!(dual_norm(&l1, &f).unwrap(), 3.0);
        let l2 = SpaceSpec::lp(2.0, 2).unwrap();
        let f = Functional::from_slice(l2, &[3.0, 4.0]).unwrap();
        assert_eq!(dual_norm(&l2, &f).unwrap(), 5.0);
    }

    #[test]
    fn grid_dual_norm_by_direct_search() {
        // maximize the weighted pairing over the grid unit ball by scanning
        // x = (t, s(t)) on the boundary 0.5(|x0| + |x1|) = 1
        let grid = SpaceSpec::l1_grid(1).unwrap();
        let f = Functional::from_slice(grid, &[2.0, -2.0]).unwrap();
        let mut best = f64::NEG_INFINITY;
        for i in 0..=4000 {
            let x0 = -2.0 + 4.0 * i as f64 / 4000.0;
            for s in [-1.0, 1.0] {
                let x1 = s * (2.0 - x0.abs());
                best = best.max(0.5 * (2.0 * x0 - 2.0 * x1));
            }
        }
        assert_abs_diff_eq!(best, 2.0, epsilon = 1e-12);
        assert_eq!(dual_norm(&grid, &f).unwrap(), 2.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let l2 = SpaceSpec::lp(2.0, 3).unwrap();
        let other = SpaceSpec::lp(2.0, 2).unwrap();
        let x = v(other, &[1.0, 2.0]);
        assert!(matches!(norm(&l2, &x), Err(Error::DimensionMismatch { .. })));
        assert!(Vector::from_slice(l2, &[1.0]).is_err());
    }

    #[test]
    fn invalid_spaces() {
        assert!(SpaceSpec::lp(0.5, 2).is_err());
        assert!(SpaceSpec::lp(2.0, 0).is_err());
        assert!(SpaceSpec::l1_grid(MAX_GRID_LEVELS + 1).is_err());
    }

    #[test]
    fn haar_examples() {
        let h0 = haar_system(0).unwrap();
        assert_eq!(h0.len(), 1);
        assert_eq!(h0[0].coords.as_slice(), &[1.0]);
        let h1 = haar_system(1).unwrap();
        assert_eq!(h1[0].coords.as_slice(), &[1.0, 1.0]);
        assert_eq!(h1[1].coords.as_slice(), &[1.0, -1.0]);
        let h2 = haar_system(2).unwrap();
        assert_eq!(h2.len(), 4);
        assert_eq!(h2[2].coords.as_slice(), &[1.0, -1.0, 0.0, 0.0]);
        assert_eq!(h2[3].coords.as_slice(), &[0.0, 0.0, 1.0, -1.0]);
    }

    #[test]
    fn haar_is_orthogonal_and_biorthogonal() {
        for levels in 0..=5 {
            let h = haar_system(levels).unwrap();
            let space = h[0].space;
            let n = h.len();
            for i in 0..n {
                for j in 0..n {
                    let ip = space.pair(h[i].coords.as_slice(), h[j].coords.as_slice());
                    if i != j {
                        assert_eq!(ip, 0.0);
                    } else {
                        assert!(ip > 0.0);
                    }
                }
            }
            // dual system: h_i / <h_i, h_i>
            for i in 0..n {
                let hi = h[i].coords.as_slice();
                let dual: Vec<f64> = hi.iter().map(|x| x / space.pair(hi, hi)).collect();
                for j in 0..n {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(space.pair(&dual, h[j].coords.as_slice()), expected);
                }
            }
        }
    }

    #[test]
    fn json_encoding() {
        let s: SpaceSpec = serde_json::from_str(r#"{"kind":"lp","p":"inf","dim":3}"#).unwrap();
        assert_eq!(s, SpaceSpec::Lp { p: Exponent::INF, dim: 3 });
        let s: SpaceSpec = serde_json::from_str(r#"{"kind":"l1grid","levels":3}"#).unwrap();
        assert_eq!(s.dim(), 8);
        assert_eq!(
            serde_json::to_string(&SpaceSpec::lp(2.0, 4).unwrap()).unwrap(),
            r#"{"kind":"lp","p":2.0,"dim":4}"#
        );
        let x: Vector =
            serde_json::from_str(r#"{"space":{"kind":"lp","p":1.0,"dim":2},"coords":[1,2]}"#).unwrap();
        assert_eq!(x.coords.as_slice(), &[1.0, 2.0]);
        let bad = r#"{"space":{"kind":"lp","p":1.0,"dim":3},"coords":[1,2]}"#;
        assert!(serde_json::from_str::<Vector>(bad).is_err());
        assert!(serde_json::from_str::<SpaceSpec>(r#"{"kind":"lq","dim":2}"#).is_err());
    }

    fn space_strategy() -> impl Strategy<Value = SpaceSpec> {
        prop_oneof![
            (prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY), 1.0f64..6.0], 1usize..7)
                .prop_map(|(p, d)| SpaceSpec::lp(p, d).unwrap()),
            (prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY)], 0u32..4)
                .prop_map(|(p, l)| SpaceSpec::grid(p, l).unwrap()),
        ]
    }

    fn space_and_vecs() -> impl Strategy<Value = (SpaceSpec, Vec<f64>, Vec<f64>, f64)> {
        space_strategy().prop_flat_map(|s| {
            let n = s.dim();
            (
                Just(s),
                proptest::collection::vec(-10.0f64..10.0, n),
                proptest::collection::vec(-10.0f64..10.0, n),
                -5.0f64..5.0,
            )
        })
    }

    proptest! {
        #[test]
        fn norm_axioms((s, a, b, alpha) in space_and_vecs()) {
            let na = s.norm_of(&a);
            let nb = s.norm_of(&b);
            let scaled: Vec<f64> = a.iter().map(|x| alpha * x).collect();
            prop_assert!((s.norm_of(&scaled) - alpha.abs() * na).abs() <= 1e-9 * (1.0 + na));
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            prop_assert!(s.norm_of(&sum) <= na + nb + 1e-9);
        }

        #[test]
        fn dual_norm_holder_and_attainment((s, f, x, _a) in space_and_vecs()) {
            let fd = s.dual_norm_of(&f);
            prop_assert!(s.pair(&f, &x).abs() <= fd * s.norm_of(&x) + 1e-9);
            let p = s.exponent();
            if p.is_one() || p.is_two() || p.is_inf() {
                let ext = s.norming_vector(&f);
                prop_assert!((s.norm_of(&ext) - 1.0).abs() <= 1e-9);
                prop_assert!((s.pair(&f, &ext) - fd).abs() <= 1e-9 * (1.0 + fd));
            }
            let g = s.norming_functional(&x);
            let nx = s.norm_of(&x);
            if nx > 0.0 {
                prop_assert!((s.dual_norm_of(&g) - 1.0).abs() <= 1e-9);
                prop_assert!((s.pair(&g, &x) - nx).abs() <= 1e-9 * (1.0 + nx));
            }
        }
    }
}
