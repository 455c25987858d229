//! Claimed-versus-measured bound records.

use serde::{Deserialize, Serialize};

/// A named inequality `measured ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub bound: f64,
    pub measured: f64,
    pub pass: bool,
}

impl BoundCheck {
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        BoundCheck { name: name.into(), bound, measured, pass: measured <= bound }
    }

    /// `measured ≥ bound`, stored with the bound as the threshold.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        BoundCheck { name: name.into(), bound, measured, pass: measured >= bound }
    }
}

pub fn all_pass(checks: &[BoundCheck]) -> bool {
    checks.iter().all(|c| c.pass)
}
