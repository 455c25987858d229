use std::fs;

use nalgebra::DMatrix;
use oframe_core::{OFrame, SpaceSpec};
use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::report::InputDigest;
use crate::CliError;

/// Reads JSON arguments, inline or from files, and digests their text.
#[derive(Default)]
pub struct Inputs {
    pub digest: InputDigest,
}

fn is_inline(arg: &str) -> bool {
    let t = arg.trim_start();
    t.starts_with('{') || t.starts_with('[') || t.starts_with('"') || t.parse::<f64>().is_ok()
}

impl Inputs {
    fn text(&mut self, role: &str, arg: &str) -> Result<(String, String), CliError> {
        let (text, origin) = if is_inline(arg) {
            (arg.to_string(), "inline".to_string())
        } else {
            let text = fs::read_to_string(arg).map_err(|e| CliError::Input(format!("{role}: cannot read {arg}: {e}")))?;
            (text, arg.to_string())
        };
        self.digest.add(role, &text);
        Ok((text, origin))
    }

    pub fn parse<T: DeserializeOwned>(&mut self, role: &str, arg: &str) -> Result<T, CliError> {
        let (text, origin) = self.text(role, arg)?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{role} ({origin}): {e}")))
    }

    pub fn space(&mut self, arg: &str) -> Result<SpaceSpec, CliError> {
        self.parse("space", arg)
    }

    /// Row-major matrix given as an array of equal-length rows.
    pub fn matrix(&mut self, role: &str, arg: &str) -> Result<DMatrix<f64>, CliError> {
        let rows: Vec<Vec<f64>> = self.parse(role, arg)?;
        to_matrix(role, &rows)
    }

    /// A frame, or a report whose outputs carry one.
    pub fn frame(&mut self, arg: &str) -> Result<OFrame, CliError> {
        let mut v: Value = self.parse("frame", arg)?;
        if let Some(inner) = v.pointer_mut("/outputs/frame") {
            v = inner.take();
        }
        serde_json::from_value(v).map_err(|e| CliError::Input(format!("frame: {e}")))
    }
}

pub fn to_matrix(role: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(CliError::Input(format!("{role}: row {i} has {} entries, expected {c}", rows[i].len())));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}
