use oframe_core::BoundCheck;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::args::RunConfig;

pub const CSV_HEADER: &str = "command,index,value,certified,bound,pass";

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub index: usize,
    pub value: f64,
    pub certified: Option<bool>,
    pub bound: Option<f64>,
    pub pass: Option<bool>,
}

impl Row {
    pub fn value(index: usize, value: f64, certified: bool) -> Self {
        Row { index, value, certified: Some(certified), bound: None, pass: None }
    }
}

/// What a command hands back before it is wrapped into a [`Report`].
#[derive(Debug, Default)]
pub struct Output {
    pub outputs: Value,
    pub checks: Vec<BoundCheck>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    pub inputs_digest: String,
    pub config: RunConfig,
    pub outputs: Value,
    pub checks: Vec<BoundCheck>,
    pub pass: bool,
    #[serde(skip)]
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(command: Vec<String>, digest: InputDigest, config: RunConfig, out: Output) -> Self {
        let pass = out.checks.iter().all(|c| c.pass);
        Report {
            command,
            inputs_digest: digest.finish(),
            config,
            outputs: out.outputs,
            checks: out.checks,
            pass,
            rows: out.rows,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Command rows when present, the bound checks otherwise.
    pub fn to_csv(&self, name: &str) -> String {
        let rows: Vec<Row> = if self.rows.is_empty() {
            self.checks
                .iter()
                .enumerate()
                .map(|(i, c)| Row { index: i, value: c.measured, certified: None, bound: Some(c.bound), pass: Some(c.pass) })
                .collect()
        } else {
            self.rows.clone()
        };
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in rows {
            s.push_str(&format!(
                "{name},{},{},{},{},{}\n",
                r.index,
                r.value,
                opt(r.certified),
                opt(r.bound),
                opt(r.pass)
            ));
        }
        s
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// SHA-256 over the raw text of every input in order, each prefixed by its
/// role, plus the configuration.
#[derive(Default)]
pub struct InputDigest(Sha256);

impl InputDigest {
    pub fn add(&mut self, role: &str, text: &str) {
        self.0.update(role.as_bytes());
        self.0.update([0]);
        self.0.update((text.len() as u64).to_le_bytes());
        self.0.update(text.as_bytes());
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_falls_back_to_checks() {
        let cfg = crate::args::RunConfig {
            seed: 1,
            tol: 1e-9,
            rank_tol: 1e-10,
            auerbach_budget: 200,
            auerbach_restarts: 4,
            allow_estimates: false,
            samples: 100,
            max_exact_signs: None,
        };
        let out = Output { outputs: Value::Null, checks: vec![BoundCheck::at_most("a", 3.0, 2.0)], rows: Vec::new() };
        let r = Report::new(vec![], InputDigest::default(), cfg.clone(), out);
        assert!(!r.pass);
        assert_eq!(r.to_csv("x"), "command,index,value,certified,bound,pass\nx,0,3,,2,false\n");
        let out = Output { outputs: Value::Null, checks: Vec::new(), rows: vec![Row::value(4, 0.5, true)] };
        let r = Report::new(vec![], InputDigest::default(), cfg, out);
        assert!(r.pass);
        assert_eq!(r.to_csv("y").lines().nth(1), Some("y,4,0.5,true,,"));
    }

    #[test]
    fn digest_separates_roles() {
        let mut a = InputDigest::default();
        a.add("x", "ab");
        let mut b = InputDigest::default();
        b.add("xa", "b");
        assert_ne!(a.finish(), b.finish());
    }
}
