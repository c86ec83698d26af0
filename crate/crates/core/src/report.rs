//! Machine-readable verification verdicts.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::exterior::Form;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    PassModDlog,
}

impl Status {
    pub fn is_pass(self) -> bool {
        self != Status::Fail
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub params: Value,
    pub status: Status,
    pub witness: Option<Value>,
    pub seed: Option<u64>,
    pub millis: u64,
}

impl VerificationReport {
    pub fn new(check: impl Into<String>, params: Value, status: Status) -> Self {
        VerificationReport { check: check.into(), params, status, witness: None, seed: None, millis: 0 }
    }

    pub fn with_witness(mut self, w: Value) -> Self {
        self.witness = Some(w);
        self
    }

    pub fn with_form_witness(mut self, f: &Form) -> Self {
        self.witness = Some(form_to_json(f));
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn timed(mut self, start: Instant) -> Self {
        self.millis = start.elapsed().as_millis() as u64;
        self
    }

    pub fn passed(&self) -> bool {
        self.status.is_pass()
    }
}

/// Term list `[{"coeff": ..., "gens": [...]}, ...]` in canonical order.
pub fn form_to_json(f: &Form) -> Value {
    Value::Array(
        f.to_named_terms()
            .into_iter()
            .map(|(c, g)| json!({ "coeff": c, "gens": g }))
            .collect(),
    )
}

pub fn emit_reports(reports: &[VerificationReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_single() {
        assert_eq!(emit_reports(&[]), "[]");
        let r = VerificationReport::new("x", json!({}), Status::Pass);
        let s = emit_reports(&[r]);
        assert!(s.contains("\"status\": \"pass\""));
        let keys: Vec<usize> = ["check", "params", "status", "witness", "seed", "millis"]
            .iter()
            .map(|k| s.find(&format!("\"{k}\"")).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        let r = VerificationReport::new("y", json!(null), Status::PassModDlog);
        assert!(emit_reports(&[r]).contains("pass-mod-dlog"));
    }
}
