//! Report documents and the policy table.

use std::io::Write;

use myopic_core::solver::{barycentric_grid, myopic_policy_at, q_values, Mode, ValueFunction};
use myopic_core::structural::{
    gamma_report, AssumptionReport, ComparisonReport, VerificationReport,
};
use myopic_core::PomdpModel;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;

/// The single report document. Sections a command does not produce are `null`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub assumptions: Value,
    pub theorem1: Value,
    pub theorem3: Value,
    pub theorem5: Value,
    pub psi: Value,
    pub value_shape: Value,
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report types serialize")
}

impl Report {
    pub fn from_assumptions(a: &AssumptionReport) -> Self {
        Self {
            assumptions: to_value(a),
            ..Self::default()
        }
    }

    pub fn from_verification(a: &AssumptionReport, v: &VerificationReport, vf: &ValueFunction, mode: Mode) -> Self {
        let mut shape = to_value(&v.value_shape);
        if let ValueFunction::Exact(e) = vf {
            shape["gamma"] = to_value(&gamma_report(e));
        }
        Self {
            assumptions: to_value(a),
            theorem1: json!({
                "grid": v.grid,
                "points": v.points,
                "slack": v.slack,
                "mode": to_value(&mode),
                "residual": vf.residual(),
                "applicability": to_value(&v.applicability),
                "expectations_met": v.expectations_met(),
                "policy_dominance": to_value(&v.policy_dominance),
                "q_diff": to_value(&v.q_diff),
            }),
            theorem5: to_value(&v.range_containment),
            psi: v.psi.as_ref().map_or(Value::Null, to_value),
            value_shape: shape,
            ..Self::default()
        }
    }

    pub fn from_comparison(strong: &AssumptionReport, weak: &AssumptionReport, c: &ComparisonReport) -> Self {
        Self {
            assumptions: json!({ "strong": to_value(strong), "weak": to_value(weak) }),
            theorem3: to_value(c),
            ..Self::default()
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Writes one row per grid belief: coordinates, value, both policies, Q-values.
pub fn write_policy_csv<W: Write>(m: &PomdpModel, v: &ValueFunction, d: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..m.num_states).map(|i| format!("pi_{i}")).collect();
    header.extend(["value", "optimal_action", "myopic_action"].map(String::from));
    header.extend((0..m.num_actions).map(|u| format!("q_{u}")));
    w.write_record(&header)?;
    for p in barycentric_grid(m.num_states, d) {
        let q = q_values(m, v, &p);
        let mut row: Vec<String> = p.as_slice().iter().map(f64::to_string).collect();
        row.push(v.value_at(&p).to_string());
        row.push(q.action().to_string());
        row.push(myopic_policy_at(m, &p).to_string());
        row.extend(q.q.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
