//! Circuit specification files and the unitary argument format.

use nalgebra::Matrix2;
use num_complex::Complex;
use serde::Deserialize;
use serde_json::{json, Value};

use rydress_core::circuits::{ghz_simulate, Su2Decomposition, SparseState};

use crate::CliError;

/// One complex entry: a bare number, `[re, im]`, or `{"re":, "im":}`.
fn parse_entry(v: &Value) -> Option<Complex<f64>> {
    match v {
        Value::Number(n) => Some(Complex::new(n.as_f64()?, 0.0)),
        Value::Array(parts) if parts.len() == 2 => Some(Complex::new(
            parts[0].as_f64()?,
            parts[1].as_f64()?,
        )),
        Value::Object(map) => Some(Complex::new(
            map.get("re")?.as_f64()?,
            map.get("im")?.as_f64()?,
        )),
        _ => None,
    }
}

/// Parse a 2x2 complex matrix from the `--unitary` argument.
pub fn parse_unitary(text: &str) -> Result<Matrix2<Complex<f64>>, CliError> {
    let bad = |d: &str| CliError::new("unitary", format!("invalid 2x2 unitary: {d}"));
    let v: Value = serde_json::from_str(text).map_err(|e| bad(&e.to_string()))?;
    let rows = v.as_array().ok_or_else(|| bad("expected a 2-row array"))?;
    if rows.len() != 2 {
        return Err(bad("expected exactly 2 rows"));
    }
    let mut m = Matrix2::zeros();
    for (r, row) in rows.iter().enumerate() {
        let cols = row.as_array().ok_or_else(|| bad("expected 2-entry rows"))?;
        if cols.len() != 2 {
            return Err(bad("expected exactly 2 columns"));
        }
        for (c, entry) in cols.iter().enumerate() {
            m[(r, c)] = parse_entry(entry).ok_or_else(|| bad("unparseable entry"))?;
        }
    }
    Ok(m)
}

/// Residuals of the two defining identities of a decomposition.
pub fn decomposition_residuals(
    u: &Matrix2<Complex<f64>>,
    d: &Su2Decomposition<f64>,
) -> (f64, f64) {
    let (a, b, c) = (d.a_mat(), d.b_mat(), d.c_mat());
    let abc = (a * b * c - Matrix2::identity()).norm();
    let z = rydress_core::circuits::pauli_z::<f64>();
    let w = a * z * b * z * c;
    let phase = Complex::from_polar(1.0, d.delta);
    let rec = (w * phase - u).norm();
    (abc, rec)
}

/// One circuit operation.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase", tag = "op")]
pub enum Op {
    H { site: usize },
    X { site: usize },
    Z { site: usize },
    Ckz { controls: Vec<usize>, targets: Vec<usize> },
    Cknot { controls: Vec<usize>, targets: Vec<usize> },
}

/// Circuit file: either an explicit op list on named sites, or the GHZ
/// growth shortcut.
#[derive(Debug, Deserialize)]
pub struct CircuitSpec {
    #[serde(default)]
    pub sites: usize,
    /// Sites initialized to (|0> + |1>)/sqrt(2).
    #[serde(default)]
    pub plus: Vec<usize>,
    /// Sites initialized to |1>.
    #[serde(default)]
    pub ones: Vec<usize>,
    #[serde(default)]
    pub ops: Vec<Op>,
    /// Run the diamond-lattice GHZ growth sequence instead of `ops`.
    #[serde(default)]
    pub ghz_growth: Option<GhzGrowthSpec>,
    /// Report fidelity against the all-site GHZ state.
    #[serde(default)]
    pub report_ghz_fidelity: bool,
}

#[derive(Debug, Deserialize)]
pub struct GhzGrowthSpec {
    pub steps: usize,
}

pub struct Outcome {
    pub report: Value,
    pub amplitudes: Value,
}

fn amplitude_json(state: &SparseState<f64>) -> Value {
    Value::Array(
        state
            .amplitude_list()
            .into_iter()
            .map(|(bits, re, im)| json!({ "basis": bits, "re": re, "im": im }))
            .collect(),
    )
}

pub fn run(spec: &CircuitSpec) -> Result<Outcome, CliError> {
    if let Some(growth) = &spec.ghz_growth {
        let (state, report) =
            ghz_simulate::<f64>(growth.steps).map_err(|e| CliError::new("circuits", e))?;
        return Ok(Outcome {
            report: json!({
                "kind": "ghz-growth",
                "steps": report.steps,
                "sites": report.n_sites,
                "fidelity": report.fidelity,
                "max_support": report.max_support,
                "support_after_h": report.support_after_h,
            }),
            amplitudes: amplitude_json(&state),
        });
    }

    if spec.sites == 0 || spec.sites > 64 {
        return Err(CliError::new("circuit", "sites must be in 1..=64"));
    }
    let check_site = |s: usize| -> Result<(), CliError> {
        if s >= spec.sites {
            return Err(CliError::new("circuit", format!("site {s} out of range")));
        }
        Ok(())
    };

    let mut mask = 0u64;
    for &s in &spec.ones {
        check_site(s)?;
        mask |= 1 << s;
    }
    let mut state = SparseState::<f64>::basis(spec.sites, mask);
    for &s in &spec.plus {
        check_site(s)?;
        state.hadamard(s);
    }

    for op in &spec.ops {
        match op {
            Op::H { site } => {
                check_site(*site)?;
                state.hadamard(*site);
            }
            Op::X { site } => {
                check_site(*site)?;
                let mut next = std::collections::BTreeMap::new();
                for (&m, &amp) in &state.amps {
                    next.insert(m ^ (1 << site), amp);
                }
                state.amps = next;
            }
            Op::Z { site } => {
                check_site(*site)?;
                for (&m, amp) in state.amps.iter_mut() {
                    if m & (1 << site) != 0 {
                        *amp = -*amp;
                    }
                }
            }
            Op::Ckz { controls, targets } | Op::Cknot { controls, targets } => {
                for &s in controls.iter().chain(targets) {
                    check_site(s)?;
                }
                let is_not = matches!(op, Op::Cknot { .. });
                if is_not {
                    for &t in targets {
                        state.hadamard(t);
                    }
                }
                state.ckz(controls, targets);
                if is_not {
                    for &t in targets {
                        state.hadamard(t);
                    }
                }
            }
        }
    }

    let mut report = json!({
        "kind": "circuit",
        "sites": spec.sites,
        "support": state.support(),
        "norm": state.norm(),
    });
    if spec.report_ghz_fidelity {
        report["ghz_fidelity"] = json!(state.ghz_fidelity());
    }
    Ok(Outcome {
        amplitudes: amplitude_json(&state),
        report,
    })
}
