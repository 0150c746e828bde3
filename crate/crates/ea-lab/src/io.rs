//! JSON and CSV interchange: algebra and metric loading, trajectory and
//! sphere-portrait emission.
//!
//! All emitters are deterministic functions of their inputs: no
//! timestamps, no map types with unstable order, floats in shortest
//! round-trip form.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::LieAlgebra;
use crate::error::{Error, Result};
use crate::flow::integrate::Trajectory;
use crate::flow::sphere::{OrbitVerdict, SphereOrbit};
use crate::linalg::{Matrix, Vector};
use crate::metric::BilinearForm;
use crate::scalar::Rational;

/// Parses `p` or `p/q` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    Rational::from_str(text.trim())
        .map_err(|_| Error::InvalidInput(format!("`{text}` is not a rational (expected `p` or `p/q`)")))
}

/// Parses a comma-separated list of rationals, e.g. `1,-1/2,3`.
pub fn parse_rational_vector(text: &str) -> Result<Vector<Rational>> {
    let coords: Result<Vec<Rational>> = text.split(',').map(parse_rational).collect();
    let coords = coords?;
    if coords.is_empty() {
        return Err(Error::InvalidInput("empty coordinate list".to_string()));
    }
    Ok(Vector(coords))
}

fn parse_index(text: &str, dim: usize) -> Result<usize> {
    let k: usize = text
        .parse()
        .map_err(|_| Error::InvalidInput(format!("`{text}` is not a basis index")))?;
    if k >= dim {
        return Err(Error::InvalidInput(format!(
            "basis index {k} out of range for dimension {dim}"
        )));
    }
    Ok(k)
}

#[derive(Deserialize)]
struct AlgebraSpec {
    dim: usize,
    basis: Vec<String>,
    #[serde(default)]
    brackets: Vec<BracketSpec>,
}

#[derive(Deserialize)]
struct BracketSpec {
    i: usize,
    j: usize,
    coeffs: BTreeMap<String, String>,
}

/// Loads an algebra from JSON: `{"dim": n, "basis": [...], "brackets":
/// [{"i": 0, "j": 1, "coeffs": {"2": "p/q"}}]}`. Rationals are strings,
/// unlisted brackets are zero, the antisymmetric counterpart of each
/// listed bracket is filled in automatically, and listing a pair in both
/// orientations is rejected as a conflict. The result must satisfy the
/// Jacobi identity exactly.
pub fn load_algebra_json(text: &str) -> Result<LieAlgebra<Rational>> {
    let spec: AlgebraSpec = serde_json::from_str(text)?;
    if spec.basis.len() != spec.dim {
        return Err(Error::InvalidInput(format!(
            "dim is {} but {} basis names given",
            spec.dim,
            spec.basis.len()
        )));
    }
    let mut brackets: Vec<(usize, usize, Vec<(usize, Rational)>)> = Vec::new();
    for b in &spec.brackets {
        let mut coeffs = Vec::new();
        for (k, v) in &b.coeffs {
            coeffs.push((parse_index(k, spec.dim)?, parse_rational(v)?));
        }
        brackets.push((b.i, b.j, coeffs));
    }
    let names: Vec<&str> = spec.basis.iter().map(|s| s.as_str()).collect();
    let borrowed: Vec<(usize, usize, &[(usize, Rational)])> = brackets
        .iter()
        .map(|(i, j, c)| (*i, *j, c.as_slice()))
        .collect();
    let alg = LieAlgebra::from_brackets(&names, &borrowed)?;
    let jacobi = alg.jacobi_residual();
    if !num_traits::Zero::is_zero(&jacobi) {
        return Err(Error::InvalidInput(format!(
            "brackets violate the Jacobi identity (residual {jacobi})"
        )));
    }
    Ok(alg)
}

#[derive(Deserialize)]
struct MetricSpec {
    entries: Vec<EntrySpec>,
}

#[derive(Deserialize)]
struct EntrySpec {
    i: usize,
    j: usize,
    value: String,
}

/// Loads a symmetric form from JSON: `{"entries": [{"i": 0, "j": 2,
/// "value": "p/q"}]}`. Each entry fills both `(i,j)` and `(j,i)`;
/// unlisted entries are zero; listing a pair twice is rejected.
pub fn load_metric_json(text: &str, dim: usize) -> Result<BilinearForm<Rational>> {
    let spec: MetricSpec = serde_json::from_str(text)?;
    let mut q = Matrix::<Rational>::zeros(dim, dim);
    let mut seen = vec![false; dim * dim];
    for e in &spec.entries {
        if e.i >= dim || e.j >= dim {
            return Err(Error::InvalidInput(format!(
                "entry ({},{}) out of range for dimension {dim}",
                e.i, e.j
            )));
        }
        if seen[e.i * dim + e.j] {
            return Err(Error::InvalidInput(format!(
                "entry ({},{}) specified twice",
                e.i, e.j
            )));
        }
        seen[e.i * dim + e.j] = true;
        seen[e.j * dim + e.i] = true;
        let v = parse_rational(&e.value)?;
        q[(e.i, e.j)] = v.clone();
        q[(e.j, e.i)] = v;
    }
    BilinearForm::new(q)
}

/// CSV rows `t,x_0,...,x_{n-1},q_norm` for every stored sample.
pub fn trajectory_csv(traj: &Trajectory<f64>) -> String {
    let dim = traj.states.first().map_or(0, |s| s.0.len());
    let mut out = String::from("t");
    for i in 0..dim {
        out.push_str(&format!(",x_{i}"));
    }
    out.push_str(",q_norm\n");
    for k in 0..traj.times.len() {
        out.push_str(&format!("{}", traj.times[k]));
        for x in traj.states[k].iter() {
            out.push_str(&format!(",{x}"));
        }
        out.push_str(&format!(",{}\n", traj.q_values[k]));
    }
    out
}

#[derive(Serialize)]
struct TrajectoryOut<'a> {
    times: &'a [f64],
    states: Vec<Vec<f64>>,
    q_values: &'a [f64],
    termination: &'a crate::flow::integrate::Termination,
    energy_drift: f64,
}

/// Full trajectory as one JSON document.
pub fn trajectory_json(traj: &Trajectory<f64>) -> String {
    let out = TrajectoryOut {
        times: &traj.times,
        states: traj.states.iter().map(|s| s.0.clone()).collect(),
        q_values: &traj.q_values,
        termination: &traj.termination,
        energy_drift: traj.energy_drift,
    };
    let mut s = serde_json::to_string_pretty(&out).expect("trajectory serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct TrajectorySidecar<'a> {
    termination: &'a crate::flow::integrate::Termination,
    samples: usize,
    t_first: f64,
    t_last: f64,
    energy_drift: f64,
}

/// Termination metadata accompanying a trajectory CSV.
pub fn trajectory_sidecar_json(traj: &Trajectory<f64>) -> String {
    let sidecar = TrajectorySidecar {
        termination: &traj.termination,
        samples: traj.times.len(),
        t_first: traj.times.first().copied().unwrap_or(0.0),
        t_last: traj.times.last().copied().unwrap_or(0.0),
        energy_drift: traj.energy_drift,
    };
    serde_json::to_string_pretty(&sidecar).expect("sidecar serializes")
}

#[derive(Serialize)]
struct PortraitOrbit<'a> {
    initial: Vec<f64>,
    times: &'a [f64],
    samples: Vec<Vec<f64>>,
    verdict: &'a OrbitVerdict,
}

/// JSON array of spherized orbits, each with its samples and verdict,
/// for external plotting.
pub fn sphere_portrait_json(orbits: &[SphereOrbit<f64>]) -> String {
    let dto: Vec<PortraitOrbit> = orbits
        .iter()
        .map(|o| PortraitOrbit {
            initial: o.initial.0.clone(),
            times: &o.times,
            samples: o.states.iter().map(|s| s.0.clone()).collect(),
            verdict: &o.verdict,
        })
        .collect();
    serde_json::to_string_pretty(&dto).expect("portrait serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Builtin;
    use crate::scalar::rat;

    const SOL_JSON: &str = r#"{
        "dim": 3,
        "basis": ["e1", "e2", "h"],
        "brackets": [
            {"i": 2, "j": 0, "coeffs": {"0": "1"}},
            {"i": 2, "j": 1, "coeffs": {"1": "-1"}}
        ]
    }"#;

    #[test]
    fn loaded_algebra_matches_the_builtin() {
        let loaded = load_algebra_json(SOL_JSON).unwrap();
        let builtin = Builtin::Sol.algebra();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert_eq!(
                        loaded.structure_constant(i, j, k),
                        builtin.structure_constant(i, j, k),
                        "mismatch at ({i},{j},{k})"
                    );
                }
            }
        }
    }

    #[test]
    fn duplicate_bracket_orientations_conflict() {
        let text = r#"{
            "dim": 2, "basis": ["a", "b"],
            "brackets": [
                {"i": 0, "j": 1, "coeffs": {"0": "1"}},
                {"i": 1, "j": 0, "coeffs": {"0": "-1"}}
            ]
        }"#;
        assert!(matches!(
            load_algebra_json(text),
            Err(Error::InvalidInput(m)) if m.contains("twice")
        ));
    }

    #[test]
    fn jacobi_violations_are_rejected() {
        // [a,b] = a and [b,c] = b with [a,c] = 0 breaks Jacobi on (a,b,c).
        let text = r#"{
            "dim": 3, "basis": ["a", "b", "c"],
            "brackets": [
                {"i": 0, "j": 1, "coeffs": {"0": "1"}},
                {"i": 1, "j": 2, "coeffs": {"1": "1"}}
            ]
        }"#;
        assert!(matches!(
            load_algebra_json(text),
            Err(Error::InvalidInput(m)) if m.contains("Jacobi")
        ));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = load_algebra_json("{\n  \"dim\": 3,\n}").unwrap_err();
        match err {
            Error::Json(e) => {
                assert_eq!(e.line(), 3);
                assert!(e.column() > 0);
            }
            other => panic!("expected a JSON error, got {other}"),
        }
    }

    #[test]
    fn metric_entries_complete_symmetrically() {
        let form = load_metric_json(
            r#"{"entries": [{"i": 0, "j": 2, "value": "3/2"}, {"i": 1, "j": 1, "value": "-1"}]}"#,
            3,
        )
        .unwrap();
        assert_eq!(form.matrix()[(0, 2)], rat(3, 2));
        assert_eq!(form.matrix()[(2, 0)], rat(3, 2));
        assert_eq!(form.matrix()[(1, 1)], rat(-1, 1));
        assert_eq!(form.matrix()[(0, 0)], rat(0, 1));
    }

    #[test]
    fn conflicting_metric_entries_are_rejected() {
        let r = load_metric_json(
            r#"{"entries": [{"i": 0, "j": 1, "value": "1"}, {"i": 1, "j": 0, "value": "2"}]}"#,
            2,
        );
        assert!(matches!(r, Err(Error::InvalidInput(m)) if m.contains("twice")));
    }

    #[test]
    fn csv_has_one_header_and_q_column() {
        use crate::flow::integrate::{integrate_geodesic, IntegrationOptions};
        let ma = Builtin::Sol.metric_algebra().to_float::<f64>();
        let x0 = crate::linalg::Vector(vec![1.0, 0.0, 0.0]);
        let traj = integrate_geodesic(&ma, &x0, &IntegrationOptions::default()).unwrap();
        let csv = trajectory_csv(&traj);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x_0,x_1,x_2,q_norm");
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 5);
        let sidecar = trajectory_sidecar_json(&traj);
        assert!(sidecar.contains("horizon_reached"));
    }
}
