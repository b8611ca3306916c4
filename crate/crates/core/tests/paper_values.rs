//! Published reference numbers reproduced through the library's own arithmetic.

use protonpipe::analysis::{barrier, rate_sensitivity, Method, PathPoint};
use protonpipe::circuit::{Circuit, Gate};
use protonpipe::hamiltonian::{LmrWeights, TRAJECTORY_LABELS};
use protonpipe::noise::{depolarizing_parameter, noisy_expectation, NoiseModel, QubitNoise, Shots};
use protonpipe::pauli::PauliSum;
use protonpipe::zne::{bootstrap_table, BootstrapInterval};

/// Reported absolute energies carry this constant offset.
const OFFSET_HA: f64 = 265.0;

fn point(label: &str, method: Method, reported_mha: f64) -> PathPoint {
    PathPoint::new(label, method, reported_mha * 1e-3 - OFFSET_HA).unwrap()
}

#[test]
fn barriers_from_reported_energies() {
    let rows = [
        (Method::Casci, -600.666, -588.809, 11.857),
        (Method::Hf, -552.090, -549.241, 2.850),
        (Method::VqeDeep, -599.268, -587.497, 11.771),
        (Method::VqeShallow, -591.237, -579.609, 11.628),
        (Method::AqcHigh, -578.785, -565.358, 13.427),
        (Method::AqcLow, -578.785, -551.645, 27.140),
    ];
    let points: Vec<PathPoint> =
        rows.iter().flat_map(|&(m, l, mid, _)| [point("300", m, l), point("030", m, mid)]).collect();
    for (m, _, _, want) in rows {
        let b = barrier(&points, m).unwrap();
        // each energy is rounded to 0.001 mHa, so the difference can be off by one unit
        assert!((b.delta * 1e3 - want).abs() <= 1e-3 + 1e-9, "{m}: {} mHa", b.delta * 1e3);
        assert!(b.sigma.is_none());
    }
}

#[test]
fn fit_first_uncertainties_add_in_quadrature() {
    let points = [
        point("300", Method::Zne, -548.0).with_uncertainty(7e-3),
        point("030", Method::Zne, -524.0).with_uncertainty(10e-3),
    ];
    let b = barrier(&points, Method::Zne).unwrap();
    assert!((b.delta * 1e3 - 24.0).abs() < 1e-6);
    assert_eq!((b.sigma.unwrap() * 1e3).round(), 12.0);
}

#[test]
fn trajectory_label_weights() {
    let want = [
        (1.0, 0.0, 0.0),
        (2.0 / 3.0, 1.0 / 3.0, 0.0),
        (1.0 / 3.0, 2.0 / 3.0, 0.0),
        (0.0, 1.0, 0.0),
        (0.0, 2.0 / 3.0, 1.0 / 3.0),
        (0.0, 1.0 / 3.0, 2.0 / 3.0),
        (0.0, 0.0, 1.0),
    ];
    for (label, (a, b, g)) in TRAJECTORY_LABELS.iter().zip(want) {
        let w = LmrWeights::from_label(label).unwrap();
        assert_eq!((w.alpha, w.beta, w.gamma), (a, b, g), "{label}");
    }
}

#[test]
fn barrier_tolerance_for_twenty_percent_at_120_kelvin() {
    let s = rate_sensitivity(0.08e-3, 120.0).unwrap();
    assert!((-0.22..=-0.19).contains(&s.linearized), "{}", s.linearized);
    let mev: f64 = 0.08e-3 * 27.211386245988 * 1e3;
    assert!((mev - 2.0).abs() < 0.25, "{mev} meV");
}

#[test]
fn layered_gate_error_as_a_two_qubit_channel() {
    let eplg = 0.003108;
    let cal = format!(r#"{{"qubits": [{{}}, {{}}], "eplg18": {eplg}}}"#);
    let nm = NoiseModel::from_json(&cal).unwrap();
    assert_eq!(nm.eplg, Some(eplg));

    let p = depolarizing_parameter(eplg, &[QubitNoise::IDEAL; 2], 0.0);
    assert!((p - eplg * 4.0 / 3.0).abs() < 1e-15);

    let nm = NoiseModel::depolarizing(2, 0.0, eplg).unwrap();
    let mut bell = Circuit::new(2);
    bell.push(Gate::H(0)).unwrap();
    bell.push(Gate::Cx(0, 1)).unwrap();
    let zz = PauliSum::from_labels(2, &[(num_complex::Complex64::new(1.0, 0.0), "ZZ")]).unwrap();
    let got = noisy_expectation(&bell, &zz, &nm, Shots::Exact).unwrap();
    assert!((got - (1.0 - p)).abs() < 1e-12);
}

#[test]
fn bootstrap_summary_rows() {
    let interval = |median: f64, p15: f64, p85: f64| BootstrapInterval {
        median,
        p15,
        p85,
        n_boot: 1000,
        note: None,
    };
    let (ff, df) = (interval(0.024, 0.015, 0.032), interval(0.017, 0.014, 0.021));
    let table = bootstrap_table(&[("Fit first", &ff), ("Diff first", &df)], 0);
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(rows, vec![vec!["Fit", "first", "24", "15", "32"], vec!["Diff", "first", "17", "14", "21"]]);
}

#[test]
fn empty_circuit_has_no_two_qubit_cost() {
    assert_eq!(Circuit::new(4).two_qubit_metrics(), (0, 0));
}
