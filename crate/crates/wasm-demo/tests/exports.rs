use kaczmarz_wasm::{bound_curves_data, convergence_data, momentum_sweep_data};
use serde_json::Value;

#[test]
fn convergence_reports_three_methods_under_the_bound() {
    let v: Value = serde_json::from_str(&convergence_data(200, 20, 20, 5.0, 0.01, 3).unwrap()).unwrap();
    let curves = v["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 3);
    for c in curves {
        let pts = c["points"].as_array().unwrap();
        assert!(pts.len() <= 401);
        let last = pts.last().unwrap()[1].as_f64().unwrap();
        assert!(last <= 1e-12, "{}: {last}", c["label"]);
    }
    // iGRK is the second curve; every sampled point must sit under the guarantee
    let bound: Vec<(u64, f64)> = serde_json::from_value(v["bound"].clone()).unwrap();
    let igrk: Vec<(u64, f64)> = serde_json::from_value(curves[1]["points"].clone()).unwrap();
    for (k, e) in igrk {
        if let Some((_, b)) = bound.iter().find(|(kb, _)| *kb == k) {
            assert!(e <= b * (1.0 + 1e-9) + 1e-12, "k={k}: {e} > {b}");
        }
    }
}

#[test]
fn sweep_crosses_one_at_the_upper_bound() {
    let v: Value = serde_json::from_str(&momentum_sweep_data(1.0, 0.2, 301).unwrap()).unwrap();
    let upper = v["beta_upper"].as_f64().unwrap();
    for p in v["points"].as_array().unwrap() {
        let beta = p["beta"].as_f64().unwrap();
        let sum = p["gamma_sum"].as_f64().unwrap();
        // independent check of γ₁+γ₂ at α=1, s/F=0.2: 4β² + 4β + 1 − (3β + 1)·0.2
        let direct = 4.0 * beta * beta + 4.0 * beta + 1.0 - (3.0 * beta + 1.0) * 0.2;
        assert!((sum - direct).abs() < 1e-12);
        assert_eq!(p["feasible"].as_bool().unwrap(), sum < 1.0);
        if (beta - upper).abs() > 1e-9 {
            assert_eq!(beta < upper, sum < 1.0, "beta={beta}");
        }
    }
}

#[test]
fn bound_curves_are_ordered() {
    let v: Value = serde_json::from_str(&bound_curves_data(100, 20, 10, 8.0, 5, 50).unwrap()).unwrap();
    let imp: Vec<f64> = serde_json::from_value(v["bound_curve"].clone()).unwrap();
    let cls: Vec<f64> = serde_json::from_value(v["grk_curve"].clone()).unwrap();
    assert_eq!(imp.len(), 51);
    assert!(imp.iter().zip(&cls).all(|(i, c)| i <= c));
}

#[test]
fn bad_input_is_an_error_string() {
    assert!(convergence_data(2000, 1000, 10, 5.0, 0.0, 1).is_err());
    assert!(convergence_data(10, 5, 9, 5.0, 0.0, 1).is_err());
    assert!(momentum_sweep_data(1.0, 1.5, 10).is_err());
    assert!(momentum_sweep_data(1.5, 0.2, 10).is_err());
}
