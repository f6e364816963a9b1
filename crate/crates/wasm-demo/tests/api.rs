use calforecast_wasm_demo::api::{self, hull_at, upper_hull};
use serde_json::Value;

fn call(f: fn(&str) -> Result<String, String>, req: &str) -> Value {
    serde_json::from_str(&f(req).unwrap()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn toy_prior_persuades_to_one() {
    let v = call(
        api::persuade,
        r#"{"preset":"indicator","masses":[0.5,0.5],"points":[0.2,0.8]}"#,
    );
    assert!(close(v["value"].as_f64().unwrap(), 1.0, 1e-9));
    assert_eq!(v["babbling"].as_f64(), Some(0.0));
    assert_eq!(v["honest"].as_f64(), Some(0.0));
    let mut q: Vec<(f64, f64)> = v["q_star"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (a[0].as_f64().unwrap(), a[1].as_f64().unwrap()))
        .collect();
    q.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert_eq!(q.len(), 2);
    assert!(close(q[0].0, 0.4, 1e-9) && close(q[1].0, 0.6, 1e-9));
    assert!(close(q[0].1, 0.5, 1e-9) && close(q[1].1, 0.5, 1e-9));
    assert_eq!(v["curve"].as_array().unwrap().len(), 401);
}

#[test]
fn envelope_at_the_mean_is_the_lp_value() {
    for (preset, masses, points) in [
        ("indicator", "[0.5,0.5]", "[0.2,0.8]"),
        ("window", "[0.3,0.7]", "[0.1,0.9]"),
        ("exploit", "[0.5,0.5]", "[0.2,0.8]"),
        ("financial", "[0.5,0.5]", "[0.05,0.95]"),
        ("exploit", "[0.2,0.5,0.3]", "[0.0,0.45,0.7]"),
    ] {
        let req = format!(r#"{{"preset":"{preset}","masses":{masses},"points":{points}}}"#);
        let v = call(api::persuade, &req);
        let env: Vec<[f64; 2]> = serde_json::from_value(v["envelope"].clone()).unwrap();
        let at = hull_at(&env, v["mean"].as_f64().unwrap()).unwrap();
        let value = v["value"].as_f64().unwrap();
        assert!(
            close(at, value, 1e-7),
            "{preset}: envelope {at} vs lp {value}"
        );
        assert!(value >= v["babbling"].as_f64().unwrap() - 1e-9);
        assert!(value >= v["honest"].as_f64().unwrap() - 1e-9);
    }
}

#[test]
fn financial_value_matches_cli_band() {
    let v = call(
        api::persuade,
        r#"{"preset":"financial","masses":[0.5,0.5],"points":[0.05,0.95]}"#,
    );
    let value = v["value"].as_f64().unwrap();
    assert!(close(value, 3.003669, 1e-4), "{value}");
}

#[test]
fn policy_rows_are_distributions() {
    let v = call(
        api::persuade,
        r#"{"preset":"exploit","masses":[0.5,0.5],"points":[0.2,0.8]}"#,
    );
    for row in v["policy"].as_array().unwrap() {
        let s: f64 = row
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .sum();
        assert!(close(s, 1.0, 1e-9));
    }
}

#[test]
fn hull_helpers() {
    let h = upper_hull(&[[0.0, 0.0], [0.25, 1.0], [0.5, 0.2], [1.0, 1.0]]);
    assert_eq!(h, vec![[0.0, 0.0], [0.25, 1.0], [1.0, 1.0]]);
    assert!(close(hull_at(&h, 0.5).unwrap(), 1.0, 1e-12));
    assert!(close(hull_at(&h, 0.125).unwrap(), 0.5, 1e-12));
    assert_eq!(hull_at(&h, 1.5), None);
}

#[test]
fn honest_play_is_calibrated_and_repeatable() {
    let req = r#"{"preset":"exploit","chain":[0.2,0.8],"sender":"honest","receiver":"calibration","horizon":20000,"seed":3,"every":1000}"#;
    let a = api::play(req).unwrap();
    assert_eq!(a, api::play(req).unwrap());
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["checkpoints"].as_array().unwrap().len(), 20);
    let s = &v["summary"];
    assert!(s["calibration_score"].as_f64().unwrap() < 0.02);
    assert!(
        close(s["sender_average"].as_f64().unwrap(), 2.0, 0.1),
        "{s}"
    );
}

#[test]
fn swap_exploits_mean_based_receiver() {
    let req = r#"{"preset":"exploit","chain":[0.2,0.8],"sender":"swap","receiver":"mean-based","horizon":20000,"seed":1}"#;
    let v = call(api::play, req);
    assert!(
        v["summary"]["sender_average"].as_f64().unwrap() > 2.5,
        "{}",
        v["summary"]
    );
}

#[test]
fn play_rejects_bad_requests() {
    for req in [
        r#"{"preset":"financial","chain":[0.2,0.8],"sender":"honest","receiver":"calibration","horizon":10}"#,
        r#"{"preset":"exploit","chain":[0.2,0.8],"sender":"honest","receiver":"calibration","horizon":0}"#,
        r#"{"preset":"exploit","chain":[0.2,0.8],"sender":"honest","receiver":"calibration","horizon":2000000}"#,
        r#"{"preset":"exploit","chain":[1.2,0.8],"sender":"honest","receiver":"calibration","horizon":10}"#,
        r#"{"preset":"exploit","chain":[0.2,0.8],"sender":"liar","receiver":"calibration","horizon":10}"#,
    ] {
        assert!(api::play(req).is_err(), "{req}");
    }
}

#[test]
fn ten_period_rows() {
    let states = "[1,0,1,1,0,1,0,1,1,0]";
    let sched = r#"{"scale":0.05,"exponent":0.0}"#;
    let rows = [
        ("[0.6,0.6,0.6,0.6,0.6,0.6,0.6,0.6,0.6,0.6]", 0.0, true),
        (
            "[0.8,0.2,0.8,0.8,0.2,0.8,0.2,0.8,0.8,0.2]",
            0.2 * std::f64::consts::SQRT_2,
            false,
        ),
    ];
    for (f, want, pass) in rows {
        let v = call(
            api::score,
            &format!(r#"{{"states":{states},"forecasts":{f},"schedule":{sched}}}"#),
        );
        assert!(close(v["score"].as_f64().unwrap(), want, 1e-12), "{v}");
        assert_eq!(v["outcome"] == "pass", pass, "{v}");
    }
    assert!(api::score(&format!(
        r#"{{"states":[0,2],"forecasts":[0.1,0.2],"schedule":{sched}}}"#
    ))
    .is_err());
    assert!(api::score(&format!(
        r#"{{"states":[0],"forecasts":[0.1,0.2],"schedule":{sched}}}"#
    ))
    .is_err());
}
