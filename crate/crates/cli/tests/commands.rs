use std::fs;
use std::path::PathBuf;
use std::process::Command;

use fracfreq::identify::{criterion, MeasuredResponse};
use fracfreq::FractionalTF;
use fracfreq_cli::{load_tf, output::read_measured_csv, parse_tf_text, run_cli};
use proptest::prelude::*;
use serde_json::Value;

const EQ6_JSON: &str =
    r#"{"num":[{"c":1.0,"e":0.0}],"den":[{"c":1.0,"e":0.0},{"c":0.5,"e":0.9},{"c":0.8,"e":2.2}]}"#;
const EQ7_JSON: &str = r#"{"K":50.0,"Ti":0,"Td":5.326,"lambda":1.0,"delta":1.286}"#;

fn eq6() -> FractionalTF {
    FractionalTF::from_pairs(&[(1.0, 0.0)], &[(0.8, 2.2), (0.5, 0.9), (1.0, 0.0)]).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fracfreq-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("fracfreq").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn stability_of_worked_example_files() {
    let (plant, controller) = (scratch("eq6.json"), scratch("eq7.json"));
    fs::write(&plant, EQ6_JSON).unwrap();
    fs::write(&controller, EQ7_JSON).unwrap();
    let (code, out, err) =
        run(&["stability", "--plant", plant.to_str().unwrap(), "--controller", controller.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert_eq!(v["verdict"], "stable");
    assert_eq!(v["winding_number"], 0);
    assert_eq!(v["config"]["points_per_decade"], 64);
    assert_eq!(v["config"]["controller"]["Td"], 5.326);
}

#[test]
fn factored_controller_is_accepted() {
    let (code, out, err) = run(&[
        "compose",
        "--plant",
        "1",
        "--controller",
        r#"{"C":2.0,"xi":0.5,"omega_n":4.0,"lambda":1.0,"delta":1.0}"#,
    ]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    // K = 2Cξ/ωn = 0.5, Ti = C = 2, Td = C/ωn² = 0.125
    assert_eq!(v["config"]["controller"]["K"], 0.5);
    assert_eq!(v["config"]["controller"]["Ti"], 2.0);
    assert_eq!(v["config"]["controller"]["Td"], 0.125);
}

#[test]
fn identity_composition_leaves_plant_unchanged() {
    let (code, out, _) = run(&["compose", "--plant", "1/(s+1)", "--controller", r#"{"K":1,"Ti":0,"Td":0}"#]);
    assert_eq!(code, 0);
    let mut v = json(&out);
    v.as_object_mut().unwrap().remove("config");
    let tf: FractionalTF = serde_json::from_value(v).unwrap();
    assert_eq!(tf, parse_tf_text("1/(s+1)").unwrap());
}

#[test]
fn compose_renders_worked_open_loop() {
    let (code, out, _) = run(&["compose", "--plant", "1 / (0.8 s^2.2 + 0.5 s^0.9 + 1)", "--controller", EQ7_JSON]);
    assert_eq!(code, 0);
    let mut v = json(&out);
    v.as_object_mut().unwrap().remove("config");
    let tf: FractionalTF = serde_json::from_value(v).unwrap();
    let want = FractionalTF::from_pairs(&[(50.0, 0.0), (5.326, 1.286)], &[(0.8, 2.2), (0.5, 0.9), (1.0, 0.0)]).unwrap();
    assert_eq!(tf, want);
}

fn write_synthetic_csv(name: &str) -> PathBuf {
    let path = scratch(name);
    let mut text = String::from("omega,re,im\n");
    for k in 0..50 {
        let w = 10f64.powf(-2.0 + 4.0 * k as f64 / 49.0);
        let v = eq6().eval(w).unwrap();
        text.push_str(&format!("{w:.16e},{:.16e},{:.16e}\n", v.re, v.im));
    }
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn fit_recovers_synthetic_coefficients() {
    let data = write_synthetic_csv("meas.csv");
    let model = scratch("fitted.json");
    let (code, out, err) = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--den-exponents",
        "0,0.9,2.2",
        "--num-exponents",
        "0",
        "--model-output",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert_eq!(v["config"]["weighting"], "unit");
    let fitted = load_tf(model.to_str().unwrap()).unwrap();
    let want = [(1.0, 0.0), (0.5, 0.9), (0.8, 2.2)];
    for (t, (c, e)) in fitted.denominator().terms().iter().zip(want) {
        assert_eq!(t.exponent, e);
        assert!((t.coefficient - c).abs() < 1e-8, "{t:?}");
    }
    assert!((fitted.numerator().terms()[0].coefficient - 1.0).abs() < 1e-8);
}

#[test]
fn bode_csv_feeds_back_into_fit() {
    let csv = scratch("bode.csv");
    let (code, _, err) = run(&[
        "bode",
        "--plant",
        EQ6_JSON,
        "--omega-min",
        "0.01",
        "--omega-max",
        "100",
        "--points-per-decade",
        "16",
        "-o",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let (code, out, err) =
        run(&["fit", "--data", csv.to_str().unwrap(), "--den-exponents", "0,0.9,2.2", "--num-exponents", "0"]);
    assert_eq!(code, 0, "{err}");
    let q = json(&out)["q_value"].as_f64().unwrap();
    assert!(q <= 1e-12, "{q}");
    // the re-read data agree with the generating model to CSV precision
    let data: MeasuredResponse = read_measured_csv(fs::File::open(&csv).unwrap()).unwrap();
    assert!(criterion(&eq6(), &data).unwrap() <= 1e-12);
}

#[test]
fn svg_outputs_are_written() {
    let (csv, svg) = (scratch("n.csv"), scratch("n.svg"));
    let (code, _, _) =
        run(&["nyquist", "--plant", EQ6_JSON, "-o", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(fs::read_to_string(&csv).unwrap().starts_with("omega,re,im\n"));
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let (code, out, _) = run(&["bode", "--plant", "1/(s+1)", "--format", "svg"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("<svg"));
}

#[test]
fn exit_codes_follow_outcome_class() {
    // input errors
    let (code, _, err) = run(&["stability", "--plant", "1/(s+"]);
    assert_eq!(code, 1);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "));
    assert_eq!(run(&["margins", "--plant", "1/0"]).0, 1);
    assert_eq!(run(&["fit", "--data", "/nonexistent/x.csv", "--den-exponents", "0,1"]).0, 1);
    assert_eq!(run(&["bode", "--plant", "1", "--omega-min", "-1"]).0, 1);
    assert_eq!(run(&["margins", "--plant", "1", "--format", "csv"]).0, 1);
    assert_eq!(run(&["bogus"]).0, 1);
    // a truncated integrator tail cannot be closed inside the window
    let (code, out, _) = run(&["stability", "--plant", "1/s", "--omega-min", "1", "--omega-max", "10"]);
    assert_eq!(code, 2);
    assert_eq!(json(&out)["verdict"], "indeterminate");
}

#[test]
fn binary_reports_exit_status() {
    let bin = env!("CARGO_BIN_EXE_fracfreq");
    let ok = Command::new(bin).args(["compose", "--plant", "s"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(bin).args(["compose", "--plant", "s^"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&bad.stderr).lines().count(), 1);
}

#[test]
fn env_var_sets_default_density() {
    let bin = env!("CARGO_BIN_EXE_fracfreq");
    let out = Command::new(bin)
        .args(["margins", "--plant", "1/(s+1)"])
        .env("FRACFREQ_POINTS_PER_DECADE", "12")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&String::from_utf8(out.stdout).unwrap())["config"]["points_per_decade"], 12);
}

fn term_text() -> impl Strategy<Value = String> {
    (0.01f64..100.0, prop_oneof![Just(None), (-3.0f64..3.0).prop_map(Some)]).prop_map(|(c, e)| match e {
        None => format!("{c}"),
        Some(e) if e < 0.0 => format!("{c}*s^({e})"),
        Some(e) => format!("{c} s^{e}"),
    })
}

fn poly_text() -> impl Strategy<Value = String> {
    prop::collection::vec((term_text(), any::<bool>()), 1..4).prop_map(|terms| {
        let mut s = String::new();
        for (k, (t, neg)) in terms.into_iter().enumerate() {
            if k > 0 || neg {
                s.push_str(if neg { " - " } else { " + " });
            }
            s.push_str(&t);
        }
        s
    })
}

proptest! {
    #[test]
    fn parse_json_round_trip(num in poly_text(), den in poly_text()) {
        let text = format!("({num}) / ({den})");
        if let Ok(tf) = parse_tf_text(&text) {
            let json = serde_json::to_string(&tf).unwrap();
            let back: FractionalTF = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(&back, &tf);
            prop_assert_eq!(load_tf(&json).unwrap(), tf);
        }
    }
}
