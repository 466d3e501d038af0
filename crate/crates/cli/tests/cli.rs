use std::path::Path;
use std::process::{Command, Output};

use gquant::grassmann::{self, AlgebraSpec, GrassmannElement};
use gquant::io;
use gquant::linalg::{self, c64};
use gquant::twospin::{self, TwoSpinParams};
use serde_json::Value;

fn gquant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gquant")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv(o: &Output) -> Vec<Vec<String>> {
    stdout(o)
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn col(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let k = rows[0].iter().position(|h| h == name).unwrap();
    rows[1..].iter().map(|r| r[k].clone()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn spectrum_toy_model_is_pseudo_hermitian() {
    let o = gquant(&["spectrum", "--J", "1", "--B", "1", "--alpha1", "1", "--alpha2", "-1"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv(&o);
    assert!(col(&rows, "pseudo_hermitian").iter().all(|v| v == "1"));
    assert!(num(&col(&rows, "max_discrepancy")[0]) < 1e-12);
    // 4J² + F₋² = 4 − 1.
    assert_eq!(num(&col(&rows, "threshold_margin")[0]), 3.0);
}

#[test]
fn spectrum_equal_dampings_have_no_split_but_complex_sum_field() {
    // α₁ = α₂ gives F₋ = 0; F₊ = 2B/(1 − i) is complex, so E2± are complex.
    let o = gquant(&["spectrum", "--J", "0", "--B", "1", "--alpha1", "1", "--alpha2", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["f_minus"]["re"], 0.0);
    assert_eq!(v["f_minus"]["im"], 0.0);
    assert_eq!(v["f_plus"]["im"], 1.0);
    assert_eq!(v["pseudo_hermitian"], false);
    // Undamped: F₊ real and the model hermitian.
    let o = gquant(&["spectrum", "--J", "0", "--B", "1", "--alpha1", "0", "--alpha2", "0"]);
    assert!(col(&csv(&o), "pseudo_hermitian").iter().all(|v| v == "1"));
}

#[test]
fn paper_units_scale_by_four() {
    let base = ["spectrum", "--J", "0.7", "--B", "1.3", "--alpha1", "0.2", "--alpha2", "-0.2"];
    let plain = csv(&gquant(&base));
    let mut args = base.to_vec();
    args.push("--paper-units");
    let paper = csv(&gquant(&args));
    for name in ["re_closed", "im_closed", "re_numeric"] {
        for (a, b) in col(&plain, name).iter().zip(col(&paper, name)) {
            assert!((4.0 * num(a) - num(&b)).abs() < 1e-14);
        }
    }
}

#[test]
fn sweep_flip_brackets_threshold() {
    let o = gquant(&[
        "regime-sweep", "--J", "1", "--alpha1", "0.5", "--alpha2", "-0.5", "--b-min", "2.4", "--b-max", "2.6",
        "--b-points", "21",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv(&o);
    assert_eq!(rows[0].join(","), twospin::SWEEP_HEADER);
    assert_eq!(rows.len(), 22);
    let b: Vec<f64> = col(&rows, "B").iter().map(|s| num(s)).collect();
    let ph = col(&rows, "pseudo_hermitian");
    let flips: Vec<usize> = (1..ph.len()).filter(|&k| ph[k] != ph[k - 1]).collect();
    assert_eq!(flips.len(), 1);
    let k = flips[0];
    assert_eq!((ph[k - 1].as_str(), ph[k].as_str()), ("1", "0"));
    assert!(b[k - 1] <= 2.5 && 2.5 <= b[k]);
    assert!(b[k] - b[k - 1] < 0.0100001);
}

#[test]
fn sweep_single_point() {
    let o = gquant(&["regime-sweep", "--B", "0.001", "--J", "0.001", "--alpha1", "0", "--alpha2", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv(&o);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].len(), rows[0].len());
}

#[test]
fn sweep_zero_damping_column_is_pseudo_hermitian() {
    let o = gquant(&[
        "regime-sweep", "--alpha-min", "0", "--alpha-max", "1", "--alpha-points", "3", "--b-min", "0.5", "--b-max",
        "20", "--b-points", "40",
    ]);
    let rows = csv(&o);
    assert_eq!(rows.len(), 1 + 3 * 40);
    let a1 = col(&rows, "alpha1");
    let ph = col(&rows, "pseudo_hermitian");
    let zero: Vec<&String> = a1.iter().zip(&ph).filter(|(a, _)| *a == "0").map(|(_, p)| p).collect();
    assert_eq!(zero.len(), 40);
    assert!(zero.iter().all(|p| *p == "1"));
    assert!(ph.iter().any(|p| p == "0"));
}

#[test]
fn sweep_json_and_axis_conflict() {
    let o = gquant(&["regime-sweep", "--b-min", "1", "--b-max", "2", "--b-points", "3", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert_eq!(v[2]["B"], 2.0);
    let o = gquant(&["regime-sweep", "--alpha-points", "2", "--j-points", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_workers_do_not_change_output() {
    let args = ["regime-sweep", "--b-min", "0.1", "--b-max", "6", "--b-points", "500", "--alpha1", "0.5", "--alpha2", "-0.5"];
    let one = gquant(&[&args[..], &["--workers", "1"]].concat());
    let many = gquant(&[&args[..], &["--workers", "8"]].concat());
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn evolve_rho_norm_constant() {
    let o = gquant(&["evolve", "--J", "1", "--B", "1", "--alpha1", "1", "--alpha2", "-1", "--t-end", "10", "--t-points", "101"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv(&o);
    assert_eq!(rows[0].join(","), "t,re_amp,im_amp,probability,rho_norm");
    assert_eq!(rows.len(), 102);
    let norms: Vec<f64> = col(&rows, "rho_norm").iter().map(|s| num(s)).collect();
    assert!(norms.iter().all(|n| (n - norms[0]).abs() < 1e-9));
    let probs: Vec<f64> = col(&rows, "probability").iter().map(|s| num(s)).collect();
    assert!(probs.iter().all(|p| (0.0..=1.0 + 1e-12).contains(p)));
}

#[test]
fn evolve_initial_probability_is_normalized_overlap() {
    let p = TwoSpinParams::toy(1.0, 1.0, 1.0).unwrap();
    let rho = twospin::paper_isomorphism(&p).unwrap().rho;
    let r = rho.matrix();
    for (init, target) in [(1, 2), (1, 1), (0, 3)] {
        let o = gquant(&[
            "evolve", "--J", "1", "--B", "1", "--alpha1", "1", "--alpha2", "-1", "--t-points", "1", "--initial",
            &init.to_string(), "--target", &target.to_string(),
        ]);
        let rows = csv(&o);
        let got = num(&col(&rows, "probability")[0]);
        let want = r[(target, init)].norm_sqr() / (r[(target, target)].re * r[(init, init)].re);
        assert!((got - want).abs() < 1e-12, "{init}->{target}: {got} vs {want}");
    }
}

#[test]
fn evolve_refuses_dissipative_without_flag() {
    let o = gquant(&["evolve", "--J", "1", "--B", "4", "--alpha1", "1", "--alpha2", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--allow-dissipative"));
}

#[test]
fn evolve_dissipative_reports_canonical_norm() {
    // B = 2 B_max for J = 1, α = 1.
    let mut monotone = false;
    for init in 0..4 {
        let o = gquant(&[
            "evolve", "--J", "1", "--B", "4", "--alpha1", "1", "--alpha2", "-1", "--allow-dissipative", "--t-end",
            "5", "--t-points", "51", "--initial", &init.to_string(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let rows = csv(&o);
        assert_eq!(rows[0].last().unwrap(), "canonical_norm");
        assert!(col(&rows, "rho_norm").iter().all(|v| v == "nan"));
        let n: Vec<f64> = col(&rows, "canonical_norm").iter().map(|s| num(s)).collect();
        let up = n.windows(2).all(|w| w[1] > w[0]);
        let down = n.windows(2).all(|w| w[1] < w[0]);
        monotone |= up || down;
    }
    assert!(monotone);
}

#[test]
fn evolve_validation() {
    assert_eq!(gquant(&["evolve", "--t-start", "2", "--t-end", "1"]).status.code(), Some(1));
    assert_eq!(gquant(&["evolve", "--t-points", "0"]).status.code(), Some(1));
    assert_eq!(gquant(&["evolve", "--initial", "4"]).status.code(), Some(1));
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_matrix(o: &Output) -> linalg::CMatrix {
    io::matrix_from_json(&stdout(o)).unwrap()
}

#[test]
fn quantize_file_precession() {
    let dir = tempfile::tempdir().unwrap();
    let a = AlgebraSpec::single(3);
    let h = grassmann::precession_hamiltonian(&a, 0, [c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]).unwrap();
    let e = write(dir.path(), "h.json", &h.to_json());
    let r = write(dir.path(), "r.json", r#"{"families":[3],"hbar":1.0}"#);
    let o = gquant(&["quantize-file", "--element", &e, "--realization", &r, "--check"]);
    assert_eq!(o.status.code(), Some(0));
    let q = read_matrix(&o);
    let want = &linalg::pauli()[2] * c64(0.5, 0.0);
    assert!(linalg::max_abs_diff(&q, &want) < 1e-15);
    // --hbar overrides the realization file.
    let o = gquant(&["quantize-file", "--element", &e, "--realization", &r, "--hbar", "2"]);
    assert!(linalg::max_abs_diff(&read_matrix(&o), &linalg::pauli()[2]) < 1e-15);
}

#[test]
fn quantize_file_unit_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let one = GrassmannElement::one(&AlgebraSpec::new(vec![3, 3], false).unwrap());
    let e = write(dir.path(), "one.json", &one.to_json());
    let o = gquant(&["quantize-file", "--element", &e]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_matrix(&o), linalg::identity(4));
}

#[test]
fn quantize_file_heisenberg_matches_interaction() {
    let dir = tempfile::tempdir().unwrap();
    let a = AlgebraSpec::new(vec![3, 3], false).unwrap();
    let r = write(dir.path(), "r.json", r#"{"families":[3,3],"hbar":1.0}"#);
    // The interaction builder symmetrizes J, so compare on symmetric couplings.
    for j in [twospin::isotropic(1.7), [[0.3, -0.2, 0.0], [-0.2, 1.1, 0.4], [0.0, 0.4, -0.7]]] {
        let f = grassmann::coupling_term(&a, &j).unwrap();
        let e = write(dir.path(), "j.json", &f.to_json());
        let o = gquant(&["quantize-file", "--element", &e, "--realization", &r, "--check"]);
        assert_eq!(o.status.code(), Some(0));
        assert!(linalg::max_abs_diff(&read_matrix(&o), &twospin::build_interaction(&j)) < 1e-14);
    }
}

#[test]
fn quantize_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{not json");
    assert_eq!(gquant(&["quantize-file", "--element", &bad]).status.code(), Some(1));
    let one = GrassmannElement::one(&AlgebraSpec::single(3));
    let e = write(dir.path(), "one.json", &one.to_json());
    let r = write(dir.path(), "r.json", r#"{"families":[3,3]}"#);
    let o = gquant(&["quantize-file", "--element", &e, "--realization", &r]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(gquant(&["quantize-file"]).status.code(), Some(1));
}

#[test]
fn verify_group_filter() {
    let o = gquant(&["verify", "--group", "clifford"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let groups = v["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 1);
    assert_eq!(groups[0]["name"], "clifford");
    assert_eq!(v["passed"], true);
    assert_eq!(gquant(&["verify", "--group", "nonsense"]).status.code(), Some(1));
}

#[test]
fn verify_locates_injected_fault() {
    let o = gquant(&["verify", "--group", "clifford", "--group", "spectrum", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let g = &v["groups"][0];
    assert_eq!(g["passed"], false);
    assert_eq!(g["module"], "quantize");
    assert_eq!(v["groups"][1]["passed"], true);
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL clifford (quantize)"));
}

#[test]
fn verify_default_seed_passes() {
    let o = gquant(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"J": 1.0, "B": 1.0, "alpha1": 1.0, "alpha2": -1.0, "format": "json"}"#);
    let from_file = gquant(&["spectrum", "--config", &cfg]);
    let v: Value = serde_json::from_str(&stdout(&from_file)).unwrap();
    assert_eq!(v["B"], 1.0);
    let overridden = gquant(&["spectrum", "--config", &cfg, "--B", "3"]);
    let v: Value = serde_json::from_str(&stdout(&overridden)).unwrap();
    assert_eq!(v["B"], 3.0);
    assert_eq!(v["pseudo_hermitian"], false);
    let bad = write(dir.path(), "bad.json", r#"{"Bfield": 1.0}"#);
    assert_eq!(gquant(&["spectrum", "--config", &bad]).status.code(), Some(1));
}

#[test]
fn out_file_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.csv");
    let p2 = dir.path().join("b.csv");
    for p in [&p1, &p2] {
        let o = gquant(&["evolve", "--t-end", "3", "--t-points", "31", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(gquant(&["spectrum", "--B", "-1"]).status.code(), Some(1));
    assert_eq!(gquant(&["spectrum", "--tol", "0"]).status.code(), Some(1));
    assert_eq!(gquant(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gquant(&["spectrum", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(gquant(&["--help"]).status.code(), Some(0));
}
