use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use varis::model::{parse_network, serialize_network, BayesianNetwork, CptRows, Evidence, Variable};

fn varis(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varis")).args(args).current_dir(dir).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_or_gate(dir: &Path, observed: bool) {
    let net = BayesianNetwork::<f64>::new(
        vec![Variable::new("A", &["0", "1"]), Variable::new("B", &["0", "1"]), Variable::new("D", &["0", "1"])],
        vec![
            CptRows::new(0, vec![], vec![vec![0.5, 0.5]]),
            CptRows::new(1, vec![], vec![vec![0.5, 0.5]]),
            CptRows::new(2, vec![0, 1], vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]]),
        ],
    )
    .unwrap();
    let ev = Evidence::from_pairs([(2, 0)]);
    std::fs::write(dir.join("or.json"), serialize_network(&net, observed.then_some(&ev))).unwrap();
}

#[test]
fn exact_on_the_or_gate() {
    let tmp = tempfile::tempdir().unwrap();
    write_or_gate(tmp.path(), true);
    let v = json(&varis(&["exact", "or.json"], tmp.path()));
    assert!((v["ln_likelihood"].as_f64().unwrap() - 0.25f64.ln()).abs() < 1e-12);

    let v = json(&varis(&["exact", "or.json", "--evidence", "D=1"], tmp.path()));
    assert!((v["ln_likelihood"].as_f64().unwrap() - 0.75f64.ln()).abs() < 1e-12);

    write_or_gate(tmp.path(), false);
    let v = json(&varis(&["exact", "or.json"], tmp.path()));
    assert_eq!(v["ln_likelihood"].as_f64(), Some(0.0));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("bad.json"), "{ \"variables\": [").unwrap();
    let out = varis(&["exact", "bad.json"], dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    assert_eq!(varis(&["exact", "missing.json"], dir).status.code(), Some(2));
    assert_eq!(varis(&["generate", "--nodes", "0", "--out", "x.json"], dir).status.code(), Some(2));

    varis(&["generate", "--nodes", "14", "--seed", "3", "--out", "g.json"], dir);
    let out = varis(&["exact", "g.json", "--enum-cap", "4", "--table-cap", "2"], dir);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    write_or_gate(dir, true);
    assert_eq!(varis(&["sample", "or.json", "varis", "--eta0", "2"], dir).status.code(), Some(2));
    assert_eq!(varis(&["exact", "or.json", "--evidence", "D=7"], dir).status.code(), Some(2));
}

#[test]
fn generate_fully_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let v = json(&varis(&["generate", "--nodes", "10", "--det", "1.0", "--seed", "1", "--out", "d.json"], dir));
    assert!(v["ln_likelihood"].as_f64().unwrap().is_finite());
    let (net, _) = parse_network::<f64>(&std::fs::read_to_string(dir.join("d.json")).unwrap()).unwrap();
    for v in 0..net.num_vars() {
        let cpt = net.cpt(v);
        for r in 0..cpt.num_rows() {
            assert!(cpt.row(r).contains(&1.0), "row {r} of {v}");
        }
    }
    let again = json(&varis(&["exact", "d.json"], dir));
    assert_eq!(again, v);
}

#[test]
fn wide_bound_sampling_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let exact = json(&varis(&["generate", "--nodes", "10", "--det", "0.5", "--seed", "4", "--out", "n.json"], dir));
    let summary =
        json(&varis(&["sample", "n.json", "varis", "--width-bound", "999", "--samples", "200", "--batch", "50"], dir));
    let e = exact["ln_likelihood"].as_f64().unwrap();
    assert!((summary["estimate_ln"].as_f64().unwrap() - e).abs() < 1e-9);
    assert_eq!(summary["deleted_edges"], 0);
}

#[test]
fn summary_echoes_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_or_gate(dir, true);
    let s = json(&varis(&["sample", "or.json", "lw", "--samples", "2000"], dir));
    let c = &s["config"];
    assert_eq!(c["batch"], 1000);
    assert_eq!(c["eta0"], 0.12);
    assert_eq!(c["eta_final"], 0.03);
    assert_eq!(c["alpha"], 0.1);
    assert_eq!(c["beta"], 0.2);
    assert_eq!(c["window"], 10);
    assert_eq!(c["w0"], 0.001);
    assert_eq!(c["fit"], "moment");
    assert_eq!(s["M"], 2000);
    assert_eq!(s["seed"], 0);
}

#[test]
fn static_algorithm_equals_disabled_adaptation() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    varis(&["generate", "--nodes", "12", "--det", "0.5", "--seed", "9", "--out", "n.json"], dir);
    let common = ["--samples", "3000", "--batch", "100", "--width-bound", "1", "--seed", "5"];
    let run = |alg: &str, extra: &[&str], out: &str| {
        let mut args = vec!["sample", "n.json", alg, "--out", out];
        args.extend_from_slice(&common);
        args.extend_from_slice(extra);
        assert!(varis(&args, dir).status.success());
        std::fs::read_to_string(dir.join(out).join("trace.csv")).unwrap()
    };
    let a = run("varis-static", &[], "a");
    let b = run("varis", &["--no-adapt", "--no-direct"], "b");
    assert_eq!(a, b);
    assert!(a.starts_with("k,ln_Ptilde_k,ln_Ptilde_cum,D_hat_k,sigma_hat_k,w_k,eta_k,accepted,directing_event\n"));
    assert_eq!(a.lines().count(), 31);
}

#[test]
fn compare_table() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::create_dir(dir.join("nets")).unwrap();
    for seed in ["1", "2"] {
        varis(&["generate", "--nodes", "10", "--seed", seed, "--out", &format!("nets/n{seed}.json")], dir);
    }
    let out = varis(&["compare", "nets", "--algorithms", "varis,lw", "--trials", "2", "--samples", "1000"], dir);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "network,algorithm,trial,ln_exact,ln_estimate,error,percent_error");
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(lines[1].starts_with("n1,varis,0,"));
    assert!(lines[8].starts_with("n2,lw,1,"));
}
