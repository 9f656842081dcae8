use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_channel-metric"));
    c.env_remove("CHANNEL_METRIC_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("channel-metric-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn metric_min_bitflip() {
    let o = run(&["metric", "min", "--family", "bitflip", "--theta", "0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o).lines().next().unwrap().to_string();
    let v: f64 = line
        .trim_start_matches("g_min = ")
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((v - 11.1111).abs() < 1e-3, "{line}");
}

#[test]
fn metric_cpball_phase_unitary() {
    let o = run(&["metric", "cpball", "--family", "phase_unitary", "--theta", "0.0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("cp_ball_radius = 0\n"), "{out}");
    assert!(out.contains("g_max_upper = inf"), "{out}");
}

#[test]
fn bogus_family_exits_2_naming_it() {
    let o = run(&["metric", "min", "--family", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(run(&["metric", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["metric", "min", "--theta", "0.1"]).status.code(), Some(2));
    let o = bin()
        .args(["metric", "min", "--family", "bitflip", "--theta", "0.1"])
        .env("CHANNEL_METRIC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CHANNEL_METRIC_THREADS"));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn scaling_phase_unitary_csv() {
    let csv = scratch("unitary.csv");
    let svg = scratch("unitary.svg");
    let o = run(&[
        "scaling",
        "--family",
        "phase_unitary",
        "--theta",
        "0.0",
        "--n-max",
        "3",
        "--csv",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,g_min_over_n,restarts_used,converged"));
    for (k, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], (k + 1).to_string());
        let v: f64 = cols[1].parse().unwrap();
        assert!((v - (k + 1) as f64).abs() < 1e-3, "{line}");
    }
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn scaling_over_budget_exits_4() {
    let o = run(&["scaling", "--family", "bitflip", "--theta", "0.1", "--n-max", "9"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn simulate_identity_povm_exits_5() {
    let o = run(&[
        "simulate", "--family", "bitflip", "--theta", "0.1", "--povm", "identity", "--trials", "10",
    ]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn simulate_is_byte_deterministic() {
    let args = |path: &PathBuf, record: &PathBuf| -> Vec<String> {
        [
            "simulate",
            "--family",
            "bitflip",
            "--theta",
            "0.1",
            "--n-list",
            "250,500,1000,2000",
            "--trials",
            "300",
            "--seed",
            "7",
            "--csv",
            path.to_str().unwrap(),
            "--record",
            record.to_str().unwrap(),
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    };
    let (a, b) = (scratch("sim-a.csv"), scratch("sim-b.csv"));
    let (ra, rb) = (scratch("sim-a.json"), scratch("sim-b.json"));
    let oa = bin().args(args(&a, &ra)).output().unwrap();
    let ob = bin()
        .args(args(&b, &rb))
        .env("CHANNEL_METRIC_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    assert_eq!(ob.status.code(), Some(0), "{}", stderr(&ob));
    let (ca, cb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ca, cb);
    assert!(String::from_utf8(ca).unwrap().starts_with("n,mse,n_mse,cr_floor\n"));
    assert_eq!(stdout(&oa), stdout(&ob));
    assert!(stdout(&oa).contains("slope = "));

    let rec_a: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&ra).unwrap()).unwrap();
    let rec_b: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rb).unwrap()).unwrap();
    assert_eq!(rec_a["config_hash"], rec_b["config_hash"]);
    assert_eq!(rec_a["results"], rec_b["results"]);
    assert_eq!(rec_a["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn explicit_spec_file() {
    let spec = channel_metric::channels::ChannelSpec::Catalog {
        name: "bitflip".into(),
        params: serde_json::Value::Null,
        theta: 0.3,
    };
    let resolved = spec.resolve().unwrap();
    let explicit = channel_metric::channels::ChannelSpec::explicit(&resolved.channel, resolved.tangent.as_ref());
    let path = scratch("bitflip-explicit.json");
    std::fs::write(&path, serde_json::to_string(&explicit).unwrap()).unwrap();
    let o = run(&["metric", "all", "--spec", path.to_str().unwrap(), "--restarts", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let expected = 1.0 / (0.3 * 0.7);
    let first = out.lines().next().unwrap();
    let v: f64 = first
        .trim_start_matches("g_min = ")
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((v - expected).abs() < 1e-4 * expected, "{out}");

    // explicit specs carry no family, so scaling refuses them
    let o = run(&["scaling", "--spec", path.to_str().unwrap(), "--n-max", "2"]);
    assert_eq!(o.status.code(), Some(2));
}
