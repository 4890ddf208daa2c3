mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use databc::scp::parse_lp;
use databc::systems::noise::splitmix64;
use databc::systems::{BlackBoxSystem, LinearSystem};
use databc::verify::VerificationReport;
use databc::BarrierCertificate;

use common::{config_path, Rng};

const BIN: &str = env!("CARGO_BIN_EXE_databc");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn databc")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn conf(name: &str) -> String {
    config_path(name).to_str().unwrap().to_owned()
}

fn room_with(extra_replace: (&str, &str)) -> String {
    fs::read_to_string(config_path("room.conf")).unwrap().replace(extra_replace.0, extra_replace.1)
}

fn sample_and_verify(config: &str, out: &Path, extra: &[&str]) -> Output {
    let out_s = out.to_str().unwrap();
    let mut args = vec!["--config", config, "--out", out_s];
    args.extend_from_slice(extra);
    let mut s = args.clone();
    s.push("sample");
    let o = run(&s);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    args.push("verify");
    run(&args)
}

fn without_timing(json: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(json).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn counts_table_for_room_case() {
    let o = run(&["--config", &conf("room.conf"), "counts"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("1018779"), "{out}");
    assert!(out.contains("4445"), "{out}");
    assert!(out.contains("1.3888888888888888e-5"), "{out}");
    assert!(out.contains("confidence       0.99"), "{out}");
}

#[test]
fn invalid_configs_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (room_with(("lipschitz_bound = 2160", "lipschitz_bound = 0.01")), "epsilon exceeds lipschitz_bound"),
        (room_with(("beta_s = 0.005", "beta_s = 0")), "beta_s"),
        (format!("{}colour = red\n", room_with(("", ""))), "colour"),
        (room_with(("rho = 0.1", "rho = 0.1\nrho = 0.2")), "rho"),
        (room_with(("horizon = 3", "horizon = three")), "horizon"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let path = write_config(dir.path(), &format!("bad{i}.conf"), text);
        let o = run(&["--config", &path, "counts"]);
        assert_eq!(code(&o), 1, "case {i}");
        assert!(stderr(&o).contains(needle), "case {i}: {}", stderr(&o));
    }
    let o = run(&["counts"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--config"));
}

#[test]
fn clap_exit_codes() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["--no-such-flag", "counts"])), 1);
    assert_eq!(code(&run(&[])), 1);
}

#[test]
fn stable_toy_certifies_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = sample_and_verify(&conf("linear_stable.conf"), dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    for f in ["dataset.bcds", "report.json", "certificate.json", "audit.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }

    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report = VerificationReport::from_json(&text).unwrap();
    assert!(report.is_certified());
    assert!(report.watermark.is_none());
    assert_eq!(format!("{}\n", report.to_json().unwrap()), text, "report.json must round-trip byte for byte");

    let cert: BarrierCertificate =
        serde_json::from_str(&fs::read_to_string(dir.path().join("certificate.json")).unwrap()).unwrap();
    assert_eq!(Some(&cert), report.certificate.as_ref());

    let csv = fs::read_to_string(dir.path().join("audit.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,B,region_tag,expected_next_B,martingale_slack"));
    assert_eq!(lines.count(), 1301);

    // idempotent apart from wall-clock timings
    let again = run(&["--config", &conf("linear_stable.conf"), "--out", dir.path().to_str().unwrap(), "verify"]);
    assert_eq!(code(&again), 0);
    let text2 = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(without_timing(&text), without_timing(&text2));
}

#[test]
fn unstable_toy_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let o = sample_and_verify(&conf("linear_unstable.conf"), dir.path(), &[]);
    assert_eq!(code(&o), 2, "{}{}", stdout(&o), stderr(&o));
    let report =
        VerificationReport::from_json(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(!report.is_certified());
    assert_eq!(report.verdict.probability_lower_bound, 0.0);

    // the system really is unsafe: most trajectories from X_in reach X_u
    let sys = LinearSystem::new(1.5, 0.01);
    let mut rng = Rng::new(3);
    let trials = 100_000u64;
    let mut hit = 0;
    for k in 0..trials {
        let mut x = vec![rng.range(1.0, 1.2)];
        let mut reached = false;
        for t in 0..3 {
            x = sys.step(&x, splitmix64(k * 8 + t)).unwrap();
            reached |= (2.0..=4.0).contains(&x[0]);
        }
        hit += reached as u64;
    }
    assert!(hit as f64 / trials as f64 > 0.99, "{hit}");
}

#[test]
fn dataset_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["--config", &conf("linear_stable.conf"), "--out", out, "verify"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("does not exist"), "{}", stderr(&o));

    let o = run(&["--config", &conf("linear_stable.conf"), "--out", out, "sample"]);
    assert_eq!(code(&o), 0);
    let o = run(&["--config", &conf("linear_unstable.conf"), "--out", out, "verify"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("dataset/config mismatch"), "{}", stderr(&o));
    let o = run(&["--config", &conf("linear_stable.conf"), "--seed", "5", "--out", out, "verify"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("dataset/config mismatch"));
}

#[test]
fn sampling_replays_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let base = fs::read_to_string(config_path("linear_stable.conf")).unwrap();
    let single = write_config(dir.path(), "single.conf", &format!("{base}chunk_size = 1000000\n"));
    let chunked = write_config(dir.path(), "chunked.conf", &format!("{base}chunk_size = 977\n"));
    let mut files = Vec::new();
    for (i, cfg) in [&single, &chunked, &single].iter().enumerate() {
        let out = dir.path().join(format!("o{i}"));
        let o = run(&["--config", cfg, "--out", out.to_str().unwrap(), "sample"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).contains("N=13105"), "{}", stdout(&o));
        files.push(fs::read(out.join("dataset.bcds")).unwrap());
    }
    assert_eq!(&files[0][..5], b"BCDS1");
    assert_eq!(files[0], files[1], "chunking must not change the bytes");
    assert_eq!(files[0], files[2], "replay must not change the bytes");
}

#[test]
fn unsound_overrides_are_labeled() {
    let dir = tempfile::tempdir().unwrap();
    let o = sample_and_verify(
        &conf("room.conf"),
        dir.path(),
        &["--unsound-N", "3000", "--unsound-Nhat", "200", "--seed", "4"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("UNSOUND"), "{}", stdout(&o));
    let report =
        VerificationReport::from_json(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report.watermark.is_some());
    assert!(report.checks.counts_waived);
    assert_eq!(report.counts.n_used, 3000);

    let counts = run(&["--config", &conf("room.conf"), "--unsound-N", "3000", "counts"]);
    assert!(stdout(&counts).contains("N_used           3000"));
    assert_eq!(code(&run(&["--config", &conf("room.conf"), "--unsound-N", "0", "counts"])), 1);
}

#[test]
fn tightened_mode_reports_single_confidence() {
    let dir = tempfile::tempdir().unwrap();
    let o = sample_and_verify(
        &conf("room.conf"),
        dir.path(),
        &["--tighten", "--unsound-N", "2000", "--unsound-Nhat", "100"],
    );
    // the tightening L_x·ε = 64.8 makes the room program infeasible
    assert_eq!(code(&o), 2, "{}{}", stdout(&o), stderr(&o));
    let report =
        VerificationReport::from_json(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(format!("{:?}", report.mode), "Tightened");
    assert!((report.verdict.confidence - 0.995).abs() < 1e-12);
}

#[test]
fn lp_dump_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = conf("room.conf");
    let base = ["--config", cfg.as_str(), "--out", out, "--unsound-N", "500", "--unsound-Nhat", "50"];
    assert_eq!(code(&run(&[&base[..], &["sample"]].concat())), 0);
    let o = run(&[&base[..], &["lp-dump"]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let file = fs::File::open(dir.path().join("program.lp")).unwrap();
    let cs = parse_lp(std::io::BufReader::new(file)).unwrap();
    assert_eq!(cs.columns(), ["K", "lambda", "c", "b_2", "b_1", "b_0"]);
    // 500 g1 + 500 g5 + initial/unsafe rows + g4 + 8 Gershgorin rows
    assert!(cs.num_constraint_rows() > 1009, "{}", cs.num_constraint_rows());
    assert!(stdout(&o).contains("rows"));
}

#[test]
fn audit_subcommand_rewrites_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cert = BarrierCertificate::new(
        databc::MonomialBasis::new(1, 2).unwrap(),
        vec![0.0872, -2.1528, 11.9027],
        18.7479,
        0.2891,
        -0.0761,
    )
    .unwrap();
    let cert_path = dir.path().join("paper.json");
    fs::write(&cert_path, serde_json::to_string(&cert).unwrap()).unwrap();
    let o = run(&[
        "--config",
        &conf("room.conf"),
        "--out",
        dir.path().to_str().unwrap(),
        "audit",
        "--certificate",
        cert_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("audit.csv")).unwrap();
    let first = csv.lines().nth(1).unwrap();
    assert!(first.starts_with("17,"), "{first}");
    assert!(first.contains(",initial,"), "{first}");
}

#[test]
fn bounds_subcommands() {
    let value = |args: &[&str]| {
        let o = run(&[&["bounds"], args].concat());
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
        stdout(&o).trim().to_owned()
    };
    let e = format!("{}", 0.03 / 2160.0);
    assert_eq!(value(&["scenario-count", "--epsilon-bar", &e, "--beta", "0.005", "--limit", "5"]), "1018779");
    assert_eq!(value(&["empirical-count", "--m-hat", "0.005", "--delta", "0.015", "--beta-s", "0.005"]), "4445");
    assert_eq!(value(&["lipschitz-quadratic", "--m", "30", "--lambda-max", "12", "--l", "2", "--l-hat", "1"]), "2160");
    let t: f64 = value(&["theorem1", "--lambda", "18.7479", "--c", "0.2891", "--horizon", "3"]).parse().unwrap();
    assert!((t - 0.90039).abs() < 1e-5);
    let v: f64 = value(&["variance1d", "--coeff-bounds", "0.1,3,12", "--fa-bound", "30", "--sigma", "0.0125"])
        .parse()
        .unwrap();
    assert!(v > 0.0);
    let o = run(&["bounds", "empirical-count", "--m-hat", "0.005", "--delta", "0.015", "--beta-s", "0"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn plugin_route_matches_built_in_system() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config_path("linear_stable.conf")).unwrap();
    let plugin_text = text
        .replace("system = linear", &format!("system = plugin:{BIN} plugin-serve --system linear --a 0.5 --sigma 0"))
        .replace("linear_a = 0.5\n", "")
        .replace("linear_sigma = 0\n", "")
        + "plugin_dimension = 1\n";
    let plugin_cfg = write_config(dir.path(), "plugin.conf", &plugin_text);
    let extra = ["--unsound-N", "400", "--unsound-Nhat", "5"];
    let a = dir.path().join("builtin");
    let b = dir.path().join("plugin");
    assert_eq!(code(&sample_and_verify(&conf("linear_stable.conf"), &a, &extra)), 0);
    let o = sample_and_verify(&plugin_cfg, &b, &extra);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let ra = VerificationReport::from_json(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    let rb = VerificationReport::from_json(&fs::read_to_string(b.join("report.json")).unwrap()).unwrap();
    assert_eq!(ra.verdict.kappa_star, rb.verdict.kappa_star);
    assert_eq!(ra.certificate, rb.certificate);
    assert_ne!(ra.config_digest, rb.config_digest);
}
