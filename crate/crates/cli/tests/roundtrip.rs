use std::path::Path;

use mmuav_cli::run_cli;

fn run(args: &[&str]) -> i32 {
    run_cli(std::iter::once("mmuav").chain(args.iter().copied()))
}

fn small_runs(dir: &Path) -> Vec<(String, Vec<String>)> {
    let d = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("pattern", vec!["--codebook", "deact", "--n", "16", "--layer", "2", "--index", "3"]),
        ("codebook-check", vec!["--n", "16"]),
        ("complexity", vec!["--n", "16,32"]),
        ("search-sim", vec!["--n", "8", "--snr", "-10:10:10", "--trials", "50", "--seed", "3"]),
        ("sdma-sim", vec!["--n-bs", "8", "--n-ms", "8", "--users", "2", "--snr", "0:10:20", "--trials", "4"]),
        ("capacity", vec!["--preset", "fig4-right", "--tx-power-dbm", "0:10:20"]),
        ("doppler", vec!["--speed-mps", "0:10:30"]),
        ("deploy-sim", vec!["--max-iters", "4"]),
    ];
    cases
        .into_iter()
        .map(|(cmd, extra)| {
            let mut args = vec![cmd.to_string()];
            args.extend(extra.iter().map(|s| s.to_string()));
            args.push("--out".into());
            args.push(d(&format!("{cmd}.csv")));
            (cmd.to_string(), args)
        })
        .collect()
}

#[test]
fn sidecars_reproduce_csv() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, args) in small_runs(dir.path()) {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(run(&argv), 0, "{cmd}");
        let csv = dir.path().join(format!("{cmd}.csv"));
        let sidecar = dir.path().join(format!("{cmd}.json"));
        let again = dir.path().join(format!("{cmd}-again.csv"));
        let code = run(&[&cmd, "--config", sidecar.to_str().unwrap(), "--out", again.to_str().unwrap()]);
        assert_eq!(code, 0, "{cmd} rerun");
        assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&again).unwrap(), "{cmd}");
        let side: serde_json::Value = serde_json::from_slice(&std::fs::read(&sidecar).unwrap()).unwrap();
        assert!(side.get("out").is_none());
    }
}

#[test]
fn csv_headers() {
    let dir = tempfile::tempdir().unwrap();
    let want = [
        ("pattern", "omega,gain_db"),
        ("complexity", "n_antennas,exhaustive_slots,hierarchical_slots"),
        ("search-sim", "snr_db,success_rate,trials,codebook"),
        ("sdma-sim", "snr_db,sum_rate,bound_rate,n_users"),
        ("capacity", "snr_db,c_mm_bps,c_lf_bps,ratio"),
        ("deploy-sim", "iter,x,y,z,n_found,utility,moved"),
    ];
    let runs = small_runs(dir.path());
    for (cmd, header) in want {
        let (_, args) = runs.iter().find(|(c, _)| c == cmd).unwrap();
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(run(&argv), 0);
        let text = std::fs::read_to_string(dir.path().join(format!("{cmd}.csv"))).unwrap();
        assert_eq!(text.lines().next().unwrap(), header);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();
    assert_eq!(run(&["pattern", "--n", "12", "--out", out]), 2);
    assert_eq!(run(&["pattern", "--layer", "9", "--out", out]), 2);
    assert_eq!(run(&["search-sim", "--snr", "5:-1:0", "--out", out]), 2);
    assert_eq!(run(&["nonsense"]), 2);

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"n": 32, "bogus": 1}"#).unwrap();
    assert_eq!(run(&["pattern", "--config", cfg.to_str().unwrap(), "--out", out]), 2);
    assert_eq!(run(&["pattern", "--config", "/no/such/file.json", "--out", out]), 2);

    // an existing file where a directory is needed
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let nested = blocker.join("out.csv");
    assert_eq!(run(&["doppler", "--out", nested.to_str().unwrap()]), 3);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"n": 16, "layer": 1, "index": 0}"#).unwrap();
    let out = dir.path().join("p.csv");
    assert_eq!(
        run(&["pattern", "--config", cfg.to_str().unwrap(), "--layer", "3", "--out", out.to_str().unwrap()]),
        0
    );
    let side: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(side["n"], 16);
    assert_eq!(side["layer"], 3);
    assert_eq!(side["grid"], 1024);
}

#[test]
fn deploy_scene_from_file_with_infinite_cost() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    std::fs::write(
        &scene,
        r#"{"uav":[10,0,40],"users":[{"id":5,"pos":[-20,0,0]}],"discovery_range_m":200,
            "signaling_cost":"inf","sweep_sectors":8}"#,
    )
    .unwrap();
    let out = dir.path().join("t.csv");
    assert_eq!(run(&["deploy-sim", "--scene", scene.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().ends_with("false"));
    let side = std::fs::read_to_string(dir.path().join("t.json")).unwrap();
    assert!(side.contains("\"inf\""));
}

#[test]
fn binary_honours_out_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_mmuav"))
        .args(["complexity", "--m", "2"])
        .env(mmuav_cli::OUT_DIR_ENV, dir.path())
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(dir.path().join("complexity.csv").exists());
    assert!(dir.path().join("complexity.json").exists());

    let bad = std::process::Command::new(env!("CARGO_BIN_EXE_mmuav"))
        .args(["complexity", "--n", "10"])
        .env(mmuav_cli::OUT_DIR_ENV, dir.path())
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("n_antennas[0]"));
}
