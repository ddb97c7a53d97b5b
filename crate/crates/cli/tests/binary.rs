use std::path::Path;
use std::process::{Command, Output};

use cvtele_cli::ResultTable;

fn cvtele(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvtele"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

const SMALL_GRID: [&str; 6] = [
    "--truncation",
    "30",
    "--grid-radius",
    "7",
    "--grid-points",
    "50",
];

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    for (path, seed) in [(&a, "9"), (&b, "9"), (&c, "10")] {
        let mut args = vec![
            "sample",
            "--input",
            "fock:1",
            "--samples",
            "300",
            "--seed",
            seed,
        ];
        args.extend(SMALL_GRID);
        args.extend(["--output", path.to_str().unwrap()]);
        let out = cvtele(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(read(&a), read(&c));
    let table = ResultTable::from_csv(&read(&a)).unwrap();
    assert_eq!(table.columns, ["re", "im"]);
    assert_eq!(table.rows.len(), 300);
    assert_eq!(table.metadata["seed"], "9");
}

#[test]
fn sweep_to_stdout_is_reproducible() {
    let mut args = vec!["gain-sweep", "--q", "0.5", "--gain-sweep", "0:1.5:4"];
    args.extend(SMALL_GRID);
    let first = cvtele(&args);
    let second = cvtele(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let table = ResultTable::from_csv(&String::from_utf8(first.stdout).unwrap()).unwrap();
    assert_eq!(
        table.columns,
        ["g", "average_fidelity", "mean_output_photons"]
    );
    assert_eq!(table.rows.len(), 4);
    assert_eq!(table.metadata["config.gain_sweep"], "\"0.0:1.5:4\"");
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "q = 0.3\ngain = 0.3\ninput = \"vacuum\"\ntruncation = 30\ngrid_radius = 7.0\ngrid_points = 50\nformat = \"json\"\n",
    )
    .unwrap();
    let out = cvtele(&[
        "vacuum-intensity",
        "--config",
        cfg.to_str().unwrap(),
        "--q",
        "0.6",
        "--gain",
        "0.6",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = ResultTable::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(table.metadata["config.q"], "0.6");
    assert!(table.rows[0][1].abs() < 1e-6);
}

#[test]
fn amplitude_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let amps = dir.path().join("psi.txt");
    std::fs::write(&amps, "# |0> + i|2>\n1 0\n0 0\n0 1\n").unwrap();
    let input = format!("file:{}", amps.display());
    let mut args = vec!["single-photon", "--q", "0.5", "--input", &input];
    args.extend(SMALL_GRID);
    let out = cvtele(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = ResultTable::from_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    // The echo carries the amplitudes, not the path.
    assert!(table.metadata["config.input"].starts_with("\"amplitudes:"));
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let typo = dir.path().join("typo.toml");
    std::fs::write(&typo, "q = 0.5\ngian = 1.0\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["gain-sweep", "--q", "1.2"],
        vec!["gain-sweep", "--gain", "1", "--gain-sweep", "0:1:3"],
        vec!["gain-sweep", "--input", "squeezed:1"],
        vec!["gain-sweep", "--config", typo.to_str().unwrap()],
        vec!["gain-sweep", "--config", "/nonexistent/cvtele.toml"],
        vec!["vacuum-intensity", "--input", "fock:1"],
        vec!["gain-sweep", "--bogus"],
    ];
    for args in cases {
        let out = cvtele(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn tolerance_failures_exit_with_two() {
    // A grid far too small to hold the outcome density.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = cvtele(&[
        "gain-sweep",
        "--truncation",
        "20",
        "--grid-radius",
        "1",
        "--grid-points",
        "10",
        "--gain",
        "1",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tolerance failure"));
    assert!(path.exists());

    let out = cvtele(&[
        "sample",
        "--input",
        "fock:2",
        "--truncation",
        "20",
        "--grid-radius",
        "1",
        "--grid-points",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let out = cvtele(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in [
        "gain-sweep",
        "vacuum-intensity",
        "single-photon",
        "equivalence",
        "sample",
    ] {
        assert!(text.contains(sub));
    }
}
