use std::path::Path;
use std::process::{Command, Output};

fn pflab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pflab"))
        .args(args)
        .current_dir(dir)
        .env_remove("PFLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn verify_algebra_passes_every_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = pflab(&["verify-algebra", "--L", "4"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# pflab-algebra v1\n"));
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert!(rows.len() >= 10);
    assert!(rows.iter().all(|r| r.contains(",PASS,")), "{text}");
}

#[test]
fn figure2_is_byte_reproducible_and_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let o = pflab(
            &["figure2", "--phi", "-1,0.5,2", "--L", "40", "-o", name],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read(dir.path().join(name)).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# pflab-figure2 v1\npanel,phi,L,x,k,re,im\n"));
    for panel in ["G0,", "density_split,", "xi,", "F0,"] {
        assert!(
            text.lines().any(|l| l.starts_with(panel)),
            "missing {panel}"
        );
    }
    let read = |name: &str| -> serde_json::Value {
        serde_json::from_slice(&std::fs::read(dir.path().join(name)).unwrap()).unwrap()
    };
    let ma = read("a.csv.manifest.json");
    let mb = read("b.csv.manifest.json");
    assert_eq!(ma["schema"], "pflab-manifest v1");
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
    assert_eq!(ma["output_sha256"], mb["output_sha256"]);
    assert_eq!(ma["config_sha256"].as_str().unwrap().len(), 64);
    assert!(ma["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(ma["config"]["phi"], serde_json::json!([-1.0, 0.5, 2.0]));
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "command = \"entanglement\"\nL = [7]\nphi = [0.5, -1.0]\ni = [1]\n\n[output]\npath = \"ent.csv\"\n";
    std::fs::write(dir.path().join("ent.toml"), cfg).unwrap();
    let o = pflab(&["run", "ent.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let from_file = std::fs::read_to_string(dir.path().join("ent.csv")).unwrap();
    let o = pflab(
        &["entanglement", "--L", "7", "--phi", "0.5,-1", "--i", "1"],
        dir.path(),
    );
    assert_eq!(from_file, stdout(&o));
    assert_eq!(from_file.lines().count(), 2 + 2 * 6);
    assert!(dir.path().join("ent.csv.manifest.json").exists());
}

#[test]
fn bad_config_exits_2_with_line_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "command = \"dmrg\"\nL = [3]\n\n[solver]\nchi_max = 2\n";
    std::fs::write(dir.path().join("bad.toml"), cfg).unwrap();
    let o = pflab(&["run", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2, field `L`"), "{err}");
    assert!(err.contains("line 5, field `chi_max`"), "{err}");
    assert!(stdout(&o).is_empty());

    std::fs::write(
        dir.path().join("typo.toml"),
        "command = \"ed\"\nphii = [1.0]\n",
    )
    .unwrap();
    let o = pflab(&["run", "typo.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = pflab(&["ed", "--alpha", "0.1,0.2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not used by `ed`"));
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let o = pflab(&["ed", "--L", "13"], dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let o = pflab(
        &[
            "dmrg",
            "--L",
            "8",
            "--phi",
            "2",
            "--sweeps",
            "1",
            "--energy-tol",
            "1e-14",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_pflab"))
        .args(["entanglement", "--L", "4"])
        .env("PFLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("PFLAB_THREADS"));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_pflab"))
            .args(["ed", "--L", "5", "--phi", "-1,0.5,2", "--levels", "3"])
            .current_dir(dir.path())
            .env("PFLAB_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        o.stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn gs_check_and_edge_mode_emit_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = pflab(&["gs-check", "--L", "3,4", "--phi", "-1,2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "pflab-gs-check v1");
    assert_eq!(v["rows"].as_array().unwrap().len(), 12);

    let o = pflab(&["edge-mode", "--L", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let slope = v["report"][0]["algebra"]["cube_slope"].as_f64().unwrap();
    assert!((slope - 2.0).abs() < 0.15);
    let o = pflab(&["edge-mode", "--format", "csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dmrg_and_ed_agree_at_small_size() {
    let dir = tempfile::tempdir().unwrap();
    let parse = |text: &str, col: usize| -> Vec<f64> {
        text.lines()
            .skip(2)
            .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
            .collect()
    };
    let o = pflab(&["dmrg", "--L", "6", "--phi", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d = parse(&stdout(&o), 4);
    let o = pflab(
        &["ed", "--L", "6", "--phi", "0.5", "--levels", "1"],
        dir.path(),
    );
    let e = parse(&stdout(&o), 4);
    assert_eq!(d.len(), 3);
    for (a, b) in d.iter().zip(&e) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}
