use std::path::PathBuf;
use std::process::{Command, Output};

fn softqec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softqec")).args(args).output().expect("binary runs")
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("softqec-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn config_errors_exit_with_2() {
    let dir = scratch_dir("bad");
    let cfg = dir.join("bad.conf");
    std::fs::write(&cfg, "[experiment]\nshots = 10\nflavour = strange\n").unwrap();
    let out = softqec(&["memory", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");

    assert_eq!(softqec(&["memory"]).status.code(), Some(2));
    assert_eq!(softqec(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(softqec(&["memory", "--config", "no-such-preset"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_3() {
    let out = softqec(&["footprint", "--lambda", "0.9", "--p0", "0.01"]);
    assert_eq!(out.status.code(), Some(3));
    let out = softqec(&["lambda-fit", "--input", "/nonexistent/results.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn footprint_reports_distance_and_qubits() {
    let out = softqec(&["footprint", "--lambda", "2", "--p0", "0.01", "--target", "kilo"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("d_min=") && text.contains("n_qubits="), "{text}");
}

#[test]
fn memory_run_then_fit() {
    let dir = scratch_dir("memory");
    let cfg = dir.join("small.conf");
    std::fs::write(&cfg, "[experiment]\ndistances = 3, 5\nrounds = 3\nshots = 2000\nbases = Z, X\ninclude_d3 = true\n[noise]\np = 0.006\n")
        .unwrap();
    let csv = dir.join("out.csv");
    let out = softqec(&["memory", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap(), "--workers", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    // header plus 2 distances x 2 bases x 2 decoders
    assert_eq!(text.lines().count(), 9);
    assert!(text.starts_with("platform,code,basis,d,rounds,p,p_s,decoder,shots,failures"));

    let out = softqec(&["lambda-fit", "--input", csv.to_str().unwrap(), "--include-d3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit = String::from_utf8_lossy(&out.stdout);
    assert!(fit.contains("lambda_avg="), "{fit}");

    // same seed, same numbers
    let again = dir.join("again.csv");
    let out = softqec(&["memory", "--config", cfg.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(out.status.success());
    let strip = |t: &str| -> Vec<String> {
        // wall_seconds is the only column allowed to differ
        t.lines()
            .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != 13).map(|(_, f)| f.to_string()).collect::<Vec<_>>().join(","))
            .collect()
    };
    assert_eq!(strip(&text), strip(&std::fs::read_to_string(&again).unwrap()));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sample_then_decode() {
    let dir = scratch_dir("sample");
    let shots = dir.join("shots.bin");
    let out = softqec(&["sample", "--config", "sc-hf", "--shots", "500", "--out", shots.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = softqec(&["decode", "--config", "sc-hf", "--input", shots.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("decoder,shots,failures"));
    assert_eq!(lines.filter(|l| l.contains(",500,")).count(), 2);
    // a cell with a different detector count is rejected
    let out = softqec(&["decode", "--config", "sc-hf", "--cell", "12", "--input", shots.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}
