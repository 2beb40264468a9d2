//! End-to-end tests of the command-line binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_accconf"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn full_pipeline_round_trips_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state");
    let key_file = dir.path().join("key.bin");
    let movie = dir.path().join("movie.bin");
    let sealed = dir.path().join("movie.enc");
    let block = dir.path().join("block.acfb");
    let extracted = dir.path().join("key.out");
    let decrypted = dir.path().join("movie.dec");

    fs::write(&key_file, (0u8..16).collect::<Vec<u8>>()).unwrap();
    fs::write(&movie, (0..100_000u32).map(|i| (i % 251) as u8).collect::<Vec<u8>>()).unwrap();

    assert_ok(&run(&[
        "setup", "--bits-q", "64", "--t", "8", "--n", "20", "--seed", "7", "--out-dir",
        &path_str(&state),
    ]));
    assert_eq!(fs::read_dir(state.join("shares")).unwrap().count(), 20);

    assert_ok(&run(&[
        "build-block", "--dir", &path_str(&state), "--key-file", &path_str(&key_file),
        "--seed", "8", "--out", &path_str(&block),
    ]));
    assert_ok(&run(&[
        "encrypt", "--key-file", &path_str(&key_file), "--in", &path_str(&movie),
        "--out", &path_str(&sealed), "--nonce", "9",
    ]));
    assert_ok(&run(&[
        "extract",
        "--params", &path_str(&state.join("params.acf1")),
        "--verify-key", &path_str(&state.join("verify.acfv")),
        "--share", &path_str(&state.join("shares/user_000005.acfs")),
        "--block", &path_str(&block),
        "--out", &path_str(&extracted),
    ]));
    assert_eq!(fs::read(&extracted).unwrap(), fs::read(&key_file).unwrap());
    assert_ok(&run(&[
        "decrypt", "--key-file", &path_str(&extracted), "--in", &path_str(&sealed),
        "--out", &path_str(&decrypted), "--nonce", "9",
    ]));
    assert_eq!(fs::read(&decrypted).unwrap(), fs::read(&movie).unwrap());
}

#[test]
fn setup_is_deterministic_under_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        assert_ok(&run(&[
            "setup", "--bits-q", "32", "--t", "3", "--n", "5", "--seed", "11", "--out-dir",
            &path_str(out),
        ]));
    }
    for file in ["params.acf1", "server_shares.acfs", "poly.acfp", "shares/user_000002.acfs"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file} differs between identical-seed runs"
        );
    }
}

#[test]
fn revoked_user_gets_exit_code_3_with_revoked_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state");
    let key_file = dir.path().join("key.bin");
    let block = dir.path().join("block.acfb");
    fs::write(&key_file, [7u8; 16]).unwrap();
    assert_ok(&run(&[
        "setup", "--bits-q", "64", "--t", "4", "--n", "6", "--seed", "3", "--out-dir",
        &path_str(&state),
    ]));
    assert_ok(&run(&[
        "revoke", "--dir", &path_str(&state), "--user-id", "2", "--key-file",
        &path_str(&key_file), "--seed", "4", "--out", &path_str(&block),
    ]));
    let out = run(&[
        "extract",
        "--params", &path_str(&state.join("params.acf1")),
        "--verify-key", &path_str(&state.join("verify.acfv")),
        "--share", &path_str(&state.join("shares/user_000002.acfs")),
        "--block", &path_str(&block),
        "--out", &path_str(&dir.path().join("never.out")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("revoked"));
}

#[test]
fn capacity_overflow_gets_exit_code_5() {
    let dir = tempfile::tempdir().unwrap();
    // Q has 4 bits (Q = 11), so n + t must stay below 10.
    let out = run(&[
        "setup", "--bits-q", "4", "--t", "1", "--n", "10", "--seed", "1", "--out-dir",
        &path_str(&dir.path().join("state")),
    ]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));
}

#[test]
fn bench_emits_affine_block_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    assert_ok(&run(&[
        "bench", "--t-list", "8,16,32", "--bits-q", "64", "--seed", "2", "--out",
        &path_str(&csv),
    ]));
    let body = fs::read_to_string(&csv).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("t,block_bytes,global_mults,globalnp_mults,exps"));
    let rows: Vec<Vec<u64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    // block_bytes is affine in t: the increment per t step stays constant
    // up to big-integer encoding noise.
    let slope_a = (rows[1][1] - rows[0][1]) as f64 / 8.0;
    let slope_b = (rows[2][1] - rows[1][1]) as f64 / 16.0;
    assert!(
        (slope_a - slope_b).abs() / slope_b < 0.02,
        "slopes {slope_a} vs {slope_b}"
    );
    // Counter columns match the closed forms.
    for row in &rows {
        let t = row[0];
        assert_eq!(row[2], 4 * t);
        assert_eq!(row[3], 2 * t * t + t);
        assert_eq!(row[4], t + 1);
    }
}

#[test]
fn chunk_then_manifest_lists_all_chunks() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("payload.bin");
    fs::write(&input, vec![3u8; 3000]).unwrap();
    let chunks = dir.path().join("chunks");
    assert_ok(&run(&[
        "chunk", "--in", &path_str(&input), "--out-dir", &path_str(&chunks),
        "--name", "/cp/movie/scifi/title.avi", "--version", "3",
        "--chunk-size", "1436", "--numbering", "sequential",
    ]));
    // 3 chunk files plus the manifest.
    assert_eq!(fs::read_dir(&chunks).unwrap().count(), 4);
    let manifest = fs::read_dir(&chunks)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_string_lossy().ends_with(".manifest.json"))
        .expect("manifest written");
    let json: serde_json::Value = serde_json::from_slice(&fs::read(manifest).unwrap()).unwrap();
    assert_eq!(json["chunk_count"], 3);
    assert_eq!(json["first_chunk_id"], "001");
}

#[test]
fn simulate_writes_the_three_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sim.json");
    // Tiny catalog so the run takes milliseconds.
    fs::write(
        &config,
        r#"{
            "stack": "NDN",
            "seed": 5,
            "duration_secs": 2.0,
            "object_size_bytes": 30000,
            "enabling_block_bytes": 1500,
            "workload": { "n_contents": 10, "q": 1.0, "s": 2.0 }
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("results");
    assert_ok(&run(&[
        "simulate", "--config", &path_str(&config), "--out-dir", &path_str(&out_dir),
    ]));
    for file in ["latency_samples.csv", "summary.csv", "ecdf.csv"] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("NDN,"));
    // The eCDF table ends at probability 1.
    let ecdf = fs::read_to_string(out_dir.join("ecdf.csv")).unwrap();
    assert!(ecdf.trim_end().lines().last().unwrap().ends_with(",1"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "setup", "--bits-q", "2", "--t", "1", "--n", "1", "--seed", "1", "--out-dir",
        &path_str(&dir.path().join("s")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Unknown flags are clap usage errors.
    let out = bin().arg("--definitely-not-a-flag").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
