mod common;

use std::fs;
use std::path::Path;

use common::{code, config_toml, s, stderr, stdout, trainchain, write_config};
use tempfile::TempDir;

const ARTIFACTS: [&str; 6] =
    ["audit.jsonl", "metrics.csv", "chain.dump", "server_pubkey.txt", "baseline_chain.dump", "comparison.json"];

fn run_into(config: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    let mut args = vec!["run", s(config), "--out-dir", s(out), "--quiet"];
    args.extend(extra);
    trainchain(&args)
}

fn pubkey(out: &Path) -> String {
    fs::read_to_string(out.join("server_pubkey.txt")).unwrap().trim().to_string()
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &config_toml(3, 6, &["honest", "honest", "lazy"], true));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&run_into(&cfg, &a, &[])), 0);
    assert_eq!(code(&run_into(&cfg, &b, &[])), 0);
    for name in ARTIFACTS {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn seed_override_changes_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &config_toml(3, 3, &["honest", "honest"], false));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&run_into(&cfg, &a, &[])), 0);
    assert_eq!(code(&run_into(&cfg, &b, &["--seed-override", "4"])), 0);
    assert_ne!(fs::read(a.join("chain.dump")).unwrap(), fs::read(b.join("chain.dump")).unwrap());
}

#[test]
fn metrics_have_one_row_per_cycle() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &config_toml(5, 10, &["honest", "offline", "honest"], false));
    let out = tmp.path().join("o");
    assert_eq!(code(&run_into(&cfg, &out, &[])), 0);
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "cycle_id,winner_id,weight_0,weight_1,weight_2,chain_height,hash_ops,training_flops,useful_fraction"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], i.to_string());
        assert_eq!(row[3], "0", "offline miner weight");
        assert_eq!(row[5], (i + 1).to_string());
    }
    let audit = fs::read_to_string(out.join("audit.jsonl")).unwrap();
    assert_eq!(audit.lines().count(), 10);
    assert!(!out.join("comparison.json").exists());
}

#[test]
fn relative_output_dir_follows_the_config_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &config_toml(1, 1, &["honest"], false));
    let out = trainchain(&["run", s(&cfg), "--quiet"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(tmp.path().join("out/chain.dump").exists());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &config_toml(1, 1, &["honest"], false));
    // Root ignores permission bits, so block the directory with a file.
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let out = run_into(&cfg, &blocker.join("out"), &[]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn config_errors_exit_1() {
    let tmp = TempDir::new().unwrap();
    let good = config_toml(1, 1, &["honest"], false);

    let alpha = write_config(tmp.path(), "alpha.toml", &good.replace("alpha = 0.5", "alpha = 1.5"));
    let out = run_into(&alpha, &tmp.path().join("o"), &[]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("alpha"), "{}", stderr(&out));

    let typo = write_config(tmp.path(), "typo.toml", &good.replace("[[miners]]", "[[minerz]]"));
    let out = run_into(&typo, &tmp.path().join("o"), &[]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("minerz"), "{}", stderr(&out));

    assert_eq!(code(&trainchain(&["run"])), 1);
    assert_eq!(code(&trainchain(&["frobnicate"])), 1);
    assert_eq!(code(&trainchain(&["--help"])), 0);
}

#[test]
fn missing_config_is_an_io_error() {
    let out = trainchain(&["run", "/nonexistent/trainchain.toml", "--quiet"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn verify_accepts_what_run_produces() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &config_toml(8, 4, &["honest", "falsifier", "honest"], true));
    let out = tmp.path().join("o");
    assert_eq!(code(&run_into(&cfg, &out, &[])), 0);

    let v = trainchain(&["verify", s(&out.join("chain.dump")), &pubkey(&out)]);
    assert_eq!(code(&v), 0, "{}{}", stdout(&v), stderr(&v));
    assert_eq!(stdout(&v).lines().filter(|l| l.ends_with(" ok")).count(), 4);

    // Nonce-search blocks carry no server signature; any key will do.
    let v = trainchain(&["verify", s(&out.join("baseline_chain.dump")), &pubkey(&out), "--quiet"]);
    assert_eq!(code(&v), 0, "{}", stderr(&v));
}

#[test]
fn verify_names_the_tampered_block() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &config_toml(8, 3, &["honest", "honest"], false));
    let out = tmp.path().join("o");
    assert_eq!(code(&run_into(&cfg, &out, &[])), 0);
    let text = fs::read_to_string(out.join("chain.dump")).unwrap();

    let cert_lines: Vec<usize> =
        text.match_indices("\ncertificate ").map(|(i, _)| i + "\ncertificate ".len()).collect();
    let pos = cert_lines[2] + 100;
    let mut bytes = text.into_bytes();
    bytes[pos] = if bytes[pos] == b'0' { b'1' } else { b'0' };
    let tampered = tmp.path().join("tampered.dump");
    fs::write(&tampered, bytes).unwrap();

    let v = trainchain(&["verify", s(&tampered), &pubkey(&out)]);
    assert_eq!(code(&v), 4);
    assert!(stdout(&v).contains("block 2 FAIL"), "{}", stdout(&v));
    assert!(stderr(&v).contains("first failing block: 2"), "{}", stderr(&v));
}

#[test]
fn verify_with_the_wrong_key_fails_everywhere() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &config_toml(8, 3, &["honest"], false));
    let out = tmp.path().join("o");
    assert_eq!(code(&run_into(&cfg, &out, &[])), 0);
    let other = tmp.path().join("p");
    assert_eq!(code(&run_into(&cfg, &other, &["--seed-override", "9"])), 0);

    let v = trainchain(&["verify", s(&out.join("chain.dump")), &pubkey(&other)]);
    assert_eq!(code(&v), 4);
    assert_eq!(stdout(&v).lines().filter(|l| l.contains(" FAIL ")).count(), 3);
}

#[test]
fn verify_argument_and_input_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &config_toml(8, 1, &["honest"], false));
    let out = tmp.path().join("o");
    assert_eq!(code(&run_into(&cfg, &out, &[])), 0);
    let dump = out.join("chain.dump");

    assert_eq!(code(&trainchain(&["verify", s(&dump), "zz"])), 1);
    assert_eq!(code(&trainchain(&["verify", s(&tmp.path().join("none.dump")), &pubkey(&out)])), 3);
    let garbage = write_config(tmp.path(), "garbage.dump", "not a dump\n");
    assert_eq!(code(&trainchain(&["verify", s(&garbage), &pubkey(&out)])), 4);

    // A high-bit flip leaves the file undecodable as text; that is tampering, not I/O.
    let mut bytes = fs::read(&dump).unwrap();
    bytes[40] ^= 0x80;
    let binary = tmp.path().join("binary.dump");
    fs::write(&binary, bytes).unwrap();
    assert_eq!(code(&trainchain(&["verify", s(&binary), &pubkey(&out)])), 4);
}

#[test]
fn compare_reports_the_gap() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &config_toml(2, 3, &["honest", "honest"], false));
    let out = tmp.path().join("o");
    let c = trainchain(&["compare", s(&cfg), "--out-dir", s(&out)]);
    assert_eq!(code(&c), 0, "{}", stderr(&c));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(report["blocks"], 3);
    assert_eq!(report["baseline"]["useful_fraction"], 0.0);
    assert_eq!(report["baseline"]["training_flops"], 0);
    assert!(report["training"]["useful_fraction"].as_f64().unwrap() > 0.0);
    assert_eq!(report["training_more_useful"], true);
}

#[test]
fn unreachable_baseline_is_a_simulation_error() {
    let tmp = TempDir::new().unwrap();
    let toml = config_toml(2, 2, &["honest"], true)
        .replace("difficulty_bits = 6", "difficulty_bits = 40")
        .replace("max_attempts = 1000000", "max_attempts = 10");
    let cfg = write_config(tmp.path(), "c.toml", &toml);
    let out = run_into(&cfg, &tmp.path().join("o"), &[]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}
