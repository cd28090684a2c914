use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn outfox(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_outfox")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn keygen_sizes_match_key_table_and_seed_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for (suite, pk_len) in [("x25519", 32usize), ("mlkem768", 1184), ("xwing", 1216)] {
        let o = outfox(&["keygen", "--suite", suite, "--seed", "9", "--name", suite, "--out", "a"], tmp.path());
        assert!(o.status.success());
        let pk = std::fs::read(tmp.path().join(format!("a/{suite}.pub"))).unwrap();
        assert_eq!(pk.len() - 7, pk_len);
        outfox(&["keygen", "--suite", suite, "--seed", "9", "--name", suite, "--out", "b"], tmp.path());
        for ext in ["pub", "sec"] {
            assert_eq!(
                std::fs::read(tmp.path().join(format!("a/{suite}.{ext}"))).unwrap(),
                std::fs::read(tmp.path().join(format!("b/{suite}.{ext}"))).unwrap()
            );
        }
    }
}

#[test]
fn sizes_spot_values() {
    let tmp = tempfile::tempdir().unwrap();
    let o = outfox(&["sizes", "--suite", "x25519", "--layers", "5", "--msg-len", "1024", "--json"], tmp.path());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["per_layer"][0]["header"], 352);
    assert_eq!(v["per_layer"][4]["header"], 4 * 16 + 32);
    assert_eq!(v["per_layer"][0]["payload"], 1408);
    assert_eq!(v["surb"], 368);
}

#[test]
fn simulated_lengths_equal_the_sizes_table() {
    let tmp = tempfile::tempdir().unwrap();
    for suite in ["x25519", "mlkem768", "testkem"] {
        let sim = outfox(&["simulate", "--suite", suite, "--msg-len", "256", "--json", "--seed", "4"], tmp.path());
        assert!(sim.status.success());
        let sz = outfox(&["sizes", "--suite", suite, "--layers", "5", "--msg-len", "256", "--json"], tmp.path());
        let table: Value = serde_json::from_slice(&sz.stdout).unwrap();
        let mut seen = 0;
        for line in stdout(&sim).lines() {
            let e: Value = serde_json::from_str(line).unwrap();
            if e["event"] == "dispatch" {
                let layer = e["layer"].as_u64().unwrap() as usize;
                assert_eq!(e["length"], table["per_layer"][layer]["packet"], "{suite} layer {layer}");
                seen += 1;
            }
        }
        assert_eq!(seen, 12, "six sends each way");
    }
}

#[test]
fn simulate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = outfox(&["simulate", "--scenario", "happy-path"], tmp.path());
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("deliveries=2 "));

    let tamper = outfox(&["simulate", "--scenario", "header-tamper", "--json"], tmp.path());
    assert_eq!(tamper.status.code(), Some(0));
    assert_eq!(stdout(&tamper).matches("\"event\":\"header_failure\"").count(), 1);

    std::fs::write(tmp.path().join("bad.json"), "{\"session_id\":\"s\",\"gateways\":[]}").unwrap();
    assert_eq!(outfox(&["simulate", "--topology", "bad.json"], tmp.path()).status.code(), Some(2));

    std::fs::write(tmp.path().join("abort.jsonl"), "{\"action\":\"register\"}\n").unwrap();
    let abort = outfox(&["simulate", "--scenario", "abort.jsonl"], tmp.path());
    assert_eq!(abort.status.code(), Some(1));
    assert!(stdout(&abort).contains("abort"));

    assert_eq!(outfox(&["simulate", "--suite", "rot13"], tmp.path()).status.code(), Some(2));
}

#[test]
fn simulate_writes_logs_without_payload_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = outfox(&["simulate", "--out", "logs"], tmp.path());
    assert!(o.status.success());
    let run = std::fs::read_to_string(tmp.path().join("logs/run.jsonl")).unwrap();
    let channel = std::fs::read_to_string(tmp.path().join("logs/channel.jsonl")).unwrap();
    assert!(run.contains("\"text\":\"ping\""));
    assert_eq!(channel.lines().count(), 12);
    assert!(!channel.contains("ping"));
}

#[test]
fn packet_files_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, n) in ["a", "b", "r"].iter().enumerate() {
        let seed = i.to_string();
        outfox(&["keygen", "--suite", "xwing", "--seed", &seed, "--name", n, "--out", "k"], tmp.path());
    }
    let c = outfox(
        &["packet", "create", "--hop", "a=k/a.pub", "--hop", "b=k/b.pub", "--hop", "r=k/r.pub", "--msg", "over files", "--msg-len", "48", "--out", "p0"],
        tmp.path(),
    );
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    let common = ["--layers", "3", "--msg-len", "48"];
    let step = |who: &str, input: &str, out: Option<&str>, last: bool| {
        let (pk, sk) = (format!("k/{who}.pub"), format!("k/{who}.sec"));
        let mut args = vec!["packet", "process", "--public", &pk, "--secret", &sk, "--packet", input];
        args.extend(common);
        if let Some(o) = out {
            args.extend(["--out", o]);
        }
        if last {
            args.push("--last");
        }
        outfox(&args, tmp.path())
    };
    assert!(step("a", "p0", Some("p1"), false).status.success());
    assert!(step("b", "p1", Some("p2"), false).status.success());
    let d = step("r", "p2", None, true);
    let v: Value = serde_json::from_slice(&d.stdout).unwrap();
    assert_eq!(v["outcome"], "deliver");
    assert_eq!(v["text"], "over files");

    // Wrong key: header failure, exit 1.
    let wrong = step("b", "p0", Some("x"), false);
    assert_eq!(wrong.status.code(), Some(1));
    assert!(stdout(&wrong).contains("header_failure"));
}

#[test]
fn vector_check_reports_the_failing_layer() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(outfox(&["vector", "emit", "--count", "8", "--out", "v.jsonl"], tmp.path()).status.success());
    assert!(outfox(&["vector", "check", "v.jsonl"], tmp.path()).status.success());

    let text = std::fs::read_to_string(tmp.path().join("v.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut v: Value = serde_json::from_str(&lines[4]).unwrap();
    let mut hex_str = v["expected_packet_hex"].as_str().unwrap().to_string();
    // Corrupt one hex digit inside the outermost KEM ciphertext.
    let c = if &hex_str[2..3] == "0" { "1" } else { "0" };
    hex_str.replace_range(2..3, c);
    v["expected_packet_hex"] = Value::from(hex_str);
    lines[4] = v.to_string();
    std::fs::write(tmp.path().join("bad.jsonl"), lines.join("\n")).unwrap();
    let o = outfox(&["vector", "check", "bad.jsonl"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("vector 5"), "{out}");
    assert!(out.contains("KEM ciphertext"), "{out}");
    assert!(out.contains("fails at layer 0 with ⊤"), "{out}");
    assert!(out.contains("7 of 8 vectors pass"), "{out}");
}

#[test]
fn vectors_are_stable_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = outfox(&["vector", "emit", "--count", "5", "--seed", "3"], tmp.path());
    let b = outfox(&["vector", "emit", "--count", "5", "--seed", "3"], tmp.path());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn directory_files_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    outfox(&["keygen", "--suite", "x25519", "--seed", "1", "--name", "n", "--out", "."], tmp.path());
    outfox(&["keygen", "--suite", "x25519", "--seed", "2", "--name", "u", "--out", "."], tmp.path());
    let e = outfox(&["dir", "export", "--key", "n=n.pub", "--key", "u=u.pub:private", "--out", "d.json"], tmp.path());
    assert!(e.status.success());
    let i = outfox(&["dir", "import", "d.json", "--json"], tmp.path());
    let rows: Value = serde_json::from_slice(&i.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    let dup = outfox(&["dir", "export", "--key", "n=n.pub", "--key", "n=u.pub"], tmp.path());
    assert_eq!(dup.status.code(), Some(2));
}

#[test]
fn drills_detect_everything() {
    let tmp = tempfile::tempdir().unwrap();
    let h = outfox(&["drill", "--suite", "testkem", "--layers", "3", "--msg-len", "32", "--json"], tmp.path());
    assert!(h.status.success());
    let v: Value = serde_json::from_slice(&h.stdout).unwrap();
    assert_eq!(v["header_failures"], v["trials"]);
    let p = outfox(&["drill", "--target", "payload", "--suite", "testkem", "--trials", "50", "--json"], tmp.path());
    assert!(p.status.success());
}

#[test]
fn bench_checks_hold_for_a_fast_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let o = outfox(&["bench", "--suite", "testkem", "--suite", "x25519", "--iterations", "5", "--json"], tmp.path());
    assert!(o.status.success(), "{}", stdout(&o));
    let rows: Value = serde_json::from_slice(&o.stdout).unwrap();
    for r in rows.as_array().unwrap() {
        assert_eq!(r["create_ops"]["kem_encap"], 5);
        assert_eq!(r["process_ops"]["kem_decap"], 1);
    }
}
