use outfox_web::{peel, sizes, tamper, DEMO_MSG_LEN};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).expect("exports return JSON")
}

#[test]
fn sizes_reports_the_outer_header() {
    let v = parse(sizes("x25519", 5, 1024));
    assert_eq!(v["per_layer"][0]["header"], 352);
    assert_eq!(v["payload"], 1408);
    assert_eq!(v["per_layer"].as_array().unwrap().len(), 5);
}

#[test]
fn bad_input_comes_back_as_an_error_object() {
    assert!(parse(sizes("rot13", 5, 16))["error"].is_string());
    assert!(parse(sizes("x25519", 0, 16))["error"].is_string());
    let long = "x".repeat(DEMO_MSG_LEN + 1);
    assert!(parse(peel("x25519", 3, &long, 1))["error"].is_string());
    assert!(parse(tamper("x25519", 3, "tail", 0, 0, 1))["error"].is_string());
    assert!(parse(tamper("x25519", 3, "header", 3, 0, 1))["error"].is_string());
}

#[test]
fn peel_delivers_and_headers_shrink() {
    for suite in ["testkem", "x25519", "mlkem768", "xwing"] {
        let v = parse(peel(suite, 4, "hello browser", 7));
        let trace = v["trace"].as_array().unwrap();
        assert_eq!(trace.len(), 4);
        assert_eq!(trace[3]["outcome"], "deliver");
        assert_eq!(trace[3]["message"], "hello browser");
        let headers: Vec<u64> = trace.iter().map(|r| r["header_len"].as_u64().unwrap()).collect();
        assert!(headers.windows(2).all(|w| w[0] > w[1]), "{suite}: {headers:?}");
        let payloads: Vec<&Value> = trace.iter().map(|r| &r["payload_len"]).collect();
        assert!(payloads.iter().all(|p| *p == payloads[0]));
    }
}

#[test]
fn tamper_verdicts() {
    let h = parse(tamper("x25519", 4, "header", 1, 77, 3));
    assert_eq!(h["verdict"], "⊤ at hop-2");
    assert_eq!(h["trace"].as_array().unwrap().len(), 1);

    let p = parse(tamper("x25519", 4, "payload", 0, 1234, 3));
    assert_eq!(p["verdict"], "⊥ at receiver");
    let trace = p["trace"].as_array().unwrap();
    assert!(trace[..3].iter().all(|r| r["outcome"] == "forward"));
}
