use outfox_core::crypto::KemSuite;
use outfox_core::metrics;
use outfox_core::transport::{HookAction, HookRule};
use outfox_core::mixnet::{
    bundled, run_scenario, DeliveryKind, Mixnet, MixnetConfig, MixnetError, Role, RouteSpec, RunEvent,
    ScenarioError, Topology,
};

fn config(suite: KemSuite) -> MixnetConfig {
    MixnetConfig { suite, security_bits: 128, message_len: 64 }
}

fn path(p: &[&str]) -> Vec<String> {
    p.iter().map(|s| s.to_string()).collect()
}

fn ready(suite: KemSuite) -> Mixnet {
    let topo = Topology::from_json(bundled::TOPOLOGY).unwrap();
    let mut net = Mixnet::new(topo, config(suite), 1).unwrap();
    for (label, role) in net.topology().parties() {
        if role != Role::User {
            net.setup(&label).unwrap();
        }
    }
    for u in ["alice", "bob", "carol"] {
        net.register(u).unwrap();
    }
    net
}

fn route(reply: bool) -> RouteSpec {
    RouteSpec {
        path: path(&["gw-a", "mix-1a", "mix-2b", "mix-3a", "gw-b"]),
        reply_path: reply.then(|| path(&["gw-b", "mix-1b", "mix-2a", "mix-3b", "gw-a"])),
    }
}

fn delivered(net: &Mixnet) -> Vec<(String, DeliveryKind, String)> {
    net.log()
        .deliveries()
        .map(|e| match e {
            RunEvent::Deliver { party, kind, text, .. } => (party.clone(), *kind, text.clone()),
            _ => unreachable!(),
        })
        .collect()
}

#[test]
fn request_and_reply_end_to_end() {
    for suite in KemSuite::ALL {
        let mut net = ready(suite);
        net.send_request("alice", "bob", &route(true), b"ping").unwrap();
        assert_eq!(net.party("alice").unwrap().surb_entries, 1);
        net.flush().unwrap();
        let lpid = net.last_reply_lpid("bob").unwrap().unwrap();
        net.send_reply("bob", lpid, b"pong").unwrap();
        net.flush().unwrap();
        assert_eq!(
            delivered(&net),
            vec![
                ("bob".to_string(), DeliveryKind::Request, "ping".to_string()),
                ("alice".to_string(), DeliveryKind::Reply, "pong".to_string()),
            ],
            "{suite}"
        );
    }
}

#[test]
fn no_reply_route_leaves_no_surb_state() {
    let mut net = ready(KemSuite::TestKem);
    net.send_request("alice", "bob", &route(false), b"hi").unwrap();
    net.flush().unwrap();
    assert_eq!(net.party("alice").unwrap().surb_entries, 0);
    assert!(net.last_reply_lpid("bob").unwrap().is_none());
    assert!(matches!(net.send_reply("bob", 7, b"x"), Err(MixnetError::UnknownReply { .. })));
}

#[test]
fn entry_and_exit_gateways_store_user_packets_unprocessed() {
    let mut net = ready(KemSuite::X25519);
    let before = metrics::snapshot();
    net.send_request("alice", "bob", &route(true), b"q").unwrap();
    // Only surb_create and packet_create ran: no decapsulation yet.
    assert_eq!(metrics::snapshot().since(before).kem_decap, 0);
    assert_eq!(net.party("gw-a").unwrap().processed, 0);
    assert_eq!(net.party("gw-a").unwrap().pending.len(), 1);

    net.flush().unwrap();
    let lpid = net.last_reply_lpid("bob").unwrap().unwrap();
    let before_b = net.party("gw-b").unwrap().processed;
    net.send_reply("bob", lpid, b"a").unwrap();
    assert_eq!(net.party("gw-b").unwrap().processed, before_b, "exit gateway does not process replies");
    net.flush().unwrap();
    // gw-a processed the reply as its last mix hop, gw-b the request.
    assert_eq!(net.party("gw-a").unwrap().processed, 1);
    assert_eq!(net.party("gw-b").unwrap().processed, 1);
}

#[test]
fn registration_aborts_without_every_key() {
    let topo = Topology::from_json(bundled::TOPOLOGY).unwrap();
    let mut net = Mixnet::new(topo, config(KemSuite::TestKem), 1).unwrap();
    net.setup("gw-a").unwrap();
    assert!(matches!(net.register("alice"), Err(MixnetError::RegisterAbort { .. })));
    assert_eq!(net.log().aborts(), 1);
}

#[test]
fn phase_errors() {
    let mut net = ready(KemSuite::TestKem);
    assert!(matches!(net.setup("gw-a"), Err(MixnetError::AlreadySetUp(_))));
    assert!(matches!(net.setup("alice"), Err(MixnetError::Role { .. })));
    assert!(matches!(net.register("alice"), Err(MixnetError::AlreadyRegistered(_))));
    assert!(matches!(net.register("mix-1a"), Err(MixnetError::Role { .. })));
    assert!(matches!(net.forward("gw-a", 42), Err(MixnetError::UnknownLpid { .. })));
    let bad = RouteSpec { path: path(&["gw-a", "mix-2a", "mix-1a", "mix-3a", "gw-b"]), reply_path: None };
    assert!(matches!(net.send_request("alice", "bob", &bad, b""), Err(MixnetError::Route(_))));
    assert!(matches!(net.send_request("alice", "bob", &route(false), &[1u8; 65]), Err(MixnetError::MessageTooLong { .. })));
}

#[test]
fn reply_from_unexpected_gateway_is_refused() {
    let mut net = ready(KemSuite::TestKem);
    net.send_request("alice", "bob", &route(true), b"q").unwrap();
    net.flush().unwrap();
    let lpid = net.last_reply_lpid("bob").unwrap().unwrap();
    net.send_reply("bob", lpid, b"a").unwrap();
    // Run the reply until gw-a, the last reply hop, holds it for alice.
    while net.party("gw-a").unwrap().pending.is_empty() {
        assert!(net.step().unwrap());
    }
    let held = net.party("gw-a").unwrap().pending[0];
    let packet = net.stored_packet("gw-a", held).unwrap().unwrap().clone();
    net.inject("gw-b", "alice", &packet).unwrap();
    assert_eq!(delivered(&net).len(), 1);
    assert!(matches!(net.log().events.last(), Some(RunEvent::Abort { party, .. }) if party == "alice"));
    // The genuine hop still delivers.
    net.flush().unwrap();
    assert_eq!(delivered(&net).len(), 2);
}

#[test]
fn dropped_reply_never_arrives() {
    let mut net = ready(KemSuite::TestKem);
    net.send_request("alice", "bob", &route(true), b"q").unwrap();
    net.flush().unwrap();
    let lpid = net.last_reply_lpid("bob").unwrap().unwrap();
    let (alice, gw_a) = (net.id("alice").unwrap(), net.id("gw-a").unwrap());
    net.transport_mut().install_hook(HookRule { to: alice, from: Some(gw_a), action: HookAction::Drop, remaining: Some(1) });
    net.send_reply("bob", lpid, b"a").unwrap();
    net.flush().unwrap();
    assert_eq!(delivered(&net).len(), 1);
    assert!(net.log().events.iter().any(|e| matches!(e, RunEvent::Lost { .. })));
}

#[test]
fn reusing_a_reply_block_is_allowed_and_logged() {
    let mut net = ready(KemSuite::TestKem);
    net.send_request("alice", "bob", &route(true), b"q").unwrap();
    net.flush().unwrap();
    let lpid = net.last_reply_lpid("bob").unwrap().unwrap();
    net.send_reply("bob", lpid, b"one").unwrap();
    net.send_reply("bob", lpid, b"two").unwrap();
    net.flush().unwrap();
    assert_eq!(delivered(&net).len(), 3);
    assert!(net.log().events.iter().any(|e| matches!(e, RunEvent::ReplyReused { .. })));
}

#[test]
fn bundled_happy_path_delivers_twice() {
    let topo = Topology::from_json(bundled::TOPOLOGY).unwrap();
    let net = run_scenario(topo, MixnetConfig::default(), bundled::HAPPY_PATH, 3).unwrap();
    assert_eq!(net.log().deliveries().count(), 2);
    assert_eq!(net.log().header_failures() + net.log().payload_failures(), 0);
}

#[test]
fn bundled_header_tamper_has_exactly_one_header_failure() {
    let topo = Topology::from_json(bundled::TOPOLOGY).unwrap();
    let net = run_scenario(topo, MixnetConfig::default(), bundled::HEADER_TAMPER, 3).unwrap();
    assert_eq!(net.log().header_failures(), 1);
    assert_eq!(net.log().deliveries().count(), 0);
    assert!(net.log().events.iter().any(|e| matches!(e, RunEvent::HeaderFailure { party, .. } if party == "mix-2b")));
}

#[test]
fn bundled_payload_tamper_fails_only_at_the_receiver() {
    let topo = Topology::from_json(bundled::TOPOLOGY).unwrap();
    let net = run_scenario(topo, MixnetConfig::default(), bundled::PAYLOAD_TAMPER, 3).unwrap();
    assert_eq!(net.log().header_failures(), 0);
    assert_eq!(net.log().payload_failures(), 1);
    assert!(net.log().events.iter().any(|e| matches!(e, RunEvent::PayloadFailure { party, .. } if party == "bob")));
}

#[test]
fn duplicate_hook_yields_two_deliveries() {
    let topo = Topology::from_json(bundled::TOPOLOGY).unwrap();
    let script = format!(
        "{}\n{}\n",
        r#"{"action":"setup"}
{"action":"register"}
{"action":"duplicate","to":"bob"}"#,
        r#"{"action":"request","from":"carol","to":"bob","msg":"twice"}
{"action":"forward"}"#
    );
    let net = run_scenario(topo, config(KemSuite::TestKem), &script, 9).unwrap();
    assert_eq!(net.log().deliveries().count(), 2);
}

#[test]
fn scenarios_are_deterministic_under_a_seed() {
    let topo = Topology::from_json(bundled::TOPOLOGY).unwrap();
    let a = run_scenario(topo.clone(), MixnetConfig::default(), bundled::HAPPY_PATH, 5).unwrap();
    let b = run_scenario(topo.clone(), MixnetConfig::default(), bundled::HAPPY_PATH, 5).unwrap();
    assert_eq!(a.log().to_jsonl(), b.log().to_jsonl());
    assert_eq!(a.transport().events_jsonl(), b.transport().events_jsonl());
    let empty = run_scenario(topo, MixnetConfig::default(), "", 5).unwrap();
    assert!(empty.log().events.is_empty());
}

#[test]
fn script_errors_are_classified() {
    let topo = Topology::from_json(bundled::TOPOLOGY).unwrap();
    let unknown = r#"{"action":"setup","party":"mallory"}"#;
    assert!(matches!(
        run_scenario(topo.clone(), MixnetConfig::default(), unknown, 1),
        Err(ScenarioError::Config { line: 1, .. })
    ));
    let junk = "{\"action\":\"teleport\"}";
    assert!(matches!(run_scenario(topo.clone(), MixnetConfig::default(), junk, 1), Err(ScenarioError::Config { .. })));
    let abort = "{\"action\":\"setup\",\"party\":\"gw-a\"}\n{\"action\":\"register\",\"user\":\"alice\"}";
    assert!(matches!(
        run_scenario(topo, MixnetConfig::default(), abort, 1),
        Err(ScenarioError::Protocol { line: 2, error: MixnetError::RegisterAbort { .. }, .. })
    ));
}

#[test]
fn other_layer_counts() {
    for n in [1, 2, 4] {
        let topo = Topology::uniform("var", n, 2);
        let script = r#"{"action":"setup"}
{"action":"register"}
{"action":"request","from":"user1","to":"user2","msg":"x","reply":true}
{"action":"forward"}
{"action":"reply","from":"user2","msg":"y"}
{"action":"forward"}"#;
        let net = run_scenario(topo, config(KemSuite::TestKem), script, 2).unwrap();
        assert_eq!(net.format().profile().layers, n + 2);
        assert_eq!(net.log().deliveries().count(), 2, "n = {n}");
    }
}
