//! The `outfox` command: key generation, size tables, scripted simulations,
//! benchmarks, test vectors and file-level packet operations.
//!
//! Exit codes: 0 on success, 1 when a protocol phase aborts or a check
//! fails, 2 on bad usage or unreadable input.

mod bench;
mod drill;

pub use bench::{bench, BenchRow};
pub use drill::{header_drill, payload_drill, DrillReport};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use outfox_core::crypto::keyfile::{self, KeyKind};
use outfox_core::crypto::{KemKeyPair, KemSuite};
use outfox_core::directory::{Directory, Privacy};
use outfox_core::mixnet::{bundled, run_scenario, MixnetConfig, RunEvent, ScenarioError, Topology};
use outfox_core::packet::{layer_sizes, Packet, PacketFormat, PartyId, Processed, RouteHop, RoutingInfo, SizeProfile};
use outfox_core::vectors;
use rand_chacha::ChaCha20Rng;
use rand_core::{OsRng, SeedableRng};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "outfox", version, about = "Outfox packet format and mixnet simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct FormatArgs {
    #[arg(long, default_value = "x25519", value_parser = parse_suite)]
    pub suite: KemSuite,
    /// Security parameter in bits (128 or 256).
    #[arg(long, default_value_t = 128)]
    pub k: usize,
    /// Encryption layers per packet.
    #[arg(long, default_value_t = 5)]
    pub layers: usize,
    /// Fixed message length in bytes.
    #[arg(long, default_value_t = 1024)]
    pub msg_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DrillTarget {
    Header,
    Payload,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a KEM key pair as NAME.pub and NAME.sec.
    Keygen {
        #[arg(long, default_value = "x25519", value_parser = parse_suite)]
        suite: KemSuite,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value = "key")]
        name: String,
        #[arg(long)]
        json: bool,
    },
    /// Per-layer header, payload and packet sizes.
    Sizes {
        #[command(flatten)]
        format: FormatArgs,
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario script against a topology.
    Simulate {
        /// Topology file; the bundled topology when omitted.
        #[arg(long)]
        topology: Option<PathBuf>,
        /// Scenario file, or a bundled name: happy-path, header-tamper, payload-tamper.
        #[arg(long, default_value = "happy-path")]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "x25519", value_parser = parse_suite)]
        suite: KemSuite,
        #[arg(long, default_value_t = 128)]
        k: usize,
        #[arg(long, default_value_t = 256)]
        msg_len: usize,
        #[arg(long)]
        json: bool,
        /// Directory for run.jsonl and channel.jsonl.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time packet creation and processing per suite and check operation counts.
    Bench {
        /// Suites to run; all four when omitted.
        #[arg(long = "suite", value_parser = parse_suite)]
        suites: Vec<KemSuite>,
        #[arg(long, default_value_t = 5)]
        layers: usize,
        #[arg(long, default_value_t = 1024)]
        msg_len: usize,
        #[arg(long, default_value_t = 50)]
        iterations: u32,
        #[arg(long)]
        json: bool,
    },
    /// Emit or check known-answer vectors.
    #[command(subcommand)]
    Vector(VectorCommand),
    /// Build or inspect a key directory file.
    #[command(subcommand)]
    Dir(DirCommand),
    /// Create or process a packet stored in a file.
    #[command(subcommand)]
    Packet(PacketCommand),
    /// Flip bits in a fresh packet and count how each hop reacts.
    Drill {
        #[command(flatten)]
        format: FormatArgs,
        #[arg(long, value_enum, default_value = "header")]
        target: DrillTarget,
        /// Payload flips to try; header drills flip every header bit.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum VectorCommand {
    Emit {
        #[arg(long, default_value_t = 24)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Check { path: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum DirCommand {
    /// Write a directory file from public key files.
    Export {
        /// LABEL=FILE.pub, with `:private` appended for private records.
        #[arg(long = "key", required = true)]
        keys: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load a directory file and list its records.
    Import {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum PacketCommand {
    /// Build a request packet. Each --hop is LABEL=FILE.pub; the last is the receiver.
    Create {
        #[arg(long = "hop", required = true)]
        hops: Vec<String>,
        #[arg(long, default_value = "")]
        msg: String,
        #[arg(long, default_value_t = 1024)]
        msg_len: usize,
        #[arg(long, default_value_t = 128)]
        k: usize,
        #[arg(long, default_value = "outfox")]
        session_id: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove one layer with a key pair.
    Process {
        #[arg(long)]
        public: PathBuf,
        #[arg(long)]
        secret: PathBuf,
        #[arg(long)]
        packet: PathBuf,
        #[arg(long)]
        layers: usize,
        #[arg(long, default_value_t = 1024)]
        msg_len: usize,
        #[arg(long, default_value_t = 128)]
        k: usize,
        #[arg(long, default_value = "outfox")]
        session_id: String,
        /// This party is the final receiver.
        #[arg(long)]
        last: bool,
        /// Where to write the inner packet when forwarding.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_suite(s: &str) -> Result<KemSuite, String> {
    s.parse().map_err(|e: outfox_core::crypto::CryptoError| e.to_string())
}

/// A failed command: its exit code, a message for stderr and anything that
/// should still go to stdout.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
    pub output: Option<String>,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into(), output: None }
    }

    fn failed(message: impl Into<String>, output: Option<String>) -> Self {
        CliError { code: 1, message: message.into(), output }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn rng_for(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_rng(OsRng).expect("OS randomness"),
    }
}

/// Runs one command and returns what it prints on success.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Keygen { suite, seed, out, name, json: as_json } => keygen(suite, seed, &out, &name, as_json),
        Command::Sizes { format, json: as_json } => sizes(&format, as_json),
        Command::Simulate { topology, scenario, seed, suite, k, msg_len, json: as_json, out } => {
            let config = MixnetConfig { suite, security_bits: k, message_len: msg_len };
            simulate(topology.as_deref(), &scenario, seed, config, as_json, out.as_deref())
        }
        Command::Bench { suites, layers, msg_len, iterations, json: as_json } => {
            let suites = if suites.is_empty() { KemSuite::ALL.to_vec() } else { suites };
            bench_report(&suites, layers, msg_len, iterations, as_json)
        }
        Command::Vector(VectorCommand::Emit { count, seed, out }) => {
            let text = vectors::to_jsonl(&vectors::emit(count, seed));
            match out {
                Some(p) => {
                    write(&p, text.as_bytes())?;
                    Ok(format!("wrote {count} vectors to {}\n", p.display()))
                }
                None => Ok(text),
            }
        }
        Command::Vector(VectorCommand::Check { path }) => vector_check(&path),
        Command::Dir(DirCommand::Export { keys, out }) => dir_export(&keys, out.as_deref()),
        Command::Dir(DirCommand::Import { path, json: as_json }) => dir_import(&path, as_json),
        Command::Packet(PacketCommand::Create { hops, msg, msg_len, k, session_id, seed, out }) => {
            packet_create(&hops, &msg, msg_len, k, &session_id, seed, &out)
        }
        Command::Packet(PacketCommand::Process { public, secret, packet, layers, msg_len, k, session_id, last, out }) => {
            packet_process(&public, &secret, &packet, layers, msg_len, k, &session_id, last, out.as_deref())
        }
        Command::Drill { format, target, trials, seed, json: as_json } => {
            let report = match target {
                DrillTarget::Header => header_drill(&format, seed),
                DrillTarget::Payload => payload_drill(&format, trials, seed),
            }
            .map_err(|e| CliError::usage(e.to_string()))?;
            let text = if as_json { json(&report) + "\n" } else { report.to_string() };
            if report.all_detected() {
                Ok(text)
            } else {
                Err(CliError::failed("tampering went undetected", Some(text)))
            }
        }
    }
}

#[derive(Serialize)]
struct KeygenReport {
    suite: KemSuite,
    public_file: String,
    secret_file: String,
    public_key_len: usize,
    party_id: String,
}

fn keygen(suite: KemSuite, seed: Option<u64>, out: &Path, name: &str, as_json: bool) -> Result<String, CliError> {
    let kp = suite.generate(&mut rng_for(seed));
    let (pk_file, sk_file) = keyfile::encode_keypair(&kp);
    fs::create_dir_all(out).map_err(|e| CliError::usage(format!("{}: {e}", out.display())))?;
    let (pk_path, sk_path) = (out.join(format!("{name}.pub")), out.join(format!("{name}.sec")));
    write(&pk_path, &pk_file)?;
    write(&sk_path, &sk_file)?;
    let report = KeygenReport {
        suite,
        public_file: pk_path.display().to_string(),
        secret_file: sk_path.display().to_string(),
        public_key_len: kp.public().len(),
        party_id: PartyId::from_label(name).to_hex(),
    };
    Ok(if as_json {
        json(&report) + "\n"
    } else {
        format!(
            "{suite} key pair: {} ({} byte key), {}\n",
            report.public_file, report.public_key_len, report.secret_file
        )
    })
}

#[derive(Serialize)]
struct SizesReport {
    suite: KemSuite,
    k: usize,
    p_bits: usize,
    layers: usize,
    msg_len: usize,
    surb: usize,
    per_layer: Vec<outfox_core::packet::LayerSize>,
}

fn sizes(f: &FormatArgs, as_json: bool) -> Result<String, CliError> {
    let profile =
        SizeProfile::for_suite(f.suite, f.k, f.layers, f.msg_len).map_err(|e| CliError::usage(e.to_string()))?;
    let report = SizesReport {
        suite: f.suite,
        k: f.k,
        p_bits: profile.kem_ciphertext_bits,
        layers: f.layers,
        msg_len: f.msg_len,
        surb: profile.surb_len(),
        per_layer: layer_sizes(&profile),
    };
    if as_json {
        return Ok(json(&report) + "\n");
    }
    let mut s = format!(
        "suite {}  k={}  p={} bits  L={}  |m|={} bytes  reply block {} bytes\n",
        report.suite, report.k, report.p_bits, report.layers, report.msg_len, report.surb
    );
    s.push_str("layer  kem_ct  aead_ct  tag  header  payload  packet\n");
    for l in &report.per_layer {
        let _ = writeln!(
            s,
            "{:>5}  {:>6}  {:>7}  {:>3}  {:>6}  {:>7}  {:>6}",
            l.layer, l.kem_ciphertext, l.aead_ciphertext, l.tag, l.header, l.payload, l.packet
        );
    }
    Ok(s)
}

fn describe_event(e: &RunEvent) -> String {
    match e {
        RunEvent::Setup { party } => format!("setup     {party}"),
        RunEvent::Register { party } => format!("register  {party}"),
        RunEvent::Dispatch { from, to, length, layer } => {
            let layer = layer.map_or("?".to_string(), |l| l.to_string());
            format!("send      {from} -> {to}  {length} bytes, layer {layer}")
        }
        RunEvent::Lost { from, to } => format!("lost      {from} -> {to}"),
        RunEvent::Stored { party, lpid, next, processed } => {
            let how = if *processed { "processed" } else { "relayed" };
            format!("store     {party} {how}, next {next}  [{lpid:016x}]")
        }
        RunEvent::Deliver { party, kind, text, .. } => format!("deliver   {party} {kind:?}: {text:?}"),
        RunEvent::HeaderFailure { party, from } => format!("⊤         {party} rejected a header from {from}"),
        RunEvent::PayloadFailure { party, from } => format!("⊥         {party} rejected a payload from {from}"),
        RunEvent::Abort { party, reason } => format!("abort     {party}: {reason}"),
        RunEvent::ReplyReused { party, lpid } => format!("reuse     {party} replied again on [{lpid:016x}]"),
    }
}

fn simulate(
    topology: Option<&Path>,
    scenario: &str,
    seed: u64,
    config: MixnetConfig,
    as_json: bool,
    out: Option<&Path>,
) -> Result<String, CliError> {
    let topo_text = match topology {
        Some(p) => read_text(p)?,
        None => bundled::TOPOLOGY.to_string(),
    };
    let topo = Topology::from_json(&topo_text).map_err(|e| CliError::usage(e.to_string()))?;
    let script = match bundled::scenario(scenario) {
        Some(s) => s.to_string(),
        None => read_text(Path::new(scenario))?,
    };
    let render = |log: &outfox_core::mixnet::RunLog| {
        if as_json {
            log.to_jsonl()
        } else {
            let mut s: String = log.events.iter().map(|e| describe_event(e) + "\n").collect();
            let _ = writeln!(
                s,
                "deliveries={} header_failures={} payload_failures={} aborts={}",
                log.deliveries().count(),
                log.header_failures(),
                log.payload_failures(),
                log.aborts()
            );
            s
        }
    };
    match run_scenario(topo, config, &script, seed) {
        Ok(net) => {
            if let Some(dir) = out {
                fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
                write(&dir.join("run.jsonl"), net.log().to_jsonl().as_bytes())?;
                write(&dir.join("channel.jsonl"), net.transport().events_jsonl().as_bytes())?;
            }
            Ok(render(net.log()))
        }
        Err(ScenarioError::Config { line, message }) => Err(CliError::usage(format!("scenario line {line}: {message}"))),
        Err(ScenarioError::Protocol { line, error, log }) => {
            Err(CliError::failed(format!("scenario line {line}: {error}"), Some(render(&log))))
        }
    }
}

fn bench_report(suites: &[KemSuite], layers: usize, msg_len: usize, iterations: u32, as_json: bool) -> Result<String, CliError> {
    let rows: Vec<BenchRow> = suites
        .iter()
        .map(|s| bench(*s, layers, msg_len, iterations))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::usage(e.to_string()))?;
    let text = if as_json {
        json(&rows) + "\n"
    } else {
        let mut s = format!("L={layers}  |m|={msg_len} bytes  {iterations} iterations, mean µs per call\n");
        s.push_str("suite      keygen   encap   decap   create  process  create:encap/decap  process:encap/decap  ok\n");
        for r in &rows {
            let _ = writeln!(
                s,
                "{:<9} {:>7.1} {:>7.1} {:>7.1} {:>8.1} {:>8.1}  {:>10}/{:<8} {:>10}/{:<8} {}",
                r.suite.name(),
                r.keygen_us,
                r.encap_us,
                r.decap_us,
                r.create_us,
                r.process_us,
                r.create_ops.kem_encap,
                r.create_ops.kem_decap,
                r.process_ops.kem_encap,
                r.process_ops.kem_decap,
                if r.passed() { "yes" } else { "NO" }
            );
        }
        s.push_str("public-key operations per processed packet: 1 (a Sphinx hop needs 2)\n");
        s
    };
    if rows.iter().all(BenchRow::passed) {
        Ok(text)
    } else {
        Err(CliError::failed("operation counts or timing order did not hold", Some(text)))
    }
}

fn vector_check(path: &Path) -> Result<String, CliError> {
    let text = read_text(path)?;
    let vs = vectors::from_jsonl(&text).map_err(|e| CliError::usage(e.to_string()))?;
    let mut report = String::new();
    let mut failed = 0;
    for (i, v) in vs.iter().enumerate() {
        match v.check() {
            Ok(()) => {}
            Err(e) => {
                failed += 1;
                let _ = writeln!(report, "vector {} (seed {}, {} layers): {e}", i + 1, v.seed, v.layers);
            }
        }
    }
    let _ = writeln!(report, "{} of {} vectors pass", vs.len() - failed, vs.len());
    if failed == 0 {
        Ok(report)
    } else {
        Err(CliError::failed(format!("{failed} vectors failed"), Some(report)))
    }
}

fn parse_binding(spec: &str) -> Result<(String, PathBuf, Privacy), CliError> {
    let (label, rest) = spec.split_once('=').ok_or_else(|| CliError::usage(format!("{spec:?}: expected LABEL=FILE")))?;
    let (path, privacy) = match rest.strip_suffix(":private") {
        Some(p) => (p, Privacy::Private),
        None => (rest, Privacy::Public),
    };
    Ok((label.to_string(), PathBuf::from(path), privacy))
}

fn load_public(path: &Path) -> Result<(KemSuite, Vec<u8>), CliError> {
    let (kind, suite, key) = keyfile::decode_key(&read(path)?).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    if kind != KeyKind::Public {
        return Err(CliError::usage(format!("{}: not a public key file", path.display())));
    }
    Ok((suite, key.to_vec()))
}

fn dir_export(keys: &[String], out: Option<&Path>) -> Result<String, CliError> {
    let mut dir = Directory::new();
    for spec in keys {
        let (label, path, privacy) = parse_binding(spec)?;
        let (suite, pk) = load_public(&path)?;
        dir.register(PartyId::from_label(&label), suite, pk, privacy).map_err(|e| CliError::usage(e.to_string()))?;
    }
    let text = dir.export_json() + "\n";
    match out {
        Some(p) => {
            write(p, text.as_bytes())?;
            Ok(format!("wrote {} records to {}\n", dir.len(), p.display()))
        }
        None => Ok(text),
    }
}

#[derive(Serialize)]
struct DirRow {
    party: String,
    suite: KemSuite,
    public_key_len: usize,
    privacy: Privacy,
}

fn dir_import(path: &Path, as_json: bool) -> Result<String, CliError> {
    let dir = Directory::import_json(&read_text(path)?).map_err(|e| CliError::usage(e.to_string()))?;
    let rows: Vec<DirRow> = dir
        .records()
        .map(|r| DirRow { party: r.party.to_hex(), suite: r.suite, public_key_len: r.public_key.len(), privacy: r.privacy })
        .collect();
    if as_json {
        return Ok(json(&rows) + "\n");
    }
    let mut s = String::new();
    for r in &rows {
        let _ = writeln!(s, "{}  {:<9} {:>5} bytes  {:?}", r.party, r.suite.name(), r.public_key_len, r.privacy);
    }
    let _ = writeln!(s, "{} records", rows.len());
    Ok(s)
}

fn padded(msg: &str, len: usize) -> Result<Vec<u8>, CliError> {
    let mut m = msg.as_bytes().to_vec();
    if m.len() > len {
        return Err(CliError::usage(format!("message has {} bytes, --msg-len is {len}", m.len())));
    }
    m.resize(len, 0);
    Ok(m)
}

#[derive(Serialize)]
struct CreateReport {
    suite: KemSuite,
    layers: usize,
    packet_len: usize,
    header_len: usize,
    payload_len: usize,
    first_hop: String,
}

fn packet_create(
    hops: &[String],
    msg: &str,
    msg_len: usize,
    k: usize,
    session_id: &str,
    seed: Option<u64>,
    out: &Path,
) -> Result<String, CliError> {
    let mut entries = Vec::new();
    for spec in hops {
        let (label, path, _) = parse_binding(spec)?;
        let (suite, pk) = load_public(&path)?;
        entries.push((PartyId::from_label(&label), suite, pk));
    }
    let suite = entries[0].1;
    if entries.iter().any(|e| e.1 != suite) {
        return Err(CliError::usage("all hops must use the same KEM suite"));
    }
    let fmt = PacketFormat::new(suite, k, entries.len(), msg_len, session_id.as_bytes().to_vec())
        .map_err(|e| CliError::usage(e.to_string()))?;
    let mut route: Vec<RouteHop> = entries
        .iter()
        .enumerate()
        .map(|(i, (id, _, pk))| {
            let routing = entries.get(i + 1).map_or(RoutingInfo::None, |n| RoutingInfo::next_hop(n.0));
            RouteHop::new(*id, pk.clone(), routing)
        })
        .collect();
    let receiver = route.pop().expect("at least one hop");
    let packet = fmt
        .create_packet(&route, &padded(msg, msg_len)?, &receiver, None, &mut rng_for(seed))
        .map_err(|e| CliError::usage(e.to_string()))?;
    write(out, &packet.to_bytes())?;
    Ok(json(&CreateReport {
        suite,
        layers: entries.len(),
        packet_len: packet.len(),
        header_len: packet.header.len(),
        payload_len: packet.payload.len(),
        first_hop: entries[0].0.to_hex(),
    }) + "\n")
}

#[derive(Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
enum ProcessReport {
    Forward { next_hop: String, layer: Option<usize>, packet_len: usize },
    Deliver { message_hex: String, text: String, routing: RoutingInfo },
    HeaderFailure,
    PayloadFailure,
}

#[allow(clippy::too_many_arguments)]
fn packet_process(
    public: &Path,
    secret: &Path,
    packet: &Path,
    layers: usize,
    msg_len: usize,
    k: usize,
    session_id: &str,
    last: bool,
    out: Option<&Path>,
) -> Result<String, CliError> {
    let kp: KemKeyPair = keyfile::decode_keypair(&read(public)?, &read(secret)?).map_err(|e| CliError::usage(e.to_string()))?;
    let fmt = PacketFormat::new(kp.suite(), k, layers, msg_len, session_id.as_bytes().to_vec())
        .map_err(|e| CliError::usage(e.to_string()))?;
    let pkt = Packet::from_bytes(&read(packet)?, fmt.profile()).map_err(|e| CliError::usage(e.to_string()))?;
    let report = match fmt.process_packet(&kp, &pkt, last) {
        Ok(Processed::Forward { packet: inner, next_hop }) => {
            let out = out.ok_or_else(|| CliError::usage("--out is required to write the inner packet"))?;
            write(out, &inner.to_bytes())?;
            ProcessReport::Forward {
                next_hop: next_hop.to_hex(),
                layer: fmt.profile().layer_of_header_len(inner.header.len()),
                packet_len: inner.len(),
            }
        }
        Ok(Processed::Deliver(d)) => {
            let end = d.message.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
            ProcessReport::Deliver {
                text: String::from_utf8_lossy(&d.message[..end]).into_owned(),
                message_hex: hex::encode(&d.message),
                routing: d.routing,
            }
        }
        Err(e) => {
            let r = match e {
                outfox_core::packet::ProcessError::HeaderFailure => ProcessReport::HeaderFailure,
                outfox_core::packet::ProcessError::PayloadFailure => ProcessReport::PayloadFailure,
            };
            return Err(CliError::failed(format!("processing failed: {}", e.symbol()), Some(json(&r) + "\n")));
        }
    };
    Ok(json(&report) + "\n")
}
