//! `dcap`: issue, verify and decide on signed capabilities, and run
//! cache-flooding simulations.
//!
//! Exit status: 0 success or authorized, 1 denied or failed verification,
//! 2 malformed input or usage error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dcap_core::armor::{b64url, from_b64url};
use dcap_core::identity::{public_key_from_text, KeyPair};
use dcap_core::verifier::{check_capability, decide_from_bytes, TrustAnchors, VerificationResult};
use dcap_core::{AuthorizationTuple, Capability, Error, GrantorState, PublicKey, ValidityPeriod};
use dcap_icn_sim::{run_scenario, ScenarioConfig};

#[derive(Parser)]
#[command(name = "dcap", version, about = "Self-verifiable signed capabilities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a key pair as <out>.pub and <out>.key
    Keygen {
        #[arg(long)]
        out: PathBuf,
        /// 32-byte seed as 64 hex digits
        #[arg(long)]
        seed: Option<String>,
    },
    /// Add a tuple to (or remove it from) a grantor's authorization store
    Store {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[command(flatten)]
        tuples: TupleArgs,
        #[arg(long)]
        remove: bool,
    },
    /// Issue a grant for tuples present in the store
    Issue(IssueArgs),
    /// Issue a revocation
    Revoke(IssueArgs),
    /// Check one capability file
    Verify {
        cap_file: PathBuf,
        #[arg(long = "anchor", required = true)]
        anchors: Vec<String>,
        #[arg(long)]
        at: u64,
    },
    /// Decide whether a request is authorized by a set of capability files
    Decide {
        #[arg(required = true)]
        cap_files: Vec<PathBuf>,
        #[arg(long = "anchor", required = true)]
        anchors: Vec<String>,
        #[arg(long)]
        grantee: String,
        #[arg(long)]
        object: String,
        #[arg(long)]
        privilege: String,
        #[arg(long)]
        at: u64,
    },
    /// Print every field of a capability file
    Inspect { cap_file: PathBuf },
    /// Run a flooding scenario and print its metrics
    Simulate { scenario_file: PathBuf },
}

/// Parallel lists: the n-th grantee, object and privilege form one tuple.
#[derive(Args)]
struct TupleArgs {
    /// Grantee public key: base64url, `dcapk1:` text, or a .pub file
    #[arg(long = "grantee", required = true)]
    grantees: Vec<String>,
    #[arg(long = "object", required = true)]
    objects: Vec<String>,
    #[arg(long = "privilege", required = true)]
    privileges: Vec<String>,
}

#[derive(Args)]
struct IssueArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    key: PathBuf,
    #[command(flatten)]
    tuples: TupleArgs,
    #[arg(long, requires = "not_after", conflicts_with = "clockless")]
    not_before: Option<u64>,
    #[arg(long, requires = "not_before", conflicts_with = "clockless")]
    not_after: Option<u64>,
    /// Issue without a validity period
    #[arg(long)]
    clockless: bool,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Denied(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotAuthorizedInStore | Error::NotFound => Failure::Denied(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Accepts raw base64url, `dcapk1:` text, or the path of a file holding either.
fn parse_public_key(arg: &str) -> Result<PublicKey, Failure> {
    let path = Path::new(arg);
    let text = if !arg.starts_with("dcapk1:") && path.is_file() {
        read_text(path)?
    } else {
        arg.to_string()
    };
    let text = text.trim();
    let key = if text.starts_with("dcapk1:") {
        public_key_from_text(text)?
    } else {
        from_b64url(text)?
            .try_into()
            .map_err(|_| Failure::Usage(format!("`{arg}` is not a 32-byte key")))?
    };
    Ok(key)
}

fn parse_anchors(args: &[String]) -> Result<TrustAnchors, Failure> {
    args.iter()
        .map(|a| parse_public_key(a))
        .collect::<Result<_, _>>()
}

fn parse_tuples(args: &TupleArgs) -> Result<Vec<AuthorizationTuple>, Failure> {
    let n = args.grantees.len();
    if args.objects.len() != n || args.privileges.len() != n {
        return Err(Failure::Usage(
            "--grantee, --object and --privilege must be given the same number of times".into(),
        ));
    }
    (0..n)
        .map(|i| {
            let grantee = parse_public_key(&args.grantees[i])?;
            Ok(AuthorizationTuple::new(
                grantee,
                args.objects[i].as_bytes().to_vec(),
                args.privileges[i].as_bytes().to_vec(),
            )?)
        })
        .collect()
}

fn load_key(path: &Path) -> Result<KeyPair, Failure> {
    Ok(KeyPair::from_secret_text(&read_text(path)?)?)
}

fn read_capability_bytes(path: &Path) -> Result<Vec<u8>, Failure> {
    let text = read_text(path)?;
    Ok(dcap_core::armor::dearmor(
        dcap_core::armor::CAPABILITY_PREFIX,
        &text,
    )?)
}

fn keygen(out: &Path, seed: Option<&str>) -> CmdResult {
    let seed = seed
        .map(|s| hex::decode(s).map_err(|e| Failure::Usage(format!("--seed: {e}"))))
        .transpose()?;
    let kp = KeyPair::generate(seed.as_deref())?;
    let with_ext = |ext: &str| {
        let mut p = out.as_os_str().to_owned();
        p.push(ext);
        PathBuf::from(p)
    };
    write_text(&with_ext(".pub"), &format!("{}\n", kp.public_text()))?;
    write_text(&with_ext(".key"), &format!("{}\n", kp.secret_text()))?;
    println!("{}", kp.public_text());
    Ok(ExitCode::SUCCESS)
}

fn store(state_path: &Path, key: &Path, tuples: &TupleArgs, remove: bool) -> CmdResult {
    let kp = load_key(key)?;
    let mut state = if state_path.exists() {
        GrantorState::load(kp, state_path)?
    } else {
        GrantorState::new(kp)
    };
    for t in parse_tuples(tuples)? {
        if remove {
            state.remove_tuple(&t)?;
        } else {
            state.add_tuple(t);
        }
    }
    state.save(state_path)?;
    println!("tuples={}", state.store().len());
    Ok(ExitCode::SUCCESS)
}

fn issue(args: &IssueArgs, revoke: bool) -> CmdResult {
    let validity = match (args.not_before, args.not_after, args.clockless) {
        (Some(nb), Some(na), false) => Some(ValidityPeriod::new(nb, na)?),
        (None, None, true) => None,
        _ => {
            return Err(Failure::Usage(
                "give either --not-before and --not-after, or --clockless".into(),
            ))
        }
    };
    let kp = load_key(&args.key)?;
    let mut state = GrantorState::load(kp, &args.state)?;
    let tuples = parse_tuples(&args.tuples)?;
    let cap = if revoke {
        state.issue_revocation(&tuples, validity)?
    } else {
        state.issue_grant(&tuples, validity)?
    };
    // Persist the consumed serial before releasing the capability.
    state.save(&args.state)?;
    write_text(&args.out, &format!("{}\n", cap.to_text()))?;
    println!("serial={} flavor={}", cap.serial(), cap.flavor());
    Ok(ExitCode::SUCCESS)
}

fn verify(cap_file: &Path, anchors: &[String], at: u64) -> CmdResult {
    let anchors = parse_anchors(anchors)?;
    let bytes = read_capability_bytes(cap_file)?;
    let (outcome, cap) = check_capability(&bytes, &anchors, at);
    match (outcome, cap) {
        (VerificationResult::Valid, Some(cap)) => {
            println!("{outcome} serial={} flavor={}", cap.serial(), cap.flavor());
            Ok(ExitCode::SUCCESS)
        }
        (VerificationResult::Malformed, _) => {
            println!("{outcome}");
            Ok(ExitCode::from(2))
        }
        _ => {
            println!("{outcome}");
            Ok(ExitCode::from(1))
        }
    }
}

fn decide(
    cap_files: &[PathBuf],
    anchors: &[String],
    grantee: &str,
    object: &str,
    privilege: &str,
    at: u64,
) -> CmdResult {
    let anchors = parse_anchors(anchors)?;
    let grantee = parse_public_key(grantee)?;
    let raw = cap_files
        .iter()
        .map(|p| read_capability_bytes(p))
        .collect::<Result<Vec<_>, _>>()?;
    let report = decide_from_bytes(
        &raw,
        &anchors,
        &grantee,
        object.as_bytes(),
        privilege.as_bytes(),
        at,
    );
    for d in &report.diagnostics {
        eprintln!("{d}");
    }
    println!("{}", report.decision);
    Ok(if report.decision.authorized {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn bytes_field(out: &mut String, key: &str, bytes: &[u8]) {
    let _ = writeln!(out, "{key}={}", b64url(bytes));
    if let Ok(text) = std::str::from_utf8(bytes) {
        if text.chars().all(|c| !c.is_control()) {
            let _ = writeln!(out, "{key}_utf8={text}");
        }
    }
}

fn render_capability(cap: &Capability) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "grantor={}", b64url(cap.grantor_id()));
    let _ = writeln!(out, "flavor={}", cap.flavor());
    match cap.validity() {
        Some(v) => {
            let _ = writeln!(out, "not_before={}", v.not_before());
            let _ = writeln!(out, "not_after={}", v.not_after());
        }
        None => out.push_str("validity=clockless\n"),
    }
    let _ = writeln!(out, "serial={}", cap.serial());
    let _ = writeln!(out, "tuples={}", cap.tuples().len());
    for (i, t) in cap.tuples().iter().enumerate() {
        let _ = writeln!(out, "tuple.{i}.grantee={}", b64url(t.grantee()));
        bytes_field(&mut out, &format!("tuple.{i}.object"), t.object());
        bytes_field(&mut out, &format!("tuple.{i}.privilege"), t.privilege());
    }
    let _ = writeln!(out, "signature={}", b64url(cap.signature()));
    out
}

fn inspect(cap_file: &Path) -> CmdResult {
    let cap = Capability::decode(&read_capability_bytes(cap_file)?)?;
    print!("{}", render_capability(&cap));
    Ok(ExitCode::SUCCESS)
}

fn simulate(scenario_file: &Path) -> CmdResult {
    let config = ScenarioConfig::parse(&read_text(scenario_file)?)
        .map_err(|e| Failure::Usage(format!("{}: {e}", scenario_file.display())))?;
    let metrics = run_scenario(&config).map_err(|e| Failure::Usage(e.to_string()))?;
    print!("{metrics}");
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Keygen { out, seed } => keygen(&out, seed.as_deref()),
        Command::Store {
            state,
            key,
            tuples,
            remove,
        } => store(&state, &key, &tuples, remove),
        Command::Issue(args) => issue(&args, false),
        Command::Revoke(args) => issue(&args, true),
        Command::Verify {
            cap_file,
            anchors,
            at,
        } => verify(&cap_file, &anchors, at),
        Command::Decide {
            cap_files,
            anchors,
            grantee,
            object,
            privilege,
            at,
        } => decide(&cap_files, &anchors, &grantee, &object, &privilege, at),
        Command::Inspect { cap_file } => inspect(&cap_file),
        Command::Simulate { scenario_file } => simulate(&scenario_file),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(Failure::Denied(msg)) => {
            eprintln!("dcap: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("dcap: {msg}");
            ExitCode::from(2)
        }
    }
}
