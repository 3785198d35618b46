//! Command-line front end: `honest`, `attack`, `verify`, `oracle`.
//!
//! Exit codes: 0 success, 1 negative result (no agreement, no forgery,
//! forgery witness found, oracle mismatch), 2 invalid configuration or
//! input, 3 I/O failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::actors::Outcome;
use crate::config::{numbered_members, SessionConfig};
use crate::hash::SuiteName;
use crate::netsim::{
    run_session, verify_transcript, AdversaryScript, ForgedKeyChoice, SessionError, Transcript,
};
use crate::oracle::{recompute, OracleError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "gkt",
    version,
    about = "Group key transfer protocol simulator and insider forgery harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an honest session and report whether all members agree on the key.
    Honest(SessionArgs),
    /// Run a session in which a malicious member forges a victim's key.
    Attack(AttackArgs),
    /// Re-check a transcript and report forgery witnesses.
    Verify { transcript: PathBuf },
    /// Recompute a tiny toy-suite session with the straight-line oracle.
    Oracle(OracleArgs),
}

#[derive(Args, Debug, Default)]
struct SessionArgs {
    /// TOML session config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// "p23", "modp2048", or a hex modulus.
    #[arg(long)]
    prime: Option<String>,
    /// "standard" or "toy".
    #[arg(long)]
    suite: Option<String>,
    /// Comma-separated identifiers, or a count n for U01..Un.
    #[arg(long)]
    members: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    relay_challenges: bool,
    #[arg(long)]
    h1_only: bool,
    #[arg(long)]
    insecure_ok: bool,
    /// Where to write the transcript JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// Defaults to the first member in session order.
    #[arg(long)]
    malicious: Option<String>,
    /// Defaults to the last member in session order.
    #[arg(long)]
    victim: Option<String>,
    /// Hex field element, or "random".
    #[arg(long, default_value = "random")]
    forged_key: String,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// Transcript to check; without it an honest session is run from the flags.
    transcript: Option<PathBuf>,
}

/// A failed command: exit code plus message for stderr.
struct Failure(i32, String);

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        Failure(EXIT_INVALID, e.to_string())
    }
}

fn parse_members(s: &str) -> Vec<String> {
    if let Ok(n) = s.trim().parse::<usize>() {
        return numbered_members(n);
    }
    s.split(',').map(|m| m.trim().to_string()).collect()
}

impl SessionArgs {
    fn to_config(&self) -> Result<SessionConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Failure(EXIT_IO, format!("cannot read {}: {e}", path.display()))
                })?;
                SessionConfig::from_toml(&text).map_err(|e| Failure(EXIT_INVALID, e.to_string()))?
            }
            None => {
                let members = self
                    .members
                    .as_deref()
                    .ok_or_else(|| Failure(EXIT_INVALID, "--members is required".into()))?;
                let seed = self
                    .seed
                    .ok_or_else(|| Failure(EXIT_INVALID, "--seed is required".into()))?;
                SessionConfig {
                    prime: "modp2048".into(),
                    suite: SuiteName::Standard,
                    relay_challenges: false,
                    h1_only: false,
                    members: parse_members(members),
                    initiator: None,
                    seed,
                    insecure_ok: false,
                }
            }
        };
        if let Some(p) = &self.prime {
            cfg.prime = p.clone();
        }
        if let Some(s) = &self.suite {
            cfg.suite = s
                .parse()
                .map_err(|e: crate::hash::HashError| Failure(EXIT_INVALID, e.to_string()))?;
        }
        if let Some(m) = &self.members {
            cfg.members = parse_members(m);
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.relay_challenges |= self.relay_challenges;
        cfg.h1_only |= self.h1_only;
        cfg.insecure_ok |= self.insecure_ok;
        Ok(cfg)
    }

    fn write_transcript(&self, t: &Transcript) -> Result<(), Failure> {
        if let Some(path) = &self.out {
            write_file(path, &t.to_json())?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure(EXIT_IO, format!("cannot write {}: {e}", path.display())))
}

fn read_transcript(path: &Path) -> Result<Transcript, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure(EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
    Transcript::from_json(&text).map_err(|e| Failure(EXIT_INVALID, e.to_string()))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn honest(args: &SessionArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = args.to_config()?;
    let t = run_session(&cfg, &AdversaryScript::None)?;
    args.write_transcript(&t)?;
    let agreement = t
        .outcomes
        .iter()
        .all(|o| o.outcome == Outcome::AcceptedKey(t.kgc_key.clone()));
    let _ = writeln!(
        out,
        "honest session: t={} seed={} agreement: {}",
        t.outcomes.len(),
        t.session.seed,
        yes_no(agreement)
    );
    Ok(if agreement { EXIT_OK } else { EXIT_NEGATIVE })
}

fn attack(args: &AttackArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = args.session.to_config()?;
    let members = cfg
        .resolve()
        .map_err(|e| Failure(EXIT_INVALID, e.to_string()))?
        .members;
    let malicious = args.malicious.clone().unwrap_or_else(|| members[0].clone());
    let victim = args
        .victim
        .clone()
        .unwrap_or_else(|| members[members.len() - 1].clone());
    let script = AdversaryScript::InsiderForge {
        malicious: malicious.clone(),
        victim: victim.clone(),
        forged_key: ForgedKeyChoice::parse(&args.forged_key),
    };
    let t = run_session(&cfg, &script)?;
    args.session.write_transcript(&t)?;

    let _ = writeln!(
        out,
        "insider attack: t={} malicious={malicious} victim={victim}",
        t.outcomes.len()
    );
    let victim_outcome = t.outcome_of(&victim).expect("victim has an outcome");
    let _ = writeln!(out, "victim outcome: {victim_outcome}");
    let _ = writeln!(out, "kgc key: {}", t.kgc_key.to_hex());
    let forged = t
        .session
        .adversary
        .forged_key_used
        .clone()
        .unwrap_or_default();
    let _ = writeln!(out, "forged key: {forged}");
    let accepted_forged = victim_outcome
        .accepted_key()
        .is_some_and(|k| k.to_hex() == forged);
    let others_ok = t
        .outcomes
        .iter()
        .filter(|o| o.member != victim)
        .all(|o| o.outcome == Outcome::AcceptedKey(t.kgc_key.clone()));
    let _ = writeln!(out, "other members accepted kgc key: {}", yes_no(others_ok));
    if forged == t.kgc_key.to_hex() {
        let _ = writeln!(
            out,
            "forgery succeeded: no (forged key equals the real key, so the forged broadcast is the original)"
        );
        return Ok(EXIT_NEGATIVE);
    }
    let _ = writeln!(out, "forgery succeeded: {}", yes_no(accepted_forged));
    Ok(if accepted_forged {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

fn verify(path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let t = read_transcript(path)?;
    let report = verify_transcript(&t).map_err(|e| Failure(EXIT_INVALID, e.to_string()))?;
    let _ = write!(out, "{report}");
    Ok(if report.has_forgery() {
        EXIT_NEGATIVE
    } else {
        EXIT_OK
    })
}

fn oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let t = match &args.transcript {
        Some(path) => read_transcript(path)?,
        None => {
            let cfg = args.session.to_config()?;
            let t = run_session(&cfg, &AdversaryScript::None)?;
            args.session.write_transcript(&t)?;
            t
        }
    };
    let report = recompute(&t).map_err(|e| match e {
        OracleError::Unsupported(_) | OracleError::Incomplete(_) => {
            Failure(EXIT_INVALID, e.to_string())
        }
    })?;
    let _ = write!(out, "{report}");
    Ok(if report.matches() {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Honest(a) => honest(a, out),
        Command::Attack(a) => attack(a, out),
        Command::Verify { transcript } => verify(transcript, out),
        Command::Oracle(a) => oracle(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}
