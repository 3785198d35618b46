//! Offline transcript verification.
//!
//! Each member is replayed from its own view: its seeded state is rebuilt
//! from the session echo and fed exactly the events addressed to it. The
//! report says whether the recorded outcome is reproducible, whether an
//! accepted key equals the KGC's key, and lists every forgery witness: a
//! member that accepted (its Auth check passed) a key other than the KGC's.

use std::fmt;

use thiserror::Error;

use super::transcript::{Transcript, TranscriptError};
use super::{build_member, deliver_to_member, finish_member};
use crate::actors::{Outcome, ProtocolMessage, Registry};
use crate::field::FieldElement;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("MalformedTranscript: {0}")]
    Malformed(String),
}

impl From<TranscriptError> for VerifyError {
    fn from(e: TranscriptError) -> Self {
        let TranscriptError::Malformed(m) = e;
        VerifyError::Malformed(m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberReport {
    pub member: String,
    pub recorded: Outcome,
    /// Replaying the member on its view yields the recorded outcome (and
    /// the challenge it sent).
    pub reproducible: bool,
    /// `Some` only for accepted outcomes.
    pub key_matches_kgc: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgeryWitness {
    pub member: String,
    pub accepted_key: FieldElement,
    pub kgc_key: FieldElement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub members: Vec<MemberReport>,
    pub forgery_witnesses: Vec<ForgeryWitness>,
}

impl Report {
    pub fn all_reproducible(&self) -> bool {
        self.members.iter().all(|m| m.reproducible)
    }

    pub fn has_forgery(&self) -> bool {
        !self.forgery_witnesses.is_empty()
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.members {
            write!(
                f,
                "member {}: {}; reproducible: {}",
                m.member,
                m.recorded,
                yes_no(m.reproducible)
            )?;
            if let Some(eq) = m.key_matches_kgc {
                write!(f, "; matches kgc key: {}", yes_no(eq))?;
            }
            writeln!(f)?;
        }
        if self.forgery_witnesses.is_empty() {
            writeln!(f, "forgery witness: none")?;
        }
        for w in &self.forgery_witnesses {
            writeln!(
                f,
                "forgery witness: {} accepted {} but the kgc key is {}",
                w.member,
                w.accepted_key.to_hex(),
                w.kgc_key.to_hex()
            )?;
        }
        Ok(())
    }
}

pub fn verify_transcript(t: &Transcript) -> Result<Report, VerifyError> {
    let cfg = t
        .session
        .to_config()
        .resolve()
        .map_err(|e| VerifyError::Malformed(format!("session: {e}")))?;
    if cfg.members != t.session.members {
        return Err(VerifyError::Malformed(
            "session.members is not in canonical order".into(),
        ));
    }
    if t.kgc_key.field() != cfg.field() {
        return Err(VerifyError::Malformed("kgc_key field mismatch".into()));
    }
    let registry = Registry::for_session(&cfg);

    let mut members = Vec::with_capacity(cfg.members.len());
    let mut forgery_witnesses = Vec::new();
    for id in &cfg.members {
        let recorded = t
            .outcome_of(id)
            .cloned()
            .ok_or_else(|| VerifyError::Malformed(format!("no outcome for {id:?}")))?;
        let reproducible = replay(t, &cfg, &registry, id) == Some(recorded.clone());
        let key_matches_kgc = recorded.accepted_key().map(|k| *k == t.kgc_key);
        if let (Some(false), Some(k)) = (key_matches_kgc, recorded.accepted_key()) {
            forgery_witnesses.push(ForgeryWitness {
                member: id.clone(),
                accepted_key: k.clone(),
                kgc_key: t.kgc_key.clone(),
            });
        }
        members.push(MemberReport {
            member: id.clone(),
            recorded,
            reproducible,
            key_matches_kgc,
        });
    }
    if t.outcomes.len() != cfg.members.len() {
        return Err(VerifyError::Malformed(
            "outcomes do not match the member list".into(),
        ));
    }
    Ok(Report {
        members,
        forgery_witnesses,
    })
}

/// Re-runs one member over its delivered events. `None` if the replay
/// diverges from the transcript or the member errors.
fn replay(
    t: &Transcript,
    cfg: &crate::config::ResolvedConfig,
    registry: &Registry,
    id: &str,
) -> Option<Outcome> {
    let mut member = build_member(cfg, registry, id);
    let mut inbox = None;
    let mut sent = None;
    for e in t.delivered_to(id) {
        if let Some(c) = deliver_to_member(&mut member, &e.message, &mut inbox).ok()? {
            sent = Some(c);
        }
    }
    let recorded_challenge = t.events.iter().find_map(|e| match &e.message {
        ProtocolMessage::Challenge(c) if e.from == id && e.round == 3 && !e.tampered => {
            Some(c.clone())
        }
        _ => None,
    });
    if sent != recorded_challenge {
        return None;
    }
    finish_member(&mut member, inbox.as_ref()).ok()
}
