//! Transcript record and its canonical JSON form.
//!
//! ```text
//! {"session":{...},"events":[{"round":1,"type":"key_gen_request","from":"A","to":"kgc",
//!   "payload":{...},"tampered":false},...],"outcomes":[...],"kgc_key":"0a"}
//! ```
//!
//! Field elements are lowercase hex of their fixed-width encoding. Keys of
//! the top level, `session`, event and outcome objects appear in a fixed
//! order; payload keys are sorted. No insignificant whitespace is emitted.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::actors::{Challenge, KeyDistribution, Outcome, ProtocolMessage, RejectReason};
use crate::config::{ResolvedConfig, SessionConfig};
use crate::field::{FieldElement, FieldParams};
use crate::hash::SuiteName;
use crate::math::{AuthTag, Mask};

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("MalformedTranscript: {0}")]
    Malformed(String),
}

fn malformed(msg: impl Into<String>) -> TranscriptError {
    TranscriptError::Malformed(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryEcho {
    pub name: String,
    pub malicious: Option<String>,
    pub victim: Option<String>,
    /// `S*` as requested: `"random"` or hex.
    pub forged_key: Option<String>,
    /// `S*` as injected, hex.
    pub forged_key_used: Option<String>,
}

/// Echo of the session configuration, enough to re-derive every actor's
/// secrets and random streams.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionEcho {
    pub prime: String,
    pub suite: SuiteName,
    pub relay_challenges: bool,
    pub h1_only: bool,
    pub insecure_ok: bool,
    pub seed: u64,
    pub members: Vec<String>,
    pub initiator: String,
    pub adversary: AdversaryEcho,
}

impl SessionEcho {
    pub(crate) fn from_config(
        config: &SessionConfig,
        resolved: &ResolvedConfig,
        adversary: AdversaryEcho,
    ) -> Self {
        SessionEcho {
            prime: config.prime.clone(),
            suite: config.suite,
            relay_challenges: config.relay_challenges,
            h1_only: config.h1_only,
            insecure_ok: config.insecure_ok,
            seed: config.seed,
            members: resolved.members.clone(),
            initiator: resolved.initiator.clone(),
            adversary,
        }
    }

    pub fn to_config(&self) -> SessionConfig {
        SessionConfig {
            prime: self.prime.clone(),
            suite: self.suite,
            relay_challenges: self.relay_challenges,
            h1_only: self.h1_only,
            members: self.members.clone(),
            initiator: Some(self.initiator.clone()),
            seed: self.seed,
            insecure_ok: self.insecure_ok,
        }
    }
}

/// One delivered message. `tampered` is recorder ground truth: the
/// delivered content differs from what the sender sent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEvent {
    pub round: u32,
    pub message: ProtocolMessage,
    pub from: String,
    pub to: String,
    pub tampered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberOutcome {
    pub member: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub session: SessionEcho,
    pub events: Vec<TranscriptEvent>,
    pub outcomes: Vec<MemberOutcome>,
    /// The key the KGC actually chose.
    pub kgc_key: FieldElement,
}

impl Transcript {
    pub fn outcome_of(&self, member: &str) -> Option<&Outcome> {
        self.outcomes
            .iter()
            .find(|o| o.member == member)
            .map(|o| &o.outcome)
    }

    /// Events addressed to `member`, in delivery order.
    pub fn delivered_to<'a>(
        &'a self,
        member: &'a str,
    ) -> impl Iterator<Item = &'a TranscriptEvent> {
        self.events.iter().filter(move |e| e.to == member)
    }

    pub fn tampered_count(&self) -> usize {
        self.events.iter().filter(|e| e.tampered).count()
    }

    pub fn to_json(&self) -> String {
        let raw = RawTranscript {
            session: self.session.clone(),
            events: self.events.iter().map(RawEvent::from_event).collect(),
            outcomes: self.outcomes.iter().map(RawOutcome::from_outcome).collect(),
            kgc_key: self.kgc_key.to_hex(),
        };
        serde_json::to_string(&raw).expect("transcript serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, TranscriptError> {
        let raw: RawTranscript =
            serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
        let field = FieldParams::from_name_or_hex(&raw.session.prime, true)
            .map_err(|e| malformed(format!("session.prime: {e}")))?;
        let events = raw
            .events
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                e.into_event(&field)
                    .map_err(|m| malformed(format!("events[{i}]: {m}")))
            })
            .collect::<Result<_, _>>()?;
        let outcomes = raw
            .outcomes
            .into_iter()
            .enumerate()
            .map(|(i, o)| {
                o.into_outcome(&field)
                    .map_err(|m| malformed(format!("outcomes[{i}]: {m}")))
            })
            .collect::<Result<_, _>>()?;
        let kgc_key =
            decode(&field, &raw.kgc_key).map_err(|m| malformed(format!("kgc_key: {m}")))?;
        Ok(Transcript {
            session: raw.session,
            events,
            outcomes,
            kgc_key,
        })
    }
}

fn decode(field: &FieldParams, s: &str) -> Result<FieldElement, String> {
    if s.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(format!("{s:?} is not lowercase hex"));
    }
    field.decode_hex(s).map_err(|e| format!("{s:?}: {e}"))
}

fn decode_all(field: &FieldParams, v: &[String]) -> Result<Vec<FieldElement>, String> {
    v.iter().map(|s| decode(field, s)).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTranscript {
    session: SessionEcho,
    events: Vec<RawEvent>,
    outcomes: Vec<RawOutcome>,
    kgc_key: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    round: u32,
    #[serde(rename = "type")]
    kind: String,
    from: String,
    to: String,
    payload: Value,
    tampered: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyGenRequestPayload {
    initiator: String,
    members: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IdentifierBroadcastPayload {
    members: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChallengePayload {
    sender: String,
    r: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyDistributionPayload {
    auth: String,
    r0: String,
    masks: Vec<String>,
    relayed_challenges: Option<Vec<String>>,
}

fn hexes(v: &[FieldElement]) -> Vec<String> {
    v.iter().map(FieldElement::to_hex).collect()
}

impl RawEvent {
    fn from_event(e: &TranscriptEvent) -> Self {
        let payload = match &e.message {
            ProtocolMessage::KeyGenRequest {
                initiator,
                member_ids,
            } => serde_json::to_value(KeyGenRequestPayload {
                initiator: initiator.clone(),
                members: member_ids.clone(),
            }),
            ProtocolMessage::IdentifierBroadcast { member_ids } => {
                serde_json::to_value(IdentifierBroadcastPayload {
                    members: member_ids.clone(),
                })
            }
            ProtocolMessage::Challenge(c) => serde_json::to_value(ChallengePayload {
                sender: c.sender_id.clone(),
                r: c.r.to_hex(),
            }),
            ProtocolMessage::KeyDistribution(kd) => serde_json::to_value(KeyDistributionPayload {
                auth: kd.auth.0.to_hex(),
                r0: kd.r0.to_hex(),
                masks: kd.masks.iter().map(|m| m.0.to_hex()).collect(),
                relayed_challenges: kd.relayed_challenges.as_deref().map(hexes),
            }),
        }
        .expect("payload serialization cannot fail");
        RawEvent {
            round: e.round,
            kind: e.message.kind().to_string(),
            from: e.from.clone(),
            to: e.to.clone(),
            payload,
            tampered: e.tampered,
        }
    }

    fn into_event(self, field: &FieldParams) -> Result<TranscriptEvent, String> {
        let bad = |e: serde_json::Error| format!("payload: {e}");
        let message = match self.kind.as_str() {
            "key_gen_request" => {
                let p: KeyGenRequestPayload = serde_json::from_value(self.payload).map_err(bad)?;
                ProtocolMessage::KeyGenRequest {
                    initiator: p.initiator,
                    member_ids: p.members,
                }
            }
            "identifier_broadcast" => {
                let p: IdentifierBroadcastPayload =
                    serde_json::from_value(self.payload).map_err(bad)?;
                ProtocolMessage::IdentifierBroadcast {
                    member_ids: p.members,
                }
            }
            "challenge" => {
                let p: ChallengePayload = serde_json::from_value(self.payload).map_err(bad)?;
                ProtocolMessage::Challenge(Challenge {
                    sender_id: p.sender,
                    r: decode(field, &p.r)?,
                })
            }
            "key_distribution" => {
                let p: KeyDistributionPayload =
                    serde_json::from_value(self.payload).map_err(bad)?;
                ProtocolMessage::KeyDistribution(KeyDistribution {
                    auth: AuthTag(decode(field, &p.auth)?),
                    r0: decode(field, &p.r0)?,
                    masks: decode_all(field, &p.masks)?.into_iter().map(Mask).collect(),
                    relayed_challenges: p
                        .relayed_challenges
                        .map(|v| decode_all(field, &v))
                        .transpose()?,
                })
            }
            other => return Err(format!("unknown message type {other:?}")),
        };
        Ok(TranscriptEvent {
            round: self.round,
            message,
            from: self.from,
            to: self.to,
            tampered: self.tampered,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutcome {
    member: String,
    status: String,
    key: Option<String>,
    reason: Option<String>,
}

impl RawOutcome {
    fn from_outcome(o: &MemberOutcome) -> Self {
        match &o.outcome {
            Outcome::AcceptedKey(k) => RawOutcome {
                member: o.member.clone(),
                status: "accepted".into(),
                key: Some(k.to_hex()),
                reason: None,
            },
            Outcome::Rejected(r) => RawOutcome {
                member: o.member.clone(),
                status: "rejected".into(),
                key: None,
                reason: Some(r.as_str().into()),
            },
        }
    }

    fn into_outcome(self, field: &FieldParams) -> Result<MemberOutcome, String> {
        let outcome = match (self.status.as_str(), self.key, self.reason) {
            ("accepted", Some(k), None) => Outcome::AcceptedKey(decode(field, &k)?),
            ("rejected", None, Some(r)) => Outcome::Rejected(
                RejectReason::parse(&r).ok_or_else(|| format!("unknown reason {r:?}"))?,
            ),
            (status, _, _) => return Err(format!("inconsistent outcome with status {status:?}")),
        };
        Ok(MemberOutcome {
            member: self.member,
            outcome,
        })
    }
}
