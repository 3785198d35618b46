//! Synchronous broadcast-network simulator.
//!
//! A session runs in four fixed rounds:
//!
//! 1. initiator -> KGC: key-generation request
//! 2. KGC -> each member: identifier broadcast
//! 3. each member -> KGC (and, unless the KGC relays them, every other
//!    member): challenge
//! 4. KGC -> each member: key distribution
//!
//! Broadcasts are expanded into one [`DeliveryEvent`] per recipient and
//! every event passes through the adversary hook before delivery, so an
//! adversary can rewrite one recipient's copy without touching the others.
//! After round 4 each member processes the key distribution it received.

mod transcript;
mod verify;

use std::collections::BTreeMap;

use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::actors::{
    initiator_request, ActorError, Challenge, KeyDistribution, Kgc, Member, MemberPhase, Outcome,
    ProtocolMessage, Registry, RejectReason, UserCredential,
};
use crate::attacks::{insider_forge, random_other_key, random_tamper, AttackError, AttackerView};
use crate::config::{ConfigError, ResolvedConfig, SessionConfig, KGC_ID};
use crate::field::FieldElement;
use crate::hash::HashSuite;
use crate::math::VariantFlags;
use crate::rng;

pub use transcript::{
    AdversaryEcho, MemberOutcome, SessionEcho, Transcript, TranscriptError, TranscriptEvent,
};
pub use verify::{verify_transcript, ForgeryWitness, MemberReport, Report, VerifyError};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("ConfigInvalid: {0}")]
    ConfigInvalid(String),
    #[error("ActorError at {actor}: {source}")]
    Actor {
        actor: String,
        #[source]
        source: ActorError,
    },
    #[error("adversary failed: {0}")]
    Adversary(#[from] AttackError),
    #[error("session ended before the KGC chose a key")]
    Incomplete,
}

impl From<ConfigError> for SessionError {
    fn from(e: ConfigError) -> Self {
        SessionError::ConfigInvalid(e.to_string())
    }
}

fn actor_err(actor: &str) -> impl FnOnce(ActorError) -> SessionError + '_ {
    move |source| SessionError::Actor {
        actor: actor.to_string(),
        source,
    }
}

/// One message on its way to one recipient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryEvent {
    pub round: u32,
    pub message: ProtocolMessage,
    pub sender: String,
    pub recipient: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversaryAction {
    Deliver,
    Drop,
    /// Deliver this message instead; round and recipient are unchanged.
    Replace(ProtocolMessage),
}

/// Where the forged key `S*` comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForgedKeyChoice {
    /// Uniform over the field, excluding the real key.
    Random,
    /// Fixed-width hex encoding of the field element.
    Hex(String),
}

impl ForgedKeyChoice {
    pub fn as_echo(&self) -> String {
        match self {
            ForgedKeyChoice::Random => "random".into(),
            ForgedKeyChoice::Hex(h) => h.to_ascii_lowercase(),
        }
    }

    pub fn parse(s: &str) -> Self {
        if s == "random" {
            ForgedKeyChoice::Random
        } else {
            ForgedKeyChoice::Hex(s.to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversaryScript {
    /// Delivers everything unchanged.
    None,
    /// The malicious member forges the victim's copy of the key distribution.
    InsiderForge {
        malicious: String,
        victim: String,
        forged_key: ForgedKeyChoice,
    },
    /// Perturbs one field of the victim's copy of the key distribution.
    RandomTamper { victim: String },
}

impl AdversaryScript {
    pub fn name(&self) -> &'static str {
        match self {
            AdversaryScript::None => "none",
            AdversaryScript::InsiderForge { .. } => "insider-forge",
            AdversaryScript::RandomTamper { .. } => "random-tamper",
        }
    }

    fn malicious(&self) -> Option<&str> {
        match self {
            AdversaryScript::InsiderForge { malicious, .. } => Some(malicious),
            _ => None,
        }
    }

    fn victim(&self) -> Option<&str> {
        match self {
            AdversaryScript::InsiderForge { victim, .. }
            | AdversaryScript::RandomTamper { victim } => Some(victim),
            AdversaryScript::None => None,
        }
    }

    /// Checks the script's parameters against the session group.
    pub fn validate(&self, members: &[String]) -> Result<(), SessionError> {
        let in_group = |id: &str| members.iter().any(|m| m == id);
        if let Some(m) = self.malicious() {
            if !in_group(m) {
                return Err(SessionError::ConfigInvalid(format!(
                    "malicious member {m:?} is not in the group"
                )));
            }
        }
        if let Some(v) = self.victim() {
            if !in_group(v) {
                return Err(SessionError::ConfigInvalid(format!(
                    "victim {v:?} is not in the group"
                )));
            }
            if self.malicious() == Some(v) {
                return Err(SessionError::ConfigInvalid(format!(
                    "malicious member and victim are both {v:?}"
                )));
            }
        }
        Ok(())
    }

    fn echo(&self) -> AdversaryEcho {
        AdversaryEcho {
            name: self.name().to_string(),
            malicious: self.malicious().map(str::to_string),
            victim: self.victim().map(str::to_string),
            forged_key: match self {
                AdversaryScript::InsiderForge { forged_key, .. } => Some(forged_key.as_echo()),
                _ => None,
            },
            forged_key_used: None,
        }
    }
}

/// What the adversary may look at when deciding on an event: the attacker's
/// own credential (insider scripts only) and the messages it has sent or
/// received so far.
pub struct Knowledge<'a> {
    pub credential: Option<&'a UserCredential>,
    pub observed: &'a [ProtocolMessage],
}

/// Stateful executor of an [`AdversaryScript`].
pub struct Adversary {
    script: AdversaryScript,
    suite: HashSuite,
    flags: VariantFlags,
    rng: ChaCha20Rng,
    explicit_key: Option<FieldElement>,
    forged_key_used: Option<FieldElement>,
}

impl Adversary {
    pub fn new(
        script: AdversaryScript,
        suite: HashSuite,
        flags: VariantFlags,
        rng: ChaCha20Rng,
    ) -> Result<Self, SessionError> {
        let explicit_key = match &script {
            AdversaryScript::InsiderForge {
                forged_key: ForgedKeyChoice::Hex(h),
                ..
            } => Some(
                suite
                    .field()
                    .decode_hex(h)
                    .map_err(|e| SessionError::ConfigInvalid(format!("forged key {h:?}: {e}")))?,
            ),
            _ => None,
        };
        Ok(Adversary {
            script,
            suite,
            flags,
            rng,
            explicit_key,
            forged_key_used: None,
        })
    }

    pub fn script(&self) -> &AdversaryScript {
        &self.script
    }

    /// The `S*` actually injected, once the forgery has happened.
    pub fn forged_key_used(&self) -> Option<&FieldElement> {
        self.forged_key_used.as_ref()
    }

    pub fn decide(
        &mut self,
        event: &DeliveryEvent,
        knowledge: &Knowledge<'_>,
    ) -> Result<AdversaryAction, AttackError> {
        let ProtocolMessage::KeyDistribution(kd) = &event.message else {
            return Ok(AdversaryAction::Deliver);
        };
        match &self.script {
            AdversaryScript::None => Ok(AdversaryAction::Deliver),
            AdversaryScript::RandomTamper { victim } => {
                if event.recipient != *victim {
                    return Ok(AdversaryAction::Deliver);
                }
                let (tampered, _) = random_tamper(kd, &mut self.rng);
                Ok(AdversaryAction::Replace(ProtocolMessage::KeyDistribution(
                    tampered,
                )))
            }
            AdversaryScript::InsiderForge {
                malicious, victim, ..
            } => {
                if event.recipient != *victim {
                    return Ok(AdversaryAction::Deliver);
                }
                let credential = knowledge
                    .credential
                    .filter(|c| c.id == *malicious)
                    .ok_or_else(|| AttackError::MissingKnowledge("own credential".into()))?;
                let view = AttackerView {
                    credential: credential.clone(),
                    observed: knowledge.observed.to_vec(),
                };
                let explicit = self.explicit_key.clone();
                let rng = &mut self.rng;
                let forgery = insider_forge(&self.suite, self.flags, &view, kd, victim, |key| {
                    explicit.unwrap_or_else(|| random_other_key(key, rng))
                })?;
                self.forged_key_used = Some(forgery.forged_key);
                Ok(AdversaryAction::Replace(ProtocolMessage::KeyDistribution(
                    forgery.broadcast.into_key_distribution(),
                )))
            }
        }
    }
}

/// Hands one delivered message to a member. Returns the challenge the
/// member wants to send, if any. The first key distribution is kept in
/// `inbox` for processing after round 4.
fn deliver_to_member(
    member: &mut Member,
    msg: &ProtocolMessage,
    inbox: &mut Option<KeyDistribution>,
) -> Result<Option<Challenge>, ActorError> {
    match msg {
        ProtocolMessage::IdentifierBroadcast { member_ids } => {
            member.on_identifier_broadcast(member_ids)
        }
        ProtocolMessage::Challenge(c) => {
            member.observe_challenge(c);
            Ok(None)
        }
        ProtocolMessage::KeyDistribution(kd) => {
            if inbox.is_none() {
                *inbox = Some(kd.clone());
            }
            Ok(None)
        }
        ProtocolMessage::KeyGenRequest { .. } => Ok(None),
    }
}

/// Runs the member's final step on whatever reached it.
fn finish_member(
    member: &mut Member,
    inbox: Option<&KeyDistribution>,
) -> Result<Outcome, ActorError> {
    match (member.phase(), inbox) {
        (MemberPhase::AwaitKeyDistribution, Some(kd)) => member.on_key_distribution(kd),
        (MemberPhase::AwaitKeyDistribution, None) => member.on_missing_key_distribution(),
        _ => Ok(Outcome::Rejected(RejectReason::NoKeyDistribution)),
    }
}

fn build_member(cfg: &ResolvedConfig, registry: &Registry, id: &str) -> Member {
    let credential = registry.credential(id).expect("every member is registered");
    Member::new(
        credential,
        cfg.suite.clone(),
        cfg.flags,
        rng::member_stream(cfg.seed, id),
    )
}

struct Network {
    adversary: Adversary,
    attacker: Option<UserCredential>,
    views: BTreeMap<String, Vec<ProtocolMessage>>,
    events: Vec<TranscriptEvent>,
}

impl Network {
    /// Passes one event through the adversary and records it. Returns the
    /// message actually delivered, or `None` if dropped.
    fn send(
        &mut self,
        round: u32,
        from: &str,
        to: &str,
        message: ProtocolMessage,
    ) -> Result<Option<ProtocolMessage>, SessionError> {
        let event = DeliveryEvent {
            round,
            message,
            sender: from.to_string(),
            recipient: to.to_string(),
        };
        let action = {
            let observed = self
                .attacker
                .as_ref()
                .and_then(|c| self.views.get(&c.id))
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            let knowledge = Knowledge {
                credential: self.attacker.as_ref(),
                observed,
            };
            self.adversary.decide(&event, &knowledge)?
        };
        let DeliveryEvent {
            round,
            message: original,
            sender,
            recipient,
        } = event;
        let delivered = match action {
            AdversaryAction::Deliver => original.clone(),
            AdversaryAction::Drop => {
                self.views.entry(sender).or_default().push(original);
                return Ok(None);
            }
            AdversaryAction::Replace(m) => m,
        };
        let tampered = delivered != original;
        self.views.entry(sender.clone()).or_default().push(original);
        self.views
            .entry(recipient.clone())
            .or_default()
            .push(delivered.clone());
        self.events.push(TranscriptEvent {
            round,
            message: delivered.clone(),
            from: sender,
            to: recipient,
            tampered,
        });
        Ok(Some(delivered))
    }
}

/// Runs one complete session. The result is a pure function of `config`
/// (including its seed) and `script`.
pub fn run_session(
    config: &SessionConfig,
    script: &AdversaryScript,
) -> Result<Transcript, SessionError> {
    let cfg = config.resolve()?;
    script.validate(&cfg.members)?;
    let registry = Registry::for_session(&cfg);

    let mut kgc = Kgc::new(
        cfg.suite.clone(),
        cfg.flags,
        registry.clone(),
        rng::kgc_stream(cfg.seed),
    );
    let mut members: BTreeMap<String, Member> = cfg
        .members
        .iter()
        .map(|id| (id.clone(), build_member(&cfg, &registry, id)))
        .collect();
    let mut inboxes: BTreeMap<String, Option<KeyDistribution>> =
        cfg.members.iter().map(|id| (id.clone(), None)).collect();

    let mut net = Network {
        adversary: Adversary::new(
            script.clone(),
            cfg.suite.clone(),
            cfg.flags,
            rng::adversary_stream(cfg.seed),
        )?,
        attacker: script.malicious().and_then(|m| registry.credential(m)),
        views: BTreeMap::new(),
        events: Vec::new(),
    };

    // Round 1
    let request = initiator_request(&registry, &cfg.initiator, &cfg.members)
        .map_err(actor_err(&cfg.initiator))?;
    let mut broadcast = None;
    if let Some(msg) = net.send(1, &cfg.initiator, KGC_ID, request)? {
        if let ProtocolMessage::KeyGenRequest { .. } = msg {
            broadcast = Some(kgc.on_request(&msg).map_err(actor_err(KGC_ID))?);
        }
    }

    // Round 2
    let mut outgoing: Vec<Challenge> = Vec::new();
    if let Some(bc) = broadcast {
        for id in &cfg.members {
            if let Some(msg) = net.send(2, KGC_ID, id, bc.clone())? {
                let member = members.get_mut(id).expect("member exists");
                let inbox = inboxes.get_mut(id).expect("inbox exists");
                if let Some(c) = deliver_to_member(member, &msg, inbox).map_err(actor_err(id))? {
                    outgoing.push(c);
                }
            }
        }
    }

    // Round 3
    let mut received: Vec<Challenge> = Vec::new();
    for challenge in outgoing {
        let sender = challenge.sender_id.clone();
        let msg = ProtocolMessage::Challenge(challenge);
        if let Some(ProtocolMessage::Challenge(c)) = net.send(3, &sender, KGC_ID, msg.clone())? {
            received.push(c);
        }
        if !cfg.flags.kgc_relays_challenges {
            for id in cfg.members.iter().filter(|id| **id != sender) {
                if let Some(delivered) = net.send(3, &sender, id, msg.clone())? {
                    let member = members.get_mut(id).expect("member exists");
                    let inbox = inboxes.get_mut(id).expect("inbox exists");
                    deliver_to_member(member, &delivered, inbox).map_err(actor_err(id))?;
                }
            }
        }
    }

    // Round 4
    if kgc.phase() == crate::actors::KgcPhase::AwaitChallenges {
        let kd = kgc.on_challenges(&received).map_err(actor_err(KGC_ID))?;
        for id in &cfg.members {
            if let Some(msg) = net.send(4, KGC_ID, id, kd.clone())? {
                let member = members.get_mut(id).expect("member exists");
                let inbox = inboxes.get_mut(id).expect("inbox exists");
                deliver_to_member(member, &msg, inbox).map_err(actor_err(id))?;
            }
        }
    }

    let mut outcomes = Vec::with_capacity(cfg.members.len());
    for id in &cfg.members {
        let member = members.get_mut(id).expect("member exists");
        let outcome = finish_member(member, inboxes[id].as_ref()).map_err(actor_err(id))?;
        outcomes.push(MemberOutcome {
            member: id.clone(),
            outcome,
        });
    }

    let kgc_key = kgc.group_key().cloned().ok_or(SessionError::Incomplete)?;
    let mut adversary = script.echo();
    adversary.forged_key_used = net.adversary.forged_key_used().map(FieldElement::to_hex);
    Ok(Transcript {
        session: SessionEcho::from_config(config, &cfg, adversary),
        events: net.events,
        outcomes,
        kgc_key,
    })
}
