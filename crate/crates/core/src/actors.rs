//! KGC, member and initiator state machines.
//!
//! Each handler consumes one protocol message and returns what the actor
//! sends in response. Handlers check the actor's phase and never accept a
//! message out of order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::config::{canonical_members, ConfigError, ResolvedConfig};
use crate::field::FieldElement;
use crate::hash::HashSuite;
use crate::math::{
    compute_auth, compute_mask, compute_share, recover_key, verify_auth, AuthTag, ChallengeVector,
    Mask, MathError, VariantFlags,
};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActorError {
    #[error("GroupTooSmall: a group needs at least 2 members, got {0}")]
    GroupTooSmall(usize),
    #[error("DuplicateId: {0:?} listed twice")]
    DuplicateId(String),
    #[error("UnknownId: {0:?} is not registered with the KGC")]
    UnknownId(String),
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("WrongPhase: {actor} is in phase {phase} and cannot handle {message}")]
    WrongPhase {
        actor: String,
        phase: &'static str,
        message: &'static str,
    },
    #[error("MissingChallenge: no challenge from {0:?}")]
    MissingChallenge(String),
    #[error("DuplicateChallengeSender: {0:?} sent more than one challenge")]
    DuplicateChallengeSender(String),
    #[error("challenge from {0:?}, who is not in the group")]
    ChallengeFromOutsider(String),
    #[error("MissingChallengeKnowledge: {member} does not know the challenge of {missing}")]
    MissingChallengeKnowledge { member: String, missing: String },
    #[error(transparent)]
    Math(#[from] MathError),
}

impl From<ConfigError> for ActorError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::GroupTooSmall(n) => ActorError::GroupTooSmall(n),
            ConfigError::DuplicateId(id) => ActorError::DuplicateId(id),
            other => ActorError::InvalidGroup(other.to_string()),
        }
    }
}

/// A registered user's identifier and long-term secret.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserCredential {
    pub id: String,
    pub x: FieldElement,
}

/// The KGC's table of long-term secrets.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    users: BTreeMap<String, FieldElement>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers every user of a session, drawing each secret from that
    /// user's own seeded registration stream.
    pub fn for_session(cfg: &ResolvedConfig) -> Self {
        let mut reg = Registry::new();
        for id in cfg.users() {
            let x = cfg.field().sample(&mut rng::registry_stream(cfg.seed, &id));
            reg.register(UserCredential { id, x });
        }
        reg
    }

    pub fn register(&mut self, cred: UserCredential) {
        self.users.insert(cred.id, cred.x);
    }

    pub fn secret(&self, id: &str) -> Option<&FieldElement> {
        self.users.get(id)
    }

    pub fn credential(&self, id: &str) -> Option<UserCredential> {
        self.secret(id).map(|x| UserCredential {
            id: id.to_string(),
            x: x.clone(),
        })
    }

    pub fn contains(&self, id: &str) -> bool {
        self.users.contains_key(id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Challenge {
    pub sender_id: String,
    pub r: FieldElement,
}

/// The KGC's final broadcast: `Auth, r_0, (u_1, ..., u_t)`, optionally
/// followed by the relayed member challenges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyDistribution {
    pub auth: AuthTag,
    pub r0: FieldElement,
    pub masks: Vec<Mask>,
    pub relayed_challenges: Option<Vec<FieldElement>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolMessage {
    KeyGenRequest {
        initiator: String,
        member_ids: Vec<String>,
    },
    IdentifierBroadcast {
        member_ids: Vec<String>,
    },
    Challenge(Challenge),
    KeyDistribution(KeyDistribution),
}

impl ProtocolMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            ProtocolMessage::KeyGenRequest { .. } => "key_gen_request",
            ProtocolMessage::IdentifierBroadcast { .. } => "identifier_broadcast",
            ProtocolMessage::Challenge(_) => "challenge",
            ProtocolMessage::KeyDistribution(_) => "key_distribution",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    AuthMismatch,
    /// No key-distribution message reached the member.
    NoKeyDistribution,
    /// The broadcast's mask list does not match the group size.
    MalformedBroadcast,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::AuthMismatch => "auth_mismatch",
            RejectReason::NoKeyDistribution => "no_key_distribution",
            RejectReason::MalformedBroadcast => "malformed_broadcast",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "auth_mismatch" => Some(RejectReason::AuthMismatch),
            "no_key_distribution" => Some(RejectReason::NoKeyDistribution),
            "malformed_broadcast" => Some(RejectReason::MalformedBroadcast),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    AcceptedKey(FieldElement),
    Rejected(RejectReason),
}

impl Outcome {
    pub fn accepted_key(&self) -> Option<&FieldElement> {
        match self {
            Outcome::AcceptedKey(k) => Some(k),
            Outcome::Rejected(_) => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::AcceptedKey(k) => write!(f, "accepted {}", k.to_hex()),
            Outcome::Rejected(r) => write!(f, "rejected ({})", r.as_str()),
        }
    }
}

/// Builds the initiator's request. The member list is put in canonical
/// order, which fixes the session order `z_1..z_t`.
pub fn initiator_request(
    registry: &Registry,
    initiator: &str,
    member_ids: &[String],
) -> Result<ProtocolMessage, ActorError> {
    let members = canonical_members(member_ids)?;
    if let Some(unknown) = members.iter().find(|id| !registry.contains(id)) {
        return Err(ActorError::UnknownId(unknown.clone()));
    }
    Ok(ProtocolMessage::KeyGenRequest {
        initiator: initiator.to_string(),
        member_ids: members,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgcPhase {
    AwaitRequest,
    AwaitChallenges,
    Done,
}

impl KgcPhase {
    fn name(self) -> &'static str {
        match self {
            KgcPhase::AwaitRequest => "AwaitRequest",
            KgcPhase::AwaitChallenges => "AwaitChallenges",
            KgcPhase::Done => "Done",
        }
    }
}

/// The key generation centre.
pub struct Kgc {
    suite: HashSuite,
    flags: VariantFlags,
    registry: Registry,
    rng: ChaCha20Rng,
    phase: KgcPhase,
    members: Vec<String>,
    group_key: Option<FieldElement>,
}

impl Kgc {
    pub fn new(
        suite: HashSuite,
        flags: VariantFlags,
        registry: Registry,
        rng: ChaCha20Rng,
    ) -> Self {
        Kgc {
            suite,
            flags,
            registry,
            rng,
            phase: KgcPhase::AwaitRequest,
            members: Vec::new(),
            group_key: None,
        }
    }

    pub fn phase(&self) -> KgcPhase {
        self.phase
    }

    /// The session key S, once chosen.
    pub fn group_key(&self) -> Option<&FieldElement> {
        self.group_key.as_ref()
    }

    pub fn members(&self) -> &[String] {
        &self.members
    }

    /// Step 2: echo the member identifiers.
    pub fn on_request(&mut self, msg: &ProtocolMessage) -> Result<ProtocolMessage, ActorError> {
        let ProtocolMessage::KeyGenRequest { member_ids, .. } = msg else {
            return Err(self.wrong_phase(msg));
        };
        if self.phase != KgcPhase::AwaitRequest {
            return Err(self.wrong_phase(msg));
        }
        let members = canonical_members(member_ids)?;
        if let Some(unknown) = members.iter().find(|id| !self.registry.contains(id)) {
            return Err(ActorError::UnknownId(unknown.clone()));
        }
        self.members = members.clone();
        self.phase = KgcPhase::AwaitChallenges;
        Ok(ProtocolMessage::IdentifierBroadcast {
            member_ids: members,
        })
    }

    /// Step 4: choose S and r_0, compute shares, masks and Auth.
    pub fn on_challenges(
        &mut self,
        challenges: &[Challenge],
    ) -> Result<ProtocolMessage, ActorError> {
        if self.phase != KgcPhase::AwaitChallenges {
            return Err(ActorError::WrongPhase {
                actor: "kgc".into(),
                phase: self.phase.name(),
                message: "challenges",
            });
        }
        let mut by_sender: BTreeMap<&str, &FieldElement> = BTreeMap::new();
        for c in challenges {
            if !self.members.contains(&c.sender_id) {
                return Err(ActorError::ChallengeFromOutsider(c.sender_id.clone()));
            }
            if by_sender.insert(&c.sender_id, &c.r).is_some() {
                return Err(ActorError::DuplicateChallengeSender(c.sender_id.clone()));
            }
        }
        let mut member_r = Vec::with_capacity(self.members.len());
        for id in &self.members {
            let r = by_sender
                .get(id.as_str())
                .ok_or_else(|| ActorError::MissingChallenge(id.clone()))?;
            member_r.push((*r).clone());
        }

        let field = self.suite.field().clone();
        let key = field.sample(&mut self.rng);
        let r0 = field.sample(&mut self.rng);
        let r = ChallengeVector::new(r0.clone(), member_r.clone());

        let mut masks = Vec::with_capacity(self.members.len());
        for (i, id) in self.members.iter().enumerate() {
            let x = self
                .registry
                .secret(id)
                .ok_or_else(|| ActorError::UnknownId(id.clone()))?;
            let share = compute_share(&self.suite, x, r.member(i + 1), &r, self.flags)?;
            masks.push(compute_mask(&key, &share));
        }
        let auth = compute_auth(&self.suite, &key, &self.members, &r, &masks)?;

        self.group_key = Some(key);
        self.phase = KgcPhase::Done;
        Ok(ProtocolMessage::KeyDistribution(KeyDistribution {
            auth,
            r0,
            masks,
            relayed_challenges: self.flags.kgc_relays_challenges.then_some(member_r),
        }))
    }

    fn wrong_phase(&self, msg: &ProtocolMessage) -> ActorError {
        ActorError::WrongPhase {
            actor: "kgc".into(),
            phase: self.phase.name(),
            message: msg.kind(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberPhase {
    AwaitIdentifiers,
    AwaitKeyDistribution,
    /// Not listed in the identifier broadcast.
    NotInvolved,
    Finished,
}

impl MemberPhase {
    fn name(self) -> &'static str {
        match self {
            MemberPhase::AwaitIdentifiers => "AwaitIdentifiers",
            MemberPhase::AwaitKeyDistribution => "AwaitKeyDistribution",
            MemberPhase::NotInvolved => "NotInvolved",
            MemberPhase::Finished => "Finished",
        }
    }
}

/// A group member.
pub struct Member {
    credential: UserCredential,
    suite: HashSuite,
    flags: VariantFlags,
    rng: ChaCha20Rng,
    phase: MemberPhase,
    members: Vec<String>,
    index: usize,
    own_r: Option<FieldElement>,
    observed: BTreeMap<String, FieldElement>,
    outcome: Option<Outcome>,
}

impl Member {
    pub fn new(
        credential: UserCredential,
        suite: HashSuite,
        flags: VariantFlags,
        rng: ChaCha20Rng,
    ) -> Self {
        Member {
            credential,
            suite,
            flags,
            rng,
            phase: MemberPhase::AwaitIdentifiers,
            members: Vec::new(),
            index: 0,
            own_r: None,
            observed: BTreeMap::new(),
            outcome: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.credential.id
    }

    pub fn phase(&self) -> MemberPhase {
        self.phase
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    /// 1-based session position, once known.
    pub fn position(&self) -> Option<usize> {
        matches!(
            self.phase,
            MemberPhase::AwaitKeyDistribution | MemberPhase::Finished
        )
        .then_some(self.index + 1)
    }

    /// Step 3: if listed, draw a fresh challenge and send it.
    pub fn on_identifier_broadcast(
        &mut self,
        member_ids: &[String],
    ) -> Result<Option<Challenge>, ActorError> {
        if self.phase != MemberPhase::AwaitIdentifiers {
            return Err(self.wrong_phase("identifier_broadcast"));
        }
        let Some(index) = member_ids.iter().position(|id| *id == self.credential.id) else {
            self.phase = MemberPhase::NotInvolved;
            return Ok(None);
        };
        let r = self.suite.field().sample(&mut self.rng);
        self.members = member_ids.to_vec();
        self.index = index;
        self.own_r = Some(r.clone());
        self.phase = MemberPhase::AwaitKeyDistribution;
        Ok(Some(Challenge {
            sender_id: self.credential.id.clone(),
            r,
        }))
    }

    /// Records another member's challenge seen on the broadcast medium.
    /// The first value seen from each sender is kept.
    pub fn observe_challenge(&mut self, c: &Challenge) {
        if c.sender_id != self.credential.id {
            self.observed
                .entry(c.sender_id.clone())
                .or_insert_with(|| c.r.clone());
        }
    }

    /// Step 5: recover the key and check Auth. The outcome is final.
    pub fn on_key_distribution(&mut self, kd: &KeyDistribution) -> Result<Outcome, ActorError> {
        if self.phase != MemberPhase::AwaitKeyDistribution {
            return Err(self.wrong_phase("key_distribution"));
        }
        let outcome = self.evaluate(kd)?;
        self.finish(outcome.clone());
        Ok(outcome)
    }

    /// Closes the session when no key distribution arrived.
    pub fn on_missing_key_distribution(&mut self) -> Result<Outcome, ActorError> {
        if self.phase != MemberPhase::AwaitKeyDistribution {
            return Err(self.wrong_phase("end_of_session"));
        }
        let outcome = Outcome::Rejected(RejectReason::NoKeyDistribution);
        self.finish(outcome.clone());
        Ok(outcome)
    }

    fn finish(&mut self, outcome: Outcome) {
        self.outcome = Some(outcome);
        self.phase = MemberPhase::Finished;
    }

    fn evaluate(&self, kd: &KeyDistribution) -> Result<Outcome, ActorError> {
        let t = self.members.len();
        if kd.masks.len() != t {
            return Ok(Outcome::Rejected(RejectReason::MalformedBroadcast));
        }
        let r = self.assemble_challenges(kd)?;
        let share = compute_share(
            &self.suite,
            &self.credential.x,
            r.member(self.index + 1),
            &r,
            self.flags,
        )?;
        let key = recover_key(&kd.masks[self.index], &share);
        if verify_auth(&self.suite, &kd.auth, &key, &self.members, &r, &kd.masks)? {
            Ok(Outcome::AcceptedKey(key))
        } else {
            Ok(Outcome::Rejected(RejectReason::AuthMismatch))
        }
    }

    fn assemble_challenges(&self, kd: &KeyDistribution) -> Result<ChallengeVector, ActorError> {
        let own = self.own_r.clone().expect("own challenge set in this phase");
        let relayed = if self.flags.kgc_relays_challenges {
            match &kd.relayed_challenges {
                Some(list) if list.len() == self.members.len() => Some(list),
                _ => {
                    let missing = self
                        .members
                        .iter()
                        .find(|id| **id != self.credential.id)
                        .cloned()
                        .unwrap_or_default();
                    return Err(ActorError::MissingChallengeKnowledge {
                        member: self.credential.id.clone(),
                        missing,
                    });
                }
            }
        } else {
            None
        };
        let mut rs = Vec::with_capacity(self.members.len());
        for (j, id) in self.members.iter().enumerate() {
            if j == self.index {
                rs.push(own.clone());
            } else if let Some(list) = relayed {
                rs.push(list[j].clone());
            } else {
                let r =
                    self.observed
                        .get(id)
                        .ok_or_else(|| ActorError::MissingChallengeKnowledge {
                            member: self.credential.id.clone(),
                            missing: id.clone(),
                        })?;
                rs.push(r.clone());
            }
        }
        Ok(ChallengeVector::new(kd.r0.clone(), rs))
    }

    fn wrong_phase(&self, message: &'static str) -> ActorError {
        ActorError::WrongPhase {
            actor: self.credential.id.clone(),
            phase: self.phase.name(),
            message,
        }
    }
}

/// Members of `ids` that appear in no challenge, used by callers that want
/// to report every gap at once.
pub fn missing_senders(ids: &[String], challenges: &[Challenge]) -> Vec<String> {
    let seen: BTreeSet<&str> = challenges.iter().map(|c| c.sender_id.as_str()).collect();
    ids.iter()
        .filter(|id| !seen.contains(id.as_str()))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SessionConfig;
    use crate::hash::SuiteName;
    use rand_core::SeedableRng;

    fn ids(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    struct Fixture {
        cfg: ResolvedConfig,
        registry: Registry,
        kgc: Kgc,
        members: Vec<Member>,
    }

    fn fixture(
        prime: &str,
        suite: SuiteName,
        names: &[&str],
        seed: u64,
        flags: VariantFlags,
    ) -> Fixture {
        let cfg = SessionConfig::new(prime, suite, names, seed)
            .with_flags(flags)
            .resolve()
            .unwrap();
        let registry = Registry::for_session(&cfg);
        let kgc = Kgc::new(
            cfg.suite.clone(),
            flags,
            registry.clone(),
            rng::kgc_stream(seed),
        );
        let members = cfg
            .members
            .iter()
            .map(|id| {
                Member::new(
                    registry.credential(id).unwrap(),
                    cfg.suite.clone(),
                    flags,
                    rng::member_stream(seed, id),
                )
            })
            .collect();
        Fixture {
            cfg,
            registry,
            kgc,
            members,
        }
    }

    /// Drives a full honest run and returns the broadcast and outcomes.
    fn run(fx: &mut Fixture) -> (KeyDistribution, Vec<Outcome>) {
        let req = initiator_request(&fx.registry, &fx.cfg.initiator, &fx.cfg.members).unwrap();
        let ProtocolMessage::IdentifierBroadcast { member_ids } = fx.kgc.on_request(&req).unwrap()
        else {
            panic!("expected identifier broadcast")
        };
        let challenges: Vec<Challenge> = fx
            .members
            .iter_mut()
            .map(|m| m.on_identifier_broadcast(&member_ids).unwrap().unwrap())
            .collect();
        for m in fx.members.iter_mut() {
            for c in &challenges {
                m.observe_challenge(c);
            }
        }
        let ProtocolMessage::KeyDistribution(kd) = fx.kgc.on_challenges(&challenges).unwrap()
        else {
            panic!("expected key distribution")
        };
        let outcomes = fx
            .members
            .iter_mut()
            .map(|m| m.on_key_distribution(&kd).unwrap())
            .collect();
        (kd, outcomes)
    }

    #[test]
    fn request_is_canonical_and_validated() {
        let fx = fixture(
            "p23",
            SuiteName::Toy,
            &["A", "B", "C"],
            1,
            VariantFlags::default(),
        );
        let req = initiator_request(&fx.registry, "A", &ids(&["B", "A"])).unwrap();
        assert_eq!(
            req,
            ProtocolMessage::KeyGenRequest {
                initiator: "A".into(),
                member_ids: ids(&["A", "B"])
            }
        );
        assert_eq!(
            initiator_request(&fx.registry, "A", &ids(&["A"])).unwrap_err(),
            ActorError::GroupTooSmall(1)
        );
        assert_eq!(
            initiator_request(&fx.registry, "A", &ids(&["A", "Q"])).unwrap_err(),
            ActorError::UnknownId("Q".into())
        );
        assert_eq!(
            initiator_request(&fx.registry, "A", &ids(&["A", "B", "A"])).unwrap_err(),
            ActorError::DuplicateId("A".into())
        );
    }

    #[test]
    fn kgc_echoes_and_enforces_phase() {
        let mut fx = fixture(
            "p23",
            SuiteName::Toy,
            &["A", "B", "C"],
            1,
            VariantFlags::default(),
        );
        let req = ProtocolMessage::KeyGenRequest {
            initiator: "A".into(),
            member_ids: ids(&["A", "B", "C"]),
        };
        assert_eq!(
            fx.kgc.on_request(&req).unwrap(),
            ProtocolMessage::IdentifierBroadcast {
                member_ids: ids(&["A", "B", "C"])
            }
        );
        assert!(matches!(
            fx.kgc.on_request(&req),
            Err(ActorError::WrongPhase { .. })
        ));
        let mut fresh = fixture(
            "p23",
            SuiteName::Toy,
            &["A", "B"],
            1,
            VariantFlags::default(),
        );
        let bad = ProtocolMessage::KeyGenRequest {
            initiator: "A".into(),
            member_ids: ids(&["A", "Z"]),
        };
        assert_eq!(
            fresh.kgc.on_request(&bad).unwrap_err(),
            ActorError::UnknownId("Z".into())
        );
        assert!(matches!(
            fresh.kgc.on_challenges(&[]),
            Err(ActorError::WrongPhase { .. })
        ));
    }

    #[test]
    fn member_challenge_behaviour() {
        let fx = fixture(
            "p23",
            SuiteName::Toy,
            &["A", "B"],
            5,
            VariantFlags::default(),
        );
        let mk = || {
            Member::new(
                fx.registry.credential("A").unwrap(),
                fx.cfg.suite.clone(),
                VariantFlags::default(),
                rng::member_stream(5, "A"),
            )
        };
        let mut a = mk();
        let c1 = a
            .on_identifier_broadcast(&ids(&["A", "B"]))
            .unwrap()
            .unwrap();
        assert_eq!(c1.sender_id, "A");
        assert_eq!(a.position(), Some(1));
        let mut again = mk();
        let c2 = again
            .on_identifier_broadcast(&ids(&["A", "B"]))
            .unwrap()
            .unwrap();
        assert_eq!(c1, c2);
        assert!(matches!(
            a.on_identifier_broadcast(&ids(&["A", "B"])),
            Err(ActorError::WrongPhase { .. })
        ));
        let mut outsider = mk();
        assert_eq!(
            outsider.on_identifier_broadcast(&ids(&["B", "C"])).unwrap(),
            None
        );
        assert_eq!(outsider.phase(), MemberPhase::NotInvolved);
    }

    #[test]
    fn kgc_challenge_errors() {
        let mut fx = fixture(
            "p23",
            SuiteName::Toy,
            &["A", "B", "C"],
            1,
            VariantFlags::default(),
        );
        let req = initiator_request(&fx.registry, "A", &fx.cfg.members.clone()).unwrap();
        fx.kgc.on_request(&req).unwrap();
        let f = fx.cfg.field().clone();
        let c = |id: &str, v: u32| Challenge {
            sender_id: id.into(),
            r: f.element(v),
        };
        assert_eq!(
            fx.kgc.on_challenges(&[c("A", 1), c("B", 2)]).unwrap_err(),
            ActorError::MissingChallenge("C".into())
        );
        assert_eq!(
            fx.kgc
                .on_challenges(&[c("A", 1), c("B", 2), c("B", 3), c("C", 4)])
                .unwrap_err(),
            ActorError::DuplicateChallengeSender("B".into())
        );
        assert_eq!(
            fx.kgc.on_challenges(&[c("A", 1), c("D", 2)]).unwrap_err(),
            ActorError::ChallengeFromOutsider("D".into())
        );
        assert_eq!(fx.kgc.phase(), KgcPhase::AwaitChallenges);
        assert_eq!(
            missing_senders(&fx.cfg.members, &[c("B", 1)]),
            ids(&["A", "C"])
        );
    }

    #[test]
    fn toy_session_masks_satisfy_identity() {
        let mut fx = fixture(
            "p23",
            SuiteName::Toy,
            &["A", "B"],
            3,
            VariantFlags::default(),
        );
        let (kd, outcomes) = run(&mut fx);
        let key = fx.kgc.group_key().unwrap().clone();
        for (i, id) in fx.cfg.members.iter().enumerate() {
            let m = &fx.members[i];
            assert_eq!(m.id(), id);
            assert_eq!(outcomes[i], Outcome::AcceptedKey(key.clone()));
            assert_eq!(m.outcome(), Some(&Outcome::AcceptedKey(key.clone())));
        }
        assert_eq!(kd.masks.len(), 2);
        assert!(kd.relayed_challenges.is_none());
        assert_eq!(fx.kgc.phase(), KgcPhase::Done);
    }

    #[test]
    fn honest_agreement_all_variants() {
        for relay in [false, true] {
            for h1_only in [false, true] {
                let flags = VariantFlags {
                    kgc_relays_challenges: relay,
                    h1_only_evaluation_point: h1_only,
                };
                for seed in 0..5 {
                    let mut fx = fixture(
                        "modp2048",
                        SuiteName::Standard,
                        &["alice", "bob", "carol", "dave"],
                        seed,
                        flags,
                    );
                    let (kd, outcomes) = run(&mut fx);
                    assert_eq!(kd.relayed_challenges.is_some(), relay);
                    let key = fx.kgc.group_key().unwrap();
                    assert!(outcomes
                        .iter()
                        .all(|o| o == &Outcome::AcceptedKey(key.clone())));
                }
            }
        }
    }

    #[test]
    fn flipping_r0_is_rejected() {
        let mut fx = fixture(
            "modp2048",
            SuiteName::Standard,
            &["A", "B", "C"],
            21,
            VariantFlags::default(),
        );
        let (kd, _) = run(&mut fx);
        let f = fx.cfg.field().clone();
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for _ in 0..100 {
            let mut bytes = kd.r0.encode();
            let bit = (rand_core::RngCore::next_u32(&mut rng) as usize) % (bytes.len() * 8);
            bytes[bit / 8] ^= 1 << (bit % 8);
            let Ok(r0) = f.decode(&bytes) else { continue };
            let tampered = KeyDistribution { r0, ..kd.clone() };
            // B's state just before the broadcast
            let mut b = replay_member(&fx, "B");
            assert_eq!(
                b.on_key_distribution(&tampered).unwrap(),
                Outcome::Rejected(RejectReason::AuthMismatch)
            );
        }
    }

    fn replay_member(fx: &Fixture, id: &str) -> Member {
        let mut m = Member::new(
            fx.registry.credential(id).unwrap(),
            fx.cfg.suite.clone(),
            fx.cfg.flags,
            rng::member_stream(fx.cfg.seed, id),
        );
        m.on_identifier_broadcast(&fx.cfg.members).unwrap();
        for other in &fx.cfg.members {
            if other != id {
                let mut o = Member::new(
                    fx.registry.credential(other).unwrap(),
                    fx.cfg.suite.clone(),
                    fx.cfg.flags,
                    rng::member_stream(fx.cfg.seed, other),
                );
                let c = o.on_identifier_broadcast(&fx.cfg.members).unwrap().unwrap();
                m.observe_challenge(&c);
            }
        }
        m
    }

    #[test]
    fn outcome_is_set_once() {
        let mut fx = fixture(
            "p23",
            SuiteName::Toy,
            &["A", "B"],
            3,
            VariantFlags::default(),
        );
        let (kd, _) = run(&mut fx);
        assert!(matches!(
            fx.members[0].on_key_distribution(&kd),
            Err(ActorError::WrongPhase { .. })
        ));
        assert!(matches!(
            fx.members[0].on_missing_key_distribution(),
            Err(ActorError::WrongPhase { .. })
        ));
    }

    #[test]
    fn missing_challenge_knowledge() {
        let fx = fixture(
            "p23",
            SuiteName::Toy,
            &["A", "B"],
            3,
            VariantFlags::default(),
        );
        let mut a = Member::new(
            fx.registry.credential("A").unwrap(),
            fx.cfg.suite.clone(),
            VariantFlags::default(),
            rng::member_stream(3, "A"),
        );
        a.on_identifier_broadcast(&fx.cfg.members).unwrap();
        let f = fx.cfg.field().clone();
        let kd = KeyDistribution {
            auth: AuthTag(f.zero()),
            r0: f.zero(),
            masks: vec![Mask(f.zero()), Mask(f.zero())],
            relayed_challenges: None,
        };
        assert_eq!(
            a.on_key_distribution(&kd).unwrap_err(),
            ActorError::MissingChallengeKnowledge {
                member: "A".into(),
                missing: "B".into()
            }
        );
        let relay = VariantFlags {
            kgc_relays_challenges: true,
            h1_only_evaluation_point: false,
        };
        let mut r = Member::new(
            fx.registry.credential("A").unwrap(),
            fx.cfg.suite.clone(),
            relay,
            rng::member_stream(3, "A"),
        );
        r.on_identifier_broadcast(&fx.cfg.members).unwrap();
        assert!(matches!(
            r.on_key_distribution(&kd),
            Err(ActorError::MissingChallengeKnowledge { .. })
        ));
    }

    #[test]
    fn short_mask_list_is_malformed() {
        let mut fx = fixture(
            "p23",
            SuiteName::Toy,
            &["A", "B"],
            3,
            VariantFlags::default(),
        );
        let mut m = replay_member(&fx, "A");
        let (mut kd, _) = run(&mut fx);
        kd.masks.pop();
        assert_eq!(
            m.on_key_distribution(&kd).unwrap(),
            Outcome::Rejected(RejectReason::MalformedBroadcast)
        );
    }

    /// Straight-line recomputation of step 4 for a t = 3 session at p = 23
    /// using plain integer arithmetic.
    #[test]
    fn t3_session_matches_integer_oracle() {
        let mut fx = fixture(
            "p23",
            SuiteName::Toy,
            &["A", "B", "C"],
            17,
            VariantFlags::default(),
        );
        let (kd, _) = run(&mut fx);
        let p = 23u64;
        let small = |e: &FieldElement| e.value().iter_u64_digits().next().unwrap_or(0);
        let key = small(fx.kgc.group_key().unwrap());
        let r0 = small(&kd.r0);
        let rs: Vec<u64> = fx
            .cfg
            .members
            .iter()
            .map(|id| {
                let m = replay_member(&fx, id);
                small(m.own_r.as_ref().unwrap())
            })
            .collect();
        let mut masks = Vec::new();
        for (i, id) in fx.cfg.members.iter().enumerate() {
            let x = small(fx.registry.secret(id).unwrap());
            let e = (x + (x + rs[i] + r0 + 1) % p) % p;
            let mut s = r0;
            let mut pow = 1u64;
            for rj in &rs {
                pow = pow * e % p;
                s = (s + pow * rj) % p;
            }
            masks.push((key + p - s) % p);
        }
        let got: Vec<u64> = kd.masks.iter().map(|m| small(&m.0)).collect();
        assert_eq!(got, masks);
        // Auth: sum of bytes over S || (len, id)* || r || u, plus tag 2
        let mut sum = key + 2 + r0 + rs.iter().sum::<u64>() + masks.iter().sum::<u64>();
        for id in &fx.cfg.members {
            sum += id.bytes().map(u64::from).sum::<u64>() + id.len() as u64;
        }
        assert_eq!(small(&kd.auth.0), sum % p);
    }

    #[test]
    fn share_symmetry_between_kgc_and_member() {
        let mut fx = fixture(
            "modp2048",
            SuiteName::Standard,
            &["A", "B", "C"],
            8,
            VariantFlags::default(),
        );
        let (kd, _) = run(&mut fx);
        let key = fx.kgc.group_key().unwrap().clone();
        for (i, id) in fx.cfg.members.iter().enumerate() {
            let m = replay_member(&fx, id);
            let r = m.assemble_challenges(&kd).unwrap();
            let s = compute_share(
                &fx.cfg.suite,
                fx.registry.secret(id).unwrap(),
                r.member(i + 1),
                &r,
                fx.cfg.flags,
            )
            .unwrap();
            assert_eq!(compute_mask(&key, &s), kd.masks[i]);
        }
    }
}
