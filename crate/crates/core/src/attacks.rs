//! Insider key forgery against the final key-distribution broadcast.
//!
//! A malicious member `m` recovers the session key `S` exactly as an honest
//! member would. Intercepting the victim's copy of the broadcast, it swaps
//! the victim's mask for `u*_v = u_v - S + S*` and recomputes the tag over
//! `S*` and the modified mask list. The victim then recovers `S*` and the
//! tag verifies, because every input to Auth is either public or derivable
//! by any member.

use rand_core::RngCore;
use thiserror::Error;

use crate::actors::{Challenge, KeyDistribution, ProtocolMessage, UserCredential};
use crate::field::FieldElement;
use crate::hash::HashSuite;
use crate::math::{
    compute_auth, compute_share, recover_key, AuthTag, ChallengeVector, Mask, MathError,
    VariantFlags,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error("VictimNotInGroup: {0:?}")]
    VictimNotInGroup(String),
    #[error("malicious member {0:?} is not in the group")]
    MaliciousNotInGroup(String),
    #[error("malicious member and victim are both {0:?}")]
    SameMember(String),
    #[error("attacker lacks knowledge: {0}")]
    MissingKnowledge(String),
    #[error(transparent)]
    Math(#[from] MathError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackPlan {
    pub malicious_id: String,
    pub victim_id: String,
    pub forged_key: FieldElement,
}

/// The victim's replacement copy of the broadcast. Only `auth` and the
/// victim's entry in `masks` differ from the original.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgedBroadcast {
    pub auth_star: AuthTag,
    pub r0: FieldElement,
    pub masks_star: Vec<Mask>,
    pub relayed_challenges: Option<Vec<FieldElement>>,
}

impl ForgedBroadcast {
    pub fn into_key_distribution(self) -> KeyDistribution {
        KeyDistribution {
            auth: self.auth_star,
            r0: self.r0,
            masks: self.masks_star,
            relayed_challenges: self.relayed_challenges,
        }
    }
}

/// The honest step-5 key recovery, run by the insider on its own share.
/// `m_index` is the attacker's 1-based session position.
pub fn insider_recover_key(
    suite: &HashSuite,
    x_m: &FieldElement,
    m_index: usize,
    r: &ChallengeVector,
    u_m: &Mask,
    flags: VariantFlags,
) -> Result<FieldElement, MathError> {
    let share = compute_share(suite, x_m, r.member(m_index), r, flags)?;
    Ok(recover_key(u_m, &share))
}

/// `u*_v = u_v - S + S*`.
pub fn forge_mask(u_v: &Mask, key: &FieldElement, forged_key: &FieldElement) -> Mask {
    Mask(&(&u_v.0 - key) + forged_key)
}

pub fn forge_broadcast(
    suite: &HashSuite,
    original: &KeyDistribution,
    key: &FieldElement,
    plan: &AttackPlan,
    ids: &[String],
    r: &ChallengeVector,
) -> Result<ForgedBroadcast, AttackError> {
    let v = ids
        .iter()
        .position(|id| *id == plan.victim_id)
        .ok_or_else(|| AttackError::VictimNotInGroup(plan.victim_id.clone()))?;
    let mut masks_star = original.masks.clone();
    let victim_mask = masks_star
        .get_mut(v)
        .ok_or_else(|| AttackError::VictimNotInGroup(plan.victim_id.clone()))?;
    *victim_mask = forge_mask(victim_mask, key, &plan.forged_key);
    let auth_star = compute_auth(suite, &plan.forged_key, ids, r, &masks_star)?;
    Ok(ForgedBroadcast {
        auth_star,
        r0: original.r0.clone(),
        masks_star,
        relayed_challenges: original.relayed_challenges.clone(),
    })
}

/// What the malicious member legitimately knows: its own credential and
/// every message it has sent or seen on the medium.
#[derive(Debug, Clone)]
pub struct AttackerView {
    pub credential: UserCredential,
    pub observed: Vec<ProtocolMessage>,
}

/// Public session values the attacker reconstructs from its view.
#[derive(Debug, Clone)]
pub struct InsiderKnowledge {
    pub ids: Vec<String>,
    /// 1-based position of the attacker.
    pub position: usize,
    pub r: ChallengeVector,
}

impl AttackerView {
    /// Assembles `ids`, the attacker's position and `r` from observed
    /// messages plus the intercepted broadcast (which supplies `r_0` and,
    /// when the KGC relays them, the member challenges).
    pub fn knowledge(
        &self,
        intercepted: &KeyDistribution,
    ) -> Result<InsiderKnowledge, AttackError> {
        let ids = self
            .observed
            .iter()
            .find_map(|m| match m {
                ProtocolMessage::IdentifierBroadcast { member_ids } => Some(member_ids.clone()),
                _ => None,
            })
            .ok_or_else(|| AttackError::MissingKnowledge("identifier broadcast".into()))?;
        let me = &self.credential.id;
        let position = ids
            .iter()
            .position(|id| id == me)
            .ok_or_else(|| AttackError::MaliciousNotInGroup(me.clone()))?
            + 1;
        let challenges: Vec<FieldElement> = match &intercepted.relayed_challenges {
            Some(list) if list.len() == ids.len() => list.clone(),
            _ => ids
                .iter()
                .map(|id| {
                    self.observed
                        .iter()
                        .find_map(|m| match m {
                            ProtocolMessage::Challenge(Challenge { sender_id, r })
                                if sender_id == id =>
                            {
                                Some(r.clone())
                            }
                            _ => None,
                        })
                        .ok_or_else(|| AttackError::MissingKnowledge(format!("challenge of {id}")))
                })
                .collect::<Result<_, _>>()?,
        };
        Ok(InsiderKnowledge {
            ids,
            position,
            r: ChallengeVector::new(intercepted.r0.clone(), challenges),
        })
    }
}

/// Result of running the full insider attack on one intercepted broadcast.
#[derive(Debug, Clone)]
pub struct InsiderForgery {
    pub recovered_key: FieldElement,
    pub forged_key: FieldElement,
    pub broadcast: ForgedBroadcast,
}

/// Recovers `S` from the view and forges the victim's copy. `choose_key`
/// picks `S*` given the recovered `S`.
pub fn insider_forge(
    suite: &HashSuite,
    flags: VariantFlags,
    view: &AttackerView,
    intercepted: &KeyDistribution,
    victim_id: &str,
    choose_key: impl FnOnce(&FieldElement) -> FieldElement,
) -> Result<InsiderForgery, AttackError> {
    if victim_id == view.credential.id {
        return Err(AttackError::SameMember(victim_id.to_string()));
    }
    let k = view.knowledge(intercepted)?;
    let u_m = intercepted
        .masks
        .get(k.position - 1)
        .ok_or_else(|| AttackError::MissingKnowledge("own mask".into()))?;
    let recovered_key =
        insider_recover_key(suite, &view.credential.x, k.position, &k.r, u_m, flags)?;
    let forged_key = choose_key(&recovered_key);
    let plan = AttackPlan {
        malicious_id: view.credential.id.clone(),
        victim_id: victim_id.to_string(),
        forged_key: forged_key.clone(),
    };
    let broadcast = forge_broadcast(suite, intercepted, &recovered_key, &plan, &k.ids, &k.r)?;
    Ok(InsiderForgery {
        recovered_key,
        forged_key,
        broadcast,
    })
}

/// Draws a uniform key different from `key`.
pub fn random_other_key<R: RngCore + ?Sized>(key: &FieldElement, rng: &mut R) -> FieldElement {
    loop {
        let k = key.field().sample(rng);
        if k != *key {
            return k;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TamperedField {
    Auth,
    R0,
    Mask(usize),
}

/// Replaces one uniformly chosen field among `auth`, `r0` and the `t`
/// masks with a fresh uniform value different from the original.
pub fn random_tamper<R: RngCore + ?Sized>(
    original: &KeyDistribution,
    rng: &mut R,
) -> (KeyDistribution, TamperedField) {
    let slots = original.masks.len() as u64 + 2;
    let slot = uniform_below(rng, slots);
    let mut out = original.clone();
    let which = match slot {
        0 => {
            out.auth = AuthTag(random_other_key(&original.auth.0, rng));
            TamperedField::Auth
        }
        1 => {
            out.r0 = random_other_key(&original.r0, rng);
            TamperedField::R0
        }
        n => {
            let i = (n - 2) as usize;
            out.masks[i] = Mask(random_other_key(&original.masks[i].0, rng));
            TamperedField::Mask(i)
        }
    };
    (out, which)
}

fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, n: u64) -> u64 {
    let zone = u64::MAX - u64::MAX % n;
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldParams;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn fe(v: u32) -> FieldElement {
        FieldParams::p23().element(v)
    }

    #[test]
    fn forge_mask_examples() {
        let u = Mask(fe(6));
        assert_eq!(forge_mask(&u, &fe(10), &fe(10)), u);
        assert_eq!(forge_mask(&u, &fe(10), &fe(11)), Mask(fe(7)));
        for s_v in 0..23 {
            let s = fe(s_v);
            let key = fe(10);
            let u_v = Mask(&key - &s);
            for star in 0..23 {
                let forged = forge_mask(&u_v, &key, &fe(star));
                assert_eq!(&forged.0 + &s, fe(star));
            }
        }
    }

    fn sample_kd(t: usize, seed: u64) -> KeyDistribution {
        let f = FieldParams::modp2048();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        KeyDistribution {
            auth: AuthTag(f.sample(&mut rng)),
            r0: f.sample(&mut rng),
            masks: (0..t).map(|_| Mask(f.sample(&mut rng))).collect(),
            relayed_challenges: None,
        }
    }

    #[test]
    fn random_tamper_changes_exactly_one_field() {
        let kd = sample_kd(3, 1);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut seen = [0usize; 5];
        for _ in 0..500 {
            let (out, which) = random_tamper(&kd, &mut rng);
            let mut diffs = 0;
            diffs += usize::from(out.auth != kd.auth);
            diffs += usize::from(out.r0 != kd.r0);
            for i in 0..3 {
                diffs += usize::from(out.masks[i] != kd.masks[i]);
            }
            assert_eq!(diffs, 1);
            let slot = match which {
                TamperedField::Auth => {
                    assert_ne!(out.auth, kd.auth);
                    0
                }
                TamperedField::R0 => {
                    assert_ne!(out.r0, kd.r0);
                    1
                }
                TamperedField::Mask(i) => {
                    assert_ne!(out.masks[i], kd.masks[i]);
                    i + 2
                }
            };
            seen[slot] += 1;
        }
        assert!(seen.iter().all(|&c| c > 50), "{seen:?}");
    }

    #[test]
    fn random_tamper_works_in_tiny_field() {
        let f = FieldParams::p23();
        let kd = KeyDistribution {
            auth: AuthTag(f.element(4u32)),
            r0: f.element(0u32),
            masks: vec![Mask(f.element(22u32)), Mask(f.element(1u32))],
            relayed_challenges: None,
        };
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (out, _) = random_tamper(&kd, &mut rng);
            assert_ne!(out, kd);
        }
    }

    #[test]
    fn victim_must_be_in_group() {
        let kd = sample_kd(2, 5);
        let f = FieldParams::modp2048();
        let plan = AttackPlan {
            malicious_id: "A".into(),
            victim_id: "Z".into(),
            forged_key: f.one(),
        };
        let r = ChallengeVector::from_vec(vec![f.one(), f.one(), f.one()]);
        let ids = vec!["A".to_string(), "B".to_string()];
        assert_eq!(
            forge_broadcast(
                &HashSuite::standard(f.clone()),
                &kd,
                &f.zero(),
                &plan,
                &ids,
                &r
            )
            .unwrap_err(),
            AttackError::VictimNotInGroup("Z".into())
        );
    }

    #[test]
    fn fixed_point_forgery_is_identity() {
        let f = FieldParams::modp2048();
        let suite = HashSuite::standard(f.clone());
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let ids = vec!["A".to_string(), "B".to_string()];
        let key = f.sample(&mut rng);
        let r = ChallengeVector::from_vec((0..3).map(|_| f.sample(&mut rng)).collect());
        let masks: Vec<Mask> = (0..2).map(|_| Mask(f.sample(&mut rng))).collect();
        let auth = compute_auth(&suite, &key, &ids, &r, &masks).unwrap();
        let kd = KeyDistribution {
            auth,
            r0: r.r0().clone(),
            masks,
            relayed_challenges: None,
        };
        let plan = AttackPlan {
            malicious_id: "A".into(),
            victim_id: "B".into(),
            forged_key: key.clone(),
        };
        let forged = forge_broadcast(&suite, &kd, &key, &plan, &ids, &r).unwrap();
        assert_eq!(forged.into_key_distribution(), kd);
    }

    #[test]
    fn random_other_key_differs() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for v in 0..23 {
            for _ in 0..20 {
                assert_ne!(random_other_key(&fe(v), &mut rng), fe(v));
            }
        }
    }
}
