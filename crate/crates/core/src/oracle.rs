//! Straight-line recomputation of a tiny-field toy-suite session.
//!
//! This is a second, independent implementation of the KGC's step 4 and the
//! members' step 5 in plain `u64` arithmetic. It shares nothing with
//! [`crate::math`] or [`crate::hash`]; the only common code is field
//! element decoding and the seeded registration streams used to re-derive
//! the long-term secrets.

use std::fmt;

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::actors::{Outcome, ProtocolMessage};
use crate::config::KGC_ID;
use crate::field::{FieldElement, FieldParams};
use crate::hash::SuiteName;
use crate::netsim::Transcript;
use crate::rng;

/// Largest modulus the oracle handles, in bits.
pub const ORACLE_MAX_BITS: u64 = 16;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle needs the toy suite and a prime of at most {ORACLE_MAX_BITS} bits: {0}")]
    Unsupported(String),
    #[error("transcript lacks {0}")]
    Incomplete(String),
}

/// Values recomputed by the oracle, in session order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub members: Vec<String>,
    pub shares: Vec<FieldElement>,
    pub masks: Vec<FieldElement>,
    /// Key each member recovers from the mask it actually received.
    pub keys: Vec<Option<FieldElement>>,
    pub tag: FieldElement,
    pub mismatches: Vec<String>,
}

impl OracleReport {
    pub fn matches(&self) -> bool {
        self.mismatches.is_empty()
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, id) in self.members.iter().enumerate() {
            writeln!(
                f,
                "{id}: share {} mask {}",
                self.shares[i].to_hex(),
                self.masks[i].to_hex()
            )?;
        }
        writeln!(f, "auth {}", self.tag.to_hex())?;
        if self.mismatches.is_empty() {
            writeln!(f, "oracle: identical")
        } else {
            for m in &self.mismatches {
                writeln!(f, "mismatch: {m}")?;
            }
            writeln!(f, "oracle: {} mismatches", self.mismatches.len())
        }
    }
}

fn byte_sum(v: u64) -> u64 {
    v.to_be_bytes().iter().map(|&b| u64::from(b)).sum()
}

fn small(e: &FieldElement) -> u64 {
    e.value().to_u64().expect("oracle fields fit in u64")
}

pub fn recompute(t: &Transcript) -> Result<OracleReport, OracleError> {
    let s = &t.session;
    if s.suite != SuiteName::Toy {
        return Err(OracleError::Unsupported(format!("suite is {}", s.suite)));
    }
    let field = FieldParams::from_name_or_hex(&s.prime, true)
        .map_err(|e| OracleError::Unsupported(e.to_string()))?;
    if field.bits() > ORACLE_MAX_BITS {
        return Err(OracleError::Unsupported(format!(
            "prime has {} bits",
            field.bits()
        )));
    }
    let p = field.modulus().to_u64().expect("checked bit length");
    let ids = &s.members;
    let t_size = ids.len();

    let xs: Vec<u64> = ids
        .iter()
        .map(|id| small(&field.sample(&mut rng::registry_stream(s.seed, id))))
        .collect();
    let rs: Vec<u64> = ids
        .iter()
        .map(|id| {
            t.events
                .iter()
                .find_map(|e| match &e.message {
                    ProtocolMessage::Challenge(c)
                        if e.round == 3 && e.to == KGC_ID && c.sender_id == *id =>
                    {
                        Some(small(&c.r))
                    }
                    _ => None,
                })
                .ok_or_else(|| OracleError::Incomplete(format!("challenge of {id}")))
        })
        .collect::<Result<_, _>>()?;
    let distributions: Vec<(&str, _)> = t
        .events
        .iter()
        .filter_map(|e| match &e.message {
            ProtocolMessage::KeyDistribution(kd) if e.round == 4 => Some((e.to.as_str(), kd)),
            _ => None,
        })
        .collect();
    let r0 = distributions
        .first()
        .map(|(_, kd)| small(&kd.r0))
        .ok_or_else(|| OracleError::Incomplete("key distribution".into()))?;
    let key = small(&t.kgc_key);

    let mut shares = Vec::with_capacity(t_size);
    let mut masks = Vec::with_capacity(t_size);
    for i in 0..t_size {
        let h1 = (1 + byte_sum(xs[i]) + byte_sum(rs[i]) + byte_sum(r0)) % p;
        let e = if s.h1_only { h1 } else { (xs[i] + h1) % p };
        let mut share = r0 % p;
        let mut power = 1u64;
        for r in &rs {
            power = power * e % p;
            share = (share + power * r) % p;
        }
        shares.push(share);
        masks.push((key + p - share) % p);
    }
    let mut tag_sum = 2 + byte_sum(key) + byte_sum(r0);
    for id in ids {
        let len = id.len() as u64;
        tag_sum += (len >> 8) + (len & 0xff);
        tag_sum += id.bytes().map(u64::from).sum::<u64>();
    }
    tag_sum += rs.iter().map(|&r| byte_sum(r)).sum::<u64>();
    tag_sum += masks.iter().map(|&u| byte_sum(u)).sum::<u64>();
    let tag = tag_sum % p;

    let mut mismatches = Vec::new();
    for (to, kd) in &distributions {
        if small(&kd.r0) != r0 {
            mismatches.push(format!("r0 sent to {to}"));
        }
        if small(&kd.auth.0) != tag {
            mismatches.push(format!("auth sent to {to}"));
        }
        let got: Vec<u64> = kd.masks.iter().map(|m| small(&m.0)).collect();
        if got != masks {
            mismatches.push(format!("masks sent to {to}"));
        }
        if let Some(relayed) = &kd.relayed_challenges {
            if relayed.iter().map(small).collect::<Vec<_>>() != rs {
                mismatches.push(format!("relayed challenges sent to {to}"));
            }
        }
    }
    if distributions.len() != t_size {
        mismatches.push(format!(
            "{} key distributions for {t_size} members",
            distributions.len()
        ));
    }

    let mut keys = Vec::with_capacity(t_size);
    for (i, id) in ids.iter().enumerate() {
        let received = distributions
            .iter()
            .find(|(to, _)| to == id)
            .and_then(|(_, kd)| kd.masks.get(i))
            .map(|u| (small(&u.0) + shares[i]) % p);
        match (t.outcome_of(id), received) {
            (Some(Outcome::AcceptedKey(k)), Some(recovered)) => {
                if small(k) != recovered || recovered != key {
                    mismatches.push(format!("key accepted by {id}"));
                }
            }
            (other, _) => mismatches.push(format!("outcome of {id}: {other:?}")),
        }
        keys.push(received.map(|k| field.element(k)));
    }

    Ok(OracleReport {
        members: ids.clone(),
        shares: shares.into_iter().map(|v| field.element(v)).collect(),
        masks: masks.into_iter().map(|v| field.element(v)).collect(),
        keys,
        tag: field.element(tag),
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SessionConfig;
    use crate::math::Mask;
    use crate::netsim::{run_session, AdversaryScript};

    fn honest(seed: u64) -> Transcript {
        let cfg = SessionConfig::new("p23", SuiteName::Toy, &["A", "B", "C"], seed);
        run_session(&cfg, &AdversaryScript::None).unwrap()
    }

    #[test]
    fn byte_sum_matches_encoding() {
        let f = FieldParams::new(65537u32.into(), false).unwrap();
        for v in [0u64, 1, 255, 256, 65536] {
            let enc = f.element(v).encode();
            assert_eq!(byte_sum(v), enc.iter().map(|&b| u64::from(b)).sum::<u64>());
        }
    }

    #[test]
    fn honest_sessions_match() {
        for seed in 0..20 {
            let r = recompute(&honest(seed)).unwrap();
            assert!(r.matches(), "{r}");
        }
    }

    #[test]
    fn altered_mask_is_caught() {
        let mut t = honest(1);
        for e in t.events.iter_mut() {
            if let ProtocolMessage::KeyDistribution(kd) = &mut e.message {
                let u = &kd.masks[0].0 + &kd.masks[0].0.field().one();
                kd.masks[0] = Mask(u);
                break;
            }
        }
        let r = recompute(&t).unwrap();
        assert!(!r.matches());
        assert!(r.to_string().contains("mismatch: masks sent to A"));
    }

    #[test]
    fn guards() {
        let cfg = SessionConfig::new("modp2048", SuiteName::Standard, &["A", "B"], 1);
        let t = run_session(&cfg, &AdversaryScript::None).unwrap();
        assert!(matches!(recompute(&t), Err(OracleError::Unsupported(_))));
        let mut cfg = SessionConfig::new("modp2048", SuiteName::Toy, &["A", "B"], 1);
        cfg.insecure_ok = true;
        let t = run_session(&cfg, &AdversaryScript::None).unwrap();
        assert!(matches!(recompute(&t), Err(OracleError::Unsupported(_))));
        let cfg = SessionConfig::new("p23", SuiteName::Standard, &["A", "B"], 1);
        let t = run_session(&cfg, &AdversaryScript::None).unwrap();
        assert!(matches!(recompute(&t), Err(OracleError::Unsupported(_))));
    }
}
