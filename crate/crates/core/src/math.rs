//! Protocol algebra shared by the KGC, the members and the attacker.
//!
//! For member `i` of a group of `t`, with long-term secret `x`, own challenge
//! `r_i` and challenge tuple `r = (r_0, r_1, ..., r_t)`:
//!
//! ```text
//! e    = x + h1(x || r_i || r_0)          (or h1(...) alone, h1-only variant)
//! s    = <(1, e, e^2, ..., e^t), r>
//! u    = S - s
//! Auth = h2(S || ID_1 || ... || ID_t || r_0 || ... || r_t || u_1 || ... || u_t)
//! ```
//!
//! Field elements are concatenated in their fixed-width encoding. Each
//! identifier is written as a 2-byte big-endian length followed by its UTF-8
//! bytes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::FieldElement;
use crate::hash::HashSuite;

/// Largest supported group size (and so Vandermonde degree).
pub const MAX_GROUP_SIZE: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MathError {
    #[error("Vandermonde degree {0} is below 2")]
    DegreeTooSmall(usize),
    #[error("Vandermonde degree {0} exceeds {MAX_GROUP_SIZE}")]
    DegreeTooLarge(usize),
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("inner product of empty vectors")]
    Empty,
    #[error("identifier {0:?} is longer than 65535 bytes")]
    IdTooLong(String),
}

/// Protocol variants. Both off is the protocol as published.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariantFlags {
    /// The KGC repeats `r_1..r_t` in its final broadcast instead of members
    /// overhearing each other's challenges.
    pub kgc_relays_challenges: bool,
    /// The evaluation point is `h1(x || r_i || r_0)` without adding `x`.
    pub h1_only_evaluation_point: bool,
}

/// `(r_0, r_1, ..., r_t)`; index 0 is the KGC's value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeVector(Vec<FieldElement>);

impl ChallengeVector {
    pub fn new(r0: FieldElement, member_challenges: Vec<FieldElement>) -> Self {
        let mut v = Vec::with_capacity(member_challenges.len() + 1);
        v.push(r0);
        v.extend(member_challenges);
        ChallengeVector(v)
    }

    pub fn from_vec(all: Vec<FieldElement>) -> Self {
        ChallengeVector(all)
    }

    pub fn r0(&self) -> &FieldElement {
        &self.0[0]
    }

    /// Challenge of the member at 1-based position `i`.
    pub fn member(&self, i: usize) -> &FieldElement {
        &self.0[i]
    }

    /// Group size `t`.
    pub fn t(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn as_slice(&self) -> &[FieldElement] {
        &self.0
    }
}

/// Member-specific secret share `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Share(pub FieldElement);

/// Public masked key `u = S - s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask(pub FieldElement);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthTag(pub FieldElement);

/// `(1, x, x^2, ..., x^m)`.
pub fn vandermonde_vector(x: &FieldElement, m: usize) -> Result<Vec<FieldElement>, MathError> {
    if m < 2 {
        return Err(MathError::DegreeTooSmall(m));
    }
    if m > MAX_GROUP_SIZE {
        return Err(MathError::DegreeTooLarge(m));
    }
    let mut out = Vec::with_capacity(m + 1);
    let mut acc = x.field().one();
    for _ in 0..=m {
        let next = &acc * x;
        out.push(acc);
        acc = next;
    }
    Ok(out)
}

pub fn inner_product(a: &[FieldElement], b: &[FieldElement]) -> Result<FieldElement, MathError> {
    if a.len() != b.len() {
        return Err(MathError::LengthMismatch {
            what: "inner product operand",
            expected: a.len(),
            got: b.len(),
        });
    }
    let (first_a, first_b) = match (a.first(), b.first()) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(MathError::Empty),
    };
    let mut acc = first_a * first_b;
    for (x, y) in a.iter().zip(b).skip(1) {
        acc = &acc + &(x * y);
    }
    Ok(acc)
}

/// `x + h1(x || r_i || r_0)`, or just the hash under the h1-only variant.
pub fn evaluation_point(
    suite: &HashSuite,
    x: &FieldElement,
    r_i: &FieldElement,
    r_0: &FieldElement,
    flags: VariantFlags,
) -> FieldElement {
    let mut msg = x.encode();
    msg.extend(r_i.encode());
    msg.extend(r_0.encode());
    let h = suite.h1(&msg);
    if flags.h1_only_evaluation_point {
        h
    } else {
        x + &h
    }
}

/// `s = <v_t(evaluation_point), r>` with `t = r.t()`.
pub fn compute_share(
    suite: &HashSuite,
    x: &FieldElement,
    r_i: &FieldElement,
    r: &ChallengeVector,
    flags: VariantFlags,
) -> Result<Share, MathError> {
    let point = evaluation_point(suite, x, r_i, r.r0(), flags);
    let v = vandermonde_vector(&point, r.t())?;
    Ok(Share(inner_product(&v, r.as_slice())?))
}

pub fn compute_mask(key: &FieldElement, share: &Share) -> Mask {
    Mask(key - &share.0)
}

pub fn recover_key(mask: &Mask, share: &Share) -> FieldElement {
    &mask.0 + &share.0
}

/// The exact byte string hashed into the Auth tag.
pub fn auth_input(
    key: &FieldElement,
    ids: &[String],
    r: &ChallengeVector,
    masks: &[Mask],
) -> Result<Vec<u8>, MathError> {
    let t = ids.len();
    if masks.len() != t {
        return Err(MathError::LengthMismatch {
            what: "masks",
            expected: t,
            got: masks.len(),
        });
    }
    if r.as_slice().len() != t + 1 {
        return Err(MathError::LengthMismatch {
            what: "challenge vector",
            expected: t + 1,
            got: r.as_slice().len(),
        });
    }
    let mut out = key.encode();
    for id in ids {
        let len = u16::try_from(id.len()).map_err(|_| MathError::IdTooLong(id.clone()))?;
        out.extend(len.to_be_bytes());
        out.extend(id.as_bytes());
    }
    for c in r.as_slice() {
        out.extend(c.encode());
    }
    for u in masks {
        out.extend(u.0.encode());
    }
    Ok(out)
}

pub fn compute_auth(
    suite: &HashSuite,
    key: &FieldElement,
    ids: &[String],
    r: &ChallengeVector,
    masks: &[Mask],
) -> Result<AuthTag, MathError> {
    Ok(AuthTag(suite.h2(&auth_input(key, ids, r, masks)?)))
}

pub fn verify_auth(
    suite: &HashSuite,
    tag: &AuthTag,
    key: &FieldElement,
    ids: &[String],
    r: &ChallengeVector,
    masks: &[Mask],
) -> Result<bool, MathError> {
    Ok(compute_auth(suite, key, ids, r, masks)? == *tag)
}
