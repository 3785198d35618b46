//! The two agreed hash functions `h1`, `h2` into the field.
//!
//! `standard` expands the input with SHA-256 in counter mode to
//! `bitlen(p) + 128` bits and reduces mod p:
//!
//! ```text
//! block_c = SHA-256(tag || c as u32 big-endian || msg)      c = 0, 1, ...
//! h(msg)  = int_be(first ceil((bitlen(p) + 128) / 8) bytes of block_0 || block_1 || ...) mod p
//! ```
//!
//! `toy` is `(sum of msg bytes + tag) mod p`. It is only useful for hand
//! checks in tiny fields and is refused above 16-bit moduli unless the
//! caller opts in.
//!
//! `h1` uses tag `0x01`, `h2` uses tag `0x02`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::field::{FieldElement, FieldParams};

pub const H1_TAG: u8 = 0x01;
pub const H2_TAG: u8 = 0x02;

/// Largest modulus, in bits, for which the toy suite is allowed without
/// `insecure_ok`.
pub const TOY_MAX_BITS: u64 = 16;

/// Security margin of the expand-then-reduce construction, in bits.
const EXPANSION_MARGIN_BITS: u64 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Standard,
    Toy,
}

impl SuiteName {
    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Standard => "standard",
            SuiteName::Toy => "toy",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = HashError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(SuiteName::Standard),
            "toy" => Ok(SuiteName::Toy),
            other => Err(HashError::UnknownSuite(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HashError {
    #[error("unknown hash suite {0:?}: expected \"standard\" or \"toy\"")]
    UnknownSuite(String),
    #[error("toy hash suite refused for a {0}-bit prime (limit {TOY_MAX_BITS} bits); pass insecure-ok to override")]
    ToyRefused(u64),
}

/// A hash suite bound to one field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashSuite {
    name: SuiteName,
    field: FieldParams,
}

impl HashSuite {
    pub fn new(name: SuiteName, field: FieldParams, insecure_ok: bool) -> Result<Self, HashError> {
        if name == SuiteName::Toy && field.bits() > TOY_MAX_BITS && !insecure_ok {
            return Err(HashError::ToyRefused(field.bits()));
        }
        Ok(HashSuite { name, field })
    }

    pub fn standard(field: FieldParams) -> Self {
        HashSuite {
            name: SuiteName::Standard,
            field,
        }
    }

    pub fn name(&self) -> SuiteName {
        self.name
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    pub fn h1(&self, msg: &[u8]) -> FieldElement {
        self.hash(H1_TAG, msg)
    }

    pub fn h2(&self, msg: &[u8]) -> FieldElement {
        self.hash(H2_TAG, msg)
    }

    fn hash(&self, tag: u8, msg: &[u8]) -> FieldElement {
        match self.name {
            SuiteName::Toy => {
                let sum = msg
                    .iter()
                    .fold(BigUint::from(tag), |acc, &b| acc + BigUint::from(b));
                self.field.element(sum)
            }
            SuiteName::Standard => {
                let out_len = (self.field.bits() + EXPANSION_MARGIN_BITS).div_ceil(8) as usize;
                let wide = expand(tag, msg, out_len);
                self.field.element(BigUint::from_bytes_be(&wide))
            }
        }
    }
}

fn expand(tag: u8, msg: &[u8], out_len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(out_len + 32);
    let mut counter: u32 = 0;
    while out.len() < out_len {
        let mut h = Sha256::new();
        h.update([tag]);
        h.update(counter.to_be_bytes());
        h.update(msg);
        out.extend_from_slice(&h.finalize());
        counter += 1;
    }
    out.truncate(out_len);
    out
}
