//! Session configuration.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, FieldParams};
use crate::hash::{HashError, HashSuite, SuiteName};
use crate::math::{VariantFlags, MAX_GROUP_SIZE};

/// Actor name reserved for the key generation centre.
pub const KGC_ID: &str = "kgc";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error("GroupTooSmall: a group needs at least 2 members, got {0}")]
    GroupTooSmall(usize),
    #[error("group of {0} members exceeds the limit of {MAX_GROUP_SIZE}")]
    GroupTooLarge(usize),
    #[error("DuplicateId: {0:?} listed twice")]
    DuplicateId(String),
    #[error("invalid identifier {0:?}: must be non-empty, at most 65535 bytes, and not \"kgc\"")]
    BadId(String),
    #[error("could not parse config: {0}")]
    Parse(String),
}

/// Everything needed to run one session, as read from a config file or
/// assembled from command-line flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    /// `"p23"`, `"modp2048"`, or a hex modulus.
    #[serde(default = "default_prime")]
    pub prime: String,
    #[serde(default = "default_suite")]
    pub suite: SuiteName,
    #[serde(default)]
    pub relay_challenges: bool,
    #[serde(default)]
    pub h1_only: bool,
    pub members: Vec<String>,
    /// Defaults to the first member in canonical order.
    #[serde(default)]
    pub initiator: Option<String>,
    pub seed: u64,
    #[serde(default)]
    pub insecure_ok: bool,
}

fn default_prime() -> String {
    "modp2048".to_string()
}

fn default_suite() -> SuiteName {
    SuiteName::Standard
}

impl SessionConfig {
    pub fn new(prime: &str, suite: SuiteName, members: &[&str], seed: u64) -> Self {
        SessionConfig {
            prime: prime.to_string(),
            suite,
            relay_challenges: false,
            h1_only: false,
            members: members.iter().map(|s| s.to_string()).collect(),
            initiator: None,
            seed,
            insecure_ok: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn with_flags(mut self, flags: VariantFlags) -> Self {
        self.relay_challenges = flags.kgc_relays_challenges;
        self.h1_only = flags.h1_only_evaluation_point;
        self
    }

    pub fn flags(&self) -> VariantFlags {
        VariantFlags {
            kgc_relays_challenges: self.relay_challenges,
            h1_only_evaluation_point: self.h1_only,
        }
    }

    /// Validates the config and resolves its prime and hash suite.
    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        let field = FieldParams::from_name_or_hex(&self.prime, true)?;
        let suite = HashSuite::new(self.suite, field, self.insecure_ok)?;
        let members = canonical_members(&self.members)?;
        let initiator = match &self.initiator {
            Some(id) => {
                check_id(id)?;
                id.clone()
            }
            None => members[0].clone(),
        };
        Ok(ResolvedConfig {
            suite,
            flags: self.flags(),
            members,
            initiator,
            seed: self.seed,
        })
    }
}

/// A validated config. `members` is in canonical (lexicographic) order,
/// which is also the session order `z_1..z_t`.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub suite: HashSuite,
    pub flags: VariantFlags,
    pub members: Vec<String>,
    pub initiator: String,
    pub seed: u64,
}

impl ResolvedConfig {
    pub fn field(&self) -> &FieldParams {
        self.suite.field()
    }

    /// Every registered user: the members plus an outside initiator.
    pub fn users(&self) -> Vec<String> {
        let mut users = self.members.clone();
        if !users.contains(&self.initiator) {
            users.push(self.initiator.clone());
        }
        users
    }
}

fn check_id(id: &str) -> Result<(), ConfigError> {
    if id.is_empty() || id.len() > u16::MAX as usize || id == KGC_ID {
        return Err(ConfigError::BadId(id.to_string()));
    }
    Ok(())
}

/// Sorts and validates a member list.
pub fn canonical_members(ids: &[String]) -> Result<Vec<String>, ConfigError> {
    if ids.len() < 2 {
        return Err(ConfigError::GroupTooSmall(ids.len()));
    }
    if ids.len() > MAX_GROUP_SIZE {
        return Err(ConfigError::GroupTooLarge(ids.len()));
    }
    let mut seen = BTreeSet::new();
    for id in ids {
        check_id(id)?;
        if !seen.insert(id.clone()) {
            return Err(ConfigError::DuplicateId(id.clone()));
        }
    }
    Ok(seen.into_iter().collect())
}

/// `n` generated member names `U01..Un`, zero-padded so lexicographic and
/// numeric order agree.
pub fn numbered_members(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(2);
    (1..=n).map(|i| format!("U{i:0width$}")).collect()
}
