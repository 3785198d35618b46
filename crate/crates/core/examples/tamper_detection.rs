//! Random single-field tampering of the broadcast is caught by the Auth check.

use gkt::actors::Outcome;
use gkt::config::SessionConfig;
use gkt::hash::SuiteName;
use gkt::netsim::{run_session, AdversaryScript};

fn main() {
    let mut rejected = 0;
    let trials = 20;
    for seed in 0..trials {
        let cfg = SessionConfig::new("modp2048", SuiteName::Standard, &["A", "B", "C"], seed);
        let script = AdversaryScript::RandomTamper { victim: "B".into() };
        let t = run_session(&cfg, &script).expect("session runs");
        if matches!(t.outcome_of("B"), Some(Outcome::Rejected(_))) {
            rejected += 1;
        }
    }
    println!("victim rejected {rejected}/{trials} tampered broadcasts");
}
