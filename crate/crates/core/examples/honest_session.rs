//! A full honest session over the 2048-bit group with five members.

use gkt::actors::Outcome;
use gkt::config::{numbered_members, SessionConfig};
use gkt::hash::SuiteName;
use gkt::netsim::{run_session, AdversaryScript};

fn main() {
    let members = numbered_members(5);
    let ids: Vec<&str> = members.iter().map(String::as_str).collect();
    let cfg = SessionConfig::new("modp2048", SuiteName::Standard, &ids, 42);
    let t = run_session(&cfg, &AdversaryScript::None).expect("session runs");

    for e in &t.events {
        println!(
            "round {} {:>20} {} -> {}",
            e.round,
            e.message.kind(),
            e.from,
            e.to
        );
    }
    for o in &t.outcomes {
        let agrees = o.outcome == Outcome::AcceptedKey(t.kgc_key.clone());
        println!("{}: agrees with kgc: {agrees}", o.member);
    }
}
