//! A malicious member makes another member accept a key of its choosing.

use gkt::config::SessionConfig;
use gkt::hash::SuiteName;
use gkt::netsim::{run_session, AdversaryScript, ForgedKeyChoice};

fn main() {
    let cfg = SessionConfig::new(
        "modp2048",
        SuiteName::Standard,
        &["alice", "bob", "carol"],
        9,
    );
    let script = AdversaryScript::InsiderForge {
        malicious: "alice".into(),
        victim: "carol".into(),
        forged_key: ForgedKeyChoice::Random,
    };
    let t = run_session(&cfg, &script).expect("session runs");
    let short = |h: String| h[..16].to_string();

    println!("kgc key      {}...", short(t.kgc_key.to_hex()));
    println!(
        "forged key   {}...",
        short(t.session.adversary.forged_key_used.clone().unwrap())
    );
    for o in &t.outcomes {
        let key = o.outcome.accepted_key().map(|k| short(k.to_hex()));
        println!("{:<6} accepted {:?}", o.member, key);
    }
    println!("tampered deliveries: {}", t.tampered_count());
}
