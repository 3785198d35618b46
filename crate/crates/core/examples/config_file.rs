//! Load a session from TOML and run it.

use gkt::config::SessionConfig;
use gkt::netsim::{run_session, AdversaryScript};

const CONFIG: &str = r#"
prime = "p23"
suite = "toy"
members = ["zed", "amy", "kim"]
seed = 2024
relay_challenges = true
"#;

fn main() {
    let cfg = SessionConfig::from_toml(CONFIG).expect("valid config");
    let resolved = cfg.resolve().unwrap();
    println!("session order: {:?}", resolved.members);
    println!("initiator: {}", resolved.initiator);
    let t = run_session(&cfg, &AdversaryScript::None).unwrap();
    println!("kgc key {}", t.kgc_key);
    for o in &t.outcomes {
        println!("{}: {}", o.member, o.outcome);
    }
}
