//! Serialise a transcript, read it back and look for forgery witnesses.

use gkt::config::SessionConfig;
use gkt::hash::SuiteName;
use gkt::netsim::{run_session, verify_transcript, AdversaryScript, ForgedKeyChoice, Transcript};

fn main() {
    let cfg = SessionConfig::new("p23", SuiteName::Toy, &["A", "B", "C"], 11);
    let script = AdversaryScript::InsiderForge {
        malicious: "A".into(),
        victim: "C".into(),
        forged_key: ForgedKeyChoice::Random,
    };
    let json = run_session(&cfg, &script).unwrap().to_json();
    println!("{} bytes of transcript JSON", json.len());

    let t = Transcript::from_json(&json).expect("parses");
    assert_eq!(t.to_json(), json);
    let report = verify_transcript(&t).expect("well formed");
    print!("{report}");
}
