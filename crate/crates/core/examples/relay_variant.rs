//! The KGC relays the challenges and the evaluation point drops the `x +` term.
//! The attack works the same way.

use gkt::config::SessionConfig;
use gkt::hash::SuiteName;
use gkt::math::VariantFlags;
use gkt::netsim::{run_session, AdversaryScript, ForgedKeyChoice};

fn main() {
    let flags = VariantFlags {
        kgc_relays_challenges: true,
        h1_only_evaluation_point: true,
    };
    let cfg =
        SessionConfig::new("modp2048", SuiteName::Standard, &["A", "B", "C"], 5).with_flags(flags);

    let honest = run_session(&cfg, &AdversaryScript::None).unwrap();
    let challenge_recipients: Vec<_> = honest
        .events
        .iter()
        .filter(|e| e.message.kind() == "challenge")
        .map(|e| e.to.as_str())
        .collect();
    println!("challenges delivered to: {challenge_recipients:?}");

    let script = AdversaryScript::InsiderForge {
        malicious: "B".into(),
        victim: "A".into(),
        forged_key: ForgedKeyChoice::Random,
    };
    let attacked = run_session(&cfg, &script).unwrap();
    for o in &attacked.outcomes {
        let genuine = o.outcome.accepted_key() == Some(&attacked.kgc_key);
        println!(
            "{}: {}, genuine key: {genuine}",
            o.member,
            o.outcome.to_string().split(' ').next().unwrap()
        );
    }
}
