//! Cross-check toy sessions against the straight-line u64 oracle.

use gkt::config::SessionConfig;
use gkt::hash::SuiteName;
use gkt::netsim::{run_session, AdversaryScript};
use gkt::oracle::recompute;

fn main() {
    let cfg = SessionConfig::new("p23", SuiteName::Toy, &["A", "B"], 1);
    let t = run_session(&cfg, &AdversaryScript::None).unwrap();
    print!("{}", recompute(&t).unwrap());

    let mut identical = 0;
    for seed in 0..50 {
        let cfg = SessionConfig::new("p23", SuiteName::Toy, &["A", "B", "C"], seed);
        let t = run_session(&cfg, &AdversaryScript::None).unwrap();
        identical += usize::from(recompute(&t).unwrap().matches());
    }
    println!("{identical}/50 sessions identical under the oracle");
}
