//! The forgery step driven directly on actors, without the network simulator.

use gkt::actors::{initiator_request, Challenge, Kgc, Member, ProtocolMessage, Registry};
use gkt::attacks::{insider_forge, random_other_key, AttackerView};
use gkt::config::SessionConfig;
use gkt::hash::SuiteName;
use gkt::rng;

fn main() {
    let cfg = SessionConfig::new("modp2048", SuiteName::Standard, &["A", "B", "C", "D"], 3)
        .resolve()
        .unwrap();
    let registry = Registry::for_session(&cfg);
    let mut kgc = Kgc::new(
        cfg.suite.clone(),
        cfg.flags,
        registry.clone(),
        rng::kgc_stream(cfg.seed),
    );
    let mut members: Vec<Member> = cfg
        .members
        .iter()
        .map(|id| {
            Member::new(
                registry.credential(id).unwrap(),
                cfg.suite.clone(),
                cfg.flags,
                rng::member_stream(cfg.seed, id),
            )
        })
        .collect();

    let request = initiator_request(&registry, "A", &cfg.members).unwrap();
    let ids_msg = kgc.on_request(&request).unwrap();
    let ProtocolMessage::IdentifierBroadcast { member_ids } = &ids_msg else {
        unreachable!()
    };
    let challenges: Vec<Challenge> = members
        .iter_mut()
        .map(|m| m.on_identifier_broadcast(member_ids).unwrap().unwrap())
        .collect();
    let ProtocolMessage::KeyDistribution(kd) = kgc.on_challenges(&challenges).unwrap() else {
        unreachable!()
    };

    // A sees the identifiers and every challenge, holds x_A, and intercepts D's copy.
    let mut observed = vec![ids_msg.clone()];
    observed.extend(challenges.iter().cloned().map(ProtocolMessage::Challenge));
    let view = AttackerView {
        credential: registry.credential("A").unwrap(),
        observed,
    };
    let mut adv = rng::adversary_stream(cfg.seed);
    let forgery = insider_forge(&cfg.suite, cfg.flags, &view, &kd, "D", |s| {
        random_other_key(s, &mut adv)
    })
    .unwrap();
    assert_eq!(&forgery.recovered_key, kgc.group_key().unwrap());
    let forged = forgery.broadcast.into_key_distribution();

    for (m, c) in members.iter_mut().zip(&challenges) {
        for other in &challenges {
            if other.sender_id != c.sender_id {
                m.observe_challenge(other);
            }
        }
        let copy = if m.id() == "D" { &forged } else { &kd };
        let out = m.on_key_distribution(copy).unwrap();
        let key = out.accepted_key().map(|k| k.to_hex()[..16].to_string());
        let real = out.accepted_key() == kgc.group_key();
        println!("{} accepted {key:?}, holds the kgc key: {real}", m.id());
    }
}
