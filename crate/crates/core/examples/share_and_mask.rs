//! One member's share, mask and the Auth tag, computed by hand at p = 23.

use gkt::field::FieldParams;
use gkt::hash::{HashSuite, SuiteName};
use gkt::math::{
    compute_auth, compute_mask, compute_share, evaluation_point, recover_key, verify_auth,
    ChallengeVector, VariantFlags,
};

fn main() {
    let f = FieldParams::p23();
    let suite = HashSuite::new(SuiteName::Toy, f.clone(), false).unwrap();
    let flags = VariantFlags::default();
    let ids = vec!["A".to_string(), "B".to_string()];
    let xs = [f.element(3u32), f.element(11u32)];
    let r = ChallengeVector::new(f.element(4u32), vec![f.element(6u32), f.element(9u32)]);
    let key = f.element(17u32);

    let mut masks = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        let e = evaluation_point(&suite, x, r.member(i + 1), r.r0(), flags);
        let s = compute_share(&suite, x, r.member(i + 1), &r, flags).unwrap();
        let u = compute_mask(&key, &s);
        println!("{}: point {e}, share {}, mask {}", ids[i], s.0, u.0);
        assert_eq!(recover_key(&u, &s), key);
        masks.push(u);
    }
    let tag = compute_auth(&suite, &key, &ids, &r, &masks).unwrap();
    println!("auth = {}", tag.0);
    println!(
        "auth verifies: {}",
        verify_auth(&suite, &tag, &key, &ids, &r, &masks).unwrap()
    );
}
