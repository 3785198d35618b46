//! The two hash-to-field functions under both suites.

use gkt::field::FieldParams;
use gkt::hash::{HashSuite, SuiteName};

fn main() {
    let big = HashSuite::standard(FieldParams::modp2048());
    let msg = b"hello";
    println!("standard h1(hello) = {}...", &big.h1(msg).to_hex()[..24]);
    println!("standard h2(hello) = {}...", &big.h2(msg).to_hex()[..24]);

    let toy = HashSuite::new(SuiteName::Toy, FieldParams::p23(), false).unwrap();
    println!("toy h1([1,2,3]) = {}", toy.h1(&[1, 2, 3]));
    println!("toy h2([1,2,3]) = {}", toy.h2(&[1, 2, 3]));

    let refused = HashSuite::new(SuiteName::Toy, FieldParams::modp2048(), false);
    println!(
        "toy suite on modp2048 without insecure_ok: {:?}",
        refused.err()
    );
}
