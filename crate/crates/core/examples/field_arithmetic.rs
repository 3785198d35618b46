//! Prime field basics: the built-in moduli, fixed-width encoding, sampling.

use gkt::field::FieldParams;
use gkt::rng;

fn main() {
    let f = FieldParams::p23();
    let a = f.element(20u32);
    let b = f.element(5u32);
    println!("p = 23, byte width {}", f.byte_width());
    println!("20 + 5 = {}", &a + &b);
    println!("5 - 20 = {}", &b - &a);
    println!("20 * 5 = {}", &a * &b);
    println!("-5 = {}", -&b);
    println!("5^22 = {}", b.pow(22));

    let big = FieldParams::modp2048();
    println!(
        "modp2048: {} bits, {} byte encoding",
        big.bits(),
        big.byte_width()
    );
    let x = big.sample(&mut rng::stream(7, "demo"));
    let back = big.decode(&x.encode()).expect("round trip");
    assert_eq!(x, back);
    println!("sampled element round-trips: {}...", &x.to_hex()[..16]);

    match FieldParams::from_name_or_hex("19", true) {
        Ok(_) => println!("25 accepted?"),
        Err(e) => println!("0x19 rejected: {e}"),
    }
}
