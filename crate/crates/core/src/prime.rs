//! Probabilistic primality testing.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;

/// Miller-Rabin rounds used by [`is_probable_prime`]. Each round has error at
/// most 1/4, so 64 rounds bound the false-positive rate by 2^-128.
pub const MILLER_RABIN_ROUNDS: usize = 64;

const WITNESS_SEED: [u8; 32] = *b"gkt/miller-rabin/witness-seed/v1";

const SMALL_PRIMES: [u32; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Miller-Rabin with [`MILLER_RABIN_ROUNDS`] rounds. Witnesses are drawn from a
/// fixed-seed stream so the verdict is reproducible.
pub fn is_probable_prime(n: &BigUint) -> bool {
    if let Some(small) = n.to_u32() {
        if small < 2 {
            return false;
        }
        if SMALL_PRIMES.contains(&small) {
            return true;
        }
    }
    for &sp in SMALL_PRIMES.iter() {
        if (n % sp).is_zero() {
            return false;
        }
    }
    // n > 97 from here on.
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    let n_minus_one = n - &one;
    let shift = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> shift;

    let mut rng = ChaCha20Rng::from_seed(WITNESS_SEED);
    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        // a uniform in [2, n-2]
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..shift {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
            if x == one {
                return false;
            }
        }
        return false;
    }
    true
}

/// `p` and `(p - 1) / 2` both pass [`is_probable_prime`].
pub fn is_safe_prime(p: &BigUint) -> bool {
    if p.is_even() || *p < BigUint::from(5u32) {
        return false;
    }
    let q: BigUint = (p - 1u32) >> 1;
    is_probable_prime(&q) && is_probable_prime(p)
}
