//! Arithmetic in the prime field Z_p.
//!
//! A [`FieldParams`] is validated once (primality, optionally safe-primality)
//! and shared cheaply by reference counting. Every [`FieldElement`] carries
//! its field and is kept in canonical form `0 <= value < p`.
//!
//! The byte encoding is fixed-width big-endian with width
//! `ceil(bitlen(p) / 8)`. It is the only representation used when elements
//! are hashed, concatenated, or written to transcripts.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::Zero;
use rand_core::RngCore;
use thiserror::Error;

use crate::prime::is_probable_prime;

/// The 2048-bit safe prime of MODP group 14 (RFC 3526).
pub const MODP2048_HEX: &str = "ffffffffffffffffc90fdaa22168c234c4c6628b80dc1cd129024e088a67cc74\
020bbea63b139b22514a08798e3404ddef9519b3cd3a431b302b0a6df25f14374fe1356d6d51c245e485b576625e7ec6\
f44c42e9a637ed6b0bff5cb6f406b7edee386bfb5a899fa5ae9f24117c4b1fe649286651ece45b3dc2007cb8a163bf05\
98da48361c55d39a69163fa8fd24cf5f83655d23dca3ad961c62f356208552bb9ed529077096966d670c354e4abc9804\
f1746c08ca18217c32905e462e36ce3be39e772c180e86039b2783a2ec07a28fb5c55df06f4c52c9de2bcbf695581718\
3995497cea956ae515d2261898fa051015728e5a8aacaa68ffffffffffffffff";

/// Largest accepted modulus, in bits.
pub const MAX_MODULUS_BITS: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus must be an odd integer >= 5")]
    ModulusTooSmall,
    #[error("modulus has {0} bits, more than the supported {MAX_MODULUS_BITS}")]
    ModulusTooLarge(u64),
    #[error("NotPrime: modulus is not prime")]
    NotPrime,
    #[error("NotSafePrime: (p - 1) / 2 is not prime")]
    NotSafePrime,
    #[error("unknown prime {0:?}: expected \"p23\", \"modp2048\" or a hex string")]
    UnknownPrime(String),
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("encoded element has {got} bytes, field width is {expected}")]
    BadLength { expected: usize, got: usize },
    #[error("encoded value is not below the modulus")]
    OutOfRange,
    #[error("invalid hex encoding")]
    BadHex,
}

struct Inner {
    p: BigUint,
    bits: u64,
    byte_width: usize,
    safe: bool,
}

/// Validated prime modulus plus its derived encoding width.
#[derive(Clone)]
pub struct FieldParams(Arc<Inner>);

impl FieldParams {
    /// Validates `p` and builds the field. Runs Miller-Rabin on `p`, and on
    /// `(p - 1) / 2` as well when `safe_prime_required` is set.
    pub fn new(p: BigUint, safe_prime_required: bool) -> Result<Self, FieldError> {
        if p < BigUint::from(5u32) || p.is_even() {
            return Err(FieldError::ModulusTooSmall);
        }
        let bits = p.bits();
        if bits > MAX_MODULUS_BITS {
            return Err(FieldError::ModulusTooLarge(bits));
        }
        if !is_probable_prime(&p) {
            return Err(FieldError::NotPrime);
        }
        if safe_prime_required {
            let q: BigUint = (&p - 1u32) >> 1;
            if !is_probable_prime(&q) {
                return Err(FieldError::NotSafePrime);
            }
        }
        Ok(Self::unchecked(p, safe_prime_required))
    }

    fn unchecked(p: BigUint, safe: bool) -> Self {
        let bits = p.bits();
        let byte_width = bits.div_ceil(8) as usize;
        FieldParams(Arc::new(Inner {
            p,
            bits,
            byte_width,
            safe,
        }))
    }

    /// The desk-scale test field p = 23 (= 2 * 11 + 1).
    pub fn p23() -> Self {
        static P23: OnceLock<FieldParams> = OnceLock::new();
        P23.get_or_init(|| {
            FieldParams::new(BigUint::from(23u32), true).expect("23 is a safe prime")
        })
        .clone()
    }

    /// The 2048-bit MODP group 14 safe prime, validated on first use.
    pub fn modp2048() -> Self {
        static MODP: OnceLock<FieldParams> = OnceLock::new();
        MODP.get_or_init(|| {
            let p = BigUint::parse_bytes(MODP2048_HEX.as_bytes(), 16).expect("valid hex");
            FieldParams::new(p, true).expect("MODP group 14 prime is a safe prime")
        })
        .clone()
    }

    /// Resolves a prime by name (`"p23"`, `"modp2048"`) or as a hex string
    /// (optionally `0x`-prefixed).
    pub fn from_name_or_hex(prime: &str, safe_prime_required: bool) -> Result<Self, FieldError> {
        match prime {
            "p23" => Ok(Self::p23()),
            "modp2048" => Ok(Self::modp2048()),
            other => {
                let digits = other
                    .strip_prefix("0x")
                    .or_else(|| other.strip_prefix("0X"))
                    .unwrap_or(other);
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
                    return Err(FieldError::UnknownPrime(other.to_string()));
                }
                let p = BigUint::parse_bytes(digits.as_bytes(), 16)
                    .ok_or_else(|| FieldError::UnknownPrime(other.to_string()))?;
                Self::new(p, safe_prime_required)
            }
        }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.0.p
    }

    /// Bit length of p.
    pub fn bits(&self) -> u64 {
        self.0.bits
    }

    /// Width in bytes of every encoded element.
    pub fn byte_width(&self) -> usize {
        self.0.byte_width
    }

    /// Whether `(p - 1) / 2` was checked for primality at construction.
    pub fn is_safe_checked(&self) -> bool {
        self.0.safe
    }

    /// Reduces an arbitrary integer into the field.
    pub fn element(&self, value: impl Into<BigUint>) -> FieldElement {
        let value = value.into() % &self.0.p;
        FieldElement {
            value,
            field: self.clone(),
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0u32)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1u32)
    }

    /// Inverse of [`FieldElement::encode`].
    pub fn decode(&self, bytes: &[u8]) -> Result<FieldElement, FieldError> {
        if bytes.len() != self.byte_width() {
            return Err(FieldError::BadLength {
                expected: self.byte_width(),
                got: bytes.len(),
            });
        }
        let value = BigUint::from_bytes_be(bytes);
        if value >= self.0.p {
            return Err(FieldError::OutOfRange);
        }
        Ok(FieldElement {
            value,
            field: self.clone(),
        })
    }

    /// Decodes a lowercase or uppercase hex string of exactly `byte_width`
    /// bytes.
    pub fn decode_hex(&self, s: &str) -> Result<FieldElement, FieldError> {
        let bytes = hex::decode(s).map_err(|_| FieldError::BadHex)?;
        self.decode(&bytes)
    }

    /// Uniform element by rejection sampling on `byte_width`-byte draws.
    /// Bits above `bitlen(p)` are cleared before the comparison, so at least
    /// half of all draws are accepted.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        let width = self.byte_width();
        let excess = (width as u64 * 8 - self.bits()) as u32;
        let top_mask = 0xffu8 >> excess;
        let mut buf = vec![0u8; width];
        loop {
            rng.fill_bytes(&mut buf);
            buf[0] &= top_mask;
            let value = BigUint::from_bytes_be(&buf);
            if value < self.0.p {
                return FieldElement {
                    value,
                    field: self.clone(),
                };
            }
        }
    }

    fn same(&self, other: &FieldParams) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.p == other.0.p
    }
}

impl PartialEq for FieldParams {
    fn eq(&self, other: &Self) -> bool {
        self.same(other)
    }
}

impl Eq for FieldParams {}

impl fmt::Debug for FieldParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldParams")
            .field("bits", &self.0.bits)
            .field("byte_width", &self.0.byte_width)
            .field("p", &format_args!("{:x}", self.0.p))
            .finish()
    }
}

/// A canonical residue modulo the field's prime.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    value: BigUint,
    field: FieldParams,
}

impl FieldElement {
    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// Fixed-width big-endian encoding, `byte_width` bytes long.
    pub fn encode(&self) -> Vec<u8> {
        let width = self.field.byte_width();
        let raw = self.value.to_bytes_be();
        if self.value.is_zero() {
            return vec![0u8; width];
        }
        let mut out = vec![0u8; width - raw.len()];
        out.extend_from_slice(&raw);
        out
    }

    /// Lowercase hex of [`encode`](Self::encode).
    pub fn to_hex(&self) -> String {
        hex::encode(self.encode())
    }

    pub fn checked_add(&self, rhs: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(rhs)?;
        let mut v = &self.value + &rhs.value;
        if v >= *self.field.modulus() {
            v -= self.field.modulus();
        }
        Ok(self.with(v))
    }

    pub fn checked_sub(&self, rhs: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(rhs)?;
        let v = if self.value >= rhs.value {
            &self.value - &rhs.value
        } else {
            self.field.modulus() - &rhs.value + &self.value
        };
        Ok(self.with(v))
    }

    pub fn checked_mul(&self, rhs: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check(rhs)?;
        Ok(self.with((&self.value * &rhs.value) % self.field.modulus()))
    }

    pub fn pow(&self, exponent: u64) -> FieldElement {
        self.with(
            self.value
                .modpow(&BigUint::from(exponent), self.field.modulus()),
        )
    }

    fn check(&self, rhs: &FieldElement) -> Result<(), FieldError> {
        if self.field.same(&rhs.field) {
            Ok(())
        } else {
            Err(FieldError::FieldMismatch)
        }
    }

    fn with(&self, value: BigUint) -> FieldElement {
        debug_assert!(value < *self.field.modulus());
        FieldElement {
            value,
            field: self.field.clone(),
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fe({})", self.value)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

// Operator forms panic on mixed fields; use the `checked_*` methods where
// operands come from different sources.
impl Add for &FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &FieldElement) -> FieldElement {
        self.checked_add(rhs).expect("field mismatch in addition")
    }
}

impl Sub for &FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &FieldElement) -> FieldElement {
        self.checked_sub(rhs)
            .expect("field mismatch in subtraction")
    }
}

impl Mul for &FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: &FieldElement) -> FieldElement {
        self.checked_mul(rhs)
            .expect("field mismatch in multiplication")
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        &self.field.zero() - self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn f23() -> FieldParams {
        FieldParams::p23()
    }

    fn fe(v: u32) -> FieldElement {
        f23().element(v)
    }

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn make_field_examples() {
        let f = FieldParams::new(BigUint::from(23u32), true).unwrap();
        assert_eq!(f.byte_width(), 1);
        assert_eq!(
            FieldParams::new(BigUint::from(25u32), true).unwrap_err(),
            FieldError::NotPrime
        );
        // (29 - 1) / 2 = 14 is composite.
        assert!(!trial_division(14));
        assert_eq!(
            FieldParams::new(BigUint::from(29u32), true).unwrap_err(),
            FieldError::NotSafePrime
        );
        assert!(FieldParams::new(BigUint::from(29u32), false).is_ok());
    }

    #[test]
    fn rejects_tiny_and_even_moduli() {
        for p in [0u32, 1, 2, 3, 4, 6, 24] {
            assert_eq!(
                FieldParams::new(BigUint::from(p), false).unwrap_err(),
                FieldError::ModulusTooSmall
            );
        }
    }

    #[test]
    fn rejects_oversized_modulus() {
        let p = (BigUint::one() << 4100u32) + 1u32;
        assert!(matches!(
            FieldParams::new(p, false),
            Err(FieldError::ModulusTooLarge(4101))
        ));
    }

    #[test]
    fn named_primes() {
        assert_eq!(FieldParams::from_name_or_hex("p23", true).unwrap(), f23());
        let m = FieldParams::from_name_or_hex("modp2048", true).unwrap();
        assert_eq!(m.bits(), 2048);
        assert_eq!(m.byte_width(), 256);
        assert_eq!(FieldParams::from_name_or_hex("0x17", true).unwrap(), f23());
        assert_eq!(FieldParams::from_name_or_hex("17", true).unwrap(), f23());
        assert!(matches!(
            FieldParams::from_name_or_hex("p24", true),
            Err(FieldError::UnknownPrime(_))
        ));
        assert_eq!(
            FieldParams::from_name_or_hex("19", true).unwrap_err(),
            FieldError::NotPrime
        );
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(&fe(20) + &fe(5), fe(2));
        assert_eq!(&fe(4) - &fe(10), fe(17));
        assert_eq!(&fe(7) * &fe(7), fe(3));
        for a in 0..23 {
            let a = fe(a);
            assert_eq!(&a + &f23().zero(), a);
            let minus = f23().element(23u32 - a.value().iter_u32_digits().next().unwrap_or(0));
            assert!((&a + &minus).is_zero());
            assert!((&a - &a).is_zero());
            assert_eq!(&a - &f23().zero(), a);
            assert_eq!(&a * &f23().one(), a);
            assert!((&a * &f23().zero()).is_zero());
            assert!((&a + &(-&a)).is_zero());
        }
    }

    #[test]
    fn mismatched_fields_are_rejected() {
        let f29 = FieldParams::new(BigUint::from(29u32), false).unwrap();
        let a = fe(3);
        let b = f29.element(3u32);
        assert_eq!(a.checked_add(&b).unwrap_err(), FieldError::FieldMismatch);
        assert_eq!(a.checked_sub(&b).unwrap_err(), FieldError::FieldMismatch);
        assert_eq!(a.checked_mul(&b).unwrap_err(), FieldError::FieldMismatch);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(fe(5).encode(), vec![0x05]);
        assert_eq!(fe(22).encode(), vec![0x16]);
        assert_eq!(fe(0).encode(), vec![0x00]);
        let f = FieldParams::new(BigUint::from(65537u32), false).unwrap();
        assert_eq!(f.byte_width(), 3);
        assert_eq!(f.element(1u32).encode(), vec![0, 0, 1]);
        assert_eq!(f.zero().encode(), vec![0, 0, 0]);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(f23().decode(&[0x16]).unwrap(), fe(22));
        assert_eq!(f23().decode(&[0x17]).unwrap_err(), FieldError::OutOfRange);
        assert_eq!(
            f23().decode(&[0x00, 0x05]).unwrap_err(),
            FieldError::BadLength {
                expected: 1,
                got: 2
            }
        );
        assert_eq!(f23().decode_hex("zz").unwrap_err(), FieldError::BadHex);
    }

    #[test]
    fn round_trip_exhaustive_p23() {
        for v in 0..23u32 {
            let a = fe(v);
            assert_eq!(f23().decode(&a.encode()).unwrap(), a);
        }
    }

    #[test]
    fn round_trip_random_modp2048() {
        let f = FieldParams::modp2048();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let a = f.sample(&mut rng);
            let enc = a.encode();
            assert_eq!(enc.len(), 256);
            assert_eq!(f.decode(&enc).unwrap(), a);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = f23().sample(&mut ChaCha20Rng::seed_from_u64(0));
        let b = f23().sample(&mut ChaCha20Rng::seed_from_u64(0));
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_stays_in_range() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..100_000 {
            assert!(*f23().sample(&mut rng).value() < BigUint::from(23u32));
        }
    }

    #[test]
    fn sampling_is_uniform_at_p23() {
        // 10^4 draws; each bin is Binomial(n, 1/23).
        let n = 10_000f64;
        let mut counts = [0u32; 23];
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let v = f23()
                .sample(&mut rng)
                .value()
                .iter_u32_digits()
                .next()
                .unwrap_or(0);
            counts[v as usize] += 1;
        }
        let p = 1.0 / 23.0;
        let mean = n * p;
        let sigma = (n * p * (1.0 - p)).sqrt();
        let mut chi2 = 0.0;
        for &c in &counts {
            assert!((c as f64 - mean).abs() < 5.0 * sigma, "{counts:?}");
            chi2 += (c as f64 - mean).powi(2) / mean;
        }
        // chi-square with 22 dof: 99.9th percentile ~ 48.3
        assert!(chi2 < 48.3, "chi2 = {chi2}");
    }
}
