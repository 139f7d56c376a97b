//! Prime-field arithmetic GF(p).
//!
//! Everything downstream (the GFT codec, offset recovery) works in a prime
//! field: a frequency offset shifts every tone index by the same amount
//! modulo the subcarrier count, and only in GF(p) does that physical index
//! shift coincide with field addition. Extension fields would break the
//! offset algebra, so composite moduli are rejected outright.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum GaloisError {
    #[error("modulus {0} is not prime")]
    NonPrimeModulus(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("operands belong to different fields (GF({0}) vs GF({1}))")]
    FieldMismatch(u64, u64),
}

/// A prime field GF(p) together with its smallest primitive root.
///
/// The smallest root is chosen deterministically so that codewords are
/// reproducible across runs and implementations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Field {
    p: u64,
    alpha: u64,
}

impl Field {
    /// Builds GF(p), verifying primality and locating the smallest
    /// primitive root of the multiplicative group.
    pub fn new(p: u64) -> Result<Field, GaloisError> {
        if !is_prime(p) {
            return Err(GaloisError::NonPrimeModulus(p));
        }
        let alpha = smallest_primitive_root(p);
        Ok(Field { p, alpha })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// The smallest generator of the multiplicative group {1, ..., p-1}.
    pub fn primitive_element(&self) -> FieldElement {
        FieldElement {
            value: self.alpha,
            field: *self,
        }
    }

    /// Wraps a value into the field, reducing modulo p.
    pub fn element(&self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.p,
            field: *self,
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1)
    }
}

/// A value in [0, p-1] bound to its field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    field: Field,
}

impl FieldElement {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    /// Fallible addition; rejects operands from different fields.
    pub fn checked_add(self, rhs: FieldElement) -> Result<FieldElement, GaloisError> {
        self.same_field(rhs)?;
        let p = self.field.p;
        Ok(FieldElement {
            value: add_mod(self.value, rhs.value, p),
            field: self.field,
        })
    }

    /// Fallible multiplication; rejects operands from different fields.
    pub fn checked_mul(self, rhs: FieldElement) -> Result<FieldElement, GaloisError> {
        self.same_field(rhs)?;
        Ok(FieldElement {
            value: mul_mod(self.value, rhs.value, self.field.p),
            field: self.field,
        })
    }

    pub fn checked_sub(self, rhs: FieldElement) -> Result<FieldElement, GaloisError> {
        self.checked_add(-rhs)
    }

    /// Multiplicative inverse via Fermat: a^(p-2) mod p.
    pub fn inv(self) -> Result<FieldElement, GaloisError> {
        if self.value == 0 {
            return Err(GaloisError::ZeroInverse);
        }
        Ok(self.pow(self.field.p - 2))
    }

    /// Square-and-multiply exponentiation.
    pub fn pow(self, mut exp: u64) -> FieldElement {
        let p = self.field.p;
        let mut base = self.value;
        let mut acc = 1u64 % p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = mul_mod(acc, base, p);
            }
            base = mul_mod(base, base, p);
            exp >>= 1;
        }
        FieldElement {
            value: acc,
            field: self.field,
        }
    }

    fn same_field(self, rhs: FieldElement) -> Result<(), GaloisError> {
        if self.field.p != rhs.field.p {
            Err(GaloisError::FieldMismatch(self.field.p, rhs.field.p))
        } else {
            Ok(())
        }
    }
}

impl std::fmt::Display for FieldElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value)
    }
}

// Operator forms panic on field mismatch; use the checked_* methods when the
// fields may differ.
impl std::ops::Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        self.checked_add(rhs).expect("field mismatch in +")
    }
}

impl std::ops::Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        self.checked_sub(rhs).expect("field mismatch in -")
    }
}

impl std::ops::Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        self.checked_mul(rhs).expect("field mismatch in *")
    }
}

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        let value = if self.value == 0 {
            0
        } else {
            self.field.p - self.value
        };
        FieldElement {
            value,
            field: self.field,
        }
    }
}

fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    let s = (a as u128) + (b as u128);
    (s % p as u128) as u64
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

/// Deterministic trial-division primality test.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest g whose multiplicative order mod p is p-1.
///
/// Checks g^((p-1)/q) != 1 for every prime factor q of p-1, which is
/// equivalent to g having full order.
fn smallest_primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let factors = prime_factors(p - 1);
    'candidates: for g in 2..p {
        for &q in &factors {
            let e = (p - 1) / q;
            if pow_mod(g, e, p) == 1 {
                continue 'candidates;
            }
        }
        return g;
    }
    unreachable!("every prime field has a primitive root");
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while (d as u128) * (d as u128) <= n as u128 {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent order check: multiply g by itself until it cycles back
    /// to 1 and count the steps.
    fn multiplicative_order(g: u64, p: u64) -> u64 {
        assert!(g != 0 && g < p);
        let mut x = g;
        let mut order = 1u64;
        while x != 1 {
            x = (x as u128 * g as u128 % p as u128) as u64;
            order += 1;
        }
        order
    }

    #[test]
    fn field_of_5_has_alpha_2() {
        let f = Field::new(5).unwrap();
        assert_eq!(f.modulus(), 5);
        assert_eq!(f.primitive_element().value(), 2);
        // brute-force: 2 generates {2, 4, 3, 1}
        assert_eq!(multiplicative_order(2, 5), 4);
    }

    #[test]
    fn field_of_2_has_alpha_1() {
        let f = Field::new(2).unwrap();
        assert_eq!(f.primitive_element().value(), 1);
    }

    #[test]
    fn composite_modulus_rejected() {
        assert_eq!(Field::new(512), Err(GaloisError::NonPrimeModulus(512)));
        assert_eq!(Field::new(1), Err(GaloisError::NonPrimeModulus(1)));
        assert_eq!(Field::new(0), Err(GaloisError::NonPrimeModulus(0)));
    }

    #[test]
    fn primitive_roots_match_brute_force() {
        // Oracle: smallest g with full order found by direct cycling.
        for p in [3u64, 5, 7, 17, 631] {
            let expected = (1..p)
                .find(|&g| multiplicative_order(g, p) == p - 1)
                .unwrap();
            let f = Field::new(p).unwrap();
            assert_eq!(f.primitive_element().value(), expected, "p = {p}");
        }
        assert_eq!(Field::new(7).unwrap().primitive_element().value(), 3);
        assert_eq!(Field::new(3).unwrap().primitive_element().value(), 2);
    }

    #[test]
    fn inverse_examples() {
        let f = Field::new(5).unwrap();
        assert_eq!(f.element(4).inv().unwrap().value(), 4); // 4*4 = 16 = 1 mod 5
        assert_eq!(f.element(1).inv().unwrap().value(), 1);
        assert_eq!(f.element(0).inv(), Err(GaloisError::ZeroInverse));
    }

    #[test]
    fn add_example() {
        let f = Field::new(5).unwrap();
        assert_eq!((f.element(3) + f.element(4)).value(), 2);
    }

    #[test]
    fn cross_field_rejected() {
        let a = Field::new(5).unwrap().element(2);
        let b = Field::new(7).unwrap().element(2);
        assert_eq!(a.checked_add(b), Err(GaloisError::FieldMismatch(5, 7)));
        assert_eq!(a.checked_mul(b), Err(GaloisError::FieldMismatch(5, 7)));
    }

    #[test]
    #[should_panic(expected = "field mismatch")]
    fn cross_field_operator_panics() {
        let a = Field::new(5).unwrap().element(2);
        let b = Field::new(7).unwrap().element(2);
        let _ = a + b;
    }

    #[test]
    fn every_nonzero_element_has_inverse_exhaustive() {
        for p in (2u64..=1000).filter(|&p| is_prime(p)) {
            let f = Field::new(p).unwrap();
            for v in 1..p {
                let a = f.element(v);
                assert_eq!((a * a.inv().unwrap()).value(), 1, "p={p} v={v}");
            }
        }
    }

    #[test]
    fn alpha_has_full_order_exhaustive() {
        for p in (2u64..=1000).filter(|&p| is_prime(p)) {
            let f = Field::new(p).unwrap();
            let alpha = f.primitive_element();
            assert_eq!(alpha.pow(p - 1).value(), 1, "p={p}");
            if p > 2 {
                assert_eq!(multiplicative_order(alpha.value(), p), p - 1, "p={p}");
            }
        }
    }

    proptest! {
        #[test]
        fn field_laws_hold(p_idx in 0usize..4, a in 0u64..10_000, b in 0u64..10_000, c in 0u64..10_000) {
            let primes = [5u64, 17, 631, 997];
            let f = Field::new(primes[p_idx]).unwrap();
            let (a, b, c) = (f.element(a), f.element(b), f.element(c));
            prop_assert_eq!(a + b, b + a);
            prop_assert_eq!(a * b, b * a);
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
            prop_assert_eq!(a + (-a), f.zero());
        }
    }
}
