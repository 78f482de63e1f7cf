//! Exact real numbers of the form `Σ qᵢ·√rᵢ` with rational `qᵢ` and distinct
//! squarefree integer radicands `rᵢ`.
//!
//! Every amplitude the protocols need (1/√3, √(2/3), 1/√12, √3/2, ...) lives in
//! this set, and it is closed under addition and multiplication, so the
//! simulator can carry an exact shadow of each floating-point amplitude and
//! report probabilities as exact rationals.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest `numerator·denominator` accepted under a square root.
const MAX_RADICAND: u64 = 1_000_000_000_000;

/// A single term `q·√r`, `r` squarefree. Zero is `0·√1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Surd {
    coef: BigRational,
    radicand: u64,
}

/// Single exact amplitude literal.
pub type AmplitudeExpr = Surd;

impl Surd {
    pub fn zero() -> Self {
        Surd {
            coef: BigRational::zero(),
            radicand: 1,
        }
    }

    pub fn one() -> Self {
        Surd::rational(BigRational::one())
    }

    pub fn rational(q: BigRational) -> Self {
        Surd {
            coef: q,
            radicand: 1,
        }
    }

    /// `n/d` as an exact rational surd.
    pub fn ratio(n: i64, d: i64) -> Self {
        Surd::rational(BigRational::new(n.into(), d.into()))
    }

    /// `√r` for a non-negative rational `r`.
    pub fn sqrt(r: &BigRational) -> Result<Self> {
        Surd::new(BigRational::one(), r)
    }

    /// `q·√r` for rational `q` and non-negative rational `r`, brought to
    /// canonical form.
    pub fn new(q: BigRational, r: &BigRational) -> Result<Self> {
        if r.is_negative() {
            return Err(Error::Exact(format!("square root of negative rational {r}")));
        }
        if r.is_zero() || q.is_zero() {
            return Ok(Surd::zero());
        }
        // √(a/b) = √(ab)/b
        let a = r.numer();
        let b = r.denom();
        let ab = a * b;
        let ab = ab
            .to_u64()
            .filter(|v| *v <= MAX_RADICAND)
            .ok_or_else(|| Error::Exact(format!("radicand {r} too large")))?;
        let (square_root, free) = split_square(ab);
        let coef = q * BigRational::new(BigInt::from(square_root), b.clone());
        Ok(Surd {
            coef,
            radicand: free,
        })
    }

    pub fn coef(&self) -> &BigRational {
        &self.coef
    }

    pub fn radicand(&self) -> u64 {
        self.radicand
    }

    pub fn is_zero(&self) -> bool {
        self.coef.is_zero()
    }

    /// `(q√r)² = q²·r`.
    pub fn square(&self) -> BigRational {
        &self.coef * &self.coef * BigRational::from_integer(BigInt::from(self.radicand))
    }

    pub fn to_f64(&self) -> f64 {
        self.coef.to_f64().unwrap_or(f64::NAN) * (self.radicand as f64).sqrt()
    }

    /// `1/(q√r) = 1/(q·r)·√r`.
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let r = BigRational::from_integer(BigInt::from(self.radicand));
        Some(Surd {
            coef: (&self.coef * r).recip(),
            radicand: self.radicand,
        })
    }
}

impl Mul for &Surd {
    type Output = Surd;

    fn mul(self, rhs: &Surd) -> Surd {
        if self.is_zero() || rhs.is_zero() {
            return Surd::zero();
        }
        // both radicands squarefree: r·s = g²·(r/g)(s/g), and (r/g)(s/g) is squarefree
        let g = self.radicand.gcd(&rhs.radicand);
        let radicand = (self.radicand / g) * (rhs.radicand / g);
        Surd {
            coef: &self.coef * &rhs.coef * BigRational::from_integer(BigInt::from(g)),
            radicand,
        }
    }
}

impl Neg for Surd {
    type Output = Surd;

    fn neg(self) -> Surd {
        Surd {
            coef: -self.coef,
            radicand: self.radicand,
        }
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coef.is_negative() {
            f.write_str("-")?;
        }
        write_magnitude(f, &self.coef.abs(), self.radicand)
    }
}

fn write_magnitude(f: &mut fmt::Formatter<'_>, q: &BigRational, radicand: u64) -> fmt::Result {
    if radicand == 1 {
        return write!(f, "{q}");
    }
    if !q.numer().is_one() {
        write!(f, "{}", q.numer())?;
    }
    write!(f, "√{radicand}")?;
    if !q.denom().is_one() {
        write!(f, "/{}", q.denom())?;
    }
    Ok(())
}

/// Splits `n` into `s²·t` with `t` squarefree; returns `(s, t)`.
fn split_square(mut n: u64) -> (u64, u64) {
    let mut root = 1u64;
    let mut free = 1u64;
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        let mut count = 0;
        while n.is_multiple_of(p) {
            n /= p;
            count += 1;
        }
        for _ in 0..count / 2 {
            root *= p;
        }
        if count % 2 == 1 {
            free *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    (root, free * n)
}

/// Finite sum of surds with distinct radicands.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SurdSum {
    terms: BTreeMap<u64, BigRational>,
}

impl SurdSum {
    pub fn zero() -> Self {
        SurdSum::default()
    }

    pub fn one() -> Self {
        Surd::one().into()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = Surd> + '_ {
        self.terms.iter().map(|(r, q)| Surd {
            coef: q.clone(),
            radicand: *r,
        })
    }

    /// The value as a rational, if it has no irrational part.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&1).cloned(),
            _ => None,
        }
    }

    /// The value as a single surd, if it has at most one term.
    pub fn as_surd(&self) -> Option<Surd> {
        match self.terms.len() {
            0 => Some(Surd::zero()),
            1 => self.terms().next(),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms().map(|t| t.to_f64()).sum()
    }

    pub fn add_surd(&mut self, s: &Surd) {
        if s.is_zero() {
            return;
        }
        let entry = self
            .terms
            .entry(s.radicand)
            .or_insert_with(BigRational::zero);
        *entry += &s.coef;
        if entry.is_zero() {
            self.terms.remove(&s.radicand);
        }
    }

    pub fn add_assign_ref(&mut self, other: &SurdSum) {
        for t in other.terms() {
            self.add_surd(&t);
        }
    }

    pub fn mul_surd(&self, s: &Surd) -> SurdSum {
        let mut out = SurdSum::zero();
        for t in self.terms() {
            out.add_surd(&(&t * s));
        }
        out
    }

    pub fn square(&self) -> SurdSum {
        self * self
    }
}

impl From<Surd> for SurdSum {
    fn from(s: Surd) -> Self {
        let mut out = SurdSum::zero();
        out.add_surd(&s);
        out
    }
}

impl Add for &SurdSum {
    type Output = SurdSum;

    fn add(self, rhs: &SurdSum) -> SurdSum {
        let mut out = self.clone();
        out.add_assign_ref(rhs);
        out
    }
}

impl Sub for &SurdSum {
    type Output = SurdSum;

    fn sub(self, rhs: &SurdSum) -> SurdSum {
        let mut out = self.clone();
        for t in rhs.terms() {
            out.add_surd(&-t);
        }
        out
    }
}

impl Neg for &SurdSum {
    type Output = SurdSum;

    fn neg(self) -> SurdSum {
        SurdSum {
            terms: self.terms.iter().map(|(r, q)| (*r, -q)).collect(),
        }
    }
}

impl Mul for &SurdSum {
    type Output = SurdSum;

    fn mul(self, rhs: &SurdSum) -> SurdSum {
        let mut out = SurdSum::zero();
        for a in self.terms() {
            for b in rhs.terms() {
                out.add_surd(&(&a * &b));
            }
        }
        out
    }
}

impl fmt::Display for SurdSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (r, q)) in self.terms.iter().enumerate() {
            match (i, q.is_negative()) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            write_magnitude(f, &q.abs(), *r)?;
        }
        Ok(())
    }
}

/// Formats a rational as `a/b` (or `a` when integral).
pub fn format_rational(q: &BigRational) -> String {
    q.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn canonical_forms() {
        // √(2/3) = √6/3
        let s = Surd::sqrt(&q(2, 3)).unwrap();
        assert_eq!(s.radicand(), 6);
        assert_eq!(s.coef(), &q(1, 3));
        assert_eq!(s.to_string(), "√6/3");
        // 1/√12 = √3/6
        let t = Surd::new(BigRational::one(), &q(1, 12)).unwrap();
        assert_eq!(t.to_string(), "√3/6");
        assert_eq!(t.square(), q(1, 12));
        // √(9/4) = 3/2
        assert_eq!(Surd::sqrt(&q(9, 4)).unwrap().to_string(), "3/2");
    }

    #[test]
    fn negative_radicand_rejected() {
        assert!(Surd::sqrt(&q(-1, 2)).is_err());
    }

    #[test]
    fn products_reduce() {
        let a = Surd::sqrt(&q(2, 3)).unwrap();
        let b = Surd::sqrt(&q(1, 6)).unwrap();
        // √(2/3)·√(1/6) = 1/3
        let p = &a * &b;
        assert_eq!(p.radicand(), 1);
        assert_eq!(p.coef(), &q(1, 3));
    }

    #[test]
    fn cross_terms_cancel() {
        // (√(2/3) − √(1/6))² = 1/6
        let mut s = SurdSum::from(Surd::sqrt(&q(2, 3)).unwrap());
        s.add_surd(&-Surd::sqrt(&q(1, 6)).unwrap());
        assert_eq!(s.square().as_rational(), Some(q(1, 6)));
    }

    #[test]
    fn mixed_sum_is_not_rational() {
        let mut s = SurdSum::from(Surd::sqrt(&q(2, 1)).unwrap());
        s.add_surd(&Surd::sqrt(&q(3, 1)).unwrap());
        assert!(s.as_rational().is_none());
        assert_eq!(s.to_string(), "√2 + √3");
        assert!((s.to_f64() - (2f64.sqrt() + 3f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn recip_roundtrip() {
        let s = Surd::new(q(2, 1), &q(1, 12)).unwrap();
        let r = s.recip().unwrap();
        let one = &s * &r;
        assert_eq!(one, Surd::one());
    }

    proptest! {
        #[test]
        fn float_shadow_matches(n in 1i64..60, d in 1i64..60, a in -20i64..20, b in 1i64..20) {
            let s = Surd::new(q(a, b), &q(n, d)).unwrap();
            let expected = (a as f64 / b as f64) * (n as f64 / d as f64).sqrt();
            prop_assert!((s.to_f64() - expected).abs() < 1e-12);
            prop_assert!((s.square().to_f64().unwrap() - expected * expected).abs() < 1e-9);
        }

        #[test]
        fn multiplication_matches_floats(n1 in 1i64..40, n2 in 1i64..40, d1 in 1i64..10, d2 in 1i64..10) {
            let a = Surd::sqrt(&q(n1, d1)).unwrap();
            let b = Surd::sqrt(&q(n2, d2)).unwrap();
            let p = &a * &b;
            prop_assert!((p.to_f64() - a.to_f64() * b.to_f64()).abs() < 1e-12);
        }
    }
}
