//! Exact rational arithmetic with a zero-totalized inverse and a signum.
//!
//! [`Rational`] is the carrier of all probabilities and weight computations in
//! this crate. It is an arbitrary-precision fraction kept in canonical form
//! (positive denominator, reduced), so structural equality decides semantic
//! equality. Two points distinguish it from garden-variety rationals:
//!
//! * the multiplicative inverse is **total**: `inv(0) = 0`. Weight formulas
//!   that divide, e.g. the re-association of nested probabilistic choices,
//!   rely on `0/0 = 0` instead of erroring;
//! * ordering comparisons are definable from the signum alone
//!   (`a < b  iff  sign(b − a) = 1`), and [`Rational::is_probability`] is
//!   literally the sign formula `sign(sign(a)+1) · sign(sign(1−a)+1) = 1`
//!   for membership in `[0, 1]`.
//!
//! [`Prob`] wraps a `Rational` with the invariant that it lies in `[0, 1]`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact arbitrary-precision rational in canonical form.
///
/// Invariants: denominator > 0 and gcd(|numerator|, denominator) = 1, both
/// maintained by every constructor and operation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(BigRational);

impl Rational {
    /// The rational `n`.
    pub fn int(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// The fraction `num / den`.
    ///
    /// # Panics
    ///
    /// Panics if `den == 0`: fractions are formed only with nonzero
    /// denominators; division as an *operation* goes through [`Rational::inv`],
    /// which is total.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "rational literal with zero denominator");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Zero.
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    /// One.
    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// Zero-totalized multiplicative inverse: `inv(0) = 0`, otherwise `1/a`.
    pub fn inv(&self) -> Self {
        if self.0.is_zero() {
            Rational::zero()
        } else {
            Rational(self.0.recip())
        }
    }

    /// Totalized division `a/b = a · inv(b)`; in particular `a/0 = 0`.
    pub fn div_total(&self, other: &Rational) -> Self {
        self.clone() * other.inv()
    }

    /// Signum as a rational: −1, 0, or 1.
    pub fn sign(&self) -> Self {
        match self.0.numer().sign() {
            num::bigint::Sign::Minus => Rational::int(-1),
            num::bigint::Sign::NoSign => Rational::zero(),
            num::bigint::Sign::Plus => Rational::one(),
        }
    }

    /// Ordering defined through the signum: `LT` iff `sign(b − a) = 1`.
    ///
    /// Agrees with the derived `Ord` (property-tested); kept separate because
    /// it is the *definition* the rest of the crate builds on.
    pub fn compare(&self, other: &Rational) -> Ordering {
        let d = other.clone() - self.clone();
        if d.sign().is_one() {
            Ordering::Less
        } else if d.is_zero() {
            Ordering::Equal
        } else {
            Ordering::Greater
        }
    }

    /// Membership in `[0, 1]`, by the sign formula
    /// `sign(sign(a)+1) · sign(sign(1−a)+1) = 1`.
    pub fn is_probability(&self) -> bool {
        let lo = (self.sign() + Rational::one()).sign();
        let hi = ((Rational::one() - self.clone()).sign() + Rational::one()).sign();
        (lo * hi).is_one()
    }

    /// Approximate value as `f64` (used only for reporting and statistics;
    /// all semantics stays exact).
    pub fn to_f64(&self) -> f64 {
        let n = self.0.numer();
        let d = self.0.denom();
        // Scale down in tandem to avoid overflowing f64 on huge bignums.
        let nf = bigint_to_f64(n);
        let df = bigint_to_f64(d);
        nf / df
    }

    /// Access to the underlying canonical fraction.
    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn from_big(r: BigRational) -> Self {
        Rational(r)
    }
}

fn bigint_to_f64(n: &BigInt) -> f64 {
    // BigInt -> f64 via string is exact enough for reporting; num's ToPrimitive
    // saturates on overflow which is also fine here.
    use num::ToPrimitive;
    n.to_f64().unwrap_or(f64::INFINITY)
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Rational) -> Rational {
        Rational(self.0 + rhs.0)
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Rational) -> Rational {
        Rational(self.0 - rhs.0)
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Rational) -> Rational {
        Rational(self.0 * rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl fmt::Display for Rational {
    /// Canonical text form `p/q`, with `/q` omitted when the denominator is 1.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    // Rationals read better as `5/6` than as a struct dump.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer in rational literal: {0}")]
    BadInt(String),
    #[error("zero denominator in rational literal")]
    ZeroDenominator,
}

impl FromStr for Rational {
    type Err = RationalParseError;

    /// Parses `p` or `p/q` with optional leading `-` on the numerator.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(RationalParseError::Empty);
        }
        let (ns, ds) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), Some(d.trim())),
            None => (s, None),
        };
        let n = BigInt::from_str(ns).map_err(|_| RationalParseError::BadInt(ns.to_string()))?;
        let d = match ds {
            Some(ds) => BigInt::from_str(ds).map_err(|_| RationalParseError::BadInt(ds.to_string()))?,
            None => BigInt::one(),
        };
        if d.is_zero() {
            return Err(RationalParseError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(n, d)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A rational constrained to `[0, 1]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Prob(Rational);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("{0} is not a probability (outside [0, 1])")]
pub struct NotProbability(pub Rational);

impl Prob {
    pub fn new(r: Rational) -> Result<Self, NotProbability> {
        if r.is_probability() {
            Ok(Prob(r))
        } else {
            Err(NotProbability(r))
        }
    }

    /// Builds `num/den` as a probability.
    /// Literal constructor for in-code probabilities.
    ///
    /// # Panics
    ///
    /// Panics when `den` is zero or `num/den` is outside `[0, 1]`; use
    /// [`Prob::new`] for checked construction from untrusted input.
    pub fn frac(num: i64, den: i64) -> Self {
        Prob::new(Rational::new(num, den)).expect("fraction outside [0, 1]")
    }

    pub fn zero() -> Self {
        Prob(Rational::zero())
    }

    pub fn one() -> Self {
        Prob(Rational::one())
    }

    pub fn half() -> Self {
        Prob(Rational::new(1, 2))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_value(self) -> Rational {
        self.0
    }

    /// `1 − π`; total on probabilities.
    pub fn complement(&self) -> Prob {
        Prob(Rational::one() - self.0.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Debug for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<'de> Deserialize<'de> for Prob {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = Rational::deserialize(deserializer)?;
        Prob::new(r).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(num: i64, den: i64) -> Rational {
        Rational::new(num, den)
    }

    #[test]
    fn inverse_is_zero_totalized() {
        assert_eq!(Rational::zero().inv(), Rational::zero());
        assert_eq!(r(2, 3).inv(), r(3, 2));
        assert_eq!(r(-5, 7).inv(), r(-7, 5));
    }

    #[test]
    fn division_by_zero_is_zero() {
        assert_eq!(r(3, 4).div_total(&Rational::zero()), Rational::zero());
        assert_eq!(Rational::zero().div_total(&Rational::zero()), Rational::zero());
        assert_eq!(r(3, 4).div_total(&r(1, 2)), r(3, 2));
    }

    #[test]
    fn signum_basics() {
        assert_eq!(Rational::int(-1).sign(), Rational::int(-1));
        assert_eq!(Rational::zero().sign(), Rational::zero());
        assert_eq!(r(7, 6).sign(), Rational::one());
    }

    #[test]
    fn probability_membership_by_sign_formula() {
        assert!(Rational::zero().is_probability());
        assert!(Rational::one().is_probability());
        assert!(r(1, 2).is_probability());
        assert!(!r(7, 6).is_probability());
        assert!(!r(-1, 6).is_probability());
    }

    #[test]
    fn compare_boundary_cases() {
        assert_eq!(r(1, 3).compare(&r(1, 2)), Ordering::Less);
        assert_eq!(r(1, 2).compare(&r(1, 2)), Ordering::Equal);
        assert_eq!(r(2, 3).compare(&r(1, 2)), Ordering::Greater);
    }

    #[test]
    fn display_omits_unit_denominator() {
        assert_eq!(r(5, 1).to_string(), "5");
        assert_eq!(r(5, 6).to_string(), "5/6");
        assert_eq!(r(-5, 6).to_string(), "-5/6");
        assert_eq!(r(10, -4).to_string(), "-5/2");
    }

    #[test]
    fn parse_round_trips() {
        for s in ["0", "1", "-3", "5/6", "-7/3", "1000000000000000000000/7"] {
            let v: Rational = s.parse().unwrap();
            assert_eq!(v.to_string(), s);
        }
        assert!("".parse::<Rational>().is_err());
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x/2".parse::<Rational>().is_err());
    }

    #[test]
    fn prob_rejects_out_of_range() {
        assert!(Prob::new(r(1, 2)).is_ok());
        assert!(Prob::new(r(0, 1)).is_ok());
        assert!(Prob::new(r(1, 1)).is_ok());
        assert!(Prob::new(r(7, 6)).is_err());
        assert!(Prob::new(r(-1, 2)).is_err());
    }

    #[test]
    fn serde_uses_fraction_strings() {
        let v = r(5, 6);
        let js = serde_json::to_string(&v).unwrap();
        assert_eq!(js, "\"5/6\"");
        let back: Rational = serde_json::from_str(&js).unwrap();
        assert_eq!(back, v);
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (-2000i64..2000, 1i64..2000).prop_map(|(n, d)| Rational::new(n, d))
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

        #[test]
        fn ring_laws(a in arb_rational(), b in arb_rational(), c in arb_rational()) {
            // Associativity and commutativity of + and ·, distribution, units.
            prop_assert_eq!((a.clone() + b.clone()) + c.clone(), a.clone() + (b.clone() + c.clone()));
            prop_assert_eq!(a.clone() + b.clone(), b.clone() + a.clone());
            prop_assert_eq!(a.clone() + Rational::zero(), a.clone());
            prop_assert_eq!(a.clone() + (-a.clone()), Rational::zero());
            prop_assert_eq!((a.clone() * b.clone()) * c.clone(), a.clone() * (b.clone() * c.clone()));
            prop_assert_eq!(a.clone() * b.clone(), b.clone() * a.clone());
            prop_assert_eq!(a.clone() * Rational::one(), a.clone());
            prop_assert_eq!(
                a.clone() * (b.clone() + c.clone()),
                a.clone() * b.clone() + a.clone() * c.clone()
            );
        }

        #[test]
        fn inverse_laws(a in arb_rational()) {
            prop_assert_eq!(a.inv().inv(), a.clone());
            prop_assert_eq!(a.clone() * (a.clone() * a.inv()), a.clone());
        }

        #[test]
        fn signum_laws(a in arb_rational(), b in arb_rational()) {
            prop_assert_eq!((a.clone() * b.clone()).sign(), a.sign() * b.sign());
            prop_assert_eq!(a.inv().sign(), a.sign());
            // sign(x/x) = x/x (both are 1 for x ≠ 0, and 0 for x = 0).
            let xx = a.div_total(&a);
            prop_assert_eq!(xx.sign(), xx);
        }

        #[test]
        fn compare_agrees_with_ord(a in arb_rational(), b in arb_rational()) {
            prop_assert_eq!(a.compare(&b), a.cmp(&b));
        }

        #[test]
        fn probability_iff_ordered_between_0_and_1(a in arb_rational()) {
            let by_order = a.compare(&Rational::zero()) != Ordering::Less
                && a.compare(&Rational::one()) != Ordering::Greater;
            prop_assert_eq!(a.is_probability(), by_order);
        }
    }
}
