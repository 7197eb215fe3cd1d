//! The exact coefficient ring Q[q^r : r in Q] and its truncation to power
//! series in hbar modulo hbar^3.
//!
//! Elements are finite sums `sum_r c_r q^r` with rational coefficients and
//! rational exponents. The representation is canonical: terms are keyed by
//! exponent in reduced form, zero coefficients are never stored, and the
//! term order is ascending in the exponent, so structural equality is ring
//! equality and serialization is deterministic.
//!
//! The truncation homomorphism sends q^c to `1 + c hbar + (c^2/2) hbar^2`,
//! i.e. it realizes q = e^hbar modulo hbar^3, extended linearly.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

/// Exact rational scalar used for all coefficients and exponents.
pub type Rat = BigRational;

/// Shorthand for an integer rational.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Shorthand for the rational n/d.
pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// A Laurent element in q with rational exponents: `sum c_r q^r`.
#[derive(Clone, PartialEq, Eq, Default, Hash, PartialOrd, Ord)]
pub struct QScalar {
    /// exponent -> coefficient; no zero coefficient is ever stored.
    terms: BTreeMap<Rat, Rat>,
}

impl QScalar {
    pub fn zero() -> Self {
        QScalar { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::q_power(Rat::zero())
    }

    /// The single-term element q^r.
    pub fn q_power(r: Rat) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(r, Rat::one());
        QScalar { terms }
    }

    /// The constant element c.
    pub fn from_rat(c: Rat) -> Self {
        let mut s = Self::zero();
        if !c.is_zero() {
            s.terms.insert(Rat::zero(), c);
        }
        s
    }

    pub fn from_int(c: i64) -> Self {
        Self::from_rat(rat(c))
    }

    /// The term c q^r.
    pub fn term(c: Rat, r: Rat) -> Self {
        let mut s = Self::zero();
        if !c.is_zero() {
            s.terms.insert(r, c);
        }
        s
    }

    /// The ubiquitous factor q - q^{-1}.
    pub fn q_minus_qinv() -> Self {
        Self::q_power(Rat::one()) - Self::q_power(-Rat::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self.terms.iter().next().is_some_and(|(r, c)| r.is_zero() && c.is_one())
    }

    /// Iterate (exponent, coefficient) pairs in ascending exponent order.
    pub fn iter(&self) -> impl Iterator<Item = (&Rat, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The coefficient when the element is a constant (a single q^0 term or zero).
    pub fn as_constant(&self) -> Option<Rat> {
        if self.is_zero() {
            return Some(Rat::zero());
        }
        if self.terms.len() == 1 {
            if let Some((r, c)) = self.terms.iter().next() {
                if r.is_zero() {
                    return Some(c.clone());
                }
            }
        }
        None
    }

    /// Substitute q -> q^{-1}, negating every exponent.
    pub fn subst_q_inverse(&self) -> Self {
        let terms = self.terms.iter().map(|(r, c)| (-r.clone(), c.clone())).collect();
        QScalar { terms }
    }

    fn add_term(&mut self, r: Rat, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(r) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let terms = self.terms.iter().map(|(r, v)| (r.clone(), v * c)).collect();
        QScalar { terms }
    }

    /// Largest denominator among the exponents (diagnostic; 1 for constants).
    pub fn max_exponent_denominator(&self) -> BigInt {
        self.terms
            .keys()
            .map(|r| r.denom().abs())
            .max()
            .unwrap_or_else(BigInt::one)
    }

    /// Truncation homomorphism: q^c -> 1 + c hbar + (c^2/2) hbar^2, linearly.
    pub fn hbar_expand(&self) -> HSeries {
        let mut out = HSeries::zero();
        for (r, c) in &self.terms {
            out.c0 += c;
            out.c1 += c * r;
            out.c2 += c * r * r / rat(2);
        }
        out
    }

    /// Terms as (coeff numerator, coeff denominator, exponent numerator,
    /// exponent denominator) quadruples, ascending in the exponent.
    pub fn to_quadruples(&self) -> Vec<[BigInt; 4]> {
        self.terms
            .iter()
            .map(|(r, c)| {
                [c.numer().clone(), c.denom().clone(), r.numer().clone(), r.denom().clone()]
            })
            .collect()
    }
}

impl Add for QScalar {
    type Output = QScalar;
    fn add(mut self, rhs: QScalar) -> QScalar {
        for (r, c) in rhs.terms {
            self.add_term(r, c);
        }
        self
    }
}

impl AddAssign for QScalar {
    fn add_assign(&mut self, rhs: QScalar) {
        for (r, c) in rhs.terms {
            self.add_term(r, c);
        }
    }
}

impl<'a> AddAssign<&'a QScalar> for QScalar {
    fn add_assign(&mut self, rhs: &'a QScalar) {
        for (r, c) in &rhs.terms {
            self.add_term(r.clone(), c.clone());
        }
    }
}

impl Sub for QScalar {
    type Output = QScalar;
    fn sub(mut self, rhs: QScalar) -> QScalar {
        for (r, c) in rhs.terms {
            self.add_term(r, -c);
        }
        self
    }
}

impl SubAssign for QScalar {
    fn sub_assign(&mut self, rhs: QScalar) {
        for (r, c) in rhs.terms {
            self.add_term(r, -c);
        }
    }
}

impl Neg for QScalar {
    type Output = QScalar;
    fn neg(self) -> QScalar {
        let terms = self.terms.into_iter().map(|(r, c)| (r, -c)).collect();
        QScalar { terms }
    }
}

impl Mul for QScalar {
    type Output = QScalar;
    fn mul(self, rhs: QScalar) -> QScalar {
        &self * &rhs
    }
}

impl Mul<&QScalar> for &QScalar {
    type Output = QScalar;
    fn mul(self, rhs: &QScalar) -> QScalar {
        let mut out = QScalar::zero();
        for (ra, ca) in &self.terms {
            for (rb, cb) in &rhs.terms {
                out.add_term(ra + rb, ca * cb);
            }
        }
        out
    }
}

impl MulAssign for QScalar {
    fn mul_assign(&mut self, rhs: QScalar) {
        *self = &*self * &rhs;
    }
}

impl fmt::Display for QScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (r, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if r.is_zero() {
                write!(f, "{mag}")?;
            } else {
                if !mag.is_one() {
                    write!(f, "{mag}*")?;
                }
                if r.is_one() {
                    write!(f, "q")?;
                } else {
                    write!(f, "q^{{{r}}}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for QScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for QScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let quads = self.to_quadruples();
        let mut seq = serializer.serialize_seq(Some(quads.len()))?;
        for q in quads {
            seq.serialize_element(&[
                q[0].to_string(),
                q[1].to_string(),
                q[2].to_string(),
                q[3].to_string(),
            ])?;
        }
        seq.end()
    }
}

/// A power series in hbar truncated modulo hbar^3.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HSeries {
    pub c0: Rat,
    pub c1: Rat,
    pub c2: Rat,
}

impl HSeries {
    pub fn zero() -> Self {
        HSeries { c0: Rat::zero(), c1: Rat::zero(), c2: Rat::zero() }
    }

    pub fn one() -> Self {
        HSeries { c0: Rat::one(), c1: Rat::zero(), c2: Rat::zero() }
    }

    pub fn new(c0: Rat, c1: Rat, c2: Rat) -> Self {
        HSeries { c0, c1, c2 }
    }

    pub fn is_zero(&self) -> bool {
        self.c0.is_zero() && self.c1.is_zero() && self.c2.is_zero()
    }
}

impl Add for HSeries {
    type Output = HSeries;
    fn add(self, rhs: HSeries) -> HSeries {
        HSeries { c0: self.c0 + rhs.c0, c1: self.c1 + rhs.c1, c2: self.c2 + rhs.c2 }
    }
}

impl Sub for HSeries {
    type Output = HSeries;
    fn sub(self, rhs: HSeries) -> HSeries {
        HSeries { c0: self.c0 - rhs.c0, c1: self.c1 - rhs.c1, c2: self.c2 - rhs.c2 }
    }
}

impl Neg for HSeries {
    type Output = HSeries;
    fn neg(self) -> HSeries {
        HSeries { c0: -self.c0, c1: -self.c1, c2: -self.c2 }
    }
}

impl Mul for HSeries {
    type Output = HSeries;
    // Terms of order >= 3 are discarded.
    fn mul(self, rhs: HSeries) -> HSeries {
        HSeries {
            c0: &self.c0 * &rhs.c0,
            c1: &self.c0 * &rhs.c1 + &self.c1 * &rhs.c0,
            c2: &self.c0 * &rhs.c2 + &self.c1 * &rhs.c1 + &self.c2 * &rhs.c0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QScalar {
        QScalar::q_power(rat(1))
    }

    fn qinv() -> QScalar {
        QScalar::q_power(rat(-1))
    }

    #[test]
    fn exponent_cancellation() {
        assert_eq!(q() * qinv(), QScalar::one());
    }

    #[test]
    fn distributivity_over_half_power() {
        let lhs = (q() - qinv()) * QScalar::q_power(ratio(1, 2));
        let rhs = QScalar::q_power(ratio(3, 2)) - QScalar::q_power(ratio(-1, 2));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn binomial_square() {
        let d = QScalar::q_minus_qinv();
        let sq = &d * &d;
        let expected = QScalar::q_power(rat(2)) - QScalar::from_int(2) + QScalar::q_power(rat(-2));
        assert_eq!(sq, expected);
    }

    #[test]
    fn q_power_exponent_law() {
        let a = ratio(3, 4);
        let b = ratio(-5, 6);
        assert_eq!(
            QScalar::q_power(a.clone()) * QScalar::q_power(b.clone()),
            QScalar::q_power(a + b)
        );
    }

    #[test]
    fn q_power_zero_is_one() {
        assert_eq!(QScalar::q_power(rat(0)), QScalar::one());
    }

    #[test]
    fn hbar_expand_one() {
        assert_eq!(QScalar::one().hbar_expand(), HSeries::one());
    }

    #[test]
    fn hbar_expand_q_minus_qinv() {
        // e^h - e^{-h} = 2h + O(h^3)
        let got = QScalar::q_minus_qinv().hbar_expand();
        assert_eq!(got, HSeries::new(rat(0), rat(2), rat(0)));
    }

    #[test]
    fn hbar_expand_half_power() {
        let got = QScalar::q_power(ratio(1, 2)).hbar_expand();
        assert_eq!(got, HSeries::new(rat(1), ratio(1, 2), ratio(1, 8)));
    }

    #[test]
    fn canonical_form_drops_zeros() {
        let s = q() - q();
        assert!(s.is_zero());
        assert_eq!(s.num_terms(), 0);
    }

    #[test]
    fn display_renders_sorted_terms() {
        let s = q() - qinv();
        assert_eq!(s.to_string(), "-q^{-1} + q");
    }

    #[test]
    fn quadruples_ascending_in_exponent() {
        let s = QScalar::term(ratio(-1, 3), ratio(5, 2)) + QScalar::from_int(7);
        let quads = s.to_quadruples();
        assert_eq!(quads.len(), 2);
        assert_eq!(quads[0], [7.into(), 1.into(), 0.into(), 1.into()]);
        assert_eq!(quads[1], [(-1).into(), 3.into(), 5.into(), 2.into()]);
    }

    #[test]
    fn subst_q_inverse_is_involutive() {
        let s = QScalar::term(ratio(2, 3), ratio(1, 2)) - QScalar::q_power(rat(3));
        assert_eq!(s.subst_q_inverse().subst_q_inverse(), s);
    }
}
