//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! The decomposition tables are built by repeated applications of the merge
//! identity, whose coefficients are integer-coefficient polynomials in
//! difference ratios. Keeping the bookkeeping exact over the rationals makes
//! table construction free of rounding, isolates floating point to the final
//! evaluation, and gives tests a canonical form to pin: terms are stored in a
//! BTreeMap keyed by exponent vectors, coefficients always reduced, zero
//! coefficients never stored.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;

pub type Exponents = Vec<u32>;

#[derive(Clone, PartialEq, Eq)]
pub struct MultiPoly {
    num_vars: usize,
    terms: BTreeMap<Exponents, BigRational>,
}

impl MultiPoly {
    pub fn zero(num_vars: usize) -> Self {
        Self { num_vars, terms: BTreeMap::new() }
    }

    pub fn constant(num_vars: usize, c: BigRational) -> Self {
        let mut p = Self::zero(num_vars);
        if !c.is_zero() {
            p.terms.insert(vec![0; num_vars], c);
        }
        p
    }

    pub fn one(num_vars: usize) -> Self {
        Self::constant(num_vars, BigRational::one())
    }

    /// The monomial `c * prod x_i^(exps_i)`.
    pub fn monomial(exps: Exponents, c: BigRational) -> Self {
        let mut p = Self::zero(exps.len());
        if !c.is_zero() {
            p.terms.insert(exps, c);
        }
        p
    }

    /// The variable x_idx as a polynomial in `num_vars` variables.
    pub fn var(num_vars: usize, idx: usize) -> Self {
        assert!(idx < num_vars);
        let mut exps = vec![0; num_vars];
        exps[idx] = 1;
        Self::monomial(exps, BigRational::one())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.num_vars, other.num_vars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            add_term(&mut out.terms, e.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.num_vars);
        }
        let mut out = Self::zero(self.num_vars);
        for (e, a) in &self.terms {
            out.terms.insert(e.clone(), a * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.num_vars, other.num_vars);
        let mut out = Self::zero(self.num_vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                add_term(&mut out.terms, e, ca * cb);
            }
        }
        out
    }

    /// Reinterprets the polynomial in a larger variable set; existing
    /// variables keep their indices, new ones get exponent 0.
    pub fn extend_vars(&self, num_vars: usize) -> Self {
        assert!(num_vars >= self.num_vars);
        let mut out = Self::zero(num_vars);
        for (e, c) in &self.terms {
            let mut exps = e.clone();
            exps.resize(num_vars, 0);
            out.terms.insert(exps, c.clone());
        }
        out
    }

    /// A univariate polynomial placed on variable `idx` of a `num_vars`
    /// ambient set.
    pub fn embed_univariate(p: &Self, num_vars: usize, idx: usize) -> Self {
        assert_eq!(p.num_vars, 1);
        assert!(idx < num_vars);
        let mut out = Self::zero(num_vars);
        for (e, c) in &p.terms {
            let mut exps = vec![0; num_vars];
            exps[idx] = e[0];
            out.terms.insert(exps, c.clone());
        }
        out
    }

    pub fn eval(&self, xs: &[f64]) -> f64 {
        assert_eq!(xs.len(), self.num_vars);
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = rational_to_f64(c);
            for (x, &k) in xs.iter().zip(e) {
                if k > 0 {
                    t *= x.powi(k as i32);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_rational(&self, xs: &[BigRational]) -> BigRational {
        assert_eq!(xs.len(), self.num_vars);
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &k) in xs.iter().zip(e) {
                for _ in 0..k {
                    t *= x;
                }
            }
            acc += t;
        }
        acc
    }

    /// Smallest exponent of variable `idx` over all monomials; None for the
    /// zero polynomial.
    pub fn min_exponent(&self, idx: usize) -> Option<u32> {
        assert!(idx < self.num_vars);
        self.terms.keys().map(|e| e[idx]).min()
    }

    /// True when every monomial has exponent at least 1 in every variable.
    pub fn all_vars_positive(&self) -> bool {
        (0..self.num_vars).all(|v| self.min_exponent(v).map_or(true, |m| m >= 1))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }
}

fn add_term(terms: &mut BTreeMap<Exponents, BigRational>, e: Exponents, c: BigRational) {
    use std::collections::btree_map::Entry;
    if c.is_zero() {
        return;
    }
    match terms.entry(e) {
        Entry::Vacant(v) => {
            v.insert(c);
        }
        Entry::Occupied(mut o) => {
            *o.get_mut() += c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    // to_f64 on a Ratio<BigInt> divides after converting both parts; for the
    // magnitudes arising here (table coefficients) this is exact enough, but
    // guard against huge numerator/denominator overflowing to inf.
    match r.to_f64() {
        Some(v) if v.is_finite() => v,
        _ => {
            let n = r.numer().to_f64().unwrap_or(f64::INFINITY * sign_of(r.numer()));
            let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
            n / d
        }
    }
}

fn sign_of(x: &BigInt) -> f64 {
    if x.is_negative() {
        -1.0
    } else {
        1.0
    }
}

/// Exact binomial coefficient C(n, k).
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 0..k {
        num *= BigInt::from(n - j);
        den *= BigInt::from(j + 1);
    }
    num / den
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    write!(f, "*x{v}^{k}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn arithmetic_and_canonical_form() {
        let x = MultiPoly::var(2, 0);
        let y = MultiPoly::var(2, 1);
        let p = x.add(&y).mul(&x.add(&y)); // (x+y)^2
        assert_eq!(p.num_terms(), 3);
        assert_eq!(p.eval(&[2.0, 3.0]), 25.0);
        // cancellation removes the term entirely
        let q = p.add(&x.mul(&y).scale(&r(-2, 1)));
        assert_eq!(q.num_terms(), 2);
        assert!(q.all_vars_positive() == false); // x^2 has no y
    }

    #[test]
    fn exact_evaluation() {
        let x = MultiPoly::var(1, 0);
        let p = x.scale(&r(1, 3)).add(&MultiPoly::one(1)); // 1 + x/3
        let v = p.eval_rational(&[r(3, 2)]);
        assert_eq!(v, r(3, 2));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(0, 0), BigInt::from(1));
        assert_eq!(binomial(3, 5), BigInt::from(0));
        // Pascal
        for n in 1..12u64 {
            for k in 1..n {
                assert_eq!(binomial(n - 1, k) + binomial(n - 1, k - 1), binomial(n, k));
            }
        }
    }
}
