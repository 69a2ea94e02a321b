//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! These carry the vector-field coefficients of a group frame. All symbolic
//! manipulation (derivatives, products, operator application) happens here in
//! exact arithmetic; conversion to `f64` occurs only when a polynomial is
//! evaluated at a floating-point point.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, Zero};

/// Exact coefficient type.
pub type Rational = Ratio<i64>;

/// A sparse polynomial in `nvars` variables.
///
/// Terms are keyed by exponent vectors; canonical form never stores a zero
/// coefficient or duplicate exponent vectors.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
    // Mirror of `terms` with coefficients pre-converted, for fast evaluation.
    fterms: Vec<(Vec<u32>, f64)>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self::from_map(nvars, BTreeMap::new())
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0; nvars], c);
        }
        Self::from_map(nvars, terms)
    }

    /// The monomial `x_j` (0-based variable index).
    pub fn var(nvars: usize, j: usize) -> Self {
        assert!(j < nvars, "variable index out of range");
        let mut exps = vec![0; nvars];
        exps[j] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(exps, Rational::from_integer(1));
        Self::from_map(nvars, terms)
    }

    /// Builds a polynomial from raw `(exponents, coefficient)` pairs,
    /// merging duplicates and dropping zeros.
    pub fn from_terms<I>(nvars: usize, it: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let mut terms: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for (exps, c) in it {
            assert_eq!(exps.len(), nvars, "exponent vector length mismatch");
            let entry = terms.entry(exps).or_insert_with(Rational::zero);
            *entry += c;
        }
        terms.retain(|_, c| !c.is_zero());
        Self::from_map(nvars, terms)
    }

    fn from_map(nvars: usize, terms: BTreeMap<Vec<u32>, Rational>) -> Self {
        let fterms = terms
            .iter()
            .map(|(e, c)| (e.clone(), ratio_to_f64(*c)))
            .collect();
        Self { nvars, terms, fterms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], Rational)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    /// Coefficient of the monomial with the given exponent vector.
    pub fn coefficient(&self, exps: &[u32]) -> Rational {
        self.terms.get(exps).copied().unwrap_or_else(Rational::zero)
    }

    /// Coefficient of the degree-one monomial `x_j`.
    pub fn linear_coefficient(&self, j: usize) -> Rational {
        let mut exps = vec![0; self.nvars];
        exps[j] = 1;
        self.coefficient(&exps)
    }

    /// Largest variable index that actually occurs, if any.
    pub fn highest_var(&self) -> Option<usize> {
        self.terms
            .keys()
            .filter_map(|e| e.iter().rposition(|&k| k > 0))
            .max()
    }

    /// True when every monomial has the same weighted degree `deg` under the
    /// per-variable weights.
    pub fn is_weighted_homogeneous(&self, weights: &[u32], deg: u32) -> bool {
        assert_eq!(weights.len(), self.nvars);
        self.terms.keys().all(|e| {
            e.iter()
                .zip(weights)
                .map(|(&k, &w)| k * w)
                .sum::<u32>()
                == deg
        })
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            let entry = terms.entry(e.clone()).or_insert_with(Rational::zero);
            *entry += c;
        }
        terms.retain(|_, c| !c.is_zero());
        Self::from_map(self.nvars, terms)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect();
        Self::from_map(self.nvars, terms)
    }

    pub fn scale(&self, c: Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        let terms = self.terms.iter().map(|(e, k)| (e.clone(), k * c)).collect();
        Self::from_map(self.nvars, terms)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut terms: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let entry = terms.entry(exps).or_insert_with(Rational::zero);
                *entry += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Self::from_map(self.nvars, terms)
    }

    /// Formal partial derivative with respect to variable `j`.
    pub fn partial(&self, j: usize) -> Poly {
        assert!(j < self.nvars);
        let mut terms: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[j] == 0 {
                continue;
            }
            let mut exps = e.clone();
            exps[j] -= 1;
            let entry = terms.entry(exps).or_insert_with(Rational::zero);
            *entry += c * Rational::from_integer(e[j] as i64);
        }
        terms.retain(|_, c| !c.is_zero());
        Self::from_map(self.nvars, terms)
    }

    /// Floating-point evaluation; coefficients convert at this boundary only.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        let mut acc = 0.0;
        for (exps, c) in &self.fterms {
            let mut t = *c;
            for (j, &e) in exps.iter().enumerate() {
                if e > 0 {
                    t *= x[j].powi(e as i32);
                }
            }
            acc += t;
        }
        acc
    }

    /// Exact evaluation at a rational point.
    pub fn eval_rational(&self, x: &[Rational]) -> Rational {
        assert_eq!(x.len(), self.nvars);
        let mut acc = Rational::zero();
        for (exps, c) in &self.terms {
            let mut t = *c;
            for (j, &e) in exps.iter().enumerate() {
                for _ in 0..e {
                    t *= x[j];
                }
            }
            acc += t;
        }
        acc
    }
}

pub(crate) fn ratio_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exps, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c.is_negative() {
                write!(f, "({c})")?;
            } else {
                write!(f, "{c}")?;
            }
            for (j, &e) in exps.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{j}")?,
                    _ => write!(f, "*x{j}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

/// Convenience: `num/den` as a rational.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xj(n: usize, j: usize) -> Poly {
        Poly::var(n, j)
    }

    #[test]
    fn canonical_form_merges_and_drops_zeros() {
        let p = Poly::from_terms(
            2,
            vec![
                (vec![1, 0], rat(1, 2)),
                (vec![1, 0], rat(1, 2)),
                (vec![0, 1], rat(0, 1)),
            ],
        );
        assert_eq!(p, xj(2, 0));
        let q = p.sub(&xj(2, 0));
        assert!(q.is_zero());
    }

    #[test]
    fn derivative_and_product() {
        // d/dx0 (x0^2 * x1) = 2 x0 x1
        let p = xj(2, 0).mul(&xj(2, 0)).mul(&xj(2, 1));
        let d = p.partial(0);
        let expect = xj(2, 0).mul(&xj(2, 1)).scale(rat(2, 1));
        assert_eq!(d, expect);
        assert!(p.partial(0).partial(0).partial(0).partial(1).is_zero());
    }

    #[test]
    fn eval_matches_rational_eval() {
        // p = (1/3) x0^2 - 2 x1 + 5/12
        let p = Poly::from_terms(
            2,
            vec![
                (vec![2, 0], rat(1, 3)),
                (vec![0, 1], rat(-2, 1)),
                (vec![0, 0], rat(5, 12)),
            ],
        );
        let xr = [rat(3, 2), rat(-1, 4)];
        let exact = p.eval_rational(&xr);
        assert_eq!(exact, rat(3, 4) + rat(1, 2) + rat(5, 12));
        let xf = [1.5, -0.25];
        let approx = p.eval(&xf);
        assert!((approx - ratio_to_f64(exact)).abs() < 1e-15);
    }

    #[test]
    fn weighted_homogeneity() {
        // 2 x1 in a [2,1] stratification: weight of x1 is 1, degree 1.
        let p = xj(3, 1).scale(rat(2, 1));
        assert!(p.is_weighted_homogeneous(&[1, 1, 2], 1));
        assert!(!p.is_weighted_homogeneous(&[1, 1, 2], 2));
        // x2 (second-stratum variable) has weight 2.
        let q = xj(3, 2);
        assert!(q.is_weighted_homogeneous(&[1, 1, 2], 2));
    }

    #[test]
    fn coefficient_lookup() {
        let p = Poly::from_terms(3, vec![(vec![1, 0, 0], rat(7, 3))]);
        assert_eq!(p.linear_coefficient(0), rat(7, 3));
        assert_eq!(p.linear_coefficient(1), rat(0, 1));
        assert_eq!(p.highest_var(), Some(0));
        assert_eq!(Poly::zero(3).highest_var(), None);
    }
}
