//! Stratified (homogeneous Carnot) groups presented by polynomial frames.
//!
//! A group on `R^n` with strata dimensions `[N_1, ..., N_r]` is stored through
//! the polynomial coefficients of its first-stratum generators
//!
//! ```text
//! X_k = d/dx'_k + sum_{l,m} a_{k,m}^{(l)}(x', ..., x^{(l-1)}) d/dx_m^{(l)}
//! ```
//!
//! Coefficients are exact rational polynomials, validated at construction for
//! stratum dependence and dilation homogeneity. Built-ins (Euclidean space,
//! the Heisenberg group, the Engel group) also carry their composition law as
//! exact polynomials in `(x, y)`, which makes left-invariance checkable to
//! machine precision.

use std::collections::BTreeMap;

use crate::error::{HardyError, Result};
use crate::poly::{rat, Poly, Rational};
use crate::quadrature::{RuleSpec, SupportBox};
use crate::testfn::{SmoothFn, TestFunction};

/// Key for a generator coefficient: (generator index, stratum index >= 1,
/// coordinate index within the stratum). All 0-based.
pub type CoeffKey = (usize, usize, usize);

/// Group composition law as polynomials in the 2n variables `(x, y)`.
#[derive(Clone, Debug)]
pub struct GroupLaw {
    polys: Vec<Poly>,
    // jac[k][j] = d z_k / d y_j, exact.
    jac_y: Vec<Vec<Poly>>,
}

impl GroupLaw {
    fn new(polys: Vec<Poly>) -> Self {
        let n = polys.len();
        let jac_y = polys
            .iter()
            .map(|p| (0..n).map(|j| p.partial(n + j)).collect())
            .collect();
        Self { polys, jac_y }
    }
}

/// A stratified group given by its strata dimensions and generator
/// coefficients. Immutable after construction; all operations are pure.
#[derive(Clone, Debug)]
pub struct GroupSpec {
    name: String,
    strata: Vec<usize>,
    n: usize,
    hom_dim: usize,
    coeffs: BTreeMap<CoeffKey, Poly>,
    // fields[i][j]: j-th ambient component of X_i (constants on stratum 1).
    fields: Vec<Vec<Poly>>,
    // nderiv[i][j] = X_i applied to fields[i][j].
    nderiv: Vec<Vec<Poly>>,
    law: Option<GroupLaw>,
}

impl GroupSpec {
    /// Validates and assembles a group from raw coefficient polynomials.
    pub fn new(
        name: impl Into<String>,
        strata: Vec<usize>,
        coeffs: BTreeMap<CoeffKey, Poly>,
    ) -> Result<Self> {
        let name = name.into();
        if strata.is_empty() || strata.iter().any(|&d| d == 0) {
            return Err(HardyError::InvalidInput(
                "strata dimensions must be positive".into(),
            ));
        }
        let n: usize = strata.iter().sum();
        let hom_dim: usize = strata.iter().enumerate().map(|(l, d)| (l + 1) * d).sum();
        let weights: Vec<u32> = strata
            .iter()
            .enumerate()
            .flat_map(|(l, &d)| std::iter::repeat(l as u32 + 1).take(d))
            .collect();
        let offset = |l: usize| -> usize { strata[..l].iter().sum() };

        for (&(k, l, m), p) in &coeffs {
            if k >= strata[0] || l == 0 || l >= strata.len() || m >= strata[l] {
                return Err(HardyError::InvalidInput(format!(
                    "coefficient key ({k},{l},{m}) out of range for strata {strata:?}"
                )));
            }
            if p.nvars() != n {
                return Err(HardyError::InvalidInput(format!(
                    "coefficient ({k},{l},{m}) has {} variables, expected {n}",
                    p.nvars()
                )));
            }
            if let Some(v) = p.highest_var() {
                if v >= offset(l) {
                    return Err(HardyError::InvalidInput(format!(
                        "coefficient ({k},{l},{m}) depends on stratum >= {l}"
                    )));
                }
            }
            if !p.is_weighted_homogeneous(&weights, l as u32) {
                return Err(HardyError::InvalidInput(format!(
                    "coefficient ({k},{l},{m}) is not homogeneous of weighted degree {l}"
                )));
            }
        }

        let mut g = Self {
            name,
            strata,
            n,
            hom_dim,
            coeffs,
            fields: Vec::new(),
            nderiv: Vec::new(),
            law: None,
        };
        g.fields = (0..g.first_stratum_dim())
            .map(|i| (0..n).map(|j| g.component_poly(i, j)).collect())
            .collect();
        g.nderiv = (0..g.first_stratum_dim())
            .map(|i| {
                (0..n)
                    .map(|j| g.apply_to_poly(i, &g.fields[i][j]))
                    .collect()
            })
            .collect();
        Ok(g)
    }

    fn component_poly(&self, i: usize, j: usize) -> Poly {
        let (l, m) = self.split_index(j);
        if l == 0 {
            if m == i {
                Poly::constant(self.n, rat(1, 1))
            } else {
                Poly::zero(self.n)
            }
        } else {
            self.coeffs
                .get(&(i, l, m))
                .cloned()
                .unwrap_or_else(|| Poly::zero(self.n))
        }
    }

    /// Euclidean space `R^n`: one stratum, identity frame, abelian law.
    pub fn euclidean(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(HardyError::InvalidInput("dimension must be positive".into()));
        }
        let mut g = Self::new(format!("euclidean:{n}"), vec![n], BTreeMap::new())?;
        let polys = (0..n)
            .map(|j| Poly::var(2 * n, j).add(&Poly::var(2 * n, n + j)))
            .collect();
        g.law = Some(GroupLaw::new(polys));
        Ok(g)
    }

    /// The Heisenberg group on `R^3` with generators
    /// `X_1 = d_1 + 2 x_2 d_3`, `X_2 = d_2 - 2 x_1 d_3`.
    pub fn heisenberg() -> Self {
        let n = 3;
        let mut coeffs = BTreeMap::new();
        coeffs.insert((0, 1, 0), Poly::var(n, 1).scale(rat(2, 1)));
        coeffs.insert((1, 1, 0), Poly::var(n, 0).scale(rat(-2, 1)));
        let mut g = Self::new("heisenberg", vec![2, 1], coeffs).expect("builtin");
        // z_3 = x_3 + y_3 + 2 (x_2 y_1 - x_1 y_2), forced by left-invariance
        // of the frame above.
        let m = 2 * n;
        let z1 = Poly::var(m, 0).add(&Poly::var(m, 3));
        let z2 = Poly::var(m, 1).add(&Poly::var(m, 4));
        let z3 = Poly::var(m, 2)
            .add(&Poly::var(m, 5))
            .add(&Poly::var(m, 1).mul(&Poly::var(m, 3)).scale(rat(2, 1)))
            .add(&Poly::var(m, 0).mul(&Poly::var(m, 4)).scale(rat(-2, 1)));
        g.law = Some(GroupLaw::new(vec![z1, z2, z3]));
        g
    }

    /// The Engel group on `R^4` (step 3) with generators
    ///
    /// ```text
    /// X_1 = d_1 - (x_2/2) d_3 - (x_3/2 - x_1 x_2/12) d_4
    /// X_2 = d_2 + (x_1/2) d_3 + (x_1^2/12) d_4
    /// ```
    pub fn engel() -> Self {
        let n = 4;
        let mut coeffs = BTreeMap::new();
        coeffs.insert((0, 1, 0), Poly::var(n, 1).scale(rat(-1, 2)));
        coeffs.insert((1, 1, 0), Poly::var(n, 0).scale(rat(1, 2)));
        coeffs.insert(
            (0, 2, 0),
            Poly::var(n, 2)
                .scale(rat(-1, 2))
                .add(&Poly::var(n, 0).mul(&Poly::var(n, 1)).scale(rat(1, 12))),
        );
        coeffs.insert((1, 2, 0), Poly::var(n, 0).mul(&Poly::var(n, 0)).scale(rat(1, 12)));
        let mut g = Self::new("engel", vec![2, 1, 1], coeffs).expect("builtin");

        // Composition law solved from left-invariance of the frame above with
        // identity 0; unique by the bracket-generating property.
        let m = 2 * n;
        let term = |pairs: &[(usize, u32)], c: Rational| -> Poly {
            let mut exps = vec![0u32; m];
            for &(v, e) in pairs {
                exps[v] += e;
            }
            Poly::from_terms(m, vec![(exps, c)])
        };
        let z1 = Poly::var(m, 0).add(&Poly::var(m, 4));
        let z2 = Poly::var(m, 1).add(&Poly::var(m, 5));
        let z3 = Poly::var(m, 2)
            .add(&Poly::var(m, 6))
            .add(&term(&[(0, 1), (5, 1)], rat(1, 2)))
            .add(&term(&[(1, 1), (4, 1)], rat(-1, 2)));
        let z4 = Poly::var(m, 3)
            .add(&Poly::var(m, 7))
            .add(&term(&[(0, 1), (6, 1)], rat(1, 3)))
            .add(&term(&[(2, 1), (4, 1)], rat(-1, 2)))
            .add(&term(&[(0, 2), (5, 1)], rat(1, 12)))
            .add(&term(&[(0, 1), (1, 1), (4, 1)], rat(1, 12)))
            .add(&term(&[(1, 1), (4, 2)], rat(1, 6)));
        g.law = Some(GroupLaw::new(vec![z1, z2, z3, z4]));
        g
    }

    /// A step-2 group from its structure constants: `a[s][m][i]` multiplies
    /// `x'_m` in the `d/dx''_s` coefficient of `X_i`. Shape `N2 x N x N`.
    pub fn step2(n1: usize, n2: usize, a: &[Vec<Vec<Rational>>]) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(HardyError::InvalidInput("strata must be nonempty".into()));
        }
        if a.len() != n2 || a.iter().any(|s| s.len() != n1 || s.iter().any(|m| m.len() != n1)) {
            return Err(HardyError::InvalidInput(format!(
                "structure constants must have shape {n2} x {n1} x {n1}"
            )));
        }
        let n = n1 + n2;
        let mut coeffs = BTreeMap::new();
        for i in 0..n1 {
            for s in 0..n2 {
                let p = (0..n1).fold(Poly::zero(n), |acc, m| {
                    acc.add(&Poly::var(n, m).scale(a[s][m][i]))
                });
                if !p.is_zero() {
                    coeffs.insert((i, 1, s), p);
                }
            }
        }
        Self::new("step2", vec![n1, n2], coeffs)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn strata(&self) -> &[usize] {
        &self.strata
    }

    pub fn step(&self) -> usize {
        self.strata.len()
    }

    /// Ambient (topological) dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Dimension of the first stratum (number of generators).
    pub fn first_stratum_dim(&self) -> usize {
        self.strata[0]
    }

    /// Homogeneous dimension `Q = sum l * N_l`.
    pub fn homogeneous_dim(&self) -> usize {
        self.hom_dim
    }

    pub fn has_law(&self) -> bool {
        self.law.is_some()
    }

    /// Dilation weight (stratum number) of each ambient coordinate.
    pub fn weights(&self) -> Vec<u32> {
        self.strata
            .iter()
            .enumerate()
            .flat_map(|(l, &d)| std::iter::repeat(l as u32 + 1).take(d))
            .collect()
    }

    /// Splits an ambient index into (stratum index, index within stratum).
    pub fn split_index(&self, j: usize) -> (usize, usize) {
        let mut rest = j;
        for (l, &d) in self.strata.iter().enumerate() {
            if rest < d {
                return (l, rest);
            }
            rest -= d;
        }
        panic!("ambient index {j} out of range");
    }

    pub fn coeff(&self, key: CoeffKey) -> Option<&Poly> {
        self.coeffs.get(&key)
    }

    /// Ambient component polynomial `X_i(x)_j`.
    pub fn field_poly(&self, i: usize, j: usize) -> &Poly {
        &self.fields[i][j]
    }

    /// `X_i` applied to its own j-th component, as an exact polynomial.
    pub fn normal_derivative_poly(&self, i: usize, j: usize) -> &Poly {
        &self.nderiv[i][j]
    }

    /// The dilation `delta_lambda` acting on a point.
    pub fn dilate(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        self.weights()
            .iter()
            .zip(x)
            .map(|(&w, &t)| lambda.powi(w as i32) * t)
            .collect()
    }

    /// Applies `X_i` as a differential operator to a polynomial.
    pub fn apply_to_poly(&self, i: usize, p: &Poly) -> Poly {
        assert!(i < self.first_stratum_dim(), "generator index out of range");
        let mut out = p.partial(i);
        for (&(k, l, m), c) in &self.coeffs {
            if k != i {
                continue;
            }
            let j = self.stratum_offset(l) + m;
            out = out.add(&c.mul(&p.partial(j)));
        }
        out
    }

    fn stratum_offset(&self, l: usize) -> usize {
        self.strata[..l].iter().sum()
    }

    /// Coefficient vector `X_i(x)` of the i-th generator.
    pub fn vector_field_at(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.fill_vector_field(i, x, &mut out);
        out
    }

    pub fn fill_vector_field(&self, i: usize, x: &[f64], out: &mut [f64]) {
        assert!(i < self.first_stratum_dim(), "generator index out of range");
        let n1 = self.first_stratum_dim();
        for (j, o) in out.iter_mut().enumerate() {
            *o = if j < n1 {
                if j == i {
                    1.0
                } else {
                    0.0
                }
            } else {
                self.fields[i][j].eval(x)
            };
        }
    }

    /// Exact frame evaluation at a rational point.
    pub fn vector_field_at_rational(&self, i: usize, x: &[Rational]) -> Vec<Rational> {
        assert!(i < self.first_stratum_dim());
        (0..self.n)
            .map(|j| self.fields[i][j].eval_rational(x))
            .collect()
    }

    /// `(X_i u)(x)` via the inner product of the frame with the Euclidean
    /// gradient of `u`.
    pub fn apply_field(&self, i: usize, u: &dyn SmoothFn, x: &[f64]) -> f64 {
        let field = self.vector_field_at(i, x);
        let grad = u.gradient(x);
        dot(&field, &grad)
    }

    /// Horizontal gradient `(X_1 u, ..., X_N u)(x)`.
    pub fn horizontal_gradient(&self, u: &dyn SmoothFn, x: &[f64]) -> Vec<f64> {
        let grad = u.gradient(x);
        let mut field = vec![0.0; self.n];
        (0..self.first_stratum_dim())
            .map(|i| {
                self.fill_vector_field(i, x, &mut field);
                dot(&field, &grad)
            })
            .collect()
    }

    /// Sub-Laplacian `sum_k X_k(X_k u)(x)`, expanded through the product rule
    /// with exact coefficient derivatives and the analytic Hessian of `u`.
    pub fn sub_laplacian(&self, u: &dyn SmoothFn, x: &[f64]) -> f64 {
        let n = self.n;
        let grad = u.gradient(x);
        let hess = u.hessian(x);
        let mut field = vec![0.0; n];
        let mut acc = 0.0;
        for k in 0..self.first_stratum_dim() {
            self.fill_vector_field(k, x, &mut field);
            for j in 0..n {
                let q = &self.nderiv[k][j];
                if !q.is_zero() {
                    acc += q.eval(x) * grad[j];
                }
            }
            for a in 0..n {
                if field[a] == 0.0 {
                    continue;
                }
                for b in 0..n {
                    acc += field[a] * field[b] * hess[a * n + b];
                }
            }
        }
        acc
    }

    /// Group composition `x . y` (built-ins only).
    pub fn group_law(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let law = self.law()?;
        let xy = concat(x, y);
        Ok(law.polys.iter().map(|p| p.eval(&xy)).collect())
    }

    /// Exact composition at rational points.
    pub fn group_law_rational(&self, x: &[Rational], y: &[Rational]) -> Result<Vec<Rational>> {
        let law = self.law()?;
        let xy: Vec<Rational> = x.iter().chain(y).copied().collect();
        Ok(law.polys.iter().map(|p| p.eval_rational(&xy)).collect())
    }

    fn law(&self) -> Result<&GroupLaw> {
        self.law
            .as_ref()
            .ok_or_else(|| HardyError::NoGroupLaw(self.name.clone()))
    }

    /// Residual `|X_i(u . L_x)(y) - (X_i u)(x . y)|`; values near zero
    /// certify left-invariance of the frame under the stored law.
    pub fn check_left_invariance(
        &self,
        i: usize,
        u: &dyn SmoothFn,
        x: &[f64],
        y: &[f64],
    ) -> Result<f64> {
        let law = self.law()?;
        let n = self.n;
        let xy = concat(x, y);
        let z: Vec<f64> = law.polys.iter().map(|p| p.eval(&xy)).collect();
        let grad_z = u.gradient(&z);

        // Pushforward side: X_i at y, chained through d(x.y)/dy.
        let field_y = self.vector_field_at(i, y);
        let mut lhs = 0.0;
        for j in 0..n {
            if field_y[j] == 0.0 {
                continue;
            }
            let mut chain = 0.0;
            for k in 0..n {
                let dz = &law.jac_y[k][j];
                if !dz.is_zero() {
                    chain += dz.eval(&xy) * grad_z[k];
                }
            }
            lhs += field_y[j] * chain;
        }

        let rhs = dot(&self.vector_field_at(i, &z), &grad_z);
        Ok((lhs - rhs).abs())
    }

    /// Quadrature residual of `int_box sum_k X_k f_k dz` for compactly
    /// supported fields; the exact value is zero.
    pub fn check_divergence(&self, fields: &[TestFunction], domain: &SupportBox) -> Result<f64> {
        if fields.len() != self.first_stratum_dim() {
            return Err(HardyError::InvalidInput(format!(
                "need {} component functions, got {}",
                self.first_stratum_dim(),
                fields.len()
            )));
        }
        for (k, f) in fields.iter().enumerate() {
            if !f.support_box().strictly_inside(domain) {
                return Err(HardyError::SupportViolation(format!(
                    "component {k} support leaves the integration box"
                )));
            }
        }
        let spec = divergence_rule(self.n);
        let rule = spec.over(domain.clone());
        let value = rule.integrate_multi_with(1, || {
            let mut field = vec![0.0; self.n];
            let mut grad = vec![0.0; self.n];
            move |x: &[f64], out: &mut [f64]| {
                let mut acc = 0.0;
                for (k, f) in fields.iter().enumerate() {
                    self.fill_vector_field(k, x, &mut field);
                    f.fill_gradient(x, &mut grad);
                    acc += dot(&field, &grad);
                }
                out[0] = acc;
            }
        })[0];
        Ok(value.abs())
    }
}

fn divergence_rule(dim: usize) -> RuleSpec {
    match dim {
        0..=2 => RuleSpec::Gauss { nodes: 64 },
        3 => RuleSpec::Gauss { nodes: 48 },
        4 => RuleSpec::Gauss { nodes: 28 },
        _ => RuleSpec::MonteCarlo { samples: 2_000_000, seed: 0x517a },
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn concat(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().chain(y).copied().collect()
}
