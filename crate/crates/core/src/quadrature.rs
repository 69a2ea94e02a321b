//! Numerical integration over axis-aligned boxes.
//!
//! Three rule families: tensor Gauss-Legendre (primary), midpoint Riemann
//! (independent cross-check), and seeded Monte Carlo for high dimensions.
//! Integration always runs over the integrand's compact support box, so no
//! truncation error enters beyond the rule itself.
//!
//! Parallel evaluation uses fixed-size chunks combined in index order, so a
//! result is bit-identical regardless of the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HardyError, Result};

const PAR_CHUNK: usize = 1 << 14;

/// Closed axis-aligned box `Π [lo_i, hi_i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SupportBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(HardyError::InvalidInput(
                "box bounds must be nonempty and of equal length".into(),
            ));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(HardyError::InvalidInput(
                "box must satisfy lo < hi on every axis".into(),
            ));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&t, (&a, &b))| t >= a && t <= b)
    }

    /// True when `self` sits strictly inside `outer` on every axis.
    pub fn strictly_inside(&self, outer: &SupportBox) -> bool {
        self.lo.iter().zip(&outer.lo).all(|(a, b)| a > b)
            && self.hi.iter().zip(&outer.hi).all(|(a, b)| a < b)
    }

    /// All `2^n` corner points.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|j| if mask >> j & 1 == 1 { self.hi[j] } else { self.lo[j] })
                    .collect()
            })
            .collect()
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &SupportBox) -> SupportBox {
        let lo = self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect();
        let hi = self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect();
        SupportBox { lo, hi }
    }
}

/// Rule family and resolution, independent of the integration box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RuleSpec {
    /// Tensor Gauss-Legendre with `nodes` points per axis.
    Gauss { nodes: usize },
    /// Midpoint rule with `cells` equal cells per axis.
    Riemann { cells: usize },
    /// Uniform Monte Carlo with a fixed seed.
    MonteCarlo { samples: usize, seed: u64 },
}

impl RuleSpec {
    pub fn over(self, domain: SupportBox) -> QuadratureRule {
        QuadratureRule::new(self, domain)
    }

    /// A cheaper companion rule used for error estimation.
    pub fn coarser(self) -> RuleSpec {
        match self {
            RuleSpec::Gauss { nodes } => RuleSpec::Gauss { nodes: (nodes / 2).max(2) },
            RuleSpec::Riemann { cells } => RuleSpec::Riemann { cells: (cells / 2).max(2) },
            RuleSpec::MonteCarlo { samples, seed } => RuleSpec::MonteCarlo {
                samples: (samples / 2).max(16),
                seed: seed.wrapping_add(1),
            },
        }
    }

    /// Resolution scaled by `level` (1 = base).
    pub fn refined(self, level: usize) -> RuleSpec {
        assert!(level >= 1);
        match self {
            RuleSpec::Gauss { nodes } => RuleSpec::Gauss { nodes: nodes * level },
            RuleSpec::Riemann { cells } => RuleSpec::Riemann { cells: cells * level },
            RuleSpec::MonteCarlo { samples, seed } => {
                RuleSpec::MonteCarlo { samples: samples * level, seed }
            }
        }
    }
}

/// A rule bound to a concrete box: positive weights summing to the box volume
/// (Gauss/Riemann) plus the node set.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    spec: RuleSpec,
    domain: SupportBox,
    // 1D reference nodes/weights on [-1, 1] (Gauss) or unused (others).
    nodes_1d: Vec<f64>,
    weights_1d: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(spec: RuleSpec, domain: SupportBox) -> Self {
        let (nodes_1d, weights_1d) = match spec {
            RuleSpec::Gauss { nodes } => gauss_legendre(nodes),
            _ => (Vec::new(), Vec::new()),
        };
        Self { spec, domain, nodes_1d, weights_1d }
    }

    pub fn spec(&self) -> RuleSpec {
        self.spec
    }

    pub fn domain(&self) -> &SupportBox {
        &self.domain
    }

    pub fn node_count(&self) -> usize {
        let n = self.domain.dim();
        match self.spec {
            RuleSpec::Gauss { nodes } => nodes.pow(n as u32),
            RuleSpec::Riemann { cells } => cells.pow(n as u32),
            RuleSpec::MonteCarlo { samples, .. } => samples,
        }
    }

    /// Integrates a scalar function.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.integrate_multi_with(1, || {
            |x: &[f64], out: &mut [f64]| out[0] = f(x)
        })[0]
    }

    /// Integrates `k` components in one sweep over the nodes.
    ///
    /// `factory` is invoked once per chunk and may allocate scratch space;
    /// the returned closure fills `out` with the component values at a node.
    pub fn integrate_multi_with<F, G>(&self, k: usize, factory: F) -> Vec<f64>
    where
        F: Fn() -> G + Sync,
        G: FnMut(&[f64], &mut [f64]),
    {
        let total = self.node_count();
        let nchunks = total.div_ceil(PAR_CHUNK);
        let partials: Vec<Vec<f64>> = (0..nchunks)
            .into_par_iter()
            .map(|ci| {
                let start = ci * PAR_CHUNK;
                let stop = (start + PAR_CHUNK).min(total);
                let mut eval = factory();
                let mut vals = vec![0.0; k];
                let mut x = vec![0.0; self.domain.dim()];
                let mut acc = vec![0.0; k];
                let mut mc_rng = self.mc_chunk_rng(ci);
                for idx in start..stop {
                    let w = self.node(idx, &mut x, mc_rng.as_mut());
                    eval(&x, &mut vals);
                    for (a, v) in acc.iter_mut().zip(&vals) {
                        *a += w * v;
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; k];
        for part in &partials {
            for (o, p) in out.iter_mut().zip(part) {
                *o += p;
            }
        }
        out
    }

    fn mc_chunk_rng(&self, chunk: usize) -> Option<ChaCha8Rng> {
        match self.spec {
            RuleSpec::MonteCarlo { seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(chunk as u64 + 1);
                Some(rng)
            }
            _ => None,
        }
    }

    /// Fills `x` with node `idx` and returns its weight.
    fn node(&self, idx: usize, x: &mut [f64], mc_rng: Option<&mut ChaCha8Rng>) -> f64 {
        let n = self.domain.dim();
        match self.spec {
            RuleSpec::Gauss { nodes } => {
                let mut rest = idx;
                let mut w = 1.0;
                for j in 0..n {
                    let digit = rest % nodes;
                    rest /= nodes;
                    let half = 0.5 * self.domain.width(j);
                    let mid = 0.5 * (self.domain.lo[j] + self.domain.hi[j]);
                    x[j] = mid + half * self.nodes_1d[digit];
                    w *= half * self.weights_1d[digit];
                }
                w
            }
            RuleSpec::Riemann { cells } => {
                let mut rest = idx;
                let mut w = 1.0;
                for j in 0..n {
                    let digit = rest % cells;
                    rest /= cells;
                    let h = self.domain.width(j) / cells as f64;
                    x[j] = self.domain.lo[j] + (digit as f64 + 0.5) * h;
                    w *= h;
                }
                w
            }
            RuleSpec::MonteCarlo { samples, .. } => {
                let rng = mc_rng.expect("monte carlo rng");
                for j in 0..n {
                    let u: f64 = rng.gen();
                    x[j] = self.domain.lo[j] + u * self.domain.width(j);
                }
                self.domain.volume() / samples as f64
            }
        }
    }

    /// Sum of all weights; equals the box volume for Gauss/Riemann.
    pub fn weight_sum(&self) -> f64 {
        self.integrate(|_| 1.0)
    }
}

/// Integrates at resolutions `base·1, ..., base·(refine+1)` and reports the
/// finest value together with the difference of the last two levels.
pub fn integrate_adaptive<F>(
    spec: RuleSpec,
    domain: &SupportBox,
    f: F,
    refine: usize,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if refine < 1 {
        return Err(HardyError::InvalidInput("refine must be >= 1".into()));
    }
    let mut prev = spec.refined(1).over(domain.clone()).integrate(&f);
    let mut last = prev;
    for level in 2..=refine + 1 {
        prev = last;
        last = spec.refined(level).over(domain.clone()).integrate(&f);
    }
    Ok((last, (last - prev).abs()))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; standard construction.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' at x via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn_1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (pn_1 - x * pn) / (1.0 - x * x);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(n: usize) -> SupportBox {
        SupportBox::new(vec![0.0; n], vec![1.0; n]).unwrap()
    }

    #[test]
    fn constant_integrates_to_volume() {
        let rule = RuleSpec::Gauss { nodes: 4 }.over(unit_box(3));
        assert!((rule.integrate(|_| 1.0) - 1.0).abs() < 1e-12);
        let rule = RuleSpec::Riemann { cells: 7 }.over(
            SupportBox::new(vec![-1.0, 2.0], vec![3.0, 5.0]).unwrap(),
        );
        assert!((rule.weight_sum() - 12.0).abs() < 1e-10);
    }

    #[test]
    fn gauss_polynomial_exactness() {
        // x^2 on [0,1] with 8 nodes.
        let rule = RuleSpec::Gauss { nodes: 8 }.over(unit_box(1));
        let v = rule.integrate(|x| x[0] * x[0]);
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
        // Degree 2n-1 exactness: x^63 with 32 nodes.
        let rule = RuleSpec::Gauss { nodes: 32 }.over(unit_box(1));
        let v = rule.integrate(|x| x[0].powi(63));
        assert!((v - 1.0 / 64.0).abs() / (1.0 / 64.0) < 1e-12);
    }

    #[test]
    fn gauss_and_riemann_agree_on_smooth_bump() {
        let domain = SupportBox::new(vec![-1.0], vec![1.0]).unwrap();
        let bump = |x: &[f64]| {
            let t: f64 = x[0];
            if t.abs() < 1.0 {
                (-1.0 / (1.0 - t * t)).exp()
            } else {
                0.0
            }
        };
        let g = RuleSpec::Gauss { nodes: 32 }.over(domain.clone()).integrate(bump);
        let r = RuleSpec::Riemann { cells: 256 }.over(domain).integrate(bump);
        assert!((g - r).abs() / r.abs() < 1e-6, "gauss {g} vs riemann {r}");
    }

    #[test]
    fn monte_carlo_is_deterministic_and_close() {
        let domain = SupportBox::new(vec![0.0; 5], vec![1.0; 5]).unwrap();
        let spec = RuleSpec::MonteCarlo { samples: 200_000, seed: 7 };
        let f = |x: &[f64]| x.iter().sum::<f64>();
        let a = spec.over(domain.clone()).integrate(f);
        let b = spec.over(domain.clone()).integrate(f);
        assert_eq!(a, b);
        assert!((a - 2.5).abs() < 0.01, "mc value {a}");
    }

    #[test]
    fn adaptive_error_shrinks_on_smooth_integrand() {
        let domain = SupportBox::new(vec![-1.0], vec![1.0]).unwrap();
        let bump = |x: &[f64]| {
            let t: f64 = x[0];
            if t.abs() < 1.0 {
                (-1.0 / (1.0 - t * t)).exp()
            } else {
                0.0
            }
        };
        let spec = RuleSpec::Gauss { nodes: 8 };
        let errs: Vec<f64> = (1..=3)
            .map(|r| integrate_adaptive(spec, &domain, bump, r).unwrap().1)
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "errs {errs:?}");

        let (v, e) = integrate_adaptive(spec, &domain, |_| 2.0, 2).unwrap();
        assert!((v - 4.0).abs() < 1e-13);
        assert!(e < 1e-13);
    }

    #[test]
    fn adaptive_reports_large_error_for_underresolved_integrand() {
        let domain = SupportBox::new(vec![0.0], vec![1.0]).unwrap();
        let f = |x: &[f64]| (40.0 * std::f64::consts::PI * x[0]).sin();
        let (_, err) = integrate_adaptive(RuleSpec::Gauss { nodes: 4 }, &domain, f, 1).unwrap();
        assert!(err > 1e-2, "expected a visible error estimate, got {err}");
    }

    #[test]
    fn box_validation_and_geometry() {
        assert!(SupportBox::new(vec![0.0], vec![0.0]).is_err());
        let b = SupportBox::new(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap();
        assert_eq!(b.corners().len(), 4);
        assert!(b.contains(&[1.0, 0.5]));
        assert!(!b.contains(&[3.0, 0.5]));
        let inner = SupportBox::new(vec![0.1, 0.1], vec![1.9, 0.9]).unwrap();
        assert!(inner.strictly_inside(&b));
        assert!(!b.strictly_inside(&inner));
    }
}
