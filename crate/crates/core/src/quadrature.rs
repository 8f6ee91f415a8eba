//! Gauss–Legendre rules and the regularized singular integrals used on the
//! segment that carries the source point.

use thiserror::Error;

use crate::geometry::{Segment, SegmentPoint};

/// Highest supported rule order.
pub const MAX_ORDER: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature order {0} outside 1..={MAX_ORDER}")]
    OrderOutOfRange(usize),
    #[error("singular segments need an even quadrature order, got n_g = {0}")]
    OddOrder(usize),
    #[error("non-finite integrand {value} at node {node} (xi = {xi})")]
    NonFinite { node: usize, xi: f64, value: f64 },
}

/// Nodes and weights on `[−1, 1]`, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Gauss–Legendre rule of order `n` by Newton iteration on `P_n`.
    pub fn gauss_legendre(n: usize) -> Result<Self, QuadratureError> {
        if !(1..=MAX_ORDER).contains(&n) {
            return Err(QuadratureError::OrderOutOfRange(n));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess for the i-th largest root.
            let k = (i + 1) as f64;
            let nf = n as f64;
            let mut x = (std::f64::consts::PI * (k - 0.25) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Fails unless the rule may be used on a singular segment.
    pub fn require_even(&self) -> Result<(), QuadratureError> {
        if self.order() % 2 == 0 {
            Ok(())
        } else {
            Err(QuadratureError::OddOrder(self.order()))
        }
    }

    /// Plain rule applied to `g(ξ)`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * g(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Convenience wrapper for [`QuadratureRule::gauss_legendre`].
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule, QuadratureError> {
    QuadratureRule::gauss_legendre(n)
}

fn check(node: usize, xi: f64, value: f64) -> Result<f64, QuadratureError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(QuadratureError::NonFinite { node, xi, value })
    }
}

/// `Σ f(x(ξ_i)) J(ξ_i) w_i` over one segment.
pub fn integrate_regular(
    seg: &Segment,
    rule: &QuadratureRule,
    f: impl Fn(&SegmentPoint) -> f64,
) -> Result<f64, QuadratureError> {
    let mut acc = 0.0;
    for (i, (xi, w)) in rule.iter().enumerate() {
        let p = seg.point(xi);
        acc += check(i, xi, f(&p))? * p.jacobian * w;
    }
    Ok(acc)
}

/// Linear weights of the log regularization on a segment of half-arc `a`:
/// `∫_{−a}^{a} ln|t| f(t) dt ≈ Σ α_i f(aξ_i) + α_0 f(0)`.
pub fn weak_log_weights(a: f64, rule: &QuadratureRule) -> Result<(Vec<f64>, f64), QuadratureError> {
    rule.require_even()?;
    let alpha: Vec<f64> = rule.iter().map(|(xi, w)| a * w * (a * xi).abs().ln()).collect();
    let alpha0 = -alpha.iter().sum::<f64>() + 2.0 * (a * a.ln() - a);
    Ok((alpha, alpha0))
}

/// `∫_{−a}^{a} ln|t| f(t) dt` in the arc coordinate `t` of the segment, by
/// subtracting `f(0)` under the Gauss sum and adding back `2 f(0)(a ln a − a)`.
pub fn integrate_weak_log(
    seg: &Segment,
    rule: &QuadratureRule,
    f: impl Fn(f64) -> f64,
    f0: f64,
) -> Result<f64, QuadratureError> {
    rule.require_even()?;
    let a = seg.half_arc();
    let mut acc = 0.0;
    for (i, (xi, w)) in rule.iter().enumerate() {
        let t = a * xi;
        acc += a * w * t.abs().ln() * (check(i, xi, f(t))? - f0);
    }
    Ok(acc + 2.0 * f0 * (a * a.ln() - a))
}

/// Principal value `PV ∫_{−1}^{1} f(ξ)/ξ dξ` from the odd part of `f` on the
/// positive nodes.
pub fn integrate_cauchy(rule: &QuadratureRule, f: impl Fn(f64) -> f64) -> Result<f64, QuadratureError> {
    rule.require_even()?;
    let half = rule.order() / 2;
    let mut acc = 0.0;
    for i in half..rule.order() {
        let (xi, w) = (rule.nodes[i], rule.weights[i]);
        let plus = check(i, xi, f(xi))?;
        let minus = check(rule.order() - 1 - i, -xi, f(-xi))?;
        acc += w * (plus - minus) / xi;
    }
    Ok(acc)
}
