//! Gauss-Legendre rules on `[0, 1]` and the line-averaged force.

use crate::error::{Error, Result};
use crate::linalg3::Vec3;
use crate::potential::Potential;

pub const MAX_POINTS: usize = 16;

/// An `n`-point Gauss-Legendre rule mapped to `[0, 1]`.
///
/// Nodes are stored in ascending order and are exactly symmetric about 1/2
/// in their `[-1, 1]` offsets, which keeps [`averaged_force`] bit-exactly
/// symmetric under swapping its endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    offsets: Vec<f64>,
}

impl GaussRule {
    pub fn new(points: usize) -> Result<Self> {
        if !(1..=MAX_POINTS).contains(&points) {
            return Err(Error::UnsupportedOrder(points));
        }
        let (offsets, ref_weights) = legendre_nodes(points);
        let nodes = offsets.iter().map(|t| 0.5 + 0.5 * t).collect();
        let weights = ref_weights.iter().map(|w| 0.5 * w).collect();
        Ok(GaussRule {
            nodes,
            weights,
            offsets,
        })
    }

    /// Number of points.
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in `(0, 1)`, ascending.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights summing to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates a scalar function over `[0, 1]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(s, w)| w * f(*s)).sum()
    }
}

impl Default for GaussRule {
    fn default() -> Self {
        GaussRule::new(4).expect("4-point rule is supported")
    }
}

/// Nodes on `[-1, 1]` (ascending, exactly antisymmetric) and weights.
fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let half = n / 2;
    let mut positive = Vec::with_capacity(half);
    for i in 0..half {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        positive.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    // `positive` runs from the largest node down.
    let mut offsets = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &(x, w) in &positive {
        offsets.push(-x);
        weights.push(w);
    }
    if n % 2 == 1 {
        let (_, d) = legendre_with_derivative(n, 0.0);
        offsets.push(0.0);
        weights.push(2.0 / (d * d));
    }
    for &(x, w) in positive.iter().rev() {
        offsets.push(x);
        weights.push(w);
    }
    (offsets, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = if n == 0 {
        0.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p, dp)
}

/// `sum_i w_i F(xa + s_i (xb - xa))`, the quadrature of the force averaged
/// along the segment from `xa` to `xb`.
///
/// Points are formed as `mid + t_i * half_diff` and mirrored nodes are
/// summed in pairs, so swapping `xa` and `xb` gives a bit-identical result.
pub fn averaged_force<P: Potential + ?Sized>(p: &P, rule: &GaussRule, xa: Vec3, xb: Vec3) -> Result<Vec3> {
    let mid = (xa + xb).scale(0.5);
    let half_diff = (xb - xa).scale(0.5);
    let n = rule.order();
    let mut acc = Vec3::ZERO;
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let lo = p.force(mid.axpy(rule.offsets[i], &half_diff))?;
        let hi = p.force(mid.axpy(rule.offsets[j], &half_diff))?;
        acc += (lo + hi).scale(rule.weights[i]);
    }
    if n % 2 == 1 {
        acc += p.force(mid)?.scale(rule.weights[n / 2]);
    }
    Ok(acc)
}
