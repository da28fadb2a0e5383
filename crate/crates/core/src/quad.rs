//! Gauss–Legendre rules and deterministic summation.

use std::f64::consts::PI;
use std::ops::Add;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
        Self { nodes, weights }
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Composite rule with `panels` equal panels on `[a, b]`.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        (0..panels)
            .flat_map(|j| {
                let lo = a + h * j as f64;
                self.on(lo, lo + h).collect::<Vec<_>>()
            })
            .collect()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Pairwise sum; result is independent of how the terms were produced.
pub fn pairwise_sum<T>(terms: &[T]) -> Option<T>
where
    T: Clone,
    for<'a> &'a T: Add<&'a T, Output = T>,
{
    match terms.len() {
        0 => None,
        1 => Some(terms[0].clone()),
        n => {
            let (l, r) = terms.split_at(n / 2);
            let a = pairwise_sum(l)?;
            let b = pairwise_sum(r)?;
            Some(&a + &b)
        }
    }
}

pub fn pairwise_sum_f64(terms: &[f64]) -> f64 {
    match terms.len() {
        0 => 0.0,
        1 => terms[0],
        n => {
            let (l, r) = terms.split_at(n / 2);
            pairwise_sum_f64(l) + pairwise_sum_f64(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_point_rule() {
        let g = GaussLegendre::new(2);
        assert_abs_diff_eq!(g.nodes[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.weights[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn eight_point_rule_integrates_degree_15_exactly() {
        let g = GaussLegendre::new(8);
        assert_abs_diff_eq!(g.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        for deg in 0..16u32 {
            let got: f64 = g.on(0.0, 1.0).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert_abs_diff_eq!(got, 1.0 / (deg + 1) as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn composite_rule_on_smooth_function() {
        let g = GaussLegendre::new(8);
        let got: f64 = g.composite(0.0, PI, 4).iter().map(|&(x, w)| w * x.sin()).sum();
        assert_abs_diff_eq!(got, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(pairwise_sum_f64(&v), 5050.0);
        assert_eq!(pairwise_sum_f64(&[]), 0.0);
    }
}
