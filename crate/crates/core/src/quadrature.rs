//! Gauss–Legendre panels, panel-local Lagrange interpolation and adaptive
//! composite integration.

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;

use crate::algebra::C64;

/// Gauss–Legendre nodes and weights on [−1, 1], nodes ascending.
#[derive(Clone, Debug)]
pub struct GlRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GlRule {
    pub fn new(n: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
        let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Self { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (h, m) = (0.5 * (b - a), 0.5 * (b + a));
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (m + h * x, h * w))
    }
}

/// Equal panels of Gauss–Legendre nodes covering [a, b].
#[derive(Clone, Debug)]
pub struct Panels {
    pub a: f64,
    pub b: f64,
    pub count: usize,
    pub rule: GlRule,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    bary: Vec<f64>,
}

impl Panels {
    pub fn new(a: f64, b: f64, count: usize, order: usize) -> Self {
        let rule = GlRule::new(order);
        let mut nodes = Vec::with_capacity(count * order);
        let mut weights = Vec::with_capacity(count * order);
        for p in 0..count {
            let (pa, pb) = panel_bounds(a, b, count, p);
            for (x, w) in rule.mapped(pa, pb) {
                nodes.push(x);
                weights.push(w);
            }
        }
        let bary = barycentric_weights(&rule.nodes);
        Self { a, b, count, rule, nodes, weights, bary }
    }

    pub fn order(&self) -> usize {
        self.rule.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn bounds(&self, p: usize) -> (f64, f64) {
        panel_bounds(self.a, self.b, self.count, p)
    }

    /// Panel containing x (clamped to the end panels).
    pub fn panel_of(&self, x: f64) -> usize {
        let h = (self.b - self.a) / self.count as f64;
        (((x - self.a) / h).floor().max(0.0) as usize).min(self.count - 1)
    }

    /// Lagrange basis of panel p evaluated at x.
    pub fn basis(&self, p: usize, x: f64) -> Vec<f64> {
        let (pa, pb) = self.bounds(p);
        let t = (2.0 * x - pa - pb) / (pb - pa);
        lagrange_basis(&self.rule.nodes, &self.bary, t)
    }

    /// Interpolate nodal values at x using the containing panel.
    pub fn interpolate<T>(&self, values: &[T], x: f64) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let p = self.panel_of(x);
        let q = self.order();
        let basis = self.basis(p, x);
        let mut acc = values[p * q] * basis[0];
        for i in 1..q {
            acc = acc + values[p * q + i] * basis[i];
        }
        acc
    }

    /// Panel-local differentiation of nodal values.
    pub fn differentiate(&self, values: &[f64]) -> Vec<f64> {
        let q = self.order();
        let d = diff_matrix(&self.rule.nodes, &self.bary);
        let mut out = vec![0.0; values.len()];
        for p in 0..self.count {
            let (pa, pb) = self.bounds(p);
            let scale = 2.0 / (pb - pa);
            for i in 0..q {
                let mut s = 0.0;
                for j in 0..q {
                    s += d[i * q + j] * values[p * q + j];
                }
                out[p * q + i] = s * scale;
            }
        }
        out
    }
}

fn panel_bounds(a: f64, b: f64, count: usize, p: usize) -> (f64, f64) {
    let h = (b - a) / count as f64;
    let pa = a + h * p as f64;
    let pb = if p + 1 == count { b } else { a + h * (p + 1) as f64 };
    (pa, pb)
}

pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            let prod: f64 = (0..nodes.len()).filter(|&m| m != j).map(|m| nodes[j] - nodes[m]).product();
            1.0 / prod
        })
        .collect()
}

pub fn lagrange_basis(nodes: &[f64], bary: &[f64], t: f64) -> Vec<f64> {
    if let Some(i) = nodes.iter().position(|&x| x == t) {
        let mut e = vec![0.0; nodes.len()];
        e[i] = 1.0;
        return e;
    }
    let terms: Vec<f64> = nodes.iter().zip(bary).map(|(x, w)| w / (t - x)).collect();
    let sum: f64 = terms.iter().sum();
    terms.iter().map(|v| v / sum).collect()
}

/// Row-major differentiation matrix on the reference nodes.
pub fn diff_matrix(nodes: &[f64], bary: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                d[i * n + j] = v;
                diag -= v;
            }
        }
        d[i * n + i] = diag;
    }
    d
}

/// Composite Gauss–Legendre integration of a complex integrand with panel
/// doubling until successive values agree to `tol` (relative to max(1,|I|)).
pub fn integrate_c<F>(f: F, a: f64, b: f64, tol: f64) -> C64
where
    F: Fn(f64) -> C64,
{
    if a == b {
        return C64::new(0.0, 0.0);
    }
    let rule = GlRule::new(16);
    let eval = |panels: usize| -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for p in 0..panels {
            let (pa, pb) = panel_bounds(a, b, panels, p);
            for (x, w) in rule.mapped(pa, pb) {
                s += f(x) * w;
            }
        }
        s
    };
    let mut panels = 2;
    let mut prev = eval(panels);
    loop {
        panels *= 2;
        let next = eval(panels);
        if (next - prev).norm() <= tol * next.norm().max(1.0) || panels >= 1 << 12 {
            return next;
        }
        prev = next;
    }
}

pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    integrate_c(|x| C64::new(f(x), 0.0), a, b, tol).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_exactness() {
        let r = GlRule::new(8);
        let s: f64 = r.mapped(0.0, 2.0).map(|(x, w)| w * x.powi(15)).sum();
        assert!((s - 2f64.powi(16) / 16.0).abs() < 1e-10);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn panel_interp_and_diff() {
        let p = Panels::new(-1.0, 2.0, 5, 12);
        let vals: Vec<f64> = p.nodes.iter().map(|x| x.sin()).collect();
        let y = p.interpolate(&vals, 0.123);
        assert!((y - 0.123f64.sin()).abs() < 1e-13);
        let d = p.differentiate(&vals);
        for (x, dv) in p.nodes.iter().zip(&d) {
            assert!((dv - x.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn adaptive() {
        let v = integrate(|x| (-2.0 / (1.0 - x * x)).exp(), -1.0 + 1e-15, 1.0 - 1e-15, 1e-14);
        // mpmath quad at 30 digits
        assert!((v - 0.13308612084499427).abs() < 1e-12, "{v}");
    }
}
