//! Richardson extrapolation to a vanishing step.

use crate::algebra::C64;

/// Result of extrapolating f(h) to h = 0.
#[derive(Clone, Copy, Debug)]
pub struct Extrapolated {
    pub value: C64,
    /// |difference| between the two highest-order estimates.
    pub spread: f64,
}

/// Polynomial (Neville) extrapolation to 0 from samples f(h_i); with
/// h_i = h·2^i this is Richardson extrapolation assuming an expansion in
/// integer powers of h.
pub fn richardson(hs: &[f64], fs: &[C64]) -> Extrapolated {
    assert_eq!(hs.len(), fs.len());
    assert!(!hs.is_empty());
    let n = hs.len();
    let mut t = fs.to_vec();
    let mut prev_top = t[0];
    for m in 1..n {
        prev_top = t[0];
        for i in 0..n - m {
            let (a, b) = (hs[i], hs[i + m]);
            t[i] = (t[i + 1] * a - t[i] * b) / (a - b);
        }
    }
    Extrapolated { value: t[0], spread: if n > 1 { (t[0] - prev_top).norm() } else { f64::INFINITY } }
}

/// Samples f at h, 2h, 4h, … (`levels` points) and extrapolates to 0.
pub fn richardson_geometric<F>(h: f64, levels: usize, f: F) -> Extrapolated
where
    F: Fn(f64) -> C64,
{
    let hs: Vec<f64> = (0..levels).map(|i| h * 2f64.powi(i as i32)).collect();
    let fs: Vec<C64> = hs.iter().map(|&s| f(s)).collect();
    richardson(&hs, &fs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_quadratics() {
        let e = richardson_geometric(0.01, 3, |h| C64::new(2.0 + 3.0 * h - h * h, h));
        assert!((e.value - C64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn third_order_error() {
        let f = |h: f64| C64::new(h.exp(), 0.0);
        let e1 = richardson_geometric(0.02, 3, f);
        let e2 = richardson_geometric(0.01, 3, f);
        let r = (e1.value.re - 1.0).abs() / (e2.value.re - 1.0).abs();
        assert!((r - 8.0).abs() < 0.5, "{r}");
    }
}
