//! Embedded Dormand–Prince 5(4) stepping in the Lawson (integrating factor)
//! form for y′ = Λy + N(x, y) with diagonal Λ. The linear part is propagated
//! exactly inside each step, so large |Λ| costs nothing in step size.

use crate::algebra::C64;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { atol: 1e-11, rtol: 1e-11, h_max: 0.25, max_steps: 200_000 }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const BHAT: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates from `x0` through each point of `stops` (monotone, in the
/// direction of integration) and returns the state at every stop.
pub fn lawson_dp45<F>(
    lambda: &[C64],
    mut f: F,
    x0: f64,
    y0: &[C64],
    stops: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<Vec<C64>>>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y0.len();
    assert_eq!(lambda.len(), n);
    let mut out = Vec::with_capacity(stops.len());
    let Some(&last) = stops.last() else { return Ok(out) };
    let dir = if last >= x0 { 1.0 } else { -1.0 };

    let spread = lambda
        .iter()
        .flat_map(|a| lambda.iter().map(move |b| (a.re - b.re).abs()))
        .fold(0.0, f64::max);
    let h_max = if spread > 0.0 { opts.h_max.min(6.0 / spread) } else { opts.h_max };

    let mut x = x0;
    let mut y = y0.to_vec();
    let mut h = h_max.min(0.05);
    let mut k = vec![vec![C64::new(0.0, 0.0); n]; 7];
    let mut stage = vec![C64::new(0.0, 0.0); n];
    let mut ynew = vec![C64::new(0.0, 0.0); n];
    let mut steps = 0usize;

    for &target in stops {
        assert!((target - x) * dir >= -1e-15, "stops must be monotone");
        while (target - x) * dir > 1e-15 {
            let remaining = (target - x).abs();
            let clipped = h.min(remaining);
            let hs = dir * clipped;
            // stages of the transformed variable v = e^{-(s - x)Λ} y
            for i in 0..7 {
                for a in 0..n {
                    let mut acc = y[a];
                    for (j, kj) in k.iter().enumerate().take(i) {
                        if A[i][j] != 0.0 {
                            acc += kj[a] * (hs * A[i][j]);
                        }
                    }
                    stage[a] = acc * (lambda[a] * (C[i] * hs)).exp();
                }
                let ki = &mut k[i];
                f(x + C[i] * hs, &stage, ki);
                for a in 0..n {
                    ki[a] *= (-lambda[a] * (C[i] * hs)).exp();
                }
            }
            let mut err: f64 = 0.0;
            for a in 0..n {
                let mut v = y[a];
                let mut e = C64::new(0.0, 0.0);
                for i in 0..7 {
                    v += k[i][a] * (hs * B[i]);
                    e += k[i][a] * (hs * (B[i] - BHAT[i]));
                }
                let g = (lambda[a] * hs).exp();
                ynew[a] = v * g;
                let scale = opts.atol + opts.rtol * y[a].norm().max(ynew[a].norm());
                err = err.max((e * g).norm() / scale);
            }
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::StepUnderflow(x));
            }
            if err <= 1.0 || clipped < 1e-13 {
                x = if clipped == remaining { target } else { x + hs };
                std::mem::swap(&mut y, &mut ynew);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a clipped step does not tell us about the natural step size
                if clipped == h || fac < 1.0 {
                    h = (h * fac).min(h_max);
                }
            } else {
                h = clipped * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_part_is_exact() {
        let lam = [C64::new(-40.0, 3.0), C64::new(25.0, -1.0)];
        let y0 = [C64::new(1.0, 0.0), C64::new(0.5, 0.5)];
        let out = lawson_dp45(&lam, |_, _, d| d.fill(C64::new(0.0, 0.0)), 0.0, &y0, &[1.0], &Default::default()).unwrap();
        for a in 0..2 {
            let want = y0[a] * lam[a].exp();
            assert!((out[0][a] - want).norm() <= 1e-12 * want.norm());
        }
    }

    #[test]
    fn coupled_against_closed_form() {
        // y'' = -y written as a system, integrated backwards
        let lam = [C64::new(0.0, 0.0); 2];
        let out = lawson_dp45(
            &lam,
            |_, y, d| {
                d[0] = y[1];
                d[1] = -y[0];
            },
            2.0,
            &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            &[1.0, -3.0],
            &Default::default(),
        )
        .unwrap();
        for (i, x) in [1.0f64, -3.0].iter().enumerate() {
            let want = (x - 2.0).sin();
            assert!((out[i][0].re - want).abs() < 1e-9, "{} {}", out[i][0].re, want);
        }
    }

    #[test]
    fn mixed_linear_and_forcing() {
        // y' = iωy + e^{x}: y = (e^{x} - e^{iωx})/(1 - iω) with y(0) = 0
        let w = 30.0;
        let lam = [C64::new(0.0, w)];
        let out = lawson_dp45(&lam, |x, _, d| d[0] = C64::new(x.exp(), 0.0), 0.0, &[C64::new(0.0, 0.0)], &[1.5], &Default::default())
            .unwrap();
        let x: f64 = 1.5;
        let want = (C64::new(x.exp(), 0.0) - C64::new(0.0, w * x).exp()) / C64::new(1.0, -w);
        assert!((out[0][0] - want).norm() < 1e-9);
    }
}
