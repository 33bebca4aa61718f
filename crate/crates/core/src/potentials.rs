//! Initial data (u₀, v₀) and the Lax-pair coefficient matrices 𝖴, Ũ, 𝖵.

use rustfft::{num_complex::Complex64, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::algebra::{
    cal_z, mat, p_inverse, p_matrix, r, rows_all, Complex3x3, C64, ONE, OMEGA, OMEGA2, ZERO,
};
use crate::error::{Error, Result};
use crate::quadrature;

pub type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Pointwise values of a profile and its derivatives.
pub trait Profile: Send + Sync {
    /// (u, u_x, u_xx, v, v_x) at x.
    fn eval(&self, x: f64) -> [f64; 5];
}

/// Initial data with a compact (or truncated) support [−R, R].
#[derive(Clone)]
pub struct InitialData {
    profile: Arc<dyn Profile>,
    pub support_radius: f64,
    pub label: String,
}

impl std::fmt::Debug for InitialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InitialData").field("label", &self.label).field("support_radius", &self.support_radius).finish()
    }
}

impl InitialData {
    pub fn new(profile: Arc<dyn Profile>, support_radius: f64, label: impl Into<String>) -> Self {
        Self { profile, support_radius, label: label.into() }
    }

    /// (u, u_x, u_xx, v, v_x), zero outside the support.
    pub fn all(&self, x: f64) -> [f64; 5] {
        if x.abs() >= self.support_radius {
            [0.0; 5]
        } else {
            self.profile.eval(x)
        }
    }

    pub fn u0(&self, x: f64) -> f64 {
        self.all(x)[0]
    }
    pub fn u0x(&self, x: f64) -> f64 {
        self.all(x)[1]
    }
    pub fn u0xx(&self, x: f64) -> f64 {
        self.all(x)[2]
    }
    pub fn v0(&self, x: f64) -> f64 {
        self.all(x)[3]
    }
    pub fn v0x(&self, x: f64) -> f64 {
        self.all(x)[4]
    }

    /// ε·(u₀, v₀).
    pub fn scaled(&self, eps: f64) -> Self {
        Self {
            profile: Arc::new(Scaled { inner: self.profile.clone(), eps }),
            support_radius: self.support_radius,
            label: format!("{}*{eps}", self.label),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.label == "zero"
    }
}

struct Scaled {
    inner: Arc<dyn Profile>,
    eps: f64,
}

impl Profile for Scaled {
    fn eval(&self, x: f64) -> [f64; 5] {
        self.inner.eval(x).map(|v| v * self.eps)
    }
}

struct ZeroProfile;

impl Profile for ZeroProfile {
    fn eval(&self, _: f64) -> [f64; 5] {
        [0.0; 5]
    }
}

/// u₀ = (1 + cos 3x)φ, v₀ = (1 + x)φ with φ = exp(−2/(1 − x²)) on (−1, 1).
struct CompactBump;

impl Profile for CompactBump {
    fn eval(&self, x: f64) -> [f64; 5] {
        let s = 1.0 - x * x;
        // φ and all its derivatives are below 1e-300 here
        if s <= 3e-3 {
            return [0.0; 5];
        }
        let phi = (-2.0 / s).exp();
        let g1 = -4.0 * x / (s * s);
        let g2 = -4.0 / (s * s) - 16.0 * x * x / (s * s * s);
        let p1 = g1 * phi;
        let p2 = (g2 + g1 * g1) * phi;
        let (a, a1, a2) = (1.0 + (3.0 * x).cos(), -3.0 * (3.0 * x).sin(), -9.0 * (3.0 * x).cos());
        [a * phi, a1 * phi + a * p1, a2 * phi + 2.0 * a1 * p1 + a * p2, (1.0 + x) * phi, phi + (1.0 + x) * p1]
    }
}

/// u₀ = ½e^{−x²}, v₀ = ½x e^{−x²}.
struct GaussianPair;

impl Profile for GaussianPair {
    fn eval(&self, x: f64) -> [f64; 5] {
        let g = (-x * x).exp();
        [0.5 * g, -x * g, (2.0 * x * x - 1.0) * g, 0.5 * x * g, 0.5 * (1.0 - 2.0 * x * x) * g]
    }
}

pub fn builtin_bump() -> InitialData {
    InitialData::new(Arc::new(CompactBump), 1.0, "paper-sec5")
}

pub fn builtin_zero() -> InitialData {
    InitialData::new(Arc::new(ZeroProfile), 1.0, "zero")
}

pub fn builtin_gaussian(truncation: f64) -> InitialData {
    let p = GaussianPair;
    let radius = truncation_radius(|x| p.eval(x), 0.0, 20.0, truncation);
    InitialData::new(Arc::new(p), radius, "gaussian")
}

pub fn builtin(name: &str, truncation: f64) -> Result<InitialData> {
    match name {
        "paper-sec5" | "bump" => Ok(builtin_bump()),
        "zero" => Ok(builtin_zero()),
        "gaussian" => Ok(builtin_gaussian(truncation)),
        other => Err(Error::Invalid(format!("unknown builtin potential '{other}'"))),
    }
}

/// Smallest R such that |u| + |v| < threshold on a fine scan of |x| ≥ R
/// within [center − span, center + span].
fn truncation_radius<F: Fn(f64) -> [f64; 5]>(f: F, center: f64, span: f64, threshold: f64) -> f64 {
    let n = 20_000;
    let mut radius: f64 = 0.0;
    for i in 0..=n {
        let x = center - span + 2.0 * span * i as f64 / n as f64;
        let v = f(x);
        if v[0].abs() + v[3].abs() >= threshold {
            radius = radius.max(x.abs());
        }
    }
    radius + 2.0 * span / n as f64
}

/// Profile built from samples on a uniform grid: the samples are refined by
/// FFT zero padding, derivatives come from the spectrum, and values between
/// refined nodes use local quintic (six-point) Lagrange interpolation.
pub struct SampledProfile {
    x0: f64,
    dx: f64,
    tables: [Vec<f64>; 5],
}

impl SampledProfile {
    /// `u`, `v` sampled at x0 + i·dx, i = 0..n; the data are treated as one
    /// period of a periodic function and must be negligible at both ends.
    pub fn from_uniform(x0: f64, dx: f64, u: &[f64], v: &[f64], refine: usize) -> Result<Self> {
        let n = u.len();
        if n < 8 || v.len() != n || dx <= 0.0 {
            return Err(Error::Invalid("sampled potential needs >= 8 uniform samples of u and v".into()));
        }
        let m = n * refine.max(1);
        let length = dx * n as f64;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(m);
        let spectrum = |data: &[f64]| -> Vec<Complex64> {
            let mut buf: Vec<Complex64> = data.iter().map(|&a| Complex64::new(a, 0.0)).collect();
            fwd.process(&mut buf);
            buf
        };
        let refined = |spec: &[Complex64], order: u32| -> Vec<f64> {
            let mut big = vec![Complex64::new(0.0, 0.0); m];
            let half = n / 2;
            for (i, &c) in spec.iter().enumerate() {
                let freq = if i < half { i as i64 } else if i == half && n.is_multiple_of(2) { 0 } else { i as i64 - n as i64 };
                let xi = 2.0 * PI * freq as f64 / length;
                let d = Complex64::new(0.0, xi).powu(order);
                let c = c * d / n as f64;
                if i == half && n.is_multiple_of(2) {
                    // split the Nyquist mode symmetrically (its derivative is dropped)
                    if order == 0 {
                        big[half] += c * 0.5;
                        big[m - half] += c * 0.5;
                    }
                } else if freq >= 0 {
                    big[freq as usize] += c;
                } else {
                    big[(m as i64 + freq) as usize] += c;
                }
            }
            inv.process(&mut big);
            big.iter().map(|z| z.re).collect()
        };
        let su = spectrum(u);
        let sv = spectrum(v);
        let tables = [refined(&su, 0), refined(&su, 1), refined(&su, 2), refined(&sv, 0), refined(&sv, 1)];
        Ok(Self { x0, dx: dx / refine.max(1) as f64, tables })
    }

    fn interp(&self, table: &[f64], x: f64) -> f64 {
        let m = table.len() as i64;
        let s = (x - self.x0) / self.dx;
        let i0 = s.floor() as i64 - 2;
        if i0 < 0 || i0 + 5 >= m {
            return 0.0;
        }
        let t = s - (i0 as f64);
        let mut acc = 0.0;
        for a in 0..6 {
            let mut w = 1.0;
            for b in 0..6 {
                if a != b {
                    w *= (t - b as f64) / (a as f64 - b as f64);
                }
            }
            acc += w * table[(i0 + a) as usize];
        }
        acc
    }
}

impl Profile for SampledProfile {
    fn eval(&self, x: f64) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (o, t) in out.iter_mut().zip(self.tables.iter()) {
            *o = self.interp(t, x);
        }
        out
    }
}

/// Builds initial data from uniform samples, truncating where |u|+|v| drops
/// below `truncation`. The support is taken symmetric about 0.
pub fn from_samples(x0: f64, dx: f64, u: &[f64], v: &[f64], truncation: f64, label: &str) -> Result<InitialData> {
    let mut radius: f64 = 0.0;
    for i in 0..u.len() {
        if u[i].abs() + v[i].abs() >= truncation {
            radius = radius.max((x0 + dx * i as f64).abs() + dx);
        }
    }
    let profile = SampledProfile::from_uniform(x0, dx, u, v, 8)?;
    let end = x0 + dx * (u.len() as f64 - 3.0);
    if radius >= end.min(-x0 - 2.0 * dx) {
        return Err(Error::Invalid("sampled data do not decay inside the grid".into()));
    }
    Ok(InitialData::new(Arc::new(profile), radius.max(dx), label))
}

/// Reads `x,u,v` rows (uniform x) from a CSV file with a header line.
pub fn from_samples_csv(path: &std::path::Path, truncation: f64) -> Result<InitialData> {
    let text = std::fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut us = Vec::new();
    let mut vs = Vec::new();
    for line in text.lines().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Invalid(format!("bad sample row '{line}': {e}")))?;
        if f.len() != 3 {
            return Err(Error::Invalid(format!("expected x,u,v in row '{line}'")));
        }
        xs.push(f[0]);
        us.push(f[1]);
        vs.push(f[2]);
    }
    if xs.len() < 8 {
        return Err(Error::Invalid("too few samples".into()));
    }
    let dx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    if xs.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.abs().max(1.0)) {
        return Err(Error::Invalid("sample grid must be uniform".into()));
    }
    from_samples(xs[0], dx, &us, &vs, truncation, &path.display().to_string())
}

/// 𝖴, its coefficients and Ũ at one point.
#[derive(Clone, Debug)]
pub struct PotentialMatrices {
    pub u: Complex3x3,
    pub u1: Complex3x3,
    pub u2: Complex3x3,
    pub utilde: Complex3x3,
}

/// Ũ: only the third row (−u_x − v, −2u, 0) is nonzero.
pub fn utilde(u: f64, ux: f64, v: f64) -> Complex3x3 {
    mat([[ZERO; 3], [ZERO; 3], [r(-ux - v), r(-2.0 * u), ZERO]])
}

/// 𝖴⁽²⁾ and 𝖴⁽¹⁾ from point values.
pub fn u_coeffs(u: f64, ux: f64, v: f64) -> (Complex3x3, Complex3x3) {
    let u2 = rows_all([OMEGA, OMEGA2, ONE]) * r(-(v + ux) / 3.0);
    let u1 = rows_all([OMEGA2, OMEGA, ONE]) * r(-2.0 * u / 3.0);
    (u2, u1)
}

/// 𝖴 = 𝖴⁽²⁾/k² + 𝖴⁽¹⁾/k from point values.
pub fn u_matrix(u: f64, ux: f64, v: f64, k: C64) -> Complex3x3 {
    let (u2, u1) = u_coeffs(u, ux, v);
    u2 / (k * k) + u1 / k
}

pub fn usf_matrix(data: &InitialData, x: f64, k: C64) -> Result<PotentialMatrices> {
    if k == ZERO {
        return Err(Error::SingularDiagonalizer);
    }
    let [u, ux, _, v, _] = data.all(x);
    let (u2, u1) = u_coeffs(u, ux, v);
    Ok(PotentialMatrices { u: u2 / (k * k) + u1 / k, u1, u2, utilde: utilde(u, ux, v) })
}

/// 𝖵⁽²⁾, 𝖵⁽¹⁾, 𝖵⁽⁰⁾ at one point.
pub fn v_coeffs(data: &InitialData, x: f64) -> [Complex3x3; 3] {
    let [u, ux, uxx, v, vx] = data.all(x);
    let v2 = rows_all([OMEGA, OMEGA2, ONE]) * r((-3.0 * vx + uxx) / 9.0);
    let v0 = mat([[ZERO, OMEGA, OMEGA2], [OMEGA2, ZERO, OMEGA], [OMEGA, OMEGA2, ZERO]]) * r(2.0 * u / 3.0);
    let a = mat([
        [OMEGA2 * -2.0, OMEGA2, OMEGA2],
        [OMEGA, OMEGA * -2.0, OMEGA],
        [ONE, ONE, r(-2.0)],
    ]) * r(v / 3.0);
    let b = mat([[ZERO, ONE, -ONE], [-OMEGA2, ZERO, OMEGA2], [OMEGA, -OMEGA, ZERO]]) * ((ONE - OMEGA) * (ux / 9.0));
    [v2, a + b, v0]
}

pub fn vsf_matrix(data: &InitialData, x: f64, k: C64) -> Result<Complex3x3> {
    if k == ZERO {
        return Err(Error::SingularDiagonalizer);
    }
    let [v2, v1, v0] = v_coeffs(data, x);
    Ok(v2 / (k * k) + v1 / k + v0)
}

/// Z̃ of the t-part of the Lax pair.
pub fn ztilde(data: &InitialData, x: f64, k: C64) -> Complex3x3 {
    let [u, ux, uxx, v, vx] = data.all(x);
    let k3 = k * k * k;
    mat([
        [r(4.0 * u / 3.0), ZERO, ONE],
        [k3 + ux / 3.0 - v, r(-2.0 * u / 3.0), ZERO],
        [r(uxx / 3.0 - vx), k3 - ux / 3.0 - v, r(-2.0 * u / 3.0)],
    ])
}

/// 𝖵 by direct conjugation, P⁻¹Z̃P − 𝒵 (test oracle).
pub fn vsf_by_conjugation(data: &InitialData, x: f64, k: C64) -> Result<Complex3x3> {
    Ok(p_inverse(k)? * ztilde(data, x, k) * p_matrix(k) - cal_z(k))
}

/// v₀(x) = ∫_{−∞}^x u₁ for u₁ supported in [−R, R]; rejects nonzero mean.
pub fn v0_from_u1(u1: Evaluator, support_radius: f64, tol: f64) -> Result<Evaluator> {
    let total = quadrature::integrate(|x| u1(x), -support_radius, support_radius, 1e-14);
    if total.abs() > tol {
        return Err(Error::ZeroMeanViolation(total));
    }
    Ok(Arc::new(move |x: f64| {
        // zero mean makes v₀ vanish on both sides of the support
        if x.abs() >= support_radius {
            0.0
        } else {
            quadrature::integrate(|s| u1(s), -support_radius, x, 1e-14)
        }
    }))
}

const QUARTIC_ROOT_3: f64 = 1.316_074_012_952_492_4;

/// û(x) = (4/√3)·u(x/3^{1/4}) + 1/2.
pub fn good_boussinesq_map(u: Evaluator) -> Evaluator {
    Arc::new(move |x: f64| 4.0 / 3f64.sqrt() * u(x / QUARTIC_ROOT_3) + 0.5)
}

/// u(x) = (√3/4)(û(3^{1/4}x) − 1/2).
pub fn good_boussinesq_inverse(uhat: Evaluator) -> Evaluator {
    Arc::new(move |x: f64| 3f64.sqrt() / 4.0 * (uhat(QUARTIC_ROOT_3 * x) - 0.5))
}
