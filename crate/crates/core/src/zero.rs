//! Expansion data at k = 0: Taylor coefficients of 𝒳 = PX and k²𝒳^A,
//! the real coefficient families α, β, γ, δ (and their adjoint versions),
//! the Laurent heads of s and s^A, and the scalar coefficients of M₁ at 0.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    companion, max_abs, max_abs_diff, mat, p_laurent, r, Complex3x3, CVec3, C64, OMEGA, OMEGA2, ONE, ZERO,
};
use crate::error::{Error, Result};
use crate::ode::{lawson_dp45, OdeOptions};
use crate::potentials::{utilde, InitialData};
use crate::quadrature::Panels;
use crate::scattering::EigenKind;

/// P(0), P′(0), P″(0).
pub fn p_derivs() -> [Complex3x3; 3] {
    [
        mat([[OMEGA, OMEGA2, ONE], [ZERO; 3], [ZERO; 3]]),
        mat([[ZERO; 3], [OMEGA2, OMEGA, ONE], [ZERO; 3]]),
        mat([[ZERO; 3], [ZERO; 3], [r(2.0); 3]]),
    ]
}

fn j_diag() -> Complex3x3 {
    crate::algebra::diag([OMEGA, OMEGA2, ONE])
}

/// ∂ₖⁿ of 𝒳 = PE (E = X or Y) or of k²P⁻ᵀE (E = X^A or Y^A) at k = 0, n = 0, 1, 2,
/// at each x (any order). Solves the exact derivative equations
/// 𝒳ₙ′ = (C₀ + Ũ)𝒳ₙ − n𝒳ₙ₋₁J (adjoint: Wₙ′ = −(C₀ + Ũ)ᵀWₙ + nWₙ₋₁J).
pub fn x_derivs_at_zero(data: &InitialData, kind: EigenKind, xs: &[f64]) -> Result<Vec<[Complex3x3; 3]>> {
    let adj = kind.adjoint();
    let big = data.support_radius + 0.5;
    let x0 = if kind.from_plus() { big } else { -big };
    let sign = if kind.from_plus() { -1.0 } else { 1.0 };
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| (sign * xs[a]).partial_cmp(&(sign * xs[b])).unwrap());
    let stops: Vec<f64> = order.iter().map(|&i| if sign * xs[i] < sign * x0 { x0 } else { xs[i] }).collect();

    let init: [Complex3x3; 3] = if adj {
        let l = p_laurent();
        [l.m2.transpose(), l.m1.transpose(), l.m0.transpose() * r(2.0)]
    } else {
        p_derivs()
    };
    let c0 = companion(ZERO);
    let jd = j_diag();
    let mut y0 = Vec::with_capacity(27);
    for m in &init {
        y0.extend(m.iter().copied());
    }
    let unpack = |y: &[C64]| -> [Complex3x3; 3] {
        [
            Complex3x3::from_column_slice(&y[0..9]),
            Complex3x3::from_column_slice(&y[9..18]),
            Complex3x3::from_column_slice(&y[18..27]),
        ]
    };
    let rhs = |x: f64, y: &[C64], d: &mut [C64]| {
        let [u, ux, _, v, _] = data.all(x);
        let a = c0 + utilde(u, ux, v);
        let w = unpack(y);
        for n in 0..3 {
            let mut out = if adj { -(a.transpose() * w[n]) } else { a * w[n] };
            if n > 0 {
                let f = w[n - 1] * jd * r(n as f64);
                if adj {
                    out += f;
                } else {
                    out -= f;
                }
            }
            d[9 * n..9 * n + 9].copy_from_slice(out.as_slice());
        }
    };
    let opts = OdeOptions { atol: 1e-13, rtol: 1e-12, h_max: 0.05, ..Default::default() };
    let sol = lawson_dp45(&[ZERO; 27], rhs, x0, &y0, &stops, &opts)?;
    let mut out = vec![[Complex3x3::zeros(); 3]; xs.len()];
    for (pos, &idx) in order.iter().enumerate() {
        out[idx] = unpack(&sol[pos]);
    }
    Ok(out)
}

/// Least-squares fit m ≈ Σ cᵢ·patternᵢ over complex coefficients. Returns
/// the coefficients and the max-entry residual.
pub fn pattern_fit(m: &Complex3x3, patterns: &[Complex3x3]) -> (Vec<C64>, f64) {
    let a = DMatrix::from_fn(9, patterns.len(), |row, col| patterns[col][(row / 3, row % 3)]);
    let b = DVector::from_fn(9, |row, _| m[(row / 3, row % 3)]);
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-14).expect("svd solve");
    let res = (&a * &coef - &b).iter().map(|z| z.norm()).fold(0.0, f64::max);
    (coef.iter().copied().collect(), res)
}

/// Display patterns of the X (and Y) coefficients at k⁻², k⁻¹ and k⁰.
pub mod patterns {
    use super::*;

    pub fn c_m2() -> Complex3x3 {
        crate::algebra::rows_all([OMEGA, OMEGA2, ONE])
    }
    pub fn c_m1_beta() -> Complex3x3 {
        crate::algebra::rows_all([OMEGA2, OMEGA, ONE])
    }
    pub fn c_m1_gamma() -> Complex3x3 {
        mat([[OMEGA2, ONE, OMEGA], [ONE, OMEGA, OMEGA2], [OMEGA, OMEGA2, ONE]])
    }
    pub fn ones() -> Complex3x3 {
        Complex3x3::from_element(ONE)
    }
    pub fn c0_delta2() -> Complex3x3 {
        mat([[ONE, OMEGA2, OMEGA], [OMEGA, ONE, OMEGA2], [OMEGA2, OMEGA, ONE]])
    }
    pub fn c0_delta3() -> Complex3x3 {
        mat([[ONE, OMEGA, OMEGA2], [OMEGA2, ONE, OMEGA], [OMEGA, OMEGA2, ONE]])
    }
    pub fn d_m2() -> Complex3x3 {
        crate::algebra::cols_all([OMEGA, OMEGA2, ONE])
    }
    pub fn d_m1_beta() -> Complex3x3 {
        c_m1_gamma()
    }
    pub fn d_m1_gamma() -> Complex3x3 {
        crate::algebra::cols_all([OMEGA2, OMEGA, ONE])
    }
}

/// Coefficients of E = X (family 1) or Y (family 2) at one x.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroExpansionX {
    pub x: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// δ_{i,1}, δ_{i,2}, δ_{i,3}
    pub delta: [f64; 3],
    /// C⁽⁻²⁾, C⁽⁻¹⁾, C⁽⁰⁾
    pub c: [Complex3x3; 3],
    pub fit_residual: f64,
    /// Largest imaginary part of the real coefficients.
    pub imag_max: f64,
}

/// Coefficients of X^A (family 1) or Y^A (family 2) at one x.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroExpansionXA {
    pub x: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: [f64; 3],
    /// D⁽⁻²⁾, D⁽⁻¹⁾, D⁽⁰⁾
    pub d: [Complex3x3; 3],
    pub fit_residual: f64,
    pub imag_max: f64,
}

pub(crate) fn c_coeffs(xd: &[Complex3x3; 3]) -> [Complex3x3; 3] {
    let l = p_laurent();
    [
        l.m2 * xd[0],
        l.m2 * xd[1] + l.m1 * xd[0],
        l.m2 * xd[2] * r(0.5) + l.m1 * xd[1] + l.m0 * xd[0] - Complex3x3::identity(),
    ]
}

pub(crate) fn d_coeffs(wd: &[Complex3x3; 3]) -> [Complex3x3; 3] {
    let [p0, p1, p2] = p_derivs();
    [
        p0.transpose() * wd[0],
        p0.transpose() * wd[1] + p1.transpose() * wd[0],
        p0.transpose() * wd[2] * r(0.5) + p1.transpose() * wd[1] + p2.transpose() * wd[0] * r(0.5)
            - Complex3x3::identity(),
    ]
}

fn imag_of(zs: &[C64]) -> f64 {
    zs.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

fn from_x_derivs(x: f64, xd: &[Complex3x3; 3]) -> ZeroExpansionX {
    use patterns::*;
    let c = c_coeffs(xd);
    let x0 = xd[0];
    let alpha = x0[(2, 2)] / 3.0;
    let gamma = x0[(1, 2)] / 3.0;
    let d13 = x0[(0, 2)] / 3.0;
    let (am2, r1) = pattern_fit(&c[0], &[c_m2()]);
    let (bg, r2) = pattern_fit(&c[1], &[c_m1_beta(), c_m1_gamma()]);
    let (dd, r3) = pattern_fit(&(c[2] + Complex3x3::identity()), &[ones(), c0_delta2(), c0_delta3()]);
    let fit_residual = r1.max(r2).max(r3).max((am2[0] - alpha).norm()).max((bg[1] - gamma).norm()).max((dd[2] - d13).norm());
    ZeroExpansionX {
        x,
        alpha: alpha.re,
        beta: bg[0].re,
        gamma: gamma.re,
        delta: [dd[0].re, dd[1].re, d13.re],
        c,
        fit_residual,
        imag_max: imag_of(&[alpha, gamma, d13, bg[0], dd[0], dd[1]]),
    }
}

fn from_w_derivs(x: f64, wd: &[Complex3x3; 3]) -> ZeroExpansionXA {
    use patterns::*;
    let d = d_coeffs(wd);
    let w0 = wd[0];
    let alpha = w0[(0, 2)];
    let gamma = w0[(1, 2)];
    let d13 = w0[(2, 2)];
    let beta = wd[1][(0, 2)];
    let (am2, r1) = pattern_fit(&d[0], &[d_m2()]);
    let (bg, r2) = pattern_fit(&d[1], &[d_m1_beta(), d_m1_gamma()]);
    let (dd, r3) = pattern_fit(&(d[2] + Complex3x3::identity()), &[c0_delta2(), c0_delta3(), ones()]);
    let fit_residual = r1
        .max(r2)
        .max(r3)
        .max((am2[0] - alpha).norm())
        .max((bg[0] - beta).norm())
        .max((bg[1] - gamma).norm())
        .max((dd[2] - d13).norm());
    ZeroExpansionXA {
        x,
        alpha: alpha.re,
        beta: beta.re,
        gamma: gamma.re,
        delta: [dd[0].re, dd[1].re, d13.re],
        d,
        fit_residual,
        imag_max: imag_of(&[alpha, gamma, d13, beta, dd[0], dd[1]]),
    }
}

/// Threshold on the pattern-fit residual above which the data are rejected.
pub const FIT_TOL: f64 = 1e-8;

/// X (family 1, kind X) or Y (family 2, kind Y) coefficients on an x-grid.
pub fn extract_coeffs_family(data: &InitialData, kind: EigenKind, xs: &[f64]) -> Result<Vec<ZeroExpansionX>> {
    if kind.adjoint() {
        return Err(Error::Invalid("extract_coeffs_family needs X or Y".into()));
    }
    let xd = x_derivs_at_zero(data, kind, xs)?;
    let out: Vec<ZeroExpansionX> = xs.iter().zip(&xd).map(|(&x, d)| from_x_derivs(x, d)).collect();
    check_fit(out.iter().map(|c| c.fit_residual))?;
    Ok(out)
}

pub fn extract_coeffs_a_family(data: &InitialData, kind: EigenKind, xs: &[f64]) -> Result<Vec<ZeroExpansionXA>> {
    if !kind.adjoint() {
        return Err(Error::Invalid("extract_coeffs_a_family needs XA or YA".into()));
    }
    let wd = x_derivs_at_zero(data, kind, xs)?;
    let out: Vec<ZeroExpansionXA> = xs.iter().zip(&wd).map(|(&x, d)| from_w_derivs(x, d)).collect();
    check_fit(out.iter().map(|c| c.fit_residual))?;
    Ok(out)
}

fn check_fit(res: impl Iterator<Item = f64>) -> Result<()> {
    let worst = res.fold(0.0, f64::max);
    if worst > FIT_TOL {
        return Err(Error::PatternFit(worst));
    }
    Ok(())
}

pub fn extract_coeffs(data: &InitialData, x: f64) -> Result<ZeroExpansionX> {
    Ok(extract_coeffs_family(data, EigenKind::X, &[x])?.remove(0))
}

pub fn extract_coeffs_a(data: &InitialData, x: f64) -> Result<ZeroExpansionXA> {
    Ok(extract_coeffs_a_family(data, EigenKind::XA, &[x])?.remove(0))
}

/// 𝔰⁽⁻²⁾ and 𝔰^{A(−2)}.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LaurentHeads {
    pub s_m2: f64,
    pub sa_m2: f64,
    /// Largest imaginary part met in either integral.
    pub imag_max: f64,
    /// Change of the last panel doubling.
    pub quad_change: f64,
}

impl LaurentHeads {
    pub fn require_nonzero(&self) -> Result<()> {
        if self.s_m2.abs() < 1e-8 || self.sa_m2.abs() < 1e-8 {
            return Err(Error::AssumptionViolation(format!(
                "Laurent heads too small: s = {:e}, sA = {:e}",
                self.s_m2, self.sa_m2
            )));
        }
        Ok(())
    }
}

/// Integrates 2uγ₁ + (u_x + v)δ₁,₃ and −(u_x + v)δ̃₁,₃ over the support with
/// doubling Gauss–Legendre panels.
pub fn laurent_heads(data: &InitialData) -> Result<LaurentHeads> {
    let rad = data.support_radius;
    let eval = |panels: usize| -> Result<(C64, C64)> {
        let pan = Panels::new(-rad, rad, panels, 16);
        let xd = x_derivs_at_zero(data, EigenKind::X, &pan.nodes)?;
        let wd = x_derivs_at_zero(data, EigenKind::XA, &pan.nodes)?;
        let (mut s, mut sa) = (ZERO, ZERO);
        for (i, (&x, &w)) in pan.nodes.iter().zip(&pan.weights).enumerate() {
            let [u, ux, _, v, _] = data.all(x);
            let gamma = xd[i][0][(1, 2)] / 3.0;
            let d13 = xd[i][0][(0, 2)] / 3.0;
            s += (gamma * (2.0 * u) + d13 * (ux + v)) * w;
            sa -= wd[i][0][(2, 2)] * ((ux + v) * w);
        }
        Ok((s, sa))
    };
    let mut panels = 8;
    let mut prev = eval(panels)?;
    loop {
        panels *= 2;
        let next = eval(panels)?;
        let change = (next.0 - prev.0).norm().max((next.1 - prev.1).norm());
        let scale = next.0.norm().max(next.1.norm()).max(1e-300);
        if change <= 1e-13 * scale.max(1e-3) || panels >= 1024 {
            return Ok(LaurentHeads {
                s_m2: next.0.re,
                sa_m2: next.1.re,
                imag_max: next.0.im.abs().max(next.1.im.abs()),
                quad_change: change,
            });
        }
        prev = next;
    }
}

/// s⁽⁻²⁾ and s^{A(−2)} as full matrices from the integrals
/// −∫P⁽⁻²⁾Ũ𝒳(x,0)dx and ∫P(0)ᵀŨᵀ(k²𝒳^A)(x,0)dx (same policy as above).
pub fn laurent_head_matrices(data: &InitialData, panels: usize) -> Result<[Complex3x3; 2]> {
    let rad = data.support_radius;
    let pan = Panels::new(-rad, rad, panels, 16);
    let xd = x_derivs_at_zero(data, EigenKind::X, &pan.nodes)?;
    let wd = x_derivs_at_zero(data, EigenKind::XA, &pan.nodes)?;
    let l = p_laurent();
    let p0t = p_derivs()[0].transpose();
    let (mut s, mut sa) = (Complex3x3::zeros(), Complex3x3::zeros());
    for (i, (&x, &w)) in pan.nodes.iter().zip(&pan.weights).enumerate() {
        let [u, ux, _, v, _] = data.all(x);
        let ut = utilde(u, ux, v);
        s -= l.m2 * ut * xd[i][0] * r(w);
        sa += p0t * ut.transpose() * wd[i][0] * r(w);
    }
    Ok([s, sa])
}

/// Scalar coefficients of M₁ and M₁⁻¹ at k = 0 together with the families
/// they are built from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MZeroCoeffs {
    pub x: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub alpha_t: f64,
    pub beta_t: f64,
    pub gamma_t: f64,
    pub delta_t: f64,
    pub epsilon_t: f64,
    /// 𝓜₁⁽⁻²⁾ and 𝓜₁⁽⁻¹⁾ from the displayed patterns.
    pub m_m2: Complex3x3,
    pub m_m1: Complex3x3,
    /// Third column of 𝓜₁⁽⁰⁾.
    pub m0_col3: CVec3,
}

/// Evaluates the coefficients on an x-grid; `heads` must come from
/// `laurent_heads` for the same data.
pub fn m_zero_coeffs(data: &InitialData, xs: &[f64], heads: &LaurentHeads) -> Result<Vec<MZeroCoeffs>> {
    heads.require_nonzero()?;
    let (x1, y1, xa, ya) = families(data, xs)?;
    let (s, sa) = (heads.s_m2, heads.sa_m2);
    let one_minus_w = ONE - OMEGA;
    Ok((0..xs.len())
        .map(|i| {
            let delta = (ya[i].alpha * xa[i].gamma - xa[i].alpha * ya[i].gamma) / s;
            let delta_t = (y1[i].alpha * x1[i].gamma - x1[i].alpha * y1[i].gamma) / sa;
            let m_m2 = mat([[OMEGA * x1[i].alpha, ZERO, ZERO]; 3]);
            let col1 = patterns::c_m1_beta() * r(x1[i].beta) + patterns::c_m1_gamma() * r(x1[i].gamma);
            let m_m1 = mat([
                [col1[(0, 0)], one_minus_w * delta, ZERO],
                [col1[(1, 0)], one_minus_w * delta, ZERO],
                [col1[(2, 0)], one_minus_w * delta, ZERO],
            ]);
            let eps = y1[i].alpha / sa;
            MZeroCoeffs {
                x: xs[i],
                alpha: x1[i].alpha,
                beta: x1[i].beta,
                gamma: x1[i].gamma,
                delta,
                epsilon: eps,
                alpha_t: xa[i].alpha,
                beta_t: xa[i].beta,
                gamma_t: xa[i].gamma,
                delta_t,
                epsilon_t: ya[i].alpha / s,
                m_m2,
                m_m1,
                m0_col3: CVec3::new(r(eps), r(eps), r(eps)),
            }
        })
        .collect())
}

type Families = (Vec<ZeroExpansionX>, Vec<ZeroExpansionX>, Vec<ZeroExpansionXA>, Vec<ZeroExpansionXA>);

fn families(data: &InitialData, xs: &[f64]) -> Result<Families> {
    let kinds = [EigenKind::X, EigenKind::Y, EigenKind::XA, EigenKind::YA];
    let mut raw: Vec<Vec<[Complex3x3; 3]>> =
        kinds.par_iter().map(|&k| x_derivs_at_zero(data, k, xs)).collect::<Result<_>>()?;
    let ya: Vec<_> = raw.pop().unwrap().iter().zip(xs).map(|(d, &x)| from_w_derivs(x, d)).collect();
    let xa: Vec<_> = raw.pop().unwrap().iter().zip(xs).map(|(d, &x)| from_w_derivs(x, d)).collect();
    let y1: Vec<_> = raw.pop().unwrap().iter().zip(xs).map(|(d, &x)| from_x_derivs(x, d)).collect();
    let x1: Vec<_> = raw.pop().unwrap().iter().zip(xs).map(|(d, &x)| from_x_derivs(x, d)).collect();
    check_fit(x1.iter().map(|c| c.fit_residual).chain(y1.iter().map(|c| c.fit_residual)))?;
    check_fit(xa.iter().map(|c| c.fit_residual).chain(ya.iter().map(|c| c.fit_residual)))?;
    Ok((x1, y1, xa, ya))
}

/// 𝓜₁⁽⁻²⁾, 𝓜₁⁽⁻¹⁾ and the third column of 𝓜₁⁽⁰⁾ by Laurent arithmetic on
/// the column formulas for M₁ in terms of X, Y, X^A, Y^A, s and s^A (no
/// pattern fits involved). `heads` are the raw s⁽⁻²⁾, s^{A(−2)} matrices.
pub fn m_laurent_assembly(data: &InitialData, x: f64, heads: &[Complex3x3; 2]) -> Result<[Complex3x3; 3]> {
    let xd = x_derivs_at_zero(data, EigenKind::X, &[x])?.remove(0);
    let yd = x_derivs_at_zero(data, EigenKind::Y, &[x])?.remove(0);
    let xad = x_derivs_at_zero(data, EigenKind::XA, &[x])?.remove(0);
    let yad = x_derivs_at_zero(data, EigenKind::YA, &[x])?.remove(0);
    let cx = c_coeffs(&xd);
    let cy = c_coeffs(&yd);
    let dxa = d_coeffs(&xad);
    let dya = d_coeffs(&yad);
    let s11 = heads[0][(0, 0)];
    let sa33 = heads[1][(2, 2)];
    if s11.norm() < 1e-12 || sa33.norm() < 1e-12 {
        return Err(Error::AssumptionViolation("vanishing Laurent head".into()));
    }
    // second column: (X^A col 3) × (Y^A col 1) / s₁₁
    let cross = |a: CVec3, b: CVec3| a.cross(&b);
    let b2 = dxa[0].column(2).into_owned();
    let b1 = dxa[1].column(2).into_owned();
    let a2 = dya[0].column(0).into_owned();
    let a1 = dya[1].column(0).into_owned();
    let p4 = cross(b2, a2);
    if p4.norm() > 1e-9 * (b2.norm() * a2.norm()).max(1e-300) {
        return Err(Error::PatternFit(p4.norm()));
    }
    let p3 = cross(b2, a1) + cross(b1, a2);
    let mut mm2 = Complex3x3::zeros();
    let mut mm1 = Complex3x3::zeros();
    let mut m0 = Complex3x3::zeros();
    mm2.set_column(0, &cx[0].column(0));
    mm1.set_column(0, &cx[1].column(0));
    mm1.set_column(1, &(p3 / s11));
    m0.set_column(2, &(cy[0].column(2) / sa33));
    Ok([mm2, mm1, m0])
}

/// (ω, ω², 1)·A as a row.
pub fn n_row_of(a: &Complex3x3) -> [C64; 3] {
    let n = nalgebra::RowVector3::new(OMEGA, OMEGA2, ONE);
    let v = n * a;
    [v[0], v[1], v[2]]
}

/// Max-entry distance of two matrices relative to the larger one (for tests).
pub fn rel_diff(a: &Complex3x3, b: &Complex3x3) -> f64 {
    max_abs_diff(a, b) / max_abs(a).max(max_abs(b)).max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{builtin_bump, builtin_zero};
    use crate::scattering::{regular_state, VolterraOptions};

    #[test]
    fn zero_data_trivial() {
        let z = builtin_zero();
        let d = x_derivs_at_zero(&z, EigenKind::X, &[0.3]).unwrap();
        let p = p_derivs();
        for n in 0..3 {
            assert!(max_abs_diff(&d[0][n], &p[n]) < 1e-14);
        }
        let c = extract_coeffs(&z, 0.0).unwrap();
        assert!(c.alpha.abs() < 1e-14 && c.gamma.abs() < 1e-14);
        assert!((c.delta[2] - 1.0 / 3.0).abs() < 1e-14);
        let a = extract_coeffs_a(&z, 0.0).unwrap();
        assert!(a.alpha.abs() < 1e-14);
        assert!((a.delta[2] - 1.0 / 3.0).abs() < 1e-14);
        let h = laurent_heads(&z).unwrap();
        assert_eq!(h.s_m2, 0.0);
        assert!(m_zero_coeffs(&z, &[0.0], &h).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let d = builtin_bump();
        let xs = [-0.7, 0.1, 0.6];
        for kind in [EigenKind::X, EigenKind::XA, EigenKind::Y, EigenKind::YA] {
            let exact = x_derivs_at_zero(&d, kind, &xs).unwrap();
            // kind-appropriate direction inside the closed column domains
            let dir = match kind {
                EigenKind::X | EigenKind::YA => C64::from_polar(1.0, std::f64::consts::PI / 6.0),
                _ => C64::from_polar(1.0, 7.0 * std::f64::consts::PI / 6.0),
            };
            let h = 1e-3;
            let o = VolterraOptions::default();
            let fp = regular_state(&d, kind, dir * h, &xs, &o).unwrap();
            let fm = regular_state(&d, kind, -dir * h, &xs, &o).unwrap();
            for i in 0..xs.len() {
                let d1 = (fp[i] - fm[i]) / (dir * (2.0 * h));
                let d2 = (fp[i] + fm[i] - exact[i][0] * r(2.0)) / (dir * dir * (h * h));
                assert!(max_abs_diff(&d1, &exact[i][1]) < 1e-6, "{kind:?} d1 {}", max_abs_diff(&d1, &exact[i][1]));
                assert!(max_abs_diff(&d2, &exact[i][2]) < 1e-4, "{kind:?} d2 {}", max_abs_diff(&d2, &exact[i][2]));
            }
        }
    }

    #[test]
    fn coefficient_families_are_real_and_patterned() {
        let d = builtin_bump();
        let xs: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
        let cx = extract_coeffs_family(&d, EigenKind::X, &xs).unwrap();
        let ca = extract_coeffs_a_family(&d, EigenKind::XA, &xs).unwrap();
        for c in &cx {
            assert!(c.imag_max < 1e-10 && c.fit_residual < 1e-10, "{c:?}");
            let rebuilt = patterns::c_m2() * r(c.alpha);
            assert!(max_abs_diff(&rebuilt, &c.c[0]) < 1e-10);
        }
        for c in &ca {
            assert!(c.imag_max < 1e-10 && c.fit_residual < 1e-10, "{c:?}");
        }
        // right of the support the X-family is trivial
        let last = cx.last().unwrap();
        assert!(last.alpha.abs() < 1e-12 && (last.delta[2] - 1.0 / 3.0).abs() < 1e-12);
        // left of the support: α constant, β and γ linear, δ quadratic in x
        let far = extract_coeffs_family(&d, EigenKind::X, &[-10.0, -20.0, -30.0, -40.0]).unwrap();
        assert!((far[1].alpha - far[0].alpha).abs() < 1e-10);
        assert!((far[2].gamma - 2.0 * far[1].gamma + far[0].gamma).abs() < 1e-9);
        assert!((far[2].beta - 2.0 * far[1].beta + far[0].beta).abs() < 1e-9);
        let third = far[3].delta[2] - 3.0 * far[2].delta[2] + 3.0 * far[1].delta[2] - far[0].delta[2];
        assert!(third.abs() < 1e-8, "{third}");
    }

    #[test]
    fn laurent_head_matches_display_and_matrix_route() {
        let d = builtin_bump();
        let h = laurent_heads(&d).unwrap();
        assert!(h.imag_max < 1e-10);
        let m = laurent_head_matrices(&d, 128).unwrap();
        assert!(rel_diff(&m[0], &(patterns::c_m2() * r(h.s_m2))) < 1e-9, "{}", m[0]);
        assert!(rel_diff(&m[1], &(patterns::d_m2() * r(h.sa_m2))) < 1e-9, "{}", m[1]);
    }

    #[test]
    fn m_coefficients_agree_with_laurent_assembly() {
        let d = builtin_bump();
        let h = laurent_heads(&d).unwrap();
        let m = laurent_head_matrices(&d, 128).unwrap();
        for x in [-1.5, -0.3, 0.4] {
            let c = &m_zero_coeffs(&d, &[x], &h).unwrap()[0];
            let a = m_laurent_assembly(&d, x, &m).unwrap();
            assert!(max_abs_diff(&a[0], &c.m_m2) < 1e-9);
            assert!(max_abs_diff(&a[1], &c.m_m1) < 1e-8, "{} {}", a[1], c.m_m1);
            assert!((a[2].column(2) - c.m0_col3).norm() < 1e-8);
            for row in [&a[0], &a[1]] {
                assert!(n_row_of(row).iter().all(|z| z.norm() < 1e-10));
            }
        }
    }
}
