//! Volterra eigenfunctions X, Y, X^A, Y^A, the spectral matrices s, s^A,
//! reflection coefficients and the assumption checks.
//!
//! All data handled here have compact support [−R, R], so every eigenfunction
//! column exists for every k ≠ 0. Column domains are still tracked: outside
//! them the value is an analytic continuation that grows like e^{2R|Δl|}.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::algebra::{
    companion, diag, eigen_weights, max_abs, minor, p_laurent, p_matrix, p_inverse, r,
    Complex3x3, CVec3, Domain, C64, OMEGA, OMEGA2, ONE, ZERO,
};
use crate::error::{Error, Result};
use crate::extrapolate::{richardson, Extrapolated};
use crate::ode::{lawson_dp45, OdeOptions};
use crate::potentials::{u_matrix, utilde, InitialData};
use crate::quadrature::{self, Panels};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EigenKind {
    X,
    Y,
    XA,
    YA,
}

impl EigenKind {
    /// Normalized at +∞ (X, X^A) or −∞ (Y, Y^A).
    pub fn from_plus(self) -> bool {
        matches!(self, EigenKind::X | EigenKind::XA)
    }

    pub fn adjoint(self) -> bool {
        matches!(self, EigenKind::XA | EigenKind::YA)
    }

    /// Closed domains of the three columns for Schwartz-class data.
    pub fn column_domains(self) -> [Domain; 3] {
        let negate = matches!(self, EigenKind::Y | EigenKind::XA);
        [Domain::rotated_s(2, negate), Domain::rotated_s(1, negate), Domain::rotated_s(0, negate)]
    }

    pub fn name(self) -> &'static str {
        match self {
            EigenKind::X => "X",
            EigenKind::Y => "Y",
            EigenKind::XA => "XA",
            EigenKind::YA => "YA",
        }
    }
}

/// Domain matrix of s (negate = false) or s^A (negate = true).
pub fn entry_domains(negate: bool) -> [[Domain; 3]; 3] {
    let s = |m| Domain::rotated_s(m, negate);
    let ray = |m| Domain::rotated_ray(m, negate);
    [[s(2), ray(0), ray(1)], [ray(0), s(1), ray(2)], [ray(1), ray(2), s(0)]]
}

fn defined_mask(negate: bool, k: C64) -> [[bool; 3]; 3] {
    let d = entry_domains(negate);
    let mut out = [[false; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = d[i][j].contains(k);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formulation {
    /// Regular near k = 0, diagonal elsewhere.
    Auto,
    /// Integrating factor on the diagonal 𝓛; stiff as k → 0.
    Diagonal,
    /// 𝒳 = PX (k²P⁻ᵀX^A for the adjoint); cost grows with |k|³.
    Regular,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct VolterraOptions {
    pub atol: f64,
    pub rtol: f64,
    pub margin: f64,
    pub formulation: Formulation,
    /// |k| below which `Auto` picks the regular formulation.
    pub regular_below: f64,
    /// Relative tolerance of the panel-doubling quadrature for s, s^A.
    pub quad_tol: f64,
    pub max_panels: usize,
}

impl Default for VolterraOptions {
    fn default() -> Self {
        Self {
            atol: 1e-11,
            rtol: 1e-11,
            margin: 0.5,
            formulation: Formulation::Auto,
            regular_below: 0.75,
            quad_tol: 1e-12,
            max_panels: 256,
        }
    }
}

impl VolterraOptions {
    fn ode(&self) -> OdeOptions {
        OdeOptions { atol: self.atol, rtol: self.rtol, ..Default::default() }
    }

    fn regular(&self, k: C64) -> bool {
        match self.formulation {
            Formulation::Auto => k.norm() < self.regular_below,
            Formulation::Diagonal => false,
            Formulation::Regular => true,
        }
    }
}

/// k²E and k²·(U E) (k²·(Uᵀ E) for the adjoint kinds) at one x.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SweepPoint {
    pub k2e: Complex3x3,
    pub k2ue: Complex3x3,
    /// Raw state: 𝒳 = PE or k²P⁻ᵀE in the regular formulation, E otherwise.
    pub psi: Complex3x3,
}

fn k2_pinv(k: C64) -> Complex3x3 {
    let l = p_laurent();
    l.m2 + l.m1 * k + l.m0 * (k * k)
}

/// Integrates the requested columns of one eigenfunction through `xs`
/// (any order) and returns k²E, k²UE at each x, in the order given.
pub(crate) fn sweep(
    data: &InitialData,
    kind: EigenKind,
    k: C64,
    cols: &[usize],
    xs: &[f64],
    opts: &VolterraOptions,
) -> Result<Vec<SweepPoint>> {
    if k == ZERO {
        return Err(Error::Origin);
    }
    let big = data.support_radius + opts.margin;
    let x0 = if kind.from_plus() { big } else { -big };
    let sign = if kind.from_plus() { -1.0 } else { 1.0 };
    // integration order: away from the normalization end
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| (sign * xs[a]).partial_cmp(&(sign * xs[b])).unwrap());
    let stops: Vec<f64> = order.iter().map(|&i| if sign * xs[i] < sign * x0 { x0 } else { xs[i] }).collect();

    let regular = opts.regular(k);
    let w = eigen_weights(k);
    let adj = kind.adjoint();
    let k2 = k * k;
    let p = p_matrix(k);
    let pinv2 = k2_pinv(k);
    let ckk = companion(k);
    let mut states = vec![[[ZERO; 3]; 3]; xs.len()];

    for &j in cols {
        let (lambda, y0): ([C64; 3], [C64; 3]) = if regular {
            if adj {
                let col = pinv2.transpose().column(j).into_owned();
                ([w.l[j]; 3], [col[0], col[1], col[2]])
            } else {
                let col = p.column(j).into_owned();
                ([-w.l[j]; 3], [col[0], col[1], col[2]])
            }
        } else {
            let mut lam = [ZERO; 3];
            for i in 0..3 {
                lam[i] = if adj { -(w.l[i] - w.l[j]) } else { w.l[i] - w.l[j] };
            }
            let mut e = [ZERO; 3];
            e[j] = ONE;
            (lam, e)
        };
        let rhs = |x: f64, y: &[C64], d: &mut [C64]| {
            let [u, ux, _, v, _] = data.all(x);
            let yv = CVec3::new(y[0], y[1], y[2]);
            let out = if regular {
                let m = ckk + utilde(u, ux, v);
                if adj {
                    -(m.transpose() * yv)
                } else {
                    m * yv
                }
            } else {
                let um = u_matrix(u, ux, v, k);
                if adj {
                    -(um.transpose() * yv)
                } else {
                    um * yv
                }
            };
            d.copy_from_slice(out.as_slice());
        };
        let sol = lawson_dp45(&lambda, rhs, x0, &y0, &stops, &opts.ode())?;
        for (pos, &idx) in order.iter().enumerate() {
            for i in 0..3 {
                states[idx][i][j] = sol[pos][i];
            }
        }
    }

    let mut out = Vec::with_capacity(xs.len());
    for (idx, st) in states.iter().enumerate() {
        let psi = Complex3x3::from_fn(|i, j| st[i][j]);
        let x = xs[idx];
        let [u, ux, _, v, _] = data.all(x);
        let point = if regular {
            let ut = utilde(u, ux, v);
            if adj {
                SweepPoint { k2e: p.transpose() * psi, k2ue: p.transpose() * ut.transpose() * psi, psi }
            } else {
                SweepPoint { k2e: pinv2 * psi, k2ue: pinv2 * ut * psi, psi }
            }
        } else {
            let um = u_matrix(u, ux, v, k);
            let e = psi;
            let ue = if adj { um.transpose() * e } else { um * e };
            SweepPoint { k2e: e * k2, k2ue: ue * k2, psi }
        };
        out.push(point);
    }
    // columns that were not integrated keep the identity normalization
    let skipped: Vec<usize> = (0..3).filter(|j| !cols.contains(j)).collect();
    if !skipped.is_empty() {
        for pt in &mut out {
            for &j in &skipped {
                for i in 0..3 {
                    pt.k2e[(i, j)] = if i == j { k2 } else { ZERO };
                    pt.k2ue[(i, j)] = ZERO;
                }
            }
        }
    }
    Ok(out)
}

/// 𝒳 = PE (E = X, Y) or k²P⁻ᵀE (E = X^A, Y^A) at the given x.
pub fn regular_state(
    data: &InitialData,
    kind: EigenKind,
    k: C64,
    xs: &[f64],
    opts: &VolterraOptions,
) -> Result<Vec<Complex3x3>> {
    let o = VolterraOptions { formulation: Formulation::Regular, ..opts.clone() };
    Ok(sweep(data, kind, k, &[0, 1, 2], xs, &o)?.into_iter().map(|p| p.psi).collect())
}

/// One eigenfunction value with per-column domain tags.
#[derive(Clone, Debug)]
pub struct Eigenfunction {
    pub kind: EigenKind,
    pub x: f64,
    pub k: C64,
    pub value: Complex3x3,
    pub defined: [bool; 3],
}

impl Eigenfunction {
    /// Column j, refusing columns outside their Schwartz-class domain.
    pub fn column_strict(&self, j: usize) -> Result<CVec3> {
        if !self.defined[j] {
            return Err(Error::domain(format!("{} column {}", self.kind.name(), j + 1), self.k));
        }
        Ok(self.value.column(j).into_owned())
    }
}

pub fn solve_eigenfunction(
    kind: EigenKind,
    data: &InitialData,
    x: f64,
    k: C64,
    opts: &VolterraOptions,
) -> Result<Eigenfunction> {
    let pts = eigenfunction_at(kind, data, &[x], k, opts)?;
    let doms = kind.column_domains();
    Ok(Eigenfunction {
        kind,
        x,
        k,
        value: pts[0],
        defined: [doms[0].contains(k), doms[1].contains(k), doms[2].contains(k)],
    })
}

/// Full eigenfunction matrices at several x.
pub fn eigenfunction_at(
    kind: EigenKind,
    data: &InitialData,
    xs: &[f64],
    k: C64,
    opts: &VolterraOptions,
) -> Result<Vec<Complex3x3>> {
    let pts = sweep(data, kind, k, &[0, 1, 2], xs, opts)?;
    let inv = ONE / (k * k);
    Ok(pts.into_iter().map(|p| p.k2e * inv).collect())
}

/// Independent reconstruction of column j of X from the scalar third-order
/// equation Lφ = k³φ written as Φ_x = (C(k) + Ũ)Φ, seeded with the far-field
/// exponential P_j e^{l_j x}. Returns P⁻¹Φ e^{−l_j x}.
pub fn oracle_scalar(data: &InitialData, x: f64, k: C64, j: usize, seed_scale: f64) -> Result<CVec3> {
    if k == ZERO {
        return Err(Error::Origin);
    }
    let x0 = data.support_radius + 0.5;
    let lj = eigen_weights(k).l[j];
    let col = p_matrix(k).column(j).into_owned() * (lj * x0).exp() * r(seed_scale);
    let ckk = companion(k);
    let opts = OdeOptions { atol: 1e-13, rtol: 1e-12, h_max: 0.02, ..Default::default() };
    let sol = lawson_dp45(
        &[ZERO; 3],
        |s, y, d| {
            let [u, ux, _, v, _] = data.all(s);
            let out = (ckk + utilde(u, ux, v)) * CVec3::new(y[0], y[1], y[2]);
            d.copy_from_slice(out.as_slice());
        },
        x0,
        &[col[0], col[1], col[2]],
        &[x.min(x0)],
        &opts,
    )?;
    let phi = CVec3::new(sol[0][0], sol[0][1], sol[0][2]);
    Ok(p_inverse(k)? * phi * (-lj * x.min(x0)).exp())
}

/// s(k) and s^A(k) with per-entry domain tags.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScatteringMatrix {
    pub k: C64,
    pub s: Complex3x3,
    pub sa: Complex3x3,
    pub s_defined: [[bool; 3]; 3],
    pub sa_defined: [[bool; 3]; 3],
}

impl ScatteringMatrix {
    pub fn s_entry(&self, i: usize, j: usize) -> Result<C64> {
        if !self.s_defined[i][j] {
            return Err(Error::domain(format!("s{}{}", i + 1, j + 1), self.k));
        }
        Ok(self.s[(i, j)])
    }

    pub fn sa_entry(&self, i: usize, j: usize) -> Result<C64> {
        if !self.sa_defined[i][j] {
            return Err(Error::domain(format!("sA{}{}", i + 1, j + 1), self.k));
        }
        Ok(self.sa[(i, j)])
    }
}

/// k²s (adjoint = false) or k²s^A (adjoint = true) by composite
/// Gauss–Legendre quadrature of the defining integral, restricted to the
/// requested columns (other columns are left at k²I).
pub(crate) fn scaled_spectral(
    data: &InitialData,
    k: C64,
    adjoint: bool,
    cols: &[usize],
    opts: &VolterraOptions,
) -> Result<Complex3x3> {
    let kind = if adjoint { EigenKind::XA } else { EigenKind::X };
    let rad = data.support_radius;
    let w = eigen_weights(k);
    let k2 = k * k;
    let eval = |panels: usize| -> Result<Complex3x3> {
        let pan = Panels::new(-rad, rad, panels, 16);
        let pts = sweep(data, kind, k, cols, &pan.nodes, opts)?;
        let mut acc = Complex3x3::zeros();
        for (pt, (&x, &wt)) in pts.iter().zip(pan.nodes.iter().zip(&pan.weights)) {
            for i in 0..3 {
                for &j in cols {
                    let dl = w.l[i] - w.l[j];
                    let f = if adjoint { (dl * x).exp() } else { (-dl * x).exp() };
                    acc[(i, j)] += pt.k2ue[(i, j)] * f * wt;
                }
            }
        }
        let sign = if adjoint { ONE } else { -ONE };
        Ok(Complex3x3::identity() * k2 + acc * sign)
    };
    let mut panels = 4;
    let mut prev = eval(panels)?;
    loop {
        panels *= 2;
        let next = eval(panels)?;
        let scale = max_abs(&next).max(k2.norm());
        let diff = crate::algebra::max_abs_diff(&next, &prev);
        if diff <= opts.quad_tol * scale || panels >= opts.max_panels {
            return Ok(next);
        }
        prev = next;
    }
}

/// k²s from the far-left value of X: s = e^{−x𝓛̂}X(x) for x left of the
/// support (test oracle for the quadrature route).
pub fn scaled_s_endpoint(data: &InitialData, k: C64, adjoint: bool, opts: &VolterraOptions) -> Result<Complex3x3> {
    let kind = if adjoint { EigenKind::XA } else { EigenKind::X };
    let x = -data.support_radius - opts.margin;
    let pt = sweep(data, kind, k, &[0, 1, 2], &[x], opts)?[0];
    let w = eigen_weights(k);
    Ok(Complex3x3::from_fn(|i, j| {
        let dl = w.l[i] - w.l[j];
        let f = if adjoint { (dl * x).exp() } else { (-dl * x).exp() };
        pt.k2e[(i, j)] * f
    }))
}

pub fn scattering(data: &InitialData, k: C64, opts: &VolterraOptions) -> Result<ScatteringMatrix> {
    if k == ZERO {
        return Err(Error::Origin);
    }
    let inv = ONE / (k * k);
    let s = scaled_spectral(data, k, false, &[0, 1, 2], opts)? * inv;
    let sa = scaled_spectral(data, k, true, &[0, 1, 2], opts)? * inv;
    Ok(ScatteringMatrix { k, s, sa, s_defined: defined_mask(false, k), sa_defined: defined_mask(true, k) })
}

/// Sampled reflection coefficients.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReflectionCoefficients {
    /// (k, r₁(k)) with k > 0, increasing.
    pub r1: Vec<(f64, C64)>,
    /// (k, r₂(k)) with k < 0, increasing in |k|.
    pub r2: Vec<(f64, C64)>,
    pub r1_at_0: C64,
    pub r2_at_0: C64,
    pub r1_at_0_spread: f64,
    pub r2_at_0_spread: f64,
}

/// r₁(k) for k > 0 (also valid at complex k where s₁₂ is continued).
pub fn r1_at(data: &InitialData, k: C64, opts: &VolterraOptions) -> Result<C64> {
    let s = scaled_spectral(data, k, false, &[0, 1], opts)?;
    ratio(s[(0, 1)], s[(0, 0)], k)
}

/// r₂(k) for k < 0.
pub fn r2_at(data: &InitialData, k: C64, opts: &VolterraOptions) -> Result<C64> {
    let s = scaled_spectral(data, k, true, &[0, 1], opts)?;
    ratio(s[(0, 1)], s[(0, 0)], k)
}

fn ratio(num: C64, den: C64, k: C64) -> Result<C64> {
    if den.norm() <= 1e-12 * num.norm() || den == ZERO {
        return Err(Error::PossibleSoliton { k_re: k.re, k_im: k.im });
    }
    Ok(num / den)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ReflectionOptions {
    /// Base step of the Richardson extrapolation to k = 0.
    pub h0: f64,
    pub levels: usize,
}

impl Default for ReflectionOptions {
    fn default() -> Self {
        Self { h0: 2e-3, levels: 4 }
    }
}

pub fn reflection(
    data: &InitialData,
    k1_grid: &[f64],
    k2_grid: &[f64],
    ropts: &ReflectionOptions,
    opts: &VolterraOptions,
) -> Result<ReflectionCoefficients> {
    if k1_grid.iter().any(|&k| k <= 0.0) || k2_grid.iter().any(|&k| k >= 0.0) {
        return Err(Error::Invalid("r1 needs k > 0 and r2 needs k < 0".into()));
    }
    let mut g1 = k1_grid.to_vec();
    g1.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut g2 = k2_grid.to_vec();
    g2.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let r1: Vec<(f64, C64)> =
        g1.par_iter().map(|&k| r1_at(data, r(k), opts).map(|v| (k, v))).collect::<Result<_>>()?;
    let r2: Vec<(f64, C64)> =
        g2.par_iter().map(|&k| r2_at(data, r(k), opts).map(|v| (k, v))).collect::<Result<_>>()?;
    let e1 = extrapolate_to_zero(|h| r1_at(data, r(h), opts), ropts)?;
    let e2 = extrapolate_to_zero(|h| r2_at(data, r(-h), opts), ropts)?;
    Ok(ReflectionCoefficients {
        r1,
        r2,
        r1_at_0: e1.value,
        r2_at_0: e2.value,
        r1_at_0_spread: e1.spread,
        r2_at_0_spread: e2.spread,
    })
}

/// Richardson extrapolation of f(h) to h = 0 from h0·2^i, i < levels.
pub fn extrapolate_to_zero<F>(f: F, ropts: &ReflectionOptions) -> Result<Extrapolated>
where
    F: Fn(f64) -> Result<C64> + Sync,
{
    let hs: Vec<f64> = (0..ropts.levels).map(|i| ropts.h0 * 2f64.powi(i as i32)).collect();
    let fs: Vec<C64> = hs.par_iter().map(|&h| f(h)).collect::<Result<_>>()?;
    Ok(richardson(&hs, &fs))
}

impl ReflectionCoefficients {
    /// r₁ at k > 0: exact sample when present, otherwise six-point Lagrange
    /// interpolation inside the sampled range.
    pub fn r1(&self, k: f64) -> Result<C64> {
        lookup(&self.r1, k, self.r1_at_0)
    }

    /// r₂ at k < 0.
    pub fn r2(&self, k: f64) -> Result<C64> {
        let flipped: Vec<(f64, C64)> = self.r2.iter().map(|&(a, v)| (-a, v)).collect();
        lookup(&flipped, -k, self.r2_at_0)
    }

    pub fn zero() -> Self {
        Self { r1: vec![], r2: vec![], r1_at_0: ZERO, r2_at_0: ZERO, r1_at_0_spread: 0.0, r2_at_0_spread: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.r1.is_empty() && self.r2.is_empty() && self.r1_at_0 == ZERO && self.r2_at_0 == ZERO
    }
}

fn lookup(samples: &[(f64, C64)], k: f64, at0: C64) -> Result<C64> {
    if samples.is_empty() {
        if at0 == ZERO {
            return Ok(ZERO);
        }
        return Err(Error::ExtrapolationRefused(k));
    }
    if let Some(&(_, v)) = samples.iter().find(|(a, _)| (*a - k).abs() <= 1e-14 * k.abs().max(1.0)) {
        return Ok(v);
    }
    let (lo, hi) = (samples[0].0, samples[samples.len() - 1].0);
    if k < lo || k > hi || samples.len() < 2 {
        return Err(Error::ExtrapolationRefused(k));
    }
    let pos = samples.partition_point(|(a, _)| *a < k);
    let m = samples.len().min(6);
    let start = pos.saturating_sub(m / 2).min(samples.len() - m);
    let pts = &samples[start..start + m];
    let mut acc = ZERO;
    for (a, &(xa, va)) in pts.iter().enumerate() {
        let mut wgt = 1.0;
        for (b, &(xb, _)) in pts.iter().enumerate() {
            if a != b {
                wgt *= (k - xb) / (xa - xb);
            }
        }
        acc += va * wgt;
    }
    Ok(acc)
}

/// Polar sampling grid over a closed sector.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PolarGrid {
    pub radii: usize,
    pub angles: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for PolarGrid {
    fn default() -> Self {
        Self { radii: 64, angles: 64, r_min: 1e-3, r_max: 50.0 }
    }
}

impl PolarGrid {
    /// Points of the closed sector arg ∈ [a0, a0 + π/3].
    pub fn points(&self, a0: f64) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.radii * self.angles);
        for i in 0..self.radii {
            let t = if self.radii == 1 { 0.0 } else { i as f64 / (self.radii - 1) as f64 };
            let rad = self.r_min * (self.r_max / self.r_min).powf(t);
            for j in 0..self.angles {
                let s = if self.angles == 1 { 0.5 } else { j as f64 / (self.angles - 1) as f64 };
                out.push(C64::from_polar(rad, a0 + s * PI / 3.0));
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub min_abs_s11: f64,
    pub min_s11_at: C64,
    pub min_abs_sa11: f64,
    pub min_sa11_at: C64,
    pub limit_k2_s11: C64,
    pub limit_k2_sa11: C64,
    pub assumption1: bool,
    pub assumption2: bool,
}

/// Scan of |s₁₁| over D̄₁ and |s^A₁₁| over D̄₄ plus the k → 0 limits of
/// k²s₁₁ and k²s^A₁₁. The scan is a heuristic: a zero between grid points
/// can be missed.
pub fn check_assumptions(
    data: &InitialData,
    grid: &PolarGrid,
    ropts: &ReflectionOptions,
    opts: &VolterraOptions,
) -> Result<AssumptionReport> {
    let scan = |adjoint: bool, a0: f64| -> Result<(f64, C64)> {
        let pts = grid.points(a0);
        let vals: Vec<(f64, C64)> = pts
            .par_iter()
            .map(|&k| {
                let s = scaled_spectral(data, k, adjoint, &[0], opts)?;
                Ok(((s[(0, 0)] / (k * k)).norm(), k))
            })
            .collect::<Result<_>>()?;
        Ok(vals.into_iter().fold((f64::INFINITY, ZERO), |a, b| if b.0 < a.0 { b } else { a }))
    };
    let (m1, at1) = scan(false, 0.0)?;
    let (m4, at4) = scan(true, PI)?;
    let l1 = limit_k2_s11(data, false, ropts, opts)?;
    let l4 = limit_k2_s11(data, true, ropts, opts)?;
    Ok(AssumptionReport {
        min_abs_s11: m1,
        min_s11_at: at1,
        min_abs_sa11: m4,
        min_sa11_at: at4,
        limit_k2_s11: l1.value,
        limit_k2_sa11: l4.value,
        assumption1: m1 > 1e-8 && m4 > 1e-8,
        assumption2: l1.value.norm() > 1e-8 && l4.value.norm() > 1e-8,
    })
}

/// lim k²s₁₁ along k > 0 (or lim k²s^A₁₁ along k < 0) by Richardson
/// extrapolation.
pub fn limit_k2_s11(
    data: &InitialData,
    adjoint: bool,
    ropts: &ReflectionOptions,
    opts: &VolterraOptions,
) -> Result<Extrapolated> {
    extrapolate_to_zero(
        |h| {
            let k = if adjoint { r(-h) } else { r(h) };
            Ok(scaled_spectral(data, k, adjoint, &[0], opts)?[(0, 0)])
        },
        ropts,
    )
}

/// Closed-form large-k coefficients [X₁, X₂] (from_plus) or [Y₁, Y₂].
pub fn xinfty_coeffs(data: &InitialData, x: f64, from_plus: bool) -> [Complex3x3; 2] {
    let rad = data.support_radius;
    let tol = 1e-13;
    // ∫ from the normalization end to x, signed as in the displays
    let tail = |f: &dyn Fn(f64) -> f64, x: f64| -> f64 {
        if from_plus {
            if x >= rad {
                0.0
            } else {
                -quadrature::integrate(f, x.max(-rad), rad, tol)
            }
        } else if x <= -rad {
            0.0
        } else {
            quadrature::integrate(f, -rad, x.min(rad), tol)
        }
    };
    let iu = |s: f64| tail(&|y| data.u0(y), s);
    let x1_33 = |s: f64| -2.0 / 3.0 * iu(s);
    let x1 = diag([OMEGA2, OMEGA, ONE]) * r(x1_33(x));
    let n = crate::algebra::mat([
        [ZERO, ONE, -ONE],
        [-OMEGA, ZERO, OMEGA],
        [OMEGA2, -OMEGA2, ZERO],
    ]);
    let g = |y: f64| {
        let [u, ux, _, v, _] = data.all(y);
        v + ux + 2.0 * u * x1_33(y)
    };
    let x2 = n * (r(2.0 * data.u0(x)) / (r(3.0) * (ONE - OMEGA))) - diag([OMEGA, OMEGA2, ONE]) * r(tail(&g, x) / 3.0);
    [x1, x2]
}

/// Cofactor-matrix check helper: s^A − cof(s).
pub fn cofactor_residual(m: &ScatteringMatrix) -> f64 {
    crate::algebra::max_abs_diff(&m.sa, &crate::algebra::cofactor(&m.s))
}

/// m_ij(s) with 1-based indices, as used in the S_n/T_n displays.
pub fn m(s: &Complex3x3, i: usize, j: usize) -> C64 {
    minor(s, i - 1, j - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{a_conj, b_conj, c, cofactor, max_abs_diff};
    use crate::potentials::{builtin_bump, builtin_zero};

    fn opts() -> VolterraOptions {
        VolterraOptions::default()
    }

    #[test]
    fn zero_data_is_trivial() {
        let z = builtin_zero();
        for kind in [EigenKind::X, EigenKind::Y, EigenKind::XA, EigenKind::YA] {
            let e = solve_eigenfunction(kind, &z, 0.3, c(0.4, 0.9), &opts()).unwrap();
            assert!(max_abs_diff(&e.value, &Complex3x3::identity()) < 1e-13);
        }
        let s = scattering(&z, c(1.0, 0.2), &opts()).unwrap();
        assert!(max_abs_diff(&s.s, &Complex3x3::identity()) < 1e-13);
        assert!(max_abs_diff(&s.sa, &Complex3x3::identity()) < 1e-13);
        assert!(solve_eigenfunction(EigenKind::X, &z, 0.0, ZERO, &opts()).is_err());
    }

    #[test]
    fn formulations_agree() {
        let d = builtin_bump();
        for k in [c(0.6, 0.2), c(-0.3, 0.5), c(0.9, -0.4)] {
            for kind in [EigenKind::X, EigenKind::Y, EigenKind::XA, EigenKind::YA] {
                let a = eigenfunction_at(kind, &d, &[-0.4, 0.2], k, &VolterraOptions { formulation: Formulation::Diagonal, ..opts() })
                    .unwrap();
                let b = eigenfunction_at(kind, &d, &[-0.4, 0.2], k, &VolterraOptions { formulation: Formulation::Regular, ..opts() })
                    .unwrap();
                for (p, q) in a.iter().zip(&b) {
                    assert!(max_abs_diff(p, q) < 1e-8 * max_abs(p).max(1.0), "{kind:?} {k} {}", max_abs_diff(p, q));
                }
            }
        }
    }

    #[test]
    fn unit_determinant_and_column_tags() {
        let d = builtin_bump();
        let k = C64::from_polar(1.0, 5.0 * PI / 6.0);
        let e = solve_eigenfunction(EigenKind::X, &d, 0.0, k, &opts()).unwrap();
        assert!((e.value.determinant() - ONE).norm() < 1e-10);
        assert_eq!(e.defined, [false, false, true]);
        assert!(e.column_strict(0).is_err());
        assert!(e.column_strict(2).is_ok());
    }

    #[test]
    fn scalar_oracle_matches_third_column() {
        let d = builtin_bump();
        let k = r(-1.3);
        let x = solve_eigenfunction(EigenKind::X, &d, 0.0, k, &opts()).unwrap();
        let o = oracle_scalar(&d, 0.0, k, 2, 1.0).unwrap();
        for i in 0..3 {
            assert!((x.value[(i, 2)] - o[i]).norm() < 1e-8, "{} {}", x.value[(i, 2)], o[i]);
        }
        let o2 = oracle_scalar(&d, 0.0, k, 2, 2.0).unwrap();
        assert!((o2 - o * r(2.0)).norm() < 1e-9);
        let z = oracle_scalar(&builtin_zero(), 0.2, c(0.5, 0.5), 1, 1.0).unwrap();
        assert!((z - CVec3::new(ZERO, ONE, ZERO)).norm() < 1e-10);
    }

    #[test]
    fn quadrature_matches_endpoint_formula() {
        let d = builtin_bump();
        for k in [c(0.4, 0.1), c(1.5, 0.7), c(-2.0, 0.3)] {
            for adj in [false, true] {
                let q = scaled_spectral(&d, k, adj, &[0, 1, 2], &opts()).unwrap();
                let e = scaled_s_endpoint(&d, k, adj, &opts()).unwrap();
                assert!(max_abs_diff(&q, &e) < 1e-9 * max_abs(&q), "{k} {adj} {}", max_abs_diff(&q, &e));
            }
        }
    }

    #[test]
    fn det_symmetry_cofactor() {
        let d = builtin_bump();
        let k = r(2.0);
        let m = scattering(&d, k, &opts()).unwrap();
        assert!((m.s.determinant() - ONE).norm() < 1e-9);
        assert!(cofactor_residual(&m) < 1e-8);
        let k = c(0.7, 0.45);
        let m = scattering(&d, k, &opts()).unwrap();
        let mw = scattering(&d, OMEGA * k, &opts()).unwrap();
        let mb = scattering(&d, k.conj(), &opts()).unwrap();
        assert!(max_abs_diff(&m.s, &a_conj(&mw.s)) < 1e-9);
        assert!(max_abs_diff(&m.s, &b_conj(&mb.s)) < 1e-9);
        assert!(max_abs_diff(&m.sa, &cofactor(&m.s)) < 1e-8);
        assert!(m.s_entry(0, 0).is_ok());
        assert!(m.s_entry(0, 1).is_err());
    }

    #[test]
    fn xy_relation() {
        let d = builtin_bump();
        let k = c(0.8, 0.6);
        let m = scattering(&d, k, &opts()).unwrap();
        let x = eigenfunction_at(EigenKind::X, &d, &[0.3], k, &opts()).unwrap()[0];
        let y = eigenfunction_at(EigenKind::Y, &d, &[0.3], k, &opts()).unwrap()[0];
        let rhs = y * crate::algebra::exp_hat(&m.s, 0.3, 0.0, k);
        assert!(max_abs_diff(&x, &rhs) < 1e-8 * max_abs(&x));
    }

    #[test]
    fn large_k_coefficients() {
        let d = builtin_bump();
        let x1 = xinfty_coeffs(&d, 0.2, true);
        let iu = quadrature::integrate(|s| d.u0(s), 0.2, 1.0, 1e-14);
        assert!(max_abs_diff(&x1[0], &(diag([OMEGA2, OMEGA, ONE]) * r(2.0 / 3.0 * iu))) < 1e-12);
        assert_eq!(max_abs(&xinfty_coeffs(&d, 1.5, true)[0]), 0.0);
        let x = 0.2;
        // each column only inside its own domain
        for (j, arg) in [(0usize, PI / 3.0), (1, 5.0 * PI / 3.0), (2, PI)] {
            let mut rem = vec![];
            for mag in [8.0, 16.0, 32.0] {
                let k = C64::from_polar(mag, arg + 0.1);
                let e = eigenfunction_at(EigenKind::X, &d, &[x], k, &opts()).unwrap()[0];
                let tail = (e - Complex3x3::identity() - x1[0] / k - x1[1] / (k * k)) * (k * k * k);
                rem.push(tail.column(j).iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
            assert!(rem[2] < 1.5 * rem[0], "{j} {rem:?}");
        }
    }

    #[test]
    fn reflection_lookup() {
        let rc = ReflectionCoefficients {
            r1: (1..=20).map(|i| (i as f64 * 0.1, c((i as f64 * 0.1).sin(), 0.0))).collect(),
            r2: vec![(-0.5, ONE)],
            r1_at_0: OMEGA,
            r2_at_0: ONE,
            r1_at_0_spread: 0.0,
            r2_at_0_spread: 0.0,
        };
        assert!((rc.r1(0.55).unwrap().re - 0.55f64.sin()).abs() < 1e-7);
        assert!(matches!(rc.r1(3.0), Err(Error::ExtrapolationRefused(_))));
        assert_eq!(rc.r2(-0.5).unwrap(), ONE);
    }
}
