//! Sectionally analytic eigenfunctions M_n by Nyström discretization of the
//! Fredholm equations, their Fredholm determinants, the S_n/T_n
//! factorization of s, and recovery of u from the large-k behaviour of M.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::algebra::{
    a_conj, below, eigen_weights, exp_hat, inverse, minor, Complex3x3, CVec3, C64, OMEGA, ONE, ZERO,
};
use crate::error::{Error, Result};
use crate::extrapolate::richardson;
use crate::potentials::{u_matrix, InitialData};
use crate::quadrature::{self, lagrange_basis, GlRule, Panels};
use crate::scattering::{eigenfunction_at, scattering, EigenKind, ScatteringMatrix, VolterraOptions};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct NystromOptions {
    /// Gauss–Legendre panels on the support interval.
    pub panels: usize,
    pub order: usize,
    /// Minimum sub-quadrature order for the product-integration weights;
    /// raised automatically with |l_i − l_j|·panel width.
    pub sub_order: usize,
    /// Smallest accepted min/max ratio of the LU pivots of I − K_N.
    pub pivot_tol: f64,
}

impl Default for NystromOptions {
    fn default() -> Self {
        Self { panels: 12, order: 16, sub_order: 24, pivot_tol: 1e-12 }
    }
}

impl NystromOptions {
    pub fn doubled(&self) -> Self {
        Self { panels: self.panels * 2, ..self.clone() }
    }
}

/// Discretized Fredholm system for sector n at one k.
pub struct NystromSolution {
    pub n: u8,
    pub k: C64,
    pub panels: Panels,
    /// Fredholm determinant f_j of each solved column.
    pub fdet: [Option<C64>; 3],
    lambda: [[C64; 3]; 3],
    u_nodes: Vec<Complex3x3>,
    sol: [Option<Vec<C64>>; 3],
    weights: WeightRule,
}

/// Reference-panel data for the product-integration weights.
struct WeightRule {
    sub: GlRule,
    /// Lagrange basis of the panel nodes at the sub-nodes, row-major (q, b).
    basis_at_sub: Vec<f64>,
    bary: Vec<f64>,
    ref_nodes: Vec<f64>,
}

impl WeightRule {
    fn new(order: usize, sub_order: usize) -> Self {
        let rule = GlRule::new(order);
        let sub = GlRule::new(sub_order);
        let bary = quadrature::barycentric_weights(&rule.nodes);
        let mut basis_at_sub = Vec::with_capacity(sub_order * order);
        for &t in &sub.nodes {
            basis_at_sub.extend(lagrange_basis(&rule.nodes, &bary, t));
        }
        Self { sub, basis_at_sub, bary, ref_nodes: rule.nodes }
    }
}

/// λ_ij = l_i − l_j and the contour sign: +1 for (−∞, x), −1 for (+∞, x).
fn contour(n: u8, i: usize, j: usize) -> f64 {
    if below(n, i, j) {
        1.0
    } else {
        -1.0
    }
}

impl NystromSolution {
    fn row(&self, x: f64, lam: C64, sign: f64) -> Vec<C64> {
        weight_row(&self.panels, &self.weights, x, lam, sign)
    }

    /// Column j at x (off-node evaluation by the Nyström interpolant).
    pub fn column(&self, j: usize, x: f64) -> Result<CVec3> {
        let w = self.sol[j].as_ref().ok_or(Error::Invalid(format!("column {} not solved", j + 1)))?;
        let nn = self.panels.len();
        let mut out = CVec3::zeros();
        out[j] = ONE;
        for i in 0..3 {
            let sign = contour(self.n, i, j);
            let row = self.row(x, self.lambda[i][j], sign);
            let mut acc = ZERO;
            for b in 0..nn {
                if row[b] == ZERO {
                    continue;
                }
                let u = &self.u_nodes[b];
                let mut s = ZERO;
                for l in 0..3 {
                    s += u[(i, l)] * w[3 * b + l];
                }
                acc += row[b] * s;
            }
            out[i] += acc * sign;
        }
        Ok(out)
    }

    pub fn eval(&self, x: f64) -> Result<Complex3x3> {
        let mut m = Complex3x3::zeros();
        for j in 0..3 {
            m.set_column(j, &self.column(j, x)?);
        }
        Ok(m)
    }
}

fn weight_row(pan: &Panels, wr: &WeightRule, x: f64, lam: C64, sign: f64) -> Vec<C64> {
    let q = pan.order();
    let mut row = vec![ZERO; pan.len()];
    let h = (pan.b - pan.a) / pan.count as f64;
    // full-panel moments ∫_P e^{λ(c−x′)}ℓ_b(x′)dx′, identical for all panels
    let mut moment = vec![ZERO; q];
    for (s, (&t, &w)) in wr.sub.nodes.iter().zip(&wr.sub.weights).enumerate() {
        let e = (-lam * (0.5 * h * t)).exp() * (0.5 * h * w);
        for b in 0..q {
            moment[b] += e * wr.basis_at_sub[s * q + b];
        }
    }
    for p in 0..pan.count {
        let (pa, pb) = pan.bounds(p);
        let c = 0.5 * (pa + pb);
        let full = if sign > 0.0 { pb <= x } else { pa >= x };
        let none = if sign > 0.0 { pa >= x } else { pb <= x };
        if none {
            continue;
        }
        if full {
            let f = (lam * (x - c)).exp();
            for b in 0..q {
                row[p * q + b] = f * moment[b];
            }
            continue;
        }
        // split panel: integrate over [pa, x] or [x, pb]
        let (lo, hi) = if sign > 0.0 { (pa, x) } else { (x, pb) };
        for (&t, &w) in wr.sub.nodes.iter().zip(&wr.sub.weights) {
            let y = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
            let tt = (2.0 * y - pa - pb) / (pb - pa);
            let basis = lagrange_basis(&wr.ref_nodes, &wr.bary, tt);
            let e = (lam * (x - y)).exp() * (0.5 * (hi - lo) * w);
            for b in 0..q {
                row[p * q + b] += e * basis[b];
            }
        }
    }
    row
}

fn pivot_ratio(lu: &nalgebra::linalg::LU<C64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let u = lu.u();
    let d: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].norm()).collect();
    let hi = d.iter().cloned().fold(0.0, f64::max);
    let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        0.0
    } else {
        lo / hi
    }
}

/// Solves the Fredholm equations of sector n for the requested columns.
pub fn solve_m_columns(
    data: &InitialData,
    n: u8,
    k: C64,
    cols: &[usize],
    opts: &NystromOptions,
) -> Result<NystromSolution> {
    if !(1..=6).contains(&n) {
        return Err(Error::Invalid(format!("sector {n} out of range")));
    }
    if k == ZERO {
        return Err(Error::Origin);
    }
    let rad = data.support_radius;
    let panels = Panels::new(-rad, rad, opts.panels, opts.order);
    let w = eigen_weights(k);
    let mut lambda = [[ZERO; 3]; 3];
    let mut lmax: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            lambda[i][j] = w.l[i] - w.l[j];
            lmax = lmax.max(lambda[i][j].norm());
        }
    }
    let h = 2.0 * rad / opts.panels as f64;
    let sub_order = opts.sub_order.max((0.6 * lmax * h).ceil() as usize + 20);
    let weights = WeightRule::new(opts.order, sub_order);
    let u_nodes: Vec<Complex3x3> = panels
        .nodes
        .iter()
        .map(|&x| {
            let [u, ux, _, v, _] = data.all(x);
            u_matrix(u, ux, v, k)
        })
        .collect();
    let nn = panels.len();
    let mut sol: [Option<Vec<C64>>; 3] = [None, None, None];
    let mut fdet = [None; 3];
    for &j in cols {
        let rows: Vec<Vec<Vec<C64>>> = (0..3)
            .map(|i| {
                let sign = contour(n, i, j);
                panels.nodes.iter().map(|&x| weight_row(&panels, &weights, x, lambda[i][j], sign)).collect()
            })
            .collect();
        let dim = 3 * nn;
        let mut kmat = DMatrix::<C64>::zeros(dim, dim);
        for a in 0..nn {
            for i in 0..3 {
                let sign = contour(n, i, j);
                let row = &rows[i][a];
                for b in 0..nn {
                    if row[b] == ZERO {
                        continue;
                    }
                    let f = row[b] * sign;
                    for l in 0..3 {
                        kmat[(3 * a + i, 3 * b + l)] = f * u_nodes[b][(i, l)];
                    }
                }
            }
        }
        let trace: C64 = (0..dim).map(|d| kmat[(d, d)]).sum();
        let a_mat = DMatrix::<C64>::identity(dim, dim) - &kmat;
        let lu = a_mat.lu();
        let f = lu.determinant() * trace.exp();
        fdet[j] = Some(f);
        if pivot_ratio(&lu) < opts.pivot_tol {
            return Err(Error::FredholmSingular { k_re: k.re, k_im: k.im });
        }
        let mut rhs = nalgebra::DVector::<C64>::zeros(dim);
        for a in 0..nn {
            rhs[3 * a + j] = ONE;
        }
        let x = lu.solve(&rhs).ok_or(Error::FredholmSingular { k_re: k.re, k_im: k.im })?;
        sol[j] = Some(x.iter().copied().collect());
    }
    Ok(NystromSolution { n, k, panels, fdet, lambda, u_nodes, sol, weights })
}

pub fn solve_m_system(data: &InitialData, n: u8, k: C64, opts: &NystromOptions) -> Result<NystromSolution> {
    solve_m_columns(data, n, k, &[0, 1, 2], opts)
}

/// M_n(x, k).
pub fn solve_m(data: &InitialData, n: u8, x: f64, k: C64, opts: &NystromOptions) -> Result<Complex3x3> {
    solve_m_system(data, n, k, opts)?.eval(x)
}

/// Sector whose closure contains k (the open sector, or the sector
/// anticlockwise of a ray).
pub fn sector_for(k: C64) -> u8 {
    let a = crate::algebra::normalized_arg(k);
    let m = (a / (PI / 3.0)).floor() as i64;
    (m.rem_euclid(6) + 1) as u8
}

/// Fredholm determinant f_j(k) (Carleman form, which matches the series
/// with H(0) = 0).
pub fn fredholm_det(data: &InitialData, n: u8, j: usize, k: C64, opts: &NystromOptions) -> Result<C64> {
    match solve_m_columns(data, n, k, &[j], opts) {
        Ok(s) => Ok(s.fdet[j].unwrap()),
        Err(Error::FredholmSingular { .. }) => Ok(ZERO),
        Err(e) => Err(e),
    }
}

fn kernel_entry(data: &InitialData, n: u8, j: usize, k: C64, x: f64, y: f64) -> Complex3x3 {
    let w = eigen_weights(k);
    let [u, ux, _, v, _] = data.all(y);
    let um = u_matrix(u, ux, v, k);
    Complex3x3::from_fn(|i, l| {
        let sign = contour(n, i, j);
        let on = if sign > 0.0 { x > y } else { y > x };
        if on {
            (w.l[i] - w.l[j]) * (x - y)
        } else {
            return ZERO;
        }
        .exp()
            * um[(i, l)]
            * sign
    })
}

/// 1 − ½ tr K² − ⅓ tr K³ for the continuous kernel K_j, integrated over
/// the ordered simplices of the support with nested Gauss–Legendre rules.
pub fn fredholm_series3(data: &InitialData, n: u8, j: usize, k: C64, m: usize) -> C64 {
    let rad = data.support_radius;
    let rule = GlRule::new(m);
    let map = |a: f64, b: f64| -> Vec<(f64, f64)> { rule.mapped(a, b).collect() };
    let outer = map(-rad, rad);
    // tr K² over {x < y} and {y < x}
    let kk = |x: f64, y: f64| kernel_entry(data, n, j, k, x, y);
    let tr2: C64 = outer
        .par_iter()
        .map(|&(a, wa)| {
            let mut acc = ZERO;
            for &(b, wb) in &map(a, rad) {
                let s = (kk(a, b) * kk(b, a)).trace() + (kk(b, a) * kk(a, b)).trace();
                acc += s * (wa * wb);
            }
            acc
        })
        .sum();
    // tr K³ over the six orderings of (x, y, z); a < b < c
    let tr3: C64 = outer
        .par_iter()
        .map(|&(a, wa)| {
            let mut acc = ZERO;
            for &(b, wb) in &map(a, rad) {
                let kab = kk(a, b);
                let kba = kk(b, a);
                for &(c, wc) in &map(b, rad) {
                    let kbc = kk(b, c);
                    let kcb = kk(c, b);
                    let kca = kk(c, a);
                    let kac = kk(a, c);
                    // cyclic classes: (a b c) and (a c b), each counted three times
                    let s = (kab * kbc * kca).trace() + (kac * kcb * kba).trace();
                    acc += s * (3.0 * wa * wb * wc);
                }
            }
            acc
        })
        .sum();
    ONE - tr2 * 0.5 - tr3 / 3.0
}

/// Report of a scan of |f_j| over a polar grid in D̄₁.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroScan {
    pub j: usize,
    pub min_abs: f64,
    pub min_at: C64,
    /// Local minima of |f_j| on the grid below `flag_below`, after refinement.
    pub candidates: Vec<(C64, f64)>,
    pub samples: Vec<(C64, C64)>,
}

pub fn zero_scan(
    data: &InitialData,
    j: usize,
    grid: &crate::scattering::PolarGrid,
    flag_below: f64,
    opts: &NystromOptions,
) -> Result<ZeroScan> {
    let pts = grid.points(0.0);
    let vals: Vec<C64> = pts.par_iter().map(|&k| fredholm_det(data, 1, j, k, opts)).collect::<Result<_>>()?;
    let (na, nr) = (grid.angles, grid.radii);
    let mut min_abs = f64::INFINITY;
    let mut min_at = ZERO;
    let mut candidates = vec![];
    for r in 0..nr {
        for a in 0..na {
            let idx = r * na + a;
            let v = vals[idx].norm();
            if v < min_abs {
                min_abs = v;
                min_at = pts[idx];
            }
            let mut local = v < flag_below;
            for (dr, da) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (rr, aa) = (r as i64 + dr, a as i64 + da);
                if rr >= 0 && aa >= 0 && (rr as usize) < nr && (aa as usize) < na {
                    local &= vals[rr as usize * na + aa as usize].norm() >= v;
                }
            }
            if local {
                candidates.push(refine_min(data, j, pts[idx], opts)?);
            }
        }
    }
    Ok(ZeroScan { j, min_abs, min_at, candidates, samples: pts.into_iter().zip(vals).collect() })
}

/// Compass search for a local minimum of |f_j| near k0 inside D̄₁.
fn refine_min(data: &InitialData, j: usize, k0: C64, opts: &NystromOptions) -> Result<(C64, f64)> {
    let clamp = |k: C64| {
        let a = k.arg().clamp(0.0, PI / 3.0);
        C64::from_polar(k.norm().max(1e-6), a)
    };
    let mut k = k0;
    let mut best = fredholm_det(data, 1, j, k, opts)?.norm();
    let mut step = 0.05 * k0.norm();
    for _ in 0..40 {
        let mut moved = false;
        for d in [ONE, -ONE, C64::i(), -C64::i()] {
            let t = clamp(k + d * step);
            let v = fredholm_det(data, 1, j, t, opts)?.norm();
            if v < best {
                best = v;
                k = t;
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
        if step < 1e-8 * k0.norm() {
            break;
        }
    }
    Ok((k, best))
}

/// S_n and T_n from the entries and minors of s.
pub fn sn_tn_from_s(s: &Complex3x3, n: u8) -> Result<(Complex3x3, Complex3x3)> {
    let e = |i: usize, j: usize| s[(i - 1, j - 1)];
    let m = |i: usize, j: usize| minor(s, i - 1, j - 1);
    let z = ZERO;
    let o = ONE;
    let dens: Vec<C64> = match n {
        1 | 2 => vec![e(1, 1), m(3, 3), m(2, 2)],
        3 | 4 => vec![e(3, 3), m(2, 2), m(1, 1)],
        5 | 6 => vec![e(2, 2), m(1, 1), m(3, 3)],
        _ => return Err(Error::Invalid(format!("sector {n} out of range"))),
    };
    let needed: &[usize] = match n {
        1 => &[0, 1],
        2 => &[0, 2],
        3 => &[0, 1],
        4 => &[0, 2],
        5 => &[0, 1],
        _ => &[0, 2],
    };
    for &d in needed {
        if dens[d].norm() < 1e-300 || !dens[d].is_finite() {
            return Err(Error::AssumptionViolation(format!("vanishing denominator in S_{n}/T_{n}")));
        }
    }
    let mk = |r: [[C64; 3]; 3]| crate::algebra::mat(r);
    let (sn, tn) = match n {
        1 => (
            mk([[e(1, 1), z, z], [e(2, 1), m(3, 3) / e(1, 1), z], [e(3, 1), m(2, 3) / e(1, 1), o / m(3, 3)]]),
            mk([[o, -e(1, 2) / e(1, 1), m(3, 1) / m(3, 3)], [z, o, -m(3, 2) / m(3, 3)], [z, z, o]]),
        ),
        2 => (
            mk([[e(1, 1), z, z], [e(2, 1), o / m(2, 2), m(3, 2) / e(1, 1)], [e(3, 1), z, m(2, 2) / e(1, 1)]]),
            mk([[o, -m(2, 1) / m(2, 2), -e(1, 3) / e(1, 1)], [z, o, z], [z, -m(2, 3) / m(2, 2), o]]),
        ),
        3 => (
            mk([[m(2, 2) / e(3, 3), z, e(1, 3)], [m(1, 2) / e(3, 3), o / m(2, 2), e(2, 3)], [z, z, e(3, 3)]]),
            mk([[o, -m(2, 1) / m(2, 2), z], [z, o, z], [-e(3, 1) / e(3, 3), -m(2, 3) / m(2, 2), o]]),
        ),
        4 => (
            mk([[o / m(1, 1), m(2, 1) / e(3, 3), e(1, 3)], [z, m(1, 1) / e(3, 3), e(2, 3)], [z, z, e(3, 3)]]),
            mk([[o, z, z], [-m(1, 2) / m(1, 1), o, z], [m(1, 3) / m(1, 1), -e(3, 2) / e(3, 3), o]]),
        ),
        5 => (
            mk([[o / m(1, 1), e(1, 2), -m(3, 1) / e(2, 2)], [z, e(2, 2), z], [z, e(3, 2), m(1, 1) / e(2, 2)]]),
            mk([[o, z, z], [-m(1, 2) / m(1, 1), o, -e(2, 3) / e(2, 2)], [m(1, 3) / m(1, 1), z, o]]),
        ),
        _ => (
            mk([[m(3, 3) / e(2, 2), e(1, 2), z], [z, e(2, 2), z], [-m(1, 3) / e(2, 2), e(3, 2), o / m(3, 3)]]),
            mk([[o, z, m(3, 1) / m(3, 3)], [-e(2, 1) / e(2, 2), o, -m(3, 2) / m(3, 3)], [z, z, o]]),
        ),
    };
    Ok((sn, tn))
}

pub fn sn_tn(data: &InitialData, n: u8, k: C64, opts: &VolterraOptions) -> Result<(Complex3x3, Complex3x3)> {
    let s = scattering(data, k, opts)?;
    sn_tn_from_s(&s.s, n)
}

/// M₁ from X, Y, X^A, Y^A, s and s^A (column formulas valid on D̄₁).
pub fn m1_from_eigenfunctions(data: &InitialData, x: f64, k: C64, opts: &VolterraOptions) -> Result<Complex3x3> {
    let xm = eigenfunction_at(EigenKind::X, data, &[x], k, opts)?[0];
    let ym = eigenfunction_at(EigenKind::Y, data, &[x], k, opts)?[0];
    let xa = eigenfunction_at(EigenKind::XA, data, &[x], k, opts)?[0];
    let ya = eigenfunction_at(EigenKind::YA, data, &[x], k, opts)?[0];
    let sm: ScatteringMatrix = scattering(data, k, opts)?;
    m1_assemble(&xm, &ym, &xa, &ya, &sm)
}

pub fn m1_assemble(
    xm: &Complex3x3,
    ym: &Complex3x3,
    xa: &Complex3x3,
    ya: &Complex3x3,
    sm: &ScatteringMatrix,
) -> Result<Complex3x3> {
    let s11 = sm.s[(0, 0)];
    let sa33 = sm.sa[(2, 2)];
    if s11.norm() < 1e-300 || sa33.norm() < 1e-300 {
        return Err(Error::AssumptionViolation("s11 or sA33 vanishes".into()));
    }
    let y = |i: usize, j: usize| ya[(i - 1, j - 1)];
    let xx = |i: usize, j: usize| xa[(i - 1, j - 1)];
    let col2 = CVec3::new(
        y(3, 1) * xx(2, 3) - y(2, 1) * xx(3, 3),
        y(1, 1) * xx(3, 3) - y(3, 1) * xx(1, 3),
        y(2, 1) * xx(1, 3) - y(1, 1) * xx(2, 3),
    ) / s11;
    let mut m = Complex3x3::zeros();
    m.set_column(0, &xm.column(0));
    m.set_column(1, &col2);
    m.set_column(2, &(ym.column(2) / sa33));
    Ok(m)
}

/// (ω, ω², 1)·M_n(x, k).
pub fn n_row(data: &InitialData, n: u8, x: f64, k: C64, opts: &NystromOptions) -> Result<[C64; 3]> {
    let m = solve_m(data, n, x, k, opts)?;
    Ok(crate::zero::n_row_of(&m))
}

/// ‖M_m − M_{m−1} v‖ on ray m (1-based; ray m has arg (m−1)π/3). For t > 0
/// pass the data at time t and v(x, t, k).
pub fn jump_residual(
    data: &InitialData,
    ray: u8,
    x: f64,
    k: C64,
    v: &Complex3x3,
    opts: &NystromOptions,
) -> Result<f64> {
    let plus = ray;
    let minus = if ray == 1 { 6 } else { ray - 1 };
    let mp = solve_m(data, plus, x, k, opts)?;
    let mm = solve_m(data, minus, x, k, opts)?;
    Ok(crate::algebra::max_abs_diff(&mp, &(mm * v)))
}

/// Jump of M across ray 1 from S₆⁻¹S₁ (compact support only).
pub fn jump_from_sn(s: &Complex3x3, ray: u8, x: f64, k: C64) -> Result<Complex3x3> {
    let plus = ray;
    let minus = if ray == 1 { 6 } else { ray - 1 };
    let (sp, _) = sn_tn_from_s(s, plus)?;
    let (sm, _) = sn_tn_from_s(s, minus)?;
    Ok(exp_hat(&(inverse(&sm)? * sp), x, 0.0, k))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoverOptions {
    /// Base |k| of the large-k extrapolation; samples at R, 2R, 4R.
    pub r: f64,
    /// Argument of the ray in D₁ used for the extrapolation.
    pub arg: f64,
    pub spread_tol: f64,
    /// Output x-grid: equal panels on [x_min, x_max].
    pub x_min: f64,
    pub x_max: f64,
    pub x_panels: usize,
    pub nystrom: NystromOptions,
}

impl Default for RecoverOptions {
    fn default() -> Self {
        Self {
            r: 30.0,
            arg: PI / 6.0,
            spread_tol: 1e-5,
            x_min: -2.0,
            x_max: 2.0,
            x_panels: 16,
            nystrom: NystromOptions { panels: 16, ..Default::default() },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Recovery {
    pub x: Vec<f64>,
    /// lim k(M₃₃ − 1) at each x.
    pub limit: Vec<f64>,
    pub u: Vec<f64>,
    pub spread: f64,
}

/// u = −(3/2)∂ₓ lim k(M₃₃ − 1).
pub fn recover_u(data: &InitialData, ro: &RecoverOptions) -> Result<Recovery> {
    let grid = Panels::new(ro.x_min, ro.x_max, ro.x_panels, 16);
    let mags = [ro.r, 2.0 * ro.r, 4.0 * ro.r];
    let samples: Vec<Vec<C64>> = mags
        .par_iter()
        .map(|&mag| {
            let k = C64::from_polar(mag, ro.arg);
            let sys = solve_m_columns(data, 1, k, &[2], &ro.nystrom)?;
            grid.nodes.iter().map(|&x| Ok((sys.column(2, x)?[2] - ONE) * k)).collect::<Result<Vec<C64>>>()
        })
        .collect::<Result<_>>()?;
    let hs: Vec<f64> = mags.iter().map(|m| 1.0 / m).collect();
    let mut limit = Vec::with_capacity(grid.len());
    let mut spread: f64 = 0.0;
    for i in 0..grid.len() {
        // the k = Re^{iθ} direction enters through 1/k; extrapolate in 1/|k|
        let fs: Vec<C64> = samples.iter().map(|s| s[i]).collect();
        let e = richardson(&hs, &fs);
        spread = spread.max(e.spread);
        limit.push(e.value.re);
    }
    if spread > ro.spread_tol {
        return Err(Error::InsufficientR(spread));
    }
    let du = grid.differentiate(&limit);
    Ok(Recovery { x: grid.nodes.clone(), limit, u: du.iter().map(|d| -1.5 * d).collect(), spread })
}

/// lim_{k→0} k²M₁(x, k) along arg k = `arg`, by Richardson extrapolation
/// from |k| = h, 2h, 4h, …; returns the limit and the entrywise spread.
pub fn k2m_limit(
    data: &InitialData,
    x: f64,
    arg: f64,
    h: f64,
    levels: usize,
    opts: &NystromOptions,
) -> Result<(Complex3x3, f64)> {
    let hs: Vec<f64> = (0..levels).map(|i| h * 2f64.powi(i as i32)).collect();
    let ms: Vec<Complex3x3> = hs
        .par_iter()
        .map(|&mag| {
            let k = C64::from_polar(mag, arg);
            Ok(solve_m(data, 1, x, k, opts)? * (k * k))
        })
        .collect::<Result<_>>()?;
    let mut out = Complex3x3::zeros();
    let mut spread: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let fs: Vec<C64> = ms.iter().map(|m| m[(i, j)]).collect();
            let e = richardson(&hs, &fs);
            out[(i, j)] = e.value;
            spread = spread.max(e.spread);
        }
    }
    Ok((out, spread))
}

/// Least-squares fit M₁(x, k) ≈ I + Σ_{p=1..terms} M⁽ᵖ⁾/kᵖ from samples at
/// the given |k| on arg k = `arg`; returns M⁽¹⁾, M⁽²⁾ and the fit residual.
pub fn large_k_fit(
    data: &InitialData,
    x: f64,
    arg: f64,
    mags: &[f64],
    terms: usize,
    opts: &NystromOptions,
) -> Result<([Complex3x3; 2], f64)> {
    if mags.len() < terms || terms < 2 {
        return Err(Error::Invalid("large-k fit needs at least `terms` ≥ 2 samples".into()));
    }
    let ks: Vec<C64> = mags.iter().map(|&m| C64::from_polar(m, arg)).collect();
    let ms: Vec<Complex3x3> = ks.par_iter().map(|&k| solve_m(data, 1, x, k, opts)).collect::<Result<_>>()?;
    // scale columns by |k_min|^p to keep the Vandermonde well conditioned
    let k0 = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    let a = DMatrix::<C64>::from_fn(ks.len(), terms, |r, p| (C64::from(k0) / ks[r]).powi(p as i32 + 1));
    let svd = a.clone().svd(true, true);
    let mut coeffs = [Complex3x3::zeros(); 2];
    let mut resid: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { ONE } else { ZERO };
            let b = nalgebra::DVector::<C64>::from_iterator(ks.len(), ms.iter().map(|m| m[(i, j)] - id));
            let c = svd.solve(&b, 1e-14).map_err(|e| Error::Invalid(e.to_string()))?;
            resid = resid.max((&a * &c - &b).camax());
            coeffs[0][(i, j)] = c[0] * k0;
            coeffs[1][(i, j)] = c[1] * (k0 * k0);
        }
    }
    Ok((coeffs, resid))
}

/// Residual of the 𝒜-symmetry M(x,k) = 𝒜M(x,ωk)𝒜⁻¹ for k in D̄_n.
pub fn symmetry_a_residual(data: &InitialData, n: u8, x: f64, k: C64, opts: &NystromOptions) -> Result<f64> {
    let m = solve_m(data, n, x, k, opts)?;
    let n2 = ((n + 1) % 6) + 1;
    let mw = solve_m(data, n2, x, OMEGA * k, opts)?;
    Ok(crate::algebra::max_abs_diff(&m, &a_conj(&mw)))
}

/// Residual of the ℬ-symmetry M(x,k) = ℬ conj(M(x, conj k)) ℬ.
pub fn symmetry_b_residual(data: &InitialData, n: u8, x: f64, k: C64, opts: &NystromOptions) -> Result<f64> {
    let m = solve_m(data, n, x, k, opts)?;
    let nb = 7 - n;
    let mb = solve_m(data, nb, x, k.conj(), opts)?;
    Ok(crate::algebra::max_abs_diff(&m, &crate::algebra::b_conj(&mb)))
}

/// ∫u over the support (for the coefficient check left of the support).
pub fn mass(data: &InitialData) -> f64 {
    let r = data.support_radius;
    quadrature::integrate(|x| data.u0(x), -r, r, 1e-13)
}
