//! 3×3 complex algebra, the ω-symmetries, the diagonalizer P(k) and the
//! sector geometry of the k-plane.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Complex3x3 = Matrix3<C64>;
pub type CVec3 = Vector3<C64>;

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Primitive cube root of unity e^{2πi/3}.
pub const OMEGA: C64 = C64::new(-0.5, 0.866_025_403_784_438_6);
pub const OMEGA2: C64 = C64::new(-0.5, -0.866_025_403_784_438_6);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// ω^n for any integer n.
pub fn omega_pow(n: i64) -> C64 {
    match n.rem_euclid(3) {
        0 => ONE,
        1 => OMEGA,
        _ => OMEGA2,
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn mat(rows: [[C64; 3]; 3]) -> Complex3x3 {
    Complex3x3::new(
        rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
        rows[2][1], rows[2][2],
    )
}

pub fn diag(d: [C64; 3]) -> Complex3x3 {
    Complex3x3::from_diagonal(&CVec3::new(d[0], d[1], d[2]))
}

/// Matrix whose three rows all equal `row`.
pub fn rows_all(row: [C64; 3]) -> Complex3x3 {
    mat([row, row, row])
}

/// Matrix whose three columns all equal `col`.
pub fn cols_all(col: [C64; 3]) -> Complex3x3 {
    rows_all(col).transpose()
}

pub fn max_abs(m: &Complex3x3) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &Complex3x3, b: &Complex3x3) -> f64 {
    max_abs(&(a - b))
}

/// Signed minor m_ij: determinant of the 2×2 matrix left after deleting row i
/// and column j (0-based).
pub fn minor(m: &Complex3x3, i: usize, j: usize) -> C64 {
    let rows: Vec<usize> = (0..3).filter(|&a| a != i).collect();
    let cols: Vec<usize> = (0..3).filter(|&b| b != j).collect();
    m[(rows[0], cols[0])] * m[(rows[1], cols[1])] - m[(rows[0], cols[1])] * m[(rows[1], cols[0])]
}

/// Cofactor matrix: entry (i,j) is (−1)^{i+j} m_ij.
pub fn cofactor(m: &Complex3x3) -> Complex3x3 {
    Complex3x3::from_fn(|i, j| {
        let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        minor(m, i, j) * s
    })
}

pub fn inverse(m: &Complex3x3) -> Result<Complex3x3> {
    m.try_inverse().ok_or(Error::Singular("3x3 inverse"))
}

/// The spectral weights l_j = ω^j k and z_j = ω^{2j} k², j = 1, 2, 3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub l: [C64; 3],
    pub z: [C64; 3],
}

pub fn eigen_weights(k: C64) -> Weights {
    let k2 = k * k;
    Weights {
        l: [OMEGA * k, OMEGA2 * k, k],
        z: [OMEGA2 * k2, OMEGA * k2, k2],
    }
}

/// θ_ij = (l_i − l_j)x + (z_i − z_j)t with 1-based indices.
pub fn theta(i: usize, j: usize, x: f64, t: f64, k: C64) -> Result<C64> {
    if !(1..=3).contains(&i) || !(1..=3).contains(&j) || i == j {
        return Err(Error::Index { i, j });
    }
    Ok(theta0(i - 1, j - 1, x, t, k))
}

pub(crate) fn theta0(i: usize, j: usize, x: f64, t: f64, k: C64) -> C64 {
    let w = eigen_weights(k);
    (w.l[i] - w.l[j]) * x + (w.z[i] - w.z[j]) * t
}

/// J = diag(ω, ω², 1).
pub fn j_matrix() -> Complex3x3 {
    diag([OMEGA, OMEGA2, ONE])
}

/// 𝓛(k) = diag(l_1, l_2, l_3).
pub fn cal_l(k: C64) -> Complex3x3 {
    diag(eigen_weights(k).l)
}

/// 𝒵(k) = diag(z_1, z_2, z_3).
pub fn cal_z(k: C64) -> Complex3x3 {
    diag(eigen_weights(k).z)
}

/// e^{x𝓛̂ + t𝒵̂} acting on m: entry (i,j) is scaled by e^{θ_ij(x,t,k)}.
pub fn exp_hat(m: &Complex3x3, x: f64, t: f64, k: C64) -> Complex3x3 {
    let w = eigen_weights(k);
    Complex3x3::from_fn(|i, j| {
        if i == j {
            m[(i, j)]
        } else {
            m[(i, j)] * ((w.l[i] - w.l[j]) * x + (w.z[i] - w.z[j]) * t).exp()
        }
    })
}

/// The diagonalizer P(k) with L̃ P = P (kJ) for the bare companion matrix.
pub fn p_matrix(k: C64) -> Complex3x3 {
    let k2 = k * k;
    mat([
        [OMEGA, OMEGA2, ONE],
        [OMEGA2 * k, OMEGA * k, k],
        [k2, k2, k2],
    ])
}

pub fn p_inverse(k: C64) -> Result<Complex3x3> {
    if k == ZERO {
        return Err(Error::SingularDiagonalizer);
    }
    let l = p_laurent();
    Ok(l.m2 / (k * k) + l.m1 / k + l.m0)
}

/// Laurent pieces of P(k)⁻¹ at 0 and Taylor pieces of P(k).
#[derive(Clone, Debug)]
pub struct PLaurent {
    pub m2: Complex3x3,
    pub m1: Complex3x3,
    pub m0: Complex3x3,
    pub p0: Complex3x3,
    pub p1: Complex3x3,
    pub p2_half: Complex3x3,
}

pub fn p_laurent() -> PLaurent {
    let third = 1.0 / 3.0;
    let m2 = mat([[ZERO, ZERO, ONE], [ZERO, ZERO, ONE], [ZERO, ZERO, ONE]]) * r(third);
    let m1 = mat([[ZERO, OMEGA, ZERO], [ZERO, OMEGA2, ZERO], [ZERO, ONE, ZERO]]) * r(third);
    let m0 = mat([[OMEGA2, ZERO, ZERO], [OMEGA, ZERO, ZERO], [ONE, ZERO, ZERO]]) * r(third);
    let p0 = mat([[OMEGA, OMEGA2, ONE], [ZERO; 3], [ZERO; 3]]);
    let p1 = mat([[ZERO; 3], [OMEGA2, OMEGA, ONE], [ZERO; 3]]);
    let p2_half = mat([[ZERO; 3], [ZERO; 3], [ONE, ONE, ONE]]);
    PLaurent { m2, m1, m0, p0, p1, p2_half }
}

/// Companion matrix with rows (0,1,0), (0,0,1), (k³,0,0).
pub fn companion(k: C64) -> Complex3x3 {
    mat([[ZERO, ONE, ZERO], [ZERO, ZERO, ONE], [k * k * k, ZERO, ZERO]])
}

/// 𝒫(x,x′,k) = P e^{(x−x′)𝓛} P⁻¹, computed as the exponential of the
/// companion matrix so that it stays regular at k = 0.
pub fn kernel_p(x: f64, xp: f64, k: C64) -> Complex3x3 {
    (companion(k) * r(x - xp)).exp()
}

/// Cyclic permutation 𝒜.
pub fn a_perm() -> Complex3x3 {
    mat([[ZERO, ZERO, ONE], [ONE, ZERO, ZERO], [ZERO, ONE, ZERO]])
}

/// Transposition ℬ.
pub fn b_perm() -> Complex3x3 {
    mat([[ZERO, ONE, ZERO], [ONE, ZERO, ZERO], [ZERO, ZERO, ONE]])
}

#[derive(Clone, Debug)]
pub struct SymmetryOps {
    pub a_perm: Complex3x3,
    pub b_perm: Complex3x3,
}

impl Default for SymmetryOps {
    fn default() -> Self {
        Self { a_perm: a_perm(), b_perm: b_perm() }
    }
}

/// 𝒜 F 𝒜⁻¹.
pub fn a_conj(f: &Complex3x3) -> Complex3x3 {
    let a = a_perm();
    a * f * a.transpose()
}

/// ℬ conj(F) ℬ.
pub fn b_conj(f: &Complex3x3) -> Complex3x3 {
    let b = b_perm();
    b * f.map(|z| z.conj()) * b
}

/// Sector label of a spectral point. Rays are numbered 1..6 anticlockwise
/// from the positive real axis; ray m lies between D_{m−1} and D_m.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sector {
    Open(u8),
    Ray(u8),
    Origin,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPoint {
    pub k: C64,
    pub sector: Sector,
}

impl SpectralPoint {
    pub fn new(k: C64) -> Self {
        Self { k, sector: sector_of(k) }
    }
}

pub fn sector_of(k: C64) -> Sector {
    if k == ZERO {
        return Sector::Origin;
    }
    let w = eigen_weights(k);
    let re = [w.l[0].re, w.l[1].re, w.l[2].re];
    let tol = 1e-12 * k.norm();
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        if (re[a] - re[b]).abs() <= tol {
            let m = (normalized_arg(k) / (PI / 3.0)).round() as i64;
            return Sector::Ray((m.rem_euclid(6) + 1) as u8);
        }
    }
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| re[a].partial_cmp(&re[b]).unwrap());
    let n = match idx {
        [0, 1, 2] => 1,
        [0, 2, 1] => 2,
        [2, 0, 1] => 3,
        [2, 1, 0] => 4,
        [1, 2, 0] => 5,
        _ => 6,
    };
    Sector::Open(n)
}

/// arg k in [0, 2π).
pub fn normalized_arg(k: C64) -> f64 {
    let a = k.arg();
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Strict ordering of Re l_j in the open sector D_n, as a 0-based rank table:
/// `below(n, i, j)` is true when Re l_i < Re l_j in D_n.
pub fn below(n: u8, i: usize, j: usize) -> bool {
    let k = C64::from_polar(1.0, (n as f64 - 0.5) * PI / 3.0);
    let w = eigen_weights(k);
    w.l[i].re < w.l[j].re
}

/// A closed subset of the punctured k-plane on which an entry or column is
/// defined: either a closed angular sector or a single ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Sector { from: f64, to: f64 },
    Ray { arg: f64 },
}

const ANGLE_TOL: f64 = 1e-12;

impl Domain {
    /// ω^m 𝒮̄ rotated further by π when `negate`.
    pub fn rotated_s(m: i64, negate: bool) -> Self {
        let shift = 2.0 * PI * m as f64 / 3.0 + if negate { PI } else { 0.0 };
        Domain::Sector { from: 2.0 * PI / 3.0 + shift, to: 4.0 * PI / 3.0 + shift }
    }

    /// ω^m ℝ₊ rotated further by π when `negate`.
    pub fn rotated_ray(m: i64, negate: bool) -> Self {
        let shift = 2.0 * PI * m as f64 / 3.0 + if negate { PI } else { 0.0 };
        Domain::Ray { arg: shift }
    }

    pub fn contains(&self, k: C64) -> bool {
        if k == ZERO {
            return false;
        }
        let a = normalized_arg(k);
        let two_pi = 2.0 * PI;
        match *self {
            Domain::Sector { from, to } => {
                let rel = (a - from).rem_euclid(two_pi);
                let width = to - from;
                rel <= width + ANGLE_TOL || rel >= two_pi - ANGLE_TOL
            }
            Domain::Ray { arg } => {
                let d = (a - arg).rem_euclid(two_pi);
                d <= ANGLE_TOL || d >= two_pi - ANGLE_TOL
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
        c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
    }

    fn rand_m(rng: &mut ChaCha8Rng) -> Complex3x3 {
        Complex3x3::from_fn(|_, _| rand_c(rng))
    }

    #[test]
    fn omega_identities() {
        let w3 = OMEGA * OMEGA * OMEGA;
        assert!((w3 - ONE).norm() <= 4.0 * f64::EPSILON);
        assert!((ONE + OMEGA + OMEGA2).norm() <= 4.0 * f64::EPSILON);
        assert!((OMEGA * OMEGA - OMEGA2).norm() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn weights() {
        let w = eigen_weights(ONE);
        assert_eq!(w.l, [OMEGA, OMEGA2, ONE]);
        let w0 = eigen_weights(ZERO);
        assert!(w0.l.iter().chain(w0.z.iter()).all(|z| *z == ZERO));
        let w2 = eigen_weights(r(2.0));
        assert!((w2.z[2] - r(4.0)).norm() < 1e-15);
        assert!((w2.z[1] - OMEGA * 4.0).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let w = eigen_weights(rand_c(&mut rng));
            assert!((w.l[0] + w.l[1] + w.l[2]).norm() < 1e-14);
            assert!((w.z[0] + w.z[1] + w.z[2]).norm() < 1e-14);
        }
    }

    #[test]
    fn theta_values() {
        let t21 = theta(2, 1, 1.0, 0.0, ONE).unwrap();
        assert!((t21 - c(0.0, -SQRT3)).norm() < 1e-15);
        let t32 = theta(3, 2, 0.0, 1.0, ONE).unwrap();
        assert!((t32 - (ONE - OMEGA)).norm() < 1e-15);
        assert!(theta(1, 1, 0.0, 0.0, ONE).is_err());
        assert!(theta(0, 2, 0.0, 0.0, ONE).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let (x, t, k) = (rng.gen_range(-3.0..3.0), rng.gen_range(0.0..2.0), rand_c(&mut rng));
            let s = theta(1, 3, x, t, k).unwrap() + theta(3, 1, x, t, k).unwrap();
            assert!(s.norm() < 1e-13);
        }
    }

    #[test]
    fn diagonalizer() {
        let p = p_matrix(ONE);
        let d = p.determinant();
        assert!((d - OMEGA * (ONE - OMEGA) * -3.0).norm() < 1e-13);
        let l = p_laurent();
        assert_eq!(l.m2.column(2).iter().filter(|z| (**z - r(1.0 / 3.0)).norm() < 1e-16).count(), 3);
        assert!(l.m2.columns(0, 2).iter().all(|z| *z == ZERO));
        let k = r(2.0);
        assert!(max_abs_diff(&(p_inverse(k).unwrap() * p_matrix(k)), &Complex3x3::identity()) < 1e-14);
        assert!(matches!(p_inverse(ZERO), Err(Error::SingularDiagonalizer)));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let k = rand_c(&mut rng);
            let direct = inverse(&p_matrix(k)).unwrap();
            let lau = p_inverse(k).unwrap();
            assert!(max_abs_diff(&direct, &lau) <= 1e-12 * max_abs(&direct).max(1.0));
            let taylor = l.p0 + l.p1 * k + l.p2_half * (k * k);
            assert!(max_abs_diff(&taylor, &p_matrix(k)) < 1e-14);
        }
    }

    #[test]
    fn kernel() {
        let k = c(0.4, -0.7);
        assert!(max_abs_diff(&kernel_p(1.3, 1.3, k), &Complex3x3::identity()) < 1e-15);
        let k0 = kernel_p(2.0, 1.0, ZERO);
        let want = mat([[ONE, ONE, r(0.5)], [ZERO, ONE, ONE], [ZERO, ZERO, ONE]]);
        assert!(max_abs_diff(&k0, &want) < 1e-15);
        let k = c(1.0, 1.0);
        let w = eigen_weights(k);
        let e = diag([(w.l[0] * 0.3).exp(), (w.l[1] * 0.3).exp(), (w.l[2] * 0.3).exp()]);
        let oracle = p_matrix(k) * e * p_inverse(k).unwrap();
        assert!(max_abs_diff(&kernel_p(1.0, 0.7, k), &oracle) < 1e-12);
        // k-derivative at 0 vanishes to O(h²)
        for h in [1e-2, 1e-3] {
            let d = (kernel_p(1.5, -0.5, r(h)) - kernel_p(1.5, -0.5, r(-h))) / r(2.0 * h);
            assert!(max_abs(&d) < 10.0 * h * h);
        }
    }

    #[test]
    fn sectors() {
        assert_eq!(sector_of(C64::from_polar(1.0, PI / 6.0)), Sector::Open(1));
        assert_eq!(sector_of(ONE), Sector::Ray(1));
        assert_eq!(sector_of(r(-2.0)), Sector::Ray(4));
        assert_eq!(sector_of(ZERO), Sector::Origin);
        for n in 1..=6u8 {
            let k = C64::from_polar(0.7, (n as f64 - 0.5) * PI / 3.0);
            assert_eq!(sector_of(k), Sector::Open(n));
            let kr = C64::from_polar(0.7, (n as f64 - 1.0) * PI / 3.0);
            assert_eq!(sector_of(kr), Sector::Ray(n));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let k = rand_c(&mut rng);
            if let (Sector::Open(a), Sector::Open(b)) = (sector_of(k), sector_of(OMEGA * k)) {
                assert_eq!(b, (a + 1) % 6 + 1);
            }
        }
    }

    #[test]
    fn matrix_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let (a, b, cm) = (rand_m(&mut rng), rand_m(&mut rng), rand_m(&mut rng));
            assert!(max_abs_diff(&((a * b) * cm), &(a * (b * cm))) < 1e-12);
            assert!(((a * b).determinant() - a.determinant() * b.determinant()).norm() < 1e-11);
            let cof = cofactor(&a);
            let inv_t = inverse(&a).unwrap().transpose() * a.determinant();
            assert!(max_abs_diff(&cof, &inv_t) < 1e-9 * max_abs(&cof).max(1.0));
        }
        let a = a_perm();
        assert_eq!(a * a * a, Complex3x3::identity());
        let b = b_perm();
        assert_eq!(b * b, Complex3x3::identity());
    }

    #[test]
    fn symmetry_of_cal_l() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let k = rand_c(&mut rng);
            assert!(max_abs_diff(&cal_l(k), &a_conj(&cal_l(OMEGA * k))) < 1e-14);
            assert!(max_abs_diff(&cal_l(k), &b_conj(&cal_l(k.conj()))) < 1e-14);
        }
    }

    #[test]
    fn domains() {
        let s = Domain::rotated_s(0, false);
        assert!(s.contains(r(-1.0)));
        assert!(s.contains(C64::from_polar(1.0, 2.0 * PI / 3.0)));
        assert!(!s.contains(ONE));
        let col1 = Domain::rotated_s(2, false);
        assert!(col1.contains(ONE));
        assert!(col1.contains(C64::from_polar(1.0, PI / 6.0)));
        assert!(Domain::rotated_ray(0, false).contains(r(3.0)));
        assert!(Domain::rotated_ray(0, true).contains(r(-3.0)));
        assert!(!Domain::rotated_ray(1, false).contains(r(3.0)));
    }
}
