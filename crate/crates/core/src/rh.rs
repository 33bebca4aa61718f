//! Jump matrix on the six rays and the RH data export.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

use crate::algebra::{a_conj, b_perm, inverse, mat, max_abs_diff, theta, Complex3x3, C64, OMEGA, OMEGA2, ONE, ZERO};
use crate::error::{Error, Result};
use crate::potentials::InitialData;
use crate::scattering::{r1_at, r2_at, AssumptionReport, ReflectionCoefficients, VolterraOptions};

/// Anything that yields r₁ on k > 0 and r₂ on k < 0.
pub trait ReflectionSource {
    fn r1(&self, k: f64) -> Result<C64>;
    fn r2(&self, k: f64) -> Result<C64>;
}

impl ReflectionSource for ReflectionCoefficients {
    fn r1(&self, k: f64) -> Result<C64> {
        ReflectionCoefficients::r1(self, k)
    }
    fn r2(&self, k: f64) -> Result<C64> {
        ReflectionCoefficients::r2(self, k)
    }
}

/// Evaluates r₁, r₂ directly from the data at each call.
pub struct DirectReflection<'a> {
    pub data: &'a InitialData,
    pub opts: VolterraOptions,
}

impl ReflectionSource for DirectReflection<'_> {
    fn r1(&self, k: f64) -> Result<C64> {
        r1_at(self.data, C64::new(k, 0.0), &self.opts)
    }
    fn r2(&self, k: f64) -> Result<C64> {
        r2_at(self.data, C64::new(k, 0.0), &self.opts)
    }
}

/// Direction of ray m (1..6); rays are oriented away from the origin.
pub fn ray_direction(m: u8) -> C64 {
    C64::from_polar(1.0, (m as f64 - 1.0) * PI / 3.0)
}

/// Point at distance rho along ray m.
pub fn ray_point(m: u8, rho: f64) -> C64 {
    ray_direction(m) * rho
}

fn on_real_line(z: C64, k: C64) -> Result<f64> {
    if z.im.abs() > 1e-12 * z.norm().max(1.0) {
        return Err(Error::domain("reflection argument off the real line", k));
    }
    Ok(z.re)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpMatrix {
    pub segment: u8,
    pub x: f64,
    pub t: f64,
    pub k: C64,
    pub value: Complex3x3,
}

/// v_m(x, t, k) for k on ray m.
pub fn jump_v<R: ReflectionSource + ?Sized>(refl: &R, segment: u8, x: f64, t: f64, k: C64) -> Result<JumpMatrix> {
    if !(1..=6).contains(&segment) {
        return Err(Error::Invalid(format!("segment {segment} out of range")));
    }
    if k == ZERO {
        return Err(Error::Origin);
    }
    let dir = ray_direction(segment);
    if (k / dir).im.abs() > 1e-12 * k.norm() || (k / dir).re <= 0.0 {
        return Err(Error::domain(format!("k is not on ray {segment}"), k));
    }
    let e = |i: usize, j: usize| -> Result<C64> { Ok(theta(i, j, x, t, k)?.exp()) };
    let (z, o) = (ZERO, ONE);
    let value = match segment {
        1 => {
            let r = refl.r1(on_real_line(k, k)?)?;
            let e21 = e(2, 1)?;
            mat([[o, -r / e21, z], [r.conj() * e21, o - r.norm_sqr(), z], [z, z, o]])
        }
        2 => {
            let r = refl.r2(on_real_line(OMEGA * k, k)?)?;
            let e32 = e(3, 2)?;
            mat([[o, z, z], [z, o - r * r.conj(), -r.conj() / e32], [z, r * e32, o]])
        }
        3 => {
            let r = refl.r1(on_real_line(OMEGA2 * k, k)?)?;
            let e31 = e(3, 1)?;
            mat([[o - r * r.conj(), z, r.conj() / e31], [z, o, z], [-r * e31, z, o]])
        }
        4 => {
            let r = refl.r2(on_real_line(k, k)?)?;
            let e21 = e(2, 1)?;
            mat([[o - r.norm_sqr(), -r.conj() / e21, z], [r * e21, o, z], [z, z, o]])
        }
        5 => {
            let r = refl.r1(on_real_line(OMEGA * k, k)?)?;
            let e32 = e(3, 2)?;
            mat([[o, z, z], [z, o, -r / e32], [z, r.conj() * e32, o - r * r.conj()]])
        }
        _ => {
            let r = refl.r2(on_real_line(OMEGA2 * k, k)?)?;
            let e31 = e(3, 1)?;
            mat([[o, z, r / e31], [z, o, z], [-r.conj() * e31, z, o - r * r.conj()]])
        }
    };
    Ok(JumpMatrix { segment, x, t, k, value })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpSymmetryReport {
    /// max ‖v_m(k) − 𝒜 v_{m+2}(ωk) 𝒜⁻¹‖ over all segments and samples.
    pub a_residual: f64,
    /// max ‖v_m − ℬ conj(v_m)⁻¹ ℬ‖ on the real rays (m = 1, 4).
    pub b_residual: f64,
    pub det_residual: f64,
    pub samples: usize,
}

/// Rotation and conjugation residuals of v at |k| = rho for each rho.
pub fn jump_symmetry_residuals<R: ReflectionSource + ?Sized>(
    refl: &R,
    x: f64,
    t: f64,
    rhos: &[f64],
) -> Result<JumpSymmetryReport> {
    let b = b_perm();
    let mut rep = JumpSymmetryReport { a_residual: 0.0, b_residual: 0.0, det_residual: 0.0, samples: 0 };
    for &rho in rhos {
        for m in 1..=6u8 {
            let k = ray_point(m, rho);
            let v = jump_v(refl, m, x, t, k)?.value;
            let m2 = (m + 1) % 6 + 1;
            let vw = jump_v(refl, m2, x, t, OMEGA * k)?.value;
            rep.a_residual = rep.a_residual.max(max_abs_diff(&v, &a_conj(&vw)));
            rep.det_residual = rep.det_residual.max((v.determinant() - ONE).norm());
            if m == 1 || m == 4 {
                let vb = b * inverse(&v.map(|z| z.conj()))? * b;
                rep.b_residual = rep.b_residual.max(max_abs_diff(&v, &vb));
            }
            rep.samples += 1;
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhChecks {
    pub assumption1: bool,
    pub assumption2: bool,
}

/// Versioned RH input file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhExport {
    pub version: u32,
    pub r1: Vec<[f64; 3]>,
    pub r2: Vec<[f64; 3]>,
    pub r1_at_0: [f64; 2],
    pub r2_at_0: [f64; 2],
    pub checks: RhChecks,
}

pub const RH_EXPORT_VERSION: u32 = 1;

impl RhExport {
    pub fn new(refl: &ReflectionCoefficients, checks: RhChecks) -> Result<Self> {
        if refl.r1.is_empty() {
            return Err(Error::GridEmpty("r1"));
        }
        if refl.r2.is_empty() {
            return Err(Error::GridEmpty("r2"));
        }
        let rows = |s: &[(f64, C64)]| s.iter().map(|&(k, v)| [k, v.re, v.im]).collect();
        let ex = Self {
            version: RH_EXPORT_VERSION,
            r1: rows(&refl.r1),
            r2: rows(&refl.r2),
            r1_at_0: [refl.r1_at_0.re, refl.r1_at_0.im],
            r2_at_0: [refl.r2_at_0.re, refl.r2_at_0.im],
            checks,
        };
        ex.validate()?;
        Ok(ex)
    }

    pub fn from_report(refl: &ReflectionCoefficients, rep: &AssumptionReport) -> Result<Self> {
        Self::new(refl, RhChecks { assumption1: rep.assumption1, assumption2: rep.assumption2 })
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != RH_EXPORT_VERSION {
            return Err(Error::Invalid(format!("unsupported RH export version {}", self.version)));
        }
        for (name, rows) in [("r1", &self.r1), ("r2", &self.r2)] {
            if rows.is_empty() {
                return Err(Error::GridEmpty(name));
            }
            let mut prev = 0.0;
            for row in rows {
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Invalid(format!("{name} has a non-finite sample")));
                }
                let mag = row[0].abs();
                if mag <= prev {
                    return Err(Error::Invalid(format!("{name} grid is not strictly increasing in |k|")));
                }
                prev = mag;
            }
        }
        Ok(())
    }

    pub fn reflection(&self) -> ReflectionCoefficients {
        let samples = |rows: &[[f64; 3]]| rows.iter().map(|r| (r[0], C64::new(r[1], r[2]))).collect();
        ReflectionCoefficients {
            r1: samples(&self.r1),
            r2: samples(&self.r2),
            r1_at_0: C64::new(self.r1_at_0[0], self.r1_at_0[1]),
            r2_at_0: C64::new(self.r2_at_0[0], self.r2_at_0[1]),
            r1_at_0_spread: 0.0,
            r2_at_0_spread: 0.0,
        }
    }
}

pub fn export_rh(ex: &RhExport, path: &Path) -> Result<()> {
    ex.validate()?;
    let text = serde_json::to_string_pretty(ex)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn import_rh(path: &Path) -> Result<RhExport> {
    let ex: RhExport = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    ex.validate()?;
    Ok(ex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::c;
    use crate::fredholm::jump_from_sn;
    use crate::potentials::builtin_bump;
    use crate::scattering::scattering;
    use rand::{Rng, SeedableRng};

    /// Analytic stand-in for r₁, r₂ with |r| up to about 2.
    struct Toy;
    impl ReflectionSource for Toy {
        fn r1(&self, k: f64) -> Result<C64> {
            Ok(c(1.5 * (-k * k).exp(), 0.4 * k) / (1.0 + k * k))
        }
        fn r2(&self, k: f64) -> Result<C64> {
            Ok(c(0.3, -1.2 * k) * (-k * k).exp())
        }
    }

    #[test]
    fn zero_reflection_gives_identity() {
        let z = ReflectionCoefficients::zero();
        for m in 1..=6 {
            let v = jump_v(&z, m, 0.3, 0.7, ray_point(m, 1.3)).unwrap();
            assert_eq!(v.value, Complex3x3::identity());
        }
        let rep = jump_symmetry_residuals(&z, 0.0, 0.0, &[0.5, 2.0]).unwrap();
        assert_eq!(rep.a_residual, 0.0);
        assert!(jump_v(&z, 1, 0.0, 0.0, c(0.0, 1.0)).is_err());
    }

    #[test]
    fn unit_determinant_for_random_values() {
        struct Fixed(C64, C64);
        impl ReflectionSource for Fixed {
            fn r1(&self, _: f64) -> Result<C64> {
                Ok(self.0)
            }
            fn r2(&self, _: f64) -> Result<C64> {
                Ok(self.1)
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let mut z = || c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let f = Fixed(z(), z());
            let (x, t) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0));
            for m in 1..=6 {
                let v = jump_v(&f, m, x, t, ray_point(m, 0.9)).unwrap().value;
                assert!((v.determinant() - ONE).norm() < 1e-12 * (1.0 + v.norm()));
            }
        }
    }

    #[test]
    fn phase_of_v1_entry() {
        let k = 1.7;
        let t = 0.4;
        let v = jump_v(&Toy, 1, 0.0, t, c(k, 0.0)).unwrap().value;
        let expect = -Toy.r1(k).unwrap() * C64::new(0.0, -(3f64).sqrt() * k * k * t).exp();
        assert!((v[(0, 1)] - expect).norm() < 1e-14);
    }

    #[test]
    fn rotation_and_conjugation_symmetry() {
        let rhos: Vec<f64> = (1..=50).map(|i| 0.06 * i as f64).collect();
        for t in [0.0, 1.0] {
            let rep = jump_symmetry_residuals(&Toy, 0.4, t, &rhos).unwrap();
            assert!(rep.a_residual < 1e-10, "{rep:?}");
            assert!(rep.b_residual < 1e-10, "{rep:?}");
            assert!(rep.det_residual < 1e-12, "{rep:?}");
        }
    }

    #[test]
    fn v1_matches_factorization() {
        let d = builtin_bump();
        let vo = VolterraOptions::default();
        let direct = DirectReflection { data: &d, opts: vo.clone() };
        for (k, x) in [(0.9, 0.2), (1.6, -0.5)] {
            let kk = c(k, 0.0);
            let v = jump_v(&direct, 1, x, 0.0, kk).unwrap().value;
            let s = scattering(&d, kk, &vo).unwrap();
            let via = jump_from_sn(&s.s, 1, x, kk).unwrap();
            assert!(max_abs_diff(&v, &via) < 1e-9, "{}", max_abs_diff(&v, &via));
        }
    }

    #[test]
    fn export_round_trip_and_guards() {
        let refl = ReflectionCoefficients {
            r1: vec![(0.1, c(0.1 / 3.0, 1e-17)), (0.2, c(-0.7, 2.0f64.sqrt()))],
            r2: vec![(-0.1, c(0.9, 0.0)), (-0.3, c(1.0 / 7.0, -0.2))],
            r1_at_0: OMEGA,
            r2_at_0: ONE,
            r1_at_0_spread: 0.0,
            r2_at_0_spread: 0.0,
        };
        let checks = RhChecks { assumption1: true, assumption2: true };
        let ex = RhExport::new(&refl, checks.clone()).unwrap();
        let dir = std::env::temp_dir().join(format!("rh_export_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rh.json");
        export_rh(&ex, &path).unwrap();
        let back = import_rh(&path).unwrap();
        assert_eq!(back, ex);
        assert_eq!(back.reflection().r1, refl.r1);
        std::fs::remove_dir_all(&dir).ok();

        let mut empty = refl.clone();
        empty.r2.clear();
        assert!(matches!(RhExport::new(&empty, checks), Err(Error::GridEmpty("r2"))));
    }
}
