use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use boussinesq_ist::evolution::{EvolutionOptions, EVOLVED_TRUNCATION};
use boussinesq_ist::fredholm::{NystromOptions, RecoverOptions};
use boussinesq_ist::potentials::{builtin, from_samples_csv, InitialData};
use boussinesq_ist::scattering::{PolarGrid, ReflectionOptions, VolterraOptions};
use boussinesq_ist::verify::VerifyOptions;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    /// Catalogue name: `paper-sec5` (alias `bump`), `gaussian` or `zero`.
    pub builtin: Option<String>,
    /// `x,u,v` samples on a uniform grid; takes precedence over `builtin`.
    pub samples: Option<PathBuf>,
    pub truncation: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self { builtin: Some("paper-sec5".into()), samples: None, truncation: 1e-14 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Geometric,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| {
                let t = i as f64 / (self.count - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.min + t * (self.max - self.min),
                    Spacing::Geometric => self.min * (self.max / self.min).powf(t),
                }
            })
            .collect()
    }

    fn check(&self, name: &str) -> Result<(), String> {
        if self.count == 0 {
            return Err(format!("{name}: empty grid"));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            return Err(format!("{name}: need finite min <= max"));
        }
        if self.spacing == Spacing::Geometric && self.min <= 0.0 {
            return Err(format!("{name}: geometric spacing needs min > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Fast,
    Full,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    /// |k| samples; reflect uses ±k, fredholm and jump use them as radii.
    pub k_grid: GridSpec,
    /// Arguments of k for `scatter`.
    pub k_args: Vec<f64>,
    pub x_grid: GridSpec,
    /// Rays for `jump`, numbered 1..6 by arg (m − 1)π/3.
    pub rays: Vec<u8>,
    pub t: f64,
    /// x at which `jump` samples v.
    pub jump_x: f64,
    /// Argument of the ray in D₁ along which `fredholm` samples f_j.
    pub fredholm_arg: f64,
    /// Polar grid of the f_j zero scan.
    pub scan_grid: PolarGrid,
    /// Output times for `evolve`.
    pub times: Vec<f64>,
    /// k-grid of the reflection time-law check after `evolve`.
    pub evolve_check_k: GridSpec,
    pub evolved_truncation: f64,
    pub assumption_grid: PolarGrid,
    /// |f_j| below this is reported as a zero candidate.
    pub zero_flag: f64,
    pub volterra: VolterraOptions,
    pub reflection: ReflectionOptions,
    pub nystrom: NystromOptions,
    pub recover: RecoverOptions,
    pub evolution: EvolutionOptions,
    pub suite: Suite,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: PotentialConfig::default(),
            k_grid: GridSpec { min: 0.05, max: 5.0, count: 100, spacing: Spacing::Linear },
            k_args: (0..12).map(|i| (i as f64 + 0.5) * PI / 6.0).collect(),
            x_grid: GridSpec { min: -4.0, max: 4.0, count: 81, spacing: Spacing::Linear },
            rays: (1..=6).collect(),
            t: 0.0,
            jump_x: 0.2,
            fredholm_arg: PI / 6.0,
            scan_grid: PolarGrid { radii: 12, angles: 8, r_min: 0.1, r_max: 10.0 },
            times: vec![0.1, 0.2],
            evolve_check_k: GridSpec { min: 0.5, max: 3.0, count: 26, spacing: Spacing::Linear },
            evolved_truncation: EVOLVED_TRUNCATION,
            assumption_grid: PolarGrid::default(),
            zero_flag: 1e-10,
            volterra: VolterraOptions::default(),
            reflection: ReflectionOptions::default(),
            nystrom: NystromOptions::default(),
            recover: RecoverOptions::default(),
            evolution: EvolutionOptions::default(),
            suite: Suite::Fast,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let cfg: RunConfig = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
            }
            None => RunConfig::default(),
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), String> {
        self.k_grid.check("k_grid")?;
        self.x_grid.check("x_grid")?;
        self.evolve_check_k.check("evolve_check_k")?;
        let positive = [
            ("potential.truncation", self.potential.truncation),
            ("evolved_truncation", self.evolved_truncation),
            ("zero_flag", self.zero_flag),
            ("volterra.atol", self.volterra.atol),
            ("volterra.rtol", self.volterra.rtol),
            ("volterra.quad_tol", self.volterra.quad_tol),
            ("reflection.h0", self.reflection.h0),
            ("nystrom.pivot_tol", self.nystrom.pivot_tol),
            ("recover.spread_tol", self.recover.spread_tol),
            ("recover.r", self.recover.r),
            ("evolution.dt", self.evolution.dt),
            ("evolution.l", self.evolution.l),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.k_args.is_empty() {
            return Err("k_args: empty".into());
        }
        if self.times.is_empty() || self.times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err("times: need a nonempty list of positive times".into());
        }
        if self.rays.is_empty() || self.rays.iter().any(|m| !(1..=6).contains(m)) {
            return Err("rays: need values in 1..=6".into());
        }
        for (name, g) in [("assumption_grid", &self.assumption_grid), ("scan_grid", &self.scan_grid)] {
            if g.radii == 0 || g.angles == 0 || !(g.r_min > 0.0 && g.r_max >= g.r_min) {
                return Err(format!("{name}: need radii, angles > 0 and 0 < r_min <= r_max"));
            }
        }
        if self.potential.builtin.is_none() && self.potential.samples.is_none() {
            return Err("potential: give `builtin` or `samples`".into());
        }
        Ok(())
    }

    pub fn data(&self) -> boussinesq_ist::Result<InitialData> {
        let p = &self.potential;
        match (&p.samples, &p.builtin) {
            (Some(path), _) => from_samples_csv(path, p.truncation),
            (None, Some(name)) => builtin(name, p.truncation),
            (None, None) => unreachable!("checked in RunConfig::check"),
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            volterra: self.volterra.clone(),
            reflection: self.reflection.clone(),
            nystrom: self.nystrom.clone(),
            recover: self.recover.clone(),
            evolution: self.evolution.clone(),
        }
    }
}
