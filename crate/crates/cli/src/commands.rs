use std::fs::File;
use std::path::Path;

use boussinesq_ist::evolution::{evolve, reflection_evolution_check, write_history, EvolutionReport, ReflectionEvolutionReport};
use boussinesq_ist::fredholm::{fredholm_det, recover_u, zero_scan, ZeroScan};
use boussinesq_ist::potentials::InitialData;
use boussinesq_ist::rh::{export_rh, jump_v, ray_point, DirectReflection, RhExport};
use boussinesq_ist::scattering::{check_assumptions, reflection, scattering, AssumptionReport, EigenKind};
use boussinesq_ist::verify::{fast_suite, full_suite, CriterionReport};
use boussinesq_ist::zero::{extract_coeffs_a_family, extract_coeffs_family, laurent_heads};
use boussinesq_ist::{Error, C64};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, Suite};

pub type CmdResult = Result<Outcome, Failure>;

/// How a command that ran to completion ended.
pub enum Outcome {
    Ok,
    VerificationFailed,
    AssumptionFailed,
}

pub struct Failure(pub Error);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure(Error::Io(e.into()))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(Error::Io(e))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Error::Json)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, Failure> {
    Ok(csv::Writer::from_path(path)?)
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn scatter(cfg: &RunConfig, d: &InitialData, out: &Path) -> CmdResult {
    let ks: Vec<C64> = cfg
        .k_grid
        .points()
        .into_iter()
        .flat_map(|m| cfg.k_args.iter().map(move |&a| C64::from_polar(m, a)))
        .collect();
    let mats = ks
        .par_iter()
        .map(|&k| scattering(d, k, &cfg.volterra))
        .collect::<boussinesq_ist::Result<Vec<_>>>()?;
    let mut w = csv_writer(&out.join("scatter.csv"))?;
    w.write_record(["k_re", "k_im", "entry", "ij", "re", "im", "defined"])?;
    for m in &mats {
        for (name, mat, def) in [("s", &m.s, &m.s_defined), ("sA", &m.sa, &m.sa_defined)] {
            for i in 0..3 {
                for j in 0..3 {
                    let z = mat[(i, j)];
                    w.write_record([
                        num(m.k.re),
                        num(m.k.im),
                        name.to_string(),
                        format!("{}{}", i + 1, j + 1),
                        num(z.re),
                        num(z.im),
                        def[i][j].to_string(),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(Outcome::Ok)
}

pub fn reflect(cfg: &RunConfig, d: &InitialData, out: &Path) -> CmdResult {
    let k1 = cfg.k_grid.points();
    let k2: Vec<f64> = k1.iter().map(|k| -k).collect();
    let refl = reflection(d, &k1, &k2, &cfg.reflection, &cfg.volterra)?;
    let mut w = csv_writer(&out.join("reflection.csv"))?;
    w.write_record(["coefficient", "k", "re", "im", "abs"])?;
    let rows = std::iter::once(("r1", 0.0, refl.r1_at_0))
        .chain(refl.r1.iter().map(|&(k, r)| ("r1", k, r)))
        .chain(std::iter::once(("r2", 0.0, refl.r2_at_0)))
        .chain(refl.r2.iter().map(|&(k, r)| ("r2", k, r)));
    for (name, k, r) in rows {
        w.write_record([name.to_string(), num(k), num(r.re), num(r.im), num(r.norm())])?;
    }
    w.flush()?;
    let rep = check_assumptions(d, &cfg.assumption_grid, &cfg.reflection, &cfg.volterra)?;
    write_json(&out.join("assumptions.json"), &rep)?;
    export_rh(&RhExport::from_report(&refl, &rep)?, &out.join("rh_export.json"))?;
    Ok(assumption_outcome(&rep))
}

fn assumption_outcome(rep: &AssumptionReport) -> Outcome {
    if rep.assumption1 && rep.assumption2 {
        Outcome::Ok
    } else {
        Outcome::AssumptionFailed
    }
}

pub fn expand_zero(cfg: &RunConfig, d: &InitialData, out: &Path) -> CmdResult {
    let xs = cfg.x_grid.points();
    let mut w = csv_writer(&out.join("zero_expansion.csv"))?;
    w.write_record(["family", "x", "alpha", "beta", "gamma", "delta1", "delta2", "delta3", "fit_residual"])?;
    for (name, kind) in [("X", EigenKind::X), ("Y", EigenKind::Y)] {
        for c in extract_coeffs_family(d, kind, &xs)? {
            let v = [c.x, c.alpha, c.beta, c.gamma, c.delta[0], c.delta[1], c.delta[2], c.fit_residual];
            w.write_record(std::iter::once(name.to_string()).chain(v.iter().map(|&z| num(z))))?;
        }
    }
    for (name, kind) in [("XA", EigenKind::XA), ("YA", EigenKind::YA)] {
        for c in extract_coeffs_a_family(d, kind, &xs)? {
            let v = [c.x, c.alpha, c.beta, c.gamma, c.delta[0], c.delta[1], c.delta[2], c.fit_residual];
            w.write_record(std::iter::once(name.to_string()).chain(v.iter().map(|&z| num(z))))?;
        }
    }
    w.flush()?;
    write_json(&out.join("laurent.json"), &laurent_heads(d)?)?;
    Ok(Outcome::Ok)
}

pub fn fredholm(cfg: &RunConfig, d: &InitialData, out: &Path) -> CmdResult {
    let ks: Vec<C64> = cfg.k_grid.points().into_iter().map(|m| C64::from_polar(m, cfg.fredholm_arg)).collect();
    let vals = ks
        .par_iter()
        .map(|&k| (0..3).map(|j| fredholm_det(d, 1, j, k, &cfg.nystrom)).collect::<boussinesq_ist::Result<Vec<_>>>())
        .collect::<boussinesq_ist::Result<Vec<_>>>()?;
    let mut w = csv_writer(&out.join("fredholm.csv"))?;
    w.write_record(["k_re", "k_im", "j", "re", "im", "abs"])?;
    for (k, fs) in ks.iter().zip(&vals) {
        for (j, f) in fs.iter().enumerate() {
            w.write_record([num(k.re), num(k.im), (j + 1).to_string(), num(f.re), num(f.im), num(f.norm())])?;
        }
    }
    w.flush()?;
    let scans: Vec<ZeroScan> =
        (0..3).map(|j| zero_scan(d, j, &cfg.scan_grid, cfg.zero_flag, &cfg.nystrom)).collect::<boussinesq_ist::Result<_>>()?;
    #[derive(Serialize)]
    struct ScanSummary<'a> {
        j: usize,
        min_abs: f64,
        min_at: [f64; 2],
        candidates: Vec<[f64; 3]>,
        grid: &'a boussinesq_ist::scattering::PolarGrid,
    }
    let summary: Vec<ScanSummary> = scans
        .iter()
        .map(|s| ScanSummary {
            j: s.j + 1,
            min_abs: s.min_abs,
            min_at: [s.min_at.re, s.min_at.im],
            candidates: s.candidates.iter().map(|(k, a)| [k.re, k.im, *a]).collect(),
            grid: &cfg.scan_grid,
        })
        .collect();
    write_json(&out.join("fredholm_scan.json"), &summary)?;
    if scans.iter().any(|s| !s.candidates.is_empty()) {
        return Ok(Outcome::AssumptionFailed);
    }
    Ok(Outcome::Ok)
}

pub fn jump(cfg: &RunConfig, d: &InitialData, out: &Path) -> CmdResult {
    let refl = DirectReflection { data: d, opts: cfg.volterra.clone() };
    let pts: Vec<(u8, f64)> =
        cfg.rays.iter().flat_map(|&m| cfg.k_grid.points().into_iter().map(move |r| (m, r))).collect();
    let vs = pts
        .par_iter()
        .map(|&(m, rho)| jump_v(&refl, m, cfg.jump_x, cfg.t, ray_point(m, rho)))
        .collect::<boussinesq_ist::Result<Vec<_>>>()?;
    let mut w = csv_writer(&out.join("jump.csv"))?;
    let mut header: Vec<String> = ["ray", "rho", "x", "t", "k_re", "k_im"].iter().map(|s| s.to_string()).collect();
    for i in 1..=3 {
        for j in 1..=3 {
            header.push(format!("v{i}{j}_re"));
            header.push(format!("v{i}{j}_im"));
        }
    }
    w.write_record(&header)?;
    for (&(m, rho), v) in pts.iter().zip(&vs) {
        let mut row = vec![m.to_string(), num(rho), num(v.x), num(v.t), num(v.k.re), num(v.k.im)];
        for i in 0..3 {
            for j in 0..3 {
                row.push(num(v.value[(i, j)].re));
                row.push(num(v.value[(i, j)].im));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(Outcome::Ok)
}

pub fn recover(cfg: &RunConfig, d: &InitialData, out: &Path) -> CmdResult {
    let rec = recover_u(d, &cfg.recover)?;
    let mut w = csv_writer(&out.join("recover.csv"))?;
    w.write_record(["x", "u_in", "u_rec", "err"])?;
    for (&x, &u) in rec.x.iter().zip(&rec.u) {
        let u0 = d.u0(x);
        w.write_record([num(x), num(u0), num(u), num((u - u0).abs())])?;
    }
    w.flush()?;
    Ok(Outcome::Ok)
}

pub fn evolve_cmd(cfg: &RunConfig, d: &InitialData, out: &Path) -> CmdResult {
    let ev = evolve(d, &cfg.times, &cfg.evolution)?;
    write_history(&ev, File::create(out.join("history.csv"))?)?;
    let last = ev.states.last().expect("evolve returns the initial state");
    let check = reflection_evolution_check(d, last, &cfg.evolve_check_k.points(), cfg.evolved_truncation, &cfg.volterra)?;
    #[derive(Serialize)]
    struct Report<'a> {
        evolution: &'a EvolutionReport,
        t: f64,
        phase_deviation: f64,
        modulus_deviation: f64,
    }
    let ReflectionEvolutionReport { t, phase_deviation, modulus_deviation, .. } = check;
    write_json(
        &out.join("evolution_report.json"),
        &Report { evolution: &ev.report, t, phase_deviation, modulus_deviation },
    )?;
    Ok(Outcome::Ok)
}

pub fn verify(cfg: &RunConfig, d: &InitialData, suite: Suite, out: &Path) -> CmdResult {
    let opts = cfg.verify_options();
    let reports: Vec<CriterionReport> = match suite {
        Suite::Fast => fast_suite(d, &opts),
        Suite::Full => full_suite(d, &opts),
    };
    for r in &reports {
        println!("{}", r.line());
    }
    #[derive(Serialize)]
    struct Verify<'a> {
        suite: Suite,
        data: &'a str,
        pass: bool,
        criteria: &'a [CriterionReport],
    }
    let pass = reports.iter().all(|r| r.pass);
    write_json(&out.join("verify.json"), &Verify { suite, data: &d.label, pass, criteria: &reports })?;
    Ok(if pass { Outcome::Ok } else { Outcome::VerificationFailed })
}
