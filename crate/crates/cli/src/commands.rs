//! Subcommand bodies. Every artifact is a CSV file with a header row; numbers
//! use 17 significant digits in scientific notation.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use rayon::prelude::*;

use possio::cheb::ChordFunction;
use possio::field::{chord_loads, evaluate, flow_tangency_residual, solve_family, FamilyKind, SolutionFamily, TANGENCY_TOL};
use possio::flowconfig::FlowParams;
use possio::fredholm::{
    build_n, build_n_with, characteristic_kernel_scale, scan_determinant, solve_p, solve_with, Discretization, KernelHook,
    PressureDensity, ZeroStatus, DEFAULT_LQ,
};
use possio::kernel::KernelContext;
use possio::laplace::{bromwich_report, laplace_transform, DownwashSpec, GATE_TOL};
use possio::verify::{resolve_suites, run_suite};
use possio::{Error, Result};

use crate::config::{DownwashKind, RunConfig};

type C = Complex<f64>;

/// Residual tolerance of `R_s[p]` against the right-hand side.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CHARACTERISTIC: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e.category() {
        possio::ErrorCategory::Config => EXIT_CONFIG,
        possio::ErrorCategory::CharacteristicValue => EXIT_CHARACTERISTIC,
        possio::ErrorCategory::Convergence => EXIT_CONVERGENCE,
    }
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header plus rows, written in one piece.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { text: format!("{}\n", header.join(",")) }
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn nums(&mut self, v: &[f64]) {
        self.row(&v.iter().map(|x| num(*x)).collect::<Vec<_>>());
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        let path = dir.join(name);
        fs::write(&path, &self.text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Gate and parameter rows of the run manifest.
#[derive(Default)]
struct Manifest {
    rows: Vec<(String, String, String, &'static str)>,
}

impl Manifest {
    fn info(&mut self, item: &str, value: f64) {
        self.rows.push((item.into(), num(value), String::new(), "info"));
    }

    fn gate(&mut self, item: &str, value: f64, tolerance: f64, passed: bool) {
        self.rows.push((item.into(), num(value), num(tolerance), if passed { "pass" } else { "fail" }));
    }

    fn failed(&self) -> Vec<&str> {
        self.rows.iter().filter(|r| r.3 == "fail").map(|r| r.0.as_str()).collect()
    }

    fn csv(&self) -> Csv {
        let mut c = Csv::new(&["item", "value", "tolerance", "status"]);
        for r in &self.rows {
            c.row(&[r.0.clone(), r.1.clone(), r.2.clone(), r.3.to_string()]);
        }
        c
    }
}

struct Setup {
    params: FlowParams<f64>,
    disc: Discretization<f64>,
    spec: DownwashSpec<f64>,
}

fn setup(cfg: &RunConfig) -> Result<Setup> {
    Ok(Setup { params: cfg.params()?, disc: Discretization::new(cfg.grid.n)?, spec: cfg.downwash()? })
}

/// Solve at one `s`, honouring the characteristic-value test hook.
fn solve_one(cfg: &RunConfig, st: &Setup, s: C, w: &ChordFunction<f64>) -> Result<PressureDensity<f64>> {
    if cfg.debug.force_characteristic {
        let op = build_n(s, &st.disc, &st.params)?;
        let k = characteristic_kernel_scale(&op)?;
        let forced = build_n_with(s, &st.disc, &st.params, KernelHook::Scale(k))?;
        return solve_with(&forced, w, &st.params);
    }
    solve_p(s, w, &st.params, &st.disc)
}

fn build_family(cfg: &RunConfig, st: &Setup) -> Result<SolutionFamily<f64>> {
    let contour = cfg.contour()?;
    if !cfg.debug.force_characteristic {
        return solve_family(&st.spec, &st.params, &st.disc, &contour, cfg.downwash.sigma_shift);
    }
    if let DownwashSpec::Harmonic { w0, k } = &st.spec {
        let s = Complex::new(cfg.downwash.sigma_shift, *k);
        let w = ChordFunction::from_fn(st.disc.grid.clone(), |x| w0(x));
        return SolutionFamily::harmonic(solve_one(cfg, st, s, &w)?, &st.params);
    }
    let dens = contour
        .nodes()
        .par_iter()
        .map(|&s| solve_one(cfg, st, s, &laplace_transform(&st.spec, s, &st.disc.grid)?))
        .collect::<Result<Vec<_>>>()?;
    SolutionFamily::contour(contour, dens, &st.params)
}

fn density_csv(d: &PressureDensity<f64>) -> Result<Csv> {
    let mut c = Csv::new(&["xi", "re_p", "im_p"]);
    for &x in &d.p.grid.nodes {
        let v = d.p.eval(x)?;
        c.nums(&[x, v.re, v.im]);
    }
    Ok(c)
}

fn density_gates(m: &mut Manifest, dens: &[PressureDensity<f64>]) {
    let worst = dens.iter().map(|d| d.residual).fold(0.0, f64::max);
    m.gate("rs_rhs_residual_max", worst, RESIDUAL_TOL, worst <= RESIDUAL_TOL);
    let lq = dens.iter().map(|d| d.lp_norm).fold(0.0, f64::max);
    m.gate(&format!("lq_integral_max_q{DEFAULT_LQ}"), lq, f64::MAX, lq.is_finite());
}

struct LoadRow {
    t: f64,
    lift: C,
    moment: C,
    gate: Option<(f64, f64, bool)>,
}

/// Loads at each time, with the Bromwich gate of lift and moment on a contour.
fn time_loads(family: &SolutionFamily<f64>, times: &[f64]) -> Result<Vec<LoadRow>> {
    let (lift, moment): (Vec<C>, Vec<C>) = family.densities.iter().map(|d| chord_loads(&d.p)).unzip();
    times
        .iter()
        .map(|&t| match &family.kind {
            FamilyKind::Harmonic => {
                let e = (family.densities[0].s * t).exp();
                Ok(LoadRow { t, lift: lift[0] * e, moment: moment[0] * e, gate: None })
            }
            FamilyKind::Contour(ct) => {
                if !(t > 0.0) {
                    return Err(Error::Config(format!("contour runs need output times t > 0, got {t}")));
                }
                let l = bromwich_report(ct, &lift, t)?;
                let mo = bromwich_report(ct, &moment, t)?;
                // one gate for the load pair: the lift alone can sit at round-off
                let scale = l.scale.max(mo.scale);
                let diff = l.gate_diff.max(mo.gate_diff);
                let rel = if diff == 0.0 { 0.0 } else { diff / scale };
                Ok(LoadRow { t, lift: l.value, moment: mo.value, gate: Some((rel, GATE_TOL, rel <= GATE_TOL)) })
            }
        })
        .collect()
}

fn loads_csv(rows: &[LoadRow]) -> Csv {
    let mut c = Csv::new(&["t", "lift_re", "lift_im", "moment_re", "moment_im"]);
    for r in rows {
        c.nums(&[r.t, r.lift.re, r.lift.im, r.moment.re, r.moment.im]);
    }
    c
}

fn load_gates(m: &mut Manifest, rows: &[LoadRow]) {
    for r in rows {
        if let Some((diff, tol, ok)) = r.gate {
            m.gate(&format!("bromwich_gate_loads_t={}", num(r.t)), diff, tol, ok);
        }
    }
}

fn parameter_rows(m: &mut Manifest, cfg: &RunConfig, st: &Setup) {
    m.info("flow.a", st.params.a);
    m.info("flow.mach", st.params.mach);
    m.info("flow.sigma1", st.params.sigma1);
    m.info("flow.sigma2", st.params.sigma2);
    m.info("grid.n", cfg.grid.n as f64);
    m.info("contour.sigma_prime", st.params.sigma_prime);
    m.info("contour.nu_max", cfg.contour.nu_max);
    m.info("contour.d_nu", cfg.contour.d_nu);
    m.info("downwash.sigma_shift", cfg.downwash.sigma_shift);
}

/// Outcome of a command that writes artifacts before judging its gates.
pub struct Outcome {
    pub code: i32,
    pub files: Vec<PathBuf>,
    pub failed: Vec<String>,
}

fn finish(m: &Manifest, dir: &Path, mut files: Vec<PathBuf>) -> Result<Outcome> {
    files.push(m.csv().write(dir, "manifest.csv")?);
    let failed: Vec<String> = m.failed().into_iter().map(String::from).collect();
    Ok(Outcome { code: if failed.is_empty() { EXIT_OK } else { EXIT_CONVERGENCE }, files, failed })
}

/// `solve`: densities at explicit `s` values, or the full family of the configured downwash.
pub fn solve(cfg: &RunConfig, s_values: &[C]) -> Result<Outcome> {
    let st = setup(cfg)?;
    let dir = &cfg.outputs.dir;
    let mut m = Manifest::default();
    parameter_rows(&mut m, cfg, &st);
    let mut files = Vec::new();
    let mut index = Csv::new(&["index", "re_s", "im_s", "re_det", "im_det", "residual", "lq_integral", "file"]);

    let dens: Vec<PressureDensity<f64>> = if s_values.is_empty() {
        let family = build_family(cfg, &st)?;
        let rows = time_loads(&family, &cfg.loads.t)?;
        files.push(loads_csv(&rows).write(dir, "loads.csv")?);
        load_gates(&mut m, &rows);
        if cfg.downwash.kind == DownwashKind::Harmonic {
            let probes: Vec<(f64, f64)> = possio::verify::tangency_probes();
            let rep = flow_tangency_residual(&family, &st.spec, &probes)?;
            m.gate("flow_tangency_residual", rep.relative, TANGENCY_TOL, rep.passed);
        }
        family.densities
    } else {
        for s in s_values {
            if !st.params.in_strip(*s) {
                return Err(Error::Config(format!("s = {s} lies outside the strip [{}, {}]", st.params.sigma1, st.params.sigma2)));
            }
        }
        let dens = s_values
            .par_iter()
            .map(|&s| solve_one(cfg, &st, s, &laplace_transform(&st.spec, s, &st.disc.grid)?))
            .collect::<Result<Vec<_>>>()?;
        let mut lc = Csv::new(&["re_s", "im_s", "lift_re", "lift_im", "moment_re", "moment_im"]);
        for d in &dens {
            let (l, mo) = chord_loads(&d.p);
            lc.nums(&[d.s.re, d.s.im, l.re, l.im, mo.re, mo.im]);
        }
        files.push(lc.write(dir, "loads_s.csv")?);
        dens
    };
    m.info("solved_s_count", dens.len() as f64);
    density_gates(&mut m, &dens);
    for (j, d) in dens.iter().enumerate() {
        let name = format!("p_{j:05}.csv");
        files.push(density_csv(d)?.write(dir, &name)?);
        index.row(&[
            j.to_string(),
            num(d.s.re),
            num(d.s.im),
            num(d.det.re),
            num(d.det.im),
            num(d.residual),
            num(d.lp_norm),
            name,
        ]);
    }
    files.push(index.write(dir, "s_index.csv")?);
    finish(&m, dir, files)
}

/// `scan`: determinant over the strip grid plus the refined zero list.
pub fn scan(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let params = cfg.params()?;
    let disc = Discretization::new(cfg.grid.n)?;
    let sc = scan_determinant(cfg.scan_strip()?, &params, &disc)?;
    let mut c = Csv::new(&["sigma", "nu", "re_d", "im_d", "abs_d", "zero_flag"]);
    for ((s, d), flag) in sc.samples.iter().zip(sc.zero_flags()) {
        c.row(&[num(s.re), num(s.im), num(d.re), num(d.im), num(d.norm()), (flag as u8).to_string()]);
    }
    let mut z = Csv::new(&["re_s", "im_s", "abs_d", "relative", "status"]);
    for r in sc.zeros.iter().chain(&sc.suspects) {
        let status = if r.status == ZeroStatus::Refined { "refined" } else { "suspect" };
        z.row(&[num(r.s.re), num(r.s.im), num(r.det_abs), num(r.residual), status.into()]);
    }
    Ok(vec![c.write(&cfg.outputs.dir, "scan.csv")?, z.write(&cfg.outputs.dir, "zeros.csv")?])
}

/// `verify`: report rows and whether every check passed.
pub fn verify(cfg: &RunConfig, names: &[String]) -> Result<(Csv, bool)> {
    let suites = resolve_suites(if names.is_empty() { &cfg.verify.suites } else { names })?;
    let mut c = Csv::new(&["suite", "item", "value", "relation", "tolerance", "status", "note"]);
    let mut all = true;
    for name in suites {
        let rep = run_suite(name)?;
        for ch in &rep.checks {
            all &= ch.passed;
            let note = ch.note.as_deref().unwrap_or("").replace([',', '\n'], ";");
            c.row(&[
                ch.suite.into(),
                ch.item.clone(),
                num(ch.value),
                ch.relation.symbol().into(),
                num(ch.tolerance),
                if ch.passed { "pass" } else { "fail" }.into(),
                note,
            ]);
        }
    }
    Ok((c, all))
}

fn linspace(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
}

/// `dump-kernel`: full kernel and its regular part on a uniform `(x, xi)` grid, skipping the diagonal.
pub fn dump_kernel(cfg: &RunConfig) -> Result<PathBuf> {
    let params = cfg.params()?;
    let s = Complex::new(cfg.dump_kernel.s[0], cfg.dump_kernel.s[1]);
    if !params.in_strip(s) {
        return Err(Error::Config(format!("dump_kernel.s = {s} lies outside the strip")));
    }
    let ctx = KernelContext::new(s, &params)?;
    let xs = linspace(cfg.dump_kernel.n_x);
    let xis = linspace(cfg.dump_kernel.n_xi);
    let rows = xs
        .par_iter()
        .map(|&x| {
            xis.iter()
                .filter(|&&xi| (x - xi).abs() >= 1e-7)
                .map(|&xi| {
                    let full = ctx.full(x - xi)?;
                    let reg = ctx.regular(x - xi);
                    Ok([x, xi, full.re, full.im, reg.re, reg.im])
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut c = Csv::new(&["x", "xi", "re_full", "im_full", "re_regular", "im_regular"]);
    for r in rows.iter().flatten() {
        c.nums(r);
    }
    c.write(&cfg.outputs.dir, "kernel.csv")
}

/// `field`: potential and acceleration potential at every `(x, y, t)` probe.
pub fn field(cfg: &RunConfig) -> Result<PathBuf> {
    let st = setup(cfg)?;
    let family = build_family(cfg, &st)?;
    let mut probes = Vec::new();
    for &t in &cfg.field.t {
        for &y in &cfg.field.y {
            for &x in &cfg.field.x {
                probes.push((x, y, t));
            }
        }
    }
    let samples = probes.par_iter().map(|&(x, y, t)| evaluate(x, y, t, &family)).collect::<Result<Vec<_>>>()?;
    let mut c = Csv::new(&["x", "y", "t", "re_phi", "im_phi", "re_psi", "im_psi"]);
    for f in &samples {
        let (phi, psi) = (f.phi.unwrap_or_default(), f.psi.unwrap_or_default());
        c.nums(&[f.x, f.y, f.t, phi.re, phi.im, psi.re, psi.im]);
    }
    c.write(&cfg.outputs.dir, "field.csv")
}

/// `loads`: lift and moment at the configured times, with the Bromwich gates in a manifest.
pub fn loads(cfg: &RunConfig) -> Result<Outcome> {
    let st = setup(cfg)?;
    let family = build_family(cfg, &st)?;
    let rows = time_loads(&family, &cfg.loads.t)?;
    let mut m = Manifest::default();
    parameter_rows(&mut m, cfg, &st);
    load_gates(&mut m, &rows);
    let files = vec![loads_csv(&rows).write(&cfg.outputs.dir, "loads.csv")?];
    finish(&m, &cfg.outputs.dir, files)
}
