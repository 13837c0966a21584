//! Run configuration: TOML file, dotted command-line overrides, environment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use possio::flowconfig::{derive_params, FlowParams};
use possio::fredholm::ScanStrip;
use possio::laplace::{Contour, DownwashSpec, TimeSamples};
use possio::{Error, Result};

pub const ENV_OUT_DIR: &str = "POSSIO_OUT_DIR";
pub const ENV_THREADS: &str = "POSSIO_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct RunConfig {
    pub flow: FlowSection,
    pub grid: GridSection,
    pub contour: ContourSection,
    pub downwash: DownwashSection,
    pub scan: ScanSection,
    pub field: FieldSection,
    pub loads: LoadsSection,
    pub dump_kernel: DumpKernelSection,
    pub outputs: OutputsSection,
    pub verify: VerifySection,
    pub debug: DebugSection,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub a: f64,
    pub mach: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl Default for FlowSection {
    fn default() -> Self {
        FlowSection { a: 340.0, mach: 0.5, sigma1: 0.1, sigma2: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourSection {
    /// Defaults to the strip midpoint.
    pub sigma_prime: Option<f64>,
    pub nu_max: f64,
    pub d_nu: f64,
}

impl Default for ContourSection {
    fn default() -> Self {
        ContourSection { sigma_prime: None, nu_max: 40.0, d_nu: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DownwashKind {
    Harmonic,
    Closure,
    Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DownwashSection {
    pub kind: DownwashKind,
    /// Polynomial coefficients of `w0(x)` in powers of `x`.
    pub w0: Vec<f64>,
    pub k: f64,
    pub sigma_shift: f64,
    pub name: String,
    pub amplitude: f64,
    pub rate: f64,
    /// CSV with header `t,<x_1>,..,<x_m>` and one row per time.
    pub file: Option<PathBuf>,
}

impl Default for DownwashSection {
    fn default() -> Self {
        DownwashSection {
            kind: DownwashKind::Harmonic,
            w0: vec![1.0],
            k: 0.5,
            sigma_shift: possio::field::DEFAULT_SIGMA_SHIFT,
            name: "step".into(),
            amplitude: 1.0,
            rate: 1.0,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    /// Default to the flow strip.
    pub sigma_lo: Option<f64>,
    pub sigma_hi: Option<f64>,
    pub nu_max: f64,
    pub n_sigma: usize,
    pub n_nu: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection { sigma_lo: None, sigma_hi: None, nu_max: 10.0, n_sigma: 8, n_nu: 41 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSection {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: Vec<f64>,
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection { x: vec![-2.0, -1.5, -0.5, 0.0, 0.5, 1.5, 2.0], y: vec![0.0, 0.25, 1.0], t: vec![1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadsSection {
    pub t: Vec<f64>,
}

impl Default for LoadsSection {
    fn default() -> Self {
        LoadsSection { t: vec![0.5, 1.0, 2.0, 4.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DumpKernelSection {
    /// `[re, im]`.
    pub s: [f64; 2],
    pub n_x: usize,
    pub n_xi: usize,
}

impl Default for DumpKernelSection {
    fn default() -> Self {
        DumpKernelSection { s: [1.0, 1.0], n_x: 21, n_xi: 21 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsSection {
    pub dir: PathBuf,
}

impl Default for OutputsSection {
    fn default() -> Self {
        OutputsSection { dir: PathBuf::from("possio-out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub suites: Vec<String>,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { suites: vec!["all".into()] }
    }
}

/// Test hooks; not part of a production run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DebugSection {
    /// Scale the kernel so that every solved `s` is a characteristic value.
    pub force_characteristic: bool,
}

/// Splits `--a.b value` and `--a.b=value` pairs off the argument list.
pub fn extract_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, String)>)> {
    let mut rest = Vec::new();
    let mut out = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(body) = a.strip_prefix("--") else {
            rest.push(a);
            continue;
        };
        let (key, inline) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (body.to_string(), None),
        };
        if !key.contains('.') {
            rest.push(a);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().ok_or_else(|| Error::Config(format!("override --{key} needs a value")))?,
        };
        out.push((key, value));
    }
    Ok((rest, out))
}

fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

fn set_path(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key '{key}'")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{p}' is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Reads the file (if any), applies overrides, then the output-directory variable.
pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    let name = path.map(|p| p.display().to_string()).unwrap_or_else(|| "<defaults>".into());
    let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Config(format!("{name}: {e}")))?;
    if !overrides.is_empty() {
        let mut table: Table = toml::from_str(&text).map_err(|e| Error::Config(format!("{name}: {e}")))?;
        for (k, v) in overrides {
            set_path(&mut table, k, parse_value(v))?;
        }
        cfg = table.try_into().map_err(|e: toml::de::Error| {
            let keys: Vec<&str> = overrides.iter().map(|(k, _)| k.as_str()).collect();
            Error::Config(format!("command-line override ({}): {}", keys.join(", "), e.message()))
        })?;
    }
    if let Ok(dir) = std::env::var(ENV_OUT_DIR) {
        if !dir.is_empty() {
            cfg.outputs.dir = PathBuf::from(dir);
        }
    }
    if let (Some(base), Some(f)) = (path.and_then(Path::parent), cfg.downwash.file.as_mut()) {
        if f.is_relative() && !base.as_os_str().is_empty() {
            *f = base.join(&*f);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Worker count from the parallelism variable; `None` leaves the pool default.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(ENV_THREADS) {
        Ok(v) if !v.is_empty() => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{ENV_THREADS} must be a positive integer, got '{v}'"))),
        },
        _ => Ok(None),
    }
}

fn positive_finite(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.grid.n < 8 || self.grid.n > 4096 {
            return Err(Error::Config(format!("grid.n must lie in [8, 4096], got {}", self.grid.n)));
        }
        self.contour()?;
        positive_finite("downwash.sigma_shift", self.downwash.sigma_shift)?;
        if self.downwash.kind == DownwashKind::Samples {
            match &self.downwash.file {
                Some(f) if f.is_file() => {}
                Some(f) => return Err(Error::Config(format!("downwash.file {} does not exist", f.display()))),
                None => return Err(Error::Config("downwash.kind = \"samples\" needs downwash.file".into())),
            }
        }
        if self.downwash.kind == DownwashKind::Harmonic && self.downwash.w0.is_empty() {
            return Err(Error::Config("downwash.w0 needs at least one coefficient".into()));
        }
        self.scan_strip()?;
        if self.scan.n_sigma == 0 || self.scan.n_nu == 0 {
            return Err(Error::Config("scan.n_sigma and scan.n_nu must be positive".into()));
        }
        if self.dump_kernel.n_x == 0 || self.dump_kernel.n_xi == 0 {
            return Err(Error::Config("dump_kernel.n_x and dump_kernel.n_xi must be positive".into()));
        }
        for t in self.field.t.iter().chain(&self.loads.t) {
            if !t.is_finite() || *t < 0.0 {
                return Err(Error::Config(format!("output times must be finite and non-negative, got {t}")));
            }
        }
        for v in self.field.x.iter().chain(&self.field.y) {
            if !v.is_finite() {
                return Err(Error::Config("field probe coordinates must be finite".into()));
            }
        }
        if self.field.y.contains(&0.0) && self.field.x.iter().any(|x| x.abs() == 1.0) {
            return Err(Error::Config("field probes at the chord ends x = +-1 on y = 0 are singular".into()));
        }
        possio::verify::resolve_suites(&self.verify.suites)?;
        Ok(())
    }

    pub fn params(&self) -> Result<FlowParams<f64>> {
        let p = derive_params(self.flow.a, self.flow.mach)?.with_strip(self.flow.sigma1, self.flow.sigma2)?;
        if !(self.flow.sigma1 > 0.0) {
            return Err(Error::Config(format!("flow.sigma1 must be positive, got {}", self.flow.sigma1)));
        }
        match self.contour.sigma_prime {
            Some(sp) => p.with_sigma_prime(sp),
            None => Ok(p),
        }
    }

    pub fn contour(&self) -> Result<Contour<f64>> {
        let p = self.params()?;
        Contour::new(p.sigma_prime, self.contour.nu_max, self.contour.d_nu)
    }

    pub fn scan_strip(&self) -> Result<ScanStrip<f64>> {
        let lo = self.scan.sigma_lo.unwrap_or(self.flow.sigma1);
        let hi = self.scan.sigma_hi.unwrap_or(self.flow.sigma2);
        if lo > hi || lo < self.flow.sigma1 || hi > self.flow.sigma2 {
            return Err(Error::Config(format!(
                "scan strip [{lo}, {hi}] must be ordered and lie inside [{}, {}]",
                self.flow.sigma1, self.flow.sigma2
            )));
        }
        if !(self.scan.nu_max >= 0.0) || !self.scan.nu_max.is_finite() {
            return Err(Error::Config(format!("scan.nu_max must be non-negative, got {}", self.scan.nu_max)));
        }
        Ok(ScanStrip { sigma_lo: lo, sigma_hi: hi, nu_max: self.scan.nu_max, n_sigma: self.scan.n_sigma, n_nu: self.scan.n_nu })
    }

    pub fn downwash(&self) -> Result<DownwashSpec<f64>> {
        let d = &self.downwash;
        match d.kind {
            DownwashKind::Harmonic => {
                let coeffs = d.w0.clone();
                DownwashSpec::harmonic(move |x| num_complex::Complex::new(coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c), 0.0), d.k)
            }
            DownwashKind::Closure => DownwashSpec::closure(&d.name, d.amplitude, d.rate),
            DownwashKind::Samples => {
                let path = d.file.as_ref().ok_or_else(|| Error::Config("downwash.file missing".into()))?;
                DownwashSpec::samples(read_samples(path)?)
            }
        }
    }
}

/// Parses a sample table: header `t,<x_1>,..,<x_m>`, then `t_j,w(x_1,t_j),..`.
pub fn read_samples(path: &Path) -> Result<TimeSamples<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let num = |s: &str, line: usize| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Data(format!("{}:{}: '{}' is not a number", path.display(), line + 1, s.trim())))
    };
    let (hl, header) = lines.next().ok_or_else(|| Error::Data(format!("{} is empty", path.display())))?;
    let mut cols = header.split(',');
    if cols.next().map(str::trim) != Some("t") {
        return Err(Error::Data(format!("{}:{}: header must start with 't'", path.display(), hl + 1)));
    }
    let x = cols.map(|c| num(c, hl)).collect::<Result<Vec<_>>>()?;
    let mut t = Vec::new();
    let mut values = vec![Vec::new(); x.len()];
    for (ln, line) in lines {
        let row = line.split(',').map(|c| num(c, ln)).collect::<Result<Vec<_>>>()?;
        if row.len() != x.len() + 1 {
            return Err(Error::Data(format!("{}:{}: expected {} columns, found {}", path.display(), ln + 1, x.len() + 1, row.len())));
        }
        t.push(row[0]);
        for (col, v) in values.iter_mut().zip(&row[1..]) {
            col.push(*v);
        }
    }
    let ts = TimeSamples { t, x, values };
    ts.validate()?;
    Ok(ts)
}
