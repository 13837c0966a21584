//! Downwash descriptions, their Laplace transforms, and Bromwich inversion
//! along a vertical line `Re s = sigma'`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::cheb::{ChebGrid, ChordFunction};
use crate::error::{Error, Result};
use crate::linalg::{Lu, Mat};
use crate::real::{c, cr, czero, Real};

pub type Profile<T> = Arc<dyn Fn(T) -> Complex<T> + Send + Sync>;
pub type LaplaceClosure<T> = Arc<dyn Fn(T, Complex<T>) -> Complex<T> + Send + Sync>;

/// Built-in closures selectable by name.
pub const CLOSURE_CATALOG: [&str; 4] = ["harmonic", "step", "decaying-exponential", "smooth-onset"];

/// Sampled real downwash `w(x_i, t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSamples<T> {
    /// Strictly increasing, starting at `t = 0`.
    pub t: Vec<T>,
    /// Strictly increasing chord stations in `[-1, 1]`.
    pub x: Vec<T>,
    /// `values[i][j] = w(x_i, t_j)`.
    pub values: Vec<Vec<T>>,
}

#[derive(Clone)]
pub enum DownwashSpec<T> {
    /// `w(x, t) = w0(x) e^{i k t}`.
    Harmonic { w0: Profile<T>, k: T },
    /// `w_hat(x, s)` given directly.
    LaplaceClosure { name: String, f: LaplaceClosure<T> },
    TimeSamples(TimeSamples<T>),
}

impl<T: Real> fmt::Debug for DownwashSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DownwashSpec::Harmonic { k, .. } => write!(f, "Harmonic {{ k: {k} }}"),
            DownwashSpec::LaplaceClosure { name, .. } => write!(f, "LaplaceClosure {{ name: {name} }}"),
            DownwashSpec::TimeSamples(ts) => write!(f, "TimeSamples {{ nt: {}, nx: {} }}", ts.t.len(), ts.x.len()),
        }
    }
}

impl<T: Real> DownwashSpec<T> {
    pub fn harmonic(w0: impl Fn(T) -> Complex<T> + Send + Sync + 'static, k: T) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::Config(format!("harmonic frequency must be finite, got {k}")));
        }
        Ok(DownwashSpec::Harmonic { w0: Arc::new(w0), k })
    }

    /// Uniform-in-`x` closure from the catalog: `harmonic` (`amp/(s - i rate)`),
    /// `step` (`amp/s`), `decaying-exponential` (`amp/(s + rate)`),
    /// `smooth-onset` (`amp/(s + rate)^3`, i.e. `amp t^2 e^{-rate t} / 2`).
    pub fn closure(name: &str, amplitude: T, rate: T) -> Result<Self> {
        let f: LaplaceClosure<T> = match name {
            "harmonic" => Arc::new(move |_, s: Complex<T>| cr::<T>(amplitude) / (s - c(T::zero(), rate))),
            "step" => Arc::new(move |_, s: Complex<T>| cr::<T>(amplitude) / s),
            "decaying-exponential" => Arc::new(move |_, s: Complex<T>| cr::<T>(amplitude) / (s + rate)),
            "smooth-onset" => Arc::new(move |_, s: Complex<T>| cr::<T>(amplitude) / (s + rate).powi(3)),
            other => {
                return Err(Error::Config(format!(
                    "unknown downwash closure '{other}' (known: {})",
                    CLOSURE_CATALOG.join(", ")
                )))
            }
        };
        Ok(DownwashSpec::LaplaceClosure { name: name.to_string(), f })
    }

    pub fn samples(ts: TimeSamples<T>) -> Result<Self> {
        ts.validate()?;
        Ok(DownwashSpec::TimeSamples(ts))
    }

    /// Downwash in the time domain, where it is available in closed form.
    pub fn time_value(&self, x: T, t: T) -> Option<Complex<T>> {
        match self {
            DownwashSpec::Harmonic { w0, k } => Some(w0(x) * c(T::zero(), *k * t).exp()),
            DownwashSpec::TimeSamples(ts) => Some(cr(ts.value_at(x, t))),
            DownwashSpec::LaplaceClosure { .. } => None,
        }
    }

    /// True when the data are real, so transforms obey `w_hat(conj s) = conj w_hat(s)`.
    pub fn is_real(&self) -> bool {
        match self {
            DownwashSpec::Harmonic { k, .. } => *k == T::zero(),
            DownwashSpec::LaplaceClosure { name, .. } => name != "harmonic",
            DownwashSpec::TimeSamples(_) => true,
        }
    }
}

impl<T: Real> TimeSamples<T> {
    pub fn validate(&self) -> Result<()> {
        if self.t.len() < 4 || self.x.len() < 2 {
            return Err(Error::Data("time samples need at least 4 times and 2 chord stations".into()));
        }
        if self.t[0] != T::zero() {
            return Err(Error::Data(format!("time samples must start at t = 0, got {}", self.t[0])));
        }
        if self.t.windows(2).any(|w| !(w[1] > w[0])) || self.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Data("time and chord grids must be strictly increasing".into()));
        }
        if self.x[0] < -T::one() || self.x[self.x.len() - 1] > T::one() {
            return Err(Error::Data("chord stations must lie in [-1, 1]".into()));
        }
        if self.values.len() != self.x.len() || self.values.iter().any(|r| r.len() != self.t.len()) {
            return Err(Error::Data("sample table shape does not match the grids".into()));
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("time samples must be finite".into()));
        }
        Ok(())
    }

    /// Fails when `|w|` over the last quarter of the time grid exceeds `1e-6` of its maximum.
    pub fn check_decay(&self) -> Result<()> {
        let t_end = self.t[self.t.len() - 1];
        let cut = t_end * T::lit(0.75);
        let max = self.values.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut tail = T::zero();
        for row in &self.values {
            for (v, t) in row.iter().zip(&self.t) {
                if *t >= cut {
                    tail = tail.max(v.abs());
                }
            }
        }
        if tail > T::lit(1e-6) * max {
            return Err(Error::Data(format!(
                "time samples do not decay: max |w| over t >= {cut} is {tail:e}, {:e} of the peak",
                tail / max
            )));
        }
        Ok(())
    }

    fn value_at(&self, x: T, t: T) -> T {
        let col: Vec<T> = self.values.iter().map(|row| Spline::new(&self.t, row).eval(t)).collect();
        Spline::new(&self.x, &col).eval(x)
    }
}

/// Natural cubic spline.
#[derive(Debug, Clone)]
pub struct Spline<T> {
    x: Vec<T>,
    y: Vec<T>,
    m: Vec<T>,
}

impl<T: Real> Spline<T> {
    pub fn new(x: &[T], y: &[T]) -> Self {
        let n = x.len();
        let mut m = vec![T::zero(); n];
        if n > 2 {
            let mut a = vec![T::zero(); n];
            let mut b = vec![T::one(); n];
            let mut cc = vec![T::zero(); n];
            let mut d = vec![T::zero(); n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                a[i] = h0;
                b[i] = T::lit(2.0) * (h0 + h1);
                cc[i] = h1;
                d[i] = T::lit(6.0) * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for i in 1..n {
                let w = a[i] / b[i - 1];
                b[i] -= w * cc[i - 1];
                d[i] = d[i] - w * d[i - 1];
            }
            m[n - 1] = d[n - 1] / b[n - 1];
            for i in (0..n - 1).rev() {
                m[i] = (d[i] - cc[i] * m[i + 1]) / b[i];
            }
        }
        Spline { x: x.to_vec(), y: y.to_vec(), m }
    }

    fn interval(&self, t: T) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        }
    }

    /// Power-basis coefficients of the cubic on interval `i`, in `tau = t - x_i`.
    fn cubic(&self, i: usize) -> [T; 4] {
        let h = self.x[i + 1] - self.x[i];
        let six = T::lit(6.0);
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        [y0, (y1 - y0) / h - h * (T::lit(2.0) * m0 + m1) / six, m0 * T::lit(0.5), (m1 - m0) / (six * h)]
    }

    pub fn eval(&self, t: T) -> T {
        let i = self.interval(t);
        let [a, b, cc, d] = self.cubic(i);
        let u = t - self.x[i];
        a + u * (b + u * (cc + u * d))
    }

    /// `int_{x_0}^{x_last} e^{-s t} S(t) dt`, exact for the interpolant.
    pub fn laplace(&self, s: Complex<T>) -> Complex<T> {
        let mut total = czero::<T>();
        let mut cached: Option<(T, [Complex<T>; 4], Complex<T>)> = None;
        let mut e = czero::<T>();
        for i in 0..self.x.len() - 1 {
            let h = self.x[i + 1] - self.x[i];
            let mom = match cached {
                Some((hc, m, step)) if (hc - h).abs() <= T::epsilon() * T::lit(8.0) * self.x[i + 1].abs().max(h) => {
                    // multiplicative update, re-anchored every 32 steps
                    e = if i % 32 == 0 { (-s * self.x[i]).exp() } else { e * step };
                    m
                }
                _ => {
                    let m = exp_moments(s, h);
                    cached = Some((h, m, (-s * h).exp()));
                    e = (-s * self.x[i]).exp();
                    m
                }
            };
            let co = self.cubic(i);
            let mut part = czero::<T>();
            for k in 0..4 {
                part += mom[k] * co[k];
            }
            total += e * part;
        }
        total
    }
}

/// `M_k = int_0^h tau^k e^{-s tau} d tau` for `k = 0..3`.
fn exp_moments<T: Real>(s: Complex<T>, h: T) -> [Complex<T>; 4] {
    let z = s * h;
    let mut out = [czero::<T>(); 4];
    if z.norm() < T::lit(0.5) {
        for (k, o) in out.iter_mut().enumerate() {
            // sum_m (-z)^m / (m! (k + m + 1)) h^{k+1}
            let mut term = cr::<T>(T::one());
            let mut acc = czero::<T>();
            for m in 0..40 {
                let mf = T::from_usize_lossy(m);
                if m > 0 {
                    term = term * (-z) / mf;
                }
                acc += term / (T::from_usize_lossy(k + 1) + mf);
                if term.norm() < T::epsilon() * T::lit(1e-2) {
                    break;
                }
            }
            *o = acc * h.powi(k as i32 + 1);
        }
    } else {
        let e = (-z).exp();
        out[0] = (cr::<T>(T::one()) - e) / s;
        for k in 1..4 {
            out[k] = (out[k - 1] * T::from_usize_lossy(k) - e * h.powi(k as i32)) / s;
        }
    }
    out
}

/// `w_hat(., s)` on the solver grid.
pub fn laplace_transform<T: Real>(spec: &DownwashSpec<T>, s: Complex<T>, grid: &Arc<ChebGrid<T>>) -> Result<ChordFunction<T>> {
    match spec {
        DownwashSpec::Harmonic { w0, k } => {
            let den = s - c(T::zero(), *k);
            if den.norm() == T::zero() {
                return Err(Error::Domain(format!("s = {s} coincides with the harmonic pole")));
            }
            Ok(ChordFunction::from_fn(grid.clone(), |x| w0(x) / den))
        }
        DownwashSpec::LaplaceClosure { f, .. } => {
            let fun = ChordFunction::from_fn(grid.clone(), |x| f(x, s));
            ChordFunction::new(grid.clone(), fun.values, fun.endpoint_class)
        }
        DownwashSpec::TimeSamples(ts) => {
            if !(s.re > T::zero()) {
                return Err(Error::Domain(format!("sampled data need Re s > 0, got {s}")));
            }
            ts.check_decay()?;
            let at_x: Vec<Complex<T>> = ts.values.iter().map(|row| Spline::new(&ts.t, row).laplace(s)).collect();
            let re: Vec<T> = at_x.iter().map(|v| v.re).collect();
            let im: Vec<T> = at_x.iter().map(|v| v.im).collect();
            let sr = Spline::new(&ts.x, &re);
            let si = Spline::new(&ts.x, &im);
            Ok(ChordFunction::from_fn(grid.clone(), |x| c(sr.eval(x), si.eval(x))))
        }
    }
}

/// Outcome of the strip-hypothesis diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport<T> {
    /// `(nu, ln ||w_hat||, ln bound)` at each sample; `ln ||w_hat|| = -inf` for zero data.
    pub samples: Vec<(T, T, T)>,
    /// Smallest sampled `|nu|` beyond which every sample meets the bound.
    pub met_beyond: Option<T>,
    /// Largest sampled `|nu|` at which the bound fails.
    pub last_violation: Option<T>,
}

/// Compares `||w_hat(., sigma + i nu)||_2` with `exp(-e^{|nu|} (1 + |nu|)^{4 + eps})`
/// on `nu = 0, d_nu, .., nu_max`, at the strip edge with the slowest decay. Advisory only.
pub fn check_decay_hypothesis<T: Real>(
    spec: &DownwashSpec<T>,
    strip: (T, T),
    epsilon: T,
    nu_max: T,
    d_nu: T,
    grid: &Arc<ChebGrid<T>>,
) -> DecayReport<T> {
    let steps = (nu_max / d_nu).round().to_usize().unwrap_or(0);
    let mut samples = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let nu = d_nu * T::from_usize_lossy(j);
        let mut worst = T::neg_infinity();
        for sigma in [strip.0, strip.1] {
            for sgn in [T::one(), -T::one()] {
                let s = c(sigma, sgn * nu);
                let norm = match laplace_transform(spec, s, grid) {
                    Ok(w) => {
                        let sq: Vec<Complex<T>> = w.values.iter().map(|v| cr(v.norm_sqr())).collect();
                        grid.integrate(&sq).re.max(T::zero()).sqrt()
                    }
                    Err(_) => T::infinity(),
                };
                worst = worst.max(norm.ln());
            }
        }
        let bound = -(nu.exp() * (T::one() + nu).powf(T::lit(4.0) + epsilon));
        samples.push((nu, worst, bound));
    }
    let last_violation = samples.iter().rev().find(|(_, l, b)| *l >= *b).map(|(n, _, _)| *n);
    let met_beyond = match last_violation {
        None => samples.first().map(|(n, _, _)| *n),
        Some(v) => samples.iter().find(|(n, _, _)| *n > v).map(|(n, _, _)| *n),
    };
    DecayReport { samples, met_beyond, last_violation }
}

/// Uniform vertical contour `s_j = sigma' + i j d_nu`, `|j| <= M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour<T> {
    pub sigma_prime: T,
    pub nu_max: T,
    pub d_nu: T,
}

impl<T: Real> Contour<T> {
    pub fn new(sigma_prime: T, nu_max: T, d_nu: T) -> Result<Self> {
        if !(d_nu > T::zero()) || !(nu_max >= d_nu) || !(sigma_prime > T::zero()) {
            return Err(Error::Config(format!(
                "contour needs sigma' > 0 and 0 < d_nu <= nu_max, got sigma' = {sigma_prime}, nu_max = {nu_max}, d_nu = {d_nu}"
            )));
        }
        Ok(Contour { sigma_prime, nu_max, d_nu })
    }

    pub fn half_count(&self) -> usize {
        (self.nu_max / self.d_nu).round().to_usize().unwrap_or(0)
    }

    pub fn nodes(&self) -> Vec<Complex<T>> {
        let m = self.half_count() as i64;
        (-m..=m).map(|j| c(self.sigma_prime, self.d_nu * T::from_i64(j).unwrap())).collect()
    }
}

/// Inversion result with its self-convergence gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion<T> {
    pub value: Complex<T>,
    /// Result from the sub-contour with half `nu_max` and twice `d_nu`.
    pub coarse: Complex<T>,
    pub gate_diff: T,
    /// The gate passes when `gate_diff <= GATE_TOL * scale`.
    pub scale: T,
    pub passed: bool,
}

pub const GATE_TOL: f64 = 1e-4;

/// `(1/2 pi i) int e^{s t} F(s) ds` by the trapezoid rule on the contour,
/// with the `c_1/s + .. + c_4/s^4` asymptote of `F` inverted exactly.
pub fn bromwich_invert<T: Real>(contour: &Contour<T>, values: &[Complex<T>], t: T) -> Result<Complex<T>> {
    let r = bromwich_report(contour, values, t)?;
    if !r.passed {
        return Err(Error::Convergence(format!(
            "Bromwich self-convergence gate failed at t = {t}: |full - coarse| = {:e}",
            r.gate_diff
        )));
    }
    Ok(r.value)
}

pub fn bromwich_report<T: Real>(contour: &Contour<T>, values: &[Complex<T>], t: T) -> Result<Inversion<T>> {
    let m = contour.half_count();
    if values.len() != 2 * m + 1 {
        return Err(Error::GridMismatch { expected: 2 * m + 1, found: values.len() });
    }
    if !(t > T::zero()) {
        return Err(Error::Domain(format!("Bromwich inversion needs t > 0, got {t}")));
    }
    let value = invert_on(contour.sigma_prime, contour.d_nu, values, t, 1)?;
    let coarse_m = (m / 2) / 2 * 2;
    let sub: Vec<Complex<T>> = values[m - coarse_m..=m + coarse_m].to_vec();
    let coarse = invert_on(contour.sigma_prime, contour.d_nu, &sub, t, 2)?;
    let l1 = values.iter().fold(T::zero(), |a, v| a + v.norm()) * contour.d_nu * (contour.sigma_prime * t).exp()
        / (T::lit(2.0) * T::PI());
    let scale = value.norm().max(T::lit(1e-2) * l1);
    let gate_diff = (value - coarse).norm();
    let passed = gate_diff <= T::lit(GATE_TOL) * scale || gate_diff == T::zero();
    Ok(Inversion { value, coarse, gate_diff, scale, passed })
}

/// Trapezoid over every `stride`-th sample of a symmetric grid.
fn invert_on<T: Real>(sigma: T, d_nu: T, values: &[Complex<T>], t: T, stride: usize) -> Result<Complex<T>> {
    let m = values.len() / 2;
    let h = d_nu * T::from_usize_lossy(stride);
    let idx: Vec<usize> = (0..values.len()).filter(|i| (*i as i64 - m as i64) % stride as i64 == 0).collect();
    let s_of = |i: usize| c(sigma, d_nu * T::from_i64(i as i64 - m as i64).unwrap());
    let nu_max = d_nu * T::from_usize_lossy(m);
    let coef = if nu_max > T::zero() { fit_asymptote(&idx, values, &s_of, nu_max)? } else { [czero(); 4] };
    let g = |s: Complex<T>| {
        let inv = s.inv();
        let mut acc = czero::<T>();
        let mut p = inv;
        for ck in coef {
            acc += ck * p;
            p *= inv;
        }
        acc
    };
    let mut sum = czero::<T>();
    let first = idx[0];
    let last = idx[idx.len() - 1];
    for &i in &idx {
        let s = s_of(i);
        let w = if i == first || i == last { T::lit(0.5) } else { T::one() };
        sum += (s * t).exp() * (values[i] - g(s)) * w;
    }
    let trap = sum * h / (T::lit(2.0) * T::PI());
    // trapezoid of the asymptote on the infinite line: g(t) plus its aliases at t + k P
    let period = T::lit(2.0) * T::PI() / h;
    let ginv = |tau: T| {
        let mut acc = czero::<T>();
        let mut fact = T::one();
        for (k, ck) in coef.iter().enumerate() {
            if k > 0 {
                fact *= T::from_usize_lossy(k);
            }
            acc += *ck * (tau.powi(k as i32) / fact);
        }
        acc
    };
    let mut alias = czero::<T>();
    if t < period {
        for k in 0..200 {
            let kf = T::from_usize_lossy(k);
            let term = ginv(t + kf * period) * (-sigma * kf * period).exp();
            alias += term;
            if k > 0 && term.norm() <= T::epsilon() * alias.norm() {
                break;
            }
        }
    } else {
        return Err(Error::Domain(format!(
            "t = {t} exceeds the alias period {period} of the contour spacing"
        )));
    }
    Ok(trap + alias)
}

/// Least-squares `c_1..c_4` of `F ~ sum c_k / s^k` over `|nu| >= nu_max / 2`.
fn fit_asymptote<T: Real>(
    idx: &[usize],
    values: &[Complex<T>],
    s_of: &impl Fn(usize) -> Complex<T>,
    nu_max: T,
) -> Result<[Complex<T>; 4]> {
    let rows: Vec<usize> = idx.iter().copied().filter(|&i| s_of(i).im.abs() >= nu_max * T::lit(0.5)).collect();
    if rows.len() < 8 {
        return Ok([czero(); 4]);
    }
    // scaled basis (nu_max / s)^k keeps the normal equations balanced
    let basis = |s: Complex<T>, k: usize| (cr::<T>(nu_max) / s).powi(k as i32 + 1);
    let mut ata = Mat::<T>::zeros(4, 4);
    let mut atb = vec![czero::<T>(); 4];
    for &i in &rows {
        let s = s_of(i);
        for a in 0..4 {
            let ba = basis(s, a).conj();
            atb[a] += ba * values[i];
            for b in 0..4 {
                ata[(a, b)] += ba * basis(s, b);
            }
        }
    }
    let lu = Lu::new(&ata)?;
    if lu.is_singular() {
        return Ok([czero(); 4]);
    }
    let x = lu.solve(&atb)?;
    let mut out = [czero::<T>(); 4];
    for k in 0..4 {
        out[k] = x[k] * nu_max.powi(k as i32 + 1);
    }
    Ok(out)
}
