//! Second-kind reduction `G_s = I + N_s` of the Possio equation, its
//! trace-removed determinant, resolvent, and the pressure solve.
//!
//! Writing `r = T[p]`, the equation `int F(x - xi) p(xi) dxi = w_hat e^{-s c x}`
//! becomes `r + kappa K[T^{-1} r] = kappa w_hat e^{-s c x}` with `K` the
//! regular part of the kernel. `r` is held at first-kind Chebyshev nodes; the
//! cofactor of `T^{-1} r` comes from a fixed real matrix and `K` is applied by
//! product integration, with exact log moments for the `A ln|x - xi|` part.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::cheb::{clenshaw, finite_hilbert, log_weights, tinv_matrix, ChebGrid, ChordFunction, EndpointClass};
use crate::error::{Error, Result};
use crate::flowconfig::FlowParams;
use crate::kernel::{reduction_constant, KernelContext, KernelTable};
use crate::linalg::{Lu, Mat};
use crate::quad;
use crate::real::{c, cr, czero, Real};

/// Relative tolerance of the `R_s[p]` verification hook.
pub const VERIFY_TOL: f64 = 1e-6;
/// `|D| < CHAR_REL * scale` marks a characteristic value.
pub const CHAR_REL: f64 = 1e-12;
/// Exponent of the `L^q` diagnostic of `p`.
pub const DEFAULT_LQ: f64 = 1.3;

/// The `s`-independent part of the Nyström scheme for one grid.
#[derive(Debug, Clone)]
pub struct Discretization<T> {
    pub grid: Arc<ChebGrid<T>>,
    /// Row-major `n x n` map from `r` values to cofactor values of `T^{-1} r`.
    pub tinv: Vec<T>,
    /// Row-major `w_j(x_i)` of the log product rule.
    pub log_w: Vec<T>,
    /// `L^2` weights `(pi/n) sqrt(1 - x_j^2)`.
    pub omega: Vec<T>,
}

impl<T: Real> Discretization<T> {
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 {
            return Err(Error::Config(format!("Nyström grid needs n >= 16, got {n}")));
        }
        let grid = Arc::new(ChebGrid::new(n)?);
        let tinv: Vec<T> = tinv_matrix(&grid)?.into_iter().flatten().collect();
        let log_w: Vec<T> = grid.nodes.par_iter().flat_map_iter(|&x| log_weights(&grid, x)).collect();
        let w = T::PI() / T::from_usize_lossy(n);
        let omega = grid.nodes.iter().map(|x| w * (T::one() - *x * *x).sqrt()).collect();
        Ok(Discretization { grid, tinv, log_w, omega })
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }
}

/// Replaces or rescales the kernel before assembly; used by tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelHook<T> {
    Normal,
    Zero,
    Scale(Complex<T>),
}

/// Nyström matrix of `N_s` acting on nodal values of `r`.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator<T> {
    pub s: Complex<T>,
    pub grid: Arc<ChebGrid<T>>,
    pub matrix: Mat<T>,
    /// `|| D^{1/2} N D^{-1/2} ||_F` with `D = diag(omega)`.
    pub hs_norm: T,
    pub kappa: Complex<T>,
    pub table: Arc<KernelTable<T>>,
    omega: Vec<T>,
    tinv: Vec<T>,
}

pub fn build_n<T: Real>(s: Complex<T>, disc: &Discretization<T>, params: &FlowParams<T>) -> Result<DiscretizedOperator<T>> {
    build_n_with(s, disc, params, KernelHook::Normal)
}

pub fn build_n_with<T: Real>(
    s: Complex<T>,
    disc: &Discretization<T>,
    params: &FlowParams<T>,
    hook: KernelHook<T>,
) -> Result<DiscretizedOperator<T>> {
    if !params.in_strip(s) {
        return Err(Error::Config(format!(
            "s = {s} lies outside the strip [{}, {}]",
            params.sigma1, params.sigma2
        )));
    }
    let mut ctx = KernelContext::new(s, params)?;
    match hook {
        KernelHook::Normal => {}
        KernelHook::Zero => ctx.scale = czero(),
        KernelHook::Scale(k) => ctx.scale = k,
    }
    let table = Arc::new(KernelTable::new(ctx)?);
    let kappa = reduction_constant(params);
    let n = disc.n();
    let nodes = &disc.grid.nodes;
    let gc = T::PI() / T::from_usize_lossy(n);
    let q_rows: Vec<Vec<Complex<T>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let lw = &disc.log_w[i * n..(i + 1) * n];
            (0..n)
                .map(|j| {
                    let (a, b) = table.eval(nodes[i] - nodes[j]);
                    a * lw[j] + b * gc
                })
                .collect()
        })
        .collect();
    let tinv = &disc.tinv;
    let rows: Vec<Vec<Complex<T>>> = q_rows
        .par_iter()
        .map(|qr| {
            let mut out = vec![czero::<T>(); n];
            for (k, q) in qr.iter().enumerate() {
                let tr = &tinv[k * n..(k + 1) * n];
                for (o, t) in out.iter_mut().zip(tr) {
                    *o += *q * *t;
                }
            }
            out.iter().map(|v| *v * kappa).collect()
        })
        .collect();
    let matrix = Mat::from_fn(n, n, |i, j| rows[i][j]);
    if !matrix.is_finite() {
        return Err(Error::Convergence(format!("non-finite Nyström entries at s = {s}")));
    }
    let omega = disc.omega.clone();
    let hs_norm = symmetrized(&matrix, &omega).frobenius();
    Ok(DiscretizedOperator { s, grid: disc.grid.clone(), matrix, hs_norm, kappa, table, omega, tinv: disc.tinv.clone() })
}

fn symmetrized<T: Real>(m: &Mat<T>, omega: &[T]) -> Mat<T> {
    Mat::from_fn(m.rows, m.cols, |i, j| m[(i, j)] * (omega[i] / omega[j]).sqrt())
}

impl<T: Real> DiscretizedOperator<T> {
    /// `D^{1/2} N D^{-1/2}`, the matrix whose Frobenius norm is the HS norm.
    pub fn symmetric_form(&self) -> Mat<T> {
        symmetrized(&self.matrix, &self.omega)
    }

    /// Applies `N` to nodal values.
    pub fn apply(&self, r: &[Complex<T>]) -> Vec<Complex<T>> {
        self.matrix.matvec(r)
    }

    /// `|D| < CHAR_REL e^{hs^2/2}`, the a priori bound on `|D|`.
    pub fn characteristic_threshold(&self) -> T {
        T::lit(CHAR_REL) * (self.hs_norm * self.hs_norm * T::lit(0.5)).exp()
    }
}

/// Modified determinant with its log-modulus, kept separately against overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Det2<T> {
    pub value: Complex<T>,
    pub log_abs: T,
}

/// `det(I + M) exp(-tr M)`.
pub fn det2<T: Real>(m: &Mat<T>) -> Result<Det2<T>> {
    let n = m.rows;
    let ipm = Mat::identity(n).add(m);
    let lu = Lu::new(&ipm)?;
    let tr = m.trace();
    if lu.is_singular() {
        return Ok(Det2 { value: czero(), log_abs: T::neg_infinity() });
    }
    let (lm, ph) = lu.log_det();
    let log_abs = lm - tr.re;
    let ph = ph * Complex::new(T::zero(), -tr.im).exp();
    let lim = T::max_value().ln() - T::one();
    if log_abs > lim {
        return Err(Error::Overflow(format!("|det2| = e^{log_abs} exceeds the floating-point range")));
    }
    Ok(Det2 { value: ph * log_abs.exp(), log_abs })
}

/// Coefficients `delta_0 .. delta_m` of `det2(I + mu M)` in powers of `mu`;
/// `1 + sum delta_m` approximates `det2(I + M)`.
pub fn delta_series<T: Real>(m: &Mat<T>, m_max: usize) -> Vec<Complex<T>> {
    // m delta_m = sum_{k=1}^m (-1)^{k+1} c_k delta_{m-k},  c_1 = 0,  c_k = tr M^k
    let mut traces = vec![czero::<T>(); m_max + 1];
    let mut pw = m.clone();
    for k in 2..=m_max {
        pw = pw.matmul(m);
        traces[k] = pw.trace();
    }
    let mut d = vec![czero::<T>(); m_max + 1];
    d[0] = cr(T::one());
    for mm in 1..=m_max {
        let mut acc = czero::<T>();
        for k in 2..=mm {
            let sign = if k % 2 == 1 { T::one() } else { -T::one() };
            acc += traces[k] * d[mm - k] * sign;
        }
        d[mm] = acc / T::from_usize_lossy(mm);
    }
    d
}

/// Trace-removed determinant of `I + N_s`.
pub fn determinant<T: Real>(op: &DiscretizedOperator<T>) -> Result<Complex<T>> {
    Ok(det2(&op.matrix)?.value)
}

/// Resolvent `H = N (I + N)^{-1}` with the first-minor bound diagnostics.
#[derive(Debug, Clone)]
pub struct Resolvent<T> {
    pub h: Mat<T>,
    pub det: Complex<T>,
    /// Max over entries of `|D H~_{ij}| / (e^{hs^2/2} (|N~_{ij}| + sqrt(e) alpha_i beta_j))`.
    pub minor_bound_ratio: T,
    /// `|| H~ ||_F`, monitored only.
    pub h_norm: T,
}

pub fn resolvent<T: Real>(op: &DiscretizedOperator<T>) -> Result<Resolvent<T>> {
    let d = det2(&op.matrix)?;
    let thr = op.characteristic_threshold();
    if !(d.value.norm() > thr) {
        return Err(char_error(op.s, d.value.norm(), thr));
    }
    let n = op.matrix.rows;
    let lu = Lu::new(&Mat::identity(n).add(&op.matrix))?;
    // H = N (I+N)^{-1} = (I+N)^{-1} N since the two commute
    let h = lu.solve_mat(&op.matrix)?;
    let ns = op.symmetric_form();
    let hs = symmetrized(&h, &op.omega);
    let alpha: Vec<T> = (0..n).map(|i| ns.row(i).iter().fold(T::zero(), |a, v| a + v.norm_sqr()).sqrt()).collect();
    let beta: Vec<T> = (0..n)
        .map(|j| (0..n).fold(T::zero(), |a, i| a + ns[(i, j)].norm_sqr()).sqrt())
        .collect();
    let pref = (op.hs_norm * op.hs_norm * T::lit(0.5)).exp();
    let se = T::one().exp().sqrt();
    let mut ratio = T::zero();
    for i in 0..n {
        for j in 0..n {
            let bound = pref * (ns[(i, j)].norm() + se * alpha[i] * beta[j]);
            let minor = (d.value * hs[(i, j)]).norm();
            if bound > T::zero() {
                ratio = ratio.max(minor / bound);
            }
        }
    }
    Ok(Resolvent { h_norm: hs.frobenius(), h, det: d.value, minor_bound_ratio: ratio })
}

fn char_error<T: Real>(s: Complex<T>, det_abs: T, threshold: T) -> Error {
    Error::CharacteristicValue {
        re: s.re.to_f64_lossy(),
        im: s.im.to_f64_lossy(),
        det_abs: det_abs.to_f64_lossy(),
        threshold: threshold.to_f64_lossy(),
    }
}

/// Solved density at one Laplace parameter.
#[derive(Debug, Clone)]
pub struct PressureDensity<T> {
    pub s: Complex<T>,
    pub r: ChordFunction<T>,
    /// `T^{-1}[r]`, stored as its bounded cofactor.
    pub p: ChordFunction<T>,
    /// `int |p|^q` for `q = DEFAULT_LQ`.
    pub lp_norm: T,
    /// Relative residual of `R_s[p]` against the right-hand side.
    pub residual: T,
    pub det: Complex<T>,
}

/// `kappa w_hat(x) e^{-s c x}` at the nodes.
pub fn rhs<T: Real>(s: Complex<T>, w_hat: &ChordFunction<T>, params: &FlowParams<T>) -> Result<Vec<Complex<T>>> {
    if w_hat.endpoint_class != EndpointClass::Bounded {
        return Err(Error::EndpointClass("downwash must be bounded on the chord".into()));
    }
    let kappa = reduction_constant(params);
    Ok(w_hat
        .values
        .iter()
        .zip(&w_hat.grid.nodes)
        .map(|(w, x)| *w * kappa * (-s * (params.c * *x)).exp())
        .collect())
}

pub fn solve_p<T: Real>(
    s: Complex<T>,
    w_hat: &ChordFunction<T>,
    params: &FlowParams<T>,
    disc: &Discretization<T>,
) -> Result<PressureDensity<T>> {
    let op = build_n(s, disc, params)?;
    solve_with(&op, w_hat, params)
}

/// Direct LU route against a built operator, followed by the verification hook.
pub fn solve_with<T: Real>(op: &DiscretizedOperator<T>, w_hat: &ChordFunction<T>, params: &FlowParams<T>) -> Result<PressureDensity<T>> {
    if w_hat.grid.n != op.grid.n {
        return Err(Error::GridMismatch { expected: op.grid.n, found: w_hat.grid.n });
    }
    let d = det2(&op.matrix)?;
    let thr = op.characteristic_threshold();
    if !(d.value.norm() > thr) {
        return Err(char_error(op.s, d.value.norm(), thr));
    }
    let b = rhs(op.s, w_hat, params)?;
    let n = op.matrix.rows;
    let lu = Lu::new(&Mat::identity(n).add(&op.matrix))?;
    let r = lu.solve(&b)?;
    finish(op, r, &b, d.value)
}

/// Resolvent route `r = (I - H) rhs`.
pub fn solve_via_resolvent<T: Real>(
    op: &DiscretizedOperator<T>,
    res: &Resolvent<T>,
    w_hat: &ChordFunction<T>,
    params: &FlowParams<T>,
) -> Result<PressureDensity<T>> {
    let b = rhs(op.s, w_hat, params)?;
    let hb = res.h.matvec(&b);
    let r: Vec<_> = b.iter().zip(&hb).map(|(x, y)| *x - *y).collect();
    finish(op, r, &b, res.det)
}

fn finish<T: Real>(op: &DiscretizedOperator<T>, r: Vec<Complex<T>>, b: &[Complex<T>], det: Complex<T>) -> Result<PressureDensity<T>> {
    let n = op.grid.n;
    let q: Vec<Complex<T>> = (0..n)
        .map(|i| op.tinv[i * n..(i + 1) * n].iter().zip(&r).fold(czero(), |a, (t, v)| a + *v * *t))
        .collect();
    let r_fn = ChordFunction::new(op.grid.clone(), r, EndpointClass::Bounded)?;
    let p = ChordFunction::new(op.grid.clone(), q, EndpointClass::InverseSqrtSingular)?;
    let rs = apply_r_operator(op, &p)?;
    let bmax = b.iter().fold(T::zero(), |m, v| m.max(v.norm()));
    let err = rs.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm()));
    let residual = if bmax > T::zero() { err / bmax } else { err };
    if !(residual <= T::lit(VERIFY_TOL)) {
        return Err(Error::Convergence(format!(
            "R_s[p] reproduces the right-hand side only to {residual:e} at s = {} (tolerance {VERIFY_TOL:e})",
            op.s
        )));
    }
    let lp_norm = if p.max_abs() == T::zero() { T::zero() } else { p.lq_integral(T::lit(DEFAULT_LQ))? };
    Ok(PressureDensity { s: op.s, r: r_fn, p, lp_norm, residual, det })
}

/// `R_s[p] = T[p] + kappa K[p]` at the nodes, with `K[p]` evaluated by
/// panel quadrature in `theta` (`xi = cos theta`) independent of the Nyström rule.
pub fn apply_r_operator<T: Real>(op: &DiscretizedOperator<T>, p: &ChordFunction<T>) -> Result<Vec<Complex<T>>> {
    let tp = finite_hilbert(p)?;
    let qc = p.coeffs()?;
    let kp: Vec<Complex<T>> = op
        .grid
        .nodes
        .par_iter()
        .map(|&x| apply_k_theta(&op.table, &qc, x))
        .collect();
    Ok(tp.values.iter().zip(&kp).map(|(t, k)| *t + *k * op.kappa).collect())
}

/// `int_0^pi K(x, cos th) q(cos th) d th` with `ln|x - cos th| = ln|th - th_x| + L(th)`.
pub fn apply_k_theta<T: Real>(table: &KernelTable<T>, q_coeffs: &[Complex<T>], x: T) -> Complex<T> {
    let tx = x.acos();
    let gl = quad::gl32_unit();
    let lg = quad::log32();
    let half = T::lit(0.5);
    // ln|x - cos th| - ln|th - th_x| = ln|2 sin((th+th_x)/2) sinc-like((th-th_x)/2)|
    let smooth_log = |th: T| {
        let dlt = (th - tx) * half;
        let ratio = if dlt.abs() < T::lit(1e-8) { half } else { dlt.sin() / (T::lit(2.0) * dlt) };
        (T::lit(2.0) * ((th + tx) * half).sin() * ratio).abs().ln()
    };
    let parts = |th: T| {
        let xi = th.cos();
        let (a, b) = table.eval(x - xi);
        let q = clenshaw(q_coeffs, xi);
        (a * q, b * q)
    };
    let mut total = czero::<T>();
    let panels = 6usize;
    for &(lo, hi) in &[(T::zero(), tx), (tx, T::PI())] {
        let len = hi - lo;
        if len <= T::zero() {
            continue;
        }
        let h = len / T::from_usize_lossy(panels);
        for k in 0..panels {
            let a = lo + h * T::from_usize_lossy(k);
            let adjacent = (lo == tx && k == 0) || (hi == tx && k == panels - 1);
            if !adjacent {
                for (t, w) in gl.nodes.iter().zip(&gl.weights) {
                    let th = a + h * T::lit(*t);
                    let (aq, bq) = parts(th);
                    total += (aq * (x - th.cos()).abs().ln() + bq) * (h * T::lit(*w));
                }
                continue;
            }
            // distance u from th_x: th = th_x + dir * u, u in [0, h]
            let dir = if lo == tx { T::one() } else { -T::one() };
            let mut smooth = czero::<T>();
            let mut aq_plain = czero::<T>();
            for (t, w) in gl.nodes.iter().zip(&gl.weights) {
                let th = tx + dir * h * T::lit(*t);
                let (aq, bq) = parts(th);
                smooth += (aq * smooth_log(th) + bq) * T::lit(*w);
                aq_plain += aq * T::lit(*w);
            }
            let mut aq_log = czero::<T>();
            for (t, w) in lg.nodes.iter().zip(&lg.weights) {
                let th = tx + dir * h * T::lit(*t);
                aq_log += parts(th).0 * T::lit(*w);
            }
            // int_0^h ln u g(u) du = h ln h int_0^1 g(h t) dt - h int_0^1 (-ln t) g(h t) dt
            total += smooth * h + aq_plain * (h * h.ln()) - aq_log * h;
        }
    }
    total
}

/// Grid of a determinant scan; `n_sigma = 1` or `sigma_lo = sigma_hi` gives one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanStrip<T> {
    pub sigma_lo: T,
    pub sigma_hi: T,
    pub nu_max: T,
    pub n_sigma: usize,
    pub n_nu: usize,
}

impl<T: Real> ScanStrip<T> {
    pub fn points(&self) -> Vec<Complex<T>> {
        let ns = if self.sigma_lo == self.sigma_hi { 1 } else { self.n_sigma.max(1) };
        let sig = |i: usize| {
            if ns == 1 {
                self.sigma_lo
            } else {
                self.sigma_lo + (self.sigma_hi - self.sigma_lo) * T::from_usize_lossy(i) / T::from_usize_lossy(ns - 1)
            }
        };
        let nn = self.n_nu.max(1);
        let nu = |j: usize| {
            if nn == 1 {
                T::zero()
            } else {
                -self.nu_max + self.nu_max * T::lit(2.0) * T::from_usize_lossy(j) / T::from_usize_lossy(nn - 1)
            }
        };
        let mut out = Vec::with_capacity(ns * nn);
        for i in 0..ns {
            for j in 0..nn {
                out.push(c(sig(i), nu(j)));
            }
        }
        out
    }

    pub fn n_sigma_eff(&self) -> usize {
        if self.sigma_lo == self.sigma_hi {
            1
        } else {
            self.n_sigma.max(1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroStatus {
    Refined,
    Suspect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroReport<T> {
    pub s: Complex<T>,
    pub det_abs: T,
    /// `|D(s)| / max sampled |D|`.
    pub residual: T,
    pub status: ZeroStatus,
}

#[derive(Debug, Clone)]
pub struct DeterminantScan<T> {
    pub strip: ScanStrip<T>,
    pub samples: Vec<(Complex<T>, Complex<T>)>,
    pub zeros: Vec<ZeroReport<T>>,
    pub suspects: Vec<ZeroReport<T>>,
    pub max_abs: T,
}

impl<T: Real> DeterminantScan<T> {
    /// True at samples within `CHAR_REL` of the scan maximum.
    pub fn zero_flags(&self) -> Vec<bool> {
        let thr = T::lit(CHAR_REL) * self.max_abs;
        self.samples.iter().map(|(_, d)| d.norm() < thr).collect()
    }
}

pub fn scan_determinant<T: Real>(strip: ScanStrip<T>, params: &FlowParams<T>, disc: &Discretization<T>) -> Result<DeterminantScan<T>> {
    if strip.sigma_lo > strip.sigma_hi || strip.sigma_lo < params.sigma1 || strip.sigma_hi > params.sigma2 {
        return Err(Error::Config(format!(
            "scan strip [{}, {}] must lie inside [{}, {}]",
            strip.sigma_lo, strip.sigma_hi, params.sigma1, params.sigma2
        )));
    }
    if !(strip.nu_max >= T::zero()) {
        return Err(Error::Config("scan nu_max must be non-negative".into()));
    }
    let pts = strip.points();
    let eval = |s: Complex<T>| -> Result<Complex<T>> { determinant(&build_n(s, disc, params)?) };
    let dets: Vec<Complex<T>> = pts.par_iter().map(|&s| eval(s)).collect::<Result<_>>()?;
    let samples: Vec<_> = pts.iter().copied().zip(dets.iter().copied()).collect();
    let max_abs = dets.iter().fold(T::zero(), |m, d| m.max(d.norm()));
    let ns = strip.n_sigma_eff();
    let nn = strip.n_nu.max(1);
    let idx = |i: usize, j: usize| i * nn + j;
    let mut seeds: Vec<Complex<T>> = Vec::new();
    // phase winding around each cell
    if ns > 1 && nn > 1 {
        for i in 0..ns - 1 {
            for j in 0..nn - 1 {
                let ring = [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)];
                let mut wind = T::zero();
                for k in 0..4 {
                    let a = dets[ring[k]];
                    let b = dets[ring[(k + 1) % 4]];
                    wind += (b / a).arg();
                }
                if (wind / (T::lit(2.0) * T::PI())).abs() > T::lit(0.5) {
                    let sc = (pts[ring[0]] + pts[ring[2]]) * T::lit(0.5);
                    seeds.push(sc);
                }
            }
        }
    }
    // deep local minima along every direction sampled
    for i in 0..ns {
        for j in 0..nn {
            let v = dets[idx(i, j)].norm();
            if v > T::lit(1e-3) * max_abs {
                continue;
            }
            let mut is_min = true;
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a >= 0 && b >= 0 && (a as usize) < ns && (b as usize) < nn && dets[idx(a as usize, b as usize)].norm() < v {
                    is_min = false;
                }
            }
            if is_min {
                seeds.push(pts[idx(i, j)]);
            }
        }
    }
    let mut zeros = Vec::new();
    let mut suspects = Vec::new();
    for s0 in seeds {
        let rep = refine_zero(s0, &eval, max_abs, params);
        let list = if rep.status == ZeroStatus::Refined { &mut zeros } else { &mut suspects };
        if !list.iter().any(|z: &ZeroReport<T>| (z.s - rep.s).norm() < T::lit(1e-6)) {
            list.push(rep);
        }
    }
    Ok(DeterminantScan { strip, samples, zeros, suspects, max_abs })
}

fn refine_zero<T: Real>(
    s0: Complex<T>,
    eval: &impl Fn(Complex<T>) -> Result<Complex<T>>,
    max_abs: T,
    params: &FlowParams<T>,
) -> ZeroReport<T> {
    let tol = T::lit(1e-8) * max_abs;
    let step = T::lit(1e-3);
    let mut a = s0;
    let mut b = s0 + c(step, step);
    let mut fa = eval(a);
    let mut fb = eval(b);
    for _ in 0..60 {
        let (Ok(da), Ok(db)) = (fa.clone(), fb.clone()) else { break };
        if db.norm() < tol {
            return ZeroReport { s: b, det_abs: db.norm(), residual: db.norm() / max_abs, status: ZeroStatus::Refined };
        }
        let den = db - da;
        if den.norm() == T::zero() {
            break;
        }
        let next = b - db * (b - a) / den;
        if !params.in_strip(next) || !(next.im.is_finite()) {
            break;
        }
        a = b;
        fa = fb;
        b = next;
        fb = eval(b);
    }
    let d = fb.map(|v| v.norm()).unwrap_or(T::infinity());
    ZeroReport { s: b, det_abs: d, residual: d / max_abs, status: ZeroStatus::Suspect }
}

/// Kernel scale `k` at which `I + k N_s` is singular: `k = -1/mu` for the
/// dominant eigenvalue `mu` of `N_s` (power iteration, then secant on `det`).
pub fn characteristic_kernel_scale<T: Real>(op: &DiscretizedOperator<T>) -> Result<Complex<T>> {
    let n = op.matrix.rows;
    let mut v: Vec<Complex<T>> = (0..n).map(|i| c(T::one(), T::from_usize_lossy(i) / T::from_usize_lossy(n))).collect();
    let mut mu = czero::<T>();
    for _ in 0..500 {
        let w = op.matrix.matvec(&v);
        let num = w.iter().zip(&v).fold(czero::<T>(), |a, (x, y)| a + *x * y.conj());
        let den = v.iter().fold(T::zero(), |a, y| a + y.norm_sqr());
        let next = num / den;
        let nrm = w.iter().fold(T::zero(), |a, x| a + x.norm_sqr()).sqrt();
        if nrm == T::zero() {
            return Err(Error::Domain("operator has no nonzero eigenvalue".into()));
        }
        v = w.iter().map(|x| *x / nrm).collect();
        let done = (next - mu).norm() <= T::lit(1e-14) * next.norm();
        mu = next;
        if done {
            break;
        }
    }
    let f = |k: Complex<T>| -> Result<Complex<T>> {
        let lu = Lu::new(&Mat::identity(n).add(&op.matrix.scale(k)))?;
        Ok(lu.det())
    };
    let mut a = -mu.inv();
    let mut b = a * T::lit(1.0 + 1e-6);
    let mut fa = f(a)?;
    for _ in 0..50 {
        let fb = f(b)?;
        if fb.norm() == T::zero() || (fb - fa).norm() == T::zero() {
            break;
        }
        let next = b - fb * (b - a) / (fb - fa);
        a = b;
        fa = fb;
        b = next;
        if (b - a).norm() <= T::epsilon() * b.norm() {
            break;
        }
    }
    Ok(b)
}
