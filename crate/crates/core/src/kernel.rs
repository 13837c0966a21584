//! The generalized Possio kernel on the chord and the doublet functions it is
//! built from.
//!
//! On `y = 0` the kernel depends on `d = x - xi` only:
//!
//! ```text
//! F(d) = (1-M^2)/U dH0/dx + lambda (1-M^2)/U H0(z)
//!        + Q/U e^{lambda d} [ I_inf + int_0^d e^{-lambda v} H0(kappa0 |v|) dv ]
//! z = kappa0 |d|,  kappa0 = i s / (a (1-M^2)),  Q = lambda^2 (1-M^2) - s^2 / (a^2 (1-M^2)),
//! I_inf = int_0^inf e^{lambda t} H0(kappa0 t) dt.
//! ```
//!
//! It splits as `F = C / d + A(d) ln|d| + B(d)` with `A`, `B` entire in `d`.
//! `A` is known in closed form through `J0`, `J1`; `B` is assembled from the
//! regular parts of the Hankel series so that nothing near `d = 0` is computed
//! by subtracting large numbers.

use num_complex::Complex;

use crate::cheb::clenshaw;
use crate::error::{Error, Result};
use crate::flowconfig::{lambda_of, FlowParams};
use crate::quad;
use crate::real::{c, ci, cr, czero, Real};
use crate::specfun::{bessel_j01, hankel1_01, SERIES_RADIUS};

/// Closest approach to the diagonal allowed in direct kernel evaluation.
pub const DIAGONAL_GUARD: f64 = 1e-7;

/// Half-width of the interval of `d = x - xi` covered by a [`KernelTable`].
pub const TABLE_HALF_WIDTH: f64 = 2.0;

/// Cauchy coefficient `C` of the kernel: `(x - xi) F -> C` as `xi -> x`.
/// `C = 2 i (1 - M^2) / (pi U)`, independent of `x`, `xi` and `s`.
pub fn cauchy_coefficient<T: Real>(params: &FlowParams<T>) -> Complex<T> {
    c(T::zero(), T::lit(2.0) * params.beta2() / (T::PI() * params.u))
}

/// The variant `-2 i (1 - M^2)^{3/2} / (pi U)` of the Cauchy coefficient.
/// Not used by the solver; the acceptance suite compares against it.
pub fn cauchy_coefficient_variant<T: Real>(params: &FlowParams<T>) -> Complex<T> {
    let b2 = params.beta2();
    c(T::zero(), -T::lit(2.0) * b2 * b2.sqrt() / (T::PI() * params.u))
}

/// `kappa = -1 / (pi C) = i U / (2 (1 - M^2))`; the reduced equation reads
/// `T[p] + kappa K[p] = kappa w_hat e^{-s c x}`.
pub fn reduction_constant<T: Real>(params: &FlowParams<T>) -> Complex<T> {
    c(T::zero(), params.u / (T::lit(2.0) * params.beta2()))
}

/// Controls for the semi-infinite `u`-integrals.
#[derive(Debug, Clone, Copy)]
pub struct TailOptions<T> {
    /// Stop once the integrand envelope times its decay length falls below
    /// this fraction of the running integral.
    pub envelope_tol: T,
    /// Multiplies the truncation length found by the envelope rule.
    pub length_factor: T,
    pub rel_tol: T,
    pub max_panels: usize,
}

impl<T: Real> Default for TailOptions<T> {
    fn default() -> Self {
        let floor = T::epsilon() * T::lit(64.0);
        TailOptions {
            envelope_tol: T::lit(1e-13).max(floor),
            length_factor: T::one(),
            rel_tol: T::lit(1e-13).max(floor),
            max_panels: 200_000,
        }
    }
}

/// Per-`s` constants of the kernel.
#[derive(Debug, Clone, Copy)]
pub struct KernelContext<T> {
    pub params: FlowParams<T>,
    pub s: Complex<T>,
    pub lambda: Complex<T>,
    pub kappa0: Complex<T>,
    /// `lambda^2 (1-M^2) - s^2 / (a^2 (1-M^2))`, equal to `s^2 / U^2`.
    pub q: Complex<T>,
    pub i_inf: Complex<T>,
    pub cauchy: Complex<T>,
    /// Test hook: every kernel value is multiplied by this factor.
    pub scale: Complex<T>,
}

impl<T: Real> KernelContext<T> {
    pub fn new(s: Complex<T>, params: &FlowParams<T>) -> Result<Self> {
        Self::with_tail(s, params, &TailOptions::default())
    }

    pub fn with_tail(s: Complex<T>, params: &FlowParams<T>, tail: &TailOptions<T>) -> Result<Self> {
        if !(s.re > T::zero()) {
            return Err(Error::Convergence(format!(
                "kernel tail integrals need Re s > 0, got s = {s}"
            )));
        }
        let lambda = lambda_of(s, params)?;
        let b2 = params.beta2();
        let kappa0 = params.kappa0(s);
        let q = lambda * lambda * b2 - s * s / (params.a * params.a * b2);
        let i_inf = semi_infinite(
            |t: T| (lambda * t).exp() * hankel_or_zero(kappa0 * t),
            lambda.re - kappa0.im,
            lambda.im.abs() + kappa0.norm(),
            |t: T| (lambda.re * t).exp() * envelope_h(kappa0 * t),
            T::zero(),
            true,
            tail,
        )?;
        Ok(KernelContext {
            params: *params,
            s,
            lambda,
            kappa0,
            q,
            i_inf,
            cauchy: cauchy_coefficient(params),
            scale: cr(T::one()),
        })
    }

    /// Direct evaluation of the bracket at `d = x - xi`.
    pub fn full(&self, d: T) -> Result<Complex<T>> {
        if d.abs() < T::lit(DIAGONAL_GUARD) {
            return Err(Error::Domain(format!(
                "kernel evaluated on the diagonal (|x - xi| = {} < {DIAGONAL_GUARD:e})",
                d.abs()
            )));
        }
        let p = &self.params;
        let b2 = p.beta2();
        let u = p.u;
        let sg = d.signum();
        let (h0, h1) = hankel1_01(self.kappa0 * d.abs())?;
        // dH0/dx = -H1(z) kappa0 sgn(d)
        let t1 = -h1 * self.kappa0 * (sg * b2 / u);
        let t2 = h0 * self.lambda * (b2 / u);
        let lam = self.lambda;
        let k0 = self.kappa0;
        let part = quad::tanh_sinh(
            |t: T, _| (-lam * (sg * t)).exp() * hankel_or_zero(k0 * t),
            T::zero(),
            d.abs(),
            T::lit(1e-14),
        ) * sg;
        let t3 = self.q / u * (lam * d).exp() * (self.i_inf + part);
        Ok((t1 + t2 + t3) * self.scale)
    }

    /// `(A(d), B(d))` of the split `F = C/d + A ln|d| + B`; valid at every `d`.
    pub fn split(&self, d: T) -> (Complex<T>, Complex<T>) {
        let p = &self.params;
        let b2 = p.beta2();
        let u = p.u;
        let two_i_pi = c(T::zero(), T::lit(2.0) / T::PI());
        let kd = self.kappa0 * d;
        let (j0, j1) = bessel_j01(kd);
        let (r0, r1) = self.regular_hankel(d);
        let a_val = two_i_pi * (-j1 * self.kappa0 * (b2 / u) + j0 * self.lambda * (b2 / u));
        let b_val = -r1 * self.kappa0 * (b2 / u) + r0 * self.lambda * (b2 / u);
        let (g, e, m) = self.integral_parts(d);
        let ed = (self.lambda * d).exp() * self.q / u;
        let a_val = a_val + ed * g;
        let b_val = b_val + ed * (self.i_inf + e + m);
        (a_val * self.scale, b_val * self.scale)
    }

    /// Regular part of the kernel `A ln|d| + B` (finite at `d = 0` only when `A(0) = 0`).
    pub fn regular(&self, d: T) -> Complex<T> {
        let (a, b) = self.split(d);
        a * d.abs().ln() + b
    }

    /// `h0_reg(d) = H0(kappa0|d|) - (2i/pi) ln|d| J0(kappa0 d)` and
    /// `h1_reg(d) = sgn(d) H1(kappa0|d|) + 2i/(pi kappa0 d) - (2i/pi) ln|d| J1(kappa0 d)`.
    fn regular_hankel(&self, d: T) -> (Complex<T>, Complex<T>) {
        let two_i_pi = c(T::zero(), T::lit(2.0) / T::PI());
        let kd = self.kappa0 * d;
        let z = kd.norm();
        if z <= T::lit(SERIES_RADIUS) {
            let g = T::euler_gamma();
            let lk = (self.kappa0 * T::lit(0.5)).ln();
            let qz = -(kd * kd) * T::lit(0.25);
            let eps = T::epsilon() * T::lit(0.25);
            let mut t0 = cr::<T>(T::one());
            let mut t1 = cr::<T>(T::one());
            let mut j0 = t0;
            let mut s0 = czero::<T>();
            let mut j1s = t1;
            let mut hk = T::zero();
            // psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma
            let mut pp = t1 * (T::one() - T::lit(2.0) * g);
            for k in 1..200 {
                let kf = T::from_usize_lossy(k);
                t0 = t0 * qz / (kf * kf);
                t1 = t1 * qz / (kf * (kf + T::one()));
                hk += T::one() / kf;
                j0 += t0;
                s0 += t0 * hk;
                j1s += t1;
                pp += t1 * (T::lit(2.0) * hk + T::one() / (kf + T::one()) - T::lit(2.0) * g);
                if t0.norm() * (T::one() + hk) <= eps && t1.norm() * (T::lit(3.0) + hk) <= eps {
                    break;
                }
            }
            let j1 = j1s * kd * T::lit(0.5);
            let h0r = j0 * (cr::<T>(T::one()) + two_i_pi * (lk + cr(g))) - two_i_pi * s0;
            let h1r = j1 * (cr::<T>(T::one()) + two_i_pi * lk) - ci::<T>() * kd * pp / (T::lit(2.0) * T::PI());
            (h0r, h1r)
        } else {
            let (h0, h1) = hankel1_01(self.kappa0 * d.abs()).expect("nonzero argument");
            let (j0, j1) = bessel_j01(kd);
            let l = d.abs().ln();
            let h0r = h0 - two_i_pi * j0 * l;
            let h1r = h1 * d.signum() + two_i_pi / kd - two_i_pi * j1 * l;
            (h0r, h1r)
        }
    }

    /// `(G(d), E(d), M(d))` with
    /// `G = (2i/pi) int_0^d e^{-lambda v} J0(kappa0 v) dv`,
    /// `E = int_0^d e^{-lambda v} h0_reg(v) dv`,
    /// `M = int_0^d ln|v| g(v) dv - ln|d| G(d)` for `g = (2i/pi) e^{-lambda v} J0(kappa0 v)`.
    fn integral_parts(&self, d: T) -> (Complex<T>, Complex<T>, Complex<T>) {
        if d == T::zero() {
            return (czero(), czero(), czero());
        }
        let two_i_pi = c(T::zero(), T::lit(2.0) / T::PI());
        let gl = quad::gl32_unit();
        let lg = quad::log32();
        let scale = (self.kappa0 * d).norm().max((self.lambda * d).norm());
        let panels = (scale / T::lit(2.0)).ceil().to_usize().unwrap_or(1).clamp(1, 10_000);
        let hp = T::one() / T::from_usize_lossy(panels);
        let lam = self.lambda;
        let kap = self.kappa0;
        let gfun = |u: T| (-lam * (d * u)).exp() * bessel_j01(kap * (d * u)).0;
        let mut g = czero::<T>();
        let mut e = czero::<T>();
        let mut m = czero::<T>();
        for pi in 0..panels {
            let ua = hp * T::from_usize_lossy(pi);
            for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                let u = ua + hp * T::lit(*x);
                let w = hp * T::lit(*w);
                let gu = gfun(u);
                g += gu * w;
                e += (-lam * (d * u)).exp() * self.regular_hankel(d * u).0 * w;
                if pi > 0 {
                    m += gu * (u.ln() * w);
                }
            }
        }
        // first panel: int_0^h ln u f(u) du = h ln h int_0^1 f(h t) dt - h int_0^1 (-ln t) f(h t) dt
        let mut plain = czero::<T>();
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            plain += gfun(hp * T::lit(*x)) * T::lit(*w);
        }
        let mut logw = czero::<T>();
        for (x, w) in lg.nodes.iter().zip(&lg.weights) {
            logw += gfun(hp * T::lit(*x)) * T::lit(*w);
        }
        m += plain * (hp * hp.ln()) - logw * hp;
        (two_i_pi * g * d, e * d, two_i_pi * m * d)
    }
}

fn hankel_or_zero<T: Real>(z: Complex<T>) -> Complex<T> {
    match hankel1_01(z) {
        Ok((h0, _)) => h0,
        Err(_) => czero(),
    }
}

/// Upper bound of `|H0(z)|` used for truncation: `sqrt(2/(pi|z|)) e^{-Im z}` for
/// large `|z|`, with a logarithmic bound near zero.
fn envelope_h<T: Real>(z: Complex<T>) -> T {
    let r = z.norm();
    let decay = (-z.im).exp();
    if r > T::one() {
        (T::lit(2.0) / (T::PI() * r)).sqrt() * decay * T::lit(1.5)
    } else {
        (T::one() + r.ln().abs()) * decay * T::lit(1.5)
    }
}

/// `int_start^inf f(t) dt` for an integrand with exponential decay rate
/// `-decay` (< 0) and oscillation rate `osc`, truncated by an envelope rule.
fn semi_infinite<T: Real>(
    f: impl Fn(T) -> Complex<T>,
    decay: T,
    osc: T,
    envelope: impl Fn(T) -> T,
    start: T,
    log_singular_start: bool,
    tail: &TailOptions<T>,
) -> Result<Complex<T>> {
    if !(decay < T::zero()) {
        return Err(Error::Convergence(format!(
            "semi-infinite integral does not decay (rate {decay})"
        )));
    }
    let rate = -decay;
    let width = (T::lit(4.0) / osc.max(rate)).max(T::lit(1e-3));
    let mut total = czero::<T>();
    let mut a = start;
    if log_singular_start {
        let b = start + width.min(T::one());
        total += quad::tanh_sinh(|t: T, _| f(t), start, b, T::lit(1e-15));
        a = b;
    }
    let mut panels = 0usize;
    let mut stop_at: Option<T> = None;
    loop {
        let b = a + width;
        let (v, _) = quad::adaptive(
            &f,
            a,
            b,
            total.norm() * tail.rel_tol * T::lit(1e-2),
            tail.rel_tol,
            1000,
        )?;
        total += v;
        panels += 1;
        a = b;
        if let Some(end) = stop_at {
            if a >= end {
                break;
            }
        } else if envelope(a) / rate <= tail.envelope_tol * total.norm() {
            let extra = (a - start) * (tail.length_factor - T::one());
            stop_at = Some(a + extra);
            if extra <= T::zero() {
                break;
            }
        }
        if panels >= tail.max_panels {
            return Err(Error::QuadratureBudget(format!(
                "semi-infinite integral not converged after {panels} panels (t = {a})"
            )));
        }
    }
    Ok(total)
}

/// Value of the kernel at one `(x, xi)` with its split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval<T> {
    pub x: T,
    pub xi: T,
    pub s: Complex<T>,
    pub full: Complex<T>,
    pub singular_coeff: Complex<T>,
    pub regular: Complex<T>,
    /// Hankel argument `i s |x - xi| / (a (1 - M^2))`.
    pub z: Complex<T>,
    pub log_fit: Option<LogFit<T>>,
}

/// Least-squares fit `regular ~ A ln|d| + B` over a window of `|d|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit<T> {
    pub a: Complex<T>,
    pub b: Complex<T>,
    /// Max residual over the window, relative to the max of `|regular|` there.
    pub residual: T,
}

/// `Psi_{xi,0}(x, y) = dH0(zeta)/d eta` at `eta = 0`.
pub fn doublet_psi<T: Real>(x: T, y: T, xi: T, s: Complex<T>, params: &FlowParams<T>) -> Result<Complex<T>> {
    if y == T::zero() {
        if x == xi {
            return Err(Error::Domain("doublet evaluated at its own centre".into()));
        }
        return Ok(czero());
    }
    let r = params.pg_radius(x - xi, y);
    let k = params.wave_k(s);
    let (_, h1) = hankel1_01(k * r)?;
    Ok(h1 * k * (y / r))
}

/// `Phi_{xi,0}(x, y) = (e^{lambda x}/U) int_{-inf}^x e^{-lambda u} Psi_{xi,0}(u, y) du`.
///
/// On `y = 0` the one-sided limit from `y > 0` is returned: zero upstream of
/// the doublet and `-(2 i sqrt(1-M^2)/U) e^{lambda (x - xi)}` downstream.
pub fn doublet_potential<T: Real>(x: T, y: T, xi: T, s: Complex<T>, params: &FlowParams<T>) -> Result<Complex<T>> {
    doublet_potential_with(x, y, xi, s, params, &TailOptions::default())
}

pub fn doublet_potential_with<T: Real>(
    x: T,
    y: T,
    xi: T,
    s: Complex<T>,
    params: &FlowParams<T>,
    tail: &TailOptions<T>,
) -> Result<Complex<T>> {
    if !(s.re > T::zero()) {
        return Err(Error::Convergence(format!("doublet potential needs Re s > 0, got s = {s}")));
    }
    let lambda = lambda_of(s, params)?;
    let u = params.u;
    if y == T::zero() {
        if x < xi {
            return Ok(czero());
        }
        if x == xi {
            return Err(Error::Domain("doublet potential evaluated at its own centre".into()));
        }
        let jump = c(T::zero(), -T::lit(2.0) * params.beta() / u);
        return Ok(jump * (lambda * (x - xi)).exp());
    }
    let k = params.wave_k(s);
    let ya = y.abs();
    let f = |v: T| (lambda * v).exp() * doublet_psi(x - v, y, xi, s, params).unwrap_or_else(|_| czero());
    // (1/U) int_0^inf e^{lambda v} Psi(x - v, y) dv; the peak sits at v = x - xi.
    let vstar = x - xi;
    let near_end = vstar.max(T::zero()) + T::lit(8.0) * ya + T::one();
    let mut pts = vec![T::zero()];
    if vstar > T::zero() {
        for m in [-4.0, -1.0, 0.0, 1.0, 4.0] {
            let p = vstar + T::lit(m) * ya;
            if p > T::zero() && p < near_end {
                pts.push(p);
            }
        }
    }
    pts.push(near_end);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut near = czero::<T>();
    for w in pts.windows(2) {
        let (v, _) = quad::adaptive(&f, w[0], w[1], T::lit(1e-300), tail.rel_tol, 20_000)?;
        near += v;
    }
    let far = semi_infinite(
        f,
        lambda.re - k.im,
        lambda.im.abs() + k.norm(),
        |t: T| {
            let r = params.pg_radius(x - t - xi, y);
            let kr = k * r;
            let h = (T::lit(2.0) / (T::PI() * kr.norm())).sqrt() * (-kr.im).exp() * T::lit(1.5);
            (lambda.re * t).exp() * h * k.norm() * ya / r
        },
        near_end,
        false,
        &TailOptions { envelope_tol: tail.envelope_tol * T::lit(1e-2), ..*tail },
    )?;
    Ok((near + far) / u)
}

/// Full kernel at `(x, xi)` by direct evaluation of the bracket.
pub fn possio_kernel_full<T: Real>(x: T, xi: T, s: Complex<T>, params: &FlowParams<T>) -> Result<Complex<T>> {
    KernelContext::new(s, params)?.full(x - xi)
}

/// Split of the kernel at `(x, xi)` plus a log fit of the regular part over
/// `|x - xi| in [1e-4, 1e-2]` on the downstream side of `x`.
pub fn kernel_split<T: Real>(x: T, xi: T, s: Complex<T>, params: &FlowParams<T>) -> Result<KernelEval<T>> {
    let ctx = KernelContext::new(s, params)?;
    let d = x - xi;
    let full = ctx.full(d)?;
    let sc = ctx.cauchy;
    let fit = log_fit(&ctx, T::lit(1e-4), T::lit(1e-2), 17)?;
    Ok(KernelEval {
        x,
        xi,
        s,
        full,
        singular_coeff: sc,
        regular: full - sc / d,
        z: ctx.kappa0 * d.abs(),
        log_fit: Some(fit),
    })
}

/// Fits `full(d) - C/d` to `A ln|d| + B` over `npts` log-spaced `d` in `[lo, hi]`.
pub fn log_fit<T: Real>(ctx: &KernelContext<T>, lo: T, hi: T, npts: usize) -> Result<LogFit<T>> {
    let mut ls = Vec::with_capacity(npts);
    let mut rs = Vec::with_capacity(npts);
    for i in 0..npts {
        let f = T::from_usize_lossy(i) / T::from_usize_lossy(npts - 1);
        let d = (lo.ln() + (hi.ln() - lo.ln()) * f).exp();
        let reg = ctx.full(d)? - ctx.cauchy / d;
        ls.push(d.ln());
        rs.push(reg);
    }
    // normal equations for [l, 1]
    let nf = T::from_usize_lossy(npts);
    let sl = ls.iter().fold(T::zero(), |a, l| a + *l);
    let sll = ls.iter().fold(T::zero(), |a, l| a + *l * *l);
    let sr = rs.iter().fold(czero::<T>(), |a, r| a + *r);
    let slr = ls.iter().zip(&rs).fold(czero::<T>(), |a, (l, r)| a + *r * *l);
    let det = nf * sll - sl * sl;
    let a = (slr * nf - sr * sl) / det;
    let b = (sr * sll - slr * sl) / det;
    let scale = rs.iter().fold(T::zero(), |m, r| m.max(r.norm()));
    let residual = ls
        .iter()
        .zip(&rs)
        .fold(T::zero(), |m, (l, r)| m.max((*r - (a * *l + b)).norm()))
        / scale.max(T::min_positive_value());
    Ok(LogFit { a, b, residual })
}

/// Chebyshev interpolants of `A(d)` and `B(d)` on `[-2, 2]`, built once per `s`.
#[derive(Debug, Clone)]
pub struct KernelTable<T> {
    pub ctx: KernelContext<T>,
    pub a_coeffs: Vec<Complex<T>>,
    pub b_coeffs: Vec<Complex<T>>,
}

impl<T: Real> KernelTable<T> {
    pub fn new(ctx: KernelContext<T>) -> Result<Self> {
        let tol = T::lit(1e-15).max(T::epsilon() * T::lit(4.0));
        let mut m = 32usize;
        loop {
            let grid = crate::cheb::ChebGrid::<T>::new(m)?;
            let mut av = Vec::with_capacity(m);
            let mut bv = Vec::with_capacity(m);
            for &x in &grid.nodes {
                let (a, b) = ctx.split(x * T::lit(TABLE_HALF_WIDTH));
                av.push(a);
                bv.push(b);
            }
            let ac = grid.values_to_coeffs(&av)?;
            let bc = grid.values_to_coeffs(&bv)?;
            if resolved(&ac, tol) && resolved(&bc, tol) {
                return Ok(KernelTable { ctx, a_coeffs: trim(ac, tol), b_coeffs: trim(bc, tol) });
            }
            if m >= 2048 {
                return Err(Error::Convergence(format!(
                    "kernel split not resolved by {m} Chebyshev points at s = {}",
                    ctx.s
                )));
            }
            m *= 2;
        }
    }

    /// `(A(d), B(d))` for `|d| <= 2`.
    #[inline]
    pub fn eval(&self, d: T) -> (Complex<T>, Complex<T>) {
        let t = d / T::lit(TABLE_HALF_WIDTH);
        (clenshaw(&self.a_coeffs, t), clenshaw(&self.b_coeffs, t))
    }

    pub fn regular(&self, d: T) -> Complex<T> {
        let (a, b) = self.eval(d);
        a * d.abs().ln() + b
    }

    pub fn full(&self, d: T) -> Complex<T> {
        self.ctx.cauchy / d + self.regular(d)
    }

    pub fn degree(&self) -> usize {
        self.a_coeffs.len().max(self.b_coeffs.len())
    }
}

fn resolved<T: Real>(c: &[Complex<T>], tol: T) -> bool {
    let big = c.iter().fold(T::zero(), |m, v| m.max(v.norm()));
    if big == T::zero() {
        return true;
    }
    let k = c.len();
    c[k - 4..].iter().all(|v| v.norm() <= tol * big)
}

fn trim<T: Real>(mut c: Vec<Complex<T>>, tol: T) -> Vec<Complex<T>> {
    let big = c.iter().fold(T::zero(), |m, v| m.max(v.norm()));
    while c.len() > 1 && c.last().map(|v| v.norm() <= tol * T::lit(1e-2) * big).unwrap_or(false) {
        c.pop();
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowconfig::derive_params;

    fn params(m: f64) -> FlowParams<f64> {
        derive_params(340.0, m).unwrap()
    }

    fn close(a: Complex<f64>, b: Complex<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm()
    }

    #[test]
    fn tail_integral_matches_closed_form() {
        // int_0^inf e^{lambda t} H0(kappa0 t) dt = -2 i U sqrt(1-M^2) arccosh(1/M) / (pi s)
        for &(m, s) in &[(0.5, c(1.0, 0.5)), (0.1, c(1.0, 1.0)), (0.8, c(2.0, 4.0)), (0.5, c(0.1, 12.0))] {
            let p = params(m);
            let ctx = KernelContext::new(s, &p).unwrap();
            let acosh = (1.0 / m + (1.0 / (m * m) - 1.0).sqrt()).ln();
            let want = c(0.0, -2.0 * p.u * p.beta() * acosh / std::f64::consts::PI) / s;
            assert!(close(ctx.i_inf, want, 1e-11), "M={m} s={s}: {} vs {want}", ctx.i_inf);
        }
    }

    #[test]
    fn reference_value_at_sample_point() {
        // mpmath/scipy reference of the bracket at M = 0.5, s = 1 + 0.5i, d = 0.6
        let p = params(0.5);
        let f = possio_kernel_full(0.2, -0.4, c(1.0, 0.5), &p).unwrap();
        let want = c(-4.344_953_247_277_71e-5, 4.793_996_241_260_261e-3);
        assert!(close(f, want, 1e-9), "{f}");
        let g = possio_kernel_full(-0.4, 0.2, c(1.0, 0.5), &p).unwrap();
        let want = c(-4.441_715_035_318_781e-5, -4.567_202_105_291_751e-3);
        assert!(close(g, want, 1e-9), "{g}");
    }

    #[test]
    fn split_reproduces_direct_evaluation() {
        for &(m, s) in &[(0.5, c(1.0, 1.0)), (0.8, c(2.0, 4.0)), (0.3, c(0.2, 30.0))] {
            let p = params(m);
            let ctx = KernelContext::new(s, &p).unwrap();
            for &d in &[-1.9f64, -0.7, -1e-3, 2e-6, 0.013, 0.5, 1.99] {
                let (a, b) = ctx.split(d);
                let via = ctx.cauchy / d + a * d.abs().ln() + b;
                let direct = ctx.full(d).unwrap();
                assert!((via - direct).norm() <= 1e-11 * direct.norm().max(1e-6), "M={m} s={s} d={d}");
            }
        }
    }

    #[test]
    fn split_at_large_argument_uses_direct_branch() {
        // a small sound speed pushes kappa0 |d| past the series radius
        let p = derive_params(1.0, 0.5).unwrap();
        let ctx = KernelContext::new(c(1.0, 2.0), &p).unwrap();
        for &d in &[-1.5f64, 0.9, 1.8] {
            let (a, b) = ctx.split(d);
            let via = ctx.cauchy / d + a * d.abs().ln() + b;
            let direct = ctx.full(d).unwrap();
            assert!((via - direct).norm() <= 1e-10 * direct.norm(), "d={d}");
        }
    }

    #[test]
    fn cauchy_coefficient_by_richardson() {
        let p = params(0.5);
        let ctx = KernelContext::new(c(1.0, 1.0), &p).unwrap();
        let g = |h: f64| ctx.full(h).unwrap() * h;
        let (g1, g2, g3) = (g(1e-2), g(5e-3), g(2.5e-3));
        let r1 = g2 * 2.0 - g1;
        let r2 = g3 * 2.0 - g2;
        let r = (r2 * 4.0 - r1) / 3.0;
        assert!(close(r, cauchy_coefficient(&p), 1e-3));
        assert!(close(cauchy_coefficient(&p), c(0.0, 0.002_808_616_642_798_153), 1e-12));
    }

    #[test]
    fn cauchy_coefficient_is_constant() {
        let a = kernel_split(0.3, -0.2, c(1.0, 1.0), &params(0.5)).unwrap();
        let b = kernel_split(-0.9, 0.8, c(2.0, 7.0), &params(0.5)).unwrap();
        assert_eq!(a.singular_coeff, b.singular_coeff);
        assert!(close(a.full, a.singular_coeff / (a.x - a.xi) + a.regular, 1e-14));
    }

    #[test]
    fn log_fit_residual_is_small() {
        let e = kernel_split(0.0, -0.3, c(1.0, 1.0), &params(0.5)).unwrap();
        let fit = e.log_fit.unwrap();
        assert!(fit.residual < 1e-3, "{}", fit.residual);
        let ctx = KernelContext::new(c(1.0, 1.0), &params(0.5)).unwrap();
        let (a0, _) = ctx.split(0.0);
        assert!(close(fit.a, a0, 1e-2));
    }

    #[test]
    fn kernel_schwarz_reflection() {
        // every constituent is i times a real-analytic function of s
        let p = params(0.5);
        let s = c(1.0, 0.7);
        let f = possio_kernel_full(0.3, -0.1, s, &p).unwrap();
        let g = possio_kernel_full(0.3, -0.1, s.conj(), &p).unwrap();
        assert!(close(g, -f.conj(), 1e-12));
    }

    #[test]
    fn diagonal_and_left_half_plane_are_rejected() {
        let p = params(0.5);
        assert!(matches!(possio_kernel_full(0.2, 0.2, c(1.0, 0.0), &p), Err(Error::Domain(_))));
        assert!(matches!(possio_kernel_full(0.2, 0.1, c(-1.0, 0.0), &p), Err(Error::Convergence(_))));
        assert!(matches!(possio_kernel_full(0.2, 0.1, c(0.0, 1.0), &p), Err(Error::Convergence(_))));
    }

    #[test]
    fn table_matches_split() {
        let p = params(0.5);
        let ctx = KernelContext::new(c(0.5, 3.0), &p).unwrap();
        let t = KernelTable::new(ctx).unwrap();
        for i in 0..41 {
            let d = -2.0 + 0.1 * i as f64;
            let (a, b) = ctx.split(d);
            let (ta, tb) = t.eval(d);
            assert!((a - ta).norm() <= 1e-13 * a.norm().max(1e-8), "A at {d}");
            assert!((b - tb).norm() <= 1e-13 * b.norm().max(1e-8), "B at {d}");
        }
        assert!(t.degree() < 64);
    }

    #[test]
    fn doublet_psi_vanishes_on_axis() {
        let p = params(0.5);
        assert_eq!(doublet_psi(2.0, 0.0, 0.0, c(1.0, 0.0), &p).unwrap(), czero());
        assert_eq!(doublet_psi(0.5, 0.0, 0.9, c(1.0, 0.0), &p).unwrap(), czero());
        assert!(doublet_psi(0.5, 0.0, 0.5, c(1.0, 0.0), &p).is_err());
    }

    #[test]
    fn doublet_psi_is_eta_derivative() {
        let p = params(0.5);
        let s = c(1.0, 0.0);
        let k = p.wave_k(s);
        let h0 = |eta: f64| {
            let r = p.pg_radius(0.0, 0.5 - eta);
            hankel1_01(k * r).unwrap().0
        };
        let h = 1e-5;
        let fd = (h0(h) - h0(-h)) / (2.0 * h);
        let psi = doublet_psi(0.0, 0.5, 0.0, s, &p).unwrap();
        assert!(close(psi, fd, 1e-6), "{psi} {fd}");
    }

    #[test]
    fn doublet_potential_upstream_on_axis_is_zero() {
        let p = params(0.5);
        assert_eq!(doublet_potential(-1.5, 0.0, 0.0, c(1.0, 1.0), &p).unwrap(), czero());
        assert!(doublet_potential(0.0, 0.3, 0.0, c(-1.0, 1.0), &p).is_err());
    }

    #[test]
    fn doublet_potential_solves_its_ode() {
        // U dPhi/dx + s (1 + c U) Phi = Psi
        let p = params(0.5);
        let s = c(1.0, 1.0);
        let (x, y) = (0.3, 0.4);
        let h = 1e-3;
        let phi = |x: f64| doublet_potential(x, y, 0.0, s, &p).unwrap();
        let dphi = (phi(x - 2.0 * h) - phi(x - h) * 8.0 + phi(x + h) * 8.0 - phi(x + 2.0 * h)) / (12.0 * h);
        let lhs = dphi * p.u + s * (1.0 + p.c * p.u) * phi(x);
        let rhs = doublet_psi(x, y, 0.0, s, &p).unwrap();
        assert!((lhs - rhs).norm() <= 1e-5 * rhs.norm(), "{lhs} {rhs}");
    }

    #[test]
    fn doublet_potential_tail_is_converged() {
        let p = params(0.5);
        let s = c(1.0, 1.0);
        let a = doublet_potential(0.3, 0.4, 0.0, s, &p).unwrap();
        let tail = TailOptions { length_factor: 2.0, ..TailOptions::default() };
        let b = doublet_potential_with(0.3, 0.4, 0.0, s, &p, &tail).unwrap();
        assert!((a - b).norm() < 1e-9 * a.norm());
    }

    #[test]
    fn doublet_potential_jump_on_wake() {
        let p = params(0.5);
        let s = c(1.0, 0.5);
        let lim = doublet_potential(0.6, 0.0, -0.2, s, &p).unwrap();
        let near = doublet_potential(0.6, 1e-4, -0.2, s, &p).unwrap();
        assert!(close(near, lim, 1e-3), "{near} {lim}");
    }

    #[test]
    fn normal_derivative_of_potential_tends_to_kernel() {
        // lim_{y -> 0+} dPhi/dy (x, y) = F(x - xi); Richardson over y = 0.04, 0.02, 0.01
        let p = params(0.5);
        let s = c(1.0, 0.5);
        let (x, xi) = (0.2, -0.4);
        let dphi = |y: f64| {
            let h = y * 1e-3;
            (doublet_potential(x, y + h, xi, s, &p).unwrap() - doublet_potential(x, y - h, xi, s, &p).unwrap())
                / (2.0 * h)
        };
        let (a, b, cc) = (dphi(0.04), dphi(0.02), dphi(0.01));
        let r1 = (b * 4.0 - a) / 3.0;
        let r2 = (cc * 4.0 - b) / 3.0;
        let r = (r2 * 16.0 - r1) / 15.0;
        let f = possio_kernel_full(x, xi, s, &p).unwrap();
        assert!(close(r, f, 1e-6), "{r} {f}");
    }
}
