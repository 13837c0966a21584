//! Property suites run by `possio verify`. Every check records its measured
//! value next to the tolerance it is held to; a computation that fails is a
//! failed check with value `NaN`.

use std::f64::consts::{E, PI};
use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cheb::{clenshaw, finite_hilbert, inverse_finite_hilbert, ChebGrid, ChordFunction, EndpointClass};
use crate::error::{Error, Result};
use crate::field::{
    chord_loads, chord_loads_dense, evaluate_phi, evaluate_psi, fd_decay, flow_tangency_residual, pde_residual, psi_consistency,
    solve_family, SolutionFamily, DEFAULT_SIGMA_SHIFT,
};
use crate::flowconfig::{derive_params, FlowParams};
use crate::fredholm::{
    build_n, build_n_with, characteristic_kernel_scale, delta_series, det2, determinant, resolvent, solve_via_resolvent, solve_with,
    Discretization, KernelHook,
};
use crate::kernel::{doublet_potential, doublet_psi, kernel_split, log_fit, possio_kernel_full, KernelContext};
use crate::laplace::{bromwich_invert, bromwich_report, laplace_transform, Contour, DownwashSpec, TimeSamples};
use crate::linalg::Mat;
use crate::quad;
use crate::real::c;
use crate::specfun::{bessel_eval, hankel1_0, hankel1_01, hankel1_01_by_branch, hankel1_1, Branch, ASYMPTOTIC_RADIUS, SERIES_RADIUS};

type C = Complex<f64>;

pub const SUITES: [&str; 6] = ["specfun", "hilbert", "kernel", "fredholm", "laplace", "field"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub item: String,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub passed: bool,
    /// Error text when the computation itself failed.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Suite {
    name: &'static str,
    checks: Vec<Check>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite { name, checks: Vec::new() }
    }

    fn push(&mut self, item: &str, relation: Relation, tolerance: f64, value: Result<f64>) {
        let (value, note) = match value {
            Ok(v) => (v, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        let passed = match relation {
            Relation::AtMost => value <= tolerance,
            Relation::AtLeast => value >= tolerance,
        };
        self.checks.push(Check { suite: self.name, item: item.to_string(), value, relation, tolerance, passed, note });
    }

    fn at_most(&mut self, item: &str, tolerance: f64, value: Result<f64>) {
        self.push(item, Relation::AtMost, tolerance, value);
    }

    fn at_least(&mut self, item: &str, tolerance: f64, value: Result<f64>) {
        self.push(item, Relation::AtLeast, tolerance, value);
    }

    fn done(self) -> SuiteReport {
        SuiteReport { suite: self.name, checks: self.checks }
    }
}

/// Expands `all` and rejects unknown names.
pub fn resolve_suites(names: &[String]) -> Result<Vec<&'static str>> {
    let mut out: Vec<&'static str> = Vec::new();
    for n in names {
        if n == "all" {
            out.extend(SUITES);
            continue;
        }
        match SUITES.iter().find(|s| **s == n.as_str()) {
            Some(s) => out.push(s),
            None => return Err(Error::Config(format!("unknown verify suite '{n}' (known: {}, all)", SUITES.join(", ")))),
        }
    }
    let mut seen = Vec::new();
    out.retain(|s| {
        let fresh = !seen.contains(s);
        seen.push(*s);
        fresh
    });
    Ok(out)
}

pub fn run_suite(name: &str) -> Result<SuiteReport> {
    Ok(match name {
        "specfun" => specfun_suite(),
        "hilbert" => hilbert_suite(),
        "kernel" => kernel_suite(),
        "fredholm" => fredholm_suite(),
        "laplace" => laplace_suite(),
        "field" => field_suite(),
        other => return Err(Error::Config(format!("unknown verify suite '{other}'"))),
    })
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm()
}

fn benchmark_params() -> FlowParams<f64> {
    derive_params(340.0, 0.5).expect("valid benchmark parameters")
}

/// `J0, J1, Y0, Y1` at real `x` from their power series.
pub fn jy_series(x: f64) -> (f64, f64, f64, f64) {
    let q = x * x / 4.0;
    let (mut j0, mut j1, mut y0s, mut y1s) = (0.0, 0.0, 0.0, 0.0);
    let (mut hk, mut fact) = (0.0, 1.0);
    for k in 0..60 {
        if k > 0 {
            hk += 1.0 / k as f64;
            fact *= k as f64;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let t0 = sign * q.powi(k) / (fact * fact);
        let t1 = t0 / (k as f64 + 1.0);
        j0 += t0;
        j1 += t1;
        y0s -= t0 * hk;
        y1s += t1 * (2.0 * hk + 1.0 / (k as f64 + 1.0));
    }
    let j1 = j1 * x / 2.0;
    let l = (x / 2.0).ln() + 0.577_215_664_901_532_9;
    let y0 = 2.0 / PI * (l * j0 + y0s);
    let y1 = -2.0 / (PI * x) + 2.0 / PI * l * j1 - x / (2.0 * PI) * y1s;
    (j0, j1, y0, y1)
}

/// `K0(x)` at real `x` from its power series.
pub fn k0_series(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut i0, mut s, mut hk, mut f) = (0.0, 0.0, 0.0, 1.0);
    for k in 0..60 {
        if k > 0 {
            hk += 1.0 / k as f64;
            f *= k as f64;
        }
        let t = q.powi(k) / (f * f);
        i0 += t;
        s += hk * t;
    }
    -((x / 2.0).ln() + 0.577_215_664_901_532_9) * i0 + s
}

/// `|H0'' + H0'/z + H0|` relative to its largest term, with `H0' = -H1` and
/// `H1'` from a Richardson central difference.
pub fn bessel_ode_residual(z: C) -> Result<f64> {
    let (h0, h1) = hankel1_01(z)?;
    let dir = z / z.norm() * z.norm().min(1.0);
    let d = |h: f64| -> Result<C> { Ok((hankel1_1(z + dir * h)? - hankel1_1(z - dir * h)?) / (dir * (2.0 * h))) };
    let dh1 = (d(5e-4)? * 4.0 - d(1e-3)?) / 3.0;
    let res = -dh1 - h1 / z + h0;
    Ok(res.norm() / h0.norm().max((h1 / z).norm()).max(dh1.norm()))
}

fn specfun_suite() -> SuiteReport {
    let mut s = Suite::new("specfun");
    s.at_most(
        "ode_residual_max",
        1e-8,
        (|| {
            let mut worst = 0.0f64;
            for k in 0..3 {
                for j in 0..=40 {
                    let r = 0.01 * 10f64.powf(j as f64 / 10.0);
                    worst = worst.max(bessel_ode_residual(Complex::from_polar(r, PI / 4.0 * k as f64))?);
                }
            }
            Ok(worst)
        })(),
    );
    s.at_most(
        "wronskian_max_rel",
        1e-9,
        (|| {
            let mut worst = 0.0f64;
            let mut x = 0.1;
            while x <= 50.0 {
                let e = bessel_eval(c(x, 0.0))?;
                let w = e.j1.re * e.y0.re - e.j0.re * e.y1.re;
                let want = 2.0 / (PI * x);
                worst = worst.max((w - want).abs() / want);
                x *= 1.05;
            }
            Ok(worst)
        })(),
    );
    let (j0, j1, y0, y1) = jy_series(1.0);
    s.at_most("h0_at_1_vs_series", 1e-9, hankel1_0(c(1.0, 0.0)).map(|h| rel(h, c(j0, y0))));
    s.at_most("h1_at_1_vs_series", 1e-9, hankel1_1(c(1.0, 0.0)).map(|h| rel(h, c(j1, y1))));
    s.at_most("h0_at_i_vs_k0_series", 1e-9, hankel1_0(c(0.0, 1.0)).map(|h| rel(h, c(0.0, -2.0 / PI * k0_series(1.0)))));
    s.at_most(
        "h1_vs_fd_of_h0_at_2",
        1e-6,
        (|| {
            let z = c(2.0, 0.0);
            let fd = (hankel1_0(z + 1e-4)? - hankel1_0(z - 1e-4)?) / 2e-4;
            Ok(rel(fd, -hankel1_1(z)?))
        })(),
    );
    s.at_most(
        "real_axis_imag_parts",
        1e-12,
        (|| {
            let mut worst = 0.0f64;
            for x in [0.3f64, 1.7, 2.5, 8.0, 16.0, 30.0, 120.0] {
                let e = bessel_eval(c(x, 0.0))?;
                for v in [e.j0, e.j1, e.y0, e.y1] {
                    worst = worst.max(v.im.abs() / v.norm());
                }
            }
            Ok(worst)
        })(),
    );
    for (item, r, a, b) in [
        ("branch_series_vs_fraction", SERIES_RADIUS, Branch::Series, Branch::ContinuedFraction),
        ("branch_fraction_vs_asymptotic", ASYMPTOTIC_RADIUS, Branch::ContinuedFraction, Branch::Asymptotic),
    ] {
        s.at_most(
            item,
            1e-8,
            (|| {
                let mut worst = 0.0f64;
                for j in 0..=16 {
                    for scale in [0.98, 1.0, 1.02] {
                        let z = Complex::from_polar(r * scale, PI * j as f64 / 16.0);
                        let (p0, p1) = hankel1_01_by_branch(z, a)?;
                        let (q0, q1) = hankel1_01_by_branch(z, b)?;
                        worst = worst.max(rel(p0, q0)).max(rel(p1, q1));
                    }
                }
                Ok(worst)
            })(),
        );
    }
    s.at_least("zero_argument_rejected", 1.0, Ok(if hankel1_0(c(0.0f64, 0.0)).is_err() { 1.0 } else { 0.0 }));
    s.done()
}

/// Random complex polynomial of degree `deg` in the Chebyshev basis.
pub fn random_chebyshev_poly(rng: &mut ChaCha8Rng, deg: usize) -> Vec<C> {
    (0..=deg).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Max over random degree-`<= deg` polynomials of `||T[T^{-1} g] - g||_inf / ||g||_inf`.
pub fn right_inverse_residual(n: usize, deg: usize, samples: usize, seed: u64) -> Result<f64> {
    let g = Arc::new(ChebGrid::new(n)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let a = random_chebyshev_poly(&mut rng, deg);
        let f = ChordFunction::from_fn(g.clone(), |x| clenshaw(&a, x));
        let back = finite_hilbert(&inverse_finite_hilbert(&f)?)?;
        worst = worst.max(back.max_diff(&f)? / f.max_abs());
    }
    Ok(worst)
}

/// Max nodal errors of `T[sqrt(1-x^2) U_{k-1}] = -T_k` and `T[T_k/sqrt(1-x^2)] = U_{k-1}` for `k <= n/2`.
pub fn chebyshev_pair_residuals(n: usize) -> Result<(f64, f64)> {
    let g = Arc::new(ChebGrid::new(n)?);
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for k in 1..=n / 2 {
        let kf = k as f64;
        let u = |th: f64| (kf * th).sin() / th.sin();
        let f = ChordFunction::from_fn(g.clone(), |x: f64| c((1.0 - x * x).sqrt() * u(x.acos()), 0.0));
        let tf = finite_hilbert(&f)?;
        let h = ChordFunction::from_cofactor(g.clone(), |x| c((kf * x.acos()).cos(), 0.0));
        let th = finite_hilbert(&h)?;
        for (j, x) in g.nodes.iter().enumerate() {
            let t = x.acos();
            a = a.max((tf.values[j] + (kf * t).cos()).norm());
            b = b.max((th.values[j] - u(t)).norm() / kf);
        }
    }
    Ok((a, b))
}

fn hilbert_suite() -> SuiteReport {
    let mut s = Suite::new("hilbert");
    s.at_most("right_inverse_random_deg64_n128", 1e-8, right_inverse_residual(128, 64, 16, 20_240_501));
    let pairs = chebyshev_pair_residuals(128);
    s.at_most("pair_sqrt_u_to_minus_t", 1e-10, pairs.as_ref().map(|p| p.0).map_err(Clone::clone));
    s.at_most("pair_t_over_sqrt_to_u", 1e-10, pairs.map(|p| p.1));
    s.at_most(
        "null_direction_projection",
        1e-8,
        (|| {
            let g = Arc::new(ChebGrid::new(64)?);
            let f = ChordFunction::from_cofactor(g.clone(), |x: f64| c(1.5 + x * x - 0.3 * x.powi(3), 0.2 * x));
            let back = inverse_finite_hilbert(&finite_hilbert(&f)?)?;
            let diff: Vec<C> = back.values.iter().zip(&f.values).map(|(a, b)| *a - *b).collect();
            let a = g.values_to_coeffs(&diff)?;
            Ok(a.iter().skip(1).fold(0.0f64, |m, v| m.max(v.norm())) / a[0].norm().max(1e-300))
        })(),
    );
    s.at_most(
        "inverse_of_minus_x",
        1e-12,
        (|| {
            let g = Arc::new(ChebGrid::new(64)?);
            let p = inverse_finite_hilbert(&ChordFunction::from_fn(g.clone(), |x: f64| c(-x, 0.0)))?;
            Ok(p.values.iter().zip(&g.nodes).fold(0.0f64, |m, (v, x)| m.max((*v - c(0.5 - x * x, 0.0)).norm())))
        })(),
    );
    s.done()
}

/// Two-level Richardson estimate of `lim_{d -> 0+} d F(d)` from `d = 1e-2, 5e-3, 2.5e-3`.
pub fn cauchy_richardson(ctx: &KernelContext<f64>) -> Result<C> {
    let g = |h: f64| ctx.full(h).map(|v| v * h);
    let (g1, g2, g3) = (g(1e-2)?, g(5e-3)?, g(2.5e-3)?);
    let r1 = g2 * 2.0 - g1;
    let r2 = g3 * 2.0 - g2;
    Ok((r2 * 4.0 - r1) / 3.0)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / lx.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>()
}

/// Relative 5-point residual of `a^2 (1-M^2) f_xx + a^2 f_yy - s^2/(1-M^2) f`
/// for `f = H0(z(x, y))`, doublet at the origin, at steps `h` and `h/2`.
pub fn reduced_wave_residuals(x: f64, y: f64, s: C, params: &FlowParams<f64>, h: f64) -> Result<(f64, f64)> {
    let f = |x: f64, y: f64| hankel1_0(params.wave_k(s) * params.pg_radius(x, y));
    let one = |h: f64| -> Result<f64> {
        let f0 = f(x, y)?;
        let fxx = (f(x + h, y)? - f0 * 2.0 + f(x - h, y)?) / (h * h);
        let fyy = (f(x, y + h)? - f0 * 2.0 + f(x, y - h)?) / (h * h);
        let a2 = params.a * params.a;
        let terms = [fxx * (a2 * params.beta2()), fyy * a2, -f0 * s * s / params.beta2()];
        let r = terms.iter().fold(c(0.0, 0.0), |acc, v| acc + *v);
        Ok(r.norm() / terms.iter().map(|v| v.norm()).sum::<f64>())
    };
    Ok((one(h)?, one(h / 2.0)?))
}

fn kernel_suite() -> SuiteReport {
    let mut s = Suite::new("kernel");
    let p = benchmark_params();
    s.at_most(
        "cauchy_richardson_max_rel",
        1e-3,
        (|| {
            let mut worst = 0.0f64;
            for m in [0.1, 0.5, 0.8] {
                let pm = derive_params(340.0, m)?;
                for sv in [c(1.0, 1.0), c(2.0, 4.0)] {
                    let ctx = KernelContext::new(sv, &pm)?;
                    worst = worst.max(rel(cauchy_richardson(&ctx)?, ctx.cauchy));
                }
            }
            Ok(worst)
        })(),
    );
    s.at_most(
        "singular_coeff_spread",
        0.0,
        (|| {
            let a = kernel_split(0.3, -0.2, c(1.0, 1.0), &p)?.singular_coeff;
            let b = kernel_split(-0.9, 0.8, c(2.0, 7.0), &p)?.singular_coeff;
            Ok((a - b).norm())
        })(),
    );
    s.at_most("log_fit_residual", 1e-3, kernel_split(0.0, -0.3, c(1.0, 1.0), &p).and_then(|e| e.log_fit.map(|f| f.residual).ok_or_else(|| Error::Domain("no fit".into()))));
    s.at_most(
        "ab_growth_exponent",
        2.3,
        (|| {
            let mods = [1.0f64, 2.0, 4.0, 8.0];
            let mut ys = Vec::new();
            for m in mods {
                let ctx = KernelContext::new(c(1.0, (m * m - 1.0).sqrt()), &p)?;
                let fit = log_fit(&ctx, 1e-4, 1e-2, 17)?;
                ys.push(fit.a.norm() + fit.b.norm());
            }
            Ok(log_slope(&mods, &ys))
        })(),
    );
    s.at_least("reduced_wave_fd_decay", 3.0, reduced_wave_residuals(0.3, 0.7, c(1.0, 1.0), &p, 0.1).map(|(a, b)| a / b));
    s.at_least(
        "doublet_psi_linear_equation_fd_decay",
        3.0,
        (|| {
            let sv = c(1.0, 1.0);
            let g = |x: f64, y: f64, t: f64| doublet_psi(x, y, 0.0, sv, &p).map(|v| v * (sv * (t + p.c * x)).exp());
            Ok(fd_decay(g, 0.3, 0.7, 0.5, 0.1, &p)?.ratio)
        })(),
    );
    s.at_most(
        "schwarz_reflection",
        1e-12,
        (|| {
            let sv = c(1.0, 2.0);
            let f = possio_kernel_full(0.3, -0.2, sv, &p)?;
            let g = possio_kernel_full(0.3, -0.2, sv.conj(), &p)?;
            Ok(rel(g, -f.conj()))
        })(),
    );
    s.at_most(
        "normal_derivative_limit",
        1e-6,
        (|| {
            let sv = c(1.0, 0.5);
            let (x, xi) = (0.2, -0.4);
            let dphi = |y: f64| -> Result<C> {
                let h = y * 1e-3;
                Ok((doublet_potential(x, y + h, xi, sv, &p)? - doublet_potential(x, y - h, xi, sv, &p)?) / (2.0 * h))
            };
            let (a, b, cc) = (dphi(0.04)?, dphi(0.02)?, dphi(0.01)?);
            let r1 = (b * 4.0 - a) / 3.0;
            let r2 = (cc * 4.0 - b) / 3.0;
            Ok(rel((r2 * 16.0 - r1) / 15.0, possio_kernel_full(x, xi, sv, &p)?))
        })(),
    );
    s.at_most(
        "antisymmetric_part_growth",
        1.5,
        (|| {
            let ctx = KernelContext::new(c(1.0, 1.0), &p)?;
            let g = |d: f64| -> Result<f64> { Ok((ctx.full(d)? - ctx.full(-d)? - ctx.cauchy * (2.0 / d)).norm()) };
            let (a, b, cc) = (g(1e-2)?, g(1e-3)?, g(1e-4)?);
            Ok(cc / a.max(b).max(1e-300))
        })(),
    );
    s.at_least("diagonal_rejected", 1.0, Ok(if possio_kernel_full(0.1, 0.1, c(1.0, 1.0), &p).is_err() { 1.0 } else { 0.0 }));
    s.done()
}

/// Random `n x n` matrix with Frobenius norm `hs`.
pub fn random_operator(n: usize, hs: f64, seed: u64) -> Mat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = Mat::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let f = m.frobenius();
    m.scale(c(hs / f, 0.0))
}

/// Largest ratio of `|delta_m|` to `(e/m)^{m/2} hs^m` (`m <= 8`) and of `|D|` to `e^{hs^2/2}`.
pub fn carleman_ratios(m: &Mat<f64>, hs: f64) -> Result<(f64, f64)> {
    let deltas = delta_series(m, 8);
    let mut worst = 0.0f64;
    for (k, dk) in deltas.iter().enumerate().skip(1) {
        let kf = k as f64;
        let bound = (E / kf).powf(kf / 2.0) * hs.powi(k as i32);
        if bound > 0.0 {
            worst = worst.max(dk.norm() / bound);
        }
    }
    Ok((worst, det2(m)?.value.norm() / (hs * hs / 2.0).exp()))
}

fn fredholm_suite() -> SuiteReport {
    let mut s = Suite::new("fredholm");
    let p = benchmark_params();
    let disc = match Discretization::new(64) {
        Ok(d) => d,
        Err(e) => {
            s.at_most("discretization", 0.0, Err(e));
            return s.done();
        }
    };
    let zero = build_n_with(c(1.0, 1.0), &disc, &p, KernelHook::Zero);
    s.at_most("zero_operator_det_minus_one", 0.0, zero.and_then(|op| determinant(&op)).map(|d| (d - 1.0).norm()));
    s.at_most("delta_1", 0.0, build_n(c(1.0, 1.0), &disc, &p).map(|op| delta_series(&op.matrix, 2)[1].norm()));
    s.at_most(
        "series_vs_matrix_det",
        1e-6,
        (|| {
            let mut worst = 0.0f64;
            for seed in 0..4 {
                let m = random_operator(64, 0.45, seed);
                let d = det2(&m)?.value;
                let sum = delta_series(&m, 8).iter().fold(c(0.0, 0.0), |a, v| a + *v);
                worst = worst.max(rel(sum, d));
            }
            Ok(worst)
        })(),
    );
    let bounds = (|| {
        let mut worst = (0.0f64, 0.0f64);
        let ops = [
            build_n(c(0.1, 0.5), &disc, &p)?,
            build_n(c(1.0, 1.0), &disc, &p)?,
            build_n(c(2.0, 30.0), &disc, &p)?,
            build_n_with(c(1.0, 1.0), &disc, &p, KernelHook::Scale(c(150.0, 0.0)))?,
        ];
        for op in &ops {
            let (a, b) = carleman_ratios(&op.symmetric_form(), op.hs_norm)?;
            worst = (worst.0.max(a), worst.1.max(b));
        }
        Ok(worst)
    })();
    s.at_most("delta_bound_ratio", 1.0 + 1e-9, bounds.as_ref().map(|b| b.0).map_err(Clone::clone));
    s.at_most("det_bound_ratio", 1.0 + 1e-12, bounds.map(|b| b.1));
    let ones = ChordFunction::from_fn(disc.grid.clone(), |_| c(1.0, 0.0));
    let res_checks = (|| {
        let mut worst = (0.0f64, 0.0f64, 0.0f64);
        for k in [1.0, 150.0] {
            let op = build_n_with(c(1.0, 2.0), &disc, &p, KernelHook::Scale(c(k, 0.0)))?;
            let res = resolvent(&op)?;
            let n = &op.matrix;
            let e1 = res.h.add(&n.matmul(&res.h)).sub(n).max_abs() / n.max_abs();
            let e2 = res.h.add(&res.h.matmul(n)).sub(n).max_abs() / n.max_abs();
            worst.0 = worst.0.max(e1.max(e2));
            worst.1 = worst.1.max(res.minor_bound_ratio);
            if k == 1.0 {
                let a = solve_with(&op, &ones, &p)?;
                let b = solve_via_resolvent(&op, &res, &ones, &p)?;
                worst.2 = a.p.max_diff(&b.p)? / a.p.max_abs();
            }
        }
        Ok(worst)
    })();
    s.at_most("resolvent_identities", 1e-8, res_checks.as_ref().map(|r| r.0).map_err(Clone::clone));
    s.at_most("resolvent_minor_bound_ratio", 1.0, res_checks.as_ref().map(|r| r.1).map_err(Clone::clone));
    s.at_most("solve_vs_resolvent_route", 1e-8, res_checks.map(|r| r.2));
    s.at_most(
        "hilbert_recovers_r",
        1e-7,
        (|| {
            let sol = crate::fredholm::solve_p(c(1.0, 3.0), &ones, &p, &disc)?;
            Ok(finite_hilbert(&sol.p)?.max_diff(&sol.r)? / sol.r.max_abs())
        })(),
    );
    s.at_most(
        "grid_doubling_change",
        1e-6,
        (|| {
            let sv = c(1.0, 2.0);
            let mut at: Vec<[C; 3]> = Vec::new();
            for n in [64, 128] {
                let d = Discretization::new(n)?;
                let sol = crate::fredholm::solve_p(sv, &ChordFunction::from_fn(d.grid.clone(), |x: f64| c((1.5 * x).cos(), 0.3 * x * x)), &p, &d)?;
                let q = sol.p.coeffs()?;
                at.push([clenshaw(&q, -0.6), clenshaw(&q, 0.1), clenshaw(&q, 0.77)]);
            }
            Ok((0..3).map(|k| rel(at[0][k], at[1][k])).fold(0.0, f64::max))
        })(),
    );
    s.at_most(
        "hs_growth_exponent",
        2.3,
        (|| {
            let mods = [1.0f64, 2.0, 4.0, 8.0];
            let ys = mods.iter().map(|&m| build_n(c(1.0, (m * m - 1.0).sqrt()), &disc, &p).map(|op| op.hs_norm)).collect::<Result<Vec<_>>>()?;
            Ok(log_slope(&mods, &ys))
        })(),
    );
    s.at_most(
        "analyticity_contour_integral",
        1e-6,
        (|| {
            let gl = quad::gauss_legendre(12);
            let corners = [c(0.5, 1.0), c(1.5, 1.0), c(1.5, 3.0), c(0.5, 3.0)];
            let (mut total, mut big) = (c(0.0, 0.0), 0.0f64);
            for k in 0..4 {
                let (a, b) = (corners[k], corners[(k + 1) % 4]);
                for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                    let sv = (a + b) * 0.5 + (b - a) * (0.5 * x);
                    let d = determinant(&build_n(sv, &disc, &p)?)?;
                    big = big.max(d.norm());
                    total += d * (b - a) * (0.5 * w);
                }
            }
            Ok(total.norm() / big)
        })(),
    );
    s.at_most(
        "conjugate_symmetry",
        1e-8,
        (|| {
            let sv = c(1.5, 7.0);
            let a = determinant(&build_n(sv, &disc, &p)?)?;
            let b = determinant(&build_n(sv.conj(), &disc, &p)?)?;
            Ok(rel(b, a.conj()))
        })(),
    );
    s.at_least(
        "characteristic_value_detected",
        1.0,
        (|| {
            let op = build_n(c(1.0, 1.0), &disc, &p)?;
            let k = characteristic_kernel_scale(&op)?;
            let forced = build_n_with(c(1.0, 1.0), &disc, &p, KernelHook::Scale(k))?;
            Ok(if matches!(solve_with(&forced, &ones, &p), Err(Error::CharacteristicValue { .. })) { 1.0 } else { 0.0 })
        })(),
    );
    s.done()
}

fn laplace_suite() -> SuiteReport {
    let mut s = Suite::new("laplace");
    let inv = |sigma: f64, t: f64| -> Result<C> {
        let ct = Contour::new(sigma, 40.0, 0.05)?;
        let vals: Vec<C> = ct.nodes().iter().map(|z| (*z + 1.0).inv()).collect();
        bromwich_invert(&ct, &vals, t)
    };
    s.at_most("inverse_of_1_over_s_plus_1", 1e-4, inv(1.0, 1.0).map(|v| (v - c((-1.0f64).exp(), 0.0)).norm()));
    s.at_most("abscissa_independence", 1e-4, (|| Ok((inv(1.0, 1.0)? - inv(1.5, 1.0)?).norm()))());
    s.at_most(
        "zero_transform",
        0.0,
        (|| {
            let ct = Contour::new(1.0, 40.0, 0.05)?;
            Ok(bromwich_invert(&ct, &vec![c(0.0, 0.0); 2 * ct.half_count() + 1], 1.0)?.norm())
        })(),
    );
    s.at_most(
        "inversion_of_symmetric_data_is_real",
        1e-8,
        (|| {
            let ct = Contour::new(1.0, 40.0, 0.05)?;
            let vals: Vec<C> = ct.nodes().iter().map(|z| (*z + 1.0).inv() + (*z + 2.0).powi(-2)).collect();
            let v = bromwich_report(&ct, &vals, 1.3)?.value;
            Ok(v.im.abs() / v.norm())
        })(),
    );
    let g = ChebGrid::new(16).map(Arc::new);
    let samples = |h: f64, t_end: f64| {
        let nt = (t_end / h).round() as usize + 1;
        let t: Vec<f64> = (0..nt).map(|j| j as f64 * h).collect();
        let x = vec![-1.0, 0.0, 1.0];
        let values = x.iter().map(|_| t.iter().map(|t| (-t).exp()).collect()).collect();
        TimeSamples { t, x, values }
    };
    s.at_most(
        "sampled_exp_transform_at_1",
        1e-6,
        (|| {
            let g = g.clone()?;
            let spec = DownwashSpec::samples(samples(0.01, 25.0))?;
            let w = laplace_transform(&spec, c(1.0, 0.0), &g)?;
            Ok(w.values.iter().fold(0.0f64, |m, v| m.max((*v - 0.5).norm())))
        })(),
    );
    s.at_most(
        "harmonic_closed_form",
        1e-14,
        (|| {
            let g = g.clone()?;
            let spec = DownwashSpec::harmonic(|x| c(x, 0.0), 1.0)?;
            let w = laplace_transform(&spec, c(1.0, 1.0), &g)?;
            Ok(w.values.iter().zip(&g.nodes).fold(0.0f64, |m, (v, x)| m.max((*v - *x).norm())))
        })(),
    );
    s.at_most(
        "round_trip_exp_samples",
        1e-3,
        (|| {
            let g = g.clone()?;
            let spec = DownwashSpec::samples(samples(0.01, 25.0))?;
            let ct = Contour::new(1.0, 40.0, 0.05)?;
            let vals = ct.nodes().iter().map(|&z| laplace_transform(&spec, z, &g).map(|w| w.values[4])).collect::<Result<Vec<_>>>()?;
            let mut worst = 0.0f64;
            for t in [0.5, 1.0, 2.0, 3.0] {
                worst = worst.max((bromwich_invert(&ct, &vals, t)?.re - (-t).exp()).abs());
            }
            Ok(worst)
        })(),
    );
    s.at_least(
        "non_decaying_samples_rejected",
        1.0,
        (|| {
            let mut ts = samples(0.1, 10.0);
            for row in &mut ts.values {
                row.iter_mut().for_each(|v| *v = 1.0);
            }
            let spec = DownwashSpec::samples(ts)?;
            Ok(if laplace_transform(&spec, c(1.0, 0.0), &g.clone()?).is_err() { 1.0 } else { 0.0 })
        })(),
    );
    s.done()
}

/// The harmonic benchmark: `a = 340`, `M = 0.5`, `w0 = 1`, `k = 0.5`, solved at
/// `s = 0.1 + 0.5 i` on an `n`-point grid.
pub fn harmonic_benchmark(n: usize) -> Result<(FlowParams<f64>, DownwashSpec<f64>, SolutionFamily<f64>)> {
    let p = benchmark_params();
    let spec = DownwashSpec::harmonic(|_| c(1.0, 0.0), 0.5)?;
    let disc = Discretization::new(n)?;
    let ct = Contour::new(1.0, 40.0, 0.05)?;
    let fam = solve_family(&spec, &p, &disc, &ct, DEFAULT_SIGMA_SHIFT)?;
    Ok((p, spec, fam))
}

/// Chord probes of the flow-tangency check at `t = 1`.
pub fn tangency_probes() -> Vec<(f64, f64)> {
    [-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75].iter().map(|&x| (x, 1.0)).collect()
}

/// Relative slack allowed when comparing tangency residuals across grids: the
/// residual is dominated by the grid-independent extrapolation error in `y`.
pub const MONOTONE_SLACK: f64 = 1e-6;

fn field_suite() -> SuiteReport {
    let mut s = Suite::new("field");
    let b64 = harmonic_benchmark(64);
    let b128 = harmonic_benchmark(128);
    let tangency = |b: &Result<(FlowParams<f64>, DownwashSpec<f64>, SolutionFamily<f64>)>| -> Result<f64> {
        let (_, spec, fam) = b.as_ref().map_err(Clone::clone)?;
        Ok(flow_tangency_residual(fam, spec, &tangency_probes())?.relative)
    };
    let (t64, t128) = (tangency(&b64), tangency(&b128));
    s.at_most("tangency_residual_n64", 1e-2, t64.clone());
    s.at_most("tangency_residual_n128", 1e-2, t128.clone());
    s.at_most("tangency_ratio_n128_over_n64", 1.0 + MONOTONE_SLACK, (|| Ok(t128? / t64?))());
    let density = b128.as_ref().map_err(Clone::clone).map(|b| b.2.densities[0].clone());
    s.at_most("density_rs_rhs_residual_n128", 1e-6, density.as_ref().map(|d| d.residual).map_err(Clone::clone));
    s.at_most(
        "density_lq_integral_n128",
        f64::MAX,
        density.and_then(|d| if d.lp_norm.is_finite() { Ok(d.lp_norm) } else { Err(Error::Overflow("int |p|^q diverged".into())) }),
    );
    let fam = b64.map(|b| b.2);
    let with = |f: &dyn Fn(&SolutionFamily<f64>) -> Result<f64>| fam.as_ref().map_err(Clone::clone).and_then(f);
    s.at_least("pde_fd_decay_benchmark", 3.0, with(&|f| Ok(pde_residual(f, &[(0.5, 0.8, 1.0)], 0.1)?.min_ratio)));
    s.at_least(
        "pde_fd_decay_single_doublet",
        3.0,
        (|| {
            let p = benchmark_params();
            let sv = c(1.0, 1.0);
            let f = |x: f64, y: f64, t: f64| doublet_potential(x, y, 0.0, sv, &p).map(|v| v * (sv * (t + p.c * x)).exp());
            Ok(fd_decay(f, 0.3, 0.7, 0.5, 0.1, &p)?.ratio)
        })(),
    );
    s.at_most(
        "kutta_wake_pressure",
        1e-10,
        with(&|f| {
            let chord = [-0.9, -0.5, 0.0, 0.5, 0.9].iter().map(|&x| evaluate_psi(x, 0.0, 1.0, f).map(|v| v.psi.unwrap_or_default().norm())).collect::<Result<Vec<_>>>()?;
            let scale = chord.into_iter().fold(0.0, f64::max);
            let mut worst = 0.0f64;
            for x in [1.05, 1.5, 2.0, 2.5, 3.0] {
                for sgn in [1.0, -1.0] {
                    for t in [0.5, 1.0, 2.0] {
                        worst = worst.max(evaluate_psi(sgn * x, 0.0, t, f)?.psi.unwrap_or_default().norm());
                    }
                }
            }
            Ok(worst / scale)
        }),
    );
    s.at_most("psi_material_derivative_gap", 1e-3, with(&|f| Ok(psi_consistency(0.3, 0.4, 1.0, 1e-3, f)?.2)));
    s.at_most(
        "far_field_ratio",
        0.1,
        with(&|f| {
            let near = evaluate_phi(0.0, 0.5, 1.0, f)?.phi.unwrap_or_default();
            let far = evaluate_phi(0.0, 10.0, 1.0, f)?.phi.unwrap_or_default();
            Ok(far.norm() / near.norm())
        }),
    );
    s.at_most(
        "loads_vs_dense_quadrature",
        1e-8,
        with(&|f| {
            let d = &f.densities[0];
            let (l, m) = chord_loads(&d.p);
            let (ld, md) = chord_loads_dense(&d.p, 4)?;
            Ok((l - ld).norm().max((m - md).norm()) / d.p.max_abs())
        }),
    );
    s.at_most(
        "even_density_moment",
        1e-14,
        (|| {
            let g = Arc::new(ChebGrid::<f64>::new(32)?);
            let p = ChordFunction::new(g.clone(), g.nodes.iter().map(|&x| c(1.0 + x * x, 0.3 * x * x)).collect(), EndpointClass::InverseSqrtSingular)?;
            let (l, m) = chord_loads(&p);
            Ok(m.norm() / l.norm())
        })(),
    );
    s.done()
}
