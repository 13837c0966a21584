//! Quadrature rules: Gauss–Legendre, Gauss rules for the weight `-ln t`,
//! adaptive Gauss–Kronrod and double-exponential integration.

use std::sync::OnceLock;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::{czero, Real};

/// Nodes and weights of an n-point rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Maps a rule on `[-1, 1]` to `[0, 1]`.
    pub fn to_unit(&self) -> Rule {
        Rule {
            nodes: self.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect(),
            weights: self.weights.iter().map(|w| 0.5 * w).collect(),
        }
    }
}

/// Gauss–Legendre rule on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pd(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_pd(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_pd(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss rule for `int_0^1 -ln(t) f(t) dt`, built from modified moments
/// against shifted Legendre polynomials (modified Chebyshev algorithm) and the
/// Golub–Welsch eigenproblem.
pub fn gauss_log(n: usize) -> Rule {
    assert!(n >= 1);
    let m2 = 2 * n;
    // Monic shifted Legendre recurrence on [0, 1].
    let a: Vec<f64> = vec![0.5; m2];
    let b: Vec<f64> = (0..m2)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                let k = k as f64;
                k * k / (4.0 * (4.0 * k * k - 1.0))
            }
        })
        .collect();
    // Modified moments int -ln t p_k(t) dt for monic p_k: (-1)^k/(k(k+1)) / binom(2k, k).
    let mut mom = vec![0.0; m2];
    mom[0] = 1.0;
    let mut binom = 1.0;
    for k in 1..m2 {
        let kf = k as f64;
        binom *= (2.0 * kf) * (2.0 * kf - 1.0) / (kf * kf);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        mom[k] = sign / (kf * (kf + 1.0)) / binom;
    }
    let (alpha, beta) = modified_chebyshev(&mom, &a, &b, n);
    golub_welsch(&alpha, &beta)
}

fn modified_chebyshev(mom: &[f64], a: &[f64], b: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let l = 2 * n;
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut sig_prev = vec![0.0; l + 1];
    let mut sig: Vec<f64> = mom.to_vec();
    sig.push(0.0);
    alpha[0] = a[0] + mom[1] / mom[0];
    beta[0] = mom[0];
    for k in 1..n {
        let mut next = vec![0.0; l + 1];
        for j in k..(l - k) {
            next[j] = sig[j + 1] - (alpha[k - 1] - a[j]) * sig[j] - beta[k - 1] * sig_prev[j]
                + b[j] * if j > 0 { sig[j - 1] } else { 0.0 };
        }
        alpha[k] = a[k] + next[k + 1] / next[k] - sig[k] / sig[k - 1];
        beta[k] = next[k] / sig[k - 1];
        sig_prev = sig;
        sig = next;
    }
    (alpha, beta)
}

/// Nodes and weights of the Gauss rule with Jacobi matrix
/// `diag(alpha)`, off-diagonal `sqrt(beta[1..])`, total mass `beta[0]`.
pub fn golub_welsch(alpha: &[f64], beta: &[f64]) -> Rule {
    let n = alpha.len();
    let mut d = alpha.to_vec();
    let mut e: Vec<f64> = (0..n).map(|k| if k + 1 < n { beta[k + 1].sqrt() } else { 0.0 }).collect();
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    tridiag_ql(&mut d, &mut e, &mut z);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    Rule {
        nodes: idx.iter().map(|&i| d[i]).collect(),
        weights: idx.iter().map(|&i| beta[0] * z[i] * z[i]).collect(),
    }
}

/// Implicit QL for a symmetric tridiagonal matrix. `d` holds the diagonal,
/// `e[0..n-1]` the sub-diagonal; `z` tracks the first row of the eigenvector
/// matrix. On exit `d` holds eigenvalues.
pub fn tridiag_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    if n == 0 {
        return;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 60, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Cached 32-point rules used across the crate.
pub fn gl32_unit() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(32).to_unit())
}

pub fn log32() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| gauss_log(32))
}

pub fn gl16_unit() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(16).to_unit())
}

pub fn log16() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| gauss_log(16))
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 7/15 panel. Returns (Kronrod value, error estimate).
pub fn gk15<T: Real, F: FnMut(T) -> Complex<T>>(f: &mut F, a: T, b: T) -> (Complex<T>, T) {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let fc = f(mid);
    let mut rk = fc * T::lit(WGK[7]);
    let mut rg = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        rk += (f1 + f2) * T::lit(WGK[j]);
        if j % 2 == 1 {
            rg += (f1 + f2) * T::lit(WG[j / 2]);
        }
    }
    ((rk * half), ((rk - rg) * half).norm())
}

/// Adaptive Gauss–Kronrod integration of a complex integrand on `[a, b]`
/// with global error control by bisection of the worst panel.
pub fn adaptive<T: Real, F: FnMut(T) -> Complex<T>>(
    mut f: F,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
    max_panels: usize,
) -> Result<(Complex<T>, T)> {
    if a == b {
        return Ok((czero(), T::zero()));
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut panels: Vec<(T, T, Complex<T>, T)> = vec![(a, b, v, e)];
    loop {
        let total: Complex<T> = panels.iter().fold(czero(), |acc, p| acc + p.2);
        let err: T = panels.iter().fold(T::zero(), |acc, p| acc + p.3);
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok((total, err));
        }
        if panels.len() >= max_panels {
            return Err(Error::QuadratureBudget(format!(
                "adaptive quadrature on [{a}, {b}] stopped at {} panels, error {err:e}",
                panels.len()
            )));
        }
        let (wi, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, be), (i, p)| if p.3 > be { (i, p.3) } else { (bi, be) });
        let (pa, pb, _, _) = panels.swap_remove(wi);
        let pm = (pa + pb) * T::lit(0.5);
        let (v1, e1) = gk15(&mut f, pa, pm);
        let (v2, e2) = gk15(&mut f, pm, pb);
        panels.push((pa, pm, v1, e1));
        panels.push((pm, pb, v2, e2));
    }
}

/// Tanh–sinh quadrature on `[a, b]`, robust against integrable endpoint
/// singularities. The integrand receives the abscissa and its distance to
/// the nearer endpoint (exact, free of cancellation).
pub fn tanh_sinh<T: Real, F: FnMut(T, T) -> Complex<T>>(mut f: F, a: T, b: T, rel_tol: T) -> Complex<T> {
    if a == b {
        return czero();
    }
    let half = (b - a) * T::lit(0.5);
    let pi2 = T::FRAC_PI_2();
    let tmax = T::lit(4.0);
    let mut h = T::one();
    let eval = |f: &mut F, t: T| -> Complex<T> {
        let u = pi2 * t.sinh();
        let ch = u.cosh();
        // 1 - tanh(u) = e^{-u}/cosh(u) computed without cancellation
        let dist = (-u.abs()).exp() / ch * half;
        let x = if t >= T::zero() { b - dist } else { a + dist };
        let w = pi2 * t.cosh() / (ch * ch);
        if dist <= T::zero() {
            return czero();
        }
        f(x, dist) * w
    };
    let mut sum = eval(&mut f, T::zero());
    let mut k = 1;
    loop {
        let t = h * T::from_usize_lossy(k);
        if t > tmax {
            break;
        }
        sum += eval(&mut f, t) + eval(&mut f, -t);
        k += 1;
    }
    let mut est = sum * h * half;
    for _level in 0..10 {
        h *= T::lit(0.5);
        let mut k = 1;
        let mut add = czero::<T>();
        loop {
            let t = h * T::from_usize_lossy(k);
            if t > tmax {
                break;
            }
            add += eval(&mut f, t) + eval(&mut f, -t);
            k += 2;
        }
        sum += add;
        let new = sum * h * half;
        let diff = (new - est).norm();
        est = new;
        if diff <= rel_tol * est.norm() {
            break;
        }
    }
    est
}

/// Rule evaluation helper on `[a, b]` for a rule given on `[0, 1]`.
pub fn apply_unit<T: Real, F: FnMut(T) -> Complex<T>>(rule: &Rule, a: T, b: T, mut f: F) -> Complex<T> {
    let len = b - a;
    let mut s = czero::<T>();
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        s += f(a + len * T::lit(*x)) * T::lit(*w);
    }
    s * len
}
