//! Bessel and Hankel functions of orders 0 and 1 for complex argument.
//!
//! Everything is routed through the modified Bessel functions of
//! `w = -i z`, using
//!
//! ```text
//! H0(z) = (2 / (i pi)) K0(w)      H1(z) = -(2 / pi) K1(w)
//! J0(z) = I0(w)                   J1(z) = i I1(w)
//! ```
//!
//! which hold for `-pi/2 < arg z <= pi`. On the positive imaginary axis `w` is
//! real and positive, which is the kernel regime `z = i s rho`. Three branches
//! evaluate `K0, K1`:
//!
//! * power series for `|z| <= 2`,
//! * Steed's continued fraction (Temme's form) for `2 < |z| < 17`,
//! * the Hankel asymptotic series for `|z| >= 17`.
//!
//! `I0, I1` come from the Wronskian `I0 K1 + I1 K0 = 1/w` with the ratio
//! `I1/I0` from its continued fraction, so no branch ever subtracts two
//! exponentially large numbers. The lower half plane is reached by the
//! analytic continuation formulas for `H(z e^{-i pi})`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::{c, ci, cr, czero, Real};

pub const SERIES_RADIUS: f64 = 2.0;
pub const ASYMPTOTIC_RADIUS: f64 = 17.0;

const MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Series,
    ContinuedFraction,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval<T> {
    pub z: Complex<T>,
    pub j0: Complex<T>,
    pub j1: Complex<T>,
    pub y0: Complex<T>,
    pub y1: Complex<T>,
    pub h0: Complex<T>,
    pub h1: Complex<T>,
    pub branch_used: Branch,
}

fn check_arg<T: Real>(z: Complex<T>) -> Result<()> {
    if z.re == T::zero() && z.im == T::zero() {
        return Err(Error::Domain("Bessel functions of the second kind are singular at z = 0".into()));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("non-finite Bessel argument {z}")));
    }
    Ok(())
}

pub fn branch_for<T: Real>(z: Complex<T>) -> Branch {
    let r = z.norm();
    if r <= T::lit(SERIES_RADIUS) {
        Branch::Series
    } else if r < T::lit(ASYMPTOTIC_RADIUS) {
        Branch::ContinuedFraction
    } else {
        Branch::Asymptotic
    }
}

/// `H0^(1)(z)`.
pub fn hankel1_0<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    Ok(hankel1_01(z)?.0)
}

/// `H1^(1)(z)`.
pub fn hankel1_1<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    Ok(hankel1_01(z)?.1)
}

/// Both Hankel functions at once; cheaper than two separate calls.
pub fn hankel1_01<T: Real>(z: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
    check_arg(z)?;
    if z.im < T::zero() {
        // H0(z) = H0(-z) + 2 J0(-z), H1(z) = -(H1(-z) + 2 J1(-z)).
        let e = eval_upper(-z, true);
        let two = T::lit(2.0);
        return Ok((e.h0 + e.j0 * two, -(e.h1 + e.j1 * two)));
    }
    let w = -ci::<T>() * z;
    let (k0, k1, _) = k01(w);
    Ok(h_from_k(k0, k1))
}

/// Full evaluation of `J, Y, H` of orders 0 and 1.
pub fn bessel_eval<T: Real>(z: Complex<T>) -> Result<BesselEval<T>> {
    check_arg(z)?;
    if z.im < T::zero() {
        let e = eval_upper(-z, true);
        let two = T::lit(2.0);
        let j0 = e.j0;
        let j1 = -e.j1;
        let h0 = e.h0 + e.j0 * two;
        let h1 = -(e.h1 + e.j1 * two);
        return Ok(assemble(z, j0, j1, h0, h1, e.branch));
    }
    let e = eval_upper(z, true);
    Ok(assemble(z, e.j0, e.j1, e.h0, e.h1, e.branch))
}

/// `J0(z), J1(z)`, finite for every `z`.
pub fn bessel_j01<T: Real>(z: Complex<T>) -> (Complex<T>, Complex<T>) {
    if z.norm() <= T::lit(SERIES_RADIUS) {
        return j01_series(z);
    }
    let zz = if z.im < T::zero() { -z } else { z };
    let e = eval_upper(zz, true);
    if z.im < T::zero() {
        (e.j0, -e.j1)
    } else {
        (e.j0, e.j1)
    }
}

fn assemble<T: Real>(
    z: Complex<T>,
    j0: Complex<T>,
    j1: Complex<T>,
    h0: Complex<T>,
    h1: Complex<T>,
    branch: Branch,
) -> BesselEval<T> {
    let mi = -ci::<T>();
    BesselEval {
        z,
        j0,
        j1,
        y0: mi * (h0 - j0),
        y1: mi * (h1 - j1),
        h0,
        h1,
        branch_used: branch,
    }
}

struct Upper<T> {
    j0: Complex<T>,
    j1: Complex<T>,
    h0: Complex<T>,
    h1: Complex<T>,
    branch: Branch,
}

/// Evaluation for `Im z >= 0`, where `w = -i z` has `Re w >= 0`.
fn eval_upper<T: Real>(z: Complex<T>, want_j: bool) -> Upper<T> {
    let w = -ci::<T>() * z;
    let (k0, k1, branch) = k01(w);
    let (h0, h1) = h_from_k(k0, k1);
    let (j0, j1) = if !want_j {
        (czero(), czero())
    } else if branch == Branch::Series {
        j01_series(z)
    } else {
        let (i0, i1) = i01_wronskian(w, k0, k1);
        (i0, ci::<T>() * i1)
    };
    Upper { j0, j1, h0, h1, branch }
}

#[inline]
fn h_from_k<T: Real>(k0: Complex<T>, k1: Complex<T>) -> (Complex<T>, Complex<T>) {
    let two_over_pi = T::lit(2.0) / T::PI();
    // 2/(i pi) = -2i/pi
    (k0 * c(T::zero(), -two_over_pi), k1 * (-two_over_pi))
}

/// `K0(w), K1(w)` for `Re w >= 0`, `w != 0`.
pub(crate) fn k01<T: Real>(w: Complex<T>) -> (Complex<T>, Complex<T>, Branch) {
    let r = w.norm();
    if r <= T::lit(SERIES_RADIUS) {
        let (k0, k1) = k01_series(w);
        (k0, k1, Branch::Series)
    } else if r < T::lit(ASYMPTOTIC_RADIUS) {
        let (k0, k1) = k01_steed(w);
        (k0, k1, Branch::ContinuedFraction)
    } else {
        let (k0, k1) = k01_asymptotic(w);
        (k0, k1, Branch::Asymptotic)
    }
}

/// `(H0(z), H1(z))` for `Im z >= 0` through one chosen branch, ignoring the
/// switch radii. Used to check that neighbouring branches agree.
pub fn hankel1_01_by_branch<T: Real>(z: Complex<T>, branch: Branch) -> Result<(Complex<T>, Complex<T>)> {
    check_arg(z)?;
    if z.im < T::zero() {
        return Err(Error::Domain(format!("forced-branch evaluation needs Im z >= 0, got {z}")));
    }
    let w = -ci::<T>() * z;
    let (k0, k1) = match branch {
        Branch::Series => k01_series(w),
        Branch::ContinuedFraction => k01_steed(w),
        Branch::Asymptotic => k01_asymptotic(w),
    };
    Ok(h_from_k(k0, k1))
}

fn k01_series<T: Real>(w: Complex<T>) -> (Complex<T>, Complex<T>) {
    let eps = T::epsilon() * T::lit(0.25);
    let q = w * w * T::lit(0.25);
    let half = T::lit(0.5);
    let ln = (w * half).ln() + cr(T::euler_gamma());
    // k = 0 terms
    let mut t0 = Complex::new(T::one(), T::zero()); // q^k / (k!)^2
    let mut t1 = Complex::new(T::one(), T::zero()); // q^k / (k! (k+1)!)
    let mut i0 = t0;
    let mut s0 = czero::<T>(); // sum H_k q^k/(k!)^2
    let mut i1s = t1;
    // psi(k+1) + psi(k+2) + 2 gamma = 2 H_k + 1/(k+1)
    let mut hk = T::zero();
    let mut s1 = t1; // sum (2 H_k + 1/(k+1)) t1, k=0 term is 1
    for k in 1..500 {
        let kf = T::from_usize_lossy(k);
        t0 = t0 * q / (kf * kf);
        t1 = t1 * q / (kf * (kf + T::one()));
        hk += T::one() / kf;
        i0 += t0;
        s0 += t0 * hk;
        i1s += t1;
        let d1 = t1 * (hk * T::lit(2.0) + T::one() / (kf + T::one()));
        s1 += d1;
        if t0.norm() * (T::one() + hk) <= eps * (i0.norm() + s0.norm()) && d1.norm() <= eps * s1.norm() {
            break;
        }
    }
    let k0 = -ln * i0 + s0;
    // K1 = 1/w + ln(w/2) I1 - (w/4) sum (psi(k+1)+psi(k+2)) t1, psi(k+1)+psi(k+2) = 2H_k + 1/(k+1) - 2 gamma
    let i1 = i1s * w * half;
    let quarter_w = w * T::lit(0.25);
    let psi_sum = s1 - i1s * (T::euler_gamma() * T::lit(2.0));
    let k1 = w.inv() + (w * half).ln() * i1 - quarter_w * psi_sum;
    (k0, k1)
}

/// Steed's algorithm for the second continued fraction (order 0).
fn k01_steed<T: Real>(w: Complex<T>) -> (Complex<T>, Complex<T>) {
    let one = cr::<T>(T::one());
    let two = T::lit(2.0);
    let eps = T::epsilon();
    let mut b = (one + w) * two;
    let mut d = b.inv();
    let mut h = d;
    let mut delh = d;
    let mut q1 = czero::<T>();
    let mut q2 = one;
    let a1 = T::lit(0.25);
    let mut q = cr::<T>(a1);
    let mut cc = cr::<T>(a1);
    let mut a = -a1;
    let mut s = one + q * delh;
    for i in 1..MAX_ITER {
        let fi = T::from_usize_lossy(i);
        a -= two * fi;
        cc = -cc * a / (fi + T::one());
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += cc * qnew;
        b += cr(two);
        d = (b + d * a).inv();
        delh = (b * d - one) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < eps * s.norm() {
            break;
        }
    }
    h *= a1;
    let k0 = (cr::<T>(T::PI()) / (w * two)).sqrt() * (-w).exp() / s;
    let k1 = k0 * (w + cr(T::lit(0.5)) - h) / w;
    (k0, k1)
}

fn k01_asymptotic<T: Real>(w: Complex<T>) -> (Complex<T>, Complex<T>) {
    let eps = T::epsilon() * T::lit(0.25);
    let pref = (cr::<T>(T::PI()) / (w * T::lit(2.0))).sqrt() * (-w).exp();
    let winv = w.inv();
    let mut s0 = cr::<T>(T::one());
    let mut s1 = cr::<T>(T::one());
    let mut t0 = s0;
    let mut t1 = s1;
    let mut last0 = T::infinity();
    let mut last1 = T::infinity();
    let mut done0 = false;
    let mut done1 = false;
    for k in 1..200 {
        let kf = T::from_usize_lossy(k);
        let odd = T::lit(2.0) * kf - T::one();
        let f = winv / (kf * T::lit(8.0));
        if !done0 {
            t0 = t0 * f * (-(odd * odd));
            let m = t0.norm();
            if m >= last0 {
                done0 = true;
            } else {
                s0 += t0;
                last0 = m;
                done0 = m <= eps * s0.norm();
            }
        }
        if !done1 {
            t1 = t1 * f * (T::lit(4.0) - odd * odd);
            let m = t1.norm();
            if m >= last1 {
                done1 = true;
            } else {
                s1 += t1;
                last1 = m;
                done1 = m <= eps * s1.norm();
            }
        }
        if done0 && done1 {
            break;
        }
    }
    (pref * s0, pref * s1)
}

/// `I0, I1` from the Wronskian and the continued fraction for `I1/I0`.
fn i01_wronskian<T: Real>(w: Complex<T>, k0: Complex<T>, k1: Complex<T>) -> (Complex<T>, Complex<T>) {
    let r = ratio_i1_i0(w);
    let i0 = (w * (k1 + r * k0)).inv();
    (i0, r * i0)
}

/// `I1(w)/I0(w) = 1/(2/w + 1/(4/w + ...))` by the modified Lentz method.
fn ratio_i1_i0<T: Real>(w: Complex<T>) -> Complex<T> {
    let tiny = T::min_positive_value().sqrt();
    let eps = T::epsilon();
    let winv = w.inv();
    let one = cr::<T>(T::one());
    // f = b1 + 1/(b2 + 1/(b3 + ...)), b_k = 2k/w; ratio = 1/f
    let mut f = winv * T::lit(2.0);
    if f.norm() < tiny {
        f = cr(tiny);
    }
    let mut cl = f;
    let mut dl = czero::<T>();
    for k in 2..MAX_ITER {
        let bk = winv * T::lit(2.0 * k as f64);
        dl = bk + dl;
        if dl.norm() < tiny {
            dl = cr(tiny);
        }
        cl = bk + one / cl;
        if cl.norm() < tiny {
            cl = cr(tiny);
        }
        dl = dl.inv();
        let delta = cl * dl;
        f *= delta;
        if (delta - one).norm() < eps {
            break;
        }
    }
    f.inv()
}

fn j01_series<T: Real>(z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let eps = T::epsilon() * T::lit(0.25);
    let q = -(z * z) * T::lit(0.25);
    let mut t0 = cr::<T>(T::one());
    let mut t1 = cr::<T>(T::one());
    let mut s0 = t0;
    let mut s1 = t1;
    for k in 1..500 {
        let kf = T::from_usize_lossy(k);
        t0 = t0 * q / (kf * kf);
        t1 = t1 * q / (kf * (kf + T::one()));
        s0 += t0;
        s1 += t1;
        if t0.norm() <= eps * s0.norm().max(T::epsilon()) && t1.norm() <= eps * s1.norm() {
            break;
        }
    }
    (s0, s1 * z * T::lit(0.5))
}

/// Integral `int_0^d J0(kappa v) e^{-lambda v} dv` by its power series in `d`
/// (used for the analytic log coefficient of the kernel). Converges for all `d`;
/// intended for `|kappa d|, |lambda d|` of moderate size.
pub fn j0_exp_integral<T: Real>(kappa: Complex<T>, lambda: Complex<T>, d: T) -> Complex<T> {
    // J0(kappa v) e^{-lambda v} = sum_n c_n v^n; integral = sum c_n d^{n+1}/(n+1).
    let n_max = 400;
    let eps = T::epsilon() * T::lit(0.1);
    let kd = kappa * d;
    let ld = lambda * d;
    // j-coefficients of J0(kd u), u in [0,1]: a_{2m} = (-(kd)^2/4)^m/(m!)^2
    let mut a = vec![czero::<T>(); n_max];
    let q = -(kd * kd) * T::lit(0.25);
    let mut t = cr::<T>(T::one());
    a[0] = t;
    let mut m = 1;
    while 2 * m < n_max {
        let mf = T::from_usize_lossy(m);
        t = t * q / (mf * mf);
        a[2 * m] = t;
        if t.norm() < T::min_positive_value() {
            break;
        }
        m += 1;
    }
    // e^{-ld u} coefficients e_k = (-ld)^k/k!; product via Cauchy convolution, integrated over u in [0,1]
    let mut e = vec![czero::<T>(); n_max];
    e[0] = cr(T::one());
    for k in 1..n_max {
        e[k] = e[k - 1] * (-ld) / T::from_usize_lossy(k);
    }
    let mut sum = czero::<T>();
    let mut small_run = 0;
    for n in 0..n_max {
        let mut cn = czero::<T>();
        let mut j = 0;
        while j <= n {
            cn += a[j] * e[n - j];
            j += 2;
        }
        let term = cn / T::from_usize_lossy(n + 1);
        sum += term;
        if term.norm() <= eps * sum.norm() {
            small_run += 1;
            if small_run >= 3 {
                break;
            }
        } else {
            small_run = 0;
        }
    }
    sum * d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex<f64>, b: Complex<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm()
    }

    // Independent oracle: Bessel J/Y series in their textbook real form.
    fn jy_series_real(x: f64) -> (f64, f64, f64, f64) {
        let q = x * x / 4.0;
        let g = 0.577_215_664_901_532_9_f64;
        let (mut j0, mut j1, mut y0s, mut y1s) = (0.0, 0.0, 0.0, 0.0);
        let mut hk = 0.0;
        let mut fact = 1.0;
        for k in 0..60 {
            if k > 0 {
                hk += 1.0 / k as f64;
                fact *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let t0 = sign * q.powi(k) / (fact * fact);
            let t1 = sign * q.powi(k) / (fact * fact * (k as f64 + 1.0));
            j0 += t0;
            j1 += t1;
            y0s -= t0 * hk;
            let hk1 = hk + 1.0 / (k as f64 + 1.0);
            y1s += t1 * (hk + hk1);
        }
        let j1 = j1 * x / 2.0;
        let l = (x / 2.0).ln() + g;
        let y0 = 2.0 / std::f64::consts::PI * (l * j0 + y0s);
        let y1 = -2.0 / (std::f64::consts::PI * x) + 2.0 / std::f64::consts::PI * l * j1
            - x / (2.0 * std::f64::consts::PI) * y1s;
        (j0, j1, y0, y1)
    }

    #[test]
    fn h0_at_one_matches_oracles() {
        let h = hankel1_0(c(1.0, 0.0)).unwrap();
        let (j0, _, y0, _) = jy_series_real(1.0);
        assert!(close(h, c(j0, y0), 1e-13), "{h}");
        assert!(close(h, c(0.765_197_686_557_966_6, 0.088_256_964_215_676_96), 1e-13));
    }

    #[test]
    fn h1_at_one_matches_oracles() {
        let h = hankel1_1(c(1.0, 0.0)).unwrap();
        let (_, j1, _, y1) = jy_series_real(1.0);
        assert!(close(h, c(j1, y1), 1e-13), "{h}");
        assert!(close(h, c(0.440_050_585_744_933_5, -0.781_212_821_300_288_7), 1e-13));
    }

    #[test]
    fn h0_on_imaginary_axis_is_k0() {
        // K0(1) = -(ln(1/2)+gamma) I0(1) + sum H_k (1/4)^k/(k!)^2
        let mut i0 = 0.0;
        let mut s = 0.0;
        let mut hk = 0.0;
        let mut f = 1.0;
        for k in 0..40 {
            if k > 0 {
                hk += 1.0 / k as f64;
                f *= k as f64;
            }
            let t = 0.25f64.powi(k) / (f * f);
            i0 += t;
            s += hk * t;
        }
        let k0 = -((0.5f64).ln() + 0.577_215_664_901_532_9) * i0 + s;
        let h = hankel1_0(c(0.0, 1.0)).unwrap();
        let want = c(0.0, -2.0 / std::f64::consts::PI * k0);
        assert!(close(h, want, 1e-13), "{h} vs {want}");
        assert!(close(h, c(0.0, -0.268_032_482_033_988_55), 1e-13));
    }

    #[test]
    fn zero_is_domain_error() {
        assert!(matches!(hankel1_0(c(0.0f64, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(hankel1_1(c(0.0f64, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_of_h0_is_minus_h1() {
        let h = 1e-4;
        let z = c(2.0, 0.0);
        let fd = (hankel1_0(z + h).unwrap() - hankel1_0(z - h).unwrap()) / (2.0 * h);
        assert!(close(fd, -hankel1_1(z).unwrap(), 1e-6));
    }

    #[test]
    fn real_axis_gives_real_j_and_y() {
        for &x in &[0.3f64, 1.7, 2.5, 8.0, 16.0, 30.0, 120.0] {
            let e = bessel_eval(c(x, 0.0)).unwrap();
            for v in [e.j0, e.j1, e.y0, e.y1] {
                assert!(v.im.abs() <= 1e-12 * v.norm().max(1e-300), "x={x} {v}");
            }
        }
    }

    #[test]
    fn real_axis_matches_large_argument_reference() {
        // mpmath: J0(30), Y0(30), J1(30), Y1(30)
        let e = bessel_eval(c(30.0f64, 0.0)).unwrap();
        assert!((e.j0.re - -0.086_367_983_581_040_22).abs() < 1e-14);
        assert!((e.y0.re - -0.117_295_731_686_664_03).abs() < 1e-14);
        assert!((e.j1.re - -0.118_751_062_616_622_94).abs() < 1e-14);
        assert!((e.y1.re - 0.084_425_570_661_747_23).abs() < 1e-14);
    }

    #[test]
    fn wronskian_on_real_axis() {
        let mut x = 0.1f64;
        while x <= 50.0 {
            let e = bessel_eval(c(x, 0.0)).unwrap();
            let lhs = e.j1.re * e.y0.re - e.j0.re * e.y1.re;
            let rhs = 2.0 / (std::f64::consts::PI * x);
            assert!((lhs - rhs).abs() <= 1e-9 * rhs, "x={x}");
            x *= 1.07;
        }
    }

    #[test]
    fn branches_agree_at_switch_radii() {
        for &r in &[SERIES_RADIUS, ASYMPTOTIC_RADIUS] {
            for j in 0..=8 {
                let th = std::f64::consts::PI * j as f64 / 8.0;
                let w = Complex::from_polar(r, th - std::f64::consts::FRAC_PI_2);
                let (a0, a1) = if r == SERIES_RADIUS { k01_series(w) } else { k01_asymptotic(w) };
                let (b0, b1) = k01_steed(w);
                assert!(close(a0, b0, 1e-13), "r={r} th={th}");
                assert!(close(a1, b1, 1e-13), "r={r} th={th}");
            }
        }
    }

    #[test]
    fn lower_half_plane_continuation_matches_series() {
        // Inside the series disc the J/Y series is valid in the whole cut plane.
        for &z in &[c(1.2, -0.7), c(-0.4, -1.5), c(0.1, -0.2)] {
            let (h0, h1) = hankel1_01(z).unwrap();
            let (j0, j1) = j01_series(z);
            let (k0, k1) = k01_series(-ci::<f64>() * z);
            // Direct K route is invalid below arg -pi/2 only; compare via Y series instead.
            let _ = (k0, k1);
            let g = 0.577_215_664_901_532_9;
            let l = (z / 2.0).ln() + g;
            let q = z * z / 4.0;
            let mut y0s = c(0.0, 0.0);
            let mut y1s = c(0.0, 0.0);
            let mut t0 = c(1.0, 0.0);
            let mut t1 = c(1.0, 0.0);
            let mut hk = 0.0;
            for k in 0..60 {
                if k > 0 {
                    let kf = k as f64;
                    hk += 1.0 / kf;
                    t0 = -t0 * q / (kf * kf);
                    t1 = -t1 * q / (kf * (kf + 1.0));
                }
                y0s -= t0 * hk;
                y1s += t1 * (2.0 * hk + 1.0 / (k as f64 + 1.0));
            }
            let pi = std::f64::consts::PI;
            let y0 = (l * j0 + y0s) * (2.0 / pi);
            let y1 = -(z * pi).inv() * 2.0 + l * j1 * (2.0 / pi) - z * y1s / (2.0 * pi);
            assert!(close(h0, j0 + ci::<f64>() * y0, 1e-12), "{z}");
            assert!(close(h1, j1 + ci::<f64>() * y1, 1e-12), "{z}");
        }
    }

    #[test]
    fn large_imaginary_argument_is_stable() {
        // H0(i y) = -(2i/pi) K0(y); K0(50) = 3.410167749789496e-23 (mpmath)
        let h = hankel1_0(c(0.0, 50.0)).unwrap();
        let want = c(0.0, -2.0 / std::f64::consts::PI * 3.410_167_749_789_495_5e-23);
        assert!(close(h, want, 1e-12));
    }

    #[test]
    fn j0_exp_integral_matches_quadrature() {
        let kappa = c(-0.002, 0.003);
        let lambda = c(0.01, -0.02);
        let d = 1.7;
        let got = j0_exp_integral(kappa, lambda, d);
        let n = 20000;
        let h = d / n as f64;
        let f = |v: f64| bessel_j01(kappa * v).0 * (-lambda * v).exp();
        let mut s = (f(0.0) + f(d)) * 0.5;
        for i in 1..n {
            s += f(i as f64 * h);
        }
        s *= h;
        assert!(close(got, s, 1e-8));
        let neg = j0_exp_integral(kappa, lambda, -d);
        let f2 = |v: f64| bessel_j01(kappa * v).0 * (-lambda * v).exp();
        let mut s2 = (f2(0.0) + f2(-d)) * 0.5;
        for i in 1..n {
            s2 += f2(-(i as f64) * h);
        }
        s2 *= -h;
        assert!(close(neg, s2, 1e-8));
    }

    #[test]
    fn f32_path_is_usable() {
        let h = hankel1_0(c(1.0f32, 0.0)).unwrap();
        assert!((h.re - 0.765_197_7).abs() < 1e-5 && (h.im - 0.088_256_96).abs() < 1e-5);
    }

    proptest::proptest! {
        #[test]
        fn bessel_equation_residual_is_small(lr in (0.01f64).ln()..(100.0f64).ln(), k in 0usize..3) {
            // H0'' + H0'/z + H0 = 0 with H0' = -H1 and H1' from a Richardson central difference
            let z = Complex::from_polar(lr.exp(), std::f64::consts::FRAC_PI_4 * k as f64);
            let (h0, h1) = hankel1_01(z).unwrap();
            let dir = z / z.norm() * z.norm().min(1.0);
            let d = |h: f64| (hankel1_1(z + dir * h).unwrap() - hankel1_1(z - dir * h).unwrap()) / (dir * (2.0 * h));
            let dh1 = (d(5e-4) * 4.0 - d(1e-3)) / 3.0;
            let res = -dh1 - h1 / z + h0;
            let scale = h0.norm().max((h1 / z).norm()).max(dh1.norm());
            proptest::prop_assert!(res.norm() < 1e-8 * scale, "z={} res={}", z, res.norm() / scale);
        }
    }
}
