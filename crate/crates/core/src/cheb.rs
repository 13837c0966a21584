//! Chebyshev grids, coefficient transforms, and the finite Hilbert transform
//! `T[f](x) = (1/pi) PV int_{-1}^{1} f(xi) / (xi - x) dxi` with its Tricomi
//! right inverse.
//!
//! Both operators act in coefficient space through the exact pairs
//!
//! ```text
//! T[ T_k / sqrt(1-x^2) ]          = U_{k-1}     (k >= 1),   T[ 1/sqrt(1-x^2) ] = 0
//! T[ sqrt(1-x^2) U_{k-1} ]        = -T_k
//! ```
//!
//! Values live on first-kind Chebyshev points `x_j = cos((j + 1/2) pi / n)`.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::quad;
use crate::real::{czero, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// Zeros of `T_n`; the grid used by every transform and solve.
    FirstKind,
    /// Zeros of `U_n`; quadrature only.
    SecondKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointClass {
    Bounded,
    /// `f(x) = g(x) / sqrt(1 - x^2)`; the stored values are `g`.
    InverseSqrtSingular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChebGrid<T> {
    pub n: usize,
    /// Strictly decreasing, symmetric about zero.
    pub nodes: Vec<T>,
    /// Fejér weights for `int_{-1}^{1} f(x) dx`.
    pub quad_weights: Vec<T>,
    pub weight_kind: WeightKind,
    /// `theta_j` with `x_j = cos(theta_j)`.
    pub angles: Vec<T>,
}

impl<T: Real> ChebGrid<T> {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_kind(n, WeightKind::FirstKind)
    }

    pub fn with_kind(n: usize, kind: WeightKind) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("Chebyshev grid needs n >= 2, got {n}")));
        }
        let nf = n as f64;
        let pi = std::f64::consts::PI;
        let angles: Vec<f64> = match kind {
            WeightKind::FirstKind => (0..n).map(|j| (j as f64 + 0.5) * pi / nf).collect(),
            WeightKind::SecondKind => (1..=n).map(|j| j as f64 * pi / (nf + 1.0)).collect(),
        };
        let weights: Vec<f64> = match kind {
            WeightKind::FirstKind => angles
                .iter()
                .map(|&th| {
                    let mut s = 0.0;
                    for k in 1..=n / 2 {
                        let kf = k as f64;
                        s += (2.0 * kf * th).cos() / (4.0 * kf * kf - 1.0);
                    }
                    2.0 / nf * (1.0 - 2.0 * s)
                })
                .collect(),
            WeightKind::SecondKind => {
                let big_n = n + 1;
                angles
                    .iter()
                    .map(|&th| {
                        let mut s = 0.0;
                        for k in 1..=big_n / 2 {
                            let m = (2 * k - 1) as f64;
                            s += (m * th).sin() / m;
                        }
                        4.0 * th.sin() / big_n as f64 * s
                    })
                    .collect()
            }
        };
        // Symmetrize explicitly so nodes are exactly antisymmetric.
        let mut nodes: Vec<f64> = angles.iter().map(|t| t.cos()).collect();
        for j in 0..n / 2 {
            let v = 0.5 * (nodes[j] - nodes[n - 1 - j]);
            nodes[j] = v;
            nodes[n - 1 - j] = -v;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(ChebGrid {
            n,
            nodes: nodes.into_iter().map(T::lit).collect(),
            quad_weights: weights.into_iter().map(T::lit).collect(),
            weight_kind: kind,
            angles: angles.into_iter().map(T::lit).collect(),
        })
    }

    /// `sqrt(1 - x_j^2) = sin(theta_j)`, exact to roundoff at the endpoints.
    pub fn sqrt_weight(&self) -> Vec<T> {
        self.angles.iter().map(|t| t.sin()).collect()
    }

    fn require_first_kind(&self) -> Result<()> {
        if self.weight_kind != WeightKind::FirstKind {
            return Err(Error::Domain("coefficient transforms require a first-kind grid".into()));
        }
        Ok(())
    }

    /// Chebyshev coefficients `a_k` of the degree `n-1` interpolant,
    /// `f = sum a_k T_k`, via a length-`2n` FFT.
    pub fn values_to_coeffs(&self, values: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.require_first_kind()?;
        let n = self.n;
        if values.len() != n {
            return Err(Error::GridMismatch { expected: n, found: values.len() });
        }
        let mut buf = vec![czero::<T>(); 2 * n];
        for j in 0..n {
            buf[j] = values[j];
            buf[2 * n - 1 - j] = values[j];
        }
        T::fft(&mut buf, false);
        let nf = T::from_usize_lossy(n);
        let step = T::PI() / (nf * T::lit(2.0));
        let mut out = Vec::with_capacity(n);
        for (k, y) in buf.iter().take(n).enumerate() {
            let ang = -step * T::from_usize_lossy(k);
            let tw = Complex::new(ang.cos(), ang.sin());
            let scale = if k == 0 { T::one() / nf } else { T::lit(2.0) / nf };
            out.push(tw * *y * (T::lit(0.5) * scale));
        }
        Ok(out)
    }

    /// Inverse of [`Self::values_to_coeffs`]; coefficients beyond `n-1` are
    /// truncated except `T_n`, which vanishes at the nodes.
    pub fn coeffs_to_values(&self, coeffs: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.require_first_kind()?;
        let n = self.n;
        let mut buf = vec![czero::<T>(); 2 * n];
        let nf = T::from_usize_lossy(n);
        let step = T::PI() / (nf * T::lit(2.0));
        let half = T::lit(0.5);
        for (k, a) in coeffs.iter().enumerate().take(n) {
            if k == 0 {
                buf[0] = *a;
            } else {
                let ang = step * T::from_usize_lossy(k);
                let tw = Complex::new(ang.cos(), ang.sin());
                buf[k] = *a * tw * half;
                buf[2 * n - k] = *a * tw.conj() * half;
            }
        }
        T::fft(&mut buf, true);
        buf.truncate(n);
        Ok(buf)
    }

    /// Fejér quadrature of node values.
    pub fn integrate(&self, values: &[Complex<T>]) -> Complex<T> {
        values
            .iter()
            .zip(&self.quad_weights)
            .fold(czero(), |acc, (v, w)| acc + *v * *w)
    }
}

/// `U`-coefficients to `T`-coefficients: `U_m = 2 (T_m + T_{m-2} + ...)`, last
/// term `T_0` (weight 1) or `2 T_1`.
pub fn u_to_t<T: Real>(b: &[Complex<T>]) -> Vec<Complex<T>> {
    let m = b.len();
    let mut a = vec![czero::<T>(); m];
    let two = T::lit(2.0);
    // a_k = 2 sum_{j >= k, j-k even} b_j, except a_0 = sum_{j even} b_j
    let mut run_even = czero::<T>();
    let mut run_odd = czero::<T>();
    for k in (0..m).rev() {
        if k % 2 == 0 {
            run_even += b[k];
            a[k] = run_even * two;
        } else {
            run_odd += b[k];
            a[k] = run_odd * two;
        }
    }
    if m > 0 {
        a[0] = run_even;
    }
    a
}

/// `T`-coefficients to `U`-coefficients: `T_0 = U_0`, `T_1 = U_1 / 2`,
/// `T_k = (U_k - U_{k-2}) / 2`.
pub fn t_to_u<T: Real>(a: &[Complex<T>]) -> Vec<Complex<T>> {
    let m = a.len();
    let half = T::lit(0.5);
    let mut b = vec![czero::<T>(); m];
    for k in 0..m {
        if k == 0 {
            b[0] += a[0];
        } else {
            b[k] += a[k] * half;
            if k >= 2 {
                b[k - 2] -= a[k] * half;
            }
        }
    }
    b
}

/// Clenshaw evaluation of `sum a_k T_k(x)`.
pub fn clenshaw<T: Real>(coeffs: &[Complex<T>], x: T) -> Complex<T> {
    let mut b1 = czero::<T>();
    let mut b2 = czero::<T>();
    let x2 = x * T::lit(2.0);
    for a in coeffs.iter().skip(1).rev() {
        let b0 = *a + b1 * x2 - b2;
        b2 = b1;
        b1 = b0;
    }
    match coeffs.first() {
        Some(a0) => *a0 + b1 * x - b2,
        None => czero(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChordFunction<T> {
    pub grid: Arc<ChebGrid<T>>,
    pub values: Vec<Complex<T>>,
    pub endpoint_class: EndpointClass,
}

impl<T: Real> ChordFunction<T> {
    pub fn new(grid: Arc<ChebGrid<T>>, values: Vec<Complex<T>>, class: EndpointClass) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch { expected: grid.n, found: values.len() });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Data("chord function values must be finite".into()));
        }
        Ok(ChordFunction { grid, values, endpoint_class: class })
    }

    pub fn zeros(grid: Arc<ChebGrid<T>>, class: EndpointClass) -> Self {
        let n = grid.n;
        ChordFunction { grid, values: vec![czero(); n], endpoint_class: class }
    }

    /// Samples a bounded function.
    pub fn from_fn(grid: Arc<ChebGrid<T>>, f: impl Fn(T) -> Complex<T>) -> Self {
        let values = grid.nodes.iter().map(|&x| f(x)).collect();
        ChordFunction { grid, values, endpoint_class: EndpointClass::Bounded }
    }

    /// Samples `g` for an inverse-sqrt-singular function `g / sqrt(1-x^2)`.
    pub fn from_cofactor(grid: Arc<ChebGrid<T>>, g: impl Fn(T) -> Complex<T>) -> Self {
        let values = grid.nodes.iter().map(|&x| g(x)).collect();
        ChordFunction { grid, values, endpoint_class: EndpointClass::InverseSqrtSingular }
    }

    /// Chebyshev coefficients of the stored values.
    pub fn coeffs(&self) -> Result<Vec<Complex<T>>> {
        self.grid.values_to_coeffs(&self.values)
    }

    /// Evaluates the represented function at any interior `x`.
    pub fn eval(&self, x: T) -> Result<Complex<T>> {
        let a = self.coeffs()?;
        let g = clenshaw(&a, x);
        Ok(match self.endpoint_class {
            EndpointClass::Bounded => g,
            EndpointClass::InverseSqrtSingular => g / (T::one() - x * x).sqrt(),
        })
    }

    /// `int_{-1}^{1} f(x) dx`; exact (Gauss–Chebyshev) for the singular class.
    pub fn integral(&self) -> Complex<T> {
        match self.endpoint_class {
            EndpointClass::Bounded => self.grid.integrate(&self.values),
            EndpointClass::InverseSqrtSingular => {
                let w = T::PI() / T::from_usize_lossy(self.grid.n);
                self.values.iter().fold(czero::<T>(), |acc, v| acc + *v) * w
            }
        }
    }

    /// `int_{-1}^{1} x f(x) dx`.
    pub fn first_moment(&self) -> Complex<T> {
        match self.endpoint_class {
            EndpointClass::Bounded => {
                let v: Vec<_> = self.values.iter().zip(&self.grid.nodes).map(|(v, x)| *v * *x).collect();
                self.grid.integrate(&v)
            }
            EndpointClass::InverseSqrtSingular => {
                let w = T::PI() / T::from_usize_lossy(self.grid.n);
                self.values
                    .iter()
                    .zip(&self.grid.nodes)
                    .fold(czero::<T>(), |acc, (v, x)| acc + *v * *x)
                    * w
            }
        }
    }

    /// `int |f|^q dx` by double-exponential quadrature of the interpolant.
    pub fn lq_integral(&self, q: T) -> Result<T> {
        let a = self.coeffs()?;
        let class = self.endpoint_class;
        let v = quad::tanh_sinh(
            |x: T, d: T| {
                let g = clenshaw(&a, x);
                let f = match class {
                    EndpointClass::Bounded => g.norm(),
                    // 1 - x^2 = d (2 - d) near either endpoint
                    EndpointClass::InverseSqrtSingular => g.norm() / (d * (T::lit(2.0) - d)).sqrt(),
                };
                Complex::new(f.powf(q), T::zero())
            },
            -T::one(),
            T::one(),
            T::lit(1e-10),
        );
        Ok(v.re)
    }

    fn check_grid(&self, other: &ChordFunction<T>) -> Result<()> {
        if self.grid.n != other.grid.n || self.grid.weight_kind != other.grid.weight_kind {
            return Err(Error::GridMismatch { expected: self.grid.n, found: other.grid.n });
        }
        Ok(())
    }

    pub fn add(&self, other: &ChordFunction<T>) -> Result<ChordFunction<T>> {
        self.check_grid(other)?;
        if self.endpoint_class != other.endpoint_class {
            return Err(Error::EndpointClass("cannot add functions of different endpoint classes".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| *a + *b).collect();
        Ok(ChordFunction { grid: self.grid.clone(), values, endpoint_class: self.endpoint_class })
    }

    pub fn scale(&self, k: Complex<T>) -> ChordFunction<T> {
        ChordFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| *v * k).collect(),
            endpoint_class: self.endpoint_class,
        }
    }

    /// Grid max-norm distance of the represented values.
    pub fn max_diff(&self, other: &ChordFunction<T>) -> Result<T> {
        self.check_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm())))
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }
}

/// Finite Hilbert transform at the grid nodes.
pub fn finite_hilbert<T: Real>(f: &ChordFunction<T>) -> Result<ChordFunction<T>> {
    let grid = &f.grid;
    if grid.n < 4 {
        return Err(Error::Config(format!("finite Hilbert transform needs n >= 4, got {}", grid.n)));
    }
    grid.require_first_kind()?;
    let n = grid.n;
    let values = match f.endpoint_class {
        EndpointClass::InverseSqrtSingular => {
            // g = sum a_k T_k  ->  T[g/sqrt] = sum_{k>=1} a_k U_{k-1}
            let a = grid.values_to_coeffs(&f.values)?;
            let mut b = vec![czero::<T>(); n];
            b[..n - 1].copy_from_slice(&a[1..n]);
            grid.coeffs_to_values(&u_to_t(&b))?
        }
        EndpointClass::Bounded => {
            // f = sqrt(1-x^2) h,  h = sum c_m U_m  ->  T[f] = -sum c_m T_{m+1}
            let sw = grid.sqrt_weight();
            let h: Vec<_> = f.values.iter().zip(&sw).map(|(v, w)| *v / *w).collect();
            let c = t_to_u(&grid.values_to_coeffs(&h)?);
            let mut a = vec![czero::<T>(); n];
            for m in 0..n - 1 {
                a[m + 1] = -c[m];
            }
            // c_{n-1} T_n vanishes at the nodes
            grid.coeffs_to_values(&a)?
        }
    };
    Ok(ChordFunction { grid: f.grid.clone(), values, endpoint_class: EndpointClass::Bounded })
}

/// Tricomi right inverse: `g = sum b_k U_k` maps to `p = sum b_k T_{k+1} / sqrt(1-x^2)`.
pub fn inverse_finite_hilbert<T: Real>(g: &ChordFunction<T>) -> Result<ChordFunction<T>> {
    if g.endpoint_class != EndpointClass::Bounded {
        return Err(Error::EndpointClass(
            "the Tricomi inverse accepts bounded data only".into(),
        ));
    }
    let grid = &g.grid;
    if grid.n < 4 {
        return Err(Error::Config(format!("Tricomi inverse needs n >= 4, got {}", grid.n)));
    }
    let b = t_to_u(&grid.values_to_coeffs(&g.values)?);
    let values = grid.coeffs_to_values(&tinv_coeffs(&b))?;
    Ok(ChordFunction { grid: g.grid.clone(), values, endpoint_class: EndpointClass::InverseSqrtSingular })
}

/// Cofactor `T`-coefficients of `T^{-1}[g]` from the `U`-coefficients of `g`.
pub fn tinv_coeffs<T: Real>(b: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut a = vec![czero::<T>(); b.len() + 1];
    for (k, bk) in b.iter().enumerate() {
        a[k + 1] = *bk;
    }
    a
}

/// Dense `n x n` real matrix of the node map `g |-> cofactor of T^{-1}[g]`.
pub fn tinv_matrix<T: Real>(grid: &ChebGrid<T>) -> Result<Vec<Vec<T>>> {
    let n = grid.n;
    let mut cols = vec![vec![T::zero(); n]; n];
    for j in 0..n {
        let mut e = vec![czero::<T>(); n];
        e[j] = Complex::new(T::one(), T::zero());
        let b = t_to_u(&grid.values_to_coeffs(&e)?);
        let v = grid.coeffs_to_values(&tinv_coeffs(&b))?;
        for i in 0..n {
            cols[j][i] = v[i].re;
        }
    }
    // return row-major
    let mut rows = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            rows[i][j] = cols[j][i];
        }
    }
    Ok(rows)
}

/// Product-integration weights `w_j(x)` with
/// `int ln|x - xi| f(xi) / sqrt(1-xi^2) dxi ~= sum_j w_j(x) f(xi_j)`,
/// exact for polynomials `f` of degree `< n`.
pub fn log_weights<T: Real>(grid: &ChebGrid<T>, x: T) -> Vec<T> {
    let n = grid.n;
    let nf = T::from_usize_lossy(n);
    let ln2 = T::LN_2();
    // T_k(x) for k < n
    let mut tk = vec![T::zero(); n];
    tk[0] = T::one();
    if n > 1 {
        tk[1] = x;
    }
    for k in 2..n {
        tk[k] = T::lit(2.0) * x * tk[k - 1] - tk[k - 2];
    }
    grid.angles
        .iter()
        .map(|&th| {
            let mut s = T::zero();
            for (k, t) in tk.iter().enumerate().skip(1) {
                s += *t * (T::from_usize_lossy(k) * th).cos() / T::from_usize_lossy(k);
            }
            -(T::PI() / nf) * (ln2 + T::lit(2.0) * s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::c;
    use rand::{Rng, SeedableRng};

    fn grid(n: usize) -> Arc<ChebGrid<f64>> {
        Arc::new(ChebGrid::new(n).unwrap())
    }

    /// PV oracle: singularity subtraction, each side integrated in theta
    /// (`xi = cos theta`) with a dense Gauss–Legendre rule.
    fn pv_oracle(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let r = quad::gauss_legendre(400);
        let fx = f(x);
        let tx = x.acos();
        let mut s = 0.0;
        for (a, b) in [(0.0, tx), (tx, std::f64::consts::PI)] {
            for (t, w) in r.nodes.iter().zip(&r.weights) {
                let th = 0.5 * (b - a) * t + 0.5 * (a + b);
                let xi = th.cos();
                s += 0.5 * (b - a) * w * th.sin() * (f(xi) - fx) / (xi - x);
            }
        }
        (s + fx * ((1.0 - x) / (1.0 + x)).ln()) / std::f64::consts::PI
    }

    #[test]
    fn nodes_and_weights() {
        let g = ChebGrid::<f64>::new(33).unwrap();
        assert!(g.nodes.windows(2).all(|w| w[0] > w[1]));
        for j in 0..33 {
            assert_eq!(g.nodes[j], -g.nodes[32 - j]);
        }
        for deg in 0..33 {
            let v: Vec<_> = g.nodes.iter().map(|x| c(x.powi(deg), 0.0)).collect();
            let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((g.integrate(&v).re - want).abs() < 1e-13, "deg {deg}");
        }
        let g2 = ChebGrid::<f64>::with_kind(32, WeightKind::SecondKind).unwrap();
        assert!(g2.quad_weights.iter().all(|&w| w > 0.0));
        for deg in 0..32 {
            let v: Vec<_> = g2.nodes.iter().map(|x| c(x.powi(deg), 0.0)).collect();
            let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((g2.integrate(&v).re - want).abs() < 1e-13, "deg {deg}");
        }
        assert!(g2.values_to_coeffs(&vec![c(0.0, 0.0); 32]).is_err());
    }

    #[test]
    fn dct_round_trip_matches_direct_sum() {
        let g = grid(17);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let v: Vec<_> = (0..17).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let a = g.values_to_coeffs(&v).unwrap();
        for k in 0..17 {
            let mut s = c(0.0, 0.0);
            for j in 0..17 {
                s += v[j] * (k as f64 * g.angles[j]).cos();
            }
            s *= if k == 0 { 1.0 / 17.0 } else { 2.0 / 17.0 };
            assert!((s - a[k]).norm() < 1e-14);
        }
        let back = g.coeffs_to_values(&a).unwrap();
        for j in 0..17 {
            assert!((back[j] - v[j]).norm() < 1e-14);
        }
    }

    #[test]
    fn basis_conversions_invert() {
        let a: Vec<_> = (0..9).map(|k| c(k as f64 + 1.0, -(k as f64))).collect();
        let back = u_to_t(&t_to_u(&a));
        for k in 0..9 {
            assert!((back[k] - a[k]).norm() < 1e-13);
        }
    }

    #[test]
    fn hilbert_of_sqrt_is_minus_x() {
        let g = grid(64);
        let f = ChordFunction::from_fn(g.clone(), |x| c((1.0 - x * x).sqrt(), 0.0));
        let t = finite_hilbert(&f).unwrap();
        for (v, x) in t.values.iter().zip(&g.nodes) {
            assert!((v.re + x).abs() < 1e-13 && v.im.abs() < 1e-14);
        }
        // pointwise check at x = 0.5 against the PV oracle
        let oracle = pv_oracle(|xi| (1.0 - xi * xi).sqrt(), 0.5);
        assert!((oracle + 0.5).abs() < 1e-9, "{oracle}");
        assert!((t.eval(0.5).unwrap().re - oracle).abs() < 1e-9);
    }

    #[test]
    fn hilbert_of_inverse_sqrt_is_zero() {
        let g = grid(32);
        let f = ChordFunction::from_cofactor(g.clone(), |_| c(1.0, 0.0));
        let t = finite_hilbert(&f).unwrap();
        assert!(t.max_abs() < 1e-14);
        let zero = ChordFunction::zeros(g, EndpointClass::Bounded);
        assert_eq!(finite_hilbert(&zero).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn hilbert_of_weighted_t3_matches_oracle() {
        // T[T_3/sqrt] = U_2 = 4x^2 - 1; oracle through theta substitution
        let g = grid(32);
        let f = ChordFunction::from_cofactor(g.clone(), |x| c(4.0 * x * x * x - 3.0 * x, 0.0));
        let t = finite_hilbert(&f).unwrap();
        for (v, x) in t.values.iter().zip(&g.nodes) {
            assert!((v.re - (4.0 * x * x - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn tricomi_inverse_example() {
        let g = grid(64);
        let rhs = ChordFunction::from_fn(g.clone(), |x| c(-x, 0.0));
        let p = inverse_finite_hilbert(&rhs).unwrap();
        assert_eq!(p.endpoint_class, EndpointClass::InverseSqrtSingular);
        for (v, x) in p.values.iter().zip(&g.nodes) {
            assert!((v.re - (0.5 - x * x)).abs() < 1e-13);
        }
        let back = finite_hilbert(&p).unwrap();
        assert!(back.max_diff(&rhs).unwrap() < 1e-12);
        assert!(matches!(inverse_finite_hilbert(&p), Err(Error::EndpointClass(_))));
        let z = ChordFunction::zeros(g, EndpointClass::Bounded);
        assert_eq!(inverse_finite_hilbert(&z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn tricomi_inverse_matches_integral_formula() {
        // T^{-1}[g](x) = -(1/pi) PV int sqrt((1-y^2)/(1-x^2)) g(y)/(y-x) dy, g = exp(y)
        let g = grid(40);
        let rhs = ChordFunction::from_fn(g.clone(), |x| c(x.exp(), 0.0));
        let p = inverse_finite_hilbert(&rhs).unwrap();
        for &x in &[-0.7, 0.1, 0.55] {
            let pv = pv_oracle(|y| (1.0 - y * y).sqrt() * y.exp(), x);
            let want = -pv / (1.0 - x * x).sqrt();
            let got = p.eval(x).unwrap().re;
            assert!((got - want).abs() < 1e-9, "x={x} {got} {want}");
        }
    }

    #[test]
    fn null_direction_of_left_composition() {
        let g = grid(64);
        let f = ChordFunction::from_cofactor(g.clone(), |x| c(1.5 + x * x - 0.3 * x.powi(3), 0.2 * x));
        let back = inverse_finite_hilbert(&finite_hilbert(&f).unwrap()).unwrap();
        let diff: Vec<_> = back.values.iter().zip(&f.values).map(|(a, b)| *a - *b).collect();
        let a = g.values_to_coeffs(&diff).unwrap();
        // all of the discrepancy lies along T_0 / sqrt(1-x^2)
        let rest = a.iter().skip(1).fold(0.0f64, |m, v| m.max(v.norm()));
        assert!(rest < 1e-12);
        assert!((a[0] + c(1.5 + 0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn log_weights_exact_for_chebyshev_polynomials() {
        // int ln|x-xi| T_k(xi)/sqrt(1-xi^2) = -pi T_k(x)/k, and -pi ln 2 for k = 0
        let g = ChebGrid::<f64>::new(24).unwrap();
        for &x in &[0.3, -0.91, g.nodes[5]] {
            let w = log_weights(&g, x);
            for k in 0..24usize {
                let got: f64 = w.iter().zip(&g.angles).map(|(w, t)| w * (k as f64 * t).cos()).sum();
                let tk = (k as f64 * x.acos()).cos();
                let want = if k == 0 {
                    -std::f64::consts::PI * std::f64::consts::LN_2
                } else {
                    -std::f64::consts::PI * tk / k as f64
                };
                assert!((got - want).abs() < 1e-13, "x={x} k={k}");
            }
        }
    }

    #[test]
    fn lq_integral_of_inverse_sqrt() {
        // int (1-x^2)^{-q/2} dx = sqrt(pi) Gamma(1-q/2)/Gamma(3/2-q/2); q=1: pi
        let g = grid(16);
        let f = ChordFunction::from_cofactor(g, |_| c(1.0, 0.0));
        let v = f.lq_integral(1.0).unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-8, "{v}");
        assert!(f.lq_integral(1.3).unwrap().is_finite());
    }

    #[test]
    fn integral_and_moment() {
        let g = grid(16);
        let f = ChordFunction::from_cofactor(g.clone(), |x| c(x, 0.0));
        assert!(f.integral().norm() < 1e-15);
        assert!((f.first_moment().re - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        let b = ChordFunction::from_fn(g, |x| c(x * x, 0.0));
        assert!((b.integral().re - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_pairs_hold_at_the_nodes() {
        // T[sqrt(1-x^2) U_{k-1}] = -T_k and T[T_k / sqrt(1-x^2)] = U_{k-1}
        let n = 64;
        let g = grid(n);
        for k in 1..=n / 2 {
            let kf = k as f64;
            let u = |th: f64| (kf * th).sin() / th.sin();
            let f = ChordFunction::from_fn(g.clone(), |x| c((1.0 - x * x).sqrt() * u(x.acos()), 0.0));
            let tf = finite_hilbert(&f).unwrap();
            let h = ChordFunction::from_cofactor(g.clone(), |x| c((kf * x.acos()).cos(), 0.0));
            let th = finite_hilbert(&h).unwrap();
            for (j, x) in g.nodes.iter().enumerate() {
                let t = x.acos();
                assert!((tf.values[j].re + (kf * t).cos()).abs() < 1e-10, "k={k}");
                assert!((th.values[j].re - u(t)).abs() < 1e-10 * kf, "k={k}");
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn right_inverse_on_random_polynomials(seed in 0u64..u64::MAX, deg in 0usize..=64) {
            let g = grid(128);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<Complex<f64>> = (0..=deg).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let f = ChordFunction::from_fn(g.clone(), |x| clenshaw(&a, x));
            let back = finite_hilbert(&inverse_finite_hilbert(&f).unwrap()).unwrap();
            proptest::prop_assert!(back.max_diff(&f).unwrap() < 1e-8 * f.max_abs().max(1.0));
        }
    }
}
