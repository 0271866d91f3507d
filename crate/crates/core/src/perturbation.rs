//! Perturbation of a simple Perron eigenvalue under diagonal rescaling `M(x) = D(x)M`.
//!
//! `D(x) = I + D₁x + D₂x² + …` is given by coefficient diagonals; `λ(x) = λ + λ₁x + λ₂x² + …`
//! uses the same series convention, so `λ₂ = λ''(0)/2`.

use num_complex::Complex64;

use crate::error::{hypothesis, invalid, Error, Result};
use crate::graph::MultiGraph;
use crate::linalg::{self, CMat, Mat, Vect};

/// Perron eigenvalue of a nonnegative primitive matrix with its spectral projection and
/// reduced resolvent.
#[derive(Clone, Debug)]
pub struct PerronData {
    pub k: usize,
    pub matrix: Mat,
    pub lambda: f64,
    /// Right eigenvector, unit length, positive entries.
    pub v: Vect,
    /// Left eigenvector scaled so that `wᵗv = 1`.
    pub w: Vect,
    /// `P = v wᵗ`.
    pub projection: Mat,
    /// `S` with `SP = PS = 0` and `(M − λI)S = I − P`.
    pub reduced_resolvent: Mat,
}

impl PerronData {
    pub fn eigen_residual(&self) -> f64 {
        (&self.matrix * &self.v - &self.v * self.lambda).norm()
    }

    /// Max-norm residuals of `SP`, `PS`, `(M − λI)S − (I − P)`, `S(M − λI) − (I − P)`
    /// and `MS − (I − P + λS)`.
    pub fn resolvent_residuals(&self) -> [f64; 5] {
        let k = self.k;
        let i = Mat::identity(k, k);
        let s = &self.reduced_resolvent;
        let p = &self.projection;
        let n = &self.matrix - &i * self.lambda;
        let q = &i - p;
        let amax = |m: Mat| m.amax();
        [
            amax(s * p),
            amax(p * s),
            amax(&n * s - &q),
            amax(s * &n - &q),
            amax(&self.matrix * s - (&q + s * self.lambda)),
        ]
    }

    pub fn is_symmetric(&self) -> bool {
        (&self.matrix - self.matrix.transpose()).amax() <= 1e-12 * self.matrix.amax().max(1.0)
    }

    /// True when the right eigenvector is proportional to the constant vector.
    pub fn is_constant_eigenvector(&self, tol: f64) -> bool {
        let c = 1.0 / (self.k as f64).sqrt();
        self.v.iter().all(|x| (x - c).abs() <= tol)
    }
}

/// Perron data of a square nonnegative irreducible primitive matrix.
pub fn perron_data(m: &Mat) -> Result<PerronData> {
    let k = m.nrows();
    if k == 0 || m.ncols() != k {
        return invalid("matrix must be square and non-empty");
    }
    if m.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return invalid("matrix has a negative or non-finite entry");
    }
    let adj = (0..k).map(|i| (0..k).map(|j| (m[(i, j)] > 0.0) as u32).collect()).collect();
    let support = MultiGraph::from_adjacency(true, adj)?;
    if !support.is_connected() {
        return hypothesis("matrix is reducible");
    }
    if !support.is_primitive() {
        return hypothesis(format!("matrix is imprimitive (period {})", support.period().unwrap_or(0)));
    }
    let lambda = linalg::spectral_radius(m);
    let v = positive_null_vector(m, lambda)?;
    let wr = positive_null_vector(&m.transpose(), lambda)?;
    let w = &wr / wr.dot(&v);
    let projection = &v * w.transpose();
    let i = Mat::identity(k, k);
    let s = linalg::inverse(&(m - &i * lambda + &projection))? - &projection;
    Ok(PerronData { k, matrix: m.clone(), lambda, v, w, projection, reduced_resolvent: s })
}

/// Unit null vector of `M − λI` with positive entries, refined by inverse iteration.
fn positive_null_vector(m: &Mat, lambda: f64) -> Result<Vect> {
    let k = m.nrows();
    let n = m - Mat::identity(k, k) * lambda;
    let svd = n.clone().svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::NoConvergence("singular value decomposition failed".into()))?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let mut v = Vect::from_iterator(k, vt.row(idx).iter().copied());
    if v.sum() < 0.0 {
        v = -v;
    }
    // A couple of shifted inverse-iteration steps tighten the residual.
    let shift = lambda * (1.0 + 1e-10) + 1e-14;
    if let Some(lu) = Some((m - Mat::identity(k, k) * shift).lu()) {
        for _ in 0..3 {
            if let Some(next) = lu.solve(&v) {
                let nn = next.norm();
                if nn.is_finite() && nn > 0.0 {
                    v = next / nn;
                }
            }
        }
    }
    if v.sum() < 0.0 {
        v = -v;
    }
    v /= v.norm();
    if v.iter().any(|&x| x <= 0.0) {
        return Err(Error::NoConvergence("Perron vector is not positive".into()));
    }
    Ok(v)
}

fn cdiag(d: &[Complex64]) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_column_slice(d))
}

fn complexify(m: &Mat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

fn check_diag(pd: &PerronData, d: &[Complex64]) -> Result<()> {
    if d.len() != pd.k {
        return Err(Error::DimensionMismatch { expected: pd.k, got: d.len() });
    }
    Ok(())
}

fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `λ₁ = tr(D₁MP)`, which equals `λ wᵗD₁v` (and `λ vᵗD₁v` for symmetric `M`).
pub fn lambda_first(pd: &PerronData, d1: &[Complex64]) -> Result<Complex64> {
    check_diag(pd, d1)?;
    let m = complexify(&pd.matrix);
    Ok(trace(&(cdiag(d1) * m * complexify(&pd.projection))))
}

/// `λ₂ = tr(M₂P − M₁SM₁P)` with `M₁ = D₁M`, `M₂ = D₂M`.
pub fn lambda_second(pd: &PerronData, d1: &[Complex64], d2: &[Complex64]) -> Result<Complex64> {
    check_diag(pd, d1)?;
    check_diag(pd, d2)?;
    let m = complexify(&pd.matrix);
    let p = complexify(&pd.projection);
    let s = complexify(&pd.reduced_resolvent);
    let m1 = cdiag(d1) * &m;
    let m2 = cdiag(d2) * &m;
    Ok(trace(&(&m2 * &p)) - trace(&(&m1 * s * &m1 * p)))
}

/// `λ₂ = λ wᵗ[D₂ − D₁(I − P)D₁ − λD₁SD₁]v`, the same quantity after `MS = I − P + λS`.
pub fn lambda_second_eigenvector_form(pd: &PerronData, d1: &[Complex64], d2: &[Complex64]) -> Result<Complex64> {
    check_diag(pd, d1)?;
    check_diag(pd, d2)?;
    let k = pd.k;
    let i = CMat::identity(k, k);
    let p = complexify(&pd.projection);
    let s = complexify(&pd.reduced_resolvent);
    let dd1 = cdiag(d1);
    let lam = Complex64::new(pd.lambda, 0.0);
    let inner = cdiag(d2) - &dd1 * (i - p) * &dd1 - &dd1 * s * &dd1 * lam;
    let v = pd.v.map(|x| Complex64::new(x, 0.0));
    let w = pd.w.map(|x| Complex64::new(x, 0.0));
    Ok(lam * (w.transpose() * inner * v)[(0, 0)])
}

/// Coordinate form for a constant Perron vector:
/// `λ₂ = (λ/k)[Σd₂ − Σd₁² + (Σd₁)²/k − λ d₁ᵗSd₁]`.
pub fn lambda_second_coordinates(pd: &PerronData, d1: &[Complex64], d2: &[Complex64]) -> Result<Complex64> {
    coordinates(pd, d1, d2, true)
}

/// The coordinate form without the `(Σd₁)²/k` term; differs whenever `Σd₁ ≠ 0`.
pub fn lambda_second_coordinates_printed(pd: &PerronData, d1: &[Complex64], d2: &[Complex64]) -> Result<Complex64> {
    coordinates(pd, d1, d2, false)
}

fn coordinates(pd: &PerronData, d1: &[Complex64], d2: &[Complex64], mean_term: bool) -> Result<Complex64> {
    check_diag(pd, d1)?;
    check_diag(pd, d2)?;
    if !pd.is_constant_eigenvector(1e-9) {
        return hypothesis("Perron vector is not constant");
    }
    let k = pd.k as f64;
    let lam = pd.lambda;
    let s = complexify(&pd.reduced_resolvent);
    let x = nalgebra::DVector::from_column_slice(d1);
    let sd: Complex64 = d2.iter().sum();
    let sq: Complex64 = d1.iter().map(|z| z * z).sum();
    let s1: Complex64 = d1.iter().sum();
    let quad = (x.transpose() * s * &x)[(0, 0)];
    let mut bracket = sd - sq - quad * lam;
    if mean_term {
        bracket += s1 * s1 / k;
    }
    Ok(bracket * (lam / k))
}

/// Series coefficients of `D(x) = diag(exp(i f_j x))`: `d₁ = i f`, `d₂ = −f²/2`.
pub fn exp_perturbation(f: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let d1 = f.iter().map(|&x| Complex64::new(0.0, x)).collect();
    let d2 = f.iter().map(|&x| Complex64::new(-0.5 * x * x, 0.0)).collect();
    (d1, d2)
}

/// `M = λ × doubly stochastic`, irreducible and primitive; returns the Perron data.
pub fn check_scaled_doubly_stochastic(m: &Mat) -> Result<PerronData> {
    let k = m.nrows();
    if k == 0 || m.ncols() != k {
        return invalid("matrix must be square and non-empty");
    }
    let lam = m.row(0).sum();
    let tol = 1e-9 * lam.abs().max(1.0);
    for i in 0..k {
        if (m.row(i).sum() - lam).abs() > tol || (m.column(i).sum() - lam).abs() > tol {
            return hypothesis("matrix is not a multiple of a doubly stochastic matrix");
        }
    }
    perron_data(m)
}

/// `λ₂ = −(λ/2k) f₀ᵗ(−I − 2λS)f₀` for `exp(i f x)` perturbations of `λ × doubly stochastic`.
pub fn clt_second_coefficient(m: &Mat, f: &[f64]) -> Result<f64> {
    let pd = check_scaled_doubly_stochastic(m)?;
    let f0 = zero_sum(&pd, f)?;
    let lam = pd.lambda;
    let k = pd.k as f64;
    let bracket = -f0.norm_squared() - 2.0 * lam * f0.dot(&(&pd.reduced_resolvent * &f0));
    Ok(-lam / (2.0 * k) * bracket)
}

/// The same value as `−(λ/2k) uᵗ(λ²I − MᵗM)u` with `u = −Sf₀`.
pub fn clt_second_coefficient_quadratic(m: &Mat, f: &[f64]) -> Result<f64> {
    let pd = check_scaled_doubly_stochastic(m)?;
    let f0 = zero_sum(&pd, f)?;
    let lam = pd.lambda;
    let u = -(&pd.reduced_resolvent * &f0);
    let mu = m * &u;
    Ok(-lam / (2.0 * pd.k as f64) * (lam * lam * u.norm_squared() - mu.norm_squared()))
}

fn zero_sum(pd: &PerronData, f: &[f64]) -> Result<Vect> {
    if f.len() != pd.k {
        return Err(Error::DimensionMismatch { expected: pd.k, got: f.len() });
    }
    let norm = f.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    if f.iter().sum::<f64>().abs() > 1e-9 * norm * pd.k as f64 {
        return invalid("f must sum to zero");
    }
    let mu = f.iter().sum::<f64>() / pd.k as f64;
    Ok(Vect::from_iterator(pd.k, f.iter().map(|x| x - mu)))
}

/// Eigenvalue of a complex matrix closest to `shift`, by shifted inverse iteration.
pub fn eigenvalue_near(m: &CMat, shift: Complex64) -> Result<Complex64> {
    let k = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let sigma = shift + Complex64::new(1e-7 * scale, 1e-7 * scale);
    let lu = (m - CMat::identity(k, k) * sigma).lu();
    let mut x = nalgebra::DVector::from_element(k, Complex64::new(1.0, 0.0));
    let mut prev = Complex64::new(f64::NAN, 0.0);
    for _ in 0..200 {
        let y = lu.solve(&x).ok_or_else(|| Error::Singular("shifted matrix is singular".into()))?;
        let norm = y.norm();
        x = y / Complex64::new(norm, 0.0);
        let mx = m * &x;
        let lam = x.dotc(&mx) / x.dotc(&x);
        if (lam - prev).norm() <= 1e-15 * scale {
            return Ok(lam);
        }
        prev = lam;
    }
    if prev.is_finite() {
        Ok(prev)
    } else {
        Err(Error::NoConvergence("inverse iteration did not converge".into()))
    }
}

/// Finite-difference estimates of `λ₁` and `λ₂` for `M(x) = D(x)M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteDifference {
    pub first: Complex64,
    pub second: Complex64,
    /// Before Richardson extrapolation, at each step.
    pub second_raw: [Complex64; 2],
}

/// Central differences of the eigenvalue of `diag(d(x))·M` nearest `λ` at steps `h₁ > h₂`,
/// combined by Richardson extrapolation. `d` returns the full diagonal at `x`.
pub fn finite_difference(
    pd: &PerronData,
    d: impl Fn(f64) -> Vec<Complex64>,
    h1: f64,
    h2: f64,
) -> Result<FiniteDifference> {
    let m = complexify(&pd.matrix);
    let lam0 = Complex64::new(pd.lambda, 0.0);
    let eig = |x: f64| -> Result<Complex64> {
        let dx = d(x);
        if dx.len() != pd.k {
            return Err(Error::DimensionMismatch { expected: pd.k, got: dx.len() });
        }
        eigenvalue_near(&(cdiag(&dx) * &m), lam0)
    };
    let l0 = eig(0.0)?;
    let mut firsts = [Complex64::new(0.0, 0.0); 2];
    let mut seconds = [Complex64::new(0.0, 0.0); 2];
    for (i, &h) in [h1, h2].iter().enumerate() {
        let lp = eig(h)?;
        let lm = eig(-h)?;
        firsts[i] = (lp - lm) / (2.0 * h);
        seconds[i] = (lp - l0 * 2.0 + lm) / (2.0 * h * h);
    }
    let q = (h1 / h2).powi(2);
    let rich = |a: Complex64, b: Complex64| (b * q - a) / (q - 1.0);
    Ok(FiniteDifference { first: rich(firsts[0], firsts[1]), second: rich(seconds[0], seconds[1]), second_raw: seconds })
}

/// `tr(AJ)`: the grand sum of `A`.
pub fn trace_times_ones(a: &Mat) -> f64 {
    let j = Mat::from_element(a.ncols(), a.nrows(), 1.0);
    (a * j).trace()
}

/// `XA` for diagonal `X`: row `i` scaled by `x_i`.
pub fn diag_left(x: &[f64], a: &Mat) -> Mat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * x[i])
}

/// `XAX` for diagonal `X`: entry `(i, j)` scaled by `x_i x_j`.
pub fn diag_conjugate(x: &[f64], a: &Mat) -> Mat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * x[i] * x[j])
}

/// `vᵗDv = Σ d_i v_i²`.
pub fn diag_quadratic(d: &[f64], v: &[f64]) -> f64 {
    d.iter().zip(v).map(|(a, b)| a * b * b).sum()
}

/// `tr(M P_v)` with `P_v = vvᵗ` for a unit vector `v`.
pub fn trace_projection(m: &Mat, v: &Vect) -> f64 {
    (m * (v * v.transpose())).trace()
}
