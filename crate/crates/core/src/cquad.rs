//! Complex orthonormal polynomials on the lower unit semicircle.
//!
//! The inner product is bilinear (no conjugation):
//!
//! ```text
//! ⟨f, g⟩_Γ = ∫_π^{2π} w(e^{iθ}) f(e^{iθ}) g(e^{iθ}) dθ
//! ```
//!
//! and the orthonormal family obeys
//! `√ν_{k+1} η_{k+1} = (z − iμ_k) η_k − √ν_k η_{k−1}`.
//!
//! Sweeping the recurrence on a θ-grid loses all accuracy by degree ~20,
//! because `|η_k|` grows like `(1 + √2)^k` on the arc. The sweep therefore
//! runs on an equivalent discrete measure on the real diameter: for
//! polynomial `p`, `∫_π^{2π} p(e^{iθ}) dθ = π p(0) − i PV∫_{−1}^{1} p(x)/x dx`,
//! discretized with a node at 0 of mass `π` and an even Gauss-Legendre rule
//! carrying masses `−i w_q / x_q`. That identity is exact for every degree
//! the rule resolves, and the vectors stay bounded.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{cmp_complex, complex_symtridiag_ql, condition_number};
use crate::polyquad::{gauss_legendre, ContourRule, QuadratureRule, RuleKind};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Degree beyond which coefficients are still produced but only while the
/// orthogonality residual stays below [`RESIDUAL_ABORT`].
pub const RECOMMENDED_MAX_DEGREE: usize = 128;
pub const RESIDUAL_ABORT: f64 = 1e-6;
const DEGENERACY_COND: f64 = 1e12;

/// Weight families on the lower unit semicircle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourWeight {
    /// `w(z) = 1`.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourMeasure {
    weight: ContourWeight,
    mass: Complex64,
}

impl ContourMeasure {
    pub fn unit() -> Self {
        Self {
            weight: ContourWeight::Unit,
            mass: Complex64::new(std::f64::consts::PI, 0.0),
        }
    }

    pub fn weight(&self) -> ContourWeight {
        self.weight
    }

    pub fn mass(&self) -> Complex64 {
        self.mass
    }

    /// Construction radius; scaling to other radii happens in the bath map.
    pub fn radius(&self) -> f64 {
        1.0
    }

    pub fn weight_at(&self, _z: Complex64) -> Complex64 {
        match self.weight {
            ContourWeight::Unit => Complex64::new(1.0, 0.0),
        }
    }
}

/// Recurrence coefficients of the contour family.
///
/// `nu[k − 1] = ν_k` for `k = 1..n−1`; `nu_tail = ν_n` is kept so that
/// [`eval_eta`] can reach `η_n`, whose zeros are the `n`-point nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexRecurrence {
    pub mu: Vec<Complex64>,
    pub nu: Vec<Complex64>,
    pub nu_tail: Complex64,
    pub mass: Complex64,
}

impl ComplexRecurrence {
    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// Leading `n` coefficients.
    pub fn truncate(&self, n: usize) -> Self {
        let n = n.clamp(1, self.n());
        let nu_tail = if n < self.n() { self.nu[n - 1] } else { self.nu_tail };
        Self {
            mu: self.mu[..n].to_vec(),
            nu: self.nu[..n - 1].to_vec(),
            nu_tail,
            mass: self.mass,
        }
    }
}

/// `∫_π^{2π} w f g dθ` on a Gauss-Legendre θ-grid with `max(200, 8·degree)`
/// points, where `degree` bounds the polynomial degree of `f·g`.
pub fn contour_inner_product<F, G>(m: &ContourMeasure, f: F, g: G, degree: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
    G: Fn(Complex64) -> Complex64,
{
    let rule = gauss_legendre(200.max(8 * degree)).expect("positive point count");
    let half = std::f64::consts::FRAC_PI_2;
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| {
            let theta = 1.5 * std::f64::consts::PI + half * x;
            let z = Complex64::from_polar(1.0, theta);
            m.weight_at(z) * f(z) * g(z) * (w * half)
        })
        .sum()
}

/// Discrete measure on the diameter equivalent to the contour inner product
/// for polynomials of degree below `2 · points`.
fn diameter_measure(m: &ContourMeasure, points: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    match m.weight() {
        ContourWeight::Unit => {}
    }
    let points = points + points % 2;
    let gl = gauss_legendre(points)?;
    let mut nodes = Vec::with_capacity(points + 1);
    let mut masses = Vec::with_capacity(points + 1);
    nodes.push(Complex64::new(0.0, 0.0));
    masses.push(m.mass());
    for (x, w) in gl.nodes.iter().zip(&gl.weights) {
        nodes.push(Complex64::new(*x, 0.0));
        masses.push(-I * (w / x));
    }
    Ok((nodes, masses))
}

fn bilinear(w: &[Complex64], a: &[Complex64], b: &[Complex64]) -> Complex64 {
    w.iter().zip(a.iter().zip(b)).map(|(w, (a, b))| w * a * b).sum()
}

/// `Σ a_i b_i` with independent accumulators so the loop vectorizes.
fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = [0.0; 4];
    let mut im = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            re[l] += x[l].re * y[l].re - x[l].im * y[l].im;
            im[l] += x[l].re * y[l].im + x[l].im * y[l].re;
        }
    }
    let tail: Complex64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    Complex64::new(re.iter().sum(), im.iter().sum()) + tail
}

/// Stieltjes sweep with bilinear orthonormal vectors.
///
/// Fails with [`Error::Breakdown`] when `|ν_k|` collapses and with
/// [`Error::OrthogonalityResidual`] once `max_j |⟨η_k, η_j⟩|` exceeds
/// [`RESIDUAL_ABORT`].
pub fn complex_recurrence(m: &ContourMeasure, n_max: usize) -> Result<ComplexRecurrence> {
    if n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    let (z, wt) = diameter_measure(m, 200.max(8 * (n_max + 1)))?;
    let mass = m.mass();
    let len = z.len();

    let mut mu = Vec::with_capacity(n_max);
    let mut sq: Vec<Complex64> = Vec::with_capacity(n_max + 1);
    let mut nu = Vec::with_capacity(n_max);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n_max + 1);
    basis.push(vec![Complex64::new(1.0, 0.0) / mass.sqrt(); len]);

    for k in 0..n_max {
        let cur = &basis[k];
        let zc: Vec<Complex64> = z.iter().zip(cur).map(|(z, e)| z * e).collect();
        let a = bilinear(&wt, &zc, cur);
        if !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::Breakdown { k, modulus: f64::NAN });
        }
        mu.push(a / I);
        let mut next: Vec<Complex64> = zc.iter().zip(cur).map(|(ze, e)| ze - a * e).collect();
        if k > 0 {
            let s = sq[k - 1];
            for (p, e) in next.iter_mut().zip(&basis[k - 1]) {
                *p -= s * e;
            }
        }
        let v = bilinear(&wt, &next, &next);
        let scale = next.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt() / (len as f64).sqrt();
        if v.norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE) || !v.re.is_finite() {
            return Err(Error::Breakdown { k: k + 1, modulus: v.norm() });
        }
        let s = v.sqrt();
        nu.push(v);
        sq.push(s);
        let next: Vec<Complex64> = next.into_iter().map(|p| p / s).collect();
        let weighted: Vec<Complex64> = wt.iter().zip(&next).map(|(w, p)| w * p).collect();
        let residual = basis
            .iter()
            .map(|e| dot(&weighted, e).norm())
            .fold(0.0, f64::max);
        if residual > RESIDUAL_ABORT {
            return Err(Error::OrthogonalityResidual { k: k + 1, residual });
        }
        basis.push(next);
    }
    let nu_tail = nu.pop().expect("one norm per degree");
    Ok(ComplexRecurrence { mu, nu, nu_tail, mass })
}

/// Complex symmetric tridiagonal matrix: diagonal `iμ_k`, off-diagonal `√ν_k`
/// on the principal branch.
pub fn complex_jacobi(r: &ComplexRecurrence) -> DMatrix<Complex64> {
    let n = r.n();
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = I * r.mu[k];
    }
    for k in 1..n {
        let s = r.nu[k - 1].sqrt();
        m[(k, k - 1)] = s;
        m[(k - 1, k)] = s;
    }
    m
}

/// Gauss rule on the contour from the eigen-decomposition of `M_c`.
///
/// Weights are `q₀² · mass` with each eigenvector scaled to `vᵀv = 1`.
pub fn contour_rule(r: &ComplexRecurrence) -> Result<ContourRule> {
    let diag: Vec<Complex64> = r.mu.iter().map(|m| I * m).collect();
    let off: Vec<Complex64> = r.nu.iter().map(|v| v.sqrt()).collect();
    rule_from_tridiagonal(&diag, &off, r.mass)
}

fn rule_from_tridiagonal(
    diag: &[Complex64],
    off: &[Complex64],
    mass: Complex64,
) -> Result<ContourRule> {
    let (nodes, mut z) = complex_symtridiag_ql(diag, off)?;
    let n = nodes.len();
    for j in 0..n {
        let mut col = z.column_mut(j);
        let vtv: Complex64 = col.iter().map(|x| x * x).sum();
        let vhv: f64 = col.iter().map(|x| x.norm_sqr()).sum();
        if vtv.norm() <= 1e-8 * vhv {
            return Err(Error::Degenerate { cond: f64::INFINITY });
        }
        col /= vtv.sqrt();
    }
    let cond = condition_number(&z);
    if !(cond <= DEGENERACY_COND) {
        return Err(Error::Degenerate { cond });
    }
    let mut pairs: Vec<(Complex64, Complex64)> = (0..n)
        .map(|j| (nodes[j], z[(0, j)] * z[(0, j)] * mass))
        .collect();
    pairs.sort_by(|a, b| cmp_complex(&a.0, &b.0));
    Ok(QuadratureRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
        mass,
        kind: RuleKind::Contour,
    })
}

/// `Σ w_i f(z_i)`.
pub fn contour_integrate<F: Fn(Complex64) -> Complex64>(rule: &ContourRule, f: F) -> Complex64 {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(z, w)| w * f(*z))
        .sum()
}

/// `η_0(z), …, η_{k_max}(z)` by forward recursion with `η_0 = 1/√mass`.
pub fn eval_eta(r: &ComplexRecurrence, z: Complex64, k_max: usize) -> Result<Vec<Complex64>> {
    Ok(eta_with_derivative(r, z, k_max)?.0)
}

/// Values and `z`-derivatives of `η_0..η_{k_max}`.
pub fn eta_with_derivative(
    r: &ComplexRecurrence,
    z: Complex64,
    k_max: usize,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if k_max > r.n() {
        return Err(Error::Config(format!(
            "eta up to degree {k_max} needs at least {k_max} recurrence coefficients, have {}",
            r.n()
        )));
    }
    let sqrt_nu = |k: usize| -> Complex64 {
        // √ν_k for k ≥ 1
        if k < r.n() {
            r.nu[k - 1].sqrt()
        } else {
            r.nu_tail.sqrt()
        }
    };
    let mut v = vec![Complex64::new(1.0, 0.0) / r.mass.sqrt()];
    let mut d = vec![Complex64::new(0.0, 0.0)];
    for k in 0..k_max {
        let shift = z - I * r.mu[k];
        let (mut nv, mut nd) = (shift * v[k], v[k] + shift * d[k]);
        if k > 0 {
            let s = sqrt_nu(k);
            nv -= s * v[k - 1];
            nd -= s * d[k - 1];
        }
        let s = sqrt_nu(k + 1);
        v.push(nv / s);
        d.push(nd / s);
    }
    Ok((v, d))
}
