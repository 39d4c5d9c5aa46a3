//! Benchmark models: pure dephasing and the single-excitation gAAH ring.
//!
//! The open gAAH problem is an effective Hamiltonian
//!
//! ```text
//! H_eff = [[H_s, G], [G', D]]
//! ```
//!
//! where every lattice site couples to every discrete mode with the same
//! amplitude (common bath) and `D` holds the bath energies. Time evolution
//! goes through a biorthogonal eigen-decomposition `H_eff = V diag(E) W`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::bathmap::{BathDiscretization, BathKind, SpectralDensity};
use crate::error::{Error, Result};
use crate::integrate::integrate;
use crate::linalg::{cmp_complex, condition_number, eig_general};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest effective-Hamiltonian dimension accepted by [`build_heff`].
pub const MAX_HEFF_DIM: usize = 10_000;
/// Eigenvector-matrix condition number beyond which `H_eff` counts as
/// near-defective.
pub const NEAR_DEFECTIVE_COND: f64 = 1e12;

/// Golden-ratio wavenumber `(√5 − 1)/2`.
pub fn golden_beta() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaahParams {
    pub n_s: usize,
    pub delta: f64,
    pub beta: f64,
    pub phi: f64,
    pub a: f64,
    pub hopping: f64,
}

impl GaahParams {
    /// Ring of `n_s` sites with `β = (√5 − 1)/2`, `φ = π`, `a = 0`, unit hopping.
    pub fn new(n_s: usize, delta: f64) -> Self {
        Self {
            n_s,
            delta,
            beta: golden_beta(),
            phi: std::f64::consts::PI,
            a: 0.0,
            hopping: 1.0,
        }
    }

    pub fn with_a(self, a: f64) -> Self {
        Self { a, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_s < 2 {
            return Err(Error::Config(format!("N_s must be at least 2, got {}", self.n_s)));
        }
        if !(0.0..1.0).contains(&self.a) {
            return Err(Error::Config(format!("deformation a must lie in [0, 1), got {}", self.a)));
        }
        for (name, v) in [
            ("Delta", self.delta),
            ("beta", self.beta),
            ("phi", self.phi),
            ("hopping", self.hopping),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// On-site energy of site `n` (1-based).
    pub fn potential(&self, n: usize) -> f64 {
        let c = (2.0 * std::f64::consts::PI * self.beta * n as f64 + self.phi).cos();
        self.delta * c / (1.0 - self.a * c)
    }
}

/// Periodic gAAH ring Hamiltonian.
pub fn gaah_hamiltonian(p: &GaahParams) -> Result<DMatrix<f64>> {
    p.validate()?;
    let n = p.n_s;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        h[(i, j)] += p.hopping;
        h[(j, i)] += p.hopping;
        h[(i, i)] = p.potential(i + 1);
    }
    Ok(h)
}

/// Eigenvalues (ascending) and eigenvectors of a real symmetric matrix, each
/// vector's largest-magnitude component made positive.
pub fn closed_eigensystem(h: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !h.is_square() {
        return Err(Error::Config("closed Hamiltonian must be square".into()));
    }
    let n = h.nrows();
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
        let sign = if col[imax] < 0.0 { -1.0 } else { 1.0 };
        vecs.set_column(dst, &(col * sign));
    }
    Ok((order.iter().map(|&i| eig.eigenvalues[i]).collect(), vecs))
}

/// Highest eigenstate of the closed Hamiltonian, phase-fixed.
pub fn highest_eigenstate(h: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let (vals, vecs) = closed_eigensystem(h)?;
    let n = vals.len();
    Ok((vals[n - 1], vecs.column(n - 1).into_owned()))
}

/// Inverse participation ratio `Σ |v_i|⁴ / (Σ |v_i|²)²`.
pub fn ipr(v: &[f64]) -> f64 {
    let n2: f64 = v.iter().map(|x| x * x).sum();
    v.iter().map(|x| x.powi(4)).sum::<f64>() / (n2 * n2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingValue {
    pub value: f64,
    pub method: EvalMethod,
}

/// `−ln L(t)` of the continuum dephasing model.
///
/// Closed form `½ ln(1 + t²)` at `η = ω_c = s = 1`; adaptive quadrature of
/// `∫ J(ω)(1 − cos ωt)/ω² dω` otherwise.
pub fn dephasing_exact(t: f64, sd: &SpectralDensity) -> Result<DephasingValue> {
    sd.validate()?;
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if sd.eta == 1.0 && sd.omega_c == 1.0 && sd.s == 1.0 {
        return Ok(DephasingValue {
            value: 0.5 * t.mul_add(t, 1.0).ln(),
            method: EvalMethod::Analytic,
        });
    }
    Ok(DephasingValue {
        value: dephasing_numeric(t, sd)?,
        method: EvalMethod::Numeric,
    })
}

/// `1 − e^{−x}` without cancellation for small `|x|`.
fn one_minus_exp_neg(x: Complex64) -> Complex64 {
    if x.norm() < 0.1 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 1..20 {
            term *= -x / k as f64;
            sum -= term;
        }
        sum
    } else {
        1.0 - (-x).exp()
    }
}

/// Integrates along the ray `ω = r e^{−iπ/4}`, where both `e^{−ω/ω_c}` and
/// `e^{−iωt}` decay, and keeps the real part.
fn dephasing_numeric(t: f64, sd: &SpectralDensity) -> Result<f64> {
    if t == 0.0 || sd.eta == 0.0 {
        return Ok(0.0);
    }
    let dir = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
    let upper = (60.0 + 10.0 * sd.s) * sd.omega_c / dir.re;
    let amp = sd.eta * sd.omega_c.powf(1.0 - sd.s);
    let f = |r: f64| {
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let w = dir * r;
        // J(ω)/ω² continued analytically: η ω_c^{1−s} ω^{s−2} e^{−ω/ω_c}
        let jw = ((w.ln() * (sd.s - 2.0)) - w / sd.omega_c).exp() * amp;
        jw * one_minus_exp_neg(I * w * t) * dir
    };
    let scale = sd.total_weight() / (sd.omega_c * sd.omega_c);
    let (v, _) = integrate(f, 0.0, upper, 1e-14 * scale.max(f64::MIN_POSITIVE), 1e-12)?;
    Ok(v.re)
}

fn require_kind(bath: &BathDiscretization, kind: BathKind) -> Result<()> {
    if bath.meta.kind != kind {
        return Err(Error::Config(format!(
            "operation needs a {kind:?} bath, got {:?}",
            bath.meta.kind
        )));
    }
    Ok(())
}

/// `Σ_i g_i² (1 − cos E_i t)/E_i²` for a real star bath.
pub fn dephasing_discrete_real(bath: &BathDiscretization, t: f64) -> Result<f64> {
    require_kind(bath, BathKind::Real)?;
    Ok(bath
        .energies
        .iter()
        .zip(&bath.couplings)
        .map(|(e, g)| {
            let x = e.re;
            let half = 0.5 * x * t;
            // 1 − cos(xt) = 2 sin²(xt/2)
            g.norm_sqr() * 2.0 * (half.sin() / x).powi(2)
        })
        .sum())
}

/// `Σ_j |𝕘_j|² (1 − cos z_j t)/z_j²` with complex nodes, taken literally.
///
/// `cos(z t)` grows like `e^{|Im z| t}` for complex `z`, so this sum diverges
/// with `t`; see [`dephasing_discrete_causal`] for the bounded form.
pub fn dephasing_discrete_complex(bath: &BathDiscretization, t: f64) -> Result<Complex64> {
    require_kind(bath, BathKind::Complex)?;
    Ok(bath
        .energies
        .iter()
        .zip(&bath.couplings)
        .map(|(z, g)| (1.0 - (z * t).cos()) / (z * z) * g.norm_sqr())
        .sum())
}

/// `Σ_j 𝕘_j² (1 − e^{−i z_j t} − i z_j t)/z_j²`.
///
/// Keeps only the decaying exponential, so complex nodes in the lower half
/// plane stay bounded. The real part is `−ln |L(t)|`; the imaginary part is
/// the accumulated phase. For real nodes and couplings the real part equals
/// [`dephasing_discrete_real`].
pub fn dephasing_discrete_causal(bath: &BathDiscretization, t: f64) -> Complex64 {
    bath.energies
        .iter()
        .zip(&bath.couplings)
        .map(|(z, g)| {
            let x = I * z * t;
            g * g * (one_minus_exp_neg(x) - x) / (z * z)
        })
        .sum()
}

/// How the mode→site block is formed from the site→mode couplings `𝕘_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingConjugation {
    /// `conj(𝕘_j)`: the literal Hermitian-conjugate reading.
    Conjugate,
    /// `𝕘_j`: complex symmetric `H_eff`.
    #[default]
    Transpose,
}

impl std::str::FromStr for CouplingConjugation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conjugate" => Ok(Self::Conjugate),
            "transpose" => Ok(Self::Transpose),
            other => Err(Error::Config(format!(
                "coupling_conjugation must be conjugate or transpose, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for CouplingConjugation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Conjugate => "conjugate",
            Self::Transpose => "transpose",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian {
    pub matrix: DMatrix<Complex64>,
    pub n_s: usize,
    pub n_k: usize,
}

impl EffectiveHamiltonian {
    pub fn dim(&self) -> usize {
        self.n_s + self.n_k
    }

    /// `max |H − H†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let h = &self.matrix;
        let n = h.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

pub fn build_heff(
    system: &DMatrix<f64>,
    bath: &BathDiscretization,
    conjugation: CouplingConjugation,
) -> Result<EffectiveHamiltonian> {
    if !system.is_square() {
        return Err(Error::Config("system Hamiltonian must be square".into()));
    }
    if bath.energies.len() != bath.couplings.len() {
        return Err(Error::Config("bath energies and couplings differ in length".into()));
    }
    let n_s = system.nrows();
    let n_k = bath.len();
    let dim = n_s + n_k;
    if dim > MAX_HEFF_DIM {
        return Err(Error::DimensionTooLarge { dim, limit: MAX_HEFF_DIM });
    }
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..n_s {
        for j in 0..n_s {
            m[(i, j)] = Complex64::new(system[(i, j)], 0.0);
        }
    }
    for (j, (e, g)) in bath.energies.iter().zip(&bath.couplings).enumerate() {
        let back = match conjugation {
            CouplingConjugation::Conjugate => g.conj(),
            CouplingConjugation::Transpose => *g,
        };
        m[(n_s + j, n_s + j)] = *e;
        for i in 0..n_s {
            m[(i, n_s + j)] = *g;
            m[(n_s + j, i)] = back;
        }
    }
    Ok(EffectiveHamiltonian { matrix: m, n_s, n_k })
}

/// Biorthogonal eigensystem: `H = V diag(E) W` with `W V = 𝟙`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub values: Vec<Complex64>,
    /// Right eigenvectors as columns.
    pub right: DMatrix<Complex64>,
    /// Left eigenvectors as rows.
    pub left: DMatrix<Complex64>,
    pub n_s: usize,
}

pub fn biorth_eig(h: &EffectiveHamiltonian) -> Result<Eigensystem> {
    let (vals, vecs) = eig_general(&h.matrix)?;
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_complex(&vals[a], &vals[b]));
    let mut right = DMatrix::<Complex64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        right.set_column(dst, &vecs.column(src));
    }
    let cond = condition_number(&right);
    if !(cond <= NEAR_DEFECTIVE_COND) {
        return Err(Error::NearDefective { cond });
    }
    let left = right
        .clone()
        .try_inverse()
        .ok_or(Error::NearDefective { cond: f64::INFINITY })?;
    Ok(Eigensystem {
        values: order.iter().map(|&i| vals[i]).collect(),
        right,
        left,
        n_s: h.n_s,
    })
}

impl Eigensystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `max |W V − 𝟙|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let p = &self.left * &self.right;
        let mut worst: f64 = 0.0;
        for i in 0..p.nrows() {
            for j in 0..p.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// `max |V diag(E) W − H|`.
    pub fn reconstruction_error(&self, h: &EffectiveHamiltonian) -> f64 {
        let d = DMatrix::from_diagonal(&DVector::from_vec(self.values.clone()));
        let r = &self.right * d * &self.left - &h.matrix;
        r.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Pads a system-block vector with zeros on the bath block.
    pub fn embed(&self, v: &[Complex64]) -> Result<DVector<Complex64>> {
        if v.len() == self.dim() {
            return Ok(DVector::from_column_slice(v));
        }
        if v.len() == self.n_s {
            let mut out = DVector::zeros(self.dim());
            out.rows_mut(0, self.n_s).copy_from_slice(v);
            return Ok(out);
        }
        Err(Error::Config(format!(
            "vector of length {} fits neither the system ({}) nor the full space ({})",
            v.len(),
            self.n_s,
            self.dim()
        )))
    }

    /// Precomputes `⟨target| V` and `W |ψ₀⟩` for repeated survival amplitudes.
    pub fn survival_amplitude(&self, target: &[Complex64], psi0: &[Complex64]) -> Result<SurvivalAmplitude> {
        let target = self.embed(target)?;
        let psi0 = self.embed(psi0)?;
        let row = target.adjoint() * &self.right;
        let coeff = &self.left * psi0;
        Ok(SurvivalAmplitude {
            values: self.values.clone(),
            weights: (0..self.dim()).map(|n| row[n] * coeff[n]).collect(),
        })
    }
}

/// `⟨target|ψ(t)⟩ = Σ_n a_n e^{−i E_n t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalAmplitude {
    values: Vec<Complex64>,
    weights: Vec<Complex64>,
}

impl SurvivalAmplitude {
    pub fn amplitude(&self, t: f64) -> Complex64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(e, a)| a * (-I * e * t).exp())
            .sum()
    }

    pub fn probability(&self, t: f64) -> f64 {
        self.amplitude(t).norm_sqr()
    }
}

/// `ψ(t) = V diag(e^{−iE t}) W ψ₀`.
pub fn propagate(e: &Eigensystem, psi0: &[Complex64], t: f64) -> Result<DVector<Complex64>> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if psi0.len() != e.dim() {
        return Err(Error::Config(format!(
            "state has length {}, eigensystem dimension is {}",
            psi0.len(),
            e.dim()
        )));
    }
    if t == 0.0 {
        return Ok(DVector::from_column_slice(psi0));
    }
    let mut c = &e.left * DVector::from_column_slice(psi0);
    for (ci, ev) in c.iter_mut().zip(&e.values) {
        *ci *= (-I * ev * t).exp();
    }
    Ok(&e.right * c)
}

/// `|⟨target|ψ(t)⟩|²`; system-block vectors are padded with zeros.
pub fn survival(e: &Eigensystem, target: &[Complex64], psi0: &[Complex64], t: f64) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let psi = propagate(e, e.embed(psi0)?.as_slice(), t)?;
    let target = e.embed(target)?;
    Ok(target.dotc(&psi).norm_sqr())
}

/// Real vector lifted to complex entries.
pub fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|x| Complex64::new(*x, 0.0)).collect()
}
