//! Exact references for the open gAAH dynamics.
//!
//! The single-excitation amplitudes obey the Volterra integro-differential
//! equation
//!
//! ```text
//! ȧ(t) = −i H_s a(t) − 𝟙 ∫_0^t K(t − τ) S(τ) dτ,   S = Σ_m a_m
//! ```
//!
//! with `K(t) = ∫_0^∞ J(ω) e^{−iωt} dω` (common bath). In the eigenbasis
//! `H_s = V diag(E) Vᵀ`, with `c = Vᵀa` and `b_k = Σ_n V_nk`, this becomes
//!
//! ```text
//! c_k(t) = e^{−iE_k t} c_k(0) − b_k (y_k ∗ S)(t),   y_k(t) = ∫_0^t e^{−iE_k(t−u)} K(u) du
//! S(t) + (L ∗ S)(t) = Σ_k b_k c_k(0) e^{−iE_k t},     L = Σ_k b_k² y_k
//! ```
//!
//! a scalar second-kind Volterra equation. [`VolterraScheme::ModalGregory`]
//! solves it with fourth-order Gregory weights; since `L(0) = 0` every step
//! is explicit. [`VolterraScheme::HeunTrapezoid`] integrates the original
//! equation with a second-order predictor-corrector and a trapezoidal
//! memory integral.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::bathmap::{ohmic_j, SpectralDensity};
use crate::error::{Error, Result};
use crate::integrate::integrate;
use crate::models::{closed_eigensystem, gaah_hamiltonian, GaahParams};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Step-count guard `t_max / dt`.
pub const MAX_STEPS: usize = 1_000_000;
/// Relative change under dt halving above which a solve is rejected.
pub const HALVING_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelMode {
    /// `η ω_c² Γ(s+1) (1 + iω_c t)^{−(s+1)}`.
    #[default]
    Analytic,
    /// Adaptive quadrature of `∫ J(ω) e^{−iωt} dω`.
    Numeric,
}

/// Memory kernel `K(t) = ∫_0^∞ J(ω) e^{−iωt} dω`.
pub fn memory_kernel(sd: &SpectralDensity, t: f64, mode: KernelMode) -> Result<Complex64> {
    sd.validate()?;
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    match mode {
        KernelMode::Analytic => {
            let base = Complex64::new(1.0, sd.omega_c * t);
            Ok(base.powf(-(sd.s + 1.0)) * sd.total_weight())
        }
        KernelMode::Numeric => kernel_numeric(sd, t),
    }
}

/// Integrates along `ω = r e^{−iπ/4}`, where the integrand decays for every
/// `t ≥ 0` instead of oscillating.
fn kernel_numeric(sd: &SpectralDensity, t: f64) -> Result<Complex64> {
    if sd.eta == 0.0 {
        return Ok(ZERO);
    }
    let dir = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
    let rate = dir.re / sd.omega_c - dir.im * t;
    let upper = (80.0 + 10.0 * sd.s) / rate;
    let amp = sd.eta * sd.omega_c.powf(1.0 - sd.s);
    let f = |r: f64| {
        if r == 0.0 {
            return ZERO;
        }
        let w = dir * r;
        (w.ln() * sd.s - w / sd.omega_c - I * w * t).exp() * amp * dir
    };
    let (v, _) = integrate(f, 0.0, upper, 1e-15 * sd.total_weight(), 1e-13)?;
    Ok(v)
}

/// Real-axis version of the numeric kernel, used only to cross-check the
/// rotated-ray quadrature at short times.
pub fn memory_kernel_real_axis(sd: &SpectralDensity, t: f64) -> Result<Complex64> {
    let upper = (80.0 + 10.0 * sd.s) * sd.omega_c;
    let (v, _) = integrate(
        |w| (-I * w * t).exp() * ohmic_j(sd, w),
        0.0,
        upper,
        1e-15 * sd.total_weight().max(f64::MIN_POSITIVE),
        1e-13,
    )?;
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VolterraScheme {
    /// Fourth-order Gregory quadrature of the scalar modal equation.
    #[default]
    ModalGregory,
    /// Heun predictor-corrector with trapezoidal memory.
    HeunTrapezoid,
}

/// How the lattice couples to the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MemoryCoupling {
    /// Every site couples to the same modes: memory acts on `Σ_m a_m`.
    #[default]
    Common,
    /// Each site has its own copy of the bath: memory acts on `a_n`.
    Independent,
}

impl std::str::FromStr for MemoryCoupling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "common" => Ok(Self::Common),
            "independent" => Ok(Self::Independent),
            other => Err(Error::Config(format!(
                "memory_term must be common or independent, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for MemoryCoupling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Common => "common",
            Self::Independent => "independent",
        })
    }
}

impl std::str::FromStr for KernelMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Self::Analytic),
            "numeric" => Ok(Self::Numeric),
            other => Err(Error::Config(format!("kernel must be analytic or numeric, got {other:?}"))),
        }
    }
}

impl std::fmt::Display for KernelMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Analytic => "analytic",
            Self::Numeric => "numeric",
        })
    }
}

impl std::str::FromStr for VolterraScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modal-gregory" => Ok(Self::ModalGregory),
            "heun-trapezoid" => Ok(Self::HeunTrapezoid),
            other => Err(Error::Config(format!(
                "scheme must be modal-gregory or heun-trapezoid, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for VolterraScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ModalGregory => "modal-gregory",
            Self::HeunTrapezoid => "heun-trapezoid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolterraConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Spacing of the returned samples; must be a multiple of `dt`.
    pub dt_out: f64,
    pub scheme: VolterraScheme,
    pub kernel_mode: KernelMode,
    pub coupling: MemoryCoupling,
    /// Re-solve at `dt/2` and fail if samples move by more than
    /// [`HALVING_TOLERANCE`] relative.
    pub check_halving: bool,
}

impl Default for VolterraConfig {
    fn default() -> Self {
        Self {
            dt: 0.002,
            t_max: 200.0,
            dt_out: 0.1,
            scheme: VolterraScheme::default(),
            kernel_mode: KernelMode::default(),
            coupling: MemoryCoupling::default(),
            check_halving: false,
        }
    }
}

impl VolterraConfig {
    fn steps(&self) -> Result<(usize, usize)> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        let n = (self.t_max / self.dt).round();
        if n > MAX_STEPS as f64 {
            return Err(Error::Config(format!(
                "t_max/dt = {n} exceeds the step guard {MAX_STEPS}"
            )));
        }
        let n = n as usize;
        if ((n as f64) * self.dt - self.t_max).abs() > 1e-9 * self.t_max {
            return Err(Error::Config("t_max must be a multiple of dt".into()));
        }
        let stride = (self.dt_out / self.dt).round();
        if !(stride >= 1.0) || (stride * self.dt - self.dt_out).abs() > 1e-9 * self.dt_out {
            return Err(Error::Config("dt_out must be a positive multiple of dt".into()));
        }
        Ok((n, stride as usize))
    }
}

/// Sampled solution `a(t)` of the Volterra equation.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraSolution {
    pub times: Vec<f64>,
    pub amplitudes: Vec<DVector<Complex64>>,
    /// Max-norm change of the samples under dt halving, when requested.
    pub halving_deviation: Option<f64>,
}

impl VolterraSolution {
    /// `|⟨target|a(t)⟩|²` at every sample.
    pub fn survival(&self, target: &[Complex64]) -> Vec<f64> {
        let target = DVector::from_column_slice(target);
        self.amplitudes.iter().map(|a| target.dotc(a).norm_sqr()).collect()
    }

    /// `max_t max_n |a_n − b_n|` over matching samples.
    pub fn max_deviation(&self, other: &VolterraSolution) -> Result<f64> {
        if self.times.len() != other.times.len()
            || self.times.iter().zip(&other.times).any(|(a, b)| (a - b).abs() > 1e-9)
        {
            return Err(Error::GridMismatch("solutions are sampled on different times".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max))
    }
}

/// Solves the open gAAH dynamics from `a0` (unit norm, length `N_s`).
pub fn volterra_solve(
    p: &GaahParams,
    sd: &SpectralDensity,
    a0: &[Complex64],
    cfg: &VolterraConfig,
) -> Result<VolterraSolution> {
    let h = gaah_hamiltonian(p)?;
    sd.validate()?;
    if a0.len() != p.n_s {
        return Err(Error::Config(format!(
            "initial state has length {}, lattice has {} sites",
            a0.len(),
            p.n_s
        )));
    }
    let norm = a0.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Config(format!("initial state must have unit norm, got {norm}")));
    }
    let mut sol = solve_once(&h, sd, a0, cfg)?;
    if cfg.check_halving {
        let fine_cfg = VolterraConfig {
            dt: 0.5 * cfg.dt,
            check_halving: false,
            ..*cfg
        };
        let fine = solve_once(&h, sd, a0, &fine_cfg)?;
        let change = sol.max_deviation(&fine)?;
        if change > HALVING_TOLERANCE {
            return Err(Error::StepSize { dt: cfg.dt, change });
        }
        sol.halving_deviation = Some(change);
    }
    Ok(sol)
}

fn solve_once(
    h: &DMatrix<f64>,
    sd: &SpectralDensity,
    a0: &[Complex64],
    cfg: &VolterraConfig,
) -> Result<VolterraSolution> {
    let (n, stride) = cfg.steps()?;
    match cfg.scheme {
        VolterraScheme::ModalGregory => modal_gregory(h, sd, a0, cfg, n, stride),
        VolterraScheme::HeunTrapezoid => heun_trapezoid(h, sd, a0, cfg, n, stride),
    }
}

/// Kernel on the half-step grid `u = j·dt/2`, `j = 0..=2n`.
fn tabulate_kernel(sd: &SpectralDensity, mode: KernelMode, dt: f64, n: usize) -> Result<Vec<Complex64>> {
    (0..=2 * n)
        .into_par_iter()
        .map(|j| memory_kernel(sd, 0.5 * dt * j as f64, mode))
        .collect()
}

/// Gregory weights for `∫_0^{m h} f ≈ h Σ_j w_j f(jh)`: trapezoid, Simpson
/// and 3/8 for the first steps, fourth-order end corrections afterwards.
fn gregory_weight(m: usize, j: usize) -> f64 {
    const END: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
    match m {
        0 => 0.0,
        1 => 0.5,
        2 => [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0][j],
        3 => [3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0][j],
        4 => [1.0 / 3.0, 4.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0][j],
        _ => {
            if j < 3 {
                END[j]
            } else if j + 3 > m {
                END[m - j]
            } else {
                1.0
            }
        }
    }
}

/// `Σ_{j=0}^{m} w_j f_{m−j} g_j` for `f` stored from index 0.
fn gregory_convolution(f: &[Complex64], g: &[Complex64], m: usize) -> Complex64 {
    if m == 0 {
        return ZERO;
    }
    if m < 5 {
        return (0..=m).map(|j| f[m - j] * g[j] * gregory_weight(m, j)).sum();
    }
    let mut acc = [0.0f64; 8];
    let rev = f[..=m].iter().rev();
    let mut pairs = g[..=m].iter().zip(rev);
    // four independent complex accumulators keep the loop vectorizable
    loop {
        let mut done = false;
        for lane in 0..4 {
            match pairs.next() {
                Some((x, y)) => {
                    acc[2 * lane] += x.re * y.re - x.im * y.im;
                    acc[2 * lane + 1] += x.re * y.im + x.im * y.re;
                }
                None => {
                    done = true;
                    break;
                }
            }
        }
        if done {
            break;
        }
    }
    let mut sum = Complex64::new(acc[0] + acc[2] + acc[4] + acc[6], acc[1] + acc[3] + acc[5] + acc[7]);
    for j in [0, 1, 2, m - 2, m - 1, m] {
        let w = gregory_weight(m, j);
        sum += f[m - j] * g[j] * (w - 1.0);
    }
    sum
}

fn modal_gregory(
    h: &DMatrix<f64>,
    sd: &SpectralDensity,
    a0: &[Complex64],
    cfg: &VolterraConfig,
    n: usize,
    stride: usize,
) -> Result<VolterraSolution> {
    let dt = cfg.dt;
    let (energies, v) = closed_eigensystem(h)?;
    let n_s = energies.len();
    let b: Vec<f64> = (0..n_s).map(|k| v.column(k).sum()).collect();
    let c0: Vec<Complex64> = (0..n_s)
        .map(|k| (0..n_s).map(|i| a0[i] * v[(i, k)]).sum())
        .collect();
    let kernel = tabulate_kernel(sd, cfg.kernel_mode, dt, n)?;

    // y_k on the step grid: exact propagation plus Simpson over each step
    let y: Vec<Vec<Complex64>> = energies
        .par_iter()
        .map(|&e| {
            let full = (-I * e * dt).exp();
            let half = (-I * e * 0.5 * dt).exp();
            let mut out = Vec::with_capacity(n + 1);
            out.push(ZERO);
            let mut cur = ZERO;
            for m in 0..n {
                let local = (kernel[2 * m] * full + kernel[2 * m + 1] * half * 4.0 + kernel[2 * m + 2])
                    * (dt / 6.0);
                cur = cur * full + local;
                out.push(cur);
            }
            out
        })
        .collect();

    let times: Vec<f64> = (0..=n).step_by(stride).map(|m| m as f64 * dt).collect();
    let amplitudes = match cfg.coupling {
        MemoryCoupling::Common => {
            let mut l = vec![ZERO; n + 1];
            for (k, yk) in y.iter().enumerate() {
                let bk2 = b[k] * b[k];
                for (dst, src) in l.iter_mut().zip(yk) {
                    *dst += src * bk2;
                }
            }
            let forcing: Vec<Complex64> = (0..=n)
                .map(|m| {
                    let t = m as f64 * dt;
                    (0..n_s).map(|k| c0[k] * b[k] * (-I * energies[k] * t).exp()).sum()
                })
                .collect();
            let s = solve_scalar_vie(&l, &forcing, dt);
            (0..=n)
                .step_by(stride)
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|m| {
                    let t = m as f64 * dt;
                    let c: Vec<Complex64> = (0..n_s)
                        .map(|k| {
                            c0[k] * (-I * energies[k] * t).exp()
                                - gregory_convolution(&y[k], &s, m) * (b[k] * dt)
                        })
                        .collect();
                    modal_to_sites(&v, &c)
                })
                .collect::<Vec<_>>()
        }
        MemoryCoupling::Independent => {
            // each eigenmode evolves on its own: c_k + y_k ∗ c_k = c_k(0) e^{−iE_k t}
            let modes: Vec<Vec<Complex64>> = (0..n_s)
                .into_par_iter()
                .map(|k| {
                    if c0[k] == ZERO {
                        return vec![ZERO; n + 1];
                    }
                    let forcing: Vec<Complex64> = (0..=n)
                        .map(|m| c0[k] * (-I * energies[k] * (m as f64 * dt)).exp())
                        .collect();
                    solve_scalar_vie(&y[k], &forcing, dt)
                })
                .collect();
            (0..=n)
                .step_by(stride)
                .map(|m| {
                    let c: Vec<Complex64> = modes.iter().map(|ck| ck[m]).collect();
                    modal_to_sites(&v, &c)
                })
                .collect()
        }
    };
    Ok(VolterraSolution {
        times,
        amplitudes,
        halving_deviation: None,
    })
}

fn modal_to_sites(v: &DMatrix<f64>, c: &[Complex64]) -> DVector<Complex64> {
    let n = v.nrows();
    DVector::from_iterator(
        n,
        (0..n).map(|i| (0..c.len()).map(|k| c[k] * v[(i, k)]).sum::<Complex64>()),
    )
}

/// `x + h·(kernel ∗ x) = forcing` with `kernel(0) = 0`, Gregory weights.
fn solve_scalar_vie(kernel: &[Complex64], forcing: &[Complex64], dt: f64) -> Vec<Complex64> {
    let n = forcing.len() - 1;
    let mut x = vec![ZERO; n + 1];
    x[0] = forcing[0];
    for m in 1..=n {
        // the j = m term carries kernel(0) = 0, so the step is explicit
        x[m] = forcing[m] - gregory_convolution(kernel, &x, m) * dt;
    }
    x
}

fn heun_trapezoid(
    h: &DMatrix<f64>,
    sd: &SpectralDensity,
    a0: &[Complex64],
    cfg: &VolterraConfig,
    n: usize,
    stride: usize,
) -> Result<VolterraSolution> {
    let dt = cfg.dt;
    let n_s = h.nrows();
    let hc = h.map(|x| Complex64::new(x, 0.0));
    let kernel: Vec<Complex64> = tabulate_kernel(sd, cfg.kernel_mode, dt, n)?
        .into_iter()
        .step_by(2)
        .collect();

    // memory source: Σ a (common) or a itself (independent), one column per step
    let source = |a: &DVector<Complex64>| -> DVector<Complex64> {
        match cfg.coupling {
            MemoryCoupling::Common => DVector::from_element(1, a.sum()),
            MemoryCoupling::Independent => a.clone(),
        }
    };
    let spread = |mem: &DVector<Complex64>| -> DVector<Complex64> {
        match cfg.coupling {
            MemoryCoupling::Common => DVector::from_element(n_s, mem[0]),
            MemoryCoupling::Independent => mem.clone(),
        }
    };
    // trapezoidal ∫_0^{t_m} K(t_m − τ) src(τ) dτ, with src(t_m) supplied separately
    let memory = |hist: &[DVector<Complex64>], m: usize, last: &DVector<Complex64>| -> DVector<Complex64> {
        if m == 0 {
            return last * ZERO;
        }
        let mut acc = &hist[0] * (kernel[m] * 0.5) + last * (kernel[0] * 0.5);
        for (j, src) in hist.iter().enumerate().take(m).skip(1) {
            acc += src * kernel[m - j];
        }
        acc * Complex64::from(dt)
    };

    let mut a = DVector::from_column_slice(a0);
    let mut hist: Vec<DVector<Complex64>> = Vec::with_capacity(n + 1);
    hist.push(source(&a));
    let mut times = vec![0.0];
    let mut amplitudes = vec![a.clone()];
    for m in 0..n {
        let f0 = -(&hc * &a) * I - spread(&memory(&hist, m, &hist[m]));
        let pred = &a + &f0 * Complex64::from(dt);
        let f1 = -(&hc * &pred) * I - spread(&memory(&hist, m + 1, &source(&pred)));
        a += (f0 + f1) * Complex64::from(0.5 * dt);
        hist.push(source(&a));
        if (m + 1) % stride == 0 {
            times.push((m + 1) as f64 * dt);
            amplitudes.push(a.clone());
        }
    }
    Ok(VolterraSolution {
        times,
        amplitudes,
        halving_deviation: None,
    })
}

/// `e^{−iHt} ψ₀` for a real symmetric `H` by spectral decomposition.
pub fn closed_evolve(h: &DMatrix<f64>, psi0: &[Complex64], t: f64) -> Result<DVector<Complex64>> {
    if h != &h.transpose() {
        return Err(Error::Config("closed evolution needs a symmetric Hamiltonian".into()));
    }
    if psi0.len() != h.nrows() {
        return Err(Error::Config("state and Hamiltonian dimensions differ".into()));
    }
    if t == 0.0 {
        return Ok(DVector::from_column_slice(psi0));
    }
    let (vals, v) = closed_eigensystem(h)?;
    let vc = v.map(|x| Complex64::new(x, 0.0));
    let mut c = vc.transpose() * DVector::from_column_slice(psi0);
    for (ci, e) in c.iter_mut().zip(&vals) {
        *ci *= (-I * e * t).exp();
    }
    Ok(vc * c)
}

/// `K(0) = η ω_c² Γ(s+1)`.
pub fn kernel_at_zero(sd: &SpectralDensity) -> f64 {
    sd.eta * sd.omega_c * sd.omega_c * gamma(sd.s + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{highest_eigenstate, to_complex};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn paper_sd() -> SpectralDensity {
        SpectralDensity::new(0.1, 10.0, 1.0).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let k0 = memory_kernel(&paper_sd(), 0.0, KernelMode::Analytic).unwrap();
        assert!((k0 - c(10.0, 0.0)).norm() < 1e-13);
        assert_relative_eq!(kernel_at_zero(&paper_sd()), 10.0, epsilon = 1e-13);
        let unit = SpectralDensity::new(1.0, 1.0, 1.0).unwrap();
        let k1 = memory_kernel(&unit, 1.0, KernelMode::Analytic).unwrap();
        assert!((k1 - c(0.0, -0.5)).norm() < 1e-15);
        let mut prev = f64::INFINITY;
        for j in 0..200 {
            let m = memory_kernel(&paper_sd(), 0.05 * j as f64, KernelMode::Analytic).unwrap().norm();
            assert!(m < prev);
            prev = m;
        }
        assert!(matches!(
            memory_kernel(&paper_sd(), -1.0, KernelMode::Analytic),
            Err(Error::NegativeTime(_))
        ));
    }

    #[test]
    fn numeric_kernel_matches_closed_form() {
        for sd in [paper_sd(), SpectralDensity::new(0.3, 2.0, 0.6).unwrap(), SpectralDensity::new(0.05, 4.0, 2.5).unwrap()] {
            for t in [0.0, 0.01, 0.3, 1.0, 7.5, 33.0, 100.0] {
                let a = memory_kernel(&sd, t, KernelMode::Analytic).unwrap();
                let n = memory_kernel(&sd, t, KernelMode::Numeric).unwrap();
                assert!((a - n).norm() <= 1e-8 * a.norm(), "s = {}, t = {t}: {a} vs {n}", sd.s);
            }
            let a = memory_kernel(&sd, 0.2, KernelMode::Analytic).unwrap();
            let r = memory_kernel_real_axis(&sd, 0.2).unwrap();
            assert!((a - r).norm() <= 1e-8 * a.norm());
        }
    }

    #[test]
    fn gregory_weights_integrate_cubics() {
        for m in 1..12 {
            let total: f64 = (0..=m).map(|j| gregory_weight(m, j)).sum();
            assert_relative_eq!(total, m as f64, epsilon = 1e-13);
            if m >= 3 {
                let cubic: f64 = (0..=m).map(|j| gregory_weight(m, j) * (j as f64).powi(3)).sum();
                assert_relative_eq!(cubic, (m as f64).powi(4) / 4.0, max_relative = 1e-13);
            }
        }
        let f: Vec<Complex64> = (0..20).map(|j| c(j as f64, 1.0)).collect();
        let g: Vec<Complex64> = (0..20).map(|j| c(1.0, -0.1 * j as f64)).collect();
        for m in 0..20 {
            let direct: Complex64 = (0..=m).map(|j| f[m - j] * g[j] * gregory_weight(m, j)).sum();
            assert!((gregory_convolution(&f, &g, m) - direct).norm() < 1e-12);
        }
    }

    fn es_state(delta: f64) -> (GaahParams, Vec<Complex64>) {
        let p = GaahParams::new(21, delta);
        let (_, es) = highest_eigenstate(&gaah_hamiltonian(&p).unwrap()).unwrap();
        (p, to_complex(es.as_slice()))
    }

    #[test]
    fn zero_coupling_matches_closed_evolution() {
        let (p, _) = es_state(1.0);
        let mut a0 = vec![c(0.0, 0.0); 21];
        a0[3] = c(0.6, 0.0);
        a0[10] = c(0.0, 0.8);
        let sd = SpectralDensity::new(0.0, 10.0, 1.0).unwrap();
        let h = gaah_hamiltonian(&p).unwrap();
        for scheme in [VolterraScheme::ModalGregory, VolterraScheme::HeunTrapezoid] {
            let cfg = VolterraConfig { dt: 0.01, t_max: 20.0, dt_out: 5.0, scheme, ..Default::default() };
            let sol = volterra_solve(&p, &sd, &a0, &cfg).unwrap();
            for (t, a) in sol.times.iter().zip(&sol.amplitudes) {
                let exact = closed_evolve(&h, &a0, *t).unwrap();
                let tol = if scheme == VolterraScheme::ModalGregory { 1e-11 } else { 1e-3 };
                assert!((a - exact).iter().map(|x| x.norm()).fold(0.0, f64::max) < tol, "{scheme} t = {t}");
            }
        }
    }

    #[test]
    fn schemes_agree_and_norm_stays_below_one() {
        let (p, es) = es_state(1.0);
        let base = VolterraConfig { dt: 0.002, t_max: 4.0, dt_out: 0.5, ..Default::default() };
        let modal = volterra_solve(&p, &paper_sd(), &es, &base).unwrap();
        let heun = volterra_solve(
            &p,
            &paper_sd(),
            &es,
            &VolterraConfig { scheme: VolterraScheme::HeunTrapezoid, ..base },
        )
        .unwrap();
        let dev = modal.max_deviation(&heun).unwrap();
        assert!(dev < 5e-3, "{dev}");
        // probability leaks into the bath but partly flows back (non-Markovian memory)
        let norms: Vec<f64> = modal.amplitudes.iter().map(|a| a.norm()).collect();
        assert!(norms.iter().all(|n| *n <= 1.0 + 1e-10));
        assert!(norms.iter().skip(1).all(|n| *n < 0.9));
    }

    #[test]
    fn halving_check_reports_deviation() {
        let (p, es) = es_state(1.0);
        let cfg = VolterraConfig { dt: 0.005, t_max: 5.0, dt_out: 0.5, check_halving: true, ..Default::default() };
        let sol = volterra_solve(&p, &paper_sd(), &es, &cfg).unwrap();
        let dev = sol.halving_deviation.unwrap();
        assert!(dev > 0.0 && dev < 1e-4, "{dev}");
    }

    #[test]
    fn independent_baths_decouple_by_mode() {
        let (p, es) = es_state(1.0);
        let cfg = VolterraConfig {
            dt: 0.005,
            t_max: 3.0,
            dt_out: 0.5,
            coupling: MemoryCoupling::Independent,
            ..Default::default()
        };
        let modal = volterra_solve(&p, &paper_sd(), &es, &cfg).unwrap();
        let heun = volterra_solve(&p, &paper_sd(), &es, &VolterraConfig { scheme: VolterraScheme::HeunTrapezoid, dt: 0.001, ..cfg }).unwrap();
        assert!(modal.max_deviation(&heun).unwrap() < 5e-3);
        // an eigenstate stays in its own mode
        let surv = modal.survival(&es);
        let total: Vec<f64> = modal.amplitudes.iter().map(|a| a.norm_squared()).collect();
        for (s, n) in surv.iter().zip(&total) {
            assert_relative_eq!(s, n, max_relative = 1e-10);
        }
    }

    #[test]
    fn config_guards() {
        let (p, es) = es_state(1.0);
        let sd = paper_sd();
        let bad = |cfg: VolterraConfig| volterra_solve(&p, &sd, &es, &cfg).unwrap_err();
        assert!(bad(VolterraConfig { dt: 0.0, ..Default::default() }).is_config());
        assert!(bad(VolterraConfig { dt: 1e-6, t_max: 10.0, ..Default::default() }).is_config());
        assert!(bad(VolterraConfig { dt: 0.01, dt_out: 0.015, ..Default::default() }).is_config());
        let mut unnormalized = es.clone();
        unnormalized[0] += 0.1;
        assert!(volterra_solve(&p, &sd, &unnormalized, &VolterraConfig::default()).unwrap_err().is_config());
    }

    #[test]
    fn closed_evolve_examples() {
        let h = gaah_hamiltonian(&GaahParams { delta: 0.0, ..GaahParams::new(2, 0.0) }).unwrap();
        let psi0 = [c(1.0, 0.0), c(0.0, 0.0)];
        assert_eq!(closed_evolve(&h, &psi0, 0.0).unwrap().as_slice(), &psi0);
        for t in [0.1, 0.7, 2.3] {
            let psi = closed_evolve(&h, &psi0, t).unwrap();
            assert_relative_eq!(psi[0].norm_sqr(), (2.0 * t).cos().powi(2), epsilon = 1e-13);
        }
        let big = gaah_hamiltonian(&GaahParams::new(21, 1.0)).unwrap();
        let (e, v) = highest_eigenstate(&big).unwrap();
        let psi = closed_evolve(&big, &to_complex(v.as_slice()), 3.0).unwrap();
        for (a, b) in psi.iter().zip(v.iter()) {
            assert!((a - (-I * e * 3.0).exp() * b).norm() < 1e-12);
        }
    }
}
