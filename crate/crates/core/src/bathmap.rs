//! Spectral densities and their discrete bath representations.
//!
//! With `h(x) = ω_c x` and `g(x) = √η ω_c x^{s/2} e^{−x/2}`, the Ohmic density
//! `J(ω) = η ω (ω/ω_c)^{s−1} e^{−ω/ω_c}` is `g²(h⁻¹(ω)) · dh⁻¹/dω`, so a Gauss
//! rule for `w(x) = g²(x)` turns the continuum into discrete modes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::cquad::{complex_jacobi, complex_recurrence, contour_rule, ContourMeasure};
use crate::error::{Error, Result};
use crate::integrate::integrate;
use crate::polyquad::{golub_welsch, jacobi_matrix, laguerre_recurrence, ContourRule};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Ohmic-family spectral density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    pub eta: f64,
    pub omega_c: f64,
    pub s: f64,
}

impl SpectralDensity {
    pub fn new(eta: f64, omega_c: f64, s: f64) -> Result<Self> {
        let sd = Self { eta, omega_c, s };
        sd.validate()?;
        Ok(sd)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::Config(format!("eta must be nonnegative, got {}", self.eta)));
        }
        if !(self.omega_c > 0.0) || !self.omega_c.is_finite() {
            return Err(Error::Config(format!("omega_c must be positive, got {}", self.omega_c)));
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::Config(format!("s must be positive, got {}", self.s)));
        }
        Ok(())
    }

    /// Total weight of `w = g²`, i.e. `∫ g²(x) dx = η ω_c² Γ(s+1)`.
    pub fn total_weight(&self) -> f64 {
        self.eta * self.omega_c * self.omega_c * gamma(self.s + 1.0)
    }
}

/// `J(ω) = η ω (ω/ω_c)^{s−1} e^{−ω/ω_c}`; zero for `ω ≤ 0`.
pub fn ohmic_j(sd: &SpectralDensity, omega: f64) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    sd.eta * omega * (omega / sd.omega_c).powf(sd.s - 1.0) * (-omega / sd.omega_c).exp()
}

/// The `h`/`g` pair factorizing the spectral density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HgChoice {
    sd: SpectralDensity,
}

pub fn hg_choice(sd: &SpectralDensity) -> HgChoice {
    HgChoice { sd: *sd }
}

impl HgChoice {
    pub fn h(&self, x: f64) -> f64 {
        self.sd.omega_c * x
    }

    pub fn h_inv(&self, omega: f64) -> f64 {
        omega / self.sd.omega_c
    }

    /// `d h⁻¹ / dω`.
    pub fn h_inv_derivative(&self) -> f64 {
        1.0 / self.sd.omega_c
    }

    pub fn g(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.sd.eta.sqrt() * self.sd.omega_c * x.powf(0.5 * self.sd.s) * (-0.5 * x).exp()
    }

    /// `g` continued to complex arguments on the principal branch of `z^{s/2}`.
    pub fn g_complex(&self, z: Complex64) -> Complex64 {
        if z == Complex64::new(0.0, 0.0) {
            return z;
        }
        let amp = self.sd.eta.sqrt() * self.sd.omega_c;
        (z.ln() * (0.5 * self.sd.s) - z * 0.5).exp() * amp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathKind {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathMeta {
    pub n_k: usize,
    pub radius: Option<f64>,
    pub omega_c: f64,
    pub eta: f64,
    pub s: f64,
    pub kind: BathKind,
}

/// Star-form bath: independent modes with energies and system couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct BathDiscretization {
    pub energies: Vec<Complex64>,
    pub couplings: Vec<Complex64>,
    pub meta: BathMeta,
}

impl BathDiscretization {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `Σ_j 𝕘_j² e^{−i E_j t}`, the memory kernel carried by the discrete modes.
    pub fn reconstructed_kernel(&self, t: f64) -> Complex64 {
        self.energies
            .iter()
            .zip(&self.couplings)
            .map(|(e, g)| g * g * (-I * e * t).exp())
            .sum()
    }
}

/// Chain form of a real bath.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainEnv {
    /// `ω_c` times the Jacobi matrix of `w = g²`.
    pub matrix: DMatrix<f64>,
    /// Coupling of the system to the first chain site, `√(∫ g²)`.
    pub kappa0: f64,
}

fn check_modes(n_k: usize) -> Result<()> {
    if n_k == 0 {
        return Err(Error::Config("N_k must be at least 1".into()));
    }
    Ok(())
}

pub fn chain_env_real(sd: &SpectralDensity, n_k: usize) -> Result<ChainEnv> {
    sd.validate()?;
    check_modes(n_k)?;
    let r = laguerre_recurrence(1.0, sd.s, n_k)?;
    Ok(ChainEnv {
        matrix: jacobi_matrix(&r) * sd.omega_c,
        kappa0: sd.total_weight().sqrt(),
    })
}

/// Real star bath: energies `ω_c x_i`, couplings `√w_i`.
pub fn star_env_real(sd: &SpectralDensity, n_k: usize) -> Result<BathDiscretization> {
    sd.validate()?;
    check_modes(n_k)?;
    // nodes do not depend on the prefactor; scaling weights afterwards keeps η = 0 legal
    let rule = golub_welsch(&laguerre_recurrence(1.0, sd.s, n_k)?)?;
    let scale = sd.eta * sd.omega_c * sd.omega_c;
    Ok(BathDiscretization {
        energies: rule
            .nodes
            .iter()
            .map(|x| Complex64::new(sd.omega_c * x, 0.0))
            .collect(),
        couplings: rule
            .weights
            .iter()
            .map(|w| Complex64::new((w * scale).sqrt(), 0.0))
            .collect(),
        meta: BathMeta {
            n_k,
            radius: None,
            omega_c: sd.omega_c,
            eta: sd.eta,
            s: sd.s,
            kind: BathKind::Real,
        },
    })
}

/// Unit-weight contour rule with `n_k` nodes.
pub fn unit_contour_rule(n_k: usize) -> Result<ContourRule> {
    check_modes(n_k)?;
    contour_rule(&complex_recurrence(&ContourMeasure::unit(), n_k)?)
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Config(format!("contour radius R must be positive, got {radius}")));
    }
    Ok(())
}

/// Complex star bath on the translated contour `x = R(1 + ζ)`.
pub fn star_env_complex(sd: &SpectralDensity, n_k: usize, radius: f64) -> Result<BathDiscretization> {
    check_radius(radius)?;
    let rule = unit_contour_rule(n_k)?;
    star_env_complex_from_rule(sd, &rule, radius)
}

/// As [`star_env_complex`] with a precomputed unit contour rule.
pub fn star_env_complex_from_rule(
    sd: &SpectralDensity,
    rule: &ContourRule,
    radius: f64,
) -> Result<BathDiscretization> {
    sd.validate()?;
    check_radius(radius)?;
    check_modes(rule.len())?;
    let hg = hg_choice(sd);
    let mut energies = Vec::with_capacity(rule.len());
    let mut couplings = Vec::with_capacity(rule.len());
    for (zeta, w) in rule.nodes.iter().zip(&rule.weights) {
        let x = (zeta + 1.0) * radius;
        energies.push(x * sd.omega_c);
        couplings.push((I * radius * zeta).sqrt() * w.sqrt() * hg.g_complex(x));
    }
    Ok(BathDiscretization {
        energies,
        couplings,
        meta: BathMeta {
            n_k: rule.len(),
            radius: Some(radius),
            omega_c: sd.omega_c,
            eta: sd.eta,
            s: sd.s,
            kind: BathKind::Complex,
        },
    })
}

/// Chain form of the complex bath, `ω_c R (𝟙 + M_c)`; its eigenvalues are
/// the complex star energies.
pub fn chain_env_complex(sd: &SpectralDensity, n_k: usize, radius: f64) -> Result<DMatrix<Complex64>> {
    sd.validate()?;
    check_modes(n_k)?;
    check_radius(radius)?;
    let mc = complex_jacobi(&complex_recurrence(&ContourMeasure::unit(), n_k)?);
    let id = DMatrix::<Complex64>::identity(n_k, n_k);
    Ok((id + mc) * Complex64::new(sd.omega_c * radius, 0.0))
}

/// `∫_0^{cutoff} J(ω) e^{−iωt} dω`; closed form for `s = 1`, adaptive
/// quadrature otherwise.
pub fn truncated_kernel(sd: &SpectralDensity, cutoff: f64, t: f64) -> Result<Complex64> {
    sd.validate()?;
    if !(cutoff >= 0.0) {
        return Err(Error::Config("kernel cutoff must be nonnegative".into()));
    }
    if sd.s == 1.0 {
        let a = I * t + 1.0 / sd.omega_c;
        let tail = (-a * cutoff).exp() * (cutoff / a + 1.0 / (a * a));
        return Ok((1.0 / (a * a) - tail) * sd.eta);
    }
    let (v, _) = integrate(
        |w| (-I * w * t).exp() * ohmic_j(sd, w),
        0.0,
        cutoff,
        1e-13 * sd.total_weight().max(f64::MIN_POSITIVE),
        1e-12,
    )?;
    Ok(v)
}
