//! Derived observables: averaged survival probability, mobility edge,
//! phase-diagram sweeps and recurrence-onset detection.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bathmap::{star_env_complex_from_rule, star_env_real, unit_contour_rule, SpectralDensity};
use crate::error::{Error, Result};
use crate::models::{
    biorth_eig, build_heff, closed_eigensystem, dephasing_discrete_real, dephasing_exact, gaah_hamiltonian,
    to_complex, CouplingConjugation, Eigensystem, GaahParams,
};

/// Consecutive samples a deviation must persist to count as recurrence.
pub const RECURRENCE_PERSISTENCE: usize = 5;
pub const DEFAULT_RECURRENCE_TOL: f64 = 0.02;

/// Averaging window `[t0, t1]` sampled every `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AspWindow {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

impl Default for AspWindow {
    fn default() -> Self {
        Self { t0: 100.0, t1: 1000.0, dt: 0.5 }
    }
}

impl AspWindow {
    fn samples(&self) -> Result<usize> {
        if !(self.t0 >= 0.0) || !(self.t1 > self.t0) || !self.t1.is_finite() {
            return Err(Error::Config(format!(
                "ASP window needs 0 <= t0 < t1, got [{}, {}]",
                self.t0, self.t1
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("ASP sample spacing must be positive, got {}", self.dt)));
        }
        let n = ((self.t1 - self.t0) / self.dt).round();
        if (n * self.dt - (self.t1 - self.t0)).abs() > 1e-9 * (self.t1 - self.t0) {
            return Err(Error::Config("ASP window length must be a multiple of dt".into()));
        }
        Ok(n as usize)
    }
}

/// Trapezoidal time average of `|⟨state|ψ(t)⟩|²` over the window, with
/// `ψ(0) = state`.
pub fn asp(e: &Eigensystem, state: &[Complex64], window: &AspWindow) -> Result<f64> {
    let n = window.samples()?;
    let amp = e.survival_amplitude(state, state)?;
    let mut acc = 0.5 * (amp.probability(window.t0) + amp.probability(window.t1));
    for k in 1..n {
        acc += amp.probability(window.t0 + k as f64 * window.dt);
    }
    Ok(acc / n as f64)
}

/// `E_c = sign(λ)(2|λ| − |Δ|)/a` with `λ` the hopping amplitude; `None` at
/// `a = 0`, where the transition sits at `Δ = 2` for every energy.
pub fn mobility_edge(p: &GaahParams) -> Option<f64> {
    if p.a == 0.0 {
        return None;
    }
    let lambda = p.hopping;
    Some(lambda.signum() * (2.0 * lambda.abs() - p.delta.abs()) / p.a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Extended,
    Localized,
    None,
}

impl Side {
    pub fn classify(energy: f64, e_c: Option<f64>) -> Self {
        match e_c {
            None => Side::None,
            Some(ec) if energy < ec => Side::Extended,
            Some(_) => Side::Localized,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Extended => "extended",
            Side::Localized => "localized",
            Side::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AspResult {
    pub delta: f64,
    /// Index of the closed-system eigenstate, ascending in energy.
    pub index: usize,
    pub energy: f64,
    pub e_c: Option<f64>,
    pub side: Side,
    pub asp: f64,
    pub window: AspWindow,
}

/// Sweep parameters for [`phase_diagram`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagramSpec {
    /// Lattice parameters; `delta` is overridden by each grid value.
    pub lattice: GaahParams,
    pub deltas: Vec<f64>,
    pub sd: SpectralDensity,
    pub n_k: usize,
    pub radius: f64,
    pub window: AspWindow,
    pub conjugation: CouplingConjugation,
}

/// Default potential grid `0.2, 0.4, …, 6.0`.
pub fn default_delta_grid() -> Vec<f64> {
    (1..=30).map(|k| k as f64 / 5.0).collect()
}

/// ASP of every closed-system eigenstate for every `Δ` in the grid; rows
/// sorted by `(Δ, n)`.
pub fn phase_diagram(spec: &PhaseDiagramSpec) -> Result<Vec<AspResult>> {
    if spec.deltas.is_empty() {
        return Err(Error::Config("phase diagram needs at least one Delta".into()));
    }
    spec.window.samples()?;
    let rule = unit_contour_rule(spec.n_k)?;
    let bath = star_env_complex_from_rule(&spec.sd, &rule, spec.radius)?;
    let mut deltas = spec.deltas.clone();
    deltas.sort_by(f64::total_cmp);

    let blocks: Vec<Vec<AspResult>> = deltas
        .par_iter()
        .map(|&delta| {
            let p = GaahParams { delta, ..spec.lattice };
            let h = gaah_hamiltonian(&p)?;
            let (energies, vecs) = closed_eigensystem(&h)?;
            let eig = biorth_eig(&build_heff(&h, &bath, spec.conjugation)?)?;
            let e_c = mobility_edge(&p);
            (0..energies.len())
                .into_par_iter()
                .map(|n| {
                    let state = to_complex(vecs.column(n).as_slice());
                    Ok(AspResult {
                        delta,
                        index: n,
                        energy: energies[n],
                        e_c,
                        side: Side::classify(energies[n], e_c),
                        asp: asp(&eig, &state, &spec.window)?,
                        window: spec.window,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// Values sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        Ok(Self { times, values })
    }

    /// Samples `f` at `k·dt` for `k = 0..=round(t_max/dt)`.
    pub fn sample<F: FnMut(f64) -> Result<f64>>(dt: f64, t_max: f64, mut f: F) -> Result<Self> {
        if !(dt > 0.0) || !(t_max >= 0.0) {
            return Err(Error::Config("sampling needs dt > 0 and t_max >= 0".into()));
        }
        let n = (t_max / dt).round() as usize;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        let values = times.iter().map(|t| f(*t)).collect::<Result<Vec<_>>>()?;
        Ok(Self { times, values })
    }
}

/// First time at which `|approx − exact| / |exact|` exceeds `tol` and stays
/// above it for [`RECURRENCE_PERSISTENCE`] consecutive samples.
pub fn recurrence_time(exact: &TimeSeries, approx: &TimeSeries, tol: f64) -> Result<Option<f64>> {
    if exact.times.len() != approx.times.len() || exact.values.len() != exact.times.len() {
        return Err(Error::GridMismatch(format!(
            "series lengths differ ({} vs {})",
            exact.times.len(),
            approx.times.len()
        )));
    }
    for (a, b) in exact.times.iter().zip(&approx.times) {
        if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("sample times {a} and {b} differ")));
        }
    }
    let mut run = 0;
    for (k, (e, a)) in exact.values.iter().zip(&approx.values).enumerate() {
        let dev = (a - e).abs();
        let rel = if dev == 0.0 { 0.0 } else { dev / e.abs() };
        if rel > tol {
            run += 1;
            if run == RECURRENCE_PERSISTENCE {
                return Ok(Some(exact.times[k + 1 - RECURRENCE_PERSISTENCE]));
            }
        } else {
            run = 0;
        }
    }
    Ok(None)
}

/// Recurrence onset of the real-star dephasing estimate against the
/// continuum value, sampled every `dt` up to `t_max`.
pub fn dephasing_recurrence_onset(
    sd: &SpectralDensity,
    n_k: usize,
    tol: f64,
    dt: f64,
    t_max: f64,
) -> Result<Option<f64>> {
    let bath = star_env_real(sd, n_k)?;
    let exact = TimeSeries::sample(dt, t_max, |t| Ok(dephasing_exact(t, sd)?.value))?;
    let approx = TimeSeries::sample(dt, t_max, |t| dephasing_discrete_real(&bath, t))?;
    recurrence_time(&exact, &approx, tol)
}
