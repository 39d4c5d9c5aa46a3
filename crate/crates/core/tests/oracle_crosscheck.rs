//! The Volterra solver against exact diagonalization of the lattice coupled
//! to a dense Hermitian bath whose kernel equals the continuum one on the
//! tested horizon.

use cxdisc::bathmap::{ohmic_j, SpectralDensity};
use cxdisc::models::{gaah_hamiltonian, highest_eigenstate, to_complex, GaahParams};
use cxdisc::oracle::{memory_kernel, volterra_solve, KernelMode, VolterraConfig};
use cxdisc::polyquad::gauss_legendre;
use cxdisc::Complex64;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

const MODES: usize = 1400;
const CUTOFF: f64 = 300.0;
const HORIZON: f64 = 8.0;

struct DenseBath {
    energies: Vec<f64>,
    couplings: Vec<f64>,
}

fn dense_bath(sd: &SpectralDensity) -> DenseBath {
    let gl = gauss_legendre(MODES).unwrap();
    let half = 0.5 * CUTOFF;
    let energies: Vec<f64> = gl.nodes.iter().map(|x| half * (x + 1.0)).collect();
    let couplings = energies
        .iter()
        .zip(&gl.weights)
        .map(|(w, q)| (half * q * ohmic_j(sd, *w)).sqrt())
        .collect();
    DenseBath { energies, couplings }
}

fn kernel(b: &DenseBath, t: f64) -> Complex64 {
    b.energies
        .iter()
        .zip(&b.couplings)
        .map(|(w, g)| g * g * Complex64::new(0.0, -w * t).exp())
        .sum()
}

/// Site amplitudes `a(t)` from the spectral decomposition of the lattice
/// plus common bath Hamiltonian.
fn exact_amplitudes(p: &GaahParams, b: &DenseBath, a0: &[Complex64], times: &[f64]) -> Vec<DVector<Complex64>> {
    let h = gaah_hamiltonian(p).unwrap();
    let n_s = p.n_s;
    let dim = n_s + b.energies.len();
    let mut full = DMatrix::<f64>::zeros(dim, dim);
    full.view_mut((0, 0), (n_s, n_s)).copy_from(&h);
    for (j, (w, g)) in b.energies.iter().zip(&b.couplings).enumerate() {
        let k = n_s + j;
        full[(k, k)] = *w;
        for n in 0..n_s {
            full[(n, k)] = *g;
            full[(k, n)] = *g;
        }
    }
    let eig = SymmetricEigen::new(full);
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let mut psi0 = DVector::<Complex64>::zeros(dim);
    psi0.rows_mut(0, n_s).copy_from_slice(a0);
    let coeff = v.adjoint() * psi0;
    times
        .iter()
        .map(|&t| {
            let phased = DVector::from_iterator(
                dim,
                coeff
                    .iter()
                    .zip(eig.eigenvalues.iter())
                    .map(|(c, e)| c * Complex64::new(0.0, -e * t).exp()),
            );
            (&v * phased).rows(0, n_s).into_owned()
        })
        .collect()
}

#[test]
fn dense_bath_kernel_matches_continuum() {
    let sd = SpectralDensity::new(0.1, 10.0, 1.0).unwrap();
    let b = dense_bath(&sd);
    for k in 0..=80 {
        let t = k as f64 * HORIZON / 80.0;
        let exact = memory_kernel(&sd, t, KernelMode::Analytic).unwrap();
        assert!((kernel(&b, t) - exact).norm() < 1e-9, "t = {t}");
    }
}

#[test]
fn volterra_matches_exact_diagonalization() {
    let sd = SpectralDensity::new(0.1, 10.0, 1.0).unwrap();
    let b = dense_bath(&sd);
    for delta in [1.0, 2.5] {
        let p = GaahParams::new(21, delta);
        let (_, es) = highest_eigenstate(&gaah_hamiltonian(&p).unwrap()).unwrap();
        let a0 = to_complex(es.as_slice());
        let cfg = VolterraConfig { t_max: HORIZON, dt_out: 0.1, ..VolterraConfig::default() };
        let sol = volterra_solve(&p, &sd, &a0, &cfg).unwrap();
        let exact = exact_amplitudes(&p, &b, &a0, &sol.times);
        let err = sol
            .amplitudes
            .iter()
            .zip(&exact)
            .map(|(a, e)| (a - e).iter().map(|x| x.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "Delta = {delta}: max amplitude error {err:e}");
        let norm_drop = 1.0 - sol.amplitudes.last().unwrap().norm_squared();
        assert!(norm_drop > 0.1, "bath must matter on this horizon, lost {norm_drop}");
    }
}
