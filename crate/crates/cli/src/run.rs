use std::path::PathBuf;
use std::time::Instant;

use cxdisc::analysis::{phase_diagram, PhaseDiagramSpec};
use cxdisc::bathmap::{star_env_complex, star_env_real, unit_contour_rule, BathDiscretization};
use cxdisc::models::{
    biorth_eig, build_heff, closed_eigensystem, dephasing_discrete_causal, dephasing_discrete_real,
    dephasing_exact, gaah_hamiltonian, to_complex, Eigensystem,
};
use cxdisc::oracle::{volterra_solve, VolterraSolution};
use cxdisc::polyquad::{golub_welsch, laguerre_recurrence};
use cxdisc::Complex64;
use serde::Serialize;

use crate::config::{BathChoice, Experiment, ExperimentConfig, Resolved};
use crate::output::{manifest_path, num, opt, Table};
use crate::CliError;

/// What a completed run wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub output: PathBuf,
    pub manifest: PathBuf,
    pub rows: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    run: RunInfo,
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct RunInfo {
    experiment: &'static str,
    version: &'static str,
    output: String,
    rows: usize,
    threads: usize,
    initial_state: usize,
    wall_time_seconds: f64,
}

/// Resolves `cfg`, computes its table and writes the table plus manifest.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let resolved = cfg.resolve()?;
    let table = compute(&resolved)?;
    let output = cfg.output_path();
    table.write(&output)?;

    let mut effective = cfg.clone();
    effective.output = Some(output.clone());
    let manifest = Manifest {
        run: RunInfo {
            experiment: cfg.experiment.as_str(),
            version: env!("CARGO_PKG_VERSION"),
            output: output.display().to_string(),
            rows: table.rows.len(),
            threads: rayon::current_num_threads(),
            initial_state: resolved.state,
            wall_time_seconds: start.elapsed().as_secs_f64(),
        },
        config: &effective,
    };
    let manifest_file = manifest_path(&output);
    let text = toml::to_string(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(&manifest_file, text)?;
    Ok(RunReport { output, manifest: manifest_file, rows: table.rows.len() })
}

/// Computes the output table of a resolved configuration.
pub fn compute(r: &Resolved) -> Result<Table, CliError> {
    match r.experiment {
        Experiment::QuadDump => quad_dump(r),
        Experiment::CquadDump => cquad_dump(r),
        Experiment::BathDump => bath_dump(r),
        Experiment::Dephasing => dephasing(r),
        Experiment::GaahSurvival => gaah_survival(r),
        Experiment::GaahLongtime => gaah_longtime(r),
        Experiment::AspDiagram => asp_diagram(r),
        Experiment::Oracle => oracle(r),
        Experiment::Compare => compare(r),
    }
}

/// Gauss rule of `x^s e^{−x}` on `[0, ∞)`.
fn quad_dump(r: &Resolved) -> Result<Table, CliError> {
    let rule = golub_welsch(&laguerre_recurrence(1.0, r.sd.s, r.n_k)?)?;
    let mut t = Table::new(vec!["index", "node", "weight"]);
    for (i, (x, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        t.push(vec![i.to_string(), num(*x), num(*w)]);
    }
    Ok(t)
}

/// Unit-weight contour rule.
fn cquad_dump(r: &Resolved) -> Result<Table, CliError> {
    let rule = unit_contour_rule(r.n_k)?;
    let mut t = Table::new(vec!["index", "re_node", "im_node", "re_weight", "im_weight"]);
    for (i, (z, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        t.push(vec![i.to_string(), num(z.re), num(z.im), num(w.re), num(w.im)]);
    }
    Ok(t)
}

fn bath(r: &Resolved) -> Result<BathDiscretization, CliError> {
    Ok(match r.kind {
        BathChoice::Real => star_env_real(&r.sd, r.n_k)?,
        BathChoice::Complex => star_env_complex(&r.sd, r.n_k, r.radius)?,
    })
}

fn bath_dump(r: &Resolved) -> Result<Table, CliError> {
    let b = bath(r)?;
    let mut t = Table::new(vec!["j", "re_energy", "im_energy", "re_coupling", "im_coupling"]);
    for (j, (e, g)) in b.energies.iter().zip(&b.couplings).enumerate() {
        t.push(vec![j.to_string(), num(e.re), num(e.im), num(g.re), num(g.im)]);
    }
    Ok(t)
}

/// `−ln L(t)` of the discrete bath against the continuum value.
fn dephasing(r: &Resolved) -> Result<Table, CliError> {
    let b = bath(r)?;
    let mut t = match r.kind {
        BathChoice::Real => Table::new(vec!["t", "approx", "exact", "abs_err"]),
        BathChoice::Complex => Table::new(vec!["t", "approx", "im_approx", "exact", "abs_err"]),
    };
    for time in r.times() {
        let exact = dephasing_exact(time, &r.sd)?.value;
        match r.kind {
            BathChoice::Real => {
                let approx = dephasing_discrete_real(&b, time)?;
                t.push(vec![num(time), num(approx), num(exact), num((approx - exact).abs())]);
            }
            BathChoice::Complex => {
                let approx = dephasing_discrete_causal(&b, time);
                t.push(vec![
                    num(time),
                    num(approx.re),
                    num(approx.im),
                    num(exact),
                    num((approx.re - exact).abs()),
                ]);
            }
        }
    }
    Ok(t)
}

/// Eigensystem of the lattice plus discrete bath and the chosen initial state.
fn discretized(r: &Resolved) -> Result<(Eigensystem, Vec<Complex64>), CliError> {
    let h = gaah_hamiltonian(&r.lattice)?;
    let (_, vecs) = closed_eigensystem(&h)?;
    let state = to_complex(vecs.column(r.state).as_slice());
    let b = bath(r)?;
    let e = biorth_eig(&build_heff(&h, &b, r.conjugation)?)?;
    Ok((e, state))
}

fn gaah_survival(r: &Resolved) -> Result<Table, CliError> {
    let (e, state) = discretized(r)?;
    let amp = e.survival_amplitude(&state, &state)?;
    let mut t = Table::new(vec!["t", "re_amplitude", "im_amplitude", "survival"]);
    for time in r.times() {
        let a = amp.amplitude(time);
        t.push(vec![num(time), num(a.re), num(a.im), num(a.norm_sqr())]);
    }
    Ok(t)
}

/// Survival probability with its running trapezoidal average from `t_min`.
fn gaah_longtime(r: &Resolved) -> Result<Table, CliError> {
    let (e, state) = discretized(r)?;
    let amp = e.survival_amplitude(&state, &state)?;
    let mut t = Table::new(vec!["t", "survival", "running_average"]);
    let times = r.times();
    let mut integral = 0.0;
    let mut prev = amp.probability(times[0]);
    t.push(vec![num(times[0]), num(prev), num(prev)]);
    for &time in &times[1..] {
        let p = amp.probability(time);
        integral += 0.5 * (prev + p) * r.dt_out;
        prev = p;
        t.push(vec![num(time), num(p), num(integral / (time - r.t_min))]);
    }
    Ok(t)
}

fn asp_diagram(r: &Resolved) -> Result<Table, CliError> {
    let rows = phase_diagram(&PhaseDiagramSpec {
        lattice: r.lattice,
        deltas: r.deltas.clone(),
        sd: r.sd,
        n_k: r.n_k,
        radius: r.radius,
        window: r.window,
        conjugation: r.conjugation,
    })?;
    let mut t = Table::new(vec!["Delta", "n", "E_n", "E_c", "side", "asp"]);
    for row in rows {
        t.push(vec![
            num(row.delta),
            row.index.to_string(),
            num(row.energy),
            opt(row.e_c),
            row.side.as_str().to_string(),
            num(row.asp),
        ]);
    }
    Ok(t)
}

/// Volterra solution restricted to samples at or after `t_min`.
fn solve_oracle(r: &Resolved) -> Result<(VolterraSolution, Vec<Complex64>, usize), CliError> {
    let skip = r.t_min / r.dt_out;
    if (skip - skip.round()).abs() > 1e-9 * skip.max(1.0) {
        return Err(CliError::Config("time.t_min: must be a multiple of dt_out for the oracle".into()));
    }
    let h = gaah_hamiltonian(&r.lattice)?;
    let (_, vecs) = closed_eigensystem(&h)?;
    let state = to_complex(vecs.column(r.state).as_slice());
    let sol = volterra_solve(&r.lattice, &r.sd, &state, &r.volterra)?;
    Ok((sol, state, skip.round() as usize))
}

fn oracle(r: &Resolved) -> Result<Table, CliError> {
    let (sol, state, skip) = solve_oracle(r)?;
    let target = nalgebra::DVector::from_column_slice(&state);
    let mut t = Table::new(vec!["t", "re_amplitude", "im_amplitude", "survival", "system_norm"]);
    for (time, a) in sol.times.iter().zip(&sol.amplitudes).skip(skip) {
        let amp = target.dotc(a);
        t.push(vec![num(*time), num(amp.re), num(amp.im), num(amp.norm_sqr()), num(a.norm_squared())]);
    }
    Ok(t)
}

/// Oracle survival against the discretized-bath survival on the same grid.
fn compare(r: &Resolved) -> Result<Table, CliError> {
    let (sol, state, skip) = solve_oracle(r)?;
    let oracle = sol.survival(&state);
    let (e, state) = discretized(r)?;
    let amp = e.survival_amplitude(&state, &state)?;
    let mut t = Table::new(vec!["t", "oracle", "discretized", "abs_err"]);
    for (time, exact) in sol.times.iter().zip(&oracle).skip(skip) {
        let approx = amp.probability(*time);
        t.push(vec![num(*time), num(*exact), num(approx), num((approx - exact).abs())]);
    }
    Ok(t)
}
