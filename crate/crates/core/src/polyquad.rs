//! Real orthonormal polynomials, Jacobi matrices and Gauss rules.
//!
//! A [`RealMeasure`] carries a weight `w(x) ≥ 0` on `[a, b]`. Its monic
//! orthogonal polynomials obey
//!
//! ```text
//! p_{k+1}(x) = (x - α_k) p_k(x) - β_k p_{k-1}(x)
//! ```
//!
//! and the Gauss nodes are the eigenvalues of the symmetric tridiagonal
//! Jacobi matrix with diagonal `α_k` and off-diagonal `√β_k`. The weight of
//! node `x_i` is `q₀² · mass`, where `q` is the unit eigenvector for `x_i`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::linalg::symtridiag_ql;

/// Weight families understood by [`RealMeasure`].
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFamily {
    /// `w(x) = c · x^s · e^{-x}` on `[0, ∞)`.
    LaguerreLike { prefactor: f64, power: f64 },
    /// A discrete measure `Σ w_i δ(x - x_i)`.
    Tabulated { nodes: Vec<f64>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealMeasure {
    support: (f64, f64),
    weight: WeightFamily,
    mass: f64,
}

impl RealMeasure {
    /// `c · x^s · e^{-x}` on `[0, ∞)`, with mass `c · Γ(s + 1)`.
    pub fn laguerre(prefactor: f64, power: f64) -> Result<Self> {
        if !(prefactor > 0.0) || !prefactor.is_finite() {
            return Err(Error::Config(format!(
                "laguerre weight prefactor must be positive, got {prefactor}"
            )));
        }
        if !(power > -1.0) || !power.is_finite() {
            return Err(Error::Config(format!(
                "laguerre weight power must exceed -1 for integrability, got {power}"
            )));
        }
        Ok(Self {
            support: (0.0, f64::INFINITY),
            weight: WeightFamily::LaguerreLike { prefactor, power },
            mass: prefactor * gamma(power + 1.0),
        })
    }

    /// Discrete measure from tabulated points and nonnegative masses.
    pub fn tabulated(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::Config(
                "tabulated measure needs equally many nodes and weights".into(),
            ));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite())
            || nodes.iter().any(|x| !x.is_finite())
        {
            return Err(Error::Config(
                "tabulated measure needs finite nodes and nonnegative weights".into(),
            ));
        }
        let mass: f64 = weights.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::Config("tabulated measure has zero mass".into()));
        }
        let lo = nodes.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = nodes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Err(Error::Config("tabulated measure has degenerate support".into()));
        }
        Ok(Self {
            support: (lo, hi),
            weight: WeightFamily::Tabulated { nodes, weights },
            mass,
        })
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn weight(&self) -> &WeightFamily {
        &self.weight
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Pointwise weight for continuous families; `None` for tabulated ones.
    pub fn weight_at(&self, x: f64) -> Option<f64> {
        match &self.weight {
            WeightFamily::LaguerreLike { prefactor, power } => {
                if x < 0.0 {
                    Some(0.0)
                } else if x == 0.0 {
                    Some(if *power == 0.0 { *prefactor } else { 0.0 })
                } else {
                    Some(prefactor * x.powf(*power) * (-x).exp())
                }
            }
            WeightFamily::Tabulated { .. } => None,
        }
    }
}

/// Dense polynomial with ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Self(c)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Three-term recurrence coefficients of a real measure.
///
/// `beta[0]` holds the mass; `beta[k]` for `k ≥ 1` is the recurrence `β_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceCoefficients {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl RecurrenceCoefficients {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || alpha.len() != beta.len() {
            return Err(Error::Config(
                "recurrence needs n alphas and n betas (beta[0] = mass)".into(),
            ));
        }
        for (k, b) in beta.iter().enumerate() {
            if !(*b > 0.0) || !b.is_finite() {
                return Err(Error::LossOfOrthogonality { k, value: *b });
            }
        }
        if let Some(k) = alpha.iter().position(|a| !a.is_finite()) {
            return Err(Error::LossOfOrthogonality { k, value: alpha[k] });
        }
        Ok(Self { alpha, beta })
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn mass(&self) -> f64 {
        self.beta[0]
    }

    /// Leading `n` coefficients.
    pub fn truncate(&self, n: usize) -> Self {
        let n = n.min(self.n()).max(1);
        Self {
            alpha: self.alpha[..n].to_vec(),
            beta: self.beta[..n].to_vec(),
        }
    }
}

/// Whether a rule lives on the real line or on the lower unit semicircle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Real,
    Contour,
}

/// Nodes and weights of a Gauss rule; `f64` for real rules, `Complex64` for
/// contour rules.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub mass: T,
    pub kind: RuleKind,
}

pub type RealRule = QuadratureRule<f64>;
pub type ContourRule = QuadratureRule<Complex64>;

impl<T: Copy> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn degree_of_exactness(&self) -> usize {
        2 * self.nodes.len() - 1
    }
}

/// `Σ w_i f(x_i)`.
pub fn quad_integrate<T, F>(rule: &QuadratureRule<T>, f: F) -> T
where
    T: Copy + std::ops::Mul<Output = T> + std::iter::Sum<T>,
    F: Fn(T) -> T,
{
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * f(x))
        .sum()
}

/// Closed-form generalized-Laguerre recurrence for `c · x^s · e^{-x}`.
pub fn laguerre_recurrence(prefactor: f64, power: f64, n: usize) -> Result<RecurrenceCoefficients> {
    let measure = RealMeasure::laguerre(prefactor, power)?;
    if n == 0 {
        return Err(Error::Config("recurrence length must be at least 1".into()));
    }
    let alpha = (0..n).map(|k| 2.0 * k as f64 + power + 1.0).collect();
    let beta = (0..n)
        .map(|k| {
            if k == 0 {
                measure.mass()
            } else {
                k as f64 * (k as f64 + power)
            }
        })
        .collect();
    RecurrenceCoefficients::new(alpha, beta)
}

/// Recurrence coefficients by the cheapest reliable route: closed form for
/// Laguerre-like weights, discretized Stieltjes otherwise.
pub fn recurrence(m: &RealMeasure, n: usize) -> Result<RecurrenceCoefficients> {
    match m.weight() {
        WeightFamily::LaguerreLike { prefactor, power } => laguerre_recurrence(*prefactor, *power, n),
        WeightFamily::Tabulated { .. } => stieltjes_recurrence(m, n),
    }
}

/// Discretized Stieltjes procedure.
///
/// Continuous weights are first replaced by their own Gauss rule with
/// `8 · n_max` points (exact for every inner product the sweep needs); the
/// sweep then runs on orthonormal vectors over that discrete measure.
pub fn stieltjes_recurrence(m: &RealMeasure, n_max: usize) -> Result<RecurrenceCoefficients> {
    if n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    let (nodes, weights) = match m.weight() {
        WeightFamily::LaguerreLike { prefactor, power } => {
            let reference = golub_welsch(&laguerre_recurrence(*prefactor, *power, 8 * n_max)?)?;
            (reference.nodes, reference.weights)
        }
        WeightFamily::Tabulated { nodes, weights } => {
            let support = weights.iter().filter(|w| **w > 0.0).count();
            if n_max > support {
                return Err(Error::Config(format!(
                    "discrete measure with {support} points supports at most {support} coefficients"
                )));
            }
            (nodes.clone(), weights.clone())
        }
    };
    let mass: f64 = weights.iter().sum();
    let mut alpha = Vec::with_capacity(n_max);
    let mut beta = Vec::with_capacity(n_max);
    beta.push(mass);

    let mut prev = vec![0.0; nodes.len()];
    let mut cur = vec![1.0 / mass.sqrt(); nodes.len()];
    for k in 0..n_max {
        let a: f64 = nodes
            .iter()
            .zip(&weights)
            .zip(&cur)
            .map(|((x, w), e)| w * x * e * e)
            .sum();
        if !a.is_finite() {
            return Err(Error::LossOfOrthogonality { k, value: a });
        }
        alpha.push(a);
        if k + 1 == n_max {
            break;
        }
        let sb = if k == 0 { 0.0 } else { beta[k].sqrt() };
        let next: Vec<f64> = nodes
            .iter()
            .zip(cur.iter().zip(&prev))
            .map(|(x, (e, ep))| (x - a) * e - sb * ep)
            .collect();
        let b: f64 = next.iter().zip(&weights).map(|(q, w)| w * q * q).sum();
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::LossOfOrthogonality { k: k + 1, value: b });
        }
        beta.push(b);
        let nb = b.sqrt();
        prev = cur;
        cur = next.into_iter().map(|q| q / nb).collect();
    }
    RecurrenceCoefficients::new(alpha, beta)
}

/// Symmetric tridiagonal Jacobi matrix: diagonal `α_k`, off-diagonal `√β_k`.
pub fn jacobi_matrix(r: &RecurrenceCoefficients) -> DMatrix<f64> {
    let n = r.n();
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = r.alpha[k];
    }
    for k in 1..n {
        let s = r.beta[k].sqrt();
        m[(k, k - 1)] = s;
        m[(k - 1, k)] = s;
    }
    m
}

/// Orthonormal-polynomial values at `x`, kept in a scaled frame so that
/// large nodes do not overflow.
struct ScaledEval {
    /// `(x - α_{n-1}) π_{n-1} - √β_{n-1} π_{n-2}`, which vanishes at Gauss nodes.
    residual: f64,
    derivative: f64,
    /// `ln Σ_{k<n} π_k(x)²`.
    ln_sum_sq: f64,
}

fn scaled_eval(r: &RecurrenceCoefficients, x: f64) -> ScaledEval {
    const BIG: f64 = 1e100;
    let n = r.n();
    let mut log_scale = 0.0;
    let mut pm = 0.0;
    let mut p = 1.0 / r.mass().sqrt();
    let mut dpm = 0.0;
    let mut dp = 0.0;
    let mut sum_sq = p * p;
    for k in 0..n {
        let sb = if k == 0 { 0.0 } else { r.beta[k].sqrt() };
        let q = (x - r.alpha[k]) * p - sb * pm;
        let dq = p + (x - r.alpha[k]) * dp - sb * dpm;
        if k + 1 == n {
            return ScaledEval {
                residual: q,
                derivative: dq,
                ln_sum_sq: sum_sq.ln() + 2.0 * log_scale,
            };
        }
        let sn = r.beta[k + 1].sqrt();
        pm = p;
        dpm = dp;
        p = q / sn;
        dp = dq / sn;
        sum_sq += p * p;
        if p.abs() > BIG || dp.abs() > BIG {
            pm /= BIG;
            p /= BIG;
            dpm /= BIG;
            dp /= BIG;
            sum_sq /= BIG * BIG;
            log_scale += BIG.ln();
        }
    }
    unreachable!("recurrence has at least one coefficient")
}

/// Gauss rule from recurrence coefficients.
///
/// Nodes are the Jacobi eigenvalues (implicit QL), polished by Newton steps
/// on `π_n`. The eigenvector for node `x_i` is the normalized vector
/// `(π_0(x_i), …, π_{n-1}(x_i))`; its squared first component times the mass
/// gives the weight. Evaluating the eigenvector through the recurrence keeps
/// tiny weights accurate to full relative precision.
pub fn golub_welsch(r: &RecurrenceCoefficients) -> Result<RealRule> {
    let n = r.n();
    let off: Vec<f64> = r.beta[1..].iter().map(|b| b.sqrt()).collect();
    let (mut nodes, _) = symtridiag_ql(&r.alpha, &off)?;
    nodes.sort_by(f64::total_cmp);

    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let gap = neighbour_gap(&nodes, i);
        let mut x = nodes[i];
        for _ in 0..4 {
            let ev = scaled_eval(r, x);
            if ev.derivative == 0.0 || !ev.derivative.is_finite() {
                break;
            }
            let step = ev.residual / ev.derivative;
            if !step.is_finite() || step.abs() > 0.25 * gap {
                break;
            }
            x -= step;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = x;
        let ln_sum = scaled_eval(r, x).ln_sum_sq;
        weights.push((-ln_sum).exp());
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        mass: r.mass(),
        kind: RuleKind::Real,
    })
}

fn neighbour_gap(nodes: &[f64], i: usize) -> f64 {
    let left = if i > 0 { nodes[i] - nodes[i - 1] } else { f64::INFINITY };
    let right = if i + 1 < nodes.len() { nodes[i + 1] - nodes[i] } else { f64::INFINITY };
    let g = left.min(right);
    if g.is_finite() {
        g
    } else {
        nodes[i].abs().max(1.0)
    }
}

/// Weights straight from the QL-accumulated first eigenvector components,
/// `(node, q₀² · mass)` sorted by node. Only absolutely accurate; kept for
/// cross-checks against [`golub_welsch`].
pub fn golub_welsch_first_components(r: &RecurrenceCoefficients) -> Result<Vec<(f64, f64)>> {
    let off: Vec<f64> = r.beta[1..].iter().map(|b| b.sqrt()).collect();
    let (nodes, first) = symtridiag_ql(&r.alpha, &off)?;
    let mut pairs: Vec<(f64, f64)> = nodes
        .into_iter()
        .zip(first)
        .map(|(x, q)| (x, q * q * r.mass()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Newton iteration on `P_n` from the Tricomi estimates of its roots; the
/// rule is symmetric, so only the positive half is solved.
pub fn gauss_legendre(n: usize) -> Result<RealRule> {
    if n == 0 {
        return Err(Error::Config("Gauss-Legendre rule needs at least one node".into()));
    }
    let nf = n as f64;
    // (P_n(x), P_n'(x)) by the three-term recurrence k P_k = (2k − 1) x P_{k−1} − (k − 1) P_{k−2}.
    let coeffs: Vec<(f64, f64)> = (2..=n)
        .map(|k| {
            let kf = k as f64;
            ((2.0 * kf - 1.0) / kf, (kf - 1.0) / kf)
        })
        .collect();
    let legendre = |x: f64| {
        let (mut p0, mut p1) = (1.0, x);
        for &(a, b) in &coeffs {
            let p2 = a * x * p1 - b * p0;
            p0 = p1;
            p1 = p2;
        }
        (p1, nf * (x * p1 - p0) / (x * x - 1.0))
    };
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(x);
            let step = p / d;
            x -= step;
            dp = d;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre(x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights, mass: 2.0, kind: RuleKind::Real })
}

/// `∫ w(x) f(x) g(x) dx` over the measure's support, exact for polynomials.
pub fn inner_product_real(m: &RealMeasure, f: &Polynomial, g: &Polynomial) -> Result<f64> {
    match m.weight() {
        WeightFamily::LaguerreLike { prefactor, power } => {
            let deg = f.degree() + g.degree();
            let n = deg / 2 + 1;
            let rule = golub_welsch(&laguerre_recurrence(*prefactor, *power, n)?)?;
            Ok(quad_integrate(&rule, |x| f.eval(x) * g.eval(x)))
        }
        WeightFamily::Tabulated { nodes, weights } => Ok(nodes
            .iter()
            .zip(weights)
            .map(|(x, w)| w * f.eval(*x) * g.eval(*x))
            .sum()),
    }
}
