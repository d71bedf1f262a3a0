//! Coherence and discord measures of Bell-diagonal states.
//!
//! Every measure has a closed form in terms of `(c1, c2, c3)` and an oracle
//! computed from its definition on the density matrix. The closed forms are
//! what the rest of the crate uses; the oracles exist to check them.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Mat2, Mat4};
use crate::state::{BellDiagonalState, DensityMatrix4};

/// Negative values this close to zero are floating-point noise and read as 0.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Default `(θ, φ)` resolution of the geometric-discord oracle's outer search.
pub const GEO_ORACLE_GRID: usize = 32;

/// Objective change above which the geometric-discord oracle reports
/// non-convergence once its iteration budget is spent.
pub const GEO_ORACLE_CONVERGENCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("not a probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("measurement grid needs at least 32 points per angle, got {0}")]
    GridTooCoarse(usize),
    #[error("no convergence: objective still changing by {change:e} after {iterations} iterations")]
    NoConvergence { change: f64, iterations: usize },
    #[error("unknown measure `{0}` (expected c_l1, c_re, discord or geo_discord)")]
    UnknownMeasure(String),
}

fn clamp_noise(x: f64) -> f64 {
    if (-NOISE_FLOOR..0.0).contains(&x) {
        0.0
    } else {
        x
    }
}

/// The four registered measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "c_l1")]
    CoherenceL1,
    #[serde(rename = "c_re")]
    CoherenceRelEntropy,
    #[serde(rename = "discord")]
    Discord,
    #[serde(rename = "geo_discord")]
    GeometricDiscord,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::CoherenceL1,
        Measure::CoherenceRelEntropy,
        Measure::Discord,
        Measure::GeometricDiscord,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::CoherenceL1 => "c_l1",
            Measure::CoherenceRelEntropy => "c_re",
            Measure::Discord => "discord",
            Measure::GeometricDiscord => "geo_discord",
        }
    }

    /// Closed-form value at `s`.
    pub fn evaluate(self, s: &BellDiagonalState) -> f64 {
        match self {
            Measure::CoherenceL1 => coherence_l1(s),
            Measure::CoherenceRelEntropy => coherence_rel_entropy(s),
            Measure::Discord => discord(s).discord,
            Measure::GeometricDiscord => geometric_discord(s),
        }
    }

    pub fn select(self, set: &MeasureSet) -> f64 {
        match self {
            Measure::CoherenceL1 => set.c_l1,
            Measure::CoherenceRelEntropy => set.c_re,
            Measure::Discord => set.discord,
            Measure::GeometricDiscord => set.geo_discord,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| MeasureError::UnknownMeasure(s.to_string()))
    }
}

/// All four measures at one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSet {
    pub c_l1: f64,
    pub c_re: f64,
    pub discord: f64,
    pub geo_discord: f64,
}

/// Discord together with the quantities it is assembled from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscordBreakdown {
    pub discord: f64,
    pub mutual_information: f64,
    pub classical_correlation: f64,
    /// `max(|c1|, |c2|, |c3|)`.
    pub max_abs_c: f64,
    /// Which correlation attains `max_abs_c`: 1, 2 or 3 (lowest on ties).
    pub argmax_index: usize,
}

/// Shannon entropy in bits, `0 log 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> Result<f64, MeasureError> {
    if p.iter().any(|&x| !x.is_finite() || x < -NOISE_FLOOR) {
        return Err(MeasureError::InvalidDistribution(format!(
            "entries must be non-negative, got {p:?}"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(MeasureError::InvalidDistribution(format!(
            "entries sum to {total}"
        )));
    }
    Ok(linalg::entropy_of_eigenvalues(p))
}

fn spectrum_entropy(s: &BellDiagonalState) -> f64 {
    linalg::entropy_of_eigenvalues(&s.spectrum().to_array())
}

/// `x log2 x` with the `0 log 0 = 0` convention.
fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// l1 norm of coherence, `(|c1 - c2| + |c1 + c2|) / 2 = max(|c1|, |c2|)`.
pub fn coherence_l1(s: &BellDiagonalState) -> f64 {
    0.5 * ((s.c1() - s.c2()).abs() + (s.c1() + s.c2()).abs())
}

/// Sum of the absolute off-diagonal entries of `rho`.
pub fn coherence_l1_oracle(rho: &DensityMatrix4) -> f64 {
    let m = rho.matrix();
    let mut total = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                total += m[(i, j)].norm();
            }
        }
    }
    total
}

/// Relative entropy of coherence in bits: entropy of the diagonal part
/// (pairs `(1 ± c3)/4`) minus the entropy of the spectrum.
pub fn coherence_rel_entropy(s: &BellDiagonalState) -> f64 {
    if s.c1() == 0.0 && s.c2() == 0.0 {
        // Diagonal states; the two entropies would cancel only up to rounding.
        return 0.0;
    }
    let c3 = s.c3();
    let diagonal_entropy: f64 = [1.0 + c3, 1.0 - c3]
        .iter()
        .map(|&x| -0.5 * x * if x > 0.0 { (0.25 * x).log2() } else { 0.0 })
        .sum();
    clamp_noise(diagonal_entropy - spectrum_entropy(s))
}

/// `S(ρ_diag) - S(ρ)` with both entropies from numerical eigenvalues.
pub fn coherence_rel_entropy_oracle(rho: &DensityMatrix4) -> f64 {
    let diag: Vec<f64> = (0..4).map(|i| rho.entry(i, i).re).collect();
    let s_rho = linalg::von_neumann_entropy4(rho.matrix());
    clamp_noise(linalg::entropy_of_eigenvalues(&diag) - s_rho)
}

/// Discord with measurement on A, in bits, for a Bell-diagonal state.
///
/// Both marginals are maximally mixed, so `I(A:B) = 2 - H(λ)`; the optimal
/// projective measurement is along the axis of the largest `|c_j|`, which
/// gives `J = Σ± (1 ± c)/2 log2(1 ± c)`.
pub fn discord(s: &BellDiagonalState) -> DiscordBreakdown {
    let abs = s.components().map(f64::abs);
    let mut argmax = 0;
    for k in 1..3 {
        if abs[k] > abs[argmax] {
            argmax = k;
        }
    }
    let c = abs[argmax];
    let mutual_information = 2.0 - spectrum_entropy(s);
    let classical_correlation = 0.5 * (xlog2x(1.0 + c) + xlog2x(1.0 - c));
    DiscordBreakdown {
        discord: clamp_noise(mutual_information - classical_correlation),
        mutual_information,
        classical_correlation,
        max_abs_c: c,
        argmax_index: argmax + 1,
    }
}

/// `(c1² + c2² + c3² - c²) / 4` with `c = max |c_j|`.
pub fn geometric_discord(s: &BellDiagonalState) -> f64 {
    let sq = s.components().map(|c| c * c);
    let largest = sq.iter().copied().fold(0.0, f64::max);
    clamp_noise(0.25 * (sq[0] + sq[1] + sq[2] - largest))
}

pub fn measure_all(s: &BellDiagonalState) -> MeasureSet {
    MeasureSet {
        c_l1: coherence_l1(s),
        c_re: coherence_rel_entropy(s),
        discord: discord(s).discord,
        geo_discord: geometric_discord(s),
    }
}

/// Projective measurement on qubit A along the Bloch direction `(θ, φ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBasis {
    pub theta: f64,
    pub phi: f64,
}

impl MeasurementBasis {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn direction(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Rank-1 projectors `(I ± n·σ)/2`.
    pub fn projectors(&self) -> [Mat2; 2] {
        let n = self.direction();
        let mut n_sigma = Mat2::zeros();
        for (k, nk) in n.iter().enumerate() {
            n_sigma += linalg::pauli(k + 1) * Complex64::new(*nk, 0.0);
        }
        let id = linalg::pauli(0);
        let half = Complex64::new(0.5, 0.0);
        [(id + n_sigma) * half, (id - n_sigma) * half]
    }
}

/// Location and value of a minimum found by [`minimize_over_sphere`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereMinimum {
    pub value: f64,
    pub basis: MeasurementBasis,
}

/// Minimizes `objective(θ, φ)` over the Bloch sphere: a `grid_n × grid_n`
/// grid on `θ ∈ [0, π]`, `φ ∈ [0, 2π)`, then alternating golden-section
/// searches on each angle around the best grid point.
///
/// Grid rows are evaluated in parallel; the reduction keeps the first
/// minimum in `(θ, φ)` lexicographic order, so the result is deterministic.
pub fn minimize_over_sphere<F, E>(grid_n: usize, objective: F) -> Result<SphereMinimum, E>
where
    F: Fn(f64, f64) -> Result<f64, E> + Sync,
    E: Send,
{
    let theta_step = PI / (grid_n - 1) as f64;
    let phi_step = TAU / grid_n as f64;
    let rows: Vec<Vec<f64>> = (0..grid_n)
        .into_par_iter()
        .map(|i| {
            let theta = i as f64 * theta_step;
            (0..grid_n)
                .map(|j| objective(theta, j as f64 * phi_step))
                .collect::<Result<Vec<f64>, E>>()
        })
        .collect::<Result<_, E>>()?;

    let mut best = (f64::INFINITY, 0.0, 0.0);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v < best.0 {
                best = (v, i as f64 * theta_step, j as f64 * phi_step);
            }
        }
    }

    let (mut value, mut theta, mut phi) = best;
    let mut theta_width = theta_step;
    let mut phi_width = phi_step;
    for _ in 0..12 {
        let (t, v) = golden_section(theta - theta_width, theta + theta_width, |t| {
            objective(t, phi)
        })?;
        if v < value {
            value = v;
            theta = t;
        }
        let (p, v) = golden_section(phi - phi_width, phi + phi_width, |p| objective(theta, p))?;
        if v < value {
            value = v;
            phi = p;
        }
        theta_width *= 0.5;
        phi_width *= 0.5;
    }
    Ok(SphereMinimum {
        value,
        basis: MeasurementBasis::new(theta, phi.rem_euclid(TAU)),
    })
}

fn golden_section<F, E>(mut lo: f64, mut hi: f64, f: F) -> Result<(f64, f64), E>
where
    F: Fn(f64) -> Result<f64, E>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > 1e-10 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Mutual information and classical correlation of `rho` for one
/// projective measurement on A.
fn correlations_for_measurement(rho: &Mat4, basis: &MeasurementBasis) -> (f64, f64) {
    let s_a = linalg::von_neumann_entropy2(&linalg::trace_out_b(rho));
    let s_b = linalg::von_neumann_entropy2(&linalg::trace_out_a(rho));
    let s_ab = linalg::von_neumann_entropy4(rho);
    let id = linalg::pauli(0);
    let mut conditional_entropy = 0.0;
    for proj in basis.projectors() {
        let lifted = linalg::kron(&proj, &id);
        let post = lifted * rho * lifted;
        let p = post.trace().re;
        if p > 1e-15 {
            let rho_b = linalg::trace_out_a(&post) / Complex64::new(p, 0.0);
            conditional_entropy += p * linalg::von_neumann_entropy2(&rho_b);
        }
    }
    (s_a + s_b - s_ab, s_b - conditional_entropy)
}

/// Discord from its definition: `min [I(A:B) - J(B|{Π_a})]` over projective
/// measurements on A, searched by [`minimize_over_sphere`].
pub fn discord_oracle(rho: &DensityMatrix4, grid_n: usize) -> Result<f64, MeasureError> {
    Ok(discord_oracle_minimum(rho, grid_n)?.value)
}

/// Like [`discord_oracle`] but also reports the minimizing measurement.
pub fn discord_oracle_minimum(
    rho: &DensityMatrix4,
    grid_n: usize,
) -> Result<SphereMinimum, MeasureError> {
    if grid_n < 32 {
        return Err(MeasureError::GridTooCoarse(grid_n));
    }
    let m = rho.matrix();
    let mut min = minimize_over_sphere(grid_n, |theta, phi| {
        let (mutual, classical) = correlations_for_measurement(m, &MeasurementBasis::new(theta, phi));
        Ok::<_, MeasureError>(mutual - classical)
    })?;
    min.value = clamp_noise(min.value);
    Ok(min)
}

/// Squared Hilbert–Schmidt distance from `rho` to the closest
/// classical-quantum state `χ = Σ_a Π_a ⊗ p_a ρ_a`.
///
/// The measured basis `Π_a` on A is searched over the Bloch sphere; for each
/// basis the weights and conditional states are fitted by projected gradient
/// descent, with `iterations` as the per-basis step budget.
pub fn geometric_discord_oracle(rho: &DensityMatrix4, iterations: usize) -> Result<f64, MeasureError> {
    geometric_discord_oracle_with_grid(rho, iterations, GEO_ORACLE_GRID)
}

pub fn geometric_discord_oracle_with_grid(
    rho: &DensityMatrix4,
    iterations: usize,
    grid_n: usize,
) -> Result<f64, MeasureError> {
    if grid_n < 2 {
        return Err(MeasureError::GridTooCoarse(grid_n));
    }
    let m = rho.matrix();
    let min = minimize_over_sphere(grid_n, |theta, phi| {
        fit_classical_quantum(m, &MeasurementBasis::new(theta, phi), iterations)
    })?;
    Ok(clamp_noise(min.value))
}

/// Parameters of `σ_a = (p_a I + w_a·σ)/2`, with `p_0 = p`, `p_1 = 1 - p`.
struct CqParams {
    p: f64,
    w: [[f64; 3]; 2],
}

impl CqParams {
    fn weight(&self, a: usize) -> f64 {
        if a == 0 {
            self.p
        } else {
            1.0 - self.p
        }
    }

    fn conditional(&self, a: usize) -> Mat2 {
        let mut s = linalg::pauli(0) * Complex64::new(self.weight(a), 0.0);
        for k in 0..3 {
            s += linalg::pauli(k + 1) * Complex64::new(self.w[a][k], 0.0);
        }
        s * Complex64::new(0.5, 0.0)
    }

    /// Keeps `p ∈ [0, 1]` and `|w_a| ≤ p_a` so each `σ_a` stays positive.
    fn project(&mut self) {
        self.p = self.p.clamp(0.0, 1.0);
        for a in 0..2 {
            let bound = self.weight(a);
            let norm = self.w[a].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > bound {
                let scale = if norm > 0.0 { bound / norm } else { 0.0 };
                for x in &mut self.w[a] {
                    *x *= scale;
                }
            }
        }
    }
}

fn fit_classical_quantum(
    rho: &Mat4,
    basis: &MeasurementBasis,
    iterations: usize,
) -> Result<f64, MeasureError> {
    const STEP: f64 = 0.5;
    let id = linalg::pauli(0);
    let lifted = basis.projectors().map(|proj| linalg::kron(&proj, &id));
    let projectors = basis.projectors();

    let residual = |params: &CqParams| -> Mat4 {
        let mut chi = Mat4::zeros();
        for (a, proj) in projectors.iter().enumerate() {
            chi += linalg::kron(proj, &params.conditional(a));
        }
        rho - chi
    };
    let objective = |r: &Mat4| r.iter().map(|z| z.norm_sqr()).sum::<f64>();

    let mut params = CqParams {
        p: 0.5,
        w: [[0.0; 3]; 2],
    };
    let mut r = residual(&params);
    let mut value = objective(&r);
    let mut change = f64::INFINITY;
    for _ in 0..iterations {
        // ∂f/∂σ_a = -2 G_a with G_a = Tr_A[(Π_a ⊗ I) R].
        let g: [Mat2; 2] = std::array::from_fn(|a| linalg::trace_out_a(&(lifted[a] * r)));
        let grad_p = -g[0].trace().re + g[1].trace().re;
        params.p -= STEP * grad_p;
        for (a, ga) in g.iter().enumerate() {
            for k in 0..3 {
                let grad = -(ga * linalg::pauli(k + 1)).trace().re;
                params.w[a][k] -= STEP * grad;
            }
        }
        params.project();
        r = residual(&params);
        let next = objective(&r);
        change = (value - next).abs();
        value = next;
        if change < 1e-14 {
            break;
        }
    }
    if change > GEO_ORACLE_CONVERGENCE {
        return Err(MeasureError::NoConvergence { change, iterations });
    }
    Ok(value)
}
