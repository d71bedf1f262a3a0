//! Kraus channels on two qubits and the two incoherent families that keep
//! Bell-diagonal states Bell-diagonal: depolarizing on A and phase flip on
//! A and/or B.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Mat2, Mat4};
use crate::measures::{self, MeasureSet};
use crate::state::{BellDiagonalState, DensityMatrix4, StateError};

/// Tolerance on `Σ K†K = I`.
pub const TRACE_PRESERVING_TOL: f64 = 1e-10;

/// Tolerance on the off-diagonal part of `K |k⟩⟨k| K†`.
pub const INCOHERENT_TOL: f64 = 1e-12;

/// Largest allowed gap between the closed-form c-map and the Kraus path.
pub const KRAUS_AGREEMENT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("channel `{label}` is not trace preserving (max |ΣK†K - I| = {deviation})")]
    NotTracePreserving { label: String, deviation: f64 },
    #[error("noise strength {0} outside the allowed range")]
    InvalidStrength(f64),
    #[error("invalid noise schedule: {0}")]
    InvalidSchedule(String),
    #[error("closed-form map and Kraus evolution disagree by {0} at t = {1}")]
    KrausMismatch(f64, f64),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Which qubit(s) a single-qubit channel acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    A,
    B,
    Both,
}

/// Normalization of the depolarizing Kraus set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepolarizingWeights {
    /// `K0 = √(1 - 3q/4) I`, `K_j = √(q/4) σ_j`: trace preserving.
    Standard,
    /// `K0 = √(1 - 3q) I`, `K_j = √(q/4) σ_j`, for which
    /// `Σ K†K = (1 - 9q/4) I`. Only useful to demonstrate that it fails
    /// the trace-preservation check.
    Literal,
}

/// A channel given by two-qubit Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    pub operators: Vec<Mat4>,
    pub label: String,
    /// Noise strength `q` the channel was built with.
    pub strength: f64,
}

fn check_strength(q: f64) -> Result<(), ChannelError> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(ChannelError::InvalidStrength(q))
    }
}

fn scaled(m: Mat2, weight: f64) -> Mat2 {
    m * Complex64::new(weight.sqrt(), 0.0)
}

fn lift(op: &Mat2, target: Target) -> Mat4 {
    let id = linalg::pauli(0);
    match target {
        Target::A => linalg::kron(op, &id),
        Target::B => linalg::kron(&id, op),
        Target::Both => unreachable!("single-qubit operators lift to one side"),
    }
}

impl KrausChannel {
    pub fn new(operators: Vec<Mat4>, label: impl Into<String>, strength: f64) -> Self {
        Self {
            operators,
            label: label.into(),
            strength,
        }
    }

    /// The identity channel.
    pub fn identity() -> Self {
        Self::new(vec![Mat4::identity()], "identity", 0.0)
    }

    /// A single unitary on A.
    pub fn unitary_on_a(u: &Mat2, label: impl Into<String>) -> Self {
        Self::new(vec![lift(u, Target::A)], label, 0.0)
    }

    /// Max-entry deviation of `Σ K†K` from the identity.
    pub fn completeness_deviation(&self) -> f64 {
        if self.operators.is_empty() {
            return f64::INFINITY;
        }
        let sum: Mat4 = self.operators.iter().map(|k| k.adjoint() * k).sum();
        linalg::max_abs_diff(&sum, &Mat4::identity())
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.completeness_deviation() < TRACE_PRESERVING_TOL
    }

    /// Every Kraus operator maps each computational basis projector to a
    /// diagonal matrix, i.e. `K |k⟩⟨k| K†` has no off-diagonal weight.
    pub fn is_incoherent(&self) -> bool {
        self.operators.iter().all(|op| {
            (0..4).all(|k| {
                let col = op.column(k);
                (0..4).all(|i| {
                    (0..4).all(|j| i == j || (col[i] * col[j].conj()).norm() < INCOHERENT_TOL)
                })
            })
        })
    }

    /// `Λ(ρ) = Σ K ρ K†`.
    pub fn apply(&self, rho: &DensityMatrix4) -> Result<DensityMatrix4, ChannelError> {
        let deviation = self.completeness_deviation();
        if deviation >= TRACE_PRESERVING_TOL {
            return Err(ChannelError::NotTracePreserving {
                label: self.label.clone(),
                deviation,
            });
        }
        let m = rho.matrix();
        let out: Mat4 = self.operators.iter().map(|k| k * m * k.adjoint()).sum();
        // Re-symmetrize to remove rounding asymmetry.
        let out = (out + out.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(DensityMatrix4::from_matrix_unchecked(out))
    }

    /// Sequential composition: `self` first, then `then`.
    pub fn then(&self, then: &KrausChannel) -> KrausChannel {
        let operators = then
            .operators
            .iter()
            .flat_map(|second| self.operators.iter().map(move |first| second * first))
            .collect();
        KrausChannel::new(
            operators,
            format!("{} then {}", self.label, then.label),
            self.strength,
        )
    }
}

/// Depolarizing channel on qubit A.
pub fn depolarizing_a(q: f64) -> Result<KrausChannel, ChannelError> {
    depolarizing_a_with(q, DepolarizingWeights::Standard)
}

pub fn depolarizing_a_with(q: f64, weights: DepolarizingWeights) -> Result<KrausChannel, ChannelError> {
    check_strength(q)?;
    let identity_weight = match weights {
        DepolarizingWeights::Standard => 1.0 - 0.75 * q,
        DepolarizingWeights::Literal => 1.0 - 3.0 * q,
    };
    if identity_weight < 0.0 {
        return Err(ChannelError::InvalidStrength(q));
    }
    let mut ops = vec![lift(&scaled(linalg::pauli(0), identity_weight), Target::A)];
    for k in 1..=3 {
        ops.push(lift(&scaled(linalg::pauli(k), 0.25 * q), Target::A));
    }
    let label = match weights {
        DepolarizingWeights::Standard => "depolarizing_A",
        DepolarizingWeights::Literal => "depolarizing_A_literal",
    };
    Ok(KrausChannel::new(ops, label, q))
}

/// Phase flip `K0 = √(1 - q/2) I`, `K1 = √(q/2) σ3` on the chosen qubit(s).
/// `Target::Both` applies it to A and then to B with the same `q`.
pub fn phase_flip(q: f64, target: Target) -> Result<KrausChannel, ChannelError> {
    check_strength(q)?;
    let single = |t: Target| {
        let ops = vec![
            lift(&scaled(linalg::pauli(0), 1.0 - 0.5 * q), t),
            lift(&scaled(linalg::pauli(3), 0.5 * q), t),
        ];
        let label = match t {
            Target::A => "phase_flip_A",
            _ => "phase_flip_B",
        };
        KrausChannel::new(ops, label, q)
    };
    Ok(match target {
        Target::A | Target::B => single(target),
        Target::Both => {
            let mut ch = single(Target::A).then(&single(Target::B));
            ch.label = "phase_flip_both".into();
            ch
        }
    })
}

/// Channel families with a closed-form action on `(c1, c2, c3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelFamily {
    /// Depolarizing on A: uniform shrink by `1 - q`.
    DepolarizingA,
    /// Phase flip on A and B: `c1, c2` shrink by `(1 - q)²`, `c3` fixed.
    PhaseFlipBoth,
}

impl ChannelFamily {
    pub fn kraus(self, q: f64) -> Result<KrausChannel, ChannelError> {
        match self {
            ChannelFamily::DepolarizingA => depolarizing_a(q),
            ChannelFamily::PhaseFlipBoth => phase_flip(q, Target::Both),
        }
    }

    /// Closed-form image of `s` under the channel with strength `q`.
    pub fn map_state(self, s: &BellDiagonalState, q: f64) -> Result<BellDiagonalState, ChannelError> {
        check_strength(q)?;
        Ok(match self {
            ChannelFamily::DepolarizingA => s.scaled(1.0 - q),
            ChannelFamily::PhaseFlipBoth => {
                let f = (1.0 - q) * (1.0 - q);
                BellDiagonalState::new(f * s.c1(), f * s.c2(), s.c3())?
            }
        })
    }
}

/// Markovian noise strength `q(t) = 1 - e^{-γt}` sampled at fixed times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub gamma: f64,
    pub times: Vec<f64>,
}

impl NoiseSchedule {
    /// Requires `γ > 0` and non-negative, strictly increasing times.
    pub fn new(gamma: f64, times: Vec<f64>) -> Result<Self, ChannelError> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(ChannelError::InvalidSchedule(format!(
                "decay rate must be positive, got {gamma}"
            )));
        }
        if times.is_empty() {
            return Err(ChannelError::InvalidSchedule("no time points".into()));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(ChannelError::InvalidSchedule(
                "times must be finite and non-negative".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ChannelError::InvalidSchedule(
                "times must be strictly increasing".into(),
            ));
        }
        Ok(Self { gamma, times })
    }

    /// `steps` evenly spaced times from 0 to `t_max` inclusive.
    pub fn linspace(gamma: f64, t_max: f64, steps: usize) -> Result<Self, ChannelError> {
        if steps < 2 {
            return Err(ChannelError::InvalidSchedule(format!(
                "need at least 2 steps, got {steps}"
            )));
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(ChannelError::InvalidSchedule(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        let times = (0..steps)
            .map(|i| t_max * i as f64 / (steps - 1) as f64)
            .collect();
        Self::new(gamma, times)
    }

    pub fn strength_at(&self, t: f64) -> f64 {
        -(-self.gamma * t).exp_m1()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: BellDiagonalState,
    pub measures: MeasureSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub family: ChannelFamily,
    pub samples: Vec<TrajectorySample>,
}

/// Evolves `s0` under `family` at each scheduled time.
///
/// Samples come from the closed-form c-map; each one is also propagated
/// through the Kraus operators and must agree to within 1e-10.
pub fn trajectory(
    s0: &BellDiagonalState,
    family: ChannelFamily,
    schedule: &NoiseSchedule,
) -> Result<Trajectory, ChannelError> {
    let rho0 = s0.density_matrix();
    let samples = schedule
        .times
        .iter()
        .map(|&t| {
            let q = schedule.strength_at(t);
            let state = family.map_state(s0, q)?;
            let via_kraus = BellDiagonalState::from_density_matrix(&family.kraus(q)?.apply(&rho0)?)?;
            let gap = state
                .components()
                .iter()
                .zip(via_kraus.components())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if gap > KRAUS_AGREEMENT_TOL {
                return Err(ChannelError::KrausMismatch(gap, t));
            }
            Ok(TrajectorySample {
                t,
                state,
                measures: measures::measure_all(&state),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory { family, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::random_states;

    fn state(c1: f64, c2: f64, c3: f64) -> BellDiagonalState {
        BellDiagonalState::new(c1, c2, c3).unwrap()
    }

    fn through_kraus(ch: &KrausChannel, s: &BellDiagonalState) -> [f64; 3] {
        BellDiagonalState::from_density_matrix(&ch.apply(&s.density_matrix()).unwrap())
            .unwrap()
            .components()
    }

    fn assert_close(a: [f64; 3], b: [f64; 3], tol: f64) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn maximally_mixed_is_a_fixed_point() {
        let rho = DensityMatrix4::maximally_mixed();
        for ch in [
            depolarizing_a(0.4).unwrap(),
            phase_flip(0.7, Target::Both).unwrap(),
            phase_flip(0.2, Target::B).unwrap(),
        ] {
            let out = ch.apply(&rho).unwrap();
            assert!(linalg::max_abs_diff(out.matrix(), rho.matrix()) < 1e-15);
        }
    }

    #[test]
    fn apply_examples() {
        let ch = phase_flip(0.5, Target::Both).unwrap();
        assert_close(through_kraus(&ch, &state(0.8, -0.4, 0.6)), [0.2, -0.1, 0.6], 1e-12);

        let bell = state(1.0, 1.0, -1.0);
        let ch = depolarizing_a(0.0).unwrap();
        assert_close(through_kraus(&ch, &bell), bell.components(), 1e-15);
    }

    #[test]
    fn apply_rejects_non_trace_preserving() {
        let ch = depolarizing_a_with(0.2, DepolarizingWeights::Literal).unwrap();
        assert!(matches!(
            ch.apply(&DensityMatrix4::maximally_mixed()),
            Err(ChannelError::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn trace_preservation() {
        assert!(phase_flip(0.3, Target::A).unwrap().is_trace_preserving());
        let literal = depolarizing_a_with(0.2, DepolarizingWeights::Literal).unwrap();
        assert!(!literal.is_trace_preserving());
        // Σ K†K = (1 - 9q/4) I
        assert!((literal.completeness_deviation() - 0.45).abs() < 1e-12);
        assert!(!KrausChannel::new(vec![], "empty", 0.0).is_trace_preserving());
    }

    #[test]
    fn incoherence() {
        assert!(phase_flip(0.3, Target::A).unwrap().is_incoherent());
        assert!(depolarizing_a(0.3).unwrap().is_incoherent());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = Mat2::new(
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
        );
        let hadamard = KrausChannel::unitary_on_a(&h, "hadamard_A");
        assert!(hadamard.is_trace_preserving());
        assert!(!hadamard.is_incoherent());
    }

    #[test]
    fn depolarizing_examples() {
        let s = state(0.8, -0.4, 0.6);
        assert_close(through_kraus(&depolarizing_a(0.0).unwrap(), &s), s.components(), 1e-15);
        assert_close(through_kraus(&depolarizing_a(0.5).unwrap(), &s), [0.4, -0.2, 0.3], 1e-12);
        assert_close(through_kraus(&depolarizing_a(1.0).unwrap(), &s), [0.0; 3], 1e-12);
        assert!(depolarizing_a(1.5).is_err());
        assert!(depolarizing_a(-0.1).is_err());
    }

    #[test]
    fn phase_flip_examples() {
        let s = state(0.8, -0.4, 0.6);
        assert_close(
            through_kraus(&phase_flip(0.0, Target::Both).unwrap(), &s),
            s.components(),
            1e-15,
        );
        // γt = ln2/2 gives e^{-2γt} = 1/2.
        let schedule = NoiseSchedule::new(1.0, vec![std::f64::consts::LN_2 / 2.0]).unwrap();
        let q = schedule.strength_at(schedule.times[0]);
        let closed = ChannelFamily::PhaseFlipBoth.map_state(&s, q).unwrap();
        assert_close(closed.components(), [0.4, -0.2, 0.6], 1e-12);
        assert_close(
            through_kraus(&phase_flip(q, Target::Both).unwrap(), &s),
            [0.4, -0.2, 0.6],
            1e-12,
        );
        assert_close(
            through_kraus(&phase_flip(1.0, Target::A).unwrap(), &s),
            [0.0, 0.0, 0.6],
            1e-12,
        );
        assert!(phase_flip(2.0, Target::A).is_err());
    }

    #[test]
    fn phase_flip_on_a_then_b_equals_both() {
        for q in [0.1, 0.35, 0.8] {
            let composed = phase_flip(q, Target::A)
                .unwrap()
                .then(&phase_flip(q, Target::B).unwrap());
            let both = phase_flip(q, Target::Both).unwrap();
            for s in random_states(2, 20) {
                let a = composed.apply(&s.density_matrix()).unwrap();
                let b = both.apply(&s.density_matrix()).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn single_side_phase_flip_shrinks_once() {
        let s = state(0.8, -0.4, 0.6);
        for target in [Target::A, Target::B] {
            let out = through_kraus(&phase_flip(0.25, target).unwrap(), &s);
            assert_close(out, [0.6, -0.3, 0.6], 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_kraus_on_random_states() {
        for s in random_states(8, 200) {
            for family in [ChannelFamily::DepolarizingA, ChannelFamily::PhaseFlipBoth] {
                for q in [0.05, 0.3, 0.77, 1.0] {
                    let closed = family.map_state(&s, q).unwrap();
                    let kraus = through_kraus(&family.kraus(q).unwrap(), &s);
                    assert_close(closed.components(), kraus, 1e-10);
                }
            }
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(NoiseSchedule::new(0.0, vec![0.0, 1.0]).is_err());
        assert!(NoiseSchedule::new(1.0, vec![]).is_err());
        assert!(NoiseSchedule::new(1.0, vec![0.0, 0.0]).is_err());
        assert!(NoiseSchedule::new(1.0, vec![-1.0, 0.0]).is_err());
        assert!(NoiseSchedule::linspace(1.0, 2.0, 1).is_err());
        let s = NoiseSchedule::linspace(0.5, 4.0, 9).unwrap();
        let q: Vec<f64> = s.times.iter().map(|&t| s.strength_at(t)).collect();
        assert_eq!(q[0], 0.0);
        assert!(q.windows(2).all(|w| w[1] > w[0]));
        assert!(q.iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn trajectory_examples() {
        let schedule = NoiseSchedule::linspace(0.7, 5.0, 12).unwrap();
        for family in [ChannelFamily::DepolarizingA, ChannelFamily::PhaseFlipBoth] {
            let tr = trajectory(&state(0.0, 0.0, 0.5), family, &schedule).unwrap();
            assert!(tr
                .samples
                .iter()
                .all(|s| s.measures.c_l1 == 0.0 && s.measures.c_re == 0.0));
        }

        let s0 = state(0.6, -0.3, 0.1);
        let tr = trajectory(&s0, ChannelFamily::DepolarizingA, &schedule).unwrap();
        let d = s0.components();
        for sample in &tr.samples {
            let c = sample.state.components();
            let cross = [
                c[1] * d[2] - c[2] * d[1],
                c[2] * d[0] - c[0] * d[2],
                c[0] * d[1] - c[1] * d[0],
            ];
            assert!(cross.iter().all(|x| x.abs() < 1e-15), "{c:?}");
        }

        let tr = trajectory(&state(0.8, -0.4, 0.6), ChannelFamily::PhaseFlipBoth, &schedule).unwrap();
        assert!(tr.samples.iter().all(|s| s.state.c3() == 0.6));
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    }
}
