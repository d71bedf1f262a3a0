//! Bell-diagonal states and their two representations: the correlation
//! vector `(c1, c2, c3)` and the 4×4 density matrix in the computational
//! basis `|00⟩, |01⟩, |10⟩, |11⟩`.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Mat4};

/// Slack allowed on `λ_ab ≥ 0` so that vertices and faces computed in
/// floating point still validate.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Tolerance on hermiticity, unit trace and positivity of a density matrix.
pub const MATRIX_TOL: f64 = 1e-12;

/// Largest allowed entry outside the Bell-diagonal sparsity pattern.
pub const PATTERN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("({c1}, {c2}, {c3}) lies outside the tetrahedron (smallest eigenvalue {min_eigenvalue})")]
    OutsideTetrahedron {
        c1: f64,
        c2: f64,
        c3: f64,
        min_eigenvalue: f64,
    },
    #[error("state coordinates must be finite")]
    NonFinite,
    #[error("matrix is not Hermitian (deviation {0})")]
    NotHermitian(f64),
    #[error("matrix trace is {0}, expected 1")]
    NotUnitTrace(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0})")]
    NotPositive(f64),
    #[error("matrix is not Bell-diagonal (off-pattern deviation {0})")]
    NotBellDiagonal(f64),
}

/// Eigenvalues `λ_ab` of a Bell-diagonal state, one per Bell state `|β_ab⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub lambda00: f64,
    pub lambda01: f64,
    pub lambda10: f64,
    pub lambda11: f64,
}

impl Spectrum {
    /// `[λ00, λ01, λ10, λ11]`.
    pub fn to_array(self) -> [f64; 4] {
        [self.lambda00, self.lambda01, self.lambda10, self.lambda11]
    }

    /// Inverse of the eigenvalue map: `c1 = Σ (-1)^a λ_ab`,
    /// `c2 = -Σ (-1)^(a+b) λ_ab`, `c3 = Σ (-1)^b λ_ab`.
    pub fn correlations(self) -> [f64; 3] {
        let [l00, l01, l10, l11] = self.to_array();
        [
            l00 + l01 - l10 - l11,
            -l00 + l01 + l10 - l11,
            l00 - l01 + l10 - l11,
        ]
    }
}

fn raw_eigenvalues(c1: f64, c2: f64, c3: f64) -> [f64; 4] {
    // λ_ab = ¼[1 + (-1)^a c1 - (-1)^(a+b) c2 + (-1)^b c3]
    [
        0.25 * (1.0 + c1 - c2 + c3),
        0.25 * (1.0 + c1 + c2 - c3),
        0.25 * (1.0 - c1 + c2 + c3),
        0.25 * (1.0 - c1 - c2 - c3),
    ]
}

/// A point `(c1, c2, c3)` of the tetrahedron of Bell-diagonal states.
///
/// Only constructible through [`BellDiagonalState::new`] (or deserialization,
/// which goes through the same check), so every value is a physical state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCorrelations")]
pub struct BellDiagonalState {
    c1: f64,
    c2: f64,
    c3: f64,
}

#[derive(Deserialize)]
struct RawCorrelations {
    c1: f64,
    c2: f64,
    c3: f64,
}

impl TryFrom<RawCorrelations> for BellDiagonalState {
    type Error = StateError;

    fn try_from(raw: RawCorrelations) -> Result<Self, Self::Error> {
        BellDiagonalState::new(raw.c1, raw.c2, raw.c3)
    }
}

impl fmt::Display for BellDiagonalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.c1, self.c2, self.c3)
    }
}

impl BellDiagonalState {
    /// Accepts `(c1, c2, c3)` iff every `λ_ab ≥ -1e-12`.
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self, StateError> {
        if !(c1.is_finite() && c2.is_finite() && c3.is_finite()) {
            return Err(StateError::NonFinite);
        }
        let min_eigenvalue = raw_eigenvalues(c1, c2, c3)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eigenvalue < -MEMBERSHIP_TOL {
            return Err(StateError::OutsideTetrahedron {
                c1,
                c2,
                c3,
                min_eigenvalue,
            });
        }
        Ok(Self { c1, c2, c3 })
    }

    pub fn from_components(c: [f64; 3]) -> Result<Self, StateError> {
        Self::new(c[0], c[1], c[2])
    }

    /// The maximally mixed state at the centre of the tetrahedron.
    pub fn maximally_mixed() -> Self {
        Self {
            c1: 0.0,
            c2: 0.0,
            c3: 0.0,
        }
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn c3(&self) -> f64 {
        self.c3
    }

    pub fn components(&self) -> [f64; 3] {
        [self.c1, self.c2, self.c3]
    }

    /// Multiplies the correlation vector by `factor ∈ [0, 1]`. The
    /// tetrahedron is star-shaped around the origin so the result stays valid.
    pub fn scaled(&self, factor: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&factor));
        Self {
            c1: factor * self.c1,
            c2: factor * self.c2,
            c3: factor * self.c3,
        }
    }

    /// Eigenvalues, with round-off negatives clamped to zero.
    pub fn spectrum(&self) -> Spectrum {
        let [l00, l01, l10, l11] = raw_eigenvalues(self.c1, self.c2, self.c3).map(|l| l.max(0.0));
        Spectrum {
            lambda00: l00,
            lambda01: l01,
            lambda10: l10,
            lambda11: l11,
        }
    }

    pub fn density_matrix(&self) -> DensityMatrix4 {
        let (c1, c2, c3) = (self.c1, self.c2, self.c3);
        let r = |x: f64| Complex64::new(0.25 * x, 0.0);
        let mut m = Mat4::zeros();
        m[(0, 0)] = r(1.0 + c3);
        m[(1, 1)] = r(1.0 - c3);
        m[(2, 2)] = r(1.0 - c3);
        m[(3, 3)] = r(1.0 + c3);
        m[(0, 3)] = r(c1 - c2);
        m[(3, 0)] = r(c1 - c2);
        m[(1, 2)] = r(c1 + c2);
        m[(2, 1)] = r(c1 + c2);
        DensityMatrix4(m)
    }

    /// Reads `c_j = Tr[ρ (σ_j ⊗ σ_j)]` back from a Bell-diagonal matrix.
    pub fn from_density_matrix(rho: &DensityMatrix4) -> Result<Self, StateError> {
        let m = rho.matrix();
        let off_pattern = [
            (0, 1),
            (0, 2),
            (1, 0),
            (1, 3),
            (2, 0),
            (2, 3),
            (3, 1),
            (3, 2),
        ];
        let mut deviation = off_pattern
            .iter()
            .map(|&ij| m[ij].norm())
            .fold(0.0, f64::max);
        // Within the pattern: equal diagonal pairs and real, symmetric anti-diagonal.
        deviation = deviation
            .max((m[(0, 0)] - m[(3, 3)]).norm())
            .max((m[(1, 1)] - m[(2, 2)]).norm())
            .max((m[(0, 3)] - m[(3, 0)]).norm())
            .max((m[(1, 2)] - m[(2, 1)]).norm())
            .max(m[(0, 3)].im.abs())
            .max(m[(1, 2)].im.abs());
        if deviation > PATTERN_TOL {
            return Err(StateError::NotBellDiagonal(deviation));
        }
        let correlation = |k: usize| {
            let op = linalg::kron(&linalg::pauli(k), &linalg::pauli(k));
            (m * op).trace().re
        };
        Self::new(correlation(1), correlation(2), correlation(3))
    }

    /// Inside the separable octahedron `|c1| + |c2| + |c3| ≤ 1`.
    pub fn is_separable(&self) -> bool {
        self.c1.abs() + self.c2.abs() + self.c3.abs() <= 1.0 + MEMBERSHIP_TOL
    }

    /// On the `c3` axis, where the density matrix is diagonal.
    pub fn is_incoherent(&self) -> bool {
        self.c1.abs() < MEMBERSHIP_TOL && self.c2.abs() < MEMBERSHIP_TOL
    }
}

/// Draws a state uniformly from the tetrahedron: a flat Dirichlet sample on
/// the eigenvalue simplex, mapped back through the affine eigenvalue map.
pub fn sample_state<R: Rng + ?Sized>(rng: &mut R) -> BellDiagonalState {
    let w: [f64; 4] = std::array::from_fn(|_| rng.sample::<f64, _>(Exp1));
    let total: f64 = w.iter().sum();
    let spectrum = Spectrum {
        lambda00: w[0] / total,
        lambda01: w[1] / total,
        lambda10: w[2] / total,
        lambda11: w[3] / total,
    };
    let [c1, c2, c3] = spectrum.correlations();
    BellDiagonalState::new(c1, c2, c3).expect("simplex sample maps into the tetrahedron")
}

/// Deterministic uniform state for `seed`.
pub fn random_state(seed: u64) -> BellDiagonalState {
    sample_state(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// `n` uniform states from a single seeded stream.
pub fn random_states(seed: u64, n: usize) -> Vec<BellDiagonalState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_state(&mut rng)).collect()
}

/// A validated two-qubit density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix4(Mat4);

impl DensityMatrix4 {
    /// Checks hermiticity, unit trace and positivity (all within 1e-12).
    pub fn new(m: Mat4) -> Result<Self, StateError> {
        let herm = linalg::max_abs_diff(&m, &m.adjoint());
        if !herm.is_finite() || herm > MATRIX_TOL {
            return Err(StateError::NotHermitian(herm));
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > MATRIX_TOL || trace.im.abs() > MATRIX_TOL {
            return Err(StateError::NotUnitTrace(trace.re));
        }
        let min = linalg::hermitian_eigenvalues4(&m)[0];
        if min < -MATRIX_TOL {
            return Err(StateError::NotPositive(min));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be a state (e.g. a channel output).
    pub(crate) fn from_matrix_unchecked(m: Mat4) -> Self {
        Self(m)
    }

    pub fn maximally_mixed() -> Self {
        Self(Mat4::identity() * Complex64::new(0.25, 0.0))
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat4 {
        self.0
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    /// Numerical eigenvalues, ascending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        linalg::hermitian_eigenvalues4(&self.0)
    }

    /// Copy with every off-diagonal entry set to zero.
    pub fn diagonal_part(&self) -> Self {
        Self(Mat4::from_diagonal(&self.0.diagonal()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VERTICES: [[f64; 3]; 4] = [
        [1.0, 1.0, -1.0],
        [1.0, -1.0, 1.0],
        [-1.0, 1.0, 1.0],
        [-1.0, -1.0, -1.0],
    ];

    fn state(c1: f64, c2: f64, c3: f64) -> BellDiagonalState {
        BellDiagonalState::new(c1, c2, c3).unwrap()
    }

    #[test]
    fn new_state_examples() {
        assert!(BellDiagonalState::new(0.0, 0.0, 0.0).is_ok());
        let s = state(1.0, 1.0, -1.0);
        assert_eq!(s.spectrum().to_array(), [0.0, 1.0, 0.0, 0.0]);
        match BellDiagonalState::new(1.0, 1.0, 1.0) {
            Err(StateError::OutsideTetrahedron { min_eigenvalue, .. }) => {
                assert_eq!(min_eigenvalue, -0.5)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            BellDiagonalState::new(f64::NAN, 0.0, 0.0),
            Err(StateError::NonFinite)
        );
    }

    #[test]
    fn vertices_are_pure_bell_states() {
        for v in VERTICES {
            let s = BellDiagonalState::from_components(v).unwrap();
            let mut spec = s.spectrum().to_array();
            spec.sort_by(f64::total_cmp);
            assert_eq!(spec, [0.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn membership_tolerance_boundary() {
        // λ11 = (1 - 1 - 4e-12)/4 = -1e-12: accepted
        assert!(BellDiagonalState::new(1.0, 0.0, 4e-12).is_ok());
        // λ11 = -1e-11: rejected
        assert!(BellDiagonalState::new(1.0, 0.0, 4e-11).is_err());
    }

    #[test]
    fn density_matrix_examples() {
        let rho = state(0.0, 0.0, 0.0).density_matrix();
        assert_eq!(rho, DensityMatrix4::maximally_mixed());

        let rho = state(1.0, 1.0, -1.0).density_matrix();
        let expect = [
            ((0, 0), 0.0),
            ((3, 3), 0.0),
            ((1, 1), 0.5),
            ((2, 2), 0.5),
            ((1, 2), 0.5),
            ((2, 1), 0.5),
            ((0, 3), 0.0),
        ];
        for (ij, v) in expect {
            assert_eq!(rho.entry(ij.0, ij.1), Complex64::new(v, 0.0));
        }

        let rho = state(0.5, 0.3, 0.1).density_matrix();
        let diag: Vec<f64> = (0..4).map(|i| rho.entry(i, i).re).collect();
        for (d, e) in diag.iter().zip([0.275, 0.225, 0.225, 0.275]) {
            assert!((d - e).abs() < 1e-15);
        }
        assert!((rho.entry(0, 3).re - 0.05).abs() < 1e-15);
        assert!((rho.entry(3, 0).re - 0.05).abs() < 1e-15);
        assert!((rho.entry(1, 2).re - 0.2).abs() < 1e-15);
    }

    #[test]
    fn spectrum_examples() {
        let close = |s: Spectrum, e: [f64; 4]| {
            s.to_array()
                .iter()
                .zip(e)
                .all(|(a, b)| (a - b).abs() < 1e-15)
        };
        assert!(close(state(0.0, 0.0, 0.0).spectrum(), [0.25; 4]));
        assert!(close(state(0.5, 0.0, 0.0).spectrum(), [0.375, 0.375, 0.125, 0.125]));
        assert!(close(state(0.5, 0.3, 0.1).spectrum(), [0.325, 0.425, 0.225, 0.025]));
    }

    #[test]
    fn spectrum_matches_numerical_eigenvalues() {
        for s in random_states(11, 500) {
            let mut closed = s.spectrum().to_array();
            closed.sort_by(f64::total_cmp);
            let numeric = s.density_matrix().eigenvalues();
            for (a, b) in closed.iter().zip(numeric) {
                assert!((a - b).abs() < 1e-12, "{s}: {closed:?} vs {numeric:?}");
            }
        }
    }

    #[test]
    fn from_density_matrix_round_trip() {
        for c in [[0.0, 0.0, 0.0], [0.8, -0.4, 0.2]] {
            let s = BellDiagonalState::from_components(c).unwrap();
            let back = BellDiagonalState::from_density_matrix(&s.density_matrix()).unwrap();
            for (a, b) in back.components().iter().zip(c) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn off_pattern_entry_rejected() {
        let mut m = DensityMatrix4::maximally_mixed().into_matrix();
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        m[(1, 0)] = Complex64::new(0.1, 0.0);
        let rho = DensityMatrix4::new(m).unwrap();
        assert!(matches!(
            BellDiagonalState::from_density_matrix(&rho),
            Err(StateError::NotBellDiagonal(_))
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = DensityMatrix4::maximally_mixed().into_matrix();
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix4::new(m), Err(StateError::NotHermitian(_))));

        let m = Mat4::identity() * Complex64::new(0.5, 0.0);
        assert!(matches!(DensityMatrix4::new(m), Err(StateError::NotUnitTrace(_))));

        let m = Mat4::from_diagonal(&nalgebra::Vector4::new(
            Complex64::new(1.5, 0.0),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ));
        assert!(matches!(DensityMatrix4::new(m), Err(StateError::NotPositive(_))));
    }

    #[test]
    fn separability_and_incoherence() {
        assert!(state(0.0, 0.0, 0.0).is_separable());
        assert!(!state(1.0, 1.0, -1.0).is_separable());
        assert!(state(0.4, 0.3, 0.3).is_separable());

        assert!(state(0.0, 0.0, 0.7).is_incoherent());
        assert!(state(0.0, 0.0, 0.0).is_incoherent());
        assert!(!state(0.1, 0.0, 0.0).is_incoherent());
    }

    #[test]
    fn random_state_is_deterministic_and_centred() {
        assert_eq!(random_state(42), random_state(42));
        assert_ne!(random_state(42), random_state(43));

        let states = random_states(7, 10_000);
        let mut mean = [0.0; 3];
        for s in &states {
            assert!(BellDiagonalState::from_components(s.components()).is_ok());
            for (m, c) in mean.iter_mut().zip(s.components()) {
                *m += c / states.len() as f64;
            }
        }
        assert!(mean.iter().all(|m| m.abs() < 0.05), "{mean:?}");
    }

    #[test]
    fn json_shape_and_validation() {
        let s = state(0.5, -0.25, 0.125);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"c1":0.5,"c2":-0.25,"c3":0.125}"#);
        let back: BellDiagonalState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<BellDiagonalState>(r#"{"c1":1,"c2":1,"c3":1}"#).is_err());
    }
}
