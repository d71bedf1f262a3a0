//! Do two measures order the Bell-diagonal states the same way?
//!
//! Two measures agree on a set of states when `A(s1) <= A(s2)` exactly when
//! `B(s1) <= B(s2)` for every pair. Disagreement is shown either by a pair
//! that is level under one measure but not under the other, or by sorting
//! states under `A` and finding descents in the `B` sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ray_states, GeometryError, Ray};
use crate::measures::Measure;
use crate::state::{sample_state, BellDiagonalState};

/// Differences below this count as equal.
pub const EQUAL_TOL: f64 = 1e-9;

/// A counterexample must differ by more than this under the second measure.
pub const DISTINCT_TOL: f64 = 1e-6;

/// Minimum drop flagged as a descent in a sorted sequence.
pub const DESCENT_TOL: f64 = 1e-9;

/// Lattice offsets for the axis-parallel pair family.
const LATTICE_STEPS: [f64; 3] = [0.05, 0.1, 0.2];
const LATTICE_NODES: [f64; 7] = [-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrderingError {
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PairSearch,
    SequenceScan,
}

/// Two states that are level under one measure and not under the other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub states: [BellDiagonalState; 2],
    pub values_a: [f64; 2],
    pub values_b: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingVerdict {
    pub measure_a: Measure,
    pub measure_b: Measure,
    pub same_ordering: bool,
    pub method: Method,
    pub counterexample: Option<Counterexample>,
    /// Pairs examined (pair search) or states scanned (sequence scan).
    pub samples: usize,
    /// Descents found (sequence scan only).
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SortedSequenceReport {
    pub measure_a: Measure,
    pub measure_b: Measure,
    pub states: Vec<BellDiagonalState>,
    pub values_a: Vec<f64>,
    pub values_b: Vec<f64>,
    /// Indices `i` with `values_b[i + 1] < values_b[i] - DESCENT_TOL`.
    pub violations: Vec<usize>,
}

/// Where pair searches draw their states from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Tetrahedron,
    Ray(Ray),
}

fn tolerant_sign(delta: f64) -> i8 {
    if delta.abs() < EQUAL_TOL {
        0
    } else if delta > 0.0 {
        1
    } else {
        -1
    }
}

fn counterexample(a: Measure, b: Measure, s1: BellDiagonalState, s2: BellDiagonalState) -> Counterexample {
    Counterexample {
        states: [s1, s2],
        values_a: [a.evaluate(&s1), a.evaluate(&s2)],
        values_b: [b.evaluate(&s1), b.evaluate(&s2)],
    }
}

/// Compares one pair. The orderings differ when the tolerant signs of
/// `A(s1) - A(s2)` and `B(s1) - B(s2)` differ.
pub fn pair_check(a: Measure, b: Measure, s1: &BellDiagonalState, s2: &BellDiagonalState) -> OrderingVerdict {
    let ce = counterexample(a, b, *s1, *s2);
    let same = tolerant_sign(ce.values_a[0] - ce.values_a[1]) == tolerant_sign(ce.values_b[0] - ce.values_b[1]);
    OrderingVerdict {
        measure_a: a,
        measure_b: b,
        same_ordering: same,
        method: Method::PairSearch,
        counterexample: (!same).then_some(ce),
        samples: 1,
        violations: 0,
    }
}

/// Level under `a`, distinct under `b`.
fn is_witness(ce: &Counterexample) -> bool {
    (ce.values_a[0] - ce.values_a[1]).abs() < EQUAL_TOL && (ce.values_b[0] - ce.values_b[1]).abs() > DISTINCT_TOL
}

/// Searches the whole tetrahedron; see [`find_counterexample_in`].
pub fn find_counterexample(a: Measure, b: Measure, n_samples: usize, seed: u64) -> Result<OrderingVerdict, OrderingError> {
    find_counterexample_in(a, b, n_samples, seed, Domain::Tetrahedron)
}

/// Looks for two states with equal `a` but different `b`.
///
/// In the tetrahedron the axis-parallel lattice pairs come first, followed
/// by random states paired with the point of equal `a` on a random ray.
/// Along a ray, random `t` values are paired with their level-matched
/// partner on the same ray. The lowest-index witness is returned, so the
/// result does not depend on thread count.
pub fn find_counterexample_in(
    a: Measure,
    b: Measure,
    n_samples: usize,
    seed: u64,
    domain: Domain,
) -> Result<OrderingVerdict, OrderingError> {
    if n_samples < 2 {
        return Err(OrderingError::TooFewSamples { min: 2, got: n_samples });
    }
    let lattice = match domain {
        Domain::Tetrahedron => lattice_pairs(),
        Domain::Ray(_) => Vec::new(),
    };
    let hit = (0..n_samples).into_par_iter().find_map_first(|index| {
        let (s1, s2) = match lattice.get(index) {
            Some(pair) => *pair,
            None => random_pair(a, domain, seed, index as u64)?,
        };
        let ce = counterexample(a, b, s1, s2);
        is_witness(&ce).then_some((index, ce))
    });
    let samples = hit.as_ref().map_or(n_samples, |(index, _)| index + 1);
    Ok(OrderingVerdict {
        measure_a: a,
        measure_b: b,
        same_ordering: hit.is_none(),
        method: Method::PairSearch,
        counterexample: hit.map(|(_, ce)| ce),
        samples,
        violations: 0,
    })
}

/// Pairs `(p, p + δ e_k)` over a coarse lattice inside the tetrahedron.
fn lattice_pairs() -> Vec<(BellDiagonalState, BellDiagonalState)> {
    let mut pairs = Vec::new();
    for &x in &LATTICE_NODES {
        for &y in &LATTICE_NODES {
            for &z in &LATTICE_NODES {
                let Ok(p) = BellDiagonalState::new(x, y, z) else { continue };
                for axis in 0..3 {
                    for &delta in &LATTICE_STEPS {
                        let mut c = [x, y, z];
                        c[axis] += delta;
                        if let Ok(q) = BellDiagonalState::from_components(c) {
                            pairs.push((p, q));
                        }
                    }
                }
            }
        }
    }
    pairs
}

fn random_direction<R: Rng>(rng: &mut R) -> [f64; 3] {
    std::array::from_fn(|_| rng.sample(StandardNormal))
}

fn random_pair(a: Measure, domain: Domain, seed: u64, index: u64) -> Option<(BellDiagonalState, BellDiagonalState)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    match domain {
        Domain::Tetrahedron => {
            let s1 = sample_state(&mut rng);
            let ray = Ray::new(random_direction(&mut rng)).ok()?;
            let s2 = level_match(a, &ray, a.evaluate(&s1))?;
            Some((s1, s2))
        }
        Domain::Ray(ray) => {
            let s1 = ray.state_at(rng.random::<f64>() * ray.t_max());
            let s2 = level_match(a, &ray, a.evaluate(&s1))?;
            Some((s1, s2))
        }
    }
}

/// Bisects for the point on `ray` where `a` equals `target`, assuming `a`
/// grows along the ray.
fn level_match(a: Measure, ray: &Ray, target: f64) -> Option<BellDiagonalState> {
    let (mut lo, mut hi) = (0.0, ray.t_max());
    let at = |t: f64| a.evaluate(&ray.state_at(t));
    if target < at(lo) || target > at(hi) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = if (at(lo) - target).abs() <= (at(hi) - target).abs() { lo } else { hi };
    Some(ray.state_at(t))
}

/// Sorts `states` by `a` (ties by `(c1, c2, c3)`) and records every descent
/// of `b` along that order. Descents touching the first or last state are
/// reported like any other.
pub fn sequence_scan(a: Measure, b: Measure, states: &[BellDiagonalState]) -> Result<SortedSequenceReport, OrderingError> {
    if states.len() < 2 {
        return Err(OrderingError::TooFewSamples { min: 2, got: states.len() });
    }
    let mut keyed: Vec<(f64, BellDiagonalState)> = states.par_iter().map(|s| (a.evaluate(s), *s)).collect();
    keyed.sort_by(|(va, sa), (vb, sb)| {
        va.total_cmp(vb).then_with(|| {
            let (ca, cb) = (sa.components(), sb.components());
            ca[0].total_cmp(&cb[0])
                .then(ca[1].total_cmp(&cb[1]))
                .then(ca[2].total_cmp(&cb[2]))
        })
    });
    let (values_a, states): (Vec<f64>, Vec<BellDiagonalState>) = keyed.into_iter().unzip();
    let values_b: Vec<f64> = states.par_iter().map(|s| b.evaluate(s)).collect();
    let violations = values_b
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] < w[0] - DESCENT_TOL)
        .map(|(i, _)| i)
        .collect();
    Ok(SortedSequenceReport {
        measure_a: a,
        measure_b: b,
        states,
        values_a,
        values_b,
        violations,
    })
}

impl SortedSequenceReport {
    pub fn verdict(&self) -> OrderingVerdict {
        OrderingVerdict {
            measure_a: self.measure_a,
            measure_b: self.measure_b,
            same_ordering: self.violations.is_empty(),
            method: Method::SequenceScan,
            counterexample: None,
            samples: self.states.len(),
            violations: self.violations.len(),
        }
    }
}

/// Sequence scan of `n` evenly spaced states on `ray`, sorted by `a` and
/// then by `b`; the orderings agree when neither scan has a descent.
pub fn ray_ordering_check(ray: &Ray, a: Measure, b: Measure, n: usize) -> Result<OrderingVerdict, OrderingError> {
    if n < 3 {
        return Err(OrderingError::TooFewSamples { min: 3, got: n });
    }
    let states = ray_states(ray, n)?;
    let forward = sequence_scan(a, b, &states)?;
    let backward = sequence_scan(b, a, &states)?;
    let violations = forward.violations.len() + backward.violations.len();
    Ok(OrderingVerdict {
        measure_a: a,
        measure_b: b,
        same_ordering: violations == 0,
        method: Method::SequenceScan,
        counterexample: None,
        samples: n,
        violations,
    })
}
