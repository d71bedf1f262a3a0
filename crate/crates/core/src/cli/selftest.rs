//! Invariant checks behind `belltet selftest`.
//!
//! Each check is deterministic for a given seed and reports a single value
//! against its bound; the report carries no timings so that repeated runs
//! are byte-identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channels::{depolarizing_a_with, ChannelFamily, DepolarizingWeights, NoiseSchedule};
use crate::geometry::{
    contour_slice, cre_first_derivative, cre_second_derivative, geo_discord_ray_piecewise, isosurface,
    radial_crossings, sample_field, sample_slice, Bounds, Ray, DEFAULT_SLICE_DIMS,
};
use crate::measures::{self, Measure};
use crate::ordering::{find_counterexample, ray_ordering_check, sequence_scan};
use crate::state::{random_states, BellDiagonalState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// What `value` measures.
    pub metric: String,
    pub value: f64,
    pub bound: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub depolarizing_weights: DepolarizingWeights,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn at_most(name: &str, metric: &str, value: f64, bound: f64, samples: usize) -> Check {
    Check {
        name: name.into(),
        passed: value <= bound,
        metric: metric.into(),
        value,
        bound,
        samples,
    }
}

fn at_least(name: &str, metric: &str, value: f64, bound: f64, samples: usize) -> Check {
    Check {
        name: name.into(),
        passed: value >= bound,
        metric: metric.into(),
        value,
        bound,
        samples,
    }
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

fn random_direction(rng: &mut ChaCha8Rng) -> [f64; 3] {
    std::array::from_fn(|_| rng.sample(StandardNormal))
}

/// `C_re` at `(c1, m c1, 0)`.
fn cre_on_plane(m: f64, c1: f64) -> f64 {
    BellDiagonalState::new(c1, m * c1, 0.0)
        .map(|s| measures::coherence_rel_entropy(&s))
        .unwrap_or(f64::NAN)
}

/// `(m, c1)` with `m ∈ [-3, 3]` and every eigenvalue of `(c1, m c1, 0)`
/// at least 0.025.
pub fn interior_plane_point<R: Rng>(rng: &mut R) -> (f64, f64) {
    let m = rng.random_range(-3.0..3.0);
    let c1 = rng.random_range(-0.9..0.9) / (1.0 + f64::abs(m));
    (m, c1)
}

/// Relative gap between an exact derivative and its finite difference.
pub fn derivative_gap(exact: f64, estimate: f64) -> f64 {
    (exact - estimate).abs() / exact.abs()
}

/// Runs every check; `weights` selects the depolarizing Kraus set under test.
pub fn run_selftest(seed: u64, weights: DepolarizingWeights) -> SelftestReport {
    let mut checks = Vec::new();
    let states = random_states(seed, 500);

    // Closed forms against their definitions.
    checks.push(at_most(
        "coherence_l1_oracle",
        "max |closed - oracle|",
        max_of(states.iter().map(|s| {
            (measures::coherence_l1(s) - measures::coherence_l1_oracle(&s.density_matrix())).abs()
        })),
        1e-12,
        states.len(),
    ));
    checks.push(at_most(
        "coherence_rel_entropy_oracle",
        "max |closed - oracle|",
        max_of(states.iter().map(|s| {
            (measures::coherence_rel_entropy(s) - measures::coherence_rel_entropy_oracle(&s.density_matrix())).abs()
        })),
        1e-10,
        states.len(),
    ));
    let few = &states[..6];
    checks.push(at_most(
        "discord_oracle",
        "max |closed - oracle|",
        max_of(few.iter().map(|s| {
            let oracle = measures::discord_oracle(&s.density_matrix(), 32).unwrap_or(f64::INFINITY);
            (measures::discord(s).discord - oracle).abs()
        })),
        2e-3,
        few.len(),
    ));
    let axis: Vec<BellDiagonalState> = (0..30)
        .map(|i| {
            let x = -0.95 + 1.9 * (i / 3) as f64 / 9.0;
            let mut c = [0.0; 3];
            c[i % 3] = x;
            BellDiagonalState::from_components(c).expect("axis points inside")
        })
        .collect();
    checks.push(at_most(
        "discord_zero_on_axes",
        "max discord",
        max_of(axis.iter().map(|s| measures::discord(s).discord)),
        1e-12,
        axis.len(),
    ));
    let two = &states[..2];
    checks.push(at_most(
        "geometric_discord_oracle",
        "max |closed - oracle|",
        max_of(two.iter().map(|s| {
            let oracle = measures::geometric_discord_oracle_with_grid(&s.density_matrix(), 1500, 12)
                .unwrap_or(f64::INFINITY);
            (measures::geometric_discord(s) - oracle).abs()
        })),
        1e-3,
        two.len(),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut piecewise_gap: f64 = 0.0;
    for _ in 0..50 {
        let m: f64 = rng.random_range(-3.0..3.0);
        let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        for ray in [Ray::discord_plane(m), Ray::discord_generic(a, b)].into_iter().flatten() {
            let d = ray.direction();
            let anchor = if d[2] != 0.0 { 2 } else { 1 };
            let t = rng.random_range(0.0..ray.t_max());
            let s = ray.state_at(t);
            let piecewise = geo_discord_ray_piecewise(&ray.family(), s.components()[anchor]).unwrap_or(f64::NAN);
            piecewise_gap = piecewise_gap.max((piecewise - measures::geometric_discord(&s)).abs());
        }
    }
    checks.push(at_most("geo_discord_piecewise", "max |piecewise - closed|", piecewise_gap, 1e-15, 100));

    // Channels.
    let channel = depolarizing_a_with(0.2, weights);
    let deviation = channel.as_ref().map_or(f64::INFINITY, |ch| ch.completeness_deviation());
    checks.push(at_most(
        "depolarizing_trace_preserving",
        "max |sum K^dag K - I|",
        deviation,
        1e-10,
        1,
    ));
    let mut shrink_gap: f64 = 0.0;
    for s in &states[..50] {
        for q in [0.1, 0.45, 0.9] {
            let gap = depolarizing_a_with(q, weights)
                .and_then(|ch| Ok(BellDiagonalState::from_density_matrix(&ch.apply(&s.density_matrix())?)?))
                .map(|out| max_of(out.components().iter().zip(s.components()).map(|(x, c)| (x - (1.0 - q) * c).abs())))
                .unwrap_or(f64::INFINITY);
            shrink_gap = shrink_gap.max(gap);
        }
    }
    checks.push(at_most("depolarizing_uniform_shrink", "max |c' - (1-q) c|", shrink_gap, 1e-12, 150));

    let schedule = NoiseSchedule::linspace(1.0, 3.0, 10).expect("valid schedule");
    let mut flip_gap: f64 = 0.0;
    for s in &states[..30] {
        let rho = s.density_matrix();
        for &t in &schedule.times {
            let q = schedule.strength_at(t);
            let decay = (-2.0 * t).exp();
            let [c1, c2, c3] = s.components();
            let gap = ChannelFamily::PhaseFlipBoth
                .kraus(q)
                .and_then(|ch| Ok(BellDiagonalState::from_density_matrix(&ch.apply(&rho)?)?))
                .map(|out| {
                    let c = out.components();
                    max_of([c[0] - c1 * decay, c[1] - c2 * decay, c[2] - c3].into_iter().map(f64::abs))
                })
                .unwrap_or(f64::INFINITY);
            flip_gap = flip_gap.max(gap);
        }
    }
    checks.push(at_most("phase_flip_closed_form", "max |kraus - closed|", flip_gap, 1e-10, 300));

    let mut increase: f64 = 0.0;
    for s in &states[..100] {
        let before = measures::measure_all(s);
        for family in [ChannelFamily::DepolarizingA, ChannelFamily::PhaseFlipBoth] {
            for k in 1..10 {
                let after = family.map_state(s, k as f64 / 10.0).map(|o| measures::measure_all(&o));
                let rise = after.map_or(f64::INFINITY, |a| (a.c_l1 - before.c_l1).max(a.c_re - before.c_re));
                increase = increase.max(rise);
            }
        }
    }
    checks.push(at_most("coherence_monotone_under_channels", "max increase", increase, 1e-10, 1800));

    // Ordering.
    let found = find_counterexample(Measure::CoherenceL1, Measure::CoherenceRelEntropy, 10_000, seed)
        .map_or(0.0, |v| f64::from(u8::from(!v.same_ordering)));
    checks.push(at_least("coherence_counterexample", "found", found, 1.0, 10_000));
    let descents = sequence_scan(Measure::CoherenceL1, Measure::CoherenceRelEntropy, &states)
        .map_or(0, |r| r.violations.len());
    checks.push(at_least("coherence_sequence_descents", "descents", descents as f64, 1.0, states.len()));
    let mut ray_violations = 0usize;
    for _ in 0..20 {
        let Ok(ray) = Ray::new(random_direction(&mut rng)) else { continue };
        for (a, b) in [
            (Measure::CoherenceL1, Measure::CoherenceRelEntropy),
            (Measure::Discord, Measure::GeometricDiscord),
        ] {
            ray_violations += ray_ordering_check(&ray, a, b, 64).map_or(usize::MAX / 64, |v| v.violations);
        }
    }
    checks.push(at_most("ray_ordering", "violations", ray_violations as f64, 0.0, 40));

    // Derivatives.
    let mut first_gap: f64 = 0.0;
    let mut min_second = f64::INFINITY;
    for _ in 0..200 {
        let (m, c1) = interior_plane_point(&mut rng);
        let h = 1e-5;
        let fd = (cre_on_plane(m, c1 + h) - cre_on_plane(m, c1 - h)) / (2.0 * h);
        first_gap = first_gap.max(cre_first_derivative(m, c1).map_or(f64::INFINITY, |d| derivative_gap(d, fd)));
        min_second = min_second.min(cre_second_derivative(m, c1).unwrap_or(f64::NEG_INFINITY));
    }
    checks.push(at_most("cre_first_derivative", "max relative gap", first_gap, 1e-6, 200));
    checks.push(Check {
        passed: min_second > 0.0,
        ..at_least("cre_second_derivative_positive", "min value", min_second, 0.0, 200)
    });

    // Level sets.
    let field = sample_field(Measure::Discord, [41; 3], Bounds::unit_cube());
    let (vertex_gap, axis_distance) = match field.and_then(|f| isosurface(&f, 0.03)) {
        Ok(mesh) => (
            max_of(mesh.vertices.iter().map(|v| {
                BellDiagonalState::from_components(*v)
                    .map_or(f64::INFINITY, |s| (measures::discord(&s).discord - 0.03).abs())
            })),
            mesh.vertices
                .iter()
                .map(|v| axis_distance(*v))
                .fold(f64::INFINITY, f64::min),
        ),
        Err(_) => (f64::INFINITY, 0.0),
    };
    checks.push(at_most("discord_isosurface_vertices", "max |D - level|", vertex_gap, 0.01, 1));
    checks.push(at_least("discord_isosurface_axis_clearance", "min axis distance", axis_distance, 0.02, 1));
    checks.push(at_most(
        "contour_nesting",
        "rays with crossed levels",
        nesting_failures(Measure::CoherenceRelEntropy, 0.0, 0.05, 0.2, 50) as f64,
        0.0,
        50,
    ));

    let passed = checks.iter().all(|c| c.passed);
    SelftestReport {
        seed,
        depolarizing_weights: weights,
        passed,
        checks,
    }
}

/// Distance from `p` to the nearest coordinate axis.
pub fn axis_distance(p: [f64; 3]) -> f64 {
    let [x, y, z] = p.map(|c| c * c);
    (y + z).min(x + z).min(x + y).sqrt()
}

/// Number of in-slice origin rays along which a crossing of `outer_level`
/// is not strictly outside every crossing of `inner_level`.
pub fn nesting_failures(measure: Measure, c3: f64, inner_level: f64, outer_level: f64, rays: usize) -> usize {
    let Ok(field) = sample_slice(measure, c3, [DEFAULT_SLICE_DIMS; 2], Bounds::unit_cube()) else {
        return rays;
    };
    let (Ok(inner), Ok(outer)) = (contour_slice(&field, inner_level), contour_slice(&field, outer_level)) else {
        return rays;
    };
    (0..rays)
        .filter(|k| {
            let angle = (*k as f64 + 0.5) * std::f64::consts::TAU / rays as f64;
            let a = radial_crossings(&inner, angle);
            let b = radial_crossings(&outer, angle);
            matches!((a.last(), b.first()), (Some(a_max), Some(b_min)) if b_min <= a_max)
        })
        .count()
}
