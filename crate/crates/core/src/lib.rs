//! Coherence and discord geometry over the tetrahedron of two-qubit
//! Bell-diagonal states.
//!
//! A Bell-diagonal state is fixed by its correlation vector `(c1, c2, c3)`.
//! The crate evaluates four resource measures on those states (l1 and
//! relative-entropy coherence, discord and geometric discord), each both in
//! closed form and through an independent definition-based oracle. On top of
//! that it provides:
//!
//! * incoherent Kraus channels (depolarizing on A, phase flip on A/B) and
//!   their closed-form trajectories in c-space ([`channels`]),
//! * the pairwise / sorted-sequence tests for whether two measures induce the
//!   same ordering of states ([`ordering`]),
//! * rays, scalar fields, contour slices and isosurfaces of any measure
//!   ([`geometry`]),
//! * CSV / JSON / OBJ writers and readers ([`export`]) and the `belltet`
//!   command-line front end ([`cli`]).

pub mod channels;
pub mod cli;
pub mod export;
pub mod geometry;
pub mod linalg;
pub mod measures;
pub mod ordering;
pub mod state;

pub use channels::{ChannelError, ChannelFamily, KrausChannel, NoiseSchedule, Target, Trajectory};
pub use measures::{DiscordBreakdown, Measure, MeasureError, MeasureSet};
pub use state::{BellDiagonalState, DensityMatrix4, Spectrum, StateError};
