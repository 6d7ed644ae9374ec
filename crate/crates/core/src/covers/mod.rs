//! Sublevel-set covers of polynomial families on the unit interval.

pub mod interval;
pub mod ops;
pub mod pipeline;
pub mod sublevel;

pub use interval::{Ambient, IntervalSet, UNIT_HI, UNIT_LO};
pub use ops::{b_set, gamma_psi, root_neighborhood_cover, root_neighborhood_radius, sigma_eps, sublevel, BSet, BSetOptions};
pub use pipeline::{chop, cover_block, CoverReport, CoverRequest, CoverRule};

/// `delta`-neighbourhood of `s` within its ambient.
pub fn enlarge(s: &IntervalSet, delta: f64) -> IntervalSet {
    s.enlarge(delta)
}
