//! Geometry of the planar van der Corput system.
//!
//! Throughout, a run starts at `z_{-1}` and step `n` uses the direction
//! `e^{2 pi i Vdc_b(n)}` for `n = 0, 1, ...`. Block `k` is the steps
//! `kb, ..., kb + b - 1`; its directions are those of block 0 rotated by
//! `2 pi Vdc_b(kb)`.

mod base2;
mod periodic;
mod polygon;
mod stopcycle;

pub use base2::{
    block_decrease_check, hitting_bound, hitting_time, monotone_pairs_check, closed_form_stall_alpha, semicircle_check,
    stall_start, BlockDecrease, HitOutcome, PairViolation, PairViolationKind, SemicircleReport,
    StallStart, HITTING_SLOPE_BOUND,
};
pub use periodic::{
    chord_index, chord_radius, cycles_to_resolve, is_periodic_start, polygon_trace, region_raster, PeriodicityReport,
    PolygonTrace, RegionCell, RegionRaster, Violation, ViolationKind,
};
pub use polygon::{
    block_halfplanes, block_polygon, clip, inner_polygon, inner_side_length, origin_region,
    triangle_region, HalfPlane, TriangleRegion,
};
pub use stopcycle::{
    min_index_reaching, polygon_height, predicted_stop_cycle, simulated_stop_cycle, StopCycle,
};

use crate::error::{invalid, Result};
use crate::point::Point;
use crate::sources::DirectionSource;
use crate::walk::{step_in_place, RawStep, TiePolicy};

/// Planar walker driven by a van der Corput stream, without storage.
pub(crate) struct VdcWalker {
    pub z: [f64; 2],
    source: DirectionSource,
    v: [f64; 2],
    policy: TiePolicy,
}

impl VdcWalker {
    pub fn new(b: u64, start: &Point) -> Result<Self> {
        if start.dim() != 2 {
            return Err(invalid("start", "van der Corput runs are planar"));
        }
        if !start.coords().iter().all(|c| c.is_finite()) {
            return Err(crate::error::Error::NonFinite);
        }
        Ok(VdcWalker {
            z: [start.x(), start.y()],
            source: DirectionSource::vdc(b)?,
            v: [0.0; 2],
            policy: TiePolicy::halt(),
        })
    }

    /// Takes one step; `None` when the sign is indeterminate.
    #[inline]
    pub fn step(&mut self) -> Option<crate::walk::Sign> {
        self.source.fill_next(&mut self.v);
        match step_in_place(&mut self.z, &self.v, &self.policy) {
            RawStep::Moved { sign, .. } => Some(sign),
            RawStep::Indeterminate => None,
        }
    }

    pub fn norm(&self) -> f64 {
        self.z[0].hypot(self.z[1])
    }

    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        (self.z[0] - p[0]).hypot(self.z[1] - p[1])
    }
}
