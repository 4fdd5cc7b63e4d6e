use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::VdcWalker;
use crate::error::{invalid, Result};
use crate::point::Point;
use crate::sources::radical_inverse;
use crate::walk::Sign;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// A block ended away from `z_{-1}`.
    NoReturn,
    /// The sign changed where it must stay fixed.
    SignChange,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Zero-based step number.
    pub step: u64,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityReport {
    pub b: u64,
    pub start: Point,
    pub cycles: u64,
    pub steps_run: u64,
    pub is_periodic: bool,
    /// Sign of the first step.
    pub first_sign: Option<Sign>,
    /// Largest `||z_{kb-1} - z_{-1}||` over the completed blocks.
    pub max_return_error: f64,
    pub violation: Option<Violation>,
}

/// Runs `cycles` blocks from `z_{-1} = start` and checks that every block
/// returns to the start within `tol` with a constant sign.
///
/// For `b >= 3` the sign must be the same at every step. For `b = 2` it only
/// has to be constant within each pair, since the pair directions turn
/// through every angle and the sign follows them.
pub fn is_periodic_start(start: &Point, b: u64, cycles: u64, tol: f64) -> Result<PeriodicityReport> {
    if cycles == 0 {
        return Err(invalid("cycles", "must be positive"));
    }
    if !(tol >= 0.0) {
        return Err(invalid("tol", "must be nonnegative"));
    }
    let mut w = VdcWalker::new(b, start)?;
    let z0 = w.z;
    let mut report = PeriodicityReport {
        b,
        start: start.clone(),
        cycles,
        steps_run: 0,
        is_periodic: false,
        first_sign: None,
        max_return_error: 0.0,
        violation: None,
    };
    let mut block_sign = Sign::Plus;
    'outer: for k in 0..cycles {
        for j in 0..b {
            let step = k * b + j;
            let Some(sign) = w.step() else {
                report.violation = Some(Violation {
                    step,
                    kind: ViolationKind::Indeterminate,
                });
                break 'outer;
            };
            report.steps_run += 1;
            let first = *report.first_sign.get_or_insert(sign);
            if j == 0 {
                block_sign = sign;
            }
            let reference = if b == 2 { block_sign } else { first };
            if sign != reference {
                report.violation = Some(Violation {
                    step,
                    kind: ViolationKind::SignChange,
                });
                break 'outer;
            }
        }
        let err = w.distance_to(z0);
        report.max_return_error = report.max_return_error.max(err);
        if err > tol {
            report.violation = Some(Violation {
                step: k * b + b - 1,
                kind: ViolationKind::NoReturn,
            });
            break;
        }
    }
    report.is_periodic = report.violation.is_none();
    Ok(report)
}

/// `sin(j pi / b) / sin(pi / b)`, the distance from `z_{-1}` after `j`
/// steps of a closed block.
pub fn chord_radius(b: u64, j: u64) -> Result<f64> {
    if b < 2 || j >= b {
        return Err(invalid("j", format!("need b >= 2 and 0 <= j < b, got b={b}, j={j}")));
    }
    let bf = b as f64;
    Ok((j as f64 * PI / bf).sin() / (PI / bf).sin())
}

/// Chord index of the state with label `n >= -1`: the number of steps
/// taken into its block.
pub fn chord_index(b: u64, n: i64) -> u64 {
    (n + 1).rem_euclid(b as i64) as u64
}

/// Smallest power of `b`, at least 100, whose blocks bring the rotation
/// within `delta / D` of `2 pi / b`, with `D = 1 + 1/sin(pi/b)` bounding the
/// distance from `z_{-1}` to the block polygon. Starts more than `delta`
/// outside the periodic region are rejected within that many cycles.
pub fn cycles_to_resolve(b: u64, delta: f64) -> u64 {
    let bf = b as f64;
    let reach = 1.0 + 1.0 / (PI / bf).sin();
    let mut cycles = b;
    while TAU / bf / cycles as f64 * reach >= delta || cycles < 100 {
        cycles *= b;
    }
    cycles
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonTrace {
    pub b: u64,
    /// `2 pi Vdc_b(kb)` for blocks `k = 0..cycles`.
    pub rotations: Vec<f64>,
    /// `chord_radius(b, j)` for `j = 0..b`.
    pub chord_radii: Vec<f64>,
}

pub fn polygon_trace(b: u64, cycles: u64) -> Result<PolygonTrace> {
    if b < 2 {
        return Err(invalid("b", "must be >= 2"));
    }
    Ok(PolygonTrace {
        b,
        rotations: (0..cycles).map(|k| TAU * radical_inverse(k * b, b)).collect(),
        chord_radii: (0..b).map(|j| chord_radius(b, j)).collect::<Result<_>>()?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub x: f64,
    pub y: f64,
    pub periodic: bool,
    /// `||z_{-1} - z_{steps-1}||`, infinite when the run hit a tie.
    pub return_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionRaster {
    pub b: u64,
    pub resolution: usize,
    pub half_width: f64,
    pub steps: u64,
    pub threshold: f64,
    /// Row-major from the bottom-left corner.
    pub cells: Vec<RegionCell>,
}

impl RegionRaster {
    pub fn periodic_fraction(&self) -> f64 {
        self.cells.iter().filter(|c| c.periodic).count() as f64 / self.cells.len() as f64
    }
}

/// Marks cell centres of `[-h, h]^2` whose run satisfies
/// `||z_{-1} - z_{steps-1}|| < threshold`.
pub fn region_raster(b: u64, resolution: usize, half_width: f64, steps: u64, threshold: f64) -> Result<RegionRaster> {
    if resolution == 0 || !(half_width > 0.0) {
        return Err(invalid("resolution", "resolution and half width must be positive"));
    }
    if b < 2 {
        return Err(invalid("b", "must be >= 2"));
    }
    let cell = 2.0 * half_width / resolution as f64;
    let centre = |i: usize| -half_width + (i as f64 + 0.5) * cell;
    let rows: Vec<Vec<RegionCell>> = (0..resolution)
        .into_par_iter()
        .map(|row| {
            let y = centre(row);
            (0..resolution)
                .map(|col| {
                    let x = centre(col);
                    let start = Point::xy(x, y);
                    let mut w = VdcWalker::new(b, &start).expect("planar start");
                    let mut err = f64::INFINITY;
                    if (0..steps).all(|_| w.step().is_some()) {
                        err = w.distance_to([x, y]);
                    }
                    RegionCell {
                        x,
                        y,
                        periodic: err < threshold,
                        return_error: err,
                    }
                })
                .collect()
        })
        .collect();
    Ok(RegionRaster {
        b,
        resolution,
        half_width,
        steps,
        threshold,
        cells: rows.into_iter().flatten().collect(),
    })
}
