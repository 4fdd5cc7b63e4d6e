//! Fixed-point solver for the stationary radial density.
//!
//! The density is represented by its values at uniform nodes on `[0, r_max]`
//! with linear interpolation in between. Row `i` of the discrete operator
//! holds `A_ij = int P_d(x, y_i) phi_j(x) dx` for the hat functions `phi_j`,
//! integrated cell by cell with the open adaptive rule. Power iteration with
//! renormalization then finds the fixed point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{c_d, check_dim, kernel_unchecked, stationary_mean};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_sub, Substitution, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_nodes: usize,
    /// Right end of the grid, `stationary_mean(d) + 8` when absent.
    pub r_max: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_nodes: 2000,
            r_max: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub d: usize,
    pub grid: GridSpec,
    pub max_iters: usize,
    /// Stop when the sup-norm change of one iteration falls below this.
    pub tol: f64,
}

impl SolverConfig {
    pub fn new(d: usize) -> Self {
        SolverConfig {
            d,
            grid: GridSpec::default(),
            max_iters: 500,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub d: usize,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// Trapezoid weights; exact for the piecewise-linear interpolant.
    pub quadrature_weights: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm change of the last iteration.
    pub residual: f64,
    /// Mass kept by one application of the discrete operator.
    pub eigenvalue: f64,
    /// `|eigenvalue - 1|`, the mass lost or created by discretization and
    /// truncation.
    pub discretization_error: f64,
    /// Mass of the solution on the last unit of the grid.
    pub tail_mass: f64,
}

impl DensityGrid {
    pub fn total_mass(&self) -> f64 {
        self.weighted_sum(|_| 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.weighted_sum(|x| x)
    }

    pub fn second_moment(&self) -> f64 {
        self.weighted_sum(|x| x * x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second_moment() - m * m
    }

    fn weighted_sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.values)
            .zip(&self.quadrature_weights)
            .map(|((x, v), w)| f(*x) * v * w)
            .sum()
    }

    /// Linear interpolant of the solution; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        let h = self.nodes[1] - self.nodes[0];
        if !(0.0..=self.nodes[n - 1]).contains(&x) {
            return 0.0;
        }
        let j = ((x / h) as usize).min(n - 2);
        let t = (x - self.nodes[j]) / h;
        self.values[j] * (1.0 - t) + self.values[j + 1] * t
    }
}

/// Range of `x` that can reach `y` in one step.
fn preimage(y: f64) -> (f64, f64) {
    let lo = if y < 1.0 { 1.0 - y } else { ((y - 1.0) * (y + 1.0)).sqrt() };
    (lo, y + 1.0)
}

struct Sparse {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Sparse {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.par_iter_mut().zip(&self.rows).for_each(|(o, row)| {
            *o = row.iter().map(|&(j, a)| a * v[j]).sum();
        });
    }
}

fn assemble(d: usize, nodes: &[f64], h: f64) -> Result<Sparse> {
    let c = c_d(d)?;
    let n = nodes.len();
    let r_max = nodes[n - 1];
    let tol = Tolerance {
        abs: 1e-14,
        rel: 1e-11,
        max_intervals: 100,
    };
    let rows = nodes
        .par_iter()
        .map(|&y| {
            let (lo, hi) = preimage(y);
            let hi = hi.min(r_max);
            let mut row: Vec<(usize, f64)> = Vec::new();
            if hi <= lo {
                return row;
            }
            let first = ((lo / h) as usize).min(n - 2);
            let last = ((hi / h).ceil() as usize).min(n - 1);
            let mut acc = vec![0.0; last - first + 1];
            for j in first..last {
                let (x0, x1) = (nodes[j], nodes[j + 1]);
                let a = x0.max(lo);
                let b = x1.min(hi);
                if b <= a {
                    continue;
                }
                // Inverse-square-root behaviour sits at the ends of the
                // preimage; cells touching them get endpoint clustering.
                let sub = if a == lo || b == hi { Substitution::Both } else { Substitution::None };
                let p = |x: f64| kernel_unchecked(d, c, x, y);
                let left = integrate_sub(|x| p(x) * (x1 - x) / h, a, b, sub, tol).value;
                let right = integrate_sub(|x| p(x) * (x - x0) / h, a, b, sub, tol).value;
                acc[j - first] += left;
                acc[j + 1 - first] += right;
            }
            row.extend(
                acc.into_iter()
                    .enumerate()
                    .filter(|(_, a)| *a != 0.0)
                    .map(|(k, a)| (first + k, a)),
            );
            row
        })
        .collect();
    Ok(Sparse { rows })
}

/// Solves `pi = K pi` on a uniform grid by renormalized power iteration,
/// starting from a unit-width Gaussian bump at the stationary mean.
pub fn solve_stationary(cfg: &SolverConfig) -> Result<DensityGrid> {
    check_dim(cfg.d)?;
    if cfg.grid.n_nodes < 3 {
        return Err(invalid("n_nodes", "need at least three nodes"));
    }
    if !(cfg.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let mean = stationary_mean(cfg.d)?;
    let r_max = cfg.grid.r_max.unwrap_or(mean + 8.0);
    if r_max < mean + 6.0 {
        return Err(invalid("r_max", format!("must be at least mean + 6 = {}", mean + 6.0)));
    }
    let n = cfg.grid.n_nodes;
    let h = r_max / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let mut weights = vec![h; n];
    weights[0] = h / 2.0;
    weights[n - 1] = h / 2.0;
    let mass = |v: &[f64]| v.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>();

    let a = assemble(cfg.d, &nodes, h)?;
    let mut pi: Vec<f64> = nodes.iter().map(|x| (-0.5 * (x - mean).powi(2)).exp()).collect();
    let m0 = mass(&pi);
    pi.iter_mut().for_each(|v| *v /= m0);

    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iters {
        a.apply(&pi, &mut next);
        next.iter_mut().for_each(|v| *v = v.max(0.0));
        let eigenvalue = mass(&next);
        next.iter_mut().for_each(|v| *v /= eigenvalue);
        residual = pi
            .iter()
            .zip(&next)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if residual < cfg.tol {
            let tail_mass = nodes
                .iter()
                .zip(&pi)
                .zip(&weights)
                .filter(|((x, _), _)| **x >= r_max - 1.0)
                .map(|((_, v), w)| v * w)
                .sum();
            return Ok(DensityGrid {
                d: cfg.d,
                nodes,
                values: pi,
                quadrature_weights: weights,
                iterations: it,
                residual,
                eigenvalue,
                discretization_error: (eigenvalue - 1.0).abs(),
                tail_mass,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iters,
        residual,
    })
}

/// One point of the three-dimensional identity
/// `pi(y)/y = int_{sqrt(y^2-1)}^{y+1} pi(x)/x dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityPoint {
    pub y: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Evaluates both sides of the `d = 3` identity at the grid nodes in
/// `[y_lo, y_hi]`, integrating the interpolant exactly cell by cell.
pub fn identity_residual_d3(grid: &DensityGrid, y_lo: f64, y_hi: f64) -> Result<Vec<IdentityPoint>> {
    if grid.d != 3 {
        return Err(invalid("d", "the identity holds in dimension 3"));
    }
    if y_lo < 1.0 {
        return Err(invalid("y_lo", "the identity needs y >= 1"));
    }
    let nodes = &grid.nodes;
    let n = nodes.len();
    let h = nodes[1] - nodes[0];
    let r_max = nodes[n - 1];
    let mut out = Vec::new();
    for (i, &y) in nodes.iter().enumerate() {
        if y < y_lo || y > y_hi {
            continue;
        }
        let (lo, hi) = preimage(y);
        let hi = hi.min(r_max);
        let mut rhs = 0.0;
        let first = (lo / h) as usize;
        for j in first..n - 1 {
            let (x0, x1) = (nodes[j], nodes[j + 1]);
            let a = x0.max(lo);
            let b = x1.min(hi);
            if b <= a {
                if x0 >= hi {
                    break;
                }
                continue;
            }
            // pi = alpha + beta x on the cell.
            let beta = (grid.values[j + 1] - grid.values[j]) / h;
            let alpha = grid.values[j] - beta * x0;
            let log_part = if alpha == 0.0 { 0.0 } else { alpha * (b / a).ln() };
            rhs += log_part + beta * (b - a);
        }
        out.push(IdentityPoint {
            y,
            lhs: grid.values[i] / y,
            rhs,
        });
    }
    Ok(out)
}
