//! The acceptance battery.
//!
//! Each criterion runs at a fixed seed and returns what it measured next to
//! what it expected. Quick mode shrinks sample sizes and widens tolerances.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{
    chord_index, chord_radius, cycles_to_resolve, hitting_bound, hitting_time, is_periodic_start,
    monotone_pairs_check, closed_form_stall_alpha, predicted_stop_cycle, semicircle_check,
    simulated_stop_cycle, stall_start, triangle_region, HITTING_SLOPE_BOUND,
};
use crate::point::Point;
use crate::radial::{
    identity_residual_d3, kernel, kernel_row_integral, lyapunov_check, mc_invariant,
    radial_step, sample_first_coord, solve_stationary, stationary_mean, McConfig, SolverConfig,
};
use crate::sources::DirectionSource;
use crate::stats::ks_two_sample;
use crate::walk::{greedy_step, simulate, Step, TiePolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Group {
    Radial,
    Vdc,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Radial => "radial",
            Group::Vdc => "vdc",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub quick: bool,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { quick: false, seed: 20_240_601 }
    }
}

impl SuiteOptions {
    fn pick<T>(&self, full: T, quick: T) -> T {
        if self.quick {
            quick
        } else {
            full
        }
    }
}

/// What a criterion measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub passed: bool,
    pub measured: String,
    pub expected: String,
    pub details: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: String,
    pub group: Group,
    pub title: String,
    pub passed: bool,
    pub measured: String,
    pub expected: String,
    pub details: Vec<String>,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} {:<28} measured: {} | expected: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.measured,
            self.expected
        )
    }
}

pub struct Criterion {
    pub id: &'static str,
    pub group: Group,
    pub title: &'static str,
    run: fn(&SuiteOptions) -> Result<Outcome>,
}

impl Criterion {
    pub fn run(&self, opts: &SuiteOptions) -> CriterionResult {
        let t = Instant::now();
        let out = (self.run)(opts).unwrap_or_else(|e| Outcome {
            passed: false,
            measured: format!("error: {e}"),
            expected: String::new(),
            details: Vec::new(),
        });
        CriterionResult {
            id: self.id.to_string(),
            group: self.group,
            title: self.title.to_string(),
            passed: out.passed,
            measured: out.measured,
            expected: out.expected,
            details: out.details,
            seconds: t.elapsed().as_secs_f64(),
        }
    }
}

pub fn criteria() -> &'static [Criterion] {
    &CRITERIA
}

static CRITERIA: [Criterion; 13] = [
    Criterion { id: "stationary-mean", group: Group::Radial, title: "Stationary mean, closed form vs Monte Carlo", run: stationary_mean_mc },
    Criterion { id: "asymptotic-slope", group: Group::Radial, title: "Mean over sqrt(d) at d = 64", run: asymptotic_slope },
    Criterion { id: "kernel-normalization", group: Group::Radial, title: "Kernel rows integrate to one", run: kernel_normalization },
    Criterion { id: "fixed-point-solver", group: Group::Radial, title: "Fixed-point solver in dimension 3", run: fixed_point_solver },
    Criterion { id: "representation-equivalence", group: Group::Radial, title: "Full walk vs radial chain, one step", run: representation_equivalence },
    Criterion { id: "lyapunov", group: Group::Radial, title: "Exponential drift inequality", run: lyapunov_grid },
    Criterion { id: "base2-periodicity", group: Group::Vdc, title: "Base 2 starts in the unit ball are periodic", run: base2_periodicity },
    Criterion { id: "base2-hitting", group: Group::Vdc, title: "Base 2 hitting time of B(0, sqrt 2)", run: base2_hitting },
    Criterion { id: "base2-pairs", group: Group::Vdc, title: "Base 2 pair monotonicity", run: base2_pairs },
    Criterion { id: "odd-base-regions", group: Group::Vdc, title: "Periodic triangles of odd bases", run: odd_base_regions },
    Criterion { id: "even-base", group: Group::Vdc, title: "Even bases: no periodic starts, stop cycles", run: even_base },
    Criterion { id: "stall-construction", group: Group::Vdc, title: "Base 2 stalling starts", run: stall_construction },
    Criterion { id: "exponential-tail", group: Group::Radial, title: "Tail beyond mean + 5 in dimension 3", run: exponential_tail },
];

/// Criteria whose id or group is in `filter`; all of them when it is empty.
pub fn select(filter: &[String]) -> Vec<&'static Criterion> {
    CRITERIA
        .iter()
        .filter(|c| {
            filter.is_empty()
                || filter
                    .iter()
                    .any(|f| f == c.id || f.eq_ignore_ascii_case(&c.group.to_string()))
        })
        .collect()
}

pub fn find(id: &str) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id)
}

pub fn run_suite(filter: &[String], opts: &SuiteOptions) -> Vec<CriterionResult> {
    select(filter).into_iter().map(|c| c.run(opts)).collect()
}

fn rng(opts: &SuiteOptions, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(opts.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn uniform_disc(rng: &mut ChaCha8Rng, r_lo: f64, r_hi: f64) -> Point {
    let r = (rng.random_range(r_lo * r_lo..r_hi * r_hi) as f64).sqrt();
    let a = rng.random_range(0.0..TAU);
    Point::xy(r * a.cos(), r * a.sin())
}

fn stationary_mean_mc(opts: &SuiteOptions) -> Result<Outcome> {
    let samples = opts.pick(1_000_000, 100_000);
    let tol = opts.pick(0.01, 0.03);
    let mut details = Vec::new();
    let mut passed = true;
    let mut worst: f64 = 0.0;
    for (i, d) in [2usize, 3, 4, 8].into_iter().enumerate() {
        let t = Instant::now();
        let mut cfg = McConfig::new(d, 0, opts.seed + i as u64);
        cfg.n_steps = samples + cfg.burn_in;
        let h = mc_invariant(&cfg)?;
        let exact = stationary_mean(d)?;
        let err = (h.mean - exact).abs();
        let secs = t.elapsed().as_secs_f64();
        worst = worst.max(err);
        passed &= err <= tol && secs <= 60.0;
        details.push(format!("d={d}: mc {:.5} exact {:.5} |diff| {:.2e} in {secs:.2}s", h.mean, exact, err));
    }
    Ok(Outcome {
        passed,
        measured: format!("max |mc - exact| = {worst:.2e}"),
        expected: format!("<= {tol}, <= 60 s per d"),
        details,
    })
}

fn asymptotic_slope(opts: &SuiteOptions) -> Result<Outcome> {
    let target = (PI / 8.0).sqrt();
    let closed = stationary_mean(64)? / 8.0;
    let mut cfg = McConfig::new(64, 0, opts.seed);
    cfg.n_steps = opts.pick(1_000_000, 100_000) + cfg.burn_in;
    let mc = mc_invariant(&cfg)?.mean / 8.0;
    let (ec, em) = ((closed / target - 1.0).abs(), (mc / target - 1.0).abs());
    Ok(Outcome {
        passed: ec <= 0.03 && em <= 0.05,
        measured: format!("closed {closed:.5} ({:.2}%), mc {mc:.5} ({:.2}%)", 100.0 * ec, 100.0 * em),
        expected: format!("within 3% / 5% of {target:.5}"),
        details: Vec::new(),
    })
}

fn kernel_normalization(opts: &SuiteOptions) -> Result<Outcome> {
    let n_x = opts.pick(50, 10);
    let mut worst: f64 = 0.0;
    for d in 2..=10 {
        for i in 0..n_x {
            let x = 0.1 + (20.0 - 0.1) * i as f64 / (n_x - 1) as f64;
            worst = worst.max((kernel_row_integral(d, x)?.value - 1.0).abs());
        }
    }
    let mut worst3: f64 = 0.0;
    for i in 0..40 {
        let x = 0.05 + 0.5 * i as f64;
        let (lo, hi) = ((1.0 - x).abs(), (x * x + 1.0).sqrt());
        for j in 1..20 {
            let y = lo + (hi - lo) * j as f64 / 20.0;
            worst3 = worst3.max((kernel(3, x, y)? - y / x).abs() / (y / x));
        }
    }
    Ok(Outcome {
        passed: worst <= 1e-6 && worst3 <= 1e-12,
        measured: format!("max |row - 1| = {worst:.2e}; d=3 max rel |P - y/x| = {worst3:.1e}"),
        expected: "<= 1e-6; d=3 kernel equals y/x".into(),
        details: Vec::new(),
    })
}

fn fixed_point_solver(opts: &SuiteOptions) -> Result<Outcome> {
    let mut cfg = SolverConfig::new(3);
    cfg.grid.n_nodes = opts.pick(2000, 500);
    let t = Instant::now();
    let g = solve_stationary(&cfg)?;
    let secs = t.elapsed().as_secs_f64();
    let h = g.nodes[1] - g.nodes[0];
    // The iteration tolerance bounds the fixed-point error; the identity
    // itself is only met to the interpolation order of the grid.
    let tol = cfg.tol.max(h * h);
    let pts = identity_residual_d3(&g, 1.0, 5.0)?;
    let resid = pts.iter().map(|p| (p.lhs - p.rhs).abs()).fold(0.0, f64::max);
    let mean_err = (g.mean() - 1.0).abs();
    Ok(Outcome {
        passed: resid <= tol && mean_err <= 5e-3 && g.iterations <= 500 && secs <= 120.0,
        measured: format!(
            "identity residual {resid:.2e}, mean {:.7}, {} iterations, {secs:.2}s",
            g.mean(),
            g.iterations
        ),
        expected: format!("residual <= {tol:.2e}, |mean - 1| <= 5e-3, <= 500 iterations, <= 120 s"),
        details: vec![format!(
            "eigenvalue {:.9}, tail mass {:.2e}, grid step {h:.3e}",
            g.eigenvalue, g.tail_mass
        )],
    })
}

fn representation_equivalence(opts: &SuiteOptions) -> Result<Outcome> {
    let d = 4;
    let n = opts.pick(100_000, 20_000);
    let r = stationary_mean(d)?;
    let mut x = vec![0.0; d];
    x[0] = r;
    let x = Point::new(x)?;
    let mut src = DirectionSource::sphere(d, opts.seed ^ 0xA5A5)?;
    let mut full = Vec::with_capacity(n);
    for _ in 0..n {
        let v = src.next_direction();
        match greedy_step(&x, &v, &TiePolicy::choose_plus())? {
            Step::Moved(o) => full.push(o.next.norm()),
            Step::Indeterminate { .. } => unreachable!("choose-plus never halts"),
        }
    }
    let mut g = rng(opts, 5);
    let mut radial: Vec<f64> = (0..n).map(|_| radial_step(r, sample_first_coord(d, &mut g))).collect();
    let ks = ks_two_sample(&mut full, &mut radial);
    Ok(Outcome {
        passed: !ks.rejects(),
        measured: format!("D = {:.5}", ks.statistic),
        expected: format!("< {:.5} (1% critical value)", ks.critical_1pct),
        details: Vec::new(),
    })
}

fn lyapunov_grid(opts: &SuiteOptions) -> Result<Outcome> {
    let trials = opts.pick(100_000, 10_000);
    let mut details = Vec::new();
    let mut failed = 0;
    let mut seed = opts.seed;
    for d in [3usize, 5] {
        for r in [5.0, 10.0, 20.0] {
            for alpha in [0.1, 0.5] {
                seed += 1;
                let rep = lyapunov_check(d, r, alpha, trials, seed)?;
                failed += usize::from(!rep.passed());
                details.push(format!(
                    "d={d} r={r} alpha={alpha}: {:.4e} (+-{:.1e}) vs bound {:.4e}, exact {:.4e}, {:?}",
                    rep.estimate, rep.standard_error, rep.bound, rep.exact, rep.verdict
                ));
            }
        }
    }
    Ok(Outcome {
        passed: failed == 0,
        measured: format!("{failed} of 12 grid points fail"),
        expected: "0 failures".into(),
        details,
    })
}

fn base2_periodicity(opts: &SuiteOptions) -> Result<Outcome> {
    let n = opts.pick(1000, 100);
    let mut g = rng(opts, 7);
    let (mut not_periodic, mut semicircle_fail) = (0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let z = loop {
            let p = uniform_disc(&mut g, 0.0, 1.0);
            if p.norm() > 0.0 {
                break p;
            }
        };
        let rep = is_periodic_start(&z, 2, 100, 1e-9)?;
        worst = worst.max(rep.max_return_error);
        not_periodic += usize::from(!rep.is_periodic);
        let mut src = DirectionSource::vdc(2)?;
        let traj = simulate(&z, &mut src, 200, TiePolicy::halt())?;
        semicircle_fail += usize::from(!semicircle_check(&traj, 1e-9).map(|s| s.passed).unwrap_or(false));
    }
    Ok(Outcome {
        passed: not_periodic == 0 && semicircle_fail == 0 && worst <= 1e-9,
        measured: format!("{not_periodic} not periodic, {semicircle_fail} semicircle failures, max return error {worst:.1e}"),
        expected: format!("all {n} periodic over 100 cycles, error <= 1e-9"),
        details: Vec::new(),
    })
}

fn base2_hitting(opts: &SuiteOptions) -> Result<Outcome> {
    let n = opts.pick(200, 50);
    let mut g = rng(opts, 8);
    let mut pts = Vec::with_capacity(n);
    let mut over = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut misses = 0;
    for _ in 0..n {
        let r = g.random_range(5.0..100.0);
        let a = g.random_range(0.0..TAU);
        let z = Point::xy(r * a.cos(), r * a.sin());
        let bound = hitting_bound(&z);
        match hitting_time(&z, 2, SQRT_2, 10 * bound as u64)?.steps() {
            Some(s) => {
                let s = s as f64;
                over += usize::from(s > bound);
                worst_ratio = worst_ratio.max(s / bound);
                pts.push((r, s));
            }
            None => misses += 1,
        }
    }
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / m, b + p.1 / m));
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(Outcome {
        passed: over == 0 && misses == 0 && slope <= HITTING_SLOPE_BOUND,
        measured: format!("{over} over bound, {misses} unresolved, max steps/bound {worst_ratio:.3}, slope {slope:.3}"),
        expected: format!("all within 8(|z|-2)+8, slope <= {HITTING_SLOPE_BOUND:.3}"),
        details: Vec::new(),
    })
}

fn base2_pairs(opts: &SuiteOptions) -> Result<Outcome> {
    let steps = opts.pick(1_000_000, 100_000);
    let mut g = rng(opts, 9);
    let mut violations = 0;
    let mut halted = 0;
    for _ in 0..20 {
        let z = uniform_disc(&mut g, 0.0, 50.0);
        let mut src = DirectionSource::vdc(2)?;
        let traj = simulate(&z, &mut src, steps, TiePolicy::halt())?;
        halted += usize::from(traj.halted());
        violations += monotone_pairs_check(&traj, 1e-9)?.len();
    }
    Ok(Outcome {
        passed: violations == 0,
        measured: format!("{violations} violations over 20 runs of {steps} steps ({halted} halted)"),
        expected: "0 violations".into(),
        details: Vec::new(),
    })
}

fn odd_base_regions(opts: &SuiteOptions) -> Result<Outcome> {
    let n = opts.pick(1000, 100);
    let mut g = rng(opts, 10);
    let mut passed = true;
    let mut details = Vec::new();
    for b in [5u64, 7, 9] {
        let (t1, t2) = triangle_region(b)?;
        let mut inside_fail = 0;
        for i in 0..n {
            let t = if i % 2 == 0 { &t1 } else { &t2 };
            let p = t.sample(g.random(), g.random());
            inside_fail += usize::from(!is_periodic_start(&p, b, 100, 1e-9)?.is_periodic);
        }
        let half = t1
            .vertices
            .iter()
            .map(|v| v.x().abs().max(v.y().abs()))
            .fold(0.0, f64::max)
            + 0.5;
        let cycles = cycles_to_resolve(b, 0.01);
        let (mut outside_pass, mut drawn) = (0, 0);
        while drawn < n {
            let p = Point::xy(g.random_range(-half..half), g.random_range(-half..half));
            if t1.distance(&p).min(t2.distance(&p)) < 0.01 {
                continue;
            }
            drawn += 1;
            outside_pass += usize::from(is_periodic_start(&p, b, cycles, 1e-9)?.is_periodic);
        }
        // Chord radii along a periodic run from the centroid.
        let z = t1.centroid();
        let mut src = DirectionSource::vdc(b)?;
        let traj = simulate(&z, &mut src, 10 * b, TiePolicy::halt())?;
        let mut chord_err: f64 = 0.0;
        for k in 0..traj.len() {
            let j = chord_index(b, traj.label(k));
            let p = traj.state(k).expect("full storage");
            chord_err = chord_err.max((p.distance(&z) - chord_radius(b, j)?).abs());
        }
        passed &= inside_fail == 0 && outside_pass == 0 && chord_err <= 1e-9;
        details.push(format!(
            "b={b}: {inside_fail}/{n} inside not periodic; {outside_pass}/{n} outside periodic over {cycles} cycles; chord error {chord_err:.1e}"
        ));
    }
    Ok(Outcome {
        passed,
        measured: details.join("; "),
        expected: "inside all periodic, outside none, chord error <= 1e-9".into(),
        details,
    })
}

fn even_base(opts: &SuiteOptions) -> Result<Outcome> {
    let n = opts.pick(100_000, 10_000);
    let mut g = rng(opts, 11);
    let mut details = Vec::new();
    let mut survivors_total = 0;
    let mut unbroken = 0;
    for b in [4u64, 6, 8] {
        let mut survivors = 0;
        let mut latest = 0;
        for _ in 0..n {
            let p = Point::xy(g.random_range(-3.0..3.0), g.random_range(-3.0..3.0));
            if is_periodic_start(&p, b, 50, 1e-9)?.is_periodic {
                survivors += 1;
                match is_periodic_start(&p, b, 1_000_000, 1e-9)?.violation {
                    Some(v) => latest = latest.max(v.step / b),
                    None => unbroken += 1,
                }
            }
        }
        survivors_total += survivors;
        details.push(format!(
            "b={b}: {survivors}/{n} starts in [-3,3]^2 still periodic after 50 cycles; the last of them breaks in cycle {latest}"
        ));
    }
    let mut stop_mismatch = 0;
    for eps in [0.2, 0.05, 0.01] {
        let pred = predicted_stop_cycle(8, eps)?;
        let sim = simulated_stop_cycle(8, eps, 1_000_000, 1e-9)?;
        stop_mismatch += usize::from(sim != Some(pred.k));
        details.push(format!(
            "b=8 eps={eps}: predicted k={} (budget {} = {} in base 8), simulated {:?}",
            pred.k, pred.step_budget, pred.step_budget_base_b, sim
        ));
    }
    Ok(Outcome {
        passed: survivors_total == 0 && unbroken == 0 && stop_mismatch == 0,
        measured: format!(
            "{survivors_total} starts periodic at 50 cycles ({unbroken} never break within 1e6 cycles); {stop_mismatch} stop-cycle mismatches"
        ),
        expected: "no periodic start at 50 cycles; stop cycles match".into(),
        details,
    })
}

fn stall_construction(_opts: &SuiteOptions) -> Result<Outcome> {
    let mut details = Vec::new();
    let mut ok = true;
    for n in [4u64, 16, 64] {
        let s = stall_start(n)?;
        ok &= s.verified;
        details.push(format!(
            "n={n}: |z| = {:.6}, returns along the ray below {:.6}, closed form {:.6}, verified {}",
            s.start.norm(),
            s.alpha_exact,
            s.alpha_closed_form,
            s.verified
        ));
    }
    let alphas: Vec<f64> = (2..=20).map(closed_form_stall_alpha).collect();
    let decreasing = alphas.windows(2).all(|w| w[1] < w[0]);
    let last = alphas[alphas.len() - 1];
    ok &= decreasing && last > 1.0 && last - 1.0 < 1e-6;
    Ok(Outcome {
        passed: ok,
        measured: format!("constructions verified: {}; alpha decreasing: {decreasing}, alpha(k=20) - 1 = {:.1e}", ok, last - 1.0),
        expected: "z_{2i-1} = z_{-1} for i <= n; alpha decreasing to 1".into(),
        details,
    })
}

fn exponential_tail(opts: &SuiteOptions) -> Result<Outcome> {
    let mut cfg = McConfig::new(3, 0, opts.seed ^ 0x7A11);
    cfg.n_steps = opts.pick(1_000_000, 100_000) + cfg.burn_in;
    let h = mc_invariant(&cfg)?;
    let f = h.tail_fraction();
    Ok(Outcome {
        passed: f < 1e-4,
        measured: format!("fraction {f:.2e} ({} of {} beyond {:.3}), max r {:.3}", h.tail_count, h.n_samples, h.tail_threshold, h.max_r),
        expected: "< 1e-4".into(),
        details: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique_and_selectable() {
        let ids: std::collections::HashSet<&str> = criteria().iter().map(|c| c.id).collect();
        assert_eq!(ids.len(), criteria().len());
        assert_eq!(select(&[]).len(), 13);
        let radial = select(&["radial".into()]);
        assert!(radial.iter().all(|c| c.group == Group::Radial));
        assert_eq!(radial.len(), 7);
        assert_eq!(select(&["base2-pairs".into()]).len(), 1);
        assert!(select(&["nothing".into()]).is_empty());
    }

    #[test]
    fn quick_stall_line() {
        let r = find("stall-construction").unwrap().run(&SuiteOptions { quick: true, seed: 1 });
        assert!(r.passed, "{}", r.line());
        assert!(r.line().starts_with("PASS stall-construction"));
    }
}
