//! Alternating optimisation over slave position, master altitude and resources,
//! with a damped velocity update, the step-size search and the benchmark schemes.
//!
//! ```no_run
//! use insar_plan::ao::{init_f1, run_scheme, Scheme};
//! use insar_plan::scenario::Scenario;
//!
//! let sc = Scenario::default().desk_scale();
//! let sol = run_scheme(&sc, Scheme::Proposed, 0.4, &init_f1(&sc), 1).unwrap();
//! println!("coverage {:.1} m^2 after {} iterations", sol.coverage, sol.iterations);
//! ```

use std::fmt;

use rayon::prelude::*;

use crate::constraints::{ConstraintReport, DecisionState, Model};
use crate::error::{PlanError, Result};
use crate::geometry::{baseline_components, slant_range, Formation, Pointing, Pos};
use crate::monotonic::{polyblock_solve, transform_p1b};
use crate::pso::run_pso;
use crate::sca::{power_fill, run_sca};
use crate::scenario::{db_to_linear, Scenario};

/// Velocity of the fixed-speed benchmark, m/s.
pub const STEADY_SPEED: f64 = 4.0;
/// Antenna look angle of the fixed-look-angle benchmark, rad.
pub const FIXED_LOOK: f64 = std::f64::consts::FRAC_PI_4;
/// Outer iterations without coverage gain that end a run.
pub const NO_PROGRESS_LIMIT: usize = 3;
/// Velocity factor applied after each infeasible outer iteration.
pub const SLOW_DOWN: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Damped alternating optimisation.
    Proposed,
    /// Benchmark 1: undamped updates.
    ClassicalAo,
    /// Benchmark 2: velocity frozen at [`STEADY_SPEED`].
    FixedSpeed,
    /// Benchmark 3: slave antenna pinned to [`FIXED_LOOK`].
    FixedLookAngle,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::ClassicalAo, Scheme::FixedSpeed, Scheme::FixedLookAngle];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::ClassicalAo => "benchmark1",
            Scheme::FixedSpeed => "benchmark2",
            Scheme::FixedLookAngle => "benchmark3",
        }
    }

    /// Benchmark number, `None` for the proposed scheme.
    pub fn from_benchmark(k: Option<u8>) -> Option<Scheme> {
        match k {
            None => Some(Scheme::Proposed),
            Some(1) => Some(Scheme::ClassicalAo),
            Some(2) => Some(Scheme::FixedSpeed),
            Some(3) => Some(Scheme::FixedLookAngle),
            Some(_) => None,
        }
    }

    /// Whether the step size is a free parameter of the scheme.
    pub fn uses_psi(self) -> bool {
        matches!(self, Scheme::Proposed | Scheme::FixedLookAngle)
    }

    pub fn model(self, sc: &Scenario) -> Result<Model> {
        match self {
            Scheme::FixedLookAngle => Model::with_pointing(sc.clone(), Pointing::Fixed(FIXED_LOOK)),
            _ => Model::new(sc.clone()),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Relative coverage change fell below the tolerance.
    Converged,
    /// Several iterations passed without coverage gain.
    Stalled,
    IterationCap,
}

/// Metrics of a plan, recomputed from the decision variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Audit {
    pub coverage: f64,
    pub swath: f64,
    pub b: f64,
    pub b_perp: f64,
    pub h_amb: f64,
    pub dh_90: f64,
    pub theta_2: f64,
    pub mean_velocity: f64,
    pub energy: [f64; 2],
    pub gamma_snr_worst: f64,
    pub gamma_rg: f64,
}

impl Audit {
    pub fn new(model: &Model, s: &DecisionState) -> Result<Self> {
        let f = &s.formation;
        let t2 = model.theta_2(&f.q2)?;
        let bl = baseline_components(f, model.sc.theta_1);
        let slopes = model.snr_slopes(f, t2);
        let v_peak = s.v.iter().cloned().fold(0.0, f64::max);
        Ok(Audit {
            coverage: model.coverage(f, &s.v)?,
            swath: model.swath(f)?,
            b: bl.b,
            b_perp: bl.b_perp,
            h_amb: model.h_amb(f),
            dh_90: model.dh_worst(f),
            theta_2: t2,
            mean_velocity: s.v[..s.v.len() - 1].iter().sum::<f64>() / (s.v.len() - 1) as f64,
            energy: [model.energy(0, &s.v, &s.p_com[0]), model.energy(1, &s.v, &s.p_com[1])],
            gamma_snr_worst: model.gamma_snr(slopes, v_peak),
            gamma_rg: model.gamma_rg(t2),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub scheme: Scheme,
    pub psi: f64,
    pub state: DecisionState,
    pub coverage: f64,
    /// Coverage after every outer iteration, from the first feasible one.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub status: Status,
    pub report: ConstraintReport,
    pub audit: Audit,
}

/// Initial point F1: `q1 = (-40, 60)`, `q2 = (-45, 50)`, 7.78 dB power, 4 m/s.
pub fn init_f1(sc: &Scenario) -> DecisionState {
    let f = Formation::new(Pos::new(-40.0, 60.0), Pos::new(-45.0, 50.0));
    DecisionState::uniform(f, sc.n_slots, 4.0, db_to_linear(7.78))
}

/// Initial point F2: `q1 = (-20, 40)`, `q2 = (-30, 40)`, otherwise as F1.
pub fn init_f2(sc: &Scenario) -> DecisionState {
    let f = Formation::new(Pos::new(-20.0, 40.0), Pos::new(-30.0, 40.0));
    DecisionState::uniform(f, sc.n_slots, 4.0, db_to_linear(7.78))
}

fn iteration_seed(seed: u64, m: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(m as u64)
}

fn coverage_of(model: &Model, s: &DecisionState) -> f64 {
    model.coverage(&s.formation, &s.v).unwrap_or(0.0)
}

/// Runs one scheme from `init`. Fails when no iterate ever satisfies every constraint.
pub fn run_scheme(sc: &Scenario, scheme: Scheme, psi: f64, init: &DecisionState, seed: u64) -> Result<Solution> {
    let model = scheme.model(sc)?;
    let psi = match scheme {
        Scheme::ClassicalAo => 1.0,
        Scheme::FixedSpeed => 0.0,
        _ => psi,
    };
    let mut init = init.clone();
    if scheme == Scheme::FixedSpeed {
        init.v.iter_mut().for_each(|v| *v = STEADY_SPEED);
    }
    run_ao_inner(&model, scheme, psi, &init, seed)
}

/// Damped alternating optimisation on `model` with step size `psi`.
pub fn run_ao(model: &Model, psi: f64, init: &DecisionState, seed: u64) -> Result<Solution> {
    run_ao_inner(model, Scheme::Proposed, psi, init, seed)
}

fn run_ao_inner(model: &Model, scheme: Scheme, psi: f64, init: &DecisionState, seed: u64) -> Result<Solution> {
    if !(0.0..=1.0).contains(&psi) {
        return Err(PlanError::Invalid { key: "psi".into(), msg: format!("{psi} is outside [0, 1]") });
    }
    if init.v.len() != model.n() {
        return Err(PlanError::Invalid { key: "n_slots".into(), msg: "initial point has the wrong slot count".into() });
    }
    let a = &model.sc.algo;
    let mut s = init.clone();
    let mut feasible = model.evaluate(&s).all_satisfied();
    let mut history = Vec::new();
    if feasible {
        history.push(coverage_of(model, &s));
    }
    let mut stall = 0;
    let mut status = Status::IterationCap;
    let mut m = 0;
    while m < a.ao_max_iterations {
        m += 1;
        let before = if feasible { coverage_of(model, &s) } else { f64::NEG_INFINITY };
        if !feasible && m > 1 && scheme != Scheme::FixedSpeed {
            slow_down(model, &mut s);
        }
        slave_step(model, &mut s, feasible, iteration_seed(seed, m));
        master_step(model, &mut s, feasible);
        if scheme == Scheme::FixedSpeed {
            if let Ok(p) = power_fill(model, &s.formation, &s.v) {
                s.p_com = p.p_com;
            }
        } else {
            resource_step(model, &mut s, psi);
        }

        let now_ok = model.evaluate(&s).all_satisfied();
        if !now_ok {
            log::debug!("iteration {m}: still infeasible, violated {:?} at {:?}", model.evaluate(&s).violated(), s.formation);
            continue;
        }
        let c = coverage_of(model, &s);
        history.push(c);
        if !feasible {
            feasible = true;
            continue;
        }
        let gain = c - before;
        if gain.abs() <= a.eps[3] * before.abs().max(1e-12) {
            status = Status::Converged;
            break;
        }
        if gain <= 0.0 {
            stall += 1;
            if stall >= NO_PROGRESS_LIMIT {
                status = Status::Stalled;
                break;
            }
        } else {
            stall = 0;
        }
    }
    if !feasible {
        return Err(PlanError::Infeasible(format!(
            "{scheme}: no feasible plan after {m} iterations"
        )));
    }
    let report = model.evaluate(&s);
    let audit = Audit::new(model, &s)?;
    Ok(Solution {
        scheme,
        psi,
        coverage: audit.coverage,
        state: s,
        history,
        iterations: m,
        status,
        report,
        audit,
    })
}

/// Scales the velocity back (down to `v_min`) so the geometry blocks can reach feasibility.
fn slow_down(model: &Model, s: &mut DecisionState) {
    let v: Vec<f64> = s.v.iter().map(|&v| (SLOW_DOWN * v).max(model.sc.v_min)).collect();
    if let Ok(p) = power_fill(model, &s.formation, &v) {
        s.p_com = p.p_com;
    }
    s.v = v;
}

fn slave_step(model: &Model, s: &mut DecisionState, feasible: bool, seed: u64) {
    let ctx = model.slave_context(s.formation.q1, &s.v, &s.p_com[1]);
    let res = run_pso(model, &ctx, seed, Some(s.formation.q2));
    if res.feasible() || !feasible {
        let trial = DecisionState { formation: Formation::new(s.formation.q1, res.q2), ..s.clone() };
        if !feasible || model.evaluate(&trial).all_satisfied() {
            *s = trial;
        }
    }
}

fn master_step(model: &Model, s: &mut DecisionState, feasible: bool) {
    let sol = transform_p1b(model, s.formation.q2, &s.v, &s.p_com[0]).and_then(|p| polyblock_solve(&p, model.sc.algo.eps[0]));
    match sol {
        Ok(p) => {
            let trial = DecisionState { formation: Formation::new(p.q1, s.formation.q2), ..s.clone() };
            if !feasible || coverage_of(model, &trial) >= coverage_of(model, s) {
                *s = trial;
            }
        }
        Err(e) => log::debug!("master altitude kept: {e}"),
    }
}

fn resource_step(model: &Model, s: &mut DecisionState, psi: f64) {
    let f = s.formation;
    let res = match run_sca(model, &f, &s.v) {
        Ok(r) => r,
        Err(e) => {
            log::debug!("resources kept: {e}");
            return;
        }
    };
    let prev_ok = model.resources_feasible(s);
    let prev_track = crate::geometry::track_length(&s.v, model.sc.delta_t);
    let sca_track = crate::geometry::track_length(&res.v, model.sc.delta_t);
    let blend: Vec<f64> = s.v.iter().zip(&res.v).map(|(p, q)| p + psi * (q - p)).collect();
    let mut next = DecisionState { formation: f, v: res.v.clone(), p_com: res.power.p_com.clone() };
    if let Ok(p) = power_fill(model, &f, &blend) {
        let trial = DecisionState { formation: f, v: blend, p_com: p.p_com };
        if model.resources_feasible(&trial) {
            next = trial;
        }
    }
    if prev_ok && sca_track < prev_track {
        // the refined profile lost distance; keep the incoming one
        if let Ok(p) = power_fill(model, &f, &s.v) {
            s.p_com = p.p_com;
        }
        return;
    }
    *s = next;
}

/// Step-size search result.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiSearch {
    pub psi: f64,
    pub mean_coverage: f64,
    /// `(psi, mean coverage)` over the whole grid.
    pub grid: Vec<(f64, f64)>,
}

/// Grid `{0, eps_5, 2 eps_5, ..., 1}`.
pub fn psi_grid(eps_5: f64) -> Vec<f64> {
    let k = (1.0 / eps_5).round() as usize;
    (0..=k).map(|i| (i as f64 * eps_5).min(1.0)).collect()
}

/// Mean coverage of a scheme over `seeds`, failed runs counting as zero.
pub fn mean_coverage(sc: &Scenario, scheme: Scheme, psi: f64, init: &DecisionState, seeds: &[u64]) -> f64 {
    let total: f64 = seeds
        .par_iter()
        .map(|&s| run_scheme(sc, scheme, psi, init, s).map_or(0.0, |r| r.coverage))
        .collect::<Vec<_>>()
        .iter()
        .sum();
    total / seeds.len() as f64
}

/// Exhaustive step-size search; ties go to the smaller step.
pub fn search_psi(sc: &Scenario, scheme: Scheme, init: &DecisionState, eps_5: f64, seeds: &[u64]) -> PsiSearch {
    let grid: Vec<(f64, f64)> = psi_grid(eps_5)
        .into_iter()
        .map(|psi| (psi, mean_coverage(sc, scheme, psi, init, seeds)))
        .collect();
    let mut best = grid[0];
    for &(psi, c) in &grid[1..] {
        if c > best.1 {
            best = (psi, c);
        }
    }
    PsiSearch { psi: best.0, mean_coverage: best.1, grid }
}

/// Slant ranges of master and slave, for reporting.
pub fn slant_ranges(model: &Model, s: &DecisionState) -> [f64; 2] {
    [slant_range(&s.formation.q1, model.sc.x_t), slant_range(&s.formation.q2, model.sc.x_t)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> Scenario {
        let mut sc = Scenario::default();
        sc.algo.pso_population = 40;
        sc.algo.pso_iterations = 15;
        sc
    }

    #[test]
    fn grid_has_expected_points() {
        assert_eq!(psi_grid(0.01).len(), 101);
        assert_eq!(psi_grid(0.05).len(), 21);
        assert_eq!(*psi_grid(0.05).last().unwrap(), 1.0);
    }

    #[test]
    fn run_is_feasible_monotone_and_repeatable() {
        let sc = quick();
        let a = run_scheme(&sc, Scheme::Proposed, 0.4, &init_f1(&sc), 5).unwrap();
        assert!(a.report.all_satisfied(), "{}", a.report);
        assert!(a.history.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{:?}", a.history);
        let b = run_scheme(&sc, Scheme::Proposed, 0.4, &init_f1(&sc), 5).unwrap();
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn frozen_variables_stay_frozen() {
        let sc = quick();
        if let Ok(s) = run_scheme(&sc, Scheme::FixedSpeed, 0.3, &init_f1(&sc), 2) {
            assert!(s.state.v.iter().all(|&v| v == STEADY_SPEED));
        }
        if let Ok(s) = run_scheme(&sc, Scheme::FixedLookAngle, 0.3, &init_f1(&sc), 2) {
            assert!((s.audit.theta_2 - FIXED_LOOK).abs() < 1e-9);
        }
    }
}
