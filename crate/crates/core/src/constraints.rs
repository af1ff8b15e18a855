//! Constraint evaluation (C1 to C15), violation penalties and the swarm fitness.
//!
//! [`Model`] bundles a validated scenario with the constants every optimiser needs,
//! including the 90% phase spread at the worst-case coherence.
//!
//! ```
//! use insar_plan::constraints::{DecisionState, Model};
//! use insar_plan::geometry::{Formation, Pos};
//! use insar_plan::scenario::Scenario;
//!
//! let model = Model::new(Scenario::default()).unwrap();
//! let f = Formation::new(Pos::new(-40.0, 60.0), Pos::new(-45.0, 50.0));
//! let state = DecisionState::uniform(f, 80, 4.0, 6.0);
//! let report = model.evaluate(&state);
//! assert!(report.check(2).satisfied);
//! ```

use std::fmt;

use crate::comms::{gs_distance, min_data_rate, throughput, total_energy, Propulsion};
use crate::error::{PlanError, Result};
use crate::geometry::{
    along_track, baseline_components, coverage, master_x_from_altitude, slant_range,
    slave_look_angle, track_length, usable_swath, Formation, Pointing, Pos,
};
use crate::insar::{
    baseline_decorrelation, delta_phi_90_cached, height_of_ambiguity, relative_height_error,
};
use crate::scenario::{Derived, Scenario};

/// Margins at or above `-MARGIN_TOL * scale` count as satisfied.
pub const MARGIN_TOL: f64 = 1e-9;

/// A scenario together with its derived constants and slave pointing rule.
#[derive(Debug, Clone)]
pub struct Model {
    pub sc: Scenario,
    pub derived: Derived,
    pub prop: Propulsion,
    pub pointing: Pointing,
    /// 90% phase spread at the worst-case coherence, rad.
    pub dphi_worst: f64,
}

/// Formation plus per-slot resources.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionState {
    pub formation: Formation,
    pub v: Vec<f64>,
    pub p_com: [Vec<f64>; 2],
}

impl DecisionState {
    /// Constant velocity and equal constant power on both links.
    pub fn uniform(formation: Formation, n: usize, v: f64, p_com: f64) -> Self {
        DecisionState {
            formation,
            v: vec![v; n],
            p_com: [vec![p_com; n], vec![p_com; n]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub satisfied: bool,
    /// Signed slack in the constraint's native unit; negative means violated.
    pub margin: f64,
}

/// Satisfaction and margin of C1 to C15.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub checks: [Check; 15],
    /// Why some quantities could not be evaluated, if any.
    pub cause: Option<String>,
}

impl ConstraintReport {
    /// Check for constraint `id` in 1..=15.
    pub fn check(&self, id: usize) -> Check {
        self.checks[id - 1]
    }

    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn violated(&self) -> Vec<usize> {
        (1..=15).filter(|&i| !self.check(i).satisfied).collect()
    }

    /// True when every margin is at least `-tol` (unscaled).
    pub fn within(&self, tol: f64) -> bool {
        self.checks.iter().all(|c| c.margin >= -tol)
    }
}

impl fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.checks.iter().enumerate() {
            let tag = if c.satisfied { "ok  " } else { "FAIL" };
            writeln!(f, "C{:<2} {tag} margin {:.6e}", i + 1, c.margin)?;
        }
        if let Some(cause) = &self.cause {
            writeln!(f, "cause: {cause}")?;
        }
        Ok(())
    }
}

fn check(margin: f64, scale: f64) -> Check {
    Check {
        satisfied: margin >= -MARGIN_TOL * scale.abs().max(1.0),
        margin,
    }
}

/// Violation magnitudes of the slave-placement sub-problem.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Penalties {
    pub g3: f64,
    pub g5: f64,
    pub g6: f64,
    pub g7: f64,
    pub g8: f64,
    pub g9: f64,
    pub g11: f64,
    pub g14: f64,
}

impl Penalties {
    pub fn sum(&self) -> f64 {
        self.g3 + self.g5 + self.g6 + self.g7 + self.g8 + self.g9 + self.g11 + self.g14
    }

    pub fn as_array(&self) -> [(u8, f64); 8] {
        [
            (3, self.g3),
            (5, self.g5),
            (6, self.g6),
            (7, self.g7),
            (8, self.g8),
            (9, self.g9),
            (11, self.g11),
            (14, self.g14),
        ]
    }
}

/// Everything the slave-placement sub-problem keeps fixed.
#[derive(Debug, Clone)]
pub struct SlaveContext {
    pub q1: Pos,
    pub v: Vec<f64>,
    pub p2: Vec<f64>,
    y: Vec<f64>,
    track: f64,
    r1: f64,
}

/// Outcome of scoring one slave candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlaveEval {
    pub coverage: f64,
    pub penalties: Penalties,
    pub feasible: bool,
}

/// Swarm fitness: coverage when feasible, otherwise the smallest coverage seen so
/// far minus the total violation.
pub fn fitness(e: &SlaveEval, min_coverage: f64) -> f64 {
    if e.feasible {
        e.coverage
    } else {
        min_coverage - e.penalties.sum()
    }
}

impl Model {
    pub fn new(sc: Scenario) -> Result<Self> {
        Self::with_pointing(sc, Pointing::Target)
    }

    pub fn with_pointing(sc: Scenario, pointing: Pointing) -> Result<Self> {
        sc.validate()?;
        let derived = sc.derived();
        let prop = Propulsion::new(&sc);
        let gamma = sc.gamma_snr_min * sc.gamma_rg_min * sc.gamma_other;
        let dphi_worst = if gamma >= 1.0 {
            0.0
        } else {
            delta_phi_90_cached(gamma, sc.n_l as u32)?
        };
        Ok(Model {
            sc,
            derived,
            prop,
            pointing,
            dphi_worst,
        })
    }

    pub fn n(&self) -> usize {
        self.sc.n_slots
    }

    pub fn gamma_worst(&self) -> f64 {
        self.sc.gamma_snr_min * self.sc.gamma_rg_min * self.sc.gamma_other
    }

    pub fn theta_2(&self, q2: &Pos) -> Result<f64> {
        crate::geometry::theta_2(q2, self.sc.x_t, self.pointing)
    }

    pub fn swath(&self, f: &Formation) -> Result<f64> {
        let t2 = self.theta_2(&f.q2)?;
        usable_swath(f, self.sc.theta_1, t2, self.sc.theta_3db)
    }

    pub fn coverage(&self, f: &Formation, v: &[f64]) -> Result<f64> {
        Ok(coverage(self.swath(f)?, v, self.sc.delta_t))
    }

    /// Master on its line of sight at altitude `z1`.
    pub fn master_at(&self, z1: f64) -> Pos {
        Pos::new(master_x_from_altitude(z1, self.sc.x_t, self.sc.theta_1), z1)
    }

    /// Inverse-SNR slopes `s_i` with `1/SNR_i = s_i v`.
    pub fn snr_slopes(&self, f: &Formation, theta_2: f64) -> [f64; 2] {
        let r1 = slant_range(&f.q1, self.sc.x_t);
        let r2 = slant_range(&f.q2, self.sc.x_t);
        [
            r1.powi(3) * self.sc.theta_1.sin() / self.derived.gamma_r[0],
            r2.powi(3) * theta_2.sin() / self.derived.gamma_r[1],
        ]
    }

    /// SNR decorrelation of the formation flying at `v`.
    pub fn gamma_snr(&self, s: [f64; 2], v: f64) -> f64 {
        1.0 / ((1.0 + s[0] * v) * (1.0 + s[1] * v)).sqrt()
    }

    /// Largest velocity at which the SNR decorrelation still meets its minimum.
    pub fn c6_root(&self, f: &Formation) -> Result<f64> {
        let t2 = self.theta_2(&f.q2)?;
        Ok(c6_root(self.snr_slopes(f, t2), self.sc.gamma_snr_min))
    }

    /// [`Model::c6_root`] clipped to `v_max`.
    pub fn c6_cap(&self, f: &Formation) -> Result<f64> {
        Ok(self.c6_root(f)?.min(self.sc.v_max))
    }

    pub fn gamma_rg(&self, theta_2: f64) -> f64 {
        baseline_decorrelation(theta_2, self.sc.theta_1, self.derived.b_p)
    }

    pub fn h_amb(&self, f: &Formation) -> f64 {
        let r1 = slant_range(&f.q1, self.sc.x_t);
        let bp = baseline_components(f, self.sc.theta_1).b_perp;
        height_of_ambiguity(self.sc.lambda, r1, self.sc.theta_1, bp)
    }

    /// Worst-case 90% relative height error.
    pub fn dh_worst(&self, f: &Formation) -> f64 {
        let h = self.h_amb(f);
        if h.is_infinite() {
            return f64::INFINITY;
        }
        relative_height_error(h, self.dphi_worst)
    }

    /// Raw data rates of master and slave.
    pub fn min_rates(&self, f: &Formation, theta_2: f64) -> Result<[f64; 2]> {
        Ok([
            min_data_rate(f.q1.z, self.sc.theta_1, &self.sc)?,
            min_data_rate(f.q2.z, theta_2, &self.sc)?,
        ])
    }

    pub fn energy(&self, i: usize, v: &[f64], p_com: &[f64]) -> f64 {
        total_energy(p_com, v, self.sc.p_t[i], self.sc.delta_t, &self.prop)
    }

    /// Evaluates C1 to C15.
    pub fn evaluate(&self, s: &DecisionState) -> ConstraintReport {
        let sc = &self.sc;
        let f = &s.formation;
        let (q1, q2) = (f.q1, f.q2);
        let mut cause = None;
        let bad = Check {
            satisfied: false,
            margin: f64::NEG_INFINITY,
        };
        let r1 = slant_range(&q1, sc.x_t);
        let r2 = slant_range(&q2, sc.x_t);
        let bl = baseline_components(f, sc.theta_1);

        let c1 = [q1.z - sc.z_min, sc.z_max - q1.z, q2.z - sc.z_min, sc.z_max - q2.z]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let c2 = -(q1.x - master_x_from_altitude(q1.z, sc.x_t, sc.theta_1)).abs();

        let theta_2 = self.theta_2(&q2);
        let (c6, c7, c11, c14, c15) = match &theta_2 {
            Ok(t2) => {
                let t2 = *t2;
                let s6 = self.snr_slopes(f, t2);
                let c6 = s
                    .v
                    .iter()
                    .map(|&v| self.gamma_snr(s6, v) - sc.gamma_snr_min)
                    .fold(f64::INFINITY, f64::min);
                let c7 = check(self.gamma_rg(t2) - sc.gamma_rg_min, 1.0);
                let c11 = match self.min_rates(f, t2) {
                    Ok(rates) => {
                        let y = along_track(&s.v, sc.delta_t);
                        let mut m = f64::INFINITY;
                        for (i, q) in [q1, q2].iter().enumerate() {
                            for (n, yn) in y.iter().enumerate() {
                                let d = gs_distance(q, *yn, sc.gs);
                                let r = throughput(s.p_com[i][n], d, sc.b_c[i], sc.beta_c[i]);
                                m = m.min(r - rates[i]);
                            }
                        }
                        check(m, rates[0].max(rates[1]))
                    }
                    Err(e) => {
                        cause = Some(e.to_string());
                        bad
                    }
                };
                let c14 = (t2 - sc.theta_min).min(sc.theta_max - t2);
                let expected = match self.pointing {
                    Pointing::Target => slave_look_angle(&q2, sc.x_t).unwrap_or(f64::NAN),
                    Pointing::Fixed(a) => a,
                };
                (check(c6, 1.0), c7, c11, check(c14, 1.0), check(-(t2 - expected).abs(), 1.0))
            }
            Err(e) => {
                cause = Some(e.to_string());
                (bad, bad, bad, bad, bad)
            }
        };

        let c8 = self.h_amb(f) - sc.h_amb_min;
        let c9 = sc.delta_h_max - self.dh_worst(f);
        let c10 = s
            .p_com
            .iter()
            .flatten()
            .map(|&p| p.min(sc.p_com_max - p))
            .fold(f64::INFINITY, f64::min);
        let e = [self.energy(0, &s.v, &s.p_com[0]), self.energy(1, &s.v, &s.p_com[1])];
        let c12 = (sc.e_max[0] - e[0]).min(sc.e_max[1] - e[1]);
        let c13 = s
            .v
            .iter()
            .map(|&v| (v - sc.v_min).min(sc.v_max - v))
            .fold(f64::INFINITY, f64::min);

        if let Err(err) = self.swath(f) {
            cause.get_or_insert_with(|| err.to_string());
        }

        ConstraintReport {
            checks: [
                check(c1, 1.0),
                check(c2, 1.0),
                check(r1 - r2, 1.0),
                check(sc.x_t - q2.x, 1.0),
                check(bl.b - sc.b_min, 1.0),
                c6,
                c7,
                check(c8, 1.0),
                check(c9, 1.0),
                check(c10, sc.p_com_max),
                c11,
                check(c12, sc.e_max[0].max(sc.e_max[1])),
                check(c13, 1.0),
                c14,
                c15,
            ],
            cause,
        }
    }

    /// Checks only the resource constraints C6, C10, C11, C12 and C13.
    pub fn resources_feasible(&self, s: &DecisionState) -> bool {
        let r = self.evaluate(s);
        [6, 10, 11, 12, 13].iter().all(|&i| r.check(i).satisfied)
    }

    pub fn slave_context(&self, q1: Pos, v: &[f64], p2: &[f64]) -> SlaveContext {
        SlaveContext {
            q1,
            v: v.to_vec(),
            p2: p2.to_vec(),
            y: along_track(v, self.sc.delta_t),
            track: track_length(v, self.sc.delta_t),
            r1: slant_range(&q1, self.sc.x_t),
        }
    }

    /// Coverage and penalties of slave candidate `q2`. Candidates whose geometry
    /// cannot be evaluated get zero coverage and infinite violation.
    pub fn eval_slave(&self, ctx: &SlaveContext, q2: Pos) -> SlaveEval {
        self.try_eval_slave(ctx, q2).unwrap_or(SlaveEval {
            coverage: 0.0,
            penalties: Penalties {
                g14: f64::INFINITY,
                ..Penalties::default()
            },
            feasible: false,
        })
    }

    fn try_eval_slave(&self, ctx: &SlaveContext, q2: Pos) -> Result<SlaveEval> {
        let sc = &self.sc;
        let f = Formation::new(ctx.q1, q2);
        let t2 = self.theta_2(&q2)?;
        let swath = usable_swath(&f, sc.theta_1, t2, sc.theta_3db)?;
        let r2 = slant_range(&q2, sc.x_t);
        let bl = baseline_components(&f, sc.theta_1);
        let s6 = self.snr_slopes(&f, t2);
        let r_min = min_data_rate(q2.z, t2, sc)?;
        let h = self.h_amb(&f);
        let dh = self.dh_worst(&f);

        let mut g = Penalties {
            g3: (r2 - ctx.r1).max(0.0),
            g5: (sc.b_min - bl.b).max(0.0),
            g7: (sc.gamma_rg_min - self.gamma_rg(t2)).max(0.0),
            g8: if h.is_infinite() { 0.0 } else { (sc.h_amb_min - h).max(0.0) },
            g9: (dh - sc.delta_h_max).max(0.0),
            g14: (sc.theta_min - t2).max(0.0) + (t2 - sc.theta_max).max(0.0),
            ..Penalties::default()
        };
        let mut c6_margin = f64::INFINITY;
        let mut c11_margin = f64::INFINITY;
        for n in 0..ctx.v.len() {
            let m6 = self.gamma_snr(s6, ctx.v[n]) - sc.gamma_snr_min;
            c6_margin = c6_margin.min(m6);
            g.g6 += (-m6).max(0.0);
            let d = gs_distance(&q2, ctx.y[n], sc.gs);
            let m11 = throughput(ctx.p2[n], d, sc.b_c[1], sc.beta_c[1]) - r_min;
            c11_margin = c11_margin.min(m11);
            g.g11 += (-m11).max(0.0);
        }
        let feasible = check(ctx.r1 - r2, 1.0).satisfied
            && check(bl.b - sc.b_min, 1.0).satisfied
            && check(c6_margin, 1.0).satisfied
            && check(self.gamma_rg(t2) - sc.gamma_rg_min, 1.0).satisfied
            && check(h - sc.h_amb_min, 1.0).satisfied
            && check(sc.delta_h_max - dh, 1.0).satisfied
            && check(c11_margin, r_min).satisfied
            && check((t2 - sc.theta_min).min(sc.theta_max - t2), 1.0).satisfied;
        Ok(SlaveEval {
            coverage: swath * ctx.track,
            penalties: g,
            feasible,
        })
    }

    /// True when `q2` lies inside the search box of C1 and C4.
    pub fn in_slave_box(&self, q2: &Pos) -> bool {
        q2.x <= self.sc.x_t && q2.z >= self.sc.z_min && q2.z <= self.sc.z_max
    }

    /// Fails with [`PlanError::Infeasible`] listing violated constraints.
    pub fn require_feasible(&self, s: &DecisionState) -> Result<ConstraintReport> {
        let r = self.evaluate(s);
        if r.all_satisfied() {
            Ok(r)
        } else {
            Err(PlanError::Infeasible(format!("violated constraints {:?}", r.violated())))
        }
    }
}

/// Positive root of `(1 + s1 v)(1 + s2 v) = gamma_min^-2`.
pub fn c6_root(s: [f64; 2], gamma_min: f64) -> f64 {
    let c = 1.0 / (gamma_min * gamma_min) - 1.0;
    let sum = s[0] + s[1];
    let disc = sum * sum + 4.0 * s[0] * s[1] * c;
    if sum == 0.0 {
        return f64::INFINITY;
    }
    2.0 * c / (sum + disc.sqrt())
}
