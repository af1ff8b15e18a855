//! Master altitude by monotonic optimisation: polyblock outer approximation over
//! the vertex `(z1, t)` with bisection projection onto the normal set.
//!
//! With the master pinned to its line of sight, coverage is non-decreasing in `z1`
//! and the data-rate constraint splits into two increasing functions `a1`, `a2`
//! of the altitude, linked by the auxiliary variable `t`.
//!
//! ```
//! use insar_plan::constraints::Model;
//! use insar_plan::geometry::Pos;
//! use insar_plan::monotonic::{polyblock_solve, transform_p1b};
//! use insar_plan::scenario::Scenario;
//!
//! let model = Model::new(Scenario::default()).unwrap();
//! let q2 = Pos::new(-30.0, 40.0);
//! let prob = transform_p1b(&model, q2, &vec![0.5; 80], &vec![8.0; 80]).unwrap();
//! let sol = polyblock_solve(&prob, 1e-4).unwrap();
//! assert!(sol.z1 >= prob.z_lo - 1e-9 && sol.z1 <= prob.z_hi + 1e-9);
//! ```

use crate::constraints::{DecisionState, Model};
use crate::error::{PlanError, Result};
use crate::geometry::{along_track, coverage, footprint, slant_range, slave_look_angle, Formation, Pos};

/// Constraints checked by the brute-force altitude search.
pub const MASTER_CONSTRAINTS: [usize; 7] = [1, 3, 5, 6, 8, 9, 11];

/// Monotonic reformulation of the master-altitude sub-problem.
#[derive(Debug, Clone)]
pub struct MonotonicProblem<'a> {
    pub model: &'a Model,
    pub q2: Pos,
    pub v: Vec<f64>,
    pub p1: Vec<f64>,
    /// Lower altitude bound from C1, C3, C5 and C8, m.
    pub z_lo: f64,
    /// Upper altitude bound from C1 and C9, m.
    pub z_hi: f64,
    /// Largest altitude allowed by C6 at the fastest slot, m.
    pub z_snr: f64,
    pub t_max: f64,
    a1_top: f64,
    /// `(y[n] - g_y)^2` per slot.
    dy2: Vec<f64>,
    /// `P_com,1[n] beta_c,1` per slot.
    pb: Vec<f64>,
    s2: f64,
    v_peak: f64,
    track: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyblockResult {
    pub q1: Pos,
    pub z1: f64,
    pub t: f64,
    pub coverage: f64,
    /// Current best value after every iteration.
    pub cbv: Vec<f64>,
    pub iterations: usize,
    /// False when the iteration cap stopped the search before the gap closed.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: [f64; 2],
    pub lambda: f64,
    pub iterations: usize,
}

/// Builds the monotonic problem for fixed slave position and resources.
pub fn transform_p1b<'a>(model: &'a Model, q2: Pos, v: &[f64], p1: &[f64]) -> Result<MonotonicProblem<'a>> {
    let sc = &model.sc;
    let th1 = sc.theta_1;
    let (c1, s1) = (th1.cos(), th1.sin());
    let t2 = model.theta_2(&q2)?;
    footprint(&q2, t2, sc.theta_3db)?;
    let r2 = slant_range(&q2, sc.x_t);
    let th2g = slave_look_angle(&q2, sc.x_t)?;
    let b_perp = r2 * (th1 - th2g).sin().abs();

    let mut r_lo = (sc.z_min / c1).max(r2).max(b_perp * sc.h_amb_min / (sc.lambda * s1));
    if b_perp < sc.b_min {
        r_lo = r_lo.max(r2 * (th1 - th2g).cos() + (sc.b_min * sc.b_min - b_perp * b_perp).sqrt());
    }
    let r_c9 = if model.dphi_worst > 0.0 {
        2.0 * std::f64::consts::PI * b_perp * sc.delta_h_max / (sc.lambda * s1 * model.dphi_worst)
    } else {
        f64::INFINITY
    };
    let z_lo = c1 * r_lo;
    let z_hi = c1 * (sc.z_max / c1).min(r_c9);
    if z_lo > z_hi {
        return Err(PlanError::Infeasible(format!(
            "altitude window empty: lower bound {z_lo:.4} m above upper bound {z_hi:.4} m"
        )));
    }

    let v_peak = v.iter().cloned().fold(0.0, f64::max);
    let s2 = r2.powi(3) * t2.sin() / model.derived.gamma_r[1];
    let room = 1.0 / (sc.gamma_snr_min * sc.gamma_snr_min) / (1.0 + s2 * v_peak) - 1.0;
    if room < 0.0 {
        return Err(PlanError::Infeasible("slave alone violates the SNR decorrelation floor".into()));
    }
    let k1 = s1 / (c1.powi(3) * model.derived.gamma_r[0]);
    let z_snr = if v_peak > 0.0 { (room / (k1 * v_peak)).cbrt() } else { f64::INFINITY };

    if z_snr < z_lo {
        return Err(PlanError::Infeasible(format!(
            "SNR ceiling {z_snr:.4} m below the lower altitude bound {z_lo:.4} m"
        )));
    }
    let y = along_track(v, sc.delta_t);
    let dy2 = y.iter().map(|yn| (yn - sc.gs[1]).powi(2)).collect();
    let pb = p1.iter().map(|p| p * sc.beta_c[0]).collect();
    let mut prob = MonotonicProblem {
        model,
        q2,
        v: v.to_vec(),
        p1: p1.to_vec(),
        z_lo,
        z_hi,
        z_snr,
        t_max: 0.0,
        a1_top: 0.0,
        dy2,
        pb,
        s2,
        v_peak,
        track: crate::geometry::track_length(v, sc.delta_t),
    };
    prob.a1_top = prob.a1(sc.z_max);
    prob.t_max = prob.a1_top - prob.a1(0.0);
    if !prob.in_normal([0.0, 0.0]) {
        return Err(PlanError::Infeasible("normal set is empty".into()));
    }
    Ok(prob)
}

impl MonotonicProblem<'_> {
    /// `2^(A1 z + A2) - 1`.
    pub fn k(&self, z: f64) -> f64 {
        (self.model.derived.a_1 * z + self.model.derived.a_2).exp2() - 1.0
    }

    fn inc(&self, z: f64) -> f64 {
        let sc = &self.model.sc;
        let tn = sc.theta_1.tan();
        z * z * (tn * tn + 1.0)
            + (sc.gs[0] - sc.x_t).powi(2)
            + sc.gs[2] * sc.gs[2]
            + 2.0 * z * tn * (sc.gs[0] - sc.x_t).max(0.0)
    }

    fn dec(&self, z: f64) -> f64 {
        let sc = &self.model.sc;
        2.0 * z * sc.gs[2] + 2.0 * z * sc.theta_1.tan() * (sc.x_t - sc.gs[0]).max(0.0)
    }

    /// Increasing part of the master data-rate constraint, worst slot.
    pub fn a1(&self, z: f64) -> f64 {
        let k = self.k(z);
        let inc = self.inc(z);
        self.dy2
            .iter()
            .zip(&self.pb)
            .map(|(d, p)| k * (inc + d) - p)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn a2(&self, z: f64) -> f64 {
        self.k(z) * self.dec(z)
    }

    fn c6(&self, z: f64) -> bool {
        let sc = &self.model.sc;
        let r1 = z / sc.theta_1.cos();
        let s1 = r1.powi(3) * sc.theta_1.sin() / self.model.derived.gamma_r[0];
        self.model.gamma_snr([s1, self.s2], self.v_peak) >= sc.gamma_snr_min
    }

    /// Membership in the normal set (upper altitude bound, C6, rate, `t` box).
    pub fn in_normal(&self, l: [f64; 2]) -> bool {
        let [z, t] = l;
        z <= self.z_hi && (0.0..=self.t_max).contains(&t) && self.c6(z) && self.a1(z) + t <= self.a1_top
    }

    /// Membership in the conormal set (lower altitude bound, rate).
    pub fn in_conormal(&self, l: [f64; 2]) -> bool {
        let [z, t] = l;
        z >= self.z_lo && self.a2(z) + t >= self.a1_top
    }

    pub fn coverage(&self, z: f64) -> f64 {
        let f = Formation::new(self.model.master_at(z), self.q2);
        self.model.swath(&f).map_or(0.0, |s| s * self.track)
    }

    /// Coverage bound of the box below vertex `l`, using the altitude ceilings known
    /// in closed form.
    fn bound(&self, l: [f64; 2]) -> f64 {
        self.coverage(l[0].min(self.z_hi).min(self.z_snr))
    }

    /// Bisection for the largest `lambda` in [0, 1] with `lambda * l` in the normal set.
    pub fn project(&self, l: [f64; 2], eps_2: f64) -> Projection {
        if self.in_normal(l) {
            return Projection { point: l, lambda: 1.0, iterations: 0 };
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut iterations = 0;
        while hi - lo > eps_2 {
            let mid = 0.5 * (lo + hi);
            if self.in_normal([mid * l[0], mid * l[1]]) {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        Projection { point: [lo * l[0], lo * l[1]], lambda: lo, iterations }
    }

    /// Every constraint of the sub-problem evaluated directly at altitude `z`.
    pub fn feasible_altitude(&self, z: f64) -> bool {
        let s = DecisionState {
            formation: Formation::new(self.model.master_at(z), self.q2),
            v: self.v.clone(),
            p_com: [self.p1.clone(), vec![0.0; self.v.len()]],
        };
        let r = self.model.evaluate(&s);
        MASTER_CONSTRAINTS.iter().all(|&i| {
            if i == 11 {
                master_rate_ok(self.model, &s)
            } else {
                r.check(i).satisfied
            }
        })
    }
}

fn master_rate_ok(model: &Model, s: &DecisionState) -> bool {
    let sc = &model.sc;
    let q1 = s.formation.q1;
    let Ok(r_min) = crate::comms::min_data_rate(q1.z, sc.theta_1, sc) else {
        return false;
    };
    let y = along_track(&s.v, sc.delta_t);
    y.iter().zip(&s.p_com[0]).all(|(yn, p)| {
        let d = crate::comms::gs_distance(&q1, *yn, sc.gs);
        crate::comms::throughput(*p, d, sc.b_c[0], sc.beta_c[0]) - r_min >= -crate::constraints::MARGIN_TOL * r_min
    })
}

/// Polyblock outer approximation from `(z_max, t_max)`.
pub fn polyblock_solve(prob: &MonotonicProblem, eps_1: f64) -> Result<PolyblockResult> {
    let sc = &prob.model.sc;
    let eps_2 = sc.algo.eps[1];
    let mut vertices: Vec<[f64; 2]> = vec![[sc.z_max, prob.t_max]];
    vertices.retain(|l| prob.in_conormal(*l));
    let mut best: Option<[f64; 2]> = None;
    let mut cbv = f64::NEG_INFINITY;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while !vertices.is_empty() && iterations < sc.algo.m_2 {
        let (idx, ub) = select(prob, &vertices);
        if best.is_some() && (ub - cbv).abs() <= eps_1 * cbv.abs().max(1.0) {
            converged = true;
            break;
        }
        let l = vertices.swap_remove(idx);
        let phi = prob.project(l, eps_2).point;
        if prob.in_conormal(phi) {
            let c = prob.coverage(phi[0]);
            if c > cbv || best.is_none() {
                cbv = c;
                best = Some(phi);
            }
        }
        for child in [[phi[0], l[1]], [l[0], phi[1]]] {
            if child != l {
                vertices.push(child);
            }
        }
        vertices.retain(|v| prob.in_conormal(*v) && (best.is_none() || prob.bound(*v) > cbv));
        iterations += 1;
        history.push(cbv);
    }
    if vertices.is_empty() && best.is_some() {
        converged = true;
    }
    if !converged {
        log::debug!("polyblock stopped after {iterations} iterations without closing the gap");
    }
    let Some(s) = best else {
        return Err(PlanError::Infeasible("polyblock found no feasible altitude".into()));
    };
    Ok(PolyblockResult {
        q1: prob.model.master_at(s[0]),
        z1: s[0],
        t: s[1],
        coverage: cbv,
        cbv: history,
        iterations,
        converged,
    })
}

/// Vertex with the largest bound; ties go to the larger `t`.
fn select(prob: &MonotonicProblem, vertices: &[[f64; 2]]) -> (usize, f64) {
    let mut idx = 0;
    let mut ub = f64::NEG_INFINITY;
    for (i, v) in vertices.iter().enumerate() {
        let b = prob.bound(*v);
        if b > ub || (b == ub && v[1] > vertices[idx][1]) {
            ub = b;
            idx = i;
        }
    }
    (idx, ub)
}

/// Exhaustive altitude search on a uniform grid, checking every constraint directly.
pub fn grid_search(prob: &MonotonicProblem, step: f64) -> Option<(f64, f64)> {
    let sc = &prob.model.sc;
    let n = ((sc.z_max - sc.z_min) / step).floor() as usize;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..=n {
        let z = (sc.z_min + k as f64 * step).min(sc.z_max);
        if !prob.feasible_altitude(z) {
            continue;
        }
        let c = coverage(
            prob.model
                .swath(&Formation::new(prob.model.master_at(z), prob.q2))
                .unwrap_or(0.0),
            &prob.v,
            sc.delta_t,
        );
        if best.map_or(true, |(_, b)| c > b) {
            best = Some((z, c));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    fn setup() -> Model {
        Model::new(Scenario::default()).unwrap()
    }

    #[test]
    fn a_functions_are_monotone() {
        let m = setup();
        let p = transform_p1b(&m, Pos::new(-30.0, 40.0), &vec![0.5; 80], &vec![8.0; 80]).unwrap();
        let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for k in 0..=1000 {
            let z = k as f64 * 0.1;
            let cur = (p.a1(z), p.a2(z));
            assert!(cur.0 >= prev.0 && cur.1 >= prev.1, "z = {z}");
            prev = cur;
        }
    }

    #[test]
    fn bisection_uses_fourteen_steps() {
        let m = setup();
        let p = transform_p1b(&m, Pos::new(-30.0, 40.0), &vec![0.5; 80], &vec![8.0; 80]).unwrap();
        let pr = p.project([m.sc.z_max, p.t_max], 1e-4);
        assert_eq!(pr.iterations, 14);
        let inside = p.project(pr.point, 1e-4);
        assert_eq!(inside.lambda, 1.0);
    }

    #[test]
    fn cbv_is_monotone_and_matches_grid() {
        let m = setup();
        let p = transform_p1b(&m, Pos::new(-30.0, 40.0), &vec![0.5; 80], &vec![8.0; 80]).unwrap();
        let sol = polyblock_solve(&p, 1e-4).unwrap();
        assert!(sol.cbv.windows(2).all(|w| w[1] >= w[0]));
        let (_, c) = grid_search(&p, 0.01).unwrap();
        assert!(sol.coverage >= c * (1.0 - 1e-3), "{} vs {c}", sol.coverage);
    }
}
