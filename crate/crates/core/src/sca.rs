//! Velocity and transmit-power planning by successive convex approximation.
//!
//! Transmit powers are eliminated: for a given velocity profile the smallest power
//! meeting each slot's data rate is known in closed form, so rate and power limits
//! become bounds on the along-track position and the energy budget becomes a convex
//! function of velocity plus the normalised induced-power slack `u`. The only
//! non-convex piece, `1/u^2 <= u^2 + v^2/v0^2`, is restricted by linearising its
//! right-hand side, which keeps every iterate feasible for the original problem.
//! Each convex restriction is solved by a log-barrier Newton method.
//!
//! ```
//! use insar_plan::constraints::Model;
//! use insar_plan::geometry::{Formation, Pos};
//! use insar_plan::sca::run_sca;
//! use insar_plan::scenario::Scenario;
//!
//! let model = Model::new(Scenario::default()).unwrap();
//! let f = Formation::new(model.master_at(66.0), Pos::new(-30.0, 40.0));
//! let res = run_sca(&model, &f, &vec![0.5; 80]).unwrap();
//! assert!(res.v.iter().all(|&v| v >= model.sc.v_min && v <= model.sc.v_max));
//! ```

use nalgebra::{DMatrix, DVector};

use crate::comms::required_snr;
use crate::constraints::Model;
use crate::error::{PlanError, Result};
use crate::geometry::{along_track, track_length, Formation};

/// Relative headroom given to the induced-power slack at a starting point.
const U_LIFT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerPlan {
    pub p_com: [Vec<f64>; 2],
    /// Smallest powers meeting the data-rate constraint.
    pub p_required: [Vec<f64>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaResult {
    pub v: Vec<f64>,
    pub power: PowerPlan,
    /// Along-track distance after every SCA iteration, starting with the initial point.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, Copy)]
struct Link {
    /// `(2^(R/B) - 1) / beta`.
    kb: f64,
    /// Squared across-track and vertical distance to the ground station.
    c0: f64,
    p_t: f64,
    e_max: f64,
}

/// Convex restriction around the expansion point `(v_ref, u_ref)`.
///
/// Points are `x = (v, u)` with `2N` entries.
pub struct Restriction<'a> {
    model: &'a Model,
    n: usize,
    dt: f64,
    gy: f64,
    v_min: f64,
    cap: f64,
    y_lo: f64,
    y_hi: f64,
    links: [Link; 2],
    v_ref: Vec<f64>,
    u_ref: Vec<f64>,
}

/// Normalised induced power `sqrt(sqrt(1 + a^2) - a)`, `a = v^2 / (2 v0^2)`.
fn induced_ratio(model: &Model, v: f64) -> f64 {
    model.prop.induced(v) / model.prop.p_i
}

fn links(model: &Model, f: &Formation) -> Result<[Link; 2]> {
    let sc = &model.sc;
    let t2 = model.theta_2(&f.q2)?;
    let rates = model.min_rates(f, t2)?;
    let mk = |i: usize| {
        let q = if i == 0 { f.q1 } else { f.q2 };
        Link {
            kb: required_snr(rates[i], sc.b_c[i]) / sc.beta_c[i],
            c0: (q.x - sc.gs[0]).powi(2) + (q.z - sc.gs[2]).powi(2),
            p_t: sc.p_t[i],
            e_max: sc.e_max[i],
        }
    };
    Ok([mk(0), mk(1)])
}

/// Smallest powers for velocity profile `v`, then each drone's leftover energy is
/// spent raising its powers uniformly toward `P_com,max`.
pub fn power_fill(model: &Model, f: &Formation, v: &[f64]) -> Result<PowerPlan> {
    let sc = &model.sc;
    let ls = links(model, f)?;
    let y = along_track(v, sc.delta_t);
    let mut p_com = [Vec::new(), Vec::new()];
    let mut p_required = [Vec::new(), Vec::new()];
    for (i, l) in ls.iter().enumerate() {
        let req: Vec<f64> = y.iter().map(|yn| l.kb * (l.c0 + (yn - sc.gs[1]).powi(2))).collect();
        if let Some(p) = req.iter().find(|&&p| p > sc.p_com_max) {
            return Err(PlanError::Infeasible(format!(
                "drone {} needs {p:.4} W to offload, above the power limit",
                i + 1
            )));
        }
        let slack = l.e_max - model.energy(i, v, &req);
        if slack < 0.0 {
            return Err(PlanError::Infeasible(format!(
                "drone {} exceeds its energy budget by {:.4} J",
                i + 1,
                -slack
            )));
        }
        let room: f64 = req.iter().map(|p| sc.p_com_max - p).sum::<f64>() * sc.delta_t;
        let tau = if room > 0.0 { (slack / room).min(1.0) * (1.0 - 1e-12) } else { 0.0 };
        p_com[i] = req.iter().map(|p| p + tau * (sc.p_com_max - p)).collect();
        p_required[i] = req;
    }
    Ok(PowerPlan { p_com, p_required })
}

impl<'a> Restriction<'a> {
    /// Restriction expanded at `v_ref` with `u` at the exact induced power.
    pub fn at(model: &'a Model, f: &Formation, v_ref: &[f64]) -> Result<Self> {
        let mut r = Self::new(model, f, v_ref.len())?;
        let u: Vec<f64> = v_ref.iter().map(|&v| induced_ratio(model, v)).collect();
        r.expand_at(v_ref, &u);
        Ok(r)
    }

    fn new(model: &'a Model, f: &Formation, n: usize) -> Result<Self> {
        let sc = &model.sc;
        let ls = links(model, f)?;
        let mut reach = f64::INFINITY;
        for l in &ls {
            let d2 = sc.p_com_max / l.kb - l.c0;
            if d2 < 0.0 {
                return Err(PlanError::Infeasible("ground station out of reach at any along-track position".into()));
            }
            reach = reach.min(d2.sqrt());
        }
        let gy = sc.gs[1];
        if gy.abs() > reach {
            return Err(PlanError::Infeasible("ground station out of reach at the first slot".into()));
        }
        Ok(Restriction {
            model,
            n,
            dt: sc.delta_t,
            gy,
            v_min: sc.v_min,
            cap: model.c6_cap(f)?,
            y_lo: gy - reach,
            y_hi: gy + reach,
            links: ls,
            v_ref: Vec::new(),
            u_ref: Vec::new(),
        })
    }

    fn expand_at(&mut self, v: &[f64], u: &[f64]) {
        self.v_ref = v.to_vec();
        self.u_ref = u.to_vec();
    }

    fn positions(&self, v: &[f64]) -> Vec<f64> {
        along_track(v, self.dt)
    }

    fn energy(&self, l: &Link, v: &[f64], u: &[f64], y: &[f64]) -> f64 {
        let p = &self.model.prop;
        let mut e = 0.0;
        for k in 0..self.n {
            e += p.blade(v[k]) + p.p_i * u[k] + p.parasite_power(v[k]) + l.p_t + l.kb * (l.c0 + (y[k] - self.gy).powi(2));
        }
        self.dt * e
    }

    /// First-order expansion of `u^2 + v^2 / v0^2` around slot `k`'s reference.
    pub fn linearized_rhs(&self, k: usize, v: f64, u: f64) -> f64 {
        let (vr, ur) = (self.v_ref[k], self.u_ref[k]);
        let v0 = self.model.prop.v_0;
        ur * ur + 2.0 * ur * (u - ur) + (vr * vr + 2.0 * vr * (v - vr)) / (v0 * v0)
    }

    fn surrogate(&self, k: usize, v: f64, u: f64) -> f64 {
        self.linearized_rhs(k, v, u) - 1.0 / (u * u)
    }

    /// Energy of drone `i` with the induced power replaced by `P_I u`.
    pub fn surrogate_energy(&self, i: usize, x: &[f64]) -> f64 {
        let (v, u) = x.split_at(self.n);
        self.energy(&self.links[i], v, u, &self.positions(v))
    }

    /// Barrier objective at parameter `t`; `None` outside the strict interior.
    pub fn barrier(&self, x: &[f64], t: f64) -> Option<f64> {
        self.phi(x, t)
    }

    pub fn barrier_gradient(&self, x: &[f64], t: f64) -> Option<Vec<f64>> {
        let s = self.slacks(x)?;
        Some(self.grad_hess(x, t, &s).0.iter().cloned().collect())
    }

    /// Every barrier slack, or `None` when one is not strictly positive.
    fn slacks(&self, x: &[f64]) -> Option<Slacks> {
        let (v, u) = x.split_at(self.n);
        let mut s = Slacks::default();
        for k in 0..self.n {
            let lo = v[k] - self.v_min;
            let hi = self.cap - v[k];
            let h = if u[k] > 0.0 { self.surrogate(k, v[k], u[k]) } else { -1.0 };
            if lo <= 0.0 || hi <= 0.0 || h <= 0.0 || !h.is_finite() {
                return None;
            }
            s.lo.push(lo);
            s.hi.push(hi);
            s.h.push(h);
        }
        let y = self.positions(v);
        for &yn in &y[1..] {
            let (a, b) = (self.y_hi - yn, yn - self.y_lo);
            if a <= 0.0 || b <= 0.0 {
                return None;
            }
            s.up.push(a);
            s.dn.push(b);
        }
        for (i, l) in self.links.iter().enumerate() {
            let e = l.e_max - self.energy(l, v, u, &y);
            if e <= 0.0 {
                return None;
            }
            s.e[i] = e;
        }
        s.y = y;
        Some(s)
    }

    fn objective(&self, v: &[f64]) -> f64 {
        v[..self.n - 1].iter().sum()
    }

    fn phi(&self, x: &[f64], t: f64) -> Option<f64> {
        let s = self.slacks(x)?;
        let logs: f64 = s.lo.iter().chain(&s.hi).chain(&s.h).chain(&s.up).chain(&s.dn).chain(&s.e).map(|z| z.ln()).sum();
        Some(-t * self.objective(&x[..self.n]) - logs)
    }

    fn constraint_count(&self) -> usize {
        3 * self.n + 2 * (self.n - 1) + 2
    }

    fn grad_hess(&self, x: &[f64], t: f64, s: &Slacks) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let dt = self.dt;
        let (v, u) = x.split_at(n);
        let p = &self.model.prop;
        let mut g = DVector::zeros(2 * n);
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n - 1 {
            g[k] -= t;
        }
        let v0sq = p.v_0 * p.v_0;
        for k in 0..n {
            g[k] += -1.0 / s.lo[k] + 1.0 / s.hi[k];
            h[(k, k)] += 1.0 / (s.lo[k] * s.lo[k]) + 1.0 / (s.hi[k] * s.hi[k]);
            let hu = 2.0 * self.u_ref[k] + 2.0 / u[k].powi(3);
            let hv = 2.0 * self.v_ref[k] / v0sq;
            let huu = -6.0 / u[k].powi(4);
            let sk = s.h[k];
            g[k] -= hv / sk;
            g[n + k] -= hu / sk;
            let s2 = sk * sk;
            h[(k, k)] += hv * hv / s2;
            h[(n + k, n + k)] += -huu / sk + hu * hu / s2;
            h[(k, n + k)] += hv * hu / s2;
            h[(n + k, k)] += hv * hu / s2;
        }
        // Rows on y[m], m >= 1: dy[m]/dv[k] = dt for k < m.
        let mut gsuf = vec![0.0; n + 1];
        let mut wsuf = vec![0.0; n + 1];
        for m in (1..n).rev() {
            let (a, b) = (s.up[m - 1], s.dn[m - 1]);
            gsuf[m] = gsuf[m + 1] + 1.0 / a - 1.0 / b;
            wsuf[m] = wsuf[m + 1] + 1.0 / (a * a) + 1.0 / (b * b);
        }
        for j in 0..n {
            g[j] += dt * gsuf[j + 1];
            for k in 0..n {
                h[(j, k)] += dt * dt * wsuf[j.max(k) + 1];
            }
        }
        let shape = 6.0 * p.p_0 / (p.u_tip * p.u_tip);
        for (i, l) in self.links.iter().enumerate() {
            let se = s.e[i];
            let mut ge = DVector::zeros(2 * n);
            let mut suf = 0.0;
            for k in (0..n).rev() {
                // sum over m > k of (y[m] - g_y)
                ge[k] = dt * (shape * v[k] + 3.0 * p.parasite * v[k] * v[k]) + dt * dt * 2.0 * l.kb * suf;
                ge[n + k] = dt * p.p_i;
                suf += s.y[k] - self.gy;
            }
            g += &ge / se;
            for j in 0..n {
                h[(j, j)] += dt * (shape + 6.0 * p.parasite * v[j]) / se;
                for k in 0..n {
                    let cnt = (n - 1 - j.max(k)) as f64;
                    h[(j, k)] += 2.0 * l.kb * dt.powi(3) * cnt / se;
                }
            }
            h.ger(1.0 / (se * se), &ge, &ge, 1.0);
        }
        (g, h)
    }

    /// Centring steps of the barrier method at parameter `t`.
    fn center(&self, x: &mut Vec<f64>, t: f64, steps: &mut usize) -> Result<()> {
        for _ in 0..60 {
            let s = self.slacks(x).ok_or_else(|| PlanError::Numerical("barrier iterate left the interior".into()))?;
            let (g, h) = self.grad_hess(x, t, &s);
            let dx = solve_spd(h, &g)?;
            let dec = -g.dot(&dx);
            *steps += 1;
            if dec / 2.0 <= 1e-10 {
                return Ok(());
            }
            let f0 = self.phi(x, t).expect("interior point");
            let mut a = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(xi, d)| xi + a * d).collect();
                if let Some(f1) = self.phi(&trial, t) {
                    if f1 <= f0 - 0.25 * a * dec {
                        *x = trial;
                        break;
                    }
                }
                a *= 0.5;
                if a < 1e-14 {
                    return Ok(());
                }
            }
        }
        Ok(())
    }

    /// Maximises the along-track distance over the restriction from a strictly
    /// feasible `x`.
    fn solve(&self, mut x: Vec<f64>, steps: &mut usize) -> Result<Vec<f64>> {
        let m = self.constraint_count() as f64;
        let mut t = 1.0;
        loop {
            self.center(&mut x, t, steps)?;
            let obj = self.objective(&x[..self.n]).abs().max(1.0);
            if m / t <= 1e-9 * obj {
                return Ok(x);
            }
            t *= 20.0;
        }
    }

    /// `(v, u)` with `u` just above the exact induced power.
    pub fn lifted(&self, v: &[f64]) -> Vec<f64> {
        let mut x = v.to_vec();
        x.extend(v.iter().map(|&vk| induced_ratio(self.model, vk) * (1.0 + U_LIFT)));
        x
    }
}

#[derive(Debug, Default)]
struct Slacks {
    lo: Vec<f64>,
    hi: Vec<f64>,
    h: Vec<f64>,
    up: Vec<f64>,
    dn: Vec<f64>,
    e: [f64; 2],
    y: Vec<f64>,
}

fn solve_spd(mut h: DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = h.diagonal().amax().max(1.0);
    let mut reg = 0.0;
    for _ in 0..8 {
        if let Some(c) = h.clone().cholesky() {
            return Ok(-c.solve(g));
        }
        let bump = if reg == 0.0 { 1e-12 * scale } else { reg * 100.0 };
        for k in 0..h.nrows() {
            h[(k, k)] += bump - reg;
        }
        reg = bump;
    }
    Err(PlanError::Numerical("Newton system is not positive definite".into()))
}

/// Strictly feasible starting velocity near `v_prev`.
fn phase_one(r: &mut Restriction, v_prev: &[f64]) -> Option<Vec<f64>> {
    let lo = r.v_min + 0.01 * (r.cap - r.v_min);
    let mut targets = vec![lo];
    targets.extend((1..20).map(|k| r.v_min + (r.cap - r.v_min) * k as f64 / 20.0));
    for &c in &targets {
        for a in [0.0, 1e-3, 1e-2, 0.1, 0.3, 0.6, 1.0] {
            let v: Vec<f64> = v_prev.iter().map(|&p| (1.0 - a) * p.clamp(r.v_min, r.cap) + a * c).collect();
            let u: Vec<f64> = v.iter().map(|&vk| induced_ratio(r.model, vk)).collect();
            r.expand_at(&v, &u);
            if r.slacks(&r.lifted(&v)).is_some() {
                return Some(v);
            }
        }
    }
    None
}

/// Maximises the along-track distance for a fixed formation, starting from `v_prev`.
pub fn run_sca(model: &Model, f: &Formation, v_prev: &[f64]) -> Result<ScaResult> {
    let n = v_prev.len();
    if n < 2 {
        return Err(PlanError::Invalid { key: "n_slots".into(), msg: "at least two slots are needed".into() });
    }
    let a = &model.sc.algo;
    let mut r = Restriction::new(model, f, n)?;
    let Some(v_start) = phase_one(&mut r, v_prev) else {
        log::debug!("no strictly feasible start; falling back to a non-strict point");
        let floor = vec![model.sc.v_min; n];
        for v in [v_prev, &floor[..]] {
            if let Ok(power) = power_fill(model, f, v) {
                if v.iter().all(|&x| x >= model.sc.v_min && x <= r.cap) {
                    return Ok(ScaResult {
                        v: v.to_vec(),
                        power,
                        history: vec![track_length(v, model.sc.delta_t)],
                        iterations: 0,
                        newton_steps: 0,
                    });
                }
            }
        }
        return Err(PlanError::Infeasible("no velocity profile meets the resource constraints".into()));
    };
    let mut x = r.lifted(&v_start);
    let mut history = vec![track_length(&v_start, model.sc.delta_t)];
    let mut steps = 0;
    let mut iterations = 0;
    while iterations < a.m_3 {
        let (v, u) = x.split_at(n);
        r.expand_at(v, u);
        let next = r.solve(x.clone(), &mut steps)?;
        iterations += 1;
        let before = r.objective(&x[..n]);
        let after = r.objective(&next[..n]);
        if after < before {
            break;
        }
        x = next;
        // tighten u toward the exact induced power; stays strictly inside
        for k in 0..n {
            x[n + k] = x[n + k].min(induced_ratio(model, x[k]) * (1.0 + U_LIFT));
        }
        history.push(track_length(&x[..n], model.sc.delta_t));
        if (after - before).abs() <= a.eps[2] * before.abs().max(1e-12) {
            break;
        }
    }
    let v = x[..n].to_vec();
    let power = power_fill(model, f, &v)?;
    Ok(ScaResult { v, power, history, iterations, newton_steps: steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::DecisionState;
    use crate::geometry::Pos;
    use crate::scenario::Scenario;

    fn setup() -> (Model, Formation) {
        let m = Model::new(Scenario::default()).unwrap();
        let f = Formation::new(m.master_at(66.0), Pos::new(-30.0, 40.0));
        (m, f)
    }

    #[test]
    fn history_is_non_decreasing_and_result_feasible() {
        let (m, f) = setup();
        let res = run_sca(&m, &f, &vec![0.5; 80]).unwrap();
        assert!(res.history.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{:?}", res.history);
        let s = DecisionState { formation: f, v: res.v.clone(), p_com: res.power.p_com.clone() };
        let rep = m.evaluate(&s);
        for id in [6, 10, 11, 12, 13] {
            assert!(rep.check(id).satisfied, "C{id}: {}", rep);
        }
    }

    #[test]
    fn barrier_gradient_matches_differences() {
        let (m, f) = setup();
        let v = vec![0.3; 80];
        let r = Restriction::at(&m, &f, &v).unwrap();
        let mut x = r.lifted(&v);
        for u in &mut x[80..] {
            *u *= 1.01;
        }
        x[5] += 0.01;
        x[80 + 7] *= 1.01;
        let g = r.barrier_gradient(&x, 3.0).unwrap();
        for k in [0, 5, 40, 79, 80, 87, 159] {
            let h = 1e-6 * x[k].abs().max(1e-3);
            let mut a = x.clone();
            let mut b = x.clone();
            a[k] += h;
            b[k] -= h;
            let fd = (r.barrier(&a, 3.0).unwrap() - r.barrier(&b, 3.0).unwrap()) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1.0), "k = {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn fill_meets_rates_exactly_at_required_power() {
        let (m, f) = setup();
        let plan = power_fill(&m, &f, &vec![2.0; 80]).unwrap();
        for i in 0..2 {
            for (p, r) in plan.power_pairs(i) {
                assert!(p >= r && p <= m.sc.p_com_max);
            }
        }
    }

    impl PowerPlan {
        fn power_pairs(&self, i: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
            self.p_com[i].iter().cloned().zip(self.p_required[i].iter().cloned())
        }
    }
}
