//! Slave placement by constrained particle swarm optimisation.
//!
//! Particles live in the across-track plane. The search box follows C1 and C4 and
//! is enforced by a predictive reflecting wall; every other constraint enters
//! through the penalty fitness of [`crate::constraints::fitness`].
//!
//! ```
//! use insar_plan::constraints::Model;
//! use insar_plan::pso::run_pso;
//! use insar_plan::scenario::Scenario;
//!
//! let mut sc = Scenario::default();
//! sc.algo.pso_population = 40;
//! sc.algo.pso_iterations = 20;
//! let model = Model::new(sc).unwrap();
//! let q1 = model.master_at(60.0);
//! let ctx = model.slave_context(q1, &vec![0.5; 80], &vec![8.0; 80]);
//! let res = run_pso(&model, &ctx, 7, None);
//! assert!(model.in_slave_box(&res.q2));
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constraints::{fitness, Model, SlaveContext, SlaveEval};
use crate::geometry::Pos;

#[derive(Debug, Clone)]
pub struct Particle {
    pub pos: [f64; 2],
    pub vel: [f64; 2],
    pub best: [f64; 2],
    pub best_fitness: f64,
    rng: ChaCha8Rng,
    eval: Option<SlaveEval>,
}

#[derive(Debug, Clone)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub best: [f64; 2],
    pub best_fitness: f64,
    pub best_eval: Option<SlaveEval>,
    /// Inertial weight used by the next velocity update.
    pub w: f64,
    /// Iterations completed.
    pub k: usize,
    /// Smallest coverage over every in-box particle evaluated so far.
    pub min_coverage: f64,
}

#[derive(Debug, Clone)]
pub struct PsoResult {
    pub q2: Pos,
    pub fitness: f64,
    pub eval: SlaveEval,
    pub iterations: usize,
    /// Global best fitness after initialisation and after every iteration.
    pub history: Vec<f64>,
}

impl PsoResult {
    pub fn feasible(&self) -> bool {
        self.eval.feasible
    }
}

fn pos(p: [f64; 2]) -> Pos {
    Pos::new(p[0], p[1])
}

fn particle_rng(seed: u64, d: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(d as u64);
    rng
}

/// Uniform swarm in `[x_t - O, x_t] x [z_min, z_max]`, plus `warm` as particle `D`.
pub fn init_swarm(model: &Model, ctx: &SlaveContext, seed: u64, warm: Option<Pos>) -> Swarm {
    let sc = &model.sc;
    let a = &sc.algo;
    let total = a.pso_population + usize::from(warm.is_some());
    let particles = (0..total)
        .map(|d| {
            let mut rng = particle_rng(seed, d);
            let mut p = [
                rng.gen_range(sc.x_t - a.pso_offset..=sc.x_t),
                rng.gen_range(sc.z_min..=sc.z_max),
            ];
            if d == a.pso_population {
                if let Some(q) = warm {
                    p = [q.x, q.z];
                }
            }
            let vel = [rng.gen_range(0.0..=a.v_pso_max), rng.gen_range(0.0..=a.v_pso_max)];
            Particle {
                pos: p,
                vel,
                best: p,
                best_fitness: f64::NEG_INFINITY,
                rng,
                eval: None,
            }
        })
        .collect();
    let mut swarm = Swarm {
        particles,
        best: [sc.x_t, sc.z_min],
        best_fitness: f64::NEG_INFINITY,
        best_eval: None,
        w: 1.0,
        k: 0,
        min_coverage: f64::INFINITY,
    };
    evaluate_and_update(model, ctx, &mut swarm);
    swarm
}

fn evaluate_and_update(model: &Model, ctx: &SlaveContext, s: &mut Swarm) {
    s.particles.par_iter_mut().for_each(|p| {
        let q = pos(p.pos);
        p.eval = model.in_slave_box(&q).then(|| model.eval_slave(ctx, q));
    });
    for p in &s.particles {
        if let Some(e) = &p.eval {
            s.min_coverage = s.min_coverage.min(e.coverage);
        }
    }
    let min_cov = s.min_coverage;
    for p in &mut s.particles {
        let Some(e) = p.eval else { continue };
        let fit = fitness(&e, min_cov);
        if fit > p.best_fitness {
            p.best_fitness = fit;
            p.best = p.pos;
        }
        if fit > s.best_fitness {
            s.best_fitness = fit;
            s.best = p.pos;
            s.best_eval = Some(e);
        }
    }
}

/// Reflect, move, update velocities and bests; one swarm iteration.
pub fn step_swarm(model: &Model, ctx: &SlaveContext, s: &mut Swarm) {
    let sc = &model.sc;
    let (c1, c2) = (sc.algo.c_1, sc.algo.c_2);
    let gbest = s.best;
    let w = s.w;
    for p in &mut s.particles {
        let nx = p.pos[0] + p.vel[0];
        if nx > sc.x_t {
            p.vel[0] = -p.vel[0];
        }
        let nz = p.pos[1] + p.vel[1];
        if nz < sc.z_min || nz > sc.z_max {
            p.vel[1] = -p.vel[1];
        }
        p.pos[0] += p.vel[0];
        p.pos[1] += p.vel[1];
        let r1: f64 = p.rng.gen();
        let r2: f64 = p.rng.gen();
        for k in 0..2 {
            p.vel[k] = w * p.vel[k] + c1 * r1 * (p.best[k] - p.pos[k]) + c2 * r2 * (gbest[k] - p.pos[k]);
        }
    }
    s.k += 1;
    s.w = 1.0 - s.k as f64 / sc.algo.pso_iterations as f64;
    evaluate_and_update(model, ctx, s);
}

/// Runs the swarm until the best fitness stalls for the patience window or the
/// iteration cap is reached.
pub fn run_pso(model: &Model, ctx: &SlaveContext, seed: u64, warm: Option<Pos>) -> PsoResult {
    let a = &model.sc.algo;
    let mut s = init_swarm(model, ctx, seed, warm);
    let mut history = vec![s.best_fitness];
    let mut stall = 0;
    while s.k < a.pso_iterations {
        let before = s.best_fitness;
        step_swarm(model, ctx, &mut s);
        history.push(s.best_fitness);
        let gain = s.best_fitness - before;
        if before.is_finite() && gain <= a.eps[0] * before.abs().max(1.0) {
            stall += 1;
            if stall >= a.pso_patience {
                break;
            }
        } else {
            stall = 0;
        }
    }
    let q2 = pos(s.best);
    let eval = s.best_eval.unwrap_or_else(|| model.eval_slave(ctx, q2));
    if !eval.feasible {
        log::debug!("swarm ended infeasible, total violation {:.3e}", eval.penalties.sum());
    }
    PsoResult {
        q2,
        fitness: s.best_fitness,
        eval,
        iterations: s.k,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    fn small() -> Model {
        let mut sc = Scenario::default();
        sc.algo.pso_population = 30;
        sc.algo.pso_iterations = 15;
        Model::new(sc).unwrap()
    }

    #[test]
    fn init_box_and_replay() {
        let m = small();
        let ctx = m.slave_context(m.master_at(60.0), &vec![0.5; 80], &vec![8.0; 80]);
        let a = init_swarm(&m, &ctx, 3, None);
        let b = init_swarm(&m, &ctx, 3, None);
        for (p, q) in a.particles.iter().zip(&b.particles) {
            assert_eq!(p.pos, q.pos);
            assert!(p.pos[0] >= -480.0 && p.pos[0] <= 20.0);
            assert!(p.pos[1] >= 1.0 && p.pos[1] <= 100.0);
        }
        let warm = Pos::new(-33.0, 44.0);
        let c = init_swarm(&m, &ctx, 3, Some(warm));
        assert_eq!(c.particles.len(), 31);
        assert_eq!(c.particles[30].pos, [-33.0, 44.0]);
    }

    #[test]
    fn fixed_point_when_collapsed() {
        let m = small();
        let ctx = m.slave_context(m.master_at(60.0), &vec![0.5; 80], &vec![8.0; 80]);
        let mut s = init_swarm(&m, &ctx, 1, None);
        let g = s.best;
        for p in &mut s.particles {
            p.pos = g;
            p.best = g;
            p.vel = [0.0, 0.0];
        }
        step_swarm(&m, &ctx, &mut s);
        assert!(s.particles.iter().all(|p| p.pos == g));
    }
}
