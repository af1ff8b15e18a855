use insar_plan::comms::{min_power, throughput, total_energy, Propulsion};
use insar_plan::constraints::{c6_root, fitness, Model, SlaveEval};
use insar_plan::geometry::{coverage, footprint, slant_range, usable_swath, Formation, Pos};
use insar_plan::insar::{baseline_decorrelation, delta_phi_90_cached, phase_pdf, snr_decorrelation};
use insar_plan::monotonic::{polyblock_solve, transform_p1b, MASTER_CONSTRAINTS};
use insar_plan::pso::run_pso;
use insar_plan::scenario::{db_to_linear, Scenario};
use proptest::prelude::*;
use std::sync::OnceLock;

fn model() -> &'static Model {
    static M: OnceLock<Model> = OnceLock::new();
    M.get_or_init(|| Model::new(Scenario::default()).unwrap())
}

fn small_model() -> &'static Model {
    static M: OnceLock<Model> = OnceLock::new();
    M.get_or_init(|| {
        let mut sc = Scenario::default();
        sc.algo.pso_population = 40;
        sc.algo.pso_iterations = 20;
        Model::new(sc).unwrap()
    })
}

fn pos() -> impl Strategy<Value = Pos> {
    (-200.0..20.0f64, 1.0..100.0f64).prop_map(|(x, z)| Pos::new(x, z))
}

#[test]
fn zero_db_is_unity() {
    assert_eq!(db_to_linear(0.0), 1.0);
}

#[test]
fn equal_look_angles_have_no_baseline_loss() {
    let t = 0.7;
    assert_eq!(baseline_decorrelation(t, t, 1.2), 1.0);
}

#[test]
fn hover_power_is_exact_at_rest() {
    let p = Propulsion::new(&Scenario::default());
    assert_eq!(p.power(0.0), p.p_0 + p.p_i);
}

#[test]
fn phase_pdf_normalises() {
    for gamma in [0.0, 0.25, 0.5, 0.75, 0.95] {
        for n_l in [1, 4, 16] {
            let m = phase_pdf(gamma, n_l).unwrap().mass();
            assert!((m - 1.0).abs() < 1e-6, "gamma {gamma}, n_l {n_l}: {m}");
        }
    }
}

#[test]
fn phase_spread_shrinks_with_coherence_and_looks() {
    let gammas = [0.3, 0.5, 0.7, 0.9];
    for n_l in [1u32, 4, 16] {
        let d: Vec<f64> = gammas.iter().map(|&g| delta_phi_90_cached(g, n_l).unwrap()).collect();
        assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
    }
    for g in gammas {
        let d: Vec<f64> = [1u32, 4, 16].iter().map(|&n| delta_phi_90_cached(g, n).unwrap()).collect();
        assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scenario_text_round_trips(g in 0.3..1.0f64, p in 0.5..40.0f64, x in -50.0..50.0f64, n in 2usize..200) {
        let mut sc = Scenario::default();
        sc.gamma_snr_min = g;
        sc.p_com_max = p;
        sc.x_t = x;
        sc.n_slots = n;
        let back = Scenario::parse_str(&sc.to_text()).unwrap();
        prop_assert_eq!(back, sc);
    }

    #[test]
    fn baseline_closes(q1 in pos(), q2 in pos(), t in 0.2..1.3f64) {
        let b = Formation::new(q1, q2).baseline(t);
        prop_assert!(b.b >= 0.0);
        let err = (b.b_perp.powi(2) + b.b_par.powi(2) - b.b * b.b).abs();
        prop_assert!(err <= 1e-9 * (b.b * b.b).max(1e-300));
    }

    #[test]
    fn master_on_line_of_sight(z in 1.0..100.0f64) {
        let m = model();
        let q1 = m.master_at(z);
        let r1 = slant_range(&q1, m.sc.x_t);
        prop_assert!((r1 - z / m.sc.theta_1.cos()).abs() < 1e-9 * r1);
    }

    #[test]
    fn overlap_within_each_footprint(z1 in 5.0..100.0f64, q2 in pos()) {
        let m = model();
        let f = Formation::new(m.master_at(z1), q2);
        let Ok(t2) = m.theta_2(&q2) else { return Ok(()) };
        prop_assume!(t2.abs() + m.sc.theta_3db / 2.0 < 1.5);
        let s = usable_swath(&f, m.sc.theta_1, t2, m.sc.theta_3db).unwrap();
        let (a, b) = footprint(&f.q1, m.sc.theta_1, m.sc.theta_3db).unwrap();
        let (c, d) = footprint(&f.q2, t2, m.sc.theta_3db).unwrap();
        prop_assert!(s >= 0.0);
        prop_assert!(s <= (b - a).min(d - c) + 1e-9);
    }

    #[test]
    fn coverage_grows_with_speed(v in prop::collection::vec(0.1..10.0f64, 2..40), k in 0usize..39, dv in 0.0..3.0f64, s in 0.0..200.0f64) {
        let k = k % (v.len() - 1);
        let mut w = v.clone();
        w[k] += dv;
        prop_assert!(coverage(s, &w, 1.0) >= coverage(s, &v, 1.0));
        prop_assert!(coverage(s + 1.0, &v, 1.0) >= coverage(s, &v, 1.0));
    }

    #[test]
    fn coverage_below_master_swath_bound(z1 in 5.0..100.0f64, q2 in pos(), v in 0.1..10.0f64) {
        let m = model();
        let f = Formation::new(m.master_at(z1), q2);
        let Ok(c) = m.coverage(&f, &vec![v; m.n()]) else { return Ok(()) };
        let (a, b) = footprint(&f.q1, m.sc.theta_1, m.sc.theta_3db).unwrap();
        prop_assert!(c <= (b - a) * v * (m.n() - 1) as f64 * m.sc.delta_t + 1e-9);
    }

    #[test]
    fn throughput_monotone(p in 0.01..20.0f64, dp in 0.01..5.0f64, d in 10.0..1000.0f64, dd in 1.0..100.0f64) {
        let sc = Scenario::default();
        let r = throughput(p, d, sc.b_c[0], sc.beta_c[0]);
        prop_assert!(throughput(p + dp, d, sc.b_c[0], sc.beta_c[0]) > r);
        prop_assert!(throughput(p, d + dd, sc.b_c[0], sc.beta_c[0]) < r);
    }

    #[test]
    fn rate_and_power_forms_agree(p in 0.01..20.0f64, r in 1e5..5e8f64, d in 10.0..1000.0f64) {
        let sc = Scenario::default();
        let (b, beta) = (sc.b_c[0], sc.beta_c[0]);
        let need = min_power(r, d, b, beta);
        let margin = (p - need).abs() / need;
        prop_assume!(margin > 1e-9);
        prop_assert_eq!(throughput(p, d, b, beta) >= r, p >= need);
    }

    #[test]
    fn energy_monotone_in_power(p in prop::collection::vec(0.0..10.0f64, 80), k in 0usize..80, dp in 0.001..2.0f64) {
        let sc = Scenario::default();
        let prop = Propulsion::new(&sc);
        let v = vec![3.0; 80];
        let mut q = p.clone();
        q[k] += dp;
        prop_assert!(total_energy(&q, &v, sc.p_t[0], 1.0, &prop) > total_energy(&p, &v, sc.p_t[0], 1.0, &prop));
    }

    #[test]
    fn snr_loss_in_unit_interval(a in 1e-3..1e6f64, b in 1e-3..1e6f64) {
        let g = snr_decorrelation(a, b);
        prop_assert!(g > 0.0 && g < 1.0);
    }

    #[test]
    fn c6_root_hits_the_threshold(s1 in 1e-4..10.0f64, s2 in 1e-4..10.0f64, g in 0.3..0.99f64) {
        let m = model();
        let v = c6_root([s1, s2], g);
        prop_assert!((m.gamma_snr([s1, s2], v) - g).abs() < 1e-9);
    }

    #[test]
    fn fitness_ranking_ignores_coverage_shift(c in prop::collection::vec(0.0..1e4f64, 2..10), shift in -1e3..1e3f64) {
        let ev = |x: f64| SlaveEval { coverage: x, penalties: Default::default(), feasible: true };
        let best = |xs: &[f64]| {
            xs.iter().enumerate().max_by(|a, b| fitness(&ev(*a.1), 0.0).total_cmp(&fitness(&ev(*b.1), 0.0))).unwrap().0
        };
        let moved: Vec<f64> = c.iter().map(|x| x + shift).collect();
        prop_assert_eq!(best(&c), best(&moved));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn swarm_best_never_drops_and_replays(seed in any::<u64>(), z1 in 30.0..90.0f64) {
        let m = small_model();
        let ctx = m.slave_context(m.master_at(z1), &vec![0.5; 80], &vec![8.0; 80]);
        let a = run_pso(m, &ctx, seed, None);
        prop_assert!(a.history.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(m.in_slave_box(&a.q2));
        let b = run_pso(m, &ctx, seed, None);
        prop_assert_eq!(a.q2, b.q2);
        prop_assert_eq!(a.history, b.history);
    }

    #[test]
    fn polyblock_answer_meets_master_constraints(x2 in -60.0..-10.0f64, z2 in 20.0..60.0f64, v in 0.2..0.6f64) {
        let m = model();
        let q2 = Pos::new(x2, z2);
        let prob = transform_p1b(m, q2, &vec![v; 80], &vec![8.0; 80]);
        prop_assume!(prob.is_ok());
        let sol = polyblock_solve(prob.as_ref().unwrap(), m.sc.algo.eps[0]);
        prop_assume!(sol.is_ok());
        let sol = sol.unwrap();
        prop_assert!(sol.cbv.windows(2).all(|w| w[1] >= w[0]));
        let s = insar_plan::constraints::DecisionState {
            formation: Formation::new(sol.q1, q2),
            v: vec![v; 80],
            p_com: [vec![8.0; 80], vec![8.0; 80]],
        };
        let rep = m.evaluate(&s);
        for id in MASTER_CONSTRAINTS {
            prop_assert!(rep.check(id).margin >= -1e-6, "C{} margin {}", id, rep.check(id).margin);
        }
    }
}
