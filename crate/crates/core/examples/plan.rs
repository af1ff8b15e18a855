// Full plan from the F1 starting point, with the proposed scheme and one benchmark.
use insar_plan::ao::{init_f1, run_scheme, Scheme};
use insar_plan::scenario::Scenario;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut sc = Scenario::default().desk_scale();
    sc.algo.pso_population = 80;
    sc.algo.pso_iterations = 30;
    let init = init_f1(&sc);
    for scheme in [Scheme::Proposed, Scheme::FixedSpeed] {
        let sol = run_scheme(&sc, scheme, 0.4, &init, 3)?;
        let a = sol.audit;
        println!(
            "{:<10} coverage {:>9.1} m^2  swath {:.2} m  b_perp {:.3} m  h_amb {:.3} m  v {:.3} m/s  ({:?} after {})",
            scheme.label(),
            a.coverage,
            a.swath,
            a.b_perp,
            a.h_amb,
            a.mean_velocity,
            sol.status,
            sol.iterations
        );
        assert!(sol.report.all_satisfied());
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
