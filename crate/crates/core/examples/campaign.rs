// Small Monte-Carlo campaign written to CSV in a temporary directory.
use insar_plan::ao::Scheme;
use insar_plan::experiments::{run_experiment, ExperimentSpec, Figure, PsiChoice, SchemeSelection};
use insar_plan::scenario::Scenario;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut sc = Scenario::default().desk_scale();
    sc.algo.pso_population = 40;
    sc.algo.pso_iterations = 20;
    let out = std::env::temp_dir().join(format!("insar-plan-example-{}", std::process::id()));
    let spec = ExperimentSpec {
        figure: Figure::Convergence,
        scenario: sc,
        realizations: 2,
        seed: 11,
        psi: PsiChoice::Fixed(0.4),
        schemes: SchemeSelection::Only(Scheme::Proposed),
        out: out.clone(),
    };
    for p in run_experiment(&spec)? {
        let text = std::fs::read_to_string(&p)?;
        println!("{} ({} rows)", p.display(), text.lines().count() - 1);
    }
    std::fs::remove_dir_all(out)?;
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
