// Velocity and transmit-power profile for a fixed formation by successive convex approximation.
use insar_plan::constraints::{DecisionState, Model};
use insar_plan::geometry::{Formation, Pos};
use insar_plan::sca::run_sca;
use insar_plan::scenario::Scenario;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let model = Model::new(Scenario::default())?;
    let f = Formation::new(model.master_at(66.0), Pos::new(-30.0, 40.0));
    println!("speed cap from the coherence limit: {:.4} m/s", model.c6_cap(&f)?);
    let res = run_sca(&model, &f, &vec![0.2; model.n()])?;
    println!("track length by iteration: {:?}", res.history);
    println!("{} iterations, {} Newton steps", res.iterations, res.newton_steps);

    let s = DecisionState { formation: f, v: res.v, p_com: res.power.p_com };
    println!("energy used: {:.1} J / {:.1} J", model.energy(0, &s.v, &s.p_com[0]), model.sc.e_max[0]);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
