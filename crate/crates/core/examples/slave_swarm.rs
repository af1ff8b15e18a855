// Places the slave drone with the constrained swarm for a fixed master and velocity.
use insar_plan::constraints::Model;
use insar_plan::pso::run_pso;
use insar_plan::scenario::Scenario;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut sc = Scenario::default().desk_scale();
    sc.algo.pso_population = 60;
    sc.algo.pso_iterations = 30;
    let model = Model::new(sc)?;
    let n = model.n();
    let q1 = model.master_at(60.0);
    let ctx = model.slave_context(q1, &vec![0.5; n], &vec![8.0; n]);
    let res = run_pso(&model, &ctx, 7, None);
    println!("q2 = ({:.3}, {:.3}), feasible {}, fitness {:.2}", res.q2.x, res.q2.z, res.feasible(), res.fitness);
    println!("best fitness by iteration: {:?}", &res.history[..res.history.len().min(6)]);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
