// Optimal master altitude by polyblock outer approximation, checked against a grid.
use insar_plan::constraints::Model;
use insar_plan::geometry::Pos;
use insar_plan::monotonic::{grid_search, polyblock_solve, transform_p1b};
use insar_plan::scenario::Scenario;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let model = Model::new(Scenario::default())?;
    let n = model.n();
    let prob = transform_p1b(&model, Pos::new(-30.0, 40.0), &vec![0.5; n], &vec![8.0; n])?;
    let sol = polyblock_solve(&prob, model.sc.algo.eps[0])?;
    println!(
        "z1 = {:.4} m, coverage {:.2} m^2 after {} vertices (converged {})",
        sol.z1, sol.coverage, sol.iterations, sol.converged
    );
    if let Some((z, c)) = grid_search(&prob, 0.01) {
        println!("grid: z1 = {z:.2} m, coverage {c:.2} m^2");
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
