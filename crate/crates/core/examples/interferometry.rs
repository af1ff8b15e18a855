// Swath, height of ambiguity and phase-error spread of a fixed two-drone formation.
use insar_plan::geometry::{slave_look_angle, usable_swath, Formation, Pos};
use insar_plan::insar::{delta_phi_90, height_of_ambiguity, relative_height_error};
use insar_plan::scenario::Scenario;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::default();
    let f = Formation::new(Pos::new(-80.0, 100.0), Pos::new(-80.0, 90.0));
    let t2 = slave_look_angle(&f.q2, sc.x_t)?;
    let swath = usable_swath(&f, sc.theta_1, t2, sc.theta_3db)?;
    let bl = f.baseline(sc.theta_1);
    let h_amb = height_of_ambiguity(sc.lambda, f.q1.dist(&Pos::new(sc.x_t, 0.0)), sc.theta_1, bl.b_perp);
    println!("theta_2 {:.4} deg, swath {:.3} m, b_perp {:.3} m, h_amb {:.4} m", t2.to_degrees(), swath, bl.b_perp, h_amb);

    for gamma in [0.5, 0.7, 0.9] {
        let dphi = delta_phi_90(gamma, sc.n_l as u32)?.value;
        println!("gamma {gamma}: dphi_90 {dphi:.5} rad, dh_90 {:.4} m", relative_height_error(h_amb, dphi));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
