// Rotor power curve, flight energy and offloading power for one drone.
use insar_plan::comms::{min_power, throughput, total_energy, Propulsion};
use insar_plan::scenario::Scenario;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::default();
    let prop = Propulsion::new(&sc);
    for v in [0.0, 5.0, 10.0, 15.0, 20.0] {
        println!("v = {v:>4} m/s  power {:>8.2} W", prop.power(v));
    }

    let n = sc.n_slots;
    let e = total_energy(&vec![1.0; n], &vec![4.0; n], sc.p_t[0], sc.delta_t, &prop);
    println!("energy at 4 m/s and 1 W link: {e:.1} J of {:.1} J", sc.e_max[0]);

    let d = 300.0;
    let r = throughput(sc.p_com_max, d, sc.b_c[0], sc.beta_c[0]);
    let p = min_power(0.5 * r, d, sc.b_c[0], sc.beta_c[0]);
    println!("link at {d} m: {:.3e} bit/s at full power; half of it needs {p:.4} W", r);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
