// Loads the default scenario, applies a text override and prints derived constants.
use insar_plan::scenario::Scenario;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::parse_str("gamma_snr_min = 0.7\np_com_max = 12 dBW\n")?;
    let d = sc.derived();
    println!("gamma_snr_min  {}", sc.gamma_snr_min);
    println!("p_com_max      {:.3} W", sc.p_com_max);
    println!("hover power    {:.3} W", d.p_0 + d.p_i);
    println!("v_0            {:.4} m/s", d.v_0);
    println!("gamma_r        {:.6e}", d.gamma_r[0]);

    // the text form parses back to the same scenario
    assert_eq!(Scenario::parse_str(&sc.to_text())?, sc);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
