//! Drone-to-ground link budget, SAR raw-data rate, rotary-wing propulsion power and energy.
//!
//! ```
//! use insar_plan::comms::{throughput, Propulsion};
//! use insar_plan::scenario::Scenario;
//!
//! let sc = Scenario::default();
//! let prop = Propulsion::new(&sc);
//! assert!((prop.power(0.0) - 468.51).abs() < 0.01);
//! assert_eq!(throughput(0.0, 100.0, 1e9, 75.0), 0.0);
//! ```

use crate::error::{PlanError, Result};
use crate::geometry::Pos;
use crate::scenario::{Scenario, SPEED_OF_LIGHT};

/// 3-D distance between a drone at along-track position `y` and the ground station.
pub fn gs_distance(q: &Pos, y: f64, gs: [f64; 3]) -> f64 {
    let dx = q.x - gs[0];
    let dy = y - gs[1];
    let dz = q.z - gs[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Free-space throughput in bit/s.
pub fn throughput(p_com: f64, d: f64, b_c: f64, beta: f64) -> f64 {
    b_c * (1.0 + p_com * beta / (d * d)).log2()
}

/// Raw SAR data rate that must be offloaded, bit/s.
pub fn min_data_rate(z: f64, theta: f64, sc: &Scenario) -> Result<f64> {
    let half = sc.theta_3db / 2.0;
    let (hi, lo) = (theta + half, theta - half);
    if hi.abs() >= std::f64::consts::FRAC_PI_2 || lo.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(PlanError::Geometry(format!(
            "echo window undefined at look angle {theta:.6} rad"
        )));
    }
    let window = z / SPEED_OF_LIGHT * (1.0 / hi.cos() - 1.0 / lo.cos());
    Ok(sc.n_b as f64 * sc.b_rg * sc.prf * (window + sc.tau_p))
}

/// `2^(r / b_c) - 1`: the SNR a link needs to carry rate `r`.
pub fn required_snr(r: f64, b_c: f64) -> f64 {
    (r / b_c).exp2() - 1.0
}

/// Smallest transmit power that reaches rate `r` at distance `d`.
pub fn min_power(r: f64, d: f64, b_c: f64, beta: f64) -> f64 {
    required_snr(r, b_c) * d * d / beta
}

/// Rotary-wing propulsion model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propulsion {
    pub p_0: f64,
    pub p_i: f64,
    pub v_0: f64,
    pub u_tip: f64,
    /// `d_0 rho s A / 2`, the cubic parasite coefficient.
    pub parasite: f64,
}

impl Propulsion {
    pub fn new(sc: &Scenario) -> Self {
        let d = sc.derived();
        let r = &sc.rotor;
        Propulsion {
            p_0: d.p_0,
            p_i: d.p_i,
            v_0: d.v_0,
            u_tip: r.u_tip,
            parasite: 0.5 * r.d_0 * r.rho * r.solidity * r.disc_area,
        }
    }

    pub fn blade(&self, v: f64) -> f64 {
        self.p_0 * (1.0 + 3.0 * v * v / (self.u_tip * self.u_tip))
    }

    pub fn induced(&self, v: f64) -> f64 {
        let a = v * v / (2.0 * self.v_0 * self.v_0);
        // sqrt(1 + a^2) - a, written to avoid cancellation at high speed
        let inner = 1.0 / ((1.0 + a * a).sqrt() + a);
        self.p_i * inner.sqrt()
    }

    pub fn parasite_power(&self, v: f64) -> f64 {
        self.parasite * v * v * v
    }

    pub fn power(&self, v: f64) -> f64 {
        self.blade(v) + self.induced(v) + self.parasite_power(v)
    }
}

/// Per-slot power split and energy total of one drone.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub propulsion: Vec<f64>,
    pub radar: Vec<f64>,
    pub communication: Vec<f64>,
    pub total: f64,
}

pub fn energy_ledger(p_com: &[f64], v: &[f64], p_t: f64, delta_t: f64, prop: &Propulsion) -> EnergyLedger {
    assert_eq!(p_com.len(), v.len(), "power and velocity vectors differ in length");
    let propulsion: Vec<f64> = v.iter().map(|&x| prop.power(x)).collect();
    let radar = vec![p_t; v.len()];
    let total = delta_t
        * propulsion
            .iter()
            .zip(p_com)
            .map(|(pp, pc)| pp + p_t + pc)
            .sum::<f64>();
    EnergyLedger {
        propulsion,
        radar,
        communication: p_com.to_vec(),
        total,
    }
}

/// Mission energy of one drone, J.
pub fn total_energy(p_com: &[f64], v: &[f64], p_t: f64, delta_t: f64, prop: &Propulsion) -> f64 {
    assert_eq!(p_com.len(), v.len(), "power and velocity vectors differ in length");
    delta_t
        * v.iter()
            .zip(p_com)
            .map(|(&x, pc)| prop.power(x) + p_t + pc)
            .sum::<f64>()
}
