//! Across-track geometry: baselines, slant ranges, look angles, swath overlap and coverage.
//!
//! Positions live in the across-track plane, `x` along ground range and `z` up.
//! The reference target sits at `(x_t, 0)`.
//!
//! ```
//! use insar_plan::geometry::{Formation, Pos};
//!
//! let f = Formation::new(Pos::new(-80.0, 100.0), Pos::new(-80.0, 90.0));
//! let bd = f.baseline(std::f64::consts::FRAC_PI_4);
//! assert!((bd.b - 10.0).abs() < 1e-12);
//! assert!((bd.b_perp - 50f64.sqrt()).abs() < 1e-12);
//! ```

use crate::error::{PlanError, Result};
use crate::scenario::Scenario;

/// A drone position in the across-track plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pos {
    pub x: f64,
    pub z: f64,
}

impl Pos {
    pub const fn new(x: f64, z: f64) -> Self {
        Pos { x, z }
    }

    pub fn dist(&self, o: &Pos) -> f64 {
        (self.x - o.x).hypot(self.z - o.z)
    }
}

/// Master (`q1`) and slave (`q2`) positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Formation {
    pub q1: Pos,
    pub q2: Pos,
}

/// Baseline and its split relative to the master's line of sight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baseline {
    pub b: f64,
    /// Magnitude of the component perpendicular to the master line of sight.
    pub b_perp: f64,
    /// Signed component along the master line of sight.
    pub b_par: f64,
    /// Tilt of the baseline against the horizontal, rad.
    pub alpha: f64,
}

/// How the slave antenna is steered.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Pointing {
    /// Beam centred on the reference target; the look angle follows the position.
    #[default]
    Target,
    /// Antenna fixed at the given look angle regardless of position.
    Fixed(f64),
}

impl Formation {
    pub const fn new(q1: Pos, q2: Pos) -> Self {
        Formation { q1, q2 }
    }

    pub fn baseline(&self, theta_1: f64) -> Baseline {
        baseline_components(self, theta_1)
    }
}

pub fn baseline_components(f: &Formation, theta_1: f64) -> Baseline {
    let dx = f.q2.x - f.q1.x;
    let dz = f.q2.z - f.q1.z;
    let b = dx.hypot(dz);
    if b == 0.0 {
        return Baseline { b: 0.0, b_perp: 0.0, b_par: 0.0, alpha: 0.0 };
    }
    let alpha = dz.atan2(dx);
    Baseline {
        b,
        b_perp: (b * (theta_1 - alpha).cos()).abs(),
        b_par: b * (theta_1 - alpha).sin(),
        alpha,
    }
}

pub fn slant_range(q: &Pos, x_t: f64) -> f64 {
    (q.x - x_t).hypot(q.z)
}

/// Ground-range position of the master that centres its beam on the target.
pub fn master_x_from_altitude(z1: f64, x_t: f64, theta_1: f64) -> f64 {
    x_t - z1 * theta_1.tan()
}

/// Look angle of a drone whose beam is centred on the target, measured from nadir.
pub fn slave_look_angle(q2: &Pos, x_t: f64) -> Result<f64> {
    if !(q2.z > 0.0) {
        return Err(PlanError::Geometry(format!("look angle needs z > 0, got z = {}", q2.z)));
    }
    Ok(((x_t - q2.x) / q2.z).atan())
}

pub fn theta_2(q2: &Pos, x_t: f64, pointing: Pointing) -> Result<f64> {
    match pointing {
        Pointing::Target => slave_look_angle(q2, x_t),
        Pointing::Fixed(t) => Ok(t),
    }
}

/// Near and far ground-range edges of a beam footprint.
pub fn footprint(q: &Pos, theta: f64, beamwidth: f64) -> Result<(f64, f64)> {
    let half = beamwidth / 2.0;
    let hi = theta + half;
    let lo = theta - half;
    if hi.abs() >= std::f64::consts::FRAC_PI_2 || lo.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(PlanError::Geometry(format!(
            "beam edge reaches the horizon (theta = {theta:.6} rad)"
        )));
    }
    Ok((q.x + q.z * lo.tan(), q.x + q.z * hi.tan()))
}

/// Overlap of both footprints, clamped at zero.
pub fn usable_swath(f: &Formation, theta_1: f64, theta_2: f64, beamwidth: f64) -> Result<f64> {
    let (n1, f1) = footprint(&f.q1, theta_1, beamwidth)?;
    let (n2, f2) = footprint(&f.q2, theta_2, beamwidth)?;
    Ok((f1.min(f2) - n1.max(n2)).max(0.0))
}

/// Along-track distance flown over the first `N - 1` slots.
pub fn track_length(v: &[f64], delta_t: f64) -> f64 {
    let n = v.len().saturating_sub(1);
    v[..n].iter().sum::<f64>() * delta_t
}

pub fn coverage(swath: f64, v: &[f64], delta_t: f64) -> f64 {
    swath * track_length(v, delta_t)
}

/// Along-track position at the start of every slot.
pub fn along_track(v: &[f64], delta_t: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    for vi in v {
        y.push(acc);
        acc += vi * delta_t;
    }
    y
}

/// Master placed on its line of sight at altitude `z1`.
pub fn master_at(z1: f64, sc: &Scenario) -> Pos {
    Pos::new(master_x_from_altitude(z1, sc.x_t, sc.theta_1), z1)
}

/// Coverage bound reached by a single master footprint at `z_max` flying at `v_max`.
pub fn coverage_upper_bound(sc: &Scenario) -> f64 {
    let q = master_at(sc.z_max, sc);
    let (near, far) = footprint(&q, sc.theta_1, sc.theta_3db).expect("validated scenario");
    (far - near) * (sc.n_slots - 1) as f64 * sc.v_max * sc.delta_t
}
