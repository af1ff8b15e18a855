//! Interferometric quality: SNR and baseline decorrelation, height of ambiguity,
//! multilook phase statistics and the 90% relative height error.
//!
//! ```
//! use insar_plan::insar::{delta_phi_90, phase_pdf};
//!
//! let pdf = phase_pdf(0.512, 16).unwrap();
//! assert!((pdf.mass() - 1.0).abs() < 1e-6);
//! let d = delta_phi_90(0.512, 16).unwrap();
//! assert!(d.value > 0.7 && d.value < 0.8 && !d.saturated);
//! ```

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use crate::error::{PlanError, Result};
use crate::special::{gamma, gamma_half_ratio, hyp2f1_b1_c_half};

/// Number of midpoint samples of the phase density on [-π, π].
pub const PDF_GRID: usize = 4096;

/// Radar SNR of one drone in one slot.
pub fn sar_snr(r: f64, v: f64, theta: f64, gamma_r: f64) -> Result<f64> {
    let s = theta.sin();
    if s == 0.0 {
        return Err(PlanError::Geometry("nadir-looking SAR has no SNR model".into()));
    }
    if r == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(gamma_r / (v * r.powi(3) * s))
}

/// Coherence loss from finite SNR of both channels.
pub fn snr_decorrelation(snr_1: f64, snr_2: f64) -> f64 {
    1.0 / ((1.0 + 1.0 / snr_1).sqrt() * (1.0 + 1.0 / snr_2).sqrt())
}

/// Baseline (spectral shift) decorrelation for look angles `theta_2`, `theta_1`.
///
/// Uses the magnitude of the look-angle difference, so the value is at most one
/// and equals one only for coincident look angles.
pub fn baseline_decorrelation(theta_2: f64, theta_1: f64, b_p: f64) -> f64 {
    let (s1, s2) = (theta_1.sin(), theta_2.sin());
    1.0 - 2.0 * (s2 - s1).abs() / (b_p * (s1 + s2))
}

/// Height of ambiguity, m. Infinite when `b_perp` is zero.
pub fn height_of_ambiguity(lambda: f64, r_1: f64, theta_1: f64, b_perp: f64) -> f64 {
    if b_perp == 0.0 {
        return f64::INFINITY;
    }
    lambda * r_1 * theta_1.sin() / b_perp
}

/// 90% point-to-point relative height error.
pub fn relative_height_error(h_amb: f64, dphi_90: f64) -> f64 {
    h_amb * dphi_90 / (2.0 * PI)
}

/// Multilook interferometric phase density at `phi`.
pub fn phase_density(phi: f64, gamma: f64, n_l: u32) -> Result<f64> {
    let g2 = gamma * gamma;
    let beta = gamma * phi.cos();
    let b2 = beta * beta;
    let l = n_l as f64;
    let base = (1.0 - g2).powf(l);
    let first = gamma_half_ratio(n_l) * base * beta / (2.0 * PI.sqrt() * (1.0 - b2).powf(l + 0.5));
    let second = base / (2.0 * PI) * hyp2f1_b1_c_half(l, b2)?;
    Ok(first + second)
}

/// Same density with the Gamma factors taken from the general [`gamma`] routine.
pub fn phase_density_general(phi: f64, gamma_c: f64, n_l: f64) -> Result<f64> {
    let g2 = gamma_c * gamma_c;
    let beta = gamma_c * phi.cos();
    let b2 = beta * beta;
    let base = (1.0 - g2).powf(n_l);
    let ratio = gamma(n_l + 0.5) / gamma(n_l);
    let first = ratio * base * beta / (2.0 * PI.sqrt() * (1.0 - b2).powf(n_l + 0.5));
    Ok(first + base / (2.0 * PI) * hyp2f1_b1_c_half(n_l, b2)?)
}

/// Phase density sampled at the midpoints of a uniform grid on [-π, π].
#[derive(Debug, Clone)]
pub struct PhasePdf {
    pub h: f64,
    pub values: Vec<f64>,
}

impl PhasePdf {
    pub fn phi(&self, k: usize) -> f64 {
        -PI + (k as f64 + 0.5) * self.h
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.h
    }

    /// Linear self-convolution `c[m] = h Σ p[j] p[m-j]`, sampled at `-2π + (m+1)h`.
    pub fn self_convolution(&self) -> Vec<f64> {
        let n = self.values.len();
        let p = &self.values;
        let mut c = vec![0.0; 2 * n - 1];
        for (m, cm) in c.iter_mut().enumerate() {
            let lo = m.saturating_sub(n - 1);
            let hi = m.min(n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += p[j] * p[m - j];
            }
            *cm = acc * self.h;
        }
        c
    }
}

pub fn phase_pdf(gamma: f64, n_l: u32) -> Result<PhasePdf> {
    phase_pdf_with_grid(gamma, n_l, PDF_GRID)
}

pub fn phase_pdf_with_grid(gamma: f64, n_l: u32, n: usize) -> Result<PhasePdf> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(PlanError::Numerical(format!("coherence {gamma} outside [0, 1)")));
    }
    if n_l == 0 {
        return Err(PlanError::Numerical("at least one look required".into()));
    }
    let h = 2.0 * PI / n as f64;
    let values = (0..n)
        .map(|k| phase_density(-PI + (k as f64 + 0.5) * h, gamma, n_l))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhasePdf { h, values })
}

/// Result of the 90% phase-error search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpread {
    pub value: f64,
    /// True when 90% of the mass is not reached inside [-2π, 2π].
    pub saturated: bool,
}

/// Half-width `x` with 90% of the phase-difference density inside [-x, x].
pub fn delta_phi_90(gamma: f64, n_l: u32) -> Result<PhaseSpread> {
    delta_phi_quantile(gamma, n_l, 0.9, PDF_GRID, 1e-10)
}

pub fn delta_phi_quantile(gamma: f64, n_l: u32, level: f64, grid: usize, tol: f64) -> Result<PhaseSpread> {
    let pdf = phase_pdf_with_grid(gamma, n_l, grid)?;
    let c = pdf.self_convolution();
    let h = pdf.h;
    // cum[m] is the mass of cells 0..m; cell m covers t_m ± h/2.
    let mut cum = Vec::with_capacity(c.len() + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    for v in &c {
        acc += v * h;
        cum.push(acc);
    }
    let start = -2.0 * PI + 0.5 * h;
    let mass_below = |t: f64| -> f64 {
        let u = (t - start) / h;
        if u <= 0.0 {
            return 0.0;
        }
        let k = u.floor() as usize;
        if k >= c.len() {
            return acc;
        }
        cum[k] + c[k] * h * (u - k as f64)
    };
    let inside = |x: f64| mass_below(x) - mass_below(-x);
    if inside(2.0 * PI) < level {
        return Ok(PhaseSpread { value: 2.0 * PI, saturated: true });
    }
    let (mut lo, mut hi) = (0.0, 2.0 * PI);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if inside(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PhaseSpread { value: 0.5 * (lo + hi), saturated: false })
}

fn cache() -> &'static RwLock<HashMap<(u64, u32), f64>> {
    static CACHE: OnceLock<RwLock<HashMap<(u64, u32), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Memoised [`delta_phi_90`] value; saturated results map to 2π.
pub fn delta_phi_90_cached(gamma: f64, n_l: u32) -> Result<f64> {
    let key = (gamma.to_bits(), n_l);
    if let Some(v) = cache().read().expect("cache lock").get(&key) {
        return Ok(*v);
    }
    let v = delta_phi_90(gamma, n_l)?.value;
    cache().write().expect("cache lock").insert(key, v);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_scalings() {
        let a = sar_snr(100.0, 2.0, 0.7, 1e6).unwrap();
        assert!((sar_snr(100.0, 4.0, 0.7, 1e6).unwrap() - a / 2.0).abs() < 1e-12 * a);
        assert!((sar_snr(200.0, 2.0, 0.7, 1e6).unwrap() - a / 8.0).abs() < 1e-12 * a);
        assert!(sar_snr(100.0, 2.0, 0.0, 1e6).is_err());
    }

    #[test]
    fn snr_decorrelation_limits() {
        assert_eq!(snr_decorrelation(f64::INFINITY, f64::INFINITY), 1.0);
        assert!((snr_decorrelation(1.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn baseline_decorrelation_values() {
        let t1 = std::f64::consts::FRAC_PI_4;
        assert_eq!(baseline_decorrelation(t1, t1, 1.2), 1.0);
        let t2 = (100.0f64 / 90.0).atan();
        let want = 0.958_416_825_334_119_4;
        assert!((baseline_decorrelation(t2, t1, 1.2) - want).abs() < 1e-12);
        // Below the master look angle the magnitude form matches the signed one.
        let t2 = 42f64.to_radians();
        let signed = (3.2 * t2.sin() - 0.8 * t1.sin()) / (1.2 * (t1.sin() + t2.sin()));
        assert!((baseline_decorrelation(t2, t1, 1.2) - signed).abs() < 1e-14);
    }

    #[test]
    fn hoa_reference() {
        let r1 = 20_000f64.sqrt();
        let h = height_of_ambiguity(0.12, r1, std::f64::consts::FRAC_PI_4, 50f64.sqrt());
        assert!((h - 1.697_056_274_847_714).abs() < 1e-12);
        assert!(height_of_ambiguity(0.12, r1, 0.7, 0.0).is_infinite());
        assert_eq!(relative_height_error(1.7, 2.0 * PI), 1.7);
    }

    #[test]
    fn uniform_at_zero_coherence() {
        let p = phase_pdf_with_grid(0.0, 4, 64).unwrap();
        for v in &p.values {
            assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-15);
        }
        assert!(phase_pdf(1.0, 4).is_err());
    }

    #[test]
    fn specialised_and_general_density_agree() {
        for &phi in &[-2.0, -0.3, 0.0, 0.9] {
            let a = phase_density(phi, 0.7, 16).unwrap();
            let b = phase_density_general(phi, 0.7, 16.0).unwrap();
            assert!((a / b - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn convolution_normalised_and_symmetric() {
        let p = phase_pdf_with_grid(0.6, 4, 512).unwrap();
        let c = p.self_convolution();
        let mass: f64 = c.iter().sum::<f64>() * p.h;
        assert!((mass - 1.0).abs() < 1e-5);
        let n = c.len();
        for m in 0..n / 2 {
            assert!((c[m] - c[n - 1 - m]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coherence_quantile_and_saturation() {
        let d = delta_phi_quantile(0.0, 1, 0.9, 256, 1e-9).unwrap();
        // Triangular density on [-2π, 2π]: 90% inside x = 2π(1 - sqrt(0.1)).
        assert!((d.value - 2.0 * PI * (1.0 - 0.1f64.sqrt())).abs() < 1e-3);
        assert!(!d.saturated);
        let d = delta_phi_quantile(0.0, 1, 1.5, 64, 1e-9).unwrap();
        assert!(d.saturated && d.value == 2.0 * PI);
    }
}
