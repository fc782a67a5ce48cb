//! Steady shock polar in the original frame: incoming state `(m_inf, 0)` with unit density.
//!
//! The polar is parameterized by the shock angle `sigma` measured from the incoming flow.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{PmError, Result};
use crate::gas_model::{critical_speed, density_from_enthalpy};
use crate::roots::{bisect, golden_max, illinois};


/// Downstream state behind a steady oblique shock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub u: f64,
    pub v: f64,
    pub rho: f64,
    pub sigma: f64,
    pub deflection: f64,
}

impl PolarState {
    pub fn speed(&self) -> f64 {
        self.u.hypot(self.v)
    }
}

pub fn mach_angle(m_inf: f64) -> Result<f64> {
    if !(m_inf > 1.0 && m_inf.is_finite()) {
        return Err(PmError::Domain(format!("incoming Mach number must exceed 1, got {m_inf}")));
    }
    Ok((1.0 / m_inf).asin())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 1.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(PmError::Domain(format!("gamma must be >= 1, got {gamma}")))
    }
}

/// Compressive downstream normal velocity for upstream normal velocity `w1 > 1`.
///
/// Solves `rho(u) u = w1` with `i(rho) = (w1^2 - u^2)/2` on `(0, u_sonic)`.
pub(crate) fn normal_jump(w1: f64, gamma: f64) -> Result<(f64, f64)> {
    let u_sonic = if gamma == 1.0 { 1.0 } else { ((2.0 + (gamma - 1.0) * w1 * w1) / (gamma + 1.0)).sqrt() };
    let flux = |u: f64| density_from_enthalpy(0.5 * (w1 * w1 - u * u), gamma) * u - w1;
    let hi = u_sonic.min(w1);
    // Near the Mach angle the two roots merge; the sonic point is then the limit.
    // Bisection runs to float resolution: strong isothermal shocks have tiny u with huge rho.
    let f_hi = flux(hi);
    let u_n = if f_hi <= 0.0 && f_hi > -1e-13 * w1 { hi } else { bisect(flux, 0.0, hi, 0.0)? };
    let rho = density_from_enthalpy(0.5 * (w1 * w1 - u_n * u_n), gamma);
    Ok((u_n, rho))
}

/// State behind the shock at angle `sigma` in `(mu, pi/2]`.
pub fn polar_state(m_inf: f64, gamma: f64, sigma: f64) -> Result<PolarState> {
    check_gamma(gamma)?;
    let mu = mach_angle(m_inf)?;
    if !(sigma > mu && sigma <= FRAC_PI_2) {
        return Err(PmError::Domain(format!("shock angle {sigma} outside ({mu}, pi/2]")));
    }
    Ok(polar_state_unchecked(m_inf, gamma, sigma)?)
}

fn polar_state_unchecked(m_inf: f64, gamma: f64, sigma: f64) -> Result<PolarState> {
    let (s, c) = sigma.sin_cos();
    let w1 = m_inf * s;
    let tau = m_inf * c;
    let (u_n, rho) = normal_jump(w1, gamma)?;
    Ok(PolarState {
        u: u_n * s + tau * c,
        v: c * (w1 - u_n),
        rho,
        sigma,
        deflection: sigma - u_n.atan2(tau),
    })
}

fn deflection(m_inf: f64, gamma: f64, sigma: f64) -> f64 {
    polar_state_unchecked(m_inf, gamma, sigma).map(|p| p.deflection).unwrap_or(f64::NAN)
}

/// `n` samples uniformly spaced in `sigma` from the Mach angle to `pi/2`.
///
/// The first sample is the vanishing-strength limit `(m_inf, 0)` itself.
pub fn polar_curve(m_inf: f64, gamma: f64, n: usize) -> Result<Vec<PolarState>> {
    check_gamma(gamma)?;
    if n < 2 {
        return Err(PmError::Domain(format!("need at least 2 samples, got {n}")));
    }
    let mu = mach_angle(m_inf)?;
    let mut out = Vec::with_capacity(n);
    out.push(PolarState { u: m_inf, v: 0.0, rho: 1.0, sigma: mu, deflection: 0.0 });
    for k in 1..n {
        let sigma = if k == n - 1 { FRAC_PI_2 } else { mu + (FRAC_PI_2 - mu) * k as f64 / (n - 1) as f64 };
        out.push(polar_state_unchecked(m_inf, gamma, sigma)?);
    }
    Ok(out)
}

/// Shock angle and deflection at the detachment point (maximum deflection).
pub fn detachment(m_inf: f64, gamma: f64) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    let mu = mach_angle(m_inf)?;
    let (sigma, theta) = golden_max(|s| deflection(m_inf, gamma, s), mu, FRAC_PI_2, 1e-11);
    if !theta.is_finite() {
        return Err(PmError::Numerical(format!("deflection not finite near sigma = {sigma}")));
    }
    Ok((sigma, theta))
}

pub fn theta_detach(m_inf: f64, gamma: f64) -> Result<f64> {
    detachment(m_inf, gamma).map(|(_, t)| t)
}

/// Weak and strong downstream states on the wedge line `v = u tan(theta_w)`.
pub fn wedge_intersect(m_inf: f64, gamma: f64, theta_w: f64) -> Result<(PolarState, PolarState)> {
    if !(theta_w > 0.0) {
        return Err(PmError::Domain(format!("wedge angle must be positive, got {theta_w}")));
    }
    let mu = mach_angle(m_inf)?;
    let (sigma_d, theta_d) = detachment(m_inf, gamma)?;
    if theta_w >= theta_d {
        return Err(PmError::Detached { theta_w, theta_detach: theta_d });
    }
    let weak = weak_sigma(m_inf, gamma, theta_w, mu, sigma_d)?;
    let g = |s: f64| deflection(m_inf, gamma, s) - theta_w;
    let strong = bisect(g, sigma_d, FRAC_PI_2, 1e-16)?;
    Ok((polar_state_unchecked(m_inf, gamma, weak)?, polar_state_unchecked(m_inf, gamma, strong)?))
}

fn weak_sigma(m_inf: f64, gamma: f64, theta_w: f64, mu: f64, sigma_d: f64) -> Result<f64> {
    let g = |s: f64| if s <= mu { -theta_w } else { deflection(m_inf, gamma, s) - theta_w };
    illinois(g, mu, sigma_d, 1e-16)
}

/// Weak-branch state only; cheaper than [`wedge_intersect`].
pub fn weak_state(m_inf: f64, gamma: f64, theta_w: f64) -> Result<PolarState> {
    if !(theta_w > 0.0) {
        return Err(PmError::Domain(format!("wedge angle must be positive, got {theta_w}")));
    }
    let mu = mach_angle(m_inf)?;
    let (sigma_d, theta_d) = detachment(m_inf, gamma)?;
    if theta_w >= theta_d {
        return Err(PmError::Detached { theta_w, theta_detach: theta_d });
    }
    polar_state_unchecked(m_inf, gamma, weak_sigma(m_inf, gamma, theta_w, mu, sigma_d)?)
}

/// Wedge angle at which the weak-branch downstream speed equals [`critical_speed`].
pub fn theta_sonic(m_inf: f64, gamma: f64) -> Result<f64> {
    let q_star = critical_speed(m_inf, gamma)?;
    let mu = mach_angle(m_inf)?;
    let (sigma_d, _) = detachment(m_inf, gamma)?;
    // Speed decreases monotonically along the weak branch.
    let g = |s: f64| {
        if s <= mu {
            m_inf - q_star
        } else {
            polar_state_unchecked(m_inf, gamma, s).map(|p| p.speed() - q_star).unwrap_or(f64::NAN)
        }
    };
    let sigma_s = bisect(g, mu, sigma_d, 1e-16)?;
    if sigma_s <= mu {
        return Ok(0.0);
    }
    Ok(polar_state_unchecked(m_inf, gamma, sigma_s)?.deflection)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas_model::{enthalpy_raw, sound_speed_sq_raw};

    /// Independent oracle: compressive root of `rho(u) u = w1` by scanning then bisecting
    /// the mass-flux residual written with `rho^(gamma-1)` directly.
    fn oracle_normal(w1: f64, gamma: f64) -> f64 {
        let rho_of = |u: f64| {
            let i = 0.5 * (w1 * w1 - u * u);
            if gamma == 1.0 { i.exp() } else { (1.0 + (gamma - 1.0) * i).powf(1.0 / (gamma - 1.0)) }
        };
        let f = |u: f64| rho_of(u) * u - w1;
        let n = 4000;
        let mut prev = f(1e-9);
        for k in 1..=n {
            let u = w1 * k as f64 / n as f64;
            let cur = f(u);
            if prev < 0.0 && cur >= 0.0 {
                let (mut a, mut b) = (w1 * (k - 1) as f64 / n as f64, u);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if f(m) < 0.0 { a = m } else { b = m }
                }
                return 0.5 * (a + b);
            }
            prev = cur;
        }
        panic!("no compressive root")
    }

    fn check_state(p: &PolarState, m: f64, g: f64) {
        // Bernoulli and tangential continuity.
        let q2 = p.u * p.u + p.v * p.v;
        assert!((enthalpy_raw(p.rho, g) + 0.5 * q2 - 0.5 * m * m).abs() < 1e-10);
        if g > 1.0 {
            let lhs = sound_speed_sq_raw(p.rho, g);
            assert!((lhs - (1.0 + 0.5 * (g - 1.0) * (m * m - q2))).abs() < 1e-10);
        }
        let (s, c) = p.sigma.sin_cos();
        assert!((p.u * c + p.v * s - m * c).abs() < 1e-10);
        // Normal mass flux.
        let un = p.u * s - p.v * c;
        assert!((p.rho * un - m * s).abs() < 1e-10, "m={m} g={g} sigma={} un={un} res={}", p.sigma, p.rho * un - m * s);
    }

    #[test]
    fn normal_shock_golden() {
        let p = polar_state(2.0, 1.4, FRAC_PI_2).unwrap();
        let un = oracle_normal(2.0, 1.4);
        assert!((p.u - un).abs() < 1e-12);
        assert!((p.u - NORMAL_U_M2).abs() < 1e-12);
        assert!(p.v.abs() < 1e-15 && p.deflection.abs() < 1e-15);
        check_state(&p, 2.0, 1.4);
    }

    /// Frozen from the oracle above.
    const NORMAL_U_M2: f64 = 0.49263873977518178;

    #[test]
    fn mach_angle_limit() {
        let mu = mach_angle(2.0).unwrap();
        let p = polar_state(2.0, 1.4, mu + 1e-9).unwrap();
        assert!((p.u - 2.0).abs() < 1e-6 && p.v.abs() < 1e-6 && (p.rho - 1.0).abs() < 1e-6);
        assert!(p.deflection.abs() < 1e-6);
        assert!(polar_state(2.0, 1.4, mu).is_err());
        assert!(polar_state(2.0, 1.4, 1.6).is_err());
    }

    #[test]
    fn weak_shock_limit() {
        let p = polar_state(1.0001, 2.0, FRAC_PI_2).unwrap();
        assert!((p.rho - 1.0).abs() < 1e-3 && (p.u - 1.0001).abs() < 1e-3);
    }

    #[test]
    fn sampled_states_satisfy_jump_laws() {
        for &g in &[1.0, 1.4, 2.0] {
            for &m in &[1.2, 2.0, 5.0] {
                let mu = mach_angle(m).unwrap();
                for k in 1..=40 {
                    let sigma = mu + (FRAC_PI_2 - mu) * k as f64 / 40.0;
                    let p = polar_state(m, g, sigma).unwrap();
                    assert!(p.rho > 1.0);
                    check_state(&p, m, g);
                    let un = oracle_normal(m * sigma.sin(), g);
                    assert!((p.u * sigma.sin() - p.v * sigma.cos() - un).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn curve_endpoints_and_isothermal() {
        let c = polar_curve(2.0, 1.4, 2).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!((c[0].u, c[0].v), (2.0, 0.0));
        assert!((c[1].u - NORMAL_U_M2).abs() < 1e-12 && c[1].v.abs() < 1e-15);
        let c = polar_curve(2.0, 1.0, 51).unwrap();
        for p in &c {
            assert!(p.v >= 0.0);
            assert!((p.rho.ln() - 0.5 * (4.0 - p.u * p.u - p.v * p.v)).abs() < 1e-10);
        }
    }

    #[test]
    fn curve_max_matches_detachment() {
        let c = polar_curve(3.0, 1.4, 101).unwrap();
        let mx = c.iter().map(|p| p.deflection).fold(f64::MIN, f64::max);
        let td = theta_detach(3.0, 1.4).unwrap();
        assert!(mx <= td + 1e-12 && td - mx < 5e-3);
    }

    #[test]
    fn detachment_stable_and_monotone() {
        let (sd, td) = detachment(2.0, 1.4).unwrap();
        let mu = mach_angle(2.0).unwrap();
        let dense = (1..20000)
            .map(|k| deflection(2.0, 1.4, mu + (FRAC_PI_2 - mu) * k as f64 / 20000.0))
            .fold(f64::MIN, f64::max);
        assert!((td - dense).abs() < 1e-8);
        assert!(sd > mu && sd < FRAC_PI_2);
        assert!((td - THETA_DETACH_M2).abs() < 1e-10);
        assert!(theta_detach(5.0, 1.4).unwrap() > td);
        assert!(theta_detach(1.0 + 1e-6, 1.4).unwrap() < 1e-3);
    }

    /// Frozen from a 40-digit oracle (root of the deflection derivative).
    const THETA_DETACH_M2: f64 = 0.55537979111031209;

    #[test]
    fn unimodal_deflection() {
        let mu = mach_angle(2.0).unwrap();
        let d: Vec<f64> = (1..=1000).map(|k| deflection(2.0, 1.4, mu + (FRAC_PI_2 - mu) * k as f64 / 1000.0)).collect();
        let changes = d.windows(3).filter(|w| (w[1] - w[0]).signum() != (w[2] - w[1]).signum()).count();
        assert_eq!(changes, 1);
        assert!(d[999].abs() < 1e-14);
    }

    #[test]
    fn wedge_intersection_branches() {
        let td = theta_detach(2.0, 1.4).unwrap();
        let (w, s) = wedge_intersect(2.0, 1.4, 0.5 * td).unwrap();
        assert!(w.sigma < s.sigma && w.rho < s.rho);
        assert!((w.deflection - 0.5 * td).abs() < 1e-10 && (s.deflection - 0.5 * td).abs() < 1e-10);
        let (w, s) = wedge_intersect(2.0, 1.4, 1e-9).unwrap();
        assert!((w.u - 2.0).abs() < 1e-6 && (s.u - NORMAL_U_M2).abs() < 1e-6);
        assert!(matches!(wedge_intersect(2.0, 1.4, td + 1e-6), Err(PmError::Detached { .. })));
        assert!(wedge_intersect(2.0, 1.4, 0.0).is_err());
    }

    #[test]
    fn sonic_angle() {
        let ts = theta_sonic(2.0, 1.4).unwrap();
        let td = theta_detach(2.0, 1.4).unwrap();
        assert!(ts > 0.0 && ts < td);
        let (w, _) = wedge_intersect(2.0, 1.4, ts).unwrap();
        assert!((w.speed() - critical_speed(2.0, 1.4).unwrap()).abs() < 1e-8);
        assert!((ts - THETA_SONIC_M2).abs() < 1e-10);
        let (w, _) = wedge_intersect(2.0, 1.4, 0.9 * ts).unwrap();
        assert!(w.speed() > critical_speed(2.0, 1.4).unwrap());
        let ti = theta_sonic(2.0, 1.0).unwrap();
        let (w, _) = wedge_intersect(2.0, 1.0, ti).unwrap();
        assert!((w.speed() - 1.0).abs() < 1e-8);
        assert!((ti - THETA_SONIC_M2_ISO).abs() < 1e-10);
        assert!(theta_sonic(1.0 + 1e-6, 1.4).unwrap() < 1e-3);
    }

    /// Frozen from the same high-precision oracle.
    const THETA_SONIC_M2: f64 = 0.48617479742338756;
    const THETA_SONIC_M2_ISO: f64 = 0.68623313744126800;
}
