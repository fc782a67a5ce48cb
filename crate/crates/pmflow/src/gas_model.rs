//! Thermodynamic closures for the scaled polytropic gas (isothermal at `gamma == 1`).
//!
//! Scaling: the incoming state has density 1 and sound speed 1, so the pressure
//! constant is `1/gamma` and never appears explicitly.

use serde::{Deserialize, Serialize};

use crate::error::{PmError, Result};

/// Gas exponent and incoming vertical pseudo-velocity in the wedge frame.
///
/// `B = v_inf^2 / 2` and `B0 = (gamma - 1) B + 1` are derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GasSetupRepr", into = "GasSetupRepr")]
pub struct GasSetup {
    gamma: f64,
    v_inf: f64,
}

#[derive(Serialize, Deserialize)]
struct GasSetupRepr {
    gamma: f64,
    v_inf: f64,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(rename = "B0", default, skip_serializing_if = "Option::is_none")]
    b0: Option<f64>,
}

impl TryFrom<GasSetupRepr> for GasSetup {
    type Error = PmError;
    fn try_from(r: GasSetupRepr) -> Result<Self> {
        // B and B0 in the document are informational; they are always recomputed.
        GasSetup::new(r.gamma, r.v_inf)
    }
}

impl From<GasSetup> for GasSetupRepr {
    fn from(s: GasSetup) -> Self {
        GasSetupRepr { gamma: s.gamma, v_inf: s.v_inf, b: Some(s.bernoulli()), b0: Some(s.b0()) }
    }
}

impl GasSetup {
    pub fn new(gamma: f64, v_inf: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 1.0) {
            return Err(PmError::Domain(format!("gamma must be >= 1, got {gamma}")));
        }
        if !(v_inf.is_finite() && v_inf > 0.0) {
            return Err(PmError::Domain(format!("v_inf must be > 0, got {v_inf}")));
        }
        Ok(GasSetup { gamma, v_inf })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn v_inf(&self) -> f64 {
        self.v_inf
    }

    /// Pseudo-Bernoulli constant of the incoming state.
    pub fn bernoulli(&self) -> f64 {
        0.5 * self.v_inf * self.v_inf
    }

    pub fn b0(&self) -> f64 {
        (self.gamma - 1.0) * self.bernoulli() + 1.0
    }

    pub fn is_isothermal(&self) -> bool {
        self.gamma == 1.0
    }

    /// Density from the pseudo-Bernoulli law without the error wrapper; NaN on cavitation.
    #[inline]
    pub fn density_raw(&self, speed_sq: f64, phi_val: f64) -> f64 {
        let e = self.bernoulli() - 0.5 * speed_sq - phi_val;
        if self.gamma == 1.0 {
            e.exp()
        } else {
            let gm1 = self.gamma - 1.0;
            let arg = gm1 * e;
            if arg <= -1.0 {
                f64::NAN
            } else {
                (arg.ln_1p() / gm1).exp()
            }
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(PmError::Domain(format!("density must be positive and finite, got {rho}")))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 1.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(PmError::Domain(format!("gamma must be >= 1, got {gamma}")))
    }
}

/// `i(rho)` without argument checks. Written with `exp_m1` so that `gamma -> 1+` is smooth.
#[inline]
pub fn enthalpy_raw(rho: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        rho.ln()
    } else {
        let gm1 = gamma - 1.0;
        (gm1 * rho.ln()).exp_m1() / gm1
    }
}

/// Inverse of [`enthalpy_raw`]; NaN when no positive density has this enthalpy.
#[inline]
pub fn density_from_enthalpy(i: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        i.exp()
    } else {
        let gm1 = gamma - 1.0;
        let a = gm1 * i;
        if a <= -1.0 {
            f64::NAN
        } else {
            (a.ln_1p() / gm1).exp()
        }
    }
}

/// Specific enthalpy `i(rho) = (rho^(gamma-1) - 1)/(gamma - 1)`, or `ln rho` when `gamma == 1`.
pub fn enthalpy(rho: f64, gamma: f64) -> Result<f64> {
    check_rho(rho)?;
    check_gamma(gamma)?;
    Ok(enthalpy_raw(rho, gamma))
}

/// `c^2 = rho^(gamma-1)`.
#[inline]
pub fn sound_speed_sq_raw(rho: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        1.0
    } else {
        ((gamma - 1.0) * rho.ln()).exp()
    }
}

pub fn sound_speed(rho: f64, gamma: f64) -> Result<f64> {
    check_rho(rho)?;
    check_gamma(gamma)?;
    if gamma == 1.0 {
        return Ok(1.0);
    }
    Ok((0.5 * (gamma - 1.0) * rho.ln()).exp())
}

/// Density `(B0 - (gamma-1)(|p|^2/2 + phi))^(1/(gamma-1))`, or `exp(B - |p|^2/2 - phi)` when isothermal.
pub fn density_from_pseudo_bernoulli(speed_sq: f64, phi_val: f64, setup: &GasSetup) -> Result<f64> {
    if !(speed_sq >= 0.0) || !phi_val.is_finite() {
        return Err(PmError::Domain(format!("invalid arguments speed_sq={speed_sq}, phi={phi_val}")));
    }
    if !setup.is_isothermal() {
        let argument = setup.b0() - (setup.gamma - 1.0) * (0.5 * speed_sq + phi_val);
        if argument <= 0.0 {
            return Err(PmError::Cavitation { argument });
        }
    }
    Ok(setup.density_raw(speed_sq, phi_val))
}

/// Steady speed at which the flow is exactly sonic, for incoming Mach number `m_inf`.
///
/// `m_inf = 1` is admitted as the degenerate limit (returns 1).
pub fn critical_speed(m_inf: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(m_inf >= 1.0 && m_inf.is_finite()) {
        return Err(PmError::Domain(format!("incoming Mach number must exceed 1, got {m_inf}")));
    }
    if gamma == 1.0 {
        return Ok(1.0);
    }
    Ok(((2.0 + (gamma - 1.0) * m_inf * m_inf) / (gamma + 1.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn enthalpy_examples() {
        assert_eq!(enthalpy(1.0, 1.4).unwrap(), 0.0);
        assert!(close(enthalpy(std::f64::consts::E, 1.0).unwrap(), 1.0, 1e-15));
        assert!(close(enthalpy(2.0, 2.0).unwrap(), 1.0, 1e-15));
        assert!(enthalpy(0.0, 1.4).is_err());
        assert!(enthalpy(-1.0, 1.0).is_err());
    }

    #[test]
    fn sound_speed_examples() {
        assert_eq!(sound_speed(1.0, 1.4).unwrap(), 1.0);
        assert!(close(sound_speed(4.0, 2.0).unwrap(), 2.0, 1e-15));
        assert_eq!(sound_speed(7.0, 1.0).unwrap(), 1.0);
        assert!(sound_speed(0.0, 2.0).is_err());
    }

    #[test]
    fn density_examples() {
        let s2 = GasSetup::new(2.0, 1e-300).unwrap();
        // B is negligible; argument is 1.
        assert!(close(density_from_pseudo_bernoulli(0.0, 0.0, &s2).unwrap(), 1.0, 1e-15));
        let s1 = GasSetup::new(1.0, 1e-300).unwrap();
        assert!(close(density_from_pseudo_bernoulli(0.0, 0.0, &s1).unwrap(), 1.0, 1e-15));
        let s = GasSetup::new(1.4, 0.5).unwrap();
        let v = 0.5;
        // Incoming state at the origin: |Dφ∞|² = v∞², φ∞ = 0.
        assert!(close(density_from_pseudo_bernoulli(v * v, 0.0, &s).unwrap(), 1.0, 1e-15));
        // With φ = -v∞²/2 the argument is B0 itself.
        let b0 = s.b0().powf(1.0 / 0.4);
        assert!(close(density_from_pseudo_bernoulli(v * v, -0.5 * v * v, &s).unwrap(), b0, 1e-14));
    }

    #[test]
    fn cavitation_is_structured() {
        let s = GasSetup::new(1.4, 0.5).unwrap();
        match density_from_pseudo_bernoulli(100.0, 0.0, &s) {
            Err(PmError::Cavitation { argument }) => assert!(argument <= 0.0),
            other => panic!("expected cavitation, got {other:?}"),
        }
    }

    #[test]
    fn critical_speed_examples() {
        assert!(close(critical_speed(1.0, 1.4).unwrap(), 1.0, 1e-15));
        assert_eq!(critical_speed(2.0, 1.0).unwrap(), 1.0);
        assert!(close(critical_speed(2.0, 1.4).unwrap(), 1.5f64.sqrt(), 1e-15));
        assert!(critical_speed(0.5, 1.4).is_err());
    }

    #[test]
    fn critical_speed_solves_sonic_system() {
        // q^2 = c^2(rho) and q^2/2 + i(rho) = m^2/2, solved for rho by bisection.
        let (m, g) = (2.0, 1.4);
        let f = |rho: f64| 0.5 * sound_speed_sq_raw(rho, g) + enthalpy_raw(rho, g) - 0.5 * m * m;
        let rho = crate::roots::bisect(f, 1e-6, 10.0, 1e-15).unwrap();
        let q = sound_speed_sq_raw(rho, g).sqrt();
        assert!(close(q, critical_speed(m, g).unwrap(), 1e-12));
    }

    #[test]
    fn setup_serde_recomputes_constants() {
        let s = GasSetup::new(1.4, 0.5).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert!(js.contains("\"B0\""));
        let tampered = js.replace("\"B0\":1.05", "\"B0\":7.0");
        let back: GasSetup = serde_json::from_str(&tampered).unwrap();
        assert_eq!(back.b0(), s.b0());
        assert!(serde_json::from_str::<GasSetup>("{\"gamma\":0.5,\"v_inf\":1}").is_err());
    }

    proptest! {
        #[test]
        fn c2_is_rho_di(rho in 0.05f64..20.0, gamma in 1.0f64..3.0) {
            let h = 1e-6 * rho;
            let di = (enthalpy_raw(rho + h, gamma) - enthalpy_raw(rho - h, gamma)) / (2.0 * h);
            let c2 = sound_speed_sq_raw(rho, gamma);
            prop_assert!((rho * di - c2).abs() / c2 < 1e-6);
        }

        #[test]
        fn density_decreasing(q2 in 0.0f64..2.0, phi in -1.0f64..0.5, gamma in 1.0f64..3.0, v in 0.1f64..2.0) {
            let s = GasSetup::new(gamma, v).unwrap();
            let d = 1e-6;
            if let (Ok(a), Ok(b), Ok(c)) = (
                density_from_pseudo_bernoulli(q2, phi, &s),
                density_from_pseudo_bernoulli(q2 + d, phi, &s),
                density_from_pseudo_bernoulli(q2, phi + d, &s),
            ) {
                prop_assert!(b < a);
                prop_assert!(c < a);
            }
        }

        #[test]
        fn isothermal_continuity(rho in 0.1f64..10.0, q2 in 0.0f64..1.0, phi in -0.5f64..0.5, v in 0.1f64..1.0) {
            let g = 1.0 + 1e-6;
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
            let e1 = enthalpy(rho, 1.0).unwrap();
            let eg = enthalpy(rho, g).unwrap();
            prop_assert!((e1 - eg).abs() < 1e-4 * e1.abs().max(1e-3));
            prop_assert!(rel(sound_speed(rho, g).unwrap(), sound_speed(rho, 1.0).unwrap()) < 1e-4);
            let a = density_from_pseudo_bernoulli(q2, phi, &GasSetup::new(1.0, v).unwrap()).unwrap();
            let b = density_from_pseudo_bernoulli(q2, phi, &GasSetup::new(g, v).unwrap()).unwrap();
            prop_assert!(rel(b, a) < 1e-4);
        }
    }
}
