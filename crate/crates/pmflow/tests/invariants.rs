//! Property tests of the public model invariants over random admissible inputs.

use std::f64::consts::FRAC_PI_2;

use pmflow::gas_model::{density_from_pseudo_bernoulli, enthalpy, sound_speed, GasSetup};
use pmflow::selfsim_geometry::{beta_c, eta_o, map_p1_to_p2, map_p2_to_p1, Geometry, UniformState};
use pmflow::shock_polar::{detachment, polar_state, theta_sonic, wedge_intersect};
use pmflow::verify::CheckReport;
use proptest::prelude::*;

fn gamma() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), 1.0f64..2.5]
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

/// Pseudo-Bernoulli residual computed from the raw definitions, not the library helper.
fn bernoulli_gap(st: &UniformState, setup: &GasSetup) -> f64 {
    let i = enthalpy(st.rho, setup.gamma()).unwrap();
    i + 0.5 * (st.u * st.u + st.v * st.v) + st.k - 0.5 * setup.v_inf() * setup.v_inf()
}

fn check_state(st: &UniformState, setup: &GasSetup) -> Result<(), TestCaseError> {
    let g = setup.gamma();
    prop_assert!(st.rho > 0.0);
    prop_assert!((st.c - st.rho.powf(0.5 * (g - 1.0))).abs() <= 1e-14 * st.c);
    prop_assert!(bernoulli_gap(st, setup).abs() < 1e-12 * (1.0 + st.k.abs()));
    // |Dφ| = c on the sonic circle, sampled at several angles.
    for a in [0.0, 1.0, 2.5, 4.0] {
        let (xi, eta) = (st.u + st.c * f64::cos(a), st.v + st.c * f64::sin(a));
        let d = st.grad(xi, eta);
        prop_assert!((d[0].hypot(d[1]) - st.c).abs() < 1e-13 * (1.0 + st.c));
    }
    Ok(())
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn density_decreases_in_speed_and_potential(
        g in gamma(), v in 0.05f64..2.0, q in 0.0f64..1.0, phi in -0.5f64..0.2, dq in 1e-3f64..0.1,
    ) {
        let s = GasSetup::new(g, v).unwrap();
        let b0 = density_from_pseudo_bernoulli(q, phi, &s);
        let bq = density_from_pseudo_bernoulli(q + dq, phi, &s);
        let bp = density_from_pseudo_bernoulli(q, phi + dq, &s);
        if let (Ok(r0), Ok(rq), Ok(rp)) = (b0, bq, bp) {
            prop_assert!(rq < r0 && rp < r0);
        }
    }

    #[test]
    fn near_isothermal_closures_approach_the_isothermal_branch(rho in 0.2f64..5.0, q in 0.0f64..0.5, phi in -0.2f64..0.1) {
        let g = 1.0 + 1e-6;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-3);
        prop_assert!((enthalpy(rho, g).unwrap() - enthalpy(rho, 1.0).unwrap()).abs() < 1e-4 * (1.0 + rho.ln().abs()));
        prop_assert!(rel(sound_speed(rho, g).unwrap(), sound_speed(rho, 1.0).unwrap()) < 1e-4);
        let near = density_from_pseudo_bernoulli(q, phi, &GasSetup::new(g, 0.5).unwrap()).unwrap();
        let iso = density_from_pseudo_bernoulli(q, phi, &GasSetup::new(1.0, 0.5).unwrap()).unwrap();
        prop_assert!(rel(near, iso) < 1e-4);
    }

    #[test]
    fn polar_states_are_compressive_and_consistent(g in gamma(), m in 1.1f64..5.0, frac in 0.01f64..1.0) {
        let mu = (1.0 / m).asin();
        let sigma = mu + (FRAC_PI_2 - mu) * frac;
        let p = polar_state(m, g, sigma).unwrap();
        prop_assert!(p.rho > 1.0);
        // Bernoulli: i(ρ) = (M² - |q|²)/2.
        let i = enthalpy(p.rho, g).unwrap();
        prop_assert!((i - 0.5 * (m * m - p.u * p.u - p.v * p.v)).abs() < 1e-10 * (1.0 + i.abs()));
        // Tangential continuity and normal mass flux across the shock line.
        let (s, c) = sigma.sin_cos();
        prop_assert!((p.u * c + p.v * s - m * c).abs() < 1e-10 * m);
        prop_assert!((p.rho * (p.u * s - p.v * c) - m * s).abs() < 1e-10 * m * p.rho);
    }

    #[test]
    fn weak_branch_has_the_smaller_shock_angle(g in gamma(), m in 1.1f64..5.0, frac in 0.02f64..0.98) {
        let (_, td) = detachment(m, g).unwrap();
        let (weak, strong) = wedge_intersect(m, g, frac * td).unwrap();
        prop_assert!(weak.sigma < strong.sigma);
        prop_assert!((weak.deflection - frac * td).abs() < 1e-9);
        prop_assert!((strong.deflection - frac * td).abs() < 1e-9);
    }

    #[test]
    fn deflection_is_unimodal(g in gamma(), m in 1.1f64..5.0) {
        let mu = (1.0 / m).asin();
        let d: Vec<f64> = (1..1000)
            .map(|k| polar_state(m, g, mu + (FRAC_PI_2 - mu) * k as f64 / 999.0).unwrap().deflection)
            .collect();
        let peak = d.iter().enumerate().fold(0, |b, (k, &x)| if x > d[b] { k } else { b });
        prop_assert!(d[..=peak].windows(2).all(|w| w[1] >= w[0] - 1e-14));
        prop_assert!(d[peak..].windows(2).all(|w| w[1] <= w[0] + 1e-14));
        // At σ ≈ π/2 in floating point the deflection is m·cos σ / u_n, tiny but not zero.
        let end = polar_state(m, g, mu + (FRAC_PI_2 - mu) * 999.0 / 999.0).unwrap();
        prop_assert!(d[998].abs() <= 2.0 * m * end.sigma.cos() / end.u + 1e-15);
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn geometry_satisfies_its_defining_relations(g in gamma(), v in 0.1f64..2.0, frac in 0.0f64..0.95) {
        let s = GasSetup::new(g, v).unwrap();
        let geo = Geometry::new(s, frac * beta_c(&s).unwrap()).unwrap();
        for st in [&geo.state_inf, &geo.state_o, &geo.state_n] {
            check_state(st, &s)?;
        }
        let n = &geo.state_n;
        prop_assert!(geo.eta_bar > 0.0 && geo.eta_bar < n.c);
        prop_assert!((geo.eta_bar * (n.rho - 1.0) - v).abs() < 1e-10);
        prop_assert!((geo.p2[0].hypot(geo.p2[1]) - n.c).abs() < 1e-12);
        prop_assert!(geo.p1[1] > 0.0);
        if let Some(xt) = geo.xi_tilde {
            let o = &geo.state_o;
            let t = geo.beta.tan();
            // S_O is the line where φ∞ = φ_O, and P1 is its left crossing of the O sonic circle.
            for xi in [xt, xt + 0.3, xt + 1.0] {
                let eta = t * (xi - xt);
                let jump = geo.state_inf.phi(xi, eta) - o.phi(xi, eta);
                prop_assert!(jump.abs() < 1e-10 * (1.0 + xi.abs()));
            }
            prop_assert!((geo.p1[1] - t * (geo.p1[0] - xt)).abs() < 1e-10);
            prop_assert!(((geo.p1[0] - o.u).hypot(geo.p1[1]) - o.c).abs() < 1e-10);
            // Vieta: the two crossings sum to 2(u_O + t² ξ̃)/(1 + t²).
            let other = 2.0 * (o.u + t * t * xt) / (1.0 + t * t) - geo.p1[0];
            prop_assert!(geo.p1[0] <= other + 1e-12);
        }
    }

    #[test]
    fn eta_o_decreases_in_beta(g in gamma(), v in 0.1f64..2.0) {
        let s = GasSetup::new(g, v).unwrap();
        let bc = beta_c(&s).unwrap();
        let h: Vec<f64> = (1..=50).map(|k| eta_o(&s, bc * k as f64 / 51.0).unwrap()).collect();
        prop_assert!(h.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn frames_map_onto_each_other(g in prop_oneof![Just(1.0), Just(1.4), 1.0f64..2.0], u in 1.1f64..5.0, frac in 0.02f64..0.98) {
        let theta = frac * theta_sonic(u, g).unwrap();
        let (v, beta) = map_p1_to_p2(u, theta, g).unwrap();
        let (u2, t2) = map_p2_to_p1(v, beta, g).unwrap();
        prop_assert!((u2 - u).abs() < 1e-8 && (t2 - theta).abs() < 1e-8);
    }

    #[test]
    fn check_passes_exactly_within_tolerance(worst in -1.0f64..1.0, tol in 0.0f64..0.5) {
        let r = CheckReport::new("probe", worst, tol, None, "");
        prop_assert_eq!(r.passed, worst <= tol);
    }
}
