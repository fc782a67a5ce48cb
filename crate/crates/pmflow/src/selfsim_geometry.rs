//! Wedge-frame geometry for a parameter pair `(v_inf, beta)`.
//!
//! Frame: the wedge lies on the positive ξ-axis side `η = 0`, the incoming flow is
//! `φ∞ = -|ξ|²/2 - v∞ η`, the normal shock sits at `η = η̄` and the oblique shock
//! meets the wedge at angle `β`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{PmError, Result};
use crate::gas_model::{enthalpy_raw, sound_speed_sq_raw, GasSetup};
use crate::roots::{bisect, bisect_predicate, illinois, widen_upper};
use crate::shock_polar::{theta_sonic, weak_state};

const ROOT_TOL: f64 = 1e-15;

/// Pseudo-potential `-(ξ²+η²)/2 + uξ + vη + k` with its density and sound speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformState {
    pub u: f64,
    pub v: f64,
    pub k: f64,
    pub rho: f64,
    pub c: f64,
}

impl UniformState {
    pub fn new(u: f64, v: f64, k: f64, rho: f64, gamma: f64) -> Self {
        UniformState { u, v, k, rho, c: sound_speed_sq_raw(rho, gamma).sqrt() }
    }

    #[inline]
    pub fn phi(&self, xi: f64, eta: f64) -> f64 {
        -0.5 * (xi * xi + eta * eta) + self.u * xi + self.v * eta + self.k
    }

    #[inline]
    pub fn grad(&self, xi: f64, eta: f64) -> [f64; 2] {
        [self.u - xi, self.v - eta]
    }

    /// `i(rho) + (u²+v²)/2 + k - B`; zero for states consistent with the setup.
    pub fn bernoulli_residual(&self, setup: &GasSetup) -> f64 {
        enthalpy_raw(self.rho, setup.gamma()) + 0.5 * (self.u * self.u + self.v * self.v) + self.k
            - setup.bernoulli()
    }
}

/// Fixed geometric scaffold of the reflection configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub schema: String,
    pub setup: GasSetup,
    pub beta: f64,
    pub beta_c: f64,
    pub state_inf: UniformState,
    #[serde(rename = "state_O")]
    pub state_o: UniformState,
    #[serde(rename = "state_N")]
    pub state_n: UniformState,
    /// ξ-intercept of the oblique shock line; `None` at β = 0 where the line is absent.
    pub xi_tilde: Option<f64>,
    pub eta_bar: f64,
    #[serde(rename = "xi_N")]
    pub xi_n: f64,
    #[serde(rename = "P1")]
    pub p1: [f64; 2],
    #[serde(rename = "P2")]
    pub p2: [f64; 2],
    pub wedge: [f64; 2],
}

pub const GEOMETRY_SCHEMA: &str = "geometry/1";

/// Rotates by the wedge angle and shifts so the wedge lies on the ξ'-axis.
///
/// `speed` multiplies `cos θ_w` in the shift; the incoming speed `u∞` makes the
/// incoming potential free of a linear ξ' term.
pub fn rotate_to_wedge_frame(point: [f64; 2], theta_w: f64, speed: f64) -> [f64; 2] {
    let (s, c) = theta_w.sin_cos();
    [c * point[0] + s * point[1] - speed * c, -s * point[0] + c * point[1]]
}

pub fn rotate_from_wedge_frame(point: [f64; 2], theta_w: f64, speed: f64) -> [f64; 2] {
    let (s, c) = theta_w.sin_cos();
    let x = point[0] + speed * c;
    let y = point[1];
    [c * x - s * y, s * x + c * y]
}

/// Normal reflected state: `(rho_N, eta_bar, c_N, xi_N)`.
pub fn normal_state(setup: &GasSetup) -> Result<(f64, f64, f64, f64)> {
    let g = setup.gamma();
    let v = setup.v_inf();
    let f = |r: f64| enthalpy_raw(r, g) - 0.5 * v * v - v * v / (r - 1.0);
    let lo = 1.0 + f64::EPSILON;
    let hi = widen_upper(f, lo, 2.0)?;
    let rho_n = bisect(f, lo, hi, ROOT_TOL)?;
    let eta_bar = v / (rho_n - 1.0);
    let c_n = sound_speed_sq_raw(rho_n, g).sqrt();
    if !(eta_bar > 0.0 && eta_bar < c_n) {
        return Err(PmError::Invariant(format!("normal shock height {eta_bar} not in (0, c_N = {c_n})")));
    }
    let xi_n = ((c_n - eta_bar) * (c_n + eta_bar)).sqrt();
    Ok((rho_n, eta_bar, c_n, xi_n))
}

/// Scalar residual whose root is the oblique-state density (monotone increasing in ρ).
pub fn oblique_residual(setup: &GasSetup, beta: f64, rho: f64) -> f64 {
    let v = setup.v_inf();
    let t2 = beta.tan().powi(2);
    enthalpy_raw(rho, setup.gamma()) - 0.5 * v * v * (1.0 - t2) - v * v * (1.0 + rho * t2) / (rho - 1.0)
}

/// Oblique reflected state (with `v = 0`) and the ξ-intercept of its shock line.
///
/// At β = 0 the state equals the normal state and the intercept is `-∞`.
pub fn oblique_state(setup: &GasSetup, beta: f64) -> Result<(UniformState, f64)> {
    if !(beta >= 0.0 && beta < FRAC_PI_2) {
        return Err(PmError::Domain(format!("beta must lie in [0, pi/2), got {beta}")));
    }
    let g = setup.gamma();
    let v = setup.v_inf();
    if beta == 0.0 {
        let (rho_n, eta_bar, _, _) = normal_state(setup)?;
        return Ok((UniformState::new(0.0, 0.0, -v * eta_bar, rho_n, g), f64::NEG_INFINITY));
    }
    let f = |r: f64| oblique_residual(setup, beta, r);
    let lo = 1.0 + f64::EPSILON;
    let hi = widen_upper(f, lo, 2.0).map_err(|e| PmError::NoAttachedShock(e.to_string()))?;
    let rho = bisect(f, lo, hi, ROOT_TOL).map_err(|e| PmError::NoAttachedShock(e.to_string()))?;
    if !(rho > 1.0) {
        return Err(PmError::NoAttachedShock(format!("density {rho} is not compressive")));
    }
    let tb = beta.tan();
    let u = -v * tb;
    let xi_tilde = -v * (1.0 / tb + rho * tb) / (rho - 1.0);
    Ok((UniformState::new(u, 0.0, -u * xi_tilde, rho, g), xi_tilde))
}

/// Smaller-ξ intersection of the oblique shock line with the oblique sonic circle, if above the wedge.
pub fn p1_point(state_o: &UniformState, xi_tilde: f64, beta: f64) -> Option<[f64; 2]> {
    if beta <= 0.0 || !xi_tilde.is_finite() {
        return None;
    }
    let t = beta.tan();
    let t2 = t * t;
    let (u, c) = (state_o.u, state_o.c);
    let a = 1.0 + t2;
    let b = -2.0 * u - 2.0 * t2 * xi_tilde;
    let cc = (u - c) * (u + c) + t2 * xi_tilde * xi_tilde;
    let disc = b * b - 4.0 * a * cc;
    if !(disc >= 0.0) {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let r1 = q / a;
    let r2 = if q != 0.0 { cc / q } else { r1 };
    let xi = r1.min(r2);
    let eta = t * (xi - xi_tilde);
    (eta > 0.0).then_some([xi, eta])
}

/// Height of P1, or `None` when the oblique shock misses its sonic circle above the wedge.
pub fn eta_o(setup: &GasSetup, beta: f64) -> Option<f64> {
    let (st, xt) = oblique_state(setup, beta).ok()?;
    p1_point(&st, xt, beta).map(|p| p[1])
}

/// Supremum of β for which P1 exists above the wedge.
pub fn beta_c(setup: &GasSetup) -> Result<f64> {
    let ok = |b: f64| eta_o(setup, b).is_some();
    let top = FRAC_PI_2 * (1.0 - 1e-12);
    if ok(top) {
        return Ok(FRAC_PI_2);
    }
    let mut lo = 1e-8;
    if !ok(lo) {
        return Err(PmError::Numerical("P1 absent for arbitrarily small beta".into()));
    }
    // Coarse scan guards the bisection against a non-monotone predicate near π/2.
    for k in 1..64 {
        let b = top * k as f64 / 64.0;
        if ok(b) {
            lo = b;
        } else {
            break;
        }
    }
    Ok(bisect_predicate(ok, lo, (lo + top / 64.0).min(top), 1e-14))
}

impl Geometry {
    /// Builds and validates the geometry; β = 0 gives the normal-shock configuration.
    pub fn new(setup: GasSetup, beta: f64) -> Result<Geometry> {
        let bc = beta_c(&setup)?;
        if !(beta >= 0.0 && beta < bc) {
            return Err(PmError::Domain(format!("beta = {beta} outside [0, beta_c = {bc})")));
        }
        let g = setup.gamma();
        let v = setup.v_inf();
        let (rho_n, eta_bar, c_n, xi_n) = normal_state(&setup)?;
        let state_n = UniformState::new(0.0, 0.0, -v * eta_bar, rho_n, g);
        let state_inf = UniformState { u: 0.0, v: -v, k: 0.0, rho: 1.0, c: 1.0 };
        let (state_o, xi_tilde) = oblique_state(&setup, beta)?;
        let p1 = if beta == 0.0 {
            // Limit of P1 as β → 0+: the mirror image of P2 on the line η = η̄.
            [-xi_n, eta_bar]
        } else {
            p1_point(&state_o, xi_tilde, beta)
                .ok_or_else(|| PmError::Domain(format!("no P1 for beta = {beta}")))?
        };
        let geo = Geometry {
            schema: GEOMETRY_SCHEMA.into(),
            setup,
            beta,
            beta_c: bc,
            state_inf,
            state_o,
            state_n,
            xi_tilde: xi_tilde.is_finite().then_some(xi_tilde),
            eta_bar,
            xi_n,
            p1,
            p2: [xi_n, eta_bar],
            wedge: [state_o.u - state_o.c, c_n],
        };
        let worst = geo.invariant_residuals().into_iter().fold(0.0, |m: f64, (_, r)| m.max(r));
        if !(worst < 1e-10) {
            return Err(PmError::Invariant(format!("geometry residual {worst:e}")));
        }
        if !(eta_bar < c_n && geo.p1[1] > 0.0) {
            return Err(PmError::Invariant("corner points out of range".into()));
        }
        Ok(geo)
    }

    pub fn from_json(text: &str) -> Result<Geometry> {
        let g: Geometry = serde_json::from_str(text).map_err(|e| PmError::Config(e.to_string()))?;
        if g.schema != GEOMETRY_SCHEMA {
            return Err(PmError::Config(format!("unexpected schema tag {}", g.schema)));
        }
        Ok(g)
    }

    pub fn gamma(&self) -> f64 {
        self.setup.gamma()
    }

    pub fn v_inf(&self) -> f64 {
        self.setup.v_inf()
    }

    /// `max(φ_O, φ_N)`.
    #[inline]
    pub fn phi_beta(&self, xi: f64, eta: f64) -> f64 {
        self.state_o.phi(xi, eta).max(self.state_n.phi(xi, eta))
    }

    /// Named residuals of every defining relation; all vanish for a consistent geometry.
    pub fn invariant_residuals(&self) -> Vec<(&'static str, f64)> {
        let s = &self.setup;
        let v = s.v_inf();
        let (o, n, inf) = (&self.state_o, &self.state_n, &self.state_inf);
        let mut out = vec![
            ("bernoulli_inf", inf.bernoulli_residual(s).abs()),
            ("bernoulli_O", o.bernoulli_residual(s).abs()),
            ("bernoulli_N", n.bernoulli_residual(s).abs()),
            ("eta_bar", (self.eta_bar * (n.rho - 1.0) - v).abs()),
            ("normal_height", (enthalpy_raw(n.rho, s.gamma()) - 0.5 * v * v - self.eta_bar * v).abs()),
            ("p2_sonic", ((self.xi_n.powi(2) + self.eta_bar.powi(2)).sqrt() - n.c).abs()),
        ];
        // Normal shock: continuity and flux with ν = (0, 1).
        for xi in [-1.0, 0.0, 0.7] {
            out.push(("normal_jump", (inf.phi(xi, self.eta_bar) - n.phi(xi, self.eta_bar)).abs()));
            let fl = n.rho * n.grad(xi, self.eta_bar)[1] - inf.grad(xi, self.eta_bar)[1];
            out.push(("normal_flux", fl.abs()));
        }
        if let Some(xt) = self.xi_tilde {
            let (sb, cb) = self.beta.sin_cos();
            let nu = [-sb, cb];
            for s_par in [0.0, 0.5, 1.5] {
                let p = [xt + s_par * cb, s_par * sb];
                let scale = 1.0 + p[0].abs();
                out.push(("oblique_jump", (inf.phi(p[0], p[1]) - o.phi(p[0], p[1])).abs() / scale));
                let go = o.grad(p[0], p[1]);
                let gi = inf.grad(p[0], p[1]);
                let fl = o.rho * (go[0] * nu[0] + go[1] * nu[1]) - (gi[0] * nu[0] + gi[1] * nu[1]);
                out.push(("oblique_flux", fl.abs() / scale));
            }
            let p1 = self.p1;
            out.push(("p1_line", (p1[1] - self.beta.tan() * (p1[0] - xt)).abs()));
            out.push(("p1_circle", ((p1[0] - o.u).hypot(p1[1]) - o.c).abs()));
        }
        out
    }
}

/// `(u∞, θ_w)` → `(v∞, β)` through the weak branch of the steady polar.
pub fn map_p1_to_p2(u_inf: f64, theta_w: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(u_inf > 1.0 && u_inf.is_finite()) {
        return Err(PmError::Domain(format!("u_inf must exceed 1, got {u_inf}")));
    }
    let ts = theta_sonic(u_inf, gamma)?;
    if !(theta_w > 0.0 && theta_w < ts) {
        return Err(PmError::Domain(format!("theta_w = {theta_w} outside (0, theta_sonic = {ts})")));
    }
    let weak = weak_state(u_inf, gamma, theta_w)?;
    Ok((u_inf * theta_w.sin(), weak.sigma - theta_w))
}

fn beta_of_theta(v_inf: f64, theta: f64, gamma: f64) -> Option<f64> {
    let u_inf = v_inf / theta.sin();
    weak_state(u_inf, gamma, theta).ok().map(|w| w.sigma - theta)
}

/// Inverse of [`map_p1_to_p2`] by regula falsi in θ_w with `u∞ = v∞ / sin θ_w`.
pub fn map_p2_to_p1(v_inf: f64, beta: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(v_inf > 0.0 && beta > 0.0 && beta < FRAC_PI_2) {
        return Err(PmError::Domain(format!("(v_inf, beta) = ({v_inf}, {beta}) not admissible")));
    }
    // u∞ > 1 requires sin θ_w < v∞; past detachment β is treated as +∞.
    let theta_max = if v_inf >= 1.0 { FRAC_PI_2 } else { v_inf.asin() };
    let f = |t: f64| match beta_of_theta(v_inf, t, gamma) {
        Some(b) => b - beta,
        None => 1.0,
    };
    // β(θ) → 0 as θ → 0, but the polar overflows for very large u∞ (isothermal
    // density grows like e^{u²/2}); walk down from θ_max to the first θ below target.
    let none = || PmError::Domain(format!("no wedge angle reproduces beta = {beta}"));
    let top = theta_max * (1.0 - 1e-15);
    let k = (1..=60).find(|&k| f(theta_max * 0.5f64.powi(k)) < 0.0).ok_or_else(none)?;
    let hi = if k == 1 { top } else { theta_max * 0.5f64.powi(k - 1) };
    let theta = illinois(f, theta_max * 0.5f64.powi(k), hi, 1e-15).map_err(|_| none())?;
    let u_inf = v_inf / theta.sin();
    let ts = theta_sonic(u_inf, gamma)?;
    if !(theta < ts) {
        return Err(PmError::Domain(format!("beta = {beta} maps beyond the sonic wedge angle")));
    }
    Ok((u_inf, theta))
}

/// Steady state behind the oblique shock expressed in the wedge frame: `ũ_O` from the cross-frame relation.
pub fn u_tilde_from_polar(u_inf: f64, theta_w: f64, gamma: f64) -> Result<f64> {
    let w = weak_state(u_inf, gamma, theta_w)?;
    Ok(w.speed() - u_inf * theta_w.cos())
}

/// Elling–Liu quantity `F(β) = tan θ_O − tan θ∞` with its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllingLiu {
    pub f: f64,
    pub tan_theta_o: f64,
    pub tan_theta_inf: f64,
    /// Segment P1P2 is vertical; `f` is then `+∞`.
    pub vertical: bool,
}

/// Smaller positive slope of the tangents from `p` to the unit circle centred at `(0, -v∞)`.
pub fn tangent_slope(p: [f64; 2], v_inf: f64) -> Result<f64> {
    let (a, b) = (p[0], p[1] + v_inf);
    if a * a + b * b <= 1.0 {
        return Err(PmError::Invariant(format!("point ({}, {}) is inside the incoming sonic disk", p[0], p[1])));
    }
    // (a²-1) m² - 2ab m + b² - 1 = 0
    let qa = a * a - 1.0;
    let qb = -2.0 * a * b;
    let qc = b * b - 1.0;
    let roots: Vec<f64> = if qa.abs() < 1e-14 {
        vec![-qc / qb]
    } else {
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
        let q = -0.5 * (qb + qb.signum() * disc);
        vec![q / qa, qc / q]
    };
    roots
        .into_iter()
        .filter(|m| *m > 0.0 && m.is_finite())
        .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |x| x.min(m))))
        .ok_or_else(|| PmError::Invariant("no positive tangent slope from P2".into()))
}

pub fn elling_liu_f(setup: &GasSetup, beta: f64) -> Result<EllingLiu> {
    let geo = Geometry::new(*setup, beta)?;
    elling_liu_of(&geo)
}

pub fn elling_liu_of(geo: &Geometry) -> Result<EllingLiu> {
    let tan_inf = tangent_slope(geo.p2, geo.v_inf())?;
    let dx = geo.p2[0] - geo.p1[0];
    if dx == 0.0 {
        return Ok(EllingLiu { f: f64::INFINITY, tan_theta_o: f64::INFINITY, tan_theta_inf: tan_inf, vertical: true });
    }
    let tan_o = (geo.p2[1] - geo.p1[1]) / dx;
    Ok(EllingLiu { f: tan_o - tan_inf, tan_theta_o: tan_o, tan_theta_inf: tan_inf, vertical: false })
}

/// Whether segment `a b` meets the open disk of radius `r` centred at `c`.
pub fn segment_meets_open_disk(a: [f64; 2], b: [f64; 2], c: [f64; 2], r: f64) -> bool {
    segment_point_distance(a, b, c) < r
}

pub fn segment_point_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) };
    (a[0] + t * d[0] - p[0]).hypot(a[1] + t * d[1] - p[1])
}

pub fn segment_hits_incoming_sonic(setup: &GasSetup, beta: f64) -> Result<bool> {
    let geo = Geometry::new(*setup, beta)?;
    Ok(segment_meets_open_disk(geo.p1, geo.p2, [0.0, -setup.v_inf()], 1.0))
}

/// Number of β samples used to locate sign changes of F.
pub const BETA_HAT_SAMPLES: usize = 200;

/// Location of the unique sign change of F on `(0, β_c)`, if any.
pub fn beta_hat(setup: &GasSetup) -> Result<Option<f64>> {
    let bc = beta_c(setup)?;
    let f = |b: f64| elling_liu_f(setup, b).map(|e| e.f);
    let grid: Vec<f64> = (1..BETA_HAT_SAMPLES).map(|k| bc * k as f64 / BETA_HAT_SAMPLES as f64).collect();
    let vals = grid.iter().map(|&b| f(b)).collect::<Result<Vec<f64>>>()?;
    let changes: Vec<usize> = (1..vals.len()).filter(|&k| (vals[k - 1] > 0.0) != (vals[k] > 0.0)).collect();
    match changes.len() {
        0 => Ok(None),
        1 => {
            let k = changes[0];
            let g = |b: f64| f(b).unwrap_or(f64::NAN);
            Ok(Some(bisect(g, grid[k - 1], grid[k], 1e-14)?))
        }
        count => Err(PmError::NonUniqueSignChange { count }),
    }
}

/// `max_β F(v∞, β)` over the sampling grid, including a point next to β_c.
pub fn max_elling_liu(gamma: f64, v_inf: f64) -> Result<f64> {
    let setup = GasSetup::new(gamma, v_inf)?;
    let bc = beta_c(&setup)?;
    let mut best = f64::NEG_INFINITY;
    for k in 1..BETA_HAT_SAMPLES {
        let b = bc * k as f64 / BETA_HAT_SAMPLES as f64;
        best = best.max(elling_liu_f(&setup, b)?.f);
    }
    best = best.max(elling_liu_f(&setup, bc * (1.0 - 1e-9))?.f);
    Ok(best)
}

/// `sup { v∞ : max_β F > 0 }`, bisected on `(0, 1]` to `1e-6`.
pub fn v_star(gamma: f64) -> Result<f64> {
    let pos = |v: f64| max_elling_liu(gamma, v).map(|m| m > 0.0).unwrap_or(false);
    if pos(1.0) {
        return Ok(1.0);
    }
    let mut lo = 0.05;
    while !pos(lo) {
        lo *= 0.5;
        if lo < 1e-6 {
            return Err(PmError::Numerical("F never becomes positive".into()));
        }
    }
    Ok(bisect_predicate(pos, lo, 1.0, 1e-6))
}

/// `Φ(x, t) = t (φ(ξ, η) + (ξ² + η²)/2)` at `x = t (ξ, η)`.
pub fn reconstruct_time_potential(phi_value: f64, xi: f64, eta: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(PmError::Domain(format!("time must be positive, got {t}")));
    }
    Ok(t * (phi_value + 0.5 * (xi * xi + eta * eta)))
}

fn arc(center: [f64; 2], r: f64, from: [f64; 2], to: [f64; 2], samples: usize) -> Vec<[f64; 2]> {
    let a0 = (from[1] - center[1]).atan2(from[0] - center[0]);
    let a1 = (to[1] - center[1]).atan2(to[0] - center[0]);
    (0..samples)
        .map(|k| {
            let a = a0 + (a1 - a0) * k as f64 / (samples - 1) as f64;
            [center[0] + r * a.cos(), center[1] + r * a.sin()]
        })
        .collect()
}

fn segment(a: [f64; 2], b: [f64; 2]) -> Vec<[f64; 2]> {
    vec![a, b]
}

/// Named polylines of the fixed geometry: sonic arcs, straight shocks, wedge, chord, incoming sonic circle.
/// Curved pieces get `samples` points, straight ones their two endpoints.
pub fn polylines(geo: &Geometry, samples: usize) -> Vec<(&'static str, Vec<[f64; 2]>)> {
    let (o, n) = (&geo.state_o, &geo.state_n);
    let left = [geo.wedge[0], 0.0];
    let right = [geo.wedge[1], 0.0];
    let mut out = vec![
        ("sonic_O", arc([o.u, o.v], o.c, geo.p1, left, samples)),
        ("sonic_N", arc([n.u, n.v], n.c, geo.p2, right, samples)),
    ];
    if let Some(xt) = geo.xi_tilde {
        out.push(("shock_O", segment([xt, 0.0], geo.p1)));
    }
    // The reflected normal shock is unbounded; it is drawn one sonic radius past P2.
    out.push(("shock_N", segment(geo.p2, [geo.p2[0] + n.c, geo.p2[1]])));
    out.push(("wedge", segment(left, right)));
    out.push(("chord", segment(geo.p1, geo.p2)));
    let c = [0.0, -geo.v_inf()];
    let circle = (0..samples)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / (samples - 1) as f64;
            [c[0] + a.cos(), c[1] + a.sin()]
        })
        .collect();
    out.push(("sonic_inf", circle));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(g: f64, v: f64) -> GasSetup {
        GasSetup::new(g, v).unwrap()
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotate_to_wedge_frame([0.0, 0.0], 0.0, 1.0), [-1.0, 0.0]);
        let th: f64 = 0.3;
        let p = rotate_to_wedge_frame([2.0, 2.0 * th.tan()], th, 1.7);
        assert!(p[1].abs() < 1e-15);
        let q = rotate_from_wedge_frame(rotate_to_wedge_frame([0.3, -1.2], 0.7, 2.5), 0.7, 2.5);
        assert!((q[0] - 0.3).abs() < 1e-14 && (q[1] + 1.2).abs() < 1e-14);
    }

    #[test]
    fn rotation_removes_linear_term() {
        // φ∞ in the original frame: -|x|²/2 + u∞ ξ. After the shift the ξ' coefficient must vanish.
        let (u, th) = (2.0, 0.3);
        let phi = |p: [f64; 2]| -0.5 * (p[0] * p[0] + p[1] * p[1]) + u * p[0];
        let f = |q: [f64; 2]| {
            let p = rotate_from_wedge_frame(q, th, u);
            phi(p) + 0.5 * (q[0] * q[0] + q[1] * q[1])
        };
        let d_xi = f([1.0, 0.0]) - f([0.0, 0.0]);
        let d_eta = f([0.0, 1.0]) - f([0.0, 0.0]);
        assert!(d_xi.abs() < 1e-14);
        assert!((d_eta + u * th.sin()).abs() < 1e-14);
    }

    #[test]
    fn normal_state_golden() {
        let (r, e, c, x) = normal_state(&setup(1.4, 0.5)).unwrap();
        assert!((r - 1.617224928096484).abs() < 1e-12);
        assert!((e - 0.8100774567579364).abs() < 1e-12);
        assert!((c - 1.100915751250561).abs() < 1e-12);
        assert!((x - 0.7455132496503202).abs() < 1e-12);
        for v in [1e-3, 1e-2] {
            let (_, e, c, _) = normal_state(&setup(1.4, v)).unwrap();
            assert!(e > 0.0 && e < c);
        }
        let s = setup(1.0, 0.5);
        let (r, _, c, _) = normal_state(&s).unwrap();
        assert_eq!(c, 1.0);
        assert!((r.ln() - 0.125 - 0.25 / (r - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn oblique_beta_zero_is_normal() {
        let s = setup(1.4, 0.5);
        let (o, xt) = oblique_state(&s, 0.0).unwrap();
        let (r, e, _, _) = normal_state(&s).unwrap();
        assert_eq!(o.u, 0.0);
        assert_eq!(o.rho, r);
        assert!((o.k + 0.5 * e).abs() < 1e-15);
        assert!(xt == f64::NEG_INFINITY);
        for b in [1e-3, 1e-4] {
            let (ob, _) = oblique_state(&s, b).unwrap();
            assert!((ob.rho - o.rho).abs() < 1e-6 && (ob.k - o.k).abs() < 1e-6);
            // ũ_O = -v∞ tan β is first order in β by construction.
            assert_eq!(ob.u, -0.5 * b.tan());
        }
    }

    #[test]
    fn oblique_golden() {
        let s = setup(1.4, 0.5);
        let b = 0.3 * 0.7230110457888895;
        let (o, xt) = oblique_state(&s, b).unwrap();
        assert!((o.rho - 1.635411722567066).abs() < 1e-11);
        assert!((o.u + 0.1101850615722203).abs() < 1e-12);
        assert!((o.k + 0.42469333139195).abs() < 1e-11);
        assert!((xt + 3.854363970324477).abs() < 1e-10);
        assert!((o.c - 1.1033807969137606).abs() < 1e-12);
        let p = p1_point(&o, xt, b).unwrap();
        assert!((p[0] + 1.019708158249583).abs() < 1e-11 && (p[1] - 0.6246734503790486).abs() < 1e-11);
        assert!((p[1] - b.tan() * (p[0] - xt)).abs() < 1e-12);
        assert!(((p[0] - o.u).hypot(p[1]) - o.c).abs() < 1e-12);
    }

    #[test]
    fn p1_at_zero_is_none() {
        let s = setup(1.4, 0.5);
        let (o, xt) = oblique_state(&s, 0.0).unwrap();
        assert!(p1_point(&o, xt, 0.0).is_none());
    }

    #[test]
    fn beta_c_golden_and_boundary() {
        let s = setup(1.4, 0.5);
        let bc = beta_c(&s).unwrap();
        assert!((bc - 0.7230110457888895).abs() < 1e-10);
        assert!(eta_o(&s, bc - 1e-6).unwrap() > 0.0);
        assert!(eta_o(&s, bc + 1e-6).is_none());
        let e = eta_o(&s, bc * (1.0 - 1e-9)).unwrap();
        assert!(e < 1e-3);
    }

    #[test]
    fn geometry_invariants() {
        let s = setup(1.4, 0.5);
        let bc = beta_c(&s).unwrap();
        for b in [0.0, 0.5 * bc] {
            let g = Geometry::new(s, b).unwrap();
            for (name, r) in g.invariant_residuals() {
                assert!(r < 1e-10, "{name}: {r}");
            }
            assert!(g.eta_bar > 0.0 && g.eta_bar < g.state_n.c);
        }
        assert!(matches!(Geometry::new(s, bc + 0.01), Err(PmError::Domain(_))));
        let g0 = Geometry::new(s, 0.0).unwrap();
        assert_eq!(g0.state_o, g0.state_n);
        assert!(g0.xi_tilde.is_none());
    }

    #[test]
    fn geometry_json_roundtrip() {
        let g = Geometry::new(setup(1.4, 0.5), 0.2).unwrap();
        let js = serde_json::to_string(&g).unwrap();
        assert!(js.contains("\"schema\":\"geometry/1\""));
        let back = Geometry::from_json(&js).unwrap();
        assert_eq!(back, g);
        let g0 = Geometry::new(setup(1.4, 0.5), 0.0).unwrap();
        let js0 = serde_json::to_string(&g0).unwrap();
        assert!(js0.contains("\"xi_tilde\":null"));
        assert_eq!(Geometry::from_json(&js0).unwrap(), g0);
    }

    #[test]
    fn tangent_and_disk() {
        // From (-2, 0) to the unit circle at the origin the tangent slopes are ±1/√3.
        let m = tangent_slope([-2.0, 0.0], 0.0).unwrap();
        assert!((m - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!(tangent_slope([0.1, 0.1], 0.0).is_err());
        assert!(segment_meets_open_disk([-2.0, 0.5], [2.0, 0.5], [0.0, 0.0], 1.0));
        assert!(!segment_meets_open_disk([-2.0, 1.0], [2.0, 1.0], [0.0, 0.0], 1.0));
        assert!(segment_meets_open_disk([0.1, 0.1], [0.1, 0.1], [0.0, 0.0], 1.0));
    }

    #[test]
    fn elling_liu_fast_flow_never_hits() {
        let s = setup(1.4, 2.0);
        let bc = beta_c(&s).unwrap();
        for k in 1..20 {
            assert!(!segment_hits_incoming_sonic(&s, bc * k as f64 / 20.0).unwrap());
        }
        assert!(beta_hat(&s).unwrap().is_none());
    }

    #[test]
    fn time_potential() {
        assert_eq!(reconstruct_time_potential(0.0, 0.0, 0.0, 1.0).unwrap(), 0.0);
        assert!(reconstruct_time_potential(0.0, 0.0, 0.0, 0.0).is_err());
        // φ∞ = -|ξ|²/2 - v∞η gives Φ = -v∞ x₂ with no dependence on t.
        let v = 0.5;
        let (x, y, t) = (0.3, 0.8, 2.0);
        let (xi, eta) = (x / t, y / t);
        let phi = -0.5 * (xi * xi + eta * eta) - v * eta;
        assert!((reconstruct_time_potential(phi, xi, eta, t).unwrap() + v * y).abs() < 1e-15);
        let a = 2.0;
        let big = reconstruct_time_potential(phi, xi, eta, a * t).unwrap();
        assert!((big - a * reconstruct_time_potential(phi, xi, eta, t).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn inverse_map_at_small_normal_speed() {
        // Small v∞ puts the naive lower bracket at u∞ where the isothermal polar overflows.
        for (u, g) in [(1.1, 1.0), (1.2, 1.0), (1.1, 2.0)] {
            let theta = 0.05 * theta_sonic(u, g).unwrap();
            let (v, b) = map_p1_to_p2(u, theta, g).unwrap();
            let (u2, t2) = map_p2_to_p1(v, b, g).unwrap();
            assert!((u2 - u).abs() < 1e-10 && (t2 - theta).abs() < 1e-12, "({u2}, {t2})");
        }
    }

    #[test]
    fn polylines_lie_on_their_curves() {
        let geo = Geometry::new(GasSetup::new(1.4, 0.5).unwrap(), 0.3).unwrap();
        for (name, pts) in polylines(&geo, 33) {
            let (first, last) = (pts[0], pts[pts.len() - 1]);
            match name {
                "sonic_O" => {
                    let o = &geo.state_o;
                    for p in &pts {
                        assert!(((p[0] - o.u).hypot(p[1] - o.v) - o.c).abs() < 1e-12);
                    }
                    assert!((first[0] - geo.p1[0]).abs() < 1e-12 && last[1].abs() < 1e-12);
                }
                "sonic_N" => {
                    assert!((first[0] - geo.p2[0]).abs() < 1e-12 && (last[0] - geo.wedge[1]).abs() < 1e-12);
                }
                "chord" => assert_eq!(pts, vec![geo.p1, geo.p2]),
                _ => {}
            }
        }
    }
}
