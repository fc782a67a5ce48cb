use serde::{Deserialize, Serialize};

use super::mapping::DomainMapping;
use super::pchip::Pchip;
use super::SolverConfig;
use crate::error::{PmError, Result};
use crate::selfsim_geometry::Geometry;

/// Shock height `η = f(ξ)` on `[ξ_O, ξ_N]`, a monotone cubic through its knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ShockRepr", into = "ShockRepr")]
pub struct ShockCurve {
    interp: Pchip,
}

#[derive(Serialize, Deserialize)]
struct ShockRepr {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<ShockRepr> for ShockCurve {
    type Error = PmError;
    fn try_from(r: ShockRepr) -> Result<Self> {
        ShockCurve::new(&r.knots, &r.values)
    }
}

impl From<ShockCurve> for ShockRepr {
    fn from(s: ShockCurve) -> Self {
        ShockRepr { knots: s.knots().to_vec(), values: s.values().to_vec() }
    }
}

impl ShockCurve {
    pub fn new(knots: &[f64], values: &[f64]) -> Result<ShockCurve> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(PmError::Config("shock needs matching knots and values, at least two".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) || values.iter().any(|v| !v.is_finite()) {
            return Err(PmError::Config("shock knots must increase strictly and values be finite".into()));
        }
        Ok(ShockCurve { interp: Pchip::new(knots, values) })
    }

    /// Straight chord from P1 to P2; flat at β = 0.
    pub fn chord(geo: &Geometry, knots: &[f64]) -> Result<ShockCurve> {
        let (a, b) = (knots[0], knots[knots.len() - 1]);
        let vals: Vec<f64> = knots
            .iter()
            .map(|&x| geo.p1[1] + (geo.eta_bar - geo.p1[1]) * (x - a) / (b - a))
            .collect();
        ShockCurve::new(knots, &vals)
    }

    /// Affine transfer of the shape onto new knots and new end heights.
    pub fn rescaled(&self, geo: &Geometry, knots: &[f64]) -> Result<ShockCurve> {
        let v = self.values();
        if knots.len() != v.len() {
            return Err(PmError::Config("rescale needs equal knot counts".into()));
        }
        let (lo, hi) = (v[0], v[v.len() - 1]);
        let n = v.len() - 1;
        let vals: Vec<f64> = v
            .iter()
            .enumerate()
            .map(|(k, &y)| {
                let lam = if hi > lo + 1e-12 { (y - lo) / (hi - lo) } else { k as f64 / n as f64 };
                geo.p1[1] + lam * (geo.eta_bar - geo.p1[1])
            })
            .collect();
        ShockCurve::new(knots, &vals)
    }

    pub fn knots(&self) -> &[f64] {
        self.interp.knots()
    }

    pub fn values(&self) -> &[f64] {
        self.interp.values()
    }

    pub fn slopes(&self) -> &[f64] {
        self.interp.slopes()
    }

    /// `(f, f')` at ξ.
    pub fn eval(&self, xi: f64) -> (f64, f64) {
        self.interp.eval(xi)
    }
}

/// Result of one level-set update.
#[derive(Debug, Clone)]
pub struct ShockUpdate {
    pub shock: ShockCurve,
    /// `max |φ∞ - φ|` over the interior knots before the update.
    pub level_set_residual: f64,
    pub max_increment: f64,
}

/// Pool-adjacent-violators projection onto non-decreasing sequences.
pub(crate) fn pav(y: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (a, na) = blocks.pop().unwrap();
            let (b, nb) = blocks.pop().unwrap();
            blocks.push(((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb));
        }
    }
    blocks.into_iter().flat_map(|(v, n)| std::iter::repeat(v).take(n)).collect()
}

/// One damped Newton step on `φ∞(ξ_k, f_k) = φ_k` at the interior knots.
///
/// `phi` and `phi_t` are the field and its fibre derivative `∂φ/∂t` at the top
/// nodes, so `∂φ/∂η = φ_t / f`. Endpoints stay pinned to `lower` and `upper`.
#[allow(clippy::too_many_arguments)]
pub fn level_set_step(
    knots: &[f64],
    f: &[f64],
    phi: &[f64],
    phi_t: &[f64],
    v_inf: f64,
    relax: f64,
    lower: f64,
    upper: f64,
) -> Result<(Vec<f64>, f64, f64)> {
    let n = f.len();
    let mut out = f.to_vec();
    let mut res_max: f64 = 0.0;
    for k in 1..n - 1 {
        let (x, y) = (knots[k], f[k]);
        let res = -0.5 * (x * x + y * y) - v_inf * y - phi[k];
        let der = (-y - v_inf) - phi_t[k] / y;
        if !(der < 0.0) {
            return Err(PmError::MonotonicityBreakdown { xi: x, slope: der });
        }
        res_max = res_max.max(res.abs());
        out[k] = (y - relax * res / der).clamp(lower, upper);
    }
    out[0] = lower;
    out[n - 1] = upper;
    let mut out = pav(&out);
    out[0] = lower;
    out[n - 1] = upper;
    let inc = out.iter().zip(f).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok((out, res_max, inc))
}

/// Anderson mixing for the fixed-point map of the shock heights.
pub(crate) struct Anderson {
    depth: usize,
    xs: Vec<Vec<f64>>,
    fs: Vec<Vec<f64>>,
}

impl Anderson {
    pub(crate) fn new(depth: usize) -> Self {
        Anderson { depth, xs: Vec::new(), fs: Vec::new() }
    }

    /// Next iterate from `x` and its image `gx`, projected back to monotone heights in `[lo, hi]`.
    pub(crate) fn next(&mut self, x: &[f64], gx: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        let f: Vec<f64> = gx.iter().zip(x).map(|(g, x)| g - x).collect();
        self.xs.push(x.to_vec());
        self.fs.push(f.clone());
        if self.xs.len() > self.depth + 1 {
            self.xs.remove(0);
            self.fs.remove(0);
        }
        let m = self.xs.len() - 1;
        let mut out = gx.to_vec();
        if m > 0 {
            let df: Vec<Vec<f64>> = (0..m).map(|i| sub(&self.fs[i + 1], &self.fs[i])).collect();
            let dx: Vec<Vec<f64>> = (0..m).map(|i| sub(&self.xs[i + 1], &self.xs[i])).collect();
            let mut a = vec![vec![0.0; m]; m];
            let mut b = vec![0.0; m];
            for i in 0..m {
                for j in 0..m {
                    a[i][j] = dotv(&df[i], &df[j]);
                }
                b[i] = dotv(&df[i], &f);
            }
            let tr: f64 = (0..m).map(|i| a[i][i]).sum();
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += 1e-12 * tr + f64::MIN_POSITIVE;
            }
            if let Some(g) = solve_small(a, b) {
                for i in 0..m {
                    for k in 0..out.len() {
                        out[k] -= g[i] * (dx[i][k] + df[i][k]);
                    }
                }
            }
        }
        let n = out.len();
        for v in out.iter_mut() {
            *v = v.clamp(lo, hi);
        }
        out[0] = lo;
        out[n - 1] = hi;
        let mut out = pav(&out);
        out[0] = lo;
        out[n - 1] = hi;
        out
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(a, b)| a - b).collect()
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Gaussian elimination with partial pivoting for the small Anderson systems.
fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if !(a[p][c].abs() > 0.0) {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let m = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= m * a[c][k];
            }
            b[r] -= m * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Second-order one-sided `∂/∂t` at the top of column `i`.
pub(crate) fn top_t_derivative(map: &DomainMapping, phi: &[f64], i: usize) -> f64 {
    let nt = map.layout.n_t;
    let t = &map.t;
    let h1 = t[nt] - t[nt - 1];
    let h2 = t[nt - 1] - t[nt - 2];
    let c0 = (2.0 * h1 + h2) / (h1 * (h1 + h2));
    let c1 = -(h1 + h2) / (h1 * h2);
    let c2 = h1 / (h2 * (h1 + h2));
    c0 * phi[map.idx(i, nt)] + c1 * phi[map.idx(i, nt - 1)] + c2 * phi[map.idx(i, nt - 2)]
}

/// Moves the shock of `map` towards the level set `φ = φ∞` of the nodal field `phi`.
pub fn update_shock(geo: &Geometry, map: &DomainMapping, phi: &[f64], config: &SolverConfig) -> Result<ShockUpdate> {
    let cols = map.layout.shock_columns();
    let nt = map.layout.n_t;
    let top: Vec<f64> = cols.clone().map(|i| phi[map.idx(i, nt)]).collect();
    let top_t: Vec<f64> = cols.map(|i| top_t_derivative(map, phi, i)).collect();
    let (vals, res, inc) = level_set_step(
        map.shock.knots(),
        map.shock.values(),
        &top,
        &top_t,
        geo.v_inf(),
        config.relax_shock,
        geo.p1[1],
        geo.eta_bar,
    )?;
    Ok(ShockUpdate { shock: ShockCurve::new(map.shock.knots(), &vals)?, level_set_residual: res, max_increment: inc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn anderson_solves_linear_contraction_fast() {
        // G(x) = A x + b with a slowly contracting mode; Anderson reaches the fixed point quickly.
        let n = 6;
        let target: Vec<f64> = (0..n).map(|k| 0.5 + 0.04 * k as f64).collect();
        let g = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|k| {
                    if k == 0 || k == n - 1 {
                        target[k]
                    } else {
                        target[k] + 0.95 * (x[k] - target[k]) - 0.3 * (x[k - 1] - target[k - 1])
                    }
                })
                .collect()
        };
        let mut acc = Anderson::new(5);
        let mut x: Vec<f64> = (0..n).map(|k| 0.5 + 0.2 * k as f64 / (n - 1) as f64).collect();
        for _ in 0..25 {
            let gx = g(&x);
            x = acc.next(&x, &gx, 0.5, 0.7);
        }
        let err = x.iter().zip(&target).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn pav_examples() {
        assert_eq!(pav(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(pav(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(pav(&[0.0, 1.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn level_set_step_is_exact_for_matching_field() {
        // φ = φ∞ at the knots: the residual vanishes and nothing moves.
        let knots = [0.0, 0.1, 0.2, 0.3];
        let f = [0.5, 0.55, 0.6, 0.7];
        let v = 0.5;
        let phi: Vec<f64> = knots.iter().zip(&f).map(|(x, y)| -0.5 * (x * x + y * y) - v * y).collect();
        let phi_t: Vec<f64> = f.iter().map(|y| 0.1 * y).collect();
        let (out, res, inc) = level_set_step(&knots, &f, &phi, &phi_t, v, 0.5, 0.5, 0.7).unwrap();
        assert!(res < 1e-16 && inc < 1e-16);
        assert_eq!(out, f.to_vec());
    }

    #[test]
    fn one_newton_step_recovers_a_linear_level_set() {
        // φ∞ - φ = a(η - f₀(ξ)) with a < 0: a full step lands on f₀.
        let (a, v) = (-0.7, 0.5);
        let knots: Vec<f64> = (0..9).map(|k| -0.4 + 0.1 * k as f64).collect();
        let f0: Vec<f64> = knots.iter().map(|x| 0.6 + 0.2 * (x + 0.4) + 0.05 * (x + 0.4) * (x + 0.4)).collect();
        let f: Vec<f64> = f0.iter().enumerate().map(|(k, y)| y + 0.03 * (k as f64 * 1.3).sin()).collect();
        let phi: Vec<f64> =
            knots.iter().zip(&f).zip(&f0).map(|((x, y), y0)| -0.5 * (x * x + y * y) - v * y - a * (y - y0)).collect();
        let phi_t: Vec<f64> = f.iter().map(|y| y * (-y - v - a)).collect();
        let (lo, hi) = (f0[0], f0[8]);
        let mut g = f.clone();
        g[0] = lo;
        g[8] = hi;
        let (out, _, _) = level_set_step(&knots, &g, &phi, &phi_t, v, 1.0, lo, hi).unwrap();
        for (o, e) in out.iter().zip(&f0) {
            assert!((o - e).abs() < 1e-12, "{o} vs {e}");
        }
    }

    #[test]
    fn level_set_step_flags_breakdown() {
        let knots = [0.0, 0.1, 0.2];
        let f = [0.5, 0.6, 0.7];
        let phi = [0.0; 3];
        let phi_t = [-10.0; 3];
        let e = level_set_step(&knots, &f, &phi, &phi_t, 0.5, 0.5, 0.5, 0.7).unwrap_err();
        assert!(matches!(e, PmError::MonotonicityBreakdown { .. }));
    }

    #[test]
    fn shock_json_roundtrip() {
        let s = ShockCurve::new(&[0.0, 0.5, 1.0], &[0.2, 0.3, 0.5]).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ShockCurve>(&js).unwrap(), s);
        assert!(serde_json::from_str::<ShockCurve>("{\"knots\":[0,0],\"values\":[1,1]}").is_err());
    }

    proptest! {
        #[test]
        fn step_output_is_monotone_and_pinned(vals in proptest::collection::vec(0.5f64..0.7, 3..20), seed in 0.0f64..1.0) {
            let n = vals.len();
            let knots: Vec<f64> = (0..n).map(|k| k as f64 * 0.05).collect();
            let phi: Vec<f64> = (0..n).map(|k| -0.4 + 0.01 * ((k as f64 + seed) * 1.7).sin()).collect();
            let phi_t = vec![0.0; n];
            let (out, _, _) = level_set_step(&knots, &vals, &phi, &phi_t, 0.5, 0.5, 0.5, 0.7).unwrap();
            prop_assert_eq!(out[0], 0.5);
            prop_assert_eq!(out[n - 1], 0.7);
            for w in out.windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
        }
    }
}
