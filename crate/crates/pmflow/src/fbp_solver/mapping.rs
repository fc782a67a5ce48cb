use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::shock::ShockCurve;
use crate::error::{PmError, Result};
use crate::selfsim_geometry::Geometry;

/// Column and row layout of the logical grid.
///
/// Columns are uniform within each of the three boundary pieces (O-arc, shock,
/// N-arc); the split is fixed once per solve so the layout is identical for every β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub n_s: usize,
    pub n_t: usize,
    pub n_left: usize,
    pub n_right: usize,
    pub top_clustering: f64,
}

impl GridLayout {
    /// Splits `n_s` columns in proportion to the boundary pieces of `geo`.
    pub fn for_geometry(geo: &Geometry, n_s: usize, n_t: usize, top_clustering: f64) -> Result<GridLayout> {
        let (xl, xo, xn, xr) = (geo.wedge[0], geo.p1[0], geo.xi_n, geo.wedge[1]);
        let len = xr - xl;
        let part = |a: f64| ((n_s as f64 * a / len).round() as usize).max(4);
        let layout = GridLayout { n_s, n_t, n_left: part(xo - xl), n_right: part(xr - xn), top_clustering };
        if n_s < layout.n_left + layout.n_right + 4 {
            return Err(PmError::Config(format!("n_s = {n_s} leaves fewer than 4 shock cells")));
        }
        Ok(layout)
    }

    pub fn n_shock(&self) -> usize {
        self.n_s - self.n_left - self.n_right
    }

    /// Column indices of the shock knots, P1 and P2 included.
    pub fn shock_columns(&self) -> Range<usize> {
        self.n_left..self.n_left + self.n_shock() + 1
    }

    pub fn n_nodes(&self) -> usize {
        (self.n_s + 1) * (self.n_t + 1)
    }

    /// Column abscissae for the corner, P1, P2 and corner positions of `geo`.
    pub fn columns(&self, geo: &Geometry) -> Vec<f64> {
        let mut xi = Vec::with_capacity(self.n_s + 1);
        let seg = |a: f64, b: f64, n: usize, xi: &mut Vec<f64>| {
            for k in 0..n {
                xi.push(a + (b - a) * k as f64 / n as f64);
            }
        };
        seg(geo.wedge[0], geo.p1[0], self.n_left, &mut xi);
        seg(geo.p1[0], geo.xi_n, self.n_shock(), &mut xi);
        seg(geo.xi_n, geo.wedge[1], self.n_right, &mut xi);
        xi.push(geo.wedge[1]);
        xi
    }

    /// Fibre parameters; the top spacing is `top_clustering` times the uniform one.
    pub fn rows(&self) -> Vec<f64> {
        let a = self.top_clustering;
        let n = self.n_t;
        let mut t: Vec<f64> = (0..=n)
            .map(|j| {
                let u = 1.0 - j as f64 / n as f64;
                1.0 - (a * u + (1.0 - a) * u * u)
            })
            .collect();
        t[0] = 0.0;
        t[n] = 1.0;
        t
    }
}

/// Map between the logical rectangle `(s, t) ∈ [0,1]²` and the curvilinear domain.
///
/// `ξ` is piecewise affine in `s` with breaks at P1 and P2, and `η = t·h(ξ)` where
/// `h` is the upper boundary: O-arc, shock, N-arc.
#[derive(Debug, Clone)]
pub struct DomainMapping {
    pub layout: GridLayout,
    pub xi: Vec<f64>,
    pub t: Vec<f64>,
    pub shock: ShockCurve,
    pub height: Vec<f64>,
    pub height_slope: Vec<f64>,
    pub center_o: f64,
    pub c_o: f64,
    pub c_n: f64,
    pub xi_o: f64,
    pub xi_n: f64,
}

fn arc(center: f64, radius: f64, x: f64) -> (f64, f64) {
    let h = ((radius - (x - center)) * (radius + (x - center))).max(0.0).sqrt();
    let d = if h > 0.0 { -(x - center) / h } else { f64::INFINITY.copysign(center - x) };
    (h, d)
}

pub fn map_domain(geo: &Geometry, shock: &ShockCurve, layout: &GridLayout) -> Result<DomainMapping> {
    let xi = layout.columns(geo);
    let knots = shock.knots();
    let cols = layout.shock_columns();
    if knots.len() != cols.len() || knots.iter().zip(&xi[cols]).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs())) {
        return Err(PmError::Invariant("shock knots do not match the grid columns".into()));
    }
    let v = shock.values();
    let pin = 1e-12 * (1.0 + geo.eta_bar);
    if (v[0] - geo.p1[1]).abs() > pin || (v[v.len() - 1] - geo.eta_bar).abs() > pin {
        return Err(PmError::Invariant("shock endpoints are not pinned to P1 and P2".into()));
    }
    if v.iter().any(|&y| !(y > 0.0)) {
        return Err(PmError::Invariant("shock touches the wedge".into()));
    }
    let mut map = DomainMapping {
        layout: *layout,
        t: layout.rows(),
        shock: shock.clone(),
        height: Vec::new(),
        height_slope: Vec::new(),
        center_o: geo.state_o.u,
        c_o: geo.state_o.c,
        c_n: geo.state_n.c,
        xi_o: geo.p1[0],
        xi_n: geo.xi_n,
        xi,
    };
    let (h, d): (Vec<f64>, Vec<f64>) = (0..=layout.n_s).map(|i| map.column_top(i)).unzip();
    map.height = h;
    map.height_slope = d;
    Ok(map)
}

impl DomainMapping {
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.layout.n_t + 1) + j
    }

    /// Upper boundary height and slope at ξ.
    pub fn top(&self, xi: f64) -> (f64, f64) {
        if xi <= self.xi_o {
            arc(self.center_o, self.c_o, xi)
        } else if xi >= self.xi_n {
            arc(0.0, self.c_n, xi)
        } else {
            self.shock.eval(xi)
        }
    }

    /// Height and slope at column `i`; shock columns use the shock's own values and slopes.
    fn column_top(&self, i: usize) -> (f64, f64) {
        let cols = self.layout.shock_columns();
        if cols.contains(&i) {
            let k = i - cols.start;
            (self.shock.values()[k], self.shock.slopes()[k])
        } else {
            self.top(self.xi[i])
        }
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.xi[i], self.t[j] * self.height[i]]
    }

    /// Logical `s` of column `i`.
    pub fn s_of_column(&self, i: usize) -> f64 {
        i as f64 / self.layout.n_s as f64
    }

    pub fn from_logical(&self, s: f64, t: f64) -> [f64; 2] {
        let pos = (s * self.layout.n_s as f64).clamp(0.0, self.layout.n_s as f64);
        let i = (pos.floor() as usize).min(self.layout.n_s - 1);
        let a = pos - i as f64;
        let xi = self.xi[i] + a * (self.xi[i + 1] - self.xi[i]);
        [xi, t * self.top(xi).0]
    }

    /// Inverse of [`from_logical`](Self::from_logical); `None` outside the closed domain.
    pub fn to_logical(&self, xi: f64, eta: f64) -> Option<[f64; 2]> {
        let n = self.layout.n_s;
        if !(xi >= self.xi[0] && xi <= self.xi[n]) || eta < 0.0 {
            return None;
        }
        let i = match self.xi.binary_search_by(|p| p.partial_cmp(&xi).unwrap()) {
            Ok(k) => k.min(n - 1),
            Err(k) => k - 1,
        };
        let s = (i as f64 + (xi - self.xi[i]) / (self.xi[i + 1] - self.xi[i])) / n as f64;
        let h = self.top(xi).0;
        if eta > h * (1.0 + 1e-14) {
            return None;
        }
        let t = if h > 0.0 { (eta / h).min(1.0) } else { 0.0 };
        Some([s, t])
    }
}
