use super::elliptic::reference;
use super::mapping::DomainMapping;
use crate::gas_model::sound_speed_sq_raw;
use crate::selfsim_geometry::Geometry;

/// Derivative at `at` of the quadratic through three points.
fn d3(x: [f64; 3], f: [f64; 3], at: f64) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        s += f[a] * ((at - x[b]) + (at - x[c])) / ((x[a] - x[b]) * (x[a] - x[c]));
    }
    s
}

fn stencil(k: usize, n: usize) -> [usize; 3] {
    if k == 0 {
        [0, 1, 2]
    } else if k == n {
        [n - 2, n - 1, n]
    } else {
        [k - 1, k, k + 1]
    }
}

/// Second-order `Dφ` at node `(i, j)` from nodal values of `φ`.
///
/// The smooth reference part is differentiated exactly; the remainder goes through
/// the chain rule of `η = t·h(ξ)`. On the degenerate corner columns only the
/// ξ-derivative is used.
pub fn nodal_gradient(geo: &Geometry, map: &DomainMapping, phi: &[f64], i: usize, j: usize) -> [f64; 2] {
    let (ns, nt) = (map.layout.n_s, map.layout.n_t);
    let rem = |ii: usize, jj: usize| {
        let [x, y] = map.node(ii, jj);
        phi[map.idx(ii, jj)] - reference(geo, x, y).0
    };
    let si = stencil(i, ns);
    let sj = stencil(j, nt);
    let psi_xi = d3(si.map(|a| map.xi[a]), si.map(|a| rem(a, j)), map.xi[i]);
    let h = map.height[i];
    let corner = i == 0 || i == ns;
    let psi_y = if corner { 0.0 } else { d3(sj.map(|b| map.t[b]), sj.map(|b| rem(i, b)), map.t[j]) / h };
    let psi_x = if corner { psi_xi } else { psi_xi - map.t[j] * map.height_slope[i] * psi_y };
    let [x, y] = map.node(i, j);
    let g = reference(geo, x, y).1;
    [g[0] + psi_x, g[1] + psi_y]
}

/// Nodal fields of a solution, column-major in `(i, j)` like the unknowns.
#[derive(Debug, Clone)]
pub struct SampledFields {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub phi: Vec<f64>,
    /// `φ - φ_β`.
    pub psi: Vec<f64>,
    pub rho: Vec<f64>,
    /// Pseudo-Mach number `|Dφ|/c`.
    pub mach: Vec<f64>,
}

pub fn extract_fields(geo: &Geometry, map: &DomainMapping, phi: &[f64]) -> SampledFields {
    let n = map.layout.n_nodes();
    let mut f = SampledFields {
        xi: Vec::with_capacity(n),
        eta: Vec::with_capacity(n),
        phi: phi.to_vec(),
        psi: Vec::with_capacity(n),
        rho: Vec::with_capacity(n),
        mach: Vec::with_capacity(n),
    };
    for i in 0..=map.layout.n_s {
        for j in 0..=map.layout.n_t {
            let [x, y] = map.node(i, j);
            let p = phi[map.idx(i, j)];
            let g = nodal_gradient(geo, map, phi, i, j);
            let q2 = g[0] * g[0] + g[1] * g[1];
            let rho = geo.setup.density_raw(q2, p);
            f.xi.push(x);
            f.eta.push(y);
            f.psi.push(p - geo.phi_beta(x, y));
            f.rho.push(rho);
            f.mach.push(q2.sqrt() / sound_speed_sq_raw(rho, geo.gamma()).sqrt());
        }
    }
    f
}
