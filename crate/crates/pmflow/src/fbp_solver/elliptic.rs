//! Vertex-centred median-dual discretization of `div(ρ(|Dφ|², φ) Dφ) + 2ρ = 0`.
//!
//! Unknowns are nodal values of `ψ = φ - φ_ref`, where `φ_ref` blends φ_O into φ_N
//! with a C² step in ξ. Each cell contributes four sub-face fluxes and four
//! sub-quadrilateral sources, all evaluated by one-point quadrature of the bilinear
//! interpolant, so the residual is a smooth function of ψ with an exact Jacobian.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::MatMut;

use super::mapping::{DomainMapping, GridLayout};
use super::SolverConfig;
use crate::error::{PmError, Result};
use crate::gas_model::{sound_speed_sq_raw, GasSetup};
use crate::selfsim_geometry::Geometry;

/// Parametric sample points: four sub-faces then four sub-quadrilaterals.
const PARAM: [[f64; 2]; 8] = [
    [0.5, 0.25],
    [0.5, 0.75],
    [0.25, 0.5],
    [0.75, 0.5],
    [0.25, 0.25],
    [0.75, 0.25],
    [0.25, 0.75],
    [0.75, 0.75],
];

/// Local nodes (00, 10, 01, 11) receiving `+F` and `-F` from each sub-face.
const FACE_NODES: [(usize, usize); 4] = [(0, 1), (2, 3), (0, 2), (1, 3)];

/// Local node offsets `(di, dj)`.
const LOCAL: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

#[derive(Debug, Clone, Copy)]
struct Cut {
    er: [f64; 2],
    /// `(ξ - centre, η)`, so `Dφ_state = -p` for the state owning the arc.
    p: [f64; 2],
    /// `κ·x` with `x` the distance inside the sonic circle.
    limit: f64,
    x: f64,
    at: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    n: [f64; 4],
    w: [[f64; 2]; 4],
    ref_val: f64,
    ref_grad: [f64; 2],
    /// Face normal, or `(2·area, 0)` for a source sample.
    weight: [f64; 2],
    cut: Option<Cut>,
}

/// Counts of sample points inside the sonic bands and of those where the cutoff acts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CutoffStats {
    pub active: usize,
    pub band: usize,
}

impl CutoffStats {
    pub fn fraction(&self) -> f64 {
        if self.band == 0 {
            0.0
        } else {
            self.active as f64 / self.band as f64
        }
    }
}

/// Sign structure of the frozen-coefficient operator over the free rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatorAudit {
    pub rows: usize,
    pub row_sum_violations: usize,
    pub negative_entry_rows: usize,
    pub cutoff: CutoffStats,
}

impl OperatorAudit {
    pub fn violation_fraction(&self) -> f64 {
        self.row_sum_violations as f64 / self.rows.max(1) as f64
    }
}

struct Point {
    rho: f64,
    q: [f64; 2],
    qp: [f64; 2],
    c2: f64,
    active: bool,
}

/// C² step: 1 for ξ ≤ a, 0 for ξ ≥ b.
fn blend(a: f64, b: f64, x: f64) -> (f64, f64) {
    let s = ((x - a) / (b - a)).clamp(0.0, 1.0);
    let w = 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    let dw = -30.0 * s * s * (1.0 - s) * (1.0 - s) / (b - a);
    (w, dw)
}

/// `φ_ref` and its gradient.
pub(crate) fn reference(geo: &Geometry, x: f64, y: f64) -> (f64, [f64; 2]) {
    let (o, n) = (&geo.state_o, &geo.state_n);
    let (w, dw) = blend(geo.p1[0], geo.xi_n, x);
    let (po, pn) = (o.phi(x, y), n.phi(x, y));
    (pn + w * (po - pn), [-x + w * o.u + dw * (po - pn), -y])
}

fn shoelace(p: &[[f64; 2]]) -> f64 {
    let mut s = 0.0;
    for k in 0..p.len() {
        let (a, b) = (p[k], p[(k + 1) % p.len()]);
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

fn lerp(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Rows with a prescribed value: corner columns and the top nodes off the shock interior.
pub(crate) fn dirichlet_mask(layout: &GridLayout) -> Vec<bool> {
    let nt = layout.n_t;
    let cols = layout.shock_columns();
    let mut m = vec![false; layout.n_nodes()];
    for i in 0..=layout.n_s {
        for j in 0..=nt {
            let corner = i == 0 || i == layout.n_s;
            let top = j == nt && !(i > cols.start && i + 1 < cols.end);
            m[i * (nt + 1) + j] = corner || top;
        }
    }
    m
}

/// Fixed-shock discretization on a mapped grid.
pub struct Discretization {
    layout: GridLayout,
    setup: GasSetup,
    samples: Vec<Sample>,
    dirichlet: Vec<Option<f64>>,
    boundary_flux: Vec<f64>,
    dual_area: Vec<f64>,
    ref_node: Vec<f64>,
}

impl Discretization {
    pub fn new(geo: &Geometry, map: &DomainMapping, config: &SolverConfig) -> Discretization {
        let lay = map.layout;
        let (ns, nt) = (lay.n_s, lay.n_t);
        let gamma = geo.gamma();
        let kappa = (2.0 - config.cutoff_delta) / (1.0 + gamma);
        let eps = config.cutoff_band.unwrap_or(0.15 * geo.state_o.c.min(geo.state_n.c));
        let arcs = [(0.0, geo.state_n.c, true), (geo.state_o.u, geo.state_o.c, false)];

        let mut samples = Vec::with_capacity(ns * nt * 8);
        let mut dual_area = vec![0.0; lay.n_nodes()];
        for i in 0..ns {
            for j in 0..nt {
                let nd = [map.node(i, j), map.node(i + 1, j), map.node(i, j + 1), map.node(i + 1, j + 1)];
                let bil = |a: f64, b: f64| -> [f64; 2] {
                    let n = [(1.0 - a) * (1.0 - b), a * (1.0 - b), (1.0 - a) * b, a * b];
                    [0, 1].map(|c| (0..4).map(|k| n[k] * nd[k][c]).sum())
                };
                let (c, mb, mt, ml, mr) = (bil(0.5, 0.5), bil(0.5, 0.0), bil(0.5, 1.0), bil(0.0, 0.5), bil(1.0, 0.5));
                let segs = [(mb, c), (c, mt), (c, ml), (mr, c)];
                let quads = [[nd[0], mb, c, ml], [mb, nd[1], mr, c], [ml, c, mt, nd[2]], [c, mr, nd[3], mt]];
                for (s, &[a, b]) in PARAM.iter().enumerate() {
                    let n = [(1.0 - a) * (1.0 - b), a * (1.0 - b), (1.0 - a) * b, a * b];
                    let dna = [-(1.0 - b), 1.0 - b, -b, b];
                    let dnb = [-(1.0 - a), -a, 1.0 - a, a];
                    let xa = (0..4).map(|k| dna[k] * nd[k][0]).sum::<f64>();
                    let xb = (0..4).map(|k| dnb[k] * nd[k][0]).sum::<f64>();
                    let ya = (0..4).map(|k| dna[k] * nd[k][1]).sum::<f64>();
                    let yb = (0..4).map(|k| dnb[k] * nd[k][1]).sum::<f64>();
                    let det = xa * yb - xb * ya;
                    let w = [0, 1, 2, 3].map(|k| [(yb * dna[k] - ya * dnb[k]) / det, (-xb * dna[k] + xa * dnb[k]) / det]);
                    let [x, y] = bil(a, b);
                    let (ref_val, ref_grad) = reference(geo, x, y);
                    let weight = if s < 4 {
                        let (p, q) = segs[s];
                        [q[1] - p[1], -(q[0] - p[0])]
                    } else {
                        let area = shoelace(&quads[s - 4]);
                        let (di, dj) = LOCAL[s - 4];
                        dual_area[map.idx(i + di, j + dj)] += area;
                        [2.0 * area, 0.0]
                    };
                    let mut cut = None;
                    for &(cx, cc, is_n) in &arcs {
                        let r = (x - cx).hypot(y);
                        let gap = cc - r;
                        let side = if is_n { x >= geo.xi_n } else { x <= geo.p1[0] };
                        if gap > 0.0 && gap < eps && side && r > 0.0 {
                            cut = Some(Cut {
                                er: [(x - cx) / r, y / r],
                                p: [x - cx, y],
                                limit: kappa * gap,
                                x: gap,
                                at: [x, y],
                            });
                        }
                    }
                    samples.push(Sample { n, w, ref_val, ref_grad, weight, cut });
                }
            }
        }

        let mask = dirichlet_mask(&lay);
        let mut ref_node = vec![0.0; lay.n_nodes()];
        let mut dirichlet = vec![None; lay.n_nodes()];
        for i in 0..=ns {
            for j in 0..=nt {
                let k = map.idx(i, j);
                let [x, y] = map.node(i, j);
                ref_node[k] = reference(geo, x, y).0;
                if mask[k] {
                    dirichlet[k] = Some(geo.phi_beta(x, y) - ref_node[k]);
                }
            }
        }

        // Rankine–Hugoniot flux through the chord halves adjacent to each interior shock node.
        let mut boundary_flux = vec![0.0; lay.n_nodes()];
        let v = geo.v_inf();
        let cols = lay.shock_columns();
        for i in cols.start + 1..cols.end - 1 {
            let pi = map.node(i, nt);
            let mut tot = 0.0;
            for k in [i - 1, i + 1] {
                let mid = lerp(pi, map.node(k, nt), 0.5);
                let (p, q) = if k < i { (mid, pi) } else { (pi, mid) };
                let m = lerp(p, q, 0.5);
                let nrm = [-(q[1] - p[1]), q[0] - p[0]];
                tot += -m[0] * nrm[0] + (-m[1] - v) * nrm[1];
            }
            boundary_flux[map.idx(i, nt)] = tot;
        }

        Discretization { layout: lay, setup: geo.setup, samples, dirichlet, boundary_flux, dual_area, ref_node }
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    /// Control-volume areas of the nodes.
    pub fn dual_area(&self) -> &[f64] {
        &self.dual_area
    }

    /// `φ_ref` at the nodes.
    pub fn reference_nodes(&self) -> &[f64] {
        &self.ref_node
    }

    pub fn dirichlet(&self) -> &[Option<f64>] {
        &self.dirichlet
    }

    #[inline]
    fn cell_nodes(&self, i: usize, j: usize) -> [usize; 4] {
        let m = self.layout.n_t + 1;
        LOCAL.map(|(di, dj)| (i + di) * m + j + dj)
    }

    fn point(&self, s: &Sample, psi: &[f64; 4]) -> Result<Point> {
        let mut ps = 0.0;
        let mut g = [0.0; 2];
        for k in 0..4 {
            ps += s.n[k] * psi[k];
            g[0] += s.w[k][0] * psi[k];
            g[1] += s.w[k][1] * psi[k];
        }
        let phi = s.ref_val + ps;
        let q = [s.ref_grad[0] + g[0], s.ref_grad[1] + g[1]];
        let mut big_q = q;
        let mut qp = q;
        let mut active = false;
        if let Some(c) = &s.cut {
            // Radial derivative of φ - φ_state pointing into the circle.
            let psx = -((q[0] + c.p[0]) * c.er[0] + (q[1] + c.p[1]) * c.er[1]);
            if psx > c.limit {
                active = true;
                let corr = psx - c.limit;
                big_q = [q[0] + corr * c.er[0], q[1] + corr * c.er[1]];
                let along = big_q[0] * c.er[0] + big_q[1] * c.er[1];
                qp = [big_q[0] - along * c.er[0], big_q[1] - along * c.er[1]];
            } else {
                qp = big_q;
            }
        }
        let rho = self.setup.density_raw(big_q[0] * big_q[0] + big_q[1] * big_q[1], phi);
        if !rho.is_finite() {
            return Err(PmError::Cavitation { argument: rho });
        }
        let c2 = sound_speed_sq_raw(rho, self.setup.gamma());
        Ok(Point { rho, q, qp, c2, active })
    }

    /// Largest `ψ_x / x` over the band sample points, with its location.
    ///
    /// `ψ_x` is the radial derivative of `φ - φ_state` that the cutoff tests, so the
    /// cutoff is inactive everywhere iff this ratio stays at or below its slope.
    pub fn cutoff_ratio(&self, psi: &[f64]) -> Option<(f64, [f64; 2])> {
        let (ns, nt) = (self.layout.n_s, self.layout.n_t);
        let mut best: Option<(f64, [f64; 2])> = None;
        for i in 0..ns {
            for j in 0..nt {
                let ids = self.cell_nodes(i, j);
                let base = (i * nt + j) * 8;
                for smp in &self.samples[base..base + 8] {
                    let Some(c) = &smp.cut else { continue };
                    let mut q = smp.ref_grad;
                    for (k, &id) in ids.iter().enumerate() {
                        q[0] += smp.w[k][0] * psi[id];
                        q[1] += smp.w[k][1] * psi[id];
                    }
                    let psx = -((q[0] + c.p[0]) * c.er[0] + (q[1] + c.p[1]) * c.er[1]);
                    let ratio = psx / c.x;
                    if best.map_or(true, |(b, _)| ratio > b) {
                        best = Some((ratio, c.at));
                    }
                }
            }
        }
        best
    }

    /// Residual at every node; Dirichlet rows hold `ψ - ψ_D`.
    pub fn residual(&self, psi: &[f64], out: &mut [f64]) -> Result<CutoffStats> {
        self.assemble(psi, out, None)
    }

    /// Residual and the 3×3-stencil Jacobian rows, `jac[p][(di+1)*3 + dj+1]`.
    pub fn jacobian(&self, psi: &[f64], out: &mut [f64], jac: &mut [[f64; 9]]) -> Result<CutoffStats> {
        self.assemble(psi, out, Some(jac))
    }

    fn assemble(&self, psi: &[f64], out: &mut [f64], mut jac: Option<&mut [[f64; 9]]>) -> Result<CutoffStats> {
        let (ns, nt) = (self.layout.n_s, self.layout.n_t);
        out.copy_from_slice(&self.boundary_flux);
        if let Some(j) = jac.as_deref_mut() {
            j.iter_mut().for_each(|r| *r = [0.0; 9]);
        }
        let mut stats = CutoffStats::default();
        for i in 0..ns {
            for j in 0..nt {
                let ids = self.cell_nodes(i, j);
                let pv = ids.map(|k| psi[k]);
                let base = (i * nt + j) * 8;
                for s in 0..8 {
                    let smp = &self.samples[base + s];
                    let pt = self.point(smp, &pv)?;
                    if smp.cut.is_some() {
                        stats.band += 1;
                        stats.active += pt.active as usize;
                    }
                    let (val, targets): (f64, [(usize, f64); 2]) = if s < 4 {
                        let nrm = smp.weight;
                        let qn = pt.q[0] * nrm[0] + pt.q[1] * nrm[1];
                        let (a, b) = FACE_NODES[s];
                        (pt.rho * qn, [(a, 1.0), (b, -1.0)])
                    } else {
                        (smp.weight[0] * pt.rho, [(s - 4, 1.0), (0, 0.0)])
                    };
                    for &(l, sg) in &targets {
                        if sg != 0.0 {
                            out[ids[l]] += sg * val;
                        }
                    }
                    if let Some(jm) = jac.as_deref_mut() {
                        let scale = -pt.rho / pt.c2;
                        for k in 0..4 {
                            let drho = scale * (pt.qp[0] * smp.w[k][0] + pt.qp[1] * smp.w[k][1] + smp.n[k]);
                            let d = if s < 4 {
                                let nrm = smp.weight;
                                pt.rho * (smp.w[k][0] * nrm[0] + smp.w[k][1] * nrm[1])
                                    + (pt.q[0] * nrm[0] + pt.q[1] * nrm[1]) * drho
                            } else {
                                smp.weight[0] * drho
                            };
                            for &(l, sg) in &targets {
                                if sg != 0.0 {
                                    let off = (LOCAL[k].0 + 1 - LOCAL[l].0) * 3 + (LOCAL[k].1 + 1 - LOCAL[l].1);
                                    jm[ids[l]][off] += sg * d;
                                }
                            }
                        }
                    }
                }
            }
        }
        for (k, dv) in self.dirichlet.iter().enumerate() {
            if let Some(d) = dv {
                out[k] = psi[k] - d;
                if let Some(jm) = jac.as_deref_mut() {
                    jm[k] = [0.0; 9];
                    jm[k][4] = 1.0;
                }
            }
        }
        Ok(stats)
    }

    /// Audits the frozen-coefficient operator `ψ ↦ Σ ρ Dψ·n` at `psi`, with the cutoff
    /// applied to the frozen density.
    ///
    /// With the sign making the diagonal negative, a discrete maximum principle needs
    /// nonnegative off-diagonal row sums; rows with any negative off-diagonal entry are
    /// counted separately since stretched cells produce them without harm to the sum.
    pub fn audit_frozen_operator(&self, psi: &[f64]) -> Result<OperatorAudit> {
        let (ns, nt) = (self.layout.n_s, self.layout.n_t);
        let mut rows = vec![[0.0; 9]; psi.len()];
        let mut stats = CutoffStats::default();
        for i in 0..ns {
            for j in 0..nt {
                let ids = self.cell_nodes(i, j);
                let pv = ids.map(|k| psi[k]);
                let base = (i * nt + j) * 8;
                for s in 0..4 {
                    let smp = &self.samples[base + s];
                    let pt = self.point(smp, &pv)?;
                    if smp.cut.is_some() {
                        stats.band += 1;
                        stats.active += pt.active as usize;
                    }
                    let nrm = smp.weight;
                    let (a, b) = FACE_NODES[s];
                    for k in 0..4 {
                        let d = pt.rho * (smp.w[k][0] * nrm[0] + smp.w[k][1] * nrm[1]);
                        for (l, sg) in [(a, 1.0), (b, -1.0)] {
                            let off = (LOCAL[k].0 + 1 - LOCAL[l].0) * 3 + (LOCAL[k].1 + 1 - LOCAL[l].1);
                            rows[ids[l]][off] += sg * d;
                        }
                    }
                }
            }
        }
        let mut audit = OperatorAudit { rows: 0, row_sum_violations: 0, negative_entry_rows: 0, cutoff: stats };
        for (k, row) in rows.iter().enumerate() {
            if self.dirichlet[k].is_some() {
                continue;
            }
            audit.rows += 1;
            let scale = row[4].abs();
            let off: f64 = row.iter().enumerate().filter(|(o, _)| *o != 4).map(|(_, v)| v).sum();
            if off < -1e-12 * scale {
                audit.row_sum_violations += 1;
            }
            if row.iter().enumerate().any(|(o, v)| o != 4 && *v < -1e-12 * scale) {
                audit.negative_entry_rows += 1;
            }
        }
        Ok(audit)
    }

    /// `max |R|` over free rows, and the same scaled by the control-volume area.
    pub fn residual_norms(&self, r: &[f64]) -> (f64, f64) {
        let mut a: f64 = 0.0;
        let mut b: f64 = 0.0;
        for k in 0..r.len() {
            if self.dirichlet[k].is_none() {
                a = a.max(r[k].abs());
                b = b.max(r[k].abs() / self.dual_area[k]);
            }
        }
        (a, b)
    }
}

/// Sparse LU for the Newton systems; the pattern depends only on the layout, so the
/// symbolic factorization is reused across Newton steps, outer iterations and β.
pub struct LinearSolver {
    layout: GridLayout,
    symbolic: SymbolicSparseColMat<usize>,
    /// Position `p*9 + offset` in the stencil rows for each stored entry.
    source: Vec<usize>,
    lu: Option<SymbolicLu<usize>>,
}

impl LinearSolver {
    pub fn new(layout: &GridLayout) -> LinearSolver {
        let (ns, nt) = (layout.n_s, layout.n_t);
        let n = layout.n_nodes();
        let mask = dirichlet_mask(layout);
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::with_capacity(9 * n);
        let mut source = Vec::with_capacity(9 * n);
        col_ptr.push(0);
        for ik in 0..=ns {
            for jk in 0..=nt {
                let k = ik * (nt + 1) + jk;
                // Rows p = k - (di, dj) in increasing order.
                for di in [1i64, 0, -1] {
                    for dj in [1i64, 0, -1] {
                        let (ip, jp) = (ik as i64 - di, jk as i64 - dj);
                        if ip < 0 || jp < 0 || ip > ns as i64 || jp > nt as i64 {
                            continue;
                        }
                        let p = ip as usize * (nt + 1) + jp as usize;
                        if mask[p] && p != k {
                            continue;
                        }
                        row_idx.push(p);
                        source.push(p * 9 + ((di + 1) * 3 + dj + 1) as usize);
                    }
                }
                col_ptr.push(row_idx.len());
            }
        }
        let symbolic = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        LinearSolver { layout: *layout, symbolic, source, lu: None }
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    /// Solves `J x = rhs` in place.
    pub fn solve(&mut self, jac: &[[f64; 9]], rhs: &mut [f64]) -> Result<()> {
        let flat = jac.as_flattened();
        let vals: Vec<f64> = self.source.iter().map(|&s| flat[s]).collect();
        if self.lu.is_none() {
            let sym = SymbolicLu::try_new(self.symbolic.as_ref())
                .map_err(|e| PmError::Numerical(format!("symbolic LU failed: {e:?}")))?;
            self.lu = Some(sym);
        }
        let mat = SparseColMatRef::new(self.symbolic.as_ref(), &vals);
        let lu = Lu::try_new_with_symbolic(self.lu.clone().unwrap(), mat)
            .map_err(|e| PmError::Numerical(format!("sparse LU failed: {e:?}")))?;
        let n = rhs.len();
        lu.solve_in_place(MatMut::from_column_major_slice_mut(rhs, n, 1));
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(PmError::Numerical("singular Newton system".into()));
        }
        Ok(())
    }
}

/// Outcome of a fixed-shock Newton solve.
#[derive(Debug, Clone)]
pub struct EllipticOutcome {
    pub psi: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub stats: CutoffStats,
}

/// Newton iteration on the fixed-shock problem starting from `psi`.
pub fn elliptic_step(
    disc: &Discretization,
    psi: &[f64],
    config: &SolverConfig,
    solver: &mut LinearSolver,
) -> Result<EllipticOutcome> {
    let n = disc.layout.n_nodes();
    let mut psi = psi.to_vec();
    for (k, d) in disc.dirichlet.iter().enumerate() {
        if let Some(v) = d {
            psi[k] = *v;
        }
    }
    let mut r = vec![0.0; n];
    let mut jac = vec![[0.0; 9]; n];
    let mut it = 0;
    loop {
        let stats = disc.jacobian(&psi, &mut r, &mut jac)?;
        let res = disc.residual_norms(&r).0;
        if !res.is_finite() {
            return Err(PmError::Numerical("non-finite elliptic residual".into()));
        }
        if res < config.tol_elliptic || it == config.max_inner {
            return Ok(EllipticOutcome { psi, iterations: it, residual: res, converged: res < config.tol_elliptic, stats });
        }
        r.iter_mut().for_each(|v| *v = -*v);
        solver.solve(&jac, &mut r)?;
        for (p, d) in psi.iter_mut().zip(&r) {
            *p += config.relax_field * d;
        }
        it += 1;
    }
}
