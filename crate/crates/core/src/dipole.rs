//! The dipole solution `𝒟(P, Q; ·)` and the identities built on it.
//!
//! `𝒟` solves `∇·γ∇𝒟 = 0` with boundary flux `δ_P − δ_Q`. It is split into
//! the explicit log-singular part
//! `V(x) = −(1/π)(log|P − x| − log|Q − x|)` and a finite-energy corrector
//! `ℰ` solving
//!
//! ```text
//! ∇·γ∇ℰ = −∇·(γ − 1)∇V in Ω,   ∂ℰ/∂ν = −Ψ on ∂Ω,   ∫_{∂Ω} ℰ = 0,
//! ```
//!
//! where `Ψ = ∂V/∂ν` away from the poles. Then for every smooth `φ`
//! `∫ γ∇𝒟·∇φ = φ(P) − φ(Q)`, and for harmonic `v` with `g = ∂v/∂ν`
//!
//! ```text
//! {Λ_γ(P,Q) − Λ_1(P,Q)} g = Σ_j (k_j − 1) ∫_{∂D_j} 𝒟 ∂v/∂ν
//!                         = −Σ_j (k_j − 1) ∫_{D_j} ∇v·∇𝒟,
//! ```
//!
//! with `ν` on `∂D_j` pointing into `D_j`. `∇V` is always analytic; only `ℰ`
//! is discretized.
//!
//! On the polygonal boundary of a mesh the interior angle `θ` at a pole is
//! slightly below `π`, and `−(1/π) log|P − x|` then carries only `θ/π` of a
//! unit flux into `Ω`. [`DipoleField`] weights each logarithm by `π/θ` so
//! that it is the dipole of the discretized domain.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::float::{atan2, ln};
use crate::forward::{
    basis_gradients, check_boundary, solve_load, BoundaryData, ConductivityMap, ForwardModel, ScalarField,
};
use crate::geometry::{InclusionSet, Vec2};
use crate::mesh::{Mesh, Region};
use crate::probe::{indicator, ProbeParams};
use crate::{Error, Result};

fn check_distinct(p: Vec2, q: Vec2, x: Vec2) -> Result<()> {
    let scale = 1e-14 * (1.0 + p.norm().max(q.norm()));
    if x.dist(p) <= scale || x.dist(q) <= scale {
        return Err(Error::Singular);
    }
    Ok(())
}

/// `V(P, Q; x) = −(1/π)(log|P − x| − log|Q − x|)`.
pub fn v_singular(p: Vec2, q: Vec2, x: Vec2) -> Result<f64> {
    check_distinct(p, q, x)?;
    Ok(-(ln(p.dist(x)) - ln(q.dist(x))) / PI)
}

/// `∇_x V(P, Q; x)`.
pub fn grad_v(p: Vec2, q: Vec2, x: Vec2) -> Result<Vec2> {
    check_distinct(p, q, x)?;
    let a = x - p;
    let b = x - q;
    Ok((a / a.norm_sq() - b / b.norm_sq()) * (-1.0 / PI))
}

/// `Ψ(P, Q; y) = ∇V·ν` at the midpoint of every boundary edge.
pub fn psi_trace(p: Vec2, q: Vec2, m: &Mesh) -> Result<BoundaryData> {
    psi_trace_weighted(p, q, (1.0, 1.0), m)
}

fn weighted_value(p: Vec2, q: Vec2, w: (f64, f64), x: Vec2) -> Result<f64> {
    check_distinct(p, q, x)?;
    Ok(-(w.0 * ln(p.dist(x)) - w.1 * ln(q.dist(x))) / PI)
}

fn weighted_gradient(p: Vec2, q: Vec2, w: (f64, f64), x: Vec2) -> Result<Vec2> {
    check_distinct(p, q, x)?;
    let a = x - p;
    let b = x - q;
    Ok((a * (w.0 / a.norm_sq()) - b * (w.1 / b.norm_sq())) * (-1.0 / PI))
}

fn psi_trace_weighted(p: Vec2, q: Vec2, w: (f64, f64), m: &Mesh) -> Result<BoundaryData> {
    let mut values = Vec::with_capacity(m.boundary_edges.len());
    for e in &m.boundary_edges {
        let (a, b) = m.edge_points(e.nodes);
        let y = (a + b) * 0.5;
        values.push(Complex64::new(weighted_gradient(p, q, w, y)?.dot(e.normal), 0.0));
    }
    Ok(BoundaryData { values })
}

/// Interior angle of the boundary polygon at boundary node `i`.
pub fn boundary_angle_at(m: &Mesh, i: usize) -> Result<f64> {
    let into = m.boundary_edges.iter().find(|e| e.nodes[1] == i);
    let out = m.boundary_edges.iter().find(|e| e.nodes[0] == i);
    let (Some(into), Some(out)) = (into, out) else {
        return Err(Error::NotBoundaryNode(i));
    };
    let prev = m.nodes[into.nodes[0]] - m.nodes[i];
    let next = m.nodes[out.nodes[1]] - m.nodes[i];
    // counter-clockwise boundary: the interior lies to the left of `next`
    let mut angle = atan2(next.cross(prev), next.dot(prev));
    if angle <= 0.0 {
        angle += 2.0 * PI;
    }
    Ok(angle)
}

/// `V + ℰ` for one pair of boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleField {
    pub p_node: usize,
    pub q_node: usize,
    pub p: Vec2,
    pub q: Vec2,
    /// `π/θ` at `P` and at `Q`, `θ` the interior angle of `∂Ω` there.
    pub pole_weights: (f64, f64),
    /// Nodal values of the corrector `ℰ`, with zero boundary mean.
    pub corrector: ScalarField,
}

impl DipoleField {
    pub fn singular(&self, x: Vec2) -> Result<f64> {
        weighted_value(self.p, self.q, self.pole_weights, x)
    }

    pub fn singular_gradient(&self, x: Vec2) -> Result<Vec2> {
        weighted_gradient(self.p, self.q, self.pole_weights, x)
    }

    /// `𝒟` at a mesh node; fails at `P` and `Q`.
    pub fn node_value(&self, m: &Mesh, i: usize) -> Result<f64> {
        Ok(self.singular(m.nodes[i])? + self.corrector.values[i])
    }

    /// `𝒟` at every node, `None` at the poles.
    pub fn nodal_values(&self, m: &Mesh) -> Vec<Option<f64>> {
        (0..m.nodes.len()).map(|i| self.node_value(m, i).ok()).collect()
    }

    /// `𝒟` at the midpoint of the segment between nodes `a` and `b`.
    pub fn edge_midpoint_value(&self, m: &Mesh, nodes: [usize; 2]) -> Result<f64> {
        let (a, b) = m.edge_points(nodes);
        let e = 0.5 * (self.corrector.values[nodes[0]] + self.corrector.values[nodes[1]]);
        Ok(self.singular((a + b) * 0.5)? + e)
    }

    /// The (constant) gradient of `ℰ` on triangle `t`.
    pub fn corrector_gradient(&self, m: &Mesh, t: usize) -> Vec2 {
        let tri = m.triangles[t].nodes;
        let (g, _) = basis_gradients(m.triangle_points(t));
        (0..3).fold(Vec2::new(0.0, 0.0), |acc, k| acc + g[k] * self.corrector.values[tri[k]])
    }
}

/// Midpoints of the three edges: the quadrature nodes of the mid-edge rule,
/// each with weight `area / 3`.
fn mid_edge_points(p: [Vec2; 3]) -> [Vec2; 3] {
    [(p[0] + p[1]) * 0.5, (p[1] + p[2]) * 0.5, (p[2] + p[0]) * 0.5]
}

/// Solves the corrector problem for the pair of boundary nodes `p_node`,
/// `q_node` with the inclusion system of `model`.
pub fn solve_corrector(model: &ForwardModel<'_>, incl: &InclusionSet, p_node: usize, q_node: usize) -> Result<DipoleField> {
    let m = model.mesh();
    check_boundary(m, p_node)?;
    check_boundary(m, q_node)?;
    if p_node == q_node {
        return Err(Error::InvalidInput("P and Q must be distinct nodes".into()));
    }
    let (p, q) = (m.nodes[p_node], m.nodes[q_node]);
    let w = (PI / boundary_angle_at(m, p_node)?, PI / boundary_angle_at(m, q_node)?);
    let gamma = ConductivityMap::from_inclusions(incl);
    let psi = psi_trace_weighted(p, q, w, m)?;
    let (mut b, _) = psi.scale(Complex64::new(-1.0, 0.0)).load(m);
    for (t, tri) in m.triangles.iter().enumerate() {
        let k = gamma.value(tri.region);
        if tri.region == Region::Background || k == 1.0 {
            continue;
        }
        let pts = m.triangle_points(t);
        let (grads, area) = basis_gradients(pts);
        let mut mean_grad = Vec2::new(0.0, 0.0);
        for x in mid_edge_points(pts) {
            mean_grad += weighted_gradient(p, q, w, x)?;
        }
        let mean_grad = mean_grad / 3.0;
        for (local, &i) in tri.nodes.iter().enumerate() {
            b[i] -= (k - 1.0) * area * mean_grad.dot(grads[local]);
        }
    }
    let (corrector, _) = solve_load(model.gamma_system(), &b, &model.options)?;
    Ok(DipoleField {
        p_node,
        q_node,
        p,
        q,
        pole_weights: w,
        corrector,
    })
}

/// A smooth function with known gradient.
pub trait TestFunction {
    fn value(&self, x: Vec2) -> f64;
    fn gradient(&self, x: Vec2) -> Vec2;
}

/// A test function from a pair of closures.
#[derive(Debug, Clone, Copy)]
pub struct Analytic<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V: Fn(Vec2) -> f64, G: Fn(Vec2) -> Vec2> TestFunction for Analytic<V, G> {
    fn value(&self, x: Vec2) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: Vec2) -> Vec2 {
        (self.gradient)(x)
    }
}

/// `Re v` for a probe, scaled as in [`ProbeParams::scaled_value`].
#[derive(Debug, Clone, Copy)]
pub struct ProbeRealPart(pub ProbeParams);

impl TestFunction for ProbeRealPart {
    fn value(&self, x: Vec2) -> f64 {
        self.0.scaled_value(x).re
    }

    fn gradient(&self, x: Vec2) -> Vec2 {
        let [gx, gy] = self.0.scaled_gradient(x);
        Vec2::new(gx.re, gy.re)
    }
}

/// Triangles closer than this many mesh sizes to a pole are subdivided.
const NEAR_POLE: f64 = 3.0;
/// Levels of 4-fold subdivision near the poles.
const SUBDIVISION_LEVELS: u32 = 2;

fn subdivide(p: [Vec2; 3], levels: u32, out: &mut Vec<[Vec2; 3]>) {
    if levels == 0 {
        out.push(p);
        return;
    }
    let [a, b, c] = mid_edge_points(p);
    for child in [[p[0], a, c], [a, p[1], b], [c, b, p[2]], [a, b, c]] {
        subdivide(child, levels - 1, out);
    }
}

/// Relative residual of `∫ γ∇𝒟·∇φ = φ(P) − φ(Q)`, i.e.
/// `|LHS − RHS| / max(1, |RHS|)`.
pub fn verify_weak_form(m: &Mesh, incl: &InclusionSet, field: &DipoleField, phi: &dyn TestFunction) -> Result<f64> {
    let gamma = ConductivityMap::from_inclusions(incl);
    let near = NEAR_POLE * m.h_target;
    let mut lhs = 0.0;
    let mut pieces = Vec::new();
    for (t, tri) in m.triangles.iter().enumerate() {
        let k = gamma.value(tri.region);
        let pts = m.triangle_points(t);
        let grad_e = field.corrector_gradient(m, t);
        let close = pts.iter().any(|x| x.dist(field.p) < near || x.dist(field.q) < near);
        pieces.clear();
        subdivide(pts, if close { SUBDIVISION_LEVELS } else { 0 }, &mut pieces);
        for sub in &pieces {
            let area = 0.5 * (sub[1] - sub[0]).cross(sub[2] - sub[0]);
            for x in mid_edge_points(*sub) {
                let g = field.singular_gradient(x)? + grad_e;
                lhs += k * area / 3.0 * g.dot(phi.gradient(x));
            }
        }
    }
    let rhs = phi.value(field.p) - phi.value(field.q);
    Ok((lhs - rhs).abs() / rhs.abs().max(1.0))
}

/// Orientation of `ν` on `∂D_j` used by [`rep_formula_rhs_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalOrientation {
    /// Into `D_j`, as stored on the mesh.
    #[default]
    Inward,
    /// Reversed; only for checking the sign convention.
    Outward,
}

/// `Σ_j (k_j − 1) ∫_{∂D_j} 𝒟 ∂v/∂ν` by edge-midpoint quadrature, with the
/// scaled probe `e^{−τt} v`.
pub fn rep_formula_rhs(m: &Mesh, incl: &InclusionSet, field: &DipoleField, params: &ProbeParams) -> Result<Complex64> {
    rep_formula_rhs_with(m, incl, field, params, NormalOrientation::Inward)
}

pub fn rep_formula_rhs_with(
    m: &Mesh,
    incl: &InclusionSet,
    field: &DipoleField,
    params: &ProbeParams,
    orientation: NormalOrientation,
) -> Result<Complex64> {
    if field.corrector.values.len() != m.nodes.len() {
        return Err(Error::InvalidInput("dipole field does not belong to this mesh".into()));
    }
    let sign = match orientation {
        NormalOrientation::Inward => 1.0,
        NormalOrientation::Outward => -1.0,
    };
    let mut total = Complex64::new(0.0, 0.0);
    for (j, cycle) in m.inclusion_edges.iter().enumerate() {
        let weight = incl.components()[j].conductivity - 1.0;
        if weight == 0.0 {
            continue;
        }
        let mut part = Complex64::new(0.0, 0.0);
        for e in cycle {
            let (a, b) = m.edge_points(e.nodes);
            let mid = (a + b) * 0.5;
            let d = field.edge_midpoint_value(m, e.nodes)?;
            part += params.scaled_normal_derivative(mid, e.normal * sign) * (d * a.dist(b));
        }
        total += part * weight;
    }
    Ok(total)
}

/// `−Σ_j (k_j − 1) ∫_{D_j} ∇v·∇𝒟` with the mid-edge rule on inclusion
/// triangles.
pub fn rep_formula_volume(m: &Mesh, incl: &InclusionSet, field: &DipoleField, params: &ProbeParams) -> Result<Complex64> {
    let gamma = ConductivityMap::from_inclusions(incl);
    let mut total = Complex64::new(0.0, 0.0);
    for (t, tri) in m.triangles.iter().enumerate() {
        let k = gamma.value(tri.region);
        if tri.region == Region::Background || k == 1.0 {
            continue;
        }
        let pts = m.triangle_points(t);
        let (_, area) = basis_gradients(pts);
        let grad_e = field.corrector_gradient(m, t);
        for x in mid_edge_points(pts) {
            let gd = field.singular_gradient(x)? + grad_e;
            let [gx, gy] = params.scaled_gradient(x);
            total -= (gx * gd.x + gy * gd.y) * ((k - 1.0) * area / 3.0);
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentationRow {
    pub params: ProbeParams,
    /// `{Λ_γ − Λ_1} g` from the forward solver.
    pub forward: Complex64,
    /// The boundary integral against `𝒟`.
    pub dipole: Complex64,
    /// `|forward − dipole| / |forward|`.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RepresentationReport {
    pub rows: Vec<RepresentationRow>,
    pub max: Option<f64>,
    pub median: Option<f64>,
}

impl RepresentationReport {
    pub fn from_rows(rows: Vec<RepresentationRow>) -> Self {
        let mut d: Vec<f64> = rows.iter().map(|r| r.discrepancy).collect();
        d.sort_by(f64::total_cmp);
        let median = match d.len() {
            0 => None,
            n if n % 2 == 1 => Some(d[n / 2]),
            n => Some(0.5 * (d[n / 2 - 1] + d[n / 2])),
        };
        RepresentationReport {
            max: d.last().copied(),
            median,
            rows,
        }
    }
}

/// Compares the forward and dipole paths for one probe.
pub fn representation_row(
    model: &ForwardModel<'_>,
    incl: &InclusionSet,
    field: &DipoleField,
    params: &ProbeParams,
) -> Result<RepresentationRow> {
    let forward = indicator(model, field.p_node, field.q_node, params)?.value;
    let dipole = rep_formula_rhs(model.mesh(), incl, field, params)?;
    let discrepancy = if forward.norm() > 0.0 {
        (forward - dipole).norm() / forward.norm()
    } else if dipole.norm() == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(RepresentationRow {
        params: *params,
        forward,
        dipole,
        discrepancy,
    })
}

/// Forward path against dipole path for every probe.
pub fn verify_representation(
    model: &ForwardModel<'_>,
    incl: &InclusionSet,
    field: &DipoleField,
    probes: &[ProbeParams],
) -> Result<RepresentationReport> {
    let rows = probes
        .iter()
        .map(|p| representation_row(model, incl, field, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(RepresentationReport::from_rows(rows))
}

#[cfg(test)]
mod tests;
