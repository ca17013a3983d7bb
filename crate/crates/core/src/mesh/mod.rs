//! Inclusion-conforming triangulations of the disk domain.
//!
//! A [`Mesh`] stores triangles tagged by region, the closed cycle of edges on
//! `∂Ω` with outward normals, and one closed cycle of edges per inclusion with
//! normals pointing *into* the inclusion (the outward normal of `Ω ∖ D̄`).

mod delaunay;
mod generate;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::float::atan2;
use crate::geometry::{point_segment_distance, Vec2};
use crate::{Error, Result};

pub use generate::generate_mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Region {
    Background,
    Inclusion(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub nodes: [usize; 3],
    pub region: Region,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    /// Outward unit normal of `Ω`.
    pub normal: Vec2,
    /// Arc length along `∂Ω` at the first node.
    pub arc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InclusionEdge {
    pub nodes: [usize; 2],
    /// Unit normal pointing into the inclusion.
    pub normal: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Vec2>,
    pub triangles: Vec<Triangle>,
    /// Counter-clockwise cycle around `∂Ω`.
    pub boundary_edges: Vec<BoundaryEdge>,
    /// One counter-clockwise cycle per inclusion component.
    pub inclusion_edges: Vec<Vec<InclusionEdge>>,
    pub h_target: f64,
}

impl Mesh {
    pub fn triangle_points(&self, t: usize) -> [Vec2; 3] {
        self.triangles[t].nodes.map(|i| self.nodes[i])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn edge_points(&self, nodes: [usize; 2]) -> (Vec2, Vec2) {
        (self.nodes[nodes[0]], self.nodes[nodes[1]])
    }

    pub fn boundary_node_flags(&self) -> Vec<bool> {
        let mut flags = alloc::vec![false; self.nodes.len()];
        for e in &self.boundary_edges {
            flags[e.nodes[0]] = true;
            flags[e.nodes[1]] = true;
        }
        flags
    }

    pub fn is_boundary_node(&self, i: usize) -> bool {
        self.boundary_edges.iter().any(|e| e.nodes.contains(&i))
    }

    /// Total area of the triangles, optionally restricted to one region.
    pub fn area(&self, region: Option<Region>) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| region.is_none_or(|r| self.triangles[t].region == r))
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Length of `∂Ω` as discretized.
    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges
            .iter()
            .map(|e| {
                let (a, b) = self.edge_points(e.nodes);
                a.dist(b)
            })
            .sum()
    }

    /// Polar angle of a node about the centroid of the boundary nodes.
    pub fn boundary_angle(&self, i: usize) -> f64 {
        let c = self.boundary_centroid();
        let d = self.nodes[i] - c;
        atan2(d.y, d.x)
    }

    pub fn boundary_centroid(&self) -> Vec2 {
        let mut c = Vec2::ZERO;
        for e in &self.boundary_edges {
            c += self.nodes[e.nodes[0]];
        }
        c / self.boundary_edges.len().max(1) as f64
    }

    /// Nearest boundary node to `p`, which must lie within `h_target` of `∂Ω`.
    pub fn snap_boundary_point(&self, p: Vec2) -> Result<usize> {
        let distance = self
            .boundary_edges
            .iter()
            .map(|e| {
                let (a, b) = self.edge_points(e.nodes);
                point_segment_distance(p, a, b)
            })
            .fold(f64::INFINITY, f64::min);
        if !(distance <= self.h_target) {
            return Err(Error::FarFromBoundary {
                distance,
                allowed: self.h_target,
            });
        }
        let mut best = (f64::INFINITY, usize::MAX);
        for e in &self.boundary_edges {
            let i = e.nodes[0];
            let d = self.nodes[i].dist(p);
            if d < best.0 || (d == best.0 && i < best.1) {
                best = (d, i);
            }
        }
        Ok(best.1)
    }

    /// Checks each triangle's region tag against a point-in-polygon test of
    /// its centroid; returns the number of mismatches.
    pub fn tag_mismatches(&self, incl: &crate::InclusionSet) -> usize {
        (0..self.triangles.len())
            .filter(|&t| {
                let [a, b, c] = self.triangle_points(t);
                let centroid = (a + b + c) / 3.0;
                let expect = match incl.locate(centroid) {
                    Some(j) => Region::Inclusion(j),
                    None => Region::Background,
                };
                expect != self.triangles[t].region
            })
            .count()
    }
}

/// Quality and consistency report for a mesh. A generator-produced mesh has
/// zero violations of every kind.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeshDiagnostics {
    pub nodes: usize,
    pub triangles: usize,
    pub boundary_edges: usize,
    pub inclusion_edges: usize,
    pub min_angle_deg: f64,
    pub max_circumradius: f64,
    pub conformity_violations: usize,
    pub orientation_violations: usize,
    pub normal_violations: usize,
    /// Up to a handful of human-readable descriptions of the first violations.
    pub messages: Vec<String>,
}

impl MeshDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.conformity_violations == 0
            && self.orientation_violations == 0
            && self.normal_violations == 0
    }

    fn note(&mut self, msg: String) {
        if self.messages.len() < 16 {
            self.messages.push(msg);
        }
    }
}

pub fn validate_mesh(m: &Mesh) -> MeshDiagnostics {
    let mut d = MeshDiagnostics {
        nodes: m.nodes.len(),
        triangles: m.triangles.len(),
        boundary_edges: m.boundary_edges.len(),
        inclusion_edges: m.inclusion_edges.iter().map(Vec::len).sum(),
        min_angle_deg: 180.0,
        ..Default::default()
    };

    // undirected edge -> triangles using it
    let mut uses: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (t, tri) in m.triangles.iter().enumerate() {
        if tri.nodes.iter().any(|&i| i >= m.nodes.len()) {
            d.conformity_violations += 1;
            d.note(format!("triangle {t} references a missing node"));
            continue;
        }
        let area = m.triangle_area(t);
        if !(area > 0.0) {
            d.orientation_violations += 1;
            d.note(format!("triangle {t} has signed area {area:e}"));
        }
        let [a, b, c] = m.triangle_points(t);
        let (la, lb, lc) = (b.dist(c), c.dist(a), a.dist(b));
        if area > 0.0 {
            d.max_circumradius = d.max_circumradius.max(la * lb * lc / (4.0 * area));
            for (opp, s1, s2) in [(la, lb, lc), (lb, lc, la), (lc, la, lb)] {
                let cosv = ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0);
                let ang = libm::acos(cosv) * (180.0 / core::f64::consts::PI);
                d.min_angle_deg = d.min_angle_deg.min(ang);
            }
        }
        for k in 0..3 {
            let (p, q) = (tri.nodes[k], tri.nodes[(k + 1) % 3]);
            uses.entry((p.min(q), p.max(q))).or_default().push(t);
        }
    }

    let mut boundary: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for e in &m.boundary_edges {
        let [p, q] = e.nodes;
        *boundary.entry((p.min(q), p.max(q))).or_default() += 1;
    }
    for (&(p, q), ts) in &uses {
        if ts.len() > 2 {
            d.conformity_violations += 1;
            d.note(format!("edge ({p},{q}) shared by {} triangles", ts.len()));
        } else if ts.len() == 1 && !boundary.contains_key(&(p, q)) {
            d.conformity_violations += 1;
            d.note(format!("edge ({p},{q}) has one triangle but is not on ∂Ω (hanging node?)"));
        }
    }
    for (&(p, q), &count) in &boundary {
        let n = uses.get(&(p, q)).map_or(0, Vec::len);
        if count != 1 || n != 1 {
            d.conformity_violations += 1;
            d.note(format!("boundary edge ({p},{q}) listed {count}x, used by {n} triangles"));
        }
    }
    if !is_closed_cycle(m.boundary_edges.iter().map(|e| e.nodes)) {
        d.conformity_violations += 1;
        d.note("boundary edges do not form a single closed cycle".into());
    }

    // inclusion interfaces
    for (j, edges) in m.inclusion_edges.iter().enumerate() {
        let region = Region::Inclusion(j);
        let mut listed: BTreeMap<(usize, usize), ()> = BTreeMap::new();
        for e in edges {
            let [p, q] = e.nodes;
            listed.insert((p.min(q), p.max(q)), ());
            let ts = uses.get(&(p.min(q), p.max(q))).cloned().unwrap_or_default();
            let inside: Vec<usize> = ts.iter().copied().filter(|&t| m.triangles[t].region == region).collect();
            if ts.len() != 2 || inside.len() != 1 {
                d.conformity_violations += 1;
                d.note(format!("inclusion {j} edge ({p},{q}) does not separate the inclusion"));
                continue;
            }
            let [a, b, c] = m.triangle_points(inside[0]);
            let (s, t) = m.edge_points(e.nodes);
            let mid = (s + t) * 0.5;
            let toward = (a + b + c) / 3.0 - mid;
            if !(e.normal.dot(toward) > 0.0) || !unit_normal_of(e.normal, s, t) {
                d.normal_violations += 1;
                d.note(format!("inclusion {j} edge ({p},{q}) normal does not point into D_{j}"));
            }
        }
        if !is_closed_cycle(edges.iter().map(|e| e.nodes)) {
            d.conformity_violations += 1;
            d.note(format!("inclusion {j} edges do not form a closed cycle"));
        }
        // every interface edge must be listed
        for (&key, ts) in &uses {
            if ts.len() == 2 {
                let r0 = m.triangles[ts[0]].region;
                let r1 = m.triangles[ts[1]].region;
                if (r0 == region) != (r1 == region) && !listed.contains_key(&key) {
                    d.conformity_violations += 1;
                    d.note(format!("interface edge {key:?} of inclusion {j} is not listed"));
                }
            }
        }
    }

    let center = m.boundary_centroid();
    for (k, e) in m.boundary_edges.iter().enumerate() {
        let (s, t) = m.edge_points(e.nodes);
        let mid = (s + t) * 0.5;
        if !(e.normal.dot(mid - center) > 0.0) || !unit_normal_of(e.normal, s, t) {
            d.normal_violations += 1;
            d.note(format!("boundary edge {k} normal does not point outward"));
        }
    }
    if m.triangles.is_empty() {
        d.min_angle_deg = 0.0;
    }
    d
}

fn unit_normal_of(n: Vec2, a: Vec2, b: Vec2) -> bool {
    let e = b - a;
    (n.norm() - 1.0).abs() < 1e-9 && n.dot(e).abs() < 1e-9 * e.norm()
}

fn is_closed_cycle(edges: impl Iterator<Item = [usize; 2]>) -> bool {
    let edges: Vec<[usize; 2]> = edges.collect();
    if edges.is_empty() {
        return true;
    }
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &edges {
        if next.insert(e[0], e[1]).is_some() {
            return false;
        }
    }
    let start = edges[0][0];
    let mut cur = start;
    for _ in 0..edges.len() {
        match next.get(&cur) {
            Some(&n) => cur = n,
            None => return false,
        }
    }
    cur == start
}
