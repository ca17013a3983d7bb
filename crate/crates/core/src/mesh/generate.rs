//! Conforming Delaunay mesh generation.
//!
//! 1. Seed the boundary polygon of `Ω` and every inclusion polygon, splitting
//!    each constraint segment into pieces no longer than `h_target`.
//! 2. Add a hexagonal lattice of interior points at spacing `h_target`, kept
//!    clear of every constraint segment so no piece is encroached.
//! 3. Bowyer–Watson insertion; any constraint piece missing from the
//!    triangulation is recovered by inserting its midpoint.
//! 4. Refine: a triangle with circumradius above `h_target` gets its
//!    circumcenter inserted, unless that point encroaches a constraint piece
//!    (inside its diametral circle) or leaves `Ω`, in which case the piece is
//!    split instead.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::delaunay::{circumcircle, Triangulation};
use super::{BoundaryEdge, InclusionEdge, Mesh, Region, Triangle};
use crate::float::{atan2, ceil, cos, floor, sqrt};
use crate::geometry::{point_segment_distance, DomainSpec, InclusionSet, Vec2};
use crate::{Error, Result};

const MAX_PASSES: usize = 200;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: u32,
    b: u32,
}

struct Builder<'a> {
    dom: &'a DomainSpec,
    tr: Triangulation,
    segments: Vec<Segment>,
    h: f64,
    merge_tol: f64,
    iterations: usize,
}

/// Generates a conforming mesh of `dom` in which every inclusion edge is a
/// chain of triangle edges.
pub fn generate_mesh(dom: &DomainSpec, incl: &InclusionSet, h_target: f64) -> Result<Mesh> {
    if !(h_target > 0.0 && h_target.is_finite()) {
        return Err(Error::InvalidInput(format!("h_target must be positive, got {h_target}")));
    }
    if h_target >= dom.radius {
        return Err(Error::InvalidInput(format!(
            "h_target {h_target} is not smaller than the domain radius {}",
            dom.radius
        )));
    }
    dom.check_contains(incl)?;
    for (j, c) in incl.components().iter().enumerate() {
        let shortest = c.polygon.shortest_edge();
        if h_target >= shortest {
            return Err(Error::InvalidInput(format!(
                "h_target {h_target} must be smaller than the shortest edge ({shortest}) of inclusion {j}"
            )));
        }
    }

    let mut b = Builder {
        dom,
        tr: Triangulation::new(dom.center, dom.radius),
        segments: Vec::new(),
        h: h_target,
        merge_tol: 1e-12 * dom.radius,
        iterations: 0,
    };

    let ring = dom.boundary_vertices();
    b.add_constraint_loop(&ring)?;
    for c in incl.components() {
        b.add_constraint_loop(c.polygon.vertices())?;
    }
    b.seed_lattice(incl)?;
    b.refine()?;
    b.finish(incl)
}

impl Builder<'_> {
    fn insert(&mut self, p: Vec2) -> Result<u32> {
        self.iterations += 1;
        self.tr.insert(p, self.merge_tol).ok_or_else(|| Error::MeshGeneration {
            reason: format!("point {p:?} fell outside the enclosing triangle"),
            iterations: self.iterations,
        })
    }

    fn add_constraint_loop(&mut self, verts: &[Vec2]) -> Result<()> {
        let n = verts.len();
        let first = self.insert(verts[0])?;
        let mut prev = first;
        for i in 0..n {
            let (p, q) = (verts[i], verts[(i + 1) % n]);
            let pieces = ceil(p.dist(q) / self.h).max(1.0) as usize;
            for k in 1..=pieces {
                let next = if k == pieces {
                    if i + 1 == n {
                        first
                    } else {
                        self.insert(q)?
                    }
                } else {
                    self.insert(p + (q - p) * (k as f64 / pieces as f64))?
                };
                self.segments.push(Segment { a: prev, b: next });
                prev = next;
            }
        }
        Ok(())
    }

    fn point(&self, i: u32) -> Vec2 {
        self.tr.points[i as usize]
    }

    fn inside_domain(&self, p: Vec2) -> bool {
        let n = self.dom.boundary_resolution as f64;
        let d = p - self.dom.center;
        let sector = 2.0 * PI / n;
        let mut phi = atan2(d.y, d.x);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        let k = floor(phi / sector);
        let mid = (k + 0.5) * sector;
        d.dot(Vec2::from_polar(1.0, mid)) < self.dom.radius * cos(sector / 2.0)
    }

    fn seed_lattice(&mut self, incl: &InclusionSet) -> Result<()> {
        let s = self.h;
        let clearance = 0.75 * s;
        let dy = s * sqrt(3.0) / 2.0;
        let r = self.dom.radius;
        let inner = self.dom.polygon_inradius();
        let rows = floor(2.0 * r / dy) as i64 + 1;
        let edges: Vec<(Vec2, Vec2)> = incl.components().iter().flat_map(|c| c.polygon.edges()).collect();
        for row in 0..=rows {
            let y = -r + row as f64 * dy;
            let offset = if row % 2 == 0 { 0.0 } else { s / 2.0 };
            let cols = floor(2.0 * r / s) as i64 + 1;
            let mut line: Vec<Vec2> = (0..=cols)
                .map(|c| self.dom.center + Vec2::new(-r + offset + c as f64 * s, y))
                .filter(|&p| {
                    inner - p.dist(self.dom.center) >= clearance
                        && edges.iter().all(|&(a, b)| point_segment_distance(p, a, b) >= clearance)
                })
                .collect();
            if row % 2 == 1 {
                line.reverse();
            }
            for p in line {
                self.insert(p)?;
            }
        }
        Ok(())
    }

    /// Inserts midpoints of constraint pieces until every piece is an edge.
    fn recover_constraints(&mut self) -> Result<()> {
        for _ in 0..MAX_PASSES {
            let edges = self.tr.edge_list();
            let missing: Vec<usize> = (0..self.segments.len())
                .filter(|&i| {
                    let s = self.segments[i];
                    edges.binary_search(&(s.a.min(s.b), s.a.max(s.b))).is_err()
                })
                .collect();
            if missing.is_empty() {
                return Ok(());
            }
            for i in missing {
                self.split_segment(i)?;
            }
        }
        Err(Error::MeshGeneration {
            reason: "constraint recovery did not converge".into(),
            iterations: self.iterations,
        })
    }

    fn split_segment(&mut self, i: usize) -> Result<()> {
        let s = self.segments[i];
        let (p, q) = (self.point(s.a), self.point(s.b));
        if p.dist(q) < 1e-6 * self.h {
            return Err(Error::MeshGeneration {
                reason: format!("constraint piece shrank below {:e}", 1e-6 * self.h),
                iterations: self.iterations,
            });
        }
        let m = self.insert((p + q) * 0.5)?;
        if m == s.a || m == s.b {
            return Err(Error::MeshGeneration {
                reason: "midpoint merged with an endpoint".into(),
                iterations: self.iterations,
            });
        }
        self.segments[i] = Segment { a: s.a, b: m };
        self.segments.push(Segment { a: m, b: s.b });
        Ok(())
    }

    fn triangle_inside(&self, v: [u32; 3]) -> bool {
        if v.iter().any(|&i| self.tr.is_super(i)) {
            return false;
        }
        let [a, b, c] = v.map(|i| self.point(i));
        self.inside_domain((a + b + c) / 3.0)
    }

    fn refine(&mut self) -> Result<()> {
        for _ in 0..MAX_PASSES {
            self.recover_constraints()?;
            let bad: Vec<(u32, [u32; 3])> = self
                .tr
                .alive()
                .filter(|(_, t)| self.triangle_inside(t.v))
                .filter(|(_, t)| {
                    let [a, b, c] = t.v.map(|i| self.point(i));
                    circumcircle(a, b, c).1 > self.h
                })
                .map(|(id, t)| (id, t.v))
                .collect();
            if bad.is_empty() {
                return Ok(());
            }
            for (id, v) in bad {
                // earlier insertions in this pass may already have removed it
                let t = &self.tr.tris[id as usize];
                if !t.alive || t.v != v {
                    continue;
                }
                let [a, b, c] = v.map(|i| self.point(i));
                let (center, radius) = circumcircle(a, b, c);
                if radius <= self.h {
                    continue;
                }
                let encroached: Vec<usize> = (0..self.segments.len())
                    .filter(|&i| {
                        let s = self.segments[i];
                        (center - self.point(s.a)).dot(center - self.point(s.b)) < 0.0
                    })
                    .collect();
                if !encroached.is_empty() {
                    for i in encroached {
                        self.split_segment(i)?;
                    }
                } else if !self.inside_domain(center) {
                    let nearest = (0..self.segments.len())
                        .min_by(|&i, &j| {
                            let di = self.segment_distance(i, center);
                            let dj = self.segment_distance(j, center);
                            di.total_cmp(&dj)
                        })
                        .expect("domain has boundary segments");
                    self.split_segment(nearest)?;
                } else {
                    self.insert(center)?;
                }
            }
        }
        Err(Error::MeshGeneration {
            reason: "circumradius refinement did not terminate".into(),
            iterations: self.iterations,
        })
    }

    fn segment_distance(&self, i: usize, p: Vec2) -> f64 {
        let s = self.segments[i];
        point_segment_distance(p, self.point(s.a), self.point(s.b))
    }

    fn finish(self, incl: &InclusionSet) -> Result<Mesh> {
        let kept: Vec<[u32; 3]> = self
            .tr
            .alive()
            .filter(|(_, t)| self.triangle_inside(t.v))
            .map(|(_, t)| t.v)
            .collect();
        let mut remap = alloc::vec![usize::MAX; self.tr.points.len()];
        let mut used = alloc::vec![false; self.tr.points.len()];
        for v in &kept {
            for &i in v {
                used[i as usize] = true;
            }
        }
        let mut nodes = Vec::new();
        for (i, &u) in used.iter().enumerate() {
            if u {
                remap[i] = nodes.len();
                nodes.push(self.tr.points[i]);
            }
        }

        let triangles: Vec<Triangle> = kept
            .iter()
            .map(|v| {
                let nodes3 = v.map(|i| remap[i as usize]);
                let [a, b, c] = nodes3.map(|i| nodes[i]);
                let region = match incl.locate((a + b + c) / 3.0) {
                    Some(j) => Region::Inclusion(j),
                    None => Region::Background,
                };
                Triangle { nodes: nodes3, region }
            })
            .collect();

        // directed edge -> region of the triangle on its left
        let mut left: BTreeMap<(usize, usize), Region> = BTreeMap::new();
        for t in &triangles {
            for k in 0..3 {
                left.insert((t.nodes[k], t.nodes[(k + 1) % 3]), t.region);
            }
        }

        let mut next = BTreeMap::new();
        for &(a, b) in left.keys() {
            if !left.contains_key(&(b, a)) {
                next.insert(a, b);
            }
        }
        let start = *next.keys().next().ok_or_else(|| Error::MeshGeneration {
            reason: "mesh has no boundary".into(),
            iterations: self.iterations,
        })?;
        let boundary_cycle = chain(&next, start).ok_or_else(|| Error::MeshGeneration {
            reason: "boundary edges do not form a single cycle".into(),
            iterations: self.iterations,
        })?;
        let mut arc = 0.0;
        let boundary_edges = boundary_cycle
            .iter()
            .map(|&(a, b)| {
                let e = nodes[b] - nodes[a];
                let l = e.norm();
                let edge = BoundaryEdge {
                    nodes: [a, b],
                    normal: Vec2::new(e.y, -e.x) / l,
                    arc,
                };
                arc += l;
                edge
            })
            .collect();

        let mut inclusion_edges = Vec::with_capacity(incl.len());
        for j in 0..incl.len() {
            let region = Region::Inclusion(j);
            let mut next = BTreeMap::new();
            for (&(a, b), &r) in &left {
                if r == region && left.get(&(b, a)).is_some_and(|&o| o != region) {
                    next.insert(a, b);
                }
            }
            let start = *next.keys().next().ok_or_else(|| Error::MeshGeneration {
                reason: format!("inclusion {j} has no interface edges"),
                iterations: self.iterations,
            })?;
            let cycle = chain(&next, start).ok_or_else(|| Error::MeshGeneration {
                reason: format!("interface of inclusion {j} is not a single cycle"),
                iterations: self.iterations,
            })?;
            inclusion_edges.push(
                cycle
                    .iter()
                    .map(|&(a, b)| {
                        let e = nodes[b] - nodes[a];
                        InclusionEdge {
                            nodes: [a, b],
                            normal: e.perp() / e.norm(),
                        }
                    })
                    .collect(),
            );
        }

        Ok(Mesh {
            nodes,
            triangles,
            boundary_edges,
            inclusion_edges,
            h_target: self.h,
        })
    }
}

/// Follows `next` from `start`; succeeds only if every entry is visited once.
fn chain(next: &BTreeMap<usize, usize>, start: usize) -> Option<Vec<(usize, usize)>> {
    let mut out = Vec::with_capacity(next.len());
    let mut cur = start;
    loop {
        let n = *next.get(&cur)?;
        out.push((cur, n));
        cur = n;
        if cur == start {
            break;
        }
        if out.len() > next.len() {
            return None;
        }
    }
    (out.len() == next.len()).then_some(out)
}
