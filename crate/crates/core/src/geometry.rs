//! Planar primitives: points, directions, polygons, inclusion sets, the disk
//! domain, support functions and the half-plane hull built from them.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::float::{atan2, ceil, cos, sin_cos, sqrt};
use crate::{Error, Result};

/// Relative band (times the inclusion diameter) inside which two vertices are
/// considered to tie for the support value.
pub const REGULARITY_TOL: f64 = 1e-9;

/// An edge at the supporting vertex closer than this angle (radians) to being
/// perpendicular to `ω` makes the direction non-regular.
pub const PERPENDICULAR_ANGLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn from_polar(r: f64, theta: f64) -> Self {
        let (s, c) = sin_cos(theta);
        Vec2::new(r * c, r * s)
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product, i.e. `det(self, o)`.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        sqrt(self.norm_sq())
    }

    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by π/2.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn rotated(self, theta: f64) -> Vec2 {
        let (s, c) = sin_cos(theta);
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    #[inline]
    pub fn angle(self) -> f64 {
        atan2(self.y, self.x)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let s = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * s)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2, o: f64| {
        o == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

#[inline]
pub(crate) fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    robust::orient2d(
        robust::Coord { x: a.x, y: a.y },
        robust::Coord { x: b.x, y: b.y },
        robust::Coord { x: c.x, y: c.y },
    )
}

/// A unit direction `ω` paired with `ω⊥`, the clockwise rotation of `ω` by
/// π/2, so that `det(ω, ω⊥) = -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    omega: Vec2,
    omega_perp: Vec2,
}

impl Direction {
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = sin_cos(theta);
        Direction {
            omega: Vec2::new(c, s),
            omega_perp: Vec2::new(s, -c),
        }
    }

    /// Normalizes `v`; fails on a zero or non-finite vector.
    pub fn new(v: Vec2) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidInput(format!("cannot normalize direction {v:?}")));
        }
        let omega = v / n;
        Ok(Direction {
            omega,
            omega_perp: Vec2::new(omega.y, -omega.x),
        })
    }

    #[inline]
    pub fn omega(&self) -> Vec2 {
        self.omega
    }

    #[inline]
    pub fn omega_perp(&self) -> Vec2 {
        self.omega_perp
    }

    /// Angle of `ω` in `(-π, π]`.
    pub fn angle(&self) -> f64 {
        self.omega.angle()
    }

    pub fn rotated(&self, theta: f64) -> Self {
        Direction::from_angle(self.angle() + theta)
    }
}

/// A simple polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

impl Polygon {
    /// Validates simplicity and positive area. Clockwise input is reversed.
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolygon(format!(
                "{} vertices, need at least 3",
                vertices.len()
            )));
        }
        if let Some(v) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(Error::DegeneratePolygon(format!("non-finite vertex {v:?}")));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::DegeneratePolygon(format!("repeated vertex at index {i}")));
            }
        }
        let area = signed_area(&vertices);
        let scale = bbox_diag(&vertices);
        if !(area.abs() > 1e-14 * scale * scale) {
            return Err(Error::DegeneratePolygon(format!("zero area ({area:e})")));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        // non-adjacent edges must not meet
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::DegeneratePolygon(format!(
                        "edges {i} and {j} intersect (not simple)"
                    )));
                }
            }
        }
        Ok(Polygon { vertices })
    }

    /// Regular `n`-gon inscribed in the circle of `radius` around `center`,
    /// first vertex at angle `phase`.
    pub fn regular(center: Vec2, radius: f64, n: usize, phase: f64) -> Result<Self> {
        let verts = (0..n)
            .map(|k| center + Vec2::from_polar(radius, phase + 2.0 * PI * k as f64 / n as f64))
            .collect();
        Polygon::new(verts)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Polygon::new(alloc::vec![
            Vec2::new(x0, y0),
            Vec2::new(x1, y0),
            Vec2::new(x1, y1),
            Vec2::new(x0, y1),
        ])
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as `(start, end)` pairs in counter-clockwise order.
    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Vec2 {
        let mut c = Vec2::ZERO;
        let mut a2 = 0.0;
        for (p, q) in self.edges() {
            let w = p.cross(q);
            a2 += w;
            c += (p + q) * w;
        }
        c / (3.0 * a2)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn shortest_edge(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).fold(f64::INFINITY, f64::min)
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        max_pairwise(self.vertices.iter().copied())
    }

    /// Crossing-number point-in-polygon test; boundary points are unspecified.
    pub fn contains(&self, p: Vec2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Rotates about the origin.
    pub fn rotated(&self, theta: f64) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|v| v.rotated(theta)).collect(),
        }
    }

    pub fn translated(&self, by: Vec2) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|&v| v + by).collect(),
        }
    }

    /// Same polygon with the vertex list cyclically shifted by `k`.
    pub fn with_start(&self, k: usize) -> Polygon {
        let n = self.vertices.len();
        Polygon {
            vertices: (0..n).map(|i| self.vertices[(i + k) % n]).collect(),
        }
    }

    pub fn support(&self, d: &Direction) -> f64 {
        let w = d.omega();
        self.vertices
            .iter()
            .map(|v| v.dot(w))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn signed_area(v: &[Vec2]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>()
}

fn bbox_diag(v: &[Vec2]) -> f64 {
    let (mut lo, mut hi) = (v[0], v[0]);
    for p in v {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    lo.dist(hi)
}

fn max_pairwise(points: impl Iterator<Item = Vec2> + Clone) -> f64 {
    let pts: Vec<Vec2> = points.collect();
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            best = best.max(pts[i].dist(pts[j]));
        }
    }
    best
}

/// One connected component `D_j` with its constant conductivity `k_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inclusion {
    pub polygon: Polygon,
    pub conductivity: f64,
}

/// Finite union of polygons with pairwise disjoint closures.
///
/// Conductivity `1` is accepted so that null experiments (no contrast) can be
/// expressed with the same geometry; [`InclusionSet::has_contrast`] reports it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InclusionSet {
    components: Vec<Inclusion>,
}

impl InclusionSet {
    pub fn new(components: Vec<Inclusion>) -> Result<Self> {
        for (j, c) in components.iter().enumerate() {
            if !(c.conductivity > 0.0 && c.conductivity.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "conductivity of component {j} must be positive, got {}",
                    c.conductivity
                )));
            }
        }
        for i in 0..components.len() {
            for j in (i + 1)..components.len() {
                if closures_meet(&components[i].polygon, &components[j].polygon) {
                    return Err(Error::Disjointness(i, j));
                }
            }
        }
        Ok(InclusionSet { components })
    }

    /// No inclusions at all.
    pub fn empty() -> Self {
        InclusionSet::default()
    }

    pub fn single(polygon: Polygon, conductivity: f64) -> Result<Self> {
        InclusionSet::new(alloc::vec![Inclusion {
            polygon,
            conductivity
        }])
    }

    pub fn components(&self) -> &[Inclusion] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// True when some component has `k_j ≠ 1`.
    pub fn has_contrast(&self) -> bool {
        self.components.iter().any(|c| c.conductivity != 1.0)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vec2> + Clone + '_ {
        self.components
            .iter()
            .flat_map(|c| c.polygon.vertices().iter().copied())
    }

    pub fn diameter(&self) -> f64 {
        max_pairwise(self.vertices())
    }

    pub fn with_conductivities(&self, k: f64) -> InclusionSet {
        InclusionSet {
            components: self
                .components
                .iter()
                .map(|c| Inclusion {
                    polygon: c.polygon.clone(),
                    conductivity: k,
                })
                .collect(),
        }
    }

    /// Rotates every component about the origin.
    pub fn rotated(&self, theta: f64) -> InclusionSet {
        InclusionSet {
            components: self
                .components
                .iter()
                .map(|c| Inclusion {
                    polygon: c.polygon.rotated(theta),
                    conductivity: c.conductivity,
                })
                .collect(),
        }
    }

    /// Index of the component whose polygon contains `p`.
    pub fn locate(&self, p: Vec2) -> Option<usize> {
        self.components.iter().position(|c| c.polygon.contains(p))
    }
}

fn closures_meet(a: &Polygon, b: &Polygon) -> bool {
    for (p, q) in a.edges() {
        for (r, s) in b.edges() {
            if segments_intersect(p, q, r, s) {
                return true;
            }
        }
    }
    a.contains(b.vertices()[0]) || b.contains(a.vertices()[0])
}

/// The disk `Ω`, approximated on the computational side by an inscribed
/// regular polygon with `boundary_resolution` sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub center: Vec2,
    pub radius: f64,
    pub boundary_resolution: usize,
}

impl DomainSpec {
    pub const MIN_RESOLUTION: usize = 64;

    pub fn circle(center: Vec2, radius: f64, boundary_resolution: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
        }
        if boundary_resolution < Self::MIN_RESOLUTION {
            return Err(Error::InvalidInput(format!(
                "boundary_resolution must be at least {}, got {boundary_resolution}",
                Self::MIN_RESOLUTION
            )));
        }
        Ok(DomainSpec {
            center,
            radius,
            boundary_resolution,
        })
    }

    pub fn unit_disk(boundary_resolution: usize) -> Result<Self> {
        DomainSpec::circle(Vec2::ZERO, 1.0, boundary_resolution)
    }

    /// Vertices of the inscribed boundary polygon, starting at angle 0.
    pub fn boundary_vertices(&self) -> Vec<Vec2> {
        let n = self.boundary_resolution;
        (0..n)
            .map(|k| self.center + Vec2::from_polar(self.radius, 2.0 * PI * k as f64 / n as f64))
            .collect()
    }

    /// Point on the exact circle at polar angle `theta`.
    pub fn boundary_point(&self, theta: f64) -> Vec2 {
        self.center + Vec2::from_polar(self.radius, theta)
    }

    /// Distance from `p` to the exact circle.
    pub fn distance_to_boundary(&self, p: Vec2) -> f64 {
        (self.radius - p.dist(self.center)).abs()
    }

    /// Inradius of the polygonal approximation.
    pub fn polygon_inradius(&self) -> f64 {
        self.radius * cos(PI / self.boundary_resolution as f64)
    }

    /// Every inclusion vertex must lie strictly inside the boundary polygon.
    pub fn check_contains(&self, incl: &InclusionSet) -> Result<()> {
        let inner = self.polygon_inradius();
        for (j, c) in incl.components().iter().enumerate() {
            let reach = c
                .polygon
                .vertices()
                .iter()
                .map(|v| v.dist(self.center))
                .fold(0.0, f64::max);
            if reach >= inner {
                return Err(Error::Clearance {
                    component: j,
                    clearance: inner - reach,
                });
            }
        }
        Ok(())
    }
}

/// `h_D(ω) = sup_{x∈D} x·ω`, attained at a vertex.
pub fn support_function(incl: &InclusionSet, d: &Direction) -> Result<f64> {
    if incl.is_empty() {
        return Err(Error::NoInclusion);
    }
    Ok(incl
        .components()
        .iter()
        .map(|c| c.polygon.support(d))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// True when the supporting line `x·ω = h_D(ω)` touches `∂D` at one vertex
/// only. `tol` is relative to the inclusion diameter.
pub fn is_regular(incl: &InclusionSet, d: &Direction, tol: f64) -> bool {
    let Ok(h) = support_function(incl, d) else {
        return false;
    };
    let band = tol * incl.diameter();
    let w = d.omega();
    let mut hit = None;
    for (j, c) in incl.components().iter().enumerate() {
        for (i, v) in c.polygon.vertices().iter().enumerate() {
            if v.dot(w) > h - band {
                if hit.is_some() {
                    return false;
                }
                hit = Some((j, i));
            }
        }
    }
    let Some((j, i)) = hit else {
        return false;
    };
    let verts = incl.components()[j].polygon.vertices();
    let n = verts.len();
    let v = verts[i];
    let max_cos = crate::float::sin(PERPENDICULAR_ANGLE_TOL);
    [verts[(i + n - 1) % n], verts[(i + 1) % n]].iter().all(|&u| {
        let e = u - v;
        (e.dot(w)).abs() > max_cos * e.norm()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricCondition {
    pub holds: bool,
    pub diam: f64,
    pub dist: f64,
}

/// `diam D < dist(D, ∂Ω)` with both sides computed from the polygon vertices
/// and the exact circle.
pub fn check_geometric_condition(incl: &InclusionSet, dom: &DomainSpec) -> GeometricCondition {
    let diam = incl.diameter();
    let dist = incl
        .vertices()
        .map(|v| dom.distance_to_boundary(v))
        .fold(f64::INFINITY, f64::min);
    GeometricCondition {
        holds: diam < dist,
        diam,
        dist,
    }
}

/// Per-direction bookkeeping carried next to a support estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SupportDiagnostics {
    pub regular: bool,
    pub trusted: bool,
    pub r_squared: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportEntry {
    pub direction: Direction,
    pub h: f64,
    pub diagnostics: SupportDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SupportTable {
    entries: Vec<SupportEntry>,
}

impl SupportTable {
    /// Rejects tables with repeated directions.
    pub fn new(entries: Vec<SupportEntry>) -> Result<Self> {
        for i in 0..entries.len() {
            for j in (i + 1)..entries.len() {
                if entries[i].direction.omega().dist(entries[j].direction.omega()) < 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "duplicate direction at angle {}",
                        entries[i].direction.angle()
                    )));
                }
            }
        }
        Ok(SupportTable { entries })
    }

    /// Table of exact support values, handy for tests and for the reference hull.
    pub fn exact(incl: &InclusionSet, directions: &[Direction]) -> Result<Self> {
        let entries = directions
            .iter()
            .map(|d| {
                Ok(SupportEntry {
                    direction: *d,
                    h: support_function(incl, d)?,
                    diagnostics: SupportDiagnostics {
                        regular: is_regular(incl, d, REGULARITY_TOL),
                        trusted: true,
                        r_squared: None,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SupportTable::new(entries)
    }

    pub fn entries(&self) -> &[SupportEntry] {
        &self.entries
    }
}

/// `n` directions at angles `2πk/n + phase`.
pub fn uniform_directions(n: usize, phase: f64) -> Vec<Direction> {
    (0..n)
        .map(|k| Direction::from_angle(phase + 2.0 * PI * k as f64 / n as f64))
        .collect()
}

/// A probing direction, possibly a replacement for a non-regular one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedDirection {
    pub direction: Direction,
    /// Angle of the uniform direction this one replaces, if any.
    pub replaces: Option<f64>,
    pub regular: bool,
}

/// `n` uniform directions; each one that is not regular for `incl` is
/// replaced by the two directions rotated by `±perturbation`.
pub fn plan_directions(incl: &InclusionSet, n: usize, perturbation: f64) -> Vec<PlannedDirection> {
    let mut out = Vec::with_capacity(n);
    for d in uniform_directions(n, 0.0) {
        if incl.is_empty() || is_regular(incl, &d, REGULARITY_TOL) {
            out.push(PlannedDirection {
                direction: d,
                replaces: None,
                regular: !incl.is_empty(),
            });
            continue;
        }
        for sign in [-1.0, 1.0] {
            let r = d.rotated(sign * perturbation);
            out.push(PlannedDirection {
                direction: r,
                replaces: Some(d.angle()),
                regular: is_regular(incl, &r, REGULARITY_TOL),
            });
        }
    }
    out
}

/// Counter-clockwise convex hull of a point set (Andrew's monotone chain),
/// without collinear points.
pub fn convex_hull(points: &[Vec2]) -> Result<Polygon> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::DegeneratePolygon(format!("{} distinct points", pts.len())));
    }
    fn chain<'a>(pts: impl Iterator<Item = &'a Vec2>) -> Vec<Vec2> {
        let mut out: Vec<Vec2> = Vec::new();
        for &p in pts {
            while out.len() >= 2 && (out[out.len() - 1] - out[out.len() - 2]).cross(p - out[out.len() - 2]) <= 0.0 {
                out.pop();
            }
            out.push(p);
        }
        out.pop();
        out
    }
    let mut hull = chain(pts.iter());
    hull.extend(chain(pts.iter().rev()));
    Polygon::new(hull)
}

/// Intersection of the half-planes `{x·ω ≤ ĥ(ω)}`, as a counter-clockwise
/// convex polygon starting at its lexicographically smallest vertex.
pub fn hull_from_support(table: &SupportTable) -> Result<Polygon> {
    let entries = table.entries();
    if entries.len() < 3 {
        return Err(Error::Hull {
            kind: "unbounded",
            angles: entries.iter().map(|e| e.direction.angle()).collect(),
        });
    }
    let mut angles: Vec<(f64, usize)> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.direction.angle(), i))
        .collect();
    angles.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in 0..angles.len() {
        let a = angles[w].0;
        let b = if w + 1 < angles.len() {
            angles[w + 1].0
        } else {
            angles[0].0 + 2.0 * PI
        };
        if b - a >= PI {
            return Err(Error::Hull {
                kind: "unbounded",
                angles: alloc::vec![a, angles[(w + 1) % angles.len()].0],
            });
        }
    }

    let scale = 1.0 + entries.iter().map(|e| e.h.abs()).fold(0.0, f64::max);
    let big = 1e6 * scale;
    let mut poly = alloc::vec![
        Vec2::new(-big, -big),
        Vec2::new(big, -big),
        Vec2::new(big, big),
        Vec2::new(-big, big),
    ];
    for &(_, i) in &angles {
        let e = &entries[i];
        poly = clip_half_plane(&poly, e.direction.omega(), e.h, 1e-12 * scale);
        if poly.len() < 3 {
            return Err(Error::Hull {
                kind: "empty",
                angles: alloc::vec![e.direction.angle()],
            });
        }
    }
    if poly.iter().any(|v| v.x.abs() >= 0.5 * big || v.y.abs() >= 0.5 * big) {
        return Err(Error::Hull {
            kind: "unbounded",
            angles: angles.iter().map(|a| a.0).collect(),
        });
    }
    let poly = simplify_convex(poly, 1e-9 * scale);
    if poly.len() < 3 {
        return Err(Error::Hull {
            kind: "empty",
            angles: angles.iter().map(|a| a.0).collect(),
        });
    }
    let poly = simplify_convex(snap_vertices_to_lines(poly, entries, 1e-8 * scale), 1e-9 * scale);
    let tie = 1e-9 * scale;
    let start = (0..poly.len())
        .min_by(|&a, &b| {
            let (p, q) = (poly[a], poly[b]);
            if (p.x - q.x).abs() <= tie {
                p.y.total_cmp(&q.y)
            } else {
                p.x.total_cmp(&q.x)
            }
        })
        .unwrap_or(0);
    let rotated: Vec<Vec2> = (0..poly.len()).map(|i| poly[(start + i) % poly.len()]).collect();
    Polygon::new(rotated)
}

/// Clipping against a large box loses a few digits; recompute each vertex as
/// the exact intersection of the support lines carrying its two edges.
/// Vertices whose edges are too short to identify their lines stay put.
fn snap_vertices_to_lines(poly: Vec<Vec2>, entries: &[SupportEntry], max_shift: f64) -> Vec<Vec2> {
    let n = poly.len();
    let line_of = |a: Vec2, b: Vec2| {
        entries
            .iter()
            .min_by(|e, f| {
                let r = |e: &SupportEntry| {
                    let w = e.direction.omega();
                    (a.dot(w) - e.h).abs().max((b.dot(w) - e.h).abs())
                };
                r(e).total_cmp(&r(f))
            })
            .map(|e| (e.direction.omega(), e.h))
            .expect("hull has constraints")
    };
    let lines: Vec<(Vec2, f64)> = (0..n).map(|i| line_of(poly[i], poly[(i + 1) % n])).collect();
    (0..n)
        .map(|i| {
            let (w1, h1) = lines[(i + n - 1) % n];
            let (w2, h2) = lines[i];
            let det = w1.cross(w2);
            if det.abs() < 1e-12 {
                return poly[i];
            }
            let v = Vec2::new((h1 * w2.y - h2 * w1.y) / det, (w1.x * h2 - w2.x * h1) / det);
            if v.dist(poly[i]) <= max_shift {
                v
            } else {
                poly[i]
            }
        })
        .collect()
}

fn clip_half_plane(poly: &[Vec2], w: Vec2, h: f64, eps: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let fa = a.dot(w) - h;
        let fb = b.dot(w) - h;
        if fa <= eps {
            out.push(a);
        }
        if (fa < -eps && fb > eps) || (fa > eps && fb < -eps) {
            let s = fa / (fa - fb);
            out.push(a + (b - a) * s);
        }
    }
    out
}

fn simplify_convex(mut poly: Vec<Vec2>, eps: f64) -> Vec<Vec2> {
    loop {
        let n = poly.len();
        if n < 3 {
            return poly;
        }
        let mut removed = false;
        for i in 0..n {
            let prev = poly[(i + n - 1) % n];
            let cur = poly[i];
            let next = poly[(i + 1) % n];
            let dup = cur.dist(next) <= eps;
            let collinear = (cur - prev).cross(next - cur).abs() <= eps * (next - prev).norm();
            if dup || collinear {
                poly.remove(i);
                removed = true;
                break;
            }
        }
        if !removed {
            return poly;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HausdorffResult {
    pub distance: f64,
    /// Boundary sampling step used for both directions.
    pub step: f64,
}

/// Symmetric Hausdorff distance between the polygon boundaries, sampled at
/// step `diam / 2000` and measured against the exact other boundary.
pub fn hausdorff_distance(a: &Polygon, b: &Polygon) -> HausdorffResult {
    let diam = a.diameter().max(b.diameter());
    let step = diam / 2000.0;
    let one_sided = |p: &Polygon, q: &Polygon| {
        let mut worst = 0.0f64;
        for (s, e) in p.edges() {
            let n = ceil(s.dist(e) / step).max(1.0) as usize;
            for k in 0..n {
                let x = s + (e - s) * (k as f64 / n as f64);
                worst = worst.max(q.boundary_distance(x));
            }
        }
        worst
    };
    HausdorffResult {
        distance: one_sided(a, b).max(one_sided(b, a)),
        step,
    }
}
