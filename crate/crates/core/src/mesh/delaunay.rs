//! Incremental Bowyer–Watson Delaunay triangulation with triangle adjacency.
//!
//! Predicates go through `robust` (adaptive exact arithmetic), so cavities are
//! always star-shaped and the adjacency never tangles, even for the cocircular
//! rings of boundary nodes a disk mesh produces.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{orient, Vec2};

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tri {
    pub v: [u32; 3],
    /// `n[i]` is the neighbor across the edge opposite `v[i]`.
    pub n: [u32; 3],
    pub alive: bool,
}

pub(crate) struct Triangulation {
    pub points: Vec<Vec2>,
    pub tris: Vec<Tri>,
    /// Number of leading points forming the enclosing super-triangle.
    pub n_super: usize,
    last: u32,
    free: Vec<u32>,
    // scratch buffers reused across insertions
    stack: Vec<u32>,
    cavity: Vec<u32>,
    mark: Vec<u32>,
    stamp: u32,
}

#[inline]
fn incircle(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    let co = |p: Vec2| robust::Coord { x: p.x, y: p.y };
    robust::incircle(co(a), co(b), co(c), co(d))
}

impl Triangulation {
    /// Starts from a super-triangle enclosing the disk of `radius` around `center`.
    pub fn new(center: Vec2, radius: f64) -> Self {
        let m = 50.0 * radius.max(1e-300);
        let points = vec![
            center + Vec2::new(-m, -m),
            center + Vec2::new(m, -m),
            center + Vec2::new(0.0, m),
        ];
        let tris = vec![Tri {
            v: [0, 1, 2],
            n: [NONE; 3],
            alive: true,
        }];
        Triangulation {
            points,
            tris,
            n_super: 3,
            last: 0,
            free: Vec::new(),
            stack: Vec::new(),
            cavity: Vec::new(),
            mark: vec![0],
            stamp: 0,
        }
    }

    pub fn is_super(&self, v: u32) -> bool {
        (v as usize) < self.n_super
    }

    /// Visibility walk from the last touched triangle.
    fn locate(&self, p: Vec2) -> Option<u32> {
        let mut t = self.last;
        if !self.tris[t as usize].alive {
            t = self.tris.iter().position(|t| t.alive)? as u32;
        }
        let limit = 4 * self.tris.len() + 16;
        let mut step = 0usize;
        'walk: loop {
            step += 1;
            if step > limit {
                break;
            }
            let tri = &self.tris[t as usize];
            // rotate the starting edge to avoid cycling on degenerate walks
            for k in 0..3 {
                let i = (k + step) % 3;
                let a = self.points[tri.v[(i + 1) % 3] as usize];
                let b = self.points[tri.v[(i + 2) % 3] as usize];
                if orient(a, b, p) < 0.0 {
                    let nb = tri.n[i];
                    if nb == NONE {
                        return None;
                    }
                    t = nb;
                    continue 'walk;
                }
            }
            return Some(t);
        }
        // fallback: exhaustive search
        self.tris.iter().enumerate().find_map(|(i, tri)| {
            if !tri.alive {
                return None;
            }
            let inside = (0..3).all(|k| {
                let a = self.points[tri.v[(k + 1) % 3] as usize];
                let b = self.points[tri.v[(k + 2) % 3] as usize];
                orient(a, b, p) >= 0.0
            });
            inside.then_some(i as u32)
        })
    }

    fn alloc_tri(&mut self, tri: Tri) -> u32 {
        if let Some(i) = self.free.pop() {
            self.tris[i as usize] = tri;
            i
        } else {
            self.tris.push(tri);
            self.mark.push(0);
            (self.tris.len() - 1) as u32
        }
    }

    /// Inserts `p`; returns its index, or the index of an existing vertex
    /// closer than `merge_tol`. `None` means `p` is outside the super-triangle.
    pub fn insert(&mut self, p: Vec2, merge_tol: f64) -> Option<u32> {
        let start = self.locate(p)?;
        for &v in &self.tris[start as usize].v {
            if self.points[v as usize].dist(p) <= merge_tol {
                return Some(v);
            }
        }
        let new_index = self.points.len() as u32;
        self.points.push(p);

        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.stamp = 1;
        }
        let stamp = self.stamp;
        self.cavity.clear();
        self.stack.clear();
        self.stack.push(start);
        self.mark[start as usize] = stamp;
        while let Some(t) = self.stack.pop() {
            self.cavity.push(t);
            let tri = self.tris[t as usize];
            for &nb in &tri.n {
                if nb == NONE || self.mark[nb as usize] == stamp {
                    continue;
                }
                let o = &self.tris[nb as usize];
                let [a, b, c] = o.v.map(|i| self.points[i as usize]);
                if incircle(a, b, c, p) > 0.0 {
                    self.mark[nb as usize] = stamp;
                    self.stack.push(nb);
                }
            }
        }

        // boundary edges of the cavity, each with its outside neighbor
        let mut rim: Vec<(u32, u32, u32)> = Vec::with_capacity(self.cavity.len() + 2);
        for &t in &self.cavity {
            let tri = self.tris[t as usize];
            for i in 0..3 {
                let nb = tri.n[i];
                if nb != NONE && self.mark[nb as usize] == stamp {
                    continue;
                }
                rim.push((tri.v[(i + 1) % 3], tri.v[(i + 2) % 3], nb));
            }
        }
        let cavity = core::mem::take(&mut self.cavity);
        for &t in &cavity {
            self.tris[t as usize].alive = false;
            self.free.push(t);
        }
        self.cavity = cavity;

        let mut created: Vec<u32> = Vec::with_capacity(rim.len());
        let mut by_start: BTreeMap<u32, u32> = BTreeMap::new();
        for &(a, b, outside) in &rim {
            let t = self.alloc_tri(Tri {
                v: [a, b, new_index],
                n: [NONE, NONE, outside],
                alive: true,
            });
            if outside != NONE {
                let o = &mut self.tris[outside as usize];
                for k in 0..3 {
                    let (x, y) = (o.v[(k + 1) % 3], o.v[(k + 2) % 3]);
                    if x == b && y == a {
                        o.n[k] = t;
                    }
                }
            }
            by_start.insert(a, t);
            created.push(t);
        }
        for &t in &created {
            let b = self.tris[t as usize].v[1];
            // edge (b, p) is shared with the new triangle whose rim starts at b,
            // where it is the edge opposite that triangle's second vertex
            let next = by_start.get(&b).copied().unwrap_or(NONE);
            self.tris[t as usize].n[0] = next;
            if next != NONE {
                self.tris[next as usize].n[1] = t;
            }
        }
        self.last = *created.first().unwrap_or(&self.last);
        Some(new_index)
    }

    pub fn alive(&self) -> impl Iterator<Item = (u32, &Tri)> {
        self.tris
            .iter()
            .enumerate()
            .filter(|(_, t)| t.alive)
            .map(|(i, t)| (i as u32, t))
    }

    /// Sorted list of undirected edges `(min, max)` of live triangles.
    pub fn edge_list(&self) -> Vec<(u32, u32)> {
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(3 * self.tris.len());
        for (_, t) in self.alive() {
            for i in 0..3 {
                let (a, b) = (t.v[i], t.v[(i + 1) % 3]);
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }
}

pub(crate) fn circumcircle(a: Vec2, b: Vec2, c: Vec2) -> (Vec2, f64) {
    let ab = b - a;
    let ac = c - a;
    let d = 2.0 * ab.cross(ac);
    let (l1, l2) = (ab.norm_sq(), ac.norm_sq());
    let off = Vec2::new(ac.y * l1 - ab.y * l2, ab.x * l2 - ac.x * l1) / d;
    (a + off, off.norm())
}
