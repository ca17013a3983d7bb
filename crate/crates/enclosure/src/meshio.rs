//! Plain-text mesh files.
//!
//! ```text
//! # free-form comment lines
//! H_TARGET <h>
//! NODES <n>
//! <x> <y>                      one per node, index = line order
//! TRIANGLES <n>
//! <a> <b> <c> <region>         region -1 = background, j = inclusion j
//! BOUNDARY_EDGES <n>
//! <a> <b> <nx> <ny> <arc>      counter-clockwise, outward normal
//! INCLUSION_EDGES <components>
//! COMPONENT <j> <n>
//! <a> <b> <nx> <ny>            normal points into the inclusion
//! ```
//!
//! Reals are written with 17 significant digits, so a write/read round trip
//! reproduces the mesh bit for bit.

use std::fmt::Write as _;
use std::path::Path;
use std::str::{FromStr, SplitWhitespace};

use enclosure_core::mesh::{BoundaryEdge, InclusionEdge, Region, Triangle};
use enclosure_core::{Mesh, Vec2};

use crate::error::{CliError, Result};
use crate::output::fmt_f64;

pub fn write_mesh(m: &Mesh, header: &[String]) -> String {
    let mut s = String::new();
    for line in header {
        let _ = writeln!(s, "# {line}");
    }
    let _ = writeln!(s, "H_TARGET {}", fmt_f64(m.h_target));
    let _ = writeln!(s, "NODES {}", m.nodes.len());
    for p in &m.nodes {
        let _ = writeln!(s, "{} {}", fmt_f64(p.x), fmt_f64(p.y));
    }
    let _ = writeln!(s, "TRIANGLES {}", m.triangles.len());
    for t in &m.triangles {
        let region = match t.region {
            Region::Background => -1,
            Region::Inclusion(j) => j as i64,
        };
        let [a, b, c] = t.nodes;
        let _ = writeln!(s, "{a} {b} {c} {region}");
    }
    let _ = writeln!(s, "BOUNDARY_EDGES {}", m.boundary_edges.len());
    for e in &m.boundary_edges {
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            e.nodes[0],
            e.nodes[1],
            fmt_f64(e.normal.x),
            fmt_f64(e.normal.y),
            fmt_f64(e.arc)
        );
    }
    let _ = writeln!(s, "INCLUSION_EDGES {}", m.inclusion_edges.len());
    for (j, cycle) in m.inclusion_edges.iter().enumerate() {
        let _ = writeln!(s, "COMPONENT {j} {}", cycle.len());
        for e in cycle {
            let _ = writeln!(s, "{} {} {} {}", e.nodes[0], e.nodes[1], fmt_f64(e.normal.x), fmt_f64(e.normal.y));
        }
    }
    s
}

struct Reader<'a> {
    lines: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    path: &'a Path,
    last: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str, path: &'a Path) -> Self {
        let lines: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
        );
        Reader {
            lines: lines.peekable(),
            path,
            last: 0,
        }
    }

    fn err(&self, reason: impl Into<String>) -> CliError {
        CliError::MeshFormat {
            path: self.path.to_path_buf(),
            line: self.last,
            reason: reason.into(),
        }
    }

    fn record(&mut self) -> Result<SplitWhitespace<'a>> {
        match self.lines.next() {
            Some((n, l)) => {
                self.last = n;
                Ok(l.split_whitespace())
            }
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn field<T: FromStr>(&self, it: &mut SplitWhitespace<'a>, what: &str) -> Result<T> {
        let tok = it.next().ok_or_else(|| self.err(format!("missing {what}")))?;
        tok.parse().map_err(|_| self.err(format!("cannot parse {what} from {tok:?}")))
    }

    fn done(&self, it: &mut SplitWhitespace<'a>) -> Result<()> {
        match it.next() {
            Some(extra) => Err(self.err(format!("unexpected trailing field {extra:?}"))),
            None => Ok(()),
        }
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let mut it = self.record()?;
        match it.next() {
            Some(k) if k == name => {}
            other => return Err(self.err(format!("expected section {name}, found {other:?}"))),
        }
        let n = self.field(&mut it, "count")?;
        self.done(&mut it)?;
        Ok(n)
    }

    fn node(&self, it: &mut SplitWhitespace<'a>, count: usize) -> Result<usize> {
        let i: usize = self.field(it, "node index")?;
        if i >= count {
            return Err(self.err(format!("node index {i} out of range (nodes: {count})")));
        }
        Ok(i)
    }
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<Mesh> {
    let mut r = Reader::new(text, path);
    let mut it = r.record()?;
    if it.next() != Some("H_TARGET") {
        return Err(r.err("expected H_TARGET"));
    }
    let h_target: f64 = r.field(&mut it, "h_target")?;
    r.done(&mut it)?;

    let n = r.section("NODES")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let mut it = r.record()?;
        let x = r.field(&mut it, "x")?;
        let y = r.field(&mut it, "y")?;
        r.done(&mut it)?;
        nodes.push(Vec2::new(x, y));
    }

    let nt = r.section("TRIANGLES")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let mut it = r.record()?;
        let a = r.node(&mut it, n)?;
        let b = r.node(&mut it, n)?;
        let c = r.node(&mut it, n)?;
        let region: i64 = r.field(&mut it, "region")?;
        r.done(&mut it)?;
        let region = match region {
            -1 => Region::Background,
            j if j >= 0 => Region::Inclusion(j as usize),
            j => return Err(r.err(format!("invalid region {j}"))),
        };
        triangles.push(Triangle { nodes: [a, b, c], region });
    }

    let nb = r.section("BOUNDARY_EDGES")?;
    let mut boundary_edges = Vec::with_capacity(nb);
    for _ in 0..nb {
        let mut it = r.record()?;
        let a = r.node(&mut it, n)?;
        let b = r.node(&mut it, n)?;
        let nx = r.field(&mut it, "normal x")?;
        let ny = r.field(&mut it, "normal y")?;
        let arc = r.field(&mut it, "arc")?;
        r.done(&mut it)?;
        boundary_edges.push(BoundaryEdge {
            nodes: [a, b],
            normal: Vec2::new(nx, ny),
            arc,
        });
    }

    let nc = r.section("INCLUSION_EDGES")?;
    let mut inclusion_edges = Vec::with_capacity(nc);
    for j in 0..nc {
        let mut it = r.record()?;
        if it.next() != Some("COMPONENT") {
            return Err(r.err("expected COMPONENT"));
        }
        let id: usize = r.field(&mut it, "component index")?;
        if id != j {
            return Err(r.err(format!("expected component {j}, found {id}")));
        }
        let ne: usize = r.field(&mut it, "edge count")?;
        r.done(&mut it)?;
        let mut cycle = Vec::with_capacity(ne);
        for _ in 0..ne {
            let mut it = r.record()?;
            let a = r.node(&mut it, n)?;
            let b = r.node(&mut it, n)?;
            let nx = r.field(&mut it, "normal x")?;
            let ny = r.field(&mut it, "normal y")?;
            r.done(&mut it)?;
            cycle.push(InclusionEdge {
                nodes: [a, b],
                normal: Vec2::new(nx, ny),
            });
        }
        inclusion_edges.push(cycle);
    }
    if let Some((line, extra)) = r.lines.next() {
        r.last = line;
        return Err(r.err(format!("unexpected content {extra:?}")));
    }
    Ok(Mesh {
        nodes,
        triangles,
        boundary_edges,
        inclusion_edges,
        h_target,
    })
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(CliError::MeshNotFound(path.to_path_buf())),
        Err(e) => return Err(CliError::io(path, e)),
    };
    parse_mesh(&text, path)
}
