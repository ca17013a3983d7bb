//! P1 finite elements for `∇·γ∇u = 0` in `Ω` with `γ ∂u/∂ν = g` on `∂Ω`.
//!
//! The pure Neumann system is singular with constants in its kernel. The
//! boundary-mean gauge `∫_{∂Ω} u = 0` is imposed through a Lagrange
//! multiplier: with `c_i = ∫_{∂Ω} φ_i` the multiplier is `λ = Σb / Σc`,
//! the consistent system `A u = b − λc` is solved by conjugate gradients, and
//! `u` is then shifted so that `cᵀu = 0`. Complex data is two real solves.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::geometry::{InclusionSet, Vec2};
use crate::mesh::{Mesh, Region};
use crate::sparse::{dot, norm, pcg, CgOptions, CgReport, Csr, NullSpace};
use crate::{Error, Result};

/// Conductivity per mesh region: `1` on the background, `k_j` on `D_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductivityMap {
    inclusion: Vec<f64>,
}

impl ConductivityMap {
    pub fn from_inclusions(incl: &InclusionSet) -> Self {
        ConductivityMap {
            inclusion: incl.components().iter().map(|c| c.conductivity).collect(),
        }
    }

    /// `γ ≡ 1`.
    pub fn background() -> Self {
        ConductivityMap { inclusion: Vec::new() }
    }

    pub fn value(&self, region: Region) -> f64 {
        match region {
            Region::Background => 1.0,
            Region::Inclusion(j) => self.inclusion.get(j).copied().unwrap_or(1.0),
        }
    }

    pub fn has_contrast(&self) -> bool {
        self.inclusion.iter().any(|&k| k != 1.0)
    }
}

/// Piecewise-constant complex Neumann data, one value per entry of
/// [`Mesh::boundary_edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub values: Vec<Complex64>,
}

impl BoundaryData {
    /// Evaluates `f(midpoint, outward normal)` on every boundary edge.
    pub fn from_fn(m: &Mesh, mut f: impl FnMut(Vec2, Vec2) -> Complex64) -> Self {
        let values = m
            .boundary_edges
            .iter()
            .map(|e| {
                let (a, b) = m.edge_points(e.nodes);
                f((a + b) * 0.5, e.normal)
            })
            .collect();
        BoundaryData { values }
    }

    pub fn from_real(values: impl IntoIterator<Item = f64>) -> Self {
        BoundaryData {
            values: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn zeros(m: &Mesh) -> Self {
        BoundaryData {
            values: vec![Complex64::new(0.0, 0.0); m.boundary_edges.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        BoundaryData {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &BoundaryData) -> Self {
        BoundaryData {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }

    /// Midpoint-rule `∫_{∂Ω} g`.
    pub fn total_flux(&self, m: &Mesh) -> Complex64 {
        edge_lengths(m).zip(&self.values).map(|(l, v)| v * l).sum()
    }

    /// Midpoint-rule `∫_{∂Ω} |g|`.
    pub fn abs_flux(&self, m: &Mesh) -> f64 {
        edge_lengths(m).zip(&self.values).map(|(l, v)| v.norm() * l).sum()
    }

    /// Nodal load vectors `b_i = ∫_{∂Ω} g φ_i` for the real and imaginary
    /// parts; each edge sends `g·len/2` to both endpoints.
    pub fn load(&self, m: &Mesh) -> (Vec<f64>, Vec<f64>) {
        let mut re = vec![0.0; m.nodes.len()];
        let mut im = vec![0.0; m.nodes.len()];
        for ((e, l), v) in m.boundary_edges.iter().zip(edge_lengths(m)).zip(&self.values) {
            for &i in &e.nodes {
                re[i] += 0.5 * l * v.re;
                im[i] += 0.5 * l * v.im;
            }
        }
        (re, im)
    }
}

fn edge_lengths(m: &Mesh) -> impl Iterator<Item = f64> + '_ {
    m.boundary_edges.iter().map(move |e| {
        let (a, b) = m.edge_points(e.nodes);
        a.dist(b)
    })
}

/// How the additive constant of a Neumann solution was fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// `∫_{∂Ω} u = 0`.
    BoundaryMean,
    /// `u = 0` at the given node.
    Pinned(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub gauge: Gauge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub re: ScalarField,
    pub im: ScalarField,
}

impl ComplexField {
    pub fn value(&self, i: usize) -> Complex64 {
        Complex64::new(self.re.values[i], self.im.values[i])
    }

    pub fn len(&self) -> usize {
        self.re.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub cg: CgOptions,
    pub gauge: Gauge,
    /// Allowed `|∫g| / ∫|g|` before data is rejected as not zero-mean.
    pub zero_mean_tol: f64,
    /// Required `‖Au − b‖ / ‖b‖` of the returned solution.
    pub residual_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            cg: CgOptions::default(),
            gauge: Gauge::BoundaryMean,
            zero_mean_tol: 1e-2,
            residual_tol: 1e-10,
        }
    }
}

/// Assembled stiffness matrix together with the boundary weights `c_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessSystem {
    pub matrix: Csr,
    pub boundary_weights: Vec<f64>,
}

/// Gradients of the three barycentric basis functions and the signed area.
pub fn basis_gradients(p: [Vec2; 3]) -> ([Vec2; 3], f64) {
    let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
    let g = core::array::from_fn(|i| (p[(i + 2) % 3] - p[(i + 1) % 3]).perp() / (2.0 * area));
    (g, area)
}

/// `γ ∫_T ∇φ_i·∇φ_j` for one triangle.
pub fn element_stiffness(p: [Vec2; 3], gamma: f64) -> Option<[[f64; 3]; 3]> {
    let (g, area) = basis_gradients(p);
    let scale = (p[0].dist(p[1])).max(p[1].dist(p[2])).max(p[2].dist(p[0]));
    if !(area > 1e-14 * scale * scale) {
        return None;
    }
    Some(core::array::from_fn(|i| {
        core::array::from_fn(|j| gamma * area * g[i].dot(g[j]))
    }))
}

/// Global stiffness matrix `A_ij = Σ_T γ_T ∫_T ∇φ_i·∇φ_j`.
pub fn assemble(m: &Mesh, c: &ConductivityMap) -> Result<StiffnessSystem> {
    let matrix = assemble_weighted(m, |r| Some(c.value(r)))?;
    let mut weights = vec![0.0; m.nodes.len()];
    for (e, l) in m.boundary_edges.iter().zip(edge_lengths(m)) {
        for &i in &e.nodes {
            weights[i] += 0.5 * l;
        }
    }
    Ok(StiffnessSystem {
        matrix,
        boundary_weights: weights,
    })
}

/// `Σ_{T ⊂ D} (k_j − 1) K_T`, i.e. `A_γ − A_1` assembled directly.
pub fn assemble_contrast(m: &Mesh, c: &ConductivityMap) -> Result<Csr> {
    assemble_weighted(m, |r| match r {
        Region::Background => None,
        r => Some(c.value(r) - 1.0).filter(|&w| w != 0.0),
    })
}

fn assemble_weighted(m: &Mesh, weight: impl Fn(Region) -> Option<f64>) -> Result<Csr> {
    let mut triplets = Vec::with_capacity(9 * m.triangles.len());
    for (t, tri) in m.triangles.iter().enumerate() {
        let Some(w) = weight(tri.region) else { continue };
        let k = element_stiffness(m.triangle_points(t), w).ok_or(Error::DegenerateTriangle(t))?;
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri.nodes[i], tri.nodes[j], k[i][j]));
            }
        }
    }
    Ok(Csr::from_triplets(m.nodes.len(), triplets))
}

/// Solves `A u = b` for an arbitrary real load, with the gauge of `opts`.
/// The component of `b` along the boundary weights that makes the system
/// inconsistent is absorbed by the Lagrange multiplier.
pub fn solve_load(sys: &StiffnessSystem, b: &[f64], opts: &SolveOptions) -> Result<(ScalarField, CgReport)> {
    let c = &sys.boundary_weights;
    let lambda = b.iter().sum::<f64>() / c.iter().sum::<f64>();
    let rhs: Vec<f64> = b.iter().zip(c).map(|(b, c)| b - lambda * c).collect();
    let null = match opts.gauge {
        Gauge::BoundaryMean => NullSpace::Constants,
        Gauge::Pinned(p) => {
            if p >= rhs.len() {
                return Err(Error::InvalidInput(format!("pinned node {p} out of range")));
            }
            NullSpace::Pinned(p)
        }
    };
    let (mut u, report) = pcg(&sys.matrix, &rhs, null, opts.cg)?;
    if opts.gauge == Gauge::BoundaryMean {
        let shift = dot(c, &u) / c.iter().sum::<f64>();
        u.iter_mut().for_each(|x| *x -= shift);
    }
    let bnorm = norm(&rhs);
    if bnorm > 0.0 {
        let mut r = sys.matrix.mul(&u);
        r.iter_mut().zip(&rhs).for_each(|(r, b)| *r -= b);
        let rel = norm(&r) / bnorm;
        if !(rel <= opts.residual_tol) {
            return Err(Error::NotConverged {
                iterations: report.iterations,
                history: vec![rel],
            });
        }
    }
    Ok((
        ScalarField {
            values: u,
            gauge: opts.gauge,
        },
        report,
    ))
}

/// Checks `|∫g| ≤ tol·∫|g|`.
pub fn check_zero_mean(m: &Mesh, g: &BoundaryData, tol: f64) -> Result<()> {
    if g.len() != m.boundary_edges.len() {
        return Err(Error::InvalidInput(format!(
            "boundary data has {} values for {} boundary edges",
            g.len(),
            m.boundary_edges.len()
        )));
    }
    let mean = g.total_flux(m).norm();
    let allowed = tol * g.abs_flux(m);
    if mean > allowed {
        return Err(Error::NonZeroMean { mean, allowed });
    }
    Ok(())
}

/// Neumann solve for complex data as two real solves.
pub fn solve_neumann(sys: &StiffnessSystem, m: &Mesh, g: &BoundaryData, opts: &SolveOptions) -> Result<ComplexField> {
    check_zero_mean(m, g, opts.zero_mean_tol)?;
    let (bre, bim) = g.load(m);
    let (re, _) = solve_load(sys, &bre, opts)?;
    let (im, _) = solve_load(sys, &bim, opts)?;
    Ok(ComplexField { re, im })
}

pub(crate) fn check_boundary(m: &Mesh, i: usize) -> Result<()> {
    if i >= m.nodes.len() || !m.is_boundary_node(i) {
        return Err(Error::NotBoundaryNode(i));
    }
    Ok(())
}

/// `u(P) − u(Q)` for boundary nodes `P`, `Q`.
pub fn lambda_pq(m: &Mesh, u: &ComplexField, p: usize, q: usize) -> Result<Complex64> {
    check_boundary(m, p)?;
    check_boundary(m, q)?;
    Ok(u.value(p) - u.value(q))
}

/// Background and inclusion systems on one mesh, reusable across many
/// boundary data.
#[derive(Debug, Clone)]
pub struct ForwardModel<'m> {
    mesh: &'m Mesh,
    background: StiffnessSystem,
    gamma: StiffnessSystem,
    contrast: Csr,
    has_contrast: bool,
    pub options: SolveOptions,
}

impl<'m> ForwardModel<'m> {
    pub fn new(mesh: &'m Mesh, incl: &InclusionSet) -> Result<Self> {
        let map = ConductivityMap::from_inclusions(incl);
        Ok(ForwardModel {
            mesh,
            background: assemble(mesh, &ConductivityMap::background())?,
            gamma: assemble(mesh, &map)?,
            contrast: assemble_contrast(mesh, &map)?,
            has_contrast: map.has_contrast(),
            options: SolveOptions::default(),
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn background_system(&self) -> &StiffnessSystem {
        &self.background
    }

    pub fn gamma_system(&self) -> &StiffnessSystem {
        &self.gamma
    }

    pub fn solve_background(&self, g: &BoundaryData) -> Result<ComplexField> {
        solve_neumann(&self.background, self.mesh, g, &self.options)
    }

    pub fn solve_gamma(&self, g: &BoundaryData) -> Result<ComplexField> {
        solve_neumann(&self.gamma, self.mesh, g, &self.options)
    }

    /// `u_γ − u_1` for the same data, computed as the solution `w` of
    /// `A_γ w = (A_1 − A_γ) u_1`. This equals the difference of the two
    /// Neumann solves exactly, without the cancellation of subtracting two
    /// large, nearly equal fields.
    pub fn difference_field(&self, g: &BoundaryData) -> Result<ComplexField> {
        let u1 = self.solve_background(g)?;
        let background: Vec<Complex64> = (0..u1.len()).map(|i| u1.value(i)).collect();
        self.scattered_field(&background)
    }

    /// Solves `A_γ w = (A_1 − A_γ) u_1` for a given nodal background field
    /// `u_1`. Only values on nodes of inclusion triangles are read.
    pub fn scattered_field(&self, background: &[Complex64]) -> Result<ComplexField> {
        let n = self.mesh.nodes.len();
        let zero = || ScalarField {
            values: vec![0.0; n],
            gauge: self.options.gauge,
        };
        if !self.has_contrast {
            return Ok(ComplexField { re: zero(), im: zero() });
        }
        let part = |u: Vec<f64>| -> Result<ScalarField> {
            let mut rhs = self.contrast.mul(&u);
            rhs.iter_mut().for_each(|x| *x = -*x);
            Ok(solve_load(&self.gamma, &rhs, &self.options)?.0)
        };
        Ok(ComplexField {
            re: part(background.iter().map(|v| v.re).collect())?,
            im: part(background.iter().map(|v| v.im).collect())?,
        })
    }

    /// `{Λ_γ(P,Q) − Λ_1(P,Q)} g` for data `g = ∂v/∂ν` of a function `v`
    /// harmonic in all of `Ω`. Then `u_1 = v` exactly and only the scattered
    /// field `w = u_γ − v` is discretized, from the nodal interpolant of `v`
    /// inside the inclusions. The background solve, whose error is set by
    /// the size of `v` near `∂Ω`, drops out.
    pub fn lambda_diff_harmonic(&self, v: impl Fn(Vec2) -> Complex64, p: usize, q: usize) -> Result<Complex64> {
        check_boundary(self.mesh, p)?;
        check_boundary(self.mesh, q)?;
        let mut background = vec![Complex64::new(0.0, 0.0); self.mesh.nodes.len()];
        for t in &self.mesh.triangles {
            if t.region != Region::Background {
                for &i in &t.nodes {
                    background[i] = v(self.mesh.nodes[i]);
                }
            }
        }
        let w = self.scattered_field(&background)?;
        lambda_pq(self.mesh, &w, p, q)
    }

    /// `{Λ_γ(P,Q) − Λ_1(P,Q)} g`.
    pub fn lambda_diff(&self, g: &BoundaryData, p: usize, q: usize) -> Result<Complex64> {
        check_boundary(self.mesh, p)?;
        check_boundary(self.mesh, q)?;
        let w = self.difference_field(g)?;
        lambda_pq(self.mesh, &w, p, q)
    }
}

/// One-shot `{Λ_γ(P,Q) − Λ_1(P,Q)} g` on a given mesh.
pub fn lambda_diff(m: &Mesh, incl: &InclusionSet, g: &BoundaryData, p: usize, q: usize) -> Result<Complex64> {
    ForwardModel::new(m, incl)?.lambda_diff(g, p, q)
}

/// `∫_Ω γ|∇u|² = uᵀAu`.
pub fn energy(sys: &StiffnessSystem, u: &[f64]) -> f64 {
    dot(u, &sys.matrix.mul(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, Polygon};
    use crate::mesh::generate_mesh;
    use alloc::vec::Vec;

    fn diamond() -> InclusionSet {
        let p = Polygon::new(vec![
            Vec2::new(0.2, 0.0),
            Vec2::new(0.0, 0.2),
            Vec2::new(-0.2, 0.0),
            Vec2::new(0.0, -0.2),
        ])
        .unwrap();
        InclusionSet::single(p, 2.0).unwrap()
    }

    fn disk_mesh(h: f64, incl: &InclusionSet) -> Mesh {
        generate_mesh(&DomainSpec::unit_disk(128).unwrap(), incl, h).unwrap()
    }

    fn cos_data(m: &Mesh) -> BoundaryData {
        BoundaryData::from_fn(m, |y, _| Complex64::new(libm::cos(y.angle()), 0.0))
    }

    fn node(m: &Mesh, p: Vec2) -> usize {
        m.snap_boundary_point(p).unwrap()
    }

    #[test]
    fn reference_element_matrix() {
        let k = element_stiffness([Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)], 1.0).unwrap();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expect[i][j]).abs() < 1e-15);
            }
            assert!(k[i].iter().sum::<f64>().abs() < 1e-15);
        }
        let k3 = element_stiffness([Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)], 3.0).unwrap();
        assert!((k3[0][0] - 3.0).abs() < 1e-15);
        assert!(element_stiffness([Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)], 1.0).is_none());
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let m = disk_mesh(0.1, &diamond());
        let sys = assemble(&m, &ConductivityMap::from_inclusions(&diamond())).unwrap();
        let ones = vec![1.0; m.nodes.len()];
        assert!(sys.matrix.mul(&ones).iter().all(|v| v.abs() < 1e-12));
        assert!(sys.matrix.is_symmetric(1e-14));
    }

    #[test]
    fn contrast_scales_inclusion_elements() {
        let m = disk_mesh(0.1, &diamond());
        let a1 = assemble(&m, &ConductivityMap::background()).unwrap().matrix;
        let a2 = assemble(&m, &ConductivityMap::from_inclusions(&diamond())).unwrap().matrix;
        let a3 = assemble(&m, &ConductivityMap::from_inclusions(&diamond().with_conductivities(3.0))).unwrap().matrix;
        let c2 = assemble_contrast(&m, &ConductivityMap::from_inclusions(&diamond())).unwrap();
        // with k=2 the contrast matrix equals the inclusion-only part of A_1,
        // and k=3 doubles it
        for i in 0..m.nodes.len() {
            for (j, v) in a2.row(i) {
                assert!((v - a1.get(i, j) - c2.get(i, j)).abs() < 1e-12);
                assert!((a3.get(i, j) - a1.get(i, j) - 2.0 * c2.get(i, j)).abs() < 1e-12);
            }
        }
        let t = m.triangles.iter().position(|t| t.region == Region::Inclusion(0)).unwrap();
        let k1 = element_stiffness(m.triangle_points(t), 1.0).unwrap();
        let k2 = element_stiffness(m.triangle_points(t), 2.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((k2[i][j] - 2.0 * k1[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn linear_solution_is_reproduced() {
        // on the polygonal domain, g = ν_x has the exact solution u = x + c,
        // which P1 elements represent exactly
        let m = disk_mesh(0.1, &InclusionSet::empty());
        let sys = assemble(&m, &ConductivityMap::background()).unwrap();
        let g = BoundaryData::from_fn(&m, |_, n| Complex64::new(n.x, 0.0));
        let u = solve_neumann(&sys, &m, &g, &SolveOptions::default()).unwrap();
        let c = u.re.values[0] - m.nodes[0].x;
        for (i, p) in m.nodes.iter().enumerate() {
            assert!((u.re.values[i] - p.x - c).abs() < 1e-9);
        }
        let p = node(&m, Vec2::new(1.0, 0.0));
        let q = node(&m, Vec2::new(-1.0, 0.0));
        assert!((lambda_pq(&m, &u, p, q).unwrap().re - 2.0).abs() < 1e-9);
        assert_eq!(lambda_pq(&m, &u, p, p).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(lambda_pq(&m, &u, p, q).unwrap(), -lambda_pq(&m, &u, q, p).unwrap());
        let interior = (0..m.nodes.len()).find(|&i| !m.is_boundary_node(i)).unwrap();
        assert_eq!(lambda_pq(&m, &u, p, interior), Err(Error::NotBoundaryNode(interior)));
    }

    fn max_error_modulo_constant(m: &Mesh, u: &[f64], exact: impl Fn(Vec2) -> f64) -> f64 {
        let n = m.nodes.len() as f64;
        let mean: f64 = m.nodes.iter().zip(u).map(|(p, v)| v - exact(*p)).sum::<f64>() / n;
        m.nodes
            .iter()
            .zip(u)
            .map(|(p, v)| (v - exact(*p) - mean).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn cosine_data_gives_r_cos_theta() {
        // cos θ at an edge midpoint of the inscribed polygon is that edge's ν_x
        let m = generate_mesh(&DomainSpec::unit_disk(512).unwrap(), &InclusionSet::empty(), 0.1).unwrap();
        let sys = assemble(&m, &ConductivityMap::background()).unwrap();
        let u = solve_neumann(&sys, &m, &cos_data(&m), &SolveOptions::default()).unwrap();
        assert!(max_error_modulo_constant(&m, &u.re.values, |p| p.x) < 1e-9);
        let p = node(&m, Vec2::new(1.0, 0.0));
        let q = node(&m, Vec2::new(-1.0, 0.0));
        assert!((lambda_pq(&m, &u, p, q).unwrap().re - 2.0).abs() < 1e-9);
    }

    #[test]
    fn quadratic_harmonic_converges_at_second_order() {
        let exact = |p: Vec2| p.x * p.x - p.y * p.y;
        let err = |h: f64| {
            let m = generate_mesh(&DomainSpec::unit_disk(512).unwrap(), &InclusionSet::empty(), h).unwrap();
            let sys = assemble(&m, &ConductivityMap::background()).unwrap();
            let g = BoundaryData::from_fn(&m, |y, n| Complex64::new(2.0 * (y.x * n.x - y.y * n.y), 0.0));
            let u = solve_neumann(&sys, &m, &g, &SolveOptions::default()).unwrap();
            max_error_modulo_constant(&m, &u.re.values, exact)
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e1 < 1e-2, "{e1}");
        assert!(e2 < e1 / 3.0, "{e1} {e2}");
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let m = disk_mesh(0.1, &diamond());
        let sys = assemble(&m, &ConductivityMap::from_inclusions(&diamond())).unwrap();
        let u = solve_neumann(&sys, &m, &BoundaryData::zeros(&m), &SolveOptions::default()).unwrap();
        assert!(u.re.values.iter().chain(&u.im.values).all(|&v| v == 0.0));
    }

    #[test]
    fn non_zero_mean_data_is_rejected() {
        let m = disk_mesh(0.1, &InclusionSet::empty());
        let sys = assemble(&m, &ConductivityMap::background()).unwrap();
        let g = BoundaryData::from_real(vec![1.0; m.boundary_edges.len()]);
        assert!(matches!(
            solve_neumann(&sys, &m, &g, &SolveOptions::default()),
            Err(Error::NonZeroMean { .. })
        ));
    }

    fn mode(m: &Mesh, n: i32, phase: f64) -> BoundaryData {
        BoundaryData::from_fn(m, |y, _| Complex64::from_polar(1.0, n as f64 * y.angle() + phase))
    }

    #[test]
    fn solves_are_linear() {
        let m = disk_mesh(0.08, &diamond());
        let model = ForwardModel::new(&m, &diamond()).unwrap();
        let (g1, g2) = (mode(&m, 1, 0.3), mode(&m, 3, -1.0));
        let s = Complex64::new(0.7, -1.3);
        let g = g1.add(&g2.scale(s));
        let (p, q) = (0, m.boundary_edges.len() / 2);
        let d = model.lambda_diff(&g, p, q).unwrap();
        let d1 = model.lambda_diff(&g1, p, q).unwrap();
        let d2 = model.lambda_diff(&g2, p, q).unwrap();
        assert!((d - d1 - s * d2).norm() < 1e-10 * (d1.norm() + d2.norm()));
        let u = model.solve_gamma(&g).unwrap();
        let u1 = model.solve_gamma(&g1).unwrap();
        let u2 = model.solve_gamma(&g2).unwrap();
        for i in 0..m.nodes.len() {
            assert!((u.value(i) - u1.value(i) - s * u2.value(i)).norm() < 1e-9);
        }
    }

    #[test]
    fn energy_matches_boundary_work() {
        let m = disk_mesh(0.08, &diamond());
        let sys = assemble(&m, &ConductivityMap::from_inclusions(&diamond())).unwrap();
        let g = mode(&m, 2, 0.4);
        let u = solve_neumann(&sys, &m, &g, &SolveOptions::default()).unwrap();
        let (b, _) = g.load(&m);
        let e = energy(&sys, &u.re.values);
        let work = dot(&b, &u.re.values);
        assert!((e - work).abs() <= 1e-8 * e.abs());
    }

    #[test]
    fn neumann_to_dirichlet_map_is_self_adjoint() {
        let m = disk_mesh(0.08, &diamond());
        let sys = assemble(&m, &ConductivityMap::from_inclusions(&diamond())).unwrap();
        let g1 = BoundaryData::from_fn(&m, |y, _| Complex64::new(libm::cos(2.0 * y.angle()) + 0.3 * y.x, 0.0));
        let g2 = BoundaryData::from_fn(&m, |y, _| Complex64::new(libm::sin(3.0 * y.angle()) - y.y, 0.0));
        let opts = SolveOptions::default();
        let u1 = solve_neumann(&sys, &m, &g1, &opts).unwrap();
        let u2 = solve_neumann(&sys, &m, &g2, &opts).unwrap();
        let a = dot(&g1.load(&m).0, &u2.re.values);
        let b = dot(&g2.load(&m).0, &u1.re.values);
        assert!((a - b).abs() <= 1e-8 * a.abs().max(b.abs()), "{a} {b}");
    }

    #[test]
    fn gauges_differ_by_a_constant() {
        let m = disk_mesh(0.08, &diamond());
        let sys = assemble(&m, &ConductivityMap::from_inclusions(&diamond())).unwrap();
        let g = mode(&m, 1, 0.2);
        let mean = solve_neumann(&sys, &m, &g, &SolveOptions::default()).unwrap();
        let pinned_opts = SolveOptions {
            gauge: Gauge::Pinned(17),
            ..Default::default()
        };
        let pinned = solve_neumann(&sys, &m, &g, &pinned_opts).unwrap();
        assert_eq!(pinned.value(17), Complex64::new(0.0, 0.0));
        let shift = mean.value(17);
        for i in 0..m.nodes.len() {
            assert!((mean.value(i) - pinned.value(i) - shift).norm() < 1e-9);
        }
        let (p, q) = (0, m.boundary_edges.len() / 3);
        let a = lambda_pq(&m, &mean, p, q).unwrap();
        let b = lambda_pq(&m, &pinned, p, q).unwrap();
        assert!((a - b).norm() < 1e-9);
        // boundary mean of the gauged field
        let c = &sys.boundary_weights;
        assert!(dot(c, &mean.re.values).abs() < 1e-10);
    }

    #[test]
    fn difference_field_matches_two_solves() {
        let m = disk_mesh(0.08, &diamond());
        let model = ForwardModel::new(&m, &diamond()).unwrap();
        let g = mode(&m, 1, 0.0);
        let w = model.difference_field(&g).unwrap();
        let ug = model.solve_gamma(&g).unwrap();
        let u1 = model.solve_background(&g).unwrap();
        for i in 0..m.nodes.len() {
            assert!((w.value(i) - (ug.value(i) - u1.value(i))).norm() < 1e-9);
        }
    }

    #[test]
    fn unit_contrast_gives_exact_zero() {
        let incl = diamond().with_conductivities(1.0);
        let m = disk_mesh(0.08, &incl);
        let g = mode(&m, 1, 0.0);
        let d = lambda_diff(&m, &incl, &g, 0, m.boundary_edges.len() / 2).unwrap();
        assert!(d.norm() <= 1e-10);
    }

    #[test]
    fn boundary_load_splits_edge_flux() {
        let m = disk_mesh(0.1, &InclusionSet::empty());
        let g = BoundaryData::from_real((0..m.boundary_edges.len()).map(|k| k as f64));
        let (re, im) = g.load(&m);
        assert!((re.iter().sum::<f64>() - g.total_flux(&m).re).abs() < 1e-12);
        assert!(im.iter().all(|&v| v == 0.0));
        let interior: Vec<usize> = (0..m.nodes.len()).filter(|&i| !m.is_boundary_node(i)).collect();
        assert!(interior.iter().all(|&i| re[i] == 0.0));
    }
}
