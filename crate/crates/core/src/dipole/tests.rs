use alloc::vec;
use alloc::vec::Vec;

use approx::assert_relative_eq;

use super::*;
use crate::geometry::{Direction, DomainSpec, Polygon};
use crate::mesh::generate_mesh;

fn diamond(k: f64) -> InclusionSet {
    let p = Polygon::new(vec![
        Vec2::new(0.2, 0.0),
        Vec2::new(0.0, 0.2),
        Vec2::new(-0.2, 0.0),
        Vec2::new(0.0, -0.2),
    ])
    .unwrap();
    InclusionSet::single(p, k).unwrap()
}

struct Setup {
    mesh: Mesh,
    incl: InclusionSet,
}

impl Setup {
    fn new(incl: InclusionSet, h: f64) -> Self {
        let mesh = generate_mesh(&DomainSpec::unit_disk(256).unwrap(), &incl, h).unwrap();
        Setup { mesh, incl }
    }

    fn poles(&self) -> (usize, usize) {
        let p = self.mesh.snap_boundary_point(Vec2::new(1.0, 0.0)).unwrap();
        let q = self.mesh.snap_boundary_point(Vec2::new(-1.0, 0.0)).unwrap();
        (p, q)
    }

    fn field(&self) -> (ForwardModel<'_>, DipoleField) {
        let model = ForwardModel::new(&self.mesh, &self.incl).unwrap();
        let (p, q) = self.poles();
        let f = solve_corrector(&model, &self.incl, p, q).unwrap();
        (model, f)
    }
}

fn probes() -> Vec<ProbeParams> {
    [2.0, 4.0, 6.0, 8.0, 10.0]
        .iter()
        .map(|&tau| ProbeParams::new(Direction::from_angle(0.0), tau, 0.0).unwrap())
        .collect()
}

fn test_functions() -> Vec<Analytic<fn(Vec2) -> f64, fn(Vec2) -> Vec2>> {
    vec![
        Analytic { value: |x| x.x, gradient: |_| Vec2::new(1.0, 0.0) },
        Analytic { value: |x| x.y, gradient: |_| Vec2::new(0.0, 1.0) },
        Analytic { value: |x| x.x * x.x - 0.5 * x.y * x.y, gradient: |x| Vec2::new(2.0 * x.x, -x.y) },
        Analytic { value: |x| x.x * x.y + x.x, gradient: |x| Vec2::new(x.y + 1.0, x.x) },
        Analytic {
            value: |x| x.x.exp() * x.y.cos(),
            gradient: |x| Vec2::new(x.x.exp() * x.y.cos(), -x.x.exp() * x.y.sin()),
        },
    ]
}

#[test]
fn singular_part_examples() {
    let (p, q) = (Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0));
    assert_eq!(v_singular(p, q, Vec2::new(0.0, 0.0)).unwrap(), 0.0);
    assert_eq!(v_singular(p, q, Vec2::new(0.0, 0.7)).unwrap(), 0.0);
    assert_relative_eq!(v_singular(p, q, Vec2::new(0.5, 0.0)).unwrap(), 3f64.ln() / PI, max_relative = 1e-14);
    assert_relative_eq!(3f64.ln() / PI, 0.34970, epsilon = 1e-5);
    assert_eq!(v_singular(p, q, p), Err(Error::Singular));
    assert_eq!(grad_v(p, q, q), Err(Error::Singular));
}

#[test]
fn singular_gradient_matches_differences() {
    let (p, q) = (Vec2::new(0.6, 0.8), Vec2::new(-1.0, 0.0));
    let x = Vec2::new(0.1, -0.3);
    let eps = 1e-6;
    let g = grad_v(p, q, x).unwrap();
    let dx = (v_singular(p, q, x + Vec2::new(eps, 0.0)).unwrap() - v_singular(p, q, x - Vec2::new(eps, 0.0)).unwrap()) / (2.0 * eps);
    let dy = (v_singular(p, q, x + Vec2::new(0.0, eps)).unwrap() - v_singular(p, q, x - Vec2::new(0.0, eps)).unwrap()) / (2.0 * eps);
    assert!((g.x - dx).abs() < 1e-8 && (g.y - dy).abs() < 1e-8);
}

#[test]
fn psi_examples() {
    let s = Setup::new(InclusionSet::empty(), 0.2);
    let (pn, qn) = s.poles();
    let (p, q) = (s.mesh.nodes[pn], s.mesh.nodes[qn]);
    // on the unit circle both terms equal 1/2 and cancel
    let y = Vec2::new(0.0, 1.0);
    assert!(grad_v(p, q, y).unwrap().dot(y).abs() < 1e-15);
    let psi = psi_trace(p, q, &s.mesh).unwrap();
    let swapped = psi_trace(q, p, &s.mesh).unwrap();
    for (a, b) in psi.values.iter().zip(&swapped.values) {
        assert_eq!(*a, -*b);
    }
    // inscribed polygon: Ψ stays bounded and its quadrature mean vanishes
    let max = psi.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    assert!(max < 1.0, "{max}");
    assert!(psi.total_flux(&s.mesh).norm() < 1e-3);
}

#[test]
fn boundary_angle_of_regular_polygon() {
    let s = Setup::new(InclusionSet::empty(), 0.2);
    let n = s.mesh.boundary_edges.len() as f64;
    for i in [0, 5] {
        let node = s.mesh.boundary_edges[i].nodes[0];
        assert_relative_eq!(boundary_angle_at(&s.mesh, node).unwrap(), PI - 2.0 * PI / n, max_relative = 1e-10);
    }
    let interior = (0..s.mesh.nodes.len()).find(|&i| !s.mesh.is_boundary_node(i)).unwrap();
    assert_eq!(boundary_angle_at(&s.mesh, interior), Err(Error::NotBoundaryNode(interior)));
}

#[test]
fn unit_contrast_corrector_is_background_solve() {
    let s = Setup::new(diamond(1.0), 0.1);
    let (model, f) = s.field();
    let psi = psi_trace_weighted(f.p, f.q, f.pole_weights, &s.mesh).unwrap();
    let (b, _) = psi.scale(Complex64::new(-1.0, 0.0)).load(&s.mesh);
    let (e, _) = solve_load(model.background_system(), &b, &model.options).unwrap();
    for (a, b) in f.corrector.values.iter().zip(&e.values) {
        assert!((a - b).abs() < 1e-10);
    }
    let p = ProbeParams::new(Direction::from_angle(0.0), 6.0, 0.0).unwrap();
    assert_eq!(rep_formula_rhs(&s.mesh, &s.incl, &f, &p).unwrap(), Complex64::new(0.0, 0.0));
}

#[test]
fn corrector_is_antisymmetric_and_bounded() {
    let s = Setup::new(diamond(3.0), 0.08);
    let model = ForwardModel::new(&s.mesh, &s.incl).unwrap();
    let (p, q) = s.poles();
    let a = solve_corrector(&model, &s.incl, p, q).unwrap();
    let b = solve_corrector(&model, &s.incl, q, p).unwrap();
    let scale = a.corrector.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(scale < 1.0, "{scale}");
    for (x, y) in a.corrector.values.iter().zip(&b.corrector.values) {
        assert!((x + y).abs() < 1e-9 * scale.max(1e-3));
    }
    let boundary_mean: f64 = model
        .gamma_system()
        .boundary_weights
        .iter()
        .zip(&a.corrector.values)
        .map(|(c, e)| c * e)
        .sum();
    assert!(boundary_mean.abs() < 1e-12);
    // 𝒟 itself is antisymmetric away from the poles
    let da = a.nodal_values(&s.mesh);
    let db = b.nodal_values(&s.mesh);
    assert!(da[p].is_none() && da[q].is_none());
    for (x, y) in da.iter().zip(&db) {
        if let (Some(x), Some(y)) = (x, y) {
            assert!((x + y).abs() < 1e-9);
        }
    }
}

#[test]
fn corrector_rejects_bad_poles() {
    let s = Setup::new(diamond(2.0), 0.1);
    let model = ForwardModel::new(&s.mesh, &s.incl).unwrap();
    let (p, _) = s.poles();
    assert!(solve_corrector(&model, &s.incl, p, p).is_err());
    let interior = (0..s.mesh.nodes.len()).find(|&i| !s.mesh.is_boundary_node(i)).unwrap();
    assert_eq!(solve_corrector(&model, &s.incl, p, interior), Err(Error::NotBoundaryNode(interior)));
}

#[test]
fn weak_form_holds_and_improves() {
    let coarse = Setup::new(diamond(2.0), 0.05);
    let fine = Setup::new(diamond(2.0), 0.025);
    let (_, fc) = coarse.field();
    let (_, ff) = fine.field();
    let mut total_c = 0.0;
    let mut total_f = 0.0;
    for phi in test_functions() {
        let rc = verify_weak_form(&coarse.mesh, &coarse.incl, &fc, &phi).unwrap();
        let rf = verify_weak_form(&fine.mesh, &fine.incl, &ff, &phi).unwrap();
        assert!(rc <= 5e-2, "{rc}");
        total_c += rc;
        total_f += rf;
    }
    assert!(total_f < total_c, "{total_f} vs {total_c}");
    let probe = ProbeRealPart(ProbeParams::new(Direction::from_angle(0.4), 0.5, 0.0).unwrap());
    assert!(verify_weak_form(&coarse.mesh, &coarse.incl, &fc, &probe).unwrap() <= 5e-2);
}

#[test]
fn weak_form_of_constant_is_exact() {
    let s = Setup::new(diamond(2.0), 0.1);
    let (_, f) = s.field();
    let one = Analytic { value: |_: Vec2| 1.0, gradient: |_: Vec2| Vec2::new(0.0, 0.0) };
    assert_eq!(verify_weak_form(&s.mesh, &s.incl, &f, &one).unwrap(), 0.0);
}

#[test]
fn weak_form_without_inclusion() {
    let s = Setup::new(InclusionSet::empty(), 0.05);
    let (_, f) = s.field();
    let e = Vec2::new(0.6, -0.8);
    let phi = Analytic { value: move |x: Vec2| x.dot(e), gradient: move |_: Vec2| e };
    assert!(verify_weak_form(&s.mesh, &s.incl, &f, &phi).unwrap() <= 5e-2);
}

#[test]
fn representation_matches_indicator() {
    let s = Setup::new(diamond(2.0), 0.05);
    let (model, f) = s.field();
    let p = ProbeParams::new(Direction::from_angle(0.0), 6.0, 0.0).unwrap();
    let row = representation_row(&model, &s.incl, &f, &p).unwrap();
    assert!(row.discrepancy < 0.05, "{}", row.discrepancy);
    let vol = rep_formula_volume(&s.mesh, &s.incl, &f, &p).unwrap();
    assert!((vol - row.dipole).norm() <= 0.05 * row.dipole.norm());
}

#[test]
fn representation_is_linear_at_small_tau() {
    let s = Setup::new(diamond(2.0), 0.08);
    let (model, f) = s.field();
    let d = Direction::from_angle(0.9);
    let at = |tau: f64| {
        let p = ProbeParams::new(d, tau, 0.0).unwrap();
        (
            rep_formula_rhs(&s.mesh, &s.incl, &f, &p).unwrap(),
            indicator(&model, f.p_node, f.q_node, &p).unwrap().value,
        )
    };
    let (r1, i1) = at(1e-4);
    let (r2, i2) = at(2e-4);
    assert!(r1.norm() < 1e-3 && i1.norm() < 1e-3);
    assert!((r2 - r1 * 2.0).norm() < 1e-3 * r1.norm());
    assert!((i2 - i1 * 2.0).norm() < 1e-3 * i1.norm());
}

#[test]
fn flipping_interface_normals_flips_sign() {
    let s = Setup::new(diamond(2.0), 0.08);
    let (_, f) = s.field();
    let p = ProbeParams::new(Direction::from_angle(0.3), 5.0, 0.1).unwrap();
    let a = rep_formula_rhs_with(&s.mesh, &s.incl, &f, &p, NormalOrientation::Inward).unwrap();
    let b = rep_formula_rhs_with(&s.mesh, &s.incl, &f, &p, NormalOrientation::Outward).unwrap();
    assert_eq!(a, -b);
}

#[test]
fn representation_report_aggregates() {
    let empty = RepresentationReport::from_rows(Vec::new());
    assert_eq!(empty, RepresentationReport::default());
    let s = Setup::new(diamond(2.0), 0.06);
    let (model, f) = s.field();
    let report = verify_representation(&model, &s.incl, &f, &probes()).unwrap();
    assert_eq!(report.rows.len(), 5);
    let mut d: Vec<f64> = report.rows.iter().map(|r| r.discrepancy).collect();
    d.sort_by(f64::total_cmp);
    assert_eq!(report.median, Some(d[2]));
    assert_eq!(report.max, Some(d[4]));
}

#[test]
fn field_from_another_mesh_is_rejected() {
    let a = Setup::new(diamond(2.0), 0.1);
    let b = Setup::new(diamond(2.0), 0.07);
    let (_, f) = a.field();
    let p = ProbeParams::new(Direction::from_angle(0.0), 2.0, 0.0).unwrap();
    assert!(matches!(rep_formula_rhs(&b.mesh, &b.incl, &f, &p), Err(Error::InvalidInput(_))));
}
