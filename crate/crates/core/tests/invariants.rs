//! Cross-module invariants as property tests: area conservation of the
//! mesh, gauge invariance and self-adjointness of the Neumann solve,
//! orientation conventions, and equivariance under a joint rotation.

use std::f64::consts::PI;

use enclosure_core::forward::{assemble, lambda_pq, solve_neumann, BoundaryData, ConductivityMap, Gauge, SolveOptions};
use enclosure_core::geometry::{hull_from_support, support_function, uniform_directions, SupportTable};
use enclosure_core::mesh::{generate_mesh, validate_mesh, Region};
use enclosure_core::probe::{estimate_support_slope, indicator, IndicatorSample, ProbeParams, SlopeOptions};
use enclosure_core::{Complex64, Direction, DomainSpec, InclusionSet, Polygon, Vec2};
use proptest::prelude::*;

fn inclusion(cx: f64, cy: f64, r: f64, n: usize, phase: f64, k: f64) -> InclusionSet {
    InclusionSet::single(Polygon::regular(Vec2::new(cx, cy), r, n, phase).unwrap(), k).unwrap()
}

fn fourier(m: &enclosure_core::Mesh, coef: &[(f64, f64)]) -> BoundaryData {
    BoundaryData::from_fn(m, |y, _| {
        let th = y.angle();
        let v: f64 = coef
            .iter()
            .enumerate()
            .map(|(n, (a, b))| a * ((n + 1) as f64 * th).cos() + b * ((n + 1) as f64 * th).sin())
            .sum();
        Complex64::new(v, 0.0)
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mesh_conserves_area(cx in -0.2f64..0.2, cy in -0.2f64..0.2, r in 0.12f64..0.3, n in 3usize..7, phase in 0.0f64..PI) {
        let dom = DomainSpec::unit_disk(96).unwrap();
        let incl = inclusion(cx, cy, r, n, phase, 2.0);
        let m = generate_mesh(&dom, &incl, 0.08).unwrap();
        let d = validate_mesh(&m);
        prop_assert!(d.is_valid(), "{:?}", d.messages);
        let ring = Polygon::new(dom.boundary_vertices()).unwrap();
        let total = m.area(None);
        let parts = m.area(Some(Region::Background)) + m.area(Some(Region::Inclusion(0)));
        prop_assert!((total - ring.area()).abs() < 1e-10);
        prop_assert!((parts - total).abs() < 1e-10);
        let poly = &incl.components()[0].polygon;
        prop_assert!((m.area(Some(Region::Inclusion(0))) - poly.area()).abs() < 1e-10);
    }

    #[test]
    fn orientation_conventions(theta in -PI..PI, cx in -0.2f64..0.2, r in 0.1f64..0.3, n in 3usize..7) {
        let d = Direction::from_angle(theta);
        let (w, wp) = (d.omega(), d.omega_perp());
        prop_assert!(w.dot(wp).abs() < 1e-15);
        prop_assert!((w.cross(wp) + 1.0).abs() < 1e-15);
        prop_assert!((wp.x - theta.sin()).abs() < 1e-15 && (wp.y + theta.cos()).abs() < 1e-15);

        let incl = inclusion(cx, 0.0, r, n, theta, 3.0);
        let m = generate_mesh(&DomainSpec::unit_disk(64).unwrap(), &incl, 0.1).unwrap();
        for e in &m.boundary_edges {
            let (a, b) = m.edge_points(e.nodes);
            let mid = (a + b) * 0.5;
            prop_assert!(e.normal.dot(mid) > 0.0);
            prop_assert!(a.cross(b) > 0.0);
        }
        let poly = &incl.components()[0].polygon;
        for e in &m.inclusion_edges[0] {
            let (a, b) = m.edge_points(e.nodes);
            let mid = (a + b) * 0.5;
            prop_assert!(poly.contains(mid + e.normal * 1e-6));
            prop_assert!(!poly.contains(mid - e.normal * 1e-6));
        }
    }

    #[test]
    fn neumann_solve_is_gauge_invariant_and_self_adjoint(
        c1 in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
        c2 in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
        k in 0.2f64..5.0,
        pin in 0usize..400,
    ) {
        let incl = inclusion(0.1, -0.1, 0.25, 4, 0.3, k);
        let m = generate_mesh(&DomainSpec::unit_disk(64).unwrap(), &incl, 0.1).unwrap();
        let sys = assemble(&m, &ConductivityMap::from_inclusions(&incl)).unwrap();
        let (g1, g2) = (fourier(&m, &c1), fourier(&m, &c2));
        let opts = SolveOptions::default();
        let u1 = solve_neumann(&sys, &m, &g1, &opts).unwrap();
        let u2 = solve_neumann(&sys, &m, &g2, &opts).unwrap();
        let a = dot(&g1.load(&m).0, &u2.re.values);
        let b = dot(&g2.load(&m).0, &u1.re.values);
        prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs().max(b.abs())), "{} {}", a, b);

        let pin = pin % m.nodes.len();
        let pinned = solve_neumann(&sys, &m, &g1, &SolveOptions { gauge: Gauge::Pinned(pin), ..opts }).unwrap();
        let shift = u1.value(pin);
        for i in 0..m.nodes.len() {
            prop_assert!((u1.value(i) - pinned.value(i) - shift).norm() < 1e-8);
        }
        let (p, q) = (0, m.boundary_edges.len() / 2);
        let d = lambda_pq(&m, &u1, p, q).unwrap() - lambda_pq(&m, &pinned, p, q).unwrap();
        prop_assert!(d.norm() < 1e-8);
    }

    #[test]
    fn support_and_hull_rotate_with_the_inclusion(theta in -PI..PI, phase in 0.0f64..PI, n in 3usize..7) {
        let incl = inclusion(0.1, 0.05, 0.25, n, phase, 2.0);
        let turned = incl.rotated(theta);
        let dirs = uniform_directions(24, 0.1);
        for d in &dirs {
            let a = support_function(&incl, d).unwrap();
            let b = support_function(&turned, &d.rotated(theta)).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
        let hull = hull_from_support(&SupportTable::exact(&incl, &dirs).unwrap()).unwrap();
        let turned_dirs: Vec<Direction> = dirs.iter().map(|d| d.rotated(theta)).collect();
        let turned_hull = hull_from_support(&SupportTable::exact(&turned, &turned_dirs).unwrap()).unwrap();
        prop_assert!((hull.area() - turned_hull.area()).abs() < 1e-9);
        let expected = hull.rotated(theta);
        prop_assert!(enclosure_core::geometry::hausdorff_distance(&expected, &turned_hull).distance < 1e-9);
    }

    #[test]
    fn slope_estimate_ignores_the_direction_label(theta in -PI..PI, h in 0.05f64..0.4, c in -3.0f64..3.0) {
        let samples: Vec<IndicatorSample> = (2..=16)
            .map(|k| {
                let tau = k as f64;
                IndicatorSample { tau, t: 0.0, value: Complex64::from_polar((c + h * tau).exp(), 0.3 * tau) }
            })
            .collect();
        let opts = SlopeOptions::default();
        let a = estimate_support_slope(Direction::from_angle(0.0), &samples, 0.0, &opts).unwrap();
        let b = estimate_support_slope(Direction::from_angle(theta), &samples, 0.0, &opts).unwrap();
        prop_assert_eq!(a.h_hat, b.h_hat);
        prop_assert!((a.h_hat - h).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    /// Rotating domain poles, inclusion and probe direction together by a
    /// multiple of the boundary step leaves the indicator unchanged up to
    /// discretization error.
    #[test]
    fn indicator_is_rotation_equivariant(step in 1usize..16) {
        let res = 64;
        let theta = 2.0 * PI * step as f64 / res as f64;
        let dom = DomainSpec::unit_disk(res).unwrap();
        let incl = inclusion(0.15, 0.0, 0.2, 4, 0.2, 2.0);
        let value = |incl: &InclusionSet, rot: f64| {
            let m = generate_mesh(&dom, incl, 0.05).unwrap();
            let model = enclosure_core::forward::ForwardModel::new(&m, incl).unwrap();
            let p = m.snap_boundary_point(dom.boundary_point(rot)).unwrap();
            let q = m.snap_boundary_point(dom.boundary_point(PI + rot)).unwrap();
            let pp = ProbeParams::new(Direction::from_angle(rot), 3.0, 0.0).unwrap();
            indicator(&model, p, q, &pp).unwrap().value
        };
        let a = value(&incl, 0.0);
        let b = value(&incl.rotated(theta), theta);
        prop_assert!((a - b).norm() < 2e-2 * a.norm(), "{} {}", a, b);
    }
}
