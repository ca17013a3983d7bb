//! Closed-form Neumann-to-Dirichlet gap for a concentric disk inclusion.
//!
//! For the unit disk with a disk of radius `ρ` and conductivity `k` at its
//! center, Neumann data `e^{inθ}` produces a boundary voltage gap
//! `(Λ_γ − Λ_1) e^{inθ} = m_n e^{inθ}` with
//!
//! ```text
//! μ = (1 − k)/(1 + k),   m_n = 2 μ ρ^{2n} / (n (1 − μ ρ^{2n})).
//! ```
//!
//! Outside the inclusion the solution is `(a rⁿ + b r⁻ⁿ) e^{inθ}`, inside it is
//! `c rⁿ e^{inθ}`; continuity of the trace and of `γ ∂_r u` at `r = ρ` gives
//! `b = μ ρ^{2n} a`, and `n(a − b) = 1` at `r = 1`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::float::{asin, floor, powi, sin};
use crate::forward::{BoundaryData, ForwardModel};
use crate::geometry::{DomainSpec, InclusionSet, Polygon, Vec2};
use crate::mesh::generate_mesh;
use crate::{Error, Result};

/// Concentric disk inclusion in the unit disk.
///
/// `k = 1` is accepted for null experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPhantom {
    pub rho: f64,
    pub k: f64,
}

impl DiskPhantom {
    pub fn new(rho: f64, k: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidInput(format!("disk radius must lie in (0,1), got {rho}")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidInput(format!("conductivity must be positive, got {k}")));
        }
        Ok(DiskPhantom { rho, k })
    }

    pub fn mu(&self) -> f64 {
        (1.0 - self.k) / (1.0 + self.k)
    }

    /// Inscribed regular polygon standing in for the disk on a mesh of size
    /// `h`: as many sides as possible while keeping every side longer than `h`.
    pub fn polygon(&self, h: f64) -> Result<Polygon> {
        let ratio = h / (2.0 * self.rho);
        if !(ratio > 0.0 && ratio < sin(PI / 8.0)) {
            return Err(Error::InvalidInput(format!(
                "mesh size {h} too coarse for a disk of radius {}",
                self.rho
            )));
        }
        let mut n = floor(PI / asin(ratio)) as usize;
        while 2.0 * self.rho * sin(PI / n as f64) <= h {
            n -= 1;
        }
        Polygon::regular(Vec2::ZERO, self.rho, n.max(8), 0.0)
    }

    pub fn inclusion(&self, h: f64) -> Result<InclusionSet> {
        InclusionSet::single(self.polygon(h)?, self.k)
    }
}

/// Fourier multiplier `m_n` of `Λ_γ − Λ_1` for the mode `e^{inθ}`, `n ≥ 1`.
pub fn gap_multiplier(n: u32, phantom: &DiskPhantom) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("the constant mode is excluded by the zero-mean condition".into()));
    }
    let mu = phantom.mu();
    let r = powi(phantom.rho, 2 * n as i32);
    Ok(2.0 * mu * r / (n as f64 * (1.0 - mu * r)))
}

/// `Σ_n ĝ_n m_{|n|} (e^{inθ_P} − e^{inθ_Q})` for data `g = Σ_n ĝ_n e^{inθ}`.
pub fn oracle_lambda_diff(
    phantom: &DiskPhantom,
    coefficients: &[(i32, Complex64)],
    theta_p: f64,
    theta_q: f64,
) -> Result<Complex64> {
    let mut sum = Complex64::new(0.0, 0.0);
    for &(n, c) in coefficients {
        if n == 0 {
            if c != Complex64::new(0.0, 0.0) {
                return Err(Error::InvalidInput("nonzero constant Fourier coefficient".into()));
            }
            continue;
        }
        let m = gap_multiplier(n.unsigned_abs(), phantom)?;
        let nf = n as f64;
        sum += c * m * (Complex64::from_polar(1.0, nf * theta_p) - Complex64::from_polar(1.0, nf * theta_q));
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSetup {
    pub h_target: f64,
    pub boundary_resolution: usize,
    /// Boundary angle of `P`.
    pub theta_p: f64,
    /// Boundary angle of `Q`.
    pub theta_q: f64,
}

impl Default for OracleSetup {
    fn default() -> Self {
        OracleSetup {
            h_target: 0.02,
            boundary_resolution: 512,
            theta_p: 0.0,
            theta_q: PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub mode: u32,
    /// Angle of `Q` actually used for this mode; it differs from the
    /// configured one when `e^{inθ_P} = e^{inθ_Q}` would make the mode
    /// invisible, in which case `Q` sits a half period `π/n` away from `P`.
    pub theta_q: f64,
    pub fem: Complex64,
    pub oracle: Complex64,
    /// `|fem − oracle| / |oracle|`, or the absolute error when the oracle
    /// value is zero (no contrast).
    pub rel_error: f64,
}

/// FEM `lambda_diff` against the oracle for each mode `e^{inθ}`.
pub fn compare_fem_oracle(setup: &OracleSetup, phantom: &DiskPhantom, modes: &[u32]) -> Result<Vec<OracleRow>> {
    let dom = DomainSpec::unit_disk(setup.boundary_resolution)?;
    let incl = phantom.inclusion(setup.h_target)?;
    let mesh = generate_mesh(&dom, &incl, setup.h_target)?;
    let model = ForwardModel::new(&mesh, &incl)?;
    let p = mesh.snap_boundary_point(dom.boundary_point(setup.theta_p))?;
    let theta_p = mesh.boundary_angle(p);
    let mut rows = Vec::with_capacity(modes.len());
    for &n in modes {
        if n == 0 {
            return Err(Error::InvalidInput("mode 0 is excluded".into()));
        }
        let nf = n as f64;
        let mut theta_q = setup.theta_q;
        let visible = (Complex64::from_polar(1.0, nf * setup.theta_p) - Complex64::from_polar(1.0, nf * theta_q)).norm();
        if visible < 1e-9 {
            theta_q = setup.theta_p + PI / nf;
        }
        let q = mesh.snap_boundary_point(dom.boundary_point(theta_q))?;
        let theta_q_node = mesh.boundary_angle(q);
        let g = BoundaryData::from_fn(&mesh, |y, _| Complex64::from_polar(1.0, nf * y.angle()));
        let fem = model.lambda_diff(&g, p, q)?;
        let oracle = oracle_lambda_diff(phantom, &[(n as i32, Complex64::new(1.0, 0.0))], theta_p, theta_q_node)?;
        let err = (fem - oracle).norm();
        let rel_error = if oracle.norm() > 0.0 { err / oracle.norm() } else { err };
        rows.push(OracleRow {
            mode: n,
            theta_q: theta_q_node,
            fem,
            oracle,
            rel_error,
        });
    }
    Ok(rows)
}
