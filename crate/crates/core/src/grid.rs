//! Spherical grids, covariant differential operators with respect to the
//! round metric σ, and quadrature.
//!
//! Two grid kinds:
//!
//! * `Axisymmetric`: fields depend on the colatitude θ only; works for any
//!   ambient sphere dimension n ≥ 2. The (n−1) azimuthal directions are
//!   equivalent, so per-node tensors reduce to a profile/azimuthal pair.
//! * `LatLong`: a full (θ, φ) grid on S², used to rule out artifacts of the
//!   axisymmetric reduction.
//!
//! θ-nodes are staggered, θ_j = (j+½)h with h = π/N, so no node sits on a
//! pole. Values across a pole are obtained by reflection: the point (−θ, φ)
//! is the point (θ, φ+π), which for axisymmetric fields is the plain even
//! extension. Quadrature weights are exact cell integrals of the round
//! measure, so they sum to |Sⁿ| to rounding.
//!
//! Tensor components are reported in the σ-orthonormal frame
//! {∂_θ, (1/sinθ)∂_φ, …}; in that frame σ is the identity, which keeps all
//! downstream pointwise algebra plain.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::{det_sum, sin_pow_antiderivative, sphere_area, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Axisymmetric,
    LatLong,
}

impl std::fmt::Display for GridKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridKind::Axisymmetric => write!(f, "axisymmetric"),
            GridKind::LatLong => write!(f, "latlong"),
        }
    }
}

/// A staggered grid on Sⁿ. Nodes are indexed `idx = ring * n_phi + p`.
#[derive(Debug, Clone)]
pub struct Grid {
    pub kind: GridKind,
    /// Ambient sphere dimension n (the hypersurface dimension).
    pub n: usize,
    pub n_theta: usize,
    /// 1 for axisymmetric grids.
    pub n_phi: usize,
    pub h_theta: f64,
    pub h_phi: f64,
    theta: Vec<f64>,
    sin_theta: Vec<f64>,
    cos_theta: Vec<f64>,
    /// Per-node quadrature weights; Σ = |Sⁿ| to rounding.
    weights: Vec<f64>,
}

/// Christoffel symbols of the round metric dθ² + sin²θ dφ² in the (θ, φ)
/// chart: returns (Γ^θ_{φφ}, Γ^φ_{θφ}) = (−sinθ cosθ, cotθ).
pub fn sphere_christoffel(theta: f64) -> (f64, f64) {
    (-theta.sin() * theta.cos(), theta.cos() / theta.sin())
}

impl Grid {
    #[inline]
    pub fn nodes(&self) -> usize {
        self.n_theta * self.n_phi
    }

    #[inline]
    pub fn ring(&self, idx: usize) -> usize {
        idx / self.n_phi
    }

    #[inline]
    pub fn theta(&self, idx: usize) -> f64 {
        self.theta[self.ring(idx)]
    }

    #[inline]
    pub fn phi(&self, idx: usize) -> f64 {
        (idx % self.n_phi) as f64 * self.h_phi
    }

    #[inline]
    pub fn weight(&self, idx: usize) -> f64 {
        self.weights[idx]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    fn sin_t(&self, ring: usize) -> f64 {
        self.sin_theta[ring]
    }

    #[inline]
    fn cos_t(&self, ring: usize) -> f64 {
        self.cos_theta[ring]
    }
}

/// Build a grid. `resolution` is the point count per coordinate:
/// `[n_theta]` for axisymmetric, `[n_theta, n_phi]` for lat-long.
pub fn build_grid(kind: GridKind, n: usize, resolution: &[usize]) -> Result<Arc<Grid>> {
    if !(2..=crate::symfun::MAX_N).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "ambient sphere dimension n = {n} outside 2..={}",
            crate::symfun::MAX_N
        )));
    }
    let (n_theta, n_phi) = match kind {
        GridKind::Axisymmetric => {
            let [nt] = resolution else {
                return Err(Error::InvalidParameter(
                    "axisymmetric grid takes one resolution entry".into(),
                ));
            };
            (*nt, 1)
        }
        GridKind::LatLong => {
            if n != 2 {
                return Err(Error::InvalidParameter(
                    "lat-long grid requires ambient dimension n = 2".into(),
                ));
            }
            let [nt, np] = resolution else {
                return Err(Error::InvalidParameter(
                    "lat-long grid takes two resolution entries".into(),
                ));
            };
            if np % 2 != 0 {
                return Err(Error::InvalidParameter(
                    "lat-long azimuthal resolution must be even (pole reflection shifts φ by π)"
                        .into(),
                ));
            }
            (*nt, *np)
        }
    };
    if n_theta < 16 || (kind == GridKind::LatLong && n_phi < 16) {
        return Err(Error::InvalidParameter(
            "resolution must be at least 16 points per coordinate".into(),
        ));
    }

    let h_theta = std::f64::consts::PI / n_theta as f64;
    let h_phi = match kind {
        GridKind::Axisymmetric => 0.0,
        GridKind::LatLong => std::f64::consts::TAU / n_phi as f64,
    };
    let theta: Vec<f64> = (0..n_theta).map(|j| (j as f64 + 0.5) * h_theta).collect();
    let sin_theta: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
    let cos_theta: Vec<f64> = theta.iter().map(|t| t.cos()).collect();

    // Exact cell integrals of the meridian measure sin^{n-1}θ dθ.
    let cell: Vec<f64> = (0..n_theta)
        .map(|j| {
            let a = j as f64 * h_theta;
            let b = (j + 1) as f64 * h_theta;
            sin_pow_antiderivative(n - 1, b) - sin_pow_antiderivative(n - 1, a)
        })
        .collect();
    let weights: Vec<f64> = match kind {
        GridKind::Axisymmetric => cell.iter().map(|c| sphere_area(n - 1) * c).collect(),
        GridKind::LatLong => {
            let mut w = Vec::with_capacity(n_theta * n_phi);
            for c in &cell {
                for _ in 0..n_phi {
                    w.push(c * h_phi);
                }
            }
            w
        }
    };

    Ok(Arc::new(Grid {
        kind,
        n,
        n_theta,
        n_phi,
        h_theta,
        h_phi,
        theta,
        sin_theta,
        cos_theta,
        weights,
    }))
}

/// A scalar field on a grid.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes() {
            return Err(Error::InvalidParameter(format!(
                "field length {} does not match grid with {} nodes",
                values.len(),
                grid.nodes()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "field has non-finite entries".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Self {
        let values = vec![value; grid.nodes()];
        Self { grid, values }
    }
}

/// First and second σ-covariant derivatives of a scalar field, as components
/// in the σ-orthonormal frame {∂_θ, (1/sinθ)∂_φ, …}.
///
/// For axisymmetric grids `hess_pp` is the common eigenvalue of the (n−1)
/// azimuthal directions, cotθ·∂_θf (the −Γ^θ_{ab}∂_θf term of the covariant
/// Hessian), and the φ-components of the gradient vanish. The Hessian is
/// symmetric at every node by construction: `hess_tp` is its single
/// independent off-diagonal entry.
#[derive(Debug, Clone)]
pub struct DerivativeBundle {
    pub grad_theta: Vec<f64>,
    pub grad_phi: Vec<f64>,
    pub hess_tt: Vec<f64>,
    pub hess_tp: Vec<f64>,
    pub hess_pp: Vec<f64>,
}

/// Neighbor value in θ with pole reflection. `dj = ±1`.
#[inline]
fn theta_neighbor(grid: &Grid, values: &[f64], ring: usize, p: usize, dj: isize) -> f64 {
    let j = ring as isize + dj;
    let np = grid.n_phi;
    if j < 0 {
        // reflect through the north pole: (−θ, φ) ≡ (θ, φ+π)
        let jj = (-j - 1) as usize;
        let pp = if np > 1 { (p + np / 2) % np } else { 0 };
        values[jj * np + pp]
    } else if j as usize >= grid.n_theta {
        let jj = 2 * grid.n_theta - 1 - j as usize;
        let pp = if np > 1 { (p + np / 2) % np } else { 0 };
        values[jj * np + pp]
    } else {
        values[j as usize * np + p]
    }
}

/// Second-order central differences of `values` with pole reflection and
/// periodic φ, assembled into σ-covariant frame components.
pub fn differentiate(grid: &Grid, values: &[f64]) -> DerivativeBundle {
    let nodes = grid.nodes();
    let np = grid.n_phi;
    let ht = grid.h_theta;
    let mut grad_theta = vec![0.0; nodes];
    let mut grad_phi = vec![0.0; nodes];
    let mut hess_tt = vec![0.0; nodes];
    let mut hess_tp = vec![0.0; nodes];
    let mut hess_pp = vec![0.0; nodes];

    for idx in 0..nodes {
        let ring = idx / np;
        let p = idx % np;
        let v0 = values[idx];
        let vn = theta_neighbor(grid, values, ring, p, 1);
        let vs = theta_neighbor(grid, values, ring, p, -1);
        let ft = (vn - vs) / (2.0 * ht);
        let ftt = (vn - 2.0 * v0 + vs) / (ht * ht);
        grad_theta[idx] = ft;
        hess_tt[idx] = ftt;

        let st = grid.sin_t(ring);
        let ct = grid.cos_t(ring);
        let cot = ct / st;
        if np == 1 {
            // azimuthal covariant Hessian eigenvalue −Γ^θ_{ab}∂_θf / sin²θ
            hess_pp[idx] = cot * ft;
        } else {
            let hp = grid.h_phi;
            let pe = (p + 1) % np;
            let pw = (p + np - 1) % np;
            let ve = values[ring * np + pe];
            let vw = values[ring * np + pw];
            let fp = (ve - vw) / (2.0 * hp);
            let fpp = (ve - 2.0 * v0 + vw) / (hp * hp);
            // mixed ∂θ∂φ by nested central differences (pole rows reflected)
            let vne = theta_neighbor(grid, values, ring, pe, 1);
            let vnw = theta_neighbor(grid, values, ring, pw, 1);
            let vse = theta_neighbor(grid, values, ring, pe, -1);
            let vsw = theta_neighbor(grid, values, ring, pw, -1);
            let ftp = (vne - vnw - vse + vsw) / (4.0 * ht * hp);

            grad_phi[idx] = fp / st;
            // covariant components: f_{,θφ} = f_θφ − cotθ f_φ,
            //                       f_{,φφ} = f_φφ + sinθcosθ f_θ
            hess_tp[idx] = (ftp - cot * fp) / st;
            hess_pp[idx] = fpp / (st * st) + cot * ft;
        }
    }

    DerivativeBundle {
        grad_theta,
        grad_phi,
        hess_tt,
        hess_tp,
        hess_pp,
    }
}

/// Gradient part of the covariant derivative bundle.
pub fn covariant_gradient(f: &ScalarField) -> DerivativeBundle {
    differentiate(&f.grid, &f.values)
}

/// Hessian part of the covariant derivative bundle (same pass).
pub fn covariant_hessian(f: &ScalarField) -> DerivativeBundle {
    differentiate(&f.grid, &f.values)
}

/// ∫ f·weight dσ with the grid's quadrature, accumulated by compensated
/// summation in node order.
pub fn integrate(f: &ScalarField, weight: &ScalarField) -> Result<f64> {
    if f.values.len() != weight.values.len() {
        return Err(Error::InvalidParameter(
            "integrand and weight field shapes differ".into(),
        ));
    }
    let grid = &f.grid;
    let mut acc = CompensatedSum::new();
    for i in 0..grid.nodes() {
        acc.add(f.values[i] * weight.values[i] * grid.weight(i));
    }
    Ok(acc.value())
}

/// ∫ g(i) dσ over the grid with deterministic (worker-count independent)
/// chunked compensated summation.
pub fn integrate_with<F>(grid: &Grid, workers: usize, g: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    det_sum(grid.nodes(), workers, |i| g(i) * grid.weight(i))
}

/// Plain-text snapshot: one node per row (coordinates then value), header
/// carries kind/n/resolution.
pub fn export_snapshot<W: Write>(grid: &Grid, values: &[f64], out: &mut W) -> std::io::Result<()> {
    match grid.kind {
        GridKind::Axisymmetric => {
            writeln!(
                out,
                "# kind=axisymmetric n={} n_theta={}",
                grid.n, grid.n_theta
            )?;
            writeln!(out, "# theta r")?;
            for idx in 0..grid.nodes() {
                writeln!(out, "{:.17e} {:.17e}", grid.theta(idx), values[idx])?;
            }
        }
        GridKind::LatLong => {
            writeln!(
                out,
                "# kind=latlong n={} n_theta={} n_phi={}",
                grid.n, grid.n_theta, grid.n_phi
            )?;
            writeln!(out, "# theta phi r")?;
            for idx in 0..grid.nodes() {
                writeln!(
                    out,
                    "{:.17e} {:.17e} {:.17e}",
                    grid.theta(idx),
                    grid.phi(idx),
                    values[idx]
                )?;
            }
        }
    }
    Ok(())
}
