//! Quermassintegrals of spacelike graph hypersurfaces, their coordinate-slice
//! closed forms, the Minkowski-formula residuals, and the Alexandrov–Fenchel
//! inequality check A₂ ≤ φ₂∘φ₁⁻¹(A₁).
//!
//! Definitions: A₋₁ = (n+1)·(enclosed volume), A₀ = area, and
//! A_l = ∫E_l dμ − l/(n+2−l)·A_{l−2} for l ≥ 1. With this normalization
//! dA_l/dt = (n−l)∫E_{l+1}·speed·dμ along any normal flow, A₁ is conserved
//! by the quotient flow and A₂ is nondecreasing.
//!
//! φ_l(ρ) is A_l of the coordinate slice of radius ρ; φ₁ is strictly
//! increasing on ρ > 0, which is what makes the composition φ₂∘φ₁⁻¹
//! well-defined. Equality in the A₂ bound holds exactly on slices.
//!
//! N.B. for n = 2 the quantity A₂ is a topological invariant (it is constant
//! along arbitrary normal deformations since n − l = 0), so the inequality
//! degenerates to an identity there; n ≥ 3 carries the genuine content.

use crate::error::{Error, Result};
use crate::geometry::GeometryFields;
use crate::grid::Grid;
use crate::numeric::{cosh_pow_antiderivative, det_sum, sphere_area};

/// A₋₁, A₀, …, A_{k_max} of one hypersurface.
#[derive(Debug, Clone)]
pub struct QuermassVector {
    /// a[i] = A_{i-1}: index 0 holds A₋₁.
    a: Vec<f64>,
    pub n: usize,
}

impl QuermassVector {
    /// A_l for l in −1..=k_max.
    pub fn a(&self, l: isize) -> f64 {
        self.a[(l + 1) as usize]
    }

    pub fn k_max(&self) -> isize {
        self.a.len() as isize - 2
    }
}

/// ∫ E_l dμ over the hypersurface.
pub fn curvature_integral(grid: &Grid, fields: &GeometryFields, l: usize, workers: usize) -> f64 {
    det_sum(grid.nodes(), workers, |i| {
        grid.weight(i) * fields.e_k(i, l) * fields.area_density[i]
    })
}

/// Quermassintegrals A₋₁..A_{k_max} of the assembled hypersurface.
///
/// A₋₁ integrates the exact radial antiderivative of coshⁿ node by node, so
/// no radial quadrature error enters the volume term.
pub fn quermassintegrals(
    grid: &Grid,
    fields: &GeometryFields,
    k_max: usize,
    workers: usize,
) -> Result<QuermassVector> {
    let n = grid.n;
    if k_max > n {
        return Err(Error::InvalidParameter(format!(
            "k_max = {k_max} exceeds hypersurface dimension n = {n}"
        )));
    }
    let mut a = Vec::with_capacity(k_max + 2);
    let vol = det_sum(grid.nodes(), workers, |i| {
        grid.weight(i) * cosh_pow_antiderivative(n, fields.r[i])
    });
    a.push((n + 1) as f64 * vol);
    let area = det_sum(grid.nodes(), workers, |i| {
        grid.weight(i) * fields.area_density[i]
    });
    a.push(area);
    for l in 1..=k_max {
        let il = curvature_integral(grid, fields, l, workers);
        let prev = a[l - 1]; // A_{l-2}
        a.push(il - l as f64 / (n + 2 - l) as f64 * prev);
    }
    Ok(QuermassVector { a, n })
}

/// The slice quermassintegral functions φ_l(ρ) = A_l({ρ}×Sⁿ) and |Sⁿ|.
///
/// On a slice the principal curvatures are tanh ρ and dμ = coshⁿρ dσ, so
/// ∫E_l dμ = ωₙ cosh^{n−l}ρ sinh^lρ and the recursion closes in cosh/sinh.
#[derive(Debug, Clone, Copy)]
pub struct SliceFunctions {
    pub n: usize,
    pub omega_n: f64,
}

impl SliceFunctions {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            omega_n: sphere_area(n),
        }
    }

    /// φ_l(ρ) for l in −1..=n.
    pub fn phi(&self, l: isize, rho: f64) -> f64 {
        let n = self.n;
        match l {
            -1 => (n + 1) as f64 * self.omega_n * cosh_pow_antiderivative(n, rho),
            0 => self.omega_n * rho.cosh().powi(n as i32),
            l => {
                let l = l as usize;
                let il = self.omega_n * rho.cosh().powi((n - l) as i32) * rho.sinh().powi(l as i32);
                il - l as f64 / (n + 2 - l) as f64 * self.phi(l as isize - 2, rho)
            }
        }
    }

    /// dφ₁/dρ = ωₙ (n−1) cosh^{n−2}ρ sinh²ρ > 0 for ρ > 0: φ₁ is strictly
    /// increasing, hence invertible.
    pub fn phi1_derivative(&self, rho: f64) -> f64 {
        self.omega_n * (self.n - 1) as f64 * rho.cosh().powi(self.n as i32 - 2) * rho.sinh().powi(2)
    }
}

/// φ_l of the slice of radius ρ.
pub fn slice_phi(rho: f64, l: isize, n: usize) -> f64 {
    SliceFunctions::new(n).phi(l, rho)
}

/// ρ with φ₁(ρ) = target, by bracketing bisection and Newton polish.
/// Requires target > 0 (the range of φ₁ on ρ > 0).
pub fn invert_phi1(target: f64, n: usize) -> Result<f64> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::Domain(format!(
            "φ₁ inversion target must be positive and finite, got {target}"
        )));
    }
    let sf = SliceFunctions::new(n);
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while sf.phi(1, hi) < target {
        hi *= 2.0;
        if hi > 710.0 {
            return Err(Error::Domain(format!(
                "φ₁ inversion target {target} out of floating range"
            )));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if sf.phi(1, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut rho = 0.5 * (lo + hi);
    for _ in 0..4 {
        let f = sf.phi(1, rho) - target;
        let d = sf.phi1_derivative(rho);
        if d <= 0.0 {
            break;
        }
        let step = f / d;
        rho -= step;
        if rho <= 0.0 {
            rho = f64::MIN_POSITIVE.max(0.5 * (rho + step));
        }
        if step.abs() <= 1e-16 * (1.0 + rho.abs()) {
            break;
        }
    }
    Ok(rho)
}

/// Alexandrov–Fenchel report: the slice radius ρ* with matching A₁, the
/// slice bound φ₂(ρ*), and its slack over the measured A₂.
#[derive(Debug, Clone, Copy)]
pub struct AfReport {
    pub a1: f64,
    pub a2: f64,
    pub rho_star: f64,
    pub bound: f64,
    pub slack: f64,
}

pub fn af_check(q: &QuermassVector) -> Result<AfReport> {
    let a1 = q.a(1);
    let a2 = q.a(2);
    let rho_star = invert_phi1(a1, q.n)?;
    let bound = slice_phi(rho_star, 2, q.n);
    Ok(AfReport {
        a1,
        a2,
        rho_star,
        bound,
        slack: bound - a2,
    })
}

/// Minkowski-formula residual ∫(u E_k − λ′E_{k−1}) dμ, a single compensated
/// sum over the pointwise difference so that slices cancel to rounding.
pub fn minkowski_residual(grid: &Grid, fields: &GeometryFields, k: usize, workers: usize) -> f64 {
    det_sum(grid.nodes(), workers, |i| {
        grid.weight(i)
            * fields.area_density[i]
            * (fields.u[i] * fields.e_k(i, k) - fields.lambda_prime[i] * fields.e_k(i, k - 1))
    })
}

/// One entry of the flow-variation comparison for A_l: the nonuniform
/// 3-point derivative of the sampled A_l series against the recorded
/// right-hand side (n−l)∫E_{l+1}·speed·dμ at the middle time.
#[derive(Debug, Clone, Copy)]
pub struct VariationPoint {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl VariationPoint {
    pub fn mismatch(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Compare d/dt A_l against its integral form at interior sample times.
/// `times`, `a_series` (values of A_l) and `rhs_series` must be aligned;
/// needs at least 3 samples.
pub fn variation_series(
    times: &[f64],
    a_series: &[f64],
    rhs_series: &[f64],
) -> Result<Vec<VariationPoint>> {
    let m = times.len();
    if m < 3 || a_series.len() != m || rhs_series.len() != m {
        return Err(Error::InsufficientStates { needed: 3, got: m });
    }
    let mut out = Vec::with_capacity(m - 2);
    for i in 1..m - 1 {
        let dm = times[i] - times[i - 1];
        let dp = times[i + 1] - times[i];
        // second-order derivative on a nonuniform 3-point stencil
        let lhs = (dm * dm * a_series[i + 1] + (dp * dp - dm * dm) * a_series[i]
            - dp * dp * a_series[i - 1])
            / (dm * dp * (dm + dp));
        out.push(VariationPoint {
            t: times[i],
            lhs,
            rhs: rhs_series[i],
        });
    }
    Ok(out)
}
