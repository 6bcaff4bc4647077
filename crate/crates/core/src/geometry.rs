//! Extrinsic geometry of a spacelike graph hypersurface over Sⁿ in the
//! de Sitter warped product −dr² + cosh²(r)σ.
//!
//! From the radial function r and its σ-covariant derivatives this module
//! assembles, per node: the induced metric g = λ²σ − dr⊗dr and its inverse,
//! the gradient function υ = √(1 − λ⁻²|Dr|²), the support function u = λ/υ,
//! the second fundamental form h = (r_{,ij} + λλ′σ_ij − 2λ⁻¹λ′ r_i r_j)/υ,
//! the principal curvatures (eigenvalues of the pencil h·v = κ g·v), the
//! normalized symmetric functions E_k, the quotient F = E_k/E_{k−1}, the
//! flow speed u − λ′/F, and the area density λⁿυ (dμ = λⁿυ dσ).
//!
//! All tensors are carried in the σ-orthonormal frame, where σ is the
//! identity. On an axisymmetric grid the frame components are diagonal with
//! one profile and one (n−1)-fold azimuthal eigenvalue; on the lat-long grid
//! they are full symmetric 2×2 blocks and the eigenvalue problem is solved by
//! a similarity transform with the symmetric square root of g, cross-checked
//! against the characteristic quadratic.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{differentiate, DerivativeBundle, Grid, GridKind};
use crate::numeric::det_map;
use crate::symfun::{self, CurvatureVector, MAX_N};

/// Warp profile of the ambient metric: λ(r) = cosh r, λ′(r) = sinh r,
/// with λ² − λ′² = 1 and λ″ = λ.
#[derive(Debug, Clone, Copy, Default)]
pub struct WarpProfile;

impl WarpProfile {
    pub fn de_sitter() -> Self {
        WarpProfile
    }

    #[inline]
    pub fn lambda(&self, r: f64) -> f64 {
        r.cosh()
    }

    #[inline]
    pub fn lambda_prime(&self, r: f64) -> f64 {
        r.sinh()
    }
}

/// Symmetric tensor in the σ-orthonormal frame {e_θ, e_φ, …}.
///
/// `tt`/`tp`/`pp` are the θθ, θφ and φφ components; every azimuthal
/// direction beyond the first carries the eigenvalue `pp` with no coupling
/// (exact for axisymmetric fields, and the full 2×2 block when n = 2).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrameTensor {
    pub tt: f64,
    pub tp: f64,
    pub pp: f64,
}

impl FrameTensor {
    pub fn diag(tt: f64, pp: f64) -> Self {
        Self { tt, tp: 0.0, pp }
    }

    pub fn iso(v: f64) -> Self {
        Self::diag(v, v)
    }

    /// Determinant of the full n×n frame matrix.
    pub fn det(&self, n: usize) -> f64 {
        (self.tt * self.pp - self.tp * self.tp) * self.pp.powi(n as i32 - 2)
    }

    /// Trace of the full n×n frame matrix.
    pub fn trace(&self, n: usize) -> f64 {
        self.tt + (n as f64 - 1.0) * self.pp
    }
}

/// Configuration of field assembly.
#[derive(Debug, Clone, Copy)]
pub struct GeomConfig {
    /// Quotient index in F = E_k/E_{k-1}.
    pub k: usize,
    /// Floor for the gradient function below which the hypersurface is
    /// reported near-null instead of letting υ underflow.
    pub upsilon_min: f64,
    pub workers: usize,
}

impl Default for GeomConfig {
    fn default() -> Self {
        Self {
            k: 2,
            upsilon_min: 1e-3,
            workers: 1,
        }
    }
}

/// All per-node geometric fields of one hypersurface. Immutable once
/// assembled; safe to share read-only across workers.
#[derive(Debug, Clone)]
pub struct GeometryFields {
    pub n: usize,
    pub k: usize,
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
    pub lambda_prime: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub u: Vec<f64>,
    pub g: Vec<FrameTensor>,
    pub ginv: Vec<FrameTensor>,
    pub h: Vec<FrameTensor>,
    pub det_g: Vec<f64>,
    /// Principal curvatures, nodes × n, sorted ascending per node.
    kappa: Vec<f64>,
    /// Normalized symmetric functions, nodes × (n+1): E_0..E_n.
    e: Vec<f64>,
    /// Quotient F = E_k/E_{k-1} per node.
    pub f_quot: Vec<f64>,
    /// Flow speed u − λ′/F per node.
    pub speed: Vec<f64>,
    /// dμ/dσ = λⁿ υ per node.
    pub area_density: Vec<f64>,
    /// Σ_i ∂F/∂κ_i per node (time-step control).
    pub sum_df: Vec<f64>,
    /// Largest eigenvalue of g⁻¹, 1/(λυ)², per node.
    pub max_ginv_eig: Vec<f64>,
}

impl GeometryFields {
    pub fn nodes(&self) -> usize {
        self.u.len()
    }

    #[inline]
    pub fn kappa(&self, node: usize) -> &[f64] {
        &self.kappa[node * self.n..(node + 1) * self.n]
    }

    #[inline]
    pub fn e_k(&self, node: usize, l: usize) -> f64 {
        if l <= self.n {
            self.e[node * (self.n + 1) + l]
        } else {
            0.0
        }
    }
}

/// Eigenvalues of a symmetric 2×2 matrix [[a, b], [b, c]], ascending.
fn sym2_eigenvalues(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let rad = f64::hypot(0.5 * (a - c), b);
    (mean - rad, mean + rad)
}

/// κ of the symmetric pencil h v = κ g v (g SPD) for full 2×2 frame blocks,
/// via the similarity transform M = g^{-1/2} h g^{-1/2} with the symmetric
/// square root of g. Returns ascending eigenvalues.
pub fn pencil_eigenvalues_2x2(h: &FrameTensor, g: &FrameTensor) -> Result<(f64, f64)> {
    let (mu1, mu2) = sym2_eigenvalues(g.tt, g.tp, g.pp);
    if !(mu1 > 0.0) || !mu2.is_finite() {
        return Err(Error::Eigen {
            node: 0,
            message: format!("metric block not positive definite: eigenvalues ({mu1}, {mu2})"),
        });
    }
    // rotation diagonalizing g: columns (cos w, sin w), (−sin w, cos w)
    let half = 0.5 * f64::atan2(2.0 * g.tp, g.tt - g.pp);
    let (s, c) = half.sin_cos();
    // g = R diag(d1, d2) Rᵀ with R = [[c, -s], [s, c]]
    let d1 = c * c * g.tt + 2.0 * s * c * g.tp + s * s * g.pp;
    let d2 = s * s * g.tt - 2.0 * s * c * g.tp + c * c * g.pp;
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(Error::Eigen {
            node: 0,
            message: "metric block not positive definite".into(),
        });
    }
    let (i1, i2) = (1.0 / d1.sqrt(), 1.0 / d2.sqrt());
    // s_ij = (g^{-1/2})_ij
    let s11 = c * c * i1 + s * s * i2;
    let s12 = s * c * (i1 - i2);
    let s22 = s * s * i1 + c * c * i2;
    // M = S h S, symmetric
    let (h11, h12, h22) = (h.tt, h.tp, h.pp);
    let a11 = s11 * h11 + s12 * h12;
    let a12 = s11 * h12 + s12 * h22;
    let a21 = s12 * h11 + s22 * h12;
    let a22 = s12 * h12 + s22 * h22;
    let m11 = a11 * s11 + a12 * s12;
    let m12 = a11 * s12 + a12 * s22;
    let m22 = a21 * s12 + a22 * s22;
    let (k1, k2) = sym2_eigenvalues(m11, m12, m22);
    if !k1.is_finite() || !k2.is_finite() {
        return Err(Error::Eigen {
            node: 0,
            message: "non-finite pencil eigenvalues".into(),
        });
    }
    Ok((k1, k2))
}

/// κ of the same pencil through the characteristic quadratic
/// det(h − κ g) = 0, the independent cross-check route for n = 2.
pub fn pencil_eigenvalues_quadratic(h: &FrameTensor, g: &FrameTensor) -> Result<(f64, f64)> {
    let a = g.tt * g.pp - g.tp * g.tp;
    let b = h.tt * g.pp + h.pp * g.tt - 2.0 * h.tp * g.tp;
    let c = h.tt * h.pp - h.tp * h.tp;
    if !(a > 0.0) {
        return Err(Error::Eigen {
            node: 0,
            message: "metric block not positive definite".into(),
        });
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::Eigen {
            node: 0,
            message: format!("negative discriminant {disc} in characteristic quadratic"),
        });
    }
    let sd = disc.sqrt();
    // stable roots of a κ² − b κ + c
    let q = 0.5 * (b + b.signum() * sd);
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    Ok((r1.min(r2), r1.max(r2)))
}

/// Per-node assembly output.
#[derive(Debug, Clone, Copy, Default)]
struct NodeGeom {
    lambda: f64,
    lambda_prime: f64,
    upsilon: f64,
    u: f64,
    g: FrameTensor,
    ginv: FrameTensor,
    h: FrameTensor,
    det_g: f64,
    kappa: [f64; MAX_N],
    e: [f64; MAX_N + 1],
    f_quot: f64,
    speed: f64,
    area_density: f64,
    sum_df: f64,
    max_ginv_eig: f64,
    err: Option<NodeErr>,
}

#[derive(Debug, Clone, Copy)]
enum NodeErr {
    Null,
    NearNull(f64),
    Cone([f64; MAX_N]),
    Eigen,
}

fn node_geometry(
    r: f64,
    grad_t: f64,
    grad_p: f64,
    hess_tt: f64,
    hess_tp: f64,
    hess_pp: f64,
    n: usize,
    k: usize,
    upsilon_min: f64,
    diagonal: bool,
) -> NodeGeom {
    let mut out = NodeGeom {
        lambda: r.cosh(),
        lambda_prime: r.sinh(),
        ..Default::default()
    };
    let lam = out.lambda;
    let lamp = out.lambda_prime;
    let lam2 = lam * lam;
    let grad2 = grad_t * grad_t + grad_p * grad_p;
    if grad2 >= lam2 {
        out.err = Some(NodeErr::Null);
        return out;
    }
    let upsilon = (1.0 - grad2 / lam2).sqrt();
    if upsilon <= upsilon_min {
        out.err = Some(NodeErr::NearNull(upsilon));
        return out;
    }
    out.upsilon = upsilon;
    out.u = lam / upsilon;

    out.g = FrameTensor {
        tt: lam2 - grad_t * grad_t,
        tp: -grad_t * grad_p,
        pp: lam2 - grad_p * grad_p,
    };
    // closed-form inverse: g^{-1} = λ⁻²(I + d dᵀ/(λ²υ²))
    let il2 = 1.0 / lam2;
    let denom = lam2 * upsilon * upsilon;
    out.ginv = FrameTensor {
        tt: il2 * (1.0 + grad_t * grad_t / denom),
        tp: il2 * (grad_t * grad_p / denom),
        pp: il2 * (1.0 + grad_p * grad_p / denom),
    };
    out.det_g = out.g.det(n);

    let tl = 2.0 * lamp / lam;
    let iu = 1.0 / upsilon;
    out.h = FrameTensor {
        tt: iu * (hess_tt + lam * lamp - tl * grad_t * grad_t),
        tp: iu * (hess_tp - tl * grad_t * grad_p),
        pp: iu * (hess_pp + lam * lamp - tl * grad_p * grad_p),
    };

    let (k1, k2) = if diagonal {
        let a = out.h.tt / out.g.tt;
        let b = out.h.pp / out.g.pp;
        (a.min(b), a.max(b))
    } else {
        match pencil_eigenvalues_2x2(&out.h, &out.g) {
            Ok(v) => v,
            Err(_) => {
                out.err = Some(NodeErr::Eigen);
                return out;
            }
        }
    };
    // ascending with multiplicity: one profile value, (n−1) azimuthal; for
    // the diagonal representation the smaller branch comes first either way
    let (mult_first, first, second) = if diagonal {
        let prof = out.h.tt / out.g.tt;
        let azi = out.h.pp / out.g.pp;
        if prof <= azi {
            (1, prof, azi)
        } else {
            (n - 1, azi, prof)
        }
    } else {
        (1, k1, k2)
    };
    let mut m = 0;
    for _ in 0..mult_first {
        out.kappa[m] = first;
        m += 1;
    }
    while m < n {
        out.kappa[m] = second;
        m += 1;
    }

    let kv = match CurvatureVector::new(&out.kappa[..n]) {
        Ok(v) => v,
        Err(_) => {
            out.err = Some(NodeErr::Eigen);
            return out;
        }
    };
    let sv = match symfun::with_quotient(&kv, k) {
        Ok(sv) => sv,
        Err(_) => {
            out.err = Some(NodeErr::Cone(out.kappa));
            return out;
        }
    };
    for l in 0..=n {
        out.e[l] = sv.e(l);
    }
    out.f_quot = sv.f;
    out.speed = out.u - lamp / sv.f;
    out.area_density = lam.powi(n as i32) * upsilon;
    out.sum_df = symfun::sum_gradient_f(&sv, k);
    out.max_ginv_eig = 1.0 / (lam * upsilon).powi(2);
    out
}

/// Induced metric, its closed-form inverse and determinant per node.
pub fn induced_metric(
    grid: &Grid,
    r: &[f64],
    bundle: &DerivativeBundle,
) -> Result<(Vec<FrameTensor>, Vec<FrameTensor>, Vec<f64>)> {
    let mut g = Vec::with_capacity(grid.nodes());
    let mut ginv = Vec::with_capacity(grid.nodes());
    let mut det = Vec::with_capacity(grid.nodes());
    for i in 0..grid.nodes() {
        let lam = r[i].cosh();
        let lam2 = lam * lam;
        let (dt, dp) = (bundle.grad_theta[i], bundle.grad_phi[i]);
        let grad2 = dt * dt + dp * dp;
        if grad2 >= lam2 {
            return Err(Error::NullDegeneration { node: i });
        }
        let ups2 = 1.0 - grad2 / lam2;
        g.push(FrameTensor {
            tt: lam2 - dt * dt,
            tp: -dt * dp,
            pp: lam2 - dp * dp,
        });
        let denom = lam2 * ups2;
        ginv.push(FrameTensor {
            tt: (1.0 + dt * dt / denom) / lam2,
            tp: (dt * dp / denom) / lam2,
            pp: (1.0 + dp * dp / denom) / lam2,
        });
        det.push(g[i].det(grid.n));
    }
    Ok((g, ginv, det))
}

/// Gradient function υ ∈ (υ_min, 1] and support function u = λ/υ > 1.
pub fn gradient_and_support(
    grid: &Grid,
    r: &[f64],
    bundle: &DerivativeBundle,
    upsilon_min: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ups = Vec::with_capacity(grid.nodes());
    let mut u = Vec::with_capacity(grid.nodes());
    for i in 0..grid.nodes() {
        let lam = r[i].cosh();
        let (dt, dp) = (bundle.grad_theta[i], bundle.grad_phi[i]);
        let grad2 = dt * dt + dp * dp;
        if grad2 >= lam * lam {
            return Err(Error::NullDegeneration { node: i });
        }
        let upsilon = (1.0 - grad2 / (lam * lam)).sqrt();
        if upsilon <= upsilon_min {
            return Err(Error::NearNull {
                node: i,
                upsilon,
                upsilon_min,
            });
        }
        ups.push(upsilon);
        u.push(lam / upsilon);
    }
    Ok((ups, u))
}

/// Second fundamental form h = (r_{,ij} + λλ′σ_ij − 2λ⁻¹λ′ r_i r_j)/υ,
/// symmetric by construction.
pub fn second_fundamental_form(
    grid: &Grid,
    r: &[f64],
    bundle: &DerivativeBundle,
    upsilon: &[f64],
) -> Vec<FrameTensor> {
    (0..grid.nodes())
        .map(|i| {
            let lam = r[i].cosh();
            let lamp = r[i].sinh();
            let (dt, dp) = (bundle.grad_theta[i], bundle.grad_phi[i]);
            let tl = 2.0 * lamp / lam;
            let iu = 1.0 / upsilon[i];
            FrameTensor {
                tt: iu * (bundle.hess_tt[i] + lam * lamp - tl * dt * dt),
                tp: iu * (bundle.hess_tp[i] - tl * dt * dp),
                pp: iu * (bundle.hess_pp[i] + lam * lamp - tl * dp * dp),
            }
        })
        .collect()
}

/// Principal curvatures per node, ascending. The Weingarten map g⁻¹h is
/// similar to the symmetric matrix g^{-1/2} h g^{-1/2}, so the spectrum is
/// real; on diagonal (axisymmetric) blocks the pencil is already diagonal.
pub fn shape_and_curvatures(
    grid: &Grid,
    g: &[FrameTensor],
    h: &[FrameTensor],
) -> Result<(Vec<FrameTensor>, Vec<f64>)> {
    let n = grid.n;
    let mut shape = Vec::with_capacity(grid.nodes());
    let mut kappa = vec![0.0; grid.nodes() * n];
    for i in 0..grid.nodes() {
        // W = g⁻¹ h in the frame (non-symmetric in general); stored for
        // trace/determinant diagnostics
        let det2 = g[i].tt * g[i].pp - g[i].tp * g[i].tp;
        let w = FrameTensor {
            tt: (g[i].pp * h[i].tt - g[i].tp * h[i].tp) / det2,
            tp: (g[i].pp * h[i].tp - g[i].tp * h[i].pp) / det2,
            pp: (g[i].tt * h[i].pp - g[i].tp * h[i].tp) / det2,
        };
        shape.push(w);
        let (k1, k2) = if grid.kind == GridKind::Axisymmetric {
            let a = h[i].tt / g[i].tt;
            let b = h[i].pp / g[i].pp;
            (a.min(b), a.max(b))
        } else {
            pencil_eigenvalues_2x2(&h[i], &g[i]).map_err(|e| match e {
                Error::Eigen { message, .. } => Error::Eigen { node: i, message },
                other => other,
            })?
        };
        // fill ascending with multiplicities
        let (lo, hi) = (k1, k2);
        let lo_mult =
            if grid.kind == GridKind::Axisymmetric && h[i].pp / g[i].pp <= h[i].tt / g[i].tt {
                n - 1
            } else {
                1
            };
        for m in 0..n {
            kappa[i * n + m] = if m < lo_mult { lo } else { hi };
        }
    }
    Ok((shape, kappa))
}

/// Assemble every geometric field of the hypersurface r over the grid.
/// Errors carry the first offending node in node order, independent of the
/// worker count.
pub fn assemble(grid: &Arc<Grid>, r: &[f64], cfg: &GeomConfig) -> Result<GeometryFields> {
    let n = grid.n;
    if cfg.k < 1 || cfg.k > n {
        return Err(Error::InvalidParameter(format!(
            "quotient index k = {} outside 1..={n}",
            cfg.k
        )));
    }
    let bundle = differentiate(grid, r);
    let diagonal = grid.kind == GridKind::Axisymmetric;
    let nodes = grid.nodes();
    let per_node = det_map(nodes, cfg.workers, |i| {
        node_geometry(
            r[i],
            bundle.grad_theta[i],
            bundle.grad_phi[i],
            bundle.hess_tt[i],
            bundle.hess_tp[i],
            bundle.hess_pp[i],
            n,
            cfg.k,
            cfg.upsilon_min,
            diagonal,
        )
    });
    for (i, ng) in per_node.iter().enumerate() {
        match ng.err {
            None => {}
            Some(NodeErr::Null) => return Err(Error::NullDegeneration { node: i }),
            Some(NodeErr::NearNull(upsilon)) => {
                return Err(Error::NearNull {
                    node: i,
                    upsilon,
                    upsilon_min: cfg.upsilon_min,
                })
            }
            Some(NodeErr::Cone(kappa)) => {
                return Err(Error::KConvexityLost {
                    k: cfg.k,
                    node: i,
                    kappa: kappa[..n].to_vec(),
                })
            }
            Some(NodeErr::Eigen) => {
                return Err(Error::Eigen {
                    node: i,
                    message: "pencil eigenvalue extraction failed".into(),
                })
            }
        }
    }

    let mut fields = GeometryFields {
        n,
        k: cfg.k,
        r: r.to_vec(),
        lambda: Vec::with_capacity(nodes),
        lambda_prime: Vec::with_capacity(nodes),
        upsilon: Vec::with_capacity(nodes),
        u: Vec::with_capacity(nodes),
        g: Vec::with_capacity(nodes),
        ginv: Vec::with_capacity(nodes),
        h: Vec::with_capacity(nodes),
        det_g: Vec::with_capacity(nodes),
        kappa: Vec::with_capacity(nodes * n),
        e: Vec::with_capacity(nodes * (n + 1)),
        f_quot: Vec::with_capacity(nodes),
        speed: Vec::with_capacity(nodes),
        area_density: Vec::with_capacity(nodes),
        sum_df: Vec::with_capacity(nodes),
        max_ginv_eig: Vec::with_capacity(nodes),
    };
    for ng in &per_node {
        fields.lambda.push(ng.lambda);
        fields.lambda_prime.push(ng.lambda_prime);
        fields.upsilon.push(ng.upsilon);
        fields.u.push(ng.u);
        fields.g.push(ng.g);
        fields.ginv.push(ng.ginv);
        fields.h.push(ng.h);
        fields.det_g.push(ng.det_g);
        fields.kappa.extend_from_slice(&ng.kappa[..n]);
        fields.e.extend_from_slice(&ng.e[..n + 1]);
        fields.f_quot.push(ng.f_quot);
        fields.speed.push(ng.speed);
        fields.area_density.push(ng.area_density);
        fields.sum_df.push(ng.sum_df);
        fields.max_ginv_eig.push(ng.max_ginv_eig);
    }
    Ok(fields)
}

/// Max-norm residuals of the structural Hessian identities along the
/// hypersurface, evaluated on axisymmetric grids:
///
/// * `warp_hessian`: ∇²λ′ − (u h − λ′ g)
/// * `support_hessian`: ∇²u − (−λ′ h + g(∇λ′, ∇h) + u h²)
///
/// where ∇ is the Levi-Civita connection of the induced metric. Both decay
/// at the scheme order under refinement. The support identity needs third
/// derivatives of r, which the one-dimensional reduction keeps tractable.
#[derive(Debug, Clone, Copy)]
pub struct IdentityResiduals {
    pub warp_hessian: f64,
    pub support_hessian: f64,
}

pub fn hessian_identity_residuals(
    grid: &Grid,
    fields: &GeometryFields,
) -> Result<IdentityResiduals> {
    if grid.kind != GridKind::Axisymmetric {
        return Err(Error::InvalidParameter(
            "identity residuals are evaluated on axisymmetric grids".into(),
        ));
    }
    let nodes = grid.nodes();
    // θ-derivatives of the assembled fields (even parity at the poles)
    let d_lamp = differentiate(grid, &fields.lambda_prime);
    let d_u = differentiate(grid, &fields.u);
    let gtt: Vec<f64> = fields.g.iter().map(|t| t.tt).collect();
    let gpp: Vec<f64> = fields.g.iter().map(|t| t.pp).collect();
    let htt: Vec<f64> = fields.h.iter().map(|t| t.tt).collect();
    let hpp: Vec<f64> = fields.h.iter().map(|t| t.pp).collect();
    let d_gtt = differentiate(grid, &gtt);
    let d_gpp = differentiate(grid, &gpp);
    let d_htt = differentiate(grid, &htt);
    let d_hpp = differentiate(grid, &hpp);

    let mut res_warp = 0.0_f64;
    let mut res_supp = 0.0_f64;
    for i in 0..nodes {
        let t = grid.theta(i);
        let cot = t.cos() / t.sin();
        let big_g = gtt[i];
        let (u, lamp) = (fields.u[i], fields.lambda_prime[i]);

        // g-covariant Hessian of a 1-D scalar w in frame components:
        //   w_{;θθ} = w″ − Γ^θ_{θθ} w′,            Γ^θ_{θθ} = G′/(2G)
        //   w_{;φφ}/sin²θ = w′ (P′/(2G))/sin²θ,    P = g_pp sin²θ
        // with P′/sin²θ = g_pp′ + 2 g_pp cotθ.
        let hess = |w1: f64, w2: f64| {
            let tt = w2 - d_gtt.grad_theta[i] / (2.0 * big_g) * w1;
            let pp = w1 * (d_gpp.grad_theta[i] + 2.0 * gpp[i] * cot) / (2.0 * big_g);
            (tt, pp)
        };

        let (ltt, lpp) = hess(d_lamp.grad_theta[i], d_lamp.hess_tt[i]);
        let rw_tt = ltt - (u * htt[i] - lamp * gtt[i]);
        let rw_pp = lpp - (u * hpp[i] - lamp * gpp[i]);
        res_warp = res_warp.max(rw_tt.abs()).max(rw_pp.abs());

        // support identity: ∇²u = −λ′h + g(∇λ′, ∇h) + u h², with
        // (∇_θ h)_tt = h_tt′ − h_tt G′/G, (∇_θ h)_pp = h_pp′ − h_pp P′/P + 2cotθ h_pp − 2cotθ h_pp
        //  = h_pp′ − h_pp g_pp′/g_pp  (frame components)
        let (utt, upp) = hess(d_u.grad_theta[i], d_u.hess_tt[i]);
        let grad_term_tt = d_lamp.grad_theta[i] / big_g
            * (d_htt.grad_theta[i] - htt[i] * d_gtt.grad_theta[i] / big_g);
        let grad_term_pp = d_lamp.grad_theta[i] / big_g
            * (d_hpp.grad_theta[i] - hpp[i] * d_gpp.grad_theta[i] / gpp[i]);
        let rs_tt = utt - (-lamp * htt[i] + grad_term_tt + u * htt[i] * htt[i] / big_g);
        let rs_pp = upp - (-lamp * hpp[i] + grad_term_pp + u * hpp[i] * hpp[i] / gpp[i]);
        res_supp = res_supp.max(rs_tt.abs()).max(rs_pp.abs());
    }
    Ok(IdentityResiduals {
        warp_hessian: res_warp,
        support_hessian: res_supp,
    })
}
