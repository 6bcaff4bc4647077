//! Normalized elementary symmetric functions E_k of the principal curvatures,
//! the Hessian quotient F = E_k/E_{k-1}, their derivatives, and the Garding
//! cones Γ_k⁺ in which the quotient is defined.
//!
//! Everything here is a pure function of its arguments and safe for
//! unrestricted concurrent use.

use crate::error::{Error, Result};
use crate::numeric::binomial;

/// Largest supported number of principal curvatures.
pub const MAX_N: usize = 8;

/// The n-tuple of principal curvatures at a point.
///
/// Entries are dimensionless (units in which the ambient sectional curvature
/// is 1). Every derived symmetric quantity is invariant under permutation of
/// the entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureVector {
    vals: [f64; MAX_N],
    n: usize,
}

impl CurvatureVector {
    pub fn new(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if !(2..=MAX_N).contains(&n) {
            return Err(Error::InvalidParameter(format!(
                "curvature vector length {n} outside 2..={MAX_N}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "curvature vector has non-finite entries".into(),
            ));
        }
        let mut vals = [0.0; MAX_N];
        vals[..n].copy_from_slice(values);
        Ok(Self { vals, n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.vals[..self.n]
    }

    /// Scale every entry by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = *self;
        for v in &mut out.vals[..out.n] {
            *v *= c;
        }
        out
    }
}

/// σ_0..σ_n and E_0..E_n of one curvature vector, with the quotient
/// F = E_k/E_{k-1} filled in when requested and defined. σ_{n+1} is treated
/// as 0 throughout.
#[derive(Debug, Clone, Copy)]
pub struct SymmetricValues {
    sigma: [f64; MAX_N + 1],
    e: [f64; MAX_N + 1],
    n: usize,
    /// Quotient index the `f` field refers to (0 when not filled).
    pub k: usize,
    /// E_k/E_{k-1}; NaN when not filled.
    pub f: f64,
}

impl SymmetricValues {
    /// E_l, with the conventions E_0 = 1 and E_l = 0 for l > n.
    #[inline]
    pub fn e(&self, l: usize) -> f64 {
        if l <= self.n {
            self.e[l]
        } else {
            0.0
        }
    }

    /// σ_l, with σ_l = 0 for l > n (covers the σ_{n+1} = 0 convention).
    #[inline]
    pub fn sigma(&self, l: usize) -> f64 {
        if l <= self.n {
            self.sigma[l]
        } else {
            0.0
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }
}

/// Report of Garding-cone membership.
///
/// `member_of` is the largest k with κ ∈ Γ_k⁺ (0 if E_1 ≤ 0); the positive
/// cone Γ⁺ is contained in every Γ_k⁺, so `positive_cone` implies
/// `member_of == n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConeReport {
    pub member_of: usize,
    pub positive_cone: bool,
}

impl ConeReport {
    /// Whether κ ∈ Γ_k⁺, i.e. E_1, …, E_k are all strictly positive.
    #[inline]
    pub fn contains(&self, k: usize) -> bool {
        self.member_of >= k
    }
}

/// σ_0..σ_len of `vals` by the one-pass coefficient recurrence for
/// ∏(1 + κ_i x). Stable, no subset enumeration.
fn sigma_recurrence(vals: &[f64]) -> [f64; MAX_N + 1] {
    let mut c = [0.0; MAX_N + 1];
    c[0] = 1.0;
    for (i, &kappa) in vals.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            c[j] += kappa * c[j - 1];
        }
    }
    c
}

/// All σ_k and E_k of κ. σ_k = C(n,k)·E_k by the same floating evaluation
/// path (E is derived from σ by one division).
pub fn elementary_all(kappa: &CurvatureVector) -> SymmetricValues {
    let n = kappa.n();
    let sigma = sigma_recurrence(kappa.values());
    let mut e = [0.0; MAX_N + 1];
    for (l, el) in e.iter_mut().enumerate().take(n + 1) {
        *el = sigma[l] / binomial(n, l);
    }
    SymmetricValues {
        sigma,
        e,
        n,
        k: 0,
        f: f64::NAN,
    }
}

/// Largest Garding cone containing κ, plus positivity of the entries.
/// Strict inequalities with zero threshold; callers needing a safety margin
/// supply their own.
pub fn cone_membership(kappa: &CurvatureVector) -> ConeReport {
    let sv = elementary_all(kappa);
    let mut member_of = 0;
    for l in 1..=kappa.n() {
        if sv.e(l) > 0.0 {
            member_of = l;
        } else {
            break;
        }
    }
    ConeReport {
        member_of,
        positive_cone: kappa.values().iter().all(|&v| v > 0.0),
    }
}

/// σ_j of the reduced vector omitting index `omit`; σ_{j}(κ\κ_i) is the
/// exact derivative ∂σ_{j+1}/∂κ_i.
fn sigma_reduced(kappa: &CurvatureVector, omit: usize) -> [f64; MAX_N + 1] {
    let mut reduced = [0.0; MAX_N];
    let mut m = 0;
    for (i, &v) in kappa.values().iter().enumerate() {
        if i != omit {
            reduced[m] = v;
            m += 1;
        }
    }
    sigma_recurrence(&reduced[..m])
}

/// ∂E_k/∂κ_i for fixed k, all i: σ_{k-1}(κ with κ_i omitted)/C(n,k).
/// Exact identity, not numeric differentiation.
pub fn grad_e(kappa: &CurvatureVector, k: usize) -> [f64; MAX_N] {
    let n = kappa.n();
    let cnk = binomial(n, k);
    let mut out = [0.0; MAX_N];
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let red = sigma_reduced(kappa, i);
        *o = if k >= 1 { red[k - 1] / cnk } else { 0.0 };
    }
    out
}

fn require_cone(kappa: &CurvatureVector, k: usize) -> Result<SymmetricValues> {
    let n = kappa.n();
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!(
            "quotient index k = {k} outside 1..={n}"
        )));
    }
    let sv = elementary_all(kappa);
    for l in 1..=k {
        if !(sv.e(l) > 0.0) {
            return Err(Error::ConeViolation { k });
        }
    }
    Ok(sv)
}

/// The Hessian quotient F = E_k/E_{k-1}. Homogeneous of degree one with
/// F(1,…,1) = 1. Requires κ ∈ Γ_k⁺.
pub fn quotient_f(kappa: &CurvatureVector, k: usize) -> Result<f64> {
    let sv = require_cone(kappa, k)?;
    Ok(sv.e(k) / sv.e(k - 1))
}

/// ∂F/∂κ_i via the exact reduced-vector derivatives of E_k and E_{k-1}.
pub fn gradient_f(kappa: &CurvatureVector, k: usize) -> Result<[f64; MAX_N]> {
    let sv = require_cone(kappa, k)?;
    let n = kappa.n();
    let ek = sv.e(k);
    let ekm1 = sv.e(k - 1);
    let cnk = binomial(n, k);
    let cnkm1 = binomial(n, k - 1);
    let mut out = [0.0; MAX_N];
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let red = sigma_reduced(kappa, i);
        let de_k = red[k - 1] / cnk;
        let de_km1 = if k >= 2 { red[k - 2] / cnkm1 } else { 0.0 };
        *o = (de_k * ekm1 - ek * de_km1) / (ekm1 * ekm1);
    }
    Ok(out)
}

/// Σ_i ∂F/∂κ_i by the closed form k − (k−1)·E_k E_{k-2}/E_{k-1}².
/// Cheap enough for per-node use in time-step control.
pub fn sum_gradient_f(sv: &SymmetricValues, k: usize) -> f64 {
    if k == 1 {
        1.0
    } else {
        k as f64 - (k - 1) as f64 * sv.e(k) * sv.e(k - 2) / (sv.e(k - 1) * sv.e(k - 1))
    }
}

/// Everything field assembly needs for one point: E/σ filled, cone checked,
/// F computed.
pub fn with_quotient(kappa: &CurvatureVector, k: usize) -> Result<SymmetricValues> {
    let mut sv = require_cone(kappa, k)?;
    sv.k = k;
    sv.f = sv.e(k) / sv.e(k - 1);
    Ok(sv)
}

/// Consecutive Newton quotient gaps
/// (E_k/E_{k-1} − E_{k-1}/E_{k-2}, E_{k+1}/E_k − E_k/E_{k-1}).
///
/// A gap whose quotient has a nonpositive denominator or an out-of-range
/// index is `None` ("not applicable"). Both applicable gaps are ≤ 0 up to
/// rounding for κ ∈ Γ_k⁺.
pub fn newton_residuals(kappa: &CurvatureVector, k: usize) -> Result<[Option<f64>; 2]> {
    let sv = require_cone(kappa, k)?;
    let lower = if k >= 2 && sv.e(k - 2) > 0.0 {
        Some(sv.e(k) / sv.e(k - 1) - sv.e(k - 1) / sv.e(k - 2))
    } else {
        None
    };
    // E_{k+1} is 0 by convention when k = n, so the upper gap always applies
    // inside the cone.
    let upper = Some(sv.e(k + 1) / sv.e(k) - sv.e(k) / sv.e(k - 1));
    Ok([lower, upper])
}
