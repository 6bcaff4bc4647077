//! Initial hypersurfaces: coordinate slices perturbed by (associated)
//! Legendre modes, with automatic amplitude shrinking until the data is
//! spacelike and k-convex.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{assemble, GeomConfig};
use crate::grid::{Grid, GridKind, ScalarField};
use crate::numeric::SplitMix64;

/// One perturbation mode: amplitude × P_degree^{|order|}(cos θ) × azimuthal
/// factor (cos(order·φ) for order > 0, sin(|order|·φ) for order < 0, 1 for
/// order 0). No Condon–Shortley phase, so mode (1, 0, a) is a·cosθ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub degree: usize,
    pub order: i32,
    pub amplitude: f64,
}

pub const MAX_DEGREE: usize = 12;

/// Associated Legendre P_l^m(x) without the Condon–Shortley phase, m ≥ 0.
pub fn legendre(l: usize, m: usize, x: f64) -> f64 {
    debug_assert!(m <= l && l <= MAX_DEGREE);
    // P_m^m = (2m−1)!! (1−x²)^{m/2}
    let mut pmm = 1.0;
    if m > 0 {
        let s = (1.0 - x * x).max(0.0).sqrt();
        let mut fact = 1.0;
        for _ in 0..m {
            pmm *= fact * s;
            fact += 2.0;
        }
    }
    if l == m {
        return pmm;
    }
    // P_{m+1}^m = (2m+1) x P_m^m
    let mut p_prev = pmm;
    let mut p_cur = (2 * m + 1) as f64 * x * pmm;
    if l == m + 1 {
        return p_cur;
    }
    for ll in (m + 2)..=l {
        let p_next =
            ((2 * ll - 1) as f64 * x * p_cur - (ll + m - 1) as f64 * p_prev) / (ll - m) as f64;
        p_prev = p_cur;
        p_cur = p_next;
    }
    p_cur
}

/// r = ρ₀ + Σ modes, without validity checks.
pub fn build_initial(grid: &Arc<Grid>, rho0: f64, modes: &[Mode]) -> Result<Vec<f64>> {
    if !(rho0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "base radius ρ₀ = {rho0} must be positive"
        )));
    }
    for m in modes {
        if m.degree == 0 || m.degree > MAX_DEGREE {
            return Err(Error::InvalidParameter(format!(
                "mode degree {} outside 1..={MAX_DEGREE}",
                m.degree
            )));
        }
        if m.order.unsigned_abs() as usize > m.degree {
            return Err(Error::InvalidParameter(format!(
                "mode order {} exceeds degree {}",
                m.order, m.degree
            )));
        }
        if grid.kind == GridKind::Axisymmetric && m.order != 0 {
            return Err(Error::InvalidParameter(format!(
                "axisymmetric grid cannot carry azimuthal order {}",
                m.order
            )));
        }
    }
    let values = (0..grid.nodes())
        .map(|i| {
            let x = grid.theta(i).cos();
            let phi = grid.phi(i);
            let mut v = rho0;
            for m in modes {
                let az = match m.order.cmp(&0) {
                    std::cmp::Ordering::Equal => 1.0,
                    std::cmp::Ordering::Greater => (m.order as f64 * phi).cos(),
                    std::cmp::Ordering::Less => (-m.order as f64 * phi).sin(),
                };
                v += m.amplitude * legendre(m.degree, m.order.unsigned_abs() as usize, x) * az;
            }
            v
        })
        .collect();
    Ok(values)
}

/// Result of validated construction: the field, plus how many times the
/// amplitudes were halved before the data passed validation.
#[derive(Debug)]
pub struct ValidatedInitial {
    pub field: ScalarField,
    pub halvings: u32,
}

/// Build r = ρ₀ + Σ modes and validate it by full field assembly
/// (spacelike, υ above its floor, κ ∈ Γ_k⁺, min r > 0). On failure all mode
/// amplitudes are halved and construction retried.
pub fn validated_initial(
    grid: &Arc<Grid>,
    rho0: f64,
    modes: &[Mode],
    cfg: &GeomConfig,
) -> Result<ValidatedInitial> {
    let mut modes = modes.to_vec();
    let mut last_err = None;
    for halvings in 0..60 {
        let values = build_initial(grid, rho0, &modes)?;
        if values.iter().all(|&v| v > 0.0) {
            match assemble(grid, &values, cfg) {
                Ok(_) => {
                    return Ok(ValidatedInitial {
                        field: ScalarField::new(grid.clone(), values)?,
                        halvings,
                    })
                }
                Err(e) => last_err = Some(e),
            }
        } else {
            last_err = Some(Error::InvalidParameter(
                "perturbed radius not positive".into(),
            ));
        }
        for m in &mut modes {
            m.amplitude *= 0.5;
        }
    }
    Err(last_err.unwrap_or_else(|| Error::InvalidParameter("initial data invalid".into())))
}

/// Seeded random modes for exploratory runs: degrees in 1..=max_degree,
/// axisymmetric order 0 (or any |order| ≤ degree on lat-long grids),
/// amplitudes uniform in [−amplitude, amplitude].
pub fn random_modes(
    seed: u64,
    count: usize,
    max_degree: usize,
    amplitude: f64,
    kind: GridKind,
) -> Vec<Mode> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|_| {
            let degree = 1 + (rng.next_u64() as usize) % max_degree.clamp(1, MAX_DEGREE);
            let order = match kind {
                GridKind::Axisymmetric => 0,
                GridKind::LatLong => {
                    let span = 2 * degree as i64 + 1;
                    (rng.next_u64() as i64).rem_euclid(span) as i32 - degree as i32
                }
            };
            Mode {
                degree,
                order,
                amplitude: rng.uniform(-amplitude, amplitude),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn legendre_closed_forms() {
        for &x in &[-0.9_f64, -0.3, 0.0, 0.4, 0.8] {
            let s = (1.0 - x * x).sqrt();
            assert!((legendre(1, 0, x) - x).abs() < 1e-15);
            assert!((legendre(2, 0, x) - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-14);
            assert!((legendre(2, 1, x) - 3.0 * x * s).abs() < 1e-14);
            assert!((legendre(2, 2, x) - 3.0 * (1.0 - x * x)).abs() < 1e-14);
            assert!((legendre(3, 0, x) - 0.5 * (5.0 * x * x * x - 3.0 * x)).abs() < 1e-14);
            assert!((legendre(3, 1, x) - 1.5 * (5.0 * x * x - 1.0) * s).abs() < 1e-13);
        }
    }

    #[test]
    fn first_mode_is_cos_theta() {
        let grid = build_grid(GridKind::Axisymmetric, 2, &[64]).unwrap();
        let r = build_initial(
            &grid,
            1.0,
            &[Mode {
                degree: 1,
                order: 0,
                amplitude: 0.1,
            }],
        )
        .unwrap();
        for i in 0..grid.nodes() {
            let want = 1.0 + 0.1 * grid.theta(i).cos();
            assert!((r[i] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn axisymmetric_rejects_azimuthal_orders() {
        let grid = build_grid(GridKind::Axisymmetric, 2, &[64]).unwrap();
        let err = build_initial(
            &grid,
            1.0,
            &[Mode {
                degree: 2,
                order: 1,
                amplitude: 0.1,
            }],
        );
        assert!(err.is_err());
    }

    #[test]
    fn amplitude_auto_shrink_until_valid() {
        let grid = build_grid(GridKind::Axisymmetric, 2, &[64]).unwrap();
        let v = validated_initial(
            &grid,
            1.0,
            &[Mode {
                degree: 1,
                order: 0,
                amplitude: 3.0,
            }],
            &GeomConfig::default(),
        )
        .unwrap();
        assert!(v.halvings > 0, "expected at least one halving");
        assert!(assemble(&grid, &v.field.values, &GeomConfig::default()).is_ok());
    }

    #[test]
    fn random_modes_are_seed_deterministic() {
        let a = random_modes(42, 5, 4, 0.1, GridKind::LatLong);
        let b = random_modes(42, 5, 4, 0.1, GridKind::LatLong);
        assert_eq!(a, b);
        for m in &a {
            assert!(m.order.unsigned_abs() as usize <= m.degree);
        }
    }
}
