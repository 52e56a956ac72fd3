//! Cheap bracketing of the common SINR through Perron-root bounds.
//!
//! Only the matrix for the weakest direct link is examined:
//! `A = F + (1/p_max)·v·e_lᵀ` with `l = argmax v`. With
//! `B = (A + I)^(L−1)`, the row quantities
//!
//! ```text
//! δ_l = (rs_l(AᵃBᵇ) / rs_l(Bᵇ))^(1/a)
//! ```
//!
//! and their column analogues `δ'_l` satisfy `min δ ≤ ρ(A) ≤ max δ`, which
//! turn into SINR bounds through `γ = 1/ρ`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{column_augmented, PartitionGroup};
use crate::error::{CoordError, Result};

/// Exponents of the bound construction. `matrix_power_exponent` defaults to
/// `L − 1` for a group of size `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerronBoundParams {
    pub a: u32,
    pub b: u32,
    #[serde(default)]
    pub matrix_power_exponent: Option<u32>,
}

impl Default for PerronBoundParams {
    fn default() -> Self {
        PerronBoundParams {
            a: 1,
            b: 1,
            matrix_power_exponent: None,
        }
    }
}

impl PerronBoundParams {
    pub fn new(a: u32, b: u32) -> Self {
        PerronBoundParams {
            a,
            b,
            matrix_power_exponent: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBounds {
    pub lower: f64,
    pub upper: f64,
}

impl SinrBounds {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Index of the largest inverse gain (weakest direct link), first on ties.
pub fn weakest_link(group: &PartitionGroup) -> usize {
    let v = &group.inverse_gains;
    (1..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best })
}

/// Matrix power normalized by its largest entry at every product. Only ratios
/// of sums are consumed, so the scale is irrelevant and overflow is avoided.
fn scaled_power(m: &DMatrix<f64>, mut exp: u32) -> DMatrix<f64> {
    let n = m.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = m.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = normalize(&result * &base);
        }
        exp >>= 1;
        if exp > 0 {
            base = normalize(&base * &base);
        }
    }
    result
}

fn normalize(m: DMatrix<f64>) -> DMatrix<f64> {
    let peak = m.amax();
    if peak > 0.0 && peak.is_finite() {
        m / peak
    } else {
        m
    }
}

/// `(min, max)` over the positive ratios `(num_l / den_l)^(1/a)`. Zero
/// numerators come from all-zero rows and are left out.
fn ratio_range(num: &[f64], den: &[f64], a: u32) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (n, d) in num.iter().zip(den) {
        if *n <= 0.0 {
            continue;
        }
        let delta = (n / d).powf(1.0 / a as f64);
        lo = lo.min(delta);
        hi = hi.max(delta);
    }
    (lo, hi)
}

pub fn sinr_bounds(
    group: &PartitionGroup,
    p_max: f64,
    params: PerronBoundParams,
) -> Result<SinrBounds> {
    let l = group.len();
    if l == 0 {
        return Err(CoordError::InvalidInput("empty partition group".into()));
    }
    if params.a == 0 || params.b == 0 {
        return Err(CoordError::InvalidInput("bound exponents a, b must be positive".into()));
    }
    if !(p_max.is_finite() && p_max > 0.0) {
        return Err(CoordError::InvalidInput(format!("p_max must be positive, got {p_max}")));
    }
    let a_mat = column_augmented(group, p_max, weakest_link(group));
    let exponent = params.matrix_power_exponent.unwrap_or(l as u32 - 1);
    let shifted = &a_mat + DMatrix::identity(l, l);
    let b_pow = scaled_power(&scaled_power(&shifted, exponent), params.b);
    // Aᵃ stays unnormalized: numerator and denominator share B's scale.
    let mut a_pow = DMatrix::identity(l, l);
    for _ in 0..params.a {
        a_pow = &a_pow * &a_mat;
    }
    let ab = a_pow * &b_pow;

    let rows = |m: &DMatrix<f64>| (0..l).map(|i| m.row(i).sum()).collect::<Vec<_>>();
    let cols = |m: &DMatrix<f64>| (0..l).map(|j| m.column(j).sum()).collect::<Vec<_>>();
    let (row_lo, row_hi) = ratio_range(&rows(&ab), &rows(&b_pow), params.a);
    let (col_lo, col_hi) = ratio_range(&cols(&ab), &cols(&b_pow), params.a);

    let rho_upper = row_hi.min(col_hi);
    let rho_lower = row_lo.max(col_lo);
    Ok(SinrBounds {
        lower: 1.0 / rho_upper,
        upper: 1.0 / rho_lower,
    })
}

/// Midpoint of [`sinr_bounds`].
pub fn approx_common_sinr(
    group: &PartitionGroup,
    p_max: f64,
    params: PerronBoundParams,
) -> Result<f64> {
    Ok(sinr_bounds(group, p_max, params)?.midpoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::{optimal_common_sinr, perron_root};

    #[test]
    fn single_pair_bounds_collapse() {
        let link = DMatrix::from_element(1, 1, 3e4);
        let group = PartitionGroup::from_link_gains(vec![(0, 0)], &link).unwrap();
        let b = sinr_bounds(&group, 0.5, PerronBoundParams::default()).unwrap();
        let exact = optimal_common_sinr(&group, 0.5).unwrap();
        assert!((b.lower / exact - 1.0).abs() < 1e-12);
        assert!((b.upper / exact - 1.0).abs() < 1e-12);
        let approx = approx_common_sinr(&group, 0.5, PerronBoundParams::new(2, 1)).unwrap();
        assert!((approx / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_midpoint_inside_bounds() {
        let link = DMatrix::from_row_slice(2, 2, &[80.0, 3.0, 3.0, 80.0]);
        let group = PartitionGroup::from_link_gains(vec![(0, 0), (1, 1)], &link).unwrap();
        let b = sinr_bounds(&group, 1.0, PerronBoundParams::default()).unwrap();
        let mid = approx_common_sinr(&group, 1.0, PerronBoundParams::default()).unwrap();
        assert!(b.lower <= mid && mid <= b.upper);
        let a = column_augmented(&group, 1.0, weakest_link(&group));
        let exact = 1.0 / perron_root(&a).unwrap();
        assert!(b.lower <= exact * (1.0 + 1e-12) && exact <= b.upper * (1.0 + 1e-12));
    }

    #[test]
    fn weakest_link_picks_smallest_direct_gain() {
        let link = DMatrix::from_row_slice(3, 3, &[5.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0]);
        let group =
            PartitionGroup::from_link_gains(vec![(0, 0), (1, 1), (2, 2)], &link).unwrap();
        assert_eq!(weakest_link(&group), 1);
    }

    #[test]
    fn zero_exponents_rejected() {
        let link = DMatrix::from_element(1, 1, 1.0);
        let group = PartitionGroup::from_link_gains(vec![(0, 0)], &link).unwrap();
        assert!(sinr_bounds(&group, 1.0, PerronBoundParams::new(0, 1)).is_err());
    }
}
