//! Max-min power coordination inside one partition.
//!
//! A partition holds `L` AN-UE pairs sharing the same resources. With
//! `g̃_ij` the gain from UE `i` to the serving AN of pair `j`, the group is
//! stored as the cross matrix `F[i][j] = g̃_ij / g̃_ii` (zero diagonal) and the
//! inverse-gain vector `v[i] = 1 / g̃_ii`, so pair `i` sees
//!
//! ```text
//! SINR_i = p_i / (v_i + Σ_j F_ij p_j)
//! ```
//!
//! The best common SINR under `0 ≤ p ≤ p_max` is
//! `1 / max_i ρ(F + v e_iᵀ / p_max)`.

mod bounds;
mod evaluate;
mod perron;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};
use crate::network::NetworkInstance;

pub use bounds::{approx_common_sinr, sinr_bounds, PerronBoundParams, SinrBounds};
pub use evaluate::evaluate_assignment;
pub use perron::perron_root;

/// Relative tolerance used when checking that powers equalize SINRs.
pub const EQUALIZATION_TOLERANCE: f64 = 1e-8;

/// The link system of one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionGroup {
    /// `(ue, serving_an)` in ascending UE order.
    pub pairs: Vec<(usize, usize)>,
    pub direct_gains: Vec<f64>,
    pub cross: DMatrix<f64>,
    pub inverse_gains: DVector<f64>,
}

impl PartitionGroup {
    /// Builds a group from `(ue, an)` pairs. Pairs are sorted by UE id.
    pub fn from_pairs(instance: &NetworkInstance, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut pairs = pairs.to_vec();
        pairs.sort_unstable();
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(CoordError::ConstraintViolation {
                    clause: "ue-single-serving-an",
                    detail: format!("UE {} listed twice in one partition", w[0].0),
                });
            }
        }
        let mut seen_an = vec![false; instance.an_count()];
        for &(ue, an) in &pairs {
            if ue >= instance.ue_count() || an >= instance.an_count() {
                return Err(CoordError::InvalidInput(format!(
                    "pair ({ue}, {an}) outside the instance"
                )));
            }
            if std::mem::replace(&mut seen_an[an], true) {
                return Err(CoordError::ConstraintViolation {
                    clause: "an-exclusive-per-partition",
                    detail: format!("AN {an} serves more than one UE in the same partition"),
                });
            }
        }
        let l = pairs.len();
        let link = DMatrix::from_fn(l, l, |i, j| instance.gain(pairs[i].0, pairs[j].1));
        Self::from_link_gains(pairs, &link)
    }

    /// Builds a group from an explicit `L×L` link-gain matrix `g̃`.
    pub fn from_link_gains(pairs: Vec<(usize, usize)>, link: &DMatrix<f64>) -> Result<Self> {
        let l = link.nrows();
        if link.ncols() != l || pairs.len() != l {
            return Err(CoordError::InvalidInput(
                "link gain matrix must be square and match the pair list".into(),
            ));
        }
        let direct_gains: Vec<f64> = (0..l).map(|i| link[(i, i)]).collect();
        if let Some(i) = direct_gains.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(CoordError::InvalidInput(format!(
                "direct gain of pair {i} must be positive"
            )));
        }
        if link.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(CoordError::InvalidInput("link gains must be non-negative".into()));
        }
        let cross =
            DMatrix::from_fn(l, l, |i, j| if i == j { 0.0 } else { link[(i, j)] / direct_gains[i] });
        let inverse_gains = DVector::from_iterator(l, direct_gains.iter().map(|g| 1.0 / g));
        Ok(PartitionGroup {
            pairs,
            direct_gains,
            cross,
            inverse_gains,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// SINR of every pair under `powers` (noise normalized to one).
    pub fn sinrs(&self, powers: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let interference: f64 = (0..self.len())
                    .filter(|&j| j != i)
                    .map(|j| self.cross[(i, j)] * powers[j])
                    .sum();
                powers[i] / (self.inverse_gains[i] + interference)
            })
            .collect()
    }

    /// Sub-system restricted to the given member indices.
    pub fn subgroup(&self, members: &[usize]) -> PartitionGroup {
        PartitionGroup {
            pairs: members.iter().map(|&i| self.pairs[i]).collect(),
            direct_gains: members.iter().map(|&i| self.direct_gains[i]).collect(),
            cross: self.cross.select_rows(members).select_columns(members),
            inverse_gains: self.inverse_gains.select_rows(members),
        }
    }

    /// Members split into blocks with no cross gain between them in either
    /// direction.
    pub fn interacting_blocks(&self) -> Vec<Vec<usize>> {
        let l = self.len();
        let mut block = vec![usize::MAX; l];
        let mut blocks = Vec::new();
        for start in 0..l {
            if block[start] != usize::MAX {
                continue;
            }
            let id = blocks.len();
            let mut members = vec![start];
            block[start] = id;
            let mut cursor = 0;
            while cursor < members.len() {
                let i = members[cursor];
                cursor += 1;
                for j in 0..l {
                    if block[j] == usize::MAX && (self.cross[(i, j)] > 0.0 || self.cross[(j, i)] > 0.0)
                    {
                        block[j] = id;
                        members.push(j);
                    }
                }
            }
            members.sort_unstable();
            blocks.push(members);
        }
        blocks
    }
}

/// Group for the UEs in `ue_subset`, each served by `pairing[ue]`.
pub fn build_partition_group(
    instance: &NetworkInstance,
    pairing: &[usize],
    ue_subset: &[usize],
) -> Result<PartitionGroup> {
    let pairs: Vec<(usize, usize)> = ue_subset
        .iter()
        .map(|&ue| {
            pairing.get(ue).map(|&an| (ue, an)).ok_or_else(|| {
                CoordError::InvalidInput(format!("UE {ue} has no serving AN in the pairing"))
            })
        })
        .collect::<Result<_>>()?;
    PartitionGroup::from_pairs(instance, &pairs)
}

/// `F + (1/p_max)·v·e_colᵀ`.
pub(crate) fn column_augmented(group: &PartitionGroup, p_max: f64, col: usize) -> DMatrix<f64> {
    let mut a = group.cross.clone();
    for i in 0..group.len() {
        a[(i, col)] += group.inverse_gains[i] / p_max;
    }
    a
}

fn check_p_max(p_max: f64) -> Result<()> {
    if p_max.is_finite() && p_max > 0.0 {
        Ok(())
    } else {
        Err(CoordError::InvalidInput(format!("p_max must be positive, got {p_max}")))
    }
}

/// Exact max-min SINR of a group under per-pair budget `p_max`.
///
/// Non-interacting blocks are solved separately and the smallest block value
/// returned.
pub fn optimal_common_sinr(group: &PartitionGroup, p_max: f64) -> Result<f64> {
    check_p_max(p_max)?;
    if group.is_empty() {
        return Err(CoordError::InvalidInput("empty partition group".into()));
    }
    let mut best = f64::INFINITY;
    for members in group.interacting_blocks() {
        let block;
        let g = if members.len() == group.len() {
            group
        } else {
            block = group.subgroup(&members);
            &block
        };
        let mut worst_root = 0.0f64;
        for col in 0..g.len() {
            worst_root = worst_root.max(perron_root(&column_augmented(g, p_max, col))?);
        }
        best = best.min(1.0 / worst_root);
    }
    Ok(best)
}

/// Per-pair transmit powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerVector {
    pub powers: Vec<f64>,
}

/// Minimal powers giving every pair exactly `target` SINR: the solution of
/// `(I/target − F) p = v`. Fails when no non-negative solution exists.
pub fn powers_for_target(group: &PartitionGroup, target: f64) -> Result<Vec<f64>> {
    if !(target.is_finite() && target > 0.0) {
        return Err(CoordError::InvalidInput(format!(
            "SINR target must be positive, got {target}"
        )));
    }
    let l = group.len();
    let system = DMatrix::identity(l, l) / target - &group.cross;
    let p = system
        .lu()
        .solve(&group.inverse_gains)
        .ok_or_else(|| CoordError::Infeasible(format!("SINR target {target} is not reachable")))?;
    if p.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(CoordError::Infeasible(format!(
            "SINR target {target} needs unbounded power"
        )));
    }
    Ok(p.iter().copied().collect())
}

/// Powers attaining the optimal common SINR.
///
/// At the optimum the powers of the binding block form the Perron eigenvector
/// of `F + v e_wᵀ / p_max`, where `w` is the pair at full power. A first guess
/// `(I/γ − F)⁻¹ v` is polished by Noda iteration on that matrix, since the
/// solve alone amplifies the last-digit error of `γ`. Blocks with slack get
/// the minimal powers for `γ`. The equalized SINRs are re-checked by
/// substitution before returning.
pub fn optimal_power_vector(group: &PartitionGroup, p_max: f64) -> Result<PowerVector> {
    let gamma = optimal_common_sinr(group, p_max)?;
    let recovery = |e: CoordError| CoordError::NoConvergence(format!("power recovery failed: {e}"));
    let mut powers = vec![0.0; group.len()];
    let blocks = group.interacting_blocks();
    let single = blocks.len() == 1;
    for members in blocks {
        let block = group.subgroup(&members);
        let mut p = powers_for_target(&block, gamma).map_err(recovery)?;
        if single || optimal_common_sinr(&block, p_max)? <= gamma * (1.0 + 1e-9) {
            p = binding_block_powers(&block, p_max, &p)?;
        }
        for (&i, x) in members.iter().zip(p) {
            powers[i] = x.min(p_max);
        }
    }
    for (i, s) in group.sinrs(&powers).into_iter().enumerate() {
        if ((s - gamma) / gamma).abs() > EQUALIZATION_TOLERANCE {
            return Err(CoordError::NoConvergence(format!(
                "pair {i} reaches SINR {s} instead of {gamma}"
            )));
        }
    }
    Ok(PowerVector { powers })
}

/// Powers of a block whose optimum uses the full budget, starting from the
/// guess `p`. The full-power pair is the column with the largest Perron
/// root. Falls back to the rescaled guess if refinement breaks down.
fn binding_block_powers(block: &PartitionGroup, p_max: f64, p: &[f64]) -> Result<Vec<f64>> {
    let mut w = 0;
    let mut worst = f64::NEG_INFINITY;
    for col in 0..block.len() {
        let r = perron_root(&column_augmented(block, p_max, col))?;
        if r > worst {
            (w, worst) = (col, r);
        }
    }
    let peak = p.iter().copied().fold(0.0, f64::max);
    let rescaled: Vec<f64> = p.iter().map(|x| x * p_max / peak).collect();
    let start = DVector::from_column_slice(&rescaled);
    let Some((root, x)) = perron::perron_vector(&column_augmented(block, p_max, w), start) else {
        return Ok(rescaled);
    };
    let x: Vec<f64> = x.iter().map(|v| v * p_max / x[w]).collect();
    // Entries many orders below the peak carry the eigensolver's absolute
    // error, not a relative one; each pair's own SINR equation pins it down
    // given the others.
    let gamma = 1.0 / root;
    let sinr_sums: Vec<f64> = (0..x.len())
        .map(|i| {
            let interference: f64 =
                (0..x.len()).filter(|&j| j != i).map(|j| block.cross[(i, j)] * x[j]).sum();
            gamma * (block.inverse_gains[i] + interference)
        })
        .collect();
    Ok((0..x.len()).map(|i| if i == w { p_max } else { sinr_sums[i] }).collect())
}

/// Rate in bps/Hz of a UE at SINR `gamma` on one of `n_partitions` equal
/// slices.
pub fn common_rate(gamma: f64, n_partitions: usize) -> f64 {
    (1.0 + gamma).log2() / n_partitions as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn symmetric_pair(g: f64, c: f64) -> PartitionGroup {
        let link = DMatrix::from_row_slice(2, 2, &[g, c, c, g]);
        PartitionGroup::from_link_gains(vec![(0, 0), (1, 1)], &link).unwrap()
    }

    #[test]
    fn single_pair_group() {
        let inst = NetworkInstance::from_gains(vec![vec![2e5]], 1.0).unwrap();
        let group = build_partition_group(&inst, &[0], &[0]).unwrap();
        assert_eq!(group.cross, DMatrix::zeros(1, 1));
        assert_eq!(group.inverse_gains[0], 1.0 / 2e5);
        let gamma = optimal_common_sinr(&group, 1.0).unwrap();
        assert!((gamma / 2e5 - 1.0).abs() < 1e-12);
        let p = optimal_power_vector(&group, 1.0).unwrap();
        assert_eq!(p.powers, vec![1.0]);
    }

    #[test]
    fn symmetric_two_pair_construction() {
        let (g, c) = (100.0, 7.0);
        let inst = NetworkInstance::from_gains(vec![vec![g, c], vec![c, g]], 1.0).unwrap();
        let group = build_partition_group(&inst, &[0, 1], &[1, 0]).unwrap();
        assert_eq!(group.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(group.cross, DMatrix::from_row_slice(2, 2, &[0.0, c / g, c / g, 0.0]));
        assert_eq!(group.inverse_gains.as_slice(), &[1.0 / g, 1.0 / g]);
    }

    #[test]
    fn shared_an_rejected() {
        let inst = NetworkInstance::from_gains(vec![vec![1.0, 2.0], vec![3.0, 4.0]], 1.0).unwrap();
        let err = build_partition_group(&inst, &[0, 0], &[0, 1]).unwrap_err();
        assert!(matches!(
            err,
            CoordError::ConstraintViolation { clause: "an-exclusive-per-partition", .. }
        ));
    }

    #[test]
    fn symmetric_two_pair_quadratic() {
        // 1/γ solves λ² − (1/(g p))λ − (c/g)(c/g + 1/(g p)) = 0.
        let (g, c, p_max) = (50.0, 4.0, 2.0);
        let group = symmetric_pair(g, c);
        let b = 1.0 / (g * p_max);
        let q = (c / g) * (c / g + b);
        let lambda = (b + (b * b + 4.0 * q).sqrt()) / 2.0;
        let gamma = optimal_common_sinr(&group, p_max).unwrap();
        assert!((gamma * lambda - 1.0).abs() < 1e-10);
        let p = optimal_power_vector(&group, p_max).unwrap();
        assert!((p.powers[0] - p_max).abs() < 1e-12 && (p.powers[1] - p_max).abs() < 1e-9);
    }

    #[test]
    fn decoupled_blocks_take_minimum() {
        let link = DMatrix::from_row_slice(3, 3, &[10.0, 0.0, 0.0, 0.0, 20.0, 0.5, 0.0, 2.0, 30.0]);
        let group = PartitionGroup::from_link_gains(vec![(0, 0), (1, 1), (2, 2)], &link).unwrap();
        assert_eq!(group.interacting_blocks(), vec![vec![0], vec![1, 2]]);
        let gamma = optimal_common_sinr(&group, 1.0).unwrap();
        assert!((gamma - 10.0).abs() < 1e-9);
        let p = optimal_power_vector(&group, 1.0).unwrap();
        let s = group.sinrs(&p.powers);
        assert!(s.iter().all(|x| (x / gamma - 1.0).abs() < 1e-8));
        assert!((p.powers[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(common_rate(3.0, 1), 2.0);
        assert_eq!(common_rate(3.0, 2), 1.0);
        assert_eq!(common_rate(0.0, 5), 0.0);
    }

    #[test]
    fn target_beyond_reach_is_infeasible() {
        let group = symmetric_pair(10.0, 10.0);
        // ρ(F) = 1, so any target ≥ 1 is unreachable.
        assert!(powers_for_target(&group, 2.0).is_err());
        assert!(powers_for_target(&group, 0.5).is_ok());
    }
}
