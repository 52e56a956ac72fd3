//! Low-complexity pairing/partitioning heuristics and the two baselines.
//!
//! - [`power_aware_partition`] grows partitions greedily using the exact or
//!   bound-approximated common SINR of each candidate partition, followed by
//!   optional pairwise swap refinement.
//! - [`power_unaware_partition`] ignores power dynamics and greedily
//!   minimizes the pairwise interference weights of [`InterferenceWeights`].
//! - [`baseline_full_spatial_reuse`] and [`baseline_full_orthogonalization`]
//!   are the `N = 1` and `N = K` extremes.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};
use crate::exact::{Assignment, CoordinationSolution};
use crate::network::NetworkInstance;
use crate::power::{
    approx_common_sinr, evaluate_assignment, optimal_common_sinr, PartitionGroup,
    PerronBoundParams,
};

/// Smallest same-AN weight; raised when the gains themselves are larger.
pub const SAME_AN_PENALTY: f64 = 1e5;
/// Default number of dominant interferers kept per victim.
pub const DEFAULT_DOMINANT_COUNT: usize = 3;

/// Serving AN per UE in `ue_subset`, best gain first.
///
/// UEs are served in descending order of their best gain. With `exclusive`
/// each AN serves at most one UE of the subset and a UE whose best AN is
/// taken falls back to its best free one. Returned sorted by UE.
pub fn pair_best_gain(
    instance: &NetworkInstance,
    ue_subset: &[usize],
    exclusive: bool,
) -> Result<Vec<(usize, usize)>> {
    if exclusive && ue_subset.len() > instance.an_count() {
        return Err(CoordError::InvalidInput(format!(
            "{} UEs cannot hold distinct ANs among {}",
            ue_subset.len(),
            instance.an_count()
        )));
    }
    let mut order = ue_subset.to_vec();
    order.sort_by(|&a, &b| {
        instance.best_an(b).1.total_cmp(&instance.best_an(a).1).then(a.cmp(&b))
    });
    let mut taken = vec![false; instance.an_count()];
    let mut out = Vec::with_capacity(order.len());
    for ue in order {
        let an = if exclusive {
            best_available(instance, ue, &taken).expect("enough ANs checked above")
        } else {
            instance.best_an(ue).0
        };
        taken[an] = true;
        out.push((ue, an));
    }
    out.sort_unstable();
    Ok(out)
}

/// Serving AN of every UE by maximum gain, sharing allowed. Under a pure
/// path-loss model this is the closest AN.
pub fn closest_an_pairing(instance: &NetworkInstance) -> Vec<usize> {
    (0..instance.ue_count()).map(|ue| instance.best_an(ue).0).collect()
}

fn best_available(instance: &NetworkInstance, ue: usize, taken: &[bool]) -> Option<usize> {
    (0..instance.an_count())
        .filter(|&an| !taken[an])
        .fold(None, |best: Option<usize>, an| match best {
            Some(b) if instance.gain(ue, b) >= instance.gain(ue, an) => Some(b),
            _ => Some(an),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// Common SINR from the Perron root.
    #[default]
    Exact,
    /// Midpoint of the Perron-root bounds.
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub rate_mode: RateMode,
    pub enable_refinement: bool,
    pub bound_params: PerronBoundParams,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig {
            rate_mode: RateMode::Exact,
            enable_refinement: true,
            bound_params: PerronBoundParams::default(),
        }
    }
}

impl GreedyConfig {
    pub fn approx() -> Self {
        GreedyConfig {
            rate_mode: RateMode::Approx,
            ..GreedyConfig::default()
        }
    }
}

/// Partition state of the power-aware heuristic.
struct Partitioner<'a> {
    instance: &'a NetworkInstance,
    config: GreedyConfig,
    parts: Vec<Vec<(usize, usize)>>,
}

impl Partitioner<'_> {
    /// Estimated common SINR of a pair set; the partition rate is monotone in
    /// it, so comparisons are done on SINR.
    fn sinr(&self, pairs: &[(usize, usize)]) -> Result<f64> {
        if pairs.is_empty() {
            return Ok(f64::INFINITY);
        }
        let group = PartitionGroup::from_pairs(self.instance, pairs)?;
        match self.config.rate_mode {
            RateMode::Exact => optimal_common_sinr(&group, self.instance.p_max),
            RateMode::Approx => {
                approx_common_sinr(&group, self.instance.p_max, self.config.bound_params)
            }
        }
    }

    /// `pairs` plus `ue` on its best AN not yet used in `pairs`, if any.
    fn extend(&self, pairs: &[(usize, usize)], ue: usize) -> Option<Vec<(usize, usize)>> {
        let mut taken = vec![false; self.instance.an_count()];
        for &(_, an) in pairs {
            taken[an] = true;
        }
        let an = best_available(self.instance, ue, &taken)?;
        let mut out = pairs.to_vec();
        out.push((ue, an));
        Some(out)
    }

    /// SINR after adding `ue`; `-∞` when no AN is left for it.
    fn sinr_with(&self, part: usize, ue: usize) -> Result<(f64, Option<Vec<(usize, usize)>>)> {
        match self.extend(&self.parts[part], ue) {
            Some(pairs) => Ok((self.sinr(&pairs)?, Some(pairs))),
            None => Ok((f64::NEG_INFINITY, None)),
        }
    }

    fn fill(&mut self, mut pool: Vec<usize>) -> Result<()> {
        let n = self.parts.len();
        while !pool.is_empty() {
            let current: Vec<f64> =
                self.parts.iter().map(|p| self.sinr(p)).collect::<Result<_>>()?;
            let mut ranked: Vec<usize> = (0..n).collect();
            ranked.sort_by(|&a, &b| current[b].total_cmp(&current[a]).then(a.cmp(&b)));
            let mut placed = false;
            for part in ranked {
                let mut best: Option<(f64, usize, Vec<(usize, usize)>)> = None;
                for (idx, &ue) in pool.iter().enumerate() {
                    let (s, pairs) = self.sinr_with(part, ue)?;
                    if let Some(pairs) = pairs {
                        if best.as_ref().is_none_or(|(bs, _, _)| s > *bs) {
                            best = Some((s, idx, pairs));
                        }
                    }
                }
                if let Some((_, idx, pairs)) = best {
                    pool.remove(idx);
                    self.parts[part] = pairs;
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(CoordError::Infeasible(
                    "every partition has exhausted its ANs".into(),
                ));
            }
        }
        Ok(())
    }

    /// Partition `part` with `out` removed and `incoming` re-paired on the
    /// best AN left free.
    fn swapped(&self, part: usize, out: usize, incoming: usize) -> Option<Vec<(usize, usize)>> {
        let rest: Vec<(usize, usize)> =
            self.parts[part].iter().copied().filter(|&(ue, _)| ue != out).collect();
        self.extend(&rest, incoming)
    }

    /// Pairwise inter-partition swaps, repeated until a full sweep changes
    /// nothing. A swap is taken when it raises the weaker of the two
    /// partitions, or keeps it and raises their summed rate. Either way the
    /// sorted partition SINRs improve lexicographically, so the network
    /// common rate never drops and the loop terminates.
    fn refine(&mut self) -> Result<()> {
        let n = self.parts.len();
        loop {
            let mut changed = false;
            for a in 0..n {
                for b in (a + 1)..n {
                    let mut i = 0;
                    while i < self.parts[a].len() {
                        let mut j = 0;
                        while j < self.parts[b].len() {
                            if self.try_swap(a, b, i, j)? {
                                changed = true;
                            }
                            j += 1;
                        }
                        i += 1;
                    }
                }
            }
            if !changed {
                return Ok(());
            }
        }
    }

    fn try_swap(&mut self, a: usize, b: usize, i: usize, j: usize) -> Result<bool> {
        let (ka, kb) = (self.parts[a][i].0, self.parts[b][j].0);
        let (Some(new_a), Some(new_b)) = (self.swapped(a, ka, kb), self.swapped(b, kb, ka)) else {
            return Ok(false);
        };
        let n = self.parts.len();
        let rate = |s: f64| crate::power::common_rate(s, n);
        let (old_a, old_b) = (self.sinr(&self.parts[a])?, self.sinr(&self.parts[b])?);
        let (sa, sb) = (self.sinr(&new_a)?, self.sinr(&new_b)?);
        let before = rate(old_a) + rate(old_b);
        let after = rate(sa) + rate(sb);
        let gain = after - before;
        let (old_min, new_min) = (old_a.min(old_b), sa.min(sb));
        let raises_floor = new_min > old_min * (1.0 + 1e-12);
        let raises_sum = new_min >= old_min && gain > 1e-12 * before.abs().max(1.0);
        if raises_floor || raises_sum {
            let mut new_a = new_a;
            let mut new_b = new_b;
            new_a.sort_unstable();
            new_b.sort_unstable();
            self.parts[a] = new_a;
            self.parts[b] = new_b;
            return Ok(true);
        }
        Ok(false)
    }

    fn into_assignment(self) -> Assignment {
        let k = self.instance.ue_count();
        let mut serving = vec![0; k];
        let mut label = vec![0; k];
        for (p, pairs) in self.parts.iter().enumerate() {
            for &(ue, an) in pairs {
                serving[ue] = an;
                label[ue] = p;
            }
        }
        Assignment::new(serving, label, self.parts.len())
    }
}

/// Power-aware greedy partitioning with Rule-1 pairing inside partitions.
///
/// 1. Seeding: the `N` UEs with the strongest best links open one partition
///    each, on their best AN.
/// 2. Filling: the partition with the highest current rate takes the pooled
///    UE that leaves it with the highest rate, that UE using its best AN
///    still free in the partition. If no pooled UE fits there, the next
///    partition by rate is tried.
/// 3. Optional swap refinement between partitions.
pub fn power_aware_partition(
    instance: &NetworkInstance,
    n_partitions: usize,
    config: GreedyConfig,
) -> Result<Assignment> {
    instance.validate()?;
    let k = instance.ue_count();
    if n_partitions == 0 || n_partitions > k {
        return Err(CoordError::InvalidInput(format!(
            "N must lie in 1..={k}, got {n_partitions}"
        )));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        instance.best_an(b).1.total_cmp(&instance.best_an(a).1).then(a.cmp(&b))
    });
    let parts = order[..n_partitions]
        .iter()
        .map(|&ue| vec![(ue, instance.best_an(ue).0)])
        .collect();
    let mut state = Partitioner {
        instance,
        config,
        parts,
    };
    let mut pool = order[n_partitions..].to_vec();
    pool.sort_unstable();
    state.fill(pool)?;
    if config.enable_refinement {
        state.refine()?;
    }
    Ok(state.into_assignment())
}

/// Estimated pairwise interference between UEs for power-unaware
/// partitioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceWeights {
    /// `e[i][j]`: interference UE `i` is expected to cause UE `j` when both
    /// share a partition. Symmetric, zero diagonal.
    pub e: Vec<Vec<f64>>,
    pub dominant_count: usize,
    pub same_an_penalty: f64,
}

impl InterferenceWeights {
    pub fn ue_count(&self) -> usize {
        self.e.len()
    }
}

/// Builds the weight matrix for a fixed pairing.
///
/// For victim `j`, the dominant interferers are the `dominant_count` UEs `i`
/// not sharing `j`'s AN with the largest `g̃_j,m(i)`, the gain from `j` to the
/// AN serving `i`. Those get `e_ij = g̃_j,m(i)`, same-AN pairs get the penalty,
/// all others zero; the result is symmetrized by elementwise max.
pub fn interference_weight_matrix(
    instance: &NetworkInstance,
    pairing: &[usize],
    dominant_count: usize,
) -> Result<InterferenceWeights> {
    let k = instance.ue_count();
    if pairing.len() != k || pairing.iter().any(|&an| an >= instance.an_count()) {
        return Err(CoordError::InvalidInput("pairing must map every UE to a known AN".into()));
    }
    if dominant_count == 0 {
        return Err(CoordError::InvalidInput("dominant_count must be at least 1".into()));
    }
    let mut e = vec![vec![0.0; k]; k];
    for j in 0..k {
        let mut rivals: Vec<usize> =
            (0..k).filter(|&i| i != j && pairing[i] != pairing[j]).collect();
        rivals.sort_by(|&a, &b| {
            instance
                .gain(j, pairing[b])
                .total_cmp(&instance.gain(j, pairing[a]))
                .then(a.cmp(&b))
        });
        for &i in rivals.iter().take(dominant_count) {
            e[i][j] = instance.gain(j, pairing[i]);
        }
    }
    // The penalty stands in for infinity, so it must outweigh every
    // interference weight combined; noise-normalized gains can exceed 1e5.
    let total: f64 = e.iter().flatten().sum();
    let penalty = SAME_AN_PENALTY.max(2.0 * total);
    for j in 0..k {
        for i in (0..k).filter(|&i| i != j && pairing[i] == pairing[j]) {
            e[i][j] = penalty;
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let w = e[i][j].max(e[j][i]);
            e[i][j] = w;
            e[j][i] = w;
        }
    }
    Ok(InterferenceWeights {
        e,
        dominant_count,
        same_an_penalty: penalty,
    })
}

/// Greedy interference-minimizing partitioning; returns a partition index
/// per UE.
///
/// Each of the `K` cycles takes the unassigned UE with the largest total
/// weight toward the other unassigned UEs and puts it where the intra-
/// partition weight sum grows least; ties go to the emptier partition, then
/// the lower index.
pub fn power_unaware_partition(weights: &InterferenceWeights, n_partitions: usize) -> Result<Vec<usize>> {
    let k = weights.ue_count();
    if n_partitions == 0 || n_partitions > k {
        return Err(CoordError::InvalidInput(format!(
            "N must lie in 1..={k}, got {n_partitions}"
        )));
    }
    let e = &weights.e;
    let mut label = vec![usize::MAX; k];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_partitions];
    for _ in 0..k {
        let pending = |j: usize| label[j] == usize::MAX;
        let ue = (0..k)
            .filter(|&j| pending(j))
            .map(|j| {
                let load: f64 = (0..k).filter(|&i| i != j && pending(i)).map(|i| e[i][j]).sum();
                (j, load)
            })
            .fold(None, |best: Option<(usize, f64)>, (j, w)| match best {
                Some((_, bw)) if bw >= w => best,
                _ => Some((j, w)),
            })
            .map(|(j, _)| j)
            .expect("a UE is pending in every cycle");
        let part = (0..n_partitions)
            .map(|p| {
                let cost: f64 = members[p].iter().map(|&i| e[i][ue] + e[ue][i]).sum();
                (p, cost)
            })
            .min_by(|(pa, ca), (pb, cb)| {
                ca.total_cmp(cb)
                    .then(members[*pa].len().cmp(&members[*pb].len()))
                    .then(pa.cmp(pb))
            })
            .map(|(p, _)| p)
            .expect("N ≥ 1");
        label[ue] = part;
        members[part].push(ue);
    }
    Ok(label)
}

/// Sum of `e_ij` over unordered same-partition UE pairs.
pub fn intra_partition_weight(weights: &InterferenceWeights, partition_of: &[usize]) -> f64 {
    let k = weights.ue_count();
    let mut total = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            if partition_of[i] == partition_of[j] {
                total += weights.e[i][j];
            }
        }
    }
    total
}

/// Uniformly random partition labels that keep UEs of one AN apart whenever
/// a free partition remains for them.
pub fn random_partition<R: Rng + ?Sized>(
    pairing: &[usize],
    n_partitions: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if n_partitions == 0 {
        return Err(CoordError::InvalidInput("N must be at least 1".into()));
    }
    let k = pairing.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(rng);
    let an_count = pairing.iter().copied().max().map_or(0, |m| m + 1);
    let mut used = vec![vec![false; n_partitions]; an_count];
    let mut label = vec![0; k];
    for ue in order {
        let free: Vec<usize> = (0..n_partitions).filter(|&p| !used[pairing[ue]][p]).collect();
        let part = if free.is_empty() {
            rng.random_range(0..n_partitions)
        } else {
            free[rng.random_range(0..free.len())]
        };
        used[pairing[ue]][part] = true;
        label[ue] = part;
    }
    Ok(label)
}

/// `N = 1`, every UE on its strongest AN, optimal powers.
pub fn baseline_full_spatial_reuse(instance: &NetworkInstance) -> Result<CoordinationSolution> {
    instance.validate()?;
    let pairing = closest_an_pairing(instance);
    let mut owner = vec![None; instance.an_count()];
    for (ue, &an) in pairing.iter().enumerate() {
        if let Some(other) = owner[an] {
            return Err(CoordError::Infeasible(format!(
                "UEs {other} and {ue} share closest AN {an}; N = 1 cannot serve both"
            )));
        }
        owner[an] = Some(ue);
    }
    evaluate_assignment(instance, &Assignment::new(pairing, vec![0; instance.ue_count()], 1))
}

/// `N = K`, every UE alone on its strongest AN at full power, so each sees
/// its interference-free SINR; the common SINR is the smallest of them.
pub fn baseline_full_orthogonalization(instance: &NetworkInstance) -> Result<CoordinationSolution> {
    instance.validate()?;
    let mut sol = evaluate_assignment(instance, &Assignment::orthogonal(closest_an_pairing(instance)))?;
    sol.powers = vec![instance.p_max; instance.ue_count()];
    sol.per_ue_sinr = (0..instance.ue_count()).map(|ue| instance.interference_free_sinr(ue)).collect();
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inst(gains: Vec<Vec<f64>>) -> NetworkInstance {
        NetworkInstance::from_gains(gains, 1.0).unwrap()
    }

    #[test]
    fn rule_one_contention() {
        let i = inst(vec![vec![10.0, 4.0], vec![20.0, 3.0]]);
        assert_eq!(pair_best_gain(&i, &[0, 1], true).unwrap(), vec![(0, 1), (1, 0)]);
        assert_eq!(pair_best_gain(&i, &[0, 1], false).unwrap(), vec![(0, 0), (1, 0)]);
        assert_eq!(pair_best_gain(&i, &[0], true).unwrap(), vec![(0, 0)]);
        let one_an = inst(vec![vec![1.0], vec![2.0]]);
        assert!(pair_best_gain(&one_an, &[0, 1], true).is_err());
    }

    #[test]
    fn k_equals_n_is_full_orthogonalization() {
        let i = inst(vec![vec![50.0, 2.0, 1.0], vec![3.0, 40.0, 2.0], vec![1.0, 5.0, 30.0]]);
        let a = power_aware_partition(&i, 3, GreedyConfig::default()).unwrap();
        let sol = evaluate_assignment(&i, &a).unwrap();
        let orth = baseline_full_orthogonalization(&i).unwrap();
        assert!((sol.common_rate - orth.common_rate).abs() < 1e-12);
    }

    #[test]
    fn shared_only_an_forces_separation() {
        let i = inst(vec![vec![30.0], vec![20.0]]);
        for config in [GreedyConfig::default(), GreedyConfig::approx()] {
            let a = power_aware_partition(&i, 2, config).unwrap();
            assert_ne!(a.partition_of[0], a.partition_of[1]);
        }
        assert!(power_aware_partition(&i, 1, GreedyConfig::default()).is_err());
        assert!(power_aware_partition(&i, 3, GreedyConfig::default()).is_err());
    }

    #[test]
    fn weight_rules() {
        // UEs 0 and 1 on AN 0, UE 2 on AN 1, UE 3 on AN 2.
        let i = inst(vec![
            vec![50.0, 4.0, 1.0],
            vec![40.0, 2.0, 3.0],
            vec![5.0, 60.0, 0.5],
            vec![0.2, 0.3, 70.0],
        ]);
        let pairing = vec![0, 0, 1, 2];
        let w = interference_weight_matrix(&i, &pairing, 1).unwrap();
        assert_eq!(w.e[0][1], SAME_AN_PENALTY);
        // Victim 3's single dominant interferer is UE 2 (AN 1, gain 0.3).
        // Victim 2's is UE 0 or 1 (AN 0, gain 5, tie to lower index 0).
        assert_eq!(w.e[0][2], 5.0);
        assert_eq!(w.e[2][3], 0.3);
        // Victim 1's dominant interferer is UE 3 (AN 2, gain 3).
        assert_eq!(w.e[1][3], 3.0);
        assert_eq!(w.e[0][3], 0.0);
        for a in 0..4 {
            assert_eq!(w.e[a][a], 0.0);
            for b in 0..4 {
                assert_eq!(w.e[a][b], w.e[b][a]);
            }
        }
    }

    fn weights(e: Vec<Vec<f64>>) -> InterferenceWeights {
        InterferenceWeights {
            e,
            dominant_count: 3,
            same_an_penalty: SAME_AN_PENALTY,
        }
    }

    #[test]
    fn zero_weights_balance() {
        let labels = power_unaware_partition(&weights(vec![vec![0.0; 4]; 4]), 2).unwrap();
        let ones = labels.iter().filter(|&&p| p == 1).count();
        assert_eq!(ones, 2);
    }

    #[test]
    fn heavy_pairs_split() {
        let h = 100.0;
        let e = vec![
            vec![0.0, h, 1.0, 1.0],
            vec![h, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, h],
            vec![1.0, 1.0, h, 0.0],
        ];
        let l = power_unaware_partition(&weights(e), 2).unwrap();
        assert_ne!(l[0], l[1]);
        assert_ne!(l[2], l[3]);
    }

    #[test]
    fn three_same_an_ues_in_two_partitions() {
        let i = inst(vec![vec![10.0, 1.0], vec![9.0, 1.0], vec![8.0, 1.0]]);
        let w = interference_weight_matrix(&i, &[0, 0, 0], 3).unwrap();
        let l = power_unaware_partition(&w, 2).unwrap();
        assert_eq!(intra_partition_weight(&w, &l), SAME_AN_PENALTY);
    }

    #[test]
    fn random_partition_separates_same_an() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let l = random_partition(&[0, 0, 1, 1, 2], 2, &mut rng).unwrap();
            assert_ne!(l[0], l[1]);
            assert_ne!(l[2], l[3]);
        }
    }

    #[test]
    fn baselines() {
        let single = inst(vec![vec![4e5]]);
        let reuse = baseline_full_spatial_reuse(&single).unwrap();
        let orth = baseline_full_orthogonalization(&single).unwrap();
        assert!((reuse.common_sinr - 4e5).abs() < 1e-6);
        assert_eq!(reuse.common_rate, orth.common_rate);

        let two = inst(vec![vec![90.0, 3.0], vec![4.0, 30.0]]);
        let orth = baseline_full_orthogonalization(&two).unwrap();
        assert!((orth.common_rate - 0.5 * 31f64.log2()).abs() < 1e-12);
        assert!((orth.per_ue_sinr[0] - 90.0).abs() < 1e-9);

        let clash = inst(vec![vec![9.0, 1.0], vec![8.0, 1.0]]);
        assert!(matches!(baseline_full_spatial_reuse(&clash), Err(CoordError::Infeasible(_))));
    }

    #[test]
    fn symmetric_full_reuse_matches_quadratic() {
        let (g, c) = (200.0f64, 15.0f64);
        let i = inst(vec![vec![g, c], vec![c, g]]);
        let sol = baseline_full_spatial_reuse(&i).unwrap();
        let b = 1.0 / g;
        let q = (c / g) * (c / g + b);
        let lambda = 0.5 * (b + (b * b + 4.0 * q).sqrt());
        assert!((sol.common_sinr * lambda - 1.0).abs() < 1e-10);
    }
}
