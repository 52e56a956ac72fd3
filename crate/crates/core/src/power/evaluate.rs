use std::time::Instant;

use super::{common_rate, optimal_common_sinr, powers_for_target, PartitionGroup};
use crate::error::Result;
use crate::exact::{Assignment, CoordinationSolution, SolverStats};
use crate::network::NetworkInstance;

/// Optimal powers and common SINR of a complete assignment.
///
/// Partitions are orthogonal, so the network common SINR is the smallest
/// partition optimum `θ = min_n γ*(n)`. Every partition is then driven with
/// the minimal powers that give each of its UEs exactly `θ`; the bottleneck
/// partition ends at full power.
pub fn evaluate_assignment(
    instance: &NetworkInstance,
    assignment: &Assignment,
) -> Result<CoordinationSolution> {
    let started = Instant::now();
    assignment.validate(instance)?;
    let p_max = instance.p_max;
    let groups = assignment
        .partition_pairs()
        .into_iter()
        .filter(|pairs| !pairs.is_empty())
        .map(|pairs| PartitionGroup::from_pairs(instance, &pairs))
        .collect::<Result<Vec<_>>>()?;

    let mut theta = f64::INFINITY;
    for group in &groups {
        theta = theta.min(optimal_common_sinr(group, p_max)?);
    }

    let k = assignment.ue_count();
    let mut powers = vec![0.0; k];
    let mut per_ue_sinr = vec![0.0; k];
    for group in &groups {
        let p: Vec<f64> = powers_for_target(group, theta)?
            .into_iter()
            .map(|x| x.min(p_max))
            .collect();
        for ((&(ue, _), &pw), s) in group.pairs.iter().zip(&p).zip(group.sinrs(&p)) {
            powers[ue] = pw;
            per_ue_sinr[ue] = s;
        }
    }

    Ok(CoordinationSolution {
        assignment: assignment.clone(),
        powers,
        common_sinr: theta,
        common_rate: common_rate(theta, assignment.n_partitions),
        per_ue_sinr,
        stats: SolverStats {
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            ..SolverStats::default()
        },
    })
}
