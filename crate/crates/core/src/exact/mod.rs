//! Exact joint pairing/partitioning/power optimization at desk scale.
//!
//! For a fixed assignment the continuous part of the problem is the
//! per-partition max-min power problem, whose value comes in closed form from
//! the Perron root. A common-SINR target `θ₀` is therefore feasible iff some
//! assignment has every partition's optimal SINR at or above `θ₀`; the search
//! in [`search`] decides that, and [`solve_joint_ppp`] bisects on `θ₀`.
//!
//! [`ilp`] emits the equivalent big-M integer program for external solvers.

pub mod ilp;
mod search;

use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};
use crate::network::NetworkInstance;

pub use ilp::{export_ilp, IlpModel, Row, RowSense, VarKind, Variable, Violation};
pub use search::{
    assignment_feasible, bisect, bisect_common_sinr, default_tolerance, sinr_upper_bound, solve_fixed_pairing, solve_joint_ppp,
    BisectionOutcome, FIXED_PAIRING_CAP, FREE_PAIRING_CAP,
};

/// Joint pairing and partitioning decision for every UE.
///
/// Sparse form of the binary tensor `ρ[k][m][n]`, which is one exactly when
/// `serving_an[k] == m` and `partition_of[k] == n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub serving_an: Vec<usize>,
    pub partition_of: Vec<usize>,
    pub n_partitions: usize,
}

impl Assignment {
    pub fn new(serving_an: Vec<usize>, partition_of: Vec<usize>, n_partitions: usize) -> Self {
        Assignment {
            serving_an,
            partition_of,
            n_partitions,
        }
    }

    /// Every UE alone in its own partition.
    pub fn orthogonal(serving_an: Vec<usize>) -> Self {
        let k = serving_an.len();
        Assignment::new(serving_an, (0..k).collect(), k)
    }

    pub fn ue_count(&self) -> usize {
        self.serving_an.len()
    }

    /// Checks the pairing/partitioning constraints against `instance`.
    pub fn validate(&self, instance: &NetworkInstance) -> Result<()> {
        let k = instance.ue_count();
        let m = instance.an_count();
        if self.n_partitions == 0 {
            return Err(CoordError::ConstraintViolation {
                clause: "n-partitions-positive",
                detail: "an assignment needs at least one partition".into(),
            });
        }
        if self.serving_an.len() != k {
            return Err(CoordError::ConstraintViolation {
                clause: "ue-single-serving-an",
                detail: format!("{} serving ANs listed for {k} UEs", self.serving_an.len()),
            });
        }
        if self.partition_of.len() != k {
            return Err(CoordError::ConstraintViolation {
                clause: "ue-single-partition",
                detail: format!("{} partition labels listed for {k} UEs", self.partition_of.len()),
            });
        }
        if let Some(ue) = self.serving_an.iter().position(|&an| an >= m) {
            return Err(CoordError::ConstraintViolation {
                clause: "ue-single-serving-an",
                detail: format!("UE {ue} served by unknown AN {}", self.serving_an[ue]),
            });
        }
        if let Some(ue) = self.partition_of.iter().position(|&p| p >= self.n_partitions) {
            return Err(CoordError::ConstraintViolation {
                clause: "ue-single-partition",
                detail: format!(
                    "UE {ue} in partition {} but N = {}",
                    self.partition_of[ue], self.n_partitions
                ),
            });
        }
        let mut used = vec![vec![usize::MAX; m]; self.n_partitions];
        for ue in 0..k {
            let (an, part) = (self.serving_an[ue], self.partition_of[ue]);
            let slot = &mut used[part][an];
            if *slot != usize::MAX {
                return Err(CoordError::ConstraintViolation {
                    clause: "an-exclusive-per-partition",
                    detail: format!("AN {an} serves UEs {} and {ue} in partition {part}", *slot),
                });
            }
            *slot = ue;
        }
        Ok(())
    }

    /// `(ue, an)` pairs per partition, UEs ascending.
    pub fn partition_pairs(&self) -> Vec<Vec<(usize, usize)>> {
        let mut parts = vec![Vec::new(); self.n_partitions];
        for (ue, (&an, &p)) in self.serving_an.iter().zip(&self.partition_of).enumerate() {
            parts[p].push((ue, an));
        }
        parts
    }

    /// Relabels partitions in order of their lowest UE. Partitions are
    /// interchangeable, so equal canonical forms mean equal solutions.
    pub fn canonical(&self) -> Assignment {
        let mut relabel = vec![usize::MAX; self.n_partitions];
        let mut next = 0;
        let partition_of = self
            .partition_of
            .iter()
            .map(|&p| {
                if relabel[p] == usize::MAX {
                    relabel[p] = next;
                    next += 1;
                }
                relabel[p]
            })
            .collect();
        Assignment::new(self.serving_an.clone(), partition_of, self.n_partitions)
    }
}

/// Counters and timings reported with a solution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub nodes_explored: u64,
    pub bisection_iterations: u32,
    /// Extra searches run after bisection to reach the best assignment.
    pub polish_steps: u32,
    pub wall_time_ms: f64,
    /// Final `[θ_min, θ_max]` of the bisection, when one ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
}

/// Assignment plus powers and the resulting common SINR and rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinationSolution {
    pub assignment: Assignment,
    /// Transmit power per UE (watts).
    pub powers: Vec<f64>,
    pub common_sinr: f64,
    /// `(1/N)·log₂(1 + θ)` in bps/Hz.
    pub common_rate: f64,
    pub per_ue_sinr: Vec<f64>,
    pub stats: SolverStats,
}

impl CoordinationSolution {
    /// Sum over UEs of `(1/N)·log₂(1 + SINR_k)`.
    pub fn sum_rate(&self) -> f64 {
        self.per_ue_sinr
            .iter()
            .map(|&s| crate::power::common_rate(s, self.assignment.n_partitions))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst() -> NetworkInstance {
        NetworkInstance::from_gains(vec![vec![4.0, 1.0], vec![1.0, 4.0], vec![2.0, 2.0]], 1.0)
            .unwrap()
    }

    #[test]
    fn validation_names_the_clause() {
        let i = inst();
        let clash = Assignment::new(vec![0, 0, 1], vec![0, 0, 1], 2);
        match clash.validate(&i).unwrap_err() {
            CoordError::ConstraintViolation { clause, .. } => {
                assert_eq!(clause, "an-exclusive-per-partition")
            }
            e => panic!("unexpected {e}"),
        }
        let bad_part = Assignment::new(vec![0, 1, 0], vec![0, 0, 2], 2);
        assert!(matches!(
            bad_part.validate(&i),
            Err(CoordError::ConstraintViolation { clause: "ue-single-partition", .. })
        ));
        let short = Assignment::new(vec![0, 1], vec![0, 0], 1);
        assert!(short.validate(&i).is_err());
        let ok = Assignment::new(vec![0, 1, 0], vec![0, 0, 1], 2);
        ok.validate(&i).unwrap();
    }

    #[test]
    fn canonical_relabels_by_first_ue() {
        let a = Assignment::new(vec![0, 1, 0], vec![2, 0, 2], 3);
        assert_eq!(a.canonical().partition_of, vec![0, 1, 0]);
        let b = Assignment::new(vec![0, 1, 0], vec![1, 2, 1], 3);
        assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn assignment_json_schema() {
        let a = Assignment::new(vec![1, 0], vec![0, 1], 2);
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(text, r#"{"serving_an":[1,0],"partition_of":[0,1],"n_partitions":2}"#);
    }
}
