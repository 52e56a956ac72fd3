//! Assignment search and the bisection wrapped around it.

use std::collections::HashMap;
use std::time::Instant;

use super::{Assignment, CoordinationSolution};
use crate::error::{CoordError, Result};
use crate::network::NetworkInstance;
use crate::power::{evaluate_assignment, optimal_common_sinr, PartitionGroup};

/// Largest K accepted when the search also chooses the serving ANs.
pub const FREE_PAIRING_CAP: usize = 8;
/// Largest K accepted when the pairing is given.
pub const FIXED_PAIRING_CAP: usize = 12;

/// Relative margin demanded by each post-bisection improvement search.
const POLISH_MARGIN: f64 = 1e-12;

/// Depth-first search over assignments that reach a common-SINR target.
///
/// Partition labels are canonical: a UE may join any partition already in
/// use or open the next unused one, so the `N!` relabelings of a solution are
/// visited once. A branch is cut as soon as the partition that just grew
/// falls below the target, since adding pairs never raises a partition's
/// optimal SINR.
struct FeasibilitySearch<'a> {
    instance: &'a NetworkInstance,
    n_partitions: usize,
    /// UEs in visiting order (weakest best gain first).
    order: Vec<usize>,
    /// Candidate ANs per UE, strongest first.
    candidates: Vec<Vec<usize>>,
    cache: HashMap<Vec<(usize, usize)>, f64>,
    nodes: u64,
}

impl<'a> FeasibilitySearch<'a> {
    fn new(
        instance: &'a NetworkInstance,
        n_partitions: usize,
        fixed_pairing: Option<&[usize]>,
    ) -> Result<Self> {
        instance.validate()?;
        let k = instance.ue_count();
        let cap = if fixed_pairing.is_some() {
            FIXED_PAIRING_CAP
        } else {
            FREE_PAIRING_CAP
        };
        if k > cap {
            return Err(CoordError::Capacity { k, cap });
        }
        if n_partitions == 0 {
            return Err(CoordError::InvalidInput("N must be at least 1".into()));
        }
        let candidates: Vec<Vec<usize>> = match fixed_pairing {
            Some(pairing) => {
                check_pairing(instance, pairing)?;
                pairing.iter().map(|&an| vec![an]).collect()
            }
            None => (0..k)
                .map(|ue| {
                    let mut ans: Vec<usize> = (0..instance.an_count()).collect();
                    ans.sort_by(|&a, &b| instance.gain(ue, b).total_cmp(&instance.gain(ue, a)));
                    ans
                })
                .collect(),
        };
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            let ga = instance.gain(a, candidates[a][0]);
            let gb = instance.gain(b, candidates[b][0]);
            ga.total_cmp(&gb).then(a.cmp(&b))
        });
        Ok(FeasibilitySearch {
            instance,
            n_partitions,
            order,
            candidates,
            cache: HashMap::new(),
            nodes: 0,
        })
    }

    fn group_sinr(&mut self, pairs: &[(usize, usize)]) -> Result<f64> {
        let mut key = pairs.to_vec();
        key.sort_unstable();
        if let Some(&g) = self.cache.get(&key) {
            return Ok(g);
        }
        let group = PartitionGroup::from_pairs(self.instance, &key)?;
        let g = optimal_common_sinr(&group, self.instance.p_max)?;
        self.cache.insert(key, g);
        Ok(g)
    }

    fn find(&mut self, target: f64) -> Result<Option<Assignment>> {
        let k = self.instance.ue_count();
        let mut parts: Vec<Vec<(usize, usize)>> = Vec::with_capacity(self.n_partitions);
        let mut label = vec![0usize; k];
        let mut serving = vec![0usize; k];
        if self.descend(0, target, &mut parts, &mut label, &mut serving)? {
            Ok(Some(Assignment::new(serving, label, self.n_partitions)))
        } else {
            Ok(None)
        }
    }

    fn descend(
        &mut self,
        depth: usize,
        target: f64,
        parts: &mut Vec<Vec<(usize, usize)>>,
        label: &mut [usize],
        serving: &mut [usize],
    ) -> Result<bool> {
        if depth == self.order.len() {
            return Ok(true);
        }
        let ue = self.order[depth];
        let p_max = self.instance.p_max;
        // Opening a fresh partition first finds witnesses quickly when the
        // target is loose.
        let open = parts.len();
        let mut slots: Vec<usize> = Vec::with_capacity(open + 1);
        if open < self.n_partitions {
            slots.push(open);
        }
        slots.extend(0..open);

        for slot in slots {
            for ci in 0..self.candidates[ue].len() {
                let an = self.candidates[ue][ci];
                if p_max * self.instance.gain(ue, an) < target {
                    // Candidates are sorted by gain; the rest are weaker.
                    break;
                }
                if slot < open && parts[slot].iter().any(|&(_, a)| a == an) {
                    continue;
                }
                self.nodes += 1;
                if slot == open {
                    parts.push(vec![(ue, an)]);
                } else {
                    parts[slot].push((ue, an));
                }
                let ok = if parts[slot].len() == 1 {
                    true
                } else {
                    let pairs = parts[slot].clone();
                    self.group_sinr(&pairs)? >= target
                };
                if ok {
                    label[ue] = slot;
                    serving[ue] = an;
                    if self.descend(depth + 1, target, parts, label, serving)? {
                        return Ok(true);
                    }
                }
                if slot == open {
                    parts.pop();
                } else {
                    parts[slot].pop();
                }
            }
        }
        Ok(false)
    }
}

fn check_pairing(instance: &NetworkInstance, pairing: &[usize]) -> Result<()> {
    if pairing.len() != instance.ue_count() {
        return Err(CoordError::InvalidInput(format!(
            "pairing covers {} UEs, instance has {}",
            pairing.len(),
            instance.ue_count()
        )));
    }
    if let Some(an) = pairing.iter().find(|&&an| an >= instance.an_count()) {
        return Err(CoordError::InvalidInput(format!("pairing names unknown AN {an}")));
    }
    Ok(())
}

/// Searches for an assignment whose common SINR is at least `target`.
///
/// With `fixed_pairing` the serving ANs are frozen and only partitions are
/// chosen. Returns `Ok(None)` when no assignment reaches the target.
pub fn assignment_feasible(
    instance: &NetworkInstance,
    target: f64,
    n_partitions: usize,
    fixed_pairing: Option<&[usize]>,
) -> Result<Option<Assignment>> {
    if !(target.is_finite() && target > 0.0) {
        return Err(CoordError::InvalidInput(format!(
            "SINR target must be positive, got {target}"
        )));
    }
    FeasibilitySearch::new(instance, n_partitions, fixed_pairing)?.find(target)
}

/// Trace of a bisection run.
#[derive(Debug, Clone)]
pub struct BisectionOutcome<T> {
    pub lower: f64,
    pub upper: f64,
    pub iterations: u32,
    /// `[lower, upper]` after each iteration.
    pub trace: Vec<[f64; 2]>,
    /// Witness returned at the largest feasible midpoint.
    pub witness: Option<T>,
}

/// Bisection on a monotone feasibility oracle.
///
/// Halves `[lower, upper]` until its width is at most `eps`, which takes
/// exactly `⌈log₂((upper − lower)/eps)⌉` oracle calls.
pub fn bisect<T, F>(lower: f64, upper: f64, eps: f64, mut feasible: F) -> Result<BisectionOutcome<T>>
where
    F: FnMut(f64) -> Result<Option<T>>,
{
    if !(eps.is_finite() && eps > 0.0) {
        return Err(CoordError::InvalidInput(format!("tolerance must be positive, got {eps}")));
    }
    if !(lower <= upper) {
        return Err(CoordError::InvalidInput(format!("empty bracket [{lower}, {upper}]")));
    }
    let (mut lo, mut hi) = (lower, upper);
    // Width halves exactly in binary floating point; tracking it separately
    // keeps the iteration count independent of midpoint rounding.
    let mut width = upper - lower;
    let mut out = BisectionOutcome {
        lower,
        upper,
        iterations: 0,
        trace: Vec::new(),
        witness: None,
    };
    while width > eps {
        let mid = 0.5 * (lo + hi);
        match feasible(mid)? {
            Some(w) => {
                lo = mid;
                out.witness = Some(w);
            }
            None => hi = mid,
        }
        width *= 0.5;
        out.iterations += 1;
        out.trace.push([lo, hi]);
    }
    out.lower = lo;
    out.upper = hi;
    Ok(out)
}

/// Upper end of the initial bracket: no UE can beat its interference-free
/// SINR, so the common SINR is at most the smallest of those.
pub fn sinr_upper_bound(instance: &NetworkInstance, fixed_pairing: Option<&[usize]>) -> f64 {
    (0..instance.ue_count())
        .map(|ue| match fixed_pairing {
            Some(p) => instance.p_max * instance.gain(ue, p[ue]),
            None => instance.interference_free_sinr(ue),
        })
        .fold(f64::INFINITY, f64::min)
}

/// Tolerance giving about 1e-3 relative accuracy: a thousandth of the common
/// SINR of the first valid assignment the search finds.
pub fn default_tolerance(
    instance: &NetworkInstance,
    n_partitions: usize,
    fixed_pairing: Option<&[usize]>,
) -> Result<f64> {
    let mut search = FeasibilitySearch::new(instance, n_partitions, fixed_pairing)?;
    let witness = search
        .find(0.0)?
        .ok_or_else(|| CoordError::Infeasible("no valid assignment exists".into()))?;
    let theta = evaluate_assignment(instance, &witness)?.common_sinr;
    Ok(1e-3 * theta)
}

/// The bare bisection of the exact solvers, over `[0, sinr_upper_bound]`.
pub fn bisect_common_sinr(
    instance: &NetworkInstance,
    n_partitions: usize,
    fixed_pairing: Option<&[usize]>,
    eps: f64,
) -> Result<BisectionOutcome<Assignment>> {
    let mut search = FeasibilitySearch::new(instance, n_partitions, fixed_pairing)?;
    let theta_max = sinr_upper_bound(instance, fixed_pairing);
    bisect(0.0, theta_max, eps, |theta| search.find(theta))
}

fn solve(
    instance: &NetworkInstance,
    n_partitions: usize,
    fixed_pairing: Option<&[usize]>,
    eps: f64,
) -> Result<CoordinationSolution> {
    let started = Instant::now();
    let mut search = FeasibilitySearch::new(instance, n_partitions, fixed_pairing)?;
    let theta_max = sinr_upper_bound(instance, fixed_pairing);
    let outcome = bisect(0.0, theta_max, eps, |theta| search.find(theta))?;

    let witness = match outcome.witness {
        Some(w) => w,
        None => search
            .find(0.0)?
            .ok_or_else(|| CoordError::Infeasible("no valid assignment exists".into()))?,
    };
    let mut best = evaluate_assignment(instance, &witness)?;
    // Climb to the best assignment inside the final bracket.
    let mut polish_steps = 0;
    while let Some(w) = search.find(best.common_sinr * (1.0 + POLISH_MARGIN))? {
        best = evaluate_assignment(instance, &w)?;
        polish_steps += 1;
    }
    best.stats.nodes_explored = search.nodes;
    best.stats.bisection_iterations = outcome.iterations;
    best.stats.polish_steps = polish_steps;
    best.stats.bracket = Some([outcome.lower, outcome.upper]);
    best.stats.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(best)
}

/// Optimal joint pairing, partitioning and power for `n_partitions`.
///
/// Bisects the common SINR over `[0, min_k p_max·max_m g_km]` down to width
/// `eps`, then keeps searching for strictly better assignments until none
/// exists, so the returned solution is the exact optimum.
pub fn solve_joint_ppp(
    instance: &NetworkInstance,
    n_partitions: usize,
    eps: f64,
) -> Result<CoordinationSolution> {
    solve(instance, n_partitions, None, eps)
}

/// Optimal partitioning and power when every UE's serving AN is given.
pub fn solve_fixed_pairing(
    instance: &NetworkInstance,
    pairing: &[usize],
    n_partitions: usize,
    eps: f64,
) -> Result<CoordinationSolution> {
    check_pairing(instance, pairing)?;
    let mut load = vec![0usize; instance.an_count()];
    for &an in pairing {
        load[an] += 1;
    }
    if let Some((an, &count)) = load.iter().enumerate().find(|(_, &c)| c > n_partitions) {
        return Err(CoordError::Infeasible(format!(
            "AN {an} serves {count} UEs but only {n_partitions} partitions exist"
        )));
    }
    solve(instance, n_partitions, Some(pairing), eps)
}
