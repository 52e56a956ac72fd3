//! Independent oracles shared by the integration tests. None of them go
//! through the Perron-root code paths of the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use udn_coord::{NetworkInstance, PartitionGroup};

/// `L×L` link gains, every entry log-uniform in `[10^lo, 10^hi]`.
pub fn log_uniform_links<R: Rng>(rng: &mut R, l: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(l, l, |_, _| 10f64.powf(rng.random_range(lo..hi)))
}

pub fn group_from_links(link: &DMatrix<f64>) -> PartitionGroup {
    let pairs = (0..link.nrows()).map(|i| (i, i)).collect();
    PartitionGroup::from_link_gains(pairs, link).unwrap()
}

/// Whether every pair can reach SINR `gamma` within the budget.
///
/// The minimal powers solve `(I − γF) p = γ v`. A positive solution exists
/// iff `ρ(γF) < 1` (a positive `p` with `γFp < p` certifies it), and the
/// target is reachable iff that solution also fits under `p_max`.
pub fn target_reachable(group: &PartitionGroup, p_max: f64, gamma: f64) -> bool {
    let l = group.len();
    let system = DMatrix::<f64>::identity(l, l) - &group.cross * gamma;
    let rhs: DVector<f64> = &group.inverse_gains * gamma;
    match system.lu().solve(&rhs) {
        Some(p) => p.iter().all(|&x| x.is_finite() && x > 0.0 && x <= p_max),
        None => false,
    }
}

/// Max-min SINR by bisection on [`target_reachable`], to machine precision.
pub fn oracle_gamma(group: &PartitionGroup, p_max: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = group
        .direct_gains
        .iter()
        .map(|g| p_max * g)
        .fold(f64::INFINITY, f64::min);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if target_reachable(group, p_max, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Smallest per-pair SINR at `powers`, straight from the link budget.
pub fn min_sinr(link: &DMatrix<f64>, powers: &[f64]) -> f64 {
    (0..powers.len())
        .map(|i| {
            let interference: f64 = (0..powers.len())
                .filter(|&j| j != i)
                .map(|j| link[(i, j)] * powers[j])
                .sum();
            link[(i, i)] * powers[i] / (1.0 + interference)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Max-min SINR over a `points`-per-axis grid of `[0, p_max]^L`, refined by
/// `zooms` rounds of grid search on each face `p_j = p_max`.
///
/// Scaling every power up raises every SINR (noise is positive), so some
/// power is at `p_max` at the optimum. Within the full box the optimum sits
/// on a ridge that an axis-aligned zoom only creeps along, while on a face
/// it is an isolated peak where the SINR surfaces meet.
pub fn grid_max_min(link: &DMatrix<f64>, p_max: f64, points: usize, zooms: usize) -> f64 {
    let l = link.nrows();
    let mut best = grid_pass(link, &vec![(0.0, p_max); l], points).0;
    for face in 0..l {
        let mut window: Vec<(f64, f64)> =
            (0..l).map(|d| if d == face { (p_max, p_max) } else { (0.0, p_max) }).collect();
        for _ in 0..=zooms {
            let (value, at) = grid_pass(link, &window, points);
            best = best.max(value);
            for (d, w) in window.iter_mut().enumerate() {
                if d != face {
                    let step = (w.1 - w.0) / (points - 1) as f64;
                    *w = ((at[d] - 10.0 * step).max(0.0), (at[d] + 10.0 * step).min(p_max));
                }
            }
        }
    }
    best
}

/// Best min-SINR over a `points`-per-axis grid of the box `window`, and
/// where it was attained. Degenerate axes are sampled once.
fn grid_pass(link: &DMatrix<f64>, window: &[(f64, f64)], points: usize) -> (f64, Vec<f64>) {
    let l = window.len();
    let counts: Vec<usize> = window.iter().map(|w| if w.1 > w.0 { points } else { 1 }).collect();
    let mut idx = vec![0usize; l];
    let mut p = vec![0.0; l];
    let mut best = (0.0, window.iter().map(|w| w.1).collect::<Vec<_>>());
    loop {
        for d in 0..l {
            p[d] = if counts[d] == 1 {
                window[d].1
            } else {
                window[d].0 + (window[d].1 - window[d].0) * idx[d] as f64 / (points - 1) as f64
            };
        }
        let s = min_sinr(link, &p);
        if s > best.0 {
            best = (s, p.clone());
        }
        let mut d = 0;
        while d < l {
            idx[d] += 1;
            if idx[d] < counts[d] {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == l {
            return best;
        }
    }
}

/// Every `(serving AN, partition)` choice per UE, including invalid ones;
/// the caller filters.
pub fn all_assignments(k: usize, m: usize, n: usize) -> impl Iterator<Item = (Vec<usize>, Vec<usize>)> {
    let choices = m * n;
    (0..choices.pow(k as u32)).map(move |mut code| {
        let mut serving = vec![0; k];
        let mut part = vec![0; k];
        for ue in 0..k {
            let pick = code % choices;
            code /= choices;
            serving[ue] = pick / n;
            part[ue] = pick % n;
        }
        (serving, part)
    })
}

/// Common SINR of an assignment with the bisection oracle, or `None` if two
/// UEs of one partition share an AN.
pub fn oracle_assignment_theta(
    instance: &NetworkInstance,
    serving: &[usize],
    part: &[usize],
    n: usize,
) -> Option<f64> {
    let mut theta = f64::INFINITY;
    for p in 0..n {
        let pairs: Vec<(usize, usize)> =
            (0..serving.len()).filter(|&ue| part[ue] == p).map(|ue| (ue, serving[ue])).collect();
        if pairs.is_empty() {
            continue;
        }
        let mut ans: Vec<usize> = pairs.iter().map(|&(_, a)| a).collect();
        ans.sort_unstable();
        ans.dedup();
        if ans.len() != pairs.len() {
            return None;
        }
        let group = PartitionGroup::from_pairs(instance, &pairs).unwrap();
        theta = theta.min(oracle_gamma(&group, instance.p_max));
    }
    Some(theta)
}

/// Brute-force optimum of the common SINR over every valid assignment.
/// With `pairing` the serving ANs are frozen.
pub fn brute_force_theta(instance: &NetworkInstance, n: usize, pairing: Option<&[usize]>) -> f64 {
    let (k, m) = (instance.ue_count(), instance.an_count());
    let mut best = 0.0f64;
    for (serving, part) in all_assignments(k, m, n) {
        if pairing.is_some_and(|p| p != serving.as_slice()) {
            continue;
        }
        if let Some(t) = oracle_assignment_theta(instance, &serving, &part, n) {
            best = best.max(t);
        }
    }
    best
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
