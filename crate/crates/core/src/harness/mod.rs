//! Seeded Monte Carlo scenarios over random deployments.
//!
//! Realization `i` of a scenario uses seed `base_seed + i`, so any single row
//! can be regenerated alone. Realizations run in parallel and records are
//! sorted by `(realization, algorithm order in the spec)` before output.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoordError, Result};
use crate::exact::{
    default_tolerance, solve_fixed_pairing, solve_joint_ppp, Assignment, CoordinationSolution,
    FIXED_PAIRING_CAP, FREE_PAIRING_CAP,
};
use crate::greedy::{
    baseline_full_orthogonalization, baseline_full_spatial_reuse, closest_an_pairing,
    interference_weight_matrix, power_aware_partition, power_unaware_partition,
    random_partition, GreedyConfig, DEFAULT_DOMINANT_COUNT,
};
use crate::network::{generate_instance, NetworkInstance, SystemConfig};
use crate::power::evaluate_assignment;

/// Header of the per-run CSV.
pub const CSV_HEADER: &str =
    "realization,seed,algorithm,n,theta,common_rate_bps_hz,sum_rate_bps_hz,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmId {
    JointExact,
    FixedPairingExact,
    PowerAwareExact,
    PowerAwareApprox,
    PowerUnaware,
    RandomPartition,
    FullReuse,
    FullOrth,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 8] = [
        AlgorithmId::JointExact,
        AlgorithmId::FixedPairingExact,
        AlgorithmId::PowerAwareExact,
        AlgorithmId::PowerAwareApprox,
        AlgorithmId::PowerUnaware,
        AlgorithmId::RandomPartition,
        AlgorithmId::FullReuse,
        AlgorithmId::FullOrth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::JointExact => "joint-exact",
            AlgorithmId::FixedPairingExact => "fixed-pairing-exact",
            AlgorithmId::PowerAwareExact => "power-aware-exact",
            AlgorithmId::PowerAwareApprox => "power-aware-approx",
            AlgorithmId::PowerUnaware => "power-unaware",
            AlgorithmId::RandomPartition => "random-partition",
            AlgorithmId::FullReuse => "full-reuse",
            AlgorithmId::FullOrth => "full-orth",
        }
    }

    /// Whether `N` is chosen by the scenario policy. The baselines fix it
    /// themselves (1 and K).
    pub fn uses_n_policy(self) -> bool {
        !matches!(self, AlgorithmId::FullReuse | AlgorithmId::FullOrth)
    }

    /// Size cap of exact algorithms.
    pub fn ue_cap(self) -> Option<usize> {
        match self {
            AlgorithmId::JointExact => Some(FREE_PAIRING_CAP),
            AlgorithmId::FixedPairingExact => Some(FIXED_PAIRING_CAP),
            _ => None,
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = CoordError;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| CoordError::Parse(format!("unknown algorithm '{s}'")))
    }
}

/// How the number of partitions is chosen per realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NPolicy {
    Fixed(usize),
    /// Best common rate over `N = 1..=max_n` (default `K`).
    ExhaustiveBestN { max_n: Option<usize> },
    /// Maximum number of UEs sharing a closest AN.
    IntraAnOrthogonalization,
}

impl FromStr for NPolicy {
    type Err = CoordError;

    /// Accepts `3`, `fixed:3`, `best`, `best:4` and `intra-an`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || CoordError::Parse(format!("unknown N policy '{s}'"));
        let parse_n = |t: &str| t.parse::<usize>().map_err(|_| bad());
        match s.split_once(':') {
            None if s == "best" || s == "exhaustive-best-n" => {
                Ok(NPolicy::ExhaustiveBestN { max_n: None })
            }
            None if s == "intra-an" || s == "intra-an-orthogonalization" => {
                Ok(NPolicy::IntraAnOrthogonalization)
            }
            None => Ok(NPolicy::Fixed(parse_n(s)?)),
            Some(("fixed", n)) => Ok(NPolicy::Fixed(parse_n(n)?)),
            Some(("best", n)) => Ok(NPolicy::ExhaustiveBestN {
                max_n: Some(parse_n(n)?),
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub m_count: usize,
    pub k_count: usize,
    pub n_policy: NPolicy,
    pub algorithms: Vec<AlgorithmId>,
    pub realizations: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub config: SystemConfig,
    /// Fills `wall_ms`; off by default so output is reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl ScenarioSpec {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoordError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CoordError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_count == 0 || self.k_count == 0 {
            return Err(CoordError::InvalidInput("need at least one AN and one UE".into()));
        }
        if self.realizations == 0 {
            return Err(CoordError::InvalidInput("realizations must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(CoordError::InvalidInput("no algorithms requested".into()));
        }
        match self.n_policy {
            NPolicy::Fixed(0) | NPolicy::ExhaustiveBestN { max_n: Some(0) } => {
                Err(CoordError::InvalidInput("N must be at least 1".into()))
            }
            _ => self.config.validate(),
        }
    }
}

/// One algorithm on one realization. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub realization: usize,
    pub seed: u64,
    pub algorithm: AlgorithmId,
    pub n: usize,
    pub theta: f64,
    pub common_rate_bps_hz: f64,
    pub sum_rate_bps_hz: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    /// 5th percentile, linear interpolation between order statistics.
    pub p5: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        if values.is_empty() {
            return Stats::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Stats {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile(&v, 0.5),
            p5: quantile(&v, 0.05),
        }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: AlgorithmId,
    pub runs: usize,
    pub common_rate: Stats,
    pub sum_rate: Stats,
}

/// A run that produced no solution. Infeasible runs still appear in the CSV
/// with zero rates; other failures do not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunNote {
    pub realization: Option<usize>,
    pub algorithm: AlgorithmId,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithms: Vec<AlgorithmSummary>,
    /// Infeasible runs (recorded with zero rate) and errors.
    pub notes: Vec<RunNote>,
}

impl Summary {
    /// Aggregates per algorithm, in order of first appearance.
    pub fn from_records(records: &[RunRecord], notes: Vec<RunNote>) -> Summary {
        let mut order: Vec<AlgorithmId> = Vec::new();
        for r in records {
            if !order.contains(&r.algorithm) {
                order.push(r.algorithm);
            }
        }
        let algorithms = order
            .into_iter()
            .map(|alg| {
                let rows: Vec<&RunRecord> = records.iter().filter(|r| r.algorithm == alg).collect();
                let common: Vec<f64> = rows.iter().map(|r| r.common_rate_bps_hz).collect();
                let sum: Vec<f64> = rows.iter().map(|r| r.sum_rate_bps_hz).collect();
                AlgorithmSummary {
                    algorithm: alg,
                    runs: rows.len(),
                    common_rate: Stats::of(&common),
                    sum_rate: Stats::of(&sum),
                }
            })
            .collect();
        Summary { algorithms, notes }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
}

/// `N` that separates every pair of UEs sharing an AN: the largest AN load,
/// at least 1.
pub fn dynamic_n_intra_an(pairing: &[usize]) -> usize {
    let mut load = std::collections::HashMap::new();
    for &an in pairing {
        *load.entry(an).or_insert(0usize) += 1;
    }
    load.into_values().max().unwrap_or(0).max(1)
}

/// Runs `algorithm` with `n` partitions on `instance`.
///
/// `seed` only drives the random-partition baseline. The baselines ignore
/// `n`.
pub fn run_algorithm(
    instance: &NetworkInstance,
    algorithm: AlgorithmId,
    n: usize,
    seed: u64,
) -> Result<CoordinationSolution> {
    let k = instance.ue_count();
    if algorithm.uses_n_policy() && (n == 0 || n > k) {
        return Err(CoordError::InvalidInput(format!("N must lie in 1..={k}, got {n}")));
    }
    match algorithm {
        AlgorithmId::JointExact => {
            let eps = default_tolerance(instance, n, None)?;
            solve_joint_ppp(instance, n, eps)
        }
        AlgorithmId::FixedPairingExact => {
            let pairing = closest_an_pairing(instance);
            if dynamic_n_intra_an(&pairing) > n {
                return Err(CoordError::Infeasible(format!(
                    "closest-AN pairing needs at least {} partitions",
                    dynamic_n_intra_an(&pairing)
                )));
            }
            let eps = default_tolerance(instance, n, Some(&pairing))?;
            solve_fixed_pairing(instance, &pairing, n, eps)
        }
        AlgorithmId::PowerAwareExact => {
            let a = power_aware_partition(instance, n, GreedyConfig::default())?;
            evaluate_assignment(instance, &a)
        }
        AlgorithmId::PowerAwareApprox => {
            let a = power_aware_partition(instance, n, GreedyConfig::approx())?;
            evaluate_assignment(instance, &a)
        }
        AlgorithmId::PowerUnaware => {
            let pairing = closest_an_pairing(instance);
            let w = interference_weight_matrix(instance, &pairing, DEFAULT_DOMINANT_COUNT)?;
            let labels = power_unaware_partition(&w, n)?;
            evaluate_assignment(instance, &Assignment::new(pairing, labels, n))
        }
        AlgorithmId::RandomPartition => {
            let pairing = closest_an_pairing(instance);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n as u64);
            let labels = random_partition(&pairing, n, &mut rng)?;
            evaluate_assignment(instance, &Assignment::new(pairing, labels, n))
        }
        AlgorithmId::FullReuse => baseline_full_spatial_reuse(instance),
        AlgorithmId::FullOrth => baseline_full_orthogonalization(instance),
    }
}

fn is_infeasibility(e: &CoordError) -> bool {
    matches!(e, CoordError::Infeasible(_) | CoordError::ConstraintViolation { .. })
}

/// Best common rate over `n_range`, smallest `N` on ties. Values of `N` at
/// which the algorithm is infeasible are skipped.
pub fn exhaustive_best_n(
    instance: &NetworkInstance,
    algorithm: AlgorithmId,
    n_range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<(usize, CoordinationSolution)> {
    let mut best: Option<(usize, CoordinationSolution)> = None;
    let mut last_err = None;
    for n in n_range {
        match run_algorithm(instance, algorithm, n, seed) {
            Ok(sol) => {
                if best.as_ref().is_none_or(|(_, b)| sol.common_rate > b.common_rate) {
                    best = Some((n, sol));
                }
            }
            Err(e) if is_infeasibility(&e) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| CoordError::InvalidInput("empty range of N".into()))
    })
}

fn run_under_policy(
    instance: &NetworkInstance,
    algorithm: AlgorithmId,
    policy: NPolicy,
    seed: u64,
) -> (usize, Result<CoordinationSolution>) {
    let k = instance.ue_count();
    if !algorithm.uses_n_policy() {
        let n = if algorithm == AlgorithmId::FullReuse { 1 } else { k };
        return (n, run_algorithm(instance, algorithm, n, seed));
    }
    match policy {
        NPolicy::Fixed(n) => (n, run_algorithm(instance, algorithm, n, seed)),
        NPolicy::IntraAnOrthogonalization => {
            let n = dynamic_n_intra_an(&closest_an_pairing(instance));
            (n, run_algorithm(instance, algorithm, n, seed))
        }
        NPolicy::ExhaustiveBestN { max_n } => {
            let top = max_n.unwrap_or(k).min(k);
            match exhaustive_best_n(instance, algorithm, 1..=top, seed) {
                Ok((n, sol)) => (n, Ok(sol)),
                Err(e) => (top, Err(e)),
            }
        }
    }
}

/// Runs every algorithm of `spec` on every realization.
///
/// Exact algorithms over their size cap are skipped up front and noted in
/// the summary; the rest still run.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioOutput> {
    spec.validate()?;
    let mut notes = Vec::new();
    let mut active = Vec::new();
    for (pos, &alg) in spec.algorithms.iter().enumerate() {
        match alg.ue_cap() {
            Some(cap) if spec.k_count > cap => notes.push(RunNote {
                realization: None,
                algorithm: alg,
                reason: CoordError::Capacity {
                    k: spec.k_count,
                    cap,
                }
                .to_string(),
            }),
            _ => active.push((pos, alg)),
        }
    }

    let per_realization: Vec<Result<Vec<(usize, RunRecord, Option<RunNote>)>>> = (0
        ..spec.realizations)
        .into_par_iter()
        .map(|idx| {
            let seed = spec.base_seed.wrapping_add(idx as u64);
            let config = spec.config.clone().with_seed(seed);
            let instance = generate_instance(spec.m_count, spec.k_count, &config)?;
            let mut rows = Vec::new();
            for &(pos, alg) in &active {
                let started = Instant::now();
                let (n, outcome) = run_under_policy(&instance, alg, spec.n_policy, seed);
                let wall_ms = if spec.record_timing {
                    started.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                };
                let mut record = RunRecord {
                    realization: idx,
                    seed,
                    algorithm: alg,
                    n,
                    theta: 0.0,
                    common_rate_bps_hz: 0.0,
                    sum_rate_bps_hz: 0.0,
                    wall_ms,
                };
                let note = |reason: String| RunNote {
                    realization: Some(idx),
                    algorithm: alg,
                    reason,
                };
                match outcome {
                    Ok(sol) => {
                        record.n = sol.assignment.n_partitions;
                        record.theta = sol.common_sinr;
                        record.common_rate_bps_hz = sol.common_rate;
                        record.sum_rate_bps_hz = sol.sum_rate();
                        rows.push((pos, record, None));
                    }
                    Err(e) if is_infeasibility(&e) => {
                        rows.push((pos, record, Some(note(e.to_string()))));
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_realization {
        rows.extend(r?);
    }
    rows.sort_by_key(|(pos, rec, _)| (rec.realization, *pos));
    let mut records = Vec::with_capacity(rows.len());
    for (_, rec, note) in rows {
        notes.extend(note);
        records.push(rec);
    }
    let summary = Summary::from_records(&records, notes);
    Ok(ScenarioOutput { records, summary })
}

/// Writes the CSV (header always present) to `out`.
pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let to_err = |e: csv::Error| CoordError::Parse(format!("csv: {e}"));
    w.write_record(CSV_HEADER.split(',')).map_err(to_err)?;
    for r in records {
        w.serialize(r).map_err(to_err)?;
    }
    w.flush().map_err(|e| CoordError::Parse(format!("csv: {e}")))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CoordError::Parse(format!("{}: {e}", path.display())))?;
    let header = rdr
        .headers()
        .map_err(|e| CoordError::Parse(format!("{}: {e}", path.display())))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != CSV_HEADER {
        return Err(CoordError::Parse(format!("{}: unexpected header '{header}'", path.display())));
    }
    rdr.deserialize()
        .map(|r| r.map_err(|e| CoordError::Parse(format!("{}: {e}", path.display()))))
        .collect()
}

/// Path of the JSON summary written next to `csv_path`.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("summary.json")
}

/// Writes `records` as CSV to `csv_path` and the summary as JSON beside it.
/// Returns the summary path.
pub fn emit_results(records: &[RunRecord], summary: &Summary, csv_path: &Path) -> Result<PathBuf> {
    let file = File::create(csv_path).map_err(|e| CoordError::io(csv_path, e))?;
    write_csv(records, BufWriter::new(file))?;
    let json_path = summary_path(csv_path);
    let text = serde_json::to_string_pretty(summary)
        .map_err(|e| CoordError::Parse(format!("summary: {e}")))?;
    std::fs::write(&json_path, text + "\n").map_err(|e| CoordError::io(&json_path, e))?;
    Ok(json_path)
}
