//! Big-M integer program for the common-SINR feasibility problem.
//!
//! Variables (indices 0-based in names):
//!
//! | name          | kind       | meaning                                         |
//! |---------------|------------|-------------------------------------------------|
//! | `P_k_m_n`     | continuous | power of UE k served by AN m in partition n     |
//! | `rho_k_m_n`   | binary     | UE k served by AN m in partition n              |
//! | `z_k_n`       | binary     | UE k active in partition n                      |
//! | `u_i_m_n_k`   | continuous | linearization of `z_k_n · P_i_m_n`, `i ≠ k`     |
//!
//! That is `2KMN + KN + (K−1)KMN` variables. Rows:
//!
//! - `ue_an_k_n`:   `Σ_m rho_k_m_n ≤ 1`
//! - `an_ue_m_n`:   `Σ_k rho_k_m_n ≤ 1`
//! - `assign_k`:    `Σ_m Σ_n rho_k_m_n = 1`
//! - `pow_k_m_n`:   `P_k_m_n − p_max·rho_k_m_n ≤ 0`
//! - `act_k_n`:     `z_k_n − Σ_m rho_k_m_n = 0`
//! - `lin1_i_m_n_k`: `P_i_m_n − u_i_m_n_k + B·z_k_n ≤ B`
//! - `lin2_i_m_n_k`: `u_i_m_n_k − P_i_m_n ≤ 0`
//! - `lin3_i_m_n_k`: `u_i_m_n_k − B·z_k_n ≤ 0`
//! - `sinr_k_n`:    `θ₀·z_k_n + θ₀·Σ_{i≠k} Σ_m g_km·u_i_m_n_k − Σ_m g_km·P_k_m_n ≤ 0`
//!
//! with `u ≥ 0` and `0 ≤ P ≤ p_max` as bounds, and `B = p_max`.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::Assignment;
use crate::error::{CoordError, Result};
use crate::network::NetworkInstance;
use crate::power::{powers_for_target, PartitionGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub sense: RowSense,
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// A row or bound that a candidate point breaks.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub name: String,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlpModel {
    pub ue_count: usize,
    pub an_count: usize,
    pub n_partitions: usize,
    pub theta0: f64,
    pub big_m: f64,
    pub variables: Vec<Variable>,
    pub rows: Vec<Row>,
    index: HashMap<String, usize>,
}

impl IlpModel {
    /// Closed-form variable count `2KMN + KN + (K−1)KMN`.
    pub fn expected_variable_count(k: usize, m: usize, n: usize) -> usize {
        2 * k * m * n + k * n + k.saturating_sub(1) * k * m * n
    }

    pub fn build(instance: &NetworkInstance, theta0: f64, n_partitions: usize) -> Result<Self> {
        instance.validate()?;
        if !(theta0.is_finite() && theta0 >= 0.0) {
            return Err(CoordError::InvalidInput(format!("θ₀ must be non-negative, got {theta0}")));
        }
        if n_partitions == 0 {
            return Err(CoordError::InvalidInput("N must be at least 1".into()));
        }
        let (k_count, m_count, n_count) = (instance.ue_count(), instance.an_count(), n_partitions);
        let p_max = instance.p_max;
        let big_m = p_max;

        let mut model = IlpModel {
            ue_count: k_count,
            an_count: m_count,
            n_partitions,
            theta0,
            big_m,
            variables: Vec::new(),
            rows: Vec::new(),
            index: HashMap::new(),
        };
        let add_var = |model: &mut IlpModel, name: String, kind: VarKind, upper: f64| {
            model.index.insert(name.clone(), model.variables.len());
            model.variables.push(Variable {
                name,
                kind,
                lower: 0.0,
                upper,
            });
        };
        for k in 0..k_count {
            for m in 0..m_count {
                for n in 0..n_count {
                    add_var(&mut model, format!("P_{k}_{m}_{n}"), VarKind::Continuous, p_max);
                }
            }
        }
        for k in 0..k_count {
            for m in 0..m_count {
                for n in 0..n_count {
                    add_var(&mut model, format!("rho_{k}_{m}_{n}"), VarKind::Binary, 1.0);
                }
            }
        }
        for k in 0..k_count {
            for n in 0..n_count {
                add_var(&mut model, format!("z_{k}_{n}"), VarKind::Binary, 1.0);
            }
        }
        for i in 0..k_count {
            for m in 0..m_count {
                for n in 0..n_count {
                    for k in (0..k_count).filter(|&k| k != i) {
                        add_var(
                            &mut model,
                            format!("u_{i}_{m}_{n}_{k}"),
                            VarKind::Continuous,
                            f64::INFINITY,
                        );
                    }
                }
            }
        }

        let mut rows = Vec::new();
        let le = |name: String, coeffs: Vec<(usize, f64)>, rhs: f64| Row {
            name,
            sense: RowSense::Le,
            coeffs,
            rhs,
        };
        for k in 0..k_count {
            for n in 0..n_count {
                let c = (0..m_count).map(|m| (model.rho(k, m, n), 1.0)).collect();
                rows.push(le(format!("ue_an_{k}_{n}"), c, 1.0));
            }
        }
        for m in 0..m_count {
            for n in 0..n_count {
                let c = (0..k_count).map(|k| (model.rho(k, m, n), 1.0)).collect();
                rows.push(le(format!("an_ue_{m}_{n}"), c, 1.0));
            }
        }
        for k in 0..k_count {
            let c = (0..m_count)
                .flat_map(|m| (0..n_count).map(move |n| (m, n)))
                .map(|(m, n)| (model.rho(k, m, n), 1.0))
                .collect();
            rows.push(Row {
                name: format!("assign_{k}"),
                sense: RowSense::Eq,
                coeffs: c,
                rhs: 1.0,
            });
        }
        for k in 0..k_count {
            for m in 0..m_count {
                for n in 0..n_count {
                    let c = vec![(model.p(k, m, n), 1.0), (model.rho(k, m, n), -p_max)];
                    rows.push(le(format!("pow_{k}_{m}_{n}"), c, 0.0));
                }
            }
        }
        for k in 0..k_count {
            for n in 0..n_count {
                let mut c = vec![(model.z(k, n), 1.0)];
                c.extend((0..m_count).map(|m| (model.rho(k, m, n), -1.0)));
                rows.push(Row {
                    name: format!("act_{k}_{n}"),
                    sense: RowSense::Eq,
                    coeffs: c,
                    rhs: 0.0,
                });
            }
        }
        for i in 0..k_count {
            for m in 0..m_count {
                for n in 0..n_count {
                    for k in (0..k_count).filter(|&k| k != i) {
                        let (p, u, z) = (model.p(i, m, n), model.u(i, m, n, k), model.z(k, n));
                        let tag = format!("{i}_{m}_{n}_{k}");
                        rows.push(le(format!("lin1_{tag}"), vec![(p, 1.0), (u, -1.0), (z, big_m)], big_m));
                        rows.push(le(format!("lin2_{tag}"), vec![(u, 1.0), (p, -1.0)], 0.0));
                        rows.push(le(format!("lin3_{tag}"), vec![(u, 1.0), (z, -big_m)], 0.0));
                    }
                }
            }
        }
        for k in 0..k_count {
            for n in 0..n_count {
                let mut c = vec![(model.z(k, n), theta0)];
                for i in (0..k_count).filter(|&i| i != k) {
                    for m in 0..m_count {
                        c.push((model.u(i, m, n, k), theta0 * instance.gain(k, m)));
                    }
                }
                for m in 0..m_count {
                    c.push((model.p(k, m, n), -instance.gain(k, m)));
                }
                rows.push(le(format!("sinr_{k}_{n}"), c, 0.0));
            }
        }
        model.rows = rows;
        Ok(model)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn kmn(&self, k: usize, m: usize, n: usize) -> usize {
        (k * self.an_count + m) * self.n_partitions + n
    }

    pub fn p(&self, k: usize, m: usize, n: usize) -> usize {
        self.kmn(k, m, n)
    }

    pub fn rho(&self, k: usize, m: usize, n: usize) -> usize {
        self.ue_count * self.an_count * self.n_partitions + self.kmn(k, m, n)
    }

    pub fn z(&self, k: usize, n: usize) -> usize {
        2 * self.ue_count * self.an_count * self.n_partitions + k * self.n_partitions + n
    }

    /// Index of `u_i_m_n_k` (`i ≠ k`).
    pub fn u(&self, i: usize, m: usize, n: usize, k: usize) -> usize {
        debug_assert_ne!(i, k);
        let base = 2 * self.ue_count * self.an_count * self.n_partitions
            + self.ue_count * self.n_partitions;
        let victim = if k > i { k - 1 } else { k };
        base + self.kmn(i, m, n) * (self.ue_count - 1) + victim
    }

    /// Variable values induced by an assignment and per-UE powers.
    pub fn point_from_solution(&self, assignment: &Assignment, powers: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.variables.len()];
        for k in 0..self.ue_count {
            let (m, n) = (assignment.serving_an[k], assignment.partition_of[k]);
            x[self.rho(k, m, n)] = 1.0;
            x[self.z(k, n)] = 1.0;
            x[self.p(k, m, n)] = powers[k];
        }
        for i in 0..self.ue_count {
            let (m, n) = (assignment.serving_an[i], assignment.partition_of[i]);
            for k in (0..self.ue_count).filter(|&k| k != i) {
                x[self.u(i, m, n, k)] = x[self.z(k, n)] * x[self.p(i, m, n)];
            }
        }
        x
    }

    /// Rows and bounds broken by `x`. Rows are compared with a tolerance of
    /// `tol` relative to the magnitude of their terms; binaries must be
    /// within `1e-6` of an integer.
    pub fn check(&self, x: &[f64], tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        if x.len() != self.variables.len() {
            out.push(Violation {
                name: "dimension".into(),
                excess: (x.len() as f64 - self.variables.len() as f64).abs(),
            });
            return out;
        }
        for (var, &value) in self.variables.iter().zip(x) {
            let slack = tol * value.abs().max(1.0);
            let excess = (var.lower - value).max(value - var.upper);
            if excess > slack || !value.is_finite() {
                out.push(Violation {
                    name: var.name.clone(),
                    excess,
                });
            }
            if var.kind == VarKind::Binary && (value - value.round()).abs() > 1e-6 {
                out.push(Violation {
                    name: format!("{}:integrality", var.name),
                    excess: (value - value.round()).abs(),
                });
            }
        }
        for row in &self.rows {
            let mut lhs = 0.0;
            let mut scale = row.rhs.abs();
            for &(j, c) in &row.coeffs {
                lhs += c * x[j];
                scale += (c * x[j]).abs();
            }
            let excess = match row.sense {
                RowSense::Le => lhs - row.rhs,
                RowSense::Eq => (lhs - row.rhs).abs(),
            };
            if excess > tol * scale.max(1.0) {
                out.push(Violation {
                    name: row.name.clone(),
                    excess,
                });
            }
        }
        out
    }

    /// Exhaustive integral substitution: searches every pairing/partitioning
    /// choice admitted by the `assign_k` rows for a point that satisfies the
    /// whole model, and returns the first assignment found.
    ///
    /// For fixed binaries the continuous part is feasible iff the minimal
    /// powers reaching `θ₀` in every partition are (any feasible powers
    /// dominate them), so those powers are the only candidate substituted.
    pub fn find_integral_point(&self, instance: &NetworkInstance, tol: f64) -> Option<Assignment> {
        let (k, m, n) = (self.ue_count, self.an_count, self.n_partitions);
        let choices = m * n;
        let total = choices.checked_pow(k as u32)?;
        for code in 0..total {
            let mut c = code;
            let mut serving = vec![0; k];
            let mut part = vec![0; k];
            for ue in 0..k {
                let pick = c % choices;
                c /= choices;
                serving[ue] = pick / n;
                part[ue] = pick % n;
            }
            let assignment = Assignment::new(serving, part, n);
            let powers = self.candidate_powers(instance, &assignment);
            let x = self.point_from_solution(&assignment, &powers);
            if self.check(&x, tol).is_empty() {
                return Some(assignment);
            }
        }
        None
    }

    fn candidate_powers(&self, instance: &NetworkInstance, assignment: &Assignment) -> Vec<f64> {
        let mut powers = vec![instance.p_max; self.ue_count];
        if self.theta0 <= 0.0 {
            return powers;
        }
        for pairs in assignment.partition_pairs() {
            if pairs.is_empty() {
                continue;
            }
            let Ok(group) = PartitionGroup::from_pairs(instance, &pairs) else {
                continue;
            };
            if let Ok(p) = powers_for_target(&group, self.theta0) {
                for (&(ue, _), pw) in group.pairs.iter().zip(p) {
                    powers[ue] = pw;
                }
            }
        }
        powers
    }

    /// Parses `name=value` lines (blank lines and `#` comments skipped).
    /// Variables not listed are zero.
    pub fn parse_solution(&self, text: &str) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.variables.len()];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line.split_once('=').ok_or_else(|| {
                CoordError::Parse(format!("line {}: expected name=value", lineno + 1))
            })?;
            let name = name.trim();
            let idx = self
                .var_index(name)
                .ok_or_else(|| CoordError::Parse(format!("line {}: unknown variable {name}", lineno + 1)))?;
            x[idx] = value.trim().parse().map_err(|e| {
                CoordError::Parse(format!("line {}: bad value for {name}: {e}", lineno + 1))
            })?;
        }
        Ok(x)
    }

    /// Fixed-column MPS text. Names longer than eight characters spill past
    /// the classic column limits, so readers should use free-format parsing.
    pub fn to_mps(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "NAME          UDN_PPP_FEASIBILITY");
        let _ = writeln!(s, "ROWS");
        let _ = writeln!(s, " N  FEAS");
        for row in &self.rows {
            let code = match row.sense {
                RowSense::Le => 'L',
                RowSense::Eq => 'E',
            };
            let _ = writeln!(s, " {code}  {}", row.name);
        }
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.variables.len()];
        for (r, row) in self.rows.iter().enumerate() {
            for &(j, c) in &row.coeffs {
                columns[j].push((r, c));
            }
        }
        let _ = writeln!(s, "COLUMNS");
        let mut in_int = false;
        for (j, var) in self.variables.iter().enumerate() {
            let is_int = var.kind == VarKind::Binary;
            if is_int != in_int {
                let tag = if is_int { "INTORG" } else { "INTEND" };
                let _ = writeln!(s, "    MARKER                 'MARKER'                 '{tag}'");
                in_int = is_int;
            }
            for &(r, c) in &columns[j] {
                let _ = writeln!(s, "    {:<10} {:<14} {}", var.name, self.rows[r].name, mps_number(c));
            }
        }
        if in_int {
            let _ = writeln!(s, "    MARKER                 'MARKER'                 'INTEND'");
        }
        let _ = writeln!(s, "RHS");
        for row in self.rows.iter().filter(|r| r.rhs != 0.0) {
            let _ = writeln!(s, "    RHS        {:<14} {}", row.name, mps_number(row.rhs));
        }
        let _ = writeln!(s, "BOUNDS");
        for var in &self.variables {
            match var.kind {
                VarKind::Binary => {
                    let _ = writeln!(s, " BV BND       {}", var.name);
                }
                VarKind::Continuous if var.upper.is_finite() => {
                    let _ = writeln!(s, " UP BND       {:<14} {}", var.name, mps_number(var.upper));
                }
                VarKind::Continuous => {}
            }
        }
        let _ = writeln!(s, "ENDATA");
        s
    }
}

fn mps_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Builds the feasibility model for target `θ₀` and renders it as MPS.
pub fn export_ilp(
    instance: &NetworkInstance,
    theta0: f64,
    n_partitions: usize,
) -> Result<(IlpModel, String)> {
    let model = IlpModel::build(instance, theta0, n_partitions)?;
    let text = model.to_mps();
    Ok((model, text))
}
