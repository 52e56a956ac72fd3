//! Spectral radius of non-negative matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoordError, Result};

pub const MAX_ITERATIONS: usize = 100_000;
pub const RATIO_TOLERANCE: f64 = 1e-12;
/// Final relative residual `‖Mx − λx‖∞ / (λ‖x‖∞)` accepted after convergence.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
/// Bracket width accepted once Noda iteration stops making progress.
const STALL_TOLERANCE: f64 = 1e-9;

/// Perron root (spectral radius) of a square, entrywise non-negative matrix.
///
/// The matrix is split into strongly connected components; the root is the
/// largest component root. Each irreducible component is solved by Noda
/// iteration from the all-ones vector, with the Collatz-Wielandt ratios
/// `min/max (Mx)_i / x_i` bracketing the root at every step. Plain power
/// iteration (shifted by `sI` when the diagonal is zero, to break
/// periodicity) is the fallback.
pub fn perron_root(matrix: &DMatrix<f64>) -> Result<f64> {
    let n = matrix.nrows();
    if n == 0 || matrix.ncols() != n {
        return Err(CoordError::InvalidInput(format!(
            "perron_root needs a non-empty square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if let Some(bad) = matrix.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(CoordError::InvalidInput(format!(
            "perron_root needs finite non-negative entries, found {bad}"
        )));
    }
    if n == 1 {
        return Ok(matrix[(0, 0)]);
    }
    let mut root = 0.0f64;
    for comp in strongly_connected_components(matrix) {
        let r = if comp.len() == 1 {
            matrix[(comp[0], comp[0])]
        } else {
            let sub = matrix.select_rows(&comp).select_columns(&comp);
            irreducible_root(&sub)?
        };
        root = root.max(r);
    }
    Ok(root)
}

/// Strongly connected components of the directed graph `i -> j` iff
/// `m[(i, j)] > 0`. Dense transitive closure; matrices here are small.
pub(crate) fn strongly_connected_components(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
        for (j, cell) in row.iter_mut().enumerate() {
            if m[(i, j)] > 0.0 {
                *cell = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut comps = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let comp: Vec<usize> = (i..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &comp {
            assigned[j] = true;
        }
        comps.push(comp);
    }
    comps
}

fn irreducible_root(m: &DMatrix<f64>) -> Result<f64> {
    match noda_root(m) {
        Some(root) => Ok(root),
        None => power_root(m),
    }
}

/// Collatz-Wielandt ratios `(min, max)` of `(Mx)_i / x_i`.
fn cw_bracket(m: &DMatrix<f64>, x: &DVector<f64>) -> (f64, f64) {
    let y = m * x;
    y.iter()
        .zip(x.iter())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (a, b)| (lo.min(a / b), hi.max(a / b)))
}

/// Noda iteration: inverse iteration shifted by the current upper
/// Collatz-Wielandt bound. The bound decreases monotonically to the root and
/// converges quadratically, even for nearly decoupled matrices where plain
/// power iteration crawls. `None` means a numerical breakdown.
fn noda_root(m: &DMatrix<f64>) -> Option<f64> {
    noda(m, DVector::from_element(m.nrows(), 1.0)).map(|(root, _)| root)
}

/// Perron root and a positive eigenvector approximation, refined by Noda
/// iteration from the positive vector `start`. The vector returned is the
/// iterate with the tightest Collatz-Wielandt bracket.
pub(crate) fn perron_vector(m: &DMatrix<f64>, start: DVector<f64>) -> Option<(f64, DVector<f64>)> {
    if start.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    noda(m, start)
}

fn noda(m: &DMatrix<f64>, mut x: DVector<f64>) -> Option<(f64, DVector<f64>)> {
    let n = m.nrows();
    // Every iterate gives valid Collatz-Wielandt bounds, so keep the tightest.
    let (mut best_lo, mut best_hi) = (0.0f64, f64::INFINITY);
    let mut best_x = x.clone();
    let mut best_width = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..200 {
        let (lo, hi) = cw_bracket(m, &x);
        if !(hi.is_finite() && hi > 0.0) {
            return None;
        }
        if hi < best_hi || lo > best_lo {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if hi - lo < best_width {
            best_width = hi - lo;
            best_x.clone_from(&x);
        }
        best_lo = best_lo.max(lo);
        best_hi = best_hi.min(hi);
        let width = best_hi - best_lo;
        let done = Some((0.5 * (best_lo + best_hi), best_x.clone()));
        if width <= RATIO_TOLERANCE * best_hi {
            return done;
        }
        // Rounding floor reached, typically when the two largest eigenvalues
        // nearly coincide and tiny eigenvector entries lose relative accuracy.
        if stalled >= 3 && width <= STALL_TOLERANCE * best_hi {
            return done;
        }
        let shifted = DMatrix::identity(n, n) * hi - m;
        let mut z = match shifted.lu().solve(&x) {
            Some(z) => z,
            // Exactly singular: `hi` is the root to working precision.
            None => return Some((hi, x)),
        };
        // A shift that rounded to just below the root flips the sign of the
        // whole Perron vector.
        if z.iter().all(|v| *v < 0.0) {
            z.neg_mut();
        }
        if z.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return if width <= STALL_TOLERANCE * best_hi { done } else { None };
        }
        x = &z / z.max();
    }
    None
}

fn power_root(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    let row_sums: Vec<f64> = (0..n).map(|i| m.row(i).sum()).collect();
    let has_diagonal = (0..n).any(|i| m[(i, i)] > 0.0);
    // ρ lies between the smallest and largest row sums, so the geometric mean
    // is a shift on the scale of ρ.
    let shift = if has_diagonal {
        0.0
    } else {
        let lo = row_sums.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = row_sums.iter().copied().fold(0.0, f64::max);
        (lo * hi).sqrt()
    };

    let mut x = DVector::from_element(n, 1.0);
    let mut previous = f64::NAN;
    for _ in 0..MAX_ITERATIONS {
        let y = m * &x + &x * shift;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let ratio = y[i] / x[i];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        let estimate = 0.5 * (lo + hi) - shift;
        let scale = y.max();
        if !(scale.is_finite() && scale > 0.0) {
            return Err(CoordError::NoConvergence(
                "power iteration vector degenerated".into(),
            ));
        }
        x = y / scale;
        let bracket_closed = hi - lo <= RATIO_TOLERANCE * estimate.abs().max(f64::MIN_POSITIVE);
        let stalled = (estimate - previous).abs() <= RATIO_TOLERANCE * estimate.abs();
        if bracket_closed || stalled {
            let residual = (m * &x - &x * estimate).amax() / (estimate * x.amax());
            if residual <= RESIDUAL_TOLERANCE {
                return Ok(estimate);
            }
            if bracket_closed {
                return Err(CoordError::NoConvergence(format!(
                    "Perron residual {residual:e} above tolerance"
                )));
            }
        }
        previous = estimate;
    }
    Err(CoordError::NoConvergence(format!(
        "power iteration exceeded {MAX_ITERATIONS} iterations"
    )))
}
