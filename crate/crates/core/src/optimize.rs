//! One-dimensional search helpers: grid-seeded golden-section maximization
//! and sign-change bisection.
//!
//! Objectives are fallible, so every helper threads `Result` through and
//! carries an arbitrary payload alongside the score.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Best point found by a search, with whatever the objective returned there.
#[derive(Debug, Clone)]
pub struct Maximum<P> {
    pub x: f64,
    pub value: f64,
    pub payload: P,
}

/// `count` points from `lo` to `hi` inclusive, evenly spaced in log scale.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || count < 2 {
        return Err(Error::ParameterDomain(format!(
            "geometric grid [{lo}, {hi}] with {count} points"
        )));
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count).map(|i| lo * (step * i as f64).exp()).collect();
    grid[count - 1] = hi;
    Ok(grid)
}

/// Golden-section maximization on `[lo, hi]` until the bracket is narrower than `tol`.
///
/// Returns the best probe seen; the endpoints themselves are not evaluated.
pub fn golden_section<P, F>(lo: f64, hi: f64, tol: f64, mut f: F) -> Result<Maximum<P>>
where
    F: FnMut(f64) -> Result<(f64, P)>,
{
    if !(hi >= lo) || !(tol > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "golden section on [{lo}, {hi}] to {tol}"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let probe = |x: f64, f: &mut F| -> Result<Maximum<P>> {
        let (value, payload) = f(x)?;
        Ok(Maximum { x, value, payload })
    };
    let mut left = probe(b - INV_PHI * (b - a), &mut f)?;
    let mut right = probe(a + INV_PHI * (b - a), &mut f)?;
    let mut best: Option<Maximum<P>> = None;
    while b - a > tol {
        if left.value >= right.value {
            b = right.x;
            let fresh = probe(b - INV_PHI * (b - a), &mut f)?;
            let old_left = std::mem::replace(&mut left, fresh);
            keep_best(&mut best, std::mem::replace(&mut right, old_left));
        } else {
            a = left.x;
            let fresh = probe(a + INV_PHI * (b - a), &mut f)?;
            let old_right = std::mem::replace(&mut right, fresh);
            keep_best(&mut best, std::mem::replace(&mut left, old_right));
        }
    }
    keep_best(&mut best, left);
    keep_best(&mut best, right);
    Ok(best.expect("at least two probes"))
}

fn keep_best<P>(best: &mut Option<Maximum<P>>, cand: Maximum<P>) {
    match best {
        Some(b) if b.value >= cand.value => {}
        _ => *best = Some(cand),
    }
}

/// `(x, value)` pairs of every grid evaluation, in grid order.
pub type Samples = Vec<(f64, f64)>;

/// Evaluates `f` on `grid`, then refines around the best grid point.
///
/// The golden-section bracket spans the two grid neighbours of the best
/// point (clamped at the ends). The result is never worse than the grid.
pub fn grid_then_golden<P, F>(grid: &[f64], tol: f64, mut f: F) -> Result<(Maximum<P>, Samples)>
where
    F: FnMut(f64) -> Result<(f64, P)>,
{
    if grid.is_empty() {
        return Err(Error::ParameterDomain("empty search grid".into()));
    }
    let mut samples = Vec::with_capacity(grid.len());
    let mut best: Option<Maximum<P>> = None;
    let mut best_idx = 0;
    for (i, &x) in grid.iter().enumerate() {
        let (v, p) = f(x)?;
        samples.push((x, v));
        if best.as_ref().is_none_or(|b| v > b.value) {
            best_idx = i;
            best = Some(Maximum {
                x,
                value: v,
                payload: p,
            });
        }
    }
    let mut best = best.expect("non-empty grid");
    if grid.len() > 1 {
        let lo = grid[best_idx.saturating_sub(1)];
        let hi = grid[(best_idx + 1).min(grid.len() - 1)];
        let refined = golden_section(lo, hi, tol, &mut f)?;
        if refined.value > best.value {
            best = refined;
        }
    }
    Ok((best, samples))
}

/// Shrinks `[inside, outside]` around a sign change of `f` until its width is below `tol`.
///
/// `f(inside) > 0` and `f(outside) <= 0` are assumed; the bracket may be
/// given in either order. Returns the final `(inside, outside)` pair.
pub fn bisect_boundary<F>(mut inside: f64, mut outside: f64, tol: f64, mut f: F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::ParameterDomain(format!("bisection tolerance {tol}")));
    }
    while (outside - inside).abs() > tol {
        let mid = 0.5 * (inside + outside);
        if f(mid)? > 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok((inside, outside))
}
