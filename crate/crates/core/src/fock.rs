//! Truncated Fock-space algebra for the average modulation state.
//!
//! The quantity of interest is the Alice–Alice' correlation of the purified
//! modulation, `Z = 2 Tr[ρ^½ a ρ^½ a†]`, where `ρ` is the probability-weighted
//! mixture of the constellation's coherent states.
//!
//! Two evaluation paths are provided:
//!
//! - the dense path ([`average_state`], [`psd_sqrt`], [`correlation_z`]) works
//!   on the full `n_cut × n_cut` matrix and checks every invariant;
//! - [`FactoredState`] uses the square-QAM symmetries. A quarter-turn maps the
//!   constellation onto itself, so `ρ` only couples Fock levels congruent mod 4
//!   and splits into four blocks, each of the form `B Bᴴ` with one column per
//!   symbol of a single quadrant. The block square roots come from thin SVDs,
//!   which costs `O(n_cut · M²/16)` instead of `O(n_cut³)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::constellation::Constellation;
use crate::error::{Error, Result};

pub const DEFAULT_TRACE_TOLERANCE: f64 = 1e-10;
pub const MIN_CUTOFF: usize = 20;

const HERMITIAN_TOL: f64 = 1e-12;
const CONJUGATION_TOL: f64 = 1e-10;
const IMAG_RESIDUE_TOL: f64 = 1e-10;
/// Eigenvalues below `-NEGATIVE_EIGEN_TOL` mean the input was not a state.
const NEGATIVE_EIGEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockCutoff {
    /// Number of levels kept, `0..dimension`.
    pub dimension: usize,
    pub trace_tolerance: f64,
}

impl FockCutoff {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            trace_tolerance: DEFAULT_TRACE_TOLERANCE,
        }
    }

    pub fn doubled(&self) -> Self {
        Self {
            dimension: 2 * self.dimension,
            ..*self
        }
    }
}

/// Hermitian, unit-trace (up to truncation) operator in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates hermiticity and the trace window `[1 - trace_tolerance, 1]`.
    pub fn from_matrix(entries: DMatrix<Complex64>, trace_tolerance: f64) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::ParameterDomain(format!(
                "density matrix shape {}x{}",
                n,
                entries.ncols()
            )));
        }
        for i in 0..n {
            for j in i..n {
                let d = entries[(i, j)] - entries[(j, i)].conj();
                if d.norm() > HERMITIAN_TOL {
                    return Err(Error::Numerical(format!("not Hermitian at ({i}, {j}): {:e}", d.norm())));
                }
            }
        }
        let trace = entries.trace().re;
        if trace > 1.0 + trace_tolerance || trace < 1.0 - trace_tolerance {
            return Err(Error::Cutoff {
                dimension: n,
                deficit: 1.0 - trace,
                tolerance: trace_tolerance,
            });
        }
        Ok(Self { entries })
    }

    pub fn dimension(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Tr[ρ a†a]`.
    pub fn photon_number(&self) -> f64 {
        (0..self.dimension()).map(|n| n as f64 * self.entries[(n, n)].re).sum()
    }

    /// Largest entrywise `|ρ* - ρ|`.
    pub fn conjugation_residue(&self) -> f64 {
        self.entries.iter().map(|z| 2.0 * z.im.abs()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.entries.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }
}

/// Fock amplitudes `c_n = exp(-|α|²/2) αⁿ / sqrt(n!)` for `n < dimension`.
///
/// Evaluated as the recurrence `c_n = c_{n-1} α / sqrt(n)` in log-magnitude
/// form, so large amplitudes do not underflow `c_0`.
pub fn coherent_amplitudes(alpha: Complex64, cutoff: &FockCutoff) -> Result<DVector<Complex64>> {
    if cutoff.dimension == 0 {
        return Err(Error::ParameterDomain("empty Fock space".into()));
    }
    let c = amplitudes(alpha, cutoff.dimension);
    let deficit = 1.0 - c.norm_squared();
    if deficit > cutoff.trace_tolerance {
        return Err(Error::Cutoff {
            dimension: cutoff.dimension,
            deficit,
            tolerance: cutoff.trace_tolerance,
        });
    }
    Ok(c)
}

const LOG_FLUSH: f64 = -345.0; // about 1e-150

fn amplitudes(alpha: Complex64, dim: usize) -> DVector<Complex64> {
    let mut out = DVector::zeros(dim);
    let r = alpha.norm();
    if r == 0.0 {
        out[0] = Complex64::new(1.0, 0.0);
        return out;
    }
    let theta = alpha.arg();
    let ln_r = r.ln();
    let mut log_mag = -0.5 * r * r;
    for n in 0..dim {
        if n > 0 {
            log_mag += ln_r - 0.5 * (n as f64).ln();
        }
        // Flushed to zero well before subnormal range; nalgebra's Householder
        // steps return NaN once squared entries underflow.
        if log_mag > LOG_FLUSH {
            out[n] = Complex64::from_polar(log_mag.exp(), n as f64 * theta);
        }
    }
    out
}

/// `ρ = Σ p(x) p(y) |x + iy⟩⟨x + iy|`, truncated to the cutoff.
pub fn average_state(c: &Constellation, cutoff: &FockCutoff) -> Result<DensityMatrix> {
    let pam = c.pam();
    let dim = cutoff.dimension;
    let m = c.cardinality();
    let mut columns = DMatrix::<Complex64>::zeros(dim, m);
    let mut k = 0;
    for (x, px) in pam.points().iter().zip(pam.probabilities()) {
        for (y, py) in pam.points().iter().zip(pam.probabilities()) {
            let amp = amplitudes(Complex64::new(*x, *y), dim);
            columns
                .column_mut(k)
                .copy_from(&(amp * Complex64::from((px * py).sqrt())));
            k += 1;
        }
    }
    let mut rho = &columns * columns.adjoint();
    // Exact hermiticity; the product is Hermitian only up to rounding.
    for i in 0..dim {
        rho[(i, i)].im = 0.0;
        for j in 0..i {
            let v = 0.5 * (rho[(i, j)] + rho[(j, i)].conj());
            rho[(i, j)] = v;
            rho[(j, i)] = v.conj();
        }
    }
    DensityMatrix::from_matrix(rho, cutoff.trace_tolerance)
}

/// Thermal state with mean photon number `nbar`, truncated and renormalized.
pub fn thermal_state(nbar: f64, dimension: usize) -> Result<DensityMatrix> {
    if !(nbar >= 0.0) {
        return Err(Error::ParameterDomain(format!("thermal nbar {nbar}")));
    }
    let ratio = nbar / (1.0 + nbar);
    let mut diag: Vec<f64> = (0..dimension).map(|n| ratio.powi(n as i32) / (1.0 + nbar)).collect();
    let total: f64 = diag.iter().sum();
    diag.iter_mut().for_each(|p| *p /= total);
    let m = DMatrix::from_diagonal(&DVector::from_iterator(
        dimension,
        diag.into_iter().map(Complex64::from),
    ));
    DensityMatrix::from_matrix(m, DEFAULT_TRACE_TOLERANCE)
}

/// Hermitian PSD square root by eigendecomposition; small negative eigenvalues are clamped.
pub fn psd_sqrt(rho: &DensityMatrix) -> Result<DMatrix<Complex64>> {
    let flushed = rho.entries.map(|z| {
        if z.norm_sqr() < 1e-280 {
            Complex64::new(0.0, 0.0)
        } else {
            z
        }
    });
    let eig = flushed.symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -NEGATIVE_EIGEN_TOL {
        return Err(Error::NonPhysicalState(min));
    }
    let roots = eig.eigenvalues.map(|l| Complex64::from(l.max(0.0).sqrt()));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= roots[j];
    }
    Ok(&scaled * v.adjoint())
}

/// Truncated annihilation operator, `a[m][n] = sqrt(n) δ(m, n-1)`.
pub fn annihilation(dimension: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(dimension, dimension);
    for n in 1..dimension {
        a[(n - 1, n)] = Complex64::from((n as f64).sqrt());
    }
    a
}

/// `Z = 2 Tr[ρ^½ a ρ^½ a†]` on the dense matrix.
///
/// Requires `ρ* = ρ`; the imaginary part of the trace is checked and dropped.
pub fn correlation_z(rho: &DensityMatrix) -> Result<f64> {
    let residue = rho.conjugation_residue();
    if residue > CONJUGATION_TOL {
        return Err(Error::SymmetryViolation(residue));
    }
    let s = psd_sqrt(rho)?;
    let n = rho.dimension();
    // Tr[S a S a†] = Σ_{m,k} S[m][k] sqrt(k+1) S[k+1][m+1] sqrt(m+1)
    let mut tr = Complex64::new(0.0, 0.0);
    for m in 0..n - 1 {
        for k in 0..n - 1 {
            tr += s[(m, k)] * s[(k + 1, m + 1)] * (((k + 1) * (m + 1)) as f64).sqrt();
        }
    }
    if tr.im.abs() > IMAG_RESIDUE_TOL {
        return Err(Error::SymmetryViolation(tr.im.abs()));
    }
    Ok(2.0 * tr.re)
}

/// Smallest cutoff whose probability-weighted Poisson tail is below `tol`.
///
/// Never below `|α_max|² + 10 |α_max| + 20`, where `α_max` ranges over
/// symbols heavy enough to matter (weight above `tol / (1000 M)`).
pub fn choose_cutoff(c: &Constellation, tol: f64) -> FockCutoff {
    let significant = tol * 1e-3 / c.cardinality() as f64;
    let peak = c.max_energy_above(significant);
    let floor = (peak + 10.0 * peak.sqrt()).ceil() as usize + 20;
    let mut dim = floor.max(MIN_CUTOFF);

    let pam = c.pam();
    let mut symbols = Vec::new();
    for (x, px) in pam.points().iter().zip(pam.probabilities()) {
        for (y, py) in pam.points().iter().zip(pam.probabilities()) {
            if px * py > significant {
                symbols.push((px * py, x * x + y * y));
            }
        }
    }
    loop {
        let deficit: f64 = symbols.iter().map(|(w, energy)| w * poisson_tail(*energy, dim)).sum();
        if deficit < tol {
            break;
        }
        dim += (dim / 8).max(1);
    }
    FockCutoff {
        dimension: dim,
        trace_tolerance: tol,
    }
}

/// `P[Poisson(mean) >= n]`, summed upward from `n`; intended for `n > mean`.
fn poisson_tail(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if (n as f64) <= mean {
        return 1.0;
    }
    let mut term = (-mean + n as f64 * mean.ln() - ln_factorial(n)).exp();
    let mut sum = term;
    let mut k = n;
    while term > 1e-17 * sum && term > 0.0 {
        k += 1;
        term *= mean / k as f64;
        sum += term;
    }
    sum.min(1.0)
}

fn ln_factorial(n: usize) -> f64 {
    if n < 32 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
}

/// The average state of a square QAM as four rotation-class blocks `B_r B_rᴴ`.
#[derive(Debug, Clone)]
pub struct FactoredState {
    dimension: usize,
    /// Row `i` of block `r` is Fock level `r + 4i`.
    blocks: [DMatrix<Complex64>; 4],
}

impl FactoredState {
    /// Factors the average state of `c`.
    ///
    /// Only symbols with `x > 0, y > 0` are stored; each stands for its orbit
    /// under quarter-turns, which contributes `4 p |c_r⟩⟨c_r|` to block `r`.
    pub fn new(c: &Constellation, cutoff: &FockCutoff) -> Result<Self> {
        let pam = c.pam();
        let dim = cutoff.dimension;
        let quadrant: Vec<(f64, f64)> = pam
            .points()
            .iter()
            .zip(pam.probabilities())
            .filter(|(x, _)| **x > 0.0)
            .map(|(x, p)| (*x, *p))
            .collect();
        let q = quadrant.len() * quadrant.len();
        let mut blocks: [DMatrix<Complex64>; 4] = std::array::from_fn(|r| DMatrix::zeros(class_len(dim, r), q));
        let mut k = 0;
        for (x, px) in &quadrant {
            for (y, py) in &quadrant {
                let amp = amplitudes(Complex64::new(*x, *y), dim);
                let scale = 2.0 * (px * py).sqrt();
                for (n, v) in amp.iter().enumerate() {
                    blocks[n % 4][(n / 4, k)] = v * scale;
                }
                k += 1;
            }
        }
        let state = Self { dimension: dim, blocks };
        let deficit = 1.0 - state.trace();
        if deficit > cutoff.trace_tolerance {
            return Err(Error::Cutoff {
                dimension: dim,
                deficit,
                tolerance: cutoff.trace_tolerance,
            });
        }
        Ok(state)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum()
    }

    pub fn photon_number(&self) -> f64 {
        let mut total = 0.0;
        for (r, b) in self.blocks.iter().enumerate() {
            for (i, row) in b.row_iter().enumerate() {
                total += (r + 4 * i) as f64 * row.norm_squared();
            }
        }
        total
    }

    /// Dense `ρ`, for cross-checks.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut rho = DMatrix::zeros(self.dimension, self.dimension);
        for (r, b) in self.blocks.iter().enumerate() {
            let block = b * b.adjoint();
            for i in 0..block.nrows() {
                for j in 0..block.ncols() {
                    rho[(r + 4 * i, r + 4 * j)] = block[(i, j)];
                }
            }
        }
        rho
    }

    /// `Z = 2 Tr[ρ^½ a ρ^½ a†]` from the block factorization.
    ///
    /// With `B_r = U_r Σ_r V_rᴴ`, the block root is `U_r Σ_r U_rᴴ` and the trace
    /// reduces to `Σ_r Σ_ij σ_{r-1,i} σ_{r,j} |(U_{r-1}ᴴ a U_r)_ij|²`, because
    /// `a` maps class `r` to class `r - 1`.
    pub fn correlation_z(&self) -> Result<f64> {
        let factors: Vec<(DMatrix<Complex64>, DVector<f64>)> = self
            .blocks
            .iter()
            .map(|b| {
                if b.nrows() == 0 {
                    return Ok((DMatrix::zeros(0, 0), DVector::zeros(0)));
                }
                if b.ncols() > b.nrows() {
                    // B Bᴴ = Rᴴ R with Bᴴ = Q R, so a wide block shrinks to square.
                    jacobi_svd(b.adjoint().qr().r().adjoint())
                } else {
                    jacobi_svd(b.clone())
                }
            })
            .collect::<Result<_>>()?;

        let mut half = 0.0;
        for r in 0..4 {
            let prev = (r + 3) % 4;
            let (u_r, s_r) = &factors[r];
            let (u_p, s_p) = &factors[prev];
            if u_r.nrows() == 0 || u_p.nrows() == 0 {
                continue;
            }
            // a U_r, expressed in the rows of class r - 1.
            let mut shifted = DMatrix::<Complex64>::zeros(u_p.nrows(), u_r.ncols());
            for j in 0..u_r.nrows() {
                let level = r + 4 * j;
                if level == 0 {
                    continue;
                }
                let target = (level - 1) / 4;
                if target >= shifted.nrows() {
                    continue;
                }
                let amp = (level as f64).sqrt();
                for c in 0..u_r.ncols() {
                    shifted[(target, c)] = u_r[(j, c)] * amp;
                }
            }
            let k = u_p.adjoint() * shifted;
            for i in 0..k.nrows() {
                for j in 0..k.ncols() {
                    half += s_p[i] * s_r[j] * k[(i, j)].norm_sqr();
                }
            }
        }
        Ok(2.0 * half)
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;
const JACOBI_NEGLIGIBLE: f64 = 1e-14;

/// Thin SVD of a tall matrix by one-sided (Hestenes) Jacobi rotations.
///
/// Returns `U` and the singular values in column order, unsorted. Columns
/// with zero norm come back as zero columns of `U`. Used instead of the
/// bidiagonal SVD, which can return a wrong factorization without flagging it
/// when two singular values nearly coincide.
fn jacobi_svd(mut a: DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DVector<f64>)> {
    let (rows, q) = a.shape();
    let tol = f64::EPSILON * rows.max(1) as f64;
    // Columns this far below the total are rounding residue of dependent
    // columns. Rotating them never settles, and they carry no weight in `Z`.
    let floor = JACOBI_NEGLIGIBLE * a.norm();
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..q {
            for j in i + 1..q {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dotc(&a.column(j));
                let g = gamma.norm();
                if g == 0.0 || g <= tol * alpha.sqrt() * beta.sqrt() || alpha.min(beta).sqrt() <= floor {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..rows {
                    let x = a[(k, i)];
                    let y = a[(k, j)] * phase.conj();
                    a[(k, i)] = x * c - y * s;
                    a[(k, j)] = x * s + y * c;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi SVD did not converge".into()));
    }
    let sigma = DVector::from_iterator(q, a.column_iter().map(|c| c.norm()));
    for (j, mut col) in a.column_iter_mut().enumerate() {
        if sigma[j] > 0.0 {
            col /= Complex64::from(sigma[j]);
        }
    }
    Ok((a, sigma))
}

fn class_len(dim: usize, r: usize) -> usize {
    if dim > r {
        (dim - r).div_ceil(4)
    } else {
        0
    }
}

/// `Z` for a constellation at an automatically chosen cutoff.
pub fn constellation_correlation(c: &Constellation, tol: f64) -> Result<(f64, FockCutoff)> {
    let cutoff = choose_cutoff(c, tol);
    let z = FactoredState::new(c, &cutoff)?.correlation_z()?;
    Ok((z, cutoff))
}
