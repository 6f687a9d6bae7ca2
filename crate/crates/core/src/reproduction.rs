//! Infinitesimal-model mixing operator `B[f]`.
//!
//! For a spatial cell `l` with trait row `F_l` and population size
//! `rho_l`, the discrete operator is
//!
//! ```text
//! B_lk = dtheta^2 / rho_l * sum_{i,j} F_li G(theta_k - (theta_i + theta_j) / 2) F_lj
//! ```
//!
//! and `B_lk = 0` whenever `rho_l <= 0`. [`reproduce_bruteforce`] evaluates
//! the double sum literally, `O(N^3)` per row. [`reproduce_fast`] regroups it
//! by the parental sum index `m = i + j`: with `c_m = sum_{i+j=m} F_li F_lj`
//! the self-convolution of the row, the kernel argument becomes
//! `(2k - m) dtheta / 2`, so a single one-dimensional kernel table on the
//! half-step lattice suffices and the cost drops to `O(N^2)`. All sums are
//! direct (no FFT) so that non-negative input gives non-negative output.

use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{check_shape, DensityVector, Field, Grid};

/// Normalized Gaussian density with variance `lambda2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegregationKernel {
    pub lambda2: f64,
    norm: f64,
    inv_two_var: f64,
}

impl SegregationKernel {
    pub fn new(lambda2: f64) -> Result<Self> {
        if !(lambda2.is_finite() && lambda2 > 0.0) {
            return Err(Error::Domain(format!(
                "segregational variance must be positive, got {lambda2}"
            )));
        }
        Ok(Self {
            lambda2,
            norm: 1.0 / (2.0 * std::f64::consts::PI * lambda2).sqrt(),
            inv_two_var: 1.0 / (2.0 * lambda2),
        })
    }

    #[inline]
    pub fn evaluate(&self, d: f64) -> f64 {
        self.norm * (-d * d * self.inv_two_var).exp()
    }
}

/// Density of an offspring trait `theta` given parental traits `theta1`, `theta2`.
#[inline]
pub fn kernel_eval(kernel: &SegregationKernel, theta: f64, theta1: f64, theta2: f64) -> f64 {
    kernel.evaluate(theta - (theta1 + theta2) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReproductionMethod {
    BruteForce,
    #[default]
    Fast,
}

impl ReproductionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ReproductionMethod::BruteForce => "brute",
            ReproductionMethod::Fast => "fast",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproductionOutput {
    pub values: Array2<f64>,
    pub method: ReproductionMethod,
}

fn check_inputs(field: &Field, rho: &DensityVector, grid: &Grid) -> Result<()> {
    check_shape(field.values.dim(), grid)?;
    if rho.len() != grid.nx() {
        return Err(Error::Shape {
            expected: format!("density of length {}", grid.nx()),
            found: format!("length {}", rho.len()),
        });
    }
    Ok(())
}

/// One row of the literal triple sum.
pub fn bruteforce_row_into(
    row: &[f64],
    rho: f64,
    kernel: &SegregationKernel,
    thetas: &[f64],
    dtheta: f64,
    out: &mut [f64],
) {
    if rho <= 0.0 {
        out.fill(0.0);
        return;
    }
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, fi) in row.iter().enumerate() {
            if *fi == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for (j, fj) in row.iter().enumerate() {
                inner += kernel_eval(kernel, thetas[k], thetas[i], thetas[j]) * fj;
            }
            acc += fi * inner;
        }
        *o = dtheta * dtheta * acc / rho;
    }
}

/// Reference evaluation of `B[f]` by the literal `O(N_theta^3)` triple sum.
pub fn reproduce_bruteforce(
    field: &Field,
    rho: &DensityVector,
    kernel: &SegregationKernel,
    grid: &Grid,
) -> Result<ReproductionOutput> {
    check_inputs(field, rho, grid)?;
    let mut values = Array2::zeros(grid.shape());
    values
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(l, mut out)| {
            let row = field.values.row(l);
            bruteforce_row_into(
                row.as_slice().expect("standard layout"),
                rho.rho[l],
                kernel,
                &grid.thetas,
                grid.dtheta,
                out.as_slice_mut().expect("standard layout"),
            );
        });
    Ok(ReproductionOutput {
        values,
        method: ReproductionMethod::BruteForce,
    })
}

/// `c[m] = sum_{i+j=m} row[i] row[j]`, of length `2 n - 1`.
pub fn self_convolution(row: &[f64]) -> Vec<f64> {
    let mut c = Vec::new();
    self_convolution_into(row, 1.0, &mut c);
    c
}

/// Self-convolution of `row / w`.
fn self_convolution_into(row: &[f64], w: f64, c: &mut Vec<f64>) {
    let n = row.len();
    c.clear();
    if n == 0 {
        return;
    }
    c.resize(2 * n - 1, 0.0);
    for (i, &ri) in row.iter().enumerate() {
        if ri == 0.0 {
            continue;
        }
        let ri = ri / w;
        c[2 * i] += ri * ri;
        let twice = 2.0 * ri;
        for (cm, &rj) in c[2 * i + 1..].iter_mut().zip(&row[i + 1..]) {
            *cm += twice * (rj / w);
        }
    }
}

/// Dot product with a fixed four-lane accumulation order.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Kernel tabulated on the half-step lattice `n * dtheta / 2`, symmetric
/// around the centre, plus the per-row regrouped evaluation.
///
/// The table stops where the Gaussian underflows below the smallest normal
/// double, so dropping the remaining lattice points changes no result.
#[derive(Debug, Clone)]
pub struct FastReproduction {
    /// `table[n + half] = G((n as f64) * dtheta / 2)` for `|n| <= half`.
    table: Vec<f64>,
    half: usize,
    dtheta: f64,
    ntheta: usize,
}

impl FastReproduction {
    pub fn new(kernel: &SegregationKernel, grid: &Grid) -> Self {
        let ntheta = grid.ntheta();
        let max_offset = 2 * ntheta.saturating_sub(1);
        let step = grid.dtheta / 2.0;
        let mut half = 0;
        while half < max_offset {
            let v = kernel.evaluate((half + 1) as f64 * step);
            if !(v >= f64::MIN_POSITIVE) {
                break;
            }
            half += 1;
        }
        let table = (0..=2 * half)
            .map(|idx| kernel.evaluate((idx as f64 - half as f64) * step))
            .collect();
        Self {
            table,
            half,
            dtheta: grid.dtheta,
            ntheta,
        }
    }

    /// Number of half-steps on each side of the kernel centre kept in the table.
    pub fn half_width(&self) -> usize {
        self.half
    }

    /// Evaluates one row; `scratch` holds the self-convolution.
    pub fn row_into(&self, row: &[f64], rho: f64, out: &mut [f64], scratch: &mut Vec<f64>) {
        debug_assert_eq!(row.len(), self.ntheta);
        if rho <= 0.0 {
            out.fill(0.0);
            return;
        }
        let Some(lo) = row.iter().position(|v| *v != 0.0) else {
            out.fill(0.0);
            return;
        };
        let hi = row.iter().rposition(|v| *v != 0.0).unwrap_or(lo);
        // normalize so that products of tiny densities cannot underflow
        let s = row[lo..=hi].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self_convolution_into(&row[lo..=hi], s, scratch);
        // scratch[q] holds c at m = 2 lo + q
        let m_lo = 2 * lo as isize;
        let m_hi = 2 * hi as isize;
        let half = self.half as isize;
        let scale = self.dtheta * self.dtheta * (s / rho) * s;
        for (k, o) in out.iter_mut().enumerate() {
            let centre = 2 * k as isize;
            let start = m_lo.max(centre - half);
            let end = m_hi.min(centre + half);
            if start > end {
                *o = 0.0;
                continue;
            }
            let c = &scratch[(start - m_lo) as usize..=(end - m_lo) as usize];
            // symmetric table: G((2k - m) h) = table[m - 2k + half]
            let t0 = (start - centre + half) as usize;
            let g = &self.table[t0..t0 + c.len()];
            *o = scale * dot(c, g);
        }
    }

    pub fn apply(&self, field: &Field, rho: &DensityVector, values: &mut Array2<f64>) {
        values
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each_init(Vec::new, |scratch, (l, mut out)| {
                let row = field.values.row(l);
                self.row_into(
                    row.as_slice().expect("standard layout"),
                    rho.rho[l],
                    out.as_slice_mut().expect("standard layout"),
                    scratch,
                );
            });
    }
}

/// Same operator as [`reproduce_bruteforce`], regrouped by parental trait sum.
pub fn reproduce_fast(
    field: &Field,
    rho: &DensityVector,
    kernel: &SegregationKernel,
    grid: &Grid,
) -> Result<ReproductionOutput> {
    check_inputs(field, rho, grid)?;
    let fast = FastReproduction::new(kernel, grid);
    let mut values = Array2::zeros(grid.shape());
    fast.apply(field, rho, &mut values);
    Ok(ReproductionOutput {
        values,
        method: ReproductionMethod::Fast,
    })
}

pub fn reproduce(
    method: ReproductionMethod,
    field: &Field,
    rho: &DensityVector,
    kernel: &SegregationKernel,
    grid: &Grid,
) -> Result<ReproductionOutput> {
    match method {
        ReproductionMethod::BruteForce => reproduce_bruteforce(field, rho, kernel, grid),
        ReproductionMethod::Fast => reproduce_fast(field, rho, kernel, grid),
    }
}

/// Largest `|fast - brute|` relative to `max |brute|` (absolute when brute is zero).
pub fn max_relative_deviation(fast: &Array2<f64>, brute: &Array2<f64>) -> f64 {
    let scale = brute.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = fast
        .iter()
        .zip(brute)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}
