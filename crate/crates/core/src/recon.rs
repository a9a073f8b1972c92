//! Surface reconstruction: integrate gradient maps into height maps by
//! solving a 2D Poisson equation, lift height maps to 3D point clouds, and
//! compute gradient-field MAE metrics.
//!
//! The Poisson problem is discretized with the 5-point Laplacian on the
//! grid interior with a zero-Dirichlet ring (the gel is clamped at the
//! sensor frame). The primary solver diagonalizes the Laplacian with a
//! type-I discrete sine transform, computed via FFT; a conjugate-gradient
//! pass refines the solution in the unlikely case the direct solve misses
//! the residual target.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::cloud::{Point3, PointCloud3};
use crate::error::{Error, Result};
use crate::grid::{GradientGrid, ScalarGrid};

/// Relative residual the solver must reach: `||L f - div g|| <= RTOL * ||div g||`.
const RESIDUAL_RTOL: f64 = 1e-8;
/// Absolute residual floor used when the right-hand side is zero.
const RESIDUAL_ATOL: f64 = 1e-12;

/// Solve `laplacian(f) = div(g)` for the height field `f` with a
/// zero-Dirichlet boundary ring. Returns the field minimizing
/// `||grad f - g||^2` under that boundary condition.
pub fn integrate_gradients(g: &GradientGrid) -> Result<ScalarGrid> {
    if g.rows < 3 || g.cols < 3 {
        return Err(Error::DimensionMismatch {
            expected: "grid of at least 3x3".into(),
            got: format!("{}x{}", g.rows, g.cols),
        });
    }
    let (dx, dy) = g.pitch_mm;
    let m = g.rows - 2; // interior rows
    let n = g.cols - 2; // interior cols

    // Divergence with the same central-difference stencil as the forward
    // gradient operator, evaluated on the interior.
    let mut rhs = vec![0.0; m * n];
    for r in 0..m {
        for c in 0..n {
            let (gr, gc) = (r + 1, c + 1);
            let ddx = (g.gx[g.idx(gr, gc + 1)] - g.gx[g.idx(gr, gc - 1)]) / (2.0 * dx);
            let ddy = (g.gy[g.idx(gr + 1, gc)] - g.gy[g.idx(gr - 1, gc)]) / (2.0 * dy);
            rhs[r * n + c] = ddx + ddy;
        }
    }
    let rhs_norm = norm2(&rhs);
    let target = (RESIDUAL_RTOL * rhs_norm).max(RESIDUAL_ATOL);

    let mut interior = rhs.clone();
    dst_poisson_solve(&mut interior, m, n, dx, dy);

    let mut residual = residual_norm(&interior, &rhs, m, n, dx, dy);
    if residual > target {
        let (refined, fallback_residual, converged) =
            conjugate_gradient(&rhs, Some(interior), m, n, dx, dy, target, 20 * (m + n));
        interior = refined;
        residual = fallback_residual;
        if !converged && residual > target {
            return Err(Error::SolverDiverged { residual });
        }
    }

    let mut out = ScalarGrid::zeros(g.rows, g.cols, g.pitch_mm);
    for r in 0..m {
        for c in 0..n {
            out.set(r + 1, c + 1, interior[r * n + c]);
        }
    }
    Ok(out)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||L f - rhs||_2` over the interior, with the zero ring implied.
fn residual_norm(f: &[f64], rhs: &[f64], m: usize, n: usize, dx: f64, dy: f64) -> f64 {
    let mut acc = 0.0;
    let lap = |f: &[f64], r: usize, c: usize| -> f64 {
        let fc = f[r * n + c];
        let left = if c > 0 { f[r * n + c - 1] } else { 0.0 };
        let right = if c + 1 < n { f[r * n + c + 1] } else { 0.0 };
        let up = if r > 0 { f[(r - 1) * n + c] } else { 0.0 };
        let down = if r + 1 < m { f[(r + 1) * n + c] } else { 0.0 };
        (left + right - 2.0 * fc) / (dx * dx) + (up + down - 2.0 * fc) / (dy * dy)
    };
    for r in 0..m {
        for c in 0..n {
            let d = lap(f, r, c) - rhs[r * n + c];
            acc += d * d;
        }
    }
    acc.sqrt()
}

/// In-place direct Poisson solve via DST-I diagonalization.
fn dst_poisson_solve(data: &mut [f64], m: usize, n: usize, dx: f64, dy: f64) {
    let mut planner = FftPlanner::new();
    let fft_row = planner.plan_fft_forward(2 * (n + 1));
    let fft_col = planner.plan_fft_forward(2 * (m + 1));
    let mut scratch_row =
        vec![Complex::new(0.0, 0.0); fft_row.get_inplace_scratch_len().max(2 * (n + 1))];
    let mut scratch_col =
        vec![Complex::new(0.0, 0.0); fft_col.get_inplace_scratch_len().max(2 * (m + 1))];
    let mut buf_row = vec![Complex::new(0.0, 0.0); 2 * (n + 1)];
    let mut buf_col = vec![Complex::new(0.0, 0.0); 2 * (m + 1)];

    let dst_rows = |data: &mut [f64],
                    rows: usize,
                    cols: usize,
                    buf: &mut Vec<Complex<f64>>,
                    scratch: &mut Vec<Complex<f64>>,
                    fft: &std::sync::Arc<dyn rustfft::Fft<f64>>| {
        for r in 0..rows {
            let line = &mut data[r * cols..(r + 1) * cols];
            dst1_in_place(line, buf, scratch, fft);
        }
    };

    // Forward transform along x then y.
    dst_rows(data, m, n, &mut buf_row, &mut scratch_row, &fft_row);
    let mut tr = transpose(data, m, n);
    dst_rows(&mut tr, n, m, &mut buf_col, &mut scratch_col, &fft_col);

    // Divide by Laplacian eigenvalues; both factors are negative so the sum
    // never vanishes.
    let lambda_x: Vec<f64> = (0..n)
        .map(|k| (2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos() - 2.0) / (dx * dx))
        .collect();
    let lambda_y: Vec<f64> = (0..m)
        .map(|k| (2.0 * (std::f64::consts::PI * (k + 1) as f64 / (m + 1) as f64).cos() - 2.0) / (dy * dy))
        .collect();
    let scale = 4.0 / ((n + 1) as f64 * (m + 1) as f64);
    for kx in 0..n {
        for ky in 0..m {
            tr[kx * m + ky] *= scale / (lambda_x[kx] + lambda_y[ky]);
        }
    }

    // Inverse = forward DST again (with the scale already applied).
    dst_rows(&mut tr, n, m, &mut buf_col, &mut scratch_col, &fft_col);
    let back = transpose(&tr, n, m);
    data.copy_from_slice(&back);
    dst_rows(data, m, n, &mut buf_row, &mut scratch_row, &fft_row);
}

fn transpose(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// DST-I of a real sequence via the odd extension FFT of length 2(S+1).
fn dst1_in_place(
    x: &mut [f64],
    buf: &mut [Complex<f64>],
    scratch: &mut [Complex<f64>],
    fft: &std::sync::Arc<dyn rustfft::Fft<f64>>,
) {
    let s = x.len();
    let l = 2 * (s + 1);
    buf[0] = Complex::new(0.0, 0.0);
    buf[s + 1] = Complex::new(0.0, 0.0);
    for j in 1..=s {
        buf[j] = Complex::new(x[j - 1], 0.0);
        buf[l - j] = Complex::new(-x[j - 1], 0.0);
    }
    fft.process_with_scratch(buf, scratch);
    for k in 1..=s {
        x[k - 1] = -buf[k].im / 2.0;
    }
}

/// Plain conjugate gradient on the (negated, SPD) Dirichlet Laplacian.
/// Returns (solution, final residual, converged).
fn conjugate_gradient(
    rhs: &[f64],
    init: Option<Vec<f64>>,
    m: usize,
    n: usize,
    dx: f64,
    dy: f64,
    target_residual: f64,
    max_iter: usize,
) -> (Vec<f64>, f64, bool) {
    // Solve A x = b with A = -L (positive definite), b = -rhs.
    let apply_a = |x: &[f64], out: &mut [f64]| {
        let idx2 = 1.0 / (dx * dx);
        let idy2 = 1.0 / (dy * dy);
        for r in 0..m {
            for c in 0..n {
                let xc = x[r * n + c];
                let left = if c > 0 { x[r * n + c - 1] } else { 0.0 };
                let right = if c + 1 < n { x[r * n + c + 1] } else { 0.0 };
                let up = if r > 0 { x[(r - 1) * n + c] } else { 0.0 };
                let down = if r + 1 < m { x[(r + 1) * n + c] } else { 0.0 };
                out[r * n + c] =
                    -((left + right - 2.0 * xc) * idx2 + (up + down - 2.0 * xc) * idy2);
            }
        }
    };

    let b: Vec<f64> = rhs.iter().map(|v| -v).collect();
    let mut x = init.unwrap_or_else(|| vec![0.0; b.len()]);
    let mut ax = vec![0.0; b.len()];
    apply_a(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(ax.iter()).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rs_old: f64 = r.iter().map(|v| v * v).sum();

    let mut ap = vec![0.0; b.len()];
    for _ in 0..max_iter {
        if rs_old.sqrt() <= target_residual {
            return (x, rs_old.sqrt(), true);
        }
        apply_a(&p, &mut ap);
        let pap: f64 = p.iter().zip(ap.iter()).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rs_old / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rs_new / rs_old;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
    }
    let converged = rs_old.sqrt() <= target_residual;
    (x, rs_old.sqrt(), converged)
}

/// One 3D point per pixel: `x = col * pitch_x`, `y = row * pitch_y`,
/// `z = h(row, col)`.
pub fn height_to_cloud(h: &ScalarGrid) -> PointCloud3 {
    let (dx, dy) = h.pitch_mm;
    let mut points = Vec::with_capacity(h.rows * h.cols);
    for row in 0..h.rows {
        for col in 0..h.cols {
            points.push(Point3::new(col as f64 * dx, row as f64 * dy, h.at(row, col)));
        }
    }
    PointCloud3::new(points)
}

/// Gradient-field error report. Slope MAEs are computed on per-channel
/// min-max normalized values (normalized over the union of predicted and
/// ground-truth entries); angle MAEs are computed on unnormalized slopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaeReport {
    pub mae_gx: f64,
    pub mae_gy: f64,
    pub mae_theta_x_deg: f64,
    pub mae_theta_y_deg: f64,
}

pub fn gradient_mae(pred: &GradientGrid, gt: &GradientGrid) -> Result<MaeReport> {
    if !pred.same_shape(gt) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", gt.rows, gt.cols),
            got: format!("{}x{}", pred.rows, pred.cols),
        });
    }
    let channel_mae = |a: &[f64], b: &[f64]| -> f64 {
        let lo = a.iter().chain(b.iter()).copied().fold(f64::INFINITY, f64::min);
        let hi = a.iter().chain(b.iter()).copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        if range == 0.0 {
            return 0.0;
        }
        let n = a.len() as f64;
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| ((x - lo) / range - (y - lo) / range).abs())
            .sum::<f64>()
            / n
    };
    let angle_mae = |a: &[f64], b: &[f64]| -> f64 {
        let n = a.len() as f64;
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x.atan() - y.atan()).abs().to_degrees())
            .sum::<f64>()
            / n
    };
    Ok(MaeReport {
        mae_gx: channel_mae(&pred.gx, &gt.gx),
        mae_gy: channel_mae(&pred.gy, &gt.gy),
        mae_theta_x_deg: angle_mae(&pred.gx, &gt.gx),
        mae_theta_y_deg: angle_mae(&pred.gy, &gt.gy),
    })
}
