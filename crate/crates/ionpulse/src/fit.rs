//! Small least-squares fits used by the analysis pipeline: straight lines,
//! cosine series (for parity and spin-echo scans), and a one-parameter
//! frequency fit for Rabi-oscillation data.

use crate::error::{Error, Result};

/// Solve a small dense linear system in place via Gaussian elimination with
/// partial pivoting.
fn solve_in_place(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Fit("singular normal equations".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

/// Linear least squares for an arbitrary design matrix (rows = samples).
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    if design.len() != y.len() || design.is_empty() {
        return Err(Error::Fit("design matrix and data length mismatch".into()));
    }
    let p = design[0].len();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &yi) in design.iter().zip(y) {
        if row.len() != p {
            return Err(Error::Fit("ragged design matrix".into()));
        }
        for i in 0..p {
            xty[i] += row[i] * yi;
            for j in 0..p {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    solve_in_place(&mut xtx, &mut xty)
}

/// Least-squares straight line `y = slope*x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let design: Vec<Vec<f64>> = x.iter().map(|&xi| vec![xi, 1.0]).collect();
    let coeffs = least_squares(&design, y)?;
    Ok((coeffs[0], coeffs[1]))
}

/// One harmonic of a cosine-series fit: `amp * cos(k*phi + phase)` with
/// `amp >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub k: u32,
    pub amplitude: f64,
    pub phase: f64,
}

/// Fit `y(phi) = offset + sum_k amp_k cos(k*phi + phase_k)` by linear least
/// squares over the cos/sin quadratures of each requested harmonic.
pub fn cosine_series_fit(phi: &[f64], y: &[f64], harmonics: &[u32]) -> Result<(f64, Vec<Harmonic>)> {
    if phi.len() != y.len() || phi.len() < 2 * harmonics.len() + 1 {
        return Err(Error::Fit(format!(
            "need at least {} samples for {} harmonics, got {}",
            2 * harmonics.len() + 1,
            harmonics.len(),
            phi.len()
        )));
    }
    let design: Vec<Vec<f64>> = phi
        .iter()
        .map(|&p| {
            let mut row = vec![1.0];
            for &k in harmonics {
                row.push((k as f64 * p).cos());
                row.push((k as f64 * p).sin());
            }
            row
        })
        .collect();
    let coeffs = least_squares(&design, y)?;
    let offset = coeffs[0];
    let terms = harmonics
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let a = coeffs[1 + 2 * i];
            let b = coeffs[2 + 2 * i];
            // a cos + b sin = amp cos(k phi + phase) with amp = hypot(a, b)
            Harmonic {
                k,
                amplitude: a.hypot(b),
                phase: (-b).atan2(a),
            }
        })
        .collect();
    Ok((offset, terms))
}

/// Fit the frequency of `y = sin^2(f*x/2)` data by minimizing the summed
/// squared residual over `f` in `[lo, hi]` (golden-section search).
pub fn fit_sin2_frequency(x: &[f64], y: &[f64], lo: f64, hi: f64) -> Result<f64> {
    if x.len() != y.len() || x.len() < 4 || !(lo < hi) {
        return Err(Error::Fit("bad inputs for frequency fit".into()));
    }
    let sse = |f: f64| -> f64 {
        x.iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let m = (f * xi / 2.0).sin().powi(2);
                (m - yi) * (m - yi)
            })
            .sum()
    };
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = sse(d);
        }
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}
