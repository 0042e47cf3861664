//! Cepstral de-shape pipeline: short-time cepstral transform (STCT), its
//! inversion onto a frequency grid (iSTCT), and the de-shape STFT used as
//! the comparison baseline.
//!
//! The STCT takes the γ-flattened magnitude columns to the quefrency axis
//! by a DFT along frequency; the iSTCT reads the quefrency axis at
//! q = 1/ξ (linear interpolation by default) after suppressing the low
//! quefrencies; the de-shape STFT multiplies the STFT with that mask and
//! reports |W|².

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::tfr::{power_gamma, TfrError, TfrKind, TfrMatrix, TfrValues};

/// Interpolation scheme for reading the quefrency axis at q = 1/ξ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    Linear,
    Nearest,
}

/// Number of leading quefrency bins zeroed before inversion.
pub const DEFAULT_QUEFRENCY_CUTOFF: usize = 2;

/// Short-time cepstral transform of a γ-flattened magnitude matrix.
///
/// Output rows are quefrencies q_j = j·Δq, Δq = 1/(F·Δξ) with F the
/// number of frequency rows; magnitudes are retained.
pub fn stct(v_gamma: &TfrMatrix) -> Result<TfrMatrix, TfrError> {
    let m = match (&v_gamma.kind, v_gamma.real()) {
        (TfrKind::PowerGamma(_), Some(m)) => m,
        _ => {
            return Err(TfrError::KindMismatch {
                expected: "power-gamma",
                actual: v_gamma.kind.clone(),
            })
        }
    };
    let rows = m.nrows();
    let cols = m.ncols();
    let fft = FftPlanner::new().plan_fft_inverse(rows);
    let mut out = DMatrix::zeros(rows, cols);
    let mut buf = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            buf[r] = Complex64::new(m[(r, c)], 0.0);
        }
        fft.process(&mut buf);
        for j in 0..rows {
            out[(j, c)] = buf[j].norm() * v_gamma.bin_width;
        }
    }
    Ok(TfrMatrix {
        values: TfrValues::Real(out),
        bin_width: 1.0 / (rows as f64 * v_gamma.bin_width),
        hop: v_gamma.hop,
        sample_interval: v_gamma.sample_interval,
        kind: TfrKind::Quefrency,
        m_bins: v_gamma.m_bins,
        boundary_cols: v_gamma.boundary_cols,
    })
}

/// Inverse STCT: evaluate |C(t, 1/ξ)| on `freq_grid`.
///
/// Quefrency rows below `q_min_bins` are zeroed first; targets beyond the
/// last quefrency sample (or below the first positive one) map to 0.
/// The grid must be strictly positive and increasing.
pub fn istct(
    c: &TfrMatrix,
    freq_grid: &[f64],
    q_min_bins: usize,
    interp: Interp,
) -> Result<TfrMatrix, TfrError> {
    let m = match (&c.kind, c.real()) {
        (TfrKind::Quefrency, Some(m)) => m,
        _ => {
            return Err(TfrError::KindMismatch {
                expected: "quefrency",
                actual: c.kind.clone(),
            })
        }
    };
    assert!(
        freq_grid.windows(2).all(|w| w[0] < w[1])
            && freq_grid.first().is_none_or(|&v| v > 0.0),
        "frequency grid must be strictly positive and increasing"
    );
    let rows = m.nrows();
    let dq = c.bin_width;
    let sample = |j: usize, col: usize| -> f64 {
        if j < q_min_bins || j >= rows {
            0.0
        } else {
            m[(j, col)]
        }
    };
    let mut out = DMatrix::zeros(freq_grid.len(), m.ncols());
    for (gi, &xi) in freq_grid.iter().enumerate() {
        let t = 1.0 / (xi * dq); // fractional quefrency row
        for col in 0..m.ncols() {
            let v = if t < 1.0 || t > (rows - 1) as f64 {
                0.0
            } else {
                match interp {
                    Interp::Nearest => sample(t.round() as usize, col),
                    Interp::Linear => {
                        let lo = t.floor() as usize;
                        let hi = lo + 1;
                        let w = t - lo as f64;
                        if w == 0.0 {
                            sample(lo, col)
                        } else {
                            (1.0 - w) * sample(lo, col) + w * sample(hi, col)
                        }
                    }
                }
            };
            out[(gi, col)] = v;
        }
    }
    let step = if freq_grid.len() >= 2 {
        freq_grid[1] - freq_grid[0]
    } else {
        0.0
    };
    Ok(TfrMatrix {
        values: TfrValues::Real(out),
        bin_width: step,
        hop: c.hop,
        sample_interval: c.sample_interval,
        kind: TfrKind::DeShape,
        m_bins: c.m_bins,
        boundary_cols: c.boundary_cols,
    })
}

/// Entrywise |V ⊙ U|² on a shared grid; `u` must match V's shape.
pub fn apply_mask(v: &TfrMatrix, u: &DMatrix<f64>) -> Result<TfrMatrix, TfrError> {
    let mv = v.complex().ok_or(TfrError::KindMismatch {
        expected: "complex-stft",
        actual: v.kind.clone(),
    })?;
    assert_eq!(mv.nrows(), u.nrows(), "mask grid mismatch");
    assert_eq!(mv.ncols(), u.ncols(), "mask grid mismatch");
    let out = DMatrix::from_fn(mv.nrows(), mv.ncols(), |r, c| {
        let w = mv[(r, c)].norm() * u[(r, c)];
        w * w
    });
    Ok(TfrMatrix {
        values: TfrValues::Real(out),
        bin_width: v.bin_width,
        hop: v.hop,
        sample_interval: v.sample_interval,
        kind: TfrKind::DeShape,
        m_bins: v.m_bins,
        boundary_cols: v.boundary_cols,
    })
}

/// De-shape STFT: |V(t,ξ) · U(t,ξ)|² with U the inverted short-time
/// cepstrum of |V|^γ, evaluated on the STFT's own row grid (the DC row
/// maps to 0).
pub fn deshape_stft(
    v: &TfrMatrix,
    gamma: f64,
    q_min_bins: usize,
    interp: Interp,
) -> Result<TfrMatrix, TfrError> {
    if v.kind != TfrKind::ComplexStft {
        return Err(TfrError::KindMismatch {
            expected: "complex-stft",
            actual: v.kind.clone(),
        });
    }
    let flattened = power_gamma(v, gamma)?;
    let cep = stct(&flattened)?;
    let grid: Vec<f64> = (1..v.nrows()).map(|r| r as f64 * v.bin_width).collect();
    let u_pos = istct(&cep, &grid, q_min_bins, interp)?;
    let up = u_pos.real().unwrap();
    // Reattach the DC row as zero so the mask aligns with V's rows.
    let mut u = DMatrix::zeros(v.nrows(), v.ncols());
    for r in 1..v.nrows() {
        for c in 0..v.ncols() {
            u[(r, c)] = up[(r - 1, c)];
        }
    }
    apply_mask(v, &u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tfr::{spectrogram, stft, Window};
    use approx::assert_relative_eq;

    fn power_gamma_matrix(m: DMatrix<f64>, bin_width: f64) -> TfrMatrix {
        TfrMatrix {
            values: TfrValues::Real(m),
            bin_width,
            hop: 1,
            sample_interval: 0.01,
            kind: TfrKind::PowerGamma(1.0),
            m_bins: 8,
            boundary_cols: 0,
        }
    }

    #[test]
    fn constant_column_concentrates_at_zero_quefrency() {
        let v = power_gamma_matrix(DMatrix::from_element(32, 1, 1.0), 0.5);
        let c = stct(&v).unwrap();
        let m = c.real().unwrap();
        for j in 1..32 {
            assert!(m[(j, 0)] < 1e-9 * m[(0, 0)], "leak at quefrency bin {}", j);
        }
    }

    #[test]
    fn stct_rejects_wrong_kind() {
        let f: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let v = stft(&f, &Window::gaussian(3), 8, 0.01).unwrap();
        assert!(matches!(stct(&v), Err(TfrError::KindMismatch { .. })));
    }

    #[test]
    fn comb_column_peaks_at_inverse_spacing() {
        // Comb of spacing d bins: dominant nonzero peak at row F/d, i.e.
        // quefrency 1/(d·Δξ).
        let (f_rows, d) = (48usize, 6usize);
        let comb = DMatrix::from_fn(f_rows, 1, |r, _| if r % d == 0 { 1.0 } else { 0.0 });
        let c = stct(&power_gamma_matrix(comb, 0.25)).unwrap();
        let m = c.real().unwrap();
        let (mut best_j, mut best) = (0, 0.0);
        for j in 1..=f_rows / 2 {
            if m[(j, 0)] > best {
                best = m[(j, 0)];
                best_j = j;
            }
        }
        assert_eq!(best_j, f_rows / d);
        let q_peak = best_j as f64 * c.bin_width;
        assert_relative_eq!(q_peak, 1.0 / (d as f64 * 0.25), max_relative = 1e-12);
    }

    #[test]
    fn istct_maps_comb_to_fundamental_and_subharmonics() {
        let (f_rows, d) = (48usize, 6usize);
        let dxi = 0.25;
        let comb = DMatrix::from_fn(f_rows, 1, |r, _| if r % d == 0 { 1.0 } else { 0.0 });
        let c = stct(&power_gamma_matrix(comb, dxi)).unwrap();
        let xi0 = d as f64 * dxi; // comb spacing in Hz
        let grid: Vec<f64> = (1..=2 * f_rows).map(|i| i as f64 * dxi / 4.0).collect();
        let u = istct(&c, &grid, DEFAULT_QUEFRENCY_CUTOFF, Interp::Linear).unwrap();
        let m = u.real().unwrap();
        let val_at = |xi: f64| {
            let gi = grid.iter().position(|&g| (g - xi).abs() < 1e-12).unwrap();
            m[(gi, 0)]
        };
        let between = val_at(xi0 * 0.75);
        assert!(val_at(xi0) > 4.0 * between, "fundamental not prominent");
        assert!(val_at(xi0 / 2.0) > 4.0 * between, "subharmonic missing");
    }

    #[test]
    fn istct_interpolation_hits_knots_exactly() {
        let f_rows = 24usize;
        let dxi = 0.5;
        let data = DMatrix::from_fn(f_rows, 2, |r, c| ((r * 7 + c * 3) % 11) as f64 + 0.25);
        let cm = stct(&power_gamma_matrix(data, dxi)).unwrap();
        let dq = cm.bin_width;
        let mc = cm.real().unwrap().clone();
        for j in [2usize, 3, 7, 11] {
            let xi = 1.0 / (j as f64 * dq);
            let u = istct(&cm, &[xi], 0, Interp::Linear).unwrap();
            for col in 0..2 {
                assert_relative_eq!(u.real().unwrap()[(0, col)], mc[(j, col)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn istct_constant_quefrency_gives_constant_mask() {
        let f_rows = 16usize;
        let cm = TfrMatrix {
            values: TfrValues::Real(DMatrix::from_element(f_rows, 3, 2.5)),
            bin_width: 0.125,
            hop: 1,
            sample_interval: 0.01,
            kind: TfrKind::Quefrency,
            m_bins: 8,
            boundary_cols: 0,
        };
        // Grid chosen so 1/(ξ·Δq) stays within [1, F-1].
        let grid = [0.6, 0.8, 1.0, 2.0, 4.0];
        let u = istct(&cm, &grid, 0, Interp::Linear).unwrap();
        for v in u.real().unwrap().iter() {
            assert_relative_eq!(*v, 2.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn unit_mask_reproduces_spectrogram() {
        let f: Vec<f64> = (0..40).map(|i| (0.4 * i as f64).sin()).collect();
        let h = Window::gaussian(6);
        let v = stft(&f, &h, 12, 0.01).unwrap();
        let ones = DMatrix::from_element(v.nrows(), v.ncols(), 1.0);
        let w = apply_mask(&v, &ones).unwrap();
        let sp = spectrogram(&v).unwrap();
        let (mw, ms) = (w.real().unwrap(), sp.real().unwrap());
        for (a, b) in mw.iter().zip(ms.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_mask_rows_zero_the_output() {
        let f: Vec<f64> = (0..40).map(|i| (0.4 * i as f64).sin()).collect();
        let h = Window::gaussian(6);
        let v = stft(&f, &h, 12, 0.01).unwrap();
        let mut u = DMatrix::from_element(v.nrows(), v.ncols(), 1.0);
        for c in 0..v.ncols() {
            u[(3, c)] = 0.0;
        }
        let w = apply_mask(&v, &u).unwrap();
        for c in 0..v.ncols() {
            assert_eq!(w.real().unwrap()[(3, c)], 0.0);
        }
    }

    #[test]
    fn deshape_moves_ridge_to_fundamental() {
        // Fundamental 3 Hz with a dominant 3rd harmonic at 9 Hz; the
        // spectrogram argmax sits on the harmonic, the de-shape on the
        // fundamental.
        let fs = 64.0;
        let n = 512;
        let f: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                let tau = 2.0 * std::f64::consts::PI * 3.0 * t;
                tau.cos() + 0.8 * (2.0 * tau + 1.0).cos() + 3.0 * (3.0 * tau).cos()
                    + 0.5 * (4.0 * tau - 0.7).cos()
            })
            .collect();
        let h = Window::gaussian(96); // 3 s window
        let m_bins = 64; // 0.5 Hz bins: fundamental at row 6, harmonic at row 18
        let v = stft(&f, &h, m_bins, 1.0 / fs).unwrap();
        let w = deshape_stft(&v, 0.3, DEFAULT_QUEFRENCY_CUTOFF, Interp::Linear).unwrap();
        let sp = spectrogram(&v).unwrap();
        let (mw, ms) = (w.real().unwrap(), sp.real().unwrap());
        let argmax = |m: &DMatrix<f64>, c: usize| -> usize {
            let mut best = (0usize, -1.0);
            for r in 0..m.nrows() {
                if m[(r, c)] > best.1 {
                    best = (r, m[(r, c)]);
                }
            }
            best.0
        };
        let mut ok_w = 0;
        let mut ok_s = 0;
        let interior = 150..n - 150;
        let total = interior.len();
        for c in interior {
            if argmax(mw, c) == 6 {
                ok_w += 1;
            }
            if argmax(ms, c) == 18 {
                ok_s += 1;
            }
        }
        assert!(ok_w * 10 >= total * 9, "deshape ridge: {}/{}", ok_w, total);
        assert!(ok_s * 10 >= total * 9, "spectrogram ridge: {}/{}", ok_s, total);
    }
}
