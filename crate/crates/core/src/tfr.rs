//! Discrete short-time Fourier transform and derived time-frequency
//! matrices.
//!
//! Conventions, matching the discrete formula used throughout:
//!
//!   V(m,n) = Σ_{k=1}^{2K+1} f(n+k−K−1) h(k) e^{−2πi(k−1)(m−1)/(2M)}
//!
//! with f zero outside 1..N, m = 1..M+1 and one column per sample
//! (hop 1) by default. Storage is 0-based: row r holds frequency bin
//! r·Δξ with Δξ = 1/(2MΔt); column c holds time index n = 1 + c·hop.
//! Evaluation goes through a 2M-point FFT of the windowed frame folded
//! mod 2M, which is exactly the formula for any window length.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Analysis window of odd length 2K+1 with center index K (0-based).
#[derive(Debug, Clone)]
pub struct Window {
    samples: Vec<f64>,
}

impl Window {
    /// Wrap an explicit odd-length window.
    pub fn new(samples: Vec<f64>) -> Self {
        assert!(samples.len() % 2 == 1, "window length must be odd");
        assert!(
            samples.iter().all(|v| v.is_finite()),
            "window must be finite"
        );
        Window { samples }
    }

    /// Sampled Gaussian with half-width `half_width` (length 2K+1) and
    /// standard deviation K/3, so the tails decay to ~e^{-4.5}.
    pub fn gaussian(half_width: usize) -> Self {
        let k = half_width as f64;
        let sigma = (k / 3.0).max(1e-12);
        let samples = (0..2 * half_width + 1)
            .map(|j| {
                let d = j as f64 - k;
                (-0.5 * (d / sigma) * (d / sigma)).exp()
            })
            .collect();
        Window { samples }
    }

    /// Gaussian spanning `duration_s` seconds at sample rate `fs`.
    pub fn gaussian_for_duration(duration_s: f64, fs: f64) -> Self {
        let half = ((duration_s * fs / 2.0).round() as usize).max(1);
        Window::gaussian(half)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// K, the half width.
    pub fn half_width(&self) -> usize {
        (self.samples.len() - 1) / 2
    }

    /// Center index, 0-based (the paper's K+1 in 1-based indexing).
    pub fn center_index(&self) -> usize {
        self.half_width()
    }
}

/// What a time-frequency matrix holds.
#[derive(Debug, Clone, PartialEq)]
pub enum TfrKind {
    ComplexStft,
    Spectrogram,
    PowerGamma(f64),
    Rds,
    DeShape,
    PeriodEnergy,
    /// Quefrency-axis transform; rows step in seconds.
    Quefrency,
}

impl fmt::Display for TfrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TfrKind::ComplexStft => write!(f, "complex-stft"),
            TfrKind::Spectrogram => write!(f, "spectrogram"),
            TfrKind::PowerGamma(g) => write!(f, "power-gamma({})", g),
            TfrKind::Rds => write!(f, "rds"),
            TfrKind::DeShape => write!(f, "deshape"),
            TfrKind::PeriodEnergy => write!(f, "period-energy"),
            TfrKind::Quefrency => write!(f, "quefrency"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum TfrValues {
    Complex(DMatrix<Complex64>),
    Real(DMatrix<f64>),
}

impl TfrValues {
    pub fn nrows(&self) -> usize {
        match self {
            TfrValues::Complex(m) => m.nrows(),
            TfrValues::Real(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            TfrValues::Complex(m) => m.ncols(),
            TfrValues::Real(m) => m.ncols(),
        }
    }

    /// Entry magnitude (absolute value for real matrices).
    pub fn magnitude(&self, r: usize, c: usize) -> f64 {
        match self {
            TfrValues::Complex(m) => m[(r, c)].norm(),
            TfrValues::Real(m) => m[(r, c)].abs(),
        }
    }
}

/// A time-frequency (or time-quefrency) matrix with axis metadata.
#[derive(Debug, Clone)]
pub struct TfrMatrix {
    pub values: TfrValues,
    /// Row step: Hz for frequency-axis kinds, seconds for `Quefrency`.
    pub bin_width: f64,
    /// Samples between adjacent columns.
    pub hop: usize,
    /// Δt, the sampling interval in seconds.
    pub sample_interval: f64,
    pub kind: TfrKind,
    /// The M of the 2M-point transform that produced the frequency axis.
    pub m_bins: usize,
    /// Columns on each side whose window ran past the signal edge.
    pub boundary_cols: usize,
}

impl TfrMatrix {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Frequency (Hz) represented by 0-based row `r`. For `Rds` and
    /// `PeriodEnergy` the row holds period r+1 bins, i.e. a fundamental
    /// at (r+1)·Δξ; other kinds follow the plain STFT labeling r·Δξ.
    pub fn row_freq_hz(&self, r: usize) -> f64 {
        match self.kind {
            TfrKind::Rds | TfrKind::PeriodEnergy => (r + 1) as f64 * self.bin_width,
            _ => r as f64 * self.bin_width,
        }
    }

    /// Time (seconds) of 0-based column `c`.
    pub fn col_time_s(&self, c: usize) -> f64 {
        (c * self.hop) as f64 * self.sample_interval
    }

    pub fn complex(&self) -> Option<&DMatrix<Complex64>> {
        match &self.values {
            TfrValues::Complex(m) => Some(m),
            TfrValues::Real(_) => None,
        }
    }

    pub fn real(&self) -> Option<&DMatrix<f64>> {
        match &self.values {
            TfrValues::Real(m) => Some(m),
            TfrValues::Complex(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TfrError {
    KindMismatch { expected: &'static str, actual: TfrKind },
    BadGamma(f64),
    FmaxAboveNyquist { f_max: f64, nyquist: f64 },
    EmptySignal,
}

impl fmt::Display for TfrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TfrError::KindMismatch { expected, actual } => {
                write!(f, "expected a {} matrix, got {}", expected, actual)
            }
            TfrError::BadGamma(g) => write!(f, "gamma must be positive, got {}", g),
            TfrError::FmaxAboveNyquist { f_max, nyquist } => {
                write!(f, "f_max {} Hz exceeds Nyquist {} Hz", f_max, nyquist)
            }
            TfrError::EmptySignal => write!(f, "signal must be nonempty"),
        }
    }
}

impl std::error::Error for TfrError {}

/// Shared FFT plan sized 2M.
pub struct StftPlan {
    fft: Arc<dyn Fft<f64>>,
    m_bins: usize,
}

impl StftPlan {
    pub fn new(m_bins: usize) -> Self {
        assert!(m_bins >= 1);
        let fft = FftPlanner::new().plan_fft_forward(2 * m_bins);
        StftPlan { fft, m_bins }
    }

    /// One STFT column: the windowed frame centered at 1-based time index
    /// `n`, folded mod 2M and transformed. `out` receives M+1 bins.
    fn column(
        &self,
        f: &[f64],
        h: &Window,
        n: usize,
        buf: &mut [Complex64],
        out: &mut [Complex64],
    ) {
        let two_m = 2 * self.m_bins;
        let k = h.half_width();
        buf.fill(Complex64::new(0.0, 0.0));
        for (j, &w) in h.samples().iter().enumerate() {
            // 1-based sample index n + (j+1) - K - 1 = n + j - K.
            let idx = n as i64 + j as i64 - k as i64;
            if idx >= 1 && idx <= f.len() as i64 {
                buf[j % two_m].re += f[(idx - 1) as usize] * w;
            }
        }
        self.fft.process(buf);
        out.copy_from_slice(&buf[..self.m_bins + 1]);
    }
}

/// STFT with per-sample columns (hop 1).
pub fn stft(
    f: &[f64],
    h: &Window,
    m_bins: usize,
    sample_interval: f64,
) -> Result<TfrMatrix, TfrError> {
    stft_hop(f, h, m_bins, sample_interval, 1)
}

/// STFT with configurable hop; columns sit at 1-based times 1, 1+hop, …
pub fn stft_hop(
    f: &[f64],
    h: &Window,
    m_bins: usize,
    sample_interval: f64,
    hop: usize,
) -> Result<TfrMatrix, TfrError> {
    if f.is_empty() {
        return Err(TfrError::EmptySignal);
    }
    assert!(hop >= 1, "hop must be >= 1");
    let plan = StftPlan::new(m_bins);
    let n_cols = 1 + (f.len() - 1) / hop;
    let mut values = DMatrix::from_element(m_bins + 1, n_cols, Complex64::new(0.0, 0.0));
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * m_bins];
    let mut out = vec![Complex64::new(0.0, 0.0); m_bins + 1];
    for c in 0..n_cols {
        let n = 1 + c * hop;
        plan.column(f, h, n, &mut buf, &mut out);
        for r in 0..=m_bins {
            values[(r, c)] = out[r];
        }
    }
    let bin_width = 1.0 / (2.0 * m_bins as f64 * sample_interval);
    Ok(TfrMatrix {
        values: TfrValues::Complex(values),
        bin_width,
        hop,
        sample_interval,
        kind: TfrKind::ComplexStft,
        m_bins,
        boundary_cols: h.half_width().div_ceil(hop),
    })
}

/// Spectrogram: entrywise |·|² of a complex STFT.
pub fn spectrogram(v: &TfrMatrix) -> Result<TfrMatrix, TfrError> {
    if v.kind != TfrKind::ComplexStft {
        return Err(TfrError::KindMismatch {
            expected: "complex-stft",
            actual: v.kind.clone(),
        });
    }
    let m = v.complex().ok_or(TfrError::KindMismatch {
        expected: "complex-stft",
        actual: v.kind.clone(),
    })?;
    Ok(TfrMatrix {
        values: TfrValues::Real(m.map(|z| z.norm_sqr())),
        kind: TfrKind::Spectrogram,
        ..shallow_meta(v)
    })
}

/// γ-power flattening: entrywise |·|^γ.
pub fn power_gamma(v: &TfrMatrix, gamma: f64) -> Result<TfrMatrix, TfrError> {
    if !(gamma > 0.0) {
        return Err(TfrError::BadGamma(gamma));
    }
    let m = v.complex().ok_or(TfrError::KindMismatch {
        expected: "complex-stft",
        actual: v.kind.clone(),
    })?;
    Ok(TfrMatrix {
        values: TfrValues::Real(m.map(|z| z.norm().powf(gamma))),
        kind: TfrKind::PowerGamma(gamma),
        ..shallow_meta(v)
    })
}

fn shallow_meta(v: &TfrMatrix) -> TfrMatrix {
    TfrMatrix {
        values: TfrValues::Real(DMatrix::zeros(0, 0)),
        bin_width: v.bin_width,
        hop: v.hop,
        sample_interval: v.sample_interval,
        kind: v.kind.clone(),
        m_bins: v.m_bins,
        boundary_cols: v.boundary_cols,
    }
}

/// Keep the rows whose frequency r·Δξ does not exceed `f_max_hz`:
/// 1 + ⌊f_max/Δξ⌋ rows, capped at the existing row count.
pub fn truncate_rows(v: &TfrMatrix, f_max_hz: f64) -> Result<TfrMatrix, TfrError> {
    let nyquist = 0.5 / v.sample_interval;
    if f_max_hz > nyquist * (1.0 + 1e-12) {
        return Err(TfrError::FmaxAboveNyquist {
            f_max: f_max_hz,
            nyquist,
        });
    }
    let keep = (1 + (f_max_hz / v.bin_width).floor() as usize).min(v.nrows());
    let values = match &v.values {
        TfrValues::Complex(m) => TfrValues::Complex(m.rows(0, keep).into_owned()),
        TfrValues::Real(m) => TfrValues::Real(m.rows(0, keep).into_owned()),
    };
    Ok(TfrMatrix {
        values,
        ..shallow_meta(v)
    })
}
