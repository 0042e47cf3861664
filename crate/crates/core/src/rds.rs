//! Ramanujan de-shape: the periodicity transform applied along the
//! frequency axis of an STFT, frame by frame.
//!
//! For each time frame the γ-flattened magnitude column (truncated at
//! f_max) is decomposed over the Ramanujan dictionary; the energy of
//! period fills E_f, which is zero-extended over all M+1 rows to P_f and
//! (optionally) masked by |V_f|^γ′ to give the final TFR R_f. Row r
//! (0-based) of P_f and R_f holds period r+1 frequency bins, i.e. a
//! fundamental at (r+1)·Δξ.
//!
//! The vectorized variant solves each frame jointly with its 2k+1
//! clamped neighbor columns through the multi-column program; k = 0 is
//! exactly the plain transform.
//!
//! Frames are processed in fixed chunks of 64 columns: warm starts chain
//! inside a chunk and reset at chunk boundaries, so outputs do not depend
//! on the number of worker threads.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dictionary::{cached_dictionary, DictionaryError, Zeta};
use crate::rpt::eop_of;
use crate::solver::{BpdnSolver, SolverError, SolverOptions};
use crate::tfr::{stft_hop, truncate_rows, TfrError, TfrKind, TfrMatrix, TfrValues, Window};

/// Final-TFR assembly: mask the period energies with the STFT magnitude
/// or return them bare.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    MaskByStft,
    PeriodEnergyOnly,
}

/// Configuration of one (v)RDS run.
#[derive(Debug, Clone)]
pub struct RdsConfig {
    /// Largest frequency-axis period, in bins.
    pub p_max: usize,
    /// Row truncation for the per-frame decomposition, Hz.
    pub f_max_hz: f64,
    pub lambda: f64,
    /// Flattening exponent γ applied before the decomposition.
    pub gamma: f64,
    /// Masking exponent γ′ applied to |V| in the final product.
    pub gamma_prime: f64,
    pub zeta: Zeta,
    /// Neighbor half-width k; 0 is the plain transform.
    pub k_neighbors: usize,
    pub mask_mode: MaskMode,
    /// Columns between solved frames (1 solves every sample).
    pub hop: usize,
    pub solver: SolverOptions,
    /// Chain solver state across adjacent frames inside a chunk.
    pub warm_start: bool,
}

impl RdsConfig {
    pub fn new(p_max: usize, f_max_hz: f64, lambda: f64) -> Self {
        RdsConfig {
            p_max,
            f_max_hz,
            lambda,
            gamma: 0.1,
            gamma_prime: 1.0,
            zeta: Zeta::Quadratic,
            k_neighbors: 0,
            mask_mode: MaskMode::MaskByStft,
            hop: 1,
            solver: SolverOptions::default(),
            warm_start: true,
        }
    }
}

#[derive(Debug)]
pub enum RdsError {
    Tfr(TfrError),
    Dictionary(DictionaryError),
    /// p_max exceeds the truncated row count, or another bad combination.
    Config(String),
    /// Solver failure with the 0-based frame (column) index attached.
    Solver { frame: usize, source: SolverError },
}

impl fmt::Display for RdsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RdsError::Tfr(e) => write!(f, "{}", e),
            RdsError::Dictionary(e) => write!(f, "{}", e),
            RdsError::Config(msg) => write!(f, "{}", msg),
            RdsError::Solver { frame, source } => {
                write!(f, "frame {}: {}", frame, source)
            }
        }
    }
}

impl std::error::Error for RdsError {}

impl From<TfrError> for RdsError {
    fn from(e: TfrError) -> Self {
        RdsError::Tfr(e)
    }
}

impl From<DictionaryError> for RdsError {
    fn from(e: DictionaryError) -> Self {
        RdsError::Dictionary(e)
    }
}

const CHUNK: usize = 64;

/// Ramanujan de-shape of a sampled signal.
pub fn rds(
    f: &[f64],
    h: &Window,
    m_bins: usize,
    sample_interval: f64,
    cfg: &RdsConfig,
) -> Result<TfrMatrix, RdsError> {
    let v = stft_hop(f, h, m_bins, sample_interval, cfg.hop)?;
    rds_of_stft(&v, cfg)
}

/// Vectorized Ramanujan de-shape; identical to [`rds`] with the
/// configured `k_neighbors` (k = 0 reduces to the plain transform).
pub fn vrds(
    f: &[f64],
    h: &Window,
    m_bins: usize,
    sample_interval: f64,
    cfg: &RdsConfig,
) -> Result<TfrMatrix, RdsError> {
    rds(f, h, m_bins, sample_interval, cfg)
}

/// De-shape an already computed complex STFT.
pub fn rds_of_stft(v: &TfrMatrix, cfg: &RdsConfig) -> Result<TfrMatrix, RdsError> {
    if v.kind != TfrKind::ComplexStft {
        return Err(RdsError::Tfr(TfrError::KindMismatch {
            expected: "complex-stft",
            actual: v.kind.clone(),
        }));
    }
    let t = truncate_rows(v, cfg.f_max_hz)?;
    let rows = t.nrows();
    if cfg.p_max > rows {
        return Err(RdsError::Config(format!(
            "p_max = {} exceeds the {} truncated rows below f_max = {} Hz",
            cfg.p_max, rows, cfg.f_max_hz
        )));
    }
    if cfg.p_max == 0 {
        return Err(RdsError::Config("p_max must be >= 1".into()));
    }
    let dict = cached_dictionary(rows, cfg.p_max, &cfg.zeta)?;
    let tm = t.complex().expect("truncated stft stays complex");
    let n_cols = tm.ncols();

    // Flattened magnitudes, computed once.
    let flat = DMatrix::from_fn(rows, n_cols, |r, c| tm[(r, c)].norm().powf(cfg.gamma));

    let chunk_starts: Vec<usize> = (0..n_cols).step_by(CHUNK).collect();
    let chunks: Vec<Result<(usize, DMatrix<f64>), RdsError>> = chunk_starts
        .par_iter()
        .map(|&c0| {
            let c1 = (c0 + CHUNK).min(n_cols);
            let mut solver = BpdnSolver::new(&dict);
            let mut energies = DMatrix::zeros(cfg.p_max, c1 - c0);
            for c in c0..c1 {
                let raw = if cfg.k_neighbors == 0 {
                    let col = DVector::from_fn(rows, |r, _| flat[(r, c)]);
                    solver.solve(&col, cfg.lambda, &cfg.solver, cfg.warm_start && c > c0)
                } else {
                    let k = cfg.k_neighbors as i64;
                    let neighbors = DMatrix::from_fn(rows, 2 * cfg.k_neighbors + 1, |r, j| {
                        let idx = (c as i64 + j as i64 - k).clamp(0, n_cols as i64 - 1);
                        flat[(r, idx as usize)]
                    });
                    solver.solve_multi(&neighbors, cfg.lambda, &cfg.solver, cfg.warm_start && c > c0)
                };
                let raw = raw.map_err(|source| RdsError::Solver { frame: c, source })?;
                let eop = eop_of(&raw.x, cfg.p_max);
                for (j, e) in eop.iter().enumerate() {
                    energies[(j, c - c0)] = *e;
                }
            }
            Ok((c0, energies))
        })
        .collect();

    // P_f: period energies zero-extended over all M+1 rows.
    let full_rows = v.nrows();
    let mut p_f = DMatrix::zeros(full_rows, n_cols);
    for chunk in chunks {
        let (c0, energies) = chunk?;
        for cc in 0..energies.ncols() {
            for j in 0..cfg.p_max {
                p_f[(j, c0 + cc)] = energies[(j, cc)];
            }
        }
    }

    let vm = v.complex().expect("input checked complex");
    let (values, kind) = match cfg.mask_mode {
        MaskMode::PeriodEnergyOnly => (p_f, TfrKind::PeriodEnergy),
        MaskMode::MaskByStft => {
            let masked = DMatrix::from_fn(full_rows, n_cols, |r, c| {
                if p_f[(r, c)] == 0.0 {
                    0.0
                } else {
                    vm[(r, c)].norm().powf(cfg.gamma_prime) * p_f[(r, c)]
                }
            });
            (masked, TfrKind::Rds)
        }
    };
    Ok(TfrMatrix {
        values: TfrValues::Real(values),
        bin_width: v.bin_width,
        hop: v.hop,
        sample_interval: v.sample_interval,
        kind,
        m_bins: v.m_bins,
        boundary_cols: v.boundary_cols,
    })
}

/// Per-frame intrinsic periods of a `PeriodEnergy`/`Rds` matrix: periods
/// whose row exceeds `rel_tol` times the column maximum.
pub fn frame_periods(r: &TfrMatrix, col: usize, p_max: usize, rel_tol: f64) -> Vec<usize> {
    let m = r.real().expect("period matrix is real");
    let cut = (0..p_max).map(|j| m[(j, col)]).fold(0.0f64, f64::max) * rel_tol;
    (0..p_max)
        .filter(|&j| m[(j, col)] > cut && m[(j, col)] > 0.0)
        .map(|j| j + 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_tfr_eq(a: &TfrMatrix, b: &TfrMatrix) {
        let (ma, mb) = (a.real().unwrap(), b.real().unwrap());
        assert_eq!(ma.nrows(), mb.nrows());
        assert_eq!(ma.ncols(), mb.ncols());
        for (x, y) in ma.iter().zip(mb.iter()) {
            assert_eq!(x, y, "outputs differ");
        }
    }

    #[test]
    fn zero_signal_gives_zero_tfr() {
        let h = Window::gaussian(16);
        let cfg = RdsConfig::new(8, 10.0, 0.1);
        let r = rds(&vec![0.0; 128], &h, 32, 1.0 / 64.0, &cfg).unwrap();
        assert!(r.real().unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(r.kind, TfrKind::Rds);
    }

    #[test]
    fn pmax_must_fit_truncated_rows() {
        let h = Window::gaussian(8);
        let cfg = RdsConfig::new(40, 2.0, 0.1); // 2 Hz at 1 Hz bins: 3 rows
        let err = rds(&vec![0.0; 64], &h, 32, 1.0 / 64.0, &cfg);
        assert!(matches!(err, Err(RdsError::Config(_))));
    }

    /// Scene: bin-centered sinusoid with harmonics so the comb spacing is
    /// the fundamental row.
    fn comb_signal(fs: f64, n: usize, f0: f64) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                let tau = 2.0 * std::f64::consts::PI * f0 * t;
                tau.cos() + 0.7 * (2.0 * tau).cos() + 0.5 * (3.0 * tau + 0.4).cos()
                    + 0.4 * (4.0 * tau).cos() + 0.3 * (5.0 * tau - 0.2).cos()
            })
            .collect()
    }

    #[test]
    fn sinusoid_comb_detected_at_fundamental_row() {
        let fs = 32.0;
        let n = 512;
        let f0 = 2.0; // bin width 0.25 Hz -> period 8 bins
        let f = comb_signal(fs, n, f0);
        let h = Window::gaussian_for_duration(4.0, fs);
        let mut cfg = RdsConfig::new(12, 14.0, 0.05);
        cfg.hop = 8;
        let r = rds(&f, &h, 64, 1.0 / fs, &cfg).unwrap();
        let m = r.real().unwrap();
        let k = h.half_width();
        for c in 0..r.ncols() {
            let sample = c * r.hop;
            if sample < k || sample >= n - k {
                continue;
            }
            let mut best = (0usize, -1.0);
            for row in 0..m.nrows() {
                if m[(row, c)] > best.1 {
                    best = (row, m[(row, c)]);
                }
            }
            // Row index 7 (0-based) holds period 8 = 2 Hz fundamental.
            assert_eq!(best.0, 7, "column {}", c);
        }
    }

    #[test]
    fn energy_rows_vanish_beyond_pmax_and_match_solution_energy() {
        let fs = 32.0;
        let f = comb_signal(fs, 256, 2.0);
        let h = Window::gaussian_for_duration(3.0, fs);
        let mut cfg = RdsConfig::new(12, 14.0, 0.05);
        cfg.hop = 16;
        cfg.mask_mode = MaskMode::PeriodEnergyOnly;
        let r = rds(&f, &h, 64, 1.0 / fs, &cfg).unwrap();
        let m = r.real().unwrap();
        assert_eq!(r.kind, TfrKind::PeriodEnergy);
        assert_eq!(m.nrows(), 65);
        for c in 0..m.ncols() {
            for row in cfg.p_max..m.nrows() {
                assert_eq!(m[(row, c)], 0.0);
            }
        }
        assert!(m.iter().any(|&v| v > 0.0));
    }

    #[test]
    fn masked_output_zero_where_period_energy_zero() {
        let fs = 32.0;
        let f = comb_signal(fs, 256, 2.0);
        let h = Window::gaussian_for_duration(3.0, fs);
        let mut cfg = RdsConfig::new(12, 14.0, 0.05);
        cfg.hop = 16;
        let masked = rds(&f, &h, 64, 1.0 / fs, &cfg).unwrap();
        cfg.mask_mode = MaskMode::PeriodEnergyOnly;
        let bare = rds(&f, &h, 64, 1.0 / fs, &cfg).unwrap();
        let (mm, mb) = (masked.real().unwrap(), bare.real().unwrap());
        for (a, b) in mm.iter().zip(mb.iter()) {
            if *b == 0.0 {
                assert_eq!(*a, 0.0);
            }
        }
    }

    #[test]
    fn k_zero_vrds_is_rds_bitwise() {
        let fs = 32.0;
        let f = comb_signal(fs, 256, 2.0);
        let h = Window::gaussian_for_duration(3.0, fs);
        let mut cfg = RdsConfig::new(12, 14.0, 0.05);
        cfg.hop = 8;
        cfg.k_neighbors = 0;
        let a = rds(&f, &h, 64, 1.0 / fs, &cfg).unwrap();
        let b = vrds(&f, &h, 64, 1.0 / fs, &cfg).unwrap();
        assert_tfr_eq(&a, &b);
    }

    #[test]
    fn determinism_across_runs() {
        let fs = 32.0;
        let f = comb_signal(fs, 200, 2.0);
        let h = Window::gaussian_for_duration(3.0, fs);
        let mut cfg = RdsConfig::new(12, 14.0, 0.05);
        cfg.hop = 4;
        let a = rds(&f, &h, 64, 1.0 / fs, &cfg).unwrap();
        let b = rds(&f, &h, 64, 1.0 / fs, &cfg).unwrap();
        assert_tfr_eq(&a, &b);
    }

    #[test]
    fn vrds_tripled_lambda_matches_rds_periods_on_stationary_scene() {
        let fs = 32.0;
        let f = comb_signal(fs, 384, 2.0);
        let h = Window::gaussian_for_duration(3.0, fs);
        let mut cfg = RdsConfig::new(12, 14.0, 0.05);
        cfg.hop = 8;
        cfg.mask_mode = MaskMode::PeriodEnergyOnly;
        let plain = rds(&f, &h, 64, 1.0 / fs, &cfg).unwrap();
        let mut cfg3 = cfg.clone();
        cfg3.k_neighbors = 1;
        cfg3.lambda = 3.0 * cfg.lambda;
        let vect = vrds(&f, &h, 64, 1.0 / fs, &cfg3).unwrap();
        let k = h.half_width();
        for c in 0..plain.ncols() {
            let sample = c * plain.hop;
            if sample < k || sample >= 384 - k {
                continue;
            }
            let a = frame_periods(&plain, c, cfg.p_max, 0.01);
            let b = frame_periods(&vect, c, cfg.p_max, 0.01);
            assert_eq!(a, b, "frame {}", c);
        }
    }

    #[test]
    fn solver_failures_carry_frame_index() {
        let fs = 32.0;
        let f = comb_signal(fs, 128, 2.0);
        let h = Window::gaussian_for_duration(3.0, fs);
        let mut cfg = RdsConfig::new(12, 14.0, 1e-7);
        cfg.hop = 16;
        cfg.solver.max_iters = 1;
        cfg.solver.kkt_tol = 1e-14;
        match rds(&f, &h, 64, 1.0 / fs, &cfg) {
            Err(RdsError::Solver { frame, .. }) => assert!(frame < 8),
            other => panic!("expected solver error, got {:?}", other.map(|m| m.kind)),
        }
    }
}
