//! Ramanujan periodicity transform: signal → period-energy decomposition.
//!
//! `rpt` solves the penalized program over the cached dictionary and
//! assembles the energy-of-period (EOP) vector, the intrinsic period set
//! (IP) and the support of periodicity (SOP). Iterative solvers return
//! near-zeros rather than zeros, so coordinates below
//! `coord_abs_tol + coord_rel_tol·‖x‖_∞` are snapped to zero before EOP
//! assembly, and IP keeps the periods whose EOP exceeds `ip_rel_tol`
//! times the largest EOP. Both thresholds are options; `ip_rel_tol = 0`
//! recovers the plain "EOP > 0" reading.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::dictionary::{cached_dictionary, DictionaryError, PeriodDictionary, Zeta};
use crate::solver::{BpdnSolver, SolverError, SolverOptions};

/// Options for the transform: solver controls plus the numerical-zero
/// policy for EOP/IP assembly.
#[derive(Debug, Clone)]
pub struct PtOptions {
    pub solver: SolverOptions,
    /// Absolute coordinate zero threshold.
    pub coord_abs_tol: f64,
    /// Coordinate zero threshold relative to ‖x‖_∞.
    pub coord_rel_tol: f64,
    /// IP keeps periods with EOP > ip_rel_tol · max EOP.
    pub ip_rel_tol: f64,
}

impl Default for PtOptions {
    fn default() -> Self {
        PtOptions {
            solver: SolverOptions::default(),
            coord_abs_tol: 1e-10,
            coord_rel_tol: 1e-6,
            ip_rel_tol: 0.05,
        }
    }
}

/// One periodicity-transform run.
#[derive(Debug, Clone)]
pub struct PtResult {
    /// Solution coefficients after the numerical-zero snap.
    pub x: DVector<f64>,
    /// EOP(p) at index p−1, for p = 1..=p_max.
    pub eop: Vec<f64>,
    /// Intrinsic periods, ascending.
    pub ip: Vec<usize>,
    /// 0-based dictionary column indices owned by the periods in `ip`.
    pub sop: Vec<usize>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub objective: f64,
}

#[derive(Debug)]
pub enum RptError {
    Dictionary(DictionaryError),
    Solver(SolverError),
}

impl fmt::Display for RptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RptError::Dictionary(e) => write!(f, "{}", e),
            RptError::Solver(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for RptError {}

impl From<DictionaryError> for RptError {
    fn from(e: DictionaryError) -> Self {
        RptError::Dictionary(e)
    }
}

impl From<SolverError> for RptError {
    fn from(e: SolverError) -> Self {
        RptError::Solver(e)
    }
}

/// Energy of period: EOP(p) = Σ x_i² over the period-p block.
/// Returns the vector indexed by p−1. Panics if `x` does not have
/// Φ(p_max) entries.
pub fn eop_of(x: &DVector<f64>, p_max: usize) -> Vec<f64> {
    let total = crate::ramanujan::totient_cumsum(p_max as u64) as usize;
    assert_eq!(
        x.len(),
        total,
        "eop_of: x has {} entries, expected Phi({}) = {}",
        x.len(),
        p_max,
        total
    );
    let mut eop = vec![0.0; p_max];
    let mut col = 0;
    for p in 1..=p_max {
        let width = crate::ramanujan::euler_totient(p as u64) as usize;
        let mut acc = 0.0;
        for _ in 0..width {
            acc += x[col] * x[col];
            col += 1;
        }
        eop[p - 1] = acc;
    }
    eop
}

/// Snap near-zero coordinates to exact zero.
fn zero_clean(x: &DVector<f64>, abs_tol: f64, rel_tol: f64) -> DVector<f64> {
    let scale = x.abs().max();
    let cut = abs_tol + rel_tol * scale;
    x.map(|v| if v.abs() <= cut { 0.0 } else { v })
}

/// Assemble a PtResult from a raw solver solution.
pub fn assemble(
    dict: &PeriodDictionary,
    raw: crate::solver::SparseSolution,
    opts: &PtOptions,
) -> PtResult {
    let x = zero_clean(&raw.x, opts.coord_abs_tol, opts.coord_rel_tol);
    let eop = eop_of(&x, dict.p_max());
    let max_eop = eop.iter().cloned().fold(0.0f64, f64::max);
    let cut = opts.ip_rel_tol * max_eop;
    let ip: Vec<usize> = (1..=dict.p_max())
        .filter(|&p| eop[p - 1] > cut && eop[p - 1] > 0.0)
        .collect();
    let mut sop = Vec::new();
    for &p in &ip {
        sop.extend(dict.block_range(p));
    }
    PtResult {
        x,
        eop,
        ip,
        sop,
        kkt_residual: raw.kkt_residual,
        iterations: raw.iterations,
        objective: raw.objective,
    }
}

/// Ramanujan periodicity transform of one signal.
pub fn rpt(
    y: &DVector<f64>,
    p_max: usize,
    zeta: &Zeta,
    lambda: f64,
    opts: &PtOptions,
) -> Result<PtResult, RptError> {
    let dict = cached_dictionary(y.len(), p_max, zeta)?;
    let raw = BpdnSolver::new(&dict).solve(y, lambda, &opts.solver, false)?;
    Ok(assemble(&dict, raw, opts))
}

/// Vectorized periodicity transform over the columns of `y_cols`.
pub fn vrpt(
    y_cols: &DMatrix<f64>,
    p_max: usize,
    zeta: &Zeta,
    lambda: f64,
    opts: &PtOptions,
) -> Result<PtResult, RptError> {
    let dict = cached_dictionary(y_cols.nrows(), p_max, zeta)?;
    let raw = BpdnSolver::new(&dict).solve_multi(y_cols, lambda, &opts.solver, false)?;
    Ok(assemble(&dict, raw, opts))
}
