//! The period dictionary A = [C_{1,N} | … | C_{P_max,N}], its penalty
//! diagonal D with entries ζ(P_i), and B = A·D⁻¹.
//!
//! Dictionaries are immutable once built and safe to share across threads;
//! the Gram matrix BᵀB is computed lazily and cached inside the handle.
//! A process-wide cache keyed by (N, P_max, ζ) lets repeated transforms at
//! identical shapes reuse the same dictionary (and Gram).

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::ramanujan::{build_cpn, to_f64, totient_cumsum};

/// Periodicity penalization function ζ, strictly positive on 1..=P_max.
///
/// `Custom` carries one value per period, indexed by period − 1.
#[derive(Debug, Clone, PartialEq)]
pub enum Zeta {
    Unit,
    Linear,
    Quadratic,
    Custom(Vec<f64>),
}

impl Zeta {
    /// ζ(p) for a period p ≥ 1.
    pub fn eval(&self, p: usize) -> f64 {
        match self {
            Zeta::Unit => 1.0,
            Zeta::Linear => p as f64,
            Zeta::Quadratic => (p * p) as f64,
            Zeta::Custom(table) => table[p - 1],
        }
    }

    fn cache_key(&self) -> ZetaKey {
        match self {
            Zeta::Unit => ZetaKey::Unit,
            Zeta::Linear => ZetaKey::Linear,
            Zeta::Quadratic => ZetaKey::Quadratic,
            Zeta::Custom(t) => ZetaKey::Custom(t.iter().map(|v| v.to_bits()).collect()),
        }
    }
}

impl fmt::Display for Zeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Zeta::Unit => write!(f, "unit"),
            Zeta::Linear => write!(f, "linear"),
            Zeta::Quadratic => write!(f, "quad"),
            Zeta::Custom(_) => write!(f, "custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum ZetaKey {
    Unit,
    Linear,
    Quadratic,
    Custom(Vec<u64>),
}

/// Errors from dictionary construction.
#[derive(Debug, Clone, PartialEq)]
pub enum DictionaryError {
    /// n_rows < p_max: C_{p,N} needs N ≥ p for a positive definite Gram.
    SignalTooShort { n_rows: usize, p_max: usize },
    /// ζ must be strictly positive on 1..=P_max.
    NonPositiveZeta { period: usize, value: f64 },
    /// P_max must be at least 1.
    EmptyPeriodRange,
}

impl fmt::Display for DictionaryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DictionaryError::SignalTooShort { n_rows, p_max } => write!(
                f,
                "signal length {} is shorter than the largest period {}",
                n_rows, p_max
            ),
            DictionaryError::NonPositiveZeta { period, value } => {
                write!(f, "zeta({}) = {} is not strictly positive", period, value)
            }
            DictionaryError::EmptyPeriodRange => write!(f, "p_max must be >= 1"),
        }
    }
}

impl std::error::Error for DictionaryError {}

/// The Ramanujan period dictionary for signals of length `n_rows` and
/// periods 1..=p_max.
#[derive(Debug)]
pub struct PeriodDictionary {
    n_rows: usize,
    p_max: usize,
    zeta: Zeta,
    a: DMatrix<f64>,
    d_diag: DVector<f64>,
    b: DMatrix<f64>,
    col_period: Vec<usize>,
    block_start: Vec<usize>,
    gram: OnceLock<DMatrix<f64>>,
}

impl PeriodDictionary {
    /// Build the dictionary. Column count is Φ(P_max); columns of period p
    /// occupy the contiguous 0-based range Φ(p−1)..Φ(p).
    pub fn build(n_rows: usize, p_max: usize, zeta: Zeta) -> Result<Self, DictionaryError> {
        if p_max < 1 {
            return Err(DictionaryError::EmptyPeriodRange);
        }
        if n_rows < p_max {
            return Err(DictionaryError::SignalTooShort { n_rows, p_max });
        }
        for p in 1..=p_max {
            let z = zeta.eval(p);
            if !(z > 0.0) || !z.is_finite() {
                return Err(DictionaryError::NonPositiveZeta { period: p, value: z });
            }
        }
        let total = totient_cumsum(p_max as u64) as usize;
        let mut a = DMatrix::zeros(n_rows, total);
        let mut d = DVector::zeros(total);
        let mut col_period = Vec::with_capacity(total);
        let mut block_start = Vec::with_capacity(p_max + 1);
        let mut col = 0;
        block_start.push(0);
        for p in 1..=p_max {
            let block = to_f64(&build_cpn(p as u64, n_rows));
            a.view_mut((0, col), (n_rows, block.ncols())).copy_from(&block);
            for _ in 0..block.ncols() {
                d[col] = zeta.eval(p);
                col_period.push(p);
                col += 1;
            }
            block_start.push(col);
        }
        debug_assert_eq!(col, total);
        let mut b = a.clone();
        for j in 0..total {
            let inv = 1.0 / d[j];
            b.column_mut(j).scale_mut(inv);
        }
        Ok(PeriodDictionary {
            n_rows,
            p_max,
            zeta,
            a,
            d_diag: d,
            b,
            col_period,
            block_start,
            gram: OnceLock::new(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    pub fn zeta(&self) -> &Zeta {
        &self.zeta
    }

    /// Φ(P_max), the number of dictionary columns.
    pub fn n_cols(&self) -> usize {
        self.b.ncols()
    }

    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn d_diag(&self) -> &DVector<f64> {
        &self.d_diag
    }

    pub fn b_matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Owning period of each column, 1-based periods on 0-based columns.
    pub fn col_period(&self) -> &[usize] {
        &self.col_period
    }

    /// 0-based column range of the period-p block: Φ(p−1)..Φ(p).
    pub fn block_range(&self, p: usize) -> std::ops::Range<usize> {
        assert!(p >= 1 && p <= self.p_max, "period {} out of range", p);
        self.block_start[p - 1]..self.block_start[p]
    }

    /// Cached Gram matrix BᵀB.
    pub fn gram(&self) -> &DMatrix<f64> {
        self.gram.get_or_init(|| self.b.tr_mul(&self.b))
    }
}

fn cache() -> &'static Mutex<HashMap<(usize, usize, ZetaKey), Arc<PeriodDictionary>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize, ZetaKey), Arc<PeriodDictionary>>>> =
        OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Fetch (or build and memoize) the dictionary for (n_rows, p_max, ζ).
pub fn cached_dictionary(
    n_rows: usize,
    p_max: usize,
    zeta: &Zeta,
) -> Result<Arc<PeriodDictionary>, DictionaryError> {
    let key = (n_rows, p_max, zeta.cache_key());
    let mut map = cache().lock().unwrap();
    if let Some(dict) = map.get(&key) {
        return Ok(dict.clone());
    }
    let dict = Arc::new(PeriodDictionary::build(n_rows, p_max, zeta.clone())?);
    // Keep the cache from growing without bound across long test runs.
    if map.len() >= 64 {
        map.clear();
    }
    map.insert(key, dict.clone());
    Ok(dict)
}
