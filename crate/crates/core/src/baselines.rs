//! Greedy periodicity-transform baselines over Ramanujan subspaces:
//! Small-to-Large, M-best and Best-Correlation.
//!
//! All three work with orthogonal projections onto the per-period
//! subspaces spanned by the C_{p,N} blocks (the unpenalized dictionary
//! columns). Selections are scored by the energy of the orthogonal
//! projection; ties go to the lowest period. Reported EOP is squared
//! coefficient energy in those blocks, so the vectors are directly
//! comparable with the l1 transform's.

use nalgebra::{Cholesky, DVector, Dyn};

use crate::dictionary::PeriodDictionary;
use crate::rpt::PtResult;

/// Per-period orthogonal projectors onto span(C_{p,N}).
pub struct ProjectorSet<'a> {
    dict: &'a PeriodDictionary,
    factors: Vec<Cholesky<f64, Dyn>>,
}

impl<'a> ProjectorSet<'a> {
    pub fn new(dict: &'a PeriodDictionary) -> Self {
        let mut factors = Vec::with_capacity(dict.p_max());
        for p in 1..=dict.p_max() {
            let block = dict.a_matrix().columns_range(dict.block_range(p)).into_owned();
            let gram = block.tr_mul(&block);
            factors.push(Cholesky::new(gram).expect("C_{p,N} gram is positive definite"));
        }
        ProjectorSet { dict, factors }
    }

    /// Least-squares coefficients and projection of `r` onto the period-p
    /// subspace.
    pub fn project(&self, p: usize, r: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let block = self.dict.a_matrix().columns_range(self.dict.block_range(p));
        let mut coeffs = block.tr_mul(r);
        self.factors[p - 1].solve_mut(&mut coeffs);
        let proj = block * &coeffs;
        (coeffs, proj)
    }

    /// Energy removed by projecting `r` onto period p.
    fn projection_energy(&self, p: usize, r: &DVector<f64>) -> f64 {
        let (_, proj) = self.project(p, r);
        proj.norm_squared()
    }

    fn result(&self, coeffs_by_period: Vec<DVector<f64>>, residual: &DVector<f64>, rounds: usize) -> PtResult {
        let dict = self.dict;
        let mut x = DVector::zeros(dict.n_cols());
        for (p_idx, w) in coeffs_by_period.iter().enumerate() {
            if w.len() == 0 {
                continue;
            }
            let range = dict.block_range(p_idx + 1);
            for (off, col) in range.enumerate() {
                x[col] += w[off];
            }
        }
        let eop = crate::rpt::eop_of(&x, dict.p_max());
        let ip: Vec<usize> = (1..=dict.p_max()).filter(|&p| eop[p - 1] > 0.0).collect();
        let mut sop = Vec::new();
        for &p in &ip {
            sop.extend(dict.block_range(p));
        }
        PtResult {
            x,
            eop,
            ip,
            sop,
            kkt_residual: 0.0,
            iterations: rounds,
            objective: 0.5 * residual.norm_squared(),
        }
    }
}

/// Small-to-Large: walk p = 1..P_max, removing any subspace component
/// whose projection norm exceeds `threshold` times the current residual
/// norm. Panics unless 0 < threshold < 1.
pub fn small_to_large(y: &DVector<f64>, dict: &PeriodDictionary, threshold: f64) -> PtResult {
    assert!(
        threshold > 0.0 && threshold < 1.0,
        "threshold must lie strictly between 0 and 1"
    );
    let projs = ProjectorSet::new(dict);
    let mut coeffs: Vec<DVector<f64>> = vec![DVector::zeros(0); dict.p_max()];
    let mut r = y.clone();
    for p in 1..=dict.p_max() {
        let r_norm = r.norm();
        if r_norm == 0.0 {
            break;
        }
        let (w, proj) = projs.project(p, &r);
        if proj.norm() > threshold * r_norm {
            r -= proj;
            coeffs[p - 1] = w;
        }
    }
    projs.result(coeffs, &r, dict.p_max())
}

/// M-best: keep the `m` periods whose projections remove the most energy,
/// then sweep slot replacements until a full sweep changes nothing (or
/// `max_sweeps` is hit).
pub fn m_best(y: &DVector<f64>, dict: &PeriodDictionary, m: usize, max_sweeps: usize) -> PtResult {
    assert!(m >= 1, "m must be >= 1");
    let projs = ProjectorSet::new(dict);
    let mut r = y.clone();
    // Greedy initialization.
    let mut slots: Vec<(usize, DVector<f64>, DVector<f64>)> = Vec::new(); // (p, coeffs, component)
    for _ in 0..m.min(dict.p_max()) {
        let taken: Vec<usize> = slots.iter().map(|s| s.0).collect();
        let Some(best_p) = best_period(&projs, &r, &taken) else {
            break;
        };
        let (w, proj) = projs.project(best_p, &r);
        r -= &proj;
        slots.push((best_p, w, proj));
    }
    // Replacement sweeps.
    let mut sweeps = 0;
    for _ in 0..max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for i in 0..slots.len() {
            let freed = r.clone() + &slots[i].2;
            let taken: Vec<usize> = slots
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, s)| s.0)
                .collect();
            let Some(best_p) = best_period(&projs, &freed, &taken) else {
                continue;
            };
            let (w, proj) = projs.project(best_p, &freed);
            if best_p != slots[i].0 {
                changed = true;
            }
            r = freed - &proj;
            slots[i] = (best_p, w, proj);
        }
        if !changed {
            break;
        }
    }
    let mut coeffs: Vec<DVector<f64>> = vec![DVector::zeros(0); dict.p_max()];
    for (p, w, _) in slots {
        if coeffs[p - 1].len() == 0 {
            coeffs[p - 1] = w;
        } else {
            coeffs[p - 1] += w;
        }
    }
    projs.result(coeffs, &r, sweeps)
}

/// Best-Correlation: `m` greedy rounds of projecting onto the period that
/// correlates most (in projection energy) with the residual.
pub fn best_correlation(y: &DVector<f64>, dict: &PeriodDictionary, m: usize) -> PtResult {
    assert!(m >= 1, "m must be >= 1");
    let projs = ProjectorSet::new(dict);
    let mut r = y.clone();
    let mut coeffs: Vec<DVector<f64>> = vec![DVector::zeros(0); dict.p_max()];
    let mut rounds = 0;
    for _ in 0..m {
        let Some(best_p) = best_period(&projs, &r, &[]) else {
            break;
        };
        let (w, proj) = projs.project(best_p, &r);
        if proj.norm_squared() == 0.0 {
            break;
        }
        r -= &proj;
        if coeffs[best_p - 1].len() == 0 {
            coeffs[best_p - 1] = w;
        } else {
            coeffs[best_p - 1] += w;
        }
        rounds += 1;
    }
    projs.result(coeffs, &r, rounds)
}

/// Period (not in `exclude`) whose subspace removes the most energy from
/// `r`; ties break toward the lowest period. None when `r` is zero or all
/// periods are excluded.
fn best_period(projs: &ProjectorSet, r: &DVector<f64>, exclude: &[usize]) -> Option<usize> {
    if r.norm_squared() == 0.0 {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for p in 1..=projs.dict.p_max() {
        if exclude.contains(&p) {
            continue;
        }
        let e = projs.projection_energy(p, r);
        match best {
            Some((_, be)) if e <= be => {}
            _ => best = Some((p, e)),
        }
    }
    best.map(|(p, _)| p)
}
