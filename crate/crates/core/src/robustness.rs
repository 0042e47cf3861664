//! Executable oracles for the robustness bounds: exact evaluation of the
//! truncated-correlation maxima, the minimal-eigenvalue bound K, the
//! matrix-norm bounds, the envelope/jitter/noise conditions, and Monte
//! Carlo support-recovery trials that check the guarantees empirically.
//!
//! Truncated correlations Σ_{n=1}^{m} c_{p_i}(n−s) c_{p_j}(n−t) /
//! (ζ(p_i)ζ(p_j)) are enumerated with m counting summed terms. The
//! primary range is m = 0..lcm−1 (the residual sums that actually occur
//! in the eigenvalue argument); the inclusive variant m = 0..lcm is kept
//! for comparison since the two readings differ on degenerate cases.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dictionary::PeriodDictionary;
use crate::ramanujan::{build_cp, euler_totient, lcm, ramanujan_sum, to_f64};
use crate::solver::{bpdn_solve, SolverError, SolverOptions};

/// Which partial-sum lengths enter the truncated-correlation maxima.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncCorrConvention {
    /// m = 0..lcm(p_i,p_j)−1: the residual lengths of the eigenvalue
    /// argument. Primary.
    ExcludeFullPeriod,
    /// m = 0..lcm(p_i,p_j): also admits the full-period sum.
    IncludeFullPeriod,
}

/// Max |Σ_{n=1}^{m} c_{pi}(n−s) c_{pj}(n−t)| / (ζ(pi)ζ(pj)) over the
/// stated ranges of m, s, t.
pub fn truncated_correlation(
    pi: usize,
    pj: usize,
    zeta_i: f64,
    zeta_j: f64,
    convention: TruncCorrConvention,
) -> f64 {
    let l = lcm(pi as u64, pj as u64) as i64;
    let hi = match convention {
        TruncCorrConvention::ExcludeFullPeriod => l - 1,
        TruncCorrConvention::IncludeFullPeriod => l,
    };
    let phi_i = euler_totient(pi as u64) as i64;
    let phi_j = euler_totient(pj as u64) as i64;
    let mut best: i64 = 0;
    for s in 0..phi_i {
        for t in 0..phi_j {
            let mut acc: i64 = 0;
            for m in 1..=hi {
                acc += ramanujan_sum(pi as u64, m - s) * ramanujan_sum(pj as u64, m - t);
                best = best.max(acc.abs());
            }
        }
    }
    best as f64 / (zeta_i * zeta_j)
}

/// (M_{S,S}, M_{S,S^c}) for the period set `true_periods` inside
/// 1..=p_max under the dictionary's penalization.
pub fn truncated_correlation_maxima(
    dict: &PeriodDictionary,
    true_periods: &[usize],
    convention: TruncCorrConvention,
) -> (f64, f64) {
    let zeta = dict.zeta();
    let in_s = |p: usize| true_periods.contains(&p);
    let mut m_ss = 0.0f64;
    let mut m_ssc = 0.0f64;
    for &pi in true_periods {
        for pj in 1..=dict.p_max() {
            let v = truncated_correlation(pi, pj, zeta.eval(pi), zeta.eval(pj), convention);
            if in_s(pj) {
                m_ss = m_ss.max(v);
            } else {
                m_ssc = m_ssc.max(v);
            }
        }
    }
    (m_ss, m_ssc)
}

#[derive(Debug)]
pub enum OracleError {
    PeriodOutOfRange { period: usize, p_max: usize },
    EmptyPeriodSet,
    DuplicatePeriods,
    SingularRestrictedGram,
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::PeriodOutOfRange { period, p_max } => {
                write!(f, "period {} exceeds P_max = {}", period, p_max)
            }
            OracleError::EmptyPeriodSet => write!(f, "at least one true period is required"),
            OracleError::DuplicatePeriods => write!(f, "true periods must be distinct"),
            OracleError::SingularRestrictedGram => {
                write!(f, "B_S'B_S is singular; increase the signal length")
            }
        }
    }
}

impl std::error::Error for OracleError {}

/// One concrete instance y = B_S x*_S with everything the bounds need.
pub struct TheoremInstance {
    pub dict: Arc<PeriodDictionary>,
    pub true_periods: Vec<usize>,
    pub x_star: DVector<f64>,
    pub y: DVector<f64>,
    /// Σ φ(p_i).
    pub n_s: usize,
    pub m_ss: f64,
    pub m_ssc: f64,
    /// K = min_i ⌊N/p_i⌋ λ_i / ζ²(p_i) − n_S·max(M_SS, M_SSc).
    pub k_bound: f64,
    /// ‖B_{S^c}ᵀ(I − B_S(B_SᵀB_S)⁻¹B_Sᵀ)‖_∞ · ‖y‖_∞.
    pub m1_sy: f64,
    /// ‖(B_SᵀB_S)⁻¹B_Sᵀ‖_∞ · ‖y‖_∞.
    pub m2_sy: f64,
    /// β_i = max_j |x*_{p_i}(j)| per true period.
    pub beta: Vec<f64>,
    sop: Vec<usize>,
    /// ‖(B_SᵀB_S)⁻¹‖_∞.
    pub inv_inf: f64,
    /// Row-sum norm ‖B_{S^c}ᵀ(I−P)‖_∞ without the ‖y‖_∞ factor.
    proj_raw_norm: f64,
    /// Row-sum norm ‖(B_SᵀB_S)⁻¹B_Sᵀ‖_∞ without the ‖y‖_∞ factor.
    lsq_raw_norm: f64,
    /// Exact λ_min(B_SᵀB_S).
    pub lambda_min_gram_s: f64,
    /// Exact ‖B_{S^c}ᵀB_S(B_SᵀB_S)⁻¹‖_∞.
    pub irrepresentable_norm: f64,
    /// Per-component clean signals y_i = B_{S_i} x*_{p_i}.
    components: Vec<DVector<f64>>,
}

impl TheoremInstance {
    /// Assemble an instance from a dictionary, a set of true periods and
    /// a coefficient vector supported on their blocks.
    pub fn new(
        dict: Arc<PeriodDictionary>,
        true_periods: &[usize],
        x_star: DVector<f64>,
    ) -> Result<Self, OracleError> {
        if true_periods.is_empty() {
            return Err(OracleError::EmptyPeriodSet);
        }
        let mut periods = true_periods.to_vec();
        periods.sort_unstable();
        periods.dedup();
        if periods.len() != true_periods.len() {
            return Err(OracleError::DuplicatePeriods);
        }
        for &p in &periods {
            if p < 1 || p > dict.p_max() {
                return Err(OracleError::PeriodOutOfRange {
                    period: p,
                    p_max: dict.p_max(),
                });
            }
        }
        assert_eq!(x_star.len(), dict.n_cols());
        let sop: Vec<usize> = periods.iter().flat_map(|&p| dict.block_range(p)).collect();
        for (i, v) in x_star.iter().enumerate() {
            if *v != 0.0 && !sop.contains(&i) {
                panic!("x_star has support outside the true-period blocks at column {}", i);
            }
        }
        let n = dict.n_rows();
        let b = dict.b_matrix();
        let bs = DMatrix::from_fn(n, sop.len(), |i, j| b[(i, sop[j])]);
        let gram_s = bs.tr_mul(&bs);
        let lambda_min_gram_s = gram_s.symmetric_eigenvalues().min();
        let gram_s_inv = gram_s
            .try_inverse()
            .ok_or(OracleError::SingularRestrictedGram)?;
        let inv_inf = inf_norm(&gram_s_inv);
        let y = b * &x_star;
        let y_inf = y.abs().max();

        // (inv · B_Sᵀ) is n_S × N, small enough to materialize.
        let lsq = &gram_s_inv * bs.transpose();
        let lsq_raw_norm = inf_norm(&lsq);

        // Row sums of B_{S^c}ᵀ(I−P) and B_{S^c}ᵀB_S(B_SᵀB_S)⁻¹, one
        // S^c column at a time (never materializes an N×N projector).
        let mut proj_raw_norm = 0.0f64;
        let mut irrepresentable_norm = 0.0f64;
        let s_mask: Vec<bool> = {
            let mut m = vec![false; dict.n_cols()];
            for &c in &sop {
                m[c] = true;
            }
            m
        };
        for col in 0..dict.n_cols() {
            if s_mask[col] {
                continue;
            }
            let a = b.column(col);
            let w = bs.tr_mul(&a);
            let u = &gram_s_inv * &w;
            irrepresentable_norm = irrepresentable_norm.max(u.abs().sum());
            let v = a - &bs * &u;
            proj_raw_norm = proj_raw_norm.max(v.abs().sum());
        }

        let (m_ss, m_ssc) =
            truncated_correlation_maxima(&dict, &periods, TruncCorrConvention::ExcludeFullPeriod);
        let m_big = m_ss.max(m_ssc);
        let n_s: usize = periods.iter().map(|&p| euler_totient(p as u64) as usize).sum();
        let mut k_bound = f64::INFINITY;
        for &p in &periods {
            let cp = to_f64(&build_cp(p as u64));
            let lam_p = cp.tr_mul(&cp).symmetric_eigenvalues().min();
            let term = (n / p) as f64 * lam_p / dict.zeta().eval(p).powi(2);
            k_bound = k_bound.min(term);
        }
        k_bound -= n_s as f64 * m_big;

        let mut beta = Vec::with_capacity(periods.len());
        let mut components = Vec::with_capacity(periods.len());
        for &p in &periods {
            let range = dict.block_range(p);
            let mut b_max = 0.0f64;
            let mut comp = DVector::zeros(n);
            for c in range {
                b_max = b_max.max(x_star[c].abs());
                comp.axpy(x_star[c], &b.column(c), 1.0);
            }
            beta.push(b_max);
            components.push(comp);
        }

        Ok(TheoremInstance {
            m1_sy: proj_raw_norm * y_inf,
            m2_sy: lsq_raw_norm * y_inf,
            dict,
            true_periods: periods,
            x_star,
            y,
            n_s,
            m_ss,
            m_ssc,
            k_bound,
            beta,
            sop,
            inv_inf,
            proj_raw_norm,
            lsq_raw_norm,
            lambda_min_gram_s,
            irrepresentable_norm,
            components,
        })
    }

    /// Draw an instance with coefficients ±U(0.5, 1.5) on the SOP blocks.
    pub fn generate(
        dict: Arc<PeriodDictionary>,
        true_periods: &[usize],
        seed: u64,
    ) -> Result<Self, OracleError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = DVector::zeros(dict.n_cols());
        for &p in true_periods {
            for c in dict.block_range(p) {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                x[c] = sign * rng.random_range(0.5..1.5);
            }
        }
        TheoremInstance::new(dict, true_periods, x)
    }

    pub fn sop(&self) -> &[usize] {
        &self.sop
    }

    /// ‖B_{S^c}ᵀ(I−P)‖_∞ · ‖y_i‖_∞ for component i.
    pub fn m1_s_component(&self, i: usize) -> f64 {
        self.proj_raw_norm * self.components[i].abs().max()
    }

    /// ‖(B_SᵀB_S)⁻¹B_Sᵀ‖_∞ · ‖y_i‖_∞ for component i.
    pub fn m2_s_component(&self, i: usize) -> f64 {
        self.lsq_raw_norm * self.components[i].abs().max()
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).abs().sum())
        .fold(0.0, f64::max)
}

/// Exact evaluations behind the two eigenvalue lemmas.
#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub k_bound: f64,
    pub k_positive: bool,
    pub lambda_min_gram_s: f64,
    /// λ_min(B_SᵀB_S) ≥ K.
    pub lemma1_holds: bool,
    pub irrepresentable_norm: f64,
    pub lemma2_bound: Option<f64>,
    /// ‖B_{S^c}ᵀB_S(B_SᵀB_S)⁻¹‖_∞ ≤ n_S²·M_{S,S^c}/K (when K > 0).
    pub lemma2_holds: Option<bool>,
    pub inv_inf: f64,
    /// ‖(B_SᵀB_S)⁻¹‖_∞ ≤ 1/K (when K > 0).
    pub inv_bound_holds: Option<bool>,
}

pub fn lemma_bounds(inst: &TheoremInstance) -> LemmaReport {
    let k = inst.k_bound;
    let k_positive = k > 0.0;
    let lemma2_bound = if k_positive {
        Some(inst.n_s as f64 * inst.n_s as f64 * inst.m_ssc / k)
    } else {
        None
    };
    LemmaReport {
        k_bound: k,
        k_positive,
        lambda_min_gram_s: inst.lambda_min_gram_s,
        lemma1_holds: inst.lambda_min_gram_s >= k - 1e-9 * k.abs().max(1.0),
        irrepresentable_norm: inst.irrepresentable_norm,
        lemma2_bound,
        lemma2_holds: lemma2_bound.map(|b| inst.irrepresentable_norm <= b * (1.0 + 1e-12)),
        inv_inf: inst.inv_inf,
        inv_bound_holds: if k_positive {
            Some(inst.inv_inf <= (1.0 + 1e-12) / k)
        } else {
            None
        },
    }
}

/// Perturbation families of the three robustness theorems.
#[derive(Debug, Clone)]
pub enum PerturbationSpec {
    /// Multiplicative envelope with max |e_i − 1| = max_dev.
    Envelope { max_dev: f64 },
    /// Within-block permutations applied per component.
    Jitter,
    /// Additive white Gaussian noise of standard deviation sigma.
    Noise { sigma: f64 },
}

/// Evaluation of a theorem's hypothesis and detection thresholds.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    /// K > n_S²·M_{S,S^c}.
    pub precondition_holds: bool,
    /// The main hypothesis on the perturbation/λ, with its margin
    /// (positive = satisfied).
    pub hypothesis_holds: bool,
    pub hypothesis_margin: f64,
    /// Probability guarantee: 1 for the deterministic theorems, the
    /// closed-form bound for Gaussian noise.
    pub guarantee: f64,
    /// β detection threshold; periods with β_i above it must be found.
    pub beta_threshold: f64,
    /// Per true period: β_i and whether it clears the threshold.
    pub beta_clears: Vec<(usize, f64, bool)>,
    /// The Gaussian β threshold's square-root argument went negative and
    /// was clamped to zero.
    pub beta_threshold_clamped: bool,
}

pub fn theorem_conditions(
    inst: &TheoremInstance,
    perturbation: &PerturbationSpec,
    lambda: f64,
) -> ConditionReport {
    let k = inst.k_bound;
    let nsq_m = (inst.n_s * inst.n_s) as f64 * inst.m_ssc;
    let precondition_holds = k > nsq_m;
    let shrink = 1.0 - nsq_m / k;
    let mut clamped = false;

    let (hypothesis_holds, hypothesis_margin, guarantee, beta_threshold) = match perturbation {
        PerturbationSpec::Envelope { max_dev } => {
            let allow = lambda / inst.m1_sy * shrink;
            let thr = max_dev * inst.m2_sy + lambda * inst.inv_inf;
            (
                precondition_holds && *max_dev < allow,
                allow - max_dev,
                1.0,
                thr,
            )
        }
        PerturbationSpec::Jitter => {
            let m1_sum: f64 = (0..inst.true_periods.len())
                .map(|i| inst.m1_s_component(i))
                .sum();
            let lambda_needed = 2.0 * k * m1_sum / (k - nsq_m);
            let m2_sum: f64 = (0..inst.true_periods.len())
                .map(|i| inst.m2_s_component(i))
                .sum();
            let thr = 2.0 * m2_sum + lambda * inst.inv_inf;
            (
                precondition_holds && lambda > lambda_needed,
                lambda - lambda_needed,
                1.0,
                thr,
            )
        }
        PerturbationSpec::Noise { sigma } => {
            let b = inst.dict.b_matrix();
            let c_const = (0..b.ncols())
                .map(|j| b.column(j).norm_squared())
                .fold(0.0, f64::max);
            let phi_total = inst.dict.n_cols() as f64;
            let excess = phi_total - inst.n_s as f64;
            let guarantee = if *sigma == 0.0 {
                1.0
            } else {
                let expo = lambda * lambda * (k - nsq_m) * (k - nsq_m)
                    / (2.0 * c_const * sigma * sigma * k * k);
                1.0 - excess * (-expo).exp()
            };
            let mut arg = lambda * lambda * (k - nsq_m) * (k - nsq_m) / k.powi(4)
                + 2.0 * c_const * sigma * sigma
                    * ((inst.n_s as f64).ln() - excess.ln())
                    / (k * k);
            if arg < 0.0 {
                arg = 0.0;
                clamped = true;
            }
            let thr = arg.sqrt() + lambda * inst.inv_inf;
            (precondition_holds, guarantee - 0.5, guarantee, thr)
        }
    };
    let beta_clears = inst
        .true_periods
        .iter()
        .zip(&inst.beta)
        .map(|(&p, &b)| (p, b, b > beta_threshold))
        .collect();
    ConditionReport {
        precondition_holds,
        hypothesis_holds,
        hypothesis_margin,
        guarantee,
        beta_threshold,
        beta_clears,
        beta_threshold_clamped: clamped,
    }
}

/// Outcome of a Monte Carlo recovery run.
#[derive(Debug, Clone)]
pub struct TrialReport {
    pub trials: usize,
    pub successes: usize,
    pub support_violations: usize,
    pub missed_detections: usize,
    pub solver_failures: usize,
    /// The theorem's guarantee for comparison.
    pub guarantee: f64,
    /// Conditions evaluated once on the instance.
    pub conditions: ConditionReport,
    /// Mean number of nonzero solution coordinates across trials.
    pub mean_nnz: f64,
}

impl TrialReport {
    /// Successes over trials the solver completed.
    pub fn success_rate(&self) -> f64 {
        let done = self.trials - self.solver_failures;
        if done == 0 {
            0.0
        } else {
            self.successes as f64 / done as f64
        }
    }
}

const COORD_ABS: f64 = 1e-10;
const COORD_REL: f64 = 1e-6;

/// Run `trials` perturbed solves and score support containment plus
/// detection of every period whose β clears the theorem threshold.
pub fn recovery_trial(
    inst: &TheoremInstance,
    perturbation: &PerturbationSpec,
    lambda: f64,
    trials: usize,
    seed: u64,
    opts: &SolverOptions,
) -> TrialReport {
    assert!(trials >= 1);
    let conditions = theorem_conditions(inst, perturbation, lambda);
    let required: Vec<usize> = conditions
        .beta_clears
        .iter()
        .filter(|(_, _, clears)| *clears)
        .map(|(p, _, _)| *p)
        .collect();
    let n = inst.dict.n_rows();
    let mut successes = 0;
    let mut support_violations = 0;
    let mut missed = 0;
    let mut solver_failures = 0;
    let mut nnz_total = 0usize;
    let mut completed = 0usize;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64).wrapping_mul(0x9E37_79B9));
        let y_tilde = match perturbation {
            PerturbationSpec::Envelope { max_dev } => DVector::from_fn(n, |i, _| {
                inst.y[i] * (1.0 + rng.random_range(-max_dev..=*max_dev))
            }),
            PerturbationSpec::Noise { sigma } => {
                let normal = Normal::new(0.0, *sigma).unwrap();
                DVector::from_fn(n, |i, _| inst.y[i] + normal.sample(&mut rng))
            }
            PerturbationSpec::Jitter => {
                let mut acc = DVector::zeros(n);
                for (i, &p) in inst.true_periods.iter().enumerate() {
                    let comp = &inst.components[i];
                    let mut jittered = comp.clone();
                    let blocks = n / p;
                    for blk in 0..blocks {
                        if rng.random_bool(0.5) {
                            continue; // identity block
                        }
                        let start = blk * p;
                        let mut idx: Vec<usize> = (start..start + p).collect();
                        idx.shuffle(&mut rng);
                        for (off, &src) in idx.iter().enumerate() {
                            jittered[start + off] = comp[src];
                        }
                    }
                    acc += jittered;
                }
                acc
            }
        };
        match bpdn_solve(&inst.dict, &y_tilde, lambda, opts) {
            Err(SolverError::NotConverged(_)) => {
                solver_failures += 1;
                continue;
            }
            Err(e) => panic!("unexpected solver error: {}", e),
            Ok(sol) => {
                completed += 1;
                let cut = COORD_ABS + COORD_REL * sol.x.abs().max();
                let mut contained = true;
                let mut nnz = 0;
                for (i, v) in sol.x.iter().enumerate() {
                    if v.abs() > cut {
                        nnz += 1;
                        if !inst.sop.contains(&i) {
                            contained = false;
                        }
                    }
                }
                nnz_total += nnz;
                let mut all_detected = true;
                for &p in &required {
                    let detected = inst
                        .dict
                        .block_range(p)
                        .any(|c| sol.x[c].abs() > cut);
                    if !detected {
                        all_detected = false;
                    }
                }
                if !contained {
                    support_violations += 1;
                }
                if !all_detected {
                    missed += 1;
                }
                if contained && all_detected {
                    successes += 1;
                }
            }
        }
    }
    let _ = completed;
    TrialReport {
        trials,
        successes,
        support_violations,
        missed_detections: missed,
        solver_failures,
        guarantee: conditions.guarantee,
        conditions,
        mean_nnz: if trials > solver_failures {
            nnz_total as f64 / (trials - solver_failures) as f64
        } else {
            0.0
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{cached_dictionary, Zeta};
    use approx::assert_relative_eq;

    #[test]
    fn single_period_one_conventions() {
        // {1}: the primary range is empty (lcm − 1 = 0), the inclusive
        // range admits the single term c_1(1)² = 1.
        let excl = truncated_correlation(1, 1, 1.0, 1.0, TruncCorrConvention::ExcludeFullPeriod);
        let incl = truncated_correlation(1, 1, 1.0, 1.0, TruncCorrConvention::IncludeFullPeriod);
        assert_eq!(excl, 0.0);
        assert_eq!(incl, 1.0);
        // ζ scaling: doubling ζ divides by 4.
        let scaled = truncated_correlation(1, 1, 2.0, 2.0, TruncCorrConvention::IncludeFullPeriod);
        assert_relative_eq!(scaled, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn pair_two_three_brute_force() {
        // Independent brute force over all shifts and partial lengths.
        let brute = |hi: i64| -> f64 {
            let mut best: i64 = 0;
            for s in 0..1 {
                for t in 0..2 {
                    let mut acc = 0i64;
                    for m in 1..=hi {
                        acc += ramanujan_sum(2, m - s) * ramanujan_sum(3, m - t);
                        best = best.max(acc.abs());
                    }
                }
            }
            best as f64
        };
        let got = truncated_correlation(2, 3, 1.0, 1.0, TruncCorrConvention::ExcludeFullPeriod);
        assert_eq!(got, brute(5));
        let got = truncated_correlation(2, 3, 1.0, 1.0, TruncCorrConvention::IncludeFullPeriod);
        assert_eq!(got, brute(6));
    }

    #[test]
    fn zeta_scaling_divides_maxima() {
        let d1 = cached_dictionary(60, 8, &Zeta::Unit).unwrap();
        let d2 = cached_dictionary(60, 8, &Zeta::Custom(vec![2.0; 8])).unwrap();
        let (ss1, ssc1) =
            truncated_correlation_maxima(&d1, &[2, 3], TruncCorrConvention::ExcludeFullPeriod);
        let (ss2, ssc2) =
            truncated_correlation_maxima(&d2, &[2, 3], TruncCorrConvention::ExcludeFullPeriod);
        assert_relative_eq!(ss2, ss1 / 4.0, max_relative = 1e-12);
        assert_relative_eq!(ssc2, ssc1 / 4.0, max_relative = 1e-12);
    }

    #[test]
    fn lemma_bounds_hold_on_small_instances() {
        // {3}, N = 30: λ_min(B_S'B_S) against the closed-form K.
        let dict = cached_dictionary(30, 6, &Zeta::Unit).unwrap();
        let inst = TheoremInstance::generate(dict, &[3], 7).unwrap();
        let rep = lemma_bounds(&inst);
        assert!(rep.k_positive);
        assert!(rep.lemma1_holds, "{:?}", rep);
        assert_eq!(rep.lemma2_holds, Some(true));
        assert_eq!(rep.inv_bound_holds, Some(true));

        // {3,5}, N = 150.
        let dict = cached_dictionary(150, 10, &Zeta::Unit).unwrap();
        let inst = TheoremInstance::generate(dict, &[3, 5], 8).unwrap();
        let rep = lemma_bounds(&inst);
        assert!(rep.lemma1_holds);
        if rep.k_positive {
            assert_eq!(rep.lemma2_holds, Some(true));
            assert_eq!(rep.inv_bound_holds, Some(true));
        }
    }

    #[test]
    fn small_n_reports_nonpositive_k() {
        let dict = cached_dictionary(15, 10, &Zeta::Unit).unwrap();
        let inst = TheoremInstance::generate(dict, &[3, 5], 9).unwrap();
        let rep = lemma_bounds(&inst);
        assert!(!rep.k_positive);
        assert!(rep.lemma2_holds.is_none());
        // Exact values still reported.
        assert!(rep.lambda_min_gram_s > 0.0);
        assert!(rep.irrepresentable_norm >= 0.0);
    }

    #[test]
    fn identity_envelope_condition_always_holds() {
        let dict = cached_dictionary(2400, 12, &Zeta::Unit).unwrap();
        let inst = TheoremInstance::generate(dict, &[3, 5], 10).unwrap();
        assert!(inst.k_bound > (inst.n_s * inst.n_s) as f64 * inst.m_ssc);
        for lambda in [0.01, 1.0, 100.0] {
            let rep = theorem_conditions(&inst, &PerturbationSpec::Envelope { max_dev: 0.0 }, lambda);
            assert!(rep.hypothesis_holds, "lambda = {}", lambda);
            assert_eq!(rep.guarantee, 1.0);
        }
    }

    #[test]
    fn zero_sigma_gives_unit_probability() {
        let dict = cached_dictionary(2400, 12, &Zeta::Unit).unwrap();
        let inst = TheoremInstance::generate(dict, &[3, 5], 11).unwrap();
        let rep = theorem_conditions(&inst, &PerturbationSpec::Noise { sigma: 0.0 }, 1.0);
        assert_eq!(rep.guarantee, 1.0);
    }

    #[test]
    fn concrete_envelope_margin() {
        // Plug-in arithmetic on a concrete instance: δ = 0.01 with a λ
        // that makes the allowance exceed it.
        let dict = cached_dictionary(3000, 8, &Zeta::Unit).unwrap();
        let inst = TheoremInstance::generate(dict, &[3, 5], 12).unwrap();
        assert!(inst.k_bound > (inst.n_s * inst.n_s) as f64 * inst.m_ssc);
        let shrink = 1.0 - (inst.n_s * inst.n_s) as f64 * inst.m_ssc / inst.k_bound;
        let lambda = 0.02 * inst.m1_sy / shrink; // allowance exactly 0.02
        let rep = theorem_conditions(&inst, &PerturbationSpec::Envelope { max_dev: 0.01 }, lambda);
        assert!(rep.hypothesis_holds);
        assert_relative_eq!(rep.hypothesis_margin, 0.01, max_relative = 1e-9);
        let rep = theorem_conditions(&inst, &PerturbationSpec::Envelope { max_dev: 0.03 }, lambda);
        assert!(!rep.hypothesis_holds);
    }

    #[test]
    fn envelope_recovery_succeeds_under_hypothesis() {
        let dict = cached_dictionary(2400, 10, &Zeta::Unit).unwrap();
        let inst = TheoremInstance::generate(dict, &[3, 4], 13).unwrap();
        let shrink = 1.0 - (inst.n_s * inst.n_s) as f64 * inst.m_ssc / inst.k_bound;
        assert!(shrink > 0.0);
        let beta_min = inst.beta.iter().cloned().fold(f64::INFINITY, f64::min);
        let lambda = 0.25 * beta_min / inst.inv_inf;
        let allow = lambda / inst.m1_sy * shrink;
        let max_dev = (0.9 * allow).min(0.25 * beta_min / inst.m2_sy);
        let rep = recovery_trial(
            &inst,
            &PerturbationSpec::Envelope { max_dev },
            lambda,
            20,
            99,
            &SolverOptions::default(),
        );
        assert!(rep.conditions.hypothesis_holds);
        assert!(
            rep.conditions.beta_clears.iter().all(|(_, _, c)| *c),
            "{:?}",
            rep.conditions.beta_clears
        );
        assert_eq!(rep.solver_failures, 0);
        assert_eq!(rep.successes, 20, "{:?}", rep);
    }
}
