use rtfa_core::dictionary::{cached_dictionary, Zeta};
use rtfa_core::robustness::*;
use rtfa_core::solver::SolverOptions;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    for (periods, p_max, n) in [
        (vec![3usize, 5], 25usize, 4000usize),
        (vec![3, 5], 20, 2500),
        (vec![2, 7], 20, 2500),
        (vec![4, 6], 18, 2000),
        (vec![3], 15, 1200),
        (vec![5, 8], 16, 1800),
        (vec![2, 3, 5], 12, 1200),
    ] {
        let dict = cached_dictionary(n, p_max, &Zeta::Unit).unwrap();
        let inst = TheoremInstance::generate(dict, &periods, 1).unwrap();
        let nsqm = (inst.n_s * inst.n_s) as f64 * inst.m_ssc;
        let shrink = 1.0 - nsqm / inst.k_bound;
        let beta_min = inst.beta.iter().cloned().fold(f64::INFINITY, f64::min);
        let lambda = 0.25 * beta_min / inst.inv_inf;
        let allow = lambda / inst.m1_sy * shrink;
        println!(
            "{:?} pmax={} N={}: K={:.0} n2M={:.0} ok={} | m_ss={:.1} m_ssc={:.1} | lam={:.0} allow={:.2e} thr_margin={:.2}",
            periods, p_max, n, inst.k_bound, nsqm, inst.k_bound > nsqm,
            inst.m_ss, inst.m_ssc, lambda, allow,
            beta_min / (0.9_f64.min(allow.max(0.0)) * inst.m2_sy + lambda * inst.inv_inf)
        );
        // jitter threshold
        let m1sum: f64 = (0..periods.len()).map(|i| inst.m1_s_component(i)).sum();
        if inst.k_bound > nsqm {
            let lam_j = 2.0 * inst.k_bound * m1sum / (inst.k_bound - nsqm);
            let by = inst.dict.b_matrix().tr_mul(&inst.y).abs().max();
            println!("   jitter lam_needed={:.0}  ||B'y||inf={:.0}  zero_forced={}", lam_j, by, 1.02*lam_j >= by);
        }
    }
    // noise grid feasibility
    for (n, sigma) in [(1200usize, 0.3f64), (1200, 0.6), (2400, 0.3), (2400, 0.6)] {
        let p_max = 20;
        let dict = cached_dictionary(n, p_max, &Zeta::Unit).unwrap();
        let inst = TheoremInstance::generate(dict.clone(), &[3, 5], 2).unwrap();
        let b = dict.b_matrix();
        let c_const = (0..b.ncols()).map(|j| b.column(j).norm_squared()).fold(0.0, f64::max);
        let phi = dict.n_cols() as f64;
        let lambda = 2.5 * sigma * (2.0 * c_const * (2.0 * (phi - inst.n_s as f64)).ln()).sqrt();
        let rep = theorem_conditions(&inst, &PerturbationSpec::Noise { sigma }, lambda);
        println!(
            "noise N={} sigma={}: guarantee={:.6} thr={:.3} beta_min={:.2} clears_all={} clamped={}",
            n, sigma, rep.guarantee, rep.beta_threshold,
            inst.beta.iter().cloned().fold(f64::INFINITY, f64::min),
            rep.beta_clears.iter().all(|(_,_,c)| *c), rep.beta_threshold_clamped
        );
        let tr = recovery_trial(&inst, &PerturbationSpec::Noise { sigma }, lambda, 50, 5, &SolverOptions::default());
        println!("   50 trials: succ={} viol={} miss={} solverfail={} nnz={:.1}", tr.successes, tr.support_violations, tr.missed_detections, tr.solver_failures, tr.mean_nnz);
    }
    println!("elapsed {:?}", t0.elapsed());
}
