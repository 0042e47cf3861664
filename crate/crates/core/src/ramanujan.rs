//! Ramanujan sums and the integer matrices built from them.
//!
//! Everything here is exact integer arithmetic: `c_p(n)` is evaluated by
//! summing complex exponentials and rounding, with a hard check that the
//! imaginary part vanishes. The circulant `B_p`, its leading block `C_p`,
//! the periodic extension `C_{p,N}` and the divisor concatenation `F_p`
//! are all returned as `i64` matrices so the classical identities
//! (autocorrelation, orthogonality) can be tested without tolerance.

use nalgebra::DMatrix;

/// Greatest common divisor.
pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Least common multiple.
pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Euler totient φ(n): the number of m ≤ n coprime to n.
///
/// Panics for n = 0 (the function is defined on positive integers).
pub fn euler_totient(n: u64) -> u64 {
    assert!(n >= 1, "euler_totient: n must be >= 1, got 0");
    (1..=n).filter(|&m| gcd(m, n) == 1).count() as u64
}

/// Totient summation Φ(n) = Σ_{i=1}^{n} φ(i).
///
/// Panics for n = 0.
pub fn totient_cumsum(n: u64) -> u64 {
    assert!(n >= 1, "totient_cumsum: n must be >= 1, got 0");
    (1..=n).map(euler_totient).sum()
}

/// Divisors of `p` in increasing order, by trial division.
pub fn divisors(p: u64) -> Vec<u64> {
    assert!(p >= 1, "divisors: p must be >= 1");
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= p {
        if p % d == 0 {
            small.push(d);
            if d * d != p {
                large.push(p / d);
            }
        }
        d += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

/// The p-th Ramanujan sum c_p(n) = Σ_{k≤p, (k,p)=1} e^{2πikn/p}.
///
/// Evaluated by direct summation of the exponentials; the imaginary
/// residual must stay below 1e-9 or an implementation bug is signalled
/// by a panic. The result is the rounded (exact) integer value.
pub fn ramanujan_sum(p: u64, n: i64) -> i64 {
    assert!(p >= 1, "ramanujan_sum: p must be >= 1");
    let mut re = 0.0f64;
    let mut im = 0.0f64;
    for k in 1..=p {
        if gcd(k, p) == 1 {
            let theta = 2.0 * std::f64::consts::PI * (k as f64) * (n as f64) / (p as f64);
            re += theta.cos();
            im += theta.sin();
        }
    }
    assert!(
        im.abs() < 1e-9,
        "ramanujan_sum: imaginary residual {} for c_{}({})",
        im,
        p,
        n
    );
    let rounded = re.round();
    assert!(
        (re - rounded).abs() < 1e-9,
        "ramanujan_sum: non-integer real part {} for c_{}({})",
        re,
        p,
        n
    );
    rounded as i64
}

/// The full p×p circulant B_p with (i,j) entry c_p(i−j), 0-based.
pub fn build_bp(p: u64) -> DMatrix<i64> {
    assert!(p >= 1);
    // One period of c_p suffices; c_p is p-periodic.
    let row: Vec<i64> = (0..p as i64).map(|n| ramanujan_sum(p, n)).collect();
    DMatrix::from_fn(p as usize, p as usize, |i, j| {
        row[(i as i64 - j as i64).rem_euclid(p as i64) as usize]
    })
}

/// C_p: the first φ(p) columns of B_p, p × φ(p).
pub fn build_cp(p: u64) -> DMatrix<i64> {
    let phi = euler_totient(p) as usize;
    build_bp(p).columns(0, phi).into_owned()
}

/// C_{p,N}: C_p tiled ⌊N/p⌋ times and padded with its first N mod p rows.
///
/// Panics when `n_rows < p`; the Gram C_{p,N}ᵀC_{p,N} is positive definite
/// only for N ≥ p.
pub fn build_cpn(p: u64, n_rows: usize) -> DMatrix<i64> {
    assert!(
        n_rows >= p as usize,
        "build_cpn: n_rows = {} must be >= p = {}",
        n_rows,
        p
    );
    let cp = build_cp(p);
    DMatrix::from_fn(n_rows, cp.ncols(), |i, j| cp[(i % p as usize, j)])
}

/// F_p: horizontal concatenation of C_{p_i,p} over the divisors p_i of p,
/// in increasing order. Square p×p since Σ_{p_i|p} φ(p_i) = p.
pub fn build_fp(p: u64) -> DMatrix<i64> {
    let mut out = DMatrix::zeros(p as usize, p as usize);
    let mut col = 0;
    for d in divisors(p) {
        let block = build_cpn(d, p as usize);
        out.view_mut((0, col), (p as usize, block.ncols()))
            .copy_from(&block);
        col += block.ncols();
    }
    debug_assert_eq!(col, p as usize);
    out
}

/// Numerical rank: singular values above `rel_tol`·σ_max.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Convert an integer matrix to f64.
pub fn to_f64(m: &DMatrix<i64>) -> DMatrix<f64> {
    m.map(|v| v as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn totient_by_factorization(n: u64) -> u64 {
        let mut n = n;
        let mut result = n;
        let mut p = 2;
        while p * p <= n {
            if n % p == 0 {
                while n % p == 0 {
                    n /= p;
                }
                result -= result / p;
            }
            p += 1;
        }
        if n > 1 {
            result -= result / n;
        }
        result
    }

    #[test]
    fn totient_examples() {
        assert_eq!(euler_totient(1), 1);
        assert_eq!(euler_totient(7), 6);
        assert_eq!(euler_totient(12), 4);
    }

    #[test]
    fn totient_matches_multiplicative_formula() {
        for n in 1..=200 {
            assert_eq!(euler_totient(n), totient_by_factorization(n), "n = {}", n);
        }
    }

    #[test]
    #[should_panic]
    fn totient_rejects_zero() {
        euler_totient(0);
    }

    #[test]
    fn cumsum_examples() {
        assert_eq!(totient_cumsum(1), 1);
        assert_eq!(totient_cumsum(3), 4);
        assert_eq!(totient_cumsum(10), 32);
    }

    #[test]
    #[should_panic]
    fn cumsum_rejects_zero() {
        totient_cumsum(0);
    }

    #[test]
    fn divisor_lists() {
        assert_eq!(divisors(1), vec![1]);
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(divisors(21), vec![1, 3, 7, 21]);
        assert_eq!(divisors(49), vec![1, 7, 49]);
    }

    #[test]
    fn ramanujan_sum_examples() {
        for n in -5..=5 {
            assert_eq!(ramanujan_sum(1, n), 1);
        }
        assert_eq!(ramanujan_sum(3, 0), 2);
        assert_eq!(ramanujan_sum(3, 1), -1);
        assert_eq!(ramanujan_sum(3, 2), -1);
        for p in 2..=20 {
            assert_eq!(ramanujan_sum(p, 0), euler_totient(p) as i64, "p = {}", p);
        }
    }

    #[test]
    fn ramanujan_sum_symmetry_and_periodicity() {
        for p in 1..=30i64 {
            for n in -(2 * p)..=(2 * p) {
                let c = ramanujan_sum(p as u64, n);
                assert_eq!(c, ramanujan_sum(p as u64, -n));
                assert_eq!(c, ramanujan_sum(p as u64, n + p));
            }
        }
    }

    #[test]
    fn cp_small_cases() {
        assert_eq!(build_cp(1), DMatrix::from_row_slice(1, 1, &[1]));
        assert_eq!(build_cp(2), DMatrix::from_row_slice(2, 1, &[1, -1]));
    }

    #[test]
    fn bp_rank_and_consecutive_columns() {
        // rank(B_6) = φ(6) = 2 and every 2 consecutive columns independent.
        let b6 = to_f64(&build_bp(6));
        assert_eq!(numerical_rank(&b6, 1e-8), 2);
        for j in 0..6 {
            let pair = DMatrix::from_fn(6, 2, |i, k| b6[(i, (j + k) % 6)]);
            assert_eq!(numerical_rank(&pair, 1e-8), 2, "columns {} and {}", j, j + 1);
        }
    }

    #[test]
    fn cpn_examples() {
        let c25 = build_cpn(2, 5);
        assert_eq!(
            c25,
            DMatrix::from_row_slice(5, 1, &[1, -1, 1, -1, 1])
        );
        for p in 1..=12 {
            assert_eq!(build_cpn(p, p as usize), build_cp(p), "p = {}", p);
        }
        // Padding: row 7 of C_{3,7} equals row 1 of C_3.
        let c37 = build_cpn(3, 7);
        let c3 = build_cp(3);
        assert_eq!(c37.row(6), c3.row(0));
    }

    #[test]
    #[should_panic]
    fn cpn_rejects_short_signals() {
        build_cpn(5, 4);
    }

    #[test]
    fn fp_small_cases() {
        assert_eq!(build_fp(1), DMatrix::from_row_slice(1, 1, &[1]));
        let f4 = to_f64(&build_fp(4));
        assert_eq!(f4.nrows(), 4);
        assert_eq!(f4.ncols(), 4);
        assert_eq!(numerical_rank(&f4, 1e-8), 4);
    }

    #[test]
    fn fp_divisor_blocks_orthogonal() {
        // Columns of C_{2,6} are exactly orthogonal to columns of C_{3,6}.
        let c26 = build_cpn(2, 6);
        let c36 = build_cpn(3, 6);
        let prod = c26.transpose() * &c36;
        assert!(prod.iter().all(|&v| v == 0), "C_2,6' * C_3,6 = {}", prod);
    }

    #[test]
    fn autocorrelation_identity_small() {
        // Σ_{n=0}^{p-1} c_p(n) c_p(n-l) = p c_p(l), exact in integers.
        for p in 1..=12i64 {
            for l in 0..p {
                let s: i64 = (0..p)
                    .map(|n| ramanujan_sum(p as u64, n) * ramanujan_sum(p as u64, n - l))
                    .sum();
                assert_eq!(s, p * ramanujan_sum(p as u64, l), "p = {}, l = {}", p, l);
            }
        }
    }

    #[test]
    fn orthogonality_identity_small() {
        for p in 1..=8u64 {
            for q in 1..=8u64 {
                if p == q {
                    continue;
                }
                let m = lcm(p, q) as i64;
                for l in 0..m {
                    let s: i64 = (0..m)
                        .map(|n| ramanujan_sum(p, n) * ramanujan_sum(q, n - l))
                        .sum();
                    assert_eq!(s, 0, "p = {}, q = {}, l = {}", p, q, l);
                }
            }
        }
    }

    #[test]
    fn cpn_cross_gram_vanishes_at_common_multiples() {
        // N a common multiple of p and q makes the blocks exactly orthogonal.
        for (p, q, n) in [(2u64, 3u64, 12usize), (4, 6, 24), (3, 5, 30)] {
            let a = build_cpn(p, n);
            let b = build_cpn(q, n);
            let prod = a.transpose() * &b;
            assert!(prod.iter().all(|&v| v == 0), "p={}, q={}, N={}", p, q, n);
        }
    }

    #[test]
    fn cpn_gram_positive_definite() {
        for p in 1..=10u64 {
            for n in p as usize..(p as usize + 8) {
                let c = to_f64(&build_cpn(p, n));
                let gram = c.tr_mul(&c);
                let eig = gram.symmetric_eigenvalues();
                assert!(
                    eig.min() > 0.0,
                    "C_{{{},{}}} gram not positive definite: min eig {}",
                    p,
                    n,
                    eig.min()
                );
            }
        }
    }
}
