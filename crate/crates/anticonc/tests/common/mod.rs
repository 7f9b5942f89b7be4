//! Independent oracles and corpus generators for the acceptance suite.
//! Everything here recomputes target quantities from first principles,
//! sharing no code path with the library routines under test.

use anticonc::diophantine::CoefficientVector;
use anticonc::distributions::RandomVariableModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact Q(S) for S = sum_k eps_k a_k with iid eps = +-1 (prob 1/2 each),
/// by enumerating all 2^n sign patterns and sweeping a closed window of
/// the given radius over the sorted sums.
pub fn brute_force_q_signs(coeffs: &[f64], radius: f64) -> f64 {
    let n = coeffs.len();
    assert!(n <= 24, "2^n enumeration oracle capped at n = 24");
    let mut sums: Vec<f64> = Vec::with_capacity(1 << n);
    for mask in 0u64..(1u64 << n) {
        let mut s = 0.0;
        for (k, &a) in coeffs.iter().enumerate() {
            s += if mask >> k & 1 == 1 { a } else { -a };
        }
        sums.push(s);
    }
    sums.sort_by(f64::total_cmp);
    let weight = 1.0 / (1u64 << n) as f64;
    let mut best = 0.0f64;
    let mut hi = 0;
    // window anchored at each sum; closed interval [s, s + 2 radius]
    for lo in 0..sums.len() {
        if hi < lo {
            hi = lo;
        }
        while hi < sums.len() && sums[hi] <= sums[lo] + 2.0 * radius + 1e-12 {
            hi += 1;
        }
        best = best.max((hi - lo) as f64 * weight);
    }
    best
}

/// Lattice objective f(eta) = sqrt(sum_k dist(eta a_k, Z)^2), recomputed
/// directly (round-to-nearest, ties irrelevant for the scan).
pub fn objective_direct(coeffs: &[f64], eta: f64) -> f64 {
    coeffs
        .iter()
        .map(|&a| {
            let x = eta * a;
            let d = x - x.round();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Dense-grid lower envelope of f over [1/(2 sup), d_param] with step h.
/// The returned minimum overestimates the true infimum by at most L h with
/// L = sqrt(sum a_k^2).
pub fn dense_grid_alpha(coeffs: &[f64], d_param: f64, h: f64) -> f64 {
    let sup = coeffs.iter().fold(0.0f64, |m, &a| m.max(a.abs()));
    let start = 1.0 / (2.0 * sup);
    assert!(d_param > start, "empty scan window");
    let steps = ((d_param - start) / h).ceil() as u64;
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        let eta = (start + i as f64 * h).min(d_param);
        best = best.min(objective_direct(coeffs, eta));
    }
    best
}

/// Composite Simpson with a fixed even panel count; no adaptivity, used to
/// cross-check the library quadrature on smooth integrands.
pub fn simpson_fixed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels >= 2 && panels % 2 == 0);
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let x = a + i as f64 * h;
        acc += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// A randomly generated 1-D verification instance: real coefficients, a
/// three-atom model with p > 0, and a feasible domain endpoint D < 1.
pub struct Instance {
    pub id: String,
    pub coeffs: Vec<f64>,
    pub a: CoefficientVector,
    pub model: RandomVariableModel,
    pub d_param: f64,
}

/// Deterministic corpus of atomic instances. Coefficients are generic reals
/// (no rational relations), so exact enumeration stays polynomial and the
/// lattice objective has a unique generic minimizer. The leading coefficient
/// is >= 1.5 so that 1/(2 sup) <= 1/3 keeps the eta window nonempty for
/// every D in [0.45, 0.95].
pub fn atomic_corpus(count: usize, max_n: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Vec::with_capacity(count);
    for idx in 0..count {
        let n = rng.random_range(3..=max_n);
        let mut coeffs = Vec::with_capacity(n);
        coeffs.push(rng.random_range(1.5..3.0));
        for _ in 1..n {
            coeffs.push(rng.random_range(0.5..3.0));
        }
        let a = CoefficientVector::new_1d(&coeffs).unwrap();
        let d_param = rng.random_range(0.45..0.95);

        // atoms at -1-u, c, 1+w span more than 2, so p > 0 always
        let u = rng.random_range(0.0..0.5);
        let w = rng.random_range(0.0..0.5);
        let c = rng.random_range(-0.3..0.3);
        let g1 = rng.random_range(0.2..1.0);
        let g2 = rng.random_range(0.2..1.0);
        let g3 = rng.random_range(0.2..1.0);
        let total = g1 + g2 + g3;
        let model = RandomVariableModel::atomic(&[
            (-1.0 - u, g1 / total),
            (c, g2 / total),
            (1.0 + w, g3 / total),
        ])
        .unwrap();

        corpus.push(Instance {
            id: format!("corpus-{idx:03}"),
            coeffs,
            a,
            model,
            d_param,
        });
    }
    corpus
}

/// Least-squares slope of y against x.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
