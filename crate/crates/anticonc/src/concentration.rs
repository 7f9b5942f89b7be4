//! Ground-truth estimators for the concentration function
//! Q(S) = sup_x P{|S - x| <= radius} of the weighted sum S = sum_k X_k a_k:
//! exact convolution/enumeration for atomic models, the Gaussian closed
//! form, seeded Monte Carlo with conservative uniform confidence bands, and
//! the epsilon-window variant L(S; epsilon) = Q(S / epsilon).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use libm::erf;
use std::f64::consts::SQRT_2;

use crate::diophantine::CoefficientVector;
use crate::distributions::{sliding_window_max, RandomVariableModel, ATOM_MERGE_TOL};
use crate::error::{Error, Result};
use crate::Budgets;

/// Samples drawn per RNG stream; chunking fixes the draw order so a parallel
/// implementation with per-chunk streams would reproduce the same estimate.
const MC_CHUNK: usize = 1 << 14;

/// Candidate window centers tried by the d >= 2 Monte Carlo estimator; the
/// estimator is a flagged lower bound, so subsampling centers keeps the cost
/// linear without changing its contract.
const MC_CENTER_CAP: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    Exact,
    MonteCarlo,
}

impl EstimateMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateMethod::Exact => "exact",
            EstimateMethod::MonteCarlo => "monte-carlo",
        }
    }
}

/// A concentration value with its provenance. `band` is a conservative
/// half-width (0 for exact values); `lower_bound_only` marks the d >= 2
/// estimators that maximize over a restricted center set.
#[derive(Debug, Clone)]
pub struct ConcentrationEstimate {
    pub value: f64,
    pub method: EstimateMethod,
    pub band: f64,
    pub n_samples: Option<u64>,
    pub seed: Option<u64>,
    pub window_radius: f64,
    pub lower_bound_only: bool,
}

impl ConcentrationEstimate {
    fn exact(value: f64, radius: f64, lower_bound_only: bool) -> Self {
        ConcentrationEstimate {
            value,
            method: EstimateMethod::Exact,
            band: 0.0,
            n_samples: None,
            seed: None,
            window_radius: radius,
            lower_bound_only,
        }
    }
}

fn validate_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument { name: "radius", value: radius.to_string() });
    }
    Ok(())
}

/// Support of S = sum_k X_k a_k in one dimension by repeated convolution,
/// merging values within `ATOM_MERGE_TOL` to keep integer-like supports
/// polynomial in n.
fn convolve_support_1d(
    scalars: &[f64],
    atoms: &[(f64, f64)],
    cap: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut support: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for &c in scalars {
        let needed = support.len() as u64 * atoms.len() as u64;
        if needed > cap {
            return Err(Error::EnumerationBudgetExceeded { needed, cap });
        }
        let mut next: Vec<(f64, f64)> = Vec::with_capacity(support.len() * atoms.len());
        for &(s, ws) in &support {
            for &(v, wv) in atoms {
                next.push((s + c * v, ws * wv));
            }
        }
        next.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(next.len());
        for (v, w) in next {
            match merged.last_mut() {
                Some(last) if (v - last.0).abs() < ATOM_MERGE_TOL => last.1 += w,
                _ => merged.push((v, w)),
            }
        }
        support = merged;
    }
    Ok(support)
}

/// Support of the d-dimensional sum, merged coordinate-wise within
/// `ATOM_MERGE_TOL` (lexicographic sort).
fn convolve_support_multi(
    a: &CoefficientVector,
    atoms: &[(f64, f64)],
    cap: u64,
) -> Result<Vec<(Vec<f64>, f64)>> {
    let d = a.dim();
    let mut support: Vec<(Vec<f64>, f64)> = vec![(vec![0.0; d], 1.0)];
    for row in a.rows() {
        let needed = support.len() as u64 * atoms.len() as u64;
        if needed > cap {
            return Err(Error::EnumerationBudgetExceeded { needed, cap });
        }
        let mut next: Vec<(Vec<f64>, f64)> = Vec::with_capacity(support.len() * atoms.len());
        for (s, ws) in &support {
            for &(v, wv) in atoms {
                let mut point = s.clone();
                for i in 0..d {
                    point[i] += row[i] * v;
                }
                next.push((point, ws * wv));
            }
        }
        next.sort_by(|x, y| {
            x.0.iter()
                .zip(&y.0)
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut merged: Vec<(Vec<f64>, f64)> = Vec::with_capacity(next.len());
        for (v, w) in next {
            match merged.last_mut() {
                Some(last)
                    if last.0.iter().zip(&v).all(|(p, q)| (p - q).abs() < ATOM_MERGE_TOL) =>
                {
                    last.1 += w
                }
                _ => merged.push((v, w)),
            }
        }
        support = merged;
    }
    Ok(support)
}

fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Exact Q for atomic models. In one dimension the sup over window centers
/// is resolved by the anchored sliding-window sweep; in d >= 2 the windows
/// are balls, maximized over centers at the support points, which is exact
/// only when one window covers everything (support diameter <= 2 radius)
/// and otherwise a flagged lower bound.
pub fn q_exact_atomic(
    a: &CoefficientVector,
    model: &RandomVariableModel,
    radius: f64,
    budgets: &Budgets,
) -> Result<ConcentrationEstimate> {
    validate_radius(radius)?;
    let atoms = model.atoms().ok_or(Error::NonAtomicModel("q_exact_atomic"))?;
    if a.dim() == 1 {
        let support = convolve_support_1d(a.scalars()?, atoms, budgets.enumeration)?;
        let values: Vec<f64> = support.iter().map(|&(v, _)| v).collect();
        let weights: Vec<f64> = support.iter().map(|&(_, w)| w).collect();
        let value = sliding_window_max(&values, &weights, radius);
        return Ok(ConcentrationEstimate::exact(value, radius, false));
    }
    let support = convolve_support_multi(a, atoms, budgets.enumeration)?;
    let m = support.len() as u64;
    if m * m > budgets.enumeration {
        return Err(Error::EnumerationBudgetExceeded { needed: m * m, cap: budgets.enumeration });
    }
    let mut diameter_sq = 0.0f64;
    for i in 0..support.len() {
        for j in i + 1..support.len() {
            diameter_sq = diameter_sq.max(dist_sq(&support[i].0, &support[j].0));
        }
    }
    if diameter_sq.sqrt() <= 2.0 * radius {
        // the midpoint ball covers the whole support: Q = 1 exactly
        return Ok(ConcentrationEstimate::exact(1.0, radius, false));
    }
    let r_sq = radius * radius * (1.0 + 1e-12); // closed ball, rounding slack
    let mut best = 0.0f64;
    for (center, _) in &support {
        let mass: f64 = support
            .iter()
            .filter(|(v, _)| dist_sq(v, center) <= r_sq)
            .map(|(_, w)| w)
            .sum();
        best = best.max(mass);
    }
    Ok(ConcentrationEstimate::exact(best.min(1.0), radius, true))
}

/// Exact Q dispatcher: atomic models go through enumeration, Gaussian models
/// in one dimension through the closed form
/// Q = erf(radius / (sqrt(2) sigma |a|)) (S ~ N(mu sum a_k, sigma^2 |a|^2)).
pub fn q_exact(
    a: &CoefficientVector,
    model: &RandomVariableModel,
    radius: f64,
    budgets: &Budgets,
) -> Result<ConcentrationEstimate> {
    match model {
        RandomVariableModel::Atomic { .. } => q_exact_atomic(a, model, radius, budgets),
        RandomVariableModel::Gaussian { sigma, .. } => {
            validate_radius(radius)?;
            if a.dim() != 1 {
                return Err(Error::UnsupportedExact(
                    "gaussian exact concentration is closed-form only in d = 1".into(),
                ));
            }
            let spread = sigma * a.euclid_norm();
            let value = if spread == 0.0 { 1.0 } else { erf(radius / (SQRT_2 * spread)) };
            Ok(ConcentrationEstimate::exact(value, radius, false))
        }
    }
}

/// Draws `n_samples` realizations of S (flattened d-vectors) with the
/// chunked per-stream scheme; deterministic in (seed, n_samples).
fn sample_sums(
    a: &CoefficientVector,
    model: &RandomVariableModel,
    n_samples: usize,
    seed: u64,
) -> Vec<f64> {
    let d = a.dim();
    let n = a.len();
    let mut sums = Vec::with_capacity(n_samples * d);
    let mut draws: Vec<f64> = Vec::with_capacity(MC_CHUNK.min(n_samples) * n);
    let mut produced = 0usize;
    let mut chunk_index = 0u64;
    while produced < n_samples {
        let count = MC_CHUNK.min(n_samples - produced);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk_index + 1);
        draws.clear();
        model.sample_with_rng(&mut rng, count * n, &mut draws);
        for s in 0..count {
            let block = &draws[s * n..(s + 1) * n];
            for i in 0..d {
                let mut acc = 0.0;
                for (k, row) in a.rows().enumerate() {
                    acc += row[i] * block[k];
                }
                sums.push(acc);
            }
        }
        produced += count;
        chunk_index += 1;
    }
    sums
}

/// Monte Carlo Q estimate. In one dimension: sort the sampled sums and take
/// the max closed-window count by a two-pointer sweep; the band
/// 2 sqrt(ln(2/delta) / (2 N)) is the uniform empirical-CDF deviation
/// applied to the two CDF evaluations a window count comprises. In d >= 2
/// the sweep maximizes over balls centered at (up to `MC_CENTER_CAP`)
/// sampled points, a flagged lower bound.
pub fn q_monte_carlo(
    a: &CoefficientVector,
    model: &RandomVariableModel,
    radius: f64,
    n_samples: u64,
    seed: u64,
    delta: f64,
) -> Result<ConcentrationEstimate> {
    validate_radius(radius)?;
    if n_samples < 1000 {
        return Err(Error::TooFewSamples { given: n_samples });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument { name: "delta", value: delta.to_string() });
    }
    let n_usize = usize::try_from(n_samples)
        .map_err(|_| Error::InvalidArgument { name: "n_samples", value: n_samples.to_string() })?;
    let band = 2.0 * ((2.0 / delta).ln() / (2.0 * n_samples as f64)).sqrt();
    let d = a.dim();
    let sums = sample_sums(a, model, n_usize, seed);

    let (value, lower_bound_only) = if d == 1 {
        let mut sorted = sums;
        sorted.sort_by(f64::total_cmp);
        let mut best = 0usize;
        let mut hi = 0usize;
        for lo in 0..sorted.len() {
            if hi < lo {
                hi = lo;
            }
            while hi < sorted.len() && sorted[hi] <= sorted[lo] + 2.0 * radius {
                hi += 1;
            }
            best = best.max(hi - lo);
        }
        (best as f64 / n_samples as f64, false)
    } else {
        let n_centers = MC_CENTER_CAP.min(n_usize);
        let r_sq = radius * radius;
        let mut best = 0usize;
        for c in 0..n_centers {
            let center = &sums[c * d..(c + 1) * d];
            let mut count = 0usize;
            for s in 0..n_usize {
                if dist_sq(&sums[s * d..(s + 1) * d], center) <= r_sq {
                    count += 1;
                }
            }
            best = best.max(count);
        }
        (best as f64 / n_samples as f64, true)
    };

    Ok(ConcentrationEstimate {
        value,
        method: EstimateMethod::MonteCarlo,
        band,
        n_samples: Some(n_samples),
        seed: Some(seed),
        window_radius: radius,
        lower_bound_only,
    })
}

/// Estimator choice for operations that can run either exactly or by
/// sampling.
#[derive(Debug, Clone, Copy)]
pub enum EstimatorChoice {
    Exact,
    MonteCarlo { n_samples: u64, seed: u64, delta: f64 },
}

/// The epsilon-window concentration L(S; epsilon) = Q(S / epsilon),
/// implemented by rescaling the coefficients to a/epsilon and dispatching
/// the radius-1 estimator. The report keeps epsilon as the window radius.
pub fn levy_l(
    a: &CoefficientVector,
    model: &RandomVariableModel,
    epsilon: f64,
    choice: EstimatorChoice,
    budgets: &Budgets,
) -> Result<ConcentrationEstimate> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument { name: "epsilon", value: epsilon.to_string() });
    }
    let rows: Vec<Vec<f64>> = a.rows().map(|r| r.iter().map(|x| x / epsilon).collect()).collect();
    let scaled = CoefficientVector::from_rows(&rows)?;
    let mut est = match choice {
        EstimatorChoice::Exact => q_exact(&scaled, model, 1.0, budgets)?,
        EstimatorChoice::MonteCarlo { n_samples, seed, delta } => {
            q_monte_carlo(&scaled, model, 1.0, n_samples, seed, delta)?
        }
    };
    est.window_radius = epsilon;
    Ok(est)
}
