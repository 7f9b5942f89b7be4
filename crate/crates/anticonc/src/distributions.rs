//! Models of the random variable X: characteristic function, single-variable
//! concentration, symmetrization quantities, and seeded sampling.
//!
//! Two families are supported, chosen because both admit exact characteristic
//! functions, exact window probabilities, and exact symmetrized laws:
//! finite atomic distributions and Gaussians.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use libm::{erf, erfc};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Atoms closer than this are merged at ingestion, weights summed.
pub const ATOM_MERGE_TOL: f64 = 1e-12;

/// Distribution of X: finite atomic (values + probabilities) or Gaussian.
///
/// Atomic atom lists are kept sorted by value with strictly positive weights
/// summing to 1; instances are immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub enum RandomVariableModel {
    Atomic { atoms: Vec<(f64, f64)> },
    Gaussian { mu: f64, sigma: f64 },
}

/// Wire form of the model literal used in config files:
/// `{"kind":"atomic","atoms":[[-1,0.5],[1,0.5]]}` or
/// `{"kind":"gaussian","mu":0,"sigma":1}`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum ModelLiteral {
    Atomic { atoms: Vec<(f64, f64)> },
    Gaussian { mu: f64, sigma: f64 },
}

impl RandomVariableModel {
    /// Builds an atomic model. Atoms within `ATOM_MERGE_TOL` of each other are
    /// merged with summed weights; weights must be positive and sum to 1
    /// within 1e-12 after merging.
    pub fn atomic(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidModel("atomic model needs at least one atom".into()));
        }
        for &(v, w) in atoms {
            if !v.is_finite() || !w.is_finite() {
                return Err(Error::InvalidModel(format!("non-finite atom ({v}, {w})")));
            }
            if w <= 0.0 {
                return Err(Error::InvalidModel(format!("non-positive weight {w} at value {v}")));
            }
        }
        let mut sorted: Vec<(f64, f64)> = atoms.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (v, w) in sorted {
            match merged.last_mut() {
                Some(last) if (v - last.0).abs() < ATOM_MERGE_TOL => last.1 += w,
                _ => merged.push((v, w)),
            }
        }
        let total: f64 = merged.iter().map(|&(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("weights sum to {total}, expected 1")));
        }
        Ok(RandomVariableModel::Atomic { atoms: merged })
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidModel(format!("gaussian(mu={mu}, sigma={sigma})")));
        }
        Ok(RandomVariableModel::Gaussian { mu, sigma })
    }

    /// The symmetric two-point law on {-1, +1}.
    pub fn rademacher() -> Self {
        RandomVariableModel::Atomic { atoms: vec![(-1.0, 0.5), (1.0, 0.5)] }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, RandomVariableModel::Atomic { .. })
    }

    /// Sorted `(value, weight)` pairs for atomic models, `None` for Gaussian.
    pub fn atoms(&self) -> Option<&[(f64, f64)]> {
        match self {
            RandomVariableModel::Atomic { atoms } => Some(atoms),
            RandomVariableModel::Gaussian { .. } => None,
        }
    }

    /// Characteristic function phi(eta) = E exp(i eta X). Total on all inputs;
    /// |phi| <= 1, phi(0) = 1 exactly, phi(-eta) = conj(phi(eta)).
    pub fn char_fn(&self, eta: f64) -> Complex64 {
        match self {
            RandomVariableModel::Atomic { atoms } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(v, w) in atoms {
                    acc += w * Complex64::new(0.0, eta * v).exp();
                }
                acc
            }
            RandomVariableModel::Gaussian { mu, sigma } => {
                let re = -0.5 * eta * eta * sigma * sigma;
                Complex64::new(re, eta * mu).exp()
            }
        }
    }

    /// Concentration of a single variable with a rescaled argument:
    /// sup_x P{ |scale*X - x| <= radius }, closed window. Exact for both
    /// families (window sweep anchored at atoms; erf closed form).
    pub fn q_of(&self, radius: f64, scale: f64) -> f64 {
        assert!(radius > 0.0 && radius.is_finite(), "radius must be positive");
        assert!(scale > 0.0 && scale.is_finite(), "scale must be positive");
        match self {
            RandomVariableModel::Atomic { atoms } => {
                let values: Vec<f64> = atoms.iter().map(|&(v, _)| v * scale).collect();
                let weights: Vec<f64> = atoms.iter().map(|&(_, w)| w).collect();
                sliding_window_max(&values, &weights, radius)
            }
            RandomVariableModel::Gaussian { sigma, .. } => {
                // scale*X ~ N(scale*mu, (scale*sigma)^2); the sup sits at the mean.
                erf(radius / (SQRT_2 * scale * sigma))
            }
        }
    }

    /// Symmetrization quantities for X~ = X - X' (X' an independent copy):
    /// q = P{|X~| >= 2}, p = 1 - q_of(1, 1), and for atomic models the exact
    /// conditional law of X~ given |X~| >= 2.
    pub fn symmetrize(&self) -> SymmetrizationSummary {
        let p = 1.0 - self.q_of(1.0, 1.0);
        match self {
            RandomVariableModel::Atomic { atoms } => {
                let mut diffs: Vec<(f64, f64)> = Vec::with_capacity(atoms.len() * atoms.len());
                for &(vi, wi) in atoms {
                    for &(vj, wj) in atoms {
                        diffs.push((vi - vj, wi * wj));
                    }
                }
                diffs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for (v, w) in diffs {
                    match merged.last_mut() {
                        Some(last) if (v - last.0).abs() < ATOM_MERGE_TOL => last.1 += w,
                        _ => merged.push((v, w)),
                    }
                }
                let tail: Vec<(f64, f64)> =
                    merged.iter().copied().filter(|&(v, _)| v.abs() >= 2.0).collect();
                let q: f64 = tail.iter().map(|&(_, w)| w).sum();
                let conditional = if q > 0.0 {
                    let atoms: Vec<(f64, f64)> = tail.iter().map(|&(v, w)| (v, w / q)).collect();
                    Some(RandomVariableModel::Atomic { atoms })
                } else {
                    None
                };
                SymmetrizationSummary { q, p, conditional, from_atomic: true }
            }
            RandomVariableModel::Gaussian { sigma, .. } => {
                // X~ ~ N(0, 2 sigma^2); P{|X~| >= 2} = erfc(2 / (2 sigma)) = erfc(1/sigma).
                SymmetrizationSummary {
                    q: erfc(1.0 / sigma),
                    p,
                    conditional: None,
                    from_atomic: false,
                }
            }
        }
    }

    /// Deterministic sampling: `count` draws from the model under the fixed
    /// seed. Atomic draws use inverse-CDF on cumulative weights
    /// (right-continuous tie-break); Gaussian draws use the Box-Muller
    /// transform of uniform deviates. Identical (seed, count) inputs always
    /// produce identical output.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        self.sample_with_rng(&mut rng, count, &mut out);
        out
    }

    /// Sampling into a caller-provided buffer with an explicit RNG; used by
    /// the Monte Carlo estimators to derive per-chunk streams.
    pub(crate) fn sample_with_rng(&self, rng: &mut ChaCha8Rng, count: usize, out: &mut Vec<f64>) {
        match self {
            RandomVariableModel::Atomic { atoms } => {
                let mut cum: Vec<f64> = Vec::with_capacity(atoms.len());
                let mut acc = 0.0;
                for &(_, w) in atoms {
                    acc += w;
                    cum.push(acc);
                }
                // guard against the running sum landing at 1 - eps
                if let Some(last) = cum.last_mut() {
                    *last = f64::INFINITY;
                }
                for _ in 0..count {
                    let u: f64 = rng.random();
                    let idx = cum.partition_point(|&c| c <= u);
                    out.push(atoms[idx.min(atoms.len() - 1)].0);
                }
            }
            RandomVariableModel::Gaussian { mu, sigma } => {
                let mut cached: Option<f64> = None;
                for _ in 0..count {
                    let z = match cached.take() {
                        Some(z) => z,
                        None => {
                            let u1: f64 = rng.random();
                            let u2: f64 = rng.random();
                            let r = (-2.0 * (1.0 - u1).ln()).sqrt();
                            let theta = 2.0 * PI * u2;
                            cached = Some(r * theta.sin());
                            r * theta.cos()
                        }
                    };
                    out.push(mu + sigma * z);
                }
            }
        }
    }

    /// Parses the model literal used in config files.
    pub fn from_json(text: &str) -> Result<Self> {
        let lit: ModelLiteral = serde_json::from_str(text)
            .map_err(|e| Error::InvalidModel(format!("model literal: {e}")))?;
        match lit {
            ModelLiteral::Atomic { atoms } => RandomVariableModel::atomic(&atoms),
            ModelLiteral::Gaussian { mu, sigma } => RandomVariableModel::gaussian(mu, sigma),
        }
    }

    /// Canonical JSON form (atoms sorted by value).
    pub fn to_json(&self) -> String {
        let lit = match self {
            RandomVariableModel::Atomic { atoms } => ModelLiteral::Atomic { atoms: atoms.clone() },
            RandomVariableModel::Gaussian { mu, sigma } => {
                ModelLiteral::Gaussian { mu: *mu, sigma: *sigma }
            }
        };
        serde_json::to_string(&lit).expect("model literal serialization cannot fail")
    }
}

/// Max total weight of any closed window [x - radius, x + radius] over a
/// sorted atom list. The sup over x is attained with the window's left edge
/// at an atom, so a two-pointer sweep over those anchors is exact.
pub(crate) fn sliding_window_max(values: &[f64], weights: &[f64], radius: f64) -> f64 {
    debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
    let mut best = 0.0f64;
    let mut hi = 0usize;
    let mut mass = 0.0f64;
    for lo in 0..values.len() {
        if hi < lo {
            hi = lo;
            mass = 0.0;
        }
        while hi < values.len() && values[hi] <= values[lo] + 2.0 * radius {
            mass += weights[hi];
            hi += 1;
        }
        best = best.max(mass);
        mass -= weights[lo];
    }
    best.min(1.0)
}

/// Symmetrization summary: q = P{|X~| >= 2} with X~ = X - X', the exact
/// conditional law of X~ given |X~| >= 2 (atomic models), and p = 1 - Q(X).
/// Always satisfies q >= p^2 / 2.
#[derive(Debug, Clone)]
pub struct SymmetrizationSummary {
    pub q: f64,
    pub p: f64,
    conditional: Option<RandomVariableModel>,
    from_atomic: bool,
}

impl SymmetrizationSummary {
    /// The conditional law of X~ given |X~| >= 2. Errors with
    /// `DegenerateSymmetrization` when q = 0 and with `NonAtomicModel` for
    /// Gaussian models (no finite conditional law).
    pub fn conditional_law(&self) -> Result<&RandomVariableModel> {
        match &self.conditional {
            Some(law) => Ok(law),
            None if self.from_atomic => Err(Error::DegenerateSymmetrization),
            None => Err(Error::NonAtomicModel("conditional_law")),
        }
    }
}
