//! Approximation distance to the integer lattice: the quantity
//! alpha = inf f(eta) with f(eta) = sqrt(sum_k dist(eta . a_k, Z)^2),
//! computed exactly in one dimension via the piecewise-quadratic cell
//! structure and by certified Lipschitz branch-and-bound in d dimensions,
//! plus the sublevel-set interval decomposition {f < alpha/2}.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::Budgets;

/// Coefficient vectors a_1..a_n in R^d, stored row-major with cached norms
/// and Gram matrix sum_k a_k (x) a_k.
///
/// All-zero inputs are accepted at construction (integral routines are well
/// defined for them); the lattice solvers require `sup_norm > 0` and reject
/// all-zero vectors at call time.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    data: Vec<f64>,
    dim: usize,
    sup_norm: f64,
    euclid_norm: f64,
    gram: Vec<f64>,
}

impl CoefficientVector {
    /// One-dimensional coefficients a in R^n.
    pub fn new_1d(scalars: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = scalars.iter().map(|&x| vec![x]).collect();
        Self::from_rows(&rows)
    }

    /// General coefficients: n rows, each a vector in R^d.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidCoefficients("need at least one vector".into()));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::InvalidCoefficients("vectors must have dimension >= 1".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidCoefficients(format!(
                    "vector {k} has dimension {}, expected {dim}",
                    row.len()
                )));
            }
            for &x in row {
                if !x.is_finite() {
                    return Err(Error::InvalidCoefficients(format!("non-finite entry in vector {k}")));
                }
                data.push(x);
            }
        }
        let mut sup_norm = 0.0f64;
        let mut sq_sum = 0.0f64;
        let mut gram = vec![0.0; dim * dim];
        for row in data.chunks_exact(dim) {
            let row_sq: f64 = row.iter().map(|x| x * x).sum();
            sup_norm = sup_norm.max(row_sq.sqrt());
            sq_sum += row_sq;
            for i in 0..dim {
                for j in 0..dim {
                    gram[i * dim + j] += row[i] * row[j];
                }
            }
        }
        Ok(CoefficientVector { data, dim, sup_norm, euclid_norm: sq_sum.sqrt(), gram })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of coefficient vectors n.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees n >= 1
    }

    /// max_k |a_k| (Euclidean norm per row); the sup norm in one dimension.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// sqrt(sum_k |a_k|^2); equals |a| in one dimension and is the Lipschitz
    /// constant of f.
    pub fn euclid_norm(&self) -> f64 {
        self.euclid_norm
    }

    /// Row-major d x d Gram matrix sum_k a_k (x) a_k.
    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// The flat scalar list in one dimension.
    pub fn scalars(&self) -> Result<&[f64]> {
        if self.dim == 1 {
            Ok(&self.data)
        } else {
            Err(Error::InvalidCoefficients(format!("operation requires d = 1, got d = {}", self.dim)))
        }
    }
}

/// Distance of x to the nearest integer, with the integer. Ties round away
/// from zero (f64::round), fixed for determinism.
fn nearest_integer(x: f64) -> (f64, i64) {
    let m = x.round();
    (x - m, m as i64)
}

/// f(eta) = sqrt(sum_k dist(eta . a_k, Z)^2) and the rounding vector m.
pub fn lattice_objective(a: &CoefficientVector, eta: &[f64]) -> (f64, Vec<i64>) {
    assert_eq!(eta.len(), a.dim(), "eta must have dimension d");
    let mut sq = 0.0;
    let mut m = Vec::with_capacity(a.len());
    for row in a.rows() {
        let dot: f64 = row.iter().zip(eta).map(|(x, e)| x * e).sum();
        let (d, mk) = nearest_integer(dot);
        sq += d * d;
        m.push(mk);
    }
    (sq.sqrt(), m)
}

/// f evaluated with a FIXED integer vector m (no re-rounding); used to check
/// certificates.
pub fn objective_with_m(a: &CoefficientVector, eta: &[f64], m: &[i64]) -> f64 {
    assert_eq!(m.len(), a.len());
    let mut sq = 0.0;
    for (row, &mk) in a.rows().zip(m) {
        let dot: f64 = row.iter().zip(eta).map(|(x, e)| x * e).sum();
        let d = dot - mk as f64;
        sq += d * d;
    }
    sq.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// alpha is the true infimum (gap = 0).
    Exact,
    /// The true infimum lies in [alpha, alpha + gap].
    CertifiedLowerBound,
    /// Search budget ran out: alpha = f(eta_star) is only an upper bound;
    /// the true infimum lies in [alpha - gap, alpha].
    HeuristicUpperBound,
}

impl CertificateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertificateKind::Exact => "exact",
            CertificateKind::CertifiedLowerBound => "certified-lower-bound",
            CertificateKind::HeuristicUpperBound => "heuristic-upper-bound",
        }
    }

    /// Only exact and certified kinds may be used to assert the hypothesis
    /// "f >= alpha on the domain"; a heuristic upper bound cannot.
    pub fn is_sound_lower_bound(&self) -> bool {
        !matches!(self, CertificateKind::HeuristicUpperBound)
    }
}

/// Result of an alpha computation. `objective_value()` = f(eta_star, m_star)
/// always holds within 1e-10: alpha + gap for exact/certified kinds (the best
/// point found), alpha itself for heuristic kind.
#[derive(Debug, Clone)]
pub struct DiophantineCertificate {
    pub alpha: f64,
    pub eta_star: Vec<f64>,
    pub m_star: Vec<i64>,
    pub kind: CertificateKind,
    pub gap: f64,
    pub notes: Vec<String>,
}

impl DiophantineCertificate {
    /// The objective value attained at (eta_star, m_star).
    pub fn objective_value(&self) -> f64 {
        match self.kind {
            CertificateKind::HeuristicUpperBound => self.alpha,
            _ => self.alpha + self.gap,
        }
    }
}

/// Breakpoints of eta -> round(eta * c) inside the open interval (lo, hi):
/// the half-integer crossings (j + 1/2) / |c|. Zero coefficients contribute
/// none. Appends to `out`; returns the appended count.
fn cell_breakpoints(c: f64, lo: f64, hi: f64, out: &mut Vec<f64>) -> usize {
    let ac = c.abs();
    if ac == 0.0 {
        return 0;
    }
    // j + 1/2 in (lo*ac, hi*ac)
    let j_min = (lo * ac - 0.5).floor() as i64 + 1;
    let j_max = (hi * ac - 0.5).ceil() as i64 - 1;
    let mut count = 0;
    for j in j_min..=j_max {
        let bp = (j as f64 + 0.5) / ac;
        if bp > lo && bp < hi {
            out.push(bp);
            count += 1;
        }
    }
    count
}

/// Rough upper bound on the breakpoint count over (lo, hi), used to enforce
/// the budget before allocating.
fn breakpoint_estimate(scalars: &[f64], lo: f64, hi: f64) -> f64 {
    scalars.iter().map(|c| c.abs() * (hi - lo) + 1.0).sum()
}

/// Exact one-dimensional alpha: the infimum of f over eta in
/// [1/(2 sup_norm), d_param], attained on one of the piecewise-quadratic
/// cells cut by the half-integer breakpoints of each coordinate.
///
/// On a cell the vector m_k = round(eta a_k) is constant, so
/// f^2 = A eta^2 - 2 B eta + C with A = sum a_k^2, B = sum a_k m_k; the cell
/// minimum sits at eta = B/A clamped to the cell. The global minimum over all
/// cells is exact up to floating-point rounding.
pub fn alpha_1d_exact(
    a: &CoefficientVector,
    d_param: f64,
    budgets: &Budgets,
) -> Result<DiophantineCertificate> {
    let scalars = a.scalars()?;
    if a.sup_norm() == 0.0 {
        return Err(Error::InvalidCoefficients("all coefficients are zero".into()));
    }
    if !(d_param > 0.0) || !d_param.is_finite() {
        return Err(Error::InvalidArgument { name: "d_param", value: d_param.to_string() });
    }
    let eta_start = 1.0 / (2.0 * a.sup_norm());
    if d_param <= eta_start {
        return Err(Error::EmptyDomain { eta_start, d_param });
    }
    let est = breakpoint_estimate(scalars, eta_start, d_param);
    if est > budgets.breakpoints as f64 {
        return Err(Error::BreakpointBudgetExceeded { needed: est as u64, cap: budgets.breakpoints });
    }

    let mut bps: Vec<f64> = Vec::new();
    for &c in scalars {
        cell_breakpoints(c, eta_start, d_param, &mut bps);
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();

    let big_a: f64 = scalars.iter().map(|c| c * c).sum();
    let mut best: Option<(f64, f64, Vec<i64>)> = None; // (f^2, eta, m)

    let mut lo = eta_start;
    let consider = |lo: f64, hi: f64, best: &mut Option<(f64, f64, Vec<i64>)>| {
        let mid = 0.5 * (lo + hi);
        let m: Vec<i64> = scalars.iter().map(|&c| (mid * c).round() as i64).collect();
        let b: f64 = scalars.iter().zip(&m).map(|(&c, &mk)| c * mk as f64).sum();
        let eta = (b / big_a).clamp(lo, hi);
        let fsq: f64 = scalars
            .iter()
            .zip(&m)
            .map(|(&c, &mk)| {
                let d = eta * c - mk as f64;
                d * d
            })
            .sum();
        // strict improvement keeps the leftmost minimizer, deterministically
        if best.as_ref().map_or(true, |(bv, _, _)| fsq < *bv) {
            *best = Some((fsq, eta, m));
        }
    };
    for &bp in &bps {
        consider(lo, bp, &mut best);
        lo = bp;
    }
    consider(lo, d_param, &mut best);

    let (fsq, eta, m) = best.expect("at least one cell exists");
    Ok(DiophantineCertificate {
        alpha: fsq.sqrt(),
        eta_star: vec![eta],
        m_star: m,
        kind: CertificateKind::Exact,
        gap: 0.0,
        notes: Vec::new(),
    })
}

/// Node in the branch-and-bound queue; min-ordered by lower bound with
/// insertion order breaking ties for determinism.
struct BnbNode {
    lower: f64,
    counter: u64,
    center: Vec<f64>,
    half: Vec<f64>,
}

impl PartialEq for BnbNode {
    fn eq(&self, other: &Self) -> bool {
        self.counter == other.counter
    }
}
impl Eq for BnbNode {}
impl PartialOrd for BnbNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for BnbNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for min-first on (lower, counter).
        other
            .lower
            .total_cmp(&self.lower)
            .then_with(|| other.counter.cmp(&self.counter))
    }
}

/// sup over the box (center +/- half) of |eta . row|; attained at a corner.
fn box_sup_abs_dot(center: &[f64], half: &[f64], row: &[f64]) -> f64 {
    let mut dot_c = 0.0;
    let mut slack = 0.0;
    for i in 0..row.len() {
        dot_c += center[i] * row[i];
        slack += half[i] * row[i].abs();
    }
    dot_c.abs() + slack
}

/// Distance from the origin to the box (0 if the box contains the origin).
fn box_min_norm(center: &[f64], half: &[f64]) -> f64 {
    let mut sq = 0.0;
    for i in 0..center.len() {
        let d = (center[i].abs() - half[i]).max(0.0);
        sq += d * d;
    }
    sq.sqrt()
}

/// Feasibility of a point: |eta| <= d_param and max_k |eta . a_k| >= 1/2.
fn feasible(a: &CoefficientVector, d_param: f64, eta: &[f64]) -> bool {
    let norm: f64 = eta.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > d_param {
        return false;
    }
    a.rows().any(|row| {
        let dot: f64 = row.iter().zip(eta).map(|(x, e)| x * e).sum();
        dot.abs() >= 0.5
    })
}

/// Certified alpha in d dimensions: minimizes f over the feasible set
/// {|eta| <= d_param, max_k |eta . a_k| >= 1/2} by best-first
/// branch-and-bound on axis-aligned boxes. Per-box lower bounds come from
/// the Lipschitz constant L = sqrt(sum |a_k|^2); boxes whose every point
/// violates the max constraint or lies outside the ball are pruned, never
/// conservatively kept out.
///
/// Terminates when upper - lower <= tolerance (kind certified-lower-bound,
/// or exact when the gap closes to zero); if the node budget runs out first,
/// the best point found is returned as a flagged heuristic upper bound.
pub fn alpha_multi_certified(
    a: &CoefficientVector,
    d_param: f64,
    tolerance: f64,
    budgets: &Budgets,
) -> Result<DiophantineCertificate> {
    let d = a.dim();
    if a.sup_norm() == 0.0 {
        return Err(Error::InvalidCoefficients("all coefficients are zero".into()));
    }
    if !(d_param > 0.0) || !d_param.is_finite() {
        return Err(Error::InvalidArgument { name: "d_param", value: d_param.to_string() });
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument { name: "tolerance", value: tolerance.to_string() });
    }
    if d_param * a.sup_norm() < 0.5 {
        return Err(Error::InfeasibleDomain);
    }
    let mut notes = Vec::new();
    if d_param >= d as f64 {
        notes.push(format!("d_param {d_param} >= dimension {d}; treated as a free parameter"));
    }

    let lipschitz = a.euclid_norm();

    // Guaranteed feasible seed: eta0 = a_k* / (2 |a_k*|^2) has
    // eta0 . a_k* = 1/2 and |eta0| = 1/(2 |a_k*|) <= d_param.
    let k_star = (0..a.len())
        .max_by(|&i, &j| {
            let ni: f64 = a.rows().nth(i).unwrap().iter().map(|x| x * x).sum();
            let nj: f64 = a.rows().nth(j).unwrap().iter().map(|x| x * x).sum();
            ni.total_cmp(&nj)
        })
        .unwrap();
    let row_star: Vec<f64> = a.rows().nth(k_star).unwrap().to_vec();
    let row_sq: f64 = row_star.iter().map(|x| x * x).sum();
    let seed: Vec<f64> = row_star.iter().map(|x| x / (2.0 * row_sq)).collect();
    let (mut best_upper, _) = lattice_objective(a, &seed);
    let mut best_eta = seed;

    let try_point = |eta: &[f64], best_upper: &mut f64, best_eta: &mut Vec<f64>| {
        if feasible(a, d_param, eta) {
            let (val, _) = lattice_objective(a, eta);
            if val < *best_upper {
                *best_upper = val;
                *best_eta = eta.to_vec();
            }
        }
    };

    let mut heap = BinaryHeap::new();
    let mut counter = 0u64;
    let root_half = vec![d_param; d];
    let root_center = vec![0.0; d];
    {
        let (fc, _) = lattice_objective(a, &root_center);
        let r: f64 = root_half.iter().map(|h| h * h).sum::<f64>().sqrt();
        heap.push(BnbNode {
            lower: (fc - lipschitz * r).max(0.0),
            counter,
            center: root_center,
            half: root_half,
        });
    }

    let mut pops = 0u64;
    let mut global_lower = 0.0f64;
    let mut kind = CertificateKind::CertifiedLowerBound;
    while let Some(node) = heap.pop() {
        global_lower = node.lower;
        if best_upper - global_lower <= tolerance {
            break;
        }
        pops += 1;
        if pops > budgets.bnb_nodes {
            kind = CertificateKind::HeuristicUpperBound;
            notes.push(format!("node budget {} exhausted", budgets.bnb_nodes));
            break;
        }

        // split along the widest axis
        let axis = node
            .half
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| x.total_cmp(y))
            .map(|(i, _)| i)
            .unwrap();
        for side in [-1.0, 1.0] {
            let mut center = node.center.clone();
            let mut half = node.half.clone();
            half[axis] *= 0.5;
            center[axis] += side * half[axis];

            if box_min_norm(&center, &half) > d_param {
                continue; // entirely outside the ball
            }
            if a.rows().all(|row| box_sup_abs_dot(&center, &half, row) < 0.5) {
                continue; // entire box violates the max constraint
            }

            // candidate upper bounds: the center, its ball projection, and
            // its scale-up onto the max-constraint boundary
            try_point(&center, &mut best_upper, &mut best_eta);
            let norm: f64 = center.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > d_param && norm > 0.0 {
                let proj: Vec<f64> = center.iter().map(|x| x * d_param / norm).collect();
                try_point(&proj, &mut best_upper, &mut best_eta);
            }
            let max_dot = a
                .rows()
                .map(|row| row.iter().zip(&center).map(|(x, e)| x * e).sum::<f64>().abs())
                .fold(0.0f64, f64::max);
            if max_dot > 0.0 && max_dot < 0.5 {
                let s = 0.5 / max_dot;
                let scaled: Vec<f64> = center.iter().map(|x| x * s).collect();
                try_point(&scaled, &mut best_upper, &mut best_eta);
            }

            let (fc, _) = lattice_objective(a, &center);
            let r: f64 = half.iter().map(|h| h * h).sum::<f64>().sqrt();
            let lower = (fc - lipschitz * r).max(node.lower);
            counter += 1;
            heap.push(BnbNode { lower: lower.max(0.0), counter, center, half });
        }
    }
    if heap.is_empty() && kind == CertificateKind::CertifiedLowerBound {
        // queue exhausted: every box was pruned or refined away, so the best
        // point found is optimal up to the last popped lower bound
        global_lower = best_upper.min(global_lower.max(0.0));
    }

    let alpha;
    let gap;
    match kind {
        CertificateKind::HeuristicUpperBound => {
            alpha = best_upper;
            gap = (best_upper - global_lower.max(0.0)).max(0.0);
        }
        _ => {
            alpha = global_lower.max(0.0).min(best_upper);
            gap = best_upper - alpha;
            if gap == 0.0 {
                kind = CertificateKind::Exact;
            }
        }
    }
    let (_, m_star) = lattice_objective(a, &best_eta);
    Ok(DiophantineCertificate { alpha, eta_star: best_eta, m_star, kind, gap, notes })
}

/// Sublevel decomposition of [0, eta_max]: the set B = {f < alpha/2} as an
/// ordered list of closed intervals (closures of the maximal open
/// components).
///
/// A component longer than 1/sup_norm (possible once alpha >= 1, where whole
/// cells satisfy the bound) is tiled by equal-length chunks of at most
/// 1/sup_norm that share endpoints, preserving the length invariant as a
/// cover of B.
#[derive(Debug, Clone)]
pub struct BSetDecomposition {
    pub intervals: Vec<(f64, f64)>,
    pub alpha_used: f64,
    pub search_window: (f64, f64),
}

impl BSetDecomposition {
    /// Total length of the decomposition.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|&(lo, hi)| hi - lo).sum()
    }
}

/// Computes the B-set of Step 3: B = {eta in [0, eta_max] : f(eta) < alpha/2}
/// from the same piecewise-quadratic cells as the exact solver; per cell the
/// strict inequality f^2 < (alpha/2)^2 has closed-form quadratic roots, and
/// solutions meeting at a cell boundary are merged.
pub fn b_set(
    a: &CoefficientVector,
    alpha: f64,
    eta_max: f64,
    budgets: &Budgets,
) -> Result<BSetDecomposition> {
    let scalars = a.scalars()?;
    if a.sup_norm() == 0.0 {
        return Err(Error::InvalidCoefficients("all coefficients are zero".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument { name: "alpha", value: alpha.to_string() });
    }
    if !(eta_max > 0.0) || !eta_max.is_finite() {
        return Err(Error::InvalidArgument { name: "eta_max", value: eta_max.to_string() });
    }
    let est = breakpoint_estimate(scalars, 0.0, eta_max);
    if est > budgets.breakpoints as f64 {
        return Err(Error::BreakpointBudgetExceeded { needed: est as u64, cap: budgets.breakpoints });
    }

    let mut bps: Vec<f64> = Vec::new();
    for &c in scalars {
        cell_breakpoints(c, 0.0, eta_max, &mut bps);
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();

    let big_a: f64 = scalars.iter().map(|c| c * c).sum();
    let threshold_sq = (alpha / 2.0) * (alpha / 2.0);
    let mut raw: Vec<(f64, f64)> = Vec::new();
    let push_cell = |lo: f64, hi: f64, raw: &mut Vec<(f64, f64)>| {
        if hi <= lo {
            return;
        }
        let mid = 0.5 * (lo + hi);
        let b: f64 = scalars.iter().map(|&c| c * (mid * c).round()).sum();
        let c0: f64 = scalars
            .iter()
            .map(|&c| {
                let m = (mid * c).round();
                m * m
            })
            .sum();
        // f^2 = A t^2 - 2 B t + C < threshold_sq
        let disc = b * b - big_a * (c0 - threshold_sq);
        if disc <= 0.0 {
            return;
        }
        let sq = disc.sqrt();
        let r_lo = ((b - sq) / big_a).max(lo);
        let r_hi = ((b + sq) / big_a).min(hi);
        if r_hi > r_lo {
            // merge with the previous piece when contiguous across the cell edge
            match raw.last_mut() {
                Some(last) if r_lo - last.1 <= 1e-12 => last.1 = r_hi,
                _ => raw.push((r_lo, r_hi)),
            }
        }
    };

    let mut lo = 0.0;
    for &bp in &bps {
        push_cell(lo, bp, &mut raw);
        lo = bp;
    }
    push_cell(lo, eta_max, &mut raw);

    // tile over-long components so every reported interval fits in 1/sup_norm
    let max_len = 1.0 / a.sup_norm();
    let mut intervals = Vec::with_capacity(raw.len());
    for (lo, hi) in raw {
        let len = hi - lo;
        if len <= max_len {
            intervals.push((lo, hi));
        } else {
            let parts = (len / max_len).ceil() as usize;
            let step = len / parts as f64;
            for i in 0..parts {
                let s = lo + step * i as f64;
                let e = if i + 1 == parts { hi } else { lo + step * (i + 1) as f64 };
                intervals.push((s, e));
            }
        }
    }

    Ok(BSetDecomposition { intervals, alpha_used: alpha, search_window: (0.0, eta_max) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn budgets() -> Budgets {
        Budgets::default()
    }

    fn grid_min_1d(scalars: &[f64], lo: f64, hi: f64, h: f64) -> f64 {
        let a = CoefficientVector::new_1d(scalars).unwrap();
        let steps = ((hi - lo) / h).ceil() as usize;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            let eta = (lo + h * i as f64).min(hi);
            let (f, _) = lattice_objective(&a, &[eta]);
            best = best.min(f);
        }
        best
    }

    #[test]
    fn alpha_1d_all_ones() {
        let a = CoefficientVector::new_1d(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let cert = alpha_1d_exact(&a, 0.75, &budgets()).unwrap();
        assert!((cert.alpha - 0.5).abs() < 1e-14);
        assert!((cert.eta_star[0] - 0.75).abs() < 1e-14);
        assert_eq!(cert.m_star, vec![1, 1, 1, 1]);
        assert_eq!(cert.kind, CertificateKind::Exact);
        assert_eq!(cert.gap, 0.0);
    }

    #[test]
    fn alpha_1d_interior_stationary_point() {
        let a = CoefficientVector::new_1d(&[1.0, 2.0]).unwrap();
        let cert = alpha_1d_exact(&a, 0.4, &budgets()).unwrap();
        assert!((cert.alpha - 0.2f64.sqrt()).abs() < 1e-14);
        assert!((cert.eta_star[0] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn alpha_1d_empty_domain() {
        let a = CoefficientVector::new_1d(&[1.0, 1.0]).unwrap();
        match alpha_1d_exact(&a, 0.2, &budgets()) {
            Err(Error::EmptyDomain { .. }) => {}
            other => panic!("expected EmptyDomain, got {other:?}"),
        }
    }

    #[test]
    fn alpha_1d_budget() {
        let a = CoefficientVector::new_1d(&[1e9]).unwrap();
        match alpha_1d_exact(&a, 0.9, &budgets()) {
            Err(Error::BreakpointBudgetExceeded { .. }) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn certificate_objective_consistency() {
        let a = CoefficientVector::new_1d(&[3.0, 5.0, 7.5]).unwrap();
        let cert = alpha_1d_exact(&a, 0.9, &budgets()).unwrap();
        let f = objective_with_m(&a, &cert.eta_star, &cert.m_star);
        assert!((f - cert.objective_value()).abs() < 1e-10);
    }

    #[test]
    fn alpha_multi_orthonormal_pair() {
        let a = CoefficientVector::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let cert = alpha_multi_certified(&a, 0.75, 1e-3, &budgets()).unwrap();
        assert!(cert.kind.is_sound_lower_bound());
        assert!(cert.gap <= 1e-3);
        assert!((cert.alpha - 0.25).abs() <= 1.5e-3, "alpha = {}", cert.alpha);
        // minimizer sits on one of the four axis crossings of the disk edge
        let e = &cert.eta_star;
        let norm = (e[0] * e[0] + e[1] * e[1]).sqrt();
        assert!((norm - 0.75).abs() < 0.05, "eta = {e:?}");
        assert!(e[0].abs().min(e[1].abs()) < 0.05, "eta = {e:?}");
    }

    #[test]
    fn alpha_multi_integer_point_reachable() {
        let a = CoefficientVector::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let cert = alpha_multi_certified(&a, 2.0, 1e-6, &budgets()).unwrap();
        assert!(cert.alpha <= 1e-9, "alpha = {}", cert.alpha);
        assert!(cert.gap <= 1e-6);
        assert!(!cert.notes.is_empty(), "expected the d_param >= dim note");
    }

    #[test]
    fn alpha_multi_matches_exact_in_1d() {
        let a = CoefficientVector::new_1d(&[1.0, 2.0]).unwrap();
        let exact = alpha_1d_exact(&a, 0.4, &budgets()).unwrap();
        let cert = alpha_multi_certified(&a, 0.4, 1e-4, &budgets()).unwrap();
        assert!(cert.alpha <= exact.alpha + 1e-12);
        assert!(exact.alpha <= cert.alpha + cert.gap + 1e-12);
    }

    #[test]
    fn alpha_multi_infeasible() {
        let a = CoefficientVector::from_rows(&[vec![0.1, 0.0]]).unwrap();
        match alpha_multi_certified(&a, 1.0, 1e-3, &budgets()) {
            Err(Error::InfeasibleDomain) => {}
            other => panic!("expected InfeasibleDomain, got {other:?}"),
        }
    }

    #[test]
    fn alpha_multi_budget_degrades_to_heuristic() {
        let a = CoefficientVector::from_rows(&[vec![1.0, 0.3], vec![0.4, 1.1]]).unwrap();
        let tight = Budgets { bnb_nodes: 3, ..Budgets::default() };
        let cert = alpha_multi_certified(&a, 0.9, 1e-9, &tight).unwrap();
        assert_eq!(cert.kind, CertificateKind::HeuristicUpperBound);
        assert!(!cert.kind.is_sound_lower_bound());
        let f = objective_with_m(&a, &cert.eta_star, &cert.m_star);
        assert!((f - cert.objective_value()).abs() < 1e-10);
    }

    #[test]
    fn b_set_all_ones() {
        let a = CoefficientVector::new_1d(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let dec = b_set(&a, 0.5, 2.0, &budgets()).unwrap();
        let expected = [(0.0, 0.125), (0.875, 1.125), (1.875, 2.0)];
        assert_eq!(dec.intervals.len(), expected.len());
        for ((lo, hi), (elo, ehi)) in dec.intervals.iter().zip(expected) {
            assert!((lo - elo).abs() < 1e-12 && (hi - ehi).abs() < 1e-12, "{:?}", dec.intervals);
        }
    }

    #[test]
    fn b_set_everything_when_alpha_large() {
        let a = CoefficientVector::new_1d(&[1.0]).unwrap();
        let dec = b_set(&a, 10.0, 1.0, &budgets()).unwrap();
        assert_eq!(dec.intervals, vec![(0.0, 1.0)]);
        // beyond 1/sup_norm the single component is tiled into unit chunks
        let dec2 = b_set(&a, 10.0, 2.5, &budgets()).unwrap();
        assert!(dec2.intervals.len() >= 3);
        let sup = a.sup_norm();
        for &(lo, hi) in &dec2.intervals {
            assert!(hi - lo <= 1.0 / sup + 1e-12);
        }
        assert!((dec2.measure() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn b_set_shrinks_with_alpha() {
        let a = CoefficientVector::new_1d(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let m1 = b_set(&a, 0.5, 2.0, &budgets()).unwrap().measure();
        let m2 = b_set(&a, 0.05, 2.0, &budgets()).unwrap().measure();
        let m3 = b_set(&a, 0.005, 2.0, &budgets()).unwrap().measure();
        assert!(m1 > m2 && m2 > m3);
        assert!(m3 < 0.01);
    }

    #[test]
    fn b_set_grid_cross_check() {
        let a = CoefficientVector::new_1d(&[1.0, 3.0, 4.5]).unwrap();
        let alpha = 0.4;
        let dec = b_set(&a, alpha, 1.5, &budgets()).unwrap();
        let inside = |eta: f64| dec.intervals.iter().any(|&(lo, hi)| eta >= lo && eta <= hi);
        let h = 1e-4;
        for i in 0..=15000 {
            let eta = h * i as f64;
            let (f, _) = lattice_objective(&a, &[eta]);
            if f < alpha / 2.0 - 1e-6 {
                assert!(inside(eta), "eta = {eta}, f = {f} should be in B");
            }
            if f > alpha / 2.0 + 1e-6 {
                assert!(!inside(eta), "eta = {eta}, f = {f} should be outside B");
            }
        }
    }

    #[test]
    fn scaling_invariance_power_of_two() {
        // (eta, a) -> (eta/2, 2a) is exact in binary floating point
        let a = CoefficientVector::new_1d(&[1.0, 3.0, 7.0]).unwrap();
        let scaled = CoefficientVector::new_1d(&[2.0, 6.0, 14.0]).unwrap();
        let c1 = alpha_1d_exact(&a, 0.8, &budgets()).unwrap();
        let c2 = alpha_1d_exact(&scaled, 0.4, &budgets()).unwrap();
        assert_eq!(c1.alpha, c2.alpha);
        assert_eq!(c1.eta_star[0], 2.0 * c2.eta_star[0]);
    }

    #[test]
    fn rejects_all_zero_for_lattice_ops() {
        let a = CoefficientVector::new_1d(&[0.0, 0.0]).unwrap();
        assert!(alpha_1d_exact(&a, 1.0, &budgets()).is_err());
        assert!(b_set(&a, 0.5, 1.0, &budgets()).is_err());
    }

    proptest! {
        #[test]
        fn prop_lipschitz(
            raw in proptest::collection::vec(-20.0f64..20.0, 1..6),
            x in 0.0f64..3.0,
            y in 0.0f64..3.0,
        ) {
            prop_assume!(raw.iter().any(|&c| c != 0.0));
            let a = CoefficientVector::new_1d(&raw).unwrap();
            let l = a.euclid_norm();
            let (fx, _) = lattice_objective(&a, &[x]);
            let (fy, _) = lattice_objective(&a, &[y]);
            prop_assert!((fx - fy).abs() <= l * (x - y).abs() + 1e-9);
        }

        #[test]
        fn prop_exact_below_grid(
            raw in proptest::collection::vec(0.5f64..10.0, 1..5),
            d_param in 0.6f64..1.0,
        ) {
            let a = CoefficientVector::new_1d(&raw).unwrap();
            let lo = 1.0 / (2.0 * a.sup_norm());
            prop_assume!(d_param > lo + 1e-6);
            let cert = alpha_1d_exact(&a, d_param, &Budgets::default()).unwrap();
            let h = 1e-4;
            let grid = grid_min_1d(&raw, lo, d_param, h);
            prop_assert!(cert.alpha <= grid + 1e-12);
            prop_assert!(grid <= cert.alpha + a.euclid_norm() * h + 1e-12);
        }

        #[test]
        fn prop_certified_brackets_grid(
            raw in proptest::collection::vec(0.5f64..6.0, 1..4),
            d_param in 0.7f64..1.0,
        ) {
            let a = CoefficientVector::new_1d(&raw).unwrap();
            let lo = 1.0 / (2.0 * a.sup_norm());
            prop_assume!(d_param > lo + 1e-6);
            let cert = alpha_multi_certified(&a, d_param, 1e-3, &Budgets::default()).unwrap();
            prop_assume!(cert.kind.is_sound_lower_bound());
            let grid = grid_min_1d(&raw, lo, d_param, 1e-4);
            prop_assert!(cert.alpha <= grid + 1e-12);
            prop_assert!(grid <= cert.alpha + cert.gap + a.euclid_norm() * 1e-4 + 1e-12);
        }

        #[test]
        fn prop_b_set_invariants(
            raw in proptest::collection::vec(0.5f64..8.0, 1..5),
            alpha in 0.05f64..0.8,
            eta_max in 0.5f64..3.0,
        ) {
            let a = CoefficientVector::new_1d(&raw).unwrap();
            let dec = b_set(&a, alpha, eta_max, &Budgets::default()).unwrap();
            let max_len = 1.0 / a.sup_norm();
            let mut prev_hi = -1.0f64;
            for &(lo, hi) in &dec.intervals {
                prop_assert!(lo >= -1e-15 && hi <= eta_max + 1e-15);
                prop_assert!(hi >= lo);
                prop_assert!(hi - lo <= max_len + 1e-12);
                prop_assert!(lo >= prev_hi - 1e-15, "intervals overlap or unsorted");
                prev_hi = hi;
            }
        }
    }
}
