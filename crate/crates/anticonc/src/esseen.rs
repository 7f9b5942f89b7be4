//! The intermediate integral bounds of the concentration chain:
//!
//!   Q(S) <= step1 = e * int prod_k |phi(2 a_k eta)| e^{-eta^2} deta / sqrt(pi)
//!        <= e * step2,
//!
//! where step2 replaces each |phi| factor by the symmetrized exponential
//! exp{-(q/2) E[1 - cos(2 a_k eta Z) | |Z| >= 2]}, plus the A/B split of the
//! final Step-3 integral driven by the sublevel set {f < alpha/2}.

use std::f64::consts::{E, PI};

use libm::erfc;

use crate::diophantine::{b_set, lattice_objective, CoefficientVector};
use crate::distributions::RandomVariableModel;
use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, DEFAULT_ABS_TOL, DEFAULT_MAX_DEPTH};
use crate::Budgets;

/// Quadrature parameters shared by the integral bounds. Integrands carry an
/// e^{-eta^2} factor, so truncating at `truncation` loses at most
/// e * erfc(truncation), reported with every value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub truncation: f64,
    pub max_refinement_depth: u32,
    pub abs_tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            truncation: 8.0,
            max_refinement_depth: DEFAULT_MAX_DEPTH,
            abs_tolerance: DEFAULT_ABS_TOL,
        }
    }
}

impl QuadratureSpec {
    fn validate(&self) -> Result<()> {
        if !(self.truncation > 0.0) || !self.truncation.is_finite() {
            return Err(Error::InvalidArgument {
                name: "truncation",
                value: self.truncation.to_string(),
            });
        }
        if !(self.abs_tolerance > 0.0) {
            return Err(Error::InvalidArgument {
                name: "abs_tolerance",
                value: self.abs_tolerance.to_string(),
            });
        }
        Ok(())
    }

    /// Upper bound on the truncated tail, e * erfc(T). The factor e makes it
    /// valid for every integral in this module, prefactored or not.
    pub fn tail_bound(&self) -> f64 {
        E * erfc(self.truncation)
    }
}

/// An integral value with its truncation tail bound; the true integral lies
/// within [value - abs_tolerance, value + abs_tolerance + tail_bound].
#[derive(Debug, Clone, Copy)]
pub struct IntegralEstimate {
    pub value: f64,
    pub tail_bound: f64,
    pub abs_tolerance: f64,
}

/// The Step 1 bound: e * int_{-T}^{T} prod_k |phi(2 a_k eta)| e^{-eta^2}
/// deta / sqrt(pi). For one-dimensional coefficients and any model;
/// Q(S) <= value + tail_bound.
pub fn step1_integral(
    a: &CoefficientVector,
    model: &RandomVariableModel,
    quad: &QuadratureSpec,
) -> Result<IntegralEstimate> {
    quad.validate()?;
    let scalars = a.scalars()?.to_vec();
    let model = model.clone();
    let integrand = move |eta: f64| {
        let mut prod = (-eta * eta).exp();
        for &c in &scalars {
            prod *= model.char_fn(2.0 * c * eta).norm();
        }
        prod
    };
    // |phi(-t)| = |phi(t)| makes the integrand even; integrate [0, T] twice.
    let prefactor = 2.0 * E / PI.sqrt();
    let inner_tol = quad.abs_tolerance / prefactor;
    let half = adaptive_simpson(&integrand, 0.0, quad.truncation, inner_tol, quad.max_refinement_depth);
    Ok(IntegralEstimate {
        value: prefactor * half,
        tail_bound: quad.tail_bound(),
        abs_tolerance: quad.abs_tolerance,
    })
}

/// The Step 2 bound for atomic models, in two forms.
#[derive(Debug, Clone)]
pub struct Step2Estimate {
    /// Conditional-expectation form:
    /// int exp{-(q/2) E[sum_k (1 - cos(2 a_k eta Z)) | |Z| >= 2] - eta^2}
    /// deta / sqrt(pi). Satisfies step1 <= e * (value + tail) and
    /// value <= sup_form_value.
    pub value: f64,
    /// sup over the support points zeta = |Z| of the per-point integral
    /// int exp{-(q/2) sum_k (1 - cos(2 a_k eta zeta)) - eta^2} deta / sqrt(pi).
    pub sup_form_value: f64,
    /// Distinct support magnitudes |Z| >= 2 of the symmetrized variable.
    pub support_points: Vec<f64>,
    pub q: f64,
    pub tail_bound: f64,
    pub abs_tolerance: f64,
}

/// Evaluates the Step 2 integral exactly for atomic models, where the
/// conditional law of Z = X - X' given |Z| >= 2 is finite. Rejects Gaussian
/// models (no finite conditional law) and models with q = 0.
pub fn step2_integral_atomic(
    a: &CoefficientVector,
    model: &RandomVariableModel,
    quad: &QuadratureSpec,
) -> Result<Step2Estimate> {
    quad.validate()?;
    let scalars = a.scalars()?.to_vec();
    if !model.is_atomic() {
        return Err(Error::NonAtomicModel("step2_integral_atomic"));
    }
    let summary = model.symmetrize();
    let law = summary.conditional_law()?;
    let q = summary.q;
    let cond_atoms: Vec<(f64, f64)> = law.atoms().expect("atomic conditional law").to_vec();

    let cond_expectation = {
        let scalars = scalars.clone();
        let cond_atoms = cond_atoms.clone();
        move |eta: f64| {
            let mut total = 0.0;
            for &c in &scalars {
                for &(z, w) in &cond_atoms {
                    total += w * (1.0 - (2.0 * c * eta * z).cos());
                }
            }
            total
        }
    };
    let integrand = move |eta: f64| (-0.5 * q * cond_expectation(eta) - eta * eta).exp();
    let prefactor = 2.0 / PI.sqrt();
    let inner_tol = quad.abs_tolerance / prefactor;
    let value = prefactor
        * adaptive_simpson(&integrand, 0.0, quad.truncation, inner_tol, quad.max_refinement_depth);

    // sup-over-z form on the distinct magnitudes of the conditional support
    let mut support_points: Vec<f64> = cond_atoms.iter().map(|&(z, _)| z.abs()).collect();
    support_points.sort_by(f64::total_cmp);
    support_points.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    let mut sup_form_value = f64::NEG_INFINITY;
    for &zeta in &support_points {
        let scalars = scalars.clone();
        let point_integrand = move |eta: f64| {
            let mut total = 0.0;
            for &c in &scalars {
                total += 1.0 - (2.0 * c * eta * zeta).cos();
            }
            (-0.5 * q * total - eta * eta).exp()
        };
        let v = prefactor
            * adaptive_simpson(
                &point_integrand,
                0.0,
                quad.truncation,
                inner_tol,
                quad.max_refinement_depth,
            );
        sup_form_value = sup_form_value.max(v);
    }

    Ok(Step2Estimate {
        value,
        sup_form_value,
        support_points,
        q,
        tail_bound: quad.tail_bound(),
        abs_tolerance: quad.abs_tolerance,
    })
}

/// The A/B split of the Step 3 integral.
#[derive(Debug, Clone)]
pub struct SplitIntegral {
    /// Contribution of A = {f >= alpha/2}: exponentially small in alpha.
    pub i_a: f64,
    /// Contribution of B = {f < alpha/2}, a union of short intervals.
    pub i_b: f64,
    /// Analytic cap on i_a: exp(-c3 p^2 (alpha/2)^2) times the full Gaussian
    /// mass of the integral.
    pub i_a_cap: f64,
    /// Number of quadrature segments the domain was cut into.
    pub segments: usize,
    pub tail_bound: f64,
    pub abs_tolerance: f64,
}

/// Splits J = int exp{-c3 p^2 f(eta)^2 - (eta/z)^2} deta / (z sqrt(pi)) into
/// the contributions of A = {f >= alpha/2} and its complement B. After the
/// substitution eta = z u the domain is u in [0, T] (doubled for symmetry),
/// and B membership comes from the exact interval decomposition of b_set.
pub fn split_integral(
    a: &CoefficientVector,
    alpha: f64,
    p: f64,
    c3: f64,
    z: f64,
    quad: &QuadratureSpec,
    budgets: &Budgets,
) -> Result<SplitIntegral> {
    quad.validate()?;
    let scalars = a.scalars()?.to_vec();
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument { name: "alpha", value: alpha.to_string() });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument { name: "p", value: p.to_string() });
    }
    if !(c3 > 0.0) {
        return Err(Error::InvalidArgument { name: "c3", value: c3.to_string() });
    }
    if z < 2.0 / PI {
        return Err(Error::InvalidArgument { name: "z", value: z.to_string() });
    }

    let t = quad.truncation;
    let decomposition = b_set(a, alpha, z * t, budgets)?;

    // carve [0, T] (u-space) into alternating A/B segments
    let mut segments: Vec<(f64, f64, bool)> = Vec::new(); // (lo, hi, in_b)
    let mut cursor = 0.0f64;
    for &(lo_eta, hi_eta) in &decomposition.intervals {
        let lo = (lo_eta / z).min(t);
        let hi = (hi_eta / z).min(t);
        if lo > cursor {
            segments.push((cursor, lo, false));
        }
        if hi > lo {
            // adjacent tiles of one over-long component stay a single B segment
            match segments.last_mut() {
                Some((_, prev_hi, true)) if (lo - *prev_hi).abs() <= 1e-15 => *prev_hi = hi,
                _ => segments.push((lo, hi, true)),
            }
        }
        cursor = cursor.max(hi);
    }
    if cursor < t {
        segments.push((cursor, t, false));
    }

    let coef = c3 * p * p;
    let av = CoefficientVector::new_1d(&scalars)?;
    let integrand = move |u: f64| {
        let (f, _) = lattice_objective(&av, &[z * u]);
        (-coef * f * f - u * u).exp()
    };

    let prefactor = 2.0 / PI.sqrt();
    let inner_tol = quad.abs_tolerance / prefactor / segments.len().max(1) as f64;
    let mut i_a = 0.0;
    let mut i_b = 0.0;
    for &(lo, hi, in_b) in &segments {
        let v = adaptive_simpson(&integrand, lo, hi, inner_tol, quad.max_refinement_depth);
        if in_b {
            i_b += v;
        } else {
            i_a += v;
        }
    }

    let i_a_cap = (-coef * (alpha / 2.0) * (alpha / 2.0)).exp();
    Ok(SplitIntegral {
        i_a: prefactor * i_a,
        i_b: prefactor * i_b,
        i_a_cap,
        segments: segments.len(),
        tail_bound: quad.tail_bound(),
        abs_tolerance: quad.abs_tolerance,
    })
}

/// Single-pass evaluation of the undivided Step 3 integral, for additivity
/// checks against `split_integral`.
pub fn unsplit_integral(
    a: &CoefficientVector,
    p: f64,
    c3: f64,
    z: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    let scalars = a.scalars()?.to_vec();
    let coef = c3 * p * p;
    let av = CoefficientVector::new_1d(&scalars)?;
    let integrand = move |u: f64| {
        let (f, _) = lattice_objective(&av, &[z * u]);
        (-coef * f * f - u * u).exp()
    };
    let prefactor = 2.0 / PI.sqrt();
    let inner_tol = quad.abs_tolerance / prefactor;
    Ok(prefactor
        * adaptive_simpson(&integrand, 0.0, quad.truncation, inner_tol, quad.max_refinement_depth))
}

/// The optimal constant in 1 - cos(theta) >= c1 * dist(theta, 2 pi Z)^2,
/// attained at theta = pi.
pub const C1: f64 = 2.0 / (PI * PI);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concentration::q_exact_atomic;

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn pm1() -> RandomVariableModel {
        RandomVariableModel::rademacher()
    }

    #[test]
    fn step1_gaussian_closed_form() {
        // prod |phi| = e^{-2 |a|^2 eta^2}, so the integral is e / sqrt(1 + 2 |a|^2)
        let a = CoefficientVector::new_1d(&[2.0, 0.0, 0.0]).unwrap();
        let g = RandomVariableModel::gaussian(0.0, 1.0).unwrap();
        let est = step1_integral(&a, &g, &quad()).unwrap();
        assert!((est.value - E / 3.0).abs() < 1e-8, "value = {}", est.value);

        for coeffs in [vec![1.0, 2.0, 3.0], vec![0.5], vec![4.0, 4.0, 4.0, 4.0]] {
            let a = CoefficientVector::new_1d(&coeffs).unwrap();
            let est = step1_integral(&a, &g, &quad()).unwrap();
            let expected = E / (1.0 + 2.0 * a.euclid_norm().powi(2)).sqrt();
            assert!((est.value - expected).abs() < 1e-8, "coeffs {coeffs:?}");
        }
    }

    #[test]
    fn step1_atomic_pair_closed_form() {
        // prod |phi| = cos^2(2 eta); int cos^2(2 eta) e^{-eta^2} / sqrt(pi) = (1 + e^{-4}) / 2
        let a = CoefficientVector::new_1d(&[1.0, 1.0]).unwrap();
        let est = step1_integral(&a, &pm1(), &quad()).unwrap();
        let expected = E * (1.0 + (-4.0f64).exp()) / 2.0;
        assert!((est.value - expected).abs() < 1e-8, "value = {}", est.value);
    }

    #[test]
    fn step1_zero_coefficient_gives_e() {
        let a = CoefficientVector::new_1d(&[0.0]).unwrap();
        let est = step1_integral(&a, &pm1(), &quad()).unwrap();
        assert!((est.value - E).abs() < 1e-8);
    }

    #[test]
    fn step1_invariant_under_permutation_and_sign() {
        let g = RandomVariableModel::gaussian(0.0, 1.0).unwrap();
        for model in [pm1(), g] {
            let v1 = step1_integral(&CoefficientVector::new_1d(&[1.0, 2.0, 3.0]).unwrap(), &model, &quad())
                .unwrap()
                .value;
            let v2 = step1_integral(&CoefficientVector::new_1d(&[3.0, 1.0, 2.0]).unwrap(), &model, &quad())
                .unwrap()
                .value;
            let v3 =
                step1_integral(&CoefficientVector::new_1d(&[-1.0, 2.0, -3.0]).unwrap(), &model, &quad())
                    .unwrap()
                    .value;
            assert!((v1 - v2).abs() < 1e-10);
            assert!((v1 - v3).abs() < 1e-10);
        }
    }

    #[test]
    fn step2_zero_coefficients_give_one() {
        let a = CoefficientVector::new_1d(&[0.0, 0.0]).unwrap();
        let est = step2_integral_atomic(&a, &pm1(), &quad()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-8, "value = {}", est.value);
    }

    #[test]
    fn step2_pm1_pair_matches_fixed_grid_oracle() {
        // oracle: fixed-step Simpson of exp{-(1 - cos 4 eta)/2 - eta^2}/sqrt(pi)
        // over [-10, 10] at h = 1e-5, frozen: 0.6507651686963635
        let a = CoefficientVector::new_1d(&[1.0, 1.0]).unwrap();
        let est = step2_integral_atomic(&a, &pm1(), &quad()).unwrap();
        assert!((est.value - 0.6507651686963635).abs() < 1e-8, "value = {}", est.value);
        assert_eq!(est.q, 0.5);
        assert_eq!(est.support_points, vec![2.0]);
        // single support point: both forms coincide
        assert!((est.sup_form_value - est.value).abs() < 1e-9);
    }

    #[test]
    fn step2_rejects_degenerate_and_gaussian() {
        let a = CoefficientVector::new_1d(&[1.0]).unwrap();
        let narrow = RandomVariableModel::atomic(&[(0.0, 0.5), (0.5, 0.5)]).unwrap();
        assert!(matches!(
            step2_integral_atomic(&a, &narrow, &quad()),
            Err(Error::DegenerateSymmetrization)
        ));
        let g = RandomVariableModel::gaussian(0.0, 1.0).unwrap();
        assert!(matches!(step2_integral_atomic(&a, &g, &quad()), Err(Error::NonAtomicModel(_))));
    }

    #[test]
    fn step2_value_below_sup_form() {
        let model =
            RandomVariableModel::atomic(&[(-1.5, 0.3), (0.2, 0.3), (1.4, 0.4)]).unwrap();
        let a = CoefficientVector::new_1d(&[1.0, 2.5, 0.7]).unwrap();
        let est = step2_integral_atomic(&a, &model, &quad()).unwrap();
        assert!(est.value <= est.sup_form_value + 1e-9);
        assert!(est.support_points.iter().all(|&z| z >= 2.0));
    }

    #[test]
    fn chain_step1_vs_q_and_step2() {
        let budgets = Budgets::default();
        let corpora: Vec<Vec<f64>> = vec![vec![1.0, 1.0, 1.0], vec![1.0, 2.0], vec![0.5, 0.7, 1.3, 2.1]];
        for coeffs in corpora {
            let a = CoefficientVector::new_1d(&coeffs).unwrap();
            let q_exact = q_exact_atomic(&a, &pm1(), 1.0, &budgets).unwrap().value;
            let s1 = step1_integral(&a, &pm1(), &quad()).unwrap();
            let s2 = step2_integral_atomic(&a, &pm1(), &quad()).unwrap();
            assert!(q_exact <= s1.value + s1.tail_bound + 1e-9, "coeffs {coeffs:?}");
            assert!(s1.value <= E * s2.value + 1e-9, "coeffs {coeffs:?}");
        }
    }

    #[test]
    fn split_additivity() {
        let a = CoefficientVector::new_1d(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let q = quad();
        let budgets = Budgets::default();
        let split = split_integral(&a, 0.5, 0.5, 1.0, 2.0, &q, &budgets).unwrap();
        let whole = unsplit_integral(&a, 0.5, 1.0, 2.0, &q).unwrap();
        assert!(
            (split.i_a + split.i_b - whole).abs() <= 2.0 * q.abs_tolerance,
            "ia {} ib {} whole {}",
            split.i_a,
            split.i_b,
            whole
        );
        // frozen high-precision oracle for the undivided integral
        // (2/sqrt(pi)) int_0^8 exp(-dist(2u,Z)^2 - u^2) du, split at kinks
        assert!((whole - 0.9225620128255849).abs() < 1e-9, "whole = {whole}");
    }

    #[test]
    fn split_cap_honored() {
        let a = CoefficientVector::new_1d(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let budgets = Budgets::default();
        for (alpha, p, c3) in [(0.5, 0.5, 1.0), (0.3, 0.8, 2.0), (0.9, 0.4, 0.5)] {
            let s = split_integral(&a, alpha, p, c3, 2.0, &quad(), &budgets).unwrap();
            assert!(s.i_a <= s.i_a_cap + 1e-9, "alpha {alpha} p {p} c3 {c3}");
        }
    }

    #[test]
    fn split_limits() {
        let a = CoefficientVector::new_1d(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let q = quad();
        let budgets = Budgets::default();
        // huge alpha: everything is in B
        let s = split_integral(&a, 50.0, 0.5, 1.0, 2.0, &q, &budgets).unwrap();
        assert!(s.i_a.abs() < 1e-12);
        let whole = unsplit_integral(&a, 0.5, 1.0, 2.0, &q).unwrap();
        assert!((s.i_b - whole).abs() < 2.0 * q.abs_tolerance);
        // tiny alpha: B shrinks to almost nothing
        let s = split_integral(&a, 1e-4, 0.5, 1.0, 2.0, &q, &budgets).unwrap();
        assert!(s.i_b < 1e-3, "i_b = {}", s.i_b);
        assert!((s.i_a - whole).abs() < 1e-3);
    }

    #[test]
    fn split_rejects_small_z() {
        let a = CoefficientVector::new_1d(&[1.0]).unwrap();
        let r = split_integral(&a, 0.5, 0.5, 1.0, 0.5, &quad(), &Budgets::default());
        assert!(matches!(r, Err(Error::InvalidArgument { name: "z", .. })));
    }

    #[test]
    fn c1_is_the_optimal_cosine_constant() {
        // 1 - cos(theta) >= C1 dist(theta, 2 pi Z)^2, tight at theta = pi
        let mut theta = -9.0;
        while theta <= 9.0 {
            let dist = {
                let t = theta / (2.0 * PI);
                (t - t.round()) * 2.0 * PI
            };
            assert!(1.0 - theta.cos() >= C1 * dist * dist - 1e-12, "theta = {theta}");
            theta += 0.01;
        }
        assert!((1.0 - PI.cos()) - C1 * PI * PI < 1e-12);
    }
}
