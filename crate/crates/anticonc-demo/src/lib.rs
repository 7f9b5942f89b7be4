//! Browser bindings: three interactive views over the core toolkit. Each
//! function takes plain-text inputs and returns a JSON string so the page
//! needs no generated glue types; errors come back as `{"error": "..."}`.

use anticonc::bounds::{verify_instance, VerifyOptions};
use anticonc::cli::parse_inline_coefficients;
use anticonc::diophantine::{alpha_1d_exact, b_set, lattice_objective, CoefficientVector};
use anticonc::distributions::RandomVariableModel;
use anticonc::Budgets;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Work caps sized for an interactive page; large inputs degrade to an
/// error message instead of freezing the tab.
fn demo_budgets() -> Budgets {
    Budgets::uniform(2_000_000)
}

fn err_json(e: impl std::fmt::Display) -> String {
    json!({ "error": e.to_string() }).to_string()
}

fn parse_coeffs(text: &str) -> Result<CoefficientVector, String> {
    parse_inline_coefficients(text).map_err(|e| e.to_string())
}

/// Lattice objective f(eta) sampled over [0, eta_hi], the exact alpha
/// certificate for the window [1/(2 sup), D], and the B-set intervals
/// {f < alpha/2}. 1-D coefficients only.
#[wasm_bindgen]
pub fn diophantine_landscape(coefficients: &str, d_param: f64, points: u32) -> String {
    let a = match parse_coeffs(coefficients) {
        Ok(a) => a,
        Err(e) => return err_json(e),
    };
    if a.dim() != 1 {
        return err_json("landscape view needs 1-D coefficients");
    }
    let budgets = demo_budgets();
    let cert = match alpha_1d_exact(&a, d_param, &budgets) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    let sup = a.sup_norm();
    let window_lo = 1.0 / (2.0 * sup);
    let eta_hi = (1.3 * d_param).max(3.0 * window_lo);
    let n_points = points.clamp(16, 4096) as usize;
    let mut curve = Vec::with_capacity(n_points + 1);
    for i in 0..=n_points {
        let eta = eta_hi * i as f64 / n_points as f64;
        let (f, _) = lattice_objective(&a, &[eta]);
        curve.push(json!([eta, f]));
    }
    let intervals = if cert.alpha > 0.0 {
        match b_set(&a, cert.alpha, eta_hi, &budgets) {
            Ok(d) => d.intervals.iter().map(|&(lo, hi)| json!([lo, hi])).collect(),
            Err(e) => return err_json(e),
        }
    } else {
        Vec::new()
    };
    json!({
        "alpha": cert.alpha,
        "gap": cert.gap,
        "kind": cert.kind.as_str(),
        "eta_star": cert.eta_star[0],
        "window": [window_lo, d_param],
        "eta_hi": eta_hi,
        "curve": curve,
        "b_intervals": intervals,
    })
    .to_string()
}

/// Q as a function of the window radius for a 1-D weighted sum, on a log
/// radius grid; exact enumeration for atomic models, erf form for Gaussian.
#[wasm_bindgen]
pub fn concentration_profile(
    coefficients: &str,
    model_json: &str,
    radius_lo: f64,
    radius_hi: f64,
    points: u32,
) -> String {
    let a = match parse_coeffs(coefficients) {
        Ok(a) => a,
        Err(e) => return err_json(e),
    };
    let model = match RandomVariableModel::from_json(model_json) {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    if !(radius_lo > 0.0 && radius_hi > radius_lo) {
        return err_json("need 0 < radius_lo < radius_hi");
    }
    let budgets = demo_budgets();
    let n_points = points.clamp(2, 512) as usize;
    let ratio = radius_hi / radius_lo;
    let mut radii = Vec::with_capacity(n_points);
    let mut values = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let r = radius_lo * ratio.powf(i as f64 / (n_points - 1) as f64);
        match anticonc::concentration::q_exact(&a, &model, r, &budgets) {
            Ok(est) => {
                radii.push(r);
                values.push(est.value);
            }
            Err(e) => return err_json(e),
        }
    }
    json!({ "radii": radii, "values": values, "method": "exact" }).to_string()
}

/// Full pipeline report for one instance, as the flat JSON the page tables.
#[wasm_bindgen]
pub fn bound_chain(coefficients: &str, model_json: &str, d_param: f64) -> String {
    let a = match parse_coeffs(coefficients) {
        Ok(a) => a,
        Err(e) => return err_json(e),
    };
    let model = match RandomVariableModel::from_json(model_json) {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    let opts = VerifyOptions {
        budgets: demo_budgets(),
        mc_samples: 200_000,
        ..VerifyOptions::default()
    };
    let r = verify_instance("demo", &a, &model, d_param, &opts);
    let stage_errors: Vec<_> =
        r.stage_errors.iter().map(|(s, e)| json!([s, e])).collect();
    json!({
        "dim": r.dim,
        "n": r.n,
        "d_param": r.d_param,
        "sup_norm": r.sup_norm,
        "euclid_norm": r.euclid_norm,
        "gram_det": r.gram_det,
        "p": r.p,
        "q_sym": r.q_sym,
        "alpha": r.alpha,
        "alpha_gap": r.alpha_gap,
        "alpha_kind": r.alpha_kind.map(|k| k.as_str()),
        "q_value": r.q_estimate.as_ref().map(|q| q.value),
        "q_band": r.q_estimate.as_ref().map(|q| q.band),
        "q_method": r.q_estimate.as_ref().map(|q| q.method.as_str()),
        "q_lower_bound_only": r.q_estimate.as_ref().map(|q| q.lower_bound_only),
        "step1": r.step1,
        "step1_tail": r.step1_tail,
        "step2": r.step2,
        "i_a": r.i_a,
        "i_b": r.i_b,
        "i_a_cap": r.i_a_cap,
        "thm_rhs": r.thm_rhs,
        "big_c": r.constants.big_c,
        "small_c": r.constants.small_c,
        "chain_ok": r.chain_ok,
        "theorem_ok": r.theorem_ok,
        "stage_errors": stage_errors,
        "notes": r.notes,
    })
    .to_string()
}
