//! Rate functions of the neighborhood and component empirical measures, in
//! component, intermediate and combinatorial form, with the auxiliary
//! measures they are built from.

mod depth1;
pub mod extension;
mod forms;
mod reference;
mod truth;

pub use depth1::{frak_i, mu_check, mu_hat, rate_nbd, vertex_only_rate, AuxMeasure, Depth1Aux};
pub use extension::{one_step_extension, rho_check, rho_hat, rho_hat_with_reference, ExtensionKernel, OneStep};
pub use forms::{
    combinatorial_rate, component_rate, intermediate_rate, kappa_vec, microstate_check, rate_forms, s_scalar, s_vec,
    CombinatorialTerms, DepthTerm, Form, MicrostateCheck, RateFlags, RateReport,
};
pub use reference::{eta1_density, ell, DegreeRef, ReferenceLaw};
pub use truth::eta_marginal;

/// Tolerance on pair-measure asymmetry before a measure counts as inadmissible.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;
/// Tolerance on mean degree and degree-law gates.
pub const GATE_TOL: f64 = 1e-9;
/// Tolerance on truncation-chain consistency.
pub const CHAIN_TOL: f64 = 1e-9;

/// `ln n!`.
pub(crate) fn log_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `n!` as a float.
pub(crate) fn factorial(n: usize) -> f64 {
    (2..=n).map(|k| k as f64).product()
}

/// Calls `f` with every vector of `k` nonnegative counts summing to `m`.
pub(crate) fn for_each_multiset(k: usize, m: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(i: usize, left: usize, counts: &mut [usize], f: &mut dyn FnMut(&[usize])) {
        if i + 1 == counts.len() {
            counts[i] = left;
            f(counts);
            counts[i] = 0;
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, counts, f);
        }
        counts[i] = 0;
    }
    if k == 0 {
        if m == 0 {
            f(&[]);
        }
        return;
    }
    let mut counts = vec![0; k];
    rec(0, m, &mut counts, f);
}

/// Probability `m!/∏c_i! ∏p_i^{c_i}` of a count vector under `m` i.i.d. draws.
pub(crate) fn multinomial(counts: &[usize], probs: &[f64]) -> f64 {
    let mut p = 1.0;
    let mut total = 0usize;
    for (&c, &q) in counts.iter().zip(probs) {
        for j in 1..=c {
            total += 1;
            p *= total as f64 / j as f64 * q;
        }
    }
    p
}
