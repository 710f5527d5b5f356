//! Efficiency bounds separating classical squeezing, quantum squeezing and
//! entanglement, and the regime classifier.
//!
//! Writing the global efficiency purely in terms of lambda_- at fixed
//! kappa = E'_BM shows it is monotonically decreasing in lambda_-. The
//! bounds are that expression evaluated at the two thresholds:
//! lambda_- = 1/2 (classical/quantum squeezing) gives B_cl, and
//! lambda_- = 1/(2C) (separable/entangled, via nu_PT = 1/2) gives B_en.

use crate::error::{Error, Result};

/// Regime of one operating point in the efficiency hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// lambda_- >= 1/2: eta_glob < B_cl.
    ClassicalSqueezing,
    /// 1/(2C) <= lambda_- < 1/2: B_cl < eta_glob <= B_en.
    QuantumSqueezingNoEntanglement,
    /// lambda_- < 1/(2C): B_en < eta_glob <= 1.
    Entangled,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::ClassicalSqueezing => "classical_squeezing",
            Regime::QuantumSqueezingNoEntanglement => "quantum_squeezing_no_entanglement",
            Regime::Entangled => "entangled",
        }
    }
}

/// Global efficiency as a function of lambda_- at fixed kappa:
/// 1 - (1/kappa)[sqrt((2 kappa + 1 - lambda) lambda) - 1/2].
pub fn eta_of_lambda(kappa: f64, lambda: f64) -> f64 {
    1.0 - (((2.0 * kappa + 1.0 - lambda) * lambda).sqrt() - 0.5) / kappa
}

/// Classical-squeezing bound B_cl = 1 - (1/2 kappa)[sqrt(4 kappa + 1) - 1].
///
/// Evaluated in the rationalized form 1 - 2/(1 + sqrt(4 kappa + 1)), which
/// is stable for small kappa.
pub fn bound_classical(kappa: f64) -> Result<f64> {
    if kappa <= 0.0 {
        return Err(Error::NonPositiveKappa { kappa });
    }
    Ok(1.0 - 2.0 / (1.0 + (4.0 * kappa + 1.0).sqrt()))
}

/// Entanglement bound B_en = 1 - (1/2 kappa)[sqrt((4 kappa + 2 - 1/C)/C) - 1].
///
/// Equals eta_of_lambda at lambda_- = 1/(2C); coincides with B_cl at C = 1.
/// Note B_en <= 1 requires 4 kappa >= C + 1/C - 2, which physicality
/// guarantees exactly where a state can actually be entangled.
pub fn bound_entangled(kappa: f64, c_t0: f64) -> Result<f64> {
    if kappa <= 0.0 {
        return Err(Error::NonPositiveKappa { kappa });
    }
    if c_t0 < 1.0 {
        return Err(Error::InvalidC { c: c_t0 });
    }
    let inner = (4.0 * kappa + 2.0 - 1.0 / c_t0) / c_t0;
    Ok(1.0 - 0.5 * (inner.sqrt() - 1.0) / kappa)
}

/// Classify an operating point from lambda_-, cross-checked against the
/// partial-transpose witness nu_PT through nu_PT^2 = C lambda_- / 2.
/// Boundary values land on the less-quantum side.
pub fn classify_regime(lambda_minus: f64, nu_pt: f64, c_t0: f64) -> Result<Regime> {
    let ent_threshold = 0.5 / c_t0;
    let from_lambda = if lambda_minus >= 0.5 {
        Regime::ClassicalSqueezing
    } else if lambda_minus >= ent_threshold {
        Regime::QuantumSqueezingNoEntanglement
    } else {
        Regime::Entangled
    };
    // The two witnesses must agree except within rounding of the threshold.
    let entangled_by_nu = nu_pt < 0.5;
    let entangled_by_lambda = from_lambda == Regime::Entangled;
    if entangled_by_nu != entangled_by_lambda && (nu_pt - 0.5).abs() > 1e-10 {
        return Err(Error::InconsistentWitness { lambda_minus, nu_pt, c: c_t0 });
    }
    Ok(from_lambda)
}
