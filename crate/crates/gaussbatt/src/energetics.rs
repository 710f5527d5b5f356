//! Stored energy, global and local ergotropy, global efficiency, the
//! local/global extraction ratio, and the optimal charging time.
//!
//! In natural units the bright mode carries all the action:
//! E_B(t) = E_BM(t) + (N-1) C(T0)/2 with E_BM = (1/2)[C + alpha_bar^2 (a+c)],
//! the global ergotropy is E_BM - nu_1, and the local one subtracts the
//! per-cell symplectic eigenvalues instead.

use crate::config::{DerivedConstants, SystemConfig};
use crate::covariance::{bright_symplectic_eigenvalue, local_block_spectrum, BmBlock, Engine};
use crate::error::{Error, Result};

/// Floor below which an ergotropy is treated as exactly zero.
const ERGOTROPY_CLAMP: f64 = 1e-9;

/// Energies of one snapshot, units hbar omega_0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// Total battery energy E_B(t).
    pub e_b: f64,
    /// Bright-mode energy E_BM(t).
    pub e_bm: f64,
    /// E'_BM = E_BM - 1/2, the part above the zero point.
    pub e_bm_prime: f64,
}

/// Battery energies from the bright-mode block.
pub fn energy(bm: &BmBlock, dc: &DerivedConstants, n_cells: usize) -> EnergyParts {
    let e_bm = 0.5 * (dc.c_t0 + dc.alpha_bar_sq * (bm.a + bm.c));
    EnergyParts {
        e_b: e_bm + (n_cells as f64 - 1.0) * 0.5 * dc.c_t0,
        e_bm,
        e_bm_prime: e_bm - 0.5,
    }
}

/// Work extractable by one unitary acting on all N cells:
/// E_BM(t) - nu_1(t). Tiny negative round-off is clamped to zero; the
/// returned flag records whether the clamp fired beyond 1e-9.
pub fn ergotropy_global(bm: &BmBlock, dc: &DerivedConstants) -> Result<(f64, bool)> {
    let nu1 = bright_symplectic_eigenvalue(bm, dc)?;
    let e_bm = 0.5 * (dc.c_t0 + dc.alpha_bar_sq * (bm.a + bm.c));
    Ok(clamp_ergotropy(e_bm - nu1))
}

/// Work extractable by N independent single-cell unitaries:
/// E_B(t) - sum_l nu_1^(l)(t).
pub fn ergotropy_local(
    cfg: &SystemConfig,
    dc: &DerivedConstants,
    bm: &BmBlock,
) -> Result<(f64, bool)> {
    let n_cells = cfg.n_cells;
    let parts = energy(bm, dc, n_cells);
    let mut sum_nu = 0.0;
    for l in 1..=n_cells {
        sum_nu += local_block_spectrum(cfg, dc, bm, l)?;
    }
    Ok(clamp_ergotropy(parts.e_b - sum_nu))
}

fn clamp_ergotropy(raw: f64) -> (f64, bool) {
    if raw >= 0.0 {
        (raw, false)
    } else {
        (0.0, raw < -ERGOTROPY_CLAMP)
    }
}

/// Global efficiency eta_glob = E_glob / E'_BM, defined as 0 when nothing
/// is stored above the zero point (E'_BM <= 1e-12: zero ergotropy there).
pub fn eta_global(bm: &BmBlock, dc: &DerivedConstants) -> Result<f64> {
    let e_bm_prime = 0.5 * (dc.c_t0 + dc.alpha_bar_sq * (bm.a + bm.c)) - 0.5;
    if e_bm_prime <= 1e-12 {
        return Ok(0.0);
    }
    let (erg, _) = ergotropy_global(bm, dc)?;
    Ok((erg / e_bm_prime).clamp(0.0, 1.0))
}

/// Charging time: argmax of E_B(t) on [0, horizon].
///
/// Coarse scan at step tau/200 followed by golden-section refinement to a
/// time tolerance of 1e-4 tau. Fails with FlatLandscape when no sample
/// rises above E_B(0) by more than 1e-9 (no charging without coupling).
pub fn find_t_star(engine: &Engine, horizon: f64) -> Result<f64> {
    let scale = 0.5 * engine.constants().alpha_bar_sq;
    scan_t_star(engine.constants().tau, scale, horizon, |t| engine.energy_trace(t))
}

/// Scan + refine over an arbitrary stored-energy trace. `scale` converts
/// trace differences into energy differences for the flatness threshold.
fn scan_t_star(
    tau: f64,
    scale: f64,
    horizon: f64,
    trace: impl Fn(f64) -> Result<f64>,
) -> Result<f64> {
    assert!(
        horizon >= 2.0 * tau,
        "horizon {horizon} shorter than 2 tau = {}",
        2.0 * tau
    );
    let step = tau / 200.0;
    let n_steps = (horizon / step).ceil() as usize;

    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    let mut at_zero = 0.0;
    for i in 0..=n_steps {
        let t = (i as f64 * step).min(horizon);
        let value = trace(t)?;
        if i == 0 {
            at_zero = value;
        }
        if value > best {
            best = value;
            best_i = i;
        }
    }
    if scale * (best - at_zero) < 1e-9 {
        return Err(Error::FlatLandscape { horizon });
    }

    let mut lo = (best_i.saturating_sub(1)) as f64 * step;
    let mut hi = ((best_i + 1) as f64 * step).min(horizon);
    let tol = 1e-4 * tau;
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = trace(x1)?;
    let mut f2 = trace(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = trace(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = trace(x1)?;
        }
    }
    Ok(0.5 * (lo + hi))
}
