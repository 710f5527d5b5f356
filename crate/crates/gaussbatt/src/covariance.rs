//! Bright-mode covariance block, its time derivatives, the block-diagonal
//! global covariance matrix and all symplectic eigenvalues.
//!
//! The 2x2 bright-mode block is
//!
//!   Sigma_BM(t) = (C(T0)/2) I + alpha_bar^2 [[a, b], [b, c]],
//!
//! where a, b, c split into a homogeneous part (closed form in A(t) and its
//! derivatives) and a thermal part (frequency integrals of the Drude noise
//! kernel). The N-1 dark modes stay thermal at C(T0)/2 for all times, so
//! every observable reduces to this single block.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{derive_constants, DerivedConstants, SystemConfig};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadSettings};
use crate::resolvent::{eval_a_all, solve_poles, PoleSet};

/// Quadrature configuration for the thermal integrals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct QuadConfig {
    /// Tolerances and budget of each adaptive integral.
    pub settings: QuadSettings,
    /// Main window half-width in units of max(omega_D, omega_0, 2T).
    pub omega_max_factor: f64,
    /// The momentum-sector kernels decay only like 1/omega^2..1/omega^3, so
    /// the window is extended by this factor in a second tail segment.
    pub tail_factor: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            settings: QuadSettings::default(),
            omega_max_factor: 50.0,
            tail_factor: 8.0,
        }
    }
}

/// Bright-mode covariance data at one instant.
///
/// `a`, `b`, `c` are the dimensionless totals (homogeneous + thermal);
/// `a_dot` and `a_ddot` feed the switching-work expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmBlock {
    /// Time, units 1/omega_0.
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub a_dot: f64,
    pub a_ddot: f64,
}

impl BmBlock {
    /// Trace combination T(t) = a + c and determinant combination
    /// Delta(t) = a c - b^2.
    pub fn trace_delta(&self) -> (f64, f64) {
        (self.a + self.c, self.a * self.c - self.b * self.b)
    }

    /// The full 2x2 block (C/2) I + alpha_bar^2 [[a, b], [b, c]].
    pub fn sigma(&self, dc: &DerivedConstants) -> Matrix2<f64> {
        let half_c = 0.5 * dc.c_t0;
        let s = dc.alpha_bar_sq;
        Matrix2::new(half_c + s * self.a, s * self.b, s * self.b, half_c + s * self.c)
    }
}

/// Global covariance matrix in the bright/dark basis: one nontrivial block
/// plus N-1 frozen thermal dark modes. Off-diagonal blocks vanish
/// identically, so only the block data is stored.
#[derive(Debug, Clone, Copy)]
pub struct GlobalCm {
    pub bm: BmBlock,
    /// Dark-mode variance C(T0)/2, repeated N-1 times.
    pub dm_value: f64,
    pub n_cells: usize,
}

impl GlobalCm {
    pub fn new(bm: BmBlock, dc: &DerivedConstants, n_cells: usize) -> Self {
        GlobalCm { bm, dm_value: 0.5 * dc.c_t0, n_cells }
    }
}

/// Drude spectral density J(omega) = gamma0 omega_D^2 omega / (omega^2 + omega_D^2).
pub fn spectral_density(gamma0: f64, omega_d: f64, omega: f64) -> f64 {
    gamma0 * omega_d * omega_d * omega / (omega * omega + omega_d * omega_d)
}

/// J(omega) coth(omega / 2T), with the analytic limits at omega = 0
/// (2 gamma0 T for T > 0, zero at T = 0) and the T = 0 replacement
/// coth -> sign(omega).
pub fn thermal_weight(gamma0: f64, omega_d: f64, temp: f64, omega: f64) -> f64 {
    if temp == 0.0 {
        return spectral_density(gamma0, omega_d, omega.abs());
    }
    if omega == 0.0 {
        return 2.0 * gamma0 * temp;
    }
    spectral_density(gamma0, omega_d, omega) / (0.5 * omega / temp).tanh()
}

/// Frequency-domain kernel of the thermal integrals, prepared at a fixed
/// time. Components: [a, b, c, a_dot, a_ddot] kernels.
struct ThermalIntegrand {
    mu: [Complex64; 3],
    /// Pairwise weight products chi_bar^(j) chi_bar^(r).
    ww: [[Complex64; 3]; 3],
    /// e^{-(mu_j + mu_r) t}.
    ejr: [[Complex64; 3]; 3],
    /// e^{-mu_j t}.
    ej: [Complex64; 3],
    t: f64,
    gamma0: f64,
    omega_d: f64,
    temp: f64,
}

impl ThermalIntegrand {
    fn new(poles: &PoleSet, cfg: &SystemConfig, t: f64) -> Self {
        let mu = poles.coupled_poles;
        let ej = [(-mu[0] * t).exp(), (-mu[1] * t).exp(), (-mu[2] * t).exp()];
        let mut ww = [[Complex64::new(0.0, 0.0); 3]; 3];
        let mut ejr = [[Complex64::new(0.0, 0.0); 3]; 3];
        for j in 0..3 {
            for r in 0..3 {
                ww[j][r] = poles.weights[j] * poles.weights[r];
                ejr[j][r] = ej[j] * ej[r];
            }
        }
        ThermalIntegrand {
            mu,
            ww,
            ejr,
            ej,
            t,
            gamma0: cfg.gamma0,
            omega_d: cfg.omega_d,
            temp: cfg.temp_reservoir,
        }
    }

    /// Raw integrand at a single frequency.
    fn eval(&self, omega: f64) -> [Complex64; 5] {
        let jc = thermal_weight(self.gamma0, self.omega_d, self.temp, omega)
            / (2.0 * std::f64::consts::PI);
        let eiwt = Complex64::cis(omega * self.t);
        let iw = Complex64::new(0.0, omega);
        let mut s = [Complex64::new(0.0, 0.0); 5];
        for j in 0..3 {
            let mu_j = self.mu[j];
            let e_jw = self.ej[j] * eiwt;
            for r in 0..3 {
                let mu_r = self.mu[r];
                let e_rw = self.ej[r] * eiwt.conj();
                let denom = (mu_r + iw) * (mu_j - iw);
                let base = self.ww[j][r] / denom;
                let bracket = 1.0 + self.ejr[j][r] - e_jw - e_rw;
                let bracket_d = -(mu_j + mu_r) * self.ejr[j][r]
                    + (mu_j - iw) * e_jw
                    + (mu_r + iw) * e_rw;
                let bracket_dd = (mu_j + mu_r) * (mu_j + mu_r) * self.ejr[j][r]
                    - (mu_j - iw) * (mu_j - iw) * e_jw
                    - (mu_r + iw) * (mu_r + iw) * e_rw;
                let lb = base * bracket;
                s[0] += lb;
                s[1] -= mu_j * lb;
                s[2] += mu_j * mu_r * lb;
                s[3] += base * bracket_d;
                s[4] += base * bracket_dd;
            }
        }
        s.map(|v| v * jc)
    }

    /// Symmetrized integrand f(omega) + f(-omega) on [0, W]. For a
    /// conjugate-closed pole set f(-omega) = conj(f(omega)), so the sum is
    /// real up to rounding; the imaginary residue is checked downstream.
    fn eval_sym(&self, omega: f64) -> [Complex64; 5] {
        let plus = self.eval(omega);
        let minus = self.eval(-omega);
        let mut out = [Complex64::new(0.0, 0.0); 5];
        for k in 0..5 {
            out[k] = plus[k] + minus[k];
        }
        out
    }
}

/// Homogeneous (initial-condition) part of the block, closed form.
#[derive(Debug, Clone, Copy)]
pub struct HomogeneousBlock {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub a_dot: f64,
    pub a_ddot: f64,
}

/// Thermal (reservoir-noise) part of the block.
#[derive(Debug, Clone, Copy)]
pub struct ThermalBlock {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub a_dot: f64,
    pub a_ddot: f64,
    /// Analytic bound on the neglected high-frequency tail of a_ddot,
    /// folded into the reported error budget.
    pub tail_bound: f64,
}

/// Evaluation engine for one configuration: resolves poles once, memoizes
/// the quadrature results per time so diagnostics never recompute integrals.
pub struct Engine {
    cfg: SystemConfig,
    dc: DerivedConstants,
    poles: PoleSet,
    quad: QuadConfig,
    blocks: Mutex<HashMap<u64, BmBlock>>,
    traces: Mutex<HashMap<u64, f64>>,
}

impl Engine {
    pub fn new(cfg: SystemConfig) -> Result<Self> {
        Self::with_quad(cfg, QuadConfig::default())
    }

    pub fn with_quad(cfg: SystemConfig, quad: QuadConfig) -> Result<Self> {
        cfg.validate()?;
        let dc = derive_constants(&cfg)?;
        let poles = solve_poles(&dc, &cfg)?;
        Ok(Engine {
            cfg,
            dc,
            poles,
            quad,
            blocks: Mutex::new(HashMap::new()),
            traces: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn constants(&self) -> &DerivedConstants {
        &self.dc
    }

    pub fn poles(&self) -> &PoleSet {
        &self.poles
    }

    pub fn quad_config(&self) -> &QuadConfig {
        &self.quad
    }

    /// Integration half-width for the thermal integrals.
    fn omega_max(&self) -> f64 {
        self.quad.omega_max_factor
            * self.cfg.omega_d.max(1.0).max(2.0 * self.cfg.temp_reservoir)
    }

    /// Closed-form homogeneous part from A(t) and its derivatives.
    pub fn homogeneous_block(&self, t: f64) -> HomogeneousBlock {
        assert!(t >= 0.0, "blocks defined for t >= 0, got {t}");
        let [a0, a1, a2, a3] = eval_a_all(&self.poles, t);
        let half_c = 0.5 * self.dc.c_t0;
        let sq = self.dc.alpha_bar_sq;
        let a = half_c * (sq * (a1 * a1 + a0 * a0) - 1.0 / sq);
        let b = half_c * sq * a1 * (a2 + a0);
        let c = half_c * (sq * (a2 * a2 + a1 * a1) - 1.0 / sq);
        let a_dot = 2.0 * half_c * sq * a1 * (a2 + a0);
        let a_ddot = 2.0 * half_c * sq * (a2 * a2 + a0 * a2 + a1 * a3 + a1 * a1);
        HomogeneousBlock { a, b, c, a_dot, a_ddot }
    }

    /// Thermal part by adaptive quadrature of the Drude noise kernel.
    ///
    /// At t = 0 the kernel bracket vanishes identically and (0,0,0) is
    /// returned without integrating.
    pub fn thermal_block(&self, t: f64) -> Result<ThermalBlock> {
        assert!(t >= 0.0, "blocks defined for t >= 0, got {t}");
        if t == 0.0 {
            return Ok(ThermalBlock { a: 0.0, b: 0.0, c: 0.0, a_dot: 0.0, a_ddot: 0.0, tail_bound: 0.0 });
        }
        let integrand = ThermalIntegrand::new(&self.poles, &self.cfg, t);
        let w_main = self.omega_max();
        let w_tail = self.quad.tail_factor.max(1.0) * w_main;
        let main = integrate(|w| integrand.eval_sym(w), 0.0, w_main, &self.quad.settings)?;
        let tail = integrate(|w| integrand.eval_sym(w), w_main, w_tail, &self.quad.settings)?;
        let tail_bound = self.ddot_tail_bound(t, w_tail);

        let mut values = [Complex64::new(0.0, 0.0); 5];
        for k in 0..5 {
            values[k] = main.value[k] + tail.value[k];
        }
        let scale = values.iter().map(|v| v.re.abs()).fold(0.0_f64, f64::max);
        for v in &values {
            if v.im.abs() > 1e-8 * (1.0 + scale) {
                return Err(Error::QuadratureFailure {
                    error: v.im.abs(),
                    intervals: main.intervals,
                });
            }
        }
        Ok(ThermalBlock {
            a: values[0].re,
            b: values[1].re,
            c: values[2].re,
            a_dot: values[3].re,
            a_ddot: values[4].re,
            tail_bound,
        })
    }

    /// Crude analytic bound on the neglected |omega| > w_tail part of the
    /// a_ddot integral: the integrand there is below
    /// J(omega) * (2 |sum_j w_j e^{-mu_j t}| / omega + O(1/omega^2)) / pi.
    fn ddot_tail_bound(&self, t: f64, w_tail: f64) -> f64 {
        let mut q = Complex64::new(0.0, 0.0);
        let mut qm = Complex64::new(0.0, 0.0);
        for j in 0..3 {
            let e = (-self.poles.coupled_poles[j] * t).exp();
            q += self.poles.weights[j] * e;
            qm += self.poles.weights[j] * self.poles.coupled_poles[j] * e;
        }
        let jc_coeff = self.cfg.gamma0 * self.cfg.omega_d * self.cfg.omega_d;
        2.0 / std::f64::consts::PI * jc_coeff * (q.norm() + qm.norm() / w_tail) / w_tail
    }

    /// The full bright-mode block at time t (memoized).
    pub fn bm_block(&self, t: f64) -> Result<BmBlock> {
        let key = t.to_bits();
        if let Some(b) = self.blocks.lock().unwrap().get(&key) {
            return Ok(*b);
        }
        let h = self.homogeneous_block(t);
        let th = self.thermal_block(t)?;
        let block = BmBlock {
            t,
            a: h.a + th.a,
            b: h.b + th.b,
            c: h.c + th.c,
            a_dot: h.a_dot + th.a_dot,
            a_ddot: h.a_ddot + th.a_ddot,
        };
        self.blocks.lock().unwrap().insert(key, block);
        Ok(block)
    }

    /// Fast path for energy scans: only T(t) = a(t) + c(t) is evaluated,
    /// with a single-component integrand over the main window alone. The
    /// omitted tail is a slowly varying offset well below 1e-3 that cannot
    /// move an argmax at the scan's resolution; reported energies always
    /// come from full blocks.
    pub fn energy_trace(&self, t: f64) -> Result<f64> {
        let key = t.to_bits();
        if let Some(b) = self.blocks.lock().unwrap().get(&key) {
            return Ok(b.a + b.c);
        }
        if let Some(v) = self.traces.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let h = self.homogeneous_block(t);
        let thermal = if t == 0.0 {
            0.0
        } else {
            let integrand = ThermalIntegrand::new(&self.poles, &self.cfg, t);
            let trace_kernel = |w: f64| {
                let s = integrand.eval_sym(w);
                [s[0] + s[2]]
            };
            let main = integrate(trace_kernel, 0.0, self.omega_max(), &self.quad.settings)?;
            main.value[0].re
        };
        let trace = h.a + h.c + thermal;
        self.traces.lock().unwrap().insert(key, trace);
        Ok(trace)
    }
}

/// Symplectic spectrum of the global covariance matrix: nu_1 from the
/// bright-mode block, then C(T0)/2 repeated N-1 times for the dark modes.
///
/// nu_1 is evaluated both as sqrt(det Sigma_BM) and through the explicit
/// trace/determinant combination; the two routes agree to 1e-12 and the
/// explicit form is returned.
pub fn symplectic_spectrum(gcm: &GlobalCm, dc: &DerivedConstants) -> Result<Vec<f64>> {
    let nu1 = bright_symplectic_eigenvalue(&gcm.bm, dc)?;
    let mut all = vec![nu1];
    all.extend(std::iter::repeat(gcm.dm_value).take(gcm.n_cells - 1));
    Ok(all)
}

/// nu_1(t) for the bright mode alone.
pub fn bright_symplectic_eigenvalue(bm: &BmBlock, dc: &DerivedConstants) -> Result<f64> {
    let (tr, delta) = bm.trace_delta();
    let c = dc.c_t0;
    let sq = dc.alpha_bar_sq;
    let explicit = 0.5 * (c * c + 2.0 * sq * (c * tr + 2.0 * sq * delta)).max(0.0).sqrt();
    let det = bm.sigma(dc).determinant();
    let from_det = det.max(0.0).sqrt();
    debug_assert!(
        (explicit - from_det).abs() <= 1e-12 * (1.0 + explicit.abs()),
        "nu1 routes disagree: {explicit} vs {from_det}"
    );
    if explicit < 0.5 - 1e-6 {
        return Err(Error::PhysicalityViolation { nu: explicit, t: bm.t });
    }
    Ok(explicit)
}

/// Symplectic eigenvalue of the local 2x2 block of cell l (1-based):
/// nu_1^(l) = (1/2) sqrt(C^2 + 2 alpha_l^2 [C T(t) + 2 alpha_l^2 Delta(t)]).
pub fn local_block_spectrum(
    cfg: &SystemConfig,
    dc: &DerivedConstants,
    bm: &BmBlock,
    l: usize,
) -> Result<f64> {
    if l == 0 || l > cfg.n_cells {
        return Err(Error::IndexOutOfRange { index: l, n_cells: cfg.n_cells });
    }
    let alpha_sq = {
        let a = cfg.alpha_values()[l - 1];
        a * a
    };
    let (tr, delta) = bm.trace_delta();
    let c = dc.c_t0;
    let nu = 0.5 * (c * c + 2.0 * alpha_sq * (c * tr + 2.0 * alpha_sq * delta)).max(0.0).sqrt();
    if nu < 0.5 - 1e-6 {
        return Err(Error::PhysicalityViolation { nu, t: bm.t });
    }
    Ok(nu)
}

/// Householder reflector mapping e_1 onto the normalized coupling vector:
/// U = 1 - 2 v v^T / |v|^2 with v = A_hat - e_1. Returns the identity when
/// A_hat = e_1. Used to validate that the local covariance matrix rotates
/// into the block-diagonal global form.
pub fn householder_basis(cfg: &SystemConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    let alphas = cfg.alpha_values();
    let norm: f64 = alphas.iter().map(|a| a * a).sum::<f64>().sqrt();
    let n = cfg.n_cells;
    let mut v = DMatrix::from_fn(n, 1, |i, _| alphas[i] / norm);
    v[(0, 0)] -= 1.0;
    let vsq = v.norm_squared();
    if vsq < 1e-28 {
        return Ok(DMatrix::identity(n, n));
    }
    let mut u = DMatrix::identity(n, n);
    u -= 2.0 / vsq * &v * v.transpose();
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn engine(n: usize, gamma0: f64, omega_d: f64, t: f64, t0: f64) -> Engine {
        Engine::new(SystemConfig::uniform(n, gamma0, omega_d, t, t0).unwrap()).unwrap()
    }

    #[test]
    fn thermal_weight_limits() {
        assert_relative_eq!(thermal_weight(5.0, 2.0, 1.0, 0.0), 10.0, epsilon = 1e-12);
        assert_eq!(thermal_weight(5.0, 2.0, 0.0, 0.0), 0.0);
        // T = 0: coth -> sign(omega), integrand even and finite.
        let w = thermal_weight(5.0, 2.0, 0.0, -3.0);
        assert_relative_eq!(w, spectral_density(5.0, 2.0, 3.0), epsilon = 1e-15);
        assert!(w > 0.0);
    }

    #[test]
    fn blocks_vanish_at_t_zero() {
        let eng = engine(6, 5.0, 2.0, 0.5, 1.0);
        let h = eng.homogeneous_block(0.0);
        for v in [h.a, h.b, h.c, h.a_dot] {
            assert!(v.abs() < 1e-12, "homogeneous block not zero at t=0: {v}");
        }
        let th = eng.thermal_block(0.0).unwrap();
        assert_eq!((th.a, th.b, th.c), (0.0, 0.0, 0.0));
        let bm = eng.bm_block(0.0).unwrap();
        let sigma = bm.sigma(eng.constants());
        let half_c = 0.5 * eng.constants().c_t0;
        assert_relative_eq!(sigma[(0, 0)], half_c, epsilon = 1e-12);
        assert_relative_eq!(sigma[(1, 1)], half_c, epsilon = 1e-12);
        assert!(sigma[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn initial_covariance_kick_matches_coupling() {
        // a_ddot(0) = -C(T0) Omega_0^2: the quench that seeds the switching work.
        let eng = engine(6, 5.0, 2.0, 0.5, 1.0);
        let bm = eng.bm_block(0.0).unwrap();
        let expect = -eng.constants().c_t0 * eng.config().gamma0 * eng.config().omega_d;
        assert_relative_eq!(bm.a_ddot, expect, max_relative = 1e-9);
    }

    #[test]
    fn homogeneous_part_scales_with_c() {
        let cold = engine(6, 5.0, 2.0, 0.5, 0.5);
        let hot = engine(6, 5.0, 2.0, 0.5, 2.0);
        let t = cold.constants().tau / 2.0;
        let hb_cold = cold.homogeneous_block(t);
        let hb_hot = hot.homogeneous_block(t);
        let ratio = hot.constants().c_t0 / cold.constants().c_t0;
        assert_relative_eq!(hb_hot.a, hb_cold.a * ratio, max_relative = 1e-12);
        assert_relative_eq!(hb_hot.b, hb_cold.b * ratio, max_relative = 1e-12);
        assert_relative_eq!(hb_hot.c, hb_cold.c * ratio, max_relative = 1e-12);
    }

    #[test]
    fn a_dot_is_twice_b() {
        let eng = engine(6, 5.0, 2.0, 0.5, 0.5);
        let tau = eng.constants().tau;
        for &frac in &[0.25, 0.5, 1.0, 1.5] {
            let bm = eng.bm_block(frac * tau).unwrap();
            assert_relative_eq!(bm.a_dot, 2.0 * bm.b, max_relative = 1e-8);
        }
    }

    #[test]
    fn derivatives_match_finite_differences_of_a() {
        let eng = engine(6, 5.0, 2.0, 0.5, 0.5);
        let tau = eng.constants().tau;
        let h = 1e-4 * tau;
        for &frac in &[0.3, 0.5, 1.1] {
            let t = frac * tau;
            let f = |x: f64| eng.bm_block(x).map(|b| b.a).unwrap();
            let fd1 = (-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h))
                / (12.0 * h);
            let fd2 = (-f(t + 2.0 * h) + 16.0 * f(t + h) - 30.0 * f(t) + 16.0 * f(t - h)
                - f(t - 2.0 * h))
                / (12.0 * h * h);
            let bm = eng.bm_block(t).unwrap();
            assert_relative_eq!(fd1, bm.a_dot, max_relative = 1e-4);
            assert_relative_eq!(fd2, bm.a_ddot, max_relative = 5e-3);
        }
    }

    #[test]
    fn energy_trace_matches_full_block() {
        // The scan path skips the high-frequency tail segment, so it sits
        // within ~1e-4 of the full block's trace, not at quadrature level.
        let eng = engine(6, 5.0, 2.0, 0.5, 0.5);
        let t = 0.7 * eng.constants().tau;
        let trace = eng.energy_trace(t).unwrap();
        let bm = eng.bm_block(t).unwrap();
        assert_relative_eq!(trace, bm.a + bm.c, max_relative = 1e-3, epsilon = 1e-4);
    }

    #[test]
    fn physicality_of_bright_mode() {
        for (t_res, t0) in [(0.5, 0.5), (0.01, 0.0), (2.0, 0.0), (0.0, 1.0)] {
            let eng = engine(6, 5.0, 2.0, t_res, t0);
            let tau = eng.constants().tau;
            for &frac in &[0.0, 0.25, 0.5, 1.0, 1.9] {
                let bm = eng.bm_block(frac * tau).unwrap();
                let nu = bright_symplectic_eigenvalue(&bm, eng.constants()).unwrap();
                assert!(nu >= 0.5 - 1e-6, "nu1 = {nu} at t/tau = {frac}");
                let det = bm.sigma(eng.constants()).determinant();
                assert!(det >= 0.25 - 1e-8);
            }
        }
    }

    #[test]
    fn spectrum_at_t_zero_is_thermal() {
        let eng = engine(6, 5.0, 2.0, 0.5, 1.0);
        let bm = eng.bm_block(0.0).unwrap();
        let gcm = GlobalCm::new(bm, eng.constants(), 6);
        let spec = symplectic_spectrum(&gcm, eng.constants()).unwrap();
        assert_eq!(spec.len(), 6);
        for nu in &spec {
            assert_relative_eq!(*nu, 0.5 * eng.constants().c_t0, epsilon = 1e-12);
        }
        // Ground state: all nu = 1/2 at T0 = 0.
        let eng0 = engine(6, 5.0, 2.0, 0.5, 0.0);
        let bm0 = eng0.bm_block(0.0).unwrap();
        let spec0 =
            symplectic_spectrum(&GlobalCm::new(bm0, eng0.constants(), 6), eng0.constants())
                .unwrap();
        for nu in &spec0 {
            assert_relative_eq!(*nu, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn local_spectrum_edge_cases() {
        // Decoupled cell stays thermal.
        let cfg = SystemConfig::with_alphas(vec![1.0, 0.0, 1.0], 5.0, 2.0, 0.5, 1.0).unwrap();
        let eng = Engine::new(cfg).unwrap();
        let bm = eng.bm_block(0.3).unwrap();
        let nu = local_block_spectrum(eng.config(), eng.constants(), &bm, 2).unwrap();
        assert_relative_eq!(nu, 0.5 * eng.constants().c_t0, epsilon = 1e-12);

        // Single cell: local equals global.
        let eng1 = engine(1, 5.0, 2.0, 0.5, 0.5);
        let bm1 = eng1.bm_block(0.2).unwrap();
        let local = local_block_spectrum(eng1.config(), eng1.constants(), &bm1, 1).unwrap();
        let global = bright_symplectic_eigenvalue(&bm1, eng1.constants()).unwrap();
        assert_relative_eq!(local, global, epsilon = 1e-12);

        assert!(local_block_spectrum(eng1.config(), eng1.constants(), &bm1, 2).is_err());
    }

    #[test]
    fn householder_two_cells() {
        let cfg = SystemConfig::uniform(2, 1.0, 1.0, 0.0, 0.0).unwrap();
        let u = householder_basis(&cfg).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        assert_relative_eq!(u[(0, 0)], s, epsilon = 1e-14);
        assert_relative_eq!(u[(0, 1)], s, epsilon = 1e-14);
        assert_relative_eq!(u[(1, 0)], s, epsilon = 1e-14);
        assert_relative_eq!(u[(1, 1)], -s, epsilon = 1e-14);
    }

    #[test]
    fn householder_orthogonal_and_aligned() {
        let cfg = SystemConfig::with_alphas(vec![0.5, -1.0, 2.0, 0.3], 1.0, 1.0, 0.0, 0.0).unwrap();
        let u = householder_basis(&cfg).unwrap();
        let id = &u * u.transpose();
        assert!((id - DMatrix::identity(4, 4)).norm() < 1e-12);
        let alphas = cfg.alpha_values();
        let bar: f64 = alphas.iter().map(|a| a * a).sum::<f64>().sqrt();
        for i in 0..4 {
            assert_relative_eq!(u[(0, i)], alphas[i] / bar, epsilon = 1e-13);
        }
        // A_hat = e1 degenerates to the identity by convention.
        let trivial = SystemConfig::with_alphas(vec![1.0, 0.0], 1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(householder_basis(&trivial).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn local_cm_rotates_block_diagonal() {
        // Assemble the full local covariance matrix and conjugate by the
        // symplectic lift of the Householder map: one bright block plus
        // frozen thermal dark blocks.
        let eng = engine(4, 5.0, 2.0, 0.5, 0.7);
        let n = 4;
        let bm = eng.bm_block(0.5 * eng.constants().tau).unwrap();
        let alphas = eng.config().alpha_values();
        let half_c = 0.5 * eng.constants().c_t0;
        let mut sigma = DMatrix::zeros(2 * n, 2 * n);
        for l in 0..n {
            for m in 0..n {
                let w = alphas[l] * alphas[m];
                sigma[(2 * l, 2 * m)] = w * bm.a + if l == m { half_c } else { 0.0 };
                sigma[(2 * l, 2 * m + 1)] = w * bm.b;
                sigma[(2 * l + 1, 2 * m)] = w * bm.b;
                sigma[(2 * l + 1, 2 * m + 1)] = w * bm.c + if l == m { half_c } else { 0.0 };
            }
        }
        let u = householder_basis(eng.config()).unwrap();
        let mut lift = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                lift[(2 * i, 2 * j)] = u[(i, j)];
                lift[(2 * i + 1, 2 * j + 1)] = u[(i, j)];
            }
        }
        let glob = &lift * sigma * lift.transpose();
        let expected_bm = bm.sigma(eng.constants());
        assert_relative_eq!(glob[(0, 0)], expected_bm[(0, 0)], epsilon = 1e-10);
        assert_relative_eq!(glob[(0, 1)], expected_bm[(0, 1)], epsilon = 1e-10);
        assert_relative_eq!(glob[(1, 1)], expected_bm[(1, 1)], epsilon = 1e-10);
        for i in 2..2 * n {
            for j in 0..2 * n {
                let expect = if i == j { half_c } else { 0.0 };
                if j >= 2 || i >= 2 {
                    assert!(
                        (glob[(i, j)] - expect).abs() < 1e-10,
                        "entry ({i},{j}) = {} not block-diagonal",
                        glob[(i, j)]
                    );
                }
            }
        }
    }
}
