//! Poles of the Laplace-domain resolvent for Drude damping, the memory
//! function A(t) with its time derivatives, and the response kernel
//! chi_{ll'}(t).
//!
//! With hbar = m = omega_0 = 1 the resolvent has five poles. Two are free,
//! mu_{1,2} = +/- i, and three are reservoir-coupled roots of the cubic
//!
//!   (1 + mu^2)(omega_D - mu) - mu * alpha_bar^2 * Omega_0^2 = 0,
//!
//! equivalently of the monic polynomial
//!
//!   mu^3 - omega_D mu^2 + (1 + Omega_N^2) mu - omega_D = 0.
//!
//! All time dependence downstream enters through exponentials e^{-mu_i t},
//! so Re(mu_i) > 0 for every coupled pole whenever gamma_0 > 0.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::config::{DerivedConstants, SystemConfig};
use crate::error::{Error, Result};

/// Relative threshold below which an imaginary part is treated as rounding.
const IMAG_EPS: f64 = 1e-9;

/// The five resolvent poles and the partial-fraction weights attached to
/// the coupled ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleSet {
    /// Free poles mu_1 = +i, mu_2 = -i (units omega_0).
    pub free_poles: [Complex64; 2],
    /// Coupled poles mu_3, mu_4, mu_5, sorted by (Re, Im) ascending.
    pub coupled_poles: [Complex64; 3],
    /// Exponential weights chi_bar^(i) = mu_i Omega_N^2 prod_{r != i} 1/(mu_r - mu_i).
    pub weights: [Complex64; 3],
    /// Coefficients of A(t) = sum c_i e^{-mu_i t}; c_i = chi_bar^(i) / alpha_bar^2.
    pub a_coeffs: [Complex64; 3],
}

/// Evaluate the monic cubic and its derivative at mu.
fn cubic(omega_d: f64, omega_n_sq: f64, mu: Complex64) -> (Complex64, Complex64) {
    let c2 = -omega_d;
    let c1 = 1.0 + omega_n_sq;
    let c0 = -omega_d;
    let p = ((mu + c2) * mu + c1) * mu + c0;
    let dp = (3.0 * mu + 2.0 * c2) * mu + c1;
    (p, dp)
}

/// Residual of the defining equation (S-form) used by the pole invariant:
/// (1 + mu^2)(omega_D - mu) - mu * alpha_bar^2 * Omega_0^2.
pub fn pole_residual(dc: &DerivedConstants, cfg: &SystemConfig, mu: Complex64) -> f64 {
    let omega_n_sq = dc.alpha_bar_sq * cfg.gamma0 * cfg.omega_d;
    ((1.0 + mu * mu) * (cfg.omega_d - mu) - mu * omega_n_sq).norm()
}

/// Find all five poles and the partial-fraction weights.
///
/// The coupled cubic is solved through companion-matrix eigenvalues and each
/// root is polished by Newton steps until the residual saturates. Degenerate
/// poles (closer than 1e-9) are rejected: the partial-fraction weights would
/// be singular and the closed-form covariance assumes simple poles.
pub fn solve_poles(dc: &DerivedConstants, cfg: &SystemConfig) -> Result<PoleSet> {
    let omega_n_sq = dc.omega_n * dc.omega_n;
    let mut roots = cubic_roots(cfg.omega_d, omega_n_sq);
    enforce_real_structure(&mut roots);
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });

    let free = [Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)];
    let all: [Complex64; 5] = [free[0], free[1], roots[0], roots[1], roots[2]];
    for i in 0..5 {
        for j in (i + 1)..5 {
            let separation = (all[i] - all[j]).norm();
            if separation < 1e-9 {
                return Err(Error::DegeneratePoles { i: i + 1, j: j + 1, separation });
            }
        }
    }

    let omega0_sq = cfg.gamma0 * cfg.omega_d;
    let mut a_coeffs = [Complex64::new(0.0, 0.0); 3];
    for (k, &mu) in roots.iter().enumerate() {
        let mut prod = Complex64::new(1.0, 0.0);
        for &other in all.iter() {
            if other != mu {
                prod /= other - mu;
            }
        }
        a_coeffs[k] = mu * omega0_sq * prod;
    }
    let weights = a_coeffs.map(|c| c * dc.alpha_bar_sq);

    let poles = PoleSet {
        free_poles: free,
        coupled_poles: roots,
        weights,
        a_coeffs,
    };
    debug_assert!(roots.iter().all(|mu| mu.re > 0.0), "undamped coupled pole: {roots:?}");
    Ok(poles)
}

/// Roots of the coupled cubic via companion-matrix eigenvalues plus Newton
/// polish. No branch-cut bookkeeping, uniform accuracy.
fn cubic_roots(omega_d: f64, omega_n_sq: f64) -> [Complex64; 3] {
    let c2 = -omega_d;
    let c1 = 1.0 + omega_n_sq;
    let c0 = -omega_d;
    let companion = Matrix3::new(
        0.0, 0.0, -c0, //
        1.0, 0.0, -c1, //
        0.0, 1.0, -c2,
    );
    let eigs = companion.complex_eigenvalues();
    let mut roots = [eigs[0], eigs[1], eigs[2]];
    for mu in roots.iter_mut() {
        for _ in 0..8 {
            let (p, dp) = cubic(omega_d, omega_n_sq, *mu);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            *mu -= step;
            if step.norm() <= 1e-16 * (1.0 + mu.norm()) {
                break;
            }
        }
    }
    roots
}

/// A real cubic has either three real roots or one real root plus a
/// conjugate pair. Snap the computed roots onto that exact structure so
/// downstream exponential sums are real to machine precision.
fn enforce_real_structure(roots: &mut [Complex64; 3]) {
    let is_real = |z: &Complex64| z.im.abs() <= IMAG_EPS * (1.0 + z.norm());
    let n_real = roots.iter().filter(|z| is_real(z)).count();
    if n_real >= 2 {
        for z in roots.iter_mut() {
            z.im = 0.0;
        }
        return;
    }
    // Exactly one real root: find it as the smallest relative imaginary part.
    let real_idx = (0..3)
        .min_by(|&i, &j| {
            let ri = roots[i].im.abs() / (1.0 + roots[i].norm());
            let rj = roots[j].im.abs() / (1.0 + roots[j].norm());
            ri.partial_cmp(&rj).unwrap()
        })
        .unwrap();
    roots[real_idx].im = 0.0;
    let others: Vec<usize> = (0..3).filter(|&i| i != real_idx).collect();
    let (i, j) = if roots[others[0]].im > 0.0 {
        (others[0], others[1])
    } else {
        (others[1], others[0])
    };
    let paired = 0.5 * (roots[i] + roots[j].conj());
    roots[i] = paired;
    roots[j] = paired.conj();
}

/// Evaluate A(t) or one of its first three time derivatives.
///
/// A^(k)(t) = sum_{i=3..5} (-mu_i)^k c_i e^{-mu_i t}. The sum is real for a
/// conjugate-closed pole set; the imaginary remainder is asserted small.
/// The third derivative feeds the switching-work expression.
pub fn eval_a(poles: &PoleSet, t: f64, order: usize) -> f64 {
    assert!(order <= 3, "A derivatives implemented up to order 3, got {order}");
    assert!(t >= 0.0, "A(t) defined for t >= 0, got {t}");
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..3 {
        let mu = poles.coupled_poles[k];
        let factor = (-mu).powu(order as u32);
        acc += factor * poles.a_coeffs[k] * (-mu * t).exp();
    }
    debug_assert!(
        acc.im.abs() < 1e-9 * (1.0 + acc.re.abs()),
        "A^({order})({t}) has imaginary residue {}",
        acc.im
    );
    acc.re
}

/// Evaluate A, A', A'', A''' in one pass (one complex exp per pole).
pub fn eval_a_all(poles: &PoleSet, t: f64) -> [f64; 4] {
    debug_assert!(t >= 0.0);
    let mut acc = [Complex64::new(0.0, 0.0); 4];
    for k in 0..3 {
        let mu = poles.coupled_poles[k];
        let base = poles.a_coeffs[k] * (-mu * t).exp();
        let mut factor = Complex64::new(1.0, 0.0);
        for a in acc.iter_mut() {
            *a += factor * base;
            factor *= -mu;
        }
    }
    acc.map(|z| z.re)
}

/// Response kernel chi_{ll'}(t) = sin(t) delta_{ll'} + alpha_l alpha_l'
/// [A(t) - sin(t)/alpha_bar^2], with 1-based cell indices.
pub fn eval_chi(
    poles: &PoleSet,
    cfg: &SystemConfig,
    dc: &DerivedConstants,
    l: usize,
    l_prime: usize,
    t: f64,
) -> Result<f64> {
    let n = cfg.n_cells;
    for idx in [l, l_prime] {
        if idx == 0 || idx > n {
            return Err(Error::IndexOutOfRange { index: idx, n_cells: n });
        }
    }
    let alphas = cfg.alpha_values();
    let delta = if l == l_prime { 1.0 } else { 0.0 };
    let s = t.sin();
    let a = eval_a(poles, t, 0);
    Ok(s * delta + alphas[l - 1] * alphas[l_prime - 1] * (a - s / dc.alpha_bar_sq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::derive_constants;
    use approx::assert_relative_eq;

    fn setup(n: usize, gamma0: f64, omega_d: f64) -> (SystemConfig, DerivedConstants, PoleSet) {
        let cfg = SystemConfig::uniform(n, gamma0, omega_d, 0.5, 0.5).unwrap();
        let dc = derive_constants(&cfg).unwrap();
        let poles = solve_poles(&dc, &cfg).unwrap();
        (cfg, dc, poles)
    }

    #[test]
    fn residual_below_tolerance_on_grid() {
        for &(n, g, w) in &[
            (6, 5.0, 2.0),
            (6, 0.528, 7.344),
            (6, 1.571, 0.922),
            (12, 5.0, 2.0),
            (4, 0.99, 12.5),
            (4, 1.63, 3.49),
            (1, 0.2, 0.3),
            (18, 5.0, 2.0),
        ] {
            let (cfg, dc, poles) = setup(n, g, w);
            for &mu in &poles.coupled_poles {
                let r = pole_residual(&dc, &cfg, mu);
                assert!(r < 1e-10, "residual {r} at (N={n}, gamma0={g}, omega_d={w})");
                assert!(mu.re > 0.0, "pole {mu} not damped");
            }
        }
    }

    #[test]
    fn zero_coupling_factorization() {
        // Omega_N = 0 removes the coupling term: roots are omega_D and +/- i.
        let roots = cubic_roots(2.0, 0.0);
        let mut sorted = roots.to_vec();
        sorted.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        assert_relative_eq!(sorted[0].re, 0.0, epsilon = 1e-12);
        assert_relative_eq!(sorted[0].im, -1.0, epsilon = 1e-12);
        assert_relative_eq!(sorted[1].im, 1.0, epsilon = 1e-12);
        assert_relative_eq!(sorted[2].re, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn conjugate_pair_structure() {
        for &(g, w) in &[(5.0, 2.0), (0.528, 7.344), (1.571, 0.922), (0.1, 0.1)] {
            let (_, _, poles) = setup(6, g, w);
            let non_real: Vec<_> = poles
                .coupled_poles
                .iter()
                .filter(|z| z.im != 0.0)
                .collect();
            assert!(non_real.len() == 0 || non_real.len() == 2);
            if non_real.len() == 2 {
                assert_eq!(*non_real[0], non_real[1].conj());
            }
        }
    }

    #[test]
    fn a_boundary_conditions() {
        let (_, dc, poles) = setup(6, 5.0, 2.0);
        assert!(eval_a(&poles, 0.0, 0).abs() < 1e-10, "A(0) != 0");
        assert_relative_eq!(eval_a(&poles, 0.0, 1), 1.0 / dc.alpha_bar_sq, epsilon = 1e-10);
        assert_relative_eq!(eval_a(&poles, 0.0, 1), 1.0 / 6.0, epsilon = 1e-10);
        assert!(eval_a(&poles, 0.0, 2).abs() < 1e-10, "A''(0) != 0");
    }

    #[test]
    fn a_decays() {
        let (_, _, poles) = setup(6, 5.0, 2.0);
        let min_re = poles
            .coupled_poles
            .iter()
            .map(|mu| mu.re)
            .fold(f64::INFINITY, f64::min);
        let t = 10.0 / min_re;
        assert!(eval_a(&poles, t, 0).abs() < 1e-4);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (_, _, poles) = setup(6, 5.0, 2.0);
        let h = 1e-4;
        for order in 1..=3usize {
            for &t in &[0.05, 0.2, 0.5, 1.0] {
                // 5-point central stencil of the (order-1) derivative.
                let f = |x: f64| eval_a(&poles, x, order - 1);
                let fd = (-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h))
                    / (12.0 * h);
                let exact = eval_a(&poles, t, order);
                assert_relative_eq!(fd, exact, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn eval_a_all_consistent() {
        let (_, _, poles) = setup(6, 5.0, 2.0);
        let all = eval_a_all(&poles, 0.37);
        for (k, &v) in all.iter().enumerate() {
            assert_relative_eq!(v, eval_a(&poles, 0.37, k), max_relative = 1e-14);
        }
    }

    #[test]
    fn chi_boundary_conditions() {
        let (cfg, dc, poles) = setup(6, 5.0, 2.0);
        for l in 1..=6 {
            for lp in 1..=6 {
                assert!(eval_chi(&poles, &cfg, &dc, l, lp, 0.0).unwrap().abs() < 1e-12);
            }
        }
        // d/dt chi_{ll'}(0) = delta_{ll'}, one-sided stencil since t >= 0:
        // f'(0) ~ (-3 f(0) + 4 f(h) - f(2h)) / (2h) with f(0) = 0.
        let h = 1e-5;
        for (l, lp, expect) in [(1, 1, 1.0), (1, 2, 0.0), (3, 5, 0.0)] {
            let d = (4.0 * eval_chi(&poles, &cfg, &dc, l, lp, h).unwrap()
                - eval_chi(&poles, &cfg, &dc, l, lp, 2.0 * h).unwrap())
                / (2.0 * h);
            assert_relative_eq!(d, expect, epsilon = 1e-6);
        }
    }

    #[test]
    fn chi_reduces_to_free_oscillator_at_weak_coupling() {
        let cfg = SystemConfig::uniform(6, 1e-4, 2.0, 0.5, 0.5).unwrap();
        let dc = derive_constants(&cfg).unwrap();
        let poles = solve_poles(&dc, &cfg).unwrap();
        for &t in &[0.3, 1.0, 2.5] {
            let chi = eval_chi(&poles, &cfg, &dc, 2, 2, t).unwrap();
            assert_relative_eq!(chi, t.sin(), epsilon = 2e-3);
        }
    }

    #[test]
    fn chi_index_out_of_range() {
        let (cfg, dc, poles) = setup(6, 5.0, 2.0);
        assert!(eval_chi(&poles, &cfg, &dc, 0, 1, 0.1).is_err());
        assert!(eval_chi(&poles, &cfg, &dc, 1, 7, 0.1).is_err());
    }
}
