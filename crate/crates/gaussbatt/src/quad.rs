//! Adaptive Gauss-Kronrod quadrature (G7/K15 pair) for complex
//! vector-valued integrands.
//!
//! The thermal covariance integrals share one smooth integrand with several
//! moment weightings, so the rule integrates a small vector of components in
//! one pass and subdivides wherever the worst component error sits. Interval
//! selection and the final summation are fully deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 15-point Kronrod abscissae on [-1, 1] (positive half, descending).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// 7-point Gauss weights paired with the odd Kronrod abscissae.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15-point Kronrod weights.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Tolerances and budget of one adaptive integration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct QuadSettings {
    /// Relative tolerance per component.
    pub rel_tol: f64,
    /// Absolute tolerance per component.
    pub abs_tol: f64,
    /// Subdivision budget per integral.
    pub max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

/// Result of one adaptive integration.
#[derive(Debug, Clone)]
pub struct QuadResult<const K: usize> {
    /// Component integrals.
    pub value: [Complex64; K],
    /// Estimated absolute error per component.
    pub error: [f64; K],
    /// Number of intervals in the final partition.
    pub intervals: usize,
}

struct Panel<const K: usize> {
    priority: f64,
    seq: u64,
    a: f64,
    b: f64,
    value: [Complex64; K],
    error: [f64; K],
}

impl<const K: usize> Panel<K> {
    fn with_priority(mut self) -> Self {
        self.priority = self.error.iter().copied().fold(0.0_f64, f64::max);
        self
    }
}

impl<const K: usize> PartialEq for Panel<K> {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority && self.seq == other.seq
    }
}
impl<const K: usize> Eq for Panel<K> {}
impl<const K: usize> PartialOrd for Panel<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Panel<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then(other.seq.cmp(&self.seq))
    }
}

/// QUADPACK-style error rescaling: sharpen the raw |K15 - G7| difference
/// against the oscillation measure resasc.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// Apply the G7/K15 pair to one interval.
fn qk15<const K: usize, F>(f: &F, a: f64, b: f64, seq: u64) -> Panel<K>
where
    F: Fn(f64) -> [Complex64; K],
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let mut fv = [[Complex64::new(0.0, 0.0); 15]; K];
    for (j, &x) in XGK.iter().enumerate() {
        let flo = f(center - half * x);
        let fhi = if j == 7 { flo } else { f(center + half * x) };
        for k in 0..K {
            fv[k][j] = flo[k];
            fv[k][14 - j] = fhi[k];
        }
    }

    let mut value = [Complex64::new(0.0, 0.0); K];
    let mut error = [0.0_f64; K];
    for k in 0..K {
        let mut kronrod = WGK[7] * fv[k][7];
        let mut gauss = WG[3] * fv[k][7];
        let mut res_abs = WGK[7] * fv[k][7].norm();
        for j in 0..7 {
            let pair = fv[k][j] + fv[k][14 - j];
            kronrod += WGK[j] * pair;
            res_abs += WGK[j] * (fv[k][j].norm() + fv[k][14 - j].norm());
            if j % 2 == 1 {
                gauss += WG[j / 2] * pair;
            }
        }
        let mean = kronrod * 0.5;
        let mut res_asc = WGK[7] * (fv[k][7] - mean).norm();
        for j in 0..7 {
            res_asc += WGK[j] * ((fv[k][j] - mean).norm() + (fv[k][14 - j] - mean).norm());
        }
        let raw_err = ((kronrod - gauss) * half).norm();
        value[k] = kronrod * half;
        error[k] = rescale_error(raw_err, res_abs * half.abs(), res_asc * half.abs());
    }
    Panel { priority: 0.0, seq, a, b, value, error }
}

/// Integrate `f` over [a, b], refining until every component satisfies
/// `err_k <= max(abs_tol, rel_tol * |I_k|)` or the budget runs out.
pub fn integrate<const K: usize, F>(
    f: F,
    a: f64,
    b: f64,
    settings: &QuadSettings,
) -> Result<QuadResult<K>>
where
    F: Fn(f64) -> [Complex64; K],
{
    assert!(b >= a, "inverted integration interval [{a}, {b}]");
    if a == b {
        return Ok(QuadResult {
            value: [Complex64::new(0.0, 0.0); K],
            error: [0.0; K],
            intervals: 0,
        });
    }

    let mut seq: u64 = 0;
    let mut heap: BinaryHeap<Panel<K>> = BinaryHeap::new();
    let mut total = [Complex64::new(0.0, 0.0); K];
    let mut total_err = [0.0_f64; K];

    let add = |p: Panel<K>, heap: &mut BinaryHeap<Panel<K>>,
                   total: &mut [Complex64; K], total_err: &mut [f64; K]| {
        for k in 0..K {
            total[k] += p.value[k];
            total_err[k] += p.error[k];
        }
        heap.push(p.with_priority());
    };

    let first = qk15(&f, a, b, seq);
    seq += 1;
    add(first, &mut heap, &mut total, &mut total_err);

    loop {
        let converged = (0..K)
            .all(|k| total_err[k] <= settings.abs_tol.max(settings.rel_tol * total[k].norm()));
        if converged {
            return Ok(finish(heap));
        }
        if heap.len() >= settings.max_intervals {
            let worst = total_err.iter().copied().fold(0.0_f64, f64::max);
            return Err(Error::QuadratureFailure { error: worst, intervals: heap.len() });
        }

        let p = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (p.a + p.b);
        if p.priority == 0.0 || mid <= p.a || mid >= p.b {
            // Nothing refinable remains (max-heap), yet not converged.
            let worst = total_err.iter().copied().fold(0.0_f64, f64::max);
            return Err(Error::QuadratureFailure { error: worst, intervals: heap.len() + 1 });
        }
        for k in 0..K {
            total[k] -= p.value[k];
            total_err[k] -= p.error[k];
        }
        let left = qk15(&f, p.a, mid, seq);
        seq += 1;
        let right = qk15(&f, mid, p.b, seq);
        seq += 1;
        add(left, &mut heap, &mut total, &mut total_err);
        add(right, &mut heap, &mut total, &mut total_err);
    }
}

/// Sum the final partition ordered by left endpoint (deterministic, with
/// compensated summation per component).
fn finish<const K: usize>(heap: BinaryHeap<Panel<K>>) -> QuadResult<K> {
    let mut live = heap.into_vec();
    live.sort_by(|x, y| x.a.total_cmp(&y.a));
    let intervals = live.len();
    let mut value = [Complex64::new(0.0, 0.0); K];
    let mut error = [0.0_f64; K];
    let mut comp = [Complex64::new(0.0, 0.0); K];
    for p in &live {
        for k in 0..K {
            // Kahan step.
            let y = p.value[k] - comp[k];
            let t = value[k] + y;
            comp[k] = (t - value[k]) - y;
            value[k] = t;
            error[k] += p.error[k];
        }
    }
    QuadResult { value, error, intervals }
}
