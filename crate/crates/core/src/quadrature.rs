//! Adaptive Gauss–Kronrod (10/21-point) quadrature with a QUADPACK-style
//! error estimate.
//!
//! Every run is deterministic: the interval with the largest error estimate is
//! bisected first (ties broken by position), nodes of a rule are evaluated in a
//! fixed order, and the final sum runs over intervals sorted by their left
//! endpoint. With `parallel` set, the 42 nodes of a bisection step are
//! evaluated on the rayon pool; results are collected in node order, so the
//! answer is bit-identical to a sequential run.

#![allow(clippy::excessive_precision)]

use rayon::prelude::*;

use crate::error::{HwError, Result};

// Kronrod abscissae on [0, 1]; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const NODES_PER_RULE: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Budget of integrand evaluations.
    pub max_nodes: usize,
    pub parallel: bool,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_nodes: 200_000,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub nodes: usize,
    pub intervals: usize,
}

impl QuadResult {
    pub fn rel_error(&self) -> f64 {
        if self.value == 0.0 {
            f64::INFINITY
        } else {
            self.abs_error / self.value.abs()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    splittable: bool,
}

fn rule_nodes(a: f64, b: f64) -> [f64; NODES_PER_RULE] {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut x = [center; NODES_PER_RULE];
    for j in 0..10 {
        x[2 * j] = center - half * XGK[j];
        x[2 * j + 1] = center + half * XGK[j];
    }
    x
}

fn apply_rule(a: f64, b: f64, f: &[f64]) -> Segment {
    let half = 0.5 * (b - a);
    let f_center = f[20];
    let mut kronrod = WGK[10] * f_center;
    let mut gauss = 0.0;
    let mut res_abs = kronrod.abs();
    for j in 0..10 {
        let pair = f[2 * j] + f[2 * j + 1];
        kronrod += WGK[j] * pair;
        res_abs += WGK[j] * (f[2 * j].abs() + f[2 * j + 1].abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((f[2 * j] - mean).abs() + (f[2 * j + 1] - mean).abs());
    }
    let scale = half.abs();
    let value = kronrod * half;
    let error = rescale_error((kronrod - gauss) * half, res_abs * scale, res_asc * scale);
    // at the round-off floor, bisection cannot lower the estimate any more
    let floor = 50.0 * f64::EPSILON * res_abs * scale;
    Segment {
        a,
        b,
        value,
        error,
        splittable: error > floor,
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let ratio = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if ratio < 1.0 { res_asc * ratio } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn evaluate<F>(f: &F, points: &[f64], parallel: bool) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let values: Vec<Result<f64>> = if parallel {
        points.par_iter().map(|&x| f(x)).collect()
    } else {
        points.iter().map(|&x| f(x)).collect()
    };
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(HwError::Domain(format!(
            "integrand is not finite ({v}) at x = {}",
            points[i]
        )));
    }
    Ok(values)
}

fn evaluate_segments<F>(f: &F, bounds: &[(f64, f64)], parallel: bool) -> Result<Vec<Segment>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let points: Vec<f64> = bounds
        .iter()
        .flat_map(|&(a, b)| rule_nodes(a, b))
        .collect();
    let values = evaluate(f, &points, parallel)?;
    Ok(bounds
        .iter()
        .zip(values.chunks(NODES_PER_RULE))
        .map(|(&(a, b), fv)| apply_rule(a, b, fv))
        .collect())
}

fn totals(segments: &[Segment]) -> (f64, f64) {
    let mut ordered: Vec<&Segment> = segments.iter().collect();
    ordered.sort_by(|p, q| p.a.total_cmp(&q.a));
    ordered
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
}

/// Integrates `f` over the consecutive intervals defined by `breakpoints`
/// (at least two, strictly increasing).
///
/// Stops when the summed error estimate is below
/// `max(abs_tol, rel_tol * |value|)`. Fails with
/// [`HwError::ToleranceNotMet`] when the node budget runs out first, or when
/// no interval can be bisected further (every remaining estimate sits at the
/// round-off floor, or the intervals have shrunk to a few ulps).
pub fn integrate_breakpoints<F>(f: F, breakpoints: &[f64], opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if breakpoints.len() < 2 {
        return Err(HwError::InvalidArgument(
            "quadrature needs at least two breakpoints".into(),
        ));
    }
    if breakpoints.iter().any(|x| !x.is_finite())
        || breakpoints.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(HwError::InvalidArgument(format!(
            "breakpoints must be finite and strictly increasing: {breakpoints:?}"
        )));
    }
    if !(opts.rel_tol >= 0.0 && opts.abs_tol >= 0.0) {
        return Err(HwError::InvalidArgument("tolerances must be non-negative".into()));
    }

    let bounds: Vec<(f64, f64)> = breakpoints.windows(2).map(|w| (w[0], w[1])).collect();
    let mut nodes = bounds.len() * NODES_PER_RULE;
    let mut segments = evaluate_segments(&f, &bounds, opts.parallel)?;

    loop {
        let (value, error) = totals(&segments);
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return Ok(QuadResult {
                value,
                abs_error: error,
                nodes,
                intervals: segments.len(),
            });
        }

        let worst = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.splittable)
            .max_by(|(_, p), (_, q)| p.error.total_cmp(&q.error).then(q.a.total_cmp(&p.a)))
            .map(|(i, _)| i);
        let exhausted = nodes + 2 * NODES_PER_RULE > opts.max_nodes;
        let Some(worst) = worst.filter(|_| !exhausted) else {
            let rel_error = if value == 0.0 { f64::INFINITY } else { error / value.abs() };
            return Err(HwError::ToleranceNotMet {
                estimate: value,
                error,
                rel_error,
                rel_tol: opts.rel_tol,
                nodes,
                log_bound: (value.abs() + error).ln(),
            });
        };

        let Segment { a, b, .. } = segments[worst];
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) || (b - a) <= 1e3 * f64::EPSILON * a.abs().max(b.abs()) {
            segments[worst].splittable = false;
            continue;
        }
        let halves = evaluate_segments(&f, &[(a, mid), (mid, b)], opts.parallel)?;
        nodes += 2 * NODES_PER_RULE;
        segments.swap_remove(worst);
        segments.extend(halves);
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    integrate_breakpoints(f, &[a, b], opts)
}
