//! Estimation of the normal conformal holonomy algebra: curvature spans,
//! parallel transport around seeded loops with matrix logarithms, and the
//! invariant-structure analysis of the resulting span (fixed vectors with
//! causal type, fixed tractor forms, invariant subspaces and their metric
//! type).
//!
//! Everything here produces lower bounds: a reported rank means "the
//! holonomy algebra contains a subspace of at least this dimension".

use crate::chart::MetricSpec;
use crate::error::{Error, Result};
use crate::exterior::{sort_with_sign, FormBasis, FormValue};
use crate::tractor::{
    algebra_action, coord_to_frame_matrix, model_context, tractor_curvature,
    tractor_metric, tractor_metric_coord, PointCtx, TractorEndo, TractorForm,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Relative singular-value threshold for rank decisions.
pub const REL_SV: f64 = 1e-8;
/// Absolute floor separating integrator noise from genuine curvature.
pub const ABS_FLOOR: f64 = 1e-7;
/// Relative residual below which a vector counts as fixed.
pub const FIXED_TOL: f64 = 1e-7;

// ---------------------------------------------------------------------------
// Span utilities
// ---------------------------------------------------------------------------

/// Rank of the linear span of a set of matrices.
pub fn span_rank(ops: &[DMatrix<f64>]) -> usize {
    span_svd(ops).1.len()
}

/// Orthonormal basis (Frobenius) of the span plus the retained singular
/// values. Matrices are flattened row-major into the stacked system.
pub fn span_svd(ops: &[DMatrix<f64>]) -> (Vec<DMatrix<f64>>, Vec<f64>) {
    if ops.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let rows = ops.len();
    let cols = ops[0].len();
    let dim = ops[0].nrows();
    let stacked = DMatrix::from_fn(rows, cols, |k, lin| ops[k][(lin / dim, lin % dim)]);
    let svd = stacked.svd(false, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = (REL_SV * smax).max(ABS_FLOOR);
    let vt = svd.v_t.expect("requested V^T");
    let mut basis = Vec::new();
    let mut kept = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            let row = vt.row(k);
            let m = DMatrix::from_fn(dim, dim, |i, j| row[i * dim + j]);
            basis.push(m);
            kept.push(s);
        }
    }
    (basis, kept)
}

// ---------------------------------------------------------------------------
// Curvature span
// ---------------------------------------------------------------------------

pub struct SpanData {
    pub ops: Vec<DMatrix<f64>>,
    pub basis: Vec<DMatrix<f64>>,
    pub singular_values: Vec<f64>,
}

impl SpanData {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

/// Span of the degree-1 tractor curvature operators over the samples and all
/// coordinate pairs, in the frame basis.
pub fn curvature_span(
    spec: &MetricSpec,
    samples: &[Vec<f64>],
    metric_order: usize,
) -> Result<SpanData> {
    let n = spec.dim;
    let per: Vec<Vec<DMatrix<f64>>> = samples
        .par_iter()
        .map(|pt| {
            let ctx = PointCtx::new(spec, pt, metric_order)?;
            let mut ops = Vec::new();
            for x in 0..n {
                for y in (x + 1)..n {
                    let op = tractor_curvature(&ctx, x, y)?;
                    ops.push(op.matrix(&ctx).m);
                }
            }
            Ok(ops)
        })
        .collect::<Result<_>>()?;
    let ops: Vec<DMatrix<f64>> = per.into_iter().flatten().collect();
    let (basis, singular_values) = span_svd(&ops);
    Ok(SpanData {
        ops,
        basis,
        singular_values,
    })
}

// ---------------------------------------------------------------------------
// Loop transport
// ---------------------------------------------------------------------------

/// Piecewise-linear path through chart points.
#[derive(Clone, Debug)]
pub struct PiecewisePath {
    pub points: Vec<Vec<f64>>,
}

impl PiecewisePath {
    pub fn closed(points: Vec<Vec<f64>>) -> PiecewisePath {
        PiecewisePath { points }
    }

    /// Axis-aligned rectangle at `base` in the (i, j) coordinate plane.
    pub fn rectangle(base: &[f64], i: usize, j: usize, a: f64, b: f64) -> PiecewisePath {
        let mut p1 = base.to_vec();
        p1[i] += a;
        let mut p2 = p1.clone();
        p2[j] += b;
        let mut p3 = base.to_vec();
        p3[j] += b;
        PiecewisePath {
            points: vec![base.to_vec(), p1, p2, p3, base.to_vec()],
        }
    }
}

/// Parallel transport of the degree-1 tractor bundle around a path, in the
/// coordinate splitting. Classic RK4 on v' = −Γ^{NC}(γ') v with a metric
/// re-projection every 16 steps.
pub fn loop_transport(
    spec: &MetricSpec,
    path: &PiecewisePath,
    steps_per_segment: usize,
) -> Result<TractorEndo> {
    let n = spec.dim;
    let dim = n + 2;
    let conn_at = |pt: &[f64]| -> Result<Vec<DMatrix<f64>>> {
        if !spec.admissible(pt) {
            return Err(Error::PathOutOfDomain(format!("{pt:?}")));
        }
        crate::tractor::conn_matrices_fast(spec, pt)
    };
    let gamma_times = |mats: &[DMatrix<f64>], x: &[f64]| -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        for (a, xa) in x.iter().enumerate() {
            if *xa != 0.0 {
                m += &mats[a] * *xa;
            }
        }
        m
    };
    let base = &path.points[0];
    {
        // validate signature once; transport evaluations skip the check
        let _ = spec.metric_at(base, 0)?;
    }
    let g0 = {
        let cp = spec.metric_at_unchecked(base, 0)?;
        tractor_metric_coord(&cp)
    };
    let g0_inv = g0.clone().try_inverse().expect("tractor metric invertible");

    let mut t = DMatrix::identity(dim, dim);
    let mut step_count = 0usize;
    for seg in path.points.windows(2) {
        let (p, q) = (&seg[0], &seg[1]);
        let dir: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
        if dir.iter().all(|d| d.abs() < 1e-300) {
            continue;
        }
        let m = steps_per_segment.max(4);
        let h = 1.0 / m as f64;
        // the segment endpoint of step k is the start of step k+1
        let at = |tau: f64| -> Vec<f64> {
            p.iter().zip(&dir).map(|(pi, di)| pi + tau * di).collect()
        };
        let mut mats_start = gamma_times(&conn_at(&at(0.0))?, &dir);
        for k in 0..m {
            let t0 = k as f64 * h;
            let mats_mid = gamma_times(&conn_at(&at(t0 + 0.5 * h))?, &dir);
            let mats_end = gamma_times(&conn_at(&at(t0 + h))?, &dir);
            let k1 = -(&mats_start * &t);
            let k2 = -(&mats_mid * &(&t + &k1 * (0.5 * h)));
            let k3 = -(&mats_mid * &(&t + &k2 * (0.5 * h)));
            let k4 = -(&mats_end * &(&t + &k3 * h));
            t += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            mats_start = mats_end;
            step_count += 1;
            if step_count % 16 == 0 {
                let gt = {
                    let cp = spec.metric_at_unchecked(&at(t0 + h), 0)?;
                    tractor_metric_coord(&cp)
                };
                let e = t.transpose() * &gt * &t - &g0;
                t = &t * (DMatrix::identity(dim, dim) - &g0_inv * e * 0.5);
            }
        }
    }
    // express the loop element in the frame basis at the base point
    let ctx = PointCtx::new(spec, base, 2)?;
    let f = coord_to_frame_matrix(&ctx.frame);
    let f_inv = f.clone().try_inverse().expect("frame change invertible");
    Ok(TractorEndo { m: &f * t * f_inv })
}

/// Matrix logarithm by inverse scaling-and-squaring: repeated Denman-Beavers
/// square roots until ‖T − I‖ is small, then the log series.
pub fn matrix_log(t: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let dim = t.nrows();
    let mut a = t.clone();
    let mut k = 0u32;
    while (&a - DMatrix::<f64>::identity(dim, dim)).norm() > 0.3 {
        a = matrix_sqrt(&a)?;
        k += 1;
        if k > 40 {
            return None;
        }
    }
    let e = &a - DMatrix::<f64>::identity(dim, dim);
    let mut term = e.clone();
    let mut log = DMatrix::zeros(dim, dim);
    for j in 1..=40 {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        log += &term * (sign / j as f64);
        term = &term * &e;
        if term.norm() < 1e-18 {
            break;
        }
    }
    Some(log * 2f64.powi(k as i32))
}

fn matrix_sqrt(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let dim = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(dim, dim);
    for _ in 0..60 {
        let yi = y.clone().try_inverse()?;
        let zi = z.clone().try_inverse()?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta < 1e-14 {
            break;
        }
    }
    Some(y)
}

// ---------------------------------------------------------------------------
// Holonomy estimation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct HolonomyConfig {
    pub loops: usize,
    pub steps_per_segment: usize,
    pub radius: f64,
    pub seed: u64,
    pub curvature_samples: usize,
    pub metric_order: usize,
}

impl Default for HolonomyConfig {
    fn default() -> Self {
        HolonomyConfig {
            loops: 48,
            steps_per_segment: 24,
            radius: 0.05,
            seed: 0,
            curvature_samples: 30,
            metric_order: 4,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedVector {
    pub components: Vec<f64>,
    /// tractor norm ⟨v,v⟩
    pub norm: f64,
    pub causal: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubspaceFinding {
    pub label: String,
    pub dim: usize,
    /// "non-degenerate" | "degenerate" | "totally isotropic"
    pub kind: String,
    pub invariant: bool,
    /// every span element maps the subspace to zero
    pub annihilated: bool,
    /// invariant but the induced volume is not fixed (nonzero trace)
    pub dilated: bool,
    pub basis: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedFormFinding {
    pub degree: usize,
    pub count: usize,
    /// Plücker residual per fixed form (tractor-space decomposability)
    pub plucker: Vec<f64>,
    pub decomposable: Vec<bool>,
    /// coefficients over the tractor basis combos, one row per fixed form
    pub coefficients: Vec<Vec<f64>>,
}

#[derive(Serialize)]
pub struct HolonomyReport {
    pub label: String,
    pub n: usize,
    pub signature: [usize; 2],
    /// rank of the spanned algebra; "rank >= k" semantics
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub basis: Vec<Vec<Vec<f64>>>,
    pub skew_defect_max: f64,
    pub fixed_vectors: Vec<FixedVector>,
    pub fixed_vector_space_dim: usize,
    pub invariant_subspaces: Vec<SubspaceFinding>,
    pub fixed_forms: Vec<FixedFormFinding>,
    pub classification: String,
    pub provenance: Provenance,
    #[serde(skip)]
    pub basis_matrices: Vec<DMatrix<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub curvature_samples: usize,
    pub loops_used: usize,
    pub loop_radius: f64,
    pub steps_per_segment: usize,
    pub seed: u64,
}

/// Estimate the holonomy algebra at a base point: curvature span over
/// samples merged with logarithms of random rectangle and lasso loop
/// transports.
pub fn estimate_holonomy(
    spec: &MetricSpec,
    basepoint: &[f64],
    cfg: &HolonomyConfig,
) -> Result<HolonomyReport> {
    if !spec.admissible(basepoint) {
        return Err(Error::GuardViolation);
    }
    let n = spec.dim;
    let samples = spec.sample_points(cfg.curvature_samples, cfg.seed);
    let curv_span = curvature_span(spec, &samples, cfg.metric_order)?;

    // seeded loops
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut loop_specs: Vec<PiecewisePath> = Vec::new();
    let mut attempts = 0;
    while loop_specs.len() < cfg.loops && attempts < cfg.loops * 20 {
        attempts += 1;
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n);
        while j == i {
            j = rng.gen_range(0..n);
        }
        let a = cfg.radius * rng.gen_range(0.5..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let b = cfg.radius * rng.gen_range(0.5..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let lasso = rng.gen_bool(0.5);
        let path = if lasso {
            // go out along a random offset, loop a rectangle there, return
            let mut out = basepoint.to_vec();
            for x in out.iter_mut() {
                *x += cfg.radius * rng.gen_range(-1.0..1.0);
            }
            let rect = PiecewisePath::rectangle(&out, i, j, a, b);
            let mut points = vec![basepoint.to_vec()];
            points.extend(rect.points);
            points.push(basepoint.to_vec());
            PiecewisePath { points }
        } else {
            PiecewisePath::rectangle(basepoint, i, j, a, b)
        };
        if path.points.iter().all(|p| spec.admissible(p)) {
            loop_specs.push(path);
        }
    }

    let eps_chart = spec.eps();
    let g_std = tractor_metric(&eps_chart);
    let g_std_inv = g_std.clone().try_inverse().expect("tractor metric invertible");
    let logs: Vec<Option<DMatrix<f64>>> = loop_specs
        .par_iter()
        .map(|path| {
            loop_transport(spec, path, cfg.steps_per_segment)
                .ok()
                .and_then(|t| matrix_log(&t.m))
                .map(|a| {
                    // project onto the skew part w.r.t. the tractor metric
                    (&a - &g_std_inv * a.transpose() * &g_std) * 0.5
                })
        })
        .collect();
    let loops_used = logs.iter().filter(|l| l.is_some()).count();

    let mut ops = curv_span.ops.clone();
    ops.extend(logs.into_iter().flatten());
    let (basis, singular_values) = span_svd(&ops);

    let eps = spec.eps();
    let skew_defect_max = basis
        .iter()
        .map(|m| TractorEndo { m: m.clone() }.skew_defect(&eps))
        .fold(0.0, f64::max);

    let provenance = Provenance {
        curvature_samples: samples.len(),
        loops_used,
        loop_radius: cfg.radius,
        steps_per_segment: cfg.steps_per_segment,
        seed: cfg.seed,
    };

    Ok(assemble_report(
        spec,
        basis,
        singular_values,
        skew_defect_max,
        provenance,
    ))
}

/// Build a report from the curvature span alone (no loops).
pub fn curvature_span_report(
    spec: &MetricSpec,
    samples: &[Vec<f64>],
    metric_order: usize,
) -> Result<HolonomyReport> {
    let span = curvature_span(spec, samples, metric_order)?;
    let eps = spec.eps();
    let skew = span
        .basis
        .iter()
        .map(|m| TractorEndo { m: m.clone() }.skew_defect(&eps))
        .fold(0.0, f64::max);
    let provenance = Provenance {
        curvature_samples: samples.len(),
        loops_used: 0,
        loop_radius: 0.0,
        steps_per_segment: 0,
        seed: 0,
    };
    Ok(assemble_report(
        spec,
        span.basis,
        span.singular_values,
        skew,
        provenance,
    ))
}

fn assemble_report(
    spec: &MetricSpec,
    basis: Vec<DMatrix<f64>>,
    singular_values: Vec<f64>,
    skew_defect_max: f64,
    provenance: Provenance,
) -> HolonomyReport {
    let n = spec.dim;
    let rank = basis.len();
    HolonomyReport {
        label: spec.label.clone(),
        n,
        signature: [spec.r, spec.s],
        rank,
        singular_values,
        basis: basis
            .iter()
            .map(|m| {
                (0..n + 2)
                    .map(|i| (0..n + 2).map(|j| m[(i, j)]).collect())
                    .collect()
            })
            .collect(),
        skew_defect_max,
        fixed_vectors: Vec::new(),
        fixed_vector_space_dim: 0,
        invariant_subspaces: Vec::new(),
        fixed_forms: Vec::new(),
        classification: String::new(),
        provenance,
        basis_matrices: basis,
    }
}

// ---------------------------------------------------------------------------
// Invariant structure
// ---------------------------------------------------------------------------

fn causal_of(norm: f64, tol: f64) -> String {
    if norm < -tol {
        "timelike".into()
    } else if norm > tol {
        "spacelike".into()
    } else {
        "null".into()
    }
}

/// Null space of the stacked span (common kernel = fixed vectors).
fn common_kernel(basis: &[DMatrix<f64>], dim: usize) -> Vec<DVector<f64>> {
    if basis.is_empty() {
        return (0..dim)
            .map(|i| DVector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
    }
    let rows = basis.len() * dim;
    let stacked = DMatrix::from_fn(rows, dim, |r, c| {
        let (which, row) = (r / dim, r % dim);
        basis[which][(row, c)]
    });
    let svd = stacked.svd(false, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let vt = svd.v_t.expect("v_t");
    let mut out = Vec::new();
    for k in 0..dim {
        let s = if k < svd.singular_values.len() {
            svd.singular_values[k]
        } else {
            0.0
        };
        if s <= FIXED_TOL * smax.max(1.0) {
            out.push(DVector::from_fn(dim, |i, _| vt[(k, i)]));
        }
    }
    out
}

/// Column space of the span elements (the subspace every element maps into).
/// The cutoff 1e−6·σmax keeps integrator noise in loop-derived elements out
/// of the detected subspace.
fn image_space(basis: &[DMatrix<f64>], dim: usize) -> Vec<DVector<f64>> {
    if basis.is_empty() {
        return Vec::new();
    }
    let cols = basis.len() * dim;
    let stacked = DMatrix::from_fn(dim, cols, |r, c| {
        let (which, col) = (c / dim, c % dim);
        basis[which][(r, col)]
    });
    let svd = stacked.clone().svd(true, false);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let u = svd.u.expect("u");
    let mut out = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-6 * smax.max(1.0) {
            out.push(DVector::from_fn(dim, |i, _| u[(i, k)]));
        }
    }
    out
}

fn subspace_kind(basis: &[DVector<f64>], g: &DMatrix<f64>, tol: f64) -> String {
    if basis.is_empty() {
        return "trivial".into();
    }
    let k = basis.len();
    let gram = DMatrix::from_fn(k, k, |i, j| (basis[i].transpose() * g * &basis[j])[(0, 0)]);
    let eig = gram.symmetric_eigen();
    let max_abs = eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let min_abs = eig
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .fold(f64::INFINITY, f64::min);
    if max_abs <= tol {
        "totally isotropic".into()
    } else if min_abs > tol {
        "non-degenerate".into()
    } else {
        "degenerate".into()
    }
}

fn analyze_subspace(
    label: &str,
    basis_vecs: &[DVector<f64>],
    span: &[DMatrix<f64>],
    g: &DMatrix<f64>,
) -> SubspaceFinding {
    let dim = basis_vecs.len();
    let tol = 1e-6;
    let kind = subspace_kind(basis_vecs, g, tol);
    let (mut invariant, mut annihilated) = (true, true);
    let mut dilated = false;
    if dim > 0 && !span.is_empty() {
        let full = basis_vecs[0].len();
        let u = DMatrix::from_fn(full, dim, |i, j| basis_vecs[j][i]);
        let proj = &u * u.transpose(); // orthonormal columns from SVD
        for a in span {
            let au = a * &u;
            let outside = (&au - &proj * &au).norm();
            if outside > tol * (1.0 + a.norm()) {
                invariant = false;
            }
            if au.norm() > tol * (1.0 + a.norm()) {
                annihilated = false;
            }
            // induced trace on the subspace
            let restricted = u.transpose() * &au;
            if restricted.trace().abs() > tol * (1.0 + a.norm()) {
                dilated = true;
            }
        }
        if !invariant {
            dilated = false;
        }
    }
    SubspaceFinding {
        label: label.into(),
        dim,
        kind,
        invariant,
        annihilated,
        dilated,
        basis: basis_vecs.iter().map(|v| v.iter().copied().collect()).collect(),
    }
}

/// Fixed tractor (p+1)-forms of the span, found through the algebra action
/// on the model space.
fn fixed_forms_of_degree(
    span: &[DMatrix<f64>],
    r: usize,
    s: usize,
    degree: usize,
) -> FixedFormFinding {
    let n = r + s;
    let (model_cp, model_frame) = model_context(r, s);
    let p = degree as i32 - 1;

    // quadruple basis of Λ^{degree} of the tractor space
    let mut basis_forms: Vec<TractorForm> = Vec::new();
    let push_block = |forms: &mut Vec<TractorForm>, which: usize, combo_len: i32| {
        let len = if combo_len >= 0 && combo_len <= n as i32 {
            crate::exterior::binomial(n, combo_len as usize)
        } else {
            0
        };
        for idx in 0..len {
            let mut tf = TractorForm::zero_form(n, p);
            let слot = match which {
                0 => &mut tf.minus,
                1 => &mut tf.zero,
                2 => &mut tf.cross,
                _ => &mut tf.plus,
            };
            слot.c[idx] = 1.0;
            forms.push(tf);
        }
    };
    push_block(&mut basis_forms, 0, p);
    push_block(&mut basis_forms, 1, p + 1);
    push_block(&mut basis_forms, 2, p - 1);
    push_block(&mut basis_forms, 3, p);
    let d = basis_forms.len();
    if d == 0 {
        return FixedFormFinding {
            degree,
            count: 0,
            plucker: vec![],
            decomposable: vec![],
            coefficients: vec![],
        };
    }

    let flatten = |tf: &TractorForm| -> DVector<f64> {
        let mut v = Vec::with_capacity(d);
        v.extend(tf.minus.c.iter());
        v.extend(tf.zero.c.iter());
        v.extend(tf.cross.c.iter());
        v.extend(tf.plus.c.iter());
        DVector::from_vec(v)
    };

    if span.is_empty() {
        // trivial holonomy: everything is fixed
        return FixedFormFinding {
            degree,
            count: d,
            plucker: vec![0.0; 0],
            decomposable: vec![],
            coefficients: vec![],
        };
    }

    // stack the action matrices
    let mut stacked = DMatrix::zeros(span.len() * d, d);
    for (which, a) in span.iter().enumerate() {
        let endo = TractorEndo { m: a.clone() };
        for (col, bf) in basis_forms.iter().enumerate() {
            let image = algebra_action(&endo, bf, &model_frame, &model_cp);
            let img = flatten(&image);
            for row in 0..d {
                stacked[(which * d + row, col)] = img[row];
            }
        }
    }
    let svd = stacked.svd(false, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let vt = svd.v_t.expect("v_t");
    let mut fixed: Vec<DVector<f64>> = Vec::new();
    for k in 0..d.min(vt.nrows()) {
        let sv = if k < svd.singular_values.len() {
            svd.singular_values[k]
        } else {
            0.0
        };
        if sv <= FIXED_TOL * smax.max(1.0) {
            fixed.push(DVector::from_fn(d, |i, _| vt[(k, i)]));
        }
    }

    // decomposability of each fixed form in the tractor exterior algebra
    let mut plucker = Vec::new();
    let mut decomposable = Vec::new();
    let mut coefficients = Vec::new();
    for coeffs in &fixed {
        let model_form = quadruple_coeffs_to_model_multivector(coeffs, r, s, p);
        let res = crate::twistor::plucker_residual(&model_form);
        plucker.push(res);
        decomposable.push(res < 1e-7);
        coefficients.push(coeffs.iter().copied().collect());
    }
    FixedFormFinding {
        degree,
        count: fixed.len(),
        plucker,
        decomposable,
        coefficients,
    }
}

/// Support of a decomposable form: {v : v ∧ ω = 0}. Empty for
/// non-decomposable input.
pub fn form_support(omega: &FormValue) -> Vec<DVector<f64>> {
    let dim = omega.n;
    let wedge_cols: Vec<FormValue> = (0..dim)
        .map(|a| {
            let mut e = FormValue::zero(dim, 1);
            e.c[a] = 1.0;
            crate::exterior::wedge(&e, omega)
        })
        .collect();
    let rows = wedge_cols[0].c.len();
    if rows == 0 {
        return Vec::new();
    }
    let m = DMatrix::from_fn(rows, dim, |i, j| wedge_cols[j].c[i]);
    let svd = m.svd(false, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let vt = svd.v_t.expect("v_t");
    let mut out = Vec::new();
    for k in 0..dim.min(vt.nrows()) {
        let s = if k < svd.singular_values.len() {
            svd.singular_values[k]
        } else {
            0.0
        };
        if s <= 1e-7 * smax.max(1e-300) {
            out.push(DVector::from_fn(dim, |i, _| vt[(k, i)]));
        }
    }
    out
}

/// Reassemble a flattened quadruple into the sharped multivector over the
/// (n+2)-dimensional tractor model with basis order (e_−, e_1..e_n, e_+):
/// the tractor sharp of e_−^♭∧α_− + α_0 + e_−^♭∧e_+^♭∧α_∓ + e_+^♭∧α_+,
/// using (e_−^♭)^♯ = e_−, (e_+^♭)^♯ = e_+ and (σ^i)^♯ = ε_i e_i. The
/// positive derivation action of a skew matrix on this object matches the
/// quadruple algebra action.
pub fn quadruple_coeffs_to_model_form(coeffs: &DVector<f64>, n: usize, p: i32) -> FormValue {
    let degree = p + 1;
    let mut out = FormValue::zero(n + 2, degree);
    let b_minus = FormBasis::get(n, p.clamp(0, n as i32) as usize);
    let b_zero = FormBasis::get(n, (p + 1).clamp(0, n as i32) as usize);
    let b_cross = FormBasis::get(n, (p - 1).clamp(0, n as i32) as usize);
    let len_minus = if p >= 0 { b_minus.len() } else { 0 };
    let len_zero = if p + 1 <= n as i32 { b_zero.len() } else { 0 };
    let len_cross = if p >= 1 { b_cross.len() } else { 0 };
    let ob = out.basis_table();
    let mut pos = 0usize;
    // minus block: combos (0, mid+1...)
    for i in 0..len_minus {
        let mid = &b_minus.combos[i];
        let mut combo = vec![0u8];
        combo.extend(mid.iter().map(|&v| v + 1));
        if let Some((sign, sorted)) = sort_with_sign(&combo) {
            out.c[ob.rank_of(&sorted)] += sign * coeffs[pos + i];
        }
    }
    pos += len_minus;
    // zero block: combos (mid+1...)
    for i in 0..len_zero {
        let combo: Vec<u8> = b_zero.combos[i].iter().map(|&v| v + 1).collect();
        out.c[ob.rank_of(&combo)] += coeffs[pos + i];
    }
    pos += len_zero;
    // cross block: e_-∧e_+∧mid = (−1)^{|mid|}·(0, mid+1..., n+1)
    for i in 0..len_cross {
        let mid = &b_cross.combos[i];
        let mut combo = vec![0u8];
        combo.extend(mid.iter().map(|&v| v + 1));
        combo.push(n as u8 + 1);
        let sign = if mid.len() % 2 == 0 { 1.0 } else { -1.0 };
        out.c[ob.rank_of(&combo)] += sign * coeffs[pos + i];
    }
    pos += len_cross;
    // plus block: e_+∧mid = (−1)^{|mid|}·(mid+1..., n+1)
    for i in 0..len_minus {
        let mid = &b_minus.combos[i];
        let mut combo: Vec<u8> = mid.iter().map(|&v| v + 1).collect();
        combo.push(n as u8 + 1);
        let sign = if mid.len() % 2 == 0 { 1.0 } else { -1.0 };
        out.c[ob.rank_of(&combo)] += sign * coeffs[pos + i];
    }
    out
}

/// Signature-aware version of [`quadruple_coeffs_to_model_form`]: applies
/// the ε factors of the sharp on the middle indices.
pub fn quadruple_coeffs_to_model_multivector(
    coeffs: &DVector<f64>,
    r: usize,
    s: usize,
    p: i32,
) -> FormValue {
    let n = r + s;
    let eps: Vec<f64> = (0..n).map(|i| if i < r { -1.0 } else { 1.0 }).collect();
    let weighted = weight_quadruple_by_eps(coeffs, &eps, p);
    quadruple_coeffs_to_model_form(&weighted, n, p)
}

fn weight_quadruple_by_eps(coeffs: &DVector<f64>, eps: &[f64], p: i32) -> DVector<f64> {
    let n = eps.len();
    let b_minus = FormBasis::get(n, p.clamp(0, n as i32) as usize);
    let b_zero = FormBasis::get(n, (p + 1).clamp(0, n as i32) as usize);
    let b_cross = FormBasis::get(n, (p - 1).clamp(0, n as i32) as usize);
    let len_minus = if p >= 0 { b_minus.len() } else { 0 };
    let len_zero = if p + 1 <= n as i32 { b_zero.len() } else { 0 };
    let len_cross = if p >= 1 { b_cross.len() } else { 0 };
    let mut out = coeffs.clone();
    let mut pos = 0usize;
    for i in 0..len_minus {
        let w: f64 = b_minus.combos[i].iter().map(|&v| eps[v as usize]).product();
        out[pos + i] *= w;
    }
    pos += len_minus;
    for i in 0..len_zero {
        let w: f64 = b_zero.combos[i].iter().map(|&v| eps[v as usize]).product();
        out[pos + i] *= w;
    }
    pos += len_zero;
    for i in 0..len_cross {
        let w: f64 = b_cross.combos[i].iter().map(|&v| eps[v as usize]).product();
        out[pos + i] *= w;
    }
    pos += len_cross;
    for i in 0..len_minus {
        let w: f64 = b_minus.combos[i].iter().map(|&v| eps[v as usize]).product();
        out[pos + i] *= w;
    }
    out
}

/// Complete a report with the invariant-structure analysis.
pub fn invariant_structure(mut report: HolonomyReport, degrees: &[usize]) -> HolonomyReport {
    let n = report.n;
    let dim = n + 2;
    let (r, s) = (report.signature[0], report.signature[1]);
    let eps: Vec<f64> = (0..n).map(|i| if i < r { -1.0 } else { 1.0 }).collect();
    let g = tractor_metric(&eps);
    let span = &report.basis_matrices;

    // fixed vectors
    let kernel = common_kernel(span, dim);
    report.fixed_vector_space_dim = kernel.len();
    report.fixed_vectors = kernel
        .iter()
        .map(|v| {
            // canonical scale: e_- component 1 when present (matches the
            // Einstein tractor normalization), else unit Euclidean norm
            let v = if v[0].abs() > 1e-8 {
                v / v[0]
            } else {
                v / v.norm()
            };
            let norm = (v.transpose() * &g * &v)[(0, 0)];
            FixedVector {
                components: v.iter().copied().collect(),
                norm,
                causal: causal_of(norm, 1e-7),
            }
        })
        .collect();

    // invariant subspaces: the image of the span and the common kernel
    let image = image_space(span, dim);
    if !image.is_empty() {
        report
            .invariant_subspaces
            .push(analyze_subspace("span image", &image, span, &g));
    }
    if !kernel.is_empty() && !span.is_empty() {
        report
            .invariant_subspaces
            .push(analyze_subspace("fixed subspace", &kernel, span, &g));
    }

    for &d in degrees {
        if d >= 1 && d <= n + 1 {
            let finding = fixed_forms_of_degree(span, r, s, d);
            // decomposable fixed forms carry an invariant subspace: their
            // support plane
            for (which, coeffs) in finding.coefficients.iter().enumerate() {
                if !finding.decomposable[which] {
                    continue;
                }
                let v = DVector::from_column_slice(coeffs);
                let model_form = quadruple_coeffs_to_model_multivector(&v, r, s, d as i32 - 1);
                let support = form_support(&model_form);
                if support.len() == d {
                    report.invariant_subspaces.push(analyze_subspace(
                        &format!("support of fixed degree-{d} form"),
                        &support,
                        span,
                        &g,
                    ));
                }
            }
            report.fixed_forms.push(finding);
        }
    }

    report.classification = classify(&report, s);
    report
}

fn classify(report: &HolonomyReport, _s: usize) -> String {
    if report.rank == 0 {
        return "trivial holonomy (conformally flat class)".into();
    }
    // a fixed decomposable isotropic form whose invariant support carries no
    // dilation is the pp-wave picture
    let iso_plane = report.invariant_subspaces.iter().any(|f| {
        f.kind == "totally isotropic" && f.dim >= 2 && f.invariant && !f.dilated
    });
    if iso_plane {
        return "fixed totally isotropic plane (pp-wave class)".into();
    }
    let timelike = report.fixed_vectors.iter().any(|v| v.causal == "timelike");
    let spacelike = report.fixed_vectors.iter().any(|v| v.causal == "spacelike");
    let null = report.fixed_vectors.iter().any(|v| v.causal == "null");
    if timelike {
        return "fixed timelike vector (Einstein scaling, scal > 0)".into();
    }
    if spacelike {
        return "fixed spacelike vector (Einstein scaling, scal < 0)".into();
    }
    if null {
        return "fixed null vector (Ricci-flat scaling)".into();
    }
    let decomp = report
        .fixed_forms
        .iter()
        .any(|f| f.decomposable.iter().any(|&d| d) && f.count > 0);
    if decomp {
        return "fixed decomposable tractor form".into();
    }
    if report
        .invariant_subspaces
        .iter()
        .any(|f| f.invariant && f.dilated)
    {
        return "invariant subspace with dilation (no nc-Killing form)".into();
    }
    "no invariant structure detected (generic)".into()
}
