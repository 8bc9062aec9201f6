//! Metric builders and structural constructions: flat space, space forms,
//! pp-waves, products, warped sin/cos products, cone and ambient metrics,
//! the special-Killing lift onto the cone, and the ambient connection
//! comparison. Also hosts the metric gallery the test suites run over.

use crate::chart::MetricSpec;
use crate::error::{Error, Result};
use crate::expr::{Expr, Jet, JetSpace, UnaryFn};
use crate::exterior::{flat, frame_norm, FormField, FormValue};
use crate::tensor::Tensor;
use crate::tractor::{nc_connection_matrix, PointCtx};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

pub const MAX_DIM: usize = crate::chart::MAX_DIM;

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

/// Flat pseudo-Euclidean metric of signature (r, s).
pub fn flat_metric(r: usize, s: usize) -> Result<MetricSpec> {
    let n = r + s;
    let g = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    Expr::num(if i == j {
                        if i < r {
                            -1.0
                        } else {
                            1.0
                        }
                    } else {
                        0.0
                    })
                })
                .collect()
        })
        .collect();
    MetricSpec::new(
        format!("flat R^({r},{s})"),
        r,
        s,
        (1..=n).map(|i| format!("x{i}")).collect(),
        g,
    )
}

/// Conformal chart of the space form of constant sectional curvature κ:
/// g_ij = (1 + κ|x|²/4)^{-2} δ_ij, giving scal = n(n−1)κ.
pub fn space_form(kappa: f64, n: usize) -> Result<MetricSpec> {
    if n < 2 {
        return Err(Error::BadSpec("space form needs dimension >= 2".into()));
    }
    let sq = (1..=n)
        .map(|i| format!("x{i}^2"))
        .collect::<Vec<_>>()
        .join(" + ");
    let conf = format!("(1/(1 + {kappa}*({sq})/4))^2");
    let conf_expr = crate::expr::parse_expr(&conf, n)?;
    let g = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        conf_expr.clone()
                    } else {
                        Expr::num(0.0)
                    }
                })
                .collect()
        })
        .collect();
    let label = if kappa > 0.0 {
        format!("space form S^{n}(κ={kappa})")
    } else if kappa < 0.0 {
        format!("space form H^{n}(κ={kappa})")
    } else {
        format!("flat chart R^{n}")
    };
    let mut spec = MetricSpec::new(label, 0, n, (1..=n).map(|i| format!("x{i}")).collect(), g)?;
    if kappa < 0.0 {
        // chart domain 1 + κ|x|²/4 > 0
        let guard = crate::expr::parse_expr(&format!("1 + {kappa}*({sq})/4"), n)?;
        spec.guards.push(guard);
    }
    Ok(spec)
}

/// Lorentzian pp-wave 2 du dv + H(x,y,..) du² + Σ dx_i², coordinates
/// (u, v, x, y, ..). `h` references only the transverse coordinates.
pub fn pp_wave(h: &Expr, transverse: usize) -> Result<MetricSpec> {
    let n = transverse + 2;
    let mut names = vec!["u".to_string(), "v".to_string()];
    for i in 0..transverse {
        names.push(match i {
            0 => "x".to_string(),
            1 => "y".to_string(),
            _ => format!("z{}", i - 1),
        });
    }
    // H is written in the transverse variables: shift them past (u, v)
    let h_shifted = h.shift_vars(2);
    if let Some(v) = h_shifted.max_var() {
        if v >= n {
            return Err(Error::BadSpec(
                "pp-wave profile references a coordinate outside the transverse block".into(),
            ));
        }
    }
    let z = || Expr::num(0.0);
    let mut g: Vec<Vec<Expr>> = (0..n).map(|_| (0..n).map(|_| z()).collect()).collect();
    g[0][0] = h_shifted;
    g[0][1] = Expr::num(1.0);
    g[1][0] = Expr::num(1.0);
    for i in 2..n {
        g[i][i] = Expr::num(1.0);
    }
    MetricSpec::new("pp-wave", 1, n - 1, names, g)
}

fn unique_names(left: &[String], right: &[String]) -> (Vec<String>, Vec<String>) {
    let l = left.to_vec();
    let mut r = Vec::with_capacity(right.len());
    for name in right {
        if l.contains(name) || r.contains(name) {
            let mut k = 2;
            loop {
                let cand = format!("{name}_{k}");
                if !l.contains(&cand) && !r.contains(&cand) {
                    r.push(cand);
                    break;
                }
                k += 1;
            }
        } else {
            r.push(name.clone());
        }
    }
    (l, r)
}

/// Block-diagonal product metric over concatenated coordinates.
pub fn product(left: &MetricSpec, right: &MetricSpec) -> Result<MetricSpec> {
    let n = left.dim + right.dim;
    if n > MAX_DIM {
        return Err(Error::BadSpec(format!(
            "product dimension {n} exceeds the supported maximum {MAX_DIM}"
        )));
    }
    let (lnames, rnames) = unique_names(&left.coords, &right.coords);
    let mut coords = lnames;
    coords.extend(rnames);
    let z = || Expr::num(0.0);
    let mut g: Vec<Vec<Expr>> = (0..n).map(|_| (0..n).map(|_| z()).collect()).collect();
    for i in 0..left.dim {
        for j in 0..left.dim {
            g[i][j] = left.g[i][j].clone();
        }
    }
    for i in 0..right.dim {
        for j in 0..right.dim {
            g[left.dim + i][left.dim + j] = right.g[i][j].shift_vars(left.dim);
        }
    }
    let mut spec = MetricSpec::new(
        format!("{} x {}", left.label, right.label),
        left.r + right.r,
        left.s + right.s,
        coords,
        g,
    )?;
    for gd in &left.guards {
        spec.guards.push(gd.clone());
    }
    for gd in &right.guards {
        spec.guards.push(gd.shift_vars(left.dim));
    }
    let mut center = left.sample_center.clone();
    center.extend(right.sample_center.iter().copied());
    spec.sample_center = center;
    spec.sample_halfwidth = left.sample_halfwidth.min(right.sample_halfwidth);
    Ok(spec)
}

/// Warped product dt² + sin²(t)·k + cos²(t)·h over (t, k-coords, h-coords);
/// interior chart t ∈ (0.1, π/2 − 0.1).
pub fn warped(k: &MetricSpec, h: &MetricSpec) -> Result<MetricSpec> {
    let n = 1 + k.dim + h.dim;
    if n > MAX_DIM {
        return Err(Error::BadSpec(format!(
            "warped dimension {n} exceeds the supported maximum {MAX_DIM}"
        )));
    }
    if k.r != 0 || h.r != 0 {
        return Err(Error::BadSpec(
            "warped construction expects Riemannian factors".into(),
        ));
    }
    let (knames, hnames) = unique_names(&k.coords, &h.coords);
    let mut coords = vec!["t".to_string()];
    coords.extend(knames);
    coords.extend(hnames);
    let z = || Expr::num(0.0);
    let mut g: Vec<Vec<Expr>> = (0..n).map(|_| (0..n).map(|_| z()).collect()).collect();
    g[0][0] = Expr::num(1.0);
    let sin2 = Expr::pow(Expr::sin(Expr::var(0)), Expr::num(2.0));
    let cos2 = Expr::pow(Expr::cos(Expr::var(0)), Expr::num(2.0));
    for i in 0..k.dim {
        for j in 0..k.dim {
            match &k.g[i][j] {
                Expr::Num(v) if *v == 0.0 => {}
                e => g[1 + i][1 + j] = Expr::mul(sin2.clone(), e.shift_vars(1)),
            }
        }
    }
    for i in 0..h.dim {
        for j in 0..h.dim {
            match &h.g[i][j] {
                Expr::Num(v) if *v == 0.0 => {}
                e => {
                    g[1 + k.dim + i][1 + k.dim + j] =
                        Expr::mul(cos2.clone(), e.shift_vars(1 + k.dim))
                }
            }
        }
    }
    let mut spec = MetricSpec::new(
        format!("warped sin²·{} + cos²·{}", k.label, h.label),
        0,
        n,
        coords,
        g,
    )?;
    spec.guards
        .push(crate::expr::parse_expr("x1 - 0.1", 1)?);
    spec.guards
        .push(crate::expr::parse_expr("pi/2 - 0.1 - x1", 1)?);
    for gd in &k.guards {
        spec.guards.push(gd.shift_vars(1));
    }
    for gd in &h.guards {
        spec.guards.push(gd.shift_vars(1 + k.dim));
    }
    let mut center = vec![std::f64::consts::FRAC_PI_4];
    center.extend(k.sample_center.iter().copied());
    center.extend(h.sample_center.iter().copied());
    spec.sample_center = center;
    spec.sample_halfwidth = 0.3_f64
        .min(k.sample_halfwidth)
        .min(h.sample_halfwidth);
    Ok(spec)
}

/// Cone metric b dt² + t² g over (t, base), t > 0.
pub fn cone(base: &MetricSpec, b: f64) -> Result<MetricSpec> {
    if b == 0.0 {
        return Err(Error::BadSpec("cone scaling b must be nonzero".into()));
    }
    let n = 1 + base.dim;
    if n > MAX_DIM {
        return Err(Error::BadSpec(format!(
            "cone dimension {n} exceeds the supported maximum {MAX_DIM}"
        )));
    }
    let mut coords = vec!["t".to_string()];
    let (_, bnames) = unique_names(&coords, &base.coords);
    coords.extend(bnames);
    let z = || Expr::num(0.0);
    let mut g: Vec<Vec<Expr>> = (0..n).map(|_| (0..n).map(|_| z()).collect()).collect();
    g[0][0] = Expr::num(b);
    let t2 = Expr::pow(Expr::var(0), Expr::num(2.0));
    for i in 0..base.dim {
        for j in 0..base.dim {
            match &base.g[i][j] {
                Expr::Num(v) if *v == 0.0 => {}
                e => g[1 + i][1 + j] = Expr::mul(t2.clone(), e.shift_vars(1)),
            }
        }
    }
    let (r, s) = if b > 0.0 {
        (base.r, base.s + 1)
    } else {
        (base.r + 1, base.s)
    };
    let mut spec = MetricSpec::new(format!("cone(b={b}) over {}", base.label), r, s, coords, g)?;
    spec.guards.push(Expr::var(0)); // t > 0
    for gd in &base.guards {
        spec.guards.push(gd.shift_vars(1));
    }
    let mut center = vec![1.0];
    center.extend(base.sample_center.iter().copied());
    spec.sample_center = center;
    spec.sample_halfwidth = 0.35_f64.min(base.sample_halfwidth);
    Ok(spec)
}

/// Ambient metric b(dt² − ds²) + t² g over (t, s, base), signature
/// (r+1, s+1), t > 0.
pub fn ambient(base: &MetricSpec, b: f64) -> Result<MetricSpec> {
    if b == 0.0 {
        return Err(Error::BadSpec("ambient scaling b must be nonzero".into()));
    }
    let n = 2 + base.dim;
    if n > MAX_DIM {
        return Err(Error::BadSpec(format!(
            "ambient dimension {n} exceeds the supported maximum {MAX_DIM}"
        )));
    }
    let mut coords = vec!["t".to_string(), "s".to_string()];
    let (_, bnames) = unique_names(&coords, &base.coords);
    coords.extend(bnames);
    let z = || Expr::num(0.0);
    let mut g: Vec<Vec<Expr>> = (0..n).map(|_| (0..n).map(|_| z()).collect()).collect();
    g[0][0] = Expr::num(b);
    g[1][1] = Expr::num(-b);
    let t2 = Expr::pow(Expr::var(0), Expr::num(2.0));
    for i in 0..base.dim {
        for j in 0..base.dim {
            match &base.g[i][j] {
                Expr::Num(v) if *v == 0.0 => {}
                e => g[2 + i][2 + j] = Expr::mul(t2.clone(), e.shift_vars(2)),
            }
        }
    }
    let mut spec = MetricSpec::new(
        format!("ambient(b={b}) over {}", base.label),
        base.r + 1,
        base.s + 1,
        coords,
        g,
    )?;
    spec.guards.push(Expr::var(0)); // t > 0
    for gd in &base.guards {
        spec.guards.push(gd.shift_vars(2));
    }
    let mut center = vec![1.0, 1.0];
    center.extend(base.sample_center.iter().copied());
    spec.sample_center = center;
    spec.sample_halfwidth = 0.35_f64.min(base.sample_halfwidth);
    Ok(spec)
}

// ---------------------------------------------------------------------------
// Symbolic helpers
// ---------------------------------------------------------------------------

/// Symbolic determinant with structural-zero pruning (Laplace expansion).
pub fn symbolic_det(g: &[Vec<Expr>]) -> Expr {
    fn is_zero(e: &Expr) -> bool {
        matches!(e, Expr::Num(v) if *v == 0.0)
    }
    fn det_rec(g: &[Vec<Expr>], rows: &[usize], cols: &[usize]) -> Expr {
        if rows.len() == 1 {
            return g[rows[0]][cols[0]].clone();
        }
        let mut acc: Option<Expr> = None;
        for (j, &c) in cols.iter().enumerate() {
            let entry = &g[rows[0]][c];
            if is_zero(entry) {
                continue;
            }
            let mut rest_cols = cols.to_vec();
            rest_cols.remove(j);
            let sub = det_rec(g, &rows[1..], &rest_cols);
            if is_zero(&sub) {
                continue;
            }
            let term = Expr::mul(entry.clone(), sub);
            let signed = if j % 2 == 0 {
                term
            } else {
                Expr::neg(term)
            };
            acc = Some(match acc {
                None => signed,
                Some(p) => Expr::add(p, signed),
            });
        }
        acc.unwrap_or(Expr::num(0.0))
    }
    let n = g.len();
    let idx: Vec<usize> = (0..n).collect();
    det_rec(g, &idx, &idx)
}

/// Symbolic Hodge star of a form field: indices raised through the
/// adjugate of g, scaled by sqrt((−1)^r det g)/det^p. Exact on any chart
/// whose metric entries are expressions.
pub fn hodge_field(field: &FormField, spec: &MetricSpec) -> FormField {
    let n = spec.dim;
    let p = field.degree as usize;
    let det = symbolic_det(&spec.g);
    let sign_r = if spec.r % 2 == 0 { 1.0 } else { -1.0 };
    let sqrt_det = Expr::unary(UnaryFn::Sqrt, Expr::mul(Expr::num(sign_r), det.clone()));
    let adj = |i: usize, j: usize| -> Expr {
        // adjugate entry = cofactor C_ji
        let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
        let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
        let minor: Vec<Vec<Expr>> = rows
            .iter()
            .map(|&r| cols.iter().map(|&c| spec.g[r][c].clone()).collect())
            .collect();
        let minor_det = if minor.is_empty() {
            Expr::num(1.0)
        } else {
            symbolic_det(&minor)
        };
        if (i + j) % 2 == 0 {
            minor_det
        } else {
            Expr::neg(minor_det)
        }
    };
    let in_basis = field.basis_table();
    let mut out = FormField::zero(n, (n - p) as i32);
    let out_basis = out.basis_table();
    for combo in in_basis.combos.iter() {
        let mut raised: Option<Expr> = None;
        for (i2, combo2) in in_basis.combos.iter().enumerate() {
            if matches!(field.coeffs[i2], Expr::Num(v) if v == 0.0) {
                continue;
            }
            let minor: Vec<Vec<Expr>> = combo
                .iter()
                .map(|&r| {
                    combo2
                        .iter()
                        .map(|&c| adj(r as usize, c as usize))
                        .collect()
                })
                .collect();
            let det_minor = if p == 0 {
                Expr::num(1.0)
            } else {
                symbolic_det(&minor)
            };
            let term = Expr::mul(det_minor, field.coeffs[i2].clone());
            raised = Some(match raised {
                None => term,
                Some(acc) => Expr::add(acc, term),
            });
        }
        let Some(raised) = raised else { continue };
        let (sign, comp) = crate::exterior::complement_sign(combo, n);
        let r = out_basis.rank_of(&comp);
        let scaled = Expr::mul(
            Expr::div(
                sqrt_det.clone(),
                Expr::pow(det.clone(), Expr::num(p as f64)),
            ),
            Expr::mul(Expr::num(sign), raised),
        );
        out.coeffs[r] = match &out.coeffs[r] {
            Expr::Num(v) if *v == 0.0 => scaled,
            prev => Expr::add(prev.clone(), scaled),
        };
    }
    out
}

/// Volume form of an oriented chart as a field:
/// sqrt((−1)^r det g) dx^1∧..∧dx^n.
pub fn volume_field(spec: &MetricSpec) -> FormField {
    let n = spec.dim;
    let det = symbolic_det(&spec.g);
    let signed = if spec.r % 2 == 0 {
        det
    } else {
        Expr::neg(det)
    };
    let mut f = FormField::zero(n, n as i32);
    let combo: Vec<u8> = (0..n as u8).collect();
    f.set(&combo, Expr::unary(UnaryFn::Sqrt, signed));
    f
}

// ---------------------------------------------------------------------------
// Einstein verification
// ---------------------------------------------------------------------------

/// Numerically verify Ric = (scal/n)·g at the samples. Returns the (mean)
/// scalar curvature when the metric is Einstein within `tol`.
pub fn einstein_scal(spec: &MetricSpec, samples: &[Vec<f64>], tol: f64) -> Result<Option<f64>> {
    let n = spec.dim;
    let mut scals = Vec::with_capacity(samples.len());
    for pt in samples {
        let cp = spec.metric_at(pt, 2)?;
        let cj = crate::curvature::CurvatureJets::new(&cp)?;
        let ric = cj.ricci.values();
        let scal = cj.scal.value();
        let frame = crate::chart::orthonormal_coframe(&cp)?;
        let mut defect = Tensor::zeros(n, 2);
        for a in 0..n {
            for b in 0..n {
                defect.set(&[a, b], ric.get(&[a, b]) - scal / n as f64 * cp.g[(a, b)]);
            }
        }
        if defect.frame_norm(&frame.cols) > tol * (1.0 + scal.abs()) {
            return Ok(None);
        }
        scals.push(scal);
    }
    if scals.is_empty() {
        return Ok(None);
    }
    let mean = scals.iter().sum::<f64>() / scals.len() as f64;
    if scals.iter().any(|s| (s - mean).abs() > tol * (1.0 + mean.abs())) {
        return Ok(None);
    }
    Ok(Some(mean))
}

// ---------------------------------------------------------------------------
// Special Killing forms and the cone lift
// ---------------------------------------------------------------------------

/// Residuals of the special-Killing pair
/// ∇_X β = (1/(p+1)) X ⨼ dβ and ∇_X dβ = −((p+1)·scal/(n(n−1))) X^♭ ∧ β,
/// max over samples, frame-normalized.
pub fn special_killing_residuals(
    beta: &FormField,
    spec: &MetricSpec,
    samples: &[Vec<f64>],
    metric_order: usize,
) -> Result<(f64, f64)> {
    let n = spec.dim;
    let p = beta.degree as f64;
    let per: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|pt| {
            let ctx = PointCtx::new(spec, pt, metric_order)?;
            let lc = ctx.levi_civita();
            let bj = beta.jets_at(pt, 2)?;
            let db = bj.d();
            let nabla_b: Vec<FormValue> = lc.covd_all(&bj).iter().map(|f| f.value()).collect();
            let nabla_db: Vec<FormValue> = lc.covd_all(&db).iter().map(|f| f.value()).collect();
            let scal = ctx.curv.scal.value();
            let c = (p + 1.0) * scal / (n as f64 * (n as f64 - 1.0));
            let beta_val = bj.value();
            let db_val = db.value();
            let frame = &ctx.frame;
            let scale = 1.0 + frame_norm(&beta_val, frame) + frame_norm(&db_val, frame);
            let mut r1 = 0.0f64;
            let mut r2 = 0.0f64;
            for i in 0..n {
                let x: Vec<f64> = (0..n).map(|a| frame.cols[(a, i)]).collect();
                let combine = |per_dir: &[FormValue]| {
                    let mut out = FormValue::zero(n, per_dir[0].degree);
                    for (a, f) in per_dir.iter().enumerate() {
                        out = out.add(&f.scale(x[a]));
                    }
                    out
                };
                let e1 = combine(&nabla_b)
                    .sub(&crate::exterior::interior(&x, &db_val).scale(1.0 / (p + 1.0)));
                let e2 = combine(&nabla_db).add(
                    &crate::exterior::wedge(&flat(&ctx.cp, &x), &beta_val).scale(c),
                );
                r1 += frame_norm(&e1, frame).powi(2);
                r2 += frame_norm(&e2, frame).powi(2);
            }
            Ok((r1.sqrt() / scale, r2.sqrt() / scale))
        })
        .collect::<Result<_>>()?;
    let mut out = (0.0f64, 0.0f64);
    for (a, b) in per {
        out.0 = out.0.max(a);
        out.1 = out.1.max(b);
    }
    Ok(out)
}

/// The special Killing forms of the warped chart dt² + sin²(t)k + cos²(t)h
/// with unit-normalized Einstein factors: sin^{p+1}(t)·dvol_k and
/// cos^{q+1}(t)·dvol_h (pullbacks of the factor volume forms). The powers
/// follow from the cone picture: the cone over the warped chart splits as
/// the product of the factor cones, and these forms lift exactly to the
/// factor volume forms there.
pub fn warped_special_killing_forms(
    k: &MetricSpec,
    h: &MetricSpec,
) -> Result<(FormField, FormField)> {
    let n = 1 + k.dim + h.dim;
    let p = k.dim as f64;
    let q = h.dim as f64;
    let sin_pow = Expr::pow(Expr::sin(Expr::var(0)), Expr::num(p + 1.0));
    let cos_pow = Expr::pow(Expr::cos(Expr::var(0)), Expr::num(q + 1.0));
    let volk = volume_field(k).embed(n, 1).scale_expr(&sin_pow);
    let volh = volume_field(h).embed(n, 1 + k.dim).scale_expr(&cos_pow);
    Ok((volk, volh))
}

/// Max over samples of ‖∇ field‖ (frame norm, normalized by 1 + ‖field‖).
pub fn parallel_residual(
    field: &FormField,
    spec: &MetricSpec,
    samples: &[Vec<f64>],
    metric_order: usize,
) -> Result<f64> {
    let n = spec.dim;
    let per: Vec<f64> = samples
        .par_iter()
        .map(|pt| {
            let ctx = PointCtx::new(spec, pt, metric_order)?;
            let lc = ctx.levi_civita();
            let fj = field.jets_at(pt, 1)?;
            let nabla: Vec<FormValue> = lc.covd_all(&fj).iter().map(|f| f.value()).collect();
            let frame = &ctx.frame;
            let scale = 1.0 + frame_norm(&fj.value(), frame);
            let mut acc = 0.0;
            for i in 0..n {
                let mut dir = FormValue::zero(n, field.degree);
                for (a, f) in nabla.iter().enumerate() {
                    dir = dir.add(&f.scale(frame.cols[(a, i)]));
                }
                acc += frame_norm(&dir, frame).powi(2);
            }
            Ok(acc.sqrt() / scale)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().fold(0.0, f64::max))
}

/// Lift of a special Killing p-form onto the cone:
/// t^p dt∧β + (sign(b)·t^{p+1}/(p+1)) dβ. Checks that the base is Einstein
/// and b matches (n−1)n/scal.
pub fn lift_to_cone(beta: &FormField, base: &MetricSpec, b: f64) -> Result<FormField> {
    let samples = base.sample_points(12, 0);
    let scal = einstein_scal(base, &samples, 1e-6)?.ok_or_else(|| {
        Error::Precondition("cone lift requires an Einstein base metric".into())
    })?;
    if scal.abs() < 1e-9 {
        return Err(Error::Precondition(
            "cone lift requires nonzero scalar curvature".into(),
        ));
    }
    let n = base.dim as f64;
    let expected_b = (n - 1.0) * n / scal;
    if (b - expected_b).abs() > 1e-6 * (1.0 + expected_b.abs()) {
        return Err(Error::Precondition(format!(
            "cone scaling b = {b} does not match (n−1)n/scal = {expected_b}"
        )));
    }
    let p = beta.degree;
    let cone_n = base.dim + 1;
    let beta_emb = beta.embed(cone_n, 1);
    let dbeta_emb = beta.d().embed(cone_n, 1);
    let t = Expr::var(0);
    let t_p = Expr::pow(t.clone(), Expr::num(p as f64));
    let t_p1 = Expr::pow(t.clone(), Expr::num(p as f64 + 1.0));
    // dt ∧ (t^p β)
    let mut out = FormField::zero(cone_n, p + 1);
    {
        let bt = beta_emb.basis_table();
        let ot = out.basis_table();
        for (i, e) in beta_emb.coeffs.iter().enumerate() {
            if matches!(e, Expr::Num(v) if *v == 0.0) {
                continue;
            }
            let mut combo = vec![0u8];
            combo.extend(bt.combos[i].iter().copied());
            out.coeffs[ot.rank_of(&combo)] = Expr::mul(t_p.clone(), e.clone());
        }
        // + sign(b) t^{p+1}/(p+1) dβ
        let dt2 = dbeta_emb.basis_table();
        let factor = Expr::mul(
            Expr::num(b.signum() / (p as f64 + 1.0)),
            t_p1,
        );
        for (i, e) in dbeta_emb.coeffs.iter().enumerate() {
            if matches!(e, Expr::Num(v) if *v == 0.0) {
                continue;
            }
            let combo = &dt2.combos[i];
            let r = ot.rank_of(combo);
            let term = Expr::mul(factor.clone(), e.clone());
            out.coeffs[r] = match &out.coeffs[r] {
                Expr::Num(v) if *v == 0.0 => term,
                prev => Expr::add(prev.clone(), term),
            };
        }
    }
    Ok(out)
}

/// Project a cone (p+1)-form back to the base at t = 1: β = ∂_t ⨼ α̂,
/// restricted to the slice and with t-dependence dropped.
pub fn project_from_cone(lifted: &FormField, base_dim: usize) -> FormField {
    let p1 = lifted.degree;
    let mut out = FormField::zero(base_dim, p1 - 1);
    let lt = lifted.basis_table();
    let ot = out.basis_table();
    for (i, e) in lifted.coeffs.iter().enumerate() {
        let combo = &lt.combos[i];
        if combo.first() != Some(&0) {
            continue;
        }
        let rest: Vec<u8> = combo[1..].iter().map(|&v| v - 1).collect();
        // substitute t = 1: handled by evaluating at points with t component 1
        out.coeffs[ot.rank_of(&rest)] = substitute_t1(e);
    }
    out
}

/// Substitute x1 = 1 and shift the remaining variables down by one.
fn substitute_t1(e: &Expr) -> Expr {
    match e {
        Expr::Num(v) => Expr::Num(*v),
        Expr::Pi => Expr::Pi,
        Expr::Var(0) => Expr::Num(1.0),
        Expr::Var(i) => Expr::Var(i - 1),
        Expr::Unary(f, a) => Expr::Unary(*f, Box::new(substitute_t1(a))),
        Expr::Binary(op, a, b) => Expr::Binary(
            *op,
            Box::new(substitute_t1(a)),
            Box::new(substitute_t1(b)),
        ),
    }
}

// ---------------------------------------------------------------------------
// Ambient comparison (the frame map at the level set (t,s) = (1,1))
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct AmbientReport {
    pub b: f64,
    pub scal: f64,
    /// max over samples and directions of the connection-coefficient
    /// mismatch between the mapped normal conformal connection and the
    /// ambient Levi-Civita connection
    pub deviation: f64,
    /// curvature-span ranks on both sides
    pub tractor_rank: usize,
    pub ambient_rank: usize,
}

/// Compare the normal conformal connection of an Einstein base with the
/// Levi-Civita connection of its ambient metric through the isometric frame
/// map at the level set (t, s) = (1, 1).
pub fn ambient_compare(
    base: &MetricSpec,
    samples: &[Vec<f64>],
    metric_order: usize,
) -> Result<AmbientReport> {
    let scal = einstein_scal(base, samples, 1e-6)?.ok_or_else(|| {
        Error::Precondition("ambient comparison requires an Einstein base metric".into())
    })?;
    if scal.abs() < 1e-9 {
        return Err(Error::Precondition(
            "ambient comparison requires nonzero scalar curvature".into(),
        ));
    }
    let n = base.dim;
    let b = (n as f64 - 1.0) * n as f64 / scal;
    let amb = ambient(base, b)?;
    let sb = b.signum();
    let sqb = b.abs().sqrt();

    let per: Vec<(f64, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)> = samples
        .par_iter()
        .map(|pt| {
            let ctx = PointCtx::new(base, pt, metric_order)?;
            let mut amb_pt = vec![1.0, 1.0];
            amb_pt.extend(pt.iter().copied());
            let amb_ctx = PointCtx::new(&amb, &amb_pt, metric_order)?;

            // ambient frame field (f_t, f_s, f_j = s_j / t) as jets in the
            // ambient variables: the base frame field is embedded so its
            // ordering matches the tractor frame downstairs exactly
            let amb_n = n + 2;
            let order = amb_ctx.cp.order - 1;
            let space = JetSpace::get(amb_n, order);
            let zero = Jet::constant(space.clone(), 0.0);
            let t_jet = Jet::variable(space.clone(), 0, 1.0);
            let t_inv = t_jet.recip();

            let mut fields: Vec<Vec<Jet>> = Vec::with_capacity(amb_n);
            let mut f_t = vec![zero.clone(); amb_n];
            f_t[0] = Jet::constant(space.clone(), 1.0 / sqb);
            fields.push(f_t);
            let mut f_s = vec![zero.clone(); amb_n];
            f_s[1] = Jet::constant(space.clone(), 1.0 / sqb);
            fields.push(f_s);
            for j in 0..n {
                let mut col = vec![zero.clone(); amb_n];
                for (a, item) in col.iter_mut().enumerate().skip(2) {
                    *item = ctx.frame_jets.cols[j][a - 2]
                        .embed(&space, 2)
                        .mul(&t_inv);
                }
                fields.push(col);
            }
            let eps_amb: Vec<f64> = {
                let mut e = vec![sb, -sb];
                e.extend(ctx.frame.eps.iter().copied());
                e
            };

            // ω̄(X)^a_b = ε̄_a ḡ(∇̄_X f_b, f_a) for X = f_i (slice directions)
            let gamma = &amb_ctx.curv.gamma;
            let g_amb = &amb_ctx.cp.g;
            let field_vals: Vec<Vec<f64>> = fields
                .iter()
                .map(|f| f.iter().map(|j| j.value()).collect())
                .collect();
            let inner_amb = |a: &[f64], bb: &[f64]| {
                let mut acc = 0.0;
                for i in 0..amb_n {
                    for j in 0..amb_n {
                        acc += g_amb[(i, j)] * a[i] * bb[j];
                    }
                }
                acc
            };
            let nabla_field = |x: &[f64], fb: &Vec<Jet>| -> Vec<f64> {
                let mut out = vec![0.0; amb_n];
                for (a, &xa) in x.iter().enumerate() {
                    if xa == 0.0 {
                        continue;
                    }
                    for (cc, item) in out.iter_mut().enumerate() {
                        let mut v = fb[cc].first_partial(a);
                        for d in 0..amb_n {
                            v += gamma.get(&[cc, a, d]).value() * fb[d].value();
                        }
                        *item += xa * v;
                    }
                }
                out
            };

            // base-side connection matrices and mapped comparison
            let phi = {
                let mut m = DMatrix::zeros(amb_n, amb_n);
                // tractor basis order (e_-, e_1..e_n, e_+); ambient frame
                // order (f_t, f_s, f_1..f_n)
                m[(0, 0)] = 1.0 / (2.0 * sqb);
                m[(1, 0)] = 1.0 / (2.0 * sqb);
                m[(0, n + 1)] = sb * sqb;
                m[(1, n + 1)] = -sb * sqb;
                for i in 0..n {
                    m[(2 + i, 1 + i)] = 1.0;
                }
                m
            };
            let mut dev = 0.0f64;
            let mut amb_ops: Vec<DMatrix<f64>> = Vec::new();
            let mut trac_ops: Vec<DMatrix<f64>> = Vec::new();
            for i in 0..n {
                let x_base: Vec<f64> = (0..n).map(|a| ctx.frame.cols[(a, i)]).collect();
                let m_nc = nc_connection_matrix(&ctx, &x_base)?;
                // the mapped direction on the slice
                let x_amb = &field_vals[2 + i];
                let mut m_amb = DMatrix::zeros(amb_n, amb_n);
                for bb in 0..amb_n {
                    let nab = nabla_field(x_amb, &fields[bb]);
                    for aa in 0..amb_n {
                        m_amb[(aa, bb)] =
                            eps_amb[aa] * inner_amb(&nab, &field_vals[aa]);
                    }
                }
                // frame alignment: the base frame on the slice must match the
                // base frame downstairs (same Gram-Schmidt on the same block)
                let diff = (&m_amb * &phi - &phi * &m_nc.m).norm();
                dev = dev.max(diff);
                amb_ops.push(m_amb);
                trac_ops.push(m_nc.m.clone());
            }
            // curvature operators for the rank comparison
            let mut trac_curv: Vec<DMatrix<f64>> = Vec::new();
            for x in 0..n {
                for y in (x + 1)..n {
                    let op = crate::tractor::tractor_curvature(&ctx, x, y)?;
                    trac_curv.push(op.matrix(&ctx).m);
                }
            }
            let mut amb_curv: Vec<DMatrix<f64>> = Vec::new();
            let riem = amb_ctx.curv.riemann.values();
            for x in 0..amb_n {
                for y in (x + 1)..amb_n {
                    // R̄(f_x, f_y) as an endomorphism in the ambient frame
                    let fx = &field_vals[x];
                    let fy = &field_vals[y];
                    let mut m = DMatrix::zeros(amb_n, amb_n);
                    for bb in 0..amb_n {
                        for aa in 0..amb_n {
                            let mut acc = 0.0;
                            for ii in 0..amb_n {
                                for jj in 0..amb_n {
                                    for kk in 0..amb_n {
                                        for ll in 0..amb_n {
                                            acc += riem.get(&[ii, jj, kk, ll])
                                                * fx[ii]
                                                * fy[jj]
                                                * field_vals[bb][kk]
                                                * field_vals[aa][ll];
                                        }
                                    }
                                }
                            }
                            m[(aa, bb)] = eps_amb[aa] * acc;
                        }
                    }
                    amb_curv.push(m);
                }
            }
            Ok((dev, trac_curv, amb_curv))
        })
        .collect::<Result<_>>()?;

    let mut deviation = 0.0f64;
    let mut trac_all = Vec::new();
    let mut amb_all = Vec::new();
    for (d, t, a) in per {
        deviation = deviation.max(d);
        trac_all.extend(t);
        amb_all.extend(a);
    }
    let tractor_rank = crate::holonomy::span_rank(&trac_all);
    let ambient_rank = crate::holonomy::span_rank(&amb_all);
    Ok(AmbientReport {
        b,
        scal,
        deviation,
        tractor_rank,
        ambient_rank,
    })
}

// ---------------------------------------------------------------------------
// Gallery
// ---------------------------------------------------------------------------

/// Expected verdict of a known form under the twistor check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Expected {
    Normal,
    ConformalOnly,
}

pub struct KnownForm {
    pub label: String,
    pub field: FormField,
    pub expect: Expected,
}

pub struct GalleryEntry {
    pub spec: MetricSpec,
    /// scal when the metric is Einstein (declared, re-verified by tests)
    pub einstein_scal: Option<f64>,
    pub conformally_flat: bool,
    pub forms: Vec<KnownForm>,
}

/// Dual 1-form of the standard rotation Killing field x1 ∂_2 − x2 ∂_1 of a
/// conformally flat chart with factor `conf` (g = conf·δ).
pub fn rotation_killing_form(spec: &MetricSpec) -> FormField {
    let n = spec.dim;
    let conf = spec.g[0][0].clone();
    let mut f = FormField::zero(n, 1);
    f.set(&[0], Expr::mul(conf.clone(), Expr::neg(Expr::var(1))));
    f.set(&[1], Expr::mul(conf, Expr::var(0)));
    f
}

/// The metric gallery used throughout the test suites. Declared facts are
/// re-verified, never trusted.
pub fn gallery() -> Vec<GalleryEntry> {
    let mut out = Vec::new();

    for (r, s) in [(0usize, 3usize), (1, 3), (2, 2)] {
        out.push(GalleryEntry {
            spec: flat_metric(r, s).unwrap(),
            einstein_scal: Some(0.0),
            conformally_flat: true,
            forms: vec![],
        });
    }

    let s3 = space_form(1.0, 3).unwrap();
    out.push(GalleryEntry {
        spec: s3,
        einstein_scal: Some(6.0),
        conformally_flat: true,
        forms: vec![],
    });

    let s4 = space_form(1.0, 4).unwrap();
    out.push(GalleryEntry {
        spec: s4,
        einstein_scal: Some(12.0),
        conformally_flat: true,
        forms: vec![],
    });

    let h3 = space_form(-1.0, 3).unwrap();
    out.push(GalleryEntry {
        spec: h3,
        einstein_scal: Some(-6.0),
        conformally_flat: true,
        forms: vec![],
    });

    // unit S² × unit H²: conformally flat, the S² volume form is normal
    let s2 = space_form(1.0, 2).unwrap();
    let h2 = space_form(-1.0, 2).unwrap();
    let prod = product(&s2, &h2).unwrap();
    let vol_s2 = volume_field(&s2).embed(4, 0);
    out.push(GalleryEntry {
        spec: prod,
        einstein_scal: None,
        conformally_flat: true,
        forms: vec![KnownForm {
            label: "vol(S²)".into(),
            field: vol_s2.clone(),
            expect: Expected::Normal,
        }],
    });

    // unit S² × H²(scal = −4): wrong product scaling, conformal-only
    let h2_fast = space_form(-2.0, 2).unwrap();
    let prod_bad = product(&s2, &h2_fast).unwrap();
    out.push(GalleryEntry {
        spec: prod_bad,
        einstein_scal: None,
        conformally_flat: false,
        forms: vec![KnownForm {
            label: "vol(S²)".into(),
            field: vol_s2,
            expect: Expected::ConformalOnly,
        }],
    });

    // unit S² × unit S²: Einstein, not conformally flat
    let s2b = space_form(1.0, 2).unwrap();
    let s2xs2 = product(&s2, &s2b).unwrap();
    out.push(GalleryEntry {
        spec: s2xs2,
        einstein_scal: Some(4.0),
        conformally_flat: false,
        forms: vec![],
    });

    // unit S² × unit H³: the product-rule scaling scal_l = −q(q−1)/(p(p−1))·scal_h
    let h3b = space_form(-1.0, 3).unwrap();
    let s2xh3 = product(&s2, &h3b).unwrap();
    out.push(GalleryEntry {
        spec: s2xh3,
        einstein_scal: None,
        conformally_flat: true,
        forms: vec![KnownForm {
            label: "vol(S²)".into(),
            field: volume_field(&s2).embed(5, 0),
            expect: Expected::Normal,
        }],
    });

    // pp-wave with cubic profile: du is a normal null 1-form
    let h = crate::expr::parse_expr("x1^3", 2).unwrap();
    let pp = pp_wave(&h, 2).unwrap();
    let mut du = FormField::zero(4, 1);
    du.set(&[0], Expr::num(1.0));
    out.push(GalleryEntry {
        spec: pp,
        einstein_scal: None,
        conformally_flat: false,
        forms: vec![KnownForm {
            label: "du".into(),
            field: du,
            expect: Expected::Normal,
        }],
    });

    out
}
