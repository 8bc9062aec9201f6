//! Verification of candidate forms against the normal twistor equations:
//! companion components, the Box operator (both dimension branches), the
//! four equation residuals, curvature integrability conditions, and the
//! parallel-scaling / decomposability analysis.
//!
//! Residual norms are positive definite: a residual form is measured by the
//! Euclidean norm of its pseudo-orthonormal-frame components, summed over
//! the frame directions of the free slot, and normalized by
//! (1 + ‖α_−‖ + ‖dα_−‖) at the point so tolerances are scale-free.

use crate::chart::MetricSpec;
use crate::curvature::two_form_action;
use crate::error::{Error, Result};
use crate::expr::{Expr, Jet};
use crate::exterior::{
    flat, frame_norm, interior, wedge, FormField, FormValue, JetForm,
};
use crate::tractor::{PointCtx, TractorJets};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

/// Default jet order for the metric at twistor checks.
pub const METRIC_ORDER: usize = 4;
/// Default jet order for candidate fields (two orders consumed by Box, one
/// by the outer covariant derivative).
pub const FIELD_ORDER: usize = 3;

// ---------------------------------------------------------------------------
// Companions and Box
// ---------------------------------------------------------------------------

/// Jet-level companion data of a candidate α_−.
pub struct Companions {
    pub alpha: JetForm,
    pub d_alpha: JetForm,
    pub codiff_alpha: JetForm,
    /// α_0 = dα_− / (p+1)
    pub zero: JetForm,
    /// α_∓ = d*α_− / (n−p+1)
    pub cross: JetForm,
    /// α_+ = Box_p α_−
    pub plus: JetForm,
}

/// Box_p: the Bochner branch for n ≠ 2p, the displayed middle-dimensional
/// expression for n = 2p.
pub fn box_p(alpha: &JetForm, ctx: &PointCtx) -> Result<JetForm> {
    let n = ctx.n();
    let p = alpha.degree;
    if p < 0 || p > n as i32 {
        return Ok(JetForm::zero(
            n,
            p,
            crate::expr::JetSpace::get(n, alpha.order().saturating_sub(2)),
        ));
    }
    let lc = ctx.levi_civita();
    if n as i32 != 2 * p {
        let target = alpha.order() - 2;
        let scal = ctx.curv.scal.truncate(target);
        let bochner = lc.bochner(alpha);
        let correction = alpha_truncated(alpha, target)
            .scale_jet(&scal.scale(1.0 / (2.0 * (n as f64 - 1.0))));
        Ok(bochner
            .sub(&correction)
            .scale(1.0 / (n as f64 - 2.0 * p as f64)))
    } else {
        // (1/n) [ (1/(p+1)) (d*d − dd*) α
        //         + Σ ε_i ( s_i ⨼ (K(s_i)^♭ ∧ α) − s_i^♭ ∧ (K(s_i) ⨼ α) ) ]
        let dstar_d = lc.codiff(&alpha.d());
        let d_dstar = lc.codiff(alpha).d();
        let mut acc = dstar_d
            .sub(&d_dstar)
            .scale(1.0 / (p as f64 + 1.0));
        let target = acc.order();
        let k = ctx.curv.schouten()?;
        let alpha_t = alpha_truncated(alpha, target);
        // Σ ε_i s_i ⨼ (K(s_i)^♭ ∧ α) = g^{ab} e_a ⨼ (K_{b·} ∧ α)
        for a in 0..n {
            let mut ea = vec![0.0; n];
            ea[a] = 1.0;
            for b in 0..n {
                let gab = ctx.cp.g_inv_jets.get(&[a, b]).truncate(target);
                if gab.coeffs().iter().all(|&x| x == 0.0) {
                    continue;
                }
                let k_row: Vec<Jet> = (0..n)
                    .map(|c| k.get(&[b, c]).truncate(target))
                    .collect();
                let term = alpha_t.wedge_cov(&k_row).interior_const(&ea);
                acc = acc.add(&term.scale_jet(&gab));
            }
        }
        // Σ ε_i s_i^♭ ∧ (K(s_i) ⨼ α) = Σ_b dx^b ∧ (K(e_b)^♯ ⨼ α)
        for b in 0..n {
            let k_vec: Vec<Jet> = ctx
                .schouten_vec_jets(b)?
                .into_iter()
                .map(|j| j.truncate(target))
                .collect();
            let inner = alpha_t.interior_jet(&k_vec);
            let mut dxb = JetForm::zero(n, 1, crate::expr::JetSpace::get(n, target));
            dxb.c[b] = Jet::constant(crate::expr::JetSpace::get(n, target), 1.0);
            acc = acc.sub(&dxb.wedge(&inner));
        }
        Ok(acc.scale(1.0 / n as f64))
    }
}

fn alpha_truncated(alpha: &JetForm, order: usize) -> JetForm {
    JetForm {
        n: alpha.n,
        degree: alpha.degree,
        c: alpha.c.iter().map(|j| j.truncate(order)).collect(),
        space: crate::expr::JetSpace::get(alpha.n, order),
    }
}

/// Compute the companion components of a candidate at a point.
pub fn companions(alpha_minus: &FormField, ctx: &PointCtx, field_order: usize) -> Result<Companions> {
    let n = ctx.n();
    let p = alpha_minus.degree;
    let alpha = alpha_minus.jets_at(&ctx.cp.point, field_order)?;
    let lc = ctx.levi_civita();
    let d_alpha = alpha.d();
    let codiff_alpha = lc.codiff(&alpha);
    let zero = d_alpha.scale(1.0 / (p as f64 + 1.0));
    let cross = codiff_alpha.scale(1.0 / (n as f64 - p as f64 + 1.0));
    let plus = box_p(&alpha, ctx)?;
    Ok(Companions {
        alpha,
        d_alpha,
        codiff_alpha,
        zero,
        cross,
        plus,
    })
}

/// Assemble α_− with its companions into a jet-level tractor form.
pub fn assemble_tractor(c: &Companions) -> TractorJets {
    TractorJets {
        n: c.alpha.n,
        p: c.alpha.degree,
        minus: c.alpha.clone(),
        zero: c.zero.clone(),
        cross: c.cross.clone(),
        plus: c.plus.clone(),
    }
}

// ---------------------------------------------------------------------------
// Twistor equation residuals
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct PointResiduals {
    pub point: Vec<f64>,
    pub gtw: [f64; 4],
}

#[derive(Clone, Debug, Serialize)]
pub struct TwistorResiduals {
    pub per_point: Vec<PointResiduals>,
    pub max: [f64; 4],
    pub mean: [f64; 4],
}

impl TwistorResiduals {
    fn aggregate(per_point: Vec<PointResiduals>) -> TwistorResiduals {
        let mut max = [0.0f64; 4];
        let mut mean = [0.0f64; 4];
        for pr in &per_point {
            for k in 0..4 {
                max[k] = max[k].max(pr.gtw[k]);
                mean[k] += pr.gtw[k];
            }
        }
        let count = per_point.len().max(1) as f64;
        for m in mean.iter_mut() {
            *m /= count;
        }
        TwistorResiduals {
            per_point,
            max,
            mean,
        }
    }

    pub fn overall_max(&self) -> f64 {
        self.max.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_of_rest(&self) -> f64 {
        self.max[1..].iter().copied().fold(0.0, f64::max)
    }
}

/// Residuals of the four normal twistor equations at one point, one norm per
/// equation (aggregated over the frame directions of X).
pub fn residuals_at(alpha_minus: &FormField, ctx: &PointCtx, field_order: usize) -> Result<[f64; 4]> {
    let n = ctx.n();
    let p = alpha_minus.degree as f64;
    let comp = companions(alpha_minus, ctx, field_order)?;
    let lc = ctx.levi_civita();

    let nabla_alpha: Vec<FormValue> = lc.covd_all(&comp.alpha).iter().map(|f| f.value()).collect();
    let nabla_d: Vec<FormValue> = lc.covd_all(&comp.d_alpha).iter().map(|f| f.value()).collect();
    let nabla_cod: Vec<FormValue> = lc
        .covd_all(&comp.codiff_alpha)
        .iter()
        .map(|f| f.value())
        .collect();
    let nabla_box: Vec<FormValue> = lc.covd_all(&comp.plus).iter().map(|f| f.value()).collect();

    let d_val = comp.d_alpha.value();
    let cod_val = comp.codiff_alpha.value();
    let box_val = comp.plus.value();
    let alpha_val = comp.alpha.value();

    let frame = &ctx.frame;
    let scale = 1.0 + frame_norm(&alpha_val, frame) + frame_norm(&d_val, frame);

    let mut acc = [0.0f64; 4];
    for i in 0..n {
        let x: Vec<f64> = (0..n).map(|a| frame.cols[(a, i)]).collect();
        let x_flat = flat(&ctx.cp, &x);
        let kx = ctx.curv.schouten_endo(&ctx.cp, &x)?;
        let kx_flat = flat(&ctx.cp, &kx);
        let combine = |per_dir: &[FormValue]| -> FormValue {
            let mut out = FormValue::zero(n, per_dir[0].degree);
            for (a, f) in per_dir.iter().enumerate() {
                out = out.add(&f.scale(x[a]));
            }
            out
        };

        let g1 = combine(&nabla_alpha)
            .sub(&interior(&x, &d_val).scale(1.0 / (p + 1.0)))
            .add(&wedge(&x_flat, &cod_val).scale(1.0 / (n as f64 - p + 1.0)));
        let g2 = wedge(&kx_flat, &alpha_val)
            .scale(-1.0)
            .add(&combine(&nabla_d).scale(1.0 / (p + 1.0)))
            .add(&wedge(&x_flat, &box_val));
        let g3 = interior(&kx, &alpha_val)
            .add(&combine(&nabla_cod).scale(1.0 / (n as f64 - p + 1.0)))
            .add(&interior(&x, &box_val));
        let g4 = interior(&kx, &d_val)
            .scale(1.0 / (p + 1.0))
            .add(&wedge(&kx_flat, &cod_val).scale(1.0 / (n as f64 - p + 1.0)))
            .add(&combine(&nabla_box));

        acc[0] += frame_norm(&g1, frame).powi(2);
        acc[1] += frame_norm(&g2, frame).powi(2);
        acc[2] += frame_norm(&g3, frame).powi(2);
        acc[3] += frame_norm(&g4, frame).powi(2);
    }
    Ok([
        acc[0].sqrt() / scale,
        acc[1].sqrt() / scale,
        acc[2].sqrt() / scale,
        acc[3].sqrt() / scale,
    ])
}

/// Residuals of all four equations over the given samples.
pub fn nc_residuals(
    alpha_minus: &FormField,
    spec: &MetricSpec,
    samples: &[Vec<f64>],
    metric_order: usize,
    field_order: usize,
) -> Result<TwistorResiduals> {
    let per_point: Vec<PointResiduals> = samples
        .par_iter()
        .map(|pt| {
            let ctx = PointCtx::new(spec, pt, metric_order)?;
            let gtw = residuals_at(alpha_minus, &ctx, field_order)?;
            Ok(PointResiduals {
                point: pt.clone(),
                gtw,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TwistorResiduals::aggregate(per_point))
}

/// Residual of (Gtw1) alone: the conformal Killing equation.
pub fn ck_residual(
    alpha_minus: &FormField,
    spec: &MetricSpec,
    samples: &[Vec<f64>],
    metric_order: usize,
    field_order: usize,
) -> Result<f64> {
    let res = nc_residuals(alpha_minus, spec, samples, metric_order, field_order)?;
    Ok(res.max[0])
}

/// The two residuals of the nc-Killing function system:
/// Hess(f) − f·K_o and K(X)(f) − (1/n) X(scal·f/(2(n−1))).
pub fn ncfunction_residuals(
    f: &Expr,
    spec: &MetricSpec,
    samples: &[Vec<f64>],
    metric_order: usize,
) -> Result<(f64, f64)> {
    if spec.dim < 3 {
        return Err(Error::Precondition("nc-function check needs n >= 3".into()));
    }
    let n = spec.dim;
    let per: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|pt| {
            let ctx = PointCtx::new(spec, pt, metric_order)?;
            let lc = ctx.levi_civita();
            let fj = FormField::scalar(n, f.clone()).jets_at(pt, 3)?;
            let df = fj.d();
            // Hess as (0,2): ∇_a (df)_b
            let hess: Vec<FormValue> = lc.covd_all(&df).iter().map(|x| x.value()).collect();
            let k = ctx.curv.schouten()?.values();
            let tr_k: f64 = {
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        acc += ctx.cp.g_inv[(a, b)] * k.get(&[a, b]);
                    }
                }
                acc
            };
            let fval = fj.value().c[0];
            let mut r1 = crate::tensor::Tensor::zeros(n, 2);
            for a in 0..n {
                for b in 0..n {
                    let k_o =
                        k.get(&[a, b]) - tr_k / n as f64 * ctx.cp.g[(a, b)];
                    r1.set(&[a, b], hess[a].c[b] - fval * k_o);
                }
            }
            let res1 = r1.frame_norm(&ctx.frame.cols) / (1.0 + fval.abs());

            // second equation, X over frame directions
            let scal = &ctx.curv.scal;
            let mut res2_sq = 0.0;
            for i in 0..n {
                let x: Vec<f64> = (0..n).map(|a| ctx.frame.cols[(a, i)]).collect();
                let kx = ctx.curv.schouten_endo(&ctx.cp, &x)?;
                let kx_f: f64 = (0..n).map(|a| kx[a] * df.value().c[a]).sum();
                let mut x_scal = 0.0;
                let mut x_f = 0.0;
                for (a, &c) in x.iter().enumerate() {
                    x_scal += c * scal.first_partial(a);
                    x_f += c * df.value().c[a];
                }
                let rhs = (fval * x_scal + scal.value() * x_f)
                    / (2.0 * n as f64 * (n as f64 - 1.0));
                res2_sq += (kx_f - rhs).powi(2);
            }
            let res2 = res2_sq.sqrt() / (1.0 + fval.abs());
            Ok((res1, res2))
        })
        .collect::<Result<_>>()?;
    let mut out = (0.0f64, 0.0f64);
    for (a, b) in per {
        out.0 = out.0.max(a);
        out.1 = out.1.max(b);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Integrability conditions
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct IntegrabilityReport {
    /// max over samples of the residual of each curvature condition
    pub g17: f64,
    pub g18: f64,
    pub g19: f64,
    pub g20: f64,
    /// the four divergence relations involving (n−4)·C_T and Bach
    pub bach: [f64; 4],
}

/// W(X,Y) and C(X,Y)^♭ for arbitrary coordinate vectors.
fn curv_pair(ctx: &PointCtx, x: &[f64], y: &[f64]) -> Result<(FormValue, FormValue, Vec<f64>)> {
    let n = ctx.n();
    let w = ctx.curv.weyl()?.values();
    let c = ctx.curv.cotton()?.values();
    let mut w2 = FormValue::zero(n, 2);
    {
        let basis = w2.basis_table();
        for (pos, combo) in basis.combos.iter().enumerate() {
            let (k, l) = (combo[0] as usize, combo[1] as usize);
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += w.get(&[a, b, k, l]) * x[a] * y[b];
                }
            }
            w2.c[pos] = acc;
        }
    }
    let mut c1 = FormValue::zero(n, 1);
    for cslot in 0..n {
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                acc += c.get(&[cslot, a, b]) * x[a] * y[b];
            }
        }
        c1.c[cslot] = acc;
    }
    let c_vec = crate::exterior::sharp(&ctx.cp, &c1);
    Ok((w2, c1, c_vec))
}

/// Norms of the (G17)-(G20) conditions and the Bach/divergence set.
pub fn integrability_residuals(
    alpha_minus: &FormField,
    spec: &MetricSpec,
    samples: &[Vec<f64>],
    metric_order: usize,
    field_order: usize,
) -> Result<IntegrabilityReport> {
    let n = spec.dim;
    let p = alpha_minus.degree as f64;
    let per: Vec<[f64; 8]> = samples
        .par_iter()
        .map(|pt| {
            let ctx = PointCtx::new(spec, pt, metric_order)?;
            let comp = companions(alpha_minus, &ctx, field_order)?;
            let alpha = comp.alpha.value();
            let d_alpha = comp.d_alpha.value();
            let cod = comp.codiff_alpha.value();
            let boxa = comp.plus.value();
            let zero = comp.zero.value();
            let cross = comp.cross.value();
            let frame = &ctx.frame;
            let scale = 1.0 + frame_norm(&alpha, frame) + frame_norm(&d_alpha, frame);
            let mut out = [0.0f64; 8];
            // curvature conditions over frame pairs
            for i in 0..n {
                for j in (i + 1)..n {
                    let x: Vec<f64> = (0..n).map(|a| frame.cols[(a, i)]).collect();
                    let y: Vec<f64> = (0..n).map(|a| frame.cols[(a, j)]).collect();
                    let (w2, c1, cvec) = curv_pair(&ctx, &x, &y)?;
                    let wa = |f: &FormValue| two_form_action(&w2, f, &ctx.cp.g_inv);
                    let g17 = wa(&alpha);
                    let g18 = wa(&d_alpha).sub(&wedge(&c1, &alpha).scale(p + 1.0));
                    let g19 = wa(&cod)
                        .add(&interior(&cvec, &alpha).scale(n as f64 - p + 1.0));
                    let g20 = wa(&boxa)
                        .add(&interior(&cvec, &d_alpha).scale(1.0 / (p + 1.0)))
                        .add(&wedge(&c1, &cod).scale(1.0 / (n as f64 - p + 1.0)));
                    out[0] += frame_norm(&g17, frame).powi(2);
                    out[1] += frame_norm(&g18, frame).powi(2);
                    out[2] += frame_norm(&g19, frame).powi(2);
                    out[3] += frame_norm(&g20, frame).powi(2);
                }
            }
            // Bach / divergence set over frame directions T
            let b = ctx.curv.bach()?.values();
            let c = ctx.curv.cotton()?.values();
            let nm4 = n as f64 - 4.0;
            for i in 0..n {
                let t: Vec<f64> = (0..n).map(|a| frame.cols[(a, i)]).collect();
                // C_T as a 2-form and B(T) as covector/vector
                let mut ct = FormValue::zero(n, 2);
                {
                    let basis = ct.basis_table();
                    for (pos, combo) in basis.combos.iter().enumerate() {
                        let (bb, cc) = (combo[0] as usize, combo[1] as usize);
                        let mut acc = 0.0;
                        for a in 0..n {
                            acc += c.get(&[a, bb, cc]) * t[a];
                        }
                        ct.c[pos] = acc;
                    }
                }
                let mut bt = FormValue::zero(n, 1);
                for cc in 0..n {
                    let mut accv = 0.0;
                    for a in 0..n {
                        accv += b.get(&[a, cc]) * t[a];
                    }
                    bt.c[cc] = accv;
                }
                let bt_vec = crate::exterior::sharp(&ctx.cp, &bt);
                let ca = |f: &FormValue| two_form_action(&ct, f, &ctx.cp.g_inv).scale(nm4);
                let r1 = ca(&alpha);
                let r2 = ca(&zero).add(&wedge(&bt, &alpha));
                let r3 = ca(&cross).sub(&interior(&bt_vec, &alpha));
                let r4 = ca(&boxa)
                    .sub(&interior(&bt_vec, &zero))
                    .sub(&wedge(&bt, &cross));
                out[4] += frame_norm(&r1, frame).powi(2);
                out[5] += frame_norm(&r2, frame).powi(2);
                out[6] += frame_norm(&r3, frame).powi(2);
                out[7] += frame_norm(&r4, frame).powi(2);
            }
            for o in out.iter_mut() {
                *o = o.sqrt() / scale;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut agg = [0.0f64; 8];
    for row in &per {
        for k in 0..8 {
            agg[k] = agg[k].max(row[k]);
        }
    }
    Ok(IntegrabilityReport {
        g17: agg[0],
        g18: agg[1],
        g19: agg[2],
        g20: agg[3],
        bach: [agg[4], agg[5], agg[6], agg[7]],
    })
}

// ---------------------------------------------------------------------------
// Scaling / decomposability detection
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    /// max over samples of max over basis v of ‖(ι_v α)∧α‖ / ‖α‖²
    pub plucker_residual: f64,
    pub decomposable: bool,
    /// best-fit A with dα = A^♭ ∧ α: per-sample vectors and overall residual
    pub a_samples: Vec<Vec<f64>>,
    pub a_residual: f64,
    /// best-fit B with d*α = B ⨼ α
    pub b_samples: Vec<Vec<f64>>,
    pub b_residual: f64,
    /// finite-difference norm of d(A^♭): small when A is closed (parallel
    /// scaling criterion)
    pub d_a_flat_norm: f64,
    /// causal type of α at the samples: g(α,α) values and labels
    pub causal_values: Vec<f64>,
    pub causal_label: String,
    /// samples skipped because ‖α‖ was numerically zero
    pub skipped: usize,
}

const SV_CUTOFF: f64 = 1e-10;

fn lsq_solve(columns: &[Vec<f64>], rhs: &[f64]) -> (Vec<f64>, f64) {
    let rows = rhs.len();
    let cols = columns.len();
    let a = DMatrix::from_fn(rows, cols, |i, j| columns[j][i]);
    let b = DVector::from_column_slice(rhs);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let sol = svd
        .solve(&b, SV_CUTOFF * smax.max(1e-300))
        .expect("svd solve");
    let res = (&a * &sol - &b).norm();
    (sol.iter().copied().collect(), res)
}

/// Solve dα = A^♭∧α at one point; returns (A vector, relative residual).
fn solve_a(ctx: &PointCtx, alpha: &FormValue, d_alpha: &FormValue) -> (Vec<f64>, f64) {
    let n = ctx.n();
    // unknown: covector components w_a; columns: dx^a ∧ α
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let mut dxa = FormValue::zero(n, 1);
            dxa.c[a] = 1.0;
            wedge(&dxa, alpha).c
        })
        .collect();
    let (w, res) = lsq_solve(&columns, &d_alpha.c);
    let a_vec = crate::exterior::sharp(
        &ctx.cp,
        &FormValue {
            n,
            degree: 1,
            c: w,
        },
    );
    (a_vec, res / (1.0 + d_alpha.coord_norm()))
}

fn solve_b(ctx: &PointCtx, alpha: &FormValue, cod_alpha: &FormValue) -> (Vec<f64>, f64) {
    let n = ctx.n();
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let mut ea = vec![0.0; n];
            ea[a] = 1.0;
            interior(&ea, alpha).c
        })
        .collect();
    let (b_vec, res) = lsq_solve(&columns, &cod_alpha.c);
    (b_vec, res / (1.0 + cod_alpha.coord_norm()))
}

/// Plücker decomposability residual: max over coordinate directions v of
/// ‖(ι_v α) ∧ α‖ / ‖α‖². Zero exactly for decomposable forms.
pub fn plucker_residual(alpha: &FormValue) -> f64 {
    let n = alpha.n;
    let norm2 = alpha.coord_norm().powi(2);
    if norm2 == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for a in 0..n {
        let mut ea = vec![0.0; n];
        ea[a] = 1.0;
        let r = wedge(&interior(&ea, alpha), alpha).coord_norm() / norm2;
        worst = worst.max(r);
    }
    worst
}

pub fn scaling_detect(
    alpha_minus: &FormField,
    spec: &MetricSpec,
    samples: &[Vec<f64>],
    metric_order: usize,
) -> Result<ScalingReport> {
    if alpha_minus.degree < 1 {
        return Err(Error::Precondition(
            "scaling detection needs a form of degree >= 1".into(),
        ));
    }
    let n = spec.dim;
    let mut plucker = 0.0f64;
    let mut a_samples = Vec::new();
    let mut b_samples = Vec::new();
    let mut a_res = 0.0f64;
    let mut b_res = 0.0f64;
    let mut d_a_norm = 0.0f64;
    let mut causal_values = Vec::new();
    let mut skipped = 0usize;

    let solve_a_at = |pt: &[f64]| -> Result<Option<(Vec<f64>, f64)>> {
        let ctx = PointCtx::new(spec, pt, metric_order)?;
        let comp = companions(alpha_minus, &ctx, 2)?;
        let alpha = comp.alpha.value();
        if alpha.coord_norm() < 1e-12 {
            return Ok(None);
        }
        Ok(Some(solve_a(&ctx, &alpha, &comp.d_alpha.value())))
    };

    for pt in samples {
        let ctx = PointCtx::new(spec, pt, metric_order)?;
        let comp = companions(alpha_minus, &ctx, 2)?;
        let alpha = comp.alpha.value();
        if alpha.coord_norm() < 1e-12 {
            skipped += 1;
            continue;
        }
        plucker = plucker.max(plucker_residual(&alpha));
        let (a_vec, ra) = solve_a(&ctx, &alpha, &comp.d_alpha.value());
        let (b_vec, rb) = solve_b(&ctx, &alpha, &comp.codiff_alpha.value());
        a_res = a_res.max(ra);
        b_res = b_res.max(rb);

        // closedness of A^♭ by central differences of the per-point solve
        let h = 1e-3;
        let mut da_max = 0.0f64;
        let a_flat_at = |q: &[f64]| -> Result<Option<Vec<f64>>> {
            Ok(solve_a_at(q)?.map(|(av, _)| {
                let cq = spec.metric_at(q, 0).expect("admissible");
                flat(&cq, &av).c
            }))
        };
        let mut ok = true;
        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(n);
        for a in 0..n {
            let mut plus_q = pt.clone();
            plus_q[a] += h;
            let mut minus_q = pt.clone();
            minus_q[a] -= h;
            match (a_flat_at(&plus_q)?, a_flat_at(&minus_q)?) {
                (Some(fp), Some(fm)) => {
                    grads.push(
                        fp.iter()
                            .zip(&fm)
                            .map(|(x, y)| (x - y) / (2.0 * h))
                            .collect(),
                    );
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            for a in 0..n {
                for b in 0..n {
                    da_max = da_max.max((grads[a][b] - grads[b][a]).abs());
                }
            }
            d_a_norm = d_a_norm.max(da_max);
        }

        causal_values.push(crate::exterior::inner(&alpha, &alpha, &ctx.frame));
        a_samples.push(a_vec);
        b_samples.push(b_vec);
    }

    let causal_label = causal_label(&causal_values);
    Ok(ScalingReport {
        plucker_residual: plucker,
        decomposable: plucker < 1e-7,
        a_samples,
        a_residual: a_res,
        b_samples,
        b_residual: b_res,
        d_a_flat_norm: d_a_norm,
        causal_values,
        causal_label,
        skipped,
    })
}

fn causal_label(values: &[f64]) -> String {
    let tol = 1e-9;
    let all_pos = values.iter().all(|&v| v > tol);
    let all_neg = values.iter().all(|&v| v < -tol);
    let all_null = values.iter().all(|&v| v.abs() <= tol);
    if values.is_empty() {
        "unknown".into()
    } else if all_null {
        "null".into()
    } else if all_pos {
        "spacelike".into()
    } else if all_neg {
        "timelike".into()
    } else {
        "mixed".into()
    }
}

/// Verdict classification against a threshold.
pub fn verdict(res: &TwistorResiduals, tol: f64) -> &'static str {
    if res.overall_max() < tol {
        "normal"
    } else if res.max[0] < tol {
        "conformal-only"
    } else {
        "neither"
    }
}
