//! The standard tractor bundle in the metric splitting: degree-(p+1) tractor
//! forms as quadruples (α_−, α_0, α_∓, α_+), the so(r+1,s+1) action on them,
//! the normal conformal covariant derivative with its curvature, and the
//! tractor Hodge operator.
//!
//! Matrices act on tractor vectors in the ordered basis (e_−, e_1..e_n, e_+)
//! with ⟨e_−,e_+⟩ = 1 and ⟨e_i,e_j⟩ = ε_i δ_ij; the 𝔤_± parts are then
//! strictly triangular blocks. Quadruple components carry coordinate-basis
//! form coefficients; frame bases enter only at the matrix boundary.

use crate::chart::{frame_jets, ChartPoint, Frame, FrameJets, MetricSpec};
use crate::curvature::{endo_action, two_form_action, CurvatureJets};
use crate::error::Result;
use crate::expr::{Jet, JetSpace};
use crate::exterior::{
    flat, frame_norm, hodge, hodge_jet, interior, wedge, FormField, FormValue, JetForm,
    LeviCivita,
};
use nalgebra::{DMatrix, DVector};

/// Everything pointwise computations need at one chart point.
pub struct PointCtx {
    pub cp: ChartPoint,
    pub curv: CurvatureJets,
    pub frame: Frame,
    pub frame_jets: FrameJets,
}

impl PointCtx {
    pub fn new(spec: &MetricSpec, point: &[f64], order: usize) -> Result<PointCtx> {
        let cp = spec.metric_at(point, order)?;
        let curv = CurvatureJets::new(&cp)?;
        let fj = frame_jets(&cp)?;
        let frame = fj.frame();
        Ok(PointCtx {
            cp,
            curv,
            frame,
            frame_jets: fj,
        })
    }

    pub fn levi_civita(&self) -> LeviCivita<'_> {
        LeviCivita {
            cp: &self.cp,
            gamma: &self.curv.gamma,
        }
    }

    pub fn n(&self) -> usize {
        self.cp.n
    }

    /// Schouten endomorphism row as jets: K(∂_a)^c = g^{cb} K_{ab}.
    pub fn schouten_vec_jets(&self, a: usize) -> Result<Vec<Jet>> {
        let n = self.cp.n;
        let k = self.curv.schouten()?;
        let target = k.order();
        let ginv = &self.cp.g_inv_jets;
        let mut out = Vec::with_capacity(n);
        for c in 0..n {
            let mut acc = Jet::constant(JetSpace::get(n, target), 0.0);
            for b in 0..n {
                acc = acc.add(&ginv.get(&[c, b]).truncate(target).mul(k.get(&[a, b])));
            }
            out.push(acc);
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Tractor forms
// ---------------------------------------------------------------------------

/// Pointwise tractor (p+1)-form in the metric splitting.
#[derive(Clone, Debug)]
pub struct TractorForm {
    pub n: usize,
    /// degree of α_−; the tractor form itself has degree p+1
    pub p: i32,
    pub minus: FormValue,
    pub zero: FormValue,
    pub cross: FormValue,
    pub plus: FormValue,
}

impl TractorForm {
    pub fn new(
        p: i32,
        minus: FormValue,
        zero: FormValue,
        cross: FormValue,
        plus: FormValue,
    ) -> TractorForm {
        let n = minus.n;
        assert_eq!(minus.degree, p);
        assert_eq!(zero.degree, p + 1);
        assert_eq!(cross.degree, p - 1);
        assert_eq!(plus.degree, p);
        TractorForm {
            n,
            p,
            minus,
            zero,
            cross,
            plus,
        }
    }

    pub fn zero_form(n: usize, p: i32) -> TractorForm {
        TractorForm {
            n,
            p,
            minus: FormValue::zero(n, p),
            zero: FormValue::zero(n, p + 1),
            cross: FormValue::zero(n, p - 1),
            plus: FormValue::zero(n, p),
        }
    }

    pub fn add(&self, o: &TractorForm) -> TractorForm {
        TractorForm {
            n: self.n,
            p: self.p,
            minus: self.minus.add(&o.minus),
            zero: self.zero.add(&o.zero),
            cross: self.cross.add(&o.cross),
            plus: self.plus.add(&o.plus),
        }
    }

    pub fn sub(&self, o: &TractorForm) -> TractorForm {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> TractorForm {
        TractorForm {
            n: self.n,
            p: self.p,
            minus: self.minus.scale(s),
            zero: self.zero.scale(s),
            cross: self.cross.scale(s),
            plus: self.plus.scale(s),
        }
    }

    /// Positive-definite norm through frame components of all four parts.
    pub fn frame_norm(&self, frame: &Frame) -> f64 {
        (frame_norm(&self.minus, frame).powi(2)
            + frame_norm(&self.zero, frame).powi(2)
            + frame_norm(&self.cross, frame).powi(2)
            + frame_norm(&self.plus, frame).powi(2))
        .sqrt()
    }
}

/// Jet-valued tractor form (field data at a point).
#[derive(Clone)]
pub struct TractorJets {
    pub n: usize,
    pub p: i32,
    pub minus: JetForm,
    pub zero: JetForm,
    pub cross: JetForm,
    pub plus: JetForm,
}

impl TractorJets {
    pub fn value(&self) -> TractorForm {
        TractorForm {
            n: self.n,
            p: self.p,
            minus: self.minus.value(),
            zero: self.zero.value(),
            cross: self.cross.value(),
            plus: self.plus.value(),
        }
    }

    pub fn order(&self) -> usize {
        self.minus.order()
    }

    pub fn sub(&self, o: &TractorJets) -> TractorJets {
        TractorJets {
            n: self.n,
            p: self.p,
            minus: self.minus.sub(&o.minus),
            zero: self.zero.sub(&o.zero),
            cross: self.cross.sub(&o.cross),
            plus: self.plus.sub(&o.plus),
        }
    }
}

/// Expression-valued tractor form field.
#[derive(Clone, Debug)]
pub struct TractorFormField {
    pub n: usize,
    pub p: i32,
    pub minus: FormField,
    pub zero: FormField,
    pub cross: FormField,
    pub plus: FormField,
}

impl TractorFormField {
    pub fn jets_at(&self, point: &[f64], order: usize) -> Result<TractorJets> {
        Ok(TractorJets {
            n: self.n,
            p: self.p,
            minus: self.minus.jets_at(point, order)?,
            zero: self.zero.jets_at(point, order)?,
            cross: self.cross.jets_at(point, order)?,
            plus: self.plus.jets_at(point, order)?,
        })
    }
}

// ---------------------------------------------------------------------------
// Normal conformal covariant derivative
// ---------------------------------------------------------------------------

/// ∇^NC along the coordinate direction a, at the jet level (drops one
/// order). The four rows follow the block matrix of the metric splitting.
pub fn nc_derivative_jet(tf: &TractorJets, ctx: &PointCtx, a: usize) -> Result<TractorJets> {
    let n = tf.n;
    let lc = ctx.levi_civita();
    let order = tf.order() - 1;
    // X = ∂_a as constant vector, X^♭ = g_{a·} as jets
    let mut e_a = vec![0.0; n];
    e_a[a] = 1.0;
    let x_flat: Vec<Jet> = (0..n)
        .map(|b| ctx.cp.g_jets.get(&[a, b]).truncate(order))
        .collect();
    let k_flat: Vec<Jet> = {
        let k = ctx.curv.schouten()?;
        (0..n).map(|b| k.get(&[a, b]).truncate(order)).collect()
    };
    let k_vec: Vec<Jet> = ctx
        .schouten_vec_jets(a)?
        .into_iter()
        .map(|j| j.truncate(order))
        .collect();

    let minus = lc
        .covd(&tf.minus, a)
        .sub(&tf.zero.interior_const(&e_a))
        .add(&tf.cross.wedge_cov(&x_flat));
    let zero = lc
        .covd(&tf.zero, a)
        .sub(&tf.minus.wedge_cov(&k_flat))
        .add(&tf.plus.wedge_cov(&x_flat));
    let cross = lc
        .covd(&tf.cross, a)
        .add(&tf.minus.interior_jet(&k_vec))
        .add(&tf.plus.interior_const(&e_a));
    let plus = lc
        .covd(&tf.plus, a)
        .add(&tf.zero.interior_jet(&k_vec))
        .add(&tf.cross.wedge_cov(&k_flat));

    Ok(TractorJets {
        n,
        p: tf.p,
        minus,
        zero,
        cross,
        plus,
    })
}

/// ∇^NC along an arbitrary constant coordinate vector, value level.
pub fn nc_derivative(tf: &TractorJets, ctx: &PointCtx, x: &[f64]) -> Result<TractorForm> {
    let mut acc: Option<TractorForm> = None;
    for (a, &c) in x.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let term = nc_derivative_jet(tf, ctx, a)?.value().scale(c);
        acc = Some(match acc {
            None => term,
            Some(p) => p.add(&term),
        });
    }
    Ok(acc.unwrap_or_else(|| TractorForm::zero_form(tf.n, tf.p)))
}

/// Norm of ∇^NC over all coordinate directions re-expressed in the frame:
/// sqrt(Σ_i |∇_{s_i}|²).
pub fn nc_derivative_norm(tf: &TractorJets, ctx: &PointCtx) -> Result<f64> {
    let n = tf.n;
    let per_dir: Vec<TractorForm> = (0..n)
        .map(|a| nc_derivative_jet(tf, ctx, a).map(|t| t.value()))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for i in 0..n {
        // ∇_{s_i} = Σ_a (s_i)^a ∇_a
        let mut acc = TractorForm::zero_form(n, tf.p);
        for (a, d) in per_dir.iter().enumerate() {
            acc = acc.add(&d.scale(ctx.frame.cols[(a, i)]));
        }
        total += acc.frame_norm(&ctx.frame).powi(2);
    }
    Ok(total.sqrt())
}

// ---------------------------------------------------------------------------
// so(r+1,s+1) matrices and the algebra action
// ---------------------------------------------------------------------------

/// Skew matrix w.r.t. the tractor metric, basis (e_−, e_1..e_n, e_+).
#[derive(Clone, Debug)]
pub struct TractorEndo {
    pub m: DMatrix<f64>,
}

/// Gram matrix of the tractor metric in the standard basis.
pub fn tractor_metric(eps: &[f64]) -> DMatrix<f64> {
    let n = eps.len();
    let mut g = DMatrix::zeros(n + 2, n + 2);
    g[(0, n + 1)] = 1.0;
    g[(n + 1, 0)] = 1.0;
    for i in 0..n {
        g[(1 + i, 1 + i)] = eps[i];
    }
    g
}

impl TractorEndo {
    pub fn dim(&self) -> usize {
        self.m.nrows() - 2
    }

    /// ‖AᵀG + GA‖ — zero for members of so(r+1,s+1).
    pub fn skew_defect(&self, eps: &[f64]) -> f64 {
        let g = tractor_metric(eps);
        (self.m.transpose() * &g + &g * &self.m).norm()
    }
}

/// Decomposition of a tractor endomorphism into the graded parts, with the
/// middle data pushed to coordinate components through the frame.
pub struct AlgebraParts {
    /// 𝔤_− direction as a coordinate vector.
    pub x: Vec<f64>,
    /// 𝔤_+ direction: coordinate vector and its flat.
    pub y_vec: Vec<f64>,
    pub y_flat: FormValue,
    /// grading component (coefficient of e_−^♭ ∧ e_+^♭).
    pub grading: f64,
    /// so(r,s) part as a coordinate endomorphism.
    pub mid: Vec<Vec<f64>>,
}

pub fn decompose_endo(endo: &TractorEndo, frame: &Frame, cp: &ChartPoint) -> AlgebraParts {
    let n = frame.n();
    let m = &endo.m;
    let x_frame = DVector::from_fn(n, |i, _| m[(1 + i, n + 1)]);
    let y_frame = DVector::from_fn(n, |i, _| m[(1 + i, 0)]);
    let x = &frame.cols * x_frame;
    let y = &frame.cols * y_frame;
    let grading = m[(n + 1, n + 1)];
    let mid_frame = DMatrix::from_fn(n, n, |i, j| m[(1 + i, 1 + j)]);
    let mid_coord = &frame.cols * mid_frame * &frame.inv;
    let x: Vec<f64> = x.iter().copied().collect();
    let y_vec: Vec<f64> = y.iter().copied().collect();
    let y_flat = flat(cp, &y_vec);
    AlgebraParts {
        x,
        y_vec,
        y_flat,
        grading,
        mid: (0..n)
            .map(|i| (0..n).map(|j| mid_coord[(i, j)]).collect())
            .collect(),
    }
}

/// Componentwise action of an so(r+1,s+1) element on a tractor form, per the
/// graded tables of the model representation.
pub fn algebra_action_parts(parts: &AlgebraParts, tf: &TractorForm, cp: &ChartPoint) -> TractorForm {
    let x_flat = flat(cp, &parts.x);
    let l = parts.grading;

    let mid_minus = endo_action(&parts.mid, &tf.minus);
    let mid_zero = endo_action(&parts.mid, &tf.zero);
    let mid_cross = endo_action(&parts.mid, &tf.cross);
    let mid_plus = endo_action(&parts.mid, &tf.plus);

    let minus = interior(&parts.x, &tf.zero)
        .scale(-1.0)
        .add(&wedge(&x_flat, &tf.cross))
        .add(&mid_minus)
        .add(&tf.minus.scale(-l));
    let zero = wedge(&x_flat, &tf.plus)
        .add(&wedge(&parts.y_flat, &tf.minus))
        .add(&mid_zero);
    let cross = interior(&parts.x, &tf.plus)
        .sub(&interior(&parts.y_vec, &tf.minus))
        .add(&mid_cross);
    let plus = interior(&parts.y_vec, &tf.zero)
        .scale(-1.0)
        .sub(&wedge(&parts.y_flat, &tf.cross))
        .add(&mid_plus)
        .add(&tf.plus.scale(l));

    TractorForm {
        n: tf.n,
        p: tf.p,
        minus,
        zero,
        cross,
        plus,
    }
}

/// Action of a tractor-metric-skew matrix on a tractor form.
pub fn algebra_action(
    endo: &TractorEndo,
    tf: &TractorForm,
    frame: &Frame,
    cp: &ChartPoint,
) -> TractorForm {
    let parts = decompose_endo(endo, frame, cp);
    algebra_action_parts(&parts, tf, cp)
}

/// Flat model chart of signature (r, s): constant diag(ε) metric at the
/// origin, identity frame. Used to run the algebra action on the model space
/// ℝ^{r+1,s+1} itself.
pub fn model_context(r: usize, s: usize) -> (ChartPoint, Frame) {
    use crate::expr::Expr;
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
    let spec = MetricSpec::new("model", r, s, (1..=n).map(|i| format!("x{i}")).collect(), g)
        .expect("model chart is valid");
    let cp = spec.metric_at(&vec![0.0; n], 1).expect("model point");
    let frame = crate::chart::orthonormal_coframe(&cp).expect("model frame");
    (cp, frame)
}

// ---------------------------------------------------------------------------
// Connection matrices
// ---------------------------------------------------------------------------

/// The local connection form in the tractor frame basis:
/// ω_NC(X) = ι(e_−^♭∧θ(X)^♭) + ω_LC(X) − ι(e_+^♭∧θ(K(X))^♭), where θ takes
/// frame components and ω_LC is the Levi-Civita connection form of the
/// (jet-smooth) frame field.
pub fn nc_connection_matrix(ctx: &PointCtx, x: &[f64]) -> Result<TractorEndo> {
    let n = ctx.n();
    let frame = &ctx.frame;
    let eps = &frame.eps;
    let theta = frame.components(x);
    let kx = ctx.curv.schouten_endo(&ctx.cp, x)?;
    let theta_k = frame.components(&kx);
    let mut m = DMatrix::zeros(n + 2, n + 2);
    // 𝔤_− part with x = θ(X): e_+ ↦ x, e_j ↦ −ε_j x^j e_−
    for i in 0..n {
        m[(1 + i, n + 1)] += theta[i];
        m[(0, 1 + i)] += -eps[i] * theta[i];
    }
    // 𝔤_+ part with y = −θ(K(X)): e_− ↦ y, e_j ↦ −ε_j y^j e_+
    for i in 0..n {
        m[(1 + i, 0)] += -theta_k[i];
        m[(n + 1, 1 + i)] += eps[i] * theta_k[i];
    }
    // Levi-Civita block: c^k_j(X) = ε_k g(∇_X s_j, s_k) with frame jets
    let gamma = &ctx.curv.gamma;
    for j in 0..n {
        // ∇_X s_j in coordinates
        let mut nab = vec![0.0; n];
        for (a, &xa) in x.iter().enumerate() {
            if xa == 0.0 {
                continue;
            }
            for (b, item) in nab.iter_mut().enumerate() {
                let mut v = ctx.frame_jets.cols[j][b].first_partial(a);
                for c in 0..n {
                    v += gamma.get(&[b, a, c]).value() * ctx.frame_jets.cols[j][c].value();
                }
                *item += xa * v;
            }
        }
        for k in 0..n {
            let sk: Vec<f64> = (0..n).map(|a| frame.cols[(a, k)]).collect();
            let val = eps[k] * ctx.cp.inner_vec(&nab, &sk);
            m[(1 + k, 1 + j)] += val;
        }
    }
    Ok(TractorEndo { m })
}

/// Degree-1 connection coefficient matrices in the coordinate splitting
/// (α_−, α_0 covector components, α_+): Γ^{NC}_a, one per direction. The
/// transport ODE is v' = −Γ^{NC}(γ') v. Needs only order-2 metric jets.
pub fn conn_coord_matrices(cp: &ChartPoint, curv: &CurvatureJets) -> Result<Vec<DMatrix<f64>>> {
    let gamma = curv.gamma.values();
    let k = curv.schouten()?.values();
    Ok(assemble_conn_matrices(cp, &gamma, &k))
}

fn assemble_conn_matrices(
    cp: &ChartPoint,
    gamma: &crate::tensor::Tensor,
    k: &crate::tensor::Tensor,
) -> Vec<DMatrix<f64>> {
    let n = cp.n;
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        let mut m = DMatrix::zeros(n + 2, n + 2);
        for b in 0..n {
            m[(0, 1 + b)] = -if a == b { 1.0 } else { 0.0 };
            m[(1 + b, 0)] = -k.get(&[a, b]);
            m[(1 + b, n + 1)] = cp.g[(a, b)];
            for c in 0..n {
                m[(1 + b, 1 + c)] = -gamma.get(&[c, a, b]);
            }
        }
        for c in 0..n {
            let mut acc = 0.0;
            for d in 0..n {
                acc += cp.g_inv[(c, d)] * k.get(&[a, d]);
            }
            m[(n + 1, 1 + c)] = acc;
        }
        out.push(m);
    }
    out
}

/// Fast transport-path evaluation of the coordinate-splitting connection:
/// value-level Christoffel, Ricci and ρ-tensor straight from order-2 metric
/// jets, skipping the jet-valued curvature stack entirely.
pub fn conn_matrices_fast(spec: &MetricSpec, pt: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    use crate::tensor::Tensor;
    let n = spec.dim;
    let cp = spec.metric_at_unchecked(pt, 2)?;
    // Γ jets at order 1 so ∂Γ values are available
    let target = 1;
    let ginv_t = cp.g_inv_jets.truncate(target);
    let mut gamma_jets: Vec<Jet> = Vec::with_capacity(n * n * n);
    {
        let mut dg_jet: Vec<Jet> = Vec::with_capacity(n * n * n);
        for l in 0..n {
            for a in 0..n {
                for b in 0..n {
                    dg_jet.push(cp.g_jets.get(&[a, b]).derivative(l));
                }
            }
        }
        for kk in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut acc = Jet::constant(JetSpace::get(n, target), 0.0);
                    for l in 0..n {
                        let sum = dg_jet[(a * n + l) * n + b]
                            .add(&dg_jet[(b * n + l) * n + a])
                            .sub(&dg_jet[(l * n + a) * n + b]);
                        acc = acc.add(&ginv_t.get(&[kk, l]).mul(&sum).scale(0.5));
                    }
                    gamma_jets.push(acc);
                }
            }
        }
    }
    let gam = |k: usize, a: usize, b: usize| gamma_jets[(k * n + a) * n + b].value();
    let dgam =
        |d: usize, k: usize, a: usize, b: usize| gamma_jets[(k * n + a) * n + b].first_partial(d);
    // Ricci values: Ric_{ab} = g^{cd} R_{a c d b}, R^m_{ijk} value-level
    let mut ric = Tensor::zeros(n, 2);
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                for d in 0..n {
                    // R_{a c d b} = g_{b m} R^m_{a c d}
                    let mut low = 0.0;
                    for m in 0..n {
                        let mut up = dgam(a, m, c, d) - dgam(c, m, a, d);
                        for q in 0..n {
                            up += gam(m, a, q) * gam(q, c, d) - gam(m, c, q) * gam(q, a, d);
                        }
                        low += cp.g[(b, m)] * up;
                    }
                    acc += cp.g_inv[(c, d)] * low;
                }
            }
            ric.set(&[a, b], acc);
        }
    }
    let mut scal = 0.0;
    for a in 0..n {
        for b in 0..n {
            scal += cp.g_inv[(a, b)] * ric.get(&[a, b]);
        }
    }
    let nf = n as f64;
    let mut k_tensor = Tensor::zeros(n, 2);
    for a in 0..n {
        for b in 0..n {
            k_tensor.set(
                &[a, b],
                (scal / (2.0 * (nf - 1.0)) * cp.g[(a, b)] - ric.get(&[a, b])) / (nf - 2.0),
            );
        }
    }
    let mut gamma_vals = Tensor::zeros(n, 3);
    for kk in 0..n {
        for a in 0..n {
            for b in 0..n {
                gamma_vals.set(&[kk, a, b], gam(kk, a, b));
            }
        }
    }
    Ok(assemble_conn_matrices(&cp, &gamma_vals, &k_tensor))
}

/// Tractor Gram matrix in the coordinate splitting at a point.
pub fn tractor_metric_coord(cp: &ChartPoint) -> DMatrix<f64> {
    let n = cp.n;
    let mut g = DMatrix::zeros(n + 2, n + 2);
    g[(0, n + 1)] = 1.0;
    g[(n + 1, 0)] = 1.0;
    for i in 0..n {
        for j in 0..n {
            g[(1 + i, 1 + j)] = cp.g_inv[(i, j)];
        }
    }
    g
}

/// Basis change from coordinate-splitting components to frame vector
/// components for degree-1 tractors.
pub fn coord_to_frame_matrix(frame: &Frame) -> DMatrix<f64> {
    let n = frame.n();
    let mut f = DMatrix::zeros(n + 2, n + 2);
    f[(0, 0)] = 1.0;
    f[(n + 1, n + 1)] = 1.0;
    for i in 0..n {
        for b in 0..n {
            f[(1 + i, 1 + b)] = frame.eps[i] * frame.cols[(b, i)];
        }
    }
    f
}

// ---------------------------------------------------------------------------
// Tractor curvature
// ---------------------------------------------------------------------------

/// The curvature operator R^∇(X,Y): Weyl on the diagonal, Cotton insertions
/// below it.
pub struct TractorCurvOp {
    pub n: usize,
    /// W(X,Y) as a 2-form.
    pub w: FormValue,
    /// C(X,Y)^♭ as a 1-form.
    pub c_flat: FormValue,
    /// C(X,Y) as a coordinate vector.
    pub c_vec: Vec<f64>,
}

pub fn tractor_curvature(ctx: &PointCtx, x: usize, y: usize) -> Result<TractorCurvOp> {
    let n = ctx.n();
    let w = ctx.curv.weyl_two_form(x, y)?;
    let c_flat = ctx.curv.cotton_one_form(x, y)?;
    let c_vec = crate::exterior::sharp(&ctx.cp, &c_flat);
    Ok(TractorCurvOp {
        n,
        w,
        c_flat,
        c_vec,
    })
}

impl TractorCurvOp {
    pub fn apply(&self, tf: &TractorForm, cp: &ChartPoint) -> TractorForm {
        let w_minus = two_form_action(&self.w, &tf.minus, &cp.g_inv);
        let w_zero = two_form_action(&self.w, &tf.zero, &cp.g_inv);
        let w_cross = two_form_action(&self.w, &tf.cross, &cp.g_inv);
        let w_plus = two_form_action(&self.w, &tf.plus, &cp.g_inv);
        TractorForm {
            n: tf.n,
            p: tf.p,
            minus: w_minus,
            zero: w_zero.sub(&wedge(&self.c_flat, &tf.minus)),
            cross: w_cross.add(&interior(&self.c_vec, &tf.minus)),
            plus: w_plus
                .add(&interior(&self.c_vec, &tf.zero))
                .add(&wedge(&self.c_flat, &tf.cross)),
        }
    }

    /// The operator on degree-1 tractors as a matrix in the frame basis.
    pub fn matrix(&self, ctx: &PointCtx) -> TractorEndo {
        quadruple_op_to_matrix(|tf| self.apply(tf, &ctx.cp), &ctx.frame, ctx.n())
    }
}

// ---------------------------------------------------------------------------
// Tractor Hodge
// ---------------------------------------------------------------------------

/// *_𝔐 against dM_𝔐 = −e_−^♭ ∧ e_+^♭ ∧ dM: component map
/// ((−1)^p *α_−, *α_∓, −*α_0, (−1)^{p+1} *α_+), degree p+1 ↦ n−p+1.
pub fn tractor_hodge(tf: &TractorForm, frame: &Frame) -> TractorForm {
    let n = tf.n;
    let p = tf.p;
    let sp = if p.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    TractorForm {
        n,
        p: n as i32 - p,
        minus: hodge(&tf.minus, frame).scale(sp),
        zero: hodge(&tf.cross, frame),
        cross: hodge(&tf.zero, frame).scale(-1.0),
        plus: hodge(&tf.plus, frame).scale(-sp),
    }
}

/// Jet-level *_𝔐 (coordinate-formula Hodge on each component).
pub fn tractor_hodge_jet(tf: &TractorJets, cp: &ChartPoint) -> TractorJets {
    let n = tf.n;
    let p = tf.p;
    let sp = if p.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    TractorJets {
        n,
        p: n as i32 - p,
        minus: hodge_jet(&tf.minus, cp).scale(sp),
        zero: hodge_jet(&tf.cross, cp),
        cross: hodge_jet(&tf.zero, cp).scale(-1.0),
        plus: hodge_jet(&tf.plus, cp).scale(-sp),
    }
}

// ---------------------------------------------------------------------------
// Degree-1 conversions
// ---------------------------------------------------------------------------

/// Frame vector components (e_−, e_i, e_+) of a degree-1 tractor form via the
/// tractor sharp.
pub fn tractor1_to_vec(tf: &TractorForm, frame: &Frame) -> DVector<f64> {
    assert_eq!(tf.p, 0);
    let n = tf.n;
    let fc = crate::exterior::frame_components(&tf.zero, frame);
    DVector::from_fn(n + 2, |i, _| {
        if i == 0 {
            tf.minus.c[0]
        } else if i == n + 1 {
            tf.plus.c[0]
        } else {
            frame.eps[i - 1] * fc[i - 1]
        }
    })
}

pub fn vec_to_tractor1(v: &DVector<f64>, frame: &Frame) -> TractorForm {
    let n = frame.n();
    let fc: Vec<f64> = (0..n).map(|i| frame.eps[i] * v[1 + i]).collect();
    let zero = crate::exterior::from_frame_components(&fc, n, 1, frame);
    TractorForm {
        n,
        p: 0,
        minus: FormValue::scalar(n, v[0]),
        zero,
        cross: FormValue::zero(n, -1),
        plus: FormValue::scalar(n, v[n + 1]),
    }
}

/// Matrix of a linear operator on degree-1 tractors in the frame basis.
pub fn quadruple_op_to_matrix(
    op: impl Fn(&TractorForm) -> TractorForm,
    frame: &Frame,
    n: usize,
) -> TractorEndo {
    let mut m = DMatrix::zeros(n + 2, n + 2);
    for col in 0..(n + 2) {
        let mut basis = DVector::zeros(n + 2);
        basis[col] = 1.0;
        let tf = vec_to_tractor1(&basis, frame);
        let out = tractor1_to_vec(&op(&tf), frame);
        for row in 0..(n + 2) {
            m[(row, col)] = out[row];
        }
    }
    TractorEndo { m }
}

/// The parallel degree-1 tractor of an Einstein metric:
/// (1, 0, 0, −scal/(2(n−1)n)).
pub fn einstein_tractor(ctx: &PointCtx) -> TractorForm {
    let n = ctx.n();
    let scal = ctx.curv.scal.value();
    let c = -scal / (2.0 * (n as f64 - 1.0) * n as f64);
    TractorForm {
        n,
        p: 0,
        minus: FormValue::scalar(n, 1.0),
        zero: FormValue::zero(n, 1),
        cross: FormValue::zero(n, -1),
        plus: FormValue::scalar(n, c),
    }
}

/// Constant tractor field with the Einstein components, as expressions.
pub fn einstein_tractor_field(spec: &MetricSpec, scal: f64) -> TractorFormField {
    use crate::expr::Expr;
    let n = spec.dim;
    let c = -scal / (2.0 * (n as f64 - 1.0) * n as f64);
    TractorFormField {
        n,
        p: 0,
        minus: FormField::scalar(n, Expr::num(1.0)),
        zero: FormField::zero(n, 1),
        cross: FormField::zero(n, -1),
        plus: FormField::scalar(n, Expr::num(c)),
    }
}
