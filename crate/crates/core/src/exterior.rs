//! Pointwise exterior algebra and field-level operators on differential
//! forms: wedge and interior products, musical isomorphisms, Hodge duality
//! with signature, exterior derivative, codifferential and Levi-Civita
//! covariant derivatives.
//!
//! Forms are stored densely over strictly increasing coordinate multi-indices
//! with the determinant convention `(a ∧ b)(X, Y) = a(X)b(Y) − a(Y)b(X)`.
//! Degrees −1 and n+1 are genuine zero objects so block formulas downstream
//! need no special-casing.

use crate::chart::{ChartPoint, Frame};
use crate::error::Result;
use crate::expr::{Expr, Jet, JetSpace};
use crate::tensor::JetTensor;
use nalgebra::DMatrix;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

// ---------------------------------------------------------------------------
// Basis combinatorics
// ---------------------------------------------------------------------------

/// Index tables for p-forms in dimension n: the list of strictly increasing
/// multi-indices and their positions.
pub struct FormBasis {
    pub n: usize,
    pub p: usize,
    pub combos: Vec<Vec<u8>>,
    rank: HashMap<Vec<u8>, usize>,
}

static BASES: Lazy<Mutex<HashMap<(usize, usize), Arc<FormBasis>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

impl FormBasis {
    pub fn get(n: usize, p: usize) -> Arc<FormBasis> {
        let mut cache = BASES.lock().unwrap();
        cache
            .entry((n, p))
            .or_insert_with(|| {
                let mut combos = Vec::new();
                let mut cur = Vec::new();
                gen_combos(n as u8, p, 0, &mut cur, &mut combos);
                let rank = combos
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (c.clone(), i))
                    .collect();
                Arc::new(FormBasis {
                    n,
                    p,
                    combos,
                    rank,
                })
            })
            .clone()
    }

    pub fn len(&self) -> usize {
        self.combos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.combos.is_empty()
    }

    pub fn rank_of(&self, combo: &[u8]) -> usize {
        self.rank[combo]
    }
}

fn gen_combos(n: u8, p: usize, start: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if cur.len() == p {
        out.push(cur.clone());
        return;
    }
    for v in start..n {
        cur.push(v);
        gen_combos(n, p, v + 1, cur, out);
        cur.pop();
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k.min(n - k) {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Sort indices ascending; returns (sign of the permutation, sorted) or None
/// if an index repeats.
pub fn sort_with_sign(idx: &[u8]) -> Option<(f64, Vec<u8>)> {
    let mut v = idx.to_vec();
    let mut sign = 1.0;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for w in v.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    Some((sign, v))
}

/// Sign of the permutation sorting the concatenation (a, b) where a and b are
/// each ascending and disjoint.
fn merge_sign(a: &[u8], b: &[u8]) -> Option<(f64, Vec<u8>)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut sign = 1.0;
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining a-elements
            if (a.len() - i) % 2 == 1 {
                sign = -sign;
            }
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((sign, out))
}

/// Sign of the shuffle (combo, complement) relative to (1..n).
pub fn complement_sign(combo: &[u8], n: usize) -> (f64, Vec<u8>) {
    let mut comp = Vec::with_capacity(n - combo.len());
    let mut inside = vec![false; n];
    for &c in combo {
        inside[c as usize] = true;
    }
    for v in 0..n as u8 {
        if !inside[v as usize] {
            comp.push(v);
        }
    }
    let (sign, _) = merge_sign(combo, &comp).expect("disjoint by construction");
    (sign, comp)
}

// ---------------------------------------------------------------------------
// FormValue: pointwise forms with f64 coefficients
// ---------------------------------------------------------------------------

/// Antisymmetric coefficient array of fixed degree at a point. Out-of-range
/// degrees are the zero object.
#[derive(Clone, Debug, PartialEq)]
pub struct FormValue {
    pub n: usize,
    pub degree: i32,
    pub c: Vec<f64>,
}

impl FormValue {
    pub fn zero(n: usize, degree: i32) -> FormValue {
        let len = if degree >= 0 && degree <= n as i32 {
            binomial(n, degree as usize)
        } else {
            0
        };
        FormValue {
            n,
            degree,
            c: vec![0.0; len],
        }
    }

    pub fn from_coeffs(n: usize, degree: i32, c: Vec<f64>) -> FormValue {
        let f = FormValue::zero(n, degree);
        assert_eq!(f.c.len(), c.len(), "coefficient count mismatch");
        FormValue { n, degree, c }
    }

    pub fn scalar(n: usize, v: f64) -> FormValue {
        FormValue {
            n,
            degree: 0,
            c: vec![v],
        }
    }

    /// Basis form dx^{i1} ∧ ... ∧ dx^{ip} (0-based indices, ascending).
    pub fn basis(n: usize, combo: &[u8]) -> FormValue {
        let mut f = FormValue::zero(n, combo.len() as i32);
        let b = FormBasis::get(n, combo.len());
        f.c[b.rank_of(combo)] = 1.0;
        f
    }

    pub fn is_zero_object(&self) -> bool {
        self.c.is_empty()
    }

    pub fn basis_table(&self) -> Arc<FormBasis> {
        FormBasis::get(self.n, self.degree.clamp(0, self.n as i32) as usize)
    }

    pub fn add(&self, other: &FormValue) -> FormValue {
        assert_eq!(self.degree, other.degree);
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&other.c) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &FormValue) -> FormValue {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> FormValue {
        let mut out = self.clone();
        for a in out.c.iter_mut() {
            *a *= s;
        }
        out
    }

    /// Coefficient for an arbitrary (possibly unsorted) index tuple.
    pub fn coeff(&self, idx: &[u8]) -> f64 {
        if idx.len() as i32 != self.degree {
            return 0.0;
        }
        match sort_with_sign(idx) {
            None => 0.0,
            Some((sign, sorted)) => {
                let b = self.basis_table();
                sign * self.c[b.rank_of(&sorted)]
            }
        }
    }

    pub fn coord_norm(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Wedge product, graded commutative.
pub fn wedge(a: &FormValue, b: &FormValue) -> FormValue {
    assert_eq!(a.n, b.n, "wedge of forms on different charts");
    let degree = a.degree + b.degree;
    let mut out = FormValue::zero(a.n, degree);
    if a.is_zero_object() || b.is_zero_object() || out.is_zero_object() {
        return out;
    }
    let ba = a.basis_table();
    let bb = b.basis_table();
    let bo = out.basis_table();
    for (ia, ca) in a.c.iter().enumerate() {
        if *ca == 0.0 {
            continue;
        }
        for (ib, cb) in b.c.iter().enumerate() {
            if *cb == 0.0 {
                continue;
            }
            if let Some((sign, merged)) = merge_sign(&ba.combos[ia], &bb.combos[ib]) {
                out.c[bo.rank_of(&merged)] += sign * ca * cb;
            }
        }
    }
    out
}

/// Interior product ι_v with a coordinate vector.
pub fn interior(v: &[f64], a: &FormValue) -> FormValue {
    let mut out = FormValue::zero(a.n, a.degree - 1);
    if a.is_zero_object() || out.is_zero_object() {
        return out;
    }
    let ba = a.basis_table();
    let bo = out.basis_table();
    for (ia, ca) in a.c.iter().enumerate() {
        if *ca == 0.0 {
            continue;
        }
        let combo = &ba.combos[ia];
        for (slot, &var) in combo.iter().enumerate() {
            let comp = v[var as usize];
            if comp == 0.0 {
                continue;
            }
            let sign = if slot % 2 == 0 { 1.0 } else { -1.0 };
            let mut rest = combo.clone();
            rest.remove(slot);
            out.c[bo.rank_of(&rest)] += sign * comp * ca;
        }
    }
    out
}

/// Lower an index: X ↦ g(X, ·) as a 1-form.
pub fn flat(cp: &ChartPoint, v: &[f64]) -> FormValue {
    let n = cp.n;
    let mut c = vec![0.0; n];
    for (b, item) in c.iter_mut().enumerate() {
        for a in 0..n {
            *item += cp.g[(a, b)] * v[a];
        }
    }
    FormValue {
        n,
        degree: 1,
        c,
    }
}

/// Raise an index: 1-form ↦ vector.
pub fn sharp(cp: &ChartPoint, w: &FormValue) -> Vec<f64> {
    assert_eq!(w.degree, 1);
    let n = cp.n;
    let mut v = vec![0.0; n];
    for (a, item) in v.iter_mut().enumerate() {
        for b in 0..n {
            *item += cp.g_inv[(a, b)] * w.c[b];
        }
    }
    v
}

/// Components of a form with every slot evaluated on frame vectors:
/// a_K = α(s_{k1}, ..., s_{kp}).
pub fn frame_components(a: &FormValue, frame: &Frame) -> Vec<f64> {
    transform_form(&a.c, a.n, a.degree, &frame.cols)
}

/// Inverse of [`frame_components`]: minor rows are frame indices, columns
/// coordinate indices, i.e. the transition matrix is σ^k(∂_a) = inv[(k, a)].
pub fn from_frame_components(c: &[f64], n: usize, degree: i32, frame: &Frame) -> FormValue {
    let out = transform_form(c, n, degree, &frame.inv);
    FormValue {
        n,
        degree,
        c: out,
    }
}

/// Apply Λ^p of a linear map: out_B = Σ_A in_A det(T[A, B]), with minor rows
/// indexed by the input combo and columns by the output combo.
fn transform_form(c: &[f64], n: usize, degree: i32, t: &DMatrix<f64>) -> Vec<f64> {
    if degree < 0 || degree > n as i32 {
        return Vec::new();
    }
    let p = degree as usize;
    let basis = FormBasis::get(n, p);
    let mut out = vec![0.0; basis.len()];
    for (ob, combo_b) in basis.combos.iter().enumerate() {
        let mut acc = 0.0;
        for (ia, ca) in c.iter().enumerate() {
            if *ca == 0.0 {
                continue;
            }
            let combo_a = &basis.combos[ia];
            let minor = DMatrix::from_fn(p, p, |x, y| {
                t[(combo_a[x] as usize, combo_b[y] as usize)]
            });
            let d = if p == 0 { 1.0 } else { minor.lu().determinant() };
            acc += ca * d;
        }
        out[ob] = acc;
    }
    out
}

/// Indefinite inner product g(α, β) on p-forms via frame components.
pub fn inner(a: &FormValue, b: &FormValue, frame: &Frame) -> f64 {
    assert_eq!(a.degree, b.degree);
    if a.is_zero_object() {
        return 0.0;
    }
    let fa = frame_components(a, frame);
    let fb = frame_components(b, frame);
    let basis = a.basis_table();
    let mut acc = 0.0;
    for (i, combo) in basis.combos.iter().enumerate() {
        let eps: f64 = combo.iter().map(|&k| frame.eps[k as usize]).product();
        acc += eps * fa[i] * fb[i];
    }
    acc
}

/// Positive-definite norm: Euclidean norm of the frame components.
pub fn frame_norm(a: &FormValue, frame: &Frame) -> f64 {
    if a.is_zero_object() {
        return 0.0;
    }
    frame_components(a, frame)
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

/// Hodge star against the oriented frame: defined by α ∧ *α = g(α, α) dM.
pub fn hodge(a: &FormValue, frame: &Frame) -> FormValue {
    let n = a.n;
    if a.degree < 0 || a.degree > n as i32 {
        return FormValue::zero(n, n as i32 - a.degree);
    }
    let p = a.degree as usize;
    let fc = frame_components(a, frame);
    let basis = FormBasis::get(n, p);
    let out_basis = FormBasis::get(n, n - p);
    let mut out = vec![0.0; out_basis.len()];
    for (i, combo) in basis.combos.iter().enumerate() {
        if fc[i] == 0.0 {
            continue;
        }
        let eps: f64 = combo.iter().map(|&k| frame.eps[k as usize]).product();
        let (sign, comp) = complement_sign(combo, n);
        out[out_basis.rank_of(&comp)] += eps * sign * fc[i];
    }
    from_frame_components(&out, n, (n - p) as i32, frame)
}

/// Volume form dM of the oriented frame.
pub fn volume_form(cp: &ChartPoint, frame: &Frame) -> FormValue {
    hodge(&FormValue::scalar(cp.n, 1.0), frame)
}

// ---------------------------------------------------------------------------
// FormField: expression-valued coefficients
// ---------------------------------------------------------------------------

/// A differential form with one coefficient expression per ascending
/// multi-index.
#[derive(Clone, Debug)]
pub struct FormField {
    pub n: usize,
    pub degree: i32,
    pub coeffs: Vec<Expr>,
}

impl FormField {
    pub fn zero(n: usize, degree: i32) -> FormField {
        let len = if degree >= 0 && degree <= n as i32 {
            binomial(n, degree as usize)
        } else {
            0
        };
        FormField {
            n,
            degree,
            coeffs: vec![Expr::num(0.0); len],
        }
    }

    pub fn basis_table(&self) -> Arc<FormBasis> {
        FormBasis::get(self.n, self.degree.clamp(0, self.n as i32) as usize)
    }

    pub fn scalar(n: usize, e: Expr) -> FormField {
        FormField {
            n,
            degree: 0,
            coeffs: vec![e],
        }
    }

    /// Set the coefficient of dx^{combo} (0-based ascending combo).
    pub fn set(&mut self, combo: &[u8], e: Expr) {
        let b = self.basis_table();
        self.coeffs[b.rank_of(combo)] = e;
    }

    pub fn value_at(&self, point: &[f64]) -> Result<FormValue> {
        let mut out = FormValue::zero(self.n, self.degree);
        for (i, e) in self.coeffs.iter().enumerate() {
            out.c[i] = e.eval(point)?;
        }
        Ok(out)
    }

    pub fn jets_at(&self, point: &[f64], order: usize) -> Result<JetForm> {
        let space = JetSpace::get(self.n, order);
        let mut c = Vec::with_capacity(self.coeffs.len());
        for e in &self.coeffs {
            c.push(e.eval_jet_in(point, &space)?);
        }
        Ok(JetForm {
            n: self.n,
            degree: self.degree,
            c,
            space,
        })
    }

    /// Scale every coefficient by an expression factor.
    pub fn scale_expr(&self, f: &Expr) -> FormField {
        FormField {
            n: self.n,
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .map(|e| Expr::mul(f.clone(), e.clone()))
                .collect(),
        }
    }

    /// Symbolic exterior derivative.
    pub fn d(&self) -> FormField {
        let n = self.n;
        let mut out = FormField::zero(n, self.degree + 1);
        if self.degree < 0 || self.degree + 1 > n as i32 {
            return out;
        }
        let ob = out.basis_table();
        let ib = self.basis_table();
        for (oi, combo) in ob.combos.iter().enumerate() {
            let mut terms: Option<Expr> = None;
            for (slot, &var) in combo.iter().enumerate() {
                let mut rest = combo.clone();
                rest.remove(slot);
                let coeff = &self.coeffs[ib.rank_of(&rest)];
                let term = coeff.diff(var as usize);
                let signed = if slot % 2 == 0 {
                    term
                } else {
                    Expr::neg(term)
                };
                terms = Some(match terms {
                    None => signed,
                    Some(acc) => Expr::add(acc, signed),
                });
            }
            out.coeffs[oi] = terms.unwrap_or(Expr::num(0.0));
        }
        out
    }

    /// Remap to a bigger chart: variable indices shift by `offset`, the form
    /// indices as well.
    pub fn embed(&self, new_n: usize, offset: usize) -> FormField {
        let mut out = FormField::zero(new_n, self.degree);
        if self.degree < 0 {
            return out;
        }
        let ib = self.basis_table();
        let ob = out.basis_table();
        for (i, e) in self.coeffs.iter().enumerate() {
            let combo: Vec<u8> = ib.combos[i].iter().map(|&v| v + offset as u8).collect();
            out.coeffs[ob.rank_of(&combo)] = e.shift_vars(offset);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// JetForm: jet-valued coefficients (the field-level workhorse)
// ---------------------------------------------------------------------------

/// A form whose coefficients are jets at a common point; supports the
/// derivative operators so composite fields (dα, d*α, ∇α, Box α) remain
/// differentiable.
#[derive(Clone)]
pub struct JetForm {
    pub n: usize,
    pub degree: i32,
    pub c: Vec<Jet>,
    pub space: Arc<JetSpace>,
}

impl JetForm {
    pub fn zero(n: usize, degree: i32, space: Arc<JetSpace>) -> JetForm {
        let len = if degree >= 0 && degree <= n as i32 {
            binomial(n, degree as usize)
        } else {
            0
        };
        JetForm {
            n,
            degree,
            c: vec![Jet::constant(space.clone(), 0.0); len],
            space,
        }
    }

    pub fn order(&self) -> usize {
        self.space.order()
    }

    pub fn is_zero_object(&self) -> bool {
        self.c.is_empty()
    }

    pub fn basis_table(&self) -> Arc<FormBasis> {
        FormBasis::get(self.n, self.degree.clamp(0, self.n as i32) as usize)
    }

    pub fn value(&self) -> FormValue {
        FormValue {
            n: self.n,
            degree: self.degree,
            c: self.c.iter().map(|j| j.value()).collect(),
        }
    }

    pub fn add(&self, other: &JetForm) -> JetForm {
        assert_eq!(self.degree, other.degree);
        let space = if self.order() <= other.order() {
            self.space.clone()
        } else {
            other.space.clone()
        };
        JetForm {
            n: self.n,
            degree: self.degree,
            c: self
                .c
                .iter()
                .zip(&other.c)
                .map(|(a, b)| a.add(b))
                .collect(),
            space,
        }
    }

    pub fn sub(&self, other: &JetForm) -> JetForm {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> JetForm {
        JetForm {
            n: self.n,
            degree: self.degree,
            c: self.c.iter().map(|j| j.scale(s)).collect(),
            space: self.space.clone(),
        }
    }

    pub fn scale_jet(&self, s: &Jet) -> JetForm {
        let c: Vec<Jet> = self.c.iter().map(|j| j.mul(s)).collect();
        let space = if let Some(first) = c.first() {
            first.space().clone()
        } else if s.order() < self.order() {
            JetSpace::get(self.n, s.order())
        } else {
            self.space.clone()
        };
        JetForm {
            n: self.n,
            degree: self.degree,
            c,
            space,
        }
    }

    /// Coefficient jet for an arbitrary index tuple (zero jet if repeated).
    pub fn coeff(&self, idx: &[u8]) -> Jet {
        if idx.len() as i32 != self.degree {
            return Jet::constant(self.space.clone(), 0.0);
        }
        match sort_with_sign(idx) {
            None => Jet::constant(self.space.clone(), 0.0),
            Some((sign, sorted)) => {
                let b = self.basis_table();
                self.c[b.rank_of(&sorted)].scale(sign)
            }
        }
    }

    /// Exterior derivative; drops one jet order.
    pub fn d(&self) -> JetForm {
        let n = self.n;
        let space = JetSpace::get(n, self.order() - 1);
        let mut out = JetForm::zero(n, self.degree + 1, space);
        if self.degree < 0 || self.degree + 1 > n as i32 || self.is_zero_object() {
            return out;
        }
        let ob = out.basis_table();
        let ib = self.basis_table();
        for (oi, combo) in ob.combos.iter().enumerate() {
            let mut acc = out.c[oi].clone();
            for (slot, &var) in combo.iter().enumerate() {
                let mut rest = combo.clone();
                rest.remove(slot);
                let term = self.c[ib.rank_of(&rest)].derivative(var as usize);
                acc = if slot % 2 == 0 {
                    acc.add(&term)
                } else {
                    acc.sub(&term)
                };
            }
            out.c[oi] = acc;
        }
        out
    }

    /// Interior product with a constant coordinate vector.
    pub fn interior_const(&self, v: &[f64]) -> JetForm {
        let mut out = JetForm::zero(self.n, self.degree - 1, self.space.clone());
        if self.is_zero_object() || out.is_zero_object() {
            return out;
        }
        let ib = self.basis_table();
        let ob = out.basis_table();
        for (i, cj) in self.c.iter().enumerate() {
            let combo = &ib.combos[i];
            for (slot, &var) in combo.iter().enumerate() {
                let comp = v[var as usize];
                if comp == 0.0 {
                    continue;
                }
                let sign = if slot % 2 == 0 { comp } else { -comp };
                let mut rest = combo.clone();
                rest.remove(slot);
                let r = ob.rank_of(&rest);
                out.c[r] = out.c[r].add(&cj.scale(sign));
            }
        }
        out
    }

    /// Interior product with a jet-valued vector.
    pub fn interior_jet(&self, v: &[Jet]) -> JetForm {
        let mut out = JetForm::zero(self.n, self.degree - 1, self.space.clone());
        if self.is_zero_object() || out.is_zero_object() {
            return out;
        }
        let ib = self.basis_table();
        let ob = out.basis_table();
        for (i, cj) in self.c.iter().enumerate() {
            let combo = &ib.combos[i];
            for (slot, &var) in combo.iter().enumerate() {
                let sign = if slot % 2 == 0 { 1.0 } else { -1.0 };
                let mut rest = combo.clone();
                rest.remove(slot);
                let r = ob.rank_of(&rest);
                let term = cj.mul(&v[var as usize]).scale(sign);
                out.c[r] = out.c[r].add(&term);
            }
        }
        // align space to the product order
        if let Some(first) = out.c.first() {
            out.space = first.space().clone();
        }
        out
    }

    /// Wedge with another jet form.
    pub fn wedge(&self, other: &JetForm) -> JetForm {
        let degree = self.degree + other.degree;
        let order = self.order().min(other.order());
        let space = JetSpace::get(self.n, order);
        let mut out = JetForm::zero(self.n, degree, space);
        if self.is_zero_object() || other.is_zero_object() || out.is_zero_object() {
            return out;
        }
        let ba = self.basis_table();
        let bb = other.basis_table();
        let bo = out.basis_table();
        for (ia, ca) in self.c.iter().enumerate() {
            for (ib, cb) in other.c.iter().enumerate() {
                if let Some((sign, merged)) = merge_sign(&ba.combos[ia], &bb.combos[ib]) {
                    let r = bo.rank_of(&merged);
                    out.c[r] = out.c[r].add(&ca.mul(cb).scale(sign));
                }
            }
        }
        out
    }

    /// Wedge with a jet-valued 1-form given by its covector components.
    pub fn wedge_cov(&self, w: &[Jet]) -> JetForm {
        let one_form = JetForm {
            n: self.n,
            degree: 1,
            c: w.to_vec(),
            space: w[0].space().clone(),
        };
        one_form.wedge(self)
    }
}

/// Context with the Christoffel jets needed by the covariant operators.
pub struct LeviCivita<'a> {
    pub cp: &'a ChartPoint,
    /// Γ^k_{ab} as jets (rank 3, index order [k, a, b]).
    pub gamma: &'a JetTensor,
}

impl<'a> LeviCivita<'a> {
    /// Covariant derivative along the coordinate direction `a`; drops one
    /// jet order.
    pub fn covd(&self, f: &JetForm, a: usize) -> JetForm {
        let n = f.n;
        let target = f.order() - 1;
        let space = JetSpace::get(n, target);
        let mut out = JetForm::zero(n, f.degree, space);
        if f.is_zero_object() {
            return out;
        }
        let basis = f.basis_table();
        let gamma_t = self.gamma.order().min(target);
        for (i, combo) in basis.combos.iter().enumerate() {
            let mut acc = f.c[i].derivative(a);
            for (slot, &var) in combo.iter().enumerate() {
                // subtract Γ^c_{a,var} α_{combo with var -> c}
                for cidx in 0..n as u8 {
                    let gam = self.gamma.get(&[cidx as usize, a, var as usize]);
                    if gam.coeffs().iter().all(|&x| x == 0.0) {
                        continue;
                    }
                    let mut replaced: Vec<u8> = combo.clone();
                    replaced[slot] = cidx;
                    let coeff = f.coeff(&replaced);
                    acc = acc.sub(&coeff.mul(&gam.truncate(gamma_t)));
                }
            }
            out.c[i] = acc;
        }
        out
    }

    /// All covariant derivatives, indexed by direction.
    pub fn covd_all(&self, f: &JetForm) -> Vec<JetForm> {
        (0..f.n).map(|a| self.covd(f, a)).collect()
    }

    /// Covariant derivative along a constant coordinate vector X.
    pub fn covd_vec(&self, f: &JetForm, x: &[f64]) -> JetForm {
        let mut acc: Option<JetForm> = None;
        for (a, &comp) in x.iter().enumerate() {
            if comp == 0.0 {
                continue;
            }
            let term = self.covd(f, a).scale(comp);
            acc = Some(match acc {
                None => term,
                Some(prev) => prev.add(&term),
            });
        }
        acc.unwrap_or_else(|| {
            JetForm::zero(f.n, f.degree, JetSpace::get(f.n, f.order() - 1))
        })
    }

    /// Codifferential d* = −Σ ε_i s_i ⨼ ∇_{s_i}, realized in coordinates as
    /// −g^{ab} ∂_a ⨼ ∇_b.
    pub fn codiff(&self, f: &JetForm) -> JetForm {
        let n = f.n;
        let target = f.order() - 1;
        let space = JetSpace::get(n, target);
        let mut out = JetForm::zero(n, f.degree - 1, space);
        if f.is_zero_object() || out.is_zero_object() {
            return out;
        }
        let ginv = &self.cp.g_inv_jets;
        for b in 0..n {
            let nabla_b = self.covd(f, b);
            for a in 0..n {
                let gab = ginv.get(&[a, b]);
                if gab.coeffs().iter().all(|&x| x == 0.0) {
                    continue;
                }
                let mut ea = vec![0.0; n];
                ea[a] = 1.0;
                let term = nabla_b.interior_const(&ea).scale_jet(&gab.truncate(target));
                out = out.sub(&term);
            }
        }
        out
    }

    /// Bochner Laplacian ∇*∇ = −g^{ab} (∇_a ∇_b − Γ^c_{ab} ∇_c); drops two
    /// jet orders.
    pub fn bochner(&self, f: &JetForm) -> JetForm {
        let n = f.n;
        let target = f.order() - 2;
        let space = JetSpace::get(n, target);
        let mut out = JetForm::zero(n, f.degree, space);
        if f.is_zero_object() {
            return out;
        }
        let firsts = self.covd_all(f);
        for b in 0..n {
            let second = self.covd_all(&firsts[b]);
            for a in 0..n {
                let gab = self.cp.g_inv_jets.get(&[a, b]).truncate(target);
                if gab.coeffs().iter().all(|&x| x == 0.0) {
                    continue;
                }
                let mut term = second[a].clone();
                for c in 0..n {
                    let gam = self.gamma.get(&[c, a, b]).truncate(target);
                    if gam.coeffs().iter().all(|&x| x == 0.0) {
                        continue;
                    }
                    term = term.sub(&firsts[c].truncate2(target).scale_jet(&gam));
                }
                out = out.sub(&term.scale_jet(&gab));
            }
        }
        out
    }
}

impl JetForm {
    fn truncate2(&self, order: usize) -> JetForm {
        if order >= self.order() {
            return self.clone();
        }
        JetForm {
            n: self.n,
            degree: self.degree,
            c: self.c.iter().map(|j| j.truncate(order)).collect(),
            space: JetSpace::get(self.n, order),
        }
    }
}

/// Hodge star at the jet level: (*α)_J = sqrt((−1)^r det g) · Σ_I α^I ε_{I,J}
/// with indices raised through the inverse-metric jets. Matches the frame
/// Hodge (coordinate orientation) at the value level.
pub fn hodge_jet(f: &JetForm, cp: &ChartPoint) -> JetForm {
    let n = f.n;
    if f.degree < 0 || f.degree > n as i32 {
        return JetForm::zero(n, n as i32 - f.degree, f.space.clone());
    }
    let p = f.degree as usize;
    let order = f.order().min(cp.g_inv_jets.order());
    let space = JetSpace::get(n, order);
    let sign_r = if cp.r % 2 == 0 { 1.0 } else { -1.0 };
    let vol = cp.det_jet.scale(sign_r).truncate(order).sqrt();

    let basis = FormBasis::get(n, p);
    let out_basis = FormBasis::get(n, n - p);
    let mut out = JetForm::zero(n, (n - p) as i32, space.clone());

    // raise the p indices: α^I = Σ_{I'} det(g^{-1}[I, I']) α_{I'}
    for combo in basis.combos.iter() {
        let mut raised = Jet::constant(space.clone(), 0.0);
        for (i2, combo2) in basis.combos.iter().enumerate() {
            if f.c[i2].coeffs().iter().all(|&x| x == 0.0) {
                continue;
            }
            let det = jet_minor_det(&cp.g_inv_jets, combo, combo2, order);
            raised = raised.add(&det.mul(&f.c[i2].truncate(order)));
        }
        if raised.coeffs().iter().all(|&x| x == 0.0) {
            continue;
        }
        let (sign, comp) = complement_sign(combo, n);
        let r = out_basis.rank_of(&comp);
        out.c[r] = out.c[r].add(&raised.mul(&vol).scale(sign));
    }
    out
}

fn jet_minor_det(m: &JetTensor, rows: &[u8], cols: &[u8], order: usize) -> Jet {
    let k = rows.len();
    let space = JetSpace::get(m.n, order);
    if k == 0 {
        return Jet::constant(space, 1.0);
    }
    // Laplace expansion; k <= 4 in practice for our charts
    fn det_rec(m: &JetTensor, rows: &[u8], cols: &[u8], order: usize) -> Jet {
        if rows.len() == 1 {
            return m.get(&[rows[0] as usize, cols[0] as usize]).truncate(order);
        }
        let space = JetSpace::get(m.n, order);
        let mut acc = Jet::constant(space, 0.0);
        let rest_rows = &rows[1..];
        for (j, &c) in cols.iter().enumerate() {
            let entry = m.get(&[rows[0] as usize, c as usize]).truncate(order);
            if entry.coeffs().iter().all(|&x| x == 0.0) {
                continue;
            }
            let mut rest_cols = cols.to_vec();
            rest_cols.remove(j);
            let sub = det_rec(m, rest_rows, &rest_cols, order);
            let term = entry.mul(&sub);
            acc = if j % 2 == 0 {
                acc.add(&term)
            } else {
                acc.sub(&term)
            };
        }
        acc
    }
    det_rec(m, rows, cols, order)
}
