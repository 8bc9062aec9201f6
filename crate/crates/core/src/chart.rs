//! Coordinate charts carrying a pseudo-Riemannian metric of signature (r, s),
//! their pointwise evaluation as jets, pseudo-orthonormal frames, conformal
//! rescaling and seeded sample-point generation.
//!
//! Conventions: `r` counts the timelike directions (ε_i = −1) and frames list
//! them first. All tensor work downstream happens in the coordinate basis;
//! frames enter only where the signature signs do.

use crate::error::{Error, Result};
use crate::expr::{parse_expr_with_names, Expr, Jet, JetSpace};
use crate::tensor::JetTensor;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};


pub const MAX_DIM: usize = 8;
const DET_TOL: f64 = 1e-12;

/// A chart of dimension `n` with an expression-valued symmetric metric.
#[derive(Clone, Debug)]
pub struct MetricSpec {
    pub label: String,
    pub dim: usize,
    /// Count of timelike directions (ε = −1).
    pub r: usize,
    /// Count of spacelike directions (ε = +1).
    pub s: usize,
    pub coords: Vec<String>,
    /// Symmetric n×n matrix of expressions.
    pub g: Vec<Vec<Expr>>,
    /// A point is admissible iff every guard evaluates > 0.
    pub guards: Vec<Expr>,
    /// Box from which sample points are drawn (center, half width).
    pub sample_center: Vec<f64>,
    pub sample_halfwidth: f64,
}

impl MetricSpec {
    pub fn new(
        label: impl Into<String>,
        r: usize,
        s: usize,
        coords: Vec<String>,
        g: Vec<Vec<Expr>>,
    ) -> Result<MetricSpec> {
        let n = r + s;
        if n < 2 || n > MAX_DIM {
            return Err(Error::BadSpec(format!(
                "dimension {n} outside supported range 2..={MAX_DIM}"
            )));
        }
        if coords.len() != n {
            return Err(Error::BadSpec(format!(
                "{} coordinate names for dimension {n}",
                coords.len()
            )));
        }
        if g.len() != n || g.iter().any(|row| row.len() != n) {
            return Err(Error::BadSpec("metric matrix shape mismatch".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if g[i][j] != g[j][i] {
                    return Err(Error::Asymmetric { i, j });
                }
            }
        }
        for row in &g {
            for e in row {
                if let Some(v) = e.max_var() {
                    if v >= n {
                        return Err(Error::BadSpec(format!(
                            "metric entry references x{} in a chart of dimension {n}",
                            v + 1
                        )));
                    }
                }
            }
        }
        Ok(MetricSpec {
            label: label.into(),
            dim: n,
            r,
            s,
            coords,
            g,
            guards: Vec::new(),
            sample_center: vec![0.0; n],
            sample_halfwidth: 0.4,
        })
    }

    pub fn with_guard(mut self, guard: Expr) -> Self {
        self.guards.push(guard);
        self
    }

    pub fn with_sample_box(mut self, center: Vec<f64>, halfwidth: f64) -> Self {
        self.sample_center = center;
        self.sample_halfwidth = halfwidth;
        self
    }

    pub fn signature(&self) -> (usize, usize) {
        (self.r, self.s)
    }

    /// ε_i = −1 for i < r, +1 otherwise (frame ordering convention).
    pub fn eps(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| if i < self.r { -1.0 } else { 1.0 })
            .collect()
    }

    pub fn admissible(&self, point: &[f64]) -> bool {
        self.guards
            .iter()
            .all(|g| matches!(g.eval(point), Ok(v) if v > 0.0))
    }

    /// Evaluate metric jets at a point.
    pub fn metric_at(&self, point: &[f64], order: usize) -> Result<ChartPoint> {
        self.metric_at_impl(point, order, true)
    }

    /// Like [`MetricSpec::metric_at`] but without the eigenvalue signature
    /// check; transport hot paths re-evaluate the metric thousands of times
    /// along curves whose signature was validated at the start.
    pub fn metric_at_unchecked(&self, point: &[f64], order: usize) -> Result<ChartPoint> {
        self.metric_at_impl(point, order, false)
    }

    fn metric_at_impl(
        &self,
        point: &[f64],
        order: usize,
        check_signature: bool,
    ) -> Result<ChartPoint> {
        if point.len() != self.dim {
            return Err(Error::Dimension(format!(
                "point dimension {} vs chart dimension {}",
                point.len(),
                self.dim
            )));
        }
        if !self.admissible(point) {
            return Err(Error::GuardViolation);
        }
        let n = self.dim;
        let space = JetSpace::get(n, order);
        let mut jets: Vec<Option<Jet>> = vec![None; n * n];
        for i in 0..n {
            for j in i..n {
                let j_ij = self.g[i][j].eval_jet_in(point, &space)?;
                jets[i * n + j] = Some(j_ij.clone());
                jets[j * n + i] = Some(j_ij);
            }
        }
        let g_jets = JetTensor {
            n,
            rank: 2,
            data: jets.into_iter().map(|o| o.unwrap()).collect(),
        };
        let g = DMatrix::from_fn(n, n, |i, j| g_jets.get(&[i, j]).value());
        let det = g.clone().lu().determinant();
        if det.abs() < DET_TOL {
            return Err(Error::SingularMetric { det });
        }
        if check_signature {
            let eig = g.clone().symmetric_eigen();
            let neg = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
            if neg != self.r {
                return Err(Error::BadSignature {
                    expected_negative: self.r,
                    found_negative: neg,
                });
            }
        }
        let (g_inv_jets, det_jet) = invert_jet_matrix(&g_jets)?;
        let g_inv = DMatrix::from_fn(n, n, |i, j| g_inv_jets.get(&[i, j]).value());
        Ok(ChartPoint {
            n,
            r: self.r,
            order,
            point: point.to_vec(),
            g,
            g_inv,
            g_jets,
            g_inv_jets,
            det_jet,
        })
    }

    /// Rescale g ↦ e^{−2φ}·g at the expression level.
    pub fn conformal_rescale(&self, phi: &Expr) -> Result<MetricSpec> {
        if let Some(v) = phi.max_var() {
            if v >= self.dim {
                return Err(Error::BadSpec(format!(
                    "conformal factor references x{} in a chart of dimension {}",
                    v + 1,
                    self.dim
                )));
            }
        }
        let factor = Expr::exp(Expr::mul(Expr::num(-2.0), phi.clone()));
        let g = self
            .g
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| Expr::mul(factor.clone(), e.clone()))
                    .collect()
            })
            .collect();
        let mut out = MetricSpec::new(
            format!("{} (rescaled)", self.label),
            self.r,
            self.s,
            self.coords.clone(),
            g,
        )?;
        out.guards = self.guards.clone();
        out.sample_center = self.sample_center.clone();
        out.sample_halfwidth = self.sample_halfwidth;
        Ok(out)
    }

    /// Seeded rejection sampler over the chart's sample box.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count && attempts < 10_000 * (count + 1) {
            attempts += 1;
            let p: Vec<f64> = (0..self.dim)
                .map(|i| {
                    self.sample_center[i]
                        + self.sample_halfwidth * rng.gen_range(-1.0f64..1.0f64)
                })
                .collect();
            if !self.admissible(&p) {
                continue;
            }
            if self.metric_at(&p, 0).is_err() {
                continue;
            }
            out.push(p);
        }
        out
    }
}

/// Metric data evaluated at one point: values, inverse, and jets of both.
#[derive(Clone)]
pub struct ChartPoint {
    pub n: usize,
    pub r: usize,
    pub order: usize,
    pub point: Vec<f64>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub g_jets: JetTensor,
    pub g_inv_jets: JetTensor,
    pub det_jet: Jet,
}

impl ChartPoint {
    pub fn eps(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| if i < self.r { -1.0 } else { 1.0 })
            .collect()
    }

    pub fn inner_vec(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += self.g[(i, j)] * a[i] * b[j];
            }
        }
        acc
    }
}

/// Gauss-Jordan inverse of a jet-valued matrix with value-part pivoting.
/// Also returns the determinant as a jet.
pub fn invert_jet_matrix(m: &JetTensor) -> Result<(JetTensor, Jet)> {
    assert_eq!(m.rank, 2);
    let n = m.n;
    let space = m.data[0].space().clone();
    let one = Jet::constant(space.clone(), 1.0);
    let zero = Jet::constant(space.clone(), 0.0);
    let mut a: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| m.get(&[i, j]).clone()).collect())
        .collect();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { one.clone() } else { zero.clone() })
                .collect()
        })
        .collect();
    let mut det = one.clone();
    for col in 0..n {
        let (pivot, pv) = (col..n)
            .map(|row| (row, a[row][col].value().abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pv < 1e-300 {
            return Err(Error::SingularMetric { det: 0.0 });
        }
        if pivot != col {
            a.swap(pivot, col);
            inv.swap(pivot, col);
            det = det.neg();
        }
        let p = a[col][col].clone();
        det = det.mul(&p);
        let pinv = p.recip();
        for j in 0..n {
            a[col][j] = a[col][j].mul(&pinv);
            inv[col][j] = inv[col][j].mul(&pinv);
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col].clone();
            if f.value() == 0.0 && f.coeffs().iter().all(|&c| c == 0.0) {
                continue;
            }
            for j in 0..n {
                a[row][j] = a[row][j].sub(&f.mul(&a[col][j]));
                inv[row][j] = inv[row][j].sub(&f.mul(&inv[col][j]));
            }
        }
    }
    let data: Vec<Jet> = (0..n)
        .flat_map(|i| inv[i].clone())
        .collect();
    Ok((JetTensor { n, rank: 2, data }, det))
}

/// Pseudo-orthonormal frame at a point: columns are the frame vectors in
/// coordinate components, timelike (ε = −1) first, oriented positively with
/// respect to the coordinate orientation.
#[derive(Clone, Debug)]
pub struct Frame {
    /// cols[(a, i)] = coordinate component a of frame vector s_i.
    pub cols: DMatrix<f64>,
    pub eps: Vec<f64>,
    /// Inverse of `cols`: rows are the dual coframe σ^i.
    pub inv: DMatrix<f64>,
}

impl Frame {
    pub fn n(&self) -> usize {
        self.eps.len()
    }

    /// Frame components θ^i = σ^i(X) of a coordinate vector.
    pub fn components(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.inv * DVector::from_column_slice(x);
        v.iter().copied().collect()
    }
}

/// Jet-valued frame field: the same pivoted Gram-Schmidt run over jets, so
/// the frame is smooth near the base point (the pivot order is frozen from
/// the value parts).
#[derive(Clone)]
pub struct FrameJets {
    /// cols[(a, i)] as jets.
    pub cols: Vec<Vec<Jet>>, // cols[i] = frame vector i, entries indexed by coordinate a
    pub eps: Vec<f64>,
}

impl FrameJets {
    pub fn frame(&self) -> Frame {
        let n = self.eps.len();
        let cols = DMatrix::from_fn(n, n, |a, i| self.cols[i][a].value());
        let inv = cols
            .clone()
            .try_inverse()
            .expect("frame matrix is invertible by construction");
        Frame {
            cols,
            eps: self.eps.clone(),
            inv,
        }
    }
}

fn jet_inner(g: &JetTensor, a: &[Jet], b: &[Jet]) -> Jet {
    let n = g.n;
    let mut acc = Jet::constant(a[0].space().clone(), 0.0);
    for i in 0..n {
        for j in 0..n {
            acc = acc.add(&g.get(&[i, j]).mul(&a[i]).mul(&b[j]));
        }
    }
    acc
}

/// Pivoted Gram-Schmidt over jets. Pivots maximize |g(v,v)| at the base
/// point; if every remaining candidate is null, sums and differences of
/// candidate pairs are tried before giving up. Timelike vectors are sorted
/// first and the last vector is flipped if needed to match the coordinate
/// orientation.
pub fn frame_jets(cp: &ChartPoint) -> Result<FrameJets> {
    gram_schmidt_frame(&cp.g_jets, cp.r)
}

/// Gram-Schmidt on raw metric jets (the metric need not come from a chart
/// evaluation; embedded factor metrics use this too).
pub fn gram_schmidt_frame(g_jets: &JetTensor, r: usize) -> Result<FrameJets> {
    let n = g_jets.n;
    let space = g_jets.data[0].space().clone();
    let zero = Jet::constant(space.clone(), 0.0);
    let one = Jet::constant(space.clone(), 1.0);
    let mut candidates: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|a| if a == i { one.clone() } else { zero.clone() })
                .collect()
        })
        .collect();
    let mut frame: Vec<(Vec<Jet>, f64)> = Vec::with_capacity(n);

    while frame.len() < n {
        // best single candidate by |g(v,v)| at the point
        let norms: Vec<f64> = candidates
            .iter()
            .map(|v| jet_inner(g_jets, v, v).value())
            .collect();
        // first strictly-largest |g(v,v)|, so diagonal metrics keep their
        // coordinate order
        let (mut best, mut bestval) = (0usize, norms[0].abs());
        for (i, q) in norms.iter().enumerate().skip(1) {
            if q.abs() > bestval {
                best = i;
                bestval = q.abs();
            }
        }
        let (chosen, drop_idx) = if bestval > 1e-10 {
            (candidates[best].clone(), best)
        } else {
            // all null: try pairwise sums, then differences
            let mut found: Option<(Vec<Jet>, usize, f64)> = None;
            for i in 0..candidates.len() {
                for j in (i + 1)..candidates.len() {
                    for sign in [1.0, -1.0] {
                        let w: Vec<Jet> = (0..n)
                            .map(|a| candidates[i][a].add(&candidates[j][a].scale(sign)))
                            .collect();
                        let q = jet_inner(g_jets, &w, &w).value().abs();
                        if found.as_ref().map_or(true, |f| q > f.2) {
                            found = Some((w, i, q));
                        }
                    }
                }
            }
            match found {
                Some((w, i, q)) if q > 1e-10 => (w, i),
                _ => return Err(Error::PivotBreakdown),
            }
        };
        let q = jet_inner(g_jets, &chosen, &chosen);
        let sign = if q.value() > 0.0 { 1.0 } else { -1.0 };
        let norm = q.scale(sign).sqrt();
        let ninv = norm.recip();
        let s: Vec<Jet> = chosen.iter().map(|c| c.mul(&ninv)).collect();
        candidates.remove(drop_idx);
        for v in candidates.iter_mut() {
            let proj = jet_inner(g_jets, v, &s).scale(sign);
            for a in 0..n {
                v[a] = v[a].sub(&proj.mul(&s[a]));
            }
        }
        frame.push((s, sign));
    }

    // timelike first, stable
    let mut ordered: Vec<(Vec<Jet>, f64)> = Vec::with_capacity(n);
    for (s, e) in frame.iter().filter(|(_, e)| *e < 0.0) {
        ordered.push((s.clone(), *e));
    }
    for (s, e) in frame.iter().filter(|(_, e)| *e > 0.0) {
        ordered.push((s.clone(), *e));
    }
    let timelike = ordered.iter().filter(|(_, e)| *e < 0.0).count();
    if timelike != r {
        return Err(Error::BadSignature {
            expected_negative: r,
            found_negative: timelike,
        });
    }

    // orientation: det of value matrix must be positive
    let vals = DMatrix::from_fn(n, n, |a, i| ordered[i].0[a].value());
    if vals.lu().determinant() < 0.0 {
        let last = ordered.last_mut().unwrap();
        last.0 = last.0.iter().map(|j| j.neg()).collect();
    }

    Ok(FrameJets {
        eps: ordered.iter().map(|(_, e)| *e).collect(),
        cols: ordered.into_iter().map(|(s, _)| s).collect(),
    })
}

/// Value-level frame (the order-0 slice of [`frame_jets`]).
pub fn orthonormal_coframe(cp: &ChartPoint) -> Result<Frame> {
    Ok(frame_jets(cp)?.frame())
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MetricDoc {
    label: String,
    dim: usize,
    signature: [usize; 2],
    coords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    guard: Option<GuardDoc>,
    g: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample: Option<SampleDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GuardDoc {
    One(String),
    Many(Vec<String>),
}

#[derive(Serialize, Deserialize)]
struct SampleDoc {
    center: Vec<f64>,
    halfwidth: f64,
}

/// Load a metric spec from its JSON document.
pub fn load_metric_spec(json: &str) -> Result<MetricSpec> {
    let doc: MetricDoc = serde_json::from_str(json).map_err(|e| Error::Json(e.to_string()))?;
    let [r, s] = doc.signature;
    if r + s != doc.dim {
        return Err(Error::BadSpec(format!(
            "signature ({r},{s}) does not sum to dimension {}",
            doc.dim
        )));
    }
    // dimension 2 documents are allowed as product/cone factors; the
    // curvature operations that genuinely need n >= 3 enforce it themselves
    if doc.coords.len() != doc.dim {
        return Err(Error::BadSpec("coordinate name count mismatch".into()));
    }
    let mut g = Vec::with_capacity(doc.dim);
    for row in &doc.g {
        let mut out = Vec::with_capacity(doc.dim);
        for cell in row {
            out.push(parse_expr_with_names(cell, &doc.coords)?);
        }
        g.push(out);
    }
    let mut spec = MetricSpec::new(doc.label, r, s, doc.coords.clone(), g)?;
    match doc.guard {
        Some(GuardDoc::One(text)) => {
            spec.guards.push(parse_expr_with_names(&text, &doc.coords)?);
        }
        Some(GuardDoc::Many(texts)) => {
            for text in texts {
                spec.guards.push(parse_expr_with_names(&text, &doc.coords)?);
            }
        }
        None => {}
    }
    if let Some(sd) = doc.sample {
        if sd.center.len() != doc.dim {
            return Err(Error::BadSpec("sample box center dimension mismatch".into()));
        }
        spec.sample_center = sd.center;
        spec.sample_halfwidth = sd.halfwidth;
    }
    Ok(spec)
}

/// Serialize a spec back to its JSON document.
pub fn metric_spec_to_json(spec: &MetricSpec) -> String {
    let doc = MetricDoc {
        label: spec.label.clone(),
        dim: spec.dim,
        signature: [spec.r, spec.s],
        coords: spec.coords.clone(),
        guard: match spec.guards.len() {
            0 => None,
            1 => Some(GuardDoc::One(spec.guards[0].to_text(&spec.coords))),
            _ => Some(GuardDoc::Many(
                spec.guards.iter().map(|g| g.to_text(&spec.coords)).collect(),
            )),
        },
        g: spec
            .g
            .iter()
            .map(|row| row.iter().map(|e| e.to_text(&spec.coords)).collect())
            .collect(),
        sample: Some(SampleDoc {
            center: spec.sample_center.clone(),
            halfwidth: spec.sample_halfwidth,
        }),
    };
    serde_json::to_string_pretty(&doc).expect("metric document serializes")
}
