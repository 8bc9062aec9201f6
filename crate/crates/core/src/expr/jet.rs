//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] stores the value and all partial derivatives of a smooth function
//! at a point, through a fixed total order. Coefficients are derivative
//! values `∂^m f(x0)` indexed by multi-index `m` — not Taylor coefficients
//! `∂^m f / m!` — so tensor formulas downstream never see factorials.
//! Arithmetic is exact through the working order: products use the Leibniz
//! rule with binomial weights, compositions use Horner evaluation of the
//! outer function's derivative sequence.

use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

/// Shared index tables for jets over `n` variables at a given order.
///
/// Multi-indices are enumerated in graded lexicographic order, so the table
/// of order `k-1` is a prefix of the table of order `k` over the same
/// variables; truncation is a prefix copy.
pub struct JetSpace {
    n: usize,
    order: usize,
    midx: Vec<Vec<u8>>,
    rank: HashMap<Vec<u8>, usize>,
    /// For every multi-index m: the splits (rank a, rank m-a, binom(m, a)).
    splits: Vec<Vec<(u32, u32, f64)>>,
    /// shift_up[v][r] = rank of midx[r] + e_v, for |midx[r]| < order.
    shift_up: Vec<Vec<u32>>,
}

static SPACES: Lazy<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

impl JetSpace {
    pub fn get(n: usize, order: usize) -> Arc<JetSpace> {
        let mut cache = SPACES.lock().unwrap();
        cache
            .entry((n, order))
            .or_insert_with(|| Arc::new(JetSpace::build(n, order)))
            .clone()
    }

    fn build(n: usize, order: usize) -> JetSpace {
        let mut midx: Vec<Vec<u8>> = Vec::new();
        for total in 0..=order {
            let mut m = vec![0u8; n];
            gen_degree(&mut midx, &mut m, 0, total as u8);
        }
        let rank: HashMap<Vec<u8>, usize> =
            midx.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let len_below = midx
            .iter()
            .filter(|m| (total_of(m) as usize) < order.max(1))
            .count();

        let mut splits = Vec::with_capacity(midx.len());
        for m in &midx {
            let mut list = Vec::new();
            let mut a = vec![0u8; n];
            loop {
                let b: Vec<u8> = m.iter().zip(&a).map(|(mi, ai)| mi - ai).collect();
                let w: f64 = m
                    .iter()
                    .zip(&a)
                    .map(|(&mi, &ai)| binom(mi as u32, ai as u32))
                    .product();
                list.push((rank[&a] as u32, rank[&b] as u32, w));
                // next a <= m componentwise
                let mut carry = true;
                for i in 0..n {
                    if carry {
                        if a[i] < m[i] {
                            a[i] += 1;
                            carry = false;
                        } else {
                            a[i] = 0;
                        }
                    }
                }
                if carry {
                    break;
                }
            }
            splits.push(list);
        }

        let mut shift_up = vec![Vec::new(); n];
        if order >= 1 {
            for (v, table) in shift_up.iter_mut().enumerate() {
                for m in midx.iter().take(len_below) {
                    let mut up = m.clone();
                    up[v] += 1;
                    table.push(rank[&up] as u32);
                }
            }
        }

        JetSpace {
            n,
            order,
            midx,
            rank,
            splits,
            shift_up,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.midx.len()
    }

    pub fn multi_indices(&self) -> &[Vec<u8>] {
        &self.midx
    }

    pub fn rank_of(&self, m: &[u8]) -> Option<usize> {
        self.rank.get(m).copied()
    }
}

fn gen_degree(out: &mut Vec<Vec<u8>>, m: &mut Vec<u8>, pos: usize, remaining: u8) {
    let n = m.len();
    if pos == n {
        if remaining == 0 {
            out.push(m.clone());
        }
        return;
    }
    if pos == n - 1 {
        m[pos] = remaining;
        out.push(m.clone());
        m[pos] = 0;
        return;
    }
    for v in 0..=remaining {
        m[pos] = remaining - v;
        gen_degree(out, m, pos + 1, v);
        m[pos] = 0;
    }
}

fn total_of(m: &[u8]) -> u32 {
    m.iter().map(|&x| x as u32).sum()
}

fn binom(n: u32, k: u32) -> f64 {
    let mut r = 1.0;
    for i in 0..k.min(n - k) {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Jet of derivative values at a point.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    c: Vec<f64>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Jet(n={}, order={}, value={})",
            self.space.n,
            self.space.order,
            self.value()
        )
    }
}

impl Jet {
    pub fn constant(space: Arc<JetSpace>, v: f64) -> Jet {
        let mut c = vec![0.0; space.len()];
        c[0] = v;
        Jet { space, c }
    }

    pub fn variable(space: Arc<JetSpace>, index: usize, value: f64) -> Jet {
        let mut c = vec![0.0; space.len()];
        c[0] = value;
        if space.order >= 1 {
            let mut m = vec![0u8; space.n];
            m[index] = 1;
            let r = space.rank[&m];
            c[r] = 1.0;
        }
        Jet { space, c }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// First partial derivative along variable `v`.
    pub fn first_partial(&self, v: usize) -> f64 {
        debug_assert!(self.space.order >= 1);
        self.c[self.space.shift_up[v][0] as usize]
    }

    /// Derivative value for a multi-index given as exponents per variable.
    pub fn partial_exponents(&self, m: &[u8]) -> Result<f64> {
        let total = total_of(m) as usize;
        if total > self.space.order {
            return Err(Error::OrderExceeded {
                requested: total,
                order: self.space.order,
            });
        }
        let r = self
            .space
            .rank_of(m)
            .ok_or_else(|| Error::Dimension("multi-index arity mismatch".into()))?;
        Ok(self.c[r])
    }

    /// Derivative value for a multi-index given as a list of 1-based variable
    /// indices; order of the list does not matter.
    pub fn partial(&self, vars_one_based: &[usize]) -> Result<f64> {
        let mut m = vec![0u8; self.space.n];
        for &v in vars_one_based {
            if v == 0 || v > self.space.n {
                return Err(Error::Dimension(format!(
                    "variable index {v} out of range 1..={}",
                    self.space.n
                )));
            }
            m[v - 1] += 1;
        }
        self.partial_exponents(&m)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.space.order {
            return self.clone();
        }
        let space = JetSpace::get(self.space.n, order);
        let c = self.c[..space.len()].to_vec();
        Jet { space, c }
    }

    /// Re-express the jet over a larger variable set: the function is
    /// independent of the new variables, which occupy indices
    /// `0..offset` (the old variable v becomes v + offset).
    pub fn embed(&self, target: &Arc<JetSpace>, offset: usize) -> Jet {
        let n_old = self.space.n;
        debug_assert_eq!(target.n(), n_old + offset);
        let order = target.order().min(self.space.order);
        let mut c = vec![0.0; target.len()];
        for (r, m) in self.space.midx.iter().enumerate() {
            if total_of(m) as usize > order {
                break;
            }
            let mut big = vec![0u8; target.n()];
            big[offset..offset + n_old].copy_from_slice(m);
            c[target.rank[&big]] = self.c[r];
        }
        Jet {
            space: target.clone(),
            c,
        }
    }

    fn aligned(&self, other: &Jet) -> (Jet, Jet) {
        assert_eq!(self.space.n, other.space.n, "jet variable count mismatch");
        if self.space.order == other.space.order {
            (self.clone(), other.clone())
        } else if self.space.order < other.space.order {
            (self.clone(), other.truncate(self.space.order))
        } else {
            (self.truncate(other.space.order), other.clone())
        }
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let (mut a, b) = self.aligned(other);
        for (x, y) in a.c.iter_mut().zip(&b.c) {
            *x += y;
        }
        a
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let (mut a, b) = self.aligned(other);
        for (x, y) in a.c.iter_mut().zip(&b.c) {
            *x -= y;
        }
        a
    }

    pub fn neg(&self) -> Jet {
        let mut a = self.clone();
        for x in a.c.iter_mut() {
            *x = -*x;
        }
        a
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut a = self.clone();
        for x in a.c.iter_mut() {
            *x *= s;
        }
        a
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut a = self.clone();
        a.c[0] += s;
        a
    }

    /// Leibniz product.
    pub fn mul(&self, other: &Jet) -> Jet {
        let (a, b) = self.aligned(other);
        let space = a.space.clone();
        let mut c = vec![0.0; space.len()];
        for (r, list) in space.splits.iter().enumerate() {
            let mut acc = 0.0;
            for &(ra, rb, w) in list {
                acc += w * a.c[ra as usize] * b.c[rb as usize];
            }
            c[r] = acc;
        }
        Jet { space, c }
    }

    pub fn div(&self, other: &Jet) -> Jet {
        self.mul(&other.recip())
    }

    /// Partial derivative as a jet of one order less.
    pub fn derivative(&self, v: usize) -> Jet {
        assert!(self.space.order >= 1, "cannot differentiate an order-0 jet");
        let space = JetSpace::get(self.space.n, self.space.order - 1);
        let table = &self.space.shift_up[v];
        let mut c = vec![0.0; space.len()];
        for (r, up) in table.iter().enumerate() {
            c[r] = self.c[*up as usize];
        }
        debug_assert_eq!(table.len(), space.len());
        Jet { space, c }
    }

    /// Compose with a univariate smooth function given by its derivative
    /// values `h(x0), h'(x0), ..., h^(k)(x0)` at the jet's value.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let k = self.space.order;
        debug_assert!(derivs.len() >= k + 1);
        // u = self - value, Horner over truncated polynomials
        let mut u = self.clone();
        u.c[0] = 0.0;
        let mut fact = 1.0;
        let mut coeff = vec![0.0; k + 1];
        for (j, item) in coeff.iter_mut().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            *item = derivs[j] / fact;
        }
        let mut acc = Jet::constant(self.space.clone(), coeff[k]);
        for j in (0..k).rev() {
            acc = acc.mul(&u).add_scalar(coeff[j]);
        }
        acc
    }

    pub fn recip(&self) -> Jet {
        let x = self.value();
        let k = self.space.order;
        let mut d = Vec::with_capacity(k + 1);
        let mut cur = 1.0 / x;
        d.push(cur);
        for j in 1..=k {
            cur *= -(j as f64) / x;
            // cur = (-1)^j j! / x^{j+1}, built incrementally
            d.push(cur);
        }
        self.compose(&d)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.space.order + 1])
    }

    pub fn ln(&self) -> Jet {
        let x = self.value();
        let k = self.space.order;
        let mut d = Vec::with_capacity(k + 1);
        d.push(x.ln());
        let mut cur = 1.0 / x;
        if k >= 1 {
            d.push(cur);
        }
        for j in 2..=k {
            cur *= -((j - 1) as f64) / x;
            d.push(cur);
        }
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn powf(&self, r: f64) -> Jet {
        let x = self.value();
        let k = self.space.order;
        let mut d = Vec::with_capacity(k + 1);
        let mut cur = x.powf(r);
        d.push(cur);
        let mut expn = r;
        for _ in 1..=k {
            cur *= expn / x;
            expn -= 1.0;
            d.push(cur);
        }
        self.compose(&d)
    }

    pub fn powi(&self, m: i64) -> std::result::Result<Jet, String> {
        if m >= 0 {
            let mut acc = Jet::constant(self.space.clone(), 1.0);
            let mut base = self.clone();
            let mut e = m as u64;
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc.mul(&base);
                }
                e >>= 1;
                if e > 0 {
                    base = base.mul(&base);
                }
            }
            Ok(acc)
        } else {
            if self.value().abs() < 1e-300 {
                return Err("negative power of zero".to_string());
            }
            let pos = self.powi(-m).expect("non-negative exponent");
            Ok(pos.recip())
        }
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let d: Vec<f64> = (0..=self.space.order).map(|j| cycle[j % 4]).collect();
        self.compose(&d)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let d: Vec<f64> = (0..=self.space.order).map(|j| cycle[j % 4]).collect();
        self.compose(&d)
    }

    pub fn sinh(&self) -> Jet {
        let (sh, ch) = (self.value().sinh(), self.value().cosh());
        let d: Vec<f64> = (0..=self.space.order)
            .map(|j| if j % 2 == 0 { sh } else { ch })
            .collect();
        self.compose(&d)
    }

    pub fn cosh(&self) -> Jet {
        let (sh, ch) = (self.value().sinh(), self.value().cosh());
        let d: Vec<f64> = (0..=self.space.order)
            .map(|j| if j % 2 == 0 { ch } else { sh })
            .collect();
        self.compose(&d)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn exp_taylor_at_zero() {
        let e = parse_expr("exp(x1)", 1).unwrap();
        let j = e.eval_jet(&[0.0], 4).unwrap();
        for k in 0..=4 {
            let m = vec![k as u8];
            assert!((j.partial_exponents(&m).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn product_jet_leibniz() {
        let e = parse_expr("x1*x2", 2).unwrap();
        let j = e.eval_jet(&[1.0, 2.0], 2).unwrap();
        assert_eq!(j.value(), 2.0);
        assert_eq!(j.partial(&[1]).unwrap(), 2.0);
        assert_eq!(j.partial(&[2]).unwrap(), 1.0);
        assert_eq!(j.partial(&[1, 2]).unwrap(), 1.0);
        assert_eq!(j.partial(&[1, 1]).unwrap(), 0.0);
        assert_eq!(j.partial(&[2, 2]).unwrap(), 0.0);
    }

    #[test]
    fn partial_symmetry_and_bounds() {
        let e = parse_expr("x1^2*sin(x2)", 2).unwrap();
        let j = e.eval_jet(&[0.7, 0.3], 4).unwrap();
        let a = j.partial(&[1, 2, 1]).unwrap();
        let b = j.partial(&[1, 1, 2]).unwrap();
        let c = j.partial(&[2, 1, 1]).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);

        let e2 = parse_expr("x1^2", 1).unwrap();
        let j2 = e2.eval_jet(&[3.0], 4).unwrap();
        assert!((j2.partial(&[1, 1]).unwrap() - 2.0).abs() < 1e-14);
        assert!(matches!(
            j2.partial(&[1, 1, 1, 1, 1]),
            Err(Error::OrderExceeded { .. })
        ));
    }

    #[test]
    fn sin_squared_matches_finite_differences() {
        let e = parse_expr("sin(x1)^2", 1).unwrap();
        let x = 0.3;
        let j = e.eval_jet(&[x], 3).unwrap();
        let h = 1e-4;
        let f = |t: f64| t.sin().powi(2);
        let fd1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let fd2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        let fd3 = (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h))
            / (2.0 * h * h * h);
        let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + b.abs());
        assert!(rel(j.partial(&[1]).unwrap(), fd1) < 1e-6);
        assert!(rel(j.partial(&[1, 1]).unwrap(), fd2) < 1e-6);
        assert!(rel(j.partial(&[1, 1, 1]).unwrap(), fd3) < 1e-4);
    }

    #[test]
    fn derivative_shifts_coefficients() {
        let e = parse_expr("x1^3*x2", 2).unwrap();
        let j = e.eval_jet(&[2.0, 5.0], 4).unwrap();
        let d1 = j.derivative(0); // 3 x1^2 x2
        assert!((d1.value() - 60.0).abs() < 1e-12);
        assert!((d1.partial(&[1]).unwrap() - 60.0 / 2.0 * 2.0).abs() < 1e-9); // 6 x1 x2 = 60
        assert!((d1.partial(&[2]).unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn quotient_and_composition_rules_hold() {
        // randomized algebraic identity checks on coefficient tables
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let space = JetSpace::get(3, 4);
        for _ in 0..20 {
            let point: Vec<f64> = (0..3).map(|_| rng.gen_range(0.2..1.0)).collect();
            let f = parse_expr("sin(x1*x2) + x3^2", 3).unwrap();
            let g = parse_expr("cosh(x2) + x1*x3 + 2", 3).unwrap();
            let jf = f.eval_jet_in(&point, &space).unwrap();
            let jg = g.eval_jet_in(&point, &space).unwrap();
            // (f/g)*g == f
            let q = jf.div(&jg);
            let back = q.mul(&jg);
            for (a, b) in back.coeffs().iter().zip(jf.coeffs()) {
                assert!((a - b).abs() < 1e-9, "quotient rule violated");
            }
            // exp(ln(g)) == g for positive g
            let lg = jg.ln().exp();
            for (a, b) in lg.coeffs().iter().zip(jg.coeffs()) {
                assert!((a - b).abs() < 1e-9, "composition rule violated");
            }
            // sqrt(g)^2 == g
            let sq = jg.sqrt().mul(&jg.sqrt());
            for (a, b) in sq.coeffs().iter().zip(jg.coeffs()) {
                assert!((a - b).abs() < 1e-9, "sqrt rule violated");
            }
        }
    }
}
