//! The curvature hierarchy at a point: Christoffel symbols, Riemann, Ricci,
//! scalar curvature, the ρ-tensor K, Weyl, Cotton-York, Bach, and the
//! Kulkarni-Nomizu action on 2-forms.
//!
//! Conventions. Riemann as (1,3): R(∂_i,∂_j)∂_k = R^l_{ijk} ∂_l with
//! R^l_{ijk} = ∂_iΓ^l_{jk} − ∂_jΓ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik};
//! as (0,4): R_{ijkl} = g(R(∂_i,∂_j)∂_k, ∂_l). This sign makes
//! Ric(X,Y) = Σ ε_i g(R(X,s_i)s_i, Y) and gives scal = +n(n−1) on the unit
//! sphere. The Cotton slot order is C(X,Y,Z) = g(C(Y,Z), X), stored as
//! C_{abc} = ∇_b K_{ca} − ∇_c K_{ba}.
//!
//! ε-weighted traces are realized as contractions with the inverse metric,
//! using Σ ε_i s_i ⊗ s_i = g^{-1} (an exact pointwise identity for any
//! pseudo-orthonormal frame); this keeps every trace differentiable through
//! the jets.

use crate::chart::ChartPoint;
use crate::error::{Error, Result};
use crate::exterior::FormValue;
use crate::expr::Jet;
use crate::tensor::{JetTensor, Tensor};
use nalgebra::DMatrix;

/// Covariant derivative of a jet-valued (0,k) tensor. The derivative slot
/// comes first: (∇T)_{d, i1..ik} = ∂_d T_{i1..ik} − Σ_j Γ^c_{d i_j} T_{..c..}.
pub fn cov_deriv(t: &JetTensor, gamma: &JetTensor) -> JetTensor {
    let n = t.n;
    let target = t.order() - 1;
    let gamma_t = gamma.truncate(target.min(gamma.order()));
    JetTensor::from_fn(n, t.rank + 1, |idx| {
        let d = idx[0];
        let inner = &idx[1..];
        let mut acc = t.get(inner).derivative(d);
        for (j, &ij) in inner.iter().enumerate() {
            for c in 0..n {
                let gam = gamma_t.get(&[c, d, ij]);
                if gam.coeffs().iter().all(|&x| x == 0.0) {
                    continue;
                }
                let mut rep = inner.to_vec();
                rep[j] = c;
                acc = acc.sub(&t.get(&rep).mul(gam));
            }
        }
        acc
    })
}

/// Everything the rest of the engine needs, jet-valued so that covariant
/// derivatives of derived tensors stay exact. Orders decrease down the
/// hierarchy: Γ at k−1, Riemann/Ricci/K/Weyl at k−2, Cotton at k−3, Bach at
/// k−4 where k is the metric jet order.
pub struct CurvatureJets {
    pub n: usize,
    pub gamma: JetTensor,
    pub riemann: JetTensor,
    pub ricci: JetTensor,
    pub scal: Jet,
    pub schouten: Option<JetTensor>,
    pub weyl: Option<JetTensor>,
    pub cotton: Option<JetTensor>,
    pub bach: Option<JetTensor>,
}

impl CurvatureJets {
    pub fn new(cp: &ChartPoint) -> Result<CurvatureJets> {
        let n = cp.n;
        let k = cp.order;
        if k < 2 {
            return Err(Error::InsufficientJets { needed: 2, have: k });
        }
        let gamma = christoffel(cp);
        let riemann = riemann_04(cp, &gamma);
        let (ricci, scal) = ricci_scal(cp, &riemann);

        let schouten = if n >= 3 {
            Some(schouten_from(cp, &ricci, &scal))
        } else {
            None
        };
        let weyl = schouten
            .as_ref()
            .map(|kk| weyl_from(cp, &riemann, kk));
        let cotton = match (&schouten, k >= 3) {
            (Some(kk), true) => Some(cotton_from(kk, &gamma)),
            _ => None,
        };
        let bach = match (&cotton, &weyl, &schouten, k >= 4) {
            (Some(c), Some(w), Some(kk), true) => Some(bach_from(cp, c, w, kk, &gamma)),
            _ => None,
        };

        Ok(CurvatureJets {
            n,
            gamma,
            riemann,
            ricci,
            scal,
            schouten,
            weyl,
            cotton,
            bach,
        })
    }

    pub fn schouten(&self) -> Result<&JetTensor> {
        self.schouten.as_ref().ok_or(Error::Precondition(
            "ρ-tensor needs dimension n >= 3".into(),
        ))
    }

    pub fn weyl(&self) -> Result<&JetTensor> {
        self.weyl.as_ref().ok_or(Error::Precondition(
            "Weyl tensor needs dimension n >= 3".into(),
        ))
    }

    pub fn cotton(&self) -> Result<&JetTensor> {
        self.cotton.as_ref().ok_or(Error::InsufficientJets {
            needed: 3,
            have: 2,
        })
    }

    pub fn bach(&self) -> Result<&JetTensor> {
        self.bach.as_ref().ok_or(Error::InsufficientJets {
            needed: 4,
            have: 3,
        })
    }

    /// K as an endomorphism applied to a coordinate vector, value level:
    /// K(X)^c = g^{cb} K_{ab} X^a.
    pub fn schouten_endo(&self, cp: &ChartPoint, x: &[f64]) -> Result<Vec<f64>> {
        let k = self.schouten()?.values();
        let n = self.n;
        let mut out = vec![0.0; n];
        for (c, item) in out.iter_mut().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    *item += cp.g_inv[(c, b)] * k.get(&[a, b]) * x[a];
                }
            }
        }
        Ok(out)
    }

    /// The 2-form W(X,Y) for coordinate directions (value level).
    pub fn weyl_two_form(&self, x: usize, y: usize) -> Result<FormValue> {
        let w = self.weyl()?;
        let n = self.n;
        let mut out = FormValue::zero(n, 2);
        let basis = out.basis_table();
        for (i, combo) in basis.combos.iter().enumerate() {
            out.c[i] = w
                .get(&[x, y, combo[0] as usize, combo[1] as usize])
                .value();
        }
        Ok(out)
    }

    /// The 1-form C(X,Y)^♭ = C_{·, x, y} for coordinate directions.
    pub fn cotton_one_form(&self, x: usize, y: usize) -> Result<FormValue> {
        let c = self.cotton()?;
        let n = self.n;
        let mut out = FormValue::zero(n, 1);
        for a in 0..n {
            out.c[a] = c.get(&[a, x, y]).value();
        }
        Ok(out)
    }
}

fn christoffel(cp: &ChartPoint) -> JetTensor {
    let n = cp.n;
    let target = cp.order - 1;
    let ginv = cp.g_inv_jets.truncate(target);
    // ∂ of g drops to k-1 automatically
    let dg = JetTensor::from_fn(n, 3, |idx| {
        // dg[l][a][b] = ∂_l g_{ab}
        cp.g_jets.get(&[idx[1], idx[2]]).derivative(idx[0])
    });
    JetTensor::from_fn(n, 3, |idx| {
        let (k, a, b) = (idx[0], idx[1], idx[2]);
        let mut acc: Option<Jet> = None;
        for l in 0..n {
            let sum = dg
                .get(&[a, l, b])
                .add(dg.get(&[b, l, a]))
                .sub(dg.get(&[l, a, b]));
            let term = ginv.get(&[k, l]).mul(&sum).scale(0.5);
            acc = Some(match acc {
                None => term,
                Some(p) => p.add(&term),
            });
        }
        acc.unwrap()
    })
}

fn riemann_04(cp: &ChartPoint, gamma: &JetTensor) -> JetTensor {
    let n = cp.n;
    let target = cp.order - 2;
    let gamma_t = gamma.truncate(target);
    let dgamma = JetTensor::from_fn(n, 4, |idx| {
        // dgamma[d][l][a][b] = ∂_d Γ^l_{ab}
        gamma.get(&[idx[1], idx[2], idx[3]]).derivative(idx[0])
    });
    let upper = JetTensor::from_fn(n, 4, |idx| {
        // R^l_{ijk}
        let (l, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
        let mut acc = dgamma.get(&[i, l, j, k]).sub(dgamma.get(&[j, l, i, k]));
        for m in 0..n {
            acc = acc.add(&gamma_t.get(&[l, i, m]).mul(gamma_t.get(&[m, j, k])));
            acc = acc.sub(&gamma_t.get(&[l, j, m]).mul(gamma_t.get(&[m, i, k])));
        }
        acc
    });
    let g_t = cp.g_jets.truncate(target);
    JetTensor::from_fn(n, 4, |idx| {
        let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
        let mut acc: Option<Jet> = None;
        for m in 0..n {
            let term = g_t.get(&[l, m]).mul(upper.get(&[m, i, j, k]));
            acc = Some(match acc {
                None => term,
                Some(p) => p.add(&term),
            });
        }
        acc.unwrap()
    })
}

fn ricci_scal(cp: &ChartPoint, riemann: &JetTensor) -> (JetTensor, Jet) {
    let n = cp.n;
    let target = riemann.order();
    let ginv = cp.g_inv_jets.truncate(target);
    let ricci = JetTensor::from_fn(n, 2, |idx| {
        // Ric_{ab} = g^{cd} R_{a c d b}
        let (a, b) = (idx[0], idx[1]);
        let mut acc: Option<Jet> = None;
        for c in 0..n {
            for d in 0..n {
                let term = ginv.get(&[c, d]).mul(riemann.get(&[a, c, d, b]));
                acc = Some(match acc {
                    None => term,
                    Some(p) => p.add(&term),
                });
            }
        }
        acc.unwrap()
    });
    let mut scal: Option<Jet> = None;
    for a in 0..n {
        for b in 0..n {
            let term = ginv.get(&[a, b]).mul(ricci.get(&[a, b]));
            scal = Some(match scal {
                None => term,
                Some(p) => p.add(&term),
            });
        }
    }
    (ricci, scal.unwrap())
}

fn schouten_from(cp: &ChartPoint, ricci: &JetTensor, scal: &Jet) -> JetTensor {
    let n = cp.n;
    let target = ricci.order();
    let g_t = cp.g_jets.truncate(target);
    let factor = 1.0 / (n as f64 - 2.0);
    let scal_part = scal.scale(1.0 / (2.0 * (n as f64 - 1.0)));
    JetTensor::from_fn(n, 2, |idx| {
        let term = scal_part
            .mul(g_t.get(&[idx[0], idx[1]]))
            .sub(ricci.get(&[idx[0], idx[1]]));
        term.scale(factor)
    })
}

/// Kulkarni-Nomizu (0,4) components of g ⋆ K.
fn kn_tensor(cp: &ChartPoint, k: &JetTensor) -> JetTensor {
    let n = cp.n;
    let target = k.order();
    let g_t = cp.g_jets.truncate(target);
    JetTensor::from_fn(n, 4, |idx| {
        let (i, j, kk, l) = (idx[0], idx[1], idx[2], idx[3]);
        g_t.get(&[i, kk])
            .mul(k.get(&[j, l]))
            .add(&g_t.get(&[j, l]).mul(k.get(&[i, kk])))
            .sub(&g_t.get(&[i, l]).mul(k.get(&[j, kk])))
            .sub(&g_t.get(&[j, kk]).mul(k.get(&[i, l])))
    })
}

fn weyl_from(cp: &ChartPoint, riemann: &JetTensor, k: &JetTensor) -> JetTensor {
    let kn = kn_tensor(cp, k);
    JetTensor::from_fn(cp.n, 4, |idx| riemann.get(idx).sub(kn.get(idx)))
}

fn cotton_from(k: &JetTensor, gamma: &JetTensor) -> JetTensor {
    let nabla_k = cov_deriv(k, gamma); // [d][b][c] = ∇_d K_{bc}
    JetTensor::from_fn(k.n, 3, |idx| {
        let (a, b, c) = (idx[0], idx[1], idx[2]);
        nabla_k.get(&[b, c, a]).sub(nabla_k.get(&[c, b, a]))
    })
}

fn bach_from(
    cp: &ChartPoint,
    cotton: &JetTensor,
    weyl: &JetTensor,
    k: &JetTensor,
    gamma: &JetTensor,
) -> JetTensor {
    let n = cp.n;
    let nabla_c = cov_deriv(cotton, gamma); // [d][x][y][z]
    let target = nabla_c.order();
    let ginv = cp.g_inv_jets.truncate(target);
    // K^{db} = g^{da} g^{bc} K_{ac}
    let k_upper = JetTensor::from_fn(n, 2, |idx| {
        let (d, b) = (idx[0], idx[1]);
        let mut acc: Option<Jet> = None;
        for a in 0..n {
            for c in 0..n {
                let term = ginv
                    .get(&[d, a])
                    .mul(ginv.get(&[b, c]))
                    .mul(&k.get(&[a, c]).truncate(target));
                acc = Some(match acc {
                    None => term,
                    Some(p) => p.add(&term),
                });
            }
        }
        acc.unwrap()
    });
    JetTensor::from_fn(n, 2, |idx| {
        let (x, y) = (idx[0], idx[1]);
        let mut acc: Option<Jet> = None;
        for d in 0..n {
            for z in 0..n {
                let term = ginv.get(&[d, z]).mul(nabla_c.get(&[d, x, y, z]));
                acc = Some(match acc {
                    None => term,
                    Some(p) => p.add(&term),
                });
            }
        }
        let mut acc = acc.unwrap();
        for d in 0..n {
            for b in 0..n {
                let term = k_upper
                    .get(&[d, b])
                    .mul(&weyl.get(&[b, x, y, d]).truncate(target));
                acc = acc.sub(&term);
            }
        }
        acc
    })
}

// ---------------------------------------------------------------------------
// Value-level bundle and the spec'd operations
// ---------------------------------------------------------------------------

/// Value-level snapshot of the curvature hierarchy at one point.
pub struct CurvatureBundle {
    pub christoffel: Tensor,
    pub riemann: Tensor,
    pub ricci: Tensor,
    pub scal: f64,
    pub schouten: Option<Tensor>,
    pub weyl: Option<Tensor>,
    pub cotton: Option<Tensor>,
    pub bach: Option<Tensor>,
}

impl CurvatureJets {
    pub fn bundle(&self) -> CurvatureBundle {
        CurvatureBundle {
            christoffel: self.gamma.values(),
            riemann: self.riemann.values(),
            ricci: self.ricci.values(),
            scal: self.scal.value(),
            schouten: self.schouten.as_ref().map(|t| t.values()),
            weyl: self.weyl.as_ref().map(|t| t.values()),
            cotton: self.cotton.as_ref().map(|t| t.values()),
            bach: self.bach.as_ref().map(|t| t.values()),
        }
    }
}

pub fn riemannian_data(cp: &ChartPoint) -> Result<(Tensor, Tensor, Tensor, f64)> {
    let cj = CurvatureJets::new(cp)?;
    Ok((
        cj.gamma.values(),
        cj.riemann.values(),
        cj.ricci.values(),
        cj.scal.value(),
    ))
}

pub fn schouten(cp: &ChartPoint) -> Result<Tensor> {
    let cj = CurvatureJets::new(cp)?;
    Ok(cj.schouten()?.values())
}

pub fn weyl(cp: &ChartPoint) -> Result<Tensor> {
    let cj = CurvatureJets::new(cp)?;
    Ok(cj.weyl()?.values())
}

pub fn cotton(cp: &ChartPoint) -> Result<Tensor> {
    let cj = CurvatureJets::new(cp)?;
    Ok(cj.cotton()?.values())
}

pub fn bach(cp: &ChartPoint) -> Result<Tensor> {
    let cj = CurvatureJets::new(cp)?;
    Ok(cj.bach()?.values())
}

/// Action of a 2-form ω on a p-form through the ι map: the endomorphism
/// A = (· ⨼ ω)^♯ acts by (ω ∘ α)(X_1..X_p) = −Σ_k α(X_1, .., A X_k, .., X_p).
pub fn two_form_action(omega: &FormValue, alpha: &FormValue, g_inv: &DMatrix<f64>) -> FormValue {
    assert_eq!(omega.degree, 2);
    let n = alpha.n;
    let mut endo = vec![vec![0.0; n]; n];
    for (c, row) in endo.iter_mut().enumerate() {
        for (a, item) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for b in 0..n {
                acc += g_inv[(c, b)] * omega.coeff(&[a as u8, b as u8]);
            }
            *item = acc;
        }
    }
    endo_action(&endo, alpha)
}

/// The negative-transpose derivation action of an endomorphism on forms.
pub fn endo_action(endo: &[Vec<f64>], alpha: &FormValue) -> FormValue {
    let n = alpha.n;
    let mut out = FormValue::zero(n, alpha.degree);
    if alpha.is_zero_object() || alpha.degree == 0 {
        return out;
    }
    let basis = alpha.basis_table();
    for (i, combo) in basis.combos.iter().enumerate() {
        let mut acc = 0.0;
        for (slot, &isl) in combo.iter().enumerate() {
            for c in 0..n {
                let a_ci = endo[c][isl as usize];
                if a_ci == 0.0 {
                    continue;
                }
                let mut rep = combo.clone();
                rep[slot] = c as u8;
                acc -= a_ci * alpha.coeff(&rep);
            }
        }
        out.c[i] = acc;
    }
    out
}

/// Kulkarni-Nomizu action of g ⋆ K on a 2-form, extended bilinearly from
/// g⋆K(s_i^♭ ∧ s_j^♭) = s_i^♭ ∧ K(s_j)^♭ − s_j^♭ ∧ K(s_i)^♭.
pub fn kn_action(cp: &ChartPoint, k: &Tensor, two_form: &FormValue) -> Result<FormValue> {
    if two_form.degree != 2 {
        return Err(Error::Degree(format!(
            "Kulkarni-Nomizu action expects degree 2, got {}",
            two_form.degree
        )));
    }
    let n = cp.n;
    let kn = kn_values(cp, k);
    Ok(curvature_on_two_form(&kn, two_form, &cp.g_inv, n))
}

fn kn_values(cp: &ChartPoint, k: &Tensor) -> Tensor {
    let n = cp.n;
    Tensor::from_fn(n, 4, |idx| {
        let (i, j, kk, l) = (idx[0], idx[1], idx[2], idx[3]);
        cp.g[(i, kk)] * k.get(&[j, l]) + cp.g[(j, l)] * k.get(&[i, kk])
            - cp.g[(i, l)] * k.get(&[j, kk])
            - cp.g[(j, kk)] * k.get(&[i, l])
    })
}

/// A curvature-type (0,4) tensor as a symmetric map on 2-forms:
/// (T ω)_{kl} = ½ g^{ia} g^{jb} T_{ijkl} ω_{ab}.
pub fn curvature_on_two_form(
    t: &Tensor,
    omega: &FormValue,
    g_inv: &DMatrix<f64>,
    n: usize,
) -> FormValue {
    // raise the first two slots of ω
    let mut omega_up = vec![vec![0.0; n]; n];
    for (i, row) in omega_up.iter_mut().enumerate() {
        for (j, item) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += g_inv[(i, a)] * g_inv[(j, b)] * omega.coeff(&[a as u8, b as u8]);
                }
            }
            *item = acc;
        }
    }
    let mut out = FormValue::zero(n, 2);
    let basis = out.basis_table();
    for (pos, combo) in basis.combos.iter().enumerate() {
        let (k, l) = (combo[0] as usize, combo[1] as usize);
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += 0.5 * t.get(&[i, j, k, l]) * omega_up[i][j];
            }
        }
        out.c[pos] = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::MetricSpec;
    use crate::expr::{parse_expr, Expr};

    fn flat(r: usize, s: usize) -> MetricSpec {
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
            "flat",
            r,
            s,
            (1..=n).map(|i| format!("x{i}")).collect(),
            g,
        )
        .unwrap()
    }

    fn sphere_chart(n: usize) -> MetricSpec {
        // conformal chart of the unit sphere, g = (1 + |x|²/4)^{-2} δ
        let sq = (1..=n)
            .map(|i| format!("x{i}^2"))
            .collect::<Vec<_>>()
            .join(" + ");
        let conf = format!("(1/(1 + ({sq})/4))^2");
        let g = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            parse_expr(&conf, n).unwrap()
                        } else {
                            Expr::num(0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        MetricSpec::new(
            format!("S{n}"),
            0,
            n,
            (1..=n).map(|i| format!("x{i}")).collect(),
            g,
        )
        .unwrap()
    }

    fn pp_wave(h: &str) -> MetricSpec {
        // 2 du dv + H(x,y) du² + dx² + dy², coords (u, v, x, y)
        let names: Vec<String> = ["u", "v", "x", "y"].iter().map(|s| s.to_string()).collect();
        let hh = crate::expr::parse_expr_with_names(h, &names).unwrap();
        let z = || Expr::num(0.0);
        let g = vec![
            vec![hh, Expr::num(1.0), z(), z()],
            vec![Expr::num(1.0), z(), z(), z()],
            vec![z(), z(), Expr::num(1.0), z()],
            vec![z(), z(), z(), Expr::num(1.0)],
        ];
        MetricSpec::new("pp-wave", 1, 3, names, g).unwrap()
    }

    #[test]
    fn flat_curvature_vanishes() {
        for (r, s) in [(0, 3), (1, 3), (2, 2)] {
            let spec = flat(r, s);
            let cp = spec.metric_at(&vec![0.1; r + s], 3).unwrap();
            let (gam, riem, ric, scal) = riemannian_data(&cp).unwrap();
            assert!(gam.coord_norm() < 1e-14);
            assert!(riem.coord_norm() < 1e-14);
            assert!(ric.coord_norm() < 1e-14);
            assert!(scal.abs() < 1e-14);
        }
    }

    #[test]
    fn unit_sphere_is_einstein_with_positive_scal() {
        let spec = sphere_chart(3);
        for p in spec.sample_points(5, 1) {
            let cp = spec.metric_at(&p, 3).unwrap();
            let (_, _, ric, scal) = riemannian_data(&cp).unwrap();
            assert!((scal - 6.0).abs() < 1e-9, "scal = {scal}");
            // Ric = 2 g
            for i in 0..3 {
                for j in 0..3 {
                    assert!((ric.get(&[i, j]) - 2.0 * cp.g[(i, j)]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn unit_sphere_schouten() {
        let spec = sphere_chart(3);
        let p = [0.1, -0.2, 0.3];
        let cp = spec.metric_at(&p, 3).unwrap();
        let k = schouten(&cp).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.get(&[i, j]) + 0.5 * cp.g[(i, j)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pp_wave_ricci_and_scal() {
        // Ric_uu = −½ (∂²_x + ∂²_y) H, scal = 0, K_uu = ΔH / (2(n−2))
        let spec = pp_wave("x^3 + x*y^2");
        let p = [0.2, -0.1, 0.4, 0.3];
        let cp = spec.metric_at(&p, 3).unwrap();
        let (_, _, ric, scal) = riemannian_data(&cp).unwrap();
        let lap_h = 6.0 * p[2] + 2.0 * p[2]; // Δ(x³ + x y²) = 6x + 2x
        assert!((ric.get(&[0, 0]) + 0.5 * lap_h).abs() < 1e-9);
        assert!(scal.abs() < 1e-10);
        for (i, j) in [(0, 1), (1, 1), (2, 2), (2, 3), (0, 2)] {
            if (i, j) != (0, 0) {
                assert!(ric.get(&[i, j]).abs() < 1e-9);
            }
        }
        let k = schouten(&cp).unwrap();
        assert!((k.get(&[0, 0]) - lap_h / 4.0).abs() < 1e-9);
    }

    #[test]
    fn riemann_symmetries_and_first_bianchi() {
        let spec = pp_wave("x^3");
        let p = [0.1, 0.2, 0.35, -0.2];
        let cp = spec.metric_at(&p, 3).unwrap();
        let (_, riem, _, _) = riemannian_data(&cp).unwrap();
        let n = 4;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = riem.get(&[i, j, k, l]);
                        assert!((r + riem.get(&[j, i, k, l])).abs() < 1e-10);
                        assert!((r + riem.get(&[i, j, l, k])).abs() < 1e-10);
                        assert!((r - riem.get(&[k, l, i, j])).abs() < 1e-10);
                        let bianchi = riem.get(&[i, j, k, l])
                            + riem.get(&[j, k, i, l])
                            + riem.get(&[k, i, j, l]);
                        assert!(bianchi.abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn sphere_s4_weyl_vanishes() {
        let spec = sphere_chart(4);
        for p in spec.sample_points(3, 2) {
            let cp = spec.metric_at(&p, 3).unwrap();
            let w = weyl(&cp).unwrap();
            assert!(w.coord_norm() < 1e-9, "|W| = {}", w.coord_norm());
        }
    }

    #[test]
    fn einstein_cotton_and_bach_vanish() {
        let spec = sphere_chart(3);
        let p = [0.15, 0.05, -0.1];
        let cp = spec.metric_at(&p, 4).unwrap();
        let c = cotton(&cp).unwrap();
        assert!(c.coord_norm() < 1e-8, "|C| = {}", c.coord_norm());
        let b = bach(&cp).unwrap();
        assert!(b.coord_norm() < 1e-7, "|B| = {}", b.coord_norm());
    }

    #[test]
    fn pp_wave_cotton_nonzero_and_bach_symmetric() {
        let spec = pp_wave("x^3");
        let p = [0.3, -0.2, 0.25, 0.1];
        let cp = spec.metric_at(&p, 4).unwrap();
        let c = cotton(&cp).unwrap();
        assert!(c.coord_norm() > 1e-3, "expected nonzero Cotton");
        // the component pairing ∂_x and ∂_u survives: C_{u,x,u} = g(C(∂_x,∂_u),∂_u)
        assert!(c.get(&[0, 2, 0]).abs() > 1e-4);
        let b = bach(&cp).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((b.get(&[i, j]) - b.get(&[j, i])).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn kn_action_cases() {
        let spec = flat(0, 3);
        let cp = spec.metric_at(&[0.0; 3], 2).unwrap();
        let zero_k = Tensor::zeros(3, 2);
        let w = FormValue::basis(3, &[0, 1]);
        let out = kn_action(&cp, &zero_k, &w).unwrap();
        assert!(out.coord_norm() < 1e-15);

        // K = g on flat identity: (g⋆g)(dx_i ∧ dx_j) = 2 dx_i ∧ dx_j
        let g_k = Tensor::from_fn(3, 2, |idx| cp.g[(idx[0], idx[1])]);
        let out = kn_action(&cp, &g_k, &w).unwrap();
        assert!((out.coeff(&[0, 1]) - 2.0).abs() < 1e-12);
        assert!(out.coeff(&[0, 2]).abs() < 1e-12);

        let err = kn_action(&cp, &g_k, &FormValue::basis(3, &[0])).unwrap_err();
        assert!(matches!(err, Error::Degree(_)));
    }

    #[test]
    fn riemann_minus_weyl_equals_kn_on_two_forms() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = sphere_chart(4);
        let p = [0.2, -0.1, 0.05, 0.15];
        let cp = spec.metric_at(&p, 3).unwrap();
        let cj = CurvatureJets::new(&cp).unwrap();
        let riem = cj.riemann.values();
        let w = cj.weyl().unwrap().values();
        let k = cj.schouten().unwrap().values();
        for _ in 0..5 {
            let mut omega = FormValue::zero(4, 2);
            for c in omega.c.iter_mut() {
                *c = rng.gen_range(-1.0..1.0);
            }
            let via_r = curvature_on_two_form(&riem, &omega, &cp.g_inv, 4);
            let via_w = curvature_on_two_form(&w, &omega, &cp.g_inv, 4);
            let via_kn = kn_action(&cp, &k, &omega).unwrap();
            let diff = via_r.sub(&via_w).sub(&via_kn);
            assert!(diff.coord_norm() < 1e-8, "R − W ≠ g⋆K on 2-forms");
        }
    }

    #[test]
    fn two_form_action_matches_wedge_interior_formula() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let spec = flat(1, 3);
        let cp = spec.metric_at(&[0.0; 4], 2).unwrap();
        // ω = a^♭ ∧ b^♭ acting on α: −a^♭∧(b⨼α) + b^♭∧(a⨼α)
        for _ in 0..10 {
            let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let af = crate::exterior::flat(&cp, &a);
            let bf = crate::exterior::flat(&cp, &b);
            let omega = crate::exterior::wedge(&af, &bf);
            let mut alpha = FormValue::zero(4, 2);
            for c in alpha.c.iter_mut() {
                *c = rng.gen_range(-1.0..1.0);
            }
            let lhs = two_form_action(&omega, &alpha, &cp.g_inv);
            let rhs = crate::exterior::wedge(&af, &crate::exterior::interior(&b, &alpha))
                .scale(-1.0)
                .add(&crate::exterior::wedge(
                    &bf,
                    &crate::exterior::interior(&a, &alpha),
                ));
            assert!(lhs.sub(&rhs).coord_norm() < 1e-10);
        }
    }

    #[test]
    fn schouten_requires_dimension_three() {
        let spec = flat(0, 2);
        let cp = spec.metric_at(&[0.0, 0.0], 2).unwrap();
        assert!(schouten(&cp).is_err());
    }
}
