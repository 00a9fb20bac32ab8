//! Dissimilarity scores `f(h, r, t)` for the five models and their analytic
//! gradients. Lower is more plausible for every model; the bilinear scores
//! are negated to fit that orientation.

use crate::dataset::Triple;
use crate::params::{DistanceNorm, ModelKind, ModelParams, Real, RowGrads};

/// A score together with its partial derivatives over the rows it reads.
#[derive(Debug, Clone)]
pub struct ScoreGrad {
    pub value: f64,
    pub grads: RowGrads,
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn safe_div(x: f64, d: f64) -> f64 {
    if d > 0.0 {
        x / d
    } else {
        0.0
    }
}

pub fn score<T: Real>(params: &ModelParams<T>, t: &Triple) -> f64 {
    eval(params, t, None)
}

pub fn score_grad<T: Real>(params: &ModelParams<T>, t: &Triple) -> ScoreGrad {
    let mut grads = RowGrads::new();
    let value = eval(params, t, Some((1.0, &mut grads)));
    ScoreGrad { value, grads }
}

/// Adds `coeff · ∂f/∂θ` into `grads` and returns `f`.
pub fn score_grad_into<T: Real>(
    params: &ModelParams<T>,
    t: &Triple,
    coeff: f64,
    grads: &mut RowGrads,
) -> f64 {
    eval(params, t, Some((coeff, grads)))
}

/// `f(e_pos, r_sub, e_neg)`: the ordinary score with the substitution relation.
pub fn substitution_score<T: Real>(params: &ModelParams<T>, e_pos: usize, e_neg: usize) -> f64 {
    score(params, &Triple::new(e_pos, params.sub_relation(), e_neg))
}

pub fn substitution_score_grad<T: Real>(
    params: &ModelParams<T>,
    e_pos: usize,
    e_neg: usize,
) -> ScoreGrad {
    score_grad(params, &Triple::new(e_pos, params.sub_relation(), e_neg))
}

fn eval<T: Real>(params: &ModelParams<T>, t: &Triple, grads: Option<(f64, &mut RowGrads)>) -> f64 {
    debug_assert!(t.head < params.num_entities && t.tail < params.num_entities);
    debug_assert!(t.relation <= params.num_relations);
    match params.kind {
        ModelKind::TransE => transe(params, t, grads),
        ModelKind::TransD => transd(params, t, grads),
        ModelKind::DistMult => distmult(params, t, grads),
        ModelKind::ComplEx => complex(params, t, grads),
        ModelKind::RotatE => rotate(params, t, grads),
    }
}

fn transe<T: Real>(p: &ModelParams<T>, t: &Triple, grads: Option<(f64, &mut RowGrads)>) -> f64 {
    let h = p.entity_row(0, t.head);
    let r = p.relation_row(0, t.relation);
    let tl = p.entity_row(0, t.tail);
    let diff: Vec<f64> = h
        .iter()
        .zip(r)
        .zip(tl)
        .map(|((a, b), c)| a.to_f64() + b.to_f64() - c.to_f64())
        .collect();
    let value = match p.norm {
        DistanceNorm::L1 => diff.iter().map(|x| x.abs()).sum(),
        DistanceNorm::L2 => diff.iter().map(|x| x * x).sum::<f64>().sqrt(),
    };
    if let Some((coeff, g)) = grads {
        let unit: Vec<f64> = match p.norm {
            DistanceNorm::L1 => diff.iter().map(|&x| coeff * sign(x)).collect(),
            DistanceNorm::L2 => diff.iter().map(|&x| coeff * safe_div(x, value)).collect(),
        };
        let (ent, rel) = (p.entity_id(0), p.relation_id(0));
        g.add(ent, t.head, &unit, 1.0);
        g.add(rel, t.relation, &unit, 1.0);
        g.add(ent, t.tail, &unit, -1.0);
    }
    value
}

fn dot<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.to_f64() * y.to_f64()).sum()
}

// h⊥ = h + (w_h·h) w_r, t⊥ = t + (w_t·t) w_r, f = ‖h⊥ + r − t⊥‖₂.
fn transd<T: Real>(p: &ModelParams<T>, t: &Triple, grads: Option<(f64, &mut RowGrads)>) -> f64 {
    let h = p.entity_row(0, t.head);
    let wh = p.entity_row(1, t.head);
    let tl = p.entity_row(0, t.tail);
    let wt = p.entity_row(1, t.tail);
    let r = p.relation_row(0, t.relation);
    let wr = p.relation_row(1, t.relation);
    let a = dot(wh, h);
    let b = dot(wt, tl);
    let diff: Vec<f64> = (0..p.dim)
        .map(|j| h[j].to_f64() - tl[j].to_f64() + r[j].to_f64() + (a - b) * wr[j].to_f64())
        .collect();
    let value = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
    if let Some((coeff, g)) = grads {
        let u: Vec<f64> = diff.iter().map(|&x| coeff * safe_div(x, value)).collect();
        let ur: f64 = u.iter().zip(wr).map(|(x, w)| x * w.to_f64()).sum();
        let d = p.dim;
        let (emb, tr) = (p.entity_id(0), p.entity_id(1));
        let (remb, rtr) = (p.relation_id(0), p.relation_id(1));
        {
            let gh = g.row_mut(emb, t.head, d);
            for j in 0..d {
                gh[j] += u[j] + ur * wh[j].to_f64();
            }
        }
        {
            let gwh = g.row_mut(tr, t.head, d);
            for j in 0..d {
                gwh[j] += ur * h[j].to_f64();
            }
        }
        {
            let gt = g.row_mut(emb, t.tail, d);
            for j in 0..d {
                gt[j] -= u[j] + ur * wt[j].to_f64();
            }
        }
        {
            let gwt = g.row_mut(tr, t.tail, d);
            for j in 0..d {
                gwt[j] -= ur * tl[j].to_f64();
            }
        }
        g.add(remb, t.relation, &u, 1.0);
        g.add(rtr, t.relation, &u, a - b);
    }
    value
}

fn distmult<T: Real>(p: &ModelParams<T>, t: &Triple, grads: Option<(f64, &mut RowGrads)>) -> f64 {
    let h = p.entity_row(0, t.head);
    let r = p.relation_row(0, t.relation);
    let tl = p.entity_row(0, t.tail);
    let value = -(0..p.dim)
        .map(|j| h[j].to_f64() * r[j].to_f64() * tl[j].to_f64())
        .sum::<f64>();
    if let Some((coeff, g)) = grads {
        let d = p.dim;
        let (ent, rel) = (p.entity_id(0), p.relation_id(0));
        {
            let gh = g.row_mut(ent, t.head, d);
            for j in 0..d {
                gh[j] -= coeff * r[j].to_f64() * tl[j].to_f64();
            }
        }
        {
            let gr = g.row_mut(rel, t.relation, d);
            for j in 0..d {
                gr[j] -= coeff * h[j].to_f64() * tl[j].to_f64();
            }
        }
        {
            let gt = g.row_mut(ent, t.tail, d);
            for j in 0..d {
                gt[j] -= coeff * h[j].to_f64() * r[j].to_f64();
            }
        }
    }
    value
}

// f = −Re(Σ h r conj(t)) with rows laid out [re; im].
fn complex<T: Real>(p: &ModelParams<T>, t: &Triple, grads: Option<(f64, &mut RowGrads)>) -> f64 {
    let d = p.dim;
    let h = p.entity_row(0, t.head);
    let r = p.relation_row(0, t.relation);
    let tl = p.entity_row(0, t.tail);
    let c = |row: &[T], j: usize| (row[j].to_f64(), row[d + j].to_f64());
    let mut s = 0.0;
    for j in 0..d {
        let (hr, hi) = c(h, j);
        let (rr, ri) = c(r, j);
        let (tr, ti) = c(tl, j);
        s += (hr * rr - hi * ri) * tr + (hr * ri + hi * rr) * ti;
    }
    if let Some((coeff, g)) = grads {
        let (ent, rel) = (p.entity_id(0), p.relation_id(0));
        let k = -coeff;
        {
            let gh = g.row_mut(ent, t.head, 2 * d);
            for j in 0..d {
                let (rr, ri) = c(r, j);
                let (tr, ti) = c(tl, j);
                gh[j] += k * (rr * tr + ri * ti);
                gh[d + j] += k * (rr * ti - ri * tr);
            }
        }
        {
            let gr = g.row_mut(rel, t.relation, 2 * d);
            for j in 0..d {
                let (hr, hi) = c(h, j);
                let (tr, ti) = c(tl, j);
                gr[j] += k * (hr * tr + hi * ti);
                gr[d + j] += k * (hr * ti - hi * tr);
            }
        }
        {
            let gt = g.row_mut(ent, t.tail, 2 * d);
            for j in 0..d {
                let (hr, hi) = c(h, j);
                let (rr, ri) = c(r, j);
                gt[j] += k * (hr * rr - hi * ri);
                gt[d + j] += k * (hr * ri + hi * rr);
            }
        }
    }
    -s
}

// f = Σ_j |h_j e^{iθ_j} − t_j|, the sum of complex moduli.
fn rotate<T: Real>(p: &ModelParams<T>, t: &Triple, grads: Option<(f64, &mut RowGrads)>) -> f64 {
    let d = p.dim;
    let h = p.entity_row(0, t.head);
    let theta = p.relation_row(0, t.relation);
    let tl = p.entity_row(0, t.tail);
    let mut parts = Vec::with_capacity(d);
    let mut value = 0.0;
    for j in 0..d {
        let (hr, hi) = (h[j].to_f64(), h[d + j].to_f64());
        let (tr, ti) = (tl[j].to_f64(), tl[d + j].to_f64());
        let (s, c) = theta[j].to_f64().sin_cos();
        let re = hr * c - hi * s - tr;
        let im = hr * s + hi * c - ti;
        let m = (re * re + im * im).sqrt();
        value += m;
        parts.push((re, im, m, s, c));
    }
    if let Some((coeff, g)) = grads {
        let (ent, rel) = (p.entity_id(0), p.relation_id(0));
        {
            let gh = g.row_mut(ent, t.head, 2 * d);
            for (j, &(re, im, m, s, c)) in parts.iter().enumerate() {
                gh[j] += coeff * safe_div(re * c + im * s, m);
                gh[d + j] += coeff * safe_div(-re * s + im * c, m);
            }
        }
        {
            let gr = g.row_mut(rel, t.relation, d);
            for (j, &(re, im, m, s, c)) in parts.iter().enumerate() {
                let (hr, hi) = (h[j].to_f64(), h[d + j].to_f64());
                gr[j] += coeff * safe_div(re * (-hr * s - hi * c) + im * (hr * c - hi * s), m);
            }
        }
        {
            let gt = g.row_mut(ent, t.tail, 2 * d);
            for (j, &(re, im, m, _, _)) in parts.iter().enumerate() {
                gt[j] -= coeff * safe_div(re, m);
                gt[d + j] -= coeff * safe_div(im, m);
            }
        }
    }
    value
}
