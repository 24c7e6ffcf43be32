//! Independent reference implementations used by the integration tests.
//! Everything here is written from the definitions, in f64 where the
//! library works in f32, and shares no code with the crate's model paths.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use coursetime::numerics::WeightBundle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub type M = Vec<Vec<f64>>;

pub fn to_m(rows: usize, cols: usize, data: &[f32]) -> M {
    (0..rows).map(|r| data[r * cols..(r + 1) * cols].iter().map(|&x| x as f64).collect()).collect()
}

fn tensor(w: &WeightBundle, name: &str) -> (Vec<usize>, Vec<f64>) {
    let t = w.get(name).unwrap_or_else(|_| panic!("tensor {name}"));
    (t.dims.iter().map(|&d| d as usize).collect(), t.data.iter().map(|&x| x as f64).collect())
}

fn mat(w: &WeightBundle, name: &str) -> M {
    let (dims, data) = tensor(w, name);
    (0..dims[0]).map(|r| data[r * dims[1]..(r + 1) * dims[1]].to_vec()).collect()
}

fn vecf(w: &WeightBundle, name: &str) -> Vec<f64> {
    tensor(w, name).1
}

/// `x W^T + b` for each row of `x`.
fn affine(x: &M, wt: &M, b: &[f64]) -> M {
    x.iter()
        .map(|row| wt.iter().zip(b).map(|(wr, bi)| wr.iter().zip(row).map(|(a, c)| a * c).sum::<f64>() + bi).collect())
        .collect()
}

fn layer_norm(x: &M, g: &[f64], b: &[f64]) -> M {
    x.iter()
        .map(|row| {
            let n = row.len() as f64;
            let mu = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
            row.iter().enumerate().map(|(i, v)| (v - mu) / (var + 1e-5).sqrt() * g[i] + b[i]).collect()
        })
        .collect()
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + ((2.0 / std::f64::consts::PI).sqrt() * (x + 0.044715 * x.powi(3))).tanh())
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn attention(w: &WeightBundle, p: &str, x: &M, ctx: &M) -> M {
    let q = affine(x, &mat(w, &format!("{p}.wq")), &vecf(w, &format!("{p}.bq")));
    let k = affine(ctx, &mat(w, &format!("{p}.wk")), &vecf(w, &format!("{p}.bk")));
    let v = affine(ctx, &mat(w, &format!("{p}.wv")), &vecf(w, &format!("{p}.bv")));
    let d = q[0].len();
    let heads = 4;
    let dh = d / heads;
    let mut out = vec![vec![0.0; d]; q.len()];
    for h in 0..heads {
        let lo = h * dh;
        for (i, qi) in q.iter().enumerate() {
            let logits: Vec<f64> = k
                .iter()
                .map(|kj| (lo..lo + dh).map(|c| qi[c] * kj[c]).sum::<f64>() / (dh as f64).sqrt())
                .collect();
            let a = softmax(&logits);
            for (j, aj) in a.iter().enumerate() {
                for c in lo..lo + dh {
                    out[i][c] += aj * v[j][c];
                }
            }
        }
    }
    affine(&out, &mat(w, &format!("{p}.wo")), &vecf(w, &format!("{p}.bo")))
}

fn add(a: &mut M, b: &M) {
    for (r, s) in a.iter_mut().zip(b) {
        for (x, y) in r.iter_mut().zip(s) {
            *x += y;
        }
    }
}

fn block(w: &WeightBundle, p: &str, x: &M, ctx: &M) -> M {
    let ln = |name: &str, m: &M| layer_norm(m, &vecf(w, &format!("{p}.{name}.gamma")), &vecf(w, &format!("{p}.{name}.beta")));
    let mut h = x.clone();
    let kv = ln("ln_kv", ctx);
    let a = attention(w, &format!("{p}.attn"), &ln("ln_q", &h), &kv);
    add(&mut h, &a);
    let mut f = affine(&ln("ln_ff", &h), &mat(w, &format!("{p}.ff.w1")), &vecf(w, &format!("{p}.ff.b1")));
    for r in &mut f {
        for v in r.iter_mut() {
            *v = gelu(*v);
        }
    }
    let f = affine(&f, &mat(w, &format!("{p}.ff.w2")), &vecf(w, &format!("{p}.ff.b2")));
    add(&mut h, &f);
    h
}

fn stack(w: &WeightBundle, prefix: &str, x: &M, ctx: &M) -> M {
    let mut h = x.clone();
    let mut l = 0;
    while w.contains(&format!("{prefix}.{l}.attn.wq")) {
        h = block(w, &format!("{prefix}.{l}"), &h, ctx);
        l += 1;
    }
    h
}

pub fn normalize(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

pub fn project(w: &WeightBundle, frames: &M) -> M {
    affine(frames, &mat(w, "proj.weight"), &vecf(w, "proj.bias"))
}

pub fn fuse(w: &WeightBundle, tokens: &M, frames: &M) -> Vec<f64> {
    let ctx = project(w, frames);
    let h = stack(w, "fusion", tokens, &ctx);
    let pool = vecf(w, "fusion.pool");
    let a = softmax(&h.iter().map(|r| r.iter().zip(&pool).map(|(x, y)| x * y).sum()).collect::<Vec<f64>>());
    let d = h[0].len();
    let pooled: Vec<f64> = (0..d).map(|c| h.iter().zip(&a).map(|(r, ai)| ai * r[c]).sum()).collect();
    normalize(&pooled)
}

pub fn gate(w: &WeightBundle, z_txt: &[f64], z_img_raw: &[f64]) -> Vec<f64> {
    let z_img = project(w, &vec![z_img_raw.to_vec()]).remove(0);
    let cat: Vec<f64> = z_txt.iter().chain(&z_img).copied().collect();
    let mut hidden = affine(&vec![cat], &mat(w, "gate.w1"), &vecf(w, "gate.b1"));
    for v in hidden[0].iter_mut() {
        *v = gelu(*v);
    }
    let g = affine(&hidden, &mat(w, "gate.w2"), &vecf(w, "gate.b2")).remove(0);
    let out: Vec<f64> =
        g.iter().zip(z_txt.iter().zip(&z_img)).map(|(gi, (t, i))| sigmoid(*gi) * i + (1.0 - sigmoid(*gi)) * t).collect();
    normalize(&out)
}

/// Score for a query against ASR tokens plus already projected frames.
pub fn rerank_score(w: &WeightBundle, query: &M, asr: &M, frames_proj: &M) -> f64 {
    let ctx: M = asr.iter().chain(frames_proj).cloned().collect();
    let h = stack(w, "rerank", query, &ctx);
    let d = h[0].len();
    let head = vecf(w, "rerank.head.weight");
    let mean: Vec<f64> = (0..d).map(|c| h.iter().map(|r| r[c]).sum::<f64>() / h.len() as f64).collect();
    mean.iter().zip(&head).map(|(x, y)| x * y).sum::<f64>() + vecf(w, "rerank.head.bias")[0]
}

/// Brute-force exact search with the index's f32 scoring: unit rows,
/// unit query, sequential dot; full sort by score desc then id asc.
pub fn brute_force_topk(ids: &[String], rows: &[Vec<f32>], q: &[f32], k: usize) -> Vec<(String, f32)> {
    let unit = |v: &[f32]| {
        let n = v.iter().fold(0.0f32, |a, x| a + x * x).sqrt();
        v.iter().map(|x| x / n).collect::<Vec<f32>>()
    };
    let qn = unit(q);
    let mut all: Vec<(String, f32)> = ids
        .iter()
        .zip(rows)
        .map(|(id, r)| (id.clone(), unit(r).iter().zip(&qn).fold(0.0f32, |a, (x, y)| a + x * y)))
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Greedy MMR recomputing every max-similarity from scratch.
pub fn greedy_mmr(ids: &[String], rel: &[f64], sim: &[Vec<f64>], alpha: f64, m: usize) -> Vec<(usize, f64)> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    while chosen.len() < m.min(ids.len()) {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..ids.len() {
            if chosen.contains(&c) {
                continue;
            }
            let pen = chosen.iter().map(|&s| sim[c][s]).fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));
            let v = alpha * rel[c] - (1.0 - alpha) * pen.unwrap_or(0.0);
            if best.is_none_or(|(b, bv)| v > bv || (v == bv && ids[c] < ids[b])) {
                best = Some((c, v));
            }
        }
        let (c, v) = best.unwrap();
        chosen.push(c);
        out.push((c, v));
    }
    out
}

pub fn recall(ranked: &[String], rel: &BTreeSet<String>, k: usize) -> f64 {
    let mut hits = 0;
    for id in ranked.iter().take(k) {
        if rel.contains(id) {
            hits += 1;
        }
    }
    hits as f64 / rel.len() as f64
}

pub fn rr(ranked: &[String], rel: &BTreeSet<String>) -> f64 {
    for (i, id) in ranked.iter().enumerate() {
        if rel.contains(id) {
            return 1.0 / (i as f64 + 1.0);
        }
    }
    0.0
}

pub fn ndcg(ranked: &[String], rel: &BTreeSet<String>, k: usize) -> f64 {
    let mut dcg = 0.0;
    for (i, id) in ranked.iter().take(k).enumerate() {
        if rel.contains(id) {
            dcg += 1.0 / (i as f64 + 2.0).log2();
        }
    }
    let mut ideal = 0.0;
    for i in 0..rel.len().min(k) {
        ideal += 1.0 / (i as f64 + 2.0).log2();
    }
    dcg / ideal
}

/// Lowercase, strip non-alphanumerics, drop articles, token multiset F1.
pub fn answer_oracle(pred: &str, reference: &str) -> (f64, f64) {
    fn norm(s: &str) -> Vec<String> {
        let mut cleaned = String::new();
        for c in s.chars() {
            for l in c.to_lowercase() {
                if l.is_alphanumeric() || l.is_whitespace() {
                    cleaned.push(l);
                }
            }
        }
        cleaned.split_whitespace().filter(|w| !["a", "an", "the"].contains(w)).map(String::from).collect()
    }
    let (p, r) = (norm(pred), norm(reference));
    let em = if p == r { 1.0 } else { 0.0 };
    if p.is_empty() || r.is_empty() {
        return (em, em);
    }
    let mut cp: BTreeMap<&str, usize> = BTreeMap::new();
    let mut cr: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &p {
        *cp.entry(t).or_default() += 1;
    }
    for t in &r {
        *cr.entry(t).or_default() += 1;
    }
    let common: usize = cp.iter().map(|(t, c)| (*c).min(cr.get(t).copied().unwrap_or(0))).sum();
    if common == 0 {
        return (em, 0.0);
    }
    let prec = common as f64 / p.len() as f64;
    let rec = common as f64 / r.len() as f64;
    (em, 2.0 * prec * rec / (prec + rec))
}

/// Kappa from the full confusion matrix.
pub fn kappa_oracle(a: &[u8], b: &[u8], cats: usize) -> f64 {
    let mut t = vec![vec![0usize; cats]; cats];
    for (x, y) in a.iter().zip(b) {
        t[*x as usize][*y as usize] += 1;
    }
    let n = a.len() as f64;
    let po = (0..cats).map(|i| t[i][i]).sum::<usize>() as f64 / n;
    let pe: f64 = (0..cats)
        .map(|i| {
            let row: usize = t[i].iter().sum();
            let col: usize = t.iter().map(|r| r[i]).sum();
            row as f64 * col as f64 / (n * n)
        })
        .sum();
    if pe == 1.0 {
        1.0
    } else {
        (po - pe) / (1.0 - pe)
    }
}

/// IoU as an exact ratio of integer milliseconds, compared by cross
/// multiplication against `num/den`.
pub fn iou_at_least(a: (i64, i64), b: (i64, i64), num: i64, den: i64) -> bool {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0);
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    inter * den >= num * union
}

/// Least-squares line through points via the 2x2 normal equations.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let (sx, sy) = (pts.iter().map(|p| p.0).sum::<f64>(), pts.iter().map(|p| p.1).sum::<f64>());
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    ((n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<f32> {
    (0..rows * cols).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
}

pub fn hashmap_of(ids: &[String], rows: &[Vec<f32>]) -> HashMap<String, Vec<f32>> {
    ids.iter().cloned().zip(rows.iter().cloned()).collect()
}
