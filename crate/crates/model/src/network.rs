//! The MRAM network pieces as tape operations.

use revloc_nn::{BrnnParams, ParamId, ParamStore, Tape, Tensor, Var};

use crate::config::{Ablation, ModelConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gru {
    pub wq: ParamId,
    pub uq: ParamId,
    pub wr: ParamId,
    pub ur: ParamId,
    pub wu: ParamId,
    pub uu: ParamId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mlp {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

/// Parameter handles; the values live in the accompanying `ParamStore`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MramParams {
    pub embed: ParamId,
    pub enc_method: BrnnParams,
    pub enc_api: BrnnParams,
    pub enc_comment: BrnnParams,
    pub enc_report: BrnnParams,
    /// View attention, shared across the three views.
    pub wv: ParamId,
    pub wr: ParamId,
    pub matcher: Mlp,
    pub wn: ParamId,
    pub ws: ParamId,
    pub gru: Gru,
    pub fusion: Mlp,
}

impl MramParams {
    /// Register every parameter with uniform initialization in
    /// `[-1/√d, 1/√d]`.
    pub fn register(store: &mut ParamStore, vocab: usize, cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let (d, b, seed) = (cfg.d, cfg.init_bound(), cfg.seed);
        let mut u = |name: &str, shape: &[usize]| store.add_uniform(name, shape, b, seed);
        let embed = u("embed", &[vocab, d])?;
        let wv = u("smnn.wv", &[d, d])?;
        let wr = u("smnn.wr", &[d, d])?;
        let matcher = Mlp {
            w1: u("match.w1", &[cfg.match_hidden, 2 * d])?,
            b1: u("match.b1", &[cfg.match_hidden])?,
            w2: u("match.w2", &[1, cfg.match_hidden])?,
            b2: u("match.b2", &[1])?,
        };
        let wn = u("menn.wn", &[d, d])?;
        let ws = u("menn.ws", &[d, d])?;
        let gru = Gru {
            wq: u("gru.wq", &[d, d])?,
            uq: u("gru.uq", &[d, d])?,
            wr: u("gru.wr", &[d, d])?,
            ur: u("gru.ur", &[d, d])?,
            wu: u("gru.wu", &[d, d])?,
            uu: u("gru.uu", &[d, d])?,
        };
        let fusion = Mlp {
            w1: u("flnn.w1", &[cfg.fusion_hidden, 4])?,
            b1: u("flnn.b1", &[cfg.fusion_hidden])?,
            w2: u("flnn.w2", &[2, cfg.fusion_hidden])?,
            b2: u("flnn.b2", &[2])?,
        };
        let enc = |store: &mut ParamStore, name: &str| BrnnParams::register(store, name, d, d, d, b, seed);
        Ok(Self {
            embed,
            enc_method: enc(store, "enc.method")?,
            enc_api: enc(store, "enc.api")?,
            enc_comment: enc(store, "enc.comment")?,
            enc_report: enc(store, "enc.report")?,
            wv,
            wr,
            matcher,
            wn,
            ws,
            gru,
            fusion,
        })
    }

    /// Look the handles up by name in a loaded store.
    pub fn resolve(store: &ParamStore) -> Result<Self> {
        let id = |n: &str| store.id(n).map_err(Error::from);
        let enc = |p: &str| -> Result<BrnnParams> {
            Ok(BrnnParams {
                wf: id(&format!("{p}.wf"))?,
                wb: id(&format!("{p}.wb"))?,
                w: id(&format!("{p}.w"))?,
                b: id(&format!("{p}.b"))?,
            })
        };
        let mlp = |p: &str| -> Result<Mlp> {
            Ok(Mlp {
                w1: id(&format!("{p}.w1"))?,
                b1: id(&format!("{p}.b1"))?,
                w2: id(&format!("{p}.w2"))?,
                b2: id(&format!("{p}.b2"))?,
            })
        };
        Ok(Self {
            embed: id("embed")?,
            enc_method: enc("enc.method")?,
            enc_api: enc("enc.api")?,
            enc_comment: enc("enc.comment")?,
            enc_report: enc("enc.report")?,
            wv: id("smnn.wv")?,
            wr: id("smnn.wr")?,
            matcher: mlp("match")?,
            wn: id("menn.wn")?,
            ws: id("menn.ws")?,
            gru: Gru {
                wq: id("gru.wq")?,
                uq: id("gru.uq")?,
                wr: id("gru.wr")?,
                ur: id("gru.ur")?,
                wu: id("gru.wu")?,
                uu: id("gru.uu")?,
            },
            fusion: mlp("flnn")?,
        })
    }

    pub fn dim(&self, store: &ParamStore) -> usize {
        store.tensor(self.embed).shape()[1]
    }
}

/// Token ids of a method's three views, already truncated.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MethodViews {
    pub tokens: Vec<usize>,
    pub api: Vec<usize>,
    pub comment: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct MethodVars {
    pub m: Var,
    pub a: Var,
    pub c: Var,
}

/// BRNN + max-pool over one view; an empty view is the zero vector.
pub fn encode_view(tape: &mut Tape<'_>, p: &MramParams, enc: BrnnParams, ids: &[usize]) -> Result<Var> {
    if ids.is_empty() {
        let d = p.dim(tape.store());
        return Ok(tape.constant(Tensor::zeros(&[d])));
    }
    let x = tape.embed(p.embed, ids)?;
    let h = tape.brnn(enc, x)?;
    Ok(tape.maxpool(h)?)
}

pub fn encode_method(tape: &mut Tape<'_>, p: &MramParams, views: &MethodViews) -> Result<MethodVars> {
    if views.tokens.is_empty() && views.api.is_empty() && views.comment.is_empty() {
        return Err(Error::Degenerate("method without any tokens".into()));
    }
    Ok(MethodVars {
        m: encode_view(tape, p, p.enc_method, &views.tokens)?,
        a: encode_view(tape, p, p.enc_api, &views.api)?,
        c: encode_view(tape, p, p.enc_comment, &views.comment)?,
    })
}

pub fn encode_report(tape: &mut Tape<'_>, p: &MramParams, ids: &[usize]) -> Result<Var> {
    encode_view(tape, p, p.enc_report, ids)
}

/// Attention scores `Σ tanh(W_x x_i + ctx)` for each item, softmaxed.
fn attend(tape: &mut Tape<'_>, w: ParamId, items: &[Var], ctx: Var) -> Result<Var> {
    let mut scores = Vec::with_capacity(items.len());
    for &x in items {
        let z = tape.matvec(w, x)?;
        let z = tape.add(z, ctx)?;
        let z = tape.tanh(z);
        scores.push(tape.sum(z));
    }
    let s = tape.concat(&scores)?;
    Ok(tape.softmax(s)?)
}

/// `W_r r`, shared by every method scored against the same report.
pub fn report_context(tape: &mut Tape<'_>, p: &MramParams, r: Var) -> Result<Var> {
    Ok(tape.matvec(p.wr, r)?)
}

/// Fused method vector and its three view weights.
pub fn smnn_fuse(tape: &mut Tape<'_>, p: &MramParams, views: MethodVars, report_ctx: Var) -> Result<(Var, Var)> {
    let items = [views.m, views.a, views.c];
    let weights = attend(tape, p.wv, &items, report_ctx)?;
    Ok((tape.weighted_sum(weights, &items)?, weights))
}

/// Enrich `s` with its neighbors through attention and a GRU-style gate.
/// Without neighbors `s` is returned unchanged.
pub fn menn_expand(tape: &mut Tape<'_>, p: &MramParams, s: Var, neighbors: &[Var]) -> Result<Var> {
    if neighbors.is_empty() {
        return Ok(s);
    }
    let ctx = tape.matvec(p.ws, s)?;
    let weights = attend(tape, p.wn, neighbors, ctx)?;
    let u = tape.weighted_sum(weights, neighbors)?;
    let g = p.gru;
    let gate = |tape: &mut Tape<'_>, w: ParamId, uw: ParamId| -> Result<Var> {
        let a = tape.matvec(w, s)?;
        let b = tape.matvec(uw, u)?;
        Ok(tape.add(a, b)?)
    };
    let q = gate(tape, g.wq, g.uq)?;
    let q = tape.sigmoid(q);
    let r = gate(tape, g.wr, g.ur)?;
    let r = tape.sigmoid(r);
    let ws = tape.matvec(g.wu, s)?;
    let uu = tape.matvec(g.uu, u)?;
    let ru = tape.mul(r, uu)?;
    let cand = tape.add(ws, ru)?;
    let cand = tape.tanh(cand);
    let keep = tape.one_minus(q);
    let keep = tape.mul(keep, s)?;
    let take = tape.mul(q, cand)?;
    Ok(tape.add(keep, take)?)
}

/// Bias vectors enter the tape once per trace.
#[derive(Debug, Clone, Copy)]
pub struct Biases {
    match_b1: Var,
    match_b2: Var,
    fusion_b1: Var,
    fusion_b2: Var,
}

impl Biases {
    pub fn new(tape: &mut Tape<'_>, p: &MramParams) -> Self {
        Self {
            match_b1: tape.param(p.matcher.b1),
            match_b2: tape.param(p.matcher.b2),
            fusion_b1: tape.param(p.fusion.b1),
            fusion_b2: tape.param(p.fusion.b2),
        }
    }
}

fn mlp(tape: &mut Tape<'_>, m: &Mlp, b1: Var, b2: Var, x: Var) -> Result<Var> {
    let h = tape.matvec(m.w1, x)?;
    let h = tape.add(h, b1)?;
    let h = tape.sigmoid(h);
    let o = tape.matvec(m.w2, h)?;
    Ok(tape.add(o, b2)?)
}

/// Unbounded semantic match score `e`.
pub fn match_score(tape: &mut Tape<'_>, p: &MramParams, b: &Biases, s: Var, r: Var) -> Result<Var> {
    let x = tape.concat(&[s, r])?;
    mlp(tape, &p.matcher, b.match_b1, b.match_b2, x)
}

/// Bug-fixing features as they enter the fusion layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureInput {
    pub rcfs: f64,
    pub bffs: f64,
    pub bfrs: f64,
}

impl FeatureInput {
    /// `[rcfs, ln(1 + bffs), bfrs]`, with disabled features zeroed.
    pub fn vector(&self, ablation: &Ablation) -> Result<[f64; 3]> {
        if ![self.rcfs, self.bffs, self.bfrs].iter().all(|x| x.is_finite()) || self.bffs < 0.0 {
            return Err(Error::Numeric(format!("invalid feature values {self:?}")));
        }
        let on = |flag: bool, x: f64| if flag { x } else { 0.0 };
        Ok([
            on(ablation.rcfs, self.rcfs),
            on(ablation.bffs, self.bffs.ln_1p()),
            on(ablation.bfrs, self.bfrs),
        ])
    }
}

/// Logit layout of the fusion output: `[faulty, not faulty]`.
pub const POSITIVE: usize = 0;
pub const NEGATIVE: usize = 1;

/// Two class logits from `z = [e, features]`.
pub fn fusion_logits(tape: &mut Tape<'_>, p: &MramParams, b: &Biases, e: Var, features: [f64; 3]) -> Result<Var> {
    let f = tape.constant(Tensor::vector(features.to_vec()));
    let z = tape.concat(&[e, f])?;
    mlp(tape, &p.fusion, b.fusion_b1, b.fusion_b2, z)
}

/// Positive-class probability of two logits.
pub fn positive_probability(logits: &[f64]) -> f64 {
    revloc_nn::softmax(logits)[POSITIVE]
}

/// Logit index of label `y` (1 = faulty).
pub fn class_index(y: usize) -> usize {
    if y == 1 {
        POSITIVE
    } else {
        NEGATIVE
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn setup(d: usize, seed: u64) -> (ParamStore, MramParams) {
        let cfg = ModelConfig {
            d,
            match_hidden: 3,
            fusion_hidden: 3,
            seed,
            ..ModelConfig::default()
        };
        let mut store = ParamStore::new();
        let p = MramParams::register(&mut store, 10, &cfg).unwrap();
        (store, p)
    }

    fn randv(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn mv(store: &ParamStore, id: ParamId, x: &[f64]) -> Vec<f64> {
        let w = store.tensor(id);
        (0..w.rows()).map(|i| w.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    fn plus(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    fn oracle_attention(store: &ParamStore, w: ParamId, items: &[Vec<f64>], ctx: &[f64]) -> Vec<f64> {
        let scores: Vec<f64> = items.iter().map(|x| plus(&mv(store, w, x), ctx).iter().map(|z| z.tanh()).sum()).collect();
        let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
        let z: f64 = e.iter().sum();
        e.iter().map(|x| x / z).collect()
    }

    fn weighted(weights: &[f64], items: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; items[0].len()];
        for (w, x) in weights.iter().zip(items) {
            for (o, v) in out.iter_mut().zip(x) {
                *o += w * v;
            }
        }
        out
    }

    fn fuse(store: &ParamStore, p: &MramParams, views: [&[f64]; 3], r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut tape = Tape::new(store);
        let [m, a, c] = views.map(|v| tape.constant(Tensor::vector(v.to_vec())));
        let r = tape.constant(Tensor::vector(r.to_vec()));
        let ctx = report_context(&mut tape, p, r).unwrap();
        let (s, w) = smnn_fuse(&mut tape, p, MethodVars { m, a, c }, ctx).unwrap();
        (tape.value(s).data().to_vec(), tape.value(w).data().to_vec())
    }

    #[test]
    fn equal_views_fuse_to_themselves() {
        let (store, p) = setup(5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = randv(&mut rng, 5);
        let r = randv(&mut rng, 5);
        let (s, w) = fuse(&store, &p, [&v, &v, &v], &r);
        assert_close(&s, &v, 1e-12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_attention_weights_average_the_views() {
        let (mut store, p) = setup(4, 3);
        store.set(p.wv, &[0.0; 16]).unwrap();
        store.set(p.wr, &[0.0; 16]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (m, a, c, r) = (randv(&mut rng, 4), randv(&mut rng, 4), randv(&mut rng, 4), randv(&mut rng, 4));
        let (s, w) = fuse(&store, &p, [&m, &a, &c], &r);
        assert_close(&w, &[1.0 / 3.0; 3], 1e-12);
        let mean: Vec<f64> = (0..4).map(|i| (m[i] + a[i] + c[i]) / 3.0).collect();
        assert_close(&s, &mean, 1e-12);
    }

    #[test]
    fn view_attention_matches_direct_evaluation() {
        for seed in 0..5 {
            let (store, p) = setup(3, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 10);
            let items: Vec<Vec<f64>> = (0..3).map(|_| randv(&mut rng, 3)).collect();
            let r = randv(&mut rng, 3);
            let (s, w) = fuse(&store, &p, [&items[0], &items[1], &items[2]], &r);
            let expect_w = oracle_attention(&store, p.wv, &items, &mv(&store, p.wr, &r));
            assert_close(&w, &expect_w, 1e-12);
            assert_close(&s, &weighted(&expect_w, &items), 1e-12);
        }
    }

    fn expand(store: &ParamStore, p: &MramParams, s: &[f64], ns: &[Vec<f64>]) -> Vec<f64> {
        let mut tape = Tape::new(store);
        let sv = tape.constant(Tensor::vector(s.to_vec()));
        let nv: Vec<Var> = ns.iter().map(|n| tape.constant(Tensor::vector(n.clone()))).collect();
        let out = menn_expand(&mut tape, p, sv, &nv).unwrap();
        tape.value(out).data().to_vec()
    }

    fn identity(d: usize, k: f64) -> Vec<f64> {
        (0..d * d).map(|i| if i % (d + 1) == 0 { k } else { 0.0 }).collect()
    }

    #[test]
    fn single_neighbor_takes_all_attention() {
        let (store, p) = setup(3, 4);
        let mut tape = Tape::new(&store);
        let n = tape.constant(Tensor::vector(vec![0.3, -0.2, 0.9]));
        let ctx = tape.constant(Tensor::vector(vec![5.0, -1.0, 2.0]));
        let w = attend(&mut tape, p.wn, &[n], ctx).unwrap();
        assert_eq!(tape.value(w).data(), &[1.0]);
    }

    #[test]
    fn no_neighbors_leave_the_vector_unchanged() {
        let (store, p) = setup(3, 4);
        assert_eq!(expand(&store, &p, &[0.1, 0.2, 0.3], &[]), vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn closed_gate_keeps_the_method_vector() {
        let (mut store, p) = setup(3, 5);
        store.set(p.gru.wq, &identity(3, -60.0)).unwrap();
        store.set(p.gru.uq, &identity(3, -60.0)).unwrap();
        let s = vec![0.5, 0.8, 0.6];
        let out = expand(&store, &p, &s, &[vec![0.7, 0.9, 0.4], vec![0.2, 0.5, 0.9]]);
        assert_close(&out, &s, 1e-15);
    }

    fn oracle_expand(store: &ParamStore, p: &MramParams, s: &[f64], ns: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let w = oracle_attention(store, p.wn, ns, &mv(store, p.ws, s));
        let u = weighted(&w, ns);
        let g = p.gru;
        let q: Vec<f64> = plus(&mv(store, g.wq, s), &mv(store, g.uq, &u)).into_iter().map(sig).collect();
        let r: Vec<f64> = plus(&mv(store, g.wr, s), &mv(store, g.ur, &u)).into_iter().map(sig).collect();
        let uu = mv(store, g.uu, &u);
        let ru: Vec<f64> = r.iter().zip(&uu).map(|(a, b)| a * b).collect();
        let cand: Vec<f64> = plus(&mv(store, g.wu, s), &ru).into_iter().map(f64::tanh).collect();
        let out = (0..s.len()).map(|i| (1.0 - q[i]) * s[i] + q[i] * cand[i]).collect();
        (out, cand)
    }

    #[test]
    fn open_gate_takes_the_candidate() {
        let (mut store, p) = setup(3, 6);
        store.set(p.gru.wq, &identity(3, 60.0)).unwrap();
        store.set(p.gru.uq, &identity(3, 60.0)).unwrap();
        let s = vec![0.5, 0.8, 0.6];
        let ns = vec![vec![0.7, 0.9, 0.4]];
        let (_, cand) = oracle_expand(&store, &p, &s, &ns);
        assert_close(&expand(&store, &p, &s, &ns), &cand, 1e-15);
    }

    #[test]
    fn expansion_matches_direct_evaluation() {
        for seed in 0..5 {
            let (store, p) = setup(2, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 20);
            let s = randv(&mut rng, 2);
            let ns = vec![randv(&mut rng, 2), randv(&mut rng, 2)];
            let (expect, _) = oracle_expand(&store, &p, &s, &ns);
            assert_close(&expand(&store, &p, &s, &ns), &expect, 1e-12);
        }
    }

    fn zero(store: &mut ParamStore, id: ParamId) {
        let n = store.tensor(id).len();
        store.set(id, &vec![0.0; n]).unwrap();
    }

    fn score(store: &ParamStore, p: &MramParams, s: &[f64], r: &[f64]) -> f64 {
        let mut tape = Tape::new(store);
        let b = Biases::new(&mut tape, p);
        let s = tape.constant(Tensor::vector(s.to_vec()));
        let r = tape.constant(Tensor::vector(r.to_vec()));
        let e = match_score(&mut tape, p, &b, s, r).unwrap();
        tape.value(e).item()
    }

    #[test]
    fn match_bias_alone_with_zero_weights() {
        let (mut store, p) = setup(3, 7);
        for id in [p.matcher.w1, p.matcher.b1, p.matcher.w2] {
            zero(&mut store, id);
        }
        store.set(p.matcher.b2, &[0.7]).unwrap();
        assert_eq!(score(&store, &p, &[0.4, -2.0, 1.0], &[3.0, 0.1, -0.5]), 0.7);
    }

    #[test]
    fn match_matches_direct_evaluation() {
        let (store, p) = setup(3, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let (s, r) = (randv(&mut rng, 3), randv(&mut rng, 3));
        let x: Vec<f64> = s.iter().chain(&r).copied().collect();
        let h: Vec<f64> = plus(&mv(&store, p.matcher.w1, &x), store.tensor(p.matcher.b1).data())
            .into_iter()
            .map(sig)
            .collect();
        let expect = mv(&store, p.matcher.w2, &h)[0] + store.tensor(p.matcher.b2).data()[0];
        assert!((score(&store, &p, &s, &r) - expect).abs() < 1e-12);
    }

    fn predict(store: &ParamStore, p: &MramParams, e: f64, f: [f64; 3]) -> Vec<f64> {
        let mut tape = Tape::new(store);
        let b = Biases::new(&mut tape, p);
        let e = tape.constant(Tensor::vector(vec![e]));
        let l = fusion_logits(&mut tape, p, &b, e, f).unwrap();
        tape.value(l).data().to_vec()
    }

    #[test]
    fn zero_fusion_weights_give_even_odds() {
        let (mut store, p) = setup(3, 9);
        for id in [p.fusion.w1, p.fusion.b1, p.fusion.w2, p.fusion.b2] {
            zero(&mut store, id);
        }
        let logits = predict(&store, &p, 2.5, [1.0, 0.3, 0.5]);
        assert_eq!(positive_probability(&logits), 0.5);
    }

    #[test]
    fn positive_probability_closed_form() {
        let mut logits = [0.0; 2];
        logits[POSITIVE] = 3f64.ln();
        assert!((positive_probability(&logits) - 0.75).abs() < 1e-15);
        assert_eq!(class_index(1), POSITIVE);
        assert_eq!(class_index(0), NEGATIVE);
    }

    #[test]
    fn raising_a_positive_output_weight_raises_the_score() {
        let (mut store, p) = setup(3, 10);
        let f = [0.8, 0.4, 0.2];
        let before = positive_probability(&predict(&store, &p, 0.3, f));
        let mut w2 = store.tensor(p.fusion.w2).data().to_vec();
        w2[POSITIVE * 3 + 1] += 0.5;
        store.set(p.fusion.w2, &w2).unwrap();
        let after = positive_probability(&predict(&store, &p, 0.3, f));
        assert!(after > before, "{after} <= {before}");
    }

    #[test]
    fn features_are_validated_and_ablated() {
        let f = FeatureInput {
            rcfs: 0.5,
            bffs: 3.0,
            bfrs: 0.25,
        };
        assert_eq!(f.vector(&Ablation::default()).unwrap(), [0.5, 4f64.ln(), 0.25]);
        let off = Ablation {
            bffs: false,
            ..Ablation::default()
        };
        assert_eq!(f.vector(&off).unwrap(), [0.5, 0.0, 0.25]);
        for bad in [f64::NAN, f64::INFINITY] {
            let g = FeatureInput { rcfs: bad, ..f };
            assert!(matches!(g.vector(&Ablation::default()), Err(Error::Numeric(_))));
        }
    }

    #[test]
    fn empty_comment_encodes_to_zero() {
        let (store, p) = setup(3, 11);
        let mut tape = Tape::new(&store);
        let views = MethodViews {
            tokens: vec![1, 2, 3],
            api: vec![4],
            comment: vec![],
        };
        let vars = encode_method(&mut tape, &p, &views).unwrap();
        assert_eq!(tape.value(vars.c).data(), &[0.0; 3]);
        assert!(tape.value(vars.m).data().iter().any(|x| *x != 0.0));
    }

    #[test]
    fn method_without_tokens_is_degenerate() {
        let (store, p) = setup(3, 11);
        let mut tape = Tape::new(&store);
        let err = encode_method(&mut tape, &p, &MethodViews::default()).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn handles_resolve_by_name() {
        let (store, p) = setup(4, 12);
        assert_eq!(MramParams::resolve(&store).unwrap(), p);
        assert_eq!(p.dim(&store), 4);
    }

    proptest! {
        #[test]
        fn view_weights_form_a_distribution(seed in 0u64..1000, scale in 0.1f64..20.0) {
            let (store, p) = setup(3, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<Vec<f64>> = (0..4).map(|_| randv(&mut rng, 3).iter().map(|x| x * scale).collect()).collect();
            let (_, w) = fuse(&store, &p, [&v[0], &v[1], &v[2]], &v[3]);
            prop_assert!(w.iter().all(|x| *x >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn fusion_output_is_a_probability(seed in 0u64..1000, e in -50.0f64..50.0, rcfs in 0.0f64..20.0, bffs in 0.0f64..30.0, bfrs in 0.0f64..1.0) {
            let (store, p) = setup(3, seed);
            let logits = predict(&store, &p, e, [rcfs, bffs.ln_1p(), bfrs]);
            let probs = revloc_nn::softmax(&logits);
            prop_assert!(probs[POSITIVE] > 0.0 && probs[POSITIVE] < 1.0);
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
