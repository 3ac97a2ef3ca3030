//! Message-passing importance model with hand-written forward and backward
//! passes.
//!
//! Nodes and edges are embedded by one hidden layer each, then refined by
//! [`ROUNDS`] rounds of edge update followed by node update over the mean of
//! incoming edge messages. A linear readout plus sigmoid gives one score per
//! node. Every hidden layer is `LayerNorm(ReLU(W x + b))`.

mod io;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scenegraph::{SceneGraph, EDGE_DIM, NODE_DIM};

pub use io::{from_json, load, save, to_json, WEIGHTS_FORMAT, WEIGHTS_VERSION};
pub use train::{dataset_loss, train, CurvePoint, TrainConfig};

pub const HIDDEN: usize = 16;
pub const ROUNDS: usize = 3;
const LN_EPS: f64 = 1e-5;
/// Probability clamp inside the loss.
pub const LOSS_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GnnError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("{what}: expected dimension {expected}, found {found}")]
    Dim {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("feature layout mismatch: expected node/edge dims {expected:?}, file has {found:?}")]
    FeatureMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("bad weight shape: {0}")]
    Shape(String),
    #[error("malformed weight file: {0}")]
    Format(String),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

/// `LayerNorm(ReLU(W x + b))`, with `W` stored row-major (`outputs × inputs`).
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub gain: Vec<f64>,
    pub shift: Vec<f64>,
}

/// Linear map to a single logit.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub weight: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub node_encoder: HiddenLayer,
    pub edge_encoder: HiddenLayer,
    /// One layer shared by all rounds, or one per round.
    pub edge_update: Vec<HiddenLayer>,
    pub node_update: Vec<HiddenLayer>,
    pub decoder: Readout,
}

impl HiddenLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        HiddenLayer {
            inputs,
            outputs,
            weight: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            gain: vec![0.0; outputs],
            shift: vec![0.0; outputs],
        }
    }

    fn init(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let a = 1.0 / (inputs as f64).sqrt();
        let mut l = HiddenLayer::zeros(inputs, outputs);
        for w in &mut l.weight {
            *w = rng.gen_range(-a..a);
        }
        l.gain.fill(1.0);
        l
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weight.iter().chain(&self.bias).chain(&self.gain).chain(&self.shift)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weight
            .iter_mut()
            .chain(&mut self.bias)
            .chain(&mut self.gain)
            .chain(&mut self.shift)
    }

    /// Applies the layer to `rows` stacked inputs.
    fn forward(&self, x: &[f64], rows: usize) -> (Vec<f64>, LayerCache) {
        let (ni, no) = (self.inputs, self.outputs);
        debug_assert_eq!(x.len(), rows * ni);
        let mut pre = vec![0.0; rows * no];
        let mut xhat = vec![0.0; rows * no];
        let mut inv_std = vec![0.0; rows];
        let mut out = vec![0.0; rows * no];
        for r in 0..rows {
            let xr = &x[r * ni..(r + 1) * ni];
            let pr = &mut pre[r * no..(r + 1) * no];
            for (o, p) in pr.iter_mut().enumerate() {
                let w = &self.weight[o * ni..(o + 1) * ni];
                *p = self.bias[o] + w.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
            }
            let act: Vec<f64> = pr.iter().map(|&v| v.max(0.0)).collect();
            let mean = act.iter().sum::<f64>() / no as f64;
            let var = act.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / no as f64;
            let is = 1.0 / (var + LN_EPS).sqrt();
            inv_std[r] = is;
            for o in 0..no {
                let xh = (act[o] - mean) * is;
                xhat[r * no + o] = xh;
                out[r * no + o] = self.gain[o] * xh + self.shift[o];
            }
        }
        (
            out,
            LayerCache {
                input: x.to_vec(),
                pre,
                xhat,
                inv_std,
                rows,
            },
        )
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to the layer input.
    fn backward(&self, cache: &LayerCache, dout: &[f64], grad: &mut HiddenLayer) -> Vec<f64> {
        let (ni, no) = (self.inputs, self.outputs);
        let mut dx = vec![0.0; cache.rows * ni];
        let mut dpre = vec![0.0; no];
        for r in 0..cache.rows {
            let dy = &dout[r * no..(r + 1) * no];
            let xh = &cache.xhat[r * no..(r + 1) * no];
            let mut dxh = [0.0; 64];
            let dxh = &mut dxh[..no];
            for o in 0..no {
                grad.shift[o] += dy[o];
                grad.gain[o] += dy[o] * xh[o];
                dxh[o] = dy[o] * self.gain[o];
            }
            let mean_d = dxh.iter().sum::<f64>() / no as f64;
            let mean_dx = dxh.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / no as f64;
            for o in 0..no {
                let dact = cache.inv_std[r] * (dxh[o] - mean_d - xh[o] * mean_dx);
                dpre[o] = if cache.pre[r * no + o] > 0.0 { dact } else { 0.0 };
            }
            let xr = &cache.input[r * ni..(r + 1) * ni];
            let dxr = &mut dx[r * ni..(r + 1) * ni];
            for o in 0..no {
                let d = dpre[o];
                if d == 0.0 {
                    continue;
                }
                grad.bias[o] += d;
                let w = &self.weight[o * ni..(o + 1) * ni];
                let gw = &mut grad.weight[o * ni..(o + 1) * ni];
                for i in 0..ni {
                    gw[i] += d * xr[i];
                    dxr[i] += d * w[i];
                }
            }
        }
        dx
    }
}

struct LayerCache {
    input: Vec<f64>,
    pre: Vec<f64>,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    rows: usize,
}

impl ModelParams {
    /// Tied round weights, uniform fan-in scaled initialization.
    pub fn init(seed: u64) -> Self {
        Self::init_with(seed, true)
    }

    pub fn init_with(seed: u64, tied: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let copies = if tied { 1 } else { ROUNDS };
        let node_encoder = HiddenLayer::init(NODE_DIM, HIDDEN, &mut rng);
        let edge_encoder = HiddenLayer::init(EDGE_DIM, HIDDEN, &mut rng);
        let edge_update = (0..copies).map(|_| HiddenLayer::init(3 * HIDDEN, HIDDEN, &mut rng)).collect();
        let node_update = (0..copies).map(|_| HiddenLayer::init(2 * HIDDEN, HIDDEN, &mut rng)).collect();
        let a = 1.0 / (HIDDEN as f64).sqrt();
        let decoder = Readout {
            weight: (0..HIDDEN).map(|_| rng.gen_range(-a..a)).collect(),
            bias: 0.0,
        };
        ModelParams {
            node_encoder,
            edge_encoder,
            edge_update,
            node_update,
            decoder,
        }
    }

    /// Same shapes, all values zero.
    pub fn zeros_like(&self) -> Self {
        let z = |l: &HiddenLayer| HiddenLayer::zeros(l.inputs, l.outputs);
        ModelParams {
            node_encoder: z(&self.node_encoder),
            edge_encoder: z(&self.edge_encoder),
            edge_update: self.edge_update.iter().map(z).collect(),
            node_update: self.node_update.iter().map(z).collect(),
            decoder: Readout {
                weight: vec![0.0; self.decoder.weight.len()],
                bias: 0.0,
            },
        }
    }

    pub fn is_tied(&self) -> bool {
        self.edge_update.len() == 1
    }

    fn layers(&self) -> impl Iterator<Item = &HiddenLayer> {
        [&self.node_encoder, &self.edge_encoder]
            .into_iter()
            .chain(&self.edge_update)
            .chain(&self.node_update)
    }

    /// All parameters in a fixed order.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.layers().flat_map(|l| l.params().copied()).collect();
        v.extend(&self.decoder.weight);
        v.push(self.decoder.bias);
        v
    }

    /// Inverse of [`ModelParams::to_vec`].
    pub fn set_from(&mut self, values: &[f64]) {
        let mut it = values.iter().copied();
        let mut slots: Vec<&mut f64> = Vec::new();
        slots.extend(self.node_encoder.params_mut());
        slots.extend(self.edge_encoder.params_mut());
        for l in &mut self.edge_update {
            slots.extend(l.params_mut());
        }
        for l in &mut self.node_update {
            slots.extend(l.params_mut());
        }
        slots.extend(self.decoder.weight.iter_mut());
        slots.push(&mut self.decoder.bias);
        assert_eq!(slots.len(), values.len(), "parameter count mismatch");
        for s in slots {
            *s = it.next().unwrap();
        }
    }

    pub fn len(&self) -> usize {
        self.layers().map(|l| l.weight.len() + 3 * l.outputs).sum::<usize>() + self.decoder.weight.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }

    fn round_layers(&self, t: usize) -> (&HiddenLayer, &HiddenLayer) {
        let k = if self.is_tied() { 0 } else { t };
        (&self.edge_update[k], &self.node_update[k])
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Trace {
    node_enc: LayerCache,
    edge_enc: LayerCache,
    rounds: Vec<(LayerCache, LayerCache)>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
    in_degree: Vec<usize>,
}

fn check_graph(g: &SceneGraph) -> Result<(), GnnError> {
    let n = g.nodes.len();
    if g.entities.len() != n {
        return Err(GnnError::Dim {
            what: "entity list".into(),
            expected: n,
            found: g.entities.len(),
        });
    }
    for e in &g.edges {
        let bad = e.src.max(e.dst) as usize;
        if bad >= n {
            return Err(GnnError::Dim {
                what: "edge endpoint".into(),
                expected: n,
                found: bad,
            });
        }
    }
    Ok(())
}

fn run(params: &ModelParams, g: &SceneGraph) -> Trace {
    let n = g.nodes.len();
    let m = g.edges.len();
    let xn: Vec<f64> = g.nodes.iter().flat_map(|f| f.iter().map(|&b| b as f64)).collect();
    let xe: Vec<f64> = g.edges.iter().flat_map(|e| e.features.iter().map(|&b| b as f64)).collect();
    let (mut h, node_enc) = params.node_encoder.forward(&xn, n);
    let (mut e, edge_enc) = params.edge_encoder.forward(&xe, m);
    let mut in_degree = vec![0usize; n];
    for ed in &g.edges {
        in_degree[ed.dst as usize] += 1;
    }
    let mut rounds = Vec::with_capacity(ROUNDS);
    for t in 0..ROUNDS {
        let (eu, nu) = params.round_layers(t);
        let mut xin = Vec::with_capacity(m * 3 * HIDDEN);
        for (k, ed) in g.edges.iter().enumerate() {
            xin.extend_from_slice(&e[k * HIDDEN..(k + 1) * HIDDEN]);
            xin.extend_from_slice(&h[ed.src as usize * HIDDEN..(ed.src as usize + 1) * HIDDEN]);
            xin.extend_from_slice(&h[ed.dst as usize * HIDDEN..(ed.dst as usize + 1) * HIDDEN]);
        }
        let (e_next, edge_cache) = eu.forward(&xin, m);
        let mut agg = vec![0.0; n * HIDDEN];
        for (k, ed) in g.edges.iter().enumerate() {
            let d = ed.dst as usize;
            for c in 0..HIDDEN {
                agg[d * HIDDEN + c] += e_next[k * HIDDEN + c];
            }
        }
        for (i, &deg) in in_degree.iter().enumerate() {
            if deg > 0 {
                for c in 0..HIDDEN {
                    agg[i * HIDDEN + c] /= deg as f64;
                }
            }
        }
        let mut nin = Vec::with_capacity(n * 2 * HIDDEN);
        for i in 0..n {
            nin.extend_from_slice(&h[i * HIDDEN..(i + 1) * HIDDEN]);
            nin.extend_from_slice(&agg[i * HIDDEN..(i + 1) * HIDDEN]);
        }
        let (h_next, node_cache) = nu.forward(&nin, n);
        rounds.push((edge_cache, node_cache));
        h = h_next;
        e = e_next;
    }
    let logits = (0..n)
        .map(|i| {
            params.decoder.bias
                + params
                    .decoder
                    .weight
                    .iter()
                    .zip(&h[i * HIDDEN..(i + 1) * HIDDEN])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        })
        .collect();
    Trace {
        node_enc,
        edge_enc,
        rounds,
        hidden: h,
        logits,
        in_degree,
    }
}

/// Importance score in (0, 1) per node.
pub fn forward(params: &ModelParams, g: &SceneGraph) -> Result<Vec<f64>, GnnError> {
    check_graph(g)?;
    Ok(run(params, g).logits.into_iter().map(sigmoid).collect())
}

/// Mean binary cross-entropy; probabilities are clamped to
/// `[LOSS_CLAMP, 1 - LOSS_CLAMP]`.
pub fn loss(scores: &[f64], labels: &[u8]) -> f64 {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    if scores.is_empty() {
        return 0.0;
    }
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &l)| {
            let l = l as f64;
            -(l * s.max(LOSS_CLAMP).ln() + (1.0 - l) * (1.0 - s).max(LOSS_CLAMP).ln())
        })
        .sum();
    total / scores.len() as f64
}

/// On/off state of every ReLU unit for one forward pass. The loss is
/// differentiable wherever this pattern is locally constant.
pub fn relu_pattern(params: &ModelParams, g: &SceneGraph) -> Result<Vec<bool>, GnnError> {
    check_graph(g)?;
    let t = run(params, g);
    let mut out: Vec<bool> = t.node_enc.pre.iter().chain(&t.edge_enc.pre).map(|&v| v > 0.0).collect();
    for (e, n) in &t.rounds {
        out.extend(e.pre.iter().chain(&n.pre).map(|&v| v > 0.0));
    }
    Ok(out)
}

/// Loss and its exact gradient with respect to every parameter.
pub fn gradient(params: &ModelParams, g: &SceneGraph, labels: &[u8]) -> Result<(f64, ModelParams), GnnError> {
    check_graph(g)?;
    if labels.len() != g.nodes.len() {
        return Err(GnnError::Dim {
            what: "labels".into(),
            expected: g.nodes.len(),
            found: labels.len(),
        });
    }
    let n = g.nodes.len();
    let m = g.edges.len();
    let trace = run(params, g);
    let scores: Vec<f64> = trace.logits.iter().map(|&z| sigmoid(z)).collect();
    let value = loss(&scores, labels);
    let mut grad = params.zeros_like();
    if n == 0 {
        return Ok((value, grad));
    }

    let mut dh = vec![0.0; n * HIDDEN];
    for i in 0..n {
        let (s, l) = (scores[i], labels[i] as f64);
        let mut dz = 0.0;
        if s > LOSS_CLAMP {
            dz -= l * (1.0 - s);
        }
        if 1.0 - s > LOSS_CLAMP {
            dz += (1.0 - l) * s;
        }
        dz /= n as f64;
        grad.decoder.bias += dz;
        for c in 0..HIDDEN {
            grad.decoder.weight[c] += dz * trace.hidden[i * HIDDEN + c];
            dh[i * HIDDEN + c] = dz * params.decoder.weight[c];
        }
    }

    let mut de = vec![0.0; m * HIDDEN];
    for t in (0..ROUNDS).rev() {
        let (eu, nu) = params.round_layers(t);
        let k = if params.is_tied() { 0 } else { t };
        let (edge_cache, node_cache) = &trace.rounds[t];
        let dnin = nu.backward(node_cache, &dh, &mut grad.node_update[k]);
        let mut dh_prev = vec![0.0; n * HIDDEN];
        // Gradient reaching this round's new edge states through the mean.
        let mut de_next = de;
        for i in 0..n {
            for c in 0..HIDDEN {
                dh_prev[i * HIDDEN + c] = dnin[i * 2 * HIDDEN + c];
            }
        }
        for (k_e, ed) in g.edges.iter().enumerate() {
            let d = ed.dst as usize;
            let deg = trace.in_degree[d] as f64;
            for c in 0..HIDDEN {
                de_next[k_e * HIDDEN + c] += dnin[d * 2 * HIDDEN + HIDDEN + c] / deg;
            }
        }
        let dxin = eu.backward(edge_cache, &de_next, &mut grad.edge_update[k]);
        let mut de_prev = vec![0.0; m * HIDDEN];
        for (k_e, ed) in g.edges.iter().enumerate() {
            let row = &dxin[k_e * 3 * HIDDEN..(k_e + 1) * 3 * HIDDEN];
            let (s, d) = (ed.src as usize, ed.dst as usize);
            for c in 0..HIDDEN {
                de_prev[k_e * HIDDEN + c] = row[c];
                dh_prev[s * HIDDEN + c] += row[HIDDEN + c];
                dh_prev[d * HIDDEN + c] += row[2 * HIDDEN + c];
            }
        }
        dh = dh_prev;
        de = de_prev;
    }
    params.edge_encoder.backward(&trace.edge_enc, &de, &mut grad.edge_encoder);
    params.node_encoder.backward(&trace.node_enc, &dh, &mut grad.node_encoder);
    Ok((value, grad))
}

/// Summed loss and gradient over several labelled graphs.
pub fn batch_gradient(params: &ModelParams, batch: &[(&SceneGraph, &[u8])]) -> Result<(f64, ModelParams), GnnError> {
    let mut total = params.zeros_like();
    let mut value = 0.0;
    let mut acc = total.to_vec();
    for (g, l) in batch {
        let (v, gr) = gradient(params, g, l)?;
        value += v;
        for (a, b) in acc.iter_mut().zip(gr.to_vec()) {
            *a += b;
        }
    }
    total.set_from(&acc);
    Ok((value, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mazenamo::{generate, mazenamo_domain, GenConfig};
    use crate::scenegraph::{encode, Edge};
    use rand::seq::SliceRandom;

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (SceneGraph, Vec<u8>) {
        let nodes = (0..n)
            .map(|_| {
                let mut f = [0u8; NODE_DIM];
                f[rng.gen_range(0..3)] = 1;
                for b in f.iter_mut().skip(3) {
                    *b = rng.gen_bool(0.3) as u8;
                }
                f
            })
            .collect();
        let mut edges = Vec::new();
        for _ in 0..m {
            let s = rng.gen_range(0..n as u32);
            let d = rng.gen_range(0..n as u32);
            if s == d {
                continue;
            }
            let mut features = [0u8; EDGE_DIM];
            features[rng.gen_range(0..EDGE_DIM)] = 1;
            edges.push(Edge { src: s, dst: d, features });
        }
        let labels = (0..n).map(|_| rng.gen_bool(0.4) as u8).collect();
        let g = SceneGraph {
            entities: (0..n).map(|i| format!("e{i}")).collect(),
            nodes,
            edges,
        };
        (g, labels)
    }

    /// Relative error `|g - g_fd| / (|g| + |g_fd|)` of the analytic gradient
    /// against central differences, or `None` when some stencil crosses a
    /// ReLU kink (the loss is not differentiable there).
    fn fd_relative_error(params: &ModelParams, g: &SceneGraph, labels: &[u8]) -> Option<f64> {
        let (_, grad) = gradient(params, g, labels).unwrap();
        let analytic = grad.to_vec();
        let pattern = relu_pattern(params, g).unwrap();
        let base = params.to_vec();
        let mut p = params.clone();
        let h = 1e-4;
        let (mut num, mut den_a, mut den_f) = (0.0, 0.0, 0.0);
        for i in 0..base.len() {
            let mut v = base.clone();
            let mut side = |x: f64| {
                v[i] = x;
                p.set_from(&v);
                (loss(&forward(&p, g).unwrap(), labels), relu_pattern(&p, g).unwrap() == pattern)
            };
            let (up, same_up) = side(base[i] + h);
            let (down, same_down) = side(base[i] - h);
            if !(same_up && same_down) {
                return None;
            }
            let fd = (up - down) / (2.0 * h);
            num += (analytic[i] - fd).powi(2);
            den_a += analytic[i].powi(2);
            den_f += fd.powi(2);
        }
        Some(num.sqrt() / (den_a.sqrt() + den_f.sqrt()).max(1e-300))
    }

    fn jitter(p: &ModelParams, rng: &mut ChaCha8Rng) -> ModelParams {
        let mut q = p.clone();
        q.set_from(&p.to_vec().iter().map(|v| v + rng.gen_range(-0.2..0.2)).collect::<Vec<_>>());
        q
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        let mut sample = 0;
        while checked < 6 {
            sample += 1;
            assert!(sample < 100, "too many samples on kinks");
            let params = jitter(&ModelParams::init_with(sample, sample % 2 == 0), &mut rng);
            let (g, l) = random_graph(&mut rng, 5, 8);
            if let Some(err) = fd_relative_error(&params, &g, &l) {
                assert!(err < 1e-4, "sample {sample}: {err}");
                checked += 1;
            }
        }
    }

    #[test]
    fn scores_are_probabilities_and_deterministic() {
        let t = generate(&GenConfig::new(7, 3)).unwrap().to_task();
        let g = encode(&t, &mazenamo_domain()).unwrap();
        let p = ModelParams::init(5);
        let s = forward(&p, &g).unwrap();
        assert!(s.iter().all(|&x| x > 0.0 && x < 1.0));
        assert_eq!(s, forward(&ModelParams::init(5), &g).unwrap());
        assert_ne!(ModelParams::init(5), ModelParams::init(6));
        assert_eq!(p.decoder.bias, 0.0);
    }

    #[test]
    fn edgeless_graph_scores_depend_on_node_features_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut g, _) = random_graph(&mut rng, 4, 0);
        g.nodes[1] = g.nodes[0];
        let s = forward(&ModelParams::init(1), &g).unwrap();
        assert_eq!(s[0], s[1]);
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (g, _) = random_graph(&mut rng, 8, 20);
        let p = ModelParams::init(4);
        let s = forward(&p, &g).unwrap();
        let mut perm: Vec<usize> = (0..8).collect();
        perm.shuffle(&mut rng);
        // perm[old] = new
        let mut nodes = vec![[0u8; NODE_DIM]; 8];
        let mut entities = vec![String::new(); 8];
        for (old, &new) in perm.iter().enumerate() {
            nodes[new] = g.nodes[old];
            entities[new] = g.entities[old].clone();
        }
        let mut edges: Vec<Edge> = g
            .edges
            .iter()
            .map(|e| Edge {
                src: perm[e.src as usize] as u32,
                dst: perm[e.dst as usize] as u32,
                features: e.features,
            })
            .collect();
        edges.shuffle(&mut rng);
        let sp = forward(&p, &SceneGraph { entities, nodes, edges }).unwrap();
        for (old, &new) in perm.iter().enumerate() {
            assert!((s[old] - sp[new]).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_values() {
        assert!((loss(&[0.5; 7], &[1, 0, 1, 1, 0, 0, 1]) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(loss(&[1.0, 0.0], &[1, 0]) < 1e-11);
        let v = loss(&[0.9, 0.1], &[1, 0]);
        assert!((v - (-(0.9f64.ln()))).abs() < 1e-12);
        assert!((v - 0.1054).abs() < 1e-4);
        assert!(loss(&[0.0], &[1]).is_finite());
    }

    #[test]
    fn single_node_with_matched_label_has_tiny_gradient() {
        let mut p = ModelParams::init(0);
        p.decoder.bias = 40.0;
        let g = SceneGraph {
            entities: vec!["robot".into()],
            nodes: vec![{
                let mut f = [0u8; NODE_DIM];
                f[0] = 1;
                f
            }],
            edges: vec![],
        };
        let (_, grad) = gradient(&p, &g, &[1]).unwrap();
        let norm = grad.to_vec().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-12, "{norm}");
    }

    #[test]
    fn batch_gradient_is_sum_of_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, la) = random_graph(&mut rng, 5, 7);
        let (b, lb) = random_graph(&mut rng, 6, 9);
        let p = ModelParams::init(8);
        let (va, ga) = gradient(&p, &a, &la).unwrap();
        let (vb, gb) = gradient(&p, &b, &lb).unwrap();
        let (v, g) = batch_gradient(&p, &[(&a, &la), (&b, &lb)]).unwrap();
        assert!((v - va - vb).abs() < 1e-12);
        for ((x, y), z) in g.to_vec().iter().zip(ga.to_vec()).zip(gb.to_vec()) {
            assert!((x - y - z).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_view_round_trips() {
        let p = ModelParams::init_with(1, false);
        let mut q = p.zeros_like();
        q.set_from(&p.to_vec());
        assert_eq!(p, q);
        assert_eq!(p.len(), p.to_vec().len());
    }

    #[test]
    fn bad_edge_endpoint_is_a_dimension_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut g, _) = random_graph(&mut rng, 3, 0);
        g.edges.push(Edge {
            src: 0,
            dst: 7,
            features: [0; EDGE_DIM],
        });
        assert!(matches!(forward(&ModelParams::init(0), &g), Err(GnnError::Dim { .. })));
    }
}
