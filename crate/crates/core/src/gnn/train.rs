//! Mean-squared-error training with momentum SGD, and gradient checking.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;

use super::{propagate, sample_neighbors, Activation, Block, GcnModel, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::LayoutGraph;
use crate::rng::{rng, sub_seed};

/// Per-layer gradients, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weight: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
}

impl Gradients {
    fn zeros_like(m: &GcnModel) -> Self {
        Gradients {
            weight: m.layers.iter().map(|l| Array2::zeros(l.weight.dim())).collect(),
            bias: m.layers.iter().map(|l| Array1::zeros(l.bias.len())).collect(),
        }
    }
}

/// MSE of the head over `blocks`' final destinations against `targets`,
/// with the analytic gradient when `want_grad`.
pub(crate) fn loss_and_grad(
    model: &GcnModel,
    blocks: &[&Block],
    x: Array2<f64>,
    targets: &[f64],
    want_grad: bool,
) -> (f64, Option<Gradients>) {
    let (pred, trace) = propagate(model, blocks, x, want_grad);
    let n = targets.len() as f64;
    let loss = pred.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n;
    let Some(trace) = trace else { return (loss, None) };

    let mut g = Gradients::zeros_like(model);
    let mut dz = Array2::from_shape_fn((pred.len(), 1), |(i, _)| 2.0 / n * (pred[i] - targets[i]) * pred[i] * (1.0 - pred[i]));
    for l in (0..model.depth()).rev() {
        g.bias[l] = dz.sum_axis(ndarray::Axis(0));
        let dm = blocks[l].apply_t(&dz);
        g.weight[l] = trace.inputs[l].t().dot(&dm);
        if l == 0 {
            break;
        }
        let mut dh = dm.dot(&model.layers[l].weight.t());
        if model.activation == Activation::Relu {
            dh.zip_mut_with(&trace.pre[l - 1], |d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
        }
        dz = dh;
    }
    (loss, Some(g))
}

fn check_labels(graph: &LayoutGraph, labels: &[(usize, f64)]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::Empty("no labeled nodes".into()));
    }
    for &(v, y) in labels {
        if v >= graph.num_nodes {
            return Err(Error::InvalidNode(v));
        }
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::InvalidArgument(format!("label {y} of node {v} outside [0, 1]")));
        }
    }
    Ok(())
}

/// Full-neighborhood MSE over the labeled nodes.
pub fn loss(model: &GcnModel, graph: &LayoutGraph, labels: &[(usize, f64)]) -> Result<f64> {
    check_labels(graph, labels)?;
    let all = super::forward_all(model, graph)?;
    Ok(labels.iter().map(|&(v, y)| (all[v] - y).powi(2)).sum::<f64>() / labels.len() as f64)
}

fn full_loss_and_grad(model: &GcnModel, graph: &LayoutGraph, labels: &[(usize, f64)]) -> (f64, Gradients) {
    let full = Block::full(graph);
    let head = full.select_rows(&labels.iter().map(|l| l.0).collect::<Vec<_>>());
    let mut blocks: Vec<&Block> = vec![&full; model.depth() - 1];
    blocks.push(&head);
    let targets: Vec<f64> = labels.iter().map(|l| l.1).collect();
    let (l, g) = loss_and_grad(model, &blocks, graph.features.clone(), &targets, true);
    (l, g.unwrap())
}

/// Mini-batch SGD with momentum and weight decay on sampled subgraphs.
/// Returns the trained model and the mean loss of every epoch.
pub fn train(
    model: &GcnModel,
    graph: &LayoutGraph,
    labels: &[(usize, f64)],
    config: &TrainConfig,
) -> Result<(GcnModel, Vec<f64>)> {
    config.validate(model.depth())?;
    check_labels(graph, labels)?;
    model.check_shape()?;
    let mut m = model.clone();
    let mut vel = Gradients::zeros_like(&m);
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let mut shuffler = rng(sub_seed(config.seed, "train/shuffle"));
    let sample_base = sub_seed(config.seed, "train/sample");

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffler);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let seeds: Vec<usize> = chunk.iter().map(|&i| labels[i].0).collect();
            let targets: Vec<f64> = chunk.iter().map(|&i| labels[i].1).collect();
            let s = sample_base ^ ((epoch as u64) << 32 | b as u64);
            let sub = sample_neighbors(graph, &seeds, &config.fanouts, s)?;
            // Duplicate seeds collapse in the subgraph; keep targets aligned with it.
            let (seeds, targets) = dedup_targets(&sub.layers[0], &seeds, &targets);
            debug_assert_eq!(seeds.len(), sub.layers[0].len());
            let mut blocks: Vec<&Block> = sub.blocks.iter().collect();
            blocks.reverse();
            let (loss, grad) = loss_and_grad(&m, &blocks, sub.features.clone(), &targets, true);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            total += loss * chunk.len() as f64;
            let grad = grad.unwrap();
            for l in 0..m.depth() {
                let layer = &mut m.layers[l];
                let vw = &mut vel.weight[l];
                ndarray::Zip::from(vw).and(&mut layer.weight).and(&grad.weight[l]).for_each(|v, w, g| {
                    *v = config.momentum * *v + g + config.weight_decay * *w;
                    *w -= config.learning_rate * *v;
                });
                let vb = &mut vel.bias[l];
                ndarray::Zip::from(vb).and(&mut layer.bias).and(&grad.bias[l]).for_each(|v, w, g| {
                    *v = config.momentum * *v + g + config.weight_decay * *w;
                    *w -= config.learning_rate * *v;
                });
            }
        }
        let mean = total / labels.len() as f64;
        if !mean.is_finite() || !m.is_finite() {
            return Err(Error::Diverged { epoch, loss: mean });
        }
        history.push(mean);
    }
    Ok((m, history))
}

fn dedup_targets(layer0: &[usize], seeds: &[usize], targets: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut sum = std::collections::HashMap::<usize, (f64, usize)>::new();
    for (&s, &t) in seeds.iter().zip(targets) {
        let e = sum.entry(s).or_insert((0.0, 0));
        e.0 += t;
        e.1 += 1;
    }
    let t = layer0.iter().map(|v| sum[v].0 / sum[v].1 as f64).collect();
    (layer0.to_vec(), t)
}

fn nudge(m: &mut GcnModel, l: usize, bias: bool, k: usize, delta: f64) {
    let layer = &mut m.layers[l];
    if bias {
        layer.bias[k] += delta;
    } else {
        let c = layer.weight.ncols();
        layer.weight[[k / c, k % c]] += delta;
    }
}

fn set_param(m: &mut GcnModel, from: &GcnModel, l: usize, bias: bool, k: usize) {
    if bias {
        m.layers[l].bias[k] = from.layers[l].bias[k];
    } else {
        let c = from.layers[l].weight.ncols();
        m.layers[l].weight[[k / c, k % c]] = from.layers[l].weight[[k / c, k % c]];
    }
}

/// Denominator floor for relative errors, so gradients that are zero up to
/// rounding compare by absolute difference.
pub const GRAD_CHECK_FLOOR: f64 = 1e-7;

/// Full-neighborhood loss plus a hash of the hidden-layer ReLU sign pattern.
fn loss_and_pattern(model: &GcnModel, block: &Block, head: &Block, graph: &LayoutGraph, targets: &[f64]) -> (f64, u64) {
    let mut blocks: Vec<&Block> = vec![block; model.depth() - 1];
    blocks.push(head);
    let keep = model.activation == Activation::Relu;
    let (pred, trace) = propagate(model, &blocks, graph.features.clone(), keep);
    let loss = pred.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / targets.len() as f64;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    if let Some(t) = trace {
        for z in &t.pre[..t.pre.len() - 1] {
            for &v in z.iter() {
                h = (h ^ (v > 0.0) as u64).wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    (loss, h)
}

/// Largest relative error between the analytic gradient of the
/// full-neighborhood loss and a fourth-order central finite difference, over
/// every parameter. When the stencil crosses a ReLU kink the step shrinks
/// tenfold, up to three times; a parameter sitting exactly on a kink falls
/// back to the one-sided difference on the side whose activation pattern
/// matches the analytic one.
pub fn grad_check(model: &GcnModel, graph: &LayoutGraph, labels: &[(usize, f64)], epsilon: f64) -> Result<f64> {
    check_labels(graph, labels)?;
    model.check_shape()?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let (_, g) = full_loss_and_grad(model, graph, labels);
    let block = Block::full(graph);
    let head = block.select_rows(&labels.iter().map(|l| l.0).collect::<Vec<_>>());
    let targets: Vec<f64> = labels.iter().map(|l| l.1).collect();
    let eval = |m: &GcnModel| loss_and_pattern(m, &block, &head, graph, &targets);
    let (f0, base) = eval(model);

    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for l in 0..model.depth() {
        for bias in [false, true] {
            let analytic: Vec<f64> =
                if bias { g.bias[l].iter().copied().collect() } else { g.weight[l].iter().copied().collect() };
            for (k, &a) in analytic.iter().enumerate() {
                let mut h = epsilon;
                let mut numeric = 0.0;
                for attempt in 0..4 {
                    let mut f = [0.0; 4];
                    let mut same = [true; 4];
                    for (i, step) in [-2.0, -1.0, 1.0, 2.0].into_iter().enumerate() {
                        nudge(&mut probe, l, bias, k, step * h);
                        let (v, pat) = eval(&probe);
                        set_param(&mut probe, model, l, bias, k);
                        f[i] = v;
                        same[i] = pat == base;
                    }
                    numeric = (8.0 * (f[2] - f[1]) - (f[3] - f[0])) / (12.0 * h);
                    if same.iter().all(|&s| s) {
                        break;
                    }
                    if attempt == 3 {
                        if same[0] && same[1] {
                            numeric = (3.0 * (f0 - f[1]) - (f[1] - f[0])) / (2.0 * h);
                        } else if same[2] && same[3] {
                            numeric = (3.0 * (f[2] - f0) - (f[3] - f[2])) / (2.0 * h);
                        }
                    }
                    h /= 10.0;
                }
                let denom = a.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
                worst = worst.max((a - numeric).abs() / denom);
            }
        }
    }
    Ok(worst)
}
