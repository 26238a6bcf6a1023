//! Imitation learning: expert datasets, mini-batch training with in-module
//! backpropagation, and closed-loop accuracy evaluation.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{preprocess, Controller, ControllerError, Mlp};
use crate::dynamics::System;
use crate::registry::Registry;
use crate::workspace::{Bounds, Region};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// (state, expert action) pairs, tagged with the split they were drawn for.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub split: Split,
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub n_starts: usize,
    pub horizon: usize,
    /// Steps recorded after the goal box is first entered, so the network
    /// also learns to settle inside it.
    pub settle_steps: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig { n_starts: 4800, horizon: 120, settle_steps: 10 }
    }
}

pub fn sample_starts(state_box: &Bounds, n: usize, rng: &mut dyn RngCore) -> Vec<Vec<f64>> {
    (0..n).map(|_| state_box.sample(rng)).collect()
}

/// Expert rollouts from uniform starts in the state box.
pub fn generate_dataset(
    sys: &System,
    state_box: &Bounds,
    goal: &Region,
    expert: &dyn Controller,
    cfg: &DatasetConfig,
    split: Split,
    rng: &mut dyn RngCore,
) -> Result<Dataset, ControllerError> {
    if cfg.n_starts == 0 {
        return Err(ControllerError::Setup("need at least one start".into()));
    }
    let starts = sample_starts(state_box, cfg.n_starts, rng);
    let mut data = Dataset { split, states: Vec::new(), actions: Vec::new() };
    for x0 in starts {
        let mut x = x0;
        let mut since_entry: Option<usize> = None;
        for _ in 0..cfg.horizon.max(1) {
            if since_entry.is_none() && goal.contains(&x) {
                since_entry = Some(0);
            }
            if let Some(k) = since_entry.as_mut() {
                if *k >= cfg.settle_steps {
                    break;
                }
                *k += 1;
            }
            let u = sys.input_box.clamp(&expert.act(&x));
            data.states.push(x.clone());
            data.actions.push(u);
            x = sys.closed_loop_step(&x, expert, rng);
            if !state_box.contains(&x) {
                break;
            }
        }
    }
    Ok(data)
}

/// Parameter update rule.
pub trait Optimizer: Send {
    fn name(&self) -> &'static str;
    fn step(&mut self, params: &mut [f64], grad: &[f64]);
    fn set_learning_rate(&mut self, lr: f64);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerParams {
    pub learning_rate: f64,
    pub momentum: f64,
    pub n_params: usize,
}

pub struct Sgd {
    lr: f64,
    momentum: f64,
    velocity: Vec<f64>,
}

impl Optimizer for Sgd {
    fn name(&self) -> &'static str {
        "sgd"
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        for ((p, g), v) in params.iter_mut().zip(grad).zip(self.velocity.iter_mut()) {
            *v = self.momentum * *v - self.lr * g;
            *p += *v;
        }
    }

    fn set_learning_rate(&mut self, lr: f64) {
        self.lr = lr;
    }
}

pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Optimizer for Adam {
    fn name(&self) -> &'static str {
        "adam"
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }

    fn set_learning_rate(&mut self, lr: f64) {
        self.lr = lr;
    }
}

pub fn optimizer_registry() -> Registry<dyn Optimizer, OptimizerParams> {
    Registry::<dyn Optimizer, OptimizerParams>::new("optimizer")
        .register("sgd", |p| {
            Ok(Box::new(Sgd { lr: p.learning_rate, momentum: p.momentum, velocity: vec![0.0; p.n_params] }))
        })
        .register("adam", |p| {
            Ok(Box::new(Adam {
                lr: p.learning_rate,
                beta1: 0.9,
                beta2: 0.999,
                t: 0,
                m: vec![0.0; p.n_params],
                v: vec![0.0; p.n_params],
            }))
        })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub optimizer: String,
    pub validation_fraction: f64,
    pub wrap_dims: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: vec![40, 40],
            epochs: 60,
            batch_size: 128,
            learning_rate: 1e-3,
            momentum: 0.9,
            optimizer: "adam".into(),
            validation_fraction: 0.1,
            wrap_dims: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub net: Mlp,
    pub train_loss: f64,
    pub validation_loss: f64,
}

/// Mean squared error over samples and output components, and its gradient
/// with respect to every parameter.
pub fn loss_and_grad(net: &Mlp, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let scale = 1.0 / (xs.len() * net.output_dim()) as f64;
    let chunk = 64;
    let (loss, grad) = xs
        .par_chunks(chunk)
        .zip(ys.par_chunks(chunk))
        .map(|(xc, yc)| {
            let mut g = vec![0.0; net.params().len()];
            let mut l = 0.0;
            for (x, y) in xc.iter().zip(yc) {
                l += backprop(net, x, y, scale, &mut g);
            }
            (l, g)
        })
        .reduce(
            || (0.0, vec![0.0; net.params().len()]),
            |(la, mut ga), (lb, gb)| {
                ga.iter_mut().zip(&gb).for_each(|(a, b)| *a += b);
                (la + lb, ga)
            },
        );
    (loss * scale, grad)
}

/// Accumulates `scale * d(sum sq err)/dθ` into `grad`; returns the summed
/// squared error of this sample.
fn backprop(net: &Mlp, x: &[f64], y: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
    let sizes = net.sizes();
    let layers = net.layer_count();
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers + 1);
    acts.push(x.to_vec());
    for l in 0..layers {
        let (w, b) = net.layer(l);
        let cols = sizes[l];
        let a = &acts[l];
        let mut z: Vec<f64> = (0..sizes[l + 1])
            .map(|r| b[r] + w[r * cols..(r + 1) * cols].iter().zip(a).map(|(p, q)| p * q).sum::<f64>())
            .collect();
        if l + 1 < layers {
            z.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        acts.push(z);
    }
    let out = &acts[layers];
    let mut err = 0.0;
    let mut delta: Vec<f64> = out
        .iter()
        .zip(y)
        .map(|(o, t)| {
            err += (o - t) * (o - t);
            2.0 * (o - t) * scale
        })
        .collect();
    for l in (0..layers).rev() {
        let (cols, rows) = (sizes[l], sizes[l + 1]);
        let o = net.offset(l);
        let a = &acts[l];
        for r in 0..rows {
            let d = delta[r];
            if d == 0.0 {
                continue;
            }
            let gw = &mut grad[o + r * cols..o + (r + 1) * cols];
            gw.iter_mut().zip(a).for_each(|(g, av)| *g += d * av);
            grad[o + rows * cols + r] += d;
        }
        if l > 0 {
            let (w, _) = net.layer(l);
            let mut prev = vec![0.0; cols];
            for r in 0..rows {
                let d = delta[r];
                if d != 0.0 {
                    prev.iter_mut().zip(&w[r * cols..(r + 1) * cols]).for_each(|(p, wv)| *p += wv * d);
                }
            }
            // ReLU derivative: a_l > 0 iff z_{l-1} > 0
            prev.iter_mut().zip(a).for_each(|(p, av)| {
                if *av <= 0.0 {
                    *p = 0.0
                }
            });
            delta = prev;
        }
    }
    err
}

fn moments(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = rows[0].len();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v / n);
    }
    let mut std = vec![0.0; d];
    for r in rows {
        std.iter_mut().zip(r.iter().zip(&mean)).for_each(|(s, (v, m))| *s += (v - m).powi(2) / n);
    }
    std.iter_mut().for_each(|s| *s = if *s > 1e-12 { s.sqrt() } else { 1.0 });
    (mean, std)
}

/// Train a fresh network on `data`. Inputs and targets are standardized during
/// training and the affine maps are folded back into the first and last
/// layers, so the returned network consumes preprocessed raw states and emits
/// raw actions.
pub fn train_imitation(data: &Dataset, cfg: &TrainConfig, rng: &mut dyn RngCore) -> Result<TrainOutcome, ControllerError> {
    if data.split != Split::Train {
        return Err(ControllerError::Setup("refusing to train on a test-split dataset".into()));
    }
    if data.is_empty() {
        return Err(ControllerError::Setup("empty dataset".into()));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(ControllerError::Setup("batch size and epochs must be positive".into()));
    }
    let xs: Vec<Vec<f64>> = data.states.iter().map(|x| preprocess(x, &cfg.wrap_dims)).collect();
    let (mx, sx) = moments(&xs);
    let (my, sy) = moments(&data.actions);
    let xn: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().zip(mx.iter().zip(&sx)).map(|(v, (m, s))| (v - m) / s).collect()).collect();
    let yn: Vec<Vec<f64>> =
        data.actions.iter().map(|y| y.iter().zip(my.iter().zip(&sy)).map(|(v, (m, s))| (v - m) / s).collect()).collect();

    let mut sizes = vec![xs[0].len()];
    sizes.extend(&cfg.hidden);
    sizes.push(data.actions[0].len());
    let mut net = Mlp::zeros(&sizes)?;
    for l in 0..net.layer_count() {
        let fan_in = sizes[l] as f64;
        let bound = (6.0 / fan_in).sqrt();
        let (w, _) = net.layer_mut(l);
        w.iter_mut().for_each(|v| *v = rng.gen_range(-bound..bound));
    }

    let mut idx: Vec<usize> = (0..xn.len()).collect();
    idx.shuffle(rng);
    let n_val = ((xn.len() as f64) * cfg.validation_fraction.clamp(0.0, 0.5)).floor() as usize;
    let (val_idx, train_idx) = idx.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    if train_idx.is_empty() {
        return Err(ControllerError::Setup("validation split leaves no training data".into()));
    }
    let pick = |ids: &[usize]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (ids.iter().map(|&i| xn[i].clone()).collect(), ids.iter().map(|&i| yn[i].clone()).collect())
    };
    let mut opt = optimizer_registry()
        .create(
            &cfg.optimizer,
            &OptimizerParams { learning_rate: cfg.learning_rate, momentum: cfg.momentum, n_params: net.params().len() },
        )
        .map_err(|e| ControllerError::Setup(e.to_string()))?;

    let mut train_loss = f64::NAN;
    for epoch in 0..cfg.epochs {
        // cosine decay down to a tenth of the base rate
        let phase = std::f64::consts::PI * epoch as f64 / cfg.epochs as f64;
        opt.set_learning_rate(cfg.learning_rate * (0.55 + 0.45 * phase.cos()));
        train_idx.shuffle(rng);
        let mut total = 0.0;
        for batch in train_idx.chunks(cfg.batch_size) {
            let (bx, by) = pick(batch);
            let (loss, grad) = loss_and_grad(&net, &bx, &by);
            if !loss.is_finite() {
                return Err(ControllerError::Diverged { epoch, loss });
            }
            total += loss * batch.len() as f64;
            opt.step(net.params_mut(), &grad);
        }
        train_loss = total / train_idx.len() as f64;
        log::debug!("epoch {epoch}: train loss {train_loss:.6}");
    }
    let validation_loss = if val_idx.is_empty() {
        f64::NAN
    } else {
        let (vx, vy) = pick(val_idx);
        loss_and_grad(&net, &vx, &vy).0
    };
    fold_normalization(&mut net, &mx, &sx, &my, &sy);
    Ok(TrainOutcome { net, train_loss, validation_loss })
}

fn fold_normalization(net: &mut Mlp, mx: &[f64], sx: &[f64], my: &[f64], sy: &[f64]) {
    let cols = net.sizes()[0];
    let (w, b) = net.layer_mut(0);
    for r in 0..b.len() {
        let row = &mut w[r * cols..(r + 1) * cols];
        for c in 0..cols {
            row[c] /= sx[c];
            b[r] -= row[c] * mx[c];
        }
    }
    let last = net.layer_count() - 1;
    let cols = net.sizes()[last];
    let (w, b) = net.layer_mut(last);
    for r in 0..b.len() {
        w[r * cols..(r + 1) * cols].iter_mut().for_each(|v| *v *= sy[r]);
        b[r] = b[r] * sy[r] + my[r];
    }
}

/// Fraction of rollouts from `starts` that enter `goal` within `horizon`.
pub fn controller_accuracy(
    ctrl: &dyn Controller,
    sys: &System,
    state_box: &Bounds,
    goal: &Region,
    starts: &[Vec<f64>],
    horizon: usize,
    rng: &mut dyn RngCore,
) -> f64 {
    if starts.is_empty() {
        return 0.0;
    }
    let mut hits = 0;
    for x0 in starts {
        let mut x = x0.clone();
        for t in 0..=horizon {
            if goal.contains(&x) {
                hits += 1;
                break;
            }
            if t == horizon || !state_box.contains(&x) {
                break;
            }
            x = sys.closed_loop_step(&x, ctrl, rng);
        }
    }
    hits as f64 / starts.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{ConstantController, Expert, ExpertGains};
    use crate::dynamics::{UniformNoise, Unicycle};
    use crate::rng::stream;

    fn system(v: f64) -> System {
        System::new(
            Box::new(Unicycle { tau: 1.0 }),
            Box::new(UniformNoise { bound: v }),
            Bounds::new(vec![-0.22, -0.15], vec![0.22, 0.15]).unwrap(),
        )
    }

    fn state_box() -> Bounds {
        Bounds::new(vec![0.0, 0.0, -50.0], vec![5.0, 5.0, 50.0]).unwrap()
    }

    fn goal() -> Region {
        Region::new("g", vec![0, 1], vec![2.0, 2.0], vec![2.6, 2.6]).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = stream(21, &[]);
        let mut net = Mlp::zeros(&[3, 6, 5, 2]).unwrap();
        net.params_mut().iter_mut().for_each(|p| *p = rng.gen_range(-1.0..1.0));
        let xs: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<Vec<f64>> = (0..3).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let (_, grad) = loss_and_grad(&net, &xs, &ys);
        let h = 1e-6;
        for i in 0..net.params().len() {
            let mut plus = net.clone();
            plus.params_mut()[i] += h;
            let mut minus = net.clone();
            minus.params_mut()[i] -= h;
            let fd = (loss_and_grad(&plus, &xs, &ys).0 - loss_and_grad(&minus, &xs, &ys).0) / (2.0 * h);
            let denom = fd.abs().max(grad[i].abs()).max(1e-7);
            assert!((fd - grad[i]).abs() / denom < 1e-4, "param {i}: fd {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn learns_a_constant_action() {
        let mut rng = stream(22, &[]);
        let states: Vec<Vec<f64>> = (0..256).map(|_| state_box().sample(&mut rng)).collect();
        let data = Dataset { split: Split::Train, actions: vec![vec![0.1, -0.05]; states.len()], states };
        let cfg = TrainConfig { epochs: 600, hidden: vec![8, 8], learning_rate: 3e-2, ..TrainConfig::default() };
        let out = train_imitation(&data, &cfg, &mut rng).unwrap();
        for x in data.states.iter().take(20) {
            let u = out.net.forward(&preprocess(x, &cfg.wrap_dims));
            assert!((u[0] - 0.1).abs() < 1e-2 && (u[1] + 0.05).abs() < 1e-2, "{u:?}");
        }
    }

    #[test]
    fn refuses_test_split() {
        let data = Dataset { split: Split::Test, states: vec![vec![0.0; 3]], actions: vec![vec![0.0; 2]] };
        let r = train_imitation(&data, &TrainConfig::default(), &mut stream(0, &[]));
        assert!(matches!(r, Err(ControllerError::Setup(_))));
    }

    #[test]
    fn dataset_is_seeded_and_bounded() {
        let sys = system(0.002);
        let g = goal();
        let e = Expert::new("e", [2.3, 2.3], sys.input_box.clone(), ExpertGains::default());
        let cfg = DatasetConfig { n_starts: 5, horizon: 40, settle_steps: 3 };
        let a = generate_dataset(&sys, &state_box(), &g, &e, &cfg, Split::Train, &mut stream(5, &[])).unwrap();
        let b = generate_dataset(&sys, &state_box(), &g, &e, &cfg, Split::Train, &mut stream(5, &[])).unwrap();
        assert_eq!(a, b);
        assert!(a.actions.iter().all(|u| sys.input_box.contains(u)));
        assert!(a.states.iter().all(|x| state_box().contains(x)));
    }

    #[test]
    fn start_inside_goal_gives_small_actions() {
        let sys = system(0.0);
        let g = goal();
        let e = Expert::new("e", [2.3, 2.3], sys.input_box.clone(), ExpertGains::default());
        let sb = Bounds::new(vec![2.29, 2.29, 0.0], vec![2.31, 2.31, 0.01]).unwrap();
        let cfg = DatasetConfig { n_starts: 1, horizon: 10, settle_steps: 2 };
        let d = generate_dataset(&sys, &sb, &g, &e, &cfg, Split::Train, &mut stream(6, &[])).unwrap();
        assert!(!d.is_empty());
        assert!(d.actions[0][0].abs() < 0.02);
    }

    #[test]
    fn accuracy_of_expert_and_zero_controller() {
        let sys = system(0.0);
        let g = goal();
        let e = Expert::new("e", [2.3, 2.3], sys.input_box.clone(), ExpertGains::default());
        let mut rng = stream(7, &[]);
        // easy starts: away from the border and facing the goal
        let inner = Bounds::new(vec![0.5, 0.5, 0.0], vec![4.5, 4.5, 1.0]).unwrap();
        let starts: Vec<Vec<f64>> = sample_starts(&inner, 50, &mut rng)
            .into_iter()
            .map(|x| vec![x[0], x[1], (2.3 - x[1]).atan2(2.3 - x[0])])
            .collect();
        assert_eq!(controller_accuracy(&e, &sys, &state_box(), &g, &starts, 120, &mut rng), 1.0);
        let zero = ConstantController::new(vec![0.0, 0.0]);
        let outside: Vec<Vec<f64>> = starts.iter().filter(|x| !g.contains(x)).cloned().collect();
        assert_eq!(controller_accuracy(&zero, &sys, &state_box(), &g, &outside, 50, &mut rng), 0.0);
    }
}
