//! One-hidden-layer perceptron with hand-written backpropagation.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::data::WindowSet;
use crate::error::{Error, Result};
use crate::seeding::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation value.
    fn slope(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// One-output net unrolled over the horizon, predictions fed back.
    Recursive,
    /// One net with an output per horizon step.
    Direct,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Recursive => "recursive",
            Strategy::Direct => "direct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TwoStepLoss {
    /// Squared error of the final horizon step only.
    #[default]
    FinalStep,
    /// Mean of the squared errors over all horizon steps.
    MeanOfSteps,
}

/// `out = w2 act(w1 x + b1) + b2`, matrices row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub activation: Activation,
}

impl MlpParams {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            input,
            hidden,
            output,
            w1: vec![0.0; hidden * input],
            b1: vec![0.0; hidden],
            w2: vec![0.0; output * hidden],
            b2: vec![0.0; output],
            activation: Activation::Tanh,
        }
    }

    /// Each layer uniform in `+-1/sqrt(fan_in)`.
    pub fn init(input: usize, hidden: usize, output: usize, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(input, hidden, output);
        let s1 = 1.0 / (input as f64).sqrt();
        let s2 = 1.0 / (hidden as f64).sqrt();
        for v in p.w1.iter_mut().chain(p.b1.iter_mut()) {
            *v = rng.gen_range(-s1..s1);
        }
        for v in p.w2.iter_mut().chain(p.b2.iter_mut()) {
            *v = rng.gen_range(-s2..s2);
        }
        p
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Parameters in the order `w1, b1, w2, b2`.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.extend(&self.b2);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let (a, rest) = flat.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.b1.len());
        let (c, d) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2.copy_from_slice(d);
    }

    pub fn is_finite(&self) -> bool {
        self.flat().iter().all(|v| v.is_finite())
    }

    fn hidden_into(&self, x: &[f64], a: &mut [f64]) {
        for (k, ak) in a.iter_mut().enumerate() {
            let row = &self.w1[k * self.input..(k + 1) * self.input];
            let z = self.b1[k] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *ak = self.activation.apply(z);
        }
    }

    fn output_into(&self, a: &[f64], out: &mut [f64]) {
        for (o, ov) in out.iter_mut().enumerate() {
            let row = &self.w2[o * self.hidden..(o + 1) * self.hidden];
            *ov = self.b2[o] + row.iter().zip(a).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input {
            return Err(Error::Shape {
                what: "network input",
                expected: self.input,
                got: x.len(),
            });
        }
        let mut a = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.output];
        self.hidden_into(x, &mut a);
        self.output_into(&a, &mut out);
        Ok(out)
    }

    /// Accumulates parameter gradients for upstream output gradient `g_out`
    /// at input `x` with hidden activations `a`; writes `dL/dx` to `g_x`.
    fn backward(&self, x: &[f64], a: &[f64], g_out: &[f64], grad: &mut [f64], g_x: Option<&mut [f64]>) {
        let (gw1, rest) = grad.split_at_mut(self.w1.len());
        let (gb1, rest) = rest.split_at_mut(self.b1.len());
        let (gw2, gb2) = rest.split_at_mut(self.w2.len());
        let mut g_z = vec![0.0; self.hidden];
        for (o, &go) in g_out.iter().enumerate() {
            if go == 0.0 {
                continue;
            }
            gb2[o] += go;
            for k in 0..self.hidden {
                gw2[o * self.hidden + k] += go * a[k];
                g_z[k] += go * self.w2[o * self.hidden + k];
            }
        }
        for k in 0..self.hidden {
            g_z[k] *= self.activation.slope(a[k]);
            gb1[k] += g_z[k];
            let row = &mut gw1[k * self.input..(k + 1) * self.input];
            for (g, v) in row.iter_mut().zip(x) {
                *g += g_z[k] * v;
            }
        }
        if let Some(g_x) = g_x {
            for (j, gx) in g_x.iter_mut().enumerate() {
                *gx = (0..self.hidden)
                    .map(|k| g_z[k] * self.w1[k * self.input + j])
                    .sum();
            }
        }
    }
}

/// Shape of the network a strategy trains.
pub fn network_shape(strategy: Strategy, p: usize, width: usize, h: usize) -> (usize, usize, usize) {
    match strategy {
        Strategy::Recursive => (p, width, 1),
        Strategy::Direct => (p, width, h),
    }
}

/// Predictions for steps `1..=h` from one input window.
pub fn predict_steps(params: &MlpParams, strategy: Strategy, x: &[f64], h: usize) -> Result<Vec<f64>> {
    match strategy {
        Strategy::Direct => params.forward(x),
        Strategy::Recursive => {
            let mut window = x.to_vec();
            let mut preds = Vec::with_capacity(h);
            for _ in 0..h {
                let y = params.forward(&window)?[0];
                preds.push(y);
                window.pop();
                window.insert(0, y);
            }
            Ok(preds)
        }
    }
}

/// Per-step loss weights: which horizon steps are supervised and how much.
fn step_weights(strategy: Strategy, loss: TwoStepLoss, h: usize) -> Vec<f64> {
    match (strategy, loss) {
        (Strategy::Direct, _) | (Strategy::Recursive, TwoStepLoss::MeanOfSteps) => vec![1.0 / h as f64; h],
        (Strategy::Recursive, TwoStepLoss::FinalStep) => {
            let mut w = vec![0.0; h];
            w[h - 1] = 1.0;
            w
        }
    }
}

/// Training loss over `batch` (indices into `data`) and its gradient in
/// [`MlpParams::flat`] order.
///
/// The loss is the batch mean of `sum_k w_k (yhat_k - y_k)^2`, with
/// weights from the strategy and `loss`. For the recursive strategy the
/// gradient flows through every fed-back prediction.
pub fn loss_and_grad(
    params: &MlpParams,
    data: &WindowSet,
    batch: &[usize],
    strategy: Strategy,
    loss: TwoStepLoss,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let (p, h) = (data.p(), data.horizon());
    let (ni, _, no) = network_shape(strategy, p, params.hidden, h);
    if params.input != ni || params.output != no {
        return Err(Error::Shape {
            what: "network shape for strategy",
            expected: ni * 1000 + no,
            got: params.input * 1000 + params.output,
        });
    }
    let weights = step_weights(strategy, loss, h);
    let scale = 1.0 / batch.len() as f64;
    let mut grad = vec![0.0; params.n_params()];
    let mut total = 0.0;
    let hid = params.hidden;

    match strategy {
        Strategy::Direct => {
            let mut x = vec![0.0; p];
            let mut a = vec![0.0; hid];
            let mut out = vec![0.0; h];
            let mut g_out = vec![0.0; h];
            for &i in batch {
                data.input_into(i, &mut x);
                params.hidden_into(&x, &mut a);
                params.output_into(&a, &mut out);
                for (k, y) in data.targets(i).iter().enumerate() {
                    let e = out[k] - y;
                    total += weights[k] * e * e;
                    g_out[k] = 2.0 * weights[k] * e * scale;
                }
                params.backward(&x, &a, &g_out, &mut grad, None);
            }
        }
        Strategy::Recursive => {
            let mut xs = vec![vec![0.0; p]; h];
            let mut acts = vec![vec![0.0; hid]; h];
            let mut outs = vec![0.0; h];
            let mut g_x = vec![0.0; p];
            let mut out1 = [0.0];
            for &i in batch {
                data.input_into(i, &mut xs[0]);
                for k in 0..h {
                    if k > 0 {
                        let (prev, cur) = xs.split_at_mut(k);
                        cur[0][0] = outs[k - 1];
                        cur[0][1..].copy_from_slice(&prev[k - 1][..p - 1]);
                    }
                    params.hidden_into(&xs[k], &mut acts[k]);
                    params.output_into(&acts[k], &mut out1);
                    outs[k] = out1[0];
                }
                let targets = data.targets(i);
                let mut g_o: Vec<f64> = (0..h)
                    .map(|k| {
                        let e = outs[k] - targets[k];
                        total += weights[k] * e * e;
                        2.0 * weights[k] * e * scale
                    })
                    .collect();
                for k in (0..h).rev() {
                    let go = [g_o[k]];
                    params.backward(&xs[k], &acts[k], &go, &mut grad, (k > 0).then_some(&mut g_x[..]));
                    // input slot j of step k holds the prediction of step k-1-j
                    for j in 0..k.min(p) {
                        g_o[k - 1 - j] += g_x[j];
                    }
                }
            }
        }
    }
    Ok((total * scale, grad))
}

/// Mean squared error of the step-`h` prediction over every window.
pub fn eval_mse(params: &MlpParams, data: &WindowSet, strategy: Strategy) -> Result<f64> {
    let h = data.horizon();
    let mut x = vec![0.0; data.p()];
    let mut total = 0.0;
    for i in 0..data.len() {
        data.input_into(i, &mut x);
        let pred = predict_steps(params, strategy, &x, h)?[h - 1];
        let e = pred - data.targets(i)[h - 1];
        total += e * e;
    }
    Ok(total / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polypred::{compose, PolyPredictor};
    use crate::seeding::rng_from_seed;

    fn series(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn forward_examples() {
        let z = MlpParams::zeros(3, 2, 1);
        assert_eq!(z.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0]);
        let mut c = MlpParams::zeros(3, 2, 2);
        c.b2 = vec![1.5, -0.5];
        assert_eq!(c.forward(&[4.0, 5.0, 6.0]).unwrap(), vec![1.5, -0.5]);
        assert!(c.forward(&[1.0]).is_err());
    }

    #[test]
    fn forward_matches_formula() {
        let mut rng = rng_from_seed(1);
        let p = MlpParams::init(4, 3, 2, &mut rng);
        let x = [0.3, -1.2, 0.8, 2.0];
        let got = p.forward(&x).unwrap();
        for o in 0..2 {
            let mut s = p.b2[o];
            for k in 0..3 {
                let mut z = p.b1[k];
                for j in 0..4 {
                    z += p.w1[k * 4 + j] * x[j];
                }
                s += p.w2[o * 3 + k] * z.tanh();
            }
            assert!((got[o] - s).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_problem_has_zero_loss_and_gradient() {
        let data = WindowSet::new(vec![0.0; 10], 3, 2).unwrap();
        let batch: Vec<usize> = (0..data.len()).collect();
        for s in [Strategy::Recursive, Strategy::Direct] {
            let (i, hd, o) = network_shape(s, 3, 2, 2);
            let (l, g) = loss_and_grad(&MlpParams::zeros(i, hd, o), &data, &batch, s, TwoStepLoss::FinalStep).unwrap();
            assert_eq!(l, 0.0);
            assert!(g.iter().all(|&v| v == 0.0));
        }
    }

    fn fd_check(strategy: Strategy, loss: TwoStepLoss, activation: Activation, h: usize, seed: u64) {
        let mut rng = rng_from_seed(seed);
        let data = WindowSet::new(series(20, seed + 100), 3, h).unwrap();
        let batch: Vec<usize> = (0..data.len()).collect();
        let (i, hd, o) = network_shape(strategy, 3, 2, h);
        let params = MlpParams::init(i, hd, o, &mut rng).with_activation(activation);
        let (_, g) = loss_and_grad(&params, &data, &batch, strategy, loss).unwrap();
        let flat = params.flat();
        let eps = 1e-6;
        for k in 0..flat.len() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            let mut f = flat.clone();
            f[k] += eps;
            plus.set_flat(&f);
            f[k] -= 2.0 * eps;
            minus.set_flat(&f);
            let lp = loss_and_grad(&plus, &data, &batch, strategy, loss).unwrap().0;
            let lm = loss_and_grad(&minus, &data, &batch, strategy, loss).unwrap().0;
            let fd = (lp - lm) / (2.0 * eps);
            let tol = 1e-5 * fd.abs().max(g[k].abs()).max(1e-3);
            assert!((fd - g[k]).abs() <= tol, "{strategy:?} {loss:?} h={h} param {k}: {} vs {fd}", g[k]);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..10 {
            for s in [Strategy::Recursive, Strategy::Direct] {
                fd_check(s, TwoStepLoss::FinalStep, Activation::Tanh, 2, seed);
            }
            fd_check(Strategy::Recursive, TwoStepLoss::MeanOfSteps, Activation::Tanh, 2, seed);
        }
        fd_check(Strategy::Recursive, TwoStepLoss::FinalStep, Activation::Tanh, 4, 3);
        fd_check(Strategy::Recursive, TwoStepLoss::MeanOfSteps, Activation::Identity, 3, 4);
    }

    #[test]
    fn linear_recursion_matches_polynomial_composition() {
        let mut rng = rng_from_seed(7);
        let mut params = MlpParams::init(3, 2, 1, &mut rng).with_activation(Activation::Identity);
        params.b1 = vec![0.0; 2];
        params.b2 = vec![0.0];
        let coefs: Vec<f64> = (0..3)
            .map(|j| (0..2).map(|k| params.w2[k] * params.w1[k * 3 + j]).sum())
            .collect();
        let one_step = PolyPredictor::linear(&coefs).unwrap();
        for h in 1..=3 {
            let composed = compose(&one_step, h).unwrap().composed;
            for _ in 0..10 {
                let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let net = predict_steps(&params, Strategy::Recursive, &x, h).unwrap()[h - 1];
                let poly = composed.eval(&x).unwrap();
                assert!((net - poly).abs() < 1e-12 * (1.0 + poly.abs()));
            }
        }
    }
}
