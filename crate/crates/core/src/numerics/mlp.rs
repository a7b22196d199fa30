//! Dense feed-forward network with a single linear output unit (the logit)
//! and exact reverse-mode gradients.
//!
//! Weights are stored row-major `[out][in]`. Hidden layers share one
//! activation; the output layer is linear so callers can read the raw logit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::matrix::{accumulate_weight_grads, axpy, backward_affine, dot, forward_affine, Matrix};
use crate::error::{Error, Result};

/// Hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Selu,
    Elu,
}

const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;
const ELU_ALPHA: f64 = 1.0;

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Selu => {
                if z > 0.0 {
                    SELU_LAMBDA * z
                } else {
                    SELU_LAMBDA * SELU_ALPHA * (z.exp() - 1.0)
                }
            }
            Activation::Elu => {
                if z > 0.0 {
                    z
                } else {
                    ELU_ALPHA * (z.exp() - 1.0)
                }
            }
        }
    }

    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Selu => {
                if z > 0.0 {
                    SELU_LAMBDA
                } else {
                    SELU_LAMBDA * SELU_ALPHA * z.exp()
                }
            }
            Activation::Elu => {
                if z > 0.0 {
                    1.0
                } else {
                    ELU_ALPHA * z.exp()
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Selu => "selu",
            Activation::Elu => "elu",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "relu" => Ok(Activation::Relu),
            "selu" => Ok(Activation::Selu),
            "elu" => Ok(Activation::Elu),
            other => Err(Error::InvalidConfig(format!("unknown activation '{other}'"))),
        }
    }
}

/// Parameters of the network: weight matrix and bias vector per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layer_sizes: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    activation: Activation,
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            weights: params
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &MlpGrads, alpha: f64) {
        for (w, o) in self.weights.iter_mut().zip(&other.weights) {
            axpy(w.data_mut(), alpha, o.data());
        }
        for (b, o) in self.biases.iter_mut().zip(&other.biases) {
            axpy(b, alpha, o);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for w in &mut self.weights {
            for v in w.data_mut() {
                *v *= alpha;
            }
        }
        for b in &mut self.biases {
            for v in b {
                *v *= alpha;
            }
        }
    }

    /// Index of the first layer containing a non-finite entry, if any.
    pub fn first_non_finite_layer(&self) -> Option<usize> {
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            if w.data().iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
                return Some(l);
            }
        }
        None
    }
}

/// Cached intermediates of a batched forward pass, needed by the backward
/// pass: pre-activations for each hidden layer and the activated outputs.
pub struct BatchTrace {
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

impl MlpParams {
    /// Initialize with fan-in-scaled uniform weights `±sqrt(6/fan_in)` and
    /// zero biases, so an untrained network outputs logits near zero.
    pub fn init(layer_sizes: &[usize], activation: Activation, rng: &mut ChaCha8Rng) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidConfig(
                "layer_sizes needs at least input and output entries".into(),
            ));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidConfig("layer_sizes entries must be positive".into()));
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(Error::InvalidConfig("final layer must have exactly one unit".into()));
        }
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            let mut w = Matrix::zeros(fan_out, fan_in);
            for v in w.data_mut() {
                *v = rng.gen_range(-bound..bound);
            }
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            activation,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut Matrix {
        &mut self.weights[layer]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut Vec<f64> {
        &mut self.biases[layer]
    }

    /// Total parameter count.
    pub fn n_params(&self) -> usize {
        self.weights
            .iter()
            .map(|w| w.data().len())
            .chain(self.biases.iter().map(|b| b.len()))
            .sum()
    }

    /// Flatten all parameters (layer by layer, weights then bias) into one
    /// vector. Inverse of [`MlpParams::set_flat`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params(), "flat parameter length");
        let mut k = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            let n = w.data().len();
            w.data_mut().copy_from_slice(&flat[k..k + n]);
            k += n;
            b.copy_from_slice(&flat[k..k + b.len()]);
            k += b.len();
        }
    }

    fn check_input(&self, input: &[f64], context: &str) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::dim(context, self.input_dim(), input.len()));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{context} input")));
        }
        Ok(())
    }

    /// Single-sample forward pass; returns the raw pre-sigmoid logit.
    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        self.check_input(input, "mlp forward")?;
        let mut cur = input.to_vec();
        let last = self.n_layers() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut next = vec![0.0; w.rows()];
            for (o, slot) in next.iter_mut().enumerate() {
                *slot = dot(&cur, w.row(o)) + b[o];
            }
            if l != last {
                for v in &mut next {
                    *v = self.activation.apply(*v);
                }
            }
            cur = next;
        }
        Ok(cur[0])
    }

    /// Exact gradient of the logit with respect to the input vector.
    pub fn input_gradient(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input, "mlp input gradient")?;
        // Forward, keeping pre-activations per hidden layer.
        let last = self.n_layers() - 1;
        let mut acts: Vec<Vec<f64>> = vec![input.to_vec()];
        let mut pres: Vec<Vec<f64>> = Vec::with_capacity(last);
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let cur = acts.last().unwrap();
            let mut pre = vec![0.0; w.rows()];
            for (o, slot) in pre.iter_mut().enumerate() {
                *slot = dot(cur, w.row(o)) + b[o];
            }
            if l != last {
                let post = pre.iter().map(|&z| self.activation.apply(z)).collect();
                pres.push(pre);
                acts.push(post);
            } else {
                acts.push(pre);
            }
        }
        // Backward from d(logit)/d(logit) = 1.
        let mut delta = vec![1.0];
        for l in (0..self.n_layers()).rev() {
            let w = &self.weights[l];
            let mut down = vec![0.0; w.cols()];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    axpy(&mut down, d, w.row(o));
                }
            }
            if l > 0 {
                for (v, &z) in down.iter_mut().zip(&pres[l - 1]) {
                    *v *= self.activation.derivative(z);
                }
            }
            delta = down;
        }
        Ok(delta)
    }

    /// Batched forward pass. Returns the logits and the trace needed for
    /// [`MlpParams::batch_backward`].
    pub fn batch_forward(&self, inputs: &Matrix) -> Result<(Vec<f64>, BatchTrace)> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::dim("mlp batch forward", self.input_dim(), inputs.cols()));
        }
        let last = self.n_layers() - 1;
        let mut pre = Vec::with_capacity(self.n_layers());
        let mut post: Vec<Matrix> = Vec::with_capacity(self.n_layers());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let src = if l == 0 { inputs } else { &post[l - 1] };
            let mut z = Matrix::zeros(src.rows(), w.rows());
            forward_affine(src, w, b, &mut z);
            if l != last {
                let mut a = z.clone();
                for v in a.data_mut() {
                    *v = self.activation.apply(*v);
                }
                pre.push(z);
                post.push(a);
            } else {
                let logits = z.data().to_vec();
                pre.push(z);
                return Ok((logits, BatchTrace { pre, post }));
            }
        }
        unreachable!("network has at least one layer");
    }

    /// Backpropagate per-sample output gradients `dlogit` through the trace.
    /// Returns parameter gradients summed over the batch, plus the gradient
    /// with respect to the inputs when `want_input_grads` is set.
    pub fn batch_backward(
        &self,
        inputs: &Matrix,
        trace: &BatchTrace,
        dlogit: &[f64],
        want_input_grads: bool,
    ) -> (MlpGrads, Option<Matrix>) {
        assert_eq!(dlogit.len(), inputs.rows());
        let mut grads = MlpGrads::zeros_like(self);
        let mut delta = Matrix::from_vec(dlogit.len(), 1, dlogit.to_vec());
        for l in (0..self.n_layers()).rev() {
            let src = if l == 0 { inputs } else { &trace.post[l - 1] };
            accumulate_weight_grads(&delta, src, &mut grads.weights[l], &mut grads.biases[l]);
            if l == 0 && !want_input_grads {
                break;
            }
            let mut down = Matrix::zeros(delta.rows(), self.weights[l].cols());
            backward_affine(&delta, &self.weights[l], &mut down);
            if l > 0 {
                let zs = &trace.pre[l - 1];
                for m in 0..down.rows() {
                    let z = zs.row(m);
                    for (v, &zv) in down.row_mut(m).iter_mut().zip(z) {
                        *v *= self.activation.derivative(zv);
                    }
                }
            }
            if l == 0 {
                return (grads, Some(down));
            }
            delta = down;
        }
        (grads, None)
    }
}

/// Numerically stable sigmoid.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-example binary cross-entropy in logit form:
/// `max(z,0) - z*y + ln(1 + exp(-|z|))`. Finite for any finite logit.
#[inline]
pub fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Mean binary cross-entropy over a batch, with exact reverse-mode gradients
/// for every parameter. Labels must be exactly 0 or 1.
pub fn bce_logit_loss_and_grads(
    params: &MlpParams,
    inputs: &Matrix,
    labels: &[f64],
) -> Result<(f64, MlpGrads)> {
    if inputs.rows() == 0 {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    if labels.len() != inputs.rows() {
        return Err(Error::dim("bce labels", inputs.rows(), labels.len()));
    }
    if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::InvalidConfig("labels must be 0 or 1".into()));
    }
    let (logits, trace) = params.batch_forward(inputs)?;
    let m = inputs.rows() as f64;
    let mut loss = 0.0;
    let mut dlogit = Vec::with_capacity(logits.len());
    for (&z, &y) in logits.iter().zip(labels) {
        loss += bce_with_logit(z, y);
        dlogit.push((sigmoid(z) - y) / m);
    }
    loss /= m;
    let (grads, _) = params.batch_backward(inputs, &trace, &dlogit, false);
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fd::finite_diff_grad;
    use crate::numerics::rng::RngStream;

    fn zero_net(sizes: &[usize], act: Activation) -> MlpParams {
        let mut p = MlpParams::init(sizes, act, &mut RngStream::new(0).rng()).unwrap();
        let zeros = vec![0.0; p.n_params()];
        p.set_flat(&zeros);
        p
    }

    #[test]
    fn init_shapes_and_determinism() {
        let p = MlpParams::init(&[3, 1], Activation::Relu, &mut RngStream::new(5).rng()).unwrap();
        assert_eq!(p.weights()[0].rows(), 1);
        assert_eq!(p.weights()[0].cols(), 3);
        assert!(p.weights()[0].data().iter().all(|v| v.is_finite()));
        assert_eq!(p.biases()[0], vec![0.0]);

        let a = MlpParams::init(&[4, 8, 1], Activation::Selu, &mut RngStream::new(9).rng()).unwrap();
        let b = MlpParams::init(&[4, 8, 1], Activation::Selu, &mut RngStream::new(9).rng()).unwrap();
        assert_eq!(a.flat(), b.flat());

        let c = MlpParams::init(&[4, 8, 1], Activation::Selu, &mut RngStream::new(10).rng()).unwrap();
        assert_ne!(a.flat(), c.flat());
    }

    #[test]
    fn init_rejects_bad_sizes() {
        let mut rng = RngStream::new(0).rng();
        assert!(MlpParams::init(&[3], Activation::Relu, &mut rng).is_err());
        assert!(MlpParams::init(&[3, 0, 1], Activation::Relu, &mut rng).is_err());
        assert!(MlpParams::init(&[3, 2], Activation::Relu, &mut rng).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = zero_net(&[4, 8, 1], Activation::Relu);
        assert_eq!(p.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap(), 0.0);
        assert_eq!(p.input_gradient(&[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn linear_single_layer() {
        let mut p = zero_net(&[3, 1], Activation::Relu);
        p.set_flat(&[1.0, 0.0, 0.0, 0.0]); // w = [1,0,0], b = 0
        assert_eq!(p.forward(&[2.5, 9.0, -4.0]).unwrap(), 2.5);
        assert_eq!(p.input_gradient(&[2.5, 9.0, -4.0]).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn forward_rejects_dim_mismatch() {
        let p = zero_net(&[3, 1], Activation::Relu);
        assert!(p.forward(&[1.0, 2.0]).is_err());
        assert!(p.input_gradient(&[1.0]).is_err());
        assert!(p.forward(&[1.0, f64::NAN, 0.0]).is_err());
    }

    /// Independent second forward implementation: explicit per-unit loops
    /// with no shared code with `MlpParams::forward`.
    fn hand_rolled_forward(p: &MlpParams, input: &[f64]) -> f64 {
        let mut cur: Vec<f64> = input.to_vec();
        for l in 0..p.n_layers() {
            let w = &p.weights()[l];
            let b = &p.biases()[l];
            let mut next = Vec::with_capacity(w.rows());
            for o in 0..w.rows() {
                let mut acc = b[o];
                for i in 0..w.cols() {
                    acc += w.row(o)[i] * cur[i];
                }
                if l + 1 < p.n_layers() {
                    acc = p.activation().apply(acc);
                }
                next.push(acc);
            }
            cur = next;
        }
        cur[0]
    }

    #[test]
    fn forward_matches_hand_rolled_pass() {
        for (seed, act) in [(1, Activation::Relu), (2, Activation::Selu), (3, Activation::Elu)] {
            let p = MlpParams::init(&[5, 7, 6, 1], act, &mut RngStream::new(seed).rng()).unwrap();
            let input = [0.3, -1.2, 2.0, 0.05, -0.7];
            let got = p.forward(&input).unwrap();
            let want = hand_rolled_forward(&p, &input);
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "seed {seed}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn batch_forward_matches_single() {
        let p = MlpParams::init(&[4, 6, 1], Activation::Selu, &mut RngStream::new(11).rng()).unwrap();
        let rows = vec![
            vec![0.1, 0.2, -0.3, 1.4],
            vec![-2.0, 0.0, 0.5, 0.9],
            vec![3.0, -1.0, 0.7, 0.2],
        ];
        let m = Matrix::from_rows(&rows);
        let (logits, _) = p.batch_forward(&m).unwrap();
        for (r, &z) in rows.iter().zip(&logits) {
            assert!((p.forward(r).unwrap() - z).abs() < 1e-12);
        }
    }

    #[test]
    fn bce_known_values() {
        // logit 0, label 1 -> ln 2
        assert!((bce_with_logit(0.0, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        // saturated logits stay finite and tight
        assert!(bce_with_logit(30.0, 1.0) < 1e-12);
        assert!((bce_with_logit(-30.0, 1.0) - 30.0).abs() < 1e-6);
        for z in [-500.0, -100.0, 0.0, 100.0, 500.0] {
            assert!(bce_with_logit(z, 0.0).is_finite());
            assert!(bce_with_logit(z, 1.0).is_finite());
        }
    }

    #[test]
    fn bce_rejects_bad_labels() {
        let p = zero_net(&[2, 1], Activation::Relu);
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]);
        assert!(bce_logit_loss_and_grads(&p, &x, &[0.5]).is_err());
        assert!(bce_logit_loss_and_grads(&p, &x, &[1.0, 0.0]).is_err());
    }

    fn grad_check(act: Activation, seed: u64) {
        let stream = RngStream::new(seed);
        let p = MlpParams::init(&[3, 5, 4, 1], act, &mut stream.rng()).unwrap();
        let mut rng = stream.substream(1).rng();
        let n = 8;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let row: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            rows.push(row);
            labels.push((i % 2) as f64);
        }
        let inputs = Matrix::from_rows(&rows);
        let (_, grads) = bce_logit_loss_and_grads(&p, &inputs, &labels).unwrap();

        // Flatten analytic grads in the same order as MlpParams::flat.
        let mut analytic = Vec::new();
        for (w, b) in grads.weights.iter().zip(&grads.biases) {
            analytic.extend_from_slice(w.data());
            analytic.extend_from_slice(b);
        }

        let base = p.flat();
        let loss_of = |flat: &[f64]| {
            let mut q = p.clone();
            q.set_flat(flat);
            bce_logit_loss_and_grads(&q, &inputs, &labels).unwrap().0
        };
        let numeric = finite_diff_grad(&loss_of, &base, 1e-5);
        for (k, (&a, &f)) in analytic.iter().zip(&numeric).enumerate() {
            let rel = (a - f).abs() / f.abs().max(a.abs()).max(1.0);
            assert!(rel < 1e-4, "{} param {k}: analytic {a} vs fd {f}", act.name());
        }
    }

    #[test]
    fn parameter_grads_match_finite_differences() {
        grad_check(Activation::Relu, 21);
        grad_check(Activation::Selu, 22);
        grad_check(Activation::Elu, 23);
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        for (seed, act) in [(31, Activation::Selu), (32, Activation::Elu)] {
            let p = MlpParams::init(&[4, 6, 5, 1], act, &mut RngStream::new(seed).rng()).unwrap();
            let x = [0.4, -0.9, 1.3, 0.2];
            let analytic = p.input_gradient(&x).unwrap();
            let f = |v: &[f64]| p.forward(v).unwrap();
            let numeric = finite_diff_grad(&f, &x, 1e-5);
            for (&a, &fd) in analytic.iter().zip(&numeric) {
                let rel = (a - fd).abs() / fd.abs().max(a.abs()).max(1.0);
                assert!(rel < 1e-4, "analytic {a} vs fd {fd}");
            }
        }
    }

    #[test]
    fn sigmoid_is_stable_and_monotone() {
        assert_eq!(sigmoid(0.0), 0.5);
        let lo = sigmoid(-500.0);
        assert!(lo > 0.0 && lo < 1e-100);
        assert!(sigmoid(500.0) <= 1.0 && sigmoid(500.0) > 1.0 - 1e-15);
        assert!(sigmoid(1.0) > sigmoid(0.5));
    }
}
