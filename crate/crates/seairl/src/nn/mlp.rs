//! Feed-forward networks and exact backpropagation.
//!
//! A network is `(MlpSpec, Params)`: the spec fixes layer widths,
//! activation, and output head; the parameters are one flat vector laid
//! out layer by layer as `(out x in)` row-major weights followed by `out`
//! biases. `forward` records an evaluation tape; `backward` consumes the
//! tape once and returns exact gradients of `upstream . output` with
//! respect to the parameters and the input.

use rand::Rng;

use crate::{Error, Result};

/// Hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::format(format!("unknown activation `{other}`"))),
        }
    }
}

/// Output head applied to the final affine layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputHead {
    /// Raw affine output (logits, scalars, regression targets).
    Linear,
    /// Softmax of the final affine output; entries are strictly positive
    /// and sum to one.
    SoftmaxLogits,
    /// First half of the output is a mean vector, second half a log-std
    /// vector clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.
    GaussianMeanLogStd,
}

impl OutputHead {
    pub fn name(self) -> &'static str {
        match self {
            OutputHead::Linear => "linear",
            OutputHead::SoftmaxLogits => "softmax_logits",
            OutputHead::GaussianMeanLogStd => "gaussian_mean_logstd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(OutputHead::Linear),
            "softmax_logits" => Ok(OutputHead::SoftmaxLogits),
            "gaussian_mean_logstd" => Ok(OutputHead::GaussianMeanLogStd),
            other => Err(Error::format(format!("unknown output head `{other}`"))),
        }
    }
}

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Shape of a fully connected network, including input and output widths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    widths: Vec<usize>,
    activation: Activation,
    head: OutputHead,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, activation: Activation, head: OutputHead) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::config("MlpSpec needs at least input and output widths"));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::config("MlpSpec widths must all be >= 1"));
        }
        if head == OutputHead::GaussianMeanLogStd && widths.last().unwrap() % 2 != 0 {
            return Err(Error::config(
                "gaussian_mean_logstd head needs an even output width (mean and log-std halves)",
            ));
        }
        Ok(MlpSpec { widths, activation, head })
    }

    /// The default desk-scale shape: two tanh hidden layers of width 64.
    pub fn standard(input: usize, output: usize, head: OutputHead) -> Result<Self> {
        MlpSpec::new(vec![input, 64, 64, output], Activation::Tanh, head)
    }

    /// Same as [`MlpSpec::standard`] with explicit hidden widths.
    pub fn with_hidden(
        input: usize,
        hidden: &[usize],
        output: usize,
        head: OutputHead,
    ) -> Result<Self> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input);
        widths.extend_from_slice(hidden);
        widths.push(output);
        MlpSpec::new(widths, Activation::Tanh, head)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn head(&self) -> OutputHead {
        self.head
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn layer_count(&self) -> usize {
        self.widths.len() - 1
    }

    /// Total parameter count: sum over layers of `(in + 1) * out`.
    pub fn param_count(&self) -> usize {
        self.widths
            .windows(2)
            .map(|w| (w[0] + 1) * w[1])
            .sum()
    }

    /// `(weight_offset, bias_offset, fan_in, fan_out)` for layer `l`.
    fn layer_layout(&self, l: usize) -> (usize, usize, usize, usize) {
        let mut off = 0;
        for k in 0..l {
            off += (self.widths[k] + 1) * self.widths[k + 1];
        }
        let fan_in = self.widths[l];
        let fan_out = self.widths[l + 1];
        (off, off + fan_in * fan_out, fan_in, fan_out)
    }
}

/// Flat parameter vector for one [`MlpSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Params(Vec<f64>);

impl Params {
    /// Seeded init: weights uniform in +/- sqrt(6 / (fan_in + fan_out)),
    /// biases zero.
    pub fn init<R: Rng>(spec: &MlpSpec, rng: &mut R) -> Params {
        let mut values = vec![0.0; spec.param_count()];
        for l in 0..spec.layer_count() {
            let (w_off, _, fan_in, fan_out) = spec.layer_layout(l);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut values[w_off..w_off + fan_in * fan_out] {
                *w = rng.random_range(-limit..limit);
            }
        }
        Params(values)
    }

    pub fn zeros(spec: &MlpSpec) -> Params {
        Params(vec![0.0; spec.param_count()])
    }

    /// Wrap an existing vector, checking length and finiteness.
    pub fn from_values(spec: &MlpSpec, values: Vec<f64>) -> Result<Params> {
        if values.len() != spec.param_count() {
            return Err(Error::config(format!(
                "parameter vector has {} entries, spec wants {}",
                values.len(),
                spec.param_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("non-finite parameter at index {i}")));
        }
        Ok(Params(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone)]
enum HeadRecord {
    Linear,
    /// Softmax probabilities of the final affine output.
    Softmax(Vec<f64>),
    /// Which log-std entries were clamped (gradient is zero there).
    Gaussian(Vec<bool>),
}

/// Recorded activations of one forward pass, consumed exactly once by
/// [`MlpSpec::backward`] (the move enforces single use).
#[derive(Debug, Clone)]
pub struct Tape {
    input: Vec<f64>,
    /// Post-activation outputs of each hidden layer.
    hidden: Vec<Vec<f64>>,
    /// Pre-head output of the final affine layer.
    final_affine: Vec<f64>,
    head: HeadRecord,
}

impl MlpSpec {
    /// Forward pass recording a tape for [`MlpSpec::backward`].
    pub fn forward(&self, params: &Params, input: &[f64]) -> Result<(Vec<f64>, Tape)> {
        self.check_io(params, input)?;
        let layers = self.layer_count();
        let mut hidden = Vec::with_capacity(layers.saturating_sub(1));
        let mut h = input.to_vec();
        for l in 0..layers {
            let z = self.affine(params, l, &h);
            if l + 1 < layers {
                let act = self.activate(&z);
                hidden.push(act.clone());
                h = act;
            } else {
                h = z;
            }
        }
        let final_affine = h;
        let (output, head) = self.apply_head(&final_affine)?;
        Ok((
            output,
            Tape { input: input.to_vec(), hidden, final_affine, head },
        ))
    }

    /// Forward pass without a tape, for rollouts and evaluation.
    pub fn eval(&self, params: &Params, input: &[f64]) -> Result<Vec<f64>> {
        self.check_io(params, input)?;
        let layers = self.layer_count();
        let mut h = input.to_vec();
        for l in 0..layers {
            let z = self.affine(params, l, &h);
            h = if l + 1 < layers { self.activate(&z) } else { z };
        }
        let (output, _) = self.apply_head(&h)?;
        Ok(output)
    }

    /// Exact gradients of `upstream . output` with respect to parameters
    /// and input. Adds parameter gradients into `grad_buf` so batch losses
    /// can accumulate; returns input gradients.
    pub fn backward_into(
        &self,
        params: &Params,
        tape: Tape,
        upstream: &[f64],
        grad_buf: &mut [f64],
    ) -> Result<Vec<f64>> {
        if upstream.len() != self.output_width() {
            return Err(Error::config(format!(
                "upstream width {} does not match output width {}",
                upstream.len(),
                self.output_width()
            )));
        }
        if grad_buf.len() != self.param_count() {
            return Err(Error::config("gradient buffer length mismatch"));
        }

        // Head backward: gradient with respect to the final affine output.
        let mut gz: Vec<f64> = match &tape.head {
            HeadRecord::Linear => upstream.to_vec(),
            HeadRecord::Softmax(p) => {
                let dot: f64 = upstream.iter().zip(p).map(|(u, pi)| u * pi).sum();
                p.iter().zip(upstream).map(|(pi, u)| pi * (u - dot)).collect()
            }
            HeadRecord::Gaussian(clamped) => {
                let d = self.output_width() / 2;
                let mut g = upstream.to_vec();
                for (j, was_clamped) in clamped.iter().enumerate() {
                    if *was_clamped {
                        g[d + j] = 0.0;
                    }
                }
                g
            }
        };

        let layers = self.layer_count();
        for l in (0..layers).rev() {
            let (w_off, b_off, fan_in, fan_out) = self.layer_layout(l);
            let prev: &[f64] = if l == 0 { &tape.input } else { &tape.hidden[l - 1] };
            let w = &params.values()[w_off..w_off + fan_in * fan_out];

            let mut g_prev = vec![0.0; fan_in];
            for i in 0..fan_out {
                let gi = gz[i];
                grad_buf[b_off + i] += gi;
                let row = &w[i * fan_in..(i + 1) * fan_in];
                let grow = &mut grad_buf[w_off + i * fan_in..w_off + (i + 1) * fan_in];
                for j in 0..fan_in {
                    grow[j] += gi * prev[j];
                    g_prev[j] += row[j] * gi;
                }
            }

            if l > 0 {
                let h = &tape.hidden[l - 1];
                match self.activation {
                    Activation::Tanh => {
                        for j in 0..fan_in {
                            g_prev[j] *= 1.0 - h[j] * h[j];
                        }
                    }
                    Activation::Relu => {
                        for j in 0..fan_in {
                            if h[j] <= 0.0 {
                                g_prev[j] = 0.0;
                            }
                        }
                    }
                }
            }
            gz = g_prev;
        }
        Ok(gz)
    }

    /// Convenience wrapper returning fresh gradient vectors.
    pub fn backward(
        &self,
        params: &Params,
        tape: Tape,
        upstream: &[f64],
    ) -> Result<(Params, Vec<f64>)> {
        let mut grads = vec![0.0; self.param_count()];
        let input_grads = self.backward_into(params, tape, upstream, &mut grads)?;
        Ok((Params(grads), input_grads))
    }

    fn check_io(&self, params: &Params, input: &[f64]) -> Result<()> {
        if input.len() != self.input_width() {
            return Err(Error::config(format!(
                "input width {} does not match spec input width {}",
                input.len(),
                self.input_width()
            )));
        }
        if params.len() != self.param_count() {
            return Err(Error::config(format!(
                "parameter count {} does not match spec ({})",
                params.len(),
                self.param_count()
            )));
        }
        if let Some(i) = input.iter().position(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("non-finite input at index {i}")));
        }
        Ok(())
    }

    fn affine(&self, params: &Params, l: usize, h: &[f64]) -> Vec<f64> {
        let (w_off, b_off, fan_in, fan_out) = self.layer_layout(l);
        let v = params.values();
        let mut z = Vec::with_capacity(fan_out);
        for i in 0..fan_out {
            let row = &v[w_off + i * fan_in..w_off + (i + 1) * fan_in];
            let mut acc = v[b_off + i];
            for j in 0..fan_in {
                acc += row[j] * h[j];
            }
            z.push(acc);
        }
        z
    }

    fn activate(&self, z: &[f64]) -> Vec<f64> {
        match self.activation {
            Activation::Tanh => z.iter().map(|x| x.tanh()).collect(),
            Activation::Relu => z.iter().map(|x| x.max(0.0)).collect(),
        }
    }

    fn apply_head(&self, z: &[f64]) -> Result<(Vec<f64>, HeadRecord)> {
        let out = match self.head {
            OutputHead::Linear => (z.to_vec(), HeadRecord::Linear),
            OutputHead::SoftmaxLogits => {
                let p = super::heads::softmax(z);
                (p.clone(), HeadRecord::Softmax(p))
            }
            OutputHead::GaussianMeanLogStd => {
                let d = z.len() / 2;
                let mut out = z.to_vec();
                let mut clamped = vec![false; d];
                for j in 0..d {
                    let raw = z[d + j];
                    if raw < LOG_STD_MIN || raw > LOG_STD_MAX {
                        out[d + j] = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
                        clamped[j] = true;
                    }
                }
                (out, HeadRecord::Gaussian(clamped))
            }
        };
        if let Some(i) = out.0.iter().position(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("non-finite network output at index {i}")));
        }
        Ok(out)
    }
}

/// A spec paired with its parameters.
#[derive(Debug, Clone)]
pub struct Network {
    pub spec: MlpSpec,
    pub params: Params,
}

impl Network {
    pub fn init<R: Rng>(spec: MlpSpec, rng: &mut R) -> Network {
        let params = Params::init(&spec, rng);
        Network { spec, params }
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Tape)> {
        self.spec.forward(&self.params, input)
    }

    pub fn eval(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.spec.eval(&self.params, input)
    }

    pub fn backward_into(
        &self,
        tape: Tape,
        upstream: &[f64],
        grad_buf: &mut [f64],
    ) -> Result<Vec<f64>> {
        self.spec.backward_into(&self.params, tape, upstream, grad_buf)
    }

    pub fn grad_buffer(&self) -> Vec<f64> {
        vec![0.0; self.spec.param_count()]
    }
}
