use rand::Rng;

use crate::rng::Stream;

/// Fully connected tanh network with a linear output layer.
///
/// Parameters live in one flat buffer, layer by layer: row-major weights
/// (`out x in`) followed by biases.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

pub(crate) struct Forward {
    // activations[0] is the input; activations[l + 1] is the output of layer l.
    activations: Vec<Vec<f64>>,
}

impl Forward {
    pub(crate) fn output(&self) -> &[f64] {
        self.activations.last().expect("at least one layer")
    }
}

impl Mlp {
    pub(crate) fn zeros(sizes: Vec<usize>) -> Self {
        let n = param_count(&sizes);
        Mlp {
            sizes,
            params: vec![0.0; n],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub(crate) fn glorot(sizes: Vec<usize>, rng: &mut Stream) -> Self {
        let mut mlp = Mlp::zeros(sizes);
        let mut offset = 0;
        for l in 0..mlp.layers() {
            let (fan_in, fan_out) = (mlp.sizes[l], mlp.sizes[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut mlp.params[offset..offset + fan_in * fan_out] {
                *w = rng.random_range(-bound..bound);
            }
            offset += fan_in * fan_out + fan_out;
        }
        mlp
    }

    pub(crate) fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub(crate) fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub(crate) fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    /// Parameter slices of each layer as `[weights..., biases...]`.
    pub(crate) fn layer_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers());
        let mut offset = 0;
        for l in 0..self.layers() {
            let len = self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
            out.push(&self.params[offset..offset + len]);
            offset += len;
        }
        out
    }

    pub(crate) fn from_layer_slices(sizes: Vec<usize>, layers: &[Vec<f64>]) -> Option<Self> {
        if layers.len() != sizes.len() - 1 {
            return None;
        }
        let mut params = Vec::with_capacity(param_count(&sizes));
        for (l, layer) in layers.iter().enumerate() {
            if layer.len() != sizes[l] * sizes[l + 1] + sizes[l + 1] {
                return None;
            }
            params.extend_from_slice(layer);
        }
        Some(Mlp { sizes, params })
    }

    pub(crate) fn forward(&self, input: &[f64]) -> Forward {
        debug_assert_eq!(input.len(), self.input_dim());
        let mut activations = Vec::with_capacity(self.sizes.len());
        activations.push(input.to_vec());
        let mut offset = 0;
        for l in 0..self.layers() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let biases = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let prev = &activations[l];
            let last = l + 1 == self.layers();
            let next: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    let pre = biases[o] + row.iter().zip(prev).map(|(w, a)| w * a).sum::<f64>();
                    if last {
                        pre
                    } else {
                        pre.tanh()
                    }
                })
                .collect();
            activations.push(next);
            offset += n_in * n_out + n_out;
        }
        Forward { activations }
    }

    /// Accumulates parameter gradients into `grad` given the gradient of the
    /// loss with respect to the network output; returns the input gradient.
    pub(crate) fn backward(&self, fwd: &Forward, grad_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        debug_assert_eq!(grad.len(), self.params.len());
        let offsets = self.layer_offsets();
        let mut delta = grad_out.to_vec();
        for l in (0..self.layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let offset = offsets[l];
            let prev = &fwd.activations[l];
            let weights = &self.params[offset..offset + n_in * n_out];
            {
                let (gw, gb) = grad[offset..offset + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for o in 0..n_out {
                    let d = delta[o];
                    gb[o] += d;
                    for (g, a) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(prev) {
                        *g += d * a;
                    }
                }
            }
            let mut grad_prev = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                for (gp, w) in grad_prev.iter_mut().zip(&weights[o * n_in..(o + 1) * n_in]) {
                    *gp += w * d;
                }
            }
            if l > 0 {
                // prev is a tanh activation
                for (gp, a) in grad_prev.iter_mut().zip(prev) {
                    *gp *= 1.0 - a * a;
                }
            }
            delta = grad_prev;
        }
        delta
    }

    fn layer_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.layers());
        let mut offset = 0;
        for l in 0..self.layers() {
            offsets.push(offset);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        offsets
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}
