use super::{init_uniform, Activation, NnError, Parameterized};
use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

/// Feed-forward stack of dense layers. Parameters are laid out per layer as
/// a row-major `inputs × outputs` weight block followed by `outputs` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    layers: Vec<LayerSpec>,
    params: Vec<f64>,
}

/// Activations cached by [`Net::forward_tape`]: the input followed by each
/// layer's output.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    activations: Vec<Array2<f64>>,
}

impl Tape {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("empty tape")
    }

    pub fn input(&self) -> &Array2<f64> {
        &self.activations[0]
    }
}

#[derive(Debug, Clone)]
pub struct Backward {
    /// Flat gradient aligned with [`Net::params`].
    pub grads: Vec<f64>,
    /// Gradient with respect to the batch input.
    pub input_grad: Array2<f64>,
}

impl Net {
    pub fn new(layers: Vec<LayerSpec>, rng: &mut impl Rng) -> Result<Self, NnError> {
        Self::check_chain(&layers)?;
        let mut params = vec![0.0; Self::count(&layers)];
        let mut off = 0;
        for l in &layers {
            let n = l.inputs * l.outputs + l.outputs;
            init_uniform(&mut params[off..off + n], l.inputs, rng);
            off += n;
        }
        Ok(Self { layers, params })
    }

    /// Dense stack through `sizes` with one activation for hidden layers and
    /// another for the output layer.
    pub fn mlp(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                inputs: w[0],
                outputs: w[1],
                activation: if i + 2 == sizes.len() { output } else { hidden },
            })
            .collect();
        Self::new(layers, rng).expect("sizes chain by construction")
    }

    pub fn from_params(layers: Vec<LayerSpec>, params: Vec<f64>) -> Result<Self, NnError> {
        Self::check_chain(&layers)?;
        let expected = Self::count(&layers);
        if params.len() != expected {
            return Err(NnError::Shape {
                expected,
                got: params.len(),
            });
        }
        Ok(Self { layers, params })
    }

    fn check_chain(layers: &[LayerSpec]) -> Result<(), NnError> {
        if layers.is_empty() {
            return Err(NnError::LayerChain(0));
        }
        for i in 1..layers.len() {
            if layers[i].inputs != layers[i - 1].outputs {
                return Err(NnError::LayerChain(i));
            }
        }
        Ok(())
    }

    fn count(layers: &[LayerSpec]) -> usize {
        layers.iter().map(|l| l.inputs * l.outputs + l.outputs).sum()
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    fn offset(&self, layer: usize) -> usize {
        self.layers[..layer]
            .iter()
            .map(|l| l.inputs * l.outputs + l.outputs)
            .sum()
    }

    fn weights(&self, off: usize, l: &LayerSpec) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((l.inputs, l.outputs), &self.params[off..off + l.inputs * l.outputs])
            .expect("weight block shape")
    }

    fn bias(&self, off: usize, l: &LayerSpec) -> ArrayView1<'_, f64> {
        let b = off + l.inputs * l.outputs;
        ArrayView1::from(&self.params[b..b + l.outputs])
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        Ok(self.forward_batch(view)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>, NnError> {
        self.check_input(x.ncols())?;
        let mut a = x.to_owned();
        let mut off = 0;
        for l in &self.layers {
            a = self.layer_forward(a.view(), off, l);
            off += l.inputs * l.outputs + l.outputs;
        }
        Ok(a)
    }

    pub fn forward_tape(&self, x: ArrayView2<'_, f64>) -> Result<Tape, NnError> {
        self.check_input(x.ncols())?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        let mut off = 0;
        for l in &self.layers {
            let next = self.layer_forward(activations.last().unwrap().view(), off, l);
            activations.push(next);
            off += l.inputs * l.outputs + l.outputs;
        }
        Ok(Tape { activations })
    }

    fn check_input(&self, got: usize) -> Result<(), NnError> {
        if got != self.input_dim() {
            return Err(NnError::Shape {
                expected: self.input_dim(),
                got,
            });
        }
        Ok(())
    }

    fn layer_forward(&self, x: ArrayView2<'_, f64>, off: usize, l: &LayerSpec) -> Array2<f64> {
        let mut z = x.dot(&self.weights(off, l));
        z += &self.bias(off, l);
        let act = l.activation;
        if act != Activation::Linear {
            z.mapv_inplace(|v| act.apply(v));
        }
        z
    }

    /// Reverse-mode pass for a loss whose gradient with respect to the
    /// network output is `dy`.
    pub fn backward(&self, tape: &Tape, dy: ArrayView2<'_, f64>) -> Result<Backward, NnError> {
        if tape.activations.len() != self.layers.len() + 1 {
            return Err(NnError::NoForward);
        }
        let out = tape.output();
        if dy.dim() != out.dim() {
            return Err(NnError::Shape {
                expected: out.len(),
                got: dy.len(),
            });
        }
        let mut grads = vec![0.0; self.params.len()];
        let mut delta = dy.to_owned();
        for i in (0..self.layers.len()).rev() {
            let l = &self.layers[i];
            let off = self.offset(i);
            let y = &tape.activations[i + 1];
            if l.activation != Activation::Linear {
                let act = l.activation;
                delta.zip_mut_with(y, |d, &yv| *d *= act.derivative_from_output(yv));
            }
            let x = &tape.activations[i];
            let dw = x.t().dot(&delta);
            let nw = l.inputs * l.outputs;
            for (g, v) in grads[off..off + nw].iter_mut().zip(dw.iter()) {
                *g = *v;
            }
            let db = delta.sum_axis(Axis(0));
            for (g, v) in grads[off + nw..off + nw + l.outputs].iter_mut().zip(db.iter()) {
                *g = *v;
            }
            delta = delta.dot(&self.weights(off, l).t());
        }
        Ok(Backward {
            grads,
            input_grad: delta,
        })
    }
}

impl Parameterized for Net {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }
}
