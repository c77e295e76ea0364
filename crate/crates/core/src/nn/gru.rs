use super::{init_uniform, sigmoid, NnError, Parameterized};
use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Single gated recurrent layer processed over batched sequences.
///
/// Gates are ordered `[update z | reset r | candidate n]`:
/// `z = σ(xW_z + hU_z + b_z)`, `r = σ(xW_r + hU_r + b_r)`,
/// `n = tanh(xW_n + (r⊙h)U_n + b_n)`, `h' = (1 − z)⊙h + z⊙n`.
/// Parameters are `W (input × 3H) | U (H × 3H) | b (3H)`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruCell {
    input: usize,
    hidden: usize,
    params: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct GruTape {
    xs: Vec<Array2<f64>>,
    hs: Vec<Array2<f64>>,
    z: Vec<Array2<f64>>,
    r: Vec<Array2<f64>>,
    n: Vec<Array2<f64>>,
}

impl GruTape {
    /// Hidden states `h_1..h_T`, one `batch × H` array per step.
    pub fn outputs(&self) -> &[Array2<f64>] {
        &self.hs[1..]
    }

    pub fn last(&self) -> &Array2<f64> {
        self.hs.last().expect("tape has the initial state")
    }
}

impl GruCell {
    pub fn new(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut params = vec![0.0; Self::count(input, hidden)];
        init_uniform(&mut params, hidden, rng);
        Self { input, hidden, params }
    }

    pub fn from_params(input: usize, hidden: usize, params: Vec<f64>) -> Result<Self, NnError> {
        let expected = Self::count(input, hidden);
        if params.len() != expected {
            return Err(NnError::Shape {
                expected,
                got: params.len(),
            });
        }
        Ok(Self { input, hidden, params })
    }

    fn count(input: usize, hidden: usize) -> usize {
        3 * hidden * (input + hidden + 1)
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    fn w(&self) -> ArrayView2<'_, f64> {
        let n = self.input * 3 * self.hidden;
        ArrayView2::from_shape((self.input, 3 * self.hidden), &self.params[..n]).unwrap()
    }

    fn u(&self) -> ArrayView2<'_, f64> {
        let a = self.input * 3 * self.hidden;
        let n = self.hidden * 3 * self.hidden;
        ArrayView2::from_shape((self.hidden, 3 * self.hidden), &self.params[a..a + n]).unwrap()
    }

    fn bias_offset(&self) -> usize {
        (self.input + self.hidden) * 3 * self.hidden
    }

    /// One step for a single sample: returns `(output, h')`, which coincide
    /// for this cell.
    pub fn seq_step(&self, x: &[f64], h: &[f64]) -> Result<(Vec<f64>, Vec<f64>), NnError> {
        if x.len() != self.input {
            return Err(NnError::Shape {
                expected: self.input,
                got: x.len(),
            });
        }
        if h.len() != self.hidden {
            return Err(NnError::Shape {
                expected: self.hidden,
                got: h.len(),
            });
        }
        let xv = ArrayView2::from_shape((1, self.input), x).unwrap();
        let hv = ArrayView2::from_shape((1, self.hidden), h).unwrap();
        let (hn, ..) = self.step_batch(xv, hv);
        let h = hn.into_raw_vec_and_offset().0;
        Ok((h.clone(), h))
    }

    fn step_batch(
        &self,
        x: ArrayView2<'_, f64>,
        h: ArrayView2<'_, f64>,
    ) -> (Array2<f64>, Array2<f64>, Array2<f64>, Array2<f64>) {
        let hd = self.hidden;
        let b = &self.params[self.bias_offset()..];
        let mut a = x.dot(&self.w());
        for mut row in a.rows_mut() {
            for (v, bi) in row.iter_mut().zip(b) {
                *v += bi;
            }
        }
        let u = self.u();
        let hu = h.dot(&u.slice(s![.., ..2 * hd]));
        let z = Array2::from_shape_fn((x.nrows(), hd), |(i, j)| sigmoid(a[[i, j]] + hu[[i, j]]));
        let r = Array2::from_shape_fn((x.nrows(), hd), |(i, j)| {
            sigmoid(a[[i, hd + j]] + hu[[i, hd + j]])
        });
        let rh = &r * &h;
        let rhu = rh.dot(&u.slice(s![.., 2 * hd..]));
        let n = Array2::from_shape_fn((x.nrows(), hd), |(i, j)| (a[[i, 2 * hd + j]] + rhu[[i, j]]).tanh());
        let hn = Array2::from_shape_fn((x.nrows(), hd), |(i, j)| {
            (1.0 - z[[i, j]]) * h[[i, j]] + z[[i, j]] * n[[i, j]]
        });
        (hn, z, r, n)
    }

    /// Runs a batch of sequences; `xs[t]` is `batch × input`.
    pub fn forward_seq(&self, xs: &[Array2<f64>], h0: ArrayView2<'_, f64>) -> Result<GruTape, NnError> {
        let mut tape = GruTape {
            hs: vec![h0.to_owned()],
            ..Default::default()
        };
        for x in xs {
            if x.ncols() != self.input {
                return Err(NnError::Shape {
                    expected: self.input,
                    got: x.ncols(),
                });
            }
            let (hn, z, r, n) = self.step_batch(x.view(), tape.hs.last().unwrap().view());
            tape.xs.push(x.clone());
            tape.hs.push(hn);
            tape.z.push(z);
            tape.r.push(r);
            tape.n.push(n);
        }
        Ok(tape)
    }

    /// Backpropagation through time. `d_out[t]` is the loss gradient with
    /// respect to `h_{t+1}` (zeros where the output is unused). Returns the
    /// flat parameter gradient and the gradient for every input step.
    pub fn backward_seq(
        &self,
        tape: &GruTape,
        d_out: &[Array2<f64>],
    ) -> Result<(Vec<f64>, Vec<Array2<f64>>), NnError> {
        let steps = tape.xs.len();
        if steps == 0 {
            return Err(NnError::NoForward);
        }
        if d_out.len() != steps {
            return Err(NnError::Shape {
                expected: steps,
                got: d_out.len(),
            });
        }
        let hd = self.hidden;
        let batch = tape.hs[0].nrows();
        let w = self.w();
        let u = self.u();
        let mut dw = Array2::<f64>::zeros((self.input, 3 * hd));
        let mut du = Array2::<f64>::zeros((hd, 3 * hd));
        let mut db = ndarray::Array1::<f64>::zeros(3 * hd);
        let mut dxs = vec![Array2::zeros((batch, self.input)); steps];
        let mut dh_next = Array2::<f64>::zeros((batch, hd));
        for t in (0..steps).rev() {
            let dh = &d_out[t] + &dh_next;
            let (z, r, n, h) = (&tape.z[t], &tape.r[t], &tape.n[t], &tape.hs[t]);
            let mut da = Array2::<f64>::zeros((batch, 3 * hd));
            let mut dh_prev = Array2::<f64>::zeros((batch, hd));
            for i in 0..batch {
                for j in 0..hd {
                    let g = dh[[i, j]];
                    let zz = z[[i, j]];
                    let nn = n[[i, j]];
                    da[[i, j]] = g * (nn - h[[i, j]]) * zz * (1.0 - zz);
                    da[[i, 2 * hd + j]] = g * zz * (1.0 - nn * nn);
                    dh_prev[[i, j]] = g * (1.0 - zz);
                }
            }
            let da_n = da.slice(s![.., 2 * hd..]).to_owned();
            let rh = r * h;
            du.slice_mut(s![.., 2 * hd..]).scaled_add(1.0, &rh.t().dot(&da_n));
            let d_rh = da_n.dot(&u.slice(s![.., 2 * hd..]).t());
            for i in 0..batch {
                for j in 0..hd {
                    let rr = r[[i, j]];
                    da[[i, hd + j]] = d_rh[[i, j]] * h[[i, j]] * rr * (1.0 - rr);
                    dh_prev[[i, j]] += d_rh[[i, j]] * rr;
                }
            }
            let da_zr = da.slice(s![.., ..2 * hd]);
            du.slice_mut(s![.., ..2 * hd]).scaled_add(1.0, &h.t().dot(&da_zr));
            dh_prev += &da_zr.dot(&u.slice(s![.., ..2 * hd]).t());
            dw += &tape.xs[t].t().dot(&da);
            db += &da.sum_axis(Axis(0));
            dxs[t] = da.dot(&w.t());
            dh_next = dh_prev;
        }
        let mut grads = Vec::with_capacity(self.params.len());
        grads.extend(dw.iter());
        grads.extend(du.iter());
        grads.extend(db.iter());
        Ok((grads, dxs))
    }
}

impl Parameterized for GruCell {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }
}
