use super::vae::{LatentState, LOGVAR_MAX, LOGVAR_MIN};
use super::window::{feature_dim, PerceptionWindow, WINDOW};
use super::PerceptionError;
use crate::nn::{Activation, Adam, Checkpoint, GruCell, LayerSpec, Net, NnError, Parameterized};
use ndarray::{s, Array2, Array3, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSpec {
    pub latent: usize,
    pub hidden: usize,
    pub pose_hidden: usize,
}

/// Next-step predictor: two stacked recurrent layers over the window, a
/// Gaussian head for the next latent and a two-layer head for the next
/// human pose. Both heads predict residuals on the newest window entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    spec: PredictorSpec,
    gru1: GruCell,
    gru2: GruCell,
    latent_head: Net,
    pose_head: Net,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub latent: LatentState,
    pub d_h: f64,
    pub dalpha_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorLoss {
    pub total: f64,
    pub latent_mse: f64,
    pub pose_mse: f64,
}

/// Windows stacked as `N × WINDOW × features`, with next-step targets.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub x: Array3<f64>,
    pub target_latent: Array2<f64>,
    pub target_pose: Array2<f64>,
    /// Windows drawn from episodes with a moving, visible human.
    pub dynamic: Vec<bool>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.x.len_of(Axis(0))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> WindowSet {
        WindowSet {
            x: self.x.select(Axis(0), idx),
            target_latent: self.target_latent.select(Axis(0), idx),
            target_pose: self.target_pose.select(Axis(0), idx),
            dynamic: idx.iter().map(|&i| self.dynamic[i]).collect(),
        }
    }

    fn steps(&self) -> Vec<Array2<f64>> {
        (0..WINDOW).map(|t| self.x.index_axis(Axis(1), t).to_owned()).collect()
    }
}

fn head_layers(spec: &PredictorSpec) -> (Vec<LayerSpec>, Vec<LayerSpec>) {
    (
        vec![LayerSpec {
            inputs: spec.hidden,
            outputs: 2 * spec.latent,
            activation: Activation::Linear,
        }],
        vec![
            LayerSpec {
                inputs: spec.hidden,
                outputs: spec.pose_hidden,
                activation: Activation::Relu,
            },
            LayerSpec {
                inputs: spec.pose_hidden,
                outputs: 2,
                activation: Activation::Linear,
            },
        ],
    )
}

struct Forward {
    tape1: crate::nn::GruTape,
    tape2: crate::nn::GruTape,
    latent_tape: crate::nn::Tape,
    pose_tape: crate::nn::Tape,
    raw_lv: Array2<f64>,
    sigma: Array2<f64>,
    z: Array2<f64>,
    pose: Array2<f64>,
}

impl Predictor {
    pub fn new(spec: PredictorSpec, rng: &mut impl Rng) -> Self {
        let (lh, ph) = head_layers(&spec);
        let mut latent_head = Net::new(lh, rng).unwrap();
        // start from "copy the last step": residual heads begin near zero
        for p in latent_head.params_mut() {
            *p *= 0.01;
        }
        let mut pose_head = Net::new(ph, rng).unwrap();
        let n = pose_head.param_count();
        let last = spec.pose_hidden * 2 + 2;
        for p in &mut pose_head.params_mut()[n - last..] {
            *p *= 0.01;
        }
        Self {
            gru1: GruCell::new(feature_dim(spec.latent), spec.hidden, rng),
            gru2: GruCell::new(spec.hidden, spec.hidden, rng),
            latent_head,
            pose_head,
            spec,
        }
    }

    pub fn spec(&self) -> &PredictorSpec {
        &self.spec
    }

    fn parts(&self) -> [&[f64]; 4] {
        [
            self.gru1.params(),
            self.gru2.params(),
            self.latent_head.params(),
            self.pose_head.params(),
        ]
    }

    fn parts_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.gru1.params_mut(),
            self.gru2.params_mut(),
            self.latent_head.params_mut(),
            self.pose_head.params_mut(),
        ]
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.parts().concat()
    }

    pub fn set_flat_params(&mut self, p: &[f64]) {
        let mut off = 0;
        for part in self.parts_mut() {
            let n = part.len();
            part.copy_from_slice(&p[off..off + n]);
            off += n;
        }
    }

    fn forward(&self, steps: &[Array2<f64>], eps: ArrayView2<'_, f64>) -> Result<Forward, NnError> {
        let l = self.spec.latent;
        let b = steps[0].nrows();
        let h0 = Array2::zeros((b, self.spec.hidden));
        let tape1 = self.gru1.forward_seq(steps, h0.view())?;
        let tape2 = self.gru2.forward_seq(tape1.outputs(), h0.view())?;
        let h = tape2.last().clone();
        let latent_tape = self.latent_head.forward_tape(h.view())?;
        let pose_tape = self.pose_head.forward_tape(h.view())?;
        let last = &steps[WINDOW - 1];
        let out = latent_tape.output();
        let mu = &last.slice(s![.., ..l]) + &out.slice(s![.., ..l]);
        let raw_lv = out.slice(s![.., l..]).to_owned();
        let sigma = raw_lv.mapv(|v| (0.5 * v.clamp(LOGVAR_MIN, LOGVAR_MAX)).exp());
        let z = &mu + &(&sigma * &eps);
        let pose = &last.slice(s![.., l + 1..l + 3]) + pose_tape.output();
        Ok(Forward {
            tape1,
            tape2,
            latent_tape,
            pose_tape,
            raw_lv,
            sigma,
            z,
            pose,
        })
    }

    /// Predicts the step after the newest window entry. `eps` draws the
    /// latent sample; the mean is unaffected by it.
    pub fn predict(&self, window: &PerceptionWindow, eps: Vec<f64>) -> Result<Prediction, PerceptionError> {
        if !window.is_warm() {
            return Err(PerceptionError::ColdWindow);
        }
        let steps: Vec<Array2<f64>> = window
            .entries()
            .map(|e| Array2::from_shape_vec((1, feature_dim(self.spec.latent)), e.features()).unwrap())
            .collect();
        let eps_view = Array2::from_shape_vec((1, self.spec.latent), eps.clone()).map_err(|_| NnError::Shape {
            expected: self.spec.latent,
            got: eps.len(),
        })?;
        let f = self.forward(&steps, eps_view.view())?;
        let l = self.spec.latent;
        let mu: Vec<f64> = (&f.z - &(&f.sigma * &eps_view)).row(0).to_vec();
        let lv: Vec<f64> = f.raw_lv.row(0).iter().map(|v| v.clamp(LOGVAR_MIN, LOGVAR_MAX)).collect();
        debug_assert_eq!(mu.len(), l);
        Ok(Prediction {
            latent: LatentState::from_moments(mu, &lv, eps),
            d_h: f.pose[[0, 0]],
            dalpha_h: f.pose[[0, 1]],
        })
    }

    /// Batch-mean `MSE(sampled latent, target) + MSE(pose, target)` and its
    /// gradient with respect to [`Predictor::flat_params`].
    pub fn loss_and_grad(&self, set: &WindowSet, eps: ArrayView2<'_, f64>) -> Result<(PredictorLoss, Vec<f64>), NnError> {
        let steps = set.steps();
        let f = self.forward(&steps, eps)?;
        let b = set.len() as f64;
        let l = self.spec.latent;
        let dl = &f.z - &set.target_latent;
        let dp = &f.pose - &set.target_pose;
        let latent_mse = dl.mapv(|v| v * v).sum() / (l as f64 * b);
        let pose_mse = dp.mapv(|v| v * v).sum() / (2.0 * b);

        let dz = dl * (2.0 / (l as f64 * b));
        let mut dlv = &dz * &eps * &f.sigma * 0.5;
        dlv.zip_mut_with(&f.raw_lv, |g, &raw| {
            if !(LOGVAR_MIN..=LOGVAR_MAX).contains(&raw) {
                *g = 0.0;
            }
        });
        let d_head = ndarray::concatenate(Axis(1), &[dz.view(), dlv.view()]).unwrap();
        let lat_bw = self.latent_head.backward(&f.latent_tape, d_head.view())?;
        let pose_bw = self.pose_head.backward(&f.pose_tape, (dp * (1.0 / b)).view())?;
        let dh = lat_bw.input_grad + pose_bw.input_grad;
        let mut d_out2 = vec![Array2::zeros(dh.dim()); WINDOW];
        d_out2[WINDOW - 1] = dh;
        let (g2, dx2) = self.gru2.backward_seq(&f.tape2, &d_out2)?;
        let (g1, _) = self.gru1.backward_seq(&f.tape1, &dx2)?;
        let grads = [g1, g2, lat_bw.grads, pose_bw.grads].concat();
        Ok((
            PredictorLoss {
                total: latent_mse + pose_mse,
                latent_mse,
                pose_mse,
            },
            grads,
        ))
    }

    /// Loss with the latent taken at its predicted mean.
    pub fn evaluate(&self, set: &WindowSet) -> Result<PredictorLoss, NnError> {
        let eps = Array2::zeros((set.len(), self.spec.latent));
        Ok(self.loss_and_grad(set, eps.view())?.0)
    }

    pub fn to_checkpoint(&self, seed: u64, train_steps: u64) -> Checkpoint {
        let mut ck = Checkpoint::new("predictor", seed, train_steps, serde_json::to_value(&self.spec).unwrap());
        ck.push_gru("gru1", &self.gru1);
        ck.push_gru("gru2", &self.gru2);
        ck.push_net("latent_head", &self.latent_head);
        ck.push_net("pose_head", &self.pose_head);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, NnError> {
        ck.expect_kind("predictor")?;
        let spec: PredictorSpec =
            serde_json::from_value(ck.manifest.config.clone()).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        let (lh, ph) = head_layers(&spec);
        Ok(Self {
            gru1: ck.gru("gru1", feature_dim(spec.latent), spec.hidden)?,
            gru2: ck.gru("gru2", spec.hidden, spec.hidden)?,
            latent_head: ck.net("latent_head", &lh)?,
            pose_head: ck.net("pose_head", &ph)?,
            spec,
        })
    }
}

/// Loss of predicting that nothing changes: next latent and pose equal the
/// newest window entry.
pub fn copy_last_loss(set: &WindowSet, latent: usize) -> PredictorLoss {
    let last = set.x.index_axis(Axis(1), WINDOW - 1);
    let b = set.len() as f64;
    let dl = &last.slice(s![.., ..latent]) - &set.target_latent;
    let dp = &last.slice(s![.., latent + 1..latent + 3]) - &set.target_pose;
    let latent_mse = dl.mapv(|v| v * v).sum() / (latent as f64 * b);
    let pose_mse = dp.mapv(|v| v * v).sum() / (2.0 * b);
    PredictorLoss {
        total: latent_mse + pose_mse,
        latent_mse,
        pose_mse,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorTrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
}

impl Default for PredictorTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 15,
            batch: 64,
            lr: 1e-3,
        }
    }
}

/// Minibatch Adam over the window set; returns per-epoch mean losses.
pub fn train_predictor(
    model: &mut Predictor,
    set: &WindowSet,
    cfg: &PredictorTrainConfig,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, NnError> {
    let sizes: Vec<usize> = model.parts().iter().map(|p| p.len()).collect();
    let mut opts: Vec<Adam> = sizes.iter().map(|&n| Adam::new(n, cfg.lr)).collect();
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch.max(1)) {
            let batch = set.select(chunk);
            let eps = Array2::from_shape_fn((chunk.len(), model.spec.latent), |_| rng.sample::<f64, _>(StandardNormal));
            let (loss, grads) = model.loss_and_grad(&batch, eps.view())?;
            let mut off = 0;
            for (part, opt) in model.parts_mut().into_iter().zip(&mut opts) {
                let n = part.len();
                opt.step(part, &grads[off..off + n])?;
                off += n;
            }
            total += loss.total;
            batches += 1;
        }
        history.push(total / batches.max(1) as f64);
    }
    Ok(history)
}
