use super::scan::corrupt_in_place;
use crate::nn::{Activation, Adam, Checkpoint, LayerSpec, Net, NnError, Parameterized};
use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub const LOGVAR_MIN: f64 = -10.0;
pub const LOGVAR_MAX: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sample: Vec<f64>,
    /// Standard-normal draw used for `sample`.
    pub eps: Vec<f64>,
}

impl LatentState {
    pub fn from_moments(mu: Vec<f64>, logvar: &[f64], eps: Vec<f64>) -> Self {
        let sigma: Vec<f64> = logvar.iter().map(|lv| (0.5 * lv).exp()).collect();
        let sample = mu.iter().zip(&sigma).zip(&eps).map(|((m, s), e)| m + s * e).collect();
        Self { mu, sigma, sample, eps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaeLoss {
    pub total: f64,
    /// Unweighted mean squared reconstruction error.
    pub mse: f64,
    pub kl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeSpec {
    pub rays: usize,
    pub latent: usize,
    pub hidden: Vec<usize>,
    pub beta: f64,
    pub recon_weight: f64,
}

/// β-VAE over depth scans: a dense encoder emitting `[μ | log σ²]` and a
/// mirrored decoder with a sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct Vae {
    spec: VaeSpec,
    encoder: Net,
    decoder: Net,
}

fn clamp_logvar(lv: f64) -> f64 {
    lv.clamp(LOGVAR_MIN, LOGVAR_MAX)
}

/// Closed-form `KL(N(μ, σ²) ‖ N(0, I))` summed over dimensions.
pub fn gaussian_kl(mu: &[f64], logvar: &[f64]) -> f64 {
    mu.iter()
        .zip(logvar)
        .map(|(m, lv)| 0.5 * (m * m + lv.exp() - 1.0 - lv))
        .sum()
}

/// `recon_weight · MSE(recon, clean) + β · KL` for one sample.
pub fn vae_loss_value(recon: &[f64], clean: &[f64], mu: &[f64], logvar: &[f64], beta: f64, recon_weight: f64) -> VaeLoss {
    let mse = recon.iter().zip(clean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / clean.len() as f64;
    let lv: Vec<f64> = logvar.iter().map(|&v| clamp_logvar(v)).collect();
    let kl = gaussian_kl(mu, &lv);
    VaeLoss {
        total: recon_weight * mse + beta * kl,
        mse,
        kl,
    }
}

impl Vae {
    pub fn new(spec: VaeSpec, rng: &mut impl Rng) -> Self {
        let (enc, dec) = Self::layer_specs(&spec);
        Self {
            encoder: Net::new(enc, rng).expect("encoder layers chain"),
            decoder: Net::new(dec, rng).expect("decoder layers chain"),
            spec,
        }
    }

    fn layer_specs(spec: &VaeSpec) -> (Vec<LayerSpec>, Vec<LayerSpec>) {
        let chain = |sizes: Vec<usize>, out: Activation| -> Vec<LayerSpec> {
            sizes
                .windows(2)
                .enumerate()
                .map(|(i, w)| LayerSpec {
                    inputs: w[0],
                    outputs: w[1],
                    activation: if i + 2 == sizes.len() { out } else { Activation::Relu },
                })
                .collect()
        };
        let mut enc = vec![spec.rays];
        enc.extend(&spec.hidden);
        enc.push(2 * spec.latent);
        let mut dec = vec![spec.latent];
        dec.extend(spec.hidden.iter().rev());
        dec.push(spec.rays);
        (chain(enc, Activation::Linear), chain(dec, Activation::Sigmoid))
    }

    pub fn spec(&self) -> &VaeSpec {
        &self.spec
    }

    pub fn latent_dim(&self) -> usize {
        self.spec.latent
    }

    pub fn rays(&self) -> usize {
        self.spec.rays
    }

    /// `(μ, clamped log σ²)`.
    pub fn encode_moments(&self, scan: &[f64]) -> Result<(Vec<f64>, Vec<f64>), NnError> {
        let out = self.encoder.forward(scan)?;
        let l = self.spec.latent;
        Ok((out[..l].to_vec(), out[l..].iter().map(|&v| clamp_logvar(v)).collect()))
    }

    pub fn encode(&self, scan: &[f64], eps: Vec<f64>) -> Result<LatentState, NnError> {
        if eps.len() != self.spec.latent {
            return Err(NnError::Shape {
                expected: self.spec.latent,
                got: eps.len(),
            });
        }
        let (mu, lv) = self.encode_moments(scan)?;
        Ok(LatentState::from_moments(mu, &lv, eps))
    }

    pub fn encode_mean(&self, scan: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(self.encode_moments(scan)?.0)
    }

    pub fn decode(&self, latent: &[f64]) -> Result<Vec<f64>, NnError> {
        self.decoder.forward(latent)
    }

    /// Row-wise posterior means.
    pub fn encode_batch(&self, scans: ArrayView2<'_, f64>) -> Result<Array2<f64>, NnError> {
        let out = self.encoder.forward_batch(scans)?;
        Ok(out.slice(s![.., ..self.spec.latent]).to_owned())
    }

    /// Mean squared error of decode(μ(input)) against `clean`.
    pub fn reconstruction_mse(&self, clean: ArrayView2<'_, f64>, input: ArrayView2<'_, f64>) -> Result<f64, NnError> {
        let mu = self.encode_batch(input)?;
        let recon = self.decoder.forward_batch(mu.view())?;
        Ok((&recon - &clean).mapv(|v| v * v).mean().unwrap_or(0.0))
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.decoder.param_count()
    }

    /// Encoder then decoder parameters.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut p = self.encoder.params().to_vec();
        p.extend_from_slice(self.decoder.params());
        p
    }

    pub fn set_flat_params(&mut self, p: &[f64]) {
        let n = self.encoder.param_count();
        self.encoder.params_mut().copy_from_slice(&p[..n]);
        self.decoder.params_mut().copy_from_slice(&p[n..]);
    }

    /// Batch-mean loss and its gradient with respect to [`Vae::flat_params`].
    /// `eps` holds the reparameterization noise, one row per sample.
    pub fn loss_and_grad(
        &self,
        clean: ArrayView2<'_, f64>,
        corrupted: ArrayView2<'_, f64>,
        eps: ArrayView2<'_, f64>,
    ) -> Result<(VaeLoss, Vec<f64>), NnError> {
        let b = clean.nrows() as f64;
        let l = self.spec.latent;
        let (beta, w) = (self.spec.beta, self.spec.recon_weight);
        let enc_tape = self.encoder.forward_tape(corrupted)?;
        let enc_out = enc_tape.output();
        let mu = enc_out.slice(s![.., ..l]);
        let raw_lv = enc_out.slice(s![.., l..]);
        let lv = raw_lv.mapv(clamp_logvar);
        let sigma = lv.mapv(|v| (0.5 * v).exp());
        let z = &mu + &(&sigma * &eps);
        let dec_tape = self.decoder.forward_tape(z.view())?;
        let diff = dec_tape.output() - &clean;
        let mse = diff.mapv(|v| v * v).mean().unwrap_or(0.0);
        let kl = (mu.mapv(|m| m * m) + lv.mapv(f64::exp) - 1.0 - &lv).sum() * 0.5 / b;

        let dy = diff * (2.0 * w / (self.spec.rays as f64 * b));
        let dec_bw = self.decoder.backward(&dec_tape, dy.view())?;
        let dz = dec_bw.input_grad;
        let dmu = &dz + &(mu.to_owned() * (beta / b));
        let mut dlv = &dz * &eps * &sigma * 0.5 + lv.mapv(|v| v.exp() - 1.0) * (0.5 * beta / b);
        dlv.zip_mut_with(&raw_lv, |g, &raw| {
            if !(LOGVAR_MIN..=LOGVAR_MAX).contains(&raw) {
                *g = 0.0;
            }
        });
        let d_enc = concatenate(Axis(1), &[dmu.view(), dlv.view()]).expect("same rows");
        let enc_bw = self.encoder.backward(&enc_tape, d_enc.view())?;
        let mut grads = enc_bw.grads;
        grads.extend(dec_bw.grads);
        Ok((
            VaeLoss {
                total: w * mse + beta * kl,
                mse,
                kl,
            },
            grads,
        ))
    }

    pub fn to_checkpoint(&self, seed: u64, train_steps: u64) -> Checkpoint {
        let mut ck = Checkpoint::new("vae", seed, train_steps, serde_json::to_value(&self.spec).unwrap());
        ck.push_net("encoder", &self.encoder);
        ck.push_net("decoder", &self.decoder);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, NnError> {
        ck.expect_kind("vae")?;
        let spec: VaeSpec =
            serde_json::from_value(ck.manifest.config.clone()).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        let (enc, dec) = Self::layer_specs(&spec);
        Ok(Self {
            encoder: ck.net("encoder", &enc)?,
            decoder: ck.net("decoder", &dec)?,
            spec,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VaeTrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub dropout: f64,
}

impl Default for VaeTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch: 64,
            lr: 1e-3,
            dropout: 0.05,
        }
    }
}

/// Trains on corrupted copies of `scans` (one scan per row), reconstructing
/// the clean rows. Returns the mean training loss of every epoch.
pub fn train_vae(vae: &mut Vae, scans: ArrayView2<'_, f64>, cfg: &VaeTrainConfig, rng: &mut impl Rng) -> Result<Vec<f64>, NnError> {
    let n = scans.nrows();
    let l = vae.latent_dim();
    let mut enc_opt = Adam::new(vae.encoder.param_count(), cfg.lr);
    let mut dec_opt = Adam::new(vae.decoder.param_count(), cfg.lr);
    let split = vae.encoder.param_count();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch.max(1)) {
            let clean = scans.select(Axis(0), chunk);
            let mut noisy = clean.clone();
            for mut row in noisy.rows_mut() {
                corrupt_in_place(row.as_slice_mut().expect("owned rows are contiguous"), cfg.dropout, rng);
            }
            let eps = Array2::from_shape_fn((chunk.len(), l), |_| rng.sample::<f64, _>(StandardNormal));
            let (loss, grads) = vae.loss_and_grad(clean.view(), noisy.view(), eps.view())?;
            enc_opt.step(vae.encoder.params_mut(), &grads[..split])?;
            dec_opt.step(vae.decoder.params_mut(), &grads[split..])?;
            total += loss.total;
            batches += 1;
        }
        let mean = total / batches.max(1) as f64;
        log::debug!("vae epoch loss {mean:.5}");
        history.push(mean);
    }
    Ok(history)
}

/// MSE of predicting the training mean scan for every row of `test`.
pub fn mean_baseline_mse(train: ArrayView2<'_, f64>, test: ArrayView2<'_, f64>) -> f64 {
    let mean = train.mean_axis(Axis(0)).expect("non-empty training set");
    (&test - &mean).mapv(|v| v * v).mean().unwrap_or(0.0)
}
