use super::{Batch, LearnError, Td3Config};
use crate::nn::{Activation, Adam, Checkpoint, Net, Parameterized};
use crate::sim::Action;
use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// How the behavioral-cloning loss aggregates over the demo batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcReduction {
    /// `Σ_i ‖π(s_i) − a_i‖²`
    #[default]
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CriticStats {
    pub loss1: f64,
    pub loss2: f64,
    pub q_mean: f64,
    pub q_max_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorGradients {
    /// Gradient of `J = mean Q₁(s, π(s))` over the experience batch.
    pub rl: Vec<f64>,
    /// Gradient of the cloning loss over the demo batch; zeros when absent.
    pub bc: Vec<f64>,
    /// Descent direction `−(λ_RL·rl − λ_BC·bc)`.
    pub combined: Vec<f64>,
    pub j: f64,
    pub bc_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActorStats {
    pub actor_loss: f64,
    pub bc_loss: f64,
    pub rl_grad_norm: f64,
    pub bc_grad_norm: f64,
}

/// Actor, twin critics, their target copies and optimizer states.
#[derive(Debug, Clone)]
pub struct PolicyBundle {
    cfg: Td3Config,
    state_dim: usize,
    pub actor: Net,
    pub critic1: Net,
    pub critic2: Net,
    pub actor_target: Net,
    pub critic1_target: Net,
    pub critic2_target: Net,
    opt_actor: Adam,
    opt_critic1: Adam,
    opt_critic2: Adam,
    critic_updates: u64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl PolicyBundle {
    pub fn new(state_dim: usize, cfg: Td3Config, rng: &mut impl Rng) -> Self {
        let mut actor_sizes = vec![state_dim];
        actor_sizes.extend(&cfg.hidden);
        actor_sizes.push(2);
        let mut critic_sizes = vec![state_dim + 2];
        critic_sizes.extend(&cfg.hidden);
        critic_sizes.push(1);
        let actor = Net::mlp(&actor_sizes, Activation::Relu, Activation::Tanh, rng);
        let critic1 = Net::mlp(&critic_sizes, Activation::Relu, Activation::Linear, rng);
        let critic2 = Net::mlp(&critic_sizes, Activation::Relu, Activation::Linear, rng);
        Self::assemble(cfg, state_dim, actor, critic1, critic2, None)
    }

    fn assemble(cfg: Td3Config, state_dim: usize, actor: Net, critic1: Net, critic2: Net, targets: Option<[Net; 3]>) -> Self {
        let [actor_target, critic1_target, critic2_target] =
            targets.unwrap_or_else(|| [actor.clone(), critic1.clone(), critic2.clone()]);
        Self {
            opt_actor: Adam::new(actor.param_count(), cfg.lr_actor),
            opt_critic1: Adam::new(critic1.param_count(), cfg.lr_critic),
            opt_critic2: Adam::new(critic2.param_count(), cfg.lr_critic),
            cfg,
            state_dim,
            actor,
            critic1,
            critic2,
            actor_target,
            critic1_target,
            critic2_target,
            critic_updates: 0,
        }
    }

    pub fn config(&self) -> &Td3Config {
        &self.cfg
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn critic_updates(&self) -> u64 {
        self.critic_updates
    }

    /// Normalized actor output for one state.
    pub fn act_normalized(&self, s: &[f64]) -> Result<[f64; 2], LearnError> {
        let u = self.actor.forward(s)?;
        if !u.iter().all(|v| v.is_finite()) {
            return Err(crate::sim::SimError::PolicyDivergence.into());
        }
        Ok([u[0], u[1]])
    }

    /// Actor command for `s`; with `explore`, Gaussian noise of
    /// `sigma_explore` is added in normalized units before clamping.
    pub fn select_action(&self, s: &[f64], explore: bool, rng: &mut impl Rng) -> Result<Action, LearnError> {
        let mut u = self.act_normalized(s)?;
        if explore {
            let n = Normal::new(0.0, self.cfg.sigma_explore).expect("positive std");
            for v in &mut u {
                *v = (*v + n.sample(rng)).clamp(-1.0, 1.0);
            }
        }
        Ok(Action::from_normalized(u))
    }

    /// Clipped target-policy noise for a batch of `n`.
    pub fn target_noise(&self, n: usize, rng: &mut impl Rng) -> Array2<f64> {
        let d = Normal::new(0.0, self.cfg.sigma_target).expect("positive std");
        let c = self.cfg.noise_clip;
        Array2::from_shape_fn((n, 2), |_| d.sample(rng).clamp(-c, c))
    }

    fn q(net: &Net, s: ArrayView2<'_, f64>, a: ArrayView2<'_, f64>) -> Result<Array1<f64>, LearnError> {
        let x = concatenate![Axis(1), s, a];
        Ok(net.forward_batch(x.view())?.column(0).to_owned())
    }

    /// Bellman targets `r + γ(1 − done)·min(Q′₁, Q′₂)` at the smoothed
    /// target action. `noise` must already be clipped.
    pub fn bellman_targets(&self, b: &Batch, noise: ArrayView2<'_, f64>) -> Result<Array1<f64>, LearnError> {
        let mut a2 = self.actor_target.forward_batch(b.s_next.view())?;
        a2 += &noise;
        a2.mapv_inplace(|v| v.clamp(-1.0, 1.0));
        let q1 = Self::q(&self.critic1_target, b.s_next.view(), a2.view())?;
        let q2 = Self::q(&self.critic2_target, b.s_next.view(), a2.view())?;
        let min = ndarray::Zip::from(&q1).and(&q2).map_collect(|a, b| a.min(*b));
        Ok(&b.r + &((1.0 - &b.done) * self.cfg.gamma * min))
    }

    fn critic_step(net: &mut Net, opt: &mut Adam, x: ArrayView2<'_, f64>, y: &Array1<f64>) -> Result<(f64, f64, f64), LearnError> {
        let tape = net.forward_tape(x)?;
        let q = tape.output().column(0).to_owned();
        let n = q.len() as f64;
        let err = &q - y;
        let loss = err.mapv(|e| e * e).sum() / n;
        let dy = (err * (2.0 / n)).insert_axis(Axis(1));
        let back = net.backward(&tape, dy.view())?;
        opt.step(net.params_mut(), &back.grads)?;
        Ok((loss, q.mean().unwrap_or(0.0), q.iter().fold(0.0f64, |m, v| m.max(v.abs()))))
    }

    /// One squared-error regression step of both critics toward the shared
    /// Bellman targets.
    pub fn critic_update(&mut self, b: &Batch, noise: ArrayView2<'_, f64>) -> Result<CriticStats, LearnError> {
        let y = self.bellman_targets(b, noise)?;
        let x = concatenate![Axis(1), b.s, b.a];
        let (loss1, q_mean, m1) = Self::critic_step(&mut self.critic1, &mut self.opt_critic1, x.view(), &y)?;
        let (loss2, _, m2) = Self::critic_step(&mut self.critic2, &mut self.opt_critic2, x.view(), &y)?;
        self.critic_updates += 1;
        Ok(CriticStats {
            loss1,
            loss2,
            q_mean,
            q_max_abs: m1.max(m2),
        })
    }

    /// Whether this critic update count calls for a delayed actor step.
    pub fn actor_due(&self) -> bool {
        self.critic_updates > 0 && self.critic_updates % self.cfg.policy_delay == 0
    }

    pub fn actor_gradients(&self, be: &Batch, bd: Option<&Batch>) -> Result<ActorGradients, LearnError> {
        let lam_bc = self.cfg.lambda_bc;
        if lam_bc > 0.0 && bd.is_none_or(|b| b.is_empty()) {
            return Err(LearnError::NoDemos);
        }
        let n = be.len() as f64;
        let tape = self.actor.forward_tape(be.s.view())?;
        let x = concatenate![Axis(1), be.s, *tape.output()];
        let ctape = self.critic1.forward_tape(x.view())?;
        let j = ctape.output().mean().unwrap_or(0.0);
        let dq = Array2::from_elem((be.len(), 1), 1.0 / n);
        let cback = self.critic1.backward(&ctape, dq.view())?;
        let da = cback.input_grad.slice(s![.., self.state_dim..]).to_owned();
        let rl = self.actor.backward(&tape, da.view())?.grads;

        let (bc, bc_loss) = match bd {
            Some(bd) if !bd.is_empty() => {
                let tape = self.actor.forward_tape(bd.s.view())?;
                let diff = tape.output() - &bd.a;
                let scale = match self.cfg.bc_reduction {
                    BcReduction::Sum => 1.0,
                    BcReduction::Mean => 1.0 / bd.len() as f64,
                };
                let loss = diff.mapv(|d| d * d).sum() * scale;
                let back = self.actor.backward(&tape, (diff * (2.0 * scale)).view())?;
                (back.grads, loss)
            }
            _ => (vec![0.0; rl.len()], 0.0),
        };
        let lam_rl = self.cfg.lambda_rl;
        let combined = rl.iter().zip(&bc).map(|(g, b)| -(lam_rl * g - lam_bc * b)).collect();
        Ok(ActorGradients {
            rl,
            bc,
            combined,
            j,
            bc_loss,
        })
    }

    /// Delayed actor step on the λ-balanced objective, followed by soft
    /// updates of all three targets.
    pub fn actor_update(&mut self, be: &Batch, bd: Option<&Batch>) -> Result<ActorStats, LearnError> {
        let g = self.actor_gradients(be, bd)?;
        self.opt_actor.step(self.actor.params_mut(), &g.combined)?;
        self.soft_update_targets();
        Ok(ActorStats {
            actor_loss: -g.j,
            bc_loss: g.bc_loss,
            rl_grad_norm: norm(&g.rl),
            bc_grad_norm: norm(&g.bc),
        })
    }

    pub fn soft_update_targets(&mut self) {
        let tau = self.cfg.tau;
        self.actor_target.soft_update_from(&self.actor, tau);
        self.critic1_target.soft_update_from(&self.critic1, tau);
        self.critic2_target.soft_update_from(&self.critic2, tau);
    }

    pub fn all_finite(&self) -> bool {
        [&self.actor, &self.critic1, &self.critic2].iter().all(|n| n.all_finite())
    }

    /// Networks and config; optimizer moments are not stored.
    pub fn to_checkpoint(&self, seed: u64, train_steps: u64, extra: serde_json::Value) -> Checkpoint {
        let config = serde_json::json!({
            "td3": self.cfg,
            "state_dim": self.state_dim,
            "run": extra,
        });
        let mut ck = Checkpoint::new("policy", seed, train_steps, config);
        ck.push_net("actor", &self.actor);
        ck.push_net("critic1", &self.critic1);
        ck.push_net("critic2", &self.critic2);
        ck.push_net("actor_target", &self.actor_target);
        ck.push_net("critic1_target", &self.critic1_target);
        ck.push_net("critic2_target", &self.critic2_target);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, LearnError> {
        ck.expect_kind("policy")?;
        let cfg: Td3Config = serde_json::from_value(ck.manifest.config["td3"].clone())
            .map_err(|e| LearnError::Checkpoint(format!("td3 config: {e}")))?;
        let state_dim = ck.manifest.config["state_dim"]
            .as_u64()
            .ok_or_else(|| LearnError::Checkpoint("missing state_dim".into()))? as usize;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let shape = Self::new(state_dim, cfg.clone(), &mut rng);
        let net = |name: &str, like: &Net| ck.net(name, like.layers());
        let actor = net("actor", &shape.actor)?;
        let critic1 = net("critic1", &shape.critic1)?;
        let critic2 = net("critic2", &shape.critic2)?;
        let targets = [
            net("actor_target", &shape.actor)?,
            net("critic1_target", &shape.critic1)?,
            net("critic2_target", &shape.critic2)?,
        ];
        Ok(Self::assemble(cfg, state_dim, actor, critic1, critic2, Some(targets)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::buffer::tests::transition;
    use crate::nn::gradcheck::max_relative_error;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> Td3Config {
        Td3Config {
            hidden: vec![16, 16],
            ..Td3Config::default()
        }
    }

    fn random_batch(n: usize, d: usize, rng: &mut impl Rng) -> Batch {
        Batch {
            s: Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0)),
            a: Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.0..1.0)),
            r: Array1::from_shape_fn(n, |_| rng.random_range(-5.0..5.0)),
            s_next: Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0)),
            done: Array1::from_shape_fn(n, |i| (i % 3 == 0) as u8 as f64),
        }
    }

    #[test]
    fn action_mapping_and_exploration_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = PolicyBundle::new(13, small_cfg(), &mut rng);
        assert_eq!(Action::from_normalized([-1.0, 0.0]), Action::new(0.0, 0.0));
        assert_eq!(Action::from_normalized([1.0, 1.0]), Action::new(0.5, std::f64::consts::PI));
        let s = vec![0.3; 13];
        for _ in 0..10_000 {
            let a = b.select_action(&s, true, &mut rng).unwrap();
            assert!((0.0..=0.5).contains(&a.v) && a.omega.abs() <= std::f64::consts::PI);
        }
        let mut broken = b.clone();
        *broken.actor.params_mut().last_mut().unwrap() = f64::NAN;
        assert!(matches!(
            broken.select_action(&s, false, &mut rng),
            Err(LearnError::Sim(crate::sim::SimError::PolicyDivergence))
        ));
    }

    #[test]
    fn targets_start_equal_and_soft_update_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut b = PolicyBundle::new(13, small_cfg(), &mut rng);
        assert_eq!(b.actor.params(), b.actor_target.params());
        assert_eq!(b.critic2.params(), b.critic2_target.params());
        let batch = random_batch(32, 13, &mut rng);
        let noise = b.target_noise(32, &mut rng);
        b.critic_update(&batch, noise.view()).unwrap();
        let before = b.critic1_target.params().to_vec();
        b.soft_update_targets();
        for ((t, old), m) in b.critic1_target.params().iter().zip(&before).zip(b.critic1.params()) {
            assert_eq!(*t, (1.0 - 0.005) * old + 0.005 * m);
        }
    }

    #[test]
    fn terminal_targets_are_rewards() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = PolicyBundle::new(13, small_cfg(), &mut rng);
        let (x, y) = (transition(3.0, true), transition(-2.0, true));
        let batch = Batch::new(&[&x, &y]);
        let noise = b.target_noise(2, &mut rng);
        assert_eq!(b.bellman_targets(&batch, noise.view()).unwrap().to_vec(), vec![3.0, -2.0]);
    }

    #[test]
    fn scripted_bellman_oracle() {
        // two transitions, computed by hand from the target nets
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = PolicyBundle::new(4, small_cfg(), &mut rng);
        let batch = random_batch(2, 4, &mut rng);
        let noise = Array2::from_shape_vec((2, 2), vec![0.04, -0.5, 0.0, 0.5]).unwrap();
        let y = b.bellman_targets(&batch, noise.view()).unwrap();
        for i in 0..2 {
            let s2 = batch.s_next.row(i).to_vec();
            let a = b.actor_target.forward(&s2).unwrap();
            let a: Vec<f64> = a.iter().zip(noise.row(i)).map(|(u, n)| (u + n).clamp(-1.0, 1.0)).collect();
            let x: Vec<f64> = s2.iter().chain(&a).copied().collect();
            let q1 = b.critic1_target.forward(&x).unwrap()[0];
            let q2 = b.critic2_target.forward(&x).unwrap()[0];
            let expect = batch.r[i] + 0.99 * (1.0 - batch.done[i]) * q1.min(q2);
            assert!(q1.min(q2) <= q1);
            assert_abs_diff_eq!(y[i], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn identical_critics_give_identical_losses() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut b = PolicyBundle::new(6, small_cfg(), &mut rng);
        b.critic2 = b.critic1.clone();
        b.critic2_target = b.critic1_target.clone();
        let batch = random_batch(16, 6, &mut rng);
        let st = b.critic_update(&batch, Array2::zeros((16, 2)).view()).unwrap();
        assert_eq!(st.loss1, st.loss2);
    }

    #[test]
    fn critic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = PolicyBundle::new(5, small_cfg(), &mut rng);
        let batch = random_batch(8, 5, &mut rng);
        let y = b.bellman_targets(&batch, Array2::zeros((8, 2)).view()).unwrap();
        let x = concatenate![Axis(1), batch.s, batch.a];
        let loss = |p: &[f64]| {
            let net = Net::from_params(b.critic1.layers().to_vec(), p.to_vec()).unwrap();
            let q = net.forward_batch(x.view()).unwrap();
            q.column(0).iter().zip(&y).map(|(q, y)| (q - y).powi(2)).sum::<f64>() / 8.0
        };
        let tape = b.critic1.forward_tape(x.view()).unwrap();
        let err = &tape.output().column(0) - &y;
        let dy = (err * (2.0 / 8.0)).insert_axis(Axis(1));
        let g = b.critic1.backward(&tape, dy.view()).unwrap().grads;
        let idx: Vec<usize> = (0..40).map(|_| rng.random_range(0..g.len())).collect();
        let e = max_relative_error(loss, b.critic1.params(), &g, &idx, 1e-5);
        assert!(e < 1e-4, "{e}");
    }

    #[test]
    fn actor_gradient_matches_finite_differences_and_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = PolicyBundle::new(5, small_cfg(), &mut rng);
        let be = random_batch(8, 5, &mut rng);
        let bd = random_batch(6, 5, &mut rng);
        let g = b.actor_gradients(&be, Some(&bd)).unwrap();
        let objective = |p: &[f64]| {
            let actor = Net::from_params(b.actor.layers().to_vec(), p.to_vec()).unwrap();
            let a = actor.forward_batch(be.s.view()).unwrap();
            let x = concatenate![Axis(1), be.s, a];
            let j = b.critic1.forward_batch(x.view()).unwrap().mean().unwrap();
            let ad = actor.forward_batch(bd.s.view()).unwrap();
            let bc = (&ad - &bd.a).mapv(|d| d * d).sum();
            -(7.5 * j - 2.5 * bc)
        };
        let idx: Vec<usize> = (0..40).map(|_| rng.random_range(0..g.combined.len())).collect();
        let e = max_relative_error(objective, b.actor.params(), &g.combined, &idx, 1e-5);
        assert!(e < 1e-4, "{e}");
        for i in 0..g.combined.len() {
            assert_eq!(g.combined[i], -(7.5 * g.rl[i] - 2.5 * g.bc[i]));
        }
    }

    #[test]
    fn cloning_gradient_vanishes_on_own_actions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = PolicyBundle::new(5, small_cfg(), &mut rng);
        let be = random_batch(8, 5, &mut rng);
        let mut bd = random_batch(6, 5, &mut rng);
        bd.a = b.actor.forward_batch(bd.s.view()).unwrap();
        let g = b.actor_gradients(&be, Some(&bd)).unwrap();
        assert!(g.bc.iter().all(|v| *v == 0.0));
        assert_eq!(g.bc_loss, 0.0);
    }

    #[test]
    fn zero_lambda_bc_is_plain_td3() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cfg = small_cfg().without_demos();
        let b = PolicyBundle::new(5, cfg, &mut rng);
        let be = random_batch(8, 5, &mut rng);
        let bd = random_batch(6, 5, &mut rng);
        let with = b.actor_gradients(&be, Some(&bd)).unwrap();
        let without = b.actor_gradients(&be, None).unwrap();
        assert_eq!(with.combined, without.combined);
        for (c, r) in with.combined.iter().zip(&with.rl) {
            assert_eq!(*c, -7.5 * r);
        }
        let mut bc = PolicyBundle::new(5, small_cfg(), &mut rng);
        assert!(matches!(bc.actor_update(&be, None), Err(LearnError::NoDemos)));
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut b = PolicyBundle::new(7, small_cfg(), &mut rng);
        let batch = random_batch(16, 7, &mut rng);
        b.critic_update(&batch, Array2::zeros((16, 2)).view()).unwrap();
        b.soft_update_targets();
        let ck = b.to_checkpoint(9, 1, serde_json::json!({"variant": "vae-ha"}));
        let back = PolicyBundle::from_checkpoint(&Checkpoint::from_json(&ck.to_json()).unwrap()).unwrap();
        assert_eq!(back.actor.params(), b.actor.params());
        assert_eq!(back.critic1_target.params(), b.critic1_target.params());
        assert_eq!(back.config(), b.config());
    }
}
