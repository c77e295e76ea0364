use super::{
    assemble_state, detect_human, render_scan, HumanObservation, PerceptionConfig, PerceptionError, PerceptionWindow,
    Phase, Predictor, StateVec, Vae, Variant, WindowEntry,
};
use crate::geom::{to_polar, Circle, Point2, Pose2, Scene};
use std::sync::Arc;

/// Trained perception models for one controller variant. Cloning shares the
/// model snapshots.
#[derive(Debug, Clone)]
pub struct Perception {
    config: PerceptionConfig,
    variant: Variant,
    phase: Phase,
    vae: Arc<Vae>,
    predictor: Option<Arc<Predictor>>,
}

/// Per-episode perception state.
#[derive(Debug)]
pub struct PerceptionSession<'a> {
    perception: &'a Perception,
    window: PerceptionWindow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub state: StateVec,
    /// Ground-truth detection, before any variant-specific blanking.
    pub human: HumanObservation,
}

impl Perception {
    pub fn new(
        config: PerceptionConfig,
        variant: Variant,
        vae: Arc<Vae>,
        predictor: Option<Arc<Predictor>>,
    ) -> Result<Self, PerceptionError> {
        if vae.rays() != config.rays || vae.latent_dim() != config.latent {
            return Err(PerceptionError::ModelMismatch(format!(
                "VAE is {}→{}, config wants {}→{}",
                vae.rays(),
                vae.latent_dim(),
                config.rays,
                config.latent
            )));
        }
        if predictor.is_some() != variant.uses_predictor() {
            return Err(PerceptionError::VariantMismatch(variant));
        }
        if let Some(p) = &predictor {
            if p.spec().latent != config.latent {
                return Err(PerceptionError::ModelMismatch("predictor latent size".into()));
            }
        }
        Ok(Self {
            config,
            variant,
            phase: Phase::Train,
            vae,
            predictor,
        })
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn config(&self) -> &PerceptionConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn vae(&self) -> &Vae {
        &self.vae
    }

    pub fn state_dim(&self) -> usize {
        self.variant.layout().len(self.config.latent)
    }

    pub fn session(&self) -> PerceptionSession<'_> {
        PerceptionSession {
            perception: self,
            window: PerceptionWindow::new(),
        }
    }
}

impl PerceptionSession<'_> {
    /// Renders, encodes and assembles the state at the current world
    /// configuration. `prev_action` is the command that led here (zero at
    /// episode start). Latents and predictions are taken at their means.
    pub fn observe(
        &mut self,
        scene: &Scene,
        robot: &Pose2,
        human: Option<Circle>,
        goal: Point2,
        prev_action: [f64; 2],
    ) -> Result<Observation, PerceptionError> {
        let p = self.perception;
        let cfg = &p.config;
        let scan = render_scan(scene, robot, human, cfg.fov(), cfg.rays, cfg.max_range);
        let latent = p.vae.encode_mean(&scan.rays)?;
        let obs = detect_human(scene, robot, human.map(|c| c.center()), cfg.fov(), cfg.max_range);
        let pred = match &p.predictor {
            Some(model) => {
                self.window.push(WindowEntry {
                    latent: latent.clone(),
                    human: obs,
                    action: prev_action,
                });
                let next = model.predict(&self.window, vec![0.0; cfg.latent])?;
                Some((next.d_h, next.dalpha_h))
            }
            None => None,
        };
        let state = assemble_state(p.variant, p.phase, &latent, to_polar(goal, robot), obs, pred)?;
        Ok(Observation { state, human: obs })
    }
}
