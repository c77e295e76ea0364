use super::HumanObservation;
use std::collections::VecDeque;

/// Steps of history the predictor consumes.
pub const WINDOW: usize = 5;

/// One step of history: latent code, human observation and the action that
/// led into this step.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEntry {
    pub latent: Vec<f64>,
    pub human: HumanObservation,
    pub action: [f64; 2],
}

impl WindowEntry {
    /// `[l…, k_H, d_H, Δα_H, v/v_max, ω/ω_max]`.
    pub fn features(&self) -> Vec<f64> {
        let mut f = self.latent.clone();
        f.extend([
            self.human.k_h as f64,
            self.human.d_h,
            self.human.dalpha_h,
            self.action[0] / crate::sim::V_MAX,
            self.action[1] / crate::sim::OMEGA_MAX,
        ]);
        f
    }
}

pub fn feature_dim(latent: usize) -> usize {
    latent + 5
}

/// Ring buffer of the last [`WINDOW`] entries. The first push of an episode
/// fills every slot with that entry.
#[derive(Debug, Clone, Default)]
pub struct PerceptionWindow {
    entries: VecDeque<WindowEntry>,
}

impl PerceptionWindow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: WindowEntry) {
        if self.entries.is_empty() {
            self.entries.extend(std::iter::repeat_n(entry, WINDOW));
        } else {
            self.entries.pop_front();
            self.entries.push_back(entry);
        }
    }

    pub fn is_warm(&self) -> bool {
        self.entries.len() == WINDOW
    }

    pub fn entries(&self) -> impl Iterator<Item = &WindowEntry> {
        self.entries.iter()
    }

    pub fn last(&self) -> Option<&WindowEntry> {
        self.entries.back()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}
