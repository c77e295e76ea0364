use super::{HumanObservation, PerceptionError};
use crate::geom::PolarRef;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Controller configurations compared in the evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Latent scan, goal and human observation; trained with demonstrations.
    VaeHa,
    /// As `VaeHa` but the human fields are blanked at evaluation time.
    VaeHu,
    /// As `VaeHa` without demonstrations (plain TD3).
    VaeNd,
    /// Adds the predictor's next human pose to the state.
    LstmHp,
    /// As `VaeHa` with a 120° field of view.
    #[serde(rename = "vae-fov-120")]
    VaeFov120,
    /// As `VaeHa` without the goal distance.
    VaeNg,
}

/// Field layout of the policy input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `l, d_G, Δα_G, k_H, d_H, Δα_H`
    SVae,
    /// `SVae` followed by the predicted `d_H, Δα_H`.
    SLstm,
    /// `l, Δα_G, k_H, d_H, Δα_H`
    SVaeNoGoalDistance,
}

/// Whether the policy is being trained or evaluated; some variants perceive
/// differently at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    #[default]
    Train,
    Eval,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::VaeHa,
        Variant::VaeHu,
        Variant::VaeNd,
        Variant::LstmHp,
        Variant::VaeFov120,
        Variant::VaeNg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::VaeHa => "vae-ha",
            Variant::VaeHu => "vae-hu",
            Variant::VaeNd => "vae-nd",
            Variant::LstmHp => "lstm-hp",
            Variant::VaeFov120 => "vae-fov-120",
            Variant::VaeNg => "vae-ng",
        }
    }

    pub fn layout(self) -> Layout {
        match self {
            Variant::LstmHp => Layout::SLstm,
            Variant::VaeNg => Layout::SVaeNoGoalDistance,
            _ => Layout::SVae,
        }
    }

    pub fn fov_deg(self) -> f64 {
        match self {
            Variant::VaeFov120 => 120.0,
            _ => 87.0,
        }
    }

    pub fn uses_predictor(self) -> bool {
        self == Variant::LstmHp
    }

    pub fn uses_demos(self) -> bool {
        self != Variant::VaeNd
    }

    pub fn blind_at_eval(self) -> bool {
        self == Variant::VaeHu
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = PerceptionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| PerceptionError::UnknownVariant(s.to_string()))
    }
}

impl Layout {
    pub fn len(self, latent: usize) -> usize {
        match self {
            Layout::SVae => latent + 5,
            Layout::SLstm => latent + 7,
            Layout::SVaeNoGoalDistance => latent + 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVec {
    pub layout: Layout,
    pub values: Vec<f64>,
}

impl StateVec {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// The human fields `(k_H, d_H, Δα_H)` as stored.
    pub fn human(&self) -> HumanObservation {
        let n = self.values.len();
        let at = match self.layout {
            Layout::SLstm => n - 5,
            _ => n - 3,
        };
        HumanObservation {
            k_h: self.values[at] as u8,
            d_h: self.values[at + 1],
            dalpha_h: self.values[at + 2],
        }
    }
}

/// Concatenates the state fields in the variant's fixed order. Human fields
/// are replaced by the sentinel whenever `k_H = 0`, and always for a
/// human-blind variant under evaluation.
pub fn assemble_state(
    variant: Variant,
    phase: Phase,
    latent: &[f64],
    goal: PolarRef,
    obs: HumanObservation,
    pred: Option<(f64, f64)>,
) -> Result<StateVec, PerceptionError> {
    if pred.is_some() != variant.uses_predictor() {
        return Err(PerceptionError::VariantMismatch(variant));
    }
    let obs = if obs.k_h == 0 || (phase == Phase::Eval && variant.blind_at_eval()) {
        HumanObservation::ABSENT
    } else {
        obs
    };
    let layout = variant.layout();
    let mut values = Vec::with_capacity(layout.len(latent.len()));
    values.extend_from_slice(latent);
    if layout != Layout::SVaeNoGoalDistance {
        values.push(goal.distance);
    }
    values.extend([goal.bearing, obs.k_h as f64, obs.d_h, obs.dalpha_h]);
    if let Some((d, a)) = pred {
        values.extend([d, a]);
    }
    Ok(StateVec { layout, values })
}
