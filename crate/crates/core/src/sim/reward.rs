use serde::{Deserialize, Serialize};

/// Reward scale; every reward value is a fixed fraction of it.
pub const C_REW: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RewardEvent {
    Collision,
    GoalTraining,
    GoalDemo,
    Timeout,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    Experience,
    Demo,
}

/// Sparse event reward; demonstration transitions carry an extra `c/100`.
pub fn compute_reward(event: RewardEvent, source: Source) -> f64 {
    let base = match event {
        RewardEvent::Collision => -C_REW / 2.0,
        RewardEvent::GoalTraining => C_REW / 2.0,
        RewardEvent::GoalDemo => C_REW,
        RewardEvent::Timeout => -C_REW / 4.0,
        RewardEvent::None => 0.0,
    };
    match source {
        Source::Demo => base + C_REW / 100.0,
        Source::Experience => base,
    }
}
