use std::path::PathBuf;

/// A checkpoint taken when the rolling mean reward set a new best.
#[derive(Clone, Debug, PartialEq)]
pub struct MilestoneRecord {
    pub index: usize,
    /// Number of completed episodes when the milestone was taken.
    pub episode: usize,
    pub rolling_mean: f64,
    pub checkpoint: PathBuf,
}

/// Milestones are evaluated each time the history grows by a full window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MilestoneRule {
    pub window: usize,
    pub rel_margin: f64,
    pub min_margin: f64,
}

impl Default for MilestoneRule {
    fn default() -> Self {
        MilestoneRule {
            window: 100,
            rel_margin: 0.01,
            min_margin: 0.5,
        }
    }
}

impl MilestoneRule {
    pub fn margin(&self, best: f64) -> f64 {
        (self.rel_margin * best.abs()).max(self.min_margin)
    }

    /// Rolling mean of the last `window` entries when `history` qualifies as a
    /// new milestone over `best`.
    pub fn check(&self, history: &[f64], best: Option<f64>) -> Option<f64> {
        if self.window == 0 || history.len() < self.window || history.len() % self.window != 0 {
            return None;
        }
        let mean = rolling_mean(history, self.window);
        match best {
            None => Some(mean),
            Some(b) if mean > b + self.margin(b) => Some(mean),
            Some(_) => None,
        }
    }
}

/// Mean of the last `window` entries (all of them if fewer).
pub fn rolling_mean(history: &[f64], window: usize) -> f64 {
    let tail = &history[history.len().saturating_sub(window.max(1))..];
    if tail.is_empty() {
        return 0.0;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Replays `rule` over a full history; returns `(episodes, means)`.
pub fn scan_milestones(rule: &MilestoneRule, history: &[f64]) -> Vec<(usize, f64)> {
    let mut best = None;
    let mut out = Vec::new();
    for n in 1..=history.len() {
        if let Some(m) = rule.check(&history[..n], best) {
            best = Some(m);
            out.push((n, m));
        }
    }
    out
}
