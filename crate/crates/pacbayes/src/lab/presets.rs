//! Shipped benchmark problems for coverage and optimization experiments.
//!
//! All presets keep losses in [0, 1] so every bound in the library applies,
//! and each targets a different regime: plain Bernoulli noise, a realizable
//! hypothesis, a within-range heavy tail for the second-moment route, and a
//! nested 50-hypothesis class for posterior optimization.

use super::problem::{DiscreteProblem, Outcome};
use crate::error::{Error, Result};

/// Names of all shipped presets, in a stable listing order.
pub const PRESET_NAMES: [&str; 6] = [
    "bernoulli-single",
    "bernoulli-pair",
    "gibbs-ten",
    "heavy-tail",
    "realizable",
    "nested-fifty",
];

/// Builds a shipped preset by name. Unknown names report the full menu.
pub fn preset(name: &str) -> Result<DiscreteProblem> {
    match name {
        "bernoulli-single" => bernoulli_single(),
        "bernoulli-pair" => bernoulli_pair(),
        "gibbs-ten" => gibbs_ten(),
        "heavy-tail" => heavy_tail(),
        "realizable" => realizable(),
        "nested-fifty" => nested_fifty(),
        other => Err(Error::InvalidProblem(format!(
            "unknown preset '{other}', expected one of: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

fn uniform_outcomes(values: &[f64]) -> Vec<Outcome> {
    let p = 1.0 / values.len() as f64;
    values.iter().map(|&value| Outcome { value, prob: p }).collect()
}

/// One hypothesis, fair-coin loss: the purest coverage check, with the
/// posterior pinned to the prior and kl identically zero.
fn bernoulli_single() -> Result<DiscreteProblem> {
    DiscreteProblem::new(
        vec![Outcome { value: 0.0, prob: 0.5 }, Outcome { value: 1.0, prob: 0.5 }],
        vec!["coin".into()],
        vec![vec![0.0, 1.0]],
        vec![1.0],
        Some((0.0, 1.0)),
    )
}

/// Two hypotheses with Bernoulli risks 0.1 and 0.4 on a shared outcome
/// space, so posterior selection has a clear winner.
fn bernoulli_pair() -> Result<DiscreteProblem> {
    DiscreteProblem::new(
        vec![
            Outcome { value: 0.0, prob: 0.6 },
            Outcome { value: 1.0, prob: 0.3 },
            Outcome { value: 2.0, prob: 0.1 },
        ],
        vec!["good".into(), "bad".into()],
        vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]],
        vec![0.5, 0.5],
        Some((0.0, 1.0)),
    )
}

/// Ten hypotheses with population risks 0.05, 0.10, ..., 0.50 built from
/// nested threshold events, the standard target for a Gibbs posterior.
fn gibbs_ten() -> Result<DiscreteProblem> {
    let m = 20usize;
    let values: Vec<f64> = (0..m).map(|z| z as f64).collect();
    let loss: Vec<Vec<f64>> = (1..=10)
        .map(|t| (0..m).map(|z| if z < t { 1.0 } else { 0.0 }).collect())
        .collect();
    DiscreteProblem::new(
        uniform_outcomes(&values),
        (0..10).map(|h| format!("h{h}")).collect(),
        loss,
        vec![0.1; 10],
        Some((0.0, 1.0)),
    )
}

/// Small mean, rare unit-size spikes: the loss second moment dwarfs the
/// squared mean, the regime the second-moment route is built for.
fn heavy_tail() -> Result<DiscreteProblem> {
    DiscreteProblem::new(
        vec![
            Outcome { value: 0.0, prob: 0.89 },
            Outcome { value: 0.1, prob: 0.10 },
            Outcome { value: 1.0, prob: 0.01 },
        ],
        vec!["spiky".into(), "steady".into()],
        vec![vec![0.0, 0.1, 1.0], vec![0.05, 0.2, 1.0]],
        vec![0.5, 0.5],
        Some((0.0, 1.0)),
    )
}

/// Contains a zero-loss hypothesis, so a concentrated posterior reaches the
/// empirical risk 0 branch of the fast-rate bounds.
fn realizable() -> Result<DiscreteProblem> {
    DiscreteProblem::new(
        vec![Outcome { value: 0.0, prob: 0.7 }, Outcome { value: 1.0, prob: 0.3 }],
        vec!["perfect".into(), "miss-one".into(), "miss-zero".into()],
        vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]],
        vec![1.0 / 3.0; 3],
        Some((0.0, 1.0)),
    )
}

/// Fifty nested-threshold hypotheses with risks 0.02 through 0.51 on 100
/// equiprobable outcomes, sized for alternating posterior optimization.
fn nested_fifty() -> Result<DiscreteProblem> {
    let m = 100usize;
    let values: Vec<f64> = (0..m).map(|z| z as f64).collect();
    let loss: Vec<Vec<f64>> = (0..50)
        .map(|h| {
            let t = 2 + h;
            (0..m).map(|z| if z < t { 1.0 } else { 0.0 }).collect()
        })
        .collect();
    DiscreteProblem::new(
        uniform_outcomes(&values),
        (0..50).map(|h| format!("h{h:02}")).collect(),
        loss,
        vec![0.02; 50],
        Some((0.0, 1.0)),
    )
}
