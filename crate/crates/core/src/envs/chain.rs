use super::{EnvKind, EnvSpec};
use crate::cost::CostPreset;
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::mdp::{Outcome, TabularMdp};

/// NChain: action 0 advances (the last state pays `large` and stays), action 1 returns to
/// the start paying `small`. With probability `slip` the other action takes effect.
pub fn chain(n: usize, slip: f64, small: f64, large: f64) -> Result<EnvSpec> {
    if !(0.0..1.0).contains(&slip) {
        return Err(Error::InvalidSlip(slip));
    }
    if n < 2 {
        return Err(Error::InvalidMdp(format!("chain needs at least 2 states, got {n}")));
    }
    let forward = |s: usize| {
        if s + 1 < n {
            (s + 1, 0.0)
        } else {
            (s, large)
        }
    };
    let back = (0, small);
    let mut outcomes = Vec::with_capacity(2 * n);
    for s in 0..n {
        for a in 0..2 {
            let (intended, swapped) = if a == 0 {
                (forward(s), back)
            } else {
                (back, forward(s))
            };
            outcomes.push(vec![
                Outcome::new(intended.0, 1.0 - slip, intended.1),
                Outcome::new(swapped.0, slip, swapped.1),
            ]);
        }
    }
    let mdp = TabularMdp::new(
        n,
        2,
        outcomes,
        0.9,
        Distribution::one_hot(n, 0),
        Some(1000),
        vec![false; n],
    )?;
    Ok(EnvSpec {
        name: "chain".into(),
        kind: EnvKind::Chain,
        mdp,
        default_cost: CostPreset::ZeroOne,
        action_names: vec!["forward".into(), "back".into()],
    })
}

pub fn default_chain() -> EnvSpec {
    chain(5, 0.2, 2.0, 10.0).expect("default chain parameters are valid")
}
