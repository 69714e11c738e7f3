//! Canned environments and generators.
//!
//! Action 0 is "left" and action 1 is "right" in the line-shaped worlds.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::mdp::{Dims, MdpError, MdpSpec};
use crate::rng::{RngStream, StreamPurpose};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// The 3-state, 2-action, horizon-3 line world: moving into the rightmost
/// state (or staying there) pays 1, walls self-loop.
pub fn gridworld_1d() -> MdpSpec {
    chain_mdp(3, 3)
}

/// Line world with `length` states, stationary dynamics broadcast over
/// `horizon` steps, and a uniform initial distribution.
pub fn chain_mdp(length: usize, horizon: usize) -> MdpSpec {
    assert!(length >= 2, "chain needs at least two states");
    assert!(horizon >= 1, "horizon must be positive");
    let s = length;
    let dims = Dims::new(s, 2, horizon);
    let mut transitions = vec![0.0; dims.sa_len() * s];
    let mut rewards = vec![0.0; dims.sa_len()];
    for h in 0..horizon {
        for x in 0..s {
            for a in [LEFT, RIGHT] {
                let next = if a == LEFT {
                    x.saturating_sub(1)
                } else {
                    (x + 1).min(s - 1)
                };
                let i = dims.sa_index(h, x, a);
                transitions[i * s + next] = 1.0;
                rewards[i] = if next == s - 1 { 1.0 } else { 0.0 };
            }
        }
    }
    MdpSpec::new(dims, transitions, rewards, vec![1.0 / s as f64; s])
        .expect("chain tables have consistent shape")
}

/// Random MDP: each transition row is i.i.d. uniforms normalised to sum to
/// one, each reward is uniform on `[0, 1]` rounded to 6 decimals, and the
/// initial distribution is uniform. The same arguments give the same spec.
pub fn random_mdp(seed: u64, num_states: usize, num_actions: usize, horizon: usize) -> MdpSpec {
    assert!(num_states >= 1 && num_actions >= 1 && horizon >= 1);
    let dims = Dims::new(num_states, num_actions, horizon);
    let mut rng = RngStream::for_purpose(seed, 0, StreamPurpose::Generator);
    let mut transitions = Vec::with_capacity(dims.sa_len() * num_states);
    let mut rewards = Vec::with_capacity(dims.sa_len());
    for _ in 0..dims.sa_len() {
        // 1 - u lies in (0, 1], so the row sum is strictly positive.
        let row: Vec<f64> = (0..num_states).map(|_| 1.0 - rng.uniform()).collect();
        let total: f64 = row.iter().sum();
        transitions.extend(row.iter().map(|w| w / total));
        rewards.push((rng.uniform() * 1e6).round() / 1e6);
    }
    MdpSpec::new(
        dims,
        transitions,
        rewards,
        vec![1.0 / num_states as f64; num_states],
    )
    .expect("random tables have consistent shape")
}

#[derive(Debug, Error)]
pub enum RecipeError {
    #[error("unrecognised environment recipe {0:?}")]
    Unknown(String),
    #[error("bad parameter in recipe {recipe:?}: {detail}")]
    Param { recipe: String, detail: String },
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// A named environment, or a path to an MDP JSON file.
///
/// String forms: `gridworld3`, `chain:S=5,H=6`, `random:seed=7,S=3,A=2,H=3`;
/// anything else is treated as a file path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnvRecipe {
    Gridworld1d,
    Chain { length: usize, horizon: usize },
    Random {
        seed: u64,
        num_states: usize,
        num_actions: usize,
        horizon: usize,
    },
    File(String),
}

impl EnvRecipe {
    pub fn build(&self) -> Result<MdpSpec, RecipeError> {
        Ok(match self {
            EnvRecipe::Gridworld1d => gridworld_1d(),
            EnvRecipe::Chain { length, horizon } => chain_mdp(*length, *horizon),
            EnvRecipe::Random {
                seed,
                num_states,
                num_actions,
                horizon,
            } => random_mdp(*seed, *num_states, *num_actions, *horizon),
            EnvRecipe::File(path) => MdpSpec::load(path)?,
        })
    }
}

fn parse_params(recipe: &str, body: &str) -> Result<Vec<(String, u64)>, RecipeError> {
    body.split(',')
        .filter(|kv| !kv.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| RecipeError::Param {
                recipe: recipe.to_string(),
                detail: format!("expected key=value, got {kv:?}"),
            })?;
            let value = v.trim().parse::<u64>().map_err(|e| RecipeError::Param {
                recipe: recipe.to_string(),
                detail: format!("{k}: {e}"),
            })?;
            Ok((k.trim().to_string(), value))
        })
        .collect()
}

fn take(
    recipe: &str,
    params: &[(String, u64)],
    allowed: &[&str],
) -> Result<Vec<u64>, RecipeError> {
    for (k, _) in params {
        if !allowed.contains(&k.as_str()) {
            return Err(RecipeError::Param {
                recipe: recipe.to_string(),
                detail: format!("unknown key {k:?}"),
            });
        }
    }
    allowed
        .iter()
        .map(|key| {
            params
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| RecipeError::Param {
                    recipe: recipe.to_string(),
                    detail: format!("missing key {key:?}"),
                })
        })
        .collect()
}

impl FromStr for EnvRecipe {
    type Err = RecipeError;

    fn from_str(s: &str) -> Result<Self, RecipeError> {
        let s = s.trim();
        if s == "gridworld3" || s == "gridworld_1d" {
            return Ok(EnvRecipe::Gridworld1d);
        }
        let positive = |v: u64, key: &str, min: u64| -> Result<usize, RecipeError> {
            if v < min {
                return Err(RecipeError::Param {
                    recipe: s.to_string(),
                    detail: format!("{key} must be at least {min}"),
                });
            }
            Ok(v as usize)
        };
        if let Some(body) = s.strip_prefix("chain:") {
            let v = take(s, &parse_params(s, body)?, &["S", "H"])?;
            return Ok(EnvRecipe::Chain {
                length: positive(v[0], "S", 2)?,
                horizon: positive(v[1], "H", 1)?,
            });
        }
        if let Some(body) = s.strip_prefix("random:") {
            let v = take(s, &parse_params(s, body)?, &["seed", "S", "A", "H"])?;
            return Ok(EnvRecipe::Random {
                seed: v[0],
                num_states: positive(v[1], "S", 1)?,
                num_actions: positive(v[2], "A", 1)?,
                horizon: positive(v[3], "H", 1)?,
            });
        }
        if s.is_empty() || s.starts_with("chain") || s.starts_with("random") {
            return Err(RecipeError::Unknown(s.to_string()));
        }
        Ok(EnvRecipe::File(s.to_string()))
    }
}

impl fmt::Display for EnvRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvRecipe::Gridworld1d => write!(f, "gridworld3"),
            EnvRecipe::Chain { length, horizon } => write!(f, "chain:S={length},H={horizon}"),
            EnvRecipe::Random {
                seed,
                num_states,
                num_actions,
                horizon,
            } => write!(f, "random:seed={seed},S={num_states},A={num_actions},H={horizon}"),
            EnvRecipe::File(path) => write!(f, "{path}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{brute_force_optimal, solve_optimal, DEFAULT_ENUMERATION_CAP};

    #[test]
    fn gridworld_tables() {
        let g = gridworld_1d();
        assert_eq!((g.num_states(), g.num_actions(), g.horizon()), (3, 2, 3));
        let expected_next = [[0, 1], [0, 2], [1, 2]];
        let expected_reward = [[0.0, 0.0], [0.0, 1.0], [0.0, 1.0]];
        for h in 0..3 {
            for x in 0..3 {
                for a in 0..2 {
                    let row = g.transition_row(h, x, a);
                    assert_eq!(row[expected_next[x][a]], 1.0);
                    assert_eq!(row.iter().sum::<f64>(), 1.0);
                    assert_eq!(g.reward(h, x, a), expected_reward[x][a]);
                }
            }
        }
        assert!(g.validate().is_ok());
    }

    #[test]
    fn chain_three_is_the_gridworld() {
        assert_eq!(chain_mdp(3, 3), gridworld_1d());
    }

    #[test]
    fn chain_generators_valid() {
        for s in 2..10 {
            for h in 1..6 {
                assert!(chain_mdp(s, h).validate().is_ok());
            }
        }
    }

    /// Best return over all open-loop action sequences. Exact for
    /// deterministic dynamics, where every closed-loop policy induces one.
    fn best_open_loop_return(spec: &MdpSpec, start: usize) -> f64 {
        let (na, nh) = (spec.num_actions(), spec.horizon());
        let mut best = f64::NEG_INFINITY;
        for code in 0..na.pow(nh as u32) {
            let (mut x, mut c, mut total) = (start, code, 0.0);
            for h in 0..nh {
                let a = c % na;
                c /= na;
                total += spec.reward(h, x, a);
                x = spec.transition_row(h, x, a).iter().position(|&p| p == 1.0).unwrap();
            }
            best = best.max(total);
        }
        best
    }

    #[test]
    fn chain_five_six_matches_oracle() {
        let spec = chain_mdp(5, 6);
        let opt = solve_optimal(&spec);
        // Leftmost start: four moves reach x5 at step 4, then stay for steps 4..6.
        assert_eq!(best_open_loop_return(&spec, 0), 3.0);
        for x in 0..5 {
            assert_eq!(opt.v(0, x), best_open_loop_return(&spec, x));
        }
        // The full policy enumeration (2^30 policies) is over the default cap.
        assert!(brute_force_optimal(&spec, DEFAULT_ENUMERATION_CAP).is_err());
        let small = chain_mdp(4, 4);
        let bf = brute_force_optimal(&small, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(bf.max_abs_diff(&solve_optimal(&small)) <= 1e-12);
    }

    #[test]
    fn random_is_reproducible_and_valid() {
        let a = random_mdp(7, 3, 2, 3);
        let b = random_mdp(7, 3, 2, 3);
        assert_eq!(a.to_json(), b.to_json());
        assert_ne!(a, random_mdp(8, 3, 2, 3));
        for seed in 0..200 {
            let spec = random_mdp(seed, 1 + (seed as usize % 4), 1 + (seed as usize % 3), 3);
            assert!(spec.validate().is_ok(), "seed {seed}: {}", spec.validate());
        }
    }

    #[test]
    fn random_rewards_have_six_decimals() {
        let spec = random_mdp(3, 4, 3, 4);
        for &r in spec.rewards() {
            assert_eq!((r * 1e6).round() / 1e6, r);
        }
    }

    #[test]
    fn recipe_parsing() {
        assert_eq!("gridworld3".parse::<EnvRecipe>().unwrap(), EnvRecipe::Gridworld1d);
        assert_eq!(
            "chain:S=5,H=6".parse::<EnvRecipe>().unwrap(),
            EnvRecipe::Chain {
                length: 5,
                horizon: 6
            }
        );
        let r: EnvRecipe = "random:seed=7,S=3,A=2,H=3".parse().unwrap();
        assert_eq!(r.to_string(), "random:seed=7,S=3,A=2,H=3");
        assert!("chain:S=1,H=3".parse::<EnvRecipe>().is_err());
        assert!("chain:S=3".parse::<EnvRecipe>().is_err());
        assert!("random:seed=1,S=3,A=2,H=3,Z=4".parse::<EnvRecipe>().is_err());
        assert_eq!(
            "specs/x.json".parse::<EnvRecipe>().unwrap(),
            EnvRecipe::File("specs/x.json".into())
        );
    }
}
