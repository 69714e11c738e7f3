//! Finite-horizon tabular MDPs with step-dependent dynamics.
//!
//! Indices are 0-based everywhere in the API and in the JSON format: step
//! `h` in `0..H`, state `x` in `0..S`, action `a` in `0..A`. The textbook
//! 1-based names map as `x1 -> 0`, `a1 -> 0`, `h = 1 -> 0`. Human-readable
//! messages (validation reports, CLI output) use the 1-based names.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RngStream;

/// Tolerance on probability sums.
pub const PROB_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index out of range: {what} = {index} (limit {limit})")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed MDP JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// State, action and horizon sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
}

impl Dims {
    pub fn new(num_states: usize, num_actions: usize, horizon: usize) -> Self {
        Self {
            num_states,
            num_actions,
            horizon,
        }
    }

    /// Flat index into an `H x S x A` table.
    #[inline]
    pub fn sa_index(&self, h: usize, x: usize, a: usize) -> usize {
        (h * self.num_states + x) * self.num_actions + a
    }

    #[inline]
    pub fn sa_len(&self) -> usize {
        self.horizon * self.num_states * self.num_actions
    }
}

/// A finite-horizon MDP with deterministic rewards.
///
/// Construction only checks shapes; value constraints are reported by
/// [`MdpSpec::validate`] so that a bad file yields every violation at once.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpSpec {
    dims: Dims,
    // H x S x A x S, row-major.
    transitions: Vec<f64>,
    // H x S x A.
    rewards: Vec<f64>,
    initial_dist: Vec<f64>,
}

impl MdpSpec {
    pub fn new(
        dims: Dims,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        initial_dist: Vec<f64>,
    ) -> Result<Self, MdpError> {
        let Dims {
            num_states: s,
            num_actions: a,
            horizon: h,
        } = dims;
        if s == 0 || a == 0 || h == 0 {
            return Err(MdpError::Dimension(format!(
                "num_states, num_actions and horizon must be positive (got S={s}, A={a}, H={h})"
            )));
        }
        if transitions.len() != h * s * a * s {
            return Err(MdpError::Dimension(format!(
                "transition table has {} entries, expected H*S*A*S = {}",
                transitions.len(),
                h * s * a * s
            )));
        }
        if rewards.len() != h * s * a {
            return Err(MdpError::Dimension(format!(
                "reward table has {} entries, expected H*S*A = {}",
                rewards.len(),
                h * s * a
            )));
        }
        if initial_dist.len() != s {
            return Err(MdpError::Dimension(format!(
                "initial distribution has {} entries, expected S = {s}",
                initial_dist.len()
            )));
        }
        Ok(Self {
            dims,
            transitions,
            rewards,
            initial_dist,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_states(&self) -> usize {
        self.dims.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.dims.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.dims.horizon
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    /// Replace the initial-state distribution (shape-checked only).
    pub fn with_initial_dist(mut self, dist: Vec<f64>) -> Result<Self, MdpError> {
        if dist.len() != self.dims.num_states {
            return Err(MdpError::Dimension(format!(
                "initial distribution has {} entries, expected S = {}",
                dist.len(),
                self.dims.num_states
            )));
        }
        self.initial_dist = dist;
        Ok(self)
    }

    /// `P_h(. | x, a)`.
    #[inline]
    pub fn transition_row(&self, h: usize, x: usize, a: usize) -> &[f64] {
        let s = self.dims.num_states;
        let start = self.dims.sa_index(h, x, a) * s;
        &self.transitions[start..start + s]
    }

    #[inline]
    pub fn reward(&self, h: usize, x: usize, a: usize) -> f64 {
        self.rewards[self.dims.sa_index(h, x, a)]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    /// Collect every violated invariant.
    pub fn validate(&self) -> ValidationReport {
        let Dims {
            num_states: s,
            num_actions: na,
            horizon: nh,
        } = self.dims;
        let mut violations = Vec::new();
        for h in 0..nh {
            for x in 0..s {
                for a in 0..na {
                    let r = self.reward(h, x, a);
                    if !(0.0..=1.0).contains(&r) {
                        violations.push(Violation::RewardOutOfRange { h, x, a, value: r });
                    }
                    let row = self.transition_row(h, x, a);
                    let mut sum = 0.0;
                    for (next, &p) in row.iter().enumerate() {
                        if !(0.0..=1.0).contains(&p) {
                            violations.push(Violation::ProbabilityOutOfRange {
                                h,
                                x,
                                a,
                                next,
                                value: p,
                            });
                        }
                        sum += p;
                    }
                    if !((sum - 1.0).abs() <= PROB_TOL) {
                        violations.push(Violation::RowNotStochastic { h, x, a, sum });
                    }
                }
            }
        }
        let mut sum = 0.0;
        for (x, &p) in self.initial_dist.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                violations.push(Violation::InitialProbabilityOutOfRange { x, value: p });
            }
            sum += p;
        }
        if !((sum - 1.0).abs() <= PROB_TOL) {
            violations.push(Violation::InitialNotStochastic { sum });
        }
        ValidationReport { violations }
    }

    fn check_index(&self, h: usize, x: usize, a: usize) -> Result<(), MdpError> {
        let d = self.dims;
        if h >= d.horizon {
            return Err(MdpError::Index {
                what: "step",
                index: h,
                limit: d.horizon,
            });
        }
        if x >= d.num_states {
            return Err(MdpError::Index {
                what: "state",
                index: x,
                limit: d.num_states,
            });
        }
        if a >= d.num_actions {
            return Err(MdpError::Index {
                what: "action",
                index: a,
                limit: d.num_actions,
            });
        }
        Ok(())
    }

    /// Draw `x_1` from the initial distribution with one uniform draw.
    pub fn sample_initial_state(&self, rng: &mut RngStream) -> usize {
        rng.categorical(&self.initial_dist)
    }

    /// One environment step at 0-based step `h`. The reward is the table
    /// entry and never depends on the sampled successor.
    pub fn step(
        &self,
        x: usize,
        a: usize,
        h: usize,
        rng: &mut RngStream,
    ) -> Result<(usize, f64), MdpError> {
        self.check_index(h, x, a)?;
        let next = rng.categorical(self.transition_row(h, x, a));
        Ok((next, self.reward(h, x, a)))
    }

    pub fn to_file(&self) -> MdpFile {
        let Dims {
            num_states: s,
            num_actions: na,
            horizon: nh,
        } = self.dims;
        let transitions = (0..nh)
            .map(|h| {
                (0..s)
                    .map(|x| (0..na).map(|a| self.transition_row(h, x, a).to_vec()).collect())
                    .collect()
            })
            .collect();
        let rewards = (0..nh)
            .map(|h| {
                (0..s)
                    .map(|x| (0..na).map(|a| self.reward(h, x, a)).collect())
                    .collect()
            })
            .collect();
        MdpFile {
            num_states: s,
            num_actions: na,
            horizon: nh,
            transitions,
            rewards,
            initial_dist: self.initial_dist.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("MDP tables serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, MdpError> {
        let file: MdpFile = serde_json::from_str(text)?;
        Self::try_from(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MdpError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| MdpError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// On-disk JSON layout. Nested arrays are `[h][x][a][x']` for transitions
/// and `[h][x][a]` for rewards, all 0-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpFile {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub transitions: Vec<Vec<Vec<Vec<f64>>>>,
    pub rewards: Vec<Vec<Vec<f64>>>,
    pub initial_dist: Vec<f64>,
}

impl TryFrom<MdpFile> for MdpSpec {
    type Error = MdpError;

    fn try_from(f: MdpFile) -> Result<Self, MdpError> {
        let dims = Dims::new(f.num_states, f.num_actions, f.horizon);
        let shape_err = |what: &str, at: String, got: usize, want: usize| {
            MdpError::Dimension(format!("{what}{at} has length {got}, expected {want}"))
        };
        if f.transitions.len() != f.horizon {
            return Err(shape_err("transitions", String::new(), f.transitions.len(), f.horizon));
        }
        if f.rewards.len() != f.horizon {
            return Err(shape_err("rewards", String::new(), f.rewards.len(), f.horizon));
        }
        let mut transitions = Vec::with_capacity(dims.sa_len() * f.num_states);
        for (h, per_h) in f.transitions.iter().enumerate() {
            if per_h.len() != f.num_states {
                return Err(shape_err("transitions", format!("[{h}]"), per_h.len(), f.num_states));
            }
            for (x, per_x) in per_h.iter().enumerate() {
                if per_x.len() != f.num_actions {
                    return Err(shape_err(
                        "transitions",
                        format!("[{h}][{x}]"),
                        per_x.len(),
                        f.num_actions,
                    ));
                }
                for (a, row) in per_x.iter().enumerate() {
                    if row.len() != f.num_states {
                        return Err(shape_err(
                            "transitions",
                            format!("[{h}][{x}][{a}]"),
                            row.len(),
                            f.num_states,
                        ));
                    }
                    transitions.extend_from_slice(row);
                }
            }
        }
        let mut rewards = Vec::with_capacity(dims.sa_len());
        for (h, per_h) in f.rewards.iter().enumerate() {
            if per_h.len() != f.num_states {
                return Err(shape_err("rewards", format!("[{h}]"), per_h.len(), f.num_states));
            }
            for (x, per_x) in per_h.iter().enumerate() {
                if per_x.len() != f.num_actions {
                    return Err(shape_err(
                        "rewards",
                        format!("[{h}][{x}]"),
                        per_x.len(),
                        f.num_actions,
                    ));
                }
                rewards.extend_from_slice(per_x);
            }
        }
        MdpSpec::new(dims, transitions, rewards, f.initial_dist)
    }
}

/// A single violated invariant, with 0-based coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RewardOutOfRange {
        h: usize,
        x: usize,
        a: usize,
        value: f64,
    },
    ProbabilityOutOfRange {
        h: usize,
        x: usize,
        a: usize,
        next: usize,
        value: f64,
    },
    RowNotStochastic {
        h: usize,
        x: usize,
        a: usize,
        sum: f64,
    },
    InitialProbabilityOutOfRange {
        x: usize,
        value: f64,
    },
    InitialNotStochastic {
        sum: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::RewardOutOfRange { h, x, a, value } => write!(
                f,
                "reward out of [0,1] at (h={}, x{}, a{}): {value}",
                h + 1,
                x + 1,
                a + 1
            ),
            Violation::ProbabilityOutOfRange {
                h,
                x,
                a,
                next,
                value,
            } => write!(
                f,
                "probability out of [0,1] at P_{}(x{} | x{}, a{}): {value}",
                h + 1,
                next + 1,
                x + 1,
                a + 1
            ),
            Violation::RowNotStochastic { h, x, a, sum } => write!(
                f,
                "row not stochastic at (h={}, x{}, a{}): sums to {sum}",
                h + 1,
                x + 1,
                a + 1
            ),
            Violation::InitialProbabilityOutOfRange { x, value } => {
                write!(f, "initial probability out of [0,1] at x{}: {value}", x + 1)
            }
            Violation::InitialNotStochastic { sum } => {
                write!(f, "initial distribution not stochastic: sums to {sum}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}
