//! Exact finite-horizon dynamic programming and a brute-force oracle.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{Dims, MdpSpec};

/// Default cap on the number of policies [`brute_force_optimal`] will enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("policy enumeration needs {policies} policies (A^(S*H) = {actions}^{exponent}), cap is {cap}")]
    TooLarge {
        policies: String,
        actions: usize,
        exponent: usize,
        cap: u128,
    },
    #[error("policy shape {got:?} does not match MDP shape {want:?}")]
    PolicyShape { got: (usize, usize), want: (usize, usize) },
    #[error("policy picks action {action} at (h={h}, x={x}) but only {num_actions} actions exist")]
    PolicyAction {
        h: usize,
        x: usize,
        action: usize,
        num_actions: usize,
    },
    #[error("value table JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("value table shape: {0}")]
    Shape(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// `Q[h][x][a]` for `h` in `0..H` and `V[h][x]` for `h` in `0..=H`, where
/// row `H` is the terminal zero row.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    dims: Dims,
    q: Vec<f64>,
    v: Vec<f64>,
}

impl ValueTables {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            q: vec![0.0; dims.sa_len()],
            v: vec![0.0; (dims.horizon + 1) * dims.num_states],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn q(&self, h: usize, x: usize, a: usize) -> f64 {
        self.q[self.dims.sa_index(h, x, a)]
    }

    #[inline]
    pub fn v(&self, h: usize, x: usize) -> f64 {
        self.v[h * self.dims.num_states + x]
    }

    #[inline]
    pub fn q_row(&self, h: usize, x: usize) -> &[f64] {
        let start = self.dims.sa_index(h, x, 0);
        &self.q[start..start + self.dims.num_actions]
    }

    /// `V[h][.]`, including `h = H`.
    pub fn v_row(&self, h: usize) -> &[f64] {
        let s = self.dims.num_states;
        &self.v[h * s..(h + 1) * s]
    }

    #[inline]
    fn set_q(&mut self, h: usize, x: usize, a: usize, value: f64) {
        let i = self.dims.sa_index(h, x, a);
        self.q[i] = value;
    }

    #[inline]
    fn set_v(&mut self, h: usize, x: usize, value: f64) {
        self.v[h * self.dims.num_states + x] = value;
    }

    /// Greedy policy, ties toward the smallest action index.
    pub fn greedy_policy(&self) -> DeterministicPolicy {
        let Dims {
            num_states: s,
            horizon: nh,
            ..
        } = self.dims;
        let mut actions = Vec::with_capacity(nh * s);
        for h in 0..nh {
            for x in 0..s {
                actions.push(argmax_first(self.q_row(h, x)));
            }
        }
        DeterministicPolicy {
            num_states: s,
            horizon: nh,
            actions,
        }
    }

    /// Largest absolute difference over both tables.
    pub fn max_abs_diff(&self, other: &ValueTables) -> f64 {
        assert_eq!(self.dims, other.dims, "value tables of different shapes");
        self.q
            .iter()
            .zip(&other.q)
            .chain(self.v.iter().zip(&other.v))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_file(&self) -> ValueTablesFile {
        let Dims {
            num_states: s,
            num_actions: na,
            horizon: nh,
        } = self.dims;
        ValueTablesFile {
            num_states: s,
            num_actions: na,
            horizon: nh,
            q: (0..nh)
                .map(|h| (0..s).map(|x| self.q_row(h, x).to_vec()).collect())
                .collect(),
            v: (0..=nh).map(|h| self.v_row(h).to_vec()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("value tables serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SolverError> {
        let file: ValueTablesFile = serde_json::from_str(text)?;
        Self::try_from(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SolverError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| SolverError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Build from raw flat tables (used by learners when dumping state).
    pub(crate) fn from_parts(dims: Dims, q: Vec<f64>, v: Vec<f64>) -> Self {
        debug_assert_eq!(q.len(), dims.sa_len());
        debug_assert_eq!(v.len(), (dims.horizon + 1) * dims.num_states);
        Self { dims, q, v }
    }
}

/// JSON layout shared by solver output and learner dumps: `q[h][x][a]`
/// (H rows) and `v[h][x]` (H + 1 rows, the last one terminal).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueTablesFile {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub q: Vec<Vec<Vec<f64>>>,
    pub v: Vec<Vec<f64>>,
}

impl TryFrom<ValueTablesFile> for ValueTables {
    type Error = SolverError;

    fn try_from(f: ValueTablesFile) -> Result<Self, SolverError> {
        let dims = Dims::new(f.num_states, f.num_actions, f.horizon);
        let bad = |msg: String| SolverError::Shape(msg);
        if f.q.len() != f.horizon || f.v.len() != f.horizon + 1 {
            return Err(bad(format!(
                "expected {} q rows and {} v rows, got {} and {}",
                f.horizon,
                f.horizon + 1,
                f.q.len(),
                f.v.len()
            )));
        }
        let mut q = Vec::with_capacity(dims.sa_len());
        for per_h in &f.q {
            if per_h.len() != f.num_states {
                return Err(bad("q row has wrong state count".into()));
            }
            for row in per_h {
                if row.len() != f.num_actions {
                    return Err(bad("q row has wrong action count".into()));
                }
                q.extend_from_slice(row);
            }
        }
        let mut v = Vec::with_capacity((f.horizon + 1) * f.num_states);
        for row in &f.v {
            if row.len() != f.num_states {
                return Err(bad("v row has wrong state count".into()));
            }
            v.extend_from_slice(row);
        }
        Ok(Self { dims, q, v })
    }
}

/// `pi[h][x]`, one action per step and state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicPolicy {
    num_states: usize,
    horizon: usize,
    actions: Vec<usize>,
}

impl DeterministicPolicy {
    pub fn new(num_states: usize, horizon: usize, actions: Vec<usize>) -> Self {
        assert_eq!(actions.len(), num_states * horizon, "policy table size");
        Self {
            num_states,
            horizon,
            actions,
        }
    }

    /// The same action everywhere.
    pub fn constant(num_states: usize, horizon: usize, action: usize) -> Self {
        Self::new(num_states, horizon, vec![action; num_states * horizon])
    }

    #[inline]
    pub fn action(&self, h: usize, x: usize) -> usize {
        self.actions[h * self.num_states + x]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }
}

impl fmt::Display for DeterministicPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for h in 0..self.horizon {
            write!(f, "h={}:", h + 1)?;
            for x in 0..self.num_states {
                write!(f, " x{}->a{}", x + 1, self.action(h, x) + 1)?;
            }
            if h + 1 < self.horizon {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// First index of the maximum. NaN entries never win.
#[inline]
pub fn argmax_first(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &value) in row.iter().enumerate().skip(1) {
        if value > row[best] {
            best = i;
        }
    }
    best
}

#[inline]
fn expected_next(spec: &MdpSpec, h: usize, x: usize, a: usize, v_next: &[f64]) -> f64 {
    spec.transition_row(h, x, a)
        .iter()
        .zip(v_next)
        .map(|(p, v)| p * v)
        .sum()
}

/// Backward induction for `Q*` and `V*`.
pub fn solve_optimal(spec: &MdpSpec) -> ValueTables {
    let dims = spec.dims();
    let Dims {
        num_states: s,
        num_actions: na,
        horizon: nh,
    } = dims;
    let mut out = ValueTables::zeros(dims);
    for h in (0..nh).rev() {
        let v_next = out.v_row(h + 1).to_vec();
        for x in 0..s {
            let mut best = f64::NEG_INFINITY;
            for a in 0..na {
                let q = spec.reward(h, x, a) + expected_next(spec, h, x, a, &v_next);
                out.set_q(h, x, a, q);
                if q > best {
                    best = q;
                }
            }
            out.set_v(h, x, best);
        }
    }
    out
}

/// Exact `Q^pi` and `V^pi` for a deterministic step-dependent policy.
pub fn evaluate_policy(
    spec: &MdpSpec,
    policy: &DeterministicPolicy,
) -> Result<ValueTables, SolverError> {
    let dims = spec.dims();
    check_policy(dims, policy)?;
    let Dims {
        num_states: s,
        num_actions: na,
        horizon: nh,
    } = dims;
    let mut out = ValueTables::zeros(dims);
    for h in (0..nh).rev() {
        let v_next = out.v_row(h + 1).to_vec();
        for x in 0..s {
            for a in 0..na {
                let q = spec.reward(h, x, a) + expected_next(spec, h, x, a, &v_next);
                out.set_q(h, x, a, q);
            }
            let chosen = out.q(h, x, policy.action(h, x));
            out.set_v(h, x, chosen);
        }
    }
    Ok(out)
}

/// `V^pi_1(x)` only, without materialising the Q table.
pub fn policy_value_at_start(
    spec: &MdpSpec,
    policy: &DeterministicPolicy,
) -> Result<Vec<f64>, SolverError> {
    let dims = spec.dims();
    check_policy(dims, policy)?;
    let s = dims.num_states;
    let mut v_next = vec![0.0; s];
    let mut v = vec![0.0; s];
    for h in (0..dims.horizon).rev() {
        for (x, slot) in v.iter_mut().enumerate() {
            let a = policy.action(h, x);
            *slot = spec.reward(h, x, a) + expected_next(spec, h, x, a, &v_next);
        }
        std::mem::swap(&mut v, &mut v_next);
    }
    Ok(v_next)
}

fn check_policy(dims: Dims, policy: &DeterministicPolicy) -> Result<(), SolverError> {
    if (policy.horizon, policy.num_states) != (dims.horizon, dims.num_states) {
        return Err(SolverError::PolicyShape {
            got: (policy.horizon, policy.num_states),
            want: (dims.horizon, dims.num_states),
        });
    }
    for h in 0..dims.horizon {
        for x in 0..dims.num_states {
            let action = policy.action(h, x);
            if action >= dims.num_actions {
                return Err(SolverError::PolicyAction {
                    h,
                    x,
                    action,
                    num_actions: dims.num_actions,
                });
            }
        }
    }
    Ok(())
}

/// Number of deterministic step-dependent policies, `A^(S*H)`, or `None`
/// on overflow.
pub fn policy_count(dims: Dims) -> Option<u128> {
    let exponent = u32::try_from(dims.num_states * dims.horizon).ok()?;
    (dims.num_actions as u128).checked_pow(exponent)
}

/// Optimal tables by exhaustive policy enumeration.
///
/// Every deterministic step-dependent policy is evaluated with
/// [`evaluate_policy`] and the pointwise maximum of `Q^pi` and `V^pi` is
/// returned. Because an optimal deterministic policy exists, the maximum
/// equals `Q*`/`V*`; maximising `Q^pi` also covers actions an optimal policy
/// would never take, since the continuation after them ranges over all
/// policies too.
pub fn brute_force_optimal(spec: &MdpSpec, cap: u128) -> Result<ValueTables, SolverError> {
    let dims = spec.dims();
    let exponent = dims.num_states * dims.horizon;
    let count = policy_count(dims);
    match count {
        Some(n) if n <= cap => {}
        _ => {
            return Err(SolverError::TooLarge {
                policies: count.map_or_else(|| "more than 2^128".to_string(), |n| n.to_string()),
                actions: dims.num_actions,
                exponent,
                cap,
            })
        }
    }

    let mut digits = vec![0usize; exponent];
    let mut best: Option<ValueTables> = None;
    loop {
        let policy = DeterministicPolicy::new(dims.num_states, dims.horizon, digits.clone());
        let values = evaluate_policy(spec, &policy)?;
        match best.as_mut() {
            None => best = Some(values),
            Some(acc) => {
                for (b, v) in acc.q.iter_mut().zip(&values.q) {
                    *b = b.max(*v);
                }
                for (b, v) in acc.v.iter_mut().zip(&values.v) {
                    *b = b.max(*v);
                }
            }
        }
        // Mixed-radix increment over the policy table.
        let mut i = 0;
        loop {
            if i == exponent {
                return Ok(best.expect("at least one policy"));
            }
            digits[i] += 1;
            if digits[i] < dims.num_actions {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}
