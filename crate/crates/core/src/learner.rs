//! Episodic Q-learning with UCB-Hoeffding bonuses.
//!
//! Three variants share one update rule
//!
//! ```text
//! t = N_h(x, a) += 1
//! Q_h(x, a) <- (1 - alpha_t) Q_h(x, a) + alpha_t (r + V_{h+1}(x') + b_t)
//! alpha_t = (H + 1) / (H + t),   b_t = c * sqrt(H^3 * log_term / t)
//! ```
//!
//! and differ in initialization and in where updates are allowed:
//!
//! * [`Variant::Ucbh`]: `Q = H` everywhere, updates everywhere, followed by
//!   `V_h(x) <- min(H, max_a Q_h(x, a))`. Log term `ln(S A T / p)`, `T = K H`.
//! * [`Variant::MaxOpt`]: `Q = Q*` except `Q_1(x1, a1) = H`; only that one
//!   entry is ever updated and `V_2 = V*_2` is read from a cache. Log term
//!   `ln(K / p)`.
//! * [`Variant::MaxOptNoA2`]: the same initialization, but updates and the
//!   `V` refresh run at every triple with per-triple counters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::Dims;
use crate::rng::RngStream;
use crate::solver::{argmax_first, DeterministicPolicy, ValueTables};

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("{0} needs reference optimal tables and a special (state, action) pair")]
    MissingReference(Variant),
    #[error("failure probability p must lie in (0, 1), got {0}")]
    Probability(f64),
    #[error("bonus constant c must be finite and non-negative, got {0}")]
    Constant(f64),
    #[error("episode budget K must be at least 1")]
    Episodes,
    #[error("visit count t must be at least 1")]
    ZeroCount,
    #[error("reference tables have shape {got:?}, learner expects {want:?}")]
    Shape { got: Dims, want: Dims },
    #[error("special pair (x{}, a{}) is outside the state/action space", .state + 1, .action + 1)]
    Special { state: usize, action: usize },
    #[error("transition index out of range: {0}")]
    Index(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "UCBH")]
    Ucbh,
    #[serde(rename = "MAXOPT")]
    MaxOpt,
    #[serde(rename = "MAXOPT_NO_A2")]
    MaxOptNoA2,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Ucbh, Variant::MaxOpt, Variant::MaxOptNoA2];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Ucbh => "UCBH",
            Variant::MaxOpt => "MAXOPT",
            Variant::MaxOptNoA2 => "MAXOPT_NO_A2",
        }
    }

    pub fn is_max_opt(self) -> bool {
        !matches!(self, Variant::Ucbh)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "UCBH" => Ok(Variant::Ucbh),
            "MAXOPT" => Ok(Variant::MaxOpt),
            "MAXOPT_NO_A2" => Ok(Variant::MaxOptNoA2),
            other => Err(format!(
                "unknown variant {other:?} (expected UCBH, MAXOPT or MAXOPT_NO_A2)"
            )),
        }
    }
}

/// How argmax ties are resolved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    #[default]
    SmallestIndex,
    SeededRandom,
}

/// Which logarithmic confidence term the bonus uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogTerm {
    /// `ln(SAT/p)` for UCBH, `ln(K/p)` for the Max-Opt variants.
    #[default]
    Auto,
    /// Always `ln(SAT/p)` with `T = K H`.
    StateActionTime,
    /// Always `ln(K/p)`.
    Episodes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    /// Planned episode budget `K`.
    pub episodes: usize,
    /// Failure probability `p`, taken at face value.
    pub p: f64,
    /// Bonus constant `c`.
    pub c: f64,
    #[serde(default)]
    pub log_term: LogTerm,
    #[serde(default)]
    pub tie_rule: TieRule,
}

impl LearnerParams {
    pub fn new(episodes: usize, p: f64, c: f64) -> Self {
        Self {
            episodes,
            p,
            c,
            log_term: LogTerm::Auto,
            tie_rule: TieRule::SmallestIndex,
        }
    }
}

/// The designated `(x1, a1)` pair at step 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialPair {
    pub state: usize,
    pub action: usize,
}

impl SpecialPair {
    pub fn new(state: usize, action: usize) -> Self {
        Self { state, action }
    }
}

impl Default for SpecialPair {
    fn default() -> Self {
        Self::new(0, 0)
    }
}

/// One observed step. `h` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub x: usize,
    pub a: usize,
    pub h: usize,
    pub r: f64,
    pub x_next: usize,
}

/// Learning rate `(H + 1) / (H + t)`.
pub fn alpha(t: u64, horizon: usize) -> Result<f64, LearnerError> {
    if t == 0 {
        return Err(LearnerError::ZeroCount);
    }
    let h = horizon as f64;
    Ok((h + 1.0) / (h + t as f64))
}

/// Bonus `c * sqrt(H^3 * log_term / t)`.
pub fn bonus_value(c: f64, horizon: usize, log_term: f64, t: u64) -> Result<f64, LearnerError> {
    if t == 0 {
        return Err(LearnerError::ZeroCount);
    }
    let h = horizon as f64;
    Ok(c * (h * h * h * log_term / t as f64).sqrt())
}

/// Unrolled update weights `(alpha_t^0, alpha_t^1, ..., alpha_t^t)`:
/// `alpha_t^0 = prod_{j=1..t} (1 - alpha_j)` and
/// `alpha_t^i = alpha_i * prod_{j=i+1..t} (1 - alpha_j)`.
pub fn alpha_weights(t: u64, horizon: usize) -> Vec<f64> {
    let n = t as usize;
    let mut weights = vec![0.0; n + 1];
    // tail = prod_{j=i+1..t} (1 - alpha_j), built from the top down.
    let mut tail = 1.0;
    for i in (1..=n).rev() {
        let a_i = alpha(i as u64, horizon).expect("i >= 1");
        weights[i] = a_i * tail;
        tail *= 1.0 - a_i;
    }
    weights[0] = tail;
    weights
}

/// Tabular learner state for one run.
#[derive(Debug, Clone)]
pub struct Learner {
    variant: Variant,
    dims: Dims,
    params: LearnerParams,
    log_term: f64,
    special: Option<SpecialPair>,
    // H x S x A
    q: Vec<f64>,
    // (H + 1) x S; the last row is zero.
    v: Vec<f64>,
    counts: Vec<u64>,
}

impl Learner {
    /// Create a learner. Max-Opt variants need `q_star` and `special`;
    /// UCBH ignores them.
    pub fn new(
        variant: Variant,
        dims: Dims,
        params: LearnerParams,
        q_star: Option<&ValueTables>,
        special: Option<SpecialPair>,
    ) -> Result<Self, LearnerError> {
        if !(params.p > 0.0 && params.p < 1.0) {
            return Err(LearnerError::Probability(params.p));
        }
        if !(params.c.is_finite() && params.c >= 0.0) {
            return Err(LearnerError::Constant(params.c));
        }
        if params.episodes == 0 {
            return Err(LearnerError::Episodes);
        }
        let Dims {
            num_states: s,
            num_actions: na,
            horizon: nh,
        } = dims;
        let big_h = nh as f64;

        let use_episode_log = match params.log_term {
            LogTerm::Auto => variant.is_max_opt(),
            LogTerm::StateActionTime => false,
            LogTerm::Episodes => true,
        };
        let log_term = if use_episode_log {
            (params.episodes as f64 / params.p).ln()
        } else {
            let total_steps = (params.episodes * nh) as f64;
            ((s * na) as f64 * total_steps / params.p).ln()
        };

        let (q, special) = match variant {
            Variant::Ucbh => (vec![big_h; dims.sa_len()], None),
            Variant::MaxOpt | Variant::MaxOptNoA2 => {
                let (Some(q_star), Some(special)) = (q_star, special) else {
                    return Err(LearnerError::MissingReference(variant));
                };
                if q_star.dims() != dims {
                    return Err(LearnerError::Shape {
                        got: q_star.dims(),
                        want: dims,
                    });
                }
                if special.state >= s || special.action >= na {
                    return Err(LearnerError::Special {
                        state: special.state,
                        action: special.action,
                    });
                }
                let mut q = Vec::with_capacity(dims.sa_len());
                for h in 0..nh {
                    for x in 0..s {
                        q.extend_from_slice(q_star.q_row(h, x));
                    }
                }
                q[dims.sa_index(0, special.state, special.action)] = big_h;
                (q, Some(special))
            }
        };

        // V_h(x) = min(H, max_a Q_h(x, a)), which for the Max-Opt variants
        // is V*_h(x) at every h >= 2.
        let mut v = vec![0.0; (nh + 1) * s];
        for h in 0..nh {
            for x in 0..s {
                let start = dims.sa_index(h, x, 0);
                let best = q[start..start + na].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                v[h * s + x] = best.min(big_h);
            }
        }

        Ok(Self {
            variant,
            dims,
            params,
            log_term,
            special,
            q,
            v,
            counts: vec![0; dims.sa_len()],
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn params(&self) -> &LearnerParams {
        &self.params
    }

    /// The log term in use (`iota` or `iota'`).
    pub fn log_term(&self) -> f64 {
        self.log_term
    }

    pub fn special(&self) -> Option<SpecialPair> {
        self.special
    }

    #[inline]
    pub fn q(&self, h: usize, x: usize, a: usize) -> f64 {
        self.q[self.dims.sa_index(h, x, a)]
    }

    #[inline]
    pub fn q_row(&self, h: usize, x: usize) -> &[f64] {
        let start = self.dims.sa_index(h, x, 0);
        &self.q[start..start + self.dims.num_actions]
    }

    /// `V[h][x]` for `h` in `0..=H`.
    #[inline]
    pub fn v(&self, h: usize, x: usize) -> f64 {
        self.v[h * self.dims.num_states + x]
    }

    #[inline]
    pub fn visits(&self, h: usize, x: usize, a: usize) -> u64 {
        self.counts[self.dims.sa_index(h, x, a)]
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q
    }

    /// `b_t` with this learner's constants.
    pub fn bonus(&self, t: u64) -> Result<f64, LearnerError> {
        bonus_value(self.params.c, self.dims.horizon, self.log_term, t)
    }

    /// `beta_t = 2 * sum_{i=1..t} alpha_t^i b_i`.
    pub fn beta(&self, t: u64) -> Result<f64, LearnerError> {
        if t == 0 {
            return Err(LearnerError::ZeroCount);
        }
        let weights = alpha_weights(t, self.dims.horizon);
        let mut sum = 0.0;
        for (i, w) in weights.iter().enumerate().skip(1) {
            sum += w * self.bonus(i as u64)?;
        }
        Ok(2.0 * sum)
    }

    /// Greedy action at `(x, h)` under the configured tie rule. `rng` is
    /// only consumed on ties under [`TieRule::SeededRandom`].
    pub fn select_action(&self, x: usize, h: usize, rng: &mut RngStream) -> usize {
        let row = self.q_row(h, x);
        match self.params.tie_rule {
            TieRule::SmallestIndex => argmax_first(row),
            TieRule::SeededRandom => {
                let best = row[argmax_first(row)];
                let tied: Vec<usize> = (0..row.len()).filter(|&a| row[a] == best).collect();
                if tied.len() == 1 {
                    tied[0]
                } else {
                    tied[rng.below(tied.len())]
                }
            }
        }
    }

    /// Greedy policy with ties toward the smallest index.
    pub fn greedy_policy(&self) -> DeterministicPolicy {
        let Dims {
            num_states: s,
            horizon: nh,
            ..
        } = self.dims;
        let actions = (0..nh)
            .flat_map(|h| (0..s).map(move |x| (h, x)))
            .map(|(h, x)| argmax_first(self.q_row(h, x)))
            .collect();
        DeterministicPolicy::new(s, nh, actions)
    }

    /// Greedy policy under the configured tie rule.
    pub fn snapshot_policy(&self, rng: &mut RngStream) -> DeterministicPolicy {
        match self.params.tie_rule {
            TieRule::SmallestIndex => self.greedy_policy(),
            TieRule::SeededRandom => {
                let Dims {
                    num_states: s,
                    horizon: nh,
                    ..
                } = self.dims;
                let mut actions = Vec::with_capacity(nh * s);
                for h in 0..nh {
                    for x in 0..s {
                        actions.push(self.select_action(x, h, rng));
                    }
                }
                DeterministicPolicy::new(s, nh, actions)
            }
        }
    }

    /// Whether this variant updates at `(x, a, h)`.
    pub fn updates_at(&self, x: usize, a: usize, h: usize) -> bool {
        match (self.variant, self.special) {
            (Variant::MaxOpt, Some(sp)) => h == 0 && x == sp.state && a == sp.action,
            _ => true,
        }
    }

    /// Apply one transition. Returns `Ok(false)` when the variant ignores it
    /// (Max-Opt outside the special triple).
    pub fn observe(&mut self, tr: &Transition) -> Result<bool, LearnerError> {
        let Dims {
            num_states: s,
            num_actions: na,
            horizon: nh,
        } = self.dims;
        if tr.h >= nh || tr.x >= s || tr.a >= na || tr.x_next >= s {
            return Err(LearnerError::Index(format!(
                "(h={}, x={}, a={}, x'={}) with H={nh}, S={s}, A={na}",
                tr.h, tr.x, tr.a, tr.x_next
            )));
        }
        if !self.updates_at(tr.x, tr.a, tr.h) {
            return Ok(false);
        }
        let i = self.dims.sa_index(tr.h, tr.x, tr.a);
        self.counts[i] += 1;
        let t = self.counts[i];
        let lr = alpha(t, nh)?;
        let target = tr.r + self.v(tr.h + 1, tr.x_next) + self.bonus(t)?;
        self.q[i] = (1.0 - lr) * self.q[i] + lr * target;
        debug_assert!(self.q[i].is_finite());

        if self.variant != Variant::MaxOpt {
            let best = self.q_row(tr.h, tr.x).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            self.v[tr.h * s + tr.x] = best.min(nh as f64);
        }
        Ok(true)
    }

    /// Current tables in the solver's JSON layout.
    pub fn value_tables(&self) -> ValueTables {
        ValueTables::from_parts(self.dims, self.q.clone(), self.v.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::gridworld_1d;
    use crate::solver::solve_optimal;

    const K: usize = 500;
    const P: f64 = 0.05;
    const C: f64 = 0.1;

    fn default_params() -> LearnerParams {
        LearnerParams::new(K, P, C)
    }

    fn maxopt(variant: Variant) -> Learner {
        let spec = gridworld_1d();
        let q_star = solve_optimal(&spec);
        Learner::new(
            variant,
            spec.dims(),
            default_params(),
            Some(&q_star),
            Some(SpecialPair::default()),
        )
        .unwrap()
    }

    fn ucbh() -> Learner {
        Learner::new(Variant::Ucbh, gridworld_1d().dims(), default_params(), None, None).unwrap()
    }

    #[test]
    fn maxopt_initialization() {
        let l = maxopt(Variant::MaxOpt);
        assert_eq!(l.q(0, 0, 0), 3.0);
        assert_eq!(l.q(0, 0, 1), 2.0);
        assert_eq!(l.q(1, 1, 1), 2.0);
        assert_eq!(l.visits(0, 0, 0), 0);
        // V_2 = V*_2
        let v_star = solve_optimal(&gridworld_1d());
        for h in 1..=3 {
            for x in 0..3 {
                assert_eq!(l.v(h, x), v_star.v(h, x));
            }
        }
    }

    #[test]
    fn ucbh_initialization() {
        let l = ucbh();
        assert_eq!(l.q_table().len(), 18);
        assert!(l.q_table().iter().all(|&q| q == 3.0));
        assert!(l.counts.iter().all(|&n| n == 0));
    }

    #[test]
    fn log_terms() {
        let l = maxopt(Variant::MaxOpt);
        assert!((l.log_term() - 10_000f64.ln()).abs() < 1e-12);
        assert!((l.log_term() - 9.2103).abs() < 1e-4);
        // S A T / p = 3 * 2 * 1500 / 0.05
        assert!((ucbh().log_term() - 180_000f64.ln()).abs() < 1e-12);

        let mut params = default_params();
        params.log_term = LogTerm::Episodes;
        let l = Learner::new(Variant::Ucbh, gridworld_1d().dims(), params, None, None).unwrap();
        assert!((l.log_term() - 10_000f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn creation_errors() {
        let dims = gridworld_1d().dims();
        assert_eq!(
            Learner::new(Variant::MaxOpt, dims, default_params(), None, None).unwrap_err(),
            LearnerError::MissingReference(Variant::MaxOpt)
        );
        for p in [0.0, 1.0, -0.1, f64::NAN] {
            let params = LearnerParams::new(K, p, C);
            assert!(matches!(
                Learner::new(Variant::Ucbh, dims, params, None, None),
                Err(LearnerError::Probability(_))
            ));
        }
        let q_star = solve_optimal(&gridworld_1d());
        assert!(matches!(
            Learner::new(
                Variant::MaxOpt,
                dims,
                default_params(),
                Some(&q_star),
                Some(SpecialPair::new(3, 0))
            ),
            Err(LearnerError::Special { .. })
        ));
        let other = solve_optimal(&crate::envs::chain_mdp(4, 3));
        assert!(matches!(
            Learner::new(
                Variant::MaxOpt,
                dims,
                default_params(),
                Some(&other),
                Some(SpecialPair::default())
            ),
            Err(LearnerError::Shape { .. })
        ));
    }

    #[test]
    fn select_action_examples() {
        let l = maxopt(Variant::MaxOpt);
        let mut rng = RngStream::new(0, 0);
        assert_eq!(l.select_action(0, 0, &mut rng), 0);
        assert_eq!(l.select_action(1, 1, &mut rng), 1);
    }

    #[test]
    fn seeded_random_ties_cover_both_actions() {
        let mut params = default_params();
        params.tie_rule = TieRule::SeededRandom;
        let l = Learner::new(Variant::Ucbh, gridworld_1d().dims(), params, None, None).unwrap();
        let mut rng = RngStream::new(1, 2);
        let picks: Vec<usize> = (0..64).map(|_| l.select_action(0, 0, &mut rng)).collect();
        assert!(picks.contains(&0) && picks.contains(&1));
        let mut again = RngStream::new(1, 2);
        let repeat: Vec<usize> = (0..64).map(|_| l.select_action(0, 0, &mut again)).collect();
        assert_eq!(picks, repeat);
    }

    #[test]
    fn alpha_values() {
        assert_eq!(alpha(1, 3).unwrap(), 1.0);
        assert_eq!(alpha(1, 17).unwrap(), 1.0);
        assert!((alpha(2, 3).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(alpha(0, 3), Err(LearnerError::ZeroCount));
        let mut prev = 1.0;
        for t in 2..10_000 {
            let a = alpha(t, 3).unwrap();
            assert!(a < prev);
            prev = a;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn bonus_values() {
        let l = maxopt(Variant::MaxOpt);
        let b1 = l.bonus(1).unwrap();
        assert!((b1 - 0.1 * (27.0 * 10_000f64.ln()).sqrt()).abs() < 1e-12);
        assert!((b1 - 1.5770).abs() < 1e-4);
        assert!((l.bonus(4).unwrap() - b1 / 2.0).abs() < 1e-12);
        assert_eq!(l.bonus(0), Err(LearnerError::ZeroCount));
        assert_eq!(bonus_value(0.0, 3, 9.0, 5).unwrap(), 0.0);
    }

    #[test]
    fn alpha_weight_examples() {
        assert_eq!(alpha_weights(0, 3), vec![1.0]);
        let w = alpha_weights(2, 3);
        assert_eq!(w[0], 0.0);
        assert!((w[1] - 0.2).abs() < 1e-15);
        assert!((w[2] - 0.8).abs() < 1e-15);
        for t in 1..200 {
            let w = alpha_weights(t, 5);
            assert_eq!(w[0], 0.0);
            assert!((w[1..].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_examples() {
        let l = maxopt(Variant::MaxOpt);
        let b1 = l.bonus(1).unwrap();
        assert!((l.beta(1).unwrap() - 2.0 * b1).abs() < 1e-12);
        assert!((l.beta(1).unwrap() - 3.1540).abs() < 1e-3);
        for t in 1..300u64 {
            let half = l.beta(t).unwrap() / 2.0;
            let base = C * (27.0 * l.log_term() / t as f64).sqrt();
            assert!(half >= base - 1e-12 && half <= 2.0 * base + 1e-12, "t={t}");
        }
        let mut params = default_params();
        params.c = 0.0;
        let l = Learner::new(Variant::Ucbh, gridworld_1d().dims(), params, None, None).unwrap();
        assert_eq!(l.beta(7).unwrap(), 0.0);
    }

    #[test]
    fn maxopt_first_update() {
        let mut l = maxopt(Variant::MaxOpt);
        let b1 = l.bonus(1).unwrap();
        let updated = l
            .observe(&Transition {
                x: 0,
                a: 0,
                h: 0,
                r: 0.0,
                x_next: 0,
            })
            .unwrap();
        assert!(updated);
        assert_eq!(l.visits(0, 0, 0), 1);
        assert!((l.q(0, 0, 0) - (1.0 + b1)).abs() < 1e-12);
        assert!((l.q(0, 0, 0) - 2.5770).abs() < 1e-4);
    }

    #[test]
    fn maxopt_ignores_other_triples() {
        let mut l = maxopt(Variant::MaxOpt);
        let before = l.q_table().to_vec();
        for tr in [
            Transition { x: 1, a: 1, h: 1, r: 1.0, x_next: 2 },
            Transition { x: 0, a: 0, h: 1, r: 0.0, x_next: 0 },
            Transition { x: 0, a: 1, h: 0, r: 0.0, x_next: 1 },
        ] {
            assert!(!l.observe(&tr).unwrap());
        }
        assert_eq!(l.q_table(), &before[..]);
        assert!(l.counts.iter().all(|&n| n == 0));
    }

    #[test]
    fn ucbh_first_update_erases_prior() {
        let mut l = ucbh();
        let b1 = l.bonus(1).unwrap();
        l.observe(&Transition { x: 1, a: 1, h: 2, r: 1.0, x_next: 2 }).unwrap();
        // V_{H+1} = 0
        assert!((l.q(2, 1, 1) - (1.0 + b1)).abs() < 1e-12);
        assert_eq!(l.v(2, 1), 3.0);
        l.observe(&Transition { x: 0, a: 0, h: 0, r: 0.0, x_next: 0 }).unwrap();
        assert!((l.q(0, 0, 0) - (3.0 + b1)).abs() < 1e-12);
    }

    #[test]
    fn no_a2_updates_everywhere() {
        let mut l = maxopt(Variant::MaxOptNoA2);
        assert!(l.observe(&Transition { x: 1, a: 1, h: 1, r: 1.0, x_next: 2 }).unwrap());
        assert_eq!(l.visits(1, 1, 1), 1);
        // Q*_2(x2, a2) = 2 is replaced by r + V_3(x3) + b_1 = 1 + 1 + b_1.
        let b1 = l.bonus(1).unwrap();
        assert!((l.q(1, 1, 1) - (2.0 + b1)).abs() < 1e-12);
        // V refresh clips at H.
        assert_eq!(l.v(1, 1), 3.0);
    }

    #[test]
    fn greedy_policy_examples() {
        let mut l = maxopt(Variant::MaxOpt);
        let pi = l.greedy_policy();
        assert_eq!(pi.action(0, 0), 0);
        let star = solve_optimal(&gridworld_1d()).greedy_policy();
        for h in 0..3 {
            for x in 0..3 {
                if (h, x) != (0, 0) {
                    assert_eq!(pi.action(h, x), star.action(h, x));
                }
            }
        }
        // Drive Q_1(x1, a1) below Q*_1(x1, a2) = 2.
        while l.q(0, 0, 0) >= 2.0 {
            l.observe(&Transition { x: 0, a: 0, h: 0, r: 0.0, x_next: 0 }).unwrap();
        }
        assert_eq!(l.greedy_policy(), star);
        assert_eq!(ucbh().greedy_policy(), DeterministicPolicy::constant(3, 3, 0));
    }

    #[test]
    fn bad_transition_rejected() {
        let mut l = ucbh();
        assert!(matches!(
            l.observe(&Transition { x: 0, a: 0, h: 3, r: 0.0, x_next: 0 }),
            Err(LearnerError::Index(_))
        ));
    }

    #[test]
    fn variant_labels_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.label().parse::<Variant>().unwrap(), v);
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(json, format!("\"{}\"", v.label()));
        }
    }
}
