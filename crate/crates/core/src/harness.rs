//! Seeded regret experiments: run learners, score each episode's greedy
//! policy exactly, aggregate across runs and export CSV.
//!
//! Per-episode regret is `PER(k) = V*_1(x_1^k) - V^{pi_k}_1(x_1^k)` where
//! `pi_k` is the learner's greedy policy at the start of episode `k`.
//! Because each step's Q row is read before it is written within an
//! episode, that snapshot is exactly the policy the rollout follows.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::{EnvRecipe, RecipeError};
use crate::learner::{Learner, LearnerError, LearnerParams, LogTerm, SpecialPair, TieRule, Transition, Variant};
use crate::mdp::{MdpError, MdpSpec, ValidationReport};
use crate::rng::{fnv1a64, RngStream, StreamPurpose};
use crate::solver::{policy_value_at_start, solve_optimal, DeterministicPolicy, SolverError, ValueTables};

/// PER values below `-PER_TOL` indicate a bug (V* must dominate).
pub const PER_TOL: f64 = 1e-12;

/// Normal quantile for a two-sided 95% interval.
pub const Z_95: f64 = 1.96;

/// Default "converged" threshold on mean PER.
pub const DEFAULT_PER_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("MDP failed validation:\n{0}")]
    InvalidMdp(ValidationReport),
    #[error(transparent)]
    Recipe(#[from] RecipeError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("nothing to aggregate")]
    Empty,
    #[error("runs disagree on the number of episodes ({0} vs {1})")]
    EpisodeMismatch(usize, usize),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad csv: {0}")]
    CsvFormat(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Override for the initial-state distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialDist {
    /// Uniform over all states.
    Uniform,
    /// Always start in this (0-based) state.
    Fixed(usize),
    /// Explicit probability vector.
    Weights(Vec<f64>),
}

impl InitialDist {
    fn resolve(&self, num_states: usize) -> Result<Vec<f64>, HarnessError> {
        match self {
            InitialDist::Uniform => Ok(vec![1.0 / num_states as f64; num_states]),
            InitialDist::Fixed(x) if *x < num_states => {
                let mut d = vec![0.0; num_states];
                d[*x] = 1.0;
                Ok(d)
            }
            InitialDist::Fixed(x) => Err(HarnessError::Config(format!(
                "fixed initial state {x} is outside 0..{num_states}"
            ))),
            InitialDist::Weights(w) => Ok(w.clone()),
        }
    }
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::Ucbh, Variant::MaxOptNoA2, Variant::MaxOpt]
}

/// Experiment description, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Recipe string (`gridworld3`, `chain:S=5,H=6`, ...) or MDP JSON path.
    pub env: String,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    /// Episodes per run, `K`.
    #[serde(rename = "K")]
    pub episodes: usize,
    pub num_runs: usize,
    pub p: f64,
    pub c: f64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub initial_dist: Option<InitialDist>,
    #[serde(default)]
    pub tie_rule: TieRule,
    #[serde(default)]
    pub special: SpecialPair,
    #[serde(default)]
    pub log_term: LogTerm,
}

impl ExperimentConfig {
    /// Gridworld, all three variants, `K = 500`, 50 runs, `p = 0.05`,
    /// `c = 0.1`, uniform initial state.
    pub fn gridworld_baseline() -> Self {
        Self {
            env: "gridworld3".into(),
            variants: default_variants(),
            episodes: 500,
            num_runs: 50,
            p: 0.05,
            c: 0.1,
            base_seed: 2024,
            initial_dist: Some(InitialDist::Uniform),
            tie_rule: TieRule::SmallestIndex,
            special: SpecialPair::default(),
            log_term: LogTerm::Auto,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.episodes < 1 {
            return fail("K must be at least 1".into());
        }
        if self.num_runs < 1 {
            return fail("num_runs must be at least 1".into());
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return fail(format!("p must lie in (0, 1), got {}", self.p));
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return fail(format!("c must be finite and non-negative, got {}", self.c));
        }
        if self.variants.is_empty() {
            return fail("at least one variant is required".into());
        }
        for (i, v) in self.variants.iter().enumerate() {
            if self.variants[..i].contains(v) {
                return fail(format!("variant {v} listed twice"));
            }
        }
        Ok(())
    }

    pub fn learner_params(&self) -> LearnerParams {
        LearnerParams {
            episodes: self.episodes,
            p: self.p,
            c: self.c,
            log_term: self.log_term,
            tie_rule: self.tie_rule,
        }
    }
}

/// Stream id for run `run_index` of `variant`: `fnv1a64(label) ^ run_index`.
pub fn stream_id(variant: Variant, run_index: usize) -> u64 {
    fnv1a64(variant.label().as_bytes()) ^ run_index as u64
}

/// State of the special entry at the start of an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialSnapshot {
    pub visits: u64,
    pub q: f64,
}

/// One episode's record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub initial_state: usize,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    /// Increments each time the greedy snapshot changes.
    pub policy_id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub variant: Variant,
    pub run_index: usize,
    pub base_seed: u64,
    pub stream_id: u64,
    pub per_episode_regret: Vec<f64>,
    pub cumulative_regret: Vec<f64>,
    /// Special-entry state before each episode (Max-Opt variants only).
    pub special_trace: Vec<SpecialSnapshot>,
    pub episodes: Vec<EpisodeTrace>,
    /// Learner Q table after the last episode, `H x S x A` row-major.
    pub final_q: Vec<f64>,
}

impl RunResult {
    pub fn total_regret(&self) -> f64 {
        self.cumulative_regret.last().copied().unwrap_or(0.0)
    }
}

/// A validated MDP, its optimal tables and the experiment settings.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    spec: MdpSpec,
    optimal: ValueTables,
}

impl Experiment {
    /// Build the environment named by the config, apply the initial
    /// distribution override, validate and solve it.
    pub fn prepare(config: ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let recipe: EnvRecipe = config.env.parse()?;
        let spec = recipe.build()?;
        Self::with_spec(config, spec)
    }

    pub fn with_spec(config: ExperimentConfig, spec: MdpSpec) -> Result<Self, HarnessError> {
        config.validate()?;
        let spec = match &config.initial_dist {
            Some(d) => {
                let dist = d.resolve(spec.num_states())?;
                spec.with_initial_dist(dist)?
            }
            None => spec,
        };
        let report = spec.validate();
        if !report.is_ok() {
            return Err(HarnessError::InvalidMdp(report));
        }
        let special = config.special;
        if special.state >= spec.num_states() || special.action >= spec.num_actions() {
            return Err(HarnessError::Config(format!(
                "special pair (x{}, a{}) outside the MDP",
                special.state + 1,
                special.action + 1
            )));
        }
        let optimal = solve_optimal(&spec);
        Ok(Self {
            config,
            spec,
            optimal,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn spec(&self) -> &MdpSpec {
        &self.spec
    }

    pub fn optimal(&self) -> &ValueTables {
        &self.optimal
    }

    pub fn new_learner(&self, variant: Variant) -> Result<Learner, HarnessError> {
        Ok(Learner::new(
            variant,
            self.spec.dims(),
            self.config.learner_params(),
            Some(&self.optimal),
            Some(self.config.special),
        )?)
    }

    /// One independent run of `variant`.
    pub fn run_single(&self, variant: Variant, run_index: usize) -> Result<RunResult, HarnessError> {
        let cfg = &self.config;
        let spec = &self.spec;
        let horizon = spec.horizon();
        let sid = stream_id(variant, run_index);
        let mut init_rng = RngStream::for_purpose(cfg.base_seed, sid, StreamPurpose::InitialState);
        let mut step_rng = RngStream::for_purpose(cfg.base_seed, sid, StreamPurpose::Transitions);
        let mut tie_rng = RngStream::for_purpose(cfg.base_seed, sid, StreamPurpose::TieBreak);

        let mut learner = self.new_learner(variant)?;
        let v_star = self.optimal.v_row(0);
        let special = cfg.special;

        let k_total = cfg.episodes;
        let mut per = Vec::with_capacity(k_total);
        let mut cumulative = Vec::with_capacity(k_total);
        let mut special_trace = Vec::new();
        let mut episodes = Vec::with_capacity(k_total);
        let mut running = 0.0;

        let mut cached: Option<(DeterministicPolicy, Vec<f64>)> = None;
        let mut policy_id = 0usize;

        for _ in 0..k_total {
            if variant.is_max_opt() {
                special_trace.push(SpecialSnapshot {
                    visits: learner.visits(0, special.state, special.action),
                    q: learner.q(0, special.state, special.action),
                });
            }

            let policy = learner.snapshot_policy(&mut tie_rng);
            let refresh = match &cached {
                Some((prev, _)) => *prev != policy,
                None => true,
            };
            if refresh {
                if cached.is_some() {
                    policy_id += 1;
                }
                let values = policy_value_at_start(spec, &policy)?;
                cached = Some((policy, values));
            }
            let (policy, v_pi) = cached.as_ref().expect("policy cached above");

            let x1 = spec.sample_initial_state(&mut init_rng);
            let gap = v_star[x1] - v_pi[x1];
            if gap < -PER_TOL {
                return Err(HarnessError::Invariant(format!(
                    "negative per-episode regret {gap} for {variant} run {run_index}"
                )));
            }
            per.push(gap);
            running += gap;
            cumulative.push(running);

            let mut x = x1;
            let mut actions = Vec::with_capacity(horizon);
            let mut rewards = Vec::with_capacity(horizon);
            for h in 0..horizon {
                let a = match cfg.tie_rule {
                    TieRule::SmallestIndex => {
                        let live = learner.select_action(x, h, &mut tie_rng);
                        debug_assert_eq!(live, policy.action(h, x));
                        live
                    }
                    // Tie draws were made when the snapshot was taken.
                    TieRule::SeededRandom => policy.action(h, x),
                };
                let (x_next, r) = spec.step(x, a, h, &mut step_rng)?;
                learner.observe(&Transition {
                    x,
                    a,
                    h,
                    r,
                    x_next,
                })?;
                actions.push(a);
                rewards.push(r);
                x = x_next;
            }
            episodes.push(EpisodeTrace {
                initial_state: x1,
                actions,
                rewards,
                policy_id,
            });
        }

        Ok(RunResult {
            variant,
            run_index,
            base_seed: cfg.base_seed,
            stream_id: sid,
            per_episode_regret: per,
            cumulative_regret: cumulative,
            special_trace,
            episodes,
            final_q: learner.q_table().to_vec(),
        })
    }

    /// `num_runs` runs of every configured variant, in config order and run
    /// order. `jobs > 1` spreads runs over a thread pool; the output does
    /// not depend on `jobs`.
    pub fn run_all(&self, jobs: usize) -> Result<ExperimentResults, HarnessError> {
        let tasks: Vec<(Variant, usize)> = self
            .config
            .variants
            .iter()
            .flat_map(|&v| (0..self.config.num_runs).map(move |i| (v, i)))
            .collect();
        let results: Vec<Result<RunResult, HarnessError>> = if jobs > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
            pool.install(|| {
                tasks
                    .par_iter()
                    .map(|&(v, i)| self.run_single(v, i))
                    .collect()
            })
        } else {
            tasks.iter().map(|&(v, i)| self.run_single(v, i)).collect()
        };
        let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        let mut by_variant: Vec<VariantRuns> = self
            .config
            .variants
            .iter()
            .map(|&variant| VariantRuns {
                variant,
                runs: Vec::with_capacity(self.config.num_runs),
            })
            .collect();
        for run in runs {
            let slot = by_variant
                .iter_mut()
                .find(|g| g.variant == run.variant)
                .expect("variant from config");
            slot.runs.push(run);
        }
        Ok(ExperimentResults {
            variants: by_variant,
        })
    }
}

/// Convenience: prepare and run a config.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<ExperimentResults, HarnessError> {
    Experiment::prepare(config.clone())?.run_all(jobs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantRuns {
    pub variant: Variant,
    pub runs: Vec<RunResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub variants: Vec<VariantRuns>,
}

impl ExperimentResults {
    pub fn runs_of(&self, variant: Variant) -> Option<&[RunResult]> {
        self.variants
            .iter()
            .find(|g| g.variant == variant)
            .map(|g| g.runs.as_slice())
    }

    pub fn aggregates(&self) -> Result<Vec<AggregateResult>, HarnessError> {
        self.variants
            .iter()
            .map(|g| {
                let series: Vec<&[f64]> =
                    g.runs.iter().map(|r| r.per_episode_regret.as_slice()).collect();
                aggregate(g.variant, &series)
            })
            .collect()
    }
}

/// Mean curve and 95% normal-approximation band across runs of one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub variant: Variant,
    pub num_runs: usize,
    pub mean_per: Vec<f64>,
    pub ci_half_width: Vec<f64>,
    pub mean_cum_regret: Vec<f64>,
    pub total_regret_mean: f64,
    /// `None` when only the mean curve is known (e.g. read back from an
    /// aggregate CSV).
    pub total_regret_ci: Option<f64>,
}

impl AggregateResult {
    pub fn episodes(&self) -> usize {
        self.mean_per.len()
    }
}

/// Sample mean and `1.96 * s / sqrt(n)`, with `s = 0` for a single sample.
pub fn mean_and_half_width(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, Z_95 * var.sqrt() / (n as f64).sqrt())
}

/// Aggregate per-episode regret series of equal length.
pub fn aggregate(variant: Variant, per_runs: &[&[f64]]) -> Result<AggregateResult, HarnessError> {
    let first = per_runs.first().ok_or(HarnessError::Empty)?;
    let k = first.len();
    for r in per_runs {
        if r.len() != k {
            return Err(HarnessError::EpisodeMismatch(k, r.len()));
        }
    }
    let mut mean_per = Vec::with_capacity(k);
    let mut ci = Vec::with_capacity(k);
    let mut column = vec![0.0; per_runs.len()];
    for e in 0..k {
        for (slot, r) in column.iter_mut().zip(per_runs) {
            *slot = r[e];
        }
        let (m, hw) = mean_and_half_width(&column);
        mean_per.push(m);
        ci.push(hw);
    }
    let mut mean_cum_regret = Vec::with_capacity(k);
    let mut acc = 0.0;
    for m in &mean_per {
        acc += m;
        mean_cum_regret.push(acc);
    }
    let totals: Vec<f64> = per_runs.iter().map(|r| r.iter().sum()).collect();
    let (total_regret_mean, total_ci) = mean_and_half_width(&totals);
    Ok(AggregateResult {
        variant,
        num_runs: per_runs.len(),
        mean_per,
        ci_half_width: ci,
        mean_cum_regret,
        total_regret_mean,
        total_regret_ci: Some(total_ci),
    })
}

/// Smallest 1-based episode `k` such that mean PER stays strictly below
/// `threshold` from `k` to the end, or `None` if the last episode is not.
pub fn first_converged_episode(mean_per: &[f64], threshold: f64) -> Option<usize> {
    let mut first = None;
    for (i, &m) in mean_per.iter().enumerate().rev() {
        if m < threshold {
            first = Some(i + 1);
        } else {
            break;
        }
    }
    first
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub variant: Variant,
    pub episodes: usize,
    pub total_regret_mean: f64,
    pub total_regret_ci: Option<f64>,
    pub converged_episode: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretSummary {
    pub threshold: f64,
    pub rows: Vec<SummaryRow>,
    /// Variants by ascending mean total regret (stable on ties).
    pub ordering: Vec<Variant>,
}

pub fn regret_summary(
    aggregates: &[AggregateResult],
    threshold: f64,
) -> Result<RegretSummary, HarnessError> {
    let first = aggregates.first().ok_or(HarnessError::Empty)?;
    for agg in aggregates {
        if agg.episodes() != first.episodes() {
            return Err(HarnessError::EpisodeMismatch(first.episodes(), agg.episodes()));
        }
    }
    let rows: Vec<SummaryRow> = aggregates
        .iter()
        .map(|agg| SummaryRow {
            variant: agg.variant,
            episodes: agg.episodes(),
            total_regret_mean: agg.total_regret_mean,
            total_regret_ci: agg.total_regret_ci,
            converged_episode: first_converged_episode(&agg.mean_per, threshold),
        })
        .collect();
    let mut order: Vec<&SummaryRow> = rows.iter().collect();
    order.sort_by(|a, b| a.total_regret_mean.total_cmp(&b.total_regret_mean));
    let ordering = order.iter().map(|r| r.variant).collect();
    Ok(RegretSummary {
        threshold,
        rows,
        ordering,
    })
}

pub const RAW_HEADER: [&str; 5] = ["variant", "run", "episode", "per", "cum_regret"];
pub const AGGREGATE_HEADER: [&str; 5] =
    ["variant", "episode", "mean_per", "ci_half_width", "mean_cum_regret"];

fn create_writer(path: &Path) -> Result<csv::Writer<fs::File>, HarnessError> {
    let file = fs::File::create(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

// `{}` on f64 prints the shortest string that parses back to the same value.
fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Raw CSV: one row per (variant, run, episode). Runs are 0-based,
/// episodes 1-based.
pub fn write_raw_csv(results: &ExperimentResults, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let mut w = create_writer(path.as_ref())?;
    w.write_record(RAW_HEADER)?;
    for group in &results.variants {
        for run in &group.runs {
            for (k, (per, cum)) in run
                .per_episode_regret
                .iter()
                .zip(&run.cumulative_regret)
                .enumerate()
            {
                w.write_record([
                    group.variant.label().to_string(),
                    run.run_index.to_string(),
                    (k + 1).to_string(),
                    fmt_f64(*per),
                    fmt_f64(*cum),
                ])?;
            }
        }
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    Ok(())
}

/// Aggregate CSV: one row per (variant, episode).
pub fn write_aggregate_csv(
    aggregates: &[AggregateResult],
    path: impl AsRef<Path>,
) -> Result<(), HarnessError> {
    let mut w = create_writer(path.as_ref())?;
    w.write_record(AGGREGATE_HEADER)?;
    for agg in aggregates {
        for k in 0..agg.episodes() {
            w.write_record([
                agg.variant.label().to_string(),
                (k + 1).to_string(),
                fmt_f64(agg.mean_per[k]),
                fmt_f64(agg.ci_half_width[k]),
                fmt_f64(agg.mean_cum_regret[k]),
            ])?;
        }
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    Ok(())
}

/// Which CSV schema a file uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvKind {
    Raw,
    Aggregate,
}

/// Parsed contents of a raw or aggregate CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum CsvTable {
    Raw(Vec<RawRow>),
    Aggregate(Vec<AggregateRow>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub variant: Variant,
    pub run: usize,
    pub episode: usize,
    pub per: f64,
    pub cum_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub variant: Variant,
    pub episode: usize,
    pub mean_per: f64,
    pub ci_half_width: f64,
    pub mean_cum_regret: f64,
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, line: usize) -> Result<T, HarnessError>
where
    T::Err: std::fmt::Display,
{
    let raw = record
        .get(i)
        .ok_or_else(|| HarnessError::CsvFormat(format!("line {line}: missing column {i}")))?;
    raw.parse::<T>()
        .map_err(|e| HarnessError::CsvFormat(format!("line {line}: {raw:?}: {e}")))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<CsvTable, HarnessError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let kind = if header == RAW_HEADER {
        CsvKind::Raw
    } else if header == AGGREGATE_HEADER {
        CsvKind::Aggregate
    } else {
        return Err(HarnessError::CsvFormat(format!(
            "{}: unrecognised header {header:?}",
            path.display()
        )));
    };
    let mut raw = Vec::new();
    let mut agg = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        let line = n + 2;
        let variant: Variant = record
            .get(0)
            .unwrap_or_default()
            .parse()
            .map_err(|e: String| HarnessError::CsvFormat(format!("line {line}: {e}")))?;
        match kind {
            CsvKind::Raw => raw.push(RawRow {
                variant,
                run: parse_field(&record, 1, line)?,
                episode: parse_field(&record, 2, line)?,
                per: parse_field(&record, 3, line)?,
                cum_regret: parse_field(&record, 4, line)?,
            }),
            CsvKind::Aggregate => agg.push(AggregateRow {
                variant,
                episode: parse_field(&record, 1, line)?,
                mean_per: parse_field(&record, 2, line)?,
                ci_half_width: parse_field(&record, 3, line)?,
                mean_cum_regret: parse_field(&record, 4, line)?,
            }),
        }
    }
    Ok(match kind {
        CsvKind::Raw => CsvTable::Raw(raw),
        CsvKind::Aggregate => CsvTable::Aggregate(agg),
    })
}

impl CsvTable {
    pub fn is_empty(&self) -> bool {
        match self {
            CsvTable::Raw(r) => r.is_empty(),
            CsvTable::Aggregate(a) => a.is_empty(),
        }
    }

    /// Rebuild per-variant aggregates. Raw tables are re-aggregated in full;
    /// aggregate tables keep their stored curves and have no total-regret CI.
    pub fn to_aggregates(&self) -> Result<Vec<AggregateResult>, HarnessError> {
        let mut order: Vec<Variant> = Vec::new();
        let mut note = |v: Variant| {
            if !order.contains(&v) {
                order.push(v);
            }
        };
        match self {
            CsvTable::Raw(rows) => {
                rows.iter().for_each(|r| note(r.variant));
                order
                    .iter()
                    .map(|&variant| {
                        let mut runs: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
                        for r in rows.iter().filter(|r| r.variant == variant) {
                            match runs.iter_mut().find(|(id, _)| *id == r.run) {
                                Some((_, eps)) => eps.push((r.episode, r.per)),
                                None => runs.push((r.run, vec![(r.episode, r.per)])),
                            }
                        }
                        let series: Vec<Vec<f64>> = runs
                            .into_iter()
                            .map(|(_, mut eps)| {
                                eps.sort_by_key(|(k, _)| *k);
                                eps.into_iter().map(|(_, per)| per).collect()
                            })
                            .collect();
                        let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
                        aggregate(variant, &refs)
                    })
                    .collect()
            }
            CsvTable::Aggregate(rows) => {
                rows.iter().for_each(|r| note(r.variant));
                Ok(order
                    .iter()
                    .map(|&variant| {
                        let mut mine: Vec<&AggregateRow> =
                            rows.iter().filter(|r| r.variant == variant).collect();
                        mine.sort_by_key(|r| r.episode);
                        let mean_cum_regret: Vec<f64> =
                            mine.iter().map(|r| r.mean_cum_regret).collect();
                        AggregateResult {
                            variant,
                            num_runs: 0,
                            mean_per: mine.iter().map(|r| r.mean_per).collect(),
                            ci_half_width: mine.iter().map(|r| r.ci_half_width).collect(),
                            total_regret_mean: mean_cum_regret.last().copied().unwrap_or(0.0),
                            mean_cum_regret,
                            total_regret_ci: None,
                        }
                    })
                    .collect())
            }
        }
    }
}
