//! Tabular episodic reinforcement learning with UCB-Hoeffding exploration.
//!
//! * [`mdp`]: finite-horizon MDP model, validation, sampling, JSON I/O.
//! * [`solver`]: exact backward induction and a brute-force policy oracle.
//! * [`learner`]: Q-learning with UCB-Hoeffding bonuses, plain and warm-started
//!   from optimal values everywhere but one entry.
//! * [`envs`]: the 3-state line world and generators.
//! * [`harness`]: seeded multi-run regret experiments and CSV export.
//! * [`diagnostics`]: learning-rate weight properties and optimism checks.

pub mod diagnostics;
pub mod envs;
pub mod harness;
pub mod learner;
pub mod mdp;
pub mod rng;
pub mod solver;

pub use envs::{chain_mdp, gridworld_1d, random_mdp, EnvRecipe};
pub use harness::{
    aggregate, regret_summary, run_experiment, AggregateResult, Experiment, ExperimentConfig,
    ExperimentResults, HarnessError, InitialDist, RegretSummary, RunResult,
};
pub use learner::{
    alpha, alpha_weights, Learner, LearnerError, LearnerParams, LogTerm, SpecialPair, TieRule,
    Transition, Variant,
};
pub use mdp::{Dims, MdpError, MdpSpec, ValidationReport, Violation};
pub use rng::{RngStream, StreamPurpose};
pub use solver::{
    brute_force_optimal, evaluate_policy, solve_optimal, DeterministicPolicy, SolverError,
    ValueTables,
};
