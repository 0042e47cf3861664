//! Ramanujan periodicity transform (RPT) and Ramanujan de-shape (RDS)
//! time-frequency analysis.
//!
//! The crate provides:
//! - exact Ramanujan-sum primitives and period dictionaries ([`ramanujan`],
//!   [`dictionary`]),
//! - a certified l1 solver for the penalized decomposition ([`solver`]),
//! - the periodicity transform with energy-of-period bookkeeping ([`rpt`]),
//! - STFT/spectrogram machinery and the cepstral de-shape baseline
//!   ([`tfr`], [`deshape`]),
//! - the Ramanujan de-shape TFR and its vectorized variant ([`rds`]),
//! - synthetic scene generators and perturbation operators ([`synth`]),
//! - greedy periodicity-transform baselines ([`baselines`]),
//! - executable oracles for the robustness bounds ([`robustness`]).

pub mod baselines;
pub mod deshape;
pub mod dictionary;
pub mod ramanujan;
pub mod rds;
pub mod robustness;
pub mod rpt;
pub mod solver;
pub mod synth;
pub mod tfr;

pub use dictionary::{cached_dictionary, DictionaryError, PeriodDictionary, Zeta};
pub use rpt::{eop_of, rpt, vrpt, PtOptions, PtResult};
pub use solver::{bpdn_solve, bpdn_solve_multi, BpdnSolver, SolverError, SolverOptions, SparseSolution};
