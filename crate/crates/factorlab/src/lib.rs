//! factorlab: full factorial experiment designs, balanced multi-way ANOVA
//! with eta-squared effect sizes, Spearman correlograms, and Monte-Carlo
//! simulation of model-selection procedures (sequential single-factor
//! optimization, ensembles under three pooling strategies, and blind vs.
//! privileged evaluation protocols).
//!
//! The library is the primary interface; each major capability has a
//! runnable example:
//!
//! ```text
//! cargo run -p factorlab --example full_factorial
//! cargo run -p factorlab --example anova_table
//! cargo run -p factorlab --example correlograms
//! cargo run -p factorlab --example sequential_optimization
//! cargo run -p factorlab --example ensemble_curves
//! cargo run -p factorlab --example blind_vs_privileged
//! cargo run -p factorlab --example make_demo_files
//! ```
//!
//! A thin `factorlab` binary exposes the same operations over CSV/JSON files
//! (`design`, `anova`, `correlate`, `simulate-seq`, `ensemble`, `protocol`).

pub mod anova;
pub mod cli;
pub mod correlate;
pub mod design;
pub mod error;
pub mod io;
pub mod metrics;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod synth;

pub use design::{Design, Factor, OutcomeRow, OutcomeTable, Treatment, ValidationReport};
pub use error::{Error, Result};
pub use metrics::{ResponseSpec, Transform};
