//! File formats, corpora, invariant checks and the experiment harness on
//! top of `starhub-core`. The `starhub` binary wraps these in a CLI.

pub mod checks;
pub mod corpus;
pub mod experiment;
pub mod io;

pub use checks::CheckOutcome;
pub use corpus::{generate_corpus, CorpusConfig, CorpusEntry};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, InstanceRow};
pub use io::{read_instance, write_instance, IoError};
