//! One-hidden-layer ReLU networks trained with node selection by annealing (NSA) and
//! combined feature and node selection (FSA+NSA), plus the experiment harness used to
//! study local minima on k-D XOR data.
//!
//! Modules:
//! - [`model`]: the network, node normalization, node/feature pruning, group weights.
//! - [`train`]: cross-entropy gradients, Adam, epoch loop, seeded initialization.
//! - [`data`]: XOR generation, CSV ingestion, splits, standardization.
//! - [`anneal`]: annealing schedules and the NSA / FSA+NSA loops.
//! - [`metrics`]: AUC, accuracy, hit time.
//! - [`harness`]: experiment drivers behind the `nsa` command line tool.

pub mod anneal;
pub mod data;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod train;

pub use anneal::{run_fsa_nsa, run_nsa, AnnealConfig, AnnealOutcome, AnnealSchedule, PruneTrace};
pub use data::{gen_xor, load_csv, split, standardize, CsvSchema, Dataset, SplitSpec, XorPool};
pub use error::{Error, Result};
pub use metrics::{accuracy, auc, EvalReport};
pub use model::{FeatureRelevance, Matrix, MlpModel};
pub use train::{LossKind, TrainConfig};
