//! Small fully-connected ReLU networks: training with an L1 penalty, exact
//! gradients, finite-difference Hessian-vector products, and ε̂ estimation.

mod checkpoint;
mod data;
mod hessian;
mod net;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointHeader};
pub use data::{load_csv_dataset, make_blobs, Dataset, Split};
pub use hessian::{exact_hessian, hvp, hvp_central_difference, HessianOperator, HessianReport, NetObjective, Objective, QuadraticObjective};
pub use net::{Activation, FeedforwardNet, Metrics};
pub use train::{epsilon_hat, train_l1, TrainConfig, Trained};
