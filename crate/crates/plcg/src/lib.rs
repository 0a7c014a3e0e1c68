//! Matrix Market IO, CSV traces and the `plcg` command-line harness built
//! on [`plcg_core`].

mod error;

pub mod cli;
pub mod mtx;
pub mod problem;
pub mod report;

pub use error::Error;
pub use mtx::{parse_matrix_market, read_matrix_market, write_matrix_market, MatrixMarket, Symmetry};
pub use problem::{fixture_dir, Problem, Source};
