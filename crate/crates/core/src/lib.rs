//! Dense matrix computation with swappable sequential and parallel
//! backends, a classical machine-learning suite built on it, and SVG
//! plotting.
//!
//! ```
//! use matcha::Matrix;
//!
//! let a = Matrix::from_array(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
//! let b = a.t().matmul(&a).unwrap();
//! assert_eq!(b.get(0, 0).unwrap(), 10.0);
//! ```

pub mod backend;
pub mod bench;
pub mod cli;
pub mod demo;
pub(crate) mod kernels;
pub mod linalg;
pub mod matrix;
pub mod ml;
pub mod plot;
pub mod rng;

pub use backend::{BackendChoice, BackendError, ComputeContext, Engine, MapKernelSpec};
pub use matrix::{BinaryOp, ConvMode, Matrix, MatrixError, ReduceOp, Residency};
