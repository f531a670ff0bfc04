//! Double-double (FP64x2) matrix multiplication from ten binary64 GEMMs.
//!
//! Each operand row (of `A`) or column (of `B`) is scaled by a power of two
//! and cut into four binary64 splits. Ten binary64 GEMMs over those splits
//! fill four bins; the three leading bins are exact fixed-point sums, and the
//! bins are merged in double-double arithmetic. The result is at least as
//! accurate as a plain double-double triple loop while running on binary64
//! GEMM kernels.
//!
//! ```
//! use ddcascade::{cascgemm, DD, MatrixDD};
//!
//! let a = MatrixDD::from_fn(3, 3, |i, j| DD::from_parts(1.0 + i as f64, 1e-20 * j as f64).unwrap());
//! let b = MatrixDD::identity(3);
//! let mut c = MatrixDD::zeros(3, 3);
//! let out = cascgemm::cascaded_gemm_fused(&a, &b, &mut c, &Default::default()).unwrap();
//! assert_eq!(out.stats.products_per_pair(), 10.0);
//! ```
//!
//! Modules, bottom up:
//! - [`dd`]: error-free transformations and double-double arithmetic.
//! - [`exact`]: exact dyadic arithmetic and the reference GEMM.
//! - [`cascade`]: split widths, scales and the branch-free splitter.
//! - [`dgemm`]: blocked binary64 GEMM with packing and a microkernel.
//! - [`cascgemm`]: the cascaded GEMM (simple and fused paths).
//! - [`bounds`]: condition numbers and forward error bounds.
//! - [`datagen`]: seeded uniform, wide-range and ill-conditioned inputs.
//! - [`checks`]: the numerical acceptance checks, shared by tests and the CLI.

pub mod bounds;
pub mod cascade;
pub mod cascgemm;
pub mod checks;
pub mod datagen;
pub mod dd;
pub mod dgemm;
pub mod error;
pub mod exact;
pub mod fp;
pub mod matrix;

pub use cascade::{select_widths, SplitWidths};
pub use cascgemm::{multiply, CascadeOptions, CascadeOutcome, Method, Path};
pub use dd::DD;
pub use dgemm::BlockingParams;
pub use error::{Error, Result};
pub use exact::{Dyadic, ExactMatrix};
pub use matrix::MatrixDD;
