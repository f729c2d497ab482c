//! Canonical polyadic decomposition of large tensors through a tensor-train
//! detour.
//!
//! Instead of running an alternating-least-squares loop on the raw data, the
//! tensor is first compressed into tensor-train (TT) form. All subsequent
//! work — closed-form extraction of the CP factors, or iterative fitting —
//! happens on the TT cores, whose total size is orders of magnitude smaller
//! than the original array.
//!
//! The main entry points are:
//! - [`tt::tt_svd`] — TT compression of a dense tensor,
//! - [`convert::tt_to_cp_exact`] / [`convert::tt_to_cp_sequential`] —
//!   closed-form TT-to-CP conversion,
//! - [`fit::fit_tt2cp`] — ALS fitting of a CP model directly to a TT tensor,
//! - [`bench`] — experiment drivers behind the `tt2cp` CLI.

pub mod bench;
pub mod convert;
pub mod cpd3;
pub mod error;
pub mod fit;
pub mod io;
pub mod kruskal;
pub mod linalg;
pub mod scalar;
pub mod tensor;
pub mod tt;

#[cfg(test)]
pub(crate) mod test_util;

pub use error::{Error, Result};
pub use kruskal::KruskalTensor;
pub use tt::TTTensor;

pub use scalar::Field;
pub use tensor::DenseTensor;

