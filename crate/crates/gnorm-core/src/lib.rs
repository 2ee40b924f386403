//! Bit-accurate model of normalization-guaranteed softmax and layernorm
//! datapaths.
//!
//! The crate models two streaming normalization units built from the same
//! small toolbox of integer hardware: fixed-point multiply with truncation,
//! restoring shift-subtract division, leading-one detection, and small
//! exponential lookup tables. Both units are organized so that the final
//! normalization step is performed in hardware rather than recovered in
//! floating point later, which keeps the output sum (softmax) and output
//! variance (layernorm) pinned near their ideal values by construction.
//!
//! Layout:
//!
//! - [`fxp`] — fixed-point formats, quantization, and the shared integer
//!   primitives every datapath is built from.
//! - [`softmax`] — two-table exponential approximation plus scale-and-divide
//!   normalization.
//! - [`layernorm`] — streaming moments and a Newton reciprocal square root
//!   seeded by leading-one detection.
//! - [`harness`] — corpora, error metrics, sweeps, and reference engines for
//!   measuring how well each datapath normalizes.
//!
//! Everything here is deterministic: the same inputs and configuration
//! produce the same codes on every platform, which is what makes the model
//! usable as a golden reference for RTL.
//!
//! The crate is `no_std` (with `alloc`) so the model can run inside
//! emulators and co-simulation harnesses that have no operating system.

#![cfg_attr(not(test), no_std)]
#![deny(missing_docs)]

extern crate alloc;

pub mod fxp;
pub mod harness;
pub mod layernorm;
pub mod softmax;

mod util;

pub use fxp::{FxpError, FxpFormat, FxpValue, QuantTensor, Quantized, Rounding};

/// Fidelity level an engine runs at.
///
/// Both engines implement the same algorithm twice: once over `f64` to show
/// the algorithm itself is sound, and once over integer codes to show the
/// hardware realization of it is sound. Keeping the two behind one switch
/// makes A/B comparisons trivial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Algorithmic dataflow over `f64`: same operation order as the
    /// hardware, but every intermediate keeps full double precision.
    FloatEmulation,
    /// Exact integer datapath: every intermediate is an integer code with a
    /// declared width, and every rounding is the one the hardware performs.
    BitAccurate,
}

impl Mode {
    /// Stable lowercase name, used in reports and file output.
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FloatEmulation => "float-emulation",
            Mode::BitAccurate => "bit-accurate",
        }
    }
}

impl core::fmt::Display for Mode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}
