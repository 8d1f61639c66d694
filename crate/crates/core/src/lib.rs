//! A multi-level compiler from a small region-based SSA IR to WebAssembly text.
//!
//! Programs enter as `arith`/`func`/`scf`/`memref`/`dcont` dialect IR, are
//! lowered to the SSA-form `ssawasm` dialect, optimized, stackified into the
//! `wasm` dialect and finally printed as WAT. Two interpreters (one over the
//! IR, one over the emitted Wasm) back differential testing.

pub mod error;
pub mod driver;
pub mod ir;
pub mod interp;
pub mod lower;
pub mod num;
pub mod opt;
pub mod pipeline;
pub mod text;
pub mod wasm;
pub mod wat;

pub use error::{Error, Result};
