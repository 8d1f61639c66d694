//! The stack-machine end of the pipeline: module-level conversion,
//! stackification, and the structural mapping onto Wasm instructions.

mod ast;
mod bridge;
mod convert;
mod globals;
mod locals;

pub use ast::*;
pub use bridge::{func_from_ir, func_to_ir, module_from_ir, module_to_ir};
pub use convert::{convert_ssawasm_ops, lower_module, ssawasm_to_wasm};
pub use globals::convert_globals;
pub use locals::{
    check_stack_discipline, fuse_stack_locals, fuse_stack_locals_fn, instruction_estimate, introduce_locals,
    introduce_locals_fn,
};
