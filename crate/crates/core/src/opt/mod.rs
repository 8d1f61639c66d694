//! Mid-level optimizations over `ssawasm`.

mod cse;
mod fold;

pub use cse::cse;
pub use fold::fold_constants;
