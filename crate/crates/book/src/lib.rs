//! The guide in `book/` as doc-tests, one module per chapter, so every Rust
//! snippet in it is compiled and run by `cargo test`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/generalized-gradients.md")]
pub mod generalized_gradients {}
#[doc = include_str!("../../../book/src/smoothing.md")]
pub mod smoothing {}
#[doc = include_str!("../../../book/src/fibrations.md")]
pub mod fibrations {}
#[doc = include_str!("../../../book/src/reeb.md")]
pub mod reeb {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
