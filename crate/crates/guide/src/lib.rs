//! The chapters of the book, compiled as doc-tests so their examples keep
//! working. Nothing here is meant to be used as a library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/nets.md")]
pub mod nets {}
#[doc = include_str!("../../../book/src/reductions.md")]
pub mod reductions {}
#[doc = include_str!("../../../book/src/counting.md")]
pub mod counting {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
