//! The user guide, compiled. Each chapter under `book/src` is attached to a
//! module here verbatim, so every code block in the guide builds and runs as
//! a documentation test and the book cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/norm-tree.md")]
pub mod norm_tree {}

#[doc = include_str!("../../../book/src/problems.md")]
pub mod problems {}

#[doc = include_str!("../../../book/src/sampling.md")]
pub mod sampling {}

#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}

#[doc = include_str!("../../../book/src/resource.md")]
pub mod resource {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
