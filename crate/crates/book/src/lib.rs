//! Runs the code listings of the guide in `book/` as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/measures.md")]
mod measures {}
#[doc = include_str!("../../../book/src/modelspace.md")]
mod modelspace {}
#[doc = include_str!("../../../book/src/calculus.md")]
mod calculus {}
#[doc = include_str!("../../../book/src/schatten.md")]
mod schatten {}
#[doc = include_str!("../../../book/src/parfenov.md")]
mod parfenov {}
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
