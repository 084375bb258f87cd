// SPDX-License-Identifier: Apache-2.0
//! Nested two-way regular path queries over ELHI-bottom knowledge bases.

pub mod eval;
pub mod kb;
pub mod loops;
pub mod par;
pub mod query;
pub mod random;
pub mod reductions;
pub mod reasoner;
pub mod rewrite;
