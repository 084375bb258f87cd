// SPDX-License-Identifier: Apache-2.0
//! Data-parallel helpers with a sequential fallback.
//!
//! Without the `parallel` feature every helper runs on the calling thread.

/// Concatenates `f` over `items`, in input order.
pub fn flat_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> Vec<U> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().flat_map_iter(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().flat_map(f).collect()
    }
}

/// Maps `f` over `items`, in input order.
pub fn map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Whether the feature-gated parallel path is compiled in.
pub const AVAILABLE: bool = cfg!(feature = "parallel");
