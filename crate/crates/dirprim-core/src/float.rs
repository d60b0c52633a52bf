//! Float math shim.
//!
//! Under `no_std` the inherent `f64` transcendental methods are unavailable,
//! so modules import this prelude to bring `num_traits::Float` (backed by
//! `libm`) into scope. With `std` enabled the glob imports nothing and the
//! inherent methods are used.

#[cfg(not(feature = "std"))]
pub(crate) use num_traits::Float;
