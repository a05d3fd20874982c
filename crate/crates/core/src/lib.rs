// `!(x > 0.0)` is used on purpose: it rejects NaN too. Coefficient tables
// keep the digits they were published with.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod curves;
pub mod estimation;
pub mod measures;
pub mod montecarlo;
pub mod numerics;
