//! Coupled-layer MSR regenerating code.
//!
//! An `(n = 2qt, k = 2q(t-1), d = n-q-1)` vector erasure code over GF(2^m)
//! with sub-packetization `alpha = q(2q)^(t-1)`. Any `n-k = 2q` node
//! erasures are decodable from the survivors, and a single failed node is
//! regenerated from `d` helpers by downloading only `beta = alpha/q`
//! symbols from each — the minimum-storage regenerating point, with `d`
//! strictly below `n-1` so that `q` slow or busy nodes can sit out every
//! repair.
//!
//! Module map:
//! - [`field`]: GF(2^m) tables plus dense elimination/solving.
//! - [`code`]: parameters, node/plane coordinates, companion pairing,
//!   intersection scores.
//! - [`codec`]: encoder, parity checks, sequential erasure decoder, and
//!   shortening/puncturing profiles.
//! - [`repair`]: bandwidth-optimal single-node repair.
//! - [`oracle`]: independent brute-force verifiers (parity-system rank,
//!   repair-by-full-decode, exhaustive sweeps).

pub mod code;
pub mod codec;
pub mod field;
pub mod oracle;
pub mod repair;

pub use code::{derive_params, CodeParams, DataCube, ErasurePattern, NodeId, PlaneId};
pub use codec::{
    decode_erasures, decode_message, encode, is_codeword, puncture_profile, shorten_profile,
    Message, NodeContent,
};
pub use field::{Fe, FieldContext};
pub use repair::{
    bandwidth_accounting, helper_extract, plan_repair, repair_node, HelperBundle, RepairPlan,
};
