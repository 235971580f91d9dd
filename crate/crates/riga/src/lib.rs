//! Research toolkit for studying resource-identifier generation over
//! content-addressed storage: a skewed interpolation-based generator, a
//! byte-exact CIDv0 codec, a deterministic desk-scale simulation of an
//! IPFS-like network (store, gateways, bots, operator), and a measurement
//! harness for live public gateways.
//!
//! Built for defenders: campaigns exist only inside the simulator, and the
//! one component that touches the real network fetches well-known public
//! content at a deliberately throttled rate.
//!
//! Start with the runnable examples: each major capability has one under
//! `examples/`. The `riga` binary wraps the same library entry points.

pub mod agents;
pub mod cidcodec;
pub mod cli;
pub mod gatewaysim;
pub mod harness;
pub mod keys;
pub mod modfield;
pub mod probe;
pub mod rigacore;
pub mod storesim;
