//! Broadcast-encryption access control for in-network cached content,
//! plus a deterministic ICN cache simulator.
//!
//! The crate has two halves. The cryptographic half implements a
//! threshold-secret-sharing broadcast encryption scheme over a Schnorr
//! group: a provider generates a secret polynomial, hands every user one
//! point on it, and publishes a signed *enabling block* alongside each
//! encrypted content object. Any non-revoked user combines the block with
//! their own share to recover the content key; revoked users hit a
//! division by zero. The networking half is a discrete-event simulator of
//! LRU-caching routers that measures how the enabling-block traffic and
//! in-path caches affect download counts and latency.

pub mod block;
pub mod content;
pub mod extract;
pub mod group;
pub mod rng;
pub mod shares;
pub mod sim;
pub mod wire;
