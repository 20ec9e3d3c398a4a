//! Semantic channel equalization and slot-level resource control for
//! multi-agent edge inference.
//!
//! Independently trained encoders produce latent spaces that disagree up to
//! (approximately) an angle-preserving transform. This crate aligns them
//! zero-shot through shared anchor data turned into analysis frames
//! ([`frame`], [`anchors`], [`equalize`]), quantizes the resulting
//! coefficients for the air interface ([`quant`]), and evaluates the
//! downstream effect on synthetic or imported embedding worlds ([`world`],
//! [`emb1`]).
//!
//! On top of that sits a per-slot controller for many agents sharing a faded
//! uplink and an edge server: virtual queues track long-term latency and
//! accuracy constraints ([`lyapunov`]), closed forms pick clocks, rates and
//! bandwidth shares, and a greedy menu search picks anchor counts and bit
//! depths each slot ([`allocator`], [`phy`]). The [`sim`] module runs whole
//! scenarios described by a [`config::ScenarioConfig`], audits every slot
//! record against the drift inequality, and writes traces as CSV. The
//! `semeq` binary exposes all of it on the command line.
//!
//! Each capability has a runnable demo under `examples/`:
//!
//! - `frame_whitening`: analysis operators, frame bounds, whitening.
//! - `zero_shot_equalization`: the three equalizer families side by side.
//! - `anchor_strategies`: prototypical vs uniform anchors, world export.
//! - `quantization_tradeoff`: accuracy against bit depth and compression.
//! - `fading_uplink`: path loss, fading, capacity and power closed forms.
//! - `greedy_allocation`: one slot of the allocator under queue pressure.
//! - `dynamic_simulation`: a full closed-loop run with per-slot audits.
//! - `power_latency_sweep`: the power cost of tighter targets.
//! - `scenario_config`: writing a scenario file for the CLI.

pub mod allocator;
pub mod anchors;
pub mod config;
pub mod emb1;
pub mod equalize;
pub mod error;
pub mod frame;
pub mod lyapunov;
pub mod phy;
pub mod quant;
pub mod seeds;
pub mod sim;
pub mod world;

pub use error::{Error, Result};
