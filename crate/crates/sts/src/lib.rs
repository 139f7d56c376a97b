//! Coded single-tone signaling (STS) library.
//!
//! STS carries information in the *position* of a lone energized OFDM
//! tone, one per symbol, rather than in amplitude or phase. Messages are
//! protected by a Reed-Solomon code realized as a Galois Fourier
//! Transform over a prime field, which buys three things at once:
//! multi-user separability up to a provable bound, tolerance of tone
//! detection errors and erasures, and algebraic recovery of the
//! receiver's frequency offset.
//!
//! Modules mirror the processing chain: [`galois`] for the field,
//! [`codec`] for encoding/decoding and offset recovery, [`phy`] for the
//! tone grid, fading channel, and energy detector, [`rcrm`] for the
//! 9-bit coordination message carried at the flagship scale, and
//! [`simkit`] for seeded Monte Carlo experiments over SIR sweeps.

pub mod codec;
pub mod galois;
pub mod phy;
pub mod rcrm;
pub mod simkit;
