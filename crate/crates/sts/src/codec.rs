//! GFT Reed-Solomon codec for single-tone signaling.
//!
//! A message is split into K base-D digits and encoded through an N-point
//! Galois Fourier Transform into N field elements; each element is the
//! index of the subcarrier energized in the corresponding OFDM symbol.
//! Placing the digits after a forced zero in the transform input gives
//! every valid codeword a zero first inverse-GFT coefficient, which is
//! what makes frequency-offset detection and recovery possible: an offset
//! adds a constant to every tone index, and the first inverse-GFT
//! coefficient of the shifted word equals exactly that constant.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::galois::{Field, FieldElement};
use crate::phy::DetectionGrid;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum CodecError {
    #[error("message {m} out of range (must be < {max})")]
    MessageOutOfRange { m: u64, max: u128 },
    #[error("block length {n} does not divide field order minus one ({p} - 1)")]
    BlockLengthIncompatible { n: usize, p: u64 },
    #[error("message length k={k} must satisfy 1 <= k <= n={n}")]
    InvalidMessageLength { k: usize, n: usize },
    #[error("block length {n} too short for k={k} digits plus the leading zero")]
    BlockTooShort { k: usize, n: usize },
    #[error("candidate space {total} exceeds enumeration cap {cap}")]
    CandidateSpaceTooLarge { total: u128, cap: u64 },
}

/// Code parameters: field of order D, block length N, message length K.
///
/// N must divide D-1 so that alpha^((D-1)/N) is a primitive N-th root of
/// unity, the kernel of the GFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeParams {
    field: Field,
    n: usize,
    k: usize,
}

impl CodeParams {
    pub fn new(field: Field, n: usize, k: usize) -> Result<CodeParams, CodecError> {
        if k < 1 || k > n {
            return Err(CodecError::InvalidMessageLength { k, n });
        }
        let p = field.modulus();
        if n == 0 || (p - 1) % n as u64 != 0 {
            return Err(CodecError::BlockLengthIncompatible { n, p });
        }
        Ok(CodeParams { field, n, k })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn message_len(&self) -> usize {
        self.k
    }

    /// Error-correction capability t = floor((N-K)/2).
    pub fn t_errors(&self) -> usize {
        (self.n - self.k) / 2
    }

    /// Erasure-correction capability rho = N-K.
    pub fn rho_erasures(&self) -> usize {
        self.n - self.k
    }

    /// Number of distinct messages, D^K (saturating for absurd K; anything
    /// near the saturation point is far beyond the enumeration cap anyway).
    pub fn message_space(&self) -> u128 {
        (self.field.modulus() as u128).saturating_pow(self.k as u32)
    }

    pub fn context(&self) -> GftContext {
        GftContext::new(self.field, self.n).expect("params already validated")
    }
}

/// A message and its base-D digit expansion, least-significant digit first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    value: u64,
    digits: Vec<FieldElement>,
}

impl Message {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn digits(&self) -> &[FieldElement] {
        &self.digits
    }
}

/// Raw base-d expansion of m into k digits, least significant first.
/// Returns None when m does not fit in k digits.
pub fn base_digits(m: u64, d: u64, k: usize) -> Option<Vec<u64>> {
    let max = (d as u128).pow(k as u32);
    if (m as u128) >= max {
        return None;
    }
    let mut rest = m;
    let digits = (0..k)
        .map(|_| {
            let digit = rest % d;
            rest /= d;
            digit
        })
        .collect();
    Some(digits)
}

/// Inverse of [`base_digits`]: m = sum digits[i] * d^i.
pub fn digits_to_value(digits: &[u64], d: u64) -> u64 {
    digits.iter().rev().fold(0u64, |acc, &u| acc * d + u)
}

/// Splits m into K base-D field elements.
pub fn pack_message(m: u64, params: &CodeParams) -> Result<Message, CodecError> {
    let d = params.field.modulus();
    let digits = base_digits(m, d, params.k).ok_or(CodecError::MessageOutOfRange {
        m,
        max: params.message_space(),
    })?;
    Ok(Message {
        value: m,
        digits: digits.into_iter().map(|u| params.field.element(u)).collect(),
    })
}

/// Recombines digits into the message value.
pub fn unpack_message(msg: &Message) -> u64 {
    let d = msg
        .digits
        .first()
        .map(|e| e.field().modulus())
        .unwrap_or(2);
    let raw: Vec<u64> = msg.digits.iter().map(|e| e.value()).collect();
    digits_to_value(&raw, d)
}

/// The N x N GFT matrix Z with Z[i][j] = alpha^((D-1)/N * i * j) and its
/// inverse Zinv[i][j] = N^-1 * alpha^(-(D-1)/N * i * j).
#[derive(Debug, Clone)]
pub struct GftContext {
    field: Field,
    n: usize,
    z: Vec<Vec<FieldElement>>,
    zinv: Vec<Vec<FieldElement>>,
}

impl GftContext {
    pub fn new(field: Field, n: usize) -> Result<GftContext, CodecError> {
        let p = field.modulus();
        if n == 0 || (p - 1) % n as u64 != 0 {
            return Err(CodecError::BlockLengthIncompatible { n, p });
        }
        let alpha = field.primitive_element();
        let step = (p - 1) / n as u64;
        let order = p - 1;
        // exponents reduced mod p-1 (alpha has order p-1)
        let z: Vec<Vec<FieldElement>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| alpha.pow((step as u128 * i as u128 * j as u128 % order as u128) as u64))
                    .collect()
            })
            .collect();
        let n_inv = field
            .element(n as u64)
            .inv()
            .expect("n < p so n is invertible");
        let zinv: Vec<Vec<FieldElement>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let e = step as u128 * i as u128 * j as u128 % order as u128;
                        let neg = (order as u128 - e) % order as u128;
                        n_inv * alpha.pow(neg as u64)
                    })
                    .collect()
            })
            .collect();
        let ctx = GftContext { field, n, z, zinv };
        ctx.verify_inverse();
        Ok(ctx)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn z(&self, i: usize, j: usize) -> FieldElement {
        self.z[i][j]
    }

    fn verify_inverse(&self) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let mut acc = self.field.zero();
                for l in 0..n {
                    acc = acc + self.z[i][l] * self.zinv[l][j];
                }
                let expected = if i == j { 1 } else { 0 };
                assert_eq!(acc.value(), expected, "Z * Zinv != I at ({i},{j})");
            }
        }
    }
}

/// Length-N codeword; element n is the subcarrier index energized in
/// OFDM symbol n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StsCodeword {
    symbols: Vec<FieldElement>,
}

impl StsCodeword {
    pub fn symbols(&self) -> &[FieldElement] {
        &self.symbols
    }

    pub fn indices(&self) -> Vec<u64> {
        self.symbols.iter().map(|e| e.value()).collect()
    }

    /// Element-wise shift by delta, as a frequency offset would produce.
    /// The result is in general not a valid codeword, hence the plain vector.
    pub fn shifted(&self, delta: FieldElement) -> Vec<FieldElement> {
        self.symbols.iter().map(|&c| c + delta).collect()
    }
}

/// Encodes digits through the GFT: c = Z * [0, u_1, ..., u_K, 0, ..., 0]^T.
pub fn encode(msg: &Message, ctx: &GftContext) -> Result<StsCodeword, CodecError> {
    let k = msg.digits.len();
    let n = ctx.n;
    if k + 1 > n {
        return Err(CodecError::BlockTooShort { k, n });
    }
    let symbols = (0..n)
        .map(|i| {
            let mut acc = ctx.field.zero();
            for (idx, &u) in msg.digits.iter().enumerate() {
                // transform input has the digits at positions 1..=K
                acc = acc + ctx.z[i][idx + 1] * u;
            }
            acc
        })
        .collect();
    Ok(StsCodeword { symbols })
}

/// Zinv * c.
pub fn inverse_gft(c: &[FieldElement], ctx: &GftContext) -> Vec<FieldElement> {
    assert_eq!(c.len(), ctx.n, "input length must equal block length");
    (0..ctx.n)
        .map(|i| {
            let mut acc = ctx.field.zero();
            for (j, &cj) in c.iter().enumerate() {
                acc = acc + ctx.zinv[i][j] * cj;
            }
            acc
        })
        .collect()
}

/// A vector is a valid codeword iff its inverse GFT has a zero first
/// element and zeros in positions K+1..N-1.
pub fn is_valid_codeword(c: &[FieldElement], params: &CodeParams) -> bool {
    let ctx = params.context();
    let v = inverse_gft(c, &ctx);
    if !v[0].is_zero() {
        return false;
    }
    v[params.k + 1..].iter().all(|e| e.is_zero())
}

/// The frequency offset estimate: first inverse-GFT element, which for a
/// shifted codeword [c_1+delta, ..., c_N+delta] equals N^-1 * sum = delta.
pub fn estimate_offset(c_shifted: &[FieldElement], ctx: &GftContext) -> FieldElement {
    assert_eq!(c_shifted.len(), ctx.n);
    let sum = c_shifted
        .iter()
        .fold(ctx.field.zero(), |acc, &x| acc + x);
    let n_inv = ctx
        .field
        .element(ctx.n as u64)
        .inv()
        .expect("n < p so n is invertible");
    n_inv * sum
}

/// Subtracts delta from every symbol, undoing a frequency offset.
pub fn correct_offset(c_shifted: &[FieldElement], delta: FieldElement) -> StsCodeword {
    StsCodeword {
        symbols: c_shifted.iter().map(|&c| c - delta).collect(),
    }
}

/// Recovers the message value from a codeword, or None when the vector
/// fails validity.
pub fn codeword_message(c: &[FieldElement], params: &CodeParams) -> Option<u64> {
    let ctx = params.context();
    let v = inverse_gft(c, &ctx);
    if !v[0].is_zero() || !v[params.k + 1..].iter().all(|e| e.is_zero()) {
        return None;
    }
    let digits: Vec<u64> = v[1..=params.k].iter().map(|e| e.value()).collect();
    Some(digits_to_value(&digits, params.field.modulus()))
}

/// Largest number of simultaneous users d such that K <= ceil(N/d), capped
/// at the D^K distinct messages. For K=1 the inequality holds for every d,
/// so the cap applies directly.
pub fn separability_bound(n: usize, k: usize, field_order: u64) -> u64 {
    let total = (field_order as u128).saturating_pow(k as u32);
    let cap = total.min(u64::MAX as u128) as u64;
    if k == 1 {
        return cap;
    }
    // ceil(n/d) >= k  <=>  d < n/(k-1)
    let km1 = (k - 1) as u64;
    let n = n as u64;
    let d = if n % km1 == 0 { n / km1 - 1 } else { n / km1 };
    d.max(1).min(cap)
}

/// Decoder acceptance threshold: a candidate message is returned when its
/// codeword tone lies in the detected set for at least `tau` of the N
/// OFDM symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderConfig {
    pub tau: usize,
    pub enumeration_cap: u64,
}

pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

impl DecoderConfig {
    pub fn new(tau: usize) -> DecoderConfig {
        DecoderConfig {
            tau,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    /// tau = ceil(N/2), balancing the error and erasure budgets.
    pub fn balanced(params: &CodeParams) -> DecoderConfig {
        DecoderConfig::new(params.block_len().div_ceil(2))
    }

    pub fn with_cap(mut self, cap: u64) -> DecoderConfig {
        self.enumeration_cap = cap;
        self
    }
}

/// Threshold-score list decoding over the full candidate space.
///
/// Every message in 0..D^K is scored by counting the OFDM symbols whose
/// detected tone set contains the candidate codeword's tone; candidates
/// scoring at least tau are returned. Under perfect detection with tau=N
/// this realizes unambiguous multi-user separation up to the
/// separability bound.
pub fn decode_multiuser(
    detections: &DetectionGrid,
    params: &CodeParams,
    cfg: &DecoderConfig,
) -> Result<BTreeSet<u64>, CodecError> {
    let n = params.n;
    assert_eq!(detections.symbols(), n, "detection grid must have N symbol sets");
    assert!(cfg.tau >= 1 && cfg.tau <= n, "tau must lie in 1..=N");

    let total = params.message_space();
    if total > cfg.enumeration_cap as u128 {
        return Err(CodecError::CandidateSpaceTooLarge {
            total,
            cap: cfg.enumeration_cap,
        });
    }
    let total = total as u64;
    let p = params.field.modulus();

    // per-symbol membership masks over tone indices < p
    let masks: Vec<Vec<bool>> = (0..n)
        .map(|sym| {
            let mut mask = vec![false; p as usize];
            for &idx in detections.set(sym) {
                if (idx as u64) < p {
                    mask[idx as usize] = true;
                }
            }
            mask
        })
        .collect();

    // raw GFT columns 1..=K, used to synthesize candidate tones cheaply
    let ctx = params.context();
    let zcols: Vec<Vec<u64>> = (1..=params.k)
        .map(|col| (0..n).map(|i| ctx.z[i][col].value()).collect())
        .collect();

    let mut accepted = BTreeSet::new();
    let mut digits = vec![0u64; params.k];
    for m in 0..total {
        let mut score = 0usize;
        for (sym, mask) in masks.iter().enumerate() {
            let mut tone: u64 = 0;
            for (col, &u) in digits.iter().enumerate() {
                tone = (tone as u128 + u as u128 * zcols[col][sym] as u128 % p as u128) as u64 % p;
            }
            if mask[tone as usize] {
                score += 1;
            }
        }
        if score >= cfg.tau {
            accepted.insert(m);
        }
        // next candidate's digit expansion
        for d in digits.iter_mut() {
            *d += 1;
            if *d < p {
                break;
            }
            *d = 0;
        }
    }
    Ok(accepted)
}
