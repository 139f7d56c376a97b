//! The 9-bit resource coordination request message.
//!
//! Layout, high bits first: 2-bit radio resource ID, 3-bit traffic
//! priority, 2-bit target SINR range, 2-bit hashed serving base station
//! identity. The full base station ID (9 bits) does not fit, so a
//! time-varying hash folds it to 2 bits; two users served by the same
//! base station never collide anyway because their resource IDs differ.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum RcrmError {
    #[error("field {name} value {value} exceeds its {bits}-bit width")]
    FieldOverflow {
        name: &'static str,
        value: u8,
        bits: u8,
    },
    #[error("message {0} out of the 9-bit range")]
    MessageOutOfRange(u64),
    #[error("base station id {0} out of the 9-bit range")]
    BsidOutOfRange(u16),
}

/// Resource coordination request message fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rcrm {
    pub resource_id: u8,
    pub priority: u8,
    pub target_sinr: u8,
    pub bs_hash: u8,
}

impl std::fmt::Display for Rcrm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "rid={} prio={} sinr={} bshash={}",
            self.resource_id, self.priority, self.target_sinr, self.bs_hash
        )
    }
}

/// 9-bit serving base station identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaseStationId(u16);

impl BaseStationId {
    pub fn new(id: u16) -> Result<BaseStationId, RcrmError> {
        if id >= 512 {
            return Err(RcrmError::BsidOutOfRange(id));
        }
        Ok(BaseStationId(id))
    }

    pub fn value(&self) -> u16 {
        self.0
    }
}

fn check_width(name: &'static str, value: u8, bits: u8) -> Result<(), RcrmError> {
    if value >> bits != 0 {
        return Err(RcrmError::FieldOverflow { name, value, bits });
    }
    Ok(())
}

/// Packs the fields into the 9-bit message value.
pub fn rcrm_pack(r: &Rcrm) -> Result<u16, RcrmError> {
    check_width("resource_id", r.resource_id, 2)?;
    check_width("priority", r.priority, 3)?;
    check_width("target_sinr", r.target_sinr, 2)?;
    check_width("bs_hash", r.bs_hash, 2)?;
    Ok(((r.resource_id as u16) << 7)
        | ((r.priority as u16) << 4)
        | ((r.target_sinr as u16) << 2)
        | r.bs_hash as u16)
}

/// Inverse of [`rcrm_pack`].
pub fn rcrm_unpack(m: u64) -> Result<Rcrm, RcrmError> {
    if m >= 512 {
        return Err(RcrmError::MessageOutOfRange(m));
    }
    let m = m as u16;
    Ok(Rcrm {
        resource_id: ((m >> 7) & 0x3) as u8,
        priority: ((m >> 4) & 0x7) as u8,
        target_sinr: ((m >> 2) & 0x3) as u8,
        bs_hash: (m & 0x3) as u8,
    })
}

/// Folds the 9-bit base station ID and the time slot into 2 bits.
///
/// Knuth multiplicative mixes for both inputs, with the slot constant
/// scaled into the high half-word so that consecutive slots actually move
/// the two extracted top bits.
pub fn hash_bsid(bsid: BaseStationId, timeslot: u32) -> u8 {
    let mixed = (bsid.0 as u32)
        .wrapping_mul(2_654_435_761)
        .wrapping_add(timeslot.wrapping_mul(40_503 << 16));
    (mixed >> 30) as u8
}

/// Two messages collide iff they pack to the same value; the receiver
/// then sees their merged tones as a single message.
pub fn collides(a: &Rcrm, b: &Rcrm) -> bool {
    rcrm_pack(a).expect("valid message") == rcrm_pack(b).expect("valid message")
}
