//! Capability data model and its canonical TLV wire format.
//!
//! ```text
//! "DCAP" 0x01 { tag:u8 len:u32be value }*
//! ```
//!
//! Records appear in strictly ascending tag order. The signature record
//! (tag 0x06) is always last, so the signing payload is exactly the
//! encoding with that record cut off.

use std::fmt;

use crate::armor::{self, CAPABILITY_PREFIX};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"DCAP";
pub const VERSION: u8 = 0x01;

pub const KEY_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;
pub const MAX_OBJECT_LEN: usize = 4096;
pub const MAX_PRIVILEGE_LEN: usize = 256;

pub const TAG_GRANTOR: u8 = 0x01;
pub const TAG_FLAVOR: u8 = 0x02;
pub const TAG_VALIDITY: u8 = 0x03;
pub const TAG_SERIAL: u8 = 0x04;
pub const TAG_TUPLES: u8 = 0x05;
pub const TAG_SIGNATURE: u8 = 0x06;

/// A 32-byte Ed25519 verification key used as an identity.
pub type PublicKey = [u8; KEY_LEN];
pub type Signature = [u8; SIGNATURE_LEN];

/// Length of the trailing signature record: tag, length and 64 bytes.
const SIGNATURE_RECORD_LEN: usize = 1 + 4 + SIGNATURE_LEN;

/// Grantee, object and privilege. Object and privilege are opaque and
/// compared byte for byte.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AuthorizationTuple {
    grantee: PublicKey,
    object: Vec<u8>,
    privilege: Vec<u8>,
}

impl AuthorizationTuple {
    pub fn new(
        grantee: PublicKey,
        object: impl Into<Vec<u8>>,
        privilege: impl Into<Vec<u8>>,
    ) -> Result<Self> {
        let object = object.into();
        let privilege = privilege.into();
        if object.is_empty() || object.len() > MAX_OBJECT_LEN {
            return Err(Error::InvalidCapability(format!(
                "object length {} outside 1..={MAX_OBJECT_LEN}",
                object.len()
            )));
        }
        if privilege.is_empty() || privilege.len() > MAX_PRIVILEGE_LEN {
            return Err(Error::InvalidCapability(format!(
                "privilege length {} outside 1..={MAX_PRIVILEGE_LEN}",
                privilege.len()
            )));
        }
        Ok(Self {
            grantee,
            object,
            privilege,
        })
    }

    pub fn grantee(&self) -> &PublicKey {
        &self.grantee
    }

    pub fn object(&self) -> &[u8] {
        &self.object
    }

    pub fn privilege(&self) -> &[u8] {
        &self.privilege
    }

    /// Exact byte-for-byte match against a request.
    pub fn matches(&self, grantee: &[u8], object: &[u8], privilege: &[u8]) -> bool {
        self.grantee[..] == *grantee && self.object == object && self.privilege == privilege
    }

    fn encoded_len(&self) -> usize {
        12 + KEY_LEN + self.object.len() + self.privilege.len()
    }
}

impl fmt::Debug for AuthorizationTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AuthorizationTuple")
            .field("grantee", &armor::b64url(&self.grantee))
            .field("object", &String::from_utf8_lossy(&self.object))
            .field("privilege", &String::from_utf8_lossy(&self.privilege))
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    Grant,
    Revocation,
}

impl Flavor {
    pub fn to_byte(self) -> u8 {
        match self {
            Flavor::Grant => 0x00,
            Flavor::Revocation => 0x01,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x00 => Some(Flavor::Grant),
            0x01 => Some(Flavor::Revocation),
            _ => None,
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Grant => "GRANT",
            Flavor::Revocation => "REVOCATION",
        })
    }
}

/// Window of Unix seconds during which a capability applies. Both ends are
/// inclusive; `not_before < not_after` always holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValidityPeriod {
    not_before: u64,
    not_after: u64,
}

impl ValidityPeriod {
    pub fn new(not_before: u64, not_after: u64) -> Result<Self> {
        if not_before >= not_after {
            return Err(Error::InvalidValidity(format!(
                "not_before {not_before} must precede not_after {not_after}"
            )));
        }
        Ok(Self {
            not_before,
            not_after,
        })
    }

    pub fn not_before(&self) -> u64 {
        self.not_before
    }

    pub fn not_after(&self) -> u64 {
        self.not_after
    }

    pub fn contains(&self, at: u64) -> bool {
        self.not_before <= at && at <= self.not_after
    }
}

/// A signed grant or revocation.
///
/// Fields are only reachable through constructors that enforce the type
/// invariants, so encoding a `Capability` cannot fail. A freshly built
/// capability carries whatever signature it was given; [`Capability::unsigned`]
/// uses 64 zero bytes until the grantor signs the payload.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Capability {
    grantor_id: PublicKey,
    flavor: Flavor,
    validity: Option<ValidityPeriod>,
    serial: u64,
    tuples: Vec<AuthorizationTuple>,
    signature: Signature,
}

impl Capability {
    pub fn new(
        grantor_id: PublicKey,
        flavor: Flavor,
        validity: Option<ValidityPeriod>,
        serial: u64,
        tuples: Vec<AuthorizationTuple>,
        signature: Signature,
    ) -> Result<Self> {
        if tuples.is_empty() {
            return Err(Error::InvalidCapability(
                "a capability must carry at least one tuple".into(),
            ));
        }
        let body: usize = 4 + tuples
            .iter()
            .map(AuthorizationTuple::encoded_len)
            .sum::<usize>();
        if u32::try_from(body).is_err() {
            return Err(Error::InvalidCapability("tuple list too large".into()));
        }
        Ok(Self {
            grantor_id,
            flavor,
            validity,
            serial,
            tuples,
            signature,
        })
    }

    pub fn unsigned(
        grantor_id: PublicKey,
        flavor: Flavor,
        validity: Option<ValidityPeriod>,
        serial: u64,
        tuples: Vec<AuthorizationTuple>,
    ) -> Result<Self> {
        Self::new(
            grantor_id,
            flavor,
            validity,
            serial,
            tuples,
            [0; SIGNATURE_LEN],
        )
    }

    pub fn with_signature(mut self, signature: Signature) -> Self {
        self.signature = signature;
        self
    }

    pub fn grantor_id(&self) -> &PublicKey {
        &self.grantor_id
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn validity(&self) -> Option<&ValidityPeriod> {
        self.validity.as_ref()
    }

    pub fn serial(&self) -> u64 {
        self.serial
    }

    pub fn tuples(&self) -> &[AuthorizationTuple] {
        &self.tuples
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// The bytes the grantor signs: the full encoding minus the signature record.
    pub fn signing_payload(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.payload_len_hint());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        put_record(&mut out, TAG_GRANTOR, &self.grantor_id);
        put_record(&mut out, TAG_FLAVOR, &[self.flavor.to_byte()]);
        if let Some(v) = &self.validity {
            let mut value = [0u8; 16];
            value[..8].copy_from_slice(&v.not_before.to_be_bytes());
            value[8..].copy_from_slice(&v.not_after.to_be_bytes());
            put_record(&mut out, TAG_VALIDITY, &value);
        }
        put_record(&mut out, TAG_SERIAL, &self.serial.to_be_bytes());

        let body_len = 4 + self
            .tuples
            .iter()
            .map(AuthorizationTuple::encoded_len)
            .sum::<usize>();
        out.push(TAG_TUPLES);
        out.extend_from_slice(&(body_len as u32).to_be_bytes());
        out.extend_from_slice(&(self.tuples.len() as u32).to_be_bytes());
        for t in &self.tuples {
            put_prefixed(&mut out, &t.grantee);
            put_prefixed(&mut out, &t.object);
            put_prefixed(&mut out, &t.privilege);
        }
        out
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.signing_payload();
        put_record(&mut out, TAG_SIGNATURE, &self.signature);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        Self::decode_with_payload(bytes).map(|(cap, _)| cap)
    }

    /// Decodes `bytes` and returns the slice of the *received* bytes that the
    /// signature covers.
    pub fn decode_with_payload(bytes: &[u8]) -> Result<(Self, &[u8])> {
        decode(bytes)
    }

    /// `dcap1:` text form used in files and on the command line.
    pub fn to_text(&self) -> String {
        armor::armor(CAPABILITY_PREFIX, &self.encode())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::decode(&armor::dearmor(CAPABILITY_PREFIX, text)?)
    }

    fn payload_len_hint(&self) -> usize {
        5 + 37
            + 6
            + 21
            + 13
            + 9
            + self
                .tuples
                .iter()
                .map(AuthorizationTuple::encoded_len)
                .sum::<usize>()
    }
}

pub fn encode_capability(cap: &Capability) -> Vec<u8> {
    cap.encode()
}

pub fn decode_capability(bytes: &[u8]) -> Result<Capability> {
    Capability::decode(bytes)
}

pub fn signing_payload(cap: &Capability) -> Vec<u8> {
    cap.signing_payload()
}

fn put_record(out: &mut Vec<u8>, tag: u8, value: &[u8]) {
    out.push(tag);
    out.extend_from_slice(&(value.len() as u32).to_be_bytes());
    out.extend_from_slice(value);
}

fn put_prefixed(out: &mut Vec<u8>, value: &[u8]) {
    out.extend_from_slice(&(value.len() as u32).to_be_bytes());
    out.extend_from_slice(value);
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Malformed(format!(
                "truncated {what}: need {n} bytes, have {}",
                self.remaining()
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn prefixed(&mut self, what: &str) -> Result<&'a [u8]> {
        let len = self.u32(what)? as usize;
        self.take(len, what)
    }
}

fn fixed<const N: usize>(value: &[u8], what: &str) -> Result<[u8; N]> {
    value.try_into().map_err(|_| {
        Error::InvalidCapability(format!("{what} must be {N} bytes, got {}", value.len()))
    })
}

fn decode(bytes: &[u8]) -> Result<(Capability, &[u8])> {
    let mut r = Reader::new(bytes);
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::Malformed("bad magic".into()));
    }
    let version = r.u8("version")?;
    if version != VERSION {
        return Err(Error::Malformed(format!("unsupported version {version}")));
    }

    let mut grantor_id = None;
    let mut flavor = None;
    let mut validity = None;
    let mut serial = None;
    let mut tuples = None;
    let mut signature = None;
    let mut payload_end = 0;
    let mut last_tag = 0u8;

    while r.remaining() > 0 {
        let start = r.pos;
        let tag = r.u8("record tag")?;
        if tag <= last_tag {
            return Err(Error::Malformed(format!(
                "record tag {tag:#04x} out of order after {last_tag:#04x}"
            )));
        }
        last_tag = tag;
        let value = r.prefixed("record value")?;
        match tag {
            TAG_GRANTOR => grantor_id = Some(fixed::<KEY_LEN>(value, "grantor id")?),
            TAG_FLAVOR => {
                let [b] = fixed::<1>(value, "flavor")?;
                flavor =
                    Some(Flavor::from_byte(b).ok_or_else(|| {
                        Error::InvalidCapability(format!("unknown flavor {b:#04x}"))
                    })?);
            }
            TAG_VALIDITY => {
                let v = fixed::<16>(value, "validity")?;
                let not_before = u64::from_be_bytes(v[..8].try_into().unwrap());
                let not_after = u64::from_be_bytes(v[8..].try_into().unwrap());
                validity = Some(
                    ValidityPeriod::new(not_before, not_after)
                        .map_err(|e| Error::InvalidCapability(e.to_string()))?,
                );
            }
            TAG_SERIAL => serial = Some(u64::from_be_bytes(fixed::<8>(value, "serial")?)),
            TAG_TUPLES => tuples = Some(decode_tuples(value)?),
            TAG_SIGNATURE => {
                signature = Some(fixed::<SIGNATURE_LEN>(value, "signature")?);
                payload_end = start;
            }
            other => return Err(Error::Malformed(format!("unknown record tag {other:#04x}"))),
        }
    }

    let missing = |what: &str| Error::Malformed(format!("missing {what} record"));
    let cap = Capability::new(
        grantor_id.ok_or_else(|| missing("grantor id"))?,
        flavor.ok_or_else(|| missing("flavor"))?,
        validity,
        serial.ok_or_else(|| missing("serial"))?,
        tuples.ok_or_else(|| missing("tuples"))?,
        signature.ok_or_else(|| missing("signature"))?,
    )?;
    debug_assert_eq!(payload_end + SIGNATURE_RECORD_LEN, bytes.len());
    Ok((cap, &bytes[..payload_end]))
}

fn decode_tuples(value: &[u8]) -> Result<Vec<AuthorizationTuple>> {
    let mut r = Reader::new(value);
    let count = r.u32("tuple count")?;
    if count == 0 {
        return Err(Error::InvalidCapability(
            "a capability must carry at least one tuple".into(),
        ));
    }
    let mut tuples = Vec::new();
    for _ in 0..count {
        let grantee = r.prefixed("grantee")?;
        let object = r.prefixed("object")?;
        let privilege = r.prefixed("privilege")?;
        tuples.push(AuthorizationTuple::new(
            fixed::<KEY_LEN>(grantee, "grantee")?,
            object,
            privilege,
        )?);
    }
    if r.remaining() != 0 {
        return Err(Error::Malformed(format!(
            "{} trailing bytes after tuple list",
            r.remaining()
        )));
    }
    Ok(tuples)
}
