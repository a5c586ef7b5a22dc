//! Capability verification and the authorization decision.
//!
//! A decision for one grantor is made by the applicable capability with the
//! highest serial: replaying applicable capabilities in issue order and
//! letting each overwrite the verdict ends on exactly that one. Absent any
//! applicable capability the answer is deny.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::capability::{Capability, Flavor, PublicKey};
use crate::error::{Error, Result};
use crate::identity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VerificationResult {
    Valid,
    BadSignature,
    Expired,
    NotYetValid,
    UntrustedGrantor,
    Malformed,
}

impl fmt::Display for VerificationResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerificationResult::Valid => "VALID",
            VerificationResult::BadSignature => "BAD_SIGNATURE",
            VerificationResult::Expired => "EXPIRED",
            VerificationResult::NotYetValid => "NOT_YET_VALID",
            VerificationResult::UntrustedGrantor => "UNTRUSTED_GRANTOR",
            VerificationResult::Malformed => "MALFORMED",
        })
    }
}

/// Grantor keys a verifier accepts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrustAnchors(BTreeSet<PublicKey>);

impl TrustAnchors {
    pub fn new(keys: impl IntoIterator<Item = PublicKey>) -> Self {
        Self(keys.into_iter().collect())
    }

    pub fn trusts(&self, key: &PublicKey) -> bool {
        self.0.contains(key)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PublicKey> {
        self.0.iter()
    }
}

impl FromIterator<PublicKey> for TrustAnchors {
    fn from_iter<I: IntoIterator<Item = PublicKey>>(iter: I) -> Self {
        Self::new(iter)
    }
}

pub fn verify_capability(bytes: &[u8], anchors: &TrustAnchors, now: u64) -> VerificationResult {
    check_capability(bytes, anchors, now).0
}

/// Like [`verify_capability`], also handing back the decoded capability
/// whenever decoding succeeded. Checks run in order: decoding, trust,
/// signature over the received bytes, validity window.
pub fn check_capability(
    bytes: &[u8],
    anchors: &TrustAnchors,
    now: u64,
) -> (VerificationResult, Option<Capability>) {
    let Ok((cap, payload)) = Capability::decode_with_payload(bytes) else {
        return (VerificationResult::Malformed, None);
    };
    let outcome = if !anchors.trusts(cap.grantor_id()) {
        VerificationResult::UntrustedGrantor
    } else if !identity::verify(cap.grantor_id(), payload, cap.signature()).unwrap_or(false) {
        VerificationResult::BadSignature
    } else {
        match cap.validity() {
            Some(v) if now < v.not_before() => VerificationResult::NotYetValid,
            Some(v) if now > v.not_after() => VerificationResult::Expired,
            _ => VerificationResult::Valid,
        }
    };
    (outcome, Some(cap))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reason {
    Granted,
    Revoked,
    NoApplicableCapability,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::Granted => "GRANTED",
            Reason::Revoked => "REVOKED",
            Reason::NoApplicableCapability => "NO_APPLICABLE_CAPABILITY",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Decision {
    pub authorized: bool,
    pub deciding_serial: Option<u64>,
    pub reason: Reason,
}

impl Decision {
    pub const DENY: Decision = Decision {
        authorized: false,
        deciding_serial: None,
        reason: Reason::NoApplicableCapability,
    };

    pub fn granted(serial: u64) -> Self {
        Self {
            authorized: true,
            deciding_serial: Some(serial),
            reason: Reason::Granted,
        }
    }

    pub fn revoked(serial: u64) -> Self {
        Self {
            authorized: false,
            deciding_serial: Some(serial),
            reason: Reason::Revoked,
        }
    }

    fn from_flavor(flavor: Flavor, serial: u64) -> Self {
        match flavor {
            Flavor::Grant => Self::granted(serial),
            Flavor::Revocation => Self::revoked(serial),
        }
    }
}

impl fmt::Display for Decision {
    /// `authorized=<bool> reason=<REASON> serial=<n|->`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "authorized={} reason={} serial=",
            self.authorized, self.reason
        )?;
        match self.deciding_serial {
            Some(s) => write!(f, "{s}"),
            None => f.write_str("-"),
        }
    }
}

/// Some tuple matches the request exactly and `at` lies in the validity
/// window, if there is one.
pub fn is_applicable(
    cap: &Capability,
    grantee: &[u8],
    object: &[u8],
    privilege: &[u8],
    at: u64,
) -> bool {
    cap.validity().is_none_or(|v| v.contains(at))
        && cap
            .tuples()
            .iter()
            .any(|t| t.matches(grantee, object, privilege))
}

/// Decides a request from capabilities of a single grantor that have already
/// passed [`verify_capability`]. The result does not depend on input order.
pub fn decide(
    caps: &[Capability],
    grantee: &[u8],
    object: &[u8],
    privilege: &[u8],
    at: u64,
) -> Result<Decision> {
    let Some(first) = caps.first() else {
        return Ok(Decision::DENY);
    };
    if caps.iter().any(|c| c.grantor_id() != first.grantor_id()) {
        return Err(Error::MixedGrantors);
    }
    let mut serials = HashSet::with_capacity(caps.len());
    for c in caps {
        if !serials.insert(c.serial()) {
            return Err(Error::DuplicateSerial(c.serial()));
        }
    }
    Ok(caps
        .iter()
        .filter(|c| is_applicable(c, grantee, object, privilege, at))
        .max_by_key(|c| c.serial())
        .map_or(Decision::DENY, |c| {
            Decision::from_flavor(c.flavor(), c.serial())
        }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    /// The capability at `index` failed verification and was ignored.
    Rejected {
        index: usize,
        outcome: VerificationResult,
    },
    /// A trusted grantor presented two different capabilities with one
    /// serial. Its statement counts as a denial.
    DuplicateSerial { grantor: PublicKey, serial: u64 },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Rejected { index, outcome } => write!(f, "capability #{index}: {outcome}"),
            Diagnostic::DuplicateSerial { grantor, serial } => write!(
                f,
                "grantor {}: duplicate serial {serial}",
                crate::armor::b64url(grantor)
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub decision: Decision,
    pub diagnostics: Vec<Diagnostic>,
}

/// One-call entry point for a service: verifies raw capabilities, decides
/// per grantor, and combines grantors with deny-wins. Authorized only if
/// some trusted grantor grants and none revokes.
pub fn decide_from_bytes<B: AsRef<[u8]>>(
    raw_caps: &[B],
    anchors: &TrustAnchors,
    grantee: &[u8],
    object: &[u8],
    privilege: &[u8],
    at: u64,
) -> Report {
    let mut diagnostics = Vec::new();
    let mut by_grantor: BTreeMap<PublicKey, Vec<Capability>> = BTreeMap::new();
    for (index, raw) in raw_caps.iter().enumerate() {
        match check_capability(raw.as_ref(), anchors, at) {
            (VerificationResult::Valid, Some(cap)) => {
                let group = by_grantor.entry(*cap.grantor_id()).or_default();
                // The same capability handed in twice says nothing new.
                if !group.contains(&cap) {
                    group.push(cap);
                }
            }
            (outcome, _) => diagnostics.push(Diagnostic::Rejected { index, outcome }),
        }
    }

    let mut granted = None;
    let mut revoked = None;
    for (grantor, caps) in &by_grantor {
        let decision = match decide(caps, grantee, object, privilege, at) {
            Ok(d) => d,
            Err(Error::DuplicateSerial(serial)) => {
                diagnostics.push(Diagnostic::DuplicateSerial {
                    grantor: *grantor,
                    serial,
                });
                Decision::revoked(serial)
            }
            Err(e) => unreachable!("caps grouped by grantor: {e}"),
        };
        match decision.reason {
            Reason::Granted => {
                granted.get_or_insert(decision);
            }
            Reason::Revoked => {
                revoked.get_or_insert(decision);
            }
            Reason::NoApplicableCapability => {}
        }
    }

    Report {
        decision: revoked.or(granted).unwrap_or(Decision::DENY),
        diagnostics,
    }
}
