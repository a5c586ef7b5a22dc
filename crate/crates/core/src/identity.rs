//! Ed25519 keys, detached signatures, agent challenge/response and
//! endowment certificates.

use ed25519_dalek::{Signer, SigningKey, VerifyingKey};
use rand::RngCore;

use crate::armor::{self, ENDOWMENT_PREFIX, KEY_PREFIX};
use crate::capability::{PublicKey, Signature, KEY_LEN, SIGNATURE_LEN};
use crate::error::{Error, Result};

/// Domain tag prefixed to every challenge response.
pub const CHALLENGE_TAG: &[u8] = b"DCAP-CHAL-v1";
pub const NONCE_LEN: usize = 32;
pub const MAX_METADATA_LEN: usize = 65536;

#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
}

impl KeyPair {
    /// Deterministic for a 32-byte seed, OS-random without one.
    pub fn generate(seed: Option<&[u8]>) -> Result<Self> {
        let seed: [u8; 32] = match seed {
            Some(s) => s.try_into().map_err(|_| Error::BadSeed(s.len()))?,
            None => {
                let mut s = [0u8; 32];
                rand::rngs::OsRng.fill_bytes(&mut s);
                s
            }
        };
        Ok(Self::from_secret(&seed))
    }

    pub fn from_secret(secret: &[u8; 32]) -> Self {
        Self {
            signing: SigningKey::from_bytes(secret),
        }
    }

    pub fn public(&self) -> PublicKey {
        self.signing.verifying_key().to_bytes()
    }

    pub fn secret(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        self.signing.sign(message).to_bytes()
    }

    /// `dcapk1:` text of the public key.
    pub fn public_text(&self) -> String {
        public_key_to_text(&self.public())
    }

    /// `dcapk1:` text of the secret key.
    pub fn secret_text(&self) -> String {
        armor::armor(KEY_PREFIX, &self.secret())
    }

    pub fn from_secret_text(text: &str) -> Result<Self> {
        let bytes = armor::dearmor(KEY_PREFIX, text)?;
        let secret: [u8; 32] = bytes.as_slice().try_into().map_err(|_| {
            Error::Malformed(format!("secret key must be 32 bytes, got {}", bytes.len()))
        })?;
        Ok(Self::from_secret(&secret))
    }
}

impl std::fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyPair")
            .field("public", &armor::b64url(&self.public()))
            .finish_non_exhaustive()
    }
}

pub fn generate_keypair(seed: Option<&[u8]>) -> Result<KeyPair> {
    KeyPair::generate(seed)
}

pub fn public_key_to_text(public: &PublicKey) -> String {
    armor::armor(KEY_PREFIX, public)
}

pub fn public_key_from_text(text: &str) -> Result<PublicKey> {
    let bytes = armor::dearmor(KEY_PREFIX, text)?;
    bytes
        .as_slice()
        .try_into()
        .map_err(|_| Error::Malformed(format!("public key must be 32 bytes, got {}", bytes.len())))
}

pub fn sign(secret: &[u8], message: &[u8]) -> Result<Signature> {
    let secret: &[u8; 32] = secret.try_into().map_err(|_| {
        Error::Malformed(format!("secret key must be 32 bytes, got {}", secret.len()))
    })?;
    Ok(KeyPair::from_secret(secret).sign(message))
}

/// Wrong-length keys or signatures are `Malformed`; everything else that
/// fails to verify is `Ok(false)`. Uses strict verification, which rejects
/// small-order keys and non-canonical signatures.
pub fn verify(public: &[u8], message: &[u8], signature: &[u8]) -> Result<bool> {
    if public.len() != KEY_LEN {
        return Err(Error::Malformed(format!(
            "public key must be {KEY_LEN} bytes, got {}",
            public.len()
        )));
    }
    let signature: &[u8; SIGNATURE_LEN] = signature.try_into().map_err(|_| {
        Error::Malformed(format!(
            "signature must be {SIGNATURE_LEN} bytes, got {}",
            signature.len()
        ))
    })?;
    let Ok(key) = VerifyingKey::from_bytes(public.try_into().unwrap()) else {
        return Ok(false);
    };
    let sig = ed25519_dalek::Signature::from_bytes(signature);
    Ok(key.verify_strict(message, &sig).is_ok())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Challenge {
    pub nonce: [u8; NONCE_LEN],
    pub issued_at: u64,
}

impl Challenge {
    fn signed_bytes(&self) -> Vec<u8> {
        let mut m = Vec::with_capacity(CHALLENGE_TAG.len() + NONCE_LEN + 8);
        m.extend_from_slice(CHALLENGE_TAG);
        m.extend_from_slice(&self.nonce);
        m.extend_from_slice(&self.issued_at.to_be_bytes());
        m
    }
}

pub fn make_challenge(now: u64) -> Challenge {
    make_challenge_with(&mut rand::rngs::OsRng, now)
}

pub fn make_challenge_with<R: RngCore>(rng: &mut R, now: u64) -> Challenge {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    Challenge {
        nonce,
        issued_at: now,
    }
}

pub fn respond(secret: &[u8], challenge: &Challenge) -> Result<Signature> {
    sign(secret, &challenge.signed_bytes())
}

/// True iff `response` is the agent's signature over the challenge and the
/// challenge is at most `max_age_seconds` old at `now`.
pub fn verify_response(
    public: &[u8],
    challenge: &Challenge,
    response: &[u8],
    now: u64,
    max_age_seconds: u64,
) -> Result<bool> {
    if max_age_seconds == 0 {
        return Err(Error::Malformed("max_age_seconds must be positive".into()));
    }
    let fresh = now.saturating_sub(challenge.issued_at) <= max_age_seconds;
    let signed = verify(public, &challenge.signed_bytes(), response)?;
    Ok(signed && fresh)
}

/// An authority's signed statement binding opaque person metadata to an
/// agent key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndowmentCertificate {
    pub authority_id: PublicKey,
    pub agent_id: PublicKey,
    pub metadata: Vec<u8>,
    pub issued_at: u64,
    pub signature: Signature,
}

impl EndowmentCertificate {
    /// authority_id ‖ agent_id ‖ metadata length (u32 BE) ‖ metadata ‖ issued_at (u64 BE)
    pub fn signed_payload(&self) -> Vec<u8> {
        let mut m = Vec::with_capacity(2 * KEY_LEN + 12 + self.metadata.len());
        m.extend_from_slice(&self.authority_id);
        m.extend_from_slice(&self.agent_id);
        m.extend_from_slice(&(self.metadata.len() as u32).to_be_bytes());
        m.extend_from_slice(&self.metadata);
        m.extend_from_slice(&self.issued_at.to_be_bytes());
        m
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.signed_payload();
        out.extend_from_slice(&self.signature);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fixed = 2 * KEY_LEN + 4 + 8 + SIGNATURE_LEN;
        if bytes.len() < fixed {
            return Err(Error::Malformed("endowment certificate truncated".into()));
        }
        let meta_len = u32::from_be_bytes(bytes[64..68].try_into().unwrap()) as usize;
        if meta_len > MAX_METADATA_LEN {
            return Err(Error::Malformed(format!(
                "metadata length {meta_len} exceeds bound"
            )));
        }
        if bytes.len() != fixed + meta_len {
            return Err(Error::Malformed(
                "endowment certificate length mismatch".into(),
            ));
        }
        let meta_end = 68 + meta_len;
        Ok(Self {
            authority_id: bytes[..32].try_into().unwrap(),
            agent_id: bytes[32..64].try_into().unwrap(),
            metadata: bytes[68..meta_end].to_vec(),
            issued_at: u64::from_be_bytes(bytes[meta_end..meta_end + 8].try_into().unwrap()),
            signature: bytes[meta_end + 8..].try_into().unwrap(),
        })
    }

    pub fn to_text(&self) -> String {
        armor::armor(ENDOWMENT_PREFIX, &self.to_bytes())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_bytes(&armor::dearmor(ENDOWMENT_PREFIX, text)?)
    }
}

pub fn issue_endowment(
    authority: &KeyPair,
    agent_id: PublicKey,
    metadata: &[u8],
    issued_at: u64,
) -> Result<EndowmentCertificate> {
    if metadata.len() > MAX_METADATA_LEN {
        return Err(Error::Malformed(format!(
            "metadata length {} exceeds {MAX_METADATA_LEN}",
            metadata.len()
        )));
    }
    let mut cert = EndowmentCertificate {
        authority_id: authority.public(),
        agent_id,
        metadata: metadata.to_vec(),
        issued_at,
        signature: [0; SIGNATURE_LEN],
    };
    cert.signature = authority.sign(&cert.signed_payload());
    Ok(cert)
}

pub fn verify_endowment(authority_public: &[u8], cert: &EndowmentCertificate) -> Result<bool> {
    if cert.metadata.len() > MAX_METADATA_LEN {
        return Err(Error::Malformed("metadata exceeds bound".into()));
    }
    if authority_public != cert.authority_id {
        // Still reject wrong-length keys as malformed.
        verify(authority_public, &[], &cert.signature)?;
        return Ok(false);
    }
    verify(authority_public, &cert.signed_payload(), &cert.signature)
}

/// Endowment valid under the authority and the agent proved possession of
/// the endowed key by answering `challenge`.
pub fn verify_trust_chain(
    authority_public: &[u8],
    cert: &EndowmentCertificate,
    challenge: &Challenge,
    response: &[u8],
    now: u64,
    max_age_seconds: u64,
) -> Result<bool> {
    Ok(verify_endowment(authority_public, cert)?
        && verify_response(&cert.agent_id, challenge, response, now, max_age_seconds)?)
}
