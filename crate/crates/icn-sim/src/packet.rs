use dcap_core::capability::{PublicKey, Signature};
use dcap_core::identity::{self, KeyPair};

/// Domain tag for the signature binding an Interest to its KeyLocator.
pub const INTEREST_TAG: &[u8] = b"DCAP-INT-v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterestPacket {
    /// Maps to the capability's object.
    pub name: Vec<u8>,
    /// Maps to the capability's grantee.
    pub key_locator: PublicKey,
    /// Encoded capability, if the sender carries one.
    pub app_params: Option<Vec<u8>>,
    pub nonce: [u8; 8],
    /// Sender's signature over tag ‖ name ‖ nonce.
    pub challenge_response: Signature,
}

impl InterestPacket {
    pub fn signed(
        keypair: &KeyPair,
        name: Vec<u8>,
        app_params: Option<Vec<u8>>,
        nonce: [u8; 8],
    ) -> Self {
        let challenge_response = keypair.sign(&binding_payload(&name, &nonce));
        Self {
            name,
            key_locator: keypair.public(),
            app_params,
            nonce,
            challenge_response,
        }
    }

    /// The sender controls `key_locator`.
    pub fn binding_is_valid(&self) -> bool {
        identity::verify(
            &self.key_locator,
            &binding_payload(&self.name, &self.nonce),
            &self.challenge_response,
        )
        .unwrap_or(false)
    }
}

pub fn binding_payload(name: &[u8], nonce: &[u8; 8]) -> Vec<u8> {
    let mut m = Vec::with_capacity(INTEREST_TAG.len() + name.len() + 8);
    m.extend_from_slice(INTEREST_TAG);
    m.extend_from_slice(name);
    m.extend_from_slice(nonce);
    m
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataPacket {
    pub name: Vec<u8>,
    pub payload: Vec<u8>,
}
