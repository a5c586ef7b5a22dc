//! Self-verifiable signed capabilities for distributed authorization.
//!
//! A grantor looks up authorization tuples in its store and signs grant or
//! revocation capabilities with strictly increasing serials. Any verifier
//! holding the grantor's public key can later check a capability and decide
//! a request offline, replaying applicable capabilities in issue order.
//!
//! ```
//! use dcap_core::{AuthorizationTuple, GrantorState, KeyPair, TrustAnchors, decide_from_bytes};
//!
//! let grantee = KeyPair::generate(Some(&[2; 32])).unwrap().public();
//! let tuple = AuthorizationTuple::new(grantee, b"/printer".to_vec(), b"use".to_vec()).unwrap();
//!
//! let mut grantor = GrantorState::new(KeyPair::generate(Some(&[1; 32])).unwrap());
//! grantor.add_tuple(tuple.clone());
//! let cap = grantor.issue_grant(&[tuple], None).unwrap();
//!
//! let anchors = TrustAnchors::new([grantor.keypair().public()]);
//! let report = decide_from_bytes(&[cap.encode()], &anchors, &grantee, b"/printer", b"use", 0);
//! assert!(report.decision.authorized);
//! ```

pub mod armor;
pub mod capability;
pub mod error;
pub mod grantor;
pub mod identity;
pub mod verifier;

pub use capability::{
    decode_capability, encode_capability, signing_payload, AuthorizationTuple, Capability, Flavor,
    PublicKey, Signature, ValidityPeriod,
};
pub use error::{Error, Result};
pub use grantor::GrantorState;
pub use identity::{
    generate_keypair, issue_endowment, make_challenge, respond, sign, verify, verify_endowment,
    verify_response, Challenge, EndowmentCertificate, KeyPair,
};
pub use verifier::{
    check_capability, decide, decide_from_bytes, is_applicable, verify_capability, Decision,
    Diagnostic, Reason, Report, TrustAnchors, VerificationResult,
};
