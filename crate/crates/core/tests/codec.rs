use dcap_core::capability::{AuthorizationTuple, Capability, Flavor, ValidityPeriod};
use dcap_core::Error;
use proptest::collection::vec;
use proptest::prelude::*;

fn minimal(serial: u64) -> Capability {
    let t = AuthorizationTuple::new([0; 32], vec![0], vec![0]).unwrap();
    Capability::unsigned([0; 32], Flavor::Grant, None, serial, vec![t]).unwrap()
}

fn hex_fixture(serial: u8) -> Vec<u8> {
    let zeros = |n| "00".repeat(n);
    let text = [
        "4443415001".to_string(),
        format!("0100000020{}", zeros(32)),
        "020000000100".to_string(),
        format!("0400000008{}{serial:02x}", zeros(7)),
        format!(
            "0500000032{}{}{}{}{}",
            "00000001",
            "00000020",
            zeros(32),
            "0000000100",
            "0000000100"
        ),
        format!("0600000040{}", zeros(64)),
    ]
    .concat();
    hex::decode(text).unwrap()
}

#[test]
fn minimal_capability_matches_hand_written_hex() {
    assert_eq!(minimal(1).encode(), hex_fixture(1));
    assert_eq!(minimal(2).encode(), hex_fixture(2));
    assert_eq!(Capability::decode(&hex_fixture(1)).unwrap(), minimal(1));
}

#[test]
fn serial_diff_is_confined_to_serial_value() {
    let a = minimal(1).encode();
    let b = minimal(2).encode();
    let serial_value = 5 + 37 + 6 + 5..5 + 37 + 6 + 5 + 8;
    for i in 0..a.len() {
        if a[i] != b[i] {
            assert!(serial_value.contains(&i), "unexpected diff at {i}");
        }
    }
    assert_eq!(&a[serial_value.clone()], &1u64.to_be_bytes());
    assert_eq!(&b[serial_value], &2u64.to_be_bytes());
}

#[test]
fn text_form() {
    let cap = minimal(5).with_signature([3; 64]);
    let text = cap.to_text();
    assert!(text.starts_with("dcap1:"));
    assert!(!text.contains('='));
    assert_eq!(Capability::from_text(&text).unwrap(), cap);
}

#[test]
fn missing_records_are_malformed() {
    // header only
    assert!(matches!(
        Capability::decode(b"DCAP\x01"),
        Err(Error::Malformed(_))
    ));
    // everything but the signature
    let payload = minimal(1).signing_payload();
    assert!(matches!(
        Capability::decode(&payload),
        Err(Error::Malformed(_))
    ));
}

#[test]
fn huge_tuple_count_is_malformed_not_oom() {
    let mut bytes = minimal(1).signing_payload();
    bytes.truncate(5 + 37 + 6 + 13);
    bytes.extend_from_slice(&[0x05, 0, 0, 0, 4, 0xff, 0xff, 0xff, 0xff]);
    bytes.extend_from_slice(&[0x06, 0, 0, 0, 64]);
    bytes.extend_from_slice(&[0; 64]);
    assert!(matches!(
        Capability::decode(&bytes),
        Err(Error::Malformed(_))
    ));
}

fn tuple_strategy() -> impl Strategy<Value = AuthorizationTuple> {
    (
        any::<[u8; 32]>(),
        vec(any::<u8>(), 1..40),
        vec(any::<u8>(), 1..12),
    )
        .prop_map(|(g, o, p)| AuthorizationTuple::new(g, o, p).unwrap())
}

fn capability_strategy() -> impl Strategy<Value = Capability> {
    (
        any::<[u8; 32]>(),
        any::<bool>(),
        proptest::option::of((any::<u64>(), 1..u64::MAX)),
        any::<u64>(),
        vec(tuple_strategy(), 1..4),
        vec(any::<u8>(), 64),
    )
        .prop_map(|(grantor, revoke, window, serial, tuples, sig)| {
            let flavor = if revoke {
                Flavor::Revocation
            } else {
                Flavor::Grant
            };
            let validity =
                window.map(|(a, span)| ValidityPeriod::new(a / 2, a / 2 + span / 2 + 1).unwrap());
            Capability::new(
                grantor,
                flavor,
                validity,
                serial,
                tuples,
                sig.try_into().unwrap(),
            )
            .unwrap()
        })
}

proptest! {
    #[test]
    fn roundtrip_and_canonical(cap in capability_strategy()) {
        let bytes = cap.encode();
        prop_assert_eq!(&bytes, &cap.encode());
        let back = Capability::decode(&bytes).unwrap();
        prop_assert_eq!(&back, &cap);
        prop_assert!(bytes.starts_with(&cap.signing_payload()));
    }

    #[test]
    fn injective(a in capability_strategy(), b in capability_strategy()) {
        prop_assume!(a != b);
        prop_assert_ne!(a.encode(), b.encode());
    }

    #[test]
    fn decode_never_panics(bytes in vec(any::<u8>(), 0..300)) {
        match Capability::decode(&bytes) {
            Ok(cap) => prop_assert_eq!(cap.encode(), bytes),
            Err(Error::Malformed(_)) | Err(Error::InvalidCapability(_)) => {}
            Err(e) => prop_assert!(false, "unexpected error {:?}", e),
        }
    }

    #[test]
    fn mutated_encodings_never_panic(cap in capability_strategy(), pos in any::<usize>(), byte in any::<u8>()) {
        let mut bytes = cap.encode();
        let i = pos % bytes.len();
        bytes[i] = byte;
        if let Ok(decoded) = Capability::decode(&bytes) {
            prop_assert_eq!(decoded.encode(), bytes);
        }
    }
}
