//! Authorization store and capability issuance.
//!
//! Every issued capability, grant or revocation, consumes the next serial.
//! Issuance takes `&mut self`, so a single `GrantorState` can never hand out
//! the same serial twice; callers sharing one across threads wrap it in a
//! lock.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::armor::{b64url, from_b64url};
use crate::capability::{AuthorizationTuple, Capability, Flavor, ValidityPeriod};
use crate::error::{Error, Result};
use crate::identity::KeyPair;

#[derive(Debug, Clone)]
pub struct GrantorState {
    keypair: KeyPair,
    store: BTreeSet<AuthorizationTuple>,
    next_serial: u64,
}

impl GrantorState {
    pub fn new(keypair: KeyPair) -> Self {
        Self {
            keypair,
            store: BTreeSet::new(),
            next_serial: 1,
        }
    }

    pub fn keypair(&self) -> &KeyPair {
        &self.keypair
    }

    pub fn next_serial(&self) -> u64 {
        self.next_serial
    }

    pub fn store(&self) -> &BTreeSet<AuthorizationTuple> {
        &self.store
    }

    pub fn contains(&self, tuple: &AuthorizationTuple) -> bool {
        self.store.contains(tuple)
    }

    /// Returns false if the tuple was already present.
    pub fn add_tuple(&mut self, tuple: AuthorizationTuple) -> bool {
        self.store.insert(tuple)
    }

    pub fn remove_tuple(&mut self, tuple: &AuthorizationTuple) -> Result<()> {
        if self.store.remove(tuple) {
            Ok(())
        } else {
            Err(Error::NotFound)
        }
    }

    /// Answers an authorization query with a signed grant. Fails without
    /// consuming a serial if any queried tuple is missing from the store.
    pub fn issue_grant(
        &mut self,
        query: &[AuthorizationTuple],
        validity: Option<ValidityPeriod>,
    ) -> Result<Capability> {
        if let Some(_missing) = query.iter().find(|t| !self.store.contains(t)) {
            return Err(Error::NotAuthorizedInStore);
        }
        self.issue(Flavor::Grant, query, validity)
    }

    /// Revocations do not consult the store: trust in a tuple may already
    /// have been withdrawn from it.
    pub fn issue_revocation(
        &mut self,
        query: &[AuthorizationTuple],
        validity: Option<ValidityPeriod>,
    ) -> Result<Capability> {
        self.issue(Flavor::Revocation, query, validity)
    }

    fn issue(
        &mut self,
        flavor: Flavor,
        query: &[AuthorizationTuple],
        validity: Option<ValidityPeriod>,
    ) -> Result<Capability> {
        let serial = self.next_serial;
        let following = serial.checked_add(1).ok_or(Error::SerialExhausted)?;
        let unsigned = Capability::unsigned(
            self.keypair.public(),
            flavor,
            validity,
            serial,
            query.to_vec(),
        )?;
        let signature = self.keypair.sign(&unsigned.signing_payload());
        self.next_serial = following;
        Ok(unsigned.with_signature(signature))
    }

    /// Line-oriented state file: `serial=<n>` then one
    /// `tuple=<grantee>,<object>,<privilege>` line per stored tuple, each
    /// field unpadded base64url.
    pub fn state_text(&self) -> String {
        let mut out = format!("serial={}\n", self.next_serial);
        for t in &self.store {
            out.push_str(&format!(
                "tuple={},{},{}\n",
                b64url(t.grantee()),
                b64url(t.object()),
                b64url(t.privilege())
            ));
        }
        out
    }

    pub fn from_state_text(keypair: KeyPair, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let first = lines
            .next()
            .ok_or_else(|| Error::Malformed("empty grantor state".into()))?;
        let next_serial: u64 = first
            .trim()
            .strip_prefix("serial=")
            .and_then(|s| s.parse().ok())
            .filter(|&s| s >= 1)
            .ok_or_else(|| Error::Malformed(format!("bad serial line `{first}`")))?;

        let mut state = Self {
            keypair,
            store: BTreeSet::new(),
            next_serial,
        };
        for line in lines {
            let body = line
                .trim()
                .strip_prefix("tuple=")
                .ok_or_else(|| Error::Malformed(format!("unexpected line `{line}`")))?;
            let fields: Vec<&str> = body.split(',').collect();
            let [grantee, object, privilege] = fields[..] else {
                return Err(Error::Malformed(format!(
                    "tuple line needs 3 fields: `{line}`"
                )));
            };
            let grantee: [u8; 32] = from_b64url(grantee)?
                .try_into()
                .map_err(|_| Error::Malformed("grantee must be 32 bytes".into()))?;
            let tuple =
                AuthorizationTuple::new(grantee, from_b64url(object)?, from_b64url(privilege)?)?;
            if !state.store.insert(tuple) {
                return Err(Error::Malformed(format!("duplicate tuple line `{line}`")));
            }
        }
        Ok(state)
    }

    pub fn load(keypair: KeyPair, path: &Path) -> Result<Self> {
        Self::from_state_text(keypair, &fs::read_to_string(path)?)
    }

    /// Writes to a sibling temp file and renames it over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let name = path
            .file_name()
            .ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?;
        let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.state_text().as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::verify;

    fn tuple(g: u8, obj: &str) -> AuthorizationTuple {
        AuthorizationTuple::new([g; 32], obj.as_bytes().to_vec(), b"read".to_vec()).unwrap()
    }

    fn state() -> GrantorState {
        GrantorState::new(KeyPair::generate(Some(&[42; 32])).unwrap())
    }

    #[test]
    fn store_is_a_set() {
        let mut s = state();
        assert!(s.add_tuple(tuple(1, "a")));
        assert!(!s.add_tuple(tuple(1, "a")));
        assert_eq!(s.store().len(), 1);
        s.remove_tuple(&tuple(1, "a")).unwrap();
        assert!(s.store().is_empty());
        assert_eq!(s.remove_tuple(&tuple(1, "a")), Err(Error::NotFound));
    }

    #[test]
    fn grant_serials_and_signature() {
        let mut s = state();
        s.add_tuple(tuple(1, "a"));
        let c1 = s.issue_grant(&[tuple(1, "a")], None).unwrap();
        assert_eq!((c1.serial(), c1.flavor()), (1, Flavor::Grant));
        assert_eq!(c1.tuples(), &[tuple(1, "a")]);
        assert!(verify(&s.keypair().public(), &c1.signing_payload(), c1.signature()).unwrap());
        assert_eq!(s.next_serial(), 2);
    }

    #[test]
    fn grant_requires_store_membership() {
        let mut s = state();
        assert_eq!(
            s.issue_grant(&[tuple(1, "a")], None),
            Err(Error::NotAuthorizedInStore)
        );
        s.add_tuple(tuple(1, "a"));
        assert_eq!(
            s.issue_grant(&[tuple(1, "a"), tuple(2, "b")], None),
            Err(Error::NotAuthorizedInStore)
        );
        assert_eq!(s.next_serial(), 1);
        assert!(matches!(
            s.issue_grant(&[], None),
            Err(Error::InvalidCapability(_))
        ));
    }

    #[test]
    fn multi_tuple_grant() {
        let mut s = state();
        s.add_tuple(tuple(1, "a"));
        s.add_tuple(tuple(2, "b"));
        let c = s
            .issue_grant(&[tuple(1, "a"), tuple(2, "b")], None)
            .unwrap();
        assert_eq!(c.tuples().len(), 2);
    }

    #[test]
    fn grant_revoke_grant_serials() {
        let mut s = state();
        s.add_tuple(tuple(1, "a"));
        let q = [tuple(1, "a")];
        let c1 = s.issue_grant(&q, None).unwrap();
        let c2 = s.issue_revocation(&q, None).unwrap();
        let c3 = s.issue_grant(&q, None).unwrap();
        assert_eq!([c1.serial(), c2.serial(), c3.serial()], [1, 2, 3]);
        assert_eq!(c2.flavor(), Flavor::Revocation);
        let never = s.issue_revocation(&[tuple(9, "zz")], None).unwrap();
        assert_eq!((never.serial(), never.flavor()), (4, Flavor::Revocation));
    }

    #[test]
    fn serial_exhaustion() {
        let mut s = state();
        s.next_serial = u64::MAX;
        assert_eq!(
            s.issue_revocation(&[tuple(1, "a")], None),
            Err(Error::SerialExhausted)
        );
    }

    #[test]
    fn state_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grantor.state");
        let mut s = state();
        s.add_tuple(tuple(1, "a"));
        s.add_tuple(tuple(2, "b,c"));
        s.issue_revocation(&[tuple(3, "x")], None).unwrap();
        s.save(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("serial=2\n"));
        let back = GrantorState::load(s.keypair().clone(), &path).unwrap();
        assert_eq!(back.next_serial(), 2);
        assert_eq!(back.store(), s.store());
    }

    #[test]
    fn state_file_rejects_garbage() {
        let kp = KeyPair::generate(Some(&[1; 32])).unwrap();
        for bad in [
            "",
            "serial=0\n",
            "serial=x\n",
            "serial=1\nfoo=bar\n",
            "serial=1\ntuple=AA,AA\n",
        ] {
            assert!(
                GrantorState::from_state_text(kp.clone(), bad).is_err(),
                "{bad:?}"
            );
        }
    }
}
