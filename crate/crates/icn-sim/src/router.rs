//! Forwarding node with a PIT, an LRU content store and optional
//! capability enforcement.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use dcap_core::verifier::{check_capability, decide, TrustAnchors, VerificationResult};

use crate::content_store::ContentStore;
use crate::packet::{DataPacket, InterestPacket};

/// Index of the neighbouring node an Interest arrived from.
pub type FaceId = usize;

pub const DEFAULT_READ_PRIVILEGE: &[u8] = b"read";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RouterAction {
    Forward,
    SatisfyFromCache(DataPacket),
    AggregateInPit,
    DropUnauthorized,
    DropMalformed,
    /// Same name and nonce seen before.
    DropDuplicate,
}

#[derive(Debug, Clone)]
pub struct RouterNode {
    pit: BTreeMap<Vec<u8>, BTreeSet<FaceId>>,
    content_store: ContentStore,
    enforcing: bool,
    anchors: TrustAnchors,
    read_privilege: Vec<u8>,
    seen: HashSet<(Vec<u8>, [u8; 8])>,
}

impl RouterNode {
    pub fn new(cache_capacity: usize, enforcing: bool, anchors: TrustAnchors) -> Self {
        Self {
            pit: BTreeMap::new(),
            content_store: ContentStore::new(cache_capacity),
            enforcing,
            anchors,
            read_privilege: DEFAULT_READ_PRIVILEGE.to_vec(),
            seen: HashSet::new(),
        }
    }

    pub fn with_read_privilege(mut self, privilege: impl Into<Vec<u8>>) -> Self {
        self.read_privilege = privilege.into();
        self
    }

    pub fn enforcing(&self) -> bool {
        self.enforcing
    }

    pub fn content_store(&self) -> &ContentStore {
        &self.content_store
    }

    pub fn pending_faces(&self, name: &[u8]) -> Option<&BTreeSet<FaceId>> {
        self.pit.get(name)
    }

    pub fn pit_len(&self) -> usize {
        self.pit.len()
    }

    /// Admission check for an enforcing router: the Interest must carry a
    /// trusted, valid capability granting `read_privilege` on its name to
    /// its KeyLocator, and the sender must control that KeyLocator.
    fn admit(&self, interest: &InterestPacket, now: u64) -> Result<(), RouterAction> {
        let Some(raw) = &interest.app_params else {
            return Err(RouterAction::DropUnauthorized);
        };
        let (outcome, cap) = check_capability(raw, &self.anchors, now);
        match (outcome, cap) {
            (VerificationResult::Malformed, _) => Err(RouterAction::DropMalformed),
            (VerificationResult::Valid, Some(cap)) => {
                if !interest.binding_is_valid() {
                    return Err(RouterAction::DropUnauthorized);
                }
                match decide(
                    &[cap],
                    &interest.key_locator,
                    &interest.name,
                    &self.read_privilege,
                    now,
                ) {
                    Ok(d) if d.authorized => Ok(()),
                    _ => Err(RouterAction::DropUnauthorized),
                }
            }
            _ => Err(RouterAction::DropUnauthorized),
        }
    }

    pub fn on_interest(
        &mut self,
        interest: &InterestPacket,
        face: FaceId,
        now: u64,
    ) -> RouterAction {
        if interest.name.is_empty() {
            return RouterAction::DropMalformed;
        }
        if self.enforcing {
            if let Err(drop) = self.admit(interest, now) {
                return drop;
            }
        }
        if !self.seen.insert((interest.name.clone(), interest.nonce)) {
            return RouterAction::DropDuplicate;
        }
        if let Some(data) = self.content_store.lookup(&interest.name) {
            return RouterAction::SatisfyFromCache(data);
        }
        if let Some(faces) = self.pit.get_mut(&interest.name) {
            faces.insert(face);
            return RouterAction::AggregateInPit;
        }
        self.pit
            .insert(interest.name.clone(), BTreeSet::from([face]));
        RouterAction::Forward
    }

    /// Consumes the PIT entry for `data` and caches it. Returns the faces to
    /// send it to and the name evicted from the cache, if any. Unsolicited
    /// Data is neither cached nor forwarded.
    pub fn on_data(&mut self, data: &DataPacket) -> Option<(BTreeSet<FaceId>, Option<Vec<u8>>)> {
        let faces = self.pit.remove(&data.name)?;
        let evicted = self.content_store.insert(data.clone());
        Some((faces, evicted))
    }
}

pub fn router_on_interest(
    router: &mut RouterNode,
    interest: &InterestPacket,
    face: FaceId,
    now: u64,
) -> RouterAction {
    router.on_interest(interest, face, now)
}
