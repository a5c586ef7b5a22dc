//! Deterministic simulation of an NDN-style network in which Interests may
//! carry signed capabilities.
//!
//! Routers keep a pending interest table and an LRU content store. An
//! enforcing router maps an Interest's KeyLocator to the grantee, its Name to
//! the object and a fixed read privilege to the privilege, and admits the
//! Interest only if the embedded capability authorizes that request. The
//! simulator measures how much a cache-flooding attacker can push legitimate
//! content out of router caches with and without enforcement.

pub mod content_store;
pub mod error;
pub mod packet;
pub mod router;
pub mod scenario;
pub mod sim;

pub use content_store::{content_store_insert, content_store_lookup, ContentStore};
pub use error::SimError;
pub use packet::{DataPacket, InterestPacket};
pub use router::{router_on_interest, FaceId, RouterAction, RouterNode};
pub use scenario::{Anchor, AttackerCredential, NodeKind, Request, ScenarioConfig};
pub use sim::{run_scenario, ScenarioMetrics};
