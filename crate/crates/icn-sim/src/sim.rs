//! Single-threaded discrete-event loop.
//!
//! Every hop takes one tick. Events at the same tick run in the order they
//! were scheduled. All randomness (keys, nonces) comes from one ChaCha
//! stream seeded by the scenario, so a config always produces the same
//! metrics.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt;

use dcap_core::{AuthorizationTuple, GrantorState, KeyPair, TrustAnchors, ValidityPeriod};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;
use crate::packet::{DataPacket, InterestPacket};
use crate::router::{RouterAction, RouterNode};
use crate::scenario::{Anchor, AttackerCredential, NodeKind, ScenarioConfig};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScenarioMetrics {
    pub legit_interests_issued: u64,
    pub legit_interests_satisfied: u64,
    pub legit_cache_hits: u64,
    /// Legit Interests answered from a router cache, over those issued.
    pub legit_cache_hit_rate: f64,
    pub attacker_interests_issued: u64,
    pub attacker_data_delivered: u64,
    /// Evictions of cached Data that legit consumers fetched or hit, caused
    /// by inserting Data fetched only for attackers.
    pub legit_evictions_caused_by_attacker: u64,
    pub interests_dropped_unauthorized: u64,
    /// Interests that reached the producer.
    pub producer_load: u64,
}

impl ScenarioMetrics {
    pub fn legit_interests_unsatisfied(&self) -> u64 {
        self.legit_interests_issued - self.legit_interests_satisfied
    }
}

impl fmt::Display for ScenarioMetrics {
    /// Flat `key=value` record, one per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "legit_interests_issued={}", self.legit_interests_issued)?;
        writeln!(
            f,
            "legit_interests_satisfied={}",
            self.legit_interests_satisfied
        )?;
        writeln!(
            f,
            "legit_interests_unsatisfied={}",
            self.legit_interests_unsatisfied()
        )?;
        writeln!(f, "legit_cache_hits={}", self.legit_cache_hits)?;
        writeln!(f, "legit_cache_hit_rate={:.6}", self.legit_cache_hit_rate)?;
        writeln!(
            f,
            "attacker_interests_issued={}",
            self.attacker_interests_issued
        )?;
        writeln!(
            f,
            "attacker_data_delivered={}",
            self.attacker_data_delivered
        )?;
        writeln!(
            f,
            "legit_evictions_caused_by_attacker={}",
            self.legit_evictions_caused_by_attacker
        )?;
        writeln!(
            f,
            "interests_dropped_unauthorized={}",
            self.interests_dropped_unauthorized
        )?;
        writeln!(f, "producer_load={}", self.producer_load)
    }
}

type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Origin {
    Legit,
    Attack,
}

enum EventKind {
    Emit {
        node: NodeId,
        name: Vec<u8>,
        origin: Origin,
    },
    Interest {
        at: NodeId,
        from: NodeId,
        packet: InterestPacket,
        origin: Origin,
    },
    Data {
        at: NodeId,
        packet: DataPacket,
        from_cache: bool,
    },
}

struct Event {
    tick: u64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.tick, self.seq) == (other.tick, other.seq)
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed: BinaryHeap pops the earliest (tick, seq) first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.tick, other.seq).cmp(&(self.tick, self.seq))
    }
}

/// Per-router ground truth used only for attributing evictions.
#[derive(Default)]
struct RouterBook {
    /// PIT entry name -> some legit Interest is waiting on it
    pending_legit: HashMap<Vec<u8>, bool>,
    /// cached name -> legit traffic fetched or hit it
    cached_legit: HashMap<Vec<u8>, bool>,
}

struct Sim {
    kinds: Vec<NodeKind>,
    upstream: Vec<Option<NodeId>>,
    routers: BTreeMap<NodeId, (RouterNode, RouterBook)>,
    keys: BTreeMap<NodeId, KeyPair>,
    /// (consumer, name) -> encoded grant
    grants: BTreeMap<(NodeId, Vec<u8>), Vec<u8>>,
    credentials: BTreeMap<NodeId, AttackerCredential>,
    forged_grantor: KeyPair,
    catalog: Option<BTreeSet<Vec<u8>>>,
    read_privilege: Vec<u8>,
    /// consumer -> name -> number of legit Interests waiting
    waiting: BTreeMap<NodeId, BTreeMap<Vec<u8>, u64>>,
    queue: BinaryHeap<Event>,
    seq: u64,
    rng: ChaCha8Rng,
    metrics: ScenarioMetrics,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioMetrics, SimError> {
    let mut sim = Sim::build(config)?;
    sim.run();
    Ok(sim.metrics)
}

fn seed_from(rng: &mut ChaCha8Rng) -> [u8; 32] {
    let mut s = [0u8; 32];
    rng.fill_bytes(&mut s);
    s
}

/// Next hop toward the producer for every node, by breadth-first search
/// from the producer through routers only. Ties go to the neighbour
/// declared first.
fn routes(
    config: &ScenarioConfig,
    index: &HashMap<&str, NodeId>,
) -> Result<Vec<Option<NodeId>>, SimError> {
    let n = config.nodes.len();
    let mut adjacent = vec![BTreeSet::new(); n];
    for (a, b) in &config.links {
        let (a, b) = (index[a.as_str()], index[b.as_str()]);
        adjacent[a].insert(b);
        adjacent[b].insert(a);
    }
    let producer = config
        .nodes
        .iter()
        .position(|(_, k)| *k == NodeKind::Producer)
        .expect("validated");
    let mut upstream = vec![None; n];
    let mut reached = vec![false; n];
    reached[producer] = true;
    let mut frontier = VecDeque::from([producer]);
    while let Some(node) = frontier.pop_front() {
        for &next in &adjacent[node] {
            if reached[next] {
                continue;
            }
            reached[next] = true;
            upstream[next] = Some(node);
            if config.nodes[next].1 == NodeKind::Router {
                frontier.push_back(next);
            }
        }
    }
    for (i, (id, kind)) in config.nodes.iter().enumerate() {
        if matches!(kind, NodeKind::Consumer | NodeKind::Attacker) && !reached[i] {
            return Err(SimError::InvalidTopology(format!(
                "`{id}` cannot reach the producer"
            )));
        }
    }
    Ok(upstream)
}

impl Sim {
    fn build(config: &ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let index: HashMap<&str, NodeId> = config
            .nodes
            .iter()
            .enumerate()
            .map(|(i, (id, _))| (id.as_str(), i))
            .collect();
        let upstream = routes(config, &index)?;

        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let grantor_key = KeyPair::from_secret(&seed_from(&mut rng));
        let forged_grantor = KeyPair::from_secret(&seed_from(&mut rng));
        let mut keys = BTreeMap::new();
        for (i, (_, kind)) in config.nodes.iter().enumerate() {
            if matches!(kind, NodeKind::Consumer | NodeKind::Attacker) {
                keys.insert(i, KeyPair::from_secret(&seed_from(&mut rng)));
            }
        }

        // Grants every consumer for what it will ask for, valid through the
        // last tick any packet can be in flight.
        let last_tick = config
            .legit
            .iter()
            .chain(&config.attack)
            .map(|r| r.tick)
            .max()
            .unwrap_or(0);
        let horizon = last_tick + 2 * config.nodes.len() as u64 + 2;
        let validity = ValidityPeriod::new(0, horizon).expect("horizon is positive");
        let mut grantor = GrantorState::new(grantor_key);
        let mut grants = BTreeMap::new();
        for r in &config.legit {
            let node = index[r.node.as_str()];
            if grants.contains_key(&(node, r.name.clone())) {
                continue;
            }
            let tuple = AuthorizationTuple::new(
                keys[&node].public(),
                r.name.clone(),
                config.read_privilege.clone(),
            )
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
            grantor.add_tuple(tuple.clone());
            let cap = grantor
                .issue_grant(&[tuple], Some(validity))
                .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
            grants.insert((node, r.name.clone()), cap.encode());
        }

        let grantor_public = grantor.keypair().public();
        let mut routers = BTreeMap::new();
        for (i, (id, kind)) in config.nodes.iter().enumerate() {
            if *kind != NodeKind::Router {
                continue;
            }
            let anchors: TrustAnchors = match config.anchors.get(id) {
                None => TrustAnchors::new([grantor_public]),
                Some(list) => list
                    .iter()
                    .map(|a| match a {
                        Anchor::ScenarioGrantor => grantor_public,
                        Anchor::Key(k) => *k,
                    })
                    .collect(),
            };
            let capacity = config
                .router_cache
                .get(id)
                .copied()
                .unwrap_or(config.cache_capacity);
            let enforcing = config.enforce.get(id).copied().unwrap_or(false);
            let router = RouterNode::new(capacity, enforcing, anchors)
                .with_read_privilege(config.read_privilege.clone());
            routers.insert(i, (router, RouterBook::default()));
        }

        let credentials = config
            .credentials
            .iter()
            .map(|(id, c)| (index[id.as_str()], *c))
            .collect();

        let mut sim = Sim {
            kinds: config.nodes.iter().map(|(_, k)| *k).collect(),
            upstream,
            routers,
            keys,
            grants,
            credentials,
            forged_grantor,
            catalog: config.catalog.as_ref().map(|c| c.iter().cloned().collect()),
            read_privilege: config.read_privilege.clone(),
            waiting: BTreeMap::new(),
            queue: BinaryHeap::new(),
            seq: 0,
            rng,
            metrics: ScenarioMetrics::default(),
        };

        // Merge both schedules by tick; legit first within a tick.
        let mut emits: Vec<(u64, u8, usize, NodeId, Vec<u8>, Origin)> = Vec::new();
        for (pos, r) in config.legit.iter().enumerate() {
            emits.push((
                r.tick,
                0,
                pos,
                index[r.node.as_str()],
                r.name.clone(),
                Origin::Legit,
            ));
        }
        for (pos, r) in config.attack.iter().enumerate() {
            emits.push((
                r.tick,
                1,
                pos,
                index[r.node.as_str()],
                r.name.clone(),
                Origin::Attack,
            ));
        }
        emits.sort_by_key(|e| (e.0, e.1, e.2));
        for (tick, _, _, node, name, origin) in emits {
            sim.schedule(tick, EventKind::Emit { node, name, origin });
        }
        Ok(sim)
    }

    fn schedule(&mut self, tick: u64, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Event {
            tick,
            seq: self.seq,
            kind,
        });
    }

    fn run(&mut self) {
        while let Some(event) = self.queue.pop() {
            let now = event.tick;
            match event.kind {
                EventKind::Emit { node, name, origin } => self.emit(now, node, name, origin),
                EventKind::Interest {
                    at,
                    from,
                    packet,
                    origin,
                } => self.on_interest(now, at, from, packet, origin),
                EventKind::Data {
                    at,
                    packet,
                    from_cache,
                } => self.on_data(now, at, packet, from_cache),
            }
        }
        let m = &mut self.metrics;
        m.legit_cache_hit_rate = if m.legit_interests_issued == 0 {
            0.0
        } else {
            m.legit_cache_hits as f64 / m.legit_interests_issued as f64
        };
    }

    fn emit(&mut self, now: u64, node: NodeId, name: Vec<u8>, origin: Origin) {
        let mut nonce = [0u8; 8];
        self.rng.fill_bytes(&mut nonce);
        let key = &self.keys[&node];
        let packet = match origin {
            Origin::Legit => {
                self.metrics.legit_interests_issued += 1;
                *self
                    .waiting
                    .entry(node)
                    .or_default()
                    .entry(name.clone())
                    .or_default() += 1;
                let cap = self.grants.get(&(node, name.clone())).cloned();
                InterestPacket::signed(key, name, cap, nonce)
            }
            Origin::Attack => {
                self.metrics.attacker_interests_issued += 1;
                self.attacker_interest(node, name, nonce)
            }
        };
        let hop = self.upstream[node].expect("validated reachability");
        self.schedule(
            now + 1,
            EventKind::Interest {
                at: hop,
                from: node,
                packet,
                origin,
            },
        );
    }

    fn attacker_interest(&self, node: NodeId, name: Vec<u8>, nonce: [u8; 8]) -> InterestPacket {
        let key = &self.keys[&node];
        match self.credentials.get(&node).copied().unwrap_or_default() {
            AttackerCredential::None => InterestPacket::signed(key, name, None, nonce),
            AttackerCredential::SelfSigned => {
                let mut fake = GrantorState::new(self.forged_grantor.clone());
                let cap = AuthorizationTuple::new(
                    key.public(),
                    name.clone(),
                    self.read_privilege.clone(),
                )
                .ok()
                .and_then(|t| {
                    fake.add_tuple(t.clone());
                    fake.issue_grant(&[t], None).ok()
                })
                .map(|c| c.encode());
                InterestPacket::signed(key, name, cap, nonce)
            }
            AttackerCredential::Stolen => {
                // Prefer a grant for the very name, else any grant at all.
                let victim = self
                    .grants
                    .iter()
                    .find(|((_, n), _)| *n == name)
                    .or_else(|| self.grants.iter().next());
                let mut packet = InterestPacket::signed(key, name, None, nonce);
                if let Some(((consumer, _), cap)) = victim {
                    packet.app_params = Some(cap.clone());
                    packet.key_locator = self.keys[consumer].public();
                }
                packet
            }
        }
    }

    fn on_interest(
        &mut self,
        now: u64,
        at: NodeId,
        from: NodeId,
        packet: InterestPacket,
        origin: Origin,
    ) {
        match self.kinds[at] {
            NodeKind::Producer => {
                self.metrics.producer_load += 1;
                let served = self
                    .catalog
                    .as_ref()
                    .is_none_or(|c| c.contains(&packet.name));
                if served {
                    let mut payload = b"content:".to_vec();
                    payload.extend_from_slice(&packet.name);
                    let data = DataPacket {
                        name: packet.name,
                        payload,
                    };
                    self.schedule(
                        now + 1,
                        EventKind::Data {
                            at: from,
                            packet: data,
                            from_cache: false,
                        },
                    );
                }
            }
            NodeKind::Router => {
                let (router, book) = self.routers.get_mut(&at).expect("router");
                let legit = origin == Origin::Legit;
                match router.on_interest(&packet, from, now) {
                    RouterAction::Forward => {
                        book.pending_legit.insert(packet.name.clone(), legit);
                        let hop = self.upstream[at].expect("routers on a path have an upstream");
                        self.schedule(
                            now + 1,
                            EventKind::Interest {
                                at: hop,
                                from: at,
                                packet,
                                origin,
                            },
                        );
                    }
                    RouterAction::AggregateInPit => {
                        if legit {
                            book.pending_legit.insert(packet.name, true);
                        }
                    }
                    RouterAction::SatisfyFromCache(data) => {
                        if legit {
                            book.cached_legit.insert(data.name.clone(), true);
                        }
                        self.schedule(
                            now + 1,
                            EventKind::Data {
                                at: from,
                                packet: data,
                                from_cache: true,
                            },
                        );
                    }
                    RouterAction::DropUnauthorized => {
                        self.metrics.interests_dropped_unauthorized += 1
                    }
                    RouterAction::DropMalformed | RouterAction::DropDuplicate => {}
                }
            }
            NodeKind::Consumer | NodeKind::Attacker => {}
        }
    }

    fn on_data(&mut self, now: u64, at: NodeId, packet: DataPacket, from_cache: bool) {
        match self.kinds[at] {
            NodeKind::Router => {
                let (router, book) = self.routers.get_mut(&at).expect("router");
                let Some((faces, evicted)) = router.on_data(&packet) else {
                    return;
                };
                let legit = book.pending_legit.remove(&packet.name).unwrap_or(false);
                if let Some(victim) = evicted {
                    let victim_legit = book.cached_legit.remove(&victim).unwrap_or(false);
                    if victim_legit && !legit {
                        self.metrics.legit_evictions_caused_by_attacker += 1;
                    }
                }
                if router.content_store().contains(&packet.name) {
                    book.cached_legit.insert(packet.name.clone(), legit);
                }
                for face in faces {
                    self.schedule(
                        now + 1,
                        EventKind::Data {
                            at: face,
                            packet: packet.clone(),
                            from_cache,
                        },
                    );
                }
            }
            NodeKind::Consumer => {
                let waiting = self
                    .waiting
                    .entry(at)
                    .or_default()
                    .remove(&packet.name)
                    .unwrap_or(0);
                self.metrics.legit_interests_satisfied += waiting;
                if from_cache {
                    self.metrics.legit_cache_hits += waiting;
                }
            }
            NodeKind::Attacker => self.metrics.attacker_data_delivered += 1,
            NodeKind::Producer => {}
        }
    }
}
