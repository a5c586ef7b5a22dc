//! Scenario description and its line-oriented text format.
//!
//! ```text
//! node c1 consumer
//! node r1 router
//! node p producer
//! link c1 r1
//! link r1 p
//! cache r1 2
//! enforce r1 true
//! anchor r1 grantor
//! legit 0 c1 /video/1
//! attack 10 a1 /junk/1
//! seed 7
//! ```
//!
//! `anchor <router> grantor` names the scenario's own grantor, whose key is
//! derived from the seed. Routers without anchor lines trust exactly that
//! grantor. Two optional extensions: `catalog <name>` restricts what the
//! producer serves (default: every name), and `credential <attacker>
//! none|self-signed|stolen` picks what an attacker puts in its Interests.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use dcap_core::PublicKey;

use crate::error::SimError;

pub const DEFAULT_CACHE_CAPACITY: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Consumer,
    Attacker,
    Router,
    Producer,
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "consumer" => Ok(NodeKind::Consumer),
            "attacker" => Ok(NodeKind::Attacker),
            "router" => Ok(NodeKind::Router),
            "producer" => Ok(NodeKind::Producer),
            other => Err(format!("unknown node kind `{other}`")),
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Consumer => "consumer",
            NodeKind::Attacker => "attacker",
            NodeKind::Router => "router",
            NodeKind::Producer => "producer",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Anchor {
    /// The scenario's seeded grantor.
    ScenarioGrantor,
    Key(PublicKey),
}

/// What an attacker attaches to its Interests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AttackerCredential {
    /// No capability at all.
    #[default]
    None,
    /// A capability for its own key, signed by a grantor it made up.
    SelfSigned,
    /// A legitimate consumer's capability and KeyLocator, without the
    /// consumer's secret key.
    Stolen,
}

impl FromStr for AttackerCredential {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "self-signed" => Ok(Self::SelfSigned),
            "stolen" => Ok(Self::Stolen),
            other => Err(format!("unknown credential `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Request {
    pub tick: u64,
    pub node: String,
    pub name: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioConfig {
    /// (id, kind) in declaration order.
    pub nodes: Vec<(String, NodeKind)>,
    pub links: Vec<(String, String)>,
    /// Capacity for routers without a `cache` line.
    pub cache_capacity: usize,
    pub router_cache: BTreeMap<String, usize>,
    pub enforce: BTreeMap<String, bool>,
    pub anchors: BTreeMap<String, Vec<Anchor>>,
    pub credentials: BTreeMap<String, AttackerCredential>,
    pub legit: Vec<Request>,
    pub attack: Vec<Request>,
    /// `None` serves every requested name.
    pub catalog: Option<Vec<Vec<u8>>>,
    pub read_privilege: Vec<u8>,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            nodes: Vec::new(),
            links: Vec::new(),
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            router_cache: BTreeMap::new(),
            enforce: BTreeMap::new(),
            anchors: BTreeMap::new(),
            credentials: BTreeMap::new(),
            legit: Vec::new(),
            attack: Vec::new(),
            catalog: None,
            read_privilege: crate::router::DEFAULT_READ_PRIVILEGE.to_vec(),
            rng_seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn node(mut self, id: &str, kind: NodeKind) -> Self {
        self.nodes.push((id.to_string(), kind));
        self
    }

    pub fn link(mut self, a: &str, b: &str) -> Self {
        self.links.push((a.to_string(), b.to_string()));
        self
    }

    pub fn cache(mut self, router: &str, capacity: usize) -> Self {
        self.router_cache.insert(router.to_string(), capacity);
        self
    }

    pub fn enforcing(mut self, router: &str, on: bool) -> Self {
        self.enforce.insert(router.to_string(), on);
        self
    }

    pub fn credential(mut self, attacker: &str, credential: AttackerCredential) -> Self {
        self.credentials.insert(attacker.to_string(), credential);
        self
    }

    pub fn legit(mut self, tick: u64, node: &str, name: &str) -> Self {
        self.legit.push(Request {
            tick,
            node: node.to_string(),
            name: name.as_bytes().to_vec(),
        });
        self
    }

    pub fn attack(mut self, tick: u64, node: &str, name: &str) -> Self {
        self.attack.push(Request {
            tick,
            node: node.to_string(),
            name: name.as_bytes().to_vec(),
        });
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn kind_of(&self, id: &str) -> Option<NodeKind> {
        self.nodes.iter().find(|(n, _)| n == id).map(|(_, k)| *k)
    }

    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| SimError::Parse {
                line: i + 1,
                message,
            };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let arity = |n: usize| {
                if tokens.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("`{}` takes {} arguments", tokens[0], n - 1)))
                }
            };
            let num = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| err(format!("bad number `{s}`")))
            };
            match tokens[0] {
                "node" => {
                    arity(3)?;
                    let kind = tokens[2].parse().map_err(err)?;
                    cfg.nodes.push((tokens[1].to_string(), kind));
                }
                "link" => {
                    arity(3)?;
                    cfg.links
                        .push((tokens[1].to_string(), tokens[2].to_string()));
                }
                "cache" => {
                    arity(3)?;
                    cfg.router_cache
                        .insert(tokens[1].to_string(), num(tokens[2])? as usize);
                }
                "enforce" => {
                    arity(3)?;
                    let on = match tokens[2] {
                        "true" => true,
                        "false" => false,
                        other => return Err(err(format!("expected true|false, got `{other}`"))),
                    };
                    cfg.enforce.insert(tokens[1].to_string(), on);
                }
                "anchor" => {
                    arity(3)?;
                    let anchor = if tokens[2] == "grantor" {
                        Anchor::ScenarioGrantor
                    } else {
                        let body = tokens[2].strip_prefix("dcapk1:").unwrap_or(tokens[2]);
                        let key = URL_SAFE_NO_PAD
                            .decode(body)
                            .ok()
                            .and_then(|b| <[u8; 32]>::try_from(b).ok())
                            .ok_or_else(|| err(format!("bad anchor key `{}`", tokens[2])))?;
                        Anchor::Key(key)
                    };
                    cfg.anchors
                        .entry(tokens[1].to_string())
                        .or_default()
                        .push(anchor);
                }
                "credential" => {
                    arity(3)?;
                    let c = tokens[2].parse().map_err(err)?;
                    cfg.credentials.insert(tokens[1].to_string(), c);
                }
                "legit" | "attack" => {
                    arity(4)?;
                    let req = Request {
                        tick: num(tokens[1])?,
                        node: tokens[2].to_string(),
                        name: tokens[3].as_bytes().to_vec(),
                    };
                    if tokens[0] == "legit" {
                        cfg.legit.push(req);
                    } else {
                        cfg.attack.push(req);
                    }
                }
                "catalog" => {
                    arity(2)?;
                    cfg.catalog
                        .get_or_insert_with(Vec::new)
                        .push(tokens[1].as_bytes().to_vec());
                }
                "seed" => {
                    arity(2)?;
                    cfg.rng_seed = num(tokens[1])?;
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        Ok(cfg)
    }

    /// Checks references and schedule order. Reachability is checked when
    /// routes are built.
    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |m: String| Err(SimError::InvalidConfig(m));
        let topo = |m: String| Err(SimError::InvalidTopology(m));
        let mut seen = std::collections::BTreeSet::new();
        for (id, _) in &self.nodes {
            if !seen.insert(id.as_str()) {
                return topo(format!("duplicate node `{id}`"));
            }
        }
        let producers = self
            .nodes
            .iter()
            .filter(|(_, k)| *k == NodeKind::Producer)
            .count();
        if producers != 1 {
            return topo(format!("expected exactly one producer, found {producers}"));
        }
        for (a, b) in &self.links {
            for end in [a, b] {
                if self.kind_of(end).is_none() {
                    return topo(format!("link references unknown node `{end}`"));
                }
            }
            if a == b {
                return topo(format!("self-link on `{a}`"));
            }
        }
        let routers = self
            .router_cache
            .keys()
            .chain(self.enforce.keys())
            .chain(self.anchors.keys());
        for id in routers {
            if self.kind_of(id) != Some(NodeKind::Router) {
                return invalid(format!("`{id}` is not a router"));
            }
        }
        for id in self.credentials.keys() {
            if self.kind_of(id) != Some(NodeKind::Attacker) {
                return invalid(format!("`{id}` is not an attacker"));
            }
        }
        for (schedule, kind) in [
            (&self.legit, NodeKind::Consumer),
            (&self.attack, NodeKind::Attacker),
        ] {
            if schedule.windows(2).any(|w| w[0].tick > w[1].tick) {
                return invalid(format!("{kind} schedule is not sorted by tick"));
            }
            for r in schedule {
                if self.kind_of(&r.node) != Some(kind) {
                    return invalid(format!("`{}` is not a {kind}", r.node));
                }
                if r.name.is_empty() {
                    return invalid("empty name in schedule".into());
                }
            }
        }
        Ok(())
    }
}
