//! Deterministic in-memory simulation of a content-addressed P2P store:
//! objects with data and links, chunking at the 256 KB block size, pinning
//! and provider records, node identities, and an IPNS-like mutable-name
//! registry.
//!
//! Content addresses here are SHA-256 over the raw bytes (root objects hash
//! the concatenation of their children's multihashes). Real IPFS hashes a
//! UnixFS/protobuf encoding instead, so **simulator CIDs never match
//! real-network CIDs for the same file**; every property studied on top of
//! the store (anchor exactness, pinning, provider counts, name resolution)
//! is unaffected by this.
//!
//! There is no deletion primitive: content becomes unreachable only when
//! every provider unpins it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cidcodec::{CidV0, Digest256};
use crate::keys::Keypair;

/// Hard cap on a single object's data block: 256 KB.
pub const BLOCK_SIZE: usize = 262_144;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StoreError {
    #[error("node {0} is not registered with the store")]
    UnknownNode(NodeId),
    #[error("no provider serves {0}")]
    NotFound(CidV0),
    #[error("node {node} is not a provider of {cid}")]
    NotPinned { node: NodeId, cid: CidV0 },
    #[error("name {0} has never been published")]
    UnknownName(Digest256),
    #[error("publisher key does not own name {0}")]
    Unauthorized(Digest256),
    #[error("data block of {0} bytes exceeds the {BLOCK_SIZE} byte cap")]
    BlockTooLarge(usize),
}

pub fn sha256_digest(data: &[u8]) -> Digest256 {
    let out = Sha256::digest(data);
    Digest256::from_slice(&out).expect("sha256 output is 32 bytes")
}

/// A node identity: the SHA-256 digest of the node's public key, rendered
/// in the same multihash/Base58 form as content identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(Digest256);

impl NodeId {
    pub fn from_public_key(public_key: &[u8]) -> Self {
        Self(sha256_digest(public_key))
    }

    pub fn digest(&self) -> Digest256 {
        self.0
    }

    pub fn to_text(&self) -> String {
        CidV0::from_digest(self.0).text().to_string()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let cid = CidV0::parse(&text).map_err(serde::de::Error::custom)?;
        Ok(Self(cid.digest()))
    }
}

/// One stored object: a data block of at most [`BLOCK_SIZE`] bytes plus an
/// ordered list of links to child objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredObject {
    pub data: Vec<u8>,
    pub links: Vec<CidV0>,
}

impl StoredObject {
    fn leaf(data: Vec<u8>) -> Result<Self, StoreError> {
        if data.len() > BLOCK_SIZE {
            return Err(StoreError::BlockTooLarge(data.len()));
        }
        Ok(Self { data, links: Vec::new() })
    }
}

/// Latest published target of a mutable name, with a strictly increasing
/// version counter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameRecord {
    pub name: Digest256,
    pub current: CidV0,
    pub version: u64,
}

/// The content address the store assigns to `content`: SHA-256 of the raw
/// bytes for a single block, SHA-256 over the concatenated child multihashes
/// for chunked content.
pub fn content_cid(content: &[u8]) -> CidV0 {
    if content.len() <= BLOCK_SIZE {
        return CidV0::from_digest(sha256_digest(content));
    }
    let mut concat = Vec::new();
    for chunk in content.chunks(BLOCK_SIZE) {
        let child = CidV0::from_digest(sha256_digest(chunk));
        concat.extend_from_slice(child.multihash());
    }
    CidV0::from_digest(sha256_digest(&concat))
}

#[derive(Debug, Default)]
pub struct Store {
    objects: BTreeMap<CidV0, StoredObject>,
    providers: BTreeMap<CidV0, BTreeSet<NodeId>>,
    names: BTreeMap<Digest256, NameRecord>,
    nodes: BTreeMap<NodeId, Vec<u8>>,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a node by its public key; idempotent for the same key.
    pub fn register_node(&mut self, public_key: &[u8]) -> NodeId {
        let id = NodeId::from_public_key(public_key);
        self.nodes.insert(id, public_key.to_vec());
        id
    }

    pub fn is_registered(&self, node: NodeId) -> bool {
        self.nodes.contains_key(&node)
    }

    pub fn node_public_key(&self, node: NodeId) -> Option<&[u8]> {
        self.nodes.get(&node).map(Vec::as_slice)
    }

    /// Stores `content`, chunking anything larger than one block, and makes
    /// the uploading node the initial provider of the whole DAG. Returns the
    /// root CID.
    pub fn put_object(&mut self, node: NodeId, content: &[u8]) -> Result<CidV0, StoreError> {
        if !self.is_registered(node) {
            return Err(StoreError::UnknownNode(node));
        }
        if content.len() <= BLOCK_SIZE {
            let obj = StoredObject::leaf(content.to_vec())?;
            let cid = CidV0::from_digest(sha256_digest(content));
            self.insert_provided(cid.clone(), obj, node);
            return Ok(cid);
        }
        let mut links = Vec::new();
        for chunk in content.chunks(BLOCK_SIZE) {
            let obj = StoredObject::leaf(chunk.to_vec())?;
            let cid = CidV0::from_digest(sha256_digest(chunk));
            self.insert_provided(cid.clone(), obj, node);
            links.push(cid);
        }
        let mut concat = Vec::new();
        for link in &links {
            concat.extend_from_slice(link.multihash());
        }
        let root_cid = CidV0::from_digest(sha256_digest(&concat));
        let root = StoredObject { data: Vec::new(), links };
        self.insert_provided(root_cid.clone(), root, node);
        Ok(root_cid)
    }

    fn insert_provided(&mut self, cid: CidV0, obj: StoredObject, node: NodeId) {
        self.objects.entry(cid.clone()).or_insert(obj);
        self.providers.entry(cid).or_default().insert(node);
    }

    fn fetchable(&self, cid: &CidV0) -> bool {
        self.providers.get(cid).map(|s| !s.is_empty()) == Some(true)
            && self.objects.contains_key(cid)
    }

    /// Reassembles content in link order. Fails if any object along the DAG
    /// has no provider left — the unresolvable-hash case.
    pub fn get_object(&self, cid: &CidV0) -> Result<Vec<u8>, StoreError> {
        if !self.fetchable(cid) {
            return Err(StoreError::NotFound(cid.clone()));
        }
        let obj = &self.objects[cid];
        if obj.links.is_empty() {
            return Ok(obj.data.clone());
        }
        let mut out = Vec::new();
        for link in &obj.links {
            out.extend_from_slice(&self.get_object(link)?);
        }
        Ok(out)
    }

    pub fn raw_object(&self, cid: &CidV0) -> Option<&StoredObject> {
        self.objects.get(cid)
    }

    fn dag_cids(&self, cid: &CidV0) -> Vec<CidV0> {
        let mut out = vec![cid.clone()];
        if let Some(obj) = self.objects.get(cid) {
            for link in &obj.links {
                out.extend(self.dag_cids(link));
            }
        }
        out
    }

    /// Makes `node` a provider of `cid` and of every object it links to.
    /// The content must be fetchable: replication copies real bytes.
    pub fn pin(&mut self, node: NodeId, cid: &CidV0) -> Result<usize, StoreError> {
        if !self.is_registered(node) {
            return Err(StoreError::UnknownNode(node));
        }
        self.get_object(cid)?;
        for c in self.dag_cids(cid) {
            self.providers.entry(c).or_default().insert(node);
        }
        Ok(self.providers[cid].len())
    }

    /// Removes `node` from the provider set of `cid` and its DAG. When the
    /// last provider leaves, the record is dropped and the content is gone
    /// for good.
    pub fn unpin(&mut self, node: NodeId, cid: &CidV0) -> Result<usize, StoreError> {
        let is_provider = self
            .providers
            .get(cid)
            .map(|s| s.contains(&node))
            .unwrap_or(false);
        if !is_provider {
            return Err(StoreError::NotPinned { node, cid: cid.clone() });
        }
        for c in self.dag_cids(cid) {
            if let Some(set) = self.providers.get_mut(&c) {
                set.remove(&node);
                if set.is_empty() {
                    self.providers.remove(&c);
                }
            }
        }
        Ok(self.providers.get(cid).map(BTreeSet::len).unwrap_or(0))
    }

    /// Current provider set; empty for unknown or fully unpinned content.
    pub fn providers(&self, cid: &CidV0) -> BTreeSet<NodeId> {
        self.providers.get(cid).cloned().unwrap_or_default()
    }

    /// Publishes `cid` under `name`. Only the holder of the keypair whose
    /// public key hashes to `name` may publish; versions increase strictly.
    pub fn publish_name(
        &mut self,
        owner: &Keypair,
        name: &Digest256,
        cid: CidV0,
    ) -> Result<u64, StoreError> {
        if sha256_digest(&owner.public_bytes()) != *name {
            return Err(StoreError::Unauthorized(*name));
        }
        let version = self.names.get(name).map(|r| r.version + 1).unwrap_or(1);
        self.names.insert(
            *name,
            NameRecord { name: *name, current: cid, version },
        );
        Ok(version)
    }

    /// Latest CID published under `name`.
    pub fn resolve_name(&self, name: &Digest256) -> Result<&NameRecord, StoreError> {
        self.names.get(name).ok_or(StoreError::UnknownName(*name))
    }

    /// Full-state export for post-run forensics.
    pub fn snapshot(&self) -> StoreSnapshot {
        let b64 = base64::engine::general_purpose::STANDARD;
        StoreSnapshot {
            objects: self
                .objects
                .iter()
                .map(|(cid, obj)| ObjectSnapshot {
                    cid: cid.text().to_string(),
                    size: obj.data.len(),
                    data_base64: b64.encode(&obj.data),
                    links: obj.links.iter().map(|l| l.text().to_string()).collect(),
                })
                .collect(),
            providers: self
                .providers
                .iter()
                .map(|(cid, set)| ProviderSnapshot {
                    cid: cid.text().to_string(),
                    nodes: set.iter().map(NodeId::to_text).collect(),
                })
                .collect(),
            names: self.names.values().cloned().collect(),
            nodes: self.nodes.keys().map(NodeId::to_text).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectSnapshot {
    pub cid: String,
    pub size: usize,
    pub data_base64: String,
    pub links: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderSnapshot {
    pub cid: String,
    pub nodes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoreSnapshot {
    pub objects: Vec<ObjectSnapshot>,
    pub providers: Vec<ProviderSnapshot>,
    pub names: Vec<NameRecord>,
    pub nodes: Vec<String>,
}
