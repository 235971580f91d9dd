//! Botmaster and bot state machines: campaign publication, periodic
//! generator polling through round-robin gateways, signature verification
//! against an embedded trust set, redirect-to-rendezvous resolution,
//! execution recording, and feedback exfiltration over the mutable-name
//! registry.
//!
//! A bot polls one counter per tick and never revisits old counters by
//! default; a bounded look-back window can be configured at spawn time for
//! study. A redirect is followed one hop per tick.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cidcodec::{CidV0, Digest256};
use crate::gatewaysim::{request, GatewayError, GatewayProfile, RequestOutcome, RoundRobin};
use crate::keys::{verify, KeyError, Keypair};
use crate::rigacore::{Campaign, CounterDomain, RigaError, SkewedPrng};
use crate::storesim::{content_cid, sha256_digest, NodeId, Store, StoreError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AgentError {
    #[error("stored CID {got} does not match the planned anchor {expected}")]
    AnchorMismatch { expected: CidV0, got: CidV0 },
    #[error("no anchor at index {0}")]
    UnknownAnchor(usize),
    #[error("malformed command envelope: {0}")]
    MalformedEnvelope(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Riga(#[from] RigaError),
}

/// What a command file asks a bot to do: run the payload as a command, or
/// treat the payload as a rendezvous name and fetch the real content there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CommandKind {
    Direct,
    Redirect,
}

impl CommandKind {
    fn to_byte(self) -> u8 {
        match self {
            CommandKind::Direct => 0x01,
            CommandKind::Redirect => 0x02,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x01 => Some(CommandKind::Direct),
            0x02 => Some(CommandKind::Redirect),
            _ => None,
        }
    }
}

/// A signed command file. Wire form: kind byte, 4-byte big-endian payload
/// length, payload, signature. The signer's public key travels separately
/// (bots carry the trusted key set), so the wire form does not include it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandEnvelope {
    pub kind: CommandKind,
    pub payload: Vec<u8>,
    pub signature: Vec<u8>,
    pub signer: Vec<u8>,
}

fn signed_bytes(kind: CommandKind, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(5 + payload.len());
    out.push(kind.to_byte());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(payload);
    out
}

impl CommandEnvelope {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = signed_bytes(self.kind, &self.payload);
        out.extend_from_slice(&self.signature);
        out
    }

    /// Splits wire bytes into (kind, payload, signature) without verifying.
    pub fn decode(bytes: &[u8]) -> Result<(CommandKind, Vec<u8>, Vec<u8>), AgentError> {
        if bytes.len() < 5 {
            return Err(AgentError::MalformedEnvelope(format!(
                "{} bytes is shorter than the fixed header",
                bytes.len()
            )));
        }
        let kind = CommandKind::from_byte(bytes[0])
            .ok_or_else(|| AgentError::MalformedEnvelope(format!("unknown kind {:#04x}", bytes[0])))?;
        let len = u32::from_be_bytes(bytes[1..5].try_into().expect("4 bytes")) as usize;
        if bytes.len() < 5 + len {
            return Err(AgentError::MalformedEnvelope(format!(
                "payload length {len} exceeds remaining {} bytes",
                bytes.len() - 5
            )));
        }
        let payload = bytes[5..5 + len].to_vec();
        let signature = bytes[5 + len..].to_vec();
        Ok((kind, payload, signature))
    }

    /// Parses wire bytes and accepts them only if some key in the trusted
    /// set verifies the signature; the matching key becomes the signer.
    /// Anything else is dropped.
    pub fn parse_verified(bytes: &[u8], trusted_keys: &[Vec<u8>]) -> Option<CommandEnvelope> {
        let (kind, payload, signature) = Self::decode(bytes).ok()?;
        let message = signed_bytes(kind, &payload);
        for key in trusted_keys {
            if verify(key, &message, &signature) == Ok(true) {
                return Some(CommandEnvelope {
                    kind,
                    payload,
                    signature,
                    signer: key.clone(),
                });
            }
        }
        None
    }
}

pub fn sign_envelope(kind: CommandKind, payload: &[u8], keypair: &Keypair) -> CommandEnvelope {
    let signature = keypair.sign(&signed_bytes(kind, payload));
    CommandEnvelope {
        kind,
        payload: payload.to_vec(),
        signature,
        signer: keypair.public_bytes(),
    }
}

/// True when the envelope's own signer verifies it. A malformed signer key
/// verifies nothing.
pub fn verify_envelope(envelope: &CommandEnvelope) -> bool {
    verify(
        &envelope.signer,
        &signed_bytes(envelope.kind, &envelope.payload),
        &envelope.signature,
    ) == Ok(true)
}

/// A mutable-name location where bots deposit feedback. The keypair is
/// campaign material shared with the bots; whoever holds it may republish
/// the board.
#[derive(Debug, Clone)]
pub struct RendezvousBoard {
    pub keypair: Keypair,
    pub name: Digest256,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct BoardDoc {
    entries: Vec<CidV0>,
}

impl RendezvousBoard {
    /// Publishes an empty board under the key's name. The publishing node
    /// provides the board object.
    pub fn create(store: &mut Store, keypair: Keypair, owner: NodeId) -> Result<Self, AgentError> {
        let name = sha256_digest(&keypair.public_bytes());
        let doc = serde_json::to_vec(&BoardDoc::default()).expect("static doc");
        let cid = store.put_object(owner, &doc)?;
        store.publish_name(&keypair, &name, cid)?;
        Ok(Self { keypair, name })
    }

    fn load(&self, store: &Store) -> Result<BoardDoc, AgentError> {
        let record = store.resolve_name(&self.name)?;
        let bytes = store.get_object(&record.current)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| AgentError::MalformedEnvelope(format!("board document: {e}")))
    }
}

/// Per-bot behavioral switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotOptions {
    /// Pins published command files, joining the provider set.
    pub is_seeder: bool,
    /// How many counters behind the nominal position a late-joining bot
    /// starts; 0 means strictly forward-only.
    pub lookback: u64,
    /// Simulated time at which the bot comes online.
    pub join_time_ms: u64,
}

impl Default for BotOptions {
    fn default() -> Self {
        Self { is_seeder: false, lookback: 0, join_time_ms: 0 }
    }
}

/// One executed command, as recorded in the bot's append-only log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub counter: u64,
    pub command: Vec<u8>,
    pub sim_time_ms: u64,
}

/// Result of one poll tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PollOutcome {
    NoContent,
    Executed { command: Vec<u8> },
    Redirected { name: Digest256 },
}

impl PollOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            PollOutcome::NoContent => "no_content",
            PollOutcome::Executed { .. } => "executed",
            PollOutcome::Redirected { .. } => "redirected",
        }
    }
}

/// One line of the execution trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub sim_time_ms: u64,
    pub bot_id: NodeId,
    pub counter: u64,
    pub gateway: String,
    pub latency_ms: f64,
    pub outcome: PollOutcome,
}

/// Content transform applied to fetched bytes before envelope parsing;
/// the default is the identity. Steganographic unwrapping would plug in
/// here.
pub type Extractor = fn(&[u8]) -> Vec<u8>;

fn identity_extractor(bytes: &[u8]) -> Vec<u8> {
    bytes.to_vec()
}

/// An infected-device agent: sweeps the counter domain at the campaign
/// tick rate, polling one address per tick through rotating gateways.
#[derive(Debug, Clone)]
pub struct Bot {
    pub id: NodeId,
    keypair: Keypair,
    prng: SkewedPrng,
    domain: CounterDomain,
    counter: u64,
    rr: RoundRobin,
    trusted_keys: Vec<Vec<u8>>,
    timeout_ms: u64,
    options: BotOptions,
    executed: Vec<ExecutionRecord>,
    extractor: Extractor,
    pending_unpin: Vec<CidV0>,
}

impl Bot {
    /// Registers the bot with the store and positions its counter. A bot
    /// joining at t > 0 syncs to the nominal counter for that time, minus
    /// its look-back window.
    pub fn spawn(
        store: &mut Store,
        keypair: Keypair,
        campaign: &Campaign,
        trusted_keys: Vec<Vec<u8>>,
        timeout_ms: u64,
        options: BotOptions,
        gateway_count: usize,
        rotation_offset: usize,
    ) -> Result<Self, AgentError> {
        let id = store.register_node(&keypair.public_bytes());
        let prng = campaign.build_prng()?;
        let domain = campaign.domain;
        let nominal = domain.start + options.join_time_ms / domain.tick_ms();
        let counter = nominal.saturating_sub(options.lookback).max(domain.start);
        Ok(Self {
            id,
            keypair,
            prng,
            domain,
            counter,
            rr: RoundRobin::starting_at(rotation_offset % gateway_count.max(1)),
            trusted_keys,
            timeout_ms,
            options,
            executed: Vec::new(),
            extractor: identity_extractor,
            pending_unpin: Vec::new(),
        })
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn domain(&self) -> &CounterDomain {
        &self.domain
    }

    pub fn options(&self) -> &BotOptions {
        &self.options
    }

    pub fn executed(&self) -> &[ExecutionRecord] {
        &self.executed
    }

    pub fn with_extractor(mut self, extractor: Extractor) -> Self {
        self.extractor = extractor;
        self
    }

    /// True while the bot still has counters left to poll.
    pub fn active(&self) -> bool {
        self.counter <= self.domain.upper
    }

    fn fetch_via_next_gateway(
        &mut self,
        store: &Store,
        gateways: &mut [GatewayProfile],
        cid: &CidV0,
        now_ms: u64,
    ) -> Result<(String, RequestOutcome), AgentError> {
        let idx = self.rr.next_index(gateways.len())?;
        let gateway = &mut gateways[idx];
        let outcome = request(gateway, store, cid, self.timeout_ms, now_ms);
        Ok((gateway.name().to_string(), outcome))
    }

    /// One poll: generate the address for the current counter, fetch it
    /// through the next gateway in rotation, act on verified content, and
    /// advance. Every failure path folds into `NoContent`.
    pub fn tick(
        &mut self,
        store: &Store,
        gateways: &mut [GatewayProfile],
        now_ms: u64,
    ) -> Result<TickRecord, AgentError> {
        assert!(self.active(), "tick past the end of the counter domain");
        let counter = self.counter;
        let cid = self.prng.uri_at(counter);
        let (gateway, first) = self.fetch_via_next_gateway(store, gateways, &cid, now_ms)?;
        let mut latency_ms = first.elapsed_ms();

        let outcome = match first {
            RequestOutcome::Dropped { .. } => PollOutcome::NoContent,
            RequestOutcome::Fetched { bytes, .. } => {
                let extracted = (self.extractor)(&bytes);
                match CommandEnvelope::parse_verified(&extracted, &self.trusted_keys) {
                    None => PollOutcome::NoContent,
                    Some(envelope) => match envelope.kind {
                        CommandKind::Direct => {
                            self.executed.push(ExecutionRecord {
                                counter,
                                command: envelope.payload.clone(),
                                sim_time_ms: now_ms,
                            });
                            PollOutcome::Executed { command: envelope.payload }
                        }
                        CommandKind::Redirect => {
                            let name = match Digest256::from_slice(&envelope.payload) {
                                Some(name) => name,
                                None => {
                                    // a verified redirect must carry a name digest
                                    self.counter += 1;
                                    return Ok(TickRecord {
                                        sim_time_ms: now_ms,
                                        bot_id: self.id,
                                        counter,
                                        gateway,
                                        latency_ms,
                                        outcome: PollOutcome::NoContent,
                                    });
                                }
                            };
                            // one hop: resolve the rendezvous name and fetch
                            // whatever it currently points to
                            if let Ok(record) = store.resolve_name(&name) {
                                let target = record.current.clone();
                                let (_, second) =
                                    self.fetch_via_next_gateway(store, gateways, &target, now_ms)?;
                                latency_ms += second.elapsed_ms();
                                if let RequestOutcome::Fetched { bytes, .. } = second {
                                    let extracted = (self.extractor)(&bytes);
                                    if let Some(env) =
                                        CommandEnvelope::parse_verified(&extracted, &self.trusted_keys)
                                    {
                                        if env.kind == CommandKind::Direct {
                                            self.executed.push(ExecutionRecord {
                                                counter,
                                                command: env.payload,
                                                sim_time_ms: now_ms,
                                            });
                                        }
                                    }
                                }
                            }
                            PollOutcome::Redirected { name }
                        }
                    },
                }
            }
        };
        self.counter += 1;
        Ok(TickRecord {
            sim_time_ms: now_ms,
            bot_id: self.id,
            counter,
            gateway,
            latency_ms,
            outcome,
        })
    }

    /// Stores `info`, appends its CID to the rendezvous board, and
    /// republishes the board name. With `unpin_after` the bot withdraws
    /// from the entry's provider set once the operator has collected.
    pub fn push_feedback(
        &mut self,
        store: &mut Store,
        info: &[u8],
        board: &RendezvousBoard,
        unpin_after: bool,
    ) -> Result<CidV0, AgentError> {
        let mut doc = board.load(store)?;
        let entry = store.put_object(self.id, info)?;
        doc.entries.push(entry.clone());
        let bytes = serde_json::to_vec(&doc).expect("board doc serializes");
        let board_cid = store.put_object(self.id, &bytes)?;
        store.publish_name(&board.keypair, &board.name, board_cid)?;
        if unpin_after {
            self.pending_unpin.push(entry.clone());
        }
        Ok(entry)
    }

    /// Removes the bot from the provider sets of entries it flagged,
    /// leaving no trace of what was exfiltrated.
    pub fn after_collection(&mut self, store: &mut Store) -> Result<(), AgentError> {
        for cid in std::mem::take(&mut self.pending_unpin) {
            store.unpin(self.id, &cid)?;
        }
        Ok(())
    }

    pub fn public_key(&self) -> Vec<u8> {
        self.keypair.public_bytes()
    }
}

/// One collected feedback entry; `None` content marks an entry whose
/// providers vanished before collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEntry {
    pub cid: CidV0,
    pub content: Option<Vec<u8>>,
}

/// The campaign operator: holds the signing key, the planned envelopes,
/// and the planned anchor addresses.
#[derive(Debug, Clone)]
pub struct Botmaster {
    pub node: NodeId,
    keypair: Keypair,
    pub envelopes: Vec<Vec<u8>>,
    pub anchor_cids: Vec<CidV0>,
}

impl Botmaster {
    pub fn new(
        store: &mut Store,
        keypair: Keypair,
        envelopes: Vec<Vec<u8>>,
        anchor_cids: Vec<CidV0>,
    ) -> Self {
        let node = store.register_node(&keypair.public_bytes());
        Self { node, keypair, envelopes, anchor_cids }
    }

    pub fn keypair(&self) -> &Keypair {
        &self.keypair
    }

    pub fn public_key(&self) -> Vec<u8> {
        self.keypair.public_bytes()
    }

    /// Uploads the planned envelope for one anchor. The stored CID must
    /// equal the planned address; a mismatch means the envelope changed
    /// after planning. Extra seeders pin the object immediately.
    pub fn publish_command(
        &self,
        store: &mut Store,
        anchor_index: usize,
        seeders: &[NodeId],
    ) -> Result<CidV0, AgentError> {
        let bytes = self
            .envelopes
            .get(anchor_index)
            .ok_or(AgentError::UnknownAnchor(anchor_index))?;
        let expected = self
            .anchor_cids
            .get(anchor_index)
            .ok_or(AgentError::UnknownAnchor(anchor_index))?;
        let got = content_cid(bytes);
        if got != *expected {
            return Err(AgentError::AnchorMismatch { expected: expected.clone(), got });
        }
        let cid = store.put_object(self.node, bytes)?;
        debug_assert_eq!(cid, *expected);
        for seeder in seeders {
            store.pin(*seeder, &cid)?;
        }
        Ok(cid)
    }

    /// Fetches every entry on the board, in post order, with per-entry
    /// markers for content whose providers are gone.
    pub fn collect_feedback(
        &self,
        store: &Store,
        board: &RendezvousBoard,
    ) -> Result<Vec<FeedbackEntry>, AgentError> {
        let doc = board.load(store)?;
        Ok(doc
            .entries
            .into_iter()
            .map(|cid| {
                let content = store.get_object(&cid).ok();
                FeedbackEntry { cid, content }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gatewaysim::{build_profiles, GatewaySpec, LatencyModel};
    use crate::rigacore::{plan_campaign, production_prime};

    fn fixed_gateways(n: usize, ms: f64) -> Vec<GatewayProfile> {
        let specs: Vec<GatewaySpec> = (0..n)
            .map(|i| GatewaySpec {
                name: format!("gw{i}"),
                model: LatencyModel::Fixed { ms },
                availability: 1.0,
                rate_limit: None,
            })
            .collect();
        build_profiles(&specs, 99)
    }

    fn toy_campaign(
        commands: &[(CommandKind, &[u8])],
        counters: &[u64],
        signer: &Keypair,
        upper: u64,
    ) -> (Vec<Vec<u8>>, crate::rigacore::CampaignPlan) {
        let envelopes: Vec<Vec<u8>> = commands
            .iter()
            .map(|(kind, payload)| sign_envelope(*kind, payload, signer).to_bytes())
            .collect();
        let plan = plan_campaign(
            &envelopes,
            counters,
            production_prime(),
            CounterDomain::new(0, upper, 2).unwrap(),
            0,
        )
        .unwrap();
        (envelopes, plan)
    }

    #[test]
    fn sign_then_verify_round_trip() {
        let kp = Keypair::from_seed([1; 32]);
        let env = sign_envelope(CommandKind::Direct, b"update", &kp);
        assert!(verify_envelope(&env));
        let parsed =
            CommandEnvelope::parse_verified(&env.to_bytes(), &[kp.public_bytes()]).unwrap();
        assert_eq!(parsed, env);
    }

    #[test]
    fn payload_mutation_fails_verification() {
        let kp = Keypair::from_seed([1; 32]);
        let mut env = sign_envelope(CommandKind::Direct, b"update", &kp);
        env.payload[0] ^= 0x01;
        assert!(!verify_envelope(&env));
    }

    #[test]
    fn kind_mutation_fails_verification() {
        let kp = Keypair::from_seed([1; 32]);
        let mut env = sign_envelope(CommandKind::Direct, b"update", &kp);
        env.kind = CommandKind::Redirect;
        assert!(!verify_envelope(&env));
    }

    #[test]
    fn signature_mutation_fails_verification() {
        let kp = Keypair::from_seed([1; 32]);
        let env = sign_envelope(CommandKind::Direct, b"update", &kp);
        let mut bytes = env.to_bytes();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x80;
        assert!(CommandEnvelope::parse_verified(&bytes, &[kp.public_bytes()]).is_none());
    }

    #[test]
    fn valid_envelope_from_untrusted_signer_is_dropped() {
        let outsider = Keypair::from_seed([2; 32]);
        let trusted = Keypair::from_seed([3; 32]);
        let env = sign_envelope(CommandKind::Direct, b"rm -rf", &outsider);
        assert!(verify_envelope(&env), "internally valid");
        assert!(
            CommandEnvelope::parse_verified(&env.to_bytes(), &[trusted.public_bytes()]).is_none()
        );
    }

    #[test]
    fn wire_format_layout() {
        let kp = Keypair::from_seed([1; 32]);
        let env = sign_envelope(CommandKind::Redirect, b"abc", &kp);
        let bytes = env.to_bytes();
        assert_eq!(bytes[0], 0x02);
        assert_eq!(&bytes[1..5], &3u32.to_be_bytes());
        assert_eq!(&bytes[5..8], b"abc");
        assert_eq!(bytes.len(), 5 + 3 + 64);
    }

    #[test]
    fn published_command_lands_on_the_planned_anchor() {
        let mut store = Store::new();
        let master_kp = Keypair::from_seed([5; 32]);
        let (envelopes, plan) =
            toy_campaign(&[(CommandKind::Direct, b"noop")], &[10], &master_kp, 100);
        let master = Botmaster::new(&mut store, master_kp, envelopes, plan.anchor_cids.clone());
        let cid = master.publish_command(&mut store, 0, &[]).unwrap();
        assert_eq!(cid, plan.anchor_cids[0]);
        assert_eq!(store.providers(&cid).len(), 1);
    }

    #[test]
    fn altered_envelope_is_an_anchor_mismatch() {
        let mut store = Store::new();
        let master_kp = Keypair::from_seed([5; 32]);
        let (mut envelopes, plan) =
            toy_campaign(&[(CommandKind::Direct, b"noop")], &[10], &master_kp, 100);
        envelopes[0].push(0xFF);
        let master = Botmaster::new(&mut store, master_kp, envelopes, plan.anchor_cids);
        assert!(matches!(
            master.publish_command(&mut store, 0, &[]),
            Err(AgentError::AnchorMismatch { .. })
        ));
    }

    #[test]
    fn extra_seeders_pin_on_publication() {
        let mut store = Store::new();
        let master_kp = Keypair::from_seed([5; 32]);
        let (envelopes, plan) =
            toy_campaign(&[(CommandKind::Direct, b"noop")], &[10], &master_kp, 100);
        let master = Botmaster::new(&mut store, master_kp, envelopes, plan.anchor_cids);
        let seeders: Vec<NodeId> = (20u8..23)
            .map(|s| store.register_node(&Keypair::from_seed([s; 32]).public_bytes()))
            .collect();
        let cid = master.publish_command(&mut store, 0, &seeders).unwrap();
        assert_eq!(store.providers(&cid).len(), 4);
    }

    #[test]
    fn bot_executes_the_anchored_command_and_only_that() {
        let mut store = Store::new();
        let master_kp = Keypair::from_seed([5; 32]);
        // two anchors keep the polynomial non-constant; only the first is
        // published, so every other counter is a miss
        let (envelopes, plan) = toy_campaign(
            &[(CommandKind::Direct, b"report-in"), (CommandKind::Direct, b"later")],
            &[2, 5],
            &master_kp,
            5,
        );
        let trusted = vec![master_kp.public_bytes()];
        let master = Botmaster::new(&mut store, master_kp, envelopes, plan.anchor_cids);
        master.publish_command(&mut store, 0, &[]).unwrap();

        let mut gateways = fixed_gateways(3, 100.0);
        let mut bot = Bot::spawn(
            &mut store,
            Keypair::from_seed([8; 32]),
            &plan.campaign,
            trusted,
            3000,
            BotOptions::default(),
            gateways.len(),
            0,
        )
        .unwrap();

        let mut outcomes = Vec::new();
        for t in 0..4u64 {
            let rec = bot.tick(&store, &mut gateways, t * 2000).unwrap();
            outcomes.push(rec.outcome.label().to_string());
            assert_eq!(rec.counter, t);
        }
        assert_eq!(outcomes, vec!["no_content", "no_content", "executed", "no_content"]);
        assert_eq!(bot.executed().len(), 1);
        assert_eq!(bot.executed()[0].command, b"report-in");
        assert_eq!(bot.executed()[0].counter, 2);
        assert_eq!(bot.counter(), 4);
    }

    #[test]
    fn anchor_before_publication_is_no_content() {
        let mut store = Store::new();
        let master_kp = Keypair::from_seed([5; 32]);
        let (_, plan) = toy_campaign(&[(CommandKind::Direct, b"late")], &[0], &master_kp, 5);
        let mut gateways = fixed_gateways(1, 100.0);
        let mut bot = Bot::spawn(
            &mut store,
            Keypair::from_seed([8; 32]),
            &plan.campaign,
            vec![master_kp.public_bytes()],
            3000,
            BotOptions::default(),
            1,
            0,
        )
        .unwrap();
        let rec = bot.tick(&store, &mut gateways, 0).unwrap();
        assert_eq!(rec.outcome, PollOutcome::NoContent);
        assert!(bot.executed().is_empty());
    }

    #[test]
    fn non_anchor_poll_consumes_the_full_timeout() {
        let mut store = Store::new();
        let master_kp = Keypair::from_seed([5; 32]);
        let (envelopes, plan) = toy_campaign(
            &[(CommandKind::Direct, b"x"), (CommandKind::Direct, b"y")],
            &[3, 5],
            &master_kp,
            5,
        );
        let master = Botmaster::new(&mut store, master_kp.clone(), envelopes, plan.anchor_cids);
        master.publish_command(&mut store, 0, &[]).unwrap();
        let mut gateways = fixed_gateways(1, 100.0);
        let mut bot = Bot::spawn(
            &mut store,
            Keypair::from_seed([8; 32]),
            &plan.campaign,
            vec![master_kp.public_bytes()],
            3000,
            BotOptions::default(),
            1,
            0,
        )
        .unwrap();
        let rec = bot.tick(&store, &mut gateways, 0).unwrap();
        assert_eq!(rec.outcome, PollOutcome::NoContent);
        assert_eq!(rec.latency_ms, 3000.0);
    }

    #[test]
    fn unsigned_content_on_an_anchor_is_ignored() {
        let mut store = Store::new();
        let garbage = b"unsigned blob".to_vec();
        let plan = plan_campaign(
            &[garbage.clone()],
            &[0],
            production_prime(),
            CounterDomain::new(0, 3, 2).unwrap(),
            0,
        )
        .unwrap();
        let uploader = store.register_node(&Keypair::from_seed([4; 32]).public_bytes());
        store.put_object(uploader, &garbage).unwrap();

        let mut gateways = fixed_gateways(1, 100.0);
        let trusted = vec![Keypair::from_seed([5; 32]).public_bytes()];
        let mut bot = Bot::spawn(
            &mut store,
            Keypair::from_seed([8; 32]),
            &plan.campaign,
            trusted,
            3000,
            BotOptions::default(),
            1,
            0,
        )
        .unwrap();
        let rec = bot.tick(&store, &mut gateways, 0).unwrap();
        assert_eq!(rec.outcome, PollOutcome::NoContent);
        assert!(bot.executed().is_empty());
    }

    #[test]
    fn redirect_resolves_the_rendezvous_and_executes() {
        let mut store = Store::new();
        let master_kp = Keypair::from_seed([5; 32]);
        let board_kp = Keypair::from_seed([6; 32]);
        let board_name = sha256_digest(&board_kp.public_bytes());

        let decoy = sign_envelope(CommandKind::Direct, b"decoy", &master_kp).to_bytes();
        let (envelopes, plan) = toy_campaign(
            &[
                (CommandKind::Redirect, board_name.as_bytes().as_slice()),
                (CommandKind::Direct, &decoy),
            ],
            &[1, 4],
            &master_kp,
            5,
        );
        let master = Botmaster::new(&mut store, master_kp.clone(), envelopes, plan.anchor_cids);
        master.publish_command(&mut store, 0, &[]).unwrap();

        // the placeholder gets real content later: a signed direct command
        let real = sign_envelope(CommandKind::Direct, b"phase-two", &master_kp).to_bytes();
        let cid = store.put_object(master.node, &real).unwrap();
        store.publish_name(&board_kp, &board_name, cid).unwrap();

        let mut gateways = fixed_gateways(2, 100.0);
        let mut bot = Bot::spawn(
            &mut store,
            Keypair::from_seed([8; 32]),
            &plan.campaign,
            vec![master_kp.public_bytes()],
            3000,
            BotOptions::default(),
            2,
            0,
        )
        .unwrap();
        bot.tick(&store, &mut gateways, 0).unwrap();
        let rec = bot.tick(&store, &mut gateways, 2000).unwrap();
        assert_eq!(rec.outcome, PollOutcome::Redirected { name: board_name });
        // two fetches in one tick
        assert_eq!(rec.latency_ms, 200.0);
        assert_eq!(bot.executed().len(), 1);
        assert_eq!(bot.executed()[0].command, b"phase-two");
    }

    #[test]
    fn redirect_to_unpublished_name_executes_nothing() {
        let mut store = Store::new();
        let master_kp = Keypair::from_seed([5; 32]);
        let ghost_name = sha256_digest(b"nowhere");
        let (envelopes, plan) = toy_campaign(
            &[(CommandKind::Redirect, ghost_name.as_bytes().as_slice())],
            &[0],
            &master_kp,
            5,
        );
        let master = Botmaster::new(&mut store, master_kp.clone(), envelopes, plan.anchor_cids);
        master.publish_command(&mut store, 0, &[]).unwrap();

        let mut gateways = fixed_gateways(1, 100.0);
        let mut bot = Bot::spawn(
            &mut store,
            Keypair::from_seed([8; 32]),
            &plan.campaign,
            vec![master_kp.public_bytes()],
            3000,
            BotOptions::default(),
            1,
            0,
        )
        .unwrap();
        let rec = bot.tick(&store, &mut gateways, 0).unwrap();
        assert_eq!(rec.outcome, PollOutcome::Redirected { name: ghost_name });
        assert!(bot.executed().is_empty());
    }

    fn board_fixture(store: &mut Store) -> (Botmaster, RendezvousBoard) {
        let master_kp = Keypair::from_seed([5; 32]);
        let master = Botmaster::new(store, master_kp, Vec::new(), Vec::new());
        let board =
            RendezvousBoard::create(store, Keypair::from_seed([6; 32]), master.node).unwrap();
        (master, board)
    }

    fn feedback_bot(store: &mut Store, seed: u8) -> Bot {
        let plan = plan_campaign(
            &[b"x".to_vec()],
            &[0],
            production_prime(),
            CounterDomain::new(0, 3, 2).unwrap(),
            0,
        )
        .unwrap();
        Bot::spawn(
            store,
            Keypair::from_seed([seed; 32]),
            &plan.campaign,
            Vec::new(),
            3000,
            BotOptions::default(),
            1,
            0,
        )
        .unwrap()
    }

    #[test]
    fn feedback_round_trips_through_the_board() {
        let mut store = Store::new();
        let (master, board) = board_fixture(&mut store);
        let mut bots: Vec<Bot> = (40u8..45).map(|s| feedback_bot(&mut store, s)).collect();
        for (i, bot) in bots.iter_mut().enumerate() {
            let info = format!("checkin {i}");
            bot.push_feedback(&mut store, info.as_bytes(), &board, false)
                .unwrap();
        }
        let entries = master.collect_feedback(&store, &board).unwrap();
        assert_eq!(entries.len(), 5);
        for (i, e) in entries.iter().enumerate() {
            assert_eq!(e.content.as_deref(), Some(format!("checkin {i}").as_bytes()));
        }
    }

    #[test]
    fn empty_board_collects_nothing() {
        let mut store = Store::new();
        let (master, board) = board_fixture(&mut store);
        assert!(master.collect_feedback(&store, &board).unwrap().is_empty());
    }

    #[test]
    fn early_unpin_yields_a_not_found_marker() {
        let mut store = Store::new();
        let (master, board) = board_fixture(&mut store);
        let mut bots: Vec<Bot> = (40u8..45).map(|s| feedback_bot(&mut store, s)).collect();
        for (i, bot) in bots.iter_mut().enumerate() {
            let unpin = i == 2;
            bot.push_feedback(&mut store, format!("f{i}").as_bytes(), &board, unpin)
                .unwrap();
        }
        bots[2].after_collection(&mut store).unwrap();
        let entries = master.collect_feedback(&store, &board).unwrap();
        assert_eq!(entries.len(), 5);
        assert_eq!(entries.iter().filter(|e| e.content.is_some()).count(), 4);
        assert!(entries[2].content.is_none());
    }

    #[test]
    fn push_to_unpublished_board_is_unknown_name() {
        let mut store = Store::new();
        let mut bot = feedback_bot(&mut store, 40);
        let board = RendezvousBoard {
            keypair: Keypair::from_seed([7; 32]),
            name: sha256_digest(&Keypair::from_seed([7; 32]).public_bytes()),
        };
        let err = bot.push_feedback(&mut store, b"lost", &board, false);
        assert!(matches!(err, Err(AgentError::Store(StoreError::UnknownName(_)))));
    }

    #[test]
    fn trace_removal_after_collection() {
        let mut store = Store::new();
        let (master, board) = board_fixture(&mut store);
        let mut bot = feedback_bot(&mut store, 40);
        let entry = bot
            .push_feedback(&mut store, b"stolen secrets", &board, true)
            .unwrap();
        let collected = master.collect_feedback(&store, &board).unwrap();
        assert_eq!(collected[0].content.as_deref(), Some(b"stolen secrets".as_slice()));
        bot.after_collection(&mut store).unwrap();
        assert_eq!(store.get_object(&entry), Err(StoreError::NotFound(entry)));
    }

    #[test]
    fn late_join_without_lookback_skips_old_counters() {
        let mut store = Store::new();
        let master_kp = Keypair::from_seed([5; 32]);
        let (_, plan) = toy_campaign(&[(CommandKind::Direct, b"x")], &[0], &master_kp, 100);
        let options = BotOptions { join_time_ms: 20_000, ..Default::default() };
        let bot = Bot::spawn(
            &mut store,
            Keypair::from_seed([8; 32]),
            &plan.campaign,
            Vec::new(),
            3000,
            options,
            1,
            0,
        )
        .unwrap();
        assert_eq!(bot.counter(), 10);

        let with_lookback = BotOptions { join_time_ms: 20_000, lookback: 4, ..Default::default() };
        let bot = Bot::spawn(
            &mut store,
            Keypair::from_seed([9; 32]),
            &plan.campaign,
            Vec::new(),
            3000,
            with_lookback,
            1,
            0,
        )
        .unwrap();
        assert_eq!(bot.counter(), 6);
    }
}
