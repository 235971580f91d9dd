//! Experiment harness: campaign planning to disk, counter sweeps, full
//! agent/gateway/store simulation runs, the availability and gateway-matrix
//! experiments, and machine-readable reports.
//!
//! Every report is a pure function of the config files and the master
//! seed; running the same config twice must produce byte-identical output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{sign_envelope, Bot, BotOptions, Botmaster, CommandKind, PollOutcome};
use crate::cidcodec::CidV0;
use crate::gatewaysim::{build_profiles, GatewayProfile, GatewaySpec, SimClock};
use crate::keys::Keypair;
use crate::rigacore::{plan_campaign, Campaign, CampaignPlan, CounterDomain};
use crate::storesim::{content_cid, Store};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }
}

/// Derives a deterministic keypair for a simulation role.
pub fn derive_keypair(master_seed: u64, role: &str, index: u64) -> Keypair {
    let mut hasher = Sha256::new();
    hasher.update(b"riga.key.v1");
    hasher.update(master_seed.to_be_bytes());
    hasher.update(role.as_bytes());
    hasher.update(index.to_be_bytes());
    Keypair::from_seed(hasher.finalize().into())
}

fn substream(master_seed: u64, label: &str, index: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut hasher = Sha256::new();
    hasher.update(b"riga.stream.v1");
    hasher.update(master_seed.to_be_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_be_bytes());
    rand_chacha::ChaCha8Rng::from_seed(hasher.finalize().into())
}

// ---------------------------------------------------------------------------
// configuration

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    None,
    Availability,
    GatewayMatrix,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BotOverride {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_seeder: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookback: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub join_time_ms: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BotSetup {
    pub count: usize,
    #[serde(default)]
    pub defaults: BotOptions,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<BotOverride>,
}

impl BotSetup {
    pub fn options_for(&self, index: usize) -> BotOptions {
        let mut opts = self.defaults;
        for o in &self.overrides {
            if o.index == index {
                if let Some(v) = o.is_seeder {
                    opts.is_seeder = v;
                }
                if let Some(v) = o.lookback {
                    opts.lookback = v;
                }
                if let Some(v) = o.join_time_ms {
                    opts.join_time_ms = v;
                }
            }
        }
        opts
    }
}

/// When each planned anchor gets published into the store.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PublicationSpec {
    pub anchor: usize,
    pub at_ms: u64,
}

fn default_files() -> usize {
    1000
}
fn default_file_bytes() -> usize {
    4096
}
fn default_exp_timeout() -> u64 {
    5000
}
fn default_fastest() -> usize {
    4
}
fn default_horizon() -> u64 {
    60_000
}
fn default_matrix_cids() -> usize {
    20
}
fn default_matrix_repeats() -> u32 {
    50
}
fn default_matrix_timeouts() -> Vec<u64> {
    vec![5000, 3000]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentParams {
    #[serde(default = "default_files")]
    pub files: usize,
    #[serde(default = "default_file_bytes")]
    pub file_bytes: usize,
    #[serde(default = "default_exp_timeout")]
    pub timeout_ms: u64,
    /// The availability fetcher uses this many of the fastest configured
    /// gateways, ranked by model median.
    #[serde(default = "default_fastest")]
    pub fastest_gateways: usize,
    /// Publication instants are drawn uniformly from [0, horizon).
    #[serde(default = "default_horizon")]
    pub publish_horizon_ms: u64,
    #[serde(default = "default_matrix_cids")]
    pub matrix_cids: usize,
    #[serde(default = "default_matrix_repeats")]
    pub matrix_repeats: u32,
    #[serde(default = "default_matrix_timeouts")]
    pub matrix_timeouts_ms: Vec<u64>,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

fn default_timeout_ms() -> u64 {
    3000
}

/// Top-level simulation config. Paths are resolved relative to the
/// working directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub master_seed: u64,
    pub bots: BotSetup,
    /// Campaign file written by planning; required for campaign runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub campaign: Option<String>,
    /// Command payload files, aligned with the campaign anchors by index.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub commands: Vec<String>,
    /// Seed for the signing keypair that wraps commands into envelopes.
    /// Omitted: command files are published as raw bytes (which bots will
    /// refuse to execute).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_seed: Option<u64>,
    /// Gateway config file; omitted means the bundled default profiles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gateways: Option<String>,
    pub duration_ms: u64,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub require_all_anchors: bool,
    /// Empty means every anchor is published at t = 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub publications: Vec<PublicationSpec>,
    #[serde(default)]
    pub experiment_params: ExperimentParams,
}

impl SimConfig {
    /// Parses a config file; serde's line/column diagnostics surface in
    /// the error message.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))
    }
}

pub fn load_campaign(path: &Path) -> Result<Campaign, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))
}

pub fn load_gateway_specs(path: &Path) -> Result<Vec<GatewaySpec>, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// campaign planning and counter sweeps

/// Plans a campaign from payload files and writes the campaign JSON.
/// With an envelope seed, payloads are wrapped in signed command
/// envelopes before hashing; otherwise the raw bytes are anchored.
pub struct PlanRequest {
    pub payload_paths: Vec<String>,
    pub counters: Vec<u64>,
    pub prime: num_bigint::BigUint,
    pub domain: CounterDomain,
    pub shuffle_seed: u64,
    pub envelope_seed: Option<u64>,
}

pub fn cmd_plan(req: &PlanRequest) -> Result<CampaignPlan, HarnessError> {
    let mut payloads = Vec::with_capacity(req.payload_paths.len());
    for p in &req.payload_paths {
        payloads.push(
            fs::read(p).map_err(|e| HarnessError::config(format!("{p}: {e}")))?,
        );
    }
    let payloads = match req.envelope_seed {
        Some(seed) => {
            let kp = derive_keypair(seed, "botmaster", 0);
            payloads
                .iter()
                .map(|p| sign_envelope(CommandKind::Direct, p, &kp).to_bytes())
                .collect()
        }
        None => payloads,
    };
    plan_campaign(
        &payloads,
        &req.counters,
        &req.prime,
        req.domain,
        req.shuffle_seed,
    )
    .map_err(|e| HarnessError::config(e.to_string()))
}

/// Stable "counter<TAB>cid" lines for a counter range.
pub fn cmd_gen(campaign: &Campaign, from: u64, to: u64) -> Result<Vec<String>, HarnessError> {
    if from > to || !campaign.domain.contains(from) || !campaign.domain.contains(to) {
        return Err(HarnessError::config(format!(
            "range [{from}, {to}] is not within the domain [{}, {}]",
            campaign.domain.start, campaign.domain.upper
        )));
    }
    let prng = campaign
        .build_prng()
        .map_err(|e| HarnessError::config(e.to_string()))?;
    Ok((from..=to)
        .map(|c| format!("{c}\t{}", prng.uri_at(c)))
        .collect())
}

// ---------------------------------------------------------------------------
// full campaign simulation

/// One line of the execution trace; serialized as JSON lines for export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceLine {
    pub sim_time_ms: u64,
    pub bot_id: String,
    pub counter: u64,
    pub gateway: String,
    pub outcome: String,
    pub latency_ms: f64,
    /// Gateway requests this poll issued (2 for a followed redirect).
    /// Not part of the JSONL export schema.
    #[serde(skip)]
    pub requests: u64,
}

impl TraceLine {
    /// The export form: exactly the six trace fields.
    pub fn to_jsonl(&self) -> String {
        serde_json::json!({
            "sim_time_ms": self.sim_time_ms,
            "bot_id": self.bot_id,
            "counter": self.counter,
            "gateway": self.gateway,
            "outcome": self.outcome,
            "latency_ms": self.latency_ms,
        })
        .to_string()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatewayStats {
    pub name: String,
    pub requests_total: u64,
    pub fetched: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BotAnchorOutcome {
    pub bot_id: String,
    pub reached: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at_ms: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorReport {
    pub index: usize,
    pub counter: u64,
    pub cid: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_at_ms: Option<u64>,
    pub per_bot: Vec<BotAnchorOutcome>,
    pub reached_by_all: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub bots: usize,
    pub ticks: u64,
    pub executions: u64,
    pub redirect_hops: u64,
    /// Fraction of polls that yielded usable content; by construction the
    /// overwhelming majority of a sweep are misses.
    pub resolve_fraction: f64,
    pub all_anchors_reached: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub master_seed: u64,
    pub duration_ms: u64,
    pub timeout_ms: u64,
    pub traces: Vec<TraceLine>,
    pub gateway_stats: Vec<GatewayStats>,
    pub anchors: Vec<AnchorReport>,
    pub summary: RunSummary,
}

impl RunReport {
    /// Internal-consistency checks; a failure here is the exit-code-3
    /// condition.
    pub fn verify_invariants(&self) -> Result<(), HarnessError> {
        for g in &self.gateway_stats {
            if g.requests_total != g.fetched + g.dropped {
                return Err(HarnessError::Invariant(format!(
                    "gateway {}: {} requests != {} fetched + {} dropped",
                    g.name, g.requests_total, g.fetched, g.dropped
                )));
            }
        }
        let requests: u64 = self.gateway_stats.iter().map(|g| g.requests_total).sum();
        let expected: u64 = self.traces.iter().map(|t| t.requests).sum();
        if requests != expected {
            return Err(HarnessError::Invariant(format!(
                "{requests} gateway requests but traces account for {expected}"
            )));
        }
        if self.summary.ticks != self.traces.len() as u64 {
            return Err(HarnessError::Invariant(format!(
                "summary says {} ticks, trace has {}",
                self.summary.ticks,
                self.traces.len()
            )));
        }
        let mut last_counter: std::collections::BTreeMap<&str, u64> = Default::default();
        let mut last_time = 0u64;
        for t in &self.traces {
            if t.sim_time_ms < last_time {
                return Err(HarnessError::Invariant("trace time went backwards".into()));
            }
            last_time = t.sim_time_ms;
            if let Some(&prev) = last_counter.get(t.bot_id.as_str()) {
                if t.counter <= prev {
                    return Err(HarnessError::Invariant(format!(
                        "bot {} counter did not increase: {} after {prev}",
                        t.bot_id, t.counter
                    )));
                }
            }
            last_counter.insert(&t.bot_id, t.counter);
        }
        Ok(())
    }
}

enum SimEvent {
    Publish { anchor: usize },
    BotTick { bot: usize },
}

/// Everything a finished run leaves behind: the report and the final
/// store state for forensics dumps.
pub struct SimOutcome {
    pub report: RunReport,
    pub store: Store,
}

/// Runs the full agent/gateway/store simulation described by the config.
pub fn run_simulation(config: &SimConfig, master_seed: u64) -> Result<SimOutcome, HarnessError> {
    if config.bots.count == 0 {
        return Err(HarnessError::config("at least one bot is required"));
    }
    let campaign_path = config
        .campaign
        .as_ref()
        .ok_or_else(|| HarnessError::config("campaign file is required for a simulation run"))?;
    let campaign = load_campaign(Path::new(campaign_path))?;
    let specs = match &config.gateways {
        Some(path) => load_gateway_specs(Path::new(path))?,
        None => crate::gatewaysim::table2_default_specs(),
    };
    if specs.is_empty() {
        return Err(HarnessError::config("gateway list is empty"));
    }

    let tick_ms = campaign.domain.tick_ms();
    let needed = (campaign.max_anchor_counter() - campaign.domain.start) * tick_ms;
    if config.duration_ms < needed {
        return Err(HarnessError::config(format!(
            "duration {} ms cannot reach the largest anchor counter {} (needs >= {} ms)",
            config.duration_ms,
            campaign.max_anchor_counter(),
            needed
        )));
    }

    if config.commands.len() != campaign.anchors.len() {
        return Err(HarnessError::config(format!(
            "{} command files for {} campaign anchors",
            config.commands.len(),
            campaign.anchors.len()
        )));
    }
    let mut envelope_bytes = Vec::with_capacity(config.commands.len());
    for p in &config.commands {
        envelope_bytes
            .push(fs::read(p).map_err(|e| HarnessError::config(format!("{p}: {e}")))?);
    }
    let master_kp = derive_keypair(config.envelope_seed.unwrap_or(master_seed), "botmaster", 0);
    if config.envelope_seed.is_some() {
        envelope_bytes = envelope_bytes
            .iter()
            .map(|p| sign_envelope(CommandKind::Direct, p, &master_kp).to_bytes())
            .collect();
    }
    for (i, (bytes, anchor)) in envelope_bytes.iter().zip(&campaign.anchors).enumerate() {
        if content_cid(bytes) != anchor.cid {
            return Err(HarnessError::config(format!(
                "command {i} does not hash to the planned anchor {}; \
                 was the campaign planned over these payloads and this envelope seed?",
                anchor.cid
            )));
        }
    }

    for p in &config.publications {
        if p.anchor >= campaign.anchors.len() {
            return Err(HarnessError::config(format!(
                "publication references anchor {} of {}",
                p.anchor,
                campaign.anchors.len()
            )));
        }
    }

    let mut store = Store::new();
    let mut profiles = build_profiles(&specs, master_seed);
    let anchor_cids: Vec<CidV0> = campaign.anchors.iter().map(|a| a.cid.clone()).collect();
    let botmaster = Botmaster::new(&mut store, master_kp, envelope_bytes, anchor_cids);
    let trusted = vec![botmaster.public_key()];

    let mut bots = Vec::with_capacity(config.bots.count);
    let mut seeders = Vec::new();
    for i in 0..config.bots.count {
        let options = config.bots.options_for(i);
        let bot = Bot::spawn(
            &mut store,
            derive_keypair(master_seed, "bot", i as u64),
            &campaign,
            trusted.clone(),
            config.timeout_ms,
            options,
            profiles.len(),
            i,
        )
        .map_err(|e| HarnessError::config(e.to_string()))?;
        if options.is_seeder {
            seeders.push(bot.id);
        }
        bots.push(bot);
    }

    let mut clock: SimClock<SimEvent> = SimClock::new();
    let mut published_at: Vec<Option<u64>> = vec![None; campaign.anchors.len()];
    if config.publications.is_empty() {
        for anchor in 0..campaign.anchors.len() {
            clock.schedule(0, SimEvent::Publish { anchor });
        }
    } else {
        for p in &config.publications {
            clock.schedule(p.at_ms, SimEvent::Publish { anchor: p.anchor });
        }
    }
    for (i, bot) in bots.iter().enumerate() {
        if bot.active() {
            clock.schedule(bot.options().join_time_ms, SimEvent::BotTick { bot: i });
        }
    }

    let mut traces: Vec<TraceLine> = Vec::new();
    while let Some((now, event)) = clock.next_event_before(config.duration_ms) {
        match event {
            SimEvent::Publish { anchor } => {
                botmaster
                    .publish_command(&mut store, anchor, &seeders)
                    .map_err(|e| HarnessError::config(e.to_string()))?;
                published_at[anchor].get_or_insert(now);
            }
            SimEvent::BotTick { bot } => {
                if !bots[bot].active() {
                    continue;
                }
                let rec = bots[bot]
                    .tick(&store, &mut profiles, now)
                    .map_err(|e| HarnessError::config(e.to_string()))?;
                let requests = match rec.outcome {
                    PollOutcome::Redirected { ref name } => {
                        if store.resolve_name(name).is_ok() {
                            2
                        } else {
                            1
                        }
                    }
                    _ => 1,
                };
                traces.push(TraceLine {
                    sim_time_ms: rec.sim_time_ms,
                    bot_id: rec.bot_id.to_text(),
                    counter: rec.counter,
                    gateway: rec.gateway,
                    outcome: rec.outcome.label().to_string(),
                    latency_ms: rec.latency_ms,
                    requests,
                });
                if bots[bot].active() {
                    clock.schedule(now + tick_ms, SimEvent::BotTick { bot });
                }
            }
        }
    }

    // safety: nothing in any execution log may deviate from the planned,
    // verified command set
    let mut allowed: Vec<Vec<u8>> = Vec::new();
    for bytes in &botmaster.envelopes {
        if let Some(env) = crate::agents::CommandEnvelope::parse_verified(bytes, &trusted) {
            if env.kind == CommandKind::Direct {
                allowed.push(env.payload);
            }
        }
    }
    for bot in &bots {
        for rec in bot.executed() {
            if !allowed.iter().any(|a| a == &rec.command) {
                return Err(HarnessError::Invariant(format!(
                    "bot {} executed a command outside the verified plan at counter {}",
                    bot.id, rec.counter
                )));
            }
        }
    }

    let gateway_stats: Vec<GatewayStats> = profiles
        .iter()
        .map(|g| GatewayStats {
            name: g.name().to_string(),
            requests_total: g.requests_total(),
            fetched: g.fetched_total(),
            dropped: g.dropped_total(),
        })
        .collect();

    let anchors: Vec<AnchorReport> = campaign
        .anchors
        .iter()
        .enumerate()
        .map(|(index, a)| {
            let per_bot: Vec<BotAnchorOutcome> = bots
                .iter()
                .map(|b| {
                    let hit = b.executed().iter().find(|r| r.counter == a.counter);
                    BotAnchorOutcome {
                        bot_id: b.id.to_text(),
                        reached: hit.is_some(),
                        at_ms: hit.map(|r| r.sim_time_ms),
                    }
                })
                .collect();
            let reached_by_all = per_bot.iter().all(|o| o.reached);
            AnchorReport {
                index,
                counter: a.counter,
                cid: a.cid.text().to_string(),
                published_at_ms: published_at[index],
                per_bot,
                reached_by_all,
            }
        })
        .collect();

    let executions: u64 = bots.iter().map(|b| b.executed().len() as u64).sum();
    let resolved = traces.iter().filter(|t| t.outcome != "no_content").count();
    let summary = RunSummary {
        bots: bots.len(),
        ticks: traces.len() as u64,
        executions,
        redirect_hops: traces
            .iter()
            .filter(|t| t.outcome == "redirected")
            .map(|t| t.requests - 1)
            .sum(),
        resolve_fraction: if traces.is_empty() {
            0.0
        } else {
            resolved as f64 / traces.len() as f64
        },
        all_anchors_reached: anchors.iter().all(|a| a.reached_by_all),
    };

    let report = RunReport {
        master_seed,
        duration_ms: config.duration_ms,
        timeout_ms: config.timeout_ms,
        traces,
        gateway_stats,
        anchors,
        summary,
    };
    report.verify_invariants()?;
    Ok(SimOutcome { report, store })
}

// ---------------------------------------------------------------------------
// availability experiment

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AvailabilityReport {
    pub master_seed: u64,
    pub files: usize,
    pub file_bytes: usize,
    pub timeout_ms: u64,
    pub gateways_used: Vec<String>,
    pub mean_ms: f64,
    pub std_ms: f64,
    /// Raw publish-to-first-fetch deltas, one per file, plot-ready.
    pub samples: Vec<f64>,
}

pub fn mean_and_std(samples: &[f64]) -> (f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Publishes N files at random simulated instants and measures the delay
/// until each is first fetched through the fastest configured gateways,
/// shifting randomly to another gateway after each failure.
pub fn run_availability(
    params: &ExperimentParams,
    specs: &[GatewaySpec],
    master_seed: u64,
) -> Result<AvailabilityReport, HarnessError> {
    if specs.is_empty() {
        return Err(HarnessError::config("gateway list is empty"));
    }
    let mut ranked: Vec<GatewaySpec> = specs.to_vec();
    ranked.sort_by(|a, b| {
        a.model
            .median_ms()
            .partial_cmp(&b.model.median_ms())
            .expect("medians are finite")
            .then_with(|| a.name.cmp(&b.name))
    });
    ranked.truncate(params.fastest_gateways.max(1));
    let mut profiles = build_profiles(&ranked, master_seed);
    let k = profiles.len();

    let mut store = Store::new();
    let publisher_kp = derive_keypair(master_seed, "publisher", 0);
    let publisher = store.register_node(&publisher_kp.public_bytes());

    use rand::Rng;
    let mut rng = substream(master_seed, "availability", 0);
    let mut publish_times: Vec<(u64, usize)> = (0..params.files)
        .map(|i| (rng.gen_range(0..params.publish_horizon_ms.max(1)), i))
        .collect();
    publish_times.sort_unstable();

    let mut samples = vec![0.0f64; params.files];
    for (t_pub, file_idx) in publish_times {
        let mut content = vec![0u8; params.file_bytes];
        substream(master_seed, "file", file_idx as u64).fill(content.as_mut_slice());
        let cid = store
            .put_object(publisher, &content)
            .map_err(|e| HarnessError::config(e.to_string()))?;

        let mut elapsed = 0.0f64;
        let mut gw = rng.gen_range(0..k);
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            if attempts > 1000 {
                return Err(HarnessError::Invariant(format!(
                    "file {file_idx} was never delivered after 1000 attempts"
                )));
            }
            let out = crate::gatewaysim::request(
                &mut profiles[gw],
                &store,
                &cid,
                params.timeout_ms,
                t_pub + elapsed as u64,
            );
            elapsed += out.elapsed_ms();
            if !out.is_dropped() {
                break;
            }
            // shift to a different gateway than the one that just failed
            if k > 1 {
                let shift = rng.gen_range(1..k);
                gw = (gw + shift) % k;
            }
        }
        samples[file_idx] = elapsed;
    }

    let (mean_ms, std_ms) = mean_and_std(&samples);
    Ok(AvailabilityReport {
        master_seed,
        files: params.files,
        file_bytes: params.file_bytes,
        timeout_ms: params.timeout_ms,
        gateways_used: profiles.iter().map(|g| g.name().to_string()).collect(),
        mean_ms,
        std_ms,
        samples,
    })
}

// ---------------------------------------------------------------------------
// gateway matrix experiment

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixCell {
    pub timeout_ms: u64,
    pub requests: u32,
    pub total_time_ms: f64,
    pub mean_ms_per_request: f64,
    pub dropped: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixRow {
    pub gateway: String,
    pub cells: Vec<MatrixCell>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixReport {
    pub master_seed: u64,
    pub cids: usize,
    pub repeats: u32,
    pub timeouts_ms: Vec<u64>,
    pub rows: Vec<MatrixRow>,
}

impl MatrixReport {
    /// Tab-separated table, one gateway per row, one (time, dropped)
    /// column pair per timeout. Time is mean ms per request.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("gateway");
        for t in &self.timeouts_ms {
            out.push_str(&format!("\ttime_ms@{t}\tdropped@{t}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.gateway);
            for cell in &row.cells {
                out.push_str(&format!(
                    "\t{:.3}\t{}",
                    cell.mean_ms_per_request, cell.dropped
                ));
            }
            out.push('\n');
        }
        out
    }
}

/// Replays the stored-article request protocol against every configured
/// gateway at each timeout: `cids x repeats` sequential fetches, identical
/// latency draws across timeout settings for comparability.
pub fn run_gateway_matrix(
    params: &ExperimentParams,
    specs: &[GatewaySpec],
    master_seed: u64,
) -> Result<MatrixReport, HarnessError> {
    if specs.is_empty() {
        return Err(HarnessError::config("gateway list is empty"));
    }
    let mut store = Store::new();
    let publisher_kp = derive_keypair(master_seed, "publisher", 0);
    let publisher = store.register_node(&publisher_kp.public_bytes());
    use rand::Rng;
    let mut cids = Vec::with_capacity(params.matrix_cids);
    for i in 0..params.matrix_cids {
        let mut content = vec![0u8; params.file_bytes];
        substream(master_seed, "article", i as u64).fill(content.as_mut_slice());
        cids.push(
            store
                .put_object(publisher, &content)
                .map_err(|e| HarnessError::config(e.to_string()))?,
        );
    }

    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut cells = Vec::with_capacity(params.matrix_timeouts_ms.len());
        for &timeout_ms in &params.matrix_timeouts_ms {
            // fresh profile per cell: both timeout columns see the same draws
            let mut profile = GatewayProfile::new(spec.clone(), master_seed);
            let mut now_ms = 0u64;
            let mut total = 0.0f64;
            let mut dropped = 0u32;
            let mut requests = 0u32;
            for cid in &cids {
                for _ in 0..params.matrix_repeats {
                    let out =
                        crate::gatewaysim::request(&mut profile, &store, cid, timeout_ms, now_ms);
                    total += out.elapsed_ms();
                    dropped += u32::from(out.is_dropped());
                    requests += 1;
                    now_ms += out.elapsed_ms() as u64;
                }
            }
            cells.push(MatrixCell {
                timeout_ms,
                requests,
                total_time_ms: total,
                mean_ms_per_request: if requests == 0 { 0.0 } else { total / requests as f64 },
                dropped,
            });
        }
        rows.push(MatrixRow { gateway: spec.name.clone(), cells });
    }

    Ok(MatrixReport {
        master_seed,
        cids: params.matrix_cids,
        repeats: params.matrix_repeats,
        timeouts_ms: params.matrix_timeouts_ms.clone(),
        rows,
    })
}
