//! Measurement client for public gateways: sequential fetches of known
//! content at a fixed rate with a timeout, per-gateway timing and drop
//! statistics.
//!
//! The client is deliberately throttled. The default rate is one request
//! per 2 seconds, the floor is 1 second unless explicitly overridden, and
//! the total request count is capped by the plan. It fetches only the CIDs
//! listed in the plan and never publishes anything.
//!
//! The same runner drives either a live HTTP transport or a deterministic
//! shim backed by latency models, so reports from both are directly
//! comparable.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cidcodec::CidV0;
use crate::gatewaysim::LatencyModel;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("rate limit {0} s is below the 1 s floor; pass the explicit override to go faster")]
    RateBelowFloor(f64),
    #[error("plan would issue {requests} requests, above the cap of {cap}")]
    RequestCapExceeded { requests: usize, cap: usize },
    #[error("invalid CID {text:?}: {reason}")]
    BadCid { text: String, reason: String },
    #[error("could not build the HTTP client: {0}")]
    Client(String),
}

fn default_rate_limit_s() -> f64 {
    2.0
}

fn default_timeout_ms() -> u64 {
    3000
}

fn default_max_requests() -> usize {
    2000
}

/// What to fetch, from where, how often, and how fast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePlan {
    pub gateways: Vec<String>,
    pub cids: Vec<String>,
    pub repeats: u32,
    #[serde(default = "default_rate_limit_s")]
    pub rate_limit_s: f64,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_requests")]
    pub max_requests: usize,
}

impl ProbePlan {
    pub fn total_requests(&self) -> usize {
        self.gateways.len() * self.cids.len() * self.repeats as usize
    }

    /// Checks the ethical throttles and that every CID parses before any
    /// network traffic happens.
    pub fn validate(&self, allow_fast_rate: bool) -> Result<(), ProbeError> {
        if self.rate_limit_s < 1.0 && !allow_fast_rate {
            return Err(ProbeError::RateBelowFloor(self.rate_limit_s));
        }
        let requests = self.total_requests();
        if requests > self.max_requests {
            return Err(ProbeError::RequestCapExceeded { requests, cap: self.max_requests });
        }
        for text in &self.cids {
            CidV0::parse(text).map_err(|e| ProbeError::BadCid {
                text: text.clone(),
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }
}

/// One timed request in the report. Dropped requests record the timeout as
/// their latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestSample {
    pub cid: String,
    /// Start of the request, milliseconds since the run began.
    pub start_ms: f64,
    pub latency_ms: f64,
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayReport {
    pub gateway: String,
    pub total_time_ms: f64,
    pub dropped_count: u32,
    pub requests: Vec<RequestSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub plan: ProbePlan,
    pub started_unix_ms: u64,
    pub ended_unix_ms: u64,
    /// False when the run was interrupted and the report is partial.
    pub complete: bool,
    pub per_gateway: Vec<GatewayReport>,
}

/// Outcome of one blocking fetch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FetchResult {
    Latency(f64),
    Dropped,
}

/// Where requests actually go: the live network or the deterministic shim.
pub trait Transport {
    fn fetch(&mut self, gateway: &str, cid: &str, timeout_ms: u64) -> FetchResult;
    fn sleep_ms(&mut self, ms: f64);
    /// Monotonic milliseconds since the transport was created.
    fn now_ms(&self) -> f64;
    /// Wall-clock stamp for the report envelope.
    fn unix_ms(&self) -> u64;
}

fn gateway_url(gateway: &str, cid: &str) -> String {
    let base = gateway.trim_end_matches('/');
    if base.ends_with("/ipfs") {
        format!("{base}/{cid}")
    } else {
        format!("{base}/ipfs/{cid}")
    }
}

/// Blocking HTTP transport. Redirects are followed and counted inside the
/// elapsed time; any error or timeout folds into a drop.
pub struct LiveTransport {
    client: reqwest::blocking::Client,
    origin: Instant,
}

impl LiveTransport {
    pub fn new() -> Result<Self, ProbeError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| ProbeError::Client(e.to_string()))?;
        Ok(Self { client, origin: Instant::now() })
    }
}

impl Transport for LiveTransport {
    fn fetch(&mut self, gateway: &str, cid: &str, timeout_ms: u64) -> FetchResult {
        let url = gateway_url(gateway, cid);
        let started = Instant::now();
        let outcome = self
            .client
            .get(&url)
            .timeout(Duration::from_millis(timeout_ms))
            .send()
            .and_then(|resp| {
                let status = resp.status();
                resp.bytes().map(|body| (status, body))
            });
        let elapsed = started.elapsed().as_secs_f64() * 1000.0;
        match outcome {
            Ok((status, body))
                if status.is_success() && !body.is_empty() && elapsed <= timeout_ms as f64 =>
            {
                FetchResult::Latency(elapsed)
            }
            _ => FetchResult::Dropped,
        }
    }

    fn sleep_ms(&mut self, ms: f64) {
        std::thread::sleep(Duration::from_secs_f64(ms / 1000.0));
    }

    fn now_ms(&self) -> f64 {
        self.origin.elapsed().as_secs_f64() * 1000.0
    }

    fn unix_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

struct ShimGateway {
    model: LatencyModel,
    availability: f64,
    rng: ChaCha8Rng,
}

/// Deterministic in-process transport: latency models instead of sockets,
/// a virtual clock instead of sleeping. Test mode for the probe pipeline.
pub struct ShimTransport {
    clock_ms: f64,
    gateways: BTreeMap<String, ShimGateway>,
    unresolvable: Vec<String>,
    fetch_calls: u64,
}

impl ShimTransport {
    pub fn new(models: &[(String, LatencyModel, f64)], seed: u64) -> Self {
        let gateways = models
            .iter()
            .map(|(name, model, availability)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(name.bytes().map(u64::from).sum());
                (
                    name.clone(),
                    ShimGateway { model: model.clone(), availability: *availability, rng },
                )
            })
            .collect();
        Self { clock_ms: 0.0, gateways, unresolvable: Vec::new(), fetch_calls: 0 }
    }

    pub fn fixed(gateways: &[(&str, f64)]) -> Self {
        let models: Vec<(String, LatencyModel, f64)> = gateways
            .iter()
            .map(|&(name, ms)| (name.to_string(), LatencyModel::Fixed { ms }, 1.0))
            .collect();
        Self::new(&models, 0)
    }

    /// Marks a CID as unresolvable: fetches of it always time out.
    pub fn mark_unresolvable(&mut self, cid: &str) {
        self.unresolvable.push(cid.to_string());
    }

    pub fn fetch_calls(&self) -> u64 {
        self.fetch_calls
    }
}

impl Transport for ShimTransport {
    fn fetch(&mut self, gateway: &str, cid: &str, timeout_ms: u64) -> FetchResult {
        self.fetch_calls += 1;
        let timeout = timeout_ms as f64;
        let Some(gw) = self.gateways.get_mut(gateway) else {
            self.clock_ms += timeout;
            return FetchResult::Dropped;
        };
        let latency = match gw.model {
            LatencyModel::Fixed { ms } => ms,
            LatencyModel::Lognormal { median_ms, sigma } => {
                LogNormal::new(median_ms.ln(), sigma)
                    .expect("sigma > 0")
                    .sample(&mut gw.rng)
            }
        };
        let up = gw.rng.gen::<f64>() < gw.availability;
        if !up || latency > timeout || self.unresolvable.iter().any(|c| c == cid) {
            self.clock_ms += timeout;
            return FetchResult::Dropped;
        }
        self.clock_ms += latency;
        FetchResult::Latency(latency)
    }

    fn sleep_ms(&mut self, ms: f64) {
        self.clock_ms += ms;
    }

    fn now_ms(&self) -> f64 {
        self.clock_ms
    }

    fn unix_ms(&self) -> u64 {
        // fixed epoch keeps shim reports byte-identical across runs
        self.clock_ms as u64
    }
}

/// One validated fetch: the CID is checked before any network call.
pub fn probe_once(
    transport: &mut dyn Transport,
    gateway: &str,
    cid: &str,
    timeout_ms: u64,
) -> Result<FetchResult, ProbeError> {
    CidV0::parse(cid).map_err(|e| ProbeError::BadCid {
        text: cid.to_string(),
        reason: e.to_string(),
    })?;
    Ok(transport.fetch(gateway, cid, timeout_ms))
}

/// Runs the whole plan sequentially per gateway, honoring the rate limit
/// between request starts. An interrupt (the cancel flag) aborts cleanly
/// with a partial report marked incomplete.
pub fn run_plan(
    plan: &ProbePlan,
    transport: &mut dyn Transport,
    allow_fast_rate: bool,
    cancel: &AtomicBool,
) -> Result<ProbeReport, ProbeError> {
    plan.validate(allow_fast_rate)?;
    let started_unix_ms = transport.unix_ms();
    let run_origin = transport.now_ms();
    let rate_ms = plan.rate_limit_s * 1000.0;
    let mut last_start: Option<f64> = None;
    let mut complete = true;
    let mut per_gateway = Vec::with_capacity(plan.gateways.len());

    'outer: for gateway in &plan.gateways {
        let mut report = GatewayReport {
            gateway: gateway.clone(),
            total_time_ms: 0.0,
            dropped_count: 0,
            requests: Vec::new(),
        };
        for cid in &plan.cids {
            for _ in 0..plan.repeats {
                if cancel.load(Ordering::SeqCst) {
                    complete = false;
                    per_gateway.push(report);
                    break 'outer;
                }
                if let Some(last) = last_start {
                    let wait = rate_ms - (transport.now_ms() - last);
                    if wait > 0.0 {
                        transport.sleep_ms(wait);
                    }
                }
                let start_ms = transport.now_ms() - run_origin;
                last_start = Some(transport.now_ms());
                let (latency_ms, dropped) =
                    match transport.fetch(gateway, cid, plan.timeout_ms) {
                        FetchResult::Latency(l) => (l, false),
                        FetchResult::Dropped => (plan.timeout_ms as f64, true),
                    };
                report.total_time_ms += latency_ms;
                report.dropped_count += u32::from(dropped);
                report.requests.push(RequestSample {
                    cid: cid.clone(),
                    start_ms,
                    latency_ms,
                    dropped,
                });
            }
        }
        per_gateway.push(report);
    }

    Ok(ProbeReport {
        plan: plan.clone(),
        started_unix_ms,
        ended_unix_ms: transport.unix_ms(),
        complete,
        per_gateway,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CID_A: &str = "Qmc8N5wtMkvMySqxu4Agy2SGvL2zxYGf4rWmHvMASoUQv6";
    const CID_B: &str = "QmNLei78zWmzUdbeRB3CiUfAizWUrbeeZh5K1rhAQKCh51";

    fn plan(gateways: &[&str], cids: &[&str], repeats: u32) -> ProbePlan {
        ProbePlan {
            gateways: gateways.iter().map(|s| s.to_string()).collect(),
            cids: cids.iter().map(|s| s.to_string()).collect(),
            repeats,
            rate_limit_s: 2.0,
            timeout_ms: 3000,
            max_requests: 2000,
        }
    }

    #[test]
    fn twenty_fixed_requests_total_two_seconds() {
        let p = plan(&["https://shim.example"], &[CID_A, CID_B], 10);
        let mut shim = ShimTransport::fixed(&[("https://shim.example", 100.0)]);
        let report = run_plan(&p, &mut shim, false, &AtomicBool::new(false)).unwrap();
        assert_eq!(report.per_gateway.len(), 1);
        let gw = &report.per_gateway[0];
        assert_eq!(gw.requests.len(), 20);
        assert_eq!(gw.dropped_count, 0);
        assert!((gw.total_time_ms - 2000.0).abs() < 1e-9, "{}", gw.total_time_ms);
        assert!(report.complete);
    }

    #[test]
    fn shim_runs_are_byte_identical() {
        let p = plan(&["https://shim.example"], &[CID_A], 5);
        let run = || {
            let mut shim = ShimTransport::new(
                &[(
                    "https://shim.example".into(),
                    LatencyModel::Lognormal { median_ms: 300.0, sigma: 0.6 },
                    1.0,
                )],
                77,
            );
            let report = run_plan(&p, &mut shim, false, &AtomicBool::new(false)).unwrap();
            serde_json::to_string_pretty(&report).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn malformed_cid_is_rejected_before_any_fetch() {
        let p = plan(&["https://shim.example"], &["Qm0bad"], 1);
        let mut shim = ShimTransport::fixed(&[("https://shim.example", 100.0)]);
        let err = run_plan(&p, &mut shim, false, &AtomicBool::new(false));
        assert!(matches!(err, Err(ProbeError::BadCid { .. })));
        assert_eq!(shim.fetch_calls(), 0);

        let err = probe_once(&mut shim, "https://shim.example", "not-a-cid", 1000);
        assert!(matches!(err, Err(ProbeError::BadCid { .. })));
        assert_eq!(shim.fetch_calls(), 0);
    }

    #[test]
    fn rate_floor_requires_explicit_override() {
        let mut p = plan(&["https://shim.example"], &[CID_A], 1);
        p.rate_limit_s = 0.5;
        assert!(matches!(
            p.validate(false),
            Err(ProbeError::RateBelowFloor(_))
        ));
        assert!(p.validate(true).is_ok());
        // between floor and default needs no override
        p.rate_limit_s = 1.5;
        assert!(p.validate(false).is_ok());
    }

    #[test]
    fn request_cap_is_enforced() {
        let mut p = plan(&["a", "b"], &[CID_A], 1001);
        p.cids = vec![CID_A.to_string()];
        assert!(matches!(
            p.validate(false),
            Err(ProbeError::RequestCapExceeded { requests: 2002, cap: 2000 })
        ));
    }

    #[test]
    fn rate_discipline_is_visible_in_the_report() {
        let p = plan(&["https://shim.example"], &[CID_A], 5);
        let mut shim = ShimTransport::fixed(&[("https://shim.example", 100.0)]);
        let report = run_plan(&p, &mut shim, false, &AtomicBool::new(false)).unwrap();
        let starts: Vec<f64> = report.per_gateway[0]
            .requests
            .iter()
            .map(|r| r.start_ms)
            .collect();
        for pair in starts.windows(2) {
            assert!(pair[1] - pair[0] >= 2000.0 - 1e-9, "gap {:?}", pair);
        }
    }

    #[test]
    fn dropped_requests_record_the_timeout() {
        let p = plan(&["https://slow.example"], &[CID_A], 3);
        let mut shim = ShimTransport::fixed(&[("https://slow.example", 9000.0)]);
        let report = run_plan(&p, &mut shim, false, &AtomicBool::new(false)).unwrap();
        let gw = &report.per_gateway[0];
        assert_eq!(gw.dropped_count, 3);
        assert!(gw.requests.iter().all(|r| r.dropped && r.latency_ms == 3000.0));
    }

    #[test]
    fn unresolvable_cid_times_out_in_shim() {
        let p = plan(&["https://shim.example"], &[CID_A], 1);
        let mut shim = ShimTransport::fixed(&[("https://shim.example", 100.0)]);
        shim.mark_unresolvable(CID_A);
        let report = run_plan(&p, &mut shim, false, &AtomicBool::new(false)).unwrap();
        assert_eq!(report.per_gateway[0].dropped_count, 1);
    }

    #[test]
    fn cancel_flag_yields_partial_incomplete_report() {
        let p = plan(&["https://shim.example"], &[CID_A], 5);
        let mut shim = ShimTransport::fixed(&[("https://shim.example", 100.0)]);
        let cancel = AtomicBool::new(true);
        let report = run_plan(&p, &mut shim, false, &cancel).unwrap();
        assert!(!report.complete);
        assert!(report.per_gateway[0].requests.is_empty());
    }

    #[test]
    fn empty_plan_yields_empty_report() {
        let p = plan(&["https://shim.example"], &[], 50);
        let mut shim = ShimTransport::fixed(&[("https://shim.example", 100.0)]);
        let report = run_plan(&p, &mut shim, false, &AtomicBool::new(false)).unwrap();
        assert_eq!(report.per_gateway.len(), 1);
        assert!(report.per_gateway[0].requests.is_empty());
        assert!(report.complete);
    }

    #[test]
    fn gateway_urls_join_cleanly() {
        assert_eq!(
            gateway_url("https://ipfs.io", "QmX"),
            "https://ipfs.io/ipfs/QmX"
        );
        assert_eq!(
            gateway_url("https://ipfs.io/ipfs/", "QmX"),
            "https://ipfs.io/ipfs/QmX"
        );
        assert_eq!(
            gateway_url("https://ipfs.io/ipfs", "QmX"),
            "https://ipfs.io/ipfs/QmX"
        );
    }
}
