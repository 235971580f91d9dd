//! The resource-identifier generator: a skewed PRNG built by polynomial
//! interpolation over GF(p) so that chosen counter values map to chosen
//! 256-bit digests, plus the counter domain, campaign planning, and the
//! mutable-name variant that sweeps the domain in a seeded random order.
//!
//! The generator is deliberately one-way at the interface: there is no
//! operation mapping an emitted address back to a counter, and none is
//! planned. Hardening transformations of the polynomial are out of scope;
//! a post-processing hook exists and ships as the identity.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::Num;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cidcodec::{cid_from_value, CidV0, CodecError, Digest256};
use crate::modfield::{is_probable_prime, lagrange_interpolate, FieldError, FieldPoly, PrimeField, PRIMALITY_ROUNDS};
use crate::storesim::content_cid;

/// Default number of counters a campaign sweeps: 2^20.
pub const DEFAULT_DOMAIN_UPPER: u64 = 1 << 20;
/// Default simulated seconds between counter ticks; the rate gateways were
/// observed to tolerate without throttling.
pub const DEFAULT_TICK_SECONDS: u64 = 2;
/// Default upper bound on anchors per campaign.
pub const MAX_ANCHORS: usize = 64;
/// Name of the deterministic bit generator behind seeded permutations.
pub const SHUFFLE_RNG_CHACHA8_V1: &str = "chacha8/v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RigaError {
    #[error("duplicate counter {0} in anchor set")]
    DuplicateCounter(u64),
    #[error("prime does not exceed the digest anchored at counter {counter}")]
    PrimeTooSmall { counter: u64 },
    #[error("anchor counter {counter} is outside the domain [{start}, {upper}]")]
    AnchorOutOfDomain { counter: u64, start: u64, upper: u64 },
    #[error("anchor set must hold between 1 and {max} anchors, got {count}")]
    AnchorCount { count: usize, max: usize },
    #[error("{payloads} payloads cannot be paired with {counters} counters")]
    PayloadCounterMismatch { payloads: usize, counters: usize },
    #[error("counter domain start {start} exceeds upper {upper}")]
    InvalidDomain { start: u64, upper: u64 },
    #[error("tick interval must be positive")]
    ZeroTick,
    #[error("unknown shuffle rng {0:?}")]
    UnknownShuffleRng(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// The production field modulus: the smallest prime above 2^256, verified
/// probabilistically on first use. Keeps the chance that an evaluation
/// falls outside [0, 2^256) near 2^-247.
pub fn production_prime() -> &'static BigUint {
    static PRIME: OnceLock<BigUint> = OnceLock::new();
    PRIME.get_or_init(|| {
        let p = BigUint::from(2u32).pow(256) + BigUint::from(297u32);
        assert!(
            is_probable_prime(&p, PRIMALITY_ROUNDS),
            "hard-coded production prime failed {PRIMALITY_ROUNDS}-round primality"
        );
        p
    })
}

/// The counter range bots sweep, with the simulated time per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterDomain {
    pub start: u64,
    pub upper: u64,
    pub tick_seconds: u64,
}

impl CounterDomain {
    pub fn new(start: u64, upper: u64, tick_seconds: u64) -> Result<Self, RigaError> {
        if start > upper {
            return Err(RigaError::InvalidDomain { start, upper });
        }
        if tick_seconds == 0 {
            return Err(RigaError::ZeroTick);
        }
        Ok(Self { start, upper, tick_seconds })
    }

    pub fn contains(&self, counter: u64) -> bool {
        counter >= self.start && counter <= self.upper
    }

    pub fn len(&self) -> u64 {
        self.upper - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tick_ms(&self) -> u64 {
        self.tick_seconds * 1000
    }
}

impl Default for CounterDomain {
    fn default() -> Self {
        Self {
            start: 0,
            upper: DEFAULT_DOMAIN_UPPER,
            tick_seconds: DEFAULT_TICK_SECONDS,
        }
    }
}

/// A (counter, digest) pair the polynomial is forced through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anchor {
    pub counter: u64,
    pub digest: Digest256,
}

/// Validated anchor collection: distinct counters, all inside the domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorSet {
    anchors: Vec<Anchor>,
}

impl AnchorSet {
    pub fn new(anchors: Vec<Anchor>, domain: &CounterDomain) -> Result<Self, RigaError> {
        Self::with_max(anchors, domain, MAX_ANCHORS)
    }

    pub fn with_max(
        anchors: Vec<Anchor>,
        domain: &CounterDomain,
        max: usize,
    ) -> Result<Self, RigaError> {
        if anchors.is_empty() || anchors.len() > max {
            return Err(RigaError::AnchorCount { count: anchors.len(), max });
        }
        for (i, a) in anchors.iter().enumerate() {
            if !domain.contains(a.counter) {
                return Err(RigaError::AnchorOutOfDomain {
                    counter: a.counter,
                    start: domain.start,
                    upper: domain.upper,
                });
            }
            if anchors[..i].iter().any(|b| b.counter == a.counter) {
                return Err(RigaError::DuplicateCounter(a.counter));
            }
        }
        Ok(Self { anchors })
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

/// Maps field values to protocol addresses. Only the IPFS scheme is built;
/// other content-addressed schemes would plug in here.
pub trait AddressScheme {
    type Addr: std::fmt::Display;

    fn address_for(&self, value: &BigUint) -> Self::Addr;
}

/// CIDv0 addressing: values are reduced into [0, 2^256) and framed as
/// multihash + Base58.
#[derive(Debug, Clone, Copy, Default)]
pub struct IpfsScheme;

impl AddressScheme for IpfsScheme {
    type Addr = CidV0;

    fn address_for(&self, value: &BigUint) -> CidV0 {
        static MODULUS: OnceLock<BigUint> = OnceLock::new();
        let m = MODULUS.get_or_init(|| BigUint::from(2u32).pow(256));
        cid_from_value(&(value % m)).expect("reduced below 2^256")
    }
}

/// Optional transform applied to raw polynomial values before address
/// encoding; ships as the identity.
pub type PostProcess = fn(BigUint) -> BigUint;

/// The skewed generator: an interpolated polynomial over GF(p) that hits
/// every anchor digest exactly and looks arbitrary elsewhere.
#[derive(Debug, Clone)]
pub struct SkewedPrng {
    poly: FieldPoly,
    post: Option<PostProcess>,
}

impl SkewedPrng {
    pub fn poly(&self) -> &FieldPoly {
        &self.poly
    }

    pub fn prime(&self) -> &BigUint {
        self.poly.field().prime()
    }

    /// Installs a post-processing transform (hardening hook). The default
    /// generator ships without one.
    pub fn with_post_process(mut self, post: PostProcess) -> Self {
        self.post = Some(post);
        self
    }

    /// Raw 256-bit value for a counter: polynomial evaluation mod p, then
    /// reduction into [0, 2^256). Anchored counters are unaffected by the
    /// reduction since their digests already fit.
    pub fn value_at(&self, counter: u64) -> BigUint {
        let v = self.poly.eval(&BigUint::from(counter));
        match self.post {
            Some(f) => f(v),
            None => v,
        }
    }

    /// The content address emitted for a counter.
    pub fn uri_at(&self, counter: u64) -> CidV0 {
        IpfsScheme.address_for(&self.value_at(counter))
    }

    /// Ordered (counter, address) stream over a domain, one entry per
    /// counter tick. Pacing in simulated time is the scheduler's concern.
    pub fn stream<'a>(&'a self, domain: &CounterDomain) -> UriStream<'a> {
        UriStream {
            prng: self,
            next: domain.start,
            upper: domain.upper,
            exhausted: false,
        }
    }
}

pub struct UriStream<'a> {
    prng: &'a SkewedPrng,
    next: u64,
    upper: u64,
    exhausted: bool,
}

impl Iterator for UriStream<'_> {
    type Item = (u64, CidV0);

    fn next(&mut self) -> Option<Self::Item> {
        if self.exhausted || self.next > self.upper {
            self.exhausted = true;
            return None;
        }
        let counter = self.next;
        if self.next == self.upper {
            self.exhausted = true;
        } else {
            self.next += 1;
        }
        Some((counter, self.prng.uri_at(counter)))
    }
}

/// Interpolates the generator polynomial through all anchors over GF(p).
pub fn build_skewed_prng(anchors: &AnchorSet, prime: &BigUint) -> Result<SkewedPrng, RigaError> {
    for a in anchors.anchors() {
        if prime <= &a.digest.to_value() {
            return Err(RigaError::PrimeTooSmall { counter: a.counter });
        }
    }
    let field = PrimeField::new(prime.clone())?;
    let points: Vec<(BigUint, BigUint)> = anchors
        .anchors()
        .iter()
        .map(|a| (BigUint::from(a.counter), a.digest.to_value()))
        .collect();
    let poly = lagrange_interpolate(&points, &field)?;
    Ok(SkewedPrng { poly, post: None })
}

/// The mutable-name variant: the same skewed construction over name
/// digests, plus a seeded uniform permutation fixing the order in which a
/// bot visits the domain.
#[derive(Debug, Clone)]
pub struct NameRiga {
    prng: SkewedPrng,
    visit_order: Vec<u64>,
}

impl NameRiga {
    pub fn prng(&self) -> &SkewedPrng {
        &self.prng
    }

    /// The seeded bijection on [start, upper] the sweep follows.
    pub fn visit_order(&self) -> &[u64] {
        &self.visit_order
    }

    /// Name identifiers in visit order. Names are encoded like content
    /// addresses but resolved through the mutable-name registry.
    pub fn names(&self) -> impl Iterator<Item = (u64, CidV0)> + '_ {
        self.visit_order.iter().map(|&c| (c, self.prng.uri_at(c)))
    }
}

/// Fisher-Yates permutation of the domain, driven by the named generator.
fn seeded_permutation(
    domain: &CounterDomain,
    shuffle_seed: u64,
    shuffle_rng: &str,
) -> Result<Vec<u64>, RigaError> {
    if shuffle_rng != SHUFFLE_RNG_CHACHA8_V1 {
        return Err(RigaError::UnknownShuffleRng(shuffle_rng.to_string()));
    }
    let mut order: Vec<u64> = (domain.start..=domain.upper).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    Ok(order)
}

pub fn build_name_riga(
    anchors: &AnchorSet,
    prime: &BigUint,
    domain: &CounterDomain,
    shuffle_seed: u64,
) -> Result<NameRiga, RigaError> {
    let prng = build_skewed_prng(anchors, prime)?;
    let visit_order = seeded_permutation(domain, shuffle_seed, SHUFFLE_RNG_CHACHA8_V1)?;
    Ok(NameRiga { prng, visit_order })
}

mod decimal_string {
    use super::*;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        BigUint::from_str_radix(&text, 10)
            .map_err(|e| de::Error::custom(format!("bad decimal integer: {e}")))
    }
}

fn default_shuffle_rng() -> String {
    SHUFFLE_RNG_CHACHA8_V1.to_string()
}

/// An anchor as persisted in the campaign file: the counter and the
/// address the generator must emit there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignAnchor {
    pub counter: u64,
    pub cid: CidV0,
}

/// Everything a bot needs to run the generator, as written by campaign
/// planning and read back by simulated agents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Campaign {
    #[serde(with = "decimal_string")]
    pub prime: BigUint,
    pub anchors: Vec<CampaignAnchor>,
    pub domain: CounterDomain,
    pub shuffle_seed: u64,
    #[serde(default = "default_shuffle_rng")]
    pub shuffle_rng: String,
}

impl Campaign {
    pub fn anchor_set(&self) -> Result<AnchorSet, RigaError> {
        let anchors = self
            .anchors
            .iter()
            .map(|a| Anchor { counter: a.counter, digest: a.cid.digest() })
            .collect();
        AnchorSet::new(anchors, &self.domain)
    }

    pub fn build_prng(&self) -> Result<SkewedPrng, RigaError> {
        build_skewed_prng(&self.anchor_set()?, &self.prime)
    }

    pub fn build_name_riga(&self) -> Result<NameRiga, RigaError> {
        let prng = self.build_prng()?;
        let visit_order = seeded_permutation(&self.domain, self.shuffle_seed, &self.shuffle_rng)?;
        Ok(NameRiga { prng, visit_order })
    }

    pub fn max_anchor_counter(&self) -> u64 {
        self.anchors.iter().map(|a| a.counter).max().unwrap_or(0)
    }
}

/// A planned campaign: the persisted file contents, the built generator,
/// and the anchor addresses in payload order.
#[derive(Debug, Clone)]
pub struct CampaignPlan {
    pub campaign: Campaign,
    pub prng: SkewedPrng,
    pub anchor_cids: Vec<CidV0>,
}

/// Hashes each payload with the store's content-address function, anchors
/// the generator through the results, and returns the planned addresses.
/// Nothing is published: upload happens later, at a time of the operator's
/// choosing.
pub fn plan_campaign<P: AsRef<[u8]>>(
    payloads: &[P],
    counters: &[u64],
    prime: &BigUint,
    domain: CounterDomain,
    shuffle_seed: u64,
) -> Result<CampaignPlan, RigaError> {
    if payloads.len() != counters.len() {
        return Err(RigaError::PayloadCounterMismatch {
            payloads: payloads.len(),
            counters: counters.len(),
        });
    }
    let anchor_cids: Vec<CidV0> = payloads
        .iter()
        .map(|p| content_cid(p.as_ref()))
        .collect();
    let anchors: Vec<Anchor> = anchor_cids
        .iter()
        .zip(counters)
        .map(|(cid, &counter)| Anchor { counter, digest: cid.digest() })
        .collect();
    let set = AnchorSet::new(anchors, &domain)?;
    let prng = build_skewed_prng(&set, prime)?;
    let campaign = Campaign {
        prime: prime.clone(),
        anchors: anchor_cids
            .iter()
            .zip(counters)
            .map(|(cid, &counter)| CampaignAnchor { counter, cid: cid.clone() })
            .collect(),
        domain,
        shuffle_seed,
        shuffle_rng: default_shuffle_rng(),
    };
    Ok(CampaignPlan { campaign, prng, anchor_cids })
}
