//! Build a skewed generator through three chosen (counter, digest) anchors
//! and sweep a slice of the counter domain.
//!
//!     cargo run -p riga --example skewed_prng

use riga::rigacore::{build_skewed_prng, production_prime, Anchor, AnchorSet, CounterDomain};
use riga::storesim::sha256_digest;

fn main() {
    let domain = CounterDomain::new(0, 1 << 20, 2).unwrap();
    let anchors = vec![
        Anchor { counter: 100, digest: sha256_digest(b"first command file") },
        Anchor { counter: 2048, digest: sha256_digest(b"second command file") },
        Anchor { counter: 77777, digest: sha256_digest(b"third command file") },
    ];
    let set = AnchorSet::new(anchors.clone(), &domain).unwrap();
    let prng = build_skewed_prng(&set, production_prime()).unwrap();

    println!("polynomial degree: {}", prng.poly().degree());
    println!("\ncounters around the first anchor:");
    for c in 97..=103u64 {
        let marker = if c == 100 { "  <- anchor" } else { "" };
        println!("  {c:>6}  {}{marker}", prng.uri_at(c));
    }

    for a in &anchors {
        assert_eq!(prng.uri_at(a.counter).digest(), a.digest);
    }
    println!("\nall {} anchors reproduce their digests exactly", anchors.len());

    let again = build_skewed_prng(&set, production_prime()).unwrap();
    assert!((0..500).all(|c| prng.uri_at(c) == again.uri_at(c)));
    println!("rebuilt generator emits an identical stream");
}
