//! The mutable-name variant: a seeded random sweep over the domain and
//! content updates under a fixed name.
//!
//!     cargo run -p riga --example name_updates

use riga::keys::Keypair;
use riga::rigacore::{build_name_riga, production_prime, Anchor, AnchorSet, CounterDomain};
use riga::storesim::{sha256_digest, Store};

fn main() {
    let mut store = Store::new();
    let publisher_kp = Keypair::from_seed([3; 32]);
    let publisher = store.register_node(&publisher_kp.public_bytes());

    // the anchored "digest" is a name: the hash of the publisher's key
    let name = sha256_digest(&publisher_kp.public_bytes());
    let domain = CounterDomain::new(0, 9, 2).unwrap();
    let set = AnchorSet::new(vec![Anchor { counter: 4, digest: name }], &domain).unwrap();
    let riga = build_name_riga(&set, production_prime(), &domain, 99).unwrap();

    println!("seeded visit order over the domain: {:?}", riga.visit_order());

    let v1 = store.put_object(publisher, b"instructions v1").unwrap();
    store.publish_name(&publisher_kp, &name, v1).unwrap();

    println!("\nsweeping names in visit order:");
    for (counter, name_cid) in riga.names() {
        match store.resolve_name(&name_cid.digest()) {
            Ok(record) => println!(
                "  counter {counter}: {name_cid} resolves (version {}) -> {}",
                record.version, record.current
            ),
            Err(_) => println!("  counter {counter}: {name_cid} unknown"),
        }
    }

    // updating the content needs no new address
    let v2 = store.put_object(publisher, b"instructions v2").unwrap();
    store.publish_name(&publisher_kp, &name, v2.clone()).unwrap();
    let record = store.resolve_name(&name).unwrap();
    println!("\nafter republish: version {} -> {}", record.version, record.current);
    assert_eq!(record.current, v2);
}
