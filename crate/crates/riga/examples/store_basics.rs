//! The simulated content-addressed store: put/get, chunking, pinning,
//! provider records, and mutable names.
//!
//!     cargo run -p riga --example store_basics

use riga::keys::Keypair;
use riga::storesim::{sha256_digest, Store, BLOCK_SIZE};

fn main() {
    let mut store = Store::new();
    let alice_kp = Keypair::from_seed([1; 32]);
    let alice = store.register_node(&alice_kp.public_bytes());
    let bob = store.register_node(&Keypair::from_seed([2; 32]).public_bytes());

    let cid = store.put_object(alice, b"hello").unwrap();
    println!("put b\"hello\" -> {cid}");
    println!("providers: {:?}", store.providers(&cid).iter().map(|n| n.to_text()).collect::<Vec<_>>());

    // anything over one 256 KB block is chunked under a link-bearing root
    let big = vec![7u8; 600 * 1024];
    let root = store.put_object(alice, &big).unwrap();
    let links = store.raw_object(&root).unwrap().links.len();
    println!("\n600 KB object -> root {root} with {links} chunk links");
    assert_eq!(store.get_object(&root).unwrap(), big);
    assert_eq!(600 * 1024 / BLOCK_SIZE + 1, links);

    store.pin(bob, &cid).unwrap();
    println!("\nafter bob pins: {} providers", store.providers(&cid).len());
    store.unpin(alice, &cid).unwrap();
    store.unpin(bob, &cid).unwrap();
    println!("after everyone unpins: {:?}", store.get_object(&cid).unwrap_err());

    // mutable names: latest publication wins
    let name = sha256_digest(&alice_kp.public_bytes());
    let v1 = store.put_object(alice, b"version one").unwrap();
    let v2 = store.put_object(alice, b"version two").unwrap();
    store.publish_name(&alice_kp, &name, v1).unwrap();
    store.publish_name(&alice_kp, &name, v2.clone()).unwrap();
    let record = store.resolve_name(&name).unwrap();
    println!("\nname {} resolves to {} (version {})", name, record.current, record.version);
    assert_eq!(record.current, v2);
}
