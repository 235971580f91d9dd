//! Gateway latency models, timeout accounting, and round-robin selection.
//!
//!     cargo run -p riga --example gateway_latency

use riga::gatewaysim::{build_profiles, request, table2_default_specs, RoundRobin};
use riga::keys::Keypair;
use riga::storesim::Store;

fn main() {
    let mut store = Store::new();
    let node = store.register_node(&Keypair::from_seed([1; 32]).public_bytes());
    let cid = store.put_object(node, b"a stored article").unwrap();

    let mut profiles = build_profiles(&table2_default_specs(), 42);
    println!("requesting one stored CID through all 13 bundled profiles (3 s timeout):");
    for gw in profiles.iter_mut() {
        let out = request(gw, &store, &cid, 3000, 0);
        println!(
            "  {:<22} {:>9.1} ms  dropped={}",
            gw.name(),
            out.elapsed_ms(),
            out.is_dropped()
        );
    }

    let ghost = riga::storesim::content_cid(b"no such content");
    let out = request(&mut profiles[0], &store, &ghost, 3000, 0);
    println!("\nunresolvable CID: elapsed {} ms, dropped {}", out.elapsed_ms(), out.is_dropped());

    let mut rr = RoundRobin::new();
    let mut counts = vec![0u32; profiles.len()];
    for _ in 0..1000 {
        counts[rr.next_index(profiles.len()).unwrap()] += 1;
    }
    println!("\n1000 round-robin selections over 13 gateways: {counts:?}");
}
