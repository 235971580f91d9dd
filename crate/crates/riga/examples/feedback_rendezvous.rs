//! Feedback exfiltration through a rendezvous board, including the
//! trace-removal step: a bot unpins its entry after collection and the
//! content becomes unreachable for anyone arriving later.
//!
//!     cargo run -p riga --example feedback_rendezvous

use riga::agents::{Bot, BotOptions, Botmaster, RendezvousBoard};
use riga::keys::Keypair;
use riga::rigacore::{plan_campaign, production_prime, CounterDomain};
use riga::storesim::Store;

fn main() {
    let mut store = Store::new();
    let master = Botmaster::new(&mut store, Keypair::from_seed([5; 32]), vec![], vec![]);
    let board = RendezvousBoard::create(&mut store, Keypair::from_seed([6; 32]), master.node)
        .unwrap();
    println!("rendezvous board name: {}", board.name);

    let plan = plan_campaign(
        &[b"x".to_vec()],
        &[0],
        production_prime(),
        CounterDomain::new(0, 3, 2).unwrap(),
        0,
    )
    .unwrap();
    let mut bots: Vec<Bot> = (0..3)
        .map(|i| {
            Bot::spawn(
                &mut store,
                Keypair::from_seed([20 + i; 32]),
                &plan.campaign,
                vec![],
                3000,
                BotOptions::default(),
                1,
                0,
            )
            .unwrap()
        })
        .collect();

    let mut entries = Vec::new();
    for (i, bot) in bots.iter_mut().enumerate() {
        let sensitive = i == 1; // this one covers its tracks
        let info = format!("host-report-{i}");
        let cid = bot
            .push_feedback(&mut store, info.as_bytes(), &board, sensitive)
            .unwrap();
        println!("bot {i} pushed {cid}{}", if sensitive { "  (unpin after collection)" } else { "" });
        entries.push(cid);
    }

    println!("\noperator collects:");
    for entry in master.collect_feedback(&store, &board).unwrap() {
        println!(
            "  {} -> {:?}",
            entry.cid,
            entry.content.map(|c| String::from_utf8_lossy(&c).into_owned())
        );
    }

    bots[1].after_collection(&mut store).unwrap();
    println!("\nanalyst fetches entry 1 after the unpin:");
    println!("  {:?}", store.get_object(&entries[1]).unwrap_err());
}
