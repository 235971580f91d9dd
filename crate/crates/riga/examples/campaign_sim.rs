//! A whole campaign in one process: plan, publish, and let simulated bots
//! sweep the domain through rotating gateways until they execute both
//! anchored commands.
//!
//!     cargo run -p riga --example campaign_sim

use riga::agents::{sign_envelope, Bot, BotOptions, Botmaster, CommandKind};
use riga::gatewaysim::{build_profiles, GatewaySpec, LatencyModel, SimClock};
use riga::keys::Keypair;
use riga::rigacore::{plan_campaign, production_prime, CounterDomain};
use riga::storesim::Store;

enum Event {
    Publish(usize),
    Tick(usize),
}

fn main() {
    let master_kp = Keypair::from_seed([5; 32]);
    let commands: [&[u8]; 2] = [b"update beacon", b"rotate keys"];
    let envelopes: Vec<Vec<u8>> = commands
        .iter()
        .map(|c| sign_envelope(CommandKind::Direct, c, &master_kp).to_bytes())
        .collect();

    let domain = CounterDomain::new(0, 60, 2).unwrap();
    let plan = plan_campaign(&envelopes, &[20, 50], production_prime(), domain, 1).unwrap();
    println!("planned anchors:");
    for a in &plan.campaign.anchors {
        println!("  counter {:>3} -> {}", a.counter, a.cid);
    }

    let mut store = Store::new();
    let specs: Vec<GatewaySpec> = (0..5)
        .map(|i| GatewaySpec {
            name: format!("gw{i}"),
            model: LatencyModel::Fixed { ms: 100.0 + 50.0 * i as f64 },
            availability: 1.0,
            rate_limit: None,
        })
        .collect();
    let mut gateways = build_profiles(&specs, 42);

    let master = Botmaster::new(&mut store, master_kp.clone(), envelopes, plan.anchor_cids);
    let trusted = vec![master.public_key()];
    let mut bots: Vec<Bot> = (0..4)
        .map(|i| {
            Bot::spawn(
                &mut store,
                Keypair::from_seed([10 + i as u8; 32]),
                &plan.campaign,
                trusted.clone(),
                3000,
                BotOptions::default(),
                gateways.len(),
                i,
            )
            .unwrap()
        })
        .collect();

    let mut clock: SimClock<Event> = SimClock::new();
    clock.schedule(0, Event::Publish(0));
    clock.schedule(30_000, Event::Publish(1)); // before counter 50 is reached
    for i in 0..bots.len() {
        clock.schedule(0, Event::Tick(i));
    }

    let tick_ms = domain.tick_ms();
    while let Some((now, event)) = clock.next_event_before(130_000) {
        match event {
            Event::Publish(anchor) => {
                let cid = master.publish_command(&mut store, anchor, &[]).unwrap();
                println!("t={now:>6} ms  published anchor {anchor} at {cid}");
            }
            Event::Tick(i) => {
                if !bots[i].active() {
                    continue;
                }
                let rec = bots[i].tick(&store, &mut gateways, now).unwrap();
                if rec.outcome.label() != "no_content" {
                    println!(
                        "t={now:>6} ms  bot {i} counter {:>3} via {:<4} -> {}",
                        rec.counter, rec.gateway, rec.outcome.label()
                    );
                }
                if bots[i].active() {
                    clock.schedule(now + tick_ms, Event::Tick(i));
                }
            }
        }
    }

    println!("\nexecution logs:");
    for (i, bot) in bots.iter().enumerate() {
        let log: Vec<String> = bot
            .executed()
            .iter()
            .map(|r| format!("{}@{}", String::from_utf8_lossy(&r.command), r.counter))
            .collect();
        println!("  bot {i}: {log:?}");
        assert_eq!(bot.executed().len(), 2);
    }
    println!("\nevery bot executed both commands, nothing else");
}
