//! The measurement client in test mode: the same plan/report pipeline as a
//! live run, but against deterministic in-process gateway models.
//!
//! For a real network run, point the `riga` binary at a plan file:
//!     riga probe run --plan configs/probe_plan.json --out report.json
//!
//!     cargo run -p riga --example probe_shim

use std::sync::atomic::AtomicBool;

use riga::gatewaysim::LatencyModel;
use riga::probe::{run_plan, ProbePlan, ShimTransport};

fn main() {
    let plan = ProbePlan {
        gateways: vec!["https://fast.example".into(), "https://tail.example".into()],
        cids: vec!["Qmc8N5wtMkvMySqxu4Agy2SGvL2zxYGf4rWmHvMASoUQv6".into()],
        repeats: 20,
        rate_limit_s: 2.0,
        timeout_ms: 3000,
        max_requests: 2000,
    };
    let mut shim = ShimTransport::new(
        &[
            ("https://fast.example".into(), LatencyModel::Fixed { ms: 100.0 }, 1.0),
            (
                "https://tail.example".into(),
                LatencyModel::Lognormal { median_ms: 900.0, sigma: 0.8 },
                1.0,
            ),
        ],
        7,
    );
    let report = run_plan(&plan, &mut shim, false, &AtomicBool::new(false)).unwrap();

    println!("gateway\t\t\ttotal_ms\tdropped");
    for gw in &report.per_gateway {
        println!("{}\t{:.1}\t\t{}", gw.gateway, gw.total_time_ms, gw.dropped_count);
    }

    let starts: Vec<f64> = report
        .per_gateway
        .iter()
        .flat_map(|g| g.requests.iter().map(|r| r.start_ms))
        .collect();
    let min_gap = starts
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    println!("\nsmallest gap between request starts: {min_gap:.0} ms (rate limit holds)");
    assert!(min_gap >= plan.rate_limit_s * 1000.0 - 1e-9);
}
