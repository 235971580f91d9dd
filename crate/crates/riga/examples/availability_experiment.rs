//! Publish-to-first-fetch timing at desk scale: 1000 files through the
//! four fastest gateways with random failover.
//!
//!     cargo run -p riga --example availability_experiment

use riga::gatewaysim::{GatewaySpec, LatencyModel};
use riga::harness::{run_availability, ExperimentParams};

fn main() {
    // calibrated so the theoretical mean under uniform choice is 3647 ms
    let specs: Vec<GatewaySpec> = [3200.0, 3500.0, 3700.0, 4188.0]
        .iter()
        .enumerate()
        .map(|(i, &ms)| GatewaySpec {
            name: format!("cal-{i}"),
            model: LatencyModel::Fixed { ms },
            availability: 1.0,
            rate_limit: None,
        })
        .collect();

    let params = ExperimentParams { files: 1000, ..ExperimentParams::default() };
    let report = run_availability(&params, &specs, 9).unwrap();

    println!("files:        {}", report.files);
    println!("gateways:     {}", report.gateways_used.join(", "));
    println!("mean:         {:.3} ms", report.mean_ms);
    println!("std dev:      {:.3} ms", report.std_ms);
    println!("first deltas: {:?}", &report.samples[..8]);

    let sorted = {
        let mut s = report.samples.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s
    };
    let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p) as usize];
    println!(
        "quartiles:    {:.0} / {:.0} / {:.0} ms (plot-ready samples in the report)",
        q(0.25),
        q(0.5),
        q(0.75)
    );
}
