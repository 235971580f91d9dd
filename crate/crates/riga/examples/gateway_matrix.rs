//! Replay the per-gateway request matrix (20 stored CIDs x 50 repeats,
//! two timeout settings) against the bundled gateway profiles.
//!
//!     cargo run -p riga --example gateway_matrix

use riga::gatewaysim::table2_default_specs;
use riga::harness::{run_gateway_matrix, ExperimentParams};

fn main() {
    let params = ExperimentParams {
        matrix_cids: 20,
        matrix_repeats: 50,
        matrix_timeouts_ms: vec![5000, 3000],
        ..ExperimentParams::default()
    };
    let report = run_gateway_matrix(&params, &table2_default_specs(), 3).unwrap();
    print!("{}", report.to_tsv());

    let slowest = report
        .rows
        .iter()
        .max_by(|a, b| {
            a.cells[0]
                .mean_ms_per_request
                .partial_cmp(&b.cells[0].mean_ms_per_request)
                .unwrap()
        })
        .unwrap();
    println!(
        "\nslowest gateway: {} ({:.1} ms mean, {} of {} dropped at the short timeout)",
        slowest.gateway,
        slowest.cells[0].mean_ms_per_request,
        slowest.cells[1].dropped,
        slowest.cells[1].requests
    );
}
