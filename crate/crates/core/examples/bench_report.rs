//! Cross-validated per-layer report for the three training modes.
//!
//! ```bash
//! cargo run --release --example bench_report
//! ```

use adaptive_dbn::bench::{run_bench, write_csv};
use adaptive_dbn::data::synth_multimodal;
use adaptive_dbn::{Mode, TrainConfig};

fn main() -> adaptive_dbn::Result<()> {
    let ds = synth_multimodal(300, 0.05, 2)?;
    let cfg = TrainConfig {
        lr: 0.05,
        batch_size: 20,
        initial_hidden: 32,
        max_layers: 3,
        epoch_cap: 40,
        ..TrainConfig::default()
    };
    let outcome = run_bench(&ds, &cfg, &[Mode::Traditional, Mode::Adaptive, Mode::Multimodal], 3, 0)?;
    for report in &outcome.reports {
        println!("{}", report.to_text());
    }
    for line in outcome.reduction_lines() {
        println!("{line}");
    }
    println!();
    write_csv(&outcome.reports, std::io::stdout().lock())
}
