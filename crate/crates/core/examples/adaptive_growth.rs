//! Neuron generation on bars-and-stripes, starting from two hidden units.
//!
//! ```bash
//! cargo run --release --example adaptive_growth
//! ```

use adaptive_dbn::arrangement::pseudo_blocks;
use adaptive_dbn::data::bars_and_stripes;
use adaptive_dbn::dbn::{train_layer, Mode};
use adaptive_dbn::TrainConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> adaptive_dbn::Result<()> {
    let rows = bars_and_stripes(4);
    for grow in [false, true] {
        let mut cfg = TrainConfig {
            lr: 0.1,
            batch_size: 10,
            initial_hidden: 2,
            max_layers: 1,
            epoch_cap: 500,
            stop_tolerance: 0.0,
            ..TrainConfig::default()
        }
        .with_mode(Mode::Adaptive);
        cfg.growth_enabled = grow;
        // WD of per-epoch deltas is tiny at this learning rate
        cfg.growth.theta_gen = 1e-4;
        cfg.growth.max_hidden = 16;

        let (layout, table) = pseudo_blocks(16, 16, 0)?;
        let layer = train_layer(&rows, layout, table, None, &cfg, &mut ChaCha8Rng::seed_from_u64(7))?;
        let s = &layer.stats;
        println!(
            "growth {:<5}  hidden {:>2}  generated {:>2}  annihilated {}  recon error {:.4}",
            grow,
            layer.params.n_hidden(),
            s.generated,
            s.annihilated,
            s.final_recon_error
        );
        if grow {
            let first_growth: Vec<(usize, usize)> = s
                .hidden_trace
                .iter()
                .enumerate()
                .filter(|(k, &j)| *k == 0 || s.hidden_trace[k - 1] != j)
                .map(|(k, &j)| (k + 1, j))
                .collect();
            println!("(epoch, hidden) at each change: {first_growth:?}");
        }
    }
    Ok(())
}
