//! Two-layer adaptive DBN with a softmax head on held-out synthetic data,
//! saved to JSON and loaded back.
//!
//! ```bash
//! cargo run --release --example dbn_classify
//! ```

use adaptive_dbn::data::synth_multimodal;
use adaptive_dbn::dbn::{train_dbn, HeadConfig, Mode, TrainingData};
use adaptive_dbn::{DbnModel, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> adaptive_dbn::Result<()> {
    let ds = synth_multimodal(1200, 0.05, 11)?;
    let train = ds.subset(&(0..1000).collect::<Vec<_>>());
    let test = ds.subset(&(1000..1200).collect::<Vec<_>>());

    let cfg = TrainConfig {
        lr: 0.1,
        batch_size: 20,
        initial_hidden: 128,
        max_layers: 2,
        min_layers: 2,
        epoch_cap: 60,
        stop_tolerance: 0.0,
        head: HeadConfig { lr: 0.5, epochs: 200 },
        ..TrainConfig::default()
    }
    .with_mode(Mode::Adaptive);
    let model = train_dbn(&TrainingData::from_dataset(&train)?, &cfg, &mut ChaCha8Rng::seed_from_u64(0))?;
    for (k, layer) in model.layers.iter().enumerate() {
        println!(
            "layer {}: {} -> {} units, {} epochs, recon {:.4}",
            k + 1,
            layer.params.n_visible(),
            layer.params.n_hidden(),
            layer.stats.iterations,
            layer.stats.final_recon_error
        );
    }
    println!("held-out accuracy: {:.3}", model.accuracy(&test.visible_rows(), &test.labels())?);

    let path = std::env::temp_dir().join("adbn-example-model.json");
    model.save(&path)?;
    let back = DbnModel::load(&path)?;
    let x = &test.records[0].visible();
    assert_eq!(model.infer(x)?, back.infer(x)?);
    println!("model round-tripped through {}", path.display());
    Ok(())
}
