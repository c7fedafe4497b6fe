//! Trains one multi-modal layer, then shows the block order it settled on
//! and runs inference through the look-up table.
//!
//! ```bash
//! cargo run --release --example multimodal_sorting
//! ```

use adaptive_dbn::arrangement::{apply_lookup, BlockKind};
use adaptive_dbn::data::synth_multimodal;
use adaptive_dbn::dbn::{train_dbn, Mode, TrainingData};
use adaptive_dbn::TrainConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> adaptive_dbn::Result<()> {
    let ds = synth_multimodal(500, 0.05, 1)?;
    let data = TrainingData::from_dataset(&ds)?;
    let name = |id: usize, kind: BlockKind| match kind {
        BlockKind::Image => format!("r{id}"),
        BlockKind::Csv => format!("c{}", id - ds.image_height),
    };
    let show = |layout: &adaptive_dbn::BlockLayout| {
        layout.blocks().iter().map(|b| name(b.id, b.kind)).collect::<Vec<_>>().join(" ")
    };
    println!("initial order: {}", show(&data.layout));

    let cfg = TrainConfig {
        lr: 0.1,
        batch_size: 20,
        initial_hidden: 64,
        max_layers: 1,
        epoch_cap: 100,
        stop_tolerance: 0.0,
        ..TrainConfig::default()
    }
    .with_mode(Mode::Multimodal);
    let model = train_dbn(&data, &cfg, &mut ChaCha8Rng::seed_from_u64(3))?;
    let layer = &model.layers[0];
    println!("final order:   {}", show(&layer.layout));
    println!("sort moves: {}", layer.stats.sort_moves);
    println!("training accuracy: {:.3}", model.accuracy(&ds.visible_rows(), &ds.labels())?);

    let raw = ds.records[0].visible();
    let arranged = apply_lookup(&layer.table, &raw)?;
    println!("raw      {:?}", &raw.as_slice()[56..]);
    println!("arranged {:?}", &arranged.as_slice()[56..]);
    let pred = model.infer(&raw)?;
    println!(
        "record 0: true {}, predicted {} ({:.3})",
        ds.class_labels[ds.records[0].label],
        ds.class_labels[pred.label],
        pred.probabilities[pred.label]
    );
    Ok(())
}
