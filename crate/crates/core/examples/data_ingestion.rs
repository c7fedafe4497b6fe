//! Binarizing a small mixed table: a PNG image column plus numeric items.
//!
//! ```bash
//! cargo run --example data_ingestion
//! ```

use adaptive_dbn::data::{load_dataset, InputSpec};
use image::{GrayImage, Luma};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("adbn-ingestion-example");
    std::fs::create_dir_all(&dir)?;
    for (name, lit) in [("dark.png", 30u8), ("bright.png", 220u8)] {
        let img = GrayImage::from_fn(4, 4, |x, _| Luma([if x < 2 { lit } else { 255 - lit }]));
        img.save(dir.join(name))?;
    }
    let table = "file,label,age,pressure\ndark.png,low,34,118\nbright.png,high,71,152\n";
    std::fs::write(dir.join("patients.csv"), table)?;

    let spec: InputSpec = serde_json::from_str(
        r#"{
            "image_width": 4, "image_height": 4, "image_column": "file",
            "schema": { "age": [40, 65], "pressure": [120, 140] }
        }"#,
    )?;
    let ds = load_dataset(&dir.join("patients.csv"), &spec, None)?;
    let (layout, table) = ds.initial_layout()?;
    println!("classes: {:?}", ds.class_labels);
    println!("block order (ids): {:?}", layout.order());
    println!("look-up table: {:?}", table.forward());
    for rec in &ds.records {
        println!(
            "{:>5}: image {:?} csv {:?}",
            ds.class_labels[rec.label],
            rec.image_bits.as_slice(),
            rec.csv_bits.as_slice()
        );
    }
    Ok(())
}
