//! Turning images and tabular records into binary visible vectors.
//!
//! An image is flattened row-major (channels interleaved per pixel) and
//! thresholded. Each numeric CSV item is one-hot encoded over the bins cut by
//! its schema's cut-off values. A record's visible vector is the image bits
//! followed by the CSV bits.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arrangement::{initial_arrangement, BlockLayout, LookupTable};
use crate::error::{check_len, Error, Result};
use crate::rbm::BinaryVector;

/// Pixel intensities in `[0, 1]`, row-major with channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl PixelImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_len("pixel buffer", width * height * channels, data.len())?;
        Ok(Self { width, height, channels, data })
    }

    /// Builds a grey image from rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(width * height);
        for row in rows {
            check_len("image row", width, row.len())?;
            data.extend_from_slice(row);
        }
        Self::new(width, height, 1, data)
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    /// Row-major flattening.
    pub fn flatten(&self) -> Vec<f64> {
        self.data.clone()
    }

    pub fn unflatten(width: usize, height: usize, channels: usize, flat: &[f64]) -> Result<Self> {
        Self::new(width, height, channels, flat.to_vec())
    }
}

/// `bit = 1` iff `pixel > threshold`.
pub fn binarize_image(image: &PixelImage, threshold: f64) -> Result<BinaryVector> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold {threshold} must lie in (0, 1)")));
    }
    if let Some(p) = image.data.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("pixel value {p} outside [0, 1]")));
    }
    Ok(BinaryVector::from_bools(image.data.iter().map(|&p| p > threshold)))
}

/// Ordered cut-off values per CSV item. Item `name` with cut-offs
/// `c_1 < ... < c_n` gets `n + 1` bins `(-∞, c_1], (c_1, c_2], ..., (c_n, ∞)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CsvSchema {
    items: IndexMap<String, Vec<f64>>,
}

impl CsvSchema {
    pub fn new(items: IndexMap<String, Vec<f64>>) -> Result<Self> {
        let schema = Self { items };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, cuts) in &self.items {
            if cuts.is_empty() {
                return Err(Error::invalid(format!("item {name} needs at least one cut-off (two bins)")));
            }
            if cuts.iter().any(|c| !c.is_finite()) || cuts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("cut-offs of item {name} must be finite and strictly increasing")));
            }
        }
        Ok(())
    }

    pub fn items(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.items.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Number of items `L`.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn bin_counts(&self) -> Vec<usize> {
        self.items.values().map(|c| c.len() + 1).collect()
    }

    /// Total encoded width `M`.
    pub fn width(&self) -> usize {
        self.bin_counts().iter().sum()
    }
}

pub fn binarize_csv(record: &[f64], schema: &CsvSchema) -> Result<BinaryVector> {
    check_len("CSV record", schema.len(), record.len())?;
    let mut bits = Vec::with_capacity(schema.width());
    for ((name, cuts), &value) in schema.items().zip(record) {
        if !value.is_finite() {
            return Err(Error::invalid(format!("item {name} has non-finite value {value}")));
        }
        let bin = cuts.iter().position(|&c| value <= c).unwrap_or(cuts.len());
        bits.extend((0..=cuts.len()).map(|b| u8::from(b == bin)));
    }
    BinaryVector::new(bits)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiModalRecord {
    pub image_bits: BinaryVector,
    pub csv_bits: BinaryVector,
    pub label: usize,
}

impl MultiModalRecord {
    pub fn visible(&self) -> BinaryVector {
        self.image_bits.concat(&self.csv_bits)
    }
}

/// Binarized records plus the geometry needed to cut them into blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<MultiModalRecord>,
    pub image_width: usize,
    pub image_height: usize,
    pub channels: usize,
    /// Encoded width of each CSV item.
    pub csv_bins: Vec<usize>,
    pub class_labels: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn image_len(&self) -> usize {
        self.image_width * self.image_height * self.channels
    }

    pub fn n_visible(&self) -> usize {
        self.image_len() + self.csv_bins.iter().sum::<usize>()
    }

    pub fn visible_rows(&self) -> Vec<BinaryVector> {
        self.records.iter().map(MultiModalRecord::visible).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Spans of each image row, in original coordinates.
    pub fn image_row_spans(&self) -> Vec<Vec<usize>> {
        let row_len = self.image_width * self.channels;
        (0..self.image_height)
            .map(|r| (r * row_len..(r + 1) * row_len).collect())
            .collect()
    }

    /// Spans of each CSV item, in original coordinates.
    pub fn csv_spans(&self) -> Vec<Vec<usize>> {
        let mut start = self.image_len();
        self.csv_bins
            .iter()
            .map(|&w| {
                let span = (start..start + w).collect();
                start += w;
                span
            })
            .collect()
    }

    /// The interleaved starting arrangement: row 1, item 1, row 2, item 2, ...
    pub fn initial_layout(&self) -> Result<(BlockLayout, LookupTable)> {
        initial_arrangement(self.image_row_spans(), self.csv_spans())
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> Dataset {
        Dataset {
            records: Vec::new(),
            image_width: self.image_width,
            image_height: self.image_height,
            channels: self.channels,
            csv_bins: self.csv_bins.clone(),
            class_labels: self.class_labels.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffled k-fold partition of `0..n`; test folds differ in size by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::invalid(format!("k-fold needs k >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::invalid(format!("dataset of {n} records is too small for {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let test = order[start..start + size].to_vec();
        let train = order[..start].iter().chain(&order[start + size..]).copied().collect();
        folds.push(Fold { train, test });
        start += size;
    }
    Ok(folds)
}

/// Every distinct bars-and-stripes pattern on a `side × side` grid
/// (`2^(side+1) - 2` of them).
pub fn bars_and_stripes(side: usize) -> Vec<BinaryVector> {
    let mut out = Vec::new();
    for mask in 0..(1u64 << side) {
        let lines: Vec<bool> = (0..side).map(|k| (mask >> k) & 1 == 1).collect();
        // horizontal stripes
        out.push(BinaryVector::from_bools((0..side * side).map(|p| lines[p / side])));
        let uniform = mask == 0 || mask == (1u64 << side) - 1;
        if !uniform {
            // vertical bars
            out.push(BinaryVector::from_bools((0..side * side).map(|p| lines[p % side])));
        }
    }
    out
}

/// Side length of synthetic images.
pub const SYNTH_SIDE: usize = 8;
/// Image rows that drive the synthetic CSV items, one item per row.
pub const SYNTH_CSV_ROWS: [usize; 4] = [4, 5, 6, 7];

/// Synthetic multi-modal data: an 8×8 bars-or-stripes image (label 0 =
/// bars, 1 = stripes) plus one CSV item per row in [`SYNTH_CSV_ROWS`]
/// holding that row's majority bit, flipped with probability `noise`.
/// Items are encoded over two bins (cut-off 0.5).
///
/// The interleaved initial layout places item `l` beside row `l`, four rows
/// away from the row it actually depends on.
pub fn synth_multimodal(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..0.5).contains(&noise) {
        return Err(Error::invalid(format!("noise {noise} must lie in [0, 0.5)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = SYNTH_SIDE;
    let schema = synth_schema();
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let stripes = rng.random_bool(0.5);
        let lines: Vec<bool> = loop {
            let l: Vec<bool> = (0..side).map(|_| rng.random_bool(0.5)).collect();
            // uniform images are both bars and stripes
            if l.iter().any(|&b| b) && l.iter().any(|&b| !b) {
                break l;
            }
        };
        let pixel = |r: usize, c: usize| if stripes { lines[r] } else { lines[c] };
        let image_bits = BinaryVector::from_bools((0..side * side).map(|p| pixel(p / side, p % side)));
        let items: Vec<f64> = SYNTH_CSV_ROWS
            .iter()
            .map(|&r| {
                let ones = (0..side).filter(|&c| pixel(r, c)).count();
                let majority = 2 * ones >= side;
                let flipped = majority ^ rng.random_bool(noise);
                f64::from(u8::from(flipped))
            })
            .collect();
        records.push(MultiModalRecord {
            image_bits,
            csv_bits: binarize_csv(&items, &schema)?,
            label: usize::from(stripes),
        });
    }
    Ok(Dataset {
        records,
        image_width: side,
        image_height: side,
        channels: 1,
        csv_bins: schema.bin_counts(),
        class_labels: vec!["bars".into(), "stripes".into()],
    })
}

/// Schema matching [`synth_multimodal`]'s CSV items.
pub fn synth_schema() -> CsvSchema {
    let items = SYNTH_CSV_ROWS
        .iter()
        .map(|r| (format!("row{r}_majority"), vec![0.5]))
        .collect();
    CsvSchema { items }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    /// Headered CSV, see [`load_table`].
    #[default]
    Table,
    /// CIFAR-10 binary batch, see [`load_cifar_batch`].
    CifarBinary,
}

/// Loads `path` in whichever format `spec` names.
pub fn load_dataset(path: &Path, spec: &InputSpec, known_labels: Option<&[String]>) -> Result<Dataset> {
    match spec.format {
        DataFormat::Table => load_table(path, spec, known_labels),
        DataFormat::CifarBinary => load_cifar_batch(path, spec.threshold),
    }
}

/// How tabular files map onto images and CSV items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSpec {
    pub format: DataFormat,
    pub image_width: usize,
    pub image_height: usize,
    pub channels: usize,
    pub threshold: f64,
    /// Pixel columns are `{pixel_prefix}0, {pixel_prefix}1, ...`.
    pub pixel_prefix: String,
    /// Optional column holding a PNG path (relative to the data file).
    pub image_column: Option<String>,
    pub label_column: String,
    pub schema: CsvSchema,
}

impl Default for InputSpec {
    fn default() -> Self {
        Self {
            format: DataFormat::Table,
            image_width: SYNTH_SIDE,
            image_height: SYNTH_SIDE,
            channels: 1,
            threshold: 0.5,
            pixel_prefix: "px".into(),
            image_column: None,
            label_column: "label".into(),
            schema: synth_schema(),
        }
    }
}

/// Reads a headered RFC-4180 CSV of labelled records.
///
/// `known_labels` pins the label → class-id mapping (e.g. from a trained
/// model); otherwise labels are numbered in sorted order.
pub fn load_table(path: &Path, spec: &InputSpec, known_labels: Option<&[String]>) -> Result<Dataset> {
    spec.schema.validate()?;
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => Error::Csv(e),
    })?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid(format!("{}: missing column {name}", path.display())))
    };
    let label_col = column(&spec.label_column)?;
    let image_len = spec.image_width * spec.image_height * spec.channels;
    let image_col = spec.image_column.as_deref().map(column).transpose()?;
    let pixel_cols = if image_col.is_some() {
        Vec::new()
    } else {
        (0..image_len)
            .map(|k| column(&format!("{}{k}", spec.pixel_prefix)))
            .collect::<Result<Vec<_>>>()?
    };
    let item_cols = spec.schema.items().map(|(name, _)| column(name)).collect::<Result<Vec<_>>>()?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();

    let mut raw_labels = Vec::new();
    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        let number = |col: usize| -> Result<f64> {
            let s = row.get(col).unwrap_or("").trim();
            s.parse::<f64>()
                .map_err(|_| Error::invalid(format!("{}: record {}: {s:?} is not a number", path.display(), line + 1)))
        };
        let image = match image_col {
            Some(col) => load_png(&base.join(row.get(col).unwrap_or("")), spec)?,
            None => PixelImage::new(
                spec.image_width,
                spec.image_height,
                spec.channels,
                pixel_cols.iter().map(|&c| number(c)).collect::<Result<_>>()?,
            )?,
        };
        let items: Vec<f64> = item_cols.iter().map(|&c| number(c)).collect::<Result<_>>()?;
        records.push((binarize_image(&image, spec.threshold)?, binarize_csv(&items, &spec.schema)?));
        raw_labels.push(row.get(label_col).unwrap_or("").trim().to_string());
    }

    let class_labels = match known_labels {
        Some(known) => known.to_vec(),
        None => {
            let mut l = raw_labels.clone();
            l.sort();
            l.dedup();
            l
        }
    };
    let records = records
        .into_iter()
        .zip(&raw_labels)
        .map(|((image_bits, csv_bits), label)| {
            let label = class_labels
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| Error::invalid(format!("unknown class label {label:?}")))?;
            Ok(MultiModalRecord { image_bits, csv_bits, label })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        records,
        image_width: spec.image_width,
        image_height: spec.image_height,
        channels: spec.channels,
        csv_bins: spec.schema.bin_counts(),
        class_labels,
    })
}

fn load_png(path: &PathBuf, spec: &InputSpec) -> Result<PixelImage> {
    let img = image::open(path)?;
    let (data, channels) = match spec.channels {
        1 => (img.to_luma8().into_raw(), 1),
        3 => (img.to_rgb8().into_raw(), 3),
        c => return Err(Error::invalid(format!("unsupported channel count {c}"))),
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    if (w, h) != (spec.image_width, spec.image_height) {
        return Err(Error::invalid(format!(
            "{}: image is {w}x{h}, expected {}x{}",
            path.display(),
            spec.image_width,
            spec.image_height
        )));
    }
    PixelImage::new(w, h, channels, data.into_iter().map(|b| f64::from(b) / 255.0).collect())
}

/// Writes a dataset with binary pixels and item values back to CSV, in the
/// layout [`load_table`] reads with `spec`.
pub fn write_table(dataset: &Dataset, spec: &InputSpec, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid(format!("{other:?}")),
    })?;
    let mut header = vec![spec.label_column.clone()];
    header.extend((0..dataset.image_len()).map(|k| format!("{}{k}", spec.pixel_prefix)));
    header.extend(spec.schema.items().map(|(n, _)| n.to_string()));
    writer.write_record(&header)?;
    for rec in &dataset.records {
        let mut row = vec![dataset.class_labels[rec.label].clone()];
        row.extend(rec.image_bits.as_slice().iter().map(|b| b.to_string()));
        let mut bits = rec.csv_bits.as_slice();
        for (_, cuts) in spec.schema.items() {
            let (item, rest) = bits.split_at(cuts.len() + 1);
            let bin = item.iter().position(|&b| b == 1).unwrap_or(0);
            // representative value inside the hot bin
            let value = match bin {
                0 => cuts[0],
                b if b == cuts.len() => cuts[b - 1] + 1.0,
                b => cuts[b],
            };
            row.push(value.to_string());
            bits = rest;
        }
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Reads a CIFAR-10 binary batch (`1 label byte + 3072 channel-planar bytes`
/// per record) and binarizes each channel at `threshold`.
pub fn load_cifar_batch(path: &Path, threshold: f64) -> Result<Dataset> {
    const SIDE: usize = 32;
    const PLANE: usize = SIDE * SIDE;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let stride = 1 + 3 * PLANE;
    if bytes.is_empty() || bytes.len() % stride != 0 {
        return Err(Error::invalid(format!(
            "{}: {} bytes is not a whole number of {stride}-byte records",
            path.display(),
            bytes.len()
        )));
    }
    let mut records = Vec::with_capacity(bytes.len() / stride);
    for chunk in bytes.chunks_exact(stride) {
        let label = usize::from(chunk[0]);
        let planes = &chunk[1..];
        let data = (0..PLANE)
            .flat_map(|p| (0..3).map(move |c| f64::from(planes[c * PLANE + p]) / 255.0))
            .collect();
        let image = PixelImage::new(SIDE, SIDE, 3, data)?;
        records.push(MultiModalRecord {
            image_bits: binarize_image(&image, threshold)?,
            csv_bits: BinaryVector::zeros(0),
            label,
        });
    }
    Ok(Dataset {
        records,
        image_width: SIDE,
        image_height: SIDE,
        channels: 3,
        csv_bins: Vec::new(),
        class_labels: (0..10).map(|c| c.to_string()).collect(),
    })
}
