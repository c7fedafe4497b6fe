//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::{Duration, Instant};

use adaptive_dbn::arrangement::{
    apply_lookup, pseudo_blocks, sort_step, Block, BlockKind, BlockLayout, Candidates, LookupTable,
};
use adaptive_dbn::bench::{run_mode, time_reduction};
use adaptive_dbn::data::{bars_and_stripes, synth_multimodal};
use adaptive_dbn::dbn::{train_dbn, train_layer, DbnModel, HeadConfig, Mode, TrainConfig, TrainingData};
use adaptive_dbn::rbm::{energy, BinaryVector, Batch, CdMode, cd_gradient};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const A1_TOL: f64 = 1e-9;
const A1_BUDGET: Duration = Duration::from_secs(10);
const A2_FD_TOL: f64 = 1e-5;
const A2_FD_STEP: f64 = 1e-5;
const A2_CD_SEEDS: u64 = 200;
const A2_MIN_ALIGNED: usize = 19;
const A2_BUDGET: Duration = Duration::from_secs(60);
const A3_TOL: f64 = 1e-12;
const A3_BUDGET: Duration = Duration::from_secs(60);
const A4_MIN_ACCURACY: f64 = 0.9;
const A4_BUDGET: Duration = Duration::from_secs(300);
const A5_MIN_WINS: usize = 8;
const A6_MIN_REDUCTION: f64 = 10.0;
const A6_RECON_THRESHOLD: f64 = 0.05;
const A7_MIN_SEEDS: usize = 8;

struct Verdict {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, &'static str, fn() -> Verdict);

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("A1", "normalization", a1_normalization),
        ("A2", "gradient oracle", a2_gradient_oracle),
        ("A3", "permutation equivariance", a3_permutation_equivariance),
        ("A4", "learning works", a4_learning_works),
        ("A5", "adaptive growth", a5_adaptive_growth),
        ("A6", "sorting efficacy", a6_sorting_efficacy),
        ("A7", "sorting decay", a7_sorting_decay),
        ("A8", "sort step semantics", a8_sort_step_semantics),
        ("A9", "round trips", a9_round_trips),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| id.eq_ignore_ascii_case(f)) {
            continue;
        }
        let t = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("{id} {name}: {status} ({:.1}s) {}", t.elapsed().as_secs_f64(), v.detail);
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

fn a1_normalization() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let ni = rng.random_range(1..=10);
        let nh = rng.random_range(1..=16 - ni);
        let p = random_params(ni, nh, 1.0, &mut rng);
        let log_z = p.log_partition().unwrap();
        let mut total = 0.0;
        for vi in 0..1u64 << ni {
            let v = BinaryVector::from_index(vi, ni);
            for hi in 0..1u64 << nh {
                let h = BinaryVector::from_index(hi, nh);
                total += (-energy(&v, &h, &p).unwrap() - log_z).exp();
            }
        }
        worst = worst.max((total - 1.0).abs());
    }
    let took = start.elapsed();
    verdict(
        worst <= A1_TOL && took < A1_BUDGET,
        format!("max |sum - 1| = {worst:.2e} (tol {A1_TOL:e}), {took:.1?}"),
    )
}

fn a2_gradient_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_fd: f64 = 0.0;
    let mut aligned = 0;
    for _ in 0..20 {
        let p = random_params(4, 3, 0.5, &mut rng);
        let rows: Vec<BinaryVector> = (0..8).map(|_| random_bits(4, &mut rng)).collect();
        let dense: Vec<Vec<f64>> = rows.iter().map(BinaryVector::to_f64).collect();
        let exact = exact_gradient(&dense, &p);
        let fd = finite_difference(&dense, &p, A2_FD_STEP);
        for (a, b) in exact.iter().zip(&fd) {
            worst_fd = worst_fd.max((a - b).abs());
        }
        let batch = Batch::new(rows).unwrap();
        let mut mean = vec![0.0; exact.len()];
        for seed in 0..A2_CD_SEEDS {
            let g = cd_gradient(&batch, &p, 1, CdMode::Sampled, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for (m, x) in mean.iter_mut().zip(g.flatten()) {
                *m += x / A2_CD_SEEDS as f64;
            }
        }
        aligned += usize::from(cosine(&mean, &exact) > 0.0);
    }
    let took = start.elapsed();
    verdict(
        worst_fd <= A2_FD_TOL && aligned >= A2_MIN_ALIGNED && took < A2_BUDGET,
        format!("max |exact - fd| = {worst_fd:.2e} (tol {A2_FD_TOL:e}), CD aligned in {aligned}/20 (need {A2_MIN_ALIGNED})"),
    )
}

fn a3_permutation_equivariance() -> Verdict {
    let start = Instant::now();
    let ds = synth_multimodal(120, 0.05, 303).unwrap();
    let n = ds.n_visible();
    let cfg = TrainConfig {
        lr: 0.05,
        batch_size: 20,
        initial_hidden: 10,
        max_layers: 2,
        epoch_cap: 15,
        cd_mode: CdMode::MeanField,
        head: HeadConfig { lr: 0.2, epochs: 20 },
        ..TrainConfig::default()
    }
    .with_mode(Mode::Traditional);
    let mut rng = ChaCha8Rng::seed_from_u64(304);
    let init = random_params(n, cfg.initial_hidden, 0.1, &mut rng);
    let (layout, identity) = pseudo_blocks(n, n, 0).unwrap();
    let base = TrainingData {
        layout: layout.clone(),
        table: identity,
        first_layer_init: Some(init.clone()),
        ..TrainingData::from_dataset(&ds).unwrap()
    };
    let reference = train_dbn(&base, &cfg, &mut ChaCha8Rng::seed_from_u64(305)).unwrap();

    let probes: Vec<BinaryVector> = (0..20).map(|_| random_bits(n, &mut rng)).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let table = LookupTable::from_forward(random_permutation(n, &mut rng)).unwrap();
        let mut permuted_init = init.clone();
        permuted_init.permute_visible(table.inverse()).unwrap();
        let data = TrainingData { table, first_layer_init: Some(permuted_init), ..base.clone() };
        let model = train_dbn(&data, &cfg, &mut ChaCha8Rng::seed_from_u64(305)).unwrap();
        for x in &probes {
            let a = reference.infer(x).unwrap().probabilities;
            let b = model.infer(x).unwrap().probabilities;
            for (p, q) in a.iter().zip(&b) {
                worst = worst.max((p - q).abs());
            }
        }
    }
    let took = start.elapsed();
    verdict(
        worst <= A3_TOL && took < A3_BUDGET,
        format!("max head-probability gap {worst:.2e} over 10 permutations (tol {A3_TOL:e})"),
    )
}

fn a4_config() -> TrainConfig {
    TrainConfig {
        lr: 0.1,
        batch_size: 20,
        initial_hidden: 128,
        max_layers: 2,
        min_layers: 2,
        epoch_cap: 100,
        stop_tolerance: 0.0,
        head: HeadConfig { lr: 0.5, epochs: 200 },
        ..TrainConfig::default()
    }
}

fn a4_learning_works() -> Verdict {
    let start = Instant::now();
    let ds = synth_multimodal(2000, 0.05, 404).unwrap();
    let report = run_mode(&ds, &a4_config(), Mode::Adaptive, 10, 405).unwrap();
    let top = report.layers.last().unwrap();
    let took = start.elapsed();
    verdict(
        report.layers.len() == 2 && top.ave >= A4_MIN_ACCURACY && took < A4_BUDGET,
        format!(
            "layer-2 10-fold accuracy {:.3} ± {:.3} (min {:.3}), need {A4_MIN_ACCURACY}",
            top.ave, top.std, top.min
        ),
    )
}

fn growth_config(grow: bool) -> TrainConfig {
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
    cfg.growth.theta_gen = 1e-4;
    cfg.growth.max_hidden = 16;
    cfg
}

fn a5_adaptive_growth() -> Verdict {
    let rows = bars_and_stripes(4);
    let mut wins = 0;
    let mut grew = 0;
    let mut finals = Vec::new();
    for seed in 0..10 {
        let run = |grow: bool| {
            let (layout, table) = pseudo_blocks(16, 16, 0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
            train_layer(&rows, layout, table, None, &growth_config(grow), &mut rng).unwrap()
        };
        let fixed = run(false);
        let adaptive = run(true);
        let j = adaptive.params.n_hidden();
        grew += usize::from(j > 2);
        wins += usize::from(j > 2 && adaptive.stats.final_recon_error < fixed.stats.final_recon_error);
        finals.push(j);
    }
    verdict(
        wins >= A5_MIN_WINS,
        format!("grew in {grew}/10, beat fixed J=2 in {wins}/10 (need {A5_MIN_WINS}); final J {finals:?}"),
    )
}

fn sorting_config(mode: Mode) -> TrainConfig {
    TrainConfig {
        lr: 0.05,
        batch_size: 20,
        initial_hidden: 16,
        max_layers: 1,
        epoch_cap: 300,
        stop_tolerance: 0.0,
        ..TrainConfig::default()
    }
    .with_mode(mode)
}

fn epochs_to(trace: &[f64], threshold: f64) -> usize {
    trace.iter().position(|&e| e <= threshold).map_or(trace.len() + 1, |k| k + 1)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn a6_sorting_efficacy() -> Verdict {
    let mut epochs = [Vec::new(), Vec::new()];
    let mut secs = [0.0, 0.0];
    let mut moves = 0;
    for seed in 0..10 {
        let ds = synth_multimodal(500, 0.05, 600 + seed).unwrap();
        let data = TrainingData::from_dataset(&ds).unwrap();
        for (k, mode) in [Mode::Adaptive, Mode::Multimodal].into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(650 + seed);
            let model = train_dbn(&data, &sorting_config(mode), &mut rng).unwrap();
            let stats = &model.layers[0].stats;
            epochs[k].push(epochs_to(&stats.recon_trace, A6_RECON_THRESHOLD) as f64);
            secs[k] += stats.elapsed.as_secs_f64();
            if mode == Mode::Multimodal {
                moves += stats.sort_moves;
            }
        }
    }
    let [plain, sorted] = epochs;
    let (m_plain, m_sorted) = (median(plain), median(sorted));
    let epoch_cut = time_reduction(m_plain, m_sorted);
    let wall_cut = time_reduction(secs[0], secs[1]);
    verdict(
        epoch_cut >= A6_MIN_REDUCTION,
        format!(
            "median epochs to recon <= {A6_RECON_THRESHOLD}: adaptive {m_plain}, multimodal {m_sorted} \
             -> {epoch_cut:.1}% fewer (need {A6_MIN_REDUCTION}%); wall-time reduction {wall_cut:.1}%; {moves} sort moves"
        ),
    )
}

fn a7_sorting_decay() -> Verdict {
    let mut ok = 0;
    let mut seen = Vec::new();
    for seed in 0..10 {
        let ds = synth_multimodal(500, 0.05, 700 + seed).unwrap();
        let data = TrainingData::from_dataset(&ds).unwrap();
        let cfg = TrainConfig { max_layers: 3, min_layers: 3, epoch_cap: 100, ..sorting_config(Mode::Multimodal) };
        let model = train_dbn(&data, &cfg, &mut ChaCha8Rng::seed_from_u64(750 + seed)).unwrap();
        let per_layer: Vec<usize> = model.layers.iter().map(|l| l.stats.sort_moves).collect();
        ok += usize::from(per_layer.len() == 3 && per_layer.windows(2).all(|w| w[1] <= w[0]));
        seen.push(per_layer);
    }
    verdict(ok >= A7_MIN_SEEDS, format!("non-increasing in {ok}/10 (need {A7_MIN_SEEDS}); moves per layer {seen:?}"))
}

fn block(kind: BlockKind, id: usize, span: std::ops::Range<usize>) -> Block {
    Block { kind, id, span: span.collect() }
}

fn a8_sort_step_semantics() -> Verdict {
    use BlockKind::{Csv, Image};
    let mut notes = Vec::new();
    // r1, r2, c1 with candidates {r1}, {c1}: c1 moves after r1
    let mut lay = BlockLayout::new(vec![block(Image, 0, 0..2), block(Image, 1, 2..4), block(Csv, 2, 4..5)]).unwrap();
    let mut table = adaptive_dbn::arrangement::rebuild_table(&lay).unwrap();
    let moves = sort_step(&mut lay, &mut table, &Candidates { image: vec![0], csv: vec![2] }, 1).unwrap();
    let move_ok = moves == 1 && lay.order() == vec![0, 2, 1] && table.forward() == [0, 1, 3, 4, 2];
    notes.push(format!("move {}", if move_ok { "ok" } else { "wrong" }));

    // c1 already adjacent to r1: nothing moves
    let mut lay = BlockLayout::new(vec![block(Image, 0, 0..2), block(Csv, 2, 4..5), block(Image, 1, 2..4)]).unwrap();
    let mut table = adaptive_dbn::arrangement::rebuild_table(&lay).unwrap();
    let before = table.clone();
    let moves = sort_step(&mut lay, &mut table, &Candidates { image: vec![0], csv: vec![2] }, 1).unwrap();
    let adjacent_ok = moves == 0 && lay.order() == vec![0, 2, 1] && table == before;
    notes.push(format!("adjacent {}", if adjacent_ok { "ok" } else { "wrong" }));

    // two candidate images, one CSV: only the first image receives it
    let mut lay = BlockLayout::new(vec![
        block(Image, 0, 0..1),
        block(Image, 1, 1..2),
        block(Image, 2, 2..3),
        block(Csv, 3, 3..4),
    ])
    .unwrap();
    let mut table = adaptive_dbn::arrangement::rebuild_table(&lay).unwrap();
    let moves = sort_step(&mut lay, &mut table, &Candidates { image: vec![0, 1], csv: vec![3] }, 1).unwrap();
    let exclusion_ok = moves == 1 && lay.order() == vec![0, 3, 1, 2];
    notes.push(format!("exclusion {}", if exclusion_ok { "ok" } else { "wrong" }));

    verdict(move_ok && adjacent_ok && exclusion_ok, notes.join(", "))
}

fn a9_round_trips() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut lookup_ok = true;
    for _ in 0..1000 {
        let n = rng.random_range(1..100);
        let table = LookupTable::from_forward(random_permutation(n, &mut rng)).unwrap();
        let raw = random_bits(n, &mut rng);
        let arranged = apply_lookup(&table, &raw).unwrap();
        lookup_ok &= apply_lookup(&table.inverted(), &arranged).unwrap() == raw;
    }

    let ds = synth_multimodal(200, 0.05, 910).unwrap();
    let cfg = TrainConfig { max_layers: 2, min_layers: 2, epoch_cap: 30, ..sorting_config(Mode::Multimodal) };
    let model = train_dbn(&TrainingData::from_dataset(&ds).unwrap(), &cfg, &mut rng).unwrap();
    let text = model.to_json().unwrap();
    let back = DbnModel::from_json(&text).unwrap();
    let mut infer_ok = back.to_json().unwrap() == text;
    for x in ds.visible_rows().iter().take(50) {
        let a = model.infer(x).unwrap();
        let b = back.infer(x).unwrap();
        infer_ok &= a.label == b.label
            && a.probabilities.iter().map(|p| p.to_bits()).eq(b.probabilities.iter().map(|p| p.to_bits()));
    }
    let sorted = model.layers.iter().any(|l| !l.table.is_identity());
    verdict(
        lookup_ok && infer_ok,
        format!("lookup inverse {lookup_ok}, JSON infer bit-identical {infer_ok} (non-identity tables present: {sorted})"),
    )
}
