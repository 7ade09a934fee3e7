//! Five-fold cross-validation on the synthetic dataset.
//!
//! `cargo run --release -p mirnet-core --example synth_xval -- [per_class] [seed]`

use std::time::Instant;

use mirnet_core::eval::{run_cross_validation, synth_dataset, CvConfig};

fn main() -> mirnet_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let per_class: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(50);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(2024);

    let data = synth_dataset(per_class, seed);
    let start = Instant::now();
    let report = run_cross_validation(&data, &CvConfig::default(), seed)?;
    for f in &report.folds {
        let last = f.history.last().expect("at least one epoch");
        println!(
            "fold {}: test {:.2}%  (train {} / val {} / test {})  final loss {:.4}  val {:?}",
            f.fold + 1,
            f.accuracy,
            f.train_segments,
            f.val_segments,
            f.test_segments,
            last.train_loss,
            last.val_accuracy
        );
    }
    println!(
        "mean {:.3}% ± {:.3} in {:.1?}",
        report.summary.mean_accuracy,
        report.summary.ci95_half_width.unwrap_or(f64::NAN),
        start.elapsed()
    );
    Ok(())
}
