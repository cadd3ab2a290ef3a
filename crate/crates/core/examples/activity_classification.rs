//! Trains all three activity classifiers on a synthetic six-class set and
//! prints test accuracy and confusion matrices.
//!
//! ```text
//! cargo run --release --example activity_classification -- [epochs]
//! ```

use std::time::Instant;

use csi_sentry::classify::{
    evaluate, feature_matrix, lstm_train, train_gnb, train_tree, LstmModel, TrainConfig, TreeParams,
};
use csi_sentry::synth::{gen_activity_dataset, ActivityConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = std::env::args().nth(1).map(|e| e.parse()).transpose()?.unwrap_or(40);
    let train = gen_activity_dataset(&ActivityConfig { per_class: 50, seed: 1, ..Default::default() });
    let test = gen_activity_dataset(&ActivityConfig { per_class: 20, seed: 2, ..Default::default() });

    let (train_x, levels) = feature_matrix(&train, None)?;
    let (test_x, _) = feature_matrix(&test, Some(levels))?;
    let pairs = |predict: &dyn Fn(&[f64]) -> csi_sentry::classify::Activity| {
        test_x.iter().map(|(x, y)| (*y, predict(x))).collect::<Vec<_>>()
    };

    let tree = train_tree(&train_x, TreeParams::default())?;
    let e = csi_sentry::classify::Evaluation::from_pairs(pairs(&|x| tree.predict(x).unwrap()))?;
    println!("decision tree (depth {})\n{e}\n", tree.depth());

    let gnb = train_gnb(&train_x)?;
    let e = csi_sentry::classify::Evaluation::from_pairs(pairs(&|x| gnb.predict(x).unwrap()))?;
    println!("naive bayes\n{e}\n");

    let start = Instant::now();
    let model = LstmModel::new(1, 32, 0.5, 3)?;
    let cfg = TrainConfig { epochs, lr: 1e-2, batch: 16, seed: 4, ..Default::default() };
    let (model, report) = lstm_train(&train, model, &cfg)?;
    let e = evaluate(|s| model.predict(s).unwrap(), &test)?;
    println!(
        "lstm: loss {:.3} -> {:.3} in {:.1?}\n{e}",
        report.initial_loss,
        report.epoch_losses.last().unwrap_or(&report.initial_loss),
        start.elapsed()
    );
    Ok(())
}
