//! Winner sets, stratified folds and set-aware accuracy on a planted selection rule.

use copa::eval::{set_aware_accuracy, stratified_kfold, winner_sets};
use copa::features::extract_features;
use copa::instances::ProblemKind;
use copa::matrix::Matrix;
use copa::probes::{predict_classifier, train_classifier, ClassifierKind, TrainConfig};
use copa::synth::{self, SynthOptions};

fn main() {
    let kind = ProblemKind::Kp;
    let insts = synth::instances(kind, 200, 3, SynthOptions::default());
    let table = synth::planted_performance(kind, &insts, 3, 0.1);
    let sets = winner_sets(&table, 1e-9).unwrap();
    let x = Matrix::from_rows(
        11,
        insts.iter().map(|i| {
            extract_features(i)
                .values
                .iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect::<Vec<_>>()
        }),
    );
    let folds = stratified_kfold(&sets, 5, 3).unwrap();
    println!(
        "{} instances, {} winner-set strata",
        sets.len(),
        folds[0].stratum_sets.len()
    );

    for kind in ClassifierKind::ALL {
        let mut accs = Vec::new();
        for fold in &folds {
            let (train, test) = (fold.train_indices(), fold.test_indices());
            let labels: Vec<&str> = train.iter().map(|&i| fold.labels[i].as_str()).collect();
            let cfg = TrainConfig {
                seed: 3,
                ..TrainConfig::default()
            };
            let model = train_classifier(kind, &x.select_rows(&train), &labels, &cfg).unwrap();
            let pred = predict_classifier(&model, &x.select_rows(&test)).unwrap();
            let truth: Vec<_> = test.iter().map(|&i| sets[i].set.clone()).collect();
            accs.push(set_aware_accuracy(&pred, &truth).unwrap());
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        println!("{:<14} accuracy {mean:.3}  folds {accs:.2?}", kind.as_str());
    }
}
