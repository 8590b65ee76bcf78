//! Train linear, MLP and GBDT probes to decode one feature from pooled activations.

use copa::eval::{mae, shuffle_split};
use copa::features::extract_features;
use copa::instances::ProblemKind;
use copa::llmio::{ActivationStore, MockActivationConfig, MockAnswers, MockProvider};
use copa::matrix::Matrix;
use copa::pooling::{pool, PoolingStrategy};
use copa::probes::{predict_regressor, train_regressor, RegressorKind, TrainConfig};
use copa::render::{render, Representation};
use copa::synth::{self, SynthOptions};

fn main() {
    let kind = ProblemKind::Gcp;
    let feature = "feat_density";
    let insts = synth::instances(kind, 150, 1, SynthOptions::default());
    let mock = MockProvider::new(MockAnswers::Regex, MockActivationConfig::default(), &insts);
    let store = ActivationStore::new(None, Some(&mock), None);

    let rows: Vec<Vec<f64>> = insts
        .iter()
        .map(|i| {
            let m = store
                .fetch_activations(kind, &render(i, Representation::Standard))
                .unwrap();
            pool(&m, PoolingStrategy::Mean).unwrap().vector
        })
        .collect();
    let x = Matrix::from_rows(rows[0].len(), &rows);
    let y: Vec<f64> = insts
        .iter()
        .map(|i| extract_features(i).get(feature).unwrap())
        .collect();

    let (train, test) = shuffle_split(insts.len(), 0.7, 7);
    let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let truth: Vec<Option<f64>> = test.iter().map(|&i| Some(y[i])).collect();
    let mean = ytr.iter().sum::<f64>() / ytr.len() as f64;
    println!(
        "baseline (train mean) MAE {:.5}",
        mae(&vec![Some(mean); test.len()], &truth).unwrap()
    );

    let cfg = TrainConfig {
        seed: 7,
        ..TrainConfig::default()
    };
    for kind in RegressorKind::ALL {
        let model = train_regressor(kind, &x.select_rows(&train), &ytr, &cfg).unwrap();
        let pred: Vec<Option<f64>> = predict_regressor(&model, &x.select_rows(&test))
            .unwrap()
            .into_iter()
            .map(Some)
            .collect();
        println!(
            "{:<6} MAE {:.5}  ({} bytes serialized)",
            kind.as_str(),
            mae(&pred, &truth).unwrap(),
            model.to_bytes().len()
        );
    }
}
