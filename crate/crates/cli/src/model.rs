//! `train` and `grad-check`.

use anyhow::bail;
use serde_json::json;

use qa_cnn::grad_check::check_random_models;
use qa_cnn::persist::{checksum, save_model};
use qa_cnn::train::TrainConfig;
use qa_cnn::{Model, ModelConfig};
use qa_core::data_io::{load_embeddings, EmbeddingTable, SplitName};
use qa_core::StopwordList;

use crate::args::{GradCheckArgs, Global, TrainArgs};
use crate::data::{candidate_idf, load_extra_splits, load_split, report};

pub fn train(a: TrainArgs, g: &Global) -> anyhow::Result<()> {
    let train = load_split(&a.train, SplitName::Train)?;
    let dev = load_split(&a.dev, SplitName::Dev)?;
    let extras = load_extra_splits(&a.idf_dataset)?;
    let idf = candidate_idf([&train, &dev].into_iter().chain(&extras));
    let table = match &a.embeddings {
        Some(p) => load_embeddings(p, g.seed)?,
        None => EmbeddingTable::new(a.dim, g.seed)?,
    };
    let mut shape = ModelConfig::with_shape(table.dim(), a.width, a.maps, a.hidden);
    shape.trainable_embeddings = a.trainable_embeddings;
    let init = Model::<f32>::init(shape, g.seed)?;
    let config = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        seed: g.seed,
        patience: a.patience,
        embedding_trainable: a.trainable_embeddings,
        ..Default::default()
    };
    let (model, log) = qa_cnn::train::train(init, &train, &dev, &config, &table, &idf, &StopwordList::bundled())?;
    save_model(&model, &table, &a.out)?;
    let log_path = a.log.clone().unwrap_or_else(|| a.out.join("train_log.jsonl"));
    log.write(&log_path)?;
    report(json!({
        "out": a.out,
        "epochs_run": log.epochs.len(),
        "best_epoch": log.best_epoch,
        "best_dev_map": log.best_dev_map,
        "checksum": checksum(&model),
        "log": log_path,
    }));
    Ok(())
}

pub fn grad_check(a: GradCheckArgs, g: &Global) -> anyhow::Result<()> {
    let reports = check_random_models(a.models, g.seed, a.epsilon)?;
    let mut worst: f64 = 0.0;
    println!("model\tchecked\tmax_rel_error\tworst_index");
    for (i, r) in reports.iter().enumerate() {
        println!("{i}\t{}\t{:e}\t{}", r.checked, r.max_rel_error, r.worst_index);
        worst = worst.max(r.max_rel_error);
    }
    println!("all\t{}\t{worst:e}\t", reports.iter().map(|r| r.checked).sum::<usize>());
    if worst >= a.tolerance {
        bail!("max relative error {worst:e} is not below {:e}", a.tolerance);
    }
    Ok(())
}
