use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::baselines::{
    ame_values, default_k, knn_shapley, mc_marginal_chains, semivalue_values, McConfig, SemivalueWeights,
    SubsetDesign, TreeUtility,
};
use crate::cli::output::{fmt_f64, manifest_hash, OutputDir};
use crate::cli::{CommandKind, Method, Settings};
use crate::data::{
    fetch_openml, flip_labels, generate_synthetic, load_csv, split, CorruptionRecord, DataSplit, LabelColumn,
    SplitSpec, SyntheticConfig, TabularDataset,
};
use crate::error::{Error, Result};
use crate::eval::{
    bench_timing, f1_detection, loglog_slope, pca2_projection, point_removal_curve, precision_recall_curve,
    random_removal_curve, BenchMethod, BenchSpec, RemovalCurve,
};
use crate::forest::TreeConfig;
use crate::oob::{
    data_oob_values, fit_and_score, infinitesimal_jackknife, oob_estimate, oob_scores, order_consistency_report,
    ConsistencyOptions, ScoreFunction, ValueVector,
};
use crate::rng::{derive_seed, stream_rng};

/// Environment of a run that does not affect its results.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
}

struct Prepared {
    split: DataSplit,
    train: TabularDataset,
    corruption: CorruptionRecord,
    dataset_fingerprint: String,
}

fn load(s: &Settings, ctx: &RunContext) -> Result<TabularDataset> {
    if let Some(path) = &s.csv {
        let label = LabelColumn::from(s.label_column.as_deref().unwrap_or("label"));
        return load_csv(path, &label);
    }
    if let Some(id) = s.openml {
        return fetch_openml(id, &ctx.cache_dir);
    }
    let n = s.n.unwrap_or(0);
    let spec = SplitSpec {
        train_size: n,
        val_fraction: s.val_fraction.unwrap_or(0.0),
        test_size: s.test_size.unwrap_or(0),
        seed: 0,
    };
    generate_synthetic(&SyntheticConfig::new(spec.total(), s.dim.unwrap_or(10), s.seed.unwrap_or(0)))
}

fn prepare(s: &Settings, ctx: &RunContext) -> Result<Prepared> {
    let seed = s.seed.unwrap_or(0);
    let ds = load(s, ctx)?;
    let spec = SplitSpec {
        train_size: s.n.unwrap_or(1000),
        val_fraction: s.val_fraction.unwrap_or(0.1),
        test_size: s.test_size.unwrap_or(3000),
        seed,
    };
    let parts = split(&ds, &spec)?;
    let (train, corruption) = flip_labels(&parts.train, s.corruption_rate.unwrap_or(0.0), seed)?;
    Ok(Prepared {
        split: parts,
        train,
        corruption,
        dataset_fingerprint: ds.fingerprint(),
    })
}

struct Valuation {
    values: ValueVector,
    psi_ij: Option<Vec<f64>>,
    diagnostics: Map<String, Value>,
    utility_evaluations: u64,
}

fn valuate(s: &Settings, train: &TabularDataset, val: &TabularDataset) -> Result<Valuation> {
    let seed = s.seed.unwrap_or(0);
    let method = s.method.unwrap_or(Method::Dataoob);
    let mut diagnostics = Map::new();
    let mut psi_ij = None;
    let mut utility_evaluations = 0;
    let values = match method {
        Method::Dataoob => {
            let b = s.b.unwrap_or(800);
            let run = fit_and_score(train, b, &TreeConfig::with_seed(seed), ScoreFunction::Correctness)?;
            let values = data_oob_values(&run.scores);
            let scores = oob_scores(&run.scores);
            diagnostics.insert("v_b".into(), json!(scores.v_b));
            diagnostics.insert("q_bar".into(), json!(scores.q_bar));
            diagnostics.insert("undefined".into(), json!(values.undefined_count()));
            if values.undefined_count() == 0 {
                diagnostics.insert("oob_estimate".into(), json!(oob_estimate(&values)?));
                let inf = infinitesimal_jackknife(&run.weights, &values, &scores)?;
                let report = order_consistency_report(
                    &values,
                    &inf,
                    &scores,
                    &ConsistencyOptions {
                        seed,
                        ..ConsistencyOptions::default()
                    },
                );
                diagnostics.insert("order_consistency".into(), serde_json::to_value(&report)?);
                psi_ij = Some(inf.psi_ij);
            } else {
                log::warn!("{} points were never out-of-bag; influence values skipped", values.undefined_count());
            }
            values
        }
        Method::KnnShapley => {
            let k = s.k.unwrap_or_else(|| default_k(train.n_rows()));
            diagnostics.insert("k".into(), json!(k.min(train.n_rows())));
            knn_shapley(train, val, k)?
        }
        Method::DataShapley | Method::BetaShapley => {
            let u = TreeUtility::new(train, val, TreeConfig::with_seed(derive_seed(seed, "utility", 0)))?;
            let cfg = McConfig {
                chains: s.chains.unwrap_or(10),
                max_samples_per_chain: s.max_samples_per_chain.unwrap_or(100),
                check_every: s.check_every.unwrap_or(10),
                threshold: s.gr_threshold.unwrap_or(1.05),
                seed,
            };
            let chains = mc_marginal_chains(&u, &cfg)?;
            let weights = if method == Method::DataShapley {
                SemivalueWeights::uniform(train.n_rows())
            } else {
                SemivalueWeights::beta_shapley(train.n_rows(), s.alpha.unwrap_or(16.0), s.beta.unwrap_or(1.0))?
            };
            diagnostics.insert("converged".into(), json!(chains.converged));
            diagnostics.insert("max_r_hat".into(), json!(finite_or_null(chains.max_r_hat())));
            diagnostics.insert("samples_per_chain".into(), json!(chains.samples_per_chain));
            utility_evaluations = u.evaluations();
            semivalue_values(&chains, &weights)?
        }
        Method::Ame => {
            let u = TreeUtility::new(train, val, TreeConfig::with_seed(derive_seed(seed, "utility", 0)))?;
            let design = SubsetDesign {
                probabilities: s.probabilities.clone().unwrap_or_else(|| vec![0.2, 0.4, 0.6, 0.8]),
                subsets_per_p: s.subsets_per_p.unwrap_or(200),
                folds: s.folds.unwrap_or(5),
            };
            let r = ame_values(&u, &design, seed)?;
            diagnostics.insert("lambda".into(), json!(r.path.lambda()));
            diagnostics.insert("sparsity".into(), json!(r.sparsity));
            utility_evaluations = u.evaluations();
            r.values
        }
        Method::Random => {
            let mut rng = stream_rng(seed, "random-values", 0);
            ValueVector::from_values((0..train.n_rows()).map(|_| rng.random::<f64>()).collect())
        }
    };
    if utility_evaluations > 0 {
        log::info!("{} utility evaluations", utility_evaluations);
    }
    Ok(Valuation {
        values,
        psi_ij,
        diagnostics,
        utility_evaluations,
    })
}

fn finite_or_null(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn write_values(out: &mut OutputDir, method: Method, v: &Valuation) -> Result<()> {
    let counts = v.values.oob_counts.as_ref();
    let rows = (0..v.values.len()).map(|i| {
        vec![
            i.to_string(),
            method.name().to_string(),
            fmt_f64(v.values.psi[i]),
            counts.map_or(String::new(), |c| c[i].to_string()),
            v.psi_ij.as_ref().map_or(String::new(), |p| fmt_f64(p[i])),
            u8::from(v.values.undefined[i]).to_string(),
        ]
    });
    out.csv("values.csv", &["index", "method", "psi", "oob_count", "psi_ij", "undefined"], rows)
}

fn write_corruption(out: &mut OutputDir, rec: &CorruptionRecord, train: &TabularDataset) -> Result<()> {
    let rows = rec
        .flipped_indices
        .iter()
        .map(|&i| vec![i.to_string(), rec.original_labels[&i].to_string(), train.labels()[i].to_string()]);
    out.csv("corruption.csv", &["index", "original_label", "flipped_label"], rows)
}

fn dataset_summary(p: &Prepared) -> Value {
    json!({
        "fingerprint": p.dataset_fingerprint,
        "train_fingerprint": p.train.fingerprint(),
        "n_train": p.split.train.n_rows(),
        "n_val": p.split.val.n_rows(),
        "n_test": p.split.test.n_rows(),
        "n_features": p.train.n_features(),
        "class_count": p.train.class_count(),
        "constant_columns": p.split.normalizer.constant_columns(),
        "flipped": p.corruption.flipped_indices.len(),
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a Settings,
    dataset: Option<Value>,
    diagnostics: Map<String, Value>,
    utility_evaluations: u64,
    outputs: Vec<String>,
}

fn finish(
    mut out: OutputDir,
    resolved: &Settings,
    dataset: Option<Value>,
    diagnostics: Map<String, Value>,
    utility_evaluations: u64,
    timings: Map<String, Value>,
) -> Result<()> {
    out.json("timing.json", &Value::Object(timings))?;
    let mut outputs = out.written().to_vec();
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        tool: "dataoob",
        version: env!("CARGO_PKG_VERSION"),
        command: resolved.command.map_or("", CommandKind::name),
        config: resolved,
        dataset,
        diagnostics,
        utility_evaluations,
        outputs,
    };
    out.json("manifest.json", &manifest)
}

/// Runs a resolved configuration and writes its outputs.
pub fn execute(resolved: &Settings, ctx: &RunContext) -> Result<()> {
    let start = Instant::now();
    let command = resolved
        .command
        .ok_or_else(|| Error::Config("missing command".into()))?;
    let mut out = OutputDir::create(&ctx.out_dir, manifest_hash(resolved))?;
    let mut timings = Map::new();
    if command == CommandKind::Bench {
        let summary = run_bench(resolved, &mut out)?;
        timings.insert("total_secs".into(), json!(start.elapsed().as_secs_f64()));
        return finish(out, resolved, None, summary, 0, timings);
    }

    let prepared = prepare(resolved, ctx)?;
    let method = resolved.method.unwrap_or(Method::Dataoob);
    let t = Instant::now();
    let valuation = valuate(resolved, &prepared.train, &prepared.split.val)?;
    timings.insert("valuation_secs".into(), json!(t.elapsed().as_secs_f64()));
    write_values(&mut out, method, &valuation)?;
    if !prepared.corruption.is_empty() {
        write_corruption(&mut out, &prepared.corruption, &prepared.train)?;
    }
    let mut diagnostics = valuation.diagnostics.clone();

    match command {
        CommandKind::Value => {}
        CommandKind::Detect => {
            let pr = precision_recall_curve(&valuation.values, &prepared.corruption)?;
            let det = f1_detection(&valuation.values, &prepared.corruption)?;
            out.csv(
                "pr_curve.csv",
                &["k", "threshold", "precision", "recall"],
                pr.points.iter().map(|p| {
                    vec![p.k.to_string(), fmt_f64(p.threshold), fmt_f64(p.precision), fmt_f64(p.recall)]
                }),
            )?;
            let body = json!({
                "method": method.name(),
                "f1": det.f1,
                "precision": det.precision,
                "recall": det.recall,
                "predicted": det.predicted.len(),
                "flipped": prepared.corruption.flipped_indices.len(),
                "boundary": det.boundary,
                "degenerate": det.degenerate,
                "auprc": pr.auprc,
                "undefined_ranked_first": pr.undefined_first,
                "clustering": "exact one-dimensional two-means by split enumeration",
            });
            out.json("detection.json", &body)?;
            diagnostics.insert("f1".into(), json!(det.f1));
        }
        CommandKind::Removal => {
            let stride = resolved.stride.unwrap_or(0.05);
            let test = &prepared.split.test;
            let t = Instant::now();
            let curve = point_removal_curve(method.name(), &valuation.values, &prepared.train, test, stride)?;
            let random = random_removal_curve(&prepared.train, test, stride, resolved.seed.unwrap_or(0))?;
            timings.insert("removal_secs".into(), json!(t.elapsed().as_secs_f64()));
            let rows = [&curve, &random].into_iter().flat_map(curve_rows).collect::<Vec<_>>();
            out.csv("removal.csv", &["method", "fraction", "removed", "accuracy", "single_class"], rows)?;
            write_pca(&mut out, &prepared, &valuation.values, &curve)?;
            let body = json!({
                "method": method.name(),
                "fractions": curve.fractions,
                "accuracy": curve.accuracies,
                "random_accuracy": random.accuracies,
            });
            out.json("removal.json", &body)?;
        }
        CommandKind::Bench => unreachable!("handled above"),
    }
    timings.insert("total_secs".into(), json!(start.elapsed().as_secs_f64()));
    finish(
        out,
        resolved,
        Some(dataset_summary(&prepared)),
        diagnostics,
        valuation.utility_evaluations,
        timings,
    )
}

fn curve_rows(c: &RemovalCurve) -> Vec<Vec<String>> {
    (0..c.fractions.len())
        .map(|i| {
            vec![
                c.method.clone(),
                fmt_f64(c.fractions[i]),
                c.removed[i].to_string(),
                fmt_f64(c.accuracies[i]),
                u8::from(c.single_class[i]).to_string(),
            ]
        })
        .collect()
}

/// Principal-component scores of the training points with their removal
/// rank, so that any removal fraction can be plotted as a snapshot.
fn write_pca(out: &mut OutputDir, p: &Prepared, values: &ValueVector, curve: &RemovalCurve) -> Result<()> {
    if p.train.n_features() < 2 {
        log::warn!("fewer than two features; skipping the principal-component snapshot");
        return Ok(());
    }
    let pca = pca2_projection(p.train.features(), p.train.n_features())?;
    let mut rank = vec![0; p.train.n_rows()];
    for (r, &i) in curve.order.iter().enumerate() {
        rank[i] = r;
    }
    let flipped = p.corruption.mask(p.train.n_rows());
    let rows = (0..p.train.n_rows()).map(|i| {
        vec![
            i.to_string(),
            fmt_f64(pca.scores[i][0]),
            fmt_f64(pca.scores[i][1]),
            fmt_f64(values.psi[i]),
            u8::from(flipped[i]).to_string(),
            p.train.labels()[i].to_string(),
            rank[i].to_string(),
        ]
    });
    out.csv("pca.csv", &["index", "pc1", "pc2", "value", "flipped", "label", "removal_rank"], rows)
}

fn run_bench(s: &Settings, out: &mut OutputDir) -> Result<Map<String, Value>> {
    let methods = s
        .methods
        .clone()
        .unwrap_or_else(|| vec![Method::Dataoob, Method::KnnShapley])
        .into_iter()
        .map(|m| match m {
            Method::Dataoob => Ok(BenchMethod::Dataoob),
            Method::KnnShapley => Ok(BenchMethod::KnnShapley),
            other => Err(Error::Config(format!("bench does not support method {}", other.name()))),
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = BenchSpec {
        methods,
        n_grid: s.n_grid.clone().unwrap_or_default(),
        d: s.dim.unwrap_or(10),
        b: s.b.unwrap_or(800),
        repetitions: s.repetitions.unwrap_or(5),
        seed: s.seed.unwrap_or(0),
        timeout_secs: s.timeout,
    };
    let records = bench_timing(&spec)?;
    let rows = records.iter().flat_map(|r| {
        r.seconds.iter().enumerate().map(move |(rep, secs)| {
            vec![
                r.method.name().to_string(),
                r.n.to_string(),
                r.d.to_string(),
                r.b.to_string(),
                rep.to_string(),
                fmt_f64(*secs),
            ]
        })
    });
    out.csv("bench.csv", &["method", "n", "d", "b", "repetition", "seconds"], rows)?;
    let mut slopes = Map::new();
    for m in &spec.methods {
        let pts: Vec<(usize, f64)> = records
            .iter()
            .filter(|r| r.method == *m && !r.censored)
            .map(|r| (r.n, r.mean_secs))
            .collect();
        slopes.insert(m.name().into(), json!(loglog_slope(&pts)));
    }
    let summary = json!({ "records": records, "loglog_slopes": slopes });
    out.json("bench_summary.json", &summary)?;
    let mut diagnostics = Map::new();
    diagnostics.insert("loglog_slopes".into(), Value::Object(slopes));
    Ok(diagnostics)
}

/// Downloads (or reuses) an OpenML dataset in the cache and returns the
/// canonical CSV path.
pub fn fetch(id: u64, cache_dir: &Path) -> Result<PathBuf> {
    let ds = fetch_openml(id, cache_dir)?;
    log::info!("OpenML {id}: {} rows, {} features, {} classes", ds.n_rows(), ds.n_features(), ds.class_count());
    Ok(cache_dir.join(id.to_string()).join("canonical.csv"))
}
