//! `msax` command-line front end.
//!
//! Exit codes: 0 success, 1 validation error (including bad arguments),
//! 2 incompatible artifacts, 3 I/O error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use msax::codebook::{assign, conscience_learn, entropy, hybrid_learn, kmeans_geodesic, ConscienceConfig, HybridConfig, KMeansConfig};
use msax::discover::{auto_radius_lut, find_motifs_lut, MotifQuery, SubsequenceMetric};
use msax::encode::encode_batch;
use msax::harness::{self, BenchConfig, Suite};
use msax::io::{
    load_codebook, load_dataset, load_encoded, save_codebook, save_dataset, save_encoded, save_motifs, to_text_lines,
    write_file, EncodedFile, Kind, MotifFile,
};
use msax::matching::{knn, loo_symbolic, nn_classify, symbol_distance, symbolic_dtw, SequenceDatabase};
use msax::synth::{gen_synthetic, Scenario};
use msax::{Codebook, Error, ErrorClass, Execution, Lut, Manifold, Result, SymbolSequence};

#[derive(Parser)]
#[command(name = "msax", version, about = "Symbolic approximation of manifold-valued time series")]
struct Cli {
    /// Run every batch loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Kmeans,
    Conscience,
    Hybrid,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Speed,
    Tradeoff,
    Bits,
    Entropy,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Rigid,
    Dtw,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset.
    Gen {
        #[arg(long)]
        manifold: Manifold,
        #[arg(long)]
        scenario: Scenario,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn a codebook from every frame of a dataset.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Alphabet size (kmeans, conscience).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 5)]
        stage1_k: usize,
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        alpha_final: Option<f64>,
        /// Win-rate smoothing factor.
        #[arg(long = "B")]
        b: Option<f64>,
        /// Conscience factor.
        #[arg(long = "C")]
        c: Option<f64>,
        #[arg(long)]
        passes: Option<usize>,
        /// K-means iteration cap.
        #[arg(long, default_value_t = 100)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode every sequence of a dataset.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long, default_value_t = 1)]
        window: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write `id<TAB>string` lines.
        #[arg(long)]
        text_out: Option<PathBuf>,
    },
    /// Distance between two encodings (first sequence of each file unless an id is given).
    Match {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        a_id: Option<String>,
        #[arg(long)]
        b_id: Option<String>,
        #[arg(long)]
        codebook: PathBuf,
        /// Lookup-table DTW instead of the position-wise distance.
        #[arg(long)]
        dtw: bool,
    },
    /// Nearest database entries for every query sequence.
    Knn {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// 1-NN labels for a test set, or leave-one-out accuracy on the database.
    Classify {
        #[arg(long)]
        db: PathBuf,
        #[arg(long, required_unless_present = "loo")]
        test: Option<PathBuf>,
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long)]
        loo: bool,
    },
    /// Motif discovery on one encoded sequence.
    Discover {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        len: usize,
        /// A distance, or `auto` for the 5th percentile of pairwise distances.
        #[arg(long, default_value = "auto")]
        radius: String,
        /// Trivial-match neighbourhood; defaults to the motif length.
        #[arg(long)]
        trivial: Option<usize>,
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[arg(long, value_enum, default_value = "rigid")]
        metric: MetricArg,
        /// Symbol distances; without it every mismatch costs 1.
        #[arg(long)]
        codebook: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entropy of nearest-symbol labels over every frame of a dataset.
    Entropy {
        #[arg(long)]
        labels_from: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
    },
    /// Run a benchmark suite and write the report.
    Bench {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        out: PathBuf,
        /// Time the rayon path instead of a single thread.
        #[arg(long)]
        parallel: bool,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Shrink every workload.
        #[arg(long)]
        smoke: bool,
    },
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn pick(file: &EncodedFile, id: Option<&str>) -> Result<SymbolSequence> {
    match id {
        Some(id) => file.sequences.iter().find(|s| s.id == id).cloned().ok_or_else(|| invalid(format!("no sequence `{id}`"))),
        None => file.sequences.first().cloned().ok_or(Error::EmptyInput("encoded file")),
    }
}

fn database(path: &PathBuf, cb: &Codebook) -> Result<SequenceDatabase> {
    let file = load_encoded(path)?;
    cb.ensure_id(&file.codebook_id)?;
    SequenceDatabase::from_entries(file.codebook_id, file.sequences)
}

/// Pretty JSON on stdout; a closed pipe is not an error.
fn print(v: Value) {
    let text = serde_json::to_string_pretty(&v).expect("JSON values serialize");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn labels_entropy(points: &[msax::ManifoldPoint], cb: &Codebook) -> Result<(f64, Vec<usize>)> {
    let labels = points.iter().map(|p| assign(p, cb)).collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0usize; cb.len()];
    for &l in &labels {
        counts[l] += 1;
    }
    Ok((entropy(&labels, cb.len())?, counts))
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match cli.command {
        Command::Gen {
            manifold,
            scenario,
            seed,
            out,
        } => {
            let data = gen_synthetic(manifold, &scenario, seed)?;
            save_dataset(&out, &data)?;
            let frames: usize = data.sequences.iter().map(|s| s.len()).sum();
            print(json!({"out": out, "sequences": data.sequences.len(), "frames": frames}));
        }
        Command::Train {
            input,
            method,
            k,
            stage1_k,
            r,
            alpha,
            alpha_final,
            b,
            c,
            passes,
            iters,
            seed,
            out,
        } => {
            let points = load_dataset(&input)?.pooled_points();
            let conscience = |k: usize| {
                let mut cfg = ConscienceConfig::new(k, seed);
                cfg.alpha = alpha.unwrap_or(cfg.alpha);
                cfg.alpha_final = alpha_final.unwrap_or(cfg.alpha_final);
                cfg.win_rate_factor = b.unwrap_or(cfg.win_rate_factor);
                cfg.conscience_factor = c.unwrap_or(cfg.conscience_factor);
                cfg.max_passes = passes.unwrap_or(cfg.max_passes);
                cfg.exec = exec;
                cfg.track_entropy = false;
                cfg
            };
            let need_k = || k.ok_or_else(|| invalid("--k is required for this method"));
            let cb = match method {
                Method::Kmeans => {
                    let mut cfg = KMeansConfig::new(need_k()?, seed);
                    cfg.max_iters = iters;
                    cfg.exec = exec;
                    kmeans_geodesic(&points, &cfg)?.codebook
                }
                Method::Conscience => conscience_learn(&points, &conscience(need_k()?), None)?.codebook,
                Method::Hybrid => {
                    if k.is_some() {
                        return Err(invalid("hybrid training derives K from --stage1-k and --r; drop --k"));
                    }
                    let mut cfg = HybridConfig::new(stage1_k, r, seed);
                    cfg.kmeans_iters = iters;
                    cfg.conscience = conscience(2);
                    hybrid_learn(&points, &cfg)?.codebook
                }
            };
            save_codebook(&out, &cb)?;
            let (h, counts) = labels_entropy(&points, &cb)?;
            print(json!({"out": out, "id": cb.id(), "k": cb.len(), "entropy_bits": h, "counts": counts}));
        }
        Command::Encode {
            input,
            codebook,
            window,
            out,
            text_out,
        } => {
            let data = load_dataset(&input)?;
            let cb = load_codebook(&codebook)?;
            let enc = encode_batch(&data.sequences, &cb, window, exec)?;
            let file = EncodedFile::new(cb.id(), window, enc)?;
            save_encoded(&out, &file)?;
            if let Some(path) = text_out {
                std::fs::write(path, to_text_lines(&file, &cb)?)?;
            }
            let symbols: usize = file.sequences.iter().map(|s| s.len()).sum();
            print(json!({"out": out, "sequences": file.sequences.len(), "symbols": symbols}));
        }
        Command::Match {
            a,
            b,
            a_id,
            b_id,
            codebook,
            dtw,
        } => {
            let cb = load_codebook(&codebook)?;
            let p = pick(&load_encoded(&a)?, a_id.as_deref())?;
            let q = pick(&load_encoded(&b)?, b_id.as_deref())?;
            let d = if dtw { symbolic_dtw(&p, &q, &cb)? } else { symbol_distance(&p, &q, &cb)? };
            print(json!({"a": p.id, "b": q.id, "metric": if dtw { "dtw" } else { "rigid" }, "distance": d}));
        }
        Command::Knn { query, db, codebook, k } => {
            let cb = load_codebook(&codebook)?;
            let db = database(&db, &cb)?;
            let queries = load_encoded(&query)?;
            let mut out = Vec::new();
            for q in &queries.sequences {
                let hits = knn(q, &db, &cb, k, exec)?;
                out.push(json!({"query": q.id, "neighbors": hits}));
            }
            print(Value::Array(out));
        }
        Command::Classify { db, test, codebook, loo } => {
            let cb = load_codebook(&codebook)?;
            let db = database(&db, &cb)?;
            if loo {
                let report = loo_symbolic(&db, &cb, exec)?;
                let rows: Vec<Value> = db
                    .entries()
                    .iter()
                    .zip(report.predictions.iter().zip(&report.truth))
                    .map(|(e, (p, t))| json!({"id": e.id, "predicted": p, "truth": t}))
                    .collect();
                print(json!({"mode": "leave_one_out", "accuracy": report.accuracy, "predictions": rows}));
            } else {
                let test = load_encoded(test.as_ref().expect("clap enforces --test without --loo"))?;
                cb.ensure_id(&test.codebook_id)?;
                let mut rows = Vec::new();
                let (mut labelled, mut correct) = (0usize, 0usize);
                for q in &test.sequences {
                    let predicted = nn_classify(q, &db, &cb)?;
                    if let Some(t) = &q.label {
                        labelled += 1;
                        correct += usize::from(*t == predicted);
                    }
                    rows.push(json!({"id": q.id, "predicted": predicted, "truth": q.label}));
                }
                let accuracy = (labelled > 0).then(|| correct as f64 / labelled as f64);
                print(json!({"mode": "test", "accuracy": accuracy, "predictions": rows}));
            }
        }
        Command::Discover {
            input,
            id,
            len,
            radius,
            trivial,
            top,
            metric,
            codebook,
            seed,
            out,
        } => {
            let file = load_encoded(&input)?;
            let t = pick(&file, id.as_deref())?;
            let (lut, table) = match &codebook {
                Some(path) => {
                    let cb = load_codebook(path)?;
                    cb.ensure_id(&t.codebook_id)?;
                    (cb.lut().clone(), "codebook")
                }
                None => {
                    let k = t.symbols.iter().max().map_or(1, |&m| m as usize + 1);
                    (Lut::discrete(k), "mismatch")
                }
            };
            let trivial = trivial.unwrap_or(len);
            let r = if radius == "auto" {
                auto_radius_lut(&t, len, trivial, &lut, 200_000, seed)?
            } else {
                radius.parse().map_err(|_| invalid(format!("--radius must be a number or `auto`, got `{radius}`")))?
            };
            let mut q = MotifQuery::new(len, r, trivial, top);
            q.metric = match metric {
                MetricArg::Rigid => SubsequenceMetric::Rigid,
                MetricArg::Dtw => SubsequenceMetric::Dtw,
            };
            let motifs = find_motifs_lut(&t, &q, &lut, exec)?;
            let mut notes = BTreeMap::new();
            notes.insert("radius".into(), if radius == "auto" { "auto" } else { "given" }.into());
            notes.insert("table".into(), table.into());
            let result = MotifFile {
                codebook_id: t.codebook_id.clone(),
                source_id: t.id.clone(),
                query: q,
                motifs,
                notes,
            };
            if let Some(path) = &out {
                save_motifs(path, &result)?;
            }
            print(serde_json::to_value(&result)?);
        }
        Command::Entropy { labels_from, codebook } => {
            let cb = load_codebook(&codebook)?;
            let data = load_dataset(&labels_from)?;
            if data.descriptor != *cb.manifold() {
                return Err(Error::IncompatibleManifolds {
                    expected: *cb.manifold(),
                    found: data.descriptor,
                });
            }
            let (h, counts) = labels_entropy(&data.pooled_points(), &cb)?;
            let max = (cb.len() as f64).log2();
            print(json!({"entropy_bits": h, "max_bits": max, "normalized": h / max, "counts": counts}));
        }
        Command::Bench {
            suite,
            out,
            parallel,
            reps,
            seed,
            smoke,
        } => {
            let mut cfg = BenchConfig::new(match suite {
                SuiteArg::Speed => Suite::Speed,
                SuiteArg::Tradeoff => Suite::Tradeoff,
                SuiteArg::Bits => Suite::Bits,
                SuiteArg::Entropy => Suite::Entropy,
            });
            cfg.reps = reps;
            cfg.seed = seed;
            cfg.smoke = smoke;
            cfg.exec = if parallel { Execution::Parallel } else { Execution::Sequential };
            let report = harness::run(&cfg)?;
            write_file(&out, Kind::BenchReport, &report)?;
            print(json!({"out": out, "suite": cfg.suite.to_string(), "timings": report.timings.len()}));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Validation => 1,
                ErrorClass::Incompatible => 2,
                ErrorClass::Io => 3,
            })
        }
    }
}
