//! `sbrepr` command-line tool.
//!
//! Exit codes: 0 ok, 1 input or numerical error, 2 strong branching undefined
//! (relaxation infeasible or unbounded), 3 instance not MP-tractable.
//! Indices in reports are 1-based where they name constraints or variables;
//! plain JSON vectors (scores, solutions) are positional.

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use sbrepr::fwl::{comparison_report, fwl2_compare, fwl2_indistinguishable, fwl2_indistinguishable_w};
use sbrepr::gen::{counterexample_pair, gen_random, gen_set_cover, sb_dataset};
use sbrepr::instance::{build_graph, Bound, MilpInstance};
use sbrepr::lp::{solve_lp, BoundOverride, LpOutcome};
use sbrepr::nn::io::write_params;
use sbrepr::nn::{forward, init_params, train_with, Arch, Sample, TrainConfig, DEFAULT_DIM, DEFAULT_LAYERS};
use sbrepr::sb::{sb_scores, ScoreRule, SbError};
use sbrepr::wl::{is_mp_tractable, partition_report, wl_indistinguishable};

#[derive(Parser)]
#[command(name = "sbrepr", version, about = "Strong branching scores, WL tests and GNN fitting for MILPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stable WL partition and MP-tractability verdict (exit 3 if intractable).
    CheckTractability { instance: PathBuf },
    /// Strong-branching scores of every variable.
    SbScore {
        instance: PathBuf,
        /// `product` or `linear:MU` with MU in [0, 1].
        #[arg(long, default_value = "product")]
        rule: ScoreRule,
    },
    /// 2-FWL equivalence verdicts for two instances of equal size.
    Fwl2Compare { a: PathBuf, b: PathBuf },
    /// Fit a GNN to strong-branching scores with full-batch Adam.
    Train {
        #[arg(long, value_parser = parse_arch)]
        arch: Arch,
        /// Directory of instance files, or `counterexample`.
        #[arg(long)]
        data: String,
        #[arg(long, default_value_t = DEFAULT_DIM)]
        dim: usize,
        #[arg(long, default_value_t = DEFAULT_LAYERS)]
        layers: usize,
        #[arg(long, default_value_t = 1000)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stop early once the loss is at or below this value.
        #[arg(long)]
        target_loss: Option<f64>,
        /// Print progress to stderr every this many epochs (0 disables).
        #[arg(long, default_value_t = 0)]
        log_every: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Combined report on the 8-cycle / 3+3+2-cycle pair.
    ReproduceCounterexample {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random MP-GNN parameterizations to compare.
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Write random instances, one JSON file per seed, plus a manifest.
    Generate {
        #[arg(long, value_enum, default_value = "random")]
        family: Family,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        m: usize,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 60)]
        nnz: usize,
        /// Set-cover density.
        #[arg(long, default_value_t = 0.05)]
        density: f64,
        /// Random family only: skip seeds whose strong-branching scores are
        /// undefined.
        #[arg(long)]
        defined_sb: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Random,
    Setcover,
}

fn parse_arch(s: &str) -> Result<Arch, String> {
    s.parse()
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    UndefinedSb(SbError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::UndefinedSb(_) => 2,
        }
    }
}

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Input(format!("{context}: {e}"))
}

fn read_instance(path: &Path) -> Result<MilpInstance, CliError> {
    let bytes = fs::read(path).map_err(input(path.display()))?;
    MilpInstance::from_json(&bytes).map_err(input(path.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(input(path.display()))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON value serializes"));
}

fn sb_error(e: SbError) -> CliError {
    match e {
        SbError::RelaxationInfeasible | SbError::RelaxationUnbounded => CliError::UndefinedSb(e),
        other => CliError::Input(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors; 2 is reserved here
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::CheckTractability { instance } => {
            let t = is_mp_tractable(&read_instance(&instance)?);
            print_json(&partition_report(&t));
            Ok(if t.tractable { 0 } else { 3 })
        }
        Command::SbScore { instance, rule } => {
            let scores = sb_scores(&read_instance(&instance)?, rule).map_err(sb_error)?;
            let mut report = serde_json::to_value(&scores).expect("scores serialize");
            report["rule"] = json!(rule.to_string());
            print_json(&report);
            Ok(0)
        }
        Command::Fwl2Compare { a, b } => {
            let (ga, gb) = (build_graph(&read_instance(&a)?), build_graph(&read_instance(&b)?));
            let c = fwl2_compare(&ga, &gb).map_err(input("fwl2-compare"))?;
            print_json(&comparison_report(&c));
            Ok(0)
        }
        Command::Train {
            arch,
            data,
            dim,
            layers,
            epochs,
            seed,
            target_loss,
            log_every,
            out,
        } => train_cmd(arch, &data, dim, layers, epochs, seed, target_loss, log_every, &out),
        Command::ReproduceCounterexample { seed, trials } => {
            print_json(&counterexample_report(seed, trials)?);
            Ok(0)
        }
        Command::Generate {
            family,
            count,
            seed,
            m,
            n,
            nnz,
            density,
            defined_sb,
            out,
        } => generate_cmd(family, count, seed, (m, n, nnz), density, defined_sb, &out),
    }
}

/// Samples with product-rule SB targets; instances with undefined scores are
/// skipped and counted.
fn load_samples(data: &str) -> Result<(Vec<Sample>, Vec<String>), CliError> {
    let instances: Vec<(String, MilpInstance)> = if data == "counterexample" {
        let (g7, g8) = counterexample_pair();
        vec![("cycle8".into(), g7), ("cycles332".into(), g8)]
    } else {
        let dir = Path::new(data);
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(input(dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|f| f != "manifest.json"))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(CliError::Input(format!("{}: no instance files", dir.display())));
        }
        paths
            .iter()
            .map(|p| Ok((p.display().to_string(), read_instance(p)?)))
            .collect::<Result<_, CliError>>()?
    };
    let mut samples = Vec::with_capacity(instances.len());
    let mut skipped = Vec::new();
    for (name, inst) in instances {
        match sb_scores(&inst, ScoreRule::Product) {
            Ok(s) => samples.push(Sample {
                graph: build_graph(&inst),
                target: s.scores,
            }),
            Err(SbError::RelaxationInfeasible | SbError::RelaxationUnbounded) => skipped.push(name),
            Err(e) => return Err(CliError::Input(format!("{name}: {e}"))),
        }
    }
    Ok((samples, skipped))
}

#[allow(clippy::too_many_arguments)]
fn train_cmd(
    arch: Arch,
    data: &str,
    dim: usize,
    layers: usize,
    epochs: usize,
    seed: u64,
    target_loss: Option<f64>,
    log_every: usize,
    out: &Path,
) -> Result<u8, CliError> {
    if dim == 0 || layers == 0 {
        return Err(CliError::Input("--dim and --layers must be positive".into()));
    }
    let (samples, skipped) = load_samples(data)?;
    fs::create_dir_all(out).map_err(input(out.display()))?;
    let cfg = TrainConfig {
        max_epochs: epochs,
        target_loss,
        ..TrainConfig::default()
    };
    let params = init_params(arch, dim, layers, seed);
    let outcome = train_with(params, &samples, &cfg, |r| {
        if log_every > 0 && r.epoch % log_every == 0 {
            eprintln!("epoch {} loss {:e} lr {:e}", r.epoch, r.loss, r.lr);
        }
    })
    .map_err(input("training"))?;

    let mut csv = Vec::new();
    outcome.curve.write_csv(&mut csv).map_err(input("loss.csv"))?;
    write_file(&out.join("loss.csv"), csv)?;
    let points: Vec<(usize, f64)> = outcome.curve.records.iter().map(|r| (r.epoch, r.loss)).collect();
    write_file(
        &out.join("loss.svg"),
        svg::loss_chart(&format!("{arch}, d = {dim}, L = {layers}"), &points),
    )?;
    let mut bin = Vec::new();
    write_params(&outcome.params, &mut bin).map_err(input("params.bin"))?;
    write_file(&out.join("params.bin"), bin)?;

    let report = json!({
        "arch": arch.to_string(),
        "dim": dim,
        "layers": layers,
        "seed": seed,
        "samples": samples.len(),
        "skipped": skipped,
        "epochs_run": outcome.curve.len(),
        "final_loss": outcome.final_loss,
        "min_loss": outcome.curve.min_loss(),
        "reached_target": target_loss.map(|_| outcome.reached_target),
        "first_epoch_below_1e-6": outcome.curve.first_epoch_below(1e-6),
        "num_params": outcome.params.num_params(),
    });
    write_file(&out.join("final.json"), serde_json::to_string_pretty(&report).expect("serializes"))?;
    print_json(&report);
    Ok(0)
}

fn counterexample_report(seed: u64, trials: usize) -> Result<Value, CliError> {
    let (g7, g8) = counterexample_pair();
    let (graph7, graph8) = (build_graph(&g7), build_graph(&g8));
    let sb7 = sb_scores(&g7, ScoreRule::Product).map_err(sb_error)?;
    let sb8 = sb_scores(&g8, ScoreRule::Product).map_err(sb_error)?;

    let mut children = Vec::new();
    for (lower, upper) in [(0.0, 0.0), (1.0, 1.0)] {
        let o = BoundOverride {
            var: 0,
            lower: Bound::Finite(lower),
            upper: Bound::Finite(upper),
        };
        let f = match solve_lp(&g8, Some(&o)).map_err(input("child LP"))? {
            LpOutcome::Optimal(s) => json!(s.objective),
            LpOutcome::Infeasible => json!("infeasible"),
            LpOutcome::Unbounded => json!("unbounded"),
        };
        children.push(f);
    }

    let mut max_diff: f64 = 0.0;
    let mut max_spread: f64 = 0.0;
    for k in 0..trials {
        let dim = if k % 2 == 0 { 8 } else { 64 };
        let params = init_params(Arch::MpGnn, dim, DEFAULT_LAYERS, seed.wrapping_add(k as u64));
        let y7 = forward(&params, &graph7).map_err(input("MP-GNN"))?;
        let y8 = forward(&params, &graph8).map_err(input("MP-GNN"))?;
        for y in [&y7, &y8] {
            let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            max_spread = max_spread.max(hi - lo);
        }
        max_diff = y7.iter().zip(&y8).fold(max_diff, |acc, (a, b)| acc.max((a - b).abs()));
    }

    let t7 = is_mp_tractable(&g7);
    let t8 = is_mp_tractable(&g8);
    let wl_same = wl_indistinguishable(&graph7, &graph8).map_err(input("comparison"))?;
    let fwl_same = fwl2_indistinguishable(&graph7, &graph8).map_err(input("comparison"))?;
    let fwl_same_w = fwl2_indistinguishable_w(&graph7, &graph8).map_err(input("comparison"))?;
    Ok(json!({
        "seed": seed,
        "sb": {"cycle8": sb7, "cycles332": sb8},
        "cycles332_x1_children": {"x1=0": children[0], "x1=1": children[1]},
        "wl_indistinguishable": wl_same,
        "mp_tractable": {"cycle8": t7.tractable, "cycles332": t8.tractable},
        "fwl2": {"similar": fwl_same, "similar_w": fwl_same_w, "separates": !fwl_same},
        "mpgnn_identity": {
            "trials": trials,
            "dims": [8, 64],
            "max_abs_difference": max_diff,
            "max_within_output_spread": max_spread,
            "identical_within_1e-12": max_diff <= 1e-12 && max_spread <= 1e-12,
        },
    }))
}

fn generate_cmd(
    family: Family,
    count: usize,
    seed: u64,
    shape: (usize, usize, usize),
    density: f64,
    defined_sb: bool,
    out: &Path,
) -> Result<u8, CliError> {
    let (m, n, nnz) = shape;
    let mut instances: Vec<(u64, MilpInstance)> = Vec::with_capacity(count);
    let mut manifest = json!({"count": count, "seed": seed});
    match family {
        Family::Random => {
            if nnz > m * n {
                return Err(CliError::Input(format!("--nnz {nnz} exceeds m*n = {}", m * n)));
            }
            manifest["family"] = json!("random");
            manifest["shape"] = json!({"m": m, "n": n, "nnz": nnz});
            if defined_sb {
                let ds = sb_dataset(seed, count, shape, ScoreRule::Product, 1000 * count.max(1))
                    .map_err(|d| CliError::Input(format!("only {} of {count} instances had defined scores", d.items.len())))?;
                manifest["rejected"] = json!({
                    "infeasible": ds.rejected_infeasible,
                    "unbounded": ds.rejected_unbounded,
                    "numerical": ds.rejected_numerical,
                });
                instances.extend(ds.items.into_iter().map(|it| (it.seed, it.instance)));
            } else {
                instances.extend((0..count as u64).map(|k| (seed + k, gen_random(seed + k, m, n, nnz))));
            }
        }
        Family::Setcover => {
            if !(density > 0.0 && density <= 1.0) {
                return Err(CliError::Input(format!("--density {density} is not in (0, 1]")));
            }
            if m == 0 || n == 0 {
                return Err(CliError::Input("set cover needs at least one row and column".into()));
            }
            manifest["family"] = json!("setcover");
            manifest["shape"] = json!({"rows": m, "cols": n, "density": density});
            instances.extend((0..count as u64).map(|k| (seed + k, gen_set_cover(seed + k, m, n, density))));
        }
    }
    fs::create_dir_all(out).map_err(input(out.display()))?;
    let mut files = Vec::with_capacity(instances.len());
    for (s, inst) in &instances {
        let name = format!("instance_{s:08}.json");
        write_file(&out.join(&name), inst.to_json_pretty())?;
        files.push(json!({"seed": s, "file": name}));
    }
    manifest["files"] = json!(files);
    write_file(&out.join("manifest.json"), serde_json::to_string_pretty(&manifest).expect("serializes"))?;
    print_json(&manifest);
    Ok(0)
}
