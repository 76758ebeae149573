use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use regionmark::attacks::{apply_attack, AttackConfig, AttackKind};
use regionmark::experiment::svg::{self, Panel, Series};
use regionmark::experiment::{cmd_ablate, cmd_bench_search, cmd_run, AblationAxis, ExperimentSpec};
use regionmark::gnn::{load_model, save_model, train, GcnModel, TrainConfig};
use regionmark::graph::{build_graph, grid_sample, LayoutGraph};
use regionmark::netlist::{parse_bookshelf, synth_design, write_bookshelf, Netlist, Placement, SynthParams};
use regionmark::place::{hpwl, place_flow, PlacerConfig, RegionConstraintSet};
use regionmark::watermark::{collect_labels, extract, insert, pwlr, region_size, search, WatermarkSecret};

/// Bad flags or inputs; exits with status 1.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "regionmark", version, about = "Region-constrained placement watermarking with a GCN-guided search")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct PlacerArgs {
    /// Initial density multiplier
    #[arg(long)]
    lambda: Option<f64>,
    /// Density bin width in sites
    #[arg(long)]
    bin_size: Option<u32>,
    #[arg(long)]
    max_global_iters: Option<usize>,
    #[arg(long)]
    detailed_passes: Option<usize>,
    /// Largest per-iteration move in sites
    #[arg(long)]
    step_size: Option<f64>,
}

impl PlacerArgs {
    fn config(&self, seed: u64) -> PlacerConfig {
        let mut c = PlacerConfig::default().with_seed(seed);
        if let Some(v) = self.lambda {
            c.lambda = v;
        }
        if let Some(v) = self.bin_size {
            c.bin_size = v;
        }
        if let Some(v) = self.max_global_iters {
            c.max_global_iters = v;
        }
        if let Some(v) = self.detailed_passes {
            c.detailed_passes = v;
        }
        if let Some(v) = self.step_size {
            c.step_size = v;
        }
        c
    }
}

#[derive(Args, Clone)]
struct OutDir {
    /// Output directory
    #[arg(long, env = "REGIONMARK_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic design as Bookshelf files
    Synth {
        #[arg(long, default_value_t = 2000)]
        cells: usize,
        /// Defaults to 1.1 nets per cell
        #[arg(long)]
        nets: Option<usize>,
        #[arg(long, default_value_t = 0.7)]
        util: f64,
        #[arg(long, default_value_t = 2)]
        macros: usize,
        #[arg(long, default_value_t = 1)]
        fences: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "synth")]
        name: String,
        #[command(flatten)]
        out: OutDir,
    },
    /// Place a design: global placement, legalization, detailed placement
    Place {
        aux: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        placer: PlacerArgs,
        #[command(flatten)]
        out: OutDir,
    },
    /// Collect degradation labels on a grid sample of a placed design
    Labels {
        aux: PathBuf,
        #[arg(long, default_value_t = 10)]
        n: u32,
        #[arg(long, default_value_t = 0.01)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        placer: PlacerArgs,
        #[command(flatten)]
        out: OutDir,
    },
    /// Train a model on labeled designs
    Train {
        /// Placed design; repeat once per labels file
        #[arg(long = "design", required = true)]
        designs: Vec<PathBuf>,
        /// Labels CSV from `labels`, paired with --design in order
        #[arg(long = "labels", required = true)]
        labels: Vec<PathBuf>,
        #[arg(long, default_value_t = 7)]
        depth: usize,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long, default_value_t = 40)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Score every candidate center with a trained model
    Search {
        aux: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        gamma: f64,
        #[arg(long, default_value_t = 2)]
        hops: usize,
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Watermark a placed design; writes the layout and the secret
    Insert {
        aux: PathBuf,
        /// Center cell; otherwise chosen by --model
        #[arg(long, conflicts_with = "model")]
        center: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        n: u32,
        #[arg(long, default_value_t = 0.2)]
        gamma: f64,
        #[arg(long, default_value_t = 2)]
        hops: usize,
        #[arg(long, default_value_t = 10)]
        max_attempts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        placer: PlacerArgs,
        #[command(flatten)]
        out: OutDir,
    },
    /// Report the extraction rate of a secret on a layout
    Extract {
        aux: PathBuf,
        #[arg(long)]
        secret: PathBuf,
    },
    /// Attack a layout
    Attack {
        aux: PathBuf,
        /// location-swap, constraint-perturb, optimization or adaptive-region
        #[arg(long)]
        kind: String,
        /// Cell fraction, or window count for adaptive-region
        #[arg(long, default_value_t = 0.001)]
        strength: f64,
        /// Region rows the adaptive attacker assumes
        #[arg(long, default_value_t = 10)]
        n: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        placer: PlacerArgs,
        #[command(flatten)]
        out: OutDir,
    },
    /// Run a full experiment from a TOML spec
    Run {
        /// Experiment spec; defaults apply when omitted
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the experiment file's output directory
        #[arg(long, env = "REGIONMARK_OUT")]
        out: Option<PathBuf>,
    },
    /// Time model scoring against label collection and window scoring
    BenchSearch {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, env = "REGIONMARK_OUT")]
        out: Option<PathBuf>,
    },
    /// Rerun the pipeline along one parameter axis
    Ablate {
        #[arg(long)]
        spec: Option<PathBuf>,
        /// beta, gamma, layers, features or lr
        #[arg(long)]
        axis: String,
        /// Comma-separated values; feature values join groups with `+`
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, env = "REGIONMARK_OUT")]
        out: Option<PathBuf>,
    },
}

fn stem(aux: &Path) -> String {
    aux.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "design".into())
}

fn load(aux: &Path) -> Result<(Netlist, Placement)> {
    Ok(parse_bookshelf(aux)?)
}

fn load_spec(path: Option<&Path>) -> Result<ExperimentSpec> {
    match path {
        Some(p) => Ok(ExperimentSpec::load(p)?),
        None => Ok(ExperimentSpec::default()),
    }
}

fn write_labels_csv(path: &Path, rows: &[(String, f64, f64, bool)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["cell", "raw", "label", "infeasible"])?;
    for (cell, raw, label, inf) in rows {
        let raw = if raw.is_finite() { format!("{raw:.6}") } else { "inf".into() };
        w.write_record([cell.clone(), raw, format!("{label:.6}"), inf.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn read_labels_csv(path: &Path, netlist: &Netlist, graph: &LayoutGraph) -> Result<Vec<(usize, f64)>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let (Some(cell), Some(label)) = (rec.get(0), rec.get(2)) else {
            return Err(usage(format!("{}: expected cell,raw,label,infeasible rows", path.display())));
        };
        let id = netlist.cell_by_name(cell).ok_or_else(|| usage(format!("{}: unknown cell `{cell}`", path.display())))?;
        let label: f64 = label.parse().map_err(|_| usage(format!("{}: bad label `{label}`", path.display())))?;
        out.push((graph.node_of_cell[id], label));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Synth { cells, nets, util, macros, fences, seed, name, out } => {
            if !(util > 0.0 && util <= 0.95) {
                return Err(usage(format!("--util {util} outside (0, 0.95]")));
            }
            let nets = nets.unwrap_or(cells + cells / 10);
            let (nl, pl) = synth_design(SynthParams::new(cells, nets, util, macros, fences, seed))?;
            let aux = write_bookshelf(&nl, &pl, &out.out, &name)?;
            println!("{} cells, {} nets -> {}", nl.cells.len(), nl.nets.len(), aux.display());
        }
        Cmd::Place { aux, seed, placer, out } => {
            let (nl, init) = load(&aux)?;
            let cfg = placer.config(seed);
            let pl = place_flow(&nl, &init, &RegionConstraintSet::from_fences(&nl), &cfg)?;
            let path = write_bookshelf(&nl, &pl, &out.out, &format!("{}_placed", stem(&aux)))?;
            println!("hpwl {:.1} -> {}", hpwl(&nl, &pl)?, path.display());
        }
        Cmd::Labels { aux, n, beta, seed, placer, out } => {
            let (nl, base) = load(&aux)?;
            let samples = grid_sample(&nl, &base, region_size(&nl, n), seed)?;
            let cfg = PlacerConfig { max_global_iters: 0, ..placer.config(seed) };
            let set = collect_labels(&nl, &base, &samples, &cfg, beta, n)?;
            let rows: Vec<_> = set.entries.iter().map(|e| (nl.cells[e.cell].name.clone(), e.raw, e.label, e.infeasible)).collect();
            std::fs::create_dir_all(&out.out)?;
            let path = out.out.join(format!("{}.labels.csv", stem(&aux)));
            write_labels_csv(&path, &rows)?;
            println!("{} labels ({} infeasible) in {:.2} s -> {}", rows.len(), set.num_infeasible(), set.seconds, path.display());
        }
        Cmd::Train { designs, labels, depth, hidden, epochs, batch_size, lr, seed, out } => {
            if designs.len() != labels.len() {
                return Err(usage("give one --labels file per --design"));
            }
            let mut graphs = Vec::new();
            let mut all = Vec::new();
            let mut offset = 0;
            for (aux, lpath) in designs.iter().zip(&labels) {
                let (nl, pl) = load(aux)?;
                let g = build_graph(&nl, &pl)?;
                all.extend(read_labels_csv(lpath, &nl, &g)?.into_iter().map(|(v, l)| (v + offset, l)));
                offset += g.num_nodes;
                graphs.push(g);
            }
            let refs: Vec<&LayoutGraph> = graphs.iter().collect();
            let union = LayoutGraph::disjoint_union(&refs)?;
            let base = TrainConfig::default();
            let cfg = TrainConfig { epochs, batch_size, learning_rate: lr, seed, fanouts: base.fanouts_for_depth(depth), ..base };
            let (model, losses) = train(&GcnModel::new(depth, hidden, seed)?, &union, &all, &cfg)?;
            std::fs::create_dir_all(&out.out)?;
            save_model(&model, &out.out.join("model.bin"))?;
            let curve = Panel {
                title: "Training loss".into(),
                x_label: "epoch".into(),
                y_label: "mean MSE".into(),
                series: vec![Series { name: "loss".into(), points: losses.iter().enumerate().map(|(i, &l)| ((i + 1) as f64, l)).collect() }],
                ..Default::default()
            };
            std::fs::write(out.out.join("loss-curve.svg"), svg::render(&[curve], 700.0, 360.0))?;
            let first = losses.first().copied().unwrap_or(f64::NAN);
            let last = losses.last().copied().unwrap_or(f64::NAN);
            println!("{} labels, loss {first:.4} -> {last:.4}; model -> {}", all.len(), out.out.join("model.bin").display());
        }
        Cmd::Search { aux, model, gamma, hops, top } => {
            let (nl, pl) = load(&aux)?;
            let g = build_graph(&nl, &pl)?;
            let m = load_model(&model)?;
            let res = search(&m, &g, gamma, hops)?;
            let mut ranked: Vec<usize> = (0..g.num_nodes).filter(|&v| g.is_eligible(v)).collect();
            ranked.sort_by(|&a, &b| res.combined[a].total_cmp(&res.combined[b]).then(a.cmp(&b)));
            println!("rank cell score combined");
            for (i, &v) in ranked.iter().take(top).enumerate() {
                println!("{} {} {:.6} {:.6}", i + 1, nl.cells[g.origin[v][0]].name, res.scores[v], res.combined[v]);
            }
        }
        Cmd::Insert { aux, center, model, n, gamma, hops, max_attempts, seed, placer, out } => {
            let (nl, base) = load(&aux)?;
            let cfg = PlacerConfig { max_global_iters: 0, ..placer.config(seed) };
            let candidates: Vec<usize> = match (&center, &model) {
                (Some(name), _) => vec![nl.cell_by_name(name).ok_or_else(|| usage(format!("unknown cell `{name}`")))?],
                (None, Some(path)) => {
                    let g = build_graph(&nl, &base)?;
                    let res = search(&load_model(path)?, &g, gamma, hops)?;
                    let mut ranked: Vec<usize> = (0..g.num_nodes).filter(|&v| g.is_eligible(v)).collect();
                    ranked.sort_by(|&a, &b| res.combined[a].total_cmp(&res.combined[b]).then(a.cmp(&b)));
                    ranked.into_iter().take(max_attempts).map(|v| g.origin[v][0]).collect()
                }
                (None, None) => return Err(usage("give --center or --model")),
            };
            let mut last = None;
            for (attempt, &c) in candidates.iter().enumerate() {
                let res = WatermarkSecret::capture(&nl, &base, c, n, seed).and_then(|s| insert(&nl, &base, &s, &cfg).map(|p| (s, p)));
                match res {
                    Ok((secret, pl)) => {
                        let path = write_bookshelf(&nl, &pl, &out.out, &format!("{}_wm", stem(&aux)))?;
                        let spath = out.out.join(format!("{}.secret.toml", stem(&aux)));
                        secret.save(&spath)?;
                        println!(
                            "center {} ({} members), attempt {}: pwlr {:.6}, wer {:.1} -> {}; secret -> {}",
                            secret.center,
                            secret.members.len(),
                            attempt + 1,
                            pwlr(&nl, &base, &pl)?,
                            extract(&nl, &pl, &secret)?,
                            path.display(),
                            spath.display()
                        );
                        return Ok(());
                    }
                    Err(e) => last = Some(e),
                }
            }
            return Err(last.map(anyhow::Error::from).unwrap_or_else(|| usage("no candidates")).context("no insertable region"));
        }
        Cmd::Extract { aux, secret } => {
            let (nl, pl) = load(&aux)?;
            let s = WatermarkSecret::load(&secret)?;
            println!("wer {:.3}", extract(&nl, &pl, &s)?);
        }
        Cmd::Attack { aux, kind, strength, n, seed, placer, out } => {
            let kind: AttackKind = kind.parse()?;
            let (nl, pl) = load(&aux)?;
            let attack = AttackConfig { kind, strength, seed };
            let attacked = apply_attack(&nl, &pl, &attack, region_size(&nl, n), &placer.config(seed))?;
            let path = write_bookshelf(&nl, &attacked, &out.out, &format!("{}_{}", stem(&aux), kind.as_str()))?;
            println!("{}: hpwl ratio {:.6} -> {}", attack.label(), pwlr(&nl, &pl, &attacked)?, path.display());
        }
        Cmd::Run { spec, seed, out } => {
            let mut s = load_spec(spec.as_deref())?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(out) = out {
                s.output = out;
            }
            let report = cmd_run(&s)?;
            println!("{:<10} {:<13} {:<26} {:>9} {:>8}  status", "design", "scheme", "attack", "pwlr", "wer");
            for r in &report.rows {
                let f = |v: Option<f64>, p: usize| v.map(|x| format!("{x:.p$}")).unwrap_or_else(|| "-".into());
                println!(
                    "{:<10} {:<13} {:<26} {:>9} {:>8}  {}",
                    r.design,
                    r.scheme.as_str(),
                    r.attack.as_deref().unwrap_or("none"),
                    f(r.pwlr, 4),
                    f(r.wer, 2),
                    r.status
                );
            }
            println!("artifacts in {}", report.output.display());
        }
        Cmd::BenchSearch { spec, out } => {
            let mut s = load_spec(spec.as_deref())?;
            if let Some(out) = out {
                s.output = out;
            }
            println!("{}", cmd_bench_search(&s)?);
        }
        Cmd::Ablate { spec, axis, values, out } => {
            let axis: AblationAxis = axis.parse()?;
            let mut s = load_spec(spec.as_deref())?;
            if let Some(out) = out {
                s.output = out;
            }
            let rows = cmd_ablate(&s, axis, &values)?;
            let f = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
            println!("{:<12} {:>9} {:>8} {:>9} {:>9}", axis.as_str(), "pwlr", "wer", "attempts", "failures");
            for r in rows {
                println!("{:<12} {:>9} {:>8} {:>9} {:>9}", r.value, f(r.mean_pwlr), f(r.mean_wer), f(r.mean_attempts), r.failures);
            }
        }
    }
    Ok(())
}

fn is_usage(e: &regionmark::Error) -> bool {
    match e {
        regionmark::Error::InvalidArgument(_) => true,
        regionmark::Error::Stage { source, .. } => is_usage(source),
        _ => false,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let usage = err.chain().any(|c| {
        c.downcast_ref::<Usage>().is_some() || c.downcast_ref::<regionmark::Error>().is_some_and(is_usage)
    });
    if usage {
        1
    } else {
        2
    }
}

/// The error chain, skipping causes whose text the previous message already ends with.
fn message(err: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut prev = String::new();
    for c in err.chain() {
        let m = c.to_string();
        if !prev.ends_with(&m) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&m);
        }
        prev = m;
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", message(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
