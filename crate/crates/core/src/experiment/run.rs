use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::svg::{self, Panel, Series};
use super::{ExperimentSpec, Scheme};
use crate::attacks::apply_attack;
use crate::baselines::{
    buffer_extract, buffer_insert, cell_scatter_extract, cell_scatter_insert, icmarks_search, row_parity_extract,
    row_parity_insert, BufferKey, RowParityKey, ScatterKey, Signature,
};
use crate::error::{Error, Result, StageExt};
use crate::gnn::{forward, load_model, save_model, train, GcnModel, TrainConfig};
use crate::graph::{build_graph, grid_sample, LayoutGraph};
use crate::netlist::{parse_bookshelf, synth_design, Netlist, Placement, SynthParams};
use crate::place::{hpwl, place_flow, PlacerConfig, RegionConstraintSet};
use crate::rng::sub_seed;
use crate::watermark::{collect_labels, extract, insert, region_size, search, transform_label, WatermarkSecret};

/// Column names of metrics.csv, in order.
pub const METRICS_HEADER: [&str; 9] = ["design", "cells", "nets", "scheme", "attack", "pwlr", "wer", "attempts", "status"];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub design: String,
    pub cells: usize,
    pub nets: usize,
    pub scheme: Scheme,
    /// Attack label, or None for the freshly watermarked layout.
    pub attack: Option<String>,
    pub pwlr: Option<f64>,
    pub wer: Option<f64>,
    /// Candidates tried by a region scheme; 1 for the others.
    pub attempts: usize,
    /// Wall time of the center or window search; kept out of metrics.csv.
    pub search_seconds: f64,
    /// "ok", or the error that stopped this row.
    pub status: String,
}

impl MetricsRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn record(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        vec![
            self.design.clone(),
            self.cells.to_string(),
            self.nets.to_string(),
            self.scheme.as_str().to_string(),
            self.attack.clone().unwrap_or_else(|| "none".into()),
            num(self.pwlr),
            num(self.wer),
            self.attempts.to_string(),
            self.status.clone(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub rows: Vec<MetricsRow>,
    /// Mean loss per training epoch; empty when the model was loaded.
    pub losses: Vec<f64>,
    pub num_labels: usize,
    pub num_infeasible: usize,
    pub output: PathBuf,
}

pub(crate) struct TestDesign {
    pub name: String,
    pub netlist: Netlist,
    pub baseline: Placement,
    pub graph: LayoutGraph,
    pub place_seconds: f64,
}

fn synth_params(spec: &ExperimentSpec, seed: u64) -> SynthParams {
    let d = &spec.design;
    SynthParams::new(d.cells, d.nets, d.util, d.macros, d.fences, seed)
}

fn place_design(spec: &ExperimentSpec, name: String, netlist: Netlist, init: &Placement) -> Result<TestDesign> {
    let start = Instant::now();
    let cfg = spec.placer.clone().with_seed(sub_seed(spec.seed, &format!("place/{name}")));
    let baseline = place_flow(&netlist, init, &RegionConstraintSet::from_fences(&netlist), &cfg)?;
    let place_seconds = start.elapsed().as_secs_f64();
    let graph = build_graph(&netlist, &baseline)?;
    Ok(TestDesign { name, netlist, baseline, graph, place_seconds })
}

pub(crate) fn test_design(spec: &ExperimentSpec, i: usize) -> Result<TestDesign> {
    let (name, netlist, init) = match &spec.design.aux {
        Some(aux) => {
            let (nl, pl) = parse_bookshelf(aux)?;
            let stem = aux.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "design".into());
            (stem, nl, pl)
        }
        None => {
            let (nl, pl) = synth_design(synth_params(spec, sub_seed(spec.seed, &format!("design/{i}"))))?;
            (format!("synth{i}"), nl, pl)
        }
    };
    place_design(spec, name, netlist, &init)
}

pub(crate) fn test_designs(spec: &ExperimentSpec) -> Result<Vec<TestDesign>> {
    let count = if spec.design.aux.is_some() { 1 } else { spec.design.count };
    (0..count).map(|i| test_design(spec, i)).collect()
}

fn incremental(spec: &ExperimentSpec, seed: u64) -> PlacerConfig {
    PlacerConfig { max_global_iters: 0, ..spec.placer.clone() }.with_seed(seed)
}

/// Raw wirelength ratios of sampled centers across all training designs,
/// keyed by node of the union graph.
pub(crate) struct TrainingData {
    pub union: LayoutGraph,
    pub raw: Vec<(usize, f64)>,
    pub num_infeasible: usize,
    pub seconds: f64,
}

impl TrainingData {
    pub fn labels(&self, beta: f64) -> Vec<(usize, f64)> {
        self.raw.iter().map(|&(v, r)| (v, if r.is_finite() { transform_label(r, beta) } else { 1.0 })).collect()
    }
}

pub(crate) fn collect_training(spec: &ExperimentSpec) -> Result<TrainingData> {
    let mut graphs = Vec::new();
    let mut raw = Vec::new();
    let mut num_infeasible = 0;
    let mut seconds = 0.0;
    let mut offset = 0;
    let n = spec.watermark.n;
    for i in 0..spec.model.train_designs {
        let (nl, init) = synth_design(synth_params(spec, sub_seed(spec.seed, &format!("train-design/{i}"))))?;
        let d = place_design(spec, format!("train{i}"), nl, &init)?;
        for k in 0..spec.model.draws {
            let samples = grid_sample(&d.netlist, &d.baseline, region_size(&d.netlist, n), sub_seed(spec.seed, &format!("sample/{i}/{k}")))?;
            let cfg = incremental(spec, sub_seed(spec.seed, &format!("labels/{i}/{k}")));
            let set = collect_labels(&d.netlist, &d.baseline, &samples, &cfg, spec.watermark.beta, n)?;
            num_infeasible += set.num_infeasible();
            seconds += set.seconds;
            raw.extend(set.entries.iter().map(|e| (d.graph.node_of_cell[e.cell] + offset, e.raw)));
        }
        offset += d.graph.num_nodes;
        graphs.push(d.graph);
    }
    let parts: Vec<&LayoutGraph> = graphs.iter().collect();
    Ok(TrainingData { union: LayoutGraph::disjoint_union(&parts)?, raw, num_infeasible, seconds })
}

pub(crate) fn train_model(spec: &ExperimentSpec, data: &TrainingData) -> Result<(GcnModel, Vec<f64>)> {
    let m = &spec.model;
    let graph = data.union.with_zeroed_columns(&spec.zeroed_columns()?);
    let init = GcnModel::new(m.depth, m.hidden, sub_seed(spec.seed, "model-init"))?;
    let cfg = TrainConfig { fanouts: m.train.fanouts_for_depth(m.depth), seed: sub_seed(spec.seed, "train"), ..m.train.clone() };
    train(&init, &graph, &data.labels(spec.watermark.beta), &cfg)
}

pub(crate) enum Marked {
    Region(WatermarkSecret),
    RowParity(RowParityKey, Signature),
    Scatter(ScatterKey, Signature),
    Buffer(BufferKey, Signature),
}

pub(crate) struct Inserted {
    pub marked: Marked,
    /// The edited netlist when the scheme adds cells.
    pub netlist: Option<Netlist>,
    pub placement: Placement,
    pub attempts: usize,
    pub search_seconds: f64,
}

impl Inserted {
    pub fn netlist<'a>(&'a self, original: &'a Netlist) -> &'a Netlist {
        self.netlist.as_ref().unwrap_or(original)
    }

    pub fn extract(&self, netlist: &Netlist, placement: &Placement) -> Result<f64> {
        match &self.marked {
            Marked::Region(s) => extract(netlist, placement, s),
            Marked::RowParity(k, sig) => row_parity_extract(netlist, placement, k, sig),
            Marked::Scatter(k, sig) => cell_scatter_extract(netlist, placement, k, sig),
            Marked::Buffer(k, sig) => buffer_extract(netlist, k, sig),
        }
    }
}

/// Tries region candidates in order until one inserts.
fn first_insertable(
    spec: &ExperimentSpec,
    d: &TestDesign,
    candidates: impl Iterator<Item = Result<WatermarkSecret>>,
    search_seconds: f64,
) -> Result<Inserted> {
    let mut last = Error::Empty("no candidate regions".into());
    for (attempt, secret) in candidates.take(spec.watermark.max_attempts).enumerate() {
        let cfg = incremental(spec, sub_seed(spec.seed, &format!("insert/{}/{attempt}", d.name)));
        match secret.and_then(|s| insert(&d.netlist, &d.baseline, &s, &cfg).map(|p| (s, p))) {
            Ok((s, placement)) => {
                return Ok(Inserted { marked: Marked::Region(s), netlist: None, placement, attempts: attempt + 1, search_seconds })
            }
            Err(e) => last = e,
        }
    }
    Err(Error::InfeasibleRegion(format!("no insertable region in {} candidates; last: {last}", spec.watermark.max_attempts)))
}

/// Eligible nodes by ascending combined score, ties to the lower id.
fn ranked_nodes(graph: &LayoutGraph, combined: &[f64]) -> Vec<usize> {
    let mut v: Vec<usize> = (0..graph.num_nodes).filter(|&v| graph.is_eligible(v)).collect();
    v.sort_by(|&a, &b| combined[a].total_cmp(&combined[b]).then(a.cmp(&b)));
    v
}

pub(crate) fn insert_scheme(spec: &ExperimentSpec, d: &TestDesign, scheme: Scheme, model: Option<&GcnModel>) -> Result<Inserted> {
    let w = &spec.watermark;
    let (nl, base) = (&d.netlist, &d.baseline);
    let secret_seed = sub_seed(spec.seed, &format!("secret/{}", d.name));
    let sig_seed = sub_seed(spec.seed, &format!("signature/{}/{}", d.name, scheme.as_str()));
    let sig = || Signature::random(w.sig_len, sig_seed);
    let single = |marked, netlist, placement| Inserted { marked, netlist, placement, attempts: 1, search_seconds: 0.0 };
    match scheme {
        Scheme::GnnRegion => {
            let model = model.ok_or_else(|| Error::InvalidArgument("gnn-region needs a model".into()))?;
            let graph = d.graph.with_zeroed_columns(&spec.zeroed_columns()?);
            let start = Instant::now();
            let res = search(model, &graph, w.gamma, w.agg_hops)?;
            let ranked = ranked_nodes(&graph, &res.combined);
            let secs = start.elapsed().as_secs_f64();
            let cands = ranked.into_iter().map(|v| WatermarkSecret::capture(nl, base, graph.origin[v][0], w.n, secret_seed));
            first_insertable(spec, d, cands, secs)
        }
        Scheme::Icmarks => {
            let size = region_size(nl, w.n);
            let start = Instant::now();
            let windows = icmarks_search(nl, base, size, w.region_min_cells)?;
            let secs = start.elapsed().as_secs_f64();
            let cands = windows.into_iter().map(|s| WatermarkSecret::for_region(nl, base, s.rect, w.n, secret_seed));
            first_insertable(spec, d, cands, secs)
        }
        Scheme::RowParity => {
            let sig = sig()?;
            let (pl, key) = row_parity_insert(nl, base, &sig)?;
            Ok(single(Marked::RowParity(key, sig), None, pl))
        }
        Scheme::CellScatter => {
            let sig = sig()?;
            let (pl, key) = cell_scatter_insert(nl, base, &sig)?;
            Ok(single(Marked::Scatter(key, sig), None, pl))
        }
        Scheme::Buffer => {
            let sig = Signature::random(w.buffer_bits, sig_seed)?;
            let cfg = PlacerConfig { window_sites: w.buffer_window.0, window_rows: w.buffer_window.1, ..spec.placer.clone() };
            let (out, pl, key) = buffer_insert(nl, base, &sig, &cfg)?;
            Ok(single(Marked::Buffer(key, sig), Some(out), pl))
        }
    }
}

/// Watermarked and attacked rows for one (design, scheme).
pub(crate) fn evaluate(
    spec: &ExperimentSpec,
    d: &TestDesign,
    scheme: Scheme,
    model: Option<&GcnModel>,
    timings: &mut Vec<(String, String, String, f64)>,
) -> Vec<MetricsRow> {
    let row = |attack: Option<String>| MetricsRow {
        design: d.name.clone(),
        cells: d.netlist.cells.len(),
        nets: d.netlist.nets.len(),
        scheme,
        attack,
        pwlr: None,
        wer: None,
        attempts: 0,
        search_seconds: 0.0,
        status: "ok".into(),
    };
    let start = Instant::now();
    let ins = match insert_scheme(spec, d, scheme, model) {
        Ok(i) => i,
        Err(e) => return vec![MetricsRow { status: format!("insert failed: {e}"), ..row(None) }],
    };
    timings.push(("search".into(), d.name.clone(), scheme.as_str().into(), ins.search_seconds));
    timings.push(("insert".into(), d.name.clone(), scheme.as_str().into(), start.elapsed().as_secs_f64() - ins.search_seconds));
    let nl = ins.netlist(&d.netlist);
    let measure = |pl: &Placement| -> Result<(f64, f64)> {
        let base = hpwl(&d.netlist, &d.baseline)?;
        Ok((hpwl(nl, pl)? / base, ins.extract(nl, pl)?))
    };
    let fill = |mut r: MetricsRow, m: Result<(f64, f64)>| {
        r.attempts = ins.attempts;
        r.search_seconds = ins.search_seconds;
        match m {
            Ok((p, w)) => {
                r.pwlr = Some(p);
                r.wer = Some(w);
            }
            Err(e) => r.status = format!("extract failed: {e}"),
        }
        r
    };
    let mut rows = vec![fill(row(None), measure(&ins.placement))];
    let size = region_size(&d.netlist, spec.watermark.n);
    for a in &spec.attacks {
        let label = a.label();
        let mut cfg = a.clone();
        cfg.seed = sub_seed(spec.seed ^ a.seed, &format!("attack/{}/{}/{label}", d.name, scheme.as_str()));
        let r = match apply_attack(nl, &ins.placement, &cfg, size, &spec.placer) {
            Ok(pl) => fill(row(Some(label)), measure(&pl)),
            Err(e) => MetricsRow { status: format!("attack failed: {e}"), attempts: ins.attempts, ..row(Some(label)) },
        };
        rows.push(r);
    }
    rows
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidArgument(format!("{}: {other:?}", path.display())),
    }
}

pub(crate) fn write_csv<R: AsRef<[String]>>(path: &Path, header: &[&str], records: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in records {
        w.write_record(r.as_ref()).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// attack-sweep.csv and .svg: mean PWLR and WER per scheme and attack.
fn write_sweep(spec: &ExperimentSpec, rows: &[MetricsRow], dir: &Path) -> Result<()> {
    let mut attacks = vec!["none".to_string()];
    attacks.extend(spec.attacks.iter().map(|a| a.label()));
    let mut records = Vec::new();
    let mut wer_series = Vec::new();
    let mut pwlr_series = Vec::new();
    for &scheme in &spec.schemes {
        let (mut wp, mut pp) = (Vec::new(), Vec::new());
        for (i, a) in attacks.iter().enumerate() {
            let sel: Vec<&MetricsRow> = rows
                .iter()
                .filter(|r| r.scheme == scheme && r.attack.as_deref().unwrap_or("none") == a && r.is_ok())
                .collect();
            let w = mean(&sel.iter().filter_map(|r| r.wer).collect::<Vec<_>>());
            let p = mean(&sel.iter().filter_map(|r| r.pwlr).collect::<Vec<_>>());
            let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            records.push(vec![scheme.as_str().to_string(), a.clone(), f(p), f(w), sel.len().to_string()]);
            if let Some(w) = w {
                wp.push((i as f64, w));
            }
            if let Some(p) = p {
                pp.push((i as f64, p));
            }
        }
        wer_series.push(Series { name: scheme.as_str().into(), points: wp });
        pwlr_series.push(Series { name: scheme.as_str().into(), points: pp });
    }
    write_csv(&dir.join("attack-sweep.csv"), &["scheme", "attack", "mean_pwlr", "mean_wer", "designs"], &records)?;
    let panels = [
        Panel {
            title: "Watermark extraction rate under attack".into(),
            x_label: "attack".into(),
            y_label: "WER (%)".into(),
            series: wer_series,
            guides: vec![(90.0, "WER 90".into())],
            x_ticks: attacks.clone(),
        },
        Panel {
            title: "Wirelength rate under attack".into(),
            x_label: "attack".into(),
            y_label: "PWLR".into(),
            series: pwlr_series,
            guides: vec![(1.005, "PWLR 1.005".into())],
            x_ticks: attacks,
        },
    ];
    write_text(&dir.join("attack-sweep.svg"), &svg::render(&panels, 900.0, 340.0))
}

fn write_training(data: &TrainingData, beta: f64, losses: &[f64], dir: &Path) -> Result<()> {
    let labels = data.labels(beta);
    let records: Vec<Vec<String>> = labels
        .iter()
        .zip(&data.raw)
        .map(|(&(v, l), &(_, r))| vec![v.to_string(), if r.is_finite() { format!("{r:.6}") } else { "inf".into() }, format!("{l:.6}")])
        .collect();
    write_csv(&dir.join("labels.csv"), &["node", "raw", "label"], &records)?;
    let values: Vec<f64> = labels.iter().map(|l| l.1).collect();
    let hist = Panel {
        title: "Label distribution".into(),
        x_label: "label".into(),
        y_label: "count".into(),
        series: vec![svg::histogram_series("labels", &values, 0.0, 1.0, 20)],
        ..Default::default()
    };
    write_text(&dir.join("labels-histogram.svg"), &svg::render(&[hist], 700.0, 360.0))?;
    let records: Vec<Vec<String>> = losses.iter().enumerate().map(|(i, l)| vec![(i + 1).to_string(), format!("{l:.8}")]).collect();
    write_csv(&dir.join("losses.csv"), &["epoch", "loss"], &records)?;
    let curve = Panel {
        title: "Training loss".into(),
        x_label: "epoch".into(),
        y_label: "mean MSE".into(),
        series: vec![Series { name: "loss".into(), points: losses.iter().enumerate().map(|(i, &l)| ((i + 1) as f64, l)).collect() }],
        ..Default::default()
    };
    write_text(&dir.join("loss-curve.svg"), &svg::render(&[curve], 700.0, 360.0))
}

/// Runs the whole experiment and writes its artifacts to `spec.output`:
/// metrics.csv, timings.csv, attack-sweep.{csv,svg}, spec.toml and, when a
/// model is trained, labels.csv, losses.csv, labels-histogram.svg,
/// loss-curve.svg and model.bin.
pub fn cmd_run(spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate().stage("spec")?;
    let dir = spec.output.clone();
    create_dir(&dir).stage("output")?;
    write_text(&dir.join("spec.toml"), &spec.to_toml()).stage("output")?;
    let mut timings: Vec<(String, String, String, f64)> = Vec::new();

    let designs = test_designs(spec).stage("placement")?;
    for d in &designs {
        timings.push(("place".into(), d.name.clone(), String::new(), d.place_seconds));
    }

    let mut losses = Vec::new();
    let (mut num_labels, mut num_infeasible) = (0, 0);
    let model = if !spec.schemes.contains(&Scheme::GnnRegion) {
        None
    } else if let Some(path) = &spec.model.load {
        Some(load_model(path).stage("model")?)
    } else {
        let data = collect_training(spec).stage("labels")?;
        timings.push(("labels".into(), String::new(), String::new(), data.seconds));
        let start = Instant::now();
        let (model, l) = train_model(spec, &data).stage("train")?;
        timings.push(("train".into(), String::new(), String::new(), start.elapsed().as_secs_f64()));
        write_training(&data, spec.watermark.beta, &l, &dir).stage("output")?;
        save_model(&model, &dir.join("model.bin")).stage("output")?;
        num_labels = data.raw.len();
        num_infeasible = data.num_infeasible;
        losses = l;
        Some(model)
    };

    let mut rows = Vec::new();
    for d in &designs {
        for &scheme in &spec.schemes {
            rows.extend(evaluate(spec, d, scheme, model.as_ref(), &mut timings));
        }
    }

    let records: Vec<Vec<String>> = rows.iter().map(MetricsRow::record).collect();
    write_csv(&dir.join("metrics.csv"), &METRICS_HEADER, &records).stage("output")?;
    let t: Vec<Vec<String>> = timings.iter().map(|(s, d, k, secs)| vec![s.clone(), d.clone(), k.clone(), format!("{secs:.6}")]).collect();
    write_csv(&dir.join("timings.csv"), &["stage", "design", "scheme", "seconds"], &t).stage("output")?;
    write_sweep(spec, &rows, &dir).stage("output")?;
    Ok(RunReport { rows, losses, num_labels, num_infeasible, output: dir })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub design: String,
    pub cells: usize,
    /// Size of the sampled node set that is both labeled and scored.
    pub nodes: usize,
    pub label_seconds: f64,
    pub train_seconds: f64,
    /// Batch scoring of the sampled node set.
    pub gnn_score_seconds: f64,
    /// Scoring plus post-aggregation over the whole graph.
    pub gnn_search_seconds: f64,
    pub icmarks_seconds: f64,
}

impl BenchReport {
    pub fn speedup_vs_labels(&self) -> f64 {
        self.label_seconds / self.gnn_score_seconds.max(1e-9)
    }

    pub fn speedup_vs_icmarks(&self) -> f64 {
        self.icmarks_seconds / self.gnn_search_seconds.max(1e-9)
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "design {} ({} cells), {} sampled nodes", self.design, self.cells, self.nodes)?;
        writeln!(f, "label collection   {:>10.4} s", self.label_seconds)?;
        writeln!(f, "training           {:>10.4} s", self.train_seconds)?;
        writeln!(f, "gnn batch scoring  {:>10.4} s  ({:.1}x faster than labels)", self.gnn_score_seconds, self.speedup_vs_labels())?;
        writeln!(f, "gnn full search    {:>10.4} s", self.gnn_search_seconds)?;
        write!(f, "window scoring     {:>10.4} s  ({:.2}x gnn search)", self.icmarks_seconds, self.speedup_vs_icmarks())
    }
}

/// Times label collection, model scoring of the same sampled node set,
/// a full model search and the sliding-window search on the first design.
pub fn bench_search(spec: &ExperimentSpec) -> Result<BenchReport> {
    spec.validate().stage("spec")?;
    let d = test_design(spec, 0).stage("placement")?;
    if d.netlist.placeable_cells().next().is_none() {
        return Err(Error::Empty("design has no movable cells".into()));
    }
    let w = &spec.watermark;
    let size = region_size(&d.netlist, w.n);
    let samples = grid_sample(&d.netlist, &d.baseline, size, sub_seed(spec.seed, "bench/sample")).stage("labels")?;
    let cfg = incremental(spec, sub_seed(spec.seed, "bench/labels"));
    let set = collect_labels(&d.netlist, &d.baseline, &samples, &cfg, w.beta, w.n).stage("labels")?;
    let graph = d.graph.with_zeroed_columns(&spec.zeroed_columns()?);
    let labels = set.node_labels(&graph);
    let nodes: Vec<usize> = labels.iter().map(|l| l.0).collect();

    let start = Instant::now();
    let model = match &spec.model.load {
        Some(p) => load_model(p).stage("model")?,
        None => {
            let m = &spec.model;
            let init = GcnModel::new(m.depth, m.hidden, sub_seed(spec.seed, "model-init")).stage("train")?;
            let tc = TrainConfig { fanouts: m.train.fanouts_for_depth(m.depth), seed: sub_seed(spec.seed, "train"), ..m.train.clone() };
            train(&init, &graph, &labels, &tc).stage("train")?.0
        }
    };
    let train_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    forward(&model, &graph, &nodes).stage("search")?;
    let gnn_score_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    search(&model, &graph, w.gamma, w.agg_hops).stage("search")?;
    let gnn_search_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    icmarks_search(&d.netlist, &d.baseline, size, w.region_min_cells).stage("search")?;
    let icmarks_seconds = start.elapsed().as_secs_f64();

    Ok(BenchReport {
        design: d.name,
        cells: d.netlist.cells.len(),
        nodes: nodes.len(),
        label_seconds: set.seconds,
        train_seconds,
        gnn_score_seconds,
        gnn_search_seconds,
        icmarks_seconds,
    })
}

/// [`bench_search`], also written to `bench-search.csv` in the output directory.
pub fn cmd_bench_search(spec: &ExperimentSpec) -> Result<BenchReport> {
    let r = bench_search(spec)?;
    create_dir(&spec.output).stage("output")?;
    let rec = vec![
        r.design.clone(),
        r.cells.to_string(),
        r.nodes.to_string(),
        format!("{:.6}", r.label_seconds),
        format!("{:.6}", r.train_seconds),
        format!("{:.6}", r.gnn_score_seconds),
        format!("{:.6}", r.gnn_search_seconds),
        format!("{:.6}", r.icmarks_seconds),
        format!("{:.3}", r.speedup_vs_labels()),
    ];
    let header = [
        "design",
        "cells",
        "nodes",
        "label_seconds",
        "train_seconds",
        "gnn_score_seconds",
        "gnn_search_seconds",
        "icmarks_seconds",
        "speedup_vs_labels",
    ];
    write_csv(&spec.output.join("bench-search.csv"), &header, &[rec]).stage("output")?;
    Ok(r)
}
