//! spectra-lab: sample dynamical spectra, measure sublevel dimensions, decompose and
//! connect pieces, and extract complete subshifts from a JSON model file.

mod cache;
mod model;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use spectra_core::decomposition::{decompose, piece_cycle, transient_dimension, ConnectionSearch, PieceDescriptor, PieceKind};
use spectra_core::extraction::{extract_complete_subshift, ExtractionParams};
use spectra_core::geometry::{dimension, DimensionParams};
use spectra_core::spectra::{enumerate_spectrum, prune_sublevel, staircase, PruneMode, SpectrumKind};
use spectra_core::{Error, FiniteTypeSet, SymbolicPoint, TransitionSystem, Word};

use cache::Cache;
use model::Model;
use output::{csv_text, fmt9, json_text};

/// Largest period `spectrum` will enumerate.
const MAX_PERIOD_CAP: usize = 24;
/// Largest number of words of length ≤ P (over the full alphabet) `spectrum` will enumerate.
const MAX_WORDS: f64 = 5e7;

#[derive(Parser)]
#[command(name = "spectra-lab", version, about = "Dynamical spectra of symbolic horseshoes")]
struct Cli {
    /// Skip the result cache (read and write).
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Markov or Lagrange values of periodic orbits up to a period, as CSV.
    Spectrum(SpectrumArgs),
    /// Unstable and stable dimension brackets of a window graph or sublevel set, as JSON.
    #[command(allow_negative_numbers = true)]
    Dimension(DimensionArgs),
    /// Sublevel dimensions across a threshold grid, as CSV plus plot data.
    #[command(allow_negative_numbers = true)]
    Staircase(StaircaseArgs),
    /// Basic pieces and transients of a sublevel set, as JSON.
    #[command(allow_negative_numbers = true)]
    Decompose(DecomposeArgs),
    /// Whether two periodic orbits connect below a threshold, as JSON.
    #[command(allow_negative_numbers = true)]
    Connect(ConnectArgs),
    /// A complete subshift inside a sublevel set, as JSON.
    #[command(allow_negative_numbers = true)]
    Extract(ExtractArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Markov,
    Lagrange,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Inner,
    Outer,
}

impl ModeArg {
    fn mode(self) -> PruneMode {
        match self {
            ModeArg::Inner => PruneMode::Inner,
            ModeArg::Outer => PruneMode::Outer,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ModeArg::Inner => "inner",
            ModeArg::Outer => "outer",
        }
    }
}

#[derive(clap::Args)]
struct SpectrumArgs {
    /// Model file, or a bundled model name (cf12, golden, cf1).
    model: String,
    #[arg(long, default_value_t = 8)]
    max_period: usize,
    #[arg(long, value_enum, default_value = "markov")]
    kind: KindArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DimensionArgs {
    model: String,
    #[arg(long, default_value_t = 2)]
    memory: usize,
    /// Measure the sublevel set at this threshold instead of the whole system.
    #[arg(long = "t")]
    t: Option<f64>,
    #[arg(long, value_enum, default_value = "inner")]
    mode: ModeArg,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Largest scale of the counting cross-check (0 disables it).
    #[arg(long, default_value_t = 0)]
    count_scales: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct StaircaseArgs {
    model: String,
    #[arg(long)]
    t_min: f64,
    #[arg(long)]
    t_max: f64,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    #[arg(long, default_value_t = 5)]
    memory: usize,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Two-column (t, hd_sum) file; defaults to `<out>.plot` when --out is given.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DecomposeArgs {
    model: String,
    #[arg(long = "t")]
    t: f64,
    #[arg(long, default_value_t = 6)]
    memory: usize,
    #[arg(long, value_enum, default_value = "inner")]
    mode: ModeArg,
    /// Moran depth for transient dimensions (0 skips them).
    #[arg(long, default_value_t = 0)]
    depth: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ConnectArgs {
    model: String,
    /// Period of the first orbit, e.g. "1" or "2211".
    p1: String,
    p2: String,
    #[arg(long = "t")]
    t: f64,
    #[arg(long, default_value_t = 6)]
    memory: usize,
    #[arg(long, default_value_t = 32)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ExtractArgs {
    model: String,
    #[arg(long = "t")]
    t: f64,
    #[arg(long, default_value_t = 6)]
    memory: usize,
    /// Base scale (searched when omitted).
    #[arg(long)]
    r0: Option<u32>,
    /// Concatenation length.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 256)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Keep cut words whose sup bound reaches max f on the sublevel set.
    #[arg(long)]
    no_filter: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl Fail {
    fn model(msg: impl Into<String>) -> Self {
        Fail { code: 2, msg: format!("bad model: {}", msg.into()) }
    }

    fn params(msg: impl Into<String>) -> Self {
        Fail { code: 3, msg: format!("invalid parameters: {}", msg.into()) }
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParams(_) => 3,
            Error::PieceNotRealizable(_) => 4,
            Error::ExtractionInfeasible(_) | Error::NoExtraction => 5,
            _ => 1,
        };
        Fail { code, msg: e.to_string() }
    }
}

impl From<anyhow::Error> for Fail {
    fn from(e: anyhow::Error) -> Self {
        Fail { code: 1, msg: format!("{e:#}") }
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail { code: 1, msg: e.to_string() }
    }
}

type Outputs = BTreeMap<String, String>;

const MAIN: &str = "main";
const PLOT: &str = "plot";
const WARN: &str = "warnings";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("spectra-lab: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Fail> {
    let cache = Cache::from_env(cli.no_cache);
    let (name, model_arg, out, plot) = match &cli.cmd {
        Cmd::Spectrum(a) => ("spectrum", &a.model, &a.out, None),
        Cmd::Dimension(a) => ("dimension", &a.model, &a.out, None),
        Cmd::Staircase(a) => {
            let plot = a.plot.clone().or_else(|| a.out.as_ref().map(|o| PathBuf::from(format!("{}.plot", o.display()))));
            ("staircase", &a.model, &a.out, plot)
        }
        Cmd::Decompose(a) => ("decompose", &a.model, &a.out, None),
        Cmd::Connect(a) => ("connect", &a.model, &a.out, None),
        Cmd::Extract(a) => ("extract", &a.model, &a.out, None),
    };
    let m = model::load(model_arg).map_err(Fail::model)?;
    let args = key_args(&cli.cmd);
    let key = Cache::key(name, &m.canonical, &args);

    let outputs = match cache.get(&key, name) {
        Some(o) => o,
        None => {
            let o = compute(&cli.cmd, &m)?;
            if let Err(e) = cache.put(&key, name, &o) {
                eprintln!("spectra-lab: warning: cache write failed: {e:#}");
            }
            o
        }
    };

    if let Some(w) = outputs.get(WARN) {
        eprint!("{w}");
    }
    let main = outputs.get(MAIN).map(String::as_str).unwrap_or("");
    match out {
        Some(p) => std::fs::write(p, main)?,
        None => print!("{main}"),
    }
    if let (Some(p), Some(text)) = (plot, outputs.get(PLOT)) {
        std::fs::write(p, text)?;
    }
    Ok(())
}

/// The parameters that determine a command's output (output paths excluded).
fn key_args(cmd: &Cmd) -> String {
    let v = match cmd {
        Cmd::Spectrum(a) => json!({"P": a.max_period, "kind": matches!(a.kind, KindArg::Lagrange)}),
        Cmd::Dimension(a) => json!({"memory": a.memory, "t": a.t, "mode": a.mode.name(), "depth": a.depth,
            "tol": a.tol, "count_scales": a.count_scales}),
        Cmd::Staircase(a) => json!({"t_min": a.t_min, "t_max": a.t_max, "steps": a.steps, "memory": a.memory, "depth": a.depth}),
        Cmd::Decompose(a) => json!({"t": a.t, "memory": a.memory, "mode": a.mode.name(), "depth": a.depth}),
        Cmd::Connect(a) => json!({"p1": a.p1, "p2": a.p2, "t": a.t, "memory": a.memory, "steps": a.steps}),
        Cmd::Extract(a) => json!({"t": a.t, "memory": a.memory, "r0": a.r0, "k": a.k, "samples": a.samples,
            "seed": a.seed, "filter": !a.no_filter}),
    };
    v.to_string()
}

fn compute(cmd: &Cmd, m: &Model) -> Result<Outputs, Fail> {
    match cmd {
        Cmd::Spectrum(a) => cmd_spectrum(a, m),
        Cmd::Dimension(a) => cmd_dimension(a, m),
        Cmd::Staircase(a) => cmd_staircase(a, m),
        Cmd::Decompose(a) => cmd_decompose(a, m),
        Cmd::Connect(a) => cmd_connect(a, m),
        Cmd::Extract(a) => cmd_extract(a, m),
    }
}

fn main_only(text: String) -> Outputs {
    BTreeMap::from([(MAIN.to_string(), text)])
}

fn finite(name: &str, x: f64) -> Result<f64, Fail> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Fail::params(format!("{name} must be finite")))
    }
}

fn positive_memory(memory: usize) -> Result<usize, Fail> {
    if memory == 0 {
        Err(Fail::params("memory must be at least 1"))
    } else {
        Ok(memory)
    }
}

fn word_text(ts: &TransitionSystem, w: &Word) -> String {
    ts.format_word(w.letters())
}

fn point_json(ts: &TransitionSystem, p: &Option<SymbolicPoint>) -> Value {
    match p {
        None => Value::Null,
        Some(p) => json!({
            "left_period": word_text(ts, p.left_period()),
            "core": word_text(ts, p.core()),
            "right_period": word_text(ts, p.right_period()),
        }),
    }
}

fn sublevel(m: &Model, t: f64, memory: usize, mode: PruneMode) -> Result<Option<FiniteTypeSet>, Fail> {
    Ok(prune_sublevel(&m.ts, &m.potential, t, memory, mode)?.graph)
}

fn cmd_spectrum(a: &SpectrumArgs, m: &Model) -> Result<Outputs, Fail> {
    let p = a.max_period;
    if p == 0 {
        return Err(Fail::params("--max-period must be at least 1"));
    }
    let words: f64 = (1..=p as i32).map(|n| (m.ts.len() as f64).powi(n)).sum();
    if p > MAX_PERIOD_CAP || words > MAX_WORDS {
        return Err(Fail::params(format!("--max-period {p} exceeds the enumeration cap")));
    }
    let kind = match a.kind {
        KindArg::Markov => SpectrumKind::Markov,
        KindArg::Lagrange => SpectrumKind::Lagrange,
    };
    let sample = enumerate_spectrum(&m.ts, &m.potential, p, kind)?;
    let rows = sample.entries.iter().map(|e| {
        let w: Vec<String> = e.witnesses.iter().map(|w| word_text(&m.ts, w)).collect();
        vec![fmt9(e.value), w.join(" ")]
    });
    Ok(main_only(csv_text(&["value", "witness"], rows)?))
}

fn cmd_dimension(a: &DimensionArgs, m: &Model) -> Result<Outputs, Fail> {
    positive_memory(a.memory)?;
    if a.depth == 0 {
        return Err(Fail::params("--depth must be at least 1"));
    }
    if !(a.tol > 0.0) {
        return Err(Fail::params("--tol must be positive"));
    }
    let x = match a.t {
        Some(t) => sublevel(m, finite("--t", t)?, a.memory, a.mode.mode())?,
        None => Some(FiniteTypeSet::full(&m.ts, a.memory)?),
    };
    let head = json!({
        "memory": a.memory,
        "t": a.t,
        "mode": a.t.map(|_| a.mode.name()),
    });
    let mut v = match x {
        None => json!({"nodes": 0, "empty": true, "du": 0.0, "ds": 0.0, "hd_sum": 0.0}),
        Some(x) => {
            let est = dimension(&x, &m.contraction, DimensionParams { max_depth: a.depth, tol: a.tol, count_scales: a.count_scales })?;
            let (ul, uh) = est.du_bracket();
            let (sl, sh) = est.ds_bracket();
            json!({
                "nodes": x.len(),
                "empty": false,
                "du": est.du,
                "du_radius": est.du_radius,
                "du_bracket": [ul, uh],
                "ds": est.ds,
                "ds_radius": est.ds_radius,
                "ds_bracket": [sl, sh],
                "hd_sum": est.hd_sum,
                "lambda_min": est.lambda_min,
                "distortion_a": est.distortion_a,
                "unstable": serde_json::to_value(&est.unstable).map_err(anyhow::Error::from)?,
                "stable": serde_json::to_value(&est.stable).map_err(anyhow::Error::from)?,
                "counts": serde_json::to_value(&est.counts).map_err(anyhow::Error::from)?,
            })
        }
    };
    merge(&mut v, head);
    Ok(main_only(json_text(v)))
}

fn merge(v: &mut Value, extra: Value) {
    if let (Value::Object(a), Value::Object(b)) = (v, extra) {
        a.extend(b);
    }
}

fn cmd_staircase(a: &StaircaseArgs, m: &Model) -> Result<Outputs, Fail> {
    let (lo, hi) = (finite("--t-min", a.t_min)?, finite("--t-max", a.t_max)?);
    if lo > hi {
        return Err(Fail::params("--t-min exceeds --t-max"));
    }
    if a.steps == 0 {
        return Err(Fail::params("--steps must be at least 1"));
    }
    positive_memory(a.memory)?;
    let grid: Vec<f64> = if a.steps == 1 {
        vec![lo]
    } else {
        (0..a.steps).map(|i| lo + (hi - lo) * i as f64 / (a.steps - 1) as f64).collect()
    };
    let sc = staircase(&m.ts, &m.potential, &m.contraction, &grid, a.memory, a.depth.max(1))?;
    let rows = sc.rows.iter().map(|r| {
        vec![fmt9(r.t), fmt9(r.du_in), fmt9(r.du_out), fmt9(r.ds_in), fmt9(r.ds_out), fmt9(r.hd_sum), r.flags.join(";")]
    });
    let csv = csv_text(&["t", "du_in", "du_out", "ds_in", "ds_out", "hd_sum", "flags"], rows)?;

    let mut plot = String::from("# t hd_sum\n");
    for r in &sc.rows {
        plot.push_str(&format!("{} {}\n", fmt9(r.t), fmt9(r.hd_sum)));
    }
    for j in &sc.jump_candidates {
        plot.push_str(&format!("# jump {} {} {}\n", fmt9(j.t_lo), fmt9(j.t_hi), fmt9(j.size)));
    }

    let mut out = BTreeMap::from([(MAIN.to_string(), csv), (PLOT.to_string(), plot)]);
    let failed = sc.rows.iter().filter(|r| r.flags.iter().any(|f| f == "numeric_failure")).count();
    if failed > 0 {
        out.insert(WARN.into(), format!("spectra-lab: warning: {failed} row(s) flagged numeric_failure\n"));
    }
    Ok(out)
}

fn kind_name(k: PieceKind) -> &'static str {
    match k {
        PieceKind::SubhorseshoePeriodic => "periodic",
        PieceKind::SubhorseshoeNontrivial => "nontrivial",
    }
}

fn cmd_decompose(a: &DecomposeArgs, m: &Model) -> Result<Outputs, Fail> {
    let t = finite("--t", a.t)?;
    positive_memory(a.memory)?;
    let head = json!({"t": t, "memory": a.memory, "mode": a.mode.name()});
    let mut v = match sublevel(m, t, a.memory, a.mode.mode())? {
        None => json!({"nodes": 0, "pieces": [], "transients": []}),
        Some(x) => {
            let dec = decompose(&x);
            let adj = x.adjacency();
            let centre = x.memory();
            let pieces: Vec<Value> = dec
                .pieces
                .iter()
                .map(|p| {
                    let cycle: Vec<_> = piece_cycle(adj, p).iter().map(|&v| x.windows()[v as usize].letters()[centre]).collect();
                    json!({
                        "id": p.id,
                        "kind": kind_name(p.kind),
                        "size": p.nodes.len(),
                        "witness_cycle": m.ts.format_word(&cycle),
                    })
                })
                .collect();
            let mut transients = Vec::with_capacity(dec.transients.len());
            for tr in &dec.transients {
                let mut o = json!({"from": tr.from, "to": tr.to, "size": tr.nodes.len()});
                if a.depth > 0 {
                    let d = transient_dimension(tr, &dec, &x, &m.contraction, a.depth)?;
                    merge(&mut o, json!({"dimension": d}));
                }
                transients.push(o);
            }
            json!({"nodes": x.len(), "pieces": pieces, "transients": transients})
        }
    };
    merge(&mut v, head);
    Ok(main_only(json_text(v)))
}

fn cmd_connect(a: &ConnectArgs, m: &Model) -> Result<Outputs, Fail> {
    let t = finite("--t", a.t)?;
    positive_memory(a.memory)?;
    let parse = |s: &str| -> Result<PieceDescriptor, Fail> {
        let w = m.ts.parse_word(s).map_err(|e| Fail::params(format!("piece `{s}`: {e}")))?;
        if w.is_empty() {
            return Err(Fail::params("piece periods must be nonempty"));
        }
        Ok(PieceDescriptor::Periodic(w))
    };
    let (p1, p2) = (parse(&a.p1)?, parse(&a.p2)?);
    let search = ConnectionSearch::new(&m.ts, &m.potential, a.memory)?;
    let r = search.connected_before(&p1, &p2, t, a.steps)?;
    let v = json!({
        "connected": r.connected,
        "t": r.t,
        "memory": r.memory,
        "p1": a.p1,
        "p2": a.p2,
        "q_witness": r.q_witness,
        "piece_ids": [r.piece_ids.0, r.piece_ids.1],
        "heteroclinic_x": point_json(&m.ts, &r.heteroclinic_x),
        "heteroclinic_y": point_json(&m.ts, &r.heteroclinic_y),
    });
    Ok(main_only(json_text(v)))
}

fn cmd_extract(a: &ExtractArgs, m: &Model) -> Result<Outputs, Fail> {
    let t = finite("--t", a.t)?;
    positive_memory(a.memory)?;
    if a.r0 == Some(0) || a.k == Some(0) {
        return Err(Fail::params("--r0 and --k must be positive"));
    }
    let x = sublevel(m, t, a.memory, PruneMode::Inner)?
        .ok_or_else(|| Fail::from(Error::ExtractionInfeasible(format!("sublevel set at t = {} is empty", fmt9(t)))))?;
    let params = ExtractionParams {
        r0: a.r0,
        k: a.k,
        memory: a.memory,
        samples: a.samples,
        seed: a.seed,
        containment_filter: !a.no_filter,
        ..ExtractionParams::default()
    };
    let res = extract_complete_subshift(&x, &m.potential, &m.contraction, &params)?;
    let w = |w: &Word| word_text(&m.ts, w);
    let df = &res.delta_formula;
    let rec = &res.record;
    let v = json!({
        "t": t,
        "memory": a.memory,
        "alphabet": res.alphabet.iter().map(w).collect::<Vec<_>>(),
        "delta_measured": res.delta_measured,
        "delta_formula": {
            "d1": df.d1, "d2": df.d2, "d3": df.d3, "d4": df.d4,
            "min": df.min, "c3": df.c3, "degenerate": df.degenerate,
        },
        "dim_lower": res.dim_lower,
        "dim_ref": res.dim_ref,
        "eta_achieved": res.eta_achieved,
        "max_f_lower": res.max_f_lower,
        "sup_bound": res.sup_bound,
        "record": {
            "r0": rec.r0,
            "k": rec.k,
            "J": rec.j,
            "n0": rec.n0,
            "good_positions": rec.good_positions,
            "cut_pair": [rec.cut_pair.0, rec.cut_pair.1],
            "o_value": w(&rec.o_value),
            "beta": rec.beta.iter().map(w).collect::<Vec<_>>(),
            "gamma1": w(&rec.gamma1),
            "gamma2": w(&rec.gamma2),
            "exhaustive": rec.exhaustive,
            "family_examined": rec.family_examined,
            "good_fraction": rec.good_fraction,
            "candidates": rec.candidates,
            "filtered_out": rec.filtered_out,
        },
    });
    Ok(main_only(json_text(v)))
}
