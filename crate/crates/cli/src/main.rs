use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use wlcrc::codec::{Codec, EncodedLine, MemoryLine, SchemeConfig, SchemeKind};
use wlcrc::harness::{emit_report, run_sweep, ReportFormat, SweepSpec, Workload};
use wlcrc::memsim::{Aggregate, MemoryArray};
use wlcrc::metrics::energy_report;
use wlcrc::model::ModelConfig;
use wlcrc::wlc::max_compressible_k;
use wlcrc::workloads::{generate, open_trace, write_text_trace, GeneratorKind, GeneratorSpec, TraceWriter};

/// Energy-aware MLC PCM line encodings: codec, trace tools and sweeps.
#[derive(Parser)]
#[command(name = "wlcrc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode one 512-bit line (128 hex digits) and print its cell states.
    Encode {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Line value as 128 hex digits.
        value: String,
        /// Stored cell states to write over, in the dump format printed by
        /// `encode`. Defaults to the reset state.
        #[arg(long)]
        old: Option<String>,
    },
    /// Decode a cell-state dump back to hex.
    Decode {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Cell states as printed by `encode` (`D:...;A:...;F:...`).
        cells: String,
    },
    /// Write a synthetic trace.
    Gen(GenArgs),
    /// Replay a trace through one scheme and print the aggregate.
    Run {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep described by a TOML file and emit CSV or JSON.
    Sweep(SweepArgs),
    /// Print a trace's header and its per-line compressibility histogram.
    Inspect {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

fn parse_scheme(s: &str) -> Result<String, String> {
    match SchemeConfig::parse(s) {
        Ok(_) => Ok(s.to_string()),
        Err(e) => {
            let names: Vec<&str> = SchemeKind::ALL.iter().map(|k| k.name()).collect();
            Err(format!("{e}; schemes are {} (optionally suffixed -GRANULARITY)", names.join(", ")))
        }
    }
}

#[derive(Args, Clone, Default)]
struct SchemeArgs {
    /// Scheme name, optionally with granularity (e.g. `wlcrc-16`).
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<String>,
    #[arg(long)]
    granularity: Option<u32>,
    /// Compression depth for WLC schemes (or a compressibility probe on baseline).
    #[arg(long)]
    k: Option<u8>,
    /// Multi-objective threshold T in [0, 1].
    #[arg(long = "threshold-t")]
    threshold_t: Option<f64>,
    /// Factor applied to the S3/S4 SET energy.
    #[arg(long)]
    energy_scale: Option<f64>,
    /// Seed for disturbance sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file with any of the above keys plus `[model]` tables.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Everything a single-scheme command depends on, after merging flags over
/// the config file over defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    scheme: String,
    granularity: Option<u32>,
    k: Option<u8>,
    threshold_t: Option<f64>,
    energy_scale: f64,
    seed: u64,
    model: ModelConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scheme: "wlcrc-16".into(),
            granularity: None,
            k: None,
            threshold_t: None,
            energy_scale: 1.0,
            seed: 0,
            model: ModelConfig::default(),
        }
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl SchemeArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg: RunConfig = match &self.config {
            Some(p) => read_toml(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = &self.scheme {
            cfg.scheme = s.clone();
            // a granularity inside the label replaces one from the file
            if SchemeConfig::parse(s).is_ok() && s.rsplit_once('-').is_some_and(|(_, g)| g.parse::<u32>().is_ok()) {
                cfg.granularity = None;
            }
        }
        cfg.granularity = self.granularity.or(cfg.granularity);
        cfg.k = self.k.or(cfg.k);
        cfg.threshold_t = self.threshold_t.or(cfg.threshold_t);
        cfg.energy_scale = self.energy_scale.unwrap_or(cfg.energy_scale);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        Ok(cfg)
    }
}

impl RunConfig {
    fn scheme_config(&self) -> Result<SchemeConfig> {
        let mut sc = SchemeConfig::parse(&self.scheme).with_context(|| format!("scheme {:?}", self.scheme))?;
        if let Some(g) = self.granularity {
            sc = SchemeConfig::new(sc.kind, g)?;
        }
        if let Some(k) = self.k {
            sc = sc.with_k(k)?;
        }
        if let Some(t) = self.threshold_t {
            sc = sc.with_threshold(t)?;
        }
        Ok(sc)
    }

    fn codec(&self) -> Result<Codec> {
        Ok(Codec::new(self.scheme_config()?)?)
    }

    fn models(&self) -> Result<(wlcrc::EnergyModel, wlcrc::DisturbanceModel)> {
        let (m, d) = self.model.build()?;
        let m = m.with_scale_high(m.params().scale_high * self.energy_scale)?;
        Ok((m, d))
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value_t = GenKind::Uniform)]
    kind: GenKind,
    #[arg(long)]
    lines: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Probability that a word is a sign-extended small integer (biased kinds).
    #[arg(long)]
    p: Option<f64>,
    /// Record the overwritten value with each write.
    #[arg(long)]
    with_old: bool,
    /// Write the text format instead of binary.
    #[arg(long)]
    text: bool,
    #[arg(long)]
    out: PathBuf,
    /// TOML generator spec; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Uniform,
    Biased,
    /// Biased words tuned to about 91% compressible lines, with rewrites.
    Calibrated,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep description (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replace the configured workloads with this trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Restrict the sweep to these schemes (repeatable).
    #[arg(long, value_parser = parse_scheme)]
    scheme: Vec<String>,
    #[arg(long)]
    granularity: Vec<u32>,
    #[arg(long = "threshold-t")]
    threshold_t: Option<f64>,
    /// Energy scale factors (repeatable).
    #[arg(long)]
    energy_scale: Vec<f64>,
    /// Seeds disturbance sampling and every generated workload.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_encode(scheme: &SchemeArgs, value: &str, old: Option<&str>) -> Result<()> {
    let cfg = scheme.resolve()?;
    let codec = cfg.codec()?;
    let (model, _) = cfg.models()?;
    let line: MemoryLine = value.parse().context("line value")?;
    let stored = match old {
        Some(s) => EncodedLine::from_dump(s).context("--old")?,
        None => codec.initial(),
    };
    let enc = codec.encode(&line, &stored, &model)?;
    let cost = energy_report(&stored, &enc, &model)?;
    println!("{}", enc.to_dump());
    eprintln!(
        "{}: {} cells, {} updated, {} (data {}, aux {}, flag {})",
        codec.config(),
        enc.len(),
        cost.updated_cells,
        cost.total(),
        cost.data,
        cost.aux,
        cost.flag
    );
    Ok(())
}

fn cmd_decode(scheme: &SchemeArgs, cells: &str) -> Result<()> {
    let codec = scheme.resolve()?.codec()?;
    let enc = EncodedLine::from_dump(cells).context("cell states")?;
    println!("{}", codec.decode(&enc)?.to_hex());
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let mut spec: GeneratorSpec = match &args.config {
        Some(p) => read_toml(p)?,
        None => match args.kind {
            GenKind::Uniform => GeneratorSpec::default(),
            GenKind::Biased => GeneratorSpec { kind: GeneratorKind::Biased, ..GeneratorSpec::default() },
            GenKind::Calibrated => GeneratorSpec::calibrated(GeneratorSpec::default().lines, 0),
        },
    };
    if args.config.is_some() && args.kind != GenKind::Uniform {
        spec.kind = match args.kind {
            GenKind::Uniform => GeneratorKind::UniformRandom,
            _ => GeneratorKind::Biased,
        };
    }
    spec.lines = args.lines.unwrap_or(spec.lines);
    spec.seed = args.seed.unwrap_or(spec.seed);
    spec.word_bias = args.p.unwrap_or(spec.word_bias);
    spec.with_old |= args.with_old;
    let records = generate(&spec)?;
    let n = if args.text {
        let f = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
        let recs: Vec<_> = records.collect();
        write_text_trace(BufWriter::new(f), &recs)?
    } else {
        let mut w = TraceWriter::create(&args.out, spec.with_old)?;
        let mut n = 0;
        for r in records {
            w.push(&r)?;
            n += 1;
        }
        w.finish()?;
        n
    };
    eprintln!("wrote {n} records to {}", args.out.display());
    eprintln!("{}", toml::to_string(&spec)?.trim_end());
    Ok(())
}

#[derive(Serialize)]
struct RunOutput<'a> {
    config: &'a RunConfig,
    scheme: String,
    totals: &'a Aggregate,
    avg_total_pj: f64,
    avg_data_pj: f64,
    avg_aux_pj: f64,
    avg_flag_pj: f64,
    avg_updated_cells: f64,
    avg_disturb_expected: f64,
    avg_disturb_sampled: f64,
    compression_rate: f64,
}

fn cmd_run(scheme: &SchemeArgs, trace: &Path, format: OutputFormat, out: Option<&Path>) -> Result<()> {
    let cfg = scheme.resolve()?;
    let codec = cfg.codec()?;
    let (model, dmodel) = cfg.models()?;
    let (_, stream) = open_trace(trace).with_context(|| format!("opening {}", trace.display()))?;
    let mut arr = MemoryArray::new(codec, model, dmodel, cfg.seed);
    let agg = arr.run_trace(stream)?;
    if agg.old_mismatches > 0 {
        eprintln!("warning: {} records carried an old value that disagrees with the tracked state", agg.old_mismatches);
    }
    let mut w = output(out)?;
    match format {
        OutputFormat::Text => {
            writeln!(w, "# effective config")?;
            for l in toml::to_string(&cfg)?.lines() {
                writeln!(w, "# {l}")?;
            }
            writeln!(w, "scheme              {}", arr.codec().config())?;
            writeln!(w, "{agg}")?;
        }
        OutputFormat::Json => {
            let o = RunOutput {
                config: &cfg,
                scheme: arr.codec().config().label(),
                totals: &agg,
                avg_total_pj: agg.avg_total_pj(),
                avg_data_pj: agg.avg_data_pj(),
                avg_aux_pj: agg.avg_aux_pj(),
                avg_flag_pj: agg.avg_flag_pj(),
                avg_updated_cells: agg.avg_updated_cells(),
                avg_disturb_expected: agg.avg_disturb_expected(),
                avg_disturb_sampled: agg.avg_disturb_sampled(),
                compression_rate: agg.compression_rate(),
            };
            serde_json::to_writer_pretty(&mut w, &o)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let mut spec: SweepSpec = match &args.config {
        Some(p) => read_toml(p)?,
        None => SweepSpec::default(),
    };
    if !args.scheme.is_empty() {
        spec.schemes = args.scheme.clone();
    }
    if !args.granularity.is_empty() {
        spec.granularities = args.granularity.clone();
    }
    spec.threshold = args.threshold_t.or(spec.threshold);
    if !args.energy_scale.is_empty() {
        spec.energy_scales = args.energy_scale.clone();
    }
    if let Some(t) = &args.trace {
        spec.workloads = vec![Workload::from_trace(t.display().to_string(), t)];
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
        for w in &mut spec.workloads {
            if let Some(g) = &mut w.generator {
                g.seed = seed;
            }
        }
    }
    if spec.workloads.is_empty() {
        bail!("the sweep has no workloads; give --trace or [[workloads]] in --config");
    }
    let report = run_sweep(&spec)?;
    let format = match args.format {
        TableFormat::Csv => ReportFormat::Csv,
        TableFormat::Json => ReportFormat::Json,
    };
    emit_report(&report, format, output(args.out.as_deref())?)?;
    if matches!(format, ReportFormat::Csv) {
        // CSV has no room for the config, so it goes next to the report
        let echo = toml::to_string(&spec)?;
        match &args.out {
            Some(p) => {
                let side = p.with_extension("config.toml");
                std::fs::write(&side, echo).with_context(|| format!("writing {}", side.display()))?;
            }
            None => eprint!("# effective sweep config\n{echo}"),
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Inspection {
    binary: bool,
    version: Option<u32>,
    has_old: Option<bool>,
    declared_records: Option<u64>,
    records: u64,
    distinct_addresses: usize,
    /// `max_k[k]`: lines whose deepest compressible k is exactly `k`
    /// (index 0 counts incompressible lines).
    max_k: Vec<u64>,
    /// `compressible_at[k]`: fraction of lines compressible at depth `k`.
    compressible_at: Vec<(u8, f64)>,
}

fn cmd_inspect(trace: &Path, format: OutputFormat) -> Result<()> {
    let (header, stream) = open_trace(trace).with_context(|| format!("opening {}", trace.display()))?;
    let mut max_k = vec![0u64; 18];
    let mut addrs = std::collections::HashSet::new();
    let mut n = 0u64;
    for (i, r) in stream.enumerate() {
        let r = r.with_context(|| format!("record {i}"))?;
        addrs.insert(r.address);
        max_k[max_compressible_k(&r.new).map_or(0, usize::from)] += 1;
        n += 1;
    }
    let compressible_at = (2u8..=17)
        .map(|k| {
            let hits: u64 = max_k[k as usize..].iter().sum();
            (k, if n == 0 { 0.0 } else { hits as f64 / n as f64 })
        })
        .collect();
    let ins = Inspection {
        binary: header.is_some(),
        version: header.map(|h| h.version),
        has_old: header.map(|h| h.has_old),
        declared_records: header.map(|h| h.count),
        records: n,
        distinct_addresses: addrs.len(),
        max_k,
        compressible_at,
    };
    let mut w = output(None)?;
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, &ins)?;
            writeln!(w)?;
        }
        OutputFormat::Text => {
            match header {
                Some(h) => writeln!(w, "binary trace v{}, has_old={}, {} records declared", h.version, h.has_old, h.count)?,
                None => writeln!(w, "text trace")?,
            }
            writeln!(w, "{} records, {} distinct addresses", ins.records, ins.distinct_addresses)?;
            writeln!(w, "k   max-k lines   compressible at k")?;
            writeln!(w, "-   {:>11}", ins.max_k[0])?;
            for (k, frac) in &ins.compressible_at {
                writeln!(w, "{k:<3} {:>11}   {frac:.4}", ins.max_k[*k as usize])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Joins the error chain, skipping causes the outer message already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if out.ends_with(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Encode { scheme, value, old } => cmd_encode(scheme, value, old.as_deref()),
        Command::Decode { scheme, cells } => cmd_decode(scheme, cells),
        Command::Gen(args) => cmd_gen(args),
        Command::Run { scheme, trace, format, out } => cmd_run(scheme, trace, *format, out.as_deref()),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Inspect { trace, format } => cmd_inspect(trace, *format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}
