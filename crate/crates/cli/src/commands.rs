//! The six subcommands: ingest, fit, predict, evaluate, spectrum, plot.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use walkdir::WalkDir;

use flowdmd_core::dmd::{self, DmdModel};
use flowdmd_core::eval::evaluate_model;
use flowdmd_core::formats;
use flowdmd_core::ingest::{self, ColumnMap, PlaceIndex, SnapshotMatrix};

use crate::config::{parse_pair, parse_ranks, parse_week_range, ConfigFile};
use crate::svg::{Chart, Series};

pub const SNAPSHOT_FILE: &str = "snapshot.txt";

fn out_dir(config: &ConfigFile, flag: Option<PathBuf>) -> Result<PathBuf> {
    let dir = config.resolve(
        flag,
        "out",
        |raw| Ok(PathBuf::from(raw)),
        Some(PathBuf::from(".")),
    )?;
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

fn load_snapshot(path: &Path) -> Result<SnapshotMatrix> {
    let file =
        File::open(path).with_context(|| format!("cannot open snapshot file {}", path.display()))?;
    formats::read_snapshot(BufReader::new(file))
        .with_context(|| format!("cannot parse snapshot file {}", path.display()))
}

fn load_model(path: &Path) -> Result<DmdModel> {
    dmd::read_model_file(path)
        .with_context(|| format!("cannot read model file {}", path.display()))
}

/// Resolves a place token: exact identifier first, else a one-based
/// position in the sorted place index.
fn resolve_place(index: &PlaceIndex, token: &str) -> Result<usize> {
    if let Some(idx) = index.index_of(token) {
        return Ok(idx);
    }
    if let Ok(position) = token.parse::<usize>() {
        if (1..=index.len()).contains(&position) {
            return Ok(position - 1);
        }
    }
    bail!("unknown place '{token}': not an id and not a 1-based index within 1..={}", index.len())
}

fn filename_safe(token: &str) -> String {
    token
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Integer side length of a k^2 state vector.
fn state_side(n: usize) -> Result<usize> {
    let k = (n as f64).sqrt().round() as usize;
    if k * k != n {
        bail!("state dimension {n} is not a perfect square");
    }
    Ok(k)
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Input CSV files or directories (directories are scanned for *.csv)
    #[arg(long = "input")]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Column holding the origin identifier
    #[arg(long)]
    col_origin: Option<String>,
    /// Column holding the destination identifier
    #[arg(long)]
    col_dest: Option<String>,
    /// Column holding the week date or date range
    #[arg(long)]
    col_date: Option<String>,
    /// Column holding the visitor flow
    #[arg(long)]
    col_flow: Option<String>,
    /// Optional column holding the origin population
    #[arg(long)]
    col_pop: Option<String>,
    /// Optional column holding the origin device count
    #[arg(long)]
    col_devices: Option<String>,
    /// Field delimiter
    #[arg(long)]
    delimiter: Option<char>,
    /// Replace each visitor flow with the inferred population flow
    /// (needs --col-pop and --col-devices)
    #[arg(long)]
    pop_flow: bool,
}

fn collect_csv_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found = Vec::new();
            for entry in WalkDir::new(input).sort_by_file_name() {
                let entry = entry?;
                if entry.file_type().is_file()
                    && entry.path().extension().is_some_and(|e| e == "csv")
                {
                    found.push(entry.into_path());
                }
            }
            if found.is_empty() {
                bail!("no .csv files under {}", input.display());
            }
            files.extend(found);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            bail!("input {} does not exist", input.display());
        }
    }
    if files.is_empty() {
        bail!("no input files given (use --input or the 'input' config key)");
    }
    Ok(files)
}

pub fn run_ingest(args: IngestArgs) -> Result<()> {
    let config = ConfigFile::load(args.config.as_deref())?;
    let inputs = if args.inputs.is_empty() {
        match config.get("input") {
            Some(raw) => raw.split(',').map(|s| PathBuf::from(s.trim())).collect(),
            None => bail!("missing required option 'input' (flag or config)"),
        }
    } else {
        args.inputs
    };
    let out = out_dir(&config, args.out)?;

    let defaults = ColumnMap::default();
    let map = ColumnMap {
        origin: config.resolve(args.col_origin, "col_origin", parse_string, Some(defaults.origin))?,
        dest: config.resolve(args.col_dest, "col_dest", parse_string, Some(defaults.dest))?,
        date: config.resolve(args.col_date, "col_date", parse_string, Some(defaults.date))?,
        flow: config.resolve(args.col_flow, "col_flow", parse_string, Some(defaults.flow))?,
        pop_origin: config.resolve_opt(args.col_pop, "col_pop", parse_string)?,
        num_devices: config.resolve_opt(args.col_devices, "col_devices", parse_string)?,
        delimiter: config.resolve(
            args.delimiter,
            "delimiter",
            |raw| {
                let mut chars = raw.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if c.is_ascii() => Ok(c),
                    _ => bail!("delimiter must be a single ascii character, got '{raw}'"),
                }
            },
            Some(','),
        )? as u8,
    };

    let pop_flow = args.pop_flow
        || config.get("pop_flow").is_some_and(|raw| matches!(raw, "true" | "1" | "yes"));
    if pop_flow && (map.pop_origin.is_none() || map.num_devices.is_none()) {
        bail!("--pop-flow needs the population and device columns mapped");
    }

    let files = collect_csv_files(&inputs)?;
    let mut records = Vec::new();
    for file in &files {
        let reader =
            File::open(file).with_context(|| format!("cannot open {}", file.display()))?;
        let mut parsed = ingest::parse_flow_csv(reader, &map)
            .with_context(|| format!("while parsing {}", file.display()))?;
        records.append(&mut parsed);
    }
    if records.is_empty() {
        bail!("inputs contained a header but no data rows");
    }
    if pop_flow {
        for record in &mut records {
            record.visitor_flow = ingest::infer_pop_flow(record).with_context(|| {
                format!(
                    "cannot infer population flow for {} -> {} week {}",
                    record.origin_id, record.dest_id, record.week_start
                )
            })?;
        }
    }

    let snapshots = ingest::snapshot_from_records(&records)?;
    let path = out.join(SNAPSHOT_FILE);
    let sink = File::create(&path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    formats::write_snapshot(&snapshots, BufWriter::new(sink))?;

    println!("k {}", snapshots.k());
    println!("m {}", snapshots.num_weeks());
    for (label, total) in snapshots.week_labels().iter().zip(snapshots.weekly_totals()) {
        println!("week {} total {}", label.format("%Y-%m-%d"), total);
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn parse_string(raw: &str) -> Result<String> {
    Ok(raw.to_string())
}

// ------------------------------------------------------------------- fit

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Snapshot-matrix file produced by `ingest`
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training week range A:B (one-based, inclusive; default all weeks)
    #[arg(long)]
    train_weeks: Option<String>,
    /// Target ranks, comma separated
    #[arg(long)]
    rank: Option<String>,
    /// Snapshot spacing in weeks
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run_fit(args: FitArgs) -> Result<()> {
    let config = ConfigFile::load(args.config.as_deref())?;
    let input = config.resolve(args.input, "input", |raw| Ok(PathBuf::from(raw)), None)?;
    let out = out_dir(&config, args.out)?;
    let rank_flag = args.rank.as_deref().map(parse_ranks).transpose()?;
    let ranks = config.resolve(rank_flag, "rank", parse_ranks, None)?;
    let dt = config.resolve(args.dt, "dt", |raw| Ok(raw.parse()?), Some(1.0))?;

    let snapshots = load_snapshot(&input)?;
    let train_flag = args.train_weeks.as_deref().map(parse_week_range).transpose()?;
    let train = config.resolve(
        train_flag,
        "train_weeks",
        parse_week_range,
        Some((1, snapshots.num_weeks())),
    )?;
    let training = snapshots.sub_weeks(train.0, train.1)?;

    for rank in ranks {
        let model = DmdModel::fit(&training, rank, dt)
            .with_context(|| format!("fit failed at rank {rank}"))?;
        if model.was_truncated() {
            eprintln!(
                "warning: rank {rank} exceeds the effective rank; truncated to {}",
                model.svd_rank()
            );
        }
        let path = out.join(format!("model_r{rank}.dmd"));
        dmd::write_model_file(&model, &path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        println!(
            "model_r{rank}.dmd: requested {} retained {} dropped {} spectral radius {}",
            model.requested_rank(),
            model.rank(),
            model.dropped_modes(),
            model.spectral_radius()
        );
    }
    Ok(())
}

// --------------------------------------------------------------- predict

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file produced by `fit`
    #[arg(long)]
    model: Option<PathBuf>,
    /// Snapshot file; needed to resolve --pair place identifiers
    #[arg(long)]
    input: Option<PathBuf>,
    /// Number of weekly steps to forecast (t = 0 .. horizon-1)
    #[arg(long)]
    horizon: Option<usize>,
    /// Place pair origin:dest whose series should be extracted
    #[arg(long = "pair")]
    pairs: Vec<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run_predict(args: PredictArgs) -> Result<()> {
    let config = ConfigFile::load(args.config.as_deref())?;
    let model_path = config.resolve(args.model, "model", |raw| Ok(PathBuf::from(raw)), None)?;
    let horizon = config.resolve(args.horizon, "horizon", |raw| Ok(raw.parse()?), None)?;
    let out = out_dir(&config, args.out)?;
    let pairs: Vec<(String, String)> = if args.pairs.is_empty() {
        match config.get("pair") {
            Some(raw) => raw.split(',').map(parse_pair).collect::<Result<_>>()?,
            None => Vec::new(),
        }
    } else {
        args.pairs.iter().map(|p| parse_pair(p)).collect::<Result<_>>()?
    };

    let model = load_model(&model_path)?;
    if horizon == 0 {
        bail!("horizon must be >= 1");
    }
    let columns = model.reconstruct(horizon)?;
    let rank = model.requested_rank();
    let forecast = formats::ForecastFile {
        rank,
        dt: model.dt(),
        t0: model.t0_label(),
        columns,
    };
    let path = out.join(format!("forecast_r{rank}.txt"));
    let sink = File::create(&path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    formats::write_forecast(&forecast, BufWriter::new(sink))?;
    eprintln!("wrote {}", path.display());

    if !pairs.is_empty() {
        let input = config.resolve(args.input, "input", |raw| Ok(PathBuf::from(raw)), None)
            .context("--input snapshot file is required to resolve --pair ids")?;
        let snapshots = load_snapshot(&input)?;
        let k = state_side(model.state_dim())?;
        if k != snapshots.k() {
            bail!(
                "model has k={k} places but snapshot file has k={}",
                snapshots.k()
            );
        }
        for (origin_token, dest_token) in &pairs {
            let origin = resolve_place(snapshots.place_index(), origin_token)?;
            let dest = resolve_place(snapshots.place_index(), dest_token)?;
            let flat = dest * k + origin;
            let name = format!(
                "pair_{}_{}_r{rank}.txt",
                filename_safe(origin_token),
                filename_safe(dest_token)
            );
            let path = out.join(name);
            let mut sink = BufWriter::new(
                File::create(&path).with_context(|| format!("cannot create {}", path.display()))?,
            );
            for j in 0..horizon {
                let t = j as f64 * model.dt();
                writeln!(sink, "{t} {}", forecast.columns.column(j)[flat])?;
            }
            sink.flush()?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

// -------------------------------------------------------------- evaluate

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model file produced by `fit`
    #[arg(long)]
    model: Option<PathBuf>,
    /// Snapshot file holding the truth weeks
    #[arg(long)]
    input: Option<PathBuf>,
    /// Test week range A:B (one-based, inclusive)
    #[arg(long)]
    test_weeks: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let config = ConfigFile::load(args.config.as_deref())?;
    let model_path = config.resolve(args.model, "model", |raw| Ok(PathBuf::from(raw)), None)?;
    let input = config.resolve(args.input, "input", |raw| Ok(PathBuf::from(raw)), None)?;
    let test_flag = args.test_weeks.as_deref().map(parse_week_range).transpose()?;
    let test = config.resolve(test_flag, "test_weeks", parse_week_range, None)?;
    let out = out_dir(&config, args.out)?;

    let model = load_model(&model_path)?;
    let snapshots = load_snapshot(&input)?;
    let report = evaluate_model(&model, &snapshots, test)?;

    let rank = report.requested_rank;
    let path = out.join(format!("errors_r{rank}.csv"));
    let sink = File::create(&path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    formats::write_error_report(&report, BufWriter::new(sink))?;
    formats::write_error_report(&report, std::io::stdout().lock())?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

// -------------------------------------------------------------- spectrum

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Snapshot-matrix file
    #[arg(long)]
    input: Option<PathBuf>,
    /// Week range A:B to analyze (default all weeks)
    #[arg(long)]
    train_weeks: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run_spectrum(args: SpectrumArgs) -> Result<()> {
    let config = ConfigFile::load(args.config.as_deref())?;
    let input = config.resolve(args.input, "input", |raw| Ok(PathBuf::from(raw)), None)?;
    let out = out_dir(&config, args.out)?;

    let snapshots = load_snapshot(&input)?;
    let range_flag = args.train_weeks.as_deref().map(parse_week_range).transpose()?;
    let range = config.resolve(
        range_flag,
        "train_weeks",
        parse_week_range,
        Some((1, snapshots.num_weeks())),
    )?;
    let window = snapshots.sub_weeks(range.0, range.1)?;
    let report = dmd::spectrum(&window)?;

    let txt_path = out.join("spectrum.txt");
    let sink = File::create(&txt_path)
        .with_context(|| format!("cannot create {}", txt_path.display()))?;
    formats::write_spectrum(&report, BufWriter::new(sink))?;

    let chart = Chart {
        title: format!(
            "Singular values, weeks {} to {}",
            report.first_week.format("%Y-%m-%d"),
            report.last_week.format("%Y-%m-%d")
        ),
        x_label: "index".to_string(),
        y_label: "singular value".to_string(),
        log_y: true,
        scatter: true,
        series: vec![Series {
            label: "sigma".to_string(),
            points: report
                .singular_values
                .iter()
                .enumerate()
                .map(|(i, s)| ((i + 1) as f64, *s))
                .collect(),
        }],
    };
    let svg_path = out.join("spectrum.svg");
    std::fs::write(&svg_path, chart.render())
        .with_context(|| format!("cannot write {}", svg_path.display()))?;
    eprintln!("wrote {} and {}", txt_path.display(), svg_path.display());
    Ok(())
}

// ------------------------------------------------------------------ plot

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Snapshot-matrix file holding the truth series
    #[arg(long)]
    input: Option<PathBuf>,
    /// Forecast files produced by `predict` (zero or more)
    #[arg(long = "forecast")]
    forecasts: Vec<PathBuf>,
    /// Place pair origin:dest to plot
    #[arg(long)]
    pair: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run_plot(args: PlotArgs) -> Result<()> {
    let config = ConfigFile::load(args.config.as_deref())?;
    let input = config.resolve(args.input, "input", |raw| Ok(PathBuf::from(raw)), None)?;
    let pair_raw = config.resolve(args.pair, "pair", parse_string, None)?;
    let out = out_dir(&config, args.out)?;
    let forecast_paths: Vec<PathBuf> = if args.forecasts.is_empty() {
        match config.get("forecast") {
            Some(raw) => raw.split(',').map(|s| PathBuf::from(s.trim())).collect(),
            None => Vec::new(),
        }
    } else {
        args.forecasts
    };

    let snapshots = load_snapshot(&input)?;
    let (origin_token, dest_token) = parse_pair(&pair_raw)?;
    let origin = resolve_place(snapshots.place_index(), &origin_token)?;
    let dest = resolve_place(snapshots.place_index(), &dest_token)?;
    let k = snapshots.k();
    let flat = dest * k + origin;

    let truth_points: Vec<(f64, f64)> = snapshots
        .pair_series(origin, dest)
        .into_iter()
        .enumerate()
        .map(|(w, v)| ((w + 1) as f64, v))
        .collect();
    let mut series = vec![Series { label: "truth".to_string(), points: truth_points }];

    for path in &forecast_paths {
        let file = File::open(path)
            .with_context(|| format!("cannot open forecast file {}", path.display()))?;
        let forecast = formats::read_forecast(BufReader::new(file))
            .with_context(|| format!("cannot parse forecast file {}", path.display()))?;
        if forecast.columns.rows() != snapshots.state_dim() {
            bail!(
                "forecast {} has state dimension {}, truth has {}",
                path.display(),
                forecast.columns.rows(),
                snapshots.state_dim()
            );
        }
        // Align the forecast clock with the truth week axis via t0.
        let start_week = match snapshots.week_labels().iter().position(|l| *l == forecast.t0) {
            Some(pos) => pos + 1,
            None => {
                eprintln!(
                    "warning: forecast t0 {} not among truth weeks; plotting from week 1",
                    forecast.t0
                );
                1
            }
        };
        let points: Vec<(f64, f64)> = (0..forecast.columns.cols())
            .map(|j| ((start_week + j) as f64, forecast.columns.column(j)[flat]))
            .collect();
        series.push(Series { label: format!("r={}", forecast.rank), points });
    }

    let chart = Chart {
        title: format!("Flow {origin_token} to {dest_token} (symmetrized)"),
        x_label: "week".to_string(),
        y_label: "visitor flow".to_string(),
        log_y: false,
        scatter: false,
        series,
    };
    let path = out.join(format!(
        "pair_{}_{}.svg",
        filename_safe(&origin_token),
        filename_safe(&dest_token)
    ));
    std::fs::write(&path, chart.render())
        .with_context(|| format!("cannot write {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
