//! `frfstat` command-line interface.
//!
//! Exit codes: 0 on success, 2 on invalid input or usage, 3 when the data make
//! the statistics degenerate (vanishing spread).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use frfstat::bands::{minimal_prediction_band, prediction_band};
use frfstat::compare::compare_unpaired;
use frfstat::density::{estimate_density_with, DensityOptions, DistanceMetric, NumeratorMode};
use frfstat::io::{Dataset, Format};
use frfstat::resampling::{BootstrapConfig, QuantileMode, SeededIndices};
use frfstat::synth::{generate_synthetic, second_order_response, SyntheticSpec};
use frfstat::{derive_grid, load_dataset, pir_from_frf, save_dataset, Error, Frf, FrfSet};

#[derive(Parser)]
#[command(name = "frfstat", version, about = "Bootstrap statistics for frequency response functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pseudo-impulse responses of a group (columns: t, one per sample).
    Pir(PirArgs),
    /// Prediction band for a new draw (columns: t, mean, lower, upper).
    Band(BandArgs),
    /// Minimal prediction band containing a test FRF, and its confidence level.
    Minband(MinbandArgs),
    /// Bootstrap CDF/PDF of a test FRF's distance from a group.
    Density(DensityArgs),
    /// Unpaired comparison of two groups with residual localization.
    Compare(CompareArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Input {
    /// Dataset file (.json, otherwise CSV).
    data: PathBuf,
    /// Override the format detected from the file extension.
    #[arg(long, value_enum)]
    format: Option<FileFormat>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    Csv,
    Json,
}

impl From<FileFormat> for Format {
    fn from(f: FileFormat) -> Self {
        match f {
            FileFormat::Csv => Format::Csv,
            FileFormat::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct Bootstrap {
    /// Outer replications.
    #[arg(long = "B", default_value_t = frfstat::resampling::DEFAULT_REPLICATIONS)]
    replications: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Histogram bins of the statistic ECDF.
    #[arg(long, default_value_t = frfstat::resampling::DEFAULT_BINS)]
    bins: usize,
    /// Use exact order statistics instead of the histogram.
    #[arg(long)]
    exact_quantiles: bool,
}

impl Bootstrap {
    fn config(&self) -> BootstrapConfig {
        let mut cfg = BootstrapConfig::new(self.replications, self.seed).with_bins(self.bins);
        if self.exact_quantiles {
            cfg.quantile = QuantileMode::Exact;
        }
        cfg
    }
}

#[derive(Args)]
struct TestSample {
    /// Dataset holding the test FRF.
    #[arg(long)]
    test: PathBuf,
    /// Group of the test dataset (default: first by name).
    #[arg(long)]
    test_group: Option<String>,
    /// Sample index within the test group.
    #[arg(long, default_value_t = 0)]
    test_sample: usize,
}

#[derive(Args)]
struct PirArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    group: String,
    /// Emit only this sample.
    #[arg(long)]
    sample: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BandArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    group: String,
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    #[command(flatten)]
    bootstrap: Bootstrap,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MinbandArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    group: String,
    #[command(flatten)]
    test: TestSample,
    #[command(flatten)]
    bootstrap: Bootstrap,
    /// Prefix of `<prefix>_band.txt` and `<prefix>_ecdf.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Squared,
    Max,
}

#[derive(Clone, Copy, ValueEnum)]
enum Numerator {
    /// `Ds / (N Δx)`.
    Code,
    /// `(i2 − i1) / (N Δx)`.
    Span,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    group: String,
    #[command(flatten)]
    test: TestSample,
    #[arg(long, value_enum, default_value_t = Metric::Squared)]
    metric: Metric,
    #[arg(long, value_enum, default_value_t = Numerator::Code)]
    numerator: Numerator,
    #[command(flatten)]
    bootstrap: Bootstrap,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    group1: String,
    #[arg(long)]
    group2: String,
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    /// Nested replications.
    #[arg(long = "Bs", default_value_t = frfstat::resampling::DEFAULT_NESTED_REPLICATIONS)]
    nested: usize,
    #[command(flatten)]
    bootstrap: Bootstrap,
    /// Prefix of `<prefix>_band.txt`, `<prefix>_residuals.txt`, `<prefix>_residual_frf.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Grid frequencies in Hz.
    #[arg(long, value_delimiter = ',', required = true)]
    freqs: Vec<f64>,
    /// Sample rate in Hz (default: ten times the highest frequency).
    #[arg(long)]
    rate: Option<f64>,
    /// Samples per group.
    #[arg(long)]
    n: usize,
    /// Noise std per real and imaginary component.
    #[arg(long)]
    noise: f64,
    /// Gain factor per group; one group is written per value.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    gain: Vec<f64>,
    /// Group names (default: g1, g2, ...).
    #[arg(long, value_delimiter = ',')]
    names: Vec<String>,
    /// Natural frequency of the second-order mean response, Hz.
    #[arg(long, default_value_t = 1.0)]
    natural_frequency: f64,
    /// Damping ratio of the mean response.
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset (.json, otherwise CSV).
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: if e.is_degenerate() { 3 } else { 2 }, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> CliResult {
    let Ok(value) = std::env::var("THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| usage(format!("cannot start {threads} threads: {e}")))
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Pir(a) => pir(a),
        Command::Band(a) => band(a),
        Command::Minband(a) => minband(a),
        Command::Density(a) => density(a),
        Command::Compare(a) => compare(a),
        Command::Synth(a) => synth(a),
    }
}

fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn load(input: &Input) -> CliResult<Dataset> {
    let format = input.format.map(Format::from).unwrap_or_else(|| Format::from_path(&input.data));
    load_dataset(&input.data, format).map_err(|e| match e {
        Error::Io(io) => usage(format!("cannot read {}: {io}", input.data.display())),
        e => usage(format!("{}: {e}", input.data.display())),
    })
}

fn group<'a>(data: &'a Dataset, name: &str) -> CliResult<&'a FrfSet> {
    Ok(data.group(name)?)
}

fn load_test(t: &TestSample, data: &Dataset) -> CliResult<Frf> {
    let test =
        load_dataset(&t.test, Format::from_path(&t.test)).map_err(|e| usage(format!("{}: {e}", t.test.display())))?;
    if test.grid.frequencies() != data.grid.frequencies() {
        return Err(usage(format!("{}: frequencies differ from the dataset's", t.test.display())));
    }
    let set = match &t.test_group {
        Some(name) => group(&test, name)?,
        None => test.groups.values().next().ok_or_else(|| usage(format!("{}: no groups", t.test.display())))?,
    };
    set.samples()
        .get(t.test_sample)
        .cloned()
        .ok_or_else(|| usage(format!("test sample {} out of range (group has {} samples)", t.test_sample, set.len())))
}

/// Writes `#`-prefixed header lines followed by whitespace-separated columns.
fn columns(header: &[String], names: &[&str], cols: &[&[f64]]) -> String {
    let mut out = String::new();
    for line in header {
        writeln!(out, "# {line}").unwrap();
    }
    writeln!(out, "# {}", names.join(" ")).unwrap();
    for i in 0..cols[0].len() {
        let row: Vec<String> = cols.iter().map(|c| num(c[i])).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out
}

fn emit(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn pir(a: PirArgs) -> CliResult {
    let data = load(&a.input)?;
    let set = group(&data, &a.group)?;
    let picked: Vec<usize> = match a.sample {
        Some(i) if i >= set.len() => {
            return Err(usage(format!("sample {i} out of range (group '{}' has {} samples)", a.group, set.len())))
        }
        Some(i) => vec![i],
        None => (0..set.len()).collect(),
    };
    let t = data.grid.times();
    let curves: Vec<Vec<f64>> = picked
        .iter()
        .map(|&i| Ok(pir_from_frf(&set.samples()[i], &data.grid)?.values().to_vec()))
        .collect::<CliResult<_>>()?;
    let names: Vec<String> = std::iter::once("t".to_string()).chain(picked.iter().map(|i| format!("x{i}"))).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let cols: Vec<&[f64]> = std::iter::once(t.as_slice()).chain(curves.iter().map(Vec::as_slice)).collect();
    let header = vec![format!("pseudo-impulse responses, group {}", a.group)];
    emit(a.out.as_deref(), &columns(&header, &names, &cols))
}

fn band(a: BandArgs) -> CliResult {
    let data = load(&a.input)?;
    let set = group(&data, &a.group)?;
    let cfg = a.bootstrap.config();
    let band = prediction_band(set, &data.grid, a.alpha, &cfg)?;
    let header = vec![
        format!(
            "prediction band, group {}, alpha {}, B {}, seed {}",
            a.group,
            num(a.alpha),
            cfg.replications,
            cfg.seed
        ),
        format!("C_p {}", num(band.scale)),
    ];
    let t = data.grid.times();
    emit(
        a.out.as_deref(),
        &columns(&header, &["t", "mean", "lower", "upper"], &[&t, &band.mean, &band.lower, &band.upper]),
    )
}

fn minband(a: MinbandArgs) -> CliResult {
    let data = load(&a.input)?;
    let set = group(&data, &a.group)?;
    let test = load_test(&a.test, &data)?;
    let cfg = a.bootstrap.config();
    let res = minimal_prediction_band(&test, set, &data.grid, &cfg)?;
    println!("alpha {}", num(res.alpha));
    println!("C_p {}", num(res.c_p));
    if let Some(prefix) = &a.out {
        let t = data.grid.times();
        let header =
            vec![format!("minimal prediction band, group {}, alpha {}, C_p {}", a.group, num(res.alpha), num(res.c_p))];
        emit(
            Some(&with_suffix(prefix, "_band.txt")),
            &columns(
                &header,
                &["t", "mean", "lower", "upper", "test"],
                &[&t, &res.band.mean, &res.band.lower, &res.band.upper, &res.test_pir],
            ),
        )?;
        emit(Some(&with_suffix(prefix, "_ecdf.txt")), &ecdf_columns(&res.ecdf, "bootstrap statistic ECDF"))?;
    }
    Ok(())
}

fn ecdf_columns(e: &frfstat::StatEcdf, title: &str) -> String {
    let upper = &e.bin_edges()[1..];
    columns(&[title.to_string()], &["upper_edge", "cdf"], &[upper, e.cdf()])
}

fn density(a: DensityArgs) -> CliResult {
    let data = load(&a.input)?;
    let set = group(&data, &a.group)?;
    let test = load_test(&a.test, &data)?;
    let cfg = a.bootstrap.config();
    let options = DensityOptions {
        metric: match a.metric {
            Metric::Squared => DistanceMetric::IntegratedSquared,
            Metric::Max => DistanceMetric::MaxAbsolute,
        },
        numerator: match a.numerator {
            Numerator::Code => NumeratorMode::CodeCompatible,
            Numerator::Span => NumeratorMode::IndexSpan,
        },
    };
    let est = estimate_density_with(&test, set, &data.grid, &cfg, &options, &SeededIndices::new(cfg.seed))?;
    println!("F {}", num(est.cdf_mean));
    println!("sigma_F {}", num(est.cdf_std));
    println!("f {}", num(est.pdf_mean));
    println!("sigma_f {}", num(est.pdf_std));
    if est.skipped > 0 {
        println!("# {} of {} replications skipped for the pdf (zero spread)", est.skipped, cfg.replications);
    }
    Ok(())
}

fn compare(a: CompareArgs) -> CliResult {
    let data = load(&a.input)?;
    let set1 = group(&data, &a.group1)?;
    let set2 = group(&data, &a.group2)?;
    let cfg = a.bootstrap.config().with_nested(a.nested);
    let res = compare_unpaired(set1, set2, &data.grid, a.alpha, &cfg)?;
    println!("{}", if res.reject_null { "reject" } else { "accept" });
    println!("C_u {}", num(res.band.scale));
    if let Some(prefix) = &a.out {
        let t = data.grid.times();
        let title = format!(
            "{} - {}, alpha {}, B {}, Bs {}, seed {}, C_u {}",
            a.group1,
            a.group2,
            num(a.alpha),
            cfg.replications,
            cfg.nested_replications,
            cfg.seed,
            num(res.band.scale)
        );
        emit(
            Some(&with_suffix(prefix, "_band.txt")),
            &columns(
                &[format!("difference band, {title}")],
                &["t", "diff_mean", "lower", "upper"],
                &[&t, &res.diff_mean, &res.band.lower, &res.band.upper],
            ),
        )?;
        emit(
            Some(&with_suffix(prefix, "_residuals.txt")),
            &columns(&[format!("residuals, {title}")], &["t", "residual"], &[&t, &res.residuals]),
        )?;
        let values = res.residual_frf.values();
        let re: Vec<f64> = values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = values.iter().map(|v| v.im).collect();
        emit(
            Some(&with_suffix(prefix, "_residual_frf.txt")),
            &columns(
                &[format!("residual FRF, {title}")],
                &["freq_hz", "magnitude", "re", "im"],
                &[data.grid.frequencies(), &res.residual_frf.magnitudes(), &re, &im],
            ),
        )?;
    }
    Ok(())
}

fn synth(a: SynthArgs) -> CliResult {
    let grid = derive_grid(&a.freqs, a.rate)?;
    if !a.names.is_empty() && a.names.len() != a.gain.len() {
        return Err(usage(format!("{} names given for {} gains", a.names.len(), a.gain.len())));
    }
    let mean = second_order_response(grid.frequencies(), a.natural_frequency, a.damping);
    let mut groups = std::collections::BTreeMap::new();
    for (i, &gain) in a.gain.iter().enumerate() {
        let name = a.names.get(i).cloned().unwrap_or_else(|| format!("g{}", i + 1));
        let spec = SyntheticSpec::new(mean.clone(), a.noise, a.n, gain)?;
        let set = generate_synthetic(&spec, a.seed.wrapping_add(i as u64));
        if groups.insert(name.clone(), set).is_some() {
            return Err(usage(format!("duplicate group name '{name}'")));
        }
    }
    let mut metadata = std::collections::BTreeMap::new();
    metadata.insert("generator".to_string(), format!("synth seed={} noise={} n={}", a.seed, a.noise, a.n));
    let data = Dataset::new(grid, a.rate, groups, metadata)?;
    save_dataset(&data, &a.out, Format::from_path(&a.out))
        .map_err(|e| usage(format!("cannot write {}: {e}", a.out.display())))
}
