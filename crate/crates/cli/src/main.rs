//! `thinband`: generate point sets, count thin-band distance pairs, and run the
//! lattice, Fourier, energy and scan experiments.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use thinband_core::analysis::{self, csv_real, Family, ScanConfig, DEFAULT_SEED};
use thinband_core::exec::Execution;
use thinband_core::fourier::{self, DecayGrid, MeasureParams};
use thinband_core::geometry::NormBody;
use thinband_core::lattice;
use thinband_core::paircount::{self, BandQuery, Method};
use thinband_core::pointsets::{self, PointSet, DEFAULT_MARGIN};
use thinband_core::{Error, Result};

#[derive(Parser)]
#[command(name = "thinband", version, about = "Thin-annulus distance pair experiments")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file whose keys override the command-line flags. For `scan` this is
    /// the scan configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated point set.
    Generate(GenerateArgs),
    /// Count ordered pairs in the band [k, k + delta].
    Count(CountArgs),
    /// Lattice point counts N_d(R) in closed balls.
    Lattice(LatticeArgs),
    /// Annulus transform decay grid, or the chained frequency-side estimate.
    Fourier(FourierArgs),
    /// Discrete Riesz energy of jittered sets across scales q.
    Energy(EnergyArgs),
    /// Run a scan described by a JSON config (--config).
    Scan(ScanArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    #[default]
    Grid,
    Brute,
    Both,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct SourceArgs {
    /// lattice-cube, lattice-ball, jittered or lens
    #[arg(long)]
    family: Option<String>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Side of the cube (lattice-cube, jittered).
    #[arg(long)]
    m: Option<u64>,
    /// Ball radius (lattice-ball).
    #[arg(long)]
    radius: Option<f64>,
    /// Number of points (lens).
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct GenerateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceArgs,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct CountArgs {
    /// Point set CSV; replaces the generator flags.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceArgs,
    #[arg(long, default_value = "euclidean")]
    body: String,
    /// Inner radius; repeat for several queries.
    #[arg(long, required = true)]
    k: Vec<f64>,
    #[arg(long, conflicts_with = "theorem_width")]
    delta: Option<f64>,
    /// Use delta = n^{-(d-1)/(d(d+1))}.
    #[arg(long)]
    theorem_width: bool,
    #[arg(long, value_enum, default_value_t = MethodArg::Grid)]
    method: MethodArg,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct LatticeArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Radius; repeat for several.
    #[arg(long)]
    radius: Vec<f64>,
    /// Radii `start:stop:step`, stop included.
    #[arg(long)]
    range: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FourierReport {
    #[default]
    Decay,
    Chained,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct FourierArgs {
    #[arg(long, value_enum, default_value_t = FourierReport::Decay)]
    report: FourierReport,
    /// Dimensions of the decay grid.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3])]
    dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0, 8.0])]
    radii: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05])]
    widths: Vec<f64>,
    /// Frequencies 2^0 .. 2^xi_exp.
    #[arg(long, default_value_t = 12)]
    xi_exp: u32,
    /// Chained report: scale q (jittered set on [0, 2q)^2).
    #[arg(long, default_value_t = 4)]
    q: u64,
    /// Chained report: energy exponent.
    #[arg(long, default_value_t = 1.5)]
    s: f64,
    /// Chained report: annulus inner radius.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Chained report: frequency cutoff.
    #[arg(long, default_value_t = 16.0)]
    xi_max: f64,
    /// Chained report: frequency grid step.
    #[arg(long, default_value_t = 0.125)]
    step: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct EnergyArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Energy exponent, default (d + 1) / 2.
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [8u64, 16, 32, 64, 128])]
    q: Vec<u64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Clone, Debug)]
struct ScanArgs {
    /// Output path prefix; overrides `output` in the config. Writes
    /// `<prefix>.csv`, `<prefix>.json` and, with plotting, `<prefix>.svg`.
    #[arg(long)]
    output: Option<String>,
    /// Emit the SVG plot.
    #[arg(long)]
    plot: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) | Error::Parse(_) => 2,
        Error::Resource(_) => 3,
        Error::Numeric(_) => 4,
        Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(0) => Err(Error::input("--threads must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::resource(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| run(&cli))),
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let record = json!({ "error": { "kind": e.kind(), "message": e.to_string(), "exit_code": code } });
            eprintln!("{record}");
            ExitCode::from(code)
        }
    }
}

fn read_config(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::input(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::input(format!("config {} is not valid JSON: {e}", path.display())))
}

/// Overlay the keys of a JSON config object onto parsed flags.
fn merged<T: Serialize + DeserializeOwned>(args: &T, config: Option<&Path>) -> Result<T> {
    let Some(path) = config else {
        return serde_json::from_value(serde_json::to_value(args).expect("flags serialize"))
            .map_err(|e| Error::input(e.to_string()));
    };
    let Value::Object(overlay) = read_config(path)? else {
        return Err(Error::input("config must be a JSON object"));
    };
    let Value::Object(mut base) = serde_json::to_value(args).expect("flags serialize") else {
        unreachable!("argument structs serialize to objects")
    };
    for (key, value) in overlay {
        let key = key.replace('-', "_");
        if !base.contains_key(&key) {
            return Err(Error::input(format!("unknown config key {key:?}")));
        }
        base.insert(key, value);
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| Error::input(format!("invalid config: {e}")))
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.config.as_deref();
    let exec = Execution::Parallel;
    match &cli.command {
        Command::Generate(a) => generate(&merged(a, cfg)?),
        Command::Count(a) => count(exec, &merged(a, cfg)?),
        Command::Lattice(a) => lattice_cmd(exec, &merged(a, cfg)?),
        Command::Fourier(a) => fourier_cmd(exec, &merged(a, cfg)?),
        Command::Energy(a) => energy_cmd(exec, &merged(a, cfg)?),
        Command::Scan(a) => scan(exec, a, cfg),
    }
}

/// Write `text` to `path`, or stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(Error::from),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn need<T>(v: Option<T>, flag: &str, family: &str) -> Result<T> {
    v.ok_or_else(|| Error::input(format!("family {family} needs --{flag}")))
}

fn build_set(src: &SourceArgs) -> Result<PointSet> {
    let name = src.family.as_deref().ok_or_else(|| Error::input("--family (or --input) is required"))?;
    let family: Family = name.parse()?;
    match family {
        Family::LatticeCube => pointsets::gen_lattice_cube(src.d, need(src.m, "m", name)?),
        Family::Jittered => pointsets::gen_jittered(src.d, need(src.m, "m", name)?, src.seed, src.margin),
        Family::LatticeBall => pointsets::gen_lattice_ball(src.d, need(src.radius, "radius", name)?),
        Family::Lens => {
            if src.d != 4 {
                return Err(Error::input("the lens family lives in d = 4 (pass --d 4)"));
            }
            pointsets::gen_lens(need(src.n, "n", name)?)
        }
    }
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let set = build_set(&a.source)?;
    let text = match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            set.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv is ascii")
        }
        Format::Json => {
            let points: Vec<&[f64]> = set.points().collect();
            let v = json!({
                "d": set.dim(),
                "n": set.len(),
                "separation": set.separation(),
                "provenance": set.provenance(),
                "points": points,
            });
            format!("{v}\n")
        }
    };
    emit(a.output.as_deref(), &text)
}

fn count(exec: Execution, a: &CountArgs) -> Result<()> {
    let set = match &a.input {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Error::input(format!("cannot open {}: {e}", path.display())))?;
            PointSet::read_csv(BufReader::new(file))?
        }
        None => build_set(&a.source)?,
    };
    let body = NormBody::parse(&a.body, set.dim())?;
    let delta = match (a.delta, a.theorem_width) {
        (Some(d), false) => d,
        (None, true) => paircount::theorem_band_width(set.len() as u64, set.dim()),
        (None, false) => return Err(Error::input("pass --delta or --theorem-width")),
        (Some(_), true) => return Err(Error::input("--delta and --theorem-width are exclusive")),
    };
    let queries = a.k.iter().map(|&k| BandQuery::new(body.clone(), k, delta)).collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    for q in &queries {
        let mut results = Vec::new();
        if matches!(a.method, MethodArg::Grid | MethodArg::Both) {
            results.push(paircount::count_band_grid_with(exec, &set, q)?);
        }
        if matches!(a.method, MethodArg::Brute | MethodArg::Both) {
            results.push(paircount::count_band_bruteforce_with(exec, &set, q)?);
        }
        if let [g, b] = results.as_slice() {
            if g.count != b.count {
                return Err(Error::numeric(format!(
                    "grid and brute-force counts disagree at k={}, delta={}: grid {} vs brute {}",
                    q.k, q.delta, g.count, b.count
                )));
            }
        }
        records.extend(results);
    }
    let text = match a.format {
        Format::Json => records.iter().map(|r| format!("{}\n", serde_json::to_string(r).expect("record"))).collect(),
        Format::Csv => {
            let mut s = String::from("n,body,k,delta,method,count\n");
            for r in &records {
                let method = match r.method {
                    Method::Grid => "grid",
                    Method::Bruteforce => "bruteforce",
                };
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.n,
                    r.query.body,
                    csv_real(r.query.k),
                    csv_real(r.query.delta),
                    method,
                    r.count
                ));
            }
            s
        }
    };
    emit(a.output.as_deref(), &text)
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::input(format!("bad range {s:?}, expected start:stop:step"))))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(Error::input(format!("bad range {s:?}, expected start:stop:step")));
    };
    if !(step > 0.0 && start >= 0.0 && stop >= start) {
        return Err(Error::input(format!("bad range {s:?}: need 0 <= start <= stop and step > 0")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as u64;
    if count > 10_000_000 {
        return Err(Error::resource(format!("range {s:?} has too many radii")));
    }
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

fn lattice_cmd(exec: Execution, a: &LatticeArgs) -> Result<()> {
    let mut radii = a.radius.clone();
    if let Some(r) = &a.range {
        radii.extend(parse_range(r)?);
    }
    if radii.is_empty() {
        return Err(Error::input("pass --radius or --range"));
    }
    if a.d < 2 {
        return Err(Error::input(format!("dimension must be at least 2, got {}", a.d)));
    }
    for r in &radii {
        lattice::squared_radius_bound(*r)?;
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let shells = radii
        .iter()
        .map(|&r| lattice::count_ball_lattice_with(exec, a.d, r))
        .collect::<Result<Vec<_>>>()?;
    let text = match a.format {
        Format::Csv => {
            let mut s = String::from("d,R,N,main_term,discrepancy\n");
            for sh in &shells {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    sh.d,
                    csv_real(sh.radius),
                    sh.count,
                    csv_real(sh.main_term),
                    csv_real(sh.discrepancy)
                ));
            }
            s
        }
        Format::Json => format!("{}\n", serde_json::to_string(&shells).expect("shells")),
    };
    emit(a.output.as_deref(), &text)
}

fn fourier_cmd(exec: Execution, a: &FourierArgs) -> Result<()> {
    let text = match a.report {
        FourierReport::Decay => {
            if a.xi_exp > 40 {
                return Err(Error::input("--xi-exp must be at most 40"));
            }
            let grid = DecayGrid {
                dims: a.dims.clone(),
                radii: a.radii.clone(),
                widths: a.widths.clone(),
                xis: (0..=a.xi_exp as i32).map(|j| 2f64.powi(j)).collect(),
            };
            for &d in &grid.dims {
                if d != 2 && d != 3 {
                    return Err(Error::input(format!("decay grid supports d = 2, 3, got {d}")));
                }
            }
            let rows = fourier::decay_table(exec, &grid)?;
            match a.format {
                Format::Csv => {
                    let mut s = String::from("d,t,width,xi_mag,ft,bound,ratio\n");
                    for r in &rows {
                        s.push_str(&format!(
                            "{},{},{},{},{},{},{}\n",
                            r.d,
                            csv_real(r.t),
                            csv_real(r.width),
                            csv_real(r.xi),
                            csv_real(r.ft),
                            csv_real(r.bound),
                            csv_real(r.ratio)
                        ));
                    }
                    s
                }
                Format::Json => {
                    let stability = fourier::decay_stability(&rows);
                    format!("{}\n", json!({ "rows": rows, "stability": stability }))
                }
            }
        }
        FourierReport::Chained => {
            let params = MeasureParams::new(a.q, a.s);
            params.validate(2)?;
            let set = analysis::energy_set(2, a.q, a.seed, DEFAULT_MARGIN)?;
            let r = fourier::chained_estimate(exec, &set, &params, a.t, a.xi_max, a.step)?;
            match a.format {
                Format::Json => format!("{}\n", serde_json::to_string(&r).expect("report")),
                Format::Csv => format!(
                    "q,s,t,width,xi_max,step,with_transform,with_bound,reference,bound_over_reference\n{},{},{},{},{},{},{},{},{},{}\n",
                    r.q,
                    csv_real(r.s),
                    csv_real(r.t),
                    csv_real(r.width),
                    csv_real(r.xi_max),
                    csv_real(r.step),
                    csv_real(r.with_transform),
                    csv_real(r.with_bound),
                    csv_real(r.reference),
                    csv_real(r.bound_over_reference)
                ),
            }
        }
    };
    emit(a.output.as_deref(), &text)
}

fn energy_cmd(exec: Execution, a: &EnergyArgs) -> Result<()> {
    if a.d != 2 && a.d != 3 {
        return Err(Error::input(format!("energy supports d = 2, 3, got {}", a.d)));
    }
    let s = a.s.unwrap_or((a.d as f64 + 1.0) / 2.0);
    MeasureParams::new(1, s).validate(a.d)?;
    let report = analysis::energy_scan(exec, a.d, s, &a.q, a.seed, a.margin)?;
    let text = match a.format {
        Format::Csv => analysis::energy_csv(&report),
        Format::Json => format!("{}\n", serde_json::to_string(&report).expect("report")),
    };
    emit(a.output.as_deref(), &text)
}

fn scan(exec: Execution, a: &ScanArgs, config: Option<&Path>) -> Result<()> {
    let path = config.ok_or_else(|| Error::input("scan needs --config <path>"))?;
    let mut cfg: ScanConfig =
        serde_json::from_value(read_config(path)?).map_err(|e| Error::input(format!("invalid scan config: {e}")))?;
    if let Some(o) = &a.output {
        cfg.output = Some(o.clone());
    }
    cfg.plot |= a.plot;
    cfg.validate()?;
    let out = analysis::run_scan(exec, &cfg)?;
    let summary = format!("{}\n", serde_json::to_string_pretty(&out.summary).expect("summary"));
    match &cfg.output {
        Some(prefix) => {
            fs::write(format!("{prefix}.csv"), &out.csv)?;
            fs::write(format!("{prefix}.json"), &summary)?;
            if let Some(svg) = &out.svg {
                fs::write(format!("{prefix}.svg"), svg)?;
            }
        }
        None => {
            emit(None, &out.csv)?;
            eprint!("{summary}");
        }
    }
    Ok(())
}
