use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tfree::blocking::{self, Budget, SuitClassifier};
use tfree::cache;
use tfree::curves::{self, CensusMode, CurveSpace, DEFAULT_EXACT_BUDGET};
use tfree::density;
use tfree::field::{prime_power, FieldSpec};
use tfree::plane::Plane;
use tfree::verify::{self, Level};
use tfree::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "tfree", version, about = "Blocking sets and transverse-free plane curves over finite fields")]
struct Cli {
    /// Worker threads; 0 lets the pool pick.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct Order {
    /// Field order (a prime power).
    #[arg(long, conflicts_with = "p")]
    q: Option<u64>,
    /// Field characteristic, used with --r.
    #[arg(long)]
    p: Option<u32>,
    /// Extension degree.
    #[arg(long, requires = "p", default_value_t = 1)]
    r: u32,
}

impl Order {
    fn field(&self) -> Result<FieldSpec> {
        match (self.q, self.p) {
            (Some(q), _) => FieldSpec::with_order(q),
            (None, Some(p)) => FieldSpec::new(p, self.r),
            (None, None) => Err(Error::InvalidArgument("give --q or --p/--r".into())),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build PG(2,q) and check its incidence axioms.
    Plane(Order),
    /// Count blocking and minimal blocking sets by size.
    CensusBlocking {
        #[command(flatten)]
        order: Order,
        /// Largest set size (default 2q).
        #[arg(long)]
        kmax: Option<usize>,
        /// Cap on the number of subsets considered.
        #[arg(long, default_value_t = Budget::default().max_subsets)]
        budget: u128,
    },
    /// Census of degree-d plane curves.
    CensusCurves {
        #[command(flatten)]
        order: Order,
        #[arg(long)]
        d: u32,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        /// Samples in monte-carlo mode.
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cap on the number of forms in exact mode.
        #[arg(long, default_value_t = DEFAULT_EXACT_BUDGET)]
        budget: u64,
    },
    /// Exact density bounds.
    Bounds {
        #[command(flatten)]
        order: Order,
        /// Report every prime power up to this value instead of one q.
        #[arg(long, conflicts_with_all = ["q", "p"])]
        upto: Option<u64>,
    },
    /// Run the self-check suite.
    Verify {
        #[arg(value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

impl From<Level> for LevelArg {
    fn from(l: Level) -> Self {
        match l {
            Level::Quick => LevelArg::Quick,
            Level::Full => LevelArg::Full,
        }
    }
}

impl std::fmt::Display for LevelArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LevelArg::Quick => "quick",
            LevelArg::Full => "full",
        })
    }
}

/// Every setting a run used, defaults included.
#[derive(Debug, Serialize)]
struct RunConfig {
    command: &'static str,
    q: Option<u64>,
    p: Option<u32>,
    r: Option<u32>,
    d: Option<u32>,
    k_max: Option<usize>,
    mode: Option<CensusMode>,
    samples: Option<u64>,
    seed: Option<u64>,
    budget: Option<String>,
    upto: Option<u64>,
    level: Option<Level>,
    threads: usize,
    format: Format,
    out: Option<String>,
}

impl RunConfig {
    fn new(command: &'static str, cli: &Cli) -> Self {
        RunConfig {
            command,
            q: None,
            p: None,
            r: None,
            d: None,
            k_max: None,
            mode: None,
            samples: None,
            seed: None,
            budget: None,
            upto: None,
            level: None,
            threads: cli.threads,
            format: cli.format,
            out: cli.out.as_ref().map(|p| p.display().to_string()),
        }
    }

    fn with_field(mut self, f: &FieldSpec) -> Self {
        self.q = Some(f.q() as u64);
        self.p = Some(f.p());
        self.r = Some(f.r());
        self
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config: &'a RunConfig,
    result: T,
}

fn json<T: Serialize>(config: &RunConfig, result: T) -> String {
    let mut s = serde_json::to_string_pretty(&Report { config, result }).expect("serializable");
    s.push('\n');
    s
}

fn csv(config: &RunConfig, body: &str) -> String {
    format!("# config: {}\n{body}", serde_json::to_string(config).expect("serializable"))
}

#[derive(Serialize)]
struct PlaneSummary {
    q: u32,
    p: u32,
    r: u32,
    modulus: Vec<u32>,
    points: usize,
    lines: usize,
    points_per_line: usize,
    axioms: String,
    dual_axioms: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    baer_subplanes: Option<usize>,
}

fn outcome(r: std::result::Result<(), String>) -> String {
    r.map_or_else(|e| format!("failed: {e}"), |_| "ok".to_string())
}

fn cmd_plane(cli: &Cli, order: &Order) -> Result<String> {
    let field = order.field()?;
    let config = RunConfig::new("plane", cli).with_field(&field);
    let plane = cache::load_or_build_from_env(field.q() as u64)?;
    // Baer subplanes exist only for square q, and are enumerable only for small q.
    let baer = if field.r() % 2 == 0 { plane.enumerate_baer_subplanes().ok().map(|b| b.len()) } else { None };
    let s = PlaneSummary {
        q: field.q(),
        p: field.p(),
        r: field.r(),
        modulus: field.modulus().to_vec(),
        points: plane.num_points(),
        lines: plane.num_lines(),
        points_per_line: plane.points_on(0).len(),
        axioms: outcome(plane.check_axioms()),
        dual_axioms: outcome(plane.check_dual_axioms()),
        baer_subplanes: baer,
    };
    Ok(match cli.format {
        Format::Json => json(&config, s),
        Format::Csv => {
            let mut body = String::from("key,value\n");
            for (k, v) in [
                ("q", s.q.to_string()),
                ("points", s.points.to_string()),
                ("lines", s.lines.to_string()),
                ("points_per_line", s.points_per_line.to_string()),
                ("axioms", s.axioms),
                ("dual_axioms", s.dual_axioms),
            ] {
                body.push_str(&format!("{k},{v}\n"));
            }
            if let Some(b) = s.baer_subplanes {
                body.push_str(&format!("baer_subplanes,{b}\n"));
            }
            csv(&config, &body)
        }
    })
}

fn cmd_census_blocking(cli: &Cli, order: &Order, kmax: Option<usize>, budget: u128) -> Result<String> {
    let field = order.field()?;
    let q = field.q() as u64;
    let k_max = kmax.unwrap_or(2 * q as usize);
    let mut config = RunConfig::new("census-blocking", cli).with_field(&field);
    config.k_max = Some(k_max);
    config.budget = Some(budget.to_string());
    let plane = cache::load_or_build_from_env(q)?;
    let table = blocking::census_blocking(&plane, k_max, &Budget { max_subsets: budget })?;
    Ok(match cli.format {
        Format::Json => json(&config, &table),
        Format::Csv => csv(&config, &table.to_csv()),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_census_curves(cli: &Cli, order: &Order, d: u32, mode: Mode, samples: u64, seed: u64, budget: u64) -> Result<String> {
    let field = order.field()?;
    let q = field.q() as u64;
    let mut config = RunConfig::new("census-curves", cli).with_field(&field);
    config.d = Some(d);
    match mode {
        Mode::Exact => {
            config.mode = Some(CensusMode::Exact);
            config.budget = Some(budget.to_string());
        }
        Mode::MonteCarlo => {
            config.mode = Some(CensusMode::MonteCarlo);
            config.samples = Some(samples);
            config.seed = Some(seed);
        }
    }
    let plane = cache::load_or_build_from_env(q)?;
    let space = CurveSpace::new(&plane, d)?;
    let census = match mode {
        Mode::Exact => curves::exact_census(&space, budget)?,
        Mode::MonteCarlo => curves::mc_census(&space, samples, seed)?,
    };
    // Suit labels need the small minimal blocking sets, cheap only for q <= 4.
    let classifier = if q <= 4 { Some(SuitClassifier::new(&plane)?) } else { None };
    let report = census.report(&plane, classifier.as_ref())?;
    Ok(match cli.format {
        Format::Json => json(&config, &report),
        Format::Csv => {
            let head = format!(
                "# total={} transverse_free={} trivially_transverse_free={} no_rational_singularity={}\n",
                report.total,
                report.transverse_free.count,
                report.trivially_transverse_free.count,
                report.transverse_free_no_rational_singularity.count
            );
            csv(&config, &(head + &curves::histogram_csv(&report.histogram)))
        }
    })
}

fn cmd_bounds(cli: &Cli, order: &Order, upto: Option<u64>) -> Result<String> {
    let mut config = RunConfig::new("bounds", cli);
    let qs: Vec<u64> = match upto {
        Some(n) => {
            config.upto = Some(n);
            (2..=n).filter(|&q| prime_power(q).is_ok()).collect()
        }
        None => {
            let field = order.field()?;
            config = config.with_field(&field);
            vec![field.q() as u64]
        }
    };
    let reports = qs
        .iter()
        .map(|&q| {
            let plane = if q <= 3 { Some(Plane::with_order(q)?) } else { None };
            density::bound_report(q, plane.as_ref())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(match cli.format {
        Format::Json if upto.is_none() => json(&config, &reports[0]),
        Format::Json => json(&config, &reports),
        Format::Csv => csv(&config, &density::bound_csv(&reports)),
    })
}

fn cmd_verify(cli: &Cli, level: LevelArg) -> Result<(String, i32)> {
    let level = match level {
        LevelArg::Quick => Level::Quick,
        LevelArg::Full => Level::Full,
    };
    let mut config = RunConfig::new("verify", cli);
    config.level = Some(level);
    let suite = verify::run(level, |c| println!("{}", c.line()))?;
    let code = suite.exit_code();
    let summary = match code {
        0 => "all checks passed".to_string(),
        2 => "conflicts found; see CONFLICT lines".to_string(),
        _ => "hard failures; see FAIL lines".to_string(),
    };
    println!("verify {}: {summary} (exit {code})", LevelArg::from(level));
    let report = match cli.format {
        Format::Json => json(&config, &suite),
        Format::Csv => {
            let mut body = String::from("name,status,detail\n");
            for c in &suite.checks {
                body.push_str(&format!("{},{:?},\"{}\"\n", c.name, c.status, c.detail.replace('"', "'")));
            }
            csv(&config, &body)
        }
    };
    Ok((report, code))
}

fn run(cli: &Cli) -> Result<i32> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    let (report, code) = match &cli.command {
        Command::Plane(order) => (cmd_plane(cli, order)?, 0),
        Command::CensusBlocking { order, kmax, budget } => (cmd_census_blocking(cli, order, *kmax, *budget)?, 0),
        Command::CensusCurves { order, d, mode, samples, seed, budget } => {
            (cmd_census_curves(cli, order, *d, *mode, *samples, *seed, *budget)?, 0)
        }
        Command::Bounds { order, upto } => (cmd_bounds(cli, order, *upto)?, 0),
        Command::Verify { level } => {
            let (report, code) = cmd_verify(cli, *level)?;
            // The line-per-check transcript already went to stdout.
            if cli.out.is_none() {
                return Ok(code);
            }
            (report, code)
        }
    };
    match &cli.out {
        Some(path) => fs::write(path, report)?,
        None => std::io::stdout().write_all(report.as_bytes())?,
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
