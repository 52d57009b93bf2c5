mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use qfrac::conditions::check_compatibility;
use qfrac::io::{load_field, save_field};
use qfrac::oracle::matrix_oracle;
use qfrac::quat::unit_imaginary;
use qfrac::{
    compute_constants, convergence_report, frac_power_apply, resolvent_scan, GridOperator, QField, QuadratureSpec,
    Quat, QuatOperator, Side, SpectralParam, ZeroOperator,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use config::{ConfigError, ProblemConfig, DEFAULT_SEED};
use manifest::Manifest;

const THREADS_ENV: &str = "QFRAC_THREADS";

#[derive(Parser)]
#[command(name = "qfrac", version, about = "Fractional powers and S-resolvents of quaternionic grid operators")]
struct Cli {
    /// JSON problem configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = "qfrac-out")]
    out_dir: PathBuf,
    /// Worker threads; overrides QFRAC_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for random inputs; overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solvability constants and verdicts.
    Check {
        /// Exit with status 3 unless the bounded-domain verdict passes.
        #[arg(long)]
        strict: bool,
    },
    /// Solve Q_s(T) u = f for s = s0 + s1 j.
    Solve {
        #[arg(long, allow_negative_numbers = true)]
        s1: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        s0: f64,
        /// Imaginary unit j: e1, e2, e3 or comma-separated components.
        #[arg(long, default_value = "e1", value_parser = parse_axis)]
        axis: Quat,
        /// Right-hand side field file.
        #[arg(long)]
        rhs: PathBuf,
        /// Replace T by the zero operator.
        #[arg(long)]
        zero_operator: bool,
    },
    /// Resolvent norms at log-spaced t along j R.
    ScanResolvent {
        #[arg(long, default_value_t = 1e-2)]
        t_min: f64,
        #[arg(long, default_value_t = 1e2)]
        t_max: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Defaults to the quadrature axis.
        #[arg(long, value_parser = parse_axis)]
        axis: Option<Quat>,
    },
    /// Apply P_alpha(T) to a field.
    FracPower {
        /// Input field; a seeded random field when omitted.
        #[arg(long)]
        rhs: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        side: Option<Side>,
        /// Also report integrand decay exponents.
        #[arg(long)]
        convergence: bool,
    },
    /// Quadrature against eigendecomposition on a random sectorial matrix.
    OracleMatrix {
        #[arg(long)]
        size: usize,
        #[arg(long)]
        alpha: Option<f64>,
        /// Defaults to 800 without a config.
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Robin-type versus physical Robin boundary rows.
    CompatCheck {
        #[arg(long)]
        strict: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Solve { .. } => "solve",
            Command::ScanResolvent { .. } => "scan-resolvent",
            Command::FracPower { .. } => "frac-power",
            Command::OracleMatrix { .. } => "oracle-matrix",
            Command::CompatCheck { .. } => "compat-check",
        }
    }
}

fn parse_axis(s: &str) -> Result<Quat, String> {
    let q = match s.trim() {
        "e1" => Quat::e1(),
        "e2" => Quat::e2(),
        "e3" => Quat::e3(),
        other => {
            let v = other
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|_| format!("bad component `{c}`")))
                .collect::<Result<Vec<_>, _>>()?;
            match v[..] {
                [a, b, c] => Quat::new(0.0, a, b, c),
                [r, a, b, c] => Quat::new(r, a, b, c),
                _ => return Err("expected e1|e2|e3 or 3 or 4 comma-separated numbers".into()),
            }
        }
    };
    unit_imaginary(q).map_err(|e| e.to_string())
}

enum Failure {
    Config(String),
    Verdict(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Verdict(_) => 3,
            Failure::Solver(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Verdict(m) | Failure::Solver(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(format!("config error: {e}"))
    }
}

impl From<qfrac::Error> for Failure {
    fn from(e: qfrac::Error) -> Self {
        use qfrac::Error::*;
        match e {
            InvalidArgument(_) | Parse { .. } | GridMismatch(_) | MissingMetadata(_) | NonFinite { .. } => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Solver(e.to_string()),
        }
    }
}

struct Ctx {
    cfg: Option<ProblemConfig>,
    out_dir: PathBuf,
    seed: u64,
    manifest: Manifest,
}

impl Ctx {
    fn cfg(&self) -> Result<&ProblemConfig, Failure> {
        self.cfg.as_ref().ok_or_else(|| Failure::Config("this command needs --config".into()))
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Failure::Solver(format!("{}: {e}", path.display())))?;
        self.manifest.outputs.push(name.into());
        Ok(())
    }

    /// Writes `name` and echoes it on stdout.
    fn report<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Solver(e.to_string()))?;
        text.push('\n');
        print!("{text}");
        self.write(name, text.as_bytes())
    }

    fn save_field(&mut self, name: &str, u: &QField<f64>) -> Result<(), Failure> {
        save_field(u, self.out_dir.join(name))?;
        self.manifest.outputs.push(name.into());
        Ok(())
    }

    fn operator(&self) -> Result<GridOperator<f64>, Failure> {
        let cfg = self.cfg()?;
        Ok(GridOperator::new(&cfg.coefficients()?, cfg.boundary.mean_zero)?)
    }
}

fn load_rhs(path: &Path, cfg: &ProblemConfig) -> Result<QField<f64>, Failure> {
    let grid = cfg.grid()?;
    let f: QField<f64> =
        load_field(path, grid.kind).map_err(|e| Failure::Config(format!("rhs {}: {e}", path.display())))?;
    grid.check_layout(f.grid()).map_err(|e| Failure::Config(format!("rhs {}: {e}", path.display())))?;
    Ok(f)
}

#[derive(Serialize)]
struct SolveReport {
    s: [f64; 4],
    zero_operator: bool,
    rhs_norm: f64,
    solution_norm: f64,
}

#[derive(Serialize)]
struct FracPowerOutput {
    #[serde(flatten)]
    summary: qfrac::frac_power::FracPowerSummary,
    axis: [f64; 4],
    input: String,
    convergence: Option<qfrac::ConvergenceReport>,
}

fn run(cmd: &Command, ctx: &mut Ctx) -> Result<(), Failure> {
    match cmd {
        Command::Check { strict } => {
            let cfg = ctx.cfg()?;
            let rep = compute_constants(&cfg.coefficients()?, cfg.trace_constant)?;
            ctx.report("check.json", &rep)?;
            if *strict && !rep.verdict_bounded.passed() {
                return Err(Failure::Verdict(format!("bounded-domain verdict {:?}", rep.verdict_bounded.status)));
            }
        }
        Command::Solve { s1, s0, axis, rhs, zero_operator } => {
            let cfg = ctx.cfg()?.clone();
            let f = load_rhs(rhs, &cfg)?;
            let s = SpectralParam::new(Quat::real(*s0) + *axis * *s1);
            let grid = cfg.grid()?;
            let zero;
            let grid_op;
            let op: &dyn QuatOperator<f64> = if *zero_operator {
                zero = ZeroOperator::new(&grid);
                &zero
            } else {
                grid_op = ctx.operator()?;
                &grid_op
            };
            let u = op.pseudo_resolvent(&s, &cfg.solver)?.solve(f.values())?;
            let u = QField::from_values(&grid, u)?;
            ctx.save_field("solution.csv", &u)?;
            let w = op.weights();
            let rep = SolveReport {
                s: s.s.to_array(),
                zero_operator: *zero_operator,
                rhs_norm: qfrac::operator::weighted_norm(w, f.values()),
                solution_norm: qfrac::operator::weighted_norm(w, u.values()),
            };
            ctx.report("solve.json", &rep)?;
        }
        Command::ScanResolvent { t_min, t_max, points, axis } => {
            let cfg = ctx.cfg()?.clone();
            let cons = compute_constants(&cfg.coefficients()?, cfg.trace_constant)?;
            let op = ctx.operator()?;
            let j = axis.unwrap_or(Quat::from_array(cfg.quadrature.axis));
            let scan = resolvent_scan(&op, *t_min, *t_max, *points, j, cons.c_coercivity, &cfg.solver, &cfg.power)?;
            ctx.write("scan.csv", scan.to_csv().as_bytes())?;
            ctx.report("scan.json", &scan)?;
        }
        Command::FracPower { rhs, alpha, nodes, side, convergence } => {
            let cfg = ctx.cfg()?.clone();
            let mut spec = cfg.quadrature.spec();
            spec.alpha = alpha.unwrap_or(spec.alpha);
            spec.n_nodes = nodes.unwrap_or(spec.n_nodes);
            spec.side = side.unwrap_or(spec.side);
            spec.validate()?;
            let op = ctx.operator()?;
            let grid = cfg.grid()?;
            let (v, input) = match rhs {
                Some(p) => (load_rhs(p, &cfg)?, p.display().to_string()),
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
                    (QField::random(&grid, &mut rng), format!("random(seed={})", ctx.seed))
                }
            };
            let rep = frac_power_apply(&spec, v.values(), &op, &cfg.solver)?;
            let conv = if *convergence { Some(convergence_report(&spec, v.values(), &op, &cfg.solver)?) } else { None };
            ctx.save_field("frac_power.csv", &QField::from_values(&grid, rep.result.clone())?)?;
            let out = FracPowerOutput {
                summary: rep.summary(&spec, op.weights()),
                axis: spec.axis.to_array(),
                input,
                convergence: conv,
            };
            ctx.report("frac_power.json", &out)?;
        }
        Command::OracleMatrix { size, alpha, nodes } => {
            let (base, solver) = match &ctx.cfg {
                Some(cfg) => (cfg.quadrature.spec(), cfg.solver),
                None => (QuadratureSpec::new(0.5).with_nodes(800), Default::default()),
            };
            let mut spec = base.with_error_estimate(false);
            spec.alpha = alpha.unwrap_or(spec.alpha);
            spec.n_nodes = nodes.unwrap_or(spec.n_nodes);
            let rep = matrix_oracle(*size, ctx.seed, &spec, &solver)?;
            ctx.report("oracle.json", &rep)?;
        }
        Command::CompatCheck { strict } => {
            let rep = check_compatibility(&ctx.cfg()?.coefficients()?)?;
            ctx.report("compat.json", &rep)?;
            if *strict && !rep.pass {
                return Err(Failure::Verdict(rep.message.clone()));
            }
        }
    }
    Ok(())
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Config(format!("{THREADS_ENV}=`{v}` is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let setup = || -> Result<Option<(ProblemConfig, Vec<u8>)>, Failure> {
        if let Some(n) = thread_count(cli.threads)? {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure::Config(e.to_string()))?;
        }
        std::fs::create_dir_all(&cli.out_dir)
            .map_err(|e| Failure::Config(format!("{}: {e}", cli.out_dir.display())))?;
        cli.config.as_deref().map(ProblemConfig::load).transpose().map_err(Failure::from)
    };
    let loaded = setup();
    let cfg_seed = loaded.as_ref().ok().and_then(|c| c.as_ref().map(|(c, _)| c.seed));
    let seed = cli.seed.or(cfg_seed).unwrap_or(DEFAULT_SEED);
    let mut manifest = Manifest::new(cli.command.name(), seed);
    let result = match loaded {
        Err(f) => Err(f),
        Ok(loaded) => {
            let cfg = loaded.map(|(cfg, bytes)| {
                manifest.set_config(cli.config.as_deref().expect("config path"), &bytes);
                cfg
            });
            manifest.time("setup", start);
            let mut ctx = Ctx { cfg, out_dir: cli.out_dir.clone(), seed, manifest };
            let t = Instant::now();
            let r = run(&cli.command, &mut ctx);
            ctx.manifest.time("run", t);
            manifest = ctx.manifest;
            r
        }
    };
    let code = match &result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("qfrac {}: {}", cli.command.name(), f.message());
            f.code()
        }
    };
    manifest.exit_code = code.into();
    manifest.time("total", start);
    if cli.out_dir.is_dir() {
        let path = cli.out_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        if let Err(e) = std::fs::write(&path, text + "\n") {
            eprintln!("qfrac: cannot write {}: {e}", path.display());
        }
    }
    ExitCode::from(code)
}
