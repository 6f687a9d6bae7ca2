//! Command-line front end: runs, fits, theory curves and self-checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use invasion::asymptotics::{FrontSolution, PrefactorExponent, Region, SeriesOptions};
use invasion::diagnostics::{
    amplitude_profile, fixed_exponent_prefactor, front_position, loglog_fit, mean_trait_at, rescaled_shape, self_similar_profile,
};
use invasion::grid::{build_grid, population_size, Field};
use invasion::io::{
    default_output_root, execute_run, fmt_num, list_snapshots, load_run_config, read_field_csv, read_table,
    write_table, RunManifest,
};
use invasion::params::{parse_config_file, InitKind, Params, Preset};
use invasion::reproduction::{max_relative_deviation, reproduce_bruteforce, reproduce_fast, SegregationKernel};
use invasion::stepper::convergence_study;
use invasion::{Error, ReproductionMethod, Result};

#[derive(Parser)]
#[command(name = "invasion", version, about = "Accelerating invasion fronts with an evolving dispersal trait")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the model and write snapshots, front.csv, rho.csv, fit.json.
    Run(RunArgs),
    /// Fit `C t^p` to a column of front.csv.
    Analyze(AnalyzeArgs),
    /// Evaluate the closed-form solution on a grid and print CSV.
    Asymptotics(AsymptoticsArgs),
    /// Join a run's numerics with the theory into one CSV per figure.
    Compare(CompareArgs),
    /// Compare the fast reproduction operator with the literal triple sum.
    OracleCheck(OracleArgs),
    /// Error ratios under dt and dx refinement.
    Convergence(ConvergenceArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Starting parameter set.
    #[arg(long, default_value = "paper")]
    preset: Preset,
    /// Config file applied on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` overrides applied last; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<(Params, InitKind)> {
        let mut base = self.preset.build();
        if let Some(path) = &self.config {
            base = parse_config_file(path, base)?;
        }
        let (mut params, mut init) = base;
        for (idx, kv) in self.set.iter().enumerate() {
            let err = |message: String| Error::ConfigLine {
                context: "--set".into(),
                line: idx + 1,
                message,
            };
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| err(format!("expected KEY=VALUE, got `{kv}`")))?;
            if let Some(kind) = params.set(k.trim(), v.trim()).map_err(err)? {
                init = kind;
            }
        }
        params.validate()?;
        Ok((params, init))
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Output root; defaults to $INVASION_OUT or ./runs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the literal triple-sum reproduction operator.
    #[arg(long)]
    brute: bool,
    /// Overwrite an existing run directory.
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Series {
    #[value(name = "X_num")]
    XNum,
    #[value(name = "theta_bar")]
    ThetaBar,
    #[value(name = "X_half")]
    XHalf,
}

impl Series {
    fn column(self) -> &'static str {
        match self {
            Series::XNum => "X_num",
            Series::ThetaBar => "theta_bar",
            Series::XHalf => "X_half",
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// A front.csv file or a run directory containing one.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "X_num")]
    series: Series,
    #[arg(long, num_args = 2, value_names = ["T0", "T1"])]
    window: Option<Vec<f64>>,
    /// Hold the exponent at this value and report only the prefactor.
    #[arg(long, value_name = "P")]
    fixed_exponent: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AsymptoticOp {
    /// y, a, b, a', b', res1, res2 on a log-spaced y grid.
    Profiles,
    /// eta, T, u1, terms, limit residual and bound at fixed y.
    Series,
    /// x, theta, density at fixed t.
    Density,
    /// t, front position and mean trait at the front.
    Front,
}

#[derive(Args)]
struct AsymptoticsArgs {
    #[arg(long, value_enum, default_value = "profiles")]
    op: AsymptoticOp,
    #[arg(long, default_value_t = 0.5)]
    lambda2: f64,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 1.0)]
    theta_min: f64,
    /// y for `series`; y range is [y_min, y_max] for `profiles`.
    #[arg(long)]
    y: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    y_min: f64,
    #[arg(long, default_value_t = 10.0)]
    y_max: f64,
    /// Time for `density`, last time for `front`.
    #[arg(long, default_value_t = 200.0)]
    t: f64,
    #[arg(long, default_value_t = 3000.0)]
    x_max: f64,
    #[arg(long, default_value_t = 201.0)]
    theta_max: f64,
    /// Relative half-width of the trait window for `series`.
    #[arg(long, default_value_t = 0.5)]
    halfwidth: f64,
    #[arg(long, default_value_t = 101)]
    n: usize,
    /// Use 1/3 instead of 4/3 in the amplitude prefactor.
    #[arg(long)]
    one_third: bool,
    #[arg(long, default_value_t = 64)]
    kmax: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    /// Front position and mean trait at the front against time.
    Fig1,
    /// Self-similar profiles rho against x t^{-5/4}.
    Fig2,
    /// Log of the maximal density ahead of the front against the prefactor.
    Amplitude,
    /// Front shape against (x - X_half) t^{-1/4}.
    Shape,
    /// Mean trait along x against both branches of the prediction.
    Supp,
}

#[derive(Args)]
struct CompareArgs {
    /// Run directory.
    run: PathBuf,
    #[arg(long, value_enum)]
    figure: Figure,
    /// Output file; defaults to `<run>/compare_<figure>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    one_third: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 16)]
    ntheta: usize,
    #[arg(long, default_value_t = 6)]
    nx: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long)]
    brute: bool,
}

fn method(brute: bool) -> ReproductionMethod {
    if brute {
        ReproductionMethod::BruteForce
    } else {
        ReproductionMethod::Fast
    }
}

fn exponent(one_third: bool) -> PrefactorExponent {
    if one_third {
        PrefactorExponent::OneThird
    } else {
        PrefactorExponent::FourThirds
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let (params, init) = args.params.resolve()?;
    let root = args.out.unwrap_or_else(default_output_root);
    let manifest = RunManifest::new(params, init, method(args.brute), &root);
    let s = execute_run(&manifest, args.force)?;
    println!("run {} -> {}", manifest.short_hash(), manifest.dir.display());
    println!("t_end {}  snapshots {}", s.final_time, s.snapshot_times.len());
    for (name, fit) in [("X_num", &s.fit.x_num), ("theta_bar", &s.fit.theta_bar)] {
        match fit {
            Ok(f) => println!(
                "{name}: C = {:.6}, p = {:.6}, R2 = {:.6} on [{}, {}]",
                f.prefactor, f.exponent, f.r_squared, s.fit.window.0, s.fit.window.1
            ),
            Err(e) => println!("{name}: no fit ({e})"),
        }
    }
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let path = if args.input.is_dir() {
        args.input.join("front.csv")
    } else {
        args.input.clone()
    };
    if !path.exists() {
        return Err(Error::Config(format!("missing input {}", path.display())));
    }
    let table = read_table(&path)?;
    let missing = |c: &str| Error::Parse {
        path: path.clone(),
        message: format!("no column `{c}`"),
    };
    let ts = table.column("t").ok_or_else(|| missing("t"))?;
    let ys = table
        .column(args.series.column())
        .ok_or_else(|| missing(args.series.column()))?;
    let window = match args.window.as_deref() {
        Some([a, b]) => (*a, *b),
        _ => {
            let t_end = ts.iter().copied().fold(0.0, f64::max);
            (0.3 * t_end, t_end)
        }
    };
    if let Some(p) = args.fixed_exponent {
        let c = fixed_exponent_prefactor(&ts, &ys, p, window)?;
        println!("series,window_lo,window_hi,p_fixed,C");
        println!(
            "{},{},{},{},{}",
            args.series.column(),
            window.0,
            window.1,
            p,
            fmt_num(c)
        );
        return Ok(());
    }
    let fit = loglog_fit(&ts, &ys, window)?;
    println!("series,window_lo,window_hi,C,p,R2,n_points");
    println!(
        "{},{},{},{},{},{},{}",
        args.series.column(),
        window.0,
        window.1,
        fmt_num(fit.prefactor),
        fmt_num(fit.exponent),
        fmt_num(fit.r_squared),
        fit.n_points
    );
    Ok(())
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn print_csv(header: &[&str], rows: &[Vec<f64>]) {
    println!("{}", header.join(","));
    for r in rows {
        println!("{}", r.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(","));
    }
}

fn cmd_asymptotics(args: AsymptoticsArgs) -> Result<()> {
    let sol = FrontSolution::new(args.lambda2)?;
    let n = args.n.max(1);
    match args.op {
        AsymptoticOp::Profiles => {
            if !(args.y_min > 0.0 && args.y_max > args.y_min) {
                return Err(Error::Config("need 0 < y_min < y_max".into()));
            }
            let (l0, l1) = (args.y_min.ln(), args.y_max.ln());
            let rows: Vec<Vec<f64>> = linspace(l0, l1, n)
                .into_iter()
                .map(|l| {
                    let y = l.exp();
                    let (r1, r2) = sol.residual_system(y).unwrap_or((f64::NAN, f64::NAN));
                    vec![y, sol.a(y), sol.b(y), sol.a_prime(y), sol.b_prime(y), r1, r2]
                })
                .collect();
            print_csv(&["y", "a", "b", "a_prime", "b_prime", "res1", "res2"], &rows);
        }
        AsymptoticOp::Series => {
            let y = args
                .y
                .ok_or_else(|| Error::Config("--op series needs --y".into()))?;
            let opts = SeriesOptions {
                kmax: args.kmax,
                tol: args.tol,
            };
            let bound = sol.series_bound(y, args.halfwidth)?;
            let a = sol.a(y);
            let mut rows = Vec::new();
            for x in linspace(1.0 - args.halfwidth, 1.0 + args.halfwidth, n) {
                let eta = a * x;
                let u = sol.u1(y, eta, opts)?;
                let res = sol.verify_limit_equation(y, eta, opts)?;
                rows.push(vec![eta, sol.t_source(y, eta)?, u.value, u.terms as f64, res, bound]);
            }
            print_csv(&["eta", "T", "u1", "terms", "limit_residual", "bound"], &rows);
        }
        AsymptoticOp::Density => {
            let e = exponent(args.one_third);
            let mut rows = Vec::new();
            for x in linspace(0.0, args.x_max, n) {
                for th in linspace(args.theta_min, args.theta_max, n) {
                    rows.push(vec![x, th, sol.conjecture_density(args.t, x, th, e)]);
                }
            }
            print_csv(&["x", "theta", "density"], &rows);
        }
        AsymptoticOp::Front => {
            let rows: Vec<Vec<f64>> = linspace(0.0, args.t, n)
                .into_iter()
                .map(|t| {
                    let x = invasion::asymptotics::front_position_theory(t, sol.lambda, args.r, args.theta_min);
                    vec![t, x, sol.mean_trait(Region::Behind, sol.front_position(t), t)]
                })
                .collect();
            print_csv(&["t", "X_theory", "theta_bar_theory"], &rows);
        }
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let dir = &args.run;
    if !dir.join("config.txt").exists() {
        return Err(Error::Config(format!("{} is not a run directory", dir.display())));
    }
    let (params, _) = load_run_config(dir)?;
    let grid = build_grid(&params)?;
    let sol = FrontSolution::new(params.lambda2)?;
    let coeff = invasion::asymptotics::front_coefficient(sol.lambda, params.r, params.theta_min);
    let e = exponent(args.one_third);
    let (name, header, rows): (&str, Vec<&str>, Vec<Vec<f64>>) = match args.figure {
        Figure::Fig1 => {
            let front = read_table(&dir.join("front.csv"))?;
            let col = |c: &str| {
                front.column(c).ok_or_else(|| Error::Parse {
                    path: dir.join("front.csv"),
                    message: format!("no column `{c}`"),
                })
            };
            let (ts, xs, th) = (col("t")?, col("X_num")?, col("theta_bar")?);
            let rows = ts
                .iter()
                .zip(&xs)
                .zip(&th)
                .map(|((t, x), b)| {
                    let xt = coeff * t.powf(1.25);
                    vec![*t, *x, xt, *b, sol.mean_trait(Region::Behind, xt, *t)]
                })
                .collect();
            ("fig1", vec!["t", "X_num", "X_theory", "theta_bar", "theta_bar_theory"], rows)
        }
        Figure::Fig2 | Figure::Shape | Figure::Amplitude | Figure::Supp => {
            let mut rows = Vec::new();
            for (t, path) in list_snapshots(dir)? {
                let (_, _, values) = read_field_csv(&path)?;
                let field = Field::from_array(values, &grid)?;
                let rho = population_size(&field, &grid)?;
                match args.figure {
                    Figure::Fig2 if t > 0.0 => {
                        for (y, r) in self_similar_profile(rho.as_slice(), &grid, t) {
                            rows.push(vec![t, y, r, sol.y_c]);
                        }
                    }
                    Figure::Shape if t > 0.0 => {
                        if let Ok(shape) = rescaled_shape(rho.as_slice(), &grid, t) {
                            rows.extend(shape.into_iter().map(|(z, r)| vec![t, z, r]));
                        }
                    }
                    Figure::Amplitude if t > 0.0 => {
                        let fx = front_position(rho.as_slice(), &grid, params.front_threshold).x;
                        let xt = coeff * t.powf(1.25);
                        for (x, l) in amplitude_profile(&field, &grid, fx).points {
                            let theory = if x > xt {
                                (1.0 - (x / xt).powf(e.value())) * params.r * t
                            } else {
                                0.0
                            };
                            rows.push(vec![t, x, l, theory]);
                        }
                    }
                    Figure::Supp if t > 0.0 => {
                        let xt = coeff * t.powf(1.25);
                        for i in 0..grid.nx() {
                            let x = grid.xs[i];
                            let Ok(m) = mean_trait_at(&field, &grid, i) else { continue };
                            let region = if x <= xt { Region::Behind } else { Region::Ahead };
                            rows.push(vec![t, x, m, sol.mean_trait(region, x, t)]);
                        }
                    }
                    _ => {}
                }
            }
            match args.figure {
                Figure::Fig2 => ("fig2", vec!["t", "y", "rho", "y_c"], rows),
                Figure::Shape => ("shape", vec!["t", "z", "rho"], rows),
                Figure::Amplitude => ("amplitude", vec!["t", "x", "log_max_f", "log_prefactor_theory"], rows),
                _ => ("supp", vec!["t", "x", "theta_bar", "theta_bar_theory"], rows),
            }
        }
    };
    let out = args
        .out
        .unwrap_or_else(|| dir.join(format!("compare_{name}.csv")));
    write_table(&out, &header, &rows)?;
    println!("{} ({} rows)", out.display(), rows.len());
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    if args.nx < 2 || args.ntheta < 2 {
        return Err(Error::Config("--nx and --ntheta must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let dtheta = 2.0 / 3.0;
    let params = Params {
        x_max: 4.0 * (args.nx - 1) as f64,
        theta_max: 1.0 + dtheta * (args.ntheta - 1) as f64,
        ..Params::default()
    };
    let grid = build_grid(&params)?;
    let mut worst: f64 = 0.0;
    for trial in 0..args.trials {
        let lambda2 = [0.25, 0.5, 1.0][trial % 3];
        let kernel = SegregationKernel::new(lambda2)?;
        let values = ndarray::Array2::from_shape_fn(grid.shape(), |_| rng.gen::<f64>());
        let field = Field::from_array(values, &grid)?;
        let rho = population_size(&field, &grid)?;
        let fast = reproduce_fast(&field, &rho, &kernel, &grid)?;
        let brute = reproduce_bruteforce(&field, &rho, &kernel, &grid)?;
        worst = worst.max(max_relative_deviation(&fast.values, &brute.values));
    }
    println!(
        "trials {} nx {} ntheta {} max relative deviation {:e}",
        args.trials, args.nx, args.ntheta, worst
    );
    if worst <= args.tol {
        Ok(())
    } else {
        Err(Error::CheckFailed(format!("deviation {worst:e} exceeds {:e}", args.tol)))
    }
}

fn cmd_convergence(args: ConvergenceArgs) -> Result<()> {
    let (params, init) = args.params.resolve()?;
    let rep = convergence_study(&params, init, args.horizon, method(args.brute))?;
    println!("refinement,error_coarse,error_fine,ratio");
    println!(
        "dt,{},{},{}",
        fmt_num(rep.time_errors[0]),
        fmt_num(rep.time_errors[1]),
        fmt_num(rep.time_ratio)
    );
    println!(
        "dx,{},{},{}",
        fmt_num(rep.space_errors[0]),
        fmt_num(rep.space_errors[1]),
        fmt_num(rep.space_ratio)
    );
    eprintln!("horizon {} (spatial study at dt = {})", rep.horizon, rep.space_dt);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Asymptotics(a) => cmd_asymptotics(a),
        Command::Compare(a) => cmd_compare(a),
        Command::OracleCheck(a) => cmd_oracle(a),
        Command::Convergence(a) => cmd_convergence(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
