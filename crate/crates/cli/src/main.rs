use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use numvar::arithmetic::{congruence_solution_count, gcd_sum_with, is_prime, GcdRoute};
use numvar::baselines::{bridge_functional, bridge_path, expected_random_variance, Summary};
use numvar::scan::{emit_to_path, run_preset, run_scan_streaming, write_csv_rows, PresetReport, CSV_HEADER};
use numvar::{
    additive_energy, decompose, difference_set, divisibility_bound_check, energy_window, generate_terms,
    kronecker_experiment, random_variance_experiment, rep_table, sparse_u2_mass, Alpha, Budget, Dyadic,
    ExperimentConfig, GcdVariant, OutputFormat, SequenceSpec,
};
use serde_json::{json, Value};

/// Number variance of dilated integer sequences modulo one.
#[derive(Parser)]
#[command(name = "numvar", version)]
struct Cli {
    /// Experiment config file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every stochastic component.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Skip scan cells over the pair budget instead of aborting.
    #[arg(long, global = true)]
    skip_over_budget: bool,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for tabular results.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    /// Pair budget for quadratic-cost statistics.
    #[arg(long, global = true)]
    budget_pairs: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grid scan over (N, S, alpha) described by --config.
    Scan,
    /// Binary digits and plateau offsets of S.
    Decompose {
        #[arg(long)]
        s: Dyadic,
        #[arg(long, default_value_t = 64)]
        v_max: u32,
    },
    /// Additive energy of the first N terms.
    Energy(SeqArgs),
    /// Representation numbers of differences in the window [n1, n2].
    Repstats {
        #[arg(long)]
        sequence: SequenceSpec,
        #[arg(long, default_value_t = 1)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        /// Largest entries to list.
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// GCD sum over the representation table of the first N terms.
    Gcdsum {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long, default_value = "one_over_max")]
        variant: GcdVariant,
        /// Keep only pairs with u1 u2 / (u1, u2)^2 <= T.
        #[arg(long)]
        filter: Option<u64>,
    },
    /// Radical divisibility bound and congruence counts for a polynomial.
    Divcheck {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long, default_value_t = 2)]
        ell_min: u64,
        #[arg(long, default_value_t = 200)]
        ell_max: u64,
        /// Also count roots modulo every prime up to this bound.
        #[arg(long)]
        primes_to: Option<u64>,
    },
    /// V(N, S) over i.i.d. uniform samples.
    RandomBaseline {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: Dyadic,
        #[arg(long, default_value_t = 100)]
        replicates: u64,
    },
    /// Brownian bridge functional N/M sum (B(t + S) - B(t))^2.
    BridgeSim {
        #[arg(long, default_value_t = 1 << 14)]
        m: usize,
        #[arg(long)]
        s: Dyadic,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        paths: u64,
    },
    /// max over S of V(q, S, alpha) at convergent denominators q.
    Kronecker {
        #[arg(long, default_value = "golden")]
        alpha: Alpha,
        #[arg(long, default_value = "logspace:1..6")]
        s_grid: String,
        #[arg(long, default_value_t = 100_000)]
        max_n: usize,
    },
    /// Named acceptance preset.
    Preset { name: String },
}

#[derive(Args)]
struct SeqArgs {
    #[arg(long)]
    sequence: SequenceSpec,
    #[arg(long)]
    n: usize,
}

enum Failure {
    Config(String),
    Budget(String),
    Preset(String),
    Other(String),
}

impl From<numvar::Error> for Failure {
    fn from(e: numvar::Error) -> Self {
        match e {
            numvar::Error::Budget { .. } => Failure::Budget(e.to_string()),
            numvar::Error::Io { .. } => Failure::Other(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Config(m) => (2, m),
                Failure::Budget(m) => (3, m),
                Failure::Preset(m) => (4, m),
                Failure::Other(m) => (1, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Other(e.to_string()))?;
    }
    let budget = Budget {
        pairs: cli.budget_pairs.unwrap_or(Budget::default().pairs),
        ..Budget::default()
    };
    let value = match &cli.command {
        Command::Scan => return scan(cli),
        Command::Preset { name } => return preset(cli, name),
        Command::Decompose { s, v_max } => decompose_json(*s, *v_max)?,
        Command::Energy(seq) => energy_json(seq, &budget)?,
        Command::Repstats { sequence, n1, n2, limit } => repstats_json(sequence, *n1, *n2, *limit, &budget)?,
        Command::Gcdsum { seq, variant, filter } => {
            let terms = generate_terms(&seq.sequence, seq.n)?;
            let table = rep_table(&terms, 1, seq.n, &budget)?;
            let value = gcd_sum_with(table.entries(), *variant, *filter, GcdRoute::Auto, &budget)?;
            let n = seq.n as f64;
            json!({
                "sequence": seq.sequence.to_string(),
                "n": seq.n,
                "variant": variant,
                "filter": filter.map(|t| t.to_string()),
                "distinct_differences": table.len().to_string(),
                "value": value,
                "value_over_n2_log_n": value / (n * n * n.ln()),
            })
        }
        Command::Divcheck { seq, ell_min, ell_max, primes_to } => divcheck_json(seq, *ell_min, *ell_max, *primes_to, &budget)?,
        Command::RandomBaseline { n, s, replicates } => {
            let seed = require_seed(cli)?;
            let exp = random_variance_experiment(*n, *s, *replicates, seed, &budget)?;
            let values: Vec<f64> = exp.records.iter().map(|r| r.v).collect();
            json!({
                "n": n,
                "s": s,
                "seed": seed.to_string(),
                "replicates": replicates,
                "expected": exp.expected,
                "summary": exp.summary,
                "z": (exp.summary.mean - exp.expected) / exp.summary.std_error,
                "values": values,
            })
        }
        Command::BridgeSim { m, s, n, paths } => {
            let seed = require_seed(cli)?;
            let values = (0..*paths)
                .map(|i| bridge_functional(&bridge_path(*m, seed, i)?, *s, *n))
                .collect::<numvar::Result<Vec<f64>>>()?;
            let summary = Summary::of(&values);
            let expected = expected_random_variance(*n, *s);
            json!({
                "m": m,
                "n": n,
                "s": s,
                "seed": seed.to_string(),
                "paths": paths,
                "expected": expected,
                "summary": summary,
                "z": (summary.mean - expected) / summary.std_error,
            })
        }
        Command::Kronecker { alpha, s_grid, max_n } => {
            let grid = numvar::scan::parse_s_grid(s_grid)?;
            let report = kronecker_experiment(*alpha, &grid, *max_n)?;
            let records: Vec<Value> = report
                .records
                .iter()
                .map(|r| {
                    json!({
                        "n": r.n,
                        "p": r.p.to_string(),
                        "max_v": r.max_v,
                        "s_at_max": r.s_at_max,
                        "values": r.values,
                    })
                })
                .collect();
            json!({
                "alpha": alpha.to_hex(),
                "s_grid": grid,
                "truncated": report.truncated,
                "records": records,
            })
        }
    };
    if cli.format == Some(OutputFormat::Csv) {
        return Err(Failure::Config("this subcommand only produces JSON".into()));
    }
    let mut out = open_out(cli)?;
    serde_json::to_writer_pretty(&mut out, &value).map_err(|e| Failure::Other(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn require_seed(cli: &Cli) -> CliResult<u64> {
    cli.seed
        .ok_or_else(|| Failure::Config("this subcommand is stochastic and needs --seed".into()))
}

fn open_out(cli: &Cli) -> CliResult<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Other(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn scan(cli: &Cli) -> CliResult<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("scan needs --config".into()))?;
    let mut config = ExperimentConfig::from_file(path)?;
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if let Some(p) = cli.budget_pairs {
        config.budget.pairs = p;
    }
    if let Some(f) = cli.format {
        config.format = f;
    }
    let out_path = cli.out.clone().or_else(|| config.output.clone().map(|o| match path.parent() {
        Some(dir) if o.is_relative() => dir.join(o),
        _ => o,
    }));
    let result = match config.format {
        OutputFormat::Csv => {
            let mut out: Box<dyn Write> = match &out_path {
                Some(p) => Box::new(BufWriter::new(
                    File::create(p).map_err(|e| Failure::Other(format!("{}: {e}", p.display())))?,
                )),
                None => Box::new(BufWriter::new(io::stdout().lock())),
            };
            writeln!(out, "{}", CSV_HEADER.join(","))?;
            let result = run_scan_streaming(&config, cli.skip_over_budget, |block| {
                write_csv_rows(&mut out, block, false)?;
                out.flush().map_err(|e| numvar::Error::Io {
                    path: "<output>".into(),
                    message: e.to_string(),
                })
            })?;
            out.flush()?;
            result
        }
        OutputFormat::Json => {
            let result = run_scan_streaming(&config, cli.skip_over_budget, |_| Ok(()))?;
            match &out_path {
                Some(p) => emit_to_path(&result, OutputFormat::Json, p)?,
                None => {
                    let bytes = numvar::emit(&result, OutputFormat::Json)?;
                    io::stdout().lock().write_all(&bytes)?;
                }
            }
            result
        }
    };
    for cell in &result.metadata.skipped {
        eprintln!(
            "skipped N = {}, S = {}: estimated {} pairs",
            cell.n, cell.s, cell.estimated_pairs
        );
    }
    eprintln!(
        "config {} rows {} in {:.3}s",
        result.metadata.config_hash,
        result.rows.len(),
        result.metadata.wall_time_secs
    );
    Ok(())
}

fn preset(cli: &Cli, name: &str) -> CliResult<()> {
    let report: PresetReport = run_preset(name, cli.seed.unwrap_or(1))?;
    for c in &report.checks {
        println!("{} {} = {}", if c.pass { "PASS" } else { "FAIL" }, c.label, c.value);
    }
    if let Some(p) = &cli.out {
        emit_to_path(&report.result, cli.format.unwrap_or_default(), p)?;
    }
    if report.passed {
        println!("preset {name}: PASS");
        Ok(())
    } else {
        Err(Failure::Preset(format!("preset {name} failed")))
    }
}

fn decompose_json(s: Dyadic, v_max: u32) -> CliResult<Value> {
    let e = decompose(s, v_max)?;
    let levels: Vec<Value> = e
        .kernels()
        .iter()
        .map(|k| json!({ "v": k.v(), "c": k.c().to_string() }))
        .collect();
    Ok(json!({
        "s": s,
        "digits": e.digits,
        "coeffs": e.coeffs.iter().map(u128::to_string).collect::<Vec<_>>(),
        "levels": levels,
        "truncated": e.truncated,
        "represented": e.represented(),
        "scalar_identity": e.scalar_identity_holds(),
    }))
}

fn energy_json(seq: &SeqArgs, budget: &Budget) -> CliResult<Value> {
    let terms = generate_terms(&seq.sequence, seq.n)?;
    let energy = additive_energy(&terms, seq.n, budget)?;
    let rep = energy_window(&rep_table(&terms, 1, seq.n, budget)?);
    let n = seq.n as u128;
    Ok(json!({
        "sequence": seq.sequence.to_string(),
        "n": seq.n,
        "additive_energy": energy.to_string(),
        "rep_square_sum": rep.to_string(),
        "identity_holds": energy == n * n + 2 * rep,
        "energy_over_n2_log_n": energy as f64 / ((n * n) as f64 * (seq.n as f64).ln()),
    }))
}

fn repstats_json(spec: &SequenceSpec, n1: usize, n2: usize, limit: usize, budget: &Budget) -> CliResult<Value> {
    let terms = generate_terms(spec, n2)?;
    let table = rep_table(&terms, n1, n2, budget)?;
    let mut top: Vec<(u64, u64)> = table.entries().to_vec();
    top.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    top.truncate(limit);
    let max_rep = table.entries().iter().map(|&(_, r)| r).max().unwrap_or(0);
    let u2 = if n1 == 1 { Some(sparse_u2_mass(&terms, n2, budget)?) } else { None };
    Ok(json!({
        "sequence": spec.to_string(),
        "n1": n1,
        "n2": n2,
        "distinct": table.len().to_string(),
        "pairs": table.total().to_string(),
        "max_rep": max_rep.to_string(),
        "rep_square_sum": energy_window(&table).to_string(),
        "u2_mass": u2.map(|m| m.mass.to_string()),
        "u2_exponent": u2.and_then(|m| m.exponent),
        "top": top.iter().map(|&(u, r)| json!([u.to_string(), r.to_string()])).collect::<Vec<_>>(),
    }))
}

fn divcheck_json(seq: &SeqArgs, ell_min: u64, ell_max: u64, primes_to: Option<u64>, budget: &Budget) -> CliResult<Value> {
    let SequenceSpec::Polynomial(coeffs) = &seq.sequence else {
        return Err(Failure::Config("divcheck needs a poly: sequence".into()));
    };
    let degree = (coeffs.len() - 1) as u32;
    let set = difference_set(coeffs, seq.n, budget)?;
    let checks = (ell_min.max(2)..=ell_max)
        .map(|ell| divisibility_bound_check(&set, ell, degree, seq.n))
        .collect::<numvar::Result<Vec<_>>>()?;
    let congruences = match primes_to {
        None => Vec::new(),
        Some(q) => (2..=q)
            .filter(|&p| is_prime(p))
            .map(|p| {
                let r = congruence_solution_count(coeffs, p);
                json!({
                    "q": p,
                    "count": r.as_ref().ok().map(u64::to_string),
                    "skipped": r.err().map(|e| e.to_string()),
                })
            })
            .collect(),
    };
    Ok(json!({
        "sequence": seq.sequence.to_string(),
        "n": seq.n,
        "degree": degree,
        "all_ok": checks.iter().all(|c| c.ok),
        "checks": checks
            .iter()
            .map(|c| json!({
                "ell": c.ell.to_string(),
                "count": c.count.to_string(),
                "rad": c.rad.to_string(),
                "omega": c.omega,
                "bound": c.bound,
                "ok": c.ok,
            }))
            .collect::<Vec<_>>(),
        "congruences": congruences,
    }))
}
