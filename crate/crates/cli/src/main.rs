//! `vdcwitness`: command-line access to the construction and its checks.
//!
//! Every subcommand prints one JSON object `{"manifest": ..., "result": ...}`
//! on stdout. Artifacts requested with `--out` or `--csv` are written to disk
//! together with a `<path>.manifest.json`. Exit status: 0 when every check
//! passes, 1 when a verification fails, 2 on usage or input errors.

mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use vdc_core::arcs::{classify, classify_rational};
use vdc_core::expsum::{c0_sweep, estimate_c0, reduced_sum, reference_sum};
use vdc_core::lowerbound::{gamma_lower_bound, prime_inequality_check, residue_classes};
use vdc_core::oracles::{gamma_plus_bracket, max_diff_avoiding};
use vdc_core::witness::{build_witness, desk_witness, scan_min, DEFAULT_REFINE_ITERS, DESK_MIN_THRESHOLD};
use vdc_core::{AveragingScheme, OddIntPolynomial, SparseCosinePolynomial};

use manifest::RunManifest;

/// `q` range of the `c₀` estimate used when `--c0` is not given.
const DEFAULT_C0_QMAX: u64 = 2000;

#[derive(Parser)]
#[command(name = "vdcwitness", version, about = "Nonnegative cosine polynomials with polynomial spectra")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "VDC_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Complete exponential sums S_d(af, q).
    Expsum(ExpsumCmd),
    /// Averaging schemes: build or verify.
    #[command(subcommand)]
    Scheme(SchemeCmd),
    /// Witness polynomials: build or scan.
    #[command(subcommand)]
    Witness(WitnessCmd),
    /// Independent oracles.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Residue classes and lower bounds.
    #[command(subcommand)]
    Lower(LowerCmd),
    /// Major/minor arc classification of a point.
    Arcs(ArcsArgs),
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct ExpsumCmd {
    #[command(subcommand)]
    sub: Option<ExpsumSub>,
    #[command(flatten)]
    single: SumArgs,
}

#[derive(Args)]
struct SumArgs {
    /// Coefficients of x, x², x³, ..., e.g. `2,0,3` for 3x³+2x.
    #[arg(long, default_value = "0,0,1")]
    poly: String,
    #[arg(long, default_value_t = 1)]
    d: u64,
    #[arg(long, required = true, allow_hyphen_values = true)]
    a: Option<i64>,
    #[arg(long, required = true)]
    q: Option<u64>,
}

#[derive(Subcommand)]
enum ExpsumSub {
    /// Per-modulus maxima of |S(af,q)| / (gcd(c(f),q)^{1/k} q^{1-1/k}).
    Sweep {
        #[arg(long, default_value = "0,0,1")]
        poly: String,
        #[arg(long)]
        qmax: u64,
        /// Write rows `q,max_ratio,argmax_a,running_c0` here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare the paired sum with direct summation on random (a, q).
    Check {
        #[arg(long, default_value = "0,0,1")]
        poly: String,
        #[arg(long, default_value_t = 10_000)]
        qmax: u64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Allowed |difference| / max(|S|, 1).
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Args)]
struct SchemeArgs {
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value = "0,0,1")]
    poly: String,
    /// Constant of the sum bound; estimated over q <= 2000 when absent.
    #[arg(long)]
    c0: Option<f64>,
    /// Bound on 2^s, written `2^k` or `k`.
    #[arg(long, default_value = "2^24", value_parser = parse_cap)]
    cap: u32,
}

#[derive(Subcommand)]
enum SchemeCmd {
    Build {
        #[command(flatten)]
        scheme: SchemeArgs,
    },
    /// Check the averaged bound for every q <= qmax.
    Verify {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long, default_value_t = 1_000_000)]
        qmax: u64,
    },
}

#[derive(Subcommand)]
enum WitnessCmd {
    /// Build the desk witness (or one over explicit moduli) and write it.
    Build {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        n: u64,
        /// Comma-separated divisor chain starting at 1, used instead of the
        /// scheme recipe.
        #[arg(long)]
        moduli: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also scan the witness on this many grid points.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = DESK_MIN_THRESHOLD, allow_hyphen_values = true)]
        threshold: f64,
    },
    /// Scan a witness file for its minimum.
    Scan {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 8_000_000)]
        grid: usize,
        #[arg(long, default_value_t = DESK_MIN_THRESHOLD, allow_hyphen_values = true)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_REFINE_ITERS)]
        refine_iters: u32,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Bracket the smallest free coefficient for the spectrum {f(j) <= n}.
    Gamma {
        #[arg(long, default_value = "0,0,1")]
        poly: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 8192)]
        grid: usize,
    },
    /// Largest subset of {1..N} avoiding the differences f(j).
    Diffset {
        #[arg(long, default_value = "0,0,1")]
        poly: String,
        #[arg(long = "N")]
        big_n: u64,
        #[arg(long, default_value_t = vdc_core::oracles::diffset::DEFAULT_CAP)]
        cap: u64,
    },
}

#[derive(Subcommand)]
enum LowerCmd {
    /// Cosets of the k-th powers mod p and their cosine sums.
    Classes {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        beta: u64,
    },
    /// Aggregated lower bound for the spectrum {j^k <= n}.
    Bound {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 100_000)]
        mcap: u64,
    },
    /// Per-prime inequality for a witness file.
    Check {
        #[arg(long)]
        witness: PathBuf,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value = "0,0,1")]
        poly: String,
    },
}

#[derive(Args)]
struct ArcsArgs {
    /// Point in [0, 1) as a decimal.
    #[arg(long, conflicts_with_all = ["num", "den"], required_unless_present = "num")]
    x: Option<f64>,
    /// Exact point num/den.
    #[arg(long, requires = "den")]
    num: Option<u64>,
    #[arg(long, requires = "num")]
    den: Option<u64>,
    /// Largest denominator Q of the major arcs.
    #[arg(long = "qcut")]
    qcut: u64,
    /// Width parameter R: arcs are |x - a/q| <= 1/(qR).
    #[arg(long = "rcut")]
    rcut: f64,
}

/// Parses `2^k` or `k` into `k`.
fn parse_cap(s: &str) -> Result<u32, String> {
    let k = s.strip_prefix("2^").unwrap_or(s);
    let k: u32 = k.parse().map_err(|e| format!("{s:?}: {e}"))?;
    if k > 40 {
        return Err(format!("2^{k} is beyond any enumerable prime range"));
    }
    Ok(k)
}

/// Result of a subcommand: the JSON payload and whether its checks passed.
struct Outcome {
    result: Value,
    pass: bool,
}

fn passed<T: Serialize>(v: &T) -> anyhow::Result<Outcome> {
    Ok(Outcome {
        result: serde_json::to_value(v)?,
        pass: true,
    })
}

fn poly(s: &str) -> anyhow::Result<OddIntPolynomial> {
    s.parse().with_context(|| format!("--poly {s}"))
}

fn write_artifact(path: &Path, body: &str, manifest: &RunManifest) -> anyhow::Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    let mpath = PathBuf::from(format!("{}.manifest.json", path.display()));
    fs::write(&mpath, serde_json::to_string_pretty(manifest)? + "\n")
        .with_context(|| format!("writing {}", mpath.display()))
}

fn resolve_c0(args: &SchemeArgs, f: &OddIntPolynomial, m: &mut RunManifest) -> f64 {
    match args.c0 {
        Some(c) => c,
        None => {
            let c = m.time("estimate_c0", || estimate_c0(f, DEFAULT_C0_QMAX));
            m.param("c0", c);
            c
        }
    }
}

fn scheme_params(args: &SchemeArgs, m: &mut RunManifest) {
    m.param("delta", args.delta);
    m.param("poly", &args.poly);
    m.param("cap_log2", args.cap);
    if let Some(c) = args.c0 {
        m.param("c0", c);
    }
}

fn run_expsum(cmd: ExpsumCmd, m: &mut RunManifest) -> anyhow::Result<Outcome> {
    match cmd.sub {
        None => {
            let args = cmd.single;
            let f = poly(&args.poly)?;
            let (a, q) = (args.a.expect("required"), args.q.expect("required"));
            if q == 0 || args.d == 0 {
                return Err(anyhow!("--q and --d must be positive"));
            }
            m.param("poly", &args.poly);
            m.param("d", args.d);
            m.param("a", a);
            m.param("q", q);
            let r = m.time("sum", || reduced_sum(&f, args.d, a, q));
            passed(&r)
        }
        Some(ExpsumSub::Sweep { poly: p, qmax, csv }) => {
            let f = poly(&p)?;
            if qmax < 2 {
                return Err(anyhow!("--qmax must be at least 2"));
            }
            m.param("poly", &p);
            m.param("qmax", qmax);
            let rows = m.time("sweep", || c0_sweep(&f, qmax));
            let last = rows.last().expect("qmax >= 2");
            let best = rows
                .iter()
                .max_by(|a, b| a.max_ratio.total_cmp(&b.max_ratio).then(b.q.cmp(&a.q)))
                .expect("nonempty");
            if let Some(path) = &csv {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in &rows {
                    w.serialize(r)?;
                }
                let body = String::from_utf8(w.into_inner()?)?;
                m.param("csv", path.display().to_string());
                write_artifact(path, &body, m)?;
            }
            passed(&json!({
                "c0": last.running_c0,
                "q_at_max": best.q,
                "a_at_max": best.argmax_a,
                "rows": rows.len(),
            }))
        }
        Some(ExpsumSub::Check { poly: p, qmax, samples, seed, tol }) => {
            let f = poly(&p)?;
            if qmax < 1 {
                return Err(anyhow!("--qmax must be positive"));
            }
            m.param("poly", &p);
            m.param("qmax", qmax);
            m.param("samples", samples);
            m.param("tol", tol);
            m.seed = Some(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cases: Vec<(i64, u64)> = (0..samples)
                .map(|_| {
                    let q = rng.gen_range(1..=qmax);
                    (rng.gen_range(0..q) as i64, q)
                })
                .collect();
            let (worst, at) = m.time("check", || {
                cases
                    .iter()
                    .map(|&(a, q)| {
                        let got = reduced_sum(&f, 1, a, q).value;
                        let want = reference_sum(&f, 1, a, q);
                        ((got - want.re).abs() / want.norm().max(1.0), (a, q))
                    })
                    .fold((0.0f64, (0, 1)), |acc, v| if v.0 > acc.0 { v } else { acc })
            });
            Ok(Outcome {
                result: json!({ "worst_relative_error": worst, "a": at.0, "q": at.1, "samples": samples }),
                pass: worst <= tol,
            })
        }
    }
}

fn run_scheme(cmd: SchemeCmd, m: &mut RunManifest) -> anyhow::Result<Outcome> {
    match cmd {
        SchemeCmd::Build { scheme: args } => {
            scheme_params(&args, m);
            let f = poly(&args.poly)?;
            let c0 = resolve_c0(&args, &f, m);
            let s = m.time("build", || AveragingScheme::build(args.delta, &f, c0, args.cap))?;
            passed(&s)
        }
        SchemeCmd::Verify { scheme: args, qmax } => {
            scheme_params(&args, m);
            m.param("qmax", qmax);
            let f = poly(&args.poly)?;
            let c0 = resolve_c0(&args, &f, m);
            let s = m.time("build", || AveragingScheme::build(args.delta, &f, c0, args.cap))?;
            let v = m.time("verify", || s.verify(qmax));
            Ok(Outcome {
                result: serde_json::to_value(v)?,
                pass: v.pass,
            })
        }
    }
}

fn read_witness(path: &Path) -> anyhow::Result<SparseCosinePolynomial> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run_witness(cmd: WitnessCmd, m: &mut RunManifest) -> anyhow::Result<Outcome> {
    match cmd {
        WitnessCmd::Build { scheme: args, n, moduli, out, grid, threshold } => {
            scheme_params(&args, m);
            m.param("n", n);
            let f = poly(&args.poly)?;
            let (t, mut report) = match &moduli {
                Some(list) => {
                    m.param("moduli", list);
                    let ds: Vec<u64> = list
                        .split(',')
                        .map(|t| t.trim().parse::<u64>())
                        .collect::<Result<_, _>>()
                        .with_context(|| format!("--moduli {list}"))?;
                    let c0 = args.c0.unwrap_or(1.0);
                    let scheme = AveragingScheme::from_moduli(args.delta, &f, c0, &ds)?;
                    m.time("build", || build_witness(&f, args.delta, &scheme, n))?
                }
                None => {
                    let c0 = resolve_c0(&args, &f, m);
                    let (t, r, _) = m.time("build", || desk_witness(&f, args.delta, n, c0, args.cap))?;
                    (t, r)
                }
            };
            report.min_threshold = threshold;
            if let Some(g) = grid {
                m.param("grid", g);
                m.param("threshold", threshold);
                let scan = m.time("scan", || scan_min(&t, g, DEFAULT_REFINE_ITERS));
                report.record_scan(scan);
            }
            if let Some(path) = &out {
                m.param("out", path.display().to_string());
                write_artifact(path, &(serde_json::to_string(&t)? + "\n"), m)?;
            }
            Ok(Outcome {
                pass: report.pass(),
                result: serde_json::to_value(report)?,
            })
        }
        WitnessCmd::Scan { input, grid, threshold, refine_iters } => {
            m.param("in", input.display().to_string());
            m.param("grid", grid);
            m.param("threshold", threshold);
            m.param("refine_iters", refine_iters);
            if grid < 2 {
                return Err(anyhow!("--grid must be at least 2"));
            }
            let t = read_witness(&input)?;
            let scan = m.time("scan", || scan_min(&t, grid, refine_iters));
            Ok(Outcome {
                result: json!({ "b0": t.b0, "coeff_sum": t.coeff_sum(), "terms": t.terms.len(), "scan": scan }),
                pass: scan.refined_min >= threshold,
            })
        }
    }
}

fn run_oracle(cmd: OracleCmd, m: &mut RunManifest) -> anyhow::Result<Outcome> {
    match cmd {
        OracleCmd::Gamma { poly: p, n, grid } => {
            m.param("poly", &p);
            m.param("n", n);
            m.param("grid", grid);
            let f = poly(&p)?;
            let spectrum = f.values_up_to(n, 1);
            if spectrum.is_empty() {
                return Err(anyhow!("no values of f up to --n {n}"));
            }
            let g = m.time("bracket", || gamma_plus_bracket(&spectrum, grid))?;
            passed(&g)
        }
        OracleCmd::Diffset { poly: p, big_n, cap } => {
            m.param("poly", &p);
            m.param("N", big_n);
            m.param("cap", cap);
            let f = poly(&p)?;
            let r = m.time("search", || max_diff_avoiding(&f, big_n, cap))?;
            passed(&r)
        }
    }
}

fn run_lower(cmd: LowerCmd, m: &mut RunManifest) -> anyhow::Result<Outcome> {
    match cmd {
        LowerCmd::Classes { p, k, beta } => {
            m.param("p", p);
            m.param("k", k);
            m.param("beta", beta);
            let sys = m.time("classes", || residue_classes(p, k, beta))?;
            let identities = json!({
                "sum": sys.sums.iter().sum::<f64>(),
                "sum_of_squares": sys.sums.iter().map(|a| a * a).sum::<f64>(),
                "p_minus_s": p - sys.s,
            });
            let mut result = serde_json::to_value(&sys)?;
            result["identities"] = identities;
            Ok(Outcome { result, pass: true })
        }
        LowerCmd::Bound { k, n, mcap } => {
            m.param("k", k);
            m.param("n", n);
            m.param("mcap", mcap);
            let lb = m.time("bound", || gamma_lower_bound(n, k, mcap))?;
            passed(&lb)
        }
        LowerCmd::Check { witness, p, poly: fp } => {
            m.param("witness", witness.display().to_string());
            m.param("p", p);
            m.param("poly", &fp);
            let f = poly(&fp)?;
            let t = read_witness(&witness)?;
            let c = m.time("check", || prime_inequality_check(&t, &f, p))?;
            Ok(Outcome {
                pass: c.pass,
                result: serde_json::to_value(c)?,
            })
        }
    }
}

fn run_arcs(args: ArcsArgs, m: &mut RunManifest) -> anyhow::Result<Outcome> {
    m.param("qcut", args.qcut);
    m.param("rcut", args.rcut);
    let loc = match (args.x, args.num, args.den) {
        (Some(x), _, _) => {
            m.param("x", x);
            classify(x, args.qcut, args.rcut)?
        }
        (None, Some(num), Some(den)) => {
            m.param("num", num);
            m.param("den", den);
            classify_rational(num, den, args.qcut, args.rcut)?
        }
        _ => return Err(anyhow!("give --x or both --num and --den")),
    };
    passed(&loc)
}

fn dispatch(command: Command, m: &mut RunManifest) -> anyhow::Result<Outcome> {
    match command {
        Command::Expsum(c) => run_expsum(c, m),
        Command::Scheme(c) => run_scheme(c, m),
        Command::Witness(c) => run_witness(c, m),
        Command::Oracle(c) => run_oracle(c, m),
        Command::Lower(c) => run_lower(c, m),
        Command::Arcs(a) => run_arcs(a, m),
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Expsum(e) => match e.sub {
            None => "expsum",
            Some(ExpsumSub::Sweep { .. }) => "expsum sweep",
            Some(ExpsumSub::Check { .. }) => "expsum check",
        },
        Command::Scheme(SchemeCmd::Build { .. }) => "scheme build",
        Command::Scheme(SchemeCmd::Verify { .. }) => "scheme verify",
        Command::Witness(WitnessCmd::Build { .. }) => "witness build",
        Command::Witness(WitnessCmd::Scan { .. }) => "witness scan",
        Command::Oracle(OracleCmd::Gamma { .. }) => "oracle gamma",
        Command::Oracle(OracleCmd::Diffset { .. }) => "oracle diffset",
        Command::Lower(LowerCmd::Classes { .. }) => "lower classes",
        Command::Lower(LowerCmd::Bound { .. }) => "lower bound",
        Command::Lower(LowerCmd::Check { .. }) => "lower check",
        Command::Arcs(_) => "arcs",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: --threads {t}: {e}");
            return ExitCode::from(2);
        }
    }
    let mut manifest = RunManifest::new(subcommand_name(&cli.command));
    match dispatch(cli.command, &mut manifest) {
        Ok(outcome) => {
            let envelope: BTreeMap<&str, Value> = BTreeMap::from([
                ("manifest", serde_json::to_value(&manifest).expect("manifest serializes")),
                ("result", outcome.result),
            ]);
            println!("{}", serde_json::to_string_pretty(&envelope).expect("JSON values serialize"));
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
