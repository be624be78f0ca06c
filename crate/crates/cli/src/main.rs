use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use polyclone::bounds::bounds;
use polyclone::compat::{check_compat_sampled, check_compat_symmetric, Verdict, DEFAULT_SEED};
use polyclone::exec::enumeration_budget;
use polyclone::solver::{decide_nu, Outcome, Pinning, NODE_LIMIT};
use polyclone::structures::{verify_eq1, verify_eq1_b};
use polyclone::trace::{
    certify_lowerbound_a, certify_lowerbound_b, check_certificate, fuzz_certificate, TraceCertificate,
};
use polyclone::witness::{is_conservative_exhaustive, is_conservative_sampled, is_nu_symmetric, SymmetricOp, Witness};
use polyclone::{Error, Exec, FamilySpec, SpecA, SpecB};

#[derive(Parser)]
#[command(name = "polyclone", version, about = "Structures with large minimal-arity near-unanimity polymorphisms")]
struct Cli {
    /// Worker threads for parallel enumeration (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Run every enumeration on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
}

#[derive(Args)]
struct FamilyArgs {
    family: Family,
    /// Size parameter n (positional or --n).
    #[arg(value_name = "N")]
    n_pos: Option<usize>,
    /// Multiplicity parameter m, family A only (positional or --m).
    #[arg(value_name = "M")]
    m_pos: Option<usize>,
    #[arg(long = "n", conflicts_with = "n_pos")]
    n: Option<usize>,
    #[arg(long = "m", conflicts_with = "m_pos")]
    m: Option<usize>,
}

impl FamilyArgs {
    fn spec(&self) -> Result<FamilySpec, Error> {
        let n = self
            .n
            .or(self.n_pos)
            .ok_or_else(|| Error::Usage("missing parameter n".into()))?;
        let m = self.m.or(self.m_pos);
        let spec = match (self.family, m) {
            (Family::A, Some(m)) => FamilySpec::A { n, m },
            (Family::A, None) => return Err(Error::Usage("family A needs the parameter m".into())),
            (Family::B, None) => FamilySpec::B { n },
            (Family::B, Some(_)) => return Err(Error::Usage("family B takes no parameter m".into())),
        };
        spec.validate()
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Mode {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pin {
    /// All near-unanimity identities.
    Nu,
    /// Only t(a,n,...,n) and its permutations equal n.
    Remark,
}

#[derive(Subcommand)]
enum Command {
    /// Print a family structure as JSON.
    Gen {
        #[command(flatten)]
        family: FamilyArgs,
    },
    /// Check that the composition chain of binary projections equals the
    /// congruence with index i (all i when omitted).
    Ppcheck {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        i: Option<usize>,
        /// Family B: comma-separated j values (1 or 2), one per chain factor.
        #[arg(long, value_delimiter = ',')]
        pattern: Option<Vec<u8>>,
    },
    /// Check the explicit witness against every relation of its structure.
    Witness {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Evaluate the witness at this arity instead of its own.
        #[arg(long)]
        arity: Option<u64>,
    },
    /// Decide whether an NU polymorphism of arity k exists.
    Decide {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "nu")]
        pin: Pin,
        #[arg(long, default_value_t = NODE_LIMIT)]
        node_limit: u64,
    },
    /// Build a lower-bound certificate, or re-check one from a file.
    Trace {
        #[arg(value_enum, required_unless_present = "verify")]
        family: Option<Family>,
        #[arg(value_name = "N")]
        n_pos: Option<usize>,
        #[arg(value_name = "M")]
        m_pos: Option<usize>,
        #[arg(long = "n", conflicts_with = "n_pos")]
        n: Option<usize>,
        #[arg(long = "m", conflicts_with = "m_pos")]
        m: Option<usize>,
        /// Re-check the certificate stored in this file.
        #[arg(long, conflicts_with = "family")]
        verify: Option<PathBuf>,
        /// Also run this many single-field mutations through the checker.
        #[arg(long)]
        fuzz: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Closed-form arity bounds for a universe size and maximal relation arity.
    Bounds {
        #[arg(value_name = "UNIVERSE")]
        universe_pos: Option<usize>,
        #[arg(value_name = "ARITY")]
        arity_pos: Option<usize>,
        #[arg(long = "universe", conflicts_with = "universe_pos")]
        universe: Option<usize>,
        #[arg(long = "arity", conflicts_with = "arity_pos")]
        arity: Option<usize>,
    },
}

/// Process exit status.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Status {
    Ok = 0,
    Negative = 1,
    Usage = 2,
    Budget = 3,
}

fn status_of(e: &Error) -> Status {
    match e {
        Error::BudgetExceeded { .. } => Status::Budget,
        Error::Certificate { .. } => Status::Negative,
        _ => Status::Usage,
    }
}

fn warn_degenerate(spec: FamilySpec) {
    if let FamilySpec::A { n: 0, m: 2 } = spec {
        eprintln!("warning: A(0,2) is outside the lower-bound argument (NU operations need arity at least 3)");
    }
}

fn run(cli: Cli) -> Result<(Value, Status), Error> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match cli.command {
        Command::Gen { family } => {
            let spec = family.spec()?;
            warn_degenerate(spec);
            Ok((serde_json::to_value(spec.structure()?)?, Status::Ok))
        }
        Command::Ppcheck { family, i, pattern } => ppcheck(family.spec()?, i, pattern),
        Command::Witness {
            family,
            mode,
            trials,
            seed,
            arity,
        } => witness(family.spec()?, mode, trials, seed, arity, exec),
        Command::Decide {
            family,
            k,
            pin,
            node_limit,
        } => {
            let spec = family.spec()?;
            warn_degenerate(spec);
            let s = spec.structure()?;
            let pinning = match pin {
                Pin::Nu => None,
                Pin::Remark => Some(Pinning::top_rows(spec, k)),
            };
            let report = decide_nu(&s, k, pinning, node_limit)?;
            let status = match report.solution.outcome {
                Outcome::Sat(_) => Status::Ok,
                Outcome::Unsat => Status::Negative,
                Outcome::Unknown => Status::Budget,
            };
            Ok((report.to_json(&s), status))
        }
        Command::Trace {
            family,
            n_pos,
            m_pos,
            n,
            m,
            verify,
            fuzz,
            seed,
        } => {
            if let Some(path) = verify {
                return verify_file(&path);
            }
            let args = FamilyArgs {
                family: family.ok_or_else(|| Error::Usage("missing family".into()))?,
                n_pos,
                m_pos,
                n,
                m,
            };
            let spec = args.spec()?;
            let cert = match spec {
                FamilySpec::A { n, m } => certify_lowerbound_a(n, m)?,
                FamilySpec::B { n } => certify_lowerbound_b(n)?,
            };
            let Some(trials) = fuzz else {
                return Ok((cert.to_json(), Status::Ok));
            };
            let s = spec.structure()?;
            let report = fuzz_certificate(&cert, &s, trials, seed, exec);
            let status = if report.all_rejected() { Status::Ok } else { Status::Negative };
            Ok((
                json!({
                    "spec": spec,
                    "trials": report.trials,
                    "seed": seed,
                    "rejected": report.rejected,
                    "unparsable": report.unparsable,
                    "escaped": report.escaped,
                }),
                status,
            ))
        }
        Command::Bounds {
            universe_pos,
            arity_pos,
            universe,
            arity,
        } => {
            let u = universe
                .or(universe_pos)
                .ok_or_else(|| Error::Usage("missing universe size".into()))?;
            let r = arity
                .or(arity_pos)
                .ok_or_else(|| Error::Usage("missing maximal relation arity".into()))?;
            let b = bounds(u, r)?;
            let mut v = serde_json::to_value(&b)?;
            v["universe"] = json!(u);
            v["max_arity"] = json!(r);
            Ok((v, Status::Ok))
        }
    }
}

fn ppcheck(spec: FamilySpec, i: Option<usize>, pattern: Option<Vec<u8>>) -> Result<(Value, Status), Error> {
    let n = match spec {
        FamilySpec::A { n, .. } | FamilySpec::B { n } => n,
    };
    if pattern.is_some() && (i.is_none() || matches!(spec, FamilySpec::A { .. })) {
        return Err(Error::Usage("--pattern needs family B and an explicit --i".into()));
    }
    let indices: Vec<usize> = match i {
        Some(i) => vec![i],
        None => (1..=n).collect(),
    };
    let mut results = Vec::new();
    for i in indices {
        let ok = match spec {
            FamilySpec::A { n, m } => verify_eq1(SpecA::new(n, m)?, i)?,
            FamilySpec::B { n } => verify_eq1_b(SpecB::new(n)?, i, pattern.as_deref())?,
        };
        results.push(json!({ "i": i, "verdict": if ok { "ok" } else { "violation" } }));
    }
    let all_ok = results.iter().all(|r| r["verdict"] == "ok");
    let mut out = json!({ "spec": spec, "results": results });
    if let Some(p) = pattern {
        out["pattern"] = json!(p);
    }
    Ok((out, if all_ok { Status::Ok } else { Status::Negative }))
}

fn witness(
    spec: FamilySpec,
    mode: Mode,
    trials: u64,
    seed: u64,
    arity: Option<u64>,
    exec: Exec,
) -> Result<(Value, Status), Error> {
    warn_degenerate(spec);
    let mut op = match spec {
        FamilySpec::A { n, m } => Witness::f_a(n, m)?,
        FamilySpec::B { n } => Witness::f_b(n)?,
    };
    if let Some(l) = arity {
        op = op.with_arity(l.into())?;
    }
    let s = spec.structure()?;
    let budget = enumeration_budget();
    let mut status = Status::Ok;
    let mut relations = Vec::new();
    for (name, r) in s.iter().filter(|(_, r)| r.arity() >= 2) {
        let verdict: Verdict = match mode {
            Mode::Exact => check_compat_symmetric(&op, r, budget, exec)?,
            Mode::Sampled => check_compat_sampled(&op, r, trials, seed, exec)?,
        };
        if !verdict.is_ok() {
            status = Status::Negative;
        }
        let mut v = verdict.to_json(&s.domain, Some(&op as &dyn SymmetricOp));
        v["relation"] = json!(name);
        relations.push(v);
    }
    // unary relations hold exactly when the witness is conservative
    let cons = match (mode, op.arity().to_u64()) {
        (Mode::Exact, Some(l)) => is_conservative_exhaustive(&op, l, budget)?,
        _ => is_conservative_sampled(&op, trials, seed, exec)?,
    };
    if !cons.is_conservative() {
        status = Status::Negative;
    }
    let nu = is_nu_symmetric(&op)?;
    if !nu {
        status = Status::Negative;
    }
    let out = json!({
        "spec": spec,
        "arity": op.arity().to_string(),
        "mode": if mode == Mode::Exact { "exact" } else { "sampled" },
        "seed": seed,
        "near_unanimity": nu,
        "conservative": {
            "mode": if mode == Mode::Exact { "exact" } else { "sampled" },
            "examined": cons.examined,
            "verdict": if cons.is_conservative() { "ok" } else { "violation" },
            "counterexample": cons.counterexample.map(|c| c.to_json(&s.domain)),
        },
        "relations": relations,
        "verdict": if status == Status::Ok { "ok" } else { "violation" },
    });
    Ok((out, status))
}

fn verify_file(path: &PathBuf) -> Result<(Value, Status), Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)?;
    let cert = TraceCertificate::from_json(&v)?;
    let s = cert.spec.validate()?.structure()?;
    let result = check_certificate(&cert, &s);
    let status = if result.is_valid() { Status::Ok } else { Status::Negative };
    Ok((
        json!({ "spec": cert.spec, "valid": result.is_valid(), "faults": result.faults }),
        status,
    ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: cannot configure {j} worker threads: {e}");
            return ExitCode::from(Status::Usage as u8);
        }
    }
    match run(cli) {
        Ok((v, status)) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("JSON values serialize"));
            ExitCode::from(status as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(status_of(&e) as u8)
        }
    }
}
