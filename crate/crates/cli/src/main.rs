use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use frobtrace::catalog::{load_catalog, Catalog};
use frobtrace::counting::{count_any, count_twisted, CountOptions, CountRecord};
use frobtrace::lefschetz::{
    elliptic_ap, elliptic_ap_square, euler_steps, node_correction, quotient_ledger, LedgerMove, Resolution,
    TraceRow, TraceTable,
};
use frobtrace::livne::{check_cover, find_cover_set, livne_compare, read_traces_csv};
use frobtrace::manifest::{expand_series, run_manifest_file};
use frobtrace::pipeline::{betti_pipeline, match_pipeline, Companion, Congruence, FormId, MatchRequest, ResolutionRecipe};
use frobtrace::{Error, Result};

#[derive(Parser)]
#[command(name = "frobtrace", version, about = "Point counts, Frobenius traces and modularity checks")]
struct Cli {
    /// Worker threads for counting.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    output: Format,
    /// Catalog file to use instead of the built-in one.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct PrimeArgs {
    #[arg(short = 'p', long)]
    prime: Option<u64>,
    /// Comma-separated primes.
    #[arg(long, value_delimiter = ',')]
    primes: Vec<u64>,
}

impl PrimeArgs {
    fn list(&self) -> Result<Vec<u64>> {
        let mut out: Vec<u64> = self.prime.into_iter().chain(self.primes.iter().copied()).collect();
        if out.is_empty() {
            return Err(Error::Validation("give --prime or --primes".into()));
        }
        let mut seen = BTreeSet::new();
        out.retain(|p| seen.insert(*p));
        Ok(out)
    }
}

#[derive(Subcommand)]
enum Command {
    /// List the catalog, or export it as JSON.
    Catalog {
        #[arg(long)]
        export: Option<PathBuf>,
        #[arg(long)]
        variety: Option<String>,
    },
    /// Count points over F_p (or F_{p^2} with --degree 2).
    Count {
        #[arg(long)]
        variety: String,
        #[command(flatten)]
        primes: PrimeArgs,
        #[arg(long, default_value_t = 1)]
        degree: u32,
    },
    /// Count points fixed by Frobenius composed with an involution.
    TwistedCount {
        #[arg(long)]
        variety: String,
        #[arg(long, default_value = "iota")]
        involution: String,
        #[command(flatten)]
        primes: PrimeArgs,
    },
    /// Frobenius traces on H^3 from counts.
    Trace {
        #[arg(long)]
        variety: String,
        #[command(flatten)]
        primes: PrimeArgs,
        #[arg(long, allow_hyphen_values = true)]
        b2: i64,
        /// Fixed correction; otherwise computed from the nodes when --resolution is given.
        #[arg(long, allow_hyphen_values = true)]
        correction: Option<i64>,
        #[arg(long)]
        resolution: Option<Resolution>,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        splitting_discriminant: i64,
        /// Newform whose coefficients are compared with the traces.
        #[arg(long)]
        form: Option<FormId>,
    },
    /// Betti pairs consistent with the count of a resolved model.
    Betti {
        #[arg(long)]
        variety: String,
        #[command(flatten)]
        primes: PrimeArgs,
        #[arg(long, allow_hyphen_values = true)]
        chi: i64,
        /// big, small, schoen, schoen_quotient, or a JSON recipe.
        #[arg(long)]
        recipe: Option<ResolutionRecipe>,
        /// Congruence MOD:RES the prime is expected to satisfy.
        #[arg(long)]
        congruence: Option<Congruence>,
    },
    /// Evaluate an Euler characteristic ledger (default: the quotient ledger).
    Euler {
        /// JSON file with a list of moves.
        #[arg(long)]
        moves: Option<PathBuf>,
    },
    /// Coefficients of eta(scale z) or of a newform.
    Eta {
        #[arg(long, default_value_t = 20)]
        terms: i64,
        #[arg(long)]
        scale: Option<u32>,
        #[arg(long)]
        form: Option<FormId>,
    },
    /// a_p of the normalization of a nodal plane curve, or of a newform.
    Ap {
        #[arg(long)]
        variety: Option<String>,
        #[arg(long)]
        form: Option<FormId>,
        #[command(flatten)]
        primes: PrimeArgs,
        /// Report a_{p^2} from the count over F_{p^2}.
        #[arg(long)]
        square: bool,
    },
    /// Quadratic-signature cover check and trace comparison.
    Livne {
        #[arg(long, value_delimiter = ',', required = true)]
        bad_primes: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        check_set: Vec<u64>,
        /// Find a check set among primes up to this bound.
        #[arg(long)]
        search_bound: Option<u64>,
        /// Two CSV files with columns p,trace.
        #[arg(long, num_args = 2)]
        traces: Vec<PathBuf>,
        /// Whether the determinants agree mod 2 (not computed here).
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        det_agree: bool,
    },
    /// Calibrate a resolution model at one prime and compare traces with a newform.
    Match {
        #[arg(long)]
        variety: String,
        #[command(flatten)]
        primes: PrimeArgs,
        #[arg(long)]
        calibration_prime: u64,
        #[arg(long, default_value = "f25")]
        form: FormId,
        /// none, zero, or a plane curve id.
        #[arg(long, default_value = "none")]
        companion: Companion,
        #[arg(long)]
        recipe: Option<ResolutionRecipe>,
    },
    /// Run a JSON manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
    },
}

/// What a command produced, and whether it counts as a mismatch.
struct Outcome {
    text: String,
    mismatch: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, mismatch: false }
    }

    fn json(v: &impl serde::Serialize) -> Result<Self> {
        Ok(Self::ok(serde_json::to_string_pretty(v)?))
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Falsified(_) => 3,
        e if e.is_refusal() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(out) => {
            println!("{}", out.text.trim_end());
            ExitCode::from(if out.mismatch { 3 } else { 0 })
        }
        Err(err) => {
            let obj = json!({"error": {"kind": err.kind(), "message": err.to_string()}});
            eprintln!("{obj}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn counting_options(cli: &Cli) -> Result<CountOptions> {
    match cli.threads {
        Some(0) => Err(Error::Validation("--threads must be positive".into())),
        Some(n) => Ok(CountOptions::with_threads(n)),
        None => Ok(CountOptions::default()),
    }
}

fn csv_only_for(cli: &Cli, what: &str) -> Result<()> {
    if cli.output == Format::Csv {
        return Err(Error::Validation(format!("{what} has no CSV output")));
    }
    Ok(())
}

fn records_output(format: Format, records: &[CountRecord]) -> Result<Outcome> {
    Ok(Outcome::ok(match format {
        Format::Json => records.iter().map(CountRecord::to_json_line).collect::<Vec<_>>().join("\n"),
        Format::Csv => {
            let mut text = String::from("variety_id,p,field_degree,twist_id,count,chunk_count,wall_time\n");
            for r in records {
                text.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.variety_id,
                    r.p,
                    r.field_degree,
                    r.twist_id.as_deref().unwrap_or(""),
                    r.count,
                    r.chunk_count,
                    r.wall_time
                ));
            }
            text
        }
    }))
}

fn run(cli: &Cli) -> Result<Outcome> {
    let catalog = match &cli.catalog {
        Some(path) => Catalog::load_file(path)?,
        None => load_catalog(),
    };
    let opts = counting_options(cli)?;
    match &cli.command {
        Command::Catalog { export, variety } => {
            csv_only_for(cli, "catalog")?;
            if let Some(path) = export {
                catalog.save_file(path)?;
                return Outcome::json(&json!({"exported": path, "entries": catalog.entries().len()}));
            }
            if let Some(id) = variety {
                return Outcome::json(catalog.get(id)?);
            }
            let list: Vec<Value> = catalog
                .entries()
                .iter()
                .map(|s| {
                    json!({
                        "id": s.id,
                        "ambient": s.ambient.kind(),
                        "dimension": s.dimension,
                        "bad_primes": s.bad_primes,
                        "provenance": s.provenance,
                    })
                })
                .collect();
            Outcome::json(&list)
        }
        Command::Count { variety, primes, degree } => {
            let spec = catalog.get(variety)?;
            let records = primes
                .list()?
                .into_iter()
                .map(|p| count_any(spec, p, *degree, &opts))
                .collect::<Result<Vec<_>>>()?;
            records_output(cli.output, &records)
        }
        Command::TwistedCount { variety, involution, primes } => {
            let spec = catalog.get(variety)?;
            let phi = spec.involution(involution)?;
            let records = primes
                .list()?
                .into_iter()
                .map(|p| count_twisted(spec, phi, p, &opts))
                .collect::<Result<Vec<_>>>()?;
            records_output(cli.output, &records)
        }
        Command::Trace {
            variety,
            primes,
            b2,
            correction,
            resolution,
            splitting_discriminant,
            form,
        } => {
            let spec = catalog.get(variety)?;
            let primes = primes.list()?;
            let series = match form {
                Some(f) => Some(f.series(*primes.iter().max().expect("non-empty") as i64)?),
                None => None,
            };
            let mut table = TraceTable::new(&spec.id);
            for p in primes {
                spec.require_good_prime(p)?;
                let n = count_any(spec, p, 1, &opts)?.count;
                let corr = match (correction, resolution) {
                    (Some(c), _) => *c,
                    (None, Some(r)) => node_correction(spec, p, *r, *splitting_discriminant, &opts)?,
                    (None, None) => 0,
                };
                let mut row = TraceRow::new(p, n, *b2, corr);
                if let Some(s) = &series {
                    row = row.with_candidate(s.coefficient_i64(p as i64)?);
                }
                table.rows.push(row);
            }
            let mismatch = table.rows.iter().any(|r| r.matches == Some(false));
            let text = match cli.output {
                Format::Json => table.to_json(),
                Format::Csv => table.to_csv()?,
            };
            Ok(Outcome { text, mismatch })
        }
        Command::Betti {
            variety,
            primes,
            chi,
            recipe,
            congruence,
        } => {
            csv_only_for(cli, "betti")?;
            let recipe = recipe.clone().unwrap_or_else(|| ResolutionRecipe::for_variety(variety));
            let reports = primes
                .list()?
                .into_iter()
                .map(|p| betti_pipeline(&catalog, variety, &recipe, p, *chi, *congruence, &opts).map(|r| r.0))
                .collect::<Result<Vec<_>>>()?;
            Outcome::json(&reports)
        }
        Command::Euler { moves } => {
            csv_only_for(cli, "euler")?;
            let moves: Vec<LedgerMove> = match moves {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    serde_json::from_str(&text)?
                }
                None => quotient_ledger(),
            };
            let steps = euler_steps(&moves)?;
            Outcome::json(&json!({"steps": steps, "chi": steps.last()}))
        }
        Command::Eta { terms, scale, form } => {
            csv_only_for(cli, "eta")?;
            let s = expand_series(*terms, *scale, *form)?;
            Ok(Outcome::ok(serde_json::to_string(&s.coefficients)?))
        }
        Command::Ap {
            variety,
            form,
            primes,
            square,
        } => {
            let primes = primes.list()?;
            let values: Vec<(u64, i64)> = match (variety, form) {
                (Some(id), None) => {
                    let spec = catalog.get(id)?;
                    primes
                        .iter()
                        .map(|&p| {
                            let a = if *square {
                                elliptic_ap_square(spec, p, &opts)?
                            } else {
                                elliptic_ap(spec, p, &opts)?
                            };
                            Ok((p, a))
                        })
                        .collect::<Result<_>>()?
                }
                (None, Some(f)) => {
                    let top = primes.iter().map(|&p| if *square { p * p } else { p }).max().expect("non-empty");
                    let s = f.series(top as i64)?;
                    primes
                        .iter()
                        .map(|&p| Ok((p, s.coefficient_i64(if *square { p * p } else { p } as i64)?)))
                        .collect::<Result<_>>()?
                }
                _ => return Err(Error::Validation("give exactly one of --variety and --form".into())),
            };
            let key = if *square { "a_p2" } else { "a_p" };
            Ok(Outcome::ok(match cli.output {
                Format::Json => {
                    let rows: Vec<Value> = values.iter().map(|&(p, a)| json!({"p": p, key: a})).collect();
                    serde_json::to_string_pretty(&rows)?
                }
                Format::Csv => {
                    let mut text = format!("p,{key}\n");
                    for (p, a) in values {
                        text.push_str(&format!("{p},{a}\n"));
                    }
                    text
                }
            }))
        }
        Command::Livne {
            bad_primes,
            check_set,
            search_bound,
            traces,
            det_agree,
        } => {
            csv_only_for(cli, "livne")?;
            let s: BTreeSet<u64> = bad_primes.iter().copied().collect();
            let t = match (check_set.is_empty(), search_bound) {
                (false, None) => check_set.clone(),
                (true, Some(b)) => find_cover_set(&s, *b)?,
                _ => return Err(Error::Validation("give exactly one of --check-set and --search-bound".into())),
            };
            let cover = check_cover(&s, &t)?;
            let mut out = json!({"bad_primes": s, "check_set": t, "cover": cover});
            if !traces.is_empty() {
                let read = |path: &PathBuf| -> Result<_> {
                    let text = fs::read_to_string(path).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    read_traces_csv(&text)
                };
                let verdict = livne_compare(&read(&traces[0])?, &read(&traces[1])?, &s, &t, *det_agree)?;
                out["verdict"] = serde_json::to_value(verdict)?;
            }
            Outcome::json(&out)
        }
        Command::Match {
            variety,
            primes,
            calibration_prime,
            form,
            companion,
            recipe,
        } => {
            csv_only_for(cli, "match")?;
            let req = MatchRequest {
                variety: variety.clone(),
                recipe: recipe.clone().unwrap_or_else(|| ResolutionRecipe::for_variety(variety)),
                form: *form,
                companion: companion.clone(),
                primes: primes.list()?,
                calibration_prime: *calibration_prime,
            };
            let outcome = match_pipeline(&catalog, &req, &opts)?;
            Ok(Outcome {
                text: serde_json::to_string_pretty(&outcome.report)?,
                mismatch: !outcome.report.overall,
            })
        }
        Command::Run { manifest } => {
            csv_only_for(cli, "run")?;
            let summary = run_manifest_file(manifest, &catalog, &opts)?;
            Ok(Outcome {
                text: serde_json::to_string_pretty(&summary)?,
                mismatch: summary.mismatch,
            })
        }
    }
}
