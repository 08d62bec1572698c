//! JSON run manifests: a variety, a prime list and a sequence of operations
//! whose results are written to an output directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, VarietySpec};
use crate::counting::{count_any, count_twisted, CountOptions, CountRecord};
use crate::error::{invalid, Error, Result};
use crate::ffield::is_prime;
use crate::lefschetz::{euler_steps, node_correction, LedgerMove, Resolution, TraceRow, TraceTable};
use crate::livne::{check_cover, find_cover_set, livne_compare, read_traces_csv, Cover};
use crate::pipeline::{betti_pipeline, match_pipeline, Companion, Congruence, FormId, MatchRequest, ResolutionRecipe};
use crate::qexp::eta;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub variety_id: String,
    #[serde(default)]
    pub primes: Vec<u64>,
    pub operations: Vec<Operation>,
    /// Relative paths are taken from the manifest's directory.
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Operation {
    Count {
        #[serde(default = "one")]
        degree: u32,
        #[serde(default)]
        twist: Option<String>,
    },
    Trace {
        b2: i64,
        /// Explicit correction; otherwise computed from the nodes when `resolution` is given, else zero.
        #[serde(default)]
        correction: Option<i64>,
        #[serde(default)]
        resolution: Option<Resolution>,
        #[serde(default)]
        splitting_discriminant: Option<i64>,
        #[serde(default)]
        form: Option<FormId>,
    },
    Betti {
        chi: i64,
        recipe: ResolutionRecipe,
        #[serde(default)]
        congruence: Option<Congruence>,
    },
    Match {
        recipe: ResolutionRecipe,
        form: FormId,
        companion: Companion,
        calibration_prime: u64,
    },
    Livne {
        bad_primes: BTreeSet<u64>,
        #[serde(default)]
        check_set: Option<Vec<u64>>,
        /// Search bound when no check set is given.
        #[serde(default)]
        search_bound: Option<u64>,
        #[serde(default)]
        first: Option<TraceSource>,
        #[serde(default)]
        second: Option<TraceSource>,
        #[serde(default)]
        determinants_agree_mod_2: Option<bool>,
    },
    Euler {
        moves: Vec<LedgerMove>,
    },
    Eta {
        terms: i64,
        /// `eta(scale z)`; without it the series is `form`.
        #[serde(default)]
        scale: Option<u32>,
        #[serde(default)]
        form: Option<FormId>,
    },
}

fn one() -> u32 {
    1
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Count { .. } => "count",
            Operation::Trace { .. } => "trace",
            Operation::Betti { .. } => "betti",
            Operation::Match { .. } => "match",
            Operation::Livne { .. } => "livne",
            Operation::Euler { .. } => "euler",
            Operation::Eta { .. } => "eta",
        }
    }

    fn uses_primes(&self) -> bool {
        matches!(
            self,
            Operation::Count { .. } | Operation::Trace { .. } | Operation::Betti { .. } | Operation::Match { .. }
        )
    }
}

/// Traces as a CSV file with columns `p,trace`, or inline.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TraceSource {
    File(PathBuf),
    Inline(BTreeMap<u64, i64>),
}

impl RunManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(&e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self, catalog: &Catalog) -> Result<()> {
        let variety = catalog.get(&self.variety_id)?;
        if self.operations.is_empty() {
            return Err(invalid!("the manifest has no operations"));
        }
        let mut seen = BTreeSet::new();
        for op in &self.operations {
            if !seen.insert(op.name()) {
                return Err(invalid!("operation {:?} appears more than once", op.name()));
            }
        }
        let unique: BTreeSet<u64> = self.primes.iter().copied().collect();
        if unique.len() != self.primes.len() {
            return Err(invalid!("the prime list has duplicates"));
        }
        if let Some(&n) = self.primes.iter().find(|&&n| !is_prime(n)) {
            return Err(invalid!("{n} is not prime"));
        }
        if self.threads == Some(0) {
            return Err(invalid!("threads must be positive"));
        }
        for op in &self.operations {
            if op.uses_primes() && self.primes.is_empty() {
                return Err(invalid!("operation {:?} needs a non-empty prime list", op.name()));
            }
            match op {
                Operation::Trace { .. } | Operation::Match { .. } => {
                    if let Some(&p) = self.primes.iter().find(|&&p| variety.is_bad_prime(p)) {
                        return Err(invalid!("p = {p} is a bad prime of {}", variety.id));
                    }
                    if let Operation::Match { calibration_prime, .. } = op {
                        if !self.primes.contains(calibration_prime) {
                            return Err(invalid!("the calibration prime {calibration_prime} is not in the prime list"));
                        }
                    }
                }
                Operation::Count { degree, twist } => {
                    if !matches!(degree, 1 | 2) {
                        return Err(invalid!("count degree must be 1 or 2"));
                    }
                    if let Some(t) = twist {
                        variety.involution(t)?;
                    }
                }
                Operation::Livne {
                    check_set,
                    search_bound,
                    first,
                    second,
                    determinants_agree_mod_2,
                    ..
                } => {
                    if check_set.is_none() && search_bound.is_none() {
                        return Err(invalid!("livne needs a check_set or a search_bound"));
                    }
                    if first.is_some() != second.is_some() {
                        return Err(invalid!("livne needs both trace sources or neither"));
                    }
                    if first.is_some() && determinants_agree_mod_2.is_none() {
                        return Err(invalid!("comparing traces needs determinants_agree_mod_2"));
                    }
                }
                Operation::Eta { terms, .. } if *terms < 1 => {
                    return Err(invalid!("eta needs at least one term"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationSummary {
    pub op: String,
    /// `ok` or `mismatch`.
    pub status: String,
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub variety_id: String,
    pub primes: Vec<u64>,
    pub provenance: Vec<String>,
    pub operations: Vec<OperationSummary>,
    pub mismatch: bool,
}

#[derive(Serialize)]
struct RecordLine<'a> {
    #[serde(flatten)]
    record: &'a CountRecord,
    provenance: &'a str,
}

#[derive(Serialize)]
struct WithProvenance<'a, T: Serialize> {
    provenance: &'a [String],
    #[serde(flatten)]
    body: &'a T,
}

struct Writer {
    dir: PathBuf,
}

impl Writer {
    fn write(&self, name: &str, text: &str) -> Result<String> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(name.to_string())
    }

    fn json<T: Serialize>(&self, name: &str, provenance: &[String], body: &T) -> Result<String> {
        let mut text = serde_json::to_string_pretty(&WithProvenance { provenance, body })?;
        text.push('\n');
        self.write(name, &text)
    }
}

fn base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn read_source(source: &TraceSource, base: &Path) -> Result<BTreeMap<u64, i64>> {
    match source {
        TraceSource::Inline(map) => Ok(map.clone()),
        TraceSource::File(path) => {
            let path = base.join(path);
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            read_traces_csv(&text)
        }
    }
}

/// Run a manifest file. Relative paths in it are resolved against its directory.
pub fn run_manifest_file(path: impl AsRef<Path>, catalog: &Catalog, opts: &CountOptions) -> Result<RunSummary> {
    let path = path.as_ref();
    let manifest = RunManifest::load(path)?;
    run_manifest(&manifest, &base_dir(path), catalog, opts)
}

/// Validate and run `manifest`, writing outputs under `base/output_dir`.
///
/// Every output except the `wall_time` fields of `counts.jsonl` is a
/// deterministic function of the manifest and the catalog.
pub fn run_manifest(manifest: &RunManifest, base: &Path, catalog: &Catalog, opts: &CountOptions) -> Result<RunSummary> {
    manifest.validate(catalog)?;
    let variety = catalog.get(&manifest.variety_id)?;
    let mut opts = opts.clone();
    if manifest.threads.is_some() {
        opts.threads = manifest.threads;
    }
    let dir = base.join(&manifest.output_dir);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let out = Writer { dir };
    let provenance = vec![format!("{}: {}", variety.id, variety.provenance)];

    let mut records: Vec<CountRecord> = Vec::new();
    let mut summaries = Vec::new();
    let mut mismatch = false;
    for op in &manifest.operations {
        let (outputs, ok) = run_operation(op, manifest, variety, base, catalog, &opts, &out, &provenance, &mut records)?;
        mismatch |= !ok;
        summaries.push(OperationSummary {
            op: op.name().to_string(),
            status: if ok { "ok" } else { "mismatch" }.to_string(),
            outputs,
        });
    }
    if !records.is_empty() {
        let mut text = String::new();
        for r in &records {
            let prov = catalog.get(&r.variety_id).map(|s| s.provenance.as_str()).unwrap_or("");
            text.push_str(&serde_json::to_string(&RecordLine { record: r, provenance: prov })?);
            text.push('\n');
        }
        out.write("counts.jsonl", &text)?;
        summaries.iter_mut().for_each(|s| {
            if matches!(s.op.as_str(), "count" | "trace" | "betti" | "match") {
                s.outputs.push("counts.jsonl".into());
            }
        });
    }
    let summary = RunSummary {
        variety_id: variety.id.clone(),
        primes: manifest.primes.clone(),
        provenance,
        operations: summaries,
        mismatch,
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    out.write("summary.json", &text)?;
    Ok(summary)
}

#[allow(clippy::too_many_arguments)]
fn run_operation(
    op: &Operation,
    manifest: &RunManifest,
    variety: &VarietySpec,
    base: &Path,
    catalog: &Catalog,
    opts: &CountOptions,
    out: &Writer,
    provenance: &[String],
    records: &mut Vec<CountRecord>,
) -> Result<(Vec<String>, bool)> {
    let primes = &manifest.primes;
    match op {
        Operation::Count { degree, twist } => {
            for &p in primes {
                let r = match twist {
                    Some(t) => count_twisted(variety, variety.involution(t)?, p, opts)?,
                    None => count_any(variety, p, *degree, opts)?,
                };
                records.push(r);
            }
            Ok((Vec::new(), true))
        }
        Operation::Trace {
            b2,
            correction,
            resolution,
            splitting_discriminant,
            form,
        } => {
            let series = match form {
                Some(f) => Some(f.series(*primes.iter().max().expect("validated") as i64)?),
                None => None,
            };
            let mut table = TraceTable::new(&variety.id);
            for &p in primes {
                let r = count_any(variety, p, 1, opts)?;
                let corr = match (correction, resolution) {
                    (Some(c), _) => *c,
                    (None, Some(res)) => node_correction(variety, p, *res, splitting_discriminant.unwrap_or(0), opts)?,
                    (None, None) => 0,
                };
                let mut row = TraceRow::new(p, r.count, *b2, corr);
                if let Some(s) = &series {
                    row = row.with_candidate(s.coefficient_i64(p as i64)?);
                }
                table.rows.push(row);
                records.push(r);
            }
            let ok = table.rows.iter().all(|r| r.matches != Some(false));
            let files = vec![
                out.write("trace.csv", &table.to_csv()?)?,
                out.json("trace.json", provenance, &table)?,
            ];
            Ok((files, ok))
        }
        Operation::Betti { chi, recipe, congruence } => {
            let mut reports = Vec::new();
            for &p in primes {
                let (report, recs) = betti_pipeline(catalog, &variety.id, recipe, p, *chi, *congruence, opts)?;
                reports.push(report);
                records.extend(recs);
            }
            #[derive(Serialize)]
            struct Reports<'a> {
                reports: &'a [crate::pipeline::BettiReport],
            }
            Ok((vec![out.json("betti.json", provenance, &Reports { reports: &reports })?], true))
        }
        Operation::Match {
            recipe,
            form,
            companion,
            calibration_prime,
        } => {
            let req = MatchRequest {
                variety: variety.id.clone(),
                recipe: recipe.clone(),
                form: *form,
                companion: companion.clone(),
                primes: primes.clone(),
                calibration_prime: *calibration_prime,
            };
            let outcome = match_pipeline(catalog, &req, opts)?;
            records.extend(outcome.records);
            let mut text = serde_json::to_string_pretty(&outcome.report)?;
            text.push('\n');
            let files = vec![
                out.write("match.json", &text)?,
                out.write("match_trace.csv", &outcome.table.to_csv()?)?,
            ];
            Ok((files, outcome.report.overall))
        }
        Operation::Livne {
            bad_primes,
            check_set,
            search_bound,
            first,
            second,
            determinants_agree_mod_2,
        } => {
            let t = match check_set {
                Some(t) => t.clone(),
                None => find_cover_set(bad_primes, search_bound.expect("validated"))?,
            };
            let cover = check_cover(bad_primes, &t)?;
            let verdict = match (first, second) {
                (Some(a), Some(b)) => Some(livne_compare(
                    &read_source(a, base)?,
                    &read_source(b, base)?,
                    bad_primes,
                    &t,
                    determinants_agree_mod_2.expect("validated"),
                )?),
                _ => None,
            };
            #[derive(Serialize)]
            struct Livne<'a> {
                bad_primes: &'a BTreeSet<u64>,
                check_set: &'a [u64],
                cover: &'a Cover,
                #[serde(skip_serializing_if = "Option::is_none")]
                verdict: Option<&'a crate::livne::ComparisonVerdict>,
            }
            let body = Livne {
                bad_primes,
                check_set: &t,
                cover: &cover,
                verdict: verdict.as_ref(),
            };
            Ok((vec![out.json("livne.json", provenance, &body)?], true))
        }
        Operation::Euler { moves } => {
            let steps = euler_steps(moves)?;
            #[derive(Serialize)]
            struct Ledger<'a> {
                moves: &'a [LedgerMove],
                steps: &'a [i64],
                chi: i64,
            }
            let body = Ledger {
                moves,
                steps: &steps,
                chi: *steps.last().expect("non-empty ledger"),
            };
            Ok((vec![out.json("euler.json", provenance, &body)?], true))
        }
        Operation::Eta { terms, scale, form } => {
            let body = expand_series(*terms, *scale, *form)?;
            Ok((vec![out.json("eta.json", provenance, &body)?], true))
        }
    }
}

/// Coefficients of `eta(scale z)` or of a newform, as exact integers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesOutput {
    pub series: String,
    /// Exponent of the first coefficient, in units of `q^(1/24)`.
    pub lead_num: i64,
    pub coefficients: Vec<i64>,
}

/// `terms` coefficients of `eta(scale z)`, or `a_1 .. a_terms` of `form` (default f25).
pub fn expand_series(terms: i64, scale: Option<u32>, form: Option<FormId>) -> Result<SeriesOutput> {
    if terms < 1 {
        return Err(invalid!("at least one term is needed"));
    }
    match scale {
        Some(m) => {
            let s = eta(m, terms as usize)?;
            let coefficients = s
                .coeffs()
                .iter()
                .map(|c| c.to_i64().ok_or_else(|| crate::error::domain!("coefficient too large")))
                .collect::<Result<Vec<_>>>()?;
            Ok(SeriesOutput {
                series: format!("eta({m}z)"),
                lead_num: s.lead_num(),
                coefficients,
            })
        }
        None => {
            let f = form.unwrap_or(FormId::F25);
            let s = f.series(terms.max(2))?;
            let coefficients = (1..=terms).map(|n| s.coefficient_i64(n)).collect::<Result<Vec<_>>>()?;
            Ok(SeriesOutput {
                series: f.to_string(),
                lead_num: 24,
                coefficients,
            })
        }
    }
}
