//! Command-line front end. Every subcommand produces a report whose JSON
//! form is byte-identical across runs of the same input (timings only with
//! `--timing`).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use crate::components::connected_components;
use crate::constructors::{
    construct_from_bipartite, construct_from_paired_group, construct_idempotent,
    construct_idempotent_from_group, finite_approximant, TagPool,
};
use crate::error::Error;
use crate::matrix::{is_idempotent, TropMatrix};
use crate::permgroups::{
    paired_two_closure, two_closure, ColouredBigraph, ColouredDigraph, PairedGroup, Perm, PermGroup,
};
use crate::spaces::{is_full_rank, member, reduce_full_rank};
use crate::stabilizer::{
    classification_report, commuting_units, group_description, maximal_classification_conditions,
    stabilizer_pairs, GroupDescription, Sigma, StabilizerElement,
};
use crate::Limits;

#[derive(Parser, Debug)]
#[command(
    name = "tropgroup",
    version,
    about = "Unit stabilizers and maximal subgroups of max-plus matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Backtracking nodes allowed per search.
    #[arg(long, default_value_t = 5_000_000)]
    max_nodes: u64,
    /// Largest group enumerated element by element.
    #[arg(long, default_value_t = 1_000_000)]
    max_order: u64,
    /// Worker threads (the output does not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    /// Include wall-clock time in the report.
    #[arg(long)]
    timing: bool,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

impl Common {
    fn limits(&self) -> Limits {
        Limits {
            max_nodes: self.max_nodes,
            max_order: self.max_order,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Describe the unit stabilizer of a matrix.
    Analyze {
        path: PathBuf,
        /// Treat the input as an idempotent and describe its maximal subgroup.
        #[arg(long)]
        assume_idempotent: bool,
        #[command(flatten)]
        common: Common,
    },
    /// 2-closure of a permutation group, or paired closure with `--bidegree`.
    Closure {
        /// Generators in cycle notation; paired generators as `left|right`.
        #[arg(long, num_args = 1.., required = true)]
        gens: Vec<String>,
        #[arg(
            long,
            conflicts_with = "bidegree",
            required_unless_present = "bidegree"
        )]
        degree: Option<usize>,
        /// `n,m` for a group acting on two sets.
        #[arg(long, value_parser = parse_bidegree)]
        bidegree: Option<(usize, usize)>,
        #[command(flatten)]
        common: Common,
    },
    /// Build a witness matrix from a graph or group description.
    Construct {
        spec: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Finite approximant of a full-rank idempotent.
    Approximate {
        matrix: PathBuf,
        #[arg(long = "m")]
        m: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every invariant check that applies to a matrix.
    Verify {
        path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_bidegree(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected n,m")?;
    let n = a
        .trim()
        .parse()
        .map_err(|_| format!("bad degree {:?}", a))?;
    let m = b
        .trim()
        .parse()
        .map_err(|_| format!("bad degree {:?}", b))?;
    Ok((n, m))
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Lib(#[from] Error),
    #[error("{0}: {1}")]
    Io(PathBuf, String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(Error::Parse(_)) => 2,
            CliError::Lib(Error::SearchBudgetExceeded(_) | Error::OrderCapExceeded(_)) => 3,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// A finished run: the JSON report, a plain-text summary and whether every
/// verification flag held.
pub struct RunReport {
    pub json: Json,
    pub text: String,
    pub passed: bool,
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e.to_string()))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e.to_string()))
}

fn digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let hex: String = hash.iter().map(|b| format!("{:02x}", b)).collect();
    format!("sha256:{}", hex)
}

fn matrix_rows(a: &TropMatrix) -> Json {
    Json::Array(
        (0..a.rows())
            .map(|i| {
                Json::Array(
                    a.row(i)
                        .iter()
                        .map(|x| Json::String(x.to_string()))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|x| x + 1).collect()
}

fn big(n: u128) -> Json {
    u64::try_from(n).map_or_else(|_| Json::String(n.to_string()), Json::from)
}

/// JSON form of a description; indices are 1-based.
pub fn description_json(desc: &GroupDescription) -> Json {
    let components: Vec<Json> = desc
        .partition
        .components
        .iter()
        .map(|c| json!({"rows": one_based(&c.rows), "cols": one_based(&c.cols)}))
        .collect();
    let factors: Vec<Json> = desc
        .factors
        .iter()
        .map(|f| {
            json!({
                "rows": f.n,
                "cols": f.m,
                "multiplicity": f.multiplicity,
                "order": big(f.order),
                "name": f.name,
                "generators": f.finite_part.cycle_strings(),
                "components": one_based(&f.members),
                "normalized_block": matrix_rows(&f.normalized_block),
            })
        })
        .collect();
    json!({
        "input_shape": [desc.input_shape.0, desc.input_shape.1],
        "reduced_shape": [desc.reduction.matrix.rows(), desc.reduction.matrix.cols()],
        "kept_rows": one_based(&desc.reduction.row_keep),
        "kept_cols": one_based(&desc.reduction.col_keep),
        "components": components,
        "factors": factors,
        "real_rank": desc.real_rank(),
        "finite_order": big(desc.finite_order()),
        "formula": desc.formula(),
    })
}

fn flags_json(flags: &BTreeMap<String, bool>) -> Json {
    Json::Object(
        flags
            .iter()
            .map(|(k, v)| (k.clone(), Json::Bool(*v)))
            .collect(),
    )
}

fn analyze(
    text: &str,
    assume_idempotent: bool,
    limits: &Limits,
) -> CliResult<(Json, BTreeMap<String, bool>, String)> {
    let a = TropMatrix::parse(text)?;
    if assume_idempotent && !is_idempotent(&a) {
        return Err(Error::NotIdempotent.into());
    }
    let desc = group_description(&a, limits)?;
    let (n, m) = a.shape();
    let report = classification_report(&desc, n, m, limits);
    let mut flags = BTreeMap::new();
    flags.insert("full_rank_input".to_string(), is_full_rank(&a));
    flags.insert("classification_conditions".to_string(), report.all());
    if assume_idempotent {
        flags.insert(
            "maximal_subgroup_conditions".to_string(),
            maximal_classification_conditions(&desc, n, limits),
        );
    }
    let text = format!(
        "shape {}x{}, reduced {}x{}, {} component(s)\nfinite order {}\n{}\n",
        n,
        m,
        desc.reduction.matrix.rows(),
        desc.reduction.matrix.cols(),
        desc.partition.components.len(),
        desc.finite_order(),
        desc.formula()
    );
    let mut result = description_json(&desc);
    result["conditions"] = serde_json::to_value(&report).expect("report serializes");
    Ok((result, flags, text))
}

fn parse_paired(text: &str, n: usize, m: usize) -> CliResult<(Perm, Perm)> {
    let (l, r) = text.split_once('|').ok_or_else(|| {
        Error::Parse(format!(
            "paired generator {:?} needs the form left|right",
            text
        ))
    })?;
    Ok((Perm::parse(l, n)?, Perm::parse(r, m)?))
}

fn closure(
    gens: &[String],
    degree: Option<usize>,
    bidegree: Option<(usize, usize)>,
    limits: &Limits,
) -> CliResult<(Json, BTreeMap<String, bool>, String)> {
    let mut flags = BTreeMap::new();
    if let Some((n, m)) = bidegree {
        let pairs = gens
            .iter()
            .map(|g| parse_paired(g, n, m))
            .collect::<CliResult<Vec<_>>>()?;
        let g = PairedGroup::new(n, m, pairs)?;
        let order = g.order(limits.max_order)?;
        let c = paired_two_closure(&g, limits)?;
        let closed = c.order == order as u128;
        flags.insert(
            "closure_contains_group".to_string(),
            c.order % order as u128 == 0,
        );
        let text = format!(
            "group order {}\nclosure order {}\nclosed {}\n",
            order, c.order, closed
        );
        let result = json!({
            "bidegree": [n, m],
            "generators": g.cycle_strings(),
            "order": order,
            "closure_generators": c.group.cycle_strings(),
            "closure_order": big(c.order),
            "closed": closed,
        });
        return Ok((result, flags, text));
    }
    let n = degree.ok_or_else(|| Error::Parse("missing degree".into()))?;
    let g = PermGroup::from_cycles(n, gens)?;
    let order = g.order(limits.max_order)?;
    let c = two_closure(&g, limits)?;
    let closed = c.order == order as u128;
    flags.insert(
        "closure_contains_group".to_string(),
        c.order % order as u128 == 0,
    );
    let text = format!(
        "group order {}\nclosure order {}\nclosed {}\n",
        order, c.order, closed
    );
    let result = json!({
        "degree": n,
        "generators": g.cycle_strings(),
        "order": order,
        "closure_generators": c.group.cycle_strings(),
        "closure_order": big(c.order),
        "closed": closed,
    });
    Ok((result, flags, text))
}

fn index(v: &Json, n: usize, what: &str) -> CliResult<usize> {
    let i = v
        .as_u64()
        .ok_or_else(|| Error::Parse(format!("{} index must be a positive integer", what)))?
        as usize;
    if i == 0 || i > n {
        return Err(Error::Parse(format!("{} index {} out of range 1..={}", what, i, n)).into());
    }
    Ok(i - 1)
}

/// Dense colour ids for arbitrary JSON colour labels, in sorted label order.
fn edge_list(spec: &Json, n: usize, m: usize) -> CliResult<BTreeMap<(usize, usize), String>> {
    let edges = spec
        .get("edges")
        .and_then(Json::as_array)
        .ok_or_else(|| Error::Parse("missing edges".into()))?;
    let mut out = BTreeMap::new();
    for e in edges {
        let triple = e
            .as_array()
            .filter(|t| t.len() == 3)
            .ok_or_else(|| Error::Parse("edges are [from, to, colour] triples".into()))?;
        let i = index(&triple[0], n, "source")?;
        let j = index(&triple[1], m, "target")?;
        if out.insert((i, j), triple[2].to_string()).is_some() {
            return Err(Error::Parse(format!("edge ({}, {}) listed twice", i + 1, j + 1)).into());
        }
    }
    Ok(out)
}

fn dense(labels: impl Iterator<Item = String>) -> BTreeMap<String, u32> {
    let set: BTreeSet<String> = labels.collect();
    set.into_iter()
        .enumerate()
        .map(|(k, l)| (l, k as u32))
        .collect()
}

fn size(spec: &Json, key: &str) -> CliResult<usize> {
    spec[key]
        .as_u64()
        .map(|x| x as usize)
        .filter(|&x| x > 0)
        .ok_or_else(|| Error::Parse(format!("{} must be a positive integer", key)).into())
}

fn construct(text: &str, limits: &Limits) -> CliResult<(TropMatrix, Json, BTreeMap<String, bool>)> {
    let spec: Json = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut pool = TagPool::new();
    let (kind, a) = if spec.get("vertices").is_some() {
        let n = size(&spec, "vertices")?;
        let edges = edge_list(&spec, n, n)?;
        // pairs not listed share one colour of their own
        let label = |i: usize, j: usize| edges.get(&(i, j)).cloned().unwrap_or_default();
        let ids = dense((0..n * n).map(|p| label(p / n, p % n)));
        let d = ColouredDigraph {
            n,
            colours: (0..n * n).map(|p| ids[&label(p / n, p % n)]).collect(),
        };
        ("idempotent", construct_idempotent(&d, &mut pool, limits)?)
    } else if spec.get("omega").is_some() {
        let (n, m) = (size(&spec, "omega")?, size(&spec, "theta")?);
        let edges = edge_list(&spec, n, m)?;
        let ids = dense(edges.values().cloned());
        let d = ColouredBigraph {
            n,
            m,
            colours: (0..n * m)
                .map(|p| edges.get(&(p / m, p % m)).map(|l| ids[l]))
                .collect(),
        };
        (
            "bipartite",
            construct_from_bipartite(&d, &mut pool, limits)?,
        )
    } else if spec.get("generators").is_some() {
        let gens: Vec<String> = spec["generators"]
            .as_array()
            .ok_or_else(|| Error::Parse("generators must be a list".into()))?
            .iter()
            .map(|g| {
                g.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::Parse("generators are strings".into()))
            })
            .collect::<std::result::Result<_, _>>()?;
        if let Some(pair) = spec.get("bidegree").and_then(Json::as_array) {
            let dim = |k: usize| pair.get(k).and_then(Json::as_u64).map(|x| x as usize);
            let (Some(n), Some(m)) = (dim(0), dim(1)) else {
                return Err(Error::Parse("bidegree must be [n, m]".into()).into());
            };
            let gens = gens
                .iter()
                .map(|g| parse_paired(g, n, m))
                .collect::<CliResult<Vec<_>>>()?;
            let g = PairedGroup::new(n, m, gens)?;
            (
                "bipartite",
                construct_from_paired_group(&g, &mut pool, limits)?,
            )
        } else {
            let g = PermGroup::from_cycles(size(&spec, "degree")?, &gens)?;
            (
                "idempotent",
                construct_idempotent_from_group(&g, &mut pool, limits)?,
            )
        }
    } else {
        return Err(Error::Parse("spec needs vertices, omega/theta, or generators".into()).into());
    };
    let mut flags = BTreeMap::new();
    flags.insert("full_rank".to_string(), is_full_rank(&a));
    if kind == "idempotent" {
        flags.insert("idempotent".to_string(), is_idempotent(&a));
    }
    let result = json!({"kind": kind, "shape": [a.rows(), a.cols()], "matrix": matrix_rows(&a)});
    Ok((a, result, flags))
}

fn approximate(text: &str, m: u64) -> CliResult<(TropMatrix, Json, BTreeMap<String, bool>)> {
    let e = TropMatrix::parse(text)?;
    let f = finite_approximant(&e, m)?;
    let mut flags = BTreeMap::new();
    flags.insert("closed_form".to_string(), true);
    flags.insert("idempotent".to_string(), is_idempotent(&f));
    flags.insert("full_rank".to_string(), is_full_rank(&f));
    let result = json!({"m": m, "shape": [f.rows(), f.cols()], "matrix": matrix_rows(&f)});
    Ok((f, result, flags))
}

/// Checks that `sigma` consists of eigenvalue-0 pairs satisfying
/// `P ⊗ A = A ⊗ Q` and, when enumerated, is closed under products and
/// inverses.
pub fn sigma_is_consistent(a: &TropMatrix, sigma: &Sigma) -> bool {
    let valid = |x: &StabilizerElement| {
        x.eigenvalue.is_zero()
            && crate::matrix::monomial_eigenvalue(&x.p).map_or(false, |e| e.is_zero())
            && x.p.left_mul(a) == x.q.right_mul(a)
    };
    if !sigma.generators.iter().all(valid) {
        return false;
    }
    let Some(elements) = &sigma.elements else {
        return true;
    };
    let set: HashSet<&StabilizerElement> = elements.iter().collect();
    elements.len() as u128 == sigma.order
        && elements.iter().all(valid)
        && set.contains(&StabilizerElement::identity(a.rows(), a.cols()))
        && elements.iter().all(|x| set.contains(&x.inverse()))
        && sigma
            .generators
            .iter()
            .all(|g| elements.iter().all(|x| set.contains(&x.compose(g))))
}

/// Every invariant check that applies to `a`, by name.
pub fn verify_suite(a: &TropMatrix, limits: &Limits) -> crate::Result<BTreeMap<String, bool>> {
    let mut flags = BTreeMap::new();
    let reduction = reduce_full_rank(a)?;
    let z = &reduction.matrix;
    flags.insert("reduction_full_rank".to_string(), is_full_rank(z));
    let sigma = stabilizer_pairs(z, limits)?;
    flags.insert(
        "sigma_consistent".to_string(),
        sigma_is_consistent(z, &sigma),
    );
    let desc = group_description(a, limits)?;
    flags.insert(
        "decomposition_order".to_string(),
        desc.finite_order() == sigma.order,
    );
    let mut normalized = true;
    for f in &desc.factors {
        let s = stabilizer_pairs(&f.normalized_block, limits)?;
        normalized &= s
            .generators
            .iter()
            .all(|g| g.p.is_permutation() && g.q.is_permutation());
    }
    flags.insert("normalization_permutations".to_string(), normalized);
    let (n, m) = a.shape();
    flags.insert(
        "classification_conditions".to_string(),
        classification_report(&desc, n, m, limits).all(),
    );
    if is_idempotent(a) {
        flags.insert(
            "maximal_subgroup_conditions".to_string(),
            maximal_classification_conditions(&desc, n, limits),
        );
        if is_full_rank(a) {
            if connected_components(a)?.len() == 1 {
                let commuting = commuting_units(a, limits)?;
                let same = match &sigma.elements {
                    Some(elements) => {
                        let x: BTreeSet<_> = commuting.iter().map(|e| (&e.p, &e.q)).collect();
                        let y: BTreeSet<_> = elements.iter().map(|e| (&e.p, &e.q)).collect();
                        x == y
                    }
                    None => commuting.len() as u128 == sigma.order,
                };
                flags.insert("commuting_units_match".to_string(), same);
            }
            let mut nested = true;
            let mut previous: Option<TropMatrix> = None;
            for k in 1..=3 {
                let f = finite_approximant(a, k)?;
                nested &= is_full_rank(&f);
                if let Some(p) = &previous {
                    nested &= (0..p.cols()).all(|j| member(&p.column(j), &f).is_some());
                }
                previous = Some(f);
            }
            flags.insert("approximants_nested".to_string(), nested);
        }
    }
    Ok(flags)
}

fn verify_text(text: &str, limits: &Limits) -> CliResult<(Json, BTreeMap<String, bool>, String)> {
    let a = TropMatrix::parse(text)?;
    let flags = verify_suite(&a, limits)?;
    let lines: String = flags
        .iter()
        .map(|(k, v)| format!("{} {}\n", if *v { "ok  " } else { "FAIL" }, k))
        .collect();
    Ok((json!({"shape": [a.rows(), a.cols()]}), flags, lines))
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads.and_then(|k| rayon::ThreadPoolBuilder::new().num_threads(k).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

fn execute(cli: &Cli, echo: Vec<String>) -> CliResult<(RunReport, bool)> {
    let started = Instant::now();
    let (name, common, input, outcome) = match &cli.command {
        Command::Analyze {
            path,
            assume_idempotent,
            common,
        } => {
            let text = read(path)?;
            let limits = common.limits();
            let r = with_threads(common.threads, || {
                analyze(&text, *assume_idempotent, &limits)
            })?;
            ("analyze", common, text, r)
        }
        Command::Closure {
            gens,
            degree,
            bidegree,
            common,
        } => {
            let limits = common.limits();
            let r = with_threads(common.threads, || {
                closure(gens, *degree, *bidegree, &limits)
            })?;
            ("closure", common, gens.join(" "), r)
        }
        Command::Construct {
            spec,
            output,
            common,
        } => {
            let text = read(spec)?;
            let limits = common.limits();
            let (a, result, flags) = with_threads(common.threads, || construct(&text, &limits))?;
            let rendered = a.to_string();
            if let Some(out) = output {
                write_file(out, &rendered)?;
            }
            ("construct", common, text, (result, flags, rendered))
        }
        Command::Approximate {
            matrix,
            m,
            output,
            common,
        } => {
            let text = read(matrix)?;
            let (f, result, flags) = approximate(&text, *m)?;
            let rendered = f.to_string();
            if let Some(out) = output {
                write_file(out, &rendered)?;
            }
            ("approximate", common, text, (result, flags, rendered))
        }
        Command::Verify { path, common } => {
            let text = read(path)?;
            let limits = common.limits();
            let r = with_threads(common.threads, || verify_text(&text, &limits))?;
            ("verify", common, text, r)
        }
    };
    let (result, flags, text) = outcome;
    let passed = flags.values().all(|&v| v);
    let mut json = json!({
        "command": name,
        "arguments": echo,
        "input_digest": digest(input.as_bytes()),
        "result": result,
        "verification": flags_json(&flags),
    });
    if common.timing {
        json["timing_ms"] = Json::from(started.elapsed().as_millis() as u64);
    }
    Ok((RunReport { json, text, passed }, common.json))
}

/// Runs the command line `args` (program name first), writing the report
/// to `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{}", e)
            } else {
                write!(err, "{}", e)
            };
            return code;
        }
    };
    let echo = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match execute(&cli, echo) {
        Ok((report, as_json)) => {
            let body = if as_json {
                serde_json::to_string_pretty(&report.json).expect("report serializes") + "\n"
            } else {
                report.text.clone()
            };
            let _ = out.write_all(body.as_bytes());
            let verify = matches!(cli.command, Command::Verify { .. });
            if verify && !report.passed {
                1
            } else {
                0
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e);
            e.exit_code()
        }
    }
}
