use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bmepoly::coords::{pair_count, x_vector};
use bmepoly::exact::{format_rational, pow2};
use bmepoly::facets::{
    cyclic_ordering_family, kraft_equalities, splitohedron_catalog, facet_stats, Family, LinearInequality,
};
use bmepoly::kp::{parse_bracketing, phi, phi_fibers, FIBER_LIMIT};
use bmepoly::solver::{
    certify_splitohedron_vertex, parse_matrix, solve_bnb_with, solve_exhaustive_restricted, solve_nj, tree_value,
    BnbConfig, DistanceMatrix, EXHAUSTIVE_LIMIT,
};
use bmepoly::trees::{enumerate_binary_trees, parse_newick, Leaf, PhyloTree};
use bmepoly::BmeError;
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

const SCHEMA: &str = "bmepoly/1";
/// Largest n for `certify --all` and `stats --verify` without `--force`.
const ENUMERATION_GUARD: usize = 8;
/// Largest n whose full catalog is listed without `--force`.
const CATALOG_GUARD: usize = 16;

#[derive(Parser)]
#[command(name = "bmepoly", version, about = "Balanced minimal evolution polytope toolkit")]
struct Cli {
    /// Worker threads for parallel scans (default: all cores).
    #[arg(long, global = true, env = "BMEPOLY_THREADS")]
    threads: Option<usize>,
    /// More log output (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Newick,
    Json,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Bnb,
    Nj,
    Exhaustive,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct a BME tree from a distance matrix (PHYLIP or CSV; `-` reads stdin).
    Solve {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Bnb)]
        method: Method,
        /// Default: the Newick line followed by the JSON certificate.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Subproblems with at most this many leaves are closed by enumeration.
        #[arg(long, default_value_t = 7)]
        threshold: usize,
        /// Keep searching equal-bound nodes to report tied optima.
        #[arg(long)]
        ties: bool,
        /// Include the branch-and-bound node log in the certificate.
        #[arg(long)]
        log: bool,
        /// Allow exhaustive search beyond its size guard.
        #[arg(long)]
        force: bool,
    },
    /// Facet statistics for the BME polytope on n leaves.
    Stats {
        #[arg(short)]
        n: usize,
        /// Recount tight vertices by enumerating every tree.
        #[arg(long)]
        verify: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        force: bool,
    },
    /// Vertex certificate of a binary tree in the splitohedron.
    Certify {
        /// Newick tree with leaves 1..n.
        tree: Option<String>,
        /// Certify every binary tree on `-n` leaves.
        #[arg(long, requires = "n", conflicts_with = "tree")]
        all: bool,
        #[arg(short)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        force: bool,
    },
    /// Image of a permutoassociahedron face, or the fiber table.
    Phi {
        /// Bracketing such as `(({1},{2}),{3})`.
        bracketing: Option<String>,
        /// Root label (default: the largest label).
        #[arg(long)]
        root: Option<Leaf>,
        /// Group every vertex on `-n` leaves by its image.
        #[arg(long, requires = "n", conflicts_with = "bracketing")]
        fibers: bool,
        #[arg(short)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Newick)]
        format: Format,
    },
    /// List catalog inequalities, optionally those tight at a tree.
    Facets {
        #[arg(short)]
        n: usize,
        /// caterpillar, intersecting-cherry, split, cherry-clade, cyclic or kraft.
        #[arg(long)]
        family: Option<Family>,
        /// Only constraints tight at this tree.
        #[arg(long)]
        tight: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        force: bool,
    },
}

/// An error with its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = match err.downcast_ref::<BmeError>() {
            Some(BmeError::Guard { .. }) => 4,
            Some(BmeError::Parse { .. } | BmeError::Domain(_)) => 3,
            Some(BmeError::ValidityViolation { .. }) => 1,
            None if err.downcast_ref::<std::io::Error>().is_some() => 3,
            None => 1,
        };
        Failure { code, err }
    }
}

impl From<BmeError> for Failure {
    fn from(e: BmeError) -> Self {
        anyhow::Error::new(e).into()
    }
}

type CmdResult = Result<(), Failure>;

fn guard(operation: &'static str, n: usize, limit: usize, force: bool) -> Result<(), BmeError> {
    if n > limit && !force {
        Err(BmeError::Guard { operation, n, limit })
    } else {
        Ok(())
    }
}

fn emit_json(v: Value) {
    println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
}

fn read_input(path: &PathBuf) -> anyhow::Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn named_newick(d: &DistanceMatrix, t: &PhyloTree) -> String {
    t.to_newick_with(&|l| d.name(l))
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    input: &PathBuf,
    method: Method,
    format: Option<Format>,
    threshold: usize,
    ties: bool,
    log: bool,
    force: bool,
) -> CmdResult {
    let text = read_input(input)?;
    let d = parse_matrix(&text)?;
    let n = d.n();
    log::info!("read a {n}-taxon matrix");
    let names = |ts: &[PhyloTree]| ts.iter().map(|t| named_newick(&d, t)).collect::<Vec<_>>();
    let scale = pow2(n.saturating_sub(2));
    let (tree, mut cert) = match method {
        Method::Exhaustive => {
            guard("solve --method exhaustive", n, EXHAUSTIVE_LIMIT, force)?;
            let r = solve_exhaustive_restricted(&d, &[])?.expect("unrestricted search has a tree");
            let cert = json!({
                "value_x": format_rational(&r.value),
                "value_c": format_rational(&(&r.value / &scale)),
                "ties": names(&r.ties),
                "evaluated": r.evaluated,
            });
            (r.tree, cert)
        }
        Method::Nj => {
            let t = solve_nj(&d)?;
            let v = tree_value(&d, &t)?;
            let cert = json!({
                "value_x": format_rational(&v),
                "value_c": format_rational(&(&v / &scale)),
            });
            (t, cert)
        }
        Method::Bnb => {
            let cfg = BnbConfig {
                exhaustive_threshold: threshold,
                collect_ties: ties,
                ..BnbConfig::default()
            };
            let r = solve_bnb_with(&d, cfg)?;
            let mut cert = r.to_json();
            cert["ties"] = json!(names(&r.ties));
            if !log {
                cert.as_object_mut().expect("object").remove("log");
            }
            (r.tree, cert)
        }
    };
    let newick = named_newick(&d, &tree);
    cert["schema"] = json!(SCHEMA);
    cert["method"] = json!(match method {
        Method::Bnb => "bnb",
        Method::Nj => "nj",
        Method::Exhaustive => "exhaustive",
    });
    cert["n"] = json!(n);
    cert["tree"] = json!(newick);
    match format {
        Some(Format::Newick) => println!("{newick}"),
        Some(Format::Json) => emit_json(cert),
        Some(Format::Text) => {
            println!("tree     {newick}");
            println!("d.x(t)   {}", cert["value_x"].as_str().unwrap_or_default());
            println!("d.c(t)   {}", cert["value_c"].as_str().unwrap_or_default());
            if let Some(k) = cert.get("nodes") {
                println!("nodes    {k}");
            }
        }
        None => {
            println!("{newick}");
            emit_json(cert);
        }
    }
    Ok(())
}

fn cmd_stats(n: usize, verify: bool, format: Format, force: bool) -> CmdResult {
    if verify {
        guard("stats --verify", n, ENUMERATION_GUARD, force)?;
    }
    let r = facet_stats(n, verify)?;
    if format == Format::Json {
        let mut v = serde_json::to_value(&r).expect("serializable");
        v["schema"] = json!(SCHEMA);
        emit_json(v);
        return Ok(());
    }
    println!("n = {}  dimension = {}  vertices = {}", r.n, r.dimension, r.vertices);
    if let Some(total) = r.known_facet_total {
        println!("facets (known total) = {total}");
    }
    if let Some(s) = &r.split_facet_total {
        println!("split facets = {s}");
    }
    println!("{:<22} {:<40} {:>10} {:>22} {:>10}", "family", "inequality", "count", "tight/facet", "observed");
    for f in &r.families {
        let obs = match &f.tight_observed {
            Some(v) => v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
            None => "-".into(),
        };
        println!("{:<22} {:<40} {:>10} {:>22} {:>10}", f.family, f.inequality, f.count, f.tight_formula, obs);
    }
    Ok(())
}

fn certificate_line(c: &bmepoly::solver::VertexCertificate) -> String {
    format!(
        "{}  cherries={} caterpillar={} count={} direct={} cherry-clade={} rank={}/{} {}",
        c.tree,
        c.cherries,
        c.caterpillar,
        c.formula_count,
        c.direct_count,
        c.cherry_clade_tight,
        c.active_rank,
        pair_count(c.n),
        if c.certified { "certified" } else { "NOT certified" }
    )
}

fn cmd_certify(tree: Option<&str>, all: bool, n: Option<usize>, format: Format, force: bool) -> CmdResult {
    if all {
        let n = n.expect("clap requires -n");
        guard("certify --all", n, ENUMERATION_GUARD, force)?;
        let trees: Vec<PhyloTree> = enumerate_binary_trees(n)?.collect();
        let certs = trees
            .par_iter()
            .map(certify_splitohedron_vertex)
            .collect::<Result<Vec<_>, _>>()?;
        let certified = certs.iter().filter(|c| c.certified).count();
        let agree = certs.iter().filter(|c| c.formula_count == c.direct_count).count();
        match format {
            Format::Json => emit_json(json!({
                "schema": SCHEMA,
                "n": n,
                "trees": certs.len(),
                "certified": certified,
                "count_agrees": agree,
                "certificates": certs,
            })),
            _ => {
                for c in &certs {
                    println!("{}", certificate_line(c));
                }
                println!("{certified}/{} trees certified; incidence count agrees on {agree}", certs.len());
            }
        }
        return Ok(());
    }
    let text = tree.ok_or_else(|| anyhow::anyhow!("give a Newick tree or --all -n N"))?;
    let t = parse_newick(text)?;
    guard("certify", t.n(), CATALOG_GUARD, force)?;
    let c = certify_splitohedron_vertex(&t)?;
    match format {
        Format::Json => {
            let mut v = serde_json::to_value(&c).expect("serializable");
            v["schema"] = json!(SCHEMA);
            emit_json(v);
        }
        _ => println!("{}", certificate_line(&c)),
    }
    Ok(())
}

fn cmd_phi(bracketing: Option<&str>, root: Option<Leaf>, fibers: bool, n: Option<usize>, format: Format) -> CmdResult {
    if fibers {
        let n = n.expect("clap requires -n");
        if n < 3 {
            return Err(BmeError::Domain(format!("fibers need n >= 3, got {n}")).into());
        }
        let m = n - 1;
        if m > FIBER_LIMIT {
            return Err(BmeError::Guard { operation: "phi --fibers", n, limit: FIBER_LIMIT + 1 }.into());
        }
        let fib = phi_fibers(m, root.unwrap_or(n))?;
        match format {
            Format::Json => emit_json(json!({
                "schema": SCHEMA,
                "n": n,
                "fibers": fib.iter().map(|(t, faces)| json!({
                    "tree": t.to_newick(),
                    "size": faces.len(),
                    "faces": faces.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            })),
            _ => {
                for (t, faces) in &fib {
                    println!("{:>6}  {}", faces.len(), t.to_newick());
                }
                let mut sizes: Vec<usize> = fib.values().map(Vec::len).collect();
                sizes.dedup();
                println!("{} fibers, sizes {:?}", fib.len(), sizes);
            }
        }
        return Ok(());
    }
    let text = bracketing.ok_or_else(|| anyhow::anyhow!("give a bracketing or --fibers -n N"))?;
    let face = parse_bracketing(text, root)?;
    let t = phi(&face);
    match format {
        Format::Json => emit_json(json!({
            "schema": SCHEMA,
            "face": face.to_json(),
            "dimension": face.dimension(),
            "tree": t.to_newick(),
        })),
        _ => println!("{}", t.to_newick()),
    }
    Ok(())
}

fn cmd_facets(n: usize, family: Option<Family>, tight: Option<&str>, format: Format, force: bool) -> CmdResult {
    guard("facets", n, CATALOG_GUARD, force)?;
    let cat = splitohedron_catalog(n)?;
    let mut all: Vec<LinearInequality> = cat.inequalities;
    if n == 5 {
        all.extend(cyclic_ordering_family());
    }
    all.extend(kraft_equalities(n));
    let mut qs: Vec<LinearInequality> = all.into_iter().filter(|q| family.is_none_or(|f| q.family == f)).collect();
    let mut summary = None;
    if let Some(text) = tight {
        let t = parse_newick(text)?;
        if t.n() != n {
            return Err(BmeError::Domain(format!("tree has {} leaves, expected {n}", t.n())).into());
        }
        let x = x_vector(&t)?;
        qs.retain(|q| q.family != Family::Kraft && q.is_tight(&x).expect("same n"));
        let clade = qs.iter().filter(|q| q.family == Family::CherryClade).count();
        summary = Some((qs.len() - clade, clade));
    }
    match format {
        Format::Json => {
            let mut v = json!({
                "schema": SCHEMA,
                "n": n,
                "count": qs.len(),
                "inequalities": qs.iter().map(|q| q.to_json()).collect::<Vec<_>>(),
            });
            if let Some((facets, clade)) = summary {
                v["tight_facets"] = json!(facets);
                v["tight_cherry_clade"] = json!(clade);
            }
            emit_json(v);
        }
        _ => {
            for q in &qs {
                println!("{:<20} {}", q.family.name(), q.render());
            }
            match summary {
                Some((facets, clade)) => {
                    println!("{facets} facet inequalities tight, plus {clade} cherry clade-faces")
                }
                None => println!("{} constraints", qs.len()),
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Solve { input, method, format, threshold, ties, log, force } => {
            cmd_solve(input, *method, *format, *threshold, *ties, *log, *force)
        }
        Command::Stats { n, verify, format, force } => cmd_stats(*n, *verify, *format, *force),
        Command::Certify { tree, all, n, format, force } => cmd_certify(tree.as_deref(), *all, *n, *format, *force),
        Command::Phi { bracketing, root, fibers, n, format } => {
            cmd_phi(bracketing.as_deref(), *root, *fibers, *n, *format)
        }
        Command::Facets { n, family, tight, format, force } => {
            cmd_facets(*n, *family, tight.as_deref(), *format, *force)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
