use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sparse_rank::harness::{self, Experiment, ExperimentConfig, Model, SpecConfig};
use sparse_rank::lattice::{
    basis_general_detailed, basis_identical, construct_basis, intersect_divisible, verify_basis, LatticeBasis,
};
use sparse_rank::linalg;
use sparse_rank::threshold::{condition_check, normalized_rank, phi_max, xorsat_bracket};
use sparse_rank::{Error, FieldCtx, FieldElem, SparseMatrix};
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Rank of sparse random matrices over finite fields.
#[derive(Parser)]
#[command(name = "sparse-rank", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full-rank condition and XORSAT thresholds.
    #[command(subcommand)]
    Threshold(ThresholdCmd),
    /// Tabulate Φ.
    #[command(subcommand)]
    Phi(PhiCmd),
    /// Sample one matrix and write it in Matrix Market format.
    Gen(GenArgs),
    /// Rank, nullity and frozen coordinates of a Matrix Market file.
    Rank(RankArgs),
    /// Frequency-vector lattice bases.
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Monte Carlo experiments.
    #[command(subcommand)]
    Mc(McCmd),
}

#[derive(Subcommand)]
enum ThresholdCmd {
    /// Decide the full-rank condition for a model.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Largest Poisson mean d for which k-XORSAT over F_q has full rank.
    Xorsat {
        #[arg(short, long, default_value_t = 3)]
        k: u32,
        #[arg(short, long, default_value_t = 2)]
        q: u32,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum PhiCmd {
    /// (z, Φ(z)) on a uniform grid as CSV.
    Curve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Simple,
    Pairing,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModelArg::Simple)]
    model: ModelArg,
    #[arg(long)]
    max_tries: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Field order when the file has no `% q=` comment.
    #[arg(short, long, default_value_t = 2)]
    q: u32,
    /// Include a kernel basis (element codes).
    #[arg(long)]
    kernel: bool,
    /// Include the list of frozen columns.
    #[arg(long)]
    frozen: bool,
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// Print the constructed basis.
    Basis {
        #[arg(short, long)]
        q: u32,
        #[arg(long, value_delimiter = ',')]
        coeffs: Vec<u32>,
    },
    /// Check the constructed basis against the brute-force module.
    Verify {
        #[arg(short, long)]
        q: u32,
        #[arg(long, value_delimiter = ',')]
        coeffs: Vec<u32>,
        /// Also check M ∩ f·Z = f·M for this f.
        #[arg(long)]
        f_d: Option<u32>,
    },
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum McCmd {
    Fullrank(McArgs),
    Rankformula(McArgs),
    Nullity(McArgs),
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())).into())
}

/// A model spec, either bare or under the `spec` key of an experiment config.
fn load_spec(path: &Path) -> anyhow::Result<SpecConfig> {
    let mut v = read_json(path)?;
    if let Some(inner) = v.get_mut("spec") {
        v = inner.take();
    }
    serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()).into())
}

fn load_experiment(path: &Path, experiment: Experiment) -> anyhow::Result<ExperimentConfig> {
    let mut v = read_json(path)?;
    let obj = v.as_object_mut().ok_or_else(|| Error::Parse("config must be a JSON object".into()))?;
    obj.insert("experiment".into(), serde_json::to_value(experiment)?);
    serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()).into())
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn print_json(v: &Value) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn elements(f: &FieldCtx, coeffs: &[u32]) -> anyhow::Result<Vec<FieldElem>> {
    if coeffs.is_empty() {
        bail!(Error::BadInput("--coeffs is empty".into()));
    }
    Ok(coeffs.iter().map(|&c| f.elem(c)).collect::<sparse_rank::Result<_>>()?)
}

fn basis_json(b: &LatticeBasis) -> Value {
    json!({ "vectors": b.vectors, "det_abs": b.det_abs.to_string() })
}

fn threshold(cmd: ThresholdCmd) -> anyhow::Result<()> {
    match cmd {
        ThresholdCmd::Check { config } => {
            let spec = load_spec(&config)?.build()?;
            let r = condition_check(&spec);
            let m = phi_max(&spec, 10_000, 1e-9);
            print_json(&json!({
                "holds": r.holds,
                "coprime": r.coprime,
                "phi0": r.phi0,
                "max_phi_interior": r.max_phi_interior,
                "argmax": r.argmax,
                "margin": r.margin,
                "boundary_case": r.boundary_case,
                "phi_max": m.value,
                "phi_argmax": m.argmax,
                "normalized_rank": normalized_rank(&spec),
            }))
        }
        ThresholdCmd::Xorsat { k, q, tol } => {
            let (lo, hi) = xorsat_bracket(k, q, tol)?;
            print_json(&json!({ "k": k, "q": q, "threshold": 0.5 * (lo + hi), "lo": lo, "hi": hi }))
        }
    }
}

fn gen(a: GenArgs) -> anyhow::Result<()> {
    let cfg = load_spec(&a.config)?;
    let spec = cfg.build()?;
    let (model, name) = match a.model {
        ModelArg::Simple => (Model::Simple, "simple"),
        ModelArg::Pairing => (Model::Pairing, "pairing"),
    };
    let (degs, m) = harness::generate(&spec, a.n, a.seed, model, a.max_tries)?;
    let comments = vec![
        format!("seed={} model={name} n={} m={}", a.seed, degs.n(), degs.m()),
        format!(
            "sum_d={} sum_k={}",
            degs.dvec.iter().map(|&x| x as u64).sum::<u64>(),
            degs.kvec.iter().map(|&x| x as u64).sum::<u64>()
        ),
    ];
    let mut buf = Vec::new();
    m.write_matrix_market(&mut buf, &comments)?;
    emit(std::str::from_utf8(&buf)?, a.out.as_deref())
}

fn rank(a: RankArgs) -> anyhow::Result<()> {
    let file = fs::File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let m = SparseMatrix::read_matrix_market(BufReader::new(file), a.q)?;
    let k = linalg::kernel(&m)?;
    let mut out = json!({
        "q": m.field().q(),
        "nrows": m.nrows(),
        "ncols": m.ncols(),
        "rank": m.ncols() - k.nullity,
        "nullity": k.nullity,
        "frozen_count": k.frozen.len(),
    });
    if a.frozen {
        out["frozen"] = json!(k.frozen);
    }
    if a.kernel {
        let basis: Vec<Vec<u16>> = k.basis.iter().map(|v| v.iter().map(|x| x.0).collect()).collect();
        out["kernel"] = json!(basis);
    }
    print_json(&out)
}

/// Returns false when verification fails.
fn lattice(cmd: LatticeCmd) -> anyhow::Result<bool> {
    match cmd {
        LatticeCmd::Basis { q, coeffs } => {
            let f = FieldCtx::new(q)?;
            let c = elements(&f, &coeffs)?;
            let mut out = json!({ "q": q, "coeffs": coeffs });
            if c.iter().all(|&x| x == c[0]) {
                let (b1, b2) = basis_identical(&f)?;
                out["basis"] = basis_json(&b2);
                out["m_q"] = basis_json(&b1);
            } else {
                let g = basis_general_detailed(&f, &c)?;
                out["basis"] = basis_json(&g.basis);
                out["case"] = json!(g.case);
                out["order"] = json!(g.order);
            }
            print_json(&out)?;
            Ok(true)
        }
        LatticeCmd::Verify { q, coeffs, f_d } => {
            let f = FieldCtx::new(q)?;
            let c = elements(&f, &coeffs)?;
            let b = construct_basis(&f, &c)?;
            let r = verify_basis(&f, &c, &b);
            let mut ok = r.ok();
            let mut out = json!({
                "q": q,
                "coeffs": coeffs,
                "ok": r.ok(),
                "solution_vectors": r.solution_vectors,
                "module_equal": r.module_equal,
                "det_matches": r.det_matches,
                "det_abs": r.det_abs.to_string(),
                "expected_det": r.expected_det,
                "note": r.note,
            });
            if let Some(fd) = f_d {
                let i = intersect_divisible(&f, &b, fd)?;
                ok &= i.holds;
                out["intersection"] = json!({
                    "f_d": i.f_d,
                    "points_checked": i.points_checked,
                    "divisible_points": i.divisible_points,
                    "holds": i.holds,
                });
            }
            print_json(&out)?;
            Ok(ok)
        }
    }
}

/// Returns false when some n had no completed trial.
fn mc(cmd: McCmd) -> anyhow::Result<bool> {
    let (a, exp) = match cmd {
        McCmd::Fullrank(a) => (a, Experiment::Fullrank),
        McCmd::Rankformula(a) => (a, Experiment::Rankformula),
        McCmd::Nullity(a) => (a, Experiment::NullityTernary),
    };
    let mut cfg = load_experiment(&a.config, exp)?;
    if a.jobs.is_some() {
        cfg.jobs = a.jobs;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let csv = harness::run_experiment(&cfg)?;
    let out = a.out.or_else(|| cfg.out_path.as_ref().map(PathBuf::from));
    emit(&csv, out.as_deref())?;
    Ok(all_n_completed(&csv))
}

fn all_n_completed(csv: &str) -> bool {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let Some(header) = lines.next() else { return true };
    let Some(col) = header.split(',').position(|h| h == "completed") else { return true };
    lines.filter(|l| l.starts_with("aggregate,")).all(|l| l.split(',').nth(col).is_some_and(|c| c != "0"))
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::RetriesExhausted(_)) => 3,
        Some(Error::Io(_)) | None => 1,
        Some(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Threshold(c) => threshold(c).map(|_| true),
        Cmd::Phi(PhiCmd::Curve { config, points, out }) => (|| {
            let mut cfg = ExperimentConfig::new(load_spec(&config)?, Experiment::PhiCurve);
            cfg.points = points;
            emit(&harness::phi_curve(&cfg)?, out.as_deref())
        })()
        .map(|_| true),
        Cmd::Gen(a) => gen(a).map(|_| true),
        Cmd::Rank(a) => rank(a).map(|_| true),
        Cmd::Lattice(c) => lattice(c),
        Cmd::Mc(c) => mc(c).and_then(|ok| {
            if ok {
                Ok(true)
            } else {
                eprintln!("sparse-rank: no trial completed for some n (retries exhausted)");
                Err(Error::RetriesExhausted(0).into())
            }
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            if !matches!(e.downcast_ref::<Error>(), Some(Error::RetriesExhausted(0))) {
                eprintln!("sparse-rank: {e:#}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
