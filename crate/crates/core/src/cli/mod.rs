//! Command-line front end.
//!
//! Exit codes: 0 passes (or probably passes, or a certificate verified),
//! 1 fails (or a certificate was rejected), 2 unknown, 3 input error.

pub mod family_file;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::certify::{parse_cover, replay, write_cover};
use crate::construct::{
    augment, lift_to_dims, random_family, search_min_observed, AugmentOptions, DimProfile, SearchOptions, SearchState,
};
use crate::error::{Error, Result};
use crate::frames::{centered_nodes, complement_property, vandermonde_frame};
use crate::linalg::exact::parse_rational;
use crate::projection::{decide, Certificate, DecideOptions, MarginOptions, ProjectionFamily, Tier, Verdict};

use family_file::{family_json, parse_family, read_family_file, write_family, Family};
use report::{certificate_json, margin_json, vector_certificate, verify_certificate, witness_json, Recheck, Report};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "prframes", version, about = "Check, certify and construct real phase-retrieval families")]
pub struct Cli {
    /// Worker threads, 0 = one per core.
    #[arg(long, global = true, env = "PRFRAMES_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TierArg {
    Falsify,
    Sample,
    Certify,
}

impl From<TierArg> for Tier {
    fn from(t: TierArg) -> Self {
        match t {
            TierArg::Falsify => Tier::Falsify,
            TierArg::Sample => Tier::Sample,
            TierArg::Certify => Tier::Certify,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Construction {
    Vandermonde,
    Random,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a family file does phase retrieval.
    Check {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "sample")]
        tier: TierArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sphere samples for the margin.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Local minimisations for the margin (default 8n).
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long, default_value_t = 1e-4)]
        margin_floor: f64,
        /// Random exact points tried by the falsify stage.
        #[arg(long, default_value_t = 10_000)]
        points: usize,
        #[arg(long, default_value_t = 20)]
        max_depth: usize,
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
        /// Print the JSON report instead of a summary.
        #[arg(long)]
        json: bool,
        /// Leave `timings_ms` out of the JSON report.
        #[arg(long)]
        no_timings: bool,
        /// Write a certified cover in the line-oriented replay format.
        #[arg(long, value_name = "PATH")]
        cover_out: Option<PathBuf>,
        /// Re-verify the certificate in this report (JSON) or cover file
        /// instead of deciding.
        #[arg(long, value_name = "PATH")]
        verify_certificate: Option<PathBuf>,
    },
    /// Write a family file.
    Generate {
        #[arg(long, value_enum)]
        construction: Construction,
        #[arg(short = 'n', long)]
        ambient: usize,
        /// Number of vectors or subspaces (lines when --dims is absent).
        #[arg(short = 'm', long)]
        count: Option<usize>,
        /// Subspace dimensions, comma separated (random only).
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Vandermonde nodes, comma separated rationals (default centred integers).
        #[arg(long, value_delimiter = ',')]
        nodes: Option<Vec<String>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Add dimensions to subspaces while keeping phase retrieval.
    Augment {
        path: PathBuf,
        /// Subspace to grow by one dimension (1-based).
        #[arg(long, conflicts_with = "target_dims")]
        index: Option<usize>,
        /// Grow every subspace to these dimensions.
        #[arg(long, value_delimiter = ',')]
        target_dims: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        max_attempts: usize,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Search for a family of given dimensions with a large margin.
    Search {
        #[arg(short = 'n', long)]
        ambient: usize,
        #[arg(short = 'm', long)]
        count: usize,
        /// Subspace dimensions, one value for all or one per subspace.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        chains: usize,
        /// Stop once the verified margin exceeds this.
        #[arg(long)]
        stop_at: Option<f64>,
        /// Print the margin every this many iterations.
        #[arg(long, default_value_t = 500)]
        every: usize,
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        /// Continue from the family stored in --checkpoint.
        #[arg(long, requires = "checkpoint")]
        resume: bool,
        /// Also write the best family as a family file.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Re-verify a cover certificate file against a family file.
    Replay { family: PathBuf, cover: PathBuf },
}

/// Parses arguments, runs, and returns the exit code.
pub fn run_from<I, T>(args: I, out: &mut (dyn std::io::Write + Send), err: &mut (dyn std::io::Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    run(cli, out, err)
}

pub fn run(cli: Cli, out: &mut (dyn std::io::Write + Send), err: &mut (dyn std::io::Write + Send)) -> i32 {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build();
    let result = match pool {
        Ok(pool) => pool.install(|| dispatch(cli.command, out)),
        Err(e) => Err(Error::Precondition(format!("thread pool: {e}"))),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn dispatch(cmd: Command, out: &mut (dyn std::io::Write + Send)) -> Result<i32> {
    match cmd {
        Command::Check {
            path,
            tier,
            seed,
            samples,
            starts,
            margin_floor,
            points,
            max_depth,
            budget,
            json,
            no_timings,
            cover_out,
            verify_certificate,
        } => {
            let family = read_family_file(&path)?;
            if let Some(cert) = verify_certificate {
                return cmd_verify(&family, &cert, out);
            }
            let opts = DecideOptions {
                seed,
                random_points: points,
                margin: MarginOptions { samples, starts, seed, ..Default::default() },
                margin_floor,
                certify: crate::certify::CertifyOptions { max_depth, budget },
                ..Default::default()
            };
            let (report, code, cover) = cmd_check(&family, tier.into(), &opts)?;
            if let (Some(p), Some(text)) = (cover_out, cover) {
                write_file(&p, &text)?;
            }
            emit(&report, json, !no_timings, out)?;
            Ok(code)
        }
        Command::Generate { construction, ambient, count, dims, nodes, seed, output } => {
            let family = cmd_generate(construction, ambient, count, dims, nodes, seed)?;
            let text = write_family(&family);
            match output {
                Some(p) => {
                    write_file(&p, &text)?;
                    writeln!(out, "wrote {} {} to {}", family_len(&family), family.kind(), p.display())?;
                }
                None => out.write_all(text.as_bytes())?,
            }
            Ok(EXIT_PASS)
        }
        Command::Augment { path, index, target_dims, seed, max_attempts, output, json } => {
            let Family::Subspaces(f) = read_family_file(&path)? else {
                return Err(Error::Precondition("augment needs a subspace family".into()));
            };
            let (family, report) = cmd_augment(&f, index, target_dims, seed, max_attempts)?;
            if let Some(p) = output {
                write_file(&p, &write_family(&Family::Subspaces(family)))?;
            }
            emit(&report, json, true, out)?;
            Ok(EXIT_PASS)
        }
        Command::Search {
            ambient,
            count,
            dims,
            iters,
            seed,
            chains,
            stop_at,
            every,
            checkpoint,
            resume,
            output,
            json,
        } => {
            let dims = match dims.as_slice() {
                [r] => vec![*r; count],
                d if d.len() == count => d.to_vec(),
                d => return Err(Error::InvalidProfile(format!("{} dims given for {count} subspaces", d.len()))),
            };
            let profile = DimProfile::new(ambient, dims)?;
            let mut opts =
                SearchOptions { iterations: iters, seed, chains, stop_at, record_every: every, ..Default::default() };
            if resume {
                let cp = read_checkpoint(checkpoint.as_deref().expect("clap requires it"))?;
                opts.start = Some(cp.0);
                opts.start_iteration = cp.1;
            }
            let t = Instant::now();
            // progress goes straight to stderr; chains report from worker threads
            let state = search_min_observed(&profile, &opts, |chain, it, v| {
                eprintln!("chain {} iter {it} margin {v:.6e}", chain + 1);
            })?;
            let elapsed = t.elapsed();
            if let Some(p) = &checkpoint {
                write_file(p, &(serde_json::to_string_pretty(&checkpoint_json(&state)).expect("json") + "\n"))?;
            }
            if let Some(p) = output {
                write_file(&p, &write_family(&Family::Subspaces(state.family.clone())))?;
            }
            let mut report = Report::new("search");
            report
                .set("seed", json!(seed))
                .set("profile", json!({ "ambient": ambient, "dims": profile.dims() }))
                .set("margin", json!(state.margin.value))
                .set("iteration", json!(state.iteration))
                .set("iterations_run", json!(state.iterations_run))
                .set("restarts", json!(state.restarts))
                .set("falsified", state.falsified.as_ref().map(witness_json).unwrap_or(Value::Null))
                .set("hypothesis", json!(state.hypothesis))
                .timing("search", elapsed);
            emit(&report, json, true, out)?;
            Ok(if state.succeeded(opts.margin_floor) { EXIT_PASS } else { EXIT_UNKNOWN })
        }
        Command::Replay { family, cover } => {
            let Family::Subspaces(f) = read_family_file(&family)? else {
                return Err(Error::Precondition("replay needs a subspace family".into()));
            };
            let text = std::fs::read_to_string(&cover).map_err(|e| Error::Io(format!("{}: {e}", cover.display())))?;
            match replay(&f, &parse_cover(&text)?) {
                Ok(r) => {
                    writeln!(out, "verified: {} boxes cover all {} faces", r.records, r.faces)?;
                    Ok(EXIT_PASS)
                }
                Err(Error::BadCertificate(m)) => {
                    writeln!(out, "rejected: {m}")?;
                    Ok(EXIT_FAIL)
                }
                Err(e) => Err(e),
            }
        }
    }
}

fn family_len(f: &Family) -> usize {
    match f {
        Family::Vectors(v) => v.len(),
        Family::Subspaces(s) => s.len(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn emit(report: &Report, json: bool, timings: bool, out: &mut (dyn std::io::Write + Send)) -> Result<()> {
    if json {
        out.write_all(report.to_json(timings).as_bytes())?;
    } else {
        out.write_all(summary(report).as_bytes())?;
    }
    Ok(())
}

/// Short human-readable rendering of a report.
fn summary(report: &Report) -> String {
    let v = report.to_value(true);
    let mut s = String::new();
    let obj = v.as_object().expect("report is an object");
    for (k, val) in obj {
        if matches!(k.as_str(), "tool" | "version") {
            continue;
        }
        let text = match val {
            Value::String(t) => t.clone(),
            Value::Object(o) if k == "certificate" => {
                let mut parts = vec![o.get("type").and_then(Value::as_str).unwrap_or("?").to_string()];
                for key in
                    ["subset", "x", "y", "span_dim", "subspaces", "value", "boxes", "max_depth", "remaining_boxes"]
                {
                    if let Some(x) = o.get(key).filter(|x| !x.is_null()) {
                        parts.push(format!("{key}={x}"));
                    }
                }
                if let Some(w) = o.get("witness") {
                    parts.push(format!("x={}", w["x"]));
                }
                parts.join(" ")
            }
            other => other.to_string(),
        };
        s.push_str(&format!("{k}: {text}\n"));
    }
    s
}

/// Runs a check and returns the report, the exit code and, for certified
/// passes, the cover in replay format.
pub fn cmd_check(family: &Family, tier: Tier, opts: &DecideOptions) -> Result<(Report, i32, Option<String>)> {
    let mut report = Report::new("check");
    report.set("kind", json!(family.kind())).set("ambient", json!(family.ambient_dim()));
    let t = Instant::now();
    match family {
        Family::Vectors(vf) => {
            let outcome = complement_property(vf)?;
            let cert = vector_certificate(vf, &outcome)?;
            report
                .set("vectors", json!(vf.len()))
                .set("verdict", json!(if outcome.passes() { "passes" } else { "fails" }))
                .set("certificate", cert)
                .timing("check", t.elapsed());
            Ok((report, if outcome.passes() { EXIT_PASS } else { EXIT_FAIL }, None))
        }
        Family::Subspaces(f) => {
            let d = decide(f, tier, opts)?;
            report.set("subspaces", json!(f.len())).set("dims", json!(f.dims())).set("seed", json!(opts.seed));
            report.decision(&d).timing("decide", t.elapsed());
            let cover = match &d.certificate {
                Certificate::Cover(c) => Some(write_cover(c)),
                _ => None,
            };
            let code = match d.verdict {
                Verdict::Fails => EXIT_FAIL,
                Verdict::Unknown => EXIT_UNKNOWN,
                _ => EXIT_PASS,
            };
            Ok((report, code, cover))
        }
    }
}

fn cmd_verify(family: &Family, cert_path: &Path, out: &mut (dyn std::io::Write + Send)) -> Result<i32> {
    let text = std::fs::read_to_string(cert_path).map_err(|e| Error::Io(format!("{}: {e}", cert_path.display())))?;
    let result = if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let cert = doc.get("certificate").unwrap_or(&doc);
        verify_certificate(family, cert)
    } else {
        let Family::Subspaces(f) = family else {
            return Err(Error::Precondition("cover files apply to subspace families".into()));
        };
        parse_cover(&text)
            .and_then(|c| replay(f, &c))
            .map(|r| Recheck::Proof(format!("{} boxes replayed over {} faces", r.records, r.faces)))
    };
    match result {
        Ok(Recheck::Proof(m)) => {
            writeln!(out, "verified: {m}")?;
            Ok(EXIT_PASS)
        }
        Ok(Recheck::Reproduced(m)) => {
            writeln!(out, "reproduced: {m}")?;
            Ok(EXIT_PASS)
        }
        Ok(Recheck::Nothing(m)) => {
            writeln!(out, "nothing to verify: {m}")?;
            Ok(EXIT_UNKNOWN)
        }
        Err(Error::BadCertificate(m)) => {
            writeln!(out, "rejected: {m}")?;
            Ok(EXIT_FAIL)
        }
        Err(e) => Err(e),
    }
}

pub fn cmd_generate(
    construction: Construction,
    n: usize,
    count: Option<usize>,
    dims: Option<Vec<usize>>,
    nodes: Option<Vec<String>>,
    seed: u64,
) -> Result<Family> {
    match construction {
        Construction::Vandermonde => {
            let nodes = match nodes {
                Some(list) => list
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        parse_rational(s).map_err(|m| Error::Parse { location: format!("--nodes[{i}]"), message: m })
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => centered_nodes(count.unwrap_or(2 * n - 1)),
            };
            if count.is_some_and(|m| m != nodes.len()) {
                return Err(Error::Precondition("-m does not match the number of nodes".into()));
            }
            Ok(Family::Vectors(vandermonde_frame(n, &nodes)?))
        }
        Construction::Random => {
            let dims = match (dims, count) {
                (Some(d), Some(m)) if d.len() == 1 => vec![d[0]; m],
                (Some(d), Some(m)) if d.len() != m => {
                    return Err(Error::InvalidProfile(format!("{} dims given for {m} subspaces", d.len())));
                }
                (Some(d), _) => d,
                (None, Some(m)) => vec![1; m],
                (None, None) => vec![1; 2 * n - 1],
            };
            Ok(Family::Subspaces(random_family(&DimProfile::new(n, dims)?, seed)))
        }
    }
}

pub fn cmd_augment(
    f: &ProjectionFamily,
    index: Option<usize>,
    target_dims: Option<Vec<usize>>,
    seed: u64,
    max_attempts: usize,
) -> Result<(ProjectionFamily, Report)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = AugmentOptions { max_attempts, decide: DecideOptions { seed, ..Default::default() } };
    let t = Instant::now();
    let mut report = Report::new("augment");
    report.set("seed", json!(seed)).set("input_dims", json!(f.dims()));
    let family = match (index, target_dims) {
        (Some(i), None) => {
            if i == 0 || i > f.len() {
                return Err(Error::Precondition(format!("--index {i} outside 1..={}", f.len())));
            }
            let aug = augment(f, i - 1, &mut rng, &opts)?;
            report
                .set("steps", json!([{ "index": i, "attempts": aug.attempts }]))
                .set("verdict", json!(aug.decision.verdict))
                .set("certificate", certificate_json(&aug.decision.certificate));
            aug.family
        }
        (None, Some(dims)) => {
            let lift = lift_to_dims(f, &DimProfile::new(f.ambient_dim(), dims)?, &mut rng, &opts)?;
            let steps: Vec<Value> = lift
                .steps
                .iter()
                .map(|s| json!({ "index": s.index + 1, "new_dim": s.new_dim, "attempts": s.attempts, "margin": s.margin }))
                .collect();
            let last = lift.steps.last().and_then(|s| s.margin);
            report
                .set("steps", json!(steps))
                .set("verdict", json!(if lift.steps.is_empty() { "unchanged" } else { "probably_passes" }))
                .set("margin", json!(last));
            lift.family
        }
        _ => return Err(Error::Precondition("give exactly one of --index or --target-dims".into())),
    };
    report.set("output_dims", json!(family.dims())).timing("augment", t.elapsed());
    Ok((family, report))
}

/// Search checkpoint document.
pub fn checkpoint_json(state: &SearchState) -> Value {
    json!({
        "format": "prframes-search-checkpoint",
        "version": 1,
        "seed": state.seed,
        "iteration": state.iteration,
        "iterations_run": state.iterations_run,
        "chain": state.chain + 1,
        "restarts": state.restarts,
        "margin": margin_json(&state.margin),
        "trajectory": state.trajectory,
        "falsified": state.falsified.as_ref().map(witness_json),
        "hypothesis": state.hypothesis,
        "family": family_json(&Family::Subspaces(state.family.clone())),
    })
}

/// Family and iteration stored in a checkpoint.
pub fn read_checkpoint(path: &Path) -> Result<(ProjectionFamily, usize)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let perr = |m: &str| Error::Parse { location: m.into(), message: "missing or invalid".into() };
    let family = doc.get("family").ok_or_else(|| perr("family"))?;
    let Family::Subspaces(f) = parse_family(&family.to_string())? else {
        return Err(perr("family"));
    };
    let it = doc.get("iteration").and_then(Value::as_u64).ok_or_else(|| perr("iteration"))? as usize;
    Ok((f, it))
}
