//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{
    check_bound_3y, check_bound_7, check_nondegeneracy, descriptor_lists, estimate_spectral_dimension,
    structured_eigs, verify_d1_eigs, verify_di_eigs, SampleBasis, SamplingConfig, SpectrumTarget, TrustChain,
    WindowPolicy,
};
use crate::dirac::{build_bundle, check_p_injectivity, DiracBundle};
use crate::error::{Error, Result};
use crate::linop::{eig_hermitian, Spectrum};
use crate::metrics::{
    q_grid, q_sweep, triple_basis, DistanceOptions, Geometry, LipschitzProblem, SphereFamily, State, StatePair,
};
use crate::models::{check_toeplitz_conditions, BuiltModel, ExtensionModel, ModelDescriptor, ModelKind, TripleModel};
use crate::report::{consolidate, ensure_writable, export_bundle, fmt_f64, to_json, write_artifact, write_text, RunMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Eigs,
    Relations,
    Smoothness,
    Bounds7,
    Bounds3y,
    Nondegeneracy,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Eigs => "eigs",
            Suite::Relations => "relations",
            Suite::Smoothness => "smoothness",
            Suite::Bounds7 => "bounds7",
            Suite::Bounds3y => "bounds3y",
            Suite::Nondegeneracy => "nondegeneracy",
        }
    }

    fn default_samples(self) -> usize {
        match self {
            Suite::Bounds7 => 200,
            Suite::Bounds3y => 100,
            _ => 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Quotient,
    D1,
    Di,
    D,
}

impl From<Target> for SpectrumTarget {
    fn from(t: Target) -> Self {
        match t {
            Target::Quotient => SpectrumTarget::Quotient,
            Target::D1 => SpectrumTarget::D1,
            Target::Di => SpectrumTarget::DI,
            Target::D => SpectrumTarget::D,
        }
    }
}

/// Which seminorm a distance is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum On {
    /// L on the extension, states through Π or π_σ.
    Extension,
    /// ‖[D_A, a]‖ on the quotient triple.
    Quotient,
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    serde_json::from_value(Value::String(s.to_string()))
        .map_err(|_| format!("unknown model '{s}' (expected suq2, podles, circle or two_point)"))
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "W")]
    pub w: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub degree_cap: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub fourier_degree: Option<usize>,
}

#[derive(Debug, Parser)]
#[command(name = "spectral-forge", version, about = "Spectral triples on Toeplitz-type extensions: spectra, checks and distances")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "SPECTRAL_FORGE_THREADS")]
    pub threads: Option<usize>,
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct a model and its Dirac bundle.
    Build {
        #[command(flatten)]
        model: ModelArgs,
        /// Also dump Δ_A, D1, D2, D3 as binary blocks under <out>/bundle.
        #[arg(long)]
        export: bool,
    },
    /// Eigenvalues of a Dirac operator.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "d")]
        target: Target,
        /// Closed-form eigenvalues (after a dense check on small instances).
        #[arg(long)]
        structured: bool,
    },
    /// Spectral dimension from the eigenvalue counting function.
    Dimension {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "d")]
        target: Target,
        #[arg(long, default_value_t = 0.1)]
        window_lo: f64,
        #[arg(long, default_value_t = 0.8)]
        window_hi: f64,
        #[arg(long, default_value_t = 32)]
        points: usize,
        /// Use dense eigenvalues instead of the closed forms.
        #[arg(long)]
        dense: bool,
    },
    /// Run a verification suite.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum)]
        suite: Suite,
        /// Truncation ladder for bounds3y.
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        ladder: Vec<usize>,
    },
    /// Connes distance lower bound between two states.
    Distance {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Two comma-separated state tokens: delta1, delta2, theta:<x>|theta:pi, pi:<k>, pisigma:<k>.
        #[arg(long)]
        pair: String,
        #[arg(long, value_enum, default_value = "extension")]
        on: On,
    },
    /// Distances for fixed state pairs over a q grid.
    SweepQ {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
        /// State pair, repeatable.
        #[arg(long = "pair")]
        pairs: Vec<String>,
    },
    /// Consolidate artifacts into a report.
    Report {
        /// Directory holding artifacts (defaults to --out).
        #[arg(long)]
        artifacts: Option<PathBuf>,
        /// Artifact names expected to be present.
        #[arg(long, value_delimiter = ',')]
        expect: Vec<String>,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileModel {
    model: Option<ModelKind>,
    q: Option<f64>,
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "W")]
    w: Option<usize>,
    lambda: Option<f64>,
    degree_cap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSolver {
    seed: Option<u64>,
    max_iter: Option<usize>,
    samples: Option<usize>,
    fourier_degree: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileOutput {
    dir: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    model: FileModel,
    #[serde(default)]
    solver: FileSolver,
    #[serde(default)]
    output: FileOutput,
    threads: Option<usize>,
}

/// Solver settings recorded in every payload.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub seed: u64,
    pub max_iter: usize,
    pub samples: Option<usize>,
    pub fourier_degree: usize,
}

/// Fully resolved settings: flags over config file over defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub model: ModelDescriptor,
    pub solver: SolverConfig,
    pub format: Format,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub threads: Option<usize>,
}

fn resolve(cli: &Cli, file: FileConfig) -> RunConfig {
    let empty_m = ModelArgs::default();
    let empty_s = SolverArgs::default();
    let (name, m, s) = match &cli.command {
        Command::Build { model, .. } => ("build", model, &empty_s),
        Command::Spectrum { model, .. } => ("spectrum", model, &empty_s),
        Command::Dimension { model, .. } => ("dimension", model, &empty_s),
        Command::Verify { model, solver, .. } => ("verify", model, solver),
        Command::Distance { model, solver, .. } => ("distance", model, solver),
        Command::SweepQ { model, solver, .. } => ("sweep-q", model, solver),
        Command::Report { .. } => ("report", &empty_m, &empty_s),
    };
    let d = ModelDescriptor::default();
    let fm = file.model;
    let model = ModelDescriptor {
        model: m.model.or(fm.model).unwrap_or(d.model),
        q: m.q.or(fm.q).unwrap_or(d.q),
        n: m.n.or(fm.n).unwrap_or(d.n),
        w: m.w.or(fm.w).unwrap_or(d.w),
        lambda: m.lambda.or(fm.lambda).unwrap_or(d.lambda),
        degree_cap: m.degree_cap.or(fm.degree_cap).unwrap_or(d.degree_cap),
    };
    let dopt = DistanceOptions::default();
    let fs = file.solver;
    let solver = SolverConfig {
        seed: s.seed.or(fs.seed).unwrap_or(0),
        max_iter: s.max_iter.or(fs.max_iter).unwrap_or(dopt.max_iter),
        samples: s.samples.or(fs.samples),
        fourier_degree: s.fourier_degree.or(fs.fourier_degree).unwrap_or(SamplingConfig::default().fourier_degree),
    };
    RunConfig {
        command: name.to_string(),
        model,
        solver,
        format: cli.format.or(file.output.format).unwrap_or(Format::Text),
        out: cli.out.clone().or(file.output.dir).unwrap_or_else(|| PathBuf::from(".")),
        threads: cli.threads.or(file.threads),
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Contract(format!("cannot read config {}: {e}", p.display())))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

#[derive(Serialize)]
struct Payload<'a, R: Serialize> {
    kind: &'a str,
    passed: bool,
    config: &'a RunConfig,
    result: R,
}

/// What a command produced: payload, console text and optional CSV.
struct Outcome {
    stem: String,
    kind: String,
    passed: bool,
    result: Value,
    text: String,
    csv: Option<String>,
}

fn spec_json(s: &Spectrum) -> Value {
    json!({
        "eigenvalues": s.eigenvalues(),
        "multiplicities": s.multiplicities(),
        "source_dim": s.source_dim(),
    })
}

fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("eigenvalue,multiplicity\n");
    for (v, m) in s.eigenvalues().iter().zip(s.multiplicities()) {
        out.push_str(&format!("{},{}\n", fmt_f64(*v), m));
    }
    out
}

fn extension(cfg: &RunConfig) -> Result<ExtensionModel> {
    cfg.model.build_extension()
}

fn sampling(cfg: &RunConfig) -> SamplingConfig {
    SamplingConfig { degree: cfg.model.degree_cap, fourier_degree: cfg.solver.fourier_degree }
}

fn distance_opts(cfg: &RunConfig) -> DistanceOptions {
    DistanceOptions { seed: cfg.solver.seed, max_iter: cfg.solver.max_iter, ..Default::default() }
}

fn cmd_build(cfg: &RunConfig, export: bool) -> Result<Outcome> {
    let (result, text, passed) = match cfg.model.build()? {
        BuiltModel::Triple(t) => {
            let eigs = t.dirac_eigs().clone();
            let text = format!("triple {} on dimension {}\n", t.name(), t.space().dim());
            (json!({ "triple": t.name(), "dim": t.space().dim(), "dirac": spec_json(&eigs) }), text, true)
        }
        BuiltModel::Extension(ext) => {
            let toeplitz = check_toeplitz_conditions(&ext)?;
            let bundle = build_bundle(*ext)?;
            let inj = check_p_injectivity(&bundle)?;
            let ext = bundle.source();
            let dims = json!({
                "H_A": ext.quotient().space().dim(),
                "H_B": ext.fiber().space().dim(),
                "H_AB": ext.total_space().dim(),
                "S2": bundle.s2().dim(),
                "D": 3 * bundle.s2().dim(),
            });
            if export {
                export_bundle(&bundle, &cfg.model, &cfg.out.join("bundle"))?;
            }
            let text = format!(
                "{} bundle: dim H_A = {}, dim H_AB = {}, dim D = {}, P-injective = {}\n",
                cfg.model.model.as_str(),
                ext.quotient().space().dim(),
                ext.total_space().dim(),
                3 * bundle.s2().dim(),
                inj.pass
            );
            (
                json!({
                    "dims": dims,
                    "toeplitz": serde_json::to_value(&toeplitz)?,
                    "p_injectivity": { "min_singular": inj.min_singular, "pass": inj.pass },
                    "exported": export,
                }),
                text,
                toeplitz.all_finite() && inj.pass,
            )
        }
    };
    Ok(Outcome { stem: "build".into(), kind: "build".into(), passed, result, text, csv: None })
}

/// Dense or closed-form spectrum for the descriptor.
fn target_spectrum(cfg: &RunConfig, target: Target, structured: bool) -> Result<(Spectrum, &'static str, bool)> {
    if structured {
        let (family, _, _) = descriptor_lists(&cfg.model)?;
        let mut chain = TrustChain::new();
        let cert = chain.certify(family)?;
        if !cert.pass {
            return Err(Error::Numerical(format!("dense check of {family:?} failed: {cert:?}")));
        }
        return Ok((structured_eigs(&chain, &cfg.model, target.into())?, "structured", true));
    }
    let spec = match cfg.model.build()? {
        BuiltModel::Triple(t) => t.dirac_eigs().clone(),
        BuiltModel::Extension(ext) => {
            let bundle = build_bundle(*ext)?;
            match target {
                Target::Quotient => eig_hermitian(bundle.delta_a())?,
                Target::D1 => eig_hermitian(bundle.d1())?,
                Target::Di => eig_hermitian(&bundle.di()?)?,
                Target::D => eig_hermitian(&bundle.d()?)?,
            }
        }
    };
    Ok((spec, "dense", true))
}

fn cmd_spectrum(cfg: &RunConfig, target: Target, structured: bool) -> Result<Outcome> {
    let (spec, method, passed) = target_spectrum(cfg, target, structured)?;
    let text = format!(
        "{} eigenvalues ({} distinct) of {:?}, max |ν| = {}\n",
        spec.source_dim(),
        spec.eigenvalues().len(),
        target,
        spec.max_abs()
    );
    let csv = Some(spectrum_csv(&spec));
    let result = json!({ "target": target, "method": method, "spectrum": spec_json(&spec) });
    Ok(Outcome { stem: "spectrum".into(), kind: "spectrum".into(), passed, result, text, csv })
}

fn cmd_dimension(cfg: &RunConfig, target: Target, lo: f64, hi: f64, points: usize, dense: bool) -> Result<Outcome> {
    let (spec, method, _) = target_spectrum(cfg, target, !dense)?;
    let est = estimate_spectral_dimension(&spec, &WindowPolicy { lo, hi, points })?;
    let table = est.loglog_table();
    let mut csv = String::from("log_r,log_n,fit\n");
    for r in &table {
        csv.push_str(&format!("{},{},{}\n", fmt_f64(r[0]), fmt_f64(r[1]), fmt_f64(r[2])));
    }
    let text = format!("slope = {:.6} ± {:.6} over {} grid points\n", est.slope, est.ci_halfwidth, est.count_points);
    let result = json!({
        "target": target,
        "method": method,
        "eigenvalue_count": spec.source_dim(),
        "estimate": serde_json::to_value(&est)?,
        "loglog": table,
    });
    Ok(Outcome { stem: "dimension".into(), kind: "dimension".into(), passed: true, result, text, csv: Some(csv) })
}

fn bundle_and_basis(cfg: &RunConfig) -> Result<(DiracBundle, SampleBasis)> {
    let ext = extension(cfg)?;
    let basis = SampleBasis::from_model(&ext, &sampling(cfg))?;
    Ok((build_bundle(ext)?, basis))
}

fn cmd_verify(cfg: &RunConfig, suite: Suite, ladder: &[usize]) -> Result<Outcome> {
    let samples = cfg.solver.samples.unwrap_or(suite.default_samples());
    let seed = cfg.solver.seed;
    let (passed, result, text) = match suite {
        Suite::Eigs => {
            let bundle = build_bundle(extension(cfg)?)?;
            let (lam, mu) = bundle.eigenvalue_lists();
            let d1 = verify_d1_eigs(&lam, &mu, &eig_hermitian(bundle.d1())?, 1e-9)?;
            let di = verify_di_eigs(&lam, &mu, &eig_hermitian(&bundle.di()?)?, 1e-9)?;
            let text = format!("D1 max_dev = {:e} ({}), DI max_dev = {:e} ({})\n", d1.max_dev, d1.pass, di.max_dev, di.pass);
            (d1.pass && di.pass, json!({ "tol": 1e-9, "d1": d1, "di": di }), text)
        }
        Suite::Relations => {
            let ext = extension(cfg)?;
            let res = ext.relation_residuals(1)?;
            let worst = res.iter().map(|r| r.residual).fold(0.0, f64::max);
            let violations: Vec<&str> = res.iter().filter(|r| !(r.residual <= 1e-12)).map(|r| r.name.as_str()).collect();
            let mut text = String::new();
            for r in &res {
                text.push_str(&format!("{}: {:e}\n", r.name, r.residual));
            }
            (violations.is_empty(), json!({ "tol": 1e-12, "margin": 1, "residuals": res, "max_residual": worst, "violations": violations }), text)
        }
        Suite::Smoothness => {
            let ext = extension(cfg)?;
            let report = check_toeplitz_conditions(&ext)?;
            let inj = check_p_injectivity(&build_bundle(ext)?)?;
            let mut text = String::new();
            for g in &report.generators {
                text.push_str(&format!(
                    "{}: |[P,a]| = {:e}, |[D^p,a]| = {:e}, |[D^q,a]| = {:e}\n",
                    g.generator, g.norm_p_comm, g.norm_dp_comm, g.norm_dq_comm
                ));
            }
            let ok = report.all_finite();
            (ok, json!({ "toeplitz": report, "p_injectivity": { "min_singular": inj.min_singular, "pass": inj.pass } }), text)
        }
        Suite::Bounds7 => {
            let (bundle, basis) = bundle_and_basis(cfg)?;
            let r = check_bound_7(&bundle, &basis, samples, seed)?;
            let mut text = String::new();
            for c in &r.checks {
                text.push_str(&format!("{} <= {}: max {:.12}\n", c.name, c.bound, c.max_value));
            }
            text.push_str(&format!("violations: {}\n", r.violations.len()));
            (r.passed(), serde_json::to_value(&r)?, text)
        }
        Suite::Bounds3y => {
            let (bundle, basis) = bundle_and_basis(cfg)?;
            let r = check_bound_3y(&bundle, &basis, samples, ladder, seed)?;
            let mut text = format!("|Y| = {:.12}\n", r.norm_y);
            for g in &r.rungs {
                text.push_str(&format!(
                    "n = {}: max |x_n| = {:.6e}, max |x - x_n| = {:.6e}, eps = {:.6e}\n",
                    g.n, g.max_norm_xn, g.max_tail, g.epsilon
                ));
            }
            text.push_str(&format!("violations: {}\n", r.violations.len()));
            (r.passed(), serde_json::to_value(&r)?, text)
        }
        Suite::Nondegeneracy => {
            let (bundle, basis) = bundle_and_basis(cfg)?;
            let r = check_nondegeneracy(&bundle, &basis, samples, seed)?;
            let text = format!(
                "L(I) = {}, min L = {:.6e}, max shift deviation = {:e}, violations: {}\n",
                r.l_identity,
                r.min_l,
                r.max_shift_dev,
                r.violations.len()
            );
            (r.passed(), serde_json::to_value(&r)?, text)
        }
    };
    let stem = format!("verify-{}", suite.name());
    Ok(Outcome { stem: stem.clone(), kind: stem, passed, result, text, csv: None })
}

fn parse_pair(pair: &str, ext: Option<&ExtensionModel>) -> Result<(State, State)> {
    let (a, b) = pair
        .split_once(',')
        .ok_or_else(|| Error::contract(format!("pair '{pair}' must be two comma-separated states")))?;
    Ok((State::parse(a, ext)?, State::parse(b, ext)?))
}

fn distance_on_triple(triple: &TripleModel, cfg: &RunConfig, pair: &str) -> Result<(Value, f64, bool)> {
    let (w1, w2) = parse_pair(pair, None)?;
    let named = triple_basis(triple, cfg.solver.fourier_degree)?;
    let basis: Vec<_> = named.iter().map(|p| p.1.clone()).collect();
    let problem = LipschitzProblem::new(Geometry::Triple { triple, basis: &basis })?;
    let r = problem.distance(&w1, &w2, &distance_opts(cfg))?;
    let ok = r.seminorm_at_witness <= 1.0 + 1e-9;
    let value = r.value;
    let names: Vec<&str> = named.iter().map(|p| p.0.as_str()).collect();
    Ok((json!({ "geometry": triple.name(), "pair": pair, "basis": names, "distance": r }), value, ok))
}

fn cmd_distance(cfg: &RunConfig, pair: &str, on: On) -> Result<Outcome> {
    let (result, value, passed) = match (cfg.model.build()?, on) {
        (BuiltModel::Triple(t), _) => distance_on_triple(&t, cfg, pair)?,
        (BuiltModel::Extension(ext), On::Quotient) => distance_on_triple(ext.quotient(), cfg, pair)?,
        (BuiltModel::Extension(ext), On::Extension) => {
            let (w1, w2) = parse_pair(pair, Some(&ext))?;
            let basis = SampleBasis::from_model(&ext, &sampling(cfg))?;
            let bundle = build_bundle(*ext)?;
            let problem = LipschitzProblem::new(Geometry::Bundle { bundle: &bundle, basis: basis.elements() })?;
            let r = problem.distance(&w1, &w2, &distance_opts(cfg))?;
            let ok = r.seminorm_at_witness <= 1.0 + 1e-9;
            let value = r.value;
            let span = json!({
                "degree": cfg.model.degree_cap,
                "fourier_degree": cfg.solver.fourier_degree,
                "size": basis.len(),
                "names": basis.names(),
            });
            (json!({ "geometry": "extension", "pair": pair, "span": span, "distance": r }), value, ok)
        }
    };
    let text = format!("{value:.9}\n");
    let d = &result["distance"];
    let csv = Some(format!(
        "pair,distance,seminorm_at_witness,iterations,converged\n\"{}\",{},{},{},{}\n",
        pair,
        fmt_f64(value),
        d["seminorm_at_witness"].as_f64().map(fmt_f64).unwrap_or_default(),
        d["iterations"],
        d["converged"]
    ));
    Ok(Outcome { stem: "distance".into(), kind: "distance".into(), passed, result, text, csv })
}

fn cmd_sweep_q(cfg: &RunConfig, from: f64, to: f64, step: f64, pairs: &[String]) -> Result<Outcome> {
    let m = &cfg.model;
    let family = match m.model {
        ModelKind::Podles => SphereFamily::Podles { n: m.n, lambda: m.lambda },
        ModelKind::Suq2 => SphereFamily::Suq2 { n: m.n, w: m.w, lambda: m.lambda },
        other => return Err(Error::contract(format!("sweep-q needs suq2 or podles, not {}", other.as_str()))),
    };
    let grid = q_grid(from, to, step)?;
    let probe = family.build(grid[0])?;
    let tokens: Vec<String> = if pairs.is_empty() { vec!["theta:0,theta:pi".to_string()] } else { pairs.to_vec() };
    let state_pairs = tokens
        .iter()
        .map(|t| {
            let (first, second) = parse_pair(t, Some(&probe))?;
            Ok(StatePair { id: t.clone(), first, second })
        })
        .collect::<Result<Vec<_>>>()?;
    let table = q_sweep(&family, &grid, &state_pairs, &sampling(cfg), &distance_opts(cfg))?;
    let failures = table.rows.iter().filter(|r| r.error.is_some()).count();
    let csv = table.to_csv();
    let text = csv.clone();
    let result = json!({ "family": family, "grid": grid, "rows": table.rows, "failures": failures });
    Ok(Outcome { stem: "sweep-q".into(), kind: "sweep-q".into(), passed: failures == 0, result, text, csv: Some(csv) })
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<Outcome> {
    match &cli.command {
        Command::Build { export, .. } => cmd_build(cfg, *export),
        Command::Spectrum { target, structured, .. } => cmd_spectrum(cfg, *target, *structured),
        Command::Dimension { target, window_lo, window_hi, points, dense, .. } => {
            cmd_dimension(cfg, *target, *window_lo, *window_hi, *points, *dense)
        }
        Command::Verify { suite, ladder, .. } => cmd_verify(cfg, *suite, ladder),
        Command::Distance { pair, on, .. } => cmd_distance(cfg, pair, *on),
        Command::SweepQ { from, to, step, pairs, .. } => cmd_sweep_q(cfg, *from, *to, *step, pairs),
        Command::Report { .. } => unreachable!("report is handled separately"),
    }
}

fn exit_for(e: &Error) -> i32 {
    if e.is_usage() || matches!(e, Error::Io(_)) {
        2
    } else {
        1
    }
}

/// Runs the CLI on `args` and returns the process exit code: 0 when every
/// check passed, 1 when a check failed, 2 on usage or configuration errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let file = match load_config(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cfg = resolve(&cli, file);
    if let Err(e) = ensure_writable(&cfg.out) {
        eprintln!("error: output directory {} is not writable: {e}", cfg.out.display());
        return 2;
    }
    let threads = cfg.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 2;
        }
    };
    pool.install(|| run_resolved(&cli, &cfg, pool.current_num_threads()))
}

fn run_resolved(cli: &Cli, cfg: &RunConfig, threads: usize) -> i32 {
    let start = Instant::now();
    if let Command::Report { artifacts, expect } = &cli.command {
        let dir = artifacts.clone().unwrap_or_else(|| cfg.out.clone());
        return match consolidate(&dir, expect) {
            Ok(index) => {
                match cfg.format {
                    Format::Json => print!("{}", to_json(&index).unwrap_or_default()),
                    _ => {
                        println!("{} sections, {} absent", index.sections.len(), index.absent.len());
                        for s in &index.absent {
                            println!("absent: {s}");
                        }
                    }
                }
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_for(&e)
            }
        };
    }
    let outcome = match execute(cli, cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    let payload = Payload { kind: &outcome.kind, passed: outcome.passed, config: cfg, result: &outcome.result };
    let meta = RunMeta::now(start.elapsed().as_secs_f64(), threads);
    if let Err(e) = write_artifact(&cfg.out, &outcome.stem, &payload, &meta) {
        eprintln!("error: {e}");
        return 2;
    }
    if let Some(csv) = &outcome.csv {
        if let Err(e) = write_text(&cfg.out, &format!("{}.csv", outcome.stem), csv) {
            eprintln!("error: {e}");
            return 2;
        }
    }
    match cfg.format {
        Format::Text => print!("{}", outcome.text),
        Format::Json => print!("{}", to_json(&payload).unwrap_or_default()),
        Format::Csv => print!("{}", outcome.csv.as_deref().unwrap_or(&outcome.text)),
    }
    if outcome.passed {
        0
    } else {
        1
    }
}
