mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;
use serde_json::json;

use tpoint_core::braids::{
    burau_alexander, closure_components, closure_diagram, genus_positive, permutation, BraidWord,
};
use tpoint_core::classify::{classify_knot, default_view};
use tpoint_core::dynamics::{integrate, DynamicsError, ParamSet, State3, Tolerances};
use tpoint_core::heteroclinic::{
    find_tpoint, select_matching, trace_heteroclinic_knot, HeteroclinicError, SearchConfig,
};
use tpoint_core::knots::{
    alexander, identify_polynomial, is_prime_diagram, project, reduce_nugatory, screen_basis, seifert_genus, to_svg,
};
use tpoint_core::plmodel::{figure8_model, lorenz_model, model_template_correspondence, sheared_test_map, PLMap};
use tpoint_core::suite::run_suite;
use tpoint_core::templates::{
    enumerate_words, figure8_template, figure8_twisted_template, knot_reports, lorenz_template, reports_csv,
    TemplateSpec,
};

use output::{emit, fmt17, to_json};

/// Lorenz T-points, their heteroclinic knots, and the figure-eight template.
#[derive(Parser, Debug)]
#[command(name = "tpoint-knots", version, about)]
struct Cli {
    /// Run every acceptance check and print a pass/fail table.
    #[arg(long)]
    paper_suite: bool,

    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Cap on worker threads.
    #[arg(long, global = true, env = "TPOINT_THREADS")]
    threads: Option<usize>,

    /// Emit JSON where a command also has a text or CSV form.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one trajectory and write it as CSV.
    Simulate(SimulateArgs),
    /// Locate a T-point from a seed in the (r, σ) plane.
    Tpoint(TpointArgs),
    /// Build the heteroclinic knot at a T-point and identify it.
    Classify(ClassifyArgs),
    /// Words, braids and knot reports on a template.
    Template {
        #[command(subcommand)]
        action: TemplateAction,
    },
    /// The piecewise-linear return map.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Invariants of a single braid closure.
    Braid(BraidArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct Params {
    #[arg(long, default_value_t = 10.0)]
    sigma: f64,
    #[arg(long, default_value_t = 28.0)]
    r: f64,
    #[arg(long, default_value_t = 8.0 / 3.0)]
    beta: f64,
}

impl Params {
    fn build(&self) -> Result<ParamSet, Failure> {
        ParamSet::new(self.sigma, self.r, self.beta).map_err(|e| Failure::usage(e.to_string()))
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    params: Params,
    /// Initial state.
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], default_values_t = [1.0, 1.0, 1.0], allow_negative_numbers = true)]
    state: Vec<f64>,
    /// Final time.
    #[arg(long, default_value_t = 50.0)]
    t: f64,
    /// Output spacing.
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Also draw the trajectory seen face-on in the plane x = y.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = 8.0 / 3.0)]
    beta: f64,
    /// Radius of the matching sphere around the target wing center.
    #[arg(long)]
    radius: Option<f64>,
    /// Gap below which a point counts as a T-point.
    #[arg(long)]
    gap_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        let mut c = SearchConfig::default();
        if let Some(v) = self.radius {
            c.radius = v;
        }
        if let Some(v) = self.gap_tol {
            c.gap_tol = v;
        }
        if let Some(v) = self.max_iter {
            c.max_iter = v;
        }
        c
    }
}

#[derive(Args, Debug)]
struct TpointArgs {
    /// Seed value of r.
    #[arg(long, default_value_t = 85.0)]
    seed_r: f64,
    /// Seed value of σ.
    #[arg(long, default_value_t = 11.8)]
    seed_sigma: f64,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long, default_value_t = 85.0292)]
    r: f64,
    #[arg(long, default_value_t = 11.8279)]
    sigma: f64,
    /// Treat (r, σ) as a seed and refine it to a T-point first.
    #[arg(long)]
    search: bool,
    /// Number of projection directions fanned around the x = y view.
    #[arg(long, default_value_t = 10)]
    directions: usize,
    /// Angular spread of the fan in radians.
    #[arg(long, default_value_t = 0.35)]
    spread: f64,
    /// Seed for the direction fan.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Write the closed curve as CSV.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Write the knot diagram seen face-on in the plane x = y.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    search_args: SearchArgs,
}

#[derive(Args, Debug, Clone)]
struct TemplateArgs {
    /// lorenz, fig8, fig8-twisted, or a path to a template JSON file.
    #[arg(long, default_value = "fig8")]
    template: String,
    #[arg(long, default_value_t = 8)]
    max_len: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum TemplateAction {
    /// List primitive admissible words.
    Enumerate(TemplateArgs),
    /// Knot report for every word.
    Report(TemplateArgs),
    /// Check that every knot is positive, prime and fibered.
    Verify(TemplateArgs),
    /// Print the template definition as JSON.
    Spec(TemplateArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ModelName {
    Fig8,
    Lorenz,
    /// A deliberately non-hyperbolic map for the cone check.
    Sheared,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelName::Fig8)]
    model: ModelName,
    #[arg(long, default_value_t = 8)]
    max_len: usize,
}

#[derive(Subcommand, Debug)]
enum ModelAction {
    /// Exact periodic points of every primitive word.
    Orbits(ModelArgs),
    /// Exact cone-field hyperbolicity test.
    ConeCheck(ModelArgs),
    /// Compare the model's words with its template.
    Correspond(ModelArgs),
}

#[derive(Args, Debug)]
struct BraidArgs {
    /// Letters such as "s1 s2 -s1".
    word: String,
    /// Number of strands; inferred from the word when omitted.
    #[arg(long)]
    strands: Option<usize>,
}

/// An error with the exit code it should produce and an optional JSON body.
struct Failure {
    code: u8,
    message: String,
    diagnostic: Option<serde_json::Value>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into(), diagnostic: None }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into(), diagnostic: None }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

fn heteroclinic_failure(e: HeteroclinicError) -> Failure {
    let kind = match &e {
        HeteroclinicError::Precondition(_) => "precondition",
        HeteroclinicError::GapTooLarge { .. } => "gap-too-large",
        HeteroclinicError::NoConvergence { .. } => "no-convergence",
        HeteroclinicError::Timeout { .. } => "timeout",
        HeteroclinicError::SelfIntersecting { .. } => "self-intersecting",
        HeteroclinicError::Dynamics(_) => "integration",
    };
    let code = match &e {
        HeteroclinicError::Precondition(_)
        | HeteroclinicError::GapTooLarge { .. }
        | HeteroclinicError::NoConvergence { .. }
        | HeteroclinicError::Dynamics(DynamicsError::InvalidParams { .. }) => 2,
        _ => 1,
    };
    let mut diag = json!({ "error": kind, "message": e.to_string() });
    match &e {
        HeteroclinicError::NoConvergence { iterations, gap_norm, .. } => {
            diag["iterations"] = json!(iterations);
            diag["gap_norm"] = json!(gap_norm);
        }
        HeteroclinicError::GapTooLarge { gap_norm, limit } => {
            diag["gap_norm"] = json!(gap_norm);
            diag["limit"] = json!(limit);
        }
        _ => {}
    }
    Failure { code, message: e.to_string(), diagnostic: Some(diag) }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let result = match (&cli.command, cli.paper_suite) {
        (_, true) => paper_suite(&cli),
        (Some(cmd), false) => run(&cli, cmd),
        (None, false) => Err(Failure::usage("no command given; see --help")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(d) = &f.diagnostic {
                print!("{}", to_json(d));
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli, cmd: &Command) -> Result<(), Failure> {
    let out = cli.out.as_deref();
    match cmd {
        Command::Simulate(a) => simulate(a, out),
        Command::Tpoint(a) => tpoint(a, out),
        Command::Classify(a) => classify(a, out),
        Command::Template { action } => template(action, out),
        Command::Model { action } => model(action, out),
        Command::Braid(a) => braid(a, out),
    }
}

fn paper_suite(cli: &Cli) -> Result<(), Failure> {
    let results = run_suite(|r| {
        if !cli.json {
            println!("{}", r.line());
        }
    });
    let failed = results.iter().filter(|r| !r.pass).count();
    if cli.json {
        emit(cli.out.as_deref(), &to_json(&results))?;
    } else if let Some(p) = &cli.out {
        let table: String = results.iter().map(|r| r.line() + "\n").collect();
        emit(Some(p), &table)?;
    }
    if failed > 0 {
        return Err(Failure::numeric(format!("{failed} of {} criteria failed", results.len())));
    }
    Ok(())
}

fn simulate(a: &SimulateArgs, out: Option<&Path>) -> Result<(), Failure> {
    let p = a.params.build()?;
    if !(a.t >= 0.0 && a.dt > 0.0) {
        return Err(Failure::usage("--t must be nonnegative and --dt positive"));
    }
    let s0 = State3::new(a.state[0], a.state[1], a.state[2]);
    let traj = integrate(s0, &p, a.t, &Tolerances::sweep(), &[]).map_err(|e| Failure::numeric(e.to_string()))?;
    let n = (a.t / a.dt).round() as usize;
    let mut csv = String::from("t,x,y,z\n");
    let mut pts = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = (k as f64 * a.dt).min(a.t);
        let s = traj.at(t);
        let _ = writeln!(csv, "{},{},{},{}", fmt17(t), fmt17(s.x), fmt17(s.y), fmt17(s.z));
        pts.push(s);
    }
    emit(out, &csv)?;
    if let Some(path) = &a.svg {
        std::fs::write(path, trajectory_svg(&pts))?;
    }
    Ok(())
}

fn trajectory_svg(pts: &[State3]) -> String {
    let (e1, e2) = screen_basis(&default_view().normalize());
    let flat: Vec<(f64, f64)> = pts.iter().map(|s| (s.dot(&e1), s.dot(&e2))).collect();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in &flat {
        (x0, y0, x1, y1) = (x0.min(x), y0.min(y), x1.max(x), y1.max(y));
    }
    let size = 800.0;
    let scale = (size - 40.0) / (x1 - x0).max(y1 - y0).max(1e-12);
    let mut path = String::new();
    for (k, &(x, y)) in flat.iter().enumerate() {
        let _ = write!(
            path,
            "{}{:.3},{:.3} ",
            if k == 0 { "M" } else { "L" },
            20.0 + (x - x0) * scale,
            size - 20.0 - (y - y0) * scale
        );
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"0.5\"/>\n</svg>\n",
        path.trim_end()
    )
}

fn tpoint(a: &TpointArgs, out: Option<&Path>) -> Result<(), Failure> {
    let cfg = a.search.config();
    let tp = find_tpoint((a.seed_r, a.seed_sigma), a.search.beta, &cfg).map_err(|e| {
        let mut f = heteroclinic_failure(e);
        if let Some(d) = f.diagnostic.as_mut() {
            d["seed"] = json!({ "r": a.seed_r, "sigma": a.seed_sigma, "beta": a.search.beta });
        }
        f
    })?;
    #[derive(Serialize)]
    struct Out {
        r: f64,
        sigma: f64,
        beta: f64,
        gap_norm: f64,
        iterations: usize,
    }
    let o = Out { r: tp.r, sigma: tp.sigma, beta: tp.beta, gap_norm: tp.gap_norm, iterations: tp.iterations };
    emit(out, &to_json(&o))?;
    Ok(())
}

fn classify(a: &ClassifyArgs, out: Option<&Path>) -> Result<(), Failure> {
    let cfg = a.search_args.config();
    let beta = a.search_args.beta;
    let (params, matching) = if a.search {
        let tp = find_tpoint((a.r, a.sigma), beta, &cfg).map_err(heteroclinic_failure)?;
        (tp.params(), tp.matching)
    } else {
        let p = ParamSet::new(a.sigma, a.r, beta).map_err(|e| Failure::usage(e.to_string()))?;
        let m = select_matching(&p, &cfg).map_err(heteroclinic_failure)?;
        (p, m)
    };
    let knot = trace_heteroclinic_knot(&params, &matching, &cfg).map_err(heteroclinic_failure)?;
    let report = classify_knot(&knot, default_view(), a.directions, a.spread, a.seed)
        .map_err(|e| Failure::numeric(e.to_string()))?;
    if let Some(p) = &a.curve {
        std::fs::write(p, knot.curve.to_csv())?;
    }
    if let Some(p) = &a.svg {
        let d = project(&knot.curve, default_view()).map_err(|e| Failure::numeric(e.to_string()))?;
        std::fs::write(p, to_svg(&d))?;
    }
    emit(out, &to_json(&report))?;
    if !report.stable {
        return Err(Failure::numeric("projection directions disagree on the Alexander polynomial"));
    }
    Ok(())
}

fn load_template(name: &str) -> Result<TemplateSpec, Failure> {
    match name {
        "lorenz" => Ok(lorenz_template()),
        "fig8" => Ok(figure8_template()),
        "fig8-twisted" => Ok(figure8_twisted_template()),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{path}: {e}")))?;
            TemplateSpec::from_json(&text).map_err(|e| Failure::usage(format!("{path}: {e}")))
        }
    }
}

fn template(action: &TemplateAction, out: Option<&Path>) -> Result<(), Failure> {
    let (TemplateAction::Enumerate(a)
    | TemplateAction::Report(a)
    | TemplateAction::Verify(a)
    | TemplateAction::Spec(a)) = action;
    let t = load_template(&a.template)?;
    if let TemplateAction::Spec(_) = action {
        emit(out, &(t.to_json() + "\n"))?;
        return Ok(());
    }
    let words = enumerate_words(&t, a.max_len);
    let spelled: Vec<String> = words.iter().map(|w| t.spell(w)).collect();
    if let TemplateAction::Enumerate(_) = action {
        let text = match a.format {
            Format::Json => to_json(&json!({
                "template": t.name,
                "max_len": a.max_len,
                "count": spelled.len(),
                "words": spelled,
            })),
            Format::Csv => std::iter::once("word,length".to_string())
                .chain(spelled.iter().map(|w| format!("{w},{}", w.len())))
                .map(|l| l + "\n")
                .collect(),
        };
        emit(out, &text)?;
        return Ok(());
    }
    let reports = knot_reports(&t, &words).map_err(|e| Failure::numeric(e.to_string()))?;
    if let TemplateAction::Report(_) = action {
        let text = match a.format {
            Format::Json => to_json(&reports),
            Format::Csv => reports_csv(&reports),
        };
        emit(out, &text)?;
        return Ok(());
    }
    let knots: Vec<_> = reports.iter().filter(|r| r.mu == 1).collect();
    let failures: Vec<&str> =
        knots.iter().filter(|r| !(r.positive && r.prime && r.fibered)).map(|r| r.word.as_str()).collect();
    let genus_mismatch: Vec<&str> = knots
        .iter()
        .filter(|r| genus_positive(r.c, r.n, r.mu).ok() != Some(r.seifert_genus))
        .map(|r| r.word.as_str())
        .collect();
    let pass = failures.is_empty() && genus_mismatch.is_empty();
    emit(
        out,
        &to_json(&json!({
            "template": t.name,
            "max_len": a.max_len,
            "words": reports.len(),
            "knots": knots.len(),
            "all_positive": knots.iter().all(|r| r.positive),
            "all_prime": knots.iter().all(|r| r.prime),
            "all_fibered": knots.iter().all(|r| r.fibered),
            "genus_agrees": genus_mismatch.is_empty(),
            "failures": failures,
            "genus_mismatches": genus_mismatch,
            "pass": pass,
        })),
    )?;
    if !pass {
        return Err(Failure::numeric(format!("{} words fail the check", failures.len() + genus_mismatch.len())));
    }
    Ok(())
}

fn model_pair(name: ModelName) -> (PLMap, Option<TemplateSpec>) {
    match name {
        ModelName::Fig8 => (figure8_model(), Some(figure8_template())),
        ModelName::Lorenz => (lorenz_model(), Some(lorenz_template())),
        ModelName::Sheared => (sheared_test_map(), None),
    }
}

fn model(action: &ModelAction, out: Option<&Path>) -> Result<(), Failure> {
    match action {
        ModelAction::Orbits(a) => {
            let (m, t) = model_pair(a.model);
            let t = t.ok_or_else(|| Failure::usage("the sheared map has no template"))?;
            let reports = m.orbit_reports(a.max_len).map_err(|e| Failure::numeric(e.to_string()))?;
            let mut counts = Vec::new();
            let mut counts_ok = true;
            for n in 1..=a.max_len {
                let points = m.periodic_points(n).map_err(|e| Failure::numeric(e.to_string()))?.len();
                let trace = t.trace_power(n);
                counts_ok &= BigUint::from(points) == trace;
                counts.push(json!({ "n": n, "points": points, "trace": trace.to_string() }));
            }
            let round_trip = reports.iter().all(|r| r.round_trip);
            let symmetric = reports.iter().all(|r| r.symmetric);
            emit(
                out,
                &to_json(&json!({
                    "model": m.name,
                    "layout": m.layout,
                    "lambda": m.lambda,
                    "counts": counts,
                    "counts_match_traces": counts_ok,
                    "all_round_trip": round_trip,
                    "all_symmetric": symmetric,
                    "orbits": reports,
                })),
            )?;
            if !(counts_ok && round_trip) {
                return Err(Failure::numeric("periodic orbit checks failed"));
            }
            Ok(())
        }
        ModelAction::ConeCheck(a) => {
            let (m, _) = model_pair(a.model);
            let r = m.cone_report();
            emit(out, &to_json(&json!({ "model": m.name, "layout": m.layout, "cone": r })))?;
            if !r.pass {
                return Err(Failure::numeric("cone check failed"));
            }
            Ok(())
        }
        ModelAction::Correspond(a) => {
            let (m, t) = model_pair(a.model);
            let t = t.ok_or_else(|| Failure::usage("the sheared map has no template"))?;
            let pass = model_template_correspondence(&m, &t, a.max_len).map_err(|e| Failure::numeric(e.to_string()))?;
            emit(out, &to_json(&json!({ "model": m.name, "template": t.name, "max_len": a.max_len, "pass": pass })))?;
            if !pass {
                return Err(Failure::numeric("model and template carry different words"));
            }
            Ok(())
        }
    }
}

fn braid(a: &BraidArgs, out: Option<&Path>) -> Result<(), Failure> {
    let b: BraidWord = match a.strands {
        Some(n) => BraidWord::parse(&a.word, n),
        None => a.word.parse(),
    }
    .map_err(|e| Failure::usage(e.to_string()))?;
    let mu = closure_components(&b);
    let d = closure_diagram(&b);
    let mut report = json!({
        "braid": b.to_string(),
        "n": b.n,
        "c": b.len(),
        "mu": mu,
        "positive": b.is_positive(),
        "permutation": permutation(&b),
    });
    if mu == 1 {
        let burau = burau_alexander(&b).map_err(|e| Failure::numeric(e.to_string()))?;
        let diagram = alexander(&d).map_err(|e| Failure::numeric(e.to_string()))?;
        report["alexander"] = json!(burau);
        report["diagram_alexander"] = json!(diagram);
        report["identification"] = json!(identify_polynomial(&burau));
        report["seifert_genus"] = json!(seifert_genus(&d));
        report["prime_diagram"] = json!(is_prime_diagram(&reduce_nugatory(&d)));
        if b.is_positive() {
            report["genus_formula"] = json!(genus_positive(b.len(), b.n, mu).ok());
        }
    }
    emit(out, &to_json(&report))?;
    Ok(())
}
