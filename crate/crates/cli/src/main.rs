//! `polab` command-line front end.

mod spec;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polab::channels::{apply, coherent_probes, induced_mueller, single_photon_probes};
use polab::estimation::{
    qfim_sweep, rotation_frame, scenario_diattenuation_qfim, scenario_loss_qfi, scenario_phase_loss_qfim,
    scenario_phase_qfi, QFIMResult, RotationParametrization,
};
use polab::experiments::{run_experiment, ExperimentReport, Table};
use polab::fock::analysis::uncertainty_report;
use polab::fock::majorana::majorana_stars;
use polab::fock::operators::Mode;
use polab::fock::{dop, moments, stokes_vector, FockState};
use polab::gadget::{
    estimate_stokes, simulate_gadget, waveplate_angles, GadgetConfig, GadgetSetting, StokesComponent,
};
use polab::io::{self, Document};
use polab::mueller::{
    jones_boost, jones_diattenuation, jones_rotation, lu_chipman_decompose, mueller_from_jones, validate_mueller,
    JonesMatrix, MuellerMatrix,
};
use polab::parallel::Execution;
use polab::stokes::{decompose_polarized_unpolarized, degree_of_polarization, validate_stokes_tol, StokesVector};
use serde_json::{json, Value};

use spec::{parse_channel, parse_floats, parse_state, parse_sweep, unit_axis, Defaults};

#[derive(Parser)]
#[command(name = "polab", version, about = "Classical and quantum polarimetry toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Input JSON document.
    #[arg(short, long, global = true)]
    input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Photon-number truncation for constructed states.
    #[arg(long, global = true)]
    n_max: Option<usize>,
    /// Truncation leakage threshold and validation tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Degree of polarization, validity and polarized/unpolarized split of a Stokes vector.
    Stokes {
        /// s0,s1,s2,s3 (instead of --input).
        #[arg(long, allow_hyphen_values = true)]
        s: Option<String>,
    },
    #[command(subcommand)]
    Mueller(MuellerCmd),
    #[command(subcommand)]
    State(StateCmd),
    #[command(subcommand)]
    Channel(ChannelCmd),
    #[command(subcommand)]
    Qfim(QfimCmd),
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Run a named experiment: subset-trace, anisotropy, decompositions, higher-order, attenuated-isotropic.
    Experiment {
        name: String,
        /// key=value overrides, comma separated.
        #[arg(long)]
        params: Option<String>,
    },
}

#[derive(Args)]
struct MuellerInput {
    /// 16 comma-separated entries in row-major order (instead of --input).
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,
}

#[derive(Subcommand)]
enum MuellerCmd {
    /// Trace bound, transmittance and Cloude checks.
    Validate(MuellerInput),
    /// Rotation · diattenuation · depolarizer factorization.
    Decompose(MuellerInput),
    /// Mueller matrix of a Jones matrix read from --input or built from flags.
    FromJones {
        /// theta,nx,ny,nz
        #[arg(long, allow_hyphen_values = true)]
        rotation: Option<String>,
        /// eta,nx,ny,nz
        #[arg(long, allow_hyphen_values = true)]
        boost: Option<String>,
        /// q,r,nx,ny,nz
        #[arg(long, allow_hyphen_values = true)]
        diattenuation: Option<String>,
    },
}

#[derive(Args)]
struct StateInput {
    /// State spec such as noon:n=4 (instead of --input).
    #[arg(long)]
    state: Option<String>,
}

#[derive(Subcommand)]
enum StateCmd {
    /// Build a state from a spec, e.g. coherent:alpha=2,theta=1.57.
    Make { spec: String },
    /// Stokes moments, purity and uncertainty margins.
    Info(StateInput),
    /// Majorana constellation of a single-layer pure state.
    Stars(StateInput),
}

#[derive(Args)]
struct ChannelArgs {
    /// Channel spec such as attenuation:q=0.9,mode=a, or a kraus_channel JSON file.
    #[arg(long)]
    channel: String,
}

#[derive(Subcommand)]
enum ChannelCmd {
    /// Apply a channel to the input state.
    Apply {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        state: StateInput,
    },
    /// Least-squares Mueller matrix induced by a channel.
    Mueller {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Probe with SU(2)-coherent states of this many photons instead of single photons.
        #[arg(long)]
        photons: Option<usize>,
        #[arg(long, default_value_t = 12)]
        probes: usize,
    },
}

#[derive(Args)]
struct QfimCommon {
    #[command(flatten)]
    state: StateInput,
    /// Sweep one parameter, e.g. q=0.1:0.9:9 (start:stop:count).
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Subcommand)]
enum QfimCmd {
    /// Phase imprinted by exp(-iθS3).
    Phase(QfimCommon),
    /// Survival probability of loss on one mode.
    Loss {
        #[command(flatten)]
        common: QfimCommon,
        #[arg(long, default_value_t = 0.9)]
        q: f64,
        #[arg(long, default_value = "a")]
        mode: String,
    },
    /// (q, r) of a diattenuation along e3.
    Diattenuation {
        #[command(flatten)]
        common: QfimCommon,
        #[arg(long, default_value_t = 0.9)]
        q: f64,
        #[arg(long, default_value_t = 0.8)]
        r: f64,
    },
    /// Rotation sensing: generator, covariance and Tr C⁻¹.
    Rotation {
        #[command(flatten)]
        state: StateInput,
        #[arg(long, value_enum, default_value_t = Param::AxisAngle)]
        param: Param,
        /// Three parameter values at which to evaluate.
        #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
        at: String,
    },
    /// Rotation about e3 followed by loss on mode a.
    PhaseLoss {
        #[command(flatten)]
        common: QfimCommon,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = 0.9)]
        q: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    AxisAngle,
    Euler,
}

#[derive(Subcommand)]
enum SimulateCmd {
    /// Photon-counting polarimeter: rotation, beam splitter and two detectors.
    Gadget {
        #[command(flatten)]
        state: StateInput,
        /// S1, S2 or S3.
        #[arg(long, conflicts_with = "rotation")]
        component: Option<String>,
        /// theta,nx,ny,nz
        #[arg(long, allow_hyphen_values = true)]
        rotation: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        shots: usize,
        /// Run all three settings and report Stokes estimates with standard errors.
        #[arg(long)]
        estimate: bool,
    },
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Input(String),
    Physical(String),
}

impl From<polab::Error> for Failure {
    fn from(e: polab::Error) -> Self {
        let bad_argument = matches!(
            e,
            polab::Error::OutOfRange { .. } | polab::Error::NonUnitAxis(_) | polab::Error::Truncation { .. }
        );
        if e.is_input_error() || bad_argument {
            Failure::Input(e.to_string())
        } else {
            Failure::Physical(e.to_string())
        }
    }
}

type Outcome = Result<Output, Failure>;

/// What a command produced and whether its physical checks passed.
struct Output {
    body: Body,
    ok: bool,
}

enum Body {
    Json(Value),
    Doc(Box<Document>),
    Tables(Vec<Table>),
    Report(Box<ExperimentReport>),
}

impl Output {
    fn json(v: Value) -> Self {
        Self { body: Body::Json(v), ok: true }
    }

    fn doc(d: Document) -> Self {
        Self {
            body: Body::Doc(Box::new(d)),
            ok: true,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|out| {
        write_output(&cli.global, &out.body)?;
        Ok(out.ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Physical(msg)) => {
            eprintln!("polab: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("polab: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Stokes { s } => stokes_cmd(g, s.as_deref()),
        Command::Mueller(cmd) => mueller_cmd(g, cmd),
        Command::State(cmd) => state_cmd(g, cmd),
        Command::Channel(cmd) => channel_cmd(g, cmd),
        Command::Qfim(cmd) => qfim_cmd(g, cmd),
        Command::Simulate(cmd) => simulate_cmd(g, cmd),
        Command::Experiment { name, params } => {
            let params = match params {
                Some(p) => spec::parse_params(p)?,
                None => Default::default(),
            };
            let report = run_experiment(name, &params)?;
            let ok = report.passed();
            Ok(Output {
                body: Body::Report(Box::new(report)),
                ok,
            })
        }
    }
}

fn load_doc(g: &Global) -> Result<Document, Failure> {
    match &g.input {
        Some(path) => Ok(io::load(path)?),
        None => Err(Failure::Input("no input given; pass --input".into())),
    }
}

fn defaults(g: &Global) -> Defaults {
    Defaults {
        n_max: g.n_max,
        threshold: g.tol,
    }
}

fn input_state(g: &Global, s: &StateInput) -> Result<FockState, Failure> {
    if let Some(spec) = &s.state {
        return parse_state(spec, &defaults(g));
    }
    match load_doc(g)? {
        Document::State(st) => Ok(st),
        other => Err(Failure::Input(format!("expected a fock_state document, got {}", other.type_name()))),
    }
}

fn stokes_cmd(g: &Global, s: Option<&str>) -> Outcome {
    let sv = match s {
        Some(text) => {
            let v = parse_floats(text, 4, "--s")?;
            StokesVector::new(v[0], v[1], v[2], v[3])
        }
        None => match load_doc(g)? {
            Document::Stokes(sv) => sv,
            other => return Err(Failure::Input(format!("expected a stokes document, got {}", other.type_name()))),
        },
    };
    let validity = validate_stokes_tol(&sv, g.tol);
    let mut out = json!({
        "stokes": sv.to_array(),
        "validity": validity,
    });
    if validity.valid && sv.s0 > 0.0 {
        out["dop"] = json!(degree_of_polarization(&sv)?);
        let dec = decompose_polarized_unpolarized(&sv)?;
        out["polarized"] = json!(dec.polarized_part().to_array());
        out["unpolarized"] = json!(dec.unpolarized_part().to_array());
        out["p"] = json!(dec.p);
    }
    Ok(Output {
        body: Body::Json(out),
        ok: validity.valid,
    })
}

fn mueller_input(g: &Global, m: &MuellerInput) -> Result<MuellerMatrix, Failure> {
    if let Some(text) = &m.m {
        let v = parse_floats(text, 16, "--m")?;
        let rows = std::array::from_fn(|i| std::array::from_fn(|j| v[4 * i + j]));
        return Ok(MuellerMatrix::from_rows(rows));
    }
    match load_doc(g)? {
        Document::Mueller(m) => Ok(m),
        Document::Jones(j) => Ok(mueller_from_jones(&j)),
        other => Err(Failure::Input(format!("expected a mueller_matrix document, got {}", other.type_name()))),
    }
}

fn mueller_cmd(g: &Global, cmd: &MuellerCmd) -> Outcome {
    match cmd {
        MuellerCmd::Validate(m) => {
            let report = validate_mueller(&mueller_input(g, m)?);
            Ok(Output {
                body: Body::Json(json!(report)),
                ok: report.physical,
            })
        }
        MuellerCmd::Decompose(m) => {
            let dec = lu_chipman_decompose(&mueller_input(g, m)?)?;
            Ok(Output::json(json!(dec)))
        }
        MuellerCmd::FromJones {
            rotation,
            boost,
            diattenuation,
        } => {
            let j: JonesMatrix = if let Some(t) = rotation {
                let v = parse_floats(t, 4, "--rotation")?;
                jones_rotation(v[0], &unit_axis(&v[1..])?)?
            } else if let Some(t) = boost {
                let v = parse_floats(t, 4, "--boost")?;
                jones_boost(v[0], &unit_axis(&v[1..])?)?
            } else if let Some(t) = diattenuation {
                let v = parse_floats(t, 5, "--diattenuation")?;
                jones_diattenuation(v[0], v[1], &unit_axis(&v[2..])?)?
            } else {
                match load_doc(g)? {
                    Document::Jones(j) => j,
                    other => {
                        return Err(Failure::Input(format!(
                            "expected a jones_matrix document, got {}",
                            other.type_name()
                        )))
                    }
                }
            };
            Ok(Output::doc(Document::Mueller(mueller_from_jones(&j))))
        }
    }
}

fn state_cmd(g: &Global, cmd: &StateCmd) -> Outcome {
    match cmd {
        StateCmd::Make { spec } => Ok(Output::doc(Document::State(parse_state(spec, &defaults(g))?))),
        StateCmd::Info(s) => {
            let st = input_state(g, s)?;
            let m = moments(&st);
            let mut out = json!({
                "n_max": st.basis.n_max,
                "leakage": st.leakage,
                "trace": st.trace(),
                "purity": st.purity(),
                "stokes": stokes_vector(&st).to_array(),
                "covariance": m.covariance,
                "uncertainty": uncertainty_report(&st),
                "layer_weights": st.layer_weights(),
            });
            if m.s0_mean > 0.0 {
                out["dop"] = json!(dop(&st)?);
            }
            Ok(Output::json(out))
        }
        StateCmd::Stars(s) => {
            let st = input_state(g, s)?;
            let stars = majorana_stars(&st)?;
            let list: Vec<Value> = stars
                .stars
                .iter()
                .map(|a| {
                    let v = a.unit_vector();
                    json!({"theta": a.theta, "phi": a.phi, "vector": [v.x, v.y, v.z]})
                })
                .collect();
            Ok(Output::json(json!({ "stars": list })))
        }
    }
}

fn channel_cmd(g: &Global, cmd: &ChannelCmd) -> Outcome {
    match cmd {
        ChannelCmd::Apply { channel, state } => {
            let st = input_state(g, state)?;
            let ch = parse_channel(&channel.channel, st.basis)?;
            Ok(Output::doc(Document::State(apply(&ch, &st)?)))
        }
        ChannelCmd::Mueller {
            channel,
            photons,
            probes,
        } => {
            let n = photons.unwrap_or(1);
            let n_max = g.n_max.unwrap_or(n).max(n);
            let ch = parse_channel(&channel.channel, polab::fock::FockBasis::new(n_max))?;
            let set = match photons {
                None => single_photon_probes(ch.basis)?,
                Some(n) => coherent_probes(*n, *probes, ch.basis)?,
            };
            let fit = induced_mueller(&ch, &set)?;
            let validity = validate_mueller(&fit.matrix());
            Ok(Output {
                body: Body::Json(json!({
                    "channel": ch.label,
                    "mueller": fit.mueller,
                    "residual": fit.residual,
                    "probe_count": fit.probe_count,
                    "validity": validity,
                })),
                ok: validity.physical,
            })
        }
    }
}

fn qfim_json(r: &QFIMResult) -> Value {
    json!({
        "qfim": r.qfim_rows(),
        "bound": r.scalar_bound,
        "commutativity_residuals": r.residual_rows(),
    })
}

fn parse_mode(s: &str) -> Result<Mode, Failure> {
    match s.to_ascii_lowercase().as_str() {
        "a" | "r" => Ok(Mode::A),
        "b" | "l" => Ok(Mode::B),
        other => Err(Failure::Input(format!("unknown mode {other}; use a or b"))),
    }
}

/// Single-point evaluation or a sweep over one named parameter.
fn qfim_points<F>(common: &QfimCommon, names: &[&str], base: Vec<f64>, f: F) -> Outcome
where
    F: Fn(&[f64]) -> polab::Result<QFIMResult> + Sync + Send,
{
    match &common.sweep {
        None => Ok(Output::json(qfim_json(&f(&base)?))),
        Some(text) => {
            let (name, values) = parse_sweep(text)?;
            let k = names
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| Failure::Input(format!("cannot sweep {name}; choose one of {}", names.join(", "))))?;
            let grid: Vec<Vec<f64>> = values
                .into_iter()
                .map(|v| {
                    let mut p = base.clone();
                    p[k] = v;
                    p
                })
                .collect();
            Ok(Output {
                body: Body::Tables(vec![qfim_sweep(names, &grid, Execution::default(), f)?]),
                ok: true,
            })
        }
    }
}

fn scalar_result(q: f64) -> QFIMResult {
    QFIMResult {
        qfim: nalgebra::DMatrix::from_element(1, 1, q),
        slds: Vec::new(),
        commutativity_residuals: nalgebra::DMatrix::zeros(1, 1),
        scalar_bound: (q > 0.0).then(|| 1.0 / q),
    }
}

fn qfim_cmd(g: &Global, cmd: &QfimCmd) -> Outcome {
    match cmd {
        QfimCmd::Phase(common) => {
            let st = input_state(g, &common.state)?;
            if common.sweep.is_some() {
                return Err(Failure::Input("the phase QFI has no parameter to sweep".into()));
            }
            Ok(Output::json(qfim_json(&scalar_result(scenario_phase_qfi(&st)?))))
        }
        QfimCmd::Loss { common, q, mode } => {
            let st = input_state(g, &common.state)?;
            let mode = parse_mode(mode)?;
            qfim_points(common, &["q"], vec![*q], |p| Ok(scalar_result(scenario_loss_qfi(&st, mode, p[0])?)))
        }
        QfimCmd::Diattenuation { common, q, r } => {
            let st = input_state(g, &common.state)?;
            qfim_points(common, &["q", "r"], vec![*q, *r], |p| scenario_diattenuation_qfim(&st, p[0], p[1]))
        }
        QfimCmd::PhaseLoss { common, theta, q } => {
            let st = input_state(g, &common.state)?;
            qfim_points(common, &["theta", "q"], vec![*theta, *q], |p| {
                scenario_phase_loss_qfim(&st, p[0], p[1])
            })
        }
        QfimCmd::Rotation { state, param, at } => {
            let st = input_state(g, state)?;
            let v = parse_floats(at, 3, "--at")?;
            let param = match param {
                Param::AxisAngle => RotationParametrization::AxisAngle,
                Param::Euler => RotationParametrization::Euler,
            };
            let frame = rotation_frame(&st, param, [v[0], v[1], v[2]])?;
            Ok(Output::json(json!({
                "qfim": frame.qfim,
                "bound": frame.wmse_bound,
                "covariance": frame.covariance,
                "generator": frame.generator,
            })))
        }
    }
}

fn simulate_cmd(g: &Global, cmd: &SimulateCmd) -> Outcome {
    let SimulateCmd::Gadget {
        state,
        component,
        rotation,
        shots,
        estimate,
    } = cmd;
    let st = input_state(g, state)?;
    if *estimate {
        let est = estimate_stokes(&st, *shots, g.seed)?;
        return Ok(Output::json(json!(est)));
    }
    let setting = match (component, rotation) {
        (_, Some(text)) => {
            let v = parse_floats(text, 4, "--rotation")?;
            let axis = unit_axis(&v[1..])?;
            GadgetSetting::Rotation {
                theta: v[0],
                axis: [axis.x, axis.y, axis.z],
            }
        }
        (Some(c), None) => GadgetSetting::Component(c.parse::<StokesComponent>()?),
        (None, None) => GadgetSetting::Component(StokesComponent::S3),
    };
    let config = GadgetConfig {
        setting,
        shots: *shots,
        seed: g.seed,
    };
    let record = simulate_gadget(&st, &config)?;
    if g.format == Format::Csv {
        let mut table = Table {
            name: "counts".into(),
            columns: vec!["n1".into(), "n2".into()],
            rows: Vec::with_capacity(record.counts.len()),
        };
        table
            .rows
            .extend(record.counts.iter().map(|&(a, b)| vec![a as f64, b as f64]));
        return Ok(Output {
            body: Body::Tables(vec![table]),
            ok: true,
        });
    }
    let (theta, axis) = match setting {
        GadgetSetting::Rotation { theta, axis } => (theta, nalgebra::Vector3::from(axis)),
        GadgetSetting::Component(c) => polab::gadget::gadget_rotation_for(c),
    };
    Ok(Output::json(json!({
        "config": config,
        "totals": [record.totals.0, record.totals.1],
        "mean": [record.mean.0, record.mean.1],
        "variance": [record.variance.0, record.variance.1],
        "difference_mean": (record.mean.0 - record.mean.1) / 2.0,
        "waveplates": waveplate_angles(theta, &axis),
    })))
}

fn write_output(g: &Global, body: &Body) -> Result<(), Failure> {
    let text = match (g.format, body) {
        (Format::Json, Body::Json(v)) => io::to_json_string(v)?,
        (Format::Json, Body::Doc(d)) => io::to_string(d)?,
        (Format::Json, Body::Report(r)) => io::to_string(&Document::Report((**r).clone()))?,
        (Format::Json, Body::Tables(ts)) => {
            let v: Vec<Value> = ts.iter().map(|t| json!(t)).collect();
            io::to_json_string(&json!({ "tables": v }))?
        }
        (Format::Csv, Body::Report(r)) => {
            if let Some(path) = &g.output {
                for p in io::emit_csv(r, path)? {
                    eprintln!("wrote {}", p.display());
                }
                return Ok(());
            }
            csv_tables(&r.tables)?
        }
        (Format::Csv, Body::Tables(ts)) => csv_tables(ts)?,
        (Format::Csv, _) => return Err(Failure::Input("CSV output is only available for tables".into())),
    };
    match &g.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| Failure::Input(format!("stdout: {e}")))
        }
    }
}

/// One table as plain CSV; several are each preceded by a `# name` line.
fn csv_tables(tables: &[Table]) -> Result<String, Failure> {
    if let [t] = tables {
        return Ok(io::table_csv(t)?);
    }
    let mut text = String::new();
    for t in tables {
        text.push_str(&format!("# {}\n", t.name));
        text.push_str(&io::table_csv(t)?);
        text.push('\n');
    }
    Ok(text)
}
