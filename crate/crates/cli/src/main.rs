use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use magnoest::estimation::{self, DerivativeMethod, EstimateOptions, HetNoise};
use magnoest::gaussian;
use magnoest::magnomech::{self, DisplacementPolicy};
use magnoest::sweep::{self, Config, Execution, SweepError, SweepSpec};
use magnoest::Error;

#[derive(Parser)]
#[command(name = "magnoest", version, about = "Quantum estimation of cavity-magnon-phonon couplings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean-field amplitudes, occupations and covariance diagnostics.
    SteadyState {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fisher information matrices and bounds at one point.
    Estimate {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a sweep spec and write CSV (and optionally SVG).
    Sweep {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a built-in figure recipe.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(sweep::FIGURES))]
        figure: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    #[value(name = "csv+svg")]
    CsvSvg,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Half,
    /// Identity added noise.
    #[value(name = "paper", alias = "identity")]
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum DisplacementArg {
    Fluctuation,
    Means,
}

#[derive(Clone, Copy, ValueEnum)]
enum DerivArg {
    Analytic,
    Fd,
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, value_enum)]
    het_noise: Option<NoiseArg>,
    #[arg(long, value_enum)]
    displacement: Option<DisplacementArg>,
    #[arg(long, value_enum)]
    deriv: Option<DerivArg>,
}

impl Common {
    fn any_override(&self) -> bool {
        self.het_noise.is_some() || self.displacement.is_some() || self.deriv.is_some()
    }

    fn apply(&self, mut o: EstimateOptions) -> EstimateOptions {
        if let Some(n) = self.het_noise {
            o.het_noise = match n {
                NoiseArg::Half => HetNoise::Half,
                NoiseArg::Identity => HetNoise::Identity,
            };
        }
        if let Some(d) = self.displacement {
            o.displacement = match d {
                DisplacementArg::Fluctuation => DisplacementPolicy::Fluctuation,
                DisplacementArg::Means => DisplacementPolicy::Means,
            };
        }
        if let Some(d) = self.deriv {
            o.derivative = match d {
                DerivArg::Analytic => DerivativeMethod::AnalyticLyapunov,
                DerivArg::Fd => DerivativeMethod::CentralDifference,
            };
        }
        o
    }

    fn svg(&self) -> bool {
        matches!(self.format, Format::CsvSvg)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

enum Failure {
    Spec(String),
    AllFailed(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Spec(_) => 2,
            Failure::AllFailed(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Spec(m) | Failure::AllFailed(m) | Failure::Io(m) => m,
        }
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::SpecInvalid(_) | SweepError::UnknownFigure(_) => Failure::Spec(e.to_string()),
            SweepError::AllPointsFailed { .. } => Failure::AllFailed(e.to_string()),
            SweepError::Io { .. } => Failure::Io(e.to_string()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::InvalidParams(_) | Error::NonPositiveFrequency(_) => Failure::Spec(e.to_string()),
            _ => Failure::AllFailed(e.to_string()),
        }
    }
}

fn complex_matrix(m: &magnoest::linalg::CMatrix) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| {
            Value::Array(
                (0..m.ncols())
                    .map(|j| json!({"re": m[(i, j)].re, "im": m[(i, j)].im}))
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}

fn real_matrix(m: &magnoest::linalg::RMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!(m[(i, j)])).collect()))
            .collect(),
    )
}

fn emit_json(value: &Value, out: Option<&Path>, stem: &str) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("json serializes");
    println!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join(format!("{stem}.json"));
        std::fs::write(&path, text + "\n")
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn steady_state(config: &Path, common: &Common) -> Result<(), Failure> {
    let params = Config::load(config)?.to_params()?;
    let policy = common.apply(EstimateOptions::default()).displacement;
    let st = magnomech::stationary(&params, policy)?;
    let report = gaussian::validate(&st.state, 1e-9);
    let n_photon = magnomech::mean_photon_number(&params)?;
    let n_phonon = magnomech::mean_phonon_number(&params)?;
    let ss = &st.steady;
    let value = json!({
        "c_a": {"re": ss.c_a.re, "im": ss.c_a.im},
        "m_a": {"re": ss.m_a.re, "im": ss.m_a.im},
        "q_a": ss.q_a,
        "p_a": ss.p_a,
        "g_ms_eff_hz": ss.g_ms_eff / std::f64::consts::TAU,
        "delta_m_eff_hz": ss.detuning_m_eff / std::f64::consts::TAU,
        "iterations": ss.iterations,
        "n_photon": n_photon,
        "n_phonon": n_phonon,
        "symplectic_eigenvalues": st.state.symplectic_eigenvalues(),
        "lyapunov_residual": st.lyapunov_residual(),
        "valid": report.passed,
        "covariance": real_matrix(st.state.covariance()),
    });
    emit_json(&value, common.out.as_deref(), "steady_state")
}

fn estimate(config: &Path, common: &Common) -> Result<(), Failure> {
    let params = Config::load(config)?.to_params()?;
    let options = common.apply(EstimateOptions::default());
    let e = estimation::estimate_point(&params, &options)?;
    let b = &e.bounds;
    let value = json!({
        "sld": real_matrix(&e.qfim.sld),
        "rld": complex_matrix(&e.qfim.rld.matrix),
        "rld_support_limited": e.qfim.rld.support_limited,
        "cfi_het": e.qfim.cfi_het,
        "B_R": b.b_rld,
        "B_S": b.b_sld,
        "B_MI": b.b_mi,
        "R": b.ratio_r,
        "Gamma": b.gamma,
        "compat": b.compat,
        "n_photon": e.n_photon,
        "n_phonon": e.n_phonon,
    });
    emit_json(&value, common.out.as_deref(), "estimate")
}

fn run_spec(path: &Path, common: &Common) -> Result<(), Failure> {
    let mut spec = SweepSpec::load(path)?;
    spec.options = common.apply(spec.options);
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("sweep")
        .to_string();
    let out = common.out_dir();
    match sweep::run_sweep(&spec, Execution::default()) {
        Ok(record) => {
            let (csv, _) = sweep::write_outputs(&record, &out, &stem, common.svg())?;
            eprintln!(
                "{}: {} rows, {} ok",
                csv.display(),
                record.rows.len(),
                record.ok_count()
            );
            Ok(())
        }
        Err(SweepError::AllPointsFailed { record }) => {
            sweep::write_outputs(&record, &out, &stem, false)?;
            Err(SweepError::AllPointsFailed { record }.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn reproduce(figure: &str, common: &Common) -> Result<(), Failure> {
    let recipe = sweep::recipe(figure)?;
    let options = if common.any_override() {
        let base = recipe.panels[0].1.options;
        Some(common.apply(base))
    } else {
        None
    };
    let panels = sweep::reproduce_figure(
        figure,
        options,
        &common.out_dir(),
        common.svg(),
        Execution::default(),
    )?;
    for p in panels {
        eprintln!(
            "{}: {} rows, {} ok",
            p.csv.display(),
            p.record.rows.len(),
            p.record.ok_count()
        );
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::SteadyState { config, common } => steady_state(config, common),
        Command::Estimate { config, common } => estimate(config, common),
        Command::Sweep { spec, common } => run_spec(spec, common),
        Command::Reproduce { figure, common } => reproduce(figure, common),
    }
}

fn main() -> ExitCode {
    match run(&Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
