use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quadrics::report::{run, Command, ConfigError, RunConfig, RunOutput};

#[derive(Parser, Debug)]
#[command(name = "quadrics", version, about = "Checks for hypersurfaces in round spheres")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Curvatures, support-function identities and Gram dimensions.
    Verify(Common),
    /// Integrate geodesic circles and compare with the closed form.
    Geodesics(Common),
    /// Jacobi spectrum, index counts and test-function families.
    Spectrum(Common),
    /// Weak index across a list of radii.
    IndexSweep(Common),
    /// The non-CMC example.
    Counterexample(Common),
    /// Exact linear-independence lemma.
    Lemma22(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// key=value file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Radius, or a comma list for index-sweep.
    #[arg(long, allow_hyphen_values = true)]
    r: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    m_freq: Option<String>,
    /// Comma-separated axis.
    #[arg(long, allow_hyphen_values = true)]
    v: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Directory for report.json and artifacts.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    j_max: Option<String>,
    #[arg(long)]
    anchors: Option<String>,
    #[arg(long)]
    tol_gradient: Option<String>,
    #[arg(long)]
    tol_laplacian: Option<String>,
    #[arg(long)]
    tol_proportional: Option<String>,
    #[arg(long)]
    tol_constants: Option<String>,
    #[arg(long)]
    tol_geodesic: Option<String>,
    #[arg(long)]
    tol_closed_form: Option<String>,
    #[arg(long)]
    tol_ell_sine: Option<String>,
    #[arg(long)]
    tol_prediction: Option<String>,
    #[arg(long)]
    tol_eigen: Option<String>,
    #[arg(long)]
    tol_integral: Option<String>,
    #[arg(long)]
    tol_gram: Option<String>,
    #[arg(long)]
    tol_mesh_low: Option<String>,
    #[arg(long)]
    tol_mesh_high: Option<String>,
}

impl Common {
    fn overrides(&self) -> Vec<(String, String)> {
        let fields = [
            ("family", &self.family),
            ("n", &self.n),
            ("k", &self.k),
            ("r", &self.r),
            ("c", &self.c),
            ("eps", &self.eps),
            ("m-freq", &self.m_freq),
            ("v", &self.v),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("out", &self.out),
            ("grid", &self.grid),
            ("j-max", &self.j_max),
            ("anchors", &self.anchors),
            ("tol-gradient", &self.tol_gradient),
            ("tol-laplacian", &self.tol_laplacian),
            ("tol-proportional", &self.tol_proportional),
            ("tol-constants", &self.tol_constants),
            ("tol-geodesic", &self.tol_geodesic),
            ("tol-closed-form", &self.tol_closed_form),
            ("tol-ell-sine", &self.tol_ell_sine),
            ("tol-prediction", &self.tol_prediction),
            ("tol-eigen", &self.tol_eigen),
            ("tol-integral", &self.tol_integral),
            ("tol-gram", &self.tol_gram),
            ("tol-mesh-low", &self.tol_mesh_low),
            ("tol-mesh-high", &self.tol_mesh_high),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Io(PathBuf, std::io::Error),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "config error: {e}"),
            Failure::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

fn split(cmd: Cmd) -> (Command, Common) {
    match cmd {
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Geodesics(c) => (Command::Geodesics, c),
        Cmd::Spectrum(c) => (Command::Spectrum, c),
        Cmd::IndexSweep(c) => (Command::IndexSweep, c),
        Cmd::Counterexample(c) => (Command::Counterexample, c),
        Cmd::Lemma22(c) => (Command::Lemma22, c),
    }
}

fn load(command: Command, common: &Common) -> Result<RunConfig, Failure> {
    let text = match &common.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|e| Failure::Io(path.clone(), e))?),
        None => None,
    };
    let mut overrides = common.overrides();
    overrides.push(("command".into(), command.name().into()));
    RunConfig::from_sources(text.as_deref(), &overrides).map_err(Failure::Config)
}

fn write_outputs(dir: &Path, output: &RunOutput) -> Result<(), Failure> {
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |e| Failure::Io(p, e)
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let report = dir.join("report.json");
    fs::write(&report, output.report.to_json()).map_err(io(&report))?;
    for artifact in &output.artifacts {
        let path = dir.join(&artifact.name);
        fs::write(&path, &artifact.contents).map_err(io(&path))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, common) = split(cli.command);
    let config = match load(command, &common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let output = match run(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{}", Failure::Config(e));
            return ExitCode::from(2);
        }
    };
    match &config.out {
        Some(dir) => {
            if let Err(e) = write_outputs(Path::new(dir), &output) {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
            print!("{}", output.report.summary());
        }
        None => {
            print!("{}", output.report.to_json());
            eprint!("{}", output.report.summary());
        }
    }
    ExitCode::from(output.exit_code() as u8)
}
