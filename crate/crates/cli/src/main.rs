use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use equidistants::algebra::{ke_codimension, Codim};
use equidistants::classify::{recognize, stable_singularities};
use equidistants::contact::{lambda_contact_from_pair, local_ring_dims, reduce_to_theta, RingDim};
use equidistants::geometry::{detect_singularities, trace_equidistant, ParametricManifold};
use equidistants::io;
use equidistants::scalar::{format_rational, parse_rational, to_f64};
use equidistants::{Error, Rational};

#[derive(Parser)]
#[command(name = "equidistants", version, about = "Affine equidistants and their contact singularities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the stable singularities of E_λ(M^n) in R^q.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: usize,
        /// Print the list as JSON.
        #[arg(long, conflicts_with = "table")]
        json: bool,
        /// Print an aligned table instead of the one-line summary.
        #[arg(long)]
        table: bool,
    },
    /// Trace the λ-equidistant of a curve; writes PREFIX.csv and PREFIX.svg.
    Trace {
        #[arg(long)]
        input: PathBuf,
        /// Decimal or p/q.
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        out: PathBuf,
        /// Continuation step in the parameter plane.
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Width of the excluded band around the diagonal.
        #[arg(long)]
        delta: Option<f64>,
        /// Classify every detected singularity through the contact germ.
        #[arg(long)]
        cross_check: bool,
    },
    /// Recognize the K-class of a germ.
    Classify {
        #[arg(long)]
        germ: PathBuf,
    },
    /// Contact germ κ_λ, reduced germ θ_λ and its class for a graph pair.
    Contact {
        #[arg(long)]
        input: PathBuf,
        /// Exact rational p/q; defaults to the pair's own lambda.
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Local ring dimensions of π̃_λ, κ_λ and θ_λ.
    Ringdims {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long, default_value_t = 8)]
        order: usize,
    },
    /// K_e-codimension of a germ.
    Mu {
        #[arg(long)]
        germ: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Input(String),
    Math(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::DimensionMismatch(_) | Error::NonzeroConstant(_) | Error::InvalidClass(_) => {
                Failure::Input(e.to_string())
            }
            Error::InvalidLambda => Failure::Usage(e.to_string()),
            other => Failure::Math(other),
        }
    }
}

type CliResult = Result<String, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn exact_lambda(text: &str) -> Result<Rational, Failure> {
    if text.contains(['.', 'e', 'E']) {
        return Err(Failure::Usage(format!("lambda must be an exact rational such as 2/5, got {text:?}")));
    }
    let value = parse_rational(text).ok_or_else(|| Failure::Usage(format!("bad lambda {text:?}")))?;
    check_lambda(to_f64(&value))?;
    Ok(value)
}

fn check_lambda(value: f64) -> Result<(), Failure> {
    if value == 0.0 || value == 1.0 || !value.is_finite() {
        return Err(Failure::Usage("lambda must differ from 0 and 1".into()));
    }
    Ok(())
}

fn pair_lambda(cli: Option<&str>, file: Option<Rational>) -> Result<Rational, Failure> {
    match (cli, file) {
        (Some(text), _) => exact_lambda(text),
        (None, Some(l)) => {
            check_lambda(to_f64(&l))?;
            Ok(l)
        }
        (None, None) => Err(Failure::Usage("--lambda is required when the input has none".into())),
    }
}

fn enumerate(n: usize, q: usize, json: bool, table: bool) -> CliResult {
    let list = stable_singularities(n, q)?;
    Ok(if json {
        io::stable_list_to_json(&list) + "\n"
    } else if table {
        io::stable_list_table(&list)
    } else {
        list.summary() + "\n"
    })
}

fn trace(input: &Path, lambda: &str, out: &Path, step: f64, delta: Option<f64>, cross_check: bool) -> CliResult {
    let m: ParametricManifold = io::manifold_from_json(&read(input)?)?;
    let lam = match parse_rational(lambda) {
        Some(v) => to_f64(&v),
        None => return Err(Failure::Usage(format!("bad lambda {lambda:?}"))),
    };
    check_lambda(lam)?;
    let delta = delta.unwrap_or(10.0 * std::f64::consts::TAU / 512.0);
    let mut branches = trace_equidistant(&m, lam, step, delta)?;
    detect_singularities(&m, &mut branches, cross_check)?;
    let csv = io::branches_to_csv(&branches, m.q());
    let outline: Option<Vec<Vec<f64>>> = (m.n() == 1 && m.q() == 2)
        .then(|| (0..400).map(|i| m.point(&[std::f64::consts::TAU * i as f64 / 400.0])).collect());
    let svg = io::branches_to_svg(&branches, outline.as_deref());
    let with_ext = |ext: &str| {
        let mut p = out.as_os_str().to_owned();
        p.push(ext);
        PathBuf::from(p)
    };
    for (path, body) in [(with_ext(".csv"), csv), (with_ext(".svg"), svg)] {
        fs::write(&path, body).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    let mut report = String::new();
    for (i, b) in branches.iter().enumerate() {
        let count = |label| b.annotations.iter().filter(|a| a.label == label).count();
        use equidistants::geometry::SingularityLabel as L;
        report += &format!(
            "branch {i}: {} samples, {}, cusps {}, nodes {}{}\n",
            b.samples.len(),
            if b.degenerate { "DEGENERATE".to_string() } else { format!("{:?}", b.termination).to_lowercase() },
            count(L::A2Cusp),
            count(L::A1Node) / 2,
            match count(L::Higher) + count(L::Unresolved) {
                0 => String::new(),
                k => format!(", other {k}"),
            }
        );
    }
    Ok(report)
}

fn classify(germ: &Path) -> CliResult {
    let g = io::germ_from_json(&read(germ)?)?;
    let class = recognize(&g)?;
    let mu = class.mu().finite().map_or("INFINITE".to_string(), |m| m.to_string());
    Ok(format!("{class} mu={mu}\n"))
}

fn contact(input: &Path, lambda: Option<&str>) -> CliResult {
    let (gp, own) = io::graph_pair_from_json(&read(input)?)?;
    let lam = pair_lambda(lambda, own)?;
    let kappa = lambda_contact_from_pair(&gp, &lam)?;
    let mut out = format!("lambda: {}\nkappa: {kappa}\n", format_rational(&lam));
    let theta = match reduce_to_theta(&kappa, gp.n(), gp.q()) {
        Ok(t) => t,
        Err(e) => {
            print!("{out}");
            return Err(e.into());
        }
    };
    out += &format!("theta: {theta}\n");
    match recognize(&theta) {
        Ok(class) => Ok(out + &format!("class: {class}\n")),
        Err(e) => {
            print!("{out}");
            Err(e.into())
        }
    }
}

fn show_ring(name: &str, r: &RingDim) -> String {
    let dim = match r.dimension {
        Codim::Finite(d) => d.to_string(),
        Codim::Infinite => "INFINITE".into(),
    };
    let hilbert = r.hilbert.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    format!("{name}: {dim} (truncated {}, hilbert {hilbert})\n", r.truncated)
}

fn ringdims(input: &Path, lambda: Option<&str>, order: usize) -> CliResult {
    if order == 0 {
        return Err(Failure::Usage("--order must be positive".into()));
    }
    let (gp, own) = io::graph_pair_from_json(&read(input)?)?;
    let lam = pair_lambda(lambda, own)?;
    let dims = local_ring_dims(&gp, &lam, order)?;
    Ok(show_ring("pi", &dims.pi) + &show_ring("kappa", &dims.kappa) + &show_ring("theta", &dims.theta))
}

fn mu(germ: &Path) -> CliResult {
    let g = io::germ_from_json(&read(germ)?)?;
    match ke_codimension(&g) {
        Codim::Finite(m) => Ok(format!("{m}\n")),
        Codim::Infinite => Err(Failure::Math(Error::Infinite)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Enumerate { n, q, json, table } => enumerate(*n, *q, *json, *table),
        Command::Trace { input, lambda, out, step, delta, cross_check } => {
            trace(input, lambda, out, *step, *delta, *cross_check)
        }
        Command::Classify { germ } => classify(germ),
        Command::Contact { input, lambda } => contact(input, lambda.as_deref()),
        Command::Ringdims { input, lambda, order } => ringdims(input, lambda.as_deref(), *order),
        Command::Mu { germ } => mu(germ),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: USAGE: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: PARSE: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Math(e)) => {
            let msg = e.to_string();
            if msg.starts_with(e.code()) {
                eprintln!("error: {msg}");
            } else {
                eprintln!("error: {}: {msg}", e.code());
            }
            ExitCode::from(3)
        }
    }
}
