//! `gasket-dim`: certified dimension runs, table reproduction, the
//! decimation lab and certificate replay.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gasket_dim::ball::Ball;
use gasket_dim::branch::{family, make_sierpinski_gasket, BranchSystem};
use gasket_dim::certificate::{read_certificate, verify_certificate, write_certificate, SIDECAR_THRESHOLD};
use gasket_dim::driver::{check_bracket, estimate_dimension, DimensionCertificate, RunConfig, Status};
use gasket_dim::lab::{backward_orbit, build_level_graph, dirichlet_spectrum};
use gasket_dim::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_REPLAY: u8 = 3;

#[derive(Parser)]
#[command(name = "gasket-dim", version, about = "Certified Hausdorff dimension bounds for decimation Julia sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Target width of the certified bracket.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Initial collocation rank.
    #[arg(long)]
    rank: Option<usize>,
    /// Largest collocation rank reached by escalation.
    #[arg(long)]
    max_rank: Option<usize>,
    /// Bisection depth limit.
    #[arg(long)]
    depth: Option<u32>,
    /// Derivative order of the enclosure bound.
    #[arg(long)]
    derivs: Option<usize>,
    /// Working precision in bits.
    #[arg(long, env = "DIM_PRECISION")]
    precision: Option<u32>,
    /// Worker threads.
    #[arg(long, env = "DIM_THREADS")]
    threads: Option<usize>,
}

impl Overrides {
    fn config(&self) -> Result<RunConfig, String> {
        let mut c = RunConfig::default();
        if let Some(v) = self.epsilon {
            c.epsilon = v;
        }
        if let Some(v) = self.rank {
            c.m_initial = v;
            c.m_max = c.m_max.max(v);
        }
        if let Some(v) = self.max_rank {
            c.m_max = v;
        }
        if let Some(v) = self.depth {
            c.depth = v;
        }
        if let Some(v) = self.derivs {
            c.order = v;
        }
        if let Some(v) = self.precision {
            c.precision = v;
        }
        if let Some(v) = self.threads {
            if v == 0 {
                return Err("--threads must be positive".into());
            }
            c.threads = Some(v);
        }
        c.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Certify the dimension of one family.
    Dim {
        family: String,
        #[command(flatten)]
        overrides: Overrides,
        /// Certificate path (default `<family>.cert.json`).
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Reproduce the gasket dimension table, or one row for another family.
    Table {
        /// Gasket parameters, `a..b` inclusive.
        #[arg(long, default_value = "2..10")]
        range: String,
        /// Single-row mode for a named family.
        #[arg(long)]
        family: Option<String>,
        #[command(flatten)]
        overrides: Overrides,
        /// Write the table here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Directory for per-row certificates.
        #[arg(long)]
        cert_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Dirichlet spectrum of the level-n triangle graph.
    Spectrum {
        level: u32,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Backward orbit of y under the decimation map.
    Orbit {
        y: String,
        generations: u32,
        #[arg(long, default_value = "sierpinski:d=2")]
        family: String,
        #[arg(long, default_value_t = 128)]
        precision: u32,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Replay a certificate from scratch.
    VerifyCert { path: PathBuf },
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), String> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| e.to_string())
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn failure(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_INCONCLUSIVE)
}

fn default_cert_path(family: &str) -> PathBuf {
    let safe: String = family.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    PathBuf::from(format!("{safe}.cert.json"))
}

fn lookup(id: &str) -> Result<BranchSystem, ExitCode> {
    family(id).map_err(|e| match e {
        Error::UnknownFamily(_) | Error::InvalidConfig(_) | Error::OverlapError => usage(e),
        other => failure(other),
    })
}

fn certify(system: &BranchSystem, config: &RunConfig) -> Result<DimensionCertificate, String> {
    let cert = estimate_dimension(system, config).map_err(|e| e.to_string())?;
    if cert.status == Status::Certified {
        check_bracket(system, &cert).map_err(|e| e.to_string())?;
    }
    Ok(cert)
}

fn summary(cert: &DimensionCertificate) -> String {
    let mut s = format!("family  {}\nstatus  {:?}\nt0      {}\nt1      {}\ndigits  {}\n", cert.family, cert.status, cert.t0, cert.t1, cert.digits);
    if let Some(f) = &cert.failure {
        s.push_str(&format!("note    {f}\n"));
    }
    s.push_str(&format!("steps   {}  leaves {}  time {:.1}s\n", cert.iterations, cert.leaves, cert.runtime_seconds));
    s
}

fn run_dim(id: &str, overrides: &Overrides, output: Option<PathBuf>, format: Format) -> ExitCode {
    let config = match overrides.config() {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let system = match lookup(id) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let cert = match certify(&system, &config) {
        Ok(c) => c,
        Err(e) => return failure(e),
    };
    let path = output.unwrap_or_else(|| default_cert_path(&system.name));
    if let Err(e) = write_certificate(&cert, &path, SIDECAR_THRESHOLD) {
        return failure(e);
    }
    let text = match format {
        Format::Json => serde_json::json!({
            "family": cert.family, "status": cert.status, "t0": cert.t0, "t1": cert.t1,
            "digits": cert.digits, "certificate": path.display().to_string(),
        })
        .to_string()
            + "\n",
        Format::Csv => format!("family,status,t0,t1,digits\n{},{:?},{},{},{}\n", cert.family, cert.status, cert.t0, cert.t1, cert.digits),
        Format::Text => summary(&cert) + &format!("written {}\n", path.display()),
    };
    if let Err(e) = emit(None, &text) {
        return failure(e);
    }
    if cert.status == Status::Certified {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INCONCLUSIVE)
    }
}

fn parse_range(s: &str) -> Option<std::ops::RangeInclusive<u32>> {
    let (a, b) = s.split_once("..")?;
    let (a, b) = (a.trim().parse().ok()?, b.trim().trim_start_matches('=').parse().ok()?);
    (2 <= a && a <= b).then_some(a..=b)
}

/// The shared digits kept to at most 14 decimals.
fn fourteen(digits: &str) -> String {
    match digits.split_once('.') {
        Some((i, f)) => format!("{i}.{}", &f[..f.len().min(14)]),
        None => digits.to_string(),
    }
}

fn run_table(
    range: &str,
    family_id: Option<&str>,
    overrides: &Overrides,
    output: Option<PathBuf>,
    cert_dir: Option<PathBuf>,
    format: Format,
) -> ExitCode {
    let config = match overrides.config() {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let systems: Vec<(String, Result<BranchSystem, Error>)> = match family_id {
        Some(id) => match family(id) {
            Err(e @ Error::UnknownFamily(_)) => return usage(e),
            r => vec![(id.to_string(), r)],
        },
        None => match parse_range(range) {
            Some(r) => r.map(|d| (d.to_string(), make_sierpinski_gasket(d))).collect(),
            None => return usage(format!("bad range `{range}`, expected a..b with 2 <= a <= b")),
        },
    };
    let mut rows = Vec::new();
    let mut all_ok = true;
    for (label, sys) in systems {
        let res = sys.map_err(|e| e.to_string()).and_then(|s| certify(&s, &config));
        match res {
            Ok(cert) => {
                if let Some(dir) = &cert_dir {
                    let path = dir.join(default_cert_path(&cert.family));
                    if let Err(e) = write_certificate(&cert, &path, SIDECAR_THRESHOLD) {
                        return failure(e);
                    }
                }
                let ok = cert.status == Status::Certified;
                all_ok &= ok;
                rows.push((label, fourteen(&cert.digits), cert.t0, cert.t1, cert.runtime_seconds, (!ok).then(|| cert.failure.unwrap_or_default())));
            }
            Err(e) => {
                all_ok = false;
                rows.push((label, String::new(), String::new(), String::new(), 0.0, Some(e)));
            }
        }
    }
    let text = match format {
        Format::Json => serde_json::Value::Array(
            rows.iter()
                .map(|(d, v, t0, t1, rt, err)| serde_json::json!({"d": d, "value": v, "t0": t0, "t1": t1, "runtime": rt, "error": err}))
                .collect(),
        )
        .to_string()
            + "\n",
        Format::Csv | Format::Text => {
            let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
            let mut write = || -> csv::Result<()> {
                w.write_record(["d", "value", "t0", "t1", "runtime"])?;
                for (d, v, t0, t1, rt, err) in &rows {
                    let rt = format!("{rt:.1}");
                    match err {
                        None => w.write_record([d, v, t0, t1, &rt])?,
                        Some(e) => w.write_record([d, "FAILED", t0, t1, &rt, e])?,
                    }
                }
                w.flush()?;
                Ok(())
            };
            if let Err(e) = write() {
                return failure(e);
            }
            String::from_utf8(w.into_inner().expect("flushed")).expect("utf-8")
        }
    };
    if let Err(e) = emit(output.as_deref(), &text) {
        return failure(e);
    }
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INCONCLUSIVE)
    }
}

fn run_spectrum(level: u32, output: Option<PathBuf>, format: Format) -> ExitCode {
    let report = match build_level_graph(level).and_then(|g| dirichlet_spectrum(&g)) {
        Ok(r) => r,
        Err(e) => return usage(e),
    };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&report).unwrap() + "\n",
        Format::Csv => {
            let mut s = String::from("eigenvalue,multiplicity\n");
            for (v, k) in &report.multiplicities {
                s.push_str(&format!("{v:.12},{k}\n"));
            }
            s
        }
        Format::Text => report.eigenvalues.iter().map(|v| format!("{v:.12}\n")).collect(),
    };
    match emit(output.as_deref(), &text) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => failure(e),
    }
}

fn run_orbit(y: &str, n: u32, id: &str, precision: u32, output: Option<PathBuf>, format: Format) -> ExitCode {
    let system = match lookup(id) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let seed = match Ball::parse(precision, y) {
        Ok(b) => b,
        Err(e) => return usage(e),
    };
    let orbit = match backward_orbit(&system, &seed, n) {
        Ok(o) => o,
        Err(e) => return usage(e),
    };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&orbit).unwrap() + "\n",
        Format::Csv => {
            let mut s = String::from("word,value,radius\n");
            for p in &orbit.points {
                let w: Vec<String> = p.word.iter().map(usize::to_string).collect();
                s.push_str(&format!("{},{:.17e},{:.3e}\n", w.join(" "), p.value, p.enclosure.1));
            }
            s
        }
        Format::Text => orbit.points.iter().map(|p| format!("{:.15}\n", p.value)).collect(),
    };
    match emit(output.as_deref(), &text) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => failure(e),
    }
}

fn run_verify(path: &Path) -> ExitCode {
    let cert = match read_certificate(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("replay failed: {e}");
            return ExitCode::from(EXIT_REPLAY);
        }
    };
    match verify_certificate(&cert) {
        Ok(()) => {
            println!("ok {} midpoints replayed; {} < dim < {}", cert.midpoints.len(), cert.t0, cert.t1);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("replay failed: {e:?}: {e}");
            ExitCode::from(EXIT_REPLAY)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Dim { family, overrides, output, format } => run_dim(&family, &overrides, output, format),
        Command::Table { range, family, overrides, output, cert_dir, format } => {
            run_table(&range, family.as_deref(), &overrides, output, cert_dir, format)
        }
        Command::Spectrum { level, output, format } => run_spectrum(level, output, format),
        Command::Orbit { y, generations, family, precision, output, format } => {
            run_orbit(&y, generations, &family, precision, output, format)
        }
        Command::VerifyCert { path } => run_verify(&path),
    }
}
