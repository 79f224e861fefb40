use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tamarkin_core::energy::{e_d, hom_persistence, novikov_module, torsion_exponent};
use tamarkin_core::interleave::{is_interleaved, translation_distance, Decision, InterleavingCertificate, SearchConfig};
use tamarkin_core::morse::{
    circle_energy_novikov, circle_energy_quotient, circle_one_form, morse_energy_estimate, quotient_persistence,
    sublevel_persistence, FilteredComplex, MorseGraph,
};
use tamarkin_core::novikov::default_precision;
use tamarkin_core::plane::{derived_hom_dims, hom_sweep, sphere_region, PlaneRegion};
use tamarkin_core::rat::parse_rat;
use tamarkin_core::{Bar, Error, ExtRat, Field, GradedBarcode, Rat};

mod exit {
    pub const INPUT: u8 = 2;
    pub const PRECONDITION: u8 = 3;
    pub const UNKNOWN: u8 = 4;
    pub const VERIFICATION: u8 = 5;
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: Error },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("undecided: {0}")]
    Unknown(String),
}

impl CliError {
    fn code(&self) -> u8 {
        let core = match self {
            CliError::Io { .. } => return exit::INPUT,
            CliError::Unknown(_) => return exit::UNKNOWN,
            CliError::File { source, .. } | CliError::Core(source) => source,
        };
        match core {
            Error::Precondition(_) | Error::Precision(_) | Error::Undefined(_) => exit::PRECONDITION,
            Error::OracleScope(_) => exit::UNKNOWN,
            Error::Verification(_) => exit::VERIFICATION,
            _ => exit::INPUT,
        }
    }
}

type Res<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "tamarkin", version, about = "Interleavings, torsion thresholds and energy bounds for persistence data")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Coefficient field: f2, f<p> or q. Defaults to the field declared by the inputs.
    #[arg(long, global = true)]
    field: Option<String>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Novikov truncation precision.
    #[arg(long, global = true)]
    precision: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Translation distance between two barcodes.
    Distance {
        f: PathBuf,
        g: PathBuf,
        /// Write the witnessing interleaving here.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Decide whether two barcodes are (a,b)-interleaved.
    Interleaved {
        f: PathBuf,
        g: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Torsion threshold (longest bar) of a barcode.
    Torsion { f: PathBuf },
    /// Energy lower bound from the Hom persistence module.
    Energy {
        f: PathBuf,
        g: PathBuf,
        #[arg(long)]
        deg0_only: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Torsion exponent of the Novikov module of degree-0 Homs.
    Novikov { f: PathBuf, g: PathBuf },
    /// Persistence of a filtered complex.
    Morse {
        file: PathBuf,
        /// Quotient filtration instead of sublevel sets.
        #[arg(long)]
        quotient: bool,
    },
    /// Max-min energy estimate of a Morse flow graph.
    MorseEstimate { graph: PathBuf },
    /// Sheaves on the plane.
    #[command(subcommand)]
    Plane(PlaneCommand),
    /// Built-in example generators.
    #[command(subcommand)]
    Example(ExampleCommand),
}

#[derive(Subcommand, Debug)]
enum PlaneCommand {
    /// Dimensions of Hom(k_Z, k_Z'[k]) as sheaves on the plane.
    Hom { z: PathBuf, zp: PathBuf },
    /// Sweep the translation c and report where Hom(k_Z,k_Z') → Hom(k_Z,T_c k_Z') vanishes.
    Sweep {
        z: PathBuf,
        /// Second region; the first one is used when omitted.
        zp: Option<PathBuf>,
        #[arg(long)]
        cmax: String,
        /// Mesh the region was built with; adds the boundary error bound to the report.
        #[arg(long)]
        mesh: Option<String>,
        /// Compute Hom dimensions on every step.
        #[arg(long)]
        dims: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum ExampleCommand {
    /// Region below the graph of the cubic bump, as `region v1`.
    Sphere {
        #[arg(long, default_value = "1/100")]
        mesh: String,
        #[arg(long, default_value = "1")]
        epsilon: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One-form on the circle enclosing areas A+ and A−.
    Circle {
        #[arg(long)]
        aplus: String,
        #[arg(long)]
        aminus: String,
        /// Fundamental domains of the unrolled cover.
        #[arg(long, default_value_t = 4)]
        periods: usize,
    },
    /// Constant sheaf against the region above the graph of a function sampled at the given values.
    ConstantVsGraph {
        /// Comma-separated samples of the function.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        phi: Vec<String>,
    },
    /// A random barcode in `barcode v1`.
    RandomBarcode {
        #[arg(long, default_value_t = 4)]
        bars: usize,
        /// Endpoints are multiples of 1/denominator.
        #[arg(long, default_value_t = 4)]
        denominator: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.global.jobs > 0 {
        // the global pool can only be built once; ignore a second attempt
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.global.jobs).build_global();
    }
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn write(path: &Path, text: &str) -> Res<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

fn parse_file<T>(path: &Path, parse: impl FnOnce(&str) -> tamarkin_core::Result<T>) -> Res<T> {
    let text = read(path)?;
    parse(&text).map_err(|source| CliError::File { path: path.into(), source })
}

fn rat_arg(name: &str, s: &str) -> Res<Rat> {
    parse_rat(s).map_err(|e| Error::Parameter(format!("--{name}: {e}")).into())
}

fn precision(g: &Global) -> Res<Rat> {
    g.precision.as_deref().map_or_else(|| Ok(default_precision()), |p| rat_arg("precision", p))
}

/// Field shared by the inputs, checked against `--field`.
fn common_field(g: &Global, declared: &[Field]) -> Res<Field> {
    let requested = g.field.as_deref().map(Field::from_tag).transpose()?;
    let mut all: Vec<Field> = declared.to_vec();
    all.extend(requested);
    match all.split_first() {
        None => Ok(Field::F2),
        Some((first, rest)) => match rest.iter().find(|f| *f != first) {
            Some(other) => Err(Error::FieldMismatch(format!("{} vs {}", first.tag(), other.tag())).into()),
            None => Ok(*first),
        },
    }
}

fn barcodes(g: &Global, paths: &[&Path]) -> Res<(Field, Vec<GradedBarcode>)> {
    let parsed = paths.iter().map(|p| parse_file(p, GradedBarcode::from_text)).collect::<Res<Vec<_>>>()?;
    let field = common_field(g, &parsed.iter().map(|p| p.0).collect::<Vec<_>>())?;
    Ok((field, parsed.into_iter().map(|p| p.1).collect()))
}

/// Write a certificate, then reload and re-verify what was written.
fn save_certificate(path: &Path, cert: &InterleavingCertificate) -> Res<()> {
    write(path, &cert.to_text())?;
    let back = parse_file(path, InterleavingCertificate::from_text)?;
    back.verify().map_err(|e| Error::Verification(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn run(cli: &Cli) -> Res<String> {
    let g = &cli.global;
    let mut out = String::new();
    match &cli.command {
        Command::Distance { f, g: gp, certificate } => {
            let (field, bc) = barcodes(g, &[f, gp])?;
            let d = translation_distance(&bc[0], &bc[1], &SearchConfig { field, ..SearchConfig::default() })?;
            if !d.is_exact() {
                return Err(CliError::Unknown(format!("distance lies in {d}")));
            }
            let tag = if d.attained { "attained" } else { "not-attained" };
            writeln!(out, "{} {tag}", d.value).unwrap();
            if let (Some(path), Some(cert)) = (certificate, &d.certificate) {
                save_certificate(path, cert)?;
            }
        }
        Command::Interleaved { f, g: gp, a, b, certificate } => {
            let (field, bc) = barcodes(g, &[f, gp])?;
            let (a, b) = (rat_arg("a", a)?, rat_arg("b", b)?);
            match is_interleaved(&bc[0], &bc[1], &a, &b, &SearchConfig { field, ..SearchConfig::default() })? {
                Decision::Yes(cert) => {
                    out.push_str("yes\n");
                    if let Some(path) = certificate {
                        save_certificate(path, &cert)?;
                    }
                }
                Decision::No => out.push_str("no\n"),
                Decision::Unknown(m) => return Err(CliError::Unknown(m)),
            }
        }
        Command::Torsion { f } => {
            let (_, bc) = barcodes(g, &[f])?;
            writeln!(out, "{}", bc[0].torsion_threshold()).unwrap();
        }
        Command::Energy { f, g: gp, deg0_only, report } => {
            let (field, bc) = barcodes(g, &[f, gp])?;
            let value = e_d(&bc[0], &bc[1], field, *deg0_only)?;
            writeln!(out, "{value}").unwrap();
            if let Some(path) = report {
                let hp = hom_persistence(&bc[0], &bc[1], field)?;
                let mut r = String::from("energy report v1\n");
                writeln!(r, "field {}", field.tag()).unwrap();
                writeln!(r, "degrees {}", if *deg0_only { "0" } else { "all" }).unwrap();
                for k in hp.barcode.degrees() {
                    let bars: Vec<String> = hp.barcode.in_degree(k).sorted().iter().map(interval).collect();
                    writeln!(r, "degree {k}: {}", bars.join(" ")).unwrap();
                }
                writeln!(r, "e_D {value}").unwrap();
                r.push_str("provenance hom_persistence (Hom and Ext^1 per bar pair) -> longest bar in c\n");
                write(path, &r)?;
            }
        }
        Command::Novikov { f, g: gp } => {
            let (field, bc) = barcodes(g, &[f, gp])?;
            let p = novikov_module(&bc[0], &bc[1], field, &precision(g)?)?;
            let t = torsion_exponent(&p)?;
            if t.free_rank > 0 {
                writeln!(out, "{} free-rank={}", t.value, t.free_rank).unwrap();
            } else {
                writeln!(out, "{}", t.value).unwrap();
            }
        }
        Command::Morse { file, quotient } => {
            let c = parse_file(file, FilteredComplex::from_text)?;
            let field = common_field(g, &[c.coefficients().field()])?;
            let bars = if *quotient { quotient_persistence(&c)? } else { sublevel_persistence(&c)? };
            out.push_str(&bars.to_text(field));
        }
        Command::MorseEstimate { graph } => {
            let m = parse_file(graph, MorseGraph::from_text)?;
            writeln!(out, "{}", morse_energy_estimate(&m)?).unwrap();
        }
        Command::Plane(PlaneCommand::Hom { z, zp }) => {
            let field = common_field(g, &[])?;
            let (z, zp) = (parse_file(z, PlaneRegion::from_text)?, parse_file(zp, PlaneRegion::from_text)?);
            out.push_str("# dimensions of derived sheaf Hom on the plane\n");
            for (k, d) in derived_hom_dims(&z, &zp, field)? {
                writeln!(out, "hom^{k} {d}").unwrap();
            }
        }
        Command::Plane(PlaneCommand::Sweep { z, zp, cmax, mesh, dims, report }) => {
            let field = common_field(g, &[])?;
            let zr = parse_file(z, PlaneRegion::from_text)?;
            let zpr = match zp {
                Some(p) => parse_file(p, PlaneRegion::from_text)?,
                None => zr.clone(),
            };
            let cmax = rat_arg("cmax", cmax)?;
            let sw = hom_sweep(&zr, &zpr, &cmax, field, *dims)?;
            match &sw.threshold {
                Some(t) => writeln!(out, "threshold {t} {}", if sw.attained { "attained" } else { "not-attained" }),
                None => writeln!(out, "threshold >{cmax} none"),
            }
            .unwrap();
            let mut r = String::from("sweep report v1\n");
            writeln!(r, "critical {}", sw.critical.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "))
                .unwrap();
            for s in &sw.steps {
                let at = if s.is_point() { format!("c={}", s.lo) } else { format!("c in ({}, {})", s.lo, s.hi) };
                let dims = s.dims.as_ref().map_or(String::new(), |d| {
                    d.iter().map(|(k, n)| format!(" hom^{k}={n}")).collect::<String>()
                });
                writeln!(r, "{at} vanishes={}{dims}", s.vanishes).unwrap();
            }
            if let Some(m) = mesh {
                let m = rat_arg("mesh", m)?;
                let bound = &m / Rat::from_integer(2.into()) + &m * &m / Rat::from_integer(48.into());
                writeln!(r, "boundary error bound in t {bound}").unwrap();
            }
            r.push_str("provenance arrangement -> degree-0 Hom components -> restriction to translate\n");
            match report {
                Some(path) => write(path, &r)?,
                None if *dims => out.push_str(&r),
                None => {}
            }
        }
        Command::Example(ExampleCommand::Sphere { mesh, epsilon, out: path }) => {
            let r = sphere_region(&rat_arg("mesh", mesh)?, &rat_arg("epsilon", epsilon)?)?;
            emit(&mut out, path.as_deref(), &r.to_text())?;
        }
        Command::Example(ExampleCommand::Circle { aplus, aminus, periods }) => {
            let (ap, am) = (rat_arg("aplus", aplus)?, rat_arg("aminus", aminus)?);
            let (_, expected) = circle_one_form(&ap, &am)?;
            let nov = circle_energy_novikov(&ap, &am)?;
            let quo = circle_energy_quotient(&ap, &am, *periods)?;
            writeln!(out, "expected {expected}\nnovikov {nov}\nquotient {quo}").unwrap();
            if ap != am && (nov != ExtRat::Fin(expected.clone()) || quo != ExtRat::Fin(expected)) {
                return Err(Error::Verification("circle pipelines disagree".into()).into());
            }
        }
        Command::Example(ExampleCommand::ConstantVsGraph { phi }) => {
            let vals = phi.iter().map(|v| rat_arg("phi", v)).collect::<Res<Vec<Rat>>>()?;
            let (Some(max), Some(min)) = (vals.iter().max(), vals.iter().min()) else {
                return Err(Error::Parameter("--phi needs at least one value".into()).into());
            };
            let zero = Rat::from_integer(0.into());
            let a = max.clone().max(zero.clone());
            let b = -(min.clone().min(zero));
            writeln!(out, "a {a}\nb {b}\nbound {}", &a + &b).unwrap();
            // over a single point the two objects are [0,∞) and [−φ,∞)
            let cfg = SearchConfig::default();
            let f = GradedBarcode::new(vec![Bar::new(0, ExtRat::Fin(Rat::from_integer(0.into())), ExtRat::PosInf)?]);
            let mut worst = Rat::from_integer(0.into());
            for v in &vals {
                let gb = GradedBarcode::new(vec![Bar::new(0, ExtRat::Fin(-v), ExtRat::PosInf)?]);
                let d = translation_distance(&f, &gb, &cfg)?;
                let d = d.value.finite().cloned().ok_or_else(|| Error::Verification("infinite distance".into()))?;
                worst = worst.max(d);
            }
            writeln!(out, "pointwise-distance {worst}").unwrap();
        }
        Command::Example(ExampleCommand::RandomBarcode { bars, denominator, out: path }) => {
            if *denominator <= 0 {
                return Err(Error::Parameter("--denominator must be positive".into()).into());
            }
            let field = common_field(g, &[])?;
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            let q = |n: i64| Rat::new(n.into(), (*denominator).into());
            let bc: GradedBarcode = (0..*bars)
                .map(|_| {
                    let b = rng.gen_range(0..4 * denominator);
                    let l = rng.gen_range(1..=2 * denominator);
                    let deg = rng.gen_range(0..2);
                    Bar::new(deg, ExtRat::Fin(q(b)), ExtRat::Fin(q(b + l)))
                })
                .collect::<tamarkin_core::Result<Vec<Bar>>>()?
                .into_iter()
                .collect();
            emit(&mut out, path.as_deref(), &bc.to_text(field))?;
        }
    }
    Ok(out)
}

fn interval(b: &Bar) -> String {
    format!("[{},{})", b.birth, b.death)
}

fn emit(out: &mut String, path: Option<&Path>, text: &str) -> Res<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            out.push_str(text);
            Ok(())
        }
    }
}
