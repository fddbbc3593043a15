use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use latsub::cli_io::{emit_report, parse_spec, report_json, Analysis, AnalysisReport, Check, Config};
use latsub::overlap::write_edge_list;
use latsub::substitution::{
    central_patch, generate_patch, is_primitive, pf_data, substitution_matrix, Cluster, Region,
    SubstitutionSystem,
};
use latsub::tiles::{render_svg, solve_adjoint, RasterMode};
use latsub::Error;

#[derive(Parser)]
#[command(name = "latsub", version, about = "Analysis of lattice substitution systems")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the JSON result to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Point budget for generated patches.
    #[arg(long, global = true)]
    budget: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArg {
    /// Spec file, or the name of a bundled system.
    spec: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a spec.
    Validate(SpecArg),
    /// Substitution matrix, primitivity and PF data.
    Matrix(SpecArg),
    /// Points of `Φ^n(seed)` in a region.
    Iterate {
        #[command(flatten)]
        s: SpecArg,
        #[arg(long, default_value_t = 4)]
        n: u32,
        /// Per-axis bounds `lo:hi`, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        region: Option<String>,
    },
    Legality {
        #[command(flatten)]
        s: SpecArg,
        #[arg(long, default_value_t = 6)]
        kmax: u32,
    },
    Lprime(SpecArg),
    Modcoin {
        #[command(flatten)]
        s: SpecArg,
        #[arg(long, default_value_t = 8)]
        mmax: u32,
    },
    Windows {
        #[command(flatten)]
        s: SpecArg,
        #[arg(long, default_value_t = 6)]
        depth: u32,
        #[arg(long, default_value_t = 8)]
        mmax: u32,
    },
    Tiles {
        #[command(flatten)]
        s: SpecArg,
        /// Cell size, as a float or `1/k`.
        #[arg(long)]
        cell: Option<String>,
        #[arg(long)]
        iters: Option<u32>,
    },
    Density {
        #[command(flatten)]
        s: SpecArg,
        /// Shift in `L'`, comma separated; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        alpha: Vec<String>,
        #[arg(long, default_value_t = 8)]
        n: u32,
    },
    Overlap {
        #[command(flatten)]
        s: SpecArg,
        /// Almost-period, comma separated; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        shifts: Vec<String>,
        #[arg(long)]
        theta: Option<f64>,
        /// Write the overlap graph as an edge list.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    Freq {
        #[command(flatten)]
        s: SpecArg,
        /// Points `color@x,y` separated by `;`. Point frequencies when absent.
        #[arg(long, allow_hyphen_values = true)]
        cluster: Option<String>,
        #[arg(long, default_value_t = 10)]
        translates: usize,
    },
    Diffract {
        #[command(flatten)]
        s: SpecArg,
        /// Half-width of the patch.
        #[arg(long)]
        window: Option<i64>,
    },
    /// SVG of a central patch.
    Render {
        #[command(flatten)]
        s: SpecArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 12)]
        radius: i64,
        /// Draw tile outlines.
        #[arg(long)]
        tiles: bool,
    },
    /// Every check and the overall verdict.
    Full(SpecArg),
}

/// Failures before any analysis starts.
struct Usage(String);

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u.0)
    }
}

fn vector(s: &str) -> Result<Vec<i64>, Usage> {
    s.split(',')
        .map(|x| x.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Usage(format!("bad integer vector `{s}`")))
}

fn region(s: &str) -> Result<Region, Usage> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for axis in s.split(',') {
        let (a, b) = axis
            .split_once(':')
            .ok_or_else(|| Usage(format!("bad region axis `{axis}`, expected lo:hi")))?;
        let parse = |x: &str| x.trim().parse::<i64>().map_err(|_| Usage(format!("bad bound `{x}`")));
        lo.push(parse(a)?);
        hi.push(parse(b)?);
    }
    Region::new(lo, hi).map_err(|e| Usage(e.to_string()))
}

fn cell(s: &str) -> Result<f64, Usage> {
    let v = match s.split_once('/') {
        Some((p, q)) => match (p.trim().parse::<f64>(), q.trim().parse::<f64>()) {
            (Ok(p), Ok(q)) => p / q,
            _ => f64::NAN,
        },
        None => s.trim().parse().unwrap_or(f64::NAN),
    };
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Usage(format!("bad cell size `{s}`")))
    }
}

fn cluster(sys: &SubstitutionSystem, s: &str) -> Result<Cluster, Usage> {
    let mut lists = vec![Vec::new(); sys.num_colors()];
    for item in s.split(';').filter(|x| !x.trim().is_empty()) {
        let (c, p) = item
            .split_once('@')
            .ok_or_else(|| Usage(format!("bad cluster point `{item}`, expected color@x,...")))?;
        let color = sys
            .colors
            .iter()
            .position(|n| n == c.trim())
            .ok_or_else(|| Usage(format!("unknown color `{c}`")))?;
        let p = vector(p)?;
        if p.len() != sys.dim() {
            return Err(Usage(format!("point `{item}` has the wrong dimension")));
        }
        lists[color].push(p);
    }
    Ok(Cluster::from_lists(lists))
}

fn load(spec: &Path) -> Result<SubstitutionSystem, Failure> {
    parse_spec(spec).map_err(|e| match e {
        Error::Schema(v) => Failure::Usage(
            v.iter()
                .map(|x| format!("{}: {}", x.field, x.reason))
                .collect::<Vec<_>>()
                .join("\n"),
        ),
        e => Failure::Usage(format!("{}: {e}", spec.display())),
    })
}

fn write_json(path: Option<&Path>, value: &impl Serialize) -> Result<(), Failure> {
    if let Some(p) = path {
        std::fs::write(p, report_json(value)?).map_err(Error::from)?;
    }
    Ok(())
}

fn print_check(c: &Check) {
    println!("{}", c.summary);
    let grade = serde_json::to_value(c.grade).expect("grade serializes");
    if c.bound.is_empty() {
        println!("  grade {}", grade.as_str().unwrap_or("?"));
    } else {
        println!("  grade {}, {}", grade.as_str().unwrap_or("?"), c.bound);
    }
}

/// Runs one check and reports it as a report with that block filled.
fn single(
    sys: &SubstitutionSystem,
    report: Option<&Path>,
    cfg: Config,
    run: impl FnOnce(&mut Analysis) -> latsub::Result<Check>,
    slot: impl FnOnce(&mut AnalysisReport) -> &mut Check,
) -> Result<(), Failure> {
    let mut a = Analysis::new(sys, cfg);
    let c = run(&mut a)?;
    print_check(&c);
    let mut r = AnalysisReport::empty(sys.name.clone());
    *slot(&mut r) = c;
    if let Some(p) = report {
        emit_report(&r, p)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let report = cli.report.as_deref();
    let mut cfg = Config::default();
    if let Some(b) = cli.budget {
        cfg.budget = b;
    }
    match cli.command {
        Command::Validate(s) => {
            let sys = load(&s.spec)?;
            let digits: usize = (0..sys.num_colors())
                .flat_map(|i| (0..sys.num_colors()).map(move |j| (i, j)))
                .map(|(i, j)| sys.digit_set(i, j).len())
                .sum();
            println!(
                "{}: dimension {}, {} colors, |det Q| = {}, {digits} digits",
                sys.name,
                sys.dim(),
                sys.num_colors(),
                sys.q.q()
            );
        }
        Command::Matrix(s) => {
            let sys = load(&s.spec)?;
            let m = substitution_matrix(&sys);
            for row in m.to_rows() {
                println!("{}", row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
            }
            let p = is_primitive(&m);
            let pf = pf_data(&m, &sys.q).ok();
            match (&p.power, &pf) {
                (Some(l), Some(pf)) => println!(
                    "primitive (S^{l} > 0), PF eigenvalue {:.9}, |det Q| = {}",
                    pf.eigenvalue,
                    sys.q.q()
                ),
                _ => println!("not primitive"),
            }
            write_json(report, &serde_json::json!({ "matrix": m.to_rows(), "primitivity": p, "pf": pf }))?;
        }
        Command::Iterate { s, n, region: r } => {
            let sys = load(&s.spec)?;
            let r = match r {
                Some(r) => region(&r)?,
                None => Region::centered(sys.dim(), 16),
            };
            if r.dim() != sys.dim() {
                return Err(Usage("region has the wrong dimension".into()).into());
            }
            let patch = generate_patch(&sys, n, &r, cfg.budget)?;
            for (i, name) in sys.colors.iter().enumerate() {
                let pts: Vec<String> = patch
                    .color(i)
                    .iter()
                    .map(|p| p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                    .collect();
                println!("{name}: {}", pts.join(" "));
            }
            write_json(report, &patch)?;
        }
        Command::Legality { s, kmax } => {
            let sys = load(&s.spec)?;
            cfg.k_max = kmax;
            single(&sys, report, cfg, |a| a.legality(), |r| &mut r.checks.legality)?;
        }
        Command::Lprime(s) => {
            let sys = load(&s.spec)?;
            single(&sys, report, cfg, |a| a.lprime(), |r| &mut r.checks.lprime)?;
        }
        Command::Modcoin { s, mmax } => {
            let sys = load(&s.spec)?;
            cfg.m_max = mmax;
            single(&sys, report, cfg, |a| a.modular_coincidence(), |r| {
                &mut r.checks.modular_coincidence
            })?;
        }
        Command::Windows { s, depth, mmax } => {
            let sys = load(&s.spec)?;
            cfg.depth = depth;
            cfg.m_max = mmax;
            single(&sys, report, cfg, |a| a.windows(), |r| &mut r.checks.windows)?;
        }
        Command::Tiles { s, cell: h, iters } => {
            let sys = load(&s.spec)?;
            cfg.cell = h.as_deref().map(cell).transpose()?;
            cfg.iters = iters;
            single(&sys, report, cfg, |a| a.tiles(), |r| &mut r.checks.tiles)?;
        }
        Command::Density { s, alpha, n } => {
            let sys = load(&s.spec)?;
            if !alpha.is_empty() {
                cfg.alphas = Some(alpha.iter().map(|a| vector(a)).collect::<Result<_, _>>()?);
            }
            cfg.density_n = n;
            single(&sys, report, cfg, |a| a.density(), |r| &mut r.checks.density)?;
        }
        Command::Overlap {
            s,
            shifts,
            theta,
            dump,
        } => {
            let sys = load(&s.spec)?;
            if !shifts.is_empty() {
                cfg.shifts = Some(shifts.iter().map(|a| vector(a)).collect::<Result<_, _>>()?);
            }
            if let Some(t) = theta {
                cfg.theta = t;
            }
            let mut a = Analysis::new(&sys, cfg);
            a.legality()?;
            let c = a.overlap()?;
            print_check(&c);
            if let Some(path) = dump {
                let g = a.overlap_graph()?;
                let f = std::fs::File::create(&path).map_err(Error::from)?;
                write_edge_list(&g, std::io::BufWriter::new(f))?;
            }
            let mut r = AnalysisReport::empty(sys.name.clone());
            r.checks.overlap = c;
            if let Some(p) = report {
                emit_report(&r, p)?;
            }
        }
        Command::Freq {
            s,
            cluster: p,
            translates,
        } => {
            let sys = load(&s.spec)?;
            cfg.translates = translates;
            match p {
                Some(p) => {
                    let p = cluster(&sys, &p)?;
                    if p.is_empty() {
                        return Err(Usage("empty cluster".into()).into());
                    }
                    single(&sys, report, cfg, |a| a.cluster_frequency(&p), |r| {
                        &mut r.checks.frequency
                    })?;
                }
                None => single(&sys, report, cfg, |a| a.frequency(), |r| &mut r.checks.frequency)?,
            }
        }
        Command::Diffract { s, window } => {
            let sys = load(&s.spec)?;
            cfg.diffraction_radius = window;
            single(&sys, report, cfg, |a| a.diffraction(), |r| &mut r.checks.diffraction)?;
        }
        Command::Render {
            s,
            out,
            radius,
            tiles,
        } => {
            let sys = load(&s.spec)?;
            let (_, patch) = central_patch(&sys, radius, cfg.budget)?;
            let att = if tiles {
                let h = cfg.cell_size(sys.dim());
                Some(solve_adjoint(&sys, h, None, RasterMode::Outer)?)
            } else {
                None
            };
            render_svg(&patch, &sys.lattice, att.as_deref(), &out)?;
            println!("{} points written to {}", patch.total(), out.display());
        }
        Command::Full(s) => {
            let sys = load(&s.spec)?;
            let r = Analysis::new(&sys, cfg).full()?;
            println!("{}", r.overall.verdict);
            let checks = serde_json::to_value(&r.checks).map_err(Error::from)?;
            for (name, c) in checks.as_object().into_iter().flatten() {
                println!(
                    "  {name:20} {:12} {}",
                    c["grade"].as_str().unwrap_or("?"),
                    c["summary"].as_str().unwrap_or("")
                );
            }
            if let Some(p) = report {
                emit_report(&r, p)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("latsub: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) if e.is_budget() => {
            eprintln!("latsub: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Run(e)) => {
            eprintln!("latsub: {e}");
            ExitCode::from(1)
        }
    }
}
