use std::fs;
use std::path::Path;
use std::str::FromStr;

use cellia::channel::{generate, ChannelDump, ChannelSet};
use cellia::converse::{self, bound_report, f_m_table, general_m_bound, integer_oracle, Fraction, Q};
use cellia::ia_schemes::{solve, BeamformerSolution, SchemeTag, SolutionDump};
use cellia::lattice::{build_graph, inactive_set_and_clusters, GraphExport, InterferenceGraph};
use cellia::verifier::{certify_alignment, measure_rates, Certificate, InterferenceModel, RateReport};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{BoundArgs, CertifyArgs, Format, GraphArgs, Model, OracleArgs, RunArgs, SweepArgs, TableArgs};
use crate::CliError;

/// A rendered report and whether it represents a certification failure.
pub struct Report {
    pub body: String,
    pub extension: &'static str,
    pub certified: bool,
}

impl Report {
    fn json<T: Serialize>(value: &T) -> Result<Self, CliError> {
        Ok(Self {
            body: canonical_json(value)?,
            extension: "json",
            certified: true,
        })
    }

    fn csv(body: String) -> Self {
        Self {
            body,
            extension: "csv",
            certified: true,
        }
    }

    fn certified(mut self, pass: bool) -> Self {
        self.certified = pass;
        self
    }
}

/// Pretty JSON with object keys in sorted order.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v: Value = serde_json::to_value(value).map_err(|e| CliError::Config(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn exact(r: num_rational::Ratio<i64>) -> Fraction {
    Fraction(Q::new(*r.numer() as i128, *r.denom() as i128))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::io(path, e))
}

fn scheme_for(m: u32, n: u32) -> Result<SchemeTag, CliError> {
    Ok(SchemeTag::for_antennas(m as usize, n as usize)?)
}

pub fn graph(args: &GraphArgs) -> Result<Report, CliError> {
    let g = build_graph(args.r)?;
    let partition = inactive_set_and_clusters(&g);
    Report::json(&GraphExport::new(&g, &partition))
}

struct Pipeline {
    graph: InterferenceGraph,
    channels: ChannelSet,
    solution: BeamformerSolution,
    certificate: Certificate,
}

fn pipeline(r: u32, m: u32, n: u32, seed: u64, tolerance: f64) -> Result<Pipeline, CliError> {
    scheme_for(m, n)?;
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(CliError::Config(format!("tolerance must be positive, got {tolerance}")));
    }
    let graph = build_graph(r)?;
    let partition = inactive_set_and_clusters(&graph);
    let channels = generate(&graph, m as usize, n as usize, seed);
    let solution = solve(&graph, &partition, &channels)?;
    let certificate = certify_alignment(&graph, &channels, &solution, tolerance, InterferenceModel::Directed);
    Ok(Pipeline {
        graph,
        channels,
        solution,
        certificate,
    })
}

#[derive(Serialize)]
struct RateSummary<'a> {
    powers: &'a [f64],
    average_rate: &'a [f64],
    average_dof_slope: f64,
    cells: &'a [cellia::verifier::CellRate],
}

impl<'a> From<&'a RateReport> for RateSummary<'a> {
    fn from(r: &'a RateReport) -> Self {
        Self {
            powers: &r.powers,
            average_rate: &r.average_rate,
            average_dof_slope: r.average_dof_slope,
            cells: &r.cells,
        }
    }
}

pub fn run(args: &RunArgs) -> Result<Report, CliError> {
    let p = pipeline(args.r, args.m, args.n, args.seed, args.tolerance)?;
    let rates = measure_rates(&p.graph, &p.channels, &p.solution, &args.powers)?;
    let dump = p.solution.dump(Some(p.certificate.summary()));
    if let Some(path) = &args.dump_channels {
        write_file(path, &canonical_json(&ChannelDump::from(&p.channels))?)?;
    }
    if let Some(path) = &args.dump_solution {
        write_file(path, &canonical_json(&dump)?)?;
    }
    let pass = p.certificate.pass;
    let report = match args.format {
        Format::Csv => Report::csv(rates.to_csv()),
        Format::Json => Report::json(&json!({
            "command": "run",
            "r": args.r,
            "M": args.m,
            "N": args.n,
            "seed": args.seed,
            "scheme": p.solution.scheme,
            "vertices": p.graph.len(),
            "average_dof": exact(p.solution.average_dof()),
            "demoted": p.solution.demoted,
            "warnings": p.solution.warnings,
            "certificate": p.certificate,
            "rates": RateSummary::from(&rates),
            "solution": dump,
        }))?,
    };
    Ok(report.certified(pass))
}

pub fn certify(args: &CertifyArgs) -> Result<Report, CliError> {
    let channels = read_json::<ChannelDump>(&args.channels)?.into_channel_set()?;
    let solution = read_json::<SolutionDump>(&args.solution)?.into_solution()?;
    if (solution.m, solution.n) != (channels.m, channels.n) {
        return Err(CliError::Config(format!(
            "solution is {}x{} but channels are {}x{}",
            solution.m, solution.n, channels.m, channels.n
        )));
    }
    let graph = build_graph(solution.r)?;
    let model = match args.model {
        Model::Directed => InterferenceModel::Directed,
        Model::AllNeighbors => InterferenceModel::AllNeighbors,
    };
    let cert = certify_alignment(&graph, &channels, &solution, args.tolerance, model);
    let pass = cert.pass;
    Ok(Report::json(&json!({
        "command": "certify",
        "r": solution.r,
        "scheme": solution.scheme,
        "average_dof": exact(solution.average_dof()),
        "certificate": cert,
    }))?
    .certified(pass))
}

fn parse_fraction(s: &str) -> Result<Q, CliError> {
    Q::from_str(s.trim()).map_err(|_| CliError::Config(format!("expected a fraction such as 1/4, got {s:?}")))
}

pub fn bound(args: &BoundArgs) -> Result<Report, CliError> {
    let g = build_graph(args.r)?;
    let lambda = args.lambda.as_deref().map(parse_fraction).transpose()?;
    Report::json(&bound_report(&g, args.m, lambda, args.oracle)?)
}

pub fn table(args: &TableArgs) -> Result<Report, CliError> {
    if args.m == 0 {
        return Err(CliError::Config("M must be at least 1".into()));
    }
    let rows = f_m_table(args.m);
    match args.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["config", "s", "g", "f_M", "max"])
                .map_err(|e| CliError::Config(e.to_string()))?;
            for row in &rows {
                w.write_record([
                    row.config.to_string(),
                    row.s.to_string(),
                    row.g.to_string(),
                    row.f.0.to_string(),
                    if row.is_max { "*".into() } else { String::new() },
                ])
                .map_err(|e| CliError::Config(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
            Ok(Report::csv(String::from_utf8(bytes).expect("utf-8 fields")))
        }
        Format::Json => {
            let limit = converse::q(2 * args.m as i128, 5);
            let max = general_m_bound(args.m);
            Report::json(&json!({
                "M": args.m,
                "rows": rows,
                "max": Fraction(max),
                "ceiling": { "limit": Fraction(limit), "holds": max <= limit },
            }))
        }
    }
}

#[derive(Serialize)]
struct SweepRow {
    r: u32,
    vertices: usize,
    achieved_dof: Fraction,
    certified: bool,
    dual_bound: Option<Fraction>,
}

pub fn sweep(args: &SweepArgs) -> Result<Report, CliError> {
    let mut rows = Vec::new();
    for &r in &args.r_list {
        let p = pipeline(r, args.m, args.n, args.seed, args.tolerance)?;
        let dual_bound = if args.m == args.n {
            Some(bound_report(&p.graph, args.m, None, false)?.dual_bound)
        } else {
            None
        };
        rows.push(SweepRow {
            r,
            vertices: p.graph.len(),
            achieved_dof: exact(p.solution.average_dof()),
            certified: p.certificate.pass,
            dual_bound,
        });
    }
    let pass = rows.iter().all(|r| r.certified);
    let report = match args.format {
        Format::Json => Report::json(&json!({
            "command": "sweep",
            "M": args.m,
            "N": args.n,
            "seed": args.seed,
            "series": rows,
        }))?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "r",
                "vertices",
                "achieved_dof",
                "achieved_dof_approx",
                "certified",
                "dual_bound",
                "dual_bound_approx",
            ])
            .map_err(|e| CliError::Config(e.to_string()))?;
            for row in &rows {
                let (db, dba) = match row.dual_bound {
                    Some(f) => (f.0.to_string(), converse::to_f64(&f.0).to_string()),
                    None => (String::new(), String::new()),
                };
                w.write_record([
                    row.r.to_string(),
                    row.vertices.to_string(),
                    row.achieved_dof.0.to_string(),
                    converse::to_f64(&row.achieved_dof.0).to_string(),
                    row.certified.to_string(),
                    db,
                    dba,
                ])
                .map_err(|e| CliError::Config(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
            Report::csv(String::from_utf8(bytes).expect("utf-8 fields"))
        }
    };
    Ok(report.certified(pass))
}

pub fn oracle(args: &OracleArgs) -> Result<Report, CliError> {
    let g = build_graph(args.r)?;
    let best = integer_oracle(&g, args.m)?;
    let bound = bound_report(&g, args.m, None, false)?;
    Report::json(&json!({
        "command": "oracle",
        "r": args.r,
        "M": args.m,
        "vertices": g.len(),
        "oracle_value": best.value,
        "oracle_total": best.total,
        "oracle_dofs": best.dofs,
        "lp_value": bound.lp_value,
        "dual_bound": bound.dual_bound,
        "lambda": bound.lambda,
    }))
}
