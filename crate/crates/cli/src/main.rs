//! `cyclestat`: command-line access to the word counts, walk statistics, perturbation checks,
//! zeta functions and entropy computations of the `cyclestat` library.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_complex::Complex64;
use serde_json::{json, Value};

use cyclestat::error::Error;
use cyclestat::free_group::{
    bias_classes, bias_ranking, count_cyclically_reduced, for_each_cyclically_reduced, free_group_c,
    gaussian_limit_sigma2, gaussian_limit_sigma2_derived, homology_table, homology_table_by_enumeration,
    marginal_series, max_deviation_from_zero_class, max_ratio_deviation, modp_table, modp_table_characters,
    predicted_even_classes, total_exponent_modp, CountTable, empirical_distribution_report_with,
};
use cyclestat::graph::{free_group_graph, MultiGraph};
use cyclestat::linalg::{self, Mat};
use cyclestat::perturbation::{
    clt_second_coefficient, exp_perturbation, finite_difference, lambda_first, lambda_second,
    lambda_second_coordinates, lambda_second_coordinates_printed, lambda_second_eigenvector_form, perron_data,
};
use cyclestat::stats::envelope_decay_rate;
use cyclestat::walks::{
    backtrackless_edge_distribution, checked_line_digraph, clt_variance_backtrackless, clt_variance_vertex,
    edge_variance_forms, exact_cycle_distribution, extrapolated_cycle_variance, finite_group_cycle_distribution,
    integer_gradient, predicted_group_rate, FiniteGroup, FiniteGroupLabeling, PlotRow, WalkDistribution,
};
use cyclestat::zeta::{
    counting_functions_fk, cycle_counts_from_det, entropy_certificate, entropy_closed_form, entropy_critical_point,
    entropy_ds, entropy_minimize, entropy_perron, entropy_s0_gradient, euler_product, primitive_cycle_census,
    series_c_fk, series_cc, series_h, series_h_printed, trace_powers, zeta_det, PowerSeries,
};

#[derive(Parser, Debug)]
#[command(name = "cyclestat", version, about = "Exact counts and limit statistics of cyclically reduced words and closed walks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Output format (each subcommand has a default).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the result here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for the parallel parts (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Series,
    Enumerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModpMethod {
    Fold,
    Characters,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SigmaSource {
    Derived,
    Stated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SeriesKind {
    C,
    H,
    HPrinted,
    Cc,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Number of cyclically reduced words of a given length in F_r.
    CountWords {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        length: usize,
        /// Also count by enumeration.
        #[arg(long)]
        verify: bool,
    },
    /// Cyclically reduced words of a given length counted by abelianization.
    HomologyTable {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        length: usize,
        #[arg(long, value_enum, default_value = "series")]
        method: Method,
    },
    /// Counts by abelianization modulo a prime.
    Modp {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        prime: usize,
        #[arg(long, value_enum, default_value = "fold")]
        method: ModpMethod,
    },
    /// Counts by total exponent modulo a prime and the resulting ranking of residues.
    Bias {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        prime: usize,
    },
    /// Exact distribution of the first exponent sum against its normal limit.
    LimitDist {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        length: usize,
        #[arg(long, value_enum, default_value = "derived")]
        sigma2: SigmaSource,
        /// Emit plot columns (standardized value, mass, normal density) instead of counts.
        #[arg(long)]
        plot: bool,
    },
    /// Limiting variance of a vertex function along closed walks, with an exact check.
    WalkVariance {
        #[arg(long)]
        graph: String,
        /// Comma-separated values, one per vertex.
        #[arg(long, allow_hyphen_values = true)]
        function: String,
        /// Compute the exact distribution at this length (integer functions only).
        #[arg(long)]
        length: Option<usize>,
        #[arg(long)]
        plot: bool,
    },
    /// Statistics of edge functions along backtrackless closed walks.
    Backtrackless {
        #[arg(long)]
        graph: String,
        /// Values on oriented edges, in the order listed in the JSON output.
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["gradient_of", "lift_of"])]
        edge_function: Option<String>,
        /// Use the gradient of this vertex function.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "lift_of")]
        gradient_of: Option<String>,
        /// Use the tail value of this vertex function.
        #[arg(long, allow_hyphen_values = true)]
        lift_of: Option<String>,
        #[arg(long)]
        length: usize,
    },
    /// Closed-walk products in a finite group labeling the vertices.
    GroupWalk {
        #[arg(long)]
        graph: String,
        /// s3, cyclic:P, symmetric:N, or a JSON file with a multiplication table.
        #[arg(long)]
        group: String,
        /// Comma-separated element indices, one per vertex.
        #[arg(long)]
        labels: String,
        /// A length N or a range A..B.
        #[arg(long)]
        length: String,
    },
    /// det(I − uA), primitive cycle census and Euler product.
    Zeta {
        #[arg(long)]
        graph: String,
        #[arg(long, default_value_t = 8)]
        order: usize,
    },
    /// Word, cyclically reduced word and conjugacy class counts for F_k.
    Conjugacy {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        max_length: usize,
        /// Print the coefficients of one generating series instead.
        #[arg(long, value_enum)]
        series: Option<SeriesKind>,
    },
    /// Entropy s0(f) of vertex-weighted cycles, or its minimum over the simplex.
    Entropy {
        #[arg(long, conflicts_with = "graph")]
        matrix: Option<String>,
        #[arg(long)]
        graph: Option<String>,
        /// Fixed weights; omit to minimize.
        #[arg(long)]
        weights: Option<String>,
    },
    /// First and second eigenvalue perturbation coefficients against finite differences.
    PerturbCheck {
        #[arg(long, conflicts_with = "graph")]
        matrix: Option<String>,
        #[arg(long)]
        graph: Option<String>,
        /// The perturbation is diag(exp(i f x)).
        #[arg(long, allow_hyphen_values = true)]
        function: String,
        #[arg(long, default_value_t = 1e-3)]
        h1: f64,
        #[arg(long, default_value_t = 1e-4)]
        h2: f64,
    },
}

type Res<T> = std::result::Result<T, Error>;

fn bad<T>(msg: impl Into<String>) -> Res<T> {
    Err(Error::InvalidArgument(msg.into()))
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Res<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| Error::Parse(format!("cannot parse {x:?} in list {s:?}"))))
        .collect()
}

fn parse_offsets(s: &str) -> Res<Vec<usize>> {
    parse_list(s)
}

fn num(s: &str) -> Res<usize> {
    s.parse().map_err(|_| Error::Parse(format!("expected a number, got {s:?}")))
}

/// `builtin:NAME` or a path to a graph JSON file.
fn load_graph(arg: &str) -> Res<MultiGraph> {
    let Some(name) = arg.strip_prefix("builtin:") else {
        return MultiGraph::from_json_file(Path::new(arg));
    };
    let parts: Vec<&str> = name.split(':').collect();
    match parts.as_slice() {
        ["k3"] => Ok(MultiGraph::complete(3)),
        ["k4"] => Ok(MultiGraph::complete(4)),
        ["petersen"] => Ok(MultiGraph::petersen()),
        ["complete", n] => Ok(MultiGraph::complete(num(n)?)),
        ["cycle", n] => Ok(MultiGraph::cycle(num(n)?)),
        ["free", r] => free_group_graph(num(r)?),
        ["circulant", n, offs] => Ok(MultiGraph::directed_circulant(num(n)?, &parse_offsets(offs)?)),
        [g] if g.starts_with('g') && g.len() > 1 => free_group_graph(num(&g[1..])?),
        _ => bad(format!("unknown builtin graph {name:?}; known: k3, k4, petersen, gR, complete:N, cycle:N, free:R, circulant:N:A,B")),
    }
}

/// `a,b;c,d` inline, or a path to a JSON array of rows.
fn load_matrix(arg: &str) -> Res<Mat> {
    let rows: Vec<Vec<f64>> = if Path::new(arg).is_file() {
        serde_json::from_str(&fs::read_to_string(arg)?)?
    } else {
        arg.split(';').map(parse_list).collect::<Res<_>>()?
    };
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return bad("matrix must be square and non-empty");
    }
    Ok(linalg::from_rows(&rows))
}

fn matrix_input(matrix: &Option<String>, graph: &Option<String>) -> Res<Mat> {
    match (matrix, graph) {
        (Some(m), _) => load_matrix(m),
        (None, Some(g)) => Ok(load_graph(g)?.adjacency_f64()),
        (None, None) => bad("give --matrix or --graph"),
    }
}

fn graph_meta(g: &MultiGraph) -> Value {
    json!({
        "vertices": g.n(),
        "directed": g.is_directed(),
        "connected": g.is_connected(),
        "regular_degree": g.regular_degree(),
        "bipartite": !g.is_directed() && g.is_bipartite(),
        "primitive": g.is_primitive(),
        "period": g.period(),
    })
}

fn check_rank_len(rank: usize, length: usize) -> Res<()> {
    if rank < 2 {
        return bad("--rank must be at least 2");
    }
    if length < 1 {
        return bad("--length must be at least 1");
    }
    Ok(())
}

fn check_prime(p: usize) -> Res<()> {
    if !cyclestat::free_group::is_prime(p) {
        return bad(format!("--prime {p} is not prime"));
    }
    Ok(())
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Res<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        w.write_record(&r).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn table_json(t: &CountTable) -> Value {
    t.to_json()
}

fn plot_json(rows: &[PlotRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "value": r.value,
                    "standardized": r.standardized,
                    "count": r.count.to_string(),
                    "mass": r.mass,
                    "gaussian_prediction": r.gaussian_prediction,
                    "normal_density": r.normal_density,
                })
            })
            .collect(),
    )
}

fn plot_csv(rows: &[PlotRow]) -> Res<String> {
    csv_string(
        &["value", "standardized", "count", "mass", "gaussian_prediction", "normal_density"],
        rows.iter().map(|r| {
            vec![
                r.value.to_string(),
                r.standardized.to_string(),
                r.count.to_string(),
                r.mass.to_string(),
                r.gaussian_prediction.to_string(),
                r.normal_density.to_string(),
            ]
        }),
    )
}

fn big(x: &BigInt) -> Value {
    Value::String(x.to_string())
}

fn bigs(v: &[BigInt]) -> Value {
    Value::Array(v.iter().map(big).collect())
}

fn series_json(s: &PowerSeries) -> Value {
    s.to_json()
}

fn run(cli: &Cli) -> Res<String> {
    let fmt = cli.common.format;
    let json_out = |v: Value| Ok(pretty(&v));
    match &cli.command {
        Command::CountWords { rank, length, verify } => {
            check_rank_len(*rank, *length)?;
            let count = count_cyclically_reduced(*rank, *length)?;
            let enumerated = if *verify {
                let mut n = 0u64;
                for_each_cyclically_reduced(*rank, *length, |_| n += 1)?;
                Some(BigInt::from(n))
            } else {
                None
            };
            match fmt {
                None => Ok(format!("{count}\n")),
                Some(Format::Csv) => {
                    let mut row = vec![rank.to_string(), length.to_string(), count.to_string()];
                    let mut header = vec!["rank", "length", "count"];
                    if let Some(e) = &enumerated {
                        header.push("enumerated");
                        row.push(e.to_string());
                    }
                    csv_string(&header, [row])
                }
                Some(Format::Json) => json_out(json!({
                    "command": "count-words",
                    "rank": rank,
                    "length": length,
                    "count": big(&count),
                    "enumerated": enumerated.as_ref().map(big),
                })),
            }
        }
        Command::HomologyTable { rank, length, method } => {
            check_rank_len(*rank, *length)?;
            let table = match method {
                Method::Series => homology_table(*rank, *length)?,
                Method::Enumerate => homology_table_by_enumeration(*rank, *length)?,
            };
            match fmt.unwrap_or(Format::Json) {
                Format::Csv => Ok(table.to_csv_string()),
                Format::Json => json_out(json!({
                    "command": "homology-table",
                    "rank": rank,
                    "length": length,
                    "total": big(&table.total()),
                    "table": table_json(&table),
                })),
            }
        }
        Command::Modp { rank, length, prime, method } => {
            check_rank_len(*rank, *length)?;
            check_prime(*prime)?;
            let table = match method {
                ModpMethod::Fold => modp_table(*rank, *length, *prime)?,
                ModpMethod::Characters => modp_table_characters(*rank, *length, *prime)?,
            };
            match fmt.unwrap_or(Format::Json) {
                Format::Csv => Ok(table.to_csv_string()),
                Format::Json => json_out(json!({
                    "command": "modp",
                    "rank": rank,
                    "length": length,
                    "prime": prime,
                    "total": big(&table.total()),
                    "max_deviation_from_zero_class": max_deviation_from_zero_class(&table),
                    "max_ratio_deviation": max_ratio_deviation(&table, *prime),
                    "table": table_json(&table),
                })),
            }
        }
        Command::Bias { rank, length, prime } => {
            check_rank_len(*rank, *length)?;
            check_prime(*prime)?;
            let counts = total_exponent_modp(*rank, *length, *prime)?;
            let ranking = bias_ranking(*rank, *length, *prime)?;
            match fmt.unwrap_or(Format::Json) {
                Format::Csv => csv_string(
                    &["residue", "count"],
                    counts.iter().enumerate().map(|(q, c)| vec![q.to_string(), c.to_string()]),
                ),
                Format::Json => {
                    let mut predicted = vec![vec![0usize]];
                    predicted.extend(predicted_even_classes(*prime));
                    if length % 2 == 1 {
                        predicted.reverse();
                    }
                    json_out(json!({
                        "command": "bias",
                        "rank": rank,
                        "length": length,
                        "prime": prime,
                        "counts": bigs(&counts),
                        "ranking": ranking.iter().map(|(q, _)| q).collect::<Vec<_>>(),
                        "classes": bias_classes(&ranking),
                        "predicted_classes": predicted,
                        "matches_prediction": bias_classes(&ranking) == predicted,
                    }))
                }
            }
        }
        Command::LimitDist { rank, length, sigma2, plot } => {
            check_rank_len(*rank, *length)?;
            let c = free_group_c(*rank);
            let s2 = match sigma2 {
                SigmaSource::Derived => gaussian_limit_sigma2_derived(c, *rank)?,
                SigmaSource::Stated => gaussian_limit_sigma2(c, *rank)?,
            };
            let m = marginal_series(*rank, *length)?;
            let values = m.terms().map(|(e, c)| (e[0] as i64, c.clone())).collect();
            let dist = WalkDistribution::new(*length, values);
            let report = empirical_distribution_report_with(*rank, *length, s2)?;
            let rows = dist.plot_rows(0.0, s2);
            match (fmt.unwrap_or(Format::Json), plot) {
                (Format::Csv, true) => plot_csv(&rows),
                (Format::Csv, false) => Ok(dist.to_csv_string()),
                (Format::Json, _) => {
                    let mut v = json!({
                        "command": "limit-dist",
                        "rank": rank,
                        "length": length,
                        "c": c,
                        "sigma2": s2,
                        "sigma2_source": format!("{sigma2:?}").to_lowercase(),
                        "variance_per_step": report.variance_f64(),
                        "l1_to_normal": report.l1,
                    });
                    if *plot {
                        v["plot"] = plot_json(&rows);
                    } else {
                        v["distribution"] = dist.to_json();
                    }
                    json_out(v)
                }
            }
        }
        Command::WalkVariance { graph, function, length, plot } => {
            let g = load_graph(graph)?;
            let f: Vec<f64> = parse_list(function)?;
            let sigma2 = clt_variance_vertex(&g, &f)?;
            let mut v = json!({
                "command": "walk-variance",
                "hypotheses": graph_meta(&g),
                "function": f,
                "sigma2": sigma2,
            });
            let mut dist = None;
            if let Some(n) = length {
                if f.iter().any(|x| x.fract() != 0.0) {
                    return bad("--length needs an integer-valued --function");
                }
                let fi: Vec<i64> = f.iter().map(|&x| x as i64).collect();
                let d = exact_cycle_distribution(&g, &fi, *n)?;
                v["length"] = json!(n);
                v["exact_variance_per_step"] = json!(d.variance_f64() / *n as f64);
                if *n >= 2 {
                    v["extrapolated_variance"] = json!(extrapolated_cycle_variance(&g, &fi, *n)?);
                }
                dist = Some(d);
            }
            match (fmt.unwrap_or(Format::Json), dist) {
                (Format::Csv, Some(d)) if *plot => {
                    let mu = d.mean_f64() / d.n_steps() as f64;
                    plot_csv(&d.plot_rows(mu, sigma2))
                }
                (Format::Csv, Some(d)) => Ok(d.to_csv_string()),
                (Format::Csv, None) => csv_string(&["sigma2"], [vec![sigma2.to_string()]]),
                (Format::Json, Some(d)) => {
                    if *plot {
                        let mu = d.mean_f64() / d.n_steps() as f64;
                        v["plot"] = plot_json(&d.plot_rows(mu, sigma2));
                    } else {
                        v["distribution"] = d.to_json();
                    }
                    json_out(v)
                }
                (Format::Json, None) => json_out(v),
            }
        }
        Command::Backtrackless { graph, edge_function, gradient_of, lift_of, length } => {
            let g = load_graph(graph)?;
            let (l, d) = checked_line_digraph(&g)?;
            let (w, kind, backtrackless_sigma2): (Vec<i64>, &str, Option<f64>) =
                match (edge_function, gradient_of, lift_of) {
                    (Some(e), None, None) => (parse_list(e)?, "edge", None),
                    (None, Some(u), None) => {
                        let u: Vec<i64> = parse_list(u)?;
                        if u.len() != g.n() {
                            return Err(Error::DimensionMismatch { expected: g.n(), got: u.len() });
                        }
                        (integer_gradient(&l, &u), "gradient", None)
                    }
                    (None, None, Some(f)) => {
                        let f: Vec<i64> = parse_list(f)?;
                        if f.len() != g.n() {
                            return Err(Error::DimensionMismatch { expected: g.n(), got: f.len() });
                        }
                        let ff: Vec<f64> = f.iter().map(|&x| x as f64).collect();
                        let s = clt_variance_backtrackless(&g, &ff)?;
                        ((0..l.n()).map(|e| f[l.tail(e)]).collect(), "lift", Some(s))
                    }
                    _ => return bad("give exactly one of --edge-function, --gradient-of, --lift-of"),
                };
            if w.len() != l.n() {
                return Err(Error::DimensionMismatch { expected: l.n(), got: w.len() });
            }
            let wf: Vec<f64> = w.iter().map(|&x| x as f64).collect();
            let forms = edge_variance_forms(&g, &wf)?;
            let dist = backtrackless_edge_distribution(&g, &w, *length)?;
            match fmt.unwrap_or(Format::Json) {
                Format::Csv => Ok(dist.to_csv_string()),
                Format::Json => json_out(json!({
                    "command": "backtrackless",
                    "hypotheses": graph_meta(&g),
                    "line_digraph_out_degree": d,
                    "edges": (0..l.n()).map(|e| [l.tail(e), l.head(e)]).collect::<Vec<_>>(),
                    "function_kind": kind,
                    "edge_function": w,
                    "sigma2": forms.shipped,
                    "sigma2_quadratic_form_as_quoted": forms.quadratic_printed,
                    "sigma2_laplacian_form_as_quoted": forms.laplacian_printed,
                    "sigma2_vertex_lift": backtrackless_sigma2,
                    "length": length,
                    "point_mass": dist.is_point_mass(),
                    "distribution": dist.to_json(),
                })),
            }
        }
        Command::GroupWalk { graph, group, labels, length } => {
            let g = load_graph(graph)?;
            let grp = if Path::new(group).is_file() {
                FiniteGroup::from_json_value(&serde_json::from_str(&fs::read_to_string(group)?)?)?
            } else {
                FiniteGroup::builtin(group)?
            };
            let lab = FiniteGroupLabeling::new(grp, parse_list(labels)?)?;
            if lab.labels().len() != g.n() {
                return Err(Error::DimensionMismatch { expected: g.n(), got: lab.labels().len() });
            }
            let hyp = lab.hypotheses();
            let hyp_json = json!({
                "graph": graph_meta(&g),
                "group_order": hyp.group_order,
                "generated_order": hyp.generated_order,
                "generates": hyp.generates,
                "separated_by_characters": hyp.separated_by_characters,
            });
            let predicted = predicted_group_rate(&g, &lab)?;
            if let Some((a, b)) = length.split_once("..") {
                let (a, b) = (num(a)?, num(b)?);
                if a < 1 || b < a {
                    return bad("--length range must be A..B with 1 <= A <= B");
                }
                let points: Vec<(usize, f64)> = (a..=b)
                    .map(|n| finite_group_cycle_distribution(&g, &lab, n).map(|d| (n, d.tv_from_uniform())))
                    .collect::<Res<_>>()?;
                let fp: Vec<(f64, f64)> = points.iter().map(|&(n, t)| (n as f64, t)).collect();
                let measured = envelope_decay_rate(&fp);
                match fmt.unwrap_or(Format::Json) {
                    Format::Csv => csv_string(&["length", "tv"], points.iter().map(|(n, t)| vec![n.to_string(), t.to_string()])),
                    Format::Json => json_out(json!({
                        "command": "group-walk",
                        "hypotheses": hyp_json,
                        "labels": lab.labels(),
                        "tv": points.iter().map(|(n, t)| json!({"length": n, "tv": t})).collect::<Vec<_>>(),
                        "measured_rate": measured,
                        "predicted_rate": predicted,
                    })),
                }
            } else {
                let n = num(length)?;
                let d = finite_group_cycle_distribution(&g, &lab, n)?;
                match fmt.unwrap_or(Format::Json) {
                    Format::Csv => csv_string(
                        &["element", "count"],
                        d.counts.iter().enumerate().map(|(i, c)| vec![i.to_string(), c.to_string()]),
                    ),
                    Format::Json => json_out(json!({
                        "command": "group-walk",
                        "hypotheses": hyp_json,
                        "labels": lab.labels(),
                        "length": n,
                        "counts": bigs(&d.counts),
                        "tv": d.tv_from_uniform(),
                        "predicted_rate": predicted,
                    })),
                }
            }
        }
        Command::Zeta { graph, order } => {
            let g = load_graph(graph)?;
            if *order < 1 {
                return bad("--order must be at least 1");
            }
            let det = zeta_det(&g);
            let census = primitive_cycle_census(&g, *order);
            let euler = euler_product(&census, *order);
            let mut det_trunc = det.clone();
            det_trunc.resize((*order).max(det.len() - 1) + 1, BigInt::from(0));
            let census_match = euler[..] == det_trunc[..=*order];
            let walks = cycle_counts_from_det(&det, *order)?;
            let traces = trace_powers(&g, *order);
            let trace_match = walks[1..] == traces[1..];
            match fmt.unwrap_or(Format::Json) {
                Format::Csv => csv_string(
                    &["index", "det_coefficient", "euler_product", "primitive_classes", "closed_walks"],
                    (0..=*order).map(|i| {
                        vec![
                            i.to_string(),
                            det_trunc[i].to_string(),
                            euler[i].to_string(),
                            census.get(&i).map(|c| c.to_string()).unwrap_or_default(),
                            if i == 0 { String::new() } else { traces[i].to_string() },
                        ]
                    }),
                ),
                Format::Json => json_out(json!({
                    "command": "zeta",
                    "hypotheses": graph_meta(&g),
                    "order": order,
                    "det_coefficients": bigs(&det),
                    "primitive_classes": census.iter().map(|(l, c)| json!({"length": l, "count": big(c)})).collect::<Vec<_>>(),
                    "euler_product": bigs(&euler),
                    "census_match": census_match,
                    "closed_walks": bigs(&traces[1..]),
                    "log_derivative_match": trace_match,
                })),
            }
        }
        Command::Conjugacy { rank, max_length, series } => {
            if *rank < 2 {
                return bad("--rank must be at least 2");
            }
            if let Some(kind) = series {
                let s = match kind {
                    SeriesKind::C => series_c_fk(*rank, *max_length)?,
                    SeriesKind::H => series_h(*rank, *max_length)?,
                    SeriesKind::HPrinted => series_h_printed(*rank, *max_length)?,
                    SeriesKind::Cc => series_cc(*rank, *max_length)?,
                };
                return match fmt.unwrap_or(Format::Json) {
                    Format::Csv => Ok(s.to_csv_string()),
                    Format::Json => json_out(json!({
                        "command": "conjugacy",
                        "rank": rank,
                        "series": format!("{kind:?}").to_lowercase(),
                        "coefficients": series_json(&s),
                    })),
                };
            }
            let rows = counting_functions_fk(*rank, *max_length)?;
            match fmt.unwrap_or(Format::Json) {
                Format::Csv => csv_string(
                    &["length", "elements", "cyclically_reduced", "conjugacy_classes"],
                    rows.iter().map(|r| vec![r.r.to_string(), r.n.to_string(), r.c.to_string(), r.cc.to_string()]),
                ),
                Format::Json => json_out(json!({
                    "command": "conjugacy",
                    "rank": rank,
                    "rows": rows.iter().map(|r| json!({
                        "length": r.r,
                        "elements": big(&r.n),
                        "cyclically_reduced": big(&r.c),
                        "conjugacy_classes": big(&r.cc),
                    })).collect::<Vec<_>>(),
                })),
            }
        }
        Command::Entropy { matrix, graph, weights } => {
            let a = matrix_input(matrix, graph)?;
            if a.iter().any(|&x| x < 0.0) {
                return bad("matrix entries must be nonnegative");
            }
            if let Some(w) = weights {
                let f: Vec<f64> = parse_list(w)?;
                let (s0, grad) = entropy_s0_gradient(&a, &f)?;
                let pd = entropy_perron(&a, &f, s0)?;
                let cert = entropy_certificate(&a, &f, s0)?;
                return match fmt.unwrap_or(Format::Json) {
                    Format::Csv => csv_string(
                        &["vertex", "weight", "ds0_df"],
                        f.iter().zip(&grad).enumerate().map(|(i, (x, g))| vec![i.to_string(), x.to_string(), g.to_string()]),
                    ),
                    Format::Json => json_out(json!({
                        "command": "entropy",
                        "weights": f,
                        "s0": s0,
                        "ds0_df": grad,
                        "drho_ds": entropy_ds(&pd, &f),
                        "rho_residual": (pd.lambda - 1.0).abs(),
                        "certificate": {"eigen_residual": cert.eigen_residual, "constancy_residual": cert.constancy_residual},
                    })),
                };
            }
            let opt = entropy_minimize(&a)?;
            let closed = entropy_closed_form(&a).ok();
            let critical = entropy_critical_point(&a).ok();
            match fmt.unwrap_or(Format::Json) {
                Format::Csv => csv_string(
                    &["vertex", "f_star"],
                    opt.f_star.iter().enumerate().map(|(i, x)| vec![i.to_string(), x.to_string()]),
                ),
                Format::Json => {
                    let mut v = opt.to_json();
                    v["command"] = json!("entropy");
                    v["row_sum_closed_form"] = closed.map_or(Value::Null, |(f, s)| json!({"f": f, "s0": s}));
                    v["interior_critical_point"] = critical.map_or(Value::Null, |(f, s)| json!({"f": f, "s0": s}));
                    json_out(v)
                }
            }
        }
        Command::PerturbCheck { matrix, graph, function, h1, h2 } => {
            let m = matrix_input(matrix, graph)?;
            let f: Vec<f64> = parse_list(function)?;
            if f.len() != m.nrows() {
                return Err(Error::DimensionMismatch { expected: m.nrows(), got: f.len() });
            }
            if !(*h1 > *h2 && *h2 > 0.0) {
                return bad("need --h1 > --h2 > 0");
            }
            let pd = perron_data(&m)?;
            let (d1, d2) = exp_perturbation(&f);
            let l1 = lambda_first(&pd, &d1)?;
            let l2 = lambda_second(&pd, &d1, &d2)?;
            let l2_eig = lambda_second_eigenvector_form(&pd, &d1, &d2)?;
            let coords = lambda_second_coordinates(&pd, &d1, &d2).ok();
            let coords_printed = lambda_second_coordinates_printed(&pd, &d1, &d2).ok();
            let ff = f.clone();
            let fd = finite_difference(&pd, move |x| ff.iter().map(|&fi| Complex64::new(0.0, fi * x).exp()).collect(), *h1, *h2)?;
            let mean = f.iter().sum::<f64>() / f.len() as f64;
            let f0: Vec<f64> = f.iter().map(|x| x - mean).collect();
            let clt = clt_second_coefficient(&m, &f0).ok();
            let c = |z: Complex64| json!([z.re, z.im]);
            let rel = |a: Complex64, b: Complex64| if b.norm() > 0.0 { (a - b).norm() / b.norm() } else { (a - b).norm() };
            match fmt.unwrap_or(Format::Json) {
                Format::Csv => csv_string(
                    &["quantity", "re", "im"],
                    [
                        ("lambda_first", l1),
                        ("lambda_first_fd", fd.first),
                        ("lambda_second", l2),
                        ("lambda_second_fd", fd.second),
                    ]
                    .into_iter()
                    .map(|(n, z)| vec![n.to_string(), z.re.to_string(), z.im.to_string()]),
                ),
                Format::Json => json_out(json!({
                    "command": "perturb-check",
                    "hypotheses": {
                        "eigen_residual": pd.eigen_residual(),
                        "symmetric": pd.is_symmetric(),
                        "constant_eigenvector": pd.is_constant_eigenvector(1e-9),
                    },
                    "lambda": pd.lambda,
                    "lambda_first": c(l1),
                    "lambda_second": c(l2),
                    "lambda_second_eigenvector_form": c(l2_eig),
                    "lambda_second_coordinates": coords.map(c),
                    "lambda_second_coordinates_as_quoted": coords_printed.map(c),
                    "finite_difference": {"h1": h1, "h2": h2, "first": c(fd.first), "second": c(fd.second)},
                    "relative_error_first": rel(fd.first, l1),
                    "relative_error_second": rel(fd.second, l2),
                    "clt_second_coefficient": clt,
                })),
            }
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::Parse(_) | Error::Json(_) => 2,
        Error::Hypothesis(_) => 3,
        Error::Singular(_) | Error::NoConvergence(_) | Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.common.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    log::debug!("{:?}", cli.command);
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.common.output {
                Some(p) => fs::write(p, out.as_bytes()),
                None => {
                    print!("{out}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

