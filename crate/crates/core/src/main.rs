//! Command-line front end: parameter sweeps, scan orchestration, and
//! plot-ready data emission.
//!
//! Every output carries a header echoing the full configuration and the
//! crate version, so identical invocations produce identical files.
//! Exit codes: 0 ok, 2 usage error, 3 numerical failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fermichain::covariance::{dispersion, symbol_eval, CovarianceTruncation, XYParams};
use fermichain::diagnostics::{cluster_scan, divergence_scan, log_fit, ClassifyThresholds};
use fermichain::entanglement::{entropy_scan, localization_length, one_copy_scan, SeesawOptions};
use fermichain::error::{Error, Result};
use fermichain::io::dump_covariance;
use fermichain::lattice::Window;
use fermichain::quasifree::{Pauli, PauliString};
use fermichain::resource::{beta_scan_xy, chsh_beta, chsh_beta_ascent, omega1_rdm, PairedState};

#[derive(Parser)]
#[command(name = "fermichain", version, about = "XY-chain free-fermion diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Resource {
    Xy,
    Omega1,
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Anisotropy
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    gamma: f64,
    /// Transverse field
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lambda: f64,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output path (stdout when absent)
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the momentum-space symbol and dispersion
    Symbol {
        #[command(flatten)]
        params: ParamArgs,
        /// Number of sample points over [0, 2pi)
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Dump a covariance truncation in the documented matrix format
    Covariance {
        #[command(flatten)]
        params: ParamArgs,
        /// Window as lo:hi (half-open)
        #[arg(long, value_parser = parse_window, default_value = "-4:4", allow_hyphen_values = true)]
        window: Window,
        /// Dump the Majorana form instead of the complex form
        #[arg(long)]
        majorana: bool,
        /// Output path (stdout when absent)
        #[arg(long)]
        out: Option<String>,
    },
    /// Truncated tr(X) ladder with the trace identities per size
    Trx {
        #[command(flatten)]
        params: ParamArgs,
        /// Comma-separated truncation half-widths
        #[arg(long = "N-ladder", value_parser = parse_ladder, default_value = "16,32,64,128")]
        n_ladder: std::vec::Vec<i64>,
        /// Also compute the doubled-window truncation-error estimate
        #[arg(long)]
        error_estimate: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Block entropy S(L) over a ladder of lengths
    Entropy {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_parser = parse_lengths, default_value = "2,4,8,16,32")]
        lengths: std::vec::Vec<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// One-copy entanglement E1(L) next to S(L)
    Onecopy {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_parser = parse_lengths, default_value = "2,4,8,16,32")]
        lengths: std::vec::Vec<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Connected-correlation decay scan with model fits
    Cluster {
        #[command(flatten)]
        params: ParamArgs,
        /// Observable A, e.g. "0:Z" or "0:X,1:X"
        #[arg(long = "a", value_parser = parse_pauli, default_value = "0:Z", allow_hyphen_values = true)]
        obs_a: PauliString,
        /// Observable B (translated by k)
        #[arg(long = "b", value_parser = parse_pauli, default_value = "0:Z", allow_hyphen_values = true)]
        obs_b: PauliString,
        #[arg(long, default_value_t = 16)]
        kmax: i64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Localization-length search over two blocks
    Localize {
        #[arg(long, value_enum, default_value = "xy")]
        resource: Resource,
        #[command(flatten)]
        params: ParamArgs,
        /// Block boundary position
        #[arg(long = "M", default_value_t = 0, allow_hyphen_values = true)]
        m: i64,
        /// Distance between the blocks
        #[arg(long = "N", default_value_t = 0)]
        distance: i64,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long = "l-max", default_value_t = 3)]
        l_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Two-qubit CHSH values for site pairs
    Bell {
        #[arg(long, value_enum, default_value = "xy")]
        resource: Resource,
        #[command(flatten)]
        params: ParamArgs,
        /// Site pair "i,j"; repeatable
        #[arg(long = "pair", value_parser = parse_pair, required = true, allow_hyphen_values = true)]
        pairs: Vec<(i64, i64)>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Structural invariant checks across the built-in presets
    Selftest,
}

fn parse_window(s: &str) -> std::result::Result<Window, String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| "window must be lo:hi".to_string())?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("lo: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("hi: {e}"))?;
    Window::new(lo, hi).map_err(|e| e.to_string())
}

fn parse_ladder(s: &str) -> std::result::Result<Vec<i64>, String> {
    let v: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    if v.is_empty() || !v.windows(2).all(|w| w[0] < w[1]) {
        return Err("ladder must be ascending and non-empty".into());
    }
    Ok(v)
}

fn parse_lengths(s: &str) -> std::result::Result<Vec<usize>, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    if v.is_empty() || !v.windows(2).all(|w| w[0] < w[1]) {
        return Err("lengths must be ascending and non-empty".into());
    }
    Ok(v)
}

fn parse_pauli(s: &str) -> std::result::Result<PauliString, String> {
    let mut letters = Vec::new();
    for part in s.split(',') {
        let (site, letter) = part
            .split_once(':')
            .ok_or_else(|| format!("bad Pauli term '{part}', expected site:letter"))?;
        let site: i64 = site.trim().parse().map_err(|e| format!("site: {e}"))?;
        let letter = match letter.trim().to_ascii_uppercase().as_str() {
            "X" => Pauli::X,
            "Y" => Pauli::Y,
            "Z" => Pauli::Z,
            other => return Err(format!("unknown Pauli letter '{other}'")),
        };
        letters.push((site, letter));
    }
    if letters.is_empty() {
        return Err("empty Pauli string".into());
    }
    Ok(PauliString::from_letters(letters))
}

fn parse_pair(s: &str) -> std::result::Result<(i64, i64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| "pair must be i,j".to_string())?;
    let a: i64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: i64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a == b {
        return Err("pair sites must differ".into());
    }
    Ok((a, b))
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fermichain: error: {e}");
            ExitCode::from(3)
        }
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("FERMICHAIN_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

struct Output {
    writer: Box<dyn Write>,
}

impl Output {
    fn create(path: &Option<String>) -> Result<Self> {
        let writer: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(std::io::stdout().lock()),
        };
        Ok(Output { writer })
    }
}

/// Canonical numeric formatting; non-finite values are hard errors.
fn num(v: f64) -> Result<String> {
    if !v.is_finite() {
        return Err(Error::NonFinite {
            context: "output column",
        });
    }
    Ok(format!("{v:.17e}"))
}

fn csv_header(out: &mut impl Write, config: &serde_json::Value) -> Result<()> {
    writeln!(out, "# fermichain v{}", fermichain::VERSION)?;
    writeln!(out, "# config: {config}")?;
    Ok(())
}

fn json_wrap(config: serde_json::Value, data: serde_json::Value) -> serde_json::Value {
    json!({
        "version": fermichain::VERSION,
        "config": config,
        "data": data,
    })
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Symbol { params, grid, out } => cmd_symbol(params, grid, out),
        Command::Covariance {
            params,
            window,
            majorana,
            out,
        } => cmd_covariance(params, window, majorana, out),
        Command::Trx {
            params,
            n_ladder,
            error_estimate,
            out,
        } => cmd_trx(params, n_ladder, error_estimate, out),
        Command::Entropy {
            params,
            lengths,
            out,
        } => cmd_entropy(params, lengths, out),
        Command::Onecopy {
            params,
            lengths,
            out,
        } => cmd_onecopy(params, lengths, out),
        Command::Cluster {
            params,
            obs_a,
            obs_b,
            kmax,
            out,
        } => cmd_cluster(params, obs_a, obs_b, kmax, out),
        Command::Localize {
            resource,
            params,
            m,
            distance,
            eps,
            l_max,
            seed,
            out,
        } => cmd_localize(resource, params, m, distance, eps, l_max, seed, out),
        Command::Bell {
            resource,
            params,
            pairs,
            seed,
            out,
        } => cmd_bell(resource, params, pairs, seed, out),
        Command::Selftest => cmd_selftest(),
    }
}

fn xy(params: &ParamArgs) -> Result<XYParams> {
    XYParams::new(params.gamma, params.lambda)
}

fn cmd_symbol(params: ParamArgs, grid: usize, out: OutArgs) -> Result<()> {
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()));
    }
    let p = xy(&params)?;
    let config = json!({"cmd": "symbol", "gamma": p.gamma, "lambda": p.lambda, "grid": grid});
    let mut rows = Vec::with_capacity(grid);
    for m in 0..grid {
        let x = 2.0 * std::f64::consts::PI * (m as f64 + 0.5) / grid as f64;
        let k = dispersion(&p, x);
        let b = symbol_eval(&p, x)?;
        rows.push((x, k, b));
    }
    let mut o = Output::create(&out.out)?;
    match out.format {
        Format::Csv => {
            csv_header(&mut o.writer, &config)?;
            writeln!(
                o.writer,
                "x,k,e11_re,e11_im,e12_re,e12_im,e21_re,e21_im,e22_re,e22_im,trace_re"
            )?;
            for (x, k, b) in rows {
                let tr = b.trace();
                let cells = [
                    x,
                    k,
                    b.0[0][0].re,
                    b.0[0][0].im,
                    b.0[0][1].re,
                    b.0[0][1].im,
                    b.0[1][0].re,
                    b.0[1][0].im,
                    b.0[1][1].re,
                    b.0[1][1].im,
                    tr.re,
                ];
                let line: Vec<String> = cells.iter().map(|&v| num(v)).collect::<Result<_>>()?;
                writeln!(o.writer, "{}", line.join(","))?;
            }
        }
        Format::Json => {
            let data: Vec<_> = rows
                .iter()
                .map(|(x, k, b)| {
                    json!({
                        "x": x,
                        "k": k,
                        "e": [
                            [[b.0[0][0].re, b.0[0][0].im], [b.0[0][1].re, b.0[0][1].im]],
                            [[b.0[1][0].re, b.0[1][0].im], [b.0[1][1].re, b.0[1][1].im]]
                        ]
                    })
                })
                .collect();
            serde_json::to_writer_pretty(&mut o.writer, &json_wrap(config, json!(data)))
                .map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(o.writer)?;
        }
    }
    Ok(())
}

fn cmd_covariance(
    params: ParamArgs,
    window: Window,
    majorana: bool,
    out: Option<String>,
) -> Result<()> {
    let p = xy(&params)?;
    let trunc = CovarianceTruncation::build(&p, window)?;
    let mut o = Output::create(&out)?;
    dump_covariance(&mut o.writer, &trunc, majorana)
}

fn cmd_trx(params: ParamArgs, ladder: Vec<i64>, error_estimate: bool, out: OutArgs) -> Result<()> {
    let p = xy(&params)?;
    let config = json!({
        "cmd": "trx", "gamma": p.gamma, "lambda": p.lambda,
        "N_ladder": ladder, "error_estimate": error_estimate,
        "thresholds": ClassifyThresholds::default(),
    });
    let scan = divergence_scan(&p, &ladder, &ClassifyThresholds::default(), error_estimate)?;
    let mut o = Output::create(&out.out)?;
    match out.format {
        Format::Csv => {
            csv_header(&mut o.writer, &config)?;
            writeln!(o.writer, "# classification: {:?}", scan.classification)?;
            writeln!(
                o.writer,
                "# fit: slope={} intercept={} rms_rel_residual={}",
                num(scan.fit.slope)?,
                num(scan.fit.intercept)?,
                num(scan.fit.rms_rel_residual)?
            )?;
            writeln!(
                o.writer,
                "N,trace_x,hs_e_minus_f,hs_theta,dev_e_minus_f,dev_theta,truncation_error"
            )?;
            for r in &scan.reports {
                let err = match r.truncation_error {
                    Some(e) => num(e)?,
                    None => String::new(),
                };
                writeln!(
                    o.writer,
                    "{},{},{},{},{},{},{}",
                    r.n,
                    num(r.trace_x)?,
                    num(r.hs_e_minus_f)?,
                    num(r.hs_theta)?,
                    num(r.dev_e_minus_f)?,
                    num(r.dev_theta)?,
                    err
                )?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(
                &mut o.writer,
                &json_wrap(config, serde_json::to_value(&scan).unwrap()),
            )
            .map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(o.writer)?;
        }
    }
    Ok(())
}

fn cmd_entropy(params: ParamArgs, lengths: Vec<usize>, out: OutArgs) -> Result<()> {
    let p = xy(&params)?;
    let ambient = 4 * *lengths.last().unwrap() as i64;
    let config = json!({"cmd": "entropy", "gamma": p.gamma, "lambda": p.lambda, "lengths": lengths, "ambient": ambient});
    let rows = entropy_scan(&p, &lengths, ambient)?;
    let sizes: Vec<i64> = rows.iter().map(|r| r.0 as i64).collect();
    let values: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let fit = log_fit_bits(&sizes, &values);
    let mut o = Output::create(&out.out)?;
    match out.format {
        Format::Csv => {
            csv_header(&mut o.writer, &config)?;
            writeln!(
                o.writer,
                "# fit_log2: slope={} intercept={}",
                num(fit.0)?,
                num(fit.1)?
            )?;
            writeln!(o.writer, "L,entropy_bits")?;
            for (l, s) in rows {
                writeln!(o.writer, "{},{}", l, num(s)?)?;
            }
        }
        Format::Json => {
            let data = json!({
                "rows": rows.iter().map(|(l, s)| json!({"L": l, "entropy_bits": s})).collect::<Vec<_>>(),
                "fit_log2": {"slope": fit.0, "intercept": fit.1},
            });
            serde_json::to_writer_pretty(&mut o.writer, &json_wrap(config, data))
                .map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(o.writer)?;
        }
    }
    Ok(())
}

/// Fit versus log2 of the size (entropy scans are reported in bits).
fn log_fit_bits(sizes: &[i64], values: &[f64]) -> (f64, f64) {
    let f = log_fit(sizes, values);
    (f.slope * std::f64::consts::LN_2, f.intercept)
}

fn cmd_onecopy(params: ParamArgs, lengths: Vec<usize>, out: OutArgs) -> Result<()> {
    let p = xy(&params)?;
    let ambient = 4 * *lengths.last().unwrap() as i64;
    let config = json!({"cmd": "onecopy", "gamma": p.gamma, "lambda": p.lambda, "lengths": lengths, "ambient": ambient});
    let rows = one_copy_scan(&p, &lengths, ambient)?;
    let mut o = Output::create(&out.out)?;
    match out.format {
        Format::Csv => {
            csv_header(&mut o.writer, &config)?;
            writeln!(o.writer, "L,entropy_bits,e1_bits,d,schmidt_terms,schmidt_tail")?;
            for r in &rows {
                writeln!(
                    o.writer,
                    "{},{},{},{},{},{}",
                    r.length,
                    num(r.entropy_bits)?,
                    num(r.e1_bits)?,
                    r.d,
                    r.schmidt_terms,
                    num(r.schmidt_tail)?
                )?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(
                &mut o.writer,
                &json_wrap(config, serde_json::to_value(&rows).unwrap()),
            )
            .map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(o.writer)?;
        }
    }
    Ok(())
}

fn cmd_cluster(
    params: ParamArgs,
    obs_a: PauliString,
    obs_b: PauliString,
    kmax: i64,
    out: OutArgs,
) -> Result<()> {
    let p = xy(&params)?;
    let config = json!({
        "cmd": "cluster", "gamma": p.gamma, "lambda": p.lambda,
        "a": format!("{obs_a}"), "b": format!("{obs_b}"), "kmax": kmax,
    });
    let scan = cluster_scan(&obs_a, &obs_b, &p, kmax)?;
    let mut o = Output::create(&out.out)?;
    match out.format {
        Format::Csv => {
            csv_header(&mut o.writer, &config)?;
            writeln!(o.writer, "# preference: {:?}", scan.preference)?;
            if let (Some(e), Some(pw)) = (&scan.exp_fit, &scan.pow_fit) {
                writeln!(
                    o.writer,
                    "# exp_fit: rate={} residual={}",
                    num(e.rate)?,
                    num(e.rms_log_residual)?
                )?;
                writeln!(
                    o.writer,
                    "# pow_fit: rate={} residual={}",
                    num(pw.rate)?,
                    num(pw.rms_log_residual)?
                )?;
            }
            writeln!(o.writer, "k,connected")?;
            for (k, c) in scan.distances.iter().zip(&scan.connected) {
                writeln!(o.writer, "{},{}", k, num(*c)?)?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(
                &mut o.writer,
                &json_wrap(config, serde_json::to_value(&scan).unwrap()),
            )
            .map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(o.writer)?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_localize(
    resource: Resource,
    params: ParamArgs,
    m: i64,
    distance: i64,
    eps: f64,
    l_max: usize,
    seed: u64,
    out: OutArgs,
) -> Result<()> {
    let opts = SeesawOptions {
        seed,
        ..Default::default()
    };
    let config = json!({
        "cmd": "localize",
        "resource": match resource { Resource::Xy => "xy", Resource::Omega1 => "omega1" },
        "gamma": params.gamma, "lambda": params.lambda,
        "M": m, "N": distance, "eps": eps, "l_max": l_max, "seed": seed,
        "seesaw": {"starts": opts.starts, "iteration_cap": opts.iteration_cap, "stagnation_tol": opts.stagnation_tol},
    });
    let result = match resource {
        Resource::Xy => {
            let p = xy(&params)?;
            localization_length(&p, m, distance, eps, l_max, &opts)?
        }
        Resource::Omega1 => {
            let max_j = m.abs() + distance.abs() + l_max as i64 + 2;
            let st = PairedState::new(max_j)?;
            localization_length(&st, m, distance, eps, l_max, &opts)?
        }
    };
    let mut o = Output::create(&out.out)?;
    match out.format {
        Format::Csv => {
            csv_header(&mut o.writer, &config)?;
            writeln!(
                o.writer,
                "# l_star: {}",
                result
                    .l_star
                    .map(|l| l.to_string())
                    .unwrap_or_else(|| format!("not_found_within({l_max})"))
            )?;
            writeln!(o.writer, "L,fidelity")?;
            for (i, f) in result.fidelity_per_l.iter().enumerate() {
                writeln!(o.writer, "{},{}", i + 1, num(*f)?)?;
            }
        }
        Format::Json => {
            serde_json::to_writer_pretty(
                &mut o.writer,
                &json_wrap(config, serde_json::to_value(&result).unwrap()),
            )
            .map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(o.writer)?;
        }
    }
    Ok(())
}

fn cmd_bell(
    resource: Resource,
    params: ParamArgs,
    pairs: Vec<(i64, i64)>,
    seed: u64,
    out: OutArgs,
) -> Result<()> {
    let config = json!({
        "cmd": "bell",
        "resource": match resource { Resource::Xy => "xy", Resource::Omega1 => "omega1" },
        "gamma": params.gamma, "lambda": params.lambda,
        "pairs": pairs, "seed": seed,
    });
    let mut rows = Vec::new();
    match resource {
        Resource::Xy => {
            let p = xy(&params)?;
            for row in beta_scan_xy(&p, &pairs)? {
                let cov_window =
                    Window::new(row.site_a.min(row.site_b), row.site_a.max(row.site_b) + 1)?;
                let cov = CovarianceTruncation::build(&p, cov_window)?;
                let rho =
                    fermichain::quasifree::reduced_density_matrix(&[row.site_a, row.site_b], &cov)?;
                let ascent = chsh_beta_ascent(&rho, 12, seed)?;
                rows.push((row.site_a, row.site_b, row.beta, ascent));
            }
        }
        Resource::Omega1 => {
            let max_j = pairs
                .iter()
                .flat_map(|&(a, b)| [a.abs(), b.abs()])
                .max()
                .unwrap()
                + 2;
            let st = PairedState::new(max_j)?;
            for (a, b) in pairs {
                let rho = omega1_rdm(&st, &[a, b])?;
                let beta = chsh_beta(&rho)?;
                let ascent = chsh_beta_ascent(&rho, 12, seed)?;
                rows.push((a, b, beta, ascent));
            }
        }
    }
    let mut o = Output::create(&out.out)?;
    match out.format {
        Format::Csv => {
            csv_header(&mut o.writer, &config)?;
            writeln!(o.writer, "site_a,site_b,beta,beta_ascent,deviation")?;
            for (a, b, beta, ascent) in rows {
                writeln!(
                    o.writer,
                    "{},{},{},{},{}",
                    a,
                    b,
                    num(beta)?,
                    num(ascent)?,
                    num((beta - ascent).abs())?
                )?;
            }
        }
        Format::Json => {
            let data: Vec<_> = rows
                .iter()
                .map(|(a, b, beta, ascent)| {
                    json!({"site_a": a, "site_b": b, "beta": beta, "beta_ascent": ascent})
                })
                .collect();
            serde_json::to_writer_pretty(&mut o.writer, &json_wrap(config, json!(data)))
                .map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(o.writer)?;
        }
    }
    Ok(())
}

fn cmd_selftest() -> Result<()> {
    let presets = [
        (0.0, 0.0, "isotropic critical"),
        (1.0, 1.0, "critical"),
        (0.0, 2.0, "polarized"),
        (1.0, 2.0, "gapped"),
        (1.0, 0.0, "theta-invariant sector"),
    ];
    let mut failures = 0usize;
    let mut check = |name: String, ok: bool| {
        println!("[{}] {}", if ok { "PASS" } else { "FAIL" }, name);
        if !ok {
            failures += 1;
        }
    };

    for (g, l, tag) in presets {
        let p = XYParams::new(g, l)?;
        let w = Window::new(-4, 4)?;
        let t = CovarianceTruncation::build(&p, w)?;
        let occ = t.mode_occupations()?;
        check(
            format!("{tag}: spectrum within [0,1]"),
            occ.iter().all(|&v| (-1e-10..=1.0 + 1e-10).contains(&v)),
        );
        check(
            format!("{tag}: block-Toeplitz"),
            t.toeplitz_deviation() < 1e-12,
        );
        check(
            format!("{tag}: gamma compatibility"),
            t.gamma_compatibility_deviation() < 1e-10,
        );
        let occ_m = t.mode_occupations_from_majorana()?;
        let dev = occ
            .iter()
            .zip(&occ_m)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        check(format!("{tag}: complex/Majorana spectra agree"), dev < 1e-10);

        let rho = fermichain::quasifree::reduced_density_matrix(&[0, 1], &t)?;
        let single = fermichain::quasifree::reduced_density_matrix(&[0], &t)?;
        let traced = rho.partial_trace(&[0])?;
        let dev = (traced.matrix() - single.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        check(format!("{tag}: partial-trace consistency"), dev < 1e-9);
    }

    for (g, l) in [(1.0, 1.0), (1.0, 2.0)] {
        let p = XYParams::new(g, l)?;
        let table = fermichain::covariance::BlockTable::build(
            p,
            2 * 8 - 1,
            fermichain::covariance::QuadratureSpec::default(),
        )?;
        let r = fermichain::diagnostics::trace_identity_report(&table, 8, false)?;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-12);
        check(
            format!("({g},{l}): ||E-F||^2 = tr X"),
            rel(r.hs_e_minus_f, r.trace_x) < 1e-8,
        );
        check(
            format!("({g},{l}): ||E-thEth||^2 = 4 tr X"),
            rel(r.hs_theta, 4.0 * r.trace_x) < 1e-8,
        );
    }

    let st = PairedState::new(2)?;
    let rho = omega1_rdm(&st, &[-1, 0])?;
    let beta = chsh_beta(&rho)?;
    check(
        "omega1 singlet attains the Cirelson bound".into(),
        (beta - 2.0f64.sqrt()).abs() < 1e-9,
    );

    if failures > 0 {
        return Err(Error::InvalidArgument(format!(
            "{failures} selftest failures"
        )));
    }
    Ok(())
}
