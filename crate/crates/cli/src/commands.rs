use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use artfima::codifference::{codiff_abs_partial_sums, theoretical_codifference};
use artfima::diagnostics::{ljung_box_df, normalized_sample_acvf, residuals, sample_acf};
use artfima::estimation::{fit_whittle, mcculloch_alpha, quantile_ratio, SearchConfig};
use artfima::ingest::{ingest, IngestSpec, MergeRule, Source, Transform};
use artfima::io::{fmt_f64, read_series_csv, write_columns, write_json};
use artfima::montecarlo::{
    run_mc_study, McConfig, SeedMode, DESK_N, DESK_REPLICATES, FULL_N, FULL_REPLICATES,
};
use artfima::simulator::simulate_with_innovations;
use artfima::spectral::{alpha_scaled_periodogram, self_normalized_periodogram};
use artfima::{ArtfimaError, ArtfimaParams, SeriesData, StableSpec};
use serde_json::json;

use crate::*;

pub enum CliError {
    Usage(String),
    Domain(ArtfimaError),
}

impl From<ArtfimaError> for CliError {
    fn from(e: ArtfimaError) -> Self {
        CliError::Domain(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Domain(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Codiff(a) => codiff(a),
        Command::Periodogram(a) => periodogram(a),
        Command::Acf(a) => acf(a),
        Command::Residuals(a) => resid(a),
        Command::Lb(a) => lb(a),
        Command::Alpha(a) => alpha(a),
        Command::Mc(a) => mc(a),
        Command::Ingest(a) => ingest_cmd(a),
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn params(m: &ModelArgs) -> Result<ArtfimaParams> {
    Ok(ArtfimaParams::new(
        m.d,
        m.lambda,
        m.phi.clone(),
        m.theta.clone(),
    )?)
}

fn load(input: &InputArgs) -> Result<SeriesData> {
    Ok(read_series_csv(&input.input, &input.column)?)
}

fn floats(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| fmt_f64(*x)).collect()
}

fn indices(range: std::ops::Range<usize>) -> Vec<String> {
    range.map(|i| i.to_string()).collect()
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let p = params(&a.model)?;
    let spec = StableSpec::new(a.alpha, a.sigma)?;
    let sim = simulate_with_innovations(&p, spec, a.n, a.seed, a.stream, a.tol)?;
    let mut header = vec!["t", "x"];
    let mut cols = vec![indices(0..a.n), floats(&sim.path.values)];
    if a.innovations {
        header.push("z");
        cols.push(floats(&sim.innovations));
    }
    write_columns(sink(a.out.as_deref())?, &header, &cols)?;
    if let Some(out) = &a.out {
        write_json(BufWriter::new(File::create(sidecar(out))?), &sim.path.meta)?;
    }
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    let series = load(&a.input)?;
    let mut cfg = SearchConfig::new(a.p, a.q);
    cfg.seed = a.seed;
    if let Some(v) = a.d_min {
        cfg.d_bounds.0 = v;
    }
    if let Some(v) = a.d_max {
        cfg.d_bounds.1 = v;
    }
    if let Some(v) = a.lambda_min {
        cfg.lambda_bounds.0 = v;
    }
    if let Some(v) = a.lambda_max {
        cfg.lambda_bounds.1 = v;
    }
    if let Some(v) = a.arma_bound {
        cfg.arma_bound = v;
    }
    if let Some(v) = a.multistarts {
        cfg.arma_starts = v;
    }
    if let Some(v) = a.max_evals {
        cfg.max_evals = v;
    }
    cfg.w_points = (a.w_points > 0).then_some(a.w_points);
    let result = fit_whittle(&series, &cfg)?;

    let names = ArtfimaParams::beta_names(a.p, a.q);
    let mut table = String::new();
    for (name, v) in names.iter().zip(result.beta_hat.beta()) {
        table.push_str(&format!("{name:<8} {v:>12.6}\n"));
    }
    table.push_str(&format!(
        "sigma2   {:>12.6}\nconverged {} after {} evaluations over {} starts\n",
        result.sigma2_hat,
        result.converged,
        result.trace.total_evals,
        result.trace.starts.len()
    ));
    write_json(sink(a.out.as_deref())?, &result)?;
    if a.out.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    Ok(())
}

fn codiff(a: CodiffArgs) -> Result<()> {
    let p = params(&a.model)?;
    let curve = theoretical_codifference(&p, a.alpha, a.max_lag, a.tol)?;
    let partial = codiff_abs_partial_sums(&curve);
    write_columns(
        sink(a.out.as_deref())?,
        &["lag", "tau", "abs_partial_sum"],
        &[
            indices(0..curve.tau.len()),
            floats(&curve.tau),
            floats(&partial.values),
        ],
    )?;
    Ok(())
}

fn periodogram(a: PeriodogramArgs) -> Result<()> {
    let series = load(&a.input)?;
    let pg = match a.alpha {
        Some(al) => alpha_scaled_periodogram(&series, al)?,
        None => self_normalized_periodogram(&series)?,
    };
    write_columns(
        sink(a.out.as_deref())?,
        &["freq", "ordinate"],
        &[floats(&pg.freqs), floats(&pg.ordinates)],
    )?;
    Ok(())
}

fn acf(a: AcfArgs) -> Result<()> {
    let mut series = load(&a.input)?;
    if a.squared {
        series.values.iter_mut().for_each(|v| *v *= *v);
    }
    let r = match a.alpha {
        Some(al) => normalized_sample_acvf(&series, al, a.max_lag)?,
        None => sample_acf(&series, a.max_lag)?,
    };
    let k = r.values.len();
    write_columns(
        sink(a.out.as_deref())?,
        &["lag", "acf", "lower", "upper"],
        &[
            indices(0..k),
            floats(&r.values),
            floats(&vec![-r.band; k]),
            floats(&vec![r.band; k]),
        ],
    )?;
    Ok(())
}

fn resid(a: ResidualsArgs) -> Result<()> {
    let series = load(&a.input)?;
    let p = params(&a.model)?;
    let r = residuals(&series, &p, a.tol)?;
    let offset = series.len() - r.len();
    write_columns(
        sink(a.out.as_deref())?,
        &["t", "x"],
        &[indices(offset..series.len()), floats(&r.values)],
    )?;
    Ok(())
}

fn lb(a: LbArgs) -> Result<()> {
    let series = load(&a.input)?;
    let r = ljung_box_df(&series, a.lags, a.fitted)?;
    write_json(sink(a.out.as_deref())?, &r)?;
    Ok(())
}

fn alpha(a: AlphaArgs) -> Result<()> {
    let series = load(&a.input)?;
    let nu = quantile_ratio(&series)?;
    let alpha_hat = mcculloch_alpha(&series)?;
    write_json(
        sink(a.out.as_deref())?,
        &json!({ "alpha_hat": alpha_hat, "nu": nu, "n": series.len() }),
    )?;
    Ok(())
}

fn mc(a: McArgs) -> Result<()> {
    let p = params(&a.model)?;
    let spec = StableSpec::standard(a.alpha)?;
    let (n0, r0) = if a.full {
        (FULL_N, FULL_REPLICATES)
    } else {
        (DESK_N, DESK_REPLICATES)
    };
    let mut cfg = McConfig::new(
        p,
        spec,
        a.n.unwrap_or(n0),
        a.replicates.unwrap_or(r0),
        a.seed,
    );
    if a.shared_seed {
        cfg.seed_mode = SeedMode::Shared;
    }
    let report = run_mc_study(&cfg)?;
    write_json(sink(a.out.as_deref())?, &report)?;
    if let Some(rows) = &a.rows {
        report.write_rows_csv(BufWriter::new(File::create(rows)?))?;
    }
    if a.out.is_some() {
        print!("{}", report.table());
    } else {
        eprint!("{}", report.table());
    }
    Ok(())
}

fn parse_transform(s: &str) -> Result<Transform> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["log"] => Ok(Transform::Log),
        ["demean"] => Ok(Transform::Demean),
        ["subseries", start, end] => match (start.parse(), end.parse()) {
            (Ok(start), Ok(end)) => Ok(Transform::Subseries { start, end }),
            _ => Err(CliError::Usage(format!("bad subseries bounds in '{s}'"))),
        },
        _ => Err(CliError::Usage(format!(
            "unknown transform '{s}' (expected log, demean or subseries:START:END)"
        ))),
    }
}

fn ingest_cmd(a: IngestArgs) -> Result<()> {
    let sources = a
        .sources
        .iter()
        .map(|s| match s.rsplit_once(':') {
            Some((path, column)) if !path.is_empty() && !column.is_empty() => Ok(Source {
                path: path.into(),
                column: column.into(),
            }),
            _ => Err(CliError::Usage(format!(
                "source '{s}' is not of the form path:column"
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = IngestSpec {
        sources,
        key: a.key,
        merge: match a.merge {
            MergeArg::MeanElseMax => MergeRule::MeanElseMax,
            MergeArg::Single => MergeRule::Single,
        },
        transforms: a
            .transforms
            .iter()
            .map(|t| parse_transform(t))
            .collect::<Result<Vec<_>>>()?,
        missing_sentinel: a.missing,
    };
    let series = ingest(&spec)?;
    write_columns(
        sink(a.out.as_deref())?,
        &["t", "x"],
        &[indices(0..series.len()), floats(&series.values)],
    )?;
    if let Some(out) = &a.out {
        write_json(BufWriter::new(File::create(sidecar(out))?), &series.meta)?;
    }
    Ok(())
}
