use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use losscal_core::diagnostics::{curve_from_columns, RegretBin};
use losscal_core::scoring::loss_correct_multi;
use losscal_core::{
    beta_to_delta, delta_to_beta, imbalance_preset, loss_correct_binary, prior_shift_correct,
    simulate, theoretical_curve, verify_sbr, BinScore, RegretMode, RegretOptions,
    ScoredDataset, SimulationConfig, StatisticalExperiment, WeightSpec,
};
use serde::Serialize;
use serde_json::Value;

use crate::args::{
    check_distinct, CompareArgs, CorrectArgs, CurveArgs, DiagnoseArgs, SimulateArgs,
};
use crate::error::CliError;
use crate::io::{emit_dataset, fmt_f64, ingest, Format, RawRows};
use crate::svg::reliability_svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 2;

/// Opens `path`, or hands back standard output.
fn sink<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Usage(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(stdout),
    })
}

fn binary_beta(weights: &WeightSpec) -> Result<f64, CliError> {
    match weights {
        WeightSpec::Binary { beta1 } => Ok(*beta1),
        WeightSpec::Matrix(_) => Err(CliError::Usage(
            "binary data needs --beta or --delta, not --beta-matrix".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrectSummary {
    pub rows: usize,
    pub failed: usize,
}

/// Appends loss-corrected posteriors to each input row.
pub fn cmd_correct(
    args: &CorrectArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    check_distinct(&[Some(&args.input.input), args.output.output.as_deref()])?;
    let format = args.input.format();
    let ingested = ingest(&args.input.input, format)?;
    let data = &ingested.dataset;
    let weights = args.weights.require()?;

    // per row: corrected values, or the error that prevented them
    let corrected: Vec<Result<Vec<f64>, String>> = match data.binary_scores() {
        Some(scores) => {
            let beta1 = binary_beta(&weights)?;
            scores
                .iter()
                .map(|&a| loss_correct_binary(beta1, a).map(|g| Ok(vec![g])))
                .collect::<Result<Vec<_>, _>>()?
        }
        None => {
            let WeightSpec::Matrix(m) = &weights else {
                return Err(CliError::Usage("multi-class data needs --beta-matrix".into()));
            };
            if m.dim() != data.n_classes() {
                return Err(CliError::Core(losscal_core::Error::DimensionMismatch {
                    expected: data.n_classes(),
                    actual: m.dim(),
                }));
            }
            (0..data.len())
                .map(|r| {
                    loss_correct_multi(m, data.score_vector(r).expect("multi row"))
                        .map(|g| g.into_inner())
                        .map_err(|e| e.to_string())
                })
                .collect()
        }
    };
    let summary = CorrectSummary {
        rows: data.len(),
        failed: corrected.iter().filter(|r| r.is_err()).count(),
    };

    let mut out = sink(args.output.output.as_deref(), stdout)?;
    let n = data.n_classes();
    match &ingested.raw {
        RawRows::Csv { header, records } => {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut head = header.clone();
            if data.is_binary() {
                head.push("corrected".into());
            } else {
                head.extend((0..n).map(|i| format!("corrected_{i}")));
                head.push("error".into());
            }
            w.write_record(&head).map_err(csv_err)?;
            for (rec, result) in records.iter().zip(&corrected) {
                let mut row = rec.clone();
                match result {
                    Ok(vals) => {
                        row.extend(vals.iter().map(|&v| fmt_f64(v)));
                        if !data.is_binary() {
                            row.push(String::new());
                        }
                    }
                    Err(msg) => {
                        row.extend(std::iter::repeat_n(String::new(), n));
                        row.push(msg.clone());
                    }
                }
                w.write_record(&row).map_err(csv_err)?;
            }
            w.flush()?;
        }
        RawRows::Jsonl(objects) => {
            for (obj, result) in objects.iter().zip(&corrected) {
                let mut obj = obj.clone();
                match result {
                    Ok(vals) if data.is_binary() => {
                        obj.insert("corrected".into(), crate::io::float(vals[0]));
                    }
                    Ok(vals) => {
                        obj.insert("corrected".into(), crate::io::floats(vals));
                    }
                    Err(msg) => {
                        obj.insert("error".into(), Value::from(msg.clone()));
                    }
                }
                writeln!(out, "{}", Value::Object(obj))?;
            }
        }
    }
    out.flush()?;
    writeln!(
        stderr,
        "corrected {} of {} rows",
        summary.rows - summary.failed,
        summary.rows
    )?;
    Ok(if summary.failed == 0 {
        EXIT_OK
    } else {
        writeln!(stderr, "{} rows had no consistent posterior", summary.failed)?;
        EXIT_PARTIAL
    })
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Log-spaced posteriors on `[1e-4, 0.9999]` for the theoretical curve.
fn theory_grid() -> Vec<f64> {
    let n = 200;
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            10f64.powf(-4.0 + t * 4.0).min(0.9999)
        })
        .collect()
}

pub fn cmd_curve(
    args: &CurveArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    check_distinct(&[
        Some(&args.input.input),
        args.output.output.as_deref(),
        args.theory.as_deref(),
        args.svg.as_deref(),
    ])?;
    let ingested = ingest(&args.input.input, args.input.format())?;
    let data = &ingested.dataset;
    let weights = args.weights.resolve()?;
    let beta1 = weights.as_ref().map(binary_beta).transpose()?;

    let mut scores = data.class_column(args.class)?;
    if args.apply_correction {
        let beta1 = beta1.ok_or_else(|| {
            CliError::Usage("--apply-correction needs --beta or --delta".into())
        })?;
        if !data.is_binary() || args.class != 1 {
            return Err(CliError::Usage(
                "--apply-correction is only defined for the positive class of binary data".into(),
            ));
        }
        for a in &mut scores {
            *a = loss_correct_binary(beta1, *a)?;
        }
    }
    let hits: Vec<bool> = data.labels().iter().map(|&y| y == args.class).collect();
    let curve = curve_from_columns(&scores, &hits, args.binning.binning())?;
    if curve.dropped_empty > 0 {
        writeln!(stderr, "warning: {} empty bins omitted", curve.dropped_empty)?;
    }
    if curve.degenerate {
        writeln!(stderr, "warning: all scores are identical; single bin")?;
    }

    let mut out = sink(args.output.output.as_deref(), stdout)?;
    writeln!(out, "bin,mean_score,freq,count,lo,hi")?;
    for (i, b) in curve.bins.iter().enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{},{}",
            fmt_f64(b.mean_score),
            fmt_f64(b.empirical_freq),
            b.count,
            fmt_f64(b.lo_ci),
            fmt_f64(b.hi_ci)
        )?;
    }
    out.flush()?;

    let theory = match beta1 {
        // corrected scores should follow the diagonal
        Some(_) if args.apply_correction => Some(theoretical_curve(0.5, &theory_grid())?),
        Some(b) => Some(theoretical_curve(b, &theory_grid())?),
        None => None,
    };
    if let Some(path) = &args.theory {
        let points = theory
            .as_ref()
            .ok_or_else(|| CliError::Usage("--theory needs --beta or --delta".into()))?;
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "score,implied_freq")?;
        for (s, g) in points {
            writeln!(w, "{},{}", fmt_f64(*s), fmt_f64(*g))?;
        }
        w.flush()?;
    }
    if let Some(path) = &args.svg {
        std::fs::write(path, reliability_svg(&curve, theory.as_deref()))?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct BinOut<'a> {
    bin_score: &'a BinScore,
    count: usize,
    label_counts: &'a [usize],
    realized_loss: f64,
    minimal_loss: f64,
    regret: f64,
    argmin_score: &'a BinScore,
}

impl<'a> From<&'a RegretBin> for BinOut<'a> {
    fn from(b: &'a RegretBin) -> Self {
        Self {
            bin_score: &b.bin_score,
            count: b.count,
            label_counts: &b.label_counts,
            realized_loss: b.realized_loss,
            minimal_loss: b.minimal_loss,
            regret: b.regret,
            argmin_score: &b.argmin_score,
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SbrSummary {
    signal_count: usize,
    prior: Vec<f64>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct DiagnoseOut<'a> {
    per_bin: Vec<BinOut<'a>>,
    max_regret: f64,
    mean_regret: f64,
    tolerance: f64,
    #[serde(rename = "loss_calibrated")]
    loss_calibrated: bool,
    dropped_bins: usize,
    merged_cells: usize,
    canonical_sbr: Option<SbrSummary>,
}

pub fn cmd_diagnose(
    args: &DiagnoseArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    check_distinct(&[Some(&args.input.input), args.output.output.as_deref()])?;
    let ingested = ingest(&args.input.input, args.input.format())?;
    let weights = args.weights.require()?;
    let options = RegretOptions {
        binning: args.binning.binning(),
        mode: args.grid.map_or(RegretMode::Analytic, RegretMode::GridSearch),
        ..RegretOptions::default()
    };
    if let Some(t) = args.tolerance {
        if !(t >= 0.0) {
            return Err(CliError::Usage(format!("tolerance must be >= 0, got {t}")));
        }
    }
    let verdict = verify_sbr(
        &ingested.dataset,
        &args.loss.spec(),
        &weights,
        args.tolerance,
        options,
    )?;
    let report = &verdict.report;
    if report.dropped_bins > 0 {
        writeln!(stderr, "warning: {} empty bins omitted", report.dropped_bins)?;
    }
    let out_doc = DiagnoseOut {
        per_bin: report.per_bin.iter().map(BinOut::from).collect(),
        max_regret: report.max_regret,
        mean_regret: report.mean_regret,
        tolerance: verdict.tolerance,
        loss_calibrated: verdict.has_sbr,
        dropped_bins: report.dropped_bins,
        merged_cells: report.merged_cells,
        canonical_sbr: verdict.canonical.as_ref().map(|c| SbrSummary {
            signal_count: c.experiment.n_signals(),
            prior: c.experiment.prior().to_vec(),
        }),
    };
    let mut out = sink(args.output.output.as_deref(), stdout)?;
    serde_json::to_writer_pretty(&mut out, &out_doc)?;
    writeln!(out)?;
    out.flush()?;
    writeln!(
        stderr,
        "max regret {:e} (tolerance {:e}): {}",
        report.max_regret,
        verdict.tolerance,
        if verdict.has_sbr {
            "loss-calibrated"
        } else {
            "not loss-calibrated"
        }
    )?;
    Ok(EXIT_OK)
}

pub fn simulation_config(args: &SimulateArgs) -> Result<SimulationConfig, CliError> {
    let experiment = match &args.experiment {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<StatisticalExperiment>(&text).map_err(|e| CliError::Parse {
                line: e.line(),
                msg: e.to_string(),
            })?
        }
        None => imbalance_preset(args.positive_rate, args.signals, args.informativeness)?,
    };
    Ok(SimulationConfig {
        experiment,
        loss: args.loss.spec(),
        weights: args.weights.require()?,
        sample_count: args.samples,
        seed: args.seed,
    })
}

pub fn cmd_simulate(
    args: &SimulateArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let config = simulation_config(args)?;
    let format = args
        .format
        .unwrap_or_else(|| Format::infer(args.output.output.as_deref()));
    let sim = simulate(&config, args.sidecar)?;
    let mut out = sink(args.output.output.as_deref(), stdout)?;
    emit_dataset(&mut out, &sim.dataset, sim.sidecar.as_ref(), format)?;
    out.flush()?;
    writeln!(
        stderr,
        "simulated {} rows from {} signals (seed {})",
        sim.dataset.len(),
        config.experiment.n_signals(),
        config.seed
    )?;
    Ok(EXIT_OK)
}

pub fn cmd_compare(
    args: &CompareArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    check_distinct(&[Some(&args.input.input), args.output.output.as_deref()])?;
    let (beta1, delta) = match (args.beta, args.delta) {
        (Some(b), Some(d)) => (b, d),
        (Some(b), None) => (b, beta_to_delta(b)?),
        (None, Some(d)) => (delta_to_beta(d)?, d),
        (None, None) => {
            return Err(CliError::Usage("compare needs --beta and/or --delta".into()))
        }
    };
    let ingested = ingest(&args.input.input, args.input.format())?;
    let scores = binary_scores(&ingested.dataset)?;
    let mut out = sink(args.output.output.as_deref(), stdout)?;
    writeln!(out, "score,loss_corrected,prior_shift_corrected,abs_diff")?;
    let mut max_diff = 0.0f64;
    for &a in scores {
        let lc = loss_correct_binary(beta1, a)?;
        let ps = prior_shift_correct(delta, a)?;
        let diff = (lc - ps).abs();
        max_diff = max_diff.max(diff);
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(a),
            fmt_f64(lc),
            fmt_f64(ps),
            fmt_f64(diff)
        )?;
    }
    out.flush()?;
    writeln!(stderr, "max abs_diff {}", fmt_f64(max_diff))?;
    Ok(EXIT_OK)
}

fn binary_scores(data: &ScoredDataset) -> Result<&[f64], CliError> {
    data.binary_scores()
        .ok_or_else(|| CliError::Usage("this command needs binary `score,label` data".into()))
}
