use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nswbandit::harness::{
    write_curve_csv, write_labelled_curves_csv, write_trace_csv, TraceMetadata,
};
use nswbandit::validate::{run_all, ValidationConfig};
use nswbandit::{fit_regret_slope, Harness, RegretCurve};

use crate::config::{ConfigFile, Experiment};
use crate::error::{CliError, CliResult};

pub const CURVE_FILE: &str = "curve.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

fn header_line(command: &str, exp: &Experiment) -> String {
    let seeds: Vec<String> = exp.seeds.iter().map(u64::to_string).collect();
    format!(
        "nswbandit {command} config_sha256={} seeds={}",
        exp.config_hash(command),
        seeds.join(",")
    )
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Output {
            path: path.to_owned(),
            source,
        })
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|source| CliError::Output {
            path: path.to_owned(),
            source,
        })
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.to_owned(),
        source,
    })
}

/// Fitted log-log slope over `[ceil(sqrt(T)), T]`, if enough checkpoints
/// carry positive regret.
pub fn tail_slope(curve: &RegretCurve, horizon: u64) -> Option<f64> {
    let t_min = (horizon as f64).sqrt().ceil() as u64;
    fit_regret_slope(curve, t_min, horizon).ok()
}

fn summary_block(label: &str, agent: &str, curve: &RegretCurve, horizon: u64) -> String {
    let last = curve.last().expect("curves contain the horizon checkpoint");
    let t_min = (horizon as f64).sqrt().ceil() as u64;
    let slope = tail_slope(curve, horizon).map_or_else(|| "n/a".to_owned(), |s| format!("{s:.4}"));
    format!(
        "{label} ({agent})\n  final mean regret R^{horizon}: {:.6} (stderr {:.6}, {} seeds)\n  log-log slope over [{t_min}, {horizon}]: {slope}\n",
        last.mean_cum_regret, last.stderr, last.n_seeds
    )
}

fn summary_text(header: &str, exp: &Experiment, blocks: &[String]) -> String {
    let h = &exp.instance;
    let mut s = format!("# {header}\n");
    let _ = writeln!(
        s,
        "instance: {} (N={}, K={}), horizon {}, {} seed(s)",
        exp.instance_id,
        h.n_agents(),
        h.n_arms(),
        exp.horizon,
        exp.seeds.len()
    );
    for b in blocks {
        s.push_str(b);
    }
    s
}

fn trace_paths(out: &Path, label: Option<&str>) -> (PathBuf, PathBuf) {
    match label {
        Some(l) => (out.join(format!("traces-{l}.csv")), out.join(format!("traces-{l}.meta.toml"))),
        None => (out.join("traces.csv"), out.join("traces.meta.toml")),
    }
}

fn emit_traces(
    harness: &Harness<'_>,
    exp: &Experiment,
    header: &str,
    label: Option<&str>,
    kind: nswbandit::AgentKind,
) -> CliResult<()> {
    let traces = exp
        .seeds
        .iter()
        .map(|&seed| harness.run_episode(kind, exp.horizon, seed))
        .collect::<nswbandit::Result<Vec<_>>>()?;
    let (csv_path, meta_path) = trace_paths(&exp.out, label);
    write_file(&csv_path, |w| write_trace_csv(w, Some(header), &traces))?;
    let meta = TraceMetadata::new(harness, &kind, exp.horizon, &exp.seeds).to_toml_string();
    write_file(&meta_path, |w| write!(w, "# {header}\n{meta}"))
}

fn build_harness(exp: &Experiment) -> CliResult<Harness<'_>> {
    Ok(Harness::new(&exp.instance)?
        .with_optimizer(exp.optimizer)?
        .with_instance_id(exp.instance_id.clone()))
}

/// Runs one algorithm and writes `curve.csv`, `summary.txt` and optionally
/// the per-round traces. Returns the summary text.
pub fn cmd_run(cfg: &ConfigFile) -> CliResult<String> {
    let exp = cfg.resolve(false)?;
    let harness = build_harness(&exp)?;
    let header = header_line("run", &exp);
    let (label, kind) = exp.agents[0].clone();
    let curve = harness.ensemble_regret(kind, exp.horizon, &exp.seeds)?;
    prepare_out(&exp.out)?;
    write_file(&exp.out.join(CURVE_FILE), |w| write_curve_csv(w, Some(&header), &curve))?;
    if exp.emit_traces {
        emit_traces(&harness, &exp, &header, None, kind)?;
    }
    let summary = summary_text(
        &header,
        &exp,
        &[summary_block(&label, &kind.to_string(), &curve, exp.horizon)],
    );
    write_file(&exp.out.join(SUMMARY_FILE), |w| w.write_all(summary.as_bytes()))?;
    Ok(summary)
}

/// Runs every listed algorithm with the same seeds and writes one combined
/// `sweep.csv` with an `algo` column.
pub fn cmd_sweep(cfg: &ConfigFile) -> CliResult<String> {
    let exp = cfg.resolve(true)?;
    let harness = build_harness(&exp)?;
    let header = header_line("sweep", &exp);
    let mut curves = Vec::with_capacity(exp.agents.len());
    let mut blocks = Vec::with_capacity(exp.agents.len());
    for (label, kind) in &exp.agents {
        let curve = harness.ensemble_regret(*kind, exp.horizon, &exp.seeds)?;
        blocks.push(summary_block(label, &kind.to_string(), &curve, exp.horizon));
        curves.push((label.clone(), curve));
    }
    prepare_out(&exp.out)?;
    write_file(&exp.out.join(SWEEP_FILE), |w| {
        write_labelled_curves_csv(w, Some(&header), &curves)
    })?;
    if exp.emit_traces {
        for (label, kind) in &exp.agents {
            emit_traces(&harness, &exp, &header, Some(label), *kind)?;
        }
    }
    let summary = summary_text(&header, &exp, &blocks);
    write_file(&exp.out.join(SUMMARY_FILE), |w| w.write_all(summary.as_bytes()))?;
    Ok(summary)
}

/// Runs the property suites, writing one line per suite to `out`.
pub fn cmd_validate(cfg: &ConfigFile, radius_scale: f64, out: &mut dyn Write) -> CliResult<()> {
    if !(radius_scale > 0.0 && radius_scale.is_finite()) {
        return Err(CliError::config("radius_scale", "must be positive"));
    }
    let vcfg = ValidationConfig {
        radius_scale,
        ..cfg.validate.apply(ValidationConfig::default())?
    };
    let reports = run_all(&vcfg)?;
    let mut failed = 0;
    for r in &reports {
        let status = if r.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status} {}: {}", r.name, r.summary);
        if let Some(c) = &r.counterexample {
            let _ = writeln!(out, "  counterexample: {c}");
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(CliError::SuitesFailed(failed));
    }
    Ok(())
}
