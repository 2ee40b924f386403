//! Artifact export: stats and manifest JSON, plot-ready CSV, and the
//! atomic multi-file write every command funnels its outputs through.
//!
//! Two rules shape everything here. First, no partial output: all files
//! of a run are staged as temporaries in their target directory and only
//! renamed into place once every byte has been written, so a failed run
//! leaves the output directory as it found it. Second, byte determinism:
//! JSON goes through `serde_json` (sorted keys for value maps, shortest
//! round-trip floats) and CSV floats are printed with `{:e}`, so the same
//! run produces identical bytes on every machine and at any `--jobs`
//! level. Manifests deliberately carry no timestamps, host names, or
//! worker counts for the same reason: a manifest describes the result,
//! and the result must not depend on who computed it or how fast.

use std::io::Write as _;
use std::path::PathBuf;

use gnorm_core::harness::{ErrorStats, SweepPoint};
use gnorm_core::layernorm::{EpsilonPolicy, LayerNormConfig, NewtonIterations};
use gnorm_core::softmax::SoftmaxConfig;
use serde_json::{json, Value};

use crate::error::CliError;

// --- Atomic output ---------------------------------------------------------------

/// Writes every `(path, bytes)` pair, or nothing.
///
/// All temporaries are created and filled first; only then is each one
/// renamed over its target. A failure in the staging phase therefore
/// leaves no new files behind, and the rename phase cannot run out of
/// space or permissions it has not already proven it has.
pub fn write_outputs(files: &[(PathBuf, Vec<u8>)]) -> Result<(), CliError> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
        let mut tmp = match dir {
            Some(d) => tempfile::NamedTempFile::new_in(d),
            None => tempfile::NamedTempFile::new_in("."),
        }
        .map_err(|e| CliError::io(path, e))?;
        tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    }
    Ok(())
}

/// Pretty-printed JSON with a trailing newline.
pub fn json_bytes(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("reports are plain data");
    out.push(b'\n');
    out
}

// --- Config snapshots ----------------------------------------------------------

/// The softmax configuration as manifest-ready JSON.
pub fn softmax_config_json(cfg: &SoftmaxConfig) -> Value {
    json!({
        "mode": cfg.mode.as_str(),
        "radix": cfg.radix,
        "coarse_entries": cfg.coarse_entries,
        "lut_fmt": cfg.lut_fmt.to_string(),
        "input_fmt": cfg.input_fmt.to_string(),
        "out_bits": cfg.out_bits,
        "div_precision": cfg.div_precision,
    })
}

/// The layernorm configuration as manifest-ready JSON.
pub fn layernorm_config_json(cfg: &LayerNormConfig) -> Value {
    let newton = match cfg.newton_iters {
        NewtonIterations::Fixed(k) => json!({ "fixed": k }),
        NewtonIterations::Converge { tol, max_iters } => {
            json!({ "converge": { "tol": tol, "max_iters": max_iters } })
        }
    };
    let epsilon = match cfg.epsilon_policy {
        EpsilonPolicy::ZeroOutput => "zero-output",
        EpsilonPolicy::AddOneUlp => "add-one-ulp",
    };
    json!({
        "mode": cfg.mode.as_str(),
        "input_fmt": cfg.input_fmt.to_string(),
        "cols": cfg.cols,
        "working_fmt": cfg.working_fmt.to_string(),
        "newton_iters": newton,
        "epsilon_policy": epsilon,
        "affine": cfg.affine.is_some(),
    })
}

// --- Stats reports --------------------------------------------------------------

/// An error summary as JSON, histogram included.
pub fn error_stats_json(s: &ErrorStats) -> Value {
    let h = &s.histogram;
    json!({
        "count": s.count,
        "mean": s.mean,
        "max": s.max,
        "fraction_below": s
            .fraction_below
            .iter()
            .map(|&(t, f)| json!({ "threshold": t, "fraction": f }))
            .collect::<Vec<_>>(),
        "histogram": {
            "bins": h.spec.bins,
            "lo": h.spec.lo,
            "hi": h.spec.hi,
            "underflow": h.underflow,
            "counts": h.counts,
            "overflow": h.overflow,
        },
    })
}

/// The full per-run stats document.
#[allow(clippy::too_many_arguments)]
pub fn stats_json(
    engine: &str,
    mode: &str,
    rows: usize,
    cols: usize,
    latency_cycles: u64,
    config: Value,
    stats: &ErrorStats,
) -> Value {
    json!({
        "engine": engine,
        "mode": mode,
        "rows": rows,
        "cols": cols,
        "latency_cycles": latency_cycles,
        "config": config,
        "error": error_stats_json(stats),
    })
}

/// The histogram as plot-ready CSV: one row per bin plus the two tails.
pub fn stats_csv(s: &ErrorStats) -> String {
    let h = &s.histogram;
    let edges = h.edges();
    let mut out = String::from("bin,lo,hi,count\n");
    out.push_str(&format!("underflow,0,{:e},{}\n", h.spec.lo, h.underflow));
    for (i, count) in h.counts.iter().enumerate() {
        out.push_str(&format!("{i},{:e},{:e},{count}\n", edges[i], edges[i + 1]));
    }
    out.push_str(&format!("overflow,{:e},inf,{}\n", h.spec.hi, h.overflow));
    out
}

// --- Sweep reports --------------------------------------------------------------

/// Sweep results as CSV, one row per level.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("knob,level,mean_error,max_error,rows_evaluated\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{:e},{:e},{}\n",
            p.knob.as_str(),
            p.level,
            p.mean_error,
            p.max_error,
            p.rows_evaluated
        ));
    }
    out
}

/// Sweep results as JSON.
pub fn sweep_json(points: &[SweepPoint]) -> Value {
    json!(points
        .iter()
        .map(|p| json!({
            "knob": p.knob.as_str(),
            "level": p.level,
            "mean_error": p.mean_error,
            "max_error": p.max_error,
            "rows_evaluated": p.rows_evaluated,
        }))
        .collect::<Vec<_>>())
}

// --- Comparison reports -----------------------------------------------------------

/// Side-by-side engine stats as JSON.
pub fn compare_json(corpus: &Value, results: &[(String, ErrorStats)]) -> Value {
    json!({
        "corpus": corpus,
        "engines": results
            .iter()
            .map(|(name, s)| {
                let mut v = error_stats_json(s);
                v.as_object_mut()
                    .expect("error_stats_json returns an object")
                    .insert("engine".into(), json!(name));
                v
            })
            .collect::<Vec<_>>(),
    })
}

/// Side-by-side engine stats as CSV, one row per engine.
pub fn compare_csv(results: &[(String, ErrorStats)]) -> String {
    let mut out = String::from("engine,rows,mean_error,max_error");
    if let Some((_, first)) = results.first() {
        for &(t, _) in &first.fraction_below {
            out.push_str(&format!(",frac_below_{t:e}"));
        }
    }
    out.push('\n');
    for (name, s) in results {
        out.push_str(&format!("{name},{},{:e},{:e}", s.count, s.mean, s.max));
        for &(_, f) in &s.fraction_below {
            out.push_str(&format!(",{f:e}"));
        }
        out.push('\n');
    }
    out
}

// --- Manifests ---------------------------------------------------------------------

/// The run manifest: everything needed to reproduce the run bit-exactly,
/// and nothing that varies between reproductions.
pub fn manifest_json(
    command: &str,
    seed: u64,
    corpus: Value,
    config: Value,
    outputs: &[String],
) -> Value {
    json!({
        "tool": "gnorm",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": seed,
        "corpus": corpus,
        "config": config,
        "outputs": outputs,
    })
}
