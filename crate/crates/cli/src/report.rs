//! Report envelope and artifact files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use contact_core::capacity::EMBED_EPS;
use contact_core::ManifoldModel;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Everything a run produces. Maps are ordered so that output is stable.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub report: Value,
    pub tables: BTreeMap<String, String>,
    pub plotdata: BTreeMap<String, String>,
    pub failures: Vec<String>,
}

impl Artifacts {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            crate::EXIT_ASSERTION
        }
    }

    /// Writes `report.json`, `tables/*.csv` and, if enabled, `plotdata/*.csv`.
    pub fn write(&self, dir: &Path, plotdata: bool) -> Result<(), CliError> {
        let mkdir = |p: &Path| fs::create_dir_all(p).map_err(|e| CliError::io(p, e));
        let write = |p: &Path, s: &str| fs::write(p, s).map_err(|e| CliError::io(p, e));
        mkdir(dir)?;
        let mut text = serde_json::to_string_pretty(&self.report).expect("report serializes");
        text.push('\n');
        write(&dir.join("report.json"), &text)?;
        let tables = dir.join("tables");
        mkdir(&tables)?;
        for (name, body) in &self.tables {
            write(&tables.join(format!("{name}.csv")), body)?;
        }
        if plotdata && !self.plotdata.is_empty() {
            let plots = dir.join("plotdata");
            mkdir(&plots)?;
            for (name, body) in &self.plotdata {
                write(&plots.join(format!("{name}.csv")), body)?;
            }
        }
        Ok(())
    }
}

/// Where each hard-coded constant comes from.
pub fn provenance(m: &ManifoldModel) -> Value {
    let rho = match m.rho() {
        Some(r) => json!({ "value": r.value, "source": r.source }),
        None => json!({ "value": null, "source": "unknown for this form" }),
    };
    let betti = match m.betti_z2_total() {
        Some(b) => {
            json!({ "value": b, "source": "total Z/2 Betti number of the standard model, hard-coded" })
        }
        None => json!({ "value": null, "source": "not supplied for this manifold" }),
    };
    json!({
        "rho": rho,
        "betti_z2_total": betti,
        "embed_eps": {
            "value": EMBED_EPS,
            "source": "fixed convention for rectangle to disk embedding losses",
        },
    })
}

/// Wraps task results with the config hash, tolerances and provenance.
pub fn envelope(
    cfg: &ExperimentConfig,
    m: &ManifoldModel,
    results: Value,
    failures: &[String],
) -> Value {
    json!({
        "task": cfg.task.as_str(),
        "manifold": m.name(),
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "tolerances": cfg.tolerances,
        "provenance": provenance(m),
        "status": if failures.is_empty() { "pass" } else { "assertion_failure" },
        "failures": failures,
        "results": results,
    })
}

/// Builds a CSV table from a header and rows of already formatted cells.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

/// Round-trippable float formatting for tables.
pub fn num(v: f64) -> String {
    format!("{v:.17e}")
}

/// Counts of `log10(v)` in unit-width bins from `lo` to `hi`, clamped at both ends.
pub fn log_histogram(values: &[f64], lo: i32, hi: i32) -> String {
    let mut counts = vec![0usize; (hi - lo) as usize];
    for v in values {
        let e = if *v > 0.0 {
            v.log10().floor() as i32
        } else {
            lo
        };
        counts[(e.clamp(lo, hi - 1) - lo) as usize] += 1;
    }
    csv(
        &["log10_lower", "log10_upper", "count"],
        counts.iter().enumerate().map(|(i, c)| {
            vec![
                (lo + i as i32).to_string(),
                (lo + i as i32 + 1).to_string(),
                c.to_string(),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_clamps() {
        let h = log_histogram(&[0.0, 1e-20, 3e-9, 2.0], -12, -6);
        let lines: Vec<&str> = h.lines().collect();
        assert_eq!(lines[1], "-12,-11,2");
        assert_eq!(lines[4], "-9,-8,1");
        assert_eq!(lines[6], "-7,-6,1");
    }

    #[test]
    fn provenance_lists_constants() {
        let p = provenance(&ManifoldModel::sphere3());
        assert_eq!(p["betti_z2_total"]["value"], 2);
        assert!(p["rho"]["value"].as_f64().is_some());
        assert_eq!(p["embed_eps"]["value"], EMBED_EPS);
    }
}
