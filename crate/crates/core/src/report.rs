//! CSV/JSON writers for the analysis products.
//!
//! Every file starts with `#`-prefixed metadata lines carrying the toolkit
//! version and the full configuration, so a run is reproducible from its
//! output alone. Formatting is deterministic.

use std::fmt::Write as _;

use serde::Serialize;

use crate::gaussian::{NegativityReport, NegativityTrajectory};
use crate::spectra::SqueezingSpectrum;
use crate::stability::StabilityReport;
use crate::sweep::{SweepKind, SweepResult};

/// Number formatting for CSV cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloatFormat {
    /// Shortest representation that round-trips exactly.
    RoundTrip,
    /// 10 significant digits (scientific).
    Sig10,
    /// Fixed 4 decimals, the paper-table view for dB columns.
    Paper4,
}

impl FloatFormat {
    pub fn fmt(self, v: f64) -> String {
        match self {
            FloatFormat::RoundTrip => format!("{v}"),
            FloatFormat::Sig10 => format!("{v:.9e}"),
            FloatFormat::Paper4 => format!("{v:.4}"),
        }
    }
}

/// `#`-prefixed header lines with version and configuration provenance.
pub fn metadata_header<C: Serialize>(config: &C) -> String {
    let cfg_json = serde_json::to_string(config).unwrap_or_else(|_| "{}".into());
    format!(
        "# toolkit_version: {}\n# config: {}\n",
        crate::VERSION,
        cfg_json
    )
}

/// Wrap a serializable payload with version/config provenance for JSON output.
#[derive(Debug, Serialize)]
pub struct WithProvenance<C: Serialize, T: Serialize> {
    pub toolkit_version: &'static str,
    pub config: C,
    pub result: T,
}

pub fn json_with_provenance<C: Serialize, T: Serialize>(config: C, result: T) -> String {
    let doc = WithProvenance {
        toolkit_version: crate::VERSION,
        config,
        result,
    };
    serde_json::to_string_pretty(&doc).expect("report serialization")
}

/// Threshold table CSV: n, scenario, x_th.
pub fn threshold_csv(reports: &[StabilityReport], fmt: FloatFormat) -> String {
    let mut s = String::from("n,scenario,x_th\n");
    for r in reports {
        let _ = writeln!(s, "{},{},{}", r.n_nopas, r.loss_scenario, fmt.fmt(r.x_th));
    }
    s
}

/// Sweep CSV with the column set matching the table kind.
pub fn sweep_csv(result: &SweepResult, fmt: FloatFormat, db_fmt: FloatFormat) -> String {
    let mut s = match result.kind {
        SweepKind::ThresholdApproach => String::from("n,scenario,k_x,x,n_x2,v_pm_db,v_sum_db\n"),
        _ => String::from("n,scenario,x,n_x2,v_pm_db,v_sum_db\n"),
    };
    for r in &result.records {
        match result.kind {
            SweepKind::ThresholdApproach => {
                let _ = writeln!(
                    s,
                    "{},{},,{},{},{},{}",
                    r.n_nopas,
                    r.scenario,
                    fmt.fmt(r.x),
                    fmt.fmt(r.pump_nx2),
                    db_fmt.fmt(r.v_pm_db),
                    db_fmt.fmt(r.v_sum_db)
                );
            }
            _ => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    r.n_nopas,
                    r.scenario,
                    fmt.fmt(r.x),
                    fmt.fmt(r.pump_nx2),
                    db_fmt.fmt(r.v_pm_db),
                    db_fmt.fmt(r.v_sum_db)
                );
            }
        }
    }
    s
}

/// Spectrum CSV with configurable precision (the member `to_csv` keeps
/// round-trip precision; this variant is for presentation formats).
pub fn spectrum_csv(sp: &SqueezingSpectrum, fmt: FloatFormat, db_fmt: FloatFormat) -> String {
    let mut s = String::from("omega_rad_s,v_plus,v_minus,v_sum,v_plus_db,v_minus_db,v_sum_db\n");
    for i in 0..sp.omega_grid.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt.fmt(sp.omega_grid[i]),
            fmt.fmt(sp.v_plus[i]),
            fmt.fmt(sp.v_minus[i]),
            fmt.fmt(sp.v_sum[i]),
            db_fmt.fmt(sp.v_plus_db[i]),
            db_fmt.fmt(sp.v_minus_db[i]),
            db_fmt.fmt(sp.v_sum_db[i])
        );
    }
    s
}

/// Steady-state negativity CSV: pair, nu, e.
pub fn negativity_csv(reports: &[NegativityReport], fmt: FloatFormat) -> String {
    let mut s = String::from("mode_1,mode_2,nu,e\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.pair.0,
            r.pair.1,
            fmt.fmt(r.nu),
            fmt.fmt(r.e_value)
        );
    }
    s
}

/// Trajectory CSV: t plus one E column per tracked pair.
pub fn negativity_trajectory_csv(tr: &NegativityTrajectory, fmt: FloatFormat) -> String {
    let mut s = String::from("t_s");
    for (m1, m2) in &tr.pairs {
        let _ = write!(s, ",E_{m1}_{m2}");
    }
    s.push('\n');
    for (k, t) in tr.times.iter().enumerate() {
        let _ = write!(s, "{}", fmt.fmt(*t));
        for v in &tr.values[k] {
            let _ = write!(s, ",{}", fmt.fmt(*v));
        }
        s.push('\n');
    }
    s
}
