//! Command-line front end: every analysis as a reproducible batch command.
//!
//! Each subcommand mirrors one analysis product (threshold table, squeezing
//! spectrum, covariance trajectory, negativity report, parameter sweep,
//! delay stability check, index maps). Options can come from `--config FILE`
//! (flat `key = value` lines named after the long flags) with command-line
//! flags taking precedence. Outputs embed the toolkit version and the full
//! run configuration.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical error,
//! 4 unstable configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nopa_chain::gaussian::{negativity_suite, negativity_trajectory};
use nopa_chain::model::assemble_state_space;
use nopa_chain::report::{self, FloatFormat};
use nopa_chain::spectra::{log_grid, squeezing_spectra};
use nopa_chain::stability::threshold_table;
use nopa_chain::sweep::{
    equal_power_sweep, find_x_for_target_v0, optimal_x, threshold_approach_curve, SweepKind,
    SweepRecord, SweepResult,
};
use nopa_chain::{Error, LossScenario, NetworkConfig};

#[derive(Parser, Debug)]
#[command(name = "nopa-chain", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stability thresholds over a range of chain lengths and loss scenarios.
    Threshold(ThresholdCmd),
    /// Two-mode squeezing spectrum over a frequency grid.
    Spectrum(SpectrumCmd),
    /// Covariance-driven logarithmic-negativity trajectories.
    Trajectory(TrajectoryCmd),
    /// Steady-state logarithmic negativities of the cavity mode pairs.
    Negativity(NegativityCmd),
    /// Parameter sweeps (equal power, target dB, optimal pump, threshold approach).
    Sweep(SweepCmd),
    /// Rightmost characteristic root of the delayed network.
    DdeCheck(DdeCheckCmd),
    /// State/input quadrature index maps as JSON.
    IndexMaps(IndexMapsCmd),
}

#[derive(Args, Debug, Clone, Serialize)]
struct NetOpts {
    /// Number of NOPAs in the chain.
    #[arg(long)]
    n: usize,
    /// Pump parameter x in [0, 1].
    #[arg(long)]
    x: f64,
    /// Damping parameter y in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    y: f64,
    /// Total transmission distance, km.
    #[arg(long, default_value_t = 1.0)]
    distance_km: f64,
    /// Loss scenario: none | transmission | both.
    #[arg(long, default_value = "none", value_parser = parse_losses)]
    #[serde(serialize_with = "ser_losses")]
    losses: LossScenario,
    /// Override the a-output phase shift, rad.
    #[arg(long)]
    theta_a: Option<f64>,
    /// Override the b-output phase shift, rad.
    #[arg(long)]
    theta_b: Option<f64>,
    /// Override the per-segment delay, s.
    #[arg(long)]
    tau: Option<f64>,
}

fn ser_losses<S: serde::Serializer>(
    v: &LossScenario,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v.label())
}

fn parse_losses(s: &str) -> Result<LossScenario, String> {
    match s {
        "none" | "lossless" => Ok(LossScenario::Lossless),
        "transmission" => Ok(LossScenario::TransmissionOnly),
        "both" => Ok(LossScenario::TransmissionAndAmplification),
        other => Err(format!(
            "unknown loss scenario '{other}' (expected none | transmission | both)"
        )),
    }
}

impl NetOpts {
    fn network(&self) -> Result<NetworkConfig, Error> {
        let mut cfg = NetworkConfig::with_options(
            self.n,
            self.x,
            self.y,
            self.distance_km,
            self.losses,
        )?;
        if self.theta_a.is_some() || self.theta_b.is_some() {
            let (ta, tb) = (
                self.theta_a.unwrap_or(cfg.theta_a),
                self.theta_b.unwrap_or(cfg.theta_b),
            );
            cfg = cfg.with_thetas(ta, tb);
        }
        if let Some(tau) = self.tau {
            cfg = cfg.with_tau(tau)?;
        }
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct OutOpts {
    /// Write the CSV table here (stdout if omitted and no JSON path given).
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Render dB columns at 4 decimals, the paper-table view.
    #[arg(long, default_value_t = false)]
    paper_precision: bool,
}

impl OutOpts {
    fn db_format(&self) -> FloatFormat {
        if self.paper_precision {
            FloatFormat::Paper4
        } else {
            FloatFormat::Sig10
        }
    }

    fn emit<C: Serialize, T: Serialize>(
        &self,
        csv: String,
        config: &C,
        result: &T,
    ) -> Result<(), Error> {
        let csv_doc = format!("{}{}", report::metadata_header(config), csv);
        match &self.out_csv {
            Some(p) => std::fs::write(p, csv_doc)?,
            None => print!("{csv_doc}"),
        }
        if let Some(p) = &self.out_json {
            std::fs::write(p, report::json_with_provenance(config, result))?;
        }
        Ok(())
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct ThresholdCmd {
    /// Chain lengths, a single value or an inclusive range like 2..6.
    #[arg(long, default_value = "2..6")]
    n: String,
    /// Scenarios: all | none | transmission | both (comma separated).
    #[arg(long, default_value = "all")]
    scenarios: String,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutOpts,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SpectrumCmd {
    #[command(flatten)]
    #[serde(flatten)]
    net: NetOpts,
    /// Include the per-segment propagation delays.
    #[arg(long, default_value_t = false)]
    delay: bool,
    #[arg(long, default_value_t = 1e4)]
    omega_min: f64,
    #[arg(long, default_value_t = 1e10)]
    omega_max: f64,
    #[arg(long, default_value_t = 500)]
    omega_points: usize,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutOpts,
}

#[derive(Args, Debug, Clone, Serialize)]
struct TrajectoryCmd {
    #[command(flatten)]
    #[serde(flatten)]
    net: NetOpts,
    /// Integration horizon, s.
    #[arg(long, default_value_t = 2e-7)]
    t_end: f64,
    /// Output sampling step, s.
    #[arg(long, default_value_t = 1e-10)]
    dt: f64,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutOpts,
}

#[derive(Args, Debug, Clone, Serialize)]
struct NegativityCmd {
    #[command(flatten)]
    #[serde(flatten)]
    net: NetOpts,
    /// Also write the time evolution (same as the trajectory command).
    #[arg(long, default_value_t = false)]
    trajectory: bool,
    #[arg(long, default_value_t = 2e-7)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-10)]
    dt: f64,
    /// Verify steady-state entanglement synchronization across the chain.
    #[arg(long, default_value_t = false)]
    sync_check: bool,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutOpts,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SweepCmd {
    /// equal-power | target-db | optimal | threshold-approach
    #[arg(long)]
    kind: String,
    /// Chain lengths, a single value or an inclusive range like 2..6.
    #[arg(long, default_value = "2..6")]
    n: String,
    /// Loss scenario for the sweep evaluations.
    #[arg(long, default_value = "none", value_parser = parse_losses)]
    #[serde(serialize_with = "ser_losses")]
    losses: LossScenario,
    /// Target V(0) in dB (target-db sweeps).
    #[arg(long, default_value_t = -25.0)]
    target: f64,
    /// Reference pump for equal-power sweeps (x of the n-ref chain).
    #[arg(long, default_value_t = 0.13)]
    x_ref: f64,
    #[arg(long, default_value_t = 6)]
    n_ref: usize,
    /// Grid size for optimal-pump sweeps.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Anchor the optimal-pump grid at this upper end instead of the threshold.
    #[arg(long)]
    anchor: Option<f64>,
    /// Golden-section polish of the grid minimizer.
    #[arg(long, default_value_t = false)]
    refine: bool,
    /// k grid for threshold-approach sweeps: start,stop,count (k < 1).
    #[arg(long, default_value = "0.5,0.999,26")]
    k_grid: String,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutOpts,
}

#[derive(Args, Debug, Clone, Serialize)]
struct DdeCheckCmd {
    #[command(flatten)]
    #[serde(flatten)]
    net: NetOpts,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutOpts,
}

#[derive(Args, Debug, Clone, Serialize)]
struct IndexMapsCmd {
    #[arg(long)]
    n: usize,
    /// Output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_n_range(s: &str) -> Result<Vec<usize>, Error> {
    let bad = |m: &str| Error::InvalidParameter(format!("bad chain-length range '{s}': {m}"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad("start"))?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad("end"))?;
        if lo < 2 || hi < lo {
            return Err(bad("need 2 <= start <= end"));
        }
        Ok((lo..=hi).collect())
    } else {
        let n: usize = s.trim().parse().map_err(|_| bad("value"))?;
        if n < 2 {
            return Err(bad("need n >= 2"));
        }
        Ok(vec![n])
    }
}

fn parse_scenarios(s: &str) -> Result<Vec<LossScenario>, Error> {
    if s == "all" {
        return Ok(LossScenario::ALL.to_vec());
    }
    s.split(',')
        .map(|tok| {
            parse_losses(tok.trim()).map_err(Error::InvalidParameter)
        })
        .collect()
}

fn run_threshold(cmd: &ThresholdCmd) -> Result<(), Error> {
    let ns = parse_n_range(&cmd.n)?;
    let scenarios = parse_scenarios(&cmd.scenarios)?;
    let reports = threshold_table(ns, &scenarios)?;
    let csv = report::threshold_csv(&reports, FloatFormat::Sig10);
    cmd.out.emit(csv, cmd, &reports)
}

fn run_spectrum(cmd: &SpectrumCmd) -> Result<(), Error> {
    let cfg = cmd.net.network()?;
    if cmd.omega_points < 1 {
        return Err(Error::InvalidParameter("need at least one frequency point".into()));
    }
    let grid = if cmd.omega_points == 1 {
        vec![cmd.omega_min]
    } else {
        log_grid(cmd.omega_min, cmd.omega_max, cmd.omega_points)
    };
    let sp = squeezing_spectra(&cfg, &grid, cmd.delay)?;
    let csv = report::spectrum_csv(&sp, FloatFormat::Sig10, cmd.out.db_format());
    cmd.out.emit(csv, cmd, &sp)
}

fn run_trajectory(cmd: &TrajectoryCmd) -> Result<(), Error> {
    let cfg = cmd.net.network()?;
    let tr = negativity_trajectory(&cfg, cmd.t_end, cmd.dt)?;
    let csv = report::negativity_trajectory_csv(&tr, FloatFormat::Sig10);
    cmd.out.emit(csv, cmd, &tr)
}

fn run_negativity(cmd: &NegativityCmd) -> Result<(), Error> {
    let cfg = cmd.net.network()?;
    let reports = negativity_suite(&cfg)?;
    if cmd.sync_check {
        let diag: Vec<&nopa_chain::gaussian::NegativityReport> = reports
            .iter()
            .filter(|r| matches!(r.pair, (nopa_chain::gaussian::Mode::A(i), nopa_chain::gaussian::Mode::B(j)) if i == j))
            .collect();
        if let Some(first) = diag.first() {
            for r in &diag {
                if (r.e_value - first.e_value).abs() >= 1e-6 {
                    return Err(Error::Numerical(format!(
                        "entanglement synchronization violated: E({},{}) = {} vs E({},{}) = {}",
                        r.pair.0, r.pair.1, r.e_value, first.pair.0, first.pair.1, first.e_value
                    )));
                }
            }
        }
    }
    if cmd.trajectory {
        let tr = negativity_trajectory(&cfg, cmd.t_end, cmd.dt)?;
        let csv = report::negativity_trajectory_csv(&tr, FloatFormat::Sig10);
        #[derive(Serialize)]
        struct Both<'a> {
            steady_state: &'a [nopa_chain::gaussian::NegativityReport],
            trajectory: &'a nopa_chain::gaussian::NegativityTrajectory,
        }
        cmd.out.emit(
            csv,
            cmd,
            &Both {
                steady_state: &reports,
                trajectory: &tr,
            },
        )
    } else {
        let csv = report::negativity_csv(&reports, FloatFormat::Sig10);
        cmd.out.emit(csv, cmd, &reports)
    }
}

fn run_sweep(cmd: &SweepCmd) -> Result<(), Error> {
    let ns = parse_n_range(&cmd.n)?;
    let result: SweepResult = match cmd.kind.as_str() {
        "equal-power" => equal_power_sweep(ns, cmd.x_ref, cmd.n_ref, cmd.losses)?,
        "target-db" => {
            // pump found in the lossless chain, losses evaluated at that pump
            let mut records = Vec::new();
            for n in ns {
                let x = find_x_for_target_v0(n, LossScenario::Lossless, cmd.target)?;
                for scen in [
                    LossScenario::Lossless,
                    LossScenario::TransmissionOnly,
                    LossScenario::TransmissionAndAmplification,
                ] {
                    let cfg = NetworkConfig::new(n, x, scen)?;
                    let sp = squeezing_spectra(&cfg, &[0.0], false)?;
                    records.push(SweepRecord {
                        n_nopas: n,
                        scenario: scen,
                        x,
                        pump_nx2: n as f64 * x * x,
                        v_pm_db: sp.v_plus_db[0],
                        v_sum_db: sp.v_sum_db[0],
                    });
                }
            }
            SweepResult {
                kind: SweepKind::TargetDb,
                records,
            }
        }
        "optimal" => {
            let mut records = Vec::new();
            for n in ns {
                let opt = optimal_x(n, cmd.losses, cmd.samples, cmd.anchor, cmd.refine)?;
                records.push(SweepRecord {
                    n_nopas: n,
                    scenario: cmd.losses,
                    x: opt.x_opt,
                    pump_nx2: n as f64 * opt.x_opt * opt.x_opt,
                    v_pm_db: opt.v_pm_db,
                    v_sum_db: opt.v_sum_db,
                });
            }
            SweepResult {
                kind: SweepKind::OptimalX,
                records,
            }
        }
        "threshold-approach" => {
            let parts: Vec<&str> = cmd.k_grid.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::InvalidParameter(
                    "k-grid must be start,stop,count".into(),
                ));
            }
            let start: f64 = parts[0].trim().parse().map_err(|_| {
                Error::InvalidParameter("bad k-grid start".into())
            })?;
            let stop: f64 = parts[1].trim().parse().map_err(|_| {
                Error::InvalidParameter("bad k-grid stop".into())
            })?;
            let count: usize = parts[2].trim().parse().map_err(|_| {
                Error::InvalidParameter("bad k-grid count".into())
            })?;
            if count < 2 {
                return Err(Error::InvalidParameter("k-grid needs >= 2 points".into()));
            }
            let ks: Vec<f64> = (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect();
            let mut records = Vec::new();
            for n in ns {
                records.extend(threshold_approach_curve(n, &ks)?.records);
            }
            SweepResult {
                kind: SweepKind::ThresholdApproach,
                records,
            }
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown sweep kind '{other}' \
                 (expected equal-power | target-db | optimal | threshold-approach)"
            )))
        }
    };
    let csv = report::sweep_csv(&result, FloatFormat::Sig10, cmd.out.db_format());
    cmd.out.emit(csv, cmd, &result)
}

fn run_dde_check(cmd: &DdeCheckCmd) -> Result<(), Error> {
    let cfg = cmd.net.network()?;
    let rep = nopa_chain::dde::dde_rightmost_root(&cfg)?;
    #[derive(Serialize)]
    struct Summary {
        stable: bool,
        #[serde(flatten)]
        report: nopa_chain::dde::DdeSpectrumReport,
    }
    let summary = Summary {
        stable: rep.is_stable(),
        report: rep,
    };
    let text = report::json_with_provenance(cmd, &summary);
    match &cmd.out.out_json {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run_index_maps(cmd: &IndexMapsCmd) -> Result<(), Error> {
    let cfg = NetworkConfig::new(cmd.n, 0.0, LossScenario::Lossless)?;
    let ss = assemble_state_space(&cfg)?;
    let text = ss.index_maps_json();
    match &cmd.out {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Splice `key = value` lines from a `--config` file into the argument list
/// (after the subcommand, so explicit flags override them).
fn splice_config_args() -> Result<Vec<String>, Error> {
    let mut args: Vec<String> = std::env::args().collect();
    let Some(pos) = args.iter().position(|a| a == "--config") else {
        return Ok(args);
    };
    if pos + 1 >= args.len() {
        return Err(Error::InvalidParameter("--config needs a file path".into()));
    }
    let path = args[pos + 1].clone();
    args.drain(pos..=pos + 1);
    if args.len() < 2 {
        return Err(Error::InvalidParameter(
            "--config must follow a subcommand".into(),
        ));
    }
    let text = std::fs::read_to_string(&path)?;
    let mut spliced: Vec<String> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidParameter(format!(
                "{path}:{}: expected 'key = value', got '{line}'",
                ln + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        // an explicit command-line flag overrides the file entry
        let flag = format!("--{key}");
        let assigned = format!("--{key}=");
        if args[2..]
            .iter()
            .any(|a| a == &flag || a.starts_with(&assigned))
        {
            continue;
        }
        spliced.push(flag);
        // bare boolean keys take no argument form `key = true`
        match value {
            "true" => {}
            "false" => {
                spliced.pop();
            }
            v => spliced.push(v.to_string()),
        }
    }
    let mut out = args[..2].to_vec();
    out.extend(spliced);
    out.extend(args[2..].iter().cloned());
    Ok(out)
}

fn dispatch() -> Result<(), Error> {
    let args = splice_config_args()?;
    let cli = Cli::try_parse_from(&args).map_err(|e| {
        // clap usage errors are validation errors unless they are help/version
        if e.use_stderr() {
            Error::InvalidParameter(e.to_string())
        } else {
            e.exit()
        }
    })?;
    match &cli.command {
        Command::Threshold(c) => run_threshold(c),
        Command::Spectrum(c) => run_spectrum(c),
        Command::Trajectory(c) => run_trajectory(c),
        Command::Negativity(c) => run_negativity(c),
        Command::Sweep(c) => run_sweep(c),
        Command::DdeCheck(c) => run_dde_check(c),
        Command::IndexMaps(c) => run_index_maps(c),
    }
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::InvalidParameter(_) | Error::OutOfRange(_) => 2,
                Error::Numerical(_) | Error::Inconsistency(_) | Error::Io(_) => 3,
                Error::Unstable(_) => 4,
            };
            ExitCode::from(code)
        }
    }
}
