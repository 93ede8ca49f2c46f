//! Stability analysis of the delay-free network.
//!
//! The drift matrix A_N(x) loses the Hurwitz property at the threshold
//! x_th, the smallest positive root of det A_N(x). Two routes compute it:
//!
//! - an exact eigenvalue reduction: det A_N(x) = 0 iff (x gamma_r / 2)^2 is
//!   an eigenvalue of A_u(0) A_u(0)^T, a symmetric positive definite N x N
//!   product built from the damping/coupling Toeplitz factor, valid whenever
//!   kappa does not depend on x;
//! - a bisection on the Hurwitz property of the assembled A, which also
//!   covers the kappa = c x amplification-loss scenario.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::assemble_state_space;
use crate::params::{LossScenario, NetworkConfig, GAMMA_R};

/// Margin below which a maximal real eigenvalue is treated as marginal
/// rather than stable, relative to gamma_r.
pub const HURWITZ_MARGIN: f64 = 1e-9;

/// Appendix-style bisection tolerance default.
pub const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    EigenReduction,
    Bisection,
}

/// Outcome of a stability-threshold computation for one (N, scenario) cell.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub n_nopas: usize,
    pub loss_scenario: LossScenario,
    pub x_th: f64,
    pub method: ThresholdMethod,
    /// Probe records (x, max real eigenvalue of A_N(x)).
    pub max_real_eig_at: Vec<(f64, f64)>,
    /// Set when the system stayed stable over the whole pump range (0, 1].
    pub stable_on_full_range: bool,
}

/// Classification of a drift matrix by its spectral abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    Stable,
    /// Within the numerical margin of the imaginary axis; refine, don't trust.
    Marginal,
    Unstable,
}

/// Hurwitz test: true iff every eigenvalue has negative real part.
/// Also returns the maximal real part.
pub fn is_hurwitz(a: &DMatrix<f64>) -> Result<(bool, f64)> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidParameter("is_hurwitz: matrix must be square".into()));
    }
    let max_re = linalg::max_real_eigenvalue(a)?;
    Ok((max_re < 0.0, max_re))
}

/// Hurwitz test with the marginal band (-HURWITZ_MARGIN*gamma_r, 0).
pub fn stability_class(a: &DMatrix<f64>) -> Result<(StabilityClass, f64)> {
    let max_re = linalg::max_real_eigenvalue(a)?;
    let class = if max_re >= 0.0 {
        StabilityClass::Unstable
    } else if max_re > -HURWITZ_MARGIN * GAMMA_R {
        StabilityClass::Marginal
    } else {
        StabilityClass::Stable
    };
    Ok((class, max_re))
}

/// Lower-triangular Toeplitz factor A_u(0): damping m on the diagonal,
/// alpha^k gamma on the k-th subdiagonal.
fn chain_factor(n: usize, alpha: f64, kappa: f64, gamma: f64) -> DMatrix<f64> {
    let m = (gamma + kappa) / 2.0;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            m
        } else if i > j {
            alpha.powi((i - j) as i32) * gamma
        } else {
            0.0
        }
    })
}

/// Threshold by the exact eigenvalue reduction, for kappa independent of x.
///
/// x_th = (2 / gamma_r) sqrt(lambda_min) with lambda_min the smallest
/// eigenvalue of A_u(0) A_u(0)^T (all of them real positive).
pub fn threshold_eigen_reduction(
    n_nopas: usize,
    alpha: f64,
    kappa_fixed: f64,
    y: f64,
) -> Result<f64> {
    if n_nopas < 2 {
        return Err(Error::InvalidParameter(format!(
            "chain needs at least 2 NOPAs, got {n_nopas}"
        )));
    }
    let gamma = GAMMA_R / y;
    let au = chain_factor(n_nopas, alpha, kappa_fixed, gamma);
    let prod = &au * au.transpose();
    let eig = nalgebra::SymmetricEigen::new(prod);
    let lambda_min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !(lambda_min > 0.0) {
        return Err(Error::Numerical(format!(
            "eigen reduction produced a nonpositive eigenvalue {lambda_min}"
        )));
    }
    let x_th = 2.0 * lambda_min.sqrt() / GAMMA_R;
    if x_th > 1.0 {
        return Err(Error::OutOfRange(format!(
            "no threshold in range: det A_N(x) has no root for x <= 1 (x_th would be {x_th:.6})"
        )));
    }
    Ok(x_th)
}

/// Result of the bisection search.
#[derive(Debug, Clone, Serialize)]
pub struct BisectionOutcome {
    /// Approximation approaching the true threshold from the left:
    /// x_th_hat <= x_th < x_th_hat + eps_tol.
    pub x_th: f64,
    pub stable_on_full_range: bool,
    pub probes: Vec<(f64, f64)>,
}

/// Threshold by bisection on the Hurwitz property of the assembled drift
/// matrix. `family` maps a pump parameter to a full configuration, so
/// x-dependent kappa scenarios are handled naturally.
pub fn bisection_threshold(
    family: &dyn Fn(f64) -> Result<NetworkConfig>,
    eps_tol: f64,
) -> Result<BisectionOutcome> {
    if !(eps_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bisection tolerance must be positive, got {eps_tol}"
        )));
    }
    let mut probes: Vec<(f64, f64)> = Vec::new();
    let mut probe_stable = |x: f64| -> Result<bool> {
        let cfg = family(x)?;
        let ss = assemble_state_space(&cfg)?;
        let (class, max_re) = stability_class(&ss.a)?;
        probes.push((x, max_re));
        // marginal counts as loss of stability so the estimate stays left
        Ok(class == StabilityClass::Stable)
    };

    if probe_stable(1.0)? {
        return Ok(BisectionOutcome {
            x_th: 1.0,
            stable_on_full_range: true,
            probes,
        });
    }
    let (mut x_l, mut x_h) = (0.0f64, 1.0f64);
    while x_h - x_l > eps_tol {
        let x_m = 0.5 * (x_h + x_l);
        if probe_stable(x_m)? {
            x_l = x_m;
        } else {
            x_h = x_m;
        }
    }
    let x_th = x_l;

    // loss of stability must be monotone in x for the bisection to mean anything
    for frac in [0.25, 0.5, 0.75, 0.9] {
        if !probe_stable(frac * x_th)? {
            return Err(Error::Numerical(format!(
                "non-monotone stability pattern: unstable at x = {} below threshold {}",
                frac * x_th,
                x_th
            )));
        }
    }

    Ok(BisectionOutcome {
        x_th,
        stable_on_full_range: false,
        probes,
    })
}

/// Threshold for one (N, scenario) cell with the appropriate method:
/// the exact eigen reduction when kappa does not depend on x, bisection
/// when amplification losses tie kappa to the pump.
pub fn threshold_for(n_nopas: usize, scenario: LossScenario) -> Result<StabilityReport> {
    let probe_cfg = NetworkConfig::new(n_nopas, 0.0, scenario)?;
    if scenario.amplification_on() {
        let outcome = bisection_threshold(
            &|x| NetworkConfig::new(n_nopas, x, scenario),
            BISECTION_TOL,
        )?;
        Ok(StabilityReport {
            n_nopas,
            loss_scenario: scenario,
            x_th: outcome.x_th,
            method: ThresholdMethod::Bisection,
            max_real_eig_at: thin_probes(&outcome.probes),
            stable_on_full_range: outcome.stable_on_full_range,
        })
    } else {
        let x_th = threshold_eigen_reduction(n_nopas, probe_cfg.alpha, 0.0, probe_cfg.nopa.y)?;
        // bracket probes around the root for the report
        let mut max_real_eig_at = Vec::new();
        for x in [0.5 * x_th, 0.99 * x_th, (1.01 * x_th).min(1.0)] {
            let ss = assemble_state_space(&NetworkConfig::new(n_nopas, x, scenario)?)?;
            let (_, max_re) = is_hurwitz(&ss.a)?;
            max_real_eig_at.push((x, max_re));
        }
        Ok(StabilityReport {
            n_nopas,
            loss_scenario: scenario,
            x_th,
            method: ThresholdMethod::EigenReduction,
            max_real_eig_at,
            stable_on_full_range: false,
        })
    }
}

fn thin_probes(probes: &[(f64, f64)]) -> Vec<(f64, f64)> {
    // keep the endpoints and a handful of the bisection path
    if probes.len() <= 8 {
        return probes.to_vec();
    }
    let step = probes.len() / 8;
    let mut v: Vec<_> = probes.iter().step_by(step).cloned().collect();
    if let Some(last) = probes.last() {
        if v.last() != Some(last) {
            v.push(*last);
        }
    }
    v
}

/// Batch driver over N and loss scenarios.
pub fn threshold_table(
    n_range: impl IntoIterator<Item = usize>,
    scenarios: &[LossScenario],
) -> Result<Vec<StabilityReport>> {
    let mut out = Vec::new();
    for n in n_range {
        for &s in scenarios {
            out.push(threshold_for(n, s)?);
        }
    }
    Ok(out)
}
