//! Two-mode squeezing spectra of the outgoing fields.
//!
//! V+(iw) and V-(iw) are the joint amplitude/phase quadrature variances of
//! the two output fields, obtained from the transfer function
//! H(iw) = C (iw I - A)^{-1} B + D as squared row norms of [1 0 1 0] H and
//! [0 1 0 -1] H. Their sum below 4 certifies EPR entanglement.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dde::dde_rightmost_root;
use crate::error::{Error, Result};
use crate::linalg::{solve_complex, C64};
use crate::model::{assemble_frequency_matrices, assemble_state_space, FrequencyMatrices, StateSpace};
use crate::params::NetworkConfig;
use crate::stability::is_hurwitz;

pub use crate::params::theta_defaults;

/// dB value reported for an exactly zero linear variance (perfect squeezing).
pub const DB_FLOOR: f64 = -320.0;

/// EPR sum-criterion bound: entangled iff V+ + V- < 4 (strict).
pub const SUM_CRITERION: f64 = 4.0;

/// 10 log10 with the perfect-squeezing floor.
pub fn to_db(v: f64) -> f64 {
    if v <= 0.0 {
        DB_FLOOR
    } else {
        10.0 * v.log10()
    }
}

/// Sum criterion for EPR entanglement at one frequency.
pub fn epr_entangled(v_sum: f64) -> bool {
    v_sum < SUM_CRITERION
}

/// Default frequency grid: 500 logarithmic points over [1e4, 1e10] rad/s.
pub fn default_omega_grid() -> Vec<f64> {
    log_grid(1e4, 1e10, 500)
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && lo > 0.0 && hi > lo);
    let (llo, lhi) = (lo.log10(), hi.log10());
    (0..points)
        .map(|i| 10f64.powf(llo + (lhi - llo) * i as f64 / (points - 1) as f64))
        .collect()
}

/// Transfer function H(iw) of the delay-free model.
pub fn transfer_function(ss: &StateSpace, omega: f64) -> Result<DMatrix<C64>> {
    let dim = ss.a.nrows();
    let a = DMatrix::<C64>::from_fn(dim, dim, |i, j| {
        let re = -ss.a[(i, j)];
        let im = if i == j { omega } else { 0.0 };
        C64::new(re, im)
    });
    let b = ss.b.map(|v| C64::new(v, 0.0));
    let x = solve_complex(a, &b)?;
    let c = ss.c.map(|v| C64::new(v, 0.0));
    let d = ss.d.map(|v| C64::new(v, 0.0));
    Ok(&c * x + d)
}

/// Transfer function of the delayed model from its frequency-dependent matrices.
pub fn transfer_function_delayed(fm: &FrequencyMatrices) -> Result<DMatrix<C64>> {
    let dim = fm.a.nrows();
    let mut m = -fm.a.clone();
    for i in 0..dim {
        m[(i, i)] += C64::new(0.0, fm.omega);
    }
    let x = solve_complex(m, &fm.b)?;
    Ok(&fm.c * x + &fm.d)
}

/// (V+, V-) from a transfer matrix: squared norms of the joint quadrature rows.
pub fn v_pair(h: &DMatrix<C64>) -> (f64, f64) {
    let cols = h.ncols();
    let mut vp = 0.0;
    let mut vm = 0.0;
    for c in 0..cols {
        vp += (h[(0, c)] + h[(2, c)]).norm_sqr();
        vm += (h[(1, c)] - h[(3, c)]).norm_sqr();
    }
    (vp, vm)
}

/// V+ and V- at a single frequency for a configuration (no stability check).
pub(crate) fn v_at(cfg: &NetworkConfig, omega: f64, delayed: bool) -> Result<(f64, f64)> {
    let h = if delayed {
        transfer_function_delayed(&assemble_frequency_matrices(cfg, omega)?)?
    } else {
        transfer_function(&assemble_state_space(cfg)?, omega)?
    };
    Ok(v_pair(&h))
}

/// Squeezing spectrum over a frequency grid.
#[derive(Debug, Clone, Serialize)]
pub struct SqueezingSpectrum {
    pub omega_grid: Vec<f64>,
    pub v_plus: Vec<f64>,
    pub v_minus: Vec<f64>,
    pub v_sum: Vec<f64>,
    pub v_plus_db: Vec<f64>,
    pub v_minus_db: Vec<f64>,
    pub v_sum_db: Vec<f64>,
    pub theta_a: f64,
    pub theta_b: f64,
    pub delayed: bool,
    pub config: NetworkConfig,
}

impl SqueezingSpectrum {
    /// Plot-ready CSV rows. Floats are written in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "omega_rad_s,v_plus,v_minus,v_sum,v_plus_db,v_minus_db,v_sum_db\n",
        );
        for i in 0..self.omega_grid.len() {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.omega_grid[i],
                self.v_plus[i],
                self.v_minus[i],
                self.v_sum[i],
                self.v_plus_db[i],
                self.v_minus_db[i],
                self.v_sum_db[i],
            ));
        }
        s
    }

    /// Parse rows produced by `to_csv` (header required).
    pub fn parse_csv(text: &str) -> Result<Vec<[f64; 7]>> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if ln == 0 || line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut row = [0.0; 7];
            let mut parts = line.split(',');
            for slot in &mut row {
                let tok = parts.next().ok_or_else(|| {
                    Error::InvalidParameter(format!("csv row {ln}: too few columns"))
                })?;
                *slot = tok.parse().map_err(|e| {
                    Error::InvalidParameter(format!("csv row {ln}: bad float {tok}: {e}"))
                })?;
            }
            rows.push(row);
        }
        Ok(rows)
    }
}

/// Compute the squeezing spectrum over `omega_grid`, refusing unstable
/// configurations (Hurwitz test; rightmost characteristic root when delayed).
pub fn squeezing_spectra(
    cfg: &NetworkConfig,
    omega_grid: &[f64],
    delayed: bool,
) -> Result<SqueezingSpectrum> {
    let ss = assemble_state_space(cfg)?;
    let (hurwitz, max_re) = is_hurwitz(&ss.a)?;
    if !hurwitz {
        return Err(Error::Unstable(format!(
            "delay-free drift matrix has max real eigenvalue {max_re:.6e} >= 0 \
             (N = {}, x = {})",
            cfg.n_nopas, cfg.nopa.x
        )));
    }
    if delayed && cfg.tau > 0.0 {
        let rep = dde_rightmost_root(cfg)?;
        if !rep.is_stable() {
            return Err(Error::Unstable(format!(
                "delayed network has rightmost characteristic root {:.6e}{:+.6e}i",
                rep.rightmost_root.re, rep.rightmost_root.im
            )));
        }
    }

    let n = omega_grid.len();
    let mut sp = SqueezingSpectrum {
        omega_grid: omega_grid.to_vec(),
        v_plus: Vec::with_capacity(n),
        v_minus: Vec::with_capacity(n),
        v_sum: Vec::with_capacity(n),
        v_plus_db: Vec::with_capacity(n),
        v_minus_db: Vec::with_capacity(n),
        v_sum_db: Vec::with_capacity(n),
        theta_a: cfg.theta_a,
        theta_b: cfg.theta_b,
        delayed,
        config: cfg.clone(),
    };
    for &w in omega_grid {
        let (vp, vm) = if delayed {
            let fm = assemble_frequency_matrices(cfg, w)?;
            v_pair(&transfer_function_delayed(&fm)?)
        } else {
            v_pair(&transfer_function(&ss, w)?)
        };
        sp.v_plus.push(vp);
        sp.v_minus.push(vm);
        sp.v_sum.push(vp + vm);
        sp.v_plus_db.push(to_db(vp));
        sp.v_minus_db.push(to_db(vm));
        sp.v_sum_db.push(to_db(vp + vm));
    }
    Ok(sp)
}

/// Closed-form V+-(0) of the lossless chain at y = 1 (N = 2..6), used as an
/// independent oracle against the transfer-function route.
pub fn closed_form_v0(n_nopas: usize, x: f64, theta_sum: f64) -> Result<f64> {
    let c = theta_sum.cos();
    let x2 = x * x;
    let (num, den) = match n_nopas {
        2 => {
            let p = x2 - 1.0;
            (
                (1.0 + x2).powi(4) + 16.0 * x2 * p * p
                    + 8.0 * x * (1.0 + x2).powi(2) * p * c,
                1.0 - 6.0 * x2 + x2 * x2,
            )
        }
        3 => {
            let p = 3.0 - 10.0 * x2 + 3.0 * x2 * x2;
            (
                (1.0 + x2).powi(6) + 4.0 * x2 * p * p
                    + 4.0 * x * (1.0 + x2).powi(3) * p * c,
                -1.0 + 15.0 * x2 - 15.0 * x2 * x2 + x2 * x2 * x2,
            )
        }
        4 => {
            let p = -1.0 + 7.0 * x2 - 7.0 * x2 * x2 + x2 * x2 * x2;
            (
                (1.0 + x2).powi(8) + 64.0 * x2 * p * p
                    + 16.0 * x * (1.0 + x2).powi(4) * p * c,
                1.0 - 28.0 * x2 + 70.0 * x2 * x2 - 28.0 * x2.powi(3) + x2.powi(4),
            )
        }
        5 => {
            let p = 5.0 - 60.0 * x2 + 126.0 * x2 * x2 - 60.0 * x2.powi(3) + 5.0 * x2.powi(4);
            (
                (1.0 + x2).powi(10) + 4.0 * x2 * p * p
                    + 4.0 * x * (1.0 + x2).powi(5) * p * c,
                -1.0 + 45.0 * x2 - 210.0 * x2 * x2 + 210.0 * x2.powi(3) - 45.0 * x2.powi(4)
                    + x2.powi(5),
            )
        }
        6 => {
            let p = -3.0 + 55.0 * x2 - 198.0 * x2 * x2 + 198.0 * x2.powi(3) - 55.0 * x2.powi(4)
                + 3.0 * x2.powi(5);
            (
                (1.0 + x2).powi(12) + 16.0 * x2 * p * p
                    + 8.0 * x * (1.0 + x2).powi(6) * p * c,
                1.0 - 66.0 * x2 + 495.0 * x2 * x2 - 924.0 * x2.powi(3) + 495.0 * x2.powi(4)
                    - 66.0 * x2.powi(5) + x2.powi(6),
            )
        }
        _ => {
            return Err(Error::InvalidParameter(format!(
                "closed forms cover N in 2..6, got {n_nopas}"
            )))
        }
    };
    if den.abs() < 1e-14 {
        return Err(Error::OutOfRange(format!(
            "x = {x} is at a pole of the N = {n_nopas} closed form"
        )));
    }
    Ok(2.0 * num / (den * den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::LossScenario;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_passthrough_is_criterion_boundary() {
        for n in [2usize, 4] {
            for scen in LossScenario::ALL {
                let cfg = NetworkConfig::new(n, 0.0, scen).unwrap();
                let (vp, vm) = v_at(&cfg, 2.0e5, false).unwrap();
                assert_relative_eq!(vp, 2.0, epsilon = 1e-10);
                assert_relative_eq!(vm, 2.0, epsilon = 1e-10);
                // vacuum sits exactly on the (strict) sum-criterion boundary
                assert!((vp + vm - SUM_CRITERION).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn passive_network_scattering_is_unitary() {
        let cfg = NetworkConfig::new(3, 0.0, LossScenario::TransmissionAndAmplification).unwrap();
        let ss = assemble_state_space(&cfg).unwrap();
        for w in [0.0, 1e5, 3e7] {
            let h = transfer_function(&ss, w).unwrap();
            let prod = &h * h.adjoint();
            for i in 0..4 {
                for j in 0..4 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (prod[(i, j)] - C64::new(want, 0.0)).norm() < 1e-10,
                        "w={w} ({i},{j}): {:?}",
                        prod[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn high_frequency_limit_is_feedthrough() {
        let cfg = NetworkConfig::new(2, 0.3, LossScenario::Lossless).unwrap();
        let ss = assemble_state_space(&cfg).unwrap();
        let h = transfer_function(&ss, 1e15).unwrap();
        for i in 0..4 {
            for j in 0..ss.d.ncols() {
                assert!((h[(i, j)] - C64::new(ss.d[(i, j)], 0.0)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn closed_form_limits() {
        // x -> 0+ gives the vacuum value 2 for every N
        for n in 2..=6 {
            let v = closed_form_v0(n, 1e-12, 0.0).unwrap();
            assert_relative_eq!(v, 2.0, epsilon = 1e-9);
        }
        assert!(closed_form_v0(7, 0.1, 0.0).is_err());
        // N=2 pole at x_th = sqrt(2)-1
        assert!(closed_form_v0(2, std::f64::consts::SQRT_2 - 1.0, 0.0).is_err());
    }

    #[test]
    fn unstable_configuration_is_refused() {
        let cfg = NetworkConfig::new(2, 0.5, LossScenario::Lossless).unwrap();
        let err = squeezing_spectra(&cfg, &[1e4], false).unwrap_err();
        assert!(matches!(err, Error::Unstable(_)));
    }

    #[test]
    fn csv_roundtrip_full_precision() {
        let cfg = NetworkConfig::new(2, 0.3, LossScenario::Lossless).unwrap();
        let sp = squeezing_spectra(&cfg, &log_grid(1e4, 1e8, 7), false).unwrap();
        let rows = SqueezingSpectrum::parse_csv(&sp.to_csv()).unwrap();
        assert_eq!(rows.len(), 7);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row[0], sp.omega_grid[i]);
            assert_eq!(row[1], sp.v_plus[i]);
            assert_eq!(row[6], sp.v_sum_db[i]);
        }
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let cfg = NetworkConfig::new(2, 0.3, LossScenario::Lossless).unwrap();
        let sp = squeezing_spectra(&cfg, &[], false).unwrap();
        assert_eq!(sp.to_csv().lines().count(), 1);
    }

    #[test]
    fn db_floor_sentinel() {
        assert_eq!(to_db(0.0), DB_FLOOR);
        assert_relative_eq!(to_db(1.0), 0.0);
        assert_relative_eq!(to_db(0.5), -3.0102999566398116);
    }

    #[test]
    fn sum_criterion_is_strict() {
        assert!(epr_entangled(3.9));
        assert!(!epr_entangled(4.0));
    }
}
