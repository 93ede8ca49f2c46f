//! Delay-spectrum computation against independent oracles: Newton refinement
//! on the exact characteristic determinant, the delay-free limit, and
//! time-domain growth of the delayed equations themselves.

use nalgebra::{DMatrix, DVector};
use nopa_chain::dde::{characteristic_matrix, dde_rightmost_root, delay_coefficients};
use nopa_chain::linalg::{max_real_eigenvalue, C64};
use nopa_chain::model::assemble_state_space;
use nopa_chain::sweep::equal_power_x;
use nopa_chain::{LossScenario, NetworkConfig};

/// det of the characteristic matrix, scaled to O(1) per dimension.
fn char_det(coeffs: &[DMatrix<f64>], tau: f64, scale: f64, lambda: C64) -> C64 {
    let m = characteristic_matrix(coeffs, tau, lambda);
    (m / C64::new(scale, 0.0)).determinant()
}

/// Newton refinement of a characteristic root from a starting guess.
fn newton_root(coeffs: &[DMatrix<f64>], tau: f64, scale: f64, mut z: C64) -> C64 {
    for _ in 0..60 {
        let f = char_det(coeffs, tau, scale, z);
        let h = C64::new(scale * 1e-7, 0.0);
        let df = (char_det(coeffs, tau, scale, z + h) - char_det(coeffs, tau, scale, z - h))
            / (2.0 * h);
        let step = f / df;
        z -= step;
        if step.norm() < 1e-10 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

#[test]
fn collocation_root_is_a_true_characteristic_root() {
    let x = equal_power_x(2, 0.13, 6).unwrap();
    let cfg = NetworkConfig::new(2, x, LossScenario::TransmissionAndAmplification).unwrap();
    let rep = dde_rightmost_root(&cfg).unwrap();
    assert!(rep.converged);
    let coeffs = delay_coefficients(&cfg).unwrap();
    let scale = cfg.nopa.gamma;
    let polished = newton_root(&coeffs, cfg.tau, scale, rep.rightmost_root);
    assert!(
        (polished - rep.rightmost_root).norm() < 1e-6 * polished.norm().max(1.0),
        "collocation {} vs polished {}",
        rep.rightmost_root,
        polished
    );
    let residual = char_det(&coeffs, cfg.tau, scale, polished).norm();
    assert!(residual < 1e-8, "characteristic residual {residual}");
}

#[test]
fn delay_free_limit_recovers_drift_spectrum() {
    let cfg = NetworkConfig::new(3, 0.2, LossScenario::TransmissionAndAmplification)
        .unwrap()
        .with_tau(1e-11)
        .unwrap();
    let rep = dde_rightmost_root(&cfg).unwrap();
    let ss = assemble_state_space(&cfg).unwrap();
    let ode_max = max_real_eigenvalue(&ss.a).unwrap();
    assert!(
        (rep.rightmost_root.re - ode_max).abs() < 1e-3 * ode_max.abs(),
        "dde {} vs ode {}",
        rep.rightmost_root.re,
        ode_max
    );
}

#[test]
fn rejects_zero_delay() {
    let cfg = NetworkConfig::new(2, 0.2, LossScenario::Lossless)
        .unwrap()
        .with_tau(0.0)
        .unwrap();
    assert!(dde_rightmost_root(&cfg).is_err());
}

/// Explicit-Euler integration of the delayed equations with a history ring;
/// delays are exact multiples of the step, so no interpolation enters. This
/// is a route to the dominant root entirely independent of collocation.
fn time_domain_growth_rate(cfg: &NetworkConfig, horizon: f64) -> f64 {
    let coeffs = delay_coefficients(cfg).unwrap();
    let dim = coeffs[0].nrows();
    let steps_per_tau = 2048usize;
    let h = cfg.tau / steps_per_tau as f64;
    let hist_len = steps_per_tau * (coeffs.len() - 1) + 1;
    let mut history: Vec<DVector<f64>> = vec![DVector::zeros(dim); hist_len];
    let mut z = DVector::<f64>::from_element(dim, 1.0);
    let total = (horizon / h).ceil() as usize;
    let mut cursor = 0usize;
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for s in 0..total {
        history[cursor] = z.clone();
        let mut dz = &coeffs[0] * &z;
        for (k, ak) in coeffs.iter().enumerate().skip(1) {
            let back = (cursor + hist_len - k * steps_per_tau) % hist_len;
            dz += ak * &history[back];
        }
        z += h * dz;
        cursor = (cursor + 1) % hist_len;
        let norm = z.norm();
        // renormalize to dodge overflow; track accumulated log growth
        if s % 1024 == 0 {
            let t = s as f64 * h;
            let acc = samples.last().map(|&(_, a)| a).unwrap_or(0.0) + norm.ln();
            samples.push((t, acc));
            let inv = 1.0 / norm;
            z *= inv;
            for v in history.iter_mut() {
                *v *= inv;
            }
        }
    }
    // regression slope of accumulated log norm over the second half
    let half = samples.len() / 2;
    let pts = &samples[half..];
    let n = pts.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for &(t, y) in pts {
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    (n * sty - st * sy) / (n * stt - st * st)
}

#[test]
fn above_threshold_with_delay_is_unstable_and_grows() {
    // x above the delay-free lossless threshold 0.4142
    let cfg = NetworkConfig::new(2, 0.42, LossScenario::Lossless).unwrap();
    let rep = dde_rightmost_root(&cfg).unwrap();
    assert!(rep.converged);
    assert!(
        rep.rightmost_root.re > 0.0,
        "expected instability, rightmost = {}",
        rep.rightmost_root
    );
    // time-domain growth of the delayed equations matches the root
    let lambda = rep.rightmost_root.re;
    let rate = time_domain_growth_rate(&cfg, 12.0 / lambda);
    assert!(rate > 0.0);
    assert!(
        (rate - lambda).abs() < 0.05 * lambda,
        "euler growth {rate} vs collocation {lambda}"
    );
}

#[test]
fn section_five_two_nopa_point_is_stable() {
    let x = equal_power_x(2, 0.13, 6).unwrap();
    let cfg = NetworkConfig::new(2, x, LossScenario::TransmissionAndAmplification).unwrap();
    let rep = dde_rightmost_root(&cfg).unwrap();
    assert!(rep.converged);
    assert!(rep.is_stable(), "rightmost = {}", rep.rightmost_root);
    // history carries the convergence evidence
    assert!(rep.root_history.len() >= 2);
    let (last_order, last) = *rep.root_history.last().unwrap();
    assert_eq!(last_order, rep.discretization_order);
    assert_eq!(last, rep.rightmost_root);
}
