//! Gaussian-state covariance dynamics and bipartite entanglement.
//!
//! The covariance matrix P of the 2N cavity modes obeys
//! dP/dt = A P + P A^T + B B^T; its steady state solves the algebraic
//! Lyapunov equation. Two-mode entanglement is measured by the logarithmic
//! negativity computed from 4x4 covariance submatrices, including the
//! collective modes a_c, b_c.

use nalgebra::{DMatrix, Matrix4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{fro_norm, max_abs};
use crate::model::{QuadratureLayout, StateSpace};
use crate::params::NetworkConfig;
use crate::stability::is_hurwitz;

/// Relative residual bound for the algebraic Lyapunov solve.
pub const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-10;

/// nu at or above 1 - NU_SEPARABLE_BAND reports E = 0 (separability boundary).
pub const NU_SEPARABLE_BAND: f64 = 1e-12;

/// Symmetric covariance matrix of the 4N state quadratures.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    pub p: DMatrix<f64>,
    /// Sample time in seconds; `None` marks the steady state.
    pub time: Option<f64>,
}

impl CovarianceMatrix {
    pub fn vacuum(dim: usize) -> Self {
        Self {
            p: DMatrix::identity(dim, dim),
            time: Some(0.0),
        }
    }
}

/// One cavity mode of the chain, or a collective sum mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// a-mode of NOPA i, 1-based.
    A(usize),
    /// b-mode of NOPA i, 1-based.
    B(usize),
    /// Collective (1/sqrt(N)) sum of all a-modes.
    CollectiveA,
    /// Collective (1/sqrt(N)) sum of all b-modes.
    CollectiveB,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::A(i) => write!(f, "a{i}"),
            Mode::B(i) => write!(f, "b{i}"),
            Mode::CollectiveA => write!(f, "a_c"),
            Mode::CollectiveB => write!(f, "b_c"),
        }
    }
}

impl Serialize for Mode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Logarithmic negativity of one mode pair.
#[derive(Debug, Clone, Serialize)]
pub struct NegativityReport {
    pub pair: (Mode, Mode),
    /// Smallest symplectic-like quantity nu; nu < 1 signals entanglement.
    pub nu: f64,
    /// E = max(0, -log2 nu) >= 0.
    pub e_value: f64,
}

/// Steady-state covariance: solve A P + P A^T + B B^T = 0.
///
/// Direct solve of the half-vectorized (symmetry-reduced) linear system;
/// dimensions stay at n(n+1)/2 <= 300 at paper scale. Refuses non-Hurwitz A
/// and checks the residual against `LYAPUNOV_RESIDUAL_TOL`.
pub fn steady_state_covariance(ss: &StateSpace) -> Result<CovarianceMatrix> {
    let (hurwitz, max_re) = is_hurwitz(&ss.a)?;
    if !hurwitz {
        return Err(Error::Unstable(format!(
            "steady state needs a Hurwitz drift matrix; max real eigenvalue {max_re:.6e}"
        )));
    }
    let q = &ss.b * ss.b.transpose();
    let p = solve_lyapunov(&ss.a, &q)?;
    let residual = fro_norm(&(&ss.a * &p + &p * ss.a.transpose() + &q));
    let scale = fro_norm(&q);
    if residual > LYAPUNOV_RESIDUAL_TOL * scale {
        return Err(Error::Numerical(format!(
            "Lyapunov residual {residual:.3e} exceeds {LYAPUNOV_RESIDUAL_TOL:.0e} * ||BB^T|| = {:.3e}",
            LYAPUNOV_RESIDUAL_TOL * scale
        )));
    }
    Ok(CovarianceMatrix { p, time: None })
}

/// Solve A P + P A^T = -Q for symmetric P via the half-vectorized system.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::InvalidParameter("solve_lyapunov: dimension mismatch".into()));
    }
    let m = n * (n + 1) / 2;
    let idx = |i: usize, j: usize| -> usize {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        lo * (2 * n - lo + 1) / 2 + (hi - lo)
    };
    let mut sys = DMatrix::<f64>::zeros(m, m);
    let mut rhs = nalgebra::DVector::<f64>::zeros(m);
    for i in 0..n {
        for j in i..n {
            let row = idx(i, j);
            rhs[row] = -q[(i, j)];
            for k in 0..n {
                // (A P)_{ij} = sum_k A_{ik} P_{kj};  (P A^T)_{ij} = sum_k P_{ik} A_{jk}
                sys[(row, idx(k, j))] += a[(i, k)];
                sys[(row, idx(i, k))] += a[(j, k)];
            }
        }
    }
    let lu = sys.lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Lyapunov system".into()))?;
    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            p[(i, j)] = sol[idx(i, j)];
            p[(j, i)] = sol[idx(i, j)];
        }
    }
    Ok(p)
}

/// Integrate dP/dt = A P + P A^T + B B^T with an embedded Dormand-Prince 4(5)
/// pair at absolute tolerance 1e-12, emitting samples every `dt` (the first
/// sample is `p0` itself). Each emitted sample is re-symmetrized.
pub fn covariance_trajectory(
    ss: &StateSpace,
    p0: &CovarianceMatrix,
    t_end: f64,
    dt: f64,
) -> Result<Vec<CovarianceMatrix>> {
    if !(t_end >= 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "trajectory needs t_end >= 0 and dt > 0, got t_end = {t_end}, dt = {dt}"
        )));
    }
    let dim = ss.a.nrows();
    if p0.p.nrows() != dim || p0.p.ncols() != dim {
        return Err(Error::InvalidParameter("p0 dimension mismatch".into()));
    }
    if max_abs(&(&p0.p - p0.p.transpose())) > 1e-12 * max_abs(&p0.p).max(1.0) {
        return Err(Error::InvalidParameter("p0 must be symmetric".into()));
    }
    let q = &ss.b * ss.b.transpose();
    let at = ss.a.transpose();
    let deriv = |p: &DMatrix<f64>| &ss.a * p + p * &at + &q;

    let n_samples = (t_end / dt).round() as usize;
    let mut out = Vec::with_capacity(n_samples + 1);
    out.push(CovarianceMatrix {
        p: p0.p.clone(),
        time: Some(0.0),
    });
    let mut p = p0.p.clone();
    let mut h = dt / 4.0;
    for s in 1..=n_samples {
        let t_target = s as f64 * dt;
        let mut t = (s - 1) as f64 * dt;
        while t < t_target {
            let remaining = t_target - t;
            let step = h.min(remaining);
            let (p_new, err) = dp45_step(&deriv, &p, step);
            let tol = 1e-12_f64;
            if err <= tol.max(1e-16) || step <= 1e-18 * t_end.max(dt) {
                if step <= 1e-18 * t_end.max(dt) && err > tol {
                    return Err(Error::Numerical(format!(
                        "step size collapsed at t = {t:.3e} (error {err:.3e})"
                    )));
                }
                p = p_new;
                t += step;
            }
            // PI-free basic controller with safety factor
            let factor = if err > 0.0 {
                0.9 * (tol / err).powf(0.2)
            } else {
                5.0
            };
            h = (step * factor.clamp(0.2, 5.0)).min(dt);
        }
        let sym = (&p + p.transpose()) * 0.5;
        p = sym.clone();
        out.push(CovarianceMatrix {
            p: sym,
            time: Some(t_target),
        });
    }
    Ok(out)
}

/// One embedded Dormand-Prince step; returns (5th-order update, error estimate).
fn dp45_step(
    f: &dyn Fn(&DMatrix<f64>) -> DMatrix<f64>,
    y: &DMatrix<f64>,
    h: f64,
) -> (DMatrix<f64>, f64) {
    let k1 = f(y);
    let k2 = f(&(y + h * 0.2 * &k1));
    let k3 = f(&(y + h * (0.075 * &k1 + 0.225 * &k2)));
    let k4 = f(&(y + h * (44.0 / 45.0 * &k1 - 56.0 / 15.0 * &k2 + 32.0 / 9.0 * &k3)));
    let k5 = f(&(y
        + h * (19372.0 / 6561.0 * &k1 - 25360.0 / 2187.0 * &k2 + 64448.0 / 6561.0 * &k3
            - 212.0 / 729.0 * &k4)));
    let k6 = f(&(y
        + h * (9017.0 / 3168.0 * &k1 - 355.0 / 33.0 * &k2 + 46732.0 / 5247.0 * &k3
            + 49.0 / 176.0 * &k4
            - 5103.0 / 18656.0 * &k5)));
    let y5 = y
        + h * (35.0 / 384.0 * &k1 + 500.0 / 1113.0 * &k3 + 125.0 / 192.0 * &k4
            - 2187.0 / 6784.0 * &k5
            + 11.0 / 84.0 * &k6);
    let k7 = f(&y5);
    let y4 = y
        + h * (5179.0 / 57600.0 * &k1 + 7571.0 / 16695.0 * &k3 + 393.0 / 640.0 * &k4
            - 92097.0 / 339200.0 * &k5
            + 187.0 / 2100.0 * &k6
            + 1.0 / 40.0 * &k7);
    let err = max_abs(&(&y5 - y4));
    (y5, err)
}

/// Extract the 4x4 covariance of a mode pair, ordered (mode1 pair, mode2 pair).
pub fn mode_pair_submatrix(
    cov: &CovarianceMatrix,
    n_nopas: usize,
    mode_1: Mode,
    mode_2: Mode,
) -> Result<Matrix4<f64>> {
    if mode_1 == mode_2 {
        return Err(Error::InvalidParameter("mode pair must be distinct".into()));
    }
    let lay = QuadratureLayout::new(n_nopas);
    let row_of = |m: Mode| -> Result<usize> {
        let (i, r) = match m {
            Mode::A(i) => (i, lay.a_row(i)),
            Mode::B(i) => (i, lay.b_row(i)),
            _ => {
                return Err(Error::InvalidParameter(
                    "collective modes use collective_covariance".into(),
                ))
            }
        };
        if i == 0 || i > n_nopas {
            return Err(Error::OutOfRange(format!("mode index {i} outside 1..={n_nopas}")));
        }
        Ok(r)
    };
    let r1 = row_of(mode_1)?;
    let r2 = row_of(mode_2)?;
    let rows = [r1, r1 + 1, r2, r2 + 1];
    let mut sub = Matrix4::<f64>::zeros();
    for (a, &ra) in rows.iter().enumerate() {
        for (b, &rb) in rows.iter().enumerate() {
            sub[(a, b)] = cov.p[(ra, rb)];
        }
    }
    Ok(sub)
}

/// Covariance of the collective modes (a_c, b_c): M P M^T with
/// M = (1/sqrt N) [I_4 ... I_4].
pub fn collective_covariance(cov: &CovarianceMatrix, n_nopas: usize) -> Matrix4<f64> {
    let dim = 4 * n_nopas;
    let scale = 1.0 / (n_nopas as f64).sqrt();
    let mut m = DMatrix::<f64>::zeros(4, dim);
    for i in 0..n_nopas {
        for r in 0..4 {
            m[(r, 4 * i + r)] = scale;
        }
    }
    let pc = &m * &cov.p * m.transpose();
    Matrix4::from_fn(|i, j| pc[(i, j)])
}

/// Logarithmic negativity of a two-mode covariance matrix.
///
/// Splits P into 2x2 blocks, forms Delta = det P1 + det P3 - 2 det P2 and
/// nu = sqrt((Delta - sqrt(Delta^2 - 4 det P)) / 2); E = max(0, -log2 nu).
/// nu within `NU_SEPARABLE_BAND` of 1 reports exactly 0.
pub fn log_negativity(p4: &Matrix4<f64>) -> Result<(f64, f64)> {
    let sym_err = (p4 - p4.transpose()).abs().max();
    if sym_err > 1e-9 * p4.abs().max().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "covariance submatrix not symmetric (max asymmetry {sym_err:.3e})"
        )));
    }
    let det2 = |r: usize, c: usize| -> f64 {
        p4[(r, c)] * p4[(r + 1, c + 1)] - p4[(r, c + 1)] * p4[(r + 1, c)]
    };
    let delta = det2(0, 0) + det2(2, 2) - 2.0 * det2(0, 2);
    let det_p = p4.determinant();
    let mut radicand = delta * delta - 4.0 * det_p;
    if radicand < 0.0 {
        if radicand < -1e-12 {
            return Err(Error::Numerical(format!(
                "negative radicand {radicand:.3e}: input is not a physical two-mode covariance"
            )));
        }
        radicand = 0.0;
    }
    let mut inner = 0.5 * (delta - radicand.sqrt());
    if inner < 0.0 {
        if inner < -1e-12 {
            return Err(Error::Numerical(format!(
                "negative symplectic radicand {inner:.3e}: unphysical input"
            )));
        }
        inner = 0.0;
    }
    let nu = inner.sqrt();
    if nu >= 1.0 - NU_SEPARABLE_BAND {
        return Ok((nu, 0.0));
    }
    if nu < 1e-300 {
        return Err(Error::Numerical("degenerate symplectic value nu = 0".into()));
    }
    Ok((nu, -nu.log2()))
}

fn report_for(cov: &CovarianceMatrix, n: usize, pair: (Mode, Mode)) -> Result<NegativityReport> {
    let p4 = match pair {
        (Mode::CollectiveA, Mode::CollectiveB) => collective_covariance(cov, n),
        (m1, m2) => mode_pair_submatrix(cov, n, m1, m2)?,
    };
    let (nu, e_value) = log_negativity(&p4)?;
    Ok(NegativityReport { pair, nu, e_value })
}

/// The mode pairs tracked by the steady-state and trajectory suites:
/// (a_i, b_i), (a_i, b_{i+1}), (a_{i+1}, b_i), (a_1, b_N), (a_N, b_1), (a_c, b_c).
pub fn suite_pairs(n: usize) -> Vec<(Mode, Mode)> {
    let mut pairs = Vec::new();
    for i in 1..=n {
        pairs.push((Mode::A(i), Mode::B(i)));
    }
    for i in 1..n {
        pairs.push((Mode::A(i), Mode::B(i + 1)));
    }
    for i in 1..n {
        pairs.push((Mode::A(i + 1), Mode::B(i)));
    }
    for extra in [(Mode::A(1), Mode::B(n)), (Mode::A(n), Mode::B(1))] {
        if !pairs.contains(&extra) {
            pairs.push(extra);
        }
    }
    pairs.push((Mode::CollectiveA, Mode::CollectiveB));
    pairs
}

/// Steady-state logarithmic negativities for the tracked pairs.
pub fn negativity_suite(cfg: &NetworkConfig) -> Result<Vec<NegativityReport>> {
    let ss = crate::model::assemble_state_space(cfg)?;
    let cov = steady_state_covariance(&ss)?;
    suite_pairs(cfg.n_nopas)
        .into_iter()
        .map(|pair| report_for(&cov, cfg.n_nopas, pair))
        .collect()
}

/// Time evolution of the tracked negativities from the vacuum state.
#[derive(Debug, Clone, Serialize)]
pub struct NegativityTrajectory {
    pub times: Vec<f64>,
    pub pairs: Vec<(Mode, Mode)>,
    /// values[k][p] = E of pair p at times[k].
    pub values: Vec<Vec<f64>>,
}

pub fn negativity_trajectory(
    cfg: &NetworkConfig,
    t_end: f64,
    dt: f64,
) -> Result<NegativityTrajectory> {
    let ss = crate::model::assemble_state_space(cfg)?;
    let p0 = CovarianceMatrix::vacuum(ss.a.nrows());
    let traj = covariance_trajectory(&ss, &p0, t_end, dt)?;
    let pairs = suite_pairs(cfg.n_nopas);
    let mut values = Vec::with_capacity(traj.len());
    let mut times = Vec::with_capacity(traj.len());
    for cov in &traj {
        times.push(cov.time.unwrap_or(f64::NAN));
        let row: Result<Vec<f64>> = pairs
            .iter()
            .map(|&pair| report_for(cov, cfg.n_nopas, pair).map(|r| r.e_value))
            .collect();
        values.push(row?);
    }
    Ok(NegativityTrajectory {
        times,
        pairs,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::assemble_state_space;
    use crate::params::LossScenario;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_is_the_passive_fixed_point() {
        // x = 0: A + A^T + B B^T = 0 exactly, so P = I solves the equation
        for scen in LossScenario::ALL {
            let cfg = NetworkConfig::new(3, 0.0, scen).unwrap();
            let ss = assemble_state_space(&cfg).unwrap();
            let cov = steady_state_covariance(&ss).unwrap();
            let id = DMatrix::<f64>::identity(12, 12);
            assert!(max_abs(&(&cov.p - id)) < 1e-10, "{scen}");
        }
    }

    #[test]
    fn scalar_block_closed_form() {
        // A = -I, B B^T = 2I, P0 = 0: P(t) = (1 - e^{-2t}) I
        let dim = 4;
        let ss = StateSpace {
            a: DMatrix::identity(dim, dim) * -1.0,
            b: DMatrix::identity(dim, dim) * std::f64::consts::SQRT_2,
            c: DMatrix::zeros(4, dim),
            d: DMatrix::zeros(4, dim),
            layout: QuadratureLayout::new(1),
        };
        let p0 = CovarianceMatrix {
            p: DMatrix::zeros(dim, dim),
            time: Some(0.0),
        };
        let traj = covariance_trajectory(&ss, &p0, 1.0, 0.25).unwrap();
        assert_eq!(traj.len(), 5);
        let want = 1.0 - (-2.0f64).exp();
        for i in 0..dim {
            assert_relative_eq!(traj[4].p[(i, i)], want, epsilon = 1e-8);
        }
        // t = 0 returns p0 exactly
        assert_eq!(traj[0].p[(0, 0)], 0.0);
    }

    #[test]
    fn submatrix_indices_match_quadrature_layout() {
        // (a_1, b_6) in a 6-NOPA chain picks rows/cols {1,2,23,24} (1-based)
        let n = 6;
        let dim = 4 * n;
        let p = DMatrix::<f64>::from_fn(dim, dim, |i, j| (i * dim + j) as f64);
        let cov = CovarianceMatrix {
            p: (&p + p.transpose()) * 0.5,
            time: None,
        };
        let sub = mode_pair_submatrix(&cov, n, Mode::A(1), Mode::B(6)).unwrap();
        for (a, &ra) in [0usize, 1, 22, 23].iter().enumerate() {
            for (b, &rb) in [0usize, 1, 22, 23].iter().enumerate() {
                assert_eq!(sub[(a, b)], cov.p[(ra, rb)]);
            }
        }
        assert!(mode_pair_submatrix(&cov, n, Mode::A(7), Mode::B(1)).is_err());
        assert!(mode_pair_submatrix(&cov, n, Mode::A(1), Mode::A(1)).is_err());
    }

    #[test]
    fn identity_covariance_is_separable() {
        let p4 = Matrix4::<f64>::identity();
        let (nu, e) = log_negativity(&p4).unwrap();
        assert_relative_eq!(nu, 1.0, epsilon = 1e-14);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn two_mode_squeezed_analytic_negativity() {
        // standard form [[cosh r I, sinh r Z], [sinh r Z, cosh r I]]:
        // nu = e^{-r}, E = r / ln 2
        let r = 1.0f64;
        let (ch, sh) = (r.cosh(), r.sinh());
        let mut p4 = Matrix4::<f64>::zeros();
        for (i, s) in [(0usize, 1.0f64), (1, -1.0)] {
            p4[(i, i)] = ch;
            p4[(i + 2, i + 2)] = ch;
            p4[(i, i + 2)] = s * sh;
            p4[(i + 2, i)] = s * sh;
        }
        let (nu, e) = log_negativity(&p4).unwrap();
        assert_relative_eq!(nu, (-r).exp(), epsilon = 1e-12);
        assert_relative_eq!(e, r / std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn collective_of_identity_is_identity() {
        let cov = CovarianceMatrix {
            p: DMatrix::identity(20, 20),
            time: None,
        };
        let pc = collective_covariance(&cov, 5);
        assert!(max_abs(&DMatrix::from_fn(4, 4, |i, j| {
            pc[(i, j)] - if i == j { 1.0 } else { 0.0 }
        })) < 1e-14);
    }

    #[test]
    fn steady_state_refuses_unstable() {
        let cfg = NetworkConfig::new(2, 0.6, LossScenario::Lossless).unwrap();
        let ss = assemble_state_space(&cfg).unwrap();
        assert!(matches!(
            steady_state_covariance(&ss),
            Err(Error::Unstable(_))
        ));
    }

    #[test]
    fn suite_pairs_dedupes_two_nopa_overlap() {
        let pairs = suite_pairs(2);
        // (a1,b2) and (a2,b1) appear once each
        let count = |p: (Mode, Mode)| pairs.iter().filter(|&&q| q == p).count();
        assert_eq!(count((Mode::A(1), Mode::B(2))), 1);
        assert_eq!(count((Mode::A(2), Mode::B(1))), 1);
        assert_eq!(pairs.last(), Some(&(Mode::CollectiveA, Mode::CollectiveB)));
    }
}
