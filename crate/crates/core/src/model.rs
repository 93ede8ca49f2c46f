//! Quadrature state-space model of the N-NOPA coherent feedback chain.
//!
//! States are ordered per NOPA i as (a_i^q, a_i^p, b_i^q, b_i^p). Inputs are
//! ordered as the two end fields, then the per-NOPA amplification-loss pairs,
//! then the beamsplitter noise fields: a-path segment noises carry the index
//! of the NOPA they leave (1..N-1), b-path segment noises likewise (2..N).
//!
//! Two constructions of the same model exist: [`assemble_state_space`] sums
//! the closed-form network coefficients directly, while
//! [`crate::interconnect::compose_by_interconnection`] chains elementary
//! NOPA and beamsplitter blocks. They must agree entrywise.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::params::NetworkConfig;

/// Row/column bookkeeping for the quadrature state and input vectors.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureLayout {
    pub n_nopas: usize,
}

impl QuadratureLayout {
    pub fn new(n_nopas: usize) -> Self {
        Self { n_nopas }
    }

    /// First state row of the (a_i^q, a_i^p) pair, i in 1..=N.
    pub fn a_row(&self, i: usize) -> usize {
        4 * (i - 1)
    }

    /// First state row of the (b_i^q, b_i^p) pair, i in 1..=N.
    pub fn b_row(&self, i: usize) -> usize {
        4 * (i - 1) + 2
    }

    /// Column of the (xi_in_a_1^q, xi_in_a_1^p) pair.
    pub fn col_in_a(&self) -> usize {
        0
    }

    /// Column of the (xi_in_b_N^q, xi_in_b_N^p) pair.
    pub fn col_in_b(&self) -> usize {
        2
    }

    pub fn col_loss_a(&self, i: usize) -> usize {
        4 + 4 * (i - 1)
    }

    pub fn col_loss_b(&self, i: usize) -> usize {
        4 + 4 * (i - 1) + 2
    }

    /// Column of the a-path beamsplitter noise leaving NOPA i, i in 1..=N-1.
    pub fn col_bs_a(&self, i: usize) -> usize {
        let base = 4 + 4 * self.n_nopas;
        if i == 1 {
            base
        } else {
            base + 2 + 4 * (i - 2)
        }
    }

    /// Column of the b-path beamsplitter noise leaving NOPA j, j in 2..=N.
    pub fn col_bs_b(&self, j: usize) -> usize {
        if j == self.n_nopas {
            8 * self.n_nopas - 2
        } else {
            4 + 4 * self.n_nopas + 2 + 4 * (j - 2) + 2
        }
    }

    pub fn state_labels(&self) -> Vec<String> {
        let mut v = Vec::with_capacity(4 * self.n_nopas);
        for i in 1..=self.n_nopas {
            for q in ["a_q", "a_p", "b_q", "b_p"] {
                v.push(format!("{q}[{i}]"));
            }
        }
        v
    }

    pub fn input_labels(&self) -> Vec<String> {
        let n = self.n_nopas;
        let mut v = vec![String::new(); 8 * n];
        let mut put = |col: usize, name: String| {
            v[col] = name;
        };
        put(self.col_in_a(), "xi_in_a_q[1]".into());
        put(self.col_in_a() + 1, "xi_in_a_p[1]".into());
        put(self.col_in_b(), format!("xi_in_b_q[{n}]"));
        put(self.col_in_b() + 1, format!("xi_in_b_p[{n}]"));
        for i in 1..=n {
            put(self.col_loss_a(i), format!("xi_loss_a_q[{i}]"));
            put(self.col_loss_a(i) + 1, format!("xi_loss_a_p[{i}]"));
            put(self.col_loss_b(i), format!("xi_loss_b_q[{i}]"));
            put(self.col_loss_b(i) + 1, format!("xi_loss_b_p[{i}]"));
        }
        for i in 1..n {
            put(self.col_bs_a(i), format!("xi_BS_a_q[{i}]"));
            put(self.col_bs_a(i) + 1, format!("xi_BS_a_p[{i}]"));
        }
        for j in 2..=n {
            put(self.col_bs_b(j), format!("xi_BS_b_q[{j}]"));
            put(self.col_bs_b(j) + 1, format!("xi_BS_b_p[{j}]"));
        }
        v
    }
}

/// Machine-readable description of the state/input orderings.
#[derive(Debug, Clone, Serialize)]
pub struct IndexMaps {
    pub state: Vec<String>,
    pub input: Vec<String>,
}

/// Real quadrature state-space model (A, B, C, D) of the delay-free network.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub layout: QuadratureLayout,
}

impl StateSpace {
    pub fn n_nopas(&self) -> usize {
        self.layout.n_nopas
    }

    pub fn index_maps(&self) -> IndexMaps {
        IndexMaps {
            state: self.layout.state_labels(),
            input: self.layout.input_labels(),
        }
    }

    /// Index maps as JSON, for downstream tools addressing submatrices.
    pub fn index_maps_json(&self) -> String {
        serde_json::to_string_pretty(&self.index_maps()).expect("index maps serialize")
    }
}

/// Frequency-dependent matrices of the delayed network at a single frequency.
/// Every coefficient that propagates through k path segments carries the
/// factor exp(-i k omega tau). At tau = 0 these equal the real matrices.
#[derive(Debug, Clone)]
pub struct FrequencyMatrices {
    pub omega: f64,
    pub a: DMatrix<C64>,
    pub b: DMatrix<C64>,
    pub c: DMatrix<C64>,
    pub d: DMatrix<C64>,
    pub layout: QuadratureLayout,
}

/// 2x2 rotation for a phase shift acting on a quadrature pair.
fn rotation(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, -s], [s, c]]
}

/// Core assembly, parameterized by the per-segment propagation phase.
/// `phase(k)` multiplies every coefficient whose field crossed k segments.
fn assemble_with_phase(cfg: &NetworkConfig, phase: &dyn Fn(usize) -> C64) -> Matrices {
    let n = cfg.n_nopas;
    let lay = QuadratureLayout::new(n);
    let g = cfg.nopa.gamma;
    let kappa = cfg.nopa.kappa;
    let eps = cfg.nopa.epsilon;
    let al = cfg.alpha;
    let be = cfg.beta;
    let m = (g + kappa) / 2.0;
    let sg = g.sqrt();
    let sk = kappa.sqrt();

    let mut a = DMatrix::<C64>::zeros(4 * n, 4 * n);
    let mut b = DMatrix::<C64>::zeros(4 * n, 8 * n);
    let mut c = DMatrix::<C64>::zeros(4, 4 * n);
    let mut d = DMatrix::<C64>::zeros(4, 8 * n);

    let add_pair = |mat: &mut DMatrix<C64>, r: usize, cc: usize, coeff: C64| {
        mat[(r, cc)] += coeff;
        mat[(r + 1, cc + 1)] += coeff;
    };
    let add_rot = |mat: &mut DMatrix<C64>, r: usize, cc: usize, coeff: C64, rot: &[[f64; 2]; 2]| {
        for (dr, row) in rot.iter().enumerate() {
            for (dc, v) in row.iter().enumerate() {
                mat[(r + dr, cc + dc)] += coeff * *v;
            }
        }
    };

    for i in 1..=n {
        let s = lay.a_row(i);
        // local damping on all four quadratures
        for q in 0..4 {
            a[(s + q, s + q)] += C64::new(-m, 0.0);
        }
        // pump coupling between the a and b quadratures of the same NOPA
        a[(s, s + 2)] += C64::new(eps / 2.0, 0.0);
        a[(s + 1, s + 3)] += C64::new(-eps / 2.0, 0.0);
        a[(s + 2, s)] += C64::new(eps / 2.0, 0.0);
        a[(s + 3, s + 1)] += C64::new(-eps / 2.0, 0.0);
    }
    // a-path chain: a_i driven by a_{i-k} through k segments
    for i in 2..=n {
        for k in 1..i {
            let coeff = phase(k) * (-g * al.powi(k as i32));
            add_pair(&mut a, lay.a_row(i), lay.a_row(i - k), coeff);
        }
    }
    // b-path chain: b_j driven by b_{j+k} through k segments
    for j in 1..n {
        for k in 1..=(n - j) {
            let coeff = phase(k) * (-g * al.powi(k as i32));
            add_pair(&mut a, lay.b_row(j), lay.b_row(j + k), coeff);
        }
    }

    for i in 1..=n {
        add_pair(&mut b, lay.a_row(i), lay.col_loss_a(i), C64::new(-sk, 0.0));
        add_pair(&mut b, lay.b_row(i), lay.col_loss_b(i), C64::new(-sk, 0.0));
        // end field xi_in_a_1 reaches a_i through i-1 segments
        let coeff = phase(i - 1) * (-sg * al.powi(i as i32 - 1));
        add_pair(&mut b, lay.a_row(i), lay.col_in_a(), coeff);
        // end field xi_in_b_N reaches b_i through N-i segments
        let coeff = phase(n - i) * (-sg * al.powi((n - i) as i32));
        add_pair(&mut b, lay.b_row(i), lay.col_in_b(), coeff);
        // beamsplitter noises: the noise leaving NOPA i-k reaches a_i after k
        // segments, attenuated by the k-1 splitters it crosses afterwards
        for k in 1..i {
            let coeff = phase(k) * (-be * sg * al.powi(k as i32 - 1));
            add_pair(&mut b, lay.a_row(i), lay.col_bs_a(i - k), coeff);
        }
        for k in 1..=(n - i) {
            let coeff = phase(k) * (-be * sg * al.powi(k as i32 - 1));
            add_pair(&mut b, lay.b_row(i), lay.col_bs_b(i + k), coeff);
        }
    }

    let ra = rotation(cfg.theta_a);
    let rb = rotation(cfg.theta_b);
    for k in 1..=n {
        let coeff = phase(n - k) * (sg * al.powi((n - k) as i32));
        add_rot(&mut c, 0, lay.a_row(k), coeff, &ra);
        let coeff = phase(k - 1) * (sg * al.powi(k as i32 - 1));
        add_rot(&mut c, 2, lay.b_row(k), coeff, &rb);
    }
    let coeff = phase(n - 1) * al.powi(n as i32 - 1);
    add_rot(&mut d, 0, lay.col_in_a(), coeff, &ra);
    add_rot(&mut d, 2, lay.col_in_b(), coeff, &rb);
    for k in 1..n {
        let coeff = phase(k) * (be * al.powi(k as i32 - 1));
        add_rot(&mut d, 0, lay.col_bs_a(n - k), coeff, &ra);
        add_rot(&mut d, 2, lay.col_bs_b(k + 1), coeff, &rb);
    }

    Matrices { a, b, c, d, layout: lay }
}

struct Matrices {
    a: DMatrix<C64>,
    b: DMatrix<C64>,
    c: DMatrix<C64>,
    d: DMatrix<C64>,
    layout: QuadratureLayout,
}

/// Assemble the delay-free quadrature state-space model (constant matrices).
pub fn assemble_state_space(cfg: &NetworkConfig) -> Result<StateSpace> {
    validate(cfg)?;
    let m = assemble_with_phase(cfg, &|_| C64::new(1.0, 0.0));
    // phase == 1 keeps the arithmetic exactly real
    let re = |x: DMatrix<C64>| x.map(|z| z.re);
    Ok(StateSpace {
        a: re(m.a),
        b: re(m.b),
        c: re(m.c),
        d: re(m.d),
        layout: m.layout,
    })
}

/// Assemble the frequency-dependent matrices of the delayed network at omega.
pub fn assemble_frequency_matrices(cfg: &NetworkConfig, omega: f64) -> Result<FrequencyMatrices> {
    validate(cfg)?;
    let tau = cfg.tau;
    let m = assemble_with_phase(cfg, &|k| {
        let arg = -(k as f64) * omega * tau;
        C64::new(arg.cos(), arg.sin())
    });
    Ok(FrequencyMatrices {
        omega,
        a: m.a,
        b: m.b,
        c: m.c,
        d: m.d,
        layout: m.layout,
    })
}

fn validate(cfg: &NetworkConfig) -> Result<()> {
    if cfg.n_nopas < 2 {
        return Err(Error::InvalidParameter(format!(
            "chain needs at least 2 NOPAs, got {}",
            cfg.n_nopas
        )));
    }
    if !(0.0..=1.0).contains(&cfg.alpha) || cfg.beta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "transmission rate out of range: alpha = {}, beta = {}",
            cfg.alpha, cfg.beta
        )));
    }
    if (cfg.alpha * cfg.alpha + cfg.beta * cfg.beta - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(
            "alpha^2 + beta^2 must equal 1".into(),
        ));
    }
    if cfg.tau < 0.0 {
        return Err(Error::InvalidParameter("delay must be nonnegative".into()));
    }
    Ok(())
}

/// Residual of the physical-realizability relation
/// A Theta + Theta A^T + B Theta_in B^T = 0, with Theta the commutation
/// matrix of the state quadrature pairs. Zero (to roundoff) for every valid
/// configuration; this is what pins the beamsplitter index conventions.
pub fn physical_realizability_residual(ss: &StateSpace) -> f64 {
    let theta = |dim: usize| {
        let mut t = DMatrix::<f64>::zeros(dim, dim);
        for p in 0..dim / 2 {
            t[(2 * p, 2 * p + 1)] = 2.0;
            t[(2 * p + 1, 2 * p)] = -2.0;
        }
        t
    };
    let th = theta(ss.a.nrows());
    let tin = theta(ss.b.ncols());
    let r = &ss.a * &th + &th * ss.a.transpose() + &ss.b * tin * ss.b.transpose();
    crate::linalg::max_abs(&r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::LossScenario;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_single_nopa() {
        assert!(NetworkConfig::new(1, 0.1, LossScenario::Lossless).is_err());
    }

    #[test]
    fn shapes_and_minimum_chain() {
        let cfg = NetworkConfig::new(2, 0.1, LossScenario::Lossless).unwrap();
        let ss = assemble_state_space(&cfg).unwrap();
        assert_eq!(ss.a.shape(), (8, 8));
        assert_eq!(ss.b.shape(), (8, 16));
        assert_eq!(ss.c.shape(), (4, 8));
        assert_eq!(ss.d.shape(), (4, 16));
        // off-diagonal blocks alpha*A_a (lower) and alpha*A_b (upper)
        let g = cfg.nopa.gamma;
        assert_relative_eq!(ss.a[(4, 0)], -cfg.alpha * g);
        assert_relative_eq!(ss.a[(5, 1)], -cfg.alpha * g);
        assert_relative_eq!(ss.a[(2, 6)], -cfg.alpha * g);
        assert_relative_eq!(ss.a[(3, 7)], -cfg.alpha * g);
        assert_eq!(ss.a[(0, 4)], 0.0);
        assert_eq!(ss.a[(6, 2)], 0.0);
    }

    #[test]
    fn zero_pump_removes_coupling() {
        let cfg = NetworkConfig::new(2, 0.0, LossScenario::Lossless).unwrap();
        let ss = assemble_state_space(&cfg).unwrap();
        let g = cfg.nopa.gamma;
        for i in 0..8 {
            assert_relative_eq!(ss.a[(i, i)], -g / 2.0);
        }
        // no a<->b coupling inside a NOPA at x = 0
        assert_eq!(ss.a[(0, 2)], 0.0);
        assert_eq!(ss.a[(2, 0)], 0.0);
    }

    #[test]
    fn d_rows_have_unit_power() {
        for n in [2, 3, 5] {
            for scen in LossScenario::ALL {
                let cfg = NetworkConfig::new(n, 0.2, scen).unwrap();
                let ss = assemble_state_space(&cfg).unwrap();
                let ddt = &ss.d * ss.d.transpose();
                let id = DMatrix::<f64>::identity(4, 4);
                assert!(crate::linalg::max_abs(&(ddt - id)) < 1e-12, "N={n} {scen}");
            }
        }
    }

    #[test]
    fn realizability_holds_with_and_without_losses() {
        for n in 2..=6 {
            for scen in LossScenario::ALL {
                let cfg = NetworkConfig::new(n, 0.21, scen).unwrap();
                let ss = assemble_state_space(&cfg).unwrap();
                let r = physical_realizability_residual(&ss);
                assert!(r < 1e-6, "N={n} {scen}: residual {r}");
            }
        }
    }

    #[test]
    fn frequency_matrices_reduce_to_constant() {
        let cfg = NetworkConfig::new(3, 0.2, LossScenario::TransmissionAndAmplification).unwrap();
        let ss = assemble_state_space(&cfg).unwrap();
        // tau = 0 at any omega
        let cfg0 = cfg.clone().with_tau(0.0).unwrap();
        let fm = assemble_frequency_matrices(&cfg0, 3.7e6).unwrap();
        assert!(fm.a.iter().zip(ss.a.iter()).all(|(z, r)| (z.re - r).abs() < 1e-15 && z.im == 0.0));
        // omega = 0 at any tau
        let fm = assemble_frequency_matrices(&cfg, 0.0).unwrap();
        for (z, r) in fm.b.iter().zip(ss.b.iter()) {
            assert_relative_eq!(z.re, *r, epsilon = 1e-15);
            assert_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn delay_factors_have_unit_modulus() {
        let cfg = NetworkConfig::new(2, 0.2, LossScenario::Lossless)
            .unwrap()
            .with_tau(1e-6)
            .unwrap();
        let ss = assemble_state_space(&cfg).unwrap();
        let fm = assemble_frequency_matrices(&cfg, 1e6).unwrap();
        // off-diagonal A blocks are single-segment terms: same modulus, rotated
        let z = fm.a[(4, 0)];
        assert_relative_eq!(z.norm(), ss.a[(4, 0)].abs(), max_relative = 1e-14);
        assert_relative_eq!(z.arg(), -1.0 + std::f64::consts::PI, max_relative = 1e-12);
    }

    #[test]
    fn index_maps_follow_input_ordering() {
        let lay = QuadratureLayout::new(3);
        let labels = lay.input_labels();
        assert_eq!(labels[0], "xi_in_a_q[1]");
        assert_eq!(labels[2], "xi_in_b_q[3]");
        assert_eq!(labels[4], "xi_loss_a_q[1]");
        assert_eq!(labels[6], "xi_loss_b_q[1]");
        assert_eq!(labels[16], "xi_BS_a_q[1]");
        assert_eq!(labels[18], "xi_BS_a_q[2]");
        assert_eq!(labels[20], "xi_BS_b_q[2]");
        assert_eq!(labels[22], "xi_BS_b_q[3]");
        assert!(labels.iter().all(|l| !l.is_empty()));
        let ss = assemble_state_space(&NetworkConfig::new(3, 0.1, LossScenario::Lossless).unwrap())
            .unwrap();
        let json = ss.index_maps_json();
        assert!(json.contains("\"a_q[1]\""));
        assert!(json.contains("\"xi_BS_a_q[2]\""));
    }
}
