//! Network construction by elementary series composition.
//!
//! Instead of the closed-form coefficient sums used by
//! [`crate::model::assemble_state_space`], this walks the chain signal by
//! signal: per-NOPA Langevin blocks, static beamsplitter mixing
//! (out = alpha in + beta noise), a-path composed left to right, b-path right
//! to left, phase rotations applied last. Both constructions must agree
//! entrywise; keeping them independent is what makes the agreement a check.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{QuadratureLayout, StateSpace};
use crate::params::NetworkConfig;

/// Affine carrier for one propagating quadrature pair: the pair expressed as
/// rows over the state vector (z) and the input vector (xi).
struct Carrier {
    z: DMatrix<f64>,
    xi: DMatrix<f64>,
}

impl Carrier {
    fn zero(nz: usize, nxi: usize) -> Self {
        Self {
            z: DMatrix::zeros(2, nz),
            xi: DMatrix::zeros(2, nxi),
        }
    }

    /// Carrier that picks an input quadrature pair at column `col`.
    fn input_pick(nz: usize, nxi: usize, col: usize) -> Self {
        let mut c = Self::zero(nz, nxi);
        c.xi[(0, col)] = 1.0;
        c.xi[(1, col + 1)] = 1.0;
        c
    }

    /// Carrier that picks a state quadrature pair at row `row`, scaled.
    fn state_pick(nz: usize, nxi: usize, row: usize, scale: f64) -> Self {
        let mut c = Self::zero(nz, nxi);
        c.z[(0, row)] = scale;
        c.z[(1, row + 1)] = scale;
        c
    }

    fn add_scaled(&mut self, other: &Carrier, s: f64) {
        self.z += s * &other.z;
        self.xi += s * &other.xi;
    }

    fn scale(&mut self, s: f64) {
        self.z *= s;
        self.xi *= s;
    }
}

/// Static beamsplitter: out = alpha * in + beta * noise.
fn beamsplitter(mut input: Carrier, alpha: f64, beta: f64, noise: &Carrier) -> Carrier {
    input.scale(alpha);
    input.add_scaled(noise, beta);
    input
}

/// Build the network by chaining elementary blocks. Same matrices and index
/// maps as the direct assembly, by construction of a different route.
pub fn compose_by_interconnection(cfg: &NetworkConfig) -> Result<StateSpace> {
    if cfg.n_nopas < 2 {
        return Err(Error::InvalidParameter(format!(
            "chain needs at least 2 NOPAs, got {}",
            cfg.n_nopas
        )));
    }
    let n = cfg.n_nopas;
    let lay = QuadratureLayout::new(n);
    let (nz, nxi) = (4 * n, 8 * n);
    let g = cfg.nopa.gamma;
    let kappa = cfg.nopa.kappa;
    let eps = cfg.nopa.epsilon;
    let sg = g.sqrt();
    let sk = kappa.sqrt();

    let mut a = DMatrix::<f64>::zeros(nz, nz);
    let mut b = DMatrix::<f64>::zeros(nz, nxi);
    let mut c = DMatrix::<f64>::zeros(4, nz);
    let mut d = DMatrix::<f64>::zeros(4, nxi);

    // local NOPA blocks: cavity damping, pump coupling, amplification loss
    for i in 1..=n {
        let s = lay.a_row(i);
        let blk = single_nopa_drift(g, kappa, eps);
        for r in 0..4 {
            for cc in 0..4 {
                a[(s + r, s + cc)] += blk[(r, cc)];
            }
        }
        for (row, col) in [
            (lay.a_row(i), lay.col_loss_a(i)),
            (lay.b_row(i), lay.col_loss_b(i)),
        ] {
            b[(row, col)] += -sk;
            b[(row + 1, col + 1)] += -sk;
        }
    }

    // records (column, label) as sources get tapped, checked against the map
    let mut tapped: Vec<(usize, String)> = vec![
        (lay.col_in_a(), "xi_in_a_q[1]".to_string()),
        (lay.col_in_b(), format!("xi_in_b_q[{n}]")),
    ];
    for i in 1..=n {
        tapped.push((lay.col_loss_a(i), format!("xi_loss_a_q[{i}]")));
        tapped.push((lay.col_loss_b(i), format!("xi_loss_b_q[{i}]")));
    }

    // feed a carrier into a cavity mode as its driving field
    let drive = |rows: usize, s: &Carrier, a: &mut DMatrix<f64>, b: &mut DMatrix<f64>| {
        for cc in 0..nz {
            a[(rows, cc)] += -sg * s.z[(0, cc)];
            a[(rows + 1, cc)] += -sg * s.z[(1, cc)];
        }
        for cc in 0..nxi {
            b[(rows, cc)] += -sg * s.xi[(0, cc)];
            b[(rows + 1, cc)] += -sg * s.xi[(1, cc)];
        }
    };

    // a-path, left to right
    let mut sig = Carrier::input_pick(nz, nxi, lay.col_in_a());
    for i in 1..=n {
        drive(lay.a_row(i), &sig, &mut a, &mut b);
        // cavity output mirror: out = sqrt(gamma) a_i + in
        let mut out = Carrier::state_pick(nz, nxi, lay.a_row(i), sg);
        out.add_scaled(&sig, 1.0);
        if i < n {
            let col = lay.col_bs_a(i);
            tapped.push((col, format!("xi_BS_a_q[{i}]")));
            let noise = Carrier::input_pick(nz, nxi, col);
            sig = beamsplitter(out, cfg.alpha, cfg.beta, &noise);
        } else {
            emit_output(&mut c, &mut d, 0, &out, cfg.theta_a);
        }
    }

    // b-path, right to left
    let mut sig = Carrier::input_pick(nz, nxi, lay.col_in_b());
    for j in (1..=n).rev() {
        drive(lay.b_row(j), &sig, &mut a, &mut b);
        let mut out = Carrier::state_pick(nz, nxi, lay.b_row(j), sg);
        out.add_scaled(&sig, 1.0);
        if j > 1 {
            let col = lay.col_bs_b(j);
            tapped.push((col, format!("xi_BS_b_q[{j}]")));
            let noise = Carrier::input_pick(nz, nxi, col);
            sig = beamsplitter(out, cfg.alpha, cfg.beta, &noise);
        } else {
            emit_output(&mut c, &mut d, 2, &out, cfg.theta_b);
        }
    }

    // every tapped column must carry the label the canonical map assigns
    let canonical = lay.input_labels();
    for (col, label) in &tapped {
        if canonical.get(*col) != Some(label) {
            return Err(Error::Inconsistency(format!(
                "input index map mismatch at column {col}: composed '{label}', map '{}'",
                canonical.get(*col).map(String::as_str).unwrap_or("<out of range>")
            )));
        }
    }
    if tapped.len() != 4 * n {
        return Err(Error::Inconsistency(format!(
            "composed {} input taps, expected {}",
            tapped.len(),
            4 * n
        )));
    }

    Ok(StateSpace { a, b, c, d, layout: lay })
}

/// Drift block of one NOPA in (a^q, a^p, b^q, b^p) ordering.
fn single_nopa_drift(gamma: f64, kappa: f64, eps: f64) -> DMatrix<f64> {
    let m = (gamma + kappa) / 2.0;
    let e2 = eps / 2.0;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            -m, 0.0, e2, 0.0, //
            0.0, -m, 0.0, -e2, //
            e2, 0.0, -m, 0.0, //
            0.0, -e2, 0.0, -m,
        ],
    )
}

/// Phase rotation applied to the final port carrier, written into C and D.
fn emit_output(c: &mut DMatrix<f64>, d: &mut DMatrix<f64>, row: usize, s: &Carrier, theta: f64) {
    let (sn, cs) = theta.sin_cos();
    for cc in 0..s.z.ncols() {
        c[(row, cc)] = cs * s.z[(0, cc)] - sn * s.z[(1, cc)];
        c[(row + 1, cc)] = sn * s.z[(0, cc)] + cs * s.z[(1, cc)];
    }
    for cc in 0..s.xi.ncols() {
        d[(row, cc)] = cs * s.xi[(0, cc)] - sn * s.xi[(1, cc)];
        d[(row + 1, cc)] = sn * s.xi[(0, cc)] + cs * s.xi[(1, cc)];
    }
}
