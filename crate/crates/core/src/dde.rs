//! Rightmost characteristic root of the delayed network.
//!
//! With per-segment delay tau the network is a linear delay system
//! z'(t) = A_0 z(t) + sum_k A_k z(t - k tau), k = 1..N-1, where A_k collects
//! the couplings that crossed k path segments. Its spectrum is approximated
//! by pseudospectral collocation of the solution-segment generator on
//! Chebyshev points over [-(N-1) tau, 0]; the discretization order doubles
//! until the rightmost root stabilizes, which doubles as an error estimate.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::model::assemble_state_space;
use crate::params::NetworkConfig;

/// Relative tolerance on the rightmost root between successive orders.
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// First collocation order of the doubling ladder.
pub const FIRST_ORDER: usize = 20;

/// Orders beyond this abort with a numerical error.
pub const MAX_ORDER: usize = 512;

/// Converged rightmost-root estimate with its order history.
#[derive(Debug, Clone, Serialize)]
pub struct DdeSpectrumReport {
    pub discretization_order: usize,
    #[serde(with = "complex_parts")]
    pub rightmost_root: C64,
    pub converged: bool,
    #[serde(serialize_with = "serialize_history")]
    pub root_history: Vec<(usize, C64)>,
}

impl DdeSpectrumReport {
    /// Stability of the delayed network: rightmost root strictly left of the axis.
    pub fn is_stable(&self) -> bool {
        self.rightmost_root.re < 0.0
    }
}

mod complex_parts {
    use super::C64;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Complex", 2)?;
        st.serialize_field("re", &z.re)?;
        st.serialize_field("im", &z.im)?;
        st.end()
    }
}

fn serialize_history<S: serde::Serializer>(
    h: &[(usize, C64)],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(h.len()))?;
    for (order, z) in h {
        seq.serialize_element(&(order, z.re, z.im))?;
    }
    seq.end()
}

/// Chebyshev extreme points x_j = cos(j pi / m), j = 0..m, on [-1, 1].
pub fn chebyshev_nodes(m: usize) -> Vec<f64> {
    (0..=m)
        .map(|j| (j as f64 * std::f64::consts::PI / m as f64).cos())
        .collect()
}

/// Chebyshev differentiation matrix for the nodes of `chebyshev_nodes`.
pub fn chebyshev_diff_matrix(m: usize) -> DMatrix<f64> {
    let x = chebyshev_nodes(m);
    let np = m + 1;
    let c = |i: usize| if i == 0 || i == m { 2.0 } else { 1.0 };
    let mut d = DMatrix::<f64>::zeros(np, np);
    for i in 0..np {
        for j in 0..np {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[(i, j)] = (c(i) / c(j)) * sign / (x[i] - x[j]);
            }
        }
    }
    // negative-sum trick for the diagonal
    for i in 0..np {
        let mut sum = 0.0;
        for j in 0..np {
            if j != i {
                sum += d[(i, j)];
            }
        }
        d[(i, i)] = -sum;
    }
    d
}

/// Barycentric interpolation row: weights l_j(t) with sum 1 at point t.
fn interpolation_row(x: &[f64], t: f64) -> Vec<f64> {
    let m = x.len() - 1;
    let w = |j: usize| {
        let base = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == m {
            0.5 * base
        } else {
            base
        }
    };
    if let Some(hit) = x.iter().position(|&xj| xj == t) {
        let mut r = vec![0.0; m + 1];
        r[hit] = 1.0;
        return r;
    }
    let mut r: Vec<f64> = (0..=m).map(|j| w(j) / (t - x[j])).collect();
    let s: f64 = r.iter().sum();
    for v in &mut r {
        *v /= s;
    }
    r
}

/// The delay coefficient matrices A_k read off the assembled drift matrix:
/// A_k holds the 4x4 blocks of A at block distance k, k = 0..N-1.
pub fn delay_coefficients(cfg: &NetworkConfig) -> Result<Vec<DMatrix<f64>>> {
    let ss = assemble_state_space(cfg)?;
    let n = cfg.n_nopas;
    let dim = 4 * n;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut ak = DMatrix::<f64>::zeros(dim, dim);
        for bi in 0..n {
            for bj in 0..n {
                if bi.abs_diff(bj) == k {
                    for r in 0..4 {
                        for c in 0..4 {
                            ak[(4 * bi + r, 4 * bj + c)] = ss.a[(4 * bi + r, 4 * bj + c)];
                        }
                    }
                }
            }
        }
        out.push(ak);
    }
    Ok(out)
}

/// Characteristic matrix lambda I - A_0 - sum_k A_k exp(-lambda k tau).
/// Roots of its determinant are the characteristic roots of the delay system.
pub fn characteristic_matrix(coeffs: &[DMatrix<f64>], tau: f64, lambda: C64) -> DMatrix<C64> {
    let dim = coeffs[0].nrows();
    let mut m = DMatrix::<C64>::from_fn(dim, dim, |i, j| {
        if i == j {
            lambda
        } else {
            C64::new(0.0, 0.0)
        }
    });
    for (k, ak) in coeffs.iter().enumerate() {
        let ph = (-lambda * (k as f64) * tau).exp();
        for i in 0..dim {
            for j in 0..dim {
                if ak[(i, j)] != 0.0 {
                    m[(i, j)] -= ph * ak[(i, j)];
                }
            }
        }
    }
    m
}

/// Collocation matrix of the solution-segment generator at order m.
fn collocation_matrix(coeffs: &[DMatrix<f64>], tau: f64, m: usize) -> DMatrix<f64> {
    let n_delays = coeffs.len(); // k = 0..N-1
    let dim = coeffs[0].nrows();
    let tau_max = (n_delays as f64 - 1.0) * tau;
    let x = chebyshev_nodes(m);
    // theta = tau_max (x - 1) / 2 maps [-1,1] to [-tau_max, 0], theta_0 = 0
    let dscale = 2.0 / tau_max;
    let d = chebyshev_diff_matrix(m);
    let big = dim * (m + 1);
    let mut g = DMatrix::<f64>::zeros(big, big);

    // node 0 row block: z'(0) = sum_k A_k z(-k tau), interpolated on the segment
    for (k, ak) in coeffs.iter().enumerate() {
        let theta = -(k as f64) * tau;
        let xu = 2.0 * theta / tau_max + 1.0;
        let row = interpolation_row(&x, xu);
        for (j, &lj) in row.iter().enumerate() {
            if lj == 0.0 {
                continue;
            }
            for r in 0..dim {
                for c in 0..dim {
                    let v = ak[(r, c)];
                    if v != 0.0 {
                        g[(r, j * dim + c)] += lj * v;
                    }
                }
            }
        }
    }
    // interior and far-end node row blocks: spectral differentiation
    for i in 1..=m {
        for j in 0..=m {
            let v = d[(i, j)] * dscale;
            if v != 0.0 {
                for r in 0..dim {
                    g[(i * dim + r, j * dim + r)] = v;
                }
            }
        }
    }
    g
}

/// Rightmost root of the collocation matrix spectrum.
fn rightmost_of(g: &DMatrix<f64>) -> Result<C64> {
    let ev = linalg::eigenvalues(g)?;
    ev.into_iter()
        .max_by(|p, q| p.re.partial_cmp(&q.re).unwrap())
        .ok_or_else(|| Error::Numerical("empty spectrum".into()))
}

/// Rightmost characteristic root of the delayed network, with order doubling
/// until the estimate stabilizes to `CONVERGENCE_TOL` relative.
pub fn dde_rightmost_root(cfg: &NetworkConfig) -> Result<DdeSpectrumReport> {
    if !(cfg.tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delay analysis needs tau > 0, got {}",
            cfg.tau
        )));
    }
    let coeffs = delay_coefficients(cfg)?;
    let tau = cfg.tau;
    let mut history: Vec<(usize, C64)> = Vec::new();
    let mut order = FIRST_ORDER;
    loop {
        let g = collocation_matrix(&coeffs, tau, order);
        let root = rightmost_of(&g)?;
        history.push((order, root));
        if let [.., (_, prev), (_, cur)] = history.as_slice() {
            if (prev - cur).norm() < CONVERGENCE_TOL * cur.norm().max(1.0) {
                return Ok(DdeSpectrumReport {
                    discretization_order: order,
                    rightmost_root: *cur,
                    converged: true,
                    root_history: history,
                });
            }
        }
        order *= 2;
        if order > MAX_ORDER {
            return Err(Error::Numerical(format!(
                "rightmost root did not stabilize by order {MAX_ORDER}; history: {:?}",
                history
                    .iter()
                    .map(|(m, z)| format!("order {m}: {:.6e}{:+.6e}i", z.re, z.im))
                    .collect::<Vec<_>>()
            )));
        }
    }
}
