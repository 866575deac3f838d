//! Block updates for one factor with the other factor and `Z` held fixed.
//!
//! Every scheme works on the generic block problem
//!
//! ```text
//! min_W  g(W) + alpha/2 ||W B^T - T||_F^2 + step/2 ||W - A||_F^2
//! ```
//!
//! where `A` is the current value of the block (the anchor), `B` the partner
//! factor and `T` the target. The `X` update uses `(A, B, T) = (X^k, Y^k, Z^k)`;
//! the `Y` update uses `(Y^k, U, (Z^k)^T)`.

use crate::error::{NaumError, Result};
use crate::linalg::{spectral_norm_sq, Cholesky, DenseMatrix};
use crate::model::{ProblemSpec, ProxOracle, Scheme, SolverParams};

const INNER_TOL: f64 = 1e-14;
const INNER_MAX_ITERS: usize = 200_000;

pub fn check_scheme(scheme: Scheme, oracle: &ProxOracle) -> Result<()> {
    if scheme == Scheme::HierarchicalProx && !oracle.column_separable() {
        return Err(NaumError::UnsupportedScheme {
            scheme: scheme.to_string(),
            oracle: oracle.name().into(),
        });
    }
    Ok(())
}

/// Computes `U` from `(X^k, Y^k, Z^k)` with step parameter `mu`.
pub fn update_x(
    scheme: Scheme,
    prob: &ProblemSpec,
    params: &SolverParams,
    x: &DenseMatrix,
    y: &DenseMatrix,
    z: &DenseMatrix,
    mu: f64,
) -> Result<DenseMatrix> {
    block_update(scheme, prob.psi(), x, y, z, params.alpha, mu)
}

/// Computes `V` from `(U, Y^k, Z^k)` with step parameter `sigma`. The
/// prox-linear variant linearizes at `(U, Y^k)`.
pub fn update_y(
    scheme: Scheme,
    prob: &ProblemSpec,
    params: &SolverParams,
    u: &DenseMatrix,
    y: &DenseMatrix,
    z: &DenseMatrix,
    sigma: f64,
) -> Result<DenseMatrix> {
    block_update(scheme, prob.phi(), y, u, &z.transpose(), params.alpha, sigma)
}

pub fn block_update(
    scheme: Scheme,
    oracle: &ProxOracle,
    anchor: &DenseMatrix,
    partner: &DenseMatrix,
    target: &DenseMatrix,
    alpha: f64,
    step: f64,
) -> Result<DenseMatrix> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(NaumError::param(format!(
            "block step must be positive, got {step}"
        )));
    }
    check_scheme(scheme, oracle)?;
    target.ensure_shape(anchor.rows(), partner.rows(), "block target")?;
    partner.ensure_shape(partner.rows(), anchor.cols(), "partner factor")?;
    match scheme {
        Scheme::ProxLinear => prox_linear(oracle, anchor, partner, target, alpha, step),
        Scheme::HierarchicalProx => hierarchical(oracle, anchor, partner, target, alpha, step),
        Scheme::Proximal => proximal(oracle, anchor, partner, target, alpha, step),
    }
}

fn prox_linear(
    oracle: &ProxOracle,
    anchor: &DenseMatrix,
    partner: &DenseMatrix,
    target: &DenseMatrix,
    alpha: f64,
    step: f64,
) -> Result<DenseMatrix> {
    // alpha (A B^T - T) B = alpha (A (B^T B) - T B)
    let mut grad = anchor.matmul(&partner.gram())?;
    grad.axpy(-1.0, &target.matmul(partner)?)?;
    let mut point = anchor.clone();
    point.axpy(-alpha / step, &grad)?;
    oracle.prox(1.0 / step, &point)
}

fn hierarchical(
    oracle: &ProxOracle,
    anchor: &DenseMatrix,
    partner: &DenseMatrix,
    target: &DenseMatrix,
    alpha: f64,
    step: f64,
) -> Result<DenseMatrix> {
    let gram = partner.gram();
    let tb = target.matmul(partner)?;
    let r = anchor.cols();
    let mut w = anchor.clone();
    let mut col = vec![0.0; anchor.rows()];
    for i in 0..r {
        let denom = alpha * gram.get(i, i) + step;
        for (a, c) in col.iter_mut().enumerate() {
            // P_i b_i = T b_i - sum_{j != i} w_j (b_j^T b_i), with w_j = u_j
            // for j < i and the anchor column for j > i
            let row = w.row(a);
            let mut pb = tb.get(a, i);
            for j in (0..r).filter(|&j| j != i) {
                pb -= row[j] * gram.get(j, i);
            }
            *c = (alpha * pb + step * anchor.get(a, i)) / denom;
        }
        oracle.prox_column(i, 1.0 / denom, &mut col)?;
        w.set_column(i, &col);
    }
    Ok(w)
}

/// Exact minimizer of the strongly convex block problem. Written as
/// `1/2 tr(W H W^T) - <C, W> + g(W)` with `H = alpha B^T B + step I` and
/// `C = alpha T B + step A`.
fn proximal(
    oracle: &ProxOracle,
    anchor: &DenseMatrix,
    partner: &DenseMatrix,
    target: &DenseMatrix,
    alpha: f64,
    step: f64,
) -> Result<DenseMatrix> {
    let r = anchor.cols();
    let mut h = partner.gram();
    h.scale(alpha);
    for i in 0..r {
        h.set(i, i, h.get(i, i) + step);
    }
    let mut c = target.matmul(partner)?;
    c.scale(alpha);
    c.axpy(step, anchor)?;

    if matches!(oracle, ProxOracle::Zero) {
        return Ok(Cholesky::factor(&h)?.right_solve(&c));
    }

    // accelerated proximal gradient with the strongly convex momentum
    let lipschitz = (alpha * spectral_norm_sq(partner) + step) * (1.0 + 1e-9);
    let t = 1.0 / lipschitz;
    let q = (lipschitz.sqrt() - step.sqrt()) / (lipschitz.sqrt() + step.sqrt());
    let mut w = prox_linear(oracle, anchor, partner, target, alpha, step)?;
    let mut extrap = w.clone();
    for _ in 0..INNER_MAX_ITERS {
        let mut grad = extrap.matmul(&h)?;
        grad.axpy(-1.0, &c)?;
        let mut point = extrap.clone();
        point.axpy(-t, &grad)?;
        let next = oracle.prox(t, &point)?;
        let moved = next.dist(&w);
        extrap = next.clone();
        extrap.axpy(q, &next.sub(&w)?)?;
        w = next;
        if moved <= INNER_TOL * (1.0 + w.fro_norm()) {
            break;
        }
    }
    Ok(w)
}

/// Residual of the block optimality condition
/// `0 in dg(W) + grad + step (W - A)` measured as
/// `||W - prox_g(W - grad - step (W - A))||_F`, where `grad` is
/// `alpha (L B^T - T) B` with the linearization point `L` chosen by `scheme`
/// (`W` itself for the proximal scheme, `A` for prox-linear). The
/// hierarchical scheme's conditions are checked column by column.
#[allow(clippy::too_many_arguments)]
pub fn block_optimality_residual(
    scheme: Scheme,
    oracle: &ProxOracle,
    w: &DenseMatrix,
    anchor: &DenseMatrix,
    partner: &DenseMatrix,
    target: &DenseMatrix,
    alpha: f64,
    step: f64,
) -> Result<f64> {
    let gram = partner.gram();
    let tb = target.matmul(partner)?;
    let grad = match scheme {
        Scheme::Proximal => {
            let mut g = w.matmul(&gram)?;
            g.axpy(-1.0, &tb)?;
            g.scale(alpha);
            g
        }
        Scheme::ProxLinear => {
            let mut g = anchor.matmul(&gram)?;
            g.axpy(-1.0, &tb)?;
            g.scale(alpha);
            g
        }
        Scheme::HierarchicalProx => {
            // column i sees u_{j<=i} and the anchor for j > i
            let r = w.cols();
            DenseMatrix::from_fn(w.rows(), r, |a, i| {
                let mut s = -tb.get(a, i);
                for j in 0..r {
                    let val = if j <= i { w.get(a, j) } else { anchor.get(a, j) };
                    s += val * gram.get(j, i);
                }
                alpha * s
            })
        }
    };
    let mut point = w.clone();
    point.axpy(-1.0, &grad)?;
    point.axpy(-step, &w.sub(anchor)?)?;
    Ok(w.dist(&oracle.prox(1.0, &point)?))
}
