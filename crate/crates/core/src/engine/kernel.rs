use crate::engine::updates::{block_update, check_scheme};
use crate::error::{NaumError, Result};
use crate::linalg::DenseMatrix;
use crate::model::{ProblemSpec, SolverParams};

/// Objective value and squared successive changes of a candidate `(U, V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateEval {
    pub objective: f64,
    pub dx_sq: f64,
    pub dy_sq: f64,
}

/// Problem-specific pieces of a NAUM iteration. The engine owns the outer loop
/// and the line search; a kernel supplies Step 1 and the block updates, and may
/// keep whatever products it needs between calls.
///
/// Call order per iteration: `begin_iteration`, then any number of
/// (`update_x`, one or more `update_y` + `evaluate`) rounds, then `commit`.
pub trait NaumKernel {
    /// Errors with `InfeasibleInitialization` when the start is outside the
    /// regularizer domains.
    fn check_start(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()>;

    fn objective(&mut self, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64>;

    /// Step 1 for the iterate `(X^k, Y^k)`.
    fn begin_iteration(&mut self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()>;

    /// `||Y^k||_F^2` for the iterate passed to `begin_iteration`.
    fn y_fro_sq(&self, y: &DenseMatrix) -> f64 {
        y.fro_sq()
    }

    fn update_x(&mut self, x: &DenseMatrix, y: &DenseMatrix, mu: f64) -> Result<DenseMatrix>;

    /// `||U||_F^2` for the candidate returned by the last `update_x`.
    fn u_fro_sq(&self, u: &DenseMatrix) -> f64 {
        u.fro_sq()
    }

    fn update_y(
        &mut self,
        x: &DenseMatrix,
        y: &DenseMatrix,
        u: &DenseMatrix,
        sigma: f64,
    ) -> Result<DenseMatrix>;

    fn evaluate(
        &mut self,
        x: &DenseMatrix,
        y: &DenseMatrix,
        u: &DenseMatrix,
        v: &DenseMatrix,
    ) -> Result<CandidateEval>;

    /// Called after `(U, V)` was accepted as the next iterate.
    fn commit(&mut self, _x: &DenseMatrix, _y: &DenseMatrix, _inner_iterations: usize) -> Result<()> {
        Ok(())
    }
}

/// Generic kernel: materializes `Z^k` densely and dispatches to the block
/// updates of any scheme.
#[derive(Debug, Clone)]
pub struct DenseKernel<'a> {
    prob: &'a ProblemSpec,
    params: SolverParams,
    z: DenseMatrix,
    zt: DenseMatrix,
}

impl<'a> DenseKernel<'a> {
    pub fn new(prob: &'a ProblemSpec, params: &SolverParams) -> Result<Self> {
        params.validate()?;
        check_scheme(params.scheme_x, prob.psi())?;
        check_scheme(params.scheme_y, prob.phi())?;
        Ok(DenseKernel {
            prob,
            params: params.clone(),
            z: DenseMatrix::zeros(prob.m(), prob.n()),
            zt: DenseMatrix::zeros(prob.n(), prob.m()),
        })
    }

    /// `Z^k` from the last `begin_iteration`.
    pub fn z(&self) -> &DenseMatrix {
        &self.z
    }
}

impl NaumKernel for DenseKernel<'_> {
    fn check_start(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
        self.prob.check_factors(x, y)?;
        if !self.prob.psi().contains(x) || !self.prob.phi().contains(y) {
            return Err(NaumError::InfeasibleInitialization(
                "starting factors violate a box constraint".into(),
            ));
        }
        Ok(())
    }

    fn objective(&mut self, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
        self.prob.objective(x, y)
    }

    fn begin_iteration(&mut self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
        self.z = self.prob.z_formula(&self.params, x, y)?;
        self.zt = self.z.transpose();
        Ok(())
    }

    fn update_x(&mut self, x: &DenseMatrix, y: &DenseMatrix, mu: f64) -> Result<DenseMatrix> {
        block_update(
            self.params.scheme_x,
            self.prob.psi(),
            x,
            y,
            &self.z,
            self.params.alpha,
            mu,
        )
    }

    fn update_y(
        &mut self,
        _x: &DenseMatrix,
        y: &DenseMatrix,
        u: &DenseMatrix,
        sigma: f64,
    ) -> Result<DenseMatrix> {
        block_update(
            self.params.scheme_y,
            self.prob.phi(),
            y,
            u,
            &self.zt,
            self.params.alpha,
            sigma,
        )
    }

    fn evaluate(
        &mut self,
        x: &DenseMatrix,
        y: &DenseMatrix,
        u: &DenseMatrix,
        v: &DenseMatrix,
    ) -> Result<CandidateEval> {
        Ok(CandidateEval {
            objective: self.prob.objective(u, v)?,
            dx_sq: u.dist(x).powi(2),
            dy_sq: v.dist(y).powi(2),
        })
    }
}
