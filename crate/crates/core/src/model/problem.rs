use serde::{Deserialize, Serialize};

use crate::error::{NaumError, Result};
use crate::linalg::{DenseMatrix, LinearMap};
use crate::model::{ProxOracle, SolverParams};

/// `min Psi(X) + Phi(Y) + 1/2 ||A(X Y^T) - b||^2` over `X in R^{m x r}`,
/// `Y in R^{n x r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    psi: ProxOracle,
    phi: ProxOracle,
    map: LinearMap,
    b: Vec<f64>,
    rank: usize,
}

impl ProblemSpec {
    pub fn new(
        psi: ProxOracle,
        phi: ProxOracle,
        map: LinearMap,
        b: Vec<f64>,
        rank: usize,
    ) -> Result<Self> {
        let (m, n) = map.input_shape();
        if rank == 0 || rank > m.min(n) {
            return Err(NaumError::dims(format!(
                "rank {rank} must lie in 1..={}",
                m.min(n)
            )));
        }
        if b.len() != map.output_dim() {
            return Err(NaumError::dims(format!(
                "data vector has length {}, map output has {}",
                b.len(),
                map.output_dim()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(NaumError::NonFiniteInput("data vector".into()));
        }
        psi.validate()?;
        phi.validate()?;
        psi.check_shape(m, rank)?;
        phi.check_shape(n, rank)?;
        Ok(ProblemSpec {
            psi,
            phi,
            map,
            b,
            rank,
        })
    }

    pub fn psi(&self) -> &ProxOracle {
        &self.psi
    }

    pub fn phi(&self) -> &ProxOracle {
        &self.phi
    }

    pub fn map(&self) -> &LinearMap {
        &self.map
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn m(&self) -> usize {
        self.map.input_shape().0
    }

    pub fn n(&self) -> usize {
        self.map.input_shape().1
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn check_factors(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
        x.ensure_shape(self.m(), self.rank, "X")?;
        y.ensure_shape(self.n(), self.rank, "Y")
    }

    /// `A(M) - b`.
    pub fn data_residual(&self, m: &DenseMatrix) -> Result<Vec<f64>> {
        let mut r = self.map.apply(m)?;
        r.iter_mut().zip(&self.b).for_each(|(ri, bi)| *ri -= bi);
        Ok(r)
    }

    /// `F(X, Y)`; `+inf` when a box constraint is violated.
    pub fn objective(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
        self.check_factors(x, y)?;
        let reg = self.psi.eval(x)? + self.phi.eval(y)?;
        if reg.is_infinite() {
            return Ok(f64::INFINITY);
        }
        let r = self.data_residual(&x.matmul_t(y)?)?;
        Ok(reg + 0.5 * r.iter().map(|v| v * v).sum::<f64>())
    }

    /// `Psi(X) + Phi(Y) + alpha/2 ||X Y^T - Z||^2 + beta/2 ||A(Z) - b||^2`.
    pub fn potential(
        &self,
        params: &SolverParams,
        x: &DenseMatrix,
        y: &DenseMatrix,
        z: &DenseMatrix,
    ) -> Result<f64> {
        self.check_factors(x, y)?;
        z.ensure_shape(self.m(), self.n(), "Z")?;
        let reg = self.psi.eval(x)? + self.phi.eval(y)?;
        if reg.is_infinite() {
            return Ok(f64::INFINITY);
        }
        let coupling = x.matmul_t(y)?.dist(z).powi(2);
        let r = self.data_residual(z)?;
        let data = r.iter().map(|v| v * v).sum::<f64>();
        Ok(reg + 0.5 * params.alpha * coupling + 0.5 * params.beta * data)
    }

    /// `Z = (I - w A^*A)(X Y^T) + w A^*(b)` with `w = beta / (alpha + beta)`.
    pub fn z_formula(
        &self,
        params: &SolverParams,
        x: &DenseMatrix,
        y: &DenseMatrix,
    ) -> Result<DenseMatrix> {
        self.check_factors(x, y)?;
        let sum = params.alpha + params.beta;
        if sum == 0.0 {
            return Err(NaumError::param("alpha + beta must be nonzero"));
        }
        let w = params.beta / sum;
        let mut z = x.matmul_t(y)?;
        // A^*(b - A(XY^T)) scaled by w
        let mut r = self.data_residual(&z)?;
        r.iter_mut().for_each(|v| *v *= -w);
        z.axpy(1.0, &self.map.adjoint(&r)?)?;
        Ok(z)
    }

    /// `A^*(A(X Y^T) - b)`, the gradient of the data term with respect to `X Y^T`.
    pub fn smooth_gradient(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_factors(x, y)?;
        let r = self.data_residual(&x.matmul_t(y)?)?;
        self.map.adjoint(&r)
    }

    /// Unit-step prox-gradient fixed-point residual, normalized by
    /// `1 + ||X||_F + ||Y||_F`; zero exactly at stationary points for the
    /// convex regularizers.
    pub fn stationarity_residual(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
        let g = self.smooth_gradient(x, y)?;
        let gx = g.matmul(y)?;
        let gy = g.t_matmul(x)?;
        let px = self.psi.prox(1.0, &x.sub(&gx)?)?;
        let py = self.phi.prox(1.0, &y.sub(&gy)?)?;
        Ok((x.dist(&px) + y.dist(&py)) / (1.0 + x.fro_norm() + y.fro_norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SamplingPattern;
    use crate::model::{derive_params, ParamOverrides};

    fn scalar(v: f64) -> DenseMatrix {
        DenseMatrix::from_rows(&[&[v]])
    }

    fn identity_1x1(b: f64, oracle: ProxOracle) -> ProblemSpec {
        ProblemSpec::new(
            oracle.clone(),
            oracle,
            LinearMap::identity(1, 1),
            vec![b],
            1,
        )
        .unwrap()
    }

    #[test]
    fn objective_examples() {
        let p = identity_1x1(5.0, ProxOracle::Zero);
        assert_eq!(p.objective(&scalar(2.0), &scalar(3.0)).unwrap(), 0.5);

        let boxed = identity_1x1(5.0, ProxOracle::nonneg_box(10.0).unwrap());
        assert_eq!(boxed.objective(&scalar(2.0), &scalar(3.0)).unwrap(), 0.5);
        assert_eq!(
            boxed.objective(&scalar(-2.0), &scalar(3.0)).unwrap(),
            f64::INFINITY
        );

        // eta = 5 -> weight 2.5 on each nuclear norm
        let mc = ProblemSpec::new(
            ProxOracle::nuclear(2.5).unwrap(),
            ProxOracle::nuclear(2.5).unwrap(),
            LinearMap::Sampling(SamplingPattern::full(1, 1)),
            vec![6.0],
            1,
        )
        .unwrap();
        assert!((mc.objective(&scalar(3.0), &scalar(2.0)).unwrap() - 12.5).abs() < 1e-14);
    }

    #[test]
    fn potential_and_z_examples() {
        let params = derive_params(2.0, &ParamOverrides::default()).unwrap();
        let p = identity_1x1(3.0, ProxOracle::Zero);
        let (x, y) = (scalar(1.0), scalar(1.0));
        assert_eq!(p.potential(&params, &x, &y, &scalar(2.0)).unwrap(), 2.0);
        let z = p.z_formula(&params, &x, &y).unwrap();
        assert_eq!(z, scalar(2.0));
        // X Y^T = 3 = b: both penalty terms vanish
        assert_eq!(p.potential(&params, &scalar(3.0), &y, &scalar(3.0)).unwrap(), 0.0);
    }

    #[test]
    fn empty_pattern_keeps_product() {
        let params = derive_params(0.6, &ParamOverrides::default()).unwrap();
        let p = ProblemSpec::new(
            ProxOracle::Zero,
            ProxOracle::Zero,
            LinearMap::Sampling(SamplingPattern::empty(2, 2)),
            vec![],
            1,
        )
        .unwrap();
        let x = DenseMatrix::column_vector(&[1.0, 2.0]);
        let y = DenseMatrix::column_vector(&[3.0, -1.0]);
        assert_eq!(p.z_formula(&params, &x, &y).unwrap(), x.matmul_t(&y).unwrap());
    }

    #[test]
    fn stationarity_examples() {
        let p = identity_1x1(6.0, ProxOracle::Zero);
        assert_eq!(p.stationarity_residual(&scalar(2.0), &scalar(3.0)).unwrap(), 0.0);
        assert!(p.stationarity_residual(&scalar(1.0), &scalar(1.0)).unwrap() > 0.0);

        // b = -1 pulls X Y^T negative; X = 0 sits on the face with an outward step
        let boxed = identity_1x1(-1.0, ProxOracle::nonneg_box(10.0).unwrap());
        assert_eq!(
            boxed.stationarity_residual(&scalar(0.0), &scalar(1.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn construction_errors() {
        assert!(ProblemSpec::new(
            ProxOracle::Zero,
            ProxOracle::Zero,
            LinearMap::identity(2, 2),
            vec![0.0; 3],
            1
        )
        .is_err());
        assert!(ProblemSpec::new(
            ProxOracle::Zero,
            ProxOracle::Zero,
            LinearMap::identity(2, 2),
            vec![0.0; 4],
            3
        )
        .is_err());
        let p = identity_1x1(1.0, ProxOracle::Zero);
        assert!(matches!(
            p.objective(&DenseMatrix::zeros(2, 1), &scalar(1.0)),
            Err(NaumError::InvalidDimensions(_))
        ));
    }
}
