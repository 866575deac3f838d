use serde::{Deserialize, Serialize};

use crate::error::{NaumError, Result};
use crate::linalg::{shrink_singular, singular_values, DenseMatrix};

/// Scalar or entrywise bound for a box constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    Scalar(f64),
    Matrix(DenseMatrix),
}

impl Bound {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        match self {
            Bound::Scalar(v) => *v,
            Bound::Matrix(m) => m.get(i, j),
        }
    }

    fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        match self {
            Bound::Scalar(_) => Ok(()),
            Bound::Matrix(m) => m.ensure_shape(rows, cols, "box bound"),
        }
    }
}

/// A regularizer with a closed-form proximal mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProxOracle {
    Zero,
    /// Indicator of `{ lower <= W <= upper }`.
    Box { lower: Bound, upper: Bound },
    /// `weight * ||W||_*`.
    ScaledNuclear { weight: f64 },
    /// `weight * ||W||_1`.
    ScaledL1 { weight: f64 },
}

impl ProxOracle {
    pub fn boxed(lower: Bound, upper: Bound) -> Result<Self> {
        let oracle = ProxOracle::Box { lower, upper };
        oracle.validate()?;
        Ok(oracle)
    }

    /// `[0, upper]` with a scalar upper bound.
    pub fn nonneg_box(upper: f64) -> Result<Self> {
        Self::boxed(Bound::Scalar(0.0), Bound::Scalar(upper))
    }

    pub fn nuclear(weight: f64) -> Result<Self> {
        let oracle = ProxOracle::ScaledNuclear { weight };
        oracle.validate()?;
        Ok(oracle)
    }

    pub fn l1(weight: f64) -> Result<Self> {
        let oracle = ProxOracle::ScaledL1 { weight };
        oracle.validate()?;
        Ok(oracle)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProxOracle::Zero => "zero",
            ProxOracle::Box { .. } => "box",
            ProxOracle::ScaledNuclear { .. } => "nuclear",
            ProxOracle::ScaledL1 { .. } => "l1",
        }
    }

    pub fn column_separable(&self) -> bool {
        !matches!(self, ProxOracle::ScaledNuclear { .. })
    }

    pub fn is_indicator(&self) -> bool {
        matches!(self, ProxOracle::Box { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProxOracle::Zero => Ok(()),
            ProxOracle::ScaledNuclear { weight } | ProxOracle::ScaledL1 { weight } => {
                if !(*weight > 0.0 && weight.is_finite()) {
                    return Err(NaumError::param(format!(
                        "regularizer weight must be positive, got {weight}"
                    )));
                }
                Ok(())
            }
            ProxOracle::Box { lower, upper } => {
                let bad = match (lower, upper) {
                    (Bound::Scalar(l), Bound::Scalar(u)) => l > u || l.is_nan() || u.is_nan(),
                    (Bound::Scalar(l), Bound::Matrix(u)) => u.data().iter().any(|v| l > v),
                    (Bound::Matrix(l), Bound::Scalar(u)) => l.data().iter().any(|v| v > u),
                    (Bound::Matrix(l), Bound::Matrix(u)) => {
                        l.shape() != u.shape()
                            || l.data().iter().zip(u.data()).any(|(a, b)| a > b)
                    }
                };
                if bad {
                    return Err(NaumError::param("box requires lower <= upper entrywise"));
                }
                Ok(())
            }
        }
    }

    /// Checks that matrix-valued bounds fit a `rows x cols` variable.
    pub fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if let ProxOracle::Box { lower, upper } = self {
            lower.check_shape(rows, cols)?;
            upper.check_shape(rows, cols)?;
        }
        Ok(())
    }

    /// Regularizer value; `+inf` outside a box.
    pub fn eval(&self, w: &DenseMatrix) -> Result<f64> {
        Ok(match self {
            ProxOracle::Zero => 0.0,
            ProxOracle::Box { .. } => {
                if self.contains(w) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxOracle::ScaledNuclear { weight } => {
                weight * singular_values(w)?.iter().sum::<f64>()
            }
            ProxOracle::ScaledL1 { weight } => {
                weight * w.data().iter().map(|v| v.abs()).sum::<f64>()
            }
        })
    }

    /// Whether `w` lies in the domain (always true for finite-valued oracles).
    pub fn contains(&self, w: &DenseMatrix) -> bool {
        match self {
            ProxOracle::Box { lower, upper } => (0..w.rows()).all(|i| {
                w.row(i)
                    .iter()
                    .enumerate()
                    .all(|(j, &v)| v >= lower.at(i, j) && v <= upper.at(i, j))
            }),
            _ => true,
        }
    }

    /// `argmin_W g(W) + 1/(2t) ||W - V||_F^2`.
    pub fn prox(&self, t: f64, v: &DenseMatrix) -> Result<DenseMatrix> {
        check_step(t)?;
        match self {
            ProxOracle::ScaledNuclear { weight } => shrink_singular(v, t * weight),
            _ => {
                let mut out = v.clone();
                for j in 0..v.cols() {
                    let mut col = v.column(j);
                    self.prox_column_unchecked(j, t, &mut col);
                    out.set_column(j, &col);
                }
                Ok(out)
            }
        }
    }

    /// Proximal mapping of the `j`-th column term, in place.
    pub fn prox_column(&self, j: usize, t: f64, col: &mut [f64]) -> Result<()> {
        check_step(t)?;
        if !self.column_separable() {
            return Err(NaumError::UnsupportedScheme {
                scheme: "column prox".into(),
                oracle: self.name().into(),
            });
        }
        self.prox_column_unchecked(j, t, col);
        Ok(())
    }

    fn prox_column_unchecked(&self, j: usize, t: f64, col: &mut [f64]) {
        match self {
            ProxOracle::Zero => {}
            ProxOracle::Box { lower, upper } => {
                for (i, v) in col.iter_mut().enumerate() {
                    *v = v.max(lower.at(i, j)).min(upper.at(i, j));
                }
            }
            ProxOracle::ScaledL1 { weight } => {
                let thr = t * weight;
                for v in col.iter_mut() {
                    *v = v.signum() * (v.abs() - thr).max(0.0);
                }
            }
            ProxOracle::ScaledNuclear { .. } => unreachable!("not column separable"),
        }
    }
}

fn check_step(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(NaumError::param(format!(
            "prox step must be finite and positive, got {t}"
        )));
    }
    Ok(())
}
