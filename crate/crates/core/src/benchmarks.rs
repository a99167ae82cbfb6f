//! Analytic test objectives and the affine map between their native boxes
//! and the unit cube `[-1, 1]^m` on which every optimizer works.

use std::fmt;

use crate::{Error, Result};

/// Coordinate-wise affine map `lo + (x + 1)(hi - lo) / 2`.
pub fn to_native(x_unit: &[f64], native_box: &[(f64, f64)]) -> Vec<f64> {
    x_unit
        .iter()
        .zip(native_box)
        .map(|(&x, &(lo, hi))| lo + (x + 1.0) * (hi - lo) / 2.0)
        .collect()
}

/// Inverse of [`to_native`].
pub fn to_unit(x_native: &[f64], native_box: &[(f64, f64)]) -> Vec<f64> {
    x_native
        .iter()
        .zip(native_box)
        .map(|(&x, &(lo, hi))| 2.0 * (x - lo) / (hi - lo) - 1.0)
        .collect()
}

/// `(x² + y - 11)² + (x + y² - 7)²`.
pub fn himmelblau(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (a * a + b - 11.0).powi(2) + (a + b * b - 7.0).powi(2)
}

const HARTMANN3_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN3_A: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];
const HARTMANN3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];

/// Three-dimensional Hartmann function on `[0, 1]^3`.
pub fn hartmann3(x: &[f64]) -> f64 {
    -HARTMANN3_ALPHA
        .iter()
        .zip(HARTMANN3_A.iter().zip(&HARTMANN3_P))
        .map(|(alpha, (a, p))| {
            let inner: f64 = (0..3).map(|j| a[j] * (x[j] - p[j]).powi(2)).sum();
            alpha * (-inner).exp()
        })
        .sum::<f64>()
}

/// `Σ 100(x_{i+1} - x_i²)² + (1 - x_i)²`.
pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

/// `Σ x_i²`.
pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnownOptimum {
    pub x: Vec<f64>,
    pub f: f64,
    /// Where the value comes from.
    pub source: &'static str,
}

/// A named test function with its native box.
#[derive(Clone)]
pub struct Objective {
    name: String,
    native_box: Vec<(f64, f64)>,
    evaluator: fn(&[f64]) -> f64,
    known_optimum: Option<KnownOptimum>,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("native_box", &self.native_box)
            .finish_non_exhaustive()
    }
}

impl Objective {
    pub fn new(
        name: impl Into<String>,
        native_box: Vec<(f64, f64)>,
        evaluator: fn(&[f64]) -> f64,
        known_optimum: Option<KnownOptimum>,
    ) -> Result<Self> {
        if native_box.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if native_box
            .iter()
            .any(|(lo, hi)| lo.is_nan() || hi.is_nan() || lo >= hi)
        {
            return Err(Error::Config(
                "native box needs lo < hi in every dimension".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            native_box,
            evaluator,
            known_optimum,
        })
    }

    pub fn himmelblau2() -> Self {
        Self {
            name: "himmelblau2".into(),
            native_box: vec![(-5.0, 5.0); 2],
            evaluator: himmelblau,
            known_optimum: Some(KnownOptimum {
                x: vec![3.0, 2.0],
                f: 0.0,
                source: "exact root of both squared terms",
            }),
        }
    }

    pub fn hartmann3() -> Self {
        Self {
            name: "hartmann3".into(),
            native_box: vec![(0.0, 1.0); 3],
            evaluator: hartmann3,
            known_optimum: Some(KnownOptimum {
                x: vec![0.114589, 0.555649, 0.852547],
                f: -3.86278,
                source: "multistart bounded quasi-Newton, 200 starts",
            }),
        }
    }

    pub fn rosenbrock(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Config(format!("rosenbrock needs m >= 2, got {m}")));
        }
        Ok(Self {
            name: if m == 6 {
                "rosenbrock6".into()
            } else {
                format!("rosenbrockN:{m}")
            },
            native_box: vec![(-2.048, 2.048); m],
            evaluator: rosenbrock,
            known_optimum: Some(KnownOptimum {
                x: vec![1.0; m],
                f: 0.0,
                source: "exact",
            }),
        })
    }

    /// Sphere centred in the cube; the native box is the cube itself.
    pub fn sphere(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Self {
            name: format!("sphereN:{m}"),
            native_box: vec![(-1.0, 1.0); m],
            evaluator: sphere,
            known_optimum: Some(KnownOptimum {
                x: vec![0.0; m],
                f: 0.0,
                source: "exact",
            }),
        })
    }

    /// Looks up `himmelblau2`, `hartmann3`, `rosenbrock6`, `rosenbrockN:<m>`
    /// or `sphereN:<m>`.
    pub fn from_name(name: &str) -> Result<Self> {
        let parse_m = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::UnknownObjective(name.to_string()))
        };
        match name {
            "himmelblau2" => Ok(Self::himmelblau2()),
            "hartmann3" => Ok(Self::hartmann3()),
            "rosenbrock6" => Self::rosenbrock(6),
            _ => {
                if let Some(m) = name.strip_prefix("rosenbrockN:") {
                    Self::rosenbrock(parse_m(m)?)
                } else if let Some(m) = name.strip_prefix("sphereN:") {
                    Self::sphere(parse_m(m)?)
                } else {
                    Err(Error::UnknownObjective(name.to_string()))
                }
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.native_box.len()
    }

    pub fn native_box(&self) -> &[(f64, f64)] {
        &self.native_box
    }

    pub fn known_optimum(&self) -> Option<&KnownOptimum> {
        self.known_optimum.as_ref()
    }

    pub fn eval_native(&self, x: &[f64]) -> f64 {
        (self.evaluator)(x)
    }

    /// Evaluates at a unit-cube point; non-finite values are errors.
    pub fn eval_unit(&self, x_unit: &[f64]) -> Result<f64> {
        if x_unit.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x_unit.len(),
            });
        }
        let value = self.eval_native(&to_native(x_unit, &self.native_box));
        if !value.is_finite() {
            return Err(Error::NonFiniteValue {
                point: x_unit.to_vec(),
                value,
            });
        }
        Ok(value)
    }

    /// Re-evaluates the recorded optimum and checks it within `1e-6`.
    pub fn verify_known_optimum(&self) -> Result<()> {
        if let Some(opt) = &self.known_optimum {
            let got = self.eval_native(&opt.x);
            if (got - opt.f).abs() > 1e-6 {
                return Err(Error::Config(format!(
                    "{}: recorded optimum {} but evaluator gives {got}",
                    self.name, opt.f
                )));
            }
        }
        Ok(())
    }
}
