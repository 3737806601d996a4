//! Python module `expfam`.
//!
//! Parameters and observations are plain floats for one-dimensional families
//! and lists of floats for the multivariate Gaussian. Input errors raise
//! `ValueError`, numerical failures raise `expfam.NumericalError` and
//! all-zero Poisson-exponential data raise `expfam.DegenerateDataError`.

use expfam_core::intervals::{compute_interval, coverage_simulation, IntervalOp};
use expfam_core::prediction::{predict, PredictionConfig, PredictiveQuery, Predictor};
use expfam_core::saddlepoint::exactness_report;
use expfam_core::verify::{run_suite, Comparison, Suite, VerifyConfig};
use expfam_core::{Error, FamilyDescriptor, MeanParam, NaturalParam, ObservationBatch};
use nalgebra::{DMatrix, DVector};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(expfam, NumericalError, PyRuntimeError);
create_exception!(expfam, DegenerateDataError, PyValueError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::DegenerateData(_) => DegenerateDataError::new_err(e.to_string()),
        ref n if n.is_numerical() => NumericalError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A float, or a list of floats for a vector family.
#[derive(FromPyObject)]
enum Coords {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Coords {
    fn vector(self) -> DVector<f64> {
        match self {
            Coords::Scalar(v) => DVector::from_element(1, v),
            Coords::Vector(v) => DVector::from_vec(v),
        }
    }
}

/// A list of floats, or a list of points for a vector family.
#[derive(FromPyObject)]
enum Points {
    Scalars(Vec<f64>),
    Vectors(Vec<Vec<f64>>),
}

impl Points {
    fn vectors(self) -> Vec<DVector<f64>> {
        match self {
            Points::Scalars(v) => v.into_iter().map(|x| DVector::from_element(1, x)).collect(),
            Points::Vectors(v) => v.into_iter().map(DVector::from_vec).collect(),
        }
    }
}

/// A positive float, or a square matrix given as a list of rows.
#[derive(FromPyObject)]
enum Cov {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

fn out(v: &DVector<f64>) -> Vec<f64> {
    v.as_slice().to_vec()
}

#[pyclass(name = "Family", module = "expfam", frozen)]
struct PyFamily {
    inner: FamilyDescriptor,
}

#[pymethods]
impl PyFamily {
    #[staticmethod]
    fn gamma(alpha: f64) -> PyResult<Self> {
        Ok(PyFamily {
            inner: FamilyDescriptor::gamma(alpha).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (cov = Cov::Scalar(1.0)))]
    fn gaussian(cov: Cov) -> PyResult<Self> {
        let m = match cov {
            Cov::Scalar(b) => DMatrix::from_element(1, 1, b),
            Cov::Matrix(rows) => {
                let d = rows.len();
                if rows.iter().any(|r| r.len() != d) {
                    return Err(PyValueError::new_err("covariance must be a square list of rows"));
                }
                DMatrix::from_fn(d, d, |i, j| rows[i][j])
            }
        };
        Ok(PyFamily {
            inner: FamilyDescriptor::gaussian(m).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn inverse_gaussian(kappa: f64) -> PyResult<Self> {
        Ok(PyFamily {
            inner: FamilyDescriptor::inverse_gaussian(kappa).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn poisson_exponential(kappa: f64) -> PyResult<Self> {
        Ok(PyFamily {
            inner: FamilyDescriptor::poisson_exponential(kappa).map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn __repr__(&self) -> String {
        format!("Family.{}", self.inner)
    }

    fn cumulant(&self, theta: Coords) -> PyResult<f64> {
        self.inner.cumulant(&NaturalParam::new(theta.vector())).map_err(to_py)
    }

    /// ∇A(θ).
    fn mean(&self, theta: Coords) -> PyResult<Vec<f64>> {
        Ok(out(&self.inner.mean_from_natural(&NaturalParam::new(theta.vector())).map_err(to_py)?.mu))
    }

    /// ∇²A(θ) as a list of rows.
    fn covariance(&self, theta: Coords) -> PyResult<Vec<Vec<f64>>> {
        let c = self.inner.covariance(&NaturalParam::new(theta.vector())).map_err(to_py)?;
        Ok(c.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    /// θ̂ with ∇A(θ̂) = x̄.
    fn mle(&self, xbar: Coords) -> PyResult<Vec<f64>> {
        Ok(out(&self.inner.mle(&MeanParam::new(xbar.vector())).map_err(to_py)?.theta))
    }

    /// D_A(θ₂, θ₁) = A(θ₂) − A(θ₁) − (θ₂ − θ₁)·∇A(θ₁).
    fn bregman(&self, theta2: Coords, theta1: Coords) -> PyResult<f64> {
        self.inner
            .bregman(&NaturalParam::new(theta2.vector()), &NaturalParam::new(theta1.vector()))
            .map_err(to_py)
    }

    fn kl_divergence(&self, theta1: Coords, theta2: Coords) -> PyResult<f64> {
        self.inner
            .kl_divergence(&NaturalParam::new(theta1.vector()), &NaturalParam::new(theta2.vector()))
            .map_err(to_py)
    }

    fn convex_conjugate(&self, x: Coords) -> PyResult<f64> {
        self.inner.convex_conjugate(&MeanParam::new(x.vector())).map_err(to_py)
    }

    fn log_density(&self, theta: Coords, x: Coords) -> PyResult<f64> {
        self.inner.log_density(&NaturalParam::new(theta.vector()), &x.vector()).map_err(to_py)
    }

    /// Unnormalized Jeffreys density |∇²A(θ)|^{1/2}.
    fn jeffreys(&self, theta: Coords) -> PyResult<f64> {
        self.inner.jeffreys_unnormalized(&NaturalParam::new(theta.vector())).map_err(to_py)
    }

    #[pyo3(signature = (theta, n, seed = 0))]
    fn sample(&self, theta: Coords, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let theta = NaturalParam::new(theta.vector());
        let mut rng = expfam_core::numerics::rng_stream(seed, 0);
        (0..n).map(|_| self.inner.sample(&theta, &mut rng).map(|v| out(&v)).map_err(to_py)).collect()
    }
}

fn batch(fam: &FamilyDescriptor, data: Points) -> PyResult<ObservationBatch> {
    let b = ObservationBatch::from_points(&data.vectors()).map_err(to_py)?;
    b.check_against(fam).map_err(to_py)?;
    Ok(b)
}

/// Log predictive density of `future` given `prefix` under "cnml",
/// "jeffreys" or "plugin".
#[pyfunction]
#[pyo3(signature = (family, prefix, future, method = "cnml", tol = 1e-10, seed = 0))]
fn predict_log_density(family: &PyFamily, prefix: Points, future: Points, method: &str, tol: f64, seed: u64) -> PyResult<f64> {
    let method = match method {
        "cnml" => Predictor::Cnml,
        "jeffreys" => Predictor::Jeffreys,
        "plugin" => Predictor::PlugIn,
        other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    };
    let fam = &family.inner;
    let q = PredictiveQuery::new(batch(fam, prefix)?, future.vectors()).map_err(to_py)?;
    let cfg = PredictionConfig {
        tol,
        seed,
        ..PredictionConfig::default()
    };
    Ok(predict(fam, method, &q, &cfg).map_err(to_py)?.log_density)
}

fn op_for(fam: &FamilyDescriptor, method: &str) -> PyResult<IntervalOp> {
    let credible = match method {
        "credible" => true,
        "confidence" => false,
        other => return Err(PyValueError::new_err(format!("unknown interval method '{other}'"))),
    };
    IntervalOp::for_family(fam, credible).map_err(to_py)
}

/// One-sided interval `[0, upper]` for the rate, or the divergence range of
/// the Gaussian ball, as a dict.
#[pyfunction]
#[pyo3(signature = (family, data, level = 0.9, method = "credible"))]
fn interval<'py>(py: Python<'py>, family: &PyFamily, data: Points, level: f64, method: &str) -> PyResult<Bound<'py, PyDict>> {
    let fam = &family.inner;
    let op = op_for(fam, method)?;
    let r = compute_interval(fam, op, &batch(fam, data)?, level).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("construction", op.name())?;
    d.set_item("lower", r.lower)?;
    d.set_item("upper", r.upper)?;
    d.set_item("level", r.level)?;
    d.set_item("mass_residual", r.diagnostics.mass_residual)?;
    Ok(d)
}

/// Frequentist coverage of an interval construction at the natural parameter `theta`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (family, theta, m, level = 0.9, trials = 100_000, seed = 0, method = "credible"))]
fn coverage<'py>(
    py: Python<'py>,
    family: &PyFamily,
    theta: Coords,
    m: usize,
    level: f64,
    trials: u64,
    seed: u64,
    method: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let fam = &family.inner;
    let op = op_for(fam, method)?;
    let r = coverage_simulation(fam, op, &NaturalParam::new(theta.vector()), m, level, trials, seed).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("construction", op.name())?;
    d.set_item("trials", r.trials)?;
    d.set_item("hits", r.hits)?;
    d.set_item("degenerate", r.degenerate)?;
    d.set_item("coverage", r.empirical_coverage)?;
    d.set_item("sigma", r.sigma())?;
    d.set_item("within_band", r.within_band())?;
    Ok(d)
}

/// Largest relative gap between the renormalized saddle-point approximation
/// and the exact posterior over `grid` (natural parameters).
#[pyfunction]
#[pyo3(signature = (family, n, theta_hat, grid, tol = 1e-10))]
fn saddlepoint_deviation(family: &PyFamily, n: usize, theta_hat: Coords, grid: Points, tol: f64) -> PyResult<f64> {
    let grid: Vec<NaturalParam> = grid.vectors().into_iter().map(NaturalParam::new).collect();
    let r = exactness_report(&family.inner, n, &NaturalParam::new(theta_hat.vector()), &grid, tol).map_err(to_py)?;
    Ok(r.max_relative_deviation)
}

/// Runs a verification suite and returns one dict per check.
#[pyfunction]
#[pyo3(signature = (suite = "all", family = None, trials = 100_000, mc_samples = 1_000_000, seed = None))]
fn verify<'py>(
    py: Python<'py>,
    suite: &str,
    family: Option<&PyFamily>,
    trials: u64,
    mc_samples: usize,
    seed: Option<u64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let suite: Suite = suite.parse().map_err(to_py)?;
    let defaults = VerifyConfig::default();
    let cfg = VerifyConfig {
        trials,
        mc_samples,
        seed: seed.unwrap_or(defaults.seed),
        ..defaults
    };
    let reports = run_suite(suite, &cfg, family.map(|f| &f.inner)).map_err(to_py)?;
    reports
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("check", r.check)?;
            d.set_item("passed", r.passed)?;
            d.set_item("statistic", r.statistic)?;
            d.set_item("comparison", if r.comparison == Comparison::AtMost { "<=" } else { ">" })?;
            d.set_item("threshold", r.threshold)?;
            d.set_item("runtime_seconds", r.runtime_seconds)?;
            d.set_item("detail", r.detail)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn expfam(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_function(wrap_pyfunction!(predict_log_density, m)?)?;
    m.add_function(wrap_pyfunction!(interval, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add_function(wrap_pyfunction!(saddlepoint_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add("DegenerateDataError", m.py().get_type::<DegenerateDataError>())?;
    Ok(())
}
