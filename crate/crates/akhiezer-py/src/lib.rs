use akhiezer::formulas::ThetaPipeline;
use akhiezer::opoly::{stieltjes, RecurrenceTable};
use akhiezer::quadrature::InnerProductEngine;
use akhiezer::verify::RunConfig;
use akhiezer::IntervalSet;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Monic orthogonal polynomials on a union of intervals, by both pipelines.
#[pyclass(name = "Akhiezer", module = "akhiezer_py")]
struct PyAkhiezer {
    set: IntervalSet,
    table: RecurrenceTable,
    pipeline: ThetaPipeline,
}

#[pymethods]
impl PyAkhiezer {
    #[new]
    #[pyo3(signature = (alphas, betas, n_max = 10, order = 200, tol = 1e-12))]
    fn new(alphas: Vec<f64>, betas: Vec<f64>, n_max: usize, order: usize, tol: f64) -> PyResult<Self> {
        let set = IntervalSet::new(&alphas, &betas).map_err(value_error)?;
        let engine = InnerProductEngine::new(&set, order).map_err(value_error)?;
        let table = stieltjes(&engine, n_max).map_err(runtime_error)?;
        let pipeline = ThetaPipeline::new(set.clone(), order, tol).map_err(runtime_error)?;
        Ok(PyAkhiezer { set, table, pipeline })
    }

    #[getter]
    fn genus(&self) -> usize {
        self.set.genus()
    }

    #[getter]
    fn capacity(&self) -> f64 {
        self.pipeline.capacity()
    }

    /// Period matrix as nested lists of complex numbers.
    #[getter]
    fn period_matrix(&self) -> Vec<Vec<Complex64>> {
        let b = &self.pipeline.surface.periods.b;
        (0..b.nrows()).map(|i| b.row(i).iter().copied().collect()).collect()
    }

    fn max_degree(&self) -> usize {
        self.table.max_degree()
    }

    /// (a_n, b_n, h_n) from quadrature.
    fn recurrence(&self, n: usize) -> PyResult<(f64, f64, f64)> {
        self.degree(n, self.table.max_degree() - 1)?;
        Ok((self.table.a(n), self.table.b(n), self.table.h(n)))
    }

    /// (a_n, b_n, h_n) from theta functions.
    fn theta_recurrence(&self, n: usize) -> PyResult<(f64, f64, f64)> {
        let p = &self.pipeline;
        Ok((
            p.a(n).map_err(runtime_error)?,
            p.b(n).map_err(runtime_error)?,
            p.h(n).map_err(runtime_error)?,
        ))
    }

    /// P_n(z) from the three-term recurrence.
    fn p(&self, n: usize, z: Complex64) -> PyResult<Complex64> {
        self.degree(n, self.table.max_degree())?;
        Ok(self.table.eval_p(n, z))
    }

    /// P_n(z) from the theta-function expression.
    fn p_theta(&self, n: usize, z: Complex64) -> PyResult<Complex64> {
        self.pipeline.p(n, z).map_err(runtime_error)
    }
}

impl PyAkhiezer {
    fn degree(&self, n: usize, limit: usize) -> PyResult<()> {
        if n == 0 || n > limit {
            return Err(PyValueError::new_err(format!("degree {n} outside 1..={limit}")));
        }
        Ok(())
    }
}

/// Runs the identity suite on a JSON config and returns the JSON report.
#[pyfunction]
fn verify(config: &str) -> PyResult<String> {
    let config = RunConfig::from_json(config).map_err(value_error)?;
    Ok(akhiezer::verify::verify(&config).map_err(value_error)?.to_json())
}

#[pymodule]
fn akhiezer_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAkhiezer>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
