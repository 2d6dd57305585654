//! Python module `mspc`. Structured results come back as dicts.

use pyo3::exceptions::{PyMemoryError, PyNotImplementedError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyList, PyString};
use serde_json::Value;

use mspc_core::align::{
    alignment_full_group, alignment_gram_oracle, alignment_semidirect, alignment_subgroup, learning_bounds, BoundParams,
    SubgroupSpec,
};
use mspc_core::arith::{sieve as core_sieve, FunctionKind};
use mspc_core::error::Error;
use mspc_core::group::{char_eval as core_char_eval, char_stats as core_char_stats, CharacterIndex, GroupShape};
use mspc_core::learn::covariance::{binary_mult_covariance, CovarianceMode};
use mspc_core::learn::csq::{csq_bad_event_rate as core_csq, FixedFeatureLearner};
use mspc_core::learn::ngd::{ngd_experiment as core_ngd, NgdConfig};
use mspc_core::primes::{
    count_primes_digit_condition, lambda_balanced_correlation as core_lambda, singular_series as core_series,
    LinearDigitMap,
};
use mspc_core::spectral::katai::{katai_witness as core_katai, DEFAULT_BUDGET};
use mspc_core::spectral::kernel::{char_l1_norm as core_l1, linf_bound_check as core_linf};
use mspc_core::spectral::transform::{correlation as core_correlation, group_spectrum as core_spectrum};

pub fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Resource { .. } => PyMemoryError::new_err(e.to_string()),
        Error::Unsupported(_) => PyNotImplementedError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for mspc_core::error::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (None, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => PyFloat::new(py, n.as_f64().unwrap_or(f64::NAN)).into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for x in items {
                list.append(json_to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let d = PyDict::new(py);
            for (k, x) in map {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn to_dict<'py, T: serde::Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn kind(name: &str) -> PyResult<FunctionKind> {
    name.parse().py()
}

fn character(digits: Vec<u32>, shape: &GroupShape) -> PyResult<CharacterIndex> {
    CharacterIndex::new(digits, shape).py()
}

/// The group `∏ μ_{p_i}^{d_i}`, built from a literal like `"2^2*3"`.
#[pyclass(name = "GroupShape", module = "mspc", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyShape {
    pub inner: GroupShape,
}

#[pymethods]
impl PyShape {
    #[new]
    #[pyo3(signature = (spec, exponents=None))]
    fn new(spec: &Bound<'_, PyAny>, exponents: Option<Vec<u32>>) -> PyResult<Self> {
        let inner = match exponents {
            Some(e) => GroupShape::new(&spec.extract::<Vec<u64>>()?, &e).py()?,
            None => spec.extract::<String>()?.parse().py()?,
        };
        Ok(PyShape { inner })
    }

    #[getter]
    fn primes(&self) -> Vec<u64> {
        self.inner.primes().to_vec()
    }

    #[getter]
    fn exponents(&self) -> Vec<u32> {
        self.inner.exponents().to_vec()
    }

    #[getter]
    fn order(&self) -> u64 {
        self.inner.order()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// CRT digits of `x`, least significant first in each block.
    fn encode(&self, x: u64) -> PyResult<Vec<u32>> {
        self.inner.encode(x).py()
    }

    fn decode(&self, digits: Vec<u32>) -> PyResult<u64> {
        self.inner.decode(&digits).py()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("GroupShape('{}')", self.inner)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

/// Normalized coefficients `f̂(a)` over all characters.
#[pyclass(name = "Spectrum", module = "mspc", frozen)]
pub struct PySpectrum {
    inner: mspc_core::Spectrum,
}

#[pymethods]
impl PySpectrum {
    #[getter]
    fn shape(&self) -> PyShape {
        PyShape { inner: self.inner.shape().clone() }
    }

    /// `(re, im)` pairs in flat character order.
    fn coeffs(&self) -> Vec<(f64, f64)> {
        self.inner.coeffs().iter().map(|c| (c.re, c.im)).collect()
    }

    fn magnitudes(&self) -> Vec<f64> {
        self.inner.coeffs().iter().map(|c| c.norm()).collect()
    }

    fn get(&self, digits: Vec<u32>) -> PyResult<(f64, f64)> {
        let c = self.inner.get(&character(digits, self.inner.shape())?);
        Ok((c.re, c.im))
    }

    /// The `k` largest coefficients as `(digits, magnitude)`.
    fn top(&self, k: usize) -> Vec<(Vec<u32>, f64)> {
        let shape = self.inner.shape();
        self.inner.top(k).into_iter().map(|(f, c)| (shape.digits_of_flat(f), c.norm())).collect()
    }

    fn argmax(&self) -> (Vec<u32>, f64) {
        let (f, m) = self.inner.argmax();
        (self.inner.shape().digits_of_flat(f), m)
    }

    /// `Σ |f̂(a)|²`.
    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    fn inverse(&self) -> Vec<(f64, f64)> {
        self.inner.inverse().iter().map(|c| (c.re, c.im)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.coeffs().len()
    }
}

/// Values of an arithmetic function on `0..limit`.
#[pyfunction]
fn sieve(kind_name: &str, limit: usize) -> PyResult<Vec<f64>> {
    Ok(core_sieve(kind(kind_name)?, limit).py()?.to_f64())
}

#[pyfunction]
fn group_spectrum(values: Vec<f64>, shape: &PyShape) -> PyResult<PySpectrum> {
    Ok(PySpectrum { inner: core_spectrum(&values, &shape.inner).py()? })
}

/// `f̂(a) = (1/X) Σ f(x) conj χ_a(x)` as `(re, im)`.
#[pyfunction]
fn correlation(values: Vec<f64>, digits: Vec<u32>, shape: &PyShape) -> PyResult<(f64, f64)> {
    let c = core_correlation(&values, &character(digits, &shape.inner)?, &shape.inner).py()?;
    Ok((c.re, c.im))
}

#[pyfunction]
fn char_eval(digits: Vec<u32>, x: u64, shape: &PyShape) -> PyResult<(f64, f64)> {
    let c = core_char_eval(&character(digits, &shape.inner)?, x, &shape.inner).py()?;
    Ok((c.re, c.im))
}

#[pyfunction]
fn char_stats<'py>(py: Python<'py>, digits: Vec<u32>, shape: &PyShape) -> PyResult<Bound<'py, PyAny>> {
    let s = core_char_stats(&character(digits, &shape.inner)?, &shape.inner).py()?;
    let d = PyDict::new(py);
    d.set_item("weight", s.weight)?;
    d.set_item("type_counts", s.type_counts)?;
    d.set_item("class_size", s.class_size.to_string())?;
    Ok(d.into_any())
}

#[pyfunction]
fn linf_bound_check<'py>(py: Python<'py>, digits: Vec<u32>, shape: &PyShape) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &core_linf(&character(digits, &shape.inner)?, &shape.inner).py()?)
}

#[pyfunction]
fn char_l1_norm(digits: Vec<u32>, shape: &PyShape) -> PyResult<f64> {
    core_l1(&character(digits, &shape.inner)?, &shape.inner).py()
}

/// `A(f, X)` for the translation group, its digit-permutation extension, or a subgroup.
#[pyfunction]
#[pyo3(signature = (spectrum, group="full", generators=None))]
fn alignment<'py>(
    py: Python<'py>,
    spectrum: &PySpectrum,
    group: &str,
    generators: Option<Vec<u64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let r = match group {
        "full" => alignment_full_group(&spectrum.inner),
        "semidirect" => alignment_semidirect(&spectrum.inner).py()?,
        "subgroup" => {
            let gens = generators.ok_or_else(|| PyValueError::new_err("subgroup alignment needs generators"))?;
            let sub = SubgroupSpec::new(spectrum.inner.shape(), &gens).py()?;
            alignment_subgroup(&spectrum.inner, &sub)
        }
        other => return Err(PyValueError::new_err(format!("unknown group {other:?}"))),
    };
    to_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (values, shape, elements=None))]
fn alignment_gram(values: Vec<f64>, shape: &PyShape, elements: Option<Vec<u64>>) -> PyResult<f64> {
    let elems = elements.unwrap_or_else(|| (0..shape.inner.order()).collect());
    alignment_gram_oracle(&values, &shape.inner, &elems).py()
}

#[pyfunction]
#[pyo3(signature = (a, eps, r, tau, t, q))]
fn bounds<'py>(py: Python<'py>, a: f64, eps: f64, r: f64, tau: f64, t: u64, q: u64) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &learning_bounds(a, &BoundParams { eps, r, tau, t, q }).py()?)
}

#[pyfunction]
#[pyo3(signature = (values, digits, shape, delta, budget=DEFAULT_BUDGET))]
fn katai_witness<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    digits: Vec<u32>,
    shape: &PyShape,
    delta: f64,
    budget: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let a = character(digits, &shape.inner)?;
    to_dict(py, &core_katai(&values, &a, &shape.inner, delta, budget).py()?)
}

/// `𝔖_p(L, b)` as `(numerator, denominator, case)`.
#[pyfunction]
fn singular_series(p: u64, d: usize, l: &str, b: Vec<u64>) -> PyResult<(u64, u64, String)> {
    let map = LinearDigitMap::parse(p, d, l).py()?;
    let s = core_series(&map, &b).py()?;
    let case = serde_json::to_value(s.case).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    Ok((*s.value.numer(), *s.value.denom(), case))
}

#[pyfunction]
fn digital_pnt<'py>(py: Python<'py>, p: u64, d: u32, l: &str, b: Vec<u64>) -> PyResult<Bound<'py, PyAny>> {
    let shape = GroupShape::prime_power(p, d).py()?;
    let map = LinearDigitMap::parse(p, d as usize, l).py()?;
    let r = count_primes_digit_condition(&map, &b, &shape).py()?;
    let out = to_dict(py, &r)?;
    out.set_item("series", format!("{}/{}", r.series.value.numer(), r.series.value.denom()))?;
    Ok(out)
}

/// `Σ_{n<X} (Λ(n) − ν_p(n)) χ_a(n)` as `(re, im)`.
#[pyfunction]
fn lambda_balance(digits: Vec<u32>, shape: &PyShape) -> PyResult<(f64, f64)> {
    let r = core_lambda(&character(digits, &shape.inner)?, &shape.inner).py()?;
    Ok((r.raw.re, r.raw.im))
}

#[pyfunction]
#[pyo3(signature = (x, mode="formula"))]
fn covariance<'py>(py: Python<'py>, x: usize, mode: &str) -> PyResult<Bound<'py, PyAny>> {
    let mode = match mode {
        "formula" => CovarianceMode::Formula,
        "explicit" => CovarianceMode::Explicit,
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    to_dict(py, &binary_mult_covariance(x, mode).py()?)
}

#[pyfunction]
#[pyo3(signature = (target, shape, arch, steps=100, eta=0.1, r=1.0, tau=0.05, eps=None, trials=10, seed=0))]
#[allow(clippy::too_many_arguments)]
fn ngd_experiment<'py>(
    py: Python<'py>,
    target: Vec<f64>,
    shape: &PyShape,
    arch: Vec<usize>,
    steps: usize,
    eta: f64,
    r: f64,
    tau: f64,
    eps: Option<f64>,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let norm2 = target.iter().map(|v| v * v).sum::<f64>() / target.len().max(1) as f64;
    let cfg = NgdConfig { steps, eta, r, tau, seed, eps: eps.unwrap_or(norm2 / 4.0), baseline: None };
    let e = py.detach(|| core_ngd(&target, &shape.inner, &cfg, trials, &arch)).py()?;
    to_dict(py, &e)
}

#[pyfunction]
#[pyo3(signature = (base, shape, q=10, tau=0.01, samples=500, seed=0))]
fn csq_bad_event_rate<'py>(
    py: Python<'py>,
    base: Vec<f64>,
    shape: &PyShape,
    q: usize,
    tau: f64,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let learner = FixedFeatureLearner::new(&shape.inner, q, seed).py()?;
    to_dict(py, &core_csq(&base, &shape.inner, &learner, tau, q, samples, seed).py()?)
}

#[pymodule]
fn mspc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyShape>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(sieve, m)?)?;
    m.add_function(wrap_pyfunction!(group_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(correlation, m)?)?;
    m.add_function(wrap_pyfunction!(char_eval, m)?)?;
    m.add_function(wrap_pyfunction!(char_stats, m)?)?;
    m.add_function(wrap_pyfunction!(linf_bound_check, m)?)?;
    m.add_function(wrap_pyfunction!(char_l1_norm, m)?)?;
    m.add_function(wrap_pyfunction!(alignment, m)?)?;
    m.add_function(wrap_pyfunction!(alignment_gram, m)?)?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    m.add_function(wrap_pyfunction!(katai_witness, m)?)?;
    m.add_function(wrap_pyfunction!(singular_series, m)?)?;
    m.add_function(wrap_pyfunction!(digital_pnt, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_balance, m)?)?;
    m.add_function(wrap_pyfunction!(covariance, m)?)?;
    m.add_function(wrap_pyfunction!(ngd_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(csq_bad_event_rate, m)?)?;
    Ok(())
}
