use pyo3::prelude::*;
use pyo3::types::PyDict;

fn module(py: Python<'_>) -> Bound<'_, PyModule> {
    let m = PyModule::new(py, "mspc").unwrap();
    mspc::register(&m).unwrap();
    m
}

#[test]
fn module_round_trip() {
    Python::initialize();
    Python::attach(|py| {
        let m = module(py);
        let locals = PyDict::new(py);
        locals.set_item("m", &m).unwrap();
        py.run(
            c"
s = m.GroupShape('3^4')
mu = m.sieve('mobius', s.order)
sp = m.group_spectrum(mu, s)
a, top = sp.argmax()
full = m.alignment(sp)
assert abs(full['value'] - top * top) < 1e-15
assert full['witness']['digits'] == a
assert abs(m.alignment_gram(mu, s) - full['value']) < 1e-8
assert m.digital_pnt(3, 4, '0100', [1])['series'] == '1/1'
",
            None,
            Some(&locals),
        )
        .unwrap();
    });
}

#[test]
fn errors_map_to_python_exceptions() {
    Python::initialize();
    Python::attach(|py| {
        let m = module(py);
        let err = m.getattr("GroupShape").unwrap().call1(("6^2",)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let err = m.getattr("covariance").unwrap().call1((5000usize, "explicit")).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyMemoryError>(py));
        let shape = m.getattr("GroupShape").unwrap().call1(("2*3",)).unwrap();
        let err = m.getattr("lambda_balance").unwrap().call1((vec![0u32, 0], shape)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyNotImplementedError>(py));
    });
}
