use pyo3::prelude::*;

#[pymodule]
fn crosswalk_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
