//! Python bindings for `condcompat`.
//!
//! Matrices are lists of rows. Entries may be `str` (`"1/5"`, `"0.25"`),
//! `int`, `fractions.Fraction` or `float` (read through its decimal
//! repr); `None` or `"?"` marks an unknown. Results come back as
//! `fractions.Fraction`.
//!
//! ```python
//! import condcompat_py as cc
//! v = cc.check([["1/5", "3/7", "1/2"], ["4/5", "4/7", "1/2"]],
//!              [["1/6", "1/2", "1/3"], ["2/5", "2/5", "1/5"]])
//! v.label, v.eta   # 'compatible_unique', [Fraction(3, 8), Fraction(5, 8)]
//! ```

use condcompat::compat::{self, column_marginals, recover_joint};
use condcompat::completion::{self, CompletionResult, Diagnostics};
use condcompat::exact::parse_rational;
use condcompat::{
    derive_conditionals, CompatibilityVerdict, ConditionalMatrix, Error, JointDistribution,
    Orientation, RatMatrix, Rational,
};
use condcompat::{io, oracle};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Rows = Vec<Vec<Option<Rational>>>;
type PyMatrix<'py> = Vec<Vec<Option<Bound<'py, PyAny>>>>;

fn value_error(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn entry(obj: &Bound<'_, PyAny>) -> PyResult<Option<Rational>> {
    if obj.is_none() {
        return Ok(None);
    }
    let text = obj.str()?.to_string();
    if text.trim() == "?" {
        return Ok(None);
    }
    parse_rational(&text)
        .map(Some)
        .map_err(|m| PyValueError::new_err(format!("cannot read `{text}` as a fraction: {m}")))
}

fn rows_from(obj: &Bound<'_, PyAny>) -> PyResult<Rows> {
    let rows: Vec<Vec<Bound<'_, PyAny>>> = obj.extract()?;
    rows.iter().map(|r| r.iter().map(entry).collect()).collect()
}

fn conditional(obj: &Bound<'_, PyAny>, orientation: Orientation) -> PyResult<ConditionalMatrix> {
    let m = ConditionalMatrix::new(orientation, rows_from(obj)?).map_err(value_error)?;
    if let Some(v) = m.validate().first() {
        let name = if orientation == Orientation::GivenColumn {
            "A"
        } else {
            "B"
        };
        return Err(PyValueError::new_err(format!("{name}: {v}")));
    }
    Ok(m)
}

fn pair(
    a: &Bound<'_, PyAny>,
    b: &Bound<'_, PyAny>,
) -> PyResult<(ConditionalMatrix, ConditionalMatrix)> {
    Ok((
        conditional(a, Orientation::GivenColumn)?,
        conditional(b, Orientation::GivenRow)?,
    ))
}

fn joint_from(obj: &Bound<'_, PyAny>) -> PyResult<JointDistribution> {
    let rows = rows_from(obj)?
        .into_iter()
        .map(|r| {
            r.into_iter()
                .map(|v| v.ok_or_else(|| PyValueError::new_err("joint has an unknown entry")))
                .collect()
        })
        .collect::<PyResult<Vec<Vec<Rational>>>>()?;
    JointDistribution::new(RatMatrix::from_rows(rows).map_err(value_error)?).map_err(value_error)
}

fn fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((r.to_string(),))
}

fn fractions<'py>(py: Python<'py>, v: &[Rational]) -> PyResult<Vec<Bound<'py, PyAny>>> {
    v.iter().map(|r| fraction(py, r)).collect()
}

fn matrix_out<'py>(py: Python<'py>, rows: &Rows) -> PyResult<PyMatrix<'py>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|v| v.as_ref().map(|x| fraction(py, x)).transpose())
                .collect()
        })
        .collect()
}

fn known_rows(m: &RatMatrix) -> Rows {
    m.to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(Some).collect())
        .collect()
}

/// Outcome of a compatibility check.
#[pyclass(frozen, module = "condcompat_py")]
struct Verdict {
    #[pyo3(get)]
    label: &'static str,
    #[pyo3(get)]
    rank: Option<usize>,
    #[pyo3(get)]
    kernel_dimension: usize,
    eta: Option<Vec<Rational>>,
    tau: Option<Vec<Rational>>,
    joint: Option<RatMatrix>,
}

impl Verdict {
    fn new(v: CompatibilityVerdict, b: &ConditionalMatrix) -> PyResult<Self> {
        Ok(match v {
            CompatibilityVerdict::Incompatible { rank } => Verdict {
                label: "incompatible",
                rank: Some(rank),
                kernel_dimension: 0,
                eta: None,
                tau: None,
                joint: None,
            },
            CompatibilityVerdict::CompatibleUnique { marginals, joint } => Verdict {
                label: "compatible_unique",
                rank: Some(marginals.eta.len() - 1),
                kernel_dimension: 1,
                eta: Some(marginals.eta),
                tau: Some(marginals.tau),
                joint: Some(joint.cells().clone()),
            },
            CompatibilityVerdict::CompatibleNonUnique {
                rank,
                kernel_basis,
                representative,
            } => {
                let bm = b.to_matrix().map_err(value_error)?;
                let joint = recover_joint(b, &representative).map_err(value_error)?;
                Verdict {
                    label: "compatible_non_unique",
                    rank: Some(rank),
                    kernel_dimension: kernel_basis.len(),
                    tau: Some(column_marginals(&bm, &representative)),
                    eta: Some(representative),
                    joint: Some(joint.cells().clone()),
                }
            }
        })
    }
}

#[pymethods]
impl Verdict {
    #[getter]
    fn is_compatible(&self) -> bool {
        self.label != "incompatible"
    }

    /// X-marginal (a representative one if not unique), or `None`.
    #[getter]
    fn eta<'py>(&self, py: Python<'py>) -> PyResult<Option<Vec<Bound<'py, PyAny>>>> {
        self.eta.as_deref().map(|v| fractions(py, v)).transpose()
    }

    #[getter]
    fn tau<'py>(&self, py: Python<'py>) -> PyResult<Option<Vec<Bound<'py, PyAny>>>> {
        self.tau.as_deref().map(|v| fractions(py, v)).transpose()
    }

    #[getter]
    fn joint<'py>(&self, py: Python<'py>) -> PyResult<Option<PyMatrix<'py>>> {
        self.joint
            .as_ref()
            .map(|m| matrix_out(py, &known_rows(m)))
            .transpose()
    }

    fn __repr__(&self) -> String {
        format!("Verdict(label={:?}, rank={:?})", self.label, self.rank)
    }
}

/// Decide compatibility of `A = P(X|Y)` and `B = P(Y|X)`.
/// `method` is `"rank"` or `"lp"`.
#[pyfunction]
#[pyo3(signature = (a, b, method = "rank"))]
fn check(a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>, method: &str) -> PyResult<Verdict> {
    let (a, b) = pair(a, b)?;
    let v = match method {
        "rank" => compat::check_rank(&a, &b),
        "lp" => compat::check_lp(&a, &b),
        other => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
    }
    .map_err(value_error)?;
    Verdict::new(v, &b)
}

fn diagnostics_label(d: &Diagnostics) -> String {
    match d {
        Diagnostics::ExactUnique => "exact_unique".into(),
        Diagnostics::KnownColumnsInconsistent { .. } => "known_columns_inconsistent".into(),
        Diagnostics::Underdetermined { .. } => "underdetermined".into(),
        Diagnostics::Forced { column } => format!("forced_column {}", column + 1),
    }
}

fn completion_dict<'py>(py: Python<'py>, r: &CompletionResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("a", matrix_out(py, &r.filled_a.rows_of_options())?)?;
    d.set_item("b", matrix_out(py, &r.filled_b.rows_of_options())?)?;
    d.set_item(
        "eta",
        r.eta.as_deref().map(|v| fractions(py, v)).transpose()?,
    )?;
    d.set_item("diagnostics", diagnostics_label(&r.diagnostics))?;
    match &r.diagnostics {
        Diagnostics::KnownColumnsInconsistent { candidates } => {
            let c = PyDict::new(py);
            for cand in candidates {
                c.set_item(
                    cand.column + 1,
                    cand.eta.as_deref().map(|v| fractions(py, v)).transpose()?,
                )?;
            }
            d.set_item("candidates", c)?;
        }
        Diagnostics::Underdetermined { free_parameters } => {
            d.set_item("free_parameters", free_parameters)?;
        }
        _ => {}
    }
    Ok(d)
}

/// Fill unknown entries so that the pair becomes compatible. Returns a
/// dict with keys `a`, `b`, `eta`, `diagnostics` and, when the known
/// columns disagree, `candidates` (1-based column -> eta).
#[pyfunction]
#[pyo3(signature = (a, b, force_column = None))]
fn complete<'py>(
    py: Python<'py>,
    a: &Bound<'py, PyAny>,
    b: &Bound<'py, PyAny>,
    force_column: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let (a, b) = pair(a, b)?;
    let force = match force_column {
        Some(0) => return Err(PyValueError::new_err("force_column is 1-based")),
        other => other.map(|j| j - 1),
    };
    let r = if b.is_fully_known() {
        completion::complete_column_in_a(&a, &b, force)
    } else {
        completion::complete_a_and_b_2x3(&a, &b)
    }
    .map_err(value_error)?;
    completion_dict(py, &r)
}

/// `(epsilon*, eta)`: the smallest uniform bound on `|D eta|`.
#[pyfunction]
fn min_epsilon<'py>(
    py: Python<'py>,
    a: &Bound<'py, PyAny>,
    b: &Bound<'py, PyAny>,
) -> PyResult<(Bound<'py, PyAny>, Vec<Bound<'py, PyAny>>)> {
    let (a, b) = pair(a, b)?;
    let r = compat::min_epsilon(&a, &b).map_err(value_error)?;
    Ok((fraction(py, &r.epsilon_star)?, fractions(py, &r.eta)?))
}

/// `(eta, (alpha_12, alpha_22), feasible)` for a 3x2 `A` with those two
/// entries unknown, at a fixed epsilon.
#[pyfunction]
fn epsilon_estimate<'py>(
    py: Python<'py>,
    a: &Bound<'py, PyAny>,
    b: &Bound<'py, PyAny>,
    epsilon: &Bound<'py, PyAny>,
) -> PyResult<Bound<'py, PyDict>> {
    let (a, b) = pair(a, b)?;
    let eps = entry(epsilon)?.ok_or_else(|| PyValueError::new_err("epsilon is required"))?;
    let est = completion::epsilon_estimates(&a, &b, &eps).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("eta", fractions(py, &est.eta)?)?;
    d.set_item(
        "alpha",
        (fraction(py, &est.alpha.0)?, fraction(py, &est.alpha.1)?),
    )?;
    d.set_item("feasible", est.feasible)?;
    Ok(d)
}

/// `(A, B)` of a joint distribution.
#[pyfunction(name = "derive_conditionals")]
fn derive<'py>(
    py: Python<'py>,
    joint: &Bound<'py, PyAny>,
) -> PyResult<(PyMatrix<'py>, PyMatrix<'py>)> {
    let p = joint_from(joint)?;
    let (a, b) = derive_conditionals(&p).map_err(value_error)?;
    Ok((
        matrix_out(py, &a.rows_of_options())?,
        matrix_out(py, &b.rows_of_options())?,
    ))
}

/// Seeded strictly positive joint on `rows x cols` cells.
#[pyfunction]
fn random_joint(py: Python<'_>, seed: u64, rows: usize, cols: usize) -> PyResult<PyMatrix<'_>> {
    let p = oracle::Generator::new(seed, (rows, cols))
        .random_joint()
        .map_err(value_error)?;
    matrix_out(py, &known_rows(p.cells()))
}

/// Move `delta` of mass inside column 1 of `A`; returns the new `A`.
#[pyfunction]
fn perturb<'py>(
    py: Python<'py>,
    a: &Bound<'py, PyAny>,
    b: &Bound<'py, PyAny>,
    delta: &Bound<'py, PyAny>,
) -> PyResult<PyMatrix<'py>> {
    let (a, b) = pair(a, b)?;
    let delta = entry(delta)?.ok_or_else(|| PyValueError::new_err("delta is required"))?;
    let (moved, _) = oracle::perturb_to_incompatible(&a, &b, &delta).map_err(value_error)?;
    matrix_out(py, &moved.rows_of_options())
}

/// Smallest worst-case violation over the grid `eta = k / steps`.
#[pyfunction]
#[pyo3(signature = (a, b, steps = 1000))]
fn grid_min_violation<'py>(
    py: Python<'py>,
    a: &Bound<'py, PyAny>,
    b: &Bound<'py, PyAny>,
    steps: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let (a, b) = pair(a, b)?;
    let v = oracle::grid_min_violation(&a, &b, steps).map_err(value_error)?;
    fraction(py, &v)
}

/// Parse an instance file's text into a dict with `dims`, `name`, `seed`,
/// `a`, `b` and `joint` (absent matrices are `None`).
#[pyfunction]
fn parse_instance<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyDict>> {
    let inst = io::parse_instance(text).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("dims", inst.dims)?;
    d.set_item("name", inst.name)?;
    d.set_item("seed", inst.seed)?;
    let conv = |m: Option<Rows>| m.map(|r| matrix_out(py, &r)).transpose();
    d.set_item("a", conv(inst.a.map(|m| m.rows_of_options()))?)?;
    d.set_item("b", conv(inst.b.map(|m| m.rows_of_options()))?)?;
    d.set_item("joint", conv(inst.joint.map(|p| known_rows(p.cells())))?)?;
    Ok(d)
}

#[pymodule]
pub fn condcompat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Verdict>()?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(complete, m)?)?;
    m.add_function(wrap_pyfunction!(min_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(derive, m)?)?;
    m.add_function(wrap_pyfunction!(random_joint, m)?)?;
    m.add_function(wrap_pyfunction!(perturb, m)?)?;
    m.add_function(wrap_pyfunction!(grid_min_violation, m)?)?;
    m.add_function(wrap_pyfunction!(parse_instance, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
