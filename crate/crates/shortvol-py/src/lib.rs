//! Python bindings for the `shortvol` pricing engine.
//!
//! The module mirrors the Rust API: model construction and validation,
//! the characteristic function `G` and zero-coupon bond prices, Fourier
//! call/put pricing, implied-volatility inversion and smile generation,
//! and the Monte Carlo cross-validation oracle.
//!
//! Error mapping: invalid inputs (parameters, state, configuration,
//! arbitrage bounds, strip violations) raise `ValueError`; numerical
//! failures (non-convergence, precision loss, branch discontinuities,
//! quadrature breakdown) raise `RuntimeError` with the engine's message.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use shortvol::models::{CirParams, JacobiParams};
use shortvol::{chf, mc, models, pricing, vol};

fn to_py(err: shortvol::Error) -> PyErr {
    use shortvol::Error::*;
    match &err {
        InvalidParams(_) | Domain(_) | Config(_) | BoundsViolation(_) | StripViolation(_) => {
            PyValueError::new_err(err.to_string())
        }
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// A short-rate driver model: CIR (`r(y) = y`, `c(y) = γ/√y`) or Jacobi
/// (`r(y) = ηy/(1−y)`, `c(y) = γ√((1−y)/y)`), with spot-rate correlation ρ.
#[pyclass(frozen, skip_from_py_object, module = "shortvol_py")]
#[derive(Clone)]
pub struct Model {
    inner: models::Model,
}

#[pymethods]
impl Model {
    /// CIR driver with mean-reversion speed `kappa`, level `theta`,
    /// vol-of-vol `delta`, volatility scale `gamma`, and correlation `rho`.
    #[staticmethod]
    fn cir(kappa: f64, theta: f64, delta: f64, gamma: f64, rho: f64) -> PyResult<Self> {
        let params = CirParams::new(kappa, theta, delta, gamma, rho).map_err(to_py)?;
        Ok(Model { inner: models::Model::Cir(params) })
    }

    /// Jacobi driver on (0, 1) with rate scale `eta`.
    #[staticmethod]
    fn jacobi(kappa: f64, theta: f64, delta: f64, gamma: f64, eta: f64, rho: f64) -> PyResult<Self> {
        let params = JacobiParams::new(kappa, theta, delta, gamma, eta, rho).map_err(to_py)?;
        Ok(Model { inner: models::Model::Jacobi(params) })
    }

    /// The built-in CIR reference parameter set at correlation `rho`.
    #[staticmethod]
    fn cir_reference(rho: f64) -> Self {
        Model { inner: models::Model::Cir(CirParams::reference(rho)) }
    }

    /// The built-in Jacobi reference parameter set at correlation `rho`.
    #[staticmethod]
    fn jacobi_reference(rho: f64) -> Self {
        Model { inner: models::Model::Jacobi(JacobiParams::reference(rho)) }
    }

    /// `"cir"` or `"jacobi"`.
    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho()
    }

    /// The model parameters as a dict (keys match the constructor arguments).
    #[getter]
    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        match &self.inner {
            models::Model::Cir(p) => {
                d.set_item("kappa", p.kappa())?;
                d.set_item("theta", p.theta())?;
                d.set_item("delta", p.delta())?;
                d.set_item("gamma", p.gamma())?;
                d.set_item("rho", p.rho())?;
            }
            models::Model::Jacobi(p) => {
                d.set_item("kappa", p.kappa())?;
                d.set_item("theta", p.theta())?;
                d.set_item("delta", p.delta())?;
                d.set_item("gamma", p.gamma())?;
                d.set_item("eta", p.eta())?;
                d.set_item("rho", p.rho())?;
            }
        }
        Ok(d)
    }

    /// Whether `y` lies in the open state space of the driver.
    fn contains(&self, y: f64) -> bool {
        self.inner.contains(y)
    }

    /// The open interval of contour offsets `ω_i` on which the pricing
    /// formula for `G` is analytic (branch-cut free) for this model.
    fn admissible_offset_window(&self) -> (f64, f64) {
        chf::admissible_offset_window(&self.inner)
    }

    /// Zero-coupon bond price `B(t, y; T) = E[e^{−∫ₜᵀ r(Y_s) ds}]`.
    fn bond(&self, t: f64, y: f64, maturity: f64) -> PyResult<f64> {
        chf::bond(&self.inner, t, y, maturity).map_err(to_py)
    }

    /// The transform `G(t, y; T, w, z) = Ẽ[exp(−w·∫r(Y_s)ds − z·∫c²(Y_s)ds)]`
    /// under the ω-shifted driver dynamics.  At the pricing specialization
    /// `w = 1 − iω`, `z = ω²/2 + iω/2` this is the discounted
    /// characteristic function of the terminal log price.
    #[allow(clippy::too_many_arguments)]
    fn g(
        &self,
        t: f64,
        maturity: f64,
        y: f64,
        w: Complex64,
        z: Complex64,
        omega: Complex64,
    ) -> PyResult<Complex64> {
        let args = chf::GArgs::new(t, maturity, y, w, z, omega).map_err(to_py)?;
        chf::g(&self.inner, &args).map_err(to_py)
    }

    /// Prices a European call by the Fourier contour integral.
    #[pyo3(signature = (state, maturity, strike, contour=None))]
    fn price_call(
        &self,
        py: Python<'_>,
        state: PyRef<'_, MarketState>,
        maturity: f64,
        strike: f64,
        contour: Option<PyRef<'_, ContourConfig>>,
    ) -> PyResult<f64> {
        let config = contour.map(|c| c.inner).unwrap_or_default();
        let state = state.inner;
        py.detach(|| pricing::price_call(&self.inner, &state, maturity, strike, &config))
            .map_err(to_py)
    }

    /// Prices a European put on the `ω_i > 0` strip (defaults to the
    /// put-side contour when no configuration is given).
    #[pyo3(signature = (state, maturity, strike, contour=None))]
    fn price_put(
        &self,
        py: Python<'_>,
        state: PyRef<'_, MarketState>,
        maturity: f64,
        strike: f64,
        contour: Option<PyRef<'_, ContourConfig>>,
    ) -> PyResult<f64> {
        let config = contour.map(|c| c.inner).unwrap_or_else(pricing::ContourConfig::default_put);
        let state = state.inner;
        py.detach(|| pricing::price_put(&self.inner, &state, maturity, strike, &config))
            .map_err(to_py)
    }

    /// Computes the implied-volatility smile over a log-moneyness grid
    /// (`K = e^L·F`).  Per-point failures are recorded in `status`, not
    /// raised.
    #[pyo3(signature = (state, maturity, l_grid, contour=None))]
    fn smile(
        &self,
        py: Python<'_>,
        state: PyRef<'_, MarketState>,
        maturity: f64,
        l_grid: Vec<f64>,
        contour: Option<PyRef<'_, ContourConfig>>,
    ) -> PyResult<Smile> {
        let request = vol::SmileRequest {
            model: self.inner.clone(),
            state: state.inner,
            maturity,
            l_grid,
            contour: contour.map(|c| c.inner).unwrap_or_default(),
        };
        let result = py.detach(|| vol::smile(&request)).map_err(to_py)?;
        Ok(Smile::from_result(result))
    }

    /// Simulates terminal path data `(X_T, Y_T, A_T, C_T)` under the
    /// risk-neutral measure for Monte Carlo cross-checks.
    #[pyo3(signature = (state, maturity, config=None))]
    fn simulate(
        &self,
        py: Python<'_>,
        state: PyRef<'_, MarketState>,
        maturity: f64,
        config: Option<PyRef<'_, McConfig>>,
    ) -> PyResult<PathEnsemble> {
        let cfg = config.map(|c| c.inner).unwrap_or_default();
        let state = state.inner;
        let ensemble =
            py.detach(|| mc::simulate(&self.inner, &state, maturity, &cfg)).map_err(to_py)?;
        Ok(PathEnsemble { inner: ensemble })
    }

    /// Simulates `F_T^T` under the T-forward measure (CIR only) and returns
    /// `(mean, stderr)`; the martingale property makes `S_t/B` the exact
    /// reference value.
    #[pyo3(signature = (state, maturity, config=None))]
    fn t_forward_mean(
        &self,
        py: Python<'_>,
        state: PyRef<'_, MarketState>,
        maturity: f64,
        config: Option<PyRef<'_, McConfig>>,
    ) -> PyResult<(f64, f64)> {
        let params = match &self.inner {
            models::Model::Cir(p) => p,
            models::Model::Jacobi(_) => {
                return Err(PyValueError::new_err(
                    "the T-forward simulation is defined for the CIR driver only",
                ))
            }
        };
        let cfg = config.map(|c| c.inner).unwrap_or_default();
        let state = state.inner;
        let est = py
            .detach(|| {
                let ensemble = mc::simulate_t_forward_cir(params, &state, maturity, &cfg)?;
                mc::t_forward_mean(&ensemble)
            })
            .map_err(to_py)?;
        Ok((est.value, est.stderr))
    }

    fn __repr__(&self) -> String {
        match &self.inner {
            models::Model::Cir(p) => format!(
                "Model.cir(kappa={}, theta={}, delta={}, gamma={}, rho={})",
                p.kappa(),
                p.theta(),
                p.delta(),
                p.gamma(),
                p.rho()
            ),
            models::Model::Jacobi(p) => format!(
                "Model.jacobi(kappa={}, theta={}, delta={}, gamma={}, eta={}, rho={})",
                p.kappa(),
                p.theta(),
                p.delta(),
                p.gamma(),
                p.eta(),
                p.rho()
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// Market state
// ---------------------------------------------------------------------------

/// Market state: valuation time `t`, log price `x = ln S_t`, driver level `y`.
#[pyclass(frozen, skip_from_py_object, module = "shortvol_py")]
#[derive(Clone)]
pub struct MarketState {
    inner: models::MarketState,
}

#[pymethods]
impl MarketState {
    #[new]
    fn new(t: f64, x: f64, y: f64) -> PyResult<Self> {
        Ok(MarketState { inner: models::MarketState::new(t, x, y).map_err(to_py)? })
    }

    /// Builds the state from the spot price `S_t` instead of its log.
    #[staticmethod]
    fn from_spot(t: f64, spot: f64, y: f64) -> PyResult<Self> {
        if !(spot > 0.0) || !spot.is_finite() {
            return Err(PyValueError::new_err(format!(
                "invalid parameters: spot must be positive and finite, got {spot}"
            )));
        }
        Ok(MarketState { inner: models::MarketState::new(t, spot.ln(), y).map_err(to_py)? })
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    #[getter]
    fn x(&self) -> f64 {
        self.inner.x
    }

    #[getter]
    fn y(&self) -> f64 {
        self.inner.y
    }

    /// Spot price `S_t = e^x`.
    #[getter]
    fn spot(&self) -> f64 {
        self.inner.spot()
    }

    fn __repr__(&self) -> String {
        format!("MarketState(t={}, x={}, y={})", self.inner.t, self.inner.x, self.inner.y)
    }
}

// ---------------------------------------------------------------------------
// Contour configuration
// ---------------------------------------------------------------------------

/// Contour offset and quadrature controls for the pricing integral.
#[pyclass(frozen, skip_from_py_object, module = "shortvol_py")]
#[derive(Clone)]
pub struct ContourConfig {
    inner: pricing::ContourConfig,
}

#[pymethods]
impl ContourConfig {
    #[new]
    #[pyo3(signature = (omega_i=-1.5, abs_tol=1e-10, rel_tol=1e-8, omega_max_init=40.0, max_doublings=6))]
    fn new(omega_i: f64, abs_tol: f64, rel_tol: f64, omega_max_init: f64, max_doublings: u32) -> Self {
        ContourConfig {
            inner: pricing::ContourConfig { omega_i, abs_tol, rel_tol, omega_max_init, max_doublings },
        }
    }

    /// The default put-side configuration (`ω_i = +0.5`).
    #[staticmethod]
    fn default_put() -> Self {
        ContourConfig { inner: pricing::ContourConfig::default_put() }
    }

    #[getter]
    fn omega_i(&self) -> f64 {
        self.inner.omega_i
    }

    #[getter]
    fn abs_tol(&self) -> f64 {
        self.inner.abs_tol
    }

    #[getter]
    fn rel_tol(&self) -> f64 {
        self.inner.rel_tol
    }

    #[getter]
    fn omega_max_init(&self) -> f64 {
        self.inner.omega_max_init
    }

    #[getter]
    fn max_doublings(&self) -> u32 {
        self.inner.max_doublings
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "ContourConfig(omega_i={}, abs_tol={}, rel_tol={}, omega_max_init={}, max_doublings={})",
            c.omega_i, c.abs_tol, c.rel_tol, c.omega_max_init, c.max_doublings
        )
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo configuration and results
// ---------------------------------------------------------------------------

fn scheme_from_str(token: &str) -> PyResult<mc::CirScheme> {
    match token {
        "full-truncation" => Ok(mc::CirScheme::FullTruncation),
        "reflection" => Ok(mc::CirScheme::Reflection),
        other => Err(PyValueError::new_err(format!(
            "unknown scheme {other:?}; expected \"full-truncation\" or \"reflection\""
        ))),
    }
}

fn scheme_token(scheme: mc::CirScheme) -> &'static str {
    match scheme {
        mc::CirScheme::FullTruncation => "full-truncation",
        mc::CirScheme::Reflection => "reflection",
    }
}

/// Simulation configuration: path count, time resolution, seed, CIR
/// boundary scheme, and Jacobi clamp margin.
#[pyclass(frozen, skip_from_py_object, module = "shortvol_py")]
#[derive(Clone)]
pub struct McConfig {
    inner: mc::McConfig,
}

#[pymethods]
impl McConfig {
    #[new]
    #[pyo3(signature = (n_paths=100_000, steps_per_year=250, seed=0, scheme="full-truncation", clamp_eps=1e-8))]
    fn new(
        n_paths: usize,
        steps_per_year: u32,
        seed: u64,
        scheme: &str,
        clamp_eps: f64,
    ) -> PyResult<Self> {
        Ok(McConfig {
            inner: mc::McConfig {
                n_paths,
                steps_per_year,
                seed,
                scheme: scheme_from_str(scheme)?,
                clamp_eps,
            },
        })
    }

    #[getter]
    fn n_paths(&self) -> usize {
        self.inner.n_paths
    }

    #[getter]
    fn steps_per_year(&self) -> u32 {
        self.inner.steps_per_year
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn scheme(&self) -> &'static str {
        scheme_token(self.inner.scheme)
    }

    #[getter]
    fn clamp_eps(&self) -> f64 {
        self.inner.clamp_eps
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "McConfig(n_paths={}, steps_per_year={}, seed={}, scheme=\"{}\", clamp_eps={})",
            c.n_paths,
            c.steps_per_year,
            c.seed,
            scheme_token(c.scheme),
            c.clamp_eps
        )
    }
}

/// Terminal path data from a simulation run.  Estimators return
/// `(value, stderr)` tuples; the characteristic-function estimator adds a
/// heavy-tail flag.
#[pyclass(frozen, module = "shortvol_py")]
pub struct PathEnsemble {
    inner: mc::PathEnsemble,
}

#[pymethods]
impl PathEnsemble {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Fraction of steps where the boundary scheme intervened.
    #[getter]
    fn boundary_fraction(&self) -> f64 {
        self.inner.boundary_fraction
    }

    /// Steps where the CIR `c(·)` evaluation hit its floor.
    #[getter]
    fn c_clip_steps(&self) -> u64 {
        self.inner.c_clip_steps
    }

    /// Discounted call estimate `E[e^{−A_T}(S_T − K)⁺]` as `(value, stderr)`.
    fn call_price(&self, strike: f64) -> PyResult<(f64, f64)> {
        let est =
            mc::mc_price(&self.inner, |x| (x.exp() - strike).max(0.0)).map_err(to_py)?;
        Ok((est.value, est.stderr))
    }

    /// Discounted put estimate `E[e^{−A_T}(K − S_T)⁺]` as `(value, stderr)`.
    fn put_price(&self, strike: f64) -> PyResult<(f64, f64)> {
        let est =
            mc::mc_price(&self.inner, |x| (strike - x.exp()).max(0.0)).map_err(to_py)?;
        Ok((est.value, est.stderr))
    }

    /// Zero-coupon bond estimate `E[e^{−A_T}]` as `(value, stderr)`.
    fn discount_factor(&self) -> PyResult<(f64, f64)> {
        let est = mc::mc_price(&self.inner, |_| 1.0).map_err(to_py)?;
        Ok((est.value, est.stderr))
    }

    /// Discounted characteristic-function estimate
    /// `E[e^{−A_T + iω(X_T − x_t)}]` as `(value, stderr, heavy_tail)` —
    /// the Monte Carlo counterpart of `G(t, y; T, 1−iω, ω²/2 + iω/2)`.
    fn chf(&self, omega: Complex64, x_t: f64) -> PyResult<(Complex64, f64, bool)> {
        let est = mc::mc_chf(&self.inner, omega, x_t).map_err(to_py)?;
        Ok((est.value, est.stderr, est.heavy_tail))
    }
}

// ---------------------------------------------------------------------------
// Smile
// ---------------------------------------------------------------------------

/// A computed implied-volatility smile: the common bond/forward and the
/// per-point grids (aligned lists, input order).  `status[i]` is `"ok"` or
/// the failure message; failed points carry NaN in `implied_vol`.
#[pyclass(frozen, module = "shortvol_py")]
pub struct Smile {
    #[pyo3(get)]
    bond: f64,
    #[pyo3(get)]
    forward: f64,
    #[pyo3(get)]
    l: Vec<f64>,
    #[pyo3(get)]
    strike: Vec<f64>,
    #[pyo3(get)]
    call_price: Vec<f64>,
    #[pyo3(get)]
    implied_vol: Vec<f64>,
    #[pyo3(get)]
    status: Vec<String>,
}

impl Smile {
    fn from_result(result: vol::SmileResult) -> Self {
        let n = result.points.len();
        let mut smile = Smile {
            bond: result.bond,
            forward: result.forward,
            l: Vec::with_capacity(n),
            strike: Vec::with_capacity(n),
            call_price: Vec::with_capacity(n),
            implied_vol: Vec::with_capacity(n),
            status: Vec::with_capacity(n),
        };
        for p in result.points {
            smile.l.push(p.l);
            smile.strike.push(p.strike);
            smile.call_price.push(p.call_price);
            smile.implied_vol.push(p.implied_vol);
            smile.status.push(match p.status {
                vol::PointStatus::Ok => "ok".to_string(),
                vol::PointStatus::Failed(msg) => msg,
            });
        }
        smile
    }
}

#[pymethods]
impl Smile {
    fn __len__(&self) -> usize {
        self.l.len()
    }

    /// Number of grid points that priced and inverted successfully.
    #[getter]
    fn n_ok(&self) -> usize {
        self.status.iter().filter(|s| s.as_str() == "ok").count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Smile(n={}, n_ok={}, bond={}, forward={})",
            self.l.len(),
            self.n_ok(),
            self.bond,
            self.forward
        )
    }
}

// ---------------------------------------------------------------------------
// Module-level functions
// ---------------------------------------------------------------------------

/// Black-Scholes forward call price (undiscounted).
#[pyfunction]
fn bs_call_forward(forward: f64, strike: f64, tau: f64, sigma: f64) -> f64 {
    vol::bs_call_forward(forward, strike, tau, sigma)
}

/// Inverts the Black-Scholes forward price for the implied volatility.
#[pyfunction]
fn implied_vol(forward_price: f64, forward: f64, strike: f64, tau: f64) -> PyResult<f64> {
    vol::implied_vol(forward_price, forward, strike, tau).map_err(to_py)
}

fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Model>()?;
    m.add_class::<MarketState>()?;
    m.add_class::<ContourConfig>()?;
    m.add_class::<McConfig>()?;
    m.add_class::<PathEnsemble>()?;
    m.add_class::<Smile>()?;
    m.add_function(wrap_pyfunction!(bs_call_forward, m)?)?;
    m.add_function(wrap_pyfunction!(implied_vol, m)?)?;
    Ok(())
}

#[pymodule]
fn shortvol_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
