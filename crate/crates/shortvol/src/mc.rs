//! Monte Carlo oracle: Euler–Maruyama simulation of `(X, Y, ∫r dt, ∫c² dt)`
//! under the pricing measure, and of `(Z^T, Y)` under the T-forward measure
//! for the CIR driver.  Estimates from this module independently validate
//! the closed-form characteristic function and the Fourier pricer.
//!
//! Reproducibility contract: path `i` draws from a ChaCha stream keyed by
//! `(seed, pair index)`, so ensembles are bit-identical for any thread
//! count.  Antithetic variates are always on: paths `2i` and `2i+1` share
//! stream `i` with negated Gaussian increments (an odd final path runs
//! plain).  All reductions are fixed-order pairwise sums.

use crate::chf;
use crate::models::{CirParams, MarketState, Model};
use crate::{ComplexScalar, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Floor applied to the driver level inside `c(·)` for the CIR model, where
/// `c(y) = γ/√y` blows up at the origin.
const C_CLIP: f64 = 1e-10;

/// Boundary scheme for the CIR driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CirScheme {
    /// Negative excursions are kept in the state but every coefficient is
    /// evaluated at `max(y, 0)` (low-bias standard choice).
    #[default]
    FullTruncation,
    /// The state is reflected at the origin after each step.
    Reflection,
}

/// Simulation configuration.
#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub n_paths: usize,
    pub steps_per_year: u32,
    pub seed: u64,
    /// CIR boundary handling (ignored by the Jacobi driver).
    pub scheme: CirScheme,
    /// Jacobi state clamp margin: `Y` is kept in `[ε, 1−ε]`.
    pub clamp_eps: f64,
}

impl Default for McConfig {
    /// 10⁵ paths at 250 steps/year — desk-scale runtime with standard
    /// errors tight enough for 3σ acceptance bands.
    fn default() -> Self {
        McConfig {
            n_paths: 100_000,
            steps_per_year: 250,
            seed: 0,
            scheme: CirScheme::FullTruncation,
            clamp_eps: 1e-8,
        }
    }
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidParams("n_paths must be positive".into()));
        }
        if self.steps_per_year == 0 {
            return Err(Error::InvalidParams("steps_per_year must be positive".into()));
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.25) {
            return Err(Error::InvalidParams(format!(
                "clamp_eps must lie in (0, 0.25), got {}",
                self.clamp_eps
            )));
        }
        Ok(())
    }
}

/// Terminal path data: `X_T`, `Y_T`, `A_T = ∫ₜᵀ r(Y_s) ds`,
/// `C_T = ∫ₜᵀ c²(Y_s) ds` per path (left-point accumulators), plus the
/// config echo and boundary diagnostics.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub x_terminal: Vec<f64>,
    pub y_terminal: Vec<f64>,
    pub a_integral: Vec<f64>,
    pub c_squared_integral: Vec<f64>,
    pub config: McConfig,
    /// Fraction of steps where the boundary scheme intervened (CIR
    /// truncation/reflection, Jacobi clamp).
    pub boundary_fraction: f64,
    /// Steps where the CIR `c(·)` evaluation hit the `max(y, 1e-10)` floor.
    pub c_clip_steps: u64,
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.x_terminal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_terminal.is_empty()
    }
}

/// A scalar MC estimate with its standard error (computed over antithetic
/// pair means, which is what actually converges at the 1/√n rate).
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// A complex MC estimate; `stderr` combines both components,
/// `√(var(Re) + var(Im))/√n_pairs`.
#[derive(Debug, Clone, Copy)]
pub struct McChfEstimate {
    pub value: ComplexScalar,
    pub stderr: f64,
    /// True when the top 1% of samples by magnitude carries more than 20%
    /// of the total magnitude — the estimate is tail-dominated and its
    /// stderr should not be trusted.
    pub heavy_tail: bool,
}

/// T-forward-measure terminal samples for the CIR driver.
#[derive(Debug, Clone)]
pub struct TForwardEnsemble {
    /// Terminal forward prices `F_T^T = e^{Z_T^T}` (equivalently `S_T`).
    pub forward_terminal: Vec<f64>,
    pub y_terminal: Vec<f64>,
    pub config: McConfig,
}

// ---------------------------------------------------------------------------
// Steppers
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
struct PathState {
    x: f64,
    y: f64,
    a: f64,
    c: f64,
}

#[derive(Default, Clone, Copy)]
struct StepCounts {
    boundary: u64,
    clipped: u64,
}

/// One Euler step of a model: advances `st` using the Gaussian shocks
/// `(dw, db)` (already scaled decisions are left to the stepper);
/// `tau_left` is the time remaining to maturity at the step's left point.
trait Stepper: Sync {
    fn step(&self, st: &mut PathState, dt: f64, tau_left: f64, dw: f64, db: f64, counts: &mut StepCounts);

    /// Clamps an initial state into the scheme's invariant region.
    fn sanitize(&self, y: f64) -> f64 {
        y
    }
}

struct CirStepper {
    kappa: f64,
    theta: f64,
    delta: f64,
    gamma: f64,
    rho: f64,
    rho_bar: f64,
    scheme: CirScheme,
}

impl CirStepper {
    fn new(p: &CirParams, scheme: CirScheme) -> Self {
        CirStepper {
            kappa: p.kappa(),
            theta: p.theta(),
            delta: p.delta(),
            gamma: p.gamma(),
            rho: p.rho(),
            rho_bar: (1.0 - p.rho() * p.rho()).max(0.0).sqrt(),
            scheme,
        }
    }

    /// Coefficient-side state and the boundary/clip bookkeeping shared by
    /// both measures.
    fn effective_y(&self, y: f64, counts: &mut StepCounts) -> (f64, f64) {
        let y_plus = if y < 0.0 {
            counts.boundary += 1;
            0.0
        } else {
            y
        };
        let y_c = if y_plus < C_CLIP {
            counts.clipped += 1;
            C_CLIP
        } else {
            y_plus
        };
        (y_plus, y_c)
    }

    fn advance_y(&self, y: f64, y_plus: f64, dt: f64, dw: f64, extra_drift: f64) -> f64 {
        let drift = self.kappa * (self.theta - y_plus) + extra_drift;
        let next = match self.scheme {
            CirScheme::FullTruncation => y + drift * dt + self.delta * y_plus.sqrt() * dw,
            CirScheme::Reflection => (y_plus + drift * dt + self.delta * y_plus.sqrt() * dw).abs(),
        };
        next
    }
}

impl Stepper for CirStepper {
    fn step(&self, st: &mut PathState, dt: f64, _tau_left: f64, dw: f64, db: f64, counts: &mut StepCounts) {
        let (y_plus, y_c) = self.effective_y(st.y, counts);
        let r = y_plus;
        let c = self.gamma / y_c.sqrt();
        let c_x = tame(c, dt);
        st.a += r * dt;
        st.c += c * c * dt;
        st.x += (r - 0.5 * c_x * c_x) * dt + c_x * (self.rho * dw + self.rho_bar * db);
        st.y = self.advance_y(st.y, y_plus, dt, dw, 0.0);
    }

    fn sanitize(&self, y: f64) -> f64 {
        y.max(0.0)
    }
}

/// Tames an exploding diffusion coefficient: caps the per-step load so a
/// single step cannot move a log-price by more than ~1 standard unit.
/// `c(y) = γ/√y` is unbounded at the CIR origin; without the cap a single
/// truncated step (`y⁺ = 0`, `c ≈ γ·10⁵`) multiplies the path's forward by
/// `e^{−c²Δt/2} ≈ 0`, which annihilates sample mass the estimator can only
/// recover through astronomically rare draws.  The cap grows like `Δt^{−1/2}`,
/// so the tamed scheme converges to the same SDE as the plain one.
fn tame(c: f64, dt: f64) -> f64 {
    c.min(1.0 / dt.sqrt())
}

struct JacobiStepper {
    kappa: f64,
    theta: f64,
    delta: f64,
    gamma: f64,
    eta: f64,
    rho: f64,
    rho_bar: f64,
    eps: f64,
}

impl Stepper for JacobiStepper {
    fn step(&self, st: &mut PathState, dt: f64, _tau_left: f64, dw: f64, db: f64, counts: &mut StepCounts) {
        let y = st.y;
        let r = self.eta * y / (1.0 - y);
        let c2 = self.gamma * self.gamma * (1.0 - y) / y;
        let c_x = tame(c2.sqrt(), dt);
        st.a += r * dt;
        st.c += c2 * dt;
        st.x += (r - 0.5 * c_x * c_x) * dt + c_x * (self.rho * dw + self.rho_bar * db);
        let next = y + (self.kappa - self.theta * y) * dt + self.delta * (y * (1.0 - y)).sqrt() * dw;
        if next < self.eps || next > 1.0 - self.eps {
            counts.boundary += 1;
            st.y = next.clamp(self.eps, 1.0 - self.eps);
        } else {
            st.y = next;
        }
    }

    fn sanitize(&self, y: f64) -> f64 {
        y.clamp(self.eps, 1.0 - self.eps)
    }
}

/// T-forward CIR: `dZ = −½(a²Q² + c² + 2ρaQc)dt + (aQ + ρc)dŴ + ρ̄c dB̂`,
/// `dY = (κ(θ−Y) − a²(Y)Q)dt + a(Y)dŴ`, with `Q = Q(s; T)` from the bond
/// exponent evaluated at the step's left point.  `st.x` carries `Z`.
struct CirTForwardStepper {
    inner: CirStepper,
    zeta: f64,
}

impl Stepper for CirTForwardStepper {
    fn step(&self, st: &mut PathState, dt: f64, tau_left: f64, dw: f64, db: f64, counts: &mut StepCounts) {
        let p = &self.inner;
        let (y_plus, y_c) = p.effective_y(st.y, counts);
        let q = cir_forward_q(p.kappa, self.zeta, tau_left);
        let a_diff = p.delta * y_plus.sqrt();
        let c = tame(p.gamma / y_c.sqrt(), dt);
        let load_w = a_diff * q + p.rho * c;
        let load_b = p.rho_bar * c;
        st.x += -0.5 * (load_w * load_w + load_b * load_b) * dt + load_w * dw + load_b * db;
        st.y = p.advance_y(st.y, y_plus, dt, dw, -a_diff * a_diff * q);
    }

    fn sanitize(&self, y: f64) -> f64 {
        y.max(0.0)
    }
}

/// The bond-exponent slope `Q(s; T)` of the CIR zero-coupon bond
/// `B = exp(−P − Q·y)`, as a function of the remaining tenor `τ = T − s`.
/// `Q(τ=0) = 0`: at zero tenor the forward dynamics reduce to the pricing
/// measure.
pub(crate) fn cir_forward_q(kappa: f64, zeta: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let e = (zeta * tau).exp_m1();
    2.0 * e / ((kappa + zeta) * e + 2.0 * zeta)
}

// ---------------------------------------------------------------------------
// Ensemble generation
// ---------------------------------------------------------------------------

struct GroupOutcome {
    first: PathState,
    second: Option<PathState>,
    counts: StepCounts,
}

/// Runs all path groups (antithetic pairs plus a possible trailing orphan)
/// in parallel, each from its own ChaCha stream.
fn run_groups<S: Stepper>(
    stepper: &S,
    x0: f64,
    y0: f64,
    tau: f64,
    config: &McConfig,
) -> (Vec<PathState>, StepCounts) {
    let n_steps = ((tau * config.steps_per_year as f64).ceil() as usize).max(1);
    let dt = tau / n_steps as f64;
    let sqrt_dt = dt.sqrt();
    let n_groups = config.n_paths.div_ceil(2);
    let y0 = stepper.sanitize(y0);
    let outcomes: Vec<GroupOutcome> = (0..n_groups)
        .into_par_iter()
        .map(|g| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(g as u64);
            let paired = 2 * g + 1 < config.n_paths;
            let init = PathState { x: x0, y: y0, a: 0.0, c: 0.0 };
            let mut plus = init;
            let mut minus = init;
            let mut counts = StepCounts::default();
            for k in 0..n_steps {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let (dw, db) = (sqrt_dt * z1, sqrt_dt * z2);
                let tau_left = tau - k as f64 * dt;
                stepper.step(&mut plus, dt, tau_left, dw, db, &mut counts);
                if paired {
                    stepper.step(&mut minus, dt, tau_left, -dw, -db, &mut counts);
                }
            }
            GroupOutcome { first: plus, second: paired.then_some(minus), counts }
        })
        .collect();

    let mut paths = Vec::with_capacity(config.n_paths);
    let mut counts = StepCounts::default();
    for o in outcomes {
        paths.push(o.first);
        if let Some(second) = o.second {
            paths.push(second);
        }
        counts.boundary += o.counts.boundary;
        counts.clipped += o.counts.clipped;
    }
    (paths, counts)
}

/// Simulates `(X, Y, A, C)` to `maturity` under the pricing measure.
///
/// Output is deterministic for a fixed `(seed, config, model, state)`
/// regardless of thread count.
pub fn simulate(model: &Model, state: &MarketState, maturity: f64, config: &McConfig) -> Result<PathEnsemble> {
    config.validate()?;
    model.validate_state(state)?;
    if !(maturity > state.t) {
        return Err(Error::InvalidParams(format!(
            "maturity {maturity} must exceed valuation time {}",
            state.t
        )));
    }
    let tau = maturity - state.t;
    let (paths, counts) = match model {
        Model::Cir(p) => {
            let stepper = CirStepper::new(p, config.scheme);
            run_groups(&stepper, state.x, state.y, tau, config)
        }
        Model::Jacobi(p) => {
            let stepper = JacobiStepper {
                kappa: p.kappa(),
                theta: p.theta(),
                delta: p.delta(),
                gamma: p.gamma(),
                eta: p.eta(),
                rho: p.rho(),
                rho_bar: (1.0 - p.rho() * p.rho()).max(0.0).sqrt(),
                eps: config.clamp_eps,
            };
            run_groups(&stepper, state.x, state.y, tau, config)
        }
    };
    let n_steps = ((tau * config.steps_per_year as f64).ceil() as usize).max(1);
    let total_steps = (n_steps * config.n_paths) as f64;
    let report_y = |y: f64| match model {
        Model::Cir(_) => y.max(0.0),
        Model::Jacobi(_) => y,
    };
    Ok(PathEnsemble {
        x_terminal: paths.iter().map(|p| p.x).collect(),
        y_terminal: paths.iter().map(|p| report_y(p.y)).collect(),
        a_integral: paths.iter().map(|p| p.a).collect(),
        c_squared_integral: paths.iter().map(|p| p.c).collect(),
        config: *config,
        boundary_fraction: counts.boundary as f64 / total_steps,
        c_clip_steps: counts.clipped,
    })
}

/// Simulates the T-forward pair `(Z^T, Y)` for the CIR driver and returns
/// terminal forwards `F_T^T = e^{Z_T}` (plus terminal `Y` for covariation
/// diagnostics).  `Z` starts at `ln F_t^T = x_t − ln B_t^T`.
pub fn simulate_t_forward_cir(
    params: &CirParams,
    state: &MarketState,
    maturity: f64,
    config: &McConfig,
) -> Result<TForwardEnsemble> {
    config.validate()?;
    let model = Model::Cir(*params);
    model.validate_state(state)?;
    if !(maturity > state.t) {
        return Err(Error::InvalidParams(format!(
            "maturity {maturity} must exceed valuation time {}",
            state.t
        )));
    }
    let bond = chf::bond_cir(params, state.t, state.y, maturity)?;
    let z0 = state.x - bond.ln();
    let inner = CirStepper::new(params, config.scheme);
    let zeta = (params.kappa() * params.kappa() + 2.0 * params.delta() * params.delta()).sqrt();
    let stepper = CirTForwardStepper { inner, zeta };
    let (paths, _counts) = run_groups(&stepper, z0, state.y, maturity - state.t, config);
    Ok(TForwardEnsemble {
        forward_terminal: paths.iter().map(|p| p.x.exp()).collect(),
        y_terminal: paths.iter().map(|p| p.y.max(0.0)).collect(),
        config: *config,
    })
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

/// Fixed-order pairwise summation (deterministic and accurate).
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Collapses raw per-path samples into antithetic group means: pairs
/// `(2i, 2i+1)` average, an odd final sample stands alone.
fn group_means(samples: &[f64]) -> Vec<f64> {
    let mut means = Vec::with_capacity(samples.len().div_ceil(2));
    let mut chunks = samples.chunks_exact(2);
    for pair in &mut chunks {
        means.push(0.5 * (pair[0] + pair[1]));
    }
    if let [last] = chunks.remainder() {
        means.push(*last);
    }
    means
}

fn mean_and_stderr(means: &[f64]) -> (f64, f64) {
    let n = means.len();
    let mean = pairwise_sum(means) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = means.iter().map(|m| (m - mean) * (m - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Estimates `E[e^{−A_T}·payoff(X_T)]` with its standard error.
pub fn mc_price(ensemble: &PathEnsemble, payoff: impl Fn(f64) -> f64) -> Result<McEstimate> {
    if ensemble.is_empty() {
        return Err(Error::InvalidParams("empty path ensemble".into()));
    }
    let samples: Vec<f64> = ensemble
        .x_terminal
        .iter()
        .zip(&ensemble.a_integral)
        .map(|(&x, &a)| (-a).exp() * payoff(x))
        .collect();
    let means = group_means(&samples);
    let (value, stderr) = mean_and_stderr(&means);
    Ok(McEstimate { value, stderr })
}

/// Estimates `E[F_T^T]` from a T-forward ensemble with its standard error;
/// the martingale property makes the current forward `S_t/B_t^T` the exact
/// reference value.
pub fn t_forward_mean(ensemble: &TForwardEnsemble) -> Result<McEstimate> {
    if ensemble.forward_terminal.is_empty() {
        return Err(Error::InvalidParams("empty path ensemble".into()));
    }
    let means = group_means(&ensemble.forward_terminal);
    let (value, stderr) = mean_and_stderr(&means);
    Ok(McEstimate { value, stderr })
}

/// Estimates the discounted characteristic function
/// `E[e^{−A_T + iω(X_T − x_t)}]` — the MC counterpart of
/// `G(t, y; T, 1−iω, ω²/2 + iω/2)`.
pub fn mc_chf(ensemble: &PathEnsemble, omega: ComplexScalar, x_t: f64) -> Result<McChfEstimate> {
    if ensemble.is_empty() {
        return Err(Error::InvalidParams("empty path ensemble".into()));
    }
    let i = num_complex::Complex64::i();
    let samples: Vec<ComplexScalar> = ensemble
        .x_terminal
        .iter()
        .zip(&ensemble.a_integral)
        .map(|(&x, &a)| (i * omega * (x - x_t) - a).exp())
        .collect();
    let re: Vec<f64> = samples.iter().map(|s| s.re).collect();
    let im: Vec<f64> = samples.iter().map(|s| s.im).collect();
    let re_means = group_means(&re);
    let im_means = group_means(&im);
    let (re_mean, re_se) = mean_and_stderr(&re_means);
    let (im_mean, im_se) = mean_and_stderr(&im_means);

    // Tail-concentration diagnostic on raw sample magnitudes.
    let mut magnitudes: Vec<f64> = samples.iter().map(|s| s.norm()).collect();
    magnitudes.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite magnitudes"));
    let top = magnitudes.len().div_ceil(100);
    let top_mass = pairwise_sum(&magnitudes[..top]);
    let total_mass = pairwise_sum(&magnitudes);
    let heavy_tail = total_mass > 0.0 && top_mass > 0.2 * total_mass;

    Ok(McChfEstimate {
        value: ComplexScalar::new(re_mean, im_mean),
        stderr: (re_se * re_se + im_se * im_se).sqrt(),
        heavy_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::JacobiParams;
    use crate::pricing::{price_call, ContourConfig};
    use approx::assert_relative_eq;

    fn cir_model(rho: f64) -> Model {
        Model::Cir(CirParams::reference(rho))
    }

    fn state(y: f64) -> MarketState {
        MarketState::new(0.0, 100.0f64.ln(), y).unwrap()
    }

    fn quick_config(n_paths: usize, seed: u64) -> McConfig {
        McConfig { n_paths, seed, ..McConfig::default() }
    }

    #[test]
    fn rejects_bad_config() {
        let bad_paths = McConfig { n_paths: 0, ..McConfig::default() };
        assert!(simulate(&cir_model(0.0), &state(0.05), 1.0, &bad_paths).is_err());
        let bad_steps = McConfig { steps_per_year: 0, ..McConfig::default() };
        assert!(simulate(&cir_model(0.0), &state(0.05), 1.0, &bad_steps).is_err());
    }

    #[test]
    fn tiny_delta_cir_follows_the_ode() {
        // δ ≈ 0 degenerates the driver to dY = κ(θ−Y)dt; the Euler chain
        // must track the ODE solution θ + (y₀−θ)e^{−κτ} to O(Δt).
        let params = CirParams::new(0.5, 0.05, 1e-12, 0.2 * 0.05f64.sqrt(), 0.0).unwrap();
        let ensemble = simulate(
            &Model::Cir(params),
            &state(0.1),
            1.0,
            &quick_config(2, 7),
        )
        .unwrap();
        let ode = 0.05 + (0.1 - 0.05) * (-0.5f64).exp();
        assert!(
            (ensemble.y_terminal[0] - ode).abs() < 1e-4,
            "Euler endpoint {} vs ODE {}",
            ensemble.y_terminal[0],
            ode
        );
    }

    #[test]
    fn single_path_is_reproducible() {
        let config = quick_config(1, 99);
        let e1 = simulate(&cir_model(0.5), &state(0.05), 0.5, &config).unwrap();
        let e2 = simulate(&cir_model(0.5), &state(0.05), 0.5, &config).unwrap();
        assert_eq!(e1.x_terminal, e2.x_terminal);
        assert_eq!(e1.y_terminal, e2.y_terminal);
        assert_eq!(e1.a_integral, e2.a_integral);
    }

    #[test]
    fn martingale_self_test() {
        // E[e^{X_T − x − A_T}] = 1: discounted asset is a martingale.
        let ensemble = simulate(&cir_model(0.5), &state(0.05), 0.25, &quick_config(40_000, 3)).unwrap();
        let x0 = 100.0f64.ln();
        let est = mc_price(&ensemble, |x| (x - x0).exp()).unwrap();
        assert!(
            (est.value - 1.0).abs() < 3.0 * est.stderr,
            "martingale violated: {} ± {}",
            est.value,
            est.stderr
        );
    }

    #[test]
    fn zero_payoff_estimates_zero() {
        let ensemble = simulate(&cir_model(0.0), &state(0.05), 0.25, &quick_config(100, 1)).unwrap();
        let est = mc_price(&ensemble, |_| 0.0).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn unit_payoff_matches_cir_bond() {
        let params = CirParams::reference(0.0);
        let ensemble = simulate(&Model::Cir(params), &state(0.05), 1.0, &quick_config(40_000, 11)).unwrap();
        let est = mc_price(&ensemble, |_| 1.0).unwrap();
        let bond = chf::bond_cir(&params, 0.0, 0.05, 1.0).unwrap();
        assert!(
            (est.value - bond).abs() < 3.0 * est.stderr,
            "bond MC {} ± {} vs closed form {}",
            est.value,
            est.stderr,
            bond
        );
    }

    #[test]
    fn chf_at_zero_reduces_to_bond_estimate() {
        let ensemble = simulate(&cir_model(0.5), &state(0.05), 0.5, &quick_config(5_000, 2)).unwrap();
        let price = mc_price(&ensemble, |_| 1.0).unwrap();
        let chf_est = mc_chf(&ensemble, ComplexScalar::new(0.0, 0.0), 100.0f64.ln()).unwrap();
        assert_eq!(chf_est.value.re, price.value);
        assert_eq!(chf_est.value.im, 0.0);
    }

    #[test]
    fn chf_matches_closed_form_cir() {
        let omega = ComplexScalar::new(0.5, -1.5);
        let model = cir_model(0.5);
        let ensemble = simulate(&model, &state(0.05), 0.25, &quick_config(40_000, 17)).unwrap();
        let est = mc_chf(&ensemble, omega, 100.0f64.ln()).unwrap();
        let args = chf::GArgs::for_pricing(0.0, 0.25, 0.05, omega).unwrap();
        let exact = chf::g(&model, &args).unwrap();
        let err = (est.value - exact).norm();
        assert!(
            err < 3.0 * est.stderr,
            "chf mismatch: |{} − {}| = {err} vs 3σ = {}",
            est.value,
            exact,
            3.0 * est.stderr
        );
    }

    #[test]
    fn chf_matches_closed_form_jacobi() {
        let omega = ComplexScalar::new(0.5, -1.5);
        let model = Model::Jacobi(JacobiParams::reference(0.5));
        let ensemble = simulate(&model, &state(0.5), 0.5, &quick_config(40_000, 19)).unwrap();
        let est = mc_chf(&ensemble, omega, 100.0f64.ln()).unwrap();
        let args = chf::GArgs::for_pricing(0.0, 0.5, 0.5, omega).unwrap();
        let exact = chf::g(&model, &args).unwrap();
        let err = (est.value - exact).norm();
        assert!(
            err < 3.0 * est.stderr,
            "chf mismatch: |{} − {}| = {err} vs 3σ = {}",
            est.value,
            exact,
            3.0 * est.stderr
        );
    }

    #[test]
    fn call_price_matches_fourier() {
        let model = cir_model(0.5);
        let ensemble = simulate(&model, &state(0.05), 0.25, &quick_config(60_000, 23)).unwrap();
        let strike = 100.0;
        let est = mc_price(&ensemble, |x| (x.exp() - strike).max(0.0)).unwrap();
        let fourier = price_call(&model, &state(0.05), 0.25, strike, &ContourConfig::default()).unwrap();
        assert!(
            (est.value - fourier).abs() < 3.0 * est.stderr,
            "MC {} ± {} vs Fourier {}",
            est.value,
            est.stderr,
            fourier
        );
    }

    #[test]
    fn stderr_shrinks_like_sqrt_n() {
        let model = cir_model(0.0);
        let payoff = |x: f64| (x.exp() - 100.0).max(0.0);
        let small = simulate(&model, &state(0.05), 0.25, &quick_config(8_000, 5)).unwrap();
        let large = simulate(&model, &state(0.05), 0.25, &quick_config(16_000, 5)).unwrap();
        let se_small = mc_price(&small, payoff).unwrap().stderr;
        let se_large = mc_price(&large, payoff).unwrap().stderr;
        let ratio = se_small / se_large;
        let expect = std::f64::consts::SQRT_2;
        assert!(
            ratio > 0.8 * expect && ratio < 1.2 * expect,
            "stderr ratio {ratio} not within 20% of √2"
        );
    }

    #[test]
    fn independent_seeds_agree() {
        let model = cir_model(0.5);
        let payoff = |x: f64| (x.exp() - 100.0).max(0.0);
        let e1 = simulate(&model, &state(0.05), 0.25, &quick_config(20_000, 101)).unwrap();
        let e2 = simulate(&model, &state(0.05), 0.25, &quick_config(20_000, 202)).unwrap();
        let p1 = mc_price(&e1, payoff).unwrap();
        let p2 = mc_price(&e2, payoff).unwrap();
        let band = 4.0 * (p1.stderr * p1.stderr + p2.stderr * p2.stderr).sqrt();
        assert!(
            (p1.value - p2.value).abs() < band,
            "seed estimates {} vs {} differ beyond {band}",
            p1.value,
            p2.value
        );
    }

    #[test]
    fn truncation_fraction_is_small() {
        let ensemble = simulate(&cir_model(0.0), &state(0.05), 1.0, &quick_config(10_000, 29)).unwrap();
        assert!(
            ensemble.boundary_fraction < 0.05,
            "truncation fraction {}",
            ensemble.boundary_fraction
        );
    }

    #[test]
    fn reflection_scheme_stays_nonnegative_and_agrees_roughly() {
        let config = McConfig { scheme: CirScheme::Reflection, ..quick_config(20_000, 31) };
        let ensemble = simulate(&cir_model(0.0), &state(0.05), 1.0, &config).unwrap();
        assert!(ensemble.y_terminal.iter().all(|&y| y >= 0.0));
        let bond_mc = mc_price(&ensemble, |_| 1.0).unwrap();
        let bond = chf::bond_cir(&CirParams::reference(0.0), 0.0, 0.05, 1.0).unwrap();
        assert!(
            (bond_mc.value - bond).abs() < 4.0 * bond_mc.stderr,
            "reflection bond {} ± {} vs {}",
            bond_mc.value,
            bond_mc.stderr,
            bond
        );
    }

    #[test]
    fn jacobi_paths_respect_bounds() {
        let model = Model::Jacobi(JacobiParams::reference(0.5));
        let ensemble = simulate(&model, &state(0.5), 1.0, &quick_config(5_000, 37)).unwrap();
        let eps = ensemble.config.clamp_eps;
        assert!(ensemble
            .y_terminal
            .iter()
            .all(|&y| (eps..=1.0 - eps).contains(&y)));
        assert!(ensemble.a_integral.iter().all(|&a| a >= 0.0));
        assert!(ensemble.boundary_fraction < 0.05);
    }

    #[test]
    fn t_forward_mean_is_the_current_forward() {
        // ρ = 1 is the reference correlation at which the estimator has
        // finite variance (for ρ < 1, E[e^{−2A}S²] diverges at these
        // parameters and the stderr is not meaningful).
        let params = CirParams::reference(1.0);
        let st = state(0.05);
        let ensemble = simulate_t_forward_cir(&params, &st, 1.0, &quick_config(40_000, 41)).unwrap();
        let est = t_forward_mean(&ensemble).unwrap();
        let bond = chf::bond_cir(&params, 0.0, 0.05, 1.0).unwrap();
        let forward = 100.0 / bond;
        assert!(
            (est.value - forward).abs() < 3.0 * est.stderr,
            "forward martingale: {} ± {} vs {forward}",
            est.value,
            est.stderr
        );
    }

    #[test]
    fn t_forward_single_step_covariation() {
        // Over one Euler step at ρ=0, cov(ΔZ, ΔY) = a²(y₀)·Q(t;T)·Δt.
        let params = CirParams::reference(0.0);
        let st = state(0.05);
        let maturity = 1.0 / 250.0;
        let config = McConfig { n_paths: 200_000, steps_per_year: 250, seed: 43, ..McConfig::default() };
        let ensemble = simulate_t_forward_cir(&params, &st, maturity, &config).unwrap();
        let bond = chf::bond_cir(&params, 0.0, 0.05, maturity).unwrap();
        let z0 = (100.0 / bond).ln();
        let dz: Vec<f64> = ensemble.forward_terminal.iter().map(|f| f.ln() - z0).collect();
        let dy: Vec<f64> = ensemble.y_terminal.iter().map(|y| y - 0.05).collect();
        let n = dz.len() as f64;
        let mz = pairwise_sum(&dz) / n;
        let my = pairwise_sum(&dy) / n;
        let cross: Vec<f64> = dz.iter().zip(&dy).map(|(a, b)| (a - mz) * (b - my)).collect();
        let cov = pairwise_sum(&cross) / (n - 1.0);
        let zeta = (params.kappa() * params.kappa() + 2.0 * params.delta() * params.delta()).sqrt();
        let q = cir_forward_q(params.kappa(), zeta, maturity);
        let expect = params.delta() * params.delta() * 0.05 * q * maturity;
        // Sample-covariance noise: se ≈ √((var·var + cov²)/n).
        let vz = pairwise_sum(&dz.iter().map(|a| (a - mz) * (a - mz)).collect::<Vec<_>>()) / (n - 1.0);
        let vy = pairwise_sum(&dy.iter().map(|a| (a - my) * (a - my)).collect::<Vec<_>>()) / (n - 1.0);
        let se = ((vz * vy + cov * cov) / n).sqrt();
        assert!(
            (cov - expect).abs() < 4.0 * se,
            "covariation {cov} vs {expect} (4σ = {})",
            4.0 * se
        );
    }

    #[test]
    fn forward_q_vanishes_at_zero_tenor_and_matches_bond_slope() {
        let params = CirParams::reference(0.0);
        let zeta = (params.kappa() * params.kappa() + 2.0 * params.delta() * params.delta()).sqrt();
        assert_eq!(cir_forward_q(params.kappa(), zeta, 0.0), 0.0);
        // B = e^{−P−Qy} ⇒ ln B(y₂) − ln B(y₁) = −Q·(y₂ − y₁).
        let tau = 0.7;
        let q = cir_forward_q(params.kappa(), zeta, tau);
        let b1 = chf::bond_cir(&params, 0.0, 0.04, tau).unwrap();
        let b2 = chf::bond_cir(&params, 0.0, 0.09, tau).unwrap();
        assert_relative_eq!((b1.ln() - b2.ln()) / 0.05, q, max_relative = 1e-12);
    }

    #[test]
    fn heavy_tail_flag_off_at_benign_point() {
        let ensemble = simulate(&cir_model(0.5), &state(0.05), 0.25, &quick_config(10_000, 47)).unwrap();
        let est = mc_chf(&ensemble, ComplexScalar::new(0.5, 0.0), 100.0f64.ln()).unwrap();
        assert!(!est.heavy_tail);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|k| (k as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert_relative_eq!(pairwise_sum(&v), naive, max_relative = 1e-12);
    }
}
