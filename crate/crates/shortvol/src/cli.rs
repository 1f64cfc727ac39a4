//! Command-line front end.
//!
//! Four subcommands cover the pricing workflow end to end:
//!
//! * `price` — one European call: price, bond, forward, implied vol.
//! * `smile` — implied-vol smile over a log-moneyness grid, as CSV.
//! * `bond` — zero-coupon bond prices over a tenor grid, as CSV.
//! * `mc-check` — Monte Carlo cross-validation of the Fourier engine.
//!
//! Configuration is layered: built-in defaults (the reference parameter
//! set), then a flat `key = value` config file (`--config`), then explicit
//! flags.  `--dump-config` prints the effective configuration in the same
//! format, so a dumped file reproduces the run exactly.
//!
//! Exit codes: `0` success, `1` validation failure (an `mc-check` z-score
//! at or beyond 3), `2` usage or configuration error, `3` numerical
//! failure.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::chf;
use crate::mc::{self, CirScheme, McConfig};
use crate::models::{CirParams, JacobiParams, MarketState, Model};
use crate::pricing::{self, ContourConfig};
use crate::vol::{self, SmileRequest};
use crate::{Error, Result};

/// Fixed CSV header for `price` and `smile` output.
pub const CSV_HEADER: &str = "L,K,price,implied_vol,status";

/// z-score threshold for `mc-check`: any leg at or beyond this fails.
pub const Z_THRESHOLD: f64 = 3.0;

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Cir,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeKind {
    FullTruncation,
    Reflection,
}

#[derive(Parser, Debug)]
#[command(
    name = "shortvol",
    version,
    about = "Fourier pricing of European options under short-rate-dependent volatility",
    long_about = "Fourier pricing of European options whose volatility is driven by the short-rate \
                  factor (CIR or Jacobi driver), with implied-vol extraction and a Monte Carlo \
                  cross-validation oracle."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Price a single European call; reports price, bond, forward, implied vol.
    Price {
        #[command(flatten)]
        common: Box<CommonArgs>,
        /// Option maturity T in years.
        #[arg(long)]
        maturity: f64,
        /// Strike K (must be positive).
        #[arg(long)]
        strike: f64,
    },
    /// Emit an implied-vol smile over a log-moneyness grid as CSV.
    Smile {
        #[command(flatten)]
        common: Box<CommonArgs>,
        /// Option maturity T in years.
        #[arg(long)]
        maturity: f64,
        /// Lower log-moneyness bound L = ln(K/F).
        #[arg(long, default_value_t = -0.3, allow_negative_numbers = true)]
        l_min: f64,
        /// Upper log-moneyness bound.
        #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
        l_max: f64,
        /// Number of grid points (endpoints included).
        #[arg(long, default_value_t = 31)]
        n_points: usize,
    },
    /// Emit zero-coupon bond prices over a tenor grid as CSV.
    Bond {
        #[command(flatten)]
        common: Box<CommonArgs>,
        /// Single tenor T (years); excludes the grid flags.
        #[arg(long, conflicts_with_all = ["t_min", "t_max", "n_points"])]
        maturity: Option<f64>,
        /// Tenor grid start.
        #[arg(long)]
        t_min: Option<f64>,
        /// Tenor grid end.
        #[arg(long)]
        t_max: Option<f64>,
        /// Tenor grid size.
        #[arg(long)]
        n_points: Option<usize>,
    },
    /// Cross-validate Fourier prices and the characteristic function against
    /// Monte Carlo; exits 1 if any leg's |z| reaches 3.
    McCheck {
        #[command(flatten)]
        common: Box<CommonArgs>,
        /// Option maturity T in years.
        #[arg(long, default_value_t = 0.25)]
        maturity: f64,
        /// Strike K for the price leg.
        #[arg(long, default_value_t = 100.0)]
        strike: f64,
        /// Multiply θ in the analytic reference legs by this factor.  Values
        /// other than 1 deliberately desynchronize the legs — a detection-power
        /// self-test of the check itself.
        #[arg(long, default_value_t = 1.0)]
        perturb_theta: f64,
    },
}

/// Flags shared by every subcommand.  Each is optional; unset fields fall
/// back to the config file, then to the built-in reference defaults.
#[derive(Args, Debug, Clone, Default)]
struct CommonArgs {
    /// Driver model.
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Flat `key = value` configuration file; flags override file values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Mean-reversion speed κ.
    #[arg(long)]
    kappa: Option<f64>,
    /// Mean-reversion level θ.
    #[arg(long)]
    theta: Option<f64>,
    /// Driver volatility δ.
    #[arg(long)]
    delta: Option<f64>,
    /// Asset volatility scale γ.
    #[arg(long)]
    gamma: Option<f64>,
    /// Asset–driver correlation ρ ∈ [−1, 1].
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    /// Short-rate scale η (Jacobi model only).
    #[arg(long)]
    eta: Option<f64>,
    /// Valuation time t.
    #[arg(long)]
    t: Option<f64>,
    /// Initial spot S₀ (alternative to --x0).
    #[arg(long, conflicts_with = "x0")]
    s0: Option<f64>,
    /// Initial log-spot X₀.
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    /// Initial driver level Y₀ (defaults to θ).
    #[arg(long)]
    y0: Option<f64>,
    /// Contour imaginary offset ω_i (calls need ω_i < −1).
    #[arg(long, allow_negative_numbers = true)]
    omega_i: Option<f64>,
    /// Quadrature absolute tolerance.
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Quadrature relative tolerance.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Initial half-line truncation Ω of the contour integral.
    #[arg(long)]
    omega_max_init: Option<f64>,
    /// Maximum quadrature domain doublings.
    #[arg(long)]
    max_doublings: Option<u32>,
    /// Monte Carlo path count.
    #[arg(long)]
    n_paths: Option<usize>,
    /// Monte Carlo time steps per year.
    #[arg(long)]
    steps_per_year: Option<u32>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// CIR boundary scheme.
    #[arg(long, value_enum)]
    scheme: Option<SchemeKind>,
    /// Jacobi clamp margin ε (state kept in [ε, 1−ε]).
    #[arg(long)]
    clamp_eps: Option<f64>,
    /// Write CSV/report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Print the effective configuration and exit without running.
    #[arg(long)]
    dump_config: bool,
}

// ---------------------------------------------------------------------------
// Configuration: raw (partial) and resolved forms
// ---------------------------------------------------------------------------

/// A partially specified configuration, as read from one source (file or
/// flags).  `None` means "not given here".
#[derive(Debug, Clone, Default)]
struct RawConfig {
    model: Option<ModelKind>,
    kappa: Option<f64>,
    theta: Option<f64>,
    delta: Option<f64>,
    gamma: Option<f64>,
    rho: Option<f64>,
    eta: Option<f64>,
    t: Option<f64>,
    s0: Option<f64>,
    x0: Option<f64>,
    y0: Option<f64>,
    omega_i: Option<f64>,
    abs_tol: Option<f64>,
    rel_tol: Option<f64>,
    omega_max_init: Option<f64>,
    max_doublings: Option<u32>,
    n_paths: Option<usize>,
    steps_per_year: Option<u32>,
    seed: Option<u64>,
    scheme: Option<SchemeKind>,
    clamp_eps: Option<f64>,
    out: Option<PathBuf>,
}

/// A fully resolved, validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Model,
    pub state: MarketState,
    pub contour: ContourConfig,
    pub mc: McConfig,
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    fn to_raw(&self) -> RawConfig {
        RawConfig {
            model: self.model,
            kappa: self.kappa,
            theta: self.theta,
            delta: self.delta,
            gamma: self.gamma,
            rho: self.rho,
            eta: self.eta,
            t: self.t,
            s0: self.s0,
            x0: self.x0,
            y0: self.y0,
            omega_i: self.omega_i,
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            omega_max_init: self.omega_max_init,
            max_doublings: self.max_doublings,
            n_paths: self.n_paths,
            steps_per_year: self.steps_per_year,
            seed: self.seed,
            scheme: self.scheme,
            clamp_eps: self.clamp_eps,
            out: self.out.clone(),
        }
    }
}

/// Overlays `over` on `base`: any field given in `over` wins.  The spot
/// level is one logical field with two spellings, so giving either `s0`
/// or `x0` in the later source clears both from the earlier one.
fn merged(mut base: RawConfig, over: RawConfig) -> RawConfig {
    if over.s0.is_some() || over.x0.is_some() {
        base.s0 = None;
        base.x0 = None;
    }
    macro_rules! take {
        ($($field:ident),* $(,)?) => {
            $( if over.$field.is_some() { base.$field = over.$field; } )*
        };
    }
    take!(
        model, kappa, theta, delta, gamma, rho, eta, t, s0, x0, y0, omega_i, abs_tol, rel_tol,
        omega_max_init, max_doublings, n_paths, steps_per_year, seed, scheme, clamp_eps,
    );
    if over.out.is_some() {
        base.out = over.out;
    }
    base
}

/// Parses the flat `key = value` config format.  `#` starts a comment;
/// blank lines are ignored; errors carry `origin:line` diagnostics.
fn parse_config_text(text: &str, origin: &str) -> Result<RawConfig> {
    let mut raw = RawConfig::default();
    for (idx, full_line) in text.lines().enumerate() {
        let line = match full_line.find('#') {
            Some(pos) => &full_line[..pos],
            None => full_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "{origin}:{lineno}: expected `key = value`, got `{line}`"
            )));
        };
        set_key(&mut raw, key.trim(), value.trim())
            .map_err(|msg| Error::Config(format!("{origin}:{lineno}: {msg}")))?;
    }
    Ok(raw)
}

fn set_key(raw: &mut RawConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> std::result::Result<T, String> {
        value
            .parse()
            .map_err(|_| format!("field `{key}`: cannot parse `{value}` as {what}"))
    }
    let f = |v| num::<f64>(key, v, "a number");
    match key {
        "model" => {
            raw.model = Some(match value {
                "cir" => ModelKind::Cir,
                "jacobi" => ModelKind::Jacobi,
                other => return Err(format!("field `model`: expected `cir` or `jacobi`, got `{other}`")),
            })
        }
        "kappa" => raw.kappa = Some(f(value)?),
        "theta" => raw.theta = Some(f(value)?),
        "delta" => raw.delta = Some(f(value)?),
        "gamma" => raw.gamma = Some(f(value)?),
        "rho" => raw.rho = Some(f(value)?),
        "eta" => raw.eta = Some(f(value)?),
        "t" => raw.t = Some(f(value)?),
        "s0" => {
            if raw.x0.is_some() {
                return Err("give either `s0` or `x0`, not both".into());
            }
            raw.s0 = Some(f(value)?);
        }
        "x0" => {
            if raw.s0.is_some() {
                return Err("give either `s0` or `x0`, not both".into());
            }
            raw.x0 = Some(f(value)?);
        }
        "y0" => raw.y0 = Some(f(value)?),
        "omega_i" => raw.omega_i = Some(f(value)?),
        "abs_tol" => raw.abs_tol = Some(f(value)?),
        "rel_tol" => raw.rel_tol = Some(f(value)?),
        "omega_max_init" => raw.omega_max_init = Some(f(value)?),
        "max_doublings" => raw.max_doublings = Some(num(key, value, "an integer")?),
        "n_paths" => raw.n_paths = Some(num(key, value, "an integer")?),
        "steps_per_year" => raw.steps_per_year = Some(num(key, value, "an integer")?),
        "seed" => raw.seed = Some(num(key, value, "an integer")?),
        "scheme" => {
            raw.scheme = Some(match value {
                "full-truncation" => SchemeKind::FullTruncation,
                "reflection" => SchemeKind::Reflection,
                other => {
                    return Err(format!(
                        "field `scheme`: expected `full-truncation` or `reflection`, got `{other}`"
                    ))
                }
            })
        }
        "clamp_eps" => raw.clamp_eps = Some(f(value)?),
        "out" => raw.out = Some(PathBuf::from(value)),
        other => return Err(format!("unknown key `{other}`")),
    }
    Ok(())
}

/// Resolves a merged raw configuration against the built-in defaults and
/// validates everything.  Defaults are the reference parameter set: for the
/// CIR driver κ=0.5, θ=0.05, δ=0.95√(2κθ), γ=0.2√θ (δ and γ track any
/// overridden κ, θ); for the Jacobi driver κ=0.3, θ=0.8, δ=0.2, γ=0.2,
/// η=0.05.  Both default to ρ=0.5, t=0, X₀=ln 100, Y₀=θ.
fn resolve(raw: &RawConfig) -> Result<RunConfig> {
    let kind = raw.model.unwrap_or(ModelKind::Cir);
    let rho = raw.rho.unwrap_or(0.5);
    let model = match kind {
        ModelKind::Cir => {
            if raw.eta.is_some() {
                return Err(Error::Config(
                    "field `eta` applies only to the jacobi model".into(),
                ));
            }
            let kappa = raw.kappa.unwrap_or(0.5);
            let theta = raw.theta.unwrap_or(0.05);
            let delta = raw.delta.unwrap_or_else(|| 0.95 * (2.0 * kappa * theta).sqrt());
            let gamma = raw.gamma.unwrap_or_else(|| 0.2 * theta.sqrt());
            Model::Cir(CirParams::new(kappa, theta, delta, gamma, rho)?)
        }
        ModelKind::Jacobi => {
            let kappa = raw.kappa.unwrap_or(0.3);
            let theta = raw.theta.unwrap_or(0.8);
            let delta = raw.delta.unwrap_or(0.2);
            let gamma = raw.gamma.unwrap_or(0.2);
            let eta = raw.eta.unwrap_or(0.05);
            Model::Jacobi(JacobiParams::new(kappa, theta, delta, gamma, eta, rho)?)
        }
    };

    let t = raw.t.unwrap_or(0.0);
    let x0 = match (raw.s0, raw.x0) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("give either `s0` or `x0`, not both".into()));
        }
        (Some(s0), None) => {
            if !(s0 > 0.0 && s0.is_finite()) {
                return Err(Error::Config(format!("s0 must be positive and finite, got {s0}")));
            }
            s0.ln()
        }
        (None, Some(x0)) => x0,
        (None, None) => 100.0f64.ln(),
    };
    let y0 = raw.y0.unwrap_or(match &model {
        Model::Cir(p) => p.theta(),
        Model::Jacobi(p) => p.theta(),
    });
    let state = MarketState::new(t, x0, y0)?;
    model.validate_state(&state)?;

    let contour_defaults = ContourConfig::default();
    let contour = ContourConfig {
        omega_i: raw.omega_i.unwrap_or(contour_defaults.omega_i),
        abs_tol: raw.abs_tol.unwrap_or(contour_defaults.abs_tol),
        rel_tol: raw.rel_tol.unwrap_or(contour_defaults.rel_tol),
        omega_max_init: raw.omega_max_init.unwrap_or(contour_defaults.omega_max_init),
        max_doublings: raw.max_doublings.unwrap_or(contour_defaults.max_doublings),
    };
    let mc_defaults = McConfig::default();
    let mc = McConfig {
        n_paths: raw.n_paths.unwrap_or(mc_defaults.n_paths),
        steps_per_year: raw.steps_per_year.unwrap_or(mc_defaults.steps_per_year),
        seed: raw.seed.unwrap_or(mc_defaults.seed),
        scheme: match raw.scheme.unwrap_or(SchemeKind::FullTruncation) {
            SchemeKind::FullTruncation => CirScheme::FullTruncation,
            SchemeKind::Reflection => CirScheme::Reflection,
        },
        clamp_eps: raw.clamp_eps.unwrap_or(mc_defaults.clamp_eps),
    };

    Ok(RunConfig { model, state, contour, mc, out: raw.out.clone() })
}

fn load(common: &CommonArgs) -> Result<RunConfig> {
    let mut raw = RawConfig::default();
    if let Some(path) = &common.config {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|err| Error::Config(format!("{origin}: {err}")))?;
        raw = merged(raw, parse_config_text(&text, &origin)?);
    }
    raw = merged(raw, common.to_raw());
    resolve(&raw)
}

/// Renders the effective configuration in the config-file format; parsing
/// the output reproduces the run exactly (f64 values round-trip through
/// their shortest decimal representation).
pub fn dump_config(config: &RunConfig) -> String {
    let mut s = String::from("# effective run configuration\n");
    match &config.model {
        Model::Cir(p) => {
            writeln!(s, "model = cir").unwrap();
            writeln!(s, "kappa = {}", p.kappa()).unwrap();
            writeln!(s, "theta = {}", p.theta()).unwrap();
            writeln!(s, "delta = {}", p.delta()).unwrap();
            writeln!(s, "gamma = {}", p.gamma()).unwrap();
            writeln!(s, "rho = {}", p.rho()).unwrap();
        }
        Model::Jacobi(p) => {
            writeln!(s, "model = jacobi").unwrap();
            writeln!(s, "kappa = {}", p.kappa()).unwrap();
            writeln!(s, "theta = {}", p.theta()).unwrap();
            writeln!(s, "delta = {}", p.delta()).unwrap();
            writeln!(s, "gamma = {}", p.gamma()).unwrap();
            writeln!(s, "eta = {}", p.eta()).unwrap();
            writeln!(s, "rho = {}", p.rho()).unwrap();
        }
    }
    writeln!(s, "t = {}", config.state.t).unwrap();
    writeln!(s, "x0 = {}", config.state.x).unwrap();
    writeln!(s, "y0 = {}", config.state.y).unwrap();
    writeln!(s, "omega_i = {}", config.contour.omega_i).unwrap();
    writeln!(s, "abs_tol = {}", config.contour.abs_tol).unwrap();
    writeln!(s, "rel_tol = {}", config.contour.rel_tol).unwrap();
    writeln!(s, "omega_max_init = {}", config.contour.omega_max_init).unwrap();
    writeln!(s, "max_doublings = {}", config.contour.max_doublings).unwrap();
    writeln!(s, "n_paths = {}", config.mc.n_paths).unwrap();
    writeln!(s, "steps_per_year = {}", config.mc.steps_per_year).unwrap();
    writeln!(s, "seed = {}", config.mc.seed).unwrap();
    let scheme = match config.mc.scheme {
        CirScheme::FullTruncation => "full-truncation",
        CirScheme::Reflection => "reflection",
    };
    writeln!(s, "scheme = {scheme}").unwrap();
    writeln!(s, "clamp_eps = {}", config.mc.clamp_eps).unwrap();
    if let Some(out) = &config.out {
        writeln!(s, "out = {}", out.display()).unwrap();
    }
    s
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

/// Formats a value with 12 significant digits and a `.` decimal separator.
/// Fixed-point within a readable magnitude range, scientific outside it;
/// the mapping is deterministic, so repeated runs are byte-identical.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

fn csv_row(l: f64, strike: f64, price: f64, implied_vol: f64, status: &str) -> String {
    format!(
        "{},{},{},{},{}",
        fmt_sig(l),
        fmt_sig(strike),
        fmt_sig(price),
        fmt_sig(implied_vol),
        status
    )
}

/// Evenly spaced grid with exact endpoints.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
    grid[n - 1] = hi;
    grid
}

fn write_out(path: &PathBuf, content: &str) -> Result<()> {
    std::fs::write(path, content)
        .map_err(|err| Error::Config(format!("cannot write {}: {err}", path.display())))
}

/// Emits `content` to the configured output file, or to stdout when none
/// is set.
fn emit(config: &RunConfig, content: &str, description: &str) -> Result<()> {
    match &config.out {
        Some(path) => {
            write_out(path, content)?;
            println!("{description} written to {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Subcommand implementations
// ---------------------------------------------------------------------------

fn require_positive_strike(strike: f64) -> Result<()> {
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "strike must be positive and finite, got {strike}"
        )));
    }
    Ok(())
}

fn require_future_maturity(config: &RunConfig, maturity: f64) -> Result<()> {
    if !(maturity.is_finite() && maturity > config.state.t) {
        return Err(Error::InvalidParams(format!(
            "maturity {maturity} must exceed the valuation time {}",
            config.state.t
        )));
    }
    Ok(())
}

fn cmd_price(config: &RunConfig, maturity: f64, strike: f64) -> Result<i32> {
    require_positive_strike(strike)?;
    require_future_maturity(config, maturity)?;
    let state = &config.state;
    let bond = chf::bond(&config.model, state.t, state.y, maturity)?;
    let forward = state.spot() / bond;
    let price = pricing::price_call(&config.model, state, maturity, strike, &config.contour)?;
    let implied = vol::implied_vol(price / bond, forward, strike, maturity - state.t)?;
    let l = (strike / forward).ln();

    println!("model          {} (rho = {})", config.model.name(), config.model.rho());
    println!("maturity       {}", fmt_sig(maturity));
    println!("strike         {}", fmt_sig(strike));
    println!("log_moneyness  {}", fmt_sig(l));
    println!("bond           {}", fmt_sig(bond));
    println!("forward        {}", fmt_sig(forward));
    println!("call           {}", fmt_sig(price));
    println!("implied_vol    {}", fmt_sig(implied));
    if let Some(path) = &config.out {
        let content = format!("{CSV_HEADER}\n{}\n", csv_row(l, strike, price, implied, "ok"));
        write_out(path, &content)?;
        println!("record written to {}", path.display());
    }
    Ok(0)
}

fn cmd_smile(config: &RunConfig, maturity: f64, l_min: f64, l_max: f64, n_points: usize) -> Result<i32> {
    if !(l_min.is_finite() && l_max.is_finite() && l_min < l_max) {
        return Err(Error::InvalidParams(format!(
            "need l_min < l_max, got l_min = {l_min}, l_max = {l_max}"
        )));
    }
    if n_points < 2 {
        return Err(Error::InvalidParams(format!(
            "need at least 2 grid points, got {n_points}"
        )));
    }
    require_future_maturity(config, maturity)?;

    let request = SmileRequest {
        model: config.model,
        state: config.state,
        maturity,
        l_grid: linspace(l_min, l_max, n_points),
        contour: config.contour,
    };
    let result = vol::smile(&request)?;

    let mut content = String::from(CSV_HEADER);
    content.push('\n');
    for point in &result.points {
        content.push_str(&csv_row(
            point.l,
            point.strike,
            point.call_price,
            point.implied_vol,
            point.status.token(),
        ));
        content.push('\n');
    }
    let n_ok = result.points.iter().filter(|p| p.status.is_ok()).count();
    emit(
        config,
        &content,
        &format!("smile ({} points, {n_ok} ok)", result.points.len()),
    )?;
    if n_ok == 0 {
        return Err(Error::NonConvergence("every smile grid point failed".into()));
    }
    Ok(0)
}

fn cmd_bond(
    config: &RunConfig,
    maturity: Option<f64>,
    t_min: Option<f64>,
    t_max: Option<f64>,
    n_points: Option<usize>,
) -> Result<i32> {
    let tenors = match maturity {
        Some(m) => vec![m],
        None => {
            let lo = t_min.unwrap_or(0.25);
            let hi = t_max.unwrap_or(5.0);
            let n = n_points.unwrap_or(20);
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParams(format!(
                    "need t_min <= t_max, got t_min = {lo}, t_max = {hi}"
                )));
            }
            if n == 0 {
                return Err(Error::InvalidParams("need at least 1 tenor".into()));
            }
            linspace(lo, hi, n)
        }
    };
    let state = &config.state;
    let mut content = String::from("T,price\n");
    for tenor in &tenors {
        if !(tenor.is_finite() && *tenor >= state.t) {
            return Err(Error::InvalidParams(format!(
                "tenor {tenor} must be at or after the valuation time {}",
                state.t
            )));
        }
        let price = chf::bond(&config.model, state.t, state.y, *tenor)?;
        writeln!(content, "{},{}", fmt_sig(*tenor), fmt_sig(price)).unwrap();
    }
    emit(config, &content, &format!("bond curve ({} tenors)", tenors.len()))?;
    Ok(0)
}

/// One comparison leg of the Monte Carlo cross-check.
struct CheckLeg {
    label: String,
    summary: String,
    z: f64,
}

fn cmd_mc_check(config: &RunConfig, maturity: f64, strike: f64, perturb_theta: f64) -> Result<i32> {
    require_positive_strike(strike)?;
    require_future_maturity(config, maturity)?;
    if !(perturb_theta > 0.0 && perturb_theta.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "perturb_theta must be positive and finite, got {perturb_theta}"
        )));
    }
    let analytic = perturbed_model(&config.model, perturb_theta)?;
    let state = &config.state;
    let ensemble = mc::simulate(&config.model, state, maturity, &config.mc)?;

    // Two kinds of legs: the option price (Fourier vs MC) and the
    // characteristic function at two sample frequencies.  The bond is
    // deliberately not a leg: its MC standard error is so small that the
    // O(dt) accumulator bias would dominate any z-score, which makes a 3σ
    // gate on it meaningless; bond consistency is checked analytically
    // elsewhere.
    let mut legs = Vec::new();

    let call_mc = mc::mc_price(&ensemble, |x| (x.exp() - strike).max(0.0))?;
    let call_ref = pricing::price_call(&analytic, state, maturity, strike, &config.contour)?;
    legs.push(CheckLeg {
        label: format!("call K={}", fmt_sig(strike)),
        summary: format!(
            "mc = {} stderr = {} ref = {}",
            fmt_sig(call_mc.value),
            fmt_sig(call_mc.stderr),
            fmt_sig(call_ref)
        ),
        z: (call_mc.value - call_ref) / call_mc.stderr,
    });

    for omega in [Complex64::new(0.5, -1.5), Complex64::new(2.0, -1.5)] {
        let est = mc::mc_chf(&ensemble, omega, state.x)?;
        let args = chf::GArgs::for_pricing(state.t, maturity, state.y, omega)?;
        let exact = chf::g(&analytic, &args)?;
        let gap = (est.value - exact).norm();
        let tail = if est.heavy_tail { " heavy-tail" } else { "" };
        legs.push(CheckLeg {
            label: format!("chf omega={}{:+}i", fmt_sig(omega.re), omega.im),
            summary: format!(
                "|mc - ref| = {} stderr = {}{tail}",
                fmt_sig(gap),
                fmt_sig(est.stderr)
            ),
            z: gap / est.stderr,
        });
    }

    let mut report = format!(
        "mc-check: model {} (rho = {}), T = {}, K = {}\n\
         paths = {}, steps/year = {}, seed = {}, boundary fraction = {:.6}\n",
        config.model.name(),
        config.model.rho(),
        fmt_sig(maturity),
        fmt_sig(strike),
        ensemble.config.n_paths,
        ensemble.config.steps_per_year,
        ensemble.config.seed,
        ensemble.boundary_fraction,
    );
    if perturb_theta != 1.0 {
        writeln!(report, "analytic legs use theta x {perturb_theta} (detection-power self-test)").unwrap();
    }
    let mut max_abs_z: f64 = 0.0;
    for leg in &legs {
        writeln!(report, "  [{}] {} z = {:+.2}", leg.label, leg.summary, leg.z).unwrap();
        max_abs_z = max_abs_z.max(leg.z.abs());
    }
    let pass = max_abs_z < Z_THRESHOLD;
    writeln!(
        report,
        "result: {} (max |z| = {:.2}, threshold {Z_THRESHOLD})",
        if pass { "PASS" } else { "FAIL" },
        max_abs_z
    )
    .unwrap();

    emit(config, &report, "mc-check report")?;
    Ok(if pass { 0 } else { 1 })
}

/// Rebuilds the model with θ multiplied by `factor`, revalidating the
/// parameter set (a large perturbation can leave the admissible region).
fn perturbed_model(model: &Model, factor: f64) -> Result<Model> {
    if factor == 1.0 {
        return Ok(*model);
    }
    Ok(match model {
        Model::Cir(p) => Model::Cir(CirParams::new(
            p.kappa(),
            p.theta() * factor,
            p.delta(),
            p.gamma(),
            p.rho(),
        )?),
        Model::Jacobi(p) => Model::Jacobi(JacobiParams::new(
            p.kappa(),
            p.theta() * factor,
            p.delta(),
            p.gamma(),
            p.eta(),
            p.rho(),
        )?),
    })
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::InvalidParams(_) | Error::Config(_) => 2,
        _ => 3,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let common = match &cli.command {
        Command::Price { common, .. }
        | Command::Smile { common, .. }
        | Command::Bond { common, .. }
        | Command::McCheck { common, .. } => common,
    };
    let config = load(common)?;
    if common.dump_config {
        print!("{}", dump_config(&config));
        return Ok(0);
    }
    match cli.command {
        Command::Price { maturity, strike, .. } => cmd_price(&config, maturity, strike),
        Command::Smile { maturity, l_min, l_max, n_points, .. } => {
            cmd_smile(&config, maturity, l_min, l_max, n_points)
        }
        Command::Bond { maturity, t_min, t_max, n_points, .. } => {
            cmd_bond(&config, maturity, t_min, t_max, n_points)
        }
        Command::McCheck { maturity, strike, perturb_theta, .. } => {
            cmd_mc_check(&config, maturity, strike, perturb_theta)
        }
    }
}

/// Parses `std::env::args`, runs the selected subcommand, and returns the
/// process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Usage/parse errors exit 2; --help and --version exit 0.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
