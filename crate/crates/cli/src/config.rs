//! Model configuration files.
//!
//! ```toml
//! note = "free text echoed into reports"          # optional
//!
//! [generator]
//! rates = [[-2.0, 2.0], [1.0, -1.0]]              # full generator, rows sum to 0
//!
//! [dynamics]
//! alpha = [0.5, -0.5]                             # one drift per state
//! beta = [[1.0], [0.3]]                           # states x channels, optional
//!
//! [spectral]
//! length = 3.141592653589793                      # interval (0, length), or
//! # eigenpairs = "eigen.csv"                      # CSV with columns n, lambda_n, u0_n
//! n_modes = 64
//! initial = "sin1"                                # "sin1", "x(L-x)" or a coefficient list
//! quad_nodes = 256                                # projection nodes for "x(L-x)"
//!
//! [estimator]
//! p = [2.0]
//! horizon = 50.0
//! paths = 1000
//! grid_points = 100
//! seed = 1
//! start_state = 1                                 # 1-based
//! moment_estimator = "conditional-gaussian"
//! lambda_backend = "power-iteration"
//! bootstrap = 200
//! fit_fraction = 0.5
//! kurtosis_threshold = 100.0
//! ```
//!
//! Every section except `[generator]` and `[dynamics]` may be omitted.
//! States are 1-based in files and 0-based inside the library.

use std::ops::Range;
use std::path::{Path, PathBuf};

use hyheat::large_deviation::growth_backends;
use hyheat::montecarlo::{moment_estimators, uniform_grid, EstimatorConfig};
use hyheat::spectral::DEFAULT_N_MODES;
use hyheat::{Generator, HybridHeatModel, InitialData, SpectralBasis};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    note: Option<String>,
    generator: RawGenerator,
    dynamics: RawDynamics,
    #[serde(default)]
    spectral: RawSpectral,
    #[serde(default)]
    estimator: RawEstimator,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    rates: Spanned<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDynamics {
    alpha: Spanned<Vec<f64>>,
    beta: Option<Spanned<Vec<Vec<f64>>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectral {
    length: Option<Spanned<f64>>,
    eigenpairs: Option<Spanned<String>>,
    n_modes: Option<Spanned<usize>>,
    initial: Option<Spanned<InitialSpec>>,
    quad_nodes: Option<Spanned<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimator {
    p: Option<Spanned<Vec<f64>>>,
    horizon: Option<Spanned<f64>>,
    paths: Option<Spanned<usize>>,
    grid_points: Option<Spanned<usize>>,
    seed: Option<u64>,
    start_state: Option<Spanned<usize>>,
    moment_estimator: Option<Spanned<String>>,
    lambda_backend: Option<Spanned<String>>,
    bootstrap: Option<usize>,
    fit_fraction: Option<Spanned<f64>>,
    kurtosis_threshold: Option<f64>,
}

/// Initial datum: a named profile or explicit coefficients `u_n⁰`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Named(String),
    Coefficients(Vec<f64>),
}

/// A configuration with every default filled in; echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub source: String,
    pub note: Option<String>,
    pub generator: GeneratorSection,
    pub dynamics: DynamicsSection,
    pub spectral: SpectralSection,
    pub estimator: EstimatorSection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorSection {
    pub rates: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsSection {
    pub alpha: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSection {
    pub length: Option<f64>,
    pub eigenpairs: Option<String>,
    pub n_modes: usize,
    pub initial: InitialSpec,
    pub quad_nodes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSection {
    pub p: Vec<f64>,
    pub horizon: f64,
    pub paths: usize,
    pub grid_points: usize,
    pub seed: u64,
    pub start_state: usize,
    pub moment_estimator: String,
    pub lambda_backend: String,
    pub bootstrap: usize,
    pub fit_fraction: f64,
    pub kurtosis_threshold: f64,
}

/// Command-line overrides applied on top of a loaded file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub horizon: Option<f64>,
    pub p: Option<Vec<f64>>,
    pub moment_estimator: Option<String>,
    pub lambda_backend: Option<String>,
}

/// Where a configuration came from, for messages and relative paths.
struct Source<'a> {
    name: &'a str,
    text: &'a str,
    dir: Option<&'a Path>,
}

impl Source<'_> {
    fn at(&self, span: Range<usize>, field: &str, msg: impl std::fmt::Display) -> CliError {
        let before = &self.text[..span.start.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        CliError::Validation(format!("{}:{line}:{col}: {field}: {msg}", self.name))
    }
}

/// Parses and validates configuration text; `dir` resolves relative paths.
pub fn load(name: &str, text: &str, dir: Option<&Path>, overrides: &Overrides) -> Result<ResolvedConfig, CliError> {
    let src = Source { name, text, dir };
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Validation(format!("{name}: {e}")))?;
    resolve(&src, raw, overrides)
}

pub fn load_file(path: &Path, overrides: &Overrides) -> Result<ResolvedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    load(&path.display().to_string(), &text, path.parent(), overrides)
}

fn resolve(src: &Source, raw: RawConfig, ov: &Overrides) -> Result<ResolvedConfig, CliError> {
    let rates = raw.generator.rates;
    Generator::new(rates.get_ref()).map_err(|e| src.at(rates.span(), "generator.rates", e))?;
    let n = rates.get_ref().len();

    let alpha = raw.dynamics.alpha;
    if alpha.get_ref().len() != n {
        return Err(src.at(
            alpha.span(),
            "dynamics.alpha",
            format!("expected {n} entries (one per state), found {}", alpha.get_ref().len()),
        ));
    }
    let beta = match raw.dynamics.beta {
        None => vec![vec![0.0]; n],
        Some(b) => {
            let rows = b.get_ref();
            if rows.len() != n {
                return Err(src.at(b.span(), "dynamics.beta", format!("expected {n} rows (one per state), found {}", rows.len())));
            }
            let channels = rows[0].len();
            if channels == 0 || rows.iter().any(|r| r.len() != channels) {
                return Err(src.at(b.span(), "dynamics.beta", "every row needs the same positive number of channels"));
            }
            if rows.iter().flatten().any(|x| !x.is_finite()) {
                return Err(src.at(b.span(), "dynamics.beta", "entries must be finite"));
            }
            rows.clone()
        }
    };
    if alpha.get_ref().iter().any(|x| !x.is_finite()) {
        return Err(src.at(alpha.span(), "dynamics.alpha", "entries must be finite"));
    }

    let sp = raw.spectral;
    let spectral = match (&sp.length, &sp.eigenpairs) {
        (Some(l), Some(_)) => return Err(src.at(l.span(), "spectral", "give either length or eigenpairs, not both")),
        (_, Some(e)) => {
            if let Some(i) = &sp.initial {
                return Err(src.at(i.span(), "spectral.initial", "initial data come from the eigenpairs file"));
            }
            let path = match src.dir {
                Some(d) if Path::new(e.get_ref()).is_relative() => d.join(e.get_ref()),
                _ => PathBuf::from(e.get_ref()),
            };
            let (eigs, coeffs) = read_eigenpairs(&path).map_err(|m| src.at(e.span(), "spectral.eigenpairs", m))?;
            let n_modes = match &sp.n_modes {
                Some(m) if *m.get_ref() > eigs.len() || *m.get_ref() == 0 => {
                    return Err(src.at(m.span(), "spectral.n_modes", format!("must lie in 1..={}", eigs.len())))
                }
                Some(m) => *m.get_ref(),
                None => eigs.len(),
            };
            SpectralSection {
                length: None,
                eigenpairs: Some(path.display().to_string()),
                n_modes,
                initial: InitialSpec::Coefficients(coeffs[..n_modes].to_vec()),
                quad_nodes: None,
            }
        }
        (l, None) => {
            let length = l.as_ref().map_or(std::f64::consts::PI, |l| *l.get_ref());
            if !(length > 0.0 && length.is_finite()) {
                return Err(src.at(l.as_ref().unwrap().span(), "spectral.length", "must be positive and finite"));
            }
            let n_modes = sp.n_modes.as_ref().map_or(DEFAULT_N_MODES, |m| *m.get_ref());
            if n_modes == 0 {
                return Err(src.at(sp.n_modes.unwrap().span(), "spectral.n_modes", "must be at least 1"));
            }
            let initial = sp.initial.as_ref().map_or(InitialSpec::Named("sin1".into()), |i| i.get_ref().clone());
            if let Some(i) = &sp.initial {
                check_initial(src, i, n_modes)?;
            }
            if let Some(q) = &sp.quad_nodes {
                if *q.get_ref() < 2 * n_modes + 1 {
                    return Err(src.at(q.span(), "spectral.quad_nodes", format!("need at least {} nodes for {n_modes} modes", 2 * n_modes + 1)));
                }
            }
            SpectralSection { length: Some(length), eigenpairs: None, n_modes, initial, quad_nodes: sp.quad_nodes.map(|q| *q.get_ref()) }
        }
    };

    let est = raw.estimator;
    let p = ov.p.clone().or_else(|| est.p.as_ref().map(|p| p.get_ref().clone())).unwrap_or_else(|| vec![2.0]);
    if p.is_empty() || p.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(match (&ov.p, &est.p) {
            (None, Some(s)) => src.at(s.span(), "estimator.p", "needs one or more positive values"),
            _ => CliError::Usage("--p needs one or more positive values".into()),
        });
    }
    let horizon = ov.horizon.or(est.horizon.as_ref().map(|h| *h.get_ref())).unwrap_or(50.0);
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(match (ov.horizon, &est.horizon) {
            (None, Some(s)) => src.at(s.span(), "estimator.horizon", "must be positive"),
            _ => CliError::Usage("--horizon must be positive".into()),
        });
    }
    let paths = ov.paths.or(est.paths.as_ref().map(|h| *h.get_ref())).unwrap_or(1000);
    if paths == 0 {
        return Err(match (ov.paths, &est.paths) {
            (None, Some(s)) => src.at(s.span(), "estimator.paths", "must be at least 1"),
            _ => CliError::Usage("--paths must be at least 1".into()),
        });
    }
    let grid_points = est.grid_points.as_ref().map_or(100, |g| *g.get_ref());
    if grid_points == 0 {
        return Err(src.at(est.grid_points.unwrap().span(), "estimator.grid_points", "must be at least 1"));
    }
    let start_state = est.start_state.as_ref().map_or(1, |s| *s.get_ref());
    if start_state == 0 || start_state > n {
        return Err(src.at(est.start_state.unwrap().span(), "estimator.start_state", format!("must lie in 1..={n}")));
    }
    let fit_fraction = est.fit_fraction.as_ref().map_or(0.5, |f| *f.get_ref());
    if !(fit_fraction > 0.0 && fit_fraction <= 1.0) {
        return Err(src.at(est.fit_fraction.unwrap().span(), "estimator.fit_fraction", "must lie in (0, 1]"));
    }
    let moment_estimator = strategy_name(
        src,
        ov.moment_estimator.as_deref(),
        est.moment_estimator.as_ref(),
        "estimator.moment_estimator",
        |name| moment_estimators().get(name).map(|_| ()),
        moment_estimators().default_name(),
    )?;
    let lambda_backend = strategy_name(
        src,
        ov.lambda_backend.as_deref(),
        est.lambda_backend.as_ref(),
        "estimator.lambda_backend",
        |name| growth_backends().get(name).map(|_| ()),
        growth_backends().default_name(),
    )?;

    Ok(ResolvedConfig {
        source: src.name.to_string(),
        note: raw.note,
        generator: GeneratorSection { rates: rates.into_inner() },
        dynamics: DynamicsSection { alpha: alpha.into_inner(), beta },
        spectral,
        estimator: EstimatorSection {
            p,
            horizon,
            paths,
            grid_points,
            seed: ov.seed.or(est.seed).unwrap_or(1),
            start_state,
            moment_estimator,
            lambda_backend,
            bootstrap: est.bootstrap.unwrap_or(200),
            fit_fraction,
            kurtosis_threshold: est.kurtosis_threshold.unwrap_or(100.0),
        },
    })
}

fn strategy_name(
    src: &Source,
    flag: Option<&str>,
    field: Option<&Spanned<String>>,
    path: &str,
    lookup: impl Fn(&str) -> hyheat::Result<()>,
    default: &str,
) -> Result<String, CliError> {
    match (flag, field) {
        (Some(name), _) => lookup(name).map_err(|e| CliError::Usage(e.to_string()))?,
        (None, Some(s)) => lookup(s.get_ref()).map_err(|e| src.at(s.span(), path, e))?,
        (None, None) => return Ok(default.to_string()),
    }
    Ok(flag.map_or_else(|| field.unwrap().get_ref().clone(), str::to_string))
}

fn check_initial(src: &Source, spec: &Spanned<InitialSpec>, n_modes: usize) -> Result<(), CliError> {
    match spec.get_ref() {
        InitialSpec::Named(name) if is_parabola(name) || name == "sin1" => Ok(()),
        InitialSpec::Named(name) => Err(src.at(
            spec.span(),
            "spectral.initial",
            format!("unknown profile {name:?} (expected \"sin1\", \"x(L-x)\" or a coefficient list)"),
        )),
        InitialSpec::Coefficients(c) if c.len() > n_modes => {
            Err(src.at(spec.span(), "spectral.initial", format!("{} coefficients exceed n_modes = {n_modes}", c.len())))
        }
        InitialSpec::Coefficients(c) if c.iter().any(|x| !x.is_finite()) => {
            Err(src.at(spec.span(), "spectral.initial", "coefficients must be finite"))
        }
        InitialSpec::Coefficients(c) if c.iter().all(|x| *x == 0.0) => {
            Err(src.at(spec.span(), "spectral.initial", "initial data project to zero"))
        }
        InitialSpec::Coefficients(_) => Ok(()),
    }
}

fn is_parabola(name: &str) -> bool {
    matches!(name, "x(L-x)" | "x(pi-x)" | "x(π-x)" | "x(pi−x)")
}

/// Reads `n, lambda_n, u0_n` rows; `n` must run 1, 2, ... and `lambda_n`
/// must be positive and nondecreasing.
fn read_eigenpairs(path: &Path) -> Result<(Vec<f64>, Vec<f64>), String> {
    #[derive(Deserialize)]
    struct Row {
        n: usize,
        lambda_n: f64,
        u0_n: f64,
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut eigs = Vec::new();
    let mut coeffs = Vec::new();
    for (k, row) in reader.deserialize::<Row>().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| format!("{}: {e}", path.display()))?;
        if row.n != k + 1 {
            return Err(format!("{}:{line}: expected n = {}, found {}", path.display(), k + 1, row.n));
        }
        if !(row.lambda_n > 0.0 && row.lambda_n.is_finite()) || eigs.last().is_some_and(|&l| row.lambda_n < l) {
            return Err(format!("{}:{line}: lambda_n must be positive and nondecreasing", path.display()));
        }
        if !row.u0_n.is_finite() {
            return Err(format!("{}:{line}: u0_n must be finite", path.display()));
        }
        eigs.push(row.lambda_n);
        coeffs.push(row.u0_n);
    }
    if eigs.is_empty() {
        return Err(format!("{}: no eigenpairs", path.display()));
    }
    Ok((eigs, coeffs))
}

impl ResolvedConfig {
    pub fn build_model(&self) -> Result<HybridHeatModel, CliError> {
        let invalid = |what: &str, e: hyheat::Error| CliError::Validation(format!("{}: {what}: {e}", self.source));
        let generator = Generator::new(&self.generator.rates).map_err(|e| invalid("generator.rates", e))?;
        let sp = &self.spectral;
        let (basis, initial) = match sp.eigenpairs {
            Some(ref path) => {
                let (eigs, coeffs) = read_eigenpairs(Path::new(path)).map_err(CliError::Validation)?;
                let basis = SpectralBasis::user_supplied(eigs[..sp.n_modes].to_vec()).map_err(|e| invalid("spectral.eigenpairs", e))?;
                let initial = InitialData::new(coeffs[..sp.n_modes].to_vec(), None).map_err(|e| invalid("spectral.eigenpairs", e))?;
                (basis, initial)
            }
            None => {
                let length = sp.length.unwrap_or(std::f64::consts::PI);
                let basis = SpectralBasis::interval(length, sp.n_modes).map_err(|e| invalid("spectral.length", e))?;
                let initial = match &sp.initial {
                    InitialSpec::Named(name) if name == "sin1" => InitialData::single_mode(1, sp.n_modes),
                    InitialSpec::Named(_) => {
                        let nodes = sp.quad_nodes.unwrap_or_else(|| basis.default_quad_nodes());
                        basis.project_initial(|x| x * (length - x), nodes)
                    }
                    InitialSpec::Coefficients(c) => {
                        let mut c = c.clone();
                        c.resize(sp.n_modes, 0.0);
                        InitialData::new(c, None)
                    }
                }
                .map_err(|e| invalid("spectral.initial", e))?;
                (basis, initial)
            }
        };
        HybridHeatModel::new(generator, basis, initial, self.dynamics.alpha.clone(), self.dynamics.beta.clone())
            .map_err(|e| invalid("dynamics", e))
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        let e = &self.estimator;
        EstimatorConfig {
            horizon: e.horizon,
            n_paths: e.paths,
            grid: uniform_grid(e.horizon, e.grid_points),
            seed: e.seed,
            start_state: e.start_state - 1,
            bootstrap_resamples: e.bootstrap,
            fit_fraction: e.fit_fraction,
            kurtosis_threshold: e.kurtosis_threshold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[generator]\nrates = [[-1.0, 1.0], [2.0, -2.0]]\n\n[dynamics]\nalpha = [0.5, 0.1]\n";

    #[test]
    fn defaults_are_filled_in() {
        let c = load("m.toml", MINIMAL, None, &Overrides::default()).unwrap();
        assert_eq!(c.dynamics.beta, vec![vec![0.0], vec![0.0]]);
        assert_eq!(c.spectral.n_modes, DEFAULT_N_MODES);
        assert_eq!(c.spectral.initial, InitialSpec::Named("sin1".into()));
        assert_eq!(c.estimator.moment_estimator, "conditional-gaussian");
        assert_eq!(c.estimator.lambda_backend, "power-iteration");
        assert!(c.build_model().unwrap().is_noiseless());
    }

    #[test]
    fn errors_point_at_the_line() {
        let text = "[generator]\nrates = [[-1.0, 1.0], [2.0, -2.0]]\n\n[dynamics]\nalpha = [0.5]\n";
        let e = load("m.toml", text, None, &Overrides::default()).unwrap_err().to_string();
        assert!(e.starts_with("m.toml:5:9: dynamics.alpha: expected 2 entries"), "{e}");
        let text = "[generator]\nrates = [[-1.0, 1.0], [2.0, 2.0]]\n[dynamics]\nalpha = [0.5, 1.0]\n";
        let e = load("m.toml", text, None, &Overrides::default()).unwrap_err().to_string();
        assert!(e.starts_with("m.toml:2:9: generator.rates:"), "{e}");
        let e = load("m.toml", &format!("{MINIMAL}[spectral]\ninitial = \"cos\"\n"), None, &Overrides::default())
            .unwrap_err()
            .to_string();
        assert!(e.contains(":7:11: spectral.initial: unknown profile"), "{e}");
        let e = load("m.toml", &format!("{MINIMAL}[estimator]\nbogus = 1\n"), None, &Overrides::default())
            .unwrap_err()
            .to_string();
        assert!(e.contains("line 7") && e.contains("bogus"), "{e}");
    }

    #[test]
    fn overrides_win() {
        let ov = Overrides { seed: Some(9), paths: Some(3), horizon: Some(2.0), p: Some(vec![1.0, 3.0]), ..Default::default() };
        let c = load("m.toml", MINIMAL, None, &ov).unwrap();
        assert_eq!((c.estimator.seed, c.estimator.paths, c.estimator.horizon), (9, 3, 2.0));
        assert_eq!(c.estimator.p, vec![1.0, 3.0]);
        let bad = Overrides { lambda_backend: Some("qr".into()), ..Default::default() };
        assert!(matches!(load("m.toml", MINIMAL, None, &bad), Err(CliError::Usage(_))));
    }

    #[test]
    fn parabola_and_coefficients() {
        let c = load("m.toml", &format!("{MINIMAL}[spectral]\nn_modes = 8\ninitial = \"x(pi-x)\"\n"), None, &Overrides::default()).unwrap();
        let m = c.build_model().unwrap();
        assert_eq!(m.initial().leading_index(), 1);
        let c = load("m.toml", &format!("{MINIMAL}[spectral]\nn_modes = 8\ninitial = [0.0, 0.0, 2.0]\n"), None, &Overrides::default()).unwrap();
        let m = c.build_model().unwrap();
        assert_eq!(m.initial().leading_index(), 3);
        assert_eq!(m.initial().coefficients().len(), 8);
    }
}
