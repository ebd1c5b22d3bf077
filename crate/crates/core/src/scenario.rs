//! Scenario configuration, bundled presets, trajectory CSV emission, damping
//! sweeps, and gnuplot script generation.
//!
//! A scenario is described by a flat key-value text format with sections
//! (see [`ScenarioConfig::parse`]), can be run to produce one CSV per
//! trajectory (plus an optional quantum-oracle comparison CSV for isolated
//! runs), swept over damping values, and summarized with a plot script.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use crate::bath::{BathState, ExplicitBathSpec};
use crate::dynamics::{self, IntegratorConfig, MarkovianBathSpec, Method, Trajectory};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    fmo_hamiltonian, two_qubit_hamiltonian, HermitianOperator, TwoQubitCoefficients,
};
use crate::observables::{
    concurrence_amplitudes, quaternionic_z_amplitudes, ObservableSeries,
};
use crate::oracle::{self, populations_from_amplitudes};
use crate::projective::AmplitudeVector;
use crate::C64;

/// Default two-qubit coefficients `(C1, C2, C3)`. The four-level model's
/// figure-shaped behavior (oscillation quenching, concurrence decay,
/// population merging) is qualitative, so these are repo defaults chosen to
/// keep the spectrum non-degenerate and the largest swept damping value well
/// inside the underdamped regime; they are overridable in every config.
/// `C1 = 0` makes the two middle-level populations merge under damping
/// (any `C1 != 0` leaves them split by a residual proportional to `|C1|`),
/// and `C2 = C3 = 5` puts the slowest damped mode of the largest swept
/// damping value within reach of the default run length.
pub const DEFAULT_TWO_QUBIT_C: (f64, f64, f64) = (0.0, 5.0, 5.0);

/// Default damping sweep, in the system's inverse-time units (ps^-1 for
/// wavenumber-tagged Hamiltonians).
pub const DEFAULT_GAMMA_SWEEP: [f64; 4] = [0.0, 0.01, 0.1, 1.0];

/// Default run length of the bundled two-qubit scenarios, long enough for
/// every damping value in the default sweep to relax its slowest transient.
pub const TWO_QUBIT_T_FINAL: f64 = 60.0;

/// Default sample spacing of the bundled two-qubit scenarios.
pub const TWO_QUBIT_SAMPLE_DT: f64 = 0.01;

/// Explicit-bath runs build couplings for twice the requested damping
/// constant: a memory kernel integrating to `2 gamma` acts, in the
/// memoryless limit, like the damping model with constant `gamma`.
pub const EXPLICIT_BATH_GAMMA_FACTOR: f64 = 2.0;

/// Default cutoff multiplier for explicit-bath runs: the cutoff is this
/// factor times the spectral spread (largest eigenvalue gap) of the system.
pub const EXPLICIT_BATH_CUTOFF_FACTOR: f64 = 50.0;

/// Which bundled system a config describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    TwoQubit,
    Fmo,
    Custom,
}

impl ScenarioKind {
    fn tag(&self) -> &'static str {
        match self {
            ScenarioKind::TwoQubit => "two_qubit",
            ScenarioKind::Fmo => "fmo",
            ScenarioKind::Custom => "custom",
        }
    }
}

/// Where the Hamiltonian matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum HamiltonianSource {
    /// Five-coefficient four-level model.
    TwoQubit(TwoQubitCoefficients),
    /// The bundled seven-site exciton matrix.
    BundledFmo,
    /// A plain-text matrix file.
    MatrixFile(PathBuf),
}

/// Environment coupling of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum BathConfig {
    /// Isolated Hamiltonian flow.
    None,
    /// Memoryless damping; one constant per coordinate, or a single value
    /// broadcast to all coordinates.
    Markovian(Vec<f64>),
    /// Direct oscillator-bath simulation paired to the memoryless model at
    /// damping constant `gamma` (couplings are built for
    /// [`EXPLICIT_BATH_GAMMA_FACTOR`]` * gamma`). `cutoff = None` selects
    /// [`EXPLICIT_BATH_CUTOFF_FACTOR`] times the system's spectral spread.
    Explicit {
        gamma: f64,
        oscillators: usize,
        cutoff: Option<f64>,
    },
}

/// A complete run description: system, initial state, environment, time
/// grid, integrator settings, and output location.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub kind: ScenarioKind,
    pub hamiltonian: HamiltonianSource,
    /// Initial amplitudes; normalized at run time, so any normalizable
    /// vector is accepted.
    pub initial_amplitudes: Vec<C64>,
    pub bath: BathConfig,
    pub t_final: f64,
    pub sample_dt: f64,
    pub integrator: IntegratorConfig,
    pub output_dir: PathBuf,
}

/// A bundled scenario plus the damping values its sweep runs by default.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub config: ScenarioConfig,
    pub sweep: Vec<f64>,
}

/// The two-qubit initial state used by the bundled four-level scenarios:
/// amplitudes (sqrt 0.4, sqrt 0.4, 0, sqrt 0.2).
pub fn two_qubit_initial_amplitudes() -> Vec<C64> {
    vec![
        C64::new(0.4f64.sqrt(), 0.0),
        C64::new(0.4f64.sqrt(), 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.2f64.sqrt(), 0.0),
    ]
}

/// Exciton initially on site 1 of the seven-site system.
pub fn fmo_site_one_amplitudes() -> Vec<C64> {
    let mut a = vec![C64::new(0.0, 0.0); 7];
    a[0] = C64::new(1.0, 0.0);
    a
}

fn two_qubit_preset(name: &str, c45: f64) -> Preset {
    let (c1, c2, c3) = DEFAULT_TWO_QUBIT_C;
    Preset {
        config: ScenarioConfig {
            name: name.to_string(),
            kind: ScenarioKind::TwoQubit,
            hamiltonian: HamiltonianSource::TwoQubit(TwoQubitCoefficients::new(
                c1, c2, c3, c45, c45,
            )),
            initial_amplitudes: two_qubit_initial_amplitudes(),
            bath: BathConfig::Markovian(vec![0.0]),
            t_final: TWO_QUBIT_T_FINAL,
            sample_dt: TWO_QUBIT_SAMPLE_DT,
            integrator: IntegratorConfig::default(),
            output_dir: PathBuf::from("."),
        },
        sweep: DEFAULT_GAMMA_SWEEP.to_vec(),
    }
}

/// Looks up a bundled scenario by name: `two_qubit_c4c5_0`,
/// `two_qubit_c4c5_1`, `fmo_isolated`, or `fmo_damped`.
pub fn preset(name: &str) -> Result<Preset> {
    match name {
        "two_qubit_c4c5_0" => Ok(two_qubit_preset(name, 0.0)),
        "two_qubit_c4c5_1" => Ok(two_qubit_preset(name, 1.0)),
        "fmo_isolated" => Ok(Preset {
            config: ScenarioConfig {
                name: name.to_string(),
                kind: ScenarioKind::Fmo,
                hamiltonian: HamiltonianSource::BundledFmo,
                initial_amplitudes: fmo_site_one_amplitudes(),
                bath: BathConfig::None,
                t_final: 1.0,
                sample_dt: 0.001,
                integrator: IntegratorConfig::default(),
                output_dir: PathBuf::from("."),
            },
            sweep: vec![],
        }),
        "fmo_damped" => Ok(Preset {
            config: ScenarioConfig {
                name: name.to_string(),
                kind: ScenarioKind::Fmo,
                hamiltonian: HamiltonianSource::BundledFmo,
                initial_amplitudes: fmo_site_one_amplitudes(),
                bath: BathConfig::Markovian(vec![1.0]),
                t_final: 10.0,
                sample_dt: 0.01,
                integrator: IntegratorConfig::default(),
                output_dir: PathBuf::from("."),
            },
            sweep: DEFAULT_GAMMA_SWEEP.to_vec(),
        }),
        other => Err(Error::InvalidSpec {
            message: format!(
                "unknown scenario `{other}`; available: two_qubit_c4c5_0, \
                 two_qubit_c4c5_1, fmo_isolated, fmo_damped"
            ),
        }),
    }
}

// --- config text format ------------------------------------------------

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::ConfigParse {
        line,
        message: message.into(),
    }
}

/// Raw key-value storage from a first parsing pass: (section, key) ->
/// (line number, value).
struct RawConfig {
    entries: BTreeMap<(String, String), (usize, String)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(inner) = line.strip_prefix('[') {
                let name = inner
                    .strip_suffix(']')
                    .ok_or_else(|| parse_err(line_no, "unterminated section header"))?
                    .trim();
                if !matches!(
                    name,
                    "scenario" | "hamiltonian" | "initial" | "bath" | "integrator"
                ) {
                    return Err(parse_err(line_no, format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(line_no, format!("expected `key = value`, got `{line}`")))?;
            if section.is_empty() {
                return Err(parse_err(line_no, "key-value pair before any [section]"));
            }
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if entries
                .insert((section.clone(), key.clone()), (line_no, value))
                .is_some()
            {
                return Err(parse_err(
                    line_no,
                    format!("duplicate key `{key}` in section [{section}]"),
                ));
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn require(&mut self, section: &str, key: &str) -> Result<(usize, String)> {
        self.take(section, key).ok_or_else(|| {
            parse_err(0, format!("missing required field `{key}` in section [{section}]"))
        })
    }

    fn finish(self) -> Result<()> {
        if let Some(((section, key), (line, _))) = self.entries.into_iter().next() {
            return Err(parse_err(
                line,
                format!("unknown key `{key}` in section [{section}]"),
            ));
        }
        Ok(())
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("`{key}` must be a number, got `{value}`")))
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| parse_err(line, format!("`{key}` must be a non-negative integer, got `{value}`")))
}

fn parse_f64_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    let out = value
        .split_whitespace()
        .map(|tok| parse_f64(line, key, tok))
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(parse_err(line, format!("`{key}` must list at least one number")));
    }
    Ok(out)
}

fn parse_amplitudes(line: usize, value: &str) -> Result<Vec<C64>> {
    let mut amps = Vec::new();
    for tok in value.split_whitespace() {
        let (re, im) = tok.split_once(',').ok_or_else(|| {
            parse_err(
                line,
                format!("amplitude `{tok}` must be a `re,im` pair, e.g. `0.5,-0.1`"),
            )
        })?;
        amps.push(C64::new(
            parse_f64(line, "amplitudes", re)?,
            parse_f64(line, "amplitudes", im)?,
        ));
    }
    if amps.is_empty() {
        return Err(parse_err(line, "`amplitudes` must list at least one `re,im` pair"));
    }
    Ok(amps)
}

impl ScenarioConfig {
    /// Parses the flat key-value config format. Sections `[scenario]`
    /// (name, kind, t_final, sample_dt, output_dir), `[hamiltonian]`
    /// (c1..c5 for two_qubit, matrix_file for custom), `[initial]`
    /// (amplitudes as whitespace-separated `re,im` pairs), `[bath]`
    /// (kind = none | markovian | explicit, gamma, oscillators, cutoff) and
    /// `[integrator]` (method, tolerances, steps) — `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::parse(text)?;

        let (kind_line, kind_tag) = raw.require("scenario", "kind")?;
        let kind = match kind_tag.as_str() {
            "two_qubit" => ScenarioKind::TwoQubit,
            "fmo" => ScenarioKind::Fmo,
            "custom" => ScenarioKind::Custom,
            other => {
                return Err(parse_err(
                    kind_line,
                    format!("`kind` must be two_qubit, fmo or custom, got `{other}`"),
                ))
            }
        };
        let name = raw
            .take("scenario", "name")
            .map(|(_, v)| v)
            .unwrap_or_else(|| kind.tag().to_string());
        let (line, v) = raw.require("scenario", "t_final")?;
        let t_final = parse_f64(line, "t_final", &v)?;
        let (line, v) = raw.require("scenario", "sample_dt")?;
        let sample_dt = parse_f64(line, "sample_dt", &v)?;
        let output_dir = raw
            .take("scenario", "output_dir")
            .map(|(_, v)| PathBuf::from(v))
            .unwrap_or_else(|| PathBuf::from("."));

        let hamiltonian = match kind {
            ScenarioKind::TwoQubit => {
                let mut coeff = |key: &str, default: f64| -> Result<f64> {
                    match raw.take("hamiltonian", key) {
                        Some((line, v)) => parse_f64(line, key, &v),
                        None => Ok(default),
                    }
                };
                let (d1, d2, d3) = DEFAULT_TWO_QUBIT_C;
                let c1 = coeff("c1", d1)?;
                let c2 = coeff("c2", d2)?;
                let c3 = coeff("c3", d3)?;
                let c4 = coeff("c4", 0.0)?;
                let c5 = coeff("c5", 0.0)?;
                HamiltonianSource::TwoQubit(TwoQubitCoefficients::new(c1, c2, c3, c4, c5))
            }
            ScenarioKind::Fmo => HamiltonianSource::BundledFmo,
            ScenarioKind::Custom => {
                let (_, path) = raw.require("hamiltonian", "matrix_file")?;
                HamiltonianSource::MatrixFile(PathBuf::from(path))
            }
        };

        let (line, v) = raw.require("initial", "amplitudes")?;
        let initial_amplitudes = parse_amplitudes(line, &v)?;

        let bath = match raw.take("bath", "kind") {
            None => BathConfig::None,
            Some((line, tag)) => match tag.as_str() {
                "none" => BathConfig::None,
                "markovian" => {
                    let (gline, gv) = raw.require("bath", "gamma")?;
                    BathConfig::Markovian(parse_f64_list(gline, "gamma", &gv)?)
                }
                "explicit" => {
                    let (gline, gv) = raw.require("bath", "gamma")?;
                    let (oline, ov) = raw.require("bath", "oscillators")?;
                    let cutoff = match raw.take("bath", "cutoff") {
                        Some((cline, cv)) if cv != "auto" => {
                            Some(parse_f64(cline, "cutoff", &cv)?)
                        }
                        _ => None,
                    };
                    BathConfig::Explicit {
                        gamma: parse_f64(gline, "gamma", &gv)?,
                        oscillators: parse_usize(oline, "oscillators", &ov)?,
                        cutoff,
                    }
                }
                other => {
                    return Err(parse_err(
                        line,
                        format!("bath `kind` must be none, markovian or explicit, got `{other}`"),
                    ))
                }
            },
        };

        let mut integrator = IntegratorConfig::default();
        if let Some((line, v)) = raw.take("integrator", "method") {
            integrator.method = match v.as_str() {
                "adaptive" => Method::AdaptiveRk54,
                "fixed" => Method::FixedRk4,
                other => {
                    return Err(parse_err(
                        line,
                        format!("`method` must be adaptive or fixed, got `{other}`"),
                    ))
                }
            };
        }
        let mut num = |key: &str, slot: &mut f64| -> Result<()> {
            if let Some((line, v)) = raw.take("integrator", key) {
                *slot = parse_f64(line, key, &v)?;
            }
            Ok(())
        };
        num("abs_tol", &mut integrator.abs_tol)?;
        num("rel_tol", &mut integrator.rel_tol)?;
        num("dt_initial", &mut integrator.dt_initial)?;
        num("dt_max", &mut integrator.dt_max)?;
        num("rechart_threshold", &mut integrator.rechart_threshold)?;
        num("implicit_tol", &mut integrator.implicit_tol)?;
        if let Some((line, v)) = raw.take("integrator", "implicit_max_iter") {
            integrator.implicit_max_iter = parse_usize(line, "implicit_max_iter", &v)?;
        }

        raw.finish()?;
        Ok(Self {
            name,
            kind,
            hamiltonian,
            initial_amplitudes,
            bath,
            t_final,
            sample_dt,
            integrator,
            output_dir,
        })
    }

    /// Reads and parses a config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Serializes to the same text format [`parse`](Self::parse) reads;
    /// `parse(serialize(cfg))` reconstructs an equal config.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[scenario]");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "kind = {}", self.kind.tag());
        let _ = writeln!(s, "t_final = {}", self.t_final);
        let _ = writeln!(s, "sample_dt = {}", self.sample_dt);
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s);
        match &self.hamiltonian {
            HamiltonianSource::TwoQubit(c) => {
                let _ = writeln!(s, "[hamiltonian]");
                let _ = writeln!(s, "c1 = {}", c.c1);
                let _ = writeln!(s, "c2 = {}", c.c2);
                let _ = writeln!(s, "c3 = {}", c.c3);
                let _ = writeln!(s, "c4 = {}", c.c4);
                let _ = writeln!(s, "c5 = {}", c.c5);
                let _ = writeln!(s);
            }
            HamiltonianSource::BundledFmo => {}
            HamiltonianSource::MatrixFile(path) => {
                let _ = writeln!(s, "[hamiltonian]");
                let _ = writeln!(s, "matrix_file = {}", path.display());
                let _ = writeln!(s);
            }
        }
        let _ = writeln!(s, "[initial]");
        let amps: Vec<String> = self
            .initial_amplitudes
            .iter()
            .map(|a| format!("{},{}", a.re, a.im))
            .collect();
        let _ = writeln!(s, "amplitudes = {}", amps.join(" "));
        let _ = writeln!(s);
        let _ = writeln!(s, "[bath]");
        match &self.bath {
            BathConfig::None => {
                let _ = writeln!(s, "kind = none");
            }
            BathConfig::Markovian(gammas) => {
                let _ = writeln!(s, "kind = markovian");
                let list: Vec<String> = gammas.iter().map(|g| format!("{g}")).collect();
                let _ = writeln!(s, "gamma = {}", list.join(" "));
            }
            BathConfig::Explicit {
                gamma,
                oscillators,
                cutoff,
            } => {
                let _ = writeln!(s, "kind = explicit");
                let _ = writeln!(s, "gamma = {gamma}");
                let _ = writeln!(s, "oscillators = {oscillators}");
                match cutoff {
                    Some(c) => {
                        let _ = writeln!(s, "cutoff = {c}");
                    }
                    None => {
                        let _ = writeln!(s, "cutoff = auto");
                    }
                }
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "[integrator]");
        let method = match self.integrator.method {
            Method::AdaptiveRk54 => "adaptive",
            Method::FixedRk4 => "fixed",
        };
        let _ = writeln!(s, "method = {method}");
        let _ = writeln!(s, "abs_tol = {}", self.integrator.abs_tol);
        let _ = writeln!(s, "rel_tol = {}", self.integrator.rel_tol);
        let _ = writeln!(s, "dt_initial = {}", self.integrator.dt_initial);
        let _ = writeln!(s, "dt_max = {}", self.integrator.dt_max);
        let _ = writeln!(s, "rechart_threshold = {}", self.integrator.rechart_threshold);
        let _ = writeln!(s, "implicit_tol = {}", self.integrator.implicit_tol);
        let _ = writeln!(s, "implicit_max_iter = {}", self.integrator.implicit_max_iter);
        s
    }

    /// Copy with the damping replaced by a single broadcast value,
    /// preserving the bath kind (memoryless stays memoryless, explicit
    /// keeps its discretization, isolated becomes memoryless).
    pub fn with_gamma(&self, gamma: f64) -> Self {
        let mut cfg = self.clone();
        cfg.bath = match &self.bath {
            BathConfig::None | BathConfig::Markovian(_) => BathConfig::Markovian(vec![gamma]),
            BathConfig::Explicit {
                oscillators,
                cutoff,
                ..
            } => BathConfig::Explicit {
                gamma,
                oscillators: *oscillators,
                cutoff: *cutoff,
            },
        };
        cfg
    }
}

// --- running ------------------------------------------------------------

/// Files produced by one run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    /// The trajectory CSV.
    pub trajectory_csv: PathBuf,
    /// The quantum-oracle comparison CSV, when requested and applicable.
    pub oracle_csv: Option<PathBuf>,
    /// System dimension (drives the plot layout).
    pub dim: usize,
}

/// Builds the Hamiltonian a config describes.
pub fn build_hamiltonian(cfg: &ScenarioConfig) -> Result<HermitianOperator> {
    match &cfg.hamiltonian {
        HamiltonianSource::TwoQubit(c) => two_qubit_hamiltonian(c),
        HamiltonianSource::BundledFmo => Ok(fmo_hamiltonian()),
        HamiltonianSource::MatrixFile(path) => HermitianOperator::from_file(path),
    }
}

/// Chart anchor rule: prefer the last level (the four-level closed forms'
/// chart) when its amplitude is not negligible, otherwise the largest one.
pub fn choose_pivot(amps: &AmplitudeVector) -> usize {
    let v = amps.amps();
    let last = v.len() - 1;
    let max = v.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if v[last].norm() >= 0.1 * max {
        last
    } else {
        (0..v.len())
            .max_by(|&i, &j| v[i].norm().partial_cmp(&v[j].norm()).unwrap())
            .unwrap_or(last)
    }
}

fn is_isolated(bath: &BathConfig) -> bool {
    match bath {
        BathConfig::None => true,
        BathConfig::Markovian(gammas) => gammas.iter().all(|g| *g == 0.0),
        BathConfig::Explicit { .. } => false,
    }
}

/// Largest eigenvalue spread of the operator in internal units.
fn spectral_spread(h: &HermitianOperator) -> f64 {
    let eig = h.in_internal_units().matrix().clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min
}

fn integrate_system(
    cfg: &ScenarioConfig,
    h: &HermitianOperator,
    amps: &AmplitudeVector,
) -> Result<Trajectory> {
    let initial = amps.to_projective(choose_pivot(amps))?;
    let m = initial.dim() - 1;
    match &cfg.bath {
        BathConfig::None => {
            dynamics::integrate(h, &initial, None, cfg.t_final, cfg.sample_dt, &cfg.integrator)
        }
        BathConfig::Markovian(gammas) => {
            let spec = if gammas.len() == 1 {
                MarkovianBathSpec::uniform(gammas[0], m)?
            } else {
                if gammas.len() != m {
                    return Err(Error::DimensionMismatch {
                        context: "damping constants vs. coordinate count",
                        expected: m,
                        found: gammas.len(),
                    });
                }
                MarkovianBathSpec::new(gammas.clone())?
            };
            dynamics::integrate(
                h,
                &initial,
                Some(&spec),
                cfg.t_final,
                cfg.sample_dt,
                &cfg.integrator,
            )
        }
        BathConfig::Explicit {
            gamma,
            oscillators,
            cutoff,
        } => {
            let cutoff = cutoff.unwrap_or_else(|| EXPLICIT_BATH_CUTOFF_FACTOR * spectral_spread(h));
            let gammas = vec![EXPLICIT_BATH_GAMMA_FACTOR * gamma; m];
            let spec = ExplicitBathSpec::ohmic(&gammas, cutoff, *oscillators)?;
            let bath0 = BathState::shifted_equilibrium(&spec, &initial)?;
            let run = crate::bath::integrate_full(
                h,
                &initial,
                &spec,
                &bath0,
                cfg.t_final,
                cfg.sample_dt,
                &cfg.integrator,
            )?;
            Ok(run.system().clone())
        }
    }
}

fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_header(dim: usize, two_qubit_channels: bool) -> String {
    let mut header = String::from("t");
    for k in 0..dim {
        let _ = write!(header, ",pop_{k}");
    }
    header.push_str(",energy");
    if two_qubit_channels {
        header.push_str(",z,concurrence");
    }
    header
}

#[allow(clippy::too_many_arguments)]
fn write_csv(
    path: &Path,
    times: &[f64],
    populations: &[DVector<f64>],
    energy: &[f64],
    z: Option<&[f64]>,
    conc: Option<&[f64]>,
) -> Result<()> {
    let dim = populations.first().map(|p| p.len()).unwrap_or(0);
    let mut out = String::new();
    out.push_str(&csv_header(dim, z.is_some()));
    out.push('\n');
    for i in 0..times.len() {
        let _ = write!(out, "{}", format_float(times[i]));
        for k in 0..dim {
            let _ = write!(out, ",{}", format_float(populations[i][k]));
        }
        let _ = write!(out, ",{}", format_float(energy[i]));
        if let (Some(z), Some(c)) = (z, conc) {
            let _ = write!(out, ",{},{}", format_float(z[i]), format_float(c[i]));
        }
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Runs one scenario: integrates the configured flow and writes
/// `<output_dir>/<name>.csv` with columns
/// `t,pop_0..pop_{N-1},energy[,z,concurrence]` (the last two only for
/// four-level systems). With `emit_oracle` set and an isolated (or
/// zero-damping) run, also writes `<name>_oracle.csv` with the same columns
/// from the Schrödinger solution.
pub fn run_scenario(cfg: &ScenarioConfig, emit_oracle: bool) -> Result<RunArtifacts> {
    let h = build_hamiltonian(cfg)?;
    let amps = AmplitudeVector::normalized(DVector::from_vec(cfg.initial_amplitudes.clone()))?;
    if h.dim() != amps.dim() {
        return Err(Error::DimensionMismatch {
            context: "Hamiltonian vs. initial state dimension",
            expected: h.dim(),
            found: amps.dim(),
        });
    }
    fs::create_dir_all(&cfg.output_dir)?;

    let trajectory = integrate_system(cfg, &h, &amps)?;
    let series = ObservableSeries::from_trajectory(&trajectory)?;
    let csv_path = cfg.output_dir.join(format!("{}.csv", cfg.name));
    write_csv(
        &csv_path,
        series.times(),
        series.populations(),
        series.energy(),
        series.z(),
        series.concurrence(),
    )?;

    let oracle_csv = if emit_oracle && is_isolated(&cfg.bath) {
        let reference =
            oracle::integrate_schrodinger(&h, &amps, cfg.t_final, cfg.sample_dt, &cfg.integrator)?;
        let pops: Vec<DVector<f64>> = reference
            .amplitudes()
            .iter()
            .map(populations_from_amplitudes)
            .collect();
        let (z, conc) = if h.dim() == 4 {
            let mut z = Vec::with_capacity(reference.times().len());
            let mut c = Vec::with_capacity(reference.times().len());
            for a in reference.amplitudes() {
                z.push(quaternionic_z_amplitudes(a)?);
                c.push(concurrence_amplitudes(a)?);
            }
            (Some(z), Some(c))
        } else {
            (None, None)
        };
        let path = cfg.output_dir.join(format!("{}_oracle.csv", cfg.name));
        write_csv(
            &path,
            reference.times(),
            &pops,
            reference.energy(),
            z.as_deref(),
            conc.as_deref(),
        )?;
        Some(path)
    } else {
        None
    };

    Ok(RunArtifacts {
        trajectory_csv: csv_path,
        oracle_csv,
        dim: h.dim(),
    })
}

/// Runs the scenario once per damping value, writing files suffixed
/// `_gamma<value>`. Errors with [`Error::EmptySweep`] when `values` is
/// empty.
pub fn sweep(cfg: &ScenarioConfig, values: &[f64], emit_oracle: bool) -> Result<Vec<RunArtifacts>> {
    if values.is_empty() {
        return Err(Error::EmptySweep);
    }
    values
        .iter()
        .map(|&gamma| {
            let mut run_cfg = cfg.with_gamma(gamma);
            run_cfg.name = format!("{}_gamma{}", cfg.name, gamma);
            run_scenario(&run_cfg, emit_oracle)
        })
        .collect()
}

/// Writes `plot.gp` next to the CSVs: a gnuplot script with population,
/// imbalance and concurrence panels for four-level runs, or a single
/// all-populations panel otherwise. Errors with [`Error::EmptySweep`] on an
/// empty artifact list.
pub fn emit_plot_script(dir: &Path, artifacts: &[RunArtifacts]) -> Result<PathBuf> {
    let first = artifacts.first().ok_or(Error::EmptySweep)?;
    let dim = first.dim;
    let stems: Vec<(String, String)> = artifacts
        .iter()
        .map(|a| {
            let file = a
                .trajectory_csv
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default();
            let stem = a
                .trajectory_csv
                .file_stem()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default();
            (file, stem.replace('_', " "))
        })
        .collect();

    let mut s = String::new();
    let _ = writeln!(s, "# Generated trajectory plots; run with `gnuplot plot.gp`.");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 1400,1000");
    let _ = writeln!(s, "set output 'trajectories.png'");
    let _ = writeln!(s, "set key outside right");
    let _ = writeln!(s, "set xlabel 't'");

    let population_plot = |s: &mut String| {
        let mut terms = Vec::new();
        for (file, label) in &stems {
            for k in 0..dim {
                terms.push(format!(
                    "'{file}' using 1:{} with lines title '{label} pop {k}'",
                    k + 2
                ));
            }
        }
        let _ = writeln!(s, "set title 'Populations'");
        let _ = writeln!(s, "plot {}", terms.join(", \\\n     "));
    };

    if dim == 4 {
        let _ = writeln!(s, "set multiplot layout 2,2");
        population_plot(&mut s);
        let z_col = dim + 3;
        let c_col = dim + 4;
        let _ = writeln!(s, "set title 'Population imbalance z'");
        let terms: Vec<String> = stems
            .iter()
            .map(|(file, label)| format!("'{file}' using 1:{z_col} with lines title '{label}'"))
            .collect();
        let _ = writeln!(s, "plot {}", terms.join(", \\\n     "));
        let _ = writeln!(s, "set title 'Concurrence'");
        let terms: Vec<String> = stems
            .iter()
            .map(|(file, label)| format!("'{file}' using 1:{c_col} with lines title '{label}'"))
            .collect();
        let _ = writeln!(s, "plot {}", terms.join(", \\\n     "));
        let _ = writeln!(s, "unset multiplot");
    } else {
        population_plot(&mut s);
    }

    let path = dir.join("plot.gp");
    let mut file = fs::File::create(&path)?;
    file.write_all(s.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample_config_text(dir: &Path) -> String {
        format!(
            "# four-level demo\n\
             [scenario]\n\
             name = demo\n\
             kind = two_qubit\n\
             t_final = 1.0\n\
             sample_dt = 0.1\n\
             output_dir = {}\n\
             [hamiltonian]\n\
             c1 = 0\n\
             c2 = 2\n\
             c3 = 2\n\
             c4 = 1\n\
             c5 = 1\n\
             [initial]\n\
             amplitudes = 0.6324555320336759,0 0.6324555320336759,0 0,0 0.4472135954999579,0\n\
             [bath]\n\
             kind = markovian\n\
             gamma = 0.1\n",
            dir.display()
        )
    }

    #[test]
    fn parse_and_serialize_round_trip() {
        let dir = tempdir().unwrap();
        let text = sample_config_text(dir.path());
        let cfg = ScenarioConfig::parse(&text).unwrap();
        assert_eq!(cfg.name, "demo");
        assert_eq!(cfg.kind, ScenarioKind::TwoQubit);
        assert_eq!(cfg.bath, BathConfig::Markovian(vec![0.1]));
        let reparsed = ScenarioConfig::parse(&cfg.serialize()).unwrap();
        assert_eq!(cfg, reparsed);
    }

    #[test]
    fn presets_round_trip() {
        for name in [
            "two_qubit_c4c5_0",
            "two_qubit_c4c5_1",
            "fmo_isolated",
            "fmo_damped",
        ] {
            let p = preset(name).unwrap();
            let reparsed = ScenarioConfig::parse(&p.config.serialize()).unwrap();
            assert_eq!(p.config, reparsed, "round trip failed for {name}");
        }
        assert!(preset("no_such_scenario").is_err());
    }

    #[test]
    fn missing_t_final_is_named() {
        let text = "[scenario]\nkind = two_qubit\nsample_dt = 0.1\n\
                    [initial]\namplitudes = 1,0 0,0 0,0 0,0\n";
        match ScenarioConfig::parse(text) {
            Err(Error::ConfigParse { message, .. }) => {
                assert!(message.contains("t_final"), "message: {message}");
            }
            other => panic!("expected ConfigParse, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let dir = tempdir().unwrap();
        let text = sample_config_text(dir.path()) + "typo_key = 3\n";
        match ScenarioConfig::parse(&text) {
            Err(Error::ConfigParse { line, message }) => {
                assert!(message.contains("typo_key"));
                assert!(line > 0);
            }
            other => panic!("expected ConfigParse, got {other:?}"),
        }
    }

    #[test]
    fn malformed_amplitude_is_rejected() {
        let text = "[scenario]\nkind = two_qubit\nt_final = 1\nsample_dt = 0.1\n\
                    [initial]\namplitudes = 1.0 0,0 0,0 0,0\n";
        match ScenarioConfig::parse(text) {
            Err(Error::ConfigParse { message, .. }) => {
                assert!(message.contains("re,im"), "message: {message}");
            }
            other => panic!("expected ConfigParse, got {other:?}"),
        }
    }

    #[test]
    fn pivot_rule_prefers_last_level_then_largest() {
        let amps = AmplitudeVector::normalized(DVector::from_vec(two_qubit_initial_amplitudes()))
            .unwrap();
        assert_eq!(choose_pivot(&amps), 3);
        let amps =
            AmplitudeVector::normalized(DVector::from_vec(fmo_site_one_amplitudes())).unwrap();
        assert_eq!(choose_pivot(&amps), 0);
    }

    fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
        let text = fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines
            .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
            .collect();
        (header, rows)
    }

    #[test]
    fn run_writes_csv_with_unit_population_rows() {
        let dir = tempdir().unwrap();
        let text = sample_config_text(dir.path());
        let cfg = ScenarioConfig::parse(&text).unwrap();
        let artifacts = run_scenario(&cfg, false).unwrap();
        let (header, rows) = read_rows(&artifacts.trajectory_csv);
        assert_eq!(
            header,
            ["t", "pop_0", "pop_1", "pop_2", "pop_3", "energy", "z", "concurrence"]
        );
        assert_eq!(rows.len(), 11);
        for row in &rows {
            let sum: f64 = row[1..5].iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "population sum {sum}");
        }
    }

    #[test]
    fn identical_configs_give_byte_identical_csv() {
        let dir = tempdir().unwrap();
        let text = sample_config_text(dir.path());
        let cfg = ScenarioConfig::parse(&text).unwrap();
        run_scenario(&cfg, false).unwrap();
        let first = fs::read(dir.path().join("demo.csv")).unwrap();
        run_scenario(&cfg, false).unwrap();
        let second = fs::read(dir.path().join("demo.csv")).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn oracle_comparison_matches_isolated_run() {
        let dir = tempdir().unwrap();
        let mut cfg = preset("two_qubit_c4c5_0").unwrap().config;
        cfg.t_final = 2.0;
        cfg.sample_dt = 0.05;
        cfg.output_dir = dir.path().to_path_buf();
        cfg.bath = BathConfig::None;
        let artifacts = run_scenario(&cfg, true).unwrap();
        let oracle_csv = artifacts.oracle_csv.expect("oracle CSV requested");
        let (_, rows) = read_rows(&artifacts.trajectory_csv);
        let (_, oracle_rows) = read_rows(&oracle_csv);
        assert_eq!(rows.len(), oracle_rows.len());
        for (r, o) in rows.iter().zip(&oracle_rows) {
            for k in 1..5 {
                assert!((r[k] - o[k]).abs() < 1e-8, "pop deviation {}", r[k] - o[k]);
            }
        }
    }

    #[test]
    fn damped_runs_do_not_emit_oracle() {
        let dir = tempdir().unwrap();
        let text = sample_config_text(dir.path());
        let cfg = ScenarioConfig::parse(&text).unwrap();
        let artifacts = run_scenario(&cfg, true).unwrap();
        assert!(artifacts.oracle_csv.is_none());
    }

    #[test]
    fn sweep_suffixes_filenames_and_rejects_empty() {
        let dir = tempdir().unwrap();
        let text = sample_config_text(dir.path());
        let cfg = ScenarioConfig::parse(&text).unwrap();
        assert!(matches!(sweep(&cfg, &[], false), Err(Error::EmptySweep)));
        let artifacts = sweep(&cfg, &[0.0, 1.0], false).unwrap();
        let names: Vec<String> = artifacts
            .iter()
            .map(|a| {
                a.trajectory_csv
                    .file_name()
                    .unwrap()
                    .to_string_lossy()
                    .into_owned()
            })
            .collect();
        assert_eq!(names, ["demo_gamma0.csv", "demo_gamma1.csv"]);
    }

    #[test]
    fn fmo_preset_starts_on_site_one() {
        let dir = tempdir().unwrap();
        let mut preset = preset("fmo_isolated").unwrap();
        preset.config.t_final = 0.05;
        preset.config.sample_dt = 0.01;
        preset.config.output_dir = dir.path().to_path_buf();
        let artifacts = run_scenario(&preset.config, false).unwrap();
        let (header, rows) = read_rows(&artifacts.trajectory_csv);
        assert_eq!(header.len(), 9); // t, 7 populations, energy
        assert!((rows[0][1] - 1.0).abs() < 1e-12);
        for k in 2..8 {
            assert!(rows[0][k].abs() < 1e-12);
        }
    }

    #[test]
    fn plot_script_has_expected_panels() {
        let dir = tempdir().unwrap();
        let text = sample_config_text(dir.path());
        let cfg = ScenarioConfig::parse(&text).unwrap();
        let artifacts = sweep(&cfg, &[0.0, 0.1], false).unwrap();
        let script = emit_plot_script(dir.path(), &artifacts).unwrap();
        let body = fs::read_to_string(&script).unwrap();
        assert!(body.contains("Populations"));
        assert!(body.contains("Concurrence"));
        assert!(body.contains("imbalance"));
        assert!(body.contains("demo_gamma0.csv"));
        assert!(matches!(
            emit_plot_script(dir.path(), &[]),
            Err(Error::EmptySweep)
        ));
    }

    #[test]
    fn explicit_bath_config_runs_and_matches_memoryless() {
        let dir = tempdir().unwrap();
        let mut cfg = preset("two_qubit_c4c5_0").unwrap().config;
        // Keep the run shorter than the n = 100 discretization's Poisson
        // recurrence (~0.089 for the auto cutoff), where the finite bath
        // stops looking memoryless by construction.
        cfg.name = "explicit".into();
        cfg.t_final = 0.08;
        cfg.sample_dt = 0.008;
        cfg.output_dir = dir.path().to_path_buf();
        cfg.integrator.abs_tol = 1e-8;
        cfg.integrator.rel_tol = 1e-8;
        cfg.bath = BathConfig::Explicit {
            gamma: 1.0,
            oscillators: 100,
            cutoff: None,
        };
        let explicit = run_scenario(&cfg, false).unwrap();
        cfg.name = "memoryless".into();
        cfg.bath = BathConfig::Markovian(vec![1.0]);
        let markov = run_scenario(&cfg, false).unwrap();
        let (_, a) = read_rows(&explicit.trajectory_csv);
        let (_, b) = read_rows(&markov.trajectory_csv);
        for (ra, rb) in a.iter().zip(&b) {
            for k in 1..5 {
                assert!((ra[k] - rb[k]).abs() < 0.05, "deviation {}", ra[k] - rb[k]);
            }
        }
    }
}
