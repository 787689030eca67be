use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::ConfigError;
use crate::cone::{csub_margin, Boundedness, CSubReport, OperatorKind, OperatorSpec};
use crate::field::{point_eigenvalues, q_hessian, Coord, FieldError, ModeSum, ScalarField, TorusGrid};
use crate::flow::{psh_background, FlowError, FlowProblem, FlowSettings};
use crate::quat::{max_asymmetry, HyperhermitianMatrix, Quaternion, HYPERHERMITIAN_TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointsPerDim {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorName {
    LogSigmaK,
    LogMooreMa,
    LogHessianQuotient,
    NMinusOnePsh,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: OperatorName,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub l: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DataRepr", into = "DataRepr")]
pub enum DataConfig {
    Explicit { modes: ModeSum },
    Manufactured { phi_star: ModeSum },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DataMode {
    Explicit,
    Manufactured,
}

// A plain struct rather than an internally tagged enum, so that error paths
// reach inside the mode sums.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataRepr {
    mode: DataMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modes: Option<ModeSum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi_star: Option<ModeSum>,
}

impl TryFrom<DataRepr> for DataConfig {
    type Error = String;

    fn try_from(r: DataRepr) -> Result<Self, String> {
        match (r.mode, r.modes, r.phi_star) {
            (DataMode::Explicit, Some(modes), None) => Ok(DataConfig::Explicit { modes }),
            (DataMode::Manufactured, None, Some(phi_star)) => Ok(DataConfig::Manufactured { phi_star }),
            (DataMode::Explicit, _, _) => Err("mode \"explicit\" takes exactly the field `modes`".into()),
            (DataMode::Manufactured, _, _) => Err("mode \"manufactured\" takes exactly the field `phi_star`".into()),
        }
    }
}

impl From<DataConfig> for DataRepr {
    fn from(d: DataConfig) -> Self {
        match d {
            DataConfig::Explicit { modes } => DataRepr {
                mode: DataMode::Explicit,
                modes: Some(modes),
                phi_star: None,
            },
            DataConfig::Manufactured { phi_star } => DataRepr {
                mode: DataMode::Manufactured,
                modes: None,
                phi_star: Some(phi_star),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub history: String,
    pub checkpoint: String,
    pub report: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            history: "history.csv".into(),
            checkpoint: "state.hktf".into(),
            report: "report.json".into(),
        }
    }
}

impl OutputConfig {
    pub fn history_path(&self) -> PathBuf {
        self.dir.join(&self.history)
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.dir.join(&self.checkpoint)
    }

    pub fn report_path(&self) -> PathBuf {
        self.dir.join(&self.report)
    }
}

/// The JSON document as written by the user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub n: usize,
    /// `[p, r]` pairs with `p ∈ 0..4` and `r ∈ 1..=n`; all `4n` when absent.
    #[serde(default)]
    pub active: Option<Vec<[usize; 2]>>,
    pub points_per_dim: PointsPerDim,
    pub operator: OperatorConfig,
    /// `n × n` entries, each `[e0, e1, e2, e3]`; identity when absent.
    #[serde(default)]
    pub omega: Option<Vec<Vec<[f64; 4]>>>,
    #[serde(default)]
    pub omega1: Option<Vec<Vec<[f64; 4]>>>,
    pub h: DataConfig,
    #[serde(default)]
    pub phi0: ModeSum,
    #[serde(default)]
    pub subsolution: Option<ModeSum>,
    #[serde(default = "defaults::tol_osc")]
    pub tol_osc: f64,
    #[serde(default = "defaults::dt_safety")]
    pub dt_safety: f64,
    #[serde(default = "defaults::dt_max")]
    pub dt_max: f64,
    #[serde(default = "defaults::max_steps")]
    pub max_steps: u64,
    #[serde(default = "defaults::max_rejections")]
    pub max_rejections: u32,
    #[serde(default)]
    pub checkpoint_every: u64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub force: bool,
}

mod defaults {
    use crate::flow::FlowSettings;

    pub fn tol_osc() -> f64 {
        FlowSettings::default().tol_osc
    }
    pub fn dt_safety() -> f64 {
        FlowSettings::default().dt_safety
    }
    pub fn dt_max() -> f64 {
        FlowSettings::default().dt_max
    }
    pub fn max_steps() -> u64 {
        FlowSettings::default().max_steps
    }
    pub fn max_rejections() -> u32 {
        FlowSettings::default().max_rejections
    }
}

impl RawConfig {
    pub fn settings(&self) -> FlowSettings {
        FlowSettings {
            tol_osc: self.tol_osc,
            dt_safety: self.dt_safety,
            dt_max: self.dt_max,
            max_steps: self.max_steps,
            max_rejections: self.max_rejections,
        }
    }
}

/// A validated experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub grid: TorusGrid,
    pub op: OperatorSpec,
    /// Background `Ω` entering `A = Ω + Hess_ℍ φ` (derived from `omega1`
    /// for the psh operator).
    pub omega: HyperhermitianMatrix,
    pub h: ScalarField,
    pub phi0: ScalarField,
    pub subsolution: Option<ScalarField>,
    /// Worst-point subsolution test, bounded operators only.
    pub csub: Option<CSubReport>,
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    pub fn settings(&self) -> FlowSettings {
        self.raw.settings()
    }

    pub fn output(&self) -> &OutputConfig {
        &self.raw.output
    }

    pub fn problem(&self) -> Result<FlowProblem, FlowError> {
        FlowProblem::new(
            self.op,
            self.omega.clone(),
            self.h.clone(),
            self.phi0.clone(),
            self.raw.settings(),
        )
    }
}

fn err(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

fn build_grid(raw: &RawConfig) -> Result<TorusGrid, ConfigError> {
    let n = raw.n;
    if n == 0 {
        return Err(err("n", "quaternionic dimension must be at least 1"));
    }
    let active: Vec<Coord> = match &raw.active {
        None => (0..n).flat_map(|r| (0..4).map(move |p| Coord::new(p, r))).collect(),
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(i, &[p, r])| {
                if p > 3 {
                    Err(err(format!("active[{i}][0]"), format!("component index {p} must be in 0..=3")))
                } else if r == 0 || r > n {
                    Err(err(format!("active[{i}][1]"), format!("quaternion index {r} must be in 1..={n}")))
                } else {
                    Ok(Coord::new(p, r - 1))
                }
            })
            .collect::<Result<_, _>>()?,
    };
    let sizes = match &raw.points_per_dim {
        PointsPerDim::Uniform(m) => vec![*m; active.len()],
        PointsPerDim::PerAxis(list) => list.clone(),
    };
    TorusGrid::new(n, active, sizes).map_err(|e| err("points_per_dim", e.to_string()))
}

fn build_operator(raw: &RawConfig) -> Result<OperatorSpec, ConfigError> {
    let o = &raw.operator;
    let need = |v: Option<usize>, name: &str| v.ok_or_else(|| err(format!("operator.{name}"), "missing"));
    let kind = match o.kind {
        OperatorName::LogSigmaK => OperatorKind::LogSigmaK(need(o.k, "k")?),
        OperatorName::LogMooreMa => OperatorKind::LogMooreMA,
        OperatorName::LogHessianQuotient => OperatorKind::LogHessianQuotient {
            k: need(o.k, "k")?,
            l: need(o.l, "l")?,
        },
        OperatorName::NMinusOnePsh => OperatorKind::NMinusOnePsh,
    };
    OperatorSpec::new(kind, raw.n).map_err(|e| err("operator", e.to_string()))
}

fn build_matrix(name: &str, n: usize, rows: &[Vec<[f64; 4]>]) -> Result<HyperhermitianMatrix, ConfigError> {
    if rows.len() != n {
        return Err(err(name, format!("expected {n} rows, found {}", rows.len())));
    }
    let mut entries = Vec::with_capacity(n * n);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(err(format!("{name}[{r}]"), format!("expected {n} entries, found {}", row.len())));
        }
        for (s, e) in row.iter().enumerate() {
            if e.iter().any(|v| !v.is_finite()) {
                return Err(err(format!("{name}[{r}][{s}]"), "entries must be finite"));
            }
            entries.push(Quaternion::from_array(*e));
        }
    }
    if let Some((r, s, dev)) = max_asymmetry(n, &entries) {
        if dev > HYPERHERMITIAN_TOL {
            let (r, s) = (r.min(s), r.max(s));
            let message = if r == s {
                format!("diagonal entry must be real (imaginary size {dev:e})")
            } else {
                format!("entry differs from the conjugate of {name}[{s}][{r}] by {dev:e}; matrix must be hyperhermitian")
            };
            return Err(err(format!("{name}[{r}][{s}]"), message));
        }
    }
    Ok(HyperhermitianMatrix::symmetrized(n, entries))
}

fn sample(name: &str, modes: &ModeSum, grid: &TorusGrid) -> Result<ScalarField, ConfigError> {
    modes.sample(grid).map_err(|e| match e {
        FieldError::Mode { path, message } => err(format!("{name}{path}"), message),
        other => err(name, other.to_string()),
    })
}

/// Worst grid point of the pointwise subsolution test.
fn subsolution_report(
    op: &OperatorSpec,
    omega: &HyperhermitianMatrix,
    sub: &ScalarField,
    h: &ScalarField,
) -> Result<CSubReport, ConfigError> {
    let hess = q_hessian(sub);
    let mut worst: Option<CSubReport> = None;
    for idx in 0..sub.len() {
        let lambda = point_eigenvalues(omega, &hess, idx).map_err(|e| err("subsolution", e.to_string()))?;
        let report = csub_margin(op, &lambda, h.values()[idx], 0.0)
            .map_err(|e| err("subsolution", format!("not admissible at grid point {idx}: {e}")))?;
        if worst.as_ref().is_none_or(|w| report.rho < w.rho) {
            worst = Some(report);
        }
    }
    Ok(worst.expect("grid is non-empty"))
}

pub fn parse_config(document: &str) -> Result<ExperimentConfig, ConfigError> {
    validate(parse_raw(document)?)
}

/// Schema checks only; `validate` does the rest.
pub fn parse_raw(document: &str) -> Result<RawConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn validate(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let grid = build_grid(&raw)?;
    let op = build_operator(&raw)?;
    raw.settings().validate().map_err(|m| err("settings", m))?;
    let n = raw.n;
    let omega = match (op.kind(), &raw.omega, &raw.omega1) {
        (OperatorKind::NMinusOnePsh, None, Some(w1)) => psh_background(&build_matrix("omega1", n, w1)?),
        (OperatorKind::NMinusOnePsh, None, None) => psh_background(&HyperhermitianMatrix::identity(n)),
        (OperatorKind::NMinusOnePsh, Some(_), _) => {
            return Err(err("omega", "the (n-1)-psh operator takes omega1; its background is derived"))
        }
        (_, _, Some(_)) => return Err(err("omega1", "only used by the n_minus_one_psh operator")),
        (_, Some(w), None) => build_matrix("omega", n, w)?,
        (_, None, None) => HyperhermitianMatrix::identity(n),
    };
    let phi0 = sample("phi0", &raw.phi0, &grid)?;
    let h = match &raw.h {
        DataConfig::Explicit { modes } => sample("h.modes", modes, &grid)?,
        DataConfig::Manufactured { phi_star } => {
            let phi_star = sample("h.phi_star", phi_star, &grid)?;
            crate::field::manufacture_h(&op, &omega, &phi_star).map_err(|e| err("h.phi_star", e.to_string()))?
        }
    };
    let subsolution = raw
        .subsolution
        .as_ref()
        .map(|s| sample("subsolution", s, &grid))
        .transpose()?;

    // Eager admissibility of the initial data.
    let hess0 = q_hessian(&phi0);
    crate::field::evaluate_operator(&op, &omega, &hess0).map_err(|e| err("phi0", e.to_string()))?;

    let mut warnings = Vec::new();
    let csub = if op.classify_f_infinity() == Boundedness::Bounded {
        let sub = subsolution.clone().unwrap_or_else(|| ScalarField::zeros(&grid));
        let report = subsolution_report(&op, &omega, &sub, &h)?;
        if !report.passes {
            let message = format!(
                "subsolution condition fails: min directional limit minus h is {:e} (needs > 0)",
                report.rho
            );
            if raw.force {
                warnings.push(format!("subsolution: {message} (continuing because force is set)"));
            } else {
                return Err(err("subsolution", message));
            }
        }
        Some(report)
    } else {
        None
    };

    Ok(ExperimentConfig {
        raw,
        grid,
        op,
        omega,
        h,
        phi0,
        subsolution,
        csub,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "n": 1,
        "points_per_dim": 8,
        "operator": {"kind": "log_moore_ma"},
        "h": {"mode": "manufactured", "phi_star": [{"amplitude": 0.3, "wave": [1, 0, 0, 0]}]}
    }"#;

    fn path_of(e: ConfigError) -> String {
        match e {
            ConfigError::Schema { path, .. } | ConfigError::Invalid { path, .. } => path,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.len(), 8usize.pow(4));
        assert_eq!(c.settings(), FlowSettings::default());
        assert_eq!(c.omega, HyperhermitianMatrix::identity(1));
        assert_eq!(c.phi0.sup_norm(), 0.0);
        assert!(c.csub.is_none());
        assert_eq!(c.raw.checkpoint_every, 0);
    }

    #[test]
    fn asymmetric_omega_names_entry() {
        let doc = r#"{
            "n": 2, "active": [[0, 1], [0, 2]], "points_per_dim": 8,
            "operator": {"kind": "log_sigma_k", "k": 1},
            "omega": [[[1,0,0,0], [0,0.5,0,0]], [[0,0.5,0,0], [1,0,0,0]]],
            "h": {"mode": "explicit", "modes": []}
        }"#;
        let e = parse_config(doc).unwrap_err();
        assert_eq!(path_of(e), "omega[0][1]");
    }

    #[test]
    fn nyquist_violation() {
        let doc = MINIMAL.replace("[1, 0, 0, 0]", "[4, 0, 0, 0]");
        let e = parse_config(&doc).unwrap_err();
        assert_eq!(path_of(e.clone()), "h.phi_star[0].wave[0]");
        assert!(e.to_string().contains("Nyquist"));
    }

    #[test]
    fn schema_errors_carry_paths() {
        let doc = MINIMAL.replace("\"amplitude\": 0.3", "\"amplitude\": \"big\"");
        assert_eq!(path_of(parse_config(&doc).unwrap_err()), "h.phi_star[0].amplitude");
        let doc = MINIMAL.replace("log_moore_ma", "log_moore");
        assert_eq!(path_of(parse_config(&doc).unwrap_err()), "operator.kind");
    }

    #[test]
    fn inadmissible_phi0_rejected() {
        let doc = MINIMAL.replace(
            "\"h\":",
            "\"phi0\": [{\"amplitude\": 8.0, \"wave\": [1, 0, 0, 0]}], \"h\":",
        );
        assert_eq!(path_of(parse_config(&doc).unwrap_err()), "phi0");
    }

    #[test]
    fn bounded_operator_requires_subsolution() {
        let base = r#"{
            "n": 2, "active": [[0, 1], [0, 2]], "points_per_dim": 8,
            "operator": {"kind": "log_hessian_quotient", "k": 1, "l": 2},
            "h": {"mode": "explicit", "modes": [{"amplitude": H, "wave": [0, 0]}]}
        }"#;
        let ok = parse_config(&base.replace("H", "0.1")).unwrap();
        assert!(ok.csub.as_ref().unwrap().passes);
        let bad = base.replace("H", "10.0");
        assert_eq!(path_of(parse_config(&bad).unwrap_err()), "subsolution");
        let forced = parse_config(&bad.replace("\"n\": 2,", "\"n\": 2, \"force\": true,")).unwrap();
        assert!(!forced.csub.as_ref().unwrap().passes);
        assert_eq!(forced.warnings.len(), 1);
    }

    #[test]
    fn psh_background_is_derived() {
        let doc = r#"{
            "n": 2, "active": [[0, 1], [0, 2]], "points_per_dim": 8,
            "operator": {"kind": "n_minus_one_psh"},
            "omega1": [[[2,0,0,0], [0,0,0,0]], [[0,0,0,0], [1,0,0,0]]],
            "h": {"mode": "explicit", "modes": []}
        }"#;
        let c = parse_config(doc).unwrap();
        assert_eq!(c.omega, HyperhermitianMatrix::diagonal(&[1.0, 2.0]));
    }
}
