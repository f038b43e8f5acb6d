//! Run configuration: JSON schema, defaults and validation.

use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use qlink_core::evolution::TrotterPlan;
use qlink_core::noise::NoiseSpec;
use qlink_core::operators::MagneticSign;
use qlink_core::{Budget, ChargeConfig, Direction, GaugeModel, Lattice, LinkId, Path, QlmError, Result};

/// Lattice path given by shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    /// Counterclockwise unit square with lower-left corner `(x, y)`.
    Plaquette { x: usize, y: usize },
    /// Counterclockwise `w × h` rectangle.
    Rectangle { x: usize, y: usize, w: usize, h: usize },
    /// Non-contractible loop through `(x, y)` along `dir`.
    Winding { x: usize, y: usize, dir: Direction },
}

impl PathSpec {
    pub fn build(&self, lattice: &Lattice) -> Result<Path> {
        match *self {
            PathSpec::Plaquette { x, y } => lattice.rectangular_loop(lattice.site(x as i64, y as i64), 1, 1),
            PathSpec::Rectangle { x, y, w, h } => lattice.rectangular_loop(lattice.site(x as i64, y as i64), w, h),
            PathSpec::Winding { x, y, dir } => Ok(lattice.wrapping_loop(lattice.site(x as i64, y as i64), dir)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperpositionTerm {
    pub state: InitialState,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Vacuum {},
    FluxLoop { path: PathSpec, e: i32 },
    Superposition { terms: Vec<SuperpositionTerm> },
    /// A state written by `qlink evolve` (`final_state.json`).
    File { path: String },
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Vacuum {}
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    ElectricEnergy {},
    MeanPlaquette {},
    Plaquette { p: usize },
    WilsonLoop { path: PathSpec },
    /// `winding_x` and `winding_y` (U(1) only).
    Winding {},
    /// Entanglement entropy in bits of the given links.
    Entropy { links: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisChoice {
    Physical,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSpec {
    /// Number of lowest eigenvalues written.
    pub k: usize,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        SpectrumSpec { k: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltySpec {
    pub lambdas: Vec<f64>,
    pub epsilon: f64,
    pub time: f64,
    /// Perturbed links; `None` means all links.
    pub links: Option<Vec<usize>>,
}

impl Default for PenaltySpec {
    fn default() -> Self {
        PenaltySpec {
            lambdas: vec![0.0, 1.0, 10.0, 100.0],
            epsilon: 0.1,
            time: 5.0,
            links: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub basis: String,
    pub basis_summary: String,
    pub spectrum: String,
    pub penalty_check: String,
    pub stream: String,
    pub summary: String,
    pub final_state: String,
    pub check: String,
    pub penalty_sweep: String,
    pub su3_singlet: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            basis: "basis.json".into(),
            basis_summary: "basis_summary.json".into(),
            spectrum: "spectrum.csv".into(),
            penalty_check: "penalty_check.csv".into(),
            stream: "trajectory.jsonl".into(),
            summary: "summary.csv".into(),
            final_state: "final_state.json".into(),
            check: "check.json".into(),
            penalty_sweep: "penalty_sweep.csv".into(),
            su3_singlet: "su3_singlet.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: GaugeModel,
    pub lattice: Lattice,
    pub g2: f64,
    pub magnetic_sign: Option<MagneticSign>,
    /// `false` drops the magnetic term.
    pub magnetic: bool,
    pub charges: Option<ChargeConfig>,
    pub basis: Option<BasisChoice>,
    pub initial_state: InitialState,
    pub trotter: TrotterPlan,
    pub observables: Option<Vec<ObservableSpec>>,
    pub entropy_partition: Option<Vec<usize>>,
    pub noise: Option<NoiseSpec>,
    pub spectrum: SpectrumSpec,
    pub penalty: PenaltySpec,
    pub outputs: OutputSpec,
    pub seed: u64,
    pub budget: Budget,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: GaugeModel::U1 { s: 1 },
            lattice: Lattice::new(2, 2).expect("2x2 lattice"),
            g2: 1.0,
            magnetic_sign: None,
            magnetic: true,
            charges: None,
            basis: None,
            initial_state: InitialState::Vacuum {},
            trotter: TrotterPlan {
                dt: 0.1,
                steps: 10,
                ordering: Default::default(),
                symmetric: false,
            },
            observables: None,
            entropy_partition: None,
            noise: None,
            spectrum: SpectrumSpec::default(),
            penalty: PenaltySpec::default(),
            outputs: OutputSpec::default(),
            seed: 0,
            budget: Budget::default(),
        }
    }
}

fn check_links(what: &str, links: &[usize], lattice: &Lattice) -> Result<()> {
    if let Some(&l) = links.iter().find(|&&l| l >= lattice.n_links()) {
        return Err(QlmError::InvalidArgument(format!(
            "{what}: link {l} out of range for {} links",
            lattice.n_links()
        )));
    }
    Ok(())
}

fn check_state(s: &InitialState, cfg: &RunConfig) -> Result<()> {
    match s {
        InitialState::Vacuum {} | InitialState::File { .. } => Ok(()),
        InitialState::FluxLoop { path, .. } => path.build(&cfg.lattice).map(|_| ()),
        InitialState::Superposition { terms } => {
            if terms.is_empty() {
                return Err(QlmError::InvalidArgument("superposition without terms".into()));
            }
            terms.iter().try_for_each(|t| check_state(&t.state, cfg))
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| QlmError::Serialization(format!("config: {e}")))
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QlmError::Serialization(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Fills every defaulted convention and validates the result.
    pub fn resolve(mut self) -> Result<Self> {
        self.model.validate()?;
        if !(self.g2 > 0.0 && self.g2.is_finite()) {
            return Err(QlmError::InvalidArgument(format!("g2 = {} must be positive", self.g2)));
        }
        self.magnetic_sign.get_or_insert(MagneticSign::default_for(&self.model));
        let charges = self
            .charges
            .get_or_insert_with(|| ChargeConfig::neutral(&self.model, &self.lattice))
            .clone();
        charges.validate(&self.model, &self.lattice)?;
        let default_basis = if self.noise.is_some() { BasisChoice::Full } else { BasisChoice::Physical };
        let basis = *self.basis.get_or_insert(default_basis);
        if self.noise.is_some() && basis != BasisChoice::Full {
            return Err(QlmError::InvalidArgument("noise events act on the full basis".into()));
        }
        if self.noise.is_some() && !self.model.is_u1() {
            return Err(QlmError::InvalidModel(format!("{} has no ladder error model", self.model)));
        }
        self.trotter.validate()?;
        check_state(&self.initial_state, &self)?;
        let is_u1 = self.model.is_u1();
        let observables = self.observables.get_or_insert_with(|| {
            let mut v = vec![ObservableSpec::ElectricEnergy {}, ObservableSpec::MeanPlaquette {}];
            if is_u1 {
                v.push(ObservableSpec::Winding {});
            }
            v
        });
        for o in observables.iter() {
            match o {
                ObservableSpec::Plaquette { p } if *p >= self.lattice.n_plaquettes() => {
                    return Err(QlmError::InvalidArgument(format!("plaquette {p} out of range")));
                }
                ObservableSpec::WilsonLoop { path } => {
                    path.build(&self.lattice)?;
                }
                ObservableSpec::Winding {} if !is_u1 => {
                    return Err(QlmError::InvalidModel("winding numbers are defined for U(1) only".into()));
                }
                ObservableSpec::Entropy { links } => check_links("entropy", links, &self.lattice)?,
                _ => {}
            }
        }
        if let Some(p) = &self.entropy_partition {
            check_links("entropy_partition", p, &self.lattice)?;
        }
        if let Some(links) = &self.penalty.links {
            check_links("penalty.links", links, &self.lattice)?;
        }
        if self.penalty.lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(QlmError::InvalidArgument("penalty strengths must be finite and non-negative".into()));
        }
        if let Some(noise) = &self.noise {
            for ev in &noise.events {
                if ev.step > self.trotter.steps {
                    return Err(QlmError::InvalidArgument(format!(
                        "noise event at step {} after the last step {}",
                        ev.step, self.trotter.steps
                    )));
                }
            }
        }
        Ok(self)
    }

    pub fn sign(&self) -> MagneticSign {
        self.magnetic_sign.unwrap_or(MagneticSign::default_for(&self.model))
    }

    pub fn charges(&self) -> ChargeConfig {
        self.charges
            .clone()
            .unwrap_or_else(|| ChargeConfig::neutral(&self.model, &self.lattice))
    }

    pub fn penalty_links(&self) -> Vec<LinkId> {
        match &self.penalty.links {
            Some(l) => l.iter().map(|&k| LinkId(k)).collect(),
            None => self.lattice.links().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_default_round_trips() {
        let cfg = RunConfig::default().resolve().unwrap();
        assert_eq!(cfg.magnetic_sign, Some(MagneticSign::Minus));
        let again = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.resolve().unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"g2": 1.0, "colour": 3}"#).is_err());
        assert!(RunConfig::from_json(r#"{"trotter": {"dt": 0.1, "steps": 2, "order": 1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"initial_state": {"kind": "vacuum", "e": 1}}"#).is_err());
    }

    #[test]
    fn su2_defaults_to_plus_sign() {
        let cfg = RunConfig::from_json(r#"{"model": {"gauge": "su2", "j_max": 0.5}}"#)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(cfg.magnetic_sign, Some(MagneticSign::Plus));
        assert_eq!(cfg.observables.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn noise_selects_full_basis() {
        let cfg = RunConfig::from_json(r#"{"noise": {"events": [{"step": 1, "kind": "link_raise", "link": 0}]}}"#)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(cfg.basis, Some(BasisChoice::Full));
        let bad = RunConfig::from_json(r#"{"basis": "physical", "noise": {"events": []}}"#).unwrap();
        assert!(bad.resolve().is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            r#"{"g2": -1.0}"#,
            r#"{"lattice": {"lx": 0, "ly": 2}}"#,
            r#"{"charges": {"u1": [1, 0, 0, 0]}}"#,
            r#"{"observables": [{"kind": "plaquette", "p": 9}]}"#,
            r#"{"trotter": {"dt": 0.0, "steps": 3}}"#,
        ] {
            let r = RunConfig::from_json(text).and_then(RunConfig::resolve);
            assert!(r.is_err(), "{text}");
        }
    }
}
