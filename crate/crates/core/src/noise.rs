//! Scheduled error events, projective leakage checks, and the penalty
//! suppression experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{ChargeConfig, PhysicalBasis};
use crate::error::{QlmError, Result};
use crate::evolution::{chebyshev_evolve, record, EventRecord, EvolutionReport, ExactPropagator, Observer, TrotterPlan, Trotterizer};
use crate::lattice::LinkId;
use crate::observables::{gauge_violation, syndrome_sweep};
use crate::operators::{
    hamiltonian_exprs, link, penalty_expr, HamiltonianParts, MagneticSign, OperatorExpr, WorkingBasis,
};
use crate::states::{to_full, vacuum_state, StateVector};
use crate::Budget;

/// Leakage above this counts as a detection.
pub const DETECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseKind {
    /// Clipped raising operator on one link (gauge violating).
    LinkRaise { link: usize },
    /// Clipped lowering operator on one link (gauge violating).
    LinkLower { link: usize },
    /// Raising operator on a link drawn uniformly from the seeded stream.
    RandomLinkRaise {},
    /// `exp(iθE_ℓ)` (gauge preserving).
    Dephasing { link: usize, angle: f64 },
    /// Dephasing with `θ` drawn uniformly from `[−max_angle, max_angle]`.
    RandomDephasing { link: usize, max_angle: f64 },
}

/// Event applied right after Trotter step `step` (step 0: before the first
/// step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEvent {
    pub step: usize,
    #[serde(flatten)]
    pub kind: NoiseKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub events: Vec<NoiseEvent>,
    #[serde(default)]
    pub seed: u64,
    /// Projector check every this many steps; `None` disables checks.
    #[serde(default)]
    pub check_every: Option<usize>,
}

fn require_full<'a>(basis: &'a WorkingBasis, psi: &StateVector) -> Result<&'a crate::FullSpace> {
    let WorkingBasis::Full(space) = basis else {
        return Err(QlmError::InvalidArgument("error events act on the full tensor basis".into()));
    };
    space.tag().ensure_same(psi.tag())?;
    Ok(space)
}

fn apply_single(basis: &WorkingBasis, psi: &StateVector, m: link::LinkMatrix, link: LinkId) -> Result<(StateVector, f64)> {
    let space = require_full(basis, psi)?;
    if link.0 >= space.n_links() {
        return Err(QlmError::InvalidArgument(format!("unknown link {}", link.0)));
    }
    let out = OperatorExpr::single(link, m).apply_dense(space, psi.amps())?;
    let out = StateVector::new(psi.tag().clone(), out)?;
    let norm = out.norm();
    if norm == 0.0 {
        return Err(QlmError::AbsorbedByTruncation(link.0));
    }
    Ok((out.normalized()?, norm))
}

fn u1_truncation(basis: &WorkingBasis) -> Result<u32> {
    basis
        .model()
        .u1_truncation()
        .ok_or_else(|| QlmError::InvalidModel(format!("{} has no ladder error model", basis.model())))
}

/// `U_ℓ ψ / ‖U_ℓ ψ‖`, together with the norm before renormalization.
pub fn apply_link_raise_error(basis: &WorkingBasis, psi: &StateVector, link: LinkId) -> Result<(StateVector, f64)> {
    apply_single(basis, psi, link::u1_raise(u1_truncation(basis)?), link)
}

/// `U_ℓ† ψ / ‖U_ℓ† ψ‖`, together with the norm before renormalization.
pub fn apply_link_lower_error(basis: &WorkingBasis, psi: &StateVector, link: LinkId) -> Result<(StateVector, f64)> {
    apply_single(basis, psi, link::u1_lower(u1_truncation(basis)?), link)
}

/// `exp(iθE_ℓ) ψ`. Diagonal in the flux basis, so it acts on physical-basis
/// states as well.
pub fn apply_dephasing(basis: &WorkingBasis, psi: &StateVector, link: LinkId, angle: f64) -> Result<StateVector> {
    basis.tag().ensure_same(psi.tag())?;
    let s = u1_truncation(basis)?;
    if link.0 >= basis.lattice().n_links() {
        return Err(QlmError::InvalidArgument(format!("unknown link {}", link.0)));
    }
    let phase = link::u1_phase(s, angle);
    let space = basis.space();
    let amps = match basis {
        WorkingBasis::Full(_) => psi
            .amps()
            .iter()
            .enumerate()
            .map(|(i, &a)| a * phase.column(space.digit(i, link))[0].1)
            .collect(),
        WorkingBasis::Physical(b) => psi
            .amps()
            .iter()
            .zip(b.members())
            .map(|(&a, m)| a * phase.column(space.digit(m[0].0, link))[0].1)
            .collect(),
    };
    StateVector::new(psi.tag().clone(), amps)
}

/// Outcome of one projector check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub step: usize,
    pub leakage: f64,
    pub detected: bool,
    pub syndromes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyReport {
    pub report: EvolutionReport,
    pub checks: Vec<Detection>,
    /// First step at which a check flagged leakage.
    pub first_detection: Option<usize>,
}

/// Trotter evolution on the full basis with scheduled error events and
/// periodic projector checks. Checks only flag; they do not project.
#[allow(clippy::too_many_arguments)]
pub fn run_noisy_trajectory(
    basis: &WorkingBasis,
    parts: &HamiltonianParts,
    psi0: &StateVector,
    plan: &TrotterPlan,
    noise: &NoiseSpec,
    physical: &PhysicalBasis,
    observers: &[Observer<'_>],
    budget: &Budget,
) -> Result<NoisyReport> {
    require_full(basis, psi0)?;
    let trotter = Trotterizer::new(parts, plan, budget)?;
    let charges = physical.charges().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut state = psi0.clone();
    let mut report = EvolutionReport::default();
    let mut checks = Vec::new();
    let mut first_detection = None;

    for k in 0..=plan.steps {
        if k > 0 {
            trotter.step_state(&mut state)?;
        }
        let mut events = Vec::new();
        for ev in noise.events.iter().filter(|e| e.step == k) {
            let (next, detail) = apply_event(basis, &state, &ev.kind, &mut rng)?;
            state = next;
            events.push(EventRecord {
                kind: event_name(&ev.kind).into(),
                detail,
            });
        }
        let mut rec = record(k, k as f64 * plan.dt, &state, observers, Some(physical))?;
        rec.events = events;
        if let Some(every) = noise.check_every.filter(|&e| e > 0) {
            if k % every == 0 {
                let d = check(basis, &state, physical, &charges, k)?;
                if d.detected && first_detection.is_none() {
                    first_detection = Some(k);
                }
                if d.detected {
                    rec.events.push(EventRecord {
                        kind: "detection".into(),
                        detail: format!("leakage {:.6e}", d.leakage),
                    });
                }
                checks.push(d);
            }
        }
        report.records.push(rec);
    }
    Ok(NoisyReport {
        report,
        checks,
        first_detection,
    })
}

fn event_name(kind: &NoiseKind) -> &'static str {
    match kind {
        NoiseKind::LinkRaise { .. } => "link_raise",
        NoiseKind::LinkLower { .. } => "link_lower",
        NoiseKind::RandomLinkRaise {} => "random_link_raise",
        NoiseKind::Dephasing { .. } => "dephasing",
        NoiseKind::RandomDephasing { .. } => "random_dephasing",
    }
}

fn apply_event(basis: &WorkingBasis, psi: &StateVector, kind: &NoiseKind, rng: &mut ChaCha8Rng) -> Result<(StateVector, String)> {
    let n_links = basis.lattice().n_links();
    Ok(match *kind {
        NoiseKind::LinkRaise { link } => {
            let (s, n) = apply_link_raise_error(basis, psi, LinkId(link))?;
            (s, format!("link {link}, norm before renormalization {n:.15e}"))
        }
        NoiseKind::LinkLower { link } => {
            let (s, n) = apply_link_lower_error(basis, psi, LinkId(link))?;
            (s, format!("link {link}, norm before renormalization {n:.15e}"))
        }
        NoiseKind::RandomLinkRaise {} => {
            let link = rng.random_range(0..n_links);
            let (s, n) = apply_link_raise_error(basis, psi, LinkId(link))?;
            (s, format!("link {link}, norm before renormalization {n:.15e}"))
        }
        NoiseKind::Dephasing { link, angle } => (
            apply_dephasing(basis, psi, LinkId(link), angle)?,
            format!("link {link}, angle {angle:.15e}"),
        ),
        NoiseKind::RandomDephasing { link, max_angle } => {
            let angle = rng.random_range(-max_angle..=max_angle);
            (
                apply_dephasing(basis, psi, LinkId(link), angle)?,
                format!("link {link}, angle {angle:.15e}"),
            )
        }
    })
}

fn check(basis: &WorkingBasis, psi: &StateVector, physical: &PhysicalBasis, charges: &ChargeConfig, step: usize) -> Result<Detection> {
    let leakage = gauge_violation(psi, physical)?;
    Ok(Detection {
        step,
        leakage,
        detected: leakage > DETECTION_TOL,
        syndromes: syndrome_sweep(basis, psi, charges)?,
    })
}

/// One row of the penalty experiment; `lambda = None` is the projected
/// (`λ = ∞`) limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyRow {
    pub lambda: Option<f64>,
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyExperiment {
    pub g2: f64,
    pub sign: MagneticSign,
    pub epsilon: f64,
    pub time: f64,
    /// Links carrying the `ε (U_ℓ + U_ℓ†)` perturbation.
    pub links: Vec<usize>,
    pub rows: Vec<PenaltyRow>,
}

/// Evolves the vacuum under `H + λ·penalty + ε Σ_ℓ (U_ℓ + U_ℓ†)` for each
/// `λ` and records the leakage at time `t`. A final row gives the projected
/// dynamics, where the perturbation is replaced by its physical block.
#[allow(clippy::too_many_arguments)]
pub fn penalty_suppression_experiment(
    physical: &std::sync::Arc<PhysicalBasis>,
    g2: f64,
    sign: MagneticSign,
    lambdas: &[f64],
    epsilon: f64,
    t: f64,
    links: &[LinkId],
    budget: &Budget,
) -> Result<PenaltyExperiment> {
    let space = physical.space().clone();
    let lattice = *space.lattice();
    let model = *space.model();
    let s = model
        .u1_truncation()
        .ok_or_else(|| QlmError::InvalidModel(format!("{model} has no ladder perturbation")))?;
    let h = hamiltonian_exprs(&lattice, &model, g2, sign)?;
    let mut pert = OperatorExpr::zero();
    for &l in links {
        let u = OperatorExpr::single(l, link::u1_raise(s));
        pert.add_assign(u.adjoint());
        pert.add_assign(u);
    }
    let pert = pert.scale_re(epsilon);
    let base = h.electric.add(h.magnetic).add(pert);
    let full = WorkingBasis::Full(space.clone());
    let psi = vacuum_state(&full)?;
    let charges: &ChargeConfig = physical.charges();

    let mut rows = Vec::new();
    for &lambda in lambdas {
        let total = base.clone().add(penalty_expr(&lattice, &model, lambda, charges)?);
        let op = total.to_sparse(&space, budget)?;
        let out = chebyshev_evolve(&op, &psi, t)?;
        rows.push(PenaltyRow {
            lambda: Some(lambda),
            leakage: gauge_violation(&out, physical)?,
        });
    }

    let restricted = base.restrict(physical, false)?;
    let pw = WorkingBasis::Physical(physical.clone());
    let out = ExactPropagator::new(&restricted, budget)?.evolve(&vacuum_state(&pw)?, t)?;
    let out = to_full(&pw, &out)?;
    rows.push(PenaltyRow {
        lambda: None,
        leakage: gauge_violation(&out, physical)?,
    });
    Ok(PenaltyExperiment {
        g2,
        sign,
        epsilon,
        time: t,
        links: links.iter().map(|l| l.0).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_physical_basis_u1, GaugeModel};
    use crate::lattice::Lattice;
    use crate::FullSpace;
    use std::sync::Arc;

    fn setup() -> (WorkingBasis, Arc<PhysicalBasis>, HamiltonianParts) {
        let l = Lattice::new(2, 2).unwrap();
        let m = GaugeModel::U1 { s: 1 };
        let b = Arc::new(build_physical_basis_u1(&l, &m, &ChargeConfig::neutral(&m, &l), &Budget::default()).unwrap());
        let full = WorkingBasis::Full(FullSpace::new(l, m).unwrap());
        let parts = HamiltonianParts::build(&full, 1.0, MagneticSign::Minus, &Budget::default()).unwrap();
        (full, b, parts)
    }

    #[test]
    fn noise_spec_parses_and_rejects_unknown_fields() {
        let spec: NoiseSpec = serde_json::from_str(
            r#"{"events":[{"step":5,"kind":"link_raise","link":2},{"step":1,"kind":"dephasing","link":0,"angle":0.3}],"seed":7,"check_every":1}"#,
        )
        .unwrap();
        assert_eq!(spec.events[0].kind, NoiseKind::LinkRaise { link: 2 });
        assert!(serde_json::from_str::<NoiseSpec>(r#"{"events":[],"bogus":1}"#).is_err());
        assert!(serde_json::from_str::<NoiseSpec>(r#"{"events":[{"step":0,"kind":"link_raise","link":1,"extra":2}]}"#).is_err());
        let spec: NoiseSpec = serde_json::from_str(r#"{"events":[{"step":0,"kind":"random_link_raise"}]}"#).unwrap();
        assert_eq!(spec.events[0].kind, NoiseKind::RandomLinkRaise {});
        assert!(serde_json::from_str::<NoiseSpec>(r#"{"events":[{"step":0,"kind":"random_link_raise","link":1}]}"#).is_err());
    }

    #[test]
    fn raise_error_is_detected_at_its_step() {
        let (full, b, parts) = setup();
        let psi = vacuum_state(&full).unwrap();
        let plan = TrotterPlan::new(0.1, 8).unwrap();
        let noise = NoiseSpec {
            events: vec![NoiseEvent {
                step: 5,
                kind: NoiseKind::LinkRaise { link: 3 },
            }],
            seed: 0,
            check_every: Some(1),
        };
        let out = run_noisy_trajectory(&full, &parts, &psi, &plan, &noise, &b, &[], &Budget::default()).unwrap();
        assert_eq!(out.first_detection, Some(5));
        let d = &out.checks[5];
        assert!((d.leakage - 1.0).abs() < 1e-12);
        assert!(out.checks[..5].iter().all(|c| c.leakage < 1e-12));
    }

    #[test]
    fn dephasing_never_leaks_but_changes_the_state() {
        let (full, b, parts) = setup();
        let psi = vacuum_state(&full).unwrap();
        let plan = TrotterPlan::new(0.1, 10).unwrap();
        let clean = NoiseSpec {
            events: vec![],
            seed: 0,
            check_every: Some(1),
        };
        let noisy = NoiseSpec {
            events: (1..10)
                .map(|k| NoiseEvent {
                    step: k,
                    kind: NoiseKind::RandomDephasing { link: k % 8, max_angle: 1.0 },
                })
                .collect(),
            seed: 11,
            check_every: Some(1),
        };
        let budget = Budget::default();
        let a = run_noisy_trajectory(&full, &parts, &psi, &plan, &clean, &b, &[], &budget).unwrap();
        let c = run_noisy_trajectory(&full, &parts, &psi, &plan, &noisy, &b, &[], &budget).unwrap();
        assert!(c.first_detection.is_none());
        assert!(c.checks.iter().all(|d| d.leakage < 1e-12));
        // replay the clean run to compare final states
        let trot = Trotterizer::new(&parts, &plan, &budget).unwrap();
        let mut clean_state = psi.clone();
        for _ in 0..plan.steps {
            trot.step_state(&mut clean_state).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut noisy_state = psi.clone();
        for k in 1..=plan.steps {
            trot.step_state(&mut noisy_state).unwrap();
            for ev in noisy.events.iter().filter(|e| e.step == k) {
                noisy_state = apply_event(&full, &noisy_state, &ev.kind, &mut rng).unwrap().0;
            }
        }
        assert!(clean_state.fidelity(&noisy_state).unwrap() < 1.0 - 1e-6);
        assert!(a.first_detection.is_none());
    }

    #[test]
    fn raise_on_saturated_link_is_absorbed() {
        let (full, _, _) = setup();
        let space = full.space().clone();
        let mut digits = vec![1usize; space.n_links()];
        digits[0] = 2;
        let idx = digits.iter().fold(0, |acc, &d| acc * 3 + d);
        let psi = StateVector::basis_state(full.tag(), idx).unwrap();
        assert!(matches!(
            apply_link_raise_error(&full, &psi, LinkId(0)),
            Err(QlmError::AbsorbedByTruncation(0))
        ));
    }

    #[test]
    fn zero_perturbation_never_leaks() {
        let (_, b, _) = setup();
        let links: Vec<LinkId> = (0..8).map(LinkId).collect();
        let exp = penalty_suppression_experiment(&b, 1.0, MagneticSign::Minus, &[0.0, 10.0], 0.0, 2.0, &links, &Budget::default()).unwrap();
        assert!(exp.rows.iter().all(|r| r.leakage < 1e-14));
    }
}
