//! Exact and Trotterized time evolution.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::PhysicalBasis;
use crate::error::{QlmError, Result};
use crate::linalg::{block_eigh, BlockEigh, HERMITIAN_TOL};
use crate::observables::{gauge_violation, ObservableRecord};
use crate::operators::{BasisTag, HamiltonianParts, SparseOperator};
use crate::states::StateVector;
use crate::{Budget, C64, ZERO};

/// `exp(−iHt)` through the eigendecomposition of every connected block of
/// `H`.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    tag: BasisTag,
    blocks: Vec<BlockEigh>,
}

impl ExactPropagator {
    pub fn new(h: &SparseOperator, budget: &Budget) -> Result<Self> {
        Ok(ExactPropagator {
            tag: h.tag().clone(),
            blocks: block_eigh(h, budget)?,
        })
    }

    pub fn tag(&self) -> &BasisTag {
        &self.tag
    }

    pub fn blocks(&self) -> &[BlockEigh] {
        &self.blocks
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        self.tag.ensure_same(psi.tag())?;
        let mut out = vec![ZERO; psi.dim()];
        for b in &self.blocks {
            let x = DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&i| psi.amps()[i]));
            if x.iter().all(|z| *z == ZERO) {
                continue;
            }
            let mut c = b.vectors.adjoint() * x;
            for (k, z) in c.iter_mut().enumerate() {
                *z *= C64::from_polar(1.0, -b.values[k] * t);
            }
            let y = &b.vectors * c;
            for (k, &i) in b.indices.iter().enumerate() {
                out[i] = y[k];
            }
        }
        StateVector::new(self.tag.clone(), out)
    }

    /// Dense blocks of `exp(−iH dt)` for repeated application.
    pub fn step_operator(&self, dt: f64) -> BlockUnitary {
        BlockUnitary {
            tag: self.tag.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|b| {
                    let phases = DVector::from_iterator(
                        b.values.len(),
                        b.values.iter().map(|&e| C64::from_polar(1.0, -e * dt)),
                    );
                    let scaled = DMatrix::from_fn(b.vectors.nrows(), b.vectors.ncols(), |r, c| {
                        b.vectors[(r, c)] * phases[c]
                    });
                    (b.indices.clone(), scaled * b.vectors.adjoint())
                })
                .collect(),
        }
    }
}

/// Block-diagonal unitary.
#[derive(Debug, Clone)]
pub struct BlockUnitary {
    tag: BasisTag,
    blocks: Vec<(Vec<usize>, DMatrix<C64>)>,
}

impl BlockUnitary {
    pub fn tag(&self) -> &BasisTag {
        &self.tag
    }

    pub fn apply(&self, amps: &mut [C64]) {
        for (idx, u) in &self.blocks {
            if idx.len() == 1 {
                amps[idx[0]] *= u[(0, 0)];
                continue;
            }
            let x = DVector::from_iterator(idx.len(), idx.iter().map(|&i| amps[i]));
            if x.iter().all(|z| *z == ZERO) {
                continue;
            }
            let y = u * x;
            for (k, &i) in idx.iter().enumerate() {
                amps[i] = y[k];
            }
        }
    }
}

/// `exp(−iHt) ψ`
pub fn exact_evolve(h: &SparseOperator, psi: &StateVector, t: f64, budget: &Budget) -> Result<StateVector> {
    ExactPropagator::new(h, budget)?.evolve(psi, t)
}

/// Bessel values `J_0(x) … J_n(x)` for `x ≥ 0` by Miller's backward
/// recurrence normalized with `J_0 + 2 Σ J_{2k} = 1`.
pub(crate) fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = n.max(x.ceil() as usize) + 40 + (x.sqrt() as usize) * 2;
    let start = start + start % 2;
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        vals[k - 1] = prev;
        if prev.abs() > 1e200 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-200;
            }
            norm *= 1e-200;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * vals[k - 1];
        }
    }
    norm += vals[0];
    for (o, v) in out.iter_mut().zip(&vals) {
        *o = v / norm;
    }
    out
}

/// Truncation threshold for [`chebyshev_evolve`].
pub const CHEBYSHEV_TOL: f64 = 1e-15;

/// `exp(−iHt) ψ` by a Chebyshev expansion over the Gershgorin interval of
/// `H`. Needs only sparse products, so it serves dimensions where the
/// blockwise dense propagator is too large.
pub fn chebyshev_evolve(h: &SparseOperator, psi: &StateVector, t: f64) -> Result<StateVector> {
    h.tag().ensure_same(psi.tag())?;
    let dev = h.hermitian_deviation();
    if dev > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(QlmError::NotHermitian(dev));
    }
    let (lo, hi) = h.gershgorin_bounds();
    let a = 0.5 * (hi - lo);
    let b = 0.5 * (hi + lo);
    let shift = C64::from_polar(1.0, -b * t);
    if a * t.abs() < 1e-300 {
        let amps = psi.amps().iter().map(|z| z * shift).collect();
        return StateVector::new(psi.tag().clone(), amps);
    }
    let x = a * t.abs();
    let n = (x + 10.0 * x.cbrt() + 30.0).ceil() as usize;
    let mut j = bessel_j_sequence(x, n);
    while j.len() > 2 && j.last().is_some_and(|v| v.abs() < CHEBYSHEV_TOL) {
        j.pop();
    }
    let dim = psi.dim();
    let sign = if t >= 0.0 { -1.0 } else { 1.0 };
    // (−i)^k for t > 0, (+i)^k for t < 0
    let unit = C64::new(0.0, sign);
    let scaled = |v: &[C64], out: &mut [C64]| {
        h.apply_into(v, out);
        for (o, x) in out.iter_mut().zip(v) {
            *o = (*o - b * x) / a;
        }
    };
    let mut prev = psi.amps().to_vec();
    let mut cur = vec![ZERO; dim];
    scaled(&prev, &mut cur);
    let mut acc: Vec<C64> = prev.iter().map(|z| z * j[0]).collect();
    let mut phase = unit;
    for (o, z) in acc.iter_mut().zip(&cur) {
        *o += z * phase * (2.0 * j[1]);
    }
    let mut next = vec![ZERO; dim];
    for jk in j.iter().skip(2) {
        scaled(&cur, &mut next);
        for (nx, p) in next.iter_mut().zip(&prev) {
            *nx = 2.0 * *nx - p;
        }
        phase *= unit;
        let w = phase * (2.0 * jk);
        for (o, z) in acc.iter_mut().zip(&next) {
            *o += z * w;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    for z in acc.iter_mut() {
        *z *= shift;
    }
    StateVector::new(psi.tag().clone(), acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepOrdering {
    #[default]
    ElectricFirst,
    MagneticFirst,
}

/// Uniform Trotter schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrotterPlan {
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub ordering: StepOrdering,
    /// Second-order symmetric splitting instead of the first-order product.
    #[serde(default)]
    pub symmetric: bool,
}

impl TrotterPlan {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        let plan = TrotterPlan {
            dt,
            steps,
            ordering: StepOrdering::default(),
            symmetric: false,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_ordering(mut self, ordering: StepOrdering) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(QlmError::InvalidArgument(format!("time step {} must be positive", self.dt)));
        }
        if self.steps == 0 {
            return Err(QlmError::InvalidArgument("a Trotter plan needs at least one step".into()));
        }
        Ok(())
    }

    pub fn total_time(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

enum Factor {
    Phases(Vec<C64>),
    Dense(BlockUnitary),
}

impl Factor {
    fn build(h: &SparseOperator, dt: f64, budget: &Budget) -> Result<Self> {
        if h.is_diagonal() {
            let d = h.diagonal_values();
            if d.iter().all(|z| z.im == 0.0) {
                return Ok(Factor::Phases(d.iter().map(|z| C64::from_polar(1.0, -z.re * dt)).collect()));
            }
        }
        Ok(Factor::Dense(ExactPropagator::new(h, budget)?.step_operator(dt)))
    }

    fn apply(&self, amps: &mut [C64]) {
        match self {
            Factor::Phases(p) => amps.iter_mut().zip(p).for_each(|(a, z)| *a *= z),
            Factor::Dense(u) => u.apply(amps),
        }
    }
}

/// Precomputed Trotter step for one Hamiltonian split.
pub struct Trotterizer {
    tag: BasisTag,
    plan: TrotterPlan,
    first: Factor,
    second: Factor,
    /// Half step of the first factor, for the symmetric splitting.
    half: Option<Factor>,
}

impl Trotterizer {
    pub fn new(parts: &HamiltonianParts, plan: &TrotterPlan, budget: &Budget) -> Result<Self> {
        plan.validate()?;
        parts.electric.tag().ensure_same(parts.magnetic.tag())?;
        let (a, b) = match plan.ordering {
            StepOrdering::ElectricFirst => (&parts.electric, &parts.magnetic),
            StepOrdering::MagneticFirst => (&parts.magnetic, &parts.electric),
        };
        let half = if plan.symmetric {
            Some(Factor::build(a, plan.dt / 2.0, budget)?)
        } else {
            None
        };
        Ok(Trotterizer {
            tag: parts.tag().clone(),
            plan: *plan,
            first: Factor::build(a, plan.dt, budget)?,
            second: Factor::build(b, plan.dt, budget)?,
            half,
        })
    }

    pub fn plan(&self) -> &TrotterPlan {
        &self.plan
    }

    /// One step in place. The first-listed factor acts first on the state.
    pub fn step(&self, amps: &mut [C64]) {
        match &self.half {
            Some(h) => {
                h.apply(amps);
                self.second.apply(amps);
                h.apply(amps);
            }
            None => {
                self.first.apply(amps);
                self.second.apply(amps);
            }
        }
    }

    pub fn step_state(&self, psi: &mut StateVector) -> Result<()> {
        self.tag.ensure_same(psi.tag())?;
        let mut amps = std::mem::replace(psi, StateVector::new(self.tag.clone(), vec![ZERO; self.tag.dim])?).into_amps();
        self.step(&mut amps);
        *psi = StateVector::new(self.tag.clone(), amps)?;
        Ok(())
    }
}

type Measure<'a> = Box<dyn Fn(&StateVector) -> Result<C64> + 'a>;

/// A named scalar measured on the state after every step.
pub struct Observer<'a> {
    pub name: String,
    f: Measure<'a>,
}

impl<'a> Observer<'a> {
    pub fn new(name: impl Into<String>, f: impl Fn(&StateVector) -> Result<C64> + 'a) -> Self {
        Observer {
            name: name.into(),
            f: Box::new(f),
        }
    }

    pub fn real(name: impl Into<String>, f: impl Fn(&StateVector) -> Result<f64> + 'a) -> Self {
        Observer::new(name, move |s| f(s).map(|v| C64::new(v, 0.0)))
    }

    pub fn measure(&self, psi: &StateVector, time: f64) -> Result<ObservableRecord> {
        let v = (self.f)(psi)?;
        Ok(ObservableRecord {
            name: self.name.clone(),
            re: v.re,
            im: v.im,
            time,
            meta: None,
        })
    }
}

/// Something that happened at a step besides the evolution itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gauge_violation: Option<f64>,
    pub observables: Vec<ObservableRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventRecord>,
}

/// Per-step records of one trajectory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvolutionReport {
    pub records: Vec<StepRecord>,
}

impl EvolutionReport {
    /// Largest `|‖ψ(t)‖ − ‖ψ(0)‖|`.
    pub fn norm_drift(&self) -> f64 {
        let Some(first) = self.records.first() else { return 0.0 };
        self.records.iter().map(|r| (r.norm - first.norm).abs()).fold(0.0, f64::max)
    }

    /// Values of one observable along the run.
    pub fn series(&self, name: &str) -> Vec<(f64, C64)> {
        self.records
            .iter()
            .flat_map(|r| {
                r.observables
                    .iter()
                    .filter(|o| o.name == name)
                    .map(|o| (r.time, C64::new(o.re, o.im)))
            })
            .collect()
    }

    /// One JSON object per record.
    pub fn write_json_lines<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            let line = serde_json::to_string(r)?;
            writeln!(w, "{line}").map_err(|e| QlmError::Serialization(e.to_string()))?;
        }
        Ok(())
    }

    /// `step,time,norm,gauge_violation,<obs>_re,<obs>_im,…`, columns taken
    /// from the first record.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| QlmError::Serialization(e.to_string());
        let names: Vec<String> = self
            .records
            .first()
            .map(|r| r.observables.iter().map(|o| o.name.clone()).collect())
            .unwrap_or_default();
        let mut header = vec!["step".to_string(), "time".into(), "norm".into(), "gauge_violation".into()];
        for n in &names {
            header.push(format!("{n}_re"));
            header.push(format!("{n}_im"));
        }
        writeln!(w, "{}", header.join(",")).map_err(io)?;
        for r in &self.records {
            let mut row = vec![
                r.step.to_string(),
                format!("{:.12e}", r.time),
                format!("{:.15e}", r.norm),
                r.gauge_violation.map(|g| format!("{g:.15e}")).unwrap_or_default(),
            ];
            for n in &names {
                match r.observables.iter().find(|o| &o.name == n) {
                    Some(o) => {
                        row.push(format!("{:.15e}", o.re));
                        row.push(format!("{:.15e}", o.im));
                    }
                    None => {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
            }
            writeln!(w, "{}", row.join(",")).map_err(io)?;
        }
        Ok(())
    }
}

/// Measures observers and leakage for one record.
pub(crate) fn record(
    step: usize,
    time: f64,
    psi: &StateVector,
    observers: &[Observer<'_>],
    monitor: Option<&PhysicalBasis>,
) -> Result<StepRecord> {
    Ok(StepRecord {
        step,
        time,
        norm: psi.norm(),
        gauge_violation: monitor.map(|b| gauge_violation(psi, b)).transpose()?,
        observables: observers.iter().map(|o| o.measure(psi, time)).collect::<Result<_>>()?,
        events: Vec::new(),
    })
}

/// Runs the plan from `psi`, recording the initial state and every step.
/// With `monitor`, the gauge violation relative to that basis is recorded.
pub fn trotter_evolve(
    parts: &HamiltonianParts,
    psi: &StateVector,
    plan: &TrotterPlan,
    observers: &[Observer<'_>],
    monitor: Option<&PhysicalBasis>,
    budget: &Budget,
) -> Result<(StateVector, EvolutionReport)> {
    let trotter = Trotterizer::new(parts, plan, budget)?;
    parts.tag().ensure_same(psi.tag())?;
    let mut state = psi.clone();
    let mut report = EvolutionReport::default();
    report.records.push(record(0, 0.0, &state, observers, monitor)?);
    for k in 1..=plan.steps {
        trotter.step_state(&mut state)?;
        report
            .records
            .push(record(k, k as f64 * plan.dt, &state, observers, monitor)?);
    }
    Ok((state, report))
}

/// `‖ψ_trotter(t) − exp(−i(H_E + H_B)t) ψ‖₂`
pub fn trotter_error(parts: &HamiltonianParts, psi: &StateVector, plan: &TrotterPlan, budget: &Budget) -> Result<f64> {
    let (approx, _) = trotter_evolve(parts, psi, plan, &[], None, budget)?;
    let exact = exact_evolve(&parts.total()?, psi, plan.total_time(), budget)?;
    approx.distance(&exact)
}
