//! Link alphabets, the full tensor basis, and Gauss-law filtered physical
//! bases.

mod su2;
mod u1;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{singlet_count, HalfInt};
use crate::error::{QlmError, Result};
use crate::lattice::{Lattice, LinkId, SiteId};
use crate::operators::{BasisKind, BasisTag};
use crate::{Budget, C64, ZERO};

pub use su2::{build_physical_basis_su2, KERNEL_GAP, KERNEL_THRESHOLD};
pub use u1::{build_physical_basis_u1, gauss_residual_u1, winding_numbers, winding_numbers_at};

/// Gauge group together with its link truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "gauge", rename_all = "lowercase", deny_unknown_fields)]
pub enum GaugeModel {
    /// Integer flux `e ∈ {−S, …, S}` on every link.
    U1 { s: u32 },
    /// `|j, m_L, m_R⟩` with `j ≤ j_max` on every link.
    Su2 { j_max: HalfInt },
}

/// One SU(2) link label, stored as twice the spin values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Su2Label {
    pub j: HalfInt,
    pub two_m_left: i32,
    pub two_m_right: i32,
}

impl GaugeModel {
    pub fn link_dimension(&self) -> usize {
        match *self {
            GaugeModel::U1 { s } => 2 * s as usize + 1,
            GaugeModel::Su2 { j_max } => (0..=j_max.twice()).map(|t| (t as usize + 1).pow(2)).sum(),
        }
    }

    pub fn is_u1(&self) -> bool {
        matches!(self, GaugeModel::U1 { .. })
    }

    pub fn u1_truncation(&self) -> Option<u32> {
        match *self {
            GaugeModel::U1 { s } => Some(s),
            GaugeModel::Su2 { .. } => None,
        }
    }

    /// SU(2) link labels in local-index order: `j` ascending, then `m_L`,
    /// then `m_R`, each ascending.
    pub fn su2_labels(&self) -> Vec<Su2Label> {
        let GaugeModel::Su2 { j_max } = *self else {
            return Vec::new();
        };
        let mut out = Vec::with_capacity(self.link_dimension());
        for tj in 0..=j_max.twice() {
            let tj_i = tj as i32;
            for ml in (-tj_i..=tj_i).step_by(2) {
                for mr in (-tj_i..=tj_i).step_by(2) {
                    out.push(Su2Label {
                        j: HalfInt::from_twice(tj),
                        two_m_left: ml,
                        two_m_right: mr,
                    });
                }
            }
        }
        out
    }

    /// Local index of the first `|j, −j, −j⟩` state of each `j` block.
    pub(crate) fn su2_block_offset(j: HalfInt) -> usize {
        (0..j.twice()).map(|t| (t as usize + 1).pow(2)).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if let GaugeModel::U1 { s } = *self {
            if s > 64 {
                return Err(QlmError::InvalidModel(format!("truncation S={s} is not desk scale")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for GaugeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaugeModel::U1 { s } => write!(f, "u1(S={s})"),
            GaugeModel::Su2 { j_max } => write!(f, "su2(jmax={j_max})"),
        }
    }
}

/// `2S+1` for U(1), `Σ_j (2j+1)²` for SU(2).
pub fn link_dimension(model: &GaugeModel) -> usize {
    model.link_dimension()
}

/// U(1) flux labels, one integer per link.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FluxConfig(pub Vec<i32>);

impl FluxConfig {
    pub fn zeros(n_links: usize) -> Self {
        FluxConfig(vec![0; n_links])
    }

    pub fn get(&self, link: LinkId) -> i32 {
        self.0[link.0]
    }

    pub fn set(&mut self, link: LinkId, e: i32) {
        self.0[link.0] = e;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Static charges on sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChargeConfig {
    /// Integer charge `ρ_x` per site.
    U1(Vec<i32>),
    /// Irrep label `j_x` per site. Only used kinematically.
    Su2(Vec<HalfInt>),
}

impl ChargeConfig {
    pub fn neutral(model: &GaugeModel, lattice: &Lattice) -> Self {
        match model {
            GaugeModel::U1 { .. } => ChargeConfig::U1(vec![0; lattice.n_sites()]),
            GaugeModel::Su2 { .. } => ChargeConfig::Su2(vec![HalfInt::ZERO; lattice.n_sites()]),
        }
    }

    /// U(1) charge at a site (zero for SU(2) configurations).
    pub fn u1_at(&self, site: SiteId) -> i32 {
        match self {
            ChargeConfig::U1(q) => q[site.0],
            ChargeConfig::Su2(_) => 0,
        }
    }

    pub fn is_neutral(&self) -> bool {
        match self {
            ChargeConfig::U1(q) => q.iter().all(|&x| x == 0),
            ChargeConfig::Su2(q) => q.iter().all(|&x| x == HalfInt::ZERO),
        }
    }

    pub fn validate(&self, model: &GaugeModel, lattice: &Lattice) -> Result<()> {
        let len = match self {
            ChargeConfig::U1(q) => q.len(),
            ChargeConfig::Su2(q) => q.len(),
        };
        if len != lattice.n_sites() {
            return Err(QlmError::InvalidCharges(format!(
                "{len} charges for {} sites",
                lattice.n_sites()
            )));
        }
        match (self, model) {
            (ChargeConfig::U1(q), GaugeModel::U1 { .. }) => {
                let total: i64 = q.iter().map(|&x| x as i64).sum();
                if total != 0 {
                    return Err(QlmError::InvalidCharges(format!(
                        "total charge {total} cannot be screened on a torus"
                    )));
                }
                Ok(())
            }
            (ChargeConfig::Su2(q), GaugeModel::Su2 { .. }) => {
                if singlet_count(q) == 0 {
                    return Err(QlmError::InvalidCharges(
                        "site irreps admit no global singlet".into(),
                    ));
                }
                Ok(())
            }
            _ => Err(QlmError::InvalidCharges(format!("charge kind does not match model {model}"))),
        }
    }

    fn short(&self) -> String {
        if self.is_neutral() {
            return "neutral".into();
        }
        match self {
            ChargeConfig::U1(q) => format!("rho{q:?}"),
            ChargeConfig::Su2(q) => {
                format!("j[{}]", q.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(","))
            }
        }
        .replace(' ', "")
    }
}

/// Net flux through the two non-contractible cuts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WindingSector {
    pub wx: i32,
    pub wy: i32,
}

impl fmt::Display for WindingSector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.wx, self.wy)
    }
}

/// Tensor product of all link spaces, indexed in mixed radix with link 0
/// most significant, so index order is lexicographic label order.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSpace {
    lattice: Lattice,
    model: GaugeModel,
    link_dim: usize,
    dim: usize,
    strides: Vec<usize>,
}

impl FullSpace {
    pub fn new(lattice: Lattice, model: GaugeModel) -> Result<Self> {
        model.validate()?;
        let link_dim = model.link_dimension();
        let n = lattice.n_links();
        let mut strides = vec![1usize; n];
        let mut dim: usize = 1;
        for l in (0..n).rev() {
            strides[l] = dim;
            dim = dim.checked_mul(link_dim).ok_or_else(|| QlmError::BudgetExceeded {
                what: "full tensor space".into(),
                needed: usize::MAX,
                budget: usize::MAX,
            })?;
        }
        Ok(FullSpace {
            lattice,
            model,
            link_dim,
            dim,
            strides,
        })
    }

    /// As [`FullSpace::new`], refusing spaces larger than `budget.full`.
    pub fn with_budget(lattice: Lattice, model: GaugeModel, budget: &Budget) -> Result<Self> {
        let space = Self::new(lattice, model)?;
        crate::error::check_budget("full tensor space", space.dim, budget.full)?;
        Ok(space)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn model(&self) -> &GaugeModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn link_dim(&self) -> usize {
        self.link_dim
    }

    pub fn n_links(&self) -> usize {
        self.strides.len()
    }

    pub fn stride(&self, link: LinkId) -> usize {
        self.strides[link.0]
    }

    pub fn id(&self) -> String {
        format!("{}@{}", self.model, self.lattice)
    }

    pub fn tag(&self) -> BasisTag {
        BasisTag::new(BasisKind::Full, self.id(), self.dim)
    }

    /// Local label index of `link` inside the basis state `index`.
    #[inline]
    pub fn digit(&self, index: usize, link: LinkId) -> usize {
        (index / self.strides[link.0]) % self.link_dim
    }

    #[inline]
    pub fn with_digit(&self, index: usize, link: LinkId, digit: usize) -> usize {
        let old = self.digit(index, link);
        index - old * self.strides[link.0] + digit * self.strides[link.0]
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        self.lattice.links().map(|l| self.digit(index, l)).collect()
    }

    pub fn index_of_digits(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    /// U(1) flux configuration of a basis index.
    pub fn config(&self, index: usize) -> FluxConfig {
        let s = self.model.u1_truncation().unwrap_or(0) as i32;
        FluxConfig(self.digits(index).into_iter().map(|d| d as i32 - s).collect())
    }

    pub fn index_of_config(&self, config: &FluxConfig) -> Result<usize> {
        let s = self
            .model
            .u1_truncation()
            .ok_or_else(|| QlmError::InvalidModel("flux configurations need a U(1) model".into()))?;
        if config.len() != self.n_links() {
            return Err(QlmError::DimensionMismatch(config.len(), self.n_links()));
        }
        let mut idx = 0;
        for (e, stride) in config.0.iter().zip(&self.strides) {
            if e.unsigned_abs() > s {
                return Err(QlmError::FluxOutOfRange { flux: *e, s });
            }
            idx += (*e + s as i32) as usize * stride;
        }
        Ok(idx)
    }

    /// Index of the state with every link in its trivial label (zero flux,
    /// `j = 0`).
    pub fn trivial_index(&self) -> usize {
        match self.model {
            GaugeModel::U1 { s } => self.index_of_digits(&vec![s as usize; self.n_links()]),
            GaugeModel::Su2 { .. } => 0,
        }
    }
}

/// Sparse member of a physical basis: full-basis `(index, amplitude)` pairs
/// sorted by index.
pub type SparseVec = Vec<(usize, C64)>;

/// Orthonormal basis of the Gauss-law subspace.
#[derive(Debug, Clone)]
pub struct PhysicalBasis {
    space: FullSpace,
    charges: ChargeConfig,
    members: Vec<SparseVec>,
    configs: Vec<FluxConfig>,
    sectors: Vec<WindingSector>,
    lookup: HashMap<usize, Vec<(usize, C64)>>,
    id: String,
}

impl PhysicalBasis {
    pub(crate) fn from_members(
        space: FullSpace,
        charges: ChargeConfig,
        members: Vec<SparseVec>,
        configs: Vec<FluxConfig>,
        sectors: Vec<WindingSector>,
    ) -> Self {
        let mut lookup: HashMap<usize, Vec<(usize, C64)>> = HashMap::new();
        for (k, m) in members.iter().enumerate() {
            for &(i, a) in m {
                lookup.entry(i).or_default().push((k, a));
            }
        }
        let id = format!(
            "{}@{}:{}:{}",
            space.model(),
            space.lattice(),
            charges.short(),
            members.len()
        );
        PhysicalBasis {
            space,
            charges,
            members,
            configs,
            sectors,
            lookup,
            id,
        }
    }

    pub fn model(&self) -> &GaugeModel {
        self.space.model()
    }

    pub fn lattice(&self) -> &Lattice {
        self.space.lattice()
    }

    pub fn charges(&self) -> &ChargeConfig {
        &self.charges
    }

    pub fn space(&self) -> &FullSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.members.len()
    }

    pub fn full_dim(&self) -> usize {
        self.space.dim()
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tag(&self) -> BasisTag {
        BasisTag::new(BasisKind::Physical, self.id.clone(), self.dim())
    }

    pub fn members(&self) -> &[SparseVec] {
        &self.members
    }

    /// U(1) member configurations (empty for SU(2)).
    pub fn configs(&self) -> &[FluxConfig] {
        &self.configs
    }

    /// U(1) winding tags, parallel to [`PhysicalBasis::configs`].
    pub fn sectors(&self) -> &[WindingSector] {
        &self.sectors
    }

    /// Physical index of a U(1) configuration.
    pub fn index_of_config(&self, config: &FluxConfig) -> Option<usize> {
        let full = self.space.index_of_config(config).ok()?;
        self.index_of_full(full)
    }

    /// Physical index of a full-basis state, if it is itself a member.
    pub fn index_of_full(&self, full: usize) -> Option<usize> {
        match self.lookup.get(&full)?.as_slice() {
            [(k, a)] if self.members[*k].len() == 1 && (a.re - 1.0).abs() < 1e-15 => Some(*k),
            _ => None,
        }
    }

    /// Isometry `P`: physical amplitudes to a dense full-basis vector.
    pub fn embed(&self, amps: &[C64]) -> Result<Vec<C64>> {
        if amps.len() != self.dim() {
            return Err(QlmError::DimensionMismatch(amps.len(), self.dim()));
        }
        let mut out = vec![ZERO; self.full_dim()];
        for (m, &a) in self.members.iter().zip(amps) {
            for &(i, v) in m {
                out[i] += a * v;
            }
        }
        Ok(out)
    }

    /// `P†`: overlaps of a dense full-basis vector with every member.
    pub fn project(&self, full: &[C64]) -> Result<Vec<C64>> {
        if full.len() != self.full_dim() {
            return Err(QlmError::DimensionMismatch(full.len(), self.full_dim()));
        }
        Ok(self
            .members
            .iter()
            .map(|m| m.iter().map(|&(i, v)| v.conj() * full[i]).sum())
            .collect())
    }

    /// `P†` applied to a sparse full-basis vector.
    pub fn project_sparse(&self, v: &[(usize, C64)]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim()];
        for &(i, a) in v {
            if let Some(hits) = self.lookup.get(&i) {
                for &(k, m) in hits {
                    out[k] += m.conj() * a;
                }
            }
        }
        out
    }

    /// Member indices grouped by winding sector (U(1) only).
    pub fn split_by_winding(&self) -> BTreeMap<WindingSector, Vec<usize>> {
        let mut out: BTreeMap<WindingSector, Vec<usize>> = BTreeMap::new();
        for (k, s) in self.sectors.iter().enumerate() {
            out.entry(*s).or_default().push(k);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&BasisDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: BasisDocument = serde_json::from_str(text)?;
        doc.try_into()
    }
}

const BASIS_FORMAT: &str = "qlink-physical-basis/1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisDocument {
    format: String,
    model: GaugeModel,
    lattice: Lattice,
    charges: ChargeConfig,
    full_dim: usize,
    dim: usize,
    members: Vec<MemberDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<FluxConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sector: Option<WindingSector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<(usize, f64, f64)>>,
}

impl From<&PhysicalBasis> for BasisDocument {
    fn from(b: &PhysicalBasis) -> Self {
        let members = if b.model().is_u1() {
            b.configs
                .iter()
                .zip(&b.sectors)
                .map(|(c, s)| MemberDocument {
                    config: Some(c.clone()),
                    sector: Some(*s),
                    entries: None,
                })
                .collect()
        } else {
            b.members
                .iter()
                .map(|m| MemberDocument {
                    config: None,
                    sector: None,
                    entries: Some(m.iter().map(|&(i, a)| (i, a.re, a.im)).collect()),
                })
                .collect()
        };
        BasisDocument {
            format: BASIS_FORMAT.into(),
            model: *b.model(),
            lattice: *b.lattice(),
            charges: b.charges.clone(),
            full_dim: b.full_dim(),
            dim: b.dim(),
            members,
        }
    }
}

impl TryFrom<BasisDocument> for PhysicalBasis {
    type Error = QlmError;

    fn try_from(doc: BasisDocument) -> Result<Self> {
        if doc.format != BASIS_FORMAT {
            return Err(QlmError::Serialization(format!("unknown basis format '{}'", doc.format)));
        }
        doc.charges.validate(&doc.model, &doc.lattice)?;
        let space = FullSpace::new(doc.lattice, doc.model)?;
        if space.dim() != doc.full_dim || doc.members.len() != doc.dim {
            return Err(QlmError::Serialization("dimension fields disagree with contents".into()));
        }
        let mut members = Vec::with_capacity(doc.dim);
        let mut configs = Vec::new();
        let mut sectors = Vec::new();
        for m in doc.members {
            match (m.config, m.sector, m.entries) {
                (Some(c), Some(s), None) if doc.model.is_u1() => {
                    members.push(vec![(space.index_of_config(&c)?, C64::new(1.0, 0.0))]);
                    configs.push(c);
                    sectors.push(s);
                }
                (None, None, Some(e)) if !doc.model.is_u1() => {
                    if e.iter().any(|&(i, _, _)| i >= space.dim()) {
                        return Err(QlmError::Serialization("member entry out of range".into()));
                    }
                    members.push(e.into_iter().map(|(i, re, im)| (i, C64::new(re, im))).collect());
                }
                _ => return Err(QlmError::Serialization("member does not match model".into())),
            }
        }
        Ok(PhysicalBasis::from_members(space, doc.charges, members, configs, sectors))
    }
}
