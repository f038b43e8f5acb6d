//! Geometry of the periodic `Lx × Ly` square lattice.
//!
//! Sites are numbered row-major, `site = y·Lx + x`. Every site owns two
//! outgoing links, `link = 2·site + dir` with `dir = 0` for x̂ and `dir = 1`
//! for ŷ. Plaquettes share the index of their lower-left site.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{QlmError, Result};

/// Largest number of links a lattice may have unless a budget is given.
pub const DEFAULT_LINK_BUDGET: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlaquetteId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    X,
    Y,
}

impl Direction {
    pub fn index(self) -> usize {
        match self {
            Direction::X => 0,
            Direction::Y => 1,
        }
    }

    pub fn from_index(i: usize) -> Direction {
        if i == 0 {
            Direction::X
        } else {
            Direction::Y
        }
    }
}

/// Traversal direction of a link inside a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Forward,
    Backward,
}

impl Orientation {
    pub fn sign(self) -> i32 {
        match self {
            Orientation::Forward => 1,
            Orientation::Backward => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub link: LinkId,
    pub orientation: Orientation,
}

impl Step {
    pub fn forward(link: LinkId) -> Self {
        Step {
            link,
            orientation: Orientation::Forward,
        }
    }

    pub fn backward(link: LinkId) -> Self {
        Step {
            link,
            orientation: Orientation::Backward,
        }
    }
}

/// Outgoing and incoming links of a site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteLinks {
    pub outgoing: [LinkId; 2],
    pub incoming: [LinkId; 2],
}

/// Periodic two-dimensional lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LatticeShape", into = "LatticeShape")]
pub struct Lattice {
    lx: usize,
    ly: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeShape {
    lx: usize,
    ly: usize,
}

impl TryFrom<LatticeShape> for Lattice {
    type Error = QlmError;

    fn try_from(s: LatticeShape) -> Result<Self> {
        Lattice::new(s.lx, s.ly)
    }
}

impl From<Lattice> for LatticeShape {
    fn from(l: Lattice) -> Self {
        LatticeShape { lx: l.lx, ly: l.ly }
    }
}

impl Lattice {
    pub fn new(lx: usize, ly: usize) -> Result<Self> {
        Self::with_link_budget(lx, ly, DEFAULT_LINK_BUDGET)
    }

    pub fn with_link_budget(lx: usize, ly: usize, link_budget: usize) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(QlmError::InvalidLattice(format!(
                "extents must be positive, got {lx}x{ly}"
            )));
        }
        let links = lx
            .checked_mul(ly)
            .and_then(|n| n.checked_mul(2))
            .ok_or_else(|| QlmError::InvalidLattice("link count overflows".into()))?;
        crate::error::check_budget("lattice links", links, link_budget)?;
        Ok(Lattice { lx, ly })
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn n_sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn n_links(&self) -> usize {
        2 * self.n_sites()
    }

    pub fn n_plaquettes(&self) -> usize {
        self.n_sites()
    }

    /// A lattice with an extent of 1 has links that wrap onto their own origin.
    pub fn is_degenerate(&self) -> bool {
        self.lx == 1 || self.ly == 1
    }

    pub fn sites(&self) -> impl Iterator<Item = SiteId> {
        (0..self.n_sites()).map(SiteId)
    }

    pub fn links(&self) -> impl Iterator<Item = LinkId> {
        (0..self.n_links()).map(LinkId)
    }

    pub fn plaquettes(&self) -> impl Iterator<Item = PlaquetteId> {
        (0..self.n_plaquettes()).map(PlaquetteId)
    }

    /// Site at coordinates taken modulo the extents.
    pub fn site(&self, x: i64, y: i64) -> SiteId {
        let x = x.rem_euclid(self.lx as i64) as usize;
        let y = y.rem_euclid(self.ly as i64) as usize;
        SiteId(y * self.lx + x)
    }

    pub fn coords(&self, site: SiteId) -> (usize, usize) {
        (site.0 % self.lx, site.0 / self.lx)
    }

    pub fn link(&self, site: SiteId, dir: Direction) -> LinkId {
        LinkId(2 * site.0 + dir.index())
    }

    pub fn link_at(&self, x: i64, y: i64, dir: Direction) -> LinkId {
        self.link(self.site(x, y), dir)
    }

    /// Origin site and direction of a link.
    pub fn decode_link(&self, link: LinkId) -> (SiteId, Direction) {
        (SiteId(link.0 / 2), Direction::from_index(link.0 % 2))
    }

    pub fn shift(&self, site: SiteId, dir: Direction, steps: i64) -> SiteId {
        let (x, y) = self.coords(site);
        match dir {
            Direction::X => self.site(x as i64 + steps, y as i64),
            Direction::Y => self.site(x as i64, y as i64 + steps),
        }
    }

    pub fn link_origin(&self, link: LinkId) -> SiteId {
        self.decode_link(link).0
    }

    pub fn link_target(&self, link: LinkId) -> SiteId {
        let (site, dir) = self.decode_link(link);
        self.shift(site, dir, 1)
    }

    pub fn links_at_site(&self, site: SiteId) -> SiteLinks {
        SiteLinks {
            outgoing: [self.link(site, Direction::X), self.link(site, Direction::Y)],
            incoming: [
                self.link(self.shift(site, Direction::X, -1), Direction::X),
                self.link(self.shift(site, Direction::Y, -1), Direction::Y),
            ],
        }
    }

    /// Counterclockwise boundary of a plaquette, starting at its lower-left
    /// site: bottom (+), right (+), top (−), left (−).
    pub fn plaquette_links(&self, p: PlaquetteId) -> [Step; 4] {
        let anchor = SiteId(p.0);
        [
            Step::forward(self.link(anchor, Direction::X)),
            Step::forward(self.link(self.shift(anchor, Direction::X, 1), Direction::Y)),
            Step::backward(self.link(self.shift(anchor, Direction::Y, 1), Direction::X)),
            Step::backward(self.link(anchor, Direction::Y)),
        ]
    }

    /// Cut used for the winding number along `dir`, placed at position 0.
    pub fn winding_cut(&self, dir: Direction) -> Vec<LinkId> {
        self.winding_cut_at(dir, 0)
    }

    /// For `X`: the x̂-links leaving column `position`, one per row.
    /// For `Y`: the ŷ-links leaving row `position`, one per column.
    pub fn winding_cut_at(&self, dir: Direction, position: usize) -> Vec<LinkId> {
        match dir {
            Direction::X => (0..self.ly)
                .map(|y| self.link_at(position as i64, y as i64, Direction::X))
                .collect(),
            Direction::Y => (0..self.lx)
                .map(|x| self.link_at(x as i64, position as i64, Direction::Y))
                .collect(),
        }
    }

    /// Counterclockwise rectangle with lower-left corner `corner`.
    pub fn rectangular_loop(&self, corner: SiteId, w: usize, h: usize) -> Result<Path> {
        if w == 0 || h == 0 || w > self.lx || h > self.ly {
            return Err(QlmError::InvalidPath(format!(
                "rectangle {w}x{h} does not fit a {}x{} lattice",
                self.lx, self.ly
            )));
        }
        let (cx, cy) = self.coords(corner);
        let (cx, cy) = (cx as i64, cy as i64);
        let (w, h) = (w as i64, h as i64);
        let mut steps = Vec::with_capacity(2 * (w + h) as usize);
        for i in 0..w {
            steps.push(Step::forward(self.link_at(cx + i, cy, Direction::X)));
        }
        for i in 0..h {
            steps.push(Step::forward(self.link_at(cx + w, cy + i, Direction::Y)));
        }
        for i in (0..w).rev() {
            steps.push(Step::backward(self.link_at(cx + i, cy + h, Direction::X)));
        }
        for i in (0..h).rev() {
            steps.push(Step::backward(self.link_at(cx, cy + i, Direction::Y)));
        }
        Path::new(self, steps)
    }

    /// Straight non-contractible loop through `start` along `dir`.
    pub fn wrapping_loop(&self, start: SiteId, dir: Direction) -> Path {
        let len = match dir {
            Direction::X => self.lx,
            Direction::Y => self.ly,
        };
        let steps = (0..len as i64)
            .map(|i| Step::forward(self.link(self.shift(start, dir, i), dir)))
            .collect();
        Path::new(self, steps).expect("straight path is chained")
    }

    /// Straight open path of `len` forward steps.
    pub fn straight_path(&self, start: SiteId, dir: Direction, len: usize) -> Result<Path> {
        let steps = (0..len as i64)
            .map(|i| Step::forward(self.link(self.shift(start, dir, i), dir)))
            .collect();
        Path::new(self, steps)
    }

    pub(crate) fn step_endpoints(&self, step: Step) -> (SiteId, SiteId) {
        let (o, t) = (self.link_origin(step.link), self.link_target(step.link));
        match step.orientation {
            Orientation::Forward => (o, t),
            Orientation::Backward => (t, o),
        }
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.lx, self.ly)
    }
}

/// Ordered chain of oriented links.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    steps: Vec<Step>,
    start: SiteId,
    end: SiteId,
}

impl Path {
    pub fn new(lattice: &Lattice, steps: Vec<Step>) -> Result<Self> {
        let first = steps
            .first()
            .ok_or_else(|| QlmError::InvalidPath("empty path".into()))?;
        for s in &steps {
            if s.link.0 >= lattice.n_links() {
                return Err(QlmError::InvalidPath(format!("unknown link {}", s.link.0)));
            }
        }
        let start = lattice.step_endpoints(*first).0;
        let mut at = start;
        for (k, s) in steps.iter().enumerate() {
            let (from, to) = lattice.step_endpoints(*s);
            if from != at {
                return Err(QlmError::InvalidPath(format!(
                    "step {k} starts at site {} but the path is at site {}",
                    from.0, at.0
                )));
            }
            at = to;
        }
        Ok(Path {
            steps,
            start,
            end: at,
        })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn start(&self) -> SiteId {
        self.start
    }

    pub fn end(&self) -> SiteId {
        self.end
    }

    pub fn is_closed(&self) -> bool {
        self.start == self.end
    }

    /// No link is used twice and no site is revisited (except closing back
    /// onto the start).
    pub fn is_simple(&self, lattice: &Lattice) -> bool {
        let mut links = std::collections::HashSet::new();
        let mut sites = std::collections::HashSet::new();
        sites.insert(self.start);
        for (k, s) in self.steps.iter().enumerate() {
            if !links.insert(s.link) {
                return false;
            }
            let to = lattice.step_endpoints(*s).1;
            let closing = k + 1 == self.steps.len() && to == self.start;
            if !closing && !sites.insert(to) {
                return false;
            }
        }
        true
    }

    /// Net flux `e·orientation` the path deposits on each link.
    pub fn link_flux(&self, e: i32) -> Vec<(LinkId, i32)> {
        let mut acc: std::collections::BTreeMap<LinkId, i32> = Default::default();
        for s in &self.steps {
            *acc.entry(s.link).or_default() += e * s.orientation.sign();
        }
        acc.into_iter().filter(|&(_, v)| v != 0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let l = Lattice::new(2, 2).unwrap();
        assert_eq!((l.n_sites(), l.n_links(), l.n_plaquettes()), (4, 8, 4));
        let l = Lattice::new(1, 3).unwrap();
        assert_eq!((l.n_sites(), l.n_links(), l.n_plaquettes()), (3, 6, 3));
        assert!(l.is_degenerate());
        assert_eq!(Lattice::new(2, 3).unwrap().n_plaquettes(), 6);
    }

    #[test]
    fn rejects_bad_extents_and_budget() {
        assert!(Lattice::new(0, 2).is_err());
        assert!(matches!(
            Lattice::with_link_budget(4, 4, 16),
            Err(QlmError::BudgetExceeded { needed: 32, .. })
        ));
    }

    #[test]
    fn link_round_trip() {
        let l = Lattice::new(3, 2).unwrap();
        let link = l.link_at(2, 1, Direction::Y);
        let (site, dir) = l.decode_link(link);
        assert_eq!(l.coords(site), (2, 1));
        assert_eq!(dir, Direction::Y);
        for link in l.links() {
            let (s, d) = l.decode_link(link);
            assert_eq!(l.link(s, d), link);
        }
    }

    #[test]
    fn site_links_2x2_origin() {
        let l = Lattice::new(2, 2).unwrap();
        let sl = l.links_at_site(l.site(0, 0));
        assert_eq!(
            sl.outgoing,
            [l.link_at(0, 0, Direction::X), l.link_at(0, 0, Direction::Y)]
        );
        assert_eq!(
            sl.incoming,
            [l.link_at(1, 0, Direction::X), l.link_at(0, 1, Direction::Y)]
        );
    }

    #[test]
    fn site_links_degenerate_self_loop() {
        let l = Lattice::new(1, 1).unwrap();
        let sl = l.links_at_site(SiteId(0));
        assert_eq!(sl.outgoing, sl.incoming);
    }

    #[test]
    fn site_links_distinct_on_3x3() {
        let l = Lattice::new(3, 3).unwrap();
        for s in l.sites() {
            let sl = l.links_at_site(s);
            let mut all: Vec<_> = sl.outgoing.iter().chain(&sl.incoming).collect();
            all.sort();
            all.dedup();
            assert_eq!(all.len(), 4);
        }
    }

    #[test]
    fn plaquette_ordering() {
        let l = Lattice::new(2, 2).unwrap();
        let p = l.plaquette_links(PlaquetteId(0));
        assert_eq!(
            p,
            [
                Step::forward(l.link_at(0, 0, Direction::X)),
                Step::forward(l.link_at(1, 0, Direction::Y)),
                Step::backward(l.link_at(0, 1, Direction::X)),
                Step::backward(l.link_at(0, 0, Direction::Y)),
            ]
        );
    }

    #[test]
    fn every_link_in_two_plaquettes() {
        for (lx, ly) in [(2, 2), (2, 3), (3, 3), (4, 2)] {
            let l = Lattice::new(lx, ly).unwrap();
            let mut count = vec![0; l.n_links()];
            for p in l.plaquettes() {
                let steps = l.plaquette_links(p);
                let closed = Path::new(&l, steps.to_vec()).unwrap();
                assert!(closed.is_closed());
                for s in steps {
                    count[s.link.0] += 1;
                }
            }
            assert!(count.iter().all(|&c| c == 2));
        }
    }

    #[test]
    fn cut_sizes() {
        let l = Lattice::new(2, 2).unwrap();
        assert_eq!(l.winding_cut(Direction::X).len(), 2);
        let l = Lattice::new(3, 2).unwrap();
        assert_eq!(l.winding_cut(Direction::Y).len(), 3);
        assert_eq!(l.winding_cut(Direction::X).len(), 2);
    }

    #[test]
    fn unit_rectangle_is_plaquette() {
        let l = Lattice::new(2, 2).unwrap();
        let path = l.rectangular_loop(l.site(0, 0), 1, 1).unwrap();
        assert_eq!(path.steps(), &l.plaquette_links(PlaquetteId(0)));
    }

    #[test]
    fn rectangles_close_on_4x4() {
        let l = Lattice::new(4, 4).unwrap();
        for corner in l.sites() {
            for w in 1..=4 {
                for h in 1..=4 {
                    let p = l.rectangular_loop(corner, w, h).unwrap();
                    assert!(p.is_closed());
                    assert_eq!(p.len(), 2 * (w + h));
                }
            }
        }
        let l = Lattice::new(3, 3).unwrap();
        let p = l.rectangular_loop(l.site(0, 0), 2, 1).unwrap();
        assert_eq!(p.len(), 6);
        assert!(p.is_closed());
        assert!(l.rectangular_loop(l.site(0, 0), 0, 1).is_err());
    }

    #[test]
    fn path_chaining_is_validated() {
        let l = Lattice::new(3, 3).unwrap();
        let bad = vec![
            Step::forward(l.link_at(0, 0, Direction::X)),
            Step::forward(l.link_at(2, 2, Direction::Y)),
        ];
        assert!(Path::new(&l, bad).is_err());
        let open = l.straight_path(l.site(0, 0), Direction::X, 2).unwrap();
        assert!(!open.is_closed());
        assert!(open.is_simple(&l));
        assert!(l.wrapping_loop(l.site(0, 1), Direction::X).is_closed());
    }
}
