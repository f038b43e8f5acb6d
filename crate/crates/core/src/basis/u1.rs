use crate::basis::{ChargeConfig, FluxConfig, FullSpace, GaugeModel, PhysicalBasis, WindingSector};
use crate::error::{check_budget, QlmError, Result};
use crate::lattice::{Direction, Lattice, SiteId};
use crate::{Budget, C64};

/// `(Σ_out e − Σ_in e) − ρ` at `site`.
pub fn gauss_residual_u1(lattice: &Lattice, config: &FluxConfig, site: SiteId, charges: &ChargeConfig) -> i32 {
    let sl = lattice.links_at_site(site);
    let out: i32 = sl.outgoing.iter().map(|&l| config.get(l)).sum();
    let inc: i32 = sl.incoming.iter().map(|&l| config.get(l)).sum();
    out - inc - charges.u1_at(site)
}

/// Winding numbers measured on the cuts at position 0.
pub fn winding_numbers(config: &FluxConfig, lattice: &Lattice) -> WindingSector {
    winding_numbers_at(config, lattice, 0, 0)
}

pub fn winding_numbers_at(config: &FluxConfig, lattice: &Lattice, column: usize, row: usize) -> WindingSector {
    let sum = |links: Vec<crate::LinkId>| links.into_iter().map(|l| config.get(l)).sum::<i32>();
    WindingSector {
        wx: sum(lattice.winding_cut_at(Direction::X, column)),
        wy: sum(lattice.winding_cut_at(Direction::Y, row)),
    }
}

/// All U(1) configurations with zero Gauss residual at every site, in
/// lexicographic order, each tagged with its winding sector.
pub fn build_physical_basis_u1(
    lattice: &Lattice,
    model: &GaugeModel,
    charges: &ChargeConfig,
    budget: &Budget,
) -> Result<PhysicalBasis> {
    let s = model
        .u1_truncation()
        .ok_or_else(|| QlmError::InvalidModel(format!("{model} is not a U(1) model")))?;
    charges.validate(model, lattice)?;
    let space = FullSpace::new(*lattice, *model)?;
    let rho: Vec<i32> = lattice.sites().map(|x| charges.u1_at(x)).collect();
    let configs = enumerate(lattice, s as i32, &rho, budget.full)?;
    let sectors = configs.iter().map(|c| winding_numbers(c, lattice)).collect();
    let members = configs
        .iter()
        .map(|c| Ok(vec![(space.index_of_config(c)?, C64::new(1.0, 0.0))]))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhysicalBasis::from_members(space, charges.clone(), members, configs, sectors))
}

/// Depth-first assignment of links in index order. A site is checked as
/// soon as the flux still to be assigned around it can no longer reach its
/// charge.
fn enumerate(lattice: &Lattice, s: i32, rho: &[i32], limit: usize) -> Result<Vec<FluxConfig>> {
    let n = lattice.n_links();
    // Incidences (site, sign) per link.
    let incid: Vec<[(usize, i32); 2]> = lattice
        .links()
        .map(|l| [(lattice.link_origin(l).0, 1), (lattice.link_target(l).0, -1)])
        .collect();
    // remaining[k][site]: incidences at `site` on links with index > k.
    let mut remaining = vec![vec![0i32; lattice.n_sites()]; n];
    for k in 0..n {
        for inc in incid.iter().skip(k + 1) {
            for &(site, _) in inc {
                remaining[k][site] += 1;
            }
        }
    }

    struct Walk<'a> {
        s: i32,
        rho: &'a [i32],
        incid: &'a [[(usize, i32); 2]],
        remaining: &'a [Vec<i32>],
        div: Vec<i32>,
        config: Vec<i32>,
        out: Vec<FluxConfig>,
        limit: usize,
    }

    impl Walk<'_> {
        fn go(&mut self, k: usize) -> Result<()> {
            if k == self.config.len() {
                check_budget("physical basis", self.out.len() + 1, self.limit)?;
                self.out.push(FluxConfig(self.config.clone()));
                return Ok(());
            }
            for e in -self.s..=self.s {
                for &(site, sign) in &self.incid[k] {
                    self.div[site] += sign * e;
                }
                let feasible = self.incid[k].iter().all(|&(site, _)| {
                    (self.div[site] - self.rho[site]).abs() <= self.s * self.remaining[k][site]
                });
                if feasible {
                    self.config[k] = e;
                    self.go(k + 1)?;
                }
                for &(site, sign) in &self.incid[k] {
                    self.div[site] -= sign * e;
                }
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        s,
        rho,
        incid: &incid,
        remaining: &remaining,
        div: vec![0; lattice.n_sites()],
        config: vec![0; n],
        out: Vec::new(),
        limit,
    };
    walk.go(0)?;
    Ok(walk.out)
}
