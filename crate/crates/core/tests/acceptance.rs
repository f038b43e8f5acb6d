//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any
//! criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use qlink_core::algebra::HalfInt;
use qlink_core::basis::{build_physical_basis_su2, build_physical_basis_u1};
use qlink_core::evolution::{trotter_evolve, ExactPropagator, Observer, TrotterPlan};
use qlink_core::noise::{apply_dephasing, apply_link_raise_error, penalty_suppression_experiment};
use qlink_core::observables::{
    entanglement_entropy, gauge_violation, ground_state, spectrum, syndrome_sweep, winding_expectation, EntropyUnit,
};
use qlink_core::operators::{
    commutator, commutator_norm, gauss_generator_matrix_su2, gauss_generator_u1, hamiltonian_u1, link_raise_u1,
    penalty_term, HamiltonianParts, MagneticSign, WorkingBasis,
};
use qlink_core::states::{
    apply_color_transform, apply_gauge_transform_u1, baryon_state_su3, flux_loop_state, meson_state_su3,
    physical_projector_apply, random_su3, random_u3, superpose, vacuum_state,
};
use qlink_core::{
    Budget, ChargeConfig, Direction, FullSpace, GaugeModel, Lattice, LinkId, PhysicalBasis, QlmError, SiteId,
    StateVector, C64,
};

type Outcome = Result<(bool, String), QlmError>;

fn lattice22() -> Lattice {
    Lattice::new(2, 2).unwrap()
}

fn u1_basis(s: u32, charges: &ChargeConfig) -> Arc<PhysicalBasis> {
    let l = lattice22();
    Arc::new(build_physical_basis_u1(&l, &GaugeModel::U1 { s }, charges, &Budget::default()).unwrap())
}

fn neutral_u1(s: u32) -> ChargeConfig {
    ChargeConfig::neutral(&GaugeModel::U1 { s }, &lattice22())
}

fn random_state(tag: qlink_core::BasisTag, rng: &mut ChaCha8Rng) -> StateVector {
    let amps = (0..tag.dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::new(tag, amps).unwrap().normalized().unwrap()
}

/// Flux configurations on an `lx × ly` torus read off a mixed-radix index
/// with link `2·(y·lx + x) + dir` and link 0 most significant.
struct Oracle {
    lx: usize,
    ly: usize,
    s: i32,
}

impl Oracle {
    fn n_links(&self) -> usize {
        2 * self.lx * self.ly
    }

    fn config(&self, mut index: usize) -> Vec<i32> {
        let d = (2 * self.s + 1) as usize;
        let mut e = vec![0; self.n_links()];
        for k in (0..self.n_links()).rev() {
            e[k] = (index % d) as i32 - self.s;
            index /= d;
        }
        e
    }

    fn link(&self, x: usize, y: usize, dir: usize) -> usize {
        2 * ((y % self.ly) * self.lx + (x % self.lx)) + dir
    }

    fn divergence(&self, e: &[i32], x: usize, y: usize) -> i32 {
        let out = e[self.link(x, y, 0)] + e[self.link(x, y, 1)];
        let inc = e[self.link(x + self.lx - 1, y, 0)] + e[self.link(x, y + self.ly - 1, 1)];
        out - inc
    }

    fn physical(&self, e: &[i32], rho: &[i32]) -> bool {
        (0..self.ly).all(|y| (0..self.lx).all(|x| self.divergence(e, x, y) == rho[y * self.lx + x]))
    }

    fn winding(&self, e: &[i32]) -> (i32, i32) {
        let wx = (0..self.ly).map(|y| e[self.link(0, y, 0)]).sum();
        let wy = (0..self.lx).map(|x| e[self.link(x, 0, 1)]).sum();
        (wx, wy)
    }
}

/// Von Neumann entropy in bits of the reduced state on `region`, by an
/// explicit dense partial trace.
fn oracle_entropy_bits(amps: &[C64], n_links: usize, d: usize, region: &[usize]) -> f64 {
    let rest: Vec<usize> = (0..n_links).filter(|l| !region.contains(l)).collect();
    let da = d.pow(region.len() as u32);
    let db = d.pow(rest.len() as u32);
    let mut m = DMatrix::<C64>::zeros(da, db);
    for (i, &a) in amps.iter().enumerate() {
        let mut digits = vec![0; n_links];
        let mut r = i;
        for k in (0..n_links).rev() {
            digits[k] = r % d;
            r /= d;
        }
        let ia = region.iter().fold(0, |acc, &l| acc * d + digits[l]);
        let ib = rest.iter().fold(0, |acc, &l| acc * d + digits[l]);
        m[(ia, ib)] = a;
    }
    let rho = &m * m.adjoint();
    let ev = rho.symmetric_eigenvalues();
    ev.iter()
        .filter(|&&p| p > 1e-14)
        .map(|&p| -p * p.log2())
        .sum()
}

fn criterion_1() -> Outcome {
    let l = lattice22();
    let mut worst: f64 = 0.0;
    for s in [1, 2] {
        let space = FullSpace::new(l, GaugeModel::U1 { s })?;
        let charges = neutral_u1(s);
        let gens: Vec<_> = l
            .sites()
            .map(|x| gauss_generator_u1(&space, x, &charges, &Budget::default()))
            .collect::<Result<_, _>>()?;
        for g2 in [0.5, 1.0, 10.0] {
            let h = hamiltonian_u1(&space, g2, MagneticSign::Minus, &Budget::default())?.total()?;
            for g in &gens {
                worst = worst.max(commutator_norm(g, &h)?);
            }
        }
    }
    Ok((worst <= 1e-12, format!("max ‖[G_x, H]‖ = {worst:.3e} (tol 1e-12)")))
}

fn criterion_2() -> Outcome {
    let l = lattice22();
    let oracle = Oracle { lx: 2, ly: 2, s: 1 };
    let mut details = Vec::new();
    let mut ok = true;
    // a ±1 pair stacked in column 0; the x-cut does not separate it, so
    // the reflection x → −x maps sector (1,0) onto (−1,0)
    let mut pair = vec![0; 4];
    pair[0] = 1;
    pair[2] = -1;
    // a diagonal pair straddles the x-cut; only set equality is expected
    let mut diagonal = vec![0; 4];
    diagonal[0] = 1;
    diagonal[3] = -1;
    for (rho, symmetric) in [(vec![0; 4], true), (pair, true), (diagonal, false)] {
        let charges = ChargeConfig::U1(rho.clone());
        let basis = u1_basis(1, &charges);
        let mine: BTreeSet<Vec<i32>> = basis.configs().iter().map(|c| c.0.clone()).collect();
        let mut expected = BTreeSet::new();
        let mut sizes: BTreeMap<(i32, i32), usize> = BTreeMap::new();
        for i in 0..3usize.pow(8) {
            let e = oracle.config(i);
            if oracle.physical(&e, &rho) {
                *sizes.entry(oracle.winding(&e)).or_default() += 1;
                expected.insert(e);
            }
        }
        let mut my_sizes: BTreeMap<(i32, i32), usize> = BTreeMap::new();
        for w in basis.sectors() {
            *my_sizes.entry((w.wx, w.wy)).or_default() += 1;
        }
        let set_eq = mine == expected && basis.dim() == expected.len();
        let sizes_eq = my_sizes == sizes;
        let sym = sizes.get(&(1, 0)) == sizes.get(&(-1, 0)) && my_sizes.get(&(1, 0)) == my_sizes.get(&(-1, 0));
        ok &= set_eq && sizes_eq && (sym || !symmetric) && l.n_links() == 8;
        details.push(format!(
            "ρ={rho:?}: dim {} vs oracle {}, sectors match {sizes_eq}, |(1,0)|={:?} |(-1,0)|={:?}",
            basis.dim(),
            expected.len(),
            my_sizes.get(&(1, 0)),
            my_sizes.get(&(-1, 0))
        ));
    }
    Ok((ok, details.join("; ")))
}

fn criterion_3() -> Outcome {
    let l = lattice22();
    let m = GaugeModel::Su2 { j_max: HalfInt::HALF };
    let budget = Budget::default();
    let basis = build_physical_basis_su2(&l, &m, &budget)?;
    let space = basis.space().clone();
    let mut gens = Vec::new();
    for x in l.sites() {
        let mut per = Vec::new();
        for a in 0..3 {
            per.push(gauss_generator_matrix_su2(&space, x, a, &budget)?);
        }
        gens.push(per);
    }
    let mut cert: f64 = 0.0;
    for v in basis.members() {
        let mut dense = vec![C64::new(0.0, 0.0); space.dim()];
        for &(i, a) in v {
            dense[i] = a;
        }
        for g in gens.iter().flatten() {
            let gv = g.apply(&dense)?;
            cert = cert.max(gv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
        }
    }
    let i = C64::new(0.0, 1.0);
    let mut closure: f64 = 0.0;
    for g in &gens {
        for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let lhs = commutator(&g[a], &g[b])?;
            closure = closure.max(lhs.sub(&g[c].scale(i))?.max_abs());
        }
    }
    let mut cross: f64 = 0.0;
    for x in 0..gens.len() {
        for y in x + 1..gens.len() {
            for ga in &gens[x] {
                for gb in &gens[y] {
                    cross = cross.max(commutator_norm(ga, gb)?);
                }
            }
        }
    }
    let ok = cert <= 1e-9 && closure <= 1e-12 && cross <= 1e-12 && basis.dim() > 0;
    Ok((
        ok,
        format!(
            "kernel dim {}, max ‖G v‖ = {cert:.3e} (tol 1e-9), closure {closure:.3e}, cross-site {cross:.3e} (tol 1e-12)",
            basis.dim()
        ),
    ))
}

fn criterion_4() -> Outcome {
    let basis = u1_basis(1, &neutral_u1(1));
    let wb = WorkingBasis::Physical(basis.clone());
    let budget = Budget::default();
    let parts = HamiltonianParts::build(&wb, 1.0, MagneticSign::Minus, &budget)?;
    let psi = vacuum_state(&wb)?;
    let exact = ExactPropagator::new(&parts.total()?, &budget)?.evolve(&psi, 1.0)?;
    let observers = [
        Observer::real("wx", |s| Ok(winding_expectation(&wb, s)?.0)),
        Observer::real("wy", |s| Ok(winding_expectation(&wb, s)?.1)),
    ];
    let mut errs = Vec::new();
    let mut drift: f64 = 0.0;
    let mut wind: f64 = 0.0;
    for (dt, steps) in [(0.1, 10), (0.05, 20)] {
        let plan = TrotterPlan::new(dt, steps)?;
        let (out, report) = trotter_evolve(&parts, &psi, &plan, &observers, None, &budget)?;
        errs.push(out.distance(&exact)?);
        drift = drift.max(report.norm_drift());
        for name in ["wx", "wy"] {
            let series = report.series(name);
            let first = series[0].1;
            wind = wind.max(series.iter().map(|(_, v)| (v - first).norm()).fold(0.0, f64::max));
        }
    }
    let ratio = errs[0] / errs[1];
    let ok = (1.7..=2.3).contains(&ratio) && drift <= 1e-9 && wind <= 1e-10;
    Ok((
        ok,
        format!(
            "err(0.1) = {:.4e}, err(0.05) = {:.4e}, ratio {ratio:.4} in [1.7, 2.3]; norm drift {drift:.3e}; winding drift {wind:.3e}",
            errs[0], errs[1]
        ),
    ))
}

fn criterion_5() -> Outcome {
    let basis = u1_basis(1, &neutral_u1(1));
    let wb = WorkingBasis::Physical(basis.clone());
    let budget = Budget::default();
    let vac = vacuum_state(&wb)?;
    let mut overlaps = Vec::new();
    let mut mults = Vec::new();
    for g2 in [100.0, 0.5] {
        let h = HamiltonianParts::build(&wb, g2, MagneticSign::Minus, &budget)?.total()?;
        let gs = ground_state(&h, &budget)?;
        overlaps.push(gs.state.fidelity(&vac)?);
        mults.push(gs.multiplicity);
    }
    let ok = overlaps[0] > 0.999 && overlaps[1] < 0.9 && mults.iter().all(|&m| m == 1);
    Ok((
        ok,
        format!(
            "|⟨0|Ω⟩|² = {:.6} at g²=100 (> 0.999), {:.6} at g²=0.5 (< 0.9); multiplicities {mults:?}",
            overlaps[0], overlaps[1]
        ),
    ))
}

fn criterion_6() -> Outcome {
    let l = lattice22();
    let m = GaugeModel::U1 { s: 1 };
    let charges = neutral_u1(1);
    let basis = u1_basis(1, &charges);
    let budget = Budget::default();
    let space = FullSpace::new(l, m)?;
    let h_full = hamiltonian_u1(&space, 1.0, MagneticSign::Minus, &budget)?.total()?;
    let pen = penalty_term(&space, 100.0, &charges, &budget)?;
    let full_spec = spectrum(&h_full.add(&pen)?, &budget)?;
    let wb = WorkingBasis::Physical(basis.clone());
    let phys_spec = spectrum(&HamiltonianParts::build(&wb, 1.0, MagneticSign::Minus, &budget)?.total()?, &budget)?;
    let dim = basis.dim();
    let mut worst: f64 = 0.0;
    let mut ok = full_spec.len() >= dim;
    for (a, b) in full_spec.iter().zip(&phys_spec) {
        let rel = (a - b).abs() / b.abs();
        worst = worst.max(rel);
        ok &= (a - b).abs() <= 0.005 * b.abs();
    }
    let gap = full_spec[dim] - phys_spec[dim - 1];
    Ok((
        ok,
        format!("D = {dim}, max relative deviation {worst:.3e} (tol 5e-3); first unphysical level sits {gap:.3} above the top physical one"),
    ))
}

fn criterion_7() -> Outcome {
    let l = lattice22();
    let charges = neutral_u1(1);
    let basis = u1_basis(1, &charges);
    let full = WorkingBasis::Full(basis.space().clone());
    let mut raises = 0;
    let mut absorbed = 0;
    let mut ok = true;
    let mut worst_leak: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for cfg in basis.configs() {
        let idx = basis.space().index_of_config(cfg)?;
        let psi = StateVector::basis_state(full.tag(), idx)?;
        for link in l.links() {
            match apply_link_raise_error(&full, &psi, link) {
                Ok((bad, _)) => {
                    raises += 1;
                    let leak = gauge_violation(&bad, &basis)?;
                    let syn = syndrome_sweep(&full, &bad, &charges)?;
                    let flagged: BTreeSet<usize> = syn.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(i, _)| i).collect();
                    let ends: BTreeSet<usize> = [l.link_origin(link).0, l.link_target(link).0].into();
                    ok &= leak == 1.0 && flagged == ends;
                }
                Err(QlmError::AbsorbedByTruncation(_)) => absorbed += 1,
                Err(e) => return Err(e),
            }
            let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let deph = apply_dephasing(&full, &psi, link, angle)?;
            worst_leak = worst_leak.max(gauge_violation(&deph, &basis)?);
        }
    }
    for _ in 0..20 {
        let amps: Vec<C64> = (0..basis.dim())
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let psi = StateVector::new(full.tag(), basis.embed(&amps)?)?.normalized()?;
        for link in l.links() {
            let deph = apply_dephasing(&full, &psi, link, rng.random_range(-3.0..3.0))?;
            worst_leak = worst_leak.max(gauge_violation(&deph, &basis)?);
        }
    }
    ok &= worst_leak == 0.0;
    Ok((
        ok,
        format!(
            "{raises} raise errors on {} basis states: leakage 1 and syndromes at both endpoints; {absorbed} absorbed at the cutoff; max dephasing leakage {worst_leak:.1e}",
            basis.dim()
        ),
    ))
}

/// Classical fourth-order Runge–Kutta integration of `ψ' = −iHψ`.
fn rk4_evolve(h: &qlink_core::SparseOperator, psi: &[C64], t: f64, steps: usize) -> Vec<C64> {
    let dt = t / steps as f64;
    let mi = C64::new(0.0, -1.0);
    let f = |v: &[C64]| -> Vec<C64> { h.apply(v).unwrap().into_iter().map(|z| z * mi).collect() };
    let axpy = |a: &[C64], b: &[C64], s: f64| -> Vec<C64> { a.iter().zip(b).map(|(x, y)| x + y * s).collect() };
    let mut y = psi.to_vec();
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, &k1, dt / 2.0));
        let k3 = f(&axpy(&y, &k2, dt / 2.0));
        let k4 = f(&axpy(&y, &k3, dt));
        for i in 0..y.len() {
            y[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
        }
    }
    y
}

fn criterion_8() -> Outcome {
    let l = lattice22();
    let basis = u1_basis(1, &neutral_u1(1));
    let links: Vec<LinkId> = l.links().collect();
    let lambdas = [0.0, 1.0, 10.0, 100.0];
    let exp = penalty_suppression_experiment(&basis, 1.0, MagneticSign::Minus, &lambdas, 0.1, 5.0, &links, &Budget::default())?;
    let leak: Vec<f64> = exp.rows.iter().filter(|r| r.lambda.is_some()).map(|r| r.leakage).collect();
    let monotone = leak.windows(2).all(|w| w[1] <= w[0] + 1e-6);
    let projected = exp.rows.last().map(|r| r.leakage).unwrap_or(f64::NAN);

    // independent integrator at λ = 0
    let space = basis.space().clone();
    let budget = Budget::default();
    let mut h = hamiltonian_u1(&space, 1.0, MagneticSign::Minus, &budget)?.total()?;
    for &k in &links {
        let u = link_raise_u1(&space, k, &budget)?;
        h = h.add(&u.add(&u.adjoint())?.scale_re(0.1))?;
    }
    let vac = vacuum_state(&WorkingBasis::Full(space.clone()))?;
    let out = StateVector::new(space.tag(), rk4_evolve(&h, vac.amps(), 5.0, 5000))?;
    let oracle = gauge_violation(&out, &basis)?;
    let agree = (oracle - leak[0]).abs() <= 1e-6;

    Ok((
        monotone && agree && projected == 0.0,
        format!(
            "leakage over λ ∈ {lambdas:?}: {} (non-increasing within 1e-6); λ=∞ {projected:.1e}; λ=0 oracle {oracle:.10} vs {:.10}",
            leak.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(", "),
            leak[0]
        ),
    ))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let meson = meson_state_su3();
    let baryon = baryon_state_su3();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let g = random_su3(&mut rng);
        let m2 = apply_color_transform(&meson, &[0, 1], &g)?;
        let b2 = apply_color_transform(&baryon, &[0, 1, 2], &g)?;
        worst = worst.max(1.0 - meson.fidelity(&m2)?).max(1.0 - baryon.fidelity(&b2)?);
    }
    let mut phase_err: f64 = 0.0;
    for _ in 0..20 {
        let g: Matrix3<C64> = random_u3(&mut rng);
        let det = g.determinant();
        let b2 = apply_color_transform(&baryon, &[0, 1, 2], &g)?;
        for (x, y) in b2.amps().iter().zip(baryon.amps()) {
            phase_err = phase_err.max((x - det * y).norm());
        }
    }
    Ok((
        worst <= 1e-12 && phase_err <= 1e-12,
        format!("max 1 − fidelity {worst:.3e} over 20 SU(3) draws; max |g·B − det(g)·B| {phase_err:.3e} over 20 U(3) draws"),
    ))
}

fn criterion_10() -> Outcome {
    let l = lattice22();
    let charges = neutral_u1(1);
    let basis = u1_basis(1, &charges);
    let space = basis.space().clone();
    let full = WorkingBasis::Full(space.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut idem: f64 = 0.0;
    for _ in 0..100 {
        let psi = random_state(space.tag(), &mut rng);
        let p1 = physical_projector_apply(&psi, &basis)?;
        let p2 = physical_projector_apply(&p1, &basis)?;
        idem = idem.max(p1.distance(&p2)?);
    }
    let alphas: Vec<f64> = (1..=8).map(|k| 2.0 * std::f64::consts::PI * k as f64 / 8.0).collect();
    let invariant = |psi: &StateVector| -> Result<bool, QlmError> {
        for x in l.sites() {
            for &a in &alphas {
                if apply_gauge_transform_u1(&full, psi, x, a, &charges)?.distance(psi)? > 1e-12 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    };
    let mut mismatches = 0;
    for i in 0..space.dim() {
        let psi = StateVector::basis_state(space.tag(), i)?;
        let fixed = physical_projector_apply(&psi, &basis)?.distance(&psi)? <= 1e-12;
        if invariant(&psi)? != fixed {
            mismatches += 1;
        }
    }
    for k in 0..20 {
        let psi = if k % 2 == 0 {
            let amps: Vec<C64> = (0..basis.dim())
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            StateVector::new(space.tag(), basis.embed(&amps)?)?.normalized()?
        } else {
            random_state(space.tag(), &mut rng)
        };
        let fixed = physical_projector_apply(&psi, &basis)?.distance(&psi)? <= 1e-12;
        if invariant(&psi)? != fixed || fixed != (k % 2 == 0) {
            mismatches += 1;
        }
    }
    Ok((
        idem <= 1e-12 && mismatches == 0,
        format!(
            "max ‖P²ψ − Pψ‖ {idem:.3e} over 100 states; invariance ⇔ Pψ = ψ on all {} configurations and 20 superpositions, {mismatches} mismatches",
            space.dim()
        ),
    ))
}

fn criterion_11() -> Outcome {
    let l = lattice22();
    let basis = u1_basis(1, &neutral_u1(1));
    let space = basis.space().clone();
    let full = WorkingBasis::Full(space.clone());
    let budget = Budget::default();
    let n = l.n_links();
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let region: Vec<usize> = vec![0, 1, 5];
    let complement: Vec<usize> = (0..n).filter(|k| !region.contains(k)).collect();
    let ids = |v: &[usize]| v.iter().map(|&k| LinkId(k)).collect::<Vec<_>>();
    let mut sym: f64 = 0.0;
    let mut vs_oracle: f64 = 0.0;
    for _ in 0..5 {
        let amps: Vec<C64> = (0..basis.dim())
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let psi = StateVector::new(space.tag(), basis.embed(&amps)?)?.normalized()?;
        let sa = entanglement_entropy(&full, &psi, &ids(&region), EntropyUnit::Bits, &budget)?;
        let sb = entanglement_entropy(&full, &psi, &ids(&complement), EntropyUnit::Bits, &budget)?;
        sym = sym.max((sa - sb).abs());
        vs_oracle = vs_oracle.max((sa - oracle_entropy_bits(psi.amps(), n, 3, &region)).abs());
    }
    let mut product: f64 = 0.0;
    for cfg in basis.configs().iter().take(40) {
        let psi = StateVector::basis_state(space.tag(), space.index_of_config(cfg)?)?;
        product = product.max(entanglement_entropy(&full, &psi, &ids(&region), EntropyUnit::Bits, &budget)?.abs());
    }

    // two loops with disjoint links, cut along the links of the first
    let a = l.rectangular_loop(SiteId(0), 1, 1)?;
    let b = l.rectangular_loop(l.site(1, 1), 1, 1)?;
    let la: Vec<usize> = a.steps().iter().map(|s| s.link.0).collect();
    let lb: BTreeSet<usize> = b.steps().iter().map(|s| s.link.0).collect();
    let disjoint = la.iter().all(|k| !lb.contains(k));
    let one = C64::new(1.0, 0.0);
    let sup = superpose(&full, &[flux_loop_state(&full, &a, 1)?, flux_loop_state(&full, &b, 1)?], &[one, one])?.state;
    let s_loops = entanglement_entropy(&full, &sup, &ids(&la), EntropyUnit::Bits, &budget)?;
    let o_loops = oracle_entropy_bits(sup.amps(), n, 3, &la);

    // two winding strings on different rows, cut along the first row
    let r0 = l.wrapping_loop(SiteId(0), Direction::X);
    let r1 = l.wrapping_loop(l.site(0, 1), Direction::X);
    let lr0: Vec<usize> = r0.steps().iter().map(|s| s.link.0).collect();
    let wsup = superpose(&full, &[flux_loop_state(&full, &r0, 1)?, flux_loop_state(&full, &r1, 1)?], &[one, one])?.state;
    let s_wind = entanglement_entropy(&full, &wsup, &ids(&lr0), EntropyUnit::Bits, &budget)?;
    let o_wind = oracle_entropy_bits(wsup.amps(), n, 3, &lr0);

    let ok = sym <= 1e-10
        && vs_oracle <= 1e-10
        && product <= 1e-10
        && disjoint
        && (s_loops - 1.0).abs() <= 1e-10
        && (o_loops - 1.0).abs() <= 1e-10
        && (s_wind - 1.0).abs() <= 1e-10
        && (o_wind - 1.0).abs() <= 1e-10;
    Ok((
        ok,
        format!(
            "|S(A) − S(Ā)| {sym:.2e}, vs partial-trace oracle {vs_oracle:.2e}; product configs {product:.1e}; loop pair {s_loops:.12} bit (oracle {o_loops:.12}); winding pair {s_wind:.12} bit (oracle {o_wind:.12})"
        ),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("gauss-law commutation (U(1))", criterion_1),
        ("physical-basis oracle equivalence (U(1))", criterion_2),
        ("SU(2) kernel certificate", criterion_3),
        ("first-order Trotter scaling", criterion_4),
        ("strong-coupling ground state", criterion_5),
        ("penalty-term faithfulness", criterion_6),
        ("leakage detection", criterion_7),
        ("penalty suppression monotonicity", criterion_8),
        ("SU(3) singlet invariance", criterion_9),
        ("projector algebra", criterion_10),
        ("entropy sanity", criterion_11),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "{} [{}] {name}: {detail} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
