//! su(2) building blocks: half-integer labels, spin matrices, and
//! Clebsch–Gordan coefficients. Spins are carried as twice their value so
//! all arithmetic stays in integers.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::C64;

/// Non-negative half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(u32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);

    pub fn from_twice(twice: u32) -> Self {
        HalfInt(twice)
    }

    pub fn from_f64(v: f64) -> Option<Self> {
        let twice = 2.0 * v;
        if v < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return None;
        }
        Some(HalfInt(twice.round() as u32))
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// `j(j+1)`
    pub fn casimir(self) -> f64 {
        let j = self.value();
        j * (j + 1.0)
    }

    /// `2j+1`
    pub fn multiplicity(self) -> usize {
        self.0 as usize + 1
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        HalfInt::from_f64(v)
            .ok_or_else(|| serde::de::Error::custom(format!("{v} is not a non-negative half-integer")))
    }
}

/// Spin matrices `(Jx, Jy, Jz)` for spin `j`, basis ordered `m = −j, …, j`.
pub fn spin_matrices(j: HalfInt) -> [DMatrix<C64>; 3] {
    let n = j.multiplicity();
    let jv = j.value();
    let mut jp = DMatrix::<C64>::zeros(n, n);
    let mut jz = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        let m = -jv + k as f64;
        jz[(k, k)] = C64::new(m, 0.0);
        if k + 1 < n {
            jp[(k + 1, k)] = C64::new((jv * (jv + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * C64::new(0.5, 0.0);
    let jy = (&jp - &jm) * C64::new(0.0, -0.5);
    [jx, jy, jz]
}

/// Generators of left multiplication on the `m_L` index of a spin-`j`
/// link block: `−(J^a)*`. They satisfy `[L¹, L²] = i L³`.
pub fn left_generators(j: HalfInt) -> [DMatrix<C64>; 3] {
    spin_matrices(j).map(|m| -m.conjugate())
}

/// Generators of right multiplication on the `m_R` index: `J^a`.
pub fn right_generators(j: HalfInt) -> [DMatrix<C64>; 3] {
    spin_matrices(j)
}

fn factorial(n: i64) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `⟨j1 m1; j2 m2 | J M⟩` with every argument given as twice its value.
///
/// Condon–Shortley phase convention; zero whenever selection rules fail.
pub fn clebsch_gordan(tj1: i64, tm1: i64, tj2: i64, tm2: i64, tj: i64, tm: i64) -> f64 {
    if tm1 + tm2 != tm {
        return 0.0;
    }
    if tm1.abs() > tj1 || tm2.abs() > tj2 || tm.abs() > tj {
        return 0.0;
    }
    if (tj1 + tm1) % 2 != 0 || (tj2 + tm2) % 2 != 0 || (tj + tm) % 2 != 0 {
        return 0.0;
    }
    if tj < (tj1 - tj2).abs() || tj > tj1 + tj2 || (tj1 + tj2 + tj) % 2 != 0 {
        return 0.0;
    }
    // Every combination below is an integer once halved.
    let h = |x: i64| x / 2;
    let pre = ((tj + 1) as f64 * factorial(h(tj + tj1 - tj2))
        * factorial(h(tj - tj1 + tj2))
        * factorial(h(tj1 + tj2 - tj))
        / factorial(h(tj1 + tj2 + tj) + 1))
    .sqrt();
    let norm = (factorial(h(tj + tm))
        * factorial(h(tj - tm))
        * factorial(h(tj1 - tm1))
        * factorial(h(tj1 + tm1))
        * factorial(h(tj2 - tm2))
        * factorial(h(tj2 + tm2)))
    .sqrt();
    let mut sum = 0.0;
    for k in 0..=h(tj1 + tj2 - tj) {
        let a = h(tj1 + tj2 - tj) - k;
        let b = h(tj1 - tm1) - k;
        let c = h(tj2 + tm2) - k;
        let d = h(tj - tj2 + tm1) + k;
        let e = h(tj - tj1 - tm2) + k;
        if a < 0 || b < 0 || c < 0 || d < 0 || e < 0 {
            continue;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / (factorial(k) * factorial(a) * factorial(b) * factorial(c) * factorial(d) * factorial(e));
    }
    pre * norm * sum
}

/// Multiplicity of the singlet in the tensor product of the given spins.
///
/// Couples the spins one at a time and tracks the multiplicity of every
/// total spin, so it never touches a matrix.
pub fn singlet_count(spins: &[HalfInt]) -> usize {
    let mut mult: std::collections::BTreeMap<u32, usize> = [(0u32, 1usize)].into_iter().collect();
    for s in spins {
        let mut next = std::collections::BTreeMap::new();
        for (&tj, &n) in &mult {
            let lo = (tj as i64 - s.twice() as i64).unsigned_abs() as u32;
            let hi = tj + s.twice();
            let mut t = lo;
            while t <= hi {
                *next.entry(t).or_insert(0) += n;
                t += 2;
            }
        }
        mult = next;
    }
    mult.get(&0).copied().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
        a * b - b * a
    }

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn spin_algebra_closes() {
        for twice in 0..5 {
            let [jx, jy, jz] = spin_matrices(HalfInt::from_twice(twice));
            let i = C64::new(0.0, 1.0);
            assert!(max_abs(&(comm(&jx, &jy) - &jz * i)) < 1e-12);
            assert!(max_abs(&(comm(&jy, &jz) - &jx * i)) < 1e-12);
            assert!(max_abs(&(comm(&jz, &jx) - &jy * i)) < 1e-12);
            let c = &jx * &jx + &jy * &jy + &jz * &jz;
            let j = HalfInt::from_twice(twice);
            for k in 0..j.multiplicity() {
                assert!((c[(k, k)].re - j.casimir()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn known_coefficients() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((clebsch_gordan(1, 1, 1, -1, 2, 0) - s).abs() < 1e-14);
        assert!((clebsch_gordan(1, 1, 1, -1, 0, 0) - s).abs() < 1e-14);
        assert!((clebsch_gordan(1, -1, 1, 1, 0, 0) + s).abs() < 1e-14);
        assert!((clebsch_gordan(1, 1, 1, 1, 2, 2) - 1.0).abs() < 1e-14);
        // <1 0; 1/2 1/2 | 3/2 1/2> = sqrt(2/3)
        assert!((clebsch_gordan(2, 0, 1, 1, 3, 1) - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        // <1 1; 1/2 -1/2 | 1/2 1/2> = sqrt(2/3)
        assert!((clebsch_gordan(2, 2, 1, -1, 1, 1) - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert_eq!(clebsch_gordan(1, 1, 1, 1, 0, 0), 0.0);
        assert_eq!(clebsch_gordan(1, 1, 1, 1, 4, 2), 0.0);
    }

    #[test]
    fn coefficients_are_orthonormal() {
        for tj1 in 0..4i64 {
            for tj2 in 0..3i64 {
                let mut totals = Vec::new();
                let mut tj = (tj1 - tj2).abs();
                while tj <= tj1 + tj2 {
                    totals.push(tj);
                    tj += 2;
                }
                for &ta in &totals {
                    for &tb in &totals {
                        let mut tm = -ta.min(tb);
                        while tm <= ta.min(tb) {
                            let mut dot = 0.0;
                            let mut tm1 = -tj1;
                            while tm1 <= tj1 {
                                let tm2 = tm - tm1;
                                dot += clebsch_gordan(tj1, tm1, tj2, tm2, ta, tm)
                                    * clebsch_gordan(tj1, tm1, tj2, tm2, tb, tm);
                                tm1 += 2;
                            }
                            let want = if ta == tb { 1.0 } else { 0.0 };
                            assert!((dot - want).abs() < 1e-12, "{tj1} {tj2} {ta} {tb} {tm}");
                            tm += 2;
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn singlet_counting() {
        let h = HalfInt::HALF;
        assert_eq!(singlet_count(&[]), 1);
        assert_eq!(singlet_count(&[h]), 0);
        assert_eq!(singlet_count(&[h, h]), 1);
        assert_eq!(singlet_count(&[h, h, h, h]), 2);
        assert_eq!(singlet_count(&[HalfInt::from_twice(2); 3]), 1);
    }

    #[test]
    fn half_int_parsing() {
        assert_eq!(HalfInt::from_f64(0.5), Some(HalfInt::HALF));
        assert_eq!(HalfInt::from_f64(0.3), None);
        assert_eq!(HalfInt::from_f64(-1.0), None);
        assert_eq!(HalfInt::from_twice(3).to_string(), "3/2");
        assert_eq!(HalfInt::from_twice(4).to_string(), "2");
    }
}
