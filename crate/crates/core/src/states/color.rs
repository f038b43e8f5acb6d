//! SU(3) color registers for single-site singlets.

use nalgebra::{DMatrix, Matrix3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{QlmError, Result};
use crate::{C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotKind {
    /// Transforms in the fundamental `3`.
    Quark,
    /// Transforms in the conjugate `3̄`.
    Antiquark,
}

/// Amplitudes over color indices `α ∈ {0, 1, 2}` per slot, slot 0 most
/// significant.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorRegisterState {
    slots: Vec<SlotKind>,
    amps: Vec<C64>,
}

impl ColorRegisterState {
    pub fn new(slots: Vec<SlotKind>, amps: Vec<C64>) -> Result<Self> {
        if slots.is_empty() {
            return Err(QlmError::InvalidArgument("a color register needs at least one slot".into()));
        }
        let dim = 3usize.pow(slots.len() as u32);
        if amps.len() != dim {
            return Err(QlmError::DimensionMismatch(amps.len(), dim));
        }
        Ok(ColorRegisterState { slots, amps })
    }

    pub fn slots(&self) -> &[SlotKind] {
        &self.slots
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    /// Amplitude of the color assignment `colors` (one index per slot).
    pub fn amplitude(&self, colors: &[usize]) -> C64 {
        let idx = colors.iter().fold(0, |acc, &c| acc * 3 + c);
        self.amps[idx]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &ColorRegisterState) -> Result<C64> {
        if self.slots != other.slots {
            return Err(QlmError::InvalidArgument("color registers have different slot layouts".into()));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨a|b⟩|²` for normalized registers.
    pub fn fidelity(&self, other: &ColorRegisterState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Exchange of two slots.
    pub fn swap_slots(&self, a: usize, b: usize) -> Result<ColorRegisterState> {
        let n = self.slots.len();
        if a >= n || b >= n {
            return Err(QlmError::InvalidArgument(format!("slot out of range for {n} slots")));
        }
        let mut slots = self.slots.clone();
        slots.swap(a, b);
        let mut amps = vec![ZERO; self.amps.len()];
        for (idx, &v) in self.amps.iter().enumerate() {
            let mut colors = digits(idx, n);
            colors.swap(a, b);
            amps[colors.iter().fold(0, |acc, &c| acc * 3 + c)] = v;
        }
        ColorRegisterState::new(slots, amps)
    }
}

fn digits(mut idx: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for k in (0..n).rev() {
        out[k] = idx % 3;
        idx /= 3;
    }
    out
}

/// `(1/√3) Σ_α |α⟩_q |α⟩_q̄`
pub fn meson_state_su3() -> ColorRegisterState {
    let mut amps = vec![ZERO; 9];
    for a in 0..3 {
        amps[a * 3 + a] = C64::new(1.0 / 3f64.sqrt(), 0.0);
    }
    ColorRegisterState {
        slots: vec![SlotKind::Quark, SlotKind::Antiquark],
        amps,
    }
}

/// `(1/√6) Σ ε_{αβγ} |α⟩|β⟩|γ⟩`
pub fn baryon_state_su3() -> ColorRegisterState {
    let mut amps = vec![ZERO; 27];
    let w = 1.0 / 6f64.sqrt();
    for (p, sign) in [([0, 1, 2], 1.0), ([1, 2, 0], 1.0), ([2, 0, 1], 1.0), ([0, 2, 1], -1.0), ([2, 1, 0], -1.0), ([1, 0, 2], -1.0)] {
        amps[p[0] * 9 + p[1] * 3 + p[2]] = C64::new(sign * w, 0.0);
    }
    ColorRegisterState {
        slots: vec![SlotKind::Quark; 3],
        amps,
    }
}

/// Tolerance on `‖g†g − 1‖_max` accepted by [`apply_color_transform`].
pub const UNITARITY_TOL: f64 = 1e-12;

/// Applies `g` on each listed slot: `|α⟩ → Σ_γ g(α,γ)|γ⟩` on quark slots
/// and the complex conjugate on antiquark slots.
pub fn apply_color_transform(
    state: &ColorRegisterState,
    slots: &[usize],
    g: &Matrix3<C64>,
) -> Result<ColorRegisterState> {
    let dev = (g.adjoint() * g - Matrix3::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > UNITARITY_TOL {
        return Err(QlmError::NotUnitary(dev));
    }
    let n = state.slots.len();
    let mut amps = state.amps.clone();
    for &slot in slots {
        let kind = *state
            .slots
            .get(slot)
            .ok_or_else(|| QlmError::InvalidArgument(format!("slot {slot} out of range for {n} slots")))?;
        let stride = 3usize.pow((n - 1 - slot) as u32);
        let mut next = vec![ZERO; amps.len()];
        for (idx, &v) in amps.iter().enumerate() {
            if v == ZERO {
                continue;
            }
            let alpha = (idx / stride) % 3;
            let base = idx - alpha * stride;
            for gamma in 0..3 {
                let m = match kind {
                    SlotKind::Quark => g[(alpha, gamma)],
                    SlotKind::Antiquark => g[(alpha, gamma)].conj(),
                };
                next[base + gamma * stride] += m * v;
            }
        }
        amps = next;
    }
    ColorRegisterState::new(state.slots.clone(), amps)
}

/// Unitary from the QR factorization of a complex Gaussian matrix, with the
/// phases of `R`'s diagonal absorbed into `Q`.
pub fn random_u3<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<C64> {
    let m = DMatrix::<C64>::from_fn(3, 3, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = m.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = Matrix3::<C64>::zeros();
    for col in 0..3 {
        let d = r[(col, col)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..3 {
            out[(row, col)] = q[(row, col)] * phase;
        }
    }
    out
}

/// [`random_u3`] rescaled to unit determinant.
pub fn random_su3<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<C64> {
    let g = random_u3(rng);
    let det = g.determinant();
    g * C64::from_polar(1.0, -det.arg() / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn registers_are_normalized() {
        assert!((meson_state_su3().norm() - 1.0).abs() < 1e-15);
        assert!((baryon_state_su3().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn baryon_is_antisymmetric() {
        let b = baryon_state_su3();
        for (x, y) in [(0, 1), (1, 2), (0, 2)] {
            let s = b.swap_slots(x, y).unwrap();
            for (p, q) in s.amps().iter().zip(b.amps()) {
                assert_eq!(*p, -*q);
            }
        }
    }

    #[test]
    fn random_su3_has_unit_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let g = random_su3(&mut rng);
            assert!((g.determinant() - C64::new(1.0, 0.0)).norm() < 1e-12);
            let dev = (g.adjoint() * g - Matrix3::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(dev < 1e-13);
        }
    }

    #[test]
    fn rejects_non_unitary() {
        let g = Matrix3::<C64>::identity() * C64::new(1.1, 0.0);
        assert!(matches!(
            apply_color_transform(&meson_state_su3(), &[0], &g),
            Err(QlmError::NotUnitary(_))
        ));
    }

    #[test]
    fn identity_is_trivial() {
        let b = baryon_state_su3();
        let out = apply_color_transform(&b, &[0, 1, 2], &Matrix3::identity()).unwrap();
        assert_eq!(out, b);
    }
}
