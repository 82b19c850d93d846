//! Bell-state labels and vectors for the two degrees of freedom, the
//! deterministic CNOT-and-postselect transition table, and the Hadamard
//! relabeling of polarization Bell states.
//!
//! Conventions (pinned; the density-matrix oracle cross-checks every table
//! entry against explicit state vectors):
//!
//! * Polarization basis order (A, B): `HH, HV, VH, VV`.
//!   `Psi± = (|HV> ± |VH>)/sqrt(2)`, `Phi± = (|HH> ± |VV>)/sqrt(2)`.
//! * Frequency basis order (A, B): `ss, si, is, ii` with `s = omega_s`
//!   (signal) and `i = omega_i` (idler).
//!   `psi± = (|si> ± |is>)/sqrt(2)`, `phi± = (|ss> ± |ii>)/sqrt(2)`.
//! * The conversion step applies, on each side, a CNOT with the photon's
//!   polarization as control and its frequency as target:
//!   `|omega H> -> |omega H>`, `|omega_s V> -> |omega_i V>`,
//!   `|omega_i V> -> |omega_s V>`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::matrix::C64;

/// Polarization Bell state of the photon pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolBell {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

/// Frequency Bell state of the photon pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FreqBell {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

/// Postselection verdict for one branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KeepDecision {
    Keep,
    Discard,
}

impl PolBell {
    pub const ALL: [PolBell; 4] = [
        PolBell::PsiPlus,
        PolBell::PsiMinus,
        PolBell::PhiPlus,
        PolBell::PhiMinus,
    ];

    /// Canonical serialization name.
    pub fn name(&self) -> &'static str {
        match self {
            PolBell::PsiPlus => "Psi+",
            PolBell::PsiMinus => "Psi-",
            PolBell::PhiPlus => "Phi+",
            PolBell::PhiMinus => "Phi-",
        }
    }

    pub fn from_name(name: &str) -> Option<PolBell> {
        PolBell::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn index(&self) -> usize {
        match self {
            PolBell::PsiPlus => 0,
            PolBell::PsiMinus => 1,
            PolBell::PhiPlus => 2,
            PolBell::PhiMinus => 3,
        }
    }
}

impl FreqBell {
    pub const ALL: [FreqBell; 4] = [
        FreqBell::PsiPlus,
        FreqBell::PsiMinus,
        FreqBell::PhiPlus,
        FreqBell::PhiMinus,
    ];

    /// Canonical serialization name (lowercase: frequency DoF).
    pub fn name(&self) -> &'static str {
        match self {
            FreqBell::PsiPlus => "psi+",
            FreqBell::PsiMinus => "psi-",
            FreqBell::PhiPlus => "phi+",
            FreqBell::PhiMinus => "phi-",
        }
    }

    pub fn from_name(name: &str) -> Option<FreqBell> {
        FreqBell::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn index(&self) -> usize {
        match self {
            FreqBell::PsiPlus => 0,
            FreqBell::PsiMinus => 1,
            FreqBell::PhiPlus => 2,
            FreqBell::PhiMinus => 3,
        }
    }

    /// True for phi±, i.e. the equal-frequency (ss/ii) subspace.
    pub fn is_equal_frequency(&self) -> bool {
        matches!(self, FreqBell::PhiPlus | FreqBell::PhiMinus)
    }
}

impl KeepDecision {
    /// Standard-variant rule: keep exactly the equal-frequency outputs.
    pub fn from_output_freq(f: FreqBell) -> KeepDecision {
        if f.is_equal_frequency() {
            KeepDecision::Keep
        } else {
            KeepDecision::Discard
        }
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// State vector over the polarization pair basis (HH, HV, VH, VV).
pub fn pol_bell_vector(b: PolBell) -> [C64; 4] {
    let r = FRAC_1_SQRT_2;
    match b {
        PolBell::PsiPlus => [c(0.0), c(r), c(r), c(0.0)],
        PolBell::PsiMinus => [c(0.0), c(r), c(-r), c(0.0)],
        PolBell::PhiPlus => [c(r), c(0.0), c(0.0), c(r)],
        PolBell::PhiMinus => [c(r), c(0.0), c(0.0), c(-r)],
    }
}

/// State vector over the frequency pair basis (ss, si, is, ii).
pub fn freq_bell_vector(b: FreqBell) -> [C64; 4] {
    let r = FRAC_1_SQRT_2;
    match b {
        FreqBell::PsiPlus => [c(0.0), c(r), c(r), c(0.0)],
        FreqBell::PsiMinus => [c(0.0), c(r), c(-r), c(0.0)],
        FreqBell::PhiPlus => [c(r), c(0.0), c(0.0), c(r)],
        FreqBell::PhiMinus => [c(r), c(0.0), c(0.0), c(-r)],
    }
}

/// Branch outcome of the two-sided CNOT followed by equal-frequency
/// postselection, for a product of Bell states in the two DoFs.
///
/// The map is a bijection on the 16 products and is its own inverse (the
/// underlying unitary is self-inverse). The keep decision is the
/// standard-variant rule and depends only on the output frequency state.
/// The phi-input rows follow from self-inverseness; the oracle test suite
/// regenerates all 16 rows from the explicit unitary.
pub fn cnot_transition(p: PolBell, f: FreqBell) -> (PolBell, FreqBell, KeepDecision) {
    use FreqBell as F;
    use PolBell as P;
    let (op, of) = match (p, f) {
        (P::PsiPlus, F::PsiPlus) => (P::PsiPlus, F::PhiPlus),
        (P::PsiPlus, F::PsiMinus) => (P::PsiMinus, F::PhiMinus),
        (P::PsiMinus, F::PsiPlus) => (P::PsiMinus, F::PhiPlus),
        (P::PsiMinus, F::PsiMinus) => (P::PsiPlus, F::PhiMinus),
        (P::PhiPlus, F::PsiPlus) => (P::PhiPlus, F::PsiPlus),
        (P::PhiPlus, F::PsiMinus) => (P::PhiMinus, F::PsiMinus),
        (P::PhiMinus, F::PsiPlus) => (P::PhiMinus, F::PsiPlus),
        (P::PhiMinus, F::PsiMinus) => (P::PhiPlus, F::PsiMinus),
        (P::PsiPlus, F::PhiPlus) => (P::PsiPlus, F::PsiPlus),
        (P::PsiPlus, F::PhiMinus) => (P::PsiMinus, F::PsiMinus),
        (P::PsiMinus, F::PhiPlus) => (P::PsiMinus, F::PsiPlus),
        (P::PsiMinus, F::PhiMinus) => (P::PsiPlus, F::PsiMinus),
        (P::PhiPlus, F::PhiPlus) => (P::PhiPlus, F::PhiPlus),
        (P::PhiPlus, F::PhiMinus) => (P::PhiMinus, F::PhiMinus),
        (P::PhiMinus, F::PhiPlus) => (P::PhiMinus, F::PhiPlus),
        (P::PhiMinus, F::PhiMinus) => (P::PhiPlus, F::PhiMinus),
    };
    (op, of, KeepDecision::from_output_freq(of))
}

/// Relabeling of polarization Bell states under a Hadamard on both photons.
///
/// Self-inverse. Psi- maps to itself up to a global phase, which a density
/// matrix does not see.
pub fn hadamard_relabel(p: PolBell) -> PolBell {
    match p {
        PolBell::PhiPlus => PolBell::PhiPlus,
        PolBell::PhiMinus => PolBell::PsiPlus,
        PolBell::PsiPlus => PolBell::PhiMinus,
        PolBell::PsiMinus => PolBell::PsiMinus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[C64; 4], b: &[C64; 4]) -> C64 {
        a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn bell_vectors_are_orthonormal() {
        for (i, a) in PolBell::ALL.iter().enumerate() {
            for (j, b) in PolBell::ALL.iter().enumerate() {
                let d = dot(&pol_bell_vector(*a), &pol_bell_vector(*b));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - C64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
        for (i, a) in FreqBell::ALL.iter().enumerate() {
            for (j, b) in FreqBell::ALL.iter().enumerate() {
                let d = dot(&freq_bell_vector(*a), &freq_bell_vector(*b));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - C64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn pinned_amplitude_conventions() {
        let r = FRAC_1_SQRT_2;
        let v = pol_bell_vector(PolBell::PsiPlus);
        assert_eq!(
            v.map(|z| z.re),
            [0.0, r, r, 0.0],
            "Psi+ over (HH, HV, VH, VV)"
        );
        let v = pol_bell_vector(PolBell::PhiMinus);
        assert_eq!(v.map(|z| z.re), [r, 0.0, 0.0, -r]);
        let v = freq_bell_vector(FreqBell::PhiMinus);
        assert_eq!(
            v.map(|z| z.re),
            [r, 0.0, 0.0, -r],
            "phi- over (ss, si, is, ii)"
        );
        let v = freq_bell_vector(FreqBell::PsiMinus);
        assert_eq!(v.map(|z| z.re), [0.0, r, -r, 0.0]);
    }

    #[test]
    fn conversion_rows_for_psi_inputs() {
        use FreqBell as F;
        use KeepDecision::{Discard, Keep};
        use PolBell as P;
        let rows = [
            (P::PsiPlus, F::PsiPlus, P::PsiPlus, F::PhiPlus, Keep),
            (P::PsiPlus, F::PsiMinus, P::PsiMinus, F::PhiMinus, Keep),
            (P::PsiMinus, F::PsiPlus, P::PsiMinus, F::PhiPlus, Keep),
            (P::PsiMinus, F::PsiMinus, P::PsiPlus, F::PhiMinus, Keep),
            (P::PhiPlus, F::PsiPlus, P::PhiPlus, F::PsiPlus, Discard),
            (P::PhiPlus, F::PsiMinus, P::PhiMinus, F::PsiMinus, Discard),
            (P::PhiMinus, F::PsiPlus, P::PhiMinus, F::PsiPlus, Discard),
            (P::PhiMinus, F::PsiMinus, P::PhiPlus, F::PsiMinus, Discard),
        ];
        for (p, f, op, of, d) in rows {
            assert_eq!(cnot_transition(p, f), (op, of, d), "row ({p:?}, {f:?})");
        }
    }

    #[test]
    fn derived_phi_input_rows() {
        use FreqBell as F;
        use KeepDecision::{Discard, Keep};
        use PolBell as P;
        assert_eq!(
            cnot_transition(P::PsiPlus, F::PhiPlus),
            (P::PsiPlus, F::PsiPlus, Discard)
        );
        assert_eq!(
            cnot_transition(P::PhiPlus, F::PhiPlus),
            (P::PhiPlus, F::PhiPlus, Keep)
        );
        assert_eq!(
            cnot_transition(P::PhiMinus, F::PhiMinus),
            (P::PhiPlus, F::PhiMinus, Keep)
        );
    }

    #[test]
    fn transition_is_a_bijection() {
        let mut seen = std::collections::HashSet::new();
        for p in PolBell::ALL {
            for f in FreqBell::ALL {
                let (op, of, _) = cnot_transition(p, f);
                assert!(seen.insert((op, of)), "duplicate output ({op:?}, {of:?})");
            }
        }
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn transition_is_self_inverse() {
        for p in PolBell::ALL {
            for f in FreqBell::ALL {
                let (op, of, _) = cnot_transition(p, f);
                let (p2, f2, _) = cnot_transition(op, of);
                assert_eq!((p2, f2), (p, f));
            }
        }
    }

    #[test]
    fn keep_exactly_on_equal_frequency_outputs() {
        for p in PolBell::ALL {
            for f in FreqBell::ALL {
                let (_, of, d) = cnot_transition(p, f);
                assert_eq!(d, KeepDecision::from_output_freq(of));
                assert_eq!(d == KeepDecision::Keep, of.is_equal_frequency());
            }
        }
    }

    #[test]
    fn hadamard_relabel_is_self_inverse() {
        for p in PolBell::ALL {
            assert_eq!(hadamard_relabel(hadamard_relabel(p)), p);
        }
        assert_eq!(hadamard_relabel(PolBell::PhiMinus), PolBell::PsiPlus);
        assert_eq!(hadamard_relabel(PolBell::PsiMinus), PolBell::PsiMinus);
    }

    #[test]
    fn names_round_trip() {
        for p in PolBell::ALL {
            assert_eq!(PolBell::from_name(p.name()), Some(p));
        }
        for f in FreqBell::ALL {
            assert_eq!(FreqBell::from_name(f.name()), Some(f));
        }
        assert_eq!(PolBell::PsiPlus.name(), "Psi+");
        assert_eq!(FreqBell::PhiMinus.name(), "phi-");
        assert_eq!(PolBell::from_name("psi+"), None, "case distinguishes DoF");
    }
}
