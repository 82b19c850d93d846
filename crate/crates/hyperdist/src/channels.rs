//! Bell-diagonal input mixtures for the two degrees of freedom and the
//! named error-scenario presets.
//!
//! Polarization weights follow the order (Psi+, Psi-, Phi+, Phi-); the
//! first weight is the fidelity F_p, the others are the phase-flip (A),
//! bit-flip (B) and bit-phase-flip (C) error weights. Frequency weights
//! follow (psi+, psi-, phi+, phi-).

use thiserror::Error;

use crate::bellspace::{FreqBell, PolBell};

/// Accepted slack on the weight sum before construction fails. Weights are
/// renormalized to sum to exactly 1 once accepted.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("negative weight {value} for {which}")]
    NegativeWeight { which: &'static str, value: f64 },
    #[error("weights sum to {sum}, outside 1 +/- {tolerance}")]
    WeightSum { sum: f64, tolerance: f64 },
    #[error("{which} = {value} outside [0, 1]")]
    OutOfRange { which: &'static str, value: f64 },
}

fn check_range(which: &'static str, value: f64) -> Result<(), StateError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(StateError::OutOfRange { which, value });
    }
    Ok(())
}

/// Renormalizes weights whose sum is within tolerance of 1 so they sum to
/// exactly 1.0; the largest weight absorbs the rounding residue.
fn normalize(mut weights: [f64; 4], names: [&'static str; 4]) -> Result<[f64; 4], StateError> {
    for (w, name) in weights.iter().zip(names) {
        if *w < 0.0 {
            return Err(StateError::NegativeWeight {
                which: name,
                value: *w,
            });
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(StateError::WeightSum {
            sum,
            tolerance: WEIGHT_SUM_TOLERANCE,
        });
    }
    for w in weights.iter_mut() {
        *w /= sum;
    }
    let largest = (0..4)
        .max_by(|&i, &j| weights[i].partial_cmp(&weights[j]).unwrap())
        .unwrap();
    let others: f64 = (0..4).filter(|&i| i != largest).map(|i| weights[i]).sum();
    weights[largest] = 1.0 - others;
    Ok(weights)
}

/// Bell-diagonal polarization mixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolMix {
    weights: [f64; 4],
}

impl PolMix {
    /// Weights (F_p, A, B, C) on (Psi+, Psi-, Phi+, Phi-).
    pub fn new(f_p: f64, a: f64, b: f64, c: f64) -> Result<PolMix, StateError> {
        let weights = normalize([f_p, a, b, c], ["F_p", "A", "B", "C"])?;
        Ok(PolMix { weights })
    }

    pub fn weight(&self, b: PolBell) -> f64 {
        self.weights[b.index()]
    }

    pub fn f_p(&self) -> f64 {
        self.weights[0]
    }

    pub fn a(&self) -> f64 {
        self.weights[1]
    }

    pub fn b(&self) -> f64 {
        self.weights[2]
    }

    pub fn c(&self) -> f64 {
        self.weights[3]
    }
}

/// Bell-diagonal frequency mixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreqMix {
    weights: [f64; 4],
}

impl FreqMix {
    /// Weights on (psi+, psi-, phi+, phi-).
    pub fn new(
        psi_plus: f64,
        psi_minus: f64,
        phi_plus: f64,
        phi_minus: f64,
    ) -> Result<FreqMix, StateError> {
        let weights = normalize(
            [psi_plus, psi_minus, phi_plus, phi_minus],
            ["psi+", "psi-", "phi+", "phi-"],
        )?;
        Ok(FreqMix { weights })
    }

    pub fn weight(&self, b: FreqBell) -> f64 {
        self.weights[b.index()]
    }

    /// Linear-channel dephasing: weight F_f on psi+, 1 - F_f on psi-.
    pub fn dephasing(f_f: f64) -> Result<FreqMix, StateError> {
        check_range("F_f", f_f)?;
        FreqMix::new(f_f, 1.0 - f_f, 0.0, 0.0)
    }

    /// Auxiliary-DoF bit-flip mixing: weight F_a on psi+, 1 - F_a on phi+.
    pub fn auxiliary_bitflip(f_a: f64) -> Result<FreqMix, StateError> {
        check_range("F_a", f_a)?;
        FreqMix::new(f_a, 0.0, 1.0 - f_a, 0.0)
    }

    /// True when the phi weights vanish exactly (dephasing-only channel).
    pub fn is_linear(&self) -> bool {
        self.weights[2] == 0.0 && self.weights[3] == 0.0
    }
}

/// Product of independent Bell-diagonal mixtures in the two DoFs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperState {
    pub pol: PolMix,
    pub freq: FreqMix,
}

impl HyperState {
    pub fn new(pol: PolMix, freq: FreqMix) -> HyperState {
        HyperState { pol, freq }
    }
}

/// Scenario 1 preset: no phase-flip error; the non-F_p weight is split
/// between bit-flip and bit-phase-flip by `bf_share`.
pub fn scenario1(f_p: f64, bf_share: f64) -> Result<PolMix, StateError> {
    check_range("F_p", f_p)?;
    check_range("bf_share", bf_share)?;
    let rest = 1.0 - f_p;
    PolMix::new(f_p, 0.0, rest * bf_share, rest * (1.0 - bf_share))
}

/// Scenario 2 preset: phase-flip error only.
pub fn scenario2(f_p: f64) -> Result<PolMix, StateError> {
    check_range("F_p", f_p)?;
    PolMix::new(f_p, 1.0 - f_p, 0.0, 0.0)
}

/// Scenario 3 preset: all three error weights explicit.
pub fn scenario3(f_p: f64, a: f64, b: f64, c: f64) -> Result<PolMix, StateError> {
    PolMix::new(f_p, a, b, c)
}
