//! Closed-form fidelity, yield and gain expressions for the named error
//! scenarios, including the finite-conversion-efficiency fidelity.
//!
//! Every formula here is validated against the probability and
//! density-matrix routes by tests; none of the other modules call into this
//! one. Ratios that degenerate to 0/0 return `None` (the undefined marker)
//! instead of raising or returning NaN.

use thiserror::Error;

use crate::channels::{scenario1, scenario2, scenario3, FreqMix, HyperState};
use crate::oracle::KEEP_PROBABILITY_FLOOR;
use crate::protocol::ProtocolVariant;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error("{which} = {value} outside [0, 1]")]
    OutOfRange { which: &'static str, value: f64 },
    #[error("scenario weights F_p + A = {sum} exceed 1")]
    WeightsExceedOne { sum: f64 },
    #[error("no closed form: {0}")]
    Unsupported(String),
}

/// Error scenario selector.
///
/// `S1`: bit-flip-type polarization error only. `S2`: phase-flip only.
/// `S3`: all three error types, with the phase-flip weight `A` explicit.
/// The `Aux` kinds replace the dephasing frequency channel by an
/// auxiliary-DoF bit-flip channel with fidelity F_a.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    S1,
    S2,
    S3,
    AuxS1,
    AuxS3,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::S1 => "s1",
            ScenarioKind::S2 => "s2",
            ScenarioKind::S3 => "s3",
            ScenarioKind::AuxS1 => "aux-s1",
            ScenarioKind::AuxS3 => "aux-s3",
        }
    }

    pub fn from_name(name: &str) -> Option<ScenarioKind> {
        match name {
            "s1" => Some(ScenarioKind::S1),
            "s2" => Some(ScenarioKind::S2),
            "s3" => Some(ScenarioKind::S3),
            "aux-s1" => Some(ScenarioKind::AuxS1),
            "aux-s3" => Some(ScenarioKind::AuxS3),
            _ => None,
        }
    }

    pub fn uses_auxiliary_bitflip(&self) -> bool {
        matches!(self, ScenarioKind::AuxS1 | ScenarioKind::AuxS3)
    }

    pub fn needs_a(&self) -> bool {
        matches!(self, ScenarioKind::S3 | ScenarioKind::AuxS3)
    }
}

/// Inputs to the closed forms.
///
/// `f_other` is the frequency dephasing fidelity F_f for the linear
/// scenarios and the auxiliary bit-flip fidelity F_a for the aux scenarios.
/// `a` is the phase-flip weight and only read by the S3 kinds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioParams {
    pub kind: ScenarioKind,
    pub f_p: f64,
    pub f_other: f64,
    pub a: f64,
}

impl ScenarioParams {
    pub fn new(kind: ScenarioKind, f_p: f64, f_other: f64, a: f64) -> Result<Self, AnalyticError> {
        check_range("F_p", f_p)?;
        check_range(
            if kind.uses_auxiliary_bitflip() {
                "F_a"
            } else {
                "F_f"
            },
            f_other,
        )?;
        if kind.needs_a() {
            check_range("A", a)?;
            if f_p + a > 1.0 + 1e-12 {
                return Err(AnalyticError::WeightsExceedOne { sum: f_p + a });
            }
        }
        Ok(ScenarioParams {
            kind,
            f_p,
            f_other,
            a: if kind.needs_a() { a } else { 0.0 },
        })
    }
}

fn check_range(which: &'static str, value: f64) -> Result<(), AnalyticError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(AnalyticError::OutOfRange { which, value });
    }
    Ok(())
}

/// The hyper state each scenario kind describes, shared by every route:
/// the closed forms here, the probability and oracle pipelines, and the
/// Monte Carlo sampler all consume this same mixture.
///
/// S1 puts the whole error weight on the bit-flip term (the bit-flip vs
/// bit-phase-flip split does not affect any output), S2 on the phase-flip
/// term, S3 splits the non-A remainder evenly. Auxiliary kinds pair the S1
/// or S3 polarization mixture with a bit-flip-contaminated frequency state
/// instead of a dephased one.
pub fn scenario_state(p: &ScenarioParams) -> HyperState {
    let pol = match p.kind {
        ScenarioKind::S1 | ScenarioKind::AuxS1 => scenario1(p.f_p, 1.0).unwrap(),
        ScenarioKind::S2 => scenario2(p.f_p).unwrap(),
        ScenarioKind::S3 | ScenarioKind::AuxS3 => {
            // Rounding can leave the remainder a hair below zero.
            let bc = (1.0 - p.f_p - p.a).max(0.0);
            scenario3(p.f_p, p.a, bc / 2.0, bc / 2.0).unwrap()
        }
    };
    let freq = if p.kind.uses_auxiliary_bitflip() {
        FreqMix::auxiliary_bitflip(p.f_other).unwrap()
    } else {
        FreqMix::dephasing(p.f_other).unwrap()
    };
    HyperState::new(pol, freq)
}

/// Kept-ensemble ratios share the oracle's keep-probability floor so the
/// routes agree on where the fidelity stops being defined. Rounding can
/// leave a mathematically zero denominator at +/- a few 1e-17.
fn ratio(numerator: f64, denominator: f64) -> Option<f64> {
    if denominator.abs() < KEEP_PROBABILITY_FLOOR {
        None
    } else {
        Some(numerator / denominator)
    }
}

/// Ideal-conversion (efficiency 1) fidelity and yield.
///
/// Returns `(F_p_prime, Y)`. The fidelity is `None` exactly where the kept
/// ensemble is empty. The protocol variant only changes Scenario 2, the one
/// case where the Hadamard-then-invert trick converts phase error into
/// filterable error; other kinds have no closed form for the modified
/// variant and report `Unsupported`.
pub fn scenario_fidelity_yield(
    p: &ScenarioParams,
    v: ProtocolVariant,
) -> Result<(Option<f64>, f64), AnalyticError> {
    if v == ProtocolVariant::HadamardModified && p.kind != ScenarioKind::S2 {
        return Err(AnalyticError::Unsupported(format!(
            "modified variant has a closed form only for s2, not {}",
            p.kind.name()
        )));
    }
    let (f_p, f2, a) = (p.f_p, p.f_other, p.a);
    Ok(match (p.kind, v) {
        (ScenarioKind::S1, _) => {
            let y = f_p;
            (ratio(f_p * f2, y), y)
        }
        (ScenarioKind::S2, ProtocolVariant::Standard) => {
            (Some(f_p * f2 + (1.0 - f_p) * (1.0 - f2)), 1.0)
        }
        (ScenarioKind::S2, ProtocolVariant::HadamardModified) => {
            let y = f_p;
            (ratio(f_p * f2, y), y)
        }
        (ScenarioKind::S3, _) => {
            let y = f_p + a;
            (ratio(f_p * f2 + a * (1.0 - f2), y), y)
        }
        (ScenarioKind::AuxS1, _) => {
            let y = f_p * f2 + (1.0 - f_p) * (1.0 - f2);
            (ratio(f_p * f2, y), y)
        }
        (ScenarioKind::AuxS3, _) => {
            let y = (f_p + a) * f2 + (1.0 - f_p - a) * (1.0 - f2);
            (ratio(f_p * f2, y), y)
        }
    })
}

/// Closed-form fidelity at conversion efficiency `eta`.
///
/// This is the effective-efficiency model: conversion failures are assumed
/// to leak into the kept ensemble as unfiltered error weight instead of
/// being traced by a physical channel, so no Kraus realization reproduces
/// it away from `eta = 1` (where it reduces to the ideal forms). Only the
/// linear scenarios are covered.
pub fn fidelity_finite_eta(p: &ScenarioParams, eta: f64) -> Result<Option<f64>, AnalyticError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(AnalyticError::OutOfRange {
            which: "eta",
            value: eta,
        });
    }
    let (f_p, f_f, a) = (p.f_p, p.f_other, p.a);
    match p.kind {
        ScenarioKind::S1 => Ok(ratio(f_p * f_f, f_p + (1.0 - eta) * (1.0 - f_p))),
        ScenarioKind::S2 => Ok(Some(f_p * f_f + (1.0 - f_p) * (1.0 - f_f))),
        ScenarioKind::S3 => {
            let bc = 1.0 - f_p - a;
            Ok(ratio(
                f_p * f_f + a * (1.0 - f_f),
                f_p + a + (1.0 - eta) * bc,
            ))
        }
        ScenarioKind::AuxS1 | ScenarioKind::AuxS3 => Err(AnalyticError::Unsupported(format!(
            "no finite-efficiency closed form for {}",
            p.kind.name()
        ))),
    }
}
