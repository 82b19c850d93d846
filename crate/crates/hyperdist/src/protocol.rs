//! One round of the distillation protocol, computed two independent ways.
//!
//! [`run_probability`] does exact branch bookkeeping over the Bell-product
//! transition table; [`run_oracle`] pushes a density matrix through the
//! explicit unitaries. Both take the same inputs and must agree to numerical
//! precision for every physical conversion model; the closed-form efficiency
//! model has no channel realization and is rejected by both.

use thiserror::Error;

use crate::bellspace::{cnot_transition, hadamard_relabel, FreqBell, KeepDecision, PolBell};
use crate::channels::HyperState;
use crate::matrix::CMatrix;
use crate::oracle::{
    apply_channel, apply_hadamard_pol, apply_hadamard_pol_pair, bell_product_weights,
    cnot_unitary, cnot_unitary_one_side, conversion_channel, dm_from_hyper, fidelity_to,
    postselect_equal_frequency, product_state_vector, ConversionModel, DensityMatrix,
    OracleError, Side, KEEP_PROBABILITY_FLOOR,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Which postselection rule closes the round.
///
/// The modified variant applies a Hadamard to both polarization qubits
/// before conversion, keeps the unequal-frequency outcomes instead, and
/// reads the result back in the original frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolVariant {
    Standard,
    HadamardModified,
}

impl ProtocolVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolVariant::Standard => "standard",
            ProtocolVariant::HadamardModified => "hadamard",
        }
    }

    pub fn from_name(name: &str) -> Option<ProtocolVariant> {
        match name {
            "standard" => Some(ProtocolVariant::Standard),
            "hadamard" => Some(ProtocolVariant::HadamardModified),
            _ => None,
        }
    }

    fn keeps(&self, output_freq: FreqBell) -> bool {
        match self {
            ProtocolVariant::Standard => output_freq.is_equal_frequency(),
            ProtocolVariant::HadamardModified => !output_freq.is_equal_frequency(),
        }
    }
}

/// Which photons the conversion CNOT actually fired on in a branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConversionBranch {
    Both,
    AliceOnly,
    BobOnly,
    Neither,
}

impl ConversionBranch {
    pub fn name(&self) -> &'static str {
        match self {
            ConversionBranch::Both => "both",
            ConversionBranch::AliceOnly => "alice-only",
            ConversionBranch::BobOnly => "bob-only",
            ConversionBranch::Neither => "neither",
        }
    }
}

/// One bookkeeping row: an input Bell product under one conversion branch
/// landing on one output Bell product.
///
/// Output polarization labels are always reported in the input frame; the
/// modified variant's Hadamard has been undone. The decision is the
/// variant's keep rule, a function of the output frequency state alone.
#[derive(Clone, Copy, Debug)]
pub struct BranchOutcome {
    pub input_pol: PolBell,
    pub input_freq: FreqBell,
    pub conversion: ConversionBranch,
    pub probability: f64,
    pub output_pol: PolBell,
    pub output_freq: FreqBell,
    pub decision: KeepDecision,
}

/// Result of one protocol round.
///
/// `f_p_prime` and `gain` are `None` when nothing is kept (yield below the
/// keep-probability floor); no division is performed in that case.
#[derive(Clone, Debug)]
pub struct DistillationOutcome {
    pub f_p_prime: Option<f64>,
    pub yield_: f64,
    pub gain: Option<f64>,
    pub branches: Vec<BranchOutcome>,
}

/// Conversion branches and their probabilities under a physical model.
pub(crate) fn conversion_branch_weights(
    m: &ConversionModel,
) -> Result<Vec<(ConversionBranch, f64)>, OracleError> {
    m.validate()?;
    let weighted = match m {
        ConversionModel::ClosedFormEta { .. } => {
            return Err(OracleError::ModelMismatch(
                "closed-form efficiency model has no branch decomposition; \
                 use the analytic route for it"
                    .to_string(),
            ));
        }
        ConversionModel::Ideal => vec![(ConversionBranch::Both, 1.0)],
        ConversionModel::PerPairBernoulli { eta } => vec![
            (ConversionBranch::Both, *eta),
            (ConversionBranch::Neither, 1.0 - *eta),
        ],
        ConversionModel::PerPhotonIncoherent { eta } => vec![
            (ConversionBranch::Both, eta * eta),
            (ConversionBranch::AliceOnly, eta * (1.0 - eta)),
            (ConversionBranch::BobOnly, (1.0 - eta) * eta),
            (ConversionBranch::Neither, (1.0 - eta) * (1.0 - eta)),
        ],
    };
    Ok(weighted.into_iter().filter(|(_, w)| *w > 0.0).collect())
}

/// Outcome rows when the CNOT fires on one side only.
///
/// A one-sided CNOT takes a Bell product to an equal superposition over the
/// polarization sign partner and the frequency class partner, so measurement
/// lands on four products at weight 1/4 each. The row set is the same for
/// ether side (only invisible phases differ); tests check both sides against
/// the explicit unitaries.
pub(crate) fn one_sided_conversion_rows(p: PolBell, f: FreqBell) -> [(PolBell, FreqBell); 4] {
    let p2 = sign_partner(p);
    let f2 = class_partner(f);
    [(p, f), (p, f2), (p2, f), (p2, f2)]
}

fn sign_partner(p: PolBell) -> PolBell {
    match p {
        PolBell::PsiPlus => PolBell::PsiMinus,
        PolBell::PsiMinus => PolBell::PsiPlus,
        PolBell::PhiPlus => PolBell::PhiMinus,
        PolBell::PhiMinus => PolBell::PhiPlus,
    }
}

fn class_partner(f: FreqBell) -> FreqBell {
    match f {
        FreqBell::PsiPlus => FreqBell::PhiPlus,
        FreqBell::PsiMinus => FreqBell::PhiMinus,
        FreqBell::PhiPlus => FreqBell::PsiPlus,
        FreqBell::PhiMinus => FreqBell::PsiMinus,
    }
}

fn decision_for(v: ProtocolVariant, output_freq: FreqBell) -> KeepDecision {
    if v.keeps(output_freq) {
        KeepDecision::Keep
    } else {
        KeepDecision::Discard
    }
}

fn aggregate(branches: Vec<BranchOutcome>, f_p_input: f64) -> DistillationOutcome {
    let yield_: f64 = branches
        .iter()
        .filter(|b| b.decision == KeepDecision::Keep)
        .map(|b| b.probability)
        .sum();
    let kept_target: f64 = branches
        .iter()
        .filter(|b| b.decision == KeepDecision::Keep && b.output_pol == PolBell::PsiPlus)
        .map(|b| b.probability)
        .sum();
    let f_p_prime = if yield_ >= KEEP_PROBABILITY_FLOOR {
        Some(kept_target / yield_)
    } else {
        None
    };
    DistillationOutcome {
        f_p_prime,
        yield_,
        gain: f_p_prime.map(|f| f - f_p_input),
        branches,
    }
}

/// Exact branch bookkeeping over the transition table.
///
/// Enumerates every nonzero input Bell product against every conversion
/// branch of the model and sums keep probabilities. No matrices are touched;
/// this route and [`run_oracle`] validate each other.
pub fn run_probability(
    h: &HyperState,
    v: ProtocolVariant,
    m: &ConversionModel,
) -> Result<DistillationOutcome, ProtocolError> {
    let branch_weights = conversion_branch_weights(m)?;
    let mut branches = Vec::new();
    for p in PolBell::ALL {
        let wp = h.pol.weight(p);
        if wp == 0.0 {
            continue;
        }
        let p_eff = match v {
            ProtocolVariant::Standard => p,
            ProtocolVariant::HadamardModified => hadamard_relabel(p),
        };
        for f in FreqBell::ALL {
            let w = wp * h.freq.weight(f);
            if w == 0.0 {
                continue;
            }
            for &(conv, bw) in &branch_weights {
                let rows: Vec<(PolBell, FreqBell, f64)> = match conv {
                    ConversionBranch::Both => {
                        let (op, of, _) = cnot_transition(p_eff, f);
                        vec![(op, of, 1.0)]
                    }
                    ConversionBranch::Neither => vec![(p_eff, f, 1.0)],
                    ConversionBranch::AliceOnly | ConversionBranch::BobOnly => {
                        one_sided_conversion_rows(p_eff, f)
                            .into_iter()
                            .map(|(op, of)| (op, of, 0.25))
                            .collect()
                    }
                };
                for (op_eff, of, rw) in rows {
                    let op = match v {
                        ProtocolVariant::Standard => op_eff,
                        ProtocolVariant::HadamardModified => hadamard_relabel(op_eff),
                    };
                    branches.push(BranchOutcome {
                        input_pol: p,
                        input_freq: f,
                        conversion: conv,
                        probability: w * bw * rw,
                        output_pol: op,
                        output_freq: of,
                        decision: decision_for(v, of),
                    });
                }
            }
        }
    }
    Ok(aggregate(branches, h.pol.f_p()))
}

fn branch_unitary(b: ConversionBranch) -> CMatrix {
    match b {
        ConversionBranch::Both => cnot_unitary(),
        ConversionBranch::AliceOnly => cnot_unitary_one_side(Side::Alice),
        ConversionBranch::BobOnly => cnot_unitary_one_side(Side::Bob),
        ConversionBranch::Neither => CMatrix::identity(16),
    }
}

/// Density-matrix route through the same round.
///
/// The headline figures come from the full pipeline (state construction,
/// optional Hadamard, Kraus evolution, postselection, conditional fidelity).
/// Branch records are reconstructed by evolving each input Bell product
/// through each conversion branch and reading off its Bell-product weights;
/// their keep sums reproduce the pipeline figures, which tests assert.
pub fn run_oracle(
    h: &HyperState,
    v: ProtocolVariant,
    m: &ConversionModel,
) -> Result<DistillationOutcome, ProtocolError> {
    let kraus = conversion_channel(m)?;
    let rho = dm_from_hyper(h);
    let rho = match v {
        ProtocolVariant::Standard => rho,
        ProtocolVariant::HadamardModified => apply_hadamard_pol(&rho),
    };
    let evolved = apply_channel(&rho, &kraus);
    let invert = v == ProtocolVariant::HadamardModified;
    let (f_p_prime, yield_) = match postselect_equal_frequency(&evolved, invert) {
        Ok((pol, p_keep)) => {
            let pol = match v {
                ProtocolVariant::Standard => pol,
                ProtocolVariant::HadamardModified => apply_hadamard_pol_pair(&pol),
            };
            (Some(fidelity_to(PolBell::PsiPlus, &pol)), p_keep)
        }
        Err(OracleError::NothingKept { p, .. }) => (None, p),
        Err(e) => return Err(e.into()),
    };
    let branches = oracle_branch_records(h, v, m)?;
    Ok(DistillationOutcome {
        f_p_prime,
        yield_,
        gain: f_p_prime.map(|f| f - h.pol.f_p()),
        branches,
    })
}

fn oracle_branch_records(
    h: &HyperState,
    v: ProtocolVariant,
    m: &ConversionModel,
) -> Result<Vec<BranchOutcome>, ProtocolError> {
    let branch_weights = conversion_branch_weights(m)?;
    let mut branches = Vec::new();
    for p in PolBell::ALL {
        let wp = h.pol.weight(p);
        if wp == 0.0 {
            continue;
        }
        for f in FreqBell::ALL {
            let w = wp * h.freq.weight(f);
            if w == 0.0 {
                continue;
            }
            let mut component =
                DensityMatrix::from_matrix(CMatrix::outer(&product_state_vector(p, f)))
                    .expect("Bell product projector");
            if v == ProtocolVariant::HadamardModified {
                component = apply_hadamard_pol(&component);
            }
            for &(conv, bw) in &branch_weights {
                let u = branch_unitary(conv);
                let evolved = DensityMatrix::from_matrix(component.matrix().conjugate_by(&u))
                    .expect("unitary conjugation");
                let weights = bell_product_weights(&evolved);
                for op_lab in PolBell::ALL {
                    for of in FreqBell::ALL {
                        let rw = weights[op_lab.index()][of.index()];
                        if rw < 1e-15 {
                            continue;
                        }
                        let op = match v {
                            ProtocolVariant::Standard => op_lab,
                            ProtocolVariant::HadamardModified => hadamard_relabel(op_lab),
                        };
                        branches.push(BranchOutcome {
                            input_pol: p,
                            input_freq: f,
                            conversion: conv,
                            probability: w * bw * rw,
                            output_pol: op,
                            output_freq: of,
                            decision: decision_for(v, of),
                        });
                    }
                }
            }
        }
    }
    Ok(branches)
}
