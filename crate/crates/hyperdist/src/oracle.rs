//! Density-matrix ground truth for the distillation step.
//!
//! States live on two photons (A and B), each carrying a polarization qubit
//! and a frequency qubit. The 16-dimensional basis is ordered
//! `|p_A f_A p_B f_B>` with `H = 0, V = 1, omega_s = 0, omega_i = 1`, so
//! `index = 8 p_A + 4 f_A + 2 p_B + f_B`.
//!
//! Everything here is computed from explicit matrices; the label-level
//! transition table and the closed forms elsewhere in the crate are checked
//! against this module, never the other way around.

use thiserror::Error;

use crate::bellspace::{freq_bell_vector, pol_bell_vector, FreqBell, PolBell};
use crate::channels::HyperState;
use crate::matrix::{C64, CMatrix};

/// Hermiticity defect accepted on a density matrix.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;
/// Trace deviation from 1 accepted on a density matrix.
pub const TRACE_TOLERANCE: f64 = 1e-12;
/// Eigenvalue floor: eigenvalues may dip this far below zero from rounding.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;
/// Keep probabilities below this are reported as "nothing kept" instead of
/// dividing by them.
pub const KEEP_PROBABILITY_FLOOR: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("nothing kept: keep probability {p:e} is below {floor:e}")]
    NothingKept { p: f64, floor: f64 },
    #[error("conversion efficiency {eta} outside [0, 1]")]
    EtaOutOfRange { eta: f64 },
    #[error("not a density matrix: {0}")]
    InvalidDensityMatrix(String),
}

/// Which photon a one-sided operation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Alice,
    Bob,
}

/// How the polarization-controlled frequency CNOT is realized.
///
/// `ClosedFormEta` is the analytic effective-efficiency model; it has no
/// Kraus realization and is only meaningful to the closed-form module.
/// `Ideal` behaves as efficiency 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConversionModel {
    Ideal,
    ClosedFormEta { eta: f64 },
    PerPhotonIncoherent { eta: f64 },
    PerPairBernoulli { eta: f64 },
}

impl ConversionModel {
    pub fn eta(&self) -> f64 {
        match self {
            ConversionModel::Ideal => 1.0,
            ConversionModel::ClosedFormEta { eta }
            | ConversionModel::PerPhotonIncoherent { eta }
            | ConversionModel::PerPairBernoulli { eta } => *eta,
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let eta = self.eta();
        if !(0.0..=1.0).contains(&eta) {
            return Err(OracleError::EtaOutOfRange { eta });
        }
        Ok(())
    }

    /// Serialization name used in CSV rows and config files.
    pub fn name(&self) -> &'static str {
        match self {
            ConversionModel::Ideal => "ideal",
            ConversionModel::ClosedFormEta { .. } => "closed-form-eta",
            ConversionModel::PerPhotonIncoherent { .. } => "per-photon-incoherent",
            ConversionModel::PerPairBernoulli { .. } => "per-pair-bernoulli",
        }
    }
}

/// Validated density matrix (dimension 4 or 16 in this crate).
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix after checking hermiticity, unit trace and
    /// positivity (up to the documented floors).
    pub fn from_matrix(mat: CMatrix) -> Result<DensityMatrix, OracleError> {
        let h = mat.hermiticity_defect();
        if h > HERMITICITY_TOLERANCE {
            return Err(OracleError::InvalidDensityMatrix(format!(
                "hermiticity defect {h:e}"
            )));
        }
        let t = mat.trace();
        if (t.re - 1.0).abs() > TRACE_TOLERANCE || t.im.abs() > TRACE_TOLERANCE {
            return Err(OracleError::InvalidDensityMatrix(format!(
                "trace {} + {}i",
                t.re, t.im
            )));
        }
        let min_eig = mat
            .hermitian_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < EIGENVALUE_FLOOR {
            return Err(OracleError::InvalidDensityMatrix(format!(
                "eigenvalue {min_eig:e} below floor"
            )));
        }
        Ok(DensityMatrix { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn purity(&self) -> f64 {
        self.mat.mul(&self.mat).trace().re
    }

    /// Plain-text dump: header line, then one row per line with complex
    /// entries in `re+imj` form.
    pub fn dump_text(&self) -> String {
        let n = self.dim();
        let mut out = String::new();
        out.push_str(&format!(
            "dim={n} basis=|p_A f_A p_B f_B> (H=0 V=1 ws=0 wi=1) row-major\n"
        ));
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let z = self.mat.get(i, j);
                    format!("{}{:+}j", z.re, z.im)
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

#[inline]
pub fn basis_index(p_a: usize, f_a: usize, p_b: usize, f_b: usize) -> usize {
    8 * p_a + 4 * f_a + 2 * p_b + f_b
}

/// 16-component vector for a product of Bell states in the two DoFs.
pub fn product_state_vector(p: PolBell, f: FreqBell) -> [C64; 16] {
    let pv = pol_bell_vector(p);
    let fv = freq_bell_vector(f);
    let mut v = [C64::new(0.0, 0.0); 16];
    for p_a in 0..2 {
        for f_a in 0..2 {
            for p_b in 0..2 {
                for f_b in 0..2 {
                    v[basis_index(p_a, f_a, p_b, f_b)] = pv[2 * p_a + p_b] * fv[2 * f_a + f_b];
                }
            }
        }
    }
    v
}

/// Density matrix of a product of Bell-diagonal mixtures.
pub fn dm_from_hyper(h: &HyperState) -> DensityMatrix {
    let mut rho = CMatrix::zeros(16);
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
            rho.add_assign(&CMatrix::outer(&product_state_vector(p, f)).scale(w));
        }
    }
    DensityMatrix::from_matrix(rho).expect("product of valid mixtures")
}

/// Two-sided polarization-controlled frequency CNOT.
///
/// Per photon: `|omega H> -> |omega H>`, `|omega_s V> -> |omega_i V>`,
/// `|omega_i V> -> |omega_s V>`. Real permutation, self-inverse.
pub fn cnot_unitary() -> CMatrix {
    let mut u = CMatrix::zeros(16);
    for p_a in 0..2 {
        for f_a in 0..2 {
            for p_b in 0..2 {
                for f_b in 0..2 {
                    let from = basis_index(p_a, f_a, p_b, f_b);
                    let to = basis_index(p_a, f_a ^ p_a, p_b, f_b ^ p_b);
                    u.set(to, from, C64::new(1.0, 0.0));
                }
            }
        }
    }
    u
}

/// The CNOT applied on one photon only (the other side idles).
pub fn cnot_unitary_one_side(side: Side) -> CMatrix {
    let mut u = CMatrix::zeros(16);
    for p_a in 0..2 {
        for f_a in 0..2 {
            for p_b in 0..2 {
                for f_b in 0..2 {
                    let from = basis_index(p_a, f_a, p_b, f_b);
                    let to = match side {
                        Side::Alice => basis_index(p_a, f_a ^ p_a, p_b, f_b),
                        Side::Bob => basis_index(p_a, f_a, p_b, f_b ^ p_b),
                    };
                    u.set(to, from, C64::new(1.0, 0.0));
                }
            }
        }
    }
    u
}

/// Kraus set of the conversion step under the given model.
///
/// Zero-weight operators are dropped, so `Ideal` and efficiency-1 models
/// return the bare CNOT. `ClosedFormEta` has no channel realization and is
/// rejected as a model mismatch.
pub fn conversion_channel(m: &ConversionModel) -> Result<Vec<CMatrix>, OracleError> {
    m.validate()?;
    let weighted: Vec<(f64, CMatrix)> = match m {
        ConversionModel::ClosedFormEta { .. } => {
            return Err(OracleError::ModelMismatch(
                "closed-form efficiency model has no Kraus realization; \
                 use the analytic route for it"
                    .to_string(),
            ));
        }
        ConversionModel::Ideal => vec![(1.0, cnot_unitary())],
        ConversionModel::PerPairBernoulli { eta } => vec![
            (*eta, cnot_unitary()),
            (1.0 - *eta, CMatrix::identity(16)),
        ],
        ConversionModel::PerPhotonIncoherent { eta } => {
            let a = cnot_unitary_one_side(Side::Alice);
            let b = cnot_unitary_one_side(Side::Bob);
            vec![
                (eta * eta, a.mul(&b)),
                (eta * (1.0 - eta), a),
                ((1.0 - eta) * eta, b),
                ((1.0 - eta) * (1.0 - eta), CMatrix::identity(16)),
            ]
        }
    };
    Ok(weighted
        .into_iter()
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, u)| u.scale(w.sqrt()))
        .collect())
}

/// rho' = sum_k K rho K^dagger.
pub fn apply_channel(rho: &DensityMatrix, kraus: &[CMatrix]) -> DensityMatrix {
    let mut out = CMatrix::zeros(rho.dim());
    for k in kraus {
        out.add_assign(&rho.matrix().conjugate_by(k));
    }
    DensityMatrix::from_matrix(out).expect("trace-preserving channel on a valid state")
}

/// Projective per-photon frequency measurement with postselection.
///
/// Standard mode keeps equal outcomes (the phi subspace); `invert` keeps
/// unequal outcomes (the psi subspace). Returns the conditional
/// polarization state and the keep probability. The partial trace over
/// frequency sums the frequency-diagonal blocks of the projected state;
/// the measurement has already destroyed frequency coherence.
pub fn postselect_equal_frequency(
    rho: &DensityMatrix,
    invert: bool,
) -> Result<(DensityMatrix, f64), OracleError> {
    assert_eq!(rho.dim(), 16, "postselection acts on the full state");
    let kept: Vec<(usize, usize)> = (0..2)
        .flat_map(|fa| (0..2).map(move |fb| (fa, fb)))
        .filter(|(fa, fb)| (fa == fb) != invert)
        .collect();
    let mut p_keep = 0.0;
    for &(fa, fb) in &kept {
        for p_a in 0..2 {
            for p_b in 0..2 {
                let i = basis_index(p_a, fa, p_b, fb);
                p_keep += rho.matrix().get(i, i).re;
            }
        }
    }
    if p_keep < KEEP_PROBABILITY_FLOOR {
        return Err(OracleError::NothingKept {
            p: p_keep,
            floor: KEEP_PROBABILITY_FLOOR,
        });
    }
    let mut pol = CMatrix::zeros(4);
    for &(fa, fb) in &kept {
        for p_a in 0..2 {
            for p_b in 0..2 {
                for q_a in 0..2 {
                    for q_b in 0..2 {
                        let num = rho
                            .matrix()
                            .get(basis_index(p_a, fa, p_b, fb), basis_index(q_a, fa, q_b, fb));
                        let cur = pol.get(2 * p_a + p_b, 2 * q_a + q_b);
                        pol.set(2 * p_a + p_b, 2 * q_a + q_b, cur + num / p_keep);
                    }
                }
            }
        }
    }
    let pol = DensityMatrix::from_matrix(pol)?;
    Ok((pol, p_keep))
}

/// <b| rho |b> on the conditional polarization state.
pub fn fidelity_to(b: PolBell, rho_pol: &DensityMatrix) -> f64 {
    assert_eq!(rho_pol.dim(), 4, "fidelity acts on the polarization pair");
    rho_pol.matrix().expectation(&pol_bell_vector(b))
}

fn hadamard_entry(row: usize, col: usize) -> f64 {
    // [[1, 1], [1, -1]] / sqrt(2)
    let sign = if row == 1 && col == 1 { -1.0 } else { 1.0 };
    sign * std::f64::consts::FRAC_1_SQRT_2
}

/// Hadamard on both polarization qubits of the full state.
pub fn apply_hadamard_pol(rho: &DensityMatrix) -> DensityMatrix {
    assert_eq!(rho.dim(), 16);
    let mut m = CMatrix::zeros(16);
    for p_a in 0..2 {
        for q_a in 0..2 {
            for p_b in 0..2 {
                for q_b in 0..2 {
                    let amp = hadamard_entry(p_a, q_a) * hadamard_entry(p_b, q_b);
                    for f_a in 0..2 {
                        for f_b in 0..2 {
                            m.set(
                                basis_index(p_a, f_a, p_b, f_b),
                                basis_index(q_a, f_a, q_b, f_b),
                                C64::new(amp, 0.0),
                            );
                        }
                    }
                }
            }
        }
    }
    DensityMatrix::from_matrix(rho.matrix().conjugate_by(&m)).expect("unitary conjugation")
}

/// Hadamard on both qubits of a polarization-only (4-dimensional) state.
pub fn apply_hadamard_pol_pair(rho_pol: &DensityMatrix) -> DensityMatrix {
    assert_eq!(rho_pol.dim(), 4);
    let mut m = CMatrix::zeros(4);
    for p_a in 0..2 {
        for q_a in 0..2 {
            for p_b in 0..2 {
                for q_b in 0..2 {
                    m.set(
                        2 * p_a + p_b,
                        2 * q_a + q_b,
                        C64::new(hadamard_entry(p_a, q_a) * hadamard_entry(p_b, q_b), 0.0),
                    );
                }
            }
        }
    }
    DensityMatrix::from_matrix(rho_pol.matrix().conjugate_by(&m)).expect("unitary conjugation")
}

/// Weights <P x F| rho |P x F> over the 16 Bell-product directions.
pub fn bell_product_weights(rho: &DensityMatrix) -> [[f64; 4]; 4] {
    assert_eq!(rho.dim(), 16);
    let mut w = [[0.0; 4]; 4];
    for p in PolBell::ALL {
        for f in FreqBell::ALL {
            w[p.index()][f.index()] = rho.matrix().expectation(&product_state_vector(p, f));
        }
    }
    w
}
