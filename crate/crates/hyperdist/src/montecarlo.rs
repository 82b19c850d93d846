//! Seeded Monte Carlo estimators for the protocol round and a
//! detector-level time-tag event stream with coincidence counting.
//!
//! Reproducibility contract: shot `i` under seed `s` is computed from its
//! own counter-based RNG stream (ChaCha12 keyed by `s`, stream index `i`),
//! so tallies are identical for any partitioning of the shot range and any
//! thread count. Identical seeds and parameters give identical outputs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::bellspace::{cnot_transition, hadamard_relabel, FreqBell, PolBell};
use crate::channels::HyperState;
use crate::oracle::ConversionModel;
use crate::protocol::{one_sided_conversion_rows, ConversionBranch, ProtocolError, ProtocolVariant};

/// RNG algorithm name recorded in output metadata.
pub const RNG_ALGORITHM: &str = "chacha12";

/// Default coincidence window. Placeholder pending a hardware-informed
/// choice; always recorded in output metadata.
pub const DEFAULT_COINCIDENCE_WINDOW_PS: i64 = 1000;

/// Tallies and normal-approximation estimates from a shot run.
///
/// `fidelity_estimate` is `None` when no shot was kept. The ci95 fields are
/// half-widths, `1.96 * sqrt(p(1-p)/n)`, with `n` the number of shots for
/// the yield and the number of kept shots for the fidelity.
#[derive(Clone, Copy, Debug)]
pub struct ShotResult {
    pub n_total: u64,
    pub n_kept: u64,
    pub n_kept_psi_plus: u64,
    pub yield_estimate: f64,
    pub fidelity_estimate: Option<f64>,
    pub yield_ci95: f64,
    pub fidelity_ci95: Option<f64>,
}

fn ci95(p: f64, n: u64) -> f64 {
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

impl ShotResult {
    fn from_tallies(n_total: u64, n_kept: u64, n_kept_psi_plus: u64) -> ShotResult {
        let yield_estimate = if n_total > 0 {
            n_kept as f64 / n_total as f64
        } else {
            0.0
        };
        let fidelity_estimate = (n_kept > 0).then(|| n_kept_psi_plus as f64 / n_kept as f64);
        ShotResult {
            n_total,
            n_kept,
            n_kept_psi_plus,
            yield_estimate,
            fidelity_estimate,
            yield_ci95: if n_total > 0 {
                ci95(yield_estimate, n_total)
            } else {
                0.0
            },
            fidelity_ci95: fidelity_estimate.map(|f| ci95(f, n_kept)),
        }
    }
}

/// Precomputed sampling tables; everything a shot needs, branch semantics
/// identical to the probability route.
struct Sampler {
    pol_cdf: [f64; 4],
    freq_cdf: [f64; 4],
    /// Cumulative probability over conversion branches.
    branch_cdf: Vec<(ConversionBranch, f64)>,
    variant: ProtocolVariant,
}

impl Sampler {
    fn new(
        h: &HyperState,
        v: ProtocolVariant,
        m: &ConversionModel,
    ) -> Result<Sampler, ProtocolError> {
        // The branch decomposition rejects the closed-form model and
        // validates eta, exactly like the probability route.
        let branches = crate::protocol::conversion_branch_weights(m)?;
        let mut branch_cdf = Vec::with_capacity(branches.len());
        let mut acc = 0.0;
        for (b, w) in branches {
            acc += w;
            branch_cdf.push((b, acc));
        }
        let mut pol_cdf = [0.0; 4];
        let mut freq_cdf = [0.0; 4];
        let mut acc = 0.0;
        for b in PolBell::ALL {
            acc += h.pol.weight(b);
            pol_cdf[b.index()] = acc;
        }
        let mut acc = 0.0;
        for b in FreqBell::ALL {
            acc += h.freq.weight(b);
            freq_cdf[b.index()] = acc;
        }
        Ok(Sampler {
            pol_cdf,
            freq_cdf,
            branch_cdf,
            variant: v,
        })
    }

    fn shot_rng(seed: u64, index: u64) -> ChaCha12Rng {
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&seed.to_le_bytes());
        }
        let mut rng = ChaCha12Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }

    fn draw_pol(&self, rng: &mut ChaCha12Rng) -> PolBell {
        let u: f64 = rng.gen();
        for b in PolBell::ALL {
            if u < self.pol_cdf[b.index()] {
                return b;
            }
        }
        PolBell::PhiMinus
    }

    fn draw_freq(&self, rng: &mut ChaCha12Rng) -> FreqBell {
        let u: f64 = rng.gen();
        for b in FreqBell::ALL {
            if u < self.freq_cdf[b.index()] {
                return b;
            }
        }
        FreqBell::PhiMinus
    }

    fn draw_branch(&self, rng: &mut ChaCha12Rng) -> ConversionBranch {
        if self.branch_cdf.len() == 1 {
            return self.branch_cdf[0].0;
        }
        let u: f64 = rng.gen();
        for &(b, c) in &self.branch_cdf {
            if u < c {
                return b;
            }
        }
        self.branch_cdf.last().unwrap().0
    }

    /// One protocol round on one sampled pair.
    fn shot(&self, rng: &mut ChaCha12Rng) -> Shot {
        let p = self.draw_pol(rng);
        let f = self.draw_freq(rng);
        let p_eff = match self.variant {
            ProtocolVariant::Standard => p,
            ProtocolVariant::HadamardModified => hadamard_relabel(p),
        };
        let (op_eff, of) = match self.draw_branch(rng) {
            ConversionBranch::Both => {
                let (op, of, _) = cnot_transition(p_eff, f);
                (op, of)
            }
            ConversionBranch::Neither => (p_eff, f),
            ConversionBranch::AliceOnly | ConversionBranch::BobOnly => {
                let rows = one_sided_conversion_rows(p_eff, f);
                rows[rng.gen_range(0..4usize)]
            }
        };
        let output_pol = match self.variant {
            ProtocolVariant::Standard => op_eff,
            ProtocolVariant::HadamardModified => hadamard_relabel(op_eff),
        };
        let kept = match self.variant {
            ProtocolVariant::Standard => of.is_equal_frequency(),
            ProtocolVariant::HadamardModified => !of.is_equal_frequency(),
        };
        Shot {
            output_pol,
            output_freq: of,
            kept,
        }
    }
}

struct Shot {
    output_pol: PolBell,
    output_freq: FreqBell,
    kept: bool,
}

/// Runs `n` seeded shots of the protocol round and tallies keep and target
/// counts. Deterministic for a given seed; shots are evaluated in parallel
/// partitions whose merged tallies do not depend on the partitioning.
pub fn simulate_shots(
    n: u64,
    h: &HyperState,
    v: ProtocolVariant,
    m: &ConversionModel,
    seed: u64,
) -> Result<ShotResult, ProtocolError> {
    let sampler = Sampler::new(h, v, m)?;
    let (kept, target) = (0..n)
        .into_par_iter()
        .fold(
            || (0u64, 0u64),
            |(kept, target), i| {
                let mut rng = Sampler::shot_rng(seed, i);
                let s = sampler.shot(&mut rng);
                (
                    kept + s.kept as u64,
                    target + (s.kept && s.output_pol == PolBell::PsiPlus) as u64,
                )
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(ShotResult::from_tallies(n, kept, target))
}

/// Sequential tally over an explicit shot index range; exists so tests can
/// prove partition independence against [`simulate_shots`].
#[cfg(test)]
fn tally_range(
    range: std::ops::Range<u64>,
    h: &HyperState,
    v: ProtocolVariant,
    m: &ConversionModel,
    seed: u64,
) -> (u64, u64) {
    let sampler = Sampler::new(h, v, m).unwrap();
    let mut kept = 0;
    let mut target = 0;
    for i in range {
        let mut rng = Sampler::shot_rng(seed, i);
        let s = sampler.shot(&mut rng);
        kept += s.kept as u64;
        target += (s.kept && s.output_pol == PolBell::PsiPlus) as u64;
    }
    (kept, target)
}

/// Detector label: side A or B, frequency bin 0 (omega_s) or 1 (omega_i).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detector {
    A0,
    A1,
    B0,
    B1,
}

impl Detector {
    pub fn name(&self) -> &'static str {
        match self {
            Detector::A0 => "A0",
            Detector::A1 => "A1",
            Detector::B0 => "B0",
            Detector::B1 => "B1",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EventRecord {
    pub time_tag_ps: i64,
    pub detector: Detector,
}

/// Per-detector event lists, each sorted by time tag.
#[derive(Clone, Debug, Default)]
pub struct EventStreams {
    pub a0: Vec<EventRecord>,
    pub a1: Vec<EventRecord>,
    pub b0: Vec<EventRecord>,
    pub b1: Vec<EventRecord>,
}

impl EventStreams {
    pub fn total_events(&self) -> usize {
        self.a0.len() + self.a1.len() + self.b0.len() + self.b1.len()
    }
}

/// Source, link and timing parameters for the event-stream generator.
#[derive(Clone, Copy, Debug)]
pub struct DetectionParams {
    /// Pair emission probability per pulse; at most one pair per pulse.
    pub pair_rate_per_pulse: f64,
    pub rep_rate_hz: f64,
    pub duration_s: f64,
    pub arm_transmission_a: f64,
    pub arm_transmission_b: f64,
    pub detector_efficiency: f64,
    /// Gaussian rms time jitter per detection event.
    pub time_jitter_rms_ps: f64,
    pub coincidence_window_ps: i64,
}

impl DetectionParams {
    pub fn new(pair_rate_per_pulse: f64, rep_rate_hz: f64, duration_s: f64) -> DetectionParams {
        DetectionParams {
            pair_rate_per_pulse,
            rep_rate_hz,
            duration_s,
            arm_transmission_a: 1.0,
            arm_transmission_b: 1.0,
            detector_efficiency: 1.0,
            time_jitter_rms_ps: 0.0,
            coincidence_window_ps: DEFAULT_COINCIDENCE_WINDOW_PS,
        }
    }
}

/// Generates per-detector time-tag streams for a pulsed source feeding one
/// protocol round per emitted pair, plus the shot-level ground truth the
/// stream was generated from.
///
/// omega_s routes to A0/B0 and omega_i to A1/B1. Each photon independently
/// survives its arm transmission times the detector efficiency. Pulse `k`
/// is tagged `round(k * 1e12 / rep_rate)` picoseconds plus jitter.
pub fn simulate_event_stream(
    d: &DetectionParams,
    h: &HyperState,
    v: ProtocolVariant,
    m: &ConversionModel,
    seed: u64,
) -> Result<(EventStreams, ShotResult), ProtocolError> {
    let sampler = Sampler::new(h, v, m)?;
    let n_pulses = (d.rep_rate_hz * d.duration_s).round() as u64;
    let period_ps = 1e12 / d.rep_rate_hz;
    let jitter = (d.time_jitter_rms_ps > 0.0)
        .then(|| Normal::new(0.0, d.time_jitter_rms_ps).expect("finite rms"));
    let mut streams = EventStreams::default();
    let mut n_total = 0u64;
    let mut n_kept = 0u64;
    let mut n_kept_psi_plus = 0u64;
    for pulse in 0..n_pulses {
        let mut rng = Sampler::shot_rng(seed, pulse);
        if rng.gen::<f64>() >= d.pair_rate_per_pulse {
            continue;
        }
        n_total += 1;
        let shot = sampler.shot(&mut rng);
        n_kept += shot.kept as u64;
        n_kept_psi_plus += (shot.kept && shot.output_pol == PolBell::PsiPlus) as u64;
        // Concrete per-photon frequency outcomes of the output Bell state:
        // equal-frequency states split ss/ii, the others si/is.
        let first = rng.gen::<bool>();
        let (f_a, f_b) = if shot.output_freq.is_equal_frequency() {
            if first {
                (0, 0)
            } else {
                (1, 1)
            }
        } else if first {
            (0, 1)
        } else {
            (1, 0)
        };
        let base_tag = (pulse as f64 * period_ps).round() as i64;
        let tag = |rng: &mut ChaCha12Rng| match &jitter {
            Some(n) => base_tag + n.sample(rng).round() as i64,
            None => base_tag,
        };
        if rng.gen::<f64>() < d.arm_transmission_a * d.detector_efficiency {
            let record = EventRecord {
                time_tag_ps: tag(&mut rng),
                detector: if f_a == 0 { Detector::A0 } else { Detector::A1 },
            };
            if f_a == 0 {
                streams.a0.push(record);
            } else {
                streams.a1.push(record);
            }
        }
        if rng.gen::<f64>() < d.arm_transmission_b * d.detector_efficiency {
            let record = EventRecord {
                time_tag_ps: tag(&mut rng),
                detector: if f_b == 0 { Detector::B0 } else { Detector::B1 },
            };
            if f_b == 0 {
                streams.b0.push(record);
            } else {
                streams.b1.push(record);
            }
        }
    }
    for stream in [
        &mut streams.a0,
        &mut streams.a1,
        &mut streams.b0,
        &mut streams.b1,
    ] {
        stream.sort_by_key(|e| e.time_tag_ps);
    }
    Ok((
        streams,
        ShotResult::from_tallies(n_total, n_kept, n_kept_psi_plus),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoincidenceCounts {
    pub kept: u64,
    pub discarded: u64,
}

fn merge_side(s0: &[EventRecord], s1: &[EventRecord]) -> Vec<EventRecord> {
    let mut merged = Vec::with_capacity(s0.len() + s1.len());
    let (mut i, mut j) = (0, 0);
    while i < s0.len() && j < s1.len() {
        if s0[i].time_tag_ps <= s1[j].time_tag_ps {
            merged.push(s0[i]);
            i += 1;
        } else {
            merged.push(s1[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&s0[i..]);
    merged.extend_from_slice(&s1[j..]);
    merged
}

/// Greedy earliest-match pairing of A-side and B-side events within the
/// window; each event is consumed at most once. Matched pairs on equal
/// frequency bins (A0-B0, A1-B1) count as kept, crossed bins as discarded.
pub fn count_coincidences(streams: &EventStreams, window_ps: i64) -> CoincidenceCounts {
    let a = merge_side(&streams.a0, &streams.a1);
    let b = merge_side(&streams.b0, &streams.b1);
    let mut counts = CoincidenceCounts {
        kept: 0,
        discarded: 0,
    };
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let dt = a[i].time_tag_ps - b[j].time_tag_ps;
        if dt.abs() <= window_ps {
            let same_bin = matches!(
                (a[i].detector, b[j].detector),
                (Detector::A0, Detector::B0) | (Detector::A1, Detector::B1)
            );
            if same_bin {
                counts.kept += 1;
            } else {
                counts.discarded += 1;
            }
            i += 1;
            j += 1;
        } else if dt < 0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    counts
}
