//! Applications built on the complete analyzer: teleportation of a
//! single-photon two-qubit state and entanglement swapping between
//! hyperentangled pairs.
//!
//! Both protocols reuse the two-photon analyzer unchanged: the measured
//! pair is placed on ports A and B and the spectator photons park on idle
//! paths until the measurement collapse is extracted.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hbsa::{
    classify_branches, prepare_hyper_bell, BellLabelT, ClassifyBranch, HyperBellLabel,
    MeasurementRecord,
};
use crate::qnd::{BellLabelP, Faults};
use crate::rng::{pick_weighted, SimRng};
use crate::spbsa::DetectorMap;
use crate::statevec::{
    apply_label_map, extract_photons, inner, CompositeBasis, PathLabel, PhotonBasis, Polarization,
    StateVector, TimeSlot,
};

/// A product single-photon state `(α|H⟩+β|V⟩) ⊗ (δ|S⟩+η|L⟩)`, the payload
/// teleportation carries. Each factor must be normalized.
#[derive(Copy, Clone, Debug)]
pub struct TwoQubitPhotonState {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub delta: Complex64,
    pub eta: Complex64,
}

impl TwoQubitPhotonState {
    /// Accepts coefficients normalized per DOF within 1e-6 and renormalizes
    /// them exactly.
    pub fn new(alpha: Complex64, beta: Complex64, delta: Complex64, eta: Complex64) -> Result<Self> {
        let pol = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        let tb = (delta.norm_sqr() + eta.norm_sqr()).sqrt();
        if (pol - 1.0).abs() > 1e-6 || (tb - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "coefficients not normalized per DOF: |pol| = {pol}, |tb| = {tb}"
            )));
        }
        Ok(Self { alpha: alpha / pol, beta: beta / pol, delta: delta / tb, eta: eta / tb })
    }

    /// Independent Haar-random qubit states for the two DOFs, with the
    /// global phase fixed by a real first coefficient.
    pub fn random(rng: &mut SimRng) -> Self {
        let qubit = |rng: &mut SimRng| {
            let z = rng.next_f64();
            let phase = 2.0 * std::f64::consts::PI * rng.next_f64();
            (
                Complex64::new((1.0 - z).sqrt(), 0.0),
                Complex64::from_polar(z.sqrt(), phase),
            )
        };
        let (alpha, beta) = qubit(rng);
        let (delta, eta) = qubit(rng);
        Self { alpha, beta, delta, eta }
    }

    fn pol_amp(&self, pol: Polarization) -> Complex64 {
        match pol {
            Polarization::H => self.alpha,
            Polarization::V => self.beta,
        }
    }

    fn tb_amp(&self, slot: TimeSlot) -> Complex64 {
        if slot == TimeSlot::S {
            self.delta
        } else {
            self.eta
        }
    }

    /// The state as a one-photon vector on the given path.
    pub fn as_single_photon(&self, path: PathLabel) -> StateVector<1> {
        let mut terms = Vec::with_capacity(4);
        for pol in [Polarization::H, Polarization::V] {
            for slot in [TimeSlot::S, TimeSlot::L] {
                terms.push((
                    self.pol_amp(pol) * self.tb_amp(slot),
                    CompositeBasis::new([PhotonBasis::new(pol, slot, path)]),
                ));
            }
        }
        StateVector::from_terms(terms).expect("normalized payload")
    }
}

/// Single-DOF correction: identity, phase flip, bit flip, or both (bit flip
/// first, then phase flip).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SingleDofOp {
    I,
    Z,
    X,
    ZX,
}

impl SingleDofOp {
    pub fn token(self) -> &'static str {
        match self {
            SingleDofOp::I => "I",
            SingleDofOp::Z => "Z",
            SingleDofOp::X => "X",
            SingleDofOp::ZX => "ZX",
        }
    }
}

/// The conditional correction Bob applies, one op per DOF.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct CorrectionOps {
    pub pol: SingleDofOp,
    pub tb: SingleDofOp,
}

fn op_for_pol(label: BellLabelP) -> SingleDofOp {
    match label {
        BellLabelP::PhiPlus => SingleDofOp::I,
        BellLabelP::PhiMinus => SingleDofOp::Z,
        BellLabelP::PsiPlus => SingleDofOp::X,
        BellLabelP::PsiMinus => SingleDofOp::ZX,
    }
}

fn op_for_tb(label: BellLabelT) -> SingleDofOp {
    match label {
        BellLabelT::PhiPlus => SingleDofOp::I,
        BellLabelT::PhiMinus => SingleDofOp::Z,
        BellLabelT::PsiPlus => SingleDofOp::X,
        BellLabelT::PsiMinus => SingleDofOp::ZX,
    }
}

/// The unique correction pair for a measurement outcome: Φ+ needs nothing,
/// Φ− a phase flip, Ψ+ a bit flip, Ψ− both, independently per DOF.
pub fn correction_for(label: HyperBellLabel) -> CorrectionOps {
    CorrectionOps { pol: op_for_pol(label.pol), tb: op_for_tb(label.tb) }
}

/// Apply a correction to a single-photon state as polarization/slot label
/// maps. Z is a phase flip on the second basis state (V, or the late slot).
pub fn apply_correction(s: &StateVector<1>, ops: CorrectionOps) -> Result<StateVector<1>> {
    let one = Complex64::new(1.0, 0.0);
    let state = apply_label_map(s, |basis| {
        let ph = *basis.photon(0);
        let (pol, pol_phase) = match ops.pol {
            SingleDofOp::I => (ph.pol, one),
            SingleDofOp::X => (ph.pol.flipped(), one),
            SingleDofOp::Z => (ph.pol, if ph.pol == Polarization::V { -one } else { one }),
            SingleDofOp::ZX => {
                let flipped = ph.pol.flipped();
                (flipped, if flipped == Polarization::V { -one } else { one })
            }
        };
        let flip_slot = |slot: TimeSlot| if slot == TimeSlot::S { TimeSlot::L } else { TimeSlot::S };
        let (slot, tb_phase) = match ops.tb {
            SingleDofOp::I => (ph.slot, one),
            SingleDofOp::X => (flip_slot(ph.slot), one),
            SingleDofOp::Z => (ph.slot, if ph.slot == TimeSlot::L { -one } else { one }),
            SingleDofOp::ZX => {
                let flipped = flip_slot(ph.slot);
                (flipped, if flipped == TimeSlot::L { -one } else { one })
            }
        };
        vec![(pol_phase * tb_phase, basis.with_photon(0, PhotonBasis { pol, slot, path: ph.path }))]
    })?;
    Ok(state)
}

/// The three-photon initial state of teleportation: the payload on photon X
/// (analyzer port A), one channel photon on port B, Bob's photon parked on
/// an idle path. The channel is the (Φ+, Φ+) hyperentangled pair.
fn teleport_initial(input: &TwoQubitPhotonState) -> StateVector<3> {
    let w = std::f64::consts::FRAC_1_SQRT_2;
    let mut terms = Vec::with_capacity(16);
    for px in [Polarization::H, Polarization::V] {
        for tx in [TimeSlot::S, TimeSlot::L] {
            let payload = input.pol_amp(px) * input.tb_amp(tx);
            for pair_pol in [Polarization::H, Polarization::V] {
                for pair_slot in [TimeSlot::S, TimeSlot::L] {
                    let amp = payload * Complex64::new(w * w, 0.0);
                    terms.push((
                        amp,
                        CompositeBasis::new([
                            PhotonBasis::new(px, tx, PathLabel::PortA),
                            PhotonBasis::new(pair_pol, pair_slot, PathLabel::PortB),
                            PhotonBasis::new(pair_pol, pair_slot, PathLabel::Idle1),
                        ]),
                    ));
                }
            }
        }
    }
    StateVector::from_terms(terms).expect("channel state is normalized")
}

/// One exhaustive branch of a teleportation run.
#[derive(Clone, Debug)]
pub struct TeleportBranch {
    pub probability: f64,
    pub label: HyperBellLabel,
    pub record: MeasurementRecord,
    pub correction: CorrectionOps,
    /// Overlap of Bob's corrected photon with the payload.
    pub fidelity: f64,
    /// Overlap without the conditional correction.
    pub fidelity_uncorrected: f64,
}

fn bob_fidelities(
    leaf: &ClassifyBranch<3>,
    reference: &StateVector<1>,
) -> Result<(CorrectionOps, f64, f64)> {
    let bob = extract_photons(&leaf.state, [2])?;
    let correction = correction_for(leaf.label);
    let corrected = apply_correction(&bob, correction)?;
    let fidelity = inner(&corrected, reference).norm_sqr();
    let fidelity_uncorrected = inner(&bob, reference).norm_sqr();
    Ok((correction, fidelity, fidelity_uncorrected))
}

/// Teleport `input` over the shared (Φ+, Φ+) channel and enumerate every
/// measurement branch with Bob's corrected fidelity.
pub fn teleport_branches(
    input: &TwoQubitPhotonState,
    map: &DetectorMap,
    faults: Faults,
) -> Result<Vec<TeleportBranch>> {
    let initial = teleport_initial(input);
    let reference = input.as_single_photon(PathLabel::Idle1);
    classify_branches(&initial, map, faults)?
        .into_iter()
        .map(|leaf| {
            let (correction, fidelity, fidelity_uncorrected) = bob_fidelities(&leaf, &reference)?;
            Ok(TeleportBranch {
                probability: leaf.probability,
                label: leaf.label,
                record: leaf.record,
                correction,
                fidelity,
                fidelity_uncorrected,
            })
        })
        .collect()
}

/// Sampled flavor: one branch drawn from the exact distribution.
pub fn teleport_sampled(
    input: &TwoQubitPhotonState,
    map: &DetectorMap,
    faults: Faults,
    rng: &mut SimRng,
) -> Result<TeleportBranch> {
    let branches = teleport_branches(input, map, faults)?;
    let weights: Vec<f64> = branches.iter().map(|b| b.probability).collect();
    let pick = pick_weighted(rng, &weights);
    Ok(branches.into_iter().nth(pick).unwrap())
}

/// The four-photon initial state of entanglement swapping: Charlie's two
/// photons on the analyzer ports, Alice's and Bob's parked on idle paths.
/// Both channels are (Φ+, Φ+) pairs, shared as (A, C1) and (C2, B).
fn swap_initial() -> StateVector<4> {
    let quarter = Complex64::new(0.25, 0.0);
    let mut terms = Vec::with_capacity(16);
    for p_left in [Polarization::H, Polarization::V] {
        for t_left in [TimeSlot::S, TimeSlot::L] {
            for p_right in [Polarization::H, Polarization::V] {
                for t_right in [TimeSlot::S, TimeSlot::L] {
                    terms.push((
                        quarter,
                        CompositeBasis::new([
                            PhotonBasis::new(p_left, t_left, PathLabel::PortA), // C1
                            PhotonBasis::new(p_right, t_right, PathLabel::PortB), // C2
                            PhotonBasis::new(p_left, t_left, PathLabel::Idle1), // A
                            PhotonBasis::new(p_right, t_right, PathLabel::Idle2), // B
                        ]),
                    ));
                }
            }
        }
    }
    StateVector::from_terms(terms).expect("product of two Bell pairs is normalized")
}

/// One exhaustive branch of an entanglement-swapping run.
#[derive(Clone, Debug)]
pub struct SwapBranch {
    pub probability: f64,
    pub charlie: HyperBellLabel,
    pub ab: HyperBellLabel,
    pub matches: bool,
    pub record: MeasurementRecord,
}

/// Identify the post-measurement Alice/Bob state by overlap against the 16
/// prepared states; exactly one must have unit magnitude.
fn identify_residual(leaf: &ClassifyBranch<4>) -> Result<HyperBellLabel> {
    let residual = extract_photons(&leaf.state, [2, 3])?;
    // move the pair onto the analyzer ports so it compares against the
    // prepared references
    let on_ports = apply_label_map(&residual, |basis| {
        let a = *basis.photon(0);
        let b = *basis.photon(1);
        vec![(
            Complex64::new(1.0, 0.0),
            CompositeBasis::new([
                PhotonBasis { path: PathLabel::PortA, ..a },
                PhotonBasis { path: PathLabel::PortB, ..b },
            ]),
        )]
    })?;
    let mut found = None;
    for candidate in HyperBellLabel::all() {
        let overlap = inner(&prepare_hyper_bell(candidate), &on_ports).norm();
        if (overlap - 1.0).abs() < 1e-9 {
            if found.is_some() {
                return Err(Error::AmbiguousResidual("two unit overlaps".into()));
            }
            found = Some(candidate);
        } else if overlap > 1e-9 {
            return Err(Error::AmbiguousResidual(format!(
                "partial overlap {overlap} with {candidate}"
            )));
        }
    }
    found.ok_or_else(|| Error::AmbiguousResidual("no unit overlap".into()))
}

/// Run the swap and enumerate all of Charlie's measurement branches with the
/// identified Alice/Bob label.
pub fn swap_branches(map: &DetectorMap, faults: Faults) -> Result<Vec<SwapBranch>> {
    classify_branches(&swap_initial(), map, faults)?
        .into_iter()
        .map(|leaf| {
            let ab = identify_residual(&leaf)?;
            Ok(SwapBranch {
                probability: leaf.probability,
                charlie: leaf.label,
                ab,
                matches: ab == leaf.label,
                record: leaf.record,
            })
        })
        .collect()
}

/// Sampled flavor of [`swap_branches`].
pub fn swap_sampled(map: &DetectorMap, faults: Faults, rng: &mut SimRng) -> Result<SwapBranch> {
    let branches = swap_branches(map, faults)?;
    let weights: Vec<f64> = branches.iter().map(|b| b.probability).collect();
    let pick = pick_weighted(rng, &weights);
    Ok(branches.into_iter().nth(pick).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::NORM_TOL;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn map() -> DetectorMap {
        DetectorMap::derive().unwrap()
    }

    /// Bob's conditional state read straight off the measurement-term
    /// structure: the independent oracle for the correction table.
    fn conditional_bob(input: &TwoQubitPhotonState, label: HyperBellLabel) -> StateVector<1> {
        let (h, v) = match label.pol {
            BellLabelP::PhiPlus => (input.alpha, input.beta),
            BellLabelP::PhiMinus => (input.alpha, -input.beta),
            BellLabelP::PsiPlus => (input.beta, input.alpha),
            BellLabelP::PsiMinus => (-input.beta, input.alpha),
        };
        let (s, l) = match label.tb {
            BellLabelT::PhiPlus => (input.delta, input.eta),
            BellLabelT::PhiMinus => (input.delta, -input.eta),
            BellLabelT::PsiPlus => (input.eta, input.delta),
            BellLabelT::PsiMinus => (-input.eta, input.delta),
        };
        let mut terms = Vec::new();
        for (pol, pa) in [(Polarization::H, h), (Polarization::V, v)] {
            for (slot, ta) in [(TimeSlot::S, s), (TimeSlot::L, l)] {
                terms.push((
                    pa * ta,
                    CompositeBasis::new([PhotonBasis::new(pol, slot, PathLabel::Idle1)]),
                ));
            }
        }
        StateVector::from_terms(terms).unwrap()
    }

    #[test]
    fn corrections_restore_every_conditional_state() {
        let mut rng = SimRng::new(5);
        let input = TwoQubitPhotonState::random(&mut rng);
        let reference = input.as_single_photon(PathLabel::Idle1);
        for label in HyperBellLabel::all() {
            let conditional = conditional_bob(&input, label);
            let corrected = apply_correction(&conditional, correction_for(label)).unwrap();
            let fidelity = inner(&corrected, &reference).norm_sqr();
            assert!((fidelity - 1.0).abs() < NORM_TOL, "{label}: {fidelity}");
        }
    }

    #[test]
    fn correction_table_spot_checks() {
        let id = correction_for("PhiP+ PhiT+".parse().unwrap());
        assert_eq!(id, CorrectionOps { pol: SingleDofOp::I, tb: SingleDofOp::I });
        let hard = correction_for("PsiP- PhiT-".parse().unwrap());
        assert_eq!(hard, CorrectionOps { pol: SingleDofOp::ZX, tb: SingleDofOp::Z });
    }

    #[test]
    fn teleport_branch_for_psi_plus_phi_plus_leaves_swapped_pol() {
        // the branch labeled (Ψ+, Φ+) must carry (α|V⟩+β|H⟩)(δ|S⟩+η|L⟩)
        let input =
            TwoQubitPhotonState::new(c(0.6, 0.0), c(0.0, 0.8), c(0.28, 0.0), c(0.96, 0.0)).unwrap();
        let swapped =
            TwoQubitPhotonState::new(c(0.0, 0.8), c(0.6, 0.0), c(0.28, 0.0), c(0.96, 0.0)).unwrap();
        let branches = teleport_branches(&input, &map(), Faults::default()).unwrap();
        let target: HyperBellLabel = "PsiP+ PhiT+".parse().unwrap();
        let leaf = branches.iter().find(|b| b.label == target).unwrap();
        // uncorrected fidelity against the swapped payload is 1
        let initial = teleport_initial(&input);
        let leaves = classify_branches(&initial, &map(), Faults::default()).unwrap();
        let raw = leaves.iter().find(|l| l.label == target).unwrap();
        let bob = extract_photons(&raw.state, [2]).unwrap();
        let against_swapped =
            inner(&bob, &swapped.as_single_photon(PathLabel::Idle1)).norm_sqr();
        assert!((against_swapped - 1.0).abs() < NORM_TOL);
        assert!((leaf.fidelity - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn basis_payload_restored_on_every_branch() {
        let input =
            TwoQubitPhotonState::new(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let branches = teleport_branches(&input, &map(), Faults::default()).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < NORM_TOL);
        for br in &branches {
            assert!((br.fidelity - 1.0).abs() < NORM_TOL, "{}: {}", br.label, br.fidelity);
        }
    }

    #[test]
    fn branch_labels_are_uniform_sixteenths() {
        let mut rng = SimRng::new(17);
        let input = TwoQubitPhotonState::random(&mut rng);
        let branches = teleport_branches(&input, &map(), Faults::default()).unwrap();
        let mut by_label: std::collections::BTreeMap<String, f64> = Default::default();
        for br in &branches {
            *by_label.entry(br.label.to_string()).or_insert(0.0) += br.probability;
        }
        assert_eq!(by_label.len(), 16);
        for (label, p) in by_label {
            assert!((p - 1.0 / 16.0).abs() < NORM_TOL, "{label}: {p}");
        }
    }

    #[test]
    fn uncorrected_fidelity_is_lossy_for_generic_input() {
        let mut rng = SimRng::new(23);
        let input = TwoQubitPhotonState::random(&mut rng);
        let branches = teleport_branches(&input, &map(), Faults::default()).unwrap();
        let mean: f64 = branches.iter().map(|b| b.probability * b.fidelity_uncorrected).sum();
        assert!(mean < 0.99, "uncorrected mean fidelity {mean} should be well below 1");
    }

    #[test]
    fn unnormalized_payload_rejected() {
        assert!(TwoQubitPhotonState::new(c(1.0, 0.0), c(0.5, 0.0), c(1.0, 0.0), c(0.0, 0.0))
            .is_err());
    }

    #[test]
    fn swap_labels_agree_on_every_branch() {
        let branches = swap_branches(&map(), Faults::default()).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < NORM_TOL);
        let mut by_label: std::collections::BTreeMap<String, f64> = Default::default();
        for br in &branches {
            assert!(br.matches, "{} vs {}", br.charlie, br.ab);
            *by_label.entry(br.charlie.to_string()).or_insert(0.0) += br.probability;
        }
        assert_eq!(by_label.len(), 16);
        for (label, p) in by_label {
            assert!((p - 1.0 / 16.0).abs() < NORM_TOL, "{label}: {p}");
        }
    }

    #[test]
    fn swap_worked_example() {
        let branches = swap_branches(&map(), Faults::default()).unwrap();
        let target: HyperBellLabel = "PhiP+ PsiT+".parse().unwrap();
        let hits: Vec<_> = branches.iter().filter(|b| b.charlie == target).collect();
        assert!(!hits.is_empty());
        for hit in hits {
            assert_eq!(hit.ab, target);
        }
    }
}
