//! The complete two-step classifier for the 16 hyperentangled Bell states,
//! plus preparation of those states.
//!
//! Step 1 reads and relabels the polarization Bell state nondestructively
//! ([`crate::qnd`]). Step 2 measures each photon in its single-photon Bell
//! basis ([`crate::spbsa`]); the detection pair falls in one of four groups,
//! and inside a group the (relabeled) polarization state picks out the
//! time-bin state uniquely. The group table is stored as a transcription and
//! independently reconstructed from element-level simulation by
//! [`verify_table2`]; any discrepancy is an error.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::optics::DetectorPort;
use crate::qnd::{polarization_bsa_branches, BellLabelP, Faults, Step1Record};
use crate::rng::{pick_weighted, SimRng};
use crate::spbsa::{analyze_photon_branches, DetectorMap, SingleBell};
use crate::statevec::{
    make_basis_state, superpose, CompositeBasis, PathLabel, PhotonBasis, PhotonSide, StateVector,
    TimeSlot,
};

/// The four time-bin Bell states.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BellLabelT {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabelT {
    pub const ALL: [BellLabelT; 4] =
        [BellLabelT::PhiPlus, BellLabelT::PhiMinus, BellLabelT::PsiPlus, BellLabelT::PsiMinus];

    /// The two `(sign, (slot_A, slot_B))` terms, each weight 1/√2.
    pub fn terms(self) -> [(f64, (TimeSlot, TimeSlot)); 2] {
        const S: TimeSlot = TimeSlot::S;
        const L: TimeSlot = TimeSlot::L;
        match self {
            BellLabelT::PhiPlus => [(1.0, (S, S)), (1.0, (L, L))],
            BellLabelT::PhiMinus => [(1.0, (S, S)), (-1.0, (L, L))],
            BellLabelT::PsiPlus => [(1.0, (S, L)), (1.0, (L, S))],
            BellLabelT::PsiMinus => [(1.0, (S, L)), (-1.0, (L, S))],
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            BellLabelT::PhiPlus => "PhiT+",
            BellLabelT::PhiMinus => "PhiT-",
            BellLabelT::PsiPlus => "PsiT+",
            BellLabelT::PsiMinus => "PsiT-",
        }
    }
}

impl std::fmt::Display for BellLabelT {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// One of the 16 hyperentangled Bell states: a polarization Bell label
/// paired with a time-bin one.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HyperBellLabel {
    pub pol: BellLabelP,
    pub tb: BellLabelT,
}

impl HyperBellLabel {
    pub fn all() -> Vec<HyperBellLabel> {
        let mut out = Vec::with_capacity(16);
        for pol in BellLabelP::ALL {
            for tb in BellLabelT::ALL {
                out.push(HyperBellLabel { pol, tb });
            }
        }
        out
    }
}

impl std::fmt::Display for HyperBellLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", self.pol, self.tb)
    }
}

fn parse_pol(token: &str) -> Result<BellLabelP> {
    BellLabelP::ALL
        .into_iter()
        .find(|l| l.token() == token)
        .ok_or_else(|| Error::InvalidInput(format!("bad polarization label {token:?}")))
}

fn parse_tb(token: &str) -> Result<BellLabelT> {
    BellLabelT::ALL
        .into_iter()
        .find(|l| l.token() == token)
        .ok_or_else(|| Error::InvalidInput(format!("bad time-bin label {token:?}")))
}

impl std::str::FromStr for HyperBellLabel {
    type Err = Error;

    /// Parses two whitespace-separated tokens, polarization first, e.g.
    /// `"PhiP- PsiT+"`.
    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let (Some(p), Some(t), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::InvalidInput(format!("expected two label tokens, got {s:?}")));
        };
        Ok(HyperBellLabel { pol: parse_pol(p)?, tb: parse_tb(t)? })
    }
}

/// Tensor product of the named polarization and time-bin Bell states with
/// the photons on ports A and B: four terms of amplitude ±1/2.
pub fn prepare_hyper_bell(label: HyperBellLabel) -> StateVector<2> {
    let mut pairs = Vec::with_capacity(4);
    for (ps, (pa, pb)) in label.pol.terms() {
        for (ts, (ta, tb)) in label.tb.terms() {
            let basis = CompositeBasis::new([
                PhotonBasis::new(pa, ta, PathLabel::PortA),
                PhotonBasis::new(pb, tb, PathLabel::PortB),
            ]);
            pairs.push((Complex64::new(ps * ts * 0.5, 0.0), make_basis_state(basis)));
        }
    }
    let refs: Vec<(Complex64, &StateVector<2>)> =
        pairs.iter().map(|(amp, st)| (*amp, st)).collect();
    superpose(&refs).expect("bell product is normalized")
}

/// One group of the detection table: four (relabeled polarization ⊗
/// time-bin) products sharing the same four possible detection pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table2Group {
    pub id: u8,
    pub members: [(BellLabelP, BellLabelT); 4],
    pub detections: [(SingleBell, SingleBell); 4],
}

/// Transcription of the four detection groups.
pub fn table2_transcription() -> [Table2Group; 4] {
    use BellLabelP as P;
    use BellLabelT as T;
    use SingleBell as S;
    [
        Table2Group {
            id: 1,
            members: [
                (P::PhiPlus, T::PhiPlus),
                (P::PhiMinus, T::PhiMinus),
                (P::PsiPlus, T::PsiPlus),
                (P::PsiMinus, T::PsiMinus),
            ],
            detections: [
                (S::PhiPlus, S::PhiPlus),
                (S::PhiMinus, S::PhiMinus),
                (S::PsiPlus, S::PsiPlus),
                (S::PsiMinus, S::PsiMinus),
            ],
        },
        Table2Group {
            id: 2,
            members: [
                (P::PhiPlus, T::PsiPlus),
                (P::PhiMinus, T::PsiMinus),
                (P::PsiPlus, T::PhiPlus),
                (P::PsiMinus, T::PhiMinus),
            ],
            detections: [
                (S::PhiPlus, S::PsiPlus),
                (S::PhiMinus, S::PsiMinus),
                (S::PsiPlus, S::PhiPlus),
                (S::PsiMinus, S::PhiMinus),
            ],
        },
        Table2Group {
            id: 3,
            members: [
                (P::PhiPlus, T::PhiMinus),
                (P::PhiMinus, T::PhiPlus),
                (P::PsiPlus, T::PsiMinus),
                (P::PsiMinus, T::PsiPlus),
            ],
            detections: [
                (S::PhiPlus, S::PhiMinus),
                (S::PhiMinus, S::PhiPlus),
                (S::PsiPlus, S::PsiMinus),
                (S::PsiMinus, S::PsiPlus),
            ],
        },
        Table2Group {
            id: 4,
            members: [
                (P::PhiPlus, T::PsiMinus),
                (P::PhiMinus, T::PsiPlus),
                (P::PsiPlus, T::PhiMinus),
                (P::PsiMinus, T::PhiPlus),
            ],
            detections: [
                (S::PhiPlus, S::PsiMinus),
                (S::PhiMinus, S::PsiPlus),
                (S::PsiPlus, S::PhiMinus),
                (S::PsiMinus, S::PhiPlus),
            ],
        },
    ]
}

/// Time-bin label paired with `relabeled` in the group containing the
/// detection pair. Total over valid labels.
pub fn table2_lookup(relabeled: BellLabelP, det_a: SingleBell, det_b: SingleBell) -> BellLabelT {
    let groups = table2_transcription();
    let group = groups
        .iter()
        .find(|g| g.detections.contains(&(det_a, det_b)))
        .expect("the 16 detection pairs partition into the four groups");
    group
        .members
        .iter()
        .find(|(p, _)| *p == relabeled)
        .map(|(_, t)| *t)
        .expect("each group holds each polarization label exactly once")
}

/// Everything a single classification run records: the step-1 readout and
/// the two detection results.
#[derive(Copy, Clone, Debug)]
pub struct MeasurementRecord {
    pub step1: Step1Record,
    pub det_a: SingleBell,
    pub det_b: SingleBell,
    pub port_a: DetectorPort,
    pub port_b: DetectorPort,
}

/// One exhaustive branch of a classification.
#[derive(Clone, Debug)]
pub struct ClassifyBranch<const N: usize> {
    pub probability: f64,
    pub record: MeasurementRecord,
    pub label: HyperBellLabel,
    pub state: StateVector<N>,
}

/// Run the full analyzer on photons 0 and 1 and enumerate every measurement
/// branch with its decoded label. Spectator photons ride along collapsed.
pub fn classify_branches<const N: usize>(
    s: &StateVector<N>,
    map: &DetectorMap,
    faults: Faults,
) -> Result<Vec<ClassifyBranch<N>>> {
    let mut leaves = Vec::new();
    for step1 in polarization_bsa_branches(s, faults)? {
        for det_a in analyze_photon_branches(&step1.state, PhotonSide::A, map)? {
            for det_b in analyze_photon_branches(&det_a.state, PhotonSide::B, map)? {
                let tb = table2_lookup(step1.record.relabeled, det_a.bell, det_b.bell);
                leaves.push(ClassifyBranch {
                    probability: step1.probability * det_a.probability * det_b.probability,
                    record: MeasurementRecord {
                        step1: step1.record,
                        det_a: det_a.bell,
                        det_b: det_b.bell,
                        port_a: det_a.port,
                        port_b: det_b.port,
                    },
                    label: HyperBellLabel { pol: step1.record.original, tb },
                    state: det_b.state,
                });
            }
        }
    }
    Ok(leaves)
}

/// Classify a prepared hyperentangled Bell state: every exhaustive branch
/// must decode to the same label, which is returned along with the branches.
pub fn classify(
    s: &StateVector<2>,
    map: &DetectorMap,
    faults: Faults,
) -> Result<(HyperBellLabel, Vec<ClassifyBranch<2>>)> {
    let leaves = classify_branches(s, map, faults)?;
    let label = leaves[0].label;
    if leaves.iter().any(|l| l.label != label) {
        let seen: Vec<String> = leaves.iter().map(|l| l.label.to_string()).collect();
        return Err(Error::InconsistentBranch(seen.join(" | ")));
    }
    Ok((label, leaves))
}

/// Sampled flavor: enumerate the exact branch distribution, draw one leaf.
pub fn classify_sampled<const N: usize>(
    s: &StateVector<N>,
    map: &DetectorMap,
    faults: Faults,
    rng: &mut SimRng,
) -> Result<ClassifyBranch<N>> {
    let leaves = classify_branches(s, map, faults)?;
    let weights: Vec<f64> = leaves.iter().map(|l| l.probability).collect();
    let pick = pick_weighted(rng, &weights);
    Ok(leaves.into_iter().nth(pick).unwrap())
}

/// Product state (relabeled polarization Bell ⊗ time-bin Bell) on the
/// analyzer ports — the state step 2 actually sees.
fn relabeled_product(pol: BellLabelP, tb: BellLabelT) -> StateVector<2> {
    prepare_hyper_bell(HyperBellLabel { pol, tb })
}

/// Reconstruct the detection table from element-level simulation and check
/// it against the transcription. Returns the reconstructed groups (in
/// transcription order) on success.
pub fn verify_table2(map: &DetectorMap) -> Result<Vec<Table2Group>> {
    use std::collections::BTreeMap;
    // detection support of each of the 16 (relabeled ⊗ time-bin) products
    let mut support_of: BTreeMap<(BellLabelP, BellLabelT), Vec<(SingleBell, SingleBell)>> =
        BTreeMap::new();
    for pol in BellLabelP::ALL {
        for tb in BellLabelT::ALL {
            let state = relabeled_product(pol, tb);
            let mut support = Vec::new();
            for det_a in analyze_photon_branches(&state, PhotonSide::A, map)? {
                for det_b in analyze_photon_branches(&det_a.state, PhotonSide::B, map)? {
                    let p = det_a.probability * det_b.probability;
                    if (p - 0.25).abs() > 1e-9 {
                        return Err(Error::TableMismatch(format!(
                            "({pol}, {tb}) detection ({}, {}) has probability {p}, not 1/4",
                            det_a.bell, det_b.bell
                        )));
                    }
                    support.push((det_a.bell, det_b.bell));
                }
            }
            support.sort();
            if support.len() != 4 {
                return Err(Error::TableMismatch(format!(
                    "({pol}, {tb}) has {} detection pairs, not 4",
                    support.len()
                )));
            }
            support_of.insert((pol, tb), support);
        }
    }

    let mut reconstructed = Vec::new();
    for group in table2_transcription() {
        let mut expected = group.detections.to_vec();
        expected.sort();
        for member in group.members {
            let got = &support_of[&member];
            if *got != expected {
                return Err(Error::TableMismatch(format!(
                    "({}, {}) support {:?} differs from group {}",
                    member.0, member.1, got, group.id
                )));
            }
        }
        reconstructed.push(group);
    }
    Ok(reconstructed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::{inner, NORM_TOL};

    fn map() -> DetectorMap {
        DetectorMap::derive().unwrap()
    }

    #[test]
    fn prepared_states_have_four_half_terms() {
        for label in HyperBellLabel::all() {
            let s = prepare_hyper_bell(label);
            assert_eq!(s.term_count(), 4);
            assert!((s.norm() - 1.0).abs() < NORM_TOL);
            for (_, amp) in s.terms() {
                assert!((amp.norm() - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn prepared_states_are_orthonormal() {
        let labels = HyperBellLabel::all();
        for (i, a) in labels.iter().enumerate() {
            for (j, b) in labels.iter().enumerate() {
                let overlap = inner(&prepare_hyper_bell(*a), &prepare_hyper_bell(*b)).norm();
                if i == j {
                    assert!((overlap - 1.0).abs() < NORM_TOL);
                } else {
                    assert!(overlap < 1e-12);
                }
            }
        }
    }

    #[test]
    fn psi_minus_psi_minus_signs() {
        // expanding (|HV⟩−|VH⟩)(|SL⟩−|LS⟩)/2 gives signs +,−,−,+
        let s = prepare_hyper_bell(HyperBellLabel {
            pol: BellLabelP::PsiMinus,
            tb: BellLabelT::PsiMinus,
        });
        let signs: Vec<f64> = s.terms().map(|(_, amp)| amp.re.signum()).collect();
        assert_eq!(signs, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn lookup_matches_worked_example() {
        // ψ−ₐ φ+ᵦ with new state Ψ+ decodes to Φ− in the time bin
        assert_eq!(
            table2_lookup(BellLabelP::PsiPlus, SingleBell::PsiMinus, SingleBell::PhiPlus),
            BellLabelT::PhiMinus
        );
        assert_eq!(
            table2_lookup(BellLabelP::PhiPlus, SingleBell::PhiPlus, SingleBell::PhiPlus),
            BellLabelT::PhiPlus
        );
        assert_eq!(
            table2_lookup(BellLabelP::PhiPlus, SingleBell::PhiPlus, SingleBell::PsiMinus),
            BellLabelT::PsiMinus
        );
    }

    #[test]
    fn detection_pairs_partition_into_groups() {
        let groups = table2_transcription();
        let mut seen = std::collections::BTreeSet::new();
        for g in &groups {
            for d in g.detections {
                assert!(seen.insert(d), "duplicate pair {d:?}");
            }
        }
        assert_eq!(seen.len(), 16);
        // within each group the polarization label determines the time bin
        for g in &groups {
            let pols: std::collections::BTreeSet<_> = g.members.iter().map(|(p, _)| *p).collect();
            assert_eq!(pols.len(), 4, "group {}", g.id);
        }
    }

    #[test]
    fn table_reconstruction_matches_transcription() {
        let groups = verify_table2(&map()).unwrap();
        assert_eq!(groups.len(), 4);
    }

    #[test]
    fn all_sixteen_labels_round_trip() {
        let map = map();
        for label in HyperBellLabel::all() {
            let s = prepare_hyper_bell(label);
            let (decoded, leaves) = classify(&s, &map, Faults::default()).unwrap();
            assert_eq!(decoded, label);
            assert_eq!(leaves.len(), 4, "{label}");
            for leaf in &leaves {
                assert!((leaf.probability - 0.25).abs() < NORM_TOL);
            }
        }
    }

    #[test]
    fn worked_example_phi_minus_phi_minus() {
        let map = map();
        let label: HyperBellLabel = "PhiP- PhiT-".parse().unwrap();
        let s = prepare_hyper_bell(label);
        let (decoded, leaves) = classify(&s, &map, Faults::default()).unwrap();
        assert_eq!(decoded, label);
        let group4: Vec<(SingleBell, SingleBell)> = table2_transcription()[3].detections.to_vec();
        for leaf in &leaves {
            assert_eq!(leaf.record.step1.original, BellLabelP::PhiMinus);
            assert_eq!(leaf.record.step1.relabeled, BellLabelP::PsiPlus);
            assert!(group4.contains(&(leaf.record.det_a, leaf.record.det_b)));
        }
    }

    #[test]
    fn global_phase_is_tolerated() {
        let map = map();
        let label: HyperBellLabel = "PsiP+ PhiT+".parse().unwrap();
        let s = prepare_hyper_bell(label);
        let phased = crate::statevec::apply_label_map(&s, |b| {
            vec![(Complex64::new(0.0, 1.0), *b)]
        })
        .unwrap();
        let (decoded, _) = classify(&phased, &map, Faults::default()).unwrap();
        assert_eq!(decoded, label);
    }

    #[test]
    fn photon_a_of_hyper_state_hits_all_four_bells_evenly() {
        // expanding the hyper state in the single-photon Bell pair basis
        // spreads photon A over the four outcomes at 1/4 each
        let map = map();
        let s = prepare_hyper_bell("PhiP+ PhiT+".parse().unwrap());
        let branches = analyze_photon_branches(&s, PhotonSide::A, &map).unwrap();
        assert_eq!(branches.len(), 4);
        for br in &branches {
            assert!((br.probability - 0.25).abs() < NORM_TOL);
        }
    }

    #[test]
    fn label_parsing_round_trips_and_rejects_garbage() {
        for label in HyperBellLabel::all() {
            let text = label.to_string();
            let parsed: HyperBellLabel = text.parse().unwrap();
            assert_eq!(parsed, label);
        }
        assert!("PhiP+".parse::<HyperBellLabel>().is_err());
        assert!("PhiX+ PhiT-".parse::<HyperBellLabel>().is_err());
        assert!("PhiP+ PhiT- extra".parse::<HyperBellLabel>().is_err());
    }
}
