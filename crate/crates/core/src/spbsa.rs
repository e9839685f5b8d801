//! Single-photon Bell-state analyzer: projects one photon onto the
//! entangled basis of its own polarization and time-bin degrees of freedom
//! and reports which of the four detectors fired.
//!
//! Element chain per photon: a Pockels cell active in the late slot turns
//! the polarization into a φ/ψ flag, a splitter routes the two classes onto
//! separate branches, a Pockels cell active in the early slot restores a
//! polarization/slot correlation on each branch, and an unbalanced
//! interferometer per branch delays the early component by one slot so both
//! terms leave in the same time bin. A diagonal-basis measurement on the two
//! branch outputs then reads the ± sign. Which port corresponds to which
//! Bell state is not assumed: [`DetectorMap::derive`] pushes each basis
//! state through the chain and records where it lands.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::optics::{
    delay, detect_polarization, pbs, pockels, DetectionArm, DetectorPort, DiagSign, PbsWiring,
};
use crate::rng::{pick_weighted, SimRng};
use crate::statevec::{
    make_basis_state, superpose, CompositeBasis, PathLabel, PhotonBasis, PhotonSide, Polarization,
    SpbsaNode, StateVector, TimeSlot,
};

/// The four single-photon two-DOF Bell states:
/// φ± = (|HL⟩ ± |VS⟩)/√2, ψ± = (|HS⟩ ± |VL⟩)/√2.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SingleBell {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl SingleBell {
    pub const ALL: [SingleBell; 4] =
        [SingleBell::PhiPlus, SingleBell::PhiMinus, SingleBell::PsiPlus, SingleBell::PsiMinus];

    /// The two `(sign, (polarization, slot))` terms, each weight 1/√2.
    pub fn terms(self) -> [(f64, (Polarization, TimeSlot)); 2] {
        use Polarization::{H, V};
        match self {
            SingleBell::PhiPlus => [(1.0, (H, TimeSlot::L)), (1.0, (V, TimeSlot::S))],
            SingleBell::PhiMinus => [(1.0, (H, TimeSlot::L)), (-1.0, (V, TimeSlot::S))],
            SingleBell::PsiPlus => [(1.0, (H, TimeSlot::S)), (1.0, (V, TimeSlot::L))],
            SingleBell::PsiMinus => [(1.0, (H, TimeSlot::S)), (-1.0, (V, TimeSlot::L))],
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            SingleBell::PhiPlus => "phi+",
            SingleBell::PhiMinus => "phi-",
            SingleBell::PsiPlus => "psi+",
            SingleBell::PsiMinus => "psi-",
        }
    }
}

impl std::fmt::Display for SingleBell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// A single-photon Bell basis state prepared on the analyzer input port of
/// the given side, as a one-photon state vector.
pub fn single_bell_state(side: PhotonSide, bell: SingleBell) -> StateVector<1> {
    let mk = |pol: Polarization, slot: TimeSlot| {
        make_basis_state(CompositeBasis::new([PhotonBasis::new(pol, slot, side.port())]))
    };
    let [(s0, (p0, t0)), (s1, (p1, t1))] = bell.terms();
    let w = std::f64::consts::FRAC_1_SQRT_2;
    superpose(&[
        (Complex64::new(s0 * w, 0.0), &mk(p0, t0)),
        (Complex64::new(s1 * w, 0.0), &mk(p1, t1)),
    ])
    .expect("bell terms are normalized")
}

fn node(side: PhotonSide, n: SpbsaNode) -> PathLabel {
    PathLabel::Spbsa(side, n)
}

/// Detector-facing wiring of one side.
pub fn detection_arms(side: PhotonSide) -> [DetectionArm; 2] {
    [
        DetectionArm {
            input: node(side, SpbsaNode::UpperOut),
            det_plus: node(side, SpbsaNode::DetUpperPlus),
            det_minus: node(side, SpbsaNode::DetUpperMinus),
        },
        DetectionArm {
            input: node(side, SpbsaNode::LowerOut),
            det_plus: node(side, SpbsaNode::DetLowerPlus),
            det_minus: node(side, SpbsaNode::DetLowerMinus),
        },
    ]
}

/// Push `photon` through the optical chain of the analyzer on `side`, up to
/// (but not including) the diagonal detection.
fn run_chain<const N: usize>(
    s: &StateVector<N>,
    photon: usize,
    side: PhotonSide,
) -> Result<StateVector<N>> {
    use SpbsaNode::*;
    if !s.photon_confined_to(photon, side.port()) {
        return Err(Error::Wiring(format!(
            "photon {photon} not on {} entering the single-photon analyzer",
            side.port()
        )));
    }

    // late-slot cell: polarization becomes the φ/ψ flag (V ⇔ φ-type)
    let mut state = pockels(s, photon, TimeSlot::L)?;
    state = pbs(
        &state,
        &PbsWiring::new(photon, &[side.port()], node(side, LowerBranch), node(side, UpperBranch)),
    )?;
    // early-slot cell: on each branch the early component now rides the
    // opposite polarization of the late one
    state = pockels(&state, photon, TimeSlot::S)?;

    // upper branch carries (V,L) and (H,S): delay the H arm one slot
    state = pbs(
        &state,
        &PbsWiring::new(
            photon,
            &[node(side, UpperBranch)],
            node(side, UpperLong),
            node(side, UpperShort),
        ),
    )?;
    state = delay(&state, photon, node(side, UpperLong), 1)?;
    state = pbs(
        &state,
        &PbsWiring::new(photon, &[node(side, UpperLong)], node(side, UpperOut), node(side, UpperAlt)),
    )?;
    state = pbs(
        &state,
        &PbsWiring::new(photon, &[node(side, UpperShort)], node(side, UpperAlt), node(side, UpperOut)),
    )?;

    // lower branch carries (V,S) and (H,L): delay the V arm instead
    state = pbs(
        &state,
        &PbsWiring::new(
            photon,
            &[node(side, LowerBranch)],
            node(side, LowerShort),
            node(side, LowerLong),
        ),
    )?;
    state = delay(&state, photon, node(side, LowerLong), 1)?;
    state = pbs(
        &state,
        &PbsWiring::new(photon, &[node(side, LowerLong)], node(side, LowerAlt), node(side, LowerOut)),
    )?;
    state = pbs(
        &state,
        &PbsWiring::new(photon, &[node(side, LowerShort)], node(side, LowerOut), node(side, LowerAlt)),
    )?;

    Ok(state)
}

/// Port → Bell-state decode tables for both analyzer sides, derived by
/// simulation rather than assumed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectorMap {
    sides: [BTreeMap<DetectorPort, SingleBell>; 2],
}

impl DetectorMap {
    /// Prepare each single-photon Bell state on each side, run the chain
    /// exhaustively, and record which port fires. Errors if any state fires
    /// more than one port or two states share a port.
    pub fn derive() -> Result<DetectorMap> {
        let mut sides = [BTreeMap::new(), BTreeMap::new()];
        for side in [PhotonSide::A, PhotonSide::B] {
            let table = &mut sides[side.index()];
            for bell in SingleBell::ALL {
                let input = single_bell_state(side, bell);
                let staged = run_chain(&input, 0, side)?;
                let branches = detect_polarization(&staged, 0, &detection_arms(side))?;
                if branches.len() != 1 || (branches[0].probability - 1.0).abs() > 1e-9 {
                    return Err(Error::AmbiguousMapping(format!(
                        "{bell} fired {} ports on side {side:?}",
                        branches.len()
                    )));
                }
                if table.insert(branches[0].outcome, bell).is_some() {
                    return Err(Error::AmbiguousMapping(format!(
                        "two states share a port on side {side:?}"
                    )));
                }
            }
            if table.len() != 4 {
                return Err(Error::AmbiguousMapping("port table is not a bijection".into()));
            }
        }
        Ok(DetectorMap { sides })
    }

    pub fn decode(&self, side: PhotonSide, port: DetectorPort) -> Result<SingleBell> {
        self.sides[side.index()]
            .get(&port)
            .copied()
            .ok_or_else(|| Error::Wiring(format!("no detector at {} {}", port.facing, port.sign.token())))
    }

    /// Short physical name of a port: D1/D2 watch the upper branch (+/−),
    /// D3/D4 the lower one.
    pub fn port_name(port: DetectorPort) -> &'static str {
        let upper = matches!(port.facing, PathLabel::Spbsa(_, SpbsaNode::UpperOut));
        match (upper, port.sign) {
            (true, DiagSign::Plus) => "D1",
            (true, DiagSign::Minus) => "D2",
            (false, DiagSign::Plus) => "D3",
            (false, DiagSign::Minus) => "D4",
        }
    }

    /// Audit table, one `port -> state` row per detector per side.
    pub fn table_text(&self) -> String {
        let mut out = String::new();
        for side in [PhotonSide::A, PhotonSide::B] {
            for (port, bell) in &self.sides[side.index()] {
                out.push_str(&format!(
                    "{:?} {} ({} {}) -> {}\n",
                    side,
                    Self::port_name(*port),
                    port.facing,
                    port.sign.token(),
                    bell
                ));
            }
        }
        out
    }
}

/// One detection outcome of the analyzer.
#[derive(Clone, Debug)]
pub struct DetectionBranch<const N: usize> {
    pub bell: SingleBell,
    pub port: DetectorPort,
    pub probability: f64,
    pub state: StateVector<N>,
}

/// Run the full analyzer on the photon entering `side`'s port and return
/// every detection branch. The measured photon ends parked on its detector
/// path with a definite slot; partner photons are untouched apart from the
/// measurement collapse.
pub fn analyze_photon_branches<const N: usize>(
    s: &StateVector<N>,
    side: PhotonSide,
    map: &DetectorMap,
) -> Result<Vec<DetectionBranch<N>>> {
    let photon = side.index();
    let staged = run_chain(s, photon, side)?;
    let branches = detect_polarization(&staged, photon, &detection_arms(side))?;
    branches
        .into_iter()
        .map(|br| {
            Ok(DetectionBranch {
                bell: map.decode(side, br.outcome)?,
                port: br.outcome,
                probability: br.probability,
                state: br.state,
            })
        })
        .collect()
}

/// Sampled flavor of [`analyze_photon_branches`].
pub fn analyze_photon_sampled<const N: usize>(
    s: &StateVector<N>,
    side: PhotonSide,
    map: &DetectorMap,
    rng: &mut SimRng,
) -> Result<DetectionBranch<N>> {
    let branches = analyze_photon_branches(s, side, map)?;
    let weights: Vec<f64> = branches.iter().map(|b| b.probability).collect();
    let pick = pick_weighted(rng, &weights);
    Ok(branches.into_iter().nth(pick).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::{inner, superpose_renorm, NORM_TOL};

    /// Bell state on side B's port with a parked partner on side A's slot.
    fn bell_with_spectator(bell: SingleBell) -> StateVector<2> {
        let mk = |pol: Polarization, slot: TimeSlot| {
            make_basis_state(CompositeBasis::new([
                PhotonBasis::new(Polarization::H, TimeSlot::S, PathLabel::Idle1),
                PhotonBasis::new(pol, slot, PathLabel::PortB),
            ]))
        };
        let [(s0, (p0, t0)), (s1, (p1, t1))] = bell.terms();
        let w = std::f64::consts::FRAC_1_SQRT_2;
        superpose(&[
            (Complex64::new(s0 * w, 0.0), &mk(p0, t0)),
            (Complex64::new(s1 * w, 0.0), &mk(p1, t1)),
        ])
        .unwrap()
    }

    #[test]
    fn each_bell_state_fires_exactly_one_detector() {
        let map = DetectorMap::derive().unwrap();
        for bell in SingleBell::ALL {
            let input = single_bell_state(PhotonSide::A, bell);
            let branches = analyze_photon_branches(&input, PhotonSide::A, &map).unwrap();
            assert_eq!(branches.len(), 1, "{bell} on side A");
            assert!((branches[0].probability - 1.0).abs() < NORM_TOL);
            assert_eq!(branches[0].bell, bell);
        }
        for bell in SingleBell::ALL {
            let input = bell_with_spectator(bell);
            let branches = analyze_photon_branches(&input, PhotonSide::B, &map).unwrap();
            assert_eq!(branches.len(), 1, "{bell} on side B");
            assert!((branches[0].probability - 1.0).abs() < NORM_TOL);
            assert_eq!(branches[0].bell, bell);
        }
    }

    #[test]
    fn derivation_is_deterministic() {
        assert_eq!(DetectorMap::derive().unwrap(), DetectorMap::derive().unwrap());
    }

    #[test]
    fn frozen_port_convention() {
        // regression pin: upper branch reads φ, lower reads ψ, + before −
        let map = DetectorMap::derive().unwrap();
        let text = map.table_text();
        assert!(text.contains("A D1 (spbsa-a-upper-out +) -> phi+"), "{text}");
        assert!(text.contains("A D2 (spbsa-a-upper-out -) -> phi-"), "{text}");
        assert!(text.contains("A D3 (spbsa-a-lower-out +) -> psi+"), "{text}");
        assert!(text.contains("A D4 (spbsa-a-lower-out -) -> psi-"), "{text}");
    }

    #[test]
    fn slots_merge_before_detection() {
        let map = DetectorMap::derive().unwrap();
        for bell in SingleBell::ALL {
            let input = single_bell_state(PhotonSide::A, bell);
            let branches = analyze_photon_branches(&input, PhotonSide::A, &map).unwrap();
            for br in &branches {
                assert_eq!(br.state.definite_slot(0).unwrap(), TimeSlot::L);
            }
        }
    }

    #[test]
    fn outcome_probabilities_match_squared_overlaps() {
        // independent oracle: for arbitrary inputs the port statistics must
        // equal the squared overlaps with the four basis states
        let mut rng = SimRng::new(2024);
        let map = DetectorMap::derive().unwrap();
        for _ in 0..25 {
            let weights: Vec<Complex64> = (0..4)
                .map(|_| Complex64::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5))
                .collect();
            let basis: Vec<StateVector<1>> = SingleBell::ALL
                .iter()
                .map(|b| single_bell_state(PhotonSide::A, *b))
                .collect();
            let pairs: Vec<(Complex64, &StateVector<1>)> =
                weights.iter().copied().zip(basis.iter()).collect();
            let Ok(input) = superpose_renorm(&pairs) else { continue };

            let mut expected: BTreeMap<SingleBell, f64> = BTreeMap::new();
            for (b, bell_state) in SingleBell::ALL.iter().zip(basis.iter()) {
                expected.insert(*b, inner(bell_state, &input).norm_sqr());
            }
            let branches = analyze_photon_branches(&input, PhotonSide::A, &map).unwrap();
            let mut got: BTreeMap<SingleBell, f64> = BTreeMap::new();
            for br in branches {
                *got.entry(br.bell).or_insert(0.0) += br.probability;
            }
            for b in SingleBell::ALL {
                let want = expected.get(&b).copied().unwrap_or(0.0);
                let have = got.get(&b).copied().unwrap_or(0.0);
                assert!((want - have).abs() < 1e-9, "{b}: {want} vs {have}");
            }
        }
    }
}
