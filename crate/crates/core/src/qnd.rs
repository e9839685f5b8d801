//! Step 1 of the analysis: two cross-Kerr quantum nondemolition rounds that
//! read the parity and then the relative phase of the two-photon
//! polarization state, without destroying the photons or the entanglement.
//!
//! Each round splits both photons on polarizing beam splitters, tags the
//! four interaction arms onto one probe beam (+1 on the up arms, -1 on the
//! down arms, so `|VH⟩` accumulates +2 and `|HV⟩` -2), merges the photons
//! back onto their ports and reads the probe. Between the rounds two wave
//! plates transfer the phase information onto the parity.

use crate::error::{Error, Result};
use crate::optics::{homodyne, hwp, hwp_sign_flipped, kerr_tag, pbs, HomodyneOutcome, PbsWiring};
use crate::rng::SimRng;
use crate::statevec::{ArmDir, Branch, PathLabel, PhotonSide, Probe, StateVector};

/// The four polarization Bell states.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BellLabelP {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabelP {
    pub const ALL: [BellLabelP; 4] =
        [BellLabelP::PhiPlus, BellLabelP::PhiMinus, BellLabelP::PsiPlus, BellLabelP::PsiMinus];

    /// The two `(sign, (pol_A, pol_B))` terms of the state, each with
    /// weight 1/√2.
    pub fn terms(self) -> [(f64, (crate::statevec::Polarization, crate::statevec::Polarization)); 2]
    {
        use crate::statevec::Polarization::{H, V};
        match self {
            BellLabelP::PhiPlus => [(1.0, (H, H)), (1.0, (V, V))],
            BellLabelP::PhiMinus => [(1.0, (H, H)), (-1.0, (V, V))],
            BellLabelP::PsiPlus => [(1.0, (H, V)), (1.0, (V, H))],
            BellLabelP::PsiMinus => [(1.0, (H, V)), (-1.0, (V, H))],
        }
    }

    /// The state the analyzer leaves behind (the "new state" column): the
    /// wave plates swap Φ− and Ψ+ and fix the other two. An involution.
    pub fn relabeled(self) -> BellLabelP {
        match self {
            BellLabelP::PhiPlus => BellLabelP::PhiPlus,
            BellLabelP::PhiMinus => BellLabelP::PsiPlus,
            BellLabelP::PsiPlus => BellLabelP::PhiMinus,
            BellLabelP::PsiMinus => BellLabelP::PsiMinus,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            BellLabelP::PhiPlus => "PhiP+",
            BellLabelP::PhiMinus => "PhiP-",
            BellLabelP::PsiPlus => "PsiP+",
            BellLabelP::PsiMinus => "PsiP-",
        }
    }
}

impl std::fmt::Display for BellLabelP {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// Decode the two probe readings back to the original Bell state.
pub fn decode_shifts(shift1: HomodyneOutcome, shift2: HomodyneOutcome) -> BellLabelP {
    use HomodyneOutcome::{Two, Zero};
    match (shift1, shift2) {
        (Zero, Zero) => BellLabelP::PhiPlus,
        (Zero, Two) => BellLabelP::PhiMinus,
        (Two, Zero) => BellLabelP::PsiPlus,
        (Two, Two) => BellLabelP::PsiMinus,
    }
}

/// Outcome of step 1: the two probe readings, the decoded original state
/// and the state left on the photons.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Step1Record {
    pub shift1: HomodyneOutcome,
    pub shift2: HomodyneOutcome,
    pub original: BellLabelP,
    pub relabeled: BellLabelP,
}

impl Step1Record {
    fn from_shifts(shift1: HomodyneOutcome, shift2: HomodyneOutcome) -> Self {
        let original = decode_shifts(shift1, shift2);
        Step1Record { shift1, shift2, original, relabeled: original.relabeled() }
    }
}

/// Fault-injection switches for verification tests. All off in normal runs.
#[derive(Copy, Clone, Debug, Default)]
pub struct Faults {
    /// Replace photon B's phase-round wave plate with a sign-flipped one.
    /// (Flipping both plates is invisible: the flipped plate is Z·H and
    /// Z⊗Z fixes every Bell state up to phase.)
    pub hwp_sign_flip: bool,
}

fn check_on_ports<const N: usize>(s: &StateVector<N>, stage: &str) -> Result<()> {
    if !s.photon_confined_to(0, PathLabel::PortA) || !s.photon_confined_to(1, PathLabel::PortB) {
        return Err(Error::Wiring(format!("photons not on ports A/B entering {stage}")));
    }
    Ok(())
}

/// One QND round on the given probe: split, tag all four arms, merge, read.
fn qnd_round<const N: usize>(
    s: &StateVector<N>,
    probe: Probe,
    stage: &str,
) -> Result<Vec<Branch<HomodyneOutcome, N>>> {
    use ArmDir::{Down, Up};
    use PhotonSide::{A, B};
    check_on_ports(s, stage)?;

    let a_up = PathLabel::QndArm(A, Up);
    let a_down = PathLabel::QndArm(A, Down);
    let b_up = PathLabel::QndArm(B, Up);
    let b_down = PathLabel::QndArm(B, Down);

    // entry splitter: V of photon A and H of photon B meet on the up arms
    let mut state = pbs(s, &PbsWiring::new(0, &[PathLabel::PortA], a_down, a_up))?;
    state = pbs(&state, &PbsWiring::new(1, &[PathLabel::PortB], b_up, b_down))?;

    for (arm, sign) in [(a_up, 1), (b_up, 1), (a_down, -1), (b_down, -1)] {
        state = kerr_tag(&state, arm, probe, sign)?;
    }

    // exit splitter returns one photon per port
    state = pbs(&state, &PbsWiring::new(0, &[a_down], PathLabel::PortA, PathLabel::PortB))?;
    state = pbs(&state, &PbsWiring::new(0, &[a_up], PathLabel::PortB, PathLabel::PortA))?;
    state = pbs(&state, &PbsWiring::new(1, &[b_up], PathLabel::PortB, PathLabel::PortA))?;
    state = pbs(&state, &PbsWiring::new(1, &[b_down], PathLabel::PortA, PathLabel::PortB))?;

    let branches = homodyne(&state, probe)?;
    for br in &branches {
        check_on_ports(&br.state, "qnd exit")?;
    }
    Ok(branches)
}

/// Parity round: reads probe 1. `Zero` means the polarization part lies in
/// span{Φ±}, `Two` means span{Ψ±}. Photons and state are preserved.
pub fn parity_qnd<const N: usize>(s: &StateVector<N>) -> Result<Vec<Branch<HomodyneOutcome, N>>> {
    qnd_round(s, Probe::One, "parity qnd")
}

/// Phase round: wave plates on both photons, then the same structure on
/// probe 2. `Zero` now means the original state had even phase.
pub fn phase_qnd<const N: usize>(
    s: &StateVector<N>,
    faults: Faults,
) -> Result<Vec<Branch<HomodyneOutcome, N>>> {
    let plate_b = if faults.hwp_sign_flip { hwp_sign_flipped } else { hwp };
    let state = plate_b(&hwp(s, 0)?, 1)?;
    qnd_round(&state, Probe::Two, "phase qnd")
}

/// One step-1 outcome branch.
#[derive(Clone, Debug)]
pub struct Step1Branch<const N: usize> {
    pub record: Step1Record,
    pub probability: f64,
    pub state: StateVector<N>,
}

/// Run both rounds and decode. Returns every outcome branch; a definite
/// polarization Bell input produces exactly one.
pub fn polarization_bsa_branches<const N: usize>(
    s: &StateVector<N>,
    faults: Faults,
) -> Result<Vec<Step1Branch<N>>> {
    let mut out = Vec::new();
    for parity in parity_qnd(s)? {
        for phase in phase_qnd(&parity.state, faults)? {
            out.push(Step1Branch {
                record: Step1Record::from_shifts(parity.outcome, phase.outcome),
                probability: parity.probability * phase.probability,
                state: phase.state,
            });
        }
    }
    Ok(out)
}

/// Step 1 for a state whose polarization part is a definite Bell state:
/// demands a single exhaustive branch and returns it. Anything else (a
/// non-Bell polarization input) produces disagreeing branches and errors.
pub fn polarization_bsa<const N: usize>(
    s: &StateVector<N>,
    faults: Faults,
) -> Result<(Step1Record, StateVector<N>)> {
    let branches = polarization_bsa_branches(s, faults)?;
    if branches.len() != 1 {
        let seen: Vec<String> =
            branches.iter().map(|b| b.record.original.token().to_string()).collect();
        return Err(Error::InconsistentBranch(format!(
            "polarization readout split into {} branches: {}",
            branches.len(),
            seen.join(", ")
        )));
    }
    let only = branches.into_iter().next().unwrap();
    Ok((only.record, only.state))
}

/// Sampled flavor: enumerate the branches exactly, then draw one with the
/// seeded source. Distribution-identical to sampling each readout in turn.
pub fn polarization_bsa_sampled<const N: usize>(
    s: &StateVector<N>,
    faults: Faults,
    rng: &mut SimRng,
) -> Result<(Step1Record, StateVector<N>)> {
    let branches = polarization_bsa_branches(s, faults)?;
    let weights: Vec<f64> = branches.iter().map(|b| b.probability).collect();
    let pick = crate::rng::pick_weighted(rng, &weights);
    let chosen = branches.into_iter().nth(pick).unwrap();
    Ok((chosen.record, chosen.state))
}
