//! Elemental optical operations: polarizing beam splitters, half-wave
//! plates, Pockels cells, delay lines, cross-Kerr phase taggers, homodyne
//! readout of the probe counters, and diagonal-basis detection.
//!
//! Every element is a pure function from state to state (or to measurement
//! branches) built on the label-map machinery in [`crate::statevec`], so
//! norm preservation is checked on each application.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevec::{
    measure, Branch, PathLabel, PhotonBasis, Polarization, Probe, StateVector, TimeSlot,
};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Routing of one polarizing beam splitter port for one photon: terms on an
/// input path are transmitted to `out_h` if horizontal and reflected to
/// `out_v` if vertical. Terms on other paths pass through untouched, which
/// lets a full two-port splitter be written as two wirings.
#[derive(Clone, Debug)]
pub struct PbsWiring {
    pub photon: usize,
    pub inputs: Vec<PathLabel>,
    pub out_h: PathLabel,
    pub out_v: PathLabel,
}

impl PbsWiring {
    pub fn new(photon: usize, inputs: &[PathLabel], out_h: PathLabel, out_v: PathLabel) -> Self {
        assert_ne!(out_h, out_v, "splitter outputs must differ");
        assert!(
            !inputs.contains(&out_h) && !inputs.contains(&out_v),
            "splitter inputs must be disjoint from outputs"
        );
        Self { photon, inputs: inputs.to_vec(), out_h, out_v }
    }
}

/// Route one photon through a polarizing beam splitter. Terms already on an
/// output path stay put: two wirings that share an output recombine modes
/// the way the physical two-port element does.
pub fn pbs<const N: usize>(s: &StateVector<N>, w: &PbsWiring) -> Result<StateVector<N>> {
    s.map_terms(|basis, amp| {
        let ph = *basis.photon(w.photon);
        if !w.inputs.contains(&ph.path) {
            return Ok(vec![(amp, *basis)]);
        }
        let out = match ph.pol {
            Polarization::H => w.out_h,
            Polarization::V => w.out_v,
        };
        Ok(vec![(amp, basis.with_photon(w.photon, PhotonBasis { path: out, ..ph }))])
    })
}

/// Hadamard on one photon's polarization: `|H⟩ → (|H⟩+|V⟩)/√2`,
/// `|V⟩ → (|H⟩−|V⟩)/√2`. Slot and path untouched.
pub fn hwp<const N: usize>(s: &StateVector<N>, photon: usize) -> Result<StateVector<N>> {
    hwp_matrix(s, photon, [[1.0, 1.0], [1.0, -1.0]])
}

/// Wave plate with the column signs swapped. Still unitary, but wrong for
/// the protocol; used only as a fault-injection hook in verification tests.
#[doc(hidden)]
pub fn hwp_sign_flipped<const N: usize>(s: &StateVector<N>, photon: usize) -> Result<StateVector<N>> {
    hwp_matrix(s, photon, [[1.0, 1.0], [-1.0, 1.0]])
}

fn hwp_matrix<const N: usize>(
    s: &StateVector<N>,
    photon: usize,
    m: [[f64; 2]; 2],
) -> Result<StateVector<N>> {
    s.map_terms(|basis, amp| {
        let ph = *basis.photon(photon);
        let col = match ph.pol {
            Polarization::H => 0,
            Polarization::V => 1,
        };
        Ok(vec![
            (
                amp * re(FRAC_1_SQRT_2 * m[0][col]),
                basis.with_photon(photon, PhotonBasis { pol: Polarization::H, ..ph }),
            ),
            (
                amp * re(FRAC_1_SQRT_2 * m[1][col]),
                basis.with_photon(photon, PhotonBasis { pol: Polarization::V, ..ph }),
            ),
        ])
    })
}

/// Pockels cell: bit-flips the photon's polarization on terms whose slot
/// matches `active_slot`; other terms pass unchanged.
pub fn pockels<const N: usize>(
    s: &StateVector<N>,
    photon: usize,
    active_slot: TimeSlot,
) -> Result<StateVector<N>> {
    s.map_terms(|basis, amp| {
        let ph = *basis.photon(photon);
        let out = if ph.slot == active_slot {
            basis.with_photon(photon, PhotonBasis { pol: ph.pol.flipped(), ..ph })
        } else {
            *basis
        };
        Ok(vec![(amp, out)])
    })
}

/// Add `shift` time slots to the photon on terms where it occupies `path`.
pub fn delay<const N: usize>(
    s: &StateVector<N>,
    photon: usize,
    path: PathLabel,
    shift: i32,
) -> Result<StateVector<N>> {
    s.map_terms(|basis, amp| {
        let ph = *basis.photon(photon);
        let out = if ph.path == path {
            basis.with_photon(photon, PhotonBasis { slot: ph.slot.shifted(shift), ..ph })
        } else {
            *basis
        };
        Ok(vec![(amp, out)])
    })
}

/// Cross-Kerr tagger: per term, advance the probe counter by `sign` for each
/// photon occupying `watched_path`. Photonic labels are untouched. Counters
/// must stay in [-2, 2]; leaving that range means the circuit is mis-wired.
pub fn kerr_tag<const N: usize>(
    s: &StateVector<N>,
    watched_path: PathLabel,
    probe: Probe,
    sign: i32,
) -> Result<StateVector<N>> {
    s.map_terms(|basis, amp| {
        let count = basis.photons.iter().filter(|p| p.path == watched_path).count() as i32;
        let k = basis.probes.get(probe) + sign * count;
        if k.abs() > 2 {
            return Err(Error::CounterOverflow(k));
        }
        Ok(vec![(amp, basis.with_probes(basis.probes.with(probe, k)))])
    })
}

/// Magnitude class of a probe phase shift as read by the X-quadrature
/// measurement: zero shift or |2θ|. The sign is never exposed.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HomodyneOutcome {
    Zero,
    Two,
}

impl HomodyneOutcome {
    pub fn token(self) -> &'static str {
        match self {
            HomodyneOutcome::Zero => "0",
            HomodyneOutcome::Two => "2",
        }
    }
}

/// Read out one probe beam. Terms are partitioned by |k|; a `Two` outcome
/// keeps the k = +2 and k = -2 branches coherently. After the readout the
/// counter is reset to zero, with the classical feed-forward correction
/// equalizing the phase of the two sign branches, so the photonic state is
/// exactly the pre-interaction one.
pub fn homodyne<const N: usize>(
    s: &StateVector<N>,
    probe: Probe,
) -> Result<Vec<Branch<HomodyneOutcome, N>>> {
    for basis in s.terms().map(|(b, _)| b) {
        let k = basis.probes.get(probe);
        if k != 0 && k.abs() != 2 {
            return Err(Error::UnexpectedCounter(k));
        }
    }
    let branches = measure(s, |b| {
        if b.probes.get(probe) == 0 { HomodyneOutcome::Zero } else { HomodyneOutcome::Two }
    });
    branches
        .into_iter()
        .map(|br| {
            // feed-forward: both sign branches carry equal phase, so the
            // reset is amplitude-preserving
            let state = br.state.map_terms(|basis, amp| {
                Ok(vec![(amp, basis.with_probes(basis.probes.with(probe, 0)))])
            })?;
            Ok(Branch { outcome: br.outcome, probability: br.probability, state })
        })
        .collect()
}

/// Diagonal measurement sign at a detector pair: `Plus` is the port behind
/// the transmitted (H) output of the analysis splitter, i.e. the |+⟩ result.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagSign {
    Plus,
    Minus,
}

impl DiagSign {
    pub fn token(self) -> &'static str {
        match self {
            DiagSign::Plus => "+",
            DiagSign::Minus => "-",
        }
    }
}

/// A detector port: the detector-facing path it watches plus the diagonal
/// outcome it registers.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DetectorPort {
    pub facing: PathLabel,
    pub sign: DiagSign,
}

/// One diagonal-analysis station: a wave plate and splitter taking `input`
/// to a detector pair.
#[derive(Clone, Debug)]
pub struct DetectionArm {
    pub input: PathLabel,
    pub det_plus: PathLabel,
    pub det_minus: PathLabel,
}

/// Measure one photon in the diagonal polarization basis across the declared
/// detector-facing paths. The photon must be on one of those paths in every
/// term and must have a definite arrival slot.
pub fn detect_polarization<const N: usize>(
    s: &StateVector<N>,
    photon: usize,
    arms: &[DetectionArm],
) -> Result<Vec<Branch<DetectorPort, N>>> {
    s.definite_slot(photon)?;
    for (basis, _) in s.terms() {
        let path = basis.photon(photon).path;
        if !arms.iter().any(|a| a.input == path) {
            return Err(Error::Wiring(format!(
                "photon {} is on {} which faces no detector",
                photon, path
            )));
        }
    }
    // the diagonal station is a Hadamard plate followed by a splitter onto
    // the detector pair, so |+⟩ lands on det_plus and |−⟩ on det_minus
    let mut staged = hwp(s, photon)?;
    for arm in arms {
        staged = pbs(&staged, &PbsWiring::new(photon, &[arm.input], arm.det_plus, arm.det_minus))?;
    }
    let port_of = |path: PathLabel| -> DetectorPort {
        for arm in arms {
            if path == arm.det_plus {
                return DetectorPort { facing: arm.input, sign: DiagSign::Plus };
            }
            if path == arm.det_minus {
                return DetectorPort { facing: arm.input, sign: DiagSign::Minus };
            }
        }
        unreachable!("detector path {path} not in wiring");
    };
    Ok(measure(&staged, |b| port_of(b.photon(photon).path)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::{
        inner, make_basis_state, superpose, ArmDir, CompositeBasis, PhotonSide, ProbeCounters,
        NORM_TOL,
    };

    fn basis1(pol: Polarization, slot: TimeSlot, path: PathLabel) -> CompositeBasis<1> {
        CompositeBasis::new([PhotonBasis::new(pol, slot, path)])
    }

    fn basis2(pol_a: Polarization, pol_b: Polarization) -> CompositeBasis<2> {
        CompositeBasis::new([
            PhotonBasis::new(pol_a, TimeSlot::S, PathLabel::PortA),
            PhotonBasis::new(pol_b, TimeSlot::S, PathLabel::PortB),
        ])
    }

    fn bell(pairs: [(f64, (Polarization, Polarization)); 2]) -> StateVector<2> {
        let a = make_basis_state(basis2(pairs[0].1 .0, pairs[0].1 .1));
        let b = make_basis_state(basis2(pairs[1].1 .0, pairs[1].1 .1));
        superpose(&[(re(FRAC_1_SQRT_2 * pairs[0].0), &a), (re(FRAC_1_SQRT_2 * pairs[1].0), &b)])
            .unwrap()
    }

    use Polarization::{H, V};

    #[test]
    fn pbs_routes_h_and_v() {
        let up = PathLabel::QndArm(PhotonSide::A, ArmDir::Up);
        let down = PathLabel::QndArm(PhotonSide::A, ArmDir::Down);
        let w = PbsWiring::new(0, &[PathLabel::PortA], down, up);

        let h = make_basis_state(basis1(H, TimeSlot::S, PathLabel::PortA));
        let out = pbs(&h, &w).unwrap();
        assert_eq!(out.terms().next().unwrap().0.photon(0).path, down);

        let v = make_basis_state(basis1(V, TimeSlot::S, PathLabel::PortA));
        let out = pbs(&v, &w).unwrap();
        assert_eq!(out.terms().next().unwrap().0.photon(0).path, up);
    }

    #[test]
    fn pbs_splits_superposition_preserving_norm() {
        let up = PathLabel::QndArm(PhotonSide::A, ArmDir::Up);
        let down = PathLabel::QndArm(PhotonSide::A, ArmDir::Down);
        let w = PbsWiring::new(0, &[PathLabel::PortA], down, up);
        let h = make_basis_state(basis1(H, TimeSlot::S, PathLabel::PortA));
        let v = make_basis_state(basis1(V, TimeSlot::S, PathLabel::PortA));
        let plus = superpose(&[(re(FRAC_1_SQRT_2), &h), (re(FRAC_1_SQRT_2), &v)]).unwrap();
        let out = pbs(&plus, &w).unwrap();
        assert_eq!(out.term_count(), 2);
        assert!((out.norm() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn pbs_passes_through_undeclared_paths() {
        let up = PathLabel::QndArm(PhotonSide::A, ArmDir::Up);
        let down = PathLabel::QndArm(PhotonSide::A, ArmDir::Down);
        let w = PbsWiring::new(0, &[PathLabel::PortA], down, up);
        let elsewhere = make_basis_state(basis1(H, TimeSlot::S, PathLabel::Idle1));
        let out = pbs(&elsewhere, &w).unwrap();
        assert_eq!(out.canonical_text(), elsewhere.canonical_text());
    }

    #[test]
    fn pbs_merges_two_arms_onto_one_output() {
        let long = PathLabel::Spbsa(PhotonSide::A, crate::statevec::SpbsaNode::UpperLong);
        let short = PathLabel::Spbsa(PhotonSide::A, crate::statevec::SpbsaNode::UpperShort);
        let out = PathLabel::Spbsa(PhotonSide::A, crate::statevec::SpbsaNode::UpperOut);
        let alt = PathLabel::Spbsa(PhotonSide::A, crate::statevec::SpbsaNode::UpperAlt);
        let h_long = make_basis_state(basis1(H, TimeSlot::L, long));
        let v_short = make_basis_state(basis1(V, TimeSlot::L, short));
        let s = superpose(&[(re(FRAC_1_SQRT_2), &h_long), (re(FRAC_1_SQRT_2), &v_short)]).unwrap();
        let merged = pbs(
            &pbs(&s, &PbsWiring::new(0, &[long], out, alt)).unwrap(),
            &PbsWiring::new(0, &[short], alt, out),
        )
        .unwrap();
        assert!(merged.photon_confined_to(0, out));
        assert!((merged.norm() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn hwp_maps_h_to_plus() {
        let h = make_basis_state(basis1(H, TimeSlot::S, PathLabel::PortA));
        let out = hwp(&h, 0).unwrap();
        let plus = superpose(&[
            (re(FRAC_1_SQRT_2), &make_basis_state(basis1(H, TimeSlot::S, PathLabel::PortA))),
            (re(FRAC_1_SQRT_2), &make_basis_state(basis1(V, TimeSlot::S, PathLabel::PortA))),
        ])
        .unwrap();
        assert!((inner(&out, &plus).norm() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn hwp_is_an_involution() {
        let s = bell([(1.0, (H, V)), (-1.0, (V, H))]);
        let once = hwp(&s, 0).unwrap();
        let twice = hwp(&once, 0).unwrap();
        assert!((inner(&twice, &s).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hwp_on_both_photons_swaps_phi_minus_and_psi_plus() {
        let phi_minus = bell([(1.0, (H, H)), (-1.0, (V, V))]);
        let psi_plus = bell([(1.0, (H, V)), (1.0, (V, H))]);
        let out = hwp(&hwp(&phi_minus, 0).unwrap(), 1).unwrap();
        assert!((inner(&out, &psi_plus).norm() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn pockels_flips_only_active_slot() {
        let late = make_basis_state(basis1(H, TimeSlot::L, PathLabel::PortA));
        let out = pockels(&late, 0, TimeSlot::L).unwrap();
        assert_eq!(out.terms().next().unwrap().0.photon(0).pol, V);

        let early = make_basis_state(basis1(H, TimeSlot::S, PathLabel::PortA));
        let out = pockels(&early, 0, TimeSlot::L).unwrap();
        assert_eq!(out.terms().next().unwrap().0.photon(0).pol, H);
    }

    #[test]
    fn pockels_twice_is_identity() {
        let s = bell([(1.0, (H, V)), (1.0, (V, H))]);
        let twice = pockels(&pockels(&s, 0, TimeSlot::S).unwrap(), 0, TimeSlot::S).unwrap();
        assert_eq!(s.canonical_text(), twice.canonical_text());
    }

    #[test]
    fn pockels_cells_on_disjoint_slots_commute() {
        let early = make_basis_state(basis1(H, TimeSlot::S, PathLabel::PortA));
        let late = make_basis_state(basis1(V, TimeSlot::L, PathLabel::PortA));
        let s = superpose(&[(re(FRAC_1_SQRT_2), &early), (re(FRAC_1_SQRT_2), &late)]).unwrap();
        let ls = pockels(&pockels(&s, 0, TimeSlot::L).unwrap(), 0, TimeSlot::S).unwrap();
        let sl = pockels(&pockels(&s, 0, TimeSlot::S).unwrap(), 0, TimeSlot::L).unwrap();
        assert_eq!(ls.canonical_text(), sl.canonical_text());
    }

    #[test]
    fn delay_shifts_slot_on_matching_path() {
        let s = make_basis_state(basis1(H, TimeSlot::S, PathLabel::PortA));
        let out = delay(&s, 0, PathLabel::PortA, 1).unwrap();
        assert_eq!(out.terms().next().unwrap().0.photon(0).slot, TimeSlot::L);

        let untouched = delay(&s, 0, PathLabel::PortB, 1).unwrap();
        assert_eq!(s.canonical_text(), untouched.canonical_text());

        let back = delay(&out, 0, PathLabel::PortA, -1).unwrap();
        assert_eq!(s.canonical_text(), back.canonical_text());
    }

    #[test]
    fn kerr_counts_two_photons_on_one_arm() {
        let up = PathLabel::QndArm(PhotonSide::A, ArmDir::Up);
        let both_up = make_basis_state(CompositeBasis::new([
            PhotonBasis::new(V, TimeSlot::S, up),
            PhotonBasis::new(V, TimeSlot::S, up),
        ]));
        let out = kerr_tag(&both_up, up, Probe::One, 1).unwrap();
        assert_eq!(out.terms().next().unwrap().0.probes.k1, 2);
    }

    #[test]
    fn kerr_ignores_empty_watched_path() {
        let s = make_basis_state(basis2(H, H));
        let out = kerr_tag(&s, PathLabel::QndArm(PhotonSide::A, ArmDir::Up), Probe::One, 1).unwrap();
        assert_eq!(out.terms().next().unwrap().0.probes, ProbeCounters::default());
    }

    #[test]
    fn kerr_overflow_detected() {
        let up = PathLabel::QndArm(PhotonSide::A, ArmDir::Up);
        let basis = CompositeBasis::new([PhotonBasis::new(V, TimeSlot::S, up)])
            .with_probes(ProbeCounters { k1: 2, k2: 0 });
        let s = make_basis_state(basis);
        assert!(matches!(kerr_tag(&s, up, Probe::One, 1), Err(Error::CounterOverflow(3))));
    }

    #[test]
    fn homodyne_zero_counters_is_identity() {
        let s = bell([(1.0, (H, H)), (1.0, (V, V))]);
        let branches = homodyne(&s, Probe::One).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].outcome, HomodyneOutcome::Zero);
        assert_eq!(branches[0].state.canonical_text(), s.canonical_text());
    }

    #[test]
    fn homodyne_magnitude_class_keeps_sign_branches() {
        // terms with k1 = +2 and k1 = -2 stay coherent under the Two outcome
        let plus2 = basis2(H, V).with_probes(ProbeCounters { k1: -2, k2: 0 });
        let minus2 = basis2(V, H).with_probes(ProbeCounters { k1: 2, k2: 0 });
        let s = superpose(&[
            (re(FRAC_1_SQRT_2), &make_basis_state(plus2)),
            (re(FRAC_1_SQRT_2), &make_basis_state(minus2)),
        ])
        .unwrap();
        let branches = homodyne(&s, Probe::One).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].outcome, HomodyneOutcome::Two);
        let restored = bell([(1.0, (H, V)), (1.0, (V, H))]);
        assert!((inner(&branches[0].state, &restored).norm() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn homodyne_rejects_odd_counter() {
        let basis = basis2(H, V).with_probes(ProbeCounters { k1: 1, k2: 0 });
        let s = make_basis_state(basis);
        assert!(matches!(homodyne(&s, Probe::One), Err(Error::UnexpectedCounter(1))));
    }

    #[test]
    fn detect_plus_state_is_deterministic() {
        let facing = PathLabel::Spbsa(PhotonSide::A, crate::statevec::SpbsaNode::UpperOut);
        let arm = DetectionArm {
            input: facing,
            det_plus: PathLabel::Spbsa(PhotonSide::A, crate::statevec::SpbsaNode::DetUpperPlus),
            det_minus: PathLabel::Spbsa(PhotonSide::A, crate::statevec::SpbsaNode::DetUpperMinus),
        };
        let h = make_basis_state(basis1(H, TimeSlot::L, facing));
        let v = make_basis_state(basis1(V, TimeSlot::L, facing));
        let plus = superpose(&[(re(FRAC_1_SQRT_2), &h), (re(FRAC_1_SQRT_2), &v)]).unwrap();
        let branches = detect_polarization(&plus, 0, std::slice::from_ref(&arm)).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].outcome, DetectorPort { facing, sign: DiagSign::Plus });
        assert!((branches[0].probability - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn detect_h_splits_evenly() {
        let facing = PathLabel::Spbsa(PhotonSide::A, crate::statevec::SpbsaNode::UpperOut);
        let arm = DetectionArm {
            input: facing,
            det_plus: PathLabel::Spbsa(PhotonSide::A, crate::statevec::SpbsaNode::DetUpperPlus),
            det_minus: PathLabel::Spbsa(PhotonSide::A, crate::statevec::SpbsaNode::DetUpperMinus),
        };
        let h = make_basis_state(basis1(H, TimeSlot::L, facing));
        let branches = detect_polarization(&h, 0, std::slice::from_ref(&arm)).unwrap();
        assert_eq!(branches.len(), 2);
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < NORM_TOL);
        for br in &branches {
            assert!((br.probability - 0.5).abs() < NORM_TOL);
        }
    }

    #[test]
    fn detect_requires_definite_slot() {
        let facing = PathLabel::Spbsa(PhotonSide::A, crate::statevec::SpbsaNode::UpperOut);
        let arm = DetectionArm {
            input: facing,
            det_plus: PathLabel::Spbsa(PhotonSide::A, crate::statevec::SpbsaNode::DetUpperPlus),
            det_minus: PathLabel::Spbsa(PhotonSide::A, crate::statevec::SpbsaNode::DetUpperMinus),
        };
        let early = make_basis_state(basis1(H, TimeSlot::S, facing));
        let late = make_basis_state(basis1(V, TimeSlot::L, facing));
        let s = superpose(&[(re(FRAC_1_SQRT_2), &early), (re(FRAC_1_SQRT_2), &late)]).unwrap();
        assert!(matches!(
            detect_polarization(&s, 0, std::slice::from_ref(&arm)),
            Err(Error::IndefiniteSlot(_, _))
        ));
    }
}
