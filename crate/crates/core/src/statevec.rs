//! Sparse complex state vector over labeled photonic and probe basis states.
//!
//! A basis state is the full discrete label set of the system: for each
//! photon a polarization, a time slot and a spatial path, plus two integer
//! probe phase counters standing in for the coherent-beam phases (in units
//! of the cross-Kerr shift). States are immutable; every operation returns
//! a new state. The photon count `N` is a const parameter: the analyzer
//! works on two photons, the protocol harnesses carry one or two spectator
//! photons alongside.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{pick_weighted, SimRng};

/// Amplitudes below this magnitude are dropped from the term map.
pub const PRUNE_TOL: f64 = 1e-12;
/// Allowed deviation of squared norms from 1 for normalized states.
pub const NORM_TOL: f64 = 1e-9;

/// Photon polarization. The ordering `H < V` fixes the canonical basis order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => write!(f, "H"),
            Polarization::V => write!(f, "V"),
        }
    }
}

/// Time slot in units of one time-bin interval. Prepared states use only
/// `S` (0) and `L` (1); interferometer interiors may reach 2.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeSlot(pub i32);

impl TimeSlot {
    pub const S: TimeSlot = TimeSlot(0);
    pub const L: TimeSlot = TimeSlot(1);

    pub fn shifted(self, by: i32) -> Self {
        TimeSlot(self.0 + by)
    }
}

impl fmt::Display for TimeSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which analyzer slot a photon occupies: side A enters port A, side B
/// enters port B. Side A is always photon index 0, side B index 1.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhotonSide {
    A,
    B,
}

impl PhotonSide {
    pub fn index(self) -> usize {
        match self {
            PhotonSide::A => 0,
            PhotonSide::B => 1,
        }
    }

    pub fn port(self) -> PathLabel {
        match self {
            PhotonSide::A => PathLabel::PortA,
            PhotonSide::B => PathLabel::PortB,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            PhotonSide::A => "a",
            PhotonSide::B => "b",
        }
    }
}

/// Vertical position of a QND interaction arm.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArmDir {
    Up,
    Down,
}

/// Spatial modes inside one single-photon Bell analyzer. The `Upper` branch
/// is the V-reflected output of the entry splitter, `Lower` the H-transmitted
/// one. Each branch holds an unbalanced interferometer (`Long` is the delayed
/// arm), a merged output, a dark port (`Alt`) and two detector-facing paths.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpbsaNode {
    UpperBranch,
    LowerBranch,
    UpperLong,
    UpperShort,
    LowerLong,
    LowerShort,
    UpperOut,
    LowerOut,
    UpperAlt,
    LowerAlt,
    DetUpperPlus,
    DetUpperMinus,
    DetLowerPlus,
    DetLowerMinus,
}

impl SpbsaNode {
    fn tag(self) -> &'static str {
        match self {
            SpbsaNode::UpperBranch => "upper",
            SpbsaNode::LowerBranch => "lower",
            SpbsaNode::UpperLong => "upper-long",
            SpbsaNode::UpperShort => "upper-short",
            SpbsaNode::LowerLong => "lower-long",
            SpbsaNode::LowerShort => "lower-short",
            SpbsaNode::UpperOut => "upper-out",
            SpbsaNode::LowerOut => "lower-out",
            SpbsaNode::UpperAlt => "upper-alt",
            SpbsaNode::LowerAlt => "lower-alt",
            SpbsaNode::DetUpperPlus => "det-upper-plus",
            SpbsaNode::DetUpperMinus => "det-upper-minus",
            SpbsaNode::DetLowerPlus => "det-lower-plus",
            SpbsaNode::DetLowerMinus => "det-lower-minus",
        }
    }
}

/// Spatial mode label. Every basis term places each photon on exactly one
/// of these; the set of paths an element accepts is declared per stage.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathLabel {
    /// Analyzer input/output port for side A.
    PortA,
    /// Analyzer input/output port for side B.
    PortB,
    /// Cross-Kerr interaction arm inside a QND, per side.
    QndArm(PhotonSide, ArmDir),
    /// Interior mode of the single-photon Bell analyzer on one side.
    Spbsa(PhotonSide, SpbsaNode),
    /// Parking paths for protocol photons not under analysis.
    Idle1,
    Idle2,
}

impl fmt::Display for PathLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathLabel::PortA => write!(f, "port-a"),
            PathLabel::PortB => write!(f, "port-b"),
            PathLabel::QndArm(side, ArmDir::Up) => write!(f, "qnd-{}-up", side.tag()),
            PathLabel::QndArm(side, ArmDir::Down) => write!(f, "qnd-{}-down", side.tag()),
            PathLabel::Spbsa(side, node) => write!(f, "spbsa-{}-{}", side.tag(), node.tag()),
            PathLabel::Idle1 => write!(f, "idle-1"),
            PathLabel::Idle2 => write!(f, "idle-2"),
        }
    }
}

/// Complete discrete label set of one photon.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhotonBasis {
    pub pol: Polarization,
    pub slot: TimeSlot,
    pub path: PathLabel,
}

impl PhotonBasis {
    pub fn new(pol: Polarization, slot: TimeSlot, path: PathLabel) -> Self {
        Self { pol, slot, path }
    }
}

impl fmt::Display for PhotonBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.pol, self.slot, self.path)
    }
}

/// Integer phase counters of the two coherent probe beams, in units of the
/// single-photon cross-Kerr shift. The protocol keeps them in [-2, 2].
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProbeCounters {
    pub k1: i32,
    pub k2: i32,
}

/// Which probe beam an element talks to.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Probe {
    One,
    Two,
}

impl ProbeCounters {
    pub fn get(&self, probe: Probe) -> i32 {
        match probe {
            Probe::One => self.k1,
            Probe::Two => self.k2,
        }
    }

    pub fn with(&self, probe: Probe, value: i32) -> Self {
        let mut out = *self;
        match probe {
            Probe::One => out.k1 = value,
            Probe::Two => out.k2 = value,
        }
        out
    }
}

/// One composite basis label: `N` photons plus the probe counters.
///
/// The derived lexicographic ordering (photon 0 first, then photon 1, ...,
/// then counters) is the canonical term order used for iteration and
/// serialization.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CompositeBasis<const N: usize> {
    pub photons: [PhotonBasis; N],
    pub probes: ProbeCounters,
}

impl<const N: usize> CompositeBasis<N> {
    pub fn new(photons: [PhotonBasis; N]) -> Self {
        Self { photons, probes: ProbeCounters::default() }
    }

    pub fn photon(&self, index: usize) -> &PhotonBasis {
        &self.photons[index]
    }

    /// Copy with one photon's labels replaced.
    pub fn with_photon(&self, index: usize, photon: PhotonBasis) -> Self {
        let mut out = *self;
        out.photons[index] = photon;
        out
    }

    pub fn with_probes(&self, probes: ProbeCounters) -> Self {
        let mut out = *self;
        out.probes = probes;
        out
    }
}

impl<const N: usize> fmt::Display for CompositeBasis<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for photon in &self.photons {
            write!(f, "{} ; ", photon)?;
        }
        write!(f, "{} {}", self.probes.k1, self.probes.k2)
    }
}

/// Sparse state vector: canonical-ordered map from basis labels to complex
/// amplitudes, with near-zero terms pruned.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<const N: usize> {
    terms: BTreeMap<CompositeBasis<N>, Complex64>,
}

/// One branch of a projective measurement.
#[derive(Clone, Debug)]
pub struct Branch<O, const N: usize> {
    pub outcome: O,
    pub probability: f64,
    pub state: StateVector<N>,
}

impl<const N: usize> StateVector<N> {
    fn from_map(terms: BTreeMap<CompositeBasis<N>, Complex64>) -> Self {
        Self { terms }
    }

    /// Build a state from explicit `(amplitude, basis)` terms, merging
    /// duplicates and pruning. No norm requirement.
    pub fn from_terms(pairs: impl IntoIterator<Item = (Complex64, CompositeBasis<N>)>) -> Result<Self> {
        let mut map: BTreeMap<CompositeBasis<N>, Complex64> = BTreeMap::new();
        for (amp, basis) in pairs {
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(Error::InvalidInput("non-finite amplitude".into()));
            }
            *map.entry(basis).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        map.retain(|_, amp| amp.norm() >= PRUNE_TOL);
        if map.is_empty() {
            return Err(Error::ZeroState);
        }
        Ok(Self::from_map(map))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CompositeBasis<N>, &Complex64)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn amplitude(&self, basis: &CompositeBasis<N>) -> Complex64 {
        self.terms.get(basis).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    fn scaled(&self, factor: f64) -> Self {
        let terms = self.terms.iter().map(|(b, a)| (*b, a * factor)).collect();
        Self::from_map(terms)
    }

    /// True if every term puts the given photon on `path`.
    pub fn photon_confined_to(&self, index: usize, path: PathLabel) -> bool {
        self.terms.keys().all(|b| b.photon(index).path == path)
    }

    /// The single slot occupied by a photon, or an error listing two
    /// differing slots.
    pub fn definite_slot(&self, index: usize) -> Result<TimeSlot> {
        let mut seen: Option<TimeSlot> = None;
        for basis in self.terms.keys() {
            let slot = basis.photon(index).slot;
            match seen {
                None => seen = Some(slot),
                Some(s) if s != slot => return Err(Error::IndefiniteSlot(s.0, slot.0)),
                _ => {}
            }
        }
        Ok(seen.expect("state has at least one term"))
    }

    /// Expand every term through a fallible label map and merge the results.
    /// Used by the optical elements; callers that need the isometry check go
    /// through [`apply_label_map`].
    pub(crate) fn map_terms<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&CompositeBasis<N>, Complex64) -> Result<Vec<(Complex64, CompositeBasis<N>)>>,
    {
        let mut map: BTreeMap<CompositeBasis<N>, Complex64> = BTreeMap::new();
        for (basis, amp) in &self.terms {
            for (factor, out_basis) in f(basis, *amp)? {
                *map.entry(out_basis).or_insert(Complex64::new(0.0, 0.0)) += factor;
            }
        }
        map.retain(|_, amp| amp.norm() >= PRUNE_TOL);
        if map.is_empty() {
            return Err(Error::ZeroState);
        }
        Ok(Self::from_map(map))
    }

    /// Canonical text form: one line per term in canonical order, amplitudes
    /// printed with 12 significant digits.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (basis, amp) in &self.terms {
            out.push_str(&format!("{:+.11e}{:+.11e}i |{}⟩\n", amp.re, amp.im, basis));
        }
        out
    }
}

/// State with exactly one term of amplitude 1.
pub fn make_basis_state<const N: usize>(basis: CompositeBasis<N>) -> StateVector<N> {
    let mut terms = BTreeMap::new();
    terms.insert(basis, Complex64::new(1.0, 0.0));
    StateVector::from_map(terms)
}

/// Literal linear combination of states. Terms below tolerance are pruned;
/// the result must come out normalized (the caller supplies the weights).
pub fn superpose<const N: usize>(pairs: &[(Complex64, &StateVector<N>)]) -> Result<StateVector<N>> {
    let state = combine(pairs)?;
    let norm = state.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NonUnitary { before: 1.0, after: norm });
    }
    Ok(state)
}

/// Linear combination renormalized to 1.
pub fn superpose_renorm<const N: usize>(
    pairs: &[(Complex64, &StateVector<N>)],
) -> Result<StateVector<N>> {
    let state = combine(pairs)?;
    let norm = state.norm();
    Ok(state.scaled(1.0 / norm))
}

fn combine<const N: usize>(pairs: &[(Complex64, &StateVector<N>)]) -> Result<StateVector<N>> {
    if pairs.is_empty() {
        return Err(Error::ZeroState);
    }
    let mut map: BTreeMap<CompositeBasis<N>, Complex64> = BTreeMap::new();
    for (weight, state) in pairs {
        for (basis, amp) in &state.terms {
            *map.entry(*basis).or_insert(Complex64::new(0.0, 0.0)) += weight * amp;
        }
    }
    map.retain(|_, amp| amp.norm() >= PRUNE_TOL);
    if map.is_empty() {
        return Err(Error::ZeroState);
    }
    Ok(StateVector::from_map(map))
}

/// Inner product `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn inner<const N: usize>(a: &StateVector<N>, b: &StateVector<N>) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (basis, amp_a) in &a.terms {
        if let Some(amp_b) = b.terms.get(basis) {
            acc += amp_a.conj() * amp_b;
        }
    }
    acc
}

/// Apply a label map `f` taking each basis label to a superposition of
/// labels. `f` must be an isometry on the state's support; the output norm
/// is checked against the input norm.
pub fn apply_label_map<F, const N: usize>(s: &StateVector<N>, f: F) -> Result<StateVector<N>>
where
    F: Fn(&CompositeBasis<N>) -> Vec<(Complex64, CompositeBasis<N>)>,
{
    let before = s.norm();
    let out = s.map_terms(|basis, amp| {
        Ok(f(basis).into_iter().map(|(factor, b)| (amp * factor, b)).collect())
    })?;
    let after = out.norm();
    if (after - before).abs() > NORM_TOL {
        return Err(Error::NonUnitary { before, after });
    }
    Ok(out)
}

/// Projective measurement over the partition induced by `label_of`.
///
/// Returns every branch with nonzero probability, in canonical outcome
/// order, each collapsed state renormalized. Probabilities sum to 1 for a
/// normalized input.
pub fn measure<O, F, const N: usize>(s: &StateVector<N>, label_of: F) -> Vec<Branch<O, N>>
where
    O: Ord + Clone,
    F: Fn(&CompositeBasis<N>) -> O,
{
    let mut buckets: BTreeMap<O, BTreeMap<CompositeBasis<N>, Complex64>> = BTreeMap::new();
    for (basis, amp) in &s.terms {
        buckets.entry(label_of(basis)).or_default().insert(*basis, *amp);
    }
    buckets
        .into_iter()
        .map(|(outcome, terms)| {
            let probability: f64 = terms.values().map(|a| a.norm_sqr()).sum();
            let collapsed = StateVector::from_map(terms).scaled(1.0 / probability.sqrt());
            Branch { outcome, probability, state: collapsed }
        })
        .collect()
}

/// Draw one branch from an exhaustive branch list using the seeded source.
/// This is the sampling flavor of every measurement in the simulator.
pub fn sample_branch<O: Clone, const N: usize>(
    branches: &[Branch<O, N>],
    rng: &mut SimRng,
) -> Branch<O, N> {
    let weights: Vec<f64> = branches.iter().map(|b| b.probability).collect();
    branches[pick_weighted(rng, &weights)].clone()
}

/// Project out a subset of photons as their own state, in the order given.
///
/// Valid only when the remaining photons and the probe counters carry
/// identical labels in every term (i.e. the state factorizes with the rest
/// fully collapsed, as it is after a completed measurement). The extracted
/// state keeps the original amplitudes, so it is normalized whenever the
/// input was.
pub fn extract_photons<const M: usize, const N: usize>(
    s: &StateVector<N>,
    indices: [usize; M],
) -> Result<StateVector<M>> {
    let rest_of = |b: &CompositeBasis<N>| -> Vec<PhotonBasis> {
        (0..N).filter(|i| !indices.contains(i)).map(|i| *b.photon(i)).collect()
    };
    let first = *s.terms.keys().next().expect("state has at least one term");
    let ref_rest = rest_of(&first);
    for basis in s.terms.keys() {
        if rest_of(basis) != ref_rest || basis.probes != first.probes {
            return Err(Error::AmbiguousResidual(
                "measured photons do not carry definite labels".into(),
            ));
        }
    }
    StateVector::from_terms(
        s.terms
            .iter()
            .map(|(b, amp)| (*amp, CompositeBasis::new(indices.map(|i| *b.photon(i))))),
    )
}
