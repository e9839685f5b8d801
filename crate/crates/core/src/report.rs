//! Verification sweeps and protocol trial runners, with serializable row
//! types for the report emitters.
//!
//! Sweeps are data-parallel across labels or trials when the `parallel`
//! feature is enabled (the default); the sequential variants are always
//! available and are what the feature-off build uses. Row order is by label
//! or trial index either way, never by completion order.

use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;
use crate::hbsa::{
    classify, prepare_hyper_bell, table2_transcription, verify_table2, HyperBellLabel,
};
use crate::protocols::{
    swap_branches, teleport_branches, SwapBranch, TeleportBranch, TwoQubitPhotonState,
};
use crate::qnd::{polarization_bsa, BellLabelP, Faults};
use crate::rng::{pick_weighted, SimRng};
use crate::spbsa::DetectorMap;

/// Result of classifying one prepared hyperentangled Bell state over every
/// exhaustive measurement branch.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyRow {
    pub label: String,
    pub shift1: String,
    pub shift2: String,
    pub relabeled: String,
    pub detections: Vec<String>,
    pub classified: String,
    pub pass: bool,
}

fn verify_one(label: HyperBellLabel, map: &DetectorMap, faults: Faults) -> VerifyRow {
    let state = prepare_hyper_bell(label);
    match classify(&state, map, faults) {
        Ok((decoded, leaves)) => {
            let first = &leaves[0].record;
            VerifyRow {
                label: label.to_string(),
                shift1: first.step1.shift1.token().into(),
                shift2: first.step1.shift2.token().into(),
                relabeled: first.step1.relabeled.to_string(),
                detections: leaves
                    .iter()
                    .map(|l| format!("{} {}", l.record.det_a, l.record.det_b))
                    .collect(),
                classified: decoded.to_string(),
                pass: decoded == label,
            }
        }
        Err(e) => VerifyRow {
            label: label.to_string(),
            shift1: "-".into(),
            shift2: "-".into(),
            relabeled: "-".into(),
            detections: Vec::new(),
            classified: format!("error: {e}"),
            pass: false,
        },
    }
}

/// Classify all 16 prepared states exhaustively, one row per label.
pub fn verify_rows(map: &DetectorMap, faults: Faults) -> Vec<VerifyRow> {
    #[cfg(feature = "parallel")]
    {
        HyperBellLabel::all().into_par_iter().map(|l| verify_one(l, map, faults)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        verify_rows_seq(map, faults)
    }
}

/// Sequential flavor of [`verify_rows`].
pub fn verify_rows_seq(map: &DetectorMap, faults: Faults) -> Vec<VerifyRow> {
    HyperBellLabel::all().into_iter().map(|l| verify_one(l, map, faults)).collect()
}

/// One row of the step-1 readout table: simulated against transcribed.
#[derive(Clone, Debug, Serialize)]
pub struct Table1Row {
    pub original: String,
    pub shift1: String,
    pub shift2: String,
    pub new_state: String,
    pub transcribed: String,
    pub pass: bool,
}

/// Reconstruct the step-1 table by simulation and diff it against the
/// transcription (optionally corrupted, for fault-injection tests).
pub fn table1_rows(faults: Faults, corrupt_transcription: bool) -> Vec<Table1Row> {
    use crate::optics::HomodyneOutcome::{Two, Zero};
    let mut transcription = [
        (BellLabelP::PhiPlus, Zero, Zero, BellLabelP::PhiPlus),
        (BellLabelP::PhiMinus, Zero, Two, BellLabelP::PsiPlus),
        (BellLabelP::PsiPlus, Two, Zero, BellLabelP::PhiMinus),
        (BellLabelP::PsiMinus, Two, Two, BellLabelP::PsiMinus),
    ];
    if corrupt_transcription {
        transcription.swap(1, 2);
        transcription[1].0 = BellLabelP::PhiMinus;
        transcription[2].0 = BellLabelP::PsiPlus;
    }
    transcription
        .iter()
        .map(|(label, t_s1, t_s2, t_new)| {
            let state = prepare_hyper_bell(HyperBellLabel {
                pol: *label,
                tb: crate::hbsa::BellLabelT::PhiPlus,
            });
            match polarization_bsa(&state, faults) {
                Ok((record, _)) => {
                    let pass = record.shift1 == *t_s1
                        && record.shift2 == *t_s2
                        && record.relabeled == *t_new;
                    Table1Row {
                        original: label.to_string(),
                        shift1: record.shift1.token().into(),
                        shift2: record.shift2.token().into(),
                        new_state: record.relabeled.to_string(),
                        transcribed: format!("{} {} {}", t_s1.token(), t_s2.token(), t_new),
                        pass,
                    }
                }
                Err(e) => Table1Row {
                    original: label.to_string(),
                    shift1: "-".into(),
                    shift2: "-".into(),
                    new_state: format!("error: {e}"),
                    transcribed: format!("{} {} {}", t_s1.token(), t_s2.token(), t_new),
                    pass: false,
                },
            }
        })
        .collect()
}

/// One row of the detection-group table: a (relabeled ⊗ time-bin) product
/// with its group id and simulated detection support.
#[derive(Clone, Debug, Serialize)]
pub struct Table2Row {
    pub group: u8,
    pub new_pol: String,
    pub time_bin: String,
    pub detections: String,
    pub pass: bool,
}

/// Reconstruct the detection-group table against the transcription,
/// 16 member rows.
pub fn table2_rows(map: &DetectorMap, corrupt_transcription: bool) -> Vec<Table2Row> {
    let reconstruction = verify_table2(map);
    let mut rows = Vec::with_capacity(16);
    for (gi, group) in table2_transcription().iter().enumerate() {
        let mut detections: Vec<String> =
            group.detections.iter().map(|(a, b)| format!("{a} {b}")).collect();
        if corrupt_transcription && gi == 0 {
            detections.swap(0, 1);
        }
        let joined = detections.join(" | ");
        for (pol, tb) in group.members {
            let pass = reconstruction.is_ok() && !(corrupt_transcription && gi == 0);
            rows.push(Table2Row {
                group: group.id,
                new_pol: pol.to_string(),
                time_bin: tb.to_string(),
                detections: joined.clone(),
                pass,
            });
        }
    }
    rows
}

/// One teleportation branch outcome.
#[derive(Clone, Debug, Serialize)]
pub struct TeleportRow {
    pub trial: u64,
    pub branch: usize,
    pub label: String,
    pub probability: f64,
    pub fidelity: f64,
    pub fidelity_uncorrected: f64,
}

fn teleport_rows_for_trial(
    trial: u64,
    root: &SimRng,
    coeffs: Option<TwoQubitPhotonState>,
    exhaustive: bool,
    map: &DetectorMap,
    faults: Faults,
) -> Result<Vec<TeleportRow>> {
    let mut rng = root.fork(trial);
    let input = coeffs.unwrap_or_else(|| TwoQubitPhotonState::random(&mut rng));
    let branches = teleport_branches(&input, map, faults)?;
    let row = |i: usize, br: &TeleportBranch| TeleportRow {
        trial,
        branch: i,
        label: br.label.to_string(),
        probability: br.probability,
        fidelity: br.fidelity,
        fidelity_uncorrected: br.fidelity_uncorrected,
    };
    if exhaustive {
        Ok(branches.iter().enumerate().map(|(i, br)| row(i, br)).collect())
    } else {
        let weights: Vec<f64> = branches.iter().map(|b| b.probability).collect();
        let pick = pick_weighted(&mut rng, &weights);
        Ok(vec![row(pick, &branches[pick])])
    }
}

/// Run `trials` teleportation trials. Explicit coefficients apply to every
/// trial; otherwise each trial draws a fresh random payload from its forked
/// stream. Exhaustive mode lists every branch per trial.
pub fn teleport_rows(
    seed: u64,
    trials: u64,
    coeffs: Option<TwoQubitPhotonState>,
    exhaustive: bool,
    map: &DetectorMap,
    faults: Faults,
) -> Result<Vec<TeleportRow>> {
    #[cfg(feature = "parallel")]
    {
        let root = SimRng::new(seed);
        let nested: Vec<Vec<TeleportRow>> = (0..trials)
            .into_par_iter()
            .map(|t| teleport_rows_for_trial(t, &root, coeffs, exhaustive, map, faults))
            .collect::<Result<_>>()?;
        Ok(nested.into_iter().flatten().collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        teleport_rows_seq(seed, trials, coeffs, exhaustive, map, faults)
    }
}

/// Sequential flavor of [`teleport_rows`].
pub fn teleport_rows_seq(
    seed: u64,
    trials: u64,
    coeffs: Option<TwoQubitPhotonState>,
    exhaustive: bool,
    map: &DetectorMap,
    faults: Faults,
) -> Result<Vec<TeleportRow>> {
    let root = SimRng::new(seed);
    let mut out = Vec::new();
    for t in 0..trials {
        out.extend(teleport_rows_for_trial(t, &root, coeffs, exhaustive, map, faults)?);
    }
    Ok(out)
}

/// One entanglement-swapping outcome row.
#[derive(Clone, Debug, Serialize)]
pub struct SwapRow {
    pub branch: u64,
    pub charlie_label: String,
    pub ab_label: String,
    #[serde(rename = "match")]
    pub matches: bool,
    pub probability: f64,
}

/// Exhaustive swap report: the 64 measurement leaves aggregated into the 16
/// Charlie outcomes, in label order.
pub fn swap_rows_exhaustive(map: &DetectorMap, faults: Faults) -> Result<Vec<SwapRow>> {
    let leaves = swap_branches(map, faults)?;
    let mut by_label: std::collections::BTreeMap<HyperBellLabel, (HyperBellLabel, bool, f64)> =
        Default::default();
    for leaf in &leaves {
        let entry = by_label.entry(leaf.charlie).or_insert((leaf.ab, true, 0.0));
        entry.1 &= leaf.matches && entry.0 == leaf.ab;
        entry.2 += leaf.probability;
    }
    Ok(by_label
        .into_iter()
        .enumerate()
        .map(|(i, (charlie, (ab, matches, probability)))| SwapRow {
            branch: i as u64,
            charlie_label: charlie.to_string(),
            ab_label: ab.to_string(),
            matches,
            probability,
        })
        .collect())
}

/// Sampled swap report: one drawn branch per trial.
pub fn swap_rows_sampled(
    seed: u64,
    trials: u64,
    map: &DetectorMap,
    faults: Faults,
) -> Result<Vec<SwapRow>> {
    let root = SimRng::new(seed);
    let run_one = |t: u64| -> Result<SwapRow> {
        let mut rng = root.fork(t);
        let branch: SwapBranch = crate::protocols::swap_sampled(map, faults, &mut rng)?;
        Ok(SwapRow {
            branch: t,
            charlie_label: branch.charlie.to_string(),
            ab_label: branch.ab.to_string(),
            matches: branch.matches,
            probability: branch.probability,
        })
    };
    #[cfg(feature = "parallel")]
    {
        (0..trials).into_par_iter().map(run_one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(run_one).collect()
    }
}
