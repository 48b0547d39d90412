//! Out-of-domain detection by average neighbour distance.
//!
//! A sample's score is the mean true Euclidean distance to its k nearest
//! in-domain support vectors. The accept/reject threshold is calibrated on
//! a validation slice at its equal error rate; a sample is flagged OOD when
//! its score is strictly above the threshold.
//!
//! OOD is the positive class throughout: a false acceptance is an OOD
//! sample scored at or below the threshold, a false rejection an in-domain
//! sample scored above it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knn::{self, KnnError, SupportIndex, Workers};
use crate::protocol::SplitSpec;

#[derive(Debug, Error)]
pub enum OodError {
    #[error("calibration needs scores from both populations ({in_domain} in-domain, {ood} OOD)")]
    EmptyPopulation { in_domain: usize, ood: usize },
    #[error("score {0} is not a finite non-negative distance")]
    BadScore(f64),
    #[error(transparent)]
    Knn(#[from] KnnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodScore {
    pub sample_id: String,
    pub mean_distance: f64,
}

/// Mean distance from `vector` to its `k` nearest support vectors.
pub fn score(index: &SupportIndex, vector: &[f32], k: usize) -> Result<f64, KnnError> {
    Ok(knn::query(index, vector, k)?.mean_distance())
}

/// Scores every row of the row-major `queries`, in input order.
pub fn score_batch(
    index: &SupportIndex,
    queries: &[f32],
    k: usize,
    workers: Workers,
) -> Result<Vec<f64>, KnnError> {
    Ok(knn::query_batch(index, queries, k, workers)?
        .iter()
        .map(|n| n.mean_distance())
        .collect())
}

/// Error rates of threshold `t`: (FAR, FRR) with FAR the fraction of OOD
/// scores `<= t` and FRR the fraction of in-domain scores `> t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub far: f64,
    pub frr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationCounts {
    pub in_domain: usize,
    pub ood: usize,
}

/// EER-calibrated decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodCalibration {
    #[serde(with = "extended_float")]
    pub threshold: f64,
    pub k: usize,
    pub eer: f64,
    pub rates: ErrorRates,
    pub counts: ValidationCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_provenance: Option<SplitSpec>,
}

impl OodCalibration {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Candidate thresholds: `-inf`, the midpoints between consecutive distinct
/// pooled scores, and `+inf`, ascending.
pub fn candidate_thresholds(in_domain: &[f64], ood: &[f64]) -> Vec<f64> {
    let mut pooled: Vec<f64> = in_domain.iter().chain(ood).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();
    let mut out = Vec::with_capacity(pooled.len() + 1);
    out.push(f64::NEG_INFINITY);
    out.extend(pooled.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    out.push(f64::INFINITY);
    out
}

fn check_scores(scores: &[f64]) -> Result<(), OodError> {
    match scores.iter().find(|s| !s.is_finite() || **s < 0.0) {
        Some(s) => Err(OodError::BadScore(*s)),
        None => Ok(()),
    }
}

/// Picks the candidate threshold minimising |FAR - FRR| (smallest threshold
/// on ties) and reports the EER as (FAR + FRR) / 2 there.
pub fn calibrate(in_domain: &[f64], ood: &[f64], k: usize) -> Result<OodCalibration, OodError> {
    if in_domain.is_empty() || ood.is_empty() {
        return Err(OodError::EmptyPopulation {
            in_domain: in_domain.len(),
            ood: ood.len(),
        });
    }
    check_scores(in_domain)?;
    check_scores(ood)?;
    let mut ins = in_domain.to_vec();
    let mut outs = ood.to_vec();
    ins.sort_by(f64::total_cmp);
    outs.sort_by(f64::total_cmp);
    let (n_in, n_ood) = (ins.len() as u128, outs.len() as u128);

    // Compared as integers: |fa / n_ood - fr / n_in| ~ |fa * n_in - fr * n_ood|.
    let mut best: Option<(u128, f64, u128, u128)> = None;
    for t in candidate_thresholds(&ins, &outs) {
        let fa = outs.partition_point(|s| *s <= t) as u128;
        let fr = (ins.len() - ins.partition_point(|s| *s <= t)) as u128;
        let gap = (fa * n_in).abs_diff(fr * n_ood);
        if best.is_none_or(|b| gap < b.0) {
            best = Some((gap, t, fa, fr));
        }
    }
    let (_, threshold, fa, fr) = best.expect("at least two candidates");
    let rates = ErrorRates {
        far: fa as f64 / n_ood as f64,
        frr: fr as f64 / n_in as f64,
    };
    Ok(OodCalibration {
        threshold,
        k,
        eer: (rates.far + rates.frr) / 2.0,
        rates,
        counts: ValidationCounts {
            in_domain: ins.len(),
            ood: outs.len(),
        },
        spec_provenance: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodDecision {
    pub sample_id: String,
    pub is_ood: bool,
    pub mean_distance: f64,
    /// `mean_distance - threshold`.
    pub margin: f64,
}

pub fn decide(calibration: &OodCalibration, score: &OodScore) -> OodDecision {
    OodDecision {
        sample_id: score.sample_id.clone(),
        is_ood: score.mean_distance > calibration.threshold,
        mean_distance: score.mean_distance,
        margin: score.mean_distance - calibration.threshold,
    }
}

/// Serializes infinities as the strings `"inf"` / `"-inf"`.
mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            F(f64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::F(v) => Ok(v),
            Raw::S(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::S(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
            Raw::S(s) => Err(serde::de::Error::custom(format!("bad threshold `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::build_index;
    use crate::store::{build_corpus, EmbeddingSet, LabelTarget, SampleRecord};

    /// Brute-force (FAR, FRR) by counting.
    fn rates(ins: &[f64], oods: &[f64], t: f64) -> (f64, f64) {
        let far = oods.iter().filter(|s| **s <= t).count() as f64 / oods.len() as f64;
        let frr = ins.iter().filter(|s| **s > t).count() as f64 / ins.len() as f64;
        (far, frr)
    }

    #[test]
    fn separated_populations() {
        let c = calibrate(&[1.0, 2.0], &[10.0, 11.0], 21).unwrap();
        assert_eq!(c.threshold, 6.0);
        assert_eq!(c.eer, 0.0);
    }

    #[test]
    fn confounded_populations() {
        let c = calibrate(&[5.0], &[5.0], 1).unwrap();
        assert_eq!(c.eer, 0.5);
        assert_eq!(c.threshold, f64::NEG_INFINITY);
    }

    #[test]
    fn interleaved_populations() {
        let ins = [1.0, 3.0];
        let oods = [2.0, 4.0];
        let cands = candidate_thresholds(&ins, &oods);
        assert_eq!(cands.len(), 5);
        let gaps: Vec<f64> = cands
            .iter()
            .map(|t| {
                let (a, r) = rates(&ins, &oods, *t);
                (a - r).abs()
            })
            .collect();
        assert_eq!(gaps, [1.0, 0.5, 0.0, 0.5, 1.0]);
        let c = calibrate(&ins, &oods, 5).unwrap();
        assert_eq!(c.threshold, 2.5);
        assert_eq!((c.rates.far, c.rates.frr), (0.5, 0.5));
        assert_eq!(c.eer, 0.5);
    }

    #[test]
    fn empty_lists_are_rejected() {
        assert!(matches!(
            calibrate(&[], &[1.0], 1),
            Err(OodError::EmptyPopulation { .. })
        ));
        assert!(matches!(
            calibrate(&[1.0], &[], 1),
            Err(OodError::EmptyPopulation { .. })
        ));
        assert!(matches!(
            calibrate(&[f64::NAN], &[1.0], 1),
            Err(OodError::BadScore(_))
        ));
    }

    #[test]
    fn boundary_is_not_ood() {
        let cal = calibrate(&[1.0, 2.0], &[10.0, 11.0], 21).unwrap();
        let at = |d: f64| {
            decide(
                &cal,
                &OodScore {
                    sample_id: "x".into(),
                    mean_distance: d,
                },
            )
        };
        assert!(!at(6.0).is_ood);
        assert!(at(6.0 + 1e-12).is_ood);
        assert_eq!(at(7.0).margin, 1.0);
    }

    #[test]
    fn calibration_json_round_trip() {
        let cal = calibrate(&[5.0], &[5.0], 1).unwrap();
        let json = cal.to_json();
        assert!(json.contains("\"-inf\""));
        assert_eq!(OodCalibration::from_json(&json).unwrap(), cal);
        let cal = calibrate(&[1.0, 2.0], &[10.0], 3).unwrap();
        assert_eq!(OodCalibration::from_json(&cal.to_json()).unwrap(), cal);
    }

    fn plane_index(points: &[[f32; 2]]) -> SupportIndex {
        let recs = (0..points.len())
            .map(|i| SampleRecord::new(format!("p{i}"), "d", "c"))
            .collect();
        let emb = EmbeddingSet::from_rows(
            "t",
            0,
            &points.iter().map(|p| p.to_vec()).collect::<Vec<_>>(),
        )
        .unwrap();
        build_index(
            &build_corpus(recs, emb, LabelTarget::checkpoint()).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn scoring_geometry() {
        let idx = plane_index(&[[3.0, 0.0], [0.0, 4.0], [10.0, 10.0]]);
        assert_eq!(score(&idx, &[0.0, 0.0], 2).unwrap(), 3.5);
        assert_eq!(score(&idx, &[3.0, 0.0], 1).unwrap(), 0.0);
        let shuffled = plane_index(&[[10.0, 10.0], [0.0, 4.0], [3.0, 0.0]]);
        assert_eq!(score(&shuffled, &[0.0, 0.0], 2).unwrap(), 3.5);
        assert_eq!(
            score_batch(&idx, &[0.0, 0.0, 3.0, 0.0], 2, Workers::Single).unwrap()[0],
            3.5
        );
    }
}
