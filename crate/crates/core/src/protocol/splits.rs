use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{ProtocolError, Role, SplitAssignment};
use crate::rng::SplitRng;
use crate::store::{Corpus, LabelField, LabelTarget, StoreError};

/// In-domain support/validation/test ratios of the OOD protocol.
pub const DEFAULT_OOD_RATIOS: [f64; 3] = [0.8, 0.1, 0.1];

/// Checkpoints withheld per group in leave-N-out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoldoutCount {
    Count(usize),
    /// Half of the group's checkpoints, rounded down, at least one.
    Half,
}

impl HoldoutCount {
    fn resolve(self, available: usize) -> usize {
        match self {
            HoldoutCount::Count(n) => n,
            HoldoutCount::Half => (available / 2).max(1),
        }
    }
}

impl fmt::Display for HoldoutCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HoldoutCount::Count(n) => write!(f, "{n}"),
            HoldoutCount::Half => f.write_str("half"),
        }
    }
}

impl FromStr for HoldoutCount {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "half" {
            return Ok(HoldoutCount::Half);
        }
        s.parse().map(HoldoutCount::Count).map_err(|_| {
            ProtocolError::Params(format!(
                "holdout count `{s}` is neither an integer nor `half`"
            ))
        })
    }
}

impl Serialize for HoldoutCount {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            HoldoutCount::Count(n) => s.serialize_u64(*n as u64),
            HoldoutCount::Half => s.serialize_str("half"),
        }
    }
}

impl<'de> Deserialize<'de> for HoldoutCount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(usize),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(HoldoutCount::Count(n)),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    RatioSplit {
        ratios: Vec<f64>,
        stratify_by: LabelTarget,
    },
    PerClassCount {
        n_per_class: usize,
    },
    OodHoldout {
        per_dataset: usize,
        in_domain_ratios: Vec<f64>,
    },
    LeaveNOut {
        group_by: LabelField,
        n: HoldoutCount,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    #[serde(flatten)]
    pub kind: SplitKind,
    pub seed: u64,
}

impl SplitSpec {
    /// Runs the split this spec describes.
    pub fn apply(&self, corpus: &Corpus) -> Result<SplitAssignment, ProtocolError> {
        match &self.kind {
            SplitKind::RatioSplit {
                ratios,
                stratify_by,
            } => ratio_split(corpus, ratios, self.seed, stratify_by),
            SplitKind::PerClassCount { n_per_class } => {
                per_class_support(corpus, *n_per_class, self.seed)
            }
            SplitKind::OodHoldout {
                per_dataset,
                in_domain_ratios,
            } => ood_holdout(corpus, *per_dataset, in_domain_ratios, self.seed),
            SplitKind::LeaveNOut { group_by, n } => leave_n_out(corpus, *group_by, *n, self.seed),
        }
    }
}

/// Bucket sizes for `n` items under `ratios` by largest remainder. Floors
/// are taken first; leftover items go to the largest fractional parts,
/// earlier bucket first on ties (within 1e-9).
pub fn largest_remainder(n: usize, ratios: &[f64]) -> Vec<usize> {
    const TIE: f64 = 1e-9;
    let quotas: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| (q + TIE).floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<(usize, f64)> = quotas
        .iter()
        .zip(&sizes)
        .map(|(q, s)| (q - *s as f64).max(0.0))
        .enumerate()
        .collect();
    order.sort_by(|a, b| {
        if (a.1 - b.1).abs() <= TIE {
            a.0.cmp(&b.0)
        } else {
            b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal)
        }
    });
    for (bucket, _) in order.iter().take(n.saturating_sub(assigned)) {
        sizes[*bucket] += 1;
    }
    sizes
}

fn bucket_roles(ratios: &[f64]) -> Result<&'static [Role], ProtocolError> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(ProtocolError::Params(format!(
            "ratios {ratios:?} must be non-negative"
        )));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(ProtocolError::Params(format!(
            "ratios {ratios:?} sum to {sum}, not 1"
        )));
    }
    match ratios.len() {
        1 => Ok(&[Role::Support]),
        2 => Ok(&[Role::Support, Role::Test]),
        3 => Ok(&[Role::Support, Role::Validation, Role::Test]),
        n => Err(ProtocolError::Params(format!(
            "{n} ratio buckets, expected 1 to 3"
        ))),
    }
}

/// Shuffles `members` and hands out consecutive runs per bucket.
fn assign_stratum(
    name: &str,
    mut members: Vec<usize>,
    ratios: &[f64],
    buckets: &[Role],
    rng: &mut SplitRng,
    roles: &mut [Role],
) -> Result<(), ProtocolError> {
    let needed = ratios.iter().filter(|r| **r > 0.0).count();
    if members.len() < needed {
        return Err(ProtocolError::Stratum {
            stratum: name.to_string(),
            size: members.len(),
            needed,
        });
    }
    rng.shuffle(&mut members);
    let sizes = largest_remainder(members.len(), ratios);
    let mut it = members.into_iter();
    for (role, size) in buckets.iter().zip(sizes) {
        for row in it.by_ref().take(size) {
            roles[row] = *role;
        }
    }
    Ok(())
}

fn strata(
    corpus: &Corpus,
    by: &LabelTarget,
    rows: &[usize],
) -> Result<BTreeMap<String, Vec<usize>>, ProtocolError> {
    let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut missing = Vec::new();
    for &i in rows {
        match by.label(corpus.record(i)) {
            Some(l) => out.entry(l).or_default().push(i),
            None => missing.push(corpus.record(i).sample_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(StoreError::Label {
            target: by.describe(),
            sample_ids: missing,
        }
        .into());
    }
    Ok(out)
}

fn ratio_rows(
    corpus: &Corpus,
    rows: &[usize],
    ratios: &[f64],
    by: &LabelTarget,
    rng: &mut SplitRng,
    roles: &mut [Role],
) -> Result<(), ProtocolError> {
    let buckets = bucket_roles(ratios)?;
    for (name, members) in strata(corpus, by, rows)? {
        assign_stratum(&name, members, ratios, buckets, rng, roles)?;
    }
    Ok(())
}

/// Stratified split with 1 to 3 buckets: support, then (validation,) test.
pub fn ratio_split(
    corpus: &Corpus,
    ratios: &[f64],
    seed: u64,
    stratify_by: &LabelTarget,
) -> Result<SplitAssignment, ProtocolError> {
    let mut rng = SplitRng::new(seed);
    let mut roles = vec![Role::Excluded; corpus.len()];
    let all: Vec<usize> = (0..corpus.len()).collect();
    ratio_rows(corpus, &all, ratios, stratify_by, &mut rng, &mut roles)?;
    let spec = SplitSpec {
        kind: SplitKind::RatioSplit {
            ratios: ratios.to_vec(),
            stratify_by: stratify_by.clone(),
        },
        seed,
    };
    Ok(SplitAssignment::new(spec, corpus, roles, Vec::new()))
}

/// Up to `n_per_class` random samples of every class go to support, the
/// rest to test.
pub fn per_class_support(
    corpus: &Corpus,
    n_per_class: usize,
    seed: u64,
) -> Result<SplitAssignment, ProtocolError> {
    if n_per_class == 0 {
        return Err(ProtocolError::Range(
            "samples per class must be at least 1".into(),
        ));
    }
    let mut rng = SplitRng::new(seed);
    let mut roles = vec![Role::Test; corpus.len()];
    for mut members in corpus.rows_by_class() {
        rng.shuffle(&mut members);
        for &row in members.iter().take(n_per_class) {
            roles[row] = Role::Support;
        }
    }
    let spec = SplitSpec {
        kind: SplitKind::PerClassCount { n_per_class },
        seed,
    };
    Ok(SplitAssignment::new(spec, corpus, roles, Vec::new()))
}

/// Checkpoint labels grouped by `field`. A checkpoint seen under several
/// group values belongs to the lexicographically first one. Rows lacking
/// the field are returned separately.
fn checkpoints_by(
    corpus: &Corpus,
    field: LabelField,
) -> (BTreeMap<String, Vec<String>>, Vec<usize>) {
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    let mut missing = Vec::new();
    for (i, r) in corpus.records().iter().enumerate() {
        match field.value(r) {
            Some(g) => {
                let e = owner.entry(r.checkpoint.as_str()).or_insert(g);
                if g < *e {
                    *e = g;
                }
            }
            None => missing.push(i),
        }
    }
    let mut groups: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (ckpt, g) in owner {
        groups
            .entry(g.to_string())
            .or_default()
            .insert(ckpt.to_string());
    }
    let groups = groups
        .into_iter()
        .map(|(g, s)| (g, s.into_iter().collect()))
        .collect();
    (groups, missing)
}

/// Withholds `per_dataset` random checkpoints of every dataset as
/// out-of-domain.
///
/// Of each dataset's withheld checkpoints the first half (rounded down)
/// goes wholly to validation and the rest wholly to test. The in-domain
/// remainder is split by `in_domain_ratios` (support, validation, test),
/// stratified by checkpoint.
pub fn ood_holdout(
    corpus: &Corpus,
    per_dataset: usize,
    in_domain_ratios: &[f64],
    seed: u64,
) -> Result<SplitAssignment, ProtocolError> {
    let mut rng = SplitRng::new(seed);
    let (by_dataset, _) = checkpoints_by(corpus, LabelField::Dataset);
    let mut ood_role: BTreeMap<String, Role> = BTreeMap::new();
    if per_dataset > 0 {
        for (dataset, mut ckpts) in by_dataset {
            if ckpts.len() <= per_dataset {
                return Err(ProtocolError::Stratum {
                    stratum: dataset,
                    size: ckpts.len(),
                    needed: per_dataset + 1,
                });
            }
            rng.shuffle(&mut ckpts);
            for (i, c) in ckpts.into_iter().take(per_dataset).enumerate() {
                let role = if i < per_dataset / 2 {
                    Role::Validation
                } else {
                    Role::Test
                };
                ood_role.insert(c, role);
            }
        }
    }

    let mut roles = vec![Role::Excluded; corpus.len()];
    let mut in_domain = Vec::new();
    for (i, r) in corpus.records().iter().enumerate() {
        match ood_role.get(&r.checkpoint) {
            Some(role) => roles[i] = *role,
            None => in_domain.push(i),
        }
    }
    ratio_rows(
        corpus,
        &in_domain,
        in_domain_ratios,
        &LabelTarget::checkpoint(),
        &mut rng,
        &mut roles,
    )?;

    let spec = SplitSpec {
        kind: SplitKind::OodHoldout {
            per_dataset,
            in_domain_ratios: in_domain_ratios.to_vec(),
        },
        seed,
    };
    Ok(SplitAssignment::new(
        spec,
        corpus,
        roles,
        ood_role.into_keys().collect(),
    ))
}

/// Moves `n` random checkpoints of every `group_by` group wholly to test;
/// everything else is support. Rows without a `group_by` value are
/// excluded.
pub fn leave_n_out(
    corpus: &Corpus,
    group_by: LabelField,
    n: HoldoutCount,
    seed: u64,
) -> Result<SplitAssignment, ProtocolError> {
    if n == HoldoutCount::Count(0) {
        return Err(ProtocolError::Range(
            "leave-0-out leaves an empty test set".into(),
        ));
    }
    let mut rng = SplitRng::new(seed);
    let (groups, missing) = checkpoints_by(corpus, group_by);
    let mut held = BTreeSet::new();
    for (group, mut ckpts) in groups {
        let take = n.resolve(ckpts.len());
        if ckpts.len() <= take {
            return Err(ProtocolError::Stratum {
                stratum: group,
                size: ckpts.len(),
                needed: take + 1,
            });
        }
        rng.shuffle(&mut ckpts);
        held.extend(ckpts.into_iter().take(take));
    }
    let mut roles: Vec<Role> = corpus
        .records()
        .iter()
        .map(|r| {
            if held.contains(&r.checkpoint) {
                Role::Test
            } else {
                Role::Support
            }
        })
        .collect();
    for i in missing {
        roles[i] = Role::Excluded;
    }
    let spec = SplitSpec {
        kind: SplitKind::LeaveNOut { group_by, n },
        seed,
    };
    Ok(SplitAssignment::new(
        spec,
        corpus,
        roles,
        held.into_iter().collect(),
    ))
}

/// A row of the support-size sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportSetting {
    /// At most this many support samples per class.
    PerClass(usize),
    /// Stratified support fraction; the rest is test.
    Ratio(f64),
}

impl SupportSetting {
    pub fn default_grid() -> Vec<SupportSetting> {
        vec![
            SupportSetting::PerClass(10),
            SupportSetting::PerClass(50),
            SupportSetting::PerClass(100),
            SupportSetting::PerClass(500),
            SupportSetting::Ratio(0.8),
        ]
    }

    pub fn split(&self, corpus: &Corpus, seed: u64) -> Result<SplitAssignment, ProtocolError> {
        match *self {
            SupportSetting::PerClass(n) => per_class_support(corpus, n, seed),
            SupportSetting::Ratio(r) => {
                if !(r > 0.0 && r < 1.0) {
                    return Err(ProtocolError::Range(format!(
                        "support ratio {r} not in (0, 1)"
                    )));
                }
                ratio_split(corpus, &[r, 1.0 - r], seed, corpus.target())
            }
        }
    }
}

impl Eq for SupportSetting {}

impl Ord for SupportSetting {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (SupportSetting::PerClass(a), SupportSetting::PerClass(b)) => a.cmp(b),
            (SupportSetting::Ratio(a), SupportSetting::Ratio(b)) => a.total_cmp(b),
            (SupportSetting::PerClass(_), SupportSetting::Ratio(_)) => Ordering::Less,
            (SupportSetting::Ratio(_), SupportSetting::PerClass(_)) => Ordering::Greater,
        }
    }
}

impl PartialOrd for SupportSetting {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SupportSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupportSetting::PerClass(n) => write!(f, "{n}"),
            SupportSetting::Ratio(r) => write!(f, "ratio:{r}"),
        }
    }
}

/// `"50"` is fifty per class; `"ratio:0.8"` or a bare fraction like `"0.8"`
/// is a stratified ratio.
impl FromStr for SupportSetting {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ProtocolError::Params(format!("support setting `{s}`"));
        if let Some(r) = s.strip_prefix("ratio:") {
            return r.parse().map(SupportSetting::Ratio).map_err(|_| bad());
        }
        if let Ok(n) = s.parse::<usize>() {
            return Ok(SupportSetting::PerClass(n));
        }
        match s.parse::<f64>() {
            Ok(r) if r > 0.0 && r < 1.0 => Ok(SupportSetting::Ratio(r)),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{build_corpus, EmbeddingSet, SampleRecord};

    /// `spec` lists (dataset, checkpoint, samples).
    fn corpus(spec: &[(&str, &str, usize)]) -> Corpus {
        let mut recs = Vec::new();
        for (d, c, n) in spec {
            for i in 0..*n {
                recs.push(SampleRecord::new(format!("{d}/{c}/{i}"), *d, *c));
            }
        }
        let emb = EmbeddingSet::new("t", 0, 1, vec![0.0; recs.len()]).unwrap();
        build_corpus(recs, emb, LabelTarget::checkpoint()).unwrap()
    }

    #[test]
    fn largest_remainder_cases() {
        assert_eq!(largest_remainder(10, &[0.8, 0.2]), [8, 2]);
        assert_eq!(largest_remainder(5, &[0.8, 0.1, 0.1]), [4, 1, 0]);
        assert_eq!(largest_remainder(7, &[0.8, 0.1, 0.1]), [5, 1, 1]);
        assert_eq!(largest_remainder(3, &[1.0 / 3.0; 3]), [1, 1, 1]);
        assert_eq!(largest_remainder(0, &[0.5, 0.5]), [0, 0]);
    }

    #[test]
    fn eighty_twenty_one_class() {
        let c = corpus(&[("d", "a", 10)]);
        let s = ratio_split(&c, &[0.8, 0.2], 5, &LabelTarget::checkpoint()).unwrap();
        assert_eq!(s.count(Role::Support), 8);
        assert_eq!(s.count(Role::Test), 2);
        assert_eq!(
            s,
            ratio_split(&c, &[0.8, 0.2], 5, &LabelTarget::checkpoint()).unwrap()
        );
    }

    #[test]
    fn five_samples_three_buckets() {
        let c = corpus(&[("d", "a", 5)]);
        let s = ratio_split(&c, &[0.8, 0.1, 0.1], 1, &LabelTarget::checkpoint()).unwrap();
        assert_eq!(
            [
                s.count(Role::Support),
                s.count(Role::Validation),
                s.count(Role::Test)
            ],
            [4, 1, 0]
        );
    }

    #[test]
    fn small_stratum_is_named() {
        let c = corpus(&[("d", "a", 10), ("d", "tiny", 2)]);
        match ratio_split(&c, &[0.8, 0.1, 0.1], 1, &LabelTarget::checkpoint()) {
            Err(ProtocolError::Stratum {
                stratum,
                size: 2,
                needed: 3,
            }) => assert_eq!(stratum, "tiny"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_ratios() {
        let c = corpus(&[("d", "a", 10)]);
        assert!(ratio_split(&c, &[0.8, 0.3], 1, &LabelTarget::checkpoint()).is_err());
        assert!(ratio_split(&c, &[0.25; 4], 1, &LabelTarget::checkpoint()).is_err());
    }

    #[test]
    fn per_class_saturates() {
        let c = corpus(&[("d", "a", 10), ("d", "b", 80)]);
        let s = per_class_support(&c, 50, 3).unwrap();
        let sup = s.rows(Role::Support);
        assert_eq!(sup.iter().filter(|&&r| c.label(r) == 0).count(), 10);
        assert_eq!(sup.iter().filter(|&&r| c.label(r) == 1).count(), 50);
        assert_eq!(s.count(Role::Test), 30);
        assert!(per_class_support(&c, 0, 3).is_err());
    }

    fn five_datasets() -> Corpus {
        let mut spec = Vec::new();
        let names: Vec<String> = (0..5)
            .flat_map(|d| (0..7).map(move |c| format!("ds{d}-ck{c}")))
            .collect();
        for (i, n) in names.iter().enumerate() {
            let ds = ["ASV19", "ASV21", "ASV5", "MLAAD", "TIMIT"][i / 7];
            spec.push((ds, n.as_str(), 20usize));
        }
        let owned: Vec<(String, String, usize)> = spec
            .iter()
            .map(|(d, c, n)| (d.to_string(), c.to_string(), *n))
            .collect();
        let refs: Vec<(&str, &str, usize)> = owned
            .iter()
            .map(|(d, c, n)| (d.as_str(), c.as_str(), *n))
            .collect();
        corpus(&refs)
    }

    #[test]
    fn ood_holdout_four_per_dataset() {
        let c = five_datasets();
        let s = ood_holdout(&c, 4, &DEFAULT_OOD_RATIOS, 11).unwrap();
        assert_eq!(s.held_out.len(), 20);
        let mut val = BTreeSet::new();
        let mut test = BTreeSet::new();
        for (i, r) in c.records().iter().enumerate() {
            if s.is_held_out(&r.checkpoint) {
                assert_ne!(s.role(i), Role::Support);
                match s.role(i) {
                    Role::Validation => val.insert(r.checkpoint.clone()),
                    Role::Test => test.insert(r.checkpoint.clone()),
                    _ => unreachable!(),
                };
            }
        }
        assert_eq!(val.len(), 10);
        assert_eq!(test.len(), 10);
        assert!(val.is_disjoint(&test));
        // In-domain checkpoints: 20 samples each -> 16/2/2.
        assert_eq!(s.count(Role::Support), 15 * 16);
    }

    #[test]
    fn ood_holdout_zero_and_too_few() {
        let c = five_datasets();
        let s = ood_holdout(&c, 0, &DEFAULT_OOD_RATIOS, 1).unwrap();
        assert!(s.held_out.is_empty());
        assert_eq!(s.count(Role::Excluded), 0);
        assert!(matches!(
            ood_holdout(&c, 7, &DEFAULT_OOD_RATIOS, 1),
            Err(ProtocolError::Stratum {
                needed: 8,
                size: 7,
                ..
            })
        ));
    }

    fn architectures() -> Corpus {
        let mut recs = Vec::new();
        for a in 0..6 {
            for c in 0..(a + 2) {
                for i in 0..5 {
                    let mut r =
                        SampleRecord::new(format!("a{a}c{c}s{i}"), "d", format!("a{a}-c{c}"));
                    r.acoustic_model = Some(format!("arch{a}"));
                    recs.push(r);
                }
            }
        }
        recs.push(SampleRecord::new("unlabelled", "d", "other"));
        let emb = EmbeddingSet::new("t", 0, 1, vec![0.0; recs.len()]).unwrap();
        build_corpus(recs, emb, LabelTarget::checkpoint()).unwrap()
    }

    #[test]
    fn leave_one_out_per_architecture() {
        let c = architectures();
        let s = leave_n_out(&c, LabelField::AcousticModel, HoldoutCount::Count(1), 2).unwrap();
        assert_eq!(s.held_out.len(), 6);
        assert_eq!(s.count(Role::Test), 30);
        assert_eq!(s.count(Role::Excluded), 1);
    }

    #[test]
    fn leave_half_out() {
        let c = architectures();
        let s = leave_n_out(&c, LabelField::AcousticModel, HoldoutCount::Half, 2).unwrap();
        // Checkpoints per architecture are 2..=7, halves 1,1,2,2,3,3.
        assert_eq!(s.held_out.len(), 12);
    }

    #[test]
    fn leave_n_out_errors() {
        let c = architectures();
        assert!(matches!(
            leave_n_out(&c, LabelField::AcousticModel, HoldoutCount::Count(0), 2),
            Err(ProtocolError::Range(_))
        ));
        assert!(matches!(
            leave_n_out(&c, LabelField::AcousticModel, HoldoutCount::Count(2), 2),
            Err(ProtocolError::Stratum { .. })
        ));
    }

    #[test]
    fn jsonl_round_trip() {
        let c = five_datasets();
        let s = ood_holdout(&c, 2, &DEFAULT_OOD_RATIOS, 8).unwrap();
        let text = s.to_jsonl();
        let back = SplitAssignment::parse_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_jsonl(), text);
        let first = text.lines().next().unwrap();
        assert!(first.contains("\"kind\":\"ood_holdout\""), "{first}");
        assert!(first.contains("\"seed\":8"));
        let l = SplitAssignment::parse_jsonl(
            leave_n_out(
                &architectures(),
                LabelField::AcousticModel,
                HoldoutCount::Half,
                1,
            )
            .unwrap()
            .to_jsonl()
            .as_bytes(),
        )
        .unwrap();
        assert!(matches!(
            l.spec.kind,
            SplitKind::LeaveNOut {
                n: HoldoutCount::Half,
                ..
            }
        ));
    }

    #[test]
    fn align_reorders_by_id() {
        let c = corpus(&[("d", "a", 6), ("d", "b", 6)]);
        let s = ratio_split(&c, &[0.5, 0.5], 2, &LabelTarget::checkpoint()).unwrap();
        let rev: Vec<usize> = (0..c.len()).rev().collect();
        let rc = c.subset(&rev).unwrap();
        let aligned = s.align(&rc).unwrap();
        for i in 0..c.len() {
            assert_eq!(aligned.role(i), s.role(c.len() - 1 - i));
        }
    }

    #[test]
    fn settings_parse_and_order() {
        let mut g: Vec<SupportSetting> = ["ratio:0.8", "50", "10", "0.5"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        g.sort();
        assert_eq!(
            g.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            ["10", "50", "ratio:0.5", "ratio:0.8"]
        );
        assert!("abc".parse::<SupportSetting>().is_err());
    }
}
