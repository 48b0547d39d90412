use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use srctrace_core::protocol::{
    leave_n_out, ood_holdout, per_class_support, ratio_split, HoldoutCount, Role, SplitAssignment,
    SupportSetting, DEFAULT_OOD_RATIOS,
};
use srctrace_core::store::{
    build_corpus, Corpus, EmbeddingSet, LabelField, LabelTarget, SampleRecord,
};

/// `datasets` datasets with `ckpts` checkpoints each; checkpoint sizes vary
/// with `sizes`. Architectures cycle over three values, vocoder is missing
/// on every fifth checkpoint.
fn corpus(datasets: usize, ckpts: usize, sizes: &[usize]) -> Corpus {
    let mut recs = Vec::new();
    for d in 0..datasets {
        for c in 0..ckpts {
            let n = sizes[(d * ckpts + c) % sizes.len()];
            for i in 0..n {
                let mut r = SampleRecord::new(
                    format!("d{d}-k{c}-{i}"),
                    format!("set{d}"),
                    format!("set{d}/k{c}"),
                );
                r.acoustic_model = Some(format!("am{}", c % 3));
                if c % 5 != 4 {
                    r.vocoder = Some(format!("voc{}", c % 2));
                }
                recs.push(r);
            }
        }
    }
    let n = recs.len();
    let emb = EmbeddingSet::new("t", 0, 1, (0..n).map(|v| v as f32).collect()).unwrap();
    build_corpus(recs, emb, LabelTarget::checkpoint()).unwrap()
}

fn role_counts(a: &SplitAssignment, c: &Corpus) -> BTreeMap<(String, Role), usize> {
    let mut m = BTreeMap::new();
    for row in 0..a.len() {
        *m.entry((c.record(row).checkpoint.clone(), a.role(row)))
            .or_insert(0) += 1;
    }
    m
}

fn ckpts_with(a: &SplitAssignment, c: &Corpus, role: Role) -> BTreeSet<String> {
    a.rows(role)
        .into_iter()
        .map(|r| c.record(r).checkpoint.clone())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ood_split_partitions_and_is_pure(
        datasets in 1usize..4,
        ckpts in 3usize..7,
        sizes in prop::collection::vec(3usize..25, 1..6),
        per in 0usize..3,
        seed in any::<u64>(),
    ) {
        let c = corpus(datasets, ckpts, &sizes);
        let a = ood_holdout(&c, per, &DEFAULT_OOD_RATIOS, seed).unwrap();
        prop_assert_eq!(a.len(), c.len());
        prop_assert_eq!(a.count(Role::Excluded), 0);
        let total: usize = [Role::Support, Role::Validation, Role::Test].iter().map(|r| a.count(*r)).sum();
        prop_assert_eq!(total, c.len());

        prop_assert_eq!(a.held_out.len(), datasets * per);
        let support = ckpts_with(&a, &c, Role::Support);
        for h in &a.held_out {
            prop_assert!(!support.contains(h));
            // A held-out checkpoint sits wholly in one role.
            let roles: BTreeSet<Role> = (0..c.len())
                .filter(|r| c.record(*r).checkpoint == *h)
                .map(|r| a.role(r))
                .collect();
            prop_assert_eq!(roles.len(), 1);
        }
        // Every in-domain checkpoint keeps support, at the largest-remainder share.
        let counts = role_counts(&a, &c);
        for name in c.classes().names() {
            if a.is_held_out(name) {
                continue;
            }
            let n: usize = counts.iter().filter(|((k, _), _)| k == name).map(|(_, v)| v).sum();
            let s = counts.get(&(name.clone(), Role::Support)).copied().unwrap_or(0);
            let want = srctrace_core::protocol::largest_remainder(n, &DEFAULT_OOD_RATIOS)[0];
            prop_assert_eq!(s, want);
        }

        let again = ood_holdout(&c, per, &DEFAULT_OOD_RATIOS, seed).unwrap();
        prop_assert_eq!(a.to_jsonl(), again.to_jsonl());
    }

    #[test]
    fn ratio_split_sizes(sizes in prop::collection::vec(2usize..40, 1..8), seed in any::<u64>()) {
        let c = corpus(1, sizes.len(), &sizes);
        let a = ratio_split(&c, &[0.8, 0.2], seed, &LabelTarget::checkpoint()).unwrap();
        let counts = role_counts(&a, &c);
        for (i, n) in sizes.iter().enumerate() {
            let name = format!("set0/k{i}");
            let s = counts.get(&(name, Role::Support)).copied().unwrap_or(0);
            prop_assert_eq!(s, srctrace_core::protocol::largest_remainder(*n, &[0.8, 0.2])[0]);
        }
        prop_assert_eq!(a.count(Role::Support) + a.count(Role::Test), c.len());
    }

    #[test]
    fn per_class_caps(sizes in prop::collection::vec(1usize..30, 1..8), n in 1usize..20, seed in any::<u64>()) {
        let c = corpus(1, sizes.len(), &sizes);
        let a = per_class_support(&c, n, seed).unwrap();
        let counts = role_counts(&a, &c);
        for (i, size) in sizes.iter().enumerate() {
            let s = counts.get(&(format!("set0/k{i}"), Role::Support)).copied().unwrap_or(0);
            prop_assert_eq!(s, n.min(*size));
        }
    }

    #[test]
    fn leave_out_is_checkpoint_level(seed in any::<u64>(), field in prop::sample::select(vec![LabelField::AcousticModel, LabelField::Vocoder, LabelField::Dataset])) {
        let c = corpus(3, 6, &[4, 7]);
        let a = leave_n_out(&c, field, HoldoutCount::Count(1), seed).unwrap();
        let test = ckpts_with(&a, &c, Role::Test);
        let support = ckpts_with(&a, &c, Role::Support);
        prop_assert!(test.is_disjoint(&support));
        prop_assert_eq!(test.into_iter().collect::<Vec<_>>(), a.held_out.clone());
        for row in a.rows(Role::Excluded) {
            prop_assert!(field.value(c.record(row)).is_none());
        }
    }
}

#[test]
fn seeds_change_assignments() {
    let c = corpus(2, 5, &[12, 9, 20]);
    assert!(c.len() >= 100);
    let mut distinct = BTreeSet::new();
    for seed in 0..20u64 {
        let a = ood_holdout(&c, 1, &DEFAULT_OOD_RATIOS, seed).unwrap();
        let b = ood_holdout(&c, 1, &DEFAULT_OOD_RATIOS, seed + 1000).unwrap();
        assert!(
            a.roles().iter().zip(b.roles()).any(|(x, y)| x != y),
            "seed {seed}"
        );
        distinct.insert(a.to_jsonl());
    }
    assert_eq!(distinct.len(), 20);
}

#[test]
fn assignment_file_round_trip() {
    let c = corpus(2, 4, &[6, 3]);
    let a = ood_holdout(&c, 1, &DEFAULT_OOD_RATIOS, 99).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("split.jsonl");
    a.write(&path).unwrap();
    let b = SplitAssignment::read(&path).unwrap();
    assert_eq!(a, b);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), b.to_jsonl());

    // Alignment against a corpus whose manifest lists the same ids in another order.
    let mut recs = c.records().to_vec();
    recs.reverse();
    let n = recs.len();
    let emb = EmbeddingSet::new("t", 0, 1, vec![0.0; n]).unwrap();
    let rev = build_corpus(recs, emb, LabelTarget::checkpoint()).unwrap();
    let aligned = b.align(&rev).unwrap();
    for row in 0..n {
        assert_eq!(aligned.role(row), a.role(n - 1 - row));
    }
}

#[test]
fn holdout_needs_a_remaining_checkpoint() {
    let c = corpus(1, 2, &[5]);
    assert!(ood_holdout(&c, 2, &DEFAULT_OOD_RATIOS, 0).is_err());
    assert!(leave_n_out(&c, LabelField::Dataset, HoldoutCount::Count(0), 0).is_err());
    assert!(SupportSetting::Ratio(1.5).split(&c, 0).is_err());
    let single = corpus(1, 2, &[1]);
    assert!(ratio_split(&single, &[0.8, 0.2], 0, &LabelTarget::checkpoint()).is_err());
}

#[test]
fn recorded_spec_reproduces_assignment() {
    let c = corpus(2, 6, &[10, 7, 13]);
    let made = [
        ratio_split(&c, &[0.6, 0.2, 0.2], 3, &LabelTarget::checkpoint()).unwrap(),
        per_class_support(&c, 4, 3).unwrap(),
        ood_holdout(&c, 2, &DEFAULT_OOD_RATIOS, 3).unwrap(),
    ];
    for a in made {
        assert_eq!(a.spec.apply(&c).unwrap(), a);
    }
}
