use std::collections::{BTreeMap, BTreeSet};

use biascase_core::dataset::save_testset;
use biascase_core::{AnnotationVerdict, RejectReason, SentenceVariant, Stage, TestCase, TestSet};
use biascase_review::{AnnotationInput, CaseFilter, ReviewError, ReviewState};
use proptest::prelude::*;

fn set(n: usize) -> TestSet {
    let cases = (0..n)
        .map(|i| {
            TestCase::new(
                "age",
                vec![
                    SentenceVariant::source("young", format!("The young clerk filed form {i}."), Stage::Etsg),
                    SentenceVariant::counterfactual("old", format!("The old clerk filed form {i}."), Stage::Etsg),
                ],
            )
            .unwrap()
        })
        .collect();
    TestSet::new("p", "generated:p", cases)
}

fn input(annotator: &str, valid: bool) -> AnnotationInput {
    AnnotationInput {
        annotator: annotator.into(),
        verdict: if valid { AnnotationVerdict::Valid } else { AnnotationVerdict::Invalid },
        reason: (!valid).then_some(RejectReason::Misinterpretation),
        note: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pending_judged_partition_and_agreement_oracle(
        n in 1usize..12,
        ops in prop::collection::vec((0usize..12, 0usize..3, any::<bool>()), 0..60),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let ts = set(n);
        save_testset(&ts, &dir.path().join("s.jsonl")).unwrap();
        let state = ReviewState::open(&dir.path().join("s.jsonl"), &dir.path().join("a.jsonl")).unwrap();
        let ids: Vec<String> = state.testset().cases.iter().map(|c| c.id.clone()).collect();
        let names = ["a", "b", "c"];
        let mut oracle: BTreeMap<(usize, usize), bool> = BTreeMap::new();

        for (case, who, valid) in ops {
            let case = case % n;
            let r = state.annotate(&ids[case], input(names[who], valid));
            if let std::collections::btree_map::Entry::Vacant(e) = oracle.entry((case, who)) {
                prop_assert!(r.is_ok());
                e.insert(valid);
            } else {
                prop_assert!(matches!(r, Err(ReviewError::Conflict { .. })), "expected a conflict");
            }
            for name in names {
                let pending: BTreeSet<String> = state.cases(CaseFilter::Pending, Some(name), None).unwrap().into_iter().map(|c| c.id).collect();
                let judged: BTreeSet<String> = state.cases(CaseFilter::Judged, Some(name), None).unwrap().into_iter().map(|c| c.id).collect();
                prop_assert!(pending.is_disjoint(&judged));
                prop_assert_eq!(pending.len() + judged.len(), n);
            }
        }

        // independent count of cases with 2+ verdicts, all equal
        let mut per_case: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
        for ((case, _), v) in &oracle {
            per_case.entry(*case).or_default().push(*v);
        }
        let shared: Vec<&Vec<bool>> = per_case.values().filter(|v| v.len() >= 2).collect();
        let agree = shared.iter().filter(|v| v.iter().all(|x| *x == v[0])).count();
        let a = state.agreement();
        prop_assert_eq!(a.doubly_annotated, shared.len());
        prop_assert_eq!(a.agreeing, agree);
        if !shared.is_empty() {
            prop_assert!((a.percent_agreement.unwrap() - agree as f64 / shared.len() as f64).abs() < 1e-12);
        }
        prop_assert_eq!(biascase_review::read_log(&dir.path().join("a.jsonl")).unwrap().len(), oracle.len());
    }
}
