mod common;

use biascase_core::{BiasSpec, Stage};
use biascase_pipeline::RunConfig;
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_case_has_one_variant_per_term(
        terms in prop::sample::subsequence(vec!["alpha", "beta", "gamma", "delta", "epsilon"], 2..=5),
        topics in 1usize..4,
        per_concept in 1usize..3,
        lda in any::<bool>(),
        syda in any::<bool>(),
        seda in any::<bool>(),
    ) {
        let spec = BiasSpec::new("toy", terms.iter().copied()).unwrap();
        let mut config = RunConfig::new(spec.clone(), Default::default());
        config.topics_per_bts_call = topics;
        config.sentences_per_concept = per_concept;
        config.enable_lda = lda;
        config.enable_syda = syda;
        config.enable_seda = seda;
        let rt = tokio::runtime::Builder::new_current_thread().enable_time().build().unwrap();
        let out = rt.block_on(async {
            biascase_pipeline::Pipeline::with_client(config, Default::default(), live_client(Scripted::new(echo_generator), 4))
                .run()
                .await
                .unwrap()
        });
        let set = out.testset;
        let etsg = set.cases.iter().filter(|c| c.stage() == Stage::Etsg).count();
        prop_assert_eq!(etsg, topics * terms.len() * per_concept);
        for c in &set.cases {
            prop_assert_eq!(c.variants.len(), terms.len());
            prop_assert!(c.is_active());
            if let Some(p) = &c.parent_id {
                if !p.starts_with("group:") {
                    prop_assert_eq!(set.get(p).unwrap().stage(), Stage::Etsg);
                }
            }
        }
        let lda_n = set.cases.iter().filter(|c| matches!(c.stage(), Stage::LdaSynonym | Stage::LdaNegated)).count();
        prop_assert_eq!(lda_n, if lda { 4 * etsg } else { 0 });
        let seda_n = set.cases.iter().filter(|c| c.stage() == Stage::Seda).count();
        prop_assert!(seda_n <= 20 * terms.len());
        prop_assert_eq!(seda_n, if seda { 3 * terms.len() } else { 0 });
    }
}
