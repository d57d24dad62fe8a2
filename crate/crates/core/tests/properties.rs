use std::collections::BTreeSet;

use dialeval::ingest::{filter_corpus, sample_fewshot, FewShotSpec, FilterPolicy};
use dialeval::lexical::{chrf, corpus_bleu4, unigram_f1, BleuStats, ChrfParams, TokenizationConfig};
use dialeval::serialize::{escape_line, parse_instance, serialize_instance, unescape_line, WireFormatConfig};
use dialeval::{Corpus, Dialog, DialogTurn, GroundedInstance, Speaker};
use proptest::prelude::*;

fn marker_free(cfg: &WireFormatConfig, s: &str) -> bool {
    [&cfg.env_marker, &cfg.target_marker, &cfg.user_prefix, &cfg.system_prefix]
        .iter()
        .all(|m| !s.contains(m.as_str()))
}

fn text() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 ,.?!:'=<>|\\\\-]{1,40}"
}

fn instance() -> impl Strategy<Value = GroundedInstance> {
    let turn = (any::<bool>(), text()).prop_map(|(u, t)| {
        DialogTurn::new(if u { Speaker::User } else { Speaker::System }, t)
    });
    (
        prop::collection::vec(turn, 1..6),
        prop_oneof![Just(String::new()), "[A-Za-z0-9 .\n]{1,60}"],
        prop_oneof![Just(String::new()), text()],
    )
        .prop_map(|(context, environment, target)| GroundedInstance {
            instance_id: String::new(),
            context,
            environment,
            target,
        })
        .prop_filter("instance text must be marker-free", |i| {
            let cfg = WireFormatConfig::default();
            i.context.iter().all(|t| marker_free(&cfg, &t.text))
                && marker_free(&cfg, &i.environment)
                && marker_free(&cfg, &i.target)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn serialize_round_trips(inst in instance()) {
        let cfg = WireFormatConfig::default();
        let line = serialize_instance(&inst, &cfg).unwrap();
        prop_assert_eq!(parse_instance(&line, &cfg).unwrap(), inst);
        let escaped = escape_line(&line);
        prop_assert!(!escaped.contains('\n'));
        prop_assert_eq!(unescape_line(&escaped).unwrap(), line);
    }

    #[test]
    fn escape_round_trips_any_string(s in any::<String>()) {
        prop_assert_eq!(unescape_line(&escape_line(&s)).unwrap(), s);
    }

    #[test]
    fn lexical_scores_are_bounded(h in "[a-z ]{0,30}", r in "[a-z ]{0,30}") {
        let cfg = TokenizationConfig::default();
        let f = unigram_f1(&h, &r, &cfg);
        let c = chrf(&h, &r, &ChrfParams::default());
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert_eq!(unigram_f1(&r, &r, &cfg), 1.0);
    }

    #[test]
    fn bleu_stats_sum_in_any_order(pairs in prop::collection::vec(("[a-d ]{0,20}", "[a-d ]{1,20}"), 1..12)) {
        let cfg = TokenizationConfig::default().for_bleu();
        let stats: Vec<BleuStats> = pairs.iter().map(|(h, r)| BleuStats::from_pair(h, r, &cfg)).collect();
        let forward: BleuStats = stats.iter().copied().sum();
        let backward: BleuStats = stats.iter().rev().copied().sum();
        prop_assert_eq!(forward, backward);
        let score = forward.score();
        prop_assert!((0.0..=1.0).contains(&score));
    }
}

fn forum_corpus(texts: &[String]) -> Corpus {
    let dialogs = texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            Dialog::new(
                format!("d{i:03}"),
                vec![DialogTurn::user(t.clone()), DialogTurn::system("ok then")],
                vec![],
                vec![],
            )
        })
        .collect();
    Corpus::new("forum", dialogs)
}

fn ids(c: &Corpus) -> BTreeSet<String> {
    c.dialogs.iter().map(|d| d.dialog_id.clone()).collect()
}

proptest! {
    #[test]
    fn filter_is_idempotent_and_monotone(
        texts in prop::collection::vec("(alpha|beta|gamma|delta| ){1,40}", 1..30),
        words in prop::collection::btree_set("alpha|beta|gamma", 0..3),
        extra in "alpha|beta|gamma|delta",
    ) {
        let corpus = forum_corpus(&texts);
        let policy = FilterPolicy { block_words: words.clone(), ..FilterPolicy::none() };
        let (once, stats) = filter_corpus(&corpus, &policy);
        let (twice, again) = filter_corpus(&once, &policy);
        prop_assert_eq!(&twice, &once);
        prop_assert_eq!(again.dropped(), 0);
        prop_assert_eq!(stats.kept_dialogs + stats.dropped(), corpus.dialogs.len());

        let mut stricter = words;
        stricter.insert(extra);
        let (fewer, _) = filter_corpus(&corpus, &FilterPolicy { block_words: stricter, ..FilterPolicy::none() });
        prop_assert!(ids(&fewer).is_subset(&ids(&once)));
    }

    #[test]
    fn sampling_ignores_file_order(n in 5usize..60, k in 1usize..5, seed in any::<u64>(), rot in 0usize..60) {
        let texts: Vec<String> = (0..n).map(|i| format!("hello {i}")).collect();
        let corpus = forum_corpus(&texts);
        let mut rotated = corpus.clone();
        rotated.dialogs.rotate_left(rot % n);
        let spec = FewShotSpec::new(k, seed);
        let a = sample_fewshot(&corpus, &spec).unwrap();
        let b = sample_fewshot(&rotated, &spec).unwrap();
        prop_assert_eq!(a.dialogs.len(), k);
        prop_assert_eq!(ids(&a), ids(&b));
        prop_assert!(ids(&a).is_subset(&ids(&corpus)));
    }
}

#[test]
fn identity_corpus_bleu_is_one() {
    let refs = ["the cat sat on the mat", "a quick brown fox jumps"];
    let pairs: Vec<(&str, &str)> = refs.iter().map(|r| (*r, *r)).collect();
    assert_eq!(corpus_bleu4(&pairs, &TokenizationConfig::default()).unwrap(), 1.0);
}
