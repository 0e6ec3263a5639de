use std::collections::BTreeSet;

use proptest::prelude::*;

use frostkit::annotate::{segment_sentences, Annotator, EntityKind, KindSet};
use frostkit::chain::{
    build_chain, parse_augmented, serialize_summary_level, strip_chain, AugmentedTarget, EntityChain,
};
use frostkit::control::{drop_prompt, filter_extractive, is_extractive_chain, MatchPolicy};
use frostkit::eval::entity::EntityCounts;
use frostkit::eval::rouge::{rouge_l, rouge_n, RougeScore};
use frostkit::pretrain::{build_pretrain_example, select_gap_sentences, sentence_cap};
use frostkit::record::DatasetRecord;
use frostkit::stats::StatsAccumulator;
use frostkit::text::CharMap;

const WORDS: &[&str] = &[
    "Walsall", "Falkirk", "Liam", "Leahy", "the", "club", "signed", "on", "3", "May", "2015", "two", "hundred",
    "Mr.", "Dr.", "U.S.", "St", "Anna", "Kristoff", "Zoë", "Kraków", "3,400", "7.5", "twenty-one", "Monday",
    "January", "percent", "£5m", "O'Neil", "AT&T", "and", "of", "in",
];
const PUNCT: &[&str] = &[" ", " ", " ", " ", ", ", ". ", "! ", "? ", "\n", "  ", " - ", "; ", "\" ", " (", ") "];

fn text_strategy(max_words: usize) -> impl Strategy<Value = String> {
    prop::collection::vec((prop::sample::select(WORDS), prop::sample::select(PUNCT)), 0..max_words).prop_map(
        |parts| {
            let mut s = String::new();
            for (w, p) in parts {
                s.push_str(w);
                s.push_str(p);
            }
            s
        },
    )
}

fn entity_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..4).prop_map(|w| w.join(" "))
}

fn chain_strategy() -> impl Strategy<Value = EntityChain> {
    prop::collection::vec(prop::collection::vec(entity_strategy(), 0..4), 1..4).prop_map(EntityChain::new)
}

fn policy_strategy() -> impl Strategy<Value = MatchPolicy> {
    (any::<bool>(), any::<bool>()).prop_map(|(case_fold, whitespace_collapse)| MatchPolicy {
        case_fold,
        whitespace_collapse,
    })
}

fn kinds_strategy() -> impl Strategy<Value = KindSet> {
    (any::<bool>(), any::<bool>(), any::<bool>()).prop_filter_map("non-empty kind set", |(n, d, x)| {
        let mut k = KindSet::empty();
        for (on, kind) in [(n, EntityKind::Named), (d, EntityKind::Date), (x, EntityKind::Number)] {
            if on {
                k = k.with(kind);
            }
        }
        (!k.is_empty()).then_some(k)
    })
}

fn annotator(kinds: KindSet) -> Annotator {
    Annotator::new(kinds, frostkit::annotate::HeuristicRecognizer::new()).unwrap()
}

fn tokens_strategy() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..5, 0..20)
}

fn in_unit(s: RougeScore) -> bool {
    [s.precision, s.recall, s.f1].iter().all(|v| (0.0..=1.0).contains(v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn spans_are_sorted_disjoint_and_exact(text in text_strategy(40), kinds in kinds_strategy()) {
        let a = annotator(kinds).annotate_text(&text).unwrap();
        let map = CharMap::new(&text);
        let mut prev_end = 0;
        for span in &a.spans {
            prop_assert!(span.start < span.end);
            prop_assert!(span.start >= prev_end);
            prev_end = span.end;
            prop_assert!(kinds.contains(span.kind));
            let slice = &text[map.to_byte(span.start).unwrap()..map.to_byte(span.end).unwrap()];
            prop_assert_eq!(slice, span.text.as_str());
            let (s, e) = a.sentences[span.sent];
            prop_assert!(s <= span.start && span.end <= e);
        }
    }

    #[test]
    fn annotation_is_deterministic(text in text_strategy(40), kinds in kinds_strategy()) {
        let a = annotator(kinds);
        prop_assert_eq!(a.annotate_text(&text).unwrap(), a.annotate_text(&text).unwrap());
    }

    #[test]
    fn segmentation_covers_all_non_whitespace(text in text_strategy(40)) {
        let map = CharMap::new(&text);
        let sentences = segment_sentences(&text);
        let mut cursor = 0;
        for &(s, e) in &sentences {
            prop_assert!(cursor <= s && s < e);
            let gap = &text[map.to_byte(cursor).unwrap()..map.to_byte(s).unwrap()];
            prop_assert!(gap.chars().all(char::is_whitespace), "gap {:?}", gap);
            let sentence = &text[map.to_byte(s).unwrap()..map.to_byte(e).unwrap()];
            prop_assert_eq!(sentence.trim(), sentence);
            cursor = e;
        }
        prop_assert!(text[map.to_byte(cursor).unwrap()..].chars().all(char::is_whitespace));
    }

    #[test]
    fn summary_level_round_trip(chain in chain_strategy(), summary in text_strategy(20)) {
        let target = AugmentedTarget::new(chain, summary.trim());
        let text = serialize_summary_level(&target).unwrap();
        let parsed = parse_augmented(&text);
        prop_assert!(!parsed.malformed);
        prop_assert_eq!(parsed.target, target);
    }

    #[test]
    fn annotated_targets_round_trip(text in text_strategy(40)) {
        let a = annotator(KindSet::ALL).annotate_text(&text).unwrap();
        let target = AugmentedTarget::from_annotated(&a);
        let serialized = serialize_summary_level(&target).unwrap();
        let parsed = parse_augmented(&serialized).target;
        prop_assert_eq!(parsed.chain.entity_count(), a.spans.len());
        if target.chain.groups.is_empty() {
            // a chain without groups reads back as a single empty group
            prop_assert_eq!(parsed.chain, EntityChain::empty());
            prop_assert_eq!(parsed.summary, target.summary);
        } else {
            prop_assert_eq!(parsed, target);
        }
    }

    #[test]
    fn strip_is_idempotent(text in text_strategy(30), chain in chain_strategy()) {
        let prefixed = format!("{} {}", frostkit::chain::serialize_prefix(&chain).unwrap(), text);
        for input in [text.as_str(), prefixed.as_str()] {
            let once = strip_chain(input);
            prop_assert_eq!(strip_chain(&once), once.clone());
        }
        prop_assert_eq!(strip_chain(&prefixed), text.trim());
    }

    #[test]
    fn drop_prompt_is_sound_idempotent_and_accounted(
        chain in chain_strategy(),
        doc in text_strategy(30),
        policy in policy_strategy(),
    ) {
        let (dropped, report) = drop_prompt(&chain, &doc, policy);
        prop_assert!(is_extractive_chain(&dropped, &doc, policy));
        prop_assert_eq!(report.entity_count(), chain.entity_count());
        prop_assert_eq!(dropped.groups.len(), chain.groups.len());
        prop_assert_eq!(dropped.entity_count(), report.kept.len() + report.partially_kept.len());
        let (again, second) = drop_prompt(&dropped, &doc, policy);
        prop_assert_eq!(&again, &dropped);
        prop_assert!(second.dropped.is_empty() && second.partially_kept.is_empty());
    }

    #[test]
    fn filter_partitions_in_order(
        rows in prop::collection::vec((text_strategy(20), text_strategy(12)), 0..12),
    ) {
        let records: Vec<DatasetRecord> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (document, summary))| DatasetRecord {
                id: format!("r{i}"),
                document: Some(document),
                summary: Some(summary),
                ..Default::default()
            })
            .collect();
        let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
        let out = filter_extractive(records, &Annotator::heuristic(), MatchPolicy::default());
        prop_assert_eq!(out.counts.kept + out.counts.rejected, out.counts.total);
        prop_assert_eq!(out.counts.total, ids.len());
        prop_assert_eq!(out.kept.len(), out.counts.kept);
        let kept: Vec<&String> = out.kept.iter().map(|r| &r.id).collect();
        let rejected: Vec<&String> = out.rejected.iter().map(|(r, _)| &r.id).collect();
        let in_order = |sub: &[&String]| sub.windows(2).all(|w| ids.iter().position(|x| x == w[0]) < ids.iter().position(|x| x == w[1]));
        prop_assert!(in_order(&kept) && in_order(&rejected));
        let union: BTreeSet<&String> = kept.iter().chain(&rejected).copied().collect();
        prop_assert_eq!(union.len(), ids.len());
    }

    #[test]
    fn rouge_scores_are_bounded(c in tokens_strategy(), r in tokens_strategy(), n in 1usize..5) {
        prop_assert!(in_unit(rouge_n(&c, &r, n)));
        prop_assert!(in_unit(rouge_l(&c, &r)));
    }

    #[test]
    fn rouge_identity_is_perfect(c in prop::collection::vec(0u8..5, 4..20)) {
        prop_assert_eq!(rouge_l(&c, &c), RougeScore::PERFECT);
        for n in 1..=4 {
            prop_assert_eq!(rouge_n(&c, &c, n), RougeScore::PERFECT);
        }
    }

    #[test]
    fn recall_never_drops_when_candidate_grows(c in tokens_strategy(), extra in tokens_strategy(), r in tokens_strategy()) {
        let mut longer = c.clone();
        longer.extend(&extra);
        for n in 1..=4 {
            prop_assert!(rouge_n(&longer, &r, n).recall >= rouge_n(&c, &r, n).recall);
        }
        prop_assert!(rouge_l(&longer, &r).recall >= rouge_l(&c, &r).recall);
    }

    #[test]
    fn f1_is_harmonic_mean(c in tokens_strategy(), r in tokens_strategy(), n in 1usize..5) {
        for s in [rouge_n(&c, &r, n), rouge_l(&c, &r)] {
            let h = if s.precision + s.recall == 0.0 { 0.0 } else { 2.0 * s.precision * s.recall / (s.precision + s.recall) };
            prop_assert!((s.f1 - h).abs() < 1e-12, "{:?}", s);
        }
    }

    #[test]
    fn entity_f1_is_symmetric_under_swap(
        p in prop::collection::btree_set("[a-e]{1,2}", 0..6),
        r in prop::collection::btree_set("[a-e]{1,2}", 0..6),
    ) {
        let (p1, r1, f1) = EntityCounts::between(&p, &r).prf();
        let (p2, r2, f2) = EntityCounts::between(&r, &p).prf();
        prop_assert_eq!((p1, r1, f1), (r2, p2, f2));
    }

    #[test]
    fn stats_ignore_order_and_merge_additively(
        texts in prop::collection::vec(text_strategy(25), 0..10),
        split in any::<prop::sample::Index>(),
        seed in any::<u64>(),
    ) {
        let a = annotator(KindSet::ALL);
        let annotated: Vec<_> = texts.iter().map(|t| a.annotate_text(t).unwrap()).collect();
        let fold = |items: &[frostkit::annotate::AnnotatedText]| {
            let mut acc = StatsAccumulator::default();
            for x in items {
                acc.add(x);
            }
            acc
        };
        let whole = fold(&annotated);
        let mut shuffled = annotated.clone();
        use rand::{seq::SliceRandom, SeedableRng};
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(fold(&shuffled), whole);
        let k = if annotated.is_empty() { 0 } else { split.index(annotated.len() + 1) };
        let (left, right) = annotated.split_at(k);
        prop_assert_eq!(fold(left).merge(fold(right)), whole);
        prop_assert_eq!(fold(right).merge(fold(left)), whole);
    }

    #[test]
    fn pretrain_masks_reconstruct_the_document(text in text_strategy(60), n_max in 1usize..7) {
        let a = annotator(KindSet::ALL).annotate_text(&text).unwrap();
        prop_assume!(a.sentence_count() > 0);
        let sel = select_gap_sentences(&a, n_max, "<M>", true).unwrap();
        prop_assert_eq!(sel.selected.len(), n_max.min(sentence_cap(a.sentence_count())));
        prop_assert!(sel.selected.windows(2).all(|w| w[0] < w[1]));
        let ex = build_pretrain_example(&a, &sel).unwrap();

        let pieces: Vec<&str> = ex.masked_input.split("<M>").collect();
        prop_assert_eq!(pieces.len(), sel.selected.len() + 1);
        let mut restored = String::new();
        for (i, piece) in pieces.iter().enumerate() {
            restored.push_str(piece);
            if let Some(&s) = sel.selected.get(i) {
                restored.push_str(a.sentence_str(s));
            }
        }
        prop_assert_eq!(restored, text.clone());

        let parsed = parse_augmented(&ex.target);
        prop_assert!(!parsed.malformed);
        let full = build_chain(&a);
        let want = EntityChain::new(sel.selected.iter().map(|&i| full.groups[i].clone()).collect());
        prop_assert_eq!(parsed.target.chain, want);
        let summary: Vec<&str> = sel.selected.iter().map(|&i| a.sentence_str(i)).collect();
        prop_assert_eq!(parsed.target.summary, summary.join(" "));
    }
}
