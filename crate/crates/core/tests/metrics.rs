use proptest::prelude::*;
use tagbridge::corpus::{Columns, Tag, TaggedCorpus, Tagset, Token, Verse, VerseId};
use tagbridge::metrics::{accuracy, evaluate, parse_csv, to_csv, transformation_rate, MetricsRecord};

const LABELS: [&str; 6] = ["NN", "IN", "NNC", "PREP", "VSI", "UNK"];

fn tagset() -> Tagset {
    Tagset::from_labels("t", ["NNC", "PREP", "VSI", "NNP"]).unwrap()
}

/// Two corpora over the same verses and forms, plus a rotation applied to
/// the predicted verse order.
fn pair() -> impl Strategy<Value = (Vec<Vec<(usize, usize)>>, usize)> {
    prop::collection::vec(prop::collection::vec((0..LABELS.len(), 0..LABELS.len()), 1..12), 1..8)
        .prop_flat_map(|v| {
            let n = v.len();
            (Just(v), 0..n)
        })
}

fn build(tags: &[Vec<(usize, usize)>], pick: impl Fn((usize, usize)) -> usize, rotate: usize) -> TaggedCorpus {
    let mut verses: Vec<Verse> = tags
        .iter()
        .enumerate()
        .map(|(i, toks)| {
            let tokens = toks
                .iter()
                .enumerate()
                .map(|(j, &t)| Token::tagged(format!("w{j}"), Tag::new(LABELS[pick(t)]).unwrap()))
                .collect();
            Verse::new(VerseId::new("Rom", 1, i as u32 + 1), tokens)
        })
        .collect();
    verses.rotate_left(rotate);
    TaggedCorpus::new(verses, Columns::One, "").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn formulas_match_token_oracles((tags, rotate) in pair()) {
        let gold = build(&tags, |t| t.0, 0);
        let pred = build(&tags, |t| t.1, rotate);
        let ts = tagset();

        let flat: Vec<(usize, usize)> = tags.iter().flatten().copied().collect();
        let total = flat.len() as u64;
        let correct = flat.iter().filter(|(g, p)| LABELS[*g] == LABELS[*p]).count() as u64;
        let member = flat.iter().filter(|(_, p)| ts.contains(LABELS[*p])).count() as u64;

        let r = evaluate("IgbTC-3", &pred, &gold, &ts).unwrap();
        prop_assert_eq!(r.token_total, total);
        prop_assert_eq!(r.correct_count, correct);
        prop_assert_eq!(r.in_target_tagset_count, member);
        prop_assert_eq!(r.accuracy, correct as f64 / total as f64);
        prop_assert_eq!(r.transformation_rate, member as f64 / total as f64);
        prop_assert_eq!(r.accuracy + r.error_rate, 1.0);
        prop_assert_eq!(accuracy(&pred, &gold).unwrap(), r.accuracy);
        prop_assert_eq!(transformation_rate(&pred, &ts), r.transformation_rate);
    }

    #[test]
    fn rates_sum_to_one(total in 1u64..100_000, frac in 0.0f64..=1.0) {
        let correct = (total as f64 * frac) as u64;
        let r = MetricsRecord::from_counts("s", total, correct, 0);
        prop_assert_eq!(r.accuracy + r.error_rate, 1.0);
    }

    #[test]
    fn csv_round_trip(counts in prop::collection::vec((1u64..10_000, 0u64..10_000, 0u64..10_000), 1..12)) {
        let records: Vec<MetricsRecord> = counts
            .iter()
            .enumerate()
            .map(|(i, &(t, c, m))| MetricsRecord::from_counts(format!("IgbTC-{i}"), t, c.min(t), m.min(t)))
            .collect();
        let text = to_csv(&records);
        prop_assert_eq!(parse_csv(&text).unwrap(), records);
    }
}

#[test]
fn accuracy_rejects_verse_count_mismatch() {
    let tags = vec![vec![(0, 0)], vec![(1, 1)]];
    let gold = build(&tags, |t| t.0, 0);
    let pred = build(&tags[..1], |t| t.1, 0);
    assert!(accuracy(&pred, &gold).is_err());
}

#[test]
fn evaluate_names_missing_verse() {
    let tags = vec![vec![(0, 0)], vec![(1, 1)]];
    let gold = build(&tags, |t| t.0, 0);
    let pred = build(&tags[..1], |t| t.1, 0);
    let err = evaluate("s", &pred, &gold, &tagset()).unwrap_err().to_string();
    assert!(err.contains("Rom:1:2"), "{err}");
}
