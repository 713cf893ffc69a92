//! The learner against brute force on small corpora.

#[path = "common/oracle.rs"]
mod oracle;

use std::cmp::Ordering;

use oracle::{build, canonical, naive_scores, oracle_first, slot_pool, TAGS, WORDS};
use proptest::prelude::*;
use tagbridge::corpus::{Columns, Tag};
use tagbridge::tbl::{apply, error_count, learn, learn_traced, score_rule, Rule, RuleList, Slot, Template, BOUNDARY};

fn corpus_strategy() -> impl Strategy<Value = Vec<Vec<(usize, usize, usize)>>> {
    let token = (0..WORDS.len(), 0..TAGS.len(), 0..TAGS.len(), 0..3usize)
        .prop_map(|(w, t, g, keep)| if keep == 0 { (w, t, g) } else { (w, t, (t + w) % TAGS.len()) });
    prop::collection::vec(prop::collection::vec(token, 1..10), 1..4)
        .prop_filter("at most 30 samples", |vs| vs.iter().map(Vec::len).sum::<usize>() <= 30)
}

fn templates_strategy() -> impl Strategy<Value = Vec<Template>> {
    prop::sample::subsequence((0..slot_pool().len()).collect::<Vec<_>>(), 1..=3).prop_map(|idx| {
        let pool = slot_pool();
        idx.into_iter()
            .map(|i| Template::new(format!("t{i}"), pool[i].clone()).unwrap())
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn first_rule_is_brute_force_argmax(v in corpus_strategy(), templates in templates_strategy(), theta in 1i64..3) {
        let c = build(&v);
        let learned = learn(&c, &templates, theta).unwrap();
        let expected = oracle_first(&c, &templates, theta);
        match (learned.rules.first(), expected) {
            (None, None) => {}
            (Some(got), Some((want, score))) => {
                prop_assert_eq!(canonical(got, &want), Ordering::Equal, "got {} want {}", got.to_line(), want.to_line());
                prop_assert_eq!(got.score, score);
                prop_assert_eq!(score_rule(got, &c), score);
            }
            (got, want) => prop_assert!(false, "learned {:?}, oracle {:?}", got.map(|r| r.to_line()), want.map(|r| r.0.to_line())),
        }
    }

    #[test]
    fn every_rule_beats_threshold_and_replays(v in corpus_strategy(), templates in templates_strategy(), theta in 1i64..3) {
        let c = build(&v);
        let trace = learn_traced(&c, &templates, theta).unwrap();
        let mut errors = trace.initial_errors;
        prop_assert_eq!(errors, error_count(&c));
        let mut state = c.clone();
        for (k, rule) in trace.rules.rules.iter().enumerate() {
            prop_assert!(rule.from != rule.to);
            prop_assert!(trace.realized[k] > theta);
            errors -= trace.realized[k] as usize;
            prop_assert_eq!(trace.errors_after[k], errors);
            state = apply(&RuleList { rules: vec![rule.clone()], threshold: theta }, &state);
            prop_assert_eq!(error_count(&state), errors);
        }
        prop_assert_eq!(apply(&trace.rules, &c), state);
    }

    #[test]
    fn learning_is_deterministic(v in corpus_strategy(), templates in templates_strategy()) {
        let c = build(&v);
        let a = learn(&c, &templates, 1).unwrap().to_text();
        let b = learn(&c, &templates, 1).unwrap().to_text();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn rule_file_round_trips(v in corpus_strategy(), templates in templates_strategy()) {
        let rules = learn(&build(&v), &templates, 1).unwrap();
        prop_assert_eq!(RuleList::parse(&rules.to_text()).unwrap(), rules);
    }
}

#[test]
fn toy_word_context_is_unique_maximum() {
    // initial A everywhere; truth B right after "x" (3 times)
    let text = "# id=T:1:1\nx\tA\tA\ny\tA\tB\nx\tA\tA\n\n# id=T:1:2\nz\tA\tA\nx\tA\tA\ny\tA\tB\nx\tA\tA\nw\tA\tB\n";
    let c = tagbridge::corpus::parse_vertical(text, Columns::Two).unwrap();
    let tpl = Template::new("word-1", vec![Slot::word(-1)]).unwrap();
    let rules = learn(&c, &[tpl.clone()], 2).unwrap();
    assert_eq!(rules.len(), 1);
    assert_eq!(rules.rules[0].to_line(), "from=A to=B tpl=word-1 ctx=word[-1]=x score=3");
    let scores: Vec<i64> = all_rules_for(&tpl).iter().map(|r| naive_scores(r, &c).0).collect();
    assert_eq!(scores.iter().filter(|&&s| s == 3).count(), 1);
    assert!(scores.iter().all(|&s| s <= 3));
}

fn all_rules_for(tpl: &Template) -> Vec<Rule> {
    let mut out = Vec::new();
    for v in ["x", "y", "z", "w", BOUNDARY] {
        for to in ["B"] {
            out.push(Rule::new(Tag::new("A").unwrap(), Tag::new(to).unwrap(), tpl.clone(), vec![v.into()]).unwrap());
        }
    }
    out
}
