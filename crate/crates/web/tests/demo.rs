use tagbridge_web::{learn_rules, project_verse, simulate};

#[test]
fn project_one_verse() {
    let out = project_verse("the/DT old/JJ house/NN", "ulo ochie nke", "0-2 1-1").unwrap();
    assert_eq!(out, "ulo\tNN\nochie\tJJ\nnke\tUNK\n");
}

#[test]
fn project_rejects_bad_input() {
    assert!(project_verse("the", "ulo", "0-0").unwrap_err().contains("word/TAG"));
    assert!(project_verse("the/DT", "ulo", "0:0").unwrap_err().contains("malformed link"));
    assert!(project_verse("the/DT", "ulo", "3-0").is_err());
}

#[test]
fn learn_rules_fixes_training_errors() {
    let corpus = "# id=T:1:1\nx\tA\tA\ny\tA\tB\nx\tA\tA\n\n# id=T:1:2\nz\tA\tA\nx\tA\tA\ny\tA\tB\nx\tA\tA\ny\tA\tB\n";
    let out = learn_rules(corpus, "word-1\tword[-1]\n", 2).unwrap();
    assert!(out.contains("from=A to=B tpl=word-1 ctx=word[-1]=x score=3"), "{out}");
    assert!(out.contains("# errors 3 -> 0"), "{out}");
    assert!(out.ends_with("# id=T:1:2\nz\tA\nx\tA\ny\tB\nx\tA\ny\tB\n"), "{out}");
    // nothing beats a threshold of 3
    assert!(learn_rules(corpus, "word-1\tword[-1]\n", 3).unwrap().contains("# errors 3 -> 3"));
}

#[test]
fn simulate_reports_every_state() {
    let csv = simulate(150, 0.15, 0.1, 0.2, 3, 5).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("state,accuracy"));
    assert!(lines[4].starts_with("IgbTC-3,"));
    let acc = |l: &str| l.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    assert!(acc(lines[4]) > acc(lines[1]), "{csv}");
    assert_eq!(simulate(150, 0.15, 0.1, 0.2, 3, 5).unwrap(), csv);
}

#[test]
fn simulate_rejects_an_oversized_schedule() {
    assert!(simulate(50, 0.1, 0.1, 0.5, 4, 1).is_err());
}
