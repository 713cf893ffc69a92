//! Seeded synthetic parallel corpora with known gold tags.
//!
//! The target "language" draws tags from a Markov chain over the target
//! tagset and words from per-tag Zipfian lexicons. The source side is the
//! token-by-token rendering of the target with each tag mapped through a
//! fixed many-to-one correspondence into the source tagset. Alignment links
//! start as the identity and are re-linked at the noise rate.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::align::Alignment;
use crate::corpus::{Columns, Tag, TaggedCorpus, Tagset, Token, Verse, VerseId, VersePair};
use crate::error::{Error, Result};

/// Target tag to source tag for every non-shared tag the generator uses.
pub const TAG_MAP: &[(&str, &str)] = &[
    ("NNC", "NN"),
    ("NNM", "NN"),
    ("NNQ", "NN"),
    ("NND", "NN"),
    ("NNH", "NN"),
    ("NNCV", "NN"),
    ("NNCC", "NN"),
    ("TTL", "NNPS"),
    ("VIF", "VB"),
    ("VMO", "VB"),
    ("VMOV", "VB"),
    ("VMOC", "VB"),
    ("VrV", "VB"),
    ("VSI", "VBD"),
    ("VCO", "VBD"),
    ("VAX", "MD"),
    ("VPP", "VBN"),
    ("VCJ", "VBZ"),
    ("BCN", "VBG"),
    ("VGD", "VBG"),
    ("ADJ", "JJ"),
    ("PRN", "PRP"),
    ("PRNREF", "PRP"),
    ("PRNEMP", "PRP"),
    ("PRNYNQ", "PRP"),
    ("ENC", "PRP"),
    ("BPRN", "PRP$"),
    ("ADV", "RB"),
    ("IDEO", "RB"),
    ("CJN", "CC"),
    ("CJN1", "CC"),
    ("CJN2", "CC"),
    ("PREP", "IN"),
    ("QTF", "DT"),
    ("DEM", "DT"),
    ("INTJ", "UH"),
    ("WH", "WP"),
    ("LTT", "LS"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub verses: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Lexicon size of the most frequent tag; others shrink with frequency.
    pub lexicon_size: usize,
    /// Tags spelled identically in both tagsets. Each must be in both.
    pub shared_tags: Vec<String>,
    /// Probability that a token carries a shared tag.
    pub shared_rate: f64,
    /// Probability that a non-shared lexicon entry translates into a word
    /// of another source category (fixed per entry).
    pub lexicon_divergence: f64,
    /// Probability that a target token is linked to a different source token.
    pub alignment_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            verses: 2000,
            min_len: 10,
            max_len: 40,
            lexicon_size: 60,
            shared_tags: vec!["NNP".into(), "CD".into()],
            shared_rate: 0.08,
            lexicon_divergence: 0.1,
            alignment_noise: 0.15,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    /// Source tokens carry source tags; target tokens are untagged.
    pub pairs: Vec<VersePair>,
    pub alignments: Vec<Alignment>,
    /// Target side with its true tags.
    pub gold: TaggedCorpus,
    pub shared_tokens: usize,
    pub total_tokens: usize,
}

impl SyntheticCorpus {
    pub fn shared_fraction(&self) -> f64 {
        self.shared_tokens as f64 / self.total_tokens as f64
    }

    /// Source side as a one-column tagged corpus.
    pub fn source_corpus(&self) -> TaggedCorpus {
        TaggedCorpus {
            verses: self.pairs.iter().map(|p| p.source.clone()).collect(),
            tagset_name: "penn".into(),
            columns: Columns::One,
        }
    }
}

/// Re-linked tokens move to a same-class position at most this far away
/// when one exists.
const RELINK_WINDOW: usize = 2;

const ONSETS: &[&str] = &["b", "ch", "d", "f", "g", "gb", "gw", "h", "j", "k", "kp", "kw", "l", "m", "n", "ny", "nw", "p", "r", "s", "sh", "t", "v", "w", "y", "z"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ị", "ọ", "ụ"];
const EN_ONSETS: &[&str] = &["b", "br", "c", "cl", "d", "dr", "f", "fl", "g", "gr", "h", "l", "m", "n", "p", "pl", "r", "s", "st", "t", "th", "tr", "w"];
const EN_CODAS: &[&str] = &["", "d", "ll", "n", "nd", "r", "rt", "s", "st", "t", "ck", "ng"];
const EN_VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ea", "oo", "ai"];

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs[rng.random_range(0..xs.len())]
}

fn target_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(1..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(pick(rng, ONSETS));
        w.push_str(pick(rng, VOWELS));
    }
    w
}

fn source_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(1..=2);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(pick(rng, EN_ONSETS));
        w.push_str(pick(rng, EN_VOWELS));
    }
    w.push_str(pick(rng, EN_CODAS));
    w
}

struct Lexicon {
    /// (target form, source form, divergent source tag), most frequent first.
    words: Vec<(String, String, Option<usize>)>,
    zipf: WeightedIndex<f64>,
}

impl Lexicon {
    fn new(
        size: usize,
        rng: &mut ChaCha8Rng,
        seen: &mut HashSet<String>,
        fresh: impl Fn(&mut ChaCha8Rng) -> String,
    ) -> Lexicon {
        let mut words = Vec::with_capacity(size);
        while words.len() < size {
            let w = fresh(rng);
            if seen.insert(w.clone()) {
                let mut gloss = source_word(rng);
                while !seen.insert(gloss.clone()) {
                    gloss = source_word(rng);
                }
                words.push((w, gloss, None));
            }
        }
        let weights: Vec<f64> = (1..=size).map(|r| 1.0 / (r as f64).powf(1.1)).collect();
        Lexicon {
            words,
            zipf: WeightedIndex::new(weights).expect("positive weights"),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> &(String, String, Option<usize>) {
        &self.words[self.zipf.sample(rng)]
    }
}

/// Stationary distribution of the chain with the given row weights.
fn stationary(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let sums: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let mut p = vec![1.0 / n as f64; n];
    for _ in 0..200 {
        let mut next = vec![0.0; n];
        for (i, row) in rows.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                next[j] += p[i] * w / sums[i];
            }
        }
        p = next;
    }
    p
}

fn check_rate(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Parameter(format!("{name} {x} outside [0, 1]")));
    }
    Ok(())
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<SyntheticCorpus> {
    check_rate("shared rate", config.shared_rate)?;
    check_rate("lexicon divergence", config.lexicon_divergence)?;
    check_rate("alignment noise", config.alignment_noise)?;
    if config.verses == 0 || config.min_len == 0 || config.min_len > config.max_len {
        return Err(Error::Parameter("need verses > 0 and 0 < min_len <= max_len".into()));
    }
    if config.lexicon_size < 10 {
        return Err(Error::Parameter("lexicon size must be at least 10".into()));
    }
    let target_ts = Tagset::igbo();
    let source_ts = Tagset::penn();
    if config.shared_rate > 0.0 && config.shared_tags.is_empty() {
        return Err(Error::Parameter("shared rate > 0 needs shared tags".into()));
    }
    for t in &config.shared_tags {
        if !target_ts.contains(t) || !source_ts.contains(t) {
            return Err(Error::Parameter(format!("shared tag {t} is not in both tagsets")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut seen = HashSet::new();

    let shared_lexicons: Vec<Lexicon> = config
        .shared_tags
        .iter()
        .map(|t| {
            if t == "CD" {
                Lexicon::new(config.lexicon_size, &mut rng, &mut seen, |r| r.random_range(1..1000u32).to_string())
            } else {
                Lexicon::new(config.lexicon_size * 3, &mut rng, &mut seen, |r| {
                    let mut w = target_word(r);
                    w[..1].make_ascii_uppercase();
                    w
                })
            }
        })
        .collect();

    // Each tag has a handful of favoured successors on top of a Zipfian
    // background, so tag context carries information.
    let n = TAG_MAP.len();
    let background: Vec<f64> = {
        let mut ranks: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            ranks.swap(i, rng.random_range(0..=i));
        }
        let mut w = vec![0.0; n];
        for (r, &t) in ranks.iter().enumerate() {
            w[t] = 1.0 / (r as f64 + 1.0);
        }
        w
    };
    let weights: Vec<Vec<f64>> = (0..=n)
        .map(|_| {
            let mut w: Vec<f64> = background.iter().map(|b| 0.15 * b).collect();
            for _ in 0..3 {
                w[rng.random_range(0..n)] += 1.0;
            }
            w
        })
        .collect();
    let rows: Vec<WeightedIndex<f64>> = weights
        .iter()
        .map(|w| WeightedIndex::new(w).expect("positive weights"))
        .collect();

    // Lexicon sizes follow tag frequency, so rare categories have few words.
    let freq = stationary(&weights[..n]);
    let top = freq.iter().cloned().fold(0.0, f64::max);
    let mut lexicons: Vec<Lexicon> = freq
        .iter()
        .map(|f| {
            let size = ((config.lexicon_size as f64 * f / top).round() as usize).max(3);
            Lexicon::new(size, &mut rng, &mut seen, target_word)
        })
        .collect();
    let source_tags: Vec<Tag> = TAG_MAP.iter().map(|(_, s)| Tag::new(*s).expect("valid")).collect();
    let divergent: Vec<Tag> = {
        let mut v: Vec<Tag> = source_tags.clone();
        v.sort();
        v.dedup();
        v
    };
    for (t, lex) in lexicons.iter_mut().enumerate() {
        for entry in &mut lex.words {
            if rng.random_bool(config.lexicon_divergence) {
                let others: Vec<usize> = (0..divergent.len()).filter(|&d| divergent[d] != source_tags[t]).collect();
                entry.2 = Some(others[rng.random_range(0..others.len())]);
            }
        }
    }

    let mut pairs = Vec::with_capacity(config.verses);
    let mut alignments = Vec::with_capacity(config.verses);
    let mut gold_verses = Vec::with_capacity(config.verses);
    let mut shared_tokens = 0;
    let mut total_tokens = 0;
    for v in 0..config.verses {
        let id = VerseId::new("Syn", 1 + (v / 50) as u32, 1 + (v % 50) as u32);
        let len = rng.random_range(config.min_len..=config.max_len);
        let mut target = Vec::with_capacity(len);
        let mut source = Vec::with_capacity(len);
        let mut gold = Vec::with_capacity(len);
        let mut shared = Vec::with_capacity(len);
        let mut prev = n;
        for _ in 0..len {
            if rng.random_bool(config.shared_rate) {
                let k = rng.random_range(0..config.shared_tags.len());
                let (w, g, _) = shared_lexicons[k].draw(&mut rng).clone();
                let tag = Tag::new(&config.shared_tags[k])?;
                target.push(Token::new(w.clone()));
                gold.push(Token::tagged(w, tag.clone()));
                source.push(Token::tagged(g, tag));
                shared.push(true);
            } else {
                let t = rows[prev].sample(&mut rng);
                prev = t;
                let (w, g, alt) = lexicons[t].draw(&mut rng).clone();
                let src_tag = match alt {
                    Some(d) => divergent[d].clone(),
                    None => source_tags[t].clone(),
                };
                target.push(Token::new(w.clone()));
                gold.push(Token::tagged(w, Tag::new(TAG_MAP[t].0)?));
                source.push(Token::tagged(g, src_tag));
                shared.push(false);
            }
        }
        let mut links = Vec::with_capacity(len);
        for t in 0..len {
            let mut s = t;
            if rng.random_bool(config.alignment_noise) {
                let near = |j: usize| j.abs_diff(t) <= RELINK_WINDOW;
                let mut same: Vec<usize> = (0..len).filter(|&j| j != t && shared[j] == shared[t] && near(j)).collect();
                if same.is_empty() {
                    same = (0..len).filter(|&j| j != t && shared[j] == shared[t]).collect();
                }
                if !same.is_empty() {
                    s = same[rng.random_range(0..same.len())];
                }
            }
            links.push((t, s));
        }
        shared_tokens += shared.iter().filter(|&&s| s).count();
        total_tokens += len;
        pairs.push(VersePair {
            source: Verse::new(id.clone(), source),
            target: Verse::new(id.clone(), target),
        });
        alignments.push(Alignment::new(links));
        gold_verses.push(Verse::new(id, gold));
    }
    Ok(SyntheticCorpus {
        pairs,
        alignments,
        gold: TaggedCorpus::new(gold_verses, Columns::One, "igbo")?,
        shared_tokens,
        total_tokens,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            verses: 50,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn tag_map_is_consistent() {
        let igbo = Tagset::igbo();
        let penn = Tagset::penn();
        for (t, s) in TAG_MAP {
            assert!(igbo.contains(t), "{t}");
            assert!(penn.contains(s), "{s}");
            assert!(!igbo.contains(s), "{s} would count as transformed");
        }
    }

    #[test]
    fn seeded() {
        let a = generate_synthetic(&small()).unwrap();
        let b = generate_synthetic(&small()).unwrap();
        assert_eq!(a.gold, b.gold);
        assert_eq!(a.pairs, b.pairs);
        assert_eq!(a.alignments, b.alignments);
        let c = generate_synthetic(&SynthConfig { seed: 8, ..small() }).unwrap();
        assert_ne!(a.gold, c.gold);
    }

    #[test]
    fn one_link_per_target_token() {
        let s = generate_synthetic(&small()).unwrap();
        for (p, a) in s.pairs.iter().zip(&s.alignments) {
            assert_eq!(a.links.len(), p.target.len());
            assert!((0..p.target.len()).all(|t| a.sources_of(t).count() == 1));
            a.check_bounds(p).unwrap();
        }
        assert_eq!(s.total_tokens, s.gold.token_count());
    }

    #[test]
    fn bad_rates_rejected() {
        assert!(generate_synthetic(&SynthConfig { alignment_noise: 1.5, ..small() }).is_err());
        assert!(generate_synthetic(&SynthConfig { shared_tags: vec!["NNC".into()], ..small() }).is_err());
    }
}
