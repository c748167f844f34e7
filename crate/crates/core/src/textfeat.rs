//! Essay text features: readability scores, lexicon sentiment, and the
//! fixed-width numeric vector extracted from each personal-insight response.
//!
//! Tokenization is deliberately simple and deterministic: a word is a maximal
//! run of alphabetic characters, a sentence is a `.!?`-delimited segment that
//! contains at least one word, and syllables come from a vowel-group heuristic.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Counts derived from one text by the shared tokenizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TextStats {
    /// Non-whitespace characters.
    pub char_count: usize,
    /// Maximal alphabetic runs.
    pub word_count: usize,
    /// Segments between `.!?` runs that contain at least one word.
    pub sentence_count: usize,
    /// Heuristic syllables summed over all words.
    pub syllable_count: usize,
    /// Words with exactly one syllable.
    pub monosyllable_count: usize,
    /// Words with three or more syllables.
    pub polysyllable_count: usize,
}

fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
}

/// Heuristic syllable count: lowercase the word, count maximal groups of
/// `aeiouy`, subtract one for a trailing silent `e` (unless it ends in a
/// consonant followed by `le`), and floor at one. Non-alphabetic characters
/// are stripped first; an empty word yields zero.
pub fn count_syllables(word: &str) -> usize {
    let clean: String = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if clean.is_empty() {
        return 0;
    }
    let chars: Vec<char> = clean.chars().collect();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');

    let mut groups = 0usize;
    let mut in_group = false;
    for &c in &chars {
        if is_vowel(c) {
            if !in_group {
                groups += 1;
            }
            in_group = true;
        } else {
            in_group = false;
        }
    }

    let n = chars.len();
    let silent_e = chars[n - 1] == 'e' && {
        // "-le" after a consonant ("table", "little") keeps its syllable.
        let consonant_le = n >= 3 && chars[n - 2] == 'l' && !is_vowel(chars[n - 3]);
        !consonant_le
    };
    if silent_e && groups > 1 {
        groups -= 1;
    }
    groups.max(1)
}

/// Tokenizes one text into the counts used by the readability formulas.
pub fn text_stats(text: &str) -> TextStats {
    let mut stats = TextStats {
        char_count: text.chars().filter(|c| !c.is_whitespace()).count(),
        ..TextStats::default()
    };
    for word in words(text) {
        stats.word_count += 1;
        let syl = count_syllables(word);
        stats.syllable_count += syl;
        if syl == 1 {
            stats.monosyllable_count += 1;
        } else if syl >= 3 {
            stats.polysyllable_count += 1;
        }
    }
    stats.sentence_count = text
        .split(['.', '!', '?'])
        .filter(|seg| words(seg).next().is_some())
        .count();
    stats
}

/// Flesch Reading Ease: `206.835 - 1.015 * (words/sentences) - 84.6 *
/// (syllables/words)`. Errors on zero words or zero sentences.
pub fn flesch_reading_ease(stats: &TextStats) -> Result<f64> {
    if stats.word_count == 0 || stats.sentence_count == 0 {
        return Err(Error::DegenerateInput(
            "readability needs at least one word and one sentence".into(),
        ));
    }
    let wps = stats.word_count as f64 / stats.sentence_count as f64;
    let spw = stats.syllable_count as f64 / stats.word_count as f64;
    Ok(206.835 - 1.015 * wps - 84.6 * spw)
}

/// Flesch-Kincaid grade level: `0.39 * (words/sentences) + 11.8 *
/// (syllables/words) - 15.59`. Errors on zero words or zero sentences.
pub fn flesch_kincaid_grade(stats: &TextStats) -> Result<f64> {
    if stats.word_count == 0 || stats.sentence_count == 0 {
        return Err(Error::DegenerateInput(
            "readability needs at least one word and one sentence".into(),
        ));
    }
    let wps = stats.word_count as f64 / stats.sentence_count as f64;
    let spw = stats.syllable_count as f64 / stats.word_count as f64;
    Ok(0.39 * wps + 11.8 * spw - 15.59)
}

/// Word -> (polarity, subjectivity) table with polarity in `[-1, 1]` and
/// subjectivity in `[0, 1]`.
#[derive(Debug, Clone, Default)]
pub struct SentimentLexicon {
    map: HashMap<String, (f64, f64)>,
}

impl SentimentLexicon {
    /// Parses tab-separated `word<TAB>polarity<TAB>subjectivity` lines.
    /// Blank lines and lines starting with `#` are skipped; words are
    /// lowercased and later entries overwrite earlier ones.
    pub fn parse(src: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (lineno, raw) in src.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (word, pol, subj) =
                match (fields.next(), fields.next(), fields.next(), fields.next()) {
                    (Some(w), Some(p), Some(s), None) => (w, p, s),
                    _ => {
                        return Err(Error::Parse(format!(
                            "lexicon line {}: expected 3 tab-separated fields",
                            lineno + 1
                        )))
                    }
                };
            let polarity: f64 = pol
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("lexicon line {}: bad polarity", lineno + 1)))?;
            let subjectivity: f64 = subj.trim().parse().map_err(|_| {
                Error::Parse(format!("lexicon line {}: bad subjectivity", lineno + 1))
            })?;
            if !(-1.0..=1.0).contains(&polarity) {
                return Err(Error::Parse(format!(
                    "lexicon line {}: polarity {} outside [-1, 1]",
                    lineno + 1,
                    polarity
                )));
            }
            if !(0.0..=1.0).contains(&subjectivity) {
                return Err(Error::Parse(format!(
                    "lexicon line {}: subjectivity {} outside [0, 1]",
                    lineno + 1,
                    subjectivity
                )));
            }
            map.insert(word.trim().to_lowercase(), (polarity, subjectivity));
        }
        Ok(SentimentLexicon { map })
    }

    /// The lexicon compiled into the library.
    pub fn bundled() -> &'static SentimentLexicon {
        use std::sync::OnceLock;
        static BUNDLED: OnceLock<SentimentLexicon> = OnceLock::new();
        BUNDLED.get_or_init(|| {
            SentimentLexicon::parse(include_str!("../assets/lexicon.tsv"))
                .expect("bundled lexicon is well-formed")
        })
    }

    pub fn lookup(&self, word: &str) -> Option<(f64, f64)> {
        self.map.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Mean (polarity, subjectivity) over every token occurrence found in the
/// lexicon; `(0, 0)` when nothing matches.
pub fn sentiment_scores(text: &str, lexicon: &SentimentLexicon) -> (f64, f64) {
    let mut pol_sum = 0.0;
    let mut subj_sum = 0.0;
    let mut matched = 0usize;
    for word in words(text) {
        if let Some((p, s)) = lexicon.lookup(&word.to_lowercase()) {
            pol_sum += p;
            subj_sum += s;
            matched += 1;
        }
    }
    if matched == 0 {
        (0.0, 0.0)
    } else {
        (pol_sum / matched as f64, subj_sum / matched as f64)
    }
}

/// Numeric features extracted from one essay response. Readability fields
/// are `NaN` when the text has no words or no sentences; downstream
/// imputation treats `NaN` as missing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiqFeatures {
    pub char_count: f64,
    pub word_count: f64,
    pub sentence_count: f64,
    pub flesch_reading_ease: f64,
    pub flesch_kincaid_grade: f64,
    pub polarity: f64,
    pub subjectivity: f64,
    pub syllable_ratio: f64,
}

/// Per-feature name suffixes, in the order produced by [`PiqFeatures::to_vec`].
pub const PIQ_FEATURE_NAMES: [&str; 8] = [
    "char_count",
    "word_count",
    "sentence_count",
    "flesch_reading_ease",
    "flesch_kincaid_grade",
    "polarity",
    "subjectivity",
    "syllable_ratio",
];

impl PiqFeatures {
    pub fn to_vec(self) -> Vec<f64> {
        vec![
            self.char_count,
            self.word_count,
            self.sentence_count,
            self.flesch_reading_ease,
            self.flesch_kincaid_grade,
            self.polarity,
            self.subjectivity,
            self.syllable_ratio,
        ]
    }
}

/// Extracts the full feature vector for one essay. The syllable ratio is
/// `monosyllables / max(polysyllables, 1)`.
pub fn extract_piq_features(text: &str, lexicon: &SentimentLexicon) -> PiqFeatures {
    let stats = text_stats(text);
    let (polarity, subjectivity) = sentiment_scores(text, lexicon);
    PiqFeatures {
        char_count: stats.char_count as f64,
        word_count: stats.word_count as f64,
        sentence_count: stats.sentence_count as f64,
        flesch_reading_ease: flesch_reading_ease(&stats).unwrap_or(f64::NAN),
        flesch_kincaid_grade: flesch_kincaid_grade(&stats).unwrap_or(f64::NAN),
        polarity,
        subjectivity,
        syllable_ratio: stats.monosyllable_count as f64 / (stats.polysyllable_count.max(1)) as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn syllable_counts_match_hand_checked_words() {
        for (word, expected) in [
            ("cat", 1),
            ("the", 1),
            ("sat", 1),
            ("make", 1),
            ("table", 2),
            ("little", 2),
            ("whale", 1),
            ("style", 1),
            ("beautiful", 3),
            ("queue", 1),
            ("rhythm", 1),
            ("university", 5),
            ("e", 1),
            ("strength", 1),
        ] {
            assert_eq!(count_syllables(word), expected, "word {word:?}");
        }
        assert_eq!(count_syllables("CAT"), 1);
        assert_eq!(count_syllables("can't"), 1);
        assert_eq!(count_syllables("123"), 0);
        assert_eq!(count_syllables(""), 0);
    }

    #[test]
    fn stats_for_short_sentence() {
        let stats = text_stats("The cat sat.");
        assert_eq!(
            stats,
            TextStats {
                char_count: 10,
                word_count: 3,
                sentence_count: 1,
                syllable_count: 3,
                monosyllable_count: 3,
                polysyllable_count: 0,
            }
        );
    }

    #[test]
    fn sentence_splitting_ignores_wordless_segments() {
        assert_eq!(text_stats("Hello... world!").sentence_count, 2);
        assert_eq!(text_stats("Wait. What?! No.").sentence_count, 3);
        assert_eq!(text_stats("no terminator at all").sentence_count, 1);
        assert_eq!(text_stats("...").sentence_count, 0);
        assert_eq!(text_stats("").sentence_count, 0);
    }

    #[test]
    fn readability_matches_hand_computed_values() {
        let stats = text_stats("The cat sat.");
        let fre = flesch_reading_ease(&stats).unwrap();
        let fk = flesch_kincaid_grade(&stats).unwrap();
        // 206.835 - 1.015 * 3 - 84.6 * 1 and 0.39 * 3 + 11.8 * 1 - 15.59.
        assert!((fre - 119.19).abs() < 1e-9, "fre = {fre}");
        assert!((fk - -2.62).abs() < 1e-9, "fk = {fk}");

        let one_word = TextStats {
            char_count: 4,
            word_count: 1,
            sentence_count: 1,
            syllable_count: 1,
            monosyllable_count: 1,
            polysyllable_count: 0,
        };
        let fre = flesch_reading_ease(&one_word).unwrap();
        assert!((fre - 121.22).abs() < 1e-9, "fre = {fre}");

        let longer = TextStats {
            char_count: 50,
            word_count: 10,
            sentence_count: 1,
            syllable_count: 15,
            monosyllable_count: 6,
            polysyllable_count: 1,
        };
        let fk = flesch_kincaid_grade(&longer).unwrap();
        assert!((fk - 6.01).abs() < 1e-9, "fk = {fk}");
    }

    #[test]
    fn readability_rejects_degenerate_stats() {
        let empty = text_stats("");
        assert!(flesch_reading_ease(&empty).is_err());
        assert!(flesch_kincaid_grade(&empty).is_err());
        let numbers_only = text_stats("123 456.");
        assert!(flesch_reading_ease(&numbers_only).is_err());
    }

    #[test]
    fn lexicon_parses_and_validates() {
        let lex = SentimentLexicon::parse("# comment\n\ngood\t0.7\t0.6\nBAD\t-0.7\t0.7\n").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.lookup("good"), Some((0.7, 0.6)));
        assert_eq!(lex.lookup("bad"), Some((-0.7, 0.7)));
        assert_eq!(lex.lookup("ugly"), None);

        assert!(SentimentLexicon::parse("oops\t2.0\t0.5\n").is_err());
        assert!(SentimentLexicon::parse("oops\t0.5\t-0.1\n").is_err());
        assert!(SentimentLexicon::parse("toofew\t0.5\n").is_err());
        assert!(SentimentLexicon::parse("toomany\t0.5\t0.5\t0.5\n").is_err());
        assert!(SentimentLexicon::parse("notanum\tx\t0.5\n").is_err());
    }

    #[test]
    fn bundled_lexicon_has_expected_anchors() {
        let lex = SentimentLexicon::bundled();
        assert!(
            lex.len() >= 200,
            "bundled lexicon has {} entries",
            lex.len()
        );
        assert_eq!(lex.lookup("good"), Some((0.7, 0.6)));
        assert_eq!(lex.lookup("bad"), Some((-0.7, 0.7)));
    }

    #[test]
    fn sentiment_averages_matched_occurrences() {
        let lex = SentimentLexicon::bundled();
        let (pol, subj) = sentiment_scores("A good day, a bad day.", lex);
        assert!((pol - 0.0).abs() < 1e-12);
        assert!((subj - 0.65).abs() < 1e-12);

        let (pol, subj) = sentiment_scores("Good good bad.", lex);
        assert!((pol - (0.7 + 0.7 - 0.7) / 3.0).abs() < 1e-12);
        assert!((subj - (0.6 + 0.6 + 0.7) / 3.0).abs() < 1e-12);

        assert_eq!(sentiment_scores("", lex), (0.0, 0.0));
        assert_eq!(sentiment_scores("zzz qqq", lex), (0.0, 0.0));
    }

    #[test]
    fn piq_features_for_normal_and_empty_text() {
        let lex = SentimentLexicon::bundled();
        let f = extract_piq_features("The cat sat.", lex);
        assert_eq!(f.char_count, 10.0);
        assert_eq!(f.word_count, 3.0);
        assert_eq!(f.sentence_count, 1.0);
        assert!((f.flesch_reading_ease - 119.19).abs() < 1e-9);
        assert!((f.flesch_kincaid_grade - -2.62).abs() < 1e-9);
        assert_eq!(f.syllable_ratio, 3.0);

        let empty = extract_piq_features("", lex);
        assert_eq!(empty.char_count, 0.0);
        assert_eq!(empty.word_count, 0.0);
        assert!(empty.flesch_reading_ease.is_nan());
        assert!(empty.flesch_kincaid_grade.is_nan());
        assert_eq!(empty.polarity, 0.0);
        assert_eq!(empty.syllable_ratio, 0.0);

        assert_eq!(PIQ_FEATURE_NAMES.len(), f.to_vec().len());
    }

    proptest! {
        #[test]
        fn alphabetic_words_have_at_least_one_syllable(word in "[a-zA-Z]{1,20}") {
            prop_assert!(count_syllables(&word) >= 1);
        }

        #[test]
        fn stats_are_internally_consistent(text in ".{0,200}") {
            let stats = text_stats(&text);
            prop_assert!(stats.char_count <= text.chars().count());
            prop_assert!(stats.monosyllable_count + stats.polysyllable_count <= stats.word_count);
            prop_assert!(stats.syllable_count >= stats.word_count);
            if stats.word_count > 0 {
                prop_assert!(stats.sentence_count >= 1);
            }
        }

        #[test]
        fn sentiment_stays_in_range(text in ".{0,200}") {
            let (pol, subj) = sentiment_scores(&text, SentimentLexicon::bundled());
            prop_assert!((-1.0..=1.0).contains(&pol));
            prop_assert!((0.0..=1.0).contains(&subj));
        }
    }
}
