use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{ConfidenceTable, DictKey, DictionaryError, DictionaryMode, RankedEntry, WordDictionary};
use crate::text::PosTag;

pub const TSV_HEADER: &str = "source_word\tpos_tag\trank\ttarget_word\tscore";

/// Rows sorted by (source word, tag, rank); `-` in the tag column for plain
/// dictionaries. Scores use the shortest round-tripping decimal form.
pub fn write_dictionary<W: Write>(dict: &WordDictionary, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TSV_HEADER}")?;
    for (key, list) in dict.iter() {
        let tag = key.tag.map(PosTag::as_str).unwrap_or("-");
        for (rank, entry) in list.iter().enumerate() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                key.word,
                tag,
                rank + 1,
                entry.target,
                entry.score
            )?;
        }
    }
    Ok(())
}

pub fn save_dictionary(dict: &WordDictionary, path: impl AsRef<Path>) -> Result<(), DictionaryError> {
    let mut buf = Vec::new();
    write_dictionary(dict, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Parse the TSV form. The confidence table is rebuilt from list heads.
/// A header-only file yields an empty plain dictionary.
pub fn parse_dictionary(source: &str) -> Result<(WordDictionary, ConfidenceTable), DictionaryError> {
    let mut lines = source.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r') == TSV_HEADER => {}
        _ => {
            return Err(DictionaryError::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
    }

    let mut mode = None;
    let mut lists: BTreeMap<DictKey, Vec<RankedEntry>> = BTreeMap::new();
    for (i, raw) in lines {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let err = |message: String| DictionaryError::Parse { line, message };
        let fields: Vec<&str> = raw.split('\t').collect();
        let [word, tag, rank, target, score] = fields.as_slice() else {
            return Err(err(format!("expected 5 tab-separated fields, found {}", fields.len())));
        };
        let tag = match *tag {
            "-" => None,
            t => Some(t.parse::<PosTag>().map_err(|e| err(e.to_string()))?),
        };
        let row_mode = if tag.is_some() {
            DictionaryMode::PosKeyed
        } else {
            DictionaryMode::Plain
        };
        if *mode.get_or_insert(row_mode) != row_mode {
            return Err(err("plain and POS-keyed rows mixed".into()));
        }
        let rank: usize = rank.parse().map_err(|_| err(format!("invalid rank {rank:?}")))?;
        let score: f64 = score.parse().map_err(|_| err(format!("invalid score {score:?}")))?;
        if !(score.is_finite() && score > 0.0) {
            return Err(err(format!("score must be positive, got {score}")));
        }
        if word.is_empty() || target.is_empty() {
            return Err(err("empty word".into()));
        }
        let key = DictKey {
            word: word.to_string(),
            tag,
        };
        let list = lists.entry(key).or_default();
        if rank != list.len() + 1 {
            return Err(err(format!("expected rank {}, found {rank}", list.len() + 1)));
        }
        if let Some(prev) = list.last() {
            if prev.score < score {
                return Err(err("scores must not increase with rank".into()));
            }
        }
        list.push(RankedEntry {
            target: target.to_string(),
            score,
        });
    }

    let dict = WordDictionary::from_lists(mode.unwrap_or(DictionaryMode::Plain), lists)?;
    let confidence = ConfidenceTable::from_dictionary(&dict);
    Ok((dict, confidence))
}

pub fn load_dictionary(path: impl AsRef<Path>) -> Result<(WordDictionary, ConfidenceTable), DictionaryError> {
    parse_dictionary(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> WordDictionary {
        WordDictionary::from_lists(
            DictionaryMode::PosKeyed,
            [
                (
                    DictKey::tagged("hideout", PosTag::Noun),
                    vec![
                        RankedEntry {
                            target: "cachette".into(),
                            score: 41.118_811_881_188_12,
                        },
                        RankedEntry {
                            target: "la".into(),
                            score: 1.000_000_1,
                        },
                    ],
                ),
                (
                    DictKey::tagged("alice", PosTag::Propn),
                    vec![RankedEntry {
                        target: "alice".into(),
                        score: 0.1 + 0.2,
                    }],
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let dict = sample();
        let mut buf = Vec::new();
        write_dictionary(&dict, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(TSV_HEADER));
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "alice\tPROPN\t1\talice\t0.30000000000000004"
        );
        let (loaded, conf) = parse_dictionary(&text).unwrap();
        assert_eq!(loaded, dict);
        assert_eq!(conf, ConfidenceTable::from_dictionary(&dict));
    }

    #[test]
    fn empty_dictionary_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.tsv");
        save_dictionary(&WordDictionary::empty(DictionaryMode::Plain), &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), format!("{TSV_HEADER}\n"));
        let (loaded, conf) = load_dictionary(&path).unwrap();
        assert!(loaded.is_empty());
        assert!(conf.is_empty());
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let bad_score = format!("{TSV_HEADER}\nstore\t-\t1\tboutique\t3.5\nstore\t-\t2\tmagasin\tlots\n");
        match parse_dictionary(&bad_score) {
            Err(DictionaryError::Parse { line: 3, message }) => assert!(message.contains("score")),
            other => panic!("{other:?}"),
        }
        let short = format!("{TSV_HEADER}\nstore\t-\t1\n");
        assert!(matches!(
            parse_dictionary(&short),
            Err(DictionaryError::Parse { line: 2, .. })
        ));
        let gap = format!("{TSV_HEADER}\nstore\t-\t2\tboutique\t3.5\n");
        assert!(matches!(
            parse_dictionary(&gap),
            Err(DictionaryError::Parse { line: 2, .. })
        ));
        let mixed = format!("{TSV_HEADER}\nstore\t-\t1\tboutique\t3.5\nhat\tNOUN\t1\tchapeau\t3.5\n");
        assert!(matches!(
            parse_dictionary(&mixed),
            Err(DictionaryError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_dictionary("nope\n"),
            Err(DictionaryError::Parse { line: 1, .. })
        ));
    }
}
