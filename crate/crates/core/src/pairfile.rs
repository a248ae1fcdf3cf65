//! Plain-text pair files.
//!
//! Pairs are separated by a line `----`, the two queries of a pair by a line
//! `--`. Lines starting with `#` before the first query are headers:
//! `# id: <name>`, `# expect: equivalent|nonequivalent`, and any other
//! `# key: value` which is kept as metadata. Other comment lines are ignored.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Expect {
    Equivalent,
    NonEquivalent,
    #[default]
    Unspecified,
}

impl Expect {
    pub fn name(self) -> &'static str {
        match self {
            Expect::Equivalent => "equivalent",
            Expect::NonEquivalent => "nonequivalent",
            Expect::Unspecified => "unspecified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairEntry {
    pub id: String,
    pub q1: String,
    pub q2: String,
    pub expect: Expect,
    /// Extra `# key: value` headers in file order. Repeated keys are kept.
    pub meta: Vec<(String, String)>,
}

impl PairEntry {
    pub fn meta<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.meta.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairFile {
    pub entries: Vec<PairEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PairFileError {
    #[error("line {line}: pair has {parts} queries, expected 2")]
    Arity { line: usize, parts: usize },
    #[error("line {line}: empty query")]
    EmptyQuery { line: usize },
    #[error("line {line}: unknown expectation {value:?}")]
    BadExpect { line: usize, value: String },
    #[error("duplicate pair id {0:?}")]
    DuplicateId(String),
}

impl PairFile {
    pub fn parse(text: &str) -> Result<PairFile, PairFileError> {
        let mut entries = Vec::new();
        let mut block: Vec<(usize, &str)> = Vec::new();
        let lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        for (no, line) in lines.chain(std::iter::once((0, "----"))) {
            if line.trim() == "----" {
                if let Some(e) = parse_block(&block, entries.len())? {
                    entries.push(e);
                }
                block.clear();
            } else {
                block.push((no, line));
            }
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(PairFileError::DuplicateId(e.id.clone()));
            }
        }
        Ok(PairFile { entries })
    }
}

fn parse_block(block: &[(usize, &str)], index: usize) -> Result<Option<PairEntry>, PairFileError> {
    let first_line = block.first().map_or(0, |(n, _)| *n);
    let mut entry = PairEntry { id: format!("pair-{}", index + 1), ..PairEntry::default() };
    let mut parts: Vec<Vec<&str>> = vec![Vec::new()];
    for &(no, line) in block {
        let t = line.trim();
        if t == "--" {
            parts.push(Vec::new());
            continue;
        }
        if let Some(c) = t.strip_prefix('#') {
            if parts.len() == 1 && parts[0].is_empty() {
                if let Some((k, v)) = c.split_once(':') {
                    let (k, v) = (k.trim().to_ascii_lowercase(), v.trim().to_string());
                    match k.as_str() {
                        "id" => entry.id = v,
                        "expect" => {
                            entry.expect = match v.to_ascii_lowercase().as_str() {
                                "equivalent" => Expect::Equivalent,
                                "nonequivalent" | "non-equivalent" | "not equivalent" => Expect::NonEquivalent,
                                "unspecified" => Expect::Unspecified,
                                _ => return Err(PairFileError::BadExpect { line: no, value: v }),
                            }
                        }
                        _ => entry.meta.push((k, v)),
                    }
                }
            }
            continue;
        }
        if !t.is_empty() {
            parts.last_mut().unwrap().push(line.trim_end());
        }
    }
    let empty = parts.iter().all(Vec::is_empty);
    if empty && parts.len() == 1 {
        return Ok(None);
    }
    if parts.len() != 2 {
        return Err(PairFileError::Arity { line: first_line, parts: parts.len() });
    }
    if parts.iter().any(Vec::is_empty) {
        return Err(PairFileError::EmptyQuery { line: first_line });
    }
    entry.q1 = parts[0].join("\n");
    entry.q2 = parts[1].join("\n");
    Ok(Some(entry))
}

impl fmt::Display for PairFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                writeln!(f, "----")?;
            }
            writeln!(f, "# id: {}", e.id)?;
            if e.expect != Expect::Unspecified {
                writeln!(f, "# expect: {}", e.expect.name())?;
            }
            for (k, v) in &e.meta {
                writeln!(f, "# {k}: {v}")?;
            }
            writeln!(f, "{}", e.q1)?;
            writeln!(f, "--")?;
            writeln!(f, "{}", e.q2)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_headers_and_multiline_queries() {
        let text = "# id: a\n# expect: equivalent\nMATCH (n)\nRETURN n\n--\nMATCH (m) RETURN m\n----\n# note\nMATCH (n) RETURN n\n--\nMATCH (n) RETURN n.p\n";
        let f = PairFile::parse(text).unwrap();
        assert_eq!(f.entries.len(), 2);
        assert_eq!(f.entries[0].id, "a");
        assert_eq!(f.entries[0].q1, "MATCH (n)\nRETURN n");
        assert_eq!(f.entries[0].expect, Expect::Equivalent);
        assert_eq!(f.entries[1].id, "pair-2");
        assert_eq!(f.entries[1].expect, Expect::Unspecified);
    }

    #[test]
    fn round_trips() {
        let f = PairFile {
            entries: vec![PairEntry {
                id: "x".into(),
                q1: "MATCH (n) RETURN n".into(),
                q2: "MATCH (m) RETURN m".into(),
                expect: Expect::NonEquivalent,
                meta: vec![("rule".into(), "flip-direction".into())],
            }],
        };
        assert_eq!(PairFile::parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn empty_file_has_no_entries() {
        assert!(PairFile::parse("").unwrap().entries.is_empty());
        assert!(PairFile::parse("# only a comment\n----\n").unwrap().entries.is_empty());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(PairFile::parse("MATCH (n) RETURN n\n"), Err(PairFileError::Arity { .. })));
        assert!(matches!(PairFile::parse("MATCH (n) RETURN n\n--\n"), Err(PairFileError::EmptyQuery { .. })));
        assert!(matches!(
            PairFile::parse("# id: a\nA\n--\nB\n----\n# id: a\nA\n--\nB\n"),
            Err(PairFileError::DuplicateId(_))
        ));
        assert!(matches!(PairFile::parse("# expect: maybe\nA\n--\nB\n"), Err(PairFileError::BadExpect { .. })));
    }
}
