//! ARPA text serialization: a \data\ header with per-order entry counts,
//! one \N-grams: section per order, token ids written as decimal strings.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::ngram::model::{Entry, NgramModel};
use crate::{Error, Result};

/// Writes the model in ARPA layout. Lines before \data\ are reserved for
/// comments; entries are sorted by id tuple so equal models serialize to
/// identical bytes.
pub fn write_arpa<W: Write>(model: &NgramModel, sink: &mut W) -> Result<()> {
    let sections: Vec<_> = (1..=model.order()).map(|n| model.entries(n)).collect();
    if sections[0].is_empty() {
        return Err(Error::InvalidArgument(
            "write_arpa: model has no unigrams".to_string(),
        ));
    }
    writeln!(sink, "\\data\\")?;
    for (i, section) in sections.iter().enumerate() {
        writeln!(sink, "ngram {}={}", i + 1, section.len())?;
    }
    for (i, section) in sections.iter().enumerate() {
        writeln!(sink)?;
        writeln!(sink, "\\{}-grams:", i + 1)?;
        for (key, logp, logbo) in section {
            let ids: Vec<String> = key.iter().map(u32::to_string).collect();
            match logbo {
                Some(bo) => writeln!(sink, "{:.7}\t{}\t{:.7}", logp, ids.join(" "), bo)?,
                None => writeln!(sink, "{:.7}\t{}", logp, ids.join(" "))?,
            }
        }
    }
    writeln!(sink)?;
    writeln!(sink, "\\end\\")?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::ArpaParse {
        line,
        message: message.into(),
    }
}

/// Reads a model written by [`write_arpa`]. Anything before \data\ is
/// ignored; declared counts must match the section contents.
pub fn read_arpa<R: BufRead>(source: R) -> Result<NgramModel> {
    let lines: Vec<String> = source.lines().collect::<std::io::Result<_>>()?;
    let mut i = 0;

    while i < lines.len() && lines[i].trim() != "\\data\\" {
        i += 1;
    }
    if i == lines.len() {
        return Err(parse_err(lines.len(), "missing \\data\\ header"));
    }
    i += 1;

    let mut declared: Vec<usize> = Vec::new();
    while i < lines.len() {
        let line = lines[i].trim();
        if line.is_empty() {
            i += 1;
            continue;
        }
        if line.starts_with('\\') {
            break;
        }
        let rest = line
            .strip_prefix("ngram ")
            .ok_or_else(|| parse_err(i + 1, format!("expected \"ngram N=COUNT\", got {line:?}")))?;
        let (n, count) = rest
            .split_once('=')
            .ok_or_else(|| parse_err(i + 1, format!("expected \"ngram N=COUNT\", got {line:?}")))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad order {n:?}")))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad count {count:?}")))?;
        if n != declared.len() + 1 {
            return Err(parse_err(
                i + 1,
                format!("expected declaration for order {}, got {n}", declared.len() + 1),
            ));
        }
        declared.push(count);
        i += 1;
    }
    if declared.is_empty() {
        return Err(parse_err(i + 1, "no ngram declarations after \\data\\"));
    }

    let order = declared.len();
    let mut tables: Vec<HashMap<Vec<u32>, Entry>> = vec![HashMap::new(); order];
    for n in 1..=order {
        while i < lines.len() && lines[i].trim().is_empty() {
            i += 1;
        }
        let header = format!("\\{n}-grams:");
        if i == lines.len() || lines[i].trim() != header {
            return Err(parse_err(i + 1, format!("expected {header} section")));
        }
        i += 1;
        let mut seen = 0usize;
        while i < lines.len() {
            let line = lines[i].trim();
            if line.is_empty() || line.starts_with('\\') {
                break;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 && fields.len() != 3 {
                return Err(parse_err(
                    i + 1,
                    format!("expected 2 or 3 tab-separated fields, got {}", fields.len()),
                ));
            }
            let logp: f64 = fields[0]
                .parse()
                .map_err(|_| parse_err(i + 1, format!("bad log probability {:?}", fields[0])))?;
            if !logp.is_finite() || logp > 0.0 {
                return Err(parse_err(
                    i + 1,
                    format!("log probability {logp} outside (-inf, 0]"),
                ));
            }
            let ids: Vec<u32> = fields[1]
                .split_whitespace()
                .map(|t| {
                    t.parse::<u32>()
                        .map_err(|_| parse_err(i + 1, format!("bad token id {t:?}")))
                })
                .collect::<Result<_>>()?;
            if ids.len() != n {
                return Err(parse_err(
                    i + 1,
                    format!("expected {n} ids in a {n}-gram, got {}", ids.len()),
                ));
            }
            let logbo = if fields.len() == 3 {
                if n == order {
                    return Err(parse_err(i + 1, "backoff weight on a top-order entry"));
                }
                let bo: f64 = fields[2]
                    .parse()
                    .map_err(|_| parse_err(i + 1, format!("bad backoff weight {:?}", fields[2])))?;
                if !bo.is_finite() {
                    return Err(parse_err(i + 1, format!("non-finite backoff weight {bo}")));
                }
                Some(bo)
            } else {
                None
            };
            if tables[n - 1].insert(ids, Entry { logp, logbo }).is_some() {
                return Err(parse_err(i + 1, "duplicate n-gram"));
            }
            seen += 1;
            i += 1;
        }
        if seen != declared[n - 1] {
            return Err(parse_err(
                i + 1,
                format!(
                    "\\{n}-grams: declared {} entries, found {seen}",
                    declared[n - 1]
                ),
            ));
        }
    }

    while i < lines.len() && lines[i].trim().is_empty() {
        i += 1;
    }
    if i == lines.len() || lines[i].trim() != "\\end\\" {
        return Err(parse_err(i + 1, "missing \\end\\ marker"));
    }
    Ok(NgramModel::from_tables(order, tables))
}
