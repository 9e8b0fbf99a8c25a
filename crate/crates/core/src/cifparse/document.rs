use std::collections::BTreeMap;

use super::CifError;

/// A CIF data value. `?` and `.` are kept distinct from text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CifValue {
    /// `?`: value unknown.
    Unknown,
    /// `.`: value inapplicable.
    Inapplicable,
    Text(String),
}

impl CifValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            CifValue::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Numeric reading, ignoring a trailing standard uncertainty: `4.056(2)` → 4.056.
    pub fn as_number(&self) -> Option<f64> {
        self.as_str().and_then(parse_number)
    }

    pub fn is_null(&self) -> bool {
        !matches!(self, CifValue::Text(_))
    }
}

/// Parse a CIF number, dropping a parenthesized uncertainty suffix.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let core = match s.find('(') {
        Some(p) if s.ends_with(')') && s[p + 1..s.len() - 1].chars().all(|c| c.is_ascii_digit()) => &s[..p],
        Some(_) => return None,
        None => s,
    };
    core.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CifLoop {
    pub tags: Vec<String>,
    pub rows: Vec<Vec<CifValue>>,
}

impl CifLoop {
    pub fn column(&self, tag: &str) -> Option<usize> {
        self.tags.iter().position(|t| t == tag)
    }
}

/// The first data block of a CIF file. Tags are stored lowercased.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CifDocument {
    pub block: String,
    pub items: BTreeMap<String, CifValue>,
    pub loops: Vec<CifLoop>,
}

impl CifDocument {
    pub fn item(&self, tag: &str) -> Option<&CifValue> {
        self.items.get(tag)
    }

    /// The loop containing `tag`, if any.
    pub fn find_loop(&self, tag: &str) -> Option<&CifLoop> {
        self.loops.iter().find(|l| l.column(tag).is_some())
    }

    /// Every value under `tag`, whether a single item or a loop column.
    pub fn values(&self, tag: &str) -> Vec<&CifValue> {
        if let Some(v) = self.items.get(tag) {
            return vec![v];
        }
        match self.find_loop(tag) {
            Some(l) => {
                let c = l.column(tag).expect("column");
                l.rows.iter().map(|r| &r[c]).collect()
            }
            None => vec![],
        }
    }

    /// Serialize back to CIF text.
    pub fn to_text(&self) -> String {
        let mut out = format!("data_{}\n", self.block);
        for (tag, v) in &self.items {
            out.push_str(tag);
            out.push(' ');
            write_value(&mut out, v);
            out.push('\n');
        }
        for l in &self.loops {
            out.push_str("loop_\n");
            for t in &l.tags {
                out.push_str(t);
                out.push('\n');
            }
            for row in &l.rows {
                for (k, v) in row.iter().enumerate() {
                    if k > 0 {
                        out.push(' ');
                    }
                    write_value(&mut out, v);
                }
                out.push('\n');
            }
        }
        out
    }
}

fn write_value(out: &mut String, v: &CifValue) {
    match v {
        CifValue::Unknown => out.push('?'),
        CifValue::Inapplicable => out.push('.'),
        CifValue::Text(s) => {
            let bare = !s.is_empty()
                && !s.chars().any(char::is_whitespace)
                && !s.starts_with(['_', '#', '$', '\'', '"', ';', '[', ']'])
                && s != "?"
                && s != "."
                && !is_reserved(s);
            if bare {
                out.push_str(s);
            } else if s.contains('\n') || (s.contains("' ") && s.contains("\" ")) {
                out.push_str("\n;");
                out.push_str(s);
                out.push_str("\n;");
            } else if s.contains("' ") || s.ends_with('\'') {
                out.push('"');
                out.push_str(s);
                out.push('"');
            } else {
                out.push('\'');
                out.push_str(s);
                out.push('\'');
            }
        }
    }
}

fn is_reserved(s: &str) -> bool {
    let l = s.to_ascii_lowercase();
    l.starts_with("data_") || l.starts_with("save_") || l == "loop_" || l == "global_" || l == "stop_"
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Data(String),
    Loop,
    Tag(String),
    Value(CifValue),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Lexer<'a> {
    fn at_line_start(&self) -> bool {
        self.pos == 0 || self.src.as_bytes()[self.pos - 1] == b'\n'
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn bump(&mut self) {
        if self.peek() == Some(b'\n') {
            self.line += 1;
        }
        self.pos += 1;
    }

    /// Next token with the line it started on.
    fn next(&mut self) -> Result<Option<(Tok, usize)>, CifError> {
        loop {
            match self.peek() {
                None => return Ok(None),
                Some(c) if c.is_ascii_whitespace() => self.bump(),
                Some(b'#') => {
                    while !matches!(self.peek(), None | Some(b'\n')) {
                        self.bump();
                    }
                }
                Some(_) => break,
            }
        }
        let line = self.line;
        let bytes = self.src.as_bytes();
        let c = bytes[self.pos];
        if c == b';' && self.at_line_start() {
            // text field runs to the next line beginning with ';'
            let start = self.pos + 1;
            let mut i = start;
            loop {
                match self.src[i..].find('\n') {
                    None => return Err(CifError::Unterminated { what: "text field", line }),
                    Some(nl) => {
                        i += nl + 1;
                        if bytes.get(i) == Some(&b';') {
                            let body = &self.src[start..i - 1];
                            let body = body.strip_prefix('\n').or_else(|| body.strip_prefix("\r\n")).unwrap_or(body);
                            let text = body.trim_end_matches('\r').to_string();
                            while self.pos < i + 1 {
                                self.bump();
                            }
                            return Ok(Some((Tok::Value(CifValue::Text(text)), line)));
                        }
                    }
                }
            }
        }
        if c == b'\'' || c == b'"' {
            // quote closes only when followed by whitespace or end of input
            let mut i = self.pos + 1;
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => return Err(CifError::Unterminated { what: "quoted string", line }),
                    Some(&q) if q == c && bytes.get(i + 1).is_none_or(|n| n.is_ascii_whitespace()) => {
                        let text = self.src[self.pos + 1..i].to_string();
                        while self.pos <= i {
                            self.bump();
                        }
                        return Ok(Some((Tok::Value(CifValue::Text(text)), line)));
                    }
                    Some(_) => i += 1,
                }
            }
        }
        let start = self.pos;
        while self.peek().is_some_and(|b| !b.is_ascii_whitespace()) {
            self.bump();
        }
        let word = &self.src[start..self.pos];
        let lower = word.to_ascii_lowercase();
        let tok = if let Some(name) = lower.strip_prefix("data_") {
            let _ = name;
            Tok::Data(word[5..].to_string())
        } else if lower == "loop_" {
            Tok::Loop
        } else if lower.starts_with("save_") {
            return Err(CifError::Unsupported { feature: "save frame", line });
        } else if lower == "global_" {
            return Err(CifError::Unsupported { feature: "global block", line });
        } else if lower == "stop_" {
            return Err(CifError::Unsupported { feature: "nested loop (stop_)", line });
        } else if word.starts_with('_') {
            Tok::Tag(lower)
        } else if word == "?" {
            Tok::Value(CifValue::Unknown)
        } else if word == "." {
            Tok::Value(CifValue::Inapplicable)
        } else {
            Tok::Value(CifValue::Text(word.to_string()))
        };
        Ok(Some((tok, line)))
    }
}

/// Parse the first data block of a CIF 1.1 text.
pub fn parse(text: &str) -> Result<CifDocument, CifError> {
    let mut lx = Lexer { src: text, pos: 0, line: 1 };
    let mut toks = Vec::new();
    while let Some(t) = lx.next()? {
        // stop at a second data block
        if matches!(t.0, Tok::Data(_)) && toks.iter().any(|(x, _): &(Tok, usize)| matches!(x, Tok::Data(_))) {
            break;
        }
        toks.push(t);
    }
    let mut it = toks.into_iter().peekable();
    let block = match it.next() {
        Some((Tok::Data(name), _)) => name,
        Some((_, line)) => return Err(CifError::Syntax { line, msg: "content before data_ block".into() }),
        None => return Err(CifError::NoDataBlock),
    };
    let mut doc = CifDocument { block, ..Default::default() };
    let mut seen = std::collections::BTreeSet::new();
    let mut claim = |tag: &str, line: usize| -> Result<(), CifError> {
        if seen.insert(tag.to_string()) {
            Ok(())
        } else {
            Err(CifError::Syntax { line, msg: format!("duplicate tag {tag}") })
        }
    };
    while let Some((tok, line)) = it.next() {
        match tok {
            Tok::Tag(tag) => {
                claim(&tag, line)?;
                match it.next() {
                    Some((Tok::Value(v), _)) => {
                        doc.items.insert(tag, v);
                    }
                    _ => return Err(CifError::Syntax { line, msg: format!("tag {tag} has no value") }),
                }
            }
            Tok::Loop => {
                let mut tags = Vec::new();
                while let Some((Tok::Tag(_), _)) = it.peek() {
                    let Some((Tok::Tag(t), l)) = it.next() else { unreachable!() };
                    claim(&t, l)?;
                    tags.push(t);
                }
                if tags.is_empty() {
                    return Err(CifError::Syntax { line, msg: "loop_ without tags".into() });
                }
                let mut cells = Vec::new();
                while let Some((Tok::Value(_), _)) = it.peek() {
                    let Some((Tok::Value(v), _)) = it.next() else { unreachable!() };
                    cells.push(v);
                }
                if cells.len() % tags.len() != 0 {
                    return Err(CifError::LoopArity { line, tags: tags.len(), cells: cells.len() });
                }
                let rows = cells.chunks(tags.len()).map(<[CifValue]>::to_vec).collect();
                doc.loops.push(CifLoop { tags, rows });
            }
            Tok::Value(_) => return Err(CifError::Syntax { line, msg: "value without a tag".into() }),
            Tok::Data(_) => unreachable!("second block filtered above"),
        }
    }
    Ok(doc)
}
