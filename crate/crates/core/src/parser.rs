//! The `.crn` reaction format.
//!
//! One reaction per line, `#` starts a comment:
//!
//! ```text
//! A + B -> C ; k=2.5
//! 2 X <-> Y ; k=1, kr=0.5
//! 0 -> A ; k=1
//! ```
//!
//! `<->` expands into a forward and a backward reaction and needs both
//! `k` and `kr`. Coefficients are decimals `>= 1`; `0` alone denotes the
//! zero complex. Species are indexed in order of first appearance unless
//! a leading `#species: A B C` line fixes the order.

use std::fmt;

use crate::network::{ReactionNetwork, ReactionSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    SyntaxError,
    MissingRate,
    CoefficientOutOfRange,
    NonpositiveRate,
    DuplicateSpeciesInTerm,
    TrivialReaction,
}

impl ParseErrorKind {
    fn template(self) -> &'static str {
        match self {
            ParseErrorKind::SyntaxError => "syntax error near",
            ParseErrorKind::MissingRate => "missing rate constant after",
            ParseErrorKind::CoefficientOutOfRange => "coefficient must be 0 or at least 1, got",
            ParseErrorKind::NonpositiveRate => "rate constant must be positive, got",
            ParseErrorKind::DuplicateSpeciesInTerm => "species repeated within one complex:",
            ParseErrorKind::TrivialReaction => "reactant and product are identical:",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    /// The offending token, or the text just before a missing one.
    pub token: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {} {:?}",
            self.line,
            self.column,
            self.kind.template(),
            self.token
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug)]
struct Term {
    species: String,
    coeff: f64,
}

#[derive(Debug)]
struct Statement {
    lhs: Vec<Term>,
    rhs: Vec<Term>,
    reversible: bool,
    k: f64,
    kr: Option<f64>,
}

struct LineParser<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> LineParser<'a> {
    fn new(line: usize, src: &'a str) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line,
            _src: src,
        }
    }

    fn err(&self, kind: ParseErrorKind, at: usize, token: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: at + 1,
            kind,
            token: token.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    fn token_here(&self) -> String {
        let rest: String = self.chars[self.pos.min(self.chars.len())..]
            .iter()
            .take_while(|c| !c.is_whitespace())
            .collect();
        if rest.is_empty() {
            "end of line".into()
        } else {
            rest
        }
    }

    fn syntax(&self) -> ParseError {
        self.err(ParseErrorKind::SyntaxError, self.pos, self.token_here())
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        let n = s.chars().count();
        let matches = s
            .chars()
            .enumerate()
            .all(|(i, c)| self.peek_at(i) == Some(c));
        if matches {
            self.pos += n;
        }
        matches
    }

    fn number(&mut self) -> Option<(usize, String, f64)> {
        self.skip_ws();
        let start = self.pos;
        let mut end = self.pos;
        if matches!(self.chars.get(end), Some('+') | Some('-')) {
            end += 1;
        }
        let digits_start = end;
        while self.chars.get(end).is_some_and(|c| c.is_ascii_digit()) {
            end += 1;
        }
        if self.chars.get(end) == Some(&'.') {
            end += 1;
            while self.chars.get(end).is_some_and(|c| c.is_ascii_digit()) {
                end += 1;
            }
        }
        if end == digits_start || (end == digits_start + 1 && self.chars[digits_start] == '.') {
            return None;
        }
        if matches!(self.chars.get(end), Some('e') | Some('E')) {
            let mut e = end + 1;
            if matches!(self.chars.get(e), Some('+') | Some('-')) {
                e += 1;
            }
            if self.chars.get(e).is_some_and(|c| c.is_ascii_digit()) {
                while self.chars.get(e).is_some_and(|c| c.is_ascii_digit()) {
                    e += 1;
                }
                end = e;
            }
        }
        let text: String = self.chars[start..end].iter().collect();
        let value = text.parse::<f64>().ok()?;
        self.pos = end;
        Some((start, text, value))
    }

    fn ident(&mut self) -> Option<(usize, String)> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return None,
        }
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            self.pos += 1;
        }
        Some((start, self.chars[start..self.pos].iter().collect()))
    }

    fn complex(&mut self) -> PResult<Vec<Term>> {
        let mut terms: Vec<Term> = Vec::new();
        loop {
            let coeff = self.number();
            let species = self.ident();
            match (coeff, species) {
                (Some((_, _, v)), None) if v == 0.0 && terms.is_empty() => {
                    // zero complex
                    return Ok(terms);
                }
                (None, None) | (Some(_), None) => return Err(self.syntax()),
                (coeff, Some((at, name))) => {
                    let value = match coeff {
                        Some((cat, text, v)) => {
                            if !(v >= 1.0) || !v.is_finite() {
                                return Err(self.err(ParseErrorKind::CoefficientOutOfRange, cat, text));
                            }
                            v
                        }
                        None => 1.0,
                    };
                    if terms.iter().any(|t| t.species == name) {
                        return Err(self.err(ParseErrorKind::DuplicateSpeciesInTerm, at, name));
                    }
                    terms.push(Term {
                        species: name,
                        coeff: value,
                    });
                }
            }
            if !self.eat("+") {
                return Ok(terms);
            }
        }
    }

    fn rate(&mut self, key: &str, after: &str) -> PResult<f64> {
        self.skip_ws();
        let at = self.pos;
        if self.at_end() {
            return Err(self.err(ParseErrorKind::MissingRate, at, after));
        }
        match self.ident() {
            Some((_, ref name)) if name == key => {}
            _ => {
                self.pos = at;
                return Err(self.syntax());
            }
        }
        if !self.eat("=") {
            return Err(self.syntax());
        }
        match self.number() {
            Some((at, text, v)) => {
                if !(v > 0.0) || !v.is_finite() {
                    Err(self.err(ParseErrorKind::NonpositiveRate, at, text))
                } else {
                    Ok(v)
                }
            }
            None if self.at_end() => Err(self.err(ParseErrorKind::MissingRate, self.pos, key)),
            None => Err(self.syntax()),
        }
    }

    fn statement(&mut self) -> PResult<Statement> {
        let lhs = self.complex()?;
        self.skip_ws();
        let arrow_at = self.pos;
        let reversible = if self.eat("<->") {
            true
        } else if self.eat("->") {
            false
        } else {
            return Err(self.syntax());
        };
        let rhs = self.complex()?;
        if self.at_end() {
            return Err(self.err(ParseErrorKind::MissingRate, self.pos, "reaction"));
        }
        if !self.eat(";") {
            return Err(self.syntax());
        }
        let k = self.rate("k", ";")?;
        let kr = if reversible {
            if self.at_end() {
                return Err(self.err(ParseErrorKind::MissingRate, self.pos, "kr"));
            }
            if !self.eat(",") {
                return Err(self.syntax());
            }
            Some(self.rate("kr", ",")?)
        } else {
            None
        };
        if !self.at_end() {
            return Err(self.syntax());
        }
        let same = lhs.len() == rhs.len()
            && lhs
                .iter()
                .all(|t| rhs.iter().any(|s| s.species == t.species && s.coeff == t.coeff));
        if same {
            let text = if reversible { "<->" } else { "->" };
            return Err(self.err(ParseErrorKind::TrivialReaction, arrow_at, text));
        }
        Ok(Statement {
            lhs,
            rhs,
            reversible,
            k,
            kr,
        })
    }
}

const SPECIES_PRAGMA: &str = "#species:";

/// Names listed on a `#species:` line, with the column of each.
fn species_pragma(line: usize, raw: &str) -> PResult<Option<Vec<String>>> {
    let trimmed = raw.trim_start();
    if !trimmed.starts_with(SPECIES_PRAGMA) {
        return Ok(None);
    }
    let offset = raw.len() - trimmed.len() + SPECIES_PRAGMA.len();
    let mut p = LineParser::new(line, &raw[offset..]);
    let mut names: Vec<String> = Vec::new();
    while !p.at_end() {
        match p.ident() {
            Some((_, name)) if !names.contains(&name) => names.push(name),
            Some((start, name)) => {
                let mut e = p.err(ParseErrorKind::SyntaxError, start, name);
                e.column += offset;
                return Err(e);
            }
            None => {
                let mut e = p.syntax();
                e.column += offset;
                return Err(e);
            }
        }
    }
    Ok(Some(names))
}

/// Parses `.crn` text into a network.
///
/// Species are indexed by first appearance. A line `#species: A B C`
/// (otherwise a comment) fixes the leading part of that order.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, ParseError> {
    let mut statements = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if let Some(declared) = species_pragma(idx + 1, raw)? {
            for n in declared {
                if !names.contains(&n) {
                    names.push(n);
                }
            }
            continue;
        }
        let line = raw.split('#').next().unwrap_or("");
        let mut p = LineParser::new(idx + 1, line);
        if p.at_end() {
            continue;
        }
        statements.push(p.statement()?);
    }
    if statements.is_empty() {
        return Err(ParseError {
            line: 1,
            column: 1,
            kind: ParseErrorKind::SyntaxError,
            token: "no reactions".into(),
        });
    }

    for st in &statements {
        for t in st.lhs.iter().chain(&st.rhs) {
            if !names.contains(&t.species) {
                names.push(t.species.clone());
            }
        }
    }
    let vector = |terms: &[Term]| {
        let mut v = vec![0.0; names.len()];
        for t in terms {
            let i = names.iter().position(|n| *n == t.species).expect("registered");
            v[i] = t.coeff;
        }
        v
    };
    let mut specs = Vec::new();
    for st in &statements {
        let y = vector(&st.lhs);
        let yp = vector(&st.rhs);
        specs.push(ReactionSpec::new(y.clone(), yp.clone(), st.k));
        if st.reversible {
            specs.push(ReactionSpec::new(yp, y, st.kr.expect("reversible has kr")));
        }
    }
    Ok(ReactionNetwork::new(names, specs).expect("parser output satisfies network invariants"))
}

fn in_appearance_order(net: &ReactionNetwork) -> bool {
    let mut seen = vec![false; net.num_species()];
    let mut order = Vec::new();
    for r in 0..net.num_reactions() {
        for c in [net.reactant(r), net.product(r)] {
            for (i, &y) in c.coeffs().iter().enumerate() {
                if y != 0.0 && !seen[i] {
                    seen[i] = true;
                    order.push(i);
                }
            }
        }
    }
    order.len() == net.num_species() && order.iter().enumerate().all(|(k, &i)| k == i)
}

fn render_complex(net: &ReactionNetwork, coeffs: &[f64]) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .zip(net.species())
        .filter(|(&c, _)| c != 0.0)
        .map(|(&c, s)| {
            if c == 1.0 {
                s.name.clone()
            } else {
                format!("{c} {}", s.name)
            }
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

/// Canonical text for a network, one irreversible reaction per line.
///
/// A `#species:` line is emitted first when the species order is not the
/// order of first appearance, so parsing the output always reproduces the
/// network.
pub fn render_network(net: &ReactionNetwork) -> String {
    let mut out = String::new();
    if !in_appearance_order(net) {
        out.push_str(SPECIES_PRAGMA);
        for s in net.species() {
            out.push(' ');
            out.push_str(&s.name);
        }
        out.push('\n');
    }
    for r in 0..net.num_reactions() {
        out.push_str(&format!(
            "{} -> {} ; k={}\n",
            render_complex(net, net.reactant(r).coeffs()),
            render_complex(net, net.product(r).coeffs()),
            net.reactions()[r].rate()
        ));
    }
    out
}
