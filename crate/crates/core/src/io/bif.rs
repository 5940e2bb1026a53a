//! The subset of the Bayesian Interchange Format used by the public ALARM file.
//!
//! Supported: one `network` block, `variable` blocks declaring
//! `type discrete [ n ] { s1, ..., sn };`, and `probability` blocks holding
//! either a `table` or one `(parent states) p1, ..., pn;` entry per parent
//! combination. `property` statements are skipped anywhere. A `table` with
//! parents lists rows in lexicographic order of parent states (first parent
//! most significant), own state fastest.
//!
//! Rows summing to within 1e-6 of one are renormalized with a warning, since
//! circulated files carry rounded entries; anything further off is an error.

use std::collections::HashMap;

use crate::error::{ParseError, Result};
use crate::network::{BeliefNetwork, Issue, Variable};

const ROW_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if text[i..].starts_with("//") {
            i = text[i..].find('\n').map_or(bytes.len(), |n| i + n);
        } else if text[i..].starts_with("/*") {
            let end = text[i + 2..]
                .find("*/")
                .ok_or_else(|| ParseError::at_offset(text, i, "unterminated comment"))?;
            i += end + 4;
        } else if c == b'"' {
            let end = text[i + 1..]
                .find('"')
                .ok_or_else(|| ParseError::at_offset(text, i, "unterminated string"))?;
            out.push(Token {
                tok: Tok::Word(text[i + 1..i + 1 + end].to_string()),
                offset: i,
            });
            i += end + 2;
        } else if b"{}[]()|,;".contains(&c) {
            out.push(Token {
                tok: Tok::Punct(c as char),
                offset: i,
            });
            i += 1;
        } else {
            let start = i;
            while i < bytes.len()
                && !bytes[i].is_ascii_whitespace()
                && !b"{}[]()|,;\"".contains(&bytes[i])
                && !text[i..].starts_with("//")
                && !text[i..].starts_with("/*")
            {
                i += text[i..].chars().next().map_or(1, char::len_utf8);
            }
            out.push(Token {
                tok: Tok::Word(text[start..i].to_string()),
                offset: start,
            });
        }
    }
    Ok(out)
}

struct Parser<'t> {
    text: &'t str,
    tokens: Vec<Token>,
    pos: usize,
}

struct VarDecl {
    name: String,
    states: Vec<String>,
    offset: usize,
}

struct ProbBlock {
    child: usize,
    parents: Vec<usize>,
    cpt: Vec<f64>,
}

impl<'t> Parser<'t> {
    fn err_at(&self, offset: usize, msg: impl Into<String>) -> ParseError {
        ParseError::at_offset(self.text, offset, msg)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or(self.text.len(), |t| t.offset)
    }

    fn next(&mut self, what: &str) -> Result<Token, ParseError> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.err_at(self.text.len(), format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn expect(&mut self, c: char) -> Result<usize, ParseError> {
        let t = self.next(&format!("'{c}'"))?;
        match t.tok {
            Tok::Punct(p) if p == c => Ok(t.offset),
            other => Err(self.err_at(t.offset, format!("expected '{c}', found {}", show(&other)))),
        }
    }

    fn word(&mut self, what: &str) -> Result<(String, usize), ParseError> {
        let t = self.next(what)?;
        match t.tok {
            Tok::Word(w) => Ok((w, t.offset)),
            other => Err(self.err_at(t.offset, format!("expected {what}, found {}", show(&other)))),
        }
    }

    fn number(&mut self) -> Result<(f64, usize), ParseError> {
        let (w, off) = self.word("a number")?;
        match w.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok((x, off)),
            _ => Err(self.err_at(off, format!("expected a number, found '{w}'"))),
        }
    }

    /// `a, b, c` up to (not including) the terminator.
    fn word_list(&mut self, what: &str, end: char) -> Result<Vec<(String, usize)>, ParseError> {
        let mut items = vec![self.word(what)?];
        while self.peek() == Some(&Tok::Punct(',')) {
            self.pos += 1;
            items.push(self.word(what)?);
        }
        if self.peek() != Some(&Tok::Punct(end)) {
            let off = self.here();
            let found = self.peek().map_or("end of input".to_string(), show);
            return Err(self.err_at(off, format!("expected ',' or '{end}', found {found}")));
        }
        Ok(items)
    }

    fn number_list(&mut self) -> Result<Vec<f64>, ParseError> {
        let mut items = vec![self.number()?.0];
        while self.peek() == Some(&Tok::Punct(',')) {
            self.pos += 1;
            items.push(self.number()?.0);
        }
        self.expect(';')?;
        Ok(items)
    }

    fn skip_property(&mut self) -> Result<(), ParseError> {
        loop {
            if let Tok::Punct(';') = self.next("';' ending property")?.tok {
                return Ok(());
            }
        }
    }

    fn network_block(&mut self) -> Result<(), ParseError> {
        // name is optional in some writers
        if let Some(Tok::Word(_)) = self.peek() {
            self.pos += 1;
        }
        self.expect('{')?;
        loop {
            let t = self.next("'}'")?;
            match t.tok {
                Tok::Punct('}') => return Ok(()),
                Tok::Word(w) if w == "property" => self.skip_property()?,
                other => {
                    return Err(self.err_at(
                        t.offset,
                        format!("unsupported construct {} in network block", show(&other)),
                    ))
                }
            }
        }
    }

    fn variable_block(&mut self) -> Result<VarDecl, ParseError> {
        let (name, offset) = self.word("variable name")?;
        self.expect('{')?;
        let mut states: Option<Vec<String>> = None;
        loop {
            let t = self.next("'}'")?;
            match t.tok {
                Tok::Punct('}') => break,
                Tok::Word(w) if w == "property" => self.skip_property()?,
                Tok::Word(w) if w == "type" => {
                    let (kind, koff) = self.word("variable type")?;
                    if kind != "discrete" {
                        return Err(self.err_at(koff, format!("unsupported construct: type {kind}")));
                    }
                    self.expect('[')?;
                    let (n, noff) = self.number()?;
                    self.expect(']')?;
                    self.expect('{')?;
                    let list = self.word_list("state name", '}')?;
                    self.expect('}')?;
                    self.expect(';')?;
                    if n.fract() != 0.0 || n as usize != list.len() {
                        return Err(self.err_at(
                            noff,
                            format!("declared {n} states but listed {}", list.len()),
                        ));
                    }
                    states = Some(list.into_iter().map(|(s, _)| s).collect());
                }
                other => {
                    return Err(self.err_at(
                        t.offset,
                        format!("unsupported construct {} in variable block", show(&other)),
                    ))
                }
            }
        }
        let states =
            states.ok_or_else(|| self.err_at(offset, format!("variable {name} has no type declaration")))?;
        Ok(VarDecl {
            name,
            states,
            offset,
        })
    }

    fn probability_block(
        &mut self,
        vars: &[VarDecl],
        index: &HashMap<String, usize>,
    ) -> Result<ProbBlock, ParseError> {
        let lookup = |p: &Self, (name, off): &(String, usize)| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| p.err_at(*off, format!("undeclared variable '{name}'")))
        };
        self.expect('(')?;
        let child_tok = self.word("variable name")?;
        let child = lookup(self, &child_tok)?;
        let mut parents = Vec::new();
        if self.peek() == Some(&Tok::Punct('|')) {
            self.pos += 1;
            for p in self.word_list("parent name", ')')? {
                parents.push(lookup(self, &p)?);
            }
        }
        self.expect(')')?;
        let block_start = self.expect('{')?;

        let width = vars[child].states.len();
        let pcards: Vec<usize> = parents.iter().map(|&p| vars[p].states.len()).collect();
        let rows: usize = pcards.iter().product();
        let mut cpt = vec![f64::NAN; rows * width];
        let mut filled = vec![false; rows];

        loop {
            let t = self.next("'}'")?;
            match t.tok {
                Tok::Punct('}') => break,
                Tok::Word(w) if w == "property" => self.skip_property()?,
                Tok::Word(w) if w == "table" => {
                    let values = self.number_list()?;
                    if values.len() != rows * width {
                        return Err(self.err_at(
                            t.offset,
                            format!(
                                "CPT arity mismatch: table has {} entries, expected {}",
                                values.len(),
                                rows * width
                            ),
                        ));
                    }
                    for (r, f) in filled.iter_mut().enumerate() {
                        if *f {
                            return Err(self.err_at(t.offset, format!("row {r} given twice")));
                        }
                        *f = true;
                    }
                    cpt.copy_from_slice(&values);
                }
                Tok::Punct('(') => {
                    let combo = self.word_list("parent state", ')')?;
                    self.expect(')')?;
                    if combo.len() != parents.len() {
                        return Err(self.err_at(
                            t.offset,
                            format!(
                                "CPT arity mismatch: entry names {} parent states, expected {}",
                                combo.len(),
                                parents.len()
                            ),
                        ));
                    }
                    let mut row = 0;
                    for ((state, off), &p) in combo.iter().zip(&parents) {
                        let s = vars[p].states.iter().position(|x| x == state).ok_or_else(|| {
                            self.err_at(*off, format!("'{state}' is not a state of {}", vars[p].name))
                        })?;
                        row = row * vars[p].states.len() + s;
                    }
                    let values = self.number_list()?;
                    if values.len() != width {
                        return Err(self.err_at(
                            t.offset,
                            format!(
                                "CPT arity mismatch: entry has {} probabilities, expected {width}",
                                values.len()
                            ),
                        ));
                    }
                    if filled[row] {
                        return Err(self.err_at(t.offset, "parent combination given twice"));
                    }
                    filled[row] = true;
                    cpt[row * width..(row + 1) * width].copy_from_slice(&values);
                }
                Tok::Word(w) => {
                    return Err(self.err_at(t.offset, format!("unsupported construct: {w}")));
                }
                other => {
                    return Err(self.err_at(t.offset, format!("unexpected {}", show(&other))));
                }
            }
        }
        if let Some(r) = filled.iter().position(|f| !f) {
            return Err(self.err_at(
                block_start,
                format!(
                    "CPT arity mismatch: {} has no entry for parent combination {r}",
                    vars[child].name
                ),
            ));
        }
        Ok(ProbBlock {
            child,
            parents,
            cpt,
        })
    }
}

fn show(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("'{w}'"),
        Tok::Punct(c) => format!("'{c}'"),
    }
}

/// Parses and validates a BIF document.
pub fn parse_bif_subset(text: &str) -> Result<BeliefNetwork<f64>> {
    parse_bif_with_warnings(text)?.0.into_checked()
}

/// Parses without the final structural validation, returning renormalization warnings.
pub fn parse_bif_with_warnings(text: &str) -> Result<(BeliefNetwork<f64>, Vec<Issue>)> {
    let mut p = Parser {
        text,
        tokens: tokenize(text)?,
        pos: 0,
    };
    let mut vars: Vec<VarDecl> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut blocks: Vec<Option<ProbBlock>> = Vec::new();
    let mut seen_network = false;
    let mut warnings = Vec::new();

    while p.pos < p.tokens.len() {
        let (kw, off) = p.word("'network', 'variable' or 'probability'")?;
        match kw.as_str() {
            "network" if !seen_network => {
                seen_network = true;
                p.network_block()?;
            }
            "network" => return Err(p.err_at(off, "second network block").into()),
            "variable" => {
                let decl = p.variable_block()?;
                if index.insert(decl.name.clone(), vars.len()).is_some() {
                    return Err(p.err_at(decl.offset, format!("duplicate variable {}", decl.name)).into());
                }
                vars.push(decl);
                blocks.push(None);
            }
            "probability" => {
                let block = p.probability_block(&vars, &index)?;
                let child = block.child;
                if blocks[child].is_some() {
                    return Err(p
                        .err_at(off, format!("second probability block for {}", vars[child].name))
                        .into());
                }
                let width = vars[child].states.len();
                let mut block = block;
                for (r, row) in block.cpt.chunks_mut(width).enumerate() {
                    let sum: f64 = row.iter().sum();
                    if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (sum - 1.0).abs() > ROW_TOLERANCE {
                        return Err(p
                            .err_at(off, format!("row {r} of {} sums to {sum}", vars[child].name))
                            .into());
                    }
                    // leave last-bit rounding alone; it passes validation as is
                    if (sum - 1.0).abs() > 1e-12 {
                        row.iter_mut().for_each(|x| *x /= sum);
                        let (line, _) = crate::error::line_column(text, off);
                        warnings.push(Issue::warning(
                            format!("row {r} summed to {sum}; renormalized"),
                            format!("variable {}, line {line}", vars[child].name),
                        ));
                    }
                }
                blocks[child] = Some(block);
            }
            other => return Err(p.err_at(off, format!("unsupported construct: {other}")).into()),
        }
    }

    let mut variables = Vec::with_capacity(vars.len());
    for (decl, block) in vars.into_iter().zip(blocks) {
        let block = block.ok_or_else(|| {
            ParseError::at_offset(text, decl.offset, format!("no probability block for {}", decl.name))
        })?;
        variables.push(Variable {
            name: decl.name,
            states: decl.states,
            parents: block.parents,
            cpt: block.cpt,
        });
    }
    Ok((BeliefNetwork::from_variables(variables), warnings))
}
