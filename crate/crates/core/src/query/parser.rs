use crate::catalog::{is_valid_slug, MarkKind};
use crate::textnorm::tokenize;

use super::{Field, FieldValue, Mode, QueryError, QueryNode};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Quoted(String),
    Field(String),
    And,
    Or,
    Not,
    To,
    LParen,
    RParen,
    LBracket,
    RBracket,
}

fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '(' | ')' | '[' | ']' | '"' | ':')
}

fn lex(input: &str) -> Result<Vec<(Tok, usize)>, QueryError> {
    let mut out = Vec::new();
    let mut chars = input.char_indices().peekable();
    while let Some(&(at, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' | ')' | '[' | ']' => {
                chars.next();
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    _ => Tok::RBracket,
                };
                out.push((tok, at));
            }
            '"' => {
                chars.next();
                let mut text = String::new();
                let mut closed = false;
                for (_, c) in chars.by_ref() {
                    if c == '"' {
                        closed = true;
                        break;
                    }
                    text.push(c);
                }
                if !closed {
                    return Err(QueryError::Syntax { offset: at, message: "unterminated quote".into() });
                }
                out.push((Tok::Quoted(text), at));
            }
            ':' => {
                return Err(QueryError::Syntax { offset: at, message: "':' must follow a field name".into() });
            }
            _ => {
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if !is_word_char(c) {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                if matches!(chars.peek(), Some((_, ':'))) {
                    chars.next();
                    out.push((Tok::Field(word), at));
                    continue;
                }
                let tok = match word.as_str() {
                    "AND" => Tok::And,
                    "OR" => Tok::Or,
                    "NOT" => Tok::Not,
                    "TO" => Tok::To,
                    _ => Tok::Word(word),
                };
                out.push((tok, at));
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn error<T>(&self, message: &str) -> Result<T, QueryError> {
        Err(QueryError::Syntax { offset: self.offset(), message: message.into() })
    }

    fn starts_operand(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Word(_) | Tok::Quoted(_) | Tok::Field(_) | Tok::Not | Tok::LParen)
        )
    }

    fn parse_or(&mut self) -> Result<QueryNode, QueryError> {
        let mut items = vec![self.parse_and()?];
        while self.peek() == Some(&Tok::Or) {
            self.next();
            items.push(self.parse_and()?);
        }
        Ok(if items.len() == 1 { items.remove(0) } else { QueryNode::Or(items) })
    }

    fn parse_and(&mut self) -> Result<QueryNode, QueryError> {
        let mut items = vec![self.parse_not()?];
        loop {
            if self.peek() == Some(&Tok::And) {
                self.next();
                items.push(self.parse_not()?);
            } else if self.starts_operand() {
                items.push(self.parse_not()?);
            } else {
                break;
            }
        }
        Ok(QueryNode::And(items))
    }

    fn parse_not(&mut self) -> Result<QueryNode, QueryError> {
        if self.peek() == Some(&Tok::Not) {
            self.next();
            return Ok(QueryNode::Not(Box::new(self.parse_not()?)));
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<QueryNode, QueryError> {
        let offset = self.offset();
        match self.next() {
            Some((Tok::LParen, _)) => {
                let inner = self.parse_or()?;
                match self.next() {
                    Some((Tok::RParen, _)) => Ok(inner),
                    _ => {
                        self.pos -= 1;
                        self.error("expected ')'")
                    }
                }
            }
            Some((Tok::Word(w), at)) | Some((Tok::Quoted(w), at)) => text_node(Field::Any, &w, at),
            Some((Tok::Field(name), at)) => {
                let field = Field::parse_name(&name)
                    .ok_or(QueryError::UnknownField { offset: at, field: name.clone() })?;
                self.parse_field_value(field)
            }
            Some(_) => {
                self.pos -= 1;
                self.error("expected a term, phrase, field or '('")
            }
            None => Err(QueryError::Syntax { offset, message: "unexpected end of query".into() }),
        }
    }

    fn parse_field_value(&mut self, field: Field) -> Result<QueryNode, QueryError> {
        let offset = self.offset();
        match self.next() {
            Some((Tok::LBracket, at)) => {
                if field != Field::Date {
                    return Err(QueryError::Syntax { offset: at, message: "ranges are only allowed on date".into() });
                }
                let lo = self.year()?;
                if self.next().map(|t| t.0) != Some(Tok::To) {
                    self.pos -= 1;
                    return self.error("expected TO");
                }
                let hi = self.year()?;
                if self.next().map(|t| t.0) != Some(Tok::RBracket) {
                    self.pos -= 1;
                    return self.error("expected ']'");
                }
                if lo > hi {
                    return Err(QueryError::InvertedRange { offset: at, lo, hi });
                }
                Ok(QueryNode::Fielded(Field::Date, FieldValue::Range { lo, hi }))
            }
            Some((Tok::Word(w), at)) | Some((Tok::Quoted(w), at)) => match field {
                Field::Date => {
                    let y = parse_year(w.trim())
                        .ok_or(QueryError::Syntax { offset: at, message: "date expects a year".into() })?;
                    Ok(QueryNode::Fielded(Field::Date, FieldValue::Year(y)))
                }
                Field::Library => {
                    let slug = w.trim().to_ascii_lowercase();
                    if !is_valid_slug(&slug) {
                        return Err(QueryError::Syntax { offset: at, message: format!("invalid library slug {w:?}") });
                    }
                    Ok(QueryNode::Fielded(Field::Library, FieldValue::Term(slug)))
                }
                Field::MarkType => {
                    let kind: MarkKind = w.trim().parse().map_err(|_| QueryError::Syntax {
                        offset: at,
                        message: format!("unknown mark type {w:?}"),
                    })?;
                    Ok(QueryNode::Fielded(Field::MarkType, FieldValue::Term(kind.as_str().into())))
                }
                _ => text_node(field, &w, at).map(|n| match n {
                    QueryNode::Term(t) => QueryNode::Fielded(field, FieldValue::Term(t)),
                    other => other,
                }),
            },
            _ => Err(QueryError::Syntax { offset, message: "expected a value after the field name".into() }),
        }
    }

    fn year(&mut self) -> Result<u16, QueryError> {
        let offset = self.offset();
        match self.next() {
            Some((Tok::Word(w), _)) => {
                parse_year(&w).ok_or(QueryError::Syntax { offset, message: format!("{w:?} is not a year") })
            }
            _ => Err(QueryError::Syntax { offset, message: "expected a year".into() }),
        }
    }
}

fn parse_year(s: &str) -> Option<u16> {
    if s.is_empty() || s.len() > 4 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// A free-text value: one token is a term, several an ordered phrase.
fn text_node(field: Field, text: &str, offset: usize) -> Result<QueryNode, QueryError> {
    let mut tokens = tokenize(text);
    match tokens.len() {
        0 => Err(QueryError::Syntax { offset, message: format!("{text:?} has no searchable characters") }),
        1 if field == Field::Any => Ok(QueryNode::Term(tokens.remove(0))),
        1 => Ok(QueryNode::Fielded(field, FieldValue::Term(tokens.remove(0)))),
        _ => Ok(QueryNode::Fielded(field, FieldValue::Phrase(tokens))),
    }
}

/// Parse a search string in the given mode.
///
/// Simple mode ANDs every token of the input; advanced mode follows the
/// grammar in the module docs.
pub fn parse_query(input: &str, mode: Mode) -> Result<QueryNode, QueryError> {
    if input.trim().is_empty() {
        return Err(QueryError::Empty);
    }
    let ast = match mode {
        Mode::Simple => {
            let tokens = tokenize(input);
            if tokens.is_empty() {
                return Err(QueryError::Empty);
            }
            let mut seen = std::collections::BTreeSet::new();
            QueryNode::And(
                tokens
                    .into_iter()
                    .filter(|t| seen.insert(t.clone()))
                    .map(QueryNode::Term)
                    .collect(),
            )
        }
        Mode::Advanced => {
            let mut p = Parser { toks: lex(input)?, pos: 0, end: input.len() };
            let ast = p.parse_or()?;
            if p.pos < p.toks.len() {
                return p.error("unexpected token");
            }
            ast
        }
    };
    ast.check_negations()?;
    Ok(ast)
}
