//! Parsing of the textual rule and fact file formats.
//!
//! The lexical format is Prolog-like: clauses end with `.`, body literals
//! are comma-separated after `:-`, `%` starts a line comment. Variables are
//! uppercase- or underscore-initial; constants are lowercase-initial bare
//! names, integers, or single-quoted names (`'<init>'`, `'Order'`) with
//! `\'`, `\\`, `\n`, `\t` escapes. `not(...)` is negation, `=` the equality
//! built-in, `member(E, [a,b,c])` the list-membership built-in. List
//! constants are accepted only as the second argument of `member/2` —
//! nothing else in the language can hold a list.
//!
//! `not` and `member` are contextual keywords in literal position and are
//! therefore unusable as predicate names; both remain fine as constants.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::ast::{Atom, Constant, GroundAtom, Literal, Rule, Term};

/// Why parsing failed. Line numbers are 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseError {
    Syntax { line: usize, msg: String },
    /// The clause head contains a function term or a list constant.
    ComplexHeadTerm { line: usize, detail: String },
    /// A fact file clause contains a variable.
    NonGroundFact { line: usize, var: String },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::ComplexHeadTerm { line, .. }
            | ParseError::NonGroundFact { line, .. } => *line,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax { line, msg } => write!(f, "line {line}: {msg}"),
            ParseError::ComplexHeadTerm { line, detail } => {
                write!(f, "line {line}: complex term in clause head: {detail}")
            }
            ParseError::NonGroundFact { line, var } => {
                write!(f, "line {line}: fact contains variable {var}")
            }
        }
    }
}

impl core::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    Quoted(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Arrow,
    Eq,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Var(s) => format!("variable {s}"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Quoted(s) => format!("quoted name '{s}'"),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::LBracket => "`[`".to_string(),
            Tok::RBracket => "`]`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Dot => "`.`".to_string(),
            Tok::Arrow => "`:-`".to_string(),
            Tok::Eq => "`=`".to_string(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut it = text.chars().peekable();
    while let Some(&c) = it.peek() {
        match c {
            '\n' => {
                line += 1;
                it.next();
            }
            c if c.is_whitespace() => {
                it.next();
            }
            '%' => {
                for c in it.by_ref() {
                    if c == '\n' {
                        line += 1;
                        break;
                    }
                }
            }
            '(' => {
                it.next();
                out.push((line, Tok::LParen));
            }
            ')' => {
                it.next();
                out.push((line, Tok::RParen));
            }
            '[' => {
                it.next();
                out.push((line, Tok::LBracket));
            }
            ']' => {
                it.next();
                out.push((line, Tok::RBracket));
            }
            ',' => {
                it.next();
                out.push((line, Tok::Comma));
            }
            '.' => {
                it.next();
                out.push((line, Tok::Dot));
            }
            '=' => {
                it.next();
                out.push((line, Tok::Eq));
            }
            ':' => {
                it.next();
                if it.peek() == Some(&'-') {
                    it.next();
                    out.push((line, Tok::Arrow));
                } else {
                    return Err(ParseError::Syntax {
                        line,
                        msg: "expected `-` after `:`".to_string(),
                    });
                }
            }
            '\'' => {
                it.next();
                let mut s = String::new();
                loop {
                    match it.next() {
                        None => {
                            return Err(ParseError::Syntax {
                                line,
                                msg: "unterminated quoted name".to_string(),
                            })
                        }
                        Some('\'') => break,
                        Some('\\') => match it.next() {
                            Some('\'') => s.push('\''),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            other => {
                                return Err(ParseError::Syntax {
                                    line,
                                    msg: match other {
                                        Some(c) => format!("unknown escape `\\{c}`"),
                                        None => "unterminated quoted name".to_string(),
                                    },
                                })
                            }
                        },
                        Some('\n') => {
                            s.push('\n');
                            line += 1;
                        }
                        Some(c) => s.push(c),
                    }
                }
                out.push((line, Tok::Quoted(s)));
            }
            '-' => {
                it.next();
                match it.peek() {
                    Some(d) if d.is_ascii_digit() => {
                        let n = lex_int(&mut it, line, true)?;
                        out.push((line, Tok::Int(n)));
                    }
                    _ => {
                        return Err(ParseError::Syntax {
                            line,
                            msg: "expected digits after `-`".to_string(),
                        })
                    }
                }
            }
            c if c.is_ascii_digit() => {
                let n = lex_int(&mut it, line, false)?;
                out.push((line, Tok::Int(n)));
            }
            c if c.is_ascii_lowercase() => {
                out.push((line, Tok::Ident(lex_word(&mut it))));
            }
            c if c.is_ascii_uppercase() || c == '_' => {
                out.push((line, Tok::Var(lex_word(&mut it))));
            }
            c => {
                return Err(ParseError::Syntax {
                    line,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

fn lex_word(it: &mut core::iter::Peekable<core::str::Chars<'_>>) -> String {
    let mut s = String::new();
    while let Some(&c) = it.peek() {
        if c.is_ascii_alphanumeric() || c == '_' {
            s.push(c);
            it.next();
        } else {
            break;
        }
    }
    s
}

fn lex_int(
    it: &mut core::iter::Peekable<core::str::Chars<'_>>,
    line: usize,
    negative: bool,
) -> Result<i64, ParseError> {
    let mut digits = String::new();
    while let Some(&c) = it.peek() {
        if c.is_ascii_digit() {
            digits.push(c);
            it.next();
        } else {
            break;
        }
    }
    let full = if negative {
        format!("-{digits}")
    } else {
        digits
    };
    full.parse::<i64>().map_err(|_| ParseError::Syntax {
        line,
        msg: format!("integer literal `{full}` out of range"),
    })
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
        })
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |(l, _)| *l)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(_, t)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: String) -> ParseError {
        ParseError::Syntax {
            line: self.line(),
            msg,
        }
    }

    fn expect(&mut self, want: &Tok, context: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.err(format!(
                "expected {} {context}, found {}",
                want.describe(),
                t.describe()
            ))),
            None => Err(self.err(format!(
                "expected {} {context}, found end of input",
                want.describe()
            ))),
        }
    }

    /// `pred(t1, …, tn).` or `pred(t1, …, tn) :- body.`
    fn clause(&mut self) -> Result<Rule, ParseError> {
        let head = self.head_atom()?;
        let mut body = Vec::new();
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            loop {
                body.push(self.literal()?);
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.expect(&Tok::Dot, "at end of clause")?;
        Ok(Rule::new(head, body))
    }

    fn pred_name(&mut self, context: &str) -> Result<String, ParseError> {
        match self.bump() {
            Some(Tok::Ident(name)) => {
                if name == "not" || name == "member" {
                    Err(self.err(format!("`{name}` is reserved and cannot name {context}")))
                } else {
                    Ok(name)
                }
            }
            Some(t) => Err(self.err(format!(
                "expected predicate name for {context}, found {}",
                t.describe()
            ))),
            None => Err(self.err(format!(
                "expected predicate name for {context}, found end of input"
            ))),
        }
    }

    fn head_atom(&mut self) -> Result<Atom, ParseError> {
        let line = self.line();
        let name = self.pred_name("the clause head")?;
        self.expect(&Tok::LParen, "after head predicate name")?;
        let mut terms = Vec::new();
        loop {
            terms.push(self.head_term(line)?);
            match self.bump() {
                Some(Tok::Comma) => {}
                Some(Tok::RParen) => break,
                Some(t) => {
                    return Err(self.err(format!(
                        "expected `,` or `)` in head arguments, found {}",
                        t.describe()
                    )))
                }
                None => return Err(self.err("unterminated head argument list".to_string())),
            }
        }
        Ok(Atom { pred: name, terms })
    }

    fn head_term(&mut self, line: usize) -> Result<Term, ParseError> {
        if let Some(Tok::Ident(_)) = self.peek() {
            if self.peek2() == Some(&Tok::LParen) {
                let name = match self.peek() {
                    Some(Tok::Ident(n)) => n.clone(),
                    _ => unreachable!(),
                };
                return Err(ParseError::ComplexHeadTerm {
                    line,
                    detail: format!("function term `{name}(...)`"),
                });
            }
        }
        if self.peek() == Some(&Tok::LBracket) {
            return Err(ParseError::ComplexHeadTerm {
                line,
                detail: "list constant".to_string(),
            });
        }
        self.simple_term("in head arguments")
    }

    /// A variable or (non-list) constant.
    fn simple_term(&mut self, context: &str) -> Result<Term, ParseError> {
        match self.bump() {
            Some(Tok::Var(v)) => Ok(Term::Var(v)),
            Some(Tok::Ident(s)) => {
                if self.peek() == Some(&Tok::LParen) {
                    Err(self.err(format!(
                        "function term `{s}(...)` {context}: the language has no function symbols"
                    )))
                } else {
                    Ok(Term::Const(Constant::Name(s)))
                }
            }
            Some(Tok::Quoted(s)) => Ok(Term::Const(Constant::Name(s))),
            Some(Tok::Int(n)) => Ok(Term::Const(Constant::Int(n))),
            Some(Tok::LBracket) => Err(self.err(format!(
                "list constant {context}: lists are only allowed as the second argument of member/2"
            ))),
            Some(t) => Err(self.err(format!("expected a term {context}, found {}", t.describe()))),
            None => Err(self.err(format!("expected a term {context}, found end of input"))),
        }
    }

    fn list_constant(&mut self) -> Result<Term, ParseError> {
        // caller consumed `[`
        let mut items = Vec::new();
        if self.peek() == Some(&Tok::RBracket) {
            self.pos += 1;
            return Ok(Term::List(items));
        }
        loop {
            match self.bump() {
                Some(Tok::Ident(s)) | Some(Tok::Quoted(s)) => items.push(Constant::Name(s)),
                Some(Tok::Int(n)) => items.push(Constant::Int(n)),
                Some(t) => {
                    return Err(self.err(format!(
                        "expected a constant in list, found {}",
                        t.describe()
                    )))
                }
                None => return Err(self.err("unterminated list constant".to_string())),
            }
            match self.bump() {
                Some(Tok::Comma) => {}
                Some(Tok::RBracket) => break,
                Some(t) => {
                    return Err(self.err(format!(
                        "expected `,` or `]` in list, found {}",
                        t.describe()
                    )))
                }
                None => return Err(self.err("unterminated list constant".to_string())),
            }
        }
        Ok(Term::List(items))
    }

    fn body_atom(&mut self) -> Result<Atom, ParseError> {
        let name = self.pred_name("a body literal")?;
        self.expect(&Tok::LParen, "after predicate name")?;
        let mut terms = Vec::new();
        loop {
            terms.push(self.simple_term("in atom arguments")?);
            match self.bump() {
                Some(Tok::Comma) => {}
                Some(Tok::RParen) => break,
                Some(t) => {
                    return Err(self.err(format!(
                        "expected `,` or `)` in atom arguments, found {}",
                        t.describe()
                    )))
                }
                None => return Err(self.err("unterminated argument list".to_string())),
            }
        }
        Ok(Atom { pred: name, terms })
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        match (self.peek(), self.peek2()) {
            (Some(Tok::Ident(name)), Some(Tok::LParen)) if name == "not" => {
                self.pos += 2;
                let inner = self.negation_body()?;
                self.expect(&Tok::RParen, "to close not(...)")?;
                Ok(inner)
            }
            (Some(Tok::Ident(name)), Some(Tok::LParen)) if name == "member" => {
                self.pos += 2;
                let elem = self.simple_term("as the first argument of member/2")?;
                self.expect(&Tok::Comma, "between member/2 arguments")?;
                let list = match self.bump() {
                    Some(Tok::Var(v)) => Term::Var(v),
                    Some(Tok::LBracket) => self.list_constant()?,
                    Some(t) => {
                        return Err(self.err(format!(
                            "expected a list or variable as the second argument of member/2, found {}",
                            t.describe()
                        )))
                    }
                    None => return Err(self.err("unterminated member/2".to_string())),
                };
                self.expect(&Tok::RParen, "to close member(...)")?;
                Ok(Literal::Member { elem, list })
            }
            (Some(Tok::Ident(_)), Some(Tok::LParen)) => Ok(Literal::Pos(self.body_atom()?)),
            _ => {
                // equality: term = term
                let lhs = self.simple_term("on the left of `=`")?;
                self.expect(&Tok::Eq, "after the term")?;
                let rhs = self.simple_term("on the right of `=`")?;
                Ok(Literal::Eq {
                    lhs,
                    rhs,
                    negated: false,
                })
            }
        }
    }

    /// The content of `not(...)`: a user atom or an equality.
    fn negation_body(&mut self) -> Result<Literal, ParseError> {
        match (self.peek(), self.peek2()) {
            (Some(Tok::Ident(name)), Some(Tok::LParen)) if name == "not" => {
                Err(self.err("nested negation is not supported".to_string()))
            }
            (Some(Tok::Ident(name)), Some(Tok::LParen)) if name == "member" => {
                Err(self.err("negation of member/2 is not supported".to_string()))
            }
            (Some(Tok::Ident(_)), Some(Tok::LParen)) => Ok(Literal::Neg(self.body_atom()?)),
            _ => {
                let lhs = self.simple_term("on the left of `=`")?;
                self.expect(&Tok::Eq, "inside not(...)")?;
                let rhs = self.simple_term("on the right of `=`")?;
                Ok(Literal::Eq {
                    lhs,
                    rhs,
                    negated: true,
                })
            }
        }
    }
}

/// Parses exactly one clause. Trailing input is an error.
pub fn parse_rule(text: &str) -> Result<Rule, ParseError> {
    let mut p = Parser::new(text)?;
    let rule = p.clause()?;
    if !p.at_end() {
        return Err(p.err("trailing input after clause".to_string()));
    }
    Ok(rule)
}

/// Parses a rule file: any number of clauses (rules and fact clauses).
pub fn parse_rule_file(text: &str) -> Result<Vec<Rule>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut rules = Vec::new();
    while !p.at_end() {
        rules.push(p.clause()?);
    }
    Ok(rules)
}

/// Parses a fact file: ground, bodyless clauses only. Duplicates are
/// preserved in file order (storage deduplicates later).
pub fn parse_fact_file(text: &str) -> Result<Vec<GroundAtom>, ParseError> {
    Ok(parse_fact_file_lines(text)?
        .into_iter()
        .map(|(_, fact)| fact)
        .collect())
}

/// Like [`parse_fact_file`], but pairs every fact with the 1-based line its
/// clause starts on, for ingestion diagnostics.
pub fn parse_fact_file_lines(text: &str) -> Result<Vec<(usize, GroundAtom)>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut facts = Vec::new();
    while !p.at_end() {
        let line = p.line();
        let rule = p.clause()?;
        if !rule.is_fact() {
            return Err(ParseError::Syntax {
                line,
                msg: "rule clause in a fact file".to_string(),
            });
        }
        let mut args = Vec::new();
        for t in &rule.head.terms {
            match t {
                Term::Const(c) => args.push(c.clone()),
                Term::Var(v) => {
                    return Err(ParseError::NonGroundFact {
                        line,
                        var: v.clone(),
                    })
                }
                Term::List(_) => unreachable!("heads cannot contain lists"),
            }
        }
        facts.push((
            line,
            GroundAtom {
                pred: rule.head.pred.clone(),
                args,
            },
        ));
    }
    Ok(facts)
}
