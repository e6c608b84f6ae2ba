//! Parser for the supported Prolog subset.
//!
//! Supported syntax: clauses `H.` and `H :- B1, ..., Bn.`, compound terms,
//! variables, atoms (plain or single-quoted), integers, list sugar `[a,b|T]`,
//! infix `=`/2 and arithmetic comparison goals, `is`/2, a single flat level of
//! infix arithmetic (`+`, `-`, `*`) inside terms, and `:- entry(Goal).`
//! directives naming entry goals for goal-dependent analysis.
//!
//! Anonymous variables `_` are given a fresh name per occurrence.

use super::{Term, VarTable};
use std::fmt;

/// A parse error with 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

/// A clause as parsed: head term, conjunction of body goals, and the clause's
/// variable table (one table per clause; variables do not scope across
/// clauses).
#[derive(Debug, Clone)]
pub struct ParsedClause {
    pub head: Term,
    pub body: Vec<Term>,
    pub table: VarTable,
}

/// An entry goal from a `:- entry(p(X,Y)).` directive.
#[derive(Debug, Clone)]
pub struct EntryGoal {
    pub goal: Term,
    pub table: VarTable,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedProgram {
    pub clauses: Vec<ParsedClause>,
    pub entries: Vec<EntryGoal>,
}

/// Infix operators allowed as body goals (beyond plain terms).
pub const GOAL_OPS: &[&str] = &["=", "<", ">", "=<", ">=", "=:=", "=\\=", "is"];
/// Infix operators allowed inside terms (flat precedence, left-associative).
const ARITH_OPS: &[&str] = &["+", "-", "*"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Atom(String),
    Var(String),
    Int(i64),
    Punct(&'static str), // ( ) [ ] , | and operators
    ClauseEnd,
    Neck, // :-
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col: self.col, message: message.into() }
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek_byte()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek_byte() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'%') => {
                    while let Some(b) = self.peek_byte() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some(b'/') if self.src.get(self.pos + 1) == Some(&b'*') => {
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            Some(b'*') if self.peek_byte() == Some(b'/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                            None => return Err(self.err("unterminated block comment")),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn next_tok(&mut self) -> Result<(Tok, usize, usize), ParseError> {
        self.skip_trivia()?;
        let (line, col) = (self.line, self.col);
        let Some(b) = self.peek_byte() else {
            return Ok((Tok::Eof, line, col));
        };
        let tok = match b {
            b'(' | b')' | b'[' | b']' | b',' | b'|' | b'+' | b'*' => {
                self.bump();
                Tok::Punct(match b {
                    b'(' => "(",
                    b')' => ")",
                    b'[' => "[",
                    b']' => "]",
                    b',' => ",",
                    b'|' => "|",
                    b'+' => "+",
                    _ => "*",
                })
            }
            b'.' => {
                // A dot ends a clause when followed by layout or end of input.
                match self.src.get(self.pos + 1) {
                    None => {
                        self.bump();
                        Tok::ClauseEnd
                    }
                    Some(nb) if nb.is_ascii_whitespace() || *nb == b'%' => {
                        self.bump();
                        Tok::ClauseEnd
                    }
                    _ => return Err(self.err("unexpected '.' inside clause")),
                }
            }
            b':' => {
                self.bump();
                if self.peek_byte() == Some(b'-') {
                    self.bump();
                    Tok::Neck
                } else {
                    return Err(self.err("expected ':-'"));
                }
            }
            b'=' => {
                self.bump();
                match self.peek_byte() {
                    Some(b'<') => {
                        self.bump();
                        Tok::Punct("=<")
                    }
                    Some(b':') => {
                        self.bump();
                        if self.bump() != Some(b'=') {
                            return Err(self.err("expected '=:='"));
                        }
                        Tok::Punct("=:=")
                    }
                    Some(b'\\') => {
                        self.bump();
                        if self.bump() != Some(b'=') {
                            return Err(self.err("expected '=\\='"));
                        }
                        Tok::Punct("=\\=")
                    }
                    _ => Tok::Punct("="),
                }
            }
            b'<' => {
                self.bump();
                Tok::Punct("<")
            }
            b'>' => {
                self.bump();
                if self.peek_byte() == Some(b'=') {
                    self.bump();
                    Tok::Punct(">=")
                } else {
                    Tok::Punct(">")
                }
            }
            b'-' => {
                self.bump();
                if self.peek_byte().is_some_and(|c| c.is_ascii_digit()) {
                    let n = self.lex_int()?;
                    Tok::Int(-n)
                } else {
                    Tok::Punct("-")
                }
            }
            b'!' => {
                self.bump();
                Tok::Atom("!".into())
            }
            b'\'' => {
                self.bump();
                let mut name = String::new();
                loop {
                    match self.bump() {
                        Some(b'\'') => break,
                        Some(c) => name.push(c as char),
                        None => return Err(self.err("unterminated quoted atom")),
                    }
                }
                Tok::Atom(name)
            }
            b if b.is_ascii_digit() => Tok::Int(self.lex_int()?),
            b if b.is_ascii_lowercase() => Tok::Atom(self.lex_name()),
            b if b.is_ascii_uppercase() || b == b'_' => Tok::Var(self.lex_name()),
            b => {
                let c = b as char;
                return Err(self.err(format!("unsupported construct: character '{c}'")));
            }
        };
        Ok((tok, line, col))
    }

    fn lex_int(&mut self) -> Result<i64, ParseError> {
        let mut n: i64 = 0;
        while let Some(b) = self.peek_byte() {
            if !b.is_ascii_digit() {
                break;
            }
            n = n
                .checked_mul(10)
                .and_then(|n| n.checked_add((b - b'0') as i64))
                .ok_or_else(|| self.err("integer literal too large"))?;
            self.bump();
        }
        Ok(n)
    }

    fn lex_name(&mut self) -> String {
        let mut s = String::new();
        while let Some(b) = self.peek_byte() {
            if b.is_ascii_alphanumeric() || b == b'_' {
                s.push(b as char);
                self.bump();
            } else {
                break;
            }
        }
        s
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    tok_line: usize,
    tok_col: usize,
    table: VarTable,
    anon_count: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Parser<'a>, ParseError> {
        let mut lexer = Lexer::new(src);
        let (tok, tok_line, tok_col) = lexer.next_tok()?;
        Ok(Parser { lexer, tok, tok_line, tok_col, table: VarTable::new(), anon_count: 0 })
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.tok_line, col: self.tok_col, message: message.into() }
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, line, col) = self.lexer.next_tok()?;
        self.tok = tok;
        self.tok_line = line;
        self.tok_col = col;
        Ok(())
    }

    fn expect_punct(&mut self, p: &'static str) -> Result<(), ParseError> {
        if self.tok == Tok::Punct(p) {
            self.advance()
        } else {
            Err(self.err(format!("expected '{p}'")))
        }
    }

    fn intern_var(&mut self, name: &str) -> Term {
        let v = if name == "_" {
            self.anon_count += 1;
            let n = self.anon_count;
            self.table.fresh(&format!("_G{n}"))
        } else {
            self.table.intern(name)
        };
        Term::Var(v)
    }

    /// A term with one flat level of infix arithmetic.
    fn term(&mut self) -> Result<Term, ParseError> {
        let mut t = self.primary()?;
        loop {
            let op = match &self.tok {
                Tok::Punct(p) if ARITH_OPS.contains(p) => *p,
                _ => break,
            };
            self.advance()?;
            let rhs = self.primary()?;
            t = Term::Comp(op.to_owned(), vec![t, rhs]);
        }
        Ok(t)
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        match self.tok.clone() {
            Tok::Var(name) => {
                self.advance()?;
                Ok(self.intern_var(&name))
            }
            Tok::Int(n) => {
                self.advance()?;
                Ok(Term::Int(n))
            }
            Tok::Atom(name) => {
                self.advance()?;
                if self.tok == Tok::Punct("(") {
                    self.advance()?;
                    let mut args = vec![self.term()?];
                    while self.tok == Tok::Punct(",") {
                        self.advance()?;
                        args.push(self.term()?);
                    }
                    self.expect_punct(")")?;
                    Ok(Term::Comp(name, args))
                } else {
                    Ok(Term::Atom(name))
                }
            }
            Tok::Punct("[") => {
                self.advance()?;
                self.list_tail()
            }
            Tok::Punct("(") => {
                self.advance()?;
                let t = self.term()?;
                self.expect_punct(")")?;
                Ok(t)
            }
            _ => Err(self.err("expected a term")),
        }
    }

    /// Parses the remainder of a list after `[`.
    fn list_tail(&mut self) -> Result<Term, ParseError> {
        if self.tok == Tok::Punct("]") {
            self.advance()?;
            return Ok(Term::Atom("[]".into()));
        }
        let mut items = vec![self.term()?];
        while self.tok == Tok::Punct(",") {
            self.advance()?;
            items.push(self.term()?);
        }
        let tail = if self.tok == Tok::Punct("|") {
            self.advance()?;
            let t = self.term()?;
            self.expect_punct("]")?;
            t
        } else {
            self.expect_punct("]")?;
            Term::Atom("[]".into())
        };
        Ok(items
            .into_iter()
            .rev()
            .fold(tail, |t, h| Term::Comp(".".into(), vec![h, t])))
    }

    /// A body goal: a term, optionally combined with an infix goal operator.
    fn goal(&mut self) -> Result<Term, ParseError> {
        let lhs = self.term()?;
        let op = match &self.tok {
            Tok::Punct(p) if GOAL_OPS.contains(p) => p.to_string(),
            Tok::Atom(a) if a == "is" => "is".to_owned(),
            _ => return Ok(lhs),
        };
        // `is` arrives as an atom token when it follows the left operand.
        if let Tok::Atom(a) = &self.tok {
            debug_assert_eq!(a, "is");
        }
        self.advance()?;
        let rhs = self.term()?;
        Ok(Term::Comp(op, vec![lhs, rhs]))
    }

    fn body(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut goals = vec![self.goal()?];
        while self.tok == Tok::Punct(",") {
            self.advance()?;
            goals.push(self.goal()?);
        }
        Ok(goals)
    }

    fn clause_or_directive(&mut self) -> Result<Option<(bool, ParsedClause)>, ParseError> {
        if self.tok == Tok::Eof {
            return Ok(None);
        }
        self.table = VarTable::new();
        self.anon_count = 0;
        if self.tok == Tok::Neck {
            // Directive.
            self.advance()?;
            let goal = self.goal()?;
            self.expect_clause_end()?;
            let table = std::mem::take(&mut self.table);
            return Ok(Some((true, ParsedClause { head: goal, body: Vec::new(), table })));
        }
        let head = self.term()?;
        match &head {
            Term::Comp(_, _) | Term::Atom(_) => {}
            _ => return Err(self.err("clause head must be an atom or compound term")),
        }
        let body = if self.tok == Tok::Neck {
            self.advance()?;
            self.body()?
        } else {
            Vec::new()
        };
        self.expect_clause_end()?;
        let table = std::mem::take(&mut self.table);
        Ok(Some((false, ParsedClause { head, body, table })))
    }

    fn expect_clause_end(&mut self) -> Result<(), ParseError> {
        if self.tok == Tok::ClauseEnd {
            self.advance()
        } else {
            Err(self.err("expected '.' at end of clause"))
        }
    }
}

/// Parses a program in the supported Prolog subset.
pub fn parse_program(text: &str) -> Result<ParsedProgram, ParseError> {
    let mut parser = Parser::new(text)?;
    let mut program = ParsedProgram::default();
    while let Some((is_directive, clause)) = parser.clause_or_directive()? {
        if is_directive {
            match &clause.head {
                Term::Comp(f, args) if f == "entry" && args.len() == 1 => {
                    program.entries.push(EntryGoal { goal: args[0].clone(), table: clause.table });
                }
                Term::Comp(f, _) | Term::Atom(f) => {
                    return Err(ParseError {
                        line: 1,
                        col: 1,
                        message: format!("unsupported construct: directive '{f}'"),
                    });
                }
                _ => {
                    return Err(ParseError {
                        line: 1,
                        col: 1,
                        message: "unsupported construct: non-atom directive".into(),
                    });
                }
            }
        } else {
            program.clauses.push(clause);
        }
    }
    Ok(program)
}

/// Renders a term using the clause's variable table, re-sugaring lists and
/// infix operators so that output re-parses to the same program.
pub fn term_to_string(t: &Term, table: &VarTable) -> String {
    let mut s = String::new();
    write_term(&mut s, t, table);
    s
}

fn write_term(out: &mut String, t: &Term, table: &VarTable) {
    match t {
        Term::Var(v) => out.push_str(table.name(*v)),
        Term::Int(n) => out.push_str(&n.to_string()),
        Term::Atom(a) => write_atom(out, a),
        Term::Comp(f, args) if f == "." && args.len() == 2 => {
            out.push('[');
            write_term(out, &args[0], table);
            let mut tail = &args[1];
            loop {
                match tail {
                    Term::Atom(a) if a == "[]" => break,
                    Term::Comp(f, args) if f == "." && args.len() == 2 => {
                        out.push(',');
                        write_term(out, &args[0], table);
                        tail = &args[1];
                    }
                    other => {
                        out.push('|');
                        write_term(out, other, table);
                        break;
                    }
                }
            }
            out.push(']');
        }
        Term::Comp(f, args)
            if args.len() == 2 && (GOAL_OPS.contains(&f.as_str()) || ARITH_OPS.contains(&f.as_str())) =>
        {
            // Parenthesize operands so flat-precedence parsing round-trips.
            let bracket = |t: &Term| matches!(t, Term::Comp(f, a) if a.len() == 2 && ARITH_OPS.contains(&f.as_str()));
            if bracket(&args[0]) {
                out.push('(');
                write_term(out, &args[0], table);
                out.push(')');
            } else {
                write_term(out, &args[0], table);
            }
            out.push(' ');
            out.push_str(f);
            out.push(' ');
            if bracket(&args[1]) {
                out.push('(');
                write_term(out, &args[1], table);
                out.push(')');
            } else {
                write_term(out, &args[1], table);
            }
        }
        Term::Comp(f, args) => {
            write_atom(out, f);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_term(out, a, table);
            }
            out.push(')');
        }
    }
}

fn write_atom(out: &mut String, a: &str) {
    let plain = !a.is_empty()
        && a.as_bytes()[0].is_ascii_lowercase()
        && a.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_');
    if plain || a == "[]" || a == "!" {
        out.push_str(a);
    } else {
        out.push('\'');
        out.push_str(a);
        out.push('\'');
    }
}

/// Renders a whole program; used for round-trip testing.
pub fn program_to_string(p: &ParsedProgram) -> String {
    let mut out = String::new();
    for e in &p.entries {
        out.push_str(":- entry(");
        out.push_str(&term_to_string(&e.goal, &e.table));
        out.push_str(").\n");
    }
    for c in &p.clauses {
        out.push_str(&term_to_string(&c.head, &c.table));
        if !c.body.is_empty() {
            out.push_str(" :- ");
            for (i, g) in c.body.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&term_to_string(g, &c.table));
            }
        }
        out.push_str(".\n");
    }
    out
}
