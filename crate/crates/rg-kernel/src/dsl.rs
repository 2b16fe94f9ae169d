//! Text frontend: scripts declare a finite state space, name predicates
//! and commands, and list check goals. The surface syntax mirrors the
//! refinement-calculus notation: `pgm<x' = x + 1>`, `rely<r>`, `c ; d`,
//! `c | d`, `c || d`, `c /\ d`, `fin(c)`, `om(c)`, `while b do c od`.
//!
//! A script is `decl* goal*`. Declarations:
//!
//! ```text
//! var x in 0..2;            var b in bool;         var w in sets({0,1});
//! arr a [{0,1}] in bool;
//! set p := x = 0;           rel r := x' = x;       cmd spec := rely<r> /\ post[x' = 0];
//! check refine spec >= pgm<x' = 0> depth 3;
//! check stable {x = 0} under r;
//! ```
//!
//! Goals may end with `expect fail` to mark a negative control.

use std::fmt;

use crate::refine::Engine;
use crate::state::Value;

// ---------------------------------------------------------------------------
// Tokens
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Tok {
    Ident(String),
    Primed(String),
    Int(i64),
    Str(String),
    Semi,
    Colon,
    ColonEq,
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Lt,
    Gt,
    GtEq,
    Eq,
    NotEq,
    Bang,
    Plus,
    Minus,
    Star,
    Bar,
    BarBar,
    AndAnd, // /\
    OrOr,   // \/
    Arrow,
    DotDot,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Primed(s) => write!(f, "{s}'"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Semi => write!(f, ";"),
            Tok::Colon => write!(f, ":"),
            Tok::ColonEq => write!(f, ":="),
            Tok::Comma => write!(f, ","),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBrace => write!(f, "{{"),
            Tok::RBrace => write!(f, "}}"),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::Lt => write!(f, "<"),
            Tok::Gt => write!(f, ">"),
            Tok::GtEq => write!(f, ">="),
            Tok::Eq => write!(f, "="),
            Tok::NotEq => write!(f, "!="),
            Tok::Bang => write!(f, "!"),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::Bar => write!(f, "|"),
            Tok::BarBar => write!(f, "||"),
            Tok::AndAnd => write!(f, "/\\"),
            Tok::OrOr => write!(f, "\\/"),
            Tok::Arrow => write!(f, "->"),
            Tok::DotDot => write!(f, ".."),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub found: String,
    pub expected: Vec<String>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" | "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

type Spanned = (Tok, u32, u32);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = *self.src.get(self.pos)?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn err(&self, message: String) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            found: self
                .peek()
                .map(|c| (c as char).to_string())
                .unwrap_or_else(|| "end of input".into()),
            expected: vec![],
            message,
        }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            // skip whitespace and comments (`//` or `#` to end of line)
            loop {
                match self.peek() {
                    Some(c) if c.is_ascii_whitespace() => {
                        self.bump();
                    }
                    Some(b'#') => while matches!(self.bump(), Some(c) if c != b'\n') {},
                    Some(b'/') if self.src.get(self.pos + 1) == Some(&b'/') => {
                        while matches!(self.bump(), Some(c) if c != b'\n') {}
                    }
                    _ => break,
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push((Tok::Eof, line, col));
                return Ok(out);
            };
            let two = self.src.get(self.pos + 1).copied();
            let tok = match c {
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    let start = self.pos;
                    while matches!(self.peek(), Some(b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_'))
                    {
                        self.bump();
                    }
                    let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                    if self.peek() == Some(b'\'') {
                        self.bump();
                        Tok::Primed(name)
                    } else {
                        Tok::Ident(name)
                    }
                }
                b'0'..=b'9' => {
                    let start = self.pos;
                    while matches!(self.peek(), Some(b'0'..=b'9')) {
                        self.bump();
                    }
                    let text = String::from_utf8_lossy(&self.src[start..self.pos]);
                    Tok::Int(
                        text.parse()
                            .map_err(|_| self.err(format!("integer literal {text} too large")))?,
                    )
                }
                b'"' => {
                    self.bump();
                    let start = self.pos;
                    while matches!(self.peek(), Some(c) if c != b'"') {
                        self.bump();
                    }
                    if self.peek().is_none() {
                        return Err(self.err("unterminated string".into()));
                    }
                    let s = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                    self.bump();
                    Tok::Str(s)
                }
                b';' => {
                    self.bump();
                    Tok::Semi
                }
                b':' if two == Some(b'=') => {
                    self.bump();
                    self.bump();
                    Tok::ColonEq
                }
                b':' => {
                    self.bump();
                    Tok::Colon
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'{' => {
                    self.bump();
                    Tok::LBrace
                }
                b'}' => {
                    self.bump();
                    Tok::RBrace
                }
                b'[' => {
                    self.bump();
                    Tok::LBracket
                }
                b']' => {
                    self.bump();
                    Tok::RBracket
                }
                b'<' => {
                    self.bump();
                    Tok::Lt
                }
                b'>' if two == Some(b'=') => {
                    self.bump();
                    self.bump();
                    Tok::GtEq
                }
                b'>' => {
                    self.bump();
                    Tok::Gt
                }
                b'=' => {
                    self.bump();
                    Tok::Eq
                }
                b'!' if two == Some(b'=') => {
                    self.bump();
                    self.bump();
                    Tok::NotEq
                }
                b'!' => {
                    self.bump();
                    Tok::Bang
                }
                b'+' => {
                    self.bump();
                    Tok::Plus
                }
                b'-' if two == Some(b'>') => {
                    self.bump();
                    self.bump();
                    Tok::Arrow
                }
                b'-' => {
                    self.bump();
                    Tok::Minus
                }
                b'*' => {
                    self.bump();
                    Tok::Star
                }
                b'|' if two == Some(b'|') => {
                    self.bump();
                    self.bump();
                    Tok::BarBar
                }
                b'|' => {
                    self.bump();
                    Tok::Bar
                }
                b'/' if two == Some(b'\\') => {
                    self.bump();
                    self.bump();
                    Tok::AndAnd
                }
                b'\\' if two == Some(b'/') => {
                    self.bump();
                    self.bump();
                    Tok::OrOr
                }
                b'.' if two == Some(b'.') => {
                    self.bump();
                    self.bump();
                    Tok::DotDot
                }
                other => {
                    return Err(self.err(format!("unexpected character {:?}", other as char)))
                }
            };
            out.push((tok, line, col));
        }
    }
}

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PBinOp {
    Or,
    And,
    Eq,
    Ne,
    In,
    SubsetEq,
    Add,
    Sub,
    Union,
    Inter,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PUnOp {
    Not,
    Neg,
}

/// Predicate / expression AST. The same shape serves single-state
/// predicates (unprimed only), transition predicates (primed names read
/// the post-state), and fine-grained value expressions.
#[derive(Clone, PartialEq, Debug)]
pub enum PredAst {
    Lit(Value),
    /// `x` or `x'`; in expression position a bare name is a dereference.
    Var { name: String, primed: bool },
    /// `a[e]` or `a'[e]`; the index is evaluated in the pre-state.
    Index {
        name: String,
        primed: bool,
        idx: Box<PredAst>,
    },
    Un(PUnOp, Box<PredAst>),
    Bin(Box<PredAst>, PBinOp, Box<PredAst>),
}

#[derive(Clone, PartialEq, Debug)]
pub enum CmdAst {
    Bot,
    Top,
    Nil,
    Term,
    Idle,
    Fair,
    Hole,
    Name(String),
    Test(PredAst),
    Pgm(PredAst),
    Env(PredAst),
    Assert(PredAst),
    Guar(PredAst),
    Rely(PredAst),
    Post(PredAst),
    Atomic(PredAst),
    Opt(PredAst),
    Frame(String, Box<CmdAst>),
    Seq(Box<CmdAst>, Box<CmdAst>),
    Choice(Box<CmdAst>, Box<CmdAst>),
    Par(Box<CmdAst>, Box<CmdAst>),
    Conj(Box<CmdAst>, Box<CmdAst>),
    Fin(Box<CmdAst>),
    Om(Box<CmdAst>),
    If(PredAst, Box<CmdAst>, Box<CmdAst>),
    While(PredAst, Box<CmdAst>),
    /// `[e -> k]`: evaluate `e` to the literal `k`.
    Eval(PredAst, Value),
}

#[derive(Clone, PartialEq, Debug)]
pub enum DomainAst {
    Bool,
    Range(i64, i64),
    Explicit(Vec<i64>),
    SetsOver(Vec<i64>),
}

#[derive(Clone, PartialEq, Debug)]
pub enum Decl {
    Var(String, DomainAst),
    Arr(String, DomainAst, DomainAst),
    Set(String, PredAst),
    Rel(String, PredAst),
    Cmd(String, CmdAst),
}

/// A state set in goal position: named or inline `{pred}`.
#[derive(Clone, PartialEq, Debug)]
pub enum SetRef {
    Named(String),
    Pred(PredAst),
}

/// A relation in goal position: named or inline `[pred]`.
#[derive(Clone, PartialEq, Debug)]
pub enum RelRef {
    Named(String),
    Pred(PredAst),
}

#[derive(Clone, PartialEq, Debug)]
pub enum GoalBody {
    Refine(CmdAst, CmdAst),
    Equal(CmdAst, CmdAst),
    Triple(PredAst, CmdAst, PredAst),
    Establish {
        p: SetRef,
        r: RelRef,
        e: PredAst,
        k: Value,
        target: SetRef,
    },
    Stable(SetRef, RelRef),
    Tolerates(RelRef, RelRef, SetRef),
    Law {
        id: String,
        samples: Option<usize>,
    },
    Guarantee(CmdAst, RelRef),
    WhileRule {
        b: PredAst,
        c: Box<CmdAst>,
        r: RelRef,
        q: RelRef,
        p: SetRef,
        p_t: SetRef,
        p_f: SetRef,
        p_x: SetRef,
        variant: PredAst,
    },
    Recursion {
        s: Box<CmdAst>,
        f: Box<CmdAst>,
        p_x: SetRef,
        variant: PredAst,
    },
    Remove {
        weaken_rely: bool,
        strengthen_guar: bool,
    },
    Fairness,
}

#[derive(Clone, Debug)]
pub struct Goal {
    pub body: GoalBody,
    pub depth: Option<usize>,
    pub engine: Option<Engine>,
    pub expect_fail: bool,
    pub line: u32,
}

// source position is diagnostics, not syntax: the printer re-flows
// lines, so round-tripping must not compare them
impl PartialEq for Goal {
    fn eq(&self, other: &Self) -> bool {
        self.body == other.body
            && self.depth == other.depth
            && self.engine == other.engine
            && self.expect_fail == other.expect_fail
    }
}

#[derive(Clone, PartialEq, Debug, Default)]
pub struct Script {
    pub decls: Vec<Decl>,
    pub goals: Vec<Goal>,
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

/// Words that can never begin a command; a `;` followed by one of these
/// ends a sequential composition instead of continuing it.
const RESERVED: &[&str] = &[
    "var",
    "arr",
    "set",
    "rel",
    "cmd",
    "check",
    "refine",
    "equal",
    "triple",
    "establish",
    "stable",
    "tolerates",
    "law",
    "guarantee",
    "whilerule",
    "recursion",
    "remove",
    "fairness",
    "depth",
    "engine",
    "expect",
    "fail",
    "under",
    "from",
    "achieves",
    "variant",
    "inv",
    "qrel",
    "exit",
    "samples",
    "then",
    "else",
    "fi",
    "do",
    "od",
    "in",
    "weaken_rely",
    "strengthen_guar",
];

const CMD_KEYWORDS: &[&str] = &[
    "bot", "top", "nil", "term", "idle", "fair", "hole", "test", "pgm", "env", "assert", "guar",
    "rely", "post", "atomic", "opt", "fin", "om", "if", "while",
];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (u32, u32) {
        let (_, l, c) = self.toks[self.pos];
        (l, c)
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError {
            line,
            col,
            found: self.peek().to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            message: format!("unexpected {}", self.peek()),
        })
    }

    fn error<T>(&self, message: String) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError {
            line,
            col,
            found: self.peek().to_string(),
            expected: vec![],
            message,
        })
    }

    fn expect(&mut self, t: Tok, name: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.fail(&[name])
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            _ => self.fail(&[kw]),
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail(&[what]),
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        match *self.peek() {
            Tok::Int(i) => {
                self.bump();
                Ok(i)
            }
            _ => self.fail(&["integer"]),
        }
    }

    // -- predicates / expressions ------------------------------------------

    fn pred(&mut self) -> Result<PredAst, ParseError> {
        self.pred_or()
    }

    fn pred_or(&mut self) -> Result<PredAst, ParseError> {
        let mut a = self.pred_and()?;
        while *self.peek() == Tok::OrOr {
            self.bump();
            let b = self.pred_and()?;
            a = PredAst::Bin(Box::new(a), PBinOp::Or, Box::new(b));
        }
        Ok(a)
    }

    fn pred_and(&mut self) -> Result<PredAst, ParseError> {
        let mut a = self.pred_cmp()?;
        while *self.peek() == Tok::AndAnd {
            self.bump();
            let b = self.pred_cmp()?;
            a = PredAst::Bin(Box::new(a), PBinOp::And, Box::new(b));
        }
        Ok(a)
    }

    fn pred_cmp(&mut self) -> Result<PredAst, ParseError> {
        let a = self.pred_add()?;
        let op = match self.peek() {
            Tok::Eq => PBinOp::Eq,
            Tok::NotEq => PBinOp::Ne,
            Tok::Ident(s) if s == "in" => PBinOp::In,
            Tok::Ident(s) if s == "subseteq" => PBinOp::SubsetEq,
            _ => return Ok(a),
        };
        self.bump();
        let b = self.pred_add()?;
        Ok(PredAst::Bin(Box::new(a), op, Box::new(b)))
    }

    fn pred_add(&mut self) -> Result<PredAst, ParseError> {
        let mut a = self.pred_unary()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => PBinOp::Add,
                Tok::Minus => PBinOp::Sub,
                Tok::Ident(s) if s == "union" => PBinOp::Union,
                Tok::Ident(s) if s == "inter" => PBinOp::Inter,
                _ => return Ok(a),
            };
            self.bump();
            let b = self.pred_unary()?;
            a = PredAst::Bin(Box::new(a), op, Box::new(b));
        }
    }

    fn pred_unary(&mut self) -> Result<PredAst, ParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(PredAst::Un(PUnOp::Not, Box::new(self.pred_unary()?)))
            }
            Tok::Minus => {
                self.bump();
                Ok(PredAst::Un(PUnOp::Neg, Box::new(self.pred_unary()?)))
            }
            // explicit dereference reads the same location as the bare name
            Tok::Star => {
                self.bump();
                self.pred_unary()
            }
            _ => self.pred_primary(),
        }
    }

    fn pred_primary(&mut self) -> Result<PredAst, ParseError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(PredAst::Lit(Value::Int(i)))
            }
            Tok::LBrace => Ok(PredAst::Lit(self.set_literal()?)),
            Tok::LParen => {
                self.bump();
                let p = self.pred()?;
                self.expect(Tok::RParen, ")")?;
                Ok(p)
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(PredAst::Lit(Value::Bool(true)))
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(PredAst::Lit(Value::Bool(false)))
            }
            Tok::Ident(name) => {
                self.bump();
                self.pred_lvalue(name, false)
            }
            Tok::Primed(name) => {
                self.bump();
                self.pred_lvalue(name, true)
            }
            _ => self.fail(&["literal", "identifier", "(", "{"]),
        }
    }

    fn pred_lvalue(&mut self, name: String, primed: bool) -> Result<PredAst, ParseError> {
        if *self.peek() == Tok::LBracket {
            self.bump();
            let idx = self.pred()?;
            self.expect(Tok::RBracket, "]")?;
            Ok(PredAst::Index {
                name,
                primed,
                idx: Box::new(idx),
            })
        } else {
            Ok(PredAst::Var { name, primed })
        }
    }

    fn set_literal(&mut self) -> Result<Value, ParseError> {
        self.expect(Tok::LBrace, "{")?;
        let mut elems = Vec::new();
        if *self.peek() != Tok::RBrace {
            loop {
                let i = self.int()?;
                if !(0..64).contains(&i) {
                    return self.error(format!("set element {i} outside 0..=63"));
                }
                elems.push(i as u8);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace, "}")?;
        Ok(Value::set_from(&elems))
    }

    fn literal(&mut self) -> Result<Value, ParseError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Value::Int(i))
            }
            Tok::Minus => {
                self.bump();
                Ok(Value::Int(-self.int()?))
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Value::Bool(true))
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Value::Bool(false))
            }
            Tok::LBrace => self.set_literal(),
            _ => self.fail(&["integer", "true", "false", "set literal"]),
        }
    }

    // -- commands ----------------------------------------------------------

    /// Can the current token begin a command expression?
    fn starts_cmd(&self) -> bool {
        match self.peek() {
            Tok::LParen | Tok::LBracket => true,
            Tok::Ident(s) => !RESERVED.contains(&s.as_str()),
            _ => false,
        }
    }

    fn cmd(&mut self) -> Result<CmdAst, ParseError> {
        self.cmd_choice()
    }

    fn cmd_choice(&mut self) -> Result<CmdAst, ParseError> {
        let mut a = self.cmd_par()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let b = self.cmd_par()?;
            a = CmdAst::Choice(Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn cmd_par(&mut self) -> Result<CmdAst, ParseError> {
        let mut a = self.cmd_conj()?;
        while *self.peek() == Tok::BarBar {
            self.bump();
            let b = self.cmd_conj()?;
            a = CmdAst::Par(Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn cmd_conj(&mut self) -> Result<CmdAst, ParseError> {
        let mut a = self.cmd_seq()?;
        while *self.peek() == Tok::AndAnd {
            self.bump();
            let b = self.cmd_seq()?;
            a = CmdAst::Conj(Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn cmd_seq(&mut self) -> Result<CmdAst, ParseError> {
        let mut a = self.cmd_frame()?;
        // a `;` continues the sequence only if a command can follow;
        // otherwise it terminates the enclosing declaration or goal
        while *self.peek() == Tok::Semi && {
            let save = self.pos;
            self.pos += 1;
            let more = self.starts_cmd();
            self.pos = save;
            more
        } {
            self.bump();
            let b = self.cmd_frame()?;
            a = CmdAst::Seq(Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn cmd_frame(&mut self) -> Result<CmdAst, ParseError> {
        if let Tok::Ident(name) = self.peek().clone() {
            if !RESERVED.contains(&name.as_str())
                && !CMD_KEYWORDS.contains(&name.as_str())
                && *self.peek2() == Tok::Colon
            {
                self.bump();
                self.bump();
                let body = self.cmd_frame()?;
                return Ok(CmdAst::Frame(name, Box::new(body)));
            }
        }
        self.cmd_primary()
    }

    fn angle_pred(&mut self) -> Result<PredAst, ParseError> {
        self.expect(Tok::Lt, "<")?;
        let p = self.pred()?;
        self.expect(Tok::Gt, ">")?;
        Ok(p)
    }

    fn brace_pred(&mut self) -> Result<PredAst, ParseError> {
        self.expect(Tok::LBrace, "{")?;
        let p = self.pred()?;
        self.expect(Tok::RBrace, "}")?;
        Ok(p)
    }

    fn bracket_pred(&mut self) -> Result<PredAst, ParseError> {
        self.expect(Tok::LBracket, "[")?;
        let p = self.pred()?;
        self.expect(Tok::RBracket, "]")?;
        Ok(p)
    }

    fn cmd_primary(&mut self) -> Result<CmdAst, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let c = self.cmd()?;
                self.expect(Tok::RParen, ")")?;
                Ok(c)
            }
            Tok::LBracket => {
                // [e -> k]
                self.bump();
                let e = self.pred()?;
                self.expect(Tok::Arrow, "->")?;
                let k = self.literal()?;
                self.expect(Tok::RBracket, "]")?;
                Ok(CmdAst::Eval(e, k))
            }
            Tok::Ident(kw) => match kw.as_str() {
                "bot" => {
                    self.bump();
                    Ok(CmdAst::Bot)
                }
                "top" => {
                    self.bump();
                    Ok(CmdAst::Top)
                }
                "nil" => {
                    self.bump();
                    Ok(CmdAst::Nil)
                }
                "term" => {
                    self.bump();
                    Ok(CmdAst::Term)
                }
                "idle" => {
                    self.bump();
                    Ok(CmdAst::Idle)
                }
                "fair" => {
                    self.bump();
                    Ok(CmdAst::Fair)
                }
                "hole" => {
                    self.bump();
                    Ok(CmdAst::Hole)
                }
                "test" => {
                    self.bump();
                    Ok(CmdAst::Test(self.angle_pred()?))
                }
                "pgm" => {
                    self.bump();
                    Ok(CmdAst::Pgm(self.angle_pred()?))
                }
                "env" => {
                    self.bump();
                    Ok(CmdAst::Env(self.angle_pred()?))
                }
                "guar" => {
                    self.bump();
                    Ok(CmdAst::Guar(self.angle_pred()?))
                }
                "rely" => {
                    self.bump();
                    Ok(CmdAst::Rely(self.angle_pred()?))
                }
                "assert" => {
                    self.bump();
                    Ok(CmdAst::Assert(self.brace_pred()?))
                }
                "post" => {
                    self.bump();
                    Ok(CmdAst::Post(self.bracket_pred()?))
                }
                "atomic" => {
                    self.bump();
                    Ok(CmdAst::Atomic(self.bracket_pred()?))
                }
                "opt" => {
                    self.bump();
                    Ok(CmdAst::Opt(self.bracket_pred()?))
                }
                "fin" => {
                    self.bump();
                    self.expect(Tok::LParen, "(")?;
                    let c = self.cmd()?;
                    self.expect(Tok::RParen, ")")?;
                    Ok(CmdAst::Fin(Box::new(c)))
                }
                "om" => {
                    self.bump();
                    self.expect(Tok::LParen, "(")?;
                    let c = self.cmd()?;
                    self.expect(Tok::RParen, ")")?;
                    Ok(CmdAst::Om(Box::new(c)))
                }
                "if" => {
                    self.bump();
                    let b = self.pred()?;
                    self.expect_kw("then")?;
                    let c = self.cmd()?;
                    self.expect_kw("else")?;
                    let d = self.cmd()?;
                    self.expect_kw("fi")?;
                    Ok(CmdAst::If(b, Box::new(c), Box::new(d)))
                }
                "while" => {
                    self.bump();
                    let b = self.pred()?;
                    self.expect_kw("do")?;
                    let c = self.cmd()?;
                    self.expect_kw("od")?;
                    Ok(CmdAst::While(b, Box::new(c)))
                }
                _ if !RESERVED.contains(&kw.as_str()) => {
                    self.bump();
                    Ok(CmdAst::Name(kw))
                }
                _ => self.fail(&["command"]),
            },
            _ => self.fail(&["command"]),
        }
    }

    // -- declarations and goals --------------------------------------------

    fn domain(&mut self) -> Result<DomainAst, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "bool" => {
                self.bump();
                Ok(DomainAst::Bool)
            }
            Tok::Ident(s) if s == "sets" => {
                self.bump();
                self.expect(Tok::LParen, "(")?;
                let elems = self.int_set()?;
                self.expect(Tok::RParen, ")")?;
                Ok(DomainAst::SetsOver(elems))
            }
            Tok::Int(lo) => {
                self.bump();
                self.expect(Tok::DotDot, "..")?;
                let hi = self.int()?;
                Ok(DomainAst::Range(lo, hi))
            }
            Tok::LBrace => Ok(DomainAst::Explicit(self.int_set()?)),
            _ => self.fail(&["bool", "lo..hi", "{values}", "sets({elems})"]),
        }
    }

    fn int_set(&mut self) -> Result<Vec<i64>, ParseError> {
        self.expect(Tok::LBrace, "{")?;
        let mut out = Vec::new();
        if *self.peek() != Tok::RBrace {
            loop {
                out.push(self.int()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace, "}")?;
        Ok(out)
    }

    fn set_ref(&mut self) -> Result<SetRef, ParseError> {
        if *self.peek() == Tok::LBrace {
            Ok(SetRef::Pred(self.brace_pred()?))
        } else {
            Ok(SetRef::Named(self.ident("set name or {pred}")?))
        }
    }

    fn rel_ref(&mut self) -> Result<RelRef, ParseError> {
        if *self.peek() == Tok::LBracket {
            Ok(RelRef::Pred(self.bracket_pred()?))
        } else {
            Ok(RelRef::Named(self.ident("relation name or [pred]")?))
        }
    }

    fn goal_body(&mut self) -> Result<GoalBody, ParseError> {
        let kw = self.ident("goal kind")?;
        match kw.as_str() {
            "refine" => {
                let a = self.cmd()?;
                self.expect(Tok::GtEq, ">=")?;
                let b = self.cmd()?;
                Ok(GoalBody::Refine(a, b))
            }
            "equal" => {
                let a = self.cmd()?;
                self.expect(Tok::Eq, "=")?;
                let b = self.cmd()?;
                Ok(GoalBody::Equal(a, b))
            }
            "triple" => {
                let p = self.brace_pred()?;
                let c = self.cmd()?;
                let p1 = self.brace_pred()?;
                Ok(GoalBody::Triple(p, c, p1))
            }
            "establish" => {
                let p = self.set_ref()?;
                self.expect_kw("under")?;
                let r = self.rel_ref()?;
                self.expect(Tok::Colon, ":")?;
                self.expect(Tok::LBracket, "[")?;
                let e = self.pred()?;
                self.expect(Tok::Arrow, "->")?;
                let k = self.literal()?;
                self.expect(Tok::RBracket, "]")?;
                self.expect_kw("achieves")?;
                let target = self.set_ref()?;
                Ok(GoalBody::Establish { p, r, e, k, target })
            }
            "stable" => {
                let p = self.set_ref()?;
                self.expect_kw("under")?;
                let r = self.rel_ref()?;
                Ok(GoalBody::Stable(p, r))
            }
            "tolerates" => {
                let q = self.rel_ref()?;
                self.expect_kw("under")?;
                let r = self.rel_ref()?;
                self.expect_kw("from")?;
                let p = self.set_ref()?;
                Ok(GoalBody::Tolerates(q, r, p))
            }
            "law" => {
                let id = match self.peek().clone() {
                    Tok::Str(s) => {
                        self.bump();
                        s
                    }
                    _ => return self.fail(&["law id string"]),
                };
                let samples = if self.at_kw("samples") {
                    self.bump();
                    Some(self.int()? as usize)
                } else {
                    None
                };
                Ok(GoalBody::Law { id, samples })
            }
            "guarantee" => {
                let c = self.cmd()?;
                self.expect_kw("under")?;
                let g = self.rel_ref()?;
                Ok(GoalBody::Guarantee(c, g))
            }
            "whilerule" => {
                self.expect_kw("while")?;
                let b = self.pred()?;
                self.expect_kw("do")?;
                let c = self.cmd()?;
                self.expect_kw("od")?;
                self.expect_kw("under")?;
                let r = self.rel_ref()?;
                self.expect_kw("qrel")?;
                let q = self.rel_ref()?;
                self.expect_kw("inv")?;
                let p = self.set_ref()?;
                let p_t = self.set_ref()?;
                let p_f = self.set_ref()?;
                let p_x = self.set_ref()?;
                self.expect_kw("variant")?;
                let variant = self.pred()?;
                Ok(GoalBody::WhileRule {
                    b,
                    c: Box::new(c),
                    r,
                    q,
                    p,
                    p_t,
                    p_f,
                    p_x,
                    variant,
                })
            }
            "recursion" => {
                let s = self.cmd()?;
                self.expect(Tok::GtEq, ">=")?;
                let f = self.cmd()?;
                self.expect_kw("exit")?;
                let p_x = self.set_ref()?;
                self.expect_kw("variant")?;
                let variant = self.pred()?;
                Ok(GoalBody::Recursion {
                    s: Box::new(s),
                    f: Box::new(f),
                    p_x,
                    variant,
                })
            }
            "remove" => {
                let mut weaken_rely = false;
                let mut strengthen_guar = false;
                loop {
                    if self.at_kw("weaken_rely") {
                        self.bump();
                        weaken_rely = true;
                    } else if self.at_kw("strengthen_guar") {
                        self.bump();
                        strengthen_guar = true;
                    } else {
                        break;
                    }
                }
                Ok(GoalBody::Remove {
                    weaken_rely,
                    strengthen_guar,
                })
            }
            "fairness" => Ok(GoalBody::Fairness),
            _ => self.fail(&[
                "refine",
                "equal",
                "triple",
                "establish",
                "stable",
                "tolerates",
                "law",
                "guarantee",
                "whilerule",
                "recursion",
                "remove",
                "fairness",
            ]),
        }
    }

    fn goal(&mut self) -> Result<Goal, ParseError> {
        let (line, _) = self.here();
        self.expect_kw("check")?;
        let body = self.goal_body()?;
        let mut depth = None;
        let mut engine = None;
        let mut expect_fail = false;
        loop {
            if self.at_kw("depth") {
                self.bump();
                depth = Some(self.int()? as usize);
            } else if self.at_kw("engine") {
                self.bump();
                let name = self.ident("enum or graph")?;
                engine = Some(match name.parse::<Engine>() {
                    Ok(e) => e,
                    Err(m) => return self.error(m),
                });
            } else if self.at_kw("expect") {
                self.bump();
                self.expect_kw("fail")?;
                expect_fail = true;
            } else {
                break;
            }
        }
        self.expect(Tok::Semi, ";")?;
        Ok(Goal {
            body,
            depth,
            engine,
            expect_fail,
            line,
        })
    }

    fn script(&mut self) -> Result<Script, ParseError> {
        let mut s = Script::default();
        loop {
            match self.peek().clone() {
                Tok::Eof => return Ok(s),
                Tok::Ident(kw) => match kw.as_str() {
                    "var" => {
                        self.bump();
                        let name = self.ident("variable name")?;
                        self.expect_kw("in")?;
                        let dom = self.domain()?;
                        self.expect(Tok::Semi, ";")?;
                        s.decls.push(Decl::Var(name, dom));
                    }
                    "arr" => {
                        self.bump();
                        let name = self.ident("array name")?;
                        self.expect(Tok::LBracket, "[")?;
                        let idx = self.domain()?;
                        self.expect(Tok::RBracket, "]")?;
                        self.expect_kw("in")?;
                        let dom = self.domain()?;
                        self.expect(Tok::Semi, ";")?;
                        s.decls.push(Decl::Arr(name, idx, dom));
                    }
                    "set" => {
                        self.bump();
                        let name = self.ident("set name")?;
                        self.expect(Tok::ColonEq, ":=")?;
                        let p = self.pred()?;
                        self.expect(Tok::Semi, ";")?;
                        s.decls.push(Decl::Set(name, p));
                    }
                    "rel" => {
                        self.bump();
                        let name = self.ident("relation name")?;
                        self.expect(Tok::ColonEq, ":=")?;
                        let p = self.pred()?;
                        self.expect(Tok::Semi, ";")?;
                        s.decls.push(Decl::Rel(name, p));
                    }
                    "cmd" => {
                        self.bump();
                        let name = self.ident("command name")?;
                        self.expect(Tok::ColonEq, ":=")?;
                        let c = self.cmd()?;
                        self.expect(Tok::Semi, ";")?;
                        s.decls.push(Decl::Cmd(name, c));
                    }
                    "check" => s.goals.push(self.goal()?),
                    _ => return self.fail(&["var", "arr", "set", "rel", "cmd", "check"]),
                },
                _ => return self.fail(&["var", "arr", "set", "rel", "cmd", "check"]),
            }
        }
    }
}

pub fn parse(text: &str) -> Result<Script, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    Parser { toks, pos: 0 }.script()
}

// ---------------------------------------------------------------------------
// Printer (canonical form; parse . print . parse = parse)
// ---------------------------------------------------------------------------

fn print_value(v: &Value) -> String {
    match v {
        Value::Bool(b) => b.to_string(),
        Value::Int(i) => i.to_string(),
        Value::Set(s) => {
            let elems: Vec<String> = s.iter().map(|e| e.to_string()).collect();
            format!("{{{}}}", elems.join(","))
        }
    }
}

fn pred_prec(p: &PredAst) -> u8 {
    match p {
        PredAst::Bin(_, PBinOp::Or, _) => 0,
        PredAst::Bin(_, PBinOp::And, _) => 1,
        PredAst::Bin(_, PBinOp::Eq | PBinOp::Ne | PBinOp::In | PBinOp::SubsetEq, _) => 2,
        PredAst::Bin(_, _, _) => 3,
        PredAst::Un(_, _) => 4,
        _ => 5,
    }
}

pub fn print_pred(p: &PredAst) -> String {
    fn at(p: &PredAst, min: u8) -> String {
        let s = match p {
            PredAst::Lit(v) => print_value(v),
            PredAst::Var { name, primed } => {
                format!("{name}{}", if *primed { "'" } else { "" })
            }
            PredAst::Index { name, primed, idx } => format!(
                "{name}{}[{}]",
                if *primed { "'" } else { "" },
                at(idx, 0)
            ),
            PredAst::Un(op, a) => {
                let sym = match op {
                    PUnOp::Not => "!",
                    PUnOp::Neg => "-",
                };
                format!("{sym}{}", at(a, 4))
            }
            PredAst::Bin(a, op, b) => {
                let prec = pred_prec(p);
                let sym = match op {
                    PBinOp::Or => "\\/",
                    PBinOp::And => "/\\",
                    PBinOp::Eq => "=",
                    PBinOp::Ne => "!=",
                    PBinOp::In => "in",
                    PBinOp::SubsetEq => "subseteq",
                    PBinOp::Add => "+",
                    PBinOp::Sub => "-",
                    PBinOp::Union => "union",
                    PBinOp::Inter => "inter",
                };
                format!("{} {sym} {}", at(a, prec), at(b, prec + 1))
            }
        };
        if pred_prec(p) < min {
            format!("({s})")
        } else {
            s
        }
    }
    at(p, 0)
}

fn cmd_prec(c: &CmdAst) -> u8 {
    match c {
        CmdAst::Choice(_, _) => 0,
        CmdAst::Par(_, _) => 1,
        CmdAst::Conj(_, _) => 2,
        CmdAst::Seq(_, _) => 3,
        CmdAst::Frame(_, _) => 4,
        _ => 5,
    }
}

pub fn print_cmd(c: &CmdAst) -> String {
    fn at(c: &CmdAst, min: u8) -> String {
        let s = match c {
            CmdAst::Bot => "bot".into(),
            CmdAst::Top => "top".into(),
            CmdAst::Nil => "nil".into(),
            CmdAst::Term => "term".into(),
            CmdAst::Idle => "idle".into(),
            CmdAst::Fair => "fair".into(),
            CmdAst::Hole => "hole".into(),
            CmdAst::Name(n) => n.clone(),
            CmdAst::Test(p) => format!("test<{}>", print_pred(p)),
            CmdAst::Pgm(p) => format!("pgm<{}>", print_pred(p)),
            CmdAst::Env(p) => format!("env<{}>", print_pred(p)),
            CmdAst::Assert(p) => format!("assert{{{}}}", print_pred(p)),
            CmdAst::Guar(p) => format!("guar<{}>", print_pred(p)),
            CmdAst::Rely(p) => format!("rely<{}>", print_pred(p)),
            CmdAst::Post(p) => format!("post[{}]", print_pred(p)),
            CmdAst::Atomic(p) => format!("atomic[{}]", print_pred(p)),
            CmdAst::Opt(p) => format!("opt[{}]", print_pred(p)),
            CmdAst::Frame(v, b) => format!("{v}: {}", at(b, 4)),
            CmdAst::Seq(a, b) => format!("{} ; {}", at(a, 3), at(b, 4)),
            CmdAst::Choice(a, b) => format!("{} | {}", at(a, 0), at(b, 1)),
            CmdAst::Par(a, b) => format!("{} || {}", at(a, 1), at(b, 2)),
            CmdAst::Conj(a, b) => format!("{} /\\ {}", at(a, 2), at(b, 3)),
            CmdAst::Fin(a) => format!("fin({})", at(a, 0)),
            CmdAst::Om(a) => format!("om({})", at(a, 0)),
            CmdAst::If(b, x, y) => format!(
                "if {} then {} else {} fi",
                print_pred(b),
                at(x, 0),
                at(y, 0)
            ),
            CmdAst::While(b, x) => format!("while {} do {} od", print_pred(b), at(x, 0)),
            CmdAst::Eval(e, k) => format!("[{} -> {}]", print_pred(e), print_value(k)),
        };
        if cmd_prec(c) < min {
            format!("({s})")
        } else {
            s
        }
    }
    at(c, 0)
}

fn print_domain(d: &DomainAst) -> String {
    let ints = |xs: &[i64]| {
        xs.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    match d {
        DomainAst::Bool => "bool".into(),
        DomainAst::Range(lo, hi) => format!("{lo}..{hi}"),
        DomainAst::Explicit(xs) => format!("{{{}}}", ints(xs)),
        DomainAst::SetsOver(xs) => format!("sets({{{}}})", ints(xs)),
    }
}

fn print_set_ref(s: &SetRef) -> String {
    match s {
        SetRef::Named(n) => n.clone(),
        SetRef::Pred(p) => format!("{{{}}}", print_pred(p)),
    }
}

fn print_rel_ref(r: &RelRef) -> String {
    match r {
        RelRef::Named(n) => n.clone(),
        RelRef::Pred(p) => format!("[{}]", print_pred(p)),
    }
}

pub fn print_script(s: &Script) -> String {
    let mut out = String::new();
    for d in &s.decls {
        let line = match d {
            Decl::Var(n, dom) => format!("var {n} in {};", print_domain(dom)),
            Decl::Arr(n, idx, dom) => {
                format!("arr {n} [{}] in {};", print_domain(idx), print_domain(dom))
            }
            Decl::Set(n, p) => format!("set {n} := {};", print_pred(p)),
            Decl::Rel(n, p) => format!("rel {n} := {};", print_pred(p)),
            Decl::Cmd(n, c) => format!("cmd {n} := {};", print_cmd(c)),
        };
        out.push_str(&line);
        out.push('\n');
    }
    for g in &s.goals {
        let body = match &g.body {
            GoalBody::Refine(a, b) => format!("refine {} >= {}", print_cmd(a), print_cmd(b)),
            GoalBody::Equal(a, b) => format!("equal {} = {}", print_cmd(a), print_cmd(b)),
            GoalBody::Triple(p, c, p1) => format!(
                "triple {{{}}} {} {{{}}}",
                print_pred(p),
                print_cmd(c),
                print_pred(p1)
            ),
            GoalBody::Establish { p, r, e, k, target } => format!(
                "establish {} under {} : [{} -> {}] achieves {}",
                print_set_ref(p),
                print_rel_ref(r),
                print_pred(e),
                print_value(k),
                print_set_ref(target)
            ),
            GoalBody::Stable(p, r) => {
                format!("stable {} under {}", print_set_ref(p), print_rel_ref(r))
            }
            GoalBody::Tolerates(q, r, p) => format!(
                "tolerates {} under {} from {}",
                print_rel_ref(q),
                print_rel_ref(r),
                print_set_ref(p)
            ),
            GoalBody::Law { id, samples } => match samples {
                Some(k) => format!("law {id:?} samples {k}"),
                None => format!("law {id:?}"),
            },
            GoalBody::Guarantee(c, g) => {
                format!("guarantee {} under {}", print_cmd(c), print_rel_ref(g))
            }
            GoalBody::WhileRule {
                b,
                c,
                r,
                q,
                p,
                p_t,
                p_f,
                p_x,
                variant,
            } => format!(
                "whilerule while {} do {} od under {} qrel {} inv {} {} {} {} variant {}",
                print_pred(b),
                print_cmd(c),
                print_rel_ref(r),
                print_rel_ref(q),
                print_set_ref(p),
                print_set_ref(p_t),
                print_set_ref(p_f),
                print_set_ref(p_x),
                print_pred(variant)
            ),
            GoalBody::Recursion { s, f, p_x, variant } => format!(
                "recursion {} >= {} exit {} variant {}",
                print_cmd(s),
                print_cmd(f),
                print_set_ref(p_x),
                print_pred(variant)
            ),
            GoalBody::Remove {
                weaken_rely,
                strengthen_guar,
            } => {
                let mut s = "remove".to_string();
                if *weaken_rely {
                    s.push_str(" weaken_rely");
                }
                if *strengthen_guar {
                    s.push_str(" strengthen_guar");
                }
                s
            }
            GoalBody::Fairness => "fairness".into(),
        };
        let mut line = format!("check {body}");
        if let Some(d) = g.depth {
            line.push_str(&format!(" depth {d}"));
        }
        if let Some(e) = g.engine {
            line.push_str(&format!(" engine {e}"));
        }
        if g.expect_fail {
            line.push_str(" expect fail");
        }
        line.push(';');
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_goal_from_one_liner() {
        let s = parse("var x in {0,1}; rel r := x' = x; check stable {x = 0} under r;").unwrap();
        assert_eq!(s.decls.len(), 2);
        assert_eq!(s.goals.len(), 1);
        assert!(matches!(
            &s.goals[0].body,
            GoalBody::Stable(SetRef::Pred(_), RelRef::Named(n)) if n == "r"
        ));
    }

    #[test]
    fn refine_goal_with_named_command() {
        let s = parse(
            "var x in {0,1};\n\
             rel r := x' = x;\n\
             cmd spec := rely<r> /\\ post[x' = 0];\n\
             check refine spec >= pgm<x' = 0> depth 3;",
        )
        .unwrap();
        let g = &s.goals[0];
        assert_eq!(g.depth, Some(3));
        assert!(matches!(&g.body, GoalBody::Refine(CmdAst::Name(n), _) if n == "spec"));
    }

    #[test]
    fn malformed_refine_reports_position() {
        let e = parse("var x in bool; check refine >= nil;").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.col >= 29, "caret at the operator, got col {}", e.col);
        assert!(!e.expected.is_empty());
    }

    #[test]
    fn seq_binds_tighter_than_choice_and_stops_at_keywords() {
        let s = parse("cmd c := nil ; nil | top; check refine c >= bot;").unwrap();
        match &s.decls[0] {
            Decl::Cmd(_, CmdAst::Choice(a, b)) => {
                assert!(matches!(**a, CmdAst::Seq(_, _)));
                assert!(matches!(**b, CmdAst::Top));
            }
            other => panic!("unexpected parse: {other:?}"),
        }
    }

    #[test]
    fn frame_binds_above_seq() {
        let s = parse("cmd c := x: nil ; top;").unwrap();
        match &s.decls[0] {
            Decl::Cmd(_, CmdAst::Seq(a, _)) => assert!(matches!(**a, CmdAst::Frame(_, _))),
            other => panic!("unexpected parse: {other:?}"),
        }
    }

    #[test]
    fn round_trip_is_stable() {
        let text = "\
var x in 0..2;
var w in sets({0,1});
arr a [{0,1}] in bool;
set p := x = 0;
rel r := x' = x /\\ w' subseteq w;
cmd body := pgm<x' = x + 1> ; assert{x != 2};
cmd spec := rely<r> /\\ (post[x' = 0] | guar<x' = x>);
check refine spec >= body depth 3 engine graph;
check equal fin(nil | pgm<x' = x>) = om(nil) depth 2 expect fail;
check establish {x = 0} under r : [x + x -> 0] achieves {x = 0};
check tolerates [x' = x] under r from {x = 0};
check law \"assert-merge\" samples 5;
check whilerule while x != 0 do body od under r qrel [true] inv {true} {true} {x = 0} {x = 0} variant x;
check remove weaken_rely depth 4 expect fail;
";
        let once = parse(text).unwrap();
        let twice = parse(&print_script(&once)).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn eval_command_and_if_while() {
        let s = parse(
            "var x in 0..1; cmd c := if x = 0 then [x -> 0] else while x = 1 do nil od fi;",
        )
        .unwrap();
        assert!(matches!(&s.decls[1], Decl::Cmd(_, CmdAst::If(_, _, _))));
    }
}
