//! Modal formulas over `bot`, `->` and `box`, together with sequents and
//! subformula closures.
//!
//! Only the four core constructors exist at runtime. The surface syntax
//! accepts `~`, `&`, `|`, `<->` and `top`, all of which are expanded by the
//! parser:
//!
//! ```text
//! ~a      := a -> bot
//! a | b   := (a -> bot) -> b
//! a & b   := (a -> (b -> bot)) -> bot
//! a <-> b := (a -> b) & (b -> a)
//! top     := bot -> bot
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    Var(Arc<str>),
    Bottom,
    Implies(Arc<Formula>, Arc<Formula>),
    Box(Arc<Formula>),
}

impl Formula {
    pub fn var(name: &str) -> Formula {
        Formula::Var(Arc::from(name))
    }

    pub fn bot() -> Formula {
        Formula::Bottom
    }

    pub fn top() -> Formula {
        Formula::imp(Formula::Bottom, Formula::Bottom)
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Arc::new(a), Arc::new(b))
    }

    pub fn boxed(a: Formula) -> Formula {
        Formula::Box(Arc::new(a))
    }

    pub fn not(a: Formula) -> Formula {
        Formula::imp(a, Formula::Bottom)
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::imp(Formula::not(a), b)
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::imp(a, Formula::not(b)))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(Formula::imp(a.clone(), b.clone()), Formula::imp(b, a))
    }

    /// Right-nested conjunction; the empty conjunction is `top`.
    pub fn conj<I>(items: I) -> Formula
    where
        I: IntoIterator<Item = Formula>,
        I::IntoIter: DoubleEndedIterator,
    {
        let mut it = items.into_iter().rev();
        match it.next() {
            None => Formula::top(),
            Some(last) => it.fold(last, |acc, f| Formula::and(f, acc)),
        }
    }

    /// Right-nested disjunction; the empty disjunction is `bot`.
    pub fn disj<I>(items: I) -> Formula
    where
        I: IntoIterator<Item = Formula>,
        I::IntoIter: DoubleEndedIterator,
    {
        let mut it = items.into_iter().rev();
        match it.next() {
            None => Formula::Bottom,
            Some(last) => it.fold(last, |acc, f| Formula::or(f, acc)),
        }
    }

    pub fn is_box(&self) -> bool {
        matches!(self, Formula::Box(_))
    }

    /// The body of a boxed formula.
    pub fn unbox(&self) -> Option<&Formula> {
        match self {
            Formula::Box(inner) => Some(inner),
            _ => None,
        }
    }

    /// Number of constructor occurrences.
    pub fn size(&self) -> usize {
        match self {
            Formula::Var(_) | Formula::Bottom => 1,
            Formula::Implies(a, b) => 1 + a.size() + b.size(),
            Formula::Box(a) => 1 + a.size(),
        }
    }

    /// Number of `->` and `box` occurrences.
    pub fn connectives(&self) -> usize {
        match self {
            Formula::Var(_) | Formula::Bottom => 0,
            Formula::Implies(a, b) => 1 + a.connectives() + b.connectives(),
            Formula::Box(a) => 1 + a.connectives(),
        }
    }

    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Var(_) | Formula::Bottom => 0,
            Formula::Implies(a, b) => a.modal_depth().max(b.modal_depth()),
            Formula::Box(a) => 1 + a.modal_depth(),
        }
    }

    pub fn vars(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Formula::Var(name) => {
                out.insert(name.clone());
            }
            Formula::Bottom => {}
            Formula::Implies(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Box(a) => a.collect_vars(out),
        }
    }

    /// Core-syntax rendering; see [`print_formula`].
    pub fn to_core_string(&self) -> String {
        print_formula(self)
    }
}

/// Renders `f` in core syntax (`bot`, `->`, `box`) with minimal parentheses.
pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    write_core(f, 0, &mut out);
    out
}

fn write_core(f: &Formula, ctx: u8, out: &mut String) {
    match f {
        Formula::Var(name) => out.push_str(name),
        Formula::Bottom => out.push_str("bot"),
        Formula::Box(inner) => {
            out.push_str("box");
            if matches!(**inner, Formula::Implies(..)) {
                out.push('(');
                write_core(inner, 0, out);
                out.push(')');
            } else {
                out.push(' ');
                write_core(inner, 4, out);
            }
        }
        Formula::Implies(a, b) => {
            let parens = ctx > 1;
            if parens {
                out.push('(');
            }
            write_core(a, 2, out);
            out.push_str(" -> ");
            write_core(b, 1, out);
            if parens {
                out.push(')');
            }
        }
    }
}

enum Sugar<'a> {
    Atom,
    Top,
    And(&'a Formula, &'a Formula),
    Not(&'a Formula),
    Or(&'a Formula, &'a Formula),
    Imp(&'a Formula, &'a Formula),
    Box(&'a Formula),
}

fn view(f: &Formula) -> Sugar<'_> {
    match f {
        Formula::Var(_) | Formula::Bottom => Sugar::Atom,
        Formula::Box(a) => Sugar::Box(a),
        Formula::Implies(a, b) => {
            if **a == Formula::Bottom && **b == Formula::Bottom {
                return Sugar::Top;
            }
            if **b == Formula::Bottom {
                if let Formula::Implies(x, y) = &**a {
                    if let Formula::Implies(z, w) = &**y {
                        if **w == Formula::Bottom {
                            return Sugar::And(x, z);
                        }
                    }
                }
                return Sugar::Not(a);
            }
            if let Formula::Implies(x, y) = &**a {
                if **y == Formula::Bottom {
                    return Sugar::Or(x, b);
                }
            }
            Sugar::Imp(a, b)
        }
    }
}

fn sugar_prec(s: &Sugar<'_>) -> u8 {
    match s {
        Sugar::Imp(..) => 1,
        Sugar::Or(..) => 2,
        Sugar::And(..) => 3,
        Sugar::Not(_) | Sugar::Box(_) => 4,
        Sugar::Atom | Sugar::Top => 5,
    }
}

fn write_pretty(f: &Formula, ctx: u8, out: &mut String) {
    let s = view(f);
    let parens = sugar_prec(&s) < ctx;
    if parens {
        out.push('(');
    }
    match s {
        Sugar::Atom => write_core(f, 5, out),
        Sugar::Top => out.push_str("top"),
        Sugar::Imp(a, b) => {
            write_pretty(a, 2, out);
            out.push_str(" -> ");
            write_pretty(b, 1, out);
        }
        Sugar::Or(a, b) => {
            write_pretty(a, 2, out);
            out.push_str(" | ");
            write_pretty(b, 3, out);
        }
        Sugar::And(a, b) => {
            write_pretty(a, 3, out);
            out.push_str(" & ");
            write_pretty(b, 4, out);
        }
        Sugar::Not(a) => {
            out.push('~');
            write_pretty(a, 4, out);
        }
        Sugar::Box(a) => {
            out.push_str("box");
            if sugar_prec(&view(a)) < 4 {
                out.push('(');
                write_pretty(a, 0, out);
                out.push(')');
            } else {
                out.push(' ');
                write_pretty(a, 4, out);
            }
        }
    }
    if parens {
        out.push(')');
    }
}

/// Renders `f` with `~`, `|`, `&` and `top` recovered wherever the core
/// structure matches their expansion. The output parses back to `f`.
pub fn pretty(f: &Formula) -> String {
    let mut out = String::new();
    write_pretty(f, 0, &mut out);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unknown token {found:?} at position {pos}")]
    Lexical { pos: usize, found: char },
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unbalanced parentheses at position {pos}")]
    Unbalanced { pos: usize },
    #[error("sequent has no arrow (expected `=>`, `=s>` or `=d>`)")]
    MissingArrow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Bot,
    Top,
    Box,
    Not,
    And,
    Or,
    Imp,
    Iff,
    LParen,
    RParen,
    Comma,
    Arrow(SeqKind),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => toks.push((start, Tok::LParen)),
            b')' => toks.push((start, Tok::RParen)),
            b',' => toks.push((start, Tok::Comma)),
            b'~' => toks.push((start, Tok::Not)),
            b'&' => toks.push((start, Tok::And)),
            b'|' => toks.push((start, Tok::Or)),
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                toks.push((start, Tok::Imp));
                i += 1;
            }
            b'<' if text[i..].starts_with("<->") => {
                toks.push((start, Tok::Iff));
                i += 2;
            }
            b'=' if bytes.get(i + 1) == Some(&b'>') => {
                toks.push((start, Tok::Arrow(SeqKind::Gl)));
                i += 1;
            }
            b'=' if text[i..].starts_with("=s>") => {
                toks.push((start, Tok::Arrow(SeqKind::S)));
                i += 2;
            }
            b'=' if text[i..].starts_with("=d>") => {
                toks.push((start, Tok::Arrow(SeqKind::D)));
                i += 2;
            }
            b'a'..=b'z' => {
                while i + 1 < bytes.len()
                    && matches!(bytes[i + 1], b'a'..=b'z' | b'0'..=b'9' | b'_')
                {
                    i += 1;
                }
                let word = &text[start..=i];
                toks.push((
                    start,
                    match word {
                        "box" => Tok::Box,
                        "bot" => Tok::Bot,
                        "top" => Tok::Top,
                        _ => Tok::Ident(word.to_string()),
                    },
                ));
            }
            _ => {
                let found = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Lexical { pos: start, found });
            }
        }
        i += 1;
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.imp()?;
        if self.peek() == Some(&Tok::Iff) {
            self.bump();
            let rhs = self.imp()?;
            if self.peek() == Some(&Tok::Iff) {
                return Err(ParseError::Syntax {
                    pos: self.offset(),
                    msg: "`<->` is not associative; add parentheses".into(),
                });
            }
            return Ok(Formula::iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.peek() == Some(&Tok::Imp) {
            self.bump();
            let rhs = self.imp()?;
            return Ok(Formula::imp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.prefix()?;
        while self.peek() == Some(&Tok::And) {
            self.bump();
            let rhs = self.prefix()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Formula, ParseError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Box) => Ok(Formula::boxed(self.prefix()?)),
            Some(Tok::Not) => Ok(Formula::not(self.prefix()?)),
            Some(Tok::Ident(name)) => Ok(Formula::var(&name)),
            Some(Tok::Bot) => Ok(Formula::Bottom),
            Some(Tok::Top) => Ok(Formula::top()),
            Some(Tok::LParen) => {
                let inner = self.iff()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    None => Err(ParseError::Unbalanced { pos: at }),
                    Some(_) => Err(ParseError::Syntax {
                        pos: self.toks[self.pos - 1].0,
                        msg: "expected `)`".into(),
                    }),
                }
            }
            Some(Tok::RParen) => Err(ParseError::Unbalanced { pos: at }),
            Some(_) => Err(ParseError::Syntax {
                pos: at,
                msg: "expected a formula".into(),
            }),
            None => Err(ParseError::Syntax {
                pos: at,
                msg: "unexpected end of input".into(),
            }),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.toks.get(self.pos) {
            None => Ok(()),
            Some((p, Tok::RParen)) => Err(ParseError::Unbalanced { pos: *p }),
            Some((p, _)) => Err(ParseError::Syntax {
                pos: *p,
                msg: "unexpected trailing input".into(),
            }),
        }
    }

    fn formula_list(&mut self) -> Result<BTreeSet<Formula>, ParseError> {
        let mut out = BTreeSet::new();
        if matches!(self.peek(), None | Some(Tok::Arrow(_))) {
            return Ok(out);
        }
        loop {
            out.insert(self.iff()?);
            if self.peek() == Some(&Tok::Comma) {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let f = p.iff()?;
    p.finish()?;
    Ok(f)
}

/// The three sequent arrows: `=>` (GL), `=s>` (S) and `=d>` (D).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum SeqKind {
    Gl,
    S,
    D,
}

impl SeqKind {
    pub fn arrow(self) -> &'static str {
        match self {
            SeqKind::Gl => "=>",
            SeqKind::S => "=s>",
            SeqKind::D => "=d>",
        }
    }
}

impl fmt::Display for SeqKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeqKind::Gl => "GL",
            SeqKind::S => "S",
            SeqKind::D => "D",
        })
    }
}

pub type FormulaSet = BTreeSet<Formula>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Sequent {
    pub kind: SeqKind,
    pub left: FormulaSet,
    pub right: FormulaSet,
}

impl Sequent {
    pub fn new<L, R>(kind: SeqKind, left: L, right: R) -> Sequent
    where
        L: IntoIterator<Item = Formula>,
        R: IntoIterator<Item = Formula>,
    {
        Sequent {
            kind,
            left: left.into_iter().collect(),
            right: right.into_iter().collect(),
        }
    }

    pub fn with_kind(&self, kind: SeqKind) -> Sequent {
        Sequent {
            kind,
            left: self.left.clone(),
            right: self.right.clone(),
        }
    }

    /// Same sets, same kind: `self` is a weakening of `other`.
    pub fn extends(&self, other: &Sequent) -> bool {
        self.kind == other.kind
            && other.left.is_subset(&self.left)
            && other.right.is_subset(&self.right)
    }

    pub fn add_left(&self, f: Formula) -> Sequent {
        let mut s = self.clone();
        s.left.insert(f);
        s
    }

    pub fn add_right(&self, f: Formula) -> Sequent {
        let mut s = self.clone();
        s.right.insert(f);
        s
    }

    /// `/\ left -> \/ right`, both over the set order.
    pub fn to_formula(&self) -> Formula {
        Formula::imp(
            Formula::conj(self.left.iter().cloned().collect::<Vec<_>>()),
            Formula::disj(self.right.iter().cloned().collect::<Vec<_>>()),
        )
    }

    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.left.iter().chain(self.right.iter())
    }

    pub fn closure(&self) -> SubformulaClosure {
        subformula_closure(self.formulas())
    }
}

fn write_list(set: &FormulaSet, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for (i, x) in set.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_list(&self.left, f)?;
        if !self.left.is_empty() {
            f.write_str(" ")?;
        }
        f.write_str(self.kind.arrow())?;
        if !self.right.is_empty() {
            f.write_str(" ")?;
        }
        write_list(&self.right, f)
    }
}

pub fn parse_sequent(text: &str) -> Result<Sequent, ParseError> {
    let toks = lex(text)?;
    if !toks.iter().any(|(_, t)| matches!(t, Tok::Arrow(_))) {
        return Err(ParseError::MissingArrow);
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let left = p.formula_list()?;
    let kind = match p.bump() {
        Some(Tok::Arrow(k)) => k,
        _ => {
            return Err(ParseError::Syntax {
                pos: p.toks.get(p.pos - 1).map(|(o, _)| *o).unwrap_or(p.end),
                msg: "expected `,` or a sequent arrow".into(),
            })
        }
    };
    let right = p.formula_list()?;
    p.finish()?;
    Ok(Sequent { kind, left, right })
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SubformulaClosure {
    pub formulas: FormulaSet,
    pub boxed: FormulaSet,
}

impl SubformulaClosure {
    pub fn contains(&self, f: &Formula) -> bool {
        self.formulas.contains(f)
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }
}

pub fn subformula_closure<'a, I>(fs: I) -> SubformulaClosure
where
    I: IntoIterator<Item = &'a Formula>,
{
    let mut closure = SubformulaClosure::default();
    let mut stack: Vec<&Formula> = fs.into_iter().collect();
    while let Some(f) = stack.pop() {
        if !closure.formulas.insert(f.clone()) {
            continue;
        }
        match f {
            Formula::Var(_) | Formula::Bottom => {}
            Formula::Implies(a, b) => {
                stack.push(a);
                stack.push(b);
            }
            Formula::Box(a) => {
                closure.boxed.insert(f.clone());
                stack.push(a);
            }
        }
    }
    closure
}

/// Parses a formula, panicking on malformed input. Intended for fixtures.
pub fn f(text: &str) -> Formula {
    parse_formula(text).unwrap_or_else(|e| panic!("bad formula {text:?}: {e}"))
}

/// Parses a sequent, panicking on malformed input. Intended for fixtures.
pub fn seq(text: &str) -> Sequent {
    parse_sequent(text).unwrap_or_else(|e| panic!("bad sequent {text:?}: {e}"))
}
