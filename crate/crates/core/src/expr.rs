//! A small expression language for scalar fields of two variables.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'x' | 'y' | func '(' expr (',' expr)* ')' | '(' expr ')'
//! func   := sin | cos | exp | log | abs | sqrt | min | max
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2 == -(x^2)`) and associates to the
//! right. Every node remembers the byte offset it was parsed from so that
//! evaluation errors can point back into the source text.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::grid::Rect;

/// Free variable of a field expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    /// Left and right binding power for the Pratt loop.
    fn binding_power(self) -> (u8, u8) {
        match self {
            BinOp::Add | BinOp::Sub => (10, 11),
            BinOp::Mul | BinOp::Div => (20, 21),
            BinOp::Pow => (40, 39),
        }
    }
}

const UNARY_BP: u8 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Sqrt,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// A node of the expression tree together with its source offset.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num { value: f64, at: usize },
    Var { var: Var, at: usize },
    Neg { arg: Box<Node>, at: usize },
    Binary { op: BinOp, lhs: Box<Node>, rhs: Box<Node>, at: usize },
    Call { func: Func, args: Vec<Node>, at: usize },
}

impl Node {
    pub fn offset(&self) -> usize {
        match self {
            Node::Num { at, .. }
            | Node::Var { at, .. }
            | Node::Neg { at, .. }
            | Node::Binary { at, .. }
            | Node::Call { at, .. } => *at,
        }
    }

    fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        let value = match self {
            Node::Num { value, .. } => return Ok(*value),
            Node::Var { var: Var::X, .. } => return Ok(x),
            Node::Var { var: Var::Y, .. } => return Ok(y),
            Node::Neg { arg, .. } => -arg.eval(x, y)?,
            Node::Binary { op, lhs, rhs, at } => {
                let a = lhs.eval(x, y)?;
                let b = rhs.eval(x, y)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::new(*at, DomainError::DivisionByZero));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a < 0.0 && libm::trunc(b) != b {
                            return Err(EvalError::new(*at, DomainError::FractionalPowerOfNegative));
                        }
                        libm::pow(a, b)
                    }
                }
            }
            Node::Call { func, args, at } => {
                let a = args[0].eval(x, y)?;
                match func {
                    Func::Sin => libm::sin(a),
                    Func::Cos => libm::cos(a),
                    Func::Exp => libm::exp(a),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(EvalError::new(*at, DomainError::LogOfNonPositive));
                        }
                        libm::log(a)
                    }
                    Func::Abs => libm::fabs(a),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::new(*at, DomainError::SqrtOfNegative));
                        }
                        libm::sqrt(a)
                    }
                    Func::Min => libm::fmin(a, args[1].eval(x, y)?),
                    Func::Max => libm::fmax(a, args[1].eval(x, y)?),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::new(self.offset(), DomainError::NonFinite))
        }
    }
}

/// Fully parenthesised rendering; parsing the output yields a tree that
/// evaluates identically.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num { value, .. } => {
                if value.is_sign_negative() {
                    write!(f, "(-{:?})", -value)
                } else {
                    write!(f, "{:?}", value)
                }
            }
            Node::Var { var: Var::X, .. } => f.write_str("x"),
            Node::Var { var: Var::Y, .. } => f.write_str("y"),
            Node::Neg { arg, .. } => write!(f, "(-{})", arg),
            Node::Binary { op, lhs, rhs, .. } => write!(f, "({} {} {})", lhs, op.symbol(), rhs),
            Node::Call { func, args, .. } => {
                write!(f, "{}(", func.name())?;
                for (k, arg) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", arg)?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A parsed field expression. Immutable after parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        let tokens = tokenize(text)?;
        if tokens.is_empty() {
            return Err(ParseError::new(0, ParseErrorKind::Empty));
        }
        let mut parser = Parser { tokens: &tokens, pos: 0, end: text.len() };
        let root = parser.expr(0)?;
        if let Some(tok) = parser.peek() {
            let kind = match tok.kind {
                Tok::RParen => ParseErrorKind::UnbalancedParen,
                _ => ParseErrorKind::Unexpected(tok.kind.describe()),
            };
            return Err(ParseError::new(tok.at, kind));
        }
        Ok(Expr { root, source: text.to_string() })
    }

    /// Wraps an already-built tree; `source` becomes its printed form.
    pub fn from_node(root: Node) -> Expr {
        let source = root.to_string();
        Expr { root, source }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.root.eval(x, y)
    }

    /// `e(ox + sx·x, oy + sy·y)`, as a new tree.
    pub fn rescaled(&self, (ox, sx): (f64, f64), (oy, sy): (f64, f64)) -> Expr {
        fn walk(node: &Node, x: (f64, f64), y: (f64, f64)) -> Node {
            match node {
                Node::Var { var, at } => {
                    let (o, s) = if *var == Var::X { x } else { y };
                    if (o, s) == (0.0, 1.0) {
                        return node.clone();
                    }
                    let at = *at;
                    let scaled = Node::Binary {
                        op: BinOp::Mul,
                        lhs: Box::new(Node::Num { value: s, at }),
                        rhs: Box::new(node.clone()),
                        at,
                    };
                    Node::Binary { op: BinOp::Add, lhs: Box::new(Node::Num { value: o, at }), rhs: Box::new(scaled), at }
                }
                Node::Num { .. } => node.clone(),
                Node::Neg { arg, at } => Node::Neg { arg: Box::new(walk(arg, x, y)), at: *at },
                Node::Binary { op, lhs, rhs, at } => Node::Binary {
                    op: *op,
                    lhs: Box::new(walk(lhs, x, y)),
                    rhs: Box::new(walk(rhs, x, y)),
                    at: *at,
                },
                Node::Call { func, args, at } => Node::Call {
                    func: *func,
                    args: args.iter().map(|a| walk(a, x, y)).collect(),
                    at: *at,
                },
            }
        }
        Expr::from_node(walk(&self.root, (ox, sx), (oy, sy)))
    }

    /// The literal value when the whole expression is a (possibly negated)
    /// number.
    pub fn as_constant(&self) -> Option<f64> {
        match &self.root {
            Node::Num { value, .. } => Some(*value),
            Node::Neg { arg, .. } => match **arg {
                Node::Num { value, .. } => Some(-value),
                _ => None,
            },
            _ => None,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl core::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    InvalidNumber,
    Unexpected(&'static str),
    UnexpectedEnd,
    UnknownIdentifier(String),
    UnbalancedParen,
    BadArity { func: &'static str, expected: usize, found: usize },
}

/// Syntax error with the byte offset it was detected at.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at offset {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn new(offset: usize, kind: ParseErrorKind) -> Self {
        ParseError { offset, kind }
    }
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => f.write_str("empty expression"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character '{}'", c),
            ParseErrorKind::InvalidNumber => f.write_str("invalid number literal"),
            ParseErrorKind::Unexpected(what) => write!(f, "unexpected {}", what),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier '{}'", name),
            ParseErrorKind::UnbalancedParen => f.write_str("unbalanced parentheses"),
            ParseErrorKind::BadArity { func, expected, found } => {
                write!(f, "{} takes {} argument(s), found {}", func, expected, found)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainError {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNegative,
    FractionalPowerOfNegative,
    NonFinite,
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainError::DivisionByZero => "division by zero",
            DomainError::LogOfNonPositive => "log of a non-positive value",
            DomainError::SqrtOfNegative => "sqrt of a negative value",
            DomainError::FractionalPowerOfNegative => "non-integer power of a negative base",
            DomainError::NonFinite => "non-finite result",
        })
    }
}

/// Domain error raised while evaluating the node at `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{kind} (expression offset {offset})")]
pub struct EvalError {
    pub offset: usize,
    pub kind: DomainError,
}

impl EvalError {
    pub fn new(offset: usize, kind: DomainError) -> Self {
        EvalError { offset, kind }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(BinOp),
    LParen,
    RParen,
    Comma,
}

impl Tok {
    fn describe(&self) -> &'static str {
        match self {
            Tok::Num(_) => "number",
            Tok::Ident(_) => "identifier",
            Tok::Op(BinOp::Add) => "'+'",
            Tok::Op(BinOp::Sub) => "'-'",
            Tok::Op(BinOp::Mul) => "'*'",
            Tok::Op(BinOp::Div) => "'/'",
            Tok::Op(BinOp::Pow) => "'^'",
            Tok::LParen => "'('",
            Tok::RParen => "')'",
            Tok::Comma => "','",
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    at: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Op(BinOp::Add),
            b'-' => Tok::Op(BinOp::Sub),
            b'*' => Tok::Op(BinOp::Mul),
            b'/' => Tok::Op(BinOp::Div),
            b'^' => Tok::Op(BinOp::Pow),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let value: f64 = text[start..i]
                    .parse()
                    .map_err(|_| ParseError::new(start, ParseErrorKind::InvalidNumber))?;
                if !value.is_finite() {
                    return Err(ParseError::new(start, ParseErrorKind::InvalidNumber));
                }
                tokens.push(Token { kind: Tok::Num(value), at: start });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token { kind: Tok::Ident(text[start..i].to_string()), at: start });
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::new(start, ParseErrorKind::UnexpectedChar(ch)));
            }
        };
        tokens.push(Token { kind, at: start });
        i += 1;
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<&Token, ParseError> {
        let tok = self
            .tokens
            .get(self.pos)
            .ok_or(ParseError::new(self.end, ParseErrorKind::UnexpectedEnd))?;
        self.pos += 1;
        Ok(tok)
    }

    fn expr(&mut self, min_bp: u8) -> Result<Node, ParseError> {
        let mut lhs = self.prefix()?;
        while let Some(tok) = self.peek() {
            let op = match tok.kind {
                Tok::Op(op) => op,
                _ => break,
            };
            let at = tok.at;
            let (lbp, rbp) = op.binding_power();
            if lbp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(rbp)?;
            lhs = Node::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), at };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Node, ParseError> {
        let tok = self.next()?.clone();
        match tok.kind {
            Tok::Num(value) => Ok(Node::Num { value, at: tok.at }),
            Tok::Op(BinOp::Sub) => {
                let arg = self.expr(UNARY_BP)?;
                Ok(Node::Neg { arg: Box::new(arg), at: tok.at })
            }
            Tok::LParen => {
                let inner = self.expr(0)?;
                match self.peek() {
                    Some(Token { kind: Tok::RParen, .. }) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(other) => {
                        Err(ParseError::new(other.at, ParseErrorKind::Unexpected(other.kind.describe())))
                    }
                    None => Err(ParseError::new(tok.at, ParseErrorKind::UnbalancedParen)),
                }
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Node::Var { var: Var::X, at: tok.at }),
                "y" => Ok(Node::Var { var: Var::Y, at: tok.at }),
                _ => {
                    let func = Func::from_name(&name)
                        .ok_or_else(|| ParseError::new(tok.at, ParseErrorKind::UnknownIdentifier(name.clone())))?;
                    self.call(func, tok.at)
                }
            },
            Tok::RParen => Err(ParseError::new(tok.at, ParseErrorKind::UnbalancedParen)),
            other => Err(ParseError::new(tok.at, ParseErrorKind::Unexpected(other.describe()))),
        }
    }

    fn call(&mut self, func: Func, at: usize) -> Result<Node, ParseError> {
        let open = self.next()?.clone();
        if open.kind != Tok::LParen {
            return Err(ParseError::new(open.at, ParseErrorKind::Unexpected(open.kind.describe())));
        }
        let mut args = Vec::new();
        loop {
            args.push(self.expr(0)?);
            let sep = match self.peek() {
                Some(t) => t.clone(),
                None => return Err(ParseError::new(open.at, ParseErrorKind::UnbalancedParen)),
            };
            self.pos += 1;
            match sep.kind {
                Tok::Comma => continue,
                Tok::RParen => break,
                other => return Err(ParseError::new(sep.at, ParseErrorKind::Unexpected(other.describe()))),
            }
        }
        if args.len() != func.arity() {
            return Err(ParseError::new(
                at,
                ParseErrorKind::BadArity { func: func.name(), expected: func.arity(), found: args.len() },
            ));
        }
        Ok(Node::Call { func, args, at })
    }
}

/// Sampled magnitude range and slope estimate of a field over a rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMeta {
    /// Largest `|Δvalue| / |Δposition|` over horizontally or vertically
    /// adjacent sample pairs. An estimate, not a proven constant.
    pub lipschitz_estimate: f64,
    pub sample_resolution: usize,
    pub min_abs: f64,
    pub max_abs: f64,
    pub min_value: f64,
    pub max_value: f64,
}

/// Interpolates `a..=b`, hitting both ends exactly.
#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (1.0 - t) * a + t * b
}

/// Samples `field` on the `(resolution + 1)²` lattice of `rect`, corners
/// included. Sample coordinates depend only on `k / resolution`, so a lattice
/// whose resolution divides another's is a subset of it.
pub fn sample_meta<E>(
    rect: Rect,
    resolution: usize,
    mut field: impl FnMut(f64, f64) -> Result<f64, E>,
) -> Result<FieldMeta, E> {
    assert!(resolution >= 1, "sampling resolution must be positive");
    let side = resolution + 1;
    let coords = |lo: f64, hi: f64| -> Vec<f64> {
        (0..side).map(|k| lerp(lo, hi, k as f64 / resolution as f64)).collect()
    };
    let xs = coords(rect.x0, rect.x1);
    let ys = coords(rect.y0, rect.y1);

    let mut meta = FieldMeta {
        lipschitz_estimate: 0.0,
        sample_resolution: resolution,
        min_abs: f64::INFINITY,
        max_abs: 0.0,
        min_value: f64::INFINITY,
        max_value: f64::NEG_INFINITY,
    };
    let mut prev_row: Vec<f64> = Vec::with_capacity(side);
    let mut row: Vec<f64> = Vec::with_capacity(side);
    for (a, &x) in xs.iter().enumerate() {
        row.clear();
        for (b, &y) in ys.iter().enumerate() {
            let v = field(x, y)?;
            meta.min_abs = meta.min_abs.min(v.abs());
            meta.max_abs = meta.max_abs.max(v.abs());
            meta.min_value = meta.min_value.min(v);
            meta.max_value = meta.max_value.max(v);
            if b > 0 {
                let slope = (v - row[b - 1]).abs() / (y - ys[b - 1]);
                meta.lipschitz_estimate = meta.lipschitz_estimate.max(slope);
            }
            if a > 0 {
                let slope = (v - prev_row[b]).abs() / (x - xs[a - 1]);
                meta.lipschitz_estimate = meta.lipschitz_estimate.max(slope);
            }
            row.push(v);
        }
        core::mem::swap(&mut prev_row, &mut row);
    }
    Ok(meta)
}

/// [`sample_meta`] for a parsed expression.
pub fn field_meta(expr: &Expr, rect: Rect, resolution: usize) -> Result<FieldMeta, EvalError> {
    sample_meta(rect, resolution, |x, y| expr.eval(x, y))
}
