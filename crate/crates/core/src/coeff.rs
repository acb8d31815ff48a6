//! Minimal arithmetic expression language for the coefficient functions
//! a(x), b(x): tokenizer, recursive-descent parser, evaluator and printer.
//!
//! Grammar (standard precedence, `^` right-associative and binding tighter
//! than unary minus):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'pi' | 'x' | 'y' | func '(' expr (',' expr)? ')' | '(' expr ')'
//! func   := sin | cos | exp | abs | min | max | step
//! ```

use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Min,
    Max,
    Step,
}

impl Func {
    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Step => "step",
        }
    }
}

/// Abstract syntax tree of a coefficient expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Evaluation point; `y` is present only on 2D meshes.
#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub x: f64,
    pub y: Option<f64>,
}

impl Point {
    pub fn new_1d(x: f64) -> Self {
        Point { x, y: None }
    }

    pub fn new_2d(x: f64, y: f64) -> Self {
        Point { x, y: Some(y) }
    }
}

// ---------------------------------------------------------------- tokenizer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next_tok(&mut self) -> Result<Option<(Tok, usize)>> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let simple = |t| Ok(Some((t, start)));
        match c {
            b'+' => {
                self.pos += 1;
                simple(Tok::Plus)
            }
            b'-' => {
                self.pos += 1;
                simple(Tok::Minus)
            }
            b'*' => {
                self.pos += 1;
                simple(Tok::Star)
            }
            b'/' => {
                self.pos += 1;
                simple(Tok::Slash)
            }
            b'^' => {
                self.pos += 1;
                simple(Tok::Caret)
            }
            b'(' => {
                self.pos += 1;
                simple(Tok::LParen)
            }
            b')' => {
                self.pos += 1;
                simple(Tok::RParen)
            }
            b',' => {
                self.pos += 1;
                simple(Tok::Comma)
            }
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                let mut seen_dot = false;
                while end < self.src.len() {
                    match self.src[end] {
                        b'0'..=b'9' => end += 1,
                        b'.' if !seen_dot => {
                            seen_dot = true;
                            end += 1;
                        }
                        b'e' | b'E'
                            if end > self.pos
                                && end + 1 < self.src.len()
                                && (self.src[end + 1].is_ascii_digit()
                                    || ((self.src[end + 1] == b'+' || self.src[end + 1] == b'-')
                                        && end + 2 < self.src.len()
                                        && self.src[end + 2].is_ascii_digit())) =>
                        {
                            end += 2;
                            while end < self.src.len() && self.src[end].is_ascii_digit() {
                                end += 1;
                            }
                            break;
                        }
                        _ => break,
                    }
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                let v: f64 = text.parse().map_err(|_| Error::Parse {
                    offset: start,
                    message: format!("bad number literal '{text}'"),
                })?;
                self.pos = end;
                Ok(Some((Tok::Num(v), start)))
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end])
                    .unwrap()
                    .to_string();
                self.pos = end;
                Ok(Some((Tok::Ident(text), start)))
            }
            _ => Err(Error::Parse {
                offset: start,
                message: format!("unexpected byte 0x{c:02x}"),
            }),
        }
    }
}

// ------------------------------------------------------------------- parser

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
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse {
                offset: self.offset(),
                message: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            // right-associative; the exponent may carry a unary minus
            let exp = self.unary_power()?;
            Ok(Expr::Pow(Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    // exponent position: '-' here binds to the exponent only (x^-2)
    fn unary_power(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            Ok(Expr::Neg(Box::new(self.unary_power()?)))
        } else {
            self.power()
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let off = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::Var(Var::X)),
                "y" => Ok(Expr::Var(Var::Y)),
                "pi" => Ok(Expr::Pi),
                "sin" | "cos" | "exp" | "abs" | "min" | "max" | "step" => {
                    let f = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "exp" => Func::Exp,
                        "abs" => Func::Abs,
                        "min" => Func::Min,
                        "max" => Func::Max,
                        _ => Func::Step,
                    };
                    self.expect(Tok::LParen, "'(' after function name")?;
                    let mut args = vec![self.expr()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "')'")?;
                    if args.len() != f.arity() {
                        return Err(Error::Parse {
                            offset: off,
                            message: format!(
                                "{} takes {} argument(s), got {}",
                                f.name(),
                                f.arity(),
                                args.len()
                            ),
                        });
                    }
                    Ok(Expr::Call(f, args))
                }
                _ => Err(Error::Parse {
                    offset: off,
                    message: format!("unknown identifier '{name}'"),
                }),
            },
            _ => Err(Error::Parse {
                offset: off,
                message: "expected expression".into(),
            }),
        }
    }
}

/// Parses expression text; errors carry a byte offset.
pub fn parse_expression(text: &str) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(Error::Parse {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut lx = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(t) = lx.next_tok()? {
        toks.push(t);
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse {
            offset: p.offset(),
            message: "trailing input".into(),
        });
    }
    Ok(e)
}

// ---------------------------------------------------------------- evaluator

/// IEEE double evaluation; nonfinite results are errors, not values.
pub fn evaluate(expr: &Expr, point: Point) -> Result<f64> {
    let v = eval_rec(expr, point)?;
    if !v.is_finite() {
        return Err(Error::Eval(format!("nonfinite result of `{}`", print_expr(expr))));
    }
    Ok(v)
}

fn eval_rec(expr: &Expr, pt: Point) -> Result<f64> {
    let finite = |v: f64, node: &Expr| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Eval(format!("nonfinite value at `{}`", print_expr(node))))
        }
    };
    match expr {
        Expr::Num(v) => Ok(*v),
        Expr::Pi => Ok(std::f64::consts::PI),
        Expr::Var(Var::X) => Ok(pt.x),
        Expr::Var(Var::Y) => pt
            .y
            .ok_or_else(|| Error::Eval("unbound variable y".into())),
        Expr::Neg(a) => Ok(-eval_rec(a, pt)?),
        Expr::Add(a, b) => finite(eval_rec(a, pt)? + eval_rec(b, pt)?, expr),
        Expr::Sub(a, b) => finite(eval_rec(a, pt)? - eval_rec(b, pt)?, expr),
        Expr::Mul(a, b) => finite(eval_rec(a, pt)? * eval_rec(b, pt)?, expr),
        Expr::Div(a, b) => {
            let den = eval_rec(b, pt)?;
            finite(eval_rec(a, pt)? / den, expr)
        }
        Expr::Pow(a, b) => {
            let base = eval_rec(a, pt)?;
            let e = eval_rec(b, pt)?;
            if base < 0.0 && e.fract() != 0.0 {
                return Err(Error::Eval(format!(
                    "negative base with non-integer exponent at `{}`",
                    print_expr(expr)
                )));
            }
            finite(base.powf(e), expr)
        }
        Expr::Call(f, args) => {
            let a0 = eval_rec(&args[0], pt)?;
            let v = match f {
                Func::Sin => a0.sin(),
                Func::Cos => a0.cos(),
                Func::Exp => a0.exp(),
                Func::Abs => a0.abs(),
                Func::Step => {
                    if a0 > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Func::Min => a0.min(eval_rec(&args[1], pt)?),
                Func::Max => a0.max(eval_rec(&args[1], pt)?),
            };
            finite(v, expr)
        }
    }
}

// ------------------------------------------------------------------ printer

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

/// Prints an expression so that re-parsing yields a structurally identical
/// tree.
pub fn print_expr(e: &Expr) -> String {
    fn wrap(child: &Expr, min: u8) -> String {
        if prec(child) < min {
            format!("({})", print_expr(child))
        } else {
            print_expr(child)
        }
    }
    match e {
        Expr::Num(v) => {
            if *v < 0.0 || !v.is_finite() {
                format!("({v})")
            } else {
                format!("{v}")
            }
        }
        Expr::Pi => "pi".into(),
        Expr::Var(Var::X) => "x".into(),
        Expr::Var(Var::Y) => "y".into(),
        Expr::Neg(a) => format!("-{}", wrap(a, 3)),
        Expr::Add(a, b) => format!("{}+{}", wrap(a, 1), wrap(b, 2)),
        Expr::Sub(a, b) => format!("{}-{}", wrap(a, 1), wrap(b, 2)),
        Expr::Mul(a, b) => format!("{}*{}", wrap(a, 2), wrap(b, 3)),
        Expr::Div(a, b) => format!("{}/{}", wrap(a, 2), wrap(b, 3)),
        // base must bind tighter than ^; exponent may be a unary chain
        Expr::Pow(a, b) => {
            let exp = if matches!(**b, Expr::Neg(_) | Expr::Pow(..)) {
                print_expr(b)
            } else {
                wrap(b, 5)
            };
            format!("{}^{}", wrap(a, 5), exp)
        }
        Expr::Call(f, args) => {
            let inner: Vec<String> = args.iter().map(print_expr).collect();
            format!("{}({})", f.name(), inner.join(","))
        }
    }
}

// --------------------------------------------------------- mesh sampling

/// An expression together with its samples on a mesh.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub expr: Expr,
    pub samples: Vec<f64>,
}

/// Evaluates the expression at every mesh node.
pub fn sample_on_mesh(expr: &Expr, mesh: &Mesh) -> Result<CoefficientField> {
    let mut samples = Vec::with_capacity(mesh.num_nodes());
    for (i, p) in mesh.nodes.iter().enumerate() {
        let pt = if mesh.dim() == 1 {
            Point::new_1d(p[0])
        } else {
            Point::new_2d(p[0], p[1])
        };
        let v = evaluate(expr, pt)
            .map_err(|e| Error::Eval(format!("at node {i}: {e}")))?;
        samples.push(v);
    }
    Ok(CoefficientField {
        expr: expr.clone(),
        samples,
    })
}

/// Convenience: parse and sample in one go.
pub fn field_from_text(text: &str, mesh: &Mesh) -> Result<CoefficientField> {
    let e = parse_expression(text)?;
    sample_on_mesh(&e, mesh)
}
