//! Arithmetic expressions in the parameters `u1, …, un`.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! sum     = product (('+' | '-') product)*
//! product = unary (('*' | '/') unary)*
//! unary   = ('-' | '+') unary | power
//! power   = atom ('^' unary)?
//! atom    = number | 'pi' | 'u' digits | func '(' sum ')' | '(' sum ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-u1^2`
//! is `-(u1^2)`.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    const ALL: [(&'static str, Func); 9] = [
        ("sin", Func::Sin),
        ("cos", Func::Cos),
        ("tan", Func::Tan),
        ("sinh", Func::Sinh),
        ("cosh", Func::Cosh),
        ("tanh", Func::Tanh),
        ("exp", Func::Exp),
        ("log", Func::Log),
        ("sqrt", Func::Sqrt),
    ];

    fn lookup(name: &str) -> Option<Func> {
        Func::ALL.iter().find(|(n, _)| *n == name).map(|(_, f)| *f)
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Zero-based parameter index: `u1` is `Var(0)`.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            Expr::Num(x) => *x,
            Expr::Var(i) => u[*i],
            Expr::Neg(e) => -e.eval(u),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(u), b.eval(u));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, e) => f.apply(e.eval(u)),
        }
    }

    /// Zero-based indices of the parameters the expression reads.
    pub fn variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(i) => {
                out.insert(*i);
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

/// Syntax error at a 1-based line and column of the enclosing text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

/// Parses `src`, reporting positions relative to `line` and the column
/// `col0` at which `src` starts.
pub fn parse_expr(src: &str, line: usize, col0: usize) -> Result<Expr, SyntaxError> {
    let toks = tokenize(src, line, col0)?;
    let end_col = col0 + src.chars().count();
    let mut p = Parser { toks, pos: 0, line, end_col };
    if p.toks.is_empty() {
        return Err(p.error_at(col0, "empty expression"));
    }
    let e = p.sum()?;
    if let Some((t, c)) = p.toks.get(p.pos) {
        return Err(p.error_at(*c, &format!("unexpected {}", describe(t))));
    }
    Ok(e)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(x) => format!("number {x}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Op(c) => format!("'{c}'"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
    }
}

fn tokenize(src: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| SyntaxError { line, column: col, message: format!("malformed number '{text}'") })?;
            out.push((Tok::Num(value), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else {
            let t = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => return Err(SyntaxError { line, column: col, message: format!("unexpected character '{c}'") }),
            };
            out.push((t, col));
            i += 1;
        }
    }
    Ok(out)
}

impl Parser {
    fn error_at(&self, column: usize, message: &str) -> SyntaxError {
        SyntaxError { line: self.line, column, message: message.to_string() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Tok::Op(c)) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn sum(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.product()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.product()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        match self.eat_op(&['-', '+']) {
            Some('-') => Ok(Expr::Neg(Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, SyntaxError> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self, open_col: usize) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error_at(self.col(), &format!("expected ')' to close '(' at column {open_col}"))),
        }
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        let col = self.col();
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error_at(col, "unexpected end of expression"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(x) => Ok(Expr::Num(x)),
            Tok::LParen => {
                let e = self.sum()?;
                self.expect_rparen(col)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "pi" {
                    return Ok(Expr::Num(std::f64::consts::PI));
                }
                if let Some(digits) = name.strip_prefix('u') {
                    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                        let idx: usize = digits.parse().map_err(|_| self.error_at(col, "parameter index out of range"))?;
                        if idx == 0 {
                            return Err(self.error_at(col, "parameters are numbered from u1"));
                        }
                        return Ok(Expr::Var(idx - 1));
                    }
                }
                let f = Func::lookup(&name).ok_or_else(|| self.error_at(col, &format!("unknown name '{name}'")))?;
                let open = self.col();
                if self.peek() != Some(&Tok::LParen) {
                    return Err(self.error_at(open, &format!("expected '(' after {name}")));
                }
                self.pos += 1;
                let arg = self.sum()?;
                self.expect_rparen(open)?;
                Ok(Expr::Call(f, Box::new(arg)))
            }
            other => Err(self.error_at(col, &format!("unexpected {}", describe(&other)))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, u: &[f64]) -> f64 {
        parse_expr(src, 1, 1).unwrap().eval(u)
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("1 + 2 * 3", &[]), 7.0);
        assert_eq!(eval("-2^2", &[]), -4.0);
        assert_eq!(eval("2^3^2", &[]), 512.0);
        assert_eq!(eval("(1 + 2) * 3", &[]), 9.0);
        assert_eq!(eval("8 / 2 / 2", &[]), 2.0);
        assert_eq!(eval("2^-1", &[]), 0.5);
    }

    #[test]
    fn functions_and_variables() {
        let v = eval("cos(u1)*cos(u2) + sqrt(u3) - pi", &[0.0, 0.0, 4.0]);
        assert!((v - (3.0 - std::f64::consts::PI)).abs() < 1e-15);
        assert_eq!(eval("1.5e-3", &[]), 1.5e-3);
        let e = parse_expr("u3 * sin(u1)", 1, 1).unwrap();
        assert_eq!(e.variables().into_iter().collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_expr("cos(u1", 3, 10).unwrap_err();
        assert_eq!((err.line, err.column), (3, 16));
        let err = parse_expr("1 + foo(2)", 1, 1).unwrap_err();
        assert_eq!(err.column, 5);
        assert!(err.message.contains("foo"));
        let err = parse_expr("u0", 1, 1).unwrap_err();
        assert_eq!(err.column, 1);
        assert!(parse_expr("1 2", 1, 1).is_err());
        assert!(parse_expr("", 1, 1).is_err());
        assert!(parse_expr("2 $ 3", 1, 1).is_err());
    }
}
