//! Expression sub-language for regularizers.
//!
//! Grammar: numbers, `x1..xk` (coordinates), `norm`, `r` (radius, for radial
//! profiles), `+ - * / ^`, parentheses and the functions `abs sqrt exp ln log
//! min max step sign`. `step(t)` is 1 for `t ≥ 0` and 0 otherwise.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Coord(usize),
    Norm,
    Radius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Abs,
    Sqrt,
    Exp,
    Ln,
    Min,
    Max,
    Step,
    Sign,
}

impl Func {
    fn parse(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "abs" => (Func::Abs, 1),
            "sqrt" => (Func::Sqrt, 1),
            "exp" => (Func::Exp, 1),
            "ln" | "log" => (Func::Ln, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            "step" => (Func::Step, 1),
            "sign" => (Func::Sign, 1),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed expression that remembers its source text.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Expr {
    source: String,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl TryFrom<String> for Expr {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Expr::parse(&s)
    }
}

impl From<Expr> for String {
    fn from(e: Expr) -> String {
        e.source
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { src, pos: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Expr {
            source: src.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, lookup: &dyn Fn(Var) -> f64) -> f64 {
        eval(&self.root, lookup)
    }

    /// Evaluates a radial profile at radius `r`.
    pub fn eval_radius(&self, r: f64) -> f64 {
        self.eval(&|v| match v {
            Var::Radius | Var::Norm => r,
            Var::Coord(_) => f64::NAN,
        })
    }

    /// Every variable referenced by the expression.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        collect_vars(&self.root, &mut out);
        out
    }

    /// Largest coordinate index referenced (0 if none).
    pub fn max_coordinate(&self) -> usize {
        self.variables()
            .into_iter()
            .filter_map(|v| match v {
                Var::Coord(i) => Some(i),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Symbolic derivative with respect to `r` (used for radial profiles).
    pub fn derivative(&self) -> Expr {
        let root = simplify(diff(&self.root));
        Expr {
            source: format!("d/dr[{}]", self.source),
            root,
        }
    }
}

fn collect_vars(n: &Node, out: &mut Vec<Var>) {
    match n {
        Node::Num(_) => {}
        Node::Var(v) => {
            if !out.contains(v) {
                out.push(*v)
            }
        }
        Node::Neg(a) => collect_vars(a, out),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
        Node::Call(_, args) => args.iter().for_each(|a| collect_vars(a, out)),
    }
}

fn eval(n: &Node, lookup: &dyn Fn(Var) -> f64) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(v) => lookup(*v),
        Node::Neg(a) => -eval(a, lookup),
        Node::Add(a, b) => eval(a, lookup) + eval(b, lookup),
        Node::Sub(a, b) => eval(a, lookup) - eval(b, lookup),
        Node::Mul(a, b) => eval(a, lookup) * eval(b, lookup),
        Node::Div(a, b) => eval(a, lookup) / eval(b, lookup),
        Node::Pow(a, b) => {
            let base = eval(a, lookup);
            let e = eval(b, lookup);
            if e == 2.0 {
                base * base
            } else if e.fract() == 0.0 && e.abs() < 64.0 {
                base.powi(e as i32)
            } else {
                base.powf(e)
            }
        }
        Node::Call(f, args) => {
            let x = eval(&args[0], lookup);
            match f {
                Func::Abs => x.abs(),
                Func::Sqrt => x.sqrt(),
                Func::Exp => x.exp(),
                Func::Ln => x.ln(),
                Func::Min => x.min(eval(&args[1], lookup)),
                Func::Max => x.max(eval(&args[1], lookup)),
                Func::Step => {
                    if x >= 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Func::Sign => {
                    if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
            }
        }
    }
}

fn num(v: f64) -> Box<Node> {
    Box::new(Node::Num(v))
}

fn b(n: Node) -> Box<Node> {
    Box::new(n)
}

fn is_radius(n: &Node) -> bool {
    matches!(n, Node::Var(Var::Radius) | Node::Var(Var::Norm))
}

fn depends(n: &Node) -> bool {
    match n {
        Node::Num(_) => false,
        Node::Var(_) => is_radius(n),
        Node::Neg(a) => depends(a),
        Node::Add(a, c) | Node::Sub(a, c) | Node::Mul(a, c) | Node::Div(a, c) | Node::Pow(a, c) => {
            depends(a) || depends(c)
        }
        Node::Call(_, args) => args.iter().any(depends),
    }
}

fn diff(n: &Node) -> Node {
    if !depends(n) {
        return Node::Num(0.0);
    }
    match n {
        Node::Num(_) => Node::Num(0.0),
        Node::Var(_) => Node::Num(1.0),
        Node::Neg(a) => Node::Neg(b(diff(a))),
        Node::Add(x, y) => Node::Add(b(diff(x)), b(diff(y))),
        Node::Sub(x, y) => Node::Sub(b(diff(x)), b(diff(y))),
        Node::Mul(x, y) => Node::Add(
            b(Node::Mul(b(diff(x)), y.clone())),
            b(Node::Mul(x.clone(), b(diff(y)))),
        ),
        Node::Div(x, y) => Node::Div(
            b(Node::Sub(
                b(Node::Mul(b(diff(x)), y.clone())),
                b(Node::Mul(x.clone(), b(diff(y)))),
            )),
            b(Node::Pow(y.clone(), num(2.0))),
        ),
        Node::Pow(x, e) if !depends(e) => Node::Mul(
            b(Node::Mul(e.clone(), b(Node::Pow(x.clone(), b(Node::Sub(e.clone(), num(1.0))))))),
            b(diff(x)),
        ),
        Node::Pow(x, e) => {
            // d(x^e) = x^e (e' ln x + e x'/x)
            Node::Mul(
                b(n.clone()),
                b(Node::Add(
                    b(Node::Mul(b(diff(e)), b(Node::Call(Func::Ln, vec![(**x).clone()])))),
                    b(Node::Div(b(Node::Mul(e.clone(), b(diff(x)))), x.clone())),
                )),
            )
        }
        Node::Call(f, args) => {
            let a = &args[0];
            let da = b(diff(a));
            match f {
                Func::Abs => Node::Mul(b(Node::Call(Func::Sign, vec![a.clone()])), da),
                Func::Sqrt => Node::Div(da, b(Node::Mul(num(2.0), b(n.clone())))),
                Func::Exp => Node::Mul(b(n.clone()), da),
                Func::Ln => Node::Div(da, b(a.clone())),
                Func::Step | Func::Sign => Node::Num(0.0),
                Func::Min | Func::Max => {
                    // derivative of the active branch: step(a - c) selects a for max
                    let c = &args[1];
                    let sel_a = Node::Call(
                        Func::Step,
                        vec![if *f == Func::Max {
                            Node::Sub(b(a.clone()), b(c.clone()))
                        } else {
                            Node::Sub(b(c.clone()), b(a.clone()))
                        }],
                    );
                    let dc = diff(c);
                    Node::Add(
                        b(Node::Mul(b(sel_a.clone()), da)),
                        b(Node::Mul(b(Node::Sub(num(1.0), b(sel_a))), b(dc))),
                    )
                }
            }
        }
    }
}

fn simplify(n: Node) -> Node {
    match n {
        Node::Add(x, y) => match (simplify(*x), simplify(*y)) {
            (Node::Num(a), Node::Num(c)) => Node::Num(a + c),
            (Node::Num(z), e) | (e, Node::Num(z)) if z == 0.0 => e,
            (a, c) => Node::Add(b(a), b(c)),
        },
        Node::Sub(x, y) => match (simplify(*x), simplify(*y)) {
            (Node::Num(a), Node::Num(c)) => Node::Num(a - c),
            (e, Node::Num(z)) if z == 0.0 => e,
            (a, c) => Node::Sub(b(a), b(c)),
        },
        Node::Mul(x, y) => match (simplify(*x), simplify(*y)) {
            (Node::Num(a), Node::Num(c)) => Node::Num(a * c),
            (Node::Num(z), _) | (_, Node::Num(z)) if z == 0.0 => Node::Num(0.0),
            (Node::Num(o), e) | (e, Node::Num(o)) if o == 1.0 => e,
            (a, c) => Node::Mul(b(a), b(c)),
        },
        Node::Div(x, y) => match (simplify(*x), simplify(*y)) {
            (Node::Num(z), _) if z == 0.0 => Node::Num(0.0),
            (e, Node::Num(o)) if o == 1.0 => e,
            (a, c) => Node::Div(b(a), b(c)),
        },
        Node::Neg(x) => match simplify(*x) {
            Node::Num(a) => Node::Num(-a),
            e => Node::Neg(b(e)),
        },
        Node::Pow(x, y) => match (simplify(*x), simplify(*y)) {
            (e, Node::Num(o)) if o == 1.0 => e,
            (_, Node::Num(z)) if z == 0.0 => Node::Num(1.0),
            (a, c) => Node::Pow(b(a), b(c)),
        },
        Node::Call(f, args) => Node::Call(f, args.into_iter().map(simplify).collect()),
        other => other,
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Expression {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(b(lhs), b(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(b(lhs), b(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(b(lhs), b(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(b(lhs), b(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(b(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            let e = self.unary()?;
            return Ok(Node::Pow(b(base), b(e)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.err("unexpected end of expression")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
                    self.pos += 1;
                }
                if self.peek().is_some_and(|c| c == 'e' || c == 'E') {
                    let save = self.pos;
                    self.pos += 1;
                    if self.peek().is_some_and(|c| c == '+' || c == '-') {
                        self.pos += 1;
                    }
                    if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                            self.pos += 1;
                        }
                    } else {
                        self.pos = save;
                    }
                }
                let text = &self.src[start..self.pos];
                text.parse::<f64>().map(Node::Num).map_err(|_| Error::Expression {
                    pos: start,
                    msg: format!("bad number '{text}'"),
                })
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                if self.eat('(') {
                    let (func, arity) = Func::parse(name).ok_or_else(|| Error::Expression {
                        pos: start,
                        msg: format!("unknown function '{name}'"),
                    })?;
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    if !self.eat(')') {
                        return Err(self.err("expected ')'"));
                    }
                    if args.len() != arity {
                        return Err(Error::Expression {
                            pos: start,
                            msg: format!("'{name}' takes {arity} argument(s)"),
                        });
                    }
                    return Ok(Node::Call(func, args));
                }
                match name {
                    "norm" => Ok(Node::Var(Var::Norm)),
                    "r" => Ok(Node::Var(Var::Radius)),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    _ => {
                        if let Some(idx) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                            if idx >= 1 {
                                return Ok(Node::Var(Var::Coord(idx)));
                            }
                        }
                        Err(Error::Expression {
                            pos: start,
                            msg: format!("unknown variable '{name}'"),
                        })
                    }
                }
            }
            Some(c) => Err(self.err(&format!("unexpected character '{c}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(src: &str, r: f64) -> f64 {
        Expr::parse(src).unwrap().eval_radius(r)
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(at("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(at("-2^2", 0.0), -4.0);
        assert_eq!(at("2^3^2", 0.0), 512.0);
        assert_eq!(at("(r - 1)^2", 3.0), 4.0);
        assert_eq!(at("step(r - 1)", 1.0), 1.0);
        assert_eq!(at("step(r - 1)", 0.999), 0.0);
        assert_eq!(at("max(r, 2) + min(r, 2)", 5.0), 7.0);
        assert_eq!(at("1e-3 * 2", 0.0), 0.002);
    }

    #[test]
    fn coordinates() {
        let e = Expr::parse("x1 + 2*x3 - norm").unwrap();
        let v = e.eval(&|v| match v {
            Var::Coord(i) => i as f64,
            Var::Norm => 10.0,
            Var::Radius => f64::NAN,
        });
        assert_eq!(v, 1.0 + 6.0 - 10.0);
        assert_eq!(e.max_coordinate(), 3);
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(Expr::parse("1 + foo"), Err(Error::Expression { pos: 4, .. })));
        assert!(matches!(Expr::parse("max(1)"), Err(Error::Expression { .. })));
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("x0").is_err());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for src in ["r^2", "(r-5)^2", "sqrt(r) * exp(-r)", "r^r", "ln(1 + r^2) / r", "abs(r - 2)"] {
            let e = Expr::parse(src).unwrap();
            let d = e.derivative();
            for &r in &[0.7, 1.3, 2.9] {
                let h = 1e-6;
                let fd = (e.eval_radius(r + h) - e.eval_radius(r - h)) / (2.0 * h);
                assert!((d.eval_radius(r) - fd).abs() < 1e-6, "{src} at {r}");
            }
        }
    }
}
