//! Potential expressions: parsing, evaluation and exact symbolic derivatives.
//!
//! An [`Expression`] is an immutable syntax tree over named variables and
//! named parameters. Derivatives are built as new trees with light constant
//! folding, so a derivative can be constructed once and evaluated at many
//! points.

mod derive;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

pub use parser::{parse, Symbols};

/// Parameter values keyed by name.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Abs,
}

impl Func {
    pub(crate) fn from_name(name: &str) -> Option<Func> {
        match name {
            "sqrt" => Some(Func::Sqrt),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(String),
    Param(String),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Num(_) | Node::Var(_) | Node::Param(_) => 1,
            Node::Neg(a) | Node::Call(_, a) => 1 + a.depth(),
            Node::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// True if the variable `var` occurs anywhere in the subtree.
    pub fn depends_on(&self, var: &str) -> bool {
        match self {
            Node::Var(v) => v == var,
            Node::Num(_) | Node::Param(_) => false,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on(var),
            Node::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    fn has_variables(&self) -> bool {
        match self {
            Node::Var(_) => true,
            Node::Num(_) | Node::Param(_) => false,
            Node::Neg(a) | Node::Call(_, a) => a.has_variables(),
            Node::Binary(_, a, b) => a.has_variables() || b.has_variables(),
        }
    }

    fn collect_names(&self, vars: &mut Vec<String>, params: &mut Vec<String>) {
        match self {
            Node::Var(v) => {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
            Node::Param(p) => {
                if !params.contains(p) {
                    params.push(p.clone());
                }
            }
            Node::Num(_) => {}
            Node::Neg(a) | Node::Call(_, a) => a.collect_names(vars, params),
            Node::Binary(_, a, b) => {
                a.collect_names(vars, params);
                b.collect_names(vars, params);
            }
        }
    }

    fn eval(&self, pt: &Point, params: &Params) -> Result<f64> {
        match self {
            Node::Num(x) => Ok(*x),
            Node::Var(v) => pt.get(v).ok_or_else(|| Error::Unbound(v.clone())),
            Node::Param(p) => params
                .get(p)
                .copied()
                .ok_or_else(|| Error::Unbound(p.clone())),
            Node::Neg(a) => Ok(-a.eval(pt, params)?),
            Node::Binary(op, a, b) => {
                let x = a.eval(pt, params)?;
                let y = b.eval(pt, params)?;
                let r = match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(Error::Domain("division by zero".into()));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        if b.has_variables() && x <= 0.0 {
                            return Err(Error::Domain(format!(
                                "variable exponent requires a positive base, got {x}"
                            )));
                        }
                        x.powf(y)
                    }
                };
                finite(r, *op)
            }
            Node::Call(f, a) => {
                let x = a.eval(pt, params)?;
                let r = match f {
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(Error::Domain(format!("sqrt of negative value {x}")));
                        }
                        x.sqrt()
                    }
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(Error::Domain(format!("log of non-positive value {x}")));
                        }
                        x.ln()
                    }
                    Func::Exp => x.exp(),
                    Func::Abs => x.abs(),
                };
                if r.is_finite() {
                    Ok(r)
                } else {
                    Err(Error::Domain(format!("{} overflowed", f.name())))
                }
            }
        }
    }
}

fn finite(r: f64, op: BinOp) -> Result<f64> {
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::Domain(format!("non-finite result of `{}`", op.symbol())))
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    // Both branches print the shortest text that reparses to the same f64.
    let a = x.abs();
    let body = if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{a}")
    } else {
        format!("{a:e}")
    };
    if x.is_sign_negative() && x != 0.0 {
        write!(f, "(-{body})")
    } else {
        f.write_str(&body)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(x) => write_number(f, *x),
            Node::Var(v) | Node::Param(v) => f.write_str(v),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// An immutable expression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
}

impl Expression {
    pub fn from_node(root: Node) -> Self {
        Expression { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Variable and parameter names in order of first appearance.
    pub fn names(&self) -> (Vec<String>, Vec<String>) {
        let mut vars = Vec::new();
        let mut params = Vec::new();
        self.root.collect_names(&mut vars, &mut params);
        (vars, params)
    }

    pub fn evaluate(&self, pt: &Point, params: &Params) -> Result<f64> {
        self.root.eval(pt, params)
    }

    /// Exact derivative with respect to the variable `var`.
    pub fn differentiate(&self, var: &str) -> Expression {
        Expression {
            root: derive::derivative(&self.root, var),
        }
    }

    pub fn gradient(&self, vars: &[String], pt: &Point, params: &Params) -> Result<Vec<f64>> {
        vars.iter()
            .map(|v| self.differentiate(v).evaluate(pt, params))
            .collect()
    }

    /// Hessian in the order of `vars`, checked for symmetry and then
    /// symmetrized.
    pub fn hessian(&self, vars: &[String], pt: &Point, params: &Params) -> Result<Vec<Vec<f64>>> {
        let first: Vec<Expression> = vars.iter().map(|v| self.differentiate(v)).collect();
        let second: Vec<Vec<Expression>> = first
            .iter()
            .map(|d| vars.iter().map(|v| d.differentiate(v)).collect())
            .collect();
        evaluate_hessian(&second, pt, params)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// Relative tolerance on the raw Hessian asymmetry.
pub const HESSIAN_SYMMETRY_TOL: f64 = 1e-12;

pub(crate) fn evaluate_hessian(
    second: &[Vec<Expression>],
    pt: &Point,
    params: &Params,
) -> Result<Vec<Vec<f64>>> {
    let n = second.len();
    let mut h = vec![vec![0.0; n]; n];
    for (a, row) in second.iter().enumerate() {
        for (b, e) in row.iter().enumerate() {
            h[a][b] = e.evaluate(pt, params)?;
        }
    }
    let scale = h
        .iter()
        .flatten()
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut asym = 0.0_f64;
    for a in 0..n {
        for b in (a + 1)..n {
            asym = asym.max((h[a][b] - h[b][a]).abs());
        }
    }
    if asym > HESSIAN_SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::AsymmetricHessian {
            asymmetry: asym / scale,
        });
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let m = 0.5 * (h[a][b] + h[b][a]);
            h[a][b] = m;
            h[b][a] = m;
        }
    }
    Ok(h)
}

/// Variable assignment at which an expression is evaluated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Point {
    values: BTreeMap<String, f64>,
}

impl Point {
    pub fn new<I, K>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, f64)>,
        K: Into<String>,
    {
        let mut values = BTreeMap::new();
        for (k, v) in pairs {
            let k = k.into();
            if !v.is_finite() {
                return Err(Error::Domain(format!("non-finite value for `{k}`")));
            }
            if values.insert(k.clone(), v).is_some() {
                return Err(Error::Validation(format!("`{k}` given twice")));
            }
        }
        Ok(Point { values })
    }

    /// Builds a point from values listed in `names` order.
    pub fn from_ordered(names: &[String], values: &[f64]) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} variables",
                values.len(),
                names.len()
            )));
        }
        Point::new(names.iter().cloned().zip(values.iter().copied()))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn ordered(&self, names: &[String]) -> Result<Vec<f64>> {
        names
            .iter()
            .map(|n| self.get(n).ok_or_else(|| Error::Unbound(n.clone())))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }
}
