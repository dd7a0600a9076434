use super::{BinOp, Func, Node};

fn num(x: f64) -> Node {
    Node::Num(x)
}

fn is_num(n: &Node, x: f64) -> bool {
    matches!(n, Node::Num(v) if *v == x)
}

fn neg(a: Node) -> Node {
    match a {
        Node::Num(x) => num(-x),
        Node::Neg(inner) => *inner,
        a => Node::Neg(Box::new(a)),
    }
}

fn add(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), Node::Num(y)) => num(x + y),
        _ if is_num(&a, 0.0) => b,
        _ if is_num(&b, 0.0) => a,
        _ => Node::Binary(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), Node::Num(y)) => num(x - y),
        _ if is_num(&b, 0.0) => a,
        _ if is_num(&a, 0.0) => neg(b),
        _ => Node::Binary(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), Node::Num(y)) => num(x * y),
        _ if is_num(&a, 0.0) || is_num(&b, 0.0) => num(0.0),
        _ if is_num(&a, 1.0) => b,
        _ if is_num(&b, 1.0) => a,
        _ if is_num(&a, -1.0) => neg(b),
        _ if is_num(&b, -1.0) => neg(a),
        _ => Node::Binary(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Num(x), Node::Num(y)) if *y != 0.0 => num(x / y),
        _ if is_num(&a, 0.0) => num(0.0),
        _ if is_num(&b, 1.0) => a,
        _ => Node::Binary(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

fn pow(a: Node, b: Node) -> Node {
    match (&a, &b) {
        _ if is_num(&b, 0.0) => num(1.0),
        _ if is_num(&b, 1.0) => a,
        _ => Node::Binary(BinOp::Pow, Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Node) -> Node {
    Node::Call(f, Box::new(a))
}

/// d(node)/d(var), with constant folding on the result.
pub(super) fn derivative(node: &Node, var: &str) -> Node {
    match node {
        Node::Num(_) | Node::Param(_) => num(0.0),
        Node::Var(v) => num(if v == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(derivative(a, var)),
        Node::Binary(op, a, b) => {
            let (u, v) = (a.as_ref(), b.as_ref());
            match op {
                BinOp::Add => add(derivative(u, var), derivative(v, var)),
                BinOp::Sub => sub(derivative(u, var), derivative(v, var)),
                BinOp::Mul => add(
                    mul(derivative(u, var), v.clone()),
                    mul(u.clone(), derivative(v, var)),
                ),
                BinOp::Div => {
                    let du = derivative(u, var);
                    let dv = derivative(v, var);
                    if is_num(&dv, 0.0) {
                        div(du, v.clone())
                    } else {
                        div(
                            sub(mul(du, v.clone()), mul(u.clone(), dv)),
                            pow(v.clone(), num(2.0)),
                        )
                    }
                }
                BinOp::Pow => {
                    let du = derivative(u, var);
                    if !v.depends_on(var) {
                        // power rule: c * u^(c-1) * u'
                        let reduced = match v {
                            Node::Num(c) => num(c - 1.0),
                            _ => sub(v.clone(), num(1.0)),
                        };
                        mul(mul(v.clone(), pow(u.clone(), reduced)), du)
                    } else {
                        // u^v = exp(v log u)
                        let dv = derivative(v, var);
                        let inner = add(
                            mul(dv, call(Func::Log, u.clone())),
                            mul(v.clone(), div(du, u.clone())),
                        );
                        mul(node.clone(), inner)
                    }
                }
            }
        }
        Node::Call(f, a) => {
            let u = a.as_ref();
            let du = derivative(u, var);
            if is_num(&du, 0.0) {
                return num(0.0);
            }
            match f {
                Func::Sqrt => div(du, mul(num(2.0), node.clone())),
                Func::Exp => mul(node.clone(), du),
                Func::Log => div(du, u.clone()),
                Func::Abs => mul(div(u.clone(), node.clone()), du),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Params, Point, Symbols};

    fn eval1(text: &str, d: &str, x: f64) -> f64 {
        let e = parse(text, &Symbols::new(["x", "y"], ["c"])).unwrap();
        let p = Point::new([("x", x), ("y", 0.7)]).unwrap();
        let params = Params::from([("c".to_string(), 1.3)]);
        e.differentiate(d).evaluate(&p, &params).unwrap()
    }

    #[test]
    fn sqrt_chain_rule() {
        let e = parse("sqrt(2*S)", &Symbols::new(["S"], Vec::<String>::new())).unwrap();
        let d = e.differentiate("S");
        for s in [0.3, 1.0, 4.5] {
            let p = Point::new([("S", s)]).unwrap();
            let got = d.evaluate(&p, &Params::new()).unwrap();
            assert!((got - 1.0 / (2.0 * s).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn elementary_rules() {
        let x: f64 = 1.7;
        let cases: [(&str, f64); 9] = [
            ("x^3", 3.0 * x * x),
            ("c*x^c", 1.3 * 1.3 * x.powf(0.3)),
            ("exp(2*x)", 2.0 * (2.0 * x).exp()),
            ("log(x*x)", 2.0 / x),
            ("abs(1 - x)", 1.0),
            ("x^x", x.powf(x) * (x.ln() + 1.0)),
            ("2^x", 2f64.powf(x) * 2f64.ln()),
            ("1/x", -1.0 / (x * x)),
            ("-(x*y)", -0.7),
        ];
        for (text, want) in cases {
            let got = eval1(text, "x", x);
            assert!((got - want).abs() < 1e-13 * want.abs().max(1.0), "{text}: {got} vs {want}");
        }
        assert_eq!(eval1("y^2 + c", "x", x), 0.0);
    }

    #[test]
    fn constant_subtrees_fold_to_zero() {
        let e = parse("sqrt(c) + y", &Symbols::new(["x", "y"], ["c"])).unwrap();
        assert_eq!(e.differentiate("x").to_string(), "0");
    }
}
