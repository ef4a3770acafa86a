use super::{div_checked, pow_checked, EvalError, Expr, Func};

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Slot(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Func(Func, Box<Node>),
}

/// An expression whose variables have been resolved to positions in a value
/// slice. Evaluation avoids name lookups, which matters inside solver loops.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    root: Node,
}

impl CompiledExpr {
    pub(super) fn new(e: &Expr, names: &[String]) -> Result<Self, EvalError> {
        Ok(CompiledExpr {
            root: lower(e, names)?,
        })
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        eval(&self.root, values)
    }
}

fn lower(e: &Expr, names: &[String]) -> Result<Node, EvalError> {
    let b = |x: &Expr| lower(x, names).map(Box::new);
    Ok(match e {
        Expr::Const(c) => Node::Const(*c),
        Expr::Var(v) => Node::Slot(
            names
                .iter()
                .position(|n| n == v)
                .ok_or_else(|| EvalError::Unbound(v.clone()))?,
        ),
        Expr::Neg(a) => Node::Neg(b(a)?),
        Expr::Add(x, y) => Node::Add(b(x)?, b(y)?),
        Expr::Sub(x, y) => Node::Sub(b(x)?, b(y)?),
        Expr::Mul(x, y) => Node::Mul(b(x)?, b(y)?),
        Expr::Div(x, y) => Node::Div(b(x)?, b(y)?),
        Expr::Pow(a, n) => Node::Pow(b(a)?, *n),
        Expr::Func(f, a) => Node::Func(*f, b(a)?),
    })
}

fn eval(n: &Node, v: &[f64]) -> Result<f64, EvalError> {
    match n {
        Node::Const(c) => Ok(*c),
        Node::Slot(i) => Ok(v[*i]),
        Node::Neg(a) => Ok(-eval(a, v)?),
        Node::Add(a, b) => Ok(eval(a, v)? + eval(b, v)?),
        Node::Sub(a, b) => Ok(eval(a, v)? - eval(b, v)?),
        Node::Mul(a, b) => Ok(eval(a, v)? * eval(b, v)?),
        Node::Div(a, b) => div_checked(eval(a, v)?, eval(b, v)?),
        Node::Pow(a, k) => pow_checked(eval(a, v)?, *k),
        Node::Func(f, a) => f.apply(eval(a, v)?),
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    #[test]
    fn compiled_matches_tree_eval() {
        let names: Vec<String> = ["x1", "u1", "p1_1"].iter().map(|s| s.to_string()).collect();
        let e = parse("sin(x1)*u1 + p1_1^2/2 - exp(u1)").unwrap();
        let c = e.compile(&names).unwrap();
        let vals = [0.3, -1.2, 2.5];
        let b = names.iter().cloned().zip(vals).collect();
        assert_eq!(c.eval(&vals).unwrap(), e.eval(&b).unwrap());
    }

    #[test]
    fn unknown_names_fail_at_compile_time() {
        let names = vec!["x1".to_string()];
        assert!(parse("x1 + y").unwrap().compile(&names).is_err());
    }
}
