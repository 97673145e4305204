//! Property tests for the material-law expression engine.
//!
//! A reference AST is generated directly in the test, printed with full
//! parentheses (one unambiguous reading), parsed by the library, and compared
//! against an independent mirror evaluator. Agreement must be bit-exact: the
//! parser has no freedom in how to associate a fully parenthesized source, so
//! both sides perform the identical sequence of floating-point operations.

use proptest::prelude::*;
use tentacle_core::ParamExpr;

#[derive(Debug, Clone)]
enum RefNode {
    Num(f64),
    Var,
    Pi,
    Neg(Box<RefNode>),
    Add(Box<RefNode>, Box<RefNode>),
    Sub(Box<RefNode>, Box<RefNode>),
    Mul(Box<RefNode>, Box<RefNode>),
    Div(Box<RefNode>, Box<RefNode>),
    Pow(Box<RefNode>, Box<RefNode>),
    Exp(Box<RefNode>),
    Sin(Box<RefNode>),
    Cos(Box<RefNode>),
    Sqrt(Box<RefNode>),
}

impl RefNode {
    /// Prints with explicit parentheses around every compound node.
    fn source(&self) -> String {
        match self {
            RefNode::Num(v) => format!("{v}"),
            RefNode::Var => "s".to_string(),
            RefNode::Pi => "pi".to_string(),
            RefNode::Neg(a) => format!("(-{})", a.source()),
            RefNode::Add(a, b) => format!("({}+{})", a.source(), b.source()),
            RefNode::Sub(a, b) => format!("({}-{})", a.source(), b.source()),
            RefNode::Mul(a, b) => format!("({}*{})", a.source(), b.source()),
            RefNode::Div(a, b) => format!("({}/{})", a.source(), b.source()),
            RefNode::Pow(a, b) => format!("({}^{})", a.source(), b.source()),
            RefNode::Exp(a) => format!("exp({})", a.source()),
            RefNode::Sin(a) => format!("sin({})", a.source()),
            RefNode::Cos(a) => format!("cos({})", a.source()),
            RefNode::Sqrt(a) => format!("sqrt({})", a.source()),
        }
    }

    /// Mirror of the library's strict evaluation rules: division by an exact
    /// zero, square roots of negative values and non-finite intermediate
    /// results all poison the evaluation (`None`).
    fn eval(&self, s: f64) -> Option<f64> {
        let strict = |v: f64| v.is_finite().then_some(v);
        match self {
            RefNode::Num(v) => Some(*v),
            RefNode::Var => Some(s),
            RefNode::Pi => Some(std::f64::consts::PI),
            RefNode::Neg(a) => Some(-a.eval(s)?),
            RefNode::Add(a, b) => strict(a.eval(s)? + b.eval(s)?),
            RefNode::Sub(a, b) => strict(a.eval(s)? - b.eval(s)?),
            RefNode::Mul(a, b) => strict(a.eval(s)? * b.eval(s)?),
            RefNode::Div(a, b) => {
                let d = b.eval(s)?;
                if d == 0.0 {
                    return None;
                }
                strict(a.eval(s)? / d)
            }
            RefNode::Pow(a, b) => strict(a.eval(s)?.powf(b.eval(s)?)),
            RefNode::Exp(a) => strict(a.eval(s)?.exp()),
            RefNode::Sin(a) => strict(a.eval(s)?.sin()),
            RefNode::Cos(a) => strict(a.eval(s)?.cos()),
            RefNode::Sqrt(a) => {
                let v = a.eval(s)?;
                if v < 0.0 {
                    return None;
                }
                strict(v.sqrt())
            }
        }
    }
}

fn leaf() -> impl Strategy<Value = RefNode> {
    prop_oneof![
        4 => (0.0..10.0f64).prop_map(RefNode::Num),
        2 => prop_oneof![
            Just(0.0),
            Just(0.5),
            Just(1.0),
            Just(2.0),
            Just(1e-3),
            Just(1e3),
        ]
        .prop_map(RefNode::Num),
        3 => Just(RefNode::Var),
        1 => Just(RefNode::Pi),
    ]
}

fn ast() -> impl Strategy<Value = RefNode> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| RefNode::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| RefNode::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| RefNode::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| RefNode::Div(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| RefNode::Pow(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| RefNode::Neg(Box::new(a))),
            inner.clone().prop_map(|a| RefNode::Exp(Box::new(a))),
            inner.clone().prop_map(|a| RefNode::Sin(Box::new(a))),
            inner.clone().prop_map(|a| RefNode::Cos(Box::new(a))),
            inner.prop_map(|a| RefNode::Sqrt(Box::new(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Parsing a fully parenthesized reference source and evaluating must
    /// agree bit-for-bit with the mirror evaluator, including which inputs
    /// are rejected.
    #[test]
    fn parse_and_eval_match_reference(node in ast(), points in proptest::collection::vec(0.0..=1.0f64, 8)) {
        let src = node.source();
        let parsed = ParamExpr::parse(&src)
            .unwrap_or_else(|e| panic!("reference source `{src}` failed to parse: {e}"));
        for s in points.iter().copied().chain([0.0, 1.0]) {
            match (node.eval(s), parsed.eval(s)) {
                (Some(want), Ok(got)) => prop_assert_eq!(
                    want.to_bits(), got.to_bits(),
                    "value mismatch at s = {} for `{}`: {} vs {}", s, src, want, got
                ),
                (None, Err(_)) => {}
                (want, got) => prop_assert!(
                    false,
                    "strictness mismatch at s = {} for `{}`: reference {:?}, parsed {:?}",
                    s, src, want, got
                ),
            }
        }
    }

    /// The minimal-parenthesis printer must emit a source that reads back to
    /// the same function: evaluation after one print/parse cycle is
    /// bit-identical wherever the original evaluates.
    #[test]
    fn pretty_printer_preserves_meaning(node in ast(), points in proptest::collection::vec(0.0..=1.0f64, 8)) {
        let src = node.source();
        let parsed = ParamExpr::parse(&src).unwrap();
        let printed = parsed.pretty();
        let reparsed = ParamExpr::parse(&printed)
            .unwrap_or_else(|e| panic!("pretty output `{printed}` of `{src}` failed to parse: {e}"));
        for s in points.iter().copied().chain([0.0, 1.0]) {
            match (parsed.eval(s), reparsed.eval(s)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(
                    a.to_bits(), b.to_bits(),
                    "`{}` -> `{}` changed value at s = {}: {} vs {}", src, printed, s, a, b
                ),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(
                    false,
                    "`{}` -> `{}` changed strictness at s = {}: {:?} vs {:?}",
                    src, printed, s, a, b
                ),
            }
        }
    }
}
