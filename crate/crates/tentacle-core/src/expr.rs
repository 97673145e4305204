//! Arithmetic expressions in the arclength variable `s`.
//!
//! Material laws (density, stiffnesses, curvature bound, friction) are given
//! as closed-form expressions such as `exp(-s)` or `2*pi*(1 + s^2)`. This
//! module parses them into a small AST, evaluates them strictly (every
//! non-finite intermediate is an error naming the offending subexpression),
//! and pretty-prints them back out.
//!
//! # Grammar
//!
//! ```text
//! expr   := term  { ("+" | "-") term }
//! term   := unary { ("*" | "/") unary }
//! unary  := "-" unary | power
//! power  := atom [ "^" unary ]          (right-associative)
//! atom   := number | "s" | "pi" | func "(" expr ")" | "(" expr ")"
//! func   := "exp" | "sin" | "cos" | "sqrt"
//! ```
//!
//! Numbers are ordinary decimal literals with optional exponent (`1e-3`,
//! `0.25`, `4.`). Whitespace is insignificant. Parse errors carry the 1-based
//! source column; an unclosed parenthesis reports the column where it was
//! opened.

use crate::error::{Error, Result};

/// Binary operators in precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Pi,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed material-law expression in `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamExpr {
    source: String,
    root: Node,
}

impl ParamExpr {
    /// Parses `source` into an expression, or reports the first error with
    /// its 1-based column.
    pub fn parse(source: &str) -> Result<Self> {
        let tokens = lex(source)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.parse_expr()?;
        match p.peek() {
            Token::End(_) => Ok(ParamExpr {
                source: source.to_string(),
                root,
            }),
            t => Err(Error::ExprParse {
                column: t.column(),
                message: format!("unexpected `{}` after a complete expression", t.describe()),
            }),
        }
    }

    /// The original source text.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Canonical rendering of the expression. Re-parsing the result yields a
    /// structurally identical expression.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        fmt_node(&self.root, 0, &mut out);
        out
    }

    /// Evaluates at arclength `s`, rejecting division by zero, domain errors
    /// and non-finite results with a message naming the subexpression.
    pub fn eval(&self, s: f64) -> Result<f64> {
        eval_node(&self.root, s)
    }
}

impl std::fmt::Display for ParamExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.pretty())
    }
}

/// Evaluates `expr` at `s`, retrying just inside the domain at the endpoints.
///
/// Material laws may carry removable singularities at the rod ends (for
/// example a factor that underflows or divides by zero exactly at `s = 1`).
/// Per convention such laws are sampled at `s = 1e−12` and `s = 1 − 1e−12`
/// instead; interior failures are reported unchanged.
pub fn eval_param(expr: &ParamExpr, s: f64) -> Result<f64> {
    match expr.eval(s) {
        Ok(v) => Ok(v),
        Err(err) => {
            if s == 0.0 {
                expr.eval(1e-12)
            } else if s == 1.0 {
                expr.eval(1.0 - 1e-12)
            } else {
                Err(err)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64, usize),
    Ident(String, usize),
    Plus(usize),
    Minus(usize),
    Star(usize),
    Slash(usize),
    Caret(usize),
    LParen(usize),
    RParen(usize),
    End(usize),
}

impl Token {
    fn column(&self) -> usize {
        match self {
            Token::Num(_, c)
            | Token::Ident(_, c)
            | Token::Plus(c)
            | Token::Minus(c)
            | Token::Star(c)
            | Token::Slash(c)
            | Token::Caret(c)
            | Token::LParen(c)
            | Token::RParen(c)
            | Token::End(c) => *c,
        }
    }

    fn describe(&self) -> String {
        match self {
            Token::Num(v, _) => format!("{v}"),
            Token::Ident(s, _) => s.clone(),
            Token::Plus(_) => "+".into(),
            Token::Minus(_) => "-".into(),
            Token::Star(_) => "*".into(),
            Token::Slash(_) => "/".into(),
            Token::Caret(_) => "^".into(),
            Token::LParen(_) => "(".into(),
            Token::RParen(_) => ")".into(),
            Token::End(_) => "end of input".into(),
        }
    }
}

fn lex(source: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                tokens.push(Token::Plus(column));
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus(column));
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star(column));
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash(column));
                i += 1;
            }
            '^' => {
                tokens.push(Token::Caret(column));
                i += 1;
            }
            '(' => {
                tokens.push(Token::LParen(column));
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen(column));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // Exponent part: only if followed by digits (possibly signed).
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
                let value: f64 = text.parse().map_err(|_| Error::ExprParse {
                    column,
                    message: format!("malformed number `{text}`"),
                })?;
                tokens.push(Token::Num(value, column));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                tokens.push(Token::Ident(text, column));
            }
            other => {
                return Err(Error::ExprParse {
                    column,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    tokens.push(Token::End(chars.len() + 1));
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn parse_expr(&mut self) -> Result<Node> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek() {
                Token::Plus(_) => BinOp::Add,
                Token::Minus(_) => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.parse_term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<Node> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek() {
                Token::Star(_) => BinOp::Mul,
                Token::Slash(_) => BinOp::Div,
                _ => break,
            };
            self.advance();
            let rhs = self.parse_unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Node> {
        if matches!(self.peek(), Token::Minus(_)) {
            self.advance();
            let inner = self.parse_unary()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Node> {
        let base = self.parse_atom()?;
        if matches!(self.peek(), Token::Caret(_)) {
            self.advance();
            // Right-associative; the exponent may itself be signed.
            let exponent = self.parse_unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Node> {
        match self.advance() {
            Token::Num(v, _) => Ok(Node::Num(v)),
            Token::Ident(name, column) => match name.as_str() {
                "s" => Ok(Node::Var),
                "pi" => Ok(Node::Pi),
                _ => {
                    if let Some(func) = Func::from_name(&name) {
                        match self.advance() {
                            Token::LParen(open_column) => {
                                let arg = self.parse_expr()?;
                                match self.advance() {
                                    Token::RParen(_) => Ok(Node::Call(func, Box::new(arg))),
                                    _ => Err(Error::ExprParse {
                                        column: open_column,
                                        message: format!(
                                            "unclosed parenthesis opened at column {open_column}"
                                        ),
                                    }),
                                }
                            }
                            t => Err(Error::ExprParse {
                                column: t.column().min(column + name.len()),
                                message: format!("expected `(` after function `{name}`"),
                            }),
                        }
                    } else {
                        Err(Error::ExprParse {
                            column,
                            message: format!("unknown identifier `{name}`"),
                        })
                    }
                }
            },
            Token::LParen(open_column) => {
                let inner = self.parse_expr()?;
                match self.advance() {
                    Token::RParen(_) => Ok(inner),
                    _ => Err(Error::ExprParse {
                        column: open_column,
                        message: format!("unclosed parenthesis opened at column {open_column}"),
                    }),
                }
            }
            t => Err(Error::ExprParse {
                column: t.column(),
                message: format!("expected a value, found {}", t.describe()),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Pretty printer
// ---------------------------------------------------------------------------

fn node_precedence(node: &Node) -> u8 {
    match node {
        Node::Num(_) | Node::Var | Node::Pi | Node::Call(..) => 5,
        Node::Neg(_) => 3,
        Node::Bin(op, ..) => op.precedence(),
    }
}

/// Writes `node`, parenthesizing whenever its precedence falls below the
/// context's minimum, so the output re-parses to the same tree.
fn fmt_node(node: &Node, min_prec: u8, out: &mut String) {
    let prec = node_precedence(node);
    let need_parens = prec < min_prec;
    if need_parens {
        out.push('(');
    }
    match node {
        Node::Num(v) => {
            // Shortest representation that round-trips the exact f64.
            out.push_str(&format!("{v}"));
        }
        Node::Var => out.push('s'),
        Node::Pi => out.push_str("pi"),
        Node::Neg(inner) => {
            out.push('-');
            fmt_node(inner, 3, out);
        }
        Node::Bin(op, lhs, rhs) => {
            let (lmin, rmin) = match op {
                // Left-associative: the right operand needs strictly higher
                // precedence to avoid regrouping a − (b − c) as a − b − c.
                BinOp::Add | BinOp::Sub => (1, 2),
                BinOp::Mul | BinOp::Div => (2, 3),
                // Right-associative.
                BinOp::Pow => (5, 4),
            };
            fmt_node(lhs, lmin, out);
            out.push_str(op.symbol());
            fmt_node(rhs, rmin, out);
        }
        Node::Call(func, arg) => {
            out.push_str(func.name());
            out.push('(');
            fmt_node(arg, 0, out);
            out.push(')');
        }
    }
    if need_parens {
        out.push(')');
    }
}

// ---------------------------------------------------------------------------
// Evaluator
// ---------------------------------------------------------------------------

fn eval_error(node: &Node, s: f64, message: &str) -> Error {
    let mut subexpr = String::new();
    fmt_node(node, 0, &mut subexpr);
    Error::ExprEval {
        subexpr,
        s,
        message: message.to_string(),
    }
}

fn eval_node(node: &Node, s: f64) -> Result<f64> {
    match node {
        Node::Num(v) => Ok(*v),
        Node::Var => Ok(s),
        Node::Pi => Ok(std::f64::consts::PI),
        Node::Neg(inner) => Ok(-eval_node(inner, s)?),
        Node::Bin(op, lhs, rhs) => {
            let a = eval_node(lhs, s)?;
            let b = eval_node(rhs, s)?;
            let value = match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(eval_error(node, s, "division by zero"));
                    }
                    a / b
                }
                BinOp::Pow => a.powf(b),
            };
            if value.is_finite() {
                Ok(value)
            } else {
                Err(eval_error(node, s, "non-finite result"))
            }
        }
        Node::Call(func, arg) => {
            let a = eval_node(arg, s)?;
            let value = match func {
                Func::Exp => a.exp(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(eval_error(node, s, "square root of a negative value"));
                    }
                    a.sqrt()
                }
            };
            if value.is_finite() {
                Ok(value)
            } else {
                Err(eval_error(node, s, "non-finite result"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eval_str(src: &str, s: f64) -> f64 {
        ParamExpr::parse(src).unwrap().eval(s).unwrap()
    }

    #[test]
    fn evaluates_reference_material_laws() {
        assert_eq!(eval_str("exp(-s)", 0.0), 1.0);
        assert_relative_eq!(eval_str("exp(-s)", 1.0), (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(eval_str("1e-3*(1 - 0.9*s)", 1.0), 1e-4, epsilon = 1e-13);
        assert_relative_eq!(
            eval_str("2*pi*(1 + s^2)", 1.0),
            4.0 * std::f64::consts::PI,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            eval_str("(1 - s)*exp(-0.1*s^2/(1 - s^2))", 0.5),
            0.5 * (-0.1 * 0.25 / 0.75f64).exp(),
            epsilon = 1e-15
        );
        assert_eq!(eval_str("4 - s", 0.25), 3.75);
    }

    #[test]
    fn operator_precedence_and_associativity() {
        assert_eq!(eval_str("2 + 3*4", 0.0), 14.0);
        assert_eq!(eval_str("2*3^2", 0.0), 18.0);
        assert_eq!(eval_str("2^3^2", 0.0), 512.0); // right-associative
        assert_eq!(eval_str("-2^2", 0.0), -4.0); // unary minus binds looser than ^
        assert_eq!(eval_str("2^-1", 0.0), 0.5);
        assert_eq!(eval_str("1 - 2 - 3", 0.0), -4.0);
        assert_eq!(eval_str("8/4/2", 0.0), 1.0);
    }

    #[test]
    fn unclosed_parenthesis_reports_opening_column() {
        let err = ParamExpr::parse("exp(-s").unwrap_err();
        match err {
            Error::ExprParse { column, .. } => assert_eq!(column, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_columns() {
        match ParamExpr::parse("1 + bogus(s)").unwrap_err() {
            Error::ExprParse { column, message } => {
                assert_eq!(column, 5);
                assert!(message.contains("bogus"));
            }
            other => panic!("unexpected error {other:?}"),
        }
        // The missing operand after `+` is reported at the end-of-input
        // column (one past the last character).
        match ParamExpr::parse("2 * (s + ").unwrap_err() {
            Error::ExprParse { column, .. } => assert_eq!(column, 10),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(ParamExpr::parse("s s").is_err());
        assert!(ParamExpr::parse("").is_err());
        assert!(ParamExpr::parse("1 + ?").is_err());
    }

    #[test]
    fn eval_errors_name_the_subexpression() {
        let expr = ParamExpr::parse("1/(1 - s^2)").unwrap();
        match expr.eval(1.0).unwrap_err() {
            Error::ExprEval { subexpr, s, message } => {
                assert!(subexpr.contains("1/(1 - s^2)"), "got `{subexpr}`");
                assert_eq!(s, 1.0);
                assert!(message.contains("division by zero"));
            }
            other => panic!("unexpected error {other:?}"),
        }

        let sqrt = ParamExpr::parse("sqrt(s - 2)").unwrap();
        assert!(sqrt.eval(0.5).is_err());

        let overflow = ParamExpr::parse("exp(1000*(1 + s))").unwrap();
        assert!(overflow.eval(0.5).is_err());
    }

    #[test]
    fn endpoint_retry_resolves_removable_singularities() {
        // (1−s)·exp(−0.1·s²/(1−s²)) hits 0/0 at s = 1; sampled just inside,
        // the essential decay of the exponential forces the value to zero.
        let mu = ParamExpr::parse("(1 - s)*exp(-0.1*s^2/(1 - s^2))").unwrap();
        assert!(mu.eval(1.0).is_err());
        assert_eq!(eval_param(&mu, 1.0).unwrap(), 0.0);
        assert_eq!(eval_param(&mu, 0.0).unwrap(), mu.eval(0.0).unwrap());

        let inv = ParamExpr::parse("1/s").unwrap();
        assert_relative_eq!(eval_param(&inv, 0.0).unwrap(), 1e12, epsilon = 1e-3);
        // Interior failures are not retried.
        let interior = ParamExpr::parse("1/(s - 0.5)").unwrap();
        assert!(eval_param(&interior, 0.5).is_err());
    }

    #[test]
    fn pretty_print_round_trips() {
        for src in [
            "exp(-s)",
            "1e-3*(1 - 0.9*s)",
            "2*pi*(1 + s^2)",
            "(1 - s)*exp(-0.1*s^2/(1 - s^2))",
            "1 - (2 - 3)",
            "8/(4/2)",
            "2^-3",
            "-(s + 1)",
            "--s",
            "2^3^2",
            "(2^3)^2",
        ] {
            let parsed = ParamExpr::parse(src).unwrap();
            let printed = parsed.pretty();
            let reparsed = ParamExpr::parse(&printed)
                .unwrap_or_else(|e| panic!("pretty output `{printed}` failed to parse: {e}"));
            // Structural comparison only: the stored source text may differ
            // (e.g. `1e-3` prints as `0.001`) while the tree is identical.
            assert_eq!(
                parsed.root, reparsed.root,
                "round trip changed structure: `{src}` -> `{printed}`"
            );
        }
    }

    #[test]
    fn number_formatting_round_trips_exactly() {
        for v in [1e-3, 0.1, 2.5e-17, 123456.789, 4.0, 1.0000000000000002] {
            let expr = ParamExpr {
                source: String::new(),
                root: Node::Num(v),
            };
            let printed = expr.pretty();
            let reparsed = ParamExpr::parse(&printed).unwrap();
            assert_eq!(reparsed.eval(0.0).unwrap().to_bits(), v.to_bits());
        }
    }
}
