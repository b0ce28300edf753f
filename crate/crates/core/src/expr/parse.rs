use super::{BinaryOp, Expr, ExprError, Func, Node, Pos};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Op(c) => format!("'{c}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str, line: usize) -> Result<Vec<(Tok, Pos)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    let pos = |k: usize| Pos { line, col: k + 1 };
    while k < chars.len() {
        let c = chars[k];
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        let start = k;
        if c.is_ascii_digit() || c == '.' {
            while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                k += 1;
            }
            if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                let mut j = k + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    k = j;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let text: String = chars[start..k].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ExprError::Lex {
                pos: pos(start),
                ch: c,
            })?;
            out.push((Tok::Num(value), pos(start)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            out.push((Tok::Ident(chars[start..k].iter().collect()), pos(start)));
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            _ => return Err(ExprError::Lex { pos: pos(k), ch: c }),
        };
        out.push((tok, pos(k)));
        k += 1;
    }
    out.push((Tok::End, pos(chars.len())));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    n: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ExprError {
        ExprError::Parse {
            pos: self.pos(),
            expected: expected.to_string(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    // sum := product (('+' | '-') product)*
    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            let (_, pos) = self.bump();
            let rhs = self.product()?;
            let op = if c == '+' {
                BinaryOp::Add
            } else {
                BinaryOp::Sub
            };
            lhs = Expr::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    // product := power (('*' | '/') power)*
    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.power()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            let (_, pos) = self.bump();
            let rhs = self.power()?;
            let op = if c == '*' {
                BinaryOp::Mul
            } else {
                BinaryOp::Div
            };
            lhs = Expr::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    // power := unary ('^' power)?
    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.unary()?;
        if *self.peek() == Tok::Op('^') {
            let (_, pos) = self.bump();
            let exponent = self.power()?;
            return Ok(Expr::new(
                Node::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)),
                pos,
            ));
        }
        Ok(base)
    }

    // unary := '-' unary | atom
    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Op('-') {
            let (_, pos) = self.bump();
            let inner = self.unary()?;
            return Ok(Expr::new(Node::Neg(Box::new(inner)), pos));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::new(Node::Const(v), pos))
            }
            Tok::LParen => {
                self.bump();
                let e = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    return self.call(&name, pos);
                }
                self.identifier(&name, pos)
            }
            _ => Err(self.error("number, identifier, '(' or '-'")),
        }
    }

    fn identifier(&self, name: &str, pos: Pos) -> Result<Expr, ExprError> {
        match name {
            "i" => return Ok(Expr::new(Node::Param, pos)),
            "pi" => return Ok(Expr::new(Node::Pi, pos)),
            _ => {}
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().unwrap_or(usize::MAX);
                if index == 0 || index > self.n {
                    return Err(ExprError::VariableOutOfRange {
                        pos,
                        index,
                        n: self.n,
                    });
                }
                return Ok(Expr::new(Node::Var(index - 1), pos));
            }
        }
        Err(ExprError::UnknownIdentifier {
            pos,
            name: name.to_string(),
        })
    }

    fn call(&mut self, name: &str, pos: Pos) -> Result<Expr, ExprError> {
        let func = Func::from_name(name).ok_or_else(|| ExprError::UnknownIdentifier {
            pos,
            name: name.to_string(),
        })?;
        self.expect(Tok::LParen, "'('")?;
        let mut args = vec![self.sum()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.sum()?);
        }
        self.expect(Tok::RParen, "',' or ')'")?;
        if args.len() != func.arity() {
            return Err(ExprError::Arity {
                pos,
                name: func.name(),
                expected: func.arity(),
                found: args.len(),
            });
        }
        Ok(Expr::new(Node::Call(func, args), pos))
    }
}

/// Parses `source` as an expression in `x1..xn`; positions are reported on line 1.
pub fn parse(source: &str, n: usize) -> Result<Expr, ExprError> {
    parse_at(source, n, 1)
}

/// As [`parse`], reporting positions on the given 1-based `line`.
pub fn parse_at(source: &str, n: usize, line: usize) -> Result<Expr, ExprError> {
    let toks = lex(source, line)?;
    let mut p = Parser { toks, at: 0, n };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return Err(p.error("operator or end of input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_example_one_component() {
        let e = parse("x1*exp(x1) + sin(2*pi*(i-1)/50)", 1).unwrap();
        assert_eq!(e.free_variables(), vec![0]);
        assert!(e.uses_parameter());
    }

    #[test]
    fn trailing_operator_is_parse_error_at_end() {
        match parse("x1 +", 1).unwrap_err() {
            ExprError::Parse { pos, found, .. } => {
                assert_eq!(pos, Pos { line: 1, col: 5 });
                assert_eq!(found, "end of input");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn variable_out_of_range() {
        assert!(matches!(
            parse("x3", 2),
            Err(ExprError::VariableOutOfRange { index: 3, n: 2, .. })
        ));
        assert!(matches!(
            parse("x0", 2),
            Err(ExprError::VariableOutOfRange { index: 0, .. })
        ));
    }

    #[test]
    fn lexical_and_identifier_errors() {
        assert_eq!(
            parse("x1 $ 2", 1).unwrap_err(),
            ExprError::Lex {
                pos: Pos { line: 1, col: 4 },
                ch: '$'
            }
        );
        assert!(matches!(
            parse("y + 1", 1),
            Err(ExprError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse("foo(x1)", 1),
            Err(ExprError::UnknownIdentifier { .. })
        ));
        assert!(matches!(parse("pow(x1)", 1), Err(ExprError::Arity { .. })));
        assert!(matches!(parse("(x1", 1), Err(ExprError::Parse { .. })));
        assert!(matches!(parse("x1 x1", 1), Err(ExprError::Parse { .. })));
    }

    #[test]
    fn precedence() {
        let e = parse("1 + 2 * 3 ^ 2 ^ 0.5", 1).unwrap();
        assert_eq!(e.to_string(), "(1.0 + (2.0 * (3.0 ^ (2.0 ^ 0.5))))");
        // unary minus binds tighter than '^'
        let e = parse("-x1^2", 1).unwrap();
        assert_eq!(e.to_string(), "((-x1) ^ 2.0)");
        let e = parse("2^-1", 1).unwrap();
        assert_eq!(e.to_string(), "(2.0 ^ (-1.0))");
        let e = parse("8 / 4 / 2 - 1 - 1", 1).unwrap();
        assert_eq!(e.to_string(), "((((8.0 / 4.0) / 2.0) - 1.0) - 1.0)");
    }

    #[test]
    fn scientific_literals_and_positions() {
        let e = parse_at("  1.5e-3 * x2", 2, 7).unwrap();
        assert_eq!(e.pos, Pos { line: 7, col: 10 });
        assert_eq!(e.to_string(), "(0.0015 * x2)");
    }
}
