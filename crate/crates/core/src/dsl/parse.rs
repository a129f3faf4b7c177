use super::{BinOp, DslError, DslErrorKind, Expression, Func, Node};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn tokenize(mut self) -> Result<Vec<(Token, usize)>, DslError> {
        let mut out = Vec::new();
        loop {
            let (tok, at) = self.next_token()?;
            let end = tok == Token::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn next_token(&mut self) -> Result<(Token, usize), DslError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((Token::End, start));
        };
        let tok = match c {
            b'0'..=b'9' | b'.' => return self.number(start),
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                    self.pos += 1;
                }
                return Ok((Token::Ident(self.src[start..self.pos].to_string()), start));
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => Token::Op(c as char),
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b',' => Token::Comma,
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(DslError::new(DslErrorKind::Syntax, start, format!("unexpected character `{ch}`")));
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }

    fn number(&mut self, start: usize) -> Result<(Token, usize), DslError> {
        let bytes = self.src.as_bytes();
        let digits = |pos: &mut usize| {
            let s = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            *pos - s
        };
        let mut n = digits(&mut self.pos);
        if bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(&mut self.pos);
        }
        if n == 0 {
            return Err(DslError::new(DslErrorKind::Syntax, start, "malformed number"));
        }
        if matches!(bytes.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(bytes.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(&mut self.pos) == 0 {
                return Err(DslError::new(DslErrorKind::Syntax, mark, "malformed exponent"));
            }
        }
        let text = &self.src[start..self.pos];
        let value: f64 = text.parse().map_err(|_| DslError::new(DslErrorKind::Syntax, start, format!("malformed number `{text}`")))?;
        Ok((Token::Num(value), start))
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> (Token, usize) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> DslError {
        let found = match self.peek() {
            Token::End => "end of input".to_string(),
            Token::Num(v) => format!("number {v}"),
            Token::Ident(s) => format!("`{s}`"),
            Token::Op(c) => format!("`{c}`"),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Comma => "`,`".into(),
        };
        DslError::new(DslErrorKind::Syntax, self.offset(), format!("expected {expected}, found {found}"))
    }

    fn expr(&mut self) -> Result<Node, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Op('+') => BinOp::Add,
                Token::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Op('*') => BinOp::Mul,
                Token::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, DslError> {
        if *self.peek() == Token::Op('-') {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, DslError> {
        let base = self.primary()?;
        if *self.peek() == Token::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, DslError> {
        match self.peek().clone() {
            Token::Num(v) => {
                self.bump();
                Ok(Node::Num(v))
            }
            Token::LParen => {
                self.bump();
                let inner = self.expr()?;
                if *self.peek() != Token::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            Token::Ident(name) => {
                let (_, at) = self.bump();
                if *self.peek() != Token::LParen {
                    return Ok(Node::Ident { name, offset: at });
                }
                let func = Func::lookup(&name)
                    .ok_or_else(|| DslError::new(DslErrorKind::UnknownIdentifier, at, format!("unknown function `{name}`")))?;
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Token::RParen {
                    loop {
                        args.push(self.expr()?);
                        match self.peek() {
                            Token::Comma => {
                                self.bump();
                            }
                            Token::RParen => break,
                            _ => return Err(self.unexpected("`,` or `)`")),
                        }
                    }
                }
                self.bump();
                if args.len() != func.arity() {
                    return Err(DslError::new(
                        DslErrorKind::Arity,
                        at,
                        format!("`{name}` takes {} argument(s), got {}", func.arity(), args.len()),
                    ));
                }
                Ok(Node::Call { func, args, offset: at })
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}

/// Parses `text` into an [`Expression`]. Errors carry the byte offset of the
/// offending token.
pub fn parse_expression(text: &str) -> Result<Expression, DslError> {
    let tokens = Lexer::new(text).tokenize()?;
    let mut parser = Parser { tokens, pos: 0 };
    let root = parser.expr()?;
    if *parser.peek() != Token::End {
        return Err(parser.unexpected("an operator or end of input"));
    }
    Ok(Expression { source: text.to_string(), root })
}
