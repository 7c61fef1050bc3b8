//! Elementwise map mini-language.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := NUMBER | 'i' | INPUT '[' 'i' ']' | FUNC '(' args ')' | '(' expr ')'
//! INPUT   := 'a' | 'b' | 'c' | 'd'          (bounded by the declared arity)
//! FUNC    := exp | log | tanh | sqrt | fabs  (one argument)
//!          | fmax | fmin                     (two arguments)
//! ```
//!
//! Programs are validated and lowered to postfix code when generated, so a
//! kernel that compiles can never fail at execution time. Evaluation is in
//! `f32`; the bare `i` evaluates to the row-major element index.

use super::BackendError;

pub const MAX_ARITY: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Const(f32),
    Input(u8),
    Index,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Exp,
    Log,
    Tanh,
    Sqrt,
    Fabs,
    Fmax,
    Fmin,
}

/// A validated, lowered map expression.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    code: Vec<Op>,
    max_stack: usize,
    inputs_used: usize,
}

impl Program {
    pub fn max_stack(&self) -> usize {
        self.max_stack
    }

    /// Highest input index referenced plus one.
    pub fn inputs_used(&self) -> usize {
        self.inputs_used
    }

    #[inline]
    pub fn eval(&self, inputs: &[f32], index: f32, stack: &mut Vec<f32>) -> f32 {
        stack.clear();
        for op in &self.code {
            match *op {
                Op::Const(c) => stack.push(c),
                Op::Input(k) => stack.push(inputs[k as usize]),
                Op::Index => stack.push(index),
                Op::Neg => {
                    let x = stack.pop().unwrap();
                    stack.push(-x);
                }
                Op::Exp | Op::Log | Op::Tanh | Op::Sqrt | Op::Fabs => {
                    let x = stack.pop().unwrap();
                    stack.push(match op {
                        Op::Exp => x.exp(),
                        Op::Log => x.ln(),
                        Op::Tanh => x.tanh(),
                        Op::Sqrt => x.sqrt(),
                        _ => x.abs(),
                    });
                }
                _ => {
                    let y = stack.pop().unwrap();
                    let x = stack.pop().unwrap();
                    stack.push(match op {
                        Op::Add => x + y,
                        Op::Sub => x - y,
                        Op::Mul => x * y,
                        Op::Div => x / y,
                        Op::Fmax => x.max(y),
                        _ => x.min(y),
                    });
                }
            }
        }
        stack.pop().unwrap()
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f32),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: usize,
    text: String,
}

fn lex(src: &str) -> Result<Vec<Token>, BackendError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut p = 0;
    while p < bytes.len() {
        let c = bytes[p] as char;
        if c.is_ascii_whitespace() {
            p += 1;
            continue;
        }
        let start = p;
        if c.is_ascii_digit() || (c == '.' && bytes.get(p + 1).is_some_and(u8::is_ascii_digit)) {
            while p < bytes.len() && (bytes[p].is_ascii_digit() || bytes[p] == b'.') {
                p += 1;
            }
            if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
                let mut q = p + 1;
                if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                    q += 1;
                }
                if q < bytes.len() && bytes[q].is_ascii_digit() {
                    p = q;
                    while p < bytes.len() && bytes[p].is_ascii_digit() {
                        p += 1;
                    }
                }
            }
            let text = &src[start..p];
            let value: f32 = text.parse().map_err(|_| compile_error(start, text, "malformed number"))?;
            // OpenCL-style single-precision suffix.
            if p < bytes.len() && bytes[p] == b'f' {
                p += 1;
            }
            out.push(Token { tok: Tok::Num(value), pos: start, text: src[start..p].to_string() });
        } else if c.is_ascii_alphabetic() || c == '_' {
            while p < bytes.len() && (bytes[p].is_ascii_alphanumeric() || bytes[p] == b'_') {
                p += 1;
            }
            let text = src[start..p].to_string();
            out.push(Token { tok: Tok::Ident(text.clone()), pos: start, text });
        } else if "+-*/()[],".contains(c) {
            p += 1;
            out.push(Token { tok: Tok::Sym(c), pos: start, text: c.to_string() });
        } else {
            let ch = src[start..].chars().next().unwrap();
            return Err(compile_error(start, &ch.to_string(), "unexpected character"));
        }
    }
    out.push(Token { tok: Tok::End, pos: src.len(), text: "<end>".into() });
    Ok(out)
}

fn compile_error(position: usize, token: &str, message: &str) -> BackendError {
    BackendError::Compile {
        position,
        token: token.to_string(),
        message: message.to_string(),
    }
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    arity: usize,
    code: Vec<Op>,
    depth: usize,
    max_depth: usize,
    inputs_used: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, what: &str) -> BackendError {
        let t = self.peek();
        compile_error(t.pos, &t.text, &format!("expected {what}"))
    }

    fn expect(&mut self, c: char) -> Result<(), BackendError> {
        if self.peek().tok == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn emit(&mut self, op: Op) {
        match op {
            Op::Const(_) | Op::Input(_) | Op::Index => {
                self.depth += 1;
                self.max_depth = self.max_depth.max(self.depth);
            }
            Op::Neg | Op::Exp | Op::Log | Op::Tanh | Op::Sqrt | Op::Fabs => {}
            _ => self.depth -= 1,
        }
        self.code.push(op);
    }

    fn expr(&mut self) -> Result<(), BackendError> {
        self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('+') => Op::Add,
                Tok::Sym('-') => Op::Sub,
                _ => return Ok(()),
            };
            self.bump();
            self.term()?;
            self.emit(op);
        }
    }

    fn term(&mut self) -> Result<(), BackendError> {
        self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('*') => Op::Mul,
                Tok::Sym('/') => Op::Div,
                _ => return Ok(()),
            };
            self.bump();
            self.unary()?;
            self.emit(op);
        }
    }

    fn unary(&mut self) -> Result<(), BackendError> {
        if self.peek().tok == Tok::Sym('-') {
            self.bump();
            self.unary()?;
            self.emit(Op::Neg);
            return Ok(());
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<(), BackendError> {
        let tok = self.bump();
        match &tok.tok {
            Tok::Num(v) => {
                self.emit(Op::Const(*v));
                Ok(())
            }
            Tok::Sym('(') => {
                self.expr()?;
                self.expect(')')
            }
            Tok::Ident(name) => self.identifier(name, &tok),
            _ => Err(compile_error(tok.pos, &tok.text, "expected an operand")),
        }
    }

    fn identifier(&mut self, name: &str, tok: &Token) -> Result<(), BackendError> {
        match name {
            "i" => {
                self.emit(Op::Index);
                Ok(())
            }
            "a" | "b" | "c" | "d" => {
                let k = (name.as_bytes()[0] - b'a') as usize;
                if k >= self.arity {
                    return Err(compile_error(
                        tok.pos,
                        name,
                        &format!("input `{name}` exceeds declared arity {}", self.arity),
                    ));
                }
                self.expect('[')?;
                let idx = self.bump();
                if idx.tok != Tok::Ident("i".into()) {
                    return Err(compile_error(idx.pos, &idx.text, "inputs may only be indexed by `i`"));
                }
                self.expect(']')?;
                self.inputs_used = self.inputs_used.max(k + 1);
                self.emit(Op::Input(k as u8));
                Ok(())
            }
            "exp" | "log" | "tanh" | "sqrt" | "fabs" | "fmax" | "fmin" => {
                self.expect('(')?;
                self.expr()?;
                let op = match name {
                    "exp" => Op::Exp,
                    "log" => Op::Log,
                    "tanh" => Op::Tanh,
                    "sqrt" => Op::Sqrt,
                    "fabs" => Op::Fabs,
                    "fmax" => Op::Fmax,
                    _ => Op::Fmin,
                };
                if matches!(op, Op::Fmax | Op::Fmin) {
                    self.expect(',')?;
                    self.expr()?;
                }
                self.expect(')')?;
                self.emit(op);
                Ok(())
            }
            _ => Err(compile_error(tok.pos, name, "unknown identifier")),
        }
    }
}

/// Parses and lowers `source` for the given input arity (1 to 4).
pub fn compile(source: &str, arity: usize) -> Result<Program, BackendError> {
    if !(1..=MAX_ARITY).contains(&arity) {
        return Err(BackendError::Argument(format!(
            "map arity must be between 1 and {MAX_ARITY}, got {arity}"
        )));
    }
    let tokens = lex(source)?;
    let mut parser = Parser {
        tokens,
        at: 0,
        arity,
        code: Vec::new(),
        depth: 0,
        max_depth: 0,
        inputs_used: 0,
    };
    parser.expr()?;
    if parser.peek().tok != Tok::End {
        return Err(parser.unexpected("an operator or end of expression"));
    }
    Ok(Program {
        code: parser.code,
        max_stack: parser.max_depth,
        inputs_used: parser.inputs_used,
    })
}
