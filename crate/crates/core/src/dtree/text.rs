//! Tree text format: `(q <var> <subtree0> <subtree1>)` and `(leaf <label>)`,
//! whitespace-insensitive, variables 1-based. An optional `arity=<k>` header
//! line may precede the tree.

use std::fmt;

use super::{DecisionTree, NodeKind, NodeId, TreeSpec};
use crate::error::{parse_err, QcError, Result};

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(text: &str) -> Vec<(usize, Token<'_>)> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let mut rest = line;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            rest = &rest[start..];
            let (tok, len) = match rest.as_bytes()[0] {
                b'(' => (Token::Open, 1),
                b')' => (Token::Close, 1),
                _ => {
                    let len = rest
                        .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
                        .unwrap_or(rest.len());
                    (Token::Atom(&rest[..len]), len)
                }
            };
            out.push((ln + 1, tok));
            rest = &rest[len..];
        }
    }
    out
}

struct Parser<'a> {
    tokens: Vec<(usize, Token<'a>)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn line(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map_or(1, |(l, _)| *l)
    }

    fn next(&mut self) -> Result<&Token<'a>> {
        let line = self.line();
        let tok = self
            .tokens
            .get(self.pos)
            .map(|(_, t)| t)
            .ok_or_else(|| parse_err(line, "unexpected end of tree"))?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect(&mut self, want: Token<'_>) -> Result<()> {
        let line = self.line();
        let got = self.next()?;
        if *got != want {
            return Err(parse_err(line, format!("expected {want:?}, found {got:?}")));
        }
        Ok(())
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let line = self.line();
        match self.next()? {
            Token::Atom(a) => a
                .parse()
                .map_err(|_| parse_err(line, format!("bad {what} {a:?}"))),
            other => Err(parse_err(line, format!("expected {what}, found {other:?}"))),
        }
    }

    fn tree(&mut self) -> Result<TreeSpec> {
        self.expect(Token::Open)?;
        let line = self.line();
        let spec = match self.next()? {
            Token::Atom("q") => {
                let var = self.number("variable")?;
                if var == 0 {
                    return Err(parse_err(line, "variables are 1-based"));
                }
                let zero = self.tree()?;
                let one = self.tree()?;
                TreeSpec::query(var - 1, zero, one)
            }
            Token::Atom("leaf") => TreeSpec::leaf(self.number("label")?),
            other => {
                return Err(parse_err(line, format!("expected `q` or `leaf`, found {other:?}")))
            }
        };
        self.expect(Token::Close)?;
        Ok(spec)
    }
}

/// Parses a tree. `arity` is required unless the text carries an `arity=` header;
/// when both are present they must agree.
pub fn parse_tree(text: &str, arity: Option<usize>) -> Result<DecisionTree> {
    let mut header = None;
    let mut body_start = 0;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if let Some(v) = t.strip_prefix("arity=") {
            header = Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| parse_err(i + 1, "bad arity header"))?,
            );
            body_start = i + 1;
        }
        break;
    }
    let arity = match (header, arity) {
        (Some(h), Some(a)) if h != a => {
            return Err(parse_err(1, format!("tree arity {h} does not match expected {a}")))
        }
        (Some(h), _) => h,
        (None, Some(a)) => a,
        (None, None) => return Err(parse_err(1, "tree arity unknown: add an `arity=<k>` header")),
    };
    let body: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| if i < body_start { "" } else { l })
        .collect::<Vec<_>>()
        .join("\n");
    let mut parser = Parser {
        tokens: tokenize(&body),
        pos: 0,
    };
    let spec = parser.tree()?;
    if parser.pos != parser.tokens.len() {
        return Err(parse_err(parser.line(), "trailing tokens after tree"));
    }
    DecisionTree::new(arity, &spec).map_err(|e| match e {
        QcError::InvalidTree(v) => parse_err(1, v.to_string()),
        other => other,
    })
}

impl DecisionTree {
    /// The tree text with an `arity=` header, suitable for writing to a file.
    pub fn to_file_string(&self) -> String {
        format!("arity={}\n{}\n", self.arity(), self)
    }
}

impl fmt::Display for DecisionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write(t: &DecisionTree, id: NodeId, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match &t.nodes[id.0].kind {
                NodeKind::Leaf { label, .. } => write!(f, "(leaf {label})"),
                NodeKind::Query { var, children } => {
                    write!(f, "(q {} ", var + 1)?;
                    write(t, children[0], f)?;
                    f.write_str(" ")?;
                    write(t, children[1], f)?;
                    f.write_str(")")
                }
            }
        }
        write(self, self.root(), f)
    }
}
