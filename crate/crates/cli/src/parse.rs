//! Text grammar for pure braid words.
//!
//! ```text
//! word   := item*
//! item   := atom ('^' int)?
//! atom   := 'A' '(' int ',' int ')' | '[' word ',' word ']'
//! ```
//!
//! Tokens may be separated by whitespace. `[u,v]` is the group commutator
//! `u v u^-1 v^-1`, `^k` repeats `|k|` times (inverting when negative), and
//! the empty string is the identity.

use milnor_core::freegroup::{BraidLetter, BraidWord};
use milnor_core::{Error, Result};

/// Largest accepted `|k|` in `^k`.
pub const MAX_EXPONENT: i64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    Gen(usize, usize),
    Pow(Box<Node>, i64),
    Comm(Vec<Node>, Vec<Node>),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_raw() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek_raw(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek_raw()
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse(format!("braid word at offset {}: {}", self.pos, msg.into()))
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(c) => Err(self.err(format!("expected `{want}`, found `{c}`"))),
            None => Err(self.err(format!("expected `{want}`, found end of input"))),
        }
    }

    fn int(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek_raw(), Some('-' | '+')) {
            self.pos += 1;
        }
        while matches!(self.peek_raw(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let text = &self.src[start..self.pos];
        text.parse().map_err(|_| {
            self.pos = start;
            self.err("expected an integer")
        })
    }

    fn index(&mut self) -> Result<usize> {
        let v = self.int()?;
        usize::try_from(v)
            .ok()
            .filter(|&v| v >= 1)
            .ok_or_else(|| self.err(format!("strand index must be >= 1, got {v}")))
    }

    fn word(&mut self, stop: &[char]) -> Result<Vec<Node>> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                None => return Ok(out),
                Some(c) if stop.contains(&c) => return Ok(out),
                Some(_) => out.push(self.item()?),
            }
        }
    }

    fn item(&mut self) -> Result<Node> {
        let atom = match self.peek() {
            Some('A') => {
                self.pos += 1;
                self.expect('(')?;
                let i = self.index()?;
                self.expect(',')?;
                let j = self.index()?;
                self.expect(')')?;
                if i >= j {
                    return Err(self.err(format!("A({i},{j}) needs i < j")));
                }
                Node::Gen(i, j)
            }
            Some('[') => {
                self.pos += 1;
                let u = self.word(&[','])?;
                self.expect(',')?;
                let v = self.word(&[']'])?;
                self.expect(']')?;
                Node::Comm(u, v)
            }
            Some(c) => return Err(self.err(format!("unexpected `{c}`"))),
            None => return Err(self.err("unexpected end of input")),
        };
        if self.peek() == Some('^') {
            self.pos += 1;
            let k = self.int()?;
            if k.abs() > MAX_EXPONENT {
                return Err(self.err(format!("exponent {k} exceeds {MAX_EXPONENT} in absolute value")));
            }
            return Ok(Node::Pow(Box::new(atom), k));
        }
        Ok(atom)
    }
}

fn max_strand(nodes: &[Node]) -> usize {
    nodes
        .iter()
        .map(|node| match node {
            Node::Gen(_, j) => *j,
            Node::Pow(a, _) => max_strand(std::slice::from_ref(a)),
            Node::Comm(u, v) => max_strand(u).max(max_strand(v)),
        })
        .max()
        .unwrap_or(0)
}

fn build(n: usize, nodes: &[Node]) -> Result<BraidWord> {
    let mut acc = BraidWord::identity(n);
    for node in nodes {
        let w = match node {
            Node::Gen(i, j) => BraidWord::new(n, [BraidLetter { i: *i, j: *j, exponent: 1 }])?,
            Node::Pow(a, k) => build(n, std::slice::from_ref(a))?.pow(*k),
            Node::Comm(u, v) => BraidWord::commutator(&build(n, u)?, &build(n, v)?),
        };
        acc = acc.mul(&w);
    }
    Ok(acc)
}

/// Largest strand index mentioned in `src`, or 0 for the identity.
pub fn strands(src: &str) -> Result<usize> {
    Ok(max_strand(&parse_nodes(src)?))
}

fn parse_nodes(src: &str) -> Result<Vec<Node>> {
    let mut p = Parser { src, pos: 0 };
    let nodes = p.word(&[])?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(nodes)
}

/// Parses a braid word on `n` strands.
pub fn parse_braid(src: &str, n: usize) -> Result<BraidWord> {
    let nodes = parse_nodes(src)?;
    let top = max_strand(&nodes);
    if top > n {
        return Err(Error::Index { index: top, n });
    }
    build(n, &nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: usize, i: usize, j: usize) -> BraidWord {
        BraidWord::generator(n, i, j).unwrap()
    }

    #[test]
    fn generators_and_powers() {
        assert_eq!(parse_braid("A(1,2)", 2).unwrap(), a(2, 1, 2));
        assert_eq!(parse_braid(" A( 1 , 3 )^-1 ", 3).unwrap(), a(3, 1, 3).inverse());
        assert_eq!(parse_braid("A(1,2)^3", 2).unwrap(), a(2, 1, 2).pow(3));
        assert_eq!(parse_braid("A(1,2)^0", 2).unwrap(), BraidWord::identity(2));
        assert_eq!(parse_braid("A(1,2) A(2,3)", 3).unwrap(), a(3, 1, 2).mul(&a(3, 2, 3)));
        assert_eq!(parse_braid("A(1,2)A(1,2)^-1", 2).unwrap(), BraidWord::identity(2));
    }

    #[test]
    fn commutators() {
        let c = BraidWord::commutator(&a(3, 1, 2), &a(3, 1, 3));
        assert_eq!(parse_braid("[A(1,2),A(1,3)]", 3).unwrap(), c);
        let nested = BraidWord::commutator(&a(3, 1, 2), &c);
        assert_eq!(parse_braid("[A(1,2), [A(1,2), A(1,3)]]", 3).unwrap(), nested);
        assert_eq!(parse_braid("[A(1,2),A(1,3)]^-1", 3).unwrap(), c.inverse());
        assert_eq!(parse_braid("[,A(1,3)]", 3).unwrap(), BraidWord::identity(3));
    }

    #[test]
    fn identity_and_strands() {
        assert!(parse_braid("", 2).unwrap().is_identity_word());
        assert!(parse_braid("   ", 4).unwrap().is_identity_word());
        assert_eq!(strands("").unwrap(), 0);
        assert_eq!(strands("[A(1,2),A(2,4)^2]").unwrap(), 4);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["A(2,1)", "A(0,2)", "A(1,2", "B(1,2)", "A(1,2)^", "[A(1,2)]", "A(1,2)]", "A(1,2)^1001", "A(1,x)"] {
            assert!(matches!(parse_braid(bad, 3), Err(Error::Parse(_))), "{bad}");
        }
        assert_eq!(parse_braid("A(1,4)", 3).unwrap_err(), Error::Index { index: 4, n: 3 });
    }
}
