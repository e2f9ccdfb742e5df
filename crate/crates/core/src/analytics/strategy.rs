use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::check_angle;
use crate::error::{Error, Result};

/// `count` independent attempts at `k → n` cloning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CloneShare {
    pub k: u32,
    pub n: u32,
    pub count: u32,
}

impl CloneShare {
    pub fn new(k: u32, n: u32, count: u32) -> Result<Self> {
        if k == 0 || count == 0 || n < k {
            return Err(Error::InvalidStrategy(format!(
                "share {count}x({k}->{n}) needs k >= 1, N >= k, count >= 1"
            )));
        }
        Ok(Self { k, n, count })
    }

    pub fn copies_used(&self) -> u32 {
        self.k * self.count
    }
}

impl fmt::Display for CloneShare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x({}->{})", self.count, self.k, self.n)
    }
}

/// A partition of `copies` input states into cloning shares, evaluated at a
/// fixed angle, with a copy-count goal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Strategy {
    shares: Vec<CloneShare>,
    copies: u32,
    theta: f64,
    goal: u32,
}

/// Sorts by `(k, N)` and merges shares with equal `(k, N)` by summing counts.
fn canonicalize(shares: &[CloneShare]) -> Vec<CloneShare> {
    let mut merged: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for s in shares {
        *merged.entry((s.k, s.n)).or_default() += s.count;
    }
    merged.into_iter().map(|((k, n), count)| CloneShare { k, n, count }).collect()
}

impl Strategy {
    /// The number of input copies is taken to be `Σ kᵢ·countᵢ`.
    pub fn new(shares: &[CloneShare], theta: f64, goal: u32) -> Result<Self> {
        if shares.is_empty() {
            return Err(Error::InvalidStrategy("no shares".into()));
        }
        for s in shares {
            CloneShare::new(s.k, s.n, s.count)?;
        }
        let shares = canonicalize(shares);
        let copies = shares.iter().map(CloneShare::copies_used).sum();
        Ok(Self { shares, copies, theta: check_angle(theta)?, goal })
    }

    /// Like [`Strategy::new`], but rejects shares that do not use exactly
    /// `copies` inputs.
    pub fn with_copies(shares: &[CloneShare], copies: u32, theta: f64, goal: u32) -> Result<Self> {
        let s = Self::new(shares, theta, goal)?;
        if s.copies != copies {
            return Err(Error::InvalidStrategy(format!(
                "shares use {} input copies (sum of k*count) but M = {copies}",
                s.copies
            )));
        }
        Ok(s)
    }

    pub fn parse(dsl: &str, theta: f64, goal: u32) -> Result<Self> {
        Self::new(&parse_shares(dsl)?, theta, goal)
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Ok(Self { theta: check_angle(theta)?, ..self.clone() })
    }

    pub fn shares(&self) -> &[CloneShare] {
        &self.shares
    }

    pub fn copies(&self) -> u32 {
        self.copies
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn goal(&self) -> u32 {
        self.goal
    }

    /// Largest attainable number of output copies, `Σ countᵢ·Nᵢ`.
    pub fn max_output(&self) -> u32 {
        self.shares.iter().map(|s| s.count * s.n).sum()
    }

    /// Largest `N` among the shares, the natural default goal.
    pub fn largest_target(&self) -> u32 {
        self.shares.iter().map(|s| s.n).max().unwrap_or(0)
    }

    pub fn dsl(&self) -> String {
        render_shares(&self.shares)
    }
}

pub fn render_shares(shares: &[CloneShare]) -> String {
    canonicalize(shares).iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self { chars: src.char_indices().collect(), pos: 0, src }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|(_, c)| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or(self.src.len(), |(i, _)| *i)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse { position: self.offset(), message: message.into() }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|(_, c)| *c)
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        for want in token.chars() {
            match self.peek() {
                Some(c) if c.eq_ignore_ascii_case(&want) => self.pos += 1,
                Some(c) => return Err(self.error(format!("expected `{token}`, found `{c}`"))),
                None => return Err(self.error(format!("expected `{token}`, found end of input"))),
            }
        }
        Ok(())
    }

    fn integer(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        let at = self.offset();
        while self.chars.get(self.pos).is_some_and(|(_, c)| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        let digits: String = self.chars[start..self.pos].iter().map(|(_, c)| c).collect();
        digits
            .parse()
            .map_err(|_| Error::Parse { position: at, message: format!("integer `{digits}` too large") })
    }
}

/// Parses the share list grammar `COUNTx(k->N)[,COUNTx(k->N)...]`.
/// Whitespace is ignored anywhere; `x` may be upper case.
pub fn parse_shares(dsl: &str) -> Result<Vec<CloneShare>> {
    let mut cur = Cursor::new(dsl);
    let mut shares = Vec::new();
    loop {
        let at = cur.offset();
        let count = cur.integer()?;
        cur.expect("x")?;
        cur.expect("(")?;
        let k = cur.integer()?;
        cur.expect("->")?;
        let n = cur.integer()?;
        cur.expect(")")?;
        let share = CloneShare::new(k, n, count)
            .map_err(|e| Error::Parse { position: at, message: e.to_string() })?;
        shares.push(share);
        match cur.peek() {
            None => break,
            Some(',') => cur.pos += 1,
            Some(c) => return Err(cur.error(format!("expected `,` or end of input, found `{c}`"))),
        }
    }
    Ok(shares)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert_eq, proptest};
    use proptest::strategy::Strategy as _;

    #[test]
    fn parses_with_whitespace() {
        let s = parse_shares(" 2 x ( 1 -> 3 ) ,1X(2->3)").unwrap();
        assert_eq!(s, vec![CloneShare { k: 1, n: 3, count: 2 }, CloneShare { k: 2, n: 3, count: 1 }]);
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_shares("2x(1->3),1x(2-3)") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 14),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_shares(""), Err(Error::Parse { position: 0, .. })));
        assert!(matches!(parse_shares("2x(3->1)"), Err(Error::Parse { position: 0, .. })));
        assert!(matches!(parse_shares("2x(1->3);"), Err(Error::Parse { position: 8, .. })));
    }

    #[test]
    fn merges_duplicate_shares() {
        let s = Strategy::parse("1x(1->2),1x(2->3),1x(1->2)", 0.3, 2).unwrap();
        assert_eq!(s.dsl(), "2x(1->2),1x(2->3)");
        assert_eq!(s.copies(), 4);
        assert_eq!(s.max_output(), 7);
    }

    #[test]
    fn declared_copies_must_match() {
        let shares = parse_shares("1x(1->2),1x(2->3)").unwrap();
        let err = Strategy::with_copies(&shares, 2, 0.3, 2).unwrap_err();
        assert!(err.to_string().contains("3"), "{err}");
        assert!(Strategy::with_copies(&shares, 3, 0.3, 2).is_ok());
    }

    fn arb_shares() -> impl proptest::strategy::Strategy<Value = Vec<CloneShare>> {
        prop::collection::vec((1u32..6, 0u32..6, 1u32..5), 1..4)
            .prop_map(|v| v.into_iter().map(|(k, extra, count)| CloneShare { k, n: k + extra, count }).collect())
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(shares in arb_shares()) {
            let text = render_shares(&shares);
            let reparsed = parse_shares(&text).unwrap();
            prop_assert_eq!(render_shares(&reparsed), text.clone());
            prop_assert_eq!(canonicalize(&reparsed), canonicalize(&shares));
        }
    }
}
