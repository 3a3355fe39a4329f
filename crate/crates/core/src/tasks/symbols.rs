use std::fmt;

use super::TaskError;

/// One position of a textual episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    /// `a`..`e`, stored as `0..5`.
    Letter(u8),
    /// Delimiter `D`; in repeat copying `D3` carries the repeat count.
    Delim(u32),
    /// `E`.
    Marker,
    /// `-`: no information, encoded as a zero vector.
    DontCare,
}

impl Symbol {
    pub fn letter(c: char) -> Option<Symbol> {
        matches!(c, 'a'..='e').then(|| Symbol::Letter(c as u8 - b'a'))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Symbol::Letter(i) => write!(f, "{}", (b'a' + i) as char),
            Symbol::Delim(1) => write!(f, "D"),
            Symbol::Delim(n) => write!(f, "D{n}"),
            Symbol::Marker => write!(f, "E"),
            Symbol::DontCare => write!(f, "-"),
        }
    }
}

/// Parses `a`..`e`, `D`, `D<n>`, `E` and `-`. Whitespace is ignored.
pub fn parse_symbols(text: &str) -> Result<Vec<Symbol>, TaskError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        i += 1;
        let sym = match c {
            c if c.is_whitespace() => continue,
            'a'..='e' => Symbol::letter(c).unwrap(),
            'E' => Symbol::Marker,
            '-' => Symbol::DontCare,
            'D' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if start == i {
                    Symbol::Delim(1)
                } else {
                    let digits: String = chars[start..i].iter().collect();
                    let n = digits.parse().map_err(|_| TaskError::UnknownSymbol {
                        symbol: digits,
                        position: start,
                    })?;
                    Symbol::Delim(n)
                }
            }
            other => {
                return Err(TaskError::UnknownSymbol {
                    symbol: other.to_string(),
                    position: i - 1,
                })
            }
        };
        out.push(sym);
    }
    Ok(out)
}

pub fn render_symbols(symbols: &[Symbol]) -> String {
    symbols.iter().map(Symbol::to_string).collect()
}
