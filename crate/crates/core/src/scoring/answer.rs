//! Multiple-choice answer letters and the free-text answer parser.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    A,
    B,
    C,
    D,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::A, Letter::B, Letter::C, Letter::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Letter> {
        Letter::ALL.get(i).copied()
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c.to_ascii_uppercase() {
            'A' => Some(Letter::A),
            'B' => Some(Letter::B),
            'C' => Some(Letter::C),
            'D' => Some(Letter::D),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        (b'A' + self as u8) as char
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// First whitespace-separated token that is a lone A-D letter once
/// surrounding punctuation is stripped (`"A)"`, `" b."`, `"(C)"`).
/// Multi-letter words never match. `None` is graded incorrect.
pub fn parse_answer(raw: &str) -> Option<Letter> {
    raw.split_whitespace().find_map(|token| {
        let core = token.trim_matches(|c: char| !c.is_alphanumeric());
        let mut chars = core.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Letter::from_char(c),
            _ => None,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(parse_answer("A) because the melody…"), Some(Letter::A));
        assert_eq!(parse_answer(" b."), Some(Letter::B));
        assert_eq!(parse_answer("The answer is C"), Some(Letter::C));
        assert_eq!(parse_answer("ANSWER: D"), Some(Letter::D));
        assert_eq!(parse_answer("(c)"), Some(Letter::C));
        assert_eq!(parse_answer("**B**"), Some(Letter::B));
    }

    #[test]
    fn no_letter() {
        assert_eq!(parse_answer(""), None);
        assert_eq!(parse_answer("I don't know"), None);
        assert_eq!(parse_answer("Option E"), None);
        assert_eq!(parse_answer("AB CD"), None);
    }

    #[test]
    fn letter_round_trip() {
        for l in Letter::ALL {
            assert_eq!(Letter::from_index(l.index()), Some(l));
            assert_eq!(Letter::from_char(l.as_char()), Some(l));
        }
        assert_eq!(Letter::from_index(4), None);
    }

    proptest! {
        #[test]
        fn case_insensitive(raw in "[ a-zA-Z().:,]{0,30}") {
            prop_assert_eq!(parse_answer(&raw.to_uppercase()), parse_answer(&raw.to_lowercase()));
        }

        #[test]
        fn total_and_deterministic(raw in "\\PC{0,40}") {
            prop_assert_eq!(parse_answer(&raw), parse_answer(&raw));
        }
    }
}
