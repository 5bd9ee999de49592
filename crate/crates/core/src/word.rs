//! Free-group words over `a1 A1 ... ak Ak` and the geometry of the Cayley tree.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::mc;

/// A letter of the symmetric generating set: `+i` is `ai`, `-i` is `Ai`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Generator(i16);

impl Generator {
    /// Panics if `index` is 0.
    pub fn new(index: u16, positive: bool) -> Self {
        assert!(index >= 1 && index <= i16::MAX as u16, "generator index {index} out of range");
        let i = index as i16;
        Generator(if positive { i } else { -i })
    }

    pub fn index(self) -> u16 {
        self.0.unsigned_abs()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// +1 or -1.
    pub fn sign(self) -> i32 {
        self.0.signum() as i32
    }

    #[inline]
    pub fn inverse(self) -> Self {
        Generator(-self.0)
    }

    /// Uniform letter of the `2k`-element symmetric set.
    pub fn random(k: u16, rng: &mut mc::Rng) -> Self {
        let r = rng.random_range(0..2 * k);
        Generator::new(r / 2 + 1, r % 2 == 0)
    }
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = if self.is_positive() { 'a' } else { 'A' };
        write!(f, "{c}{}", self.index())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WordParseError {
    #[error("bad letter {0:?}: expected a<index> or A<index>")]
    BadLetter(String),
    #[error("letter {letter} uses generator index above k = {k}")]
    IndexAboveRank { letter: String, k: u16 },
}

impl FromStr for Generator {
    type Err = WordParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || WordParseError::BadLetter(s.to_string());
        let mut chars = s.chars();
        let positive = match chars.next() {
            Some('a') => true,
            Some('A') => false,
            _ => return Err(bad()),
        };
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let index: u16 = digits.parse().map_err(|_| bad())?;
        if index == 0 || index > i16::MAX as u16 {
            return Err(bad());
        }
        Ok(Generator::new(index, positive))
    }
}

/// Parses a whitespace-separated letter string without reducing it.
pub fn parse_letters(text: &str) -> Result<Vec<Generator>, WordParseError> {
    let t = text.trim();
    if t == "ε" || t == "1" {
        return Ok(Vec::new());
    }
    t.split_whitespace().map(str::parse).collect()
}

pub fn format_letters(letters: &[Generator]) -> String {
    letters.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

/// A freely reduced word, i.e. an element of `F_k`.
#[derive(Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Word(Vec<Generator>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Free reduction with a stack.
    pub fn reduce(raw: &[Generator]) -> Self {
        let mut w = Word(Vec::with_capacity(raw.len()));
        for &g in raw {
            w.push(g);
        }
        w
    }

    pub fn letter(g: Generator) -> Self {
        Word(vec![g])
    }

    pub fn letters(&self) -> &[Generator] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Right-multiplies by one letter, cancelling if possible.
    #[inline]
    pub fn push(&mut self, g: Generator) {
        if self.0.last() == Some(&g.inverse()) {
            self.0.pop();
        } else {
            self.0.push(g);
        }
    }

    /// Right-multiplies by a raw letter string.
    pub fn extend(&mut self, raw: &[Generator]) {
        for &g in raw {
            self.push(g);
        }
    }

    pub fn mul(&self, other: &Word) -> Word {
        let mut out = self.clone();
        out.extend(&other.0);
        out
    }

    pub fn inv(&self) -> Word {
        Word(self.0.iter().rev().map(|g| g.inverse()).collect())
    }

    /// Sum of signs of the letters with generator `index`.
    pub fn exponent_sum(&self, index: u16) -> i64 {
        self.0.iter().filter(|g| g.index() == index).map(|g| g.sign() as i64).sum()
    }

    /// Highest generator index used, 0 for the identity.
    pub fn rank_used(&self) -> u16 {
        self.0.iter().map(|g| g.index()).max().unwrap_or(0)
    }

    /// Parses and reduces; rejects indices above `k`.
    pub fn parse_with_rank(text: &str, k: u16) -> Result<Word, WordParseError> {
        let raw = parse_letters(text)?;
        if let Some(g) = raw.iter().find(|g| g.index() > k) {
            return Err(WordParseError::IndexAboveRank { letter: g.to_string(), k });
        }
        Ok(Word::reduce(&raw))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("ε")
        } else {
            f.write_str(&format_letters(&self.0))
        }
    }
}

impl FromStr for Word {
    type Err = WordParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_letters(s).map(|raw| Word::reduce(&raw))
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_letters(&self.0))
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn reduce(raw: &[Generator]) -> Word {
    Word::reduce(raw)
}

/// Distance in the Cayley tree: `|x^{-1} y|`.
pub fn tree_dist(x: &Word, y: &Word) -> usize {
    let p = common_prefix_len(x, y);
    (x.len() - p) + (y.len() - p)
}

pub fn common_prefix_len(x: &Word, y: &Word) -> usize {
    x.0.iter().zip(&y.0).take_while(|(a, b)| a == b).count()
}

/// An exact half-integer, stored doubled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfInt(i64);

impl HalfInt {
    pub fn from_doubled(doubled: i64) -> Self {
        HalfInt(doubled)
    }

    pub fn from_int(v: i64) -> Self {
        HalfInt(2 * v)
    }

    pub fn doubled(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", self.0 / 2)
        }
    }
}

/// `(x|y)_z = (d(z,x) + d(z,y) - d(x,y)) / 2` in the Cayley tree.
pub fn gromov_product_tree(x: &Word, y: &Word, z: &Word) -> HalfInt {
    let doubled = tree_dist(z, x) + tree_dist(z, y) - tree_dist(x, y);
    HalfInt(doubled as i64)
}

/// Simple random walk on `F_k` from the identity; returns `w_0..w_n`.
pub fn sample_srw(n: usize, k: u16, seed: u64) -> Vec<Word> {
    let mut rng = mc::single(seed);
    srw_trajectory(n, k, &mut rng)
}

pub fn srw_trajectory(n: usize, k: u16, rng: &mut mc::Rng) -> Vec<Word> {
    let mut w = Word::identity();
    let mut out = Vec::with_capacity(n + 1);
    out.push(w.clone());
    for _ in 0..n {
        w.push(Generator::random(k, rng));
        out.push(w.clone());
    }
    out
}

/// Endpoint `w_n` of the simple random walk, without keeping the trajectory.
pub fn srw_endpoint(n: usize, k: u16, rng: &mut mc::Rng) -> Word {
    let mut w = Word::identity();
    for _ in 0..n {
        w.push(Generator::random(k, rng));
    }
    w
}

/// Distance law of `|w_n|` from the birth-death chain on `{0, 1, ...}`:
/// from 0 step to 1, otherwise up with probability `(2k-1)/2k`.
pub fn srw_length_distribution(n: usize, k: u16) -> Vec<f64> {
    let up = (2.0 * k as f64 - 1.0) / (2.0 * k as f64);
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    for step in 0..n {
        let mut q = vec![0.0; n + 1];
        for l in 0..=step.min(n) {
            let pl = p[l];
            if pl == 0.0 {
                continue;
            }
            if l == 0 {
                q[1] += pl;
            } else {
                q[l + 1] += pl * up;
                q[l - 1] += pl * (1.0 - up);
            }
        }
        p = q;
    }
    p
}
