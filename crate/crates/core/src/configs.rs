//! Decks and particle configurations, canonical states, the two partial
//! orders, and the maps between the card and particle pictures.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// A deck: `entries[i]` is the label (1..=N) of the card in position `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Permutation(Vec<u32>);

impl Permutation {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        let n = entries.len();
        if n == 0 {
            return Err(param("a deck needs at least one card"));
        }
        let mut seen = vec![false; n];
        for &c in &entries {
            let c = c as usize;
            if c == 0 || c > n || seen[c - 1] {
                return Err(param(format!("{entries:?} is not a permutation of 1..={n}")));
            }
            seen[c - 1] = true;
        }
        Ok(Self(entries))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new((1..=n as u32).collect())
    }

    pub fn reversed(n: usize) -> Result<Self> {
        Self::new((1..=n as u32).rev().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [u32] {
        &mut self.0
    }

    /// Number of pairs `i < j` with `entries[i] > entries[j]`.
    pub fn inversions(&self) -> usize {
        let e = &self.0;
        let mut count = 0;
        for i in 0..e.len() {
            for j in i + 1..e.len() {
                count += (e[i] > e[j]) as usize;
            }
        }
        count
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

/// An element of X_{N,k}: a 0/1 word of length N with k ones, `1 <= k < N`.
/// Position `i` (1-based) is stored at index `i - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FiniteConfig {
    bits: Vec<u8>,
    k: usize,
}

impl FiniteConfig {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(param("finite configurations are 0/1 words"));
        }
        let k = bits.iter().filter(|&&b| b == 1).count();
        if k == 0 || k >= bits.len() {
            return Err(param(format!("need 1 <= k < N, got k = {k}, N = {}", bits.len())));
        }
        Ok(Self { bits, k })
    }

    /// g_{N,k}: ones on positions 1..=k. Maximal in the order.
    pub fn ground(n: usize, k: usize) -> Result<Self> {
        check_nk(n, k)?;
        Self::new((0..n).map(|i| (i < k) as u8).collect())
    }

    /// m_{N,k}: zeros on positions 1..=N-k. Minimal in the order.
    pub fn bottom(n: usize, k: usize) -> Result<Self> {
        check_nk(n, k)?;
        Self::new((0..n).map(|i| (i >= n - k) as u8).collect())
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [u8] {
        &mut self.bits
    }

    /// Value at 1-based position `i`.
    pub fn at(&self, i: usize) -> u8 {
        self.bits[i - 1]
    }

    /// Every element of X_{N,k} in lexicographic order of the bit words.
    pub fn enumerate(n: usize, k: usize) -> Result<Vec<Self>> {
        check_nk(n, k)?;
        if n > 30 {
            return Err(param("enumeration limited to N <= 30"));
        }
        let mut out = Vec::new();
        for mask in 0u32..(1u32 << n) {
            if mask.count_ones() as usize == k {
                let bits = (0..n).map(|i| ((mask >> (n - 1 - i)) & 1) as u8).collect();
                out.push(Self { bits, k });
            }
        }
        Ok(out)
    }
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(param(format!("need 1 <= k < N, got N = {n}, k = {k}")));
    }
    Ok(())
}

impl fmt::Display for FiniteConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for FiniteConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Parse(format!("unexpected {other:?} in 0/1 word"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(bits)
    }
}

/// Value of the ground state G_Z at site `i`.
#[inline]
pub fn ground_value(i: i64) -> u8 {
    (i < 0) as u8
}

/// A configuration in A, stored as the sorted set of sites where it differs
/// from the ground state (a hole at a negative site, a particle at a
/// nonnegative one).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ZConfig {
    disc: Vec<i64>,
}

impl ZConfig {
    /// The ground state G_Z.
    pub fn ground() -> Self {
        Self::default()
    }

    /// Builds a configuration from its discrepancy sites; fails unless the
    /// holes left of the origin balance the particles right of it.
    pub fn from_discrepancies(mut sites: Vec<i64>) -> Result<Self> {
        sites.sort_unstable();
        sites.dedup();
        let holes = sites.iter().filter(|&&s| s < 0).count();
        let parts = sites.len() - holes;
        if holes != parts {
            return Err(param(format!(
                "not in A: {holes} holes left of 0 but {parts} particles right of it"
            )));
        }
        Ok(Self { disc: sites })
    }

    pub(crate) fn from_sorted_unchecked(disc: Vec<i64>) -> Self {
        Self { disc }
    }

    /// I_N: holes on [-N, -1], particles on [0, N - 1].
    pub fn shifted_block(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(param("I_N needs N >= 1"));
        }
        let n = n as i64;
        Ok(Self {
            disc: (-n..n).collect(),
        })
    }

    pub fn discrepancies(&self) -> &[i64] {
        &self.disc
    }

    pub fn is_ground(&self) -> bool {
        self.disc.is_empty()
    }

    pub fn value(&self, i: i64) -> u8 {
        let g = ground_value(i);
        if self.disc.binary_search(&i).is_ok() {
            1 - g
        } else {
            g
        }
    }

    /// Number of holes left of the origin (= particles right of it).
    pub fn excess(&self) -> usize {
        self.disc.len() / 2
    }

    /// L(a) = min{i : a_i = 0}.
    pub fn leftmost_hole(&self) -> i64 {
        match self.disc.first() {
            Some(&s) if s < 0 => s,
            _ => {
                // first nonnegative site not carrying a particle
                let mut i = 0;
                for &s in self.disc.iter().filter(|&&s| s >= 0) {
                    if s != i {
                        break;
                    }
                    i += 1;
                }
                i
            }
        }
    }

    /// R(a) = max{i : a_i = 1}.
    pub fn rightmost_particle(&self) -> i64 {
        match self.disc.last() {
            Some(&s) if s >= 0 => s,
            _ => {
                let mut i = -1;
                for &s in self.disc.iter().rev().filter(|&&s| s < 0) {
                    if s != i {
                        break;
                    }
                    i -= 1;
                }
                i
            }
        }
    }

    /// Smallest interval containing every discrepancy.
    pub fn hull(&self) -> Option<(i64, i64)> {
        Some((*self.disc.first()?, *self.disc.last()?))
    }
}

impl fmt::Display for ZConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("sites:{")?;
        for (n, &s) in self.disc.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "({},{})", s, 1 - ground_value(s))?;
        }
        f.write_str("}")
    }
}

impl FromStr for ZConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let body = s
            .trim()
            .strip_prefix("sites:{")
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| Error::Parse(format!("expected sites:{{...}}, got {s:?}")))?;
        let mut sites = Vec::new();
        let mut rest = body.trim();
        while !rest.is_empty() {
            let open = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::Parse(format!("expected '(' at {rest:?}")))?;
            let close = open.find(')').ok_or_else(|| Error::Parse("unterminated pair".into()))?;
            let (site, value) = open[..close]
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad pair {:?}", &open[..close])))?;
            let site: i64 = site
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("site {site:?}: {e}")))?;
            let value: u8 = value
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("value {value:?}: {e}")))?;
            if value != 1 - ground_value(site) {
                return Err(Error::Parse(format!("({site},{value}) agrees with the ground state")));
            }
            sites.push(site);
            rest = open[close + 1..].trim_start();
            rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
        }
        Self::from_discrepancies(sites)
    }
}

/// Walks two hole-count increment sequences over the same ordered sites and
/// checks that the first never has more holes in any prefix. Both the finite
/// order (prefix particle counts) and the order on A (prefix hole counts)
/// reduce to this test.
fn prefix_dominates(steps: impl Iterator<Item = (i64, i64)>) -> bool {
    let (mut a, mut b) = (0i64, 0i64);
    for (da, db) in steps {
        a += da;
        b += db;
        if a > b {
            return false;
        }
    }
    true
}

/// The partial order `a ⪰ b`: `a` has its particles further left.
pub trait Dominates<Rhs: ?Sized = Self> {
    fn dominates(&self, other: &Rhs) -> bool;
}

impl Dominates for FiniteConfig {
    /// For all r, `sum_{i<=r} a_i >= sum_{i<=r} b_i`. Configurations of
    /// different length or particle count are incomparable.
    fn dominates(&self, other: &Self) -> bool {
        if self.n() != other.n() || self.k != other.k {
            return false;
        }
        prefix_dominates(
            self.bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| (1 - a as i64, 1 - b as i64)),
        )
    }
}

impl Dominates for ZConfig {
    /// For all r, `sum_{i<=r} (1 - a_i) <= sum_{i<=r} (1 - b_i)`, measured
    /// relative to G_Z: a discrepancy left of 0 adds a hole, one right of 0
    /// removes one. Only the union of both discrepancy sets needs checking.
    fn dominates(&self, other: &Self) -> bool {
        let sign = |s: i64| if s < 0 { 1 } else { -1 };
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.disc, &other.disc);
        let merged = std::iter::from_fn(|| {
            let next = match (a.get(i), b.get(j)) {
                (None, None) => return None,
                (Some(&x), None) => x,
                (None, Some(&y)) => y,
                (Some(&x), Some(&y)) => x.min(y),
            };
            let mut step = (0, 0);
            if a.get(i) == Some(&next) {
                step.0 = sign(next);
                i += 1;
            }
            if b.get(j) == Some(&next) {
                step.1 = sign(next);
                j += 1;
            }
            Some((next, step))
        });
        prefix_dominates(merged.map(|(_, s)| s))
    }
}

/// Which canonical state to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CanonicalKind {
    GroundZ,
    ShiftedBlock,
    FiniteGround,
    FiniteBottom,
    IdentityPerm,
    ReversedPerm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CanonicalState {
    Perm(Permutation),
    Finite(FiniteConfig),
    Z(ZConfig),
}

pub fn canonical_state(kind: CanonicalKind, n: usize, k: usize) -> Result<CanonicalState> {
    Ok(match kind {
        CanonicalKind::GroundZ => CanonicalState::Z(ZConfig::ground()),
        CanonicalKind::ShiftedBlock => CanonicalState::Z(ZConfig::shifted_block(n)?),
        CanonicalKind::FiniteGround => CanonicalState::Finite(FiniteConfig::ground(n, k)?),
        CanonicalKind::FiniteBottom => CanonicalState::Finite(FiniteConfig::bottom(n, k)?),
        CanonicalKind::IdentityPerm => CanonicalState::Perm(Permutation::identity(n)?),
        CanonicalKind::ReversedPerm => CanonicalState::Perm(Permutation::reversed(n)?),
    })
}

/// h_k: position i carries a particle iff the card there is <= k.
pub fn height_projection(pi: &Permutation, k: usize) -> Result<FiniteConfig> {
    check_nk(pi.len(), k)?;
    let bits = pi.entries().iter().map(|&c| (c as usize <= k) as u8).collect();
    Ok(FiniteConfig { bits, k })
}

/// Inverts `(h_1, ..., h_{N-1})`. The card at position i is the smallest k
/// with `h_k(i) = 1` (or N if there is none).
pub fn reconstruct_permutation(levels: &[FiniteConfig]) -> Result<Permutation> {
    let n = levels.len() + 1;
    for (idx, h) in levels.iter().enumerate() {
        if h.n() != n || h.k() != idx + 1 {
            return Err(Error::Reconstruction(format!(
                "level {} has N = {}, k = {} (expected N = {n}, k = {})",
                idx + 1,
                h.n(),
                h.k(),
                idx + 1
            )));
        }
    }
    for (idx, pair) in levels.windows(2).enumerate() {
        if let Some(i) = (0..n).find(|&i| pair[0].bits[i] > pair[1].bits[i]) {
            return Err(Error::Reconstruction(format!(
                "h_{} has a particle at {} but h_{} does not",
                idx + 1,
                i + 1,
                idx + 2
            )));
        }
    }
    let entries = (0..n)
        .map(|i| {
            levels
                .iter()
                .position(|h| h.bits[i] == 1)
                .map_or(n as u32, |k| k as u32 + 1)
        })
        .collect();
    Permutation::new(entries).map_err(|e| Error::Reconstruction(e.to_string()))
}

/// x ↦ x̂: ones left of -k, `x(i + k + 1)` on `[-k, N - k - 1]`, zeros from
/// `N - k` on.
pub fn embed_hat(x: &FiniteConfig) -> ZConfig {
    let k = x.k() as i64;
    let mut disc = Vec::new();
    for (idx, &b) in x.bits().iter().enumerate() {
        let site = idx as i64 - k;
        if b != ground_value(site) {
            disc.push(site);
        }
    }
    ZConfig::from_sorted_unchecked(disc)
}

/// Extension of a windowed configuration beyond its window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    /// Every site is a first-class particle.
    Ones,
    /// Every site is empty.
    Zeros,
    /// Every site holds a second-class particle.
    Twos,
    /// Independent fair coins between empty and the given symbol.
    Bernoulli(u8),
}

impl Boundary {
    fn project(self, mode: Projection) -> Self {
        match self {
            Boundary::Ones | Boundary::Zeros => self,
            Boundary::Twos => match mode {
                Projection::TwoToOne => Boundary::Ones,
                Projection::TwoToZero => Boundary::Zeros,
            },
            Boundary::Bernoulli(s) => {
                let s = mode.apply(s);
                if s == 0 {
                    Boundary::Zeros
                } else {
                    Boundary::Bernoulli(s)
                }
            }
        }
    }

    /// Whether the extension contains infinitely many first-class particles.
    pub fn has_first_class(self) -> bool {
        matches!(self, Boundary::Ones | Boundary::Bernoulli(1))
    }
}

/// Collapsing second-class particles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Projection {
    /// 2 ↦ 1
    TwoToOne,
    /// 2 ↦ 0
    TwoToZero,
}

impl Projection {
    #[inline]
    pub fn apply(self, v: u8) -> u8 {
        match (self, v) {
            (Projection::TwoToOne, 2) => 1,
            (Projection::TwoToZero, 2) => 0,
            _ => v,
        }
    }
}

/// A {0,1,2} configuration on the window `[lo, lo + len - 1]` with declared
/// extensions to the left and right.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecondClassConfig {
    lo: i64,
    values: Vec<u8>,
    left: Boundary,
    right: Boundary,
    tagged: Option<i64>,
}

impl SecondClassConfig {
    pub fn new(lo: i64, values: Vec<u8>, left: Boundary, right: Boundary) -> Result<Self> {
        if values.is_empty() {
            return Err(param("window must be nonempty"));
        }
        if values.iter().any(|&v| v > 2) {
            return Err(param("values must lie in {0, 1, 2}"));
        }
        Ok(Self {
            lo,
            values,
            left,
            right,
            tagged: None,
        })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn left(&self) -> Boundary {
        self.left
    }

    pub fn right(&self) -> Boundary {
        self.right
    }

    pub fn tagged(&self) -> Option<i64> {
        self.tagged
    }

    /// Value at site `i` inside the window.
    pub fn at(&self, i: i64) -> Option<u8> {
        if i < self.lo || i > self.hi() {
            return None;
        }
        Some(self.values[(i - self.lo) as usize])
    }

    pub fn with_tag(mut self, site: i64) -> Result<Self> {
        match self.at(site) {
            Some(1) | Some(2) => {
                self.tagged = Some(site);
                Ok(self)
            }
            _ => Err(Error::NoTaggedParticle(format!(
                "site {site} holds no particle inside the window"
            ))),
        }
    }

    /// The tagged-particle rule: the rightmost first-class particle when
    /// there are finitely many to the right, otherwise the rightmost
    /// first-class particle strictly left of the origin.
    pub fn tag_by_rule(self) -> Result<Self> {
        let last_one =
            |pred: &dyn Fn(i64) -> bool| (self.lo..=self.hi()).rev().find(|&i| pred(i) && self.at(i) == Some(1));
        let site = if !self.right.has_first_class() {
            last_one(&|_| true).ok_or_else(|| Error::NoTaggedParticle("no first-class particle in window".into()))?
        } else {
            last_one(&|i| i < 0)
                .ok_or_else(|| Error::NoTaggedParticle("no first-class particle left of the origin".into()))?
        };
        self.with_tag(site)
    }

    pub fn project(&self, mode: Projection) -> SecondClassConfig {
        SecondClassConfig {
            lo: self.lo,
            values: self.values.iter().map(|&v| mode.apply(v)).collect(),
            left: self.left.project(mode),
            right: self.right.project(mode),
            tagged: self.tagged,
        }
    }

    /// Reads a 0/1 window with ones to the left and zeros to the right as an
    /// element of A.
    pub fn to_zconfig(&self) -> Result<ZConfig> {
        if self.left != Boundary::Ones || self.right != Boundary::Zeros {
            return Err(param("only windows extended by ones (left) and zeros (right) lie in A"));
        }
        if self.values.iter().any(|&v| v > 1) {
            return Err(param("second-class particles present; project first"));
        }
        let disc = (self.lo..=self.hi())
            .filter(|&i| self.at(i) != Some(ground_value(i)))
            .collect();
        ZConfig::from_discrepancies(disc)
    }

    /// Erases empty sites, maps 2 to 0, and indexes the resulting word by
    /// particle rank so that the tagged particle sits at `tagged_offset`.
    pub fn zero_erased_view(&self) -> Result<ZeroErased> {
        let tag = self
            .tagged
            .ok_or_else(|| Error::NoTaggedParticle("configuration carries no tag".into()))?;
        let mut word = Vec::new();
        let mut offset = None;
        for (idx, &v) in self.values.iter().enumerate() {
            if v == 0 {
                continue;
            }
            if self.lo + idx as i64 == tag {
                offset = Some(word.len());
            }
            word.push((v == 1) as u8);
        }
        let tagged_offset = offset.ok_or_else(|| Error::NoTaggedParticle(format!("tagged site {tag} is empty")))?;
        Ok(ZeroErased { word, tagged_offset })
    }
}

/// Particle-rank view of a {0,1,2} window: `word[tagged_offset + n]` is the
/// type (1 first-class, 0 second-class) of the n-th particle after the
/// tagged one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroErased {
    pub word: Vec<u8>,
    pub tagged_offset: usize,
}

impl ZeroErased {
    /// Value at particle index `n` relative to the tagged particle.
    pub fn at(&self, n: i64) -> Option<u8> {
        let idx = self.tagged_offset as i64 + n;
        if idx < 0 {
            return None;
        }
        self.word.get(idx as usize).copied()
    }

    /// R of the view: largest index holding a first-class particle.
    pub fn rightmost_first_class(&self) -> Option<i64> {
        self.word
            .iter()
            .rposition(|&v| v == 1)
            .map(|i| i as i64 - self.tagged_offset as i64)
    }

    /// Whether every second-class particle lies right of every first-class
    /// particle (the sorted state).
    pub fn is_sorted(&self) -> bool {
        let first_zero = self.word.iter().position(|&v| v == 0).unwrap_or(self.word.len());
        self.word[first_zero..].iter().all(|&v| v == 0)
    }

    /// Shift that balances the view: with the tag at site -1 + shift, the
    /// holes left of 0 match the particles from 0 on. Equals the number of
    /// second-class particles left of the tag minus the first-class ones
    /// right of it.
    pub fn balance_shift(&self) -> i64 {
        let (before, after) = self.word.split_at(self.tagged_offset);
        let holes = before.iter().filter(|&&v| v == 0).count() as i64;
        let parts = after[1..].iter().filter(|&&v| v == 1).count() as i64;
        holes - parts
    }

    /// The balanced translate: the unique translate of the view lying in A.
    /// The tag sits at `balance_shift() - 1`, which is R of the view.
    pub fn balanced(&self) -> ZConfig {
        let shift = self.balance_shift();
        let disc = self
            .word
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| {
                let site = i as i64 - self.tagged_offset as i64 - 1 + shift;
                (v != ground_value(site)).then_some(site)
            })
            .collect();
        ZConfig::from_sorted_unchecked(disc)
    }

    /// The view as an element of A, indexed so that the tagged particle
    /// sits at site -1; the sorted state with the tag as the last
    /// first-class particle maps to G_Z. Ones are assumed beyond the word's
    /// left end and zeros beyond its right end.
    pub fn to_zconfig(&self) -> Result<ZConfig> {
        let disc = self
            .word
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| {
                let site = i as i64 - self.tagged_offset as i64 - 1;
                (v != ground_value(site)).then_some(site)
            })
            .collect();
        ZConfig::from_discrepancies(disc)
    }
}
