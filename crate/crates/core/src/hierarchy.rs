//! Arithmetic over a perfectly balanced `b`-ary tree of height `h`.
//!
//! The tree is never materialized. A leaf is identified by its left-to-right
//! index in `[0, b^h)`; the base-`b` digits of that index (most significant
//! first) spell out the root-to-leaf path. Communities are the `b` leaves
//! under a common parent, so the community tree is the same shape with one
//! fewer level.
//!
//! Distances follow the leaves-at-level-0 convention: siblings are at
//! distance 1 and two leaves whose lowest common ancestor is the root are at
//! distance `h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the hierarchy: fanout `b` and height `h`, with population `b^h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTree", into = "RawTree")]
pub struct TreeParams {
    b: u64,
    h: u32,
    n: u64,
}

#[derive(Serialize, Deserialize)]
struct RawTree {
    b: u64,
    h: u32,
}

impl TryFrom<RawTree> for TreeParams {
    type Error = Error;
    fn try_from(raw: RawTree) -> Result<Self> {
        TreeParams::new(raw.b, raw.h)
    }
}

impl From<TreeParams> for RawTree {
    fn from(p: TreeParams) -> Self {
        RawTree { b: p.b, h: p.h }
    }
}

/// A leaf of the tree, i.e. one individual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u64);

/// A community: the `b` consecutive leaves sharing a parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CommunityId(pub u64);

impl std::fmt::Display for CommunityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl TreeParams {
    /// Builds the tree shape, failing when `b < 2`, `h < 1`, or `b^h`
    /// does not fit in a `u64`.
    pub fn new(b: u64, h: u32) -> Result<Self> {
        if b < 2 {
            return Err(Error::InvalidParam(format!("fanout b must be >= 2, got {b}")));
        }
        if h < 1 {
            return Err(Error::InvalidParam(format!("height h must be >= 1, got {h}")));
        }
        let n = b.checked_pow(h).ok_or(Error::Overflow { base: b, exp: h })?;
        Ok(Self { b, h, n })
    }

    pub fn fanout(&self) -> u64 {
        self.b
    }

    pub fn height(&self) -> u32 {
        self.h
    }

    /// Population `n = b^h`.
    pub fn population(&self) -> u64 {
        self.n
    }

    /// Number of communities `N = b^(h-1)`.
    pub fn communities(&self) -> u64 {
        self.n / self.b
    }

    /// Height of the community tree, `H = h - 1`.
    pub fn community_height(&self) -> u32 {
        self.h - 1
    }

    fn check_node(&self, u: NodeId) -> Result<()> {
        if u.0 >= self.n {
            return Err(Error::OutOfRange { what: "node id", value: u.0, bound: self.n });
        }
        Ok(())
    }

    fn check_community(&self, c: CommunityId) -> Result<()> {
        let bound = self.communities();
        if c.0 >= bound {
            return Err(Error::OutOfRange { what: "community id", value: c.0, bound });
        }
        Ok(())
    }

    /// Height of the lowest common ancestor of two leaves, in `0..=h`.
    pub fn social_distance(&self, u: NodeId, v: NodeId) -> Result<u32> {
        self.check_node(u)?;
        self.check_node(v)?;
        Ok(lca_height(u.0, v.0, self.b))
    }

    pub fn community_of(&self, u: NodeId) -> Result<CommunityId> {
        self.check_node(u)?;
        Ok(CommunityId(u.0 / self.b))
    }

    /// Distance between communities measured on the community tree, in `0..=H`.
    pub fn community_distance(&self, c1: CommunityId, c2: CommunityId) -> Result<u32> {
        self.check_community(c1)?;
        self.check_community(c2)?;
        Ok(lca_height(c1.0, c2.0, self.b))
    }

    /// Number of communities at exactly distance `d` from any community:
    /// `(b-1) * b^(d-1)`.
    pub fn count_at_distance(&self, d: u32) -> Result<u64> {
        self.check_level(d)?;
        Ok((self.b - 1) * self.b.pow(d - 1))
    }

    fn check_level(&self, d: u32) -> Result<()> {
        let big_h = self.community_height();
        if d < 1 || d > big_h {
            return Err(Error::InvalidParam(format!(
                "community distance {d} outside 1..={big_h}"
            )));
        }
        Ok(())
    }

    /// The `index`-th community (in ascending id order) at distance `d` from `c`.
    ///
    /// The digit at position `d-1` (counting from the least significant) is
    /// the one that must differ from `c`'s; everything above stays fixed and
    /// everything below is free.
    pub fn nth_at_distance(&self, c: CommunityId, d: u32, index: u64) -> Result<CommunityId> {
        self.check_community(c)?;
        let count = self.count_at_distance(d)?;
        if index >= count {
            return Err(Error::OutOfRange { what: "distance-class index", value: index, bound: count });
        }
        Ok(CommunityId(nth_at_distance_unchecked(c.0, self.b, d, index)))
    }

    /// All communities at exactly distance `d` from `c`, ascending.
    pub fn communities_at_distance(&self, c: CommunityId, d: u32) -> Result<Vec<CommunityId>> {
        self.check_community(c)?;
        let count = self.count_at_distance(d)?;
        Ok((0..count)
            .map(|i| CommunityId(nth_at_distance_unchecked(c.0, self.b, d, i)))
            .collect())
    }
}

/// Number of base-`b` digits that must be stripped from the bottom before
/// `x` and `y` coincide.
#[inline]
pub(crate) fn lca_height(mut x: u64, mut y: u64, b: u64) -> u32 {
    let mut d = 0;
    while x != y {
        x /= b;
        y /= b;
        d += 1;
    }
    d
}

#[inline]
pub(crate) fn nth_at_distance_unchecked(c: u64, b: u64, d: u32, index: u64) -> u64 {
    let block = b.pow(d - 1);
    let prefix = c / (block * b);
    let own = (c / block) % b;
    let mut digit = index / block;
    if digit >= own {
        digit += 1;
    }
    (prefix * b + digit) * block + index % block
}
