use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Axis-aligned pixel rectangle covering columns `[x, x + w)` and rows `[y, y + h)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoundingBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BoundingBox {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::Geometry(format!(
                "bounding box must be at least 1x1, got {w}x{h}"
            )));
        }
        Ok(Self { x, y, w, h })
    }

    /// Parses `[x, y, w, h]` from signed integers, rejecting negatives.
    pub fn from_xywh(v: [i64; 4]) -> Result<Self> {
        if v.iter().any(|&c| c < 0) {
            return Err(Error::Geometry(format!("negative box coordinate in {v:?}")));
        }
        Self::new(v[0] as usize, v[1] as usize, v[2] as usize, v[3] as usize)
    }

    #[inline]
    pub fn area(&self) -> usize {
        self.w * self.h
    }

    #[inline]
    pub fn right(&self) -> usize {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn fits_within(&self, width: usize, height: usize) -> bool {
        self.right() <= width && self.bottom() <= height
    }

    /// Intersection with the `width x height` image, or `None` when empty.
    pub fn clip(&self, width: usize, height: usize) -> Option<Self> {
        let right = self.right().min(width);
        let bottom = self.bottom().min(height);
        if right <= self.x || bottom <= self.y {
            return None;
        }
        Some(Self {
            x: self.x,
            y: self.y,
            w: right - self.x,
            h: bottom - self.y,
        })
    }

    /// Box mapped into a feature space of the given scale. Coordinates round
    /// half-up; the extent never drops below 1x1.
    pub fn scaled(&self, scale: Scale) -> Self {
        let f = scale.factor();
        let round = |v: usize| (v as f64 * f + 0.5).floor() as usize;
        Self {
            x: round(self.x),
            y: round(self.y),
            w: round(self.w).max(1),
            h: round(self.h).max(1),
        }
    }

    pub fn to_xywh(&self) -> [usize; 4] {
        [self.x, self.y, self.w, self.h]
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.x, self.y, self.w, self.h)
    }
}

impl Serialize for BoundingBox {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_xywh().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundingBox {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = <[i64; 4]>::deserialize(d)?;
        BoundingBox::from_xywh(v).map_err(serde::de::Error::custom)
    }
}

/// Resolution of a feature map relative to the input image: `(1/2)^halvings`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Scale {
    halvings: u32,
}

impl Scale {
    pub const ONE: Scale = Scale { halvings: 0 };

    pub const fn from_halvings(halvings: u32) -> Self {
        Self { halvings }
    }

    pub fn halvings(&self) -> u32 {
        self.halvings
    }

    /// `2^halvings`
    pub fn denominator(&self) -> u64 {
        1u64 << self.halvings
    }

    pub fn factor(&self) -> f64 {
        1.0 / self.denominator() as f64
    }

    /// Size of a `len`-pixel axis after this many 2x poolings with odd-size
    /// replication (ceil at every step).
    pub fn apply_to_len(&self, len: usize) -> usize {
        (0..self.halvings).fold(len, |n, _| n.div_ceil(2))
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.halvings == 0 {
            write!(f, "1")
        } else {
            write!(f, "1/{}", self.denominator())
        }
    }
}

impl Serialize for Scale {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
