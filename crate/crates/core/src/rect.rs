use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Closed axis-aligned rectangle `[a, b] x [c, d]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Rectangle {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite()) {
            return invalid(format!("rectangle bounds must be finite: [{a}, {b}] x [{c}, {d}]"));
        }
        if !(a < b && c < d) {
            return invalid(format!("degenerate rectangle [{a}, {b}] x [{c}, {d}]"));
        }
        Ok(Rectangle { a, b, c, d })
    }

    /// The square `[-1, 1]^2`.
    pub fn reference() -> Self {
        Rectangle {
            a: -1.0,
            b: 1.0,
            c: -1.0,
            d: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn height(&self) -> f64 {
        self.d - self.c
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, other: &Rectangle) -> bool {
        self.a <= other.a && other.b <= self.b && self.c <= other.c && other.d <= self.d
    }

    /// The four quadrants in the order lower-left, lower-right, upper-left,
    /// upper-right. The shared midlines are computed once so the children
    /// tile the parent exactly.
    pub fn quadrants(&self) -> [Rectangle; 4] {
        let xm = 0.5 * (self.a + self.b);
        let ym = 0.5 * (self.c + self.d);
        [
            Rectangle {
                a: self.a,
                b: xm,
                c: self.c,
                d: ym,
            },
            Rectangle {
                a: xm,
                b: self.b,
                c: self.c,
                d: ym,
            },
            Rectangle {
                a: self.a,
                b: xm,
                c: ym,
                d: self.d,
            },
            Rectangle {
                a: xm,
                b: self.b,
                c: ym,
                d: self.d,
            },
        ]
    }

    /// Transposed rectangle `[c, d] x [a, b]`.
    pub fn transpose(&self) -> Rectangle {
        Rectangle {
            a: self.c,
            b: self.d,
            c: self.a,
            d: self.b,
        }
    }
}

/// Maps a reference coordinate `t` in `[-1, 1]` onto `[lo, hi]`.
///
/// Written as a convex combination so that `t = -1` and `t = 1` land exactly
/// on the endpoints.
#[inline]
pub fn map_to_interval(t: f64, lo: f64, hi: f64) -> f64 {
    (((1.0 - t) * lo + (1.0 + t) * hi) * 0.5).clamp(lo, hi)
}

/// Inverse of [`map_to_interval`].
#[inline]
pub fn map_to_reference(x: f64, lo: f64, hi: f64) -> f64 {
    (((x - lo) - (hi - x)) / (hi - lo)).clamp(-1.0, 1.0)
}
