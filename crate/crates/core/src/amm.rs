//! Range-liquidity arithmetic.
//!
//! Prices are quoted as units of token Y per unit of token X. A position of
//! liquidity `L` over `[lower, upper]` holds
//!
//! ```text
//! Z < lower           : x = L (1/√lower − 1/√upper),  y = 0
//! lower <= Z <= upper : x = L (1/√Z − 1/√upper),      y = L (√Z − √lower)
//! upper < Z           : x = 0,                         y = L (√upper − √lower)
//! ```
//!
//! Unbounded ranges use the limits `√0 = 0` and `1/√∞ = 0`, which
//! [`PriceRange`] stores directly so no infinity reaches the arithmetic.

// inherent float methods win whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// A strictly positive, finite price of X in Y.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[repr(transparent)]
pub struct Price(pub(crate) f64);

impl Price {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Price(value))
        } else {
            Err(Error::InvalidPrice(value))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn sqrt(self) -> f64 {
        self.0.sqrt()
    }
}

impl From<Price> for f64 {
    fn from(p: Price) -> f64 {
        p.0
    }
}

/// A price interval `[lower, upper]`. `lower` may be `0` and `upper` may be
/// `+∞` for the half-open and full ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceRange {
    lower: f64,
    upper: f64,
    sqrt_lower: f64,
    inv_sqrt_upper: f64,
}

impl PriceRange {
    /// A bounded range with `0 < lower < upper < ∞`.
    pub fn new(lower: Price, upper: Price) -> Result<Self> {
        Self::from_bounds(lower.get(), upper.get())
    }

    /// Any range with `0 <= lower < upper <= ∞`.
    pub fn from_bounds(lower: f64, upper: f64) -> Result<Self> {
        let ok = lower >= 0.0 && lower.is_finite() && upper > lower && !upper.is_nan();
        if !ok {
            return Err(Error::InvertedRange { lower, upper });
        }
        let inv_sqrt_upper = if upper.is_infinite() {
            0.0
        } else {
            upper.sqrt().recip()
        };
        Ok(PriceRange {
            lower,
            upper,
            sqrt_lower: lower.sqrt(),
            inv_sqrt_upper,
        })
    }

    /// `(0, ∞)`.
    pub fn full() -> Self {
        PriceRange {
            lower: 0.0,
            upper: f64::INFINITY,
            sqrt_lower: 0.0,
            inv_sqrt_upper: 0.0,
        }
    }

    /// `(0, upper)`.
    pub fn below(upper: Price) -> Self {
        PriceRange {
            lower: 0.0,
            upper: upper.get(),
            sqrt_lower: 0.0,
            inv_sqrt_upper: upper.sqrt().recip(),
        }
    }

    /// `(lower, ∞)`.
    pub fn above(lower: Price) -> Self {
        PriceRange {
            lower: lower.get(),
            upper: f64::INFINITY,
            sqrt_lower: lower.sqrt(),
            inv_sqrt_upper: 0.0,
        }
    }

    /// `[center/alpha, alpha*center]`, the range a chasing LP holds.
    pub fn centered(center: Price, alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                requirement: "alpha must be > 1",
            });
        }
        let c = center.get();
        Self::from_bounds(c / alpha, c * alpha)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, z: Price) -> bool {
        self.lower <= z.get() && z.get() <= self.upper
    }

    fn check_inside(&self, z: Price) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                price: z.get(),
                lower: self.lower,
                upper: self.upper,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiquidityPosition {
    pub liquidity: f64,
    pub range: PriceRange,
}

impl LiquidityPosition {
    pub fn amounts(&self, z: Price) -> TokenAmounts {
        amounts_unchecked(self.liquidity, z, &self.range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TokenAmounts {
    pub x: f64,
    pub y: f64,
}

/// Token flows of a trade moving the price from `Z` to `Z'`.
///
/// `x_out` is the amount of X leaving the pool and `y_in` the amount of Y
/// entering it. Both are non-negative when the price rises and non-positive
/// when it falls.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TradeDeltas {
    pub x_out: f64,
    pub y_in: f64,
}

impl TradeDeltas {
    /// Signed change of the pool reserves `(Δx, Δy)`; their product is never positive.
    pub fn reserve_changes(&self) -> (f64, f64) {
        (-self.x_out, self.y_in)
    }
}

fn check_liquidity(l: f64) -> Result<()> {
    if l >= 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "liquidity",
            value: l,
            requirement: "liquidity must be finite and >= 0",
        })
    }
}

fn amounts_unchecked(l: f64, z: Price, range: &PriceRange) -> TokenAmounts {
    let zv = z.get();
    if zv < range.lower {
        TokenAmounts {
            x: l * (range.lower.sqrt().recip() - range.inv_sqrt_upper),
            y: 0.0,
        }
    } else if zv > range.upper {
        TokenAmounts {
            x: 0.0,
            y: l * (range.upper.sqrt() - range.sqrt_lower),
        }
    } else {
        let s = z.sqrt();
        TokenAmounts {
            x: l * (s.recip() - range.inv_sqrt_upper),
            y: l * (s - range.sqrt_lower),
        }
    }
}

/// Tokens needed to provide `l` liquidity over `range` at current price `z`.
pub fn deposit_amounts(l: f64, z: Price, range: &PriceRange) -> Result<TokenAmounts> {
    check_liquidity(l)?;
    Ok(amounts_unchecked(l, z, range))
}

/// Tokens recovered when withdrawing `l` liquidity from `[center/alpha, alpha*center]`
/// after the price moved to `z_exit`.
pub fn withdraw_amounts(l: f64, z_exit: Price, center: Price, alpha: f64) -> Result<TokenAmounts> {
    check_liquidity(l)?;
    let range = PriceRange::centered(center, alpha)?;
    range.check_inside(z_exit)?;
    let s = z_exit.sqrt();
    let ac = alpha * center.get();
    Ok(TokenAmounts {
        x: (l * (s.recip() - ac.sqrt().recip())).max(0.0),
        y: (l * (s - (center.get() / alpha).sqrt())).max(0.0),
    })
}

/// Token flows when a trade moves the price from `z` to `z_next` through
/// liquidity `l` active over `range`.
///
/// The active range behaves as if it were backed by the virtual reserves
/// `x + l/√upper` and `y + l·√lower`, which makes the result identical to
/// the same trade against `l` over `(0, ∞)`.
pub fn trade_deltas(l: f64, z: Price, z_next: Price, range: &PriceRange) -> Result<TradeDeltas> {
    check_liquidity(l)?;
    range.check_inside(z)?;
    range.check_inside(z_next)?;
    let pos = amounts_unchecked(l, z, range);
    let virtual_x = pos.x + l * range.inv_sqrt_upper;
    let virtual_y = pos.y + l * range.sqrt_lower;
    let ratio = (z.get() / z_next.get()).sqrt();
    let deltas = if z_next.get() >= z.get() {
        TradeDeltas {
            x_out: (1.0 - ratio) * virtual_x,
            y_in: (ratio.recip() - 1.0) * virtual_y,
        }
    } else {
        TradeDeltas {
            x_out: -(ratio - 1.0) * virtual_x,
            y_in: -(1.0 - ratio.recip()) * virtual_y,
        }
    };
    Ok(deltas)
}

/// Split full-range liquidity `l` into equal-liquidity positions over
/// `(0, a)`, `(a, b)` and `(b, ∞)`. The three together hold exactly the
/// tokens of `l` over `(0, ∞)`.
pub fn decompose(
    l: f64,
    z: Price,
    a: Price,
    b: Price,
) -> Result<(LiquidityPosition, LiquidityPosition, LiquidityPosition)> {
    check_liquidity(l)?;
    let middle = PriceRange::new(a, b)?;
    if !(a.get() < z.get() && z.get() < b.get()) {
        return Err(Error::OutOfRange {
            price: z.get(),
            lower: a.get(),
            upper: b.get(),
        });
    }
    Ok((
        LiquidityPosition {
            liquidity: l,
            range: PriceRange::below(a),
        },
        LiquidityPosition {
            liquidity: l,
            range: middle,
        },
        LiquidityPosition {
            liquidity: l,
            range: PriceRange::above(b),
        },
    ))
}
