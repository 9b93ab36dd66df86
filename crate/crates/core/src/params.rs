use crate::error::{param, Result};
use serde::{Deserialize, Serialize};

/// Which range `t` lives in.
///
/// `A`: `0 ≤ t < s` (gadget and tiling code). `B`: `1 ≤ t ≤ s`, with `g = 1` iff `t = s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    A,
    B,
}

/// `r = m·s + t` together with the variant flag and `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RParams {
    pub r: usize,
    pub s: usize,
    pub m: usize,
    pub t: usize,
    pub g: usize,
    pub variant: Variant,
}

impl RParams {
    pub fn variant_a(m: usize, s: usize, t: usize) -> Result<Self> {
        if m == 0 || s == 0 {
            return param(format!("m={m}, s={s} must be positive"));
        }
        if t >= s {
            return param(format!("variant A needs 0 ≤ t < s, got t={t}, s={s}"));
        }
        Ok(RParams { r: m * s + t, s, m, t, g: 0, variant: Variant::A })
    }

    pub fn variant_b(m: usize, s: usize, t: usize) -> Result<Self> {
        if m == 0 || s == 0 {
            return param(format!("m={m}, s={s} must be positive"));
        }
        if t == 0 || t > s {
            return param(format!("variant B needs 1 ≤ t ≤ s, got t={t}, s={s}"));
        }
        Ok(RParams { r: m * s + t, s, m, t, g: usize::from(t == s), variant: Variant::B })
    }

    /// Decomposes `r` for a given `s`.
    pub fn from_r_s(r: usize, s: usize, variant: Variant) -> Result<Self> {
        if s == 0 || r < s {
            return param(format!("need 1 ≤ s ≤ r, got r={r}, s={s}"));
        }
        match variant {
            Variant::A => Self::variant_a(r / s, s, r % s),
            Variant::B => {
                let m = r.div_ceil(s) - 1;
                if m == 0 {
                    return param(format!("variant B needs r > s, got r={r}, s={s}"));
                }
                Self::variant_b(m, s, r - m * s)
            }
        }
    }

    pub fn require(&self, v: Variant) -> Result<()> {
        if self.variant != v {
            return param(format!("operation needs variant {v:?} parameters, got {self:?}"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decompositions() {
        let a = RParams::from_r_s(5, 2, Variant::A).unwrap();
        assert_eq!((a.m, a.t), (2, 1));
        let b = RParams::from_r_s(4, 2, Variant::B).unwrap();
        assert_eq!((b.m, b.t, b.g), (1, 2, 1));
        let b = RParams::from_r_s(3, 2, Variant::B).unwrap();
        assert_eq!((b.m, b.t, b.g), (1, 1, 0));
        assert!(RParams::variant_a(2, 2, 2).is_err());
        assert!(RParams::variant_b(2, 2, 0).is_err());
    }

    #[test]
    fn identity_holds() {
        for r in 2..30 {
            for s in 1..r {
                for v in [Variant::A, Variant::B] {
                    if let Ok(p) = RParams::from_r_s(r, s, v) {
                        assert_eq!(p.m * p.s + p.t, r);
                    }
                }
            }
        }
    }
}
