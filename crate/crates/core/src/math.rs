//! Float math that works without `std`.
//!
//! `core` only ships a handful of float methods. The [`FloatMath`] trait
//! backfills the transcendental and rounding functions from `libm`. Importing
//! it is always safe: inherent methods win resolution, so builds with `std`
//! keep using the fast intrinsics and the trait only kicks in under `no_std`.

#![allow(unused_imports)]

/// Extension trait providing `sqrt`, `exp`, `ln`, `sin`, `cos`, `floor` and
/// `round` on floats in `no_std` builds.
// Unused under `std` by design: inherent methods shadow every trait method.
#[allow(dead_code)]
pub trait FloatMath {
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn floor(self) -> Self;
    fn ceil(self) -> Self;
    fn round(self) -> Self;
}

impl FloatMath for f32 {
    #[inline]
    fn sqrt(self) -> f32 {
        libm::sqrtf(self)
    }
    #[inline]
    fn exp(self) -> f32 {
        libm::expf(self)
    }
    #[inline]
    fn ln(self) -> f32 {
        libm::logf(self)
    }
    #[inline]
    fn sin(self) -> f32 {
        libm::sinf(self)
    }
    #[inline]
    fn cos(self) -> f32 {
        libm::cosf(self)
    }
    #[inline]
    fn floor(self) -> f32 {
        libm::floorf(self)
    }
    #[inline]
    fn ceil(self) -> f32 {
        libm::ceilf(self)
    }
    #[inline]
    fn round(self) -> f32 {
        libm::roundf(self)
    }
}

impl FloatMath for f64 {
    #[inline]
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    #[inline]
    fn exp(self) -> f64 {
        libm::exp(self)
    }
    #[inline]
    fn ln(self) -> f64 {
        libm::log(self)
    }
    #[inline]
    fn sin(self) -> f64 {
        libm::sin(self)
    }
    #[inline]
    fn cos(self) -> f64 {
        libm::cos(self)
    }
    #[inline]
    fn floor(self) -> f64 {
        libm::floor(self)
    }
    #[inline]
    fn ceil(self) -> f64 {
        libm::ceil(self)
    }
    #[inline]
    fn round(self) -> f64 {
        libm::round(self)
    }
}

#[cfg(test)]
mod tests {
    use super::FloatMath;

    #[test]
    fn libm_matches_std() {
        // UFCS forces the trait impl so we can compare it against the std
        // intrinsics. sqrt/floor/round are exactly rounded everywhere; the
        // transcendentals may differ from the platform libm by an ulp.
        let xs = [0.25_f64, 1.0, 2.0, 9.5, 100.0];
        for &x in &xs {
            assert_eq!(FloatMath::sqrt(x), x.sqrt());
            assert_eq!(FloatMath::floor(x + 0.5), (x + 0.5).floor());
            assert_eq!(FloatMath::ceil(x + 0.5), (x + 0.5).ceil());
            assert_eq!(FloatMath::round(x + 0.5), (x + 0.5).round());
            assert!((FloatMath::exp(x) - x.exp()).abs() <= x.exp() * 1e-15);
            assert!((FloatMath::ln(x) - x.ln()).abs() <= 1e-15);
        }
        assert!((FloatMath::sin(0.5_f64) - 0.5_f64.sin()).abs() <= 1e-15);
        assert!((FloatMath::cos(0.5_f64) - 0.5_f64.cos()).abs() <= 1e-15);
        assert_eq!(FloatMath::sqrt(2.0_f32), 2.0_f32.sqrt());
    }
}
