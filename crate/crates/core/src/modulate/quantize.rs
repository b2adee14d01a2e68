use crate::error::{invalid, Error, Result};
use crate::num::{from_usize, lit, Real};

/// Uniform quantizer on `[0, 1]` with `levels` cells and reconstruction at the
/// cell centers `(j + 1/2) / levels`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizerSpec {
    pub levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantized<T> {
    pub index: usize,
    pub reconstruction: T,
}

impl QuantizerSpec {
    pub fn new(levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(invalid("quantizer needs at least one level"));
        }
        Ok(QuantizerSpec { levels })
    }

    pub fn center<T: Real>(&self, index: usize) -> T {
        (from_usize::<T>(index) + lit(0.5)) / from_usize(self.levels)
    }

    /// Worst-case reconstruction error `1 / (2 M)`.
    pub fn max_error<T: Real>(&self) -> T {
        T::one() / (lit::<T>(2.0) * from_usize(self.levels))
    }

    pub fn quantize<T: Real>(&self, u: T) -> Result<Quantized<T>> {
        if !(u >= T::zero() && u <= T::one()) {
            return Err(Error::OutOfRange { value: u.to_f64().unwrap_or(f64::NAN) });
        }
        let scaled = (u * from_usize(self.levels)).floor();
        let index = scaled.to_usize().unwrap_or(0).min(self.levels - 1);
        Ok(Quantized { index, reconstruction: self.center(index) })
    }
}

/// Quantizes `u in [0, 1]` to one of `levels` equal cells.
pub fn uniform_quantize<T: Real>(u: T, levels: usize) -> Result<Quantized<T>> {
    QuantizerSpec::new(levels)?.quantize(u)
}
