//! Floating-point abstraction shared by the numeric modules.
//!
//! Everything that does linear algebra or learning (`semantic`, `classifier`)
//! is written against [`Scalar`] so the same code runs in `f32` or `f64`.
//! Modules that only need field arithmetic (`evaluation`) ask for the weaker
//! `num_traits::Num` bounds instead, which also admits exact rationals.

use std::fmt::{Debug, Display, LowerExp};
use std::io::{self, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::RealField;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar usable in dense linear algebra and tree learning.
///
/// `Float` and `RealField` both provide `sqrt`, `abs`, `max`, ...; call sites
/// use the fully qualified `Float::` forms to stay unambiguous.
pub trait Scalar:
    RealField + Float + FromPrimitive + ToPrimitive + Copy + Default + Send + Sync + Debug + Display + LowerExp + 'static
{
    /// Width in bytes of the on-disk little-endian encoding.
    const WIDTH: u8;

    fn write_le<W: Write>(self, w: &mut W) -> io::Result<()>;
    fn read_le<R: Read>(r: &mut R) -> io::Result<Self>;

    /// Lossless-as-possible conversion from `f64` literals and counts.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 is representable")
    }

    #[inline]
    fn of_usize(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("scalar converts to f64")
    }
}

impl Scalar for f32 {
    const WIDTH: u8 = 4;

    fn write_le<W: Write>(self, w: &mut W) -> io::Result<()> {
        w.write_f32::<LittleEndian>(self)
    }

    fn read_le<R: Read>(r: &mut R) -> io::Result<Self> {
        r.read_f32::<LittleEndian>()
    }
}

impl Scalar for f64 {
    const WIDTH: u8 = 8;

    fn write_le<W: Write>(self, w: &mut W) -> io::Result<()> {
        w.write_f64::<LittleEndian>(self)
    }

    fn read_le<R: Read>(r: &mut R) -> io::Result<Self> {
        r.read_f64::<LittleEndian>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip<T: Scalar>(v: T) -> T {
        let mut buf = Vec::new();
        v.write_le(&mut buf).unwrap();
        assert_eq!(buf.len(), T::WIDTH as usize);
        T::read_le(&mut buf.as_slice()).unwrap()
    }

    #[test]
    fn le_encoding_is_exact() {
        assert_eq!(round_trip(0.1f64), 0.1f64);
        assert_eq!(round_trip(-3.25f32), -3.25f32);
        assert_eq!(round_trip(f64::MIN_POSITIVE), f64::MIN_POSITIVE);
    }
}
