use std::fmt;

use half::{bf16, f16};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element types a checkpoint may store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DType {
    F16,
    BF16,
    F32,
    F64,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F16 | DType::BF16 => 2,
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }

    /// Tag used in the archive header.
    pub fn tag(self) -> &'static str {
        match self {
            DType::F16 => "F16",
            DType::BF16 => "BF16",
            DType::F32 => "F32",
            DType::F64 => "F64",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "F16" => Ok(DType::F16),
            "BF16" => Ok(DType::BF16),
            "F32" => Ok(DType::F32),
            "F64" => Ok(DType::F64),
            other => Err(Error::UnsupportedDtype(other.to_string())),
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A dense row-major tensor holding its little-endian element bytes verbatim.
///
/// Keeping the raw bytes makes archive round-trips bit-exact for every dtype;
/// arithmetic goes through [`Tensor::to_f64`] and [`Tensor::from_f64`].
#[derive(Clone, PartialEq, Eq)]
pub struct Tensor {
    dtype: DType,
    shape: Vec<usize>,
    data: Vec<u8>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("dtype", &self.dtype)
            .field("shape", &self.shape)
            .field("bytes", &self.data.len())
            .finish()
    }
}

/// Bit layout of a 16-bit binary float.
#[derive(Clone, Copy)]
struct HalfFormat {
    mantissa_bits: u32,
    exponent_bits: u32,
}

const F16_FORMAT: HalfFormat = HalfFormat {
    mantissa_bits: 10,
    exponent_bits: 5,
};

const BF16_FORMAT: HalfFormat = HalfFormat {
    mantissa_bits: 7,
    exponent_bits: 8,
};

/// Correctly rounded (nearest, ties to even) `f64` to 16-bit float conversion.
///
/// Going through `f32` first would round twice and can land on the wrong
/// neighbour when the discarded bits sit just above a tie.
fn narrow_float(x: f64, format: HalfFormat) -> u16 {
    let HalfFormat {
        mantissa_bits,
        exponent_bits,
    } = format;
    let bias = (1i32 << (exponent_bits - 1)) - 1;
    let exp_mask = ((1u32 << exponent_bits) - 1) as u16;
    let bits = x.to_bits();
    let sign = ((bits >> 63) as u16) << 15;
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let raw_man = bits & ((1u64 << 52) - 1);
    let inf = sign | (exp_mask << mantissa_bits);
    if raw_exp == 0x7ff {
        return if raw_man == 0 {
            inf
        } else {
            inf | (1 << (mantissa_bits - 1))
        };
    }
    if raw_exp == 0 {
        // f64 subnormals are far below the smallest 16-bit subnormal.
        return sign;
    }
    let e = raw_exp - 1023;
    if e > bias {
        return inf;
    }
    let significand = raw_man | (1u64 << 52);
    let min_normal = 1 - bias;
    // Exponent of the target's last mantissa bit.
    let quantum = if e >= min_normal {
        e - mantissa_bits as i32
    } else {
        min_normal - mantissa_bits as i32
    };
    let shift = (quantum - (e - 52)) as u32;
    if shift > 53 {
        return sign;
    }
    let mut m = significand >> shift;
    let rem = significand & ((1u64 << shift) - 1);
    let half = 1u64 << (shift - 1);
    if rem > half || (rem == half && m & 1 == 1) {
        m += 1;
    }
    if e >= min_normal {
        let mut biased = (e + bias) as u64;
        if m == 1u64 << (mantissa_bits + 1) {
            m >>= 1;
            biased += 1;
        }
        if biased >= exp_mask as u64 {
            return inf;
        }
        sign | ((biased as u16) << mantissa_bits) | ((m as u16) & ((1 << mantissa_bits) - 1))
    } else {
        // Subnormal; a carry into the hidden bit yields the smallest normal.
        sign | m as u16
    }
}

pub(crate) fn element_count(shape: &[usize]) -> Option<usize> {
    shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
}

impl Tensor {
    pub fn from_bytes(dtype: DType, shape: Vec<usize>, data: Vec<u8>) -> Result<Self> {
        let numel = element_count(&shape).ok_or_else(|| Error::InvalidTensor {
            name: String::new(),
            detail: format!("shape {shape:?} overflows"),
        })?;
        if numel.checked_mul(dtype.size()) != Some(data.len()) {
            return Err(Error::InvalidTensor {
                name: String::new(),
                detail: format!(
                    "shape {shape:?} needs {numel} {dtype} elements, buffer holds {} bytes",
                    data.len()
                ),
            });
        }
        Ok(Self { dtype, shape, data })
    }

    /// Encodes `values` in `dtype`, rounding to nearest-even where the dtype is narrower.
    pub fn from_f64(dtype: DType, shape: Vec<usize>, values: &[f64]) -> Result<Self> {
        let mut data = Vec::with_capacity(values.len() * dtype.size());
        match dtype {
            DType::F64 => values
                .iter()
                .for_each(|v| data.extend_from_slice(&v.to_le_bytes())),
            DType::F32 => values
                .iter()
                .for_each(|&v| data.extend_from_slice(&(v as f32).to_le_bytes())),
            DType::F16 => values
                .iter()
                .for_each(|&v| data.extend_from_slice(&narrow_float(v, F16_FORMAT).to_le_bytes())),
            DType::BF16 => values
                .iter()
                .for_each(|&v| data.extend_from_slice(&narrow_float(v, BF16_FORMAT).to_le_bytes())),
        }
        Self::from_bytes(dtype, shape, data)
    }

    pub fn from_f32(shape: Vec<usize>, values: &[f32]) -> Result<Self> {
        let data = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        Self::from_bytes(DType::F32, shape, data)
    }

    pub fn scalar(dtype: DType, value: f64) -> Self {
        Self::from_f64(dtype, Vec::new(), &[value]).expect("scalar shape is always valid")
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len() / self.dtype.size()
    }

    pub fn bytes(&self) -> &[u8] {
        &self.data
    }

    /// Decodes every element to `f64` (exact for all supported dtypes).
    pub fn to_f64(&self) -> Vec<f64> {
        match self.dtype {
            DType::F64 => self
                .data
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
            DType::F32 => self
                .data
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect(),
            DType::F16 => self
                .data
                .chunks_exact(2)
                .map(|c| f16::from_le_bytes([c[0], c[1]]).to_f64())
                .collect(),
            DType::BF16 => self
                .data
                .chunks_exact(2)
                .map(|c| bf16::from_le_bytes([c[0], c[1]]).to_f64())
                .collect(),
        }
    }

    /// A tensor of the same dtype and shape carrying new values.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        Self::from_f64(self.dtype, self.shape.clone(), values)
    }
}
