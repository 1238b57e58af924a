//! Dense multi-index tensors and their interchange formats.
//!
//! Entries are stored row-major with the last index fastest, matching the
//! innermost-sum convention of the mixed norms. Desk scale is enforced at
//! every construction site: order ≤ 16 and at most 10^6 entries, checked
//! before any allocation sized from untrusted input.
//!
//! Two interchange formats:
//! - JSON: `{"shape":[...],"scalar_field":"real"|"complex","entries":[...]}`
//!   with complex entries as `[re,im]` pairs; written canonically (fixed key
//!   order, `%.17g` floats, no whitespace).
//! - Binary: magic `HLGT`, version byte, field byte (0 real, 1 complex),
//!   order byte, one reserved zero byte, `order` u32 dims, then the entries
//!   as little-endian f64 (complex interleaved re, im).

use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

use crate::numfmt::g17;
use crate::scalar::{Scalar, ScalarField};

/// Largest admissible entry count: keeps every operation at desk scale and
/// bounds allocations driven by untrusted headers.
pub const MAX_ENTRIES: usize = 1_000_000;
/// Largest admissible tensor order.
pub const MAX_ORDER: usize = 16;

pub const BINARY_MAGIC: [u8; 4] = *b"HLGT";
pub const BINARY_VERSION: u8 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TensorError {
    #[error("tensor shape must have at least one axis")]
    EmptyShape,
    #[error("tensor order {order} exceeds the maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("axis {axis} has zero extent")]
    ZeroDim { axis: usize },
    #[error("shape implies {entries} entries, above the maximum {max}")]
    TooLarge { entries: u128, max: usize },
    #[error("shape implies {expected} entries but {got} were provided")]
    EntryCount { expected: usize, got: usize },
    #[error("entry at flat index {index} is not finite")]
    NonFinite { index: usize },
    #[error("axis permutation must rearrange 0..order exactly")]
    BadPermutation,
}

/// Validates a shape and returns the entry count it implies.
pub fn validate_shape(shape: &[usize]) -> Result<usize, TensorError> {
    if shape.is_empty() {
        return Err(TensorError::EmptyShape);
    }
    if shape.len() > MAX_ORDER {
        return Err(TensorError::OrderTooLarge {
            order: shape.len(),
            max: MAX_ORDER,
        });
    }
    let mut product: u128 = 1;
    for (axis, &n) in shape.iter().enumerate() {
        if n == 0 {
            return Err(TensorError::ZeroDim { axis });
        }
        product *= n as u128;
        if product > MAX_ENTRIES as u128 {
            return Err(TensorError::TooLarge {
                entries: product,
                max: MAX_ENTRIES,
            });
        }
    }
    Ok(product as usize)
}

/// Calls `f` on every multi-index of `shape` in row-major order (last index
/// fastest). The slice passed to `f` is reused between calls.
pub fn for_each_index(shape: &[usize], mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; shape.len()];
    loop {
        f(&idx);
        let mut axis = shape.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < shape[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Dense scalar tensor indexed by multi-indices `(j_1, …, j_m)`, 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexTensor<S: Scalar> {
    shape: Vec<usize>,
    entries: Vec<S>,
}

impl<S: Scalar> MultiIndexTensor<S> {
    pub fn new(shape: Vec<usize>, entries: Vec<S>) -> Result<Self, TensorError> {
        let expected = validate_shape(&shape)?;
        if entries.len() != expected {
            return Err(TensorError::EntryCount {
                expected,
                got: entries.len(),
            });
        }
        if let Some(index) = entries.iter().position(|e| !e.is_finite_scalar()) {
            return Err(TensorError::NonFinite { index });
        }
        Ok(MultiIndexTensor { shape, entries })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self, TensorError> {
        let n = validate_shape(shape)?;
        Ok(MultiIndexTensor {
            shape: shape.to_vec(),
            entries: vec![S::zero(); n],
        })
    }

    pub fn from_fn(
        shape: &[usize],
        mut f: impl FnMut(&[usize]) -> S,
    ) -> Result<Self, TensorError> {
        let n = validate_shape(shape)?;
        let mut entries = Vec::with_capacity(n);
        for_each_index(shape, |idx| entries.push(f(idx)));
        MultiIndexTensor::new(shape.to_vec(), entries)
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn field(&self) -> ScalarField {
        S::FIELD
    }

    /// Row-major strides, last axis stride 1.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.shape.len()];
        for axis in (0..self.shape.len().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * self.shape[axis + 1];
        }
        strides
    }

    pub fn linear_index(&self, idx: &[usize]) -> Option<usize> {
        if idx.len() != self.shape.len() {
            return None;
        }
        let mut linear = 0usize;
        for (axis, (&i, &n)) in idx.iter().zip(&self.shape).enumerate() {
            if i >= n {
                return None;
            }
            let _ = axis;
            linear = linear * n + i;
        }
        Some(linear)
    }

    pub fn get(&self, idx: &[usize]) -> Option<S> {
        self.linear_index(idx).map(|i| self.entries[i])
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.modulus()).collect()
    }

    pub fn scale(&self, factor: S) -> Result<Self, TensorError> {
        MultiIndexTensor::new(
            self.shape.clone(),
            self.entries.iter().map(|&e| e * factor).collect(),
        )
    }

    /// Reindexes so that new axis `a` is old axis `perm[a]`.
    pub fn permute_axes(&self, perm: &[usize]) -> Result<Self, TensorError> {
        let m = self.order();
        if perm.len() != m {
            return Err(TensorError::BadPermutation);
        }
        let mut seen = vec![false; m];
        for &a in perm {
            if a >= m || seen[a] {
                return Err(TensorError::BadPermutation);
            }
            seen[a] = true;
        }
        let new_shape: Vec<usize> = perm.iter().map(|&a| self.shape[a]).collect();
        let strides = self.strides();
        let mut entries = Vec::with_capacity(self.len());
        for_each_index(&new_shape, |idx| {
            let mut linear = 0usize;
            for (a, &i) in idx.iter().enumerate() {
                linear += strides[perm[a]] * i;
            }
            entries.push(self.entries[linear]);
        });
        Ok(MultiIndexTensor {
            shape: new_shape,
            entries,
        })
    }
}

/// Field-erased tensor as read from an interchange format.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    Real(MultiIndexTensor<f64>),
    Complex(MultiIndexTensor<Complex64>),
}

impl TensorData {
    pub fn field(&self) -> ScalarField {
        match self {
            TensorData::Real(_) => ScalarField::Real,
            TensorData::Complex(_) => ScalarField::Complex,
        }
    }

    pub fn shape(&self) -> &[usize] {
        match self {
            TensorData::Real(t) => t.shape(),
            TensorData::Complex(t) => t.shape(),
        }
    }

    pub fn order(&self) -> usize {
        self.shape().len()
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::Real(t) => t.len(),
            TensorData::Complex(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_real(&self) -> Option<&MultiIndexTensor<f64>> {
        match self {
            TensorData::Real(t) => Some(t),
            TensorData::Complex(_) => None,
        }
    }

    pub fn as_complex(&self) -> Option<&MultiIndexTensor<Complex64>> {
        match self {
            TensorData::Complex(t) => Some(t),
            TensorData::Real(_) => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum TensorIoError {
    #[error("malformed tensor JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("unknown scalar_field `{0}`; expected `real` or `complex`")]
    UnknownField(String),
    #[error("entry {index} does not match the declared scalar field")]
    EntryKind { index: usize },
    #[error("bad magic bytes; not an HLGT tensor file")]
    BadMagic,
    #[error("unsupported binary version {0}")]
    BadVersion(u8),
    #[error("bad scalar field tag {0}; expected 0 (real) or 1 (complex)")]
    BadFieldTag(u8),
    #[error("reserved header byte must be zero")]
    BadReserved,
    #[error("file truncated: needed {needed} bytes, found {got}")]
    Truncated { needed: usize, got: usize },
    #[error("{extra} trailing bytes after the entry payload")]
    TrailingBytes { extra: usize },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTensorJson {
    shape: Vec<u64>,
    scalar_field: String,
    entries: Vec<serde_json::Value>,
}

fn shape_from_u64(raw: &[u64]) -> Result<Vec<usize>, TensorError> {
    // Clamp oversized dims into the validator's range check instead of
    // overflowing usize on 32-bit hosts.
    let shape: Vec<usize> = raw
        .iter()
        .map(|&n| usize::try_from(n).unwrap_or(MAX_ENTRIES + 1))
        .collect();
    validate_shape(&shape)?;
    Ok(shape)
}

impl TensorData {
    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self, TensorIoError> {
        let raw: RawTensorJson =
            serde_json::from_slice(bytes).map_err(|e| TensorIoError::Json(e.to_string()))?;
        let shape = shape_from_u64(&raw.shape)?;
        let expected = validate_shape(&shape)?;
        if raw.entries.len() != expected {
            return Err(TensorError::EntryCount {
                expected,
                got: raw.entries.len(),
            }
            .into());
        }
        match raw.scalar_field.as_str() {
            "real" => {
                let mut entries = Vec::with_capacity(expected);
                for (index, v) in raw.entries.iter().enumerate() {
                    let x = v
                        .as_f64()
                        .ok_or(TensorIoError::EntryKind { index })?;
                    entries.push(x);
                }
                Ok(TensorData::Real(MultiIndexTensor::new(shape, entries)?))
            }
            "complex" => {
                let mut entries = Vec::with_capacity(expected);
                for (index, v) in raw.entries.iter().enumerate() {
                    let pair = v
                        .as_array()
                        .filter(|a| a.len() == 2)
                        .ok_or(TensorIoError::EntryKind { index })?;
                    let re = pair[0].as_f64().ok_or(TensorIoError::EntryKind { index })?;
                    let im = pair[1].as_f64().ok_or(TensorIoError::EntryKind { index })?;
                    entries.push(Complex64::new(re, im));
                }
                Ok(TensorData::Complex(MultiIndexTensor::new(shape, entries)?))
            }
            other => Err(TensorIoError::UnknownField(other.to_string())),
        }
    }

    /// Canonical JSON: fixed key order, `%.17g` floats, no whitespace.
    pub fn to_json_string(&self) -> String {
        let mut out = String::from("{\"shape\":[");
        for (i, n) in self.shape().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&n.to_string());
        }
        out.push_str("],\"scalar_field\":\"");
        out.push_str(self.field().as_str());
        out.push_str("\",\"entries\":[");
        match self {
            TensorData::Real(t) => {
                for (i, e) in t.entries().iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&g17(*e));
                }
            }
            TensorData::Complex(t) => {
                for (i, e) in t.entries().iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('[');
                    out.push_str(&g17(e.re));
                    out.push(',');
                    out.push_str(&g17(e.im));
                    out.push(']');
                }
            }
        }
        out.push_str("]}");
        out
    }

    pub fn from_binary_bytes(bytes: &[u8]) -> Result<Self, TensorIoError> {
        const HEADER: usize = 8;
        if bytes.len() < HEADER {
            return Err(TensorIoError::Truncated {
                needed: HEADER,
                got: bytes.len(),
            });
        }
        if bytes[0..4] != BINARY_MAGIC {
            return Err(TensorIoError::BadMagic);
        }
        if bytes[4] != BINARY_VERSION {
            return Err(TensorIoError::BadVersion(bytes[4]));
        }
        let field = match bytes[5] {
            0 => ScalarField::Real,
            1 => ScalarField::Complex,
            tag => return Err(TensorIoError::BadFieldTag(tag)),
        };
        if bytes[7] != 0 {
            return Err(TensorIoError::BadReserved);
        }
        let order = bytes[6] as usize;
        if order == 0 || order > MAX_ORDER {
            return Err(TensorError::OrderTooLarge {
                order,
                max: MAX_ORDER,
            }
            .into());
        }
        let shape_end = HEADER + 4 * order;
        if bytes.len() < shape_end {
            return Err(TensorIoError::Truncated {
                needed: shape_end,
                got: bytes.len(),
            });
        }
        let shape: Vec<usize> = (0..order)
            .map(|k| {
                let off = HEADER + 4 * k;
                u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize
            })
            .collect();
        // Size check precedes any payload-sized allocation.
        let count = validate_shape(&shape)?;
        let floats_per_entry = match field {
            ScalarField::Real => 1,
            ScalarField::Complex => 2,
        };
        let payload = count * floats_per_entry * 8;
        let expected_len = shape_end + payload;
        if bytes.len() < expected_len {
            return Err(TensorIoError::Truncated {
                needed: expected_len,
                got: bytes.len(),
            });
        }
        if bytes.len() > expected_len {
            return Err(TensorIoError::TrailingBytes {
                extra: bytes.len() - expected_len,
            });
        }
        let mut floats = Vec::with_capacity(count * floats_per_entry);
        for k in 0..count * floats_per_entry {
            let off = shape_end + 8 * k;
            floats.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
        }
        match field {
            ScalarField::Real => Ok(TensorData::Real(MultiIndexTensor::new(shape, floats)?)),
            ScalarField::Complex => {
                let entries: Vec<Complex64> = floats
                    .chunks_exact(2)
                    .map(|c| Complex64::new(c[0], c[1]))
                    .collect();
                Ok(TensorData::Complex(MultiIndexTensor::new(shape, entries)?))
            }
        }
    }

    pub fn to_binary_bytes(&self) -> Vec<u8> {
        let order = self.order();
        let mut out = Vec::with_capacity(8 + 4 * order + self.len() * 16);
        out.extend_from_slice(&BINARY_MAGIC);
        out.push(BINARY_VERSION);
        out.push(match self.field() {
            ScalarField::Real => 0,
            ScalarField::Complex => 1,
        });
        out.push(order as u8);
        out.push(0);
        for &n in self.shape() {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        match self {
            TensorData::Real(t) => {
                for e in t.entries() {
                    out.extend_from_slice(&e.to_le_bytes());
                }
            }
            TensorData::Complex(t) => {
                for e in t.entries() {
                    out.extend_from_slice(&e.re.to_le_bytes());
                    out.extend_from_slice(&e.im.to_le_bytes());
                }
            }
        }
        out
    }
}
