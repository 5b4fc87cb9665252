//! Mixed-radix indexing shared by every dense tensor in the crate.
//!
//! Tuples are flattened row-major with the first component most significant.

use crate::error::{Error, Result};

/// A mixed-radix number system over a list of digit sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Radix {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl Radix {
    pub fn new(sizes: &[usize]) -> Self {
        let mut strides = vec![1; sizes.len()];
        let mut total = 1usize;
        for i in (0..sizes.len()).rev() {
            strides[i] = total;
            total = total
                .checked_mul(sizes[i])
                .expect("tensor size overflows usize");
        }
        Self {
            sizes: sizes.to_vec(),
            strides,
            total,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn stride(&self, digit: usize) -> usize {
        self.strides[digit]
    }

    /// Flattens `digits`, checking every digit against its size.
    pub fn encode(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.sizes.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected a tuple of length {}, got {}",
                self.sizes.len(),
                digits.len()
            )));
        }
        let mut idx = 0;
        for (pos, (&d, &s)) in digits.iter().zip(&self.sizes).enumerate() {
            if d >= s {
                return Err(Error::OutOfRange(format!(
                    "component {pos} is {d}, alphabet size {s}"
                )));
            }
            idx = idx * s + d;
        }
        Ok(idx)
    }

    /// Flattens without bounds checks; callers guarantee validity.
    pub fn encode_unchecked(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.sizes)
            .fold(0, |acc, (&d, &s)| acc * s + d)
    }

    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.sizes.len()];
        self.decode_into(&mut idx, &mut out);
        out
    }

    pub fn decode_into(&self, idx: &mut usize, out: &mut [usize]) {
        for i in (0..self.sizes.len()).rev() {
            out[i] = *idx % self.sizes[i];
            *idx /= self.sizes[i];
        }
    }

    /// Iterates over all tuples in flattening order.
    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.total).map(move |i| self.decode(i))
    }
}
