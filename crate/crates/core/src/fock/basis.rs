use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncated two-mode Fock basis {|m, n⟩ : m + n ≤ n_max}.
///
/// States are ordered layer by layer, so the photon-number-N layer occupies a
/// contiguous index range. Inside a layer the index grows with m, the
/// number of right-circular photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockBasis {
    pub n_max: usize,
}

impl FockBasis {
    pub fn new(n_max: usize) -> Self {
        Self { n_max }
    }

    pub fn dim(&self) -> usize {
        (self.n_max + 1) * (self.n_max + 2) / 2
    }

    pub fn layer_offset(n: usize) -> usize {
        n * (n + 1) / 2
    }

    pub fn layer_range(&self, n: usize) -> Range<usize> {
        let start = Self::layer_offset(n);
        start..start + n + 1
    }

    /// Flat index of |m, n⟩.
    pub fn index(&self, m: usize, n: usize) -> Result<usize> {
        let total = m + n;
        if total > self.n_max {
            return Err(Error::Truncation {
                requested: total,
                n_max: self.n_max,
            });
        }
        Ok(Self::layer_offset(total) + m)
    }

    /// Inverse of [`FockBasis::index`].
    pub fn pair(&self, idx: usize) -> (usize, usize) {
        // Largest N with N(N+1)/2 <= idx.
        let mut total = (((8 * idx + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
        while Self::layer_offset(total + 1) <= idx {
            total += 1;
        }
        while Self::layer_offset(total) > idx {
            total -= 1;
        }
        let m = idx - Self::layer_offset(total);
        (m, total - m)
    }

    pub fn layers(&self) -> Range<usize> {
        0..self.n_max + 1
    }

    pub fn check_layer(&self, n: usize) -> Result<()> {
        if n > self.n_max {
            return Err(Error::Truncation {
                requested: n,
                n_max: self.n_max,
            });
        }
        Ok(())
    }

    pub fn check_same(&self, other: &FockBasis) -> Result<()> {
        if self.n_max != other.n_max {
            return Err(Error::BasisMismatch {
                left: self.n_max,
                right: other.n_max,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_is_a_bijection() {
        let b = FockBasis::new(9);
        assert_eq!(b.dim(), 55);
        let mut seen = vec![false; b.dim()];
        for total in 0..=9 {
            for m in 0..=total {
                let idx = b.index(m, total - m).unwrap();
                assert!(b.layer_range(total).contains(&idx));
                assert!(!seen[idx]);
                seen[idx] = true;
                assert_eq!(b.pair(idx), (m, total - m));
            }
        }
        assert!(seen.into_iter().all(|s| s));
        assert!(b.index(5, 5).is_err());
    }
}
