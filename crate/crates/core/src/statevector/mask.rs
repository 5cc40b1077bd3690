use crate::error::{Error, Result};

/// A subset of basis indices stored as a packed bitset over `[0, len)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    len: usize,
    words: Vec<u64>,
}

impl Mask {
    pub fn empty(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_indices<I>(len: usize, indices: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut mask = Self::empty(len);
        for index in indices {
            if index >= len {
                return Err(Error::Index { index, len });
            }
            mask.words[index / 64] |= 1 << (index % 64);
        }
        Ok(mask)
    }

    pub fn from_predicate(len: usize, mut pred: impl FnMut(usize) -> bool) -> Self {
        let mut mask = Self::empty(len);
        for index in 0..len {
            if pred(index) {
                mask.words[index / 64] |= 1 << (index % 64);
            }
        }
        mask
    }

    /// Number of indices the mask ranges over (not the number selected).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    #[inline]
    pub fn contains(&self, index: usize) -> bool {
        index < self.len && (self.words[index / 64] >> (index % 64)) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn complement(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        Self {
            len: self.len,
            words,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + tz)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_index() {
        assert_eq!(
            Mask::from_indices(4, [1, 4]),
            Err(Error::Index { index: 4, len: 4 })
        );
    }

    #[test]
    fn complement_respects_length() {
        let mask = Mask::from_indices(70, [0, 65]).unwrap();
        let comp = mask.complement();
        assert_eq!(comp.count(), 68);
        assert!(!comp.contains(0) && !comp.contains(65) && comp.contains(69));
        assert!(!comp.contains(70));
    }

    #[test]
    fn iter_yields_sorted_members() {
        let mask = Mask::from_indices(200, [130, 3, 64, 199]).unwrap();
        assert_eq!(mask.iter().collect::<Vec<_>>(), vec![3, 64, 130, 199]);
    }
}
