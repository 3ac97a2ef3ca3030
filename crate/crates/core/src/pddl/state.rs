/// Fixed-width bitset over the ground-atom universe of one `GroundedProblem`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    words: Box<[u64]>,
}

impl State {
    pub fn empty(num_atoms: usize) -> Self {
        State {
            words: vec![0; num_atoms.div_ceil(64)].into_boxed_slice(),
        }
    }

    pub fn from_indices(num_atoms: usize, indices: impl IntoIterator<Item = u32>) -> Self {
        let mut s = State::empty(num_atoms);
        for i in indices {
            s.insert(i);
        }
        s
    }

    #[inline]
    pub fn contains(&self, atom: u32) -> bool {
        self.words[(atom / 64) as usize] & (1u64 << (atom % 64)) != 0
    }

    #[inline]
    pub fn insert(&mut self, atom: u32) {
        self.words[(atom / 64) as usize] |= 1u64 << (atom % 64);
    }

    #[inline]
    pub fn remove(&mut self, atom: u32) {
        self.words[(atom / 64) as usize] &= !(1u64 << (atom % 64));
    }

    pub fn contains_all(&self, atoms: &[u32]) -> bool {
        atoms.iter().all(|&a| self.contains(a))
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64u32)
                .filter(move |b| bits & (1u64 << b) != 0)
                .map(move |b| w as u32 * 64 + b)
        })
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_operations() {
        let mut s = State::from_indices(130, [0, 64, 129]);
        assert!(s.contains(129) && !s.contains(1));
        s.remove(64);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 129]);
        assert_eq!(s.len(), 2);
        assert!(s.contains_all(&[0, 129]));
        assert!(!State::empty(3).contains_all(&[2]));
        assert!(State::empty(0).is_empty());
    }
}
