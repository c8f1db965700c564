//! Vertex set with O(1) membership, insertion, removal and uniform sampling.

use rand::Rng;
use rustc_hash::FxHashMap;

/// Dense vector of members plus a position index.
///
/// Removal swaps the last element into the hole. `restore` undoes a removal
/// exactly (including element order), which the phase journal relies on.
#[derive(Clone, Debug, Default)]
pub struct IndexedSet {
    items: Vec<u32>,
    pos: FxHashMap<u32, u32>,
}

impl PartialEq for IndexedSet {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items
    }
}

impl Eq for IndexedSet {}

impl IndexedSet {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.items.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    #[inline]
    pub fn contains(&self, x: u32) -> bool {
        self.pos.contains_key(&x)
    }

    /// Appends `x`; returns false if already present.
    pub fn insert(&mut self, x: u32) -> bool {
        if self.pos.contains_key(&x) {
            return false;
        }
        self.pos.insert(x, self.items.len() as u32);
        self.items.push(x);
        true
    }

    /// Removes `x` and returns the slot it occupied.
    pub fn remove(&mut self, x: u32) -> Option<usize> {
        let p = self.pos.remove(&x)? as usize;
        let last = self.items.pop().expect("position map out of sync");
        if p < self.items.len() {
            self.items[p] = last;
            self.pos.insert(last, p as u32);
        }
        Some(p)
    }

    /// Inverse of a `remove(x)` that returned `p`. Must be applied in LIFO order.
    pub fn restore(&mut self, x: u32, p: usize) {
        let end = self.items.len();
        self.items.push(x);
        self.pos.insert(x, end as u32);
        if p < end {
            self.items.swap(p, end);
            self.pos.insert(self.items[p], p as u32);
            self.pos.insert(self.items[end], end as u32);
        }
    }

    /// Inverse of the most recent successful `insert`.
    pub fn pop_last(&mut self) -> Option<u32> {
        let x = self.items.pop()?;
        self.pos.remove(&x);
        Some(x)
    }

    #[inline]
    pub fn as_slice(&self) -> &[u32] {
        &self.items
    }

    pub fn iter(&self) -> std::iter::Copied<std::slice::Iter<'_, u32>> {
        self.items.iter().copied()
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<u32> {
        if self.items.is_empty() {
            None
        } else {
            // Sets never approach 2^32 entries; a u32 draw halves RNG use.
            Some(self.items[rng.gen_range(0..self.items.len() as u32) as usize])
        }
    }

    pub fn clear(&mut self) {
        self.items.clear();
        self.pos.clear();
    }

    pub fn sorted(&self) -> Vec<u32> {
        let mut v = self.items.clone();
        v.sort_unstable();
        v
    }
}

impl FromIterator<u32> for IndexedSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        let mut s = IndexedSet::new();
        for x in iter {
            s.insert(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn insert_remove_roundtrip() {
        let mut s = IndexedSet::new();
        assert!(s.insert(3));
        assert!(s.insert(7));
        assert!(!s.insert(3));
        assert_eq!(s.remove(3), Some(0));
        assert_eq!(s.as_slice(), &[7]);
        assert_eq!(s.remove(3), None);
    }

    proptest! {
        #[test]
        fn restore_is_exact_inverse(xs in proptest::collection::vec(0u32..50, 1..40), pick in 0usize..40) {
            let s: IndexedSet = xs.iter().copied().collect();
            let target = s.as_slice()[pick % s.len()];
            let mut t = s.clone();
            let p = t.remove(target).unwrap();
            prop_assert!(!t.contains(target));
            t.restore(target, p);
            prop_assert_eq!(t.as_slice(), s.as_slice());
            for (i, &x) in t.as_slice().iter().enumerate() {
                prop_assert_eq!(t.pos[&x] as usize, i);
            }
        }
    }
}
