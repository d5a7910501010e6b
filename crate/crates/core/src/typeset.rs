use alloc::vec::Vec;
use core::fmt;

/// A set of element-type indexes backed by a bitset.
///
/// Iteration is in ascending index order, which is declaration order for the
/// owning DTD.
#[derive(Clone, Default)]
pub struct TypeSet {
    words: Vec<u64>,
}

impl TypeSet {
    pub fn new() -> Self {
        TypeSet { words: Vec::new() }
    }

    pub fn singleton(i: usize) -> Self {
        let mut s = TypeSet::new();
        s.insert(i);
        s
    }

    pub fn insert(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, i % 64);
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        let had = self.words[w] & (1 << b) != 0;
        self.words[w] |= 1 << b;
        !had
    }

    pub fn remove(&mut self, i: usize) {
        let (w, b) = (i / 64, i % 64);
        if w < self.words.len() {
            self.words[w] &= !(1 << b);
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        let (w, b) = (i / 64, i % 64);
        w < self.words.len() && self.words[w] & (1 << b) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Adds every member of `other`; returns true if anything changed.
    pub fn union_with(&mut self, other: &TypeSet) -> bool {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        let mut changed = false;
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            let n = *a | *b;
            changed |= n != *a;
            *a = n;
        }
        changed
    }

    pub fn intersect(&self, other: &TypeSet) -> TypeSet {
        let words = self.words.iter().zip(other.words.iter()).map(|(a, b)| a & b).collect();
        TypeSet { words }
    }

    pub fn is_subset(&self, other: &TypeSet) -> bool {
        self.words
            .iter()
            .enumerate()
            .all(|(i, &w)| w & !other.words.get(i).copied().unwrap_or(0) == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            core::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }
}

impl PartialEq for TypeSet {
    fn eq(&self, other: &Self) -> bool {
        let n = self.words.len().max(other.words.len());
        (0..n).all(|i| self.words.get(i).copied().unwrap_or(0) == other.words.get(i).copied().unwrap_or(0))
    }
}

impl Eq for TypeSet {}

impl FromIterator<usize> for TypeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = TypeSet::new();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for TypeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_iter_order() {
        let s: TypeSet = [70, 3, 64, 3, 0].into_iter().collect();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 3, 64, 70]);
        assert_eq!(s.len(), 4);
        assert!(s.contains(64) && !s.contains(65));
    }

    #[test]
    fn union_and_intersect() {
        let mut a: TypeSet = [1, 2].into_iter().collect();
        let b: TypeSet = [2, 100].into_iter().collect();
        assert_eq!(a.intersect(&b).iter().collect::<Vec<_>>(), vec![2]);
        assert!(a.union_with(&b));
        assert!(!a.union_with(&b));
        assert!(b.is_subset(&a));
        assert!(!a.is_subset(&b));
    }

    #[test]
    fn equality_ignores_trailing_words() {
        let mut a = TypeSet::singleton(200);
        a.remove(200);
        assert!(a.is_empty());
        assert!(a.is_subset(&TypeSet::new()));
        assert_eq!(a, TypeSet::new());
    }
}
