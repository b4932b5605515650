use std::collections::BTreeMap;
use std::fmt;

use petgraph::unionfind::UnionFind;

/// A partition of a finite ground set into disjoint nonempty classes.
///
/// Stored canonically: each class sorted, classes ordered by their least
/// element. Two partitions of the same ground set compare equal iff they have
/// the same classes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Partition<L: Ord + Clone = u32> {
    classes: Vec<Vec<L>>,
}

impl<L: Ord + Clone> Partition<L> {
    /// Canonicalizes the given classes. Empty classes are dropped.
    ///
    /// Panics if the classes are not pairwise disjoint.
    pub fn from_classes(classes: impl IntoIterator<Item = Vec<L>>) -> Self {
        let mut out: Vec<Vec<L>> = classes
            .into_iter()
            .filter(|c| !c.is_empty())
            .map(|mut c| {
                c.sort();
                c.dedup();
                c
            })
            .collect();
        out.sort();
        let mut seen = std::collections::BTreeSet::new();
        for c in &out {
            for x in c {
                assert!(seen.insert(x.clone()), "partition classes overlap");
            }
        }
        Self { classes: out }
    }

    /// The partition of `ground` into singletons.
    pub fn discrete(ground: impl IntoIterator<Item = L>) -> Self {
        Self::from_classes(ground.into_iter().map(|x| vec![x]))
    }

    /// The one-class partition of `ground`.
    pub fn trivial(ground: impl IntoIterator<Item = L>) -> Self {
        Self::from_classes(std::iter::once(ground.into_iter().collect()))
    }

    /// The equivalence closure of `pairs` on `ground`. Pairs mentioning
    /// elements outside the ground set are ignored.
    pub fn from_pairs(ground: &[L], pairs: impl IntoIterator<Item = (L, L)>) -> Self {
        let index: BTreeMap<&L, usize> = ground.iter().enumerate().map(|(i, x)| (x, i)).collect();
        let mut uf = UnionFind::<usize>::new(ground.len());
        for (a, b) in pairs {
            if let (Some(&i), Some(&j)) = (index.get(&a), index.get(&b)) {
                uf.union(i, j);
            }
        }
        let mut groups: BTreeMap<usize, Vec<L>> = BTreeMap::new();
        for (i, x) in ground.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().push(x.clone());
        }
        Self::from_classes(groups.into_values())
    }

    pub fn classes(&self) -> &[Vec<L>] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn ground(&self) -> Vec<L> {
        let mut g: Vec<L> = self.classes.iter().flatten().cloned().collect();
        g.sort();
        g
    }

    /// Index of the class containing `x`.
    pub fn class_index(&self, x: &L) -> Option<usize> {
        self.classes.iter().position(|c| c.binary_search(x).is_ok())
    }

    pub fn class_of(&self, x: &L) -> Option<&[L]> {
        self.class_index(x).map(|i| self.classes[i].as_slice())
    }

    pub fn same_class(&self, a: &L, b: &L) -> bool {
        matches!((self.class_index(a), self.class_index(b)), (Some(i), Some(j)) if i == j)
    }

    /// The least element of each class.
    pub fn representatives(&self) -> Vec<L> {
        self.classes.iter().map(|c| c[0].clone()).collect()
    }

    /// The representative (least element) of the class containing `x`.
    pub fn representative(&self, x: &L) -> Option<L> {
        self.class_of(x).map(|c| c[0].clone())
    }

    /// True if every class of `self` lies inside some class of `other`.
    pub fn refines(&self, other: &Self) -> bool {
        self.classes.iter().all(|c| {
            other
                .class_index(&c[0])
                .map(|k| c.iter().all(|x| other.classes[k].binary_search(x).is_ok()))
                .unwrap_or(false)
        })
    }
}

impl<L: Ord + Clone + fmt::Debug> fmt::Debug for Partition<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.classes.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_of_pairs() {
        let p = Partition::from_pairs(&[0u32, 1, 2, 3, 4], vec![(0, 2), (2, 4), (1, 1)]);
        assert_eq!(p.classes(), &[vec![0, 2, 4], vec![1], vec![3]]);
        assert!(p.same_class(&0, &4));
        assert!(!p.same_class(&0, &1));
        assert_eq!(p.representative(&4), Some(0));
        assert_eq!(p.representatives(), vec![0, 1, 3]);
    }

    #[test]
    fn refinement() {
        let fine = Partition::discrete(vec![0u32, 1, 2]);
        let coarse = Partition::trivial(vec![0u32, 1, 2]);
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
        assert_eq!(coarse.ground(), vec![0, 1, 2]);
    }

    #[test]
    #[should_panic]
    fn overlapping_classes_panic() {
        Partition::from_classes(vec![vec![0u32, 1], vec![1, 2]]);
    }
}
