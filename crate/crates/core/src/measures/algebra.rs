use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// A subset of the algebra's universe.
pub type Member = BTreeSet<usize>;

/// Upper limit on the number of atoms; the algebra has `2^atoms` members.
pub const MAX_ATOMS: usize = 20;

/// Finite algebra of subsets of `{0, .., universe - 1}`.
///
/// Stored through its atoms (the blocks of the partition generated by the
/// generators); members are exactly the unions of atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct SetAlgebra {
    universe: usize,
    atoms: Vec<Member>,
    members: Vec<Member>,
    index: BTreeMap<Member, usize>,
}

impl SetAlgebra {
    /// Smallest algebra on `{0, .., universe - 1}` containing `generators`.
    pub fn close(universe: usize, generators: &[Member]) -> Result<Self> {
        if universe == 0 {
            return Err(Error::domain("algebra over an empty universe"));
        }
        if let Some(x) = generators.iter().flatten().find(|&&x| x >= universe) {
            return Err(Error::domain(format!(
                "generator element {x} lies outside the universe of {universe} points"
            )));
        }
        // points with the same membership signature share an atom
        let mut blocks: BTreeMap<Vec<bool>, Member> = BTreeMap::new();
        for x in 0..universe {
            let sig: Vec<bool> = generators.iter().map(|g| g.contains(&x)).collect();
            blocks.entry(sig).or_default().insert(x);
        }
        let mut atoms: Vec<Member> = blocks.into_values().collect();
        atoms.sort_by_key(|a| *a.iter().next().expect("atoms are nonempty"));
        Self::from_atoms(universe, atoms)
    }

    fn from_atoms(universe: usize, atoms: Vec<Member>) -> Result<Self> {
        if atoms.len() > MAX_ATOMS {
            return Err(Error::domain(format!(
                "generated algebra has {} atoms (limit {MAX_ATOMS})",
                atoms.len()
            )));
        }
        let mut members: Vec<Member> = (0u64..(1u64 << atoms.len()))
            .map(|mask| {
                atoms
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .flat_map(|(_, a)| a.iter().copied())
                    .collect()
            })
            .collect();
        members.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let index = members
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        Ok(SetAlgebra {
            universe,
            atoms,
            members,
            index,
        })
    }

    /// The algebra whose atoms are the singletons.
    pub fn power_set(universe: usize) -> Result<Self> {
        Self::close(
            universe,
            &(0..universe).map(|x| Member::from([x])).collect::<Vec<_>>(),
        )
    }

    pub fn universe_size(&self) -> usize {
        self.universe
    }

    pub fn universe(&self) -> Member {
        (0..self.universe).collect()
    }

    pub fn atoms(&self) -> &[Member] {
        &self.atoms
    }

    /// Members ordered by size, then lexicographically.
    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, set: &Member) -> bool {
        self.index.contains_key(set)
    }

    pub fn index_of(&self, set: &Member) -> Option<usize> {
        self.index.get(set).copied()
    }

    pub fn complement(&self, set: &Member) -> Member {
        (0..self.universe).filter(|x| !set.contains(x)).collect()
    }

    /// Exhaustive closure check under complement and pairwise union.
    pub fn is_closed(&self) -> bool {
        self.contains(&Member::new())
            && self.contains(&self.universe())
            && self.members.iter().all(|a| {
                self.contains(&self.complement(a))
                    && self
                        .members
                        .iter()
                        .all(|b| self.contains(&a.union(b).copied().collect()))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[usize]) -> Member {
        xs.iter().copied().collect()
    }

    #[test]
    fn trivial_algebra() {
        let a = SetAlgebra::close(3, &[]).unwrap();
        assert_eq!(a.members(), &[set(&[]), set(&[0, 1, 2])]);
    }

    #[test]
    fn one_generator() {
        let a = SetAlgebra::close(3, &[set(&[0])]).unwrap();
        assert_eq!(
            a.members(),
            &[set(&[]), set(&[0]), set(&[1, 2]), set(&[0, 1, 2])]
        );
        assert!(a.is_closed());
    }

    #[test]
    fn crossing_generators() {
        let a = SetAlgebra::close(4, &[set(&[0, 1]), set(&[1, 2])]).unwrap();
        assert_eq!(a.atoms().len(), 4);
        assert_eq!(a.len(), 16);
        assert!(a.is_closed());
    }

    #[test]
    fn errors() {
        assert!(SetAlgebra::close(2, &[set(&[5])]).is_err());
        assert!(SetAlgebra::close(0, &[]).is_err());
        assert!(SetAlgebra::power_set(MAX_ATOMS + 1).is_err());
        assert_eq!(SetAlgebra::power_set(3).unwrap().len(), 8);
    }
}
