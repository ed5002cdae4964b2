//! Exact permutation-group algebra for small domains.
//!
//! Groups are stored as explicit, sorted element lists. Everything here is
//! sized for color classes of a few dozen points; there is deliberately no
//! Schreier-Sims machinery.

use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};

/// Default cap on explicit group orders (2 * q_max with q_max = 16).
pub const DEFAULT_GROUP_BOUND: usize = 32;

/// Cap used for groups that arise internally (automorphism groups of
/// three-class fragments, products during subdirect enumeration).
pub const INTERNAL_GROUP_BOUND: usize = 1 << 17;

/// A permutation of `0..n` in one-line notation: `image[i]` is where `i` goes.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    image: Vec<usize>,
}

impl std::fmt::Debug for Perm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Perm{:?}", self.image)
    }
}

impl Perm {
    pub fn identity(n: usize) -> Perm {
        Perm {
            image: (0..n).collect(),
        }
    }

    pub fn from_image(image: Vec<usize>) -> Result<Perm> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &v in &image {
            if v >= n || seen[v] {
                return Err(Error::Validation(format!(
                    "not a bijection of 0..{n}: {image:?}"
                )));
            }
            seen[v] = true;
        }
        Ok(Perm { image })
    }

    /// Builds the permutation mapping each `from[i]` to `to[i]` and fixing
    /// the remaining points.
    pub fn from_mapping(n: usize, from: &[usize], to: &[usize]) -> Result<Perm> {
        let mut image: Vec<usize> = (0..n).collect();
        for (&a, &b) in from.iter().zip(to) {
            image[a] = b;
        }
        Perm::from_image(image)
    }

    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Perm> {
        let mut image: Vec<usize> = (0..n).collect();
        for cycle in cycles {
            for i in 0..cycle.len() {
                image[cycle[i]] = cycle[(i + 1) % cycle.len()];
            }
        }
        Perm::from_image(image)
    }

    pub fn degree(&self) -> usize {
        self.image.len()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.image[x]
    }

    pub fn apply_tuple(&self, t: &[usize]) -> Vec<usize> {
        t.iter().map(|&x| self.image[x]).collect()
    }

    /// Function composition: `(a.compose(b))(x) = a(b(x))`.
    pub fn compose(&self, other: &Perm) -> Perm {
        debug_assert_eq!(self.degree(), other.degree());
        Perm {
            image: other.image.iter().map(|&x| self.image[x]).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut image = vec![0; self.image.len()];
        for (i, &v) in self.image.iter().enumerate() {
            image[v] = i;
        }
        Perm { image }
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn order(&self) -> usize {
        let mut p = self.clone();
        let mut k = 1;
        while !p.is_identity() {
            p = self.compose(&p);
            k += 1;
        }
        k
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    /// Restriction to an invariant subset, reindexed by position in `subset`
    /// (which must be sorted).
    pub fn restrict(&self, subset: &[usize]) -> Result<Perm> {
        let mut image = Vec::with_capacity(subset.len());
        for &p in subset {
            let q = self.image[p];
            match subset.binary_search(&q) {
                Ok(j) => image.push(j),
                Err(_) => {
                    return Err(Error::Validation(
                        "subset is not invariant under the permutation".into(),
                    ))
                }
            }
        }
        Perm::from_image(image)
    }

    pub fn fixes_setwise(&self, subset: &[usize]) -> bool {
        subset
            .iter()
            .all(|&p| subset.binary_search(&self.image[p]).is_ok())
    }
}

/// An explicit permutation group: full element list plus the generators it
/// was built from. Elements are kept sorted so groups compare and hash
/// deterministically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermGroup {
    domain: usize,
    elements: Vec<Perm>,
    generators: Vec<Perm>,
}

impl PermGroup {
    pub fn trivial(domain: usize) -> PermGroup {
        PermGroup {
            domain,
            elements: vec![Perm::identity(domain)],
            generators: vec![],
        }
    }

    /// Closes a generating set under composition and inverse.
    /// Fails with `GroupTooLarge` if the closure exceeds `bound`.
    pub fn close_generators_bounded(
        domain: usize,
        generators: &[Perm],
        bound: usize,
    ) -> Result<PermGroup> {
        for g in generators {
            if g.degree() != domain {
                return Err(Error::Validation(format!(
                    "generator degree {} does not match domain {domain}",
                    g.degree()
                )));
            }
        }
        let mut seen: HashSet<Perm> = HashSet::new();
        seen.insert(Perm::identity(domain));
        let mut queue: Vec<Perm> = vec![Perm::identity(domain)];
        while let Some(g) = queue.pop() {
            for h in generators {
                let gh = h.compose(&g);
                if !seen.contains(&gh) {
                    if seen.len() >= bound {
                        return Err(Error::GroupTooLarge { bound });
                    }
                    seen.insert(gh.clone());
                    queue.push(gh);
                }
            }
        }
        let mut elements: Vec<Perm> = seen.into_iter().collect();
        elements.sort();
        Ok(PermGroup {
            domain,
            elements,
            generators: generators.to_vec(),
        })
    }

    pub fn close_generators(domain: usize, generators: &[Perm]) -> Result<PermGroup> {
        Self::close_generators_bounded(domain, generators, DEFAULT_GROUP_BOUND)
    }

    /// Wraps an element list that is already known to be a group.
    pub fn from_elements(domain: usize, mut elements: Vec<Perm>) -> PermGroup {
        elements.sort();
        elements.dedup();
        let generators = elements.clone();
        PermGroup {
            domain,
            elements,
            generators,
        }
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    pub fn identity(&self) -> Perm {
        Perm::identity(self.domain)
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.elements.binary_search(p).is_ok()
    }

    pub fn is_subgroup_of(&self, other: &PermGroup) -> bool {
        self.elements.iter().all(|g| other.contains(g))
    }

    pub fn orbit(&self, point: usize) -> Vec<usize> {
        let mut orbit: BTreeSet<usize> = BTreeSet::new();
        for g in &self.elements {
            orbit.insert(g.apply(point));
        }
        orbit.into_iter().collect()
    }

    /// Orbit partition of the domain, each orbit sorted, ordered by minimum.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.domain];
        let mut out = Vec::new();
        for p in 0..self.domain {
            if !seen[p] {
                let orb = self.orbit(p);
                for &q in &orb {
                    seen[q] = true;
                }
                out.push(orb);
            }
        }
        out
    }

    /// Orbits of the componentwise action on `domain^k`, each orbit a sorted
    /// list of tuples, orbits ordered by their minimal tuple. For an
    /// invariant ordering across relabelings see `canon_order`.
    pub fn k_orbits(&self, k: usize) -> Vec<Vec<Vec<usize>>> {
        let mut orbits: Vec<Vec<Vec<usize>>> = Vec::new();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut tuple = vec![0usize; k];
        loop {
            if !seen.contains(&tuple) {
                let mut orb: BTreeSet<Vec<usize>> = BTreeSet::new();
                for g in &self.elements {
                    orb.insert(g.apply_tuple(&tuple));
                }
                for t in &orb {
                    seen.insert(t.clone());
                }
                orbits.push(orb.into_iter().collect());
            }
            // odometer
            let mut i = k;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                tuple[i] += 1;
                if tuple[i] < self.domain {
                    break;
                }
                tuple[i] = 0;
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX {
                break;
            }
            if k == 0 {
                break;
            }
        }
        orbits.sort_by(|a, b| a[0].cmp(&b[0]));
        orbits
    }

    pub fn tuple_orbit(&self, t: &[usize]) -> Vec<Vec<usize>> {
        let mut orb: BTreeSet<Vec<usize>> = BTreeSet::new();
        for g in &self.elements {
            orb.insert(g.apply_tuple(t));
        }
        orb.into_iter().collect()
    }

    pub fn tuple_stabilizer(&self, t: &[usize]) -> PermGroup {
        let elements = self
            .elements
            .iter()
            .filter(|g| t.iter().all(|&x| g.apply(x) == x))
            .cloned()
            .collect();
        PermGroup::from_elements(self.domain, elements)
    }

    /// Setwise stabilizer of `subset` (still acting on the full domain).
    pub fn setwise_stabilizer(&self, subset: &[usize]) -> PermGroup {
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        let elements = self
            .elements
            .iter()
            .filter(|g| g.fixes_setwise(&sorted))
            .cloned()
            .collect();
        PermGroup::from_elements(self.domain, elements)
    }

    /// Setwise stabilizer of `subset` restricted to `subset` (reindexed by
    /// sorted position). Returns the restricted group and the kernel order of
    /// the restriction map.
    pub fn restrict_stabilizer(&self, subset: &[usize]) -> (PermGroup, usize) {
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        let stab = self.setwise_stabilizer(&sorted);
        let mut restricted: Vec<Perm> = Vec::new();
        for g in stab.elements() {
            restricted.push(g.restrict(&sorted).expect("stabilizer is invariant"));
        }
        restricted.sort();
        restricted.dedup();
        let kernel = stab.order() / restricted.len();
        (PermGroup::from_elements(sorted.len(), restricted), kernel)
    }

    pub fn is_transitive(&self) -> bool {
        self.domain == 0 || self.orbit(0).len() == self.domain
    }

    pub fn is_regular(&self) -> bool {
        self.is_transitive() && self.order() == self.domain.max(1)
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.elements.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let a = &self.elements[i];
                let b = &self.elements[j];
                if a.compose(b) != b.compose(a) {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_normal_in(&self, group: &PermGroup) -> bool {
        group.elements.iter().all(|g| {
            let gi = g.inverse();
            self.elements
                .iter()
                .all(|n| self.contains(&g.compose(n).compose(&gi)))
        })
    }

    /// All subgroups, by closing every extension of known subgroups by one
    /// element. Exponential in principle; fine at the orders used here.
    pub fn subgroups(&self) -> Vec<PermGroup> {
        let mut known: Vec<BTreeSet<Perm>> = vec![[self.identity()].into_iter().collect()];
        let mut i = 0;
        while i < known.len() {
            let current = known[i].clone();
            for g in &self.elements {
                if current.contains(g) {
                    continue;
                }
                let mut gens: Vec<Perm> = current.iter().cloned().collect();
                gens.push(g.clone());
                let closed =
                    PermGroup::close_generators_bounded(self.domain, &gens, self.order() + 1)
                        .expect("closure within parent");
                let set: BTreeSet<Perm> = closed.elements.iter().cloned().collect();
                if !known.contains(&set) {
                    known.push(set);
                }
            }
            i += 1;
        }
        known
            .into_iter()
            .map(|set| PermGroup::from_elements(self.domain, set.into_iter().collect()))
            .collect()
    }

    /// All normal subgroups as explicit groups, ordered by (order, element
    /// list). The tie-break is deterministic for a fixed labeled group.
    pub fn normal_subgroups(&self) -> Vec<PermGroup> {
        let mut out: Vec<PermGroup> = self
            .subgroups()
            .into_iter()
            .filter(|s| s.is_normal_in(self))
            .collect();
        out.sort_by(|a, b| {
            (a.order(), &a.elements).cmp(&(b.order(), &b.elements))
        });
        out
    }

    /// The action of a regular group on the orbit blocks of a normal
    /// subgroup. Returns the quotient group together with the blocks it acts
    /// on (blocks sorted by minimum).
    pub fn quotient_action(&self, normal: &PermGroup) -> Result<(PermGroup, Vec<Vec<usize>>)> {
        if !self.is_regular() {
            return Err(Error::NotRegular);
        }
        if !normal.is_subgroup_of(self) || !normal.is_normal_in(self) {
            return Err(Error::NotNormal);
        }
        let blocks = normal.orbits();
        let block_of = {
            let mut m = vec![0usize; self.domain.max(1)];
            for (bi, b) in blocks.iter().enumerate() {
                for &p in b {
                    m[p] = bi;
                }
            }
            m
        };
        let mut elements: Vec<Perm> = Vec::new();
        for g in &self.elements {
            let mut image = vec![usize::MAX; blocks.len()];
            for (bi, b) in blocks.iter().enumerate() {
                image[bi] = block_of[g.apply(b[0])];
            }
            elements.push(Perm::from_image(image)?);
        }
        elements.sort();
        elements.dedup();
        let quotient = PermGroup::from_elements(blocks.len(), elements);
        debug_assert_eq!(quotient.order() * normal.order(), self.order());
        Ok((quotient, blocks))
    }

    /// Multiplication table view for abstract-isomorphism questions.
    pub fn abstract_group(&self) -> AbstractGroup {
        AbstractGroup::from_elements(&self.elements, |a, b| a.compose(b))
    }

    pub fn group_kind(&self) -> GroupKind {
        group_kind(self)
    }
}

/// Abstract isomorphism type of a small group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupKind {
    Cyclic(usize),
    Dihedral(usize),
    AbelianOther,
    NonAbelianOther,
}

impl GroupKind {
    pub fn is_abelian(&self) -> bool {
        match self {
            GroupKind::Cyclic(_) | GroupKind::AbelianOther => true,
            GroupKind::Dihedral(n) => *n <= 2,
            GroupKind::NonAbelianOther => false,
        }
    }

    /// Dihedral parameter if this kind can be read as D_n (the degenerate
    /// cases C_1 = D_... are not reinterpreted; only C_2 = D_1 is).
    pub fn as_dihedral(&self) -> Option<usize> {
        match self {
            GroupKind::Dihedral(n) => Some(*n),
            GroupKind::Cyclic(2) => Some(1),
            _ => None,
        }
    }
}

/// Abstract type recognition. Cyclic groups are reported as `Cyclic(n)` even
/// for n = 1, 2; the Klein four-group is reported as `Dihedral(2)`.
pub fn group_kind(group: &PermGroup) -> GroupKind {
    let n = group.order();
    let orders: Vec<usize> = group.elements().iter().map(|g| g.order()).collect();
    if orders.iter().any(|&o| o == n) {
        return GroupKind::Cyclic(n);
    }
    if n % 2 == 0 {
        let half = n / 2;
        // Dihedral: a cyclic subgroup of index 2 inverted by every outside
        // element, all of which are involutions.
        'rot: for (i, r) in group.elements().iter().enumerate() {
            if orders[i] != half {
                continue;
            }
            let mut rot: HashSet<Perm> = HashSet::new();
            let mut p = Perm::identity(group.domain());
            for _ in 0..half {
                rot.insert(p.clone());
                p = r.compose(&p);
            }
            let rinv = r.inverse();
            for g in group.elements() {
                if rot.contains(g) {
                    continue;
                }
                if g.order() != 2 {
                    continue 'rot;
                }
                if g.compose(r).compose(&g.inverse()) != rinv {
                    continue 'rot;
                }
            }
            return GroupKind::Dihedral(half);
        }
    }
    if group.is_abelian() {
        GroupKind::AbelianOther
    } else {
        GroupKind::NonAbelianOther
    }
}

/// A finite group as a multiplication table, for isomorphism tests.
#[derive(Clone, Debug)]
pub struct AbstractGroup {
    pub order: usize,
    pub table: Vec<Vec<usize>>,
    pub identity: usize,
}

impl AbstractGroup {
    pub fn from_elements<T: Clone + Eq + std::hash::Hash, F: Fn(&T, &T) -> T>(
        elements: &[T],
        mul: F,
    ) -> AbstractGroup {
        let index: std::collections::HashMap<&T, usize> =
            elements.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let n = elements.len();
        let mut table = vec![vec![0usize; n]; n];
        for i in 0..n {
            for j in 0..n {
                table[i][j] = index[&mul(&elements[i], &elements[j])];
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x))
            .expect("group has an identity");
        AbstractGroup {
            order: n,
            table,
            identity,
        }
    }

    pub fn element_order(&self, x: usize) -> usize {
        let mut y = x;
        let mut k = 1;
        while y != self.identity {
            y = self.table[x][y];
            k += 1;
        }
        k
    }

    fn order_census(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.order).map(|x| self.element_order(x)).collect();
        v.sort_unstable();
        v
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|i| (0..self.order).all(|j| self.table[i][j] == self.table[j][i]))
    }

    fn generated_by(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order];
        seen[self.identity] = true;
        let mut queue = vec![self.identity];
        while let Some(x) = queue.pop() {
            for &g in gens {
                let y = self.table[x][g];
                if !seen[y] {
                    seen[y] = true;
                    queue.push(y);
                }
            }
        }
        (0..self.order).filter(|&x| seen[x]).collect()
    }

    /// A small generating set, greedily preferring high-order elements.
    pub fn small_generating_set(&self) -> Vec<usize> {
        let mut by_order: Vec<usize> = (0..self.order).collect();
        by_order.sort_by_key(|&x| std::cmp::Reverse(self.element_order(x)));
        let mut gens: Vec<usize> = Vec::new();
        let mut span = vec![self.identity];
        for x in by_order {
            if span.binary_search(&x).is_err() {
                gens.push(x);
                let mut s = self.generated_by(&gens);
                s.sort_unstable();
                span = s;
                if span.len() == self.order {
                    break;
                }
            }
        }
        gens
    }
}

/// Abstract isomorphism test by backtracking on generator images.
pub fn are_isomorphic(a: &AbstractGroup, b: &AbstractGroup) -> bool {
    if a.order != b.order {
        return false;
    }
    if a.order_census() != b.order_census() {
        return false;
    }
    if a.is_abelian() != b.is_abelian() {
        return false;
    }
    let gens = a.small_generating_set();
    if gens.is_empty() {
        return true;
    }
    let mut images = vec![0usize; gens.len()];
    extend_iso(a, b, &gens, &mut images, 0)
}

fn extend_iso(
    a: &AbstractGroup,
    b: &AbstractGroup,
    gens: &[usize],
    images: &mut [usize],
    depth: usize,
) -> bool {
    if depth == gens.len() {
        return check_iso(a, b, gens, images);
    }
    let want = a.element_order(gens[depth]);
    for candidate in 0..b.order {
        if b.element_order(candidate) != want {
            continue;
        }
        images[depth] = candidate;
        if !partial_hom_consistent(a, b, &gens[..=depth], &images[..=depth]) {
            continue;
        }
        if extend_iso(a, b, gens, images, depth + 1) {
            return true;
        }
    }
    false
}

/// Checks that the pair closure of (g_i, h_i) in A x B is the graph of an
/// isomorphism prefix: no element of A gets two images and the sizes agree.
fn partial_hom_consistent(
    a: &AbstractGroup,
    b: &AbstractGroup,
    gens: &[usize],
    images: &[usize],
) -> bool {
    let mut map: Vec<Option<usize>> = vec![None; a.order];
    map[a.identity] = Some(b.identity);
    let mut frontier = vec![(a.identity, b.identity)];
    let mut count = 1usize;
    while let Some((x, y)) = frontier.pop() {
        for (g, h) in gens.iter().zip(images) {
            let nx = a.table[x][*g];
            let ny = b.table[y][*h];
            match map[nx] {
                None => {
                    map[nx] = Some(ny);
                    count += 1;
                    frontier.push((nx, ny));
                }
                Some(prev) => {
                    if prev != ny {
                        return false;
                    }
                }
            }
        }
    }
    // Injectivity: the image set must have the same cardinality.
    let mut image_set: Vec<usize> = map.iter().flatten().copied().collect();
    image_set.sort_unstable();
    image_set.dedup();
    image_set.len() == count
}

fn check_iso(a: &AbstractGroup, b: &AbstractGroup, gens: &[usize], images: &[usize]) -> bool {
    // Full map via closure; must be total, injective, surjective.
    let mut map: Vec<Option<usize>> = vec![None; a.order];
    map[a.identity] = Some(b.identity);
    let mut frontier = vec![(a.identity, b.identity)];
    while let Some((x, y)) = frontier.pop() {
        for (g, h) in gens.iter().zip(images) {
            let nx = a.table[x][*g];
            let ny = b.table[y][*h];
            match map[nx] {
                None => {
                    map[nx] = Some(ny);
                    frontier.push((nx, ny));
                }
                Some(prev) => {
                    if prev != ny {
                        return false;
                    }
                }
            }
        }
    }
    let Some(full): Option<Vec<usize>> = map.into_iter().collect() else {
        return false;
    };
    let mut img = full.clone();
    img.sort_unstable();
    img.dedup();
    if img.len() != a.order {
        return false;
    }
    for i in 0..a.order {
        for j in 0..a.order {
            if full[a.table[i][j]] != b.table[full[i]][full[j]] {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dihedral::{cyclic_group, dihedral_group};

    #[test]
    fn identity_closure_is_trivial() {
        let g = PermGroup::close_generators(3, &[Perm::identity(3)]).unwrap();
        assert_eq!(g.order(), 1);
    }

    #[test]
    fn three_cycle_generates_c3() {
        let c = Perm::from_cycles(3, &[&[0, 1, 2]]).unwrap();
        let g = PermGroup::close_generators(3, &[c]).unwrap();
        assert_eq!(g.order(), 3);
        assert_eq!(g.group_kind(), GroupKind::Cyclic(3));
    }

    #[test]
    fn square_symmetries_have_order_eight() {
        let r = Perm::from_cycles(4, &[&[0, 1, 2, 3]]).unwrap();
        let s = Perm::from_cycles(4, &[&[1, 3]]).unwrap();
        let g = PermGroup::close_generators(4, &[r, s]).unwrap();
        assert_eq!(g.order(), 8);
        assert_eq!(g.group_kind(), GroupKind::Dihedral(4));
    }

    #[test]
    fn closure_respects_bound() {
        let r = Perm::from_cycles(4, &[&[0, 1, 2, 3]]).unwrap();
        let s = Perm::from_cycles(4, &[&[1, 3]]).unwrap();
        let err = PermGroup::close_generators_bounded(4, &[r, s], 7).unwrap_err();
        assert!(matches!(err, Error::GroupTooLarge { bound: 7 }));
    }

    #[test]
    fn klein_four_group_is_dihedral_2() {
        let a = Perm::from_cycles(4, &[&[0, 1], &[2, 3]]).unwrap();
        let b = Perm::from_cycles(4, &[&[0, 2], &[1, 3]]).unwrap();
        let g = PermGroup::close_generators(4, &[a, b]).unwrap();
        assert_eq!(g.group_kind(), GroupKind::Dihedral(2));
    }

    #[test]
    fn c6_is_cyclic_by_order_census() {
        let g = cyclic_group(6);
        assert_eq!(g.group_kind(), GroupKind::Cyclic(6));
    }

    #[test]
    fn trivial_group_kind() {
        assert_eq!(PermGroup::trivial(4).group_kind(), GroupKind::Cyclic(1));
    }

    #[test]
    fn d4_normal_subgroup_kinds() {
        let g = dihedral_group(4);
        let kinds: Vec<GroupKind> = g
            .normal_subgroups()
            .iter()
            .map(|s| s.group_kind())
            .collect();
        assert!(kinds.contains(&GroupKind::Dihedral(4)));
        assert!(kinds.contains(&GroupKind::Dihedral(2)));
        assert!(kinds.contains(&GroupKind::Cyclic(4)));
        assert!(kinds.contains(&GroupKind::Cyclic(2)));
        assert!(kinds.contains(&GroupKind::Cyclic(1)));
        assert_eq!(kinds.len(), 6); // both D_2 embeddings appear
    }

    #[test]
    fn cp_has_only_trivial_normal_subgroups() {
        let g = cyclic_group(5);
        let ns = g.normal_subgroups();
        assert_eq!(ns.len(), 2);
        assert_eq!(ns[0].order(), 1);
        assert_eq!(ns[1].order(), 5);
    }

    #[test]
    fn abelian_group_returns_every_subgroup_as_normal() {
        let g = cyclic_group(6);
        assert_eq!(g.normal_subgroups().len(), 4); // 1, C2, C3, C6
    }

    #[test]
    fn quotient_of_regular_d6_by_c3() {
        // D_6 acting regularly on its 12 elements via left multiplication.
        let d6 = dihedral_group(6);
        let abs = d6.abstract_group();
        let elems: Vec<Perm> = (0..12)
            .map(|g| {
                Perm::from_image((0..12).map(|x| abs.table[g][x]).collect()).unwrap()
            })
            .collect();
        let regular = PermGroup::from_elements(12, elems.clone());
        assert!(regular.is_regular());
        // rotation subgroup of order 3: powers of an order-3 element
        let r3 = (0..12).find(|&g| abs.element_order(g) == 3).unwrap();
        let n = PermGroup::close_generators_bounded(12, &[elems[r3].clone()], 32).unwrap();
        assert_eq!(n.order(), 3);
        let (q, blocks) = regular.quotient_action(&n).unwrap();
        assert_eq!(blocks.len(), 4);
        assert_eq!(q.order(), 4);
        assert!(q.is_regular());
    }

    #[test]
    fn quotient_by_whole_group_is_trivial() {
        let c4 = cyclic_group(4);
        let (q, blocks) = c4.quotient_action(&c4).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(q.order(), 1);
    }

    #[test]
    fn quotient_by_trivial_subgroup_is_isomorphic_copy() {
        let c4 = cyclic_group(4);
        let (q, blocks) = c4.quotient_action(&PermGroup::trivial(4)).unwrap();
        assert_eq!(blocks.len(), 4);
        assert_eq!(q.order(), 4);
    }

    #[test]
    fn restrict_stabilizer_full_domain_is_identity_restriction() {
        let g = dihedral_group(4);
        let (r, kernel) = g.restrict_stabilizer(&[0, 1, 2, 3]);
        assert_eq!(r.order(), 8);
        assert_eq!(kernel, 1);
    }

    #[test]
    fn restrict_stabilizer_diagonal_of_square() {
        // D_4 on the square; the diagonal {0, 2} is stabilized by 4 elements
        // acting on it as Sym(2), with a kernel of order 2.
        let g = dihedral_group(4);
        let (r, kernel) = g.restrict_stabilizer(&[0, 2]);
        assert_eq!(r.order(), 2);
        assert_eq!(kernel, 2);
    }

    #[test]
    fn orbit_size_divides_group_order() {
        for group in [dihedral_group(5), dihedral_group(4), cyclic_group(6)] {
            for p in 0..group.domain() {
                assert_eq!(group.order() % group.orbit(p).len(), 0);
            }
        }
    }

    #[test]
    fn isomorphism_distinguishes_c4_from_klein() {
        let c4 = cyclic_group(4).abstract_group();
        let a = Perm::from_cycles(4, &[&[0, 1], &[2, 3]]).unwrap();
        let b = Perm::from_cycles(4, &[&[0, 2], &[1, 3]]).unwrap();
        let klein = PermGroup::close_generators(4, &[a, b])
            .unwrap()
            .abstract_group();
        assert!(!are_isomorphic(&c4, &klein));
        assert!(are_isomorphic(&c4, &c4));
    }
}
