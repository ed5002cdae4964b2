//! Enumeration and classification of 2-injective 3-factor subdirect
//! products of dihedral and cyclic groups.
//!
//! Enumeration goes through the projection onto the first two factors: a
//! 2-injective subdirect product is the graph of a surjective homomorphism
//! from a subgroup of G1 x G2 with surjective projections (obtained by
//! Goursat pairing of quotients) onto G3, subject to the two remaining
//! injectivity conditions.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::dihedral::{
    classify_element, cyclic_group, dihedral_group, double_cfi_group, ElementClass,
};
use crate::error::{Error, Result};
use crate::perm::{are_isomorphic, AbstractGroup, GroupKind, Perm, PermGroup};

/// Default bound on |G1| * |G2| during enumeration.
pub const ENUMERATION_BOUND: usize = 10_000;

/// A factor of a triple product, as declared (the declaration matters:
/// D_1 and C_2 are isomorphic but classified by different theorems).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Dihedral(usize),
    Cyclic(usize),
}

impl Factor {
    pub fn realize(&self) -> PermGroup {
        match *self {
            Factor::Dihedral(n) => dihedral_group(n),
            Factor::Cyclic(n) => cyclic_group(n),
        }
    }

    pub fn param(&self) -> usize {
        match *self {
            Factor::Dihedral(n) | Factor::Cyclic(n) => n,
        }
    }

    pub fn is_dihedral(&self) -> bool {
        matches!(self, Factor::Dihedral(_))
    }
}

impl std::fmt::Display for Factor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Factor::Dihedral(n) => write!(f, "D{n}"),
            Factor::Cyclic(n) => write!(f, "C{n}"),
        }
    }
}

/// A subgroup of a declared triple product, as a list of element-index
/// triples into the three factor groups.
#[derive(Clone, Debug)]
pub struct TripleProduct {
    pub spec: [Factor; 3],
    pub factors: [PermGroup; 3],
    /// sorted element-index triples
    pub elements: Vec<[usize; 3]>,
}

impl TripleProduct {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    fn identity_indices(&self) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for i in 0..3 {
            idx[i] = self.factors[i]
                .elements()
                .binary_search(&self.factors[i].identity())
                .expect("identity in group");
        }
        idx
    }

    /// Projection onto factor i as a set of element indices.
    pub fn projection(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.elements.iter().map(|t| t[i]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn is_subdirect(&self) -> bool {
        (0..3).all(|i| self.projection(i).len() == self.factors[i].order())
    }

    /// Kernel of the projection away from factor i (the 2-injectivity
    /// kernels): elements trivial on the other two factors.
    pub fn kernel_pi_bar(&self, i: usize) -> Vec<[usize; 3]> {
        let id = self.identity_indices();
        self.elements
            .iter()
            .filter(|t| (0..3).all(|j| j == i || t[j] == id[j]))
            .copied()
            .collect()
    }

    pub fn is_2_injective(&self) -> bool {
        (0..3).all(|i| self.kernel_pi_bar(i).len() == 1)
    }

    /// Kernel of the projection onto factor i: elements with trivial i-th
    /// component (the paper's H_i).
    pub fn kernel_pi(&self, i: usize) -> Vec<[usize; 3]> {
        let id = self.identity_indices();
        self.elements
            .iter()
            .filter(|t| t[i] == id[i])
            .copied()
            .collect()
    }

    /// The subgroup generated by all three H_i, as element triples.
    pub fn kernel_subgroup(&self) -> Vec<[usize; 3]> {
        let mut gens: Vec<[usize; 3]> = Vec::new();
        for i in 0..3 {
            gens.extend(self.kernel_pi(i));
        }
        gens.sort_unstable();
        gens.dedup();
        let mul = |a: &[usize; 3], b: &[usize; 3]| self.multiply(a, b);
        let mut set: std::collections::BTreeSet<[usize; 3]> = gens.iter().copied().collect();
        set.insert(self.identity_indices());
        loop {
            let mut grew = false;
            let current: Vec<[usize; 3]> = set.iter().copied().collect();
            for a in &current {
                for g in &gens {
                    let p = mul(a, g);
                    if set.insert(p) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        set.into_iter().collect()
    }

    pub fn multiply(&self, a: &[usize; 3], b: &[usize; 3]) -> [usize; 3] {
        let mut out = [0usize; 3];
        for i in 0..3 {
            let ea = &self.factors[i].elements()[a[i]];
            let eb = &self.factors[i].elements()[b[i]];
            let prod = ea.compose(eb);
            out[i] = self.factors[i]
                .elements()
                .binary_search(&prod)
                .expect("closed");
        }
        out
    }

    pub fn element_order(&self, t: &[usize; 3]) -> usize {
        (0..3)
            .map(|i| self.factors[i].elements()[t[i]].order())
            .fold(1usize, lcm)
    }

    pub fn abstract_group(&self) -> AbstractGroup {
        let elems = self.elements.clone();
        AbstractGroup::from_elements(&elems, |a, b| self.multiply(a, b))
    }

    /// Componentwise rotation/reflection classification of one element;
    /// only the factors listed in `positions` are considered and all of them
    /// must be dihedral with parameter > 2.
    fn classify_components(&self, t: &[usize; 3], positions: &[usize]) -> Result<ElementClass> {
        let mut class: Option<ElementClass> = None;
        for &i in positions {
            let g = &self.factors[i].elements()[t[i]];
            let c = classify_element(g, &self.factors[i])?;
            match class {
                None => class = Some(c),
                Some(prev) if prev != c => return Ok(ElementClass::Mixed),
                _ => {}
            }
        }
        Ok(class.unwrap_or(ElementClass::Rotation))
    }

    /// True iff every element is all-rotation or all-reflection on the given
    /// factor positions.
    pub fn is_rotate_or_reflect_on(&self, positions: &[usize]) -> Result<bool> {
        for &i in positions {
            match self.spec[i] {
                Factor::Dihedral(n) if n > 2 => {}
                _ => {
                    return Err(Error::BadFactorization(format!(
                        "factor {} is {} which is not dihedral with n > 2",
                        i, self.spec[i]
                    )))
                }
            }
        }
        for t in &self.elements {
            if self.classify_components(t, positions)? == ElementClass::Mixed {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Quotient of `g` by a normal subgroup as a multiplication table. Returns
/// the coset id of each element and the quotient table.
fn quotient_table(g: &PermGroup, n: &PermGroup) -> (Vec<usize>, AbstractGroup) {
    let order = g.order();
    let idx_of = |p: &Perm| g.elements().binary_search(p).expect("element of g");
    let mut coset_of = vec![usize::MAX; order];
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..order {
        if coset_of[i] != usize::MAX {
            continue;
        }
        let c = reps.len();
        for nn in n.elements() {
            let j = idx_of(&g.elements()[i].compose(nn));
            coset_of[j] = c;
        }
        reps.push(i);
    }
    let table_elems: Vec<usize> = (0..reps.len()).collect();
    let abs = AbstractGroup::from_elements(&table_elems, |&a, &b| {
        let p = g.elements()[reps[a]].compose(&g.elements()[reps[b]]);
        coset_of[idx_of(&p)]
    });
    (coset_of, abs)
}

/// All isomorphisms between two small abstract groups, as full index maps.
fn all_isomorphisms(a: &AbstractGroup, b: &AbstractGroup) -> Vec<Vec<usize>> {
    if a.order != b.order {
        return vec![];
    }
    let gens = a.small_generating_set();
    let mut out = Vec::new();
    if gens.is_empty() {
        out.push(vec![b.identity]);
        return out;
    }
    let mut images = vec![0usize; gens.len()];
    collect_isos(a, b, &gens, &mut images, 0, &mut out);
    out
}

fn collect_isos(
    a: &AbstractGroup,
    b: &AbstractGroup,
    gens: &[usize],
    images: &mut [usize],
    depth: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if depth == gens.len() {
        if let Some(map) = closure_map(a, b, gens, images) {
            // must be injective and a homomorphism on all pairs
            let mut img = map.clone();
            img.sort_unstable();
            img.dedup();
            if img.len() == a.order && is_hom(a, b, &map) {
                out.push(map);
            }
        }
        return;
    }
    let want = a.element_order(gens[depth]);
    for cand in 0..b.order {
        if b.element_order(cand) != want {
            continue;
        }
        images[depth] = cand;
        if closure_map(a, b, &gens[..=depth], &images[..=depth]).is_some() {
            collect_isos(a, b, gens, images, depth + 1, out);
        }
    }
}

/// Builds the map sending words in `gens` to the same words in `images`.
/// Returns None if the pair closure is not the graph of a function; the
/// domain covered is the subgroup generated by `gens`.
fn closure_map(
    a: &AbstractGroup,
    b: &AbstractGroup,
    gens: &[usize],
    images: &[usize],
) -> Option<Vec<usize>> {
    let mut map: Vec<Option<usize>> = vec![None; a.order];
    map[a.identity] = Some(b.identity);
    let mut queue = vec![(a.identity, b.identity)];
    while let Some((x, y)) = queue.pop() {
        for (&g, &h) in gens.iter().zip(images) {
            let nx = a.table[x][g];
            let ny = b.table[y][h];
            match map[nx] {
                None => {
                    map[nx] = Some(ny);
                    queue.push((nx, ny));
                }
                Some(prev) => {
                    if prev != ny {
                        return None;
                    }
                }
            }
        }
    }
    Some(
        map.into_iter()
            .map(|o| o.unwrap_or(usize::MAX))
            .collect(),
    )
}

fn is_hom(a: &AbstractGroup, b: &AbstractGroup, map: &[usize]) -> bool {
    for i in 0..a.order {
        if map[i] == usize::MAX {
            return false;
        }
    }
    for i in 0..a.order {
        for j in 0..a.order {
            if map[a.table[i][j]] != b.table[map[i]][map[j]] {
                return false;
            }
        }
    }
    true
}

/// All surjective homomorphisms from `delta` onto `g3`, as full index maps.
fn surjective_homs(delta: &AbstractGroup, g3: &AbstractGroup) -> Vec<Vec<usize>> {
    if delta.order % g3.order != 0 {
        return vec![];
    }
    let gens = delta.small_generating_set();
    let mut out = Vec::new();
    if gens.is_empty() {
        if g3.order == 1 {
            out.push(vec![g3.identity]);
        }
        return out;
    }
    let mut images = vec![0usize; gens.len()];
    collect_homs(delta, g3, &gens, &mut images, 0, &mut out);
    out
}

fn collect_homs(
    a: &AbstractGroup,
    b: &AbstractGroup,
    gens: &[usize],
    images: &mut [usize],
    depth: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if depth == gens.len() {
        if let Some(map) = closure_map(a, b, gens, images) {
            let mut img = map.clone();
            img.sort_unstable();
            img.dedup();
            if img.len() == b.order && is_hom(a, b, &map) {
                out.push(map);
            }
        }
        return;
    }
    let want = a.element_order(gens[depth]);
    for cand in 0..b.order {
        // image order must divide generator order
        if want % b.element_order(cand) != 0 {
            continue;
        }
        images[depth] = cand;
        if closure_map(a, b, &gens[..=depth], &images[..=depth]).is_some() {
            collect_homs(a, b, gens, images, depth + 1, out);
        }
    }
}

/// Complete list of 2-injective subdirect products of the declared factors,
/// as literal subgroups of the product (no isomorph rejection; groups are
/// distinct as subgroups by construction).
pub fn enumerate_2inj(spec: [Factor; 3]) -> Result<Vec<TripleProduct>> {
    let factors = [spec[0].realize(), spec[1].realize(), spec[2].realize()];
    let (g1, g2, g3) = (&factors[0], &factors[1], &factors[2]);
    let size = g1.order() * g2.order();
    if size > ENUMERATION_BOUND {
        return Err(Error::EnumerationTooLarge {
            size,
            bound: ENUMERATION_BOUND,
        });
    }
    let g3_abs = g3.abstract_group();
    let id3 = g3
        .elements()
        .binary_search(&g3.identity())
        .expect("identity");
    debug_assert_eq!(id3, g3_abs.identity);

    let mut result: Vec<TripleProduct> = Vec::new();
    let normals1 = g1.normal_subgroups();
    let normals2 = g2.normal_subgroups();
    for n1 in &normals1 {
        for n2 in &normals2 {
            if g1.order() * n2.order() != g2.order() * n1.order() {
                continue; // indices must agree
            }
            let (coset1, q1) = quotient_table(g1, n1);
            let (coset2, q2) = quotient_table(g2, n2);
            for iso in all_isomorphisms(&q1, &q2) {
                // Delta = {(a, b) : iso(coset(a)) = coset(b)}
                let mut pairs: Vec<(usize, usize)> = Vec::new();
                for a in 0..g1.order() {
                    for b in 0..g2.order() {
                        if iso[coset1[a]] == coset2[b] {
                            pairs.push((a, b));
                        }
                    }
                }
                let delta_abs = {
                    let pairs_ref = &pairs;
                    AbstractGroup::from_elements(pairs_ref, |x, y| {
                        let pa = g1.elements()[x.0].compose(&g1.elements()[y.0]);
                        let pb = g2.elements()[x.1].compose(&g2.elements()[y.1]);
                        let ia = g1.elements().binary_search(&pa).unwrap();
                        let ib = g2.elements().binary_search(&pb).unwrap();
                        (ia, ib)
                    })
                };
                for f in surjective_homs(&delta_abs, &g3_abs) {
                    let elements: Vec<[usize; 3]> = pairs
                        .iter()
                        .enumerate()
                        .map(|(i, &(a, b))| [a, b, f[i]])
                        .collect();
                    let mut elements = elements;
                    elements.sort_unstable();
                    let t = TripleProduct {
                        spec,
                        factors: factors.clone(),
                        elements,
                    };
                    if t.is_2_injective() {
                        debug_assert!(t.is_subdirect());
                        result.push(t);
                    }
                }
            }
        }
    }
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ClassificationOutcome {
    RotateOrReflect,
    DoubleCFI,
    DoubleCFIRestricted,
    AbelianAll,
    /// The projection away from the named small factor is rotate-or-reflect.
    ProjRotateOrReflect(usize),
}

impl std::fmt::Display for ClassificationOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassificationOutcome::RotateOrReflect => write!(f, "rotate-or-reflect"),
            ClassificationOutcome::DoubleCFI => write!(f, "double-cfi"),
            ClassificationOutcome::DoubleCFIRestricted => write!(f, "double-cfi-restricted"),
            ClassificationOutcome::AbelianAll => write!(f, "abelian"),
            ClassificationOutcome::ProjRotateOrReflect(i) => {
                write!(f, "proj-rotate-or-reflect({i})")
            }
        }
    }
}

fn double_cfi_abstract() -> &'static AbstractGroup {
    static CELL: OnceLock<AbstractGroup> = OnceLock::new();
    CELL.get_or_init(|| double_cfi_group().abstract_group())
}

/// DCFI restricted to rotations in the first factor; order 16.
fn double_cfi_restricted_abstract() -> &'static AbstractGroup {
    static CELL: OnceLock<AbstractGroup> = OnceLock::new();
    CELL.get_or_init(|| {
        let g = double_cfi_group();
        let dom: Vec<usize> = (0..4).collect();
        let sq: Vec<Perm> = g
            .elements()
            .iter()
            .map(|e| e.restrict(&dom).unwrap())
            .collect();
        let d4 = PermGroup::from_elements(4, sq.clone());
        assert_eq!(d4.group_kind(), GroupKind::Dihedral(4));
        let restricted: Vec<Perm> = g
            .elements()
            .iter()
            .filter(|e| {
                let c = e.restrict(&dom).unwrap();
                classify_element(&c, &d4).unwrap() == ElementClass::Rotation
            })
            .cloned()
            .collect();
        assert_eq!(restricted.len(), 16);
        let pg = PermGroup::from_elements(12, restricted);
        pg.abstract_group()
    })
}

fn is_abelian_triple(t: &TripleProduct) -> bool {
    let elems = &t.elements;
    for a in elems {
        for b in elems {
            if t.multiply(a, b) != t.multiply(b, a) {
                return false;
            }
        }
    }
    true
}

/// Classifies a 2-injective subdirect product according to the theorem that
/// matches the declared factor shape: all-dihedral, or cyclic first factor.
/// `NoCaseApplies` signals a violation of the classification theorems and
/// must never fire.
pub fn classify_triple(t: &TripleProduct) -> Result<ClassificationOutcome> {
    let witness = || {
        format!(
            "{} x {} x {} group of order {}: {:?}",
            t.spec[0],
            t.spec[1],
            t.spec[2],
            t.order(),
            t.elements
        )
    };
    let n: Vec<usize> = t.spec.iter().map(|f| f.param()).collect();
    if t.spec.iter().all(|f| f.is_dihedral()) {
        let small: Vec<usize> = (0..3).filter(|&i| n[i] <= 2).collect();
        match small.len() {
            0 => {
                if t.is_rotate_or_reflect_on(&[0, 1, 2])? {
                    Ok(ClassificationOutcome::RotateOrReflect)
                } else if n.iter().all(|&x| x == 4)
                    && are_isomorphic(&t.abstract_group(), double_cfi_abstract())
                {
                    Ok(ClassificationOutcome::DoubleCFI)
                } else {
                    Err(Error::NoCaseApplies { witness: witness() })
                }
            }
            1 => {
                let i = small[0];
                let others: Vec<usize> = (0..3).filter(|&j| j != i).collect();
                if n[others[0]] == n[others[1]]
                    && n[others[0]] > 2
                    && t.is_rotate_or_reflect_on(&others)?
                {
                    Ok(ClassificationOutcome::ProjRotateOrReflect(i))
                } else {
                    Err(Error::NoCaseApplies { witness: witness() })
                }
            }
            2 => Err(Error::NoCaseApplies { witness: witness() }),
            _ => {
                if is_abelian_triple(t) {
                    Ok(ClassificationOutcome::AbelianAll)
                } else {
                    Err(Error::NoCaseApplies { witness: witness() })
                }
            }
        }
    } else if !t.spec[0].is_dihedral() && t.spec[1].is_dihedral() && t.spec[2].is_dihedral() {
        if n[0] <= 2 && n[1] > 2 && n[2] > 2 {
            if t.is_rotate_or_reflect_on(&[1, 2])? {
                Ok(ClassificationOutcome::ProjRotateOrReflect(0))
            } else {
                Err(Error::NoCaseApplies { witness: witness() })
            }
        } else if n == [4, 4, 4] {
            if are_isomorphic(&t.abstract_group(), double_cfi_restricted_abstract()) {
                Ok(ClassificationOutcome::DoubleCFIRestricted)
            } else {
                Err(Error::NoCaseApplies { witness: witness() })
            }
        } else if n.iter().all(|&x| x <= 2) {
            if is_abelian_triple(t) {
                Ok(ClassificationOutcome::AbelianAll)
            } else {
                Err(Error::NoCaseApplies { witness: witness() })
            }
        } else {
            Err(Error::NoCaseApplies { witness: witness() })
        }
    } else {
        Err(Error::BadFactorization(
            "supported factor shapes: (D,D,D) and (C,D,D)".into(),
        ))
    }
}

#[derive(Clone, Debug)]
pub struct TupleReport {
    pub spec: [Factor; 3],
    pub group_count: usize,
    pub counts: BTreeMap<ClassificationOutcome, usize>,
}

impl std::fmt::Display for TupleReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} x {} x {}: {} groups",
            self.spec[0], self.spec[1], self.spec[2], self.group_count
        )?;
        for (outcome, count) in &self.counts {
            write!(f, ", {outcome}={count}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct ClassificationReport {
    pub tuples: Vec<TupleReport>,
    pub violations: Vec<String>,
}

impl ClassificationReport {
    pub fn total_counts(&self) -> BTreeMap<ClassificationOutcome, usize> {
        let mut out = BTreeMap::new();
        for t in &self.tuples {
            for (o, c) in &t.counts {
                *out.entry(o.clone()).or_insert(0) += c;
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorFamily {
    /// D_{n1} x D_{n2} x D_{n3}
    AllDihedral,
    /// C_{n1} x D_{n2} x D_{n3}
    CyclicFirst,
}

/// Enumerates and classifies all factor tuples with parameters up to
/// `max_n`, reproducing the paper-scale machine verification at desk scale.
pub fn verify_classification(
    max_n: usize,
    families: &[FactorFamily],
) -> Result<ClassificationReport> {
    let mut report = ClassificationReport::default();
    for &family in families {
        for n1 in 1..=max_n {
            for n2 in 1..=max_n {
                for n3 in 1..=max_n {
                    let spec = match family {
                        FactorFamily::AllDihedral => [
                            Factor::Dihedral(n1),
                            Factor::Dihedral(n2),
                            Factor::Dihedral(n3),
                        ],
                        FactorFamily::CyclicFirst => [
                            Factor::Cyclic(n1),
                            Factor::Dihedral(n2),
                            Factor::Dihedral(n3),
                        ],
                    };
                    let groups = enumerate_2inj(spec)?;
                    let mut counts: BTreeMap<ClassificationOutcome, usize> = BTreeMap::new();
                    for g in &groups {
                        match classify_triple(g) {
                            Ok(outcome) => *counts.entry(outcome).or_insert(0) += 1,
                            Err(Error::NoCaseApplies { witness }) => {
                                report.violations.push(witness)
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    report.tuples.push(TupleReport {
                        spec,
                        group_count: groups.len(),
                        counts,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c2_cubed_contains_the_cfi_group() {
        let spec = [Factor::Dihedral(1), Factor::Dihedral(1), Factor::Dihedral(1)];
        let groups = enumerate_2inj(spec).unwrap();
        // the CFI group: order 4, all three kernels trivial
        assert!(groups.iter().any(|g| g.order() == 4));
        for g in &groups {
            assert_eq!(classify_triple(g).unwrap(), ClassificationOutcome::AbelianAll);
        }
    }

    #[test]
    fn d4_cubed_contains_double_cfi() {
        let spec = [Factor::Dihedral(4), Factor::Dihedral(4), Factor::Dihedral(4)];
        let groups = enumerate_2inj(spec).unwrap();
        let dcfi: Vec<&TripleProduct> = groups
            .iter()
            .filter(|g| classify_triple(g).unwrap() == ClassificationOutcome::DoubleCFI)
            .collect();
        assert!(!dcfi.is_empty());
        for g in dcfi {
            assert_eq!(g.order(), 32);
        }
    }

    #[test]
    fn d5_with_two_abelian_factors_is_empty() {
        let spec = [Factor::Dihedral(5), Factor::Dihedral(1), Factor::Dihedral(1)];
        assert!(enumerate_2inj(spec).unwrap().is_empty());
        let spec2 = [Factor::Dihedral(5), Factor::Dihedral(2), Factor::Dihedral(2)];
        assert!(enumerate_2inj(spec2).unwrap().is_empty());
    }

    #[test]
    fn diagonal_of_d7_cubed_is_rotate_or_reflect() {
        let spec = [Factor::Dihedral(7), Factor::Dihedral(7), Factor::Dihedral(7)];
        let groups = enumerate_2inj(spec).unwrap();
        // the diagonal subgroup is among them
        let diag = groups.iter().find(|g| {
            g.order() == 14 && g.elements.iter().all(|t| t[0] == t[1] && t[1] == t[2])
        });
        assert!(diag.is_some());
        assert_eq!(
            classify_triple(diag.unwrap()).unwrap(),
            ClassificationOutcome::RotateOrReflect
        );
    }

    #[test]
    fn c4_d4_d4_realizes_restricted_double_cfi() {
        let spec = [Factor::Cyclic(4), Factor::Dihedral(4), Factor::Dihedral(4)];
        let groups = enumerate_2inj(spec).unwrap();
        assert!(!groups.is_empty());
        for g in &groups {
            let outcome = classify_triple(g).unwrap();
            assert_eq!(outcome, ClassificationOutcome::DoubleCFIRestricted);
            assert_eq!(g.order(), 16);
        }
    }

    #[test]
    fn order_divides_lcm_of_other_two() {
        for spec in [
            [Factor::Dihedral(3), Factor::Dihedral(3), Factor::Dihedral(3)],
            [Factor::Dihedral(4), Factor::Dihedral(4), Factor::Dihedral(4)],
            [Factor::Cyclic(2), Factor::Dihedral(3), Factor::Dihedral(3)],
        ] {
            for g in enumerate_2inj(spec).unwrap() {
                for t in &g.elements {
                    for i in 0..3 {
                        let oi = g.factors[i].elements()[t[i]].order();
                        let oj = g.factors[(i + 1) % 3].elements()[t[(i + 1) % 3]].order();
                        let ok = g.factors[(i + 2) % 3].elements()[t[(i + 2) % 3]].order();
                        assert_eq!(lcm(oj, ok) % oi, 0);
                    }
                }
            }
        }
    }

    #[test]
    fn kernel_index_identity() {
        // [G_i : pi_i(H)] = [Gamma : H]
        for spec in [
            [Factor::Dihedral(4), Factor::Dihedral(4), Factor::Dihedral(4)],
            [Factor::Dihedral(5), Factor::Dihedral(5), Factor::Dihedral(5)],
        ] {
            for g in enumerate_2inj(spec).unwrap() {
                let h = g.kernel_subgroup();
                let gamma_index = g.order() / h.len();
                for i in 0..3 {
                    let mut proj: Vec<usize> = h.iter().map(|t| t[i]).collect();
                    proj.sort_unstable();
                    proj.dedup();
                    assert_eq!(g.factors[i].order() / proj.len(), gamma_index);
                }
            }
        }
    }

    #[test]
    fn kernels_define_component_bijections() {
        let spec = [Factor::Dihedral(4), Factor::Dihedral(4), Factor::Dihedral(4)];
        for g in enumerate_2inj(spec).unwrap() {
            for i in 0..3 {
                let h = g.kernel_pi(i);
                let j = (i + 1) % 3;
                let k = (i + 2) % 3;
                let mut seen_j = std::collections::HashMap::new();
                for t in &h {
                    // each j-component pairs with exactly one k-component
                    if let Some(prev) = seen_j.insert(t[j], t[k]) {
                        assert_eq!(prev, t[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn verify_up_to_2_has_no_violations() {
        let report = verify_classification(
            2,
            &[FactorFamily::AllDihedral, FactorFamily::CyclicFirst],
        )
        .unwrap();
        assert!(report.violations.is_empty());
        for (outcome, _) in report.total_counts() {
            assert_eq!(outcome, ClassificationOutcome::AbelianAll);
        }
    }
}
