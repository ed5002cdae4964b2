//! Dihedral-specific predicates and constructions: rotation/reflection
//! classification, rotate-or-reflect tests, the CFI and double CFI groups,
//! and standard-form relations for regular dihedral color classes.

use crate::canon_order::{canonical_data, ordered_k_orbits, CanonData};
use crate::error::{Error, Result};
use crate::perm::{GroupKind, Perm, PermGroup};
use crate::structure::Structure;

/// Natural dihedral group D_n as a permutation group.
/// n >= 3: symmetries of the n-gon on n points. n = 2: the Klein four-group
/// on 4 points. n = 1: C_2 on 2 points.
pub fn dihedral_group(n: usize) -> PermGroup {
    match n {
        0 => panic!("D_0 is not a group"),
        1 => PermGroup::close_generators_bounded(
            2,
            &[Perm::from_cycles(2, &[&[0, 1]]).unwrap()],
            4,
        )
        .unwrap(),
        2 => PermGroup::close_generators_bounded(
            4,
            &[
                Perm::from_cycles(4, &[&[0, 1]]).unwrap(),
                Perm::from_cycles(4, &[&[2, 3]]).unwrap(),
            ],
            8,
        )
        .unwrap(),
        _ => {
            let cycle: Vec<usize> = (0..n).collect();
            let r = Perm::from_cycles(n, &[&cycle]).unwrap();
            let s = Perm::from_image((0..n).map(|i| (n - i) % n).collect()).unwrap();
            PermGroup::close_generators_bounded(n, &[r, s], 2 * n + 1).unwrap()
        }
    }
}

/// Cyclic group C_n on n points (C_1 on one point).
pub fn cyclic_group(n: usize) -> PermGroup {
    assert!(n >= 1);
    let cycle: Vec<usize> = (0..n).collect();
    let r = Perm::from_cycles(n, &[&cycle]).unwrap();
    PermGroup::close_generators_bounded(n, &[r], n + 1).unwrap()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementClass {
    Rotation,
    Reflection,
    /// Only meaningful for elements of product groups.
    Mixed,
}

/// Classifies an element of a dihedral group D_n, n >= 3: a rotation iff its
/// order is at least 3 or it commutes with all elements of order at least 3.
/// The identity is a rotation.
pub fn classify_element(g: &Perm, group: &PermGroup) -> Result<ElementClass> {
    let kind = group.group_kind();
    let n = match kind {
        GroupKind::Dihedral(n) => n,
        _ => return Err(Error::NotDihedral),
    };
    if n < 3 {
        return Err(Error::DegenerateN { n });
    }
    if !group.contains(g) {
        return Err(Error::Validation("element is not in the group".into()));
    }
    Ok(classify_in_dihedral(g, group))
}

/// Classification without the D_n(n>=3) precondition checks; callers must
/// know the group is dihedral with n >= 3.
fn classify_in_dihedral(g: &Perm, group: &PermGroup) -> ElementClass {
    if g.order() >= 3 {
        return ElementClass::Rotation;
    }
    let commutes_with_high_order = group
        .elements()
        .iter()
        .filter(|h| h.order() >= 3)
        .all(|h| g.compose(h) == h.compose(g));
    if commutes_with_high_order {
        ElementClass::Rotation
    } else {
        ElementClass::Reflection
    }
}

/// The rotation subgroup of a dihedral group D_n, n >= 3.
pub fn rotation_subgroup(group: &PermGroup) -> Result<PermGroup> {
    let kind = group.group_kind();
    match kind {
        GroupKind::Dihedral(n) if n >= 3 => {}
        _ => return Err(Error::NotDihedral),
    }
    let elements: Vec<Perm> = group
        .elements()
        .iter()
        .filter(|g| classify_in_dihedral(g, group) == ElementClass::Rotation)
        .cloned()
        .collect();
    Ok(PermGroup::from_elements(group.domain(), elements))
}

/// Classifies one component tuple of an element of a product of dihedral
/// groups (all with parameter > 2): rotation/reflection per component, and
/// `Mixed` when the components disagree.
pub fn classify_product_element(components: &[(&Perm, &PermGroup)]) -> Result<ElementClass> {
    let mut class: Option<ElementClass> = None;
    for (g, group) in components {
        let c = classify_element(g, group)?;
        match class {
            None => class = Some(c),
            Some(prev) if prev != c => return Ok(ElementClass::Mixed),
            _ => {}
        }
    }
    Ok(class.unwrap_or(ElementClass::Rotation))
}

/// True iff every listed element (given componentwise) of a subgroup of a
/// product of dihedral groups with all parameters > 2 is componentwise
/// all-rotation or all-reflection.
pub fn is_rotate_or_reflect<'a, I>(elements: I, factors: &[PermGroup]) -> Result<bool>
where
    I: IntoIterator<Item = Vec<&'a Perm>>,
{
    for f in factors {
        match f.group_kind() {
            GroupKind::Dihedral(n) if n >= 3 => {}
            _ => {
                return Err(Error::BadFactorization(
                    "rotate-or-reflect is defined only for dihedral factors with n > 2".into(),
                ))
            }
        }
    }
    for comps in elements {
        if comps.len() != factors.len() {
            return Err(Error::BadFactorization(
                "component count does not match factor count".into(),
            ));
        }
        let paired: Vec<(&Perm, &PermGroup)> =
            comps.into_iter().zip(factors.iter()).collect();
        if classify_product_element(&paired)? == ElementClass::Mixed {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The CFI group: the index-2 subgroup of D_1^3 of triples with an even
/// number of nontrivial entries, acting on three 2-point blocks.
pub fn cfi_group() -> PermGroup {
    let flips: Vec<Perm> = (0..3)
        .map(|i| Perm::from_cycles(6, &[&[2 * i, 2 * i + 1]]).unwrap())
        .collect();
    let gens = vec![flips[0].compose(&flips[1]), flips[1].compose(&flips[2])];
    PermGroup::close_generators_bounded(6, &gens, 8).unwrap()
}

/// The double CFI group realized inside D_4^3, acting on three squares
/// (points 4i..4i+4). Generated by (1, a, a), (a, 1, a), (r, r, b) where a is
/// a diagonal reflection, r the order-4 rotation, and b an edge reflection
/// outside the conjugacy class of a. Order 32.
pub fn double_cfi_group() -> PermGroup {
    let square = |i: usize| -> [usize; 4] { [4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3] };
    let n = 12;
    let rot = |i: usize| {
        let s = square(i);
        Perm::from_cycles(n, &[&s]).unwrap()
    };
    // diagonal reflection: swaps vertices 1 and 3 of the square
    let diag = |i: usize| {
        let s = square(i);
        Perm::from_cycles(n, &[&[s[1], s[3]]]).unwrap()
    };
    // edge reflection: swaps 0-1 and 2-3
    let edge = |i: usize| {
        let s = square(i);
        Perm::from_cycles(n, &[&[s[0], s[1]], &[s[2], s[3]]]).unwrap()
    };
    let g1 = diag(1).compose(&diag(2));
    let g2 = diag(0).compose(&diag(2));
    let g3 = rot(0).compose(&rot(1)).compose(&edge(2));
    PermGroup::close_generators_bounded(n, &[g1, g2, g3], 64).unwrap()
}

/// Standard-form relations of a regular cyclic or dihedral color class:
/// directed cycles plus a perfect matching, as ordered pairs over the
/// fragment's points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StandardForm {
    /// cyclic case: one directed |C|-cycle; dihedral case: two disjoint
    /// directed |C|/2-cycles in opposite directions
    pub cycle_relation: Vec<Vec<usize>>,
    /// cyclic case: equal to `cycle_relation`; dihedral case: a perfect
    /// matching between the two cycles (symmetric pairs)
    pub match_relation: Vec<Vec<usize>>,
}

impl StandardForm {
    /// The two cycles of the cycle relation as point sets (one set in the
    /// cyclic case).
    pub fn cycle_components(&self, class_size: usize) -> Vec<Vec<usize>> {
        let mut succ = vec![usize::MAX; class_size];
        let mut points: Vec<usize> = Vec::new();
        for t in &self.cycle_relation {
            succ[t[0]] = t[1];
            points.push(t[0]);
        }
        points.sort_unstable();
        points.dedup();
        let mut seen = vec![false; class_size];
        let mut comps = Vec::new();
        for &start in &points {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut cur = succ[start];
            while cur != start {
                comp.push(cur);
                seen[cur] = true;
                cur = succ[cur];
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }
}

fn is_single_directed_cycle(tuples: &[Vec<usize>], points: usize) -> bool {
    if tuples.len() != points {
        return false;
    }
    let mut succ = vec![usize::MAX; points];
    let mut indeg = vec![0usize; points];
    for t in tuples {
        if succ[t[0]] != usize::MAX {
            return false;
        }
        succ[t[0]] = t[1];
        indeg[t[1]] += 1;
    }
    if succ.iter().any(|&s| s == usize::MAX) || indeg.iter().any(|&d| d != 1) {
        return false;
    }
    // connected: one cycle through 0
    let mut cur = succ[0];
    let mut len = 1;
    while cur != 0 {
        cur = succ[cur];
        len += 1;
    }
    len == points
}

fn is_two_directed_cycles(tuples: &[Vec<usize>], points: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    if tuples.len() != points || points % 2 != 0 {
        return None;
    }
    let half = points / 2;
    let mut succ = vec![usize::MAX; points];
    let mut indeg = vec![0usize; points];
    for t in tuples {
        if t[0] == t[1] || succ[t[0]] != usize::MAX {
            return None;
        }
        succ[t[0]] = t[1];
        indeg[t[1]] += 1;
    }
    if succ.iter().any(|&s| s == usize::MAX) || indeg.iter().any(|&d| d != 1) {
        return None;
    }
    let mut seen = vec![false; points];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for p in 0..points {
        if seen[p] {
            continue;
        }
        let mut comp = vec![p];
        seen[p] = true;
        let mut cur = succ[p];
        while cur != p {
            comp.push(cur);
            seen[cur] = true;
            cur = succ[cur];
        }
        comps.push(comp);
    }
    if comps.len() == 2 && comps[0].len() == half && comps[1].len() == half {
        let (a, b) = (comps.remove(0), comps.remove(0));
        let mut a = a;
        let mut b = b;
        a.sort_unstable();
        b.sort_unstable();
        Some((a, b))
    } else {
        None
    }
}

fn is_cross_matching(tuples: &[Vec<usize>], a: &[usize], b: &[usize], points: usize) -> bool {
    if tuples.len() != points {
        return false;
    }
    let mut partner = vec![usize::MAX; points];
    for t in tuples {
        let (u, v) = (t[0], t[1]);
        let crosses = (a.binary_search(&u).is_ok() && b.binary_search(&v).is_ok())
            || (b.binary_search(&u).is_ok() && a.binary_search(&v).is_ok());
        if !crosses {
            return false;
        }
        if partner[u] != usize::MAX && partner[u] != v {
            return false;
        }
        partner[u] = v;
    }
    // symmetric and total
    (0..points).all(|u| partner[u] != usize::MAX && partner[partner[u]] == u)
}

/// Computes standard-form relations for a regular class with cyclic or
/// dihedral automorphism group: the minimal qualifying keyed 2-orbits.
/// `fragment` must be the induced substructure of the class alone.
pub fn standard_form_relations(fragment: &Structure) -> Result<StandardForm> {
    let canon = canonical_data(fragment)?;
    standard_form_from_canon(fragment, &canon)
}

pub fn standard_form_from_canon(
    fragment: &Structure,
    canon: &CanonData,
) -> Result<StandardForm> {
    let n = fragment.n;
    if !canon.aut.is_regular() {
        return Err(Error::NotRegular);
    }
    let kind = canon.aut.group_kind();
    let orbits = ordered_k_orbits(canon, 2);
    match kind {
        GroupKind::Cyclic(_) => {
            for o in &orbits {
                if is_single_directed_cycle(&o.tuples, n) {
                    return Ok(StandardForm {
                        cycle_relation: o.tuples.clone(),
                        match_relation: o.tuples.clone(),
                    });
                }
            }
            Err(Error::NotDihedralColors(
                "no directed-cycle 2-orbit in a regular cyclic class".into(),
            ))
        }
        GroupKind::Dihedral(m) if m >= 2 => {
            for o in &orbits {
                if let Some((a, b)) = is_two_directed_cycles(&o.tuples, n) {
                    for o2 in &orbits {
                        if o2.tuples == o.tuples {
                            continue;
                        }
                        if is_cross_matching(&o2.tuples, &a, &b, n) {
                            return Ok(StandardForm {
                                cycle_relation: o.tuples.clone(),
                                match_relation: o2.tuples.clone(),
                            });
                        }
                    }
                }
            }
            Err(Error::NotDihedralColors(
                "no standard-form orbit pair in a regular dihedral class".into(),
            ))
        }
        _ => Err(Error::NotDihedralColors(format!(
            "class group is {kind:?}, neither cyclic nor dihedral"
        ))),
    }
}

/// Builds the standard-form gadget structure realizing D_n (n >= 2) on 2n
/// points: two opposite directed n-cycles plus a perfect matching. Relation
/// names are the given prefix plus "c"/"m".
pub fn dihedral_gadget(n: usize, prefix: &str) -> Structure {
    assert!(n >= 2);
    let mut cycle = Vec::new();
    let mut matching = Vec::new();
    for i in 0..n {
        cycle.push(vec![i, (i + 1) % n]);
        cycle.push(vec![n + ((i + 1) % n), n + i]);
        matching.push(vec![i, n + i]);
        matching.push(vec![n + i, i]);
    }
    Structure::new(
        vec![0; 2 * n],
        vec![
            crate::structure::Relation::new(format!("{prefix}c"), 2, cycle),
            crate::structure::Relation::new(format!("{prefix}m"), 2, matching),
        ],
    )
    .unwrap()
}

/// A directed n-cycle gadget realizing C_n on n points.
pub fn cyclic_gadget(n: usize, prefix: &str) -> Structure {
    assert!(n >= 1);
    let tuples = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
    Structure::new(
        vec![0; n],
        vec![crate::structure::Relation::new(format!("{prefix}c"), 2, tuples)],
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon_order::aut_group;

    #[test]
    fn identity_is_a_rotation() {
        let d5 = dihedral_group(5);
        let id = d5.identity();
        assert_eq!(classify_element(&id, &d5).unwrap(), ElementClass::Rotation);
    }

    #[test]
    fn order_5_elements_of_d5_are_rotations() {
        let d5 = dihedral_group(5);
        for g in d5.elements() {
            if g.order() == 5 {
                assert_eq!(classify_element(g, &d5).unwrap(), ElementClass::Rotation);
            }
        }
    }

    #[test]
    fn non_central_involutions_of_d4_are_reflections() {
        let d4 = dihedral_group(4);
        let mut rotations = 0;
        let mut reflections = 0;
        for g in d4.elements() {
            match classify_element(g, &d4).unwrap() {
                ElementClass::Rotation => rotations += 1,
                ElementClass::Reflection => reflections += 1,
                ElementClass::Mixed => unreachable!(),
            }
        }
        assert_eq!((rotations, reflections), (4, 4));
        // the central involution r^2 is a rotation; it commutes with r
        let r2 = d4
            .elements()
            .iter()
            .find(|g| g.order() == 2 && classify_element(g, &d4).unwrap() == ElementClass::Rotation)
            .expect("central involution");
        assert_eq!(r2.apply(0), 2);
    }

    #[test]
    fn classify_rejects_degenerate_n() {
        let d2 = dihedral_group(2);
        let g = d2.elements()[1].clone();
        assert!(matches!(
            classify_element(&g, &d2),
            Err(Error::DegenerateN { n: 2 })
        ));
    }

    #[test]
    fn product_rules_for_rotations_and_reflections() {
        // rot*rot and refl*refl are rotations; rot*refl is a reflection
        for n in 3..=12 {
            let d = dihedral_group(n);
            for a in d.elements() {
                for b in d.elements() {
                    let ca = classify_element(a, &d).unwrap();
                    let cb = classify_element(b, &d).unwrap();
                    let cab = classify_element(&a.compose(b), &d).unwrap();
                    let expected = if ca == cb {
                        ElementClass::Rotation
                    } else {
                        ElementClass::Reflection
                    };
                    assert_eq!(cab, expected);
                }
            }
        }
    }

    #[test]
    fn rotation_subgroup_is_cyclic_of_order_n() {
        for n in [3usize, 4, 5, 6, 7] {
            let d = dihedral_group(n);
            let rot = rotation_subgroup(&d).unwrap();
            assert_eq!(rot.order(), n);
            assert_eq!(rot.group_kind(), GroupKind::Cyclic(n));
        }
    }

    #[test]
    fn diagonal_of_d5_cubed_is_rotate_or_reflect() {
        let d5 = dihedral_group(5);
        let factors = vec![d5.clone(), d5.clone(), d5.clone()];
        let elements = d5.elements().iter().map(|g| vec![g, g, g]);
        assert!(is_rotate_or_reflect(elements, &factors).unwrap());
    }

    #[test]
    fn mixed_element_is_not_rotate_or_reflect() {
        let d5 = dihedral_group(5);
        let factors = vec![d5.clone(), d5.clone()];
        let refl = d5
            .elements()
            .iter()
            .find(|g| classify_element(g, &d5).unwrap() == ElementClass::Reflection)
            .unwrap();
        let id = d5.identity();
        let idref = vec![vec![&id, refl]];
        let idref: Vec<Vec<&Perm>> = idref;
        assert!(!is_rotate_or_reflect(idref, &factors).unwrap());
    }

    #[test]
    fn cfi_group_has_order_4() {
        assert_eq!(cfi_group().order(), 4);
    }

    #[test]
    fn double_cfi_group_has_order_32() {
        let g = double_cfi_group();
        assert_eq!(g.order(), 32);
    }

    #[test]
    fn double_cfi_is_not_rotate_or_reflect() {
        let g = double_cfi_group();
        let d4s: Vec<PermGroup> = (0..3)
            .map(|i| {
                let dom: Vec<usize> = (4 * i..4 * i + 4).collect();
                let elems = g
                    .elements()
                    .iter()
                    .map(|e| e.restrict(&dom).unwrap())
                    .collect();
                PermGroup::from_elements(4, elems)
            })
            .collect();
        for f in &d4s {
            assert_eq!(f.group_kind(), GroupKind::Dihedral(4));
        }
        let elements: Vec<Vec<&Perm>> = Vec::new();
        drop(elements);
        let comps: Vec<Vec<Perm>> = g
            .elements()
            .iter()
            .map(|e| {
                (0..3)
                    .map(|i| {
                        let dom: Vec<usize> = (4 * i..4 * i + 4).collect();
                        e.restrict(&dom).unwrap()
                    })
                    .collect()
            })
            .collect();
        let views = comps.iter().map(|c| c.iter().collect::<Vec<&Perm>>());
        assert!(!is_rotate_or_reflect(views, &d4s).unwrap());
    }

    #[test]
    fn standard_form_of_regular_c4() {
        let frag = cyclic_gadget(4, "g");
        let sf = standard_form_relations(&frag).unwrap();
        assert!(is_single_directed_cycle(&sf.cycle_relation, 4));
        assert_eq!(sf.cycle_relation, sf.match_relation);
    }

    #[test]
    fn standard_form_of_regular_d5() {
        let frag = dihedral_gadget(5, "g");
        let aut = aut_group(&frag, 1 << 10).unwrap();
        assert_eq!(aut.order(), 10);
        let sf = standard_form_relations(&frag).unwrap();
        let comps = sf.cycle_components(10);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].len(), 5);
    }

    #[test]
    fn standard_form_of_regular_d2_has_distinct_relations() {
        let frag = dihedral_gadget(2, "g");
        let aut = aut_group(&frag, 1 << 10).unwrap();
        assert_eq!(aut.order(), 4);
        let sf = standard_form_relations(&frag).unwrap();
        assert_ne!(sf.cycle_relation, sf.match_relation);
        assert_eq!(sf.cycle_components(4).len(), 2);
    }

    #[test]
    fn standard_form_aut_equals_class_aut() {
        // Aut(C) = Aut((C, R_i, R_j)) for the chosen orbits
        let frag = dihedral_gadget(4, "g");
        let sf = standard_form_relations(&frag).unwrap();
        let sf_struct = Structure::new(
            vec![0; 8],
            vec![
                crate::structure::Relation::new("c", 2, sf.cycle_relation.clone()),
                crate::structure::Relation::new("m", 2, sf.match_relation.clone()),
            ],
        )
        .unwrap();
        let a1 = aut_group(&frag, 1 << 10).unwrap();
        let a2 = aut_group(&sf_struct, 1 << 10).unwrap();
        assert_eq!(a1, a2);
    }
}
