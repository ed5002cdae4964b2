//! Ground-truth brute force: canonical forms by exhaustive classwise-pruned
//! order search, isomorphism testing by backtracking, and the seeded
//! generator for structures with dihedral colors.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::canon_order::min_order;
use crate::dihedral::{cyclic_gadget, dihedral_gadget};
use crate::error::{Error, Result};
use crate::perm::{Perm, PermGroup};
use crate::structure::{CanonicalForm, Relation, Structure};

const STATE_CAP: usize = 1 << 20;

/// The minimal ordered encoding over all orders refining the preorder,
/// searched prefix-lexicographically with classwise pruning, together with a
/// witness order.
pub fn brute_canonical(h: &Structure) -> Result<CanonicalForm> {
    let witness = min_order(h, STATE_CAP)?;
    let encoding = h.encode_ordered(&witness)?;
    Ok(CanonicalForm {
        encoding,
        witness_order: witness,
    })
}

/// Backtracking search for a color- and relation-preserving bijection.
pub fn brute_iso(h1: &Structure, h2: &Structure) -> Result<bool> {
    if h1.n != h2.n || h1.class_count() != h2.class_count() {
        return Ok(false);
    }
    let sizes1: Vec<usize> = h1.classes().iter().map(|r| r.len()).collect();
    let sizes2: Vec<usize> = h2.classes().iter().map(|r| r.len()).collect();
    if sizes1 != sizes2 {
        return Ok(false);
    }
    // relations must agree on names, arities, and tuple counts
    if h1.relations.len() != h2.relations.len() {
        return Ok(false);
    }
    for (r1, r2) in h1.relations.iter().zip(&h2.relations) {
        if r1.name != r2.name || r1.arity != r2.arity || r1.tuples.len() != r2.tuples.len() {
            return Ok(false);
        }
    }
    let tuple_sets: Vec<HashMap<&[usize], ()>> = h2
        .relations
        .iter()
        .map(|r| r.tuples.iter().map(|t| (t.as_slice(), ())).collect())
        .collect();
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); h1.n];
    for (ri, r) in h1.relations.iter().enumerate() {
        for (ti, t) in r.tuples.iter().enumerate() {
            let mut seen = Vec::new();
            for &e in t {
                if !seen.contains(&e) {
                    seen.push(e);
                    incident[e].push((ri, ti));
                }
            }
        }
    }
    let sig = |h: &Structure, p: usize| -> Vec<usize> {
        let mut s = Vec::new();
        for r in &h.relations {
            for pos in 0..r.arity {
                s.push(r.tuples.iter().filter(|t| t[pos] == p).count());
            }
        }
        s
    };
    let sig1: Vec<Vec<usize>> = (0..h1.n).map(|p| sig(h1, p)).collect();
    let sig2: Vec<Vec<usize>> = (0..h2.n).map(|p| sig(h2, p)).collect();

    fn search(
        h1: &Structure,
        h2: &Structure,
        tuple_sets: &[HashMap<&[usize], ()>],
        incident: &[Vec<(usize, usize)>],
        sig1: &[Vec<usize>],
        sig2: &[Vec<usize>],
        image: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        p: usize,
    ) -> bool {
        if p == h1.n {
            return true;
        }
        for q in h2.class_range(h1.class_of(p)) {
            if used[q] || sig1[p] != sig2[q] {
                continue;
            }
            image[p] = Some(q);
            used[q] = true;
            let mut ok = true;
            'tuples: for &(ri, ti) in &incident[p] {
                let t = &h1.relations[ri].tuples[ti];
                if t.iter().all(|&e| image[e].is_some()) {
                    let img: Vec<usize> = t.iter().map(|&e| image[e].unwrap()).collect();
                    if !tuple_sets[ri].contains_key(img.as_slice()) {
                        ok = false;
                        break 'tuples;
                    }
                }
            }
            if ok && search(h1, h2, tuple_sets, incident, sig1, sig2, image, used, p + 1) {
                return true;
            }
            image[p] = None;
            used[q] = false;
        }
        false
    }

    let mut image = vec![None; h1.n];
    let mut used = vec![false; h2.n];
    Ok(search(
        h1,
        h2,
        &tuple_sets,
        &incident,
        &sig1,
        &sig2,
        &mut image,
        &mut used,
        0,
    ))
}

/// Palette of class kinds for the generator.
#[derive(Clone, Debug)]
pub struct Palette {
    pub allow_cyclic: bool,
    pub cyclic_n: (usize, usize),
    pub allow_dihedral: bool,
    pub dihedral_n: (usize, usize),
    pub odd_only: bool,
}

impl Default for Palette {
    fn default() -> Palette {
        Palette {
            allow_cyclic: true,
            cyclic_n: (1, 6),
            allow_dihedral: true,
            dihedral_n: (2, 4),
            odd_only: false,
        }
    }
}

/// Deterministic generator of q-bounded structures with dihedral colors.
/// Classes are standard-form gadgets; couplings are sampled orbit-closed
/// under subgroups of the gadget groups, so the class groups are exactly the
/// gadget groups.
#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub q: usize,
    pub classes: (usize, usize),
    pub palette: Palette,
    /// probability of coupling a class pair (and, scaled down, a triple)
    pub density: f64,
    pub allow_arity3: bool,
}

impl Default for GeneratorSpec {
    fn default() -> GeneratorSpec {
        GeneratorSpec {
            seed: 0,
            q: 8,
            classes: (2, 5),
            palette: Palette::default(),
            density: 0.6,
            allow_arity3: true,
        }
    }
}

struct Gadget {
    structure: Structure,
    group: PermGroup,
}

fn make_gadget(rng: &mut ChaCha8Rng, spec: &GeneratorSpec, class: usize) -> Gadget {
    let p = &spec.palette;
    let mut options: Vec<(bool, usize)> = Vec::new(); // (dihedral?, n)
    if p.allow_cyclic {
        for n in p.cyclic_n.0.max(1)..=p.cyclic_n.1.min(spec.q) {
            if !p.odd_only || n % 2 == 1 || n <= 2 {
                options.push((false, n));
            }
        }
    }
    if p.allow_dihedral {
        for n in p.dihedral_n.0.max(2)..=p.dihedral_n.1 {
            if 2 * n <= spec.q && (!p.odd_only || n % 2 == 1) {
                options.push((true, n));
            }
        }
    }
    assert!(!options.is_empty(), "palette allows no class kinds");
    let (dihedral, n) = options[rng.gen_range(0..options.len())];
    let prefix = format!("g{class}");
    let structure = if dihedral {
        dihedral_gadget(n, &prefix)
    } else {
        cyclic_gadget(n, &prefix)
    };
    let group = crate::canon_order::aut_group(&structure, 1 << 12).expect("gadget group");
    Gadget { structure, group }
}

/// Orbit of a tuple under the subgroup generated by the given element
/// tuples acting componentwise.
fn coupled_orbit(
    groups: &[&PermGroup],
    generators: &[Vec<&Perm>],
    start: &[usize],
) -> Vec<Vec<usize>> {
    let mut orbit: Vec<Vec<usize>> = vec![start.to_vec()];
    let mut seen: std::collections::HashSet<Vec<usize>> =
        orbit.iter().cloned().collect();
    let mut queue = orbit.clone();
    while let Some(t) = queue.pop() {
        for gen in generators {
            let next: Vec<usize> = t
                .iter()
                .enumerate()
                .map(|(i, &x)| gen[i].apply(x))
                .collect();
            if seen.insert(next.clone()) {
                orbit.push(next.clone());
                queue.push(next);
            }
        }
    }
    let _ = groups;
    orbit.sort();
    orbit
}

pub fn generate(spec: &GeneratorSpec) -> Structure {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = rng.gen_range(spec.classes.0..=spec.classes.1);
    let gadgets: Vec<Gadget> = (0..k).map(|c| make_gadget(&mut rng, spec, c)).collect();
    // assemble universe
    let mut colors: Vec<usize> = Vec::new();
    let mut base: Vec<usize> = Vec::new();
    for (c, g) in gadgets.iter().enumerate() {
        base.push(colors.len());
        colors.extend(std::iter::repeat(c).take(g.structure.n));
    }
    let mut relations: Vec<Relation> = Vec::new();
    for (c, g) in gadgets.iter().enumerate() {
        for r in &g.structure.relations {
            let tuples: Vec<Vec<usize>> = r
                .tuples
                .iter()
                .map(|t| t.iter().map(|&e| base[c] + e).collect())
                .collect();
            relations.push(Relation::new(r.name.clone(), r.arity, tuples));
        }
    }
    // pairwise couplings
    let mut xcount = 0usize;
    for a in 0..k {
        for b in (a + 1)..k {
            if !rng.gen_bool(spec.density) {
                continue;
            }
            let (ga, gb) = (&gadgets[a], &gadgets[b]);
            let ngens = rng.gen_range(1..=2usize);
            let gens: Vec<Vec<&Perm>> = (0..ngens)
                .map(|_| {
                    vec![
                        &ga.group.elements()[rng.gen_range(0..ga.group.order())],
                        &gb.group.elements()[rng.gen_range(0..gb.group.order())],
                    ]
                })
                .collect();
            let start = vec![
                rng.gen_range(0..ga.structure.n),
                rng.gen_range(0..gb.structure.n),
            ];
            let orbit = coupled_orbit(&[&ga.group, &gb.group], &gens, &start);
            let tuples: Vec<Vec<usize>> = orbit
                .iter()
                .map(|t| vec![base[a] + t[0], base[b] + t[1]])
                .collect();
            relations.push(Relation::new(format!("x{xcount}_{a}_{b}"), 2, tuples));
            xcount += 1;
        }
    }
    // triple couplings
    if spec.allow_arity3 && k >= 3 {
        for a in 0..k {
            for b in (a + 1)..k {
                for c in (b + 1)..k {
                    if !rng.gen_bool(spec.density / 2.0) {
                        continue;
                    }
                    let (ga, gb, gc) = (&gadgets[a], &gadgets[b], &gadgets[c]);
                    let ngens = rng.gen_range(1..=2usize);
                    let gens: Vec<Vec<&Perm>> = (0..ngens)
                        .map(|_| {
                            vec![
                                &ga.group.elements()[rng.gen_range(0..ga.group.order())],
                                &gb.group.elements()[rng.gen_range(0..gb.group.order())],
                                &gc.group.elements()[rng.gen_range(0..gc.group.order())],
                            ]
                        })
                        .collect();
                    let start = vec![
                        rng.gen_range(0..ga.structure.n),
                        rng.gen_range(0..gb.structure.n),
                        rng.gen_range(0..gc.structure.n),
                    ];
                    let orbit =
                        coupled_orbit(&[&ga.group, &gb.group, &gc.group], &gens, &start);
                    let tuples: Vec<Vec<usize>> = orbit
                        .iter()
                        .map(|t| vec![base[a] + t[0], base[b] + t[1], base[c] + t[2]])
                        .collect();
                    relations.push(Relation::new(
                        format!("x{xcount}_{a}_{b}_{c}"),
                        3,
                        tuples,
                    ));
                    xcount += 1;
                }
            }
        }
    }
    Structure::new(colors, relations).expect("generated structure is valid")
}

/// A random relabeling of a structure that respects the preorder (shuffles
/// points within classes), together with the relabeled copy.
pub fn random_relabeling(h: &Structure, seed: u64) -> (Vec<usize>, Structure) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed_5eed);
    let mut order: Vec<usize> = (0..h.n).collect();
    for range in h.classes() {
        let points: Vec<usize> = range.clone().collect();
        let mut shuffled = points.clone();
        for i in (1..shuffled.len()).rev() {
            let j = rng.gen_range(0..=i);
            shuffled.swap(i, j);
        }
        for (slot, &p) in points.iter().zip(&shuffled) {
            order[*slot] = p;
        }
    }
    // order maps point -> new position within its class layout; invert to a
    // rank map: point p goes to position order^{-1}... build rank directly
    let mut rank = vec![0usize; h.n];
    for (pos, &p) in order.iter().enumerate() {
        rank[p] = pos;
    }
    (rank.clone(), h.relabeled(&rank))
}

/// True iff every non-abelian class has an odd dihedral group.
pub fn is_odd_dihedral(h: &Structure) -> Result<bool> {
    use crate::perm::GroupKind;
    for range in h.classes() {
        let points: Vec<usize> = range.collect();
        let (frag, _) = h.induced(&points);
        let aut = crate::canon_order::aut_group(&frag, 1 << 14)?;
        if aut.is_abelian() {
            continue;
        }
        match aut.group_kind() {
            GroupKind::Dihedral(n) if n % 2 == 1 => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rigid_structure_has_unique_canonical_order() {
        let h = Structure::new(
            vec![0, 1, 2],
            vec![Relation::new("E", 2, vec![vec![0, 1], vec![1, 2]])],
        )
        .unwrap();
        let c = brute_canonical(&h).unwrap();
        assert_eq!(c.witness_order, vec![0, 1, 2]);
    }

    #[test]
    fn free_class_canonical_form_is_symmetric() {
        let h = Structure::new(vec![0, 0, 0], vec![]).unwrap();
        let c = brute_canonical(&h).unwrap();
        assert_eq!(c.encoding, h.encode_ordered(&[0, 1, 2]).unwrap());
    }

    #[test]
    fn brute_canonical_is_relabeling_invariant() {
        for seed in 0..15 {
            let h = generate(&GeneratorSpec {
                seed,
                classes: (2, 4),
                q: 6,
                ..Default::default()
            });
            let c1 = brute_canonical(&h).unwrap();
            let (_, relabeled) = random_relabeling(&h, seed + 999);
            let c2 = brute_canonical(&relabeled).unwrap();
            assert_eq!(c1.encoding, c2.encoding, "seed {seed}");
        }
    }

    #[test]
    fn iso_accepts_relabelings_and_respects_class_sizes() {
        let h = generate(&GeneratorSpec::default());
        let (_, relabeled) = random_relabeling(&h, 5);
        assert!(brute_iso(&h, &relabeled).unwrap());
        let other = Structure::new(vec![0, 0], vec![]).unwrap();
        assert!(!brute_iso(&h, &other).unwrap());
    }

    #[test]
    fn cfi_twist_is_detected_as_non_isomorphic() {
        // two D_1-style classes of two parallel edge classes with an even vs
        // odd matching twist: the classic CFI-flavor non-isomorphic pair
        let mk = |twist: bool| {
            let e1 = vec![vec![0, 2], vec![1, 3]];
            let e2 = if twist {
                vec![vec![2, 5], vec![3, 4]]
            } else {
                vec![vec![2, 4], vec![3, 5]]
            };
            let closing = vec![vec![4, 0], vec![5, 1]];
            Structure::new(
                vec![0, 0, 1, 1, 2, 2],
                vec![
                    Relation::new("a", 2, e1),
                    Relation::new("b", 2, e2),
                    Relation::new("c", 2, closing),
                ],
            )
            .unwrap()
        };
        assert!(!brute_iso(&mk(false), &mk(true)).unwrap());
        assert_ne!(
            brute_canonical(&mk(false)).unwrap().encoding,
            brute_canonical(&mk(true)).unwrap().encoding
        );
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = GeneratorSpec {
            seed: 42,
            ..Default::default()
        };
        assert_eq!(generate(&spec), generate(&spec));
    }

    #[test]
    fn odd_palette_produces_odd_dihedral_structures() {
        let spec = GeneratorSpec {
            seed: 7,
            q: 10,
            palette: Palette {
                allow_cyclic: true,
                cyclic_n: (1, 5),
                allow_dihedral: true,
                dihedral_n: (3, 5),
                odd_only: true,
            },
            ..Default::default()
        };
        let h = generate(&spec);
        assert!(is_odd_dihedral(&h).unwrap());
    }

    #[test]
    fn generated_class_groups_are_cyclic_or_dihedral() {
        use crate::perm::GroupKind;
        for seed in 0..10 {
            let h = generate(&GeneratorSpec {
                seed,
                ..Default::default()
            });
            for range in h.classes() {
                let points: Vec<usize> = range.collect();
                let (frag, _) = h.induced(&points);
                let aut = crate::canon_order::aut_group(&frag, 1 << 12).unwrap();
                match aut.group_kind() {
                    GroupKind::Cyclic(_) | GroupKind::Dihedral(_) => {}
                    other => panic!("unexpected class kind {other:?}"),
                }
            }
        }
    }
}
