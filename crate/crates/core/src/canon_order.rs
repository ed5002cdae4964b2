//! Canonical orderings of small fragments.
//!
//! The canonical order of a fragment is selected prefix-lexicographically:
//! among all orders refining the color preorder, minimize the relabeled
//! relation content position by position. The minimizing orders form a coset
//! `sigma0 . Aut(fragment)`, so orbit keys taken as minima of `sigma0`-images
//! over an orbit do not depend on which minimizer was found. This realizes a
//! relabeling-invariant order on k-orbits without any logic machinery.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::perm::{Perm, PermGroup, INTERNAL_GROUP_BOUND};
use crate::structure::Structure;

/// Canonical data of a fragment: one minimizing order, the automorphism
/// group, and the canonical bytes.
#[derive(Clone, Debug)]
pub struct CanonData {
    /// rank of each point under the chosen minimizing order
    pub sigma0: Vec<usize>,
    pub aut: PermGroup,
    pub bytes: Vec<u8>,
}

/// Explicit automorphism group of a fragment: all color- and
/// relation-preserving bijections, by backtracking with partial-tuple
/// pruning. `cap` bounds the number of collected automorphisms.
pub fn aut_group(fragment: &Structure, cap: usize) -> Result<PermGroup> {
    let n = fragment.n;
    if n == 0 {
        return Ok(PermGroup::trivial(0));
    }
    // tuple lookup per relation
    let tuple_sets: Vec<HashMap<&[usize], ()>> = fragment
        .relations
        .iter()
        .map(|r| r.tuples.iter().map(|t| (t.as_slice(), ())).collect())
        .collect();
    // incidences: point -> list of (relation, tuple index)
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (ri, r) in fragment.relations.iter().enumerate() {
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
    // degree signature per point: counts per (relation, position)
    let sig: Vec<Vec<usize>> = (0..n)
        .map(|p| {
            let mut s = Vec::new();
            for r in &fragment.relations {
                for pos in 0..r.arity {
                    s.push(r.tuples.iter().filter(|t| t[pos] == p).count());
                }
            }
            s
        })
        .collect();

    let mut found: Vec<Perm> = Vec::new();
    let mut image: Vec<Option<usize>> = vec![None; n];
    let mut used: Vec<bool> = vec![false; n];

    fn consistent(
        fragment: &Structure,
        tuple_sets: &[HashMap<&[usize], ()>],
        incident: &[Vec<(usize, usize)>],
        image: &[Option<usize>],
        p: usize,
    ) -> bool {
        for &(ri, ti) in &incident[p] {
            let t = &fragment.relations[ri].tuples[ti];
            if t.iter().all(|&e| image[e].is_some()) {
                let img: Vec<usize> = t.iter().map(|&e| image[e].unwrap()).collect();
                if !tuple_sets[ri].contains_key(img.as_slice()) {
                    return false;
                }
            }
        }
        true
    }

    fn search(
        fragment: &Structure,
        tuple_sets: &[HashMap<&[usize], ()>],
        incident: &[Vec<(usize, usize)>],
        sig: &[Vec<usize>],
        image: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        found: &mut Vec<Perm>,
        cap: usize,
        p: usize,
    ) -> Result<()> {
        let n = fragment.n;
        if p == n {
            let img: Vec<usize> = image.iter().map(|o| o.unwrap()).collect();
            found.push(Perm::from_image(img).expect("bijection"));
            if found.len() > cap {
                return Err(Error::FragmentTooLarge { points: n, cap });
            }
            return Ok(());
        }
        for q in fragment.class_range(fragment.class_of(p)) {
            if used[q] || sig[p] != sig[q] {
                continue;
            }
            image[p] = Some(q);
            used[q] = true;
            if consistent(fragment, tuple_sets, incident, image, p) {
                search(
                    fragment, tuple_sets, incident, sig, image, used, found, cap,
                    p + 1,
                )?;
            }
            image[p] = None;
            used[q] = false;
        }
        Ok(())
    }

    search(
        fragment,
        &tuple_sets,
        &incident,
        &sig,
        &mut image,
        &mut used,
        &mut found,
        cap,
        0,
    )?;
    Ok(PermGroup::from_elements(n, found))
}

/// Per-relation sorted tuple lists over the placed prefix; the comparison key
/// of a partial placement.
type PrefixKey = Vec<Vec<Vec<usize>>>;

struct SearchState {
    /// placement[rank] = point
    placement: Vec<usize>,
    rank_of: Vec<Option<usize>>,
    key: PrefixKey,
}

impl SearchState {
    /// Future-relevant data: the placed set plus, for every unplaced point,
    /// its attachment pattern to placed positions. Two states with equal
    /// keys and equal signatures reach the same minima under identical
    /// completions, so one of them can be dropped.
    fn signature(&self, fragment: &Structure) -> Vec<u8> {
        let mut sig: Vec<Vec<usize>> = Vec::new();
        let mut placed: Vec<usize> = Vec::new();
        for p in 0..fragment.n {
            if self.rank_of[p].is_some() {
                placed.push(p);
            }
        }
        sig.push(placed);
        for (ri, r) in fragment.relations.iter().enumerate() {
            for (ti, t) in r.tuples.iter().enumerate() {
                let mut any_placed = false;
                let mut any_open = false;
                for &e in t {
                    if self.rank_of[e].is_some() {
                        any_placed = true;
                    } else {
                        any_open = true;
                    }
                }
                if any_placed && any_open {
                    let mut row = vec![ri, ti];
                    for &e in t {
                        match self.rank_of[e] {
                            Some(rank) => {
                                row.push(1);
                                row.push(rank);
                            }
                            None => {
                                row.push(0);
                                row.push(e);
                            }
                        }
                    }
                    sig.push(row);
                }
            }
        }
        // flat byte encoding for hashing
        let mut bytes = Vec::new();
        for row in sig {
            for x in row {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
            bytes.push(0xff);
        }
        bytes
    }
}

/// The prefix-lexicographically minimal orders of a structure: a frontier
/// search over positions, keeping only placements with minimal relabeled
/// content, deduplicated by future-relevant signatures. Returns the final
/// states' orders (all of equal minimal bytes).
fn min_orders(structure: &Structure, state_cap: usize) -> Result<Vec<Vec<usize>>> {
    let n = structure.n;
    if n == 0 {
        return Ok(vec![vec![]]);
    }
    let mut frontier = vec![SearchState {
        placement: Vec::new(),
        rank_of: vec![None; n],
        key: vec![Vec::new(); structure.relations.len()],
    }];
    let class_at_rank: Vec<usize> = structure.colors.clone();
    for rank in 0..n {
        let class = class_at_rank[rank];
        let mut best_key: Option<PrefixKey> = None;
        let mut best: Vec<SearchState> = Vec::new();
        for state in &frontier {
            for p in structure.class_range(class) {
                if state.rank_of[p].is_some() {
                    continue;
                }
                let mut key = state.key.clone();
                let mut rank_of = state.rank_of.clone();
                rank_of[p] = Some(rank);
                for (ri, r) in structure.relations.iter().enumerate() {
                    let mut added = false;
                    for t in &r.tuples {
                        if t.contains(&p) && t.iter().all(|&e| rank_of[e].is_some()) {
                            key[ri].push(t.iter().map(|&e| rank_of[e].unwrap()).collect());
                            added = true;
                        }
                    }
                    if added {
                        key[ri].sort();
                        key[ri].dedup();
                    }
                }
                let better = match &best_key {
                    None => std::cmp::Ordering::Less,
                    Some(b) => key.cmp(b),
                };
                if better == std::cmp::Ordering::Greater {
                    continue;
                }
                let mut placement = state.placement.clone();
                placement.push(p);
                let next = SearchState {
                    placement,
                    rank_of,
                    key: key.clone(),
                };
                if better == std::cmp::Ordering::Less {
                    best_key = Some(key);
                    best.clear();
                }
                best.push(next);
            }
        }
        let mut seen: std::collections::HashSet<Vec<u8>> = std::collections::HashSet::new();
        let mut kept: Vec<SearchState> = Vec::new();
        for state in best {
            let sig = state.signature(structure);
            if seen.insert(sig) {
                kept.push(state);
            }
        }
        if kept.len() > state_cap {
            return Err(Error::TooLarge(format!(
                "canonical search frontier exceeded {state_cap} states"
            )));
        }
        frontier = kept;
        if frontier.is_empty() {
            return Err(Error::InternalInfeasible(
                "canonical search lost all states".into(),
            ));
        }
    }
    Ok(frontier
        .into_iter()
        .map(|state| {
            let mut s = vec![0usize; n];
            for (rank, &p) in state.placement.iter().enumerate() {
                s[p] = rank;
            }
            s
        })
        .collect())
}

/// Canonical data of a fragment: a minimizing order, the automorphism group,
/// and the canonical bytes.
pub fn canonical_data(fragment: &Structure) -> Result<CanonData> {
    canonical_data_capped(fragment, INTERNAL_GROUP_BOUND)
}

pub fn canonical_data_capped(fragment: &Structure, cap: usize) -> Result<CanonData> {
    let aut = aut_group(fragment, cap)?;
    let orders = min_orders(fragment, 1 << 20)?;
    let sigma0 = orders.into_iter().next().expect("at least one order");
    let bytes = fragment.encode_ordered(&sigma0)?;
    Ok(CanonData { sigma0, aut, bytes })
}

/// One prefix-lexicographically minimal order of a structure, without
/// computing the automorphism group. The brute-force canonizer.
pub fn min_order(structure: &Structure, state_cap: usize) -> Result<Vec<usize>> {
    Ok(min_orders(structure, state_cap)?
        .into_iter()
        .next()
        .expect("at least one order"))
}

/// A k-orbit with its relabeling-invariant key.
#[derive(Clone, Debug)]
pub struct KeyedOrbit {
    /// sorted tuples of the orbit
    pub tuples: Vec<Vec<usize>>,
    /// min over the orbit of the sigma0-image; invariant under the choice of
    /// minimizer because orbits are Aut-closed
    pub key: Vec<usize>,
}

/// The k-orbits of the fragment's automorphism group, ordered by their keys.
/// The order is invariant under relabeling the fragment.
pub fn ordered_k_orbits(canon: &CanonData, k: usize) -> Vec<KeyedOrbit> {
    let mut orbits: Vec<KeyedOrbit> = canon
        .aut
        .k_orbits(k)
        .into_iter()
        .map(|tuples| {
            let key = tuples
                .iter()
                .map(|t| t.iter().map(|&e| canon.sigma0[e]).collect::<Vec<usize>>())
                .min()
                .expect("orbit nonempty");
            KeyedOrbit { tuples, key }
        })
        .collect();
    orbits.sort_by(|a, b| a.key.cmp(&b.key));
    orbits
}

/// Ordered 1-orbit index of every point (position of its orbit in the keyed
/// order).
pub fn point_orbit_indices(canon: &CanonData) -> Vec<usize> {
    let orbits = ordered_k_orbits(canon, 1);
    let mut idx = vec![0usize; canon.sigma0.len()];
    for (i, o) in orbits.iter().enumerate() {
        for t in &o.tuples {
            idx[t[0]] = i;
        }
    }
    idx
}

/// Smallest l such that the group acts regularly and faithfully on one of
/// its l-orbits, together with the key-first such orbit.
pub fn min_regular_orbit(canon: &CanonData) -> (usize, Vec<Vec<usize>>) {
    let group = &canon.aut;
    let n = canon.sigma0.len();
    let target = group.order();
    if n == 0 || target == 1 {
        // trivial group: any single point is a regular faithful 1-orbit;
        // pick the key-first orbit
        let orbits = ordered_k_orbits(canon, 1);
        return (1, orbits[0].tuples.clone());
    }
    // orbit representatives of length l, grown incrementally
    let mut reps: Vec<Vec<usize>> = vec![vec![]];
    for l in 1..=target {
        let mut next_reps: Vec<Vec<usize>> = Vec::new();
        let mut seen_keys: std::collections::HashSet<Vec<usize>> =
            std::collections::HashSet::new();
        let mut candidates: Vec<(Vec<usize>, Vec<Vec<usize>>)> = Vec::new();
        for rep in &reps {
            for p in 0..n {
                let mut t = rep.clone();
                t.push(p);
                let orbit = group.tuple_orbit(&t);
                let key: Vec<usize> = orbit
                    .iter()
                    .map(|s| s.iter().map(|&e| canon.sigma0[e]).collect::<Vec<usize>>())
                    .min()
                    .unwrap();
                if seen_keys.contains(&key) {
                    continue;
                }
                seen_keys.insert(key.clone());
                next_reps.push(t.clone());
                if orbit.len() == target && group.tuple_stabilizer(&t).order() == 1 {
                    candidates.push((key, orbit));
                }
            }
        }
        if !candidates.is_empty() {
            candidates.sort_by(|a, b| a.0.cmp(&b.0));
            return (l, candidates.swap_remove(0).1);
        }
        reps = next_reps;
    }
    unreachable!("an |G|-tuple enumerating a base always acts regularly");
}

/// Canonical orbit of orderings of `subset` under the setwise stabilizer of
/// `subset` in the fragment's automorphism group. Adding this orbit as a
/// homogeneous relation pins the automorphism group of `subset` (as a class
/// of its own) to exactly that restricted stabilizer.
///
/// The orbit is selected by minimizing, over all minimizing orders
/// `sigma0 . alpha`, the image of the sorted subset; equal minima always lie
/// in one stabilizer orbit, so the choice is relabeling-invariant.
pub fn pin_orbit_for_subset(canon: &CanonData, subset: &[usize]) -> Vec<Vec<usize>> {
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    let mut best: Option<(Vec<usize>, Vec<usize>)> = None; // (image key, ordering tuple)
    for alpha in canon.aut.elements() {
        let mut pairs: Vec<(usize, usize)> = sorted
            .iter()
            .map(|&p| (canon.sigma0[alpha.apply(p)], p))
            .collect();
        pairs.sort();
        let key: Vec<usize> = pairs.iter().map(|&(k, _)| k).collect();
        let tuple: Vec<usize> = pairs.iter().map(|&(_, p)| p).collect();
        if best.as_ref().map_or(true, |(bk, _)| key < *bk) {
            best = Some((key, tuple));
        }
    }
    let (_, t0) = best.expect("group nonempty");
    let stab = canon.aut.setwise_stabilizer(&sorted);
    let mut tuples: Vec<Vec<usize>> = stab
        .elements()
        .iter()
        .map(|b| b.apply_tuple(&t0))
        .collect();
    tuples.sort();
    tuples.dedup();
    tuples
}

/// Canonical orbit of orderings of a family of new vertices (orbit-tuple
/// vertices or quotient-block vertices), given one sigma0-derived key per
/// vertex and the induced action. The key multiset is invariant across the
/// minimizing orders, so sorting by key picks a representative ordering
/// whose action-orbit does not depend on the minimizer; adding the orbit as
/// a relation pins the automorphism group of the new class to exactly
/// `action`.
pub fn pin_orbit_from_keys(keys: &[Vec<usize>], action: &PermGroup) -> Vec<Vec<usize>> {
    let mut keyed: Vec<(&Vec<usize>, usize)> =
        keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    keyed.sort();
    let t0: Vec<usize> = keyed.into_iter().map(|(_, i)| i).collect();
    let mut tuples: Vec<Vec<usize>> = action
        .elements()
        .iter()
        .map(|g| g.apply_tuple(&t0))
        .collect();
    tuples.sort();
    tuples.dedup();
    tuples
}
