//! Canonization-preserving reductions: transitivity on three color classes,
//! typed relations, regular classes, arity adjustment, and the 2-injective
//! quotient structure. Every step carries a back-map turning a total order
//! on its output into a total order on its input.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::canon_order::{
    aut_group, canonical_data, min_regular_orbit, pin_orbit_from_keys, pin_orbit_for_subset,
    point_orbit_indices, CanonData,
};
use crate::error::{Error, Result};
use crate::perm::{Perm, PermGroup, INTERNAL_GROUP_BOUND};
use crate::structure::{Relation, RelationKind, Structure};

/// Hard cap on the size of a regular replacement class.
const MAX_REGULAR_CLASS: usize = 64;

/// One reduction step's back-map data: which input point each output point
/// represents (None for auxiliary vertices). The induced back-map sends an
/// output order to the input order sorting input points by
/// (input class, minimal rank of a representative).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackMapStep {
    pub point_map: Vec<Option<usize>>,
    pub input_n: usize,
    pub input_colors: Vec<usize>,
}

impl BackMapStep {
    pub fn identity(colors: &[usize]) -> BackMapStep {
        BackMapStep {
            point_map: (0..colors.len()).map(Some).collect(),
            input_n: colors.len(),
            input_colors: colors.to_vec(),
        }
    }

    /// Maps a total order on the output (rank per output point) to a total
    /// order on the input, refining the input preorder.
    pub fn back_map(&self, order: &[usize]) -> Result<Vec<usize>> {
        let mut key = vec![usize::MAX; self.input_n];
        for (o, &rep) in self.point_map.iter().enumerate() {
            if let Some(p) = rep {
                key[p] = key[p].min(order[o]);
            }
        }
        if key.iter().any(|&k| k == usize::MAX) {
            return Err(Error::InternalInfeasible(
                "back-map: an input point has no representative".into(),
            ));
        }
        let mut points: Vec<usize> = (0..self.input_n).collect();
        points.sort_by_key(|&p| (self.input_colors[p], key[p]));
        let mut out = vec![0usize; self.input_n];
        for (rank, &p) in points.iter().enumerate() {
            out[p] = rank;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct ReductionStep {
    pub output: Structure,
    pub back: BackMapStep,
}

/// A composed chain of back-maps together with the original structure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackMapChain {
    pub version: u32,
    pub steps: Vec<BackMapStep>,
}

impl BackMapChain {
    pub fn new(steps: Vec<BackMapStep>) -> BackMapChain {
        BackMapChain { version: 1, steps }
    }

    /// Maps an order on the final output back to an order on the original
    /// input.
    pub fn back_map(&self, order: &[usize]) -> Result<Vec<usize>> {
        let mut cur = order.to_vec();
        for step in self.steps.iter().rev() {
            cur = step.back_map(&cur)?;
        }
        Ok(cur)
    }
}

fn canon_capped(fragment: &Structure) -> Result<CanonData> {
    canonical_data(fragment)
}

// ---------------------------------------------------------------------
// reduce_transitive
// ---------------------------------------------------------------------

/// Refines the preorder by ordered-orbit vectors over all subsets of at most
/// three classes, iterated to a fixpoint, and pins every refined class to
/// the restricted stabilizer of its original class group. At the fixpoint
/// the output is transitive on three color classes by construction.
pub fn reduce_transitive(h: &Structure) -> Result<ReductionStep> {
    h.validate()?;
    if h.n == 0 {
        return Ok(ReductionStep {
            output: h.clone(),
            back: BackMapStep::identity(&h.colors),
        });
    }
    // canonical data of every original class fragment, in original labels
    let original_classes = h.classes();
    let mut class_canon: Vec<(CanonData, Vec<usize>)> = Vec::new(); // (canon, fragment->orig)
    for range in &original_classes {
        let points: Vec<usize> = range.clone().collect();
        let (frag, _) = h.induced(&points);
        let canon = canon_capped(&frag)?;
        class_canon.push((canon, points));
    }
    let original_class_of = h.colors.clone();

    // current state: original point at each current position, current colors
    let mut positions: Vec<usize> = (0..h.n).collect(); // current pos -> original point
    let mut colors: Vec<usize> = h.colors.clone();

    let build_current = |positions: &[usize], colors: &[usize]| -> Result<Structure> {
        // relabel h onto current positions and add pinning relations
        let mut rank = vec![0usize; h.n];
        for (pos, &orig) in positions.iter().enumerate() {
            rank[orig] = pos;
        }
        let mut relations: Vec<Relation> = h
            .relations
            .iter()
            .map(|r| {
                Relation::new(
                    r.name.clone(),
                    r.arity,
                    r.tuples
                        .iter()
                        .map(|t| t.iter().map(|&e| rank[e]).collect())
                        .collect(),
                )
            })
            .collect();
        // pinning relation per current class of size >= 2
        let class_count = colors.last().map_or(0, |&c| c + 1);
        for c in 0..class_count {
            let members: Vec<usize> = (0..h.n).filter(|&p| colors[p] == c).collect();
            if members.len() < 2 {
                continue;
            }
            let oc = original_class_of[positions[members[0]]];
            let (canon, orig_points) = &class_canon[oc];
            // subset in fragment-local labels
            let local_of: HashMap<usize, usize> = orig_points
                .iter()
                .enumerate()
                .map(|(i, &p)| (p, i))
                .collect();
            let subset: Vec<usize> = members
                .iter()
                .map(|&pos| local_of[&positions[pos]])
                .collect();
            let orbit = pin_orbit_for_subset(canon, &subset);
            let tuples: Vec<Vec<usize>> = orbit
                .iter()
                .map(|t| t.iter().map(|&l| rank[orig_points[l]]).collect())
                .collect();
            relations.push(Relation::new(
                format!("__t{c}"),
                members.len(),
                tuples,
            ));
        }
        Structure::new(colors.to_vec(), relations)
    };

    loop {
        let current = build_current(&positions, &colors)?;
        let class_count = current.class_count();
        // subsets of at most three classes, ordered lexicographically
        let mut subsets: Vec<Vec<usize>> = Vec::new();
        for a in 0..class_count {
            subsets.push(vec![a]);
            for b in (a + 1)..class_count {
                subsets.push(vec![a, b]);
                for c in (b + 1)..class_count {
                    subsets.push(vec![a, b, c]);
                }
            }
        }
        subsets.sort();
        // orbit vector per current point
        let mut vectors: Vec<Vec<usize>> = vec![Vec::new(); current.n];
        for subset in &subsets {
            let (frag, map) = current.induced_classes(subset);
            let canon = canon_capped(&frag)?;
            let idx = point_orbit_indices(&canon);
            for p in 0..current.n {
                match map[p] {
                    Some(local) => vectors[p].push(idx[local] + 1),
                    None => vectors[p].push(0),
                }
            }
        }
        // refine: sort current positions by (color, vector)
        let mut order: Vec<usize> = (0..current.n).collect();
        order.sort_by(|&a, &b| (colors[a], &vectors[a]).cmp(&(colors[b], &vectors[b])));
        let mut new_colors = vec![0usize; current.n];
        let mut next = 0usize;
        for i in 0..order.len() {
            if i > 0 {
                let (pa, pb) = (order[i - 1], order[i]);
                if (colors[pa], &vectors[pa]) != (colors[pb], &vectors[pb]) {
                    next += 1;
                }
            }
            new_colors[order[i]] = next;
        }
        let stable = (0..current.n).all(|p| new_colors[p] == colors[p]);
        if stable {
            let back = BackMapStep {
                point_map: positions.iter().map(|&p| Some(p)).collect(),
                input_n: h.n,
                input_colors: h.colors.clone(),
            };
            return Ok(ReductionStep {
                output: current,
                back,
            });
        }
        // apply the refinement: reorder positions
        let new_positions: Vec<usize> = order.iter().map(|&pos| positions[pos]).collect();
        let reordered_colors: Vec<usize> = order.iter().map(|&pos| new_colors[pos]).collect();
        positions = new_positions;
        colors = reordered_colors;
    }
}

/// Checks that a structure is transitive on `s` color classes (test helper;
/// the reduction guarantees this by construction).
pub fn is_transitive_on(h: &Structure, s: usize) -> Result<bool> {
    let k = h.class_count();
    let mut subsets: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..s {
        let mut next = subsets.clone();
        for sub in &subsets {
            let start = sub.last().map_or(0, |&x| x + 1);
            for c in start..k {
                let mut s2 = sub.clone();
                s2.push(c);
                next.push(s2);
            }
        }
        subsets = next;
    }
    for subset in subsets.iter().filter(|s| !s.is_empty()) {
        let (frag, _) = h.induced_classes(subset);
        let aut = aut_group(&frag, INTERNAL_GROUP_BOUND)?;
        for range in frag.classes() {
            let points: Vec<usize> = range.collect();
            if points.is_empty() {
                continue;
            }
            let orbit = aut.orbit(points[0]);
            if !points.iter().all(|p| orbit.contains(p)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------
// reduce_typed
// ---------------------------------------------------------------------

/// Produces typed relations: r positional copies of every class joined by
/// matchings, per-position copies of all tuple restrictions, and
/// heterogeneous relations split by class combination with entries moved to
/// position-indexed copies.
pub fn reduce_typed(h: &Structure) -> Result<ReductionStep> {
    h.validate()?;
    if h.n == 0 {
        return Ok(ReductionStep {
            output: h.clone(),
            back: BackMapStep::identity(&h.colors),
        });
    }
    let r = h.inter_color_arity().max(1);
    let k = h.class_count();
    let classes = h.classes();
    // output point for (input point, copy level)
    let mut out_id: Vec<Vec<usize>> = vec![vec![0; r]; h.n];
    let mut colors: Vec<usize> = Vec::new();
    let mut point_map: Vec<Option<usize>> = Vec::new();
    let mut next = 0usize;
    for c in 0..k {
        for p in 0..r {
            for u in classes[c].clone() {
                out_id[u][p] = next;
                colors.push(c * r + p);
                point_map.push(Some(u));
                next += 1;
            }
        }
    }
    let mut relations: Vec<Relation> = Vec::new();
    // matchings between consecutive copies
    for c in 0..k {
        for p in 0..r.saturating_sub(1) {
            let tuples: Vec<Vec<usize>> = classes[c]
                .clone()
                .map(|u| vec![out_id[u][p], out_id[u][p + 1]])
                .collect();
            relations.push(Relation::new(format!("__m{c}_{p}"), 2, tuples));
        }
    }
    // per-class tuple restrictions, copied to every position
    for c in 0..k {
        for (j, rel) in h.relations.iter().enumerate() {
            let mut by_len: BTreeMap<usize, BTreeSet<Vec<usize>>> = BTreeMap::new();
            for t in &rel.tuples {
                let restricted: Vec<usize> = t
                    .iter()
                    .copied()
                    .filter(|&e| h.class_of(e) == c)
                    .collect();
                if !restricted.is_empty() {
                    by_len.entry(restricted.len()).or_default().insert(restricted);
                }
            }
            for (len, tuples) in by_len {
                for p in 0..r {
                    let mapped: Vec<Vec<usize>> = tuples
                        .iter()
                        .map(|t| t.iter().map(|&e| out_id[e][p]).collect())
                        .collect();
                    relations.push(Relation::new(
                        format!("__h{c}_{p}_{j}_{len}"),
                        len,
                        mapped,
                    ));
                }
            }
        }
    }
    // heterogeneous relations split by class combination; entry i goes to
    // copy level i; positions then sorted so output types ascend
    for (j, rel) in h.relations.iter().enumerate() {
        if h.relation_kind(rel).is_homogeneous() {
            continue;
        }
        let mut by_combo: BTreeMap<Vec<usize>, Vec<Vec<usize>>> = BTreeMap::new();
        for t in &rel.tuples {
            let combo: Vec<usize> = t.iter().map(|&e| h.class_of(e)).collect();
            by_combo.entry(combo).or_default().push(t.clone());
        }
        for (combo, tuples) in by_combo {
            // output class of entry i is combo[i]*r + i: all distinct
            let mut positions: Vec<usize> = (0..combo.len()).collect();
            positions.sort_by_key(|&i| combo[i] * r + i);
            let name = {
                let tags: Vec<String> = combo.iter().map(|c| c.to_string()).collect();
                format!("__s{j}_{}", tags.join("_"))
            };
            let mapped: Vec<Vec<usize>> = tuples
                .iter()
                .map(|t| positions.iter().map(|&i| out_id[t[i]][i]).collect())
                .collect();
            relations.push(Relation::new(name, combo.len(), mapped));
        }
    }
    let output = Structure::new(colors, relations)?;
    Ok(ReductionStep {
        output,
        back: BackMapStep {
            point_map,
            input_n: h.n,
            input_colors: h.colors.clone(),
        },
    })
}

// ---------------------------------------------------------------------
// reduce_regular
// ---------------------------------------------------------------------

/// Replaces every class by the key-first minimal regular faithful orbit of
/// its automorphism group. New vertices are grouped into cliques by the
/// first tuple position; incident heterogeneous relations are lifted; the
/// class group is pinned by a single orbit of orderings.
pub fn reduce_regular(h: &Structure) -> Result<ReductionStep> {
    let analysis = h.analyze_types();
    if !analysis.typed {
        return Err(Error::PipelineOrderViolation(
            "reduce_regular requires typed relations".into(),
        ));
    }
    let k = h.class_count();
    let classes = h.classes();
    struct ClassPlan {
        /// members in input labels, for unchanged classes
        identity: bool,
        /// orbit tuples in input labels (for replaced classes)
        orbit: Vec<Vec<usize>>,
        /// pin relation tuples over local positions of the new class
        pin: Vec<Vec<usize>>,
        fragment_points: Vec<usize>,
    }
    let mut plans: Vec<ClassPlan> = Vec::new();
    for c in 0..k {
        let points: Vec<usize> = classes[c].clone().collect();
        let (frag, _) = h.induced(&points);
        let canon = canon_capped(&frag)?;
        if !canon.aut.is_transitive() {
            return Err(Error::PipelineOrderViolation(format!(
                "class {c} is not transitive"
            )));
        }
        if canon.aut.is_regular() {
            plans.push(ClassPlan {
                identity: true,
                orbit: vec![],
                pin: vec![],
                fragment_points: points,
            });
            continue;
        }
        if canon.aut.order() > MAX_REGULAR_CLASS {
            return Err(Error::FragmentTooLarge {
                points: canon.aut.order(),
                cap: MAX_REGULAR_CLASS,
            });
        }
        let (_, orbit) = min_regular_orbit(&canon);
        // induced action on orbit positions
        let index_of: HashMap<&Vec<usize>, usize> =
            orbit.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let action_elems: Vec<Perm> = canon
            .aut
            .elements()
            .iter()
            .map(|g| {
                Perm::from_image(
                    orbit
                        .iter()
                        .map(|t| index_of[&g.apply_tuple(t)])
                        .collect(),
                )
                .expect("orbit closed")
            })
            .collect();
        let action = PermGroup::from_elements(orbit.len(), action_elems);
        let keys: Vec<Vec<usize>> = orbit
            .iter()
            .map(|t| t.iter().map(|&e| canon.sigma0[e]).collect())
            .collect();
        let pin = pin_orbit_from_keys(&keys, &action);
        plans.push(ClassPlan {
            identity: false,
            orbit,
            pin,
            fragment_points: points,
        });
    }
    // output universe
    let mut colors: Vec<usize> = Vec::new();
    let mut point_map: Vec<Option<usize>> = Vec::new();
    // members of each output class in output labels; cliques per input point
    let mut out_members: Vec<Vec<usize>> = Vec::new();
    let mut clique_of_input: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut next = 0usize;
    for (c, plan) in plans.iter().enumerate() {
        let mut members = Vec::new();
        if plan.identity {
            for &u in &plan.fragment_points {
                members.push(next);
                clique_of_input.entry(u).or_default().push(next);
                point_map.push(Some(u));
                colors.push(c);
                next += 1;
            }
        } else {
            for t in &plan.orbit {
                members.push(next);
                let anchor = plan.fragment_points[t[0]];
                clique_of_input.entry(anchor).or_default().push(next);
                point_map.push(Some(anchor));
                colors.push(c);
                next += 1;
            }
        }
        out_members.push(members);
    }
    let mut relations: Vec<Relation> = Vec::new();
    for (c, plan) in plans.iter().enumerate() {
        if plan.identity {
            // homogeneous relations of this class are copied below
            continue;
        }
        // pin relation
        let tuples: Vec<Vec<usize>> = plan
            .pin
            .iter()
            .map(|t| t.iter().map(|&i| out_members[c][i]).collect())
            .collect();
        relations.push(Relation::new(
            format!("__r{c}"),
            out_members[c].len(),
            tuples,
        ));
        // clique relation
        let mut cl: Vec<Vec<usize>> = Vec::new();
        for (i, t) in plan.orbit.iter().enumerate() {
            for (j, s) in plan.orbit.iter().enumerate() {
                if i != j && t[0] == s[0] {
                    cl.push(vec![out_members[c][i], out_members[c][j]]);
                }
            }
        }
        relations.push(Relation::new(format!("__q{c}"), 2, cl));
    }
    // existing relations: homogeneous ones on unchanged classes are copied;
    // homogeneous ones on replaced classes are dropped (the pin relation
    // already fixes the group exactly); heterogeneous ones are lifted
    for rel in &h.relations {
        match h.relation_kind(rel) {
            RelationKind::Homogeneous(None) => {}
            RelationKind::Homogeneous(Some(c)) => {
                if plans[c].identity {
                    let tuples: Vec<Vec<usize>> = rel
                        .tuples
                        .iter()
                        .map(|t| t.iter().map(|&e| clique_of_input[&e][0]).collect())
                        .collect();
                    relations.push(Relation::new(rel.name.clone(), rel.arity, tuples));
                }
            }
            RelationKind::Typed(_) => {
                let mut tuples: Vec<Vec<usize>> = Vec::new();
                for t in &rel.tuples {
                    // cartesian product over clique members of each entry
                    let choices: Vec<&Vec<usize>> =
                        t.iter().map(|e| &clique_of_input[e]).collect();
                    let mut acc: Vec<Vec<usize>> = vec![vec![]];
                    for ch in choices {
                        let mut nacc = Vec::new();
                        for base in &acc {
                            for &x in ch {
                                let mut b = base.clone();
                                b.push(x);
                                nacc.push(b);
                            }
                        }
                        acc = nacc;
                    }
                    tuples.extend(acc);
                }
                relations.push(Relation::new(rel.name.clone(), rel.arity, tuples));
            }
            RelationKind::Untyped => unreachable!("typed relations validated"),
        }
    }
    let output = Structure::new(colors, relations)?;
    Ok(ReductionStep {
        output,
        back: BackMapStep {
            point_map,
            input_n: h.n,
            input_colors: h.colors.clone(),
        },
    })
}

// ---------------------------------------------------------------------
// attach_quotient
// ---------------------------------------------------------------------

/// Core data of a quotient class: the N-orbit blocks (in fragment-local
/// labels), the induced quotient action, and its pin relation over block
/// positions.
pub fn quotient_class_data(
    canon: &CanonData,
    normal: &PermGroup,
) -> Result<(Vec<Vec<usize>>, PermGroup, Vec<Vec<usize>>)> {
    if !canon.aut.is_regular() {
        return Err(Error::NotRegular);
    }
    if !normal.is_subgroup_of(&canon.aut) || !normal.is_normal_in(&canon.aut) {
        return Err(Error::NotNormal);
    }
    let (action, blocks) = canon.aut.quotient_action(normal)?;
    let keys: Vec<Vec<usize>> = blocks
        .iter()
        .map(|b| {
            let mut key: Vec<usize> = b.iter().map(|&p| canon.sigma0[p]).collect();
            key.sort_unstable();
            key
        })
        .collect();
    let pin = pin_orbit_from_keys(&keys, &action);
    Ok((blocks, action, pin))
}

/// Attaches an N-quotient class directly after class `c`: new orbit
/// vertices, the orbit-map relation, and homogeneous relations pinning the
/// quotient group. The back-map deletes the new class.
pub fn attach_quotient(h: &Structure, c: usize, normal: &PermGroup) -> Result<ReductionStep> {
    let points: Vec<usize> = h.class_range(c).collect();
    let (frag, _) = h.induced(&points);
    let canon = canon_capped(&frag)?;
    let (blocks, _action, pin) = quotient_class_data(&canon, normal)?;
    let q = blocks.len();
    // output: all input points, then the quotient class inserted after c
    let insert_at = h.class_range(c).end;
    let old_to_new = |p: usize| if p < insert_at { p } else { p + q };
    let mut colors: Vec<usize> = Vec::new();
    let mut point_map: Vec<Option<usize>> = Vec::new();
    for p in 0..insert_at {
        colors.push(h.colors[p]);
        point_map.push(Some(p));
    }
    for _ in 0..q {
        colors.push(c + 1);
        point_map.push(None);
    }
    for p in insert_at..h.n {
        colors.push(h.colors[p] + 1);
        point_map.push(Some(p));
    }
    let mut relations: Vec<Relation> = h
        .relations
        .iter()
        .map(|r| {
            Relation::new(
                r.name.clone(),
                r.arity,
                r.tuples
                    .iter()
                    .map(|t| t.iter().map(|&e| old_to_new(e)).collect())
                    .collect(),
            )
        })
        .collect();
    // orbit map
    let mut om: Vec<Vec<usize>> = Vec::new();
    for (bi, b) in blocks.iter().enumerate() {
        for &local in b {
            om.push(vec![points[local], insert_at + bi]);
        }
    }
    relations.push(Relation::new(format!("__o{c}"), 2, om));
    // quotient pin
    let pin_tuples: Vec<Vec<usize>> = pin
        .iter()
        .map(|t| t.iter().map(|&i| insert_at + i).collect())
        .collect();
    relations.push(Relation::new(format!("__rq{c}"), q, pin_tuples));
    let output = Structure::new(colors, relations)?;
    Ok(ReductionStep {
        output,
        back: BackMapStep {
            point_map,
            input_n: h.n,
            input_colors: h.colors.clone(),
        },
    })
}

// ---------------------------------------------------------------------
// reduce_arity
// ---------------------------------------------------------------------

/// Splits the two-entry tail of one relation of arity >= 3 into a pair
/// vertex class, reducing the arity by one (the paper's arity-reduction
/// step; exposed for construction traces).
pub fn split_tail(h: &Structure, name: &str) -> Result<ReductionStep> {
    let rel = h
        .relation(name)
        .ok_or_else(|| Error::Validation(format!("no relation named {name}")))?
        .clone();
    if rel.arity < 3 {
        return Err(Error::Validation("split_tail needs arity >= 3".into()));
    }
    let r = rel.arity;
    let mut pairs: Vec<(usize, usize)> = rel.tuples.iter().map(|t| (t[r - 2], t[r - 1])).collect();
    pairs.sort_unstable();
    pairs.dedup();
    let pair_index: HashMap<(usize, usize), usize> =
        pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let k = h.class_count();
    let mut colors = h.colors.clone();
    let mut point_map: Vec<Option<usize>> = (0..h.n).map(Some).collect();
    for _ in 0..pairs.len() {
        colors.push(k);
        point_map.push(None);
    }
    let base = h.n;
    let mut relations: Vec<Relation> = h
        .relations
        .iter()
        .filter(|x| x.name != rel.name)
        .cloned()
        .collect();
    let head: Vec<Vec<usize>> = rel
        .tuples
        .iter()
        .map(|t| {
            let mut v: Vec<usize> = t[..r - 2].to_vec();
            v.push(base + pair_index[&(t[r - 2], t[r - 1])]);
            v
        })
        .collect();
    let tail: Vec<Vec<usize>> = pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| vec![base + i, a, b])
        .collect();
    relations.push(Relation::new(format!("{}__head", rel.name), r - 1, head));
    relations.push(Relation::new(format!("{}__tail", rel.name), 3, tail));
    let output = Structure::new(colors, relations)?;
    Ok(ReductionStep {
        output,
        back: BackMapStep {
            point_map,
            input_n: h.n,
            input_colors: h.colors.clone(),
        },
    })
}

/// Brings every heterogeneous relation to arity exactly 3: relations of
/// arity > 3 are reduced with pair vertices; relations of arity 2 are lifted
/// via a duplicated class and a matching (homogeneous arities are exempt).
pub fn reduce_arity(h: &Structure) -> Result<ReductionStep> {
    let analysis = h.analyze_types();
    if !analysis.typed {
        return Err(Error::PipelineOrderViolation(
            "reduce_arity requires typed relations".into(),
        ));
    }
    let mut current = h.clone();
    let mut steps: Vec<BackMapStep> = Vec::new();
    // arity > 3: reduce by splitting tails
    loop {
        let over: Option<String> = current
            .relations
            .iter()
            .find(|r| !current.relation_kind(r).is_homogeneous() && r.arity > 3)
            .map(|r| r.name.clone());
        match over {
            Some(name) => {
                let step = split_tail(&current, &name)?;
                steps.push(step.back);
                current = step.output;
            }
            None => break,
        }
    }
    // arity 2: lift via duplicated classes
    let analysis = current.analyze_types();
    let mut dup_classes: BTreeSet<usize> = BTreeSet::new();
    for (rel, kind) in current.relations.iter().zip(&analysis.kinds) {
        if let RelationKind::Typed(ty) = kind {
            if rel.arity == 2 {
                dup_classes.insert(ty[1]);
            }
        }
    }
    if dup_classes.is_empty() {
        return Ok(ReductionStep {
            output: current,
            back: compose_chain(h, &steps),
        });
    }
    let k = current.class_count();
    let classes = current.classes();
    // new layout: every class, followed by its duplicate if it needs one
    let mut new_class_of: Vec<usize> = vec![0; k]; // class -> output class
    let mut dup_class_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut next_class = 0usize;
    for c in 0..k {
        new_class_of[c] = next_class;
        next_class += 1;
        if dup_classes.contains(&c) {
            dup_class_of.insert(c, next_class);
            next_class += 1;
        }
    }
    let mut colors: Vec<usize> = Vec::new();
    let mut point_map: Vec<Option<usize>> = Vec::new();
    let mut new_id: Vec<usize> = vec![0; current.n];
    let mut dup_id: BTreeMap<usize, usize> = BTreeMap::new(); // input point -> dup point
    let mut next = 0usize;
    for c in 0..k {
        for u in classes[c].clone() {
            new_id[u] = next;
            colors.push(new_class_of[c]);
            point_map.push(Some(u));
            next += 1;
        }
        if let Some(&dc) = dup_class_of.get(&c) {
            for u in classes[c].clone() {
                dup_id.insert(u, next);
                colors.push(dc);
                point_map.push(Some(u));
                next += 1;
            }
        }
    }
    let mut relations: Vec<Relation> = Vec::new();
    for (rel, kind) in current.relations.iter().zip(&analysis.kinds) {
        match kind {
            RelationKind::Homogeneous(cls) => {
                let tuples: Vec<Vec<usize>> = rel
                    .tuples
                    .iter()
                    .map(|t| t.iter().map(|&e| new_id[e]).collect())
                    .collect();
                relations.push(Relation::new(rel.name.clone(), rel.arity, tuples.clone()));
                // duplicated classes carry a copy of their homogeneous
                // relations so the duplicate is isomorphic standalone
                if let Some(c) = cls {
                    if dup_classes.contains(c) {
                        let dup_tuples: Vec<Vec<usize>> = rel
                            .tuples
                            .iter()
                            .map(|t| t.iter().map(|&e| dup_id[&e]).collect())
                            .collect();
                        relations.push(Relation::new(
                            format!("{}__d", rel.name),
                            rel.arity,
                            dup_tuples,
                        ));
                    }
                }
            }
            RelationKind::Typed(ty) => {
                if rel.arity == 2 {
                    let c2 = ty[1];
                    // lifted relation (u1, u2, u2') and the dummy matching
                    let lifted: Vec<Vec<usize>> = rel
                        .tuples
                        .iter()
                        .map(|t| vec![new_id[t[0]], new_id[t[1]], dup_id[&t[1]]])
                        .collect();
                    let mut dummy: Vec<Vec<usize>> = Vec::new();
                    for u1 in classes[ty[0]].clone() {
                        for u2 in classes[c2].clone() {
                            dummy.push(vec![new_id[u1], new_id[u2], dup_id[&u2]]);
                        }
                    }
                    // reorder positions so output classes ascend
                    let out_ty = [new_class_of[ty[0]], new_class_of[c2], dup_class_of[&c2]];
                    let mut perm: Vec<usize> = vec![0, 1, 2];
                    perm.sort_by_key(|&i| out_ty[i]);
                    let reorder = |ts: Vec<Vec<usize>>| -> Vec<Vec<usize>> {
                        ts.into_iter()
                            .map(|t| perm.iter().map(|&i| t[i]).collect())
                            .collect()
                    };
                    relations.push(Relation::new(
                        format!("{}__l", rel.name),
                        3,
                        reorder(lifted),
                    ));
                    relations.push(Relation::new(
                        format!("{}__e", rel.name),
                        3,
                        reorder(dummy),
                    ));
                } else {
                    let tuples: Vec<Vec<usize>> = rel
                        .tuples
                        .iter()
                        .map(|t| t.iter().map(|&e| new_id[e]).collect())
                        .collect();
                    relations.push(Relation::new(rel.name.clone(), rel.arity, tuples));
                }
            }
            RelationKind::Untyped => unreachable!(),
        }
    }
    let output = Structure::new(colors, relations)?;
    steps.push(BackMapStep {
        point_map,
        input_n: current.n,
        input_colors: current.colors.clone(),
    });
    Ok(ReductionStep {
        output,
        back: compose_chain(h, &steps),
    })
}

/// Composes a list of per-stage back-maps into a single step relative to the
/// original input.
fn compose_chain(original: &Structure, steps: &[BackMapStep]) -> BackMapStep {
    if steps.is_empty() {
        return BackMapStep::identity(&original.colors);
    }
    // point_map composition: output point -> ... -> original point
    let mut composed: Vec<Option<usize>> = steps
        .last()
        .unwrap()
        .point_map
        .clone();
    for step in steps.iter().rev().skip(1) {
        composed = composed
            .into_iter()
            .map(|o| o.and_then(|p| step.point_map[p]))
            .collect();
    }
    BackMapStep {
        point_map: composed,
        input_n: original.n,
        input_colors: original.colors.clone(),
    }
}

// ---------------------------------------------------------------------
// reduce_2inj
// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct GroupTypeInfo {
    /// extension classes of the type, ascending (output class indices)
    pub extension_classes: [usize; 3],
    /// quotient classes, by factor (output class indices)
    pub quotient_classes: [usize; 3],
    pub orbit_map_names: [String; 3],
    pub kernel_orders: [usize; 3],
}

#[derive(Clone, Debug)]
pub struct TwoInjQuotient {
    pub structure: Structure,
    pub extension_classes: Vec<usize>,
    pub group_classes: Vec<usize>,
    /// group class -> its extension parent
    pub parent_of_group: BTreeMap<usize, usize>,
    pub types: Vec<GroupTypeInfo>,
    pub back: BackMapStep,
}

/// Factors out the 2-injectivity kernels of every group type: for each type
/// the three kernels are computed, quotient classes attached (behind all
/// extension classes, ordered by (type, factor)), and the heterogeneous
/// relations re-expressed on the orbit vertices.
pub fn reduce_2inj(h: &Structure) -> Result<TwoInjQuotient> {
    let analysis = h.analyze_types();
    if !analysis.typed {
        return Err(Error::PipelineOrderViolation(
            "reduce_2inj requires typed relations".into(),
        ));
    }
    for (rel, kind) in h.relations.iter().zip(&analysis.kinds) {
        if let RelationKind::Typed(ty) = kind {
            if rel.arity != 3 {
                return Err(Error::PipelineOrderViolation(format!(
                    "heterogeneous relation {} has arity {}, expected 3",
                    rel.name, rel.arity
                )));
            }
            if ty.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::PipelineOrderViolation(format!(
                    "type of {} is not ascending",
                    rel.name
                )));
            }
        }
    }
    let k = h.class_count();
    let classes = h.classes();
    let mut class_canon: Vec<CanonData> = Vec::new();
    for c in 0..k {
        let points: Vec<usize> = classes[c].clone().collect();
        let (frag, _) = h.induced(&points);
        let canon = canon_capped(&frag)?;
        if !canon.aut.is_regular() {
            return Err(Error::PipelineOrderViolation(format!(
                "class {c} is not regular"
            )));
        }
        class_canon.push(canon);
    }
    // types: ascending class triples from the analysis
    let types: Vec<Vec<usize>> = analysis.types.clone();
    // per type: the triple group and its kernels
    struct TypePlan {
        classes: [usize; 3],
        /// kernels as groups on the class fragments
        kernels: [PermGroup; 3],
    }
    let mut plans: Vec<TypePlan> = Vec::new();
    for ty in &types {
        let cs = [ty[0], ty[1], ty[2]];
        let mut points: Vec<usize> = Vec::new();
        for &c in &cs {
            points.extend(classes[c].clone());
        }
        let (frag, map) = h.induced(&points);
        let gamma = aut_group(&frag, INTERNAL_GROUP_BOUND)?;
        // fragment-local ranges of the three classes
        let local: Vec<Vec<usize>> = cs
            .iter()
            .map(|&c| {
                classes[c]
                    .clone()
                    .map(|p| map[p].expect("class point in fragment"))
                    .collect()
            })
            .collect();
        // subdirectness: the projection to each class is the full class group
        for (i, &c) in cs.iter().enumerate() {
            let mut proj: Vec<Perm> = gamma
                .elements()
                .iter()
                .map(|g| g.restrict(&local[i]).expect("class invariant"))
                .collect();
            proj.sort();
            proj.dedup();
            if proj.len() != class_canon[c].aut.order() {
                return Err(Error::PipelineOrderViolation(format!(
                    "type {cs:?}: projection to class {c} has order {} < {}",
                    proj.len(),
                    class_canon[c].aut.order()
                )));
            }
        }
        // kernels of the projections away from each factor
        let mut kernels: Vec<PermGroup> = Vec::new();
        for i in 0..3 {
            let fixed: Vec<usize> = (0..3)
                .filter(|&j| j != i)
                .flat_map(|j| local[j].iter().copied())
                .collect();
            let elems: Vec<Perm> = gamma
                .elements()
                .iter()
                .filter(|g| fixed.iter().all(|&p| g.apply(p) == p))
                .map(|g| g.restrict(&local[i]).expect("class invariant"))
                .collect();
            kernels.push(PermGroup::from_elements(local[i].len(), elems));
        }
        plans.push(TypePlan {
            classes: cs,
            kernels: [
                kernels[0].clone(),
                kernels[1].clone(),
                kernels[2].clone(),
            ],
        });
    }
    // quotient data per (type, factor)
    struct QuotientPlan {
        type_idx: usize,
        factor: usize,
        parent: usize,
        blocks: Vec<Vec<usize>>, // fragment-local
        pin: Vec<Vec<usize>>,
    }
    let mut quotients: Vec<QuotientPlan> = Vec::new();
    for (ti, plan) in plans.iter().enumerate() {
        for i in 0..3 {
            let c = plan.classes[i];
            let (blocks, _action, pin) =
                quotient_class_data(&class_canon[c], &plan.kernels[i])?;
            quotients.push(QuotientPlan {
                type_idx: ti,
                factor: i,
                parent: c,
                blocks,
                pin,
            });
        }
    }
    // output layout: all extension classes first, then quotient classes
    let mut colors: Vec<usize> = h.colors.clone();
    let mut point_map: Vec<Option<usize>> = (0..h.n).map(Some).collect();
    let mut q_class_index: Vec<usize> = Vec::new(); // per quotient plan
    let mut q_base: Vec<usize> = Vec::new();
    let mut next_class = k;
    let mut next_point = h.n;
    for qp in &quotients {
        q_class_index.push(next_class);
        q_base.push(next_point);
        for _ in 0..qp.blocks.len() {
            colors.push(next_class);
            point_map.push(None);
        }
        next_point += qp.blocks.len();
        next_class += 1;
    }
    // block id per (quotient plan, input point)
    let mut block_of: Vec<HashMap<usize, usize>> = Vec::new();
    for qp in &quotients {
        let parent_points: Vec<usize> = classes[qp.parent].clone().collect();
        let mut m = HashMap::new();
        for (bi, b) in qp.blocks.iter().enumerate() {
            for &local in b {
                m.insert(parent_points[local], bi);
            }
        }
        block_of.push(m);
    }
    let mut relations: Vec<Relation> = Vec::new();
    // homogeneous relations are kept
    for (rel, kind) in h.relations.iter().zip(&analysis.kinds) {
        if kind.is_homogeneous() {
            relations.push(rel.clone());
        }
    }
    // orbit maps and quotient pins
    let mut type_infos: Vec<GroupTypeInfo> = plans
        .iter()
        .map(|p| GroupTypeInfo {
            extension_classes: p.classes,
            quotient_classes: [0; 3],
            orbit_map_names: [String::new(), String::new(), String::new()],
            kernel_orders: [
                p.kernels[0].order(),
                p.kernels[1].order(),
                p.kernels[2].order(),
            ],
        })
        .collect();
    for (qi, qp) in quotients.iter().enumerate() {
        let name = format!("__o{}_{}", qp.type_idx, qp.factor);
        let parent_points: Vec<usize> = classes[qp.parent].clone().collect();
        let mut om: Vec<Vec<usize>> = Vec::new();
        for (bi, b) in qp.blocks.iter().enumerate() {
            for &local in b {
                om.push(vec![parent_points[local], q_base[qi] + bi]);
            }
        }
        relations.push(Relation::new(name.clone(), 2, om));
        let pin_tuples: Vec<Vec<usize>> = qp
            .pin
            .iter()
            .map(|t| t.iter().map(|&i| q_base[qi] + i).collect())
            .collect();
        relations.push(Relation::new(
            format!("__rq{}_{}", qp.type_idx, qp.factor),
            qp.blocks.len(),
            pin_tuples,
        ));
        type_infos[qp.type_idx].quotient_classes[qp.factor] = q_class_index[qi];
        type_infos[qp.type_idx].orbit_map_names[qp.factor] = name;
    }
    // heterogeneous relations move to the quotient classes
    for (rel, kind) in h.relations.iter().zip(&analysis.kinds) {
        let RelationKind::Typed(ty) = kind else {
            continue;
        };
        let ti = types.iter().position(|t| t == ty).expect("type recorded");
        let q_of = |factor: usize| -> usize {
            quotients
                .iter()
                .position(|qp| qp.type_idx == ti && qp.factor == factor)
                .expect("quotient exists")
        };
        let qs = [q_of(0), q_of(1), q_of(2)];
        let tuples: Vec<Vec<usize>> = rel
            .tuples
            .iter()
            .map(|t| {
                (0..3)
                    .map(|i| q_base[qs[i]] + block_of[qs[i]][&t[i]])
                    .collect()
            })
            .collect();
        relations.push(Relation::new(format!("{}__g", rel.name), 3, tuples));
    }
    let structure = Structure::new(colors, relations)?;
    let result = TwoInjQuotient {
        extension_classes: (0..k).collect(),
        group_classes: q_class_index.clone(),
        parent_of_group: quotients
            .iter()
            .enumerate()
            .map(|(qi, qp)| (q_class_index[qi], qp.parent))
            .collect(),
        types: type_infos,
        back: BackMapStep {
            point_map,
            input_n: h.n,
            input_colors: h.colors.clone(),
        },
        structure,
    };
    validate_2inj(&result)?;
    Ok(result)
}

/// Revalidates the 2-injective quotient structure invariants: typed
/// relations of arity 3 among group classes, each group class in exactly one
/// type and related only to its parent by the orbit map, and every type
/// group a 2-injective subdirect product.
pub fn validate_2inj(q: &TwoInjQuotient) -> Result<()> {
    let h = &q.structure;
    let analysis = h.analyze_types();
    if !analysis.typed {
        return Err(Error::Validation("output is not typed".into()));
    }
    let group_set: BTreeSet<usize> = q.group_classes.iter().copied().collect();
    // group classes occur in exactly one type
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    for (ti, info) in q.types.iter().enumerate() {
        for &qc in &info.quotient_classes {
            if let Some(prev) = seen.insert(qc, ti) {
                return Err(Error::Validation(format!(
                    "group class {qc} occurs in types {prev} and {ti}"
                )));
            }
        }
    }
    // relatedness constraints
    for &g in &q.group_classes {
        let parent = q.parent_of_group[&g];
        for (c2, related) in analysis.related[g].iter().enumerate() {
            if !related {
                continue;
            }
            let ok = c2 == parent
                || (group_set.contains(&c2)
                    && q.types.iter().any(|t| {
                        t.quotient_classes.contains(&g) && t.quotient_classes.contains(&c2)
                    }));
            if !ok {
                return Err(Error::Validation(format!(
                    "group class {g} is related to unexpected class {c2}"
                )));
            }
        }
    }
    // heterogeneous relations among group classes have arity exactly 3;
    // extension classes touch only orbit maps
    for (rel, kind) in h.relations.iter().zip(&analysis.kinds) {
        if let RelationKind::Typed(ty) = kind {
            let all_group = ty.iter().all(|c| group_set.contains(c));
            if all_group && rel.arity != 3 {
                return Err(Error::Validation(format!(
                    "group relation {} has arity {}",
                    rel.name, rel.arity
                )));
            }
            if !all_group {
                // must be an orbit map: extension parent + its group class
                if !(rel.arity == 2
                    && group_set.contains(&ty[1])
                    && q.parent_of_group[&ty[1]] == ty[0])
                {
                    return Err(Error::Validation(format!(
                        "unexpected heterogeneous relation {} of type {ty:?}",
                        rel.name
                    )));
                }
            }
        }
    }
    // each type group is a 2-injective subdirect product
    for info in &q.types {
        let cs = info.quotient_classes;
        let mut points: Vec<usize> = Vec::new();
        for &c in &cs {
            points.extend(h.class_range(c));
        }
        let (frag, map) = h.induced(&points);
        let gamma = aut_group(&frag, INTERNAL_GROUP_BOUND)?;
        let local: Vec<Vec<usize>> = cs
            .iter()
            .map(|&c| {
                h.class_range(c)
                    .map(|p| map[p].expect("in fragment"))
                    .collect()
            })
            .collect();
        for i in 0..3 {
            // full projection
            let class_points: Vec<usize> = h.class_range(cs[i]).collect();
            let (cfrag, _) = h.induced(&class_points);
            let class_aut = aut_group(&cfrag, INTERNAL_GROUP_BOUND)?;
            let mut proj: Vec<Perm> = gamma
                .elements()
                .iter()
                .map(|g| g.restrict(&local[i]).expect("invariant"))
                .collect();
            proj.sort();
            proj.dedup();
            if proj.len() != class_aut.order() {
                return Err(Error::Validation(format!(
                    "type {cs:?} is not subdirect at factor {i}"
                )));
            }
            // 2-injective: trivial kernel away from factor i
            let fixed: Vec<usize> = (0..3)
                .filter(|&j| j != i)
                .flat_map(|j| local[j].iter().copied())
                .collect();
            let kernel = gamma
                .elements()
                .iter()
                .filter(|g| fixed.iter().all(|&p| g.apply(p) == p))
                .count();
            if kernel != 1 {
                return Err(Error::Validation(format!(
                    "type {cs:?} is not 2-injective at factor {i} (kernel {kernel})"
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// full pipeline
// ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub quotient: TwoInjQuotient,
    pub chain: BackMapChain,
}

/// The composition transitive -> typed -> regular -> arity -> 2-injective.
pub fn full_pipeline(h: &Structure) -> Result<PipelineResult> {
    h.validate()?;
    if h.inter_color_arity() > 3 {
        return Err(Error::Validation(
            "pipeline input must have heterogeneous arity at most 3".into(),
        ));
    }
    let t1 = reduce_transitive(h)?;
    let t2 = reduce_typed(&t1.output)?;
    let t3 = reduce_regular(&t2.output)?;
    let t4 = reduce_arity(&t3.output)?;
    let t5 = reduce_2inj(&t4.output)?;
    let chain = BackMapChain::new(vec![
        t1.back,
        t2.back,
        t3.back,
        t4.back,
        t5.back.clone(),
    ]);
    Ok(PipelineResult {
        quotient: t5,
        chain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dihedral::{cyclic_gadget, dihedral_gadget};
    use crate::oracle::{brute_canonical, brute_iso, generate, random_relabeling, GeneratorSpec};
    use crate::perm::GroupKind;

    fn class_aut(h: &Structure, c: usize) -> PermGroup {
        let points: Vec<usize> = h.class_range(c).collect();
        let (frag, _) = h.induced(&points);
        aut_group(&frag, INTERNAL_GROUP_BOUND).unwrap()
    }

    #[test]
    fn transitive_reduction_keeps_transitive_input() {
        // one C_4 gadget class: already transitive on any subset
        let h = cyclic_gadget(4, "g");
        let step = reduce_transitive(&h).unwrap();
        assert_eq!(step.output.class_count(), 1);
        assert_eq!(step.output.n, 4);
        assert!(is_transitive_on(&step.output, 3).unwrap());
        // back map of the identity-ish order restricts
        let order: Vec<usize> = (0..4).collect();
        let back = step.back.back_map(&order).unwrap();
        assert_eq!(back.len(), 4);
    }

    #[test]
    fn half_matching_splits_matched_from_unmatched() {
        // class A of 3 points, class B of 2 points, matching covers 2 of A
        let h = Structure::new(
            vec![0, 0, 0, 1, 1],
            vec![Relation::new("M", 2, vec![vec![0, 3], vec![1, 4]])],
        )
        .unwrap();
        let step = reduce_transitive(&h).unwrap();
        // A splits into matched (2) and unmatched (1)
        let sizes: Vec<usize> = step.output.classes().iter().map(|r| r.len()).collect();
        assert!(sizes.contains(&1));
        assert_eq!(step.output.class_count(), 3);
        assert!(is_transitive_on(&step.output, 3).unwrap());
    }

    #[test]
    fn rigid_class_splits_into_singletons() {
        // directed path on 3 points: rigid
        let h = Structure::new(
            vec![0, 0, 0],
            vec![Relation::new("E", 2, vec![vec![0, 1], vec![1, 2]])],
        )
        .unwrap();
        let step = reduce_transitive(&h).unwrap();
        assert_eq!(step.output.class_count(), 3);
        assert!(step.output.classes().iter().all(|r| r.len() == 1));
    }

    #[test]
    fn typed_reduction_splits_mixed_relation() {
        // relation with tuples of types (A,B) and (B,A)
        let h = Structure::new(
            vec![0, 0, 1, 1],
            vec![Relation::new("R", 2, vec![vec![0, 2], vec![3, 1]])],
        )
        .unwrap();
        let step = reduce_typed(&h).unwrap();
        let analysis = step.output.analyze_types();
        assert!(analysis.typed);
        // both split relations present
        let split: Vec<&Relation> = step
            .output
            .relations
            .iter()
            .filter(|r| r.name.starts_with("__s"))
            .collect();
        assert_eq!(split.len(), 2);
    }

    #[test]
    fn typed_reduction_of_arity3_creates_three_copies() {
        let h = Structure::new(
            vec![0, 0, 1, 1, 2, 2],
            vec![Relation::new("T", 3, vec![vec![0, 2, 4], vec![1, 3, 5]])],
        )
        .unwrap();
        let step = reduce_typed(&h).unwrap();
        assert_eq!(step.output.class_count(), 9); // 3 classes x 3 copies
        let matchings = step
            .output
            .relations
            .iter()
            .filter(|r| r.name.starts_with("__m"))
            .count();
        assert_eq!(matchings, 6); // 2 matchings per class
        assert!(step.output.analyze_types().typed);
    }

    #[test]
    fn regular_reduction_replaces_sym3_class() {
        // free class of size 3 next to a singleton: Aut = Sym(3)
        let h = Structure::new(vec![0, 0, 0], vec![]).unwrap();
        let step = reduce_regular(&h).unwrap();
        assert_eq!(step.output.n, 6);
        let aut = class_aut(&step.output, 0);
        assert_eq!(aut.order(), 6);
        assert!(aut.is_regular());
    }

    #[test]
    fn regular_reduction_keeps_regular_class() {
        let h = dihedral_gadget(3, "g");
        let step = reduce_regular(&h).unwrap();
        assert_eq!(step.output.n, 6);
        assert_eq!(class_aut(&step.output, 0).order(), 6);
    }

    #[test]
    fn regular_reduction_of_rigid_class() {
        // a rigid transitive class is a singleton; the replacement keeps it
        let h = Structure::new(
            vec![0, 1, 1],
            vec![Relation::new("M", 2, vec![vec![0, 1], vec![0, 2]])],
        )
        .unwrap();
        let step = reduce_regular(&h).unwrap();
        assert_eq!(step.output.class_range(0).len(), 1);
        assert_eq!(class_aut(&step.output, 0).order(), 1);
    }

    #[test]
    fn regular_reduction_rejects_intransitive_class() {
        let h = Structure::new(
            vec![0, 0],
            vec![Relation::new("P", 1, vec![vec![0]])],
        )
        .unwrap();
        assert!(matches!(
            reduce_regular(&h),
            Err(Error::PipelineOrderViolation(_))
        ));
    }

    #[test]
    fn attach_quotient_by_trivial_subgroup_copies_class() {
        let h = cyclic_gadget(4, "g");
        let trivial = PermGroup::trivial(4);
        let step = attach_quotient(&h, 0, &trivial).unwrap();
        assert_eq!(step.output.class_count(), 2);
        assert_eq!(step.output.class_range(1).len(), 4);
        let aut = class_aut(&step.output, 1);
        assert_eq!(aut.order(), 4);
    }

    #[test]
    fn attach_quotient_by_whole_group_gives_singleton() {
        let h = cyclic_gadget(4, "g");
        let whole = class_aut(&h, 0);
        let step = attach_quotient(&h, 0, &whole).unwrap();
        assert_eq!(step.output.class_range(1).len(), 1);
    }

    #[test]
    fn attach_quotient_d6_by_c3() {
        // regular D_6 class on 12 points; N = rotation subgroup of order 3
        let h = dihedral_gadget(6, "g");
        let aut = class_aut(&h, 0);
        assert_eq!(aut.order(), 12);
        let r3 = aut
            .elements()
            .iter()
            .find(|g| g.order() == 3)
            .unwrap()
            .clone();
        let n = PermGroup::close_generators_bounded(12, &[r3], 4).unwrap();
        let step = attach_quotient(&h, 0, &n).unwrap();
        assert_eq!(step.output.class_range(1).len(), 4);
        let q_aut = class_aut(&step.output, 1);
        assert_eq!(q_aut.order(), 4);
        // and the back map deletes the quotient class
        assert!(step.back.point_map[12..].iter().all(|p| p.is_none()));
    }

    #[test]
    fn split_tail_of_arity3_relation() {
        let h = Structure::new(
            vec![0, 1, 2],
            vec![Relation::new("T", 3, vec![vec![0, 1, 2]])],
        )
        .unwrap();
        let step = split_tail(&h, "T").unwrap();
        let head = step.output.relation("T__head").unwrap();
        let tail = step.output.relation("T__tail").unwrap();
        assert_eq!(head.arity, 2);
        assert_eq!(tail.arity, 3);
        assert_eq!(step.output.class_count(), 4);
    }

    #[test]
    fn arity_reduction_handles_arity4() {
        let h = Structure::new(
            vec![0, 1, 2, 3],
            vec![Relation::new("T", 4, vec![vec![0, 1, 2, 3]])],
        )
        .unwrap();
        let step = reduce_arity(&h).unwrap();
        for r in &step.output.relations {
            if !step.output.relation_kind(r).is_homogeneous() {
                assert!(r.arity <= 3, "{} has arity {}", r.name, r.arity);
            }
        }
    }

    #[test]
    fn arity_reduction_leaves_homogeneous_arity5_alone() {
        let h = Structure::new(
            vec![0; 5],
            vec![Relation::new("H", 5, vec![vec![0, 1, 2, 3, 4]])],
        )
        .unwrap();
        let step = reduce_arity(&h).unwrap();
        assert_eq!(step.output.relation("H").unwrap().arity, 5);
        assert_eq!(step.output, h);
    }

    #[test]
    fn arity2_lift_creates_diagonal_duplicate() {
        // matching between two C_3 gadget classes
        let a = cyclic_gadget(3, "a");
        let mut colors = vec![0; 3];
        colors.extend(vec![1; 3]);
        let mut rels = a.relations.clone();
        rels.push(Relation::new(
            "bc",
            2,
            (0..3).map(|i| vec![3 + i, 3 + (i + 1) % 3]).collect(),
        ));
        rels.push(Relation::new(
            "M",
            2,
            (0..3).map(|i| vec![i, 3 + i]).collect(),
        ));
        let h = Structure::new(colors, rels).unwrap();
        let step = reduce_arity(&h).unwrap();
        assert_eq!(step.output.class_count(), 3);
        // lifted relation has arity 3 and the duplicate matches its source
        let lifted = step.output.relation("M__l").unwrap();
        assert_eq!(lifted.arity, 3);
        // diagonal property: every automorphism of the three classes acts
        // identically on class 1 (the source) and class 2 (the duplicate)
        let (frag, _) = step.output.induced_classes(&[0, 1, 2]);
        let gamma = aut_group(&frag, INTERNAL_GROUP_BOUND).unwrap();
        let c1: Vec<usize> = frag.class_range(1).collect();
        let c2: Vec<usize> = frag.class_range(2).collect();
        for g in gamma.elements() {
            for (i, &p) in c1.iter().enumerate() {
                let q = c2[i];
                assert_eq!(
                    g.apply(p) - c1[0],
                    g.apply(q) - c2[0],
                    "duplicate does not mirror the source"
                );
            }
        }
    }

    #[test]
    fn pipeline_on_empty_structure() {
        let pr = full_pipeline(&Structure::empty()).unwrap();
        assert_eq!(pr.quotient.structure.n, 0);
    }

    #[test]
    fn pipeline_output_is_valid_2inj_quotient() {
        for seed in 0..12 {
            let h = generate(&GeneratorSpec {
                seed,
                classes: (2, 4),
                q: 6,
                ..Default::default()
            });
            let pr = full_pipeline(&h).unwrap();
            validate_2inj(&pr.quotient).unwrap();
        }
    }

    #[test]
    fn cfi_gadget_yields_klein_type_group() {
        // the CFI gadget: three edge-pair classes and a middle class of four
        // vertices adjacent with even parity
        let mut rels: Vec<Relation> = Vec::new();
        // middle vertices 6..10 encode subsets of even parity: {}, {0,1},
        // {0,2}, {1,2}; pair class i has points 2i (bit 0) and 2i+1 (bit 1)
        let subsets: [[usize; 3]; 4] = [[0, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]];
        let mut edges = Vec::new();
        for (v, bits) in subsets.iter().enumerate() {
            for (i, &b) in bits.iter().enumerate() {
                edges.push(vec![6 + v, 2 * i + b]);
            }
        }
        rels.push(Relation::new("e", 2, edges));
        let h = Structure::new(vec![0, 0, 1, 1, 2, 2, 3, 3, 3, 3], rels).unwrap();
        // whole-structure automorphism group is the CFI group (order 4)
        let whole = aut_group(&h, 1 << 12).unwrap();
        assert_eq!(whole.order(), 4);
        let pr = full_pipeline(&h).unwrap();
        validate_2inj(&pr.quotient).unwrap();
        // some type group is the Klein four-group (the CFI group)
        let found = pr.quotient.types.iter().any(|info| {
            let mut points: Vec<usize> = Vec::new();
            for &c in &info.quotient_classes {
                points.extend(pr.quotient.structure.class_range(c));
            }
            let (frag, _) = pr.quotient.structure.induced(&points);
            let g = aut_group(&frag, INTERNAL_GROUP_BOUND).unwrap();
            g.order() == 4 && g.group_kind() == GroupKind::Dihedral(2)
        });
        assert!(found, "no Klein type group found");
    }

    #[test]
    fn psi_contract_on_generated_structures() {
        for seed in 0..8 {
            let h = generate(&GeneratorSpec {
                seed: seed + 50,
                classes: (2, 4),
                q: 6,
                ..Default::default()
            });
            let pr = full_pipeline(&h).unwrap();
            let bc = brute_canonical(&pr.quotient.structure).unwrap();
            let back = pr.chain.back_map(&bc.witness_order).unwrap();
            let bytes = h.encode_ordered(&back).unwrap();
            assert!(brute_iso(&h.relabeled(&back), &h).unwrap());
            // equivariance: a relabeled copy maps back to identical bytes
            let (_, h2) = random_relabeling(&h, seed * 31 + 1);
            let pr2 = full_pipeline(&h2).unwrap();
            let bc2 = brute_canonical(&pr2.quotient.structure).unwrap();
            assert_eq!(bc.encoding, bc2.encoding, "pipeline not equivariant");
            let back2 = pr2.chain.back_map(&bc2.witness_order).unwrap();
            let bytes2 = h2.encode_ordered(&back2).unwrap();
            assert_eq!(bytes, bytes2, "back-mapped canonization differs (seed {seed})");
        }
    }

    #[test]
    fn section_property_of_output_group_classes() {
        // Aut of every output group class is a quotient of a subgroup of
        // some input class group
        fn is_section(target: &PermGroup, big: &PermGroup) -> bool {
            use crate::perm::are_isomorphic;
            let t_abs = target.abstract_group();
            for sub in big.subgroups() {
                if sub.order() % target.order() != 0 {
                    continue;
                }
                for n in sub.normal_subgroups() {
                    if sub.order() / n.order() != target.order() {
                        continue;
                    }
                    let (q, _) = match sub.quotient_action(&n) {
                        Ok(x) => x,
                        Err(_) => {
                            // sub need not be regular; use coset table
                            let idx: Vec<usize> = (0..sub.order()).collect();
                            let table = AbstractGroup::from_elements(&idx, |&a, &b| {
                                let p = sub.elements()[a].compose(&sub.elements()[b]);
                                sub.elements().binary_search(&p).unwrap()
                            });
                            let _ = table;
                            continue;
                        }
                    };
                    if are_isomorphic(&q.abstract_group(), &t_abs) {
                        return true;
                    }
                }
            }
            false
        }
        use crate::perm::AbstractGroup;
        let h = generate(&GeneratorSpec {
            seed: 3,
            classes: (2, 3),
            q: 6,
            ..Default::default()
        });
        let input_groups: Vec<PermGroup> =
            (0..h.class_count()).map(|c| class_aut(&h, c)).collect();
        let pr = full_pipeline(&h).unwrap();
        for &g in &pr.quotient.group_classes {
            let target = class_aut(&pr.quotient.structure, g);
            assert!(
                input_groups.iter().any(|big| is_section(&target, big)),
                "group class {g} is not a section of any input class group"
            );
        }
    }
}
