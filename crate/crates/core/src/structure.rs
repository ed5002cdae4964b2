//! The relational-structure data model: a finite universe carrying a total
//! preorder (color classes) and a list of named relations.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
    pub tuples: Vec<Vec<usize>>,
}

impl Relation {
    pub fn new(name: impl Into<String>, arity: usize, mut tuples: Vec<Vec<usize>>) -> Relation {
        tuples.sort();
        tuples.dedup();
        Relation {
            name: name.into(),
            arity,
            tuples,
        }
    }
}

/// A structure over points `0..n`. `colors` is nondecreasing; equal colors
/// form one class and the class indices are contiguous from 0. Relations are
/// kept sorted by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    pub n: usize,
    pub colors: Vec<usize>,
    pub relations: Vec<Relation>,
}

#[derive(Serialize, Deserialize)]
struct StructureJson {
    universe: usize,
    colors: Vec<usize>,
    relations: Vec<Relation>,
}

impl Structure {
    pub fn new(colors: Vec<usize>, relations: Vec<Relation>) -> Result<Structure> {
        let s = Structure {
            n: colors.len(),
            colors,
            relations,
        };
        let mut s = s;
        s.relations.sort_by(|a, b| a.name.cmp(&b.name));
        s.validate()?;
        Ok(s)
    }

    pub fn empty() -> Structure {
        Structure {
            n: 0,
            colors: vec![],
            relations: vec![],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.colors.len() != self.n {
            return Err(Error::Validation("colors length != universe size".into()));
        }
        let mut prev = 0usize;
        for (i, &c) in self.colors.iter().enumerate() {
            if i == 0 {
                if c != 0 {
                    return Err(Error::Validation("first class index must be 0".into()));
                }
            } else if c < prev || c > prev + 1 {
                return Err(Error::Validation(format!(
                    "class indices must be nondecreasing and contiguous (point {i})"
                )));
            }
            prev = c;
        }
        let mut names: Vec<&str> = self.relations.iter().map(|r| r.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.relations.len() {
            return Err(Error::Validation("relation names must be unique".into()));
        }
        for r in &self.relations {
            if r.name.contains('\n') || r.name.contains(' ') || r.name.is_empty() {
                return Err(Error::Validation(format!(
                    "relation name {:?} must be nonempty without spaces or newlines",
                    r.name
                )));
            }
            for t in &r.tuples {
                if t.len() != r.arity {
                    return Err(Error::Validation(format!(
                        "tuple {:?} in {} has wrong arity",
                        t, r.name
                    )));
                }
                for &e in t {
                    if e >= self.n {
                        return Err(Error::Validation(format!(
                            "tuple {:?} in {} references point {} outside the universe",
                            t, r.name, e
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// q-boundedness: every class has at most `q` points and every
    /// homogeneous relation has arity at most `q`.
    pub fn check_q_bounded(&self, q: usize) -> Result<()> {
        for range in self.classes() {
            if range.len() > q {
                return Err(Error::Validation(format!(
                    "class of size {} exceeds the bound q = {q}",
                    range.len()
                )));
            }
        }
        for r in &self.relations {
            if self.relation_kind(r).is_homogeneous() && r.arity > q {
                return Err(Error::Validation(format!(
                    "homogeneous relation {} of arity {} exceeds q = {q}",
                    r.name, r.arity
                )));
            }
        }
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        self.colors.last().map_or(0, |&c| c + 1)
    }

    pub fn class_of(&self, p: usize) -> usize {
        self.colors[p]
    }

    /// Point ranges of the classes, in class order.
    pub fn classes(&self) -> Vec<Range<usize>> {
        let mut out = Vec::with_capacity(self.class_count());
        let mut start = 0usize;
        for c in 0..self.class_count() {
            let mut end = start;
            while end < self.n && self.colors[end] == c {
                end += 1;
            }
            out.push(start..end);
            start = end;
        }
        out
    }

    pub fn class_range(&self, c: usize) -> Range<usize> {
        let start = self.colors.partition_point(|&x| x < c);
        let end = self.colors.partition_point(|&x| x <= c);
        start..end
    }

    pub fn class_points(&self, c: usize) -> Vec<usize> {
        self.class_range(c).collect()
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations
            .binary_search_by(|r| r.name.as_str().cmp(name))
            .ok()
            .map(|i| &self.relations[i])
    }

    /// The largest arity of a heterogeneous relation (0 if none).
    pub fn inter_color_arity(&self) -> usize {
        self.relations
            .iter()
            .filter(|r| !self.relation_kind(r).is_homogeneous())
            .map(|r| r.arity)
            .max()
            .unwrap_or(0)
    }

    pub fn relation_kind(&self, r: &Relation) -> RelationKind {
        if r.tuples.is_empty() {
            return RelationKind::Homogeneous(None);
        }
        let mut homogeneous_class: Option<usize> = None;
        let mut homogeneous = true;
        for t in &r.tuples {
            let c0 = self.class_of(t[0]);
            if t.iter().any(|&e| self.class_of(e) != c0) {
                homogeneous = false;
                break;
            }
            match homogeneous_class {
                None => homogeneous_class = Some(c0),
                Some(c) if c != c0 => {
                    homogeneous = false;
                    break;
                }
                _ => {}
            }
        }
        if homogeneous {
            return RelationKind::Homogeneous(homogeneous_class);
        }
        // typed: every position draws from one class, classes pairwise distinct
        let first = &r.tuples[0];
        let ty: Vec<usize> = first.iter().map(|&e| self.class_of(e)).collect();
        let mut distinct: Vec<usize> = ty.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() != ty.len() {
            return RelationKind::Untyped;
        }
        for t in &r.tuples {
            for (i, &e) in t.iter().enumerate() {
                if self.class_of(e) != ty[i] {
                    return RelationKind::Untyped;
                }
            }
        }
        RelationKind::Typed(ty)
    }

    /// Typed-relations flag, occurring types, and the relatedness relation
    /// on classes (two classes are related if some tuple touches both).
    pub fn analyze_types(&self) -> TypeAnalysis {
        let k = self.class_count();
        let mut related = vec![vec![false; k]; k];
        let mut types: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut all_typed = true;
        let mut kinds = Vec::with_capacity(self.relations.len());
        for r in &self.relations {
            let kind = self.relation_kind(r);
            match &kind {
                RelationKind::Homogeneous(_) => {}
                RelationKind::Typed(ty) => {
                    types.insert(ty.clone());
                }
                RelationKind::Untyped => all_typed = false,
            }
            for t in &r.tuples {
                for &a in t {
                    for &b in t {
                        let (ca, cb) = (self.class_of(a), self.class_of(b));
                        if ca != cb {
                            related[ca][cb] = true;
                            related[cb][ca] = true;
                        }
                    }
                }
            }
            kinds.push(kind);
        }
        TypeAnalysis {
            kinds,
            types: types.into_iter().collect(),
            related,
            typed: all_typed,
        }
    }

    /// Induced substructure on a point set. Returns the substructure and the
    /// map from old points to new indices (None if dropped).
    pub fn induced(&self, points: &[usize]) -> (Structure, Vec<Option<usize>>) {
        let mut sorted = points.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut map = vec![None; self.n];
        for (i, &p) in sorted.iter().enumerate() {
            map[p] = Some(i);
        }
        // compact class indices preserving order
        let mut colors = Vec::with_capacity(sorted.len());
        let mut next = 0usize;
        let mut last: Option<usize> = None;
        for &p in &sorted {
            let c = self.colors[p];
            if last != Some(c) {
                if last.is_some() {
                    next += 1;
                }
                last = Some(c);
            }
            colors.push(next);
        }
        let mut relations = Vec::new();
        for r in &self.relations {
            let tuples: Vec<Vec<usize>> = r
                .tuples
                .iter()
                .filter(|t| t.iter().all(|&e| map[e].is_some()))
                .map(|t| t.iter().map(|&e| map[e].unwrap()).collect())
                .collect();
            relations.push(Relation::new(r.name.clone(), r.arity, tuples));
        }
        (
            Structure {
                n: sorted.len(),
                colors,
                relations,
            },
            map,
        )
    }

    /// Induced substructure on a set of classes.
    pub fn induced_classes(&self, classes: &[usize]) -> (Structure, Vec<Option<usize>>) {
        let mut points = Vec::new();
        let mut cs = classes.to_vec();
        cs.sort_unstable();
        cs.dedup();
        for c in cs {
            points.extend(self.class_range(c));
        }
        self.induced(&points)
    }

    /// Applies a relabeling: point p moves to position `order[p]`.
    pub fn relabeled(&self, order: &[usize]) -> Structure {
        let mut colors = vec![0usize; self.n];
        for p in 0..self.n {
            colors[order[p]] = self.colors[p];
        }
        let relations = self
            .relations
            .iter()
            .map(|r| {
                Relation::new(
                    r.name.clone(),
                    r.arity,
                    r.tuples
                        .iter()
                        .map(|t| t.iter().map(|&e| order[e]).collect())
                        .collect(),
                )
            })
            .collect();
        Structure {
            n: self.n,
            colors,
            relations,
        }
    }

    fn order_refines(&self, order: &[usize]) -> bool {
        if order.len() != self.n {
            return false;
        }
        let mut seen = vec![false; self.n];
        for &v in order {
            if v >= self.n || seen[v] {
                return false;
            }
            seen[v] = true;
        }
        (0..self.n).all(|p| self.colors[p] == self.colors_at_rank(order, p))
    }

    fn colors_at_rank(&self, order: &[usize], p: usize) -> usize {
        // color of the point placed at rank order[p] must equal color of p;
        // since classes occupy contiguous rank ranges iff the order refines,
        // it suffices that rank and point agree on the class.
        let rank = order[p];
        // find the class whose range contains `rank`
        let mut acc = 0usize;
        for (c, range) in self.classes().iter().enumerate() {
            acc += range.len();
            if rank < acc {
                return c;
            }
        }
        usize::MAX
    }

    /// Deterministic byte encoding of the ordered copy of `self` under
    /// `order` (order[p] = rank of point p; must refine the preorder).
    pub fn encode_ordered(&self, order: &[usize]) -> Result<Vec<u8>> {
        if !self.order_refines(order) {
            return Err(Error::OrderNotRefining);
        }
        Ok(self.relabeled(order).encode())
    }

    /// Byte encoding of the structure as labeled (identity order).
    pub fn encode(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str("colors:");
        for range in self.classes() {
            out.push(' ');
            out.push_str(&range.len().to_string());
        }
        out.push('\n');
        for r in &self.relations {
            out.push_str(&format!("rel {} {}:\n", r.name, r.arity));
            let mut tuples = r.tuples.clone();
            tuples.sort();
            for t in tuples {
                let line: Vec<String> = t.iter().map(|e| e.to_string()).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out.into_bytes()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&StructureJson {
            universe: self.n,
            colors: self.colors.clone(),
            relations: self.relations.clone(),
        })
        .expect("structure serializes")
    }

    pub fn from_json(text: &str) -> Result<Structure> {
        let raw: StructureJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.colors.len() != raw.universe {
            return Err(Error::Validation(format!(
                "universe is {} but {} colors given",
                raw.universe,
                raw.colors.len()
            )));
        }
        Structure::new(raw.colors, raw.relations)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelationKind {
    /// All tuples inside one class (None when the relation is empty).
    Homogeneous(Option<usize>),
    /// Every position draws from one fixed class, classes pairwise distinct.
    Typed(Vec<usize>),
    Untyped,
}

impl RelationKind {
    pub fn is_homogeneous(&self) -> bool {
        matches!(self, RelationKind::Homogeneous(_))
    }
}

#[derive(Clone, Debug)]
pub struct TypeAnalysis {
    /// Kind of each relation, in relation order.
    pub kinds: Vec<RelationKind>,
    /// All occurring heterogeneous types, sorted.
    pub types: Vec<Vec<usize>>,
    pub related: Vec<Vec<bool>>,
    /// True iff every relation is homogeneous or typed.
    pub typed: bool,
}

/// A canonical copy: the byte encoding together with one witness order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalForm {
    pub encoding: Vec<u8>,
    pub witness_order: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point_matching() -> Structure {
        Structure::new(
            vec![0, 0],
            vec![Relation::new("E", 2, vec![vec![0, 1]])],
        )
        .unwrap()
    }

    #[test]
    fn empty_structure_round_trips() {
        let s = Structure::empty();
        let json = s.to_json();
        let back = Structure::from_json(&json).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn parse_simple_structure() {
        let s = two_point_matching();
        let json = s.to_json();
        let back = Structure::from_json(&json).unwrap();
        assert_eq!(s, back);
        assert_eq!(back.relation("E").unwrap().arity, 2);
    }

    #[test]
    fn out_of_range_tuple_is_rejected() {
        let err = Structure::new(vec![0, 0], vec![Relation::new("E", 2, vec![vec![0, 2]])])
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn encode_is_automorphism_invariant() {
        // directed 3-cycle; rotating the labels leaves the encoding alone
        let s = Structure::new(
            vec![0, 0, 0],
            vec![Relation::new("E", 2, vec![vec![0, 1], vec![1, 2], vec![2, 0]])],
        )
        .unwrap();
        let id = s.encode_ordered(&[0, 1, 2]).unwrap();
        let rot = s.encode_ordered(&[1, 2, 0]).unwrap();
        assert_eq!(id, rot);
    }

    #[test]
    fn encode_differs_on_rigid_structure() {
        let s = Structure::new(
            vec![0, 0],
            vec![Relation::new("P", 1, vec![vec![0]])],
        )
        .unwrap();
        let a = s.encode_ordered(&[0, 1]).unwrap();
        let b = s.encode_ordered(&[1, 0]).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn encode_rejects_non_refining_order() {
        let s = Structure::new(vec![0, 1], vec![]).unwrap();
        assert!(matches!(
            s.encode_ordered(&[1, 0]),
            Err(Error::OrderNotRefining)
        ));
    }

    #[test]
    fn analyze_types_homogeneous_only() {
        let s = Structure::new(
            vec![0, 0, 1],
            vec![Relation::new("E", 2, vec![vec![0, 1]])],
        )
        .unwrap();
        let a = s.analyze_types();
        assert!(a.typed);
        assert!(a.types.is_empty());
        assert!(!a.related[0][1]);
    }

    #[test]
    fn analyze_types_matching_between_classes() {
        let s = Structure::new(
            vec![0, 0, 1, 1],
            vec![Relation::new("M", 2, vec![vec![0, 2], vec![1, 3]])],
        )
        .unwrap();
        let a = s.analyze_types();
        assert!(a.typed);
        assert_eq!(a.types, vec![vec![0, 1]]);
        assert!(a.related[0][1]);
    }

    #[test]
    fn analyze_types_mixed_positions_is_untyped() {
        let s = Structure::new(
            vec![0, 0, 1, 1],
            vec![Relation::new("M", 2, vec![vec![0, 2], vec![2, 0]])],
        )
        .unwrap();
        let a = s.analyze_types();
        assert!(!a.typed);
    }

    #[test]
    fn induced_full_and_empty() {
        let s = two_point_matching();
        let (full, _) = s.induced(&[0, 1]);
        assert_eq!(full, s);
        let (empty, _) = s.induced(&[]);
        assert_eq!(empty.n, 0);
    }

    #[test]
    fn induced_single_class_of_matching_has_no_tuples() {
        let s = Structure::new(
            vec![0, 0, 1, 1],
            vec![Relation::new("M", 2, vec![vec![0, 2], vec![1, 3]])],
        )
        .unwrap();
        let (sub, _) = s.induced_classes(&[0]);
        assert_eq!(sub.n, 2);
        assert!(sub.relation("M").unwrap().tuples.is_empty());
    }

    #[test]
    fn relabel_equivariance_of_encoding() {
        // encode_ordered(H, s) == encode_ordered(pi(H), s o pi^-1)
        let s = Structure::new(
            vec![0, 0, 0, 1],
            vec![
                Relation::new("E", 2, vec![vec![0, 1], vec![1, 2]]),
                Relation::new("M", 2, vec![vec![2, 3]]),
            ],
        )
        .unwrap();
        let pi = [2usize, 0, 1, 3]; // relabeling within class 0
        let relabeled = s.relabeled(&pi);
        let order = [1usize, 2, 0, 3];
        // order o pi^-1 as a rank map: rank of relabeled point pi[p] = order[p]
        let mut order2 = vec![0usize; 4];
        for p in 0..4 {
            order2[pi[p]] = order[p];
        }
        assert_eq!(
            s.encode_ordered(&order).unwrap(),
            relabeled.encode_ordered(&order2).unwrap()
        );
    }
}
