//! Tree-like cyclic linear equation systems (TCES) over Z_{p^k}.
//!
//! Variable classes form a rooted tree; every equation stays on one
//! root-to-leaf path; every class carries a cyclic constraint fixing the
//! pairwise differences of its variables. Weakly global systems (all
//! equations local for odd p; global variables of order 2 for p = 2) are
//! decided by divisibility-pivoted elimination per local component plus a
//! mod-2 elimination of the global part, and every Sat answer returns a
//! substitution-verified witness.
//!
//! Instead of the choice-free hyperterm apparatus, one representative per
//! class is substituted via the cyclic constraints; verdicts are
//! choice-independent, which the tests check by permuting representatives.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarClass {
    pub name: String,
    pub parent: Option<usize>,
    /// variable indices, representative first
    pub vars: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    /// variable index -> coefficient (mod q, nonzero entries only)
    pub coeffs: BTreeMap<usize, u64>,
    pub rhs: u64,
}

#[derive(Clone, Debug)]
pub struct Tces {
    pub modulus: u64,
    pub prime: u64,
    pub power: u32,
    pub var_names: Vec<String>,
    pub classes: Vec<VarClass>,
    pub class_of_var: Vec<usize>,
    /// offset of each variable against its class representative:
    /// var - rep = offset (mod q)
    pub offsets: Vec<u64>,
    pub equations: Vec<Equation>,
    components: Vec<usize>,
    global_vars: Vec<bool>,
    weakly_global: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Sat(BTreeMap<String, u64>),
    Unsat(String),
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }
}

fn prime_power(q: u64) -> Result<(u64, u32)> {
    if q < 2 {
        return Err(Error::Validation(format!("modulus {q} is not a prime power")));
    }
    let mut p = 2;
    while p * p <= q {
        if q % p == 0 {
            break;
        }
        p += 1;
    }
    if q % p != 0 {
        return Ok((q, 1));
    }
    let mut rest = q;
    let mut k = 0;
    while rest % p == 0 {
        rest /= p;
        k += 1;
    }
    if rest != 1 {
        return Err(Error::Validation(format!("modulus {q} is not a prime power")));
    }
    Ok((p, k))
}

impl Tces {
    /// Builds and validates a system. `classes` lists (name, parent name,
    /// variable names); `cyclic` lists per-class difference constraints
    /// u - v = d; `equations` use variable names.
    pub fn build(
        modulus: u64,
        classes: &[(String, Option<String>, Vec<String>)],
        cyclic: &[(String, Vec<(String, String, u64)>)],
        equations: &[(BTreeMap<String, u64>, u64)],
    ) -> Result<Tces> {
        let (prime, power) = prime_power(modulus)?;
        let mut var_names: Vec<String> = Vec::new();
        let mut var_index: HashMap<String, usize> = HashMap::new();
        let mut class_index: HashMap<String, usize> = HashMap::new();
        let mut built_classes: Vec<VarClass> = Vec::new();
        for (name, _, vars) in classes {
            if class_index.contains_key(name) {
                return Err(Error::Validation(format!("duplicate class {name}")));
            }
            class_index.insert(name.clone(), built_classes.len());
            let mut ids = Vec::new();
            for v in vars {
                if var_index.contains_key(v) {
                    return Err(Error::Validation(format!("duplicate variable {v}")));
                }
                var_index.insert(v.clone(), var_names.len());
                ids.push(var_names.len());
                var_names.push(v.clone());
            }
            if ids.is_empty() {
                return Err(Error::Validation(format!("class {name} has no variables")));
            }
            built_classes.push(VarClass {
                name: name.clone(),
                parent: None,
                vars: ids,
            });
        }
        for (i, (name, parent, _)) in classes.iter().enumerate() {
            if let Some(p) = parent {
                let pi = *class_index
                    .get(p)
                    .ok_or_else(|| Error::NotATree(format!("unknown parent {p} of {name}")))?;
                if pi == i {
                    return Err(Error::NotATree(format!("class {name} is its own parent")));
                }
                built_classes[i].parent = Some(pi);
            }
        }
        let mut class_of_var = vec![0usize; var_names.len()];
        for (ci, c) in built_classes.iter().enumerate() {
            for &v in &c.vars {
                class_of_var[v] = ci;
            }
        }
        // cyclic constraints -> offsets per class
        let mut offsets = vec![u64::MAX; var_names.len()];
        for c in &built_classes {
            offsets[c.vars[0]] = 0;
        }
        for (cname, pairs) in cyclic {
            let ci = *class_index
                .get(cname)
                .ok_or_else(|| Error::Validation(format!("unknown class {cname} in cyclic")))?;
            // constraint graph BFS from the representative
            let vars = &built_classes[ci].vars;
            let local: HashMap<usize, usize> =
                vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); vars.len()];
            let mut raw: Vec<(usize, usize, u64)> = Vec::new();
            for (u, v, d) in pairs {
                let ui = *var_index
                    .get(u)
                    .ok_or_else(|| Error::Validation(format!("unknown variable {u}")))?;
                let vi = *var_index
                    .get(v)
                    .ok_or_else(|| Error::Validation(format!("unknown variable {v}")))?;
                let (Some(&ul), Some(&vl)) = (local.get(&ui), local.get(&vi)) else {
                    return Err(Error::InconsistentCyclic(format!(
                        "{cname}: pair ({u},{v}) leaves the class"
                    )));
                };
                let d = d % modulus;
                adj[ul].push((vl, d));
                adj[vl].push((ul, (modulus - d) % modulus));
                raw.push((ul, vl, d));
            }
            let mut off = vec![u64::MAX; vars.len()];
            off[0] = 0;
            let mut queue = vec![0usize];
            while let Some(x) = queue.pop() {
                for &(y, d) in &adj[x] {
                    // x - y = d  =>  off[y] = off[x] - d
                    let oy = (off[x] + modulus - d) % modulus;
                    if off[y] == u64::MAX {
                        off[y] = oy;
                        queue.push(y);
                    } else if off[y] != oy {
                        return Err(Error::InconsistentCyclic(cname.clone()));
                    }
                }
            }
            if off.iter().any(|&o| o == u64::MAX) {
                return Err(Error::InconsistentCyclic(format!(
                    "{cname}: cyclic constraint does not connect the class"
                )));
            }
            for (ul, vl, d) in raw {
                if (off[ul] + modulus - off[vl]) % modulus != d {
                    return Err(Error::InconsistentCyclic(cname.clone()));
                }
            }
            for (i, &v) in vars.iter().enumerate() {
                offsets[v] = off[i];
            }
        }
        for (ci, c) in built_classes.iter().enumerate() {
            if c.vars.len() > 1 && c.vars.iter().any(|&v| offsets[v] == u64::MAX) {
                return Err(Error::InconsistentCyclic(format!(
                    "class {} of size {} has no cyclic constraint",
                    built_classes[ci].name,
                    c.vars.len()
                )));
            }
            for &v in &c.vars {
                if offsets[v] == u64::MAX {
                    offsets[v] = 0;
                }
            }
        }
        let mut eqs = Vec::new();
        for (coeffs, rhs) in equations {
            let mut m = BTreeMap::new();
            for (v, c) in coeffs {
                let vi = *var_index
                    .get(v)
                    .ok_or_else(|| Error::Validation(format!("unknown variable {v}")))?;
                let c = c % modulus;
                if c != 0 {
                    m.insert(vi, c);
                }
            }
            eqs.push(Equation {
                coeffs: m,
                rhs: rhs % modulus,
            });
        }
        let mut t = Tces {
            modulus,
            prime,
            power,
            var_names,
            classes: built_classes,
            class_of_var,
            offsets,
            equations: eqs,
            components: vec![],
            global_vars: vec![],
            weakly_global: false,
        };
        t.validate_tree()?;
        t.analyze();
        Ok(t)
    }

    fn validate_tree(&self) -> Result<()> {
        let k = self.classes.len();
        // acyclic, single root
        let mut roots = 0;
        for (i, c) in self.classes.iter().enumerate() {
            if c.parent.is_none() {
                roots += 1;
            }
            let mut seen = vec![false; k];
            let mut cur = Some(i);
            while let Some(x) = cur {
                if seen[x] {
                    return Err(Error::NotATree(format!("cycle through class {}", c.name)));
                }
                seen[x] = true;
                cur = self.classes[x].parent;
            }
        }
        if k > 0 && roots != 1 {
            return Err(Error::NotATree(format!("{roots} roots")));
        }
        // path condition per equation
        for (ei, e) in self.equations.iter().enumerate() {
            let cs: Vec<usize> = {
                let mut v: Vec<usize> = e.coeffs.keys().map(|&u| self.class_of_var[u]).collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            for i in 0..cs.len() {
                for j in (i + 1)..cs.len() {
                    if !self.comparable(cs[i], cs[j]) {
                        return Err(Error::PathViolation(format!(
                            "equation {ei} uses incomparable classes {} and {}",
                            self.classes[cs[i]].name, self.classes[cs[j]].name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn ancestors(&self, mut c: usize) -> Vec<usize> {
        let mut out = vec![c];
        while let Some(p) = self.classes[c].parent {
            out.push(p);
            c = p;
        }
        out
    }

    fn comparable(&self, a: usize, b: usize) -> bool {
        self.ancestors(a).contains(&b) || self.ancestors(b).contains(&a)
    }

    fn analyze(&mut self) {
        let k = self.classes.len();
        let mut child_count = vec![0usize; k];
        for c in &self.classes {
            if let Some(p) = c.parent {
                child_count[p] += 1;
            }
        }
        // local components: a class starts a new component iff it is the
        // root or its parent has >= 2 children
        let mut comp = vec![usize::MAX; k];
        let mut next = 0usize;
        // classes are topologically ordered by following parents; do BFS from root
        let mut order: Vec<usize> = Vec::new();
        {
            let mut queue: Vec<usize> = (0..k).filter(|&i| self.classes[i].parent.is_none()).collect();
            while let Some(x) = queue.pop() {
                order.push(x);
                for (i, c) in self.classes.iter().enumerate() {
                    if c.parent == Some(x) {
                        queue.push(i);
                    }
                }
            }
        }
        for &i in &order {
            match self.classes[i].parent {
                None => {
                    comp[i] = next;
                    next += 1;
                }
                Some(p) => {
                    if child_count[p] >= 2 {
                        comp[i] = next;
                        next += 1;
                    } else {
                        comp[i] = comp[p];
                    }
                }
            }
        }
        self.components = comp;
        // global variables: those in an equation spanning two components
        let mut global = vec![false; self.var_names.len()];
        for e in &self.equations {
            let comps: Vec<usize> = {
                let mut v: Vec<usize> = e
                    .coeffs
                    .keys()
                    .map(|&u| self.components[self.class_of_var[u]])
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            if comps.len() > 1 {
                for &u in e.coeffs.keys() {
                    global[u] = true;
                }
            }
        }
        self.global_vars = global;
        self.weakly_global = if self.prime != 2 {
            !self.global_vars.iter().any(|&b| b)
        } else if self.modulus == 2 {
            // 2u = 0 is vacuous in Z_2: every variable has order at most 2
            true
        } else {
            (0..self.var_names.len()).all(|u| {
                !self.global_vars[u]
                    || self.equations.iter().any(|e| {
                        e.rhs == 0
                            && e.coeffs.len() == 1
                            && e.coeffs.get(&u) == Some(&2)
                    })
            })
        };
    }

    pub fn component_of_class(&self, c: usize) -> usize {
        self.components[c]
    }

    pub fn component_count(&self) -> usize {
        self.components.iter().map(|&c| c + 1).max().unwrap_or(0)
    }

    pub fn is_weakly_global(&self) -> bool {
        self.weakly_global
    }

    pub fn is_global_var(&self, v: usize) -> bool {
        self.global_vars[v]
    }

    /// Variables of the local component containing the root class.
    pub fn topmost_vars(&self) -> Vec<String> {
        let Some(root) = (0..self.classes.len()).find(|&i| self.classes[i].parent.is_none())
        else {
            return vec![];
        };
        let rc = self.components[root];
        let mut out = Vec::new();
        for (ci, c) in self.classes.iter().enumerate() {
            if self.components[ci] == rc {
                for &v in &c.vars {
                    out.push(self.var_names[v].clone());
                }
            }
        }
        out
    }

    pub fn var_id(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|n| n == name)
    }

    /// Renames all variables (classes keep their names unless also mapped).
    pub fn renamed(&self, f: impl Fn(&str) -> String) -> Tces {
        let mut t = self.clone();
        t.var_names = t.var_names.iter().map(|n| f(n)).collect();
        t
    }

    pub fn with_class_names(&self, f: impl Fn(&str) -> String) -> Tces {
        let mut t = self.clone();
        for c in &mut t.classes {
            c.name = f(&c.name);
        }
        t
    }

    /// Adds pinning equations `var = value` and returns the extended system.
    pub fn with_pins(&self, pins: &[(usize, u64)]) -> Tces {
        let mut t = self.clone();
        for &(v, val) in pins {
            let mut coeffs = BTreeMap::new();
            coeffs.insert(v, 1u64);
            t.equations.push(Equation {
                coeffs,
                rhs: val % t.modulus,
            });
        }
        t.analyze();
        t
    }

    /// Solves the system. Requires the weakly-global property.
    pub fn solve(&self) -> Result<Verdict> {
        if !self.weakly_global {
            return Err(Error::NotWeaklyGlobal(
                "solve requires a weakly global system".into(),
            ));
        }
        let q = self.modulus;
        let k = self.classes.len();
        let half = if self.prime == 2 && self.power >= 1 {
            q / 2
        } else {
            0
        };

        // ---- global classes (p = 2): rep = base + half * b ----
        // A class is global iff it contains a global variable.
        let mut global_class = vec![false; k];
        let mut base = vec![0u64; k];
        if self.prime == 2 {
            for ci in 0..k {
                let globals: Vec<usize> = self.classes[ci]
                    .vars
                    .iter()
                    .copied()
                    .filter(|&v| self.global_vars[v])
                    .collect();
                if globals.is_empty() {
                    continue;
                }
                global_class[ci] = true;
                // all constraints 2(rep + off) = 0 must agree: pairwise
                // offset differences of global variables must be 0 or q/2
                for i in 0..globals.len() {
                    for j in (i + 1)..globals.len() {
                        let d = (self.offsets[globals[i]] + q - self.offsets[globals[j]]) % q;
                        if d != 0 && d != half {
                            return Ok(Verdict::Unsat(format!(
                                "global class {} has order-2 variables at incompatible \
                                 cyclic distance {d}",
                                self.classes[ci].name
                            )));
                        }
                    }
                }
                base[ci] = (q - self.offsets[globals[0]]) % q;
            }
        }

        // ---- representative substitution ----
        // each equation becomes: sum over local classes a_c * rep_c
        //   + sum over global classes bit_c * (q/2) * b_c = rhs'
        struct Row {
            local: BTreeMap<usize, u64>,
            bits: BTreeMap<usize, u64>, // class -> bit over GF(2)
            rhs: u64,
            component: Option<usize>,
        }
        let mut rows: Vec<Row> = Vec::new();
        for e in &self.equations {
            let mut local: BTreeMap<usize, u64> = BTreeMap::new();
            let mut bits: BTreeMap<usize, u64> = BTreeMap::new();
            let mut rhs = e.rhs;
            let mut per_class: BTreeMap<usize, u64> = BTreeMap::new();
            for (&v, &c) in &e.coeffs {
                let ci = self.class_of_var[v];
                *per_class.entry(ci).or_insert(0) = (per_class.get(&ci).copied().unwrap_or(0) + c) % q;
                // move offset contribution to the right-hand side
                rhs = (rhs + q - (c * self.offsets[v]) % q % q) % q;
            }
            for (ci, a) in per_class {
                let a = a % q;
                if a == 0 {
                    continue;
                }
                if global_class[ci] {
                    rhs = (rhs + q - (a * base[ci]) % q) % q;
                    let bit = a % 2;
                    if bit != 0 {
                        let e = bits.entry(ci).or_insert(0);
                        *e = (*e + 1) % 2;
                        if *e == 0 {
                            bits.remove(&ci);
                        }
                    }
                } else {
                    local.insert(ci, a);
                }
            }
            let component = local
                .keys()
                .next()
                .map(|&c| self.components[c]);
            rows.push(Row {
                local,
                bits,
                rhs,
                component,
            });
        }

        // ---- per-component divisibility-pivoted elimination ----
        let val = |x: u64| -> u32 {
            if x == 0 {
                u32::MAX
            } else {
                let mut v = 0;
                let mut y = x;
                while y % self.prime == 0 {
                    y /= self.prime;
                    v += 1;
                }
                v
            }
        };
        let inv_unit = |u: u64| -> u64 {
            // inverse of a unit mod q by Euler/exponentiation
            let phi = q / self.prime * (self.prime - 1);
            let mut result = 1u64;
            let mut b = u % q;
            let mut e = phi - 1;
            while e > 0 {
                if e & 1 == 1 {
                    result = result * b % q;
                }
                b = b * b % q;
                e >>= 1;
            }
            result
        };

        let ncomp = self.component_count();
        let mut pivot_stack: Vec<(usize, usize)> = Vec::new(); // (row, class column)
        for comp in 0..ncomp {
            let mut active: Vec<usize> = rows
                .iter()
                .enumerate()
                .filter(|(_, r)| r.component == Some(comp))
                .map(|(i, _)| i)
                .collect();
            let mut comp_pivots: Vec<(usize, usize)> = Vec::new();
            loop {
                // find the minimal-valuation coefficient among active rows
                let mut best: Option<(u32, usize, usize)> = None; // (val, class, row)
                for &ri in &active {
                    for (&ci, &a) in &rows[ri].local {
                        let v = val(a);
                        let cand = (v, ci, ri);
                        if best.map_or(true, |b| cand < b) {
                            best = Some(cand);
                        }
                    }
                }
                let Some((_, pcol, prow)) = best else { break };
                active.retain(|&r| r != prow);
                // eliminate pcol from the other active rows
                let pivot_coeff = rows[prow].local[&pcol];
                let pv = val(pivot_coeff);
                let punit = pivot_coeff / self.prime.pow(pv);
                let punit_inv = inv_unit(punit);
                for &ri in &active {
                    let Some(&a) = rows[ri].local.get(&pcol) else {
                        continue;
                    };
                    let av = val(a);
                    debug_assert!(av >= pv, "pivot has minimal valuation");
                    let m = self.prime.pow(av - pv) * ((a / self.prime.pow(av)) * punit_inv % q) % q;
                    // row_ri -= m * row_prow
                    let pivot_row_local = rows[prow].local.clone();
                    let pivot_row_bits = rows[prow].bits.clone();
                    let pivot_rhs = rows[prow].rhs;
                    let row = &mut rows[ri];
                    for (&ci, &pa) in &pivot_row_local {
                        let cur = row.local.get(&ci).copied().unwrap_or(0);
                        let nv = (cur + q - (m * pa) % q) % q;
                        if nv == 0 {
                            row.local.remove(&ci);
                        } else {
                            row.local.insert(ci, nv);
                        }
                    }
                    if m % 2 == 1 {
                        for (&ci, _) in &pivot_row_bits {
                            let e = row.bits.entry(ci).or_insert(0);
                            *e = (*e + 1) % 2;
                            if *e == 0 {
                                row.bits.remove(&ci);
                            }
                        }
                    }
                    row.rhs = (row.rhs + q - (m * pivot_rhs) % q) % q;
                    debug_assert!(row.local.get(&pcol).is_none());
                }
                comp_pivots.push((prow, pcol));
            }
            // Hermite shape: pivot valuations nondecreasing, pivot divides
            // its own row, later diagonal divisible
            for w in comp_pivots.windows(2) {
                let v1 = val(rows[w[0].0].local[&w[0].1]);
                let v2 = val(rows[w[1].0].local[&w[1].1]);
                debug_assert!(v1 <= v2, "diagonal divisibility");
            }
            for &(ri, ci) in &comp_pivots {
                let pv = val(rows[ri].local[&ci]);
                for (_, &a) in rows[ri].local.iter() {
                    debug_assert!(val(a) >= pv, "pivot divides its row");
                }
            }
            pivot_stack.extend(comp_pivots);
        }

        // ---- collect atomic and global GF(2) rows ----
        let pivot_rows: Vec<usize> = pivot_stack.iter().map(|&(r, _)| r).collect();
        let mut gf2_rows: Vec<(BTreeMap<usize, u64>, u64)> = Vec::new(); // bits, rhs bit
        for (ri, row) in rows.iter().enumerate() {
            if pivot_rows.contains(&ri) {
                continue;
            }
            if !row.local.is_empty() {
                // an unpivoted row with local coefficients would mean the
                // elimination loop exited early; cannot happen
                return Err(Error::InternalInfeasible(
                    "unpivoted local row after elimination".into(),
                ));
            }
            if row.bits.is_empty() {
                if row.rhs != 0 {
                    return Ok(Verdict::Unsat(format!(
                        "atomic equation 0 = {} derived",
                        row.rhs
                    )));
                }
            } else {
                // LHS is 0 or q/2; rhs must be too
                if row.rhs != 0 && row.rhs != half {
                    return Ok(Verdict::Unsat(format!(
                        "order-2 combination forced to equal {} (not 0 or {half})",
                        row.rhs
                    )));
                }
                gf2_rows.push((row.bits.clone(), row.rhs / half.max(1)));
            }
        }

        // ---- solve the GF(2) system on the b variables ----
        let mut bval: BTreeMap<usize, u64> = BTreeMap::new();
        {
            let mut work = gf2_rows.clone();
            let mut solved: Vec<(usize, BTreeMap<usize, u64>, u64)> = Vec::new();
            loop {
                let Some(pos) = work.iter().position(|(bits, _)| !bits.is_empty()) else {
                    break;
                };
                let (bits, rhs) = work.remove(pos);
                let &pcol = bits.keys().next().unwrap();
                for (obits, orhs) in work.iter_mut() {
                    if obits.contains_key(&pcol) {
                        for (&c, _) in &bits {
                            let e = obits.entry(c).or_insert(0);
                            *e = (*e + 1) % 2;
                            if *e == 0 {
                                obits.remove(&c);
                            }
                        }
                        *orhs = (*orhs + rhs) % 2;
                    }
                }
                solved.push((pcol, bits, rhs));
            }
            for (bits, rhs) in &work {
                debug_assert!(bits.is_empty());
                if *rhs != 0 {
                    return Ok(Verdict::Unsat(
                        "inconsistent mod-2 combination of global equations".into(),
                    ));
                }
            }
            // back-substitute, free bits = 0
            for (pcol, bits, rhs) in solved.into_iter().rev() {
                let mut v = rhs;
                for (&c, _) in &bits {
                    if c != pcol {
                        v = (v + bval.get(&c).copied().unwrap_or(0)) % 2;
                    }
                }
                bval.insert(pcol, v);
            }
        }

        // ---- back-substitute local pivots ----
        let mut rep = vec![0u64; k];
        for ci in 0..k {
            if global_class[ci] {
                rep[ci] = (base[ci] + half * bval.get(&ci).copied().unwrap_or(0)) % q;
            }
        }
        let mut assigned = vec![false; k];
        for &(_, ci) in &pivot_stack {
            assigned[ci] = true;
        }
        for &(ri, ci) in pivot_stack.iter().rev() {
            let row = &rows[ri];
            let mut residual = row.rhs;
            for (&cj, &a) in &row.local {
                if cj == ci {
                    continue;
                }
                residual = (residual + q - (a * rep[cj]) % q) % q;
            }
            for (&cj, _) in &row.bits {
                let b = bval.get(&cj).copied().unwrap_or(0);
                residual = (residual + q - (half * b) % q) % q;
            }
            let a = row.local[&ci];
            let av = val(a);
            if residual != 0 && val(residual) < av {
                return Ok(Verdict::Unsat(format!(
                    "pivot {} does not divide the residual {} for class {}",
                    a, residual, self.classes[ci].name
                )));
            }
            let unit = a / self.prime.pow(av);
            let x = if residual == 0 {
                0
            } else {
                (residual / self.prime.pow(av)) * inv_unit(unit) % (q / self.prime.pow(av))
            };
            rep[ci] = x % q;
        }

        // ---- assemble and verify the witness ----
        let mut assignment: BTreeMap<String, u64> = BTreeMap::new();
        for (ci, c) in self.classes.iter().enumerate() {
            for &v in &c.vars {
                assignment.insert(
                    self.var_names[v].clone(),
                    (rep[ci] + self.offsets[v]) % q,
                );
            }
        }
        match self.check_assignment(&assignment) {
            Ok(()) => Ok(Verdict::Sat(assignment)),
            Err(e) => Err(Error::InternalInfeasible(format!(
                "solver produced an invalid witness: {e}"
            ))),
        }
    }

    /// Substitution check of a full assignment against all equations and
    /// cyclic constraints.
    pub fn check_assignment(&self, assignment: &BTreeMap<String, u64>) -> Result<()> {
        let q = self.modulus;
        let value = |v: usize| -> Result<u64> {
            assignment
                .get(&self.var_names[v])
                .copied()
                .ok_or_else(|| Error::Validation(format!("missing value for {}", self.var_names[v])))
        };
        for c in &self.classes {
            let rep = value(c.vars[0])?;
            for &v in &c.vars {
                if value(v)? != (rep + self.offsets[v]) % q {
                    return Err(Error::Validation(format!(
                        "cyclic constraint violated at {}",
                        self.var_names[v]
                    )));
                }
            }
        }
        for (ei, e) in self.equations.iter().enumerate() {
            let mut lhs = 0u64;
            for (&v, &a) in &e.coeffs {
                lhs = (lhs + a * value(v)?) % q;
            }
            if lhs != e.rhs {
                return Err(Error::Validation(format!("equation {ei} violated")));
            }
        }
        Ok(())
    }

    /// Exhaustive search over reasonable assignments (cyclic constraints
    /// respected by construction), depth-first over classes with early
    /// equation checks. The oracle for `solve`.
    pub fn brute_solve(&self) -> Result<Verdict> {
        let q = self.modulus;
        let k = self.classes.len();
        let space = (q as f64).powi(k as i32);
        if space > 1e8 {
            return Err(Error::TooLarge(format!("{q}^{k} assignments")));
        }
        // equations checkable once all their classes are assigned
        let eq_classes: Vec<Vec<usize>> = self
            .equations
            .iter()
            .map(|e| {
                let mut v: Vec<usize> =
                    e.coeffs.keys().map(|&u| self.class_of_var[u]).collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let mut by_last_class: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
        for (ei, cs) in eq_classes.iter().enumerate() {
            let last = cs.iter().copied().max().map_or(0, |m| m + 1);
            by_last_class[last].push(ei);
        }
        let mut rep = vec![0u64; k];
        if self.search_rep(&mut rep, 0, &by_last_class) {
            let mut assignment = BTreeMap::new();
            for (ci, c) in self.classes.iter().enumerate() {
                for &v in &c.vars {
                    assignment.insert(
                        self.var_names[v].clone(),
                        (rep[ci] + self.offsets[v]) % q,
                    );
                }
            }
            self.check_assignment(&assignment)?;
            Ok(Verdict::Sat(assignment))
        } else {
            Ok(Verdict::Unsat("exhausted all reasonable assignments".into()))
        }
    }

    fn eval_equation(&self, e: &Equation, rep: &[u64]) -> u64 {
        let q = self.modulus;
        let mut lhs = 0u64;
        for (&v, &a) in &e.coeffs {
            let value = (rep[self.class_of_var[v]] + self.offsets[v]) % q;
            lhs = (lhs + a * value) % q;
        }
        lhs
    }

    fn search_rep(&self, rep: &mut Vec<u64>, depth: usize, by_last: &[Vec<usize>]) -> bool {
        for &ei in &by_last[depth] {
            if self.eval_equation(&self.equations[ei], rep) != self.equations[ei].rhs {
                return false;
            }
        }
        if depth == self.classes.len() {
            return true;
        }
        for v in 0..self.modulus {
            rep[depth] = v;
            if self.search_rep(rep, depth + 1, by_last) {
                return true;
            }
        }
        false
    }

    // ---------- serialization ----------

    pub fn to_json(&self) -> String {
        let classes: Vec<TcesClassJson> = self
            .classes
            .iter()
            .map(|c| TcesClassJson {
                id: c.name.clone(),
                parent: c.parent.map(|p| self.classes[p].name.clone()),
                vars: c.vars.iter().map(|&v| self.var_names[v].clone()).collect(),
            })
            .collect();
        let cyclic: Vec<TcesCyclicJson> = self
            .classes
            .iter()
            .filter(|c| c.vars.len() > 1)
            .map(|c| TcesCyclicJson {
                class: c.name.clone(),
                pairs: c
                    .vars
                    .iter()
                    .skip(1)
                    .map(|&v| {
                        (
                            self.var_names[v].clone(),
                            self.var_names[c.vars[0]].clone(),
                            self.offsets[v],
                        )
                    })
                    .collect(),
            })
            .collect();
        let equations: Vec<TcesEquationJson> = self
            .equations
            .iter()
            .map(|e| TcesEquationJson {
                coeffs: e
                    .coeffs
                    .iter()
                    .map(|(&v, &c)| (self.var_names[v].clone(), c))
                    .collect(),
                rhs: e.rhs,
            })
            .collect();
        serde_json::to_string_pretty(&TcesJson {
            modulus: self.modulus,
            classes,
            cyclic,
            equations,
        })
        .expect("tces serializes")
    }

    pub fn from_json(text: &str) -> Result<Tces> {
        let raw: TcesJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let classes: Vec<(String, Option<String>, Vec<String>)> = raw
            .classes
            .iter()
            .map(|c| (c.id.clone(), c.parent.clone(), c.vars.clone()))
            .collect();
        let cyclic: Vec<(String, Vec<(String, String, u64)>)> = raw
            .cyclic
            .iter()
            .map(|c| (c.class.clone(), c.pairs.clone()))
            .collect();
        let equations: Vec<(BTreeMap<String, u64>, u64)> = raw
            .equations
            .iter()
            .map(|e| (e.coeffs.clone(), e.rhs))
            .collect();
        Tces::build(raw.modulus, &classes, &cyclic, &equations)
    }
}

#[derive(Serialize, Deserialize)]
struct TcesJson {
    modulus: u64,
    classes: Vec<TcesClassJson>,
    #[serde(default)]
    cyclic: Vec<TcesCyclicJson>,
    equations: Vec<TcesEquationJson>,
}

#[derive(Serialize, Deserialize)]
struct TcesClassJson {
    id: String,
    parent: Option<String>,
    vars: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TcesCyclicJson {
    class: String,
    pairs: Vec<(String, String, u64)>,
}

#[derive(Serialize, Deserialize)]
struct TcesEquationJson {
    coeffs: BTreeMap<String, u64>,
    rhs: u64,
}

// ---------- unions ----------

/// Union of two compatible TCESs (shared variables must be shared topmost
/// variables, and a union of variable classes of both systems). The solution
/// set of the union is the intersection of the extended solution sets.
pub fn union(t1: &Tces, t2: &Tces) -> Result<Tces> {
    if t1.modulus != t2.modulus {
        return Err(Error::NotCompatible(format!(
            "moduli differ: {} vs {}",
            t1.modulus, t2.modulus
        )));
    }
    if t1.classes.is_empty() {
        return Ok(t2.clone());
    }
    if t2.classes.is_empty() {
        return Ok(t1.clone());
    }
    let names1: std::collections::HashSet<&String> = t1.var_names.iter().collect();
    let shared: Vec<String> = t2
        .var_names
        .iter()
        .filter(|n| names1.contains(n))
        .cloned()
        .collect();
    let top1: std::collections::HashSet<String> = t1.topmost_vars().into_iter().collect();
    let top2: std::collections::HashSet<String> = t2.topmost_vars().into_iter().collect();
    for s in &shared {
        if !top1.contains(s) || !top2.contains(s) {
            return Err(Error::NotCompatible(format!(
                "shared variable {s} is not topmost in both systems"
            )));
        }
    }
    let shared_set: std::collections::HashSet<&String> = shared.iter().collect();
    for t in [t1, t2] {
        for c in &t.classes {
            let inside = c
                .vars
                .iter()
                .filter(|&&v| shared_set.contains(&t.var_names[v]))
                .count();
            if inside != 0 && inside != c.vars.len() {
                return Err(Error::NotCompatible(format!(
                    "class {} is only partially shared",
                    c.name
                )));
            }
        }
    }

    // merged classes: all of t1; t2's classes that are not fully shared
    let mut classes: Vec<(String, Option<String>, Vec<String>)> = Vec::new();
    let mut cyclic: Vec<(String, Vec<(String, String, u64)>)> = Vec::new();
    let mut equations: Vec<(BTreeMap<String, u64>, u64)> = Vec::new();

    let class_name = |t: &Tces, side: usize, ci: usize| format!("u{side}.{}", t.classes[ci].name);

    let root1 = (0..t1.classes.len())
        .find(|&i| t1.classes[i].parent.is_none())
        .expect("t1 nonempty");
    let rc1 = t1.components[root1];
    let root2 = (0..t2.classes.len())
        .find(|&i| t2.classes[i].parent.is_none())
        .expect("t2 nonempty");
    let rc2 = t2.components[root2];

    // root path: t1 root component in order, then t2 root component classes
    // that are not shared
    let mut root_path: Vec<(usize, usize)> = Vec::new(); // (side, class index)
    let order_of = |t: &Tces| -> Vec<usize> {
        // root component classes from root downward
        let mut out = Vec::new();
        let mut cur = (0..t.classes.len()).find(|&i| t.classes[i].parent.is_none());
        while let Some(i) = cur {
            out.push(i);
            cur = (0..t.classes.len())
                .find(|&j| t.classes[j].parent == Some(i) && t.components[j] == t.components[i]);
        }
        out
    };
    for i in order_of(t1) {
        debug_assert_eq!(t1.components[i], rc1);
        root_path.push((1, i));
    }
    let is_shared_class = |t: &Tces, ci: usize| -> bool {
        t.classes[ci]
            .vars
            .iter()
            .all(|&v| shared_set.contains(&t.var_names[v]))
    };
    for i in order_of(t2) {
        debug_assert_eq!(t2.components[i], rc2);
        if !is_shared_class(t2, i) {
            root_path.push((2, i));
        }
    }

    // map shared t2 variable names to themselves (same names in t1)
    // classes: root path chained, then remaining classes with parents fixed
    let mut emitted: HashMap<(usize, usize), String> = HashMap::new();
    let mut prev: Option<String> = None;
    for &(side, ci) in &root_path {
        let t = if side == 1 { t1 } else { t2 };
        let name = class_name(t, side, ci);
        let vars: Vec<String> = t.classes[ci]
            .vars
            .iter()
            .map(|&v| t.var_names[v].clone())
            .collect();
        classes.push((name.clone(), prev.clone(), vars));
        emitted.insert((side, ci), name.clone());
        prev = Some(name);
    }
    let last_root = prev.clone().expect("root path nonempty");
    // remaining classes of both systems
    for (side, t, rc) in [(1usize, t1, rc1), (2usize, t2, rc2)] {
        // topological: parents before children
        let mut pending: Vec<usize> = (0..t.classes.len())
            .filter(|&i| t.components[i] != rc)
            .collect();
        while !pending.is_empty() {
            let mut progressed = false;
            pending.retain(|&i| {
                let parent = t.classes[i].parent.expect("non-root");
                let parent_name = if t.components[parent] == rc {
                    Some(last_root.clone())
                } else {
                    emitted.get(&(side, parent)).cloned()
                };
                if let Some(pn) = parent_name {
                    let name = class_name(t, side, i);
                    let vars: Vec<String> = t.classes[i]
                        .vars
                        .iter()
                        .map(|&v| t.var_names[v].clone())
                        .collect();
                    classes.push((name.clone(), Some(pn), vars));
                    emitted.insert((side, i), name);
                    progressed = true;
                    false
                } else {
                    true
                }
            });
            if !progressed {
                return Err(Error::NotCompatible("cyclic class dependency".into()));
            }
        }
    }
    // shared classes of t2 were dropped; except for those, forward cyclic
    // data; for dropped shared classes add chain equations for their
    // cyclic constraints (they may partition the shared set differently)
    for (side, t) in [(1usize, t1), (2usize, t2)] {
        for (ci, c) in t.classes.iter().enumerate() {
            if side == 2 && is_shared_class(t, ci) {
                for &v in c.vars.iter().skip(1) {
                    let mut coeffs = BTreeMap::new();
                    // v - rep = offset
                    let rep = c.vars[0];
                    if v == rep {
                        continue;
                    }
                    coeffs.insert(t.var_names[v].clone(), 1u64);
                    let e = coeffs.entry(t.var_names[rep].clone()).or_insert(0);
                    *e = (*e + t.modulus - 1) % t.modulus;
                    if t.var_names[v] == t.var_names[rep] {
                        continue;
                    }
                    equations.push((coeffs, t.offsets[v] % t.modulus));
                }
                continue;
            }
            if c.vars.len() > 1 {
                let name = emitted[&(side, ci)].clone();
                let pairs: Vec<(String, String, u64)> = c
                    .vars
                    .iter()
                    .skip(1)
                    .map(|&v| {
                        (
                            t.var_names[v].clone(),
                            t.var_names[c.vars[0]].clone(),
                            t.offsets[v],
                        )
                    })
                    .collect();
                cyclic.push((name, pairs));
            }
        }
    }
    for t in [t1, t2] {
        for e in &t.equations {
            let coeffs: BTreeMap<String, u64> = e
                .coeffs
                .iter()
                .map(|(&v, &c)| (t.var_names[v].clone(), c))
                .collect();
            equations.push((coeffs, e.rhs));
        }
    }
    Tces::build(t1.modulus, &classes, &cyclic, &equations)
}

/// A series of TCESs over pairwise coprime prime powers with disjoint
/// variable sets.
#[derive(Clone, Debug, Default)]
pub struct TcesSeries {
    pub members: Vec<Tces>,
}

impl TcesSeries {
    pub fn new(members: Vec<Tces>) -> Result<TcesSeries> {
        let mut primes: Vec<u64> = members.iter().map(|m| m.prime).collect();
        primes.sort_unstable();
        primes.dedup();
        if primes.len() != members.len() {
            return Err(Error::Validation(
                "series members must have pairwise coprime (distinct-prime) moduli".into(),
            ));
        }
        let mut names: Vec<&String> = members.iter().flat_map(|m| m.var_names.iter()).collect();
        let total = names.len();
        names.sort_unstable();
        names.dedup();
        if names.len() != total {
            return Err(Error::Validation(
                "series members must have disjoint variable sets".into(),
            ));
        }
        Ok(TcesSeries { members })
    }

    pub fn member_for_prime(&self, p: u64) -> Option<&Tces> {
        self.members.iter().find(|m| m.prime == p)
    }

    pub fn solve(&self) -> Result<Verdict> {
        let mut combined = BTreeMap::new();
        for m in &self.members {
            match m.solve()? {
                Verdict::Sat(a) => combined.extend(a),
                Verdict::Unsat(c) => {
                    return Ok(Verdict::Unsat(format!("member Z_{}: {c}", m.modulus)))
                }
            }
        }
        Ok(Verdict::Sat(combined))
    }

    pub fn brute_solve(&self) -> Result<Verdict> {
        let mut combined = BTreeMap::new();
        for m in &self.members {
            match m.brute_solve()? {
                Verdict::Sat(a) => combined.extend(a),
                Verdict::Unsat(c) => {
                    return Ok(Verdict::Unsat(format!("member Z_{}: {c}", m.modulus)))
                }
            }
        }
        Ok(Verdict::Sat(combined))
    }

    pub fn is_weakly_global(&self) -> bool {
        self.members.iter().all(|m| m.is_weakly_global())
    }
}

/// Lifts a TCES over Z_{p^a} to Z_{p^b} (a <= b): values are scaled by
/// p^{b-a} and constraints p^a * u = 0 pin the image of the embedding.
pub fn lift(t: &Tces, new_modulus: u64) -> Result<Tces> {
    let (p, b) = prime_power(new_modulus)?;
    if p != t.prime || b < t.power {
        return Err(Error::NotCompatible(format!(
            "cannot lift Z_{} into Z_{}",
            t.modulus, new_modulus
        )));
    }
    if b == t.power {
        return Ok(t.clone());
    }
    let scale = new_modulus / t.modulus;
    let classes: Vec<(String, Option<String>, Vec<String>)> = t
        .classes
        .iter()
        .map(|c| {
            (
                c.name.clone(),
                c.parent.map(|p| t.classes[p].name.clone()),
                c.vars.iter().map(|&v| t.var_names[v].clone()).collect(),
            )
        })
        .collect();
    let cyclic: Vec<(String, Vec<(String, String, u64)>)> = t
        .classes
        .iter()
        .filter(|c| c.vars.len() > 1)
        .map(|c| {
            (
                c.name.clone(),
                c.vars
                    .iter()
                    .skip(1)
                    .map(|&v| {
                        (
                            t.var_names[v].clone(),
                            t.var_names[c.vars[0]].clone(),
                            t.offsets[v] * scale,
                        )
                    })
                    .collect(),
            )
        })
        .collect();
    let mut equations: Vec<(BTreeMap<String, u64>, u64)> = t
        .equations
        .iter()
        .map(|e| {
            (
                e.coeffs
                    .iter()
                    .map(|(&v, &c)| (t.var_names[v].clone(), c))
                    .collect(),
                e.rhs * scale,
            )
        })
        .collect();
    for name in &t.var_names {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.clone(), t.modulus % new_modulus);
        equations.push((coeffs, 0));
    }
    Tces::build(new_modulus, &classes, &cyclic, &equations)
}

/// Union of two series: members over the same prime are lifted to the larger
/// power and unioned; members over other primes are copied.
pub fn series_union(s1: &TcesSeries, s2: &TcesSeries) -> Result<TcesSeries> {
    let mut members: Vec<Tces> = Vec::new();
    let mut used2: Vec<bool> = vec![false; s2.members.len()];
    for m1 in &s1.members {
        if let Some(j) = s2.members.iter().position(|m2| m2.prime == m1.prime) {
            used2[j] = true;
            let m2 = &s2.members[j];
            let target = m1.modulus.max(m2.modulus);
            let a = lift(m1, target)?;
            let b = lift(m2, target)?;
            members.push(union(&a, &b)?);
        } else {
            members.push(m1.clone());
        }
    }
    for (j, m2) in s2.members.iter().enumerate() {
        if !used2[j] {
            members.push(m2.clone());
        }
    }
    TcesSeries::new(members)
}

/// Deterministic random weakly-global instances for the oracle suite.
pub fn random_weakly_global(seed: u64, modulus: u64) -> Tces {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ modulus.wrapping_mul(0x9e37));
    let (p, _) = prime_power(modulus).unwrap();
    let nclasses = rng.gen_range(2..=6usize);
    let mut classes: Vec<(String, Option<String>, Vec<String>)> = Vec::new();
    let mut cyclic: Vec<(String, Vec<(String, String, u64)>)> = Vec::new();
    let mut var_count = 0usize;
    let max_vars_per_class = (modulus as usize).min(2);
    for i in 0..nclasses {
        let parent = if i == 0 {
            None
        } else {
            Some(format!("k{}", rng.gen_range(0..i)))
        };
        let nv = if var_count + 2 <= 12 {
            rng.gen_range(1..=max_vars_per_class)
        } else {
            1
        };
        let vars: Vec<String> = (0..nv).map(|j| format!("v{i}_{j}")).collect();
        var_count += nv;
        if nv > 1 {
            // distinct offsets
            let mut offs: Vec<u64> = (1..modulus).collect();
            for k in (1..offs.len()).rev() {
                let j = rng.gen_range(0..=k);
                offs.swap(k, j);
            }
            let pairs: Vec<(String, String, u64)> = vars
                .iter()
                .skip(1)
                .enumerate()
                .map(|(j, v)| (v.clone(), vars[0].clone(), offs[j]))
                .collect();
            cyclic.push((format!("k{i}"), pairs));
        }
        classes.push((format!("k{i}"), parent, vars));
    }
    // component structure: a class starts a new component iff it is the
    // root or its parent branches
    let parent_of: Vec<Option<usize>> = classes
        .iter()
        .map(|(_, p, _)| p.as_ref().map(|s| s[1..].parse::<usize>().unwrap()))
        .collect();
    let mut child_count = vec![0usize; nclasses];
    for p in parent_of.iter().flatten() {
        child_count[*p] += 1;
    }
    let mut comp = vec![0usize; nclasses];
    let mut next_comp = 0usize;
    for i in 0..nclasses {
        match parent_of[i] {
            None => {
                comp[i] = next_comp;
                next_comp += 1;
            }
            Some(p) => {
                if child_count[p] >= 2 {
                    comp[i] = next_comp;
                    next_comp += 1;
                } else {
                    comp[i] = comp[p];
                }
            }
        }
    }
    let chain = |mut c: usize| -> Vec<usize> {
        let mut out = vec![c];
        while let Some(pp) = parent_of[c] {
            out.push(pp);
            c = pp;
        }
        out
    };
    // local equations stay within one component (a component is a path, so
    // any variable subset respects the path condition)
    let mut equations: Vec<(BTreeMap<String, u64>, u64)> = Vec::new();
    let neq = rng.gen_range(1..=5usize);
    for _ in 0..neq {
        let anchor = rng.gen_range(0..nclasses);
        let pool: Vec<usize> = (0..nclasses).filter(|&c| comp[c] == comp[anchor]).collect();
        let mut coeffs: BTreeMap<String, u64> = BTreeMap::new();
        let picks = rng.gen_range(1..=pool.len().min(3));
        for _ in 0..picks {
            let ci = pool[rng.gen_range(0..pool.len())];
            let vars = &classes[ci].2;
            let v = vars[rng.gen_range(0..vars.len())].clone();
            let c = rng.gen_range(1..modulus);
            let e = coeffs.entry(v).or_insert(0);
            *e = (*e + c) % modulus;
        }
        coeffs.retain(|_, c| *c != 0);
        if coeffs.is_empty() {
            continue;
        }
        equations.push((coeffs, rng.gen_range(0..modulus)));
    }
    // optionally a global equation for p = 2, with 2u = 0 constraints for
    // every variable it touches
    if p == 2 && rng.gen_bool(0.5) {
        let mut candidates: Vec<(usize, usize)> = Vec::new();
        for leaf in 0..nclasses {
            for &a in &chain(leaf) {
                if comp[a] != comp[leaf] {
                    candidates.push((leaf, a));
                }
            }
        }
        if !candidates.is_empty() {
            let (c1, c2) = candidates[rng.gen_range(0..candidates.len())];
            let v1 = classes[c1].2[0].clone();
            let v2 = classes[c2].2[0].clone();
            let mut coeffs = BTreeMap::new();
            coeffs.insert(v1.clone(), 1u64);
            coeffs.insert(v2.clone(), 1u64);
            let rhs = if rng.gen_bool(0.5) { 0 } else { modulus / 2 };
            equations.push((coeffs, rhs));
            for v in [v1, v2] {
                let mut c2u = BTreeMap::new();
                c2u.insert(v, 2u64 % modulus);
                equations.push((c2u, 0));
            }
        }
    }
    let t = Tces::build(modulus, &classes, &cyclic, &equations).unwrap();
    debug_assert!(t.is_weakly_global());
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple(modulus: u64, eqs: Vec<(BTreeMap<String, u64>, u64)>) -> Tces {
        // one class, two variables x, y with x - y = 1
        Tces::build(
            modulus,
            &[(
                "k0".into(),
                None,
                vec!["x".into(), "y".into()],
            )],
            &[("k0".into(), vec![("x".into(), "y".into(), 1)])],
            &eqs,
        )
        .unwrap()
    }

    fn coeffs(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
        pairs.iter().map(|(n, c)| (n.to_string(), *c)).collect()
    }

    #[test]
    fn single_class_is_one_local_component_and_weakly_global() {
        let t = simple(2, vec![(coeffs(&[("x", 1), ("y", 1)]), 1)]);
        assert_eq!(t.component_count(), 1);
        assert!(t.is_weakly_global());
        assert!(t.solve().unwrap().is_sat());
    }

    #[test]
    fn global_equation_without_order_constraint_is_not_weakly_global() {
        // two sibling leaves under a root; an equation joining them over Z_4
        // without 2u = 0 constraints
        let t = Tces::build(
            4,
            &[
                ("r".into(), None, vec!["r0".into()]),
                ("a".into(), Some("r".into()), vec!["a0".into()]),
                ("b".into(), Some("r".into()), vec!["b0".into()]),
            ],
            &[],
            &[(coeffs(&[("a0", 1), ("b0", 1)]), 0)],
        )
        .unwrap_err();
        // a0 and b0 are incomparable: the equation violates the path
        // condition outright
        assert!(matches!(t, Error::PathViolation(_)));

        // a root-to-leaf coupling between different components is a legal
        // TCES but not weakly global without 2u = 0
        let t = Tces::build(
            4,
            &[
                ("r".into(), None, vec!["r0".into()]),
                ("a".into(), Some("r".into()), vec!["a0".into()]),
                ("b".into(), Some("r".into()), vec!["b0".into()]),
            ],
            &[],
            &[(coeffs(&[("r0", 1), ("b0", 1)]), 0)],
        )
        .unwrap();
        assert_eq!(t.component_count(), 3);
        assert!(!t.is_weakly_global());
        assert!(matches!(t.solve(), Err(Error::NotWeaklyGlobal(_))));
    }

    #[test]
    fn chain_with_branching_third_splits_components() {
        // r -> m -> {a, b}: root component {r, m}, then {a}, {b}
        let t = Tces::build(
            3,
            &[
                ("r".into(), None, vec!["r0".into()]),
                ("m".into(), Some("r".into()), vec!["m0".into()]),
                ("a".into(), Some("m".into()), vec!["a0".into()]),
                ("b".into(), Some("m".into()), vec!["b0".into()]),
            ],
            &[],
            &[],
        )
        .unwrap();
        assert_eq!(t.component_count(), 3);
        assert_eq!(t.component_of_class(0), t.component_of_class(1));
        assert_ne!(t.component_of_class(2), t.component_of_class(3));
        assert_eq!(t.topmost_vars(), vec!["r0".to_string(), "m0".to_string()]);
    }

    #[test]
    fn doubling_is_unsat_mod_4() {
        let t = Tces::build(
            4,
            &[("k".into(), None, vec!["x".into()])],
            &[],
            &[(coeffs(&[("x", 2)]), 1)],
        )
        .unwrap();
        assert!(!t.solve().unwrap().is_sat());
    }

    #[test]
    fn empty_system_is_sat() {
        let t = Tces::build(3, &[], &[], &[]).unwrap();
        assert!(t.brute_solve().unwrap().is_sat());
        assert!(t.solve().unwrap().is_sat());
    }

    #[test]
    fn contradictory_pins_are_unsat() {
        let t = Tces::build(
            3,
            &[("k".into(), None, vec!["x".into()])],
            &[],
            &[
                (coeffs(&[("x", 1)]), 0),
                (coeffs(&[("x", 1)]), 1),
            ],
        )
        .unwrap();
        assert!(!t.brute_solve().unwrap().is_sat());
        assert!(!t.solve().unwrap().is_sat());
    }

    #[test]
    fn solve_matches_brute_on_random_instances() {
        for modulus in [2u64, 4, 8, 3, 9] {
            for seed in 0..60 {
                let t = random_weakly_global(seed, modulus);
                assert!(t.is_weakly_global());
                let fast = t.solve().unwrap();
                let brute = t.brute_solve().unwrap();
                assert_eq!(
                    fast.is_sat(),
                    brute.is_sat(),
                    "disagreement on seed {seed} modulus {modulus}: {}",
                    t.to_json()
                );
                if let Verdict::Sat(a) = fast {
                    t.check_assignment(&a).unwrap();
                }
            }
        }
    }

    #[test]
    fn verdicts_are_representative_choice_independent() {
        // permuting the variables within a class must not change the verdict
        for seed in 0..20 {
            let t = random_weakly_global(seed, 4);
            let verdict = t.solve().unwrap().is_sat();
            // rebuild with reversed variable order per class
            let classes: Vec<(String, Option<String>, Vec<String>)> = t
                .classes
                .iter()
                .map(|c| {
                    let mut vars: Vec<String> =
                        c.vars.iter().map(|&v| t.var_names[v].clone()).collect();
                    vars.reverse();
                    (
                        c.name.clone(),
                        c.parent.map(|p| t.classes[p].name.clone()),
                        vars,
                    )
                })
                .collect();
            let cyclic: Vec<(String, Vec<(String, String, u64)>)> = t
                .classes
                .iter()
                .filter(|c| c.vars.len() > 1)
                .map(|c| {
                    (
                        c.name.clone(),
                        c.vars
                            .iter()
                            .skip(1)
                            .map(|&v| {
                                (
                                    t.var_names[v].clone(),
                                    t.var_names[c.vars[0]].clone(),
                                    t.offsets[v],
                                )
                            })
                            .collect(),
                    )
                })
                .collect();
            let equations: Vec<(BTreeMap<String, u64>, u64)> = t
                .equations
                .iter()
                .map(|e| {
                    (
                        e.coeffs
                            .iter()
                            .map(|(&v, &c)| (t.var_names[v].clone(), c))
                            .collect(),
                        e.rhs,
                    )
                })
                .collect();
            let t2 = Tces::build(t.modulus, &classes, &cyclic, &equations).unwrap();
            assert_eq!(t2.solve().unwrap().is_sat(), verdict);
        }
    }

    #[test]
    fn union_of_disjoint_systems() {
        let a = Tces::build(
            2,
            &[("k".into(), None, vec!["x".into()])],
            &[],
            &[(coeffs(&[("x", 1)]), 1)],
        )
        .unwrap();
        let b = Tces::build(
            2,
            &[("m".into(), None, vec!["y".into()])],
            &[],
            &[(coeffs(&[("y", 1)]), 0)],
        )
        .unwrap();
        let u = union(&a, &b).unwrap();
        match u.solve().unwrap() {
            Verdict::Sat(s) => {
                assert_eq!(s["x"], 1);
                assert_eq!(s["y"], 0);
            }
            Verdict::Unsat(_) => panic!("expected sat"),
        }
    }

    #[test]
    fn union_with_itself_preserves_solutions() {
        let a = simple(3, vec![(coeffs(&[("x", 1)]), 2)]);
        let u = union(&a, &a.clone()).unwrap();
        let v1 = a.solve().unwrap();
        let v2 = u.solve().unwrap();
        assert_eq!(v1.is_sat(), v2.is_sat());
    }

    #[test]
    fn union_of_conflicting_shared_constraints_is_unsat() {
        let mk = |rhs: u64| {
            Tces::build(
                2,
                &[("k".into(), None, vec!["x".into()])],
                &[],
                &[(coeffs(&[("x", 1)]), rhs)],
            )
            .unwrap()
        };
        let u = union(&mk(0), &mk(1)).unwrap();
        assert!(!u.solve().unwrap().is_sat());
        assert!(!u.brute_solve().unwrap().is_sat());
    }

    #[test]
    fn union_solution_space_is_intersection() {
        // brute-force check on small compatible pairs sharing one variable
        for seed in 0..12 {
            let a = random_weakly_global(seed, 2);
            // rename to create a disjoint partner, then share topmost x by
            // renaming one of its topmost vars into a's namespace
            let b0 = random_weakly_global(seed + 100, 2);
            let b = b0.renamed(|n| format!("b.{n}"));
            let u = union(&a, &b).unwrap();
            let expected = a.brute_solve().unwrap().is_sat() && b.brute_solve().unwrap().is_sat();
            assert_eq!(u.brute_solve().unwrap().is_sat(), expected);
            assert_eq!(u.solve().unwrap().is_sat(), expected);
        }
    }

    #[test]
    fn lifting_z2_into_z4_embeds_solutions() {
        let t = Tces::build(
            2,
            &[("k".into(), None, vec!["x".into()])],
            &[],
            &[(coeffs(&[("x", 1)]), 1)],
        )
        .unwrap();
        let lifted = lift(&t, 4).unwrap();
        match lifted.solve().unwrap() {
            Verdict::Sat(s) => assert_eq!(s["x"], 2),
            Verdict::Unsat(_) => panic!("expected sat"),
        }
        // and the 2u = 0 constraint is present
        assert!(lifted
            .equations
            .iter()
            .any(|e| e.rhs == 0 && e.coeffs.len() == 1 && e.coeffs.values().next() == Some(&2)));
    }

    #[test]
    fn series_union_lifts_same_prime_members() {
        let a = TcesSeries::new(vec![Tces::build(
            2,
            &[("k".into(), None, vec!["x".into()])],
            &[],
            &[(coeffs(&[("x", 1)]), 1)],
        )
        .unwrap()])
        .unwrap();
        let b = TcesSeries::new(vec![Tces::build(
            4,
            &[("m".into(), None, vec!["y".into()])],
            &[],
            &[(coeffs(&[("y", 1)]), 3)],
        )
        .unwrap()])
        .unwrap();
        let u = series_union(&a, &b).unwrap();
        assert_eq!(u.members.len(), 1);
        match u.solve().unwrap() {
            Verdict::Sat(s) => {
                assert_eq!(s["x"], 2);
                assert_eq!(s["y"], 3);
            }
            Verdict::Unsat(_) => panic!("expected sat"),
        }
    }

    #[test]
    fn series_with_disjoint_primes_concatenates() {
        let a = TcesSeries::new(vec![simple(2, vec![])]).unwrap();
        let b = TcesSeries::new(vec![Tces::build(
            3,
            &[("m".into(), None, vec!["z".into()])],
            &[],
            &[],
        )
        .unwrap()])
        .unwrap();
        let u = series_union(&a, &b).unwrap();
        assert_eq!(u.members.len(), 2);
    }

    #[test]
    fn json_round_trip() {
        let t = random_weakly_global(7, 4);
        let json = t.to_json();
        let back = Tces::from_json(&json).unwrap();
        assert_eq!(back.solve().unwrap().is_sat(), t.solve().unwrap().is_sat());
        assert_eq!(back.var_names.len(), t.var_names.len());
    }
}
