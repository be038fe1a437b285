//! Quantified all-negative clauses with exceptions and finite sets thereof.
//!
//! A [`Psiform`] denotes the (possibly infinite) set of ground clauses
//! obtained by instantiating its main clause in every way except those
//! covered by its exception substitutions. A form with no exceptions is
//! *simple*; simple and ground, it is a *singleton* denoting one clause.
//!
//! Forms are normalized at construction: literals are stored sorted,
//! exception chains are oriented canonically, and redundant exceptions
//! (those whose clauses are instances of another exception's clauses) are
//! removed, so every form in the system is well-formed. Equality and
//! ordering are modulo consistent variable renaming.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::terms::{
    rename_clause_apart, set_match, set_unify_ranked, trans, ranks_for, Clause, Literal,
    Substitution, Term,
};
use crate::{Error, Result};

/// Size bounds for a family of forms: maximum literals per main clause,
/// maximum variables, maximum exceptions. The number of distinct subset
/// matches between two fixed-length main clauses is bounded by `e^(C/e)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_literals: usize,
    pub max_vars: usize,
    pub max_exceptions: usize,
}

impl Limits {
    /// Upper bound on subset matches between fixed-length main clauses.
    pub fn max_subset_matches(&self) -> f64 {
        (self.max_literals as f64 / std::f64::consts::E).exp()
    }
}

/// A quantified all-negative clause with exception substitutions.
#[derive(Debug, Clone)]
pub struct Psiform {
    main: Clause,
    exceptions: Vec<Substitution>,
    key: String,
}

impl PartialEq for Psiform {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Psiform {}

impl PartialOrd for Psiform {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Psiform {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

impl std::hash::Hash for Psiform {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

impl Psiform {
    /// Builds and normalizes a form. Rejects an empty or non-negative main
    /// clause, a repeated variable inside one literal, and exceptions that
    /// bind no variable of the main clause, bind a foreign variable, or bind
    /// to a term outside the main clause's variables and the constants.
    pub fn new(main: Clause, exceptions: Vec<Substitution>) -> Result<Psiform> {
        if main.is_empty() {
            return Err(Error::Malformed("empty main clause".into()));
        }
        if !main.all_negative() {
            return Err(Error::Malformed(format!(
                "main clause must be all-negative: {main}"
            )));
        }
        for lit in main.literals() {
            let mut seen = BTreeSet::new();
            for v in lit.vars() {
                if !seen.insert(v) {
                    return Err(Error::Malformed(format!(
                        "variable ?{v} occurs twice in literal {lit}"
                    )));
                }
            }
        }
        let own = main.var_set();
        let mut canonical_excs = Vec::new();
        for exc in exceptions {
            if exc.is_empty() {
                return Err(Error::Malformed(
                    "exception must bind at least one variable".into(),
                ));
            }
            for (v, t) in exc.bindings() {
                if !own.contains(v) {
                    return Err(Error::Malformed(format!(
                        "exception binds ?{v}, which is not a main-clause variable"
                    )));
                }
                if let Term::Var(w) = t {
                    if !own.contains(w) {
                        return Err(Error::Malformed(format!(
                            "exception binds ?{v} to foreign variable ?{w}"
                        )));
                    }
                }
            }
            // Orient variable chains canonically; this cannot drop the
            // exception below one binding because all targets are own
            // variables or constants.
            let oriented = trans(&exc, &main);
            if oriented.is_empty() {
                return Err(Error::Malformed(format!(
                    "exception {exc} binds no variable effectively"
                )));
            }
            canonical_excs.push(oriented);
        }
        let exceptions = reduce_exceptions(&main, canonical_excs);
        let key = canonical_key(&main, &exceptions);
        Ok(Psiform {
            main,
            exceptions,
            key,
        })
    }

    /// A simple form over the given main clause.
    pub fn simple(main: Clause) -> Result<Psiform> {
        Psiform::new(main, Vec::new())
    }

    /// The singleton form of one ground negative literal.
    pub fn negated_atom(atom: &Literal) -> Result<Psiform> {
        Psiform::simple(Clause::new(vec![atom.negated()]))
    }

    pub fn main(&self) -> &Clause {
        &self.main
    }

    pub fn exceptions(&self) -> &[Substitution] {
        &self.exceptions
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.main.var_set()
    }

    pub fn var_count(&self) -> usize {
        self.main.var_set().len()
    }

    pub fn is_simple(&self) -> bool {
        self.exceptions.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.is_simple() && self.main.is_ground()
    }

    pub fn is_fixed_length(&self) -> bool {
        self.main.is_fixed_length()
    }

    /// The simple form over this form's main clause.
    pub fn main_part(&self) -> Psiform {
        Psiform::simple(self.main.clone()).expect("main part of a valid form is valid")
    }

    /// The i-th exception clause, `main·σᵢ`.
    pub fn exception_clause(&self, i: usize) -> Clause {
        self.main.apply(&self.exceptions[i])
    }

    /// The simple forms over every exception clause.
    pub fn exception_forms(&self) -> Vec<Psiform> {
        (0..self.exceptions.len())
            .map(|i| {
                Psiform::simple(self.exception_clause(i))
                    .expect("exception clause of a valid form is valid")
            })
            .collect()
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = self.main.constants();
        for exc in &self.exceptions {
            for (_, t) in exc.bindings() {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            }
        }
        out
    }

    /// Re-runs well-formedness normalization. Construction already
    /// normalizes, so this is the identity; it exists to make idempotence
    /// observable.
    pub fn normalize_well_formed(&self) -> Psiform {
        Psiform::new(self.main.clone(), self.exceptions.to_vec())
            .expect("normalizing a valid form cannot fail")
    }

    /// Ground-clause membership. `c` must be ground and all-negative. True
    /// iff some substitution generates `c` from the main clause and no
    /// instantiation of any exception clause equals `c`. Works for
    /// non-fixed-length forms by considering every generating match.
    pub fn contains_clause(&self, c: &Clause) -> bool {
        if !c.is_ground() || !c.all_negative() || c.is_empty() {
            return false;
        }
        if set_match(&self.main, c, &self.main.var_set()).is_empty() {
            return false;
        }
        for i in 0..self.exceptions.len() {
            let exc = self.exception_clause(i);
            if !set_match(&exc, c, &exc.var_set()).is_empty() {
                return false;
            }
        }
        true
    }

    /// True when every clause of `self` is a clause of `other`. Conservative
    /// on exception coverage: may answer `false` for exotic overlaps, never
    /// `true` wrongly.
    pub fn subsumed_by(&self, other: &Psiform) -> bool {
        let avoid: BTreeSet<String> = self.vars().union(&other.vars()).cloned().collect();
        let (other_main, renaming) = rename_clause_apart(&other.main, &avoid);
        if set_match(&other_main, &self.main, &other_main.var_set()).is_empty() {
            return false;
        }
        // Every clause other's exceptions remove must already be absent from
        // self: each piece of main(self) ∩ exc(other) must lie inside one of
        // self's exceptions.
        for i in 0..other.exceptions.len() {
            let exc_clause = other.exception_clause(i).apply(&renaming);
            let ranks = ranks_for(&self.main, &exc_clause);
            for sigma in set_unify_ranked(&self.main, &exc_clause, &ranks).iter() {
                let piece = self.main.apply(sigma);
                let covered = (0..self.exceptions.len()).any(|j| {
                    let own_exc = self.exception_clause(j);
                    let (own_exc, _) = rename_clause_apart(&own_exc, &piece.var_set());
                    !set_match(&own_exc, &piece, &own_exc.var_set()).is_empty()
                });
                if !covered {
                    return false;
                }
            }
        }
        true
    }
}

impl fmt::Display for Psiform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.main)?;
        if !self.exceptions.is_empty() {
            write!(f, " except ")?;
            for (i, exc) in self.exceptions.iter().enumerate() {
                if i > 0 {
                    write!(f, "; ")?;
                }
                write!(f, "{exc}")?;
            }
        }
        write!(f, "]")
    }
}

/// Removes redundant exceptions: σj goes when another exception's clause set
/// contains σj's clauses (in the syntactic core case, when σi ⊆ σj). Keeps
/// the result sorted for deterministic printing.
fn reduce_exceptions(main: &Clause, excs: Vec<Substitution>) -> Vec<Substitution> {
    // Deduplicate by exception-clause identity first.
    let mut items: Vec<(Substitution, Clause)> = Vec::new();
    for e in excs {
        let clause = main.apply(&e);
        if !items.iter().any(|(_, c)| clause_variant(c, &clause)) {
            items.push((e, clause));
        }
    }
    let n = items.len();
    let mut removed = vec![false; n];
    for j in 0..n {
        for i in 0..n {
            if i == j || removed[i] || removed[j] {
                continue;
            }
            // exc_j is an instance of exc_i: exc_i's form swallows exc_j's.
            let (ci, _) = rename_clause_apart(&items[i].1, &items[j].1.var_set());
            if !set_match(&ci, &items[j].1, &ci.var_set()).is_empty() {
                removed[j] = true;
            }
        }
    }
    let mut out: Vec<Substitution> = items
        .into_iter()
        .zip(removed)
        .filter_map(|((e, _), r)| (!r).then_some(e))
        .collect();
    out.sort_by_key(|e| e.to_string());
    out
}

/// Clause equality modulo variable renaming.
fn clause_variant(a: &Clause, b: &Clause) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let (a2, _) = rename_clause_apart(a, &b.var_set());
    !set_match(&a2, b, &a2.var_set()).is_empty() && !set_match(b, &a2, &b.var_set()).is_empty()
}

/// Renaming-invariant canonical key of a form. Literals are ordered by their
/// constant skeleton; within groups of identical skeletons every order is
/// tried and the lexicographically least rendering wins. Variables are
/// numbered by first occurrence; exceptions are rendered as variable classes
/// plus constant bindings, so the binding orientation does not matter.
fn canonical_key(main: &Clause, exceptions: &[Substitution]) -> String {
    let skeleton = |lit: &Literal| -> String {
        let args: Vec<String> = lit
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => format!("c:{c}"),
                Term::Var(_) => "v".to_string(),
            })
            .collect();
        format!(
            "{}{}/{}({})",
            if lit.positive { "+" } else { "-" },
            lit.pred,
            lit.args.len(),
            args.join(",")
        )
    };

    let mut lits: Vec<&Literal> = main.literals().iter().collect();
    lits.sort_by_key(|l| skeleton(l));
    // Group boundaries of equal skeletons.
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=lits.len() {
        if i == lits.len() || skeleton(lits[i]) != skeleton(lits[start]) {
            groups.push((start, i));
            start = i;
        }
    }

    let render = |order: &[&Literal]| -> String {
        let mut ids: BTreeMap<String, usize> = BTreeMap::new();
        let mut main_parts = Vec::new();
        for lit in order {
            let args: Vec<String> = lit
                .args
                .iter()
                .map(|t| match t {
                    Term::Const(c) => c.clone(),
                    Term::Var(v) => {
                        let n = ids.len();
                        let id = *ids.entry(v.clone()).or_insert(n);
                        format!("?{id}")
                    }
                })
                .collect();
            main_parts.push(format!(
                "{}{}({})",
                if lit.positive { "" } else { "~" },
                lit.pred,
                args.join(",")
            ));
        }
        let mut exc_parts: Vec<String> = exceptions
            .iter()
            .map(|exc| {
                // Classes of identified variables plus constant bindings.
                let mut classes: BTreeMap<String, Vec<usize>> = BTreeMap::new();
                let mut consts: Vec<String> = Vec::new();
                for (v, t) in exc.bindings() {
                    let vid = ids.get(v).copied().unwrap_or(usize::MAX);
                    match t {
                        Term::Const(c) => consts.push(format!("{vid}={c}")),
                        Term::Var(w) => {
                            classes.entry(w.clone()).or_default().push(vid);
                        }
                    }
                }
                let mut parts: Vec<String> = consts;
                for (rep, mut members) in classes {
                    let rid = ids.get(&rep).copied().unwrap_or(usize::MAX);
                    members.push(rid);
                    members.sort_unstable();
                    members.dedup();
                    parts.push(
                        members
                            .iter()
                            .map(|m| m.to_string())
                            .collect::<Vec<_>>()
                            .join("~"),
                    );
                }
                parts.sort();
                parts.join(",")
            })
            .collect();
        exc_parts.sort();
        format!("{}!{}", main_parts.join("|"), exc_parts.join(";"))
    };

    let mut best: Option<String> = None;
    permute_groups(&mut lits, &groups, 0, &mut |order| {
        let key = render(order);
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
    });
    best.expect("at least one literal order exists")
}

fn permute_groups<'a>(
    lits: &mut Vec<&'a Literal>,
    groups: &[(usize, usize)],
    g: usize,
    visit: &mut impl FnMut(&[&'a Literal]),
) {
    if g == groups.len() {
        visit(lits);
        return;
    }
    let (lo, hi) = groups[g];
    if hi - lo <= 1 {
        permute_groups(lits, groups, g + 1, visit);
        return;
    }
    permute_range(lits, lo, hi, groups, g, visit);
}

fn permute_range<'a>(
    lits: &mut Vec<&'a Literal>,
    lo: usize,
    hi: usize,
    groups: &[(usize, usize)],
    g: usize,
    visit: &mut impl FnMut(&[&'a Literal]),
) {
    if lo + 1 >= hi {
        permute_groups(lits, groups, g + 1, visit);
        return;
    }
    for i in lo..hi {
        lits.swap(lo, i);
        permute_range(lits, lo + 1, hi, groups, g, visit);
        lits.swap(lo, i);
    }
}

/// A finite set of forms denoting the union of their clause sets. The empty
/// set denotes the empty clause set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PsiSet {
    members: BTreeSet<Psiform>,
}

impl PsiSet {
    pub fn empty() -> PsiSet {
        PsiSet::default()
    }

    pub fn singleton(psi: Psiform) -> PsiSet {
        let mut members = BTreeSet::new();
        members.insert(psi);
        PsiSet { members }
    }

    pub fn from_members(members: impl IntoIterator<Item = Psiform>) -> PsiSet {
        PsiSet {
            members: members.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn insert(&mut self, psi: Psiform) -> bool {
        self.members.insert(psi)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Psiform> {
        self.members.iter()
    }

    pub fn contains(&self, psi: &Psiform) -> bool {
        self.members.contains(psi)
    }

    pub fn union(mut self, other: PsiSet) -> PsiSet {
        self.members.extend(other.members);
        self
    }

    /// Drops members whose clause set is contained in another member's.
    pub fn reduced(self) -> PsiSet {
        let members: Vec<Psiform> = self.members.into_iter().collect();
        let keep: Vec<bool> = members
            .iter()
            .enumerate()
            .map(|(i, a)| {
                !members.iter().enumerate().any(|(j, b)| {
                    i != j && a.subsumed_by(b) && !(j > i && b.subsumed_by(a))
                })
            })
            .collect();
        PsiSet {
            members: members
                .into_iter()
                .zip(keep)
                .filter_map(|(m, k)| k.then_some(m))
                .collect(),
        }
    }
}

impl FromIterator<Psiform> for PsiSet {
    fn from_iter<T: IntoIterator<Item = Psiform>>(iter: T) -> Self {
        PsiSet::from_members(iter)
    }
}

impl IntoIterator for PsiSet {
    type Item = Psiform;
    type IntoIter = std::collections::btree_set::IntoIter<Psiform>;
    fn into_iter(self) -> Self::IntoIter {
        self.members.into_iter()
    }
}

impl fmt::Display for PsiSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::Term;

    fn c(name: &str) -> Term {
        Term::constant(name)
    }

    fn v(name: &str) -> Term {
        Term::var(name)
    }

    fn psi(main: Vec<Literal>, excs: Vec<Vec<(&str, Term)>>) -> Psiform {
        Psiform::new(
            Clause::new(main),
            excs.into_iter()
                .map(|b| {
                    Substitution::from_bindings(b.into_iter().map(|(k, t)| (k.to_string(), t)))
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn normalization_removes_subsumed_exception() {
        let p = psi(
            vec![Literal::neg("P", vec![v("x"), v("y")])],
            vec![vec![("x", c("A"))], vec![("x", c("A")), ("y", c("B"))]],
        );
        assert_eq!(p.exceptions().len(), 1);
        assert_eq!(p.exceptions()[0], Substitution::bind("x", c("A")));
    }

    #[test]
    fn normalization_keeps_independent_exceptions() {
        let p = psi(
            vec![Literal::neg("P", vec![v("x"), v("y")])],
            vec![vec![("x", c("A"))], vec![("y", c("B"))]],
        );
        assert_eq!(p.exceptions().len(), 2);
    }

    #[test]
    fn normalization_is_identity_on_simple_forms() {
        let p = psi(vec![Literal::neg("P", vec![v("x")])], vec![]);
        assert_eq!(p.normalize_well_formed(), p);
    }

    #[test]
    fn rejects_bad_exceptions() {
        let main = Clause::new(vec![Literal::neg("P", vec![v("x")])]);
        assert!(Psiform::new(main.clone(), vec![Substitution::empty()]).is_err());
        assert!(Psiform::new(main.clone(), vec![Substitution::bind("z", c("A"))]).is_err());
        assert!(Psiform::new(main, vec![Substitution::bind("x", v("q"))]).is_err());
    }

    #[test]
    fn rejects_positive_or_repeated() {
        assert!(Psiform::simple(Clause::new(vec![Literal::pos("P", vec![c("A")])])).is_err());
        assert!(
            Psiform::simple(Clause::new(vec![Literal::neg("P", vec![v("x"), v("x")])])).is_err()
        );
    }

    #[test]
    fn fixed_length_examples() {
        let not_fixed = psi(
            vec![
                Literal::neg("P", vec![v("x"), c("A")]),
                Literal::neg("P", vec![c("B"), v("x")]),
            ],
            vec![],
        );
        assert!(!not_fixed.is_fixed_length());
        let fixed = psi(
            vec![
                Literal::neg("P", vec![v("x"), c("A")]),
                Literal::neg("P", vec![v("x"), c("B")]),
            ],
            vec![],
        );
        assert!(fixed.is_fixed_length());
        let single = psi(vec![Literal::neg("P", vec![v("x")])], vec![]);
        assert!(single.is_fixed_length());
    }

    #[test]
    fn membership_with_overlapping_generators() {
        // [~P(x)|~P(y) except {x=A}] does not contain ~P(A)|~P(B): the
        // clause is also generated by the exception clause ~P(A)|~P(y).
        let p = psi(
            vec![
                Literal::neg("P", vec![v("x")]),
                Literal::neg("P", vec![v("y")]),
            ],
            vec![vec![("x", c("A"))]],
        );
        let clause = Clause::new(vec![
            Literal::neg("P", vec![c("A")]),
            Literal::neg("P", vec![c("B")]),
        ]);
        assert!(!p.contains_clause(&clause));
    }

    #[test]
    fn membership_singleton() {
        let clause = Clause::new(vec![Literal::neg("P", vec![c("A")])]);
        let p = Psiform::simple(clause.clone()).unwrap();
        assert!(p.contains_clause(&clause));
    }

    #[test]
    fn membership_avoids_exceptions() {
        let p = psi(
            vec![Literal::neg("In", vec![v("x"), c("/img")])],
            vec![vec![("x", c("fig"))], vec![("x", c("a.bmp"))]],
        );
        let inside = Clause::new(vec![Literal::neg("In", vec![c("doc"), c("/img")])]);
        let excluded = Clause::new(vec![Literal::neg("In", vec![c("fig"), c("/img")])]);
        assert!(p.contains_clause(&inside));
        assert!(!p.contains_clause(&excluded));
    }

    #[test]
    fn equality_modulo_renaming() {
        let p1 = psi(
            vec![Literal::neg("P", vec![v("x"), v("y")])],
            vec![vec![("x", c("A"))]],
        );
        let p2 = psi(
            vec![Literal::neg("P", vec![v("u"), v("w")])],
            vec![vec![("u", c("A"))]],
        );
        assert_eq!(p1, p2);
        let p3 = psi(
            vec![Literal::neg("P", vec![v("x"), v("y")])],
            vec![vec![("y", c("A"))]],
        );
        assert_ne!(p1, p3);
    }

    #[test]
    fn equality_of_flipped_variable_exceptions() {
        // Binding x to t or t to x yields the same exception clauses.
        let main = vec![
            Literal::neg("R", vec![v("x"), v("y")]),
            Literal::neg("Q", vec![v("t")]),
        ];
        let p1 = psi(main.clone(), vec![vec![("x", v("t"))]]);
        let p2 = psi(main, vec![vec![("t", v("x"))]]);
        assert_eq!(p1, p2);
    }

    #[test]
    fn subsumption_between_members() {
        let general = psi(vec![Literal::neg("P", vec![v("x"), v("y")])], vec![]);
        let instance = psi(vec![Literal::neg("P", vec![v("u"), c("A")])], vec![]);
        assert!(instance.subsumed_by(&general));
        assert!(!general.subsumed_by(&instance));
        let set = PsiSet::from_members([general.clone(), instance]).reduced();
        assert_eq!(set.len(), 1);
        assert!(set.contains(&general));
    }
}
