//! The logical language core: terms, literals, clauses, substitutions, and
//! the matching/unification primitives the whole calculus is built on.
//!
//! There are no function symbols, only constants and variables, which keeps
//! unification a matter of walking argument lists. Clauses are literal sets:
//! two clauses with the same literals are equal regardless of order. The
//! four primitives come in one-sided and two-sided flavors:
//!
//! * [`set_match`]: `aσ = b`, binding only a designated variable set of `a`;
//! * [`set_unify`]: `aσ = bσ`;
//! * [`subset_match`]: `aσ ⊆ b` (clause subsumption);
//! * [`subset_unify`]: `aσ ⊆ bσ`.
//!
//! Each returns every most general solution, deduplicated modulo consistent
//! variable renaming. Callers never rename operands apart themselves; every
//! binary operation on clauses renames internally.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A term is a constant or a variable. Constant and variable namespaces are
/// disjoint; the textual syntax marks variables with a `?` sigil.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(String),
    Var(String),
}

impl Term {
    pub fn constant(name: impl Into<String>) -> Term {
        Term::Const(name.into())
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Term::Const(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(name) => write!(f, "{name}"),
            Term::Var(name) => write!(f, "?{name}"),
        }
    }
}

/// A possibly negated atom. Predicate arity is fixed per symbol in any given
/// problem; a literal with mismatched arity simply never unifies.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub positive: bool,
    pub pred: String,
    pub args: Vec<Term>,
}

impl Literal {
    pub fn pos(pred: impl Into<String>, args: Vec<Term>) -> Literal {
        Literal {
            positive: true,
            pred: pred.into(),
            args,
        }
    }

    pub fn neg(pred: impl Into<String>, args: Vec<Term>) -> Literal {
        Literal {
            positive: false,
            pred: pred.into(),
            args,
        }
    }

    pub fn negated(&self) -> Literal {
        Literal {
            positive: !self.positive,
            pred: self.pred.clone(),
            args: self.args.clone(),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_const)
    }

    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        })
    }

    pub fn apply(&self, subst: &Substitution) -> Literal {
        Literal {
            positive: self.positive,
            pred: self.pred.clone(),
            args: self.args.iter().map(|t| subst.resolve(t)).collect(),
        }
    }

    /// True when `self` and `other` unify after their variables are renamed
    /// apart. Used by the fixed-length test.
    pub fn unifies_renamed_apart(&self, other: &Literal) -> bool {
        if self.positive != other.positive
            || self.pred != other.pred
            || self.args.len() != other.args.len()
        {
            return false;
        }
        // With variables renamed apart and no repeated variable inside one
        // literal, the only obstruction is a constant/constant clash.
        self.args.iter().zip(&other.args).all(|(a, b)| match (a, b) {
            (Term::Const(c1), Term::Const(c2)) => c1 == c2,
            _ => true,
        })
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            write!(f, "~")?;
        }
        write!(f, "{}", self.pred)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, arg) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{arg}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// A clause: a duplicate-free, order-insensitive set of literals, stored
/// sorted so equal literal sets compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    pub fn new(mut literals: Vec<Literal>) -> Clause {
        literals.sort();
        literals.dedup();
        Clause { literals }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn is_ground(&self) -> bool {
        self.literals.iter().all(Literal::is_ground)
    }

    pub fn all_negative(&self) -> bool {
        self.literals.iter().all(|l| !l.positive)
    }

    pub fn contains(&self, lit: &Literal) -> bool {
        self.literals.binary_search(lit).is_ok()
    }

    /// Literal-set inclusion, `self ⊆ other`.
    pub fn subset_of(&self, other: &Clause) -> bool {
        self.literals.iter().all(|l| other.contains(l))
    }

    pub fn without(&self, lit: &Literal) -> Clause {
        Clause::new(
            self.literals
                .iter()
                .filter(|l| *l != lit)
                .cloned()
                .collect(),
        )
    }

    /// Variable names in first-occurrence order over the stored literals.
    pub fn vars(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for lit in &self.literals {
            for v in lit.vars() {
                if seen.insert(v.clone()) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    pub fn var_set(&self) -> BTreeSet<String> {
        self.vars().into_iter().collect()
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for lit in &self.literals {
            for t in &lit.args {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            }
        }
        out
    }

    pub fn apply(&self, subst: &Substitution) -> Clause {
        Clause::new(self.literals.iter().map(|l| l.apply(subst)).collect())
    }

    /// No two literals unify once variables are renamed apart. This is the
    /// property that makes every ground clause of a quantified form the
    /// product of exactly one substitution.
    pub fn is_fixed_length(&self) -> bool {
        for (i, a) in self.literals.iter().enumerate() {
            for b in &self.literals[i + 1..] {
                if a.unifies_renamed_apart(b) {
                    return false;
                }
            }
        }
        true
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, lit) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, "|")?;
            }
            write!(f, "{lit}")?;
        }
        Ok(())
    }
}

/// A finite variable-to-term mapping, kept idempotent: no bound variable
/// occurs inside any binding's value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn empty() -> Substitution {
        Substitution::default()
    }

    /// Builds a substitution from raw bindings, compressing variable chains
    /// so the result is idempotent. A binding of a variable to itself is
    /// dropped.
    pub fn from_bindings(bindings: impl IntoIterator<Item = (String, Term)>) -> Substitution {
        let raw: BTreeMap<String, Term> = bindings.into_iter().collect();
        let mut out = BTreeMap::new();
        for var in raw.keys() {
            let mut term = raw.get(var).cloned().unwrap();
            let mut hops = 0;
            while let Term::Var(v) = &term {
                match raw.get(v) {
                    Some(next) if hops < raw.len() => {
                        term = next.clone();
                        hops += 1;
                    }
                    _ => break,
                }
            }
            if term != Term::Var(var.clone()) {
                out.insert(var.clone(), term);
            }
        }
        Substitution { bindings: out }
    }

    pub fn bind(var: impl Into<String>, term: Term) -> Substitution {
        Substitution::from_bindings([(var.into(), term)])
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn bindings(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.bindings.iter()
    }

    pub fn domain(&self) -> BTreeSet<String> {
        self.bindings.keys().cloned().collect()
    }

    pub fn is_ground(&self) -> bool {
        self.bindings.values().all(Term::is_const)
    }

    pub fn resolve(&self, term: &Term) -> Term {
        match term {
            Term::Var(v) => self.bindings.get(v).cloned().unwrap_or_else(|| term.clone()),
            Term::Const(_) => term.clone(),
        }
    }

    /// Restricts the bindings to the given variables.
    pub fn restrict(&self, vars: &BTreeSet<String>) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        }
    }

    /// Syntactic subset: every binding of `self` appears in `other`.
    pub fn subset_of(&self, other: &Substitution) -> bool {
        self.bindings
            .iter()
            .all(|(v, t)| other.bindings.get(v) == Some(t))
    }

    /// Composition `self` then `other`, restricted to `self`'s domain plus
    /// fresh bindings of `other` on the given universe of interest.
    pub fn compose(&self, other: &Substitution) -> Substitution {
        let mut bindings: BTreeMap<String, Term> = self
            .bindings
            .iter()
            .map(|(v, t)| (v.clone(), other.resolve(t)))
            .collect();
        for (v, t) in &other.bindings {
            bindings.entry(v.clone()).or_insert_with(|| t.clone());
        }
        Substitution::from_bindings(bindings)
    }

    /// True if `self` can be obtained by instantiating `other` further, i.e.
    /// there is a substitution `τ` with `self = other·τ` on `vars`.
    pub fn instance_of(&self, other: &Substitution, vars: &BTreeSet<String>) -> bool {
        let mut tau: BTreeMap<String, Term> = BTreeMap::new();
        for v in vars {
            let mine = self.resolve(&Term::Var(v.clone()));
            let theirs = other.resolve(&Term::Var(v.clone()));
            match theirs {
                Term::Const(_) => {
                    if mine != theirs {
                        return false;
                    }
                }
                Term::Var(w) => match tau.get(&w) {
                    Some(t) => {
                        if *t != mine {
                            return false;
                        }
                    }
                    None => {
                        tau.insert(w, mine);
                    }
                },
            }
        }
        true
    }

    /// Canonical form modulo renaming of range variables: binding targets
    /// that are variables are renumbered by first occurrence in domain
    /// order. Two substitutions that differ only in the choice of fresh
    /// range variable names canonicalize identically.
    pub fn canonical_key(&self) -> String {
        let mut names: BTreeMap<&str, usize> = BTreeMap::new();
        let mut parts = Vec::new();
        for (v, t) in &self.bindings {
            let rendered = match t {
                Term::Const(c) => format!("{v}=#{c}"),
                Term::Var(w) => {
                    if self.bindings.contains_key(w) {
                        // Bound range variables cannot appear after
                        // normalization, but render defensively.
                        format!("{v}=?{w}")
                    } else {
                        let n = names.len();
                        let idx = *names.entry(w.as_str()).or_insert(n);
                        format!("{v}=@{idx}")
                    }
                }
            };
            parts.push(rendered);
        }
        parts.join(",")
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "?{v}={t}")?;
        }
        write!(f, "}}")
    }
}

/// The result of a matching or unification query: every most general
/// solution, pairwise inequivalent under renaming.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchSet {
    matches: Vec<Substitution>,
}

impl MatchSet {
    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Substitution> {
        self.matches.iter()
    }

    pub fn into_vec(self) -> Vec<Substitution> {
        self.matches
    }

    fn collect(found: Vec<Substitution>, vars: &BTreeSet<String>) -> MatchSet {
        let mut matches: Vec<Substitution> = Vec::new();
        let mut keys: BTreeSet<String> = BTreeSet::new();
        for s in found {
            if keys.insert(s.canonical_key()) {
                matches.push(s);
            }
        }
        // Keep only the most general solutions.
        let keep: Vec<bool> = matches
            .iter()
            .enumerate()
            .map(|(i, s)| {
                !matches
                    .iter()
                    .enumerate()
                    .any(|(j, t)| i != j && s.instance_of(t, vars) && !t.instance_of(s, vars))
            })
            .collect();
        MatchSet {
            matches: matches
                .into_iter()
                .zip(keep)
                .filter_map(|(s, k)| k.then_some(s))
                .collect(),
        }
    }
}

/// Ranks decide which variable survives as the representative when two
/// variables are identified. Pristine-side variables always beat internally
/// renamed ones, so operation results never leak fresh names; among pristine
/// variables the one occurring later in its clause wins, mirroring the
/// exception format `v1=vn, …, v(n-1)=vn`.
#[derive(Debug, Clone, Default)]
struct VarRanks {
    rank: BTreeMap<String, (bool, usize)>,
}

impl VarRanks {
    fn new(pristine: &Clause, foreign: &Clause) -> VarRanks {
        let mut rank = BTreeMap::new();
        for (i, v) in pristine.vars().into_iter().enumerate() {
            rank.insert(v, (true, i));
        }
        for (i, v) in foreign.vars().into_iter().enumerate() {
            rank.entry(v).or_insert((false, i));
        }
        VarRanks { rank }
    }

    fn prefer(&self, a: &str, b: &str) -> bool {
        self.rank.get(a).copied().unwrap_or((false, 0)) > self.rank.get(b).copied().unwrap_or((false, 0))
    }
}

/// Incremental unifier state: variable-to-term bindings with chain
/// resolution. Cloned on backtracking; clauses here are tiny.
#[derive(Debug, Clone, Default)]
struct Bindings {
    map: BTreeMap<String, Term>,
}

impl Bindings {
    fn walk(&self, term: &Term) -> Term {
        let mut t = term.clone();
        while let Term::Var(v) = &t {
            match self.map.get(v) {
                Some(next) => t = next.clone(),
                None => break,
            }
        }
        t
    }

    fn unify(&mut self, a: &Term, b: &Term, ranks: &VarRanks) -> bool {
        let ta = self.walk(a);
        let tb = self.walk(b);
        match (ta, tb) {
            (Term::Const(c1), Term::Const(c2)) => c1 == c2,
            (Term::Var(v), t @ Term::Const(_)) | (t @ Term::Const(_), Term::Var(v)) => {
                self.map.insert(v, t);
                true
            }
            (Term::Var(v1), Term::Var(v2)) => {
                if v1 != v2 {
                    if ranks.prefer(&v1, &v2) {
                        self.map.insert(v2, Term::Var(v1));
                    } else {
                        self.map.insert(v1, Term::Var(v2));
                    }
                }
                true
            }
        }
    }

    /// One-sided match: only variables of `restrict` may be bound, and they
    /// bind to `b`'s terms verbatim.
    fn match_one_sided(&mut self, a: &Term, b: &Term, restrict: &BTreeSet<String>) -> bool {
        let ta = self.walk(a);
        match ta {
            Term::Const(_) => ta == *b,
            Term::Var(v) => {
                if restrict.contains(&v) {
                    self.map.insert(v, b.clone());
                    true
                } else {
                    // A variable outside the restriction cannot be bound;
                    // operands are variable-disjoint, so it never equals b.
                    Term::Var(v) == *b
                }
            }
        }
    }

    fn snapshot(&self) -> Substitution {
        Substitution::from_bindings(self.map.clone())
    }
}

fn literal_skeleton_eq(a: &Literal, b: &Literal) -> bool {
    a.positive == b.positive && a.pred == b.pred && a.args.len() == b.args.len()
}

fn unify_literals(bnd: &Bindings, a: &Literal, b: &Literal, ranks: &VarRanks) -> Option<Bindings> {
    if !literal_skeleton_eq(a, b) {
        return None;
    }
    let mut next = bnd.clone();
    for (ta, tb) in a.args.iter().zip(&b.args) {
        if !next.unify(ta, tb, ranks) {
            return None;
        }
    }
    Some(next)
}

fn match_literals(
    bnd: &Bindings,
    a: &Literal,
    b: &Literal,
    restrict: &BTreeSet<String>,
) -> Option<Bindings> {
    if !literal_skeleton_eq(a, b) {
        return None;
    }
    let mut next = bnd.clone();
    for (ta, tb) in a.args.iter().zip(&b.args) {
        if !next.match_one_sided(ta, tb, restrict) {
            return None;
        }
    }
    Some(next)
}

/// All most general `σ` on `restrict ⊆ vars(a)` with `aσ = b` as literal
/// sets. Enumeration tries literals of `a` in stored order against literals
/// of `b` in stored order, so output order is deterministic.
pub fn set_match(a: &Clause, b: &Clause, restrict: &BTreeSet<String>) -> MatchSet {
    if a.len() < b.len() {
        return MatchSet::default();
    }
    let mut found = Vec::new();
    let mut covered = vec![0usize; b.len()];
    fn rec(
        a: &Clause,
        b: &Clause,
        restrict: &BTreeSet<String>,
        i: usize,
        bnd: &Bindings,
        covered: &mut Vec<usize>,
        found: &mut Vec<Substitution>,
    ) {
        if i == a.len() {
            if covered.iter().all(|c| *c > 0) {
                found.push(bnd.snapshot().restrict(restrict));
            }
            return;
        }
        for (j, blit) in b.literals().iter().enumerate() {
            if let Some(next) = match_literals(bnd, &a.literals()[i], blit, restrict) {
                covered[j] += 1;
                rec(a, b, restrict, i + 1, &next, covered, found);
                covered[j] -= 1;
            }
        }
    }
    rec(a, b, restrict, 0, &Bindings::default(), &mut covered, &mut found);
    MatchSet::collect(found, restrict)
}

/// All most general `σ` with `aσ = bσ` as literal sets. Operands must be
/// variable-disjoint; the calculus renames internally before calling.
pub fn set_unify(a: &Clause, b: &Clause, ranks: &VarRanks) -> MatchSet {
    // Enumerate from the larger side onto the smaller so collapses are
    // representable, then verify set equality under the unifier.
    let (big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut found = Vec::new();
    let mut covered = vec![0usize; small.len()];
    fn rec(
        big: &Clause,
        small: &Clause,
        ranks: &VarRanks,
        i: usize,
        bnd: &Bindings,
        covered: &mut Vec<usize>,
        found: &mut Vec<Substitution>,
    ) {
        if i == big.len() {
            if covered.iter().all(|c| *c > 0) {
                found.push(bnd.snapshot());
            }
            return;
        }
        for (j, slit) in small.literals().iter().enumerate() {
            if let Some(next) = unify_literals(bnd, &big.literals()[i], slit, ranks) {
                covered[j] += 1;
                rec(big, small, ranks, i + 1, &next, covered, found);
                covered[j] -= 1;
            }
        }
    }
    rec(big, small, ranks, 0, &Bindings::default(), &mut covered, &mut found);
    let vars: BTreeSet<String> = a.var_set().union(&b.var_set()).cloned().collect();
    let verified = found
        .into_iter()
        .filter(|s| a.apply(s) == b.apply(s))
        .collect();
    MatchSet::collect(verified, &vars)
}

/// All most general `σ` on `restrict ⊆ vars(a)` with `aσ ⊆ b` (subsumption).
/// Two literals of `a` may land on the same literal of `b`; for fixed-length
/// operands that never happens.
pub fn subset_match(a: &Clause, b: &Clause, restrict: &BTreeSet<String>) -> MatchSet {
    let mut found = Vec::new();
    fn rec(
        a: &Clause,
        b: &Clause,
        restrict: &BTreeSet<String>,
        i: usize,
        bnd: &Bindings,
        found: &mut Vec<Substitution>,
    ) {
        if i == a.len() {
            found.push(bnd.snapshot().restrict(restrict));
            return;
        }
        for blit in b.literals() {
            if let Some(next) = match_literals(bnd, &a.literals()[i], blit, restrict) {
                rec(a, b, restrict, i + 1, &next, found);
            }
        }
    }
    rec(a, b, restrict, 0, &Bindings::default(), &mut found);
    MatchSet::collect(found, restrict)
}

/// All most general `σ` with `aσ ⊆ bσ`.
pub fn subset_unify(a: &Clause, b: &Clause, ranks: &VarRanks) -> MatchSet {
    let mut found = Vec::new();
    fn rec(
        a: &Clause,
        b: &Clause,
        ranks: &VarRanks,
        i: usize,
        bnd: &Bindings,
        found: &mut Vec<Substitution>,
    ) {
        if i == a.len() {
            found.push(bnd.snapshot());
            return;
        }
        for blit in b.literals() {
            if let Some(next) = unify_literals(bnd, &a.literals()[i], blit, ranks) {
                rec(a, b, ranks, i + 1, &next, found);
            }
        }
    }
    rec(a, b, ranks, 0, &Bindings::default(), &mut found);
    let vars: BTreeSet<String> = a.var_set().union(&b.var_set()).cloned().collect();
    let verified = found
        .into_iter()
        .filter(|s| a.apply(s).subset_of(&b.apply(s)))
        .collect();
    MatchSet::collect(verified, &vars)
}

/// Mints a variable name not present in `avoid`.
pub fn fresh_var(base: &str, avoid: &BTreeSet<String>) -> String {
    let mut i = 0usize;
    loop {
        let name = format!("{base}{i}");
        if !avoid.contains(&name) {
            return name;
        }
        i += 1;
    }
}

/// Mints a constant name not present in `avoid`.
pub fn fresh_const(base: &str, avoid: &BTreeSet<String>) -> String {
    fresh_var(base, avoid)
}

/// Renames every variable of `clause` to a fresh name avoiding `avoid`,
/// returning the renamed clause and the renaming used.
pub fn rename_clause_apart(clause: &Clause, avoid: &BTreeSet<String>) -> (Clause, Substitution) {
    let mut avoid = avoid.clone();
    for v in clause.vars() {
        avoid.insert(v);
    }
    let mut bindings = Vec::new();
    for v in clause.vars() {
        let fresh = fresh_var("_r", &avoid);
        avoid.insert(fresh.clone());
        bindings.push((v, Term::Var(fresh)));
    }
    let renaming = Substitution::from_bindings(bindings);
    (clause.apply(&renaming), renaming)
}

/// Builds the rank table for a binary operation: `pristine`'s variables win
/// representative choice, so results stay expressed in its names.
pub fn ranks_for(pristine: &Clause, foreign: &Clause) -> VarRanksHandle {
    VarRanksHandle(VarRanks::new(pristine, foreign))
}

/// Opaque handle so the rank table can cross module boundaries without
/// exposing its internals.
#[derive(Debug, Clone)]
pub struct VarRanksHandle(VarRanks);

pub fn set_unify_ranked(a: &Clause, b: &Clause, ranks: &VarRanksHandle) -> MatchSet {
    set_unify(a, b, &ranks.0)
}

pub fn subset_unify_ranked(a: &Clause, b: &Clause, ranks: &VarRanksHandle) -> MatchSet {
    subset_unify(a, b, &ranks.0)
}

/// Converts a matching substitution into the exception format of a
/// quantified form: groups of the form's variables bound to one foreign
/// variable collapse into chains `v1=vn, …, v(n-1)=vn` (earlier occurrence
/// bound to the latest), and bindings on foreign variables are dropped.
pub fn trans(sigma: &Substitution, main: &Clause) -> Substitution {
    let own: Vec<String> = main.vars();
    let own_set: BTreeSet<String> = own.iter().cloned().collect();
    let occurrence = |v: &String| own.iter().position(|o| o == v).unwrap_or(usize::MAX);

    // Group the form's variables by the value they resolve to.
    let mut by_value: BTreeMap<Term, Vec<String>> = BTreeMap::new();
    for v in &own {
        if let Some(t) = sigma.get(v) {
            by_value.entry(t.clone()).or_default().push(v.clone());
        }
    }
    // A foreign variable used as a representative may itself carry own
    // variables in its class when an own variable was chosen as the
    // representative; fold those in.
    let mut bindings: Vec<(String, Term)> = Vec::new();
    for (value, mut group) in by_value {
        group.sort_by_key(|v| occurrence(v));
        match value {
            Term::Const(_) => {
                for v in group {
                    bindings.push((v, value.clone()));
                }
            }
            Term::Var(w) if own_set.contains(&w) => {
                // Bound to another variable of the form: keep, orienting
                // each binding and including the representative in the
                // chain.
                group.push(w.clone());
                group.sort_by_key(|v| occurrence(v));
                group.dedup();
                let last = group.last().cloned().unwrap();
                for v in &group[..group.len() - 1] {
                    bindings.push((v.clone(), Term::Var(last.clone())));
                }
            }
            Term::Var(_) => {
                // Foreign representative: identify the group members among
                // themselves and forget the foreign variable.
                if group.len() > 1 {
                    let last = group.last().cloned().unwrap();
                    for v in &group[..group.len() - 1] {
                        bindings.push((v.clone(), Term::Var(last.clone())));
                    }
                }
            }
        }
    }
    Substitution::from_bindings(bindings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(name: &str) -> Term {
        Term::constant(name)
    }

    fn v(name: &str) -> Term {
        Term::var(name)
    }

    fn vars(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn set_match_binds_variables_to_terms() {
        // a = ~P(x,y), b = ~P(v,A), restricted to {x,y}: one match {x=v, y=A}.
        let a = Clause::new(vec![Literal::neg("P", vec![v("x"), v("y")])]);
        let b = Clause::new(vec![Literal::neg("P", vec![v("v"), c("A")])]);
        let m = set_match(&a, &b, &vars(&["x", "y"]));
        assert_eq!(m.len(), 1);
        let s = m.iter().next().unwrap();
        assert_eq!(s.get("x"), Some(&v("v")));
        assert_eq!(s.get("y"), Some(&c("A")));
    }

    #[test]
    fn set_match_fails_on_constant_clash() {
        // a = ~P(B,y), b = ~P(A,x), restricted to {y}: no match.
        let a = Clause::new(vec![Literal::neg("P", vec![c("B"), v("y")])]);
        let b = Clause::new(vec![Literal::neg("P", vec![c("A"), v("x")])]);
        assert!(set_match(&a, &b, &vars(&["y"])).is_empty());
    }

    #[test]
    fn set_match_ground_identity() {
        let a = Clause::new(vec![Literal::neg("P", vec![c("A")])]);
        let m = set_match(&a, &a, &BTreeSet::new());
        assert_eq!(m.len(), 1);
        assert!(m.iter().next().unwrap().is_empty());
    }

    #[test]
    fn set_unify_two_literal_clauses() {
        // a = ~R(x,y,z,A)|~Q(t), b = ~R(w,C,v,A)|~Q(w): single unifier
        // {x=w, y=C, z=v, t=w}.
        let a = Clause::new(vec![
            Literal::neg("R", vec![v("x"), v("y"), v("z"), c("A")]),
            Literal::neg("Q", vec![v("t")]),
        ]);
        let b = Clause::new(vec![
            Literal::neg("R", vec![v("w"), c("C"), v("v"), c("A")]),
            Literal::neg("Q", vec![v("w")]),
        ]);
        let ranks = ranks_for(&a, &b);
        let m = set_unify_ranked(&a, &b, &ranks);
        assert_eq!(m.len(), 1);
        let s = m.iter().next().unwrap();
        assert_eq!(s.get("y"), Some(&c("C")));
        // x and t unify with w, hence with each other.
        assert_eq!(s.resolve(&v("x")), s.resolve(&v("t")));
        assert_eq!(s.resolve(&v("x")), s.resolve(&v("w")));
        assert_eq!(a.apply(s), b.apply(s));
    }

    #[test]
    fn set_unify_single_literals() {
        // ~P(x,A) with ~P(B,y): {x=B, y=A}.
        let a = Clause::new(vec![Literal::neg("P", vec![v("x"), c("A")])]);
        let b = Clause::new(vec![Literal::neg("P", vec![c("B"), v("y")])]);
        let ranks = ranks_for(&a, &b);
        let m = set_unify_ranked(&a, &b, &ranks);
        assert_eq!(m.len(), 1);
        let s = m.iter().next().unwrap();
        assert_eq!(s.get("x"), Some(&c("B")));
        assert_eq!(s.get("y"), Some(&c("A")));
    }

    #[test]
    fn set_unify_identical_ground() {
        let a = Clause::new(vec![
            Literal::neg("P", vec![c("A")]),
            Literal::neg("Q", vec![c("B")]),
        ]);
        let ranks = ranks_for(&a, &a);
        let m = set_unify_ranked(&a, &a, &ranks);
        assert_eq!(m.len(), 1);
        assert!(m.iter().next().unwrap().is_empty());
    }

    #[test]
    fn subset_match_enumerates_all_subsumptions() {
        // a = P(x,y), b = P(z,D)|Q(D,E)|P(A,B): two matches.
        let a = Clause::new(vec![Literal::pos("P", vec![v("x"), v("y")])]);
        let b = Clause::new(vec![
            Literal::pos("P", vec![v("z"), c("D")]),
            Literal::pos("Q", vec![c("D"), c("E")]),
            Literal::pos("P", vec![c("A"), c("B")]),
        ]);
        let m = subset_match(&a, &b, &vars(&["x", "y"]));
        assert_eq!(m.len(), 2);
        let keys: BTreeSet<String> = m.iter().map(|s| s.to_string()).collect();
        assert!(keys.contains("{?x=?z,?y=D}"));
        assert!(keys.contains("{?x=A,?y=B}"));
    }

    #[test]
    fn subset_match_restricted_fails() {
        // a = ~P(x,A) does not subsume b = ~P(B,y)|~P(C,z)|~Q(y) on vars(a).
        let a = Clause::new(vec![Literal::neg("P", vec![v("x"), c("A")])]);
        let b = Clause::new(vec![
            Literal::neg("P", vec![c("B"), v("y")]),
            Literal::neg("P", vec![c("C"), v("z")]),
            Literal::neg("Q", vec![v("y")]),
        ]);
        assert!(subset_match(&a, &b, &vars(&["x"])).is_empty());
    }

    #[test]
    fn subset_match_ground_subset() {
        let a = Clause::new(vec![Literal::neg("P", vec![c("A")])]);
        let b = Clause::new(vec![
            Literal::neg("P", vec![c("A")]),
            Literal::neg("Q", vec![c("B")]),
        ]);
        let m = subset_match(&a, &b, &BTreeSet::new());
        assert_eq!(m.len(), 1);
        assert!(m.iter().next().unwrap().is_empty());
    }

    #[test]
    fn subset_unify_negative_clauses() {
        // ~P(x,A) into ~P(B,y)|~P(C,z)|~Q(y): {x=B,y=A} and {x=C,z=A}.
        let a = Clause::new(vec![Literal::neg("P", vec![v("x"), c("A")])]);
        let b = Clause::new(vec![
            Literal::neg("P", vec![c("B"), v("y")]),
            Literal::neg("P", vec![c("C"), v("z")]),
            Literal::neg("Q", vec![v("y")]),
        ]);
        let ranks = ranks_for(&b, &a);
        let m = subset_unify_ranked(&a, &b, &ranks);
        assert_eq!(m.len(), 2);
        let keys: BTreeSet<String> = m.iter().map(|s| s.to_string()).collect();
        assert!(keys.contains("{?x=B,?y=A}"), "got {keys:?}");
        assert!(keys.contains("{?x=C,?z=A}"), "got {keys:?}");
    }

    #[test]
    fn subset_unify_positive_example() {
        // c = P(A,x) into b = P(z,D)|Q(D,E)|P(A,B): {z=A,x=D} and {x=B}.
        let a = Clause::new(vec![Literal::pos("P", vec![c("A"), v("x")])]);
        let b = Clause::new(vec![
            Literal::pos("P", vec![v("z"), c("D")]),
            Literal::pos("Q", vec![c("D"), c("E")]),
            Literal::pos("P", vec![c("A"), c("B")]),
        ]);
        let ranks = ranks_for(&b, &a);
        let m = subset_unify_ranked(&a, &b, &ranks);
        assert_eq!(m.len(), 2);
        let keys: BTreeSet<String> = m.iter().map(|s| s.to_string()).collect();
        assert!(keys.contains("{?x=D,?z=A}"), "got {keys:?}");
        assert!(keys.contains("{?x=B}"), "got {keys:?}");
    }

    #[test]
    fn subset_unify_disjoint_predicates() {
        let a = Clause::new(vec![Literal::neg("P", vec![v("x")])]);
        let b = Clause::new(vec![Literal::neg("Q", vec![v("y")])]);
        let ranks = ranks_for(&b, &a);
        assert!(subset_unify_ranked(&a, &b, &ranks).is_empty());
    }

    #[test]
    fn trans_collapses_and_projects() {
        // sigma = {x=w, y=C, z=v, t=w} over main ~R(x,y,z,A)|~Q(t):
        // x and t form a group on foreign w, so x binds to t; z's binding to
        // foreign v is dropped; y=C stays.
        let main = Clause::new(vec![
            Literal::neg("R", vec![v("x"), v("y"), v("z"), c("A")]),
            Literal::neg("Q", vec![v("t")]),
        ]);
        let sigma = Substitution::from_bindings([
            ("x".to_string(), v("w")),
            ("y".to_string(), c("C")),
            ("z".to_string(), v("v")),
            ("t".to_string(), v("w")),
        ]);
        let t = trans(&sigma, &main);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("y"), Some(&c("C")));
        // The group {x,t} collapses with the later-occurring variable (in
        // the stored clause order) as representative.
        let (bound, rep) = if t.get("x").is_some() {
            ("x", "t")
        } else {
            ("t", "x")
        };
        assert_eq!(t.get(bound), Some(&Term::var(rep)));
    }

    #[test]
    fn trans_keeps_ground_bindings() {
        let main = Clause::new(vec![Literal::neg("P", vec![v("x"), v("y")])]);
        let sigma = Substitution::from_bindings([
            ("x".to_string(), c("A")),
            ("y".to_string(), c("B")),
        ]);
        assert_eq!(trans(&sigma, &main), sigma);
    }

    #[test]
    fn trans_pair_bound_to_foreign() {
        let main = Clause::new(vec![Literal::neg("P", vec![v("x1"), v("x2")])]);
        let sigma = Substitution::from_bindings([
            ("x1".to_string(), v("u")),
            ("x2".to_string(), v("u")),
        ]);
        let t = trans(&sigma, &main);
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("x1"), Some(&v("x2")));
    }

    #[test]
    fn trans_drops_singleton_foreign_binding() {
        let main = Clause::new(vec![Literal::neg("P", vec![v("x")])]);
        let sigma = Substitution::bind("x", v("u"));
        assert!(trans(&sigma, &main).is_empty());
    }

    #[test]
    fn match_implies_unify() {
        let a = Clause::new(vec![
            Literal::neg("P", vec![v("x"), c("A")]),
            Literal::neg("Q", vec![v("y")]),
        ]);
        let b = Clause::new(vec![
            Literal::neg("P", vec![c("B"), c("A")]),
            Literal::neg("Q", vec![c("D")]),
        ]);
        let m = set_match(&a, &b, &a.var_set());
        assert!(!m.is_empty());
        let ranks = ranks_for(&a, &b);
        assert!(!set_unify_ranked(&a, &b, &ranks).is_empty());
    }

    #[test]
    fn subset_match_application_is_subset() {
        let a = Clause::new(vec![
            Literal::neg("P", vec![v("x"), v("y")]),
            Literal::neg("Q", vec![v("y")]),
        ]);
        let b = Clause::new(vec![
            Literal::neg("P", vec![c("A"), c("B")]),
            Literal::neg("Q", vec![c("B")]),
            Literal::neg("R", vec![c("C")]),
        ]);
        for s in subset_match(&a, &b, &a.var_set()).iter() {
            assert!(a.apply(s).subset_of(&b));
        }
    }

    #[test]
    fn substitution_idempotent_after_normalization() {
        let s = Substitution::from_bindings([
            ("x".to_string(), v("y")),
            ("y".to_string(), v("z")),
            ("z".to_string(), c("A")),
        ]);
        assert_eq!(s.get("x"), Some(&c("A")));
        assert_eq!(s.get("y"), Some(&c("A")));
        assert_eq!(s.get("z"), Some(&c("A")));
    }

    #[test]
    fn canonical_key_identifies_renamings() {
        let s1 = Substitution::from_bindings([("x".to_string(), v("u")), ("y".to_string(), c("A"))]);
        let s2 = Substitution::from_bindings([("x".to_string(), v("w")), ("y".to_string(), c("A"))]);
        assert_eq!(s1.canonical_key(), s2.canonical_key());
        let s3 = Substitution::from_bindings([("x".to_string(), c("A"))]);
        assert_ne!(s1.canonical_key(), s3.canonical_key());
    }
}
