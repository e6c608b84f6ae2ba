//! Clause normalization: head arguments become fresh variables with explicit
//! bindings, nested non-variable call arguments are flattened into preceding
//! bindings, and `=`/2 goals become [`Binding`]s.  The result is a sequence of
//! `Bind`/`Call` items — exactly the shape the abstract unification operators
//! consume.

use super::parse::{ParsedClause, ParsedProgram};
use super::{Binding, Term, Var, VarTable};
use std::collections::HashMap;

/// One step of a normalized clause body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BodyItem {
    Bind(Binding),
    /// A predicate call with variable arguments only.  Builtins are resolved
    /// by the analysis engine, not here.
    Call { name: String, arity: usize, args: Vec<Var> },
}

/// A clause with fresh head variables and a flat body.
#[derive(Debug, Clone)]
pub struct NormalClause {
    pub head_vars: Vec<Var>,
    pub body: Vec<BodyItem>,
    pub table: VarTable,
}

impl NormalClause {
    /// The clause's variables of interest.
    pub fn vi(&self) -> super::VarSet {
        self.table.all_vars()
    }
}

/// A predicate with all its clauses.
#[derive(Debug, Clone)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
    pub clauses: Vec<NormalClause>,
}

impl Predicate {
    pub fn key(&self) -> (String, usize) {
        (self.name.clone(), self.arity)
    }
}

/// A normalized program: predicates in first-appearance order, plus entry
/// goals (each rendered as a pseudo-clause whose head variables are the formal
/// parameters of the called predicate).
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub preds: Vec<Predicate>,
    index: HashMap<(String, usize), usize>,
    /// `(target predicate key, initial-call pseudo-clause)` per entry goal.
    pub entries: Vec<((String, usize), NormalClause)>,
}

impl Program {
    pub fn lookup(&self, name: &str, arity: usize) -> Option<usize> {
        self.index.get(&(name.to_owned(), arity)).copied()
    }
}

/// Goals treated specially by normalization and the engine.
fn is_unification(name: &str, arity: usize) -> bool {
    name == "=" && arity == 2
}

struct Normalizer {
    table: VarTable,
    items: Vec<BodyItem>,
    temp_count: usize,
}

impl Normalizer {
    fn fresh(&mut self) -> Var {
        self.temp_count += 1;
        let n = self.temp_count;
        self.table.fresh(&format!("T{n}"))
    }

    /// Emits `Bind(x = t)` unless it would be the no-op `x = x`.
    fn bind(&mut self, lhs: Var, rhs: Term) {
        if rhs == Term::Var(lhs) {
            return;
        }
        self.items.push(BodyItem::Bind(Binding::new(lhs, rhs)));
    }

    /// Flattens a call argument to a variable, emitting a binding if needed.
    fn flatten_arg(&mut self, t: &Term) -> Var {
        if let Term::Var(v) = t {
            return *v;
        }
        let tmp = self.fresh();
        self.bind(tmp, t.clone());
        tmp
    }

    fn goal(&mut self, g: &Term) {
        match g {
            Term::Comp(f, args) if is_unification(f, args.len()) => {
                match (&args[0], &args[1]) {
                    (Term::Var(x), rhs) => self.bind(*x, rhs.clone()),
                    (lhs, Term::Var(y)) => self.bind(*y, lhs.clone()),
                    (lhs, rhs) => {
                        // Two non-variable sides: route both through a fresh
                        // variable (a safe decomposition of the equation).
                        let tmp = self.fresh();
                        self.bind(tmp, lhs.clone());
                        self.bind(tmp, rhs.clone());
                    }
                }
            }
            Term::Atom(f) if f == "true" || f == "!" => {}
            Term::Atom(f) => {
                self.items.push(BodyItem::Call { name: f.clone(), arity: 0, args: Vec::new() });
            }
            Term::Comp(f, args) => {
                let vars: Vec<Var> = args.iter().map(|a| self.flatten_arg(a)).collect();
                self.items.push(BodyItem::Call { name: f.clone(), arity: args.len(), args: vars });
            }
            Term::Var(_) | Term::Int(_) => {
                // A meta-call `call(G)` shape; treated as an unknown goal.
                self.items.push(BodyItem::Call { name: "call".into(), arity: 0, args: Vec::new() });
            }
        }
    }
}

/// Normalizes one parsed clause, returning the predicate key and clause.
pub fn normalize_clause(clause: &ParsedClause) -> ((String, usize), NormalClause) {
    let (name, args) = match &clause.head {
        Term::Comp(f, args) => (f.clone(), args.clone()),
        Term::Atom(f) => (f.clone(), Vec::new()),
        _ => unreachable!("parser rejects non-callable heads"),
    };
    let mut norm = Normalizer { table: clause.table.clone(), items: Vec::new(), temp_count: 0 };
    let head_vars: Vec<Var> = (1..=args.len())
        .map(|i| norm.table.fresh(&format!("X{i}")))
        .collect();
    for (x, t) in head_vars.iter().zip(&args) {
        norm.bind(*x, t.clone());
    }
    for g in &clause.body {
        norm.goal(g);
    }
    let key = (name, args.len());
    (key, NormalClause { head_vars, body: norm.items, table: norm.table })
}

/// Normalizes a parsed program, grouping clauses by predicate.
pub fn normalize_program(parsed: &ParsedProgram) -> Program {
    let mut program = Program::default();
    for clause in &parsed.clauses {
        let (key, nc) = normalize_clause(clause);
        let idx = *program.index.entry(key.clone()).or_insert_with(|| {
            program.preds.push(Predicate { name: key.0.clone(), arity: key.1, clauses: Vec::new() });
            program.preds.len() - 1
        });
        program.preds[idx].clauses.push(nc);
    }
    for entry in &parsed.entries {
        let pseudo = ParsedClause {
            head: entry.goal.clone(),
            body: Vec::new(),
            table: entry.table.clone(),
        };
        let (key, nc) = normalize_clause(&pseudo);
        program.entries.push((key, nc));
    }
    program
}

#[cfg(test)]
mod tests {
    use super::super::parse_program;
    use super::*;

    fn normalize_first(src: &str) -> NormalClause {
        let p = parse_program(src).unwrap();
        normalize_clause(&p.clauses[0]).1
    }

    #[test]
    fn head_compound_becomes_binding() {
        // p(f(Y)) :- true.  →  head p(X1), body [Bind(X1 = f(Y))]
        let nc = normalize_first("p(f(Y)) :- true.");
        assert_eq!(nc.head_vars.len(), 1);
        assert_eq!(nc.body.len(), 1);
        match &nc.body[0] {
            BodyItem::Bind(b) => {
                assert_eq!(b.lhs, nc.head_vars[0]);
                assert_eq!(b.rhs, Term::Comp("f".into(), vec![Term::Var(Var(0))]));
            }
            other => panic!("expected Bind, got {other:?}"),
        }
    }

    #[test]
    fn nested_call_argument_flattened() {
        // p(X) :- q(f(X)).  →  [Bind(X1 = X), Bind(T1 = f(X)), Call(q, [T1])]
        let nc = normalize_first("p(X) :- q(f(X)).");
        assert_eq!(nc.body.len(), 3);
        let x1 = nc.head_vars[0];
        match &nc.body[0] {
            BodyItem::Bind(b) => {
                assert_eq!(b.lhs, x1);
                assert!(b.rhs.is_var());
            }
            other => panic!("expected Bind, got {other:?}"),
        }
        let tmp = match &nc.body[1] {
            BodyItem::Bind(b) => {
                assert_eq!(b.rhs, Term::Comp("f".into(), vec![Term::Var(Var(0))]));
                b.lhs
            }
            other => panic!("expected Bind, got {other:?}"),
        };
        match &nc.body[2] {
            BodyItem::Call { name, arity, args } => {
                assert_eq!(name, "q");
                assert_eq!(*arity, 1);
                assert_eq!(args, &vec![tmp]);
            }
            other => panic!("expected Call, got {other:?}"),
        }
    }

    #[test]
    fn append_recursive_clause() {
        // app([A|X],Y,[A|Z]) :- app(X,Y,Z).
        // → [Bind(X1=[A|X]), Bind(X2=Y), Bind(X3=[A|Z]), Call(app,[X,Y,Z])]
        let p = parse_program("app([],Y,Y). app([A|X],Y,[A|Z]) :- app(X,Y,Z).").unwrap();
        let (key, nc) = normalize_clause(&p.clauses[1]);
        assert_eq!(key, ("app".into(), 3));
        assert_eq!(nc.head_vars.len(), 3);
        let binds: Vec<_> = nc
            .body
            .iter()
            .filter(|i| matches!(i, BodyItem::Bind(_)))
            .collect();
        assert_eq!(binds.len(), 3);
        match nc.body.last().unwrap() {
            BodyItem::Call { name, arity, args } => {
                assert_eq!(name, "app");
                assert_eq!(*arity, 3);
                assert_eq!(args.len(), 3);
                assert!(args.iter().all(|v| !nc.head_vars.contains(v)));
            }
            other => panic!("expected Call, got {other:?}"),
        }
    }

    #[test]
    fn equality_goal_both_sides_compound() {
        let nc = normalize_first("p :- f(X) = g(Y).");
        // Fresh T with T = f(X) and T = g(Y).
        assert_eq!(nc.body.len(), 2);
        match (&nc.body[0], &nc.body[1]) {
            (BodyItem::Bind(b1), BodyItem::Bind(b2)) => assert_eq!(b1.lhs, b2.lhs),
            other => panic!("expected two Binds, got {other:?}"),
        }
    }

    #[test]
    fn program_grouping_and_entries() {
        let p = parse_program(
            ":- entry(p(X)). p(X) :- q(X). p(a). q(X) :- X = b.",
        )
        .unwrap();
        let prog = normalize_program(&p);
        assert_eq!(prog.preds.len(), 2);
        assert_eq!(prog.preds[0].name, "p");
        assert_eq!(prog.preds[0].clauses.len(), 2);
        assert_eq!(prog.lookup("q", 1), Some(1));
        assert_eq!(prog.entries.len(), 1);
        assert_eq!(prog.entries[0].0, ("p".into(), 1));
    }
}
