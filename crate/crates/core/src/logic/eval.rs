use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::kernel::{AgentId, Point, System};

use super::Formula;

/// A set of points of one system, indexed in (run, time) order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    bits: Vec<bool>,
}

impl PointSet {
    pub fn empty(len: usize) -> Self {
        PointSet {
            bits: vec![false; len],
        }
    }

    pub fn full(len: usize) -> Self {
        PointSet {
            bits: vec![true; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        PointSet { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn insert(&mut self, index: usize) {
        self.bits[index] = true;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_all(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    /// Indices of members, ascending.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
    }

    pub fn complement(&self) -> Self {
        PointSet {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn intersect(&self, other: &PointSet) -> Self {
        PointSet {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }

    /// First member that is not in `other`, in (run, time) order.
    pub fn first_outside(&self, other: &PointSet) -> Option<usize> {
        self.bits
            .iter()
            .zip(&other.bits)
            .position(|(a, b)| *a && !*b)
    }
}

/// The set of points of `sys` where `f` holds.
pub fn extension(sys: &System, f: &Formula) -> Result<PointSet> {
    f.validate(sys)?;
    Ok(ext(sys, f))
}

/// `(R, p) |= f`.
pub fn eval(sys: &System, p: Point, f: &Formula) -> Result<bool> {
    sys.check_point(p)?;
    Ok(extension(sys, f)?.contains(sys.point_index(p)))
}

/// `(R, p) |= C_G f`: `f` holds on the whole connected component of `p` in the
/// union of the `~_i` relations, `i` in `G`.
pub fn eval_common(sys: &System, p: Point, group: &BTreeSet<AgentId>, f: &Formula) -> Result<bool> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    eval(sys, p, &Formula::Common(group.clone(), Box::new(f.clone())))
}

/// `E_G^m f` at `p`: every `K_{i1} ... K_{im} f` with all `i_k` in `G`.
pub fn nested_everyone(
    sys: &System,
    p: Point,
    group: &BTreeSet<AgentId>,
    f: &Formula,
    depth: usize,
) -> Result<bool> {
    sys.check_point(p)?;
    Ok(nested_everyone_extension(sys, group, f, depth)?.contains(sys.point_index(p)))
}

/// The points where `E_G^m f` holds.
pub fn nested_everyone_extension(
    sys: &System,
    group: &BTreeSet<AgentId>,
    f: &Formula,
    depth: usize,
) -> Result<PointSet> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    if depth == 0 {
        return Err(Error::InvalidConfig("nesting depth must be at least 1".into()));
    }
    for a in group {
        sys.check_agent(*a)?;
    }
    let mut set = extension(sys, f)?;
    for _ in 0..depth {
        let mut next = PointSet::full(set.len());
        for &a in group {
            next = next.intersect(&know_ext(sys, a, &set));
        }
        if next == set {
            // a fixed point: further rounds change nothing
            break;
        }
        set = next;
    }
    Ok(set)
}

/// `R |= f`.
pub fn valid(sys: &System, f: &Formula) -> Result<bool> {
    Ok(extension(sys, f)?.is_all())
}

/// `R |= f -> g`.
pub fn validly_implies(sys: &System, f: &Formula, g: &Formula) -> Result<bool> {
    Ok(extension(sys, f)?.is_subset(&extension(sys, g)?))
}

/// `p ~_i q`.
pub fn indistinguishable(sys: &System, p: Point, q: Point, agent: AgentId) -> Result<bool> {
    Ok(sys.local_state(p, agent)? == sys.local_state(q, agent)?)
}

/// Extension of an already validated formula.
pub(crate) fn ext(sys: &System, f: &Formula) -> PointSet {
    let n = sys.point_count();
    match f {
        Formula::Const(b) => PointSet::from_bits(vec![*b; n]),
        Formula::Prop(name) => PointSet::from_bits(
            sys.interpretation()
                .row(name)
                .expect("validated proposition")
                .to_vec(),
        ),
        Formula::Does(a, act) => {
            PointSet::from_bits(sys.points().map(|p| sys.does_unchecked(p, *a, act)).collect())
        }
        Formula::Did(a, act) => {
            let mut bits = Vec::with_capacity(n);
            for run in 0..sys.runs().len() {
                let mut seen = false;
                for t in 0..=sys.horizon() {
                    seen = seen || sys.does_unchecked(Point::new(run, t), *a, act);
                    bits.push(seen);
                }
            }
            PointSet::from_bits(bits)
        }
        Formula::Not(g) => ext(sys, g).complement(),
        Formula::And(g, h) => ext(sys, g).intersect(&ext(sys, h)),
        Formula::Know(a, g) => know_ext(sys, *a, &ext(sys, g)),
        Formula::Common(group, g) => common_ext(sys, group, &ext(sys, g)),
    }
}

pub(crate) fn know_ext(sys: &System, agent: AgentId, inner: &PointSet) -> PointSet {
    let mut class_ok = vec![true; sys.class_count(agent)];
    for k in 0..inner.len() {
        if !inner.contains(k) {
            class_ok[sys.class_of(agent, k)] = false;
        }
    }
    PointSet::from_bits(
        (0..inner.len())
            .map(|k| class_ok[sys.class_of(agent, k)])
            .collect(),
    )
}

fn common_ext(sys: &System, group: &BTreeSet<AgentId>, inner: &PointSet) -> PointSet {
    let n = inner.len();
    let mut uf = UnionFind::new(n);
    for &a in group {
        let mut first = vec![usize::MAX; sys.class_count(a)];
        for k in 0..n {
            let c = sys.class_of(a, k);
            if first[c] == usize::MAX {
                first[c] = k;
            } else {
                uf.union(first[c], k);
            }
        }
    }
    let mut comp_ok = vec![true; n];
    for k in 0..n {
        if !inner.contains(k) {
            let root = uf.find(k);
            comp_ok[root] = false;
        }
    }
    PointSet::from_bits((0..n).map(|k| comp_ok[uf.find(k)]).collect())
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{EnvState, GlobalState, History, LocalState, Run, Value};
    use crate::logic::Interpretation;

    /// One agent, three static runs: its state is `s` in runs 0 and 1 and
    /// `u` in run 2. `p` holds only in run 0.
    fn tiny() -> System {
        let run = |name: &str, s: &str| {
            Run::new(
                name,
                vec![GlobalState {
                    env: EnvState {
                        history: History::new(),
                        payload: Value::Int(0),
                    },
                    locals: vec![LocalState(Value::str(s)), LocalState(Value::str(name))],
                }],
            )
        };
        let runs = vec![run("r0", "s"), run("r1", "s"), run("r2", "u")];
        let interp = Interpretation::tabulate(&["p"], &runs, 0, |_, r, _| r.name == "r0");
        System::new(vec!["i".into(), "j".into()], 0, runs, interp).unwrap()
    }

    #[test]
    fn knowledge_is_a_universal_over_the_class() {
        let sys = tiny();
        let i = AgentId::new(1);
        let kp = Formula::know(i, Formula::prop("p"));
        let knp = Formula::know(i, Formula::not(Formula::prop("p")));
        assert!(!eval(&sys, Point::new(0, 0), &kp).unwrap());
        assert!(eval(&sys, Point::new(2, 0), &knp).unwrap());
        // j sees its run name, so it knows everything about its run
        let j = AgentId::new(2);
        assert!(eval(&sys, Point::new(0, 0), &Formula::know(j, Formula::prop("p"))).unwrap());
    }

    #[test]
    fn common_knowledge_spans_the_union_component() {
        let sys = tiny();
        let both: BTreeSet<_> = [AgentId::new(1), AgentId::new(2)].into();
        let not_p = Formula::not(Formula::prop("p"));
        // component of r2 under i∪j is {r2}
        assert!(eval_common(&sys, Point::new(2, 0), &both, &not_p).unwrap());
        // component of r1 is {r0, r1}, and p holds at r0
        assert!(!eval_common(&sys, Point::new(1, 0), &both, &not_p).unwrap());
        assert!(nested_everyone(&sys, Point::new(2, 0), &both, &not_p, 3).unwrap());
        assert!(!nested_everyone(&sys, Point::new(1, 0), &both, &not_p, 1).unwrap());
    }

    #[test]
    fn empty_group_and_undeclared_props_are_errors() {
        let sys = tiny();
        let p = Point::new(0, 0);
        assert_eq!(
            eval_common(&sys, p, &BTreeSet::new(), &Formula::Const(true)),
            Err(Error::EmptyGroup)
        );
        assert_eq!(
            eval(&sys, p, &Formula::prop("nope")),
            Err(Error::UndeclaredProp("nope".into()))
        );
        assert!(eval(&sys, p, &Formula::know(AgentId::new(3), Formula::Const(true))).is_err());
    }

    #[test]
    fn validity_and_valid_implication() {
        let sys = tiny();
        let p = Formula::prop("p");
        assert!(!valid(&sys, &p).unwrap());
        assert!(valid(&sys, &Formula::or(p.clone(), Formula::not(p.clone()))).unwrap());
        assert!(validly_implies(&sys, &Formula::know(AgentId::new(1), p.clone()), &p).unwrap());
        assert!(validly_implies(&sys, &p, &p).unwrap());
    }

    #[test]
    fn indistinguishability_is_reflexive_and_state_based() {
        let sys = tiny();
        let i = AgentId::new(1);
        assert!(indistinguishable(&sys, Point::new(0, 0), Point::new(0, 0), i).unwrap());
        assert!(indistinguishable(&sys, Point::new(0, 0), Point::new(1, 0), i).unwrap());
        assert!(!indistinguishable(&sys, Point::new(0, 0), Point::new(2, 0), i).unwrap());
    }
}
