//! Independent reference semantics: an explicit Kripke structure whose worlds
//! are the points of a system, with accessibility computed by comparing local
//! states pairwise, and a direct recursive evaluator over it. Nothing here
//! uses the library's partitions or extensions.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use kop_core::{AgentId, Formula, HistoryEvent, Point, System};

pub struct Kripke<'a> {
    sys: &'a System,
    worlds: Vec<Point>,
    /// `access[i][w]` lists the worlds agent `i` cannot tell apart from `w`.
    access: Vec<Vec<Vec<usize>>>,
}

impl<'a> Kripke<'a> {
    pub fn new(sys: &'a System) -> Self {
        let mut worlds = Vec::new();
        for r in 0..sys.runs().len() {
            for t in 0..=sys.horizon() {
                worlds.push(Point::new(r, t));
            }
        }
        let local = |w: Point, i: usize| &sys.runs()[w.run].states[w.time].locals[i];
        let access = (0..sys.agent_count())
            .map(|i| {
                worlds
                    .iter()
                    .map(|&w| {
                        (0..worlds.len())
                            .filter(|&v| local(worlds[v], i) == local(w, i))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Kripke {
            sys,
            worlds,
            access,
        }
    }

    pub fn worlds(&self) -> &[Point] {
        &self.worlds
    }

    fn world(&self, p: Point) -> usize {
        self.worlds.iter().position(|&w| w == p).expect("point of the system")
    }

    pub fn holds(&self, p: Point, f: &Formula) -> bool {
        self.sat(self.world(p), f)
    }

    fn does(&self, w: usize, agent: AgentId, action: &kop_core::Action) -> bool {
        let p = self.worlds[w];
        let run = &self.sys.runs()[p.run];
        // attested by every later history within the horizon
        let later: Vec<_> = (p.time + 1..=self.sys.horizon()).collect();
        !later.is_empty()
            && later.iter().all(|&t| {
                run.states[t]
                    .env
                    .history
                    .contains(&HistoryEvent::new(action.clone(), agent, p.time))
            })
    }

    fn sat(&self, w: usize, f: &Formula) -> bool {
        let p = self.worlds[w];
        match f {
            Formula::Const(b) => *b,
            Formula::Prop(name) => self
                .sys
                .interpretation()
                .holds(self.sys, name, p)
                .expect("declared proposition"),
            Formula::Does(a, act) => self.does(w, *a, act),
            Formula::Did(a, act) => (0..=p.time).any(|t| {
                let v = self.world(Point::new(p.run, t));
                self.does(v, *a, act)
            }),
            Formula::Not(g) => !self.sat(w, g),
            Formula::And(g, h) => self.sat(w, g) && self.sat(w, h),
            Formula::Know(a, g) => self.access[a.index()][w].iter().all(|&v| self.sat(v, g)),
            Formula::Common(group, g) => self.reachable(w, group).into_iter().all(|v| self.sat(v, g)),
        }
    }

    /// Worlds reachable from `w` in one or more steps of the group's relations.
    fn reachable(&self, w: usize, group: &BTreeSet<AgentId>) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([w]);
        while let Some(x) = queue.pop_front() {
            for a in group {
                for &y in &self.access[a.index()][x] {
                    if seen.insert(y) {
                        queue.push_back(y);
                    }
                }
            }
        }
        seen
    }
}
