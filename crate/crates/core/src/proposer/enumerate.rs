use crate::dsl::{Cond, Goal, Measure, Order, Pred, Program, Selector};
use crate::world::{Color, Region, RegionSet, ShapeClass};

/// Thresholds tried by `count>=`. A threshold of one would duplicate `exists`.
pub const COUNT_THRESHOLDS: [u32; 2] = [2, 3];

/// Legal places of exactly `k` regions, `Middle` first, then by region order.
pub fn places_of_size(k: usize) -> Vec<RegionSet> {
    let rank = |r: RegionSet| -> Vec<usize> {
        let order = [
            Region::Middle,
            Region::Left,
            Region::Right,
            Region::Top,
            Region::Bottom,
            Region::Corner,
        ];
        order
            .iter()
            .enumerate()
            .filter(|(_, x)| r.contains(**x))
            .map(|(i, _)| i)
            .collect()
    };
    let mut out: Vec<RegionSet> = (1..64u8)
        .map(RegionSet)
        .filter(|r| r.len() == k && r.legal_goal())
        .collect();
    out.sort_by_key(|r| rank(*r));
    out
}

/// And/Or nodes are kept only with a left child of a different kind whose text sorts before
/// the right child's; double negation is dropped. This removes most commuted and
/// re-associated duplicates.
pub fn canonical_pred(p: &Pred) -> bool {
    match p {
        Pred::And(a, b) => {
            !matches!(**a, Pred::And(..))
                && a.to_string() < b.to_string()
                && canonical_pred(a)
                && canonical_pred(b)
        }
        Pred::Or(a, b) => {
            !matches!(**a, Pred::Or(..))
                && a.to_string() < b.to_string()
                && canonical_pred(a)
                && canonical_pred(b)
        }
        Pred::Not(a) => !matches!(**a, Pred::Not(..)) && canonical_pred(a),
        _ => true,
    }
}

/// Tables of every canonical term by size, filled on demand. Within a size, terms appear in a
/// fixed grammar order.
#[derive(Debug, Default)]
pub struct Grammar {
    preds: Vec<Vec<(Pred, String)>>,
    sels: Vec<Vec<Selector>>,
    conds: Vec<Vec<Cond>>,
    goals: Vec<Vec<Goal>>,
    programs: Vec<Vec<Program>>,
}

impl Grammar {
    pub fn new() -> Grammar {
        Grammar::default()
    }

    fn ensure(&mut self, s: usize) {
        while self.programs.len() <= s {
            let n = self.programs.len();
            let p = self.build_preds(n);
            self.preds.push(p);
            let sl = self.build_sels(n);
            self.sels.push(sl);
            let c = self.build_conds(n);
            self.conds.push(c);
            let g = self.build_goals(n);
            self.goals.push(g);
            let pr = self.build_programs(n);
            self.programs.push(pr);
        }
    }

    pub fn preds(&mut self, s: usize) -> Vec<Pred> {
        self.ensure(s);
        self.preds[s].iter().map(|(p, _)| p.clone()).collect()
    }

    pub fn selectors(&mut self, s: usize) -> &[Selector] {
        self.ensure(s);
        &self.sels[s]
    }

    pub fn programs(&mut self, s: usize) -> &[Program] {
        self.ensure(s);
        &self.programs[s]
    }

    fn build_preds(&self, s: usize) -> Vec<(Pred, String)> {
        let mut out: Vec<Pred> = Vec::new();
        if s == 1 {
            out.extend(Color::ALL.iter().map(|c| Pred::Color(*c)));
            out.extend(ShapeClass::ALL.iter().map(|k| Pred::Shape(*k)));
            out.extend(Measure::ALL.iter().map(|m| Pred::Big(*m)));
            out.extend(Measure::ALL.iter().map(|m| Pred::Small(*m)));
        }
        if s >= 2 {
            for (p, _) in &self.preds[s - 1] {
                if !matches!(p, Pred::Not(_)) {
                    out.push(Pred::not(p.clone()));
                }
            }
        }
        for kind in 0..2 {
            for sa in 1..s.saturating_sub(1) {
                let sb = s - 1 - sa;
                for (a, ta) in &self.preds[sa] {
                    let same = match kind {
                        0 => matches!(a, Pred::And(..)),
                        _ => matches!(a, Pred::Or(..)),
                    };
                    if same {
                        continue;
                    }
                    for (b, tb) in &self.preds[sb] {
                        if ta < tb {
                            out.push(match kind {
                                0 => Pred::and(a.clone(), b.clone()),
                                _ => Pred::or(a.clone(), b.clone()),
                            });
                        }
                    }
                }
            }
        }
        out.into_iter()
            .map(|p| {
                let t = p.to_string();
                (p, t)
            })
            .collect()
    }

    fn build_sels(&self, s: usize) -> Vec<Selector> {
        let mut out = Vec::new();
        if s == 1 {
            out.push(Selector::All);
        }
        if s >= 2 {
            out.extend(
                self.preds[s - 1]
                    .iter()
                    .map(|(p, _)| Selector::Filter(p.clone())),
            );
        }
        if s >= 3 {
            for m in Measure::ALL {
                for inner in &self.sels[s - 2] {
                    out.push(Selector::Largest(m, Box::new(inner.clone())));
                }
            }
            for m in Measure::ALL {
                for inner in &self.sels[s - 2] {
                    out.push(Selector::Smallest(m, Box::new(inner.clone())));
                }
            }
        }
        if s >= 2 {
            for inner in &self.sels[s - 1] {
                out.push(Selector::MostNumerousShape(Box::new(inner.clone())));
            }
            for inner in &self.sels[s - 1] {
                out.push(Selector::OddColor(Box::new(inner.clone())));
            }
        }
        for sa in 1..s.saturating_sub(1) {
            let sb = s - 1 - sa;
            for a in &self.sels[sa] {
                for b in &self.sels[sb] {
                    if a != b {
                        out.push(Selector::Except(Box::new(a.clone()), Box::new(b.clone())));
                    }
                }
            }
        }
        out
    }

    fn build_conds(&self, s: usize) -> Vec<Cond> {
        let mut out = Vec::new();
        if s >= 2 {
            out.extend(self.sels[s - 1].iter().map(|x| Cond::Exists(x.clone())));
        }
        if s >= 3 {
            for n in COUNT_THRESHOLDS {
                out.extend(
                    self.sels[s - 2]
                        .iter()
                        .map(|x| Cond::CountAtLeast(x.clone(), n)),
                );
            }
        }
        out
    }

    fn build_goals(&self, s: usize) -> Vec<Goal> {
        let mut out = Vec::new();
        for k in 1..s {
            let places = places_of_size(k);
            if places.is_empty() {
                continue;
            }
            for sel in &self.sels[s - k] {
                for p in &places {
                    out.push(Goal::new(sel.clone(), *p));
                }
            }
        }
        out
    }

    /// Goal lists in strictly increasing (size, index) order with sizes summing to `total`.
    fn goal_sets(
        &self,
        total: usize,
        min: (usize, usize),
        acc: &mut Vec<Goal>,
        out: &mut Vec<Program>,
    ) {
        if total == 0 {
            if !acc.is_empty() {
                out.push(Program::Achieve(acc.clone()));
            }
            return;
        }
        for gs in min.0..=total {
            let start = if gs == min.0 { min.1 } else { 0 };
            for gi in start..self.goals[gs].len() {
                acc.push(self.goals[gs][gi].clone());
                self.goal_sets(total - gs, (gs, gi + 1), acc, out);
                acc.pop();
            }
        }
    }

    fn place_lists(total: usize, acc: &mut Vec<RegionSet>, out: &mut Vec<Vec<RegionSet>>) {
        if total == 0 {
            if acc.len() >= 2 {
                out.push(acc.clone());
            }
            return;
        }
        for k in 1..=total {
            for p in places_of_size(k) {
                acc.push(p);
                Self::place_lists(total - k, acc, out);
                acc.pop();
            }
        }
    }

    fn seqs(&self, total: usize, acc: &mut Vec<Program>, out: &mut Vec<Program>) {
        if total == 0 {
            if acc.len() >= 2 {
                out.push(Program::Seq(acc.clone()));
            }
            return;
        }
        for s in 1..=total {
            for p in &self.programs[s] {
                if matches!(p, Program::Seq(_)) {
                    continue;
                }
                acc.push(p.clone());
                self.seqs(total - s, acc, out);
                acc.pop();
            }
        }
    }

    fn build_programs(&self, s: usize) -> Vec<Program> {
        let mut out = Vec::new();
        if s < 2 {
            return out;
        }
        self.goal_sets(s - 1, (1, 0), &mut Vec::new(), &mut out);
        for ss in 1..s.saturating_sub(2) {
            let mut lists = Vec::new();
            Self::place_lists(s - 2 - ss, &mut Vec::new(), &mut lists);
            for m in Measure::ALL {
                for o in [Order::Asc, Order::Desc] {
                    for sel in &self.sels[ss] {
                        for l in &lists {
                            out.push(Program::SortBy(m, o, sel.clone(), l.clone()));
                        }
                    }
                }
            }
        }
        for sc in 2..s {
            for sa in 1..s.saturating_sub(sc) {
                if 1 + sc + sa >= s {
                    continue;
                }
                let sb = s - 1 - sc - sa;
                for c in &self.conds[sc] {
                    for a in &self.programs[sa] {
                        for b in &self.programs[sb] {
                            if a != b {
                                out.push(Program::If(
                                    c.clone(),
                                    Box::new(a.clone()),
                                    Box::new(b.clone()),
                                ));
                            }
                        }
                    }
                }
            }
        }
        let mut seqs = Vec::new();
        self.seqs(s - 1, &mut Vec::new(), &mut seqs);
        out.extend(seqs);
        out
    }
}
