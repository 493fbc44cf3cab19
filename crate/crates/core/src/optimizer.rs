//! Greedy error-driven selection of per-cell rule indices, plus the
//! equal-order and per-level baselines it is compared against.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::error_estimator::{indicators, ErrorModel, ErrorReport};
use crate::octree::{Partition, SubCell};
use crate::quadrature::{assemble_scheme, cell_rule, rule_size, BoxRuleKind, RuleFamily, RuleIndexList, CSV_HEADER};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marking {
    #[default]
    SubCell,
    Level,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop once the scheme has at least this many points.
    Budget(usize),
    /// Stop once the error is at or below this value.
    TargetError(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    BudgetReached,
    TargetReached,
    /// Every cell is at the top of its rule sequence.
    Depleted,
    /// The error vanished to round-off.
    Exact,
    IterationLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Marked {
    Initial,
    Cell(usize),
    Level(u32),
}

impl Marked {
    fn label(self) -> String {
        match self {
            Marked::Initial => String::new(),
            Marked::Cell(id) => format!("cell:{id}"),
            Marked::Level(l) => format!("level:{l}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub total_points: usize,
    pub e_total: f64,
    /// What was incremented to produce this step.
    pub marked: Marked,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationTrace {
    pub steps: Vec<TraceStep>,
    pub final_idx: RuleIndexList,
    pub termination: Termination,
    pub final_report: ErrorReport,
}

impl OptimizationTrace {
    pub fn iterations(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn last(&self) -> &TraceStep {
        self.steps.last().expect("trace always holds the initial step")
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\niteration,points,error,marked\n");
        for st in &self.steps {
            let _ = writeln!(s, "{},{},{:e},{}", st.iteration, st.total_points, st.e_total, st.marked.label());
        }
        s
    }

    /// Error of the last step with at most `points` points, if any.
    pub fn error_at(&self, points: usize) -> Option<f64> {
        self.steps.iter().take_while(|s| s.total_points <= points).last().map(|s| s.e_total)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizeOptions {
    pub marking: Marking,
    pub stop: StopRule,
    pub box_kind: BoxRuleKind,
    pub max_iterations: usize,
}

impl OptimizeOptions {
    pub fn new(marking: Marking, stop: StopRule) -> Self {
        OptimizeOptions { marking, stop, box_kind: BoxRuleKind::Gauss, max_iterations: 100_000 }
    }
}

/// Incrementally maintained scheme state of one element.
struct State<'a> {
    cells: Vec<SubCell>,
    model: &'a ErrorModel,
    idx: RuleIndexList,
    sizes: Vec<usize>,
    cell_xi_bar: Vec<Vec<f64>>,
    box_kind: BoxRuleKind,
}

impl<'a> State<'a> {
    fn new(p: &Partition, model: &'a ErrorModel, box_kind: BoxRuleKind) -> Result<Self> {
        let cells = p.cells();
        if cells.is_empty() {
            return Err(Error::InvalidArgument("partition has no integrable sub-cells".into()));
        }
        if cells.len() != model.n_cells() {
            return Err(Error::InvalidArgument("error model was built for a different partition".into()));
        }
        let idx = RuleIndexList::uniform(cells.len(), 0);
        let mut st = State { sizes: vec![0; cells.len()], cell_xi_bar: vec![Vec::new(); cells.len()], cells, model, idx, box_kind };
        let all: Vec<usize> = (0..st.cells.len()).collect();
        st.refresh(&all)?;
        Ok(st)
    }

    fn refresh(&mut self, ids: &[usize]) -> Result<()> {
        let updates = ids
            .par_iter()
            .map(|&id| {
                let r = cell_rule(&self.cells[id], self.idx.indices[id], self.box_kind)?;
                Ok((id, r.len(), self.model.approx_xi(&r.points, &r.weights)))
            })
            .collect::<Result<Vec<_>>>()?;
        for (id, n, xi) in updates {
            self.sizes[id] = n;
            self.cell_xi_bar[id] = xi;
        }
        Ok(())
    }

    fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    fn report(&self) -> ErrorReport {
        self.model.report(&self.cell_xi_bar)
    }
}

/// Picks the cell or level to increment; `None` when everything is depleted.
fn mark(st: &State, report: &ErrorReport, marking: Marking) -> Option<(Marked, Vec<usize>)> {
    let ind = indicators(&report.per_cell_error, &st.idx, &st.cells);
    let level = |id: usize| st.cells[id].level();
    match marking {
        Marking::SubCell => {
            let mut best: Option<usize> = None;
            for id in 0..st.cells.len() {
                if ind.depleted[id] {
                    continue;
                }
                best = match best {
                    None => Some(id),
                    Some(b) => {
                        let (vi, vb) = (ind.values[id], ind.values[b]);
                        if vi > vb || (vi == vb && level(id) < level(b)) {
                            Some(id)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            best.map(|id| (Marked::Cell(id), vec![id]))
        }
        Marking::Level => {
            let max_level = st.cells.iter().map(SubCell::level).max()?;
            let mut sums = vec![0.0; max_level as usize + 1];
            let mut live = vec![false; max_level as usize + 1];
            for id in 0..st.cells.len() {
                if !ind.depleted[id] {
                    sums[level(id) as usize] += ind.values[id];
                    live[level(id) as usize] = true;
                }
            }
            let best = (0..sums.len()).filter(|&l| live[l]).fold(None, |acc: Option<usize>, l| match acc {
                Some(b) if sums[b] >= sums[l] => Some(b),
                _ => Some(l),
            })?;
            let ids = (0..st.cells.len()).filter(|&id| level(id) as usize == best && !ind.depleted[id]).collect();
            Some((Marked::Level(best as u32), ids))
        }
    }
}

/// Runs the greedy optimization from all-zero indices.
pub fn optimize(p: &Partition, model: &ErrorModel, opts: OptimizeOptions) -> Result<OptimizationTrace> {
    let mut st = State::new(p, model, opts.box_kind)?;
    let mut report = st.report();
    let mut steps = vec![TraceStep { iteration: 0, total_points: st.total(), e_total: report.e_total, marked: Marked::Initial }];
    let done = |total: usize, e: f64| match opts.stop {
        StopRule::Budget(b) => (total >= b).then_some(Termination::BudgetReached),
        StopRule::TargetError(t) => (e <= t).then_some(Termination::TargetReached),
    };
    let termination = loop {
        let last = steps.last().unwrap();
        if let Some(t) = done(last.total_points, last.e_total) {
            break t;
        }
        if report.worst_coeffs.is_none() {
            break Termination::Exact;
        }
        if last.iteration >= opts.max_iterations {
            break Termination::IterationLimit;
        }
        let Some((marked, ids)) = mark(&st, &report, opts.marking) else {
            break Termination::Depleted;
        };
        for &id in &ids {
            st.idx.indices[id] += 1;
        }
        st.refresh(&ids)?;
        report = st.report();
        steps.push(TraceStep { iteration: last.iteration + 1, total_points: st.total(), e_total: report.e_total, marked });
    };
    Ok(OptimizationTrace { steps, final_idx: st.idx, termination, final_report: report })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub total_points: usize,
    pub e_total: f64,
}

/// Same index on every cell (clamped to each family's top entry), for ι = 0..=max_index.
pub fn equal_order_sweep(
    p: &Partition,
    model: &ErrorModel,
    box_kind: BoxRuleKind,
    max_index: usize,
) -> Result<Vec<SweepPoint>> {
    let cells = p.cells();
    (0..=max_index)
        .map(|i| {
            let idx = RuleIndexList { indices: cells.iter().map(|c| i.min(RuleFamily::of(c).max_index())).collect() };
            let s = assemble_scheme(p, &idx, box_kind)?;
            Ok(SweepPoint { index: i, total_points: s.total(), e_total: model.evaluate(&s).e_total })
        })
        .collect()
}

pub fn sweep_to_csv(rows: &[(BoxRuleKind, Vec<SweepPoint>)]) -> String {
    let mut s = format!("{CSV_HEADER}\nbox_rule,index,points,error\n");
    for (kind, pts) in rows {
        let name = match kind {
            BoxRuleKind::Gauss => "gauss",
            BoxRuleKind::Uniform => "uniform",
        };
        for p in pts {
            let _ = writeln!(s, "{name},{},{},{:e}", p.index, p.total_points, p.e_total);
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThumbRule {
    /// Level 1 at k_max, two degrees less per level, tessellation two below level ρ̄.
    #[serde(rename = "a")]
    MinimalLowering,
    /// Level 1 at k_max, linearly down to degree 0 at levels ρ̄ and ρ̄+1.
    #[serde(rename = "b")]
    UniformLowering,
}

/// Per-level degrees for levels 1..=ρ̄+1.
pub fn thumb_degrees(strategy: ThumbRule, max_depth: u32, k_max: usize) -> Vec<usize> {
    let rho = max_depth as usize;
    let mut deg: Vec<usize> = match strategy {
        ThumbRule::MinimalLowering => (1..=rho).map(|l| k_max.saturating_sub(2 * (l - 1))).collect(),
        ThumbRule::UniformLowering => (1..=rho)
            .map(|l| {
                if rho == 1 {
                    return k_max;
                }
                let q = k_max * (rho - l) / (rho - 1);
                q - q % 2
            })
            .collect(),
    };
    let tess = match strategy {
        ThumbRule::MinimalLowering => deg[rho - 1].saturating_sub(2),
        ThumbRule::UniformLowering => 0,
    };
    deg.push(tess);
    deg
}

/// Index list realizing the per-level degrees of a rule of thumb.
pub fn rule_of_thumb(p: &Partition, strategy: ThumbRule, k_max: usize) -> (Vec<usize>, RuleIndexList) {
    let deg = thumb_degrees(strategy, p.max_depth, k_max);
    let indices = p
        .cells()
        .iter()
        .map(|c| {
            let l = c.level() as usize;
            let q = if l == 0 { k_max } else { deg[(l - 1).min(deg.len() - 1)] };
            RuleFamily::of(c).index_for_degree(q)
        })
        .collect();
    (deg, RuleIndexList { indices })
}

/// Level marking across several elements: the per-level indicator sums of
/// all elements are added and the winning level is incremented everywhere.
pub fn optimize_global(
    elements: &[(&Partition, &ErrorModel)],
    budget: usize,
    box_kind: BoxRuleKind,
) -> Result<(Vec<RuleIndexList>, Vec<TraceStep>)> {
    let mut states = elements.iter().map(|(p, m)| State::new(p, m, box_kind)).collect::<Result<Vec<_>>>()?;
    let combined = |states: &[State]| -> (usize, f64, Vec<ErrorReport>) {
        let reports: Vec<_> = states.iter().map(State::report).collect();
        let e = reports.iter().map(|r| r.e_total * r.e_total).sum::<f64>().sqrt();
        (states.iter().map(State::total).sum(), e, reports)
    };
    let (mut total, mut e, mut reports) = combined(&states);
    let mut steps = vec![TraceStep { iteration: 0, total_points: total, e_total: e, marked: Marked::Initial }];
    while total < budget {
        let mut sums: Vec<f64> = Vec::new();
        for (st, r) in states.iter().zip(&reports) {
            let ind = indicators(&r.per_cell_error, &st.idx, &st.cells);
            for (id, c) in st.cells.iter().enumerate() {
                if ind.depleted[id] {
                    continue;
                }
                let l = c.level() as usize;
                if sums.len() <= l {
                    sums.resize(l + 1, f64::NEG_INFINITY);
                }
                sums[l] = sums[l].max(0.0) + ind.values[id];
            }
        }
        let Some(best) = (0..sums.len()).filter(|&l| sums[l].is_finite()).fold(None, |acc: Option<usize>, l| match acc {
            Some(b) if sums[b] >= sums[l] => Some(b),
            _ => Some(l),
        }) else {
            break;
        };
        for st in states.iter_mut() {
            let ids: Vec<usize> = (0..st.cells.len())
                .filter(|&id| st.cells[id].level() as usize == best && rule_size(&st.cells[id], st.idx.indices[id] + 1).is_ok())
                .collect();
            for &id in &ids {
                st.idx.indices[id] += 1;
            }
            st.refresh(&ids)?;
        }
        (total, e, reports) = combined(&states);
        let it = steps.len();
        steps.push(TraceStep { iteration: it, total_points: total, e_total: e, marked: Marked::Level(best as u32) });
    }
    Ok((states.into_iter().map(|s| s.idx).collect(), steps))
}
