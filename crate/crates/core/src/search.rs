//! Stepwise variable selection: greedy (best improvement) and headlong
//! (first improvement) searches alternating addition and removal phases.
//!
//! Iteration 1 picks the variable with the largest univariate evidence;
//! iteration 2 only tries an addition; later iterations try an addition and
//! then a removal. The search stops once two consecutive phases have been
//! rejected.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceStructure;
use crate::dataset::LabeledSplit;
use crate::error::{Error, Result};
use crate::mixture::{best_structure_fit, Fitting, MixtureModel};
use crate::modelcomp::{compare_add, compare_remove, ComparisonResult, Proposal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Evaluate every candidate and take the best.
    Greedy,
    /// Take the first candidate whose evidence clears the threshold.
    Headlong,
}

/// Initial order of the candidate list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateOrder {
    /// Decreasing univariate evidence.
    BicRank,
    /// Increasing variable identifier.
    Ascending,
    /// Decreasing variable identifier.
    Descending,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Strategy::Greedy),
            "headlong" => Ok(Strategy::Headlong),
            _ => Err(Error::InvalidConfig(alloc::format!("unknown strategy '{s}'"))),
        }
    }
}

impl FromStr for CandidateOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bic-rank" => Ok(CandidateOrder::BicRank),
            "ascending" => Ok(CandidateOrder::Ascending),
            "descending" => Ok(CandidateOrder::Descending),
            _ => Err(Error::InvalidConfig(alloc::format!("unknown ordering '{s}'"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Greedy => "greedy",
            Strategy::Headlong => "headlong",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub strategy: Strategy,
    /// Evidence a move must strictly exceed to be accepted.
    pub min_evidence: f64,
    /// Fit with the unlabeled rows (semi-supervised EM).
    pub updating: bool,
    pub max_selected: Option<usize>,
    pub max_iterations: usize,
    pub ordering: CandidateOrder,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Headlong,
            min_evidence: 0.0,
            updating: true,
            max_selected: None,
            max_iterations: 500,
            ordering: CandidateOrder::BicRank,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.min_evidence.is_finite() && self.min_evidence != f64::INFINITY {
            return Err(Error::InvalidConfig("min_evidence must be finite".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        if self.max_selected == Some(0) {
            return Err(Error::InvalidConfig("max_selected must be positive".into()));
        }
        Ok(())
    }

    pub fn fitting(&self) -> Fitting {
        Fitting::from_updating(self.updating)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accepted,
    Rejected,
}

/// One phase of the search: the accepted move, or when nothing was
/// accepted the candidate with the most evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub phase: Proposal,
    pub var_id: Option<f64>,
    pub column: Option<usize>,
    pub bic_diff: Option<f64>,
    /// Structure of the class model that results if the move is made.
    pub structure: Option<CovarianceStructure>,
    pub decision: Decision,
    /// Comparisons run during the phase.
    pub evaluated: usize,
}

/// Search state: chosen variables in inclusion order, the rotating
/// candidate list and the decision trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionState {
    pub chosen: Vec<usize>,
    pub remaining: VecDeque<usize>,
    pub trace: Vec<TraceRecord>,
    pub consecutive_rejections: usize,
    pub current_model: Option<MixtureModel>,
    pub iteration: usize,
    /// Univariate comparisons for every variable, in column order.
    pub univariate: Vec<ComparisonResult>,
    /// Candidate list right after the first variable was chosen.
    pub initial_remaining: Vec<usize>,
}

impl SelectionState {
    fn chosen_model(&self) -> Option<&MixtureModel> {
        self.current_model.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.consecutive_rejections >= 2
    }
}

/// Final selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub state: SelectionState,
    /// Best-structure model on the chosen variables; `None` when empty.
    pub model: Option<MixtureModel>,
    /// The iteration cap ended the search.
    pub hit_iteration_cap: bool,
}

/// Univariate evidence for every variable and the first chosen variable.
/// Ties in evidence go to the lower column.
pub fn initial_ranking(split: &LabeledSplit, config: &SearchConfig) -> Result<SelectionState> {
    config.validate()?;
    let mode = config.fitting();
    let p = split.labeled().n_vars();
    let univariate =
        (0..p).map(|j| compare_add(split, &[], j, None, mode)).collect::<Result<Vec<ComparisonResult>>>()?;
    let best = (0..p).fold(0, |b, j| if univariate[j].evidence > univariate[b].evidence { j } else { b });
    let mut state = SelectionState {
        chosen: Vec::new(),
        remaining: VecDeque::new(),
        trace: Vec::new(),
        consecutive_rejections: 0,
        current_model: None,
        iteration: 1,
        univariate,
        initial_remaining: Vec::new(),
    };
    let top = &state.univariate[best];
    let accepted = top.evidence > config.min_evidence;
    state.trace.push(TraceRecord {
        iteration: 1,
        phase: Proposal::Add,
        var_id: Some(top.var_id),
        column: Some(best),
        bic_diff: Some(top.evidence),
        structure: top.structure_grouping,
        decision: if accepted { Decision::Accepted } else { Decision::Rejected },
        evaluated: p,
    });
    let mut order: Vec<usize> = (0..p).collect();
    match config.ordering {
        CandidateOrder::BicRank => {
            order.sort_by(|&a, &b| state.univariate[b].evidence.total_cmp(&state.univariate[a].evidence).then(a.cmp(&b)))
        }
        CandidateOrder::Ascending => {}
        CandidateOrder::Descending => order.reverse(),
    }
    if accepted {
        state.chosen.push(best);
        order.retain(|&j| j != best);
        state.current_model = Some(best_structure_fit(split, &state.chosen, mode)?);
    } else {
        // nothing carries class information: stop with an empty model
        state.consecutive_rejections = 2;
    }
    state.initial_remaining = order.clone();
    state.remaining = order.into();
    Ok(state)
}

fn record(state: &mut SelectionState, phase: Proposal, best: Option<&ComparisonResult>, accepted: bool, evaluated: usize) {
    let structure = best.and_then(|r| match phase {
        Proposal::Add => r.structure_grouping,
        Proposal::Remove => r.structure_nogrouping,
    });
    state.trace.push(TraceRecord {
        iteration: state.iteration,
        phase,
        var_id: best.map(|r| r.var_id),
        column: best.map(|r| r.column),
        bic_diff: best.map(|r| r.evidence),
        structure,
        decision: if accepted { Decision::Accepted } else { Decision::Rejected },
        evaluated,
    });
    if accepted {
        state.consecutive_rejections = 0;
    } else {
        state.consecutive_rejections += 1;
    }
}

fn more_evidence(a: &ComparisonResult, b: &ComparisonResult) -> bool {
    a.evidence > b.evidence || (a.evidence == b.evidence && a.column < b.column)
}

fn add_phase(state: &mut SelectionState, split: &LabeledSplit, config: &SearchConfig) -> Result<()> {
    let mode = config.fitting();
    if config.max_selected.is_some_and(|cap| state.chosen.len() >= cap) || state.remaining.is_empty() {
        record(state, Proposal::Add, None, false, 0);
        return Ok(());
    }
    let mut best: Option<ComparisonResult> = None;
    let mut evaluated = 0;
    match config.strategy {
        Strategy::Headlong => {
            for _ in 0..state.remaining.len() {
                let cand = state.remaining.pop_front().expect("candidate list is non-empty");
                let r = compare_add(split, &state.chosen, cand, state.chosen_model(), mode)?;
                evaluated += 1;
                if r.evidence > config.min_evidence {
                    state.chosen.push(cand);
                    state.current_model = Some(best_structure_fit(split, &state.chosen, mode)?);
                    record(state, Proposal::Add, Some(&r), true, evaluated);
                    return Ok(());
                }
                state.remaining.push_back(cand);
                if best.as_ref().map_or(true, |b| more_evidence(&r, b)) {
                    best = Some(r);
                }
            }
            record(state, Proposal::Add, best.as_ref(), false, evaluated);
        }
        Strategy::Greedy => {
            for &cand in state.remaining.iter() {
                let r = compare_add(split, &state.chosen, cand, state.chosen_model(), mode)?;
                evaluated += 1;
                if best.as_ref().map_or(true, |b| more_evidence(&r, b)) {
                    best = Some(r);
                }
            }
            let best = best.expect("at least one candidate evaluated");
            let accepted = best.evidence > config.min_evidence;
            if accepted {
                state.remaining.retain(|&c| c != best.column);
                state.chosen.push(best.column);
                state.current_model = Some(best_structure_fit(split, &state.chosen, mode)?);
            }
            record(state, Proposal::Add, Some(&best), accepted, evaluated);
        }
    }
    Ok(())
}

fn remove_phase(state: &mut SelectionState, split: &LabeledSplit, config: &SearchConfig) -> Result<()> {
    let mode = config.fitting();
    if state.chosen.len() < 2 {
        record(state, Proposal::Remove, None, false, 0);
        return Ok(());
    }
    let mut best: Option<ComparisonResult> = None;
    let mut evaluated = 0;
    let mut accepted = false;
    // reverse order of inclusion
    let order: Vec<usize> = state.chosen.iter().rev().copied().collect();
    for cand in order {
        let r = compare_remove(split, &state.chosen, cand, state.chosen_model(), mode)?;
        evaluated += 1;
        if config.strategy == Strategy::Headlong && r.evidence > config.min_evidence {
            best = Some(r);
            accepted = true;
            break;
        }
        if best.as_ref().map_or(true, |b| r.evidence > b.evidence) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one candidate evaluated");
    accepted = accepted || best.evidence > config.min_evidence;
    if accepted {
        state.chosen.retain(|&c| c != best.column);
        state.remaining.push_back(best.column);
        state.current_model = Some(best_structure_fit(split, &state.chosen, mode)?);
    }
    record(state, Proposal::Remove, Some(&best), accepted, evaluated);
    Ok(())
}

/// One headlong iteration: an addition phase, then (from iteration 3) a
/// removal phase.
pub fn headlong_step(state: &mut SelectionState, split: &LabeledSplit, config: &SearchConfig) -> Result<()> {
    let config = SearchConfig { strategy: Strategy::Headlong, ..config.clone() };
    step(state, split, &config)
}

/// One greedy iteration.
pub fn greedy_step(state: &mut SelectionState, split: &LabeledSplit, config: &SearchConfig) -> Result<()> {
    let config = SearchConfig { strategy: Strategy::Greedy, ..config.clone() };
    step(state, split, &config)
}

fn step(state: &mut SelectionState, split: &LabeledSplit, config: &SearchConfig) -> Result<()> {
    if state.is_finished() {
        return Ok(());
    }
    state.iteration += 1;
    add_phase(state, split, config)?;
    if state.iteration >= 3 && !state.is_finished() {
        remove_phase(state, split, config)?;
    }
    Ok(())
}

/// Runs the configured search to completion.
pub fn run(split: &LabeledSplit, config: &SearchConfig) -> Result<SelectionOutcome> {
    let mut state = initial_ranking(split, config)?;
    let mut hit_iteration_cap = false;
    while !state.is_finished() {
        if state.iteration >= config.max_iterations {
            hit_iteration_cap = true;
            break;
        }
        step(&mut state, split, config)?;
    }
    let model = state.current_model.clone();
    Ok(SelectionOutcome { state, model, hit_iteration_cap })
}

/// Rebuilds the chosen list and candidate list from the initial candidate
/// order and a trace.
pub fn replay(initial_remaining: &[usize], trace: &[TraceRecord], strategy: Strategy) -> (Vec<usize>, VecDeque<usize>) {
    let mut chosen = Vec::new();
    let mut remaining: VecDeque<usize> = initial_remaining.iter().copied().collect();
    for rec in trace {
        let accepted = rec.decision == Decision::Accepted;
        match (rec.iteration, rec.phase, rec.column) {
            (1, Proposal::Add, Some(c)) if accepted => chosen.push(c),
            (_, Proposal::Add, Some(c)) if accepted => {
                let pos = remaining.iter().position(|&r| r == c).expect("accepted column is a candidate");
                match strategy {
                    Strategy::Headlong => {
                        remaining.rotate_left(pos);
                        remaining.pop_front();
                    }
                    Strategy::Greedy => {
                        remaining.remove(pos);
                    }
                }
                chosen.push(c);
            }
            (_, Proposal::Remove, Some(c)) if accepted => {
                chosen.retain(|&x| x != c);
                remaining.push_back(c);
            }
            _ => {}
        }
    }
    (chosen, remaining)
}
