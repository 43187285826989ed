//! Subject-level event records and the aggregated counting system
//! (event counts and at-risk totals on the pooled jump grid).

use thiserror::Error;

pub type State = u8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub time: f64,
    pub from: State,
    pub to: State,
}

/// One subject's observed history: an ordered list of transitions starting
/// from state 0, plus an optional censoring time at or after the last
/// transition. A record with no transitions must carry a censoring time.
#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord {
    pub subject_id: String,
    pub group: String,
    pub transitions: Vec<Transition>,
    pub censor_time: Option<f64>,
    pub covariates: Vec<f64>,
}

impl EventRecord {
    pub fn new(subject_id: impl Into<String>, group: impl Into<String>) -> Self {
        EventRecord {
            subject_id: subject_id.into(),
            group: group.into(),
            transitions: Vec::new(),
            censor_time: None,
            covariates: Vec::new(),
        }
    }

    pub fn with_transitions(mut self, transitions: Vec<Transition>) -> Self {
        self.transitions = transitions;
        self
    }

    pub fn censored_at(mut self, time: f64) -> Self {
        self.censor_time = Some(time);
        self
    }

    /// End of this subject's observation window: censoring time if present,
    /// otherwise the last transition time.
    pub fn end_time(&self) -> Option<f64> {
        self.censor_time
            .or_else(|| self.transitions.last().map(|tr| tr.time))
    }

    fn validate(&self) -> Result<(), BuildError> {
        let id = || self.subject_id.clone();
        if self.transitions.is_empty() && self.censor_time.is_none() {
            return Err(BuildError::NoObservation { subject: id() });
        }
        let mut state: State = 0;
        let mut last = 0.0_f64;
        for tr in &self.transitions {
            if !tr.time.is_finite() || tr.time <= 0.0 {
                return Err(BuildError::BadTime {
                    subject: id(),
                    time: tr.time,
                });
            }
            if tr.time <= last {
                return Err(BuildError::NonIncreasingTimes {
                    subject: id(),
                    time: tr.time,
                });
            }
            if tr.from != state {
                return Err(BuildError::BrokenPath {
                    subject: id(),
                    expected: state,
                    found: tr.from,
                    time: tr.time,
                });
            }
            state = tr.to;
            last = tr.time;
        }
        if let Some(c) = self.censor_time {
            if !c.is_finite() || c <= 0.0 {
                return Err(BuildError::BadTime {
                    subject: id(),
                    time: c,
                });
            }
            if c < last {
                return Err(BuildError::CensorBeforeEvent {
                    subject: id(),
                    censor: c,
                    event: last,
                });
            }
        }
        Ok(())
    }
}

/// A transition class pools one or more raw (from, to) transition types into
/// a single counted process. Its at-risk set is the union of the source
/// from-states. Plain multistate use keeps every class a singleton; pooled
/// classes cover marginal constructions such as an all-deaths process
/// counted over everyone still alive.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionClass {
    pub sources: Vec<(State, State)>,
}

impl TransitionClass {
    pub fn single(from: State, to: State) -> Self {
        TransitionClass {
            sources: vec![(from, to)],
        }
    }

    pub fn pooled(sources: &[(State, State)]) -> Self {
        TransitionClass {
            sources: sources.to_vec(),
        }
    }

    fn matches(&self, tr: &Transition) -> bool {
        self.sources.iter().any(|&(f, t)| f == tr.from && t == tr.to)
    }

    fn from_states(&self) -> Vec<State> {
        let mut states: Vec<State> = self.sources.iter().map(|&(f, _)| f).collect();
        states.sort_unstable();
        states.dedup();
        states
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionSchema {
    pub classes: Vec<TransitionClass>,
}

impl TransitionSchema {
    pub fn new(classes: Vec<TransitionClass>) -> Self {
        TransitionSchema { classes }
    }

    /// Single event type 0 -> 1, the plain survival layout.
    pub fn survival() -> Self {
        TransitionSchema::new(vec![TransitionClass::single(0, 1)])
    }

    /// First-event competing risks with `k` causes: 0 -> j for j = 1..=k.
    pub fn competing_risks(k: usize) -> Self {
        TransitionSchema::new(
            (1..=k as State)
                .map(|j| TransitionClass::single(0, j))
                .collect(),
        )
    }

    /// Irreversible illness-death: 0 -> 1 (illness), 0 -> 2 (death while
    /// healthy), 1 -> 2 (death after illness).
    pub fn illness_death() -> Self {
        TransitionSchema::new(vec![
            TransitionClass::single(0, 1),
            TransitionClass::single(0, 2),
            TransitionClass::single(1, 2),
        ])
    }

    /// Recurrent events (0 -> 0 self loops) with a terminal death 0 -> 1.
    pub fn recurrent_with_death() -> Self {
        TransitionSchema::new(vec![
            TransitionClass::single(0, 1),
            TransitionClass::single(0, 0),
        ])
    }

    fn covers(&self, tr: &Transition) -> bool {
        self.classes.iter().any(|c| c.matches(tr))
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("no event records supplied")]
    Empty,
    #[error("subject {subject}: no transitions and no censoring time")]
    NoObservation { subject: String },
    #[error("subject {subject}: nonpositive or nonfinite time {time}")]
    BadTime { subject: String, time: f64 },
    #[error("subject {subject}: transition times not strictly increasing at t={time}")]
    NonIncreasingTimes { subject: String, time: f64 },
    #[error("subject {subject}: transition from state {found} at t={time} but subject occupies state {expected}")]
    BrokenPath {
        subject: String,
        expected: State,
        found: State,
        time: f64,
    },
    #[error("subject {subject}: censoring time {censor} precedes last event time {event}")]
    CensorBeforeEvent { subject: String, censor: f64, event: f64 },
    #[error("subject {subject}: transition {from}->{to} at t={time} not covered by the schema")]
    UnknownTransition {
        subject: String,
        from: State,
        to: State,
        time: f64,
    },
}

/// Aggregated counting processes for one sample: per grid time and per
/// transition class, the number of events and the at-risk total just before
/// that time. Subject-level detail (episodes, per-event attribution) is kept
/// so exact at-risk queries and regression fits stay possible downstream.
#[derive(Clone, Debug)]
pub struct CountingSystem {
    pub jump_grid: Vec<f64>,
    /// dn[k][c]: events of class c at jump_grid[k]. Ties are merged.
    pub dn: Vec<Vec<u32>>,
    /// y[k][c]: subjects at risk for class c just before jump_grid[k].
    pub y: Vec<Vec<u32>>,
    pub n: usize,
    // per class, sorted episode endpoints: subject at risk on (enter, exit]
    risk_enters: Vec<Vec<f64>>,
    risk_exits: Vec<Vec<f64>>,
    // (time, class, subject index) for every counted event
    events: Vec<(f64, usize, usize)>,
    covariates: Vec<Vec<f64>>,
    // occupies `state` on (enter, exit], per subject
    subject_episodes: Vec<Vec<(State, f64, f64)>>,
    class_states: Vec<Vec<State>>,
}

impl CountingSystem {
    pub fn n_classes(&self) -> usize {
        self.risk_enters.len()
    }

    /// At-risk total for `class` just before time `t` (left-continuous).
    pub fn y_at(&self, class: usize, t: f64) -> u32 {
        // episodes (enter, exit]: at risk at t iff enter < t <= exit
        let started = self.risk_enters[class].partition_point(|&e| e < t);
        let gone = self.risk_exits[class].partition_point(|&x| x < t);
        (started - gone) as u32
    }

    /// Events of `class` at exactly time `t`.
    pub fn dn_at(&self, class: usize, t: f64) -> u32 {
        match self
            .jump_grid
            .binary_search_by(|g| g.partial_cmp(&t).unwrap())
        {
            Ok(k) => self.dn[k][class],
            Err(_) => 0,
        }
    }

    /// (time, class, subject) for every counted event, time-ordered.
    pub fn events(&self) -> &[(f64, usize, usize)] {
        &self.events
    }

    /// Covariate row per subject, aligned with the subject indices used in
    /// `events`. Empty rows when the records carried no covariates.
    pub fn covariate_rows(&self) -> &[Vec<f64>] {
        &self.covariates
    }

    /// Subject indices at risk for `class` just before time `t`.
    pub fn risk_set_at(&self, class: usize, t: f64) -> Vec<usize> {
        let states = &self.class_states[class];
        let mut out = Vec::new();
        for (idx, eps) in self.subject_episodes.iter().enumerate() {
            let hit = eps
                .iter()
                .any(|&(state, enter, exit)| states.contains(&state) && enter < t && t <= exit);
            if hit {
                out.push(idx);
            }
        }
        out
    }
}

/// Aggregate validated records into a counting system under `schema`.
/// Grid times are the distinct event times across all classes; ties merge.
pub fn build_counting_system(
    records: &[EventRecord],
    schema: &TransitionSchema,
) -> Result<CountingSystem, BuildError> {
    if records.is_empty() {
        return Err(BuildError::Empty);
    }
    for r in records {
        r.validate()?;
        for tr in &r.transitions {
            if !schema.covers(tr) {
                return Err(BuildError::UnknownTransition {
                    subject: r.subject_id.clone(),
                    from: tr.from,
                    to: tr.to,
                    time: tr.time,
                });
            }
        }
    }

    let l = schema.classes.len();
    let n = records.len();

    let mut subject_episodes: Vec<Vec<(State, f64, f64)>> = Vec::with_capacity(n);
    for r in records {
        let mut eps = Vec::with_capacity(r.transitions.len() + 1);
        let mut state: State = 0;
        let mut enter = 0.0_f64;
        for tr in &r.transitions {
            eps.push((state, enter, tr.time));
            state = tr.to;
            enter = tr.time;
        }
        let end = r.censor_time.unwrap_or(enter);
        if end > enter {
            eps.push((state, enter, end));
        }
        subject_episodes.push(eps);
    }

    let class_states: Vec<Vec<State>> = schema.classes.iter().map(|c| c.from_states()).collect();

    let mut risk_enters = vec![Vec::new(); l];
    let mut risk_exits = vec![Vec::new(); l];
    for eps in &subject_episodes {
        for &(state, enter, exit) in eps {
            for (c, states) in class_states.iter().enumerate() {
                if states.contains(&state) {
                    risk_enters[c].push(enter);
                    risk_exits[c].push(exit);
                }
            }
        }
    }
    for c in 0..l {
        risk_enters[c].sort_by(|a, b| a.partial_cmp(b).unwrap());
        risk_exits[c].sort_by(|a, b| a.partial_cmp(b).unwrap());
    }

    let mut events: Vec<(f64, usize, usize)> = Vec::new();
    for (idx, r) in records.iter().enumerate() {
        for tr in &r.transitions {
            for (c, class) in schema.classes.iter().enumerate() {
                if class.matches(tr) {
                    events.push((tr.time, c, idx));
                }
            }
        }
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut jump_grid: Vec<f64> = events.iter().map(|e| e.0).collect();
    jump_grid.dedup();

    let mut dn = vec![vec![0u32; l]; jump_grid.len()];
    {
        let mut k = 0usize;
        for &(t, c, _) in &events {
            while jump_grid[k] < t {
                k += 1;
            }
            dn[k][c] += 1;
        }
    }

    let covariates = records.iter().map(|r| r.covariates.clone()).collect();

    let mut cs = CountingSystem {
        jump_grid,
        dn,
        y: Vec::new(),
        n,
        risk_enters,
        risk_exits,
        events,
        covariates,
        subject_episodes,
        class_states,
    };
    cs.y = cs
        .jump_grid
        .iter()
        .map(|&t| (0..l).map(|c| cs.y_at(c, t)).collect())
        .collect();
    Ok(cs)
}

/// Split records by group label, preserving record order within groups.
pub fn split_by_group(records: &[EventRecord]) -> Vec<(String, Vec<EventRecord>)> {
    let mut order: Vec<String> = Vec::new();
    for r in records {
        if !order.contains(&r.group) {
            order.push(r.group.clone());
        }
    }
    order
        .into_iter()
        .map(|g| {
            let members = records.iter().filter(|r| r.group == g).cloned().collect();
            (g, members)
        })
        .collect()
}
