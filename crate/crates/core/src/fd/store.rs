use std::collections::{HashMap, VecDeque};
use std::fmt;

use super::{Domain, FdError, Inconsistent};

/// Default value range for variables: `[0, 2^28)`.
pub const DEFAULT_RANGE: (i64, i64) = (0, (1 << 28) - 1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PropagatorId(pub(crate) usize);

/// A restoration point handed out by [`Store::mark`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mark {
    id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    Consistent,
    Inconsistent,
}

impl Propagation {
    pub fn is_consistent(self) -> bool {
        self == Propagation::Consistent
    }
}

/// A filtering rule over some variables.
///
/// `filter` must only remove values and must be idempotent: a second call
/// on its own output changes nothing.
pub trait Propagator: fmt::Debug + Send {
    fn watched(&self) -> Vec<VarId>;
    fn filter(&self, domains: &mut Domains) -> Result<(), Inconsistent>;
}

/// Variable domains plus the undo log that records every change.
#[derive(Debug, Default, Clone)]
pub struct Domains {
    doms: Vec<Domain>,
    trail: Vec<(VarId, Domain)>,
    changed: Vec<VarId>,
}

impl Domains {
    pub fn get(&self, var: VarId) -> &Domain {
        &self.doms[var.0]
    }

    pub fn min(&self, var: VarId) -> i64 {
        self.doms[var.0]
            .min()
            .expect("live domains are never empty")
    }

    pub fn max(&self, var: VarId) -> i64 {
        self.doms[var.0]
            .max()
            .expect("live domains are never empty")
    }

    pub fn value(&self, var: VarId) -> Option<i64> {
        self.doms[var.0].value()
    }

    pub fn len(&self) -> usize {
        self.doms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doms.is_empty()
    }

    /// Replaces the domain of `var` with `dom`, which must be a subset of it.
    /// Returns whether anything changed.
    pub fn restrict(&mut self, var: VarId, dom: Domain) -> Result<bool, Inconsistent> {
        if dom.is_empty() {
            return Err(Inconsistent);
        }
        let slot = &mut self.doms[var.0];
        if *slot == dom {
            return Ok(false);
        }
        debug_assert!(dom.is_subset_of(slot), "filters must contract");
        let prev = std::mem::replace(slot, dom);
        self.trail.push((var, prev));
        self.changed.push(var);
        Ok(true)
    }

    pub fn narrow(&mut self, var: VarId, lo: i64, hi: i64) -> Result<bool, Inconsistent> {
        let d = self.get(var);
        if d.min().is_some_and(|m| m >= lo) && d.max().is_some_and(|m| m <= hi) {
            return Ok(false);
        }
        let nd = d.narrow_bounds(lo, hi);
        self.restrict(var, nd)
    }

    pub fn remove(&mut self, var: VarId, v: i64) -> Result<bool, Inconsistent> {
        if !self.get(var).contains(v) {
            return Ok(false);
        }
        let nd = self.get(var).remove_value(v);
        self.restrict(var, nd)
    }

    pub fn assign(&mut self, var: VarId, v: i64) -> Result<bool, Inconsistent> {
        self.narrow(var, v, v)
    }

    fn push_var(&mut self, d: Domain) -> VarId {
        self.doms.push(d);
        VarId(self.doms.len() - 1)
    }
}

#[derive(Debug, Clone, Copy)]
struct MarkRecord {
    id: u64,
    trail_len: usize,
    props_len: usize,
}

/// Variables, their domains, the posted propagators and the trail.
///
/// A store is single-threaded; distinct stores are independent.
pub struct Store {
    domains: Domains,
    names: Vec<Option<String>>,
    by_name: HashMap<String, VarId>,
    props: Vec<Box<dyn Propagator>>,
    watches: Vec<Vec<PropagatorId>>,
    agenda: VecDeque<PropagatorId>,
    queued: Vec<bool>,
    marks: Vec<MarkRecord>,
    next_mark: u64,
    range: (i64, i64),
}

impl Default for Store {
    fn default() -> Self {
        Store::new()
    }
}

impl fmt::Debug for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Store")
            .field("domains", &self.domains.doms)
            .field("propagators", &self.props.len())
            .field("marks", &self.marks.len())
            .finish()
    }
}

impl Store {
    pub fn new() -> Self {
        Store::with_range(DEFAULT_RANGE.0, DEFAULT_RANGE.1)
    }

    /// A store whose variables must stay inside `[min, max]`.
    pub fn with_range(min: i64, max: i64) -> Self {
        Store {
            domains: Domains::default(),
            names: Vec::new(),
            by_name: HashMap::new(),
            props: Vec::new(),
            watches: Vec::new(),
            agenda: VecDeque::new(),
            queued: Vec::new(),
            marks: Vec::new(),
            next_mark: 0,
            range: (min, max),
        }
    }

    pub fn range(&self) -> (i64, i64) {
        self.range
    }

    /// Creates a variable over `{lo..hi}`, optionally registered under an
    /// external name. Variables are permanent; undo never removes them.
    pub fn new_var(&mut self, name: Option<&str>, lo: i64, hi: i64) -> Result<VarId, FdError> {
        let d = Domain::interval(lo, hi)?;
        let (min, max) = self.range;
        if lo < min || hi > max {
            return Err(FdError::OutOfRange { lo, hi, min, max });
        }
        if let Some(n) = name {
            if self.by_name.contains_key(n) {
                return Err(FdError::DuplicateName(n.to_string()));
            }
        }
        let id = self.domains.push_var(d);
        if let Some(n) = name {
            self.by_name.insert(n.to_string(), id);
        }
        self.names.push(name.map(str::to_string));
        self.watches.push(Vec::new());
        Ok(id)
    }

    pub fn var_count(&self) -> usize {
        self.domains.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> {
        (0..self.domains.len()).map(VarId)
    }

    pub fn check_var(&self, var: VarId) -> Result<(), FdError> {
        if var.0 < self.domains.len() {
            Ok(())
        } else {
            Err(FdError::UnknownVar(var.0))
        }
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, var: VarId) -> Option<&str> {
        self.names[var.0].as_deref()
    }

    pub fn domain(&self, var: VarId) -> &Domain {
        self.domains.get(var)
    }

    pub fn domains(&self) -> &Domains {
        &self.domains
    }

    /// A copy of every variable's domain, indexed by `VarId`.
    pub fn snapshot(&self) -> Vec<Domain> {
        self.domains.doms.clone()
    }

    pub fn propagator_count(&self) -> usize {
        self.props.len()
    }

    /// Narrows `var` to `[lo, hi]` outside of propagation; watchers are
    /// scheduled for the next [`Store::propagate`].
    pub fn narrow(&mut self, var: VarId, lo: i64, hi: i64) -> Result<bool, Inconsistent> {
        self.domains.narrow(var, lo, hi)
    }

    pub fn remove_value(&mut self, var: VarId, v: i64) -> Result<bool, Inconsistent> {
        self.domains.remove(var, v)
    }

    pub fn assign(&mut self, var: VarId, v: i64) -> Result<bool, Inconsistent> {
        self.domains.assign(var, v)
    }

    pub fn restrict(&mut self, var: VarId, dom: Domain) -> Result<bool, Inconsistent> {
        let nd = self.domains.get(var).intersect(&dom);
        self.domains.restrict(var, nd)
    }

    /// Installs a propagator and schedules it.
    pub fn post(&mut self, prop: Box<dyn Propagator>) -> Result<PropagatorId, FdError> {
        let watched = prop.watched();
        for &v in &watched {
            self.check_var(v)?;
        }
        let id = PropagatorId(self.props.len());
        for v in watched {
            let w = &mut self.watches[v.0];
            if w.last() != Some(&id) {
                w.push(id);
            }
        }
        self.props.push(prop);
        self.queued.push(false);
        self.enqueue(id);
        Ok(id)
    }

    fn enqueue(&mut self, id: PropagatorId) {
        if !self.queued[id.0] {
            self.queued[id.0] = true;
            self.agenda.push_back(id);
        }
    }

    fn schedule_changed(&mut self, except: Option<PropagatorId>) {
        let changed = std::mem::take(&mut self.domains.changed);
        for v in &changed {
            for k in 0..self.watches[v.0].len() {
                let p = self.watches[v.0][k];
                if Some(p) != except {
                    self.enqueue(p);
                }
            }
        }
        let mut buf = changed;
        buf.clear();
        self.domains.changed = buf;
    }

    /// Runs scheduled propagators until no domain changes.
    ///
    /// On `Inconsistent` the domains are left in an intermediate state; the
    /// caller is expected to undo to a mark.
    pub fn propagate(&mut self) -> Propagation {
        self.schedule_changed(None);
        while let Some(id) = self.agenda.pop_front() {
            self.queued[id.0] = false;
            let prop = &self.props[id.0];
            if prop.filter(&mut self.domains).is_err() {
                self.clear_agenda();
                return Propagation::Inconsistent;
            }
            self.schedule_changed(Some(id));
        }
        Propagation::Consistent
    }

    fn clear_agenda(&mut self) {
        for id in self.agenda.drain(..) {
            self.queued[id.0] = false;
        }
        self.domains.changed.clear();
    }

    pub fn mark(&mut self) -> Mark {
        let id = self.next_mark;
        self.next_mark += 1;
        self.marks.push(MarkRecord {
            id,
            trail_len: self.domains.trail.len(),
            props_len: self.props.len(),
        });
        Mark { id }
    }

    /// Whether `mark` can still be undone to.
    pub fn is_live(&self, mark: Mark) -> bool {
        self.marks.iter().any(|r| r.id == mark.id)
    }

    /// Restores every domain and the propagator set to their state at
    /// `mark`, then discards `mark` and all marks taken after it. Pending
    /// propagation work is dropped.
    pub fn undo_to(&mut self, mark: Mark) -> Result<(), FdError> {
        let pos = self
            .marks
            .iter()
            .rposition(|r| r.id == mark.id)
            .ok_or(FdError::InvalidMark)?;
        let rec = self.marks[pos];
        self.marks.truncate(pos);
        while self.domains.trail.len() > rec.trail_len {
            let (v, d) = self.domains.trail.pop().expect("length checked");
            self.domains.doms[v.0] = d;
        }
        while self.props.len() > rec.props_len {
            let id = PropagatorId(self.props.len() - 1);
            for v in self.props[id.0].watched() {
                let w = &mut self.watches[v.0];
                if w.last() == Some(&id) {
                    w.pop();
                }
            }
            self.props.pop();
            self.queued.pop();
        }
        self.clear_agenda();
        Ok(())
    }

    /// Runs every posted propagator once more and reports whether any
    /// domain would change. Used to check fixpoints.
    pub fn is_fixpoint(&self) -> bool {
        let mut scratch = self.domains.clone();
        self.props.iter().all(|p| {
            let before = scratch.trail.len();
            p.filter(&mut scratch).is_ok() && scratch.trail.len() == before
        })
    }
}
