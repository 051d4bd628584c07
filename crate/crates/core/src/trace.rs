//! JSON-lines traces: a header line followed by one event per line, plus
//! seeded generators for the standard instance families.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::active::FunctionId;
use crate::dynamic::{Action, Event};
use crate::error::{CoreError, TraceError};
use crate::function::{SetFunction, SubmodularFunction};
use crate::ground::GroundSet;
use crate::rational::Rational;
use crate::set::{ElementId, ElementSet};
use crate::trees::{Metric, VertexId};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceHeader {
    pub ground_size: usize,
    /// Element costs; unit costs when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<Rational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fmin: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fmax: Option<Rational>,
    /// Upper bound on the total value of the live functions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_total: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    /// Points of a metric trace; `ground_size` is their number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GenParams>,
}

impl TraceHeader {
    pub fn ground(&self) -> Result<GroundSet, CoreError> {
        match &self.costs {
            Some(c) => GroundSet::new(c.clone()),
            None => Ok(GroundSet::unit(self.ground_size)),
        }
    }

    pub fn metric(&self) -> Result<Option<Metric>, CoreError> {
        self.points.as_deref().map(Metric::from_points).transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FunctionSpec {
    /// Element `i` covers `sets[i]`; items weigh 1 unless listed in `weights`.
    Coverage {
        sets: Vec<Vec<u64>>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        weights: Vec<(u64, Rational)>,
    },
    /// Graphic-matroid rank; element `i` is edge `edges[i]`.
    Matroid {
        vertices: usize,
        edges: Vec<Option<(usize, usize)>>,
    },
    /// Truth table over `support`, or the hitting indicator when `table` is absent.
    Junta {
        support: Vec<ElementId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table: Option<Vec<Rational>>,
    },
    Modular {
        weights: Vec<Rational>,
    },
}

impl FunctionSpec {
    pub fn build(&self, ground_size: usize) -> Result<SubmodularFunction, CoreError> {
        let check_len = |len: usize| {
            if len == ground_size {
                Ok(())
            } else {
                Err(CoreError::GroundSizeMismatch {
                    expected: ground_size,
                    found: len,
                })
            }
        };
        match self {
            FunctionSpec::Coverage { sets, weights } => {
                check_len(sets.len())?;
                if weights.is_empty() {
                    SubmodularFunction::coverage(ground_size, sets)
                } else {
                    SubmodularFunction::weighted_coverage(ground_size, sets, weights)
                }
            }
            FunctionSpec::Matroid { vertices, edges } => {
                check_len(edges.len())?;
                SubmodularFunction::graphic_rank(ground_size, *vertices, edges.clone())
            }
            FunctionSpec::Junta {
                support,
                table: None,
            } => SubmodularFunction::indicator(ground_size, support.clone()),
            FunctionSpec::Junta {
                support,
                table: Some(t),
            } => SubmodularFunction::junta(ground_size, support.clone(), t.clone()),
            FunctionSpec::Modular { weights } => {
                check_len(weights.len())?;
                SubmodularFunction::modular(weights.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum TraceEvent {
    Insert {
        t: usize,
        id: FunctionId,
        function: FunctionSpec,
    },
    Delete {
        t: usize,
        id: FunctionId,
    },
    Arrive {
        t: usize,
        vertex: VertexId,
    },
    Depart {
        t: usize,
        vertex: VertexId,
    },
}

impl TraceEvent {
    pub fn t(&self) -> usize {
        match self {
            TraceEvent::Insert { t, .. }
            | TraceEvent::Delete { t, .. }
            | TraceEvent::Arrive { t, .. }
            | TraceEvent::Depart { t, .. } => *t,
        }
    }

    fn is_vertex_event(&self) -> bool {
        matches!(self, TraceEvent::Arrive { .. } | TraceEvent::Depart { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn read<R: BufRead>(reader: R) -> Result<Self, TraceError> {
        let mut lines = reader.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(s) if s.trim().is_empty() => None,
            other => Some((i + 1, other)),
        });
        let parse_err = |line, e: serde_json::Error| TraceError::Parse {
            line,
            message: e.to_string(),
        };
        let Some((line, first)) = lines.next() else {
            return Err(TraceError::Parse {
                line: 1,
                message: "empty trace, expected a header line".into(),
            });
        };
        let header: TraceHeader = serde_json::from_str(&first?).map_err(|e| parse_err(line, e))?;
        let mut events = Vec::new();
        let mut lines_of = Vec::new();
        for (line, text) in lines {
            events
                .push(serde_json::from_str::<TraceEvent>(&text?).map_err(|e| parse_err(line, e))?);
            lines_of.push(line);
        }
        let trace = Trace { header, events };
        trace.validate_lines(&lines_of)?;
        Ok(trace)
    }

    pub fn parse(text: &str) -> Result<Self, TraceError> {
        Self::read(text.as_bytes())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), TraceError> {
        let json = |v: &dyn erased::Json| v.to_line();
        writeln!(w, "{}", json(&self.header))?;
        for ev in &self.events {
            writeln!(w, "{}", json(ev))?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = Vec::new();
        self.write(&mut out).expect("writing to memory cannot fail");
        String::from_utf8(out).expect("JSON is UTF-8")
    }

    /// Checks ids, supports and vertices against the header.
    pub fn validate(&self) -> Result<(), TraceError> {
        let lines: Vec<usize> = (0..self.events.len()).map(|i| i + 2).collect();
        self.validate_lines(&lines)
    }

    fn validate_lines(&self, lines: &[usize]) -> Result<(), TraceError> {
        let h = &self.header;
        let bad = |line: usize, message: String| Err(TraceError::Parse { line, message });
        if let Some(c) = &h.costs {
            if c.len() != h.ground_size {
                return bad(
                    1,
                    format!("{} costs for a ground set of {}", c.len(), h.ground_size),
                );
            }
        }
        h.ground()
            .map_err(|source| TraceError::Function { line: 1, source })?;
        let metric = h
            .metric()
            .map_err(|source| TraceError::Function { line: 1, source })?;
        if let Some(m) = &metric {
            if m.len() != h.ground_size {
                return bad(
                    1,
                    format!("{} points for a ground set of {}", m.len(), h.ground_size),
                );
            }
        }
        let mut live = BTreeSet::new();
        let mut seen_vertices = BTreeSet::new();
        let mut terminals = BTreeSet::new();
        let mut last_t = None;
        for (ev, &line) in self.events.iter().zip(lines) {
            if last_t.is_some_and(|t| ev.t() <= t) {
                return bad(line, format!("time {} does not increase", ev.t()));
            }
            last_t = Some(ev.t());
            if ev.is_vertex_event() != metric.is_some() {
                return bad(
                    line,
                    "vertex events need header points, function events must not have them".into(),
                );
            }
            match ev {
                TraceEvent::Insert { id, function, .. } => {
                    if !live.insert(*id) {
                        return bad(line, format!("function {id} is already live"));
                    }
                    function
                        .build(h.ground_size)
                        .map_err(|source| TraceError::Function { line, source })?;
                }
                TraceEvent::Delete { id, .. } => {
                    if !live.remove(id) {
                        return bad(line, format!("function {id} is not live"));
                    }
                }
                TraceEvent::Arrive { vertex, .. } => {
                    if *vertex >= h.ground_size {
                        return bad(
                            line,
                            format!("vertex {vertex} is not a point of the metric"),
                        );
                    }
                    if !seen_vertices.insert(*vertex) {
                        return bad(line, format!("vertex {vertex} arrives twice"));
                    }
                    terminals.insert(*vertex);
                }
                TraceEvent::Depart { vertex, .. } => {
                    if !terminals.remove(vertex) {
                        return bad(line, format!("vertex {vertex} is not an active terminal"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Function events as engine events. Vertex events are skipped.
    pub fn function_events(&self) -> Result<Vec<Event>, CoreError> {
        let n = self.header.ground_size;
        let mut out = Vec::new();
        for ev in &self.events {
            match ev {
                TraceEvent::Insert { t, id, function } => out.push(Event {
                    t: *t,
                    action: Action::Insert(*id, Arc::new(function.build(n)?)),
                }),
                TraceEvent::Delete { t, id } => out.push(Event {
                    t: *t,
                    action: Action::Delete(*id),
                }),
                _ => {}
            }
        }
        Ok(out)
    }

    pub fn is_metric(&self) -> bool {
        self.header.points.is_some()
    }
}

mod erased {
    pub trait Json {
        fn to_line(&self) -> String;
    }

    impl<T: serde::Serialize> Json for T {
        fn to_line(&self) -> String {
            serde_json::to_string(self).expect("trace values serialize")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Hvc,
    Coverage,
    Junta,
    /// Juntas of small arity mixed with general coverage functions.
    Mixed,
    MetricMst,
    MetricSteiner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub kind: GenKind,
    /// Elements, or points for the metric kinds.
    pub n: usize,
    pub ops: usize,
    pub seed: u64,
    /// Size of the edge pool for hypergraph vertex cover; all pairs when absent.
    #[serde(default)]
    pub edges: Option<usize>,
    /// Edges per arriving function.
    #[serde(default = "one")]
    pub batch: usize,
    /// Depart the most recent live function instead of a random one.
    #[serde(default)]
    pub lifo: bool,
    /// `cmax / cmin`; 1 gives unit costs.
    #[serde(default = "unit_spread")]
    pub cost_spread: f64,
    /// Largest junta support.
    #[serde(default = "three")]
    pub r: usize,
    /// Largest number of items in one coverage function.
    #[serde(default = "four")]
    pub items: usize,
    #[serde(default = "insert_prob")]
    pub insert_prob: f64,
}

fn one() -> usize {
    1
}
fn three() -> usize {
    3
}
fn four() -> usize {
    4
}
fn unit_spread() -> f64 {
    1.0
}
fn insert_prob() -> f64 {
    0.6
}

impl GenParams {
    pub fn new(kind: GenKind, n: usize, ops: usize, seed: u64) -> Self {
        GenParams {
            kind,
            n,
            ops,
            seed,
            edges: None,
            batch: 1,
            lifo: false,
            cost_spread: 1.0,
            r: 3,
            items: 4,
            insert_prob: 0.6,
        }
    }
}

/// Generates a trace; the same parameters always give the same trace.
pub fn generate(p: &GenParams) -> Result<Trace, TraceError> {
    let bad = |m: &str| Err(TraceError::Params(m.into()));
    if p.n < 2 {
        return bad("need at least two elements or points");
    }
    if p.ops == 0 {
        return bad("need at least one event");
    }
    if p.cost_spread < 1.0 || !p.cost_spread.is_finite() {
        return bad("cost spread must be at least 1");
    }
    if !(0.0..=1.0).contains(&p.insert_prob) {
        return bad("insert probability must lie in [0, 1]");
    }
    if p.batch == 0 || p.r == 0 || p.items == 0 {
        return bad("batch, r and items must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    match p.kind {
        GenKind::MetricMst | GenKind::MetricSteiner => metric_trace(p, &mut rng),
        _ => function_trace(p, &mut rng),
    }
}

fn costs(p: &GenParams, rng: &mut ChaCha8Rng) -> Option<Vec<Rational>> {
    if p.cost_spread == 1.0 {
        return None;
    }
    let mut c: Vec<Rational> = (0..p.n)
        .map(|_| {
            Rational::round_from_f64(p.cost_spread.powf(rng.gen::<f64>()), 3).max(Rational::ONE)
        })
        .collect();
    c[0] = Rational::ONE;
    c[1] = Rational::round_from_f64(p.cost_spread, 3);
    Some(c)
}

fn pick_support(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<ElementId> {
    let mut all: Vec<ElementId> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(k.min(n));
    all.sort_unstable();
    all
}

fn hvc_function(p: &GenParams, pool: &[(usize, usize)], rng: &mut ChaCha8Rng) -> FunctionSpec {
    let batch: Vec<(usize, usize)> = (0..p.batch)
        .map(|_| *pool.choose(rng).expect("edge pool is nonempty"))
        .collect();
    if let [(a, b)] = batch[..] {
        return FunctionSpec::Junta {
            support: vec![a, b],
            table: None,
        };
    }
    let mut sets = vec![Vec::new(); p.n];
    for (i, &(a, b)) in batch.iter().enumerate() {
        sets[a].push(i as u64);
        sets[b].push(i as u64);
    }
    FunctionSpec::Coverage {
        sets,
        weights: Vec::new(),
    }
}

fn coverage_function(p: &GenParams, rng: &mut ChaCha8Rng) -> FunctionSpec {
    let items = rng.gen_range(1..=p.items);
    let mut sets = vec![Vec::new(); p.n];
    for item in 0..items as u64 {
        let holders = rng.gen_range(1..=3.min(p.n));
        for e in pick_support(p.n, holders, rng) {
            sets[e].push(item);
        }
    }
    FunctionSpec::Coverage {
        sets,
        weights: Vec::new(),
    }
}

/// A hitting indicator or a uniform-matroid rank `min(|S ∩ V|, k)`.
fn junta_function(p: &GenParams, rng: &mut ChaCha8Rng) -> FunctionSpec {
    let support = pick_support(p.n, rng.gen_range(1..=p.r), rng);
    let k = rng.gen_range(1..=support.len());
    if k == 1 {
        return FunctionSpec::Junta {
            support,
            table: None,
        };
    }
    let table = (0u32..1 << support.len())
        .map(|m| Rational::from(i64::from(m.count_ones().min(k as u32))))
        .collect();
    FunctionSpec::Junta {
        support,
        table: Some(table),
    }
}

fn function_trace(p: &GenParams, rng: &mut ChaCha8Rng) -> Result<Trace, TraceError> {
    let costs = costs(p, rng);
    let mut pool: Vec<(usize, usize)> = (0..p.n)
        .flat_map(|a| (a + 1..p.n).map(move |b| (a, b)))
        .collect();
    pool.shuffle(rng);
    if let Some(m) = p.edges {
        if m == 0 {
            return Err(TraceError::Params("edge pool must be nonempty".into()));
        }
        pool.truncate(m);
    }
    let mut events = Vec::new();
    let mut live: Vec<FunctionId> = Vec::new();
    let mut next_id = 0u64;
    let mut singleton_sums = vec![Rational::ZERO; p.n];
    let mut f_total = Rational::ZERO;
    for t in 0..p.ops {
        if live.is_empty() || rng.gen::<f64>() < p.insert_prob {
            let function = match p.kind {
                GenKind::Hvc => hvc_function(p, &pool, rng),
                GenKind::Coverage => coverage_function(p, rng),
                GenKind::Junta => junta_function(p, rng),
                _ => {
                    if rng.gen_bool(0.5) {
                        junta_function(p, rng)
                    } else {
                        coverage_function(p, rng)
                    }
                }
            };
            let g = function.build(p.n).map_err(|source| TraceError::Function {
                line: t + 2,
                source,
            })?;
            for (e, s) in singleton_sums.iter_mut().enumerate() {
                *s += g.eval(&ElementSet::singleton(e));
            }
            f_total += g.total();
            let id = FunctionId(next_id);
            next_id += 1;
            live.push(id);
            events.push(TraceEvent::Insert { t, id, function });
        } else {
            let i = if p.lifo {
                live.len() - 1
            } else {
                rng.gen_range(0..live.len())
            };
            let id = live.remove(i);
            events.push(TraceEvent::Delete { t, id });
        }
    }
    let header = TraceHeader {
        ground_size: p.n,
        costs,
        fmin: Some(Rational::ONE),
        fmax: Some(
            singleton_sums
                .into_iter()
                .max()
                .unwrap_or(Rational::ONE)
                .max(Rational::ONE),
        ),
        f_total: Some(f_total.max(Rational::ONE)),
        generator: Some(p.clone()),
        ..TraceHeader::default()
    };
    Ok(Trace { header, events })
}

fn metric_trace(p: &GenParams, rng: &mut ChaCha8Rng) -> Result<Trace, TraceError> {
    let points: Vec<Vec<f64>> = (0..p.n)
        .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()])
        .collect();
    let metric =
        Metric::from_points(&points).map_err(|source| TraceError::Function { line: 1, source })?;
    let mut pending: Vec<VertexId> = (0..p.n).collect();
    pending.shuffle(rng);
    let mut terminals: Vec<VertexId> = Vec::new();
    let mut events = Vec::new();
    for t in 0..p.ops {
        let arrive = !pending.is_empty()
            && (p.kind == GenKind::MetricMst
                || terminals.len() < 2
                || rng.gen::<f64>() < p.insert_prob);
        if arrive {
            let vertex = pending.pop().expect("pending is nonempty");
            terminals.push(vertex);
            events.push(TraceEvent::Arrive { t, vertex });
        } else if p.kind == GenKind::MetricSteiner && !terminals.is_empty() {
            let i = if p.lifo {
                terminals.len() - 1
            } else {
                rng.gen_range(0..terminals.len())
            };
            events.push(TraceEvent::Depart {
                t,
                vertex: terminals.remove(i),
            });
        } else {
            break;
        }
    }
    let header = TraceHeader {
        ground_size: p.n,
        aspect_ratio: Some(metric.aspect_ratio()),
        points: Some(points),
        generator: Some(p.clone()),
        ..TraceHeader::default()
    };
    Ok(Trace { header, events })
}
