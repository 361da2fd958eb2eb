use super::graph::{union_graph, HMatrix, WeightedDigraph};
use crate::error::{Error, Result};

/// Slack allowed when comparing switching gaps against the dwell time.
const TIME_EPS: f64 = 1e-12;

/// Interval `[start, end)` during which one graph is active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub graph: usize,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }
}

/// Piecewise-constant switching signal over a finite graph family.
///
/// `switches` lists `(t_k, graph index)` with `t_0 = 0`; the last graph stays
/// active forever unless a period is given, in which case the pattern on
/// `[0, period)` repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSchedule {
    graphs: Vec<WeightedDigraph>,
    switches: Vec<(f64, usize)>,
    dwell: f64,
    period: Option<f64>,
}

impl SwitchingSchedule {
    pub fn new(
        graphs: Vec<WeightedDigraph>,
        switches: Vec<(f64, usize)>,
        dwell: f64,
        period: Option<f64>,
    ) -> Result<Self> {
        let first = graphs
            .first()
            .ok_or_else(|| Error::Model("schedule needs at least one graph".into()))?;
        let nodes = first.node_count();
        if let Some(k) = graphs.iter().position(|g| g.node_count() != nodes) {
            return Err(Error::Model(format!(
                "graph {k} has {} nodes, graph 0 has {nodes}",
                graphs[k].node_count()
            )));
        }
        if !(dwell > 0.0) {
            return Err(Error::Model(format!(
                "dwell time must be positive, got {dwell}"
            )));
        }
        match switches.first() {
            Some((t, _)) if *t == 0.0 => {}
            _ => return Err(Error::Model("schedule must start at t = 0".into())),
        }
        for (k, (t, g)) in switches.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::Model(format!("switch {k} has a non-finite time")));
            }
            if *g >= graphs.len() {
                return Err(Error::Model(format!(
                    "switch {k} selects graph {g}, only {} defined",
                    graphs.len()
                )));
            }
            if k > 0 {
                let gap = t - switches[k - 1].0;
                if gap < dwell - TIME_EPS {
                    return Err(Error::Model(format!(
                        "switch {k} at t = {t} is {gap} after the previous one, below the dwell time {dwell}"
                    )));
                }
            }
        }
        if let Some(p) = period {
            let last = switches.last().expect("non-empty").0;
            if !(p.is_finite() && p - last >= dwell - TIME_EPS) {
                return Err(Error::Model(format!(
                    "period {p} must exceed the last switch time {last} by at least the dwell time"
                )));
            }
        }
        Ok(SwitchingSchedule {
            graphs,
            switches,
            dwell,
            period,
        })
    }

    /// A single graph active for all time.
    pub fn fixed(graph: WeightedDigraph) -> Self {
        SwitchingSchedule {
            graphs: vec![graph],
            switches: vec![(0.0, 0)],
            dwell: f64::INFINITY,
            period: None,
        }
    }

    pub fn graphs(&self) -> &[WeightedDigraph] {
        &self.graphs
    }

    pub fn switches(&self) -> &[(f64, usize)] {
        &self.switches
    }

    pub fn dwell(&self) -> f64 {
        self.dwell
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn node_count(&self) -> usize {
        self.graphs[0].node_count()
    }

    pub fn followers(&self) -> usize {
        self.node_count() - 1
    }

    /// True when only one graph is ever active.
    pub fn is_static(&self) -> bool {
        let g0 = self.switches[0].1;
        self.switches.iter().all(|(_, g)| *g == g0)
    }

    /// Index of the graph active for all time, if any.
    pub fn static_graph(&self) -> Option<usize> {
        self.is_static().then_some(self.switches[0].1)
    }

    pub fn all_undirected(&self) -> bool {
        self.graphs.iter().all(|g| g.is_undirected())
    }

    /// Graph active at time `t` (intervals closed on the left).
    pub fn active_at(&self, t: f64) -> usize {
        let t = match self.period {
            Some(p) => t.rem_euclid(p),
            None => t,
        };
        let k = self.switches.partition_point(|(s, _)| *s <= t);
        self.switches[k.saturating_sub(1)].1
    }

    /// Segments covering `[0, horizon)`, with adjacent segments on the same
    /// graph merged.
    pub fn segments(&self, horizon: f64) -> Vec<Segment> {
        let mut raw: Vec<Segment> = Vec::new();
        let mut push = |start: f64, end: f64, graph: usize| {
            let end = end.min(horizon);
            if end > start {
                match raw.last_mut() {
                    Some(last) if last.graph == graph && last.end == start => last.end = end,
                    _ => raw.push(Segment { start, end, graph }),
                }
            }
        };
        match self.period {
            None => {
                for (k, (t, g)) in self.switches.iter().enumerate() {
                    if *t >= horizon {
                        break;
                    }
                    let end = self.switches.get(k + 1).map_or(horizon, |s| s.0);
                    push(*t, end, *g);
                }
            }
            Some(p) => {
                let mut cycle = 0u64;
                'outer: loop {
                    let base = cycle as f64 * p;
                    for (k, (t, g)) in self.switches.iter().enumerate() {
                        let start = base + t;
                        if start >= horizon {
                            break 'outer;
                        }
                        let end = base + self.switches.get(k + 1).map_or(p, |s| s.0);
                        push(start, end, *g);
                    }
                    cycle += 1;
                }
            }
        }
        raw
    }

    pub fn h_matrices(&self) -> Vec<HMatrix> {
        self.graphs
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let mut h = g.h_matrix();
                h.graph_index = k;
                h
            })
            .collect()
    }

    /// Indices of graphs that are active on some interval within `[0, horizon)`.
    pub fn graphs_used(&self, horizon: f64) -> Vec<usize> {
        let mut used: Vec<usize> = self.segments(horizon).iter().map(|s| s.graph).collect();
        used.sort_unstable();
        used.dedup();
        used
    }
}

/// Window `[start, end)` used by the joint-connectivity certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointConnectivity {
    pub certified: bool,
    /// Consecutive windows whose union graphs reach every follower.
    pub windows: Vec<Window>,
    /// First window for which no admissible closing point was found.
    pub failing: Option<Window>,
}

/// Greedy certificate that `[0, horizon)` can be tiled by windows of length
/// at most `window` whose union graphs are leader-reachable.
///
/// Each window starts where the previous one closed and closes at the
/// earliest segment boundary that makes its union reachable; a window that
/// sees no boundary closes at `start + window`. A failure means "not certified"; some other subsequence of
/// switching instants might still work.
pub fn verify_jointly_connected(
    sched: &SwitchingSchedule,
    window: f64,
    horizon: f64,
) -> Result<JointConnectivity> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::Model(format!(
            "window length must be positive, got {window}"
        )));
    }
    let segs = sched.segments(horizon + window);
    let mut windows = Vec::new();
    let mut start = 0.0;
    while start < horizon {
        let limit = start + window;
        let mut ends: Vec<f64> = segs
            .iter()
            .map(|s| s.end)
            .filter(|e| *e > start && *e <= limit)
            .collect();
        // Inside a single segment a window may close anywhere: the cut is a
        // switch to the same graph.
        if ends.is_empty() {
            ends.push(limit);
        }
        let mut closed = None;
        for end in ends {
            let active: Vec<&WeightedDigraph> = segs
                .iter()
                .filter(|s| s.start < end && s.end > start)
                .map(|s| &sched.graphs()[s.graph])
                .collect();
            if !active.is_empty() && union_graph(&active)?.reachable_from_leader() {
                closed = Some(end);
                break;
            }
        }
        match closed {
            Some(end) => {
                windows.push(Window { start, end });
                start = end;
            }
            None => {
                return Ok(JointConnectivity {
                    certified: false,
                    windows,
                    failing: Some(Window { start, end: limit }),
                })
            }
        }
    }
    Ok(JointConnectivity {
        certified: true,
        windows,
        failing: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Edge;

    fn alternating() -> SwitchingSchedule {
        let g1 = WeightedDigraph::from_edges(2, &[Edge::new(0, 1, 1.0)], false).unwrap();
        let g2 = WeightedDigraph::from_edges(2, &[Edge::new(1, 2, 1.0)], false).unwrap();
        SwitchingSchedule::new(vec![g1, g2], vec![(0.0, 0), (0.5, 1)], 0.5, Some(1.0)).unwrap()
    }

    #[test]
    fn alternating_pair_is_jointly_connected() {
        let v = verify_jointly_connected(&alternating(), 1.0, 10.0).unwrap();
        assert!(v.certified);
        assert_eq!(v.windows.len(), 10);
        assert_eq!(
            v.windows[0],
            Window {
                start: 0.0,
                end: 1.0
            }
        );
    }

    #[test]
    fn empty_graph_fails_first_window() {
        let s = SwitchingSchedule::fixed(WeightedDigraph::empty(2, false));
        let v = verify_jointly_connected(&s, 2.0, 10.0).unwrap();
        assert!(!v.certified);
        assert_eq!(
            v.failing,
            Some(Window {
                start: 0.0,
                end: 2.0
            })
        );
    }

    #[test]
    fn static_connected_graph_certifies() {
        let g =
            WeightedDigraph::from_edges(2, &[Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)], false)
                .unwrap();
        let s = SwitchingSchedule::fixed(g);
        for nu in [0.1, 1.0, 7.0] {
            assert!(verify_jointly_connected(&s, nu, 5.0).unwrap().certified);
        }
    }

    #[test]
    fn short_window_is_not_certified() {
        let v = verify_jointly_connected(&alternating(), 0.6, 10.0).unwrap();
        assert!(!v.certified);
    }

    #[test]
    fn segments_and_activity() {
        let s = alternating();
        let segs = s.segments(2.25);
        assert_eq!(segs.len(), 5);
        assert_eq!(
            segs[4],
            Segment {
                start: 2.0,
                end: 2.25,
                graph: 0
            }
        );
        assert_eq!(s.active_at(0.49), 0);
        assert_eq!(s.active_at(0.5), 1);
        assert_eq!(s.active_at(1.0), 0);
        assert_eq!(s.active_at(7.75), 1);
    }

    #[test]
    fn redundant_switches_merge() {
        let g = WeightedDigraph::empty(1, false);
        let s =
            SwitchingSchedule::new(vec![g], vec![(0.0, 0), (1.0, 0), (2.0, 0)], 0.5, None).unwrap();
        assert_eq!(
            s.segments(3.0),
            vec![Segment {
                start: 0.0,
                end: 3.0,
                graph: 0
            }]
        );
        assert!(s.is_static());
    }

    #[test]
    fn dwell_violation_rejected() {
        let g = WeightedDigraph::empty(1, false);
        let r = SwitchingSchedule::new(vec![g.clone(), g], vec![(0.0, 0), (0.2, 1)], 0.5, None);
        assert!(r.is_err());
    }
}
