//! TOML scenario files.
//!
//! Matrices are row-major nested arrays. A file describes either a single
//! `[exosystem]`, a `[containment]` set of leaders, or per-agent
//! `[agents.local]` exosystems; all three load into the same `Scenario`.

use std::ops::Range;

use coopreg_core::numkit::{from_rows, to_rows, RealMatrix, RealVector};
use coopreg_core::plantmodel::{build_containment, localize_exogenous, LocalAgent};
use coopreg_core::topology::Edge;
use coopreg_core::{
    DesignChoice, Exosystem, InitialEstimate, LawConfig, LawKind, ObserverVariant, PlantAgent,
    Scenario, SwitchingSchedule, WeightedDigraph,
};
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::CliError;

type Mat = Spanned<Vec<Vec<f64>>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exosystem: Option<ExoSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub containment: Option<ContainmentSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agents: Vec<AgentSection>,
    pub topology: TopologySection,
    pub sim: SimSection,
    #[serde(default)]
    pub law: LawSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExoSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_u: Option<Mat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_m: Option<Mat>,
    /// Defaults to the identity (whole `v_m` measured).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_m0: Option<Mat>,
    pub v0: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderSection {
    pub s: Mat,
    pub v0: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainmentSection {
    pub leaders: Vec<LeaderSection>,
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalSection {
    pub s: Mat,
    pub v0: Vec<f64>,
}

/// One follower. Omitted blocks are zero, except the measurement, which
/// defaults to the regulated output (`C_m = C`, `D_m = D`, `F_mu = F_u`,
/// `F_mm = F_m`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Mat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_u: Option<Mat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_m: Option<Mat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_m: Option<Mat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_m: Option<Mat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_mu: Option<Mat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_mm: Option<Mat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_u: Option<Mat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_m: Option<Mat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local: Option<LocalSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    #[serde(default)]
    pub undirected: bool,
    /// `[from, to, weight]`; node 0 is the leader.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize, f64)>>,
    /// Full `(N+1)×(N+1)` matrix, `a_ij` = weight of `j → i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Mat>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub followers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    /// `[t, graph index]`; defaults to graph 0 forever.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<(f64, usize)>>,
    pub graphs: Vec<GraphSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_step() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EstimateSpec {
    Named(String),
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<LawKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta0: Option<EstimateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<EstimateSpec>,
}

/// A parsed scenario with its law configuration.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub law: LawConfig,
}

/// 1-based line and column of a byte offset.
pub fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let col = before
        .rfind('\n')
        .map_or(before.len(), |p| before.len() - p - 1)
        + 1;
    (line, col)
}

struct Ctx<'a> {
    source: &'a str,
}

impl Ctx<'_> {
    fn err(&self, span: Option<Range<usize>>, msg: impl Into<String>) -> CliError {
        let (line, column) = span.map_or((0, 0), |s| line_col(self.source, s.start));
        CliError::Parse {
            line,
            column,
            message: msg.into(),
        }
    }

    /// Reads a matrix, checking any expected dimensions. Arrays without
    /// entries stand for zero-size blocks.
    fn mat(
        &self,
        m: &Mat,
        what: &str,
        rows: Option<usize>,
        cols: Option<usize>,
    ) -> Result<RealMatrix, CliError> {
        let data = m.get_ref();
        if data.iter().all(|r| r.is_empty()) {
            let r = rows.unwrap_or(data.len());
            if !data.is_empty() && data.len() != r {
                return Err(self.err(
                    Some(m.span()),
                    format!("{what}: {} rows, expected {r}", data.len()),
                ));
            }
            return Ok(RealMatrix::zeros(r, cols.unwrap_or(0)));
        }
        if let Some(k) = data.iter().position(|r| r.len() != data[0].len()) {
            return Err(self.err(
                Some(m.span()),
                format!(
                    "{what}: row {} has {} entries, row 1 has {}",
                    k + 1,
                    data[k].len(),
                    data[0].len()
                ),
            ));
        }
        let out = from_rows(data).map_err(|e| self.err(Some(m.span()), format!("{what}: {e}")))?;
        if let Some(c) = cols {
            if out.ncols() != c {
                return Err(self.err(
                    Some(m.span()),
                    format!("{what}: {} columns, expected {c}", out.ncols()),
                ));
            }
        }
        if let Some(r) = rows {
            if out.nrows() != r {
                return Err(self.err(
                    Some(m.span()),
                    format!("{what}: {} rows, expected {r}", out.nrows()),
                ));
            }
        }
        Ok(out)
    }

    fn opt(
        &self,
        m: &Option<Mat>,
        what: &str,
        rows: Option<usize>,
        cols: Option<usize>,
    ) -> Result<Option<RealMatrix>, CliError> {
        m.as_ref()
            .map(|m| self.mat(m, what, rows, cols))
            .transpose()
    }

    fn agent(
        &self,
        k: usize,
        s: &AgentSection,
        q_u: usize,
        q_m: usize,
    ) -> Result<PlantAgent, CliError> {
        let name = |b: &str| format!("agents[{k}].{b}");
        let a = self.mat(&s.a, &name("a"), None, None)?;
        let n = a.nrows();
        let b = self.mat(&s.b, &name("b"), Some(n), None)?;
        let c = self.mat(&s.c, &name("c"), None, Some(n))?;
        let (m, p) = (b.ncols(), c.nrows());
        let mut ag = PlantAgent::new(a, b, c, q_u, q_m);
        if let Some(d) = self.opt(&s.d, &name("d"), Some(p), Some(m))? {
            ag = ag.with_feedthrough(d);
        }
        if let Some(e) = self.opt(&s.e_u, &name("e_u"), Some(n), Some(q_u))? {
            ag.e_u = e;
        }
        if let Some(e) = self.opt(&s.e_m, &name("e_m"), Some(n), Some(q_m))? {
            ag.e_m = e;
        }
        if let Some(f) = self.opt(&s.f_u, &name("f_u"), Some(p), Some(q_u))? {
            ag.f_u = f.clone();
            ag.f_mu = f;
        }
        if let Some(f) = self.opt(&s.f_m, &name("f_m"), Some(p), Some(q_m))? {
            ag.f_m = f.clone();
            ag.f_mm = f;
        }
        if let Some(cm) = self.opt(&s.c_m, &name("c_m"), None, Some(n))? {
            let pm = cm.nrows();
            if pm != p {
                ag.d_m = RealMatrix::zeros(pm, m);
                ag.f_mu = RealMatrix::zeros(pm, q_u);
                ag.f_mm = RealMatrix::zeros(pm, q_m);
            }
            ag.c_m = cm;
        }
        let pm = ag.c_m.nrows();
        if let Some(d) = self.opt(&s.d_m, &name("d_m"), Some(pm), Some(m))? {
            ag.d_m = d;
        }
        if let Some(f) = self.opt(&s.f_mu, &name("f_mu"), Some(pm), Some(q_u))? {
            ag.f_mu = f;
        }
        if let Some(f) = self.opt(&s.f_mm, &name("f_mm"), Some(pm), Some(q_m))? {
            ag.f_mm = f;
        }
        if let Some(x0) = &s.x0 {
            if x0.len() != n {
                return Err(self.err(
                    Some(s.a.span()),
                    format!("{}: {} entries, state dimension {n}", name("x0"), x0.len()),
                ));
            }
            ag.x0 = RealVector::from_column_slice(x0);
        }
        Ok(ag)
    }
}

fn core_err(e: coopreg_core::Error) -> CliError {
    CliError::Parse {
        line: 0,
        column: 0,
        message: e.to_string(),
    }
}

fn estimate(spec: &Option<EstimateSpec>, what: &str) -> Result<InitialEstimate, CliError> {
    match spec {
        None => Ok(InitialEstimate::Zero),
        Some(EstimateSpec::Named(s)) => match s.as_str() {
            "zero" => Ok(InitialEstimate::Zero),
            "leader" => Ok(InitialEstimate::Leader),
            other => Err(CliError::Parse {
                line: 0,
                column: 0,
                message: format!("law.{what}: expected \"zero\", \"leader\" or a list of vectors, got \"{other}\""),
            }),
        },
        Some(EstimateSpec::Explicit(v)) => Ok(InitialEstimate::Explicit(
            v.iter().map(|e| RealVector::from_column_slice(e)).collect(),
        )),
    }
}

impl LawSection {
    pub fn to_config(&self) -> Result<LawConfig, CliError> {
        let d = LawConfig::default();
        Ok(LawConfig {
            kind: self.kind.unwrap_or(d.kind),
            observer: match &self.observer {
                Some(s) => s.parse::<ObserverVariant>().map_err(core_err)?,
                None => d.observer,
            },
            design: match &self.design {
                Some(s) => s.parse::<DesignChoice>().map_err(core_err)?,
                None => d.design,
            },
            mu: self.mu,
            mu_scale: self.mu_scale.unwrap_or(d.mu_scale),
            mu1: self.mu1.unwrap_or(d.mu1),
            mu2: self.mu2.unwrap_or(d.mu2),
            threshold: self.threshold.unwrap_or(d.threshold),
            eta0: estimate(&self.eta0, "eta0")?,
            s0: estimate(&self.s0, "s0")?,
        })
    }

    pub fn from_config(cfg: &LawConfig) -> Self {
        let est = |e: &InitialEstimate| match e {
            InitialEstimate::Zero => None,
            InitialEstimate::Leader => Some(EstimateSpec::Named("leader".into())),
            InitialEstimate::Explicit(v) => Some(EstimateSpec::Explicit(
                v.iter().map(|x| x.iter().copied().collect()).collect(),
            )),
        };
        LawSection {
            kind: Some(cfg.kind),
            observer: Some(cfg.observer.as_str().into()),
            design: Some(cfg.design.as_str().into()),
            mu: cfg.mu,
            mu_scale: Some(cfg.mu_scale),
            mu1: Some(cfg.mu1),
            mu2: Some(cfg.mu2),
            threshold: Some(cfg.threshold),
            eta0: est(&cfg.eta0),
            s0: est(&cfg.s0),
        }
    }
}

fn graph(
    ctx: &Ctx,
    k: usize,
    g: &GraphSection,
    followers: usize,
) -> Result<WeightedDigraph, CliError> {
    let built = match (&g.edges, &g.adjacency) {
        (Some(edges), None) => {
            let edges: Vec<Edge> = edges
                .iter()
                .map(|(f, t, w)| Edge::new(*f, *t, *w))
                .collect();
            WeightedDigraph::from_edges(followers, &edges, g.undirected)
        }
        (None, Some(adj)) => {
            let m = ctx.mat(
                adj,
                &format!("topology.graphs[{k}].adjacency"),
                Some(followers + 1),
                Some(followers + 1),
            )?;
            WeightedDigraph::from_adjacency(m, g.undirected)
        }
        (None, None) => Ok(WeightedDigraph::empty(followers, g.undirected)),
        (Some(_), Some(_)) => {
            return Err(ctx.err(
                None,
                format!("topology.graphs[{k}]: give either edges or adjacency, not both"),
            ))
        }
    };
    built.map_err(|e| ctx.err(None, format!("topology.graphs[{k}]: {e}")))
}

/// Parses a scenario document.
pub fn parse_scenario(source: &str) -> Result<Loaded, CliError> {
    let file: ScenarioFile = toml::from_str(source).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(source, s.start));
        CliError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let ctx = Ctx { source };
    let law = file.law.to_config()?;

    let t = &file.topology;
    let graphs = t
        .graphs
        .iter()
        .enumerate()
        .map(|(k, g)| graph(&ctx, k, g, t.followers))
        .collect::<Result<Vec<_>, _>>()?;
    let topology = match (&t.schedule, t.dwell) {
        (None, None) if graphs.len() == 1 => {
            SwitchingSchedule::fixed(graphs.into_iter().next().expect("one graph"))
        }
        (sched, dwell) => SwitchingSchedule::new(
            graphs,
            sched.clone().unwrap_or_else(|| vec![(0.0, 0)]),
            dwell.unwrap_or(f64::INFINITY),
            t.period,
        )
        .map_err(|e| ctx.err(None, format!("topology: {e}")))?,
    };
    let (horizon, step) = (file.sim.horizon, file.sim.step);

    let locals = file.agents.iter().filter(|a| a.local.is_some()).count();
    let sources = [
        file.exosystem.is_some(),
        file.containment.is_some(),
        locals > 0,
    ]
    .iter()
    .filter(|x| **x)
    .count();
    if sources != 1 {
        return Err(ctx.err(
            None,
            "give exactly one of [exosystem], [containment] or per-agent [agents.local]",
        ));
    }
    let scenario = if let Some(exo) = &file.exosystem {
        let s_u = ctx
            .opt(&exo.s_u, "exosystem.s_u", None, None)?
            .unwrap_or_else(|| RealMatrix::zeros(0, 0));
        let s_m = ctx
            .opt(&exo.s_m, "exosystem.s_m", None, None)?
            .unwrap_or_else(|| RealMatrix::zeros(0, 0));
        let q_m = s_m.nrows();
        let c_m0 = ctx
            .opt(&exo.c_m0, "exosystem.c_m0", None, Some(q_m))?
            .unwrap_or_else(|| RealMatrix::identity(q_m, q_m));
        let (q_u, q_m) = (s_u.nrows(), s_m.nrows());
        let exo = Exosystem::new(s_u, s_m, c_m0, RealVector::from_column_slice(&exo.v0))
            .map_err(|e| ctx.err(None, format!("exosystem: {e}")))?;
        let agents = file
            .agents
            .iter()
            .enumerate()
            .map(|(k, a)| ctx.agent(k, a, q_u, q_m))
            .collect::<Result<Vec<_>, _>>()?;
        Scenario::new(agents, exo, topology, horizon, step).map_err(core_err)?
    } else if let Some(c) = &file.containment {
        let leaders = c
            .leaders
            .iter()
            .enumerate()
            .map(|(k, l)| {
                Ok((
                    ctx.mat(&l.s, &format!("containment.leaders[{k}].s"), None, None)?,
                    RealVector::from_column_slice(&l.v0),
                ))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let q: usize = leaders.iter().map(|(s, _)| s.nrows()).sum();
        let agents = file
            .agents
            .iter()
            .enumerate()
            .map(|(k, a)| ctx.agent(k, a, 0, q))
            .collect::<Result<Vec<_>, _>>()?;
        build_containment(&leaders, &c.alphas, agents, topology, horizon, step).map_err(core_err)?
    } else {
        if locals != file.agents.len() {
            return Err(ctx.err(
                None,
                "either every agent has a local exosystem or none does",
            ));
        }
        let locals = file
            .agents
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let l = a.local.as_ref().expect("counted");
                let s = ctx.mat(&l.s, &format!("agents[{k}].local.s"), None, None)?;
                let agent = ctx.agent(k, a, 0, s.nrows())?;
                Ok(LocalAgent {
                    agent,
                    s,
                    v0: RealVector::from_column_slice(&l.v0),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        localize_exogenous(locals, topology, horizon, step).map_err(core_err)?
    };
    let scenario = match t.window {
        Some(w) => scenario.with_window(w),
        None => scenario,
    };
    Ok(Loaded { scenario, law })
}

fn spanned(m: &RealMatrix) -> Mat {
    Spanned::new(0..0, to_rows(m))
}

fn differs(m: &RealMatrix, default: &RealMatrix) -> bool {
    m != default && !m.is_empty()
}

/// Expanded (single-exosystem) form of a scenario; parsing it back gives
/// the same `Scenario`.
pub fn to_file(sc: &Scenario, law: &LawConfig) -> ScenarioFile {
    let nonempty = |m: &RealMatrix| (m.nrows() > 0).then(|| spanned(m));
    let exo = &sc.exo;
    let exosystem = ExoSection {
        s_u: nonempty(exo.s_u()),
        s_m: nonempty(exo.s_m()),
        c_m0: (exo.c_m0() != &RealMatrix::identity(exo.q_m(), exo.q_m()))
            .then(|| spanned(exo.c_m0())),
        v0: exo.v0().iter().copied().collect(),
    };
    let agents = sc
        .agents
        .iter()
        .map(|a| {
            let (n, m, p) = (a.n(), a.m(), a.p());
            let zero = RealMatrix::zeros;
            let mut s = AgentSection {
                a: spanned(&a.a),
                b: spanned(&a.b),
                c: spanned(&a.c),
                d: None,
                e_u: None,
                e_m: None,
                c_m: None,
                d_m: None,
                f_mu: None,
                f_mm: None,
                f_u: None,
                f_m: None,
                x0: None,
                local: None,
            };
            s.d = differs(&a.d, &zero(p, m)).then(|| spanned(&a.d));
            s.e_u = differs(&a.e_u, &zero(n, a.q_u())).then(|| spanned(&a.e_u));
            s.e_m = differs(&a.e_m, &zero(n, a.q_m())).then(|| spanned(&a.e_m));
            s.f_u = differs(&a.f_u, &zero(p, a.q_u())).then(|| spanned(&a.f_u));
            s.f_m = differs(&a.f_m, &zero(p, a.q_m())).then(|| spanned(&a.f_m));
            if a.c_m != a.c {
                s.c_m = Some(spanned(&a.c_m));
            }
            let same_rows = a.c_m.nrows() == p;
            let keep = |mat: &RealMatrix, default: &RealMatrix| {
                (!same_rows && !mat.is_empty()) || (same_rows && differs(mat, default))
            };
            s.d_m = keep(&a.d_m, &a.d).then(|| spanned(&a.d_m));
            s.f_mu = keep(&a.f_mu, &a.f_u).then(|| spanned(&a.f_mu));
            s.f_mm = keep(&a.f_mm, &a.f_m).then(|| spanned(&a.f_mm));
            s.x0 =
                a.x0.iter()
                    .any(|x| *x != 0.0)
                    .then(|| a.x0.iter().copied().collect());
            s
        })
        .collect();
    let t = &sc.topology;
    let topology = TopologySection {
        followers: t.followers(),
        dwell: t.dwell().is_finite().then(|| t.dwell()),
        period: t.period(),
        window: sc.window,
        schedule: Some(t.switches().to_vec()),
        graphs: t
            .graphs()
            .iter()
            .map(|g| GraphSection {
                undirected: g.is_undirected(),
                edges: None,
                adjacency: Some(spanned(g.adjacency())),
            })
            .collect(),
    };
    ScenarioFile {
        exosystem: Some(exosystem),
        containment: None,
        agents,
        topology,
        sim: SimSection {
            horizon: sc.horizon,
            step: sc.step,
        },
        law: LawSection::from_config(law),
    }
}

pub fn to_toml(sc: &Scenario, law: &LawConfig) -> Result<String, CliError> {
    toml::to_string(&to_file(sc, law))
        .map_err(|e| CliError::Io(format!("serializing scenario: {e}")))
}
