//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use coopreg_cli::{cmd_sweep, parse_scenario, Loaded, Overrides, SweepGrid};
use coopreg_core::numkit::{
    are_residual, eigenvalues, is_hurwitz, match_multisets, pbh_stabilizable, solve_are,
    spectral_radius, Complex64, RealMatrix, RealVector,
};
use coopreg_core::observers::{error_matrix, error_system};
use coopreg_core::simkit::{assemble, integrate, run, verify_separation};
use coopreg_core::synthesis::{check_rank_condition, solve_regulator, synthesize};
use coopreg_core::topology::{Edge, WeightedDigraph};
use coopreg_core::{ControlLaw, DesignPath, InitialEstimate, LawKind, PlantAgent, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REGULATOR_RTOL: f64 = 1e-9;
const ARE_TOL: f64 = 1e-8;
const SPECTRUM_TOL: f64 = 1e-7;
const TRACKING_TOL: f64 = 1e-3;
const SWITCHING_TOL: f64 = 1e-2;
const DISCRETE_TOL: f64 = 1e-6;
const ADAPTIVE_TOL: f64 = 1e-2;
const SYNC_TOL: f64 = 1e-4;
const COLLAPSE_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fixture(name: &str) -> Loaded {
    let path: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "fixtures",
        &format!("{name}.toml"),
    ]
    .iter()
    .collect();
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_scenario(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn fixture_path(name: &str) -> PathBuf {
    [
        env!("CARGO_MANIFEST_DIR"),
        "fixtures",
        &format!("{name}.toml"),
    ]
    .iter()
    .collect()
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> RealMatrix {
    RealMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let el = start.elapsed();
    (
        el <= limit,
        format!("{:.2} s (limit {} s)", el.as_secs_f64(), limit.as_secs()),
    )
}

fn c1_regulator() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut tested, mut worst) = (0, 0.0f64);
    while tested < 50 {
        let n = rng.random_range(1..=4);
        let q = rng.random_range(1..=4);
        let p = rng.random_range(1..=2);
        let m = rng.random_range(p..=3);
        let s = random_matrix(&mut rng, q, q);
        let agent = PlantAgent::new(
            random_matrix(&mut rng, n, n),
            random_matrix(&mut rng, n, m),
            random_matrix(&mut rng, p, n),
            0,
            q,
        )
        .with_feedthrough(random_matrix(&mut rng, p, m))
        .with_disturbance(&random_matrix(&mut rng, n, q))
        .unwrap()
        .with_error_map(&random_matrix(&mut rng, p, q))
        .unwrap();
        if !check_rank_condition(&agent, &s).unwrap().pass {
            continue;
        }
        tested += 1;
        let sol = match solve_regulator(&agent, &s) {
            Ok(sol) => sol,
            Err(e) => return outcome(false, format!("agent {tested}: {e}")),
        };
        // residuals recomputed from the raw equations
        let r1 = &sol.x * &s - &agent.a * &sol.x - &agent.b * &sol.u - agent.e();
        let r2 = &agent.c * &sol.x + &agent.d * &sol.u + agent.f();
        let rhs = agent.e().norm().hypot(agent.f().norm());
        let rel = r1.norm().hypot(r2.norm()) / (1.0 + rhs);
        worst = worst.max(rel);
    }
    let (fast, time) = within(Duration::from_secs(5), start);
    outcome(
        worst < REGULATOR_RTOL && fast,
        format!("50 agents, worst scaled residual {worst:.2e}, {time}"),
    )
}

fn c2_riccati() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut tested, mut worst) = (0, 0.0f64);
    while tested < 100 {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=3);
        let a = random_matrix(&mut rng, n, n);
        let b = random_matrix(&mut rng, n, m);
        if !pbh_stabilizable(&a, &b).unwrap() {
            continue;
        }
        tested += 1;
        let p = match solve_are(&a, &b) {
            Ok(p) => p,
            Err(e) => return outcome(false, format!("pair {tested}: {e}")),
        };
        let res = are_residual(&a, &b, &p);
        worst = worst.max(res);
        if !is_hurwitz(&(&a - &b * b.transpose() * &p), 0.0).unwrap() {
            return outcome(false, format!("pair {tested}: A - BB^T P not Hurwitz"));
        }
    }
    let (fast, time) = within(Duration::from_secs(10), start);
    outcome(
        worst < ARE_TOL && fast,
        format!("100 pairs, worst residual {worst:.2e}, all closed loops Hurwitz, {time}"),
    )
}

fn c3_separation() -> Outcome {
    let start = Instant::now();
    let l = fixture("harmonic_chain");
    let law = ControlLaw::new(synthesize(&l.scenario, &l.law).unwrap()).unwrap();
    let rep = verify_separation(&l.scenario, &law, SPECTRUM_TOL).unwrap();
    let (fast, time) = within(Duration::from_secs(1), start);
    outcome(
        rep.passed() && fast,
        format!(
            "{} eigenvalues, max deviation {:.2e}, {time}",
            rep.closed_loop.len(),
            rep.matching.max_deviation
        ),
    )
}

fn final_window_tracking(tr: &Trajectory, from: f64) -> f64 {
    tr.sup_after(from, |k| tr.tracking_error(k))
}

fn c4_static_tracking() -> Outcome {
    let start = Instant::now();
    let l = fixture("harmonic_chain");
    let sc = &l.scenario;
    let out = run(sc, &l.law, None).unwrap();
    let obs = out.gains.observer.as_ref().unwrap();
    let delta = obs.graph_constant.unwrap();
    let mu_ok = obs.path == DesignPath::StaticRiccati && (obs.mu - 1.0 / delta).abs() < 1e-12;
    let err = final_window_tracking(&out.trajectory, 27.0);
    let setup =
        sc.agents.len() == 4 && sc.horizon == 30.0 && sc.step == 1e-3 && sc.topology.is_static();
    let (fast, time) = within(Duration::from_secs(30), start);
    outcome(
        err < TRACKING_TOL && mu_ok && setup && fast,
        format!(
            "max |e_i| on [27, 30] = {err:.2e}, mu = {:.4} = 1/delta, {time}",
            obs.mu
        ),
    )
}

fn c5_switching() -> Outcome {
    let start = Instant::now();
    let l = fixture("jointly_connected_cycle");
    let sc = &l.scenario;
    let t = &sc.topology;
    let each_disconnected = t.graphs().iter().all(|g| !g.reachable_from_leader());
    let undirected = t.graphs().len() == 4 && t.all_undirected() && t.dwell() == 0.5;
    let out = run(sc, &l.law, None).unwrap();
    let obs = out.gains.observer.as_ref().unwrap();
    let path_ok = obs.path == DesignPath::SwitchingMarginal && obs.mu == 1.0;
    let tr = &out.trajectory;
    let obs_err = tr.sup_after(50.0, |k| tr.observer_error(k).unwrap());
    let track = tr.sup_after(tr.final_time() - 1e-9, |k| tr.tracking_error(k));
    let (fast, time) = within(Duration::from_secs(60), start);
    outcome(
        each_disconnected && undirected && path_ok && obs_err < SWITCHING_TOL && track < SWITCHING_TOL && fast,
        format!("sup observer error on [50, 60] = {obs_err:.2e}, tracking error at t = 60 = {track:.2e}, {time}"),
    )
}

fn c6_eigen_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let q = rng.random_range(1..=3);
        let n = rng.random_range(1..=4);
        let s = random_matrix(&mut rng, q, q);
        let mut edges = vec![Edge::new(0, 1, rng.random_range(0.5..2.0))];
        for to in 1..=n {
            for from in 0..=n {
                if from != to && rng.random_bool(0.4) {
                    edges.push(Edge::new(from, to, rng.random_range(0.1..2.0)));
                }
            }
        }
        let g = WeightedDigraph::from_edges(n, &edges, false).unwrap();
        let h = g.h_matrix().matrix;
        let mu = rng.random_range(0.1..3.0);
        let id = RealMatrix::identity(q, q);
        let lhs = eigenvalues(&error_matrix(&s, &id, &id, mu, &h)).unwrap();
        let ls = eigenvalues(&s).unwrap();
        let lh = eigenvalues(&h).unwrap();
        let rhs: Vec<Complex64> = ls
            .iter()
            .flat_map(|a| lh.iter().map(move |b| a - b * mu))
            .collect();
        let m = match_multisets(&lhs, &rhs, SPECTRUM_TOL);
        if !m.matches() {
            return outcome(
                false,
                format!("case {case}: unmatched {:?}", m.unmatched_left),
            );
        }
        worst = worst.max(m.max_deviation);
    }
    outcome(true, format!("20 random (S, H), max deviation {worst:.2e}"))
}

fn c7_discrete() -> Outcome {
    let l = fixture("discrete_rotation");
    let sc = &l.scenario;
    let out = run(sc, &l.law, None).unwrap();
    let obs = out.gains.observer.as_ref().unwrap();
    let at_bound = obs
        .mu_bound
        .is_some_and(|b| (b - obs.mu).abs() <= 1e-12 * b);
    let symmetric = sc.topology.graphs().iter().all(|g| g.is_undirected());
    let radii: Vec<f64> = error_system(sc.exo.s_m(), obs, sc.exo.c_m0(), &sc.topology)
        .iter()
        .map(|m| spectral_radius(m).unwrap())
        .collect();
    let rho = radii.iter().copied().fold(0.0, f64::max);
    let tr = &out.trajectory;
    let err = tr.sup_after(500.0, |k| tr.observer_error(k).unwrap());
    outcome(
        rho < 1.0 && at_bound && symmetric && err < DISCRETE_TOL && tr.final_time() == 500.0,
        format!(
            "max spectral radius {rho:.4}, mu = {:.4} at its bound, error at step 500 = {err:.2e}",
            obs.mu
        ),
    )
}

fn c8_adaptive() -> Outcome {
    let l = fixture("adaptive_harmonic");
    let out = run(&l.scenario, &l.law, None).unwrap();
    let tr = &out.trajectory;
    let s_err = *tr.s_error.as_ref().unwrap().last().unwrap();
    let eta_err = tr.observer_error(tr.len() - 1).unwrap();
    let bounded = out.metrics.max_state_norm < 1e3
        && tr
            .s_error
            .as_ref()
            .unwrap()
            .iter()
            .all(|e| e.is_finite() && *e < 1e3);
    let obs = out.gains.observer.as_ref().unwrap();
    outcome(
        s_err < ADAPTIVE_TOL && eta_err < ADAPTIVE_TOL && bounded && obs.mu1 == 1.0 && obs.mu2 == 1.0 && tr.final_time() == 100.0,
        format!("at t = 100: max |S_i - S| = {s_err:.2e}, max |eta_i - v| = {eta_err:.2e}, peak state norm {:.2}", out.metrics.max_state_norm),
    )
}

fn c9_sync_ref() -> Outcome {
    let l = fixture("sync_ref_leaderless");
    let sc = &l.scenario;
    let out = run(sc, &l.law, None).unwrap();
    let obs = out.gains.observer.as_ref().unwrap();
    let InitialEstimate::Explicit(eta0) = &l.law.eta0 else {
        return outcome(false, "fixture must give explicit initial states");
    };
    let n = eta0.len() as f64;
    let mean = eta0.iter().fold(RealVector::zeros(2), |acc, e| acc + e) / n;
    // closed-form flow of the harmonic generator [[0, 1], [-1, 0]]
    let flow = |t: f64| RealMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
    let tr = &out.trajectory;
    let k = tr.len() - 1;
    let t = tr.times[k];
    let target = flow(t) * &mean;
    let err = (0..eta0.len())
        .map(|i| (tr.eta(k, i).unwrap() - &target).norm())
        .fold(0.0, f64::max);
    let setup = sc.topology.is_static()
        && sc.topology.all_undirected()
        && obs.mu == 1.0
        && obs.path == DesignPath::SyncRefMarginal;
    outcome(
        err < SYNC_TOL && setup && t == 40.0,
        format!("max |eta_i(40) - e^(40 S) mean| = {err:.2e}"),
    )
}

fn c10_containment() -> Outcome {
    let l = fixture("containment_two_leaders");
    let sc = &l.scenario;
    let out = run(sc, &l.law, None).unwrap();
    let tr = &out.trajectory;
    let k = tr.len() - 1;
    let v = tr.v(k);
    let r = v.rows(0, 2) * 0.3 + v.rows(2, 2) * 0.7;
    let mut worst = 0.0f64;
    for (i, a) in sc.agents.iter().enumerate() {
        let y = &a.c * tr.x(k, i) + &a.d * tr.u(k, i);
        worst = worst.max((y - &r).norm());
    }
    outcome(
        worst < TRACKING_TOL,
        format!(
            "max |y_i - (0.3 v1 + 0.7 v2)| at t = {} is {worst:.2e}",
            tr.final_time()
        ),
    )
}

fn collapse_gap(name: &str) -> Result<f64, String> {
    let l = fixture(name);
    let sc = &l.scenario;
    if sc.agents.is_empty() {
        // observer-only fixtures: zero initial error must stay zero
        let mut cfg = l.law.clone();
        cfg.eta0 = InitialEstimate::Leader;
        cfg.s0 = InitialEstimate::Leader;
        let out = run(sc, &cfg, None).map_err(|e| e.to_string())?;
        let tr = &out.trajectory;
        let gap = (0..tr.len())
            .map(|k| tr.observer_error(k).unwrap() / tr.times[k].max(1.0))
            .fold(0.0, f64::max);
        return Ok(gap);
    }
    let gains = synthesize(sc, &l.law).map_err(|e| e.to_string())?;
    let dist = ControlLaw::new(gains.clone()).map_err(|e| e.to_string())?;
    let dec = ControlLaw {
        kind: dist.kind.decentralized(),
        gains,
    };
    let a = integrate(
        &assemble(sc, &dist, &InitialEstimate::Leader).unwrap(),
        &sc.topology,
        sc.horizon,
        sc.step,
    )
    .map_err(|e| e.to_string())?;
    let b = integrate(
        &assemble(sc, &dec, &InitialEstimate::Zero).unwrap(),
        &sc.topology,
        sc.horizon,
        sc.step,
    )
    .map_err(|e| e.to_string())?;
    let mut gap = 0.0f64;
    for k in 0..a.len() {
        let mut d = 0.0f64;
        for i in 0..sc.agents.len() {
            d = d
                .max((a.x(k, i) - b.x(k, i)).norm())
                .max((a.z(k, i) - b.z(k, i)).norm())
                .max((a.u(k, i) - b.u(k, i)).norm())
                .max((a.e(k, i) - b.e(k, i)).norm());
        }
        gap = gap.max(d / a.times[k].max(1.0));
    }
    Ok(gap)
}

fn c11_collapse() -> Outcome {
    let names = [
        "harmonic_chain",
        "jointly_connected_cycle",
        "containment_two_leaders",
        "local_exo",
        "discrete_rotation",
        "adaptive_harmonic",
        "sync_ref_leaderless",
    ];
    let mut worst = 0.0f64;
    for n in names {
        match collapse_gap(n) {
            Ok(g) if g < COLLAPSE_TOL => worst = worst.max(g),
            Ok(g) => return outcome(false, format!("{n}: gap {g:.2e} per unit time")),
            Err(e) => return outcome(false, format!("{n}: {e}")),
        }
    }
    let kinds_ok =
        LawKind::DistributedMeasurement.decentralized() == LawKind::DecentralizedMeasurement;
    outcome(
        kinds_ok,
        format!(
            "{} fixtures, worst gap {worst:.2e} per unit time",
            names.len()
        ),
    )
}

fn c12_negative() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_coopreg");
    let flip = Command::new(bin)
        .args(["run", "--scenario"])
        .arg(fixture_path("harmonic_chain"))
        .arg("--flip-k1")
        .output()
        .unwrap();
    let flip_ok =
        flip.status.code() == Some(3) && String::from_utf8_lossy(&flip.stderr).contains("diverged");

    let rows = cmd_sweep(
        &fixture_path("harmonic_chain"),
        &SweepGrid::Mu(vec![0.0]),
        &Overrides::default(),
    )
    .unwrap();
    let mu0_ok = rows.len() == 1 && rows[0].metrics.as_ref().is_some_and(|m| !m.converged);

    let rank = Command::new(bin)
        .args(["check", "--scenario"])
        .arg(fixture_path("rank_violation"))
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&rank.stdout);
    let rank_ok = rank.status.code() == Some(1)
        && text.lines().any(|l| l.starts_with("[FAIL] rank_condition"));
    outcome(
        flip_ok && mu0_ok && rank_ok,
        format!(
            "flip-k1 exit {:?}, mu = 0 row converged: {}, rank check exit {:?}",
            flip.status.code(),
            !mu0_ok,
            rank.status.code()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        (
            "C1",
            "regulator equations exact on random agents",
            c1_regulator,
        ),
        ("C2", "Riccati solutions valid on random pairs", c2_riccati),
        ("C3", "closed-loop spectrum separates", c3_separation),
        ("C4", "static-graph tracking", c4_static_tracking),
        ("C5", "jointly connected switching", c5_switching),
        ("C6", "Kronecker eigenvalue formula", c6_eigen_formula),
        ("C7", "discrete observer", c7_discrete),
        ("C8", "adaptive observer", c8_adaptive),
        ("C9", "synchronized reference generator", c9_sync_ref),
        ("C10", "containment", c10_containment),
        ("C11", "certainty-equivalence collapse", c11_collapse),
        ("C12", "negative controls", c12_negative),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id} {name}: {}", o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
