use serde::Serialize;

use super::trajectory::Trajectory;
use crate::synthesis::GainSet;

/// Summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub threshold: f64,
    /// Start of the final window (last 10% of the run).
    pub window_start: f64,
    /// Per agent, `max ‖e_i‖` over the final window.
    pub tracking_final: Vec<f64>,
    pub max_tracking_final: f64,
    /// `max_i ‖η_i − v_m‖` over the final window.
    pub observer_final: Option<f64>,
    /// First time after which the tracking error stays below the threshold.
    pub tracking_settle: Option<f64>,
    pub observer_settle: Option<f64>,
    /// `‖x_i − X_i v‖` at the final time.
    pub state_residual: Vec<f64>,
    /// `‖u_i − U_i v‖` at the final time.
    pub input_residual: Vec<f64>,
    /// `max_i ‖S_i − S‖` over the final window, for adaptive runs.
    pub adaptive_final: Option<f64>,
    pub max_state_norm: f64,
    pub converged: bool,
}

/// Computes the run summary. Runs with agents converge when the tracking
/// error meets the threshold over the final window; observer-only runs when
/// the estimation error does.
pub fn metrics(tr: &Trajectory, gains: Option<&GainSet>, threshold: f64) -> Metrics {
    let t_end = tr.final_time();
    let t0 = tr.times.first().copied().unwrap_or(0.0);
    let window_start = t_end - 0.1 * (t_end - t0);
    let n_agents = tr.agents();
    let tracking_final: Vec<f64> = (0..n_agents)
        .map(|i| tr.sup_after(window_start, |k| tr.e(k, i).norm()))
        .collect();
    let max_tracking_final = tracking_final.iter().copied().fold(0.0, f64::max);
    let has_obs = tr.layout.eta.is_some();
    let obs = |k: usize| tr.observer_error(k).unwrap_or(0.0);
    let observer_final = has_obs.then(|| tr.sup_after(window_start, obs));
    let tracking_settle = (n_agents > 0)
        .then(|| tr.settling_time(threshold, |k| tr.tracking_error(k)))
        .flatten();
    let observer_settle = has_obs.then(|| tr.settling_time(threshold, obs)).flatten();

    let (mut state_residual, mut input_residual) = (Vec::new(), Vec::new());
    if let (Some(g), false) = (gains, tr.is_empty()) {
        let k = tr.len() - 1;
        let v = tr.v(k);
        for (i, a) in g.agents.iter().enumerate().take(n_agents) {
            state_residual.push((tr.x(k, i) - &a.regulator.x * &v).norm());
            input_residual.push((tr.u(k, i) - &a.regulator.u * &v).norm());
        }
    }
    let adaptive_final = tr.s_error.as_ref().map(|s| {
        tr.times
            .iter()
            .zip(s)
            .filter(|(t, _)| **t >= window_start - 1e-12)
            .map(|(_, e)| *e)
            .fold(0.0, f64::max)
    });
    let max_state_norm = tr.states.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let converged = !tr.is_empty()
        && if n_agents > 0 {
            max_tracking_final < threshold
        } else {
            observer_final.is_some_and(|e| e < threshold)
        };
    Metrics {
        threshold,
        window_start,
        tracking_final,
        max_tracking_final,
        observer_final,
        tracking_settle,
        observer_settle,
        state_residual,
        input_residual,
        adaptive_final,
        max_state_norm,
        converged,
    }
}

impl Metrics {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3e}"));
        s.push_str(&format!(
            "final window starts at t = {:.4}\n",
            self.window_start
        ));
        for (i, e) in self.tracking_final.iter().enumerate() {
            s.push_str(&format!("agent {}: max |e| in final window {e:.3e}", i + 1));
            if let (Some(x), Some(u)) = (self.state_residual.get(i), self.input_residual.get(i)) {
                s.push_str(&format!(", |x - Xv| {x:.3e}, |u - Uv| {u:.3e}"));
            }
            s.push('\n');
        }
        s.push_str(&format!(
            "observer error in final window: {}\n",
            opt(self.observer_final)
        ));
        if self.adaptive_final.is_some() {
            s.push_str(&format!(
                "leader-matrix estimate error in final window: {}\n",
                opt(self.adaptive_final)
            ));
        }
        s.push_str(&format!(
            "settling below {:.1e}: tracking {}, observer {}\n",
            self.threshold,
            opt(self.tracking_settle),
            opt(self.observer_settle)
        ));
        s.push_str(if self.converged {
            "converged\n"
        } else {
            "not converged\n"
        });
        s
    }
}
