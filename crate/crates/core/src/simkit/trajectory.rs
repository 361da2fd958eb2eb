use std::io::{self, Write};

use super::assemble::StateLayout;
use crate::numkit::{RealMatrix, RealVector};

/// Sampled closed-loop run. States are stored whole; inputs and errors are
/// read out through the linear maps of the loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Active graph index per sample.
    pub graph: Vec<usize>,
    pub states: Vec<RealVector>,
    pub layout: StateLayout,
    pub u_maps: Vec<RealMatrix>,
    pub e_maps: Vec<RealMatrix>,
    /// Segments whose length was not a multiple of the requested step.
    pub refined_segments: usize,
    /// `max_i ‖S_i − S‖` per sample, for adaptive runs.
    pub s_error: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn new(layout: StateLayout, u_maps: Vec<RealMatrix>, e_maps: Vec<RealMatrix>) -> Self {
        Trajectory {
            times: Vec::new(),
            graph: Vec::new(),
            states: Vec::new(),
            layout,
            u_maps,
            e_maps,
            refined_segments: 0,
            s_error: None,
        }
    }

    pub fn push(&mut self, t: f64, graph: usize, x: RealVector) {
        self.times.push(t);
        self.graph.push(graph);
        self.states.push(x);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn agents(&self) -> usize {
        self.layout.agents()
    }

    pub fn x(&self, k: usize, i: usize) -> RealVector {
        self.layout.x_of(&self.states[k], i)
    }

    pub fn z(&self, k: usize, i: usize) -> RealVector {
        self.layout.z_of(&self.states[k], i)
    }

    pub fn eta(&self, k: usize, i: usize) -> Option<RealVector> {
        self.layout.eta_of(&self.states[k], i)
    }

    pub fn u(&self, k: usize, i: usize) -> RealVector {
        &self.u_maps[i] * &self.states[k]
    }

    pub fn e(&self, k: usize, i: usize) -> RealVector {
        &self.e_maps[i] * &self.states[k]
    }

    pub fn v(&self, k: usize) -> RealVector {
        self.layout.v_of(&self.states[k])
    }

    /// `max_i ‖e_i‖` at sample `k`; 0 without agents.
    pub fn tracking_error(&self, k: usize) -> f64 {
        (0..self.agents())
            .map(|i| self.e(k, i).norm())
            .fold(0.0, f64::max)
    }

    /// `max_i ‖η_i − v_m‖` at sample `k`, if the run has an observer.
    pub fn observer_error(&self, k: usize) -> Option<f64> {
        self.layout.eta?;
        let vm = self.layout.v_m_of(&self.states[k]);
        Some(
            (0..self.layout.followers)
                .map(|i| (self.eta(k, i).expect("eta block") - &vm).norm())
                .fold(0.0, f64::max),
        )
    }

    /// Largest value of `f` over samples with `t ≥ from`.
    pub fn sup_after(&self, from: f64, f: impl Fn(usize) -> f64) -> f64 {
        self.times
            .iter()
            .enumerate()
            .filter(|(_, t)| **t >= from - 1e-12)
            .map(|(k, _)| f(k))
            .fold(0.0, f64::max)
    }

    /// Earliest sample time after which `f` stays below `threshold`.
    pub fn settling_time(&self, threshold: f64, f: impl Fn(usize) -> f64) -> Option<f64> {
        let mut last_bad = None;
        for k in 0..self.len() {
            if !(f(k) < threshold) {
                last_bad = Some(k);
            }
        }
        match last_bad {
            None => self.times.first().copied(),
            Some(k) if k + 1 < self.len() => Some(self.times[k + 1]),
            Some(_) => None,
        }
    }

    /// Writes `t,agent,x,z,eta,u,e,graph_idx`, one row per (time, agent).
    /// Agent 0 is the exosystem, whose state goes in the `x` column.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,agent,x,z,eta,u,e,graph_idx")?;
        let empty = RealVector::zeros(0);
        for k in 0..self.len() {
            let t = fmt_num(self.times[k]);
            let g = self.graph[k];
            writeln!(out, "{t},0,{},[],[],[],[],{g}", fmt_vec(&self.v(k)))?;
            for i in 0..self.layout.followers {
                let has_agent = i < self.agents();
                let pick = |f: &dyn Fn() -> RealVector| if has_agent { f() } else { empty.clone() };
                let eta = self.eta(k, i).unwrap_or_else(|| empty.clone());
                writeln!(
                    out,
                    "{t},{},{},{},{},{},{},{g}",
                    i + 1,
                    fmt_vec(&pick(&|| self.x(k, i))),
                    fmt_vec(&pick(&|| self.z(k, i))),
                    fmt_vec(&eta),
                    fmt_vec(&pick(&|| self.u(k, i))),
                    fmt_vec(&pick(&|| self.e(k, i))),
                )?;
            }
        }
        Ok(())
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_vec(v: &RealVector) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_num(*x)).collect();
    format!("[{}]", parts.join(";"))
}
