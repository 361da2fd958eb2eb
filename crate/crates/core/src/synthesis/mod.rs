//! Regulator equations, rank conditions and gain synthesis for the
//! decentralized and distributed control laws.

mod gains;
mod regulator;
mod report;

pub use gains::{
    design_feedback, design_luenberger, feedforward, synthesize, synthesize_agent, AgentGains,
    GainSet,
};
pub use regulator::{
    check_rank_condition, regulator_least_squares, solve_regulator, RankEntry, RankReport,
    RegulatorSolution,
};
pub use report::{solvability_report, ReportItem, Severity, SolvabilityReport};
