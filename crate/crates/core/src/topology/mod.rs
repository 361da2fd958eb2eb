//! Communication graphs over the leader (node 0) and followers, switching
//! schedules with dwell time, H-matrices and joint-connectivity checks.

mod graph;
mod schedule;

pub use graph::{min_real_eig_h, union_graph, Edge, HMatrix, WeightedDigraph};
pub use schedule::{
    verify_jointly_connected, JointConnectivity, Segment, SwitchingSchedule, Window,
};
