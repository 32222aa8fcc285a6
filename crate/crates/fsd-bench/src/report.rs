//! Schedule and throughput reporting for the architecture model.

use anyhow::Result;
use fsd_sim::arch::{self, check_hazards};
use fsd_sim::fsd::NodeDistribution;

pub struct ScheduleReport {
    /// Human-readable report.
    pub text: String,
    /// One `cycle,d,b,de` line per cycle, the golden-file trace format.
    pub trace: String,
}

/// Build the cycle table and throughput summary for a parallelism level and
/// clock frequency.
pub fn run_schedule_report(
    dist: &NodeDistribution,
    parallelism: u8,
    f_c_hz: f64,
) -> Result<ScheduleReport> {
    let schedule = arch::build_schedule(dist, parallelism)?;
    let hazards = check_hazards(&schedule);
    let n_c = schedule.cycles_per_vector();
    let t = arch::throughput(f_c_hz, 4, 4, n_c)?;

    let mut text = String::new();
    text.push_str(&format!(
        "{}-nodes-per-cycle schedule, node distribution {:?}\n",
        parallelism,
        dist.counts()
    ));
    text.push_str("cycle,d,b,de\n");
    text.push_str(&schedule.trace());
    text.push_str(&format!(
        "traversal cycles: {}\nvisited nodes: {}\ncycles per vector (with restart): {}\n",
        schedule.cycles(),
        schedule.visited_nodes(),
        n_c
    ));
    text.push_str(&format!(
        "throughput at {:.1} MHz: {:.1} Mbps ({:.3} bits/cycle)\n",
        f_c_hz / 1e6,
        t.bits_per_second / 1e6,
        t.bits_per_cycle
    ));
    if hazards.is_empty() {
        text.push_str("hazards: none\n");
    } else {
        for h in &hazards {
            text.push_str(&format!("hazard: {h}\n"));
        }
    }

    Ok(ScheduleReport {
        text,
        trace: schedule.trace(),
    })
}
