//! Cycle-accurate model of the four-nodes-per-cycle breadth-first FSD
//! architecture: task schedule, hazard checking, 12-bit fixed-point datapath
//! and throughput accounting.

pub mod fx;
pub mod schedule;
pub mod sim;

pub use fx::{
    fx_b_value, fx_direct_enumerate, fx_mul_sym, fx_ped_step, FixedWord, DEFAULT_FRAC_BITS,
    SYMBOLS,
};
pub use schedule::{build_schedule, check_hazards, GroupId, Hazard, Schedule, ScheduleEntry};
pub use sim::{simulate, CacheModel, CycleStats, FxCandidate, SimOutcome};

use crate::{Error, Result};

/// Detector throughput at a given clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    pub bits_per_second: f64,
    pub bits_per_cycle: f64,
}

/// throughput = f_c * M * N_t / N_c, with the per-cycle figure alongside.
pub fn throughput(f_c_hz: f64, m: usize, n_t: usize, n_c: u32) -> Result<Throughput> {
    if n_c == 0 {
        return Err(Error::InvalidParameter(
            "cycle count must be positive".into(),
        ));
    }
    if f_c_hz <= 0.0 || m == 0 || n_t == 0 {
        return Err(Error::InvalidParameter(
            "clock, modulation order and antenna count must be positive".into(),
        ));
    }
    let bits_per_cycle = (m * n_t) as f64 / f64::from(n_c);
    Ok(Throughput {
        bits_per_second: f_c_hz * bits_per_cycle,
        bits_per_cycle,
    })
}
