//! Cycle-accurate execution of the FSD schedule over the three-cache model.
//!
//! All reads in a cycle see the previous cycle's state and all writes commit
//! at the cycle boundary; that two-phase rule is what lets a group's b value
//! be overwritten by the next level in the same cycle its PED is computed.

use nalgebra::{DMatrix, DVector};

use super::fx::{
    fx_b_value, fx_direct_enumerate, fx_ped_step, FixedWord, SYMBOLS,
};
use super::schedule::{build_schedule, GroupId, Schedule, ScheduleEntry};
use crate::fsd::NodeDistribution;
use crate::{Error, Result};

/// The three register files of the datapath, slot-addressed by candidate.
/// Slot `s` descends from hard-wired top-level symbol `s / 4` and
/// second-level symbol `s % 4`; levels 5..0 live in the path history.
#[derive(Debug, Clone)]
pub struct CacheModel {
    /// 16 slots x 6 levels of 2-bit symbol codes (alphabet indices),
    /// row index 0 holding level 5.
    pub path_history: Vec<Vec<u8>>,
    /// Current b value per slot; each level's write replaces the last.
    pub b_cache: Vec<FixedWord>,
    /// Accumulated PED per slot.
    pub ped_cache: Vec<FixedWord>,
}

impl CacheModel {
    fn new(slots: usize, stored_levels: usize, frac_bits: u8) -> CacheModel {
        CacheModel {
            path_history: vec![vec![0; stored_levels]; slots],
            b_cache: vec![FixedWord::zero(frac_bits); slots],
            ped_cache: vec![FixedWord::zero(frac_bits); slots],
        }
    }

    /// Flip-flops in the path history: slots x stored levels x 2 bits.
    pub fn path_history_flipflops(&self) -> usize {
        self.path_history.len() * self.path_history[0].len() * 2
    }

    /// Flip-flops in the b cache: slots x word width.
    pub fn b_cache_flipflops(&self) -> usize {
        self.b_cache.len() * 12
    }

    /// Flip-flops in the PED cache: slots x word width.
    pub fn ped_cache_flipflops(&self) -> usize {
        self.ped_cache.len() * 12
    }
}

/// Counters from one traversal.
#[derive(Debug, Clone)]
pub struct CycleStats {
    pub schedule_cycles: u32,
    pub restart_cycles: u32,
    pub visited_nodes: u32,
    pub parallelism: u8,
    /// Inputs that saturated while being quantized at load.
    pub load_saturations: u32,
    /// Per-cycle task log.
    pub task_log: Vec<ScheduleEntry>,
}

impl CycleStats {
    /// Cycles per detected vector, restart gap included.
    pub fn n_c(&self) -> u32 {
        self.schedule_cycles + self.restart_cycles
    }
}

/// One fixed-point candidate: level-indexed alphabet codes plus the 12-bit
/// PED. Exact equality is bit-exact equality of the datapath outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FxCandidate {
    pub path_codes: Vec<u8>,
    pub ped: FixedWord,
}

impl FxCandidate {
    /// Symbol values of the path, level-indexed like the float search.
    pub fn path_values(&self) -> Vec<f64> {
        self.path_codes
            .iter()
            .map(|&i| f64::from(SYMBOLS[i as usize]))
            .collect()
    }
}

/// Result of a cycle-accurate run.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub list: Vec<FxCandidate>,
    pub stats: CycleStats,
    pub caches: CacheModel,
}

impl SimOutcome {
    /// Minimum-PED candidate, earlier slot wins ties.
    pub fn best(&self) -> &FxCandidate {
        let mut best = &self.list[0];
        for c in &self.list[1..] {
            if c.ped.raw() < best.ped.raw() {
                best = c;
            }
        }
        best
    }
}

struct Datapath {
    qr: Vec<Vec<FixedWord>>,
    qy: Vec<FixedWord>,
    top: usize,
}

impl Datapath {
    /// Hard-wired or enumerated symbol of `slot` at `level`, reading the
    /// given path-history snapshot.
    fn symbol(&self, history: &[Vec<u8>], slot: usize, level: usize) -> i8 {
        if level == self.top {
            SYMBOLS[slot / 4]
        } else if level == self.top - 1 {
            SYMBOLS[slot % 4]
        } else {
            SYMBOLS[history[slot][self.top - 2 - level] as usize]
        }
    }

    fn b_for_slot(&self, history: &[Vec<u8>], slot: usize, level: usize) -> FixedWord {
        let terms: Vec<(FixedWord, i8)> = (level + 1..=self.top)
            .map(|j| (self.qr[level][j], self.symbol(history, slot, j)))
            .collect();
        fx_b_value(self.qy[level], &terms)
    }
}

fn column_slots(g: GroupId) -> std::ops::Range<usize> {
    let c = (g.column - 1) as usize;
    4 * c..4 * c + 4
}

/// Run the schedule over the cache model. `r` and `y_zf` are quantized to
/// `frac_bits`; saturations at load are reported in the stats, not fatal.
pub fn simulate(
    r: &DMatrix<f64>,
    y_zf: &DVector<f64>,
    dist: &NodeDistribution,
    parallelism: u8,
    frac_bits: u8,
) -> Result<SimOutcome> {
    let n = r.ncols();
    if r.nrows() != n || y_zf.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "R is {}x{}, y_zf has {} entries",
            r.nrows(),
            r.ncols(),
            y_zf.len()
        )));
    }
    if n != dist.levels() {
        return Err(Error::DimensionMismatch(format!(
            "distribution covers {} levels, system has {}",
            dist.levels(),
            n
        )));
    }
    let schedule = build_schedule(dist, parallelism)?;
    let top = n - 1;

    // quantize the triangular system
    let mut load_saturations = 0;
    let mut qr = vec![vec![FixedWord::zero(frac_bits); n]; n];
    for i in 0..n {
        for j in i..n {
            let (w, sat) = FixedWord::quantize(r[(i, j)], frac_bits);
            qr[i][j] = w;
            load_saturations += u32::from(sat);
        }
    }
    let mut qy = Vec::with_capacity(n);
    for i in 0..n {
        let (w, sat) = FixedWord::quantize(y_zf[i], frac_bits);
        qy.push(w);
        load_saturations += u32::from(sat);
    }

    let dp = Datapath { qr, qy, top };
    let slots = dist.list_size();
    let mut caches = CacheModel::new(slots, n - 2, frac_bits);
    // reset: the top-level b value is written straight into the cache
    for b in caches.b_cache.iter_mut() {
        *b = dp.qy[top];
    }

    let mut visited = 0u32;
    for entry in &schedule.entries {
        // gather writes against the start-of-cycle snapshot
        let mut b_writes: Vec<(usize, FixedWord)> = Vec::new();
        let mut de_writes: Vec<(usize, usize, u8)> = Vec::new();
        let mut ped_writes: Vec<(usize, FixedWord)> = Vec::new();

        for &g in &entry.b {
            let level = g.level as usize;
            for slot in column_slots(g) {
                b_writes.push((slot, dp.b_for_slot(&caches.path_history, slot, level)));
            }
        }
        for &g in &entry.de {
            let level = g.level as usize;
            for slot in column_slots(g) {
                let survivor = fx_direct_enumerate(caches.b_cache[slot], dp.qr[level][level]);
                let code = SYMBOLS.iter().position(|&s| s == survivor).unwrap() as u8;
                de_writes.push((slot, level, code));
            }
        }
        for &g in &entry.d {
            let level = g.level as usize;
            visited += 4;
            let slot_range = if level == top {
                0..slots // the single top group fans out over all columns
            } else {
                column_slots(g)
            };
            for slot in slot_range {
                let sym = dp.symbol(&caches.path_history, slot, level);
                let d_prev = if level == top {
                    FixedWord::zero(frac_bits) // the root's distance
                } else {
                    caches.ped_cache[slot]
                };
                let d = fx_ped_step(d_prev, caches.b_cache[slot], dp.qr[level][level], sym);
                ped_writes.push((slot, d));
            }
        }

        // commit phase
        for (slot, w) in b_writes {
            caches.b_cache[slot] = w;
        }
        for (slot, level, code) in de_writes {
            caches.path_history[slot][top - 2 - level] = code;
        }
        for (slot, d) in ped_writes {
            caches.ped_cache[slot] = d;
        }
    }

    let list: Vec<FxCandidate> = (0..slots)
        .map(|slot| {
            let path_codes: Vec<u8> = (0..n)
                .map(|level| {
                    let sym = dp.symbol(&caches.path_history, slot, level);
                    SYMBOLS.iter().position(|&s| s == sym).unwrap() as u8
                })
                .collect();
            FxCandidate {
                path_codes,
                ped: caches.ped_cache[slot],
            }
        })
        .collect();

    let stats = CycleStats {
        schedule_cycles: schedule.cycles(),
        restart_cycles: 1,
        visited_nodes: visited,
        parallelism,
        load_saturations,
        task_log: schedule.entries.clone(),
    };
    Ok(SimOutcome {
        list,
        stats,
        caches,
    })
}

/// The schedule the simulator would execute, for reporting.
pub fn traversal_schedule(dist: &NodeDistribution, parallelism: u8) -> Result<Schedule> {
    build_schedule(dist, parallelism)
}
