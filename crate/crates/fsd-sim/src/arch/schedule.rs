//! Per-cycle task schedule of the breadth-first FSD architecture and its
//! hazard checker.
//!
//! Tree levels are detected from `2*N_t - 1` down to 0. The two top levels
//! are fully expanded, so their symbols are hard-wired; every lower level
//! gets its survivor from a direct-enumeration (DE) task. Level 7 holds one
//! group of four nodes; each level below holds four groups, one per column,
//! where column `c` owns list slots `4(c-1) .. 4c-1` for the whole descent.
//!
//! The timing rules behind the generated table: the PED task of a group and
//! the b task of the group one level below it in the same column share a
//! cycle, the DE task of a group fires one cycle after its b task, and the
//! PED task follows the b task of the same group once the column comes
//! around again (four cycles later at four nodes per cycle, two at eight).

use std::collections::HashMap;
use std::fmt;

use crate::fsd::NodeDistribution;
use crate::{Error, Result};

/// A group of four sibling-adjacent tree nodes, level 0..=7, column 1..=4.
/// Level 7 has the single group (7, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GroupId {
    pub level: u8,
    pub column: u8,
}

impl GroupId {
    pub fn new(level: u8, column: u8) -> GroupId {
        GroupId { level, column }
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}.{}", self.level, self.column)
    }
}

/// Tasks issued in one clock cycle. Each vector lists the groups a unit kind
/// works on that cycle (one group at P=4, up to two at P=8; the first cycle's
/// b task covers all four level-6 groups at once).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub cycle: u32,
    pub d: Vec<GroupId>,
    pub b: Vec<GroupId>,
    pub de: Vec<GroupId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Ped,
    B,
    De,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::Ped => write!(f, "d"),
            TaskKind::B => write!(f, "b"),
            TaskKind::De => write!(f, "DE"),
        }
    }
}

/// Full traversal schedule for one received vector.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub parallelism: u8,
    pub dist: NodeDistribution,
    pub entries: Vec<ScheduleEntry>,
}

impl Schedule {
    /// Cycles of tree traversal (excluding the restart cycle).
    pub fn cycles(&self) -> u32 {
        self.entries.len() as u32
    }

    /// Cycles per detected vector including the one-cycle restart gap.
    pub fn cycles_per_vector(&self) -> u32 {
        self.cycles() + 1
    }

    /// PED evaluations over the whole traversal (four nodes per d group).
    pub fn visited_nodes(&self) -> u32 {
        self.entries.iter().map(|e| 4 * e.d.len() as u32).sum()
    }

    /// One text line per cycle: `cycle,d,b,de`, groups joined by `~`, `-` for
    /// an idle unit.
    pub fn trace(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.cycle,
                fmt_groups(&e.d),
                fmt_groups(&e.b),
                fmt_groups(&e.de)
            ));
        }
        out
    }

    fn top_level(&self) -> u8 {
        (self.dist.levels() - 1) as u8
    }
}

fn fmt_groups(groups: &[GroupId]) -> String {
    if groups.is_empty() {
        "-".to_string()
    } else {
        groups
            .iter()
            .map(|g| g.to_string())
            .collect::<Vec<_>>()
            .join("~")
    }
}

/// Build the traversal schedule for the {1,1,1,1,1,1,4,4} distribution at
/// four or eight nodes per cycle.
pub fn build_schedule(dist: &NodeDistribution, parallelism: u8) -> Result<Schedule> {
    if dist != &NodeDistribution::default_4x4_16qam() {
        return Err(Error::UnsupportedConfig(format!(
            "the architecture schedule supports only the {{1,1,1,1,1,1,4,4}} node \
             distribution, got {:?}",
            dist.counts()
        )));
    }
    if parallelism != 4 && parallelism != 8 {
        return Err(Error::UnsupportedConfig(format!(
            "parallelism must be 4 or 8 nodes per cycle, got {parallelism}"
        )));
    }

    let top = (dist.levels() - 1) as u8; // 7
    let groups_per_step = (parallelism / 4) as u32; // columns advanced per cycle
    let steps_per_level = 4 / groups_per_step;

    let mut entries = Vec::new();
    // cycle 1: PED for the single top group; b for all four groups one level
    // down (they share per-group b values known from the hard-wired symbols)
    entries.push(ScheduleEntry {
        cycle: 1,
        d: vec![GroupId::new(top, 1)],
        b: (1..=4).map(|c| GroupId::new(top - 1, c)).collect(),
        de: vec![],
    });

    // steady state: step through (level, column-block) pairs; each step
    // issues d at the level, b one level down, and DE follows b next cycle
    let mut pending_de: Vec<GroupId> = vec![]; // groups b'd in the previous cycle
    let mut cycle = 2;
    for d_level in (0..top).rev() {
        for step in 0..steps_per_level {
            let columns: Vec<u8> = (0..groups_per_step)
                .map(|k| (step * groups_per_step + k + 1) as u8)
                .collect();
            let d: Vec<GroupId> = columns
                .iter()
                .map(|&c| GroupId::new(d_level, c))
                .collect();
            let b: Vec<GroupId> = if d_level > 0 {
                columns
                    .iter()
                    .map(|&c| GroupId::new(d_level - 1, c))
                    .collect()
            } else {
                vec![]
            };
            let de = std::mem::take(&mut pending_de);
            // DE only exists where a single survivor is enumerated
            pending_de = b
                .iter()
                .copied()
                .filter(|g| dist.count_at(g.level as usize) == 1)
                .collect();
            entries.push(ScheduleEntry {
                cycle,
                d,
                b,
                de,
            });
            cycle += 1;
        }
    }

    Ok(Schedule {
        parallelism,
        dist: dist.clone(),
        entries,
    })
}

/// One violated data dependency: a task consumed an input that was not
/// produced in a strictly earlier cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hazard {
    pub cycle: u32,
    pub task: TaskKind,
    pub group: GroupId,
    pub input: String,
    pub produced_at: Option<u32>,
}

impl fmt::Display for Hazard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.produced_at {
            Some(p) => write!(
                f,
                "cycle {}: {} {} reads {} produced at cycle {}",
                self.cycle, self.task, self.group, self.input, p
            ),
            None => write!(
                f,
                "cycle {}: {} {} reads {} which is never produced",
                self.cycle, self.task, self.group, self.input
            ),
        }
    }
}

/// Verify that every task's inputs (parent PED, the group's own b value, the
/// DE survivor identity) are produced strictly before they are read.
/// Hard-wired symbols of the fully expanded levels and the reset preload of
/// the top-level b count as produced at cycle 0.
pub fn check_hazards(schedule: &Schedule) -> Vec<Hazard> {
    let top = schedule.top_level();
    let dist = &schedule.dist;
    let mut produced: HashMap<(TaskKind, GroupId), u32> = HashMap::new();
    for e in &schedule.entries {
        for &g in &e.d {
            produced.insert((TaskKind::Ped, g), e.cycle);
        }
        for &g in &e.b {
            produced.insert((TaskKind::B, g), e.cycle);
        }
        for &g in &e.de {
            produced.insert((TaskKind::De, g), e.cycle);
        }
    }

    let mut hazards = Vec::new();
    let require = |cycle: u32,
                       task: TaskKind,
                       group: GroupId,
                       kind: TaskKind,
                       of: GroupId,
                       what: &str,
                       hazards: &mut Vec<Hazard>| {
        let at = produced.get(&(kind, of)).copied();
        if at.map_or(true, |p| p >= cycle) {
            hazards.push(Hazard {
                cycle,
                task,
                group,
                input: format!("{what} of {of}"),
                produced_at: at,
            });
        }
    };

    for e in &schedule.entries {
        for &g in &e.d {
            // parent PED: the root's distance is zero at reset
            if g.level < top {
                let parent = if g.level == top - 1 {
                    GroupId::new(top, 1)
                } else {
                    GroupId::new(g.level + 1, g.column)
                };
                require(e.cycle, TaskKind::Ped, g, TaskKind::Ped, parent, "PED", &mut hazards);
            }
            // own b value: preloaded at reset for the top level
            if g.level < top {
                require(e.cycle, TaskKind::Ped, g, TaskKind::B, g, "b", &mut hazards);
            }
            // survivor identity where one child is enumerated
            if dist.count_at(g.level as usize) == 1 {
                require(e.cycle, TaskKind::Ped, g, TaskKind::De, g, "survivor", &mut hazards);
            }
        }
        for &g in &e.b {
            // b needs every enumerated symbol above its level in its column
            for j in (g.level + 1)..=top {
                if dist.count_at(j as usize) == 1 {
                    let of = GroupId::new(j, g.column);
                    require(e.cycle, TaskKind::B, g, TaskKind::De, of, "survivor", &mut hazards);
                }
            }
        }
        for &g in &e.de {
            require(e.cycle, TaskKind::De, g, TaskKind::B, g, "b", &mut hazards);
        }
    }
    hazards
}
