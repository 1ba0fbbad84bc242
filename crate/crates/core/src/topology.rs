//! Hall geometry: BS grid and UE drops.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{NetworkConfig, TrafficConfig, UeDrop};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Position { x, y, z }
    }

    pub fn distance_2d(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_3d(&self, other: &Position) -> f64 {
        let d2 = self.distance_2d(other);
        d2.hypot(self.z - other.z)
    }
}

/// Node placement for one run. UEs are numbered globally; within a cell the
/// DL UEs come first (eMBB ones leading), then the UL UEs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub bs_positions: Vec<Position>,
    pub ue_positions_per_cell: Vec<Vec<Position>>,
    pub cell_of_ue: Vec<usize>,
    pub hall_length_m: f64,
    pub hall_width_m: f64,
}

impl Topology {
    pub fn num_cells(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.cell_of_ue.len()
    }

    /// UE positions in global UE-id order.
    pub fn ue_positions(&self) -> Vec<Position> {
        // Per-cell lists are stored in id order, so a cursor per cell recovers
        // the global sequence.
        let mut cursors = vec![0usize; self.num_cells()];
        self.cell_of_ue
            .iter()
            .map(|&c| {
                let p = self.ue_positions_per_cell[c][cursors[c]];
                cursors[c] += 1;
                p
            })
            .collect()
    }

    /// Checks the placement invariants; returns the first violation.
    pub fn check(&self, net: &NetworkConfig) -> Result<(), String> {
        let inside = |p: &Position| {
            p.x >= 0.0 && p.x <= self.hall_length_m && p.y >= 0.0 && p.y <= self.hall_width_m
        };
        for (i, b) in self.bs_positions.iter().enumerate() {
            if !inside(b) {
                return Err(format!("BS {i} outside the hall"));
            }
            if b.z != net.bs_height_m {
                return Err(format!("BS {i} at height {}", b.z));
            }
        }
        for (c, ues) in self.ue_positions_per_cell.iter().enumerate() {
            for u in ues {
                if !inside(u) {
                    return Err(format!("UE of cell {c} outside the hall"));
                }
                if u.z != net.ue_height_m {
                    return Err(format!("UE of cell {c} at height {}", u.z));
                }
            }
        }
        let total: usize = self.ue_positions_per_cell.iter().map(Vec::len).sum();
        if total != self.cell_of_ue.len() {
            return Err("cell_of_ue does not cover every UE".into());
        }
        Ok(())
    }
}

/// Places BSs on a centred uniform grid and drops `k_dl + k_ul` UEs per cell.
pub fn build_topology<R: Rng + ?Sized>(cfg: &NetworkConfig, traffic: &TrafficConfig, rng: &mut R) -> Topology {
    let sx = cfg.hall_length_m / cfg.grid_cols as f64;
    let sy = cfg.hall_width_m / cfg.grid_rows as f64;
    let mut bs_positions = Vec::with_capacity(cfg.num_cells);
    for row in 0..cfg.grid_rows {
        for col in 0..cfg.grid_cols {
            bs_positions.push(Position::new((col as f64 + 0.5) * sx, (row as f64 + 0.5) * sy, cfg.bs_height_m));
        }
    }

    let k = traffic.ues_per_cell();
    let mut ue_positions_per_cell = vec![Vec::with_capacity(k); cfg.num_cells];
    let mut cell_of_ue = Vec::with_capacity(k * cfg.num_cells);
    match cfg.ue_drop {
        UeDrop::Patch => {
            for c in 0..cfg.num_cells {
                let (row, col) = (c / cfg.grid_cols, c % cfg.grid_cols);
                for _ in 0..k {
                    let x = (col as f64 + rng.random::<f64>()) * sx;
                    let y = (row as f64 + rng.random::<f64>()) * sy;
                    ue_positions_per_cell[c].push(Position::new(x, y, cfg.ue_height_m));
                    cell_of_ue.push(c);
                }
            }
        }
        UeDrop::Hall => {
            // Mean pathloss is monotone in distance, so the nearest BS is the
            // strongest mean link.
            for _ in 0..k * cfg.num_cells {
                let p = Position::new(
                    rng.random::<f64>() * cfg.hall_length_m,
                    rng.random::<f64>() * cfg.hall_width_m,
                    cfg.ue_height_m,
                );
                let c = bs_positions
                    .iter()
                    .enumerate()
                    .min_by(|a, b| p.distance_2d(a.1).total_cmp(&p.distance_2d(b.1)))
                    .map(|(i, _)| i)
                    .expect("at least one BS");
                ue_positions_per_cell[c].push(p);
                cell_of_ue.push(c);
            }
        }
    }

    Topology {
        bs_positions,
        ue_positions_per_cell,
        cell_of_ue,
        hall_length_m: cfg.hall_length_m,
        hall_width_m: cfg.hall_width_m,
    }
}
