//! Network layout: a hexagonal grid of three-sector macro sites used only as
//! placement geometry, pico eNBs dropped at random in each sector, and UEs
//! dropped uniformly inside each pico's disc.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    PicoEnb,
    Ue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub kind: NodeKind,
    pub index: usize,
}

impl NodeId {
    pub const fn enb(index: usize) -> Self {
        Self {
            kind: NodeKind::PicoEnb,
            index,
        }
    }

    pub const fn ue(index: usize) -> Self {
        Self {
            kind: NodeKind::Ue,
            index,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NodeKind::PicoEnb => write!(f, "enb{}", self.index),
            NodeKind::Ue => write!(f, "ue{}", self.index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutParams {
    pub n_sites: usize,
    /// 3 for the standard layout; fewer drops only the first sectors.
    pub sectors_per_site: usize,
    pub picos_per_sector: usize,
    pub ues_per_pico: usize,
    pub isd_m: f64,
    pub pico_radius_m: f64,
    pub min_pico_pico_m: f64,
    pub min_pico_ue_m: f64,
    pub min_ue_ue_m: f64,
    /// Rejection-sampling attempts allowed per node before giving up.
    pub max_attempts: usize,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            n_sites: 19,
            sectors_per_site: 3,
            picos_per_sector: 4,
            ues_per_pico: 10,
            isd_m: 500.0,
            pico_radius_m: 40.0,
            min_pico_pico_m: 40.0,
            min_pico_ue_m: 10.0,
            min_ue_ue_m: 3.0,
            max_attempts: 10_000,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_sites", self.n_sites),
            ("sectors_per_site", self.sectors_per_site),
            ("picos_per_sector", self.picos_per_sector),
            ("ues_per_pico", self.ues_per_pico),
            ("max_attempts", self.max_attempts),
        ] {
            if v == 0 {
                return Err(invalid(name, "must be at least 1"));
            }
        }
        if self.sectors_per_site > 3 {
            return Err(invalid("sectors_per_site", "at most 3 sectors per site"));
        }
        for (name, v) in [("isd_m", self.isd_m), ("pico_radius_m", self.pico_radius_m)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("min_pico_pico_m", self.min_pico_pico_m),
            ("min_pico_ue_m", self.min_pico_ue_m),
            ("min_ue_ue_m", self.min_ue_ue_m),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        if self.min_pico_ue_m >= self.pico_radius_m {
            return Err(invalid(
                "min_pico_ue_m",
                "must be smaller than the pico radius",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pico {
    pub position: Point,
    pub site: usize,
    pub sector: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ue {
    pub position: Point,
    /// Index of the serving pico eNB.
    pub serving: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkLayout {
    pub params: LayoutParams,
    pub sites: Vec<Point>,
    pub picos: Vec<Pico>,
    pub ues: Vec<Ue>,
}

impl NetworkLayout {
    pub fn n_cells(&self) -> usize {
        self.picos.len()
    }

    pub fn n_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn position(&self, node: NodeId) -> Point {
        match node.kind {
            NodeKind::PicoEnb => self.picos[node.index].position,
            NodeKind::Ue => self.ues[node.index].position,
        }
    }

    /// UE indices served by `cell`, in ascending order.
    pub fn ues_of(&self, cell: usize) -> Vec<usize> {
        self.ues
            .iter()
            .enumerate()
            .filter(|(_, ue)| ue.serving == cell)
            .map(|(i, _)| i)
            .collect()
    }

    /// Plain-text table: `node kind x_m y_m serving`, one node per line.
    pub fn write_table<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "{:<8} {:<4} {:>10} {:>10} serving",
            "node", "kind", "x_m", "y_m"
        )?;
        for (i, p) in self.picos.iter().enumerate() {
            writeln!(
                out,
                "{:<8} {:<4} {:>10.3} {:>10.3} -",
                NodeId::enb(i).to_string(),
                "enb",
                p.position.x,
                p.position.y
            )?;
        }
        for (i, ue) in self.ues.iter().enumerate() {
            writeln!(
                out,
                "{:<8} {:<4} {:>10.3} {:>10.3} {}",
                NodeId::ue(i).to_string(),
                "ue",
                ue.position.x,
                ue.position.y,
                NodeId::enb(ue.serving)
            )?;
        }
        Ok(())
    }
}

/// Site centres of a hexagonal grid, spiralling out from the origin ring by ring.
pub fn hex_sites(n_sites: usize, isd_m: f64) -> Vec<Point> {
    // axial coordinates; the six neighbour directions sit at 0°, 60°, ... 300°
    const DIRS: [(i64, i64); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];
    let to_point = |q: i64, r: i64| {
        Point::new(
            isd_m * (q as f64 + r as f64 / 2.0),
            isd_m * (r as f64 * 3f64.sqrt() / 2.0),
        )
    };

    let mut sites = vec![to_point(0, 0)];
    let mut ring = 1i64;
    while sites.len() < n_sites {
        // start at the ring corner in direction 4 and walk each side
        let (mut q, mut r) = (DIRS[4].0 * ring, DIRS[4].1 * ring);
        for dir in DIRS {
            for _ in 0..ring {
                if sites.len() == n_sites {
                    return sites;
                }
                sites.push(to_point(q, r));
                q += dir.0;
                r += dir.1;
            }
        }
        ring += 1;
    }
    sites.truncate(n_sites);
    sites
}

/// Boresight of sector `k` in radians (30°, 150°, 270°).
fn sector_boresight(sector: usize) -> f64 {
    (30.0 + 120.0 * sector as f64).to_radians()
}

/// Whether `p` lies inside the site hexagon (apothem ISD/2, flat sides facing
/// the neighbouring sites) and inside the 120° wedge of `sector`.
fn in_sector(site: Point, sector: usize, isd_m: f64, p: Point) -> bool {
    let (dx, dy) = (p.x - site.x, p.y - site.y);
    let apothem = isd_m / 2.0;
    for k in 0..6 {
        let a = (60.0 * k as f64).to_radians();
        if dx * a.cos() + dy * a.sin() > apothem {
            return false;
        }
    }
    let angle = dy.atan2(dx);
    let offset = (angle - sector_boresight(sector)).rem_euclid(2.0 * PI);
    // wedge spans boresight-60° .. boresight+60°
    !(PI / 3.0..5.0 * PI / 3.0).contains(&offset)
}

fn uniform_in_disc<R: Rng>(rng: &mut R, centre: Point, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = rng.random::<f64>() * 2.0 * PI;
    Point::new(centre.x + r * theta.cos(), centre.y + r * theta.sin())
}

pub fn generate_layout(params: &LayoutParams, seed: u64) -> Result<NetworkLayout> {
    params.validate()?;
    let mut rng = substream(seed, Stream::Layout);
    let sites = hex_sites(params.n_sites, params.isd_m);
    // circumradius of the site hexagon
    let hex_radius = params.isd_m / 3f64.sqrt();

    let mut picos: Vec<Pico> =
        Vec::with_capacity(params.n_sites * params.sectors_per_site * params.picos_per_sector);
    for (site_idx, &site) in sites.iter().enumerate() {
        for sector in 0..params.sectors_per_site {
            for _ in 0..params.picos_per_sector {
                let mut placed = None;
                for _ in 0..params.max_attempts {
                    let p = uniform_in_disc(&mut rng, site, hex_radius);
                    if !in_sector(site, sector, params.isd_m, p) {
                        continue;
                    }
                    if picos
                        .iter()
                        .all(|o| distance(o.position, p) >= params.min_pico_pico_m)
                    {
                        placed = Some(p);
                        break;
                    }
                }
                let position = placed.ok_or_else(|| {
                    Error::Placement(format!(
                        "could not place pico {} in site {site_idx} sector {sector} after {} attempts",
                        picos.len(),
                        params.max_attempts
                    ))
                })?;
                picos.push(Pico {
                    position,
                    site: site_idx,
                    sector,
                });
            }
        }
    }

    let mut ues: Vec<Ue> = Vec::with_capacity(picos.len() * params.ues_per_pico);
    for (cell, pico) in picos.iter().enumerate() {
        for _ in 0..params.ues_per_pico {
            let mut placed = None;
            for _ in 0..params.max_attempts {
                let p = uniform_in_disc(&mut rng, pico.position, params.pico_radius_m);
                let clear_of_picos = picos
                    .iter()
                    .all(|o| distance(o.position, p) >= params.min_pico_ue_m);
                if clear_of_picos
                    && ues
                        .iter()
                        .all(|o| distance(o.position, p) >= params.min_ue_ue_m)
                {
                    placed = Some(p);
                    break;
                }
            }
            let position = placed.ok_or_else(|| {
                Error::Placement(format!(
                    "could not place UE {} around pico {cell} after {} attempts",
                    ues.len(),
                    params.max_attempts
                ))
            })?;
            ues.push(Ue {
                position,
                serving: cell,
            });
        }
    }

    Ok(NetworkLayout {
        params: params.clone(),
        sites,
        picos,
        ues,
    })
}
