//! Large-scale channel: distance-based pathloss per link type and the
//! coupling matrix (pathloss plus antenna gains) between every pair of nodes.
//!
//! There is no shadowing and no small-scale fading, so the matrix is built
//! once per layout and stays constant for the whole run.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::topology::{distance, NetworkLayout, NodeId, NodeKind};
use crate::units::db_to_linear;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkType {
    EnbToUe,
    UeToEnb,
    EnbToEnb,
    UeToUe,
}

impl LinkType {
    pub fn between(tx: NodeKind, rx: NodeKind) -> Self {
        match (tx, rx) {
            (NodeKind::PicoEnb, NodeKind::Ue) => LinkType::EnbToUe,
            (NodeKind::Ue, NodeKind::PicoEnb) => LinkType::UeToEnb,
            (NodeKind::PicoEnb, NodeKind::PicoEnb) => LinkType::EnbToEnb,
            (NodeKind::Ue, NodeKind::Ue) => LinkType::UeToUe,
        }
    }
}

/// Single- or dual-slope log-distance pathloss, `A + B·log10(d_km)`.
///
/// Below `breakpoint_m` (or everywhere when unset) the near segment applies,
/// above it the far segment. Distances shorter than `min_distance_m` are
/// evaluated at `min_distance_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossCurve {
    pub intercept_db: f64,
    pub slope_db: f64,
    #[serde(default)]
    pub breakpoint_m: Option<f64>,
    #[serde(default)]
    pub far_intercept_db: f64,
    #[serde(default)]
    pub far_slope_db: f64,
    #[serde(default)]
    pub min_distance_m: f64,
}

impl PathlossCurve {
    pub const fn single(intercept_db: f64, slope_db: f64, min_distance_m: f64) -> Self {
        Self {
            intercept_db,
            slope_db,
            breakpoint_m: None,
            far_intercept_db: 0.0,
            far_slope_db: 0.0,
            min_distance_m,
        }
    }

    pub const fn dual(
        intercept_db: f64,
        slope_db: f64,
        breakpoint_m: f64,
        far_intercept_db: f64,
        far_slope_db: f64,
        min_distance_m: f64,
    ) -> Self {
        Self {
            intercept_db,
            slope_db,
            breakpoint_m: Some(breakpoint_m),
            far_intercept_db,
            far_slope_db,
            min_distance_m,
        }
    }

    pub fn eval(&self, distance_m: f64) -> Result<f64> {
        if !(distance_m.is_finite() && distance_m > 0.0) {
            return Err(Error::InvalidDistance(distance_m));
        }
        let d_km = distance_m.max(self.min_distance_m) / 1000.0;
        Ok(match self.breakpoint_m {
            Some(bp) if d_km * 1000.0 > bp => {
                self.far_intercept_db + self.far_slope_db * d_km.log10()
            }
            _ => self.intercept_db + self.slope_db * d_km.log10(),
        })
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        let finite = [
            self.intercept_db,
            self.slope_db,
            self.far_intercept_db,
            self.far_slope_db,
            self.min_distance_m,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(invalid(name, "parameters must be finite"));
        }
        if self.slope_db < 0.0 || self.far_slope_db < 0.0 {
            return Err(invalid(name, "slopes must be non-negative"));
        }
        if self.min_distance_m < 0.0 {
            return Err(invalid(name, "min_distance_m must be non-negative"));
        }
        if let Some(bp) = self.breakpoint_m {
            if !(bp.is_finite() && bp > 0.0) {
                return Err(invalid(name, "breakpoint_m must be positive"));
            }
            let near = self.intercept_db + self.slope_db * (bp / 1000.0).log10();
            let far = self.far_intercept_db + self.far_slope_db * (bp / 1000.0).log10();
            if far < near - 1e-9 {
                return Err(invalid(
                    name,
                    "far segment drops below near segment at the breakpoint",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathlossModel {
    /// eNB↔UE in either direction.
    pub enb_ue: PathlossCurve,
    pub enb_enb: PathlossCurve,
    pub ue_ue: PathlossCurve,
}

impl Default for PathlossModel {
    fn default() -> Self {
        Self {
            enb_ue: PathlossCurve::single(140.7, 36.7, 10.0),
            enb_enb: PathlossCurve::dual(98.45, 20.0, 2000.0 / 3.0, 175.78, 40.0, 40.0),
            ue_ue: PathlossCurve::dual(98.45, 20.0, 50.0, 175.78, 40.0, 3.0),
        }
    }
}

impl PathlossModel {
    pub fn curve(&self, link: LinkType) -> &PathlossCurve {
        match link {
            LinkType::EnbToUe | LinkType::UeToEnb => &self.enb_ue,
            LinkType::EnbToEnb => &self.enb_enb,
            LinkType::UeToUe => &self.ue_ue,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.enb_ue.validate("pathloss.enb_ue")?;
        self.enb_enb.validate("pathloss.enb_enb")?;
        self.ue_ue.validate("pathloss.ue_ue")
    }
}

pub fn pathloss_db(model: &PathlossModel, link: LinkType, distance_m: f64) -> Result<f64> {
    model.curve(link).eval(distance_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaGains {
    pub enb_dbi: f64,
    pub ue_dbi: f64,
}

impl Default for AntennaGains {
    fn default() -> Self {
        Self {
            enb_dbi: 5.0,
            ue_dbi: 0.0,
        }
    }
}

impl AntennaGains {
    pub fn of(&self, kind: NodeKind) -> f64 {
        match kind {
            NodeKind::PicoEnb => self.enb_dbi,
            NodeKind::Ue => self.ue_dbi,
        }
    }
}

/// `−PL + G_tx + G_rx` in dB.
pub fn coupling_gain_db(pathloss_db: f64, tx: NodeKind, rx: NodeKind, gains: &AntennaGains) -> f64 {
    -pathloss_db + gains.of(tx) + gains.of(rx)
}

/// Dense pairwise pathloss and linear coupling gain over all nodes. eNBs
/// occupy indices `0..n_enb`, UEs follow.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    n_enb: usize,
    n_ue: usize,
    gains: AntennaGains,
    pathloss_db: Vec<f64>,
    gain_lin: Vec<f64>,
}

impl CouplingMatrix {
    pub fn n_enb(&self) -> usize {
        self.n_enb
    }

    pub fn n_ue(&self) -> usize {
        self.n_ue
    }

    pub fn antenna_gains(&self) -> &AntennaGains {
        &self.gains
    }

    fn flat(&self, node: NodeId) -> usize {
        match node.kind {
            NodeKind::PicoEnb => {
                debug_assert!(node.index < self.n_enb);
                node.index
            }
            NodeKind::Ue => {
                debug_assert!(node.index < self.n_ue);
                self.n_enb + node.index
            }
        }
    }

    fn at(&self, a: NodeId, b: NodeId) -> usize {
        self.flat(a) * (self.n_enb + self.n_ue) + self.flat(b)
    }

    /// Pathloss in dB; `+∞` on the diagonal.
    pub fn pathloss_db(&self, a: NodeId, b: NodeId) -> f64 {
        self.pathloss_db[self.at(a, b)]
    }

    /// Coupling gain in dB; `−∞` on the diagonal.
    pub fn coupling_gain_db(&self, tx: NodeId, rx: NodeId) -> f64 {
        if tx == rx {
            return f64::NEG_INFINITY;
        }
        coupling_gain_db(self.pathloss_db(tx, rx), tx.kind, rx.kind, &self.gains)
    }

    /// Coupling gain as a linear power ratio; 0 on the diagonal.
    #[inline]
    pub fn gain_linear(&self, tx: NodeId, rx: NodeId) -> f64 {
        self.gain_lin[self.at(tx, rx)]
    }
}

pub fn build_coupling_matrix(
    layout: &NetworkLayout,
    model: &PathlossModel,
    gains: &AntennaGains,
) -> Result<CouplingMatrix> {
    model.validate()?;
    let n_enb = layout.n_cells();
    let n_ue = layout.n_ues();
    let n = n_enb + n_ue;
    let node = |i: usize| {
        if i < n_enb {
            NodeId::enb(i)
        } else {
            NodeId::ue(i - n_enb)
        }
    };

    let mut pathloss = vec![f64::INFINITY; n * n];
    let mut gain_lin = vec![0.0; n * n];
    for i in 0..n {
        let a = node(i);
        let pa = layout.position(a);
        for j in (i + 1)..n {
            let b = node(j);
            let pl = pathloss_db(
                model,
                LinkType::between(a.kind, b.kind),
                distance(pa, layout.position(b)),
            )?;
            let g = db_to_linear(coupling_gain_db(pl, a.kind, b.kind, gains));
            pathloss[i * n + j] = pl;
            pathloss[j * n + i] = pl;
            gain_lin[i * n + j] = g;
            gain_lin[j * n + i] = g;
        }
    }

    Ok(CouplingMatrix {
        n_enb,
        n_ue,
        gains: *gains,
        pathloss_db: pathloss,
        gain_lin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{generate_layout, LayoutParams, Pico, Point, Ue};

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn enb_ue_at_100m() {
        let m = PathlossModel::default();
        let pl = pathloss_db(&m, LinkType::EnbToUe, 100.0).unwrap();
        // 140.7 + 36.7 * log10(0.1)
        assert!(approx(pl, 104.0, 1e-9), "{pl}");
        assert_eq!(pl, pathloss_db(&m, LinkType::UeToEnb, 100.0).unwrap());
    }

    #[test]
    fn decade_adds_slope() {
        let m = PathlossModel::default();
        let a = pathloss_db(&m, LinkType::EnbToUe, 20.0).unwrap();
        let b = pathloss_db(&m, LinkType::EnbToUe, 200.0).unwrap();
        assert!(approx(b - a, 36.7, 1e-9));
        let a = pathloss_db(&m, LinkType::UeToUe, 100.0).unwrap();
        let b = pathloss_db(&m, LinkType::UeToUe, 1000.0).unwrap();
        assert!(approx(b - a, 40.0, 1e-9));
    }

    #[test]
    fn single_slope_enb_enb_at_1km() {
        let m = PathlossModel {
            enb_enb: PathlossCurve::single(98.45, 20.0, 40.0),
            ..PathlossModel::default()
        };
        assert!(approx(
            pathloss_db(&m, LinkType::EnbToEnb, 1000.0).unwrap(),
            98.45,
            1e-12
        ));
    }

    #[test]
    fn clamps_at_minimum_distance() {
        let m = PathlossModel::default();
        let at_min = pathloss_db(&m, LinkType::EnbToUe, 10.0).unwrap();
        assert_eq!(pathloss_db(&m, LinkType::EnbToUe, 1.0).unwrap(), at_min);
        assert!(pathloss_db(&m, LinkType::EnbToUe, 0.0).is_err());
        assert!(pathloss_db(&m, LinkType::EnbToUe, -3.0).is_err());
        assert!(pathloss_db(&m, LinkType::EnbToUe, f64::NAN).is_err());
    }

    #[test]
    fn gain_arithmetic() {
        let g = AntennaGains::default();
        assert_eq!(
            coupling_gain_db(110.0, NodeKind::PicoEnb, NodeKind::PicoEnb, &g),
            -100.0
        );
        assert_eq!(
            coupling_gain_db(90.0, NodeKind::Ue, NodeKind::PicoEnb, &g),
            -85.0
        );
        assert_eq!(
            coupling_gain_db(98.45, NodeKind::Ue, NodeKind::Ue, &g),
            -98.45
        );
    }

    #[test]
    fn rejects_downward_breakpoint() {
        let m = PathlossModel {
            enb_enb: PathlossCurve::dual(120.0, 20.0, 100.0, 60.0, 20.0, 1.0),
            ..PathlossModel::default()
        };
        assert!(m.validate().is_err());
    }

    fn two_node_layout() -> NetworkLayout {
        NetworkLayout {
            params: LayoutParams {
                n_sites: 1,
                picos_per_sector: 1,
                ues_per_pico: 1,
                ..LayoutParams::default()
            },
            sites: vec![Point::new(0.0, 0.0)],
            picos: vec![Pico {
                position: Point::new(0.0, 0.0),
                site: 0,
                sector: 0,
            }],
            ues: vec![Ue {
                position: Point::new(30.0, 40.0),
                serving: 0,
            }],
        }
    }

    #[test]
    fn golden_two_node() {
        let layout = two_node_layout();
        let m = PathlossModel::default();
        let g = AntennaGains::default();
        let cm = build_coupling_matrix(&layout, &m, &g).unwrap();
        let pl = pathloss_db(&m, LinkType::EnbToUe, 50.0).unwrap();
        let expected = coupling_gain_db(pl, NodeKind::PicoEnb, NodeKind::Ue, &g);
        assert_eq!(cm.coupling_gain_db(NodeId::enb(0), NodeId::ue(0)), expected);
        assert_eq!(cm.coupling_gain_db(NodeId::ue(0), NodeId::enb(0)), expected);
        assert!(approx(
            cm.gain_linear(NodeId::enb(0), NodeId::ue(0)),
            db_to_linear(expected),
            1e-25
        ));
    }

    #[test]
    fn diagonal_and_reciprocity() {
        let layout = generate_layout(
            &LayoutParams {
                n_sites: 1,
                picos_per_sector: 1,
                ues_per_pico: 2,
                ..LayoutParams::default()
            },
            4,
        )
        .unwrap();
        let cm =
            build_coupling_matrix(&layout, &PathlossModel::default(), &AntennaGains::default())
                .unwrap();
        for i in 0..3 {
            assert_eq!(
                cm.coupling_gain_db(NodeId::enb(i), NodeId::enb(i)),
                f64::NEG_INFINITY
            );
            assert_eq!(cm.gain_linear(NodeId::enb(i), NodeId::enb(i)), 0.0);
        }
        let nodes: Vec<NodeId> = (0..3)
            .map(NodeId::enb)
            .chain((0..6).map(NodeId::ue))
            .collect();
        for &a in &nodes {
            for &b in &nodes {
                if a != b {
                    assert_eq!(cm.pathloss_db(a, b), cm.pathloss_db(b, a));
                    assert!(cm.pathloss_db(a, b) >= 0.0);
                    let cap = cm.antenna_gains().of(a.kind) + cm.antenna_gains().of(b.kind);
                    assert!(cm.coupling_gain_db(a, b) <= cap);
                }
            }
        }
    }
}
