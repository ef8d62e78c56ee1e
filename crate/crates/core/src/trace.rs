//! Optional run traces: one row per (period, cell, flexible subframe) with the
//! indicator and boost, and one row per (subframe, active cell) with the SINR
//! breakdown.

use std::io::Write;

use crate::frame::{TddConfiguration, FLEXIBLE_SUBFRAMES};
use crate::phy::SinrBreakdown;
use crate::powerctl::IndicatorState;
use crate::traffic::LinkDirection;
use crate::units::mw_to_dbm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub enum TraceLevel {
    #[default]
    Off,
    Period,
    Subframe,
}

impl std::str::FromStr for TraceLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "off" | "0" => Ok(TraceLevel::Off),
            "period" | "1" => Ok(TraceLevel::Period),
            "subframe" | "2" => Ok(TraceLevel::Subframe),
            other => Err(format!(
                "unknown trace level {other:?} (off, period, subframe)"
            )),
        }
    }
}

pub struct PeriodRecord<'a> {
    pub time_ms: u64,
    pub cell: usize,
    pub config: TddConfiguration,
    pub state: &'a IndicatorState,
}

pub struct SubframeRecord<'a> {
    pub time_ms: u64,
    pub cell: usize,
    pub direction: LinkDirection,
    pub ue: usize,
    pub power_dbm: f64,
    pub delta_db: f64,
    pub breakdown: &'a SinrBreakdown,
    pub served_bits: u64,
}

pub trait TraceSink {
    fn wants_periods(&self) -> bool {
        false
    }

    fn period(&mut self, _record: &PeriodRecord<'_>) {}

    fn subframe(&mut self, _record: &SubframeRecord<'_>) {}
}

pub struct NoTrace;

impl TraceSink for NoTrace {}

/// Writes trace rows as CSV. IO errors are kept and reported by `finish`.
pub struct CsvTrace<P: Write, S: Write> {
    periods: Option<csv::Writer<P>>,
    subframes: Option<csv::Writer<S>>,
    error: Option<csv::Error>,
}

impl<P: Write, S: Write> CsvTrace<P, S> {
    pub fn new(periods: Option<P>, subframes: Option<S>) -> Self {
        let mut t = Self {
            periods: periods.map(csv::Writer::from_writer),
            subframes: subframes.map(csv::Writer::from_writer),
            error: None,
        };
        if let Some(w) = t.periods.as_mut() {
            let r = w.write_record([
                "time_ms",
                "cell",
                "config",
                "subframe",
                "indicator",
                "indicator_max",
                "delta_db",
            ]);
            t.keep(r);
        }
        if let Some(w) = t.subframes.as_mut() {
            let r = w.write_record([
                "time_ms",
                "cell",
                "direction",
                "ue",
                "power_dbm",
                "delta_db",
                "signal_dbm",
                "enb_interference_dbm",
                "ue_interference_dbm",
                "noise_dbm",
                "sinr_db",
                "served_bits",
            ]);
            t.keep(r);
        }
        t
    }

    fn keep(&mut self, r: csv::Result<()>) {
        if let Err(e) = r {
            self.error.get_or_insert(e);
        }
    }

    pub fn finish(mut self) -> csv::Result<()> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        if let Some(w) = self.periods.as_mut() {
            w.flush()?;
        }
        if let Some(w) = self.subframes.as_mut() {
            w.flush()?;
        }
        Ok(())
    }
}

impl<P: Write, S: Write> TraceSink for CsvTrace<P, S> {
    fn wants_periods(&self) -> bool {
        self.periods.is_some()
    }

    fn period(&mut self, rec: &PeriodRecord<'_>) {
        let Some(w) = self.periods.as_mut() else {
            return;
        };
        let mut result = Ok(());
        for (slot, sf) in FLEXIBLE_SUBFRAMES.iter().enumerate() {
            result = result.and_then(|_| {
                w.write_record(&[
                    rec.time_ms.to_string(),
                    rec.cell.to_string(),
                    rec.config.id().to_string(),
                    sf.to_string(),
                    rec.state.indicator[slot].to_string(),
                    rec.state.i_max.to_string(),
                    rec.state.delta_db[slot].to_string(),
                ])
            });
        }
        self.keep(result);
    }

    fn subframe(&mut self, rec: &SubframeRecord<'_>) {
        let Some(w) = self.subframes.as_mut() else {
            return;
        };
        let b = rec.breakdown;
        let r = w.write_record(&[
            rec.time_ms.to_string(),
            rec.cell.to_string(),
            rec.direction.label().to_string(),
            rec.ue.to_string(),
            format!("{:.4}", rec.power_dbm),
            rec.delta_db.to_string(),
            format!("{:.4}", mw_to_dbm(b.signal_mw)),
            format!("{:.4}", mw_to_dbm(b.enb_interference_mw)),
            format!("{:.4}", mw_to_dbm(b.ue_interference_mw)),
            format!("{:.4}", mw_to_dbm(b.noise_mw)),
            format!("{:.4}", b.sinr_db()),
            rec.served_bits.to_string(),
        ]);
        self.keep(r);
    }
}
