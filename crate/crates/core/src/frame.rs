//! TDD frame structure: the seven UL/DL configurations, subframe classes and
//! the two encodings used to exchange configurations between eNBs.
//!
//! Subframes 0, 1, 2, 5 and 6 have the same direction in every configuration
//! (fixed subframes). Subframes 3, 4, 7, 8 and 9 vary (flexible subframes) and
//! are the only place where cross-link interference can appear.
//!
//! Two wire formats exist for a configuration:
//! - a 5-bit *flexible bitmap*, one bit per flexible subframe in ascending
//!   order, `1` meaning downlink;
//! - a 3-bit *config code*, the configuration number in MSB-first binary.
//!
//! The simulated exchange uses the 3-bit code and expands it on receipt.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const SUBFRAMES_PER_FRAME: usize = 10;
pub const NUM_CONFIGS: usize = 7;

pub const FIXED_SUBFRAMES: [usize; 5] = [0, 1, 2, 5, 6];
pub const FLEXIBLE_SUBFRAMES: [usize; 5] = [3, 4, 7, 8, 9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Downlink,
    Special,
    Uplink,
}

impl Direction {
    /// Special subframes carry downlink data and interfere as downlink.
    pub fn is_downlink(self) -> bool {
        !matches!(self, Direction::Uplink)
    }

    pub fn symbol(self) -> char {
        match self {
            Direction::Downlink => 'D',
            Direction::Special => 'S',
            Direction::Uplink => 'U',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubframeClass {
    /// FIS: identical direction in every configuration.
    Fixed,
    /// FLS: direction depends on the configuration.
    Flexible,
}

use Direction::{Downlink as D, Special as S, Uplink as U};

const PATTERNS: [[Direction; SUBFRAMES_PER_FRAME]; NUM_CONFIGS] = [
    [D, S, U, U, U, D, S, U, U, U],
    [D, S, U, U, D, D, S, U, U, D],
    [D, S, U, D, D, D, S, U, D, D],
    [D, S, U, U, U, D, D, D, D, D],
    [D, S, U, U, D, D, D, D, D, D],
    [D, S, U, D, D, D, D, D, D, D],
    [D, S, U, U, U, D, S, U, U, D],
];

/// One of the seven TDD UL/DL configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TddConfiguration {
    id: u8,
}

impl TddConfiguration {
    pub fn new(id: u8) -> Result<Self> {
        if (id as usize) < NUM_CONFIGS {
            Ok(Self { id })
        } else {
            Err(Error::ConfigIdOutOfRange(id as u32))
        }
    }

    pub fn all() -> impl Iterator<Item = TddConfiguration> {
        (0..NUM_CONFIGS as u8).map(|id| TddConfiguration { id })
    }

    pub fn id(self) -> u8 {
        self.id
    }

    pub fn pattern(self) -> &'static [Direction; SUBFRAMES_PER_FRAME] {
        &PATTERNS[self.id as usize]
    }

    /// Direction of `subframe` (taken modulo the frame length).
    pub fn direction(self, subframe: usize) -> Direction {
        PATTERNS[self.id as usize][subframe % SUBFRAMES_PER_FRAME]
    }

    /// Number of subframes per frame that carry downlink (Special included).
    pub fn downlink_subframes(self) -> usize {
        self.pattern().iter().filter(|d| d.is_downlink()).count()
    }

    pub fn flexible_bitmap(self) -> FlexibleBitmap {
        let mut bits = 0u8;
        for &sf in &FLEXIBLE_SUBFRAMES {
            bits = (bits << 1) | u8::from(self.direction(sf).is_downlink());
        }
        FlexibleBitmap(bits)
    }

    pub fn code(self) -> ConfigCode {
        ConfigCode(self.id)
    }
}

impl fmt::Display for TddConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.pattern().iter().map(|d| d.symbol()).collect();
        write!(f, "config {} [{}]", self.id, s)
    }
}

fn check_subframe(subframe: usize) -> Result<()> {
    if subframe < SUBFRAMES_PER_FRAME {
        Ok(())
    } else {
        Err(Error::SubframeOutOfRange(subframe))
    }
}

pub fn subframe_direction(config_id: u8, subframe: usize) -> Result<Direction> {
    check_subframe(subframe)?;
    Ok(TddConfiguration::new(config_id)?.direction(subframe))
}

pub fn classify_subframe(subframe: usize) -> Result<SubframeClass> {
    check_subframe(subframe)?;
    Ok(if FIXED_SUBFRAMES.contains(&subframe) {
        SubframeClass::Fixed
    } else {
        SubframeClass::Flexible
    })
}

/// Position of a flexible subframe inside the 5-bit bitmap, if it is one.
pub fn flexible_slot(subframe: usize) -> Option<usize> {
    FLEXIBLE_SUBFRAMES
        .iter()
        .position(|&s| s == subframe % SUBFRAMES_PER_FRAME)
}

/// 5-bit downlink indicator for the flexible subframes 3, 4, 7, 8, 9.
/// Bit 4 (MSB) is subframe 3, bit 0 is subframe 9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FlexibleBitmap(u8);

impl FlexibleBitmap {
    pub fn from_bits(bits: u8) -> Result<Self> {
        if bits < 32 {
            Ok(Self(bits))
        } else {
            Err(Error::MalformedBits(format!("{bits:#b}")))
        }
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// Whether the sender is downlink in `subframe`. Fixed subframes are
    /// not covered by the bitmap and report `false`.
    pub fn is_downlink(self, subframe: usize) -> bool {
        match flexible_slot(subframe) {
            Some(slot) => (self.0 >> (4 - slot)) & 1 == 1,
            None => false,
        }
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FlexibleBitmap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:05b}", self.0)
    }
}

impl FromStr for FlexibleBitmap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Self(parse_bits(s, 5)?))
    }
}

/// 3-bit configuration number, MSB first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConfigCode(u8);

impl ConfigCode {
    pub fn value(self) -> u8 {
        self.0
    }

    /// Expand the code into the configuration it names. The value 7 is not
    /// a configuration.
    pub fn configuration(self) -> Result<TddConfiguration> {
        TddConfiguration::new(self.0)
    }
}

impl fmt::Display for ConfigCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03b}", self.0)
    }
}

impl FromStr for ConfigCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Self(parse_bits(s, 3)?))
    }
}

fn parse_bits(s: &str, width: usize) -> Result<u8> {
    if s.len() != width || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::MalformedBits(s.to_owned()));
    }
    u8::from_str_radix(s, 2).map_err(|_| Error::MalformedBits(s.to_owned()))
}

pub fn encode_flexible_bitmap(config_id: u8) -> Result<FlexibleBitmap> {
    Ok(TddConfiguration::new(config_id)?.flexible_bitmap())
}

pub fn encode_config_id(config_id: u8) -> Result<ConfigCode> {
    Ok(TddConfiguration::new(config_id)?.code())
}

/// Receive side of the 3-bit exchange: expands the code into the 5-bit
/// flexible bitmap of the named configuration.
pub fn decode_config_id(code: &str) -> Result<FlexibleBitmap> {
    let code: ConfigCode = code.parse()?;
    Ok(code.configuration()?.flexible_bitmap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_lookup() {
        assert_eq!(subframe_direction(1, 4).unwrap(), Direction::Downlink);
        assert_eq!(subframe_direction(0, 3).unwrap(), Direction::Uplink);
        assert_eq!(subframe_direction(5, 1).unwrap(), Direction::Special);
        assert_eq!(subframe_direction(7, 0), Err(Error::ConfigIdOutOfRange(7)));
        assert_eq!(
            subframe_direction(0, 10),
            Err(Error::SubframeOutOfRange(10))
        );
    }

    #[test]
    fn subframe_classes() {
        assert_eq!(classify_subframe(0).unwrap(), SubframeClass::Fixed);
        assert_eq!(classify_subframe(3).unwrap(), SubframeClass::Flexible);
        assert_eq!(classify_subframe(9).unwrap(), SubframeClass::Flexible);
        assert!(classify_subframe(10).is_err());
    }

    #[test]
    fn fixed_subframes_agree_across_configs() {
        for sf in FIXED_SUBFRAMES {
            // sf6 is Special in some configurations and Downlink in others
            let first = subframe_direction(0, sf).unwrap().is_downlink();
            for c in 1..7 {
                assert_eq!(
                    subframe_direction(c, sf).unwrap().is_downlink(),
                    first,
                    "sf {sf} config {c}"
                );
            }
        }
        for c in TddConfiguration::all() {
            assert_eq!(c.direction(0), Direction::Downlink);
            assert_eq!(c.direction(5), Direction::Downlink);
            assert_eq!(c.direction(1), Direction::Special);
            assert_eq!(c.direction(2), Direction::Uplink);
        }
    }

    #[test]
    fn no_special_in_flexible_subframes() {
        for c in TddConfiguration::all() {
            for sf in FLEXIBLE_SUBFRAMES {
                assert_ne!(c.direction(sf), Direction::Special);
            }
        }
    }

    #[test]
    fn bitmaps() {
        assert_eq!(encode_flexible_bitmap(1).unwrap().to_string(), "01001");
        assert_eq!(encode_flexible_bitmap(0).unwrap().to_string(), "00000");
        assert_eq!(encode_flexible_bitmap(5).unwrap().to_string(), "11111");
        for c in 1..7 {
            assert!(!encode_flexible_bitmap(c).unwrap().is_empty());
        }
        assert!(encode_flexible_bitmap(9).is_err());
    }

    #[test]
    fn bitmap_bits_follow_pattern() {
        for c in TddConfiguration::all() {
            let bm = c.flexible_bitmap();
            for sf in 0..SUBFRAMES_PER_FRAME {
                let expected = flexible_slot(sf).is_some() && c.direction(sf).is_downlink();
                assert_eq!(bm.is_downlink(sf), expected);
            }
        }
    }

    #[test]
    fn config_codes() {
        assert_eq!(encode_config_id(1).unwrap().to_string(), "001");
        assert_eq!(decode_config_id("001").unwrap().to_string(), "01001");
        assert_eq!(decode_config_id("111"), Err(Error::ConfigIdOutOfRange(7)));
        assert!(decode_config_id("01").is_err());
        assert!(decode_config_id("0a1").is_err());
        for c in 0..7u8 {
            let code = encode_config_id(c).unwrap().to_string();
            assert_eq!(
                decode_config_id(&code).unwrap(),
                encode_flexible_bitmap(c).unwrap()
            );
        }
    }

    #[test]
    fn bitmap_parse() {
        let bm: FlexibleBitmap = "01001".parse().unwrap();
        assert_eq!(bm, encode_flexible_bitmap(1).unwrap());
        assert!(bm.is_downlink(4) && bm.is_downlink(9));
        assert!(!bm.is_downlink(3));
        assert!("0100".parse::<FlexibleBitmap>().is_err());
        assert!(FlexibleBitmap::from_bits(32).is_err());
    }
}
