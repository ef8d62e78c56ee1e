//! dB / linear conversions. Powers are in dBm with a milliwatt reference.

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

/// Thermal noise power in dBm over `bandwidth_hz` for a density given in dBm/Hz.
pub fn noise_power_dbm(density_dbm_per_hz: f64, bandwidth_hz: f64) -> f64 {
    density_dbm_per_hz + 10.0 * bandwidth_hz.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        for db in [-120.0, -3.0, 0.0, 10.0, 46.0] {
            assert!((linear_to_db(db_to_linear(db)) - db).abs() < 1e-12);
        }
        assert_eq!(dbm_to_mw(0.0), 1.0);
        assert!(mw_to_dbm(0.0).is_infinite());
    }

    #[test]
    fn noise_over_ten_megahertz() {
        assert!((noise_power_dbm(-174.0, 10e6) + 104.0).abs() < 1e-12);
    }
}
