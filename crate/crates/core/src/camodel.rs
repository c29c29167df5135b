//! Analytical cache timing and area model.
//!
//! Maps a physical cache description to access time, clock cycles and area so
//! that sweeping the cache size also moves its hit latency — the coupling that
//! produces the saturation-then-degradation performance curves. The model is a
//! calibrated closed form, not a transistor-level solver: at 90 nm a
//! 32 KiB/4-way L1 lands near 0.9 ns and 1 MiB near 3 ns, typical figures
//! for that node. An override table, when supplied, wins
//! over the formula.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Array organization: `Fast` for L1-style parallel tag/data access,
/// `NormalSerial` for L2-style serial access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessType {
    Fast,
    NormalSerial,
}

/// Physical description of one cache array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheGeometry {
    pub capacity_bytes: u64,
    pub line_bytes: u64,
    /// Ways per set.
    pub associativity: u32,
    pub banks: u32,
    pub rw_ports: u32,
    pub tech_nm: u32,
    pub access_type: AccessType,
}

impl CacheGeometry {
    /// L1-style geometry: fast access, single bank/port, 90 nm.
    pub fn l1(capacity_bytes: u64, line_bytes: u64, associativity: u32) -> Self {
        Self {
            capacity_bytes,
            line_bytes,
            associativity,
            banks: 1,
            rw_ports: 1,
            tech_nm: 90,
            access_type: AccessType::Fast,
        }
    }

    /// L2-style geometry: normal/serial access.
    pub fn l2(capacity_bytes: u64, line_bytes: u64, associativity: u32) -> Self {
        Self { access_type: AccessType::NormalSerial, ..Self::l1(capacity_bytes, line_bytes, associativity) }
    }

    pub fn num_sets(&self) -> u64 {
        self.capacity_bytes / (self.line_bytes * u64::from(self.associativity))
    }

    pub fn validate(&self) -> Result<(), CamodelError> {
        if self.capacity_bytes == 0 || self.line_bytes == 0 {
            return Err(CamodelError::InvalidGeometry("capacity and line size must be positive".into()));
        }
        if !self.line_bytes.is_power_of_two() {
            return Err(CamodelError::InvalidGeometry(format!(
                "line size must be a power of two, got {}",
                self.line_bytes
            )));
        }
        if self.associativity == 0 || self.banks == 0 || self.rw_ports == 0 || self.tech_nm == 0 {
            return Err(CamodelError::InvalidGeometry("counts must be >= 1".into()));
        }
        let way_bytes = self.line_bytes * u64::from(self.associativity);
        if !self.capacity_bytes.is_multiple_of(way_bytes) {
            return Err(CamodelError::InvalidGeometry(format!(
                "capacity {} not divisible by line_bytes*associativity = {}",
                self.capacity_bytes, way_bytes
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CamodelError {
    #[error("invalid cache geometry: {0}")]
    InvalidGeometry(String),
    #[error("non-positive input: {0}")]
    NonPositive(String),
    #[error("delay override line {line}: {reason}")]
    Override { line: usize, reason: String },
}

/// Derived timing and area for one geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CacheTiming {
    pub access_ns: f64,
    pub access_cycles: u32,
    pub area_mm2: f64,
}

// Calibration constants for the 90 nm closed form.
const T0_NS: f64 = 0.35;
const ALPHA_NS_PER_SQRT_BYTE: f64 = 0.0025;
const BETA_NS: f64 = 0.05;
const SERIAL_FACTOR: f64 = 1.4;
// Area: bit cell area at 90 nm plus array overhead.
const CELL_UM2_PER_BIT_90NM: f64 = 1.0;
const AREA_OVERHEAD: f64 = 1.35;

/// Access time in nanoseconds:
/// `t0 + alpha * sqrt(capacity/banks) + beta * log2(associativity)`,
/// times 1.4 for `NormalSerial` arrays. Strictly increasing in capacity.
pub fn access_time_ns(geom: &CacheGeometry) -> Result<f64, CamodelError> {
    geom.validate()?;
    let per_bank = geom.capacity_bytes as f64 / f64::from(geom.banks);
    let t = T0_NS + ALPHA_NS_PER_SQRT_BYTE * per_bank.sqrt() + BETA_NS * f64::from(geom.associativity).log2();
    Ok(match geom.access_type {
        AccessType::Fast => t,
        AccessType::NormalSerial => t * SERIAL_FACTOR,
    })
}

/// Convert an access time to whole clock cycles: `ceil(ns * clock_ghz)`,
/// never below 1.
pub fn to_cycles(ns: f64, clock_ghz: f64) -> Result<u32, CamodelError> {
    if !ns.is_finite() || ns <= 0.0 {
        return Err(CamodelError::NonPositive(format!("access time {ns} ns")));
    }
    if !clock_ghz.is_finite() || clock_ghz <= 0.0 {
        return Err(CamodelError::NonPositive(format!("clock {clock_ghz} GHz")));
    }
    Ok(((ns * clock_ghz).ceil() as u32).max(1))
}

/// Coarse data-array area estimate in mm²: linear in capacity. Tag arrays and
/// ports are ignored; only relative area matters for perf-per-area reporting.
pub fn area_mm2(geom: &CacheGeometry) -> Result<f64, CamodelError> {
    geom.validate()?;
    let scale = (f64::from(geom.tech_nm) / 90.0).powi(2);
    let cell = CELL_UM2_PER_BIT_90NM * scale;
    Ok(geom.capacity_bytes as f64 * 8.0 * cell * AREA_OVERHEAD / 1.0e6)
}

/// Exact-match access-time override table, loaded from CSV with header
/// `capacity_bytes,assoc,type,access_ns`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DelayOverrides {
    entries: Vec<(u64, u32, AccessType, f64)>,
}

impl DelayOverrides {
    pub fn parse_csv(text: &str) -> Result<Self, CamodelError> {
        let mut entries = Vec::new();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "capacity_bytes,assoc,type,access_ns" => {}
            Some((_, header)) => {
                return Err(CamodelError::Override {
                    line: 1,
                    reason: format!("bad header `{}`", header.trim()),
                })
            }
            None => return Ok(Self::default()),
        }
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(CamodelError::Override { line: line_no, reason: "expected 4 fields".into() });
            }
            let capacity: u64 = fields[0]
                .parse()
                .map_err(|_| CamodelError::Override { line: line_no, reason: "bad capacity".into() })?;
            let assoc: u32 = fields[1]
                .parse()
                .map_err(|_| CamodelError::Override { line: line_no, reason: "bad associativity".into() })?;
            let ty = match fields[2] {
                "fast" => AccessType::Fast,
                "normal_serial" => AccessType::NormalSerial,
                other => {
                    return Err(CamodelError::Override {
                        line: line_no,
                        reason: format!("unknown access type `{other}`"),
                    })
                }
            };
            let ns: f64 = fields[3]
                .parse()
                .map_err(|_| CamodelError::Override { line: line_no, reason: "bad access_ns".into() })?;
            if !ns.is_finite() || ns <= 0.0 {
                return Err(CamodelError::Override { line: line_no, reason: "access_ns must be positive".into() });
            }
            entries.push((capacity, assoc, ty, ns));
        }
        Ok(Self { entries })
    }

    pub fn lookup(&self, geom: &CacheGeometry) -> Option<f64> {
        self.entries
            .iter()
            .find(|(cap, assoc, ty, _)| *cap == geom.capacity_bytes && *assoc == geom.associativity && *ty == geom.access_type)
            .map(|(_, _, _, ns)| *ns)
    }
}

/// Access time with an optional override table taking precedence.
pub fn access_time_ns_with(geom: &CacheGeometry, overrides: Option<&DelayOverrides>) -> Result<f64, CamodelError> {
    geom.validate()?;
    if let Some(tbl) = overrides {
        if let Some(ns) = tbl.lookup(geom) {
            return Ok(ns);
        }
    }
    access_time_ns(geom)
}

#[cfg(test)]
mod tests {
    use super::*;

    const KIB: u64 = 1024;

    #[test]
    fn access_time_32k_4way_fast() {
        let geom = CacheGeometry::l1(32 * KIB, 32, 4);
        let got = access_time_ns(&geom).unwrap();
        let expect = 0.35 + 0.0025 * (32768.0f64).sqrt() + 0.05 * 2.0;
        assert!((got - expect).abs() < 1e-12);
        assert!((got - 0.9025).abs() < 1e-3);
    }

    #[test]
    fn access_time_64k_exceeds_32k() {
        let g32 = CacheGeometry::l1(32 * KIB, 32, 4);
        let g64 = CacheGeometry::l1(64 * KIB, 32, 4);
        let t64 = access_time_ns(&g64).unwrap();
        assert!((t64 - 1.09).abs() < 1e-9);
        assert!(t64 > access_time_ns(&g32).unwrap());
    }

    #[test]
    fn serial_access_is_exactly_1p4x() {
        let fast = CacheGeometry::l1(128 * KIB, 64, 8);
        let serial = CacheGeometry { access_type: AccessType::NormalSerial, ..fast };
        let tf = access_time_ns(&fast).unwrap();
        let ts = access_time_ns(&serial).unwrap();
        assert_eq!(ts, tf * 1.4);
    }

    #[test]
    fn to_cycles_examples() {
        assert_eq!(to_cycles(0.9025, 1.0).unwrap(), 1);
        assert_eq!(to_cycles(0.9025, 2.0).unwrap(), 2);
        // Anything below one clock period floors at one cycle.
        assert_eq!(to_cycles(0.01, 1.0).unwrap(), 1);
    }

    #[test]
    fn to_cycles_rejects_non_positive() {
        assert!(to_cycles(0.0, 1.0).is_err());
        assert!(to_cycles(1.0, 0.0).is_err());
        assert!(to_cycles(-1.0, 1.0).is_err());
    }

    #[test]
    fn area_32k() {
        let geom = CacheGeometry::l1(32 * KIB, 32, 4);
        let got = area_mm2(&geom).unwrap();
        assert!((got - 32768.0 * 8.0 * 1.0 * 1.35 / 1e6).abs() < 1e-12);
        assert!((got - 0.354).abs() < 1e-3);
    }

    #[test]
    fn area_linear_in_capacity() {
        let a = area_mm2(&CacheGeometry::l1(64 * KIB, 32, 4)).unwrap();
        let b = area_mm2(&CacheGeometry::l1(128 * KIB, 32, 4)).unwrap();
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn zero_capacity_is_an_error() {
        assert!(area_mm2(&CacheGeometry::l1(0, 32, 4)).is_err());
        assert!(access_time_ns(&CacheGeometry::l1(0, 32, 4)).is_err());
    }

    #[test]
    fn invalid_geometry_rejected() {
        // capacity not divisible by line*assoc
        assert!(CacheGeometry::l1(48 * KIB + 13, 32, 4).validate().is_err());
        // line size not a power of two
        assert!(CacheGeometry::l1(32 * KIB, 48, 4).validate().is_err());
    }

    #[test]
    fn strictly_monotone_in_capacity_4k_to_4m() {
        let mut prev = 0.0;
        let mut cap = 4 * KIB;
        while cap <= 4 * KIB * KIB {
            let t = access_time_ns(&CacheGeometry::l1(cap, 32, 4)).unwrap();
            assert!(t > prev, "not strictly increasing at {cap}");
            prev = t;
            cap += 4 * KIB;
        }
    }

    #[test]
    fn to_cycles_monotone_and_positive() {
        let mut prev = 0;
        for i in 1..2000 {
            let ns = i as f64 * 0.01;
            let c = to_cycles(ns, 1.3).unwrap();
            assert!(c >= 1);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn override_table_wins() {
        let csv = "capacity_bytes,assoc,type,access_ns\n65536,4,fast,2.0\n";
        let tbl = DelayOverrides::parse_csv(csv).unwrap();
        let g64 = CacheGeometry::l1(64 * KIB, 32, 4);
        assert_eq!(access_time_ns_with(&g64, Some(&tbl)).unwrap(), 2.0);
        // Non-matching geometry falls back to the formula.
        let g32 = CacheGeometry::l1(32 * KIB, 32, 4);
        assert_eq!(
            access_time_ns_with(&g32, Some(&tbl)).unwrap(),
            access_time_ns(&g32).unwrap()
        );
    }

    #[test]
    fn override_table_rejects_bad_header() {
        assert!(DelayOverrides::parse_csv("cap,assoc,type,ns\n").is_err());
    }
}
