//! Design-space exploration: parameter sweeps, performance-penalty (per_pen)
//! tables and averaging, best/optimum extraction, and the staged
//! cache → register-file → superscalar methodology.

pub mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camodel::{self, AccessType, CacheGeometry, CamodelError, DelayOverrides};
use crate::cachesim::{CacheConfig, CacheSimError, HierarchyConfig};
use crate::cpu::{simulate, CoreConfig, SimError};
use crate::kernels::{gen_kernel, KernelError, KernelSpec};
use crate::trace::Trace;

/// "No performance penalty" tolerance: a point within this many percentage
/// points of the grid maximum counts as best.
pub const DEFAULT_EPSILON_PP: f64 = 0.05;
/// Optimum-point tolerance: smallest size within this many percentage points
/// of the best.
pub const DEFAULT_THRESHOLD_PP: f64 = 2.0;
/// A final grid step improving the average by less than this is saturated.
pub const SATURATION_PP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    L1Kb,
    L2Kb,
    PhysRegs,
    Rob,
    Iq,
    Lsq,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::L1Kb => "l1_kb",
            Axis::L2Kb => "l2_kb",
            Axis::PhysRegs => "phys_regs",
            Axis::Rob => "rob",
            Axis::Iq => "iq",
            Axis::Lsq => "lsq",
        }
    }

    pub fn from_name(name: &str) -> Option<Axis> {
        Self::all().into_iter().find(|a| a.name() == name)
    }

    pub fn all() -> [Axis; 6] {
        [Axis::L1Kb, Axis::L2Kb, Axis::PhysRegs, Axis::Rob, Axis::Iq, Axis::Lsq]
    }
}

#[derive(Debug, Error)]
pub enum DseError {
    #[error("cycle counts must be positive")]
    NonPositiveCycles,
    #[error("sweep values must be non-empty and strictly increasing")]
    BadValues,
    #[error("empty or non-finite result curve")]
    EmptyCurve,
    #[error("no optimum under threshold {threshold_pp} pp")]
    NoOptimum { threshold_pp: f64 },
    #[error("benchmark {benchmark} at {axis}={value}: {source}")]
    Annotated {
        benchmark: String,
        axis: &'static str,
        value: u64,
        #[source]
        source: Box<DseError>,
    },
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<DseError>,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Cache(#[from] CacheSimError),
    #[error(transparent)]
    Camodel(#[from] CamodelError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Performance penalty of a configuration against the reference, in signed
/// percent: `(cycles_ref / cycles_cfg − 1) × 100`. Negative means slower.
pub fn per_pen(cycles_cfg: u64, cycles_ref: u64) -> Result<f64, DseError> {
    if cycles_cfg == 0 || cycles_ref == 0 {
        return Err(DseError::NonPositiveCycles);
    }
    Ok((cycles_ref as f64 / cycles_cfg as f64 - 1.0) * 100.0)
}

/// One cache level's physical parameters for sweep-time hierarchy building.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CacheParams {
    pub capacity_kb: u64,
    pub line_bytes: u64,
    pub associativity: u32,
    pub access_type: AccessType,
    /// Hit latency used when the delay model is off.
    pub fixed_hit_cycles: u32,
}

impl CacheParams {
    pub fn geometry(&self) -> CacheGeometry {
        CacheGeometry {
            capacity_bytes: self.capacity_kb * 1024,
            line_bytes: self.line_bytes,
            associativity: self.associativity,
            banks: 1,
            rw_ports: 1,
            tech_nm: 90,
            access_type: self.access_type,
        }
    }
}

/// Baseline memory platform. When `use_delay_model` is set, hit latencies are
/// recomputed from the cache geometry at every swept size.
#[derive(Debug, Clone)]
pub struct PlatformSpec {
    pub l1: CacheParams,
    pub l2: CacheParams,
    pub mem_cycles: u32,
    pub clock_ghz: f64,
    pub use_delay_model: bool,
    pub overrides: Option<DelayOverrides>,
    pub perfect_cycles: Option<u32>,
}

impl Default for CacheParams {
    fn default() -> Self {
        Self { capacity_kb: 64, line_bytes: 32, associativity: 4, access_type: AccessType::Fast, fixed_hit_cycles: 1 }
    }
}

impl PlatformSpec {
    /// The baseline embedded platform: L1 64 KiB / L2 128 KiB, delay model on.
    pub fn embedded_default() -> Self {
        Self {
            l1: CacheParams::default(),
            l2: CacheParams {
                capacity_kb: 128,
                line_bytes: 64,
                associativity: 8,
                access_type: AccessType::NormalSerial,
                fixed_hit_cycles: 6,
            },
            mem_cycles: 100,
            clock_ghz: 1.0,
            use_delay_model: true,
            overrides: None,
            perfect_cycles: None,
        }
    }

    fn hit_cycles(&self, params: &CacheParams) -> Result<u32, DseError> {
        if self.use_delay_model {
            let ns = camodel::access_time_ns_with(&params.geometry(), self.overrides.as_ref())?;
            Ok(camodel::to_cycles(ns, self.clock_ghz)?)
        } else {
            Ok(params.fixed_hit_cycles)
        }
    }

    /// Build the concrete hierarchy: both L1 arrays get the full L1 size.
    pub fn hierarchy(&self) -> Result<HierarchyConfig, DseError> {
        let l1 = CacheConfig { geometry: self.l1.geometry(), hit_cycles: self.hit_cycles(&self.l1)? };
        let l2 = CacheConfig { geometry: self.l2.geometry(), hit_cycles: self.hit_cycles(&self.l2)? };
        let cfg = HierarchyConfig { l1i: l1, l1d: l1, l2, mem_cycles: self.mem_cycles, perfect_cycles: self.perfect_cycles };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A generated benchmark trace under its report label.
#[derive(Debug, Clone)]
pub struct Workload {
    pub label: String,
    pub trace: Trace,
}

impl Workload {
    /// Generate all workloads (parallel, order-stable).
    pub fn generate(specs: &[(String, KernelSpec)]) -> Result<Vec<Workload>, DseError> {
        specs
            .par_iter()
            .map(|(label, spec)| {
                let trace = gen_kernel(spec)?;
                Ok(Workload { label: label.clone(), trace })
            })
            .collect()
    }
}

/// One axis sweep over an ordered value grid against a fixed baseline.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<u64>,
    pub core: CoreConfig,
    pub platform: PlatformSpec,
}

impl SweepSpec {
    fn validate(&self) -> Result<(), DseError> {
        if self.values.is_empty() || self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DseError::BadValues);
        }
        Ok(())
    }
}

fn apply_axis(axis: Axis, value: u64, core: &CoreConfig, platform: &PlatformSpec) -> (CoreConfig, PlatformSpec) {
    let mut core = *core;
    let mut platform = platform.clone();
    match axis {
        Axis::L1Kb => platform.l1.capacity_kb = value,
        Axis::L2Kb => platform.l2.capacity_kb = value,
        Axis::PhysRegs => core.phys_regs = value as u32,
        Axis::Rob => core.rob_size = value as u32,
        Axis::Iq => core.iq_size = value as u32,
        Axis::Lsq => core.lsq_size = value as u32,
    }
    (core, platform)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub benchmark: String,
    pub roi_cycles: u64,
    pub ipc_roi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub benchmark: String,
    pub value: u64,
    pub roi_cycles: u64,
    pub ipc_roi: f64,
    pub per_pen: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvgPoint {
    pub value: u64,
    pub per_pen: f64,
}

/// Per-(benchmark, value) ROI cycles and penalties plus the per-value average
/// curve (arithmetic mean over benchmarks, in workload order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub values: Vec<u64>,
    pub benchmarks: Vec<String>,
    pub baseline: Vec<BaselineRow>,
    pub rows: Vec<SweepRow>,
    pub avg_per_pen: Vec<AvgPoint>,
}

impl SweepResult {
    pub fn avg_points(&self) -> Vec<(u64, f64)> {
        self.avg_per_pen.iter().map(|p| (p.value, p.per_pen)).collect()
    }

    pub fn row(&self, benchmark: &str, value: u64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.benchmark == benchmark && r.value == value)
    }
}

fn annotate(benchmark: &str, axis: Axis, value: u64) -> impl Fn(DseError) -> DseError + '_ {
    move |e| DseError::Annotated {
        benchmark: benchmark.to_string(),
        axis: axis.name(),
        value,
        source: Box::new(e),
    }
}

/// Simulate every benchmark at every grid value, filling per_pen against the
/// baseline configuration. Deterministic, including under parallel execution.
pub fn run_sweep(spec: &SweepSpec, workloads: &[Workload]) -> Result<SweepResult, DseError> {
    spec.validate()?;
    let base_hier = spec.platform.hierarchy()?;

    let baseline: Vec<BaselineRow> = workloads
        .par_iter()
        .map(|w| {
            let r = simulate(&w.trace, &spec.core, &base_hier)
                .map_err(DseError::from)
                .map_err(annotate(&w.label, spec.axis, 0))?;
            Ok(BaselineRow { benchmark: w.label.clone(), roi_cycles: r.roi_cycles, ipc_roi: r.ipc_roi })
        })
        .collect::<Result<_, DseError>>()?;

    let mut configs = Vec::with_capacity(spec.values.len());
    for &v in &spec.values {
        let (core, platform) = apply_axis(spec.axis, v, &spec.core, &spec.platform);
        let hier = platform.hierarchy().map_err(|e| DseError::Annotated {
            benchmark: "-".into(),
            axis: spec.axis.name(),
            value: v,
            source: Box::new(e),
        })?;
        core.validate().map_err(DseError::from).map_err(|e| DseError::Annotated {
            benchmark: "-".into(),
            axis: spec.axis.name(),
            value: v,
            source: Box::new(e),
        })?;
        configs.push((v, core, hier));
    }

    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|ci| (0..workloads.len()).map(move |wi| (ci, wi)))
        .collect();
    let sims: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(ci, wi)| {
            let (value, core, hier) = &configs[ci];
            let w = &workloads[wi];
            let r = simulate(&w.trace, core, hier)
                .map_err(DseError::from)
                .map_err(annotate(&w.label, spec.axis, *value))?;
            let pen = per_pen(r.roi_cycles, baseline[wi].roi_cycles)
                .map_err(annotate(&w.label, spec.axis, *value))?;
            Ok(SweepRow {
                benchmark: w.label.clone(),
                value: *value,
                roi_cycles: r.roi_cycles,
                ipc_roi: r.ipc_roi,
                per_pen: pen,
            })
        })
        .collect::<Result<_, DseError>>()?;

    let nb = workloads.len();
    let avg_per_pen = spec
        .values
        .iter()
        .enumerate()
        .map(|(ci, &value)| {
            let sum: f64 = sims[ci * nb..(ci + 1) * nb].iter().map(|r| r.per_pen).sum();
            AvgPoint { value, per_pen: sum / nb as f64 }
        })
        .collect();

    Ok(SweepResult {
        axis: spec.axis.name().to_string(),
        values: spec.values.clone(),
        benchmarks: workloads.iter().map(|w| w.label.clone()).collect(),
        baseline,
        rows: sims,
        avg_per_pen,
    })
}

fn best_index(avgs: &[f64], epsilon_pp: f64) -> Result<usize, DseError> {
    if avgs.is_empty() || avgs.iter().any(|v| !v.is_finite()) {
        return Err(DseError::EmptyCurve);
    }
    let max = avgs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(avgs.iter().position(|&v| v >= max - epsilon_pp).unwrap())
}

/// Best size: the first (smallest) grid point whose average penalty is within
/// `epsilon_pp` of the grid maximum.
pub fn find_best(points: &[(u64, f64)], epsilon_pp: f64) -> Result<u64, DseError> {
    let avgs: Vec<f64> = points.iter().map(|p| p.1).collect();
    Ok(points[best_index(&avgs, epsilon_pp)?].0)
}

/// Optimum size: the first grid point within `threshold_pp` of the best
/// point's average. Always at most the best size.
pub fn find_optimum(points: &[(u64, f64)], threshold_pp: f64, epsilon_pp: f64) -> Result<u64, DseError> {
    let avgs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let best = best_index(&avgs, epsilon_pp)?;
    let floor = avgs[best] - threshold_pp;
    match points.iter().position(|p| p.1 >= floor) {
        Some(i) => Ok(points[i].0),
        None => Err(DseError::NoOptimum { threshold_pp }),
    }
}

/// Best/optimum points plus curve-shape flags for one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub best_size: u64,
    pub optimum_size: u64,
    pub threshold_pp: f64,
    pub epsilon_pp: f64,
    pub saturation_detected: bool,
    pub degradation_detected: bool,
}

/// Extract best/optimum and shape flags from an average-penalty curve.
pub fn extract(points: &[(u64, f64)], threshold_pp: f64, epsilon_pp: f64) -> Result<ExtractionResult, DseError> {
    let avgs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let best_idx = best_index(&avgs, epsilon_pp)?;
    let best_size = points[best_idx].0;
    let optimum_size = find_optimum(points, threshold_pp, epsilon_pp)?;
    let n = avgs.len();
    let saturation_detected = n >= 2 && (avgs[n - 1] - avgs[n - 2]) < SATURATION_PP;
    let max = avgs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let argmax = avgs.iter().position(|&v| v == max).unwrap();
    let degradation_detected = avgs[argmax + 1..].iter().any(|&v| v < max - epsilon_pp);
    Ok(ExtractionResult {
        best_size,
        optimum_size,
        threshold_pp,
        epsilon_pp,
        saturation_detected,
        degradation_detected,
    })
}

/// Grids for every swept axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub l1_kb: Vec<u64>,
    pub l2_kb: Vec<u64>,
    pub phys_regs: Vec<u64>,
    pub rob: Vec<u64>,
    pub iq: Vec<u64>,
    pub lsq: Vec<u64>,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            l1_kb: vec![16, 32, 64, 128, 256, 512],
            l2_kb: vec![64, 128, 256, 512, 1024],
            phys_regs: vec![40, 48, 56, 64, 72, 80, 96],
            rob: vec![8, 16, 32, 64, 128],
            iq: vec![4, 8, 12, 16, 20, 32],
            lsq: vec![4, 8, 12, 16, 32],
        }
    }
}

impl Grids {
    pub fn validate(&self) -> Result<(), DseError> {
        for grid in [&self.l1_kb, &self.l2_kb, &self.phys_regs, &self.rob, &self.iq, &self.lsq] {
            if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DseError::BadValues);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachePoint {
    pub l1_kb: u64,
    pub l2_kb: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub benchmark: String,
    pub l1_kb: u64,
    pub l2_kb: u64,
    pub roi_cycles: u64,
    pub ipc_roi: f64,
    pub per_pen: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAvg {
    pub l1_kb: u64,
    pub l2_kb: u64,
    pub per_pen: f64,
    /// Split L1 (two arrays at the full size) plus L2 data area.
    pub area_mm2: f64,
}

/// Stage-1 cross-product sweep of (L1, L2) sizes at stage widths of one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheStageReport {
    pub benchmarks: Vec<String>,
    pub baseline: Vec<BaselineRow>,
    pub rows: Vec<PairRow>,
    pub avg: Vec<PairAvg>,
    pub best: CachePoint,
    pub optimum: CachePoint,
    pub threshold_pp: f64,
    pub epsilon_pp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisStage {
    pub sweep: SweepResult,
    pub extraction: ExtractionResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChosenConfig {
    pub l1_kb: u64,
    pub l2_kb: u64,
    pub phys_regs: u64,
    pub rob_best: u64,
    pub rob_optimum: u64,
    pub iq_best: u64,
    pub iq_optimum: u64,
    pub lsq_best: u64,
    pub lsq_optimum: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaSummary {
    pub l1_kb: u64,
    pub l2_kb: u64,
    pub l1i_mm2: f64,
    pub l1d_mm2: f64,
    pub l2_mm2: f64,
    pub total_mm2: f64,
    pub avg_ipc_roi: f64,
    pub perf_per_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagedReport {
    pub cache_stage: CacheStageReport,
    pub regfile_stage: AxisStage,
    pub rob_stage: AxisStage,
    pub iq_stage: AxisStage,
    pub lsq_stage: AxisStage,
    pub chosen: ChosenConfig,
    pub area: AreaSummary,
}

fn pair_area(platform: &PlatformSpec, p: CachePoint) -> Result<(f64, f64, f64), DseError> {
    let mut l1 = platform.l1;
    l1.capacity_kb = p.l1_kb;
    let mut l2 = platform.l2;
    l2.capacity_kb = p.l2_kb;
    let a1 = camodel::area_mm2(&l1.geometry())?;
    let a2 = camodel::area_mm2(&l2.geometry())?;
    Ok((a1, a1, a2))
}

fn stage<T>(name: &'static str, r: Result<T, DseError>) -> Result<T, DseError> {
    r.map_err(|e| DseError::Stage { stage: name, source: Box::new(e) })
}

/// Stage 1: cross-product cache sweep at widths of one, extracting the best
/// cache size (BCS). Pairs violating L2 ≥ L1 are skipped; pairs are ordered
/// lexicographically (L1 major) for the first-point rules.
fn cache_stage(
    core: &CoreConfig,
    platform: &PlatformSpec,
    grids: &Grids,
    workloads: &[Workload],
) -> Result<CacheStageReport, DseError> {
    let narrow = core.with_widths_of_one();
    let pairs: Vec<CachePoint> = grids
        .l1_kb
        .iter()
        .flat_map(|&l1| grids.l2_kb.iter().filter(move |&&l2| l2 >= l1).map(move |&l2| CachePoint { l1_kb: l1, l2_kb: l2 }))
        .collect();
    if pairs.is_empty() {
        return Err(DseError::BadValues);
    }

    let base_hier = platform.hierarchy()?;
    let baseline: Vec<BaselineRow> = workloads
        .par_iter()
        .map(|w| {
            let r = simulate(&w.trace, &narrow, &base_hier)?;
            Ok(BaselineRow { benchmark: w.label.clone(), roi_cycles: r.roi_cycles, ipc_roi: r.ipc_roi })
        })
        .collect::<Result<_, DseError>>()?;

    let mut hiers = Vec::with_capacity(pairs.len());
    for &p in &pairs {
        let mut plat = platform.clone();
        plat.l1.capacity_kb = p.l1_kb;
        plat.l2.capacity_kb = p.l2_kb;
        hiers.push(plat.hierarchy()?);
    }

    let jobs: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|pi| (0..workloads.len()).map(move |wi| (pi, wi)))
        .collect();
    let rows: Vec<PairRow> = jobs
        .par_iter()
        .map(|&(pi, wi)| {
            let w = &workloads[wi];
            let r = simulate(&w.trace, &narrow, &hiers[pi]).map_err(DseError::from).map_err(|e| {
                DseError::Annotated {
                    benchmark: w.label.clone(),
                    axis: "l1_kb",
                    value: pairs[pi].l1_kb,
                    source: Box::new(e),
                }
            })?;
            Ok(PairRow {
                benchmark: w.label.clone(),
                l1_kb: pairs[pi].l1_kb,
                l2_kb: pairs[pi].l2_kb,
                roi_cycles: r.roi_cycles,
                ipc_roi: r.ipc_roi,
                per_pen: per_pen(r.roi_cycles, baseline[wi].roi_cycles)?,
            })
        })
        .collect::<Result<_, DseError>>()?;

    let nb = workloads.len();
    let mut avg = Vec::with_capacity(pairs.len());
    for (pi, &p) in pairs.iter().enumerate() {
        let sum: f64 = rows[pi * nb..(pi + 1) * nb].iter().map(|r| r.per_pen).sum();
        let (a1i, a1d, a2) = pair_area(platform, p)?;
        avg.push(PairAvg { l1_kb: p.l1_kb, l2_kb: p.l2_kb, per_pen: sum / nb as f64, area_mm2: a1i + a1d + a2 });
    }

    let avgs: Vec<f64> = avg.iter().map(|a| a.per_pen).collect();
    let best_idx = best_index(&avgs, DEFAULT_EPSILON_PP)?;
    let floor = avgs[best_idx] - DEFAULT_THRESHOLD_PP;
    let opt_idx = avgs.iter().position(|&v| v >= floor).unwrap_or(best_idx);

    Ok(CacheStageReport {
        benchmarks: workloads.iter().map(|w| w.label.clone()).collect(),
        baseline,
        rows,
        avg,
        best: pairs[best_idx],
        optimum: pairs[opt_idx],
        threshold_pp: DEFAULT_THRESHOLD_PP,
        epsilon_pp: DEFAULT_EPSILON_PP,
    })
}

/// The staged methodology: (1) cache cross-product sweep at widths of one,
/// fixing the best cache size; (2) register-file sweep at default widths on
/// the BCS platform; (3) independent ROB/IQ/LSQ sweeps with the register file
/// fixed at its optimum. Deterministic and parallel-safe.
pub fn staged_explore(
    core: &CoreConfig,
    platform: &PlatformSpec,
    grids: &Grids,
    workloads: &[Workload],
) -> Result<StagedReport, DseError> {
    grids.validate()?;

    let cache = stage("cache", cache_stage(core, platform, grids, workloads))?;

    let mut bcs_platform = platform.clone();
    bcs_platform.l1.capacity_kb = cache.best.l1_kb;
    bcs_platform.l2.capacity_kb = cache.best.l2_kb;

    let regfile = stage("regfile", {
        let spec = SweepSpec {
            axis: Axis::PhysRegs,
            values: grids.phys_regs.clone(),
            core: *core,
            platform: bcs_platform.clone(),
        };
        run_sweep(&spec, workloads).and_then(|sweep| {
            let extraction = extract(&sweep.avg_points(), DEFAULT_THRESHOLD_PP, DEFAULT_EPSILON_PP)?;
            Ok(AxisStage { sweep, extraction })
        })
    })?;

    let mut tuned_core = *core;
    tuned_core.phys_regs = regfile.extraction.optimum_size as u32;

    let axis_stage = |axis: Axis, values: &[u64]| -> Result<AxisStage, DseError> {
        let spec = SweepSpec { axis, values: values.to_vec(), core: tuned_core, platform: bcs_platform.clone() };
        let sweep = run_sweep(&spec, workloads)?;
        let extraction = extract(&sweep.avg_points(), DEFAULT_THRESHOLD_PP, DEFAULT_EPSILON_PP)?;
        Ok(AxisStage { sweep, extraction })
    };
    let rob = stage("rob", axis_stage(Axis::Rob, &grids.rob))?;
    let iq = stage("iq", axis_stage(Axis::Iq, &grids.iq))?;
    let lsq = stage("lsq", axis_stage(Axis::Lsq, &grids.lsq))?;

    let (l1i_mm2, l1d_mm2, l2_mm2) = pair_area(platform, cache.best)?;
    let avg_ipc = rob.sweep.baseline.iter().map(|b| b.ipc_roi).sum::<f64>() / rob.sweep.baseline.len().max(1) as f64;
    let total = l1i_mm2 + l1d_mm2 + l2_mm2;
    let area = AreaSummary {
        l1_kb: cache.best.l1_kb,
        l2_kb: cache.best.l2_kb,
        l1i_mm2,
        l1d_mm2,
        l2_mm2,
        total_mm2: total,
        avg_ipc_roi: avg_ipc,
        perf_per_area: avg_ipc / total,
    };
    let chosen = ChosenConfig {
        l1_kb: cache.best.l1_kb,
        l2_kb: cache.best.l2_kb,
        phys_regs: regfile.extraction.optimum_size,
        rob_best: rob.extraction.best_size,
        rob_optimum: rob.extraction.optimum_size,
        iq_best: iq.extraction.best_size,
        iq_optimum: iq.extraction.optimum_size,
        lsq_best: lsq.extraction.best_size,
        lsq_optimum: lsq.extraction.optimum_size,
    };

    Ok(StagedReport {
        cache_stage: cache,
        regfile_stage: regfile,
        rob_stage: rob,
        iq_stage: iq,
        lsq_stage: lsq,
        chosen,
        area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn per_pen_identity_and_signs() {
        assert_eq!(per_pen(12345, 12345).unwrap(), 0.0);
        let slower = per_pen(10204, 10000).unwrap();
        assert!((slower - (-2.0)).abs() < 5e-3, "{slower}");
        let faster = per_pen(9000, 10000).unwrap();
        assert!((faster - 11.11).abs() < 5e-3, "{faster}");
        assert!(per_pen(0, 10).is_err());
    }

    #[test]
    fn find_best_on_reference_rob_curve() {
        let curve = [(32, -1.91), (34, -1.63), (64, 0.0)];
        assert_eq!(find_best(&curve, DEFAULT_EPSILON_PP).unwrap(), 64);
        assert_eq!(find_optimum(&curve, DEFAULT_THRESHOLD_PP, DEFAULT_EPSILON_PP).unwrap(), 32);
    }

    #[test]
    fn find_best_flat_curve_takes_first_point() {
        let curve = [(8, 0.0), (16, 0.0)];
        assert_eq!(find_best(&curve, DEFAULT_EPSILON_PP).unwrap(), 8);
    }

    #[test]
    fn find_best_single_value() {
        assert_eq!(find_best(&[(5, -3.0)], DEFAULT_EPSILON_PP).unwrap(), 5);
    }

    #[test]
    fn find_optimum_reference_iq_curve() {
        let curve = [(8, -1.08), (20, -0.26), (32, 0.0)];
        assert_eq!(find_optimum(&curve, 2.0, DEFAULT_EPSILON_PP).unwrap(), 8);
    }

    #[test]
    fn find_optimum_only_best_in_threshold() {
        let curve = [(4, -9.0), (8, 0.0)];
        assert_eq!(find_optimum(&curve, 2.0, DEFAULT_EPSILON_PP).unwrap(), 8);
    }

    #[test]
    fn find_best_invariant_under_adding_worse_point() {
        let curve = [(8, -1.0), (16, 0.0)];
        let extended = [(8, -1.0), (16, 0.0), (32, -4.0)];
        assert_eq!(
            find_best(&curve, DEFAULT_EPSILON_PP).unwrap(),
            find_best(&extended, DEFAULT_EPSILON_PP).unwrap()
        );
    }

    #[test]
    fn extraction_shape_flags() {
        let rising_then_falling = [(16, -3.0), (32, 0.0), (64, -0.1), (128, -1.5)];
        let e = extract(&rising_then_falling, 2.0, 0.05).unwrap();
        assert!(e.degradation_detected);
        assert_eq!(e.best_size, 32);
        let saturating = [(8, -4.0), (16, -0.3), (32, 0.0)];
        let e = extract(&saturating, 2.0, 0.05).unwrap();
        assert!(e.saturation_detected);
        assert!(!e.degradation_detected);
    }

    proptest! {
        // optimum <= best on arbitrary finite curves.
        #[test]
        fn optimum_never_exceeds_best(
            pens in proptest::collection::vec(-50.0f64..5.0, 1..12)
        ) {
            let points: Vec<(u64, f64)> = pens.iter().enumerate().map(|(i, &p)| ((i as u64 + 1) * 8, p)).collect();
            let best = find_best(&points, DEFAULT_EPSILON_PP).unwrap();
            let opt = find_optimum(&points, DEFAULT_THRESHOLD_PP, DEFAULT_EPSILON_PP).unwrap();
            prop_assert!(opt <= best);
        }
    }
}
