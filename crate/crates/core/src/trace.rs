//! Abstract trace ISA: in-memory representation plus the line-oriented text
//! format with ROI markers.
//!
//! One item per line. `#` begins a comment line, registers are written
//! `r0`..`r31`, `-` marks an absent operand, addresses are `0x`-prefixed hex:
//!
//! ```text
//! <sid> A <dst> <s1|-> <s2|->
//! <sid> M <dst> <s1|-> <s2|->
//! <sid> D <dst> <s1|-> <s2|->
//! <sid> L <dst> <sbase|-> <addr-hex> <size>
//! <sid> S <sdata> <sbase|-> <addr-hex> <size>
//! <sid> B <s1|-> <s2|-> <T|N>
//! ROI BEGIN
//! ROI END
//! ```

use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

/// Number of logical registers in the trace ISA.
pub const NUM_LOGICAL_REGS: u8 = 32;

/// A logical register index, `r0`..`r31`.
///
/// The wrapper does not enforce the range; [`parse_trace`] rejects
/// out-of-range registers and [`validate_trace`] reports them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reg(pub u8);

impl Reg {
    pub fn is_valid(self) -> bool {
        self.0 < NUM_LOGICAL_REGS
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// Instruction class of the trace ISA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Alu,
    Mul,
    Div,
    Load,
    Store,
    Branch,
}

impl Kind {
    pub fn letter(self) -> char {
        match self {
            Kind::Alu => 'A',
            Kind::Mul => 'M',
            Kind::Div => 'D',
            Kind::Load => 'L',
            Kind::Store => 'S',
            Kind::Branch => 'B',
        }
    }

    fn from_token(tok: &str) -> Option<Kind> {
        match tok {
            "A" => Some(Kind::Alu),
            "M" => Some(Kind::Mul),
            "D" => Some(Kind::Div),
            "L" => Some(Kind::Load),
            "S" => Some(Kind::Store),
            "B" => Some(Kind::Branch),
            _ => None,
        }
    }

    pub fn is_mem(self) -> bool {
        matches!(self, Kind::Load | Kind::Store)
    }
}

/// One dynamic instruction.
///
/// `sid` is the static-instruction id; the byte address of the instruction is
/// `sid * 4`, so loops that re-execute the same static instruction reuse the
/// same sid and the instruction cache sees realistic spatial locality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstructionRecord {
    pub sid: u32,
    pub kind: Kind,
    pub dst: Option<Reg>,
    pub src1: Option<Reg>,
    pub src2: Option<Reg>,
    /// Byte address, LOAD/STORE only.
    pub addr: Option<u64>,
    /// Access size in bytes, one of 1/2/4/8. LOAD/STORE only.
    pub size: Option<u8>,
    /// Branch outcome, BRANCH only.
    pub taken: Option<bool>,
}

impl InstructionRecord {
    pub fn pc(&self) -> u64 {
        u64::from(self.sid) * 4
    }

    pub fn alu(sid: u32, dst: Reg, src1: Option<Reg>, src2: Option<Reg>) -> Self {
        Self { sid, kind: Kind::Alu, dst: Some(dst), src1, src2, addr: None, size: None, taken: None }
    }

    pub fn mul(sid: u32, dst: Reg, src1: Option<Reg>, src2: Option<Reg>) -> Self {
        Self { kind: Kind::Mul, ..Self::alu(sid, dst, src1, src2) }
    }

    pub fn div(sid: u32, dst: Reg, src1: Option<Reg>, src2: Option<Reg>) -> Self {
        Self { kind: Kind::Div, ..Self::alu(sid, dst, src1, src2) }
    }

    pub fn load(sid: u32, dst: Reg, base: Option<Reg>, addr: u64, size: u8) -> Self {
        Self {
            sid,
            kind: Kind::Load,
            dst: Some(dst),
            src1: base,
            src2: None,
            addr: Some(addr),
            size: Some(size),
            taken: None,
        }
    }

    pub fn store(sid: u32, data: Reg, base: Option<Reg>, addr: u64, size: u8) -> Self {
        Self {
            sid,
            kind: Kind::Store,
            dst: None,
            src1: Some(data),
            src2: base,
            addr: Some(addr),
            size: Some(size),
            taken: None,
        }
    }

    pub fn branch(sid: u32, src1: Option<Reg>, src2: Option<Reg>, taken: bool) -> Self {
        Self {
            sid,
            kind: Kind::Branch,
            dst: None,
            src1,
            src2,
            addr: None,
            size: None,
            taken: Some(taken),
        }
    }
}

/// A trace element: an instruction or a region-of-interest marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceItem {
    Inst(InstructionRecord),
    RoiBegin,
    RoiEnd,
}

/// An ordered dynamic instruction stream in commit order, optionally bracketed
/// by one ROI marker pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    /// Benchmark label. Metadata only: not serialized by [`write_trace`].
    pub name: String,
    pub items: Vec<TraceItem>,
}

impl Trace {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), items: Vec::new() }
    }

    pub fn instructions(&self) -> impl Iterator<Item = &InstructionRecord> {
        self.items.iter().filter_map(|it| match it {
            TraceItem::Inst(r) => Some(r),
            _ => None,
        })
    }

    pub fn num_instructions(&self) -> usize {
        self.instructions().count()
    }

    /// ROI bounds as instruction indices `(begin, end)`: instructions with
    /// index in `begin..end` are inside the ROI. A trace without markers is
    /// treated as all-ROI, `(0, n)`.
    pub fn roi_bounds(&self) -> (usize, usize) {
        let mut count = 0usize;
        let mut begin = None;
        let mut end = None;
        for item in &self.items {
            match item {
                TraceItem::Inst(_) => count += 1,
                TraceItem::RoiBegin => begin = Some(count),
                TraceItem::RoiEnd => end = Some(count),
            }
        }
        match (begin, end) {
            (Some(b), Some(e)) => (b, e),
            _ => (0, count),
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: register out of range: {token}")]
    RegisterRange { line: usize, token: String },
    #[error("line {line}: malformed address: {token}")]
    BadAddress { line: usize, token: String },
    #[error("line {line}: unbalanced ROI")]
    UnbalancedRoi { line: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn syntax(line: usize, reason: impl Into<String>) -> TraceError {
    TraceError::Syntax { line, reason: reason.into() }
}

fn parse_reg(line: usize, tok: &str, optional: bool) -> Result<Option<Reg>, TraceError> {
    if tok == "-" {
        if optional {
            return Ok(None);
        }
        return Err(syntax(line, "operand is required here"));
    }
    let digits = tok
        .strip_prefix('r')
        .ok_or_else(|| syntax(line, format!("expected register, got `{tok}`")))?;
    let n: u8 = digits
        .parse()
        .map_err(|_| syntax(line, format!("expected register, got `{tok}`")))?;
    if n >= NUM_LOGICAL_REGS {
        return Err(TraceError::RegisterRange { line, token: tok.to_string() });
    }
    Ok(Some(Reg(n)))
}

fn parse_addr(line: usize, tok: &str) -> Result<u64, TraceError> {
    let hex = tok
        .strip_prefix("0x")
        .or_else(|| tok.strip_prefix("0X"))
        .ok_or_else(|| TraceError::BadAddress { line, token: tok.to_string() })?;
    u64::from_str_radix(hex, 16).map_err(|_| TraceError::BadAddress { line, token: tok.to_string() })
}

fn parse_size(line: usize, tok: &str) -> Result<u8, TraceError> {
    let n: u8 = tok
        .parse()
        .map_err(|_| syntax(line, format!("expected access size, got `{tok}`")))?;
    if !matches!(n, 1 | 2 | 4 | 8) {
        return Err(syntax(line, format!("access size must be 1/2/4/8, got {n}")));
    }
    Ok(n)
}

/// Parse a trace from a text stream.
///
/// Comment lines (`#`) and blank lines are skipped; trailing whitespace is
/// tolerated. The returned trace has an empty `name`.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Trace, TraceError> {
    let mut trace = Trace::default();
    // 0 = no ROI seen, 1 = open, 2 = closed
    let mut roi_state = 0u8;
    let mut line_no = 0usize;

    for line in reader.lines() {
        line_no += 1;
        let line = line?;
        let text = line.trim_end();
        if text.is_empty() || text.trim_start().starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = text.split_whitespace().collect();

        if toks[0] == "ROI" {
            if toks.len() != 2 {
                return Err(syntax(line_no, "ROI marker must be `ROI BEGIN` or `ROI END`"));
            }
            match toks[1] {
                "BEGIN" => {
                    if roi_state != 0 {
                        return Err(TraceError::UnbalancedRoi { line: line_no });
                    }
                    roi_state = 1;
                    trace.items.push(TraceItem::RoiBegin);
                }
                "END" => {
                    if roi_state != 1 {
                        return Err(TraceError::UnbalancedRoi { line: line_no });
                    }
                    roi_state = 2;
                    trace.items.push(TraceItem::RoiEnd);
                }
                other => return Err(syntax(line_no, format!("unknown ROI marker `{other}`"))),
            }
            continue;
        }

        if toks.len() < 2 {
            return Err(syntax(line_no, "expected `<sid> <kind> ...`"));
        }
        let sid: u32 = toks[0]
            .parse()
            .map_err(|_| syntax(line_no, format!("bad sid `{}`", toks[0])))?;
        let kind = Kind::from_token(toks[1])
            .ok_or_else(|| syntax(line_no, format!("unknown instruction kind `{}`", toks[1])))?;

        let expect = |n: usize| -> Result<(), TraceError> {
            if toks.len() != n {
                Err(syntax(line_no, format!("expected {} fields, got {}", n, toks.len())))
            } else {
                Ok(())
            }
        };

        let rec = match kind {
            Kind::Alu | Kind::Mul | Kind::Div => {
                expect(5)?;
                let dst = parse_reg(line_no, toks[2], false)?.unwrap();
                let src1 = parse_reg(line_no, toks[3], true)?;
                let src2 = parse_reg(line_no, toks[4], true)?;
                if src1.is_none() && src2.is_none() {
                    return Err(syntax(line_no, "ALU/MUL/DIV needs at least one source"));
                }
                InstructionRecord { sid, kind, dst: Some(dst), src1, src2, addr: None, size: None, taken: None }
            }
            Kind::Load => {
                expect(6)?;
                let dst = parse_reg(line_no, toks[2], false)?.unwrap();
                let base = parse_reg(line_no, toks[3], true)?;
                let addr = parse_addr(line_no, toks[4])?;
                let size = parse_size(line_no, toks[5])?;
                check_range(line_no, addr, size)?;
                InstructionRecord::load(sid, dst, base, addr, size)
            }
            Kind::Store => {
                expect(6)?;
                let data = parse_reg(line_no, toks[2], false)?.unwrap();
                let base = parse_reg(line_no, toks[3], true)?;
                let addr = parse_addr(line_no, toks[4])?;
                let size = parse_size(line_no, toks[5])?;
                check_range(line_no, addr, size)?;
                InstructionRecord::store(sid, data, base, addr, size)
            }
            Kind::Branch => {
                expect(5)?;
                let src1 = parse_reg(line_no, toks[2], true)?;
                let src2 = parse_reg(line_no, toks[3], true)?;
                let taken = match toks[4] {
                    "T" => true,
                    "N" => false,
                    other => return Err(syntax(line_no, format!("branch outcome must be T or N, got `{other}`"))),
                };
                InstructionRecord::branch(sid, src1, src2, taken)
            }
        };
        trace.items.push(TraceItem::Inst(rec));
    }

    if roi_state == 1 {
        return Err(TraceError::UnbalancedRoi { line: line_no });
    }
    Ok(trace)
}

fn check_range(line: usize, addr: u64, size: u8) -> Result<(), TraceError> {
    if addr.checked_add(u64::from(size)).is_none() {
        return Err(syntax(line, "address range wraps past 2^64"));
    }
    Ok(())
}

fn reg_or_dash(r: Option<Reg>) -> String {
    match r {
        Some(r) => r.to_string(),
        None => "-".to_string(),
    }
}

/// Serialize a trace to the text format. `parse_trace(write_trace(t))`
/// reproduces `t.items` exactly; `name` is not serialized.
pub fn write_trace<W: Write>(trace: &Trace, mut w: W) -> io::Result<()> {
    for item in &trace.items {
        match item {
            TraceItem::RoiBegin => writeln!(w, "ROI BEGIN")?,
            TraceItem::RoiEnd => writeln!(w, "ROI END")?,
            TraceItem::Inst(r) => match r.kind {
                Kind::Alu | Kind::Mul | Kind::Div => writeln!(
                    w,
                    "{} {} {} {} {}",
                    r.sid,
                    r.kind.letter(),
                    reg_or_dash(r.dst),
                    reg_or_dash(r.src1),
                    reg_or_dash(r.src2),
                )?,
                Kind::Load => writeln!(
                    w,
                    "{} L {} {} {:#x} {}",
                    r.sid,
                    reg_or_dash(r.dst),
                    reg_or_dash(r.src1),
                    r.addr.unwrap_or(0),
                    r.size.unwrap_or(0),
                )?,
                Kind::Store => writeln!(
                    w,
                    "{} S {} {} {:#x} {}",
                    r.sid,
                    reg_or_dash(r.src1),
                    reg_or_dash(r.src2),
                    r.addr.unwrap_or(0),
                    r.size.unwrap_or(0),
                )?,
                Kind::Branch => writeln!(
                    w,
                    "{} B {} {} {}",
                    r.sid,
                    reg_or_dash(r.src1),
                    reg_or_dash(r.src2),
                    if r.taken.unwrap_or(false) { "T" } else { "N" },
                )?,
            },
        }
    }
    Ok(())
}

/// Convenience wrapper around [`write_trace`].
pub fn write_trace_string(trace: &Trace) -> String {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("trace text is ASCII")
}

/// A single invariant violation found by [`validate_trace`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Item index within `trace.items`.
    pub index: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "item {}: {}", self.index, self.message)
    }
}

/// Check every type invariant on every record plus ROI pairing. Returns an
/// empty list iff the trace is valid.
pub fn validate_trace(trace: &Trace) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |index: usize, message: String| out.push(Violation { index, message });

    let mut roi_state = 0u8;
    for (i, item) in trace.items.iter().enumerate() {
        let rec = match item {
            TraceItem::RoiBegin => {
                if roi_state != 0 {
                    push(i, "unbalanced ROI: BEGIN while open or after a closed pair".into());
                }
                roi_state = 1;
                continue;
            }
            TraceItem::RoiEnd => {
                if roi_state != 1 {
                    push(i, "unbalanced ROI: END without open BEGIN".into());
                }
                roi_state = 2;
                continue;
            }
            TraceItem::Inst(r) => r,
        };

        for (name, reg) in [("dst", rec.dst), ("src1", rec.src1), ("src2", rec.src2)] {
            if let Some(r) = reg {
                if !r.is_valid() {
                    push(i, format!("{name} register out of range: {r}"));
                }
            }
        }

        let mem_fields_absent = rec.addr.is_none() && rec.size.is_none();
        match rec.kind {
            Kind::Alu | Kind::Mul | Kind::Div => {
                if rec.dst.is_none() {
                    push(i, format!("{:?} must have a dst", rec.kind));
                }
                if rec.src1.is_none() && rec.src2.is_none() {
                    push(i, format!("{:?} must have at least one source", rec.kind));
                }
                if !mem_fields_absent || rec.taken.is_some() {
                    push(i, format!("{:?} must not carry addr/size/taken", rec.kind));
                }
            }
            Kind::Load => {
                if rec.dst.is_none() {
                    push(i, "LOAD must have a dst".into());
                }
                if rec.src2.is_some() {
                    push(i, "LOAD uses src1 as its only base operand".into());
                }
                if rec.addr.is_none() || rec.size.is_none() {
                    push(i, "LOAD must have addr and size".into());
                }
                if rec.taken.is_some() {
                    push(i, "LOAD must not carry a branch outcome".into());
                }
            }
            Kind::Store => {
                if rec.dst.is_some() {
                    push(i, "STORE must not have a dst".into());
                }
                if rec.src1.is_none() {
                    push(i, "STORE must have a data source (src1)".into());
                }
                if rec.addr.is_none() || rec.size.is_none() {
                    push(i, "STORE must have addr and size".into());
                }
                if rec.taken.is_some() {
                    push(i, "STORE must not carry a branch outcome".into());
                }
            }
            Kind::Branch => {
                if rec.taken.is_none() {
                    push(i, "BRANCH must have a taken flag".into());
                }
                if rec.dst.is_some() {
                    push(i, "BRANCH must not have a dst".into());
                }
                if !mem_fields_absent {
                    push(i, "BRANCH must not carry addr/size".into());
                }
            }
        }

        if let (Some(addr), Some(size)) = (rec.addr, rec.size) {
            if !matches!(size, 1 | 2 | 4 | 8) {
                push(i, format!("access size must be 1/2/4/8, got {size}"));
            }
            if addr.checked_add(u64::from(size)).is_none() {
                push(i, "address range wraps past 2^64".into());
            }
        }
    }
    if roi_state == 1 {
        push(trace.items.len(), "unbalanced ROI: BEGIN never closed".into());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse_str(s: &str) -> Result<Trace, TraceError> {
        parse_trace(s.as_bytes())
    }

    #[test]
    fn parses_alu_line() {
        let t = parse_str("0 A r1 r2 r3\n").unwrap();
        assert_eq!(t.items.len(), 1);
        assert_eq!(
            t.items[0],
            TraceItem::Inst(InstructionRecord::alu(0, Reg(1), Some(Reg(2)), Some(Reg(3))))
        );
    }

    #[test]
    fn parses_load_line() {
        let t = parse_str("5 L r4 r7 0x1000 4\n").unwrap();
        assert_eq!(
            t.items[0],
            TraceItem::Inst(InstructionRecord::load(5, Reg(4), Some(Reg(7)), 0x1000, 4))
        );
    }

    #[test]
    fn roi_end_before_begin_is_unbalanced() {
        let err = parse_str("ROI END\n").unwrap_err();
        assert!(matches!(err, TraceError::UnbalancedRoi { line: 1 }));
    }

    #[test]
    fn roi_left_open_is_unbalanced() {
        let err = parse_str("ROI BEGIN\n0 A r1 r2 -\n").unwrap_err();
        assert!(matches!(err, TraceError::UnbalancedRoi { .. }));
    }

    #[test]
    fn second_roi_pair_rejected() {
        let err = parse_str("ROI BEGIN\nROI END\nROI BEGIN\nROI END\n").unwrap_err();
        assert!(matches!(err, TraceError::UnbalancedRoi { line: 3 }));
    }

    #[test]
    fn register_out_of_range() {
        let err = parse_str("0 A r32 r1 -\n").unwrap_err();
        assert!(matches!(err, TraceError::RegisterRange { line: 1, .. }));
    }

    #[test]
    fn malformed_address() {
        let err = parse_str("0 L r1 - 1000 4\n").unwrap_err();
        assert!(matches!(err, TraceError::BadAddress { line: 1, .. }));
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let t = parse_str("# header\n\n  \n0 B - - T\n").unwrap();
        assert_eq!(t.num_instructions(), 1);
    }

    #[test]
    fn empty_trace_writes_empty() {
        assert_eq!(write_trace_string(&Trace::default()), "");
    }

    #[test]
    fn single_record_writes_one_line() {
        let mut t = Trace::default();
        t.items.push(TraceItem::Inst(InstructionRecord::alu(3, Reg(1), Some(Reg(2)), None)));
        assert_eq!(write_trace_string(&t), "3 A r1 r2 -\n");
    }

    #[test]
    fn validate_accepts_valid_trace() {
        let t = parse_str("0 A r1 r2 -\n1 L r2 - 0x10 4\n2 S r2 - 0x20 4\n").unwrap();
        assert!(validate_trace(&t).is_empty());
    }

    #[test]
    fn validate_store_with_dst() {
        let mut t = Trace::default();
        let mut rec = InstructionRecord::store(0, Reg(1), None, 0x10, 4);
        rec.dst = Some(Reg(2));
        t.items.push(TraceItem::Inst(rec));
        assert_eq!(validate_trace(&t).len(), 1);
    }

    #[test]
    fn validate_branch_without_taken() {
        let mut t = Trace::default();
        let mut rec = InstructionRecord::branch(0, Some(Reg(1)), None, true);
        rec.taken = None;
        t.items.push(TraceItem::Inst(rec));
        assert_eq!(validate_trace(&t).len(), 1);
    }

    #[test]
    fn hand_written_invalid_records_fail_parse() {
        // Everything validate_trace rejects is unparseable when written by
        // hand: the grammar has no slot for the offending field.
        assert!(parse_str("0 B r1 -\n").is_err()); // branch without outcome
        assert!(parse_str("0 S r1 r2 r3 0x10 4\n").is_err()); // store with a dst-like extra
        assert!(parse_str("0 A r1 - -\n").is_err()); // ALU without sources
        assert!(parse_str("0 L r1 - 0x10 3\n").is_err()); // bad access size
    }

    #[test]
    fn roi_bounds_default_spans_everything() {
        let t = parse_str("0 A r1 r2 -\n1 A r1 r2 -\n").unwrap();
        assert_eq!(t.roi_bounds(), (0, 2));
    }

    #[test]
    fn roi_bounds_with_markers() {
        let t = parse_str("0 A r1 r2 -\nROI BEGIN\n1 A r1 r2 -\nROI END\n2 A r1 r2 -\n").unwrap();
        assert_eq!(t.roi_bounds(), (1, 2));
    }

    fn reg_strategy() -> impl Strategy<Value = Reg> {
        (0u8..NUM_LOGICAL_REGS).prop_map(Reg)
    }

    fn opt_reg() -> impl Strategy<Value = Option<Reg>> {
        proptest::option::of(reg_strategy())
    }

    prop_compose! {
        fn arb_record()(
            sid in 0u32..10_000,
            kind in 0u8..6,
            dst in reg_strategy(),
            s1 in reg_strategy(),
            s2 in opt_reg(),
            addr in 0u64..0x1_0000_0000u64,
            size_sel in 0usize..4,
            taken in any::<bool>(),
        ) -> InstructionRecord {
            let size = [1u8, 2, 4, 8][size_sel];
            let addr = addr & !(u64::from(size) - 1);
            match kind {
                0 => InstructionRecord::alu(sid, dst, Some(s1), s2),
                1 => InstructionRecord::mul(sid, dst, Some(s1), s2),
                2 => InstructionRecord::div(sid, dst, Some(s1), s2),
                3 => InstructionRecord::load(sid, dst, s2, addr, size),
                4 => InstructionRecord::store(sid, s1, s2, addr, size),
                _ => InstructionRecord::branch(sid, Some(s1), s2, taken),
            }
        }
    }

    fn arb_trace() -> impl Strategy<Value = Trace> {
        (
            proptest::collection::vec(arb_record(), 0..60),
            any::<bool>(),
            0usize..8,
            0usize..8,
        )
            .prop_map(|(records, with_roi, a, b)| {
                let mut t = Trace::default();
                let n = records.len();
                let (begin, end) = (a.min(n), (a + b).min(n));
                for (i, r) in records.into_iter().enumerate() {
                    if with_roi && i == begin {
                        t.items.push(TraceItem::RoiBegin);
                    }
                    if with_roi && i == end {
                        t.items.push(TraceItem::RoiEnd);
                    }
                    t.items.push(TraceItem::Inst(r));
                }
                if with_roi {
                    if begin >= n {
                        t.items.push(TraceItem::RoiBegin);
                    }
                    if end >= n {
                        t.items.push(TraceItem::RoiEnd);
                    }
                }
                t
            })
    }

    proptest! {
        // parse ∘ write = identity on valid traces.
        #[test]
        fn round_trip(t in arb_trace()) {
            prop_assert!(validate_trace(&t).is_empty());
            let text = write_trace_string(&t);
            let back = parse_trace(text.as_bytes()).unwrap();
            prop_assert_eq!(&back.items, &t.items);
            // Serialization is byte-stable.
            prop_assert_eq!(write_trace_string(&back), text);
        }

        // Distinct sid count never exceeds record count.
        #[test]
        fn sid_count_bounded(t in arb_trace()) {
            let sids: std::collections::HashSet<u32> = t.instructions().map(|r| r.sid).collect();
            prop_assert!(sids.len() <= t.num_instructions());
        }
    }
}
