//! Line-oriented HE-op traces.
//!
//! ```text
//! DECL x LEVEL 8
//! HMULT x x -> y
//! RESCALE y -> y
//! HROT y 3 -> z
//! BOOT z -> x
//! ```

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceOp {
    Decl { name: String, level: usize, offchip: bool },
    HMult { a: String, b: String, out: String },
    HRot { a: String, r: usize, out: String },
    HAdd { a: String, b: String, out: String },
    PMult { a: String, out: String },
    PAdd { a: String, out: String },
    CMult { a: String, out: String },
    CAdd { a: String, out: String },
    Rescale { a: String, out: String },
    Boot { a: String, out: String },
}

impl TraceOp {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            TraceOp::Decl { .. } => "DECL",
            TraceOp::HMult { .. } => "HMULT",
            TraceOp::HRot { .. } => "HROT",
            TraceOp::HAdd { .. } => "HADD",
            TraceOp::PMult { .. } => "PMULT",
            TraceOp::PAdd { .. } => "PADD",
            TraceOp::CMult { .. } => "CMULT",
            TraceOp::CAdd { .. } => "CADD",
            TraceOp::Rescale { .. } => "RESCALE",
            TraceOp::Boot { .. } => "BOOT",
        }
    }

    /// Operand names, in order.
    pub fn inputs(&self) -> Vec<&str> {
        match self {
            TraceOp::Decl { .. } => vec![],
            TraceOp::HMult { a, b, .. } | TraceOp::HAdd { a, b, .. } => vec![a, b],
            TraceOp::HRot { a, .. }
            | TraceOp::PMult { a, .. }
            | TraceOp::PAdd { a, .. }
            | TraceOp::CMult { a, .. }
            | TraceOp::CAdd { a, .. }
            | TraceOp::Rescale { a, .. }
            | TraceOp::Boot { a, .. } => vec![a],
        }
    }

    pub fn output(&self) -> &str {
        match self {
            TraceOp::Decl { name, .. } => name,
            TraceOp::HMult { out, .. }
            | TraceOp::HRot { out, .. }
            | TraceOp::HAdd { out, .. }
            | TraceOp::PMult { out, .. }
            | TraceOp::PAdd { out, .. }
            | TraceOp::CMult { out, .. }
            | TraceOp::CAdd { out, .. }
            | TraceOp::Rescale { out, .. }
            | TraceOp::Boot { out, .. } => out,
        }
    }
}

impl fmt::Display for TraceOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceOp::Decl { name, level, offchip } => {
                write!(f, "DECL {name} LEVEL {level}")?;
                if *offchip {
                    write!(f, " OFFCHIP")?;
                }
                Ok(())
            }
            TraceOp::HMult { a, b, out } | TraceOp::HAdd { a, b, out } => {
                write!(f, "{} {a} {b} -> {out}", self.mnemonic())
            }
            TraceOp::HRot { a, r, out } => write!(f, "HROT {a} {r} -> {out}"),
            _ => write!(f, "{} {} -> {}", self.mnemonic(), self.inputs()[0], self.output()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub ops: Vec<TraceOp>,
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.ops {
            writeln!(f, "{op}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Semantic errors; `op` is the 1-based position in the op list.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("op {op}: undefined operand {name}")]
    Undefined { op: usize, name: String },
    #[error("op {op}: level underflow on {name}")]
    LevelUnderflow { op: usize, name: String },
    #[error("op {op}: operands at levels {left} and {right}")]
    LevelMismatch { op: usize, left: usize, right: usize },
    #[error("op {op}: level {level} exceeds L = {max}")]
    LevelOutOfRange { op: usize, level: usize, max: usize },
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        && !KEYWORDS.contains(&s)
}

const KEYWORDS: [&str; 12] = [
    "DECL", "LEVEL", "OFFCHIP", "HMULT", "HROT", "HADD", "PMULT", "PADD", "CMULT", "CADD", "RESCALE", "BOOT",
];

fn parse_line(tokens: &[&str]) -> Result<TraceOp, String> {
    let name = |s: &str| -> Result<String, String> {
        if is_name(s) {
            Ok(s.to_string())
        } else {
            Err(format!("invalid name {s:?}"))
        }
    };
    let number = |s: &str| s.parse::<usize>().map_err(|_| format!("invalid number {s:?}"));
    let arrow = |t: &[&str], at: usize| -> Result<String, String> {
        match (t.get(at), t.get(at + 1), t.len()) {
            (Some(&"->"), Some(out), len) if len == at + 2 => name(out),
            _ => Err("expected `-> <name>` at end of line".into()),
        }
    };
    match tokens[0] {
        "DECL" => match tokens {
            [_, n, "LEVEL", l] => Ok(TraceOp::Decl { name: name(n)?, level: number(l)?, offchip: false }),
            [_, n, "LEVEL", l, "OFFCHIP"] => Ok(TraceOp::Decl { name: name(n)?, level: number(l)?, offchip: true }),
            _ => Err("expected `DECL <name> LEVEL <l> [OFFCHIP]`".into()),
        },
        "HMULT" | "HADD" => {
            let (a, b) = match tokens {
                [_, a, b, ..] => (name(a)?, name(b)?),
                _ => return Err("missing operands".into()),
            };
            let out = arrow(tokens, 3)?;
            Ok(if tokens[0] == "HMULT" {
                TraceOp::HMult { a, b, out }
            } else {
                TraceOp::HAdd { a, b, out }
            })
        }
        "HROT" => match tokens {
            [_, a, r, ..] => Ok(TraceOp::HRot { a: name(a)?, r: number(r)?, out: arrow(tokens, 3)? }),
            _ => Err("expected `HROT <a> <r> -> <c>`".into()),
        },
        op @ ("PMULT" | "PADD" | "CMULT" | "CADD" | "RESCALE" | "BOOT") => {
            let a = name(tokens.get(1).ok_or("missing operand")?)?;
            let out = arrow(tokens, 2)?;
            Ok(match op {
                "PMULT" => TraceOp::PMult { a, out },
                "PADD" => TraceOp::PAdd { a, out },
                "CMULT" => TraceOp::CMult { a, out },
                "CADD" => TraceOp::CAdd { a, out },
                "RESCALE" => TraceOp::Rescale { a, out },
                _ => TraceOp::Boot { a, out },
            })
        }
        other => Err(format!("unknown op {other:?}")),
    }
}

impl Trace {
    /// Parses a trace; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut ops = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.is_empty() {
                continue;
            }
            ops.push(parse_line(&tokens).map_err(|message| ParseError { line: i + 1, message })?);
        }
        Ok(Self { ops })
    }

    /// Level of every op's output after checking operand definitions and levels.
    pub fn check(&self, max_level: usize, l_boot: usize) -> Result<Vec<usize>, TraceError> {
        let mut levels: BTreeMap<&str, usize> = BTreeMap::new();
        let mut out = Vec::with_capacity(self.ops.len());
        for (i, op) in self.ops.iter().enumerate() {
            let pos = i + 1;
            let mut ins = Vec::new();
            for name in op.inputs() {
                let l = *levels.get(name).ok_or_else(|| TraceError::Undefined {
                    op: pos,
                    name: name.to_string(),
                })?;
                ins.push(l);
            }
            let level = match op {
                TraceOp::Decl { level, .. } => {
                    if *level > max_level {
                        return Err(TraceError::LevelOutOfRange { op: pos, level: *level, max: max_level });
                    }
                    *level
                }
                TraceOp::HMult { a, .. } | TraceOp::HAdd { a, .. } => {
                    if ins[0] != ins[1] {
                        return Err(TraceError::LevelMismatch { op: pos, left: ins[0], right: ins[1] });
                    }
                    if matches!(op, TraceOp::HMult { .. }) && ins[0] == 0 {
                        return Err(TraceError::LevelUnderflow { op: pos, name: a.clone() });
                    }
                    ins[0]
                }
                TraceOp::Rescale { a, .. } => {
                    if ins[0] == 0 {
                        return Err(TraceError::LevelUnderflow { op: pos, name: a.clone() });
                    }
                    ins[0] - 1
                }
                TraceOp::Boot { .. } => {
                    if max_level <= l_boot {
                        return Err(TraceError::LevelOutOfRange { op: pos, level: l_boot, max: max_level });
                    }
                    max_level - l_boot
                }
                _ => ins[0],
            };
            levels.insert(op.output(), level);
            out.push(level);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_form() {
        let text = "# header\nDECL x LEVEL 8\nDECL w LEVEL 8 OFFCHIP\n\nHMULT x x -> y  # square\nRESCALE y -> y\nHROT y 3 -> z\nHADD z z -> z\nPMULT z -> z\nPADD z -> z\nCMULT z -> z\nCADD z -> z\nBOOT z -> x\n";
        let t = Trace::parse(text).unwrap();
        assert_eq!(t.ops.len(), 11);
        assert_eq!(t.ops[1], TraceOp::Decl { name: "w".into(), level: 8, offchip: true });
        assert_eq!(t.ops[4], TraceOp::HRot { a: "y".into(), r: 3, out: "z".into() });
        assert_eq!(Trace::parse(&t.to_string()).unwrap(), t);
        assert_eq!(t.check(27, 19).unwrap(), vec![8, 8, 8, 7, 7, 7, 7, 7, 7, 7, 8]);
    }

    #[test]
    fn parse_errors_carry_line() {
        let e = Trace::parse("DECL x LEVEL 3\nHMULT x x y\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(Trace::parse("FOO x -> y").is_err());
        assert!(Trace::parse("DECL 1x LEVEL 2").is_err());
        assert!(Trace::parse("DECL x LEVEL -1").is_err());
        assert!(Trace::parse("RESCALE x -> y z").is_err());
    }

    #[test]
    fn semantic_errors() {
        let t = Trace::parse("HADD a a -> b").unwrap();
        assert!(matches!(t.check(5, 2), Err(TraceError::Undefined { op: 1, .. })));
        let t = Trace::parse("DECL a LEVEL 0\nRESCALE a -> a").unwrap();
        assert!(matches!(t.check(5, 2), Err(TraceError::LevelUnderflow { op: 2, .. })));
        let t = Trace::parse("DECL a LEVEL 0\nHMULT a a -> a").unwrap();
        assert!(matches!(t.check(5, 2), Err(TraceError::LevelUnderflow { .. })));
        let t = Trace::parse("DECL a LEVEL 1\nDECL b LEVEL 2\nHADD a b -> c").unwrap();
        assert!(matches!(t.check(5, 2), Err(TraceError::LevelMismatch { left: 1, right: 2, .. })));
        let t = Trace::parse("DECL a LEVEL 9").unwrap();
        assert!(matches!(t.check(5, 2), Err(TraceError::LevelOutOfRange { .. })));
    }
}
