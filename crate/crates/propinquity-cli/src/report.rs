//! Run reports rendered as versioned CSV. Every numeric cell carries a status
//! tag; identical config and seed produce byte-identical output, so nothing
//! time-dependent is ever written here (timing goes to stderr).

use std::fmt::Write as _;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub value: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub status: String,
    pub note: String,
}

impl Row {
    pub fn scalar(name: impl Into<String>, value: f64, status: impl Into<String>) -> Row {
        Row {
            name: name.into(),
            value: Some(value),
            lo: None,
            hi: None,
            status: status.into(),
            note: String::new(),
        }
    }

    pub fn interval(name: impl Into<String>, lo: f64, hi: f64, status: impl Into<String>) -> Row {
        Row {
            name: name.into(),
            value: Some(hi),
            lo: Some(lo),
            hi: Some(hi),
            status: status.into(),
            note: String::new(),
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Row {
        Row {
            name: name.into(),
            value: Some(if ok { 1.0 } else { 0.0 }),
            lo: None,
            hi: None,
            status: "exact".into(),
            note: if ok { "pass".into() } else { "fail".into() },
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Row {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub tol: f64,
    pub iters: usize,
    pub net_resolution: Option<f64>,
    pub rows: Vec<Row>,
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.12e}"),
        None => String::new(),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl RunReport {
    pub fn new(command: impl Into<String>, seed: u64, tol: f64, iters: usize) -> RunReport {
        RunReport {
            command: command.into(),
            seed,
            tol,
            iters,
            net_resolution: None,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format_version,{FORMAT_VERSION}");
        let _ = writeln!(out, "command,{}", csv_escape(&self.command));
        let _ = writeln!(out, "seed,{}", self.seed);
        let _ = writeln!(out, "tol,{:e}", self.tol);
        let _ = writeln!(out, "iters,{}", self.iters);
        let _ = writeln!(
            out,
            "net_resolution,{}",
            self.net_resolution
                .map(|r| format!("{r:.12e}"))
                .unwrap_or_else(|| "auto".into())
        );
        let _ = writeln!(out, "name,value,lo,hi,status,note");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_escape(&r.name),
                fmt_opt(r.value),
                fmt_opt(r.lo),
                fmt_opt(r.hi),
                csv_escape(&r.status),
                csv_escape(&r.note)
            );
        }
        out
    }
}
