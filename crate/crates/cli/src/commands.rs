//! Command implementations shared by the binary and the integration tests.
//! Each command returns its captured stdout, optional stderr, and an exit
//! code instead of terminating the process, so tests can call them directly.

use gorshift::cech_oracle::{verify_gorenstein, verify_gorenstein_at, CechError};
use gorshift::graded_rings::{coheight, height, krull_dimension, RingError};
use gorshift::ring_dsl::{format_ring, parse_prime, parse_ring, GradedRingExpr};
use gorshift::shift_calculus::{lgd_shift, pipeline_shift, rsop_shift, ShiftReport};
use serde_json::{json, Value};

use crate::exit_codes;
use crate::render::{self, Format};
use crate::table::{compute_row, golden_rows};

#[derive(Debug)]
pub struct CmdOutput {
    pub stdout: String,
    pub stderr: Option<String>,
    pub code: i32,
}

impl CmdOutput {
    fn ok(stdout: String) -> Self {
        CmdOutput { stdout, stderr: None, code: exit_codes::SUCCESS }
    }

    fn fail(code: i32, message: String) -> Self {
        CmdOutput { stdout: String::new(), stderr: Some(message), code }
    }
}

fn ring_error_code(e: &RingError) -> i32 {
    match e {
        // An internal inconsistency means two routes disagreed, not that the
        // input was malformed.
        RingError::Internal(_) => exit_codes::MISMATCH,
        _ => exit_codes::INPUT,
    }
}

fn cech_error_code(e: &CechError) -> i32 {
    match e {
        CechError::NonConfluent(_) | CechError::NotStabilized { .. } | CechError::TooLarge(_) => {
            exit_codes::BUDGET
        }
        _ => exit_codes::INPUT,
    }
}

macro_rules! try_ring {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return CmdOutput::fail(ring_error_code(&e), e.to_string()),
        }
    };
}

macro_rules! try_cech {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return CmdOutput::fail(cech_error_code(&e), e.to_string()),
        }
    };
}

fn parse_ring_arg(text: &str) -> Result<GradedRingExpr, CmdOutput> {
    parse_ring(text).map_err(|d| {
        CmdOutput::fail(
            exit_codes::INPUT,
            format!("cannot parse ring {text:?} at byte {}: {}", d.position, d.message),
        )
    })
}

fn render_object(value: &Value, format: Format) -> String {
    match format {
        Format::Json => render::to_pretty(value),
        Format::Markdown => render::object_markdown(value),
    }
}

// ---------------------------------------------------------------------------
// dim
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DimArgs {
    pub ring: String,
    pub prime: Option<String>,
    pub format: Format,
}

pub fn cmd_dim(args: &DimArgs) -> CmdOutput {
    let ring = match parse_ring_arg(&args.ring) {
        Ok(r) => r,
        Err(out) => return out,
    };
    let dim = try_ring!(krull_dimension(&ring));
    let value = match &args.prime {
        None => json!({ "ring": format_ring(&ring), "dim": dim }),
        Some(ptext) => {
            let p = match parse_prime(ptext, &ring) {
                Ok(p) => p,
                Err(d) => {
                    return CmdOutput::fail(
                        exit_codes::INPUT,
                        format!("cannot parse prime {ptext:?} at byte {}: {}", d.position, d.message),
                    )
                }
            };
            let ht = try_ring!(height(&ring, &p));
            let coht = try_ring!(coheight(&ring, &p));
            json!({
                "ring": format_ring(&ring),
                "prime": ptext,
                "dim": dim,
                "ht": ht,
                "coht": coht,
                "dimension_formula_holds": ht + coht == dim,
            })
        }
    };
    CmdOutput::ok(render_object(&value, args.format))
}

// ---------------------------------------------------------------------------
// shift
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ShiftArgs {
    pub ring: String,
    pub prime: Option<String>,
    pub lgd: bool,
    pub format: Format,
}

pub fn cmd_shift(args: &ShiftArgs) -> CmdOutput {
    let ring = match parse_ring_arg(&args.ring) {
        Ok(r) => r,
        Err(out) => return out,
    };
    let ring_text = format_ring(&ring);
    if let Some(ptext) = &args.prime {
        let p = match parse_prime(ptext, &ring) {
            Ok(p) => p,
            Err(d) => {
                return CmdOutput::fail(
                    exit_codes::INPUT,
                    format!("cannot parse prime {ptext:?} at byte {}: {}", d.position, d.message),
                )
            }
        };
        let nu = try_ring!(rsop_shift(&ring, &p));
        let value = if args.lgd {
            let ht = try_ring!(height(&ring, &p));
            json!({ "ring": ring_text, "prime": ptext, "nu": nu, "sigma": nu - i64::from(ht) })
        } else {
            json!({ "ring": ring_text, "prime": ptext, "nu": nu })
        };
        return CmdOutput::ok(render_object(&value, args.format));
    }
    let shift = try_ring!(pipeline_shift(&ring));
    let report = if args.lgd {
        try_ring!(lgd_shift(&shift, &ring))
    } else {
        let trace = shift.trace.clone();
        ShiftReport { ring: ring.clone(), shift, lgd: false, trace }
    };
    let value = render::report_json(&report, &ring_text);
    CmdOutput::ok(render_object(&value, args.format))
}

// ---------------------------------------------------------------------------
// table
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TableArgs {
    pub format: Format,
}

pub fn cmd_table(args: &TableArgs) -> CmdOutput {
    let rows = golden_rows();
    let mut derived = Vec::with_capacity(rows.len());
    for row in &rows {
        derived.push(match compute_row(row) {
            Ok(text) => text,
            Err(e) => format!("error: {e}"),
        });
    }
    let mismatches: Vec<String> = rows
        .iter()
        .zip(&derived)
        .filter(|(row, got)| row.golden != got.as_str())
        .map(|(row, got)| format!("{}: derived {:?}, expected {:?}", row.name, got, row.golden))
        .collect();

    let stdout = match args.format {
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .zip(&derived)
                .map(|(row, got)| {
                    json!({
                        "name": row.name,
                        "ring": row.ring,
                        "g": row.g,
                        "shift": got,
                        "rule": row.rule,
                    })
                })
                .collect();
            render::to_pretty(&Value::Array(items))
        }
        Format::Markdown => {
            let mut out = String::new();
            out.push_str("| Name | Coefficients | g | Shift | Rule |\n");
            out.push_str("| --- | --- | --- | --- | --- |\n");
            for (row, got) in rows.iter().zip(&derived) {
                out.push_str(&format!(
                    "| {} | `{}` | {} | {} | {} |\n",
                    row.name,
                    row.ring,
                    row.g.unwrap_or("-"),
                    got,
                    row.rule
                ));
            }
            out
        }
    };

    if mismatches.is_empty() {
        CmdOutput::ok(stdout)
    } else {
        CmdOutput {
            stdout,
            stderr: Some(format!("table mismatches:\n{}\n", mismatches.join("\n"))),
            code: exit_codes::MISMATCH,
        }
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct VerifyArgs {
    pub ring: String,
    pub nu: i64,
    pub window: Option<(i64, i64)>,
    pub truncation: Option<u32>,
    pub format: Format,
}

pub const DEFAULT_WINDOW: (i64, i64) = (-12, 12);

pub fn cmd_verify(args: &VerifyArgs) -> CmdOutput {
    let ring = match parse_ring_arg(&args.ring) {
        Ok(r) => r,
        Err(out) => return out,
    };
    let window = args.window.unwrap_or(DEFAULT_WINDOW);
    if window.0 > window.1 {
        return CmdOutput::fail(
            exit_codes::INPUT,
            format!("window {}..{} is empty", window.0, window.1),
        );
    }
    let cert = match args.truncation {
        Some(n) => try_cech!(verify_gorenstein_at(&ring, args.nu, window, n)),
        None => try_cech!(verify_gorenstein(&ring, args.nu, window)),
    };
    let stdout = render_object(&render::certificate_json(&cert), args.format);
    if cert.passed {
        CmdOutput::ok(stdout)
    } else {
        CmdOutput {
            stdout,
            stderr: Some("verification failed".to_owned()),
            code: exit_codes::MISMATCH,
        }
    }
}
