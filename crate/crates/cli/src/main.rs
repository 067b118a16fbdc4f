use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gorshift_cli::commands::{self, CmdOutput, DimArgs, ShiftArgs, TableArgs, VerifyArgs};
use gorshift_cli::config::{self, FileConfig};
use gorshift_cli::exit_codes;
use gorshift_cli::render::Format;

#[derive(Parser)]
#[command(
    name = "gorshift",
    version,
    about = "Exact Gorenstein and local-duality shift calculator for graded rings"
)]
struct Cli {
    /// Plain `key = value` file supplying defaults for any flag or argument;
    /// explicit flags win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<String>,

    /// Output format: json (default) or markdown.
    #[arg(long, global = true, value_name = "FORMAT")]
    format: Option<String>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Krull dimension of the homogeneous spectrum, with height/coheight
    /// data when a prime is supplied.
    Dim {
        /// Ring presentation, e.g. "Z_(p)[T:0]".
        ring: Option<String>,
        /// Homogeneous prime, e.g. "(pi*T-1)".
        #[arg(long)]
        prime: Option<String>,
    },
    /// Shift function of a ring: the structural one by default, the
    /// local-duality one with --lgd, or the value at one prime with --prime.
    Shift {
        /// Ring presentation, e.g. "Z[v:2]".
        ring: Option<String>,
        /// Homogeneous prime, e.g. "(p,x)".
        #[arg(long)]
        prime: Option<String>,
        /// Convert to the local-duality normalization.
        #[arg(long)]
        lgd: bool,
    },
    /// Recompute every reference-table row from scratch and diff it against
    /// the stored value; exits nonzero listing any offending rows.
    Table,
    /// Check a claimed shift value against the brute-force cohomology
    /// oracle.
    Verify {
        /// Ring presentation, e.g. "F_2[x:-2]/(x^4)".
        ring: Option<String>,
        /// Claimed shift value.
        #[arg(long, allow_negative_numbers = true)]
        nu: Option<i64>,
        /// Degree window "lo..hi" (default -12..12).
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        /// Fixed truncation exponent; omitted means search until ranks
        /// stabilize.
        #[arg(long)]
        truncation: Option<u32>,
    },
}

fn input_error(message: String) -> CmdOutput {
    CmdOutput { stdout: String::new(), stderr: Some(message), code: exit_codes::INPUT }
}

fn pick(flag: Option<String>, file: &FileConfig, key: &str) -> Option<String> {
    flag.or_else(|| file.get(key).map(str::to_owned))
}

fn require_ring(ring: Option<String>, file: &FileConfig) -> Result<String, CmdOutput> {
    pick(ring, file, "ring")
        .ok_or_else(|| input_error("no ring given (argument or `ring =` config entry)".to_owned()))
}

fn parse_window(text: &str) -> Result<(i64, i64), String> {
    let err = || format!("window {text:?} is not of the form lo..hi");
    let (lo, hi) = text.split_once("..").ok_or_else(err)?;
    let lo = lo.trim().parse::<i64>().map_err(|_| err())?;
    let hi = hi.trim().parse::<i64>().map_err(|_| err())?;
    Ok((lo, hi))
}

fn run(cli: Cli) -> CmdOutput {
    let file = match &cli.config {
        Some(path) => match config::load(path) {
            Ok(f) => f,
            Err(e) => return input_error(e),
        },
        None => FileConfig::default(),
    };

    let format_text = pick(cli.format, &file, "format").unwrap_or_else(|| "json".to_owned());
    let format = match Format::parse(&format_text) {
        Ok(f) => f,
        Err(e) => return input_error(e),
    };

    match cli.command {
        Cmd::Dim { ring, prime } => {
            let ring = match require_ring(ring, &file) {
                Ok(r) => r,
                Err(out) => return out,
            };
            let prime = pick(prime, &file, "prime");
            commands::cmd_dim(&DimArgs { ring, prime, format })
        }
        Cmd::Shift { ring, prime, lgd } => {
            let ring = match require_ring(ring, &file) {
                Ok(r) => r,
                Err(out) => return out,
            };
            let prime = pick(prime, &file, "prime");
            let lgd = lgd
                || matches!(file.get("lgd"), Some(v) if v.eq_ignore_ascii_case("true") || v == "1");
            commands::cmd_shift(&ShiftArgs { ring, prime, lgd, format })
        }
        Cmd::Table => commands::cmd_table(&TableArgs { format }),
        Cmd::Verify { ring, nu, window, truncation } => {
            let ring = match require_ring(ring, &file) {
                Ok(r) => r,
                Err(out) => return out,
            };
            let nu = match nu {
                Some(n) => n,
                None => match file.get("nu").map(str::parse::<i64>) {
                    Some(Ok(n)) => n,
                    Some(Err(_)) => {
                        return input_error("config entry `nu` is not an integer".to_owned())
                    }
                    None => {
                        return input_error(
                            "no claimed shift given (--nu or `nu =` config entry)".to_owned(),
                        )
                    }
                },
            };
            let window = match pick(window, &file, "window").as_deref().map(parse_window) {
                None => None,
                Some(Ok(w)) => Some(w),
                Some(Err(e)) => return input_error(e),
            };
            let truncation = match truncation {
                Some(n) => Some(n),
                None => match file.get("truncation").map(str::parse::<u32>) {
                    Some(Ok(n)) => Some(n),
                    Some(Err(_)) => {
                        return input_error(
                            "config entry `truncation` is not a nonnegative integer".to_owned(),
                        )
                    }
                    None => None,
                },
            };
            commands::cmd_verify(&VerifyArgs { ring, nu, window, truncation, format })
        }
    }
}

fn main() -> ExitCode {
    let out = run(Cli::parse());
    print!("{}", out.stdout);
    if let Some(err) = out.stderr {
        eprintln!("{}", err.trim_end());
    }
    ExitCode::from(out.code as u8)
}
